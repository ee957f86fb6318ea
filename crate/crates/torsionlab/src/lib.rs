//! Torsion invariants of finite equivariant chain data.
//!
//! The crate computes equivariant Reidemeister torsion of finite cochain
//! complexes of unitary modules over a finite group, the zeta-regularized
//! analytic torsion of flat circle bundles, and cross-validates the two.
//! It also implements the spectral-sequence decomposition of the torsion of
//! a filtered complex and the Weyl-group evaluation for the odd-dimensional
//! symmetric spaces that carry a nonzero invariant.
//!
//! Module map:
//! - [`group`]: finite groups, conjugacy classes, character tables, class
//!   functions and isotypic projectors;
//! - [`chain`]: torsion algebra on cochain complexes of unitary modules
//!   (chain contractions, mapping cones, cohomology-framed torsion);
//! - [`cw`]: equivariant cell complexes with unitary local systems and their
//!   cochain complexes;
//! - [`spectral`]: filtered complexes and the three-term torsion
//!   decomposition along the induced spectral sequence;
//! - [`zeta`]: the function `psi(lambda, a, tau)` behind analytic torsion of
//!   circles, Hurwitz special values, and orbit sums;
//! - [`assembly`]: evaluation on finite-order torus elements by restriction
//!   to cyclic groups, cell sums, and the symmetric-space Weyl formula.

pub mod assembly;
pub mod chain;
pub mod cw;
pub mod error;
pub mod group;
pub mod linalg;
pub mod random;
pub mod schema;
pub mod selftest;
pub mod spectral;
pub mod zeta;

pub use error::{Error, Result};

/// Default algebraic tolerance used by structural checks.
pub const EPS_ALG: f64 = 1e-9;

/// Relative cutoff below which a singular value counts as zero.
pub const EPS_SING: f64 = 1e-12;

/// Ratio between analytic and combinatorial torsion on circles.
///
/// The combinatorial torsion of the one-cell circle with holonomy
/// `exp(2 pi i a)` is `log(2 sin pi a)` while the zeta-regularized value is
/// `2 log(2 sin pi a)`; the constant is fixed once here and used by every
/// cross-pipeline comparison.
pub const ANALYTIC_OVER_COMBINATORIAL: f64 = 2.0;
