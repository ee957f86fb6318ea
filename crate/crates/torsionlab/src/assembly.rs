//! Evaluation of torsion invariants on finite-order elements of a torus.
//!
//! A compact connected group enters only through its maximal torus: a value
//! at a finite-order element `t` is computed by restricting the space to the
//! cyclic group generated by `t`, building an honest equivariant cell model
//! for that restriction, and evaluating the resulting class function at the
//! element realizing `t`.  The module also carries the orbit-cell sum (only
//! one-dimensional orbits contribute) and the Weyl-sum evaluation for the
//! odd-dimensional symmetric spaces with a nonvanishing invariant.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use itertools::Itertools;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::Zero;

use crate::chain::{torsion_with_cohomology, CohomologyMetric, GammaComplex};
use crate::cw::{
    build_circle, circle_de_rham_metric, cochain_complex, join_of_circles,
    EquivariantCellComplex, LocalSystem,
};
use crate::error::{Error, Result};
use crate::group::{hat_project, ClassFunction, FiniteGroup, Subgroup};
use crate::linalg::{frob, CMatrix, C64};
use crate::zeta::{psi_scalar, psi_trace, CircleOrbitData, Rotation, ZetaAccuracy};

/// A finite-order element of a torus `(R/Z)^r`, stored as exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TorusElement {
    coords: Vec<Ratio<i64>>,
}

fn mod_one(r: Ratio<i64>) -> Ratio<i64> {
    let f = r.floor();
    r - f
}

impl TorusElement {
    pub fn new(coords: &[(i64, i64)]) -> Result<Self> {
        let mut out = Vec::with_capacity(coords.len());
        for &(num, den) in coords {
            if den == 0 {
                return Err(Error::Contract("torus coordinate with zero denominator".into()));
            }
            out.push(mod_one(Ratio::new(num, den)));
        }
        Ok(TorusElement { coords: out })
    }

    pub fn identity(rank: usize) -> Self {
        TorusElement { coords: vec![Ratio::zero(); rank] }
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Ratio<i64>] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> Ratio<i64> {
        self.coords[i]
    }

    /// Order of the element: the least common multiple of the denominators.
    pub fn order(&self) -> usize {
        self.coords
            .iter()
            .fold(1i64, |acc, c| acc.lcm(c.denom()))
            .unsigned_abs() as usize
    }

    pub fn pow(&self, k: i64) -> TorusElement {
        TorusElement {
            coords: self.coords.iter().map(|c| mod_one(c * Ratio::from_integer(k))).collect(),
        }
    }

    /// Pairing with an integer character: `sum_i w_i x_i` reduced into `[0,1)`.
    pub fn pair(&self, weights: &[i64]) -> Result<Ratio<i64>> {
        if weights.len() != self.rank() {
            return Err(Error::Contract("character length does not match the torus rank".into()));
        }
        let mut acc = Ratio::zero();
        for (w, c) in weights.iter().zip(&self.coords) {
            acc += c * Ratio::from_integer(*w);
        }
        Ok(mod_one(acc))
    }

    fn memo_key(&self) -> Vec<(i64, i64)> {
        self.coords.iter().map(|c| (*c.numer(), *c.denom())).collect()
    }
}

/// A function on the finite-order elements of a torus, memoized by reduced
/// coordinates so that repeated evaluation is cheap and deterministic.
pub struct FGClassFunction {
    rank: usize,
    hat: bool,
    eval: Box<dyn Fn(&TorusElement) -> Result<C64> + Send + Sync>,
    memo: Mutex<HashMap<Vec<(i64, i64)>, C64>>,
}

impl FGClassFunction {
    pub fn new(
        rank: usize,
        hat: bool,
        eval: impl Fn(&TorusElement) -> Result<C64> + Send + Sync + 'static,
    ) -> Self {
        FGClassFunction { rank, hat, eval: Box::new(eval), memo: Mutex::new(HashMap::new()) }
    }

    pub fn zero(rank: usize) -> Self {
        FGClassFunction::new(rank, true, |_| Ok(C64::new(0.0, 0.0)))
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Whether values are representatives modulo pullback class functions.
    pub fn is_hat_representative(&self) -> bool {
        self.hat
    }

    pub fn value(&self, t: &TorusElement) -> Result<C64> {
        if t.rank() != self.rank {
            return Err(Error::Contract(format!(
                "element of rank {} evaluated on a rank-{} torus",
                t.rank(),
                self.rank
            )));
        }
        let key = t.memo_key();
        if let Some(v) = self.memo.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = (self.eval)(t)?;
        self.memo.lock().unwrap().insert(key, v);
        Ok(v)
    }
}

/// Built-in torus spaces shipping explicit cyclic-group cell models.
#[derive(Clone, Debug)]
pub enum TorusModel {
    /// A fixed point of a rank-`rank` torus.
    Point { rank: usize },
    /// The circle rotated by the rank-1 torus, with a diagonal flat system:
    /// component `j` has holonomy `exp(2 pi i a[j])`, and the torus acts on
    /// its sections through the character `a[j] + winding[j]` (the integer
    /// winding indexes the possible equivariant structures with the given
    /// holonomy).
    Circle { a: Vec<f64>, winding: Vec<i64> },
    /// The 3-sphere as the join of two circles, the rank-2 torus rotating
    /// the factors independently; constant sheaf.
    JoinOfCircles,
    /// The rank-2 torus acting on itself; constant sheaf.
    FreeTorus,
}

/// A cyclic-group cell model realizing the restriction of a torus space to
/// the group generated by a finite-order element.
pub struct RestrictedModel {
    pub complex: EquivariantCellComplex,
    pub system: LocalSystem,
    /// Index of the acting-group element realizing the torus element.
    pub element: usize,
}

fn unit_phase(x: f64) -> C64 {
    C64::new(0.0, 2.0 * PI * x).exp()
}

impl TorusModel {
    pub fn rank(&self) -> usize {
        match self {
            TorusModel::Point { rank } => *rank,
            TorusModel::Circle { .. } => 1,
            TorusModel::JoinOfCircles | TorusModel::FreeTorus => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        if let TorusModel::Circle { a, winding } = self {
            if a.is_empty() || a.len() != winding.len() {
                return Err(Error::Contract(
                    "circle model needs matching nonempty holonomy and winding lists".into(),
                ));
            }
            if a.iter().any(|x| !(0.0..1.0).contains(x)) {
                return Err(Error::Contract("holonomy exponents must lie in [0,1)".into()));
            }
        }
        Ok(())
    }

    /// Builds the cell model for the restriction to `<t>` embedded in the
    /// cyclic overgroup of order `mult * order(t)`.
    pub fn restricted_model(&self, t: &TorusElement, mult: usize) -> Result<RestrictedModel> {
        self.validate()?;
        if t.rank() != self.rank() {
            return Err(Error::Contract(format!(
                "element of rank {} on a rank-{} space",
                t.rank(),
                self.rank()
            )));
        }
        if mult == 0 {
            return Err(Error::Contract("overgroup multiplier must be positive".into()));
        }
        let q = t.order();
        let n = q * mult;
        match self {
            TorusModel::Point { .. } => {
                let group = FiniteGroup::cyclic(n)?;
                let perm = vec![vec![vec![0usize]]; n];
                let complex = EquivariantCellComplex::new(&group, vec![1], perm, vec![])?;
                let system = LocalSystem::trivial(&complex, 1);
                Ok(RestrictedModel { complex, system, element: mult % n })
            }
            TorusModel::Circle { a, winding } => {
                // subdivide into n arcs; the generator rotates by p arcs so
                // that its mult-th power realizes the rotation by p/q
                let p = (t.coord(0) * Ratio::from_integer(q as i64)).to_integer();
                let m = a.len();
                let u = CMatrix::from_fn(m, m, |i, j| {
                    if i == j { unit_phase(a[i]) } else { C64::new(0.0, 0.0) }
                });
                let gen_tau = p as f64 / n as f64;
                let lam = CMatrix::from_fn(m, m, |i, j| {
                    if i == j {
                        unit_phase((a[i] + winding[i] as f64) * gen_tau)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                let (complex, system) = build_circle(n, p as usize, &u, &lam)?;
                let order = complex.group().order();
                Ok(RestrictedModel { complex, system, element: mult % order })
            }
            TorusModel::JoinOfCircles => {
                let c1 = (t.coord(0) * Ratio::from_integer(q as i64)).to_integer() as usize;
                let c2 = (t.coord(1) * Ratio::from_integer(q as i64)).to_integer() as usize;
                // generator rotates the factors by (c1/n, c2/n)
                let (complex, system) = join_of_circles(n, c1, c2)?;
                Ok(RestrictedModel { complex, system, element: mult % n })
            }
            TorusModel::FreeTorus => {
                let c1 = (t.coord(0) * Ratio::from_integer(q as i64)).to_integer() as usize;
                let c2 = (t.coord(1) * Ratio::from_integer(q as i64)).to_integer() as usize;
                let (complex, system) = build_torus_grid(n, c1, c2)?;
                Ok(RestrictedModel { complex, system, element: mult % n })
            }
        }
    }

    /// Cohomology metric for the restricted model.  Circle and join models
    /// use subdivision-independent geometric pairings (pointwise values in
    /// degree zero, periods in top degree) so that values at elements of
    /// different orders are comparable; the rest use the standard harmonic
    /// metric, which only ever enters hat-projected quantities there.
    pub fn metric(&self, rm: &RestrictedModel, c: &GammaComplex) -> Result<CohomologyMetric> {
        match self {
            TorusModel::Circle { .. } => circle_de_rham_metric(&rm.complex, &rm.system, c),
            TorusModel::JoinOfCircles => join_de_rham_metric(c),
            _ => Ok(CohomologyMetric::standard(c)),
        }
    }

    /// The orbit-cell summary of the model, for the cell-sum formula.
    pub fn cell_spec(&self) -> Result<TorusCellSpec> {
        self.validate()?;
        let orbits: Vec<OrbitTerm> = match self {
            TorusModel::Point { .. } => vec![OrbitTerm::Isolated],
            TorusModel::Circle { a, winding } => {
                let (a, winding) = (a.clone(), winding.clone());
                vec![OrbitTerm::Circle {
                    disk_dim: 0,
                    data: Box::new(move |t: &TorusElement| {
                        let m = a.len();
                        let tau = t.coord(0);
                        let taur = *tau.numer() as f64 / *tau.denom() as f64;
                        let lam = CMatrix::from_fn(m, m, |i, j| {
                            if i == j {
                                unit_phase((a[i] + winding[i] as f64) * taur)
                            } else {
                                C64::new(0.0, 0.0)
                            }
                        });
                        let am = CMatrix::from_fn(m, m, |i, j| {
                            if i == j { C64::new(a[i], 0.0) } else { C64::new(0.0, 0.0) }
                        });
                        CircleOrbitData::new(
                            lam,
                            am,
                            Rotation::rational(*tau.numer(), *tau.denom())?,
                            1,
                            0,
                        )
                    }),
                }]
            }
            TorusModel::JoinOfCircles => {
                let core = |coord: usize| OrbitTerm::Circle {
                    disk_dim: 0,
                    data: Box::new(move |t: &TorusElement| {
                        let tau = t.coord(coord);
                        CircleOrbitData::new(
                            CMatrix::identity(1, 1),
                            CMatrix::zeros(1, 1),
                            Rotation::rational(*tau.numer(), *tau.denom())?,
                            1,
                            0,
                        )
                    }),
                };
                // two core circles plus the free two-torus part attached
                // along a one-dimensional disk factor
                vec![core(0), core(1), OrbitTerm::HighRank { orbit_dim: 2, disk_dim: 1 }]
            }
            TorusModel::FreeTorus => vec![OrbitTerm::HighRank { orbit_dim: 2, disk_dim: 0 }],
        };
        Ok(TorusCellSpec { rank: self.rank(), orbits })
    }
}

/// Geometric cohomology metric of the join-of-circles sphere: degree 0
/// pairs harmonic representatives by their value at a vertex, degree 3 by
/// their total period over the fundamental cycle.  Both rules are
/// independent of the subdivision, so torsion values at elements of
/// different orders differ from the analytic ones by one overall constant.
fn join_de_rham_metric(c: &GammaComplex) -> Result<CohomologyMetric> {
    let h0 = c.harmonic_basis(0);
    let values = h0.view((0, 0), (1, h0.ncols())).clone_owned();
    let gram0 = values.adjoint() * values;
    let h3 = c.harmonic_basis(3);
    let mut periods = CMatrix::zeros(1, h3.ncols());
    for r in 0..h3.nrows() {
        periods += h3.view((r, 0), (1, h3.ncols()));
    }
    let gram3 = periods.adjoint() * periods;
    CohomologyMetric::new(
        0,
        vec![gram0, CMatrix::zeros(0, 0), CMatrix::zeros(0, 0), gram3],
    )
}

/// The two-torus as a cyclic-group cell complex: an `n x n` grid of squares,
/// the generator translating by `(c1, c2)` grid steps.
fn build_torus_grid(n: usize, c1: usize, c2: usize) -> Result<(EquivariantCellComplex, LocalSystem)> {
    if n == 0 {
        return Err(Error::Contract("torus grid needs at least one cell per side".into()));
    }
    let v = |i: usize, j: usize| (i % n) * n + (j % n);
    let h = |i: usize, j: usize| (i % n) * n + (j % n);
    let w = |i: usize, j: usize| n * n + (i % n) * n + (j % n);
    let f = |i: usize, j: usize| (i % n) * n + (j % n);
    let counts = vec![n * n, 2 * n * n, n * n];

    let mut inc0 = Vec::new();
    let mut inc1 = Vec::new();
    for i in 0..n {
        for j in 0..n {
            inc0.push((h(i, j), v(i + 1, j), 1.0));
            inc0.push((h(i, j), v(i, j), -1.0));
            inc0.push((w(i, j), v(i, j + 1), 1.0));
            inc0.push((w(i, j), v(i, j), -1.0));
            inc1.push((f(i, j), h(i, j), 1.0));
            inc1.push((f(i, j), w(i + 1, j), 1.0));
            inc1.push((f(i, j), h(i, j + 1), -1.0));
            inc1.push((f(i, j), w(i, j), -1.0));
        }
    }

    let group = FiniteGroup::cyclic(n)?;
    let mut perm = Vec::with_capacity(n);
    for r in 0..n {
        let (s1, s2) = (r * c1, r * c2);
        let p0: Vec<usize> = (0..n * n).map(|c| v(c / n + s1, c % n + s2)).collect();
        let p1: Vec<usize> = (0..2 * n * n)
            .map(|c| {
                if c < n * n {
                    h(c / n + s1, c % n + s2)
                } else {
                    w((c - n * n) / n + s1, (c - n * n) % n + s2)
                }
            })
            .collect();
        let p2: Vec<usize> = (0..n * n).map(|c| f(c / n + s1, c % n + s2)).collect();
        perm.push(vec![p0, p1, p2]);
    }
    let x = EquivariantCellComplex::new(&group, counts, perm, vec![inc0, inc1])?;
    let f = LocalSystem::trivial(&x, 1);
    Ok((x, f))
}

/// Restricted torsion at `t`: builds the cell model for `<t>` inside the
/// cyclic group of order `mult * order(t)` and evaluates the torsion class
/// function at the element realizing `t`.  The value is independent of
/// `mult` (the evaluations form a section over the cyclic subgroups).
pub fn torsion_at(model: &TorusModel, t: &TorusElement, mult: usize) -> Result<C64> {
    let rm = model.restricted_model(t, mult)?;
    let c = cochain_complex(&rm.complex, &rm.system)?;
    let mu = model.metric(&rm, &c)?;
    let rho = torsion_with_cohomology(&c, &mu)?;
    Ok(rho.eval(rm.element))
}

/// The subgroup of elements acting as the identity on every cohomology
/// space of the complex; the hat representative is taken modulo class
/// functions pulled back from the quotient by this subgroup.
pub fn trivially_acting_subgroup(c: &GammaComplex) -> Result<Subgroup> {
    let group = c.group().clone();
    let harmonics: Vec<CMatrix> =
        (c.degree_min()..=c.degree_max()).map(|p| c.harmonic_basis(p)).collect();
    let mut members = Vec::new();
    'next: for g in 0..group.order() {
        for (off, h) in harmonics.iter().enumerate() {
            let k = h.ncols();
            if k == 0 {
                continue;
            }
            let p = c.degree_min() + off as i64;
            let induced = h.adjoint() * c.module(p).unwrap().rep.op(g) * h;
            if frob(&(&induced - CMatrix::identity(k, k))) > 1e-8 * (1.0 + k as f64) {
                continue 'next;
            }
        }
        members.push(g);
    }
    Subgroup::new(&group, members, None)
}

/// Representative of the torsion modulo pullbacks from the quotient by a
/// subgroup acting trivially on cohomology.
pub fn hat_value(rho: &ClassFunction, gamma0: &Subgroup) -> Result<ClassFunction> {
    hat_project(rho, gamma0)
}

/// Hat-projected restricted torsion at `t`, with the subgroup acting
/// trivially on cohomology determined from the model itself.
pub fn hat_torsion_at(model: &TorusModel, t: &TorusElement, mult: usize) -> Result<C64> {
    let rm = model.restricted_model(t, mult)?;
    let c = cochain_complex(&rm.complex, &rm.system)?;
    let mu = model.metric(&rm, &c)?;
    let rho = torsion_with_cohomology(&c, &mu)?;
    let gamma0 = trivially_acting_subgroup(&c)?;
    Ok(hat_value(&rho, &gamma0)?.eval(rm.element))
}

/// Memoized evaluator of the restricted torsion of a model.
pub fn restricted_torsion(model: TorusModel) -> FGClassFunction {
    let rank = model.rank();
    FGClassFunction::new(rank, false, move |t| torsion_at(&model, t, 1))
}

/// One orbit family in a torus cell decomposition.
pub enum OrbitTerm {
    /// A fixed point (zero-dimensional orbit).
    Isolated,
    /// An orbit of dimension other than one; contributes zero.
    HighRank { orbit_dim: usize, disk_dim: usize },
    /// A circle orbit attached along a `disk_dim`-dimensional disk; the
    /// closure produces the rotation, twist, and holonomy data at `t`.
    Circle {
        disk_dim: usize,
        data: Box<dyn Fn(&TorusElement) -> Result<CircleOrbitData> + Send + Sync>,
    },
}

/// Orbit summaries of a torus cell decomposition.
pub struct TorusCellSpec {
    pub rank: usize,
    pub orbits: Vec<OrbitTerm>,
}

impl TorusCellSpec {
    fn validate(&self) -> Result<()> {
        for orbit in &self.orbits {
            if let OrbitTerm::HighRank { orbit_dim, .. } = orbit {
                if *orbit_dim == 1 {
                    return Err(Error::Contract(
                        "one-dimensional orbits must carry circle data".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// The alternating orbit-cell sum at `t`: orbits of dimension other than
/// one contribute zero, circle orbits contribute the psi trace signed by
/// the parity of the total cell dimension.
pub fn hat_cell_sum(cells: &TorusCellSpec, t: &TorusElement, acc: &ZetaAccuracy) -> Result<C64> {
    cells.validate()?;
    if t.rank() != cells.rank {
        return Err(Error::Contract("element rank does not match the cell spec".into()));
    }
    let mut total = C64::new(0.0, 0.0);
    for orbit in &cells.orbits {
        if let OrbitTerm::Circle { disk_dim, data } = orbit {
            let mut d = data(t)?;
            // the sign is carried by the parity of the attached disk
            d.disk_parity += *disk_dim as i64;
            total += psi_trace(&d, acc)?;
        }
    }
    Ok(total)
}

/// Cell-sum values over the cyclic group generated by `t`, as a class
/// function ready for hat projection and comparison with a cell model.
pub fn cell_sum_class_function(
    cells: &TorusCellSpec,
    t: &TorusElement,
    acc: &ZetaAccuracy,
) -> Result<ClassFunction> {
    let n = t.order();
    let group = FiniteGroup::cyclic(n)?;
    let mut values = Vec::with_capacity(n);
    for r in 0..n {
        values.push(hat_cell_sum(cells, &t.pow(r as i64), acc)?);
    }
    Ok(ClassFunction::from_fn(&group, |g| values[g]))
}

/// The odd-dimensional symmetric spaces with a possibly nonzero invariant,
/// plus a catch-all for spaces failing the rank condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymmetricSpaceFamily {
    /// `SO(2m) / SO(2p-1) x SO(2m-2p+1)`, `m >= 2`, `1 <= p <= m`.
    SoEven { m: usize, p: usize },
    /// `SU(3) / SO(3)`.
    Su3So3,
    /// Any other odd-dimensional symmetric space, recorded by its ranks;
    /// the invariant vanishes identically unless `rank_g = rank_k + 1`.
    OtherOdd { rank_g: usize, rank_k: usize },
}

/// A Weyl-group element as a signed permutation of torus coordinates (the
/// sign list is all-positive for groups whose Weyl group is a plain
/// permutation group).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedPermutation {
    pub perm: Vec<usize>,
    pub signs: Vec<i8>,
}

/// Weyl data of a family: the elements of `W_G`, the order of `W_K`, and
/// for each element the integer character computing the rotation number of
/// the corresponding one-dimensional orbit.
pub struct WeylData {
    pub elements: Vec<SignedPermutation>,
    pub order_k: usize,
    /// `alpha[w]` pairs with a torus element to give the rotation number of
    /// the orbit moved to standard position by `elements[w]`.
    pub alpha: Vec<Vec<i64>>,
    /// Rank of the torus the data acts on.
    pub rank: usize,
    /// Whether elements permute homogeneous coordinates summing to zero
    /// (one more coordinate than the torus rank).
    zero_sum: bool,
}

impl WeylData {
    /// Applies a Weyl element to a torus element.
    pub fn apply(&self, w: usize, t: &TorusElement) -> Result<TorusElement> {
        if t.rank() != self.rank {
            return Err(Error::Contract("element rank does not match the Weyl data".into()));
        }
        let sp = &self.elements[w];
        if self.zero_sum {
            // homogeneous coordinates (x_0, ..., x_r) with sum zero
            let mut ext: Vec<Ratio<i64>> = t.coords().to_vec();
            let last = -ext.iter().sum::<Ratio<i64>>();
            ext.push(last);
            let coords: Vec<Ratio<i64>> =
                (0..self.rank).map(|i| mod_one(ext[sp.perm[i]])).collect();
            Ok(TorusElement { coords })
        } else {
            let coords: Vec<Ratio<i64>> = (0..self.rank)
                .map(|i| {
                    let x = t.coord(sp.perm[i]);
                    mod_one(if sp.signs[i] < 0 { -x } else { x })
                })
                .collect();
            Ok(TorusElement { coords })
        }
    }
}

/// Weyl-group data of a symmetric-space family.
pub fn weyl_group(family: &SymmetricSpaceFamily) -> Result<WeylData> {
    match family {
        SymmetricSpaceFamily::SoEven { m, p } => {
            let (m, p) = (*m, *p);
            if m < 2 || p == 0 || p > m {
                return Err(Error::Contract(format!(
                    "even orthogonal family needs m >= 2 and 1 <= p <= m, got m={m}, p={p}"
                )));
            }
            // signed permutations of m coordinates with an even number of
            // sign changes
            let mut elements = Vec::new();
            let mut alpha = Vec::new();
            for perm in (0..m).permutations(m) {
                for mask in 0..(1usize << m) {
                    if (mask.count_ones() as usize) % 2 != 0 {
                        continue;
                    }
                    let signs: Vec<i8> =
                        (0..m).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
                    // the rotation number reads off coordinate p-1 of t^w
                    let mut row = vec![0i64; m];
                    row[perm[p - 1]] = signs[p - 1] as i64;
                    alpha.push(row);
                    elements.push(SignedPermutation { perm: perm.clone(), signs });
                }
            }
            // W_K = W(B_{p-1}) x W(B_{m-p})
            let fact = |k: usize| (1..=k).product::<usize>();
            let order_k = (1usize << (p - 1)) * fact(p - 1) * (1usize << (m - p)) * fact(m - p);
            Ok(WeylData { elements, order_k, alpha, rank: m, zero_sum: false })
        }
        SymmetricSpaceFamily::Su3So3 => {
            // permutations of three homogeneous coordinates summing to zero;
            // the torus has rank 2 with third coordinate -x_0 - x_1
            let mut elements = Vec::new();
            let mut alpha = Vec::new();
            for perm in (0..3usize).permutations(3) {
                let row = match perm[2] {
                    0 => vec![-1, 0],
                    1 => vec![0, -1],
                    _ => vec![1, 1],
                };
                alpha.push(row);
                elements.push(SignedPermutation { perm, signs: vec![1, 1, 1] });
            }
            Ok(WeylData { elements, order_k: 2, alpha, rank: 2, zero_sum: true })
        }
        SymmetricSpaceFamily::OtherOdd { rank_g, rank_k } => {
            if *rank_g == rank_k + 1 {
                return Err(Error::UnsupportedSpace(
                    "rank-condition families outside the built-in list are not classified here"
                        .into(),
                ));
            }
            Ok(WeylData {
                elements: Vec::new(),
                order_k: 1,
                alpha: Vec::new(),
                rank: *rank_g,
                zero_sum: false,
            })
        }
    }
}

/// The rotation-number psi of the constant sheaf: zero at the trivial
/// rotation, otherwise the analytic value at holonomy zero.
pub fn psi_rotation(tau: Ratio<i64>, acc: &ZetaAccuracy) -> Result<f64> {
    let tau = mod_one(tau);
    if tau.is_zero() {
        return Ok(0.0);
    }
    let v = psi_scalar(
        C64::new(1.0, 0.0),
        0.0,
        *tau.numer() as f64 / *tau.denom() as f64,
        acc,
    )?;
    Ok(v.re)
}

/// Weyl-sum value of the symmetric-space torsion at `t`: the average over
/// `W_G` of psi at the rotation numbers, weighted by `1 / #W_K`; exactly
/// zero when the rank condition fails.
pub fn symmetric_space_torsion(
    family: &SymmetricSpaceFamily,
    t: &TorusElement,
    acc: &ZetaAccuracy,
) -> Result<f64> {
    let data = weyl_group(family)?;
    if let SymmetricSpaceFamily::OtherOdd { .. } = family {
        if t.rank() != data.rank {
            return Err(Error::Contract("element rank does not match the family".into()));
        }
        return Ok(0.0);
    }
    if t.rank() != data.rank {
        return Err(Error::Contract("element rank does not match the family".into()));
    }
    let mut sum = 0.0;
    for row in &data.alpha {
        sum += psi_rotation(t.pair(row)?, acc)?;
    }
    Ok(sum / data.order_k as f64)
}

/// Memoized symmetric-space evaluator.
pub fn symmetric_space_class_function(family: SymmetricSpaceFamily) -> Result<FGClassFunction> {
    let rank = weyl_group(&family)?.rank;
    let acc = ZetaAccuracy::from_env()?;
    Ok(FGClassFunction::new(rank, true, move |t| {
        symmetric_space_torsion(&family, t, &acc).map(|v| C64::new(v, 0.0))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::restrict_class_function;
    use num_traits::ToPrimitive;

    fn acc() -> ZetaAccuracy {
        ZetaAccuracy::new(1e-10).unwrap()
    }

    fn el(coords: &[(i64, i64)]) -> TorusElement {
        TorusElement::new(coords).unwrap()
    }

    #[test]
    fn torus_element_arithmetic() {
        let t = el(&[(1, 4), (7, 6)]);
        assert_eq!(t.order(), 12);
        assert_eq!(t.coord(1), Ratio::new(1, 6));
        assert_eq!(t.pow(3).coord(0), Ratio::new(3, 4));
        assert_eq!(t.pow(-1).coord(0), Ratio::new(3, 4));
        assert_eq!(t.pair(&[2, 6]).unwrap(), Ratio::new(3, 2) - Ratio::from_integer(1));
        assert_eq!(TorusElement::identity(2).order(), 1);
        assert!(TorusElement::new(&[(1, 0)]).is_err());
    }

    #[test]
    fn memoized_evaluator_is_deterministic() {
        let calls = std::sync::Arc::new(std::sync::atomic::AtomicUsize::new(0));
        let seen = calls.clone();
        let f = FGClassFunction::new(1, false, move |t| {
            seen.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            Ok(C64::new(t.coord(0).to_f64().unwrap(), 0.0))
        });
        let t = el(&[(2, 8)]);
        let a = f.value(&t).unwrap();
        let b = f.value(&el(&[(1, 4)])).unwrap();
        assert_eq!(a, b);
        assert_eq!(calls.load(std::sync::atomic::Ordering::SeqCst), 1);
        assert!(f.value(&el(&[(0, 1), (0, 1)])).is_err());
    }

    #[test]
    fn point_model_has_no_torsion() {
        let model = TorusModel::Point { rank: 2 };
        for t in [el(&[(1, 2), (0, 1)]), el(&[(1, 3), (2, 3)])] {
            assert!(torsion_at(&model, &t, 1).unwrap().norm() < 1e-12);
            assert!(hat_torsion_at(&model, &t, 2).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn circle_models_form_a_section_over_cyclic_subgroups() {
        for (a, w) in [(0.3, 0), (0.3, 1), (0.5, 0), (0.0, 1)] {
            let model = TorusModel::Circle { a: vec![a], winding: vec![w] };
            for t in [el(&[(1, 2)]), el(&[(1, 3)]), el(&[(3, 4)]), el(&[(0, 1)])] {
                let base = torsion_at(&model, &t, 1).unwrap();
                for mult in 2..=4usize {
                    let via = torsion_at(&model, &t, mult).unwrap();
                    assert!(
                        (via - base).norm() <= 1e-9,
                        "a={a} w={w} t={t:?} mult={mult}: {via} vs {base}"
                    );
                }
            }
        }
    }

    #[test]
    fn circle_restriction_matches_analytic_values() {
        // combinatorial torsion at t times the fixed ratio equals the
        // zeta-regularized value of the section action
        let acc = acc();
        for a in [0.0, 0.3, 0.5] {
            for w in [0i64, 1] {
                let model = TorusModel::Circle { a: vec![a], winding: vec![w] };
                for t in [el(&[(0, 1)]), el(&[(1, 2)]), el(&[(1, 3)]), el(&[(1, 4)]), el(&[(5, 6)])] {
                    let tau = t.coord(0).to_f64().unwrap();
                    let lam = unit_phase((a + w as f64) * tau);
                    let analytic = psi_scalar(lam, a, tau, &acc).unwrap();
                    let combinatorial = torsion_at(&model, &t, 1).unwrap();
                    let dev = (combinatorial * crate::ANALYTIC_OVER_COMBINATORIAL - analytic).norm();
                    assert!(dev <= 1e-7, "a={a} w={w} t={t:?}: deviation {dev:.3e}");
                }
            }
        }
    }

    #[test]
    fn metric_choice_only_shifts_by_pullbacks() {
        // Z_4 circle model with a Z_2-type fiber structure: the hat
        // representative must not depend on the cohomology metric
        let model = TorusModel::Circle { a: vec![0.0], winding: vec![1] };
        let t = el(&[(1, 4)]);
        let rm = model.restricted_model(&t, 1).unwrap();
        let c = cochain_complex(&rm.complex, &rm.system).unwrap();
        let gamma0 = trivially_acting_subgroup(&c).unwrap();
        let de_rham = torsion_with_cohomology(&c, &model.metric(&rm, &c).unwrap()).unwrap();
        let standard = torsion_with_cohomology(&c, &CohomologyMetric::standard(&c)).unwrap();
        let ha = hat_value(&de_rham, &gamma0).unwrap();
        let hb = hat_value(&standard, &gamma0).unwrap();
        assert!(ha.sub(&hb).max_abs() <= 1e-8);
        // the unprojected values do differ
        assert!(de_rham.sub(&standard).max_abs() > 1e-6);
    }

    #[test]
    fn cell_sum_matches_the_assembled_circle() {
        let acc = acc();
        for (a, w) in [(0.3, 0), (0.25, 1)] {
            let model = TorusModel::Circle { a: vec![a], winding: vec![w] };
            let spec = model.cell_spec().unwrap();
            for t in [el(&[(1, 4)]), el(&[(1, 6)])] {
                let rm = model.restricted_model(&t, 1).unwrap();
                let c = cochain_complex(&rm.complex, &rm.system).unwrap();
                let mu = model.metric(&rm, &c).unwrap();
                let rho2 = torsion_with_cohomology(&c, &mu)
                    .unwrap()
                    .scale(crate::ANALYTIC_OVER_COMBINATORIAL);
                let gamma0 = trivially_acting_subgroup(&c).unwrap();
                let lhs = hat_value(&rho2, &gamma0).unwrap();
                // psi-side values over the same cyclic group, hat-projected
                let q = t.order();
                let psi_cf = cell_sum_class_function(&spec, &t, &acc).unwrap();
                let group = psi_cf.group().clone();
                let full = Subgroup::full(&group).unwrap();
                let rhs = hat_value(&psi_cf, &full).unwrap();
                // compare on the cyclic subgroup generated by the element
                let sub = Subgroup::generated(lhs.group(), &[rm.element]).unwrap();
                assert_eq!(sub.order(), q);
                let lhs_sub = restrict_class_function(&lhs, &sub).unwrap();
                let dev = (0..q)
                    .map(|r| {
                        let g_lhs = sub.as_group().pow(1, r);
                        (lhs_sub.eval(g_lhs) - rhs.eval(group.pow(1, r))).norm()
                    })
                    .fold(0.0, f64::max);
                assert!(dev <= 1e-8, "a={a} w={w} t={t:?}: deviation {dev:.3e}");
            }
        }
    }

    #[test]
    fn cell_sum_matches_the_assembled_sphere() {
        let acc = acc();
        let model = TorusModel::JoinOfCircles;
        let spec = model.cell_spec().unwrap();
        for t in [el(&[(1, 2), (0, 1)]), el(&[(1, 3), (2, 3)]), el(&[(1, 4), (1, 2)])] {
            let rm = model.restricted_model(&t, 1).unwrap();
            let c = cochain_complex(&rm.complex, &rm.system).unwrap();
            let mu = model.metric(&rm, &c).unwrap();
            let rho2 = torsion_with_cohomology(&c, &mu)
                .unwrap()
                .scale(crate::ANALYTIC_OVER_COMBINATORIAL);
            let gamma0 = trivially_acting_subgroup(&c).unwrap();
            let lhs = hat_value(&rho2, &gamma0).unwrap();
            let psi_cf = cell_sum_class_function(&spec, &t, &acc).unwrap();
            let full = Subgroup::full(psi_cf.group()).unwrap();
            let rhs = hat_value(&psi_cf, &full).unwrap();
            let dev = lhs.sub(&rhs).max_abs();
            assert!(dev <= 1e-8, "t={t:?}: deviation {dev:.3e}");
        }
    }

    #[test]
    fn orbits_of_wrong_codimension_contribute_nothing() {
        let acc = acc();
        // the cell-sum side: isolated and high-rank orbits give exact zero
        let spec = TorusCellSpec {
            rank: 2,
            orbits: vec![OrbitTerm::Isolated, OrbitTerm::HighRank { orbit_dim: 2, disk_dim: 0 }],
        };
        let t = el(&[(1, 3), (1, 3)]);
        assert_eq!(hat_cell_sum(&spec, &t, &acc).unwrap(), C64::new(0.0, 0.0));

        // the assembled side: a fixed point and the free two-torus have
        // vanishing hat torsion
        for t in [el(&[(1, 2), (0, 1)]), el(&[(1, 3), (2, 3)]), el(&[(1, 4), (3, 4)])] {
            let point = hat_torsion_at(&TorusModel::Point { rank: 2 }, &t, 1).unwrap();
            assert!(point.norm() <= 1e-8);
            let torus = hat_torsion_at(&TorusModel::FreeTorus, &t, 1).unwrap();
            assert!(torus.norm() <= 1e-8, "t={t:?}: {torus}");
        }
    }

    #[test]
    fn malformed_cell_specs_are_rejected() {
        let spec = TorusCellSpec {
            rank: 1,
            orbits: vec![OrbitTerm::HighRank { orbit_dim: 1, disk_dim: 0 }],
        };
        assert!(hat_cell_sum(&spec, &el(&[(1, 2)]), &acc()).is_err());
        let spec = TorusCellSpec { rank: 2, orbits: vec![] };
        assert!(hat_cell_sum(&spec, &el(&[(1, 2)]), &acc()).is_err());
    }

    #[test]
    fn weyl_group_orders_match_enumeration() {
        for m in 2..=4usize {
            let data = weyl_group(&SymmetricSpaceFamily::SoEven { m, p: 1 }).unwrap();
            let fact: usize = (1..=m).product();
            assert_eq!(data.elements.len(), (1 << (m - 1)) * fact);
            assert_eq!(data.alpha.len(), data.elements.len());
        }
        assert_eq!(weyl_group(&SymmetricSpaceFamily::SoEven { m: 2, p: 1 }).unwrap().order_k, 2);
        assert_eq!(weyl_group(&SymmetricSpaceFamily::Su3So3).unwrap().elements.len(), 6);
        assert_eq!(weyl_group(&SymmetricSpaceFamily::Su3So3).unwrap().order_k, 2);
        assert!(weyl_group(&SymmetricSpaceFamily::SoEven { m: 1, p: 1 }).is_err());
        assert!(weyl_group(&SymmetricSpaceFamily::SoEven { m: 3, p: 4 }).is_err());
    }

    #[test]
    fn weyl_sum_is_invariant_under_the_weyl_group() {
        let acc = acc();
        for family in [
            SymmetricSpaceFamily::SoEven { m: 3, p: 2 },
            SymmetricSpaceFamily::Su3So3,
        ] {
            let data = weyl_group(&family).unwrap();
            let t = if data.rank == 3 {
                el(&[(1, 4), (1, 3), (1, 2)])
            } else {
                el(&[(1, 4), (1, 3)])
            };
            let base = symmetric_space_torsion(&family, &t, &acc).unwrap();
            for w in 0..data.elements.len() {
                let tw = data.apply(w, &t).unwrap();
                let v = symmetric_space_torsion(&family, &tw, &acc).unwrap();
                assert!((v - base).abs() <= 1e-9, "{family:?} w={w}: {v} vs {base}");
            }
        }
    }

    #[test]
    fn su3_at_the_identity_vanishes() {
        let v = symmetric_space_torsion(&SymmetricSpaceFamily::Su3So3, &TorusElement::identity(2), &acc())
            .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn rank_degenerate_families_vanish_exactly() {
        for (rg, rk) in [(3usize, 3usize), (4, 2), (2, 4)] {
            let family = SymmetricSpaceFamily::OtherOdd { rank_g: rg, rank_k: rk };
            let f = symmetric_space_class_function(family.clone()).unwrap();
            for t in [TorusElement::identity(rg), el(&vec![(1, 3); rg])] {
                assert_eq!(f.value(&t).unwrap(), C64::new(0.0, 0.0));
                assert_eq!(symmetric_space_torsion(&family, &t, &acc()).unwrap(), 0.0);
            }
        }
        assert!(matches!(
            weyl_group(&SymmetricSpaceFamily::OtherOdd { rank_g: 4, rank_k: 3 }),
            Err(Error::UnsupportedSpace(_))
        ));
    }

    #[test]
    fn sphere_weyl_formula_matches_the_cell_model_up_to_a_constant() {
        // SO(4)/SO(1)xSO(3) is the three-sphere; the Weyl sum at t must
        // agree with the direct join-of-circles computation up to one
        // global constant across all t
        let acc = acc();
        let family = SymmetricSpaceFamily::SoEven { m: 2, p: 1 };
        let model = TorusModel::JoinOfCircles;
        let mut diffs = Vec::new();
        for t in [
            el(&[(1, 2), (0, 1)]),
            el(&[(1, 3), (0, 1)]),
            el(&[(1, 4), (0, 1)]),
            el(&[(1, 3), (2, 3)]),
            el(&[(1, 4), (1, 2)]),
        ] {
            let weyl = symmetric_space_torsion(&family, &t, &acc).unwrap();
            let direct = torsion_at(&model, &t, 1).unwrap();
            let direct = direct * crate::ANALYTIC_OVER_COMBINATORIAL;
            assert!(direct.im.abs() < 1e-9);
            diffs.push(weyl - direct.re);
        }
        let spread = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - diffs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread <= 1e-6, "diffs {diffs:?}");
    }

    #[test]
    fn sphere_restriction_is_a_section() {
        let model = TorusModel::JoinOfCircles;
        for t in [el(&[(1, 2), (0, 1)]), el(&[(1, 3), (1, 3)])] {
            let base = torsion_at(&model, &t, 1).unwrap();
            let via = torsion_at(&model, &t, 2).unwrap();
            assert!((via - base).norm() <= 1e-9);
        }
    }
}
