//! Seeded random generators for equivariant test data.
//!
//! Everything is deterministic in the seed. Equivariance is obtained by
//! Reynolds averaging, invertibility by keeping the random part a small
//! perturbation of the identity.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::chain::{CohomologyMetric, GammaComplex, GammaModule};
use crate::group::{random_unitary_rep, FiniteGroup, UnitaryRep};
use crate::linalg::{self, C64, CMatrix};
use crate::{Error, Result};

pub fn random_matrix(rng: &mut StdRng, n: usize, m: usize) -> CMatrix {
    CMatrix::from_fn(n, m, |_, _| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    })
}

/// Reynolds average: the equivariant part of `m: V -> W`.
pub fn reynolds(v: &UnitaryRep, w: &UnitaryRep, m: &CMatrix) -> CMatrix {
    let group = v.group();
    let n = group.order() as f64;
    let mut acc = CMatrix::zeros(m.nrows(), m.ncols());
    for g in 0..group.order() {
        acc += w.op(group.inv(g)) * m * v.op(g);
    }
    acc.scale(1.0 / n)
}

/// A random equivariant map `V -> W` of operator norm about 1 (zero when no
/// nonzero equivariant map exists).
pub fn random_equivariant_map(v: &UnitaryRep, w: &UnitaryRep, rng: &mut StdRng) -> CMatrix {
    let m = reynolds(v, w, &random_matrix(rng, w.dim(), v.dim()));
    let norm = linalg::opnorm(&m);
    if norm < 1e-12 {
        m
    } else {
        m.scale(1.0 / norm)
    }
}

/// A random invertible equivariant map `V -> V`, a perturbation of a random
/// positive scalar.
pub fn random_invertible_equivariant(rep: &UnitaryRep, rng: &mut StdRng) -> CMatrix {
    let scalar = 0.5 + rng.gen::<f64>() * 1.5;
    let mut m = CMatrix::identity(rep.dim(), rep.dim()).scale(scalar);
    m += random_equivariant_map(rep, rep, rng).scale(0.35 * scalar);
    m
}

/// A random equivariant unitary on `V` (polar part of a random invertible
/// equivariant map).
pub fn random_equivariant_unitary(rep: &UnitaryRep, rng: &mut StdRng) -> CMatrix {
    let m = random_invertible_equivariant(rep, rng);
    let p_inv = linalg::herm_inv_sqrt(&(m.adjoint() * &m));
    &m * p_inv
}

/// A random acyclic complex over `group` starting at `degree_min`.
///
/// Built as a direct sum of shifted two-term complexes `V -> V` with random
/// invertible equivariant differentials, then mixed by degreewise random
/// equivariant unitaries. `piece_dims[i]` is the dimension of the piece
/// occupying degrees `degree_min + i, degree_min + i + 1`.
pub fn random_acyclic_complex(
    group: &FiniteGroup,
    degree_min: i64,
    piece_dims: &[usize],
    seed: u64,
) -> Result<GammaComplex> {
    if piece_dims.is_empty() {
        return Err(Error::Contract("need at least one piece".into()));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut total: Option<GammaComplex> = None;
    for (i, &dim) in piece_dims.iter().enumerate() {
        if dim == 0 {
            continue;
        }
        let rep = random_unitary_rep(group, dim, rng.gen())?;
        let f = random_invertible_equivariant(&rep, &mut rng);
        let piece = GammaComplex::new(
            group,
            degree_min + i as i64,
            vec![GammaModule::new(rep.clone()), GammaModule::new(rep)],
            vec![f],
        )?;
        total = Some(match total {
            None => piece,
            Some(t) => t.direct_sum(&piece)?,
        });
    }
    let total = total.ok_or_else(|| Error::Contract("all pieces were zero".into()))?;
    let units: Vec<CMatrix> = (total.degree_min()..=total.degree_max())
        .map(|p| {
            let rep = &total.module(p).unwrap().rep;
            random_equivariant_unitary(rep, &mut rng)
        })
        .collect();
    total.conjugate_by(&units)
}

/// A random complex with prescribed nonzero cohomology: the direct sum of a
/// random acyclic complex and zero-differential modules of the dimensions in
/// `harmonic_dims` (one per degree starting at `degree_min`).
pub fn random_complex_with_cohomology(
    group: &FiniteGroup,
    degree_min: i64,
    piece_dims: &[usize],
    harmonic_dims: &[usize],
    seed: u64,
) -> Result<GammaComplex> {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let acyclic = random_acyclic_complex(group, degree_min, piece_dims, seed)?;
    let mut total = acyclic;
    for (i, &dim) in harmonic_dims.iter().enumerate() {
        if dim == 0 {
            continue;
        }
        let rep = random_unitary_rep(group, dim, rng.gen())?;
        let piece = GammaComplex::new(
            group,
            degree_min + i as i64,
            vec![GammaModule::new(rep)],
            vec![],
        )?;
        total = total.direct_sum(&piece)?;
    }
    Ok(total)
}

/// A random invariant positive-definite metric on the cohomology of `c`.
pub fn random_invariant_metric(c: &GammaComplex, seed: u64) -> Result<CohomologyMetric> {
    let mut rng = StdRng::seed_from_u64(seed);
    let group = c.group().clone();
    let mut grams = Vec::new();
    for p in c.degree_min()..=c.degree_max() {
        let h = c.harmonic_basis(p);
        let k = h.ncols();
        if k == 0 {
            grams.push(CMatrix::identity(0, 0));
            continue;
        }
        let ops: Vec<CMatrix> = (0..group.order())
            .map(|g| h.adjoint() * c.module(p).unwrap().rep.op(g) * &h)
            .collect();
        let induced = UnitaryRep::new(&group, ops)?;
        let b = random_equivariant_map(&induced, &induced, &mut rng);
        let gram = b.adjoint() * &b + CMatrix::identity(k, k).scale(0.2 + rng.gen::<f64>());
        grams.push(gram);
    }
    CohomologyMetric::new(c.degree_min(), grams)
}

/// A random chain map `a -> b`: a null-homotopic part plus random
/// equivariant maps between the harmonic spaces (which act nontrivially on
/// cohomology whenever both sides have any).
pub fn random_chain_map(
    a: &GammaComplex,
    b: &GammaComplex,
    rng: &mut StdRng,
) -> Result<crate::chain::ChainMap> {
    let lo = a.degree_min().min(b.degree_min());
    let hi = a.degree_max().max(b.degree_max());
    let rep = |c: &GammaComplex, p: i64| {
        c.module(p).map(|m| m.rep.clone()).unwrap_or_else(|| {
            UnitaryRep::trivial(c.group(), 0)
        })
    };
    // homotopy h_p: a^p -> b^{p-1}
    let mut h = Vec::new();
    for p in lo..=hi + 1 {
        h.push(reynolds(
            &rep(a, p),
            &rep(b, p - 1),
            &random_matrix(rng, b.dim(p - 1), a.dim(p)),
        ));
    }
    let mut comps = Vec::new();
    for p in lo..=hi {
        let i = (p - lo) as usize;
        let mut f = b.diff_matrix(p - 1) * &h[i] + &h[i + 1] * a.diff_matrix(p);
        let ha = a.harmonic_basis(p);
        let hb = b.harmonic_basis(p);
        if ha.ncols() > 0 && hb.ncols() > 0 {
            let ia = induced_harmonic_rep(a, p)?;
            let ib = induced_harmonic_rep(b, p)?;
            let r = random_equivariant_map(&ia, &ib, rng);
            f += hb * r * ha.adjoint();
        }
        comps.push((p, f));
    }
    crate::chain::ChainMap::new(a.clone(), b.clone(), comps)
}

fn induced_harmonic_rep(c: &GammaComplex, p: i64) -> Result<UnitaryRep> {
    let h = c.harmonic_basis(p);
    let group = c.group().clone();
    let ops: Vec<CMatrix> = (0..group.order())
        .map(|g| h.adjoint() * c.module(p).unwrap().rep.op(g) * &h)
        .collect();
    UnitaryRep::new(&group, ops)
}

/// A random filtered complex of the given depth: an iterated mapping cone
/// whose successive targets become the filtration levels.
pub fn random_filtered_complex(
    group: &FiniteGroup,
    depth: usize,
    seed: u64,
) -> Result<crate::spectral::FilteredComplex> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut total = random_complex_with_cohomology(group, 0, &[1], &[1, 1], rng.gen())?;
    // levels[j][deg index relative to total.degree_min()]
    let mut levels: Vec<Vec<CMatrix>> = Vec::new();
    for _ in 1..depth {
        let a = random_complex_with_cohomology(group, total.degree_min(), &[1], &[1], rng.gen())?;
        let f = random_chain_map(&a, &total, &mut rng)?;
        let old = total.clone();
        let cone = crate::chain::cone(&f)?;
        // cone degree n = a^n + old^{n-1}; the old complex embeds shifted
        let embed = |s: &CMatrix, n: i64| -> CMatrix {
            let rows = a.dim(n) + old.dim(n - 1);
            let mut m = CMatrix::zeros(rows, s.ncols());
            if s.nrows() > 0 && s.ncols() > 0 {
                m.view_mut((a.dim(n), 0), (s.nrows(), s.ncols())).copy_from(s);
            }
            m
        };
        let mut new_levels = Vec::new();
        let full: Vec<CMatrix> = (cone.degree_min()..=cone.degree_max())
            .map(|n| embed(&CMatrix::identity(old.dim(n - 1), old.dim(n - 1)), n))
            .collect();
        new_levels.push(full);
        for lvl in &levels {
            let shifted: Vec<CMatrix> = (cone.degree_min()..=cone.degree_max())
                .map(|n| {
                    let idx = n - 1 - old.degree_min();
                    if idx < 0 || idx >= lvl.len() as i64 {
                        CMatrix::zeros(a.dim(n) + old.dim(n - 1), 0)
                    } else {
                        embed(&lvl[idx as usize], n)
                    }
                })
                .collect();
            new_levels.push(shifted);
        }
        levels = new_levels;
        total = cone;
    }
    crate::spectral::FilteredComplex::new(total, levels)
}
