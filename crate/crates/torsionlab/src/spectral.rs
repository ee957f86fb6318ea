//! Filtered complexes and the spectral-sequence decomposition of torsion.
//!
//! A filtration is stored as nested invariant subspaces per degree.  All
//! subquotients are modeled on orthogonal complements: `F_p / F_q` is the
//! complement of `F_q` inside `F_p` with the projected differential, and a
//! cohomology class is identified with its harmonic representative.  Chosen
//! metrics on the graded cohomologies and on the total cohomology enter by
//! reframing those coordinates with the square root of the gram matrix, so
//! every page object lives in an honest Hilbert space and inherits
//! subquotient structures by plain orthogonal projection.

use std::collections::HashMap;

use crate::chain::{
    bracket_torsion, torsion_with_cohomology, CohomologyMetric, GammaComplex, GammaModule,
};
use crate::error::{Error, Result};
use crate::group::{ClassFunction, UnitaryRep};
use crate::linalg::{
    colspace_onb, complement_within, frob, herm_inv_sqrt, herm_sqrt, lstsq, CMatrix,
};
use crate::EPS_ALG;

const RANK_TOL: f64 = 1e-8;

/// A complex with a decreasing filtration by invariant subcomplexes
/// `F_0 = C ⊇ F_1 ⊇ ... ⊇ F_{s-1} ⊇ F_s = 0`.
#[derive(Debug, Clone)]
pub struct FilteredComplex {
    complex: GammaComplex,
    // bases[p][degree index]: orthonormal basis of F_p; p = 0 is the full
    // space and p = s the zero space
    bases: Vec<Vec<CMatrix>>,
}

impl FilteredComplex {
    /// Build from spanning sets of the proper levels `F_1, ..., F_{s-1}`
    /// (outermost first); `levels[j][d]` spans `F_{j+1}` in the `d`-th
    /// degree, counting from `degree_min`.
    pub fn new(complex: GammaComplex, levels: Vec<Vec<CMatrix>>) -> Result<Self> {
        let degs: Vec<i64> = (complex.degree_min()..=complex.degree_max()).collect();
        let mut bases = Vec::with_capacity(levels.len() + 2);
        bases.push(degs.iter().map(|&n| CMatrix::identity(complex.dim(n), complex.dim(n))).collect());
        for (j, lvl) in levels.iter().enumerate() {
            if lvl.len() != degs.len() {
                return Err(Error::Contract(format!(
                    "filtration level {j} must provide one basis per degree"
                )));
            }
            let onb: Vec<CMatrix> = degs
                .iter()
                .zip(lvl)
                .map(|(&n, span)| {
                    if span.nrows() != complex.dim(n) {
                        return Err(Error::Contract(format!(
                            "filtration level {j} has wrong ambient dimension in degree {n}"
                        )));
                    }
                    Ok(colspace_onb(span, RANK_TOL))
                })
                .collect::<Result<_>>()?;
            bases.push(onb);
        }
        bases.push(degs.iter().map(|&n| CMatrix::zeros(complex.dim(n), 0)).collect());

        // nesting, invariance, and closure under the differential
        for p in 0..bases.len() - 1 {
            for (di, &n) in degs.iter().enumerate() {
                let b = &bases[p][di];
                let proj = b * b.adjoint();
                let inner = &bases[p + 1][di];
                if inner.ncols() > 0 && frob(&(inner - &proj * inner)) > EPS_ALG {
                    return Err(Error::Contract(format!(
                        "filtration level {} is not contained in level {} at degree {n}",
                        p + 1,
                        p
                    )));
                }
                if b.ncols() == 0 {
                    continue;
                }
                for g in 0..complex.group().order() {
                    let moved = complex.module(n).unwrap().rep.op(g) * b;
                    if frob(&(&moved - &proj * &moved)) > EPS_ALG {
                        return Err(Error::Contract(format!(
                            "filtration level {p} is not invariant at degree {n}"
                        )));
                    }
                }
                let db = complex.diff_matrix(n) * b;
                if db.nrows() > 0 {
                    let bh = bases[p].get(di + 1);
                    let keep = match bh {
                        Some(bn) => frob(&(&db - bn * (bn.adjoint() * &db))),
                        None => frob(&db),
                    };
                    if keep > EPS_ALG * (1.0 + frob(&db)) {
                        return Err(Error::Contract(format!(
                            "filtration is not preserved by the differential at level {p}, degree {n}"
                        )));
                    }
                }
            }
        }
        Ok(FilteredComplex { complex, bases })
    }

    /// The one-step filtration `F_0 = C ⊇ 0`.
    pub fn trivial(complex: GammaComplex) -> FilteredComplex {
        FilteredComplex::new(complex, Vec::new()).expect("trivial filtration is always valid")
    }

    /// The skeletal filtration: `F_p` consists of the degrees `>= p`.
    pub fn skeletal(complex: GammaComplex) -> FilteredComplex {
        let dmin = complex.degree_min();
        let dmax = complex.degree_max();
        let levels: Vec<Vec<CMatrix>> = (dmin + 1..=dmax)
            .map(|p| {
                (dmin..=dmax)
                    .map(|n| {
                        if n >= p {
                            CMatrix::identity(complex.dim(n), complex.dim(n))
                        } else {
                            CMatrix::zeros(complex.dim(n), 0)
                        }
                    })
                    .collect()
            })
            .collect();
        FilteredComplex::new(complex, levels).expect("skeletal filtration is always valid")
    }

    pub fn complex(&self) -> &GammaComplex {
        &self.complex
    }

    /// Number of graded pieces `F_p / F_{p+1}`, `p = 0..pieces()`.
    pub fn pieces(&self) -> usize {
        self.bases.len() - 1
    }

    fn di(&self, n: i64) -> Option<usize> {
        if n < self.complex.degree_min() || n > self.complex.degree_max() {
            None
        } else {
            Some((n - self.complex.degree_min()) as usize)
        }
    }

    /// Orthonormal basis of filtration level `p` in degree `n`.
    pub fn basis(&self, p: usize, n: i64) -> CMatrix {
        let p = p.min(self.bases.len() - 1);
        match self.di(n) {
            Some(d) => self.bases[p][d].clone(),
            None => CMatrix::zeros(0, 0),
        }
    }

    /// Orthogonal-complement model of `F_lo / F_hi` as a complex, together
    /// with the ambient bases per degree.
    fn model(&self, lo: usize, hi: usize) -> Result<(Vec<CMatrix>, GammaComplex)> {
        let c = &self.complex;
        let mut bases = Vec::new();
        let mut spaces = Vec::new();
        let mut diffs = Vec::new();
        for n in c.degree_min()..=c.degree_max() {
            let outer = self.basis(lo, n);
            let inner = self.basis(hi.min(self.bases.len() - 1), n);
            let w = complement_within(&outer, &inner, RANK_TOL);
            let ops: Vec<CMatrix> = (0..c.group().order())
                .map(|g| w.adjoint() * c.module(n).unwrap().rep.op(g) * &w)
                .collect();
            spaces.push(GammaModule::new(UnitaryRep::new(c.group(), ops)?));
            if n > c.degree_min() {
                let prev: &CMatrix = bases.last().unwrap();
                diffs.push(w.adjoint() * c.diff_matrix(n - 1) * prev);
            }
            bases.push(w);
        }
        Ok((bases, GammaComplex::new(c.group(), c.degree_min(), spaces, diffs)?))
    }

    /// The complex modeling the graded piece `F_p / F_{p+1}`.
    pub fn graded_piece(&self, p: usize) -> Result<GammaComplex> {
        Ok(self.model(p, p + 1)?.1)
    }
}

/// The three contributions of the torsion decomposition, and their combined
/// total `cell_term + ss_term - psi_term`.
#[derive(Debug, Clone)]
pub struct TorsionDecomposition {
    pub cell_term: ClassFunction,
    pub ss_term: ClassFunction,
    pub psi_term: ClassFunction,
    pub total: ClassFunction,
}

struct Model {
    bases: Vec<CMatrix>,
    complex: GammaComplex,
    harm: Vec<CMatrix>,
}

struct Slot {
    // orthonormal basis of the page model inside the metricized graded
    // cohomology space, the cycle space modulo the boundary space
    e: CMatrix,
}

struct Engine<'a> {
    fc: &'a FilteredComplex,
    graded: &'a [CohomologyMetric],
    models: HashMap<(usize, usize), Model>,
    // per (p, n): gram^{1/2}, gram^{-1/2}, metricized cohomology action
    frames: HashMap<(usize, i64), (CMatrix, CMatrix, Vec<CMatrix>)>,
    slots: HashMap<(usize, usize, i64), Slot>,
}

impl<'a> Engine<'a> {
    fn model(&mut self, lo: usize, hi: usize) -> Result<&Model> {
        let s = self.fc.pieces();
        let hi = hi.min(s);
        if !self.models.contains_key(&(lo, hi)) {
            let (bases, complex) = self.fc.model(lo, hi)?;
            let harm = (complex.degree_min()..=complex.degree_max())
                .map(|n| complex.harmonic_basis(n))
                .collect();
            self.models.insert((lo, hi), Model { bases, complex, harm });
        }
        Ok(&self.models[&(lo, hi)])
    }

    fn di(&self, n: i64) -> Option<usize> {
        self.fc.di(n)
    }

    /// Metric frame of the graded cohomology `H^n(F_p/F_{p+1})`.
    fn frame(&mut self, p: usize, n: i64) -> Result<(CMatrix, CMatrix, Vec<CMatrix>)> {
        if let Some(f) = self.frames.get(&(p, n)) {
            return Ok(f.clone());
        }
        let group = self.fc.complex.group().clone();
        let Some(di) = self.di(n) else {
            let out = (CMatrix::zeros(0, 0), CMatrix::zeros(0, 0), vec![CMatrix::zeros(0, 0); group.order()]);
            self.frames.insert((p, n), out.clone());
            return Ok(out);
        };
        let m = self.model(p, p + 1)?;
        let h = m.harm[di].clone();
        let hrep: Vec<CMatrix> = (0..group.order())
            .map(|g| h.adjoint() * m.complex.module(n).unwrap().rep.op(g) * &h)
            .collect();
        let gram = self
            .graded
            .get(p)
            .and_then(|mu| mu.gram(n))
            .ok_or_else(|| Error::Contract(format!("missing graded metric for piece {p}, degree {n}")))?
            .clone();
        if gram.nrows() != h.ncols() {
            return Err(Error::Contract(format!(
                "graded metric for piece {p} has wrong size in degree {n}"
            )));
        }
        let ghalf = herm_sqrt(&gram);
        let ginv = herm_inv_sqrt(&gram);
        let k = h.ncols();
        let ops: Vec<CMatrix> = hrep.iter().map(|r| &ghalf * r * &ginv).collect();
        for op in &ops {
            if frob(&(op.adjoint() * op - CMatrix::identity(k, k))) > 1e-7 * (1.0 + k as f64) {
                return Err(Error::Contract(format!(
                    "graded metric for piece {p} is not invariant in degree {n}"
                )));
            }
        }
        let out = (ghalf, ginv, ops);
        self.frames.insert((p, n), out.clone());
        Ok(out)
    }

    /// Matrix of `H^n(F_p/F_{p+hi_off}) -> H^n(F_p/F_{p+1})` in metricized
    /// target coordinates; its column space is `Z_r`.
    fn zmat(&mut self, p: usize, r: usize, n: i64) -> Result<CMatrix> {
        let (ghalf, _, _) = self.frame(p, n)?;
        let Some(di) = self.di(n) else {
            return Ok(CMatrix::zeros(0, 0));
        };
        let (src_b, src_h) = {
            let m = self.model(p, p + r)?;
            (m.bases[di].clone(), m.harm[di].clone())
        };
        let (tgt_b, tgt_h) = {
            let m = self.model(p, p + 1)?;
            (m.bases[di].clone(), m.harm[di].clone())
        };
        Ok(&ghalf * (tgt_h.adjoint() * (tgt_b.adjoint() * src_b) * src_h))
    }

    /// Matrix of the connecting map
    /// `H^{n-1}(F_{p-r+1}/F_p) -> H^n(F_p/F_{p+1})`, metricized; its column
    /// space is `B_r`.
    fn bmat(&mut self, p: usize, r: usize, n: i64) -> Result<CMatrix> {
        let (ghalf, _, _) = self.frame(p, n)?;
        let lo = p.saturating_sub(r - 1);
        let (Some(di), Some(dprev)) = (self.di(n), self.di(n - 1)) else {
            return Ok(CMatrix::zeros(ghalf.nrows(), 0));
        };
        if lo == p {
            return Ok(CMatrix::zeros(ghalf.nrows(), 0));
        }
        let (src_b, src_h) = {
            let m = self.model(lo, p)?;
            (m.bases[dprev].clone(), m.harm[dprev].clone())
        };
        let (tgt_b, tgt_h) = {
            let m = self.model(p, p + 1)?;
            (m.bases[di].clone(), m.harm[di].clone())
        };
        let d = self.fc.complex.diff_matrix(n - 1);
        Ok(&ghalf * (tgt_h.adjoint() * (tgt_b.adjoint() * (d * src_b)) * src_h))
    }

    /// `Z_r ⊇ B_r` and the page model `E_r = Z_r ⊖ B_r` at slot `(p, n)`;
    /// `r = usize::MAX` marks the limit page.
    fn slot(&mut self, r: usize, p: usize, n: i64) -> Result<&Slot> {
        let key = (r, p, n);
        if !self.slots.contains_key(&key) {
            let s = self.fc.pieces();
            let (rz, rb) = if r == usize::MAX { (s, s) } else { (r, r) };
            let z = colspace_clamped(&self.zmat(p, rz, n)?, RANK_TOL);
            let b = colspace_clamped(&self.bmat(p, rb, n)?, RANK_TOL);
            let e = complement_within(&z, &b, RANK_TOL);
            self.slots.insert(key, Slot { e });
        }
        Ok(&self.slots[&key])
    }

    /// The page differential `d_r: E_r^{slot (p,n)} -> E_r^{slot (p+r,n+1)}`
    /// in the orthonormal model bases.
    fn page_diff(&mut self, r: usize, p: usize, n: i64) -> Result<CMatrix> {
        let s = self.fc.pieces();
        let src_e = self.slot(r, p, n)?.e.clone();
        let tgt_cols = if p + r < s { self.slot(r, p + r, n + 1)?.e.ncols() } else { 0 };
        if p + r >= s || src_e.ncols() == 0 || tgt_cols == 0 {
            return Ok(CMatrix::zeros(tgt_cols, src_e.ncols()));
        }
        // lift classes through the Z_r map, apply the ambient differential,
        // read off the class at filtration level p + r
        let zm = self.zmat(p, r, n)?;
        let xi = lstsq(&zm, &src_e, RANK_TOL);
        let di = self.di(n).expect("slot with cells has a degree index");
        let (src_b, src_h) = {
            let m = self.model(p, p + r)?;
            (m.bases[di].clone(), m.harm[di].clone())
        };
        let ambient = src_b * src_h * xi;
        let moved = self.fc.complex.diff_matrix(n) * ambient;
        let (ghalf_t, _, _) = self.frame(p + r, n + 1)?;
        let dt = self.di(n + 1).expect("target slot with cells has a degree index");
        let (tgt_b, tgt_h) = {
            let m = self.model(p + r, p + r + 1)?;
            (m.bases[dt].clone(), m.harm[dt].clone())
        };
        let class = &ghalf_t * (tgt_h.adjoint() * (tgt_b.adjoint() * moved));
        let tgt_e = self.slot(r, p + r, n + 1)?.e.clone();
        Ok(tgt_e.adjoint() * class)
    }

    /// Metricized action on the graded cohomology restricted to a subspace.
    fn restricted_rep(&mut self, p: usize, n: i64, basis: &CMatrix) -> Result<UnitaryRep> {
        let (_, _, ops) = self.frame(p, n)?;
        let group = self.fc.complex.group().clone();
        let restricted: Vec<CMatrix> = ops.iter().map(|u| basis.adjoint() * u * basis).collect();
        UnitaryRep::new(&group, restricted)
    }
}

/// Column space with the rank cutoff clamped at scale 1: the z/b inputs are
/// maps between unit-normalized class frames, so a numerically zero map must
/// come out rank zero instead of inheriting rank from a relative cutoff.
fn colspace_clamped(m: &CMatrix, tol: f64) -> CMatrix {
    if m.nrows() == 0 || m.ncols() == 0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let (u, sv, _) = crate::linalg::svd_onesided(m);
    let smax = sv.first().copied().unwrap_or(0.0).max(1.0);
    let k = sv.iter().take_while(|&&s| s > tol * smax).count();
    u.columns(0, k).clone_owned()
}

fn parity(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Decompose the torsion of a filtered complex into the graded-piece term,
/// the spectral-sequence term, and the limit-comparison term, and check the
/// resulting identity `total = ρ(C, μ)`.
///
/// `mu` is the metric on the total cohomology; `graded[p]` the metric on
/// the cohomology of the `p`-th graded piece (both must be invariant).
pub fn spectral_decomposition(
    fc: &FilteredComplex,
    mu: &CohomologyMetric,
    graded: &[CohomologyMetric],
) -> Result<TorsionDecomposition> {
    let s = fc.pieces();
    if graded.len() != s {
        return Err(Error::Contract(format!(
            "need one graded metric per piece: got {}, expected {s}",
            graded.len()
        )));
    }
    let c = &fc.complex;
    let group = c.group().clone();
    let (dmin, dmax) = (c.degree_min(), c.degree_max());
    let mut eng = Engine {
        fc,
        graded,
        models: HashMap::new(),
        frames: HashMap::new(),
        slots: HashMap::new(),
    };

    // graded-piece term
    let mut cell_term = ClassFunction::zero(&group);
    for p in 0..s {
        let piece = eng.model(p, p + 1)?.complex.clone();
        cell_term = cell_term.add(&torsion_with_cohomology(&piece, &graded[p])?);
    }

    // page term: chains of page-r entries, based at p0 < r
    let mut ss_term = ClassFunction::zero(&group);
    for r in 1..s.max(2) {
        let mut chains: HashMap<(usize, i64), Vec<(usize, usize, i64)>> = HashMap::new();
        for p in 0..s {
            for n in dmin..=dmax {
                let j = p / r;
                let key = (p % r, n - j as i64);
                chains.entry(key).or_default().push((j, p, n));
            }
        }
        let mut keys: Vec<(usize, i64)> = chains.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let entries = &chains[&key];
            let jmax = entries.iter().map(|&(j, _, _)| j).max().unwrap();
            let mut spaces = Vec::with_capacity(jmax + 1);
            let mut diffs = Vec::new();
            let mut any = false;
            for j in 0..=jmax {
                let rep = match entries.iter().find(|&&(jj, _, _)| jj == j) {
                    Some(&(_, p, n)) => {
                        let e = eng.slot(r, p, n)?.e.clone();
                        any |= e.ncols() > 0;
                        eng.restricted_rep(p, n, &e)?
                    }
                    None => UnitaryRep::trivial(&group, 0),
                };
                spaces.push(GammaModule::new(rep));
            }
            if !any {
                continue;
            }
            for j in 0..jmax {
                let d = match entries.iter().find(|&&(jj, _, _)| jj == j) {
                    Some(&(_, p, n)) => eng.page_diff(r, p, n)?,
                    None => CMatrix::zeros(spaces[j + 1].dim(), spaces[j].dim()),
                };
                diffs.push(d);
            }
            let page_complex = GammaComplex::new(&group, 0, spaces, diffs)?;
            let rho = torsion_with_cohomology(&page_complex, &CohomologyMetric::standard(&page_complex))?;
            ss_term = ss_term.add(&rho.scale(parity(key.1)));
        }
    }

    // limit comparison term: psi maps the graded total cohomology to the
    // limit page, each side carrying its chosen metric
    let mut psi_term = ClassFunction::zero(&group);
    let mut tot_frames: Vec<(CMatrix, CMatrix, Vec<CMatrix>)> = Vec::new();
    for n in dmin..=dmax {
        let h = c.harmonic_basis(n);
        let gram = mu
            .gram(n)
            .ok_or_else(|| Error::Contract(format!("missing total metric in degree {n}")))?
            .clone();
        if gram.nrows() != h.ncols() {
            return Err(Error::Contract(format!("total metric has wrong size in degree {n}")));
        }
        let ghalf = herm_sqrt(&gram);
        let ginv = herm_inv_sqrt(&gram);
        let ops: Vec<CMatrix> = (0..group.order())
            .map(|g| &ghalf * (h.adjoint() * c.module(n).unwrap().rep.op(g) * &h) * &ginv)
            .collect();
        for op in &ops {
            let k = op.nrows();
            if frob(&(op.adjoint() * op - CMatrix::identity(k, k))) > 1e-7 * (1.0 + k as f64) {
                return Err(Error::Contract(format!(
                    "total cohomology metric is not invariant in degree {n}"
                )));
            }
        }
        tot_frames.push((h, ghalf, ops));
    }
    // fmat[p][n]: image map H^n(F_p) -> metricized H^n(C)
    let mut fmats: HashMap<(usize, i64), CMatrix> = HashMap::new();
    let mut fonbs: HashMap<(usize, i64), CMatrix> = HashMap::new();
    for p in 0..=s {
        for n in dmin..=dmax {
            let di = (n - dmin) as usize;
            let (th, ghalf, _) = &tot_frames[di];
            let (src_b, src_h) = {
                let m = eng.model(p, s)?;
                (m.bases[di].clone(), m.harm[di].clone())
            };
            let fmat = ghalf * (th.adjoint() * src_b * src_h);
            fonbs.insert((p, n), colspace_clamped(&fmat, RANK_TOL));
            fmats.insert((p, n), fmat);
        }
    }
    for p in 0..s {
        for n in dmin..=dmax {
            let di = (n - dmin) as usize;
            let fmod = complement_within(&fonbs[&(p, n)], &fonbs[&(p + 1, n)], RANK_TOL);
            let e_inf = eng.slot(usize::MAX, p, n)?.e.clone();
            if fmod.ncols() == 0 && e_inf.ncols() == 0 {
                continue;
            }
            if fmod.ncols() != e_inf.ncols() {
                return Err(Error::Mismatch {
                    what: format!(
                        "limit page dimensions at piece {p}, degree {n} ({} vs {})",
                        fmod.ncols(),
                        e_inf.ncols()
                    ),
                    deviation: (fmod.ncols() as f64 - e_inf.ncols() as f64).abs(),
                });
            }
            let xi = lstsq(&fmats[&(p, n)], &fmod, RANK_TOL);
            let pushed = eng.zmat(p, s, n)? * xi;
            let psi = e_inf.adjoint() * pushed;
            let (_, _, tot_ops) = &tot_frames[di];
            let f_rep = UnitaryRep::new(
                &group,
                tot_ops.iter().map(|u| fmod.adjoint() * u * &fmod).collect(),
            )?;
            let e_rep = eng.restricted_rep(p, n, &e_inf)?;
            let x = bracket_torsion(&f_rep, &e_rep, &psi)?;
            psi_term = psi_term.add(&x.scale(parity(n)));
        }
    }

    let total = cell_term.add(&ss_term).sub(&psi_term);
    let rho = torsion_with_cohomology(c, mu)?;
    let deviation = total.sub(&rho).max_abs();
    if deviation > 1e-8 * (1.0 + rho.max_abs()) {
        return Err(Error::Mismatch {
            what: "torsion decomposition against direct torsion".into(),
            deviation,
        });
    }
    Ok(TorsionDecomposition { cell_term, ss_term, psi_term, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::torsion_acyclic;
    use crate::group::FiniteGroup;
    use crate::linalg::C64;
    use crate::random::{
        random_complex_with_cohomology, random_filtered_complex, random_invariant_metric,
    };

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn standard_graded(fc: &FilteredComplex) -> Vec<CohomologyMetric> {
        (0..fc.pieces())
            .map(|p| CohomologyMetric::standard(&fc.graded_piece(p).unwrap()))
            .collect()
    }

    #[test]
    fn trivial_filtration_reduces_to_plain_torsion() {
        let g = FiniteGroup::cyclic(2).unwrap();
        let cx = random_complex_with_cohomology(&g, 0, &[2, 1], &[1, 0, 1], 7).unwrap();
        let mu = random_invariant_metric(&cx, 11).unwrap();
        let fc = FilteredComplex::trivial(cx.clone());
        let dec = spectral_decomposition(&fc, &mu, &[mu.clone()]).unwrap();
        let rho = torsion_with_cohomology(&cx, &mu).unwrap();
        assert!(dec.ss_term.max_abs() < 1e-9);
        assert!(dec.psi_term.max_abs() < 1e-9);
        assert!(dec.cell_term.sub(&rho).max_abs() < 1e-9);
        assert!(dec.total.sub(&rho).max_abs() < 1e-9);
    }

    #[test]
    fn split_filtration_degenerates_at_the_first_page() {
        let g = FiniteGroup::cyclic(3).unwrap();
        let a = random_complex_with_cohomology(&g, 0, &[2], &[1], 3).unwrap();
        let b = random_complex_with_cohomology(&g, 0, &[1], &[0, 1], 4).unwrap();
        let total = a.direct_sum(&b).unwrap();
        // second summand sits in the columns after the first
        let levels = vec![(total.degree_min()..=total.degree_max())
            .map(|n| {
                let (da, dt) = (a.dim(n), total.dim(n));
                let mut m = CMatrix::zeros(dt, dt - da);
                for j in 0..dt - da {
                    m[(da + j, j)] = c(1.0, 0.0);
                }
                m
            })
            .collect()];
        let fc = FilteredComplex::new(total.clone(), levels).unwrap();
        let mu = CohomologyMetric::standard(&total);
        let dec = spectral_decomposition(&fc, &mu, &standard_graded(&fc)).unwrap();
        assert!(dec.ss_term.max_abs() < 1e-9, "no page differentials");
        assert!(dec.psi_term.max_abs() < 1e-9, "block metrics compare isometrically");
        let rho = torsion_with_cohomology(&total, &mu).unwrap();
        assert!(dec.total.sub(&rho).max_abs() < 1e-9);
    }

    #[test]
    fn acyclic_complex_with_two_nontrivial_pages() {
        // degrees 0 and 1, both 2-dimensional; the differential hits
        // filtration levels 1 and 2, so d_1 and d_2 are both nonzero
        let g = FiniteGroup::trivial().unwrap();
        let rep = UnitaryRep::trivial(&g, 2);
        let d = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)]);
        let cx = GammaComplex::new(
            &g,
            0,
            vec![GammaModule::new(rep.clone()), GammaModule::new(rep)],
            vec![d],
        )
        .unwrap();
        // F_1: all of degree 1; F_2: the second coordinate of degree 1
        let levels = vec![
            vec![CMatrix::zeros(2, 0), CMatrix::identity(2, 2)],
            vec![
                CMatrix::zeros(2, 0),
                CMatrix::from_row_slice(2, 1, &[c(0.0, 0.0), c(1.0, 0.0)]),
            ],
        ];
        let fc = FilteredComplex::new(cx.clone(), levels).unwrap();
        let mu = CohomologyMetric::standard(&cx);
        let dec = spectral_decomposition(&fc, &mu, &standard_graded(&fc)).unwrap();
        let rho = torsion_acyclic(&cx).unwrap();
        assert!(dec.total.sub(&rho).max_abs() < 1e-9);
        // every graded piece has zero differential, and the limit page of
        // an acyclic complex is empty
        assert!(dec.cell_term.max_abs() < 1e-12);
        assert!(dec.psi_term.max_abs() < 1e-12);
        assert!((dec.ss_term.eval(0).re - 6.0_f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn unpreserved_filtration_is_rejected() {
        let g = FiniteGroup::trivial().unwrap();
        let rep = UnitaryRep::trivial(&g, 1);
        let d = CMatrix::from_element(1, 1, c(1.0, 0.0));
        let cx = GammaComplex::new(
            &g,
            0,
            vec![GammaModule::new(rep.clone()), GammaModule::new(rep)],
            vec![d],
        )
        .unwrap();
        // a level containing degree 0 but not degree 1 is not d-closed
        let levels = vec![vec![CMatrix::identity(1, 1), CMatrix::zeros(1, 0)]];
        match FilteredComplex::new(cx, levels) {
            Err(Error::Contract(msg)) => assert!(msg.contains("not preserved"), "{msg}"),
            other => panic!("expected contract error, got {other:?}"),
        }
    }

    #[test]
    fn decomposition_identity_on_random_filtered_complexes() {
        let groups = [
            FiniteGroup::trivial().unwrap(),
            FiniteGroup::cyclic(2).unwrap(),
            FiniteGroup::cyclic(3).unwrap(),
        ];
        let mut nonzero_ss = 0usize;
        let mut nonzero_psi = 0usize;
        for trial in 0..100u64 {
            let group = &groups[(trial % 3) as usize];
            let depth = 1 + (trial % 3) as usize;
            let fc = random_filtered_complex(group, depth, 1000 + trial).unwrap();
            assert!(fc.complex().total_dim() <= 20, "trial {trial}");
            let mu = random_invariant_metric(fc.complex(), 2000 + trial).unwrap();
            let graded: Vec<CohomologyMetric> = (0..fc.pieces())
                .map(|p| {
                    random_invariant_metric(&fc.graded_piece(p).unwrap(), 3000 + trial + p as u64)
                        .unwrap()
                })
                .collect();
            let dec = spectral_decomposition(&fc, &mu, &graded)
                .unwrap_or_else(|e| panic!("trial {trial}: {e}"));
            let rho = torsion_with_cohomology(fc.complex(), &mu).unwrap();
            assert!(dec.total.sub(&rho).max_abs() < 1e-8, "trial {trial}");
            if dec.ss_term.max_abs() > 1e-9 {
                nonzero_ss += 1;
            }
            if dec.psi_term.max_abs() > 1e-9 {
                nonzero_psi += 1;
            }
        }
        assert!(nonzero_ss >= 10, "only {nonzero_ss} runs exercised the page term");
        assert!(nonzero_psi >= 10, "only {nonzero_psi} runs exercised the comparison term");
    }

    #[test]
    fn skeletal_filtration_of_a_cell_complex() {
        use crate::cw::{build_circle, cochain_complex};
        let u = CMatrix::from_element(1, 1, c(-1.0, 0.0));
        let lam = CMatrix::identity(1, 1);
        let (x, f) = build_circle(2, 1, &u, &lam).unwrap();
        let cx = cochain_complex(&x, &f).unwrap();
        let fc = FilteredComplex::skeletal(cx.clone());
        assert_eq!(fc.pieces(), 2);
        // graded pieces are the cell modules concentrated in one degree
        for p in 0..2 {
            let piece = fc.graded_piece(p).unwrap();
            assert_eq!(piece.dim(p as i64), 2);
            assert_eq!(piece.dim(1 - p as i64), 0);
        }
        let mu = CohomologyMetric::standard(&cx);
        let dec = spectral_decomposition(&fc, &mu, &standard_graded(&fc)).unwrap();
        let rho = torsion_with_cohomology(&cx, &mu).unwrap();
        assert!(dec.total.sub(&rho).max_abs() < 1e-9);
        assert!(dec.cell_term.max_abs() < 1e-12, "cells alone carry no torsion");
    }
}

