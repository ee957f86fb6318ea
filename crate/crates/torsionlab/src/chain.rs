//! Torsion algebra on finite cochain complexes of unitary modules.
//!
//! The basic invariant of an equivariant isomorphism `f: V -> W` is the class
//! function `g -> 1/2 tr(rho_V(g) log(f* f))`; summed over irreducibles this
//! is the weighted log-determinant of the isotypic blocks of `f`. Torsion of
//! an acyclic complex is this invariant applied to `c + kappa` on even
//! degrees, with `kappa` the Hodge contraction, and the non-acyclic case goes
//! through the mapping cone of a harmonic embedding of the cohomology.

use crate::group::{
    hat_project, ClassFunction, FiniteGroup, Subgroup, UnitaryRep,
};
use crate::linalg::{self, C64, CMatrix};
use crate::{Error, Result, EPS_ALG, EPS_SING};

/// A unitary module: a Hilbert space `C^m` with a unitary group action.
#[derive(Clone, Debug)]
pub struct GammaModule {
    pub rep: UnitaryRep,
}

impl GammaModule {
    pub fn new(rep: UnitaryRep) -> Self {
        GammaModule { rep }
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }
}

/// A bounded cochain complex of unitary modules with equivariant
/// differentials.
#[derive(Clone, Debug)]
pub struct GammaComplex {
    group: FiniteGroup,
    degree_min: i64,
    spaces: Vec<GammaModule>,
    // diffs[i]: C^{degree_min+i} -> C^{degree_min+i+1}; length spaces.len()-1
    diffs: Vec<CMatrix>,
}

impl GammaComplex {
    pub fn new(
        group: &FiniteGroup,
        degree_min: i64,
        spaces: Vec<GammaModule>,
        diffs: Vec<CMatrix>,
    ) -> Result<Self> {
        if spaces.is_empty() {
            return Err(Error::Contract("complex needs at least one degree".into()));
        }
        if diffs.len() + 1 != spaces.len() {
            return Err(Error::Contract(format!(
                "expected {} differentials for {} degrees, got {}",
                spaces.len() - 1,
                spaces.len(),
                diffs.len()
            )));
        }
        for (i, d) in diffs.iter().enumerate() {
            if d.ncols() != spaces[i].dim() || d.nrows() != spaces[i + 1].dim() {
                return Err(Error::Contract(format!(
                    "differential {i} has shape {}x{}, expected {}x{}",
                    d.nrows(),
                    d.ncols(),
                    spaces[i + 1].dim(),
                    spaces[i].dim()
                )));
            }
            let scale = 1.0_f64.max(linalg::opnorm(d));
            // d^2 = 0
            if i + 1 < diffs.len() {
                let sq = &diffs[i + 1] * d;
                if linalg::frob(&sq) > EPS_ALG * scale * 1.0_f64.max(linalg::opnorm(&diffs[i + 1])) {
                    return Err(Error::Contract(format!(
                        "differential does not square to zero at degree {}",
                        degree_min + i as i64
                    )));
                }
            }
            // equivariance
            for g in 0..group.order() {
                let lhs = d * spaces[i].rep.op(g);
                let rhs = spaces[i + 1].rep.op(g) * d;
                if linalg::frob(&(lhs - rhs)) > EPS_ALG * scale {
                    return Err(Error::Contract(format!(
                        "differential at degree {} is not equivariant",
                        degree_min + i as i64
                    )));
                }
            }
        }
        for s in &spaces {
            if s.rep.group() != group {
                return Err(Error::Contract("module over a different group".into()));
            }
        }
        Ok(GammaComplex {
            group: group.clone(),
            degree_min,
            spaces,
            diffs,
        })
    }

    /// Convenience: complex over the trivial-action modules of the given
    /// dimensions.
    pub fn with_trivial_action(
        group: &FiniteGroup,
        degree_min: i64,
        dims: &[usize],
        diffs: Vec<CMatrix>,
    ) -> Result<Self> {
        let spaces = dims
            .iter()
            .map(|&d| GammaModule::new(UnitaryRep::trivial(group, d)))
            .collect();
        Self::new(group, degree_min, spaces, diffs)
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn degree_min(&self) -> i64 {
        self.degree_min
    }

    pub fn degree_max(&self) -> i64 {
        self.degree_min + self.spaces.len() as i64 - 1
    }

    /// Dimension of the module in degree `p` (0 outside the stored range).
    pub fn dim(&self, p: i64) -> usize {
        self.module(p).map_or(0, |m| m.dim())
    }

    pub fn total_dim(&self) -> usize {
        self.spaces.iter().map(|s| s.dim()).sum()
    }

    pub fn module(&self, p: i64) -> Option<&GammaModule> {
        if p < self.degree_min || p > self.degree_max() {
            None
        } else {
            Some(&self.spaces[(p - self.degree_min) as usize])
        }
    }

    /// Differential out of degree `p`; `None` when either end is outside the
    /// range (the map is then zero).
    pub fn diff(&self, p: i64) -> Option<&CMatrix> {
        if p < self.degree_min || p >= self.degree_max() {
            None
        } else {
            Some(&self.diffs[(p - self.degree_min) as usize])
        }
    }

    /// Differential out of degree `p` as a concrete matrix, zero-sized or
    /// zero-filled outside the range.
    pub fn diff_matrix(&self, p: i64) -> CMatrix {
        match self.diff(p) {
            Some(d) => d.clone(),
            None => CMatrix::zeros(self.dim(p + 1), self.dim(p)),
        }
    }

    /// The shifted complex `C[k]` with `C[k]^p = C^{p+k}` and the same
    /// differentials.
    pub fn shift(&self, k: i64) -> GammaComplex {
        GammaComplex {
            group: self.group.clone(),
            degree_min: self.degree_min - k,
            spaces: self.spaces.clone(),
            diffs: self.diffs.clone(),
        }
    }

    /// Degreewise direct sum of two complexes over the same group.
    pub fn direct_sum(&self, other: &GammaComplex) -> Result<GammaComplex> {
        if self.group != other.group {
            return Err(Error::Contract("direct sum over different groups".into()));
        }
        let lo = self.degree_min.min(other.degree_min);
        let hi = self.degree_max().max(other.degree_max());
        let mut spaces = Vec::new();
        let mut diffs = Vec::new();
        for p in lo..=hi {
            let rep = self
                .rep_at(p)
                .direct_sum(&other.rep_at(p));
            spaces.push(GammaModule::new(rep));
            if p < hi {
                diffs.push(linalg::block_diag(&[
                    self.diff_matrix(p),
                    other.diff_matrix(p),
                ]));
            }
        }
        GammaComplex::new(&self.group, lo, spaces, diffs)
    }

    fn rep_at(&self, p: i64) -> UnitaryRep {
        match self.module(p) {
            Some(m) => m.rep.clone(),
            None => UnitaryRep::trivial(&self.group, 0),
        }
    }

    /// Conjugates the complex by degreewise unitaries `u_p: C^p -> C^p`
    /// (an equivariant isometry of complexes).
    pub fn conjugate_by(&self, units: &[CMatrix]) -> Result<GammaComplex> {
        if units.len() != self.spaces.len() {
            return Err(Error::Contract("one unitary per degree required".into()));
        }
        let spaces: Vec<GammaModule> = self
            .spaces
            .iter()
            .zip(units)
            .map(|(s, u)| GammaModule::new(s.rep.conjugate_by(u)))
            .collect();
        let diffs: Vec<CMatrix> = self
            .diffs
            .iter()
            .enumerate()
            .map(|(i, d)| &units[i + 1] * d * units[i].adjoint())
            .collect();
        GammaComplex::new(&self.group, self.degree_min, spaces, diffs)
    }

    /// Hodge Laplacian in degree `p`.
    pub fn laplacian(&self, p: i64) -> CMatrix {
        let n = self.dim(p);
        let mut delta = CMatrix::zeros(n, n);
        if let Some(d) = self.diff(p) {
            delta += d.adjoint() * d;
        }
        if let Some(d) = self.diff(p - 1) {
            delta += d * d.adjoint();
        }
        delta
    }

    /// Betti numbers per degree over the stored range.
    pub fn betti(&self) -> Vec<usize> {
        (self.degree_min..=self.degree_max())
            .map(|p| {
                let delta = self.laplacian(p);
                if delta.nrows() == 0 {
                    return 0;
                }
                let (evs, _) = linalg::herm_eig(&delta);
                let top = evs.iter().cloned().fold(0.0, f64::max).max(1.0);
                evs.iter().filter(|&&e| e < 1e-9 * top).count()
            })
            .collect()
    }

    /// Orthonormal basis of the harmonic space `ker Delta_p`.
    pub fn harmonic_basis(&self, p: i64) -> CMatrix {
        let delta = self.laplacian(p);
        if delta.nrows() == 0 {
            return CMatrix::zeros(0, 0);
        }
        // clamp the scale at 1 so a numerically zero Laplacian (which is
        // legitimately all-harmonic) is not truncated by a relative cutoff
        let (evs, vecs) = linalg::herm_eig(&delta);
        let top = evs.iter().cloned().fold(0.0, f64::max).max(1.0);
        let k = evs.iter().filter(|&&e| e < 1e-9 * top).count();
        vecs.columns(delta.nrows() - k, k).clone_owned()
    }

    /// Restricts every module and differential to a subgroup.
    pub fn restrict(&self, sub: &Subgroup) -> Result<GammaComplex> {
        let spaces = self
            .spaces
            .iter()
            .map(|s| GammaModule::new(s.rep.restrict(sub)))
            .collect();
        GammaComplex::new(sub.as_group(), self.degree_min, spaces, self.diffs.clone())
    }
}

/// A degreewise equivariant map of complexes commuting with the
/// differentials.
#[derive(Clone, Debug)]
pub struct ChainMap {
    pub source: GammaComplex,
    pub target: GammaComplex,
    // components[p - degree_min] over the union of the degree ranges
    degree_min: i64,
    components: Vec<CMatrix>,
}

impl ChainMap {
    pub fn new(source: GammaComplex, target: GammaComplex, components: Vec<(i64, CMatrix)>) -> Result<Self> {
        if source.group() != target.group() {
            return Err(Error::Contract("chain map over different groups".into()));
        }
        let lo = source.degree_min().min(target.degree_min());
        let hi = source.degree_max().max(target.degree_max());
        let mut comps: Vec<CMatrix> = (lo..=hi)
            .map(|p| CMatrix::zeros(target.dim(p), source.dim(p)))
            .collect();
        for (p, m) in components {
            if p < lo || p > hi {
                if linalg::frob(&m) > 0.0 {
                    return Err(Error::Contract(format!("component in degree {p} out of range")));
                }
                continue;
            }
            if m.nrows() != target.dim(p) || m.ncols() != source.dim(p) {
                return Err(Error::Contract(format!(
                    "component at degree {p} has shape {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    target.dim(p),
                    source.dim(p)
                )));
            }
            comps[(p - lo) as usize] = m;
        }
        let map = ChainMap {
            source,
            target,
            degree_min: lo,
            components: comps,
        };
        map.validate()?;
        Ok(map)
    }

    fn validate(&self) -> Result<()> {
        let g = self.source.group();
        for p in self.degree_min..=self.degree_max() {
            let f = self.component(p);
            let scale = 1.0_f64.max(linalg::opnorm(&f));
            for x in 0..g.order() {
                let (rs, rt) = (self.source.rep_at(p), self.target.rep_at(p));
                if linalg::frob(&(&f * rs.op(x) - rt.op(x) * &f)) > EPS_ALG * scale {
                    return Err(Error::Contract(format!(
                        "chain map not equivariant in degree {p}"
                    )));
                }
            }
            let lhs = self.target.diff_matrix(p) * &f;
            let rhs = self.component(p + 1) * self.source.diff_matrix(p);
            let dscale = scale
                * 1.0_f64
                    .max(linalg::opnorm(&self.target.diff_matrix(p)))
                    .max(linalg::opnorm(&self.source.diff_matrix(p)));
            if linalg::frob(&(lhs - rhs)) > EPS_ALG * dscale {
                return Err(Error::Contract(format!(
                    "chain map does not commute with differentials at degree {p}"
                )));
            }
        }
        Ok(())
    }

    pub fn degree_min(&self) -> i64 {
        self.degree_min
    }

    pub fn degree_max(&self) -> i64 {
        self.degree_min + self.components.len() as i64 - 1
    }

    /// Component in degree `p`, zero-filled outside the stored range.
    pub fn component(&self, p: i64) -> CMatrix {
        if p < self.degree_min || p > self.degree_max() {
            CMatrix::zeros(self.target.dim(p), self.source.dim(p))
        } else {
            self.components[(p - self.degree_min) as usize].clone()
        }
    }

    /// The identity chain map.
    pub fn identity(c: &GammaComplex) -> ChainMap {
        let comps = (c.degree_min()..=c.degree_max())
            .map(|p| (p, CMatrix::identity(c.dim(p), c.dim(p))))
            .collect();
        ChainMap::new(c.clone(), c.clone(), comps).expect("identity is a chain map")
    }
}

/// A positive-definite invariant inner product on the cohomology of a
/// complex, expressed as a Gram matrix per degree on the orthonormal
/// harmonic basis returned by [`GammaComplex::harmonic_basis`].
#[derive(Clone, Debug)]
pub struct CohomologyMetric {
    degree_min: i64,
    grams: Vec<CMatrix>,
}

impl CohomologyMetric {
    pub fn new(degree_min: i64, grams: Vec<CMatrix>) -> Result<Self> {
        for g in &grams {
            if g.nrows() != g.ncols() {
                return Err(Error::Contract("Gram matrix must be square".into()));
            }
            if linalg::frob(&(g - g.adjoint())) > EPS_ALG * 1.0_f64.max(linalg::frob(g)) {
                return Err(Error::Contract("Gram matrix must be Hermitian".into()));
            }
            if g.nrows() > 0 {
                let (evs, _) = linalg::herm_eig(g);
                if evs.iter().any(|&e| e <= 0.0) {
                    return Err(Error::Contract("Gram matrix must be positive-definite".into()));
                }
            }
        }
        Ok(CohomologyMetric { degree_min, grams })
    }

    /// The standard metric on the harmonic spaces of `c`.
    pub fn standard(c: &GammaComplex) -> CohomologyMetric {
        let grams = (c.degree_min()..=c.degree_max())
            .map(|p| {
                let k = c.harmonic_basis(p).ncols();
                CMatrix::identity(k, k)
            })
            .collect();
        CohomologyMetric {
            degree_min: c.degree_min(),
            grams,
        }
    }

    pub fn gram(&self, p: i64) -> Option<&CMatrix> {
        if p < self.degree_min || p >= self.degree_min + self.grams.len() as i64 {
            None
        } else {
            Some(&self.grams[(p - self.degree_min) as usize])
        }
    }
}

/// The class function `g -> 1/2 tr(rho_V(g) log(f* f))` of an equivariant
/// isomorphism `f: V -> W`.
///
/// This equals the sum over irreducibles `pi` of
/// `1/(2 dim pi) log|det(f restricted to the pi-isotypic block)|^2 chi_pi`,
/// which the test suite uses as an independent oracle.
pub fn bracket_torsion(v: &UnitaryRep, w: &UnitaryRep, f: &CMatrix) -> Result<ClassFunction> {
    if v.group() != w.group() {
        return Err(Error::Contract("source and target over different groups".into()));
    }
    if f.nrows() != w.dim() || f.ncols() != v.dim() || v.dim() != w.dim() {
        return Err(Error::Contract(format!(
            "map has shape {}x{}, expected square {}x{}",
            f.nrows(),
            f.ncols(),
            w.dim(),
            v.dim()
        )));
    }
    let group = v.group().clone();
    if f.nrows() == 0 {
        return Ok(ClassFunction::zero(&group));
    }
    let scale = 1.0_f64.max(linalg::opnorm(f));
    for g in 0..group.order() {
        if linalg::frob(&(f * v.op(g) - w.op(g) * f)) > EPS_ALG * scale {
            return Err(Error::Contract("map is not equivariant".into()));
        }
    }
    let sv = linalg::singular_values(f);
    let smax = sv[0];
    let smin = sv[sv.len() - 1];
    let cutoff = EPS_SING * smax.max(f64::MIN_POSITIVE);
    if smin < cutoff {
        return Err(Error::SingularMap {
            smallest: smin,
            cutoff,
        });
    }
    let (log, _) = linalg::herm_log(&(f.adjoint() * f));
    let values = group
        .class_reps()
        .iter()
        .map(|&r| {
            let prod = v.op(r) * &log;
            let tr: C64 = (0..prod.nrows()).map(|i| prod[(i, i)]).sum();
            tr.scale(0.5)
        })
        .collect();
    ClassFunction::new(&group, values)
}

/// Chain contraction of an acyclic complex: `kappa^p: C^p -> C^{p-1}`.
#[derive(Clone, Debug)]
pub struct Contraction {
    degree_min: i64,
    // kappas[i]: C^{degree_min+i+1} -> C^{degree_min+i}
    kappas: Vec<CMatrix>,
}

impl Contraction {
    pub fn from_parts(degree_min: i64, kappas: Vec<CMatrix>) -> Contraction {
        Contraction { degree_min, kappas }
    }

    /// The component `kappa^p: C^p -> C^{p-1}`; zero-sized outside range.
    pub fn kappa(&self, c: &GammaComplex, p: i64) -> CMatrix {
        let i = p - self.degree_min - 1;
        if i < 0 || i as usize >= self.kappas.len() {
            CMatrix::zeros(c.dim(p - 1), c.dim(p))
        } else {
            self.kappas[i as usize].clone()
        }
    }
}

fn not_acyclic_error(c: &GammaComplex) -> Error {
    let betti = c.betti();
    let degree_min = c.degree_min()
        + betti
            .iter()
            .position(|&b| b > 0)
            .unwrap_or(0) as i64;
    let first = betti.iter().position(|&b| b > 0).unwrap_or(0);
    let last = betti.iter().rposition(|&b| b > 0).unwrap_or(betti.len() - 1);
    Error::NotAcyclic {
        degree_min,
        betti: betti[first..=last].to_vec(),
    }
}

/// The Hodge contraction `kappa = c* Delta^{-1}` of an acyclic complex.
pub fn hodge_contraction(c: &GammaComplex) -> Result<Contraction> {
    if c.betti().iter().any(|&b| b > 0) {
        return Err(not_acyclic_error(c));
    }
    let mut kappas = Vec::new();
    for p in (c.degree_min() + 1)..=c.degree_max() {
        let delta = c.laplacian(p);
        let n = delta.nrows();
        if n == 0 {
            kappas.push(CMatrix::zeros(c.dim(p - 1), 0));
            continue;
        }
        let (evs, q) = linalg::herm_eig(&delta);
        let mut inv = CMatrix::zeros(n, n);
        for i in 0..n {
            inv[(i, i)] = C64::new(1.0 / evs[i], 0.0);
        }
        let delta_inv = &q * inv * q.adjoint();
        kappas.push(c.diff_matrix(p - 1).adjoint() * delta_inv);
    }
    Ok(Contraction::from_parts(c.degree_min(), kappas))
}

/// Torsion of an acyclic complex with an explicit contraction:
/// the bracket invariant of `c + kappa` from even to odd degrees.
pub fn torsion_with_contraction(c: &GammaComplex, kappa: &Contraction) -> Result<ClassFunction> {
    let (rep_ev, rep_od, m) = contracted_even_map(c, kappa);
    bracket_torsion(&rep_ev, &rep_od, &m)
}

/// The assembled map `c^{ev} + kappa^{ev}: C^{ev} -> C^{odd}` together with
/// the representations on source and target.
pub(crate) fn contracted_even_map(
    c: &GammaComplex,
    kappa: &Contraction,
) -> (UnitaryRep, UnitaryRep, CMatrix) {
    let evens: Vec<i64> = (c.degree_min()..=c.degree_max()).filter(|p| p.rem_euclid(2) == 0).collect();
    let odds: Vec<i64> = (c.degree_min()..=c.degree_max()).filter(|p| p.rem_euclid(2) == 1).collect();
    let group = c.group().clone();
    let rep_of = |degrees: &[i64]| {
        degrees
            .iter()
            .fold(UnitaryRep::trivial(&group, 0), |acc, &p| acc.direct_sum(&c.rep_at(p)))
    };
    let rep_ev = rep_of(&evens);
    let rep_od = rep_of(&odds);
    // assemble c^{ev} + kappa^{ev}: C^{ev} -> C^{odd} blockwise
    let mut m = CMatrix::zeros(rep_od.dim(), rep_ev.dim());
    let col_offset: Vec<usize> = evens
        .iter()
        .scan(0usize, |acc, &p| {
            let o = *acc;
            *acc += c.dim(p);
            Some(o)
        })
        .collect();
    let row_offset: Vec<usize> = odds
        .iter()
        .scan(0usize, |acc, &p| {
            let o = *acc;
            *acc += c.dim(p);
            Some(o)
        })
        .collect();
    for (j, &p) in evens.iter().enumerate() {
        for (i, &q) in odds.iter().enumerate() {
            let block = if q == p + 1 {
                c.diff_matrix(p)
            } else if q == p - 1 {
                kappa.kappa(c, p)
            } else {
                continue;
            };
            if block.nrows() == 0 || block.ncols() == 0 {
                continue;
            }
            m.view_mut((row_offset[i], col_offset[j]), (block.nrows(), block.ncols()))
                .copy_from(&block);
        }
    }
    (rep_ev, rep_od, m)
}

/// Torsion of an acyclic complex via the Hodge contraction.
pub fn torsion_acyclic(c: &GammaComplex) -> Result<ClassFunction> {
    let kappa = hodge_contraction(c)?;
    torsion_with_contraction(c, &kappa)
}

/// The mapping cone of a chain map, `cone(f)^n = C^n (+) D^{n-1}` with
/// differential `(c, 0; f, -d)`.
pub fn cone(f: &ChainMap) -> Result<GammaComplex> {
    let group = f.source.group().clone();
    let lo = f.source.degree_min().min(f.target.degree_min() + 1);
    let hi = f.source.degree_max().max(f.target.degree_max() + 1);
    let mut spaces = Vec::new();
    let mut diffs = Vec::new();
    for n in lo..=hi {
        let rep = f.source.rep_at(n).direct_sum(&f.target.rep_at(n - 1));
        spaces.push(GammaModule::new(rep));
    }
    for n in lo..hi {
        let (sc, sd) = (f.source.dim(n), f.target.dim(n - 1));
        let (tc, td) = (f.source.dim(n + 1), f.target.dim(n));
        let mut d = CMatrix::zeros(tc + td, sc + sd);
        let cblock = f.source.diff_matrix(n);
        if cblock.nrows() > 0 && cblock.ncols() > 0 {
            d.view_mut((0, 0), (tc, sc)).copy_from(&cblock);
        }
        let fblock = f.component(n);
        if fblock.nrows() > 0 && fblock.ncols() > 0 {
            d.view_mut((tc, 0), (td, sc)).copy_from(&fblock);
        }
        let dblock = f.target.diff_matrix(n - 1).scale(-1.0);
        if dblock.nrows() > 0 && dblock.ncols() > 0 {
            d.view_mut((tc, sc), (td, sd)).copy_from(&dblock);
        }
        diffs.push(d);
    }
    GammaComplex::new(&group, lo, spaces, diffs)
}

/// Torsion of a quasi-isomorphism: the torsion of its acyclic cone.
pub fn torsion_of_map(f: &ChainMap) -> Result<ClassFunction> {
    let cn = cone(f)?;
    match torsion_acyclic(&cn) {
        Ok(t) => Ok(t),
        Err(Error::NotAcyclic { betti, .. }) => Err(Error::NotQuasiIso { betti }),
        Err(e) => Err(e),
    }
}

/// Torsion of a complex relative to an invariant cohomology metric: minus the
/// cone torsion of the harmonic embedding `i` with `i_* = id`, the harmonic
/// basis reframed to be orthonormal for the given metric.
pub fn torsion_with_cohomology(c: &GammaComplex, mu: &CohomologyMetric) -> Result<ClassFunction> {
    let group = c.group().clone();
    let mut h_spaces = Vec::new();
    let mut h_embeds = Vec::new();
    for p in c.degree_min()..=c.degree_max() {
        let h = c.harmonic_basis(p);
        let k = h.ncols();
        let gram = match mu.gram(p) {
            Some(g) if g.nrows() == k => g.clone(),
            Some(g) => {
                return Err(Error::Contract(format!(
                    "metric in degree {p} has size {}, cohomology has dimension {k}",
                    g.nrows()
                )))
            }
            None if k == 0 => CMatrix::identity(0, 0),
            None => return Err(Error::Contract(format!("metric missing in degree {p}"))),
        };
        // action induced on the harmonic space in the orthonormal basis h
        let induced: Vec<CMatrix> = (0..group.order())
            .map(|g| h.adjoint() * c.rep_at(p).op(g) * &h)
            .collect();
        // invariance of the metric: rho* G rho = G
        for op in &induced {
            let twisted = op.adjoint() * &gram * op;
            if linalg::frob(&(&twisted - &gram)) > 1e-7 * 1.0_f64.max(linalg::frob(&gram)) {
                return Err(Error::Contract(format!(
                    "cohomology metric is not invariant in degree {p}"
                )));
            }
        }
        // mu-orthonormal frame: columns of h G^{-1/2}
        let g_inv_sqrt = linalg::herm_inv_sqrt(&gram);
        let embed = &h * &g_inv_sqrt;
        let g_sqrt = linalg::herm_sqrt(&gram);
        let ops: Vec<CMatrix> = induced.iter().map(|op| &g_sqrt * op * &g_inv_sqrt).collect();
        let rep = UnitaryRep::new(&group, ops)?;
        h_spaces.push(GammaModule::new(rep));
        h_embeds.push(embed);
    }
    let n_deg = h_spaces.len();
    let h_complex = GammaComplex::new(
        &group,
        c.degree_min(),
        h_spaces,
        (0..n_deg - 1)
            .map(|i| CMatrix::zeros(c.harmonic_basis(c.degree_min() + i as i64 + 1).ncols(), h_embeds[i].ncols()))
            .collect(),
    )?;
    let comps: Vec<(i64, CMatrix)> = h_embeds
        .into_iter()
        .enumerate()
        .map(|(i, e)| (c.degree_min() + i as i64, e))
        .collect();
    let i_map = ChainMap::new(h_complex, c.clone(), comps)?;
    Ok(torsion_of_map(&i_map)?.scale(-1.0))
}

/// Canonical representative modulo pullbacks: projects the cohomology-framed
/// torsion away from class functions pulled back from the quotient by a
/// normal subgroup acting trivially on cohomology.
pub fn hat_torsion(
    c: &GammaComplex,
    mu: &CohomologyMetric,
    normal: &Subgroup,
) -> Result<ClassFunction> {
    // the subgroup must act trivially on every harmonic space
    for p in c.degree_min()..=c.degree_max() {
        let h = c.harmonic_basis(p);
        if h.ncols() == 0 {
            continue;
        }
        for &g in normal.members() {
            let induced = h.adjoint() * c.rep_at(p).op(g) * &h;
            if linalg::frob(&(induced - CMatrix::identity(h.ncols(), h.ncols()))) > 1e-7 {
                return Err(Error::Contract(format!(
                    "subgroup acts nontrivially on cohomology in degree {p}"
                )));
            }
        }
    }
    let rho = torsion_with_cohomology(c, mu)?;
    hat_project(&rho, normal)
}
