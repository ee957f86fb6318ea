//! Finite-group cell complexes carrying unitary local systems.
//!
//! A complex is stored combinatorially: cell counts per dimension, the
//! permutation action of the group on cells, and a signed incidence list
//! between consecutive dimensions.  A [`LocalSystem`] decorates the same
//! data with fiber unitaries: one per (group element, cell) for the action
//! and one per incidence entry for the coboundary transport.  Assembling
//! the two yields an ordinary [`GammaComplex`] whose validation (d^2 = 0,
//! equivariance, unitarity) doubles as the consistency check for the cell
//! data.


use crate::chain::{
    torsion_with_cohomology, CohomologyMetric, GammaComplex, GammaModule,
};
use crate::error::{Error, Result};
use crate::group::{ClassFunction, FiniteGroup, Subgroup, UnitaryRep};
use crate::linalg::{frob, CMatrix, C64};
use crate::EPS_ALG;

/// Cells of a finite-group CW structure together with the permutation
/// action and signed incidence data.  `perm[g][p][i]` is the image of the
/// `i`-th `p`-cell under the group element `g`; `inc[p]` lists coboundary
/// entries `(to, from, sign)` from `p`-cells into `(p+1)`-cells.
#[derive(Debug, Clone)]
pub struct EquivariantCellComplex {
    group: FiniteGroup,
    counts: Vec<usize>,
    perm: Vec<Vec<Vec<usize>>>,
    inc: Vec<Vec<(usize, usize, f64)>>,
}

/// A single orbit of cells: its dimension, a representative, the full
/// index set of translates, and the isotropy group of the representative.
#[derive(Debug, Clone)]
pub struct OrbitCells {
    pub dim: usize,
    pub representative: usize,
    pub cells: Vec<usize>,
    pub isotropy: Subgroup,
}

impl EquivariantCellComplex {
    pub fn new(
        group: &FiniteGroup,
        counts: Vec<usize>,
        perm: Vec<Vec<Vec<usize>>>,
        inc: Vec<Vec<(usize, usize, f64)>>,
    ) -> Result<Self> {
        let n = group.order();
        if counts.is_empty() {
            return Err(Error::Contract("complex needs at least one dimension".into()));
        }
        if perm.len() != n {
            return Err(Error::Contract("need one cell permutation per group element".into()));
        }
        if inc.len() + 1 != counts.len() {
            return Err(Error::Contract("need one incidence list per consecutive pair".into()));
        }
        for (g, pg) in perm.iter().enumerate() {
            if pg.len() != counts.len() {
                return Err(Error::Contract("permutation data missing a dimension".into()));
            }
            for (p, pi) in pg.iter().enumerate() {
                if pi.len() != counts[p] {
                    return Err(Error::Contract(format!(
                        "element {g} permutes {} cells in dimension {p}, expected {}",
                        pi.len(),
                        counts[p]
                    )));
                }
                let mut seen = vec![false; counts[p]];
                for &j in pi {
                    if j >= counts[p] || seen[j] {
                        return Err(Error::Contract(format!(
                            "element {g} does not permute the {p}-cells"
                        )));
                    }
                    seen[j] = true;
                }
            }
        }
        // action property g(h x) = (gh) x and identity acting trivially
        let e = group.identity();
        for p in 0..counts.len() {
            for i in 0..counts[p] {
                if perm[e][p][i] != i {
                    return Err(Error::Contract("identity must fix every cell".into()));
                }
            }
            for g in 0..n {
                for h in 0..n {
                    let gh = group.mul(g, h);
                    for i in 0..counts[p] {
                        if perm[g][p][perm[h][p][i]] != perm[gh][p][i] {
                            return Err(Error::Contract(format!(
                                "cell permutations are not a group action in dimension {p}"
                            )));
                        }
                    }
                }
            }
        }
        for (p, entries) in inc.iter().enumerate() {
            for &(to, from, _) in entries {
                if to >= counts[p + 1] || from >= counts[p] {
                    return Err(Error::Contract(format!(
                        "incidence entry out of range between dimensions {p} and {}",
                        p + 1
                    )));
                }
            }
        }
        Ok(EquivariantCellComplex { group: group.clone(), counts, perm, inc })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    /// Cell counts per dimension, starting at dimension 0.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn top_dim(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(p, &c)| if p % 2 == 0 { c as i64 } else { -(c as i64) })
            .sum()
    }

    /// Orbit decomposition of the cells, with isotropy groups read off from
    /// the permutation action.
    pub fn orbits(&self) -> Result<Vec<OrbitCells>> {
        let mut out = Vec::new();
        for p in 0..self.counts.len() {
            let mut assigned = vec![false; self.counts[p]];
            for i in 0..self.counts[p] {
                if assigned[i] {
                    continue;
                }
                let mut cells: Vec<usize> =
                    (0..self.group.order()).map(|g| self.perm[g][p][i]).collect();
                cells.sort_unstable();
                cells.dedup();
                for &c in &cells {
                    assigned[c] = true;
                }
                let stab: Vec<usize> = (0..self.group.order())
                    .filter(|&g| self.perm[g][p][i] == i)
                    .collect();
                out.push(OrbitCells {
                    dim: p,
                    representative: i,
                    cells,
                    isotropy: Subgroup::new(&self.group, stab, None)?,
                });
            }
        }
        Ok(out)
    }
}

/// Unitary fiber data over the cells: `fib[g][p][i]` acts on the fiber when
/// `g` moves the `i`-th `p`-cell, and `hol[p][k]` is the transport attached
/// to the `k`-th incidence entry of that dimension.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    fiber_dim: usize,
    fib: Vec<Vec<Vec<CMatrix>>>,
    hol: Vec<Vec<CMatrix>>,
}

impl LocalSystem {
    pub fn new(
        x: &EquivariantCellComplex,
        fiber_dim: usize,
        fib: Vec<Vec<Vec<CMatrix>>>,
        hol: Vec<Vec<CMatrix>>,
    ) -> Result<Self> {
        let m = fiber_dim;
        let check_unitary = |u: &CMatrix, what: &str| -> Result<()> {
            if u.nrows() != m || u.ncols() != m {
                return Err(Error::Contract(format!("{what} has the wrong fiber size")));
            }
            let id = CMatrix::identity(m, m);
            if frob(&(u.adjoint() * u - id)) > EPS_ALG * (m as f64).max(1.0) {
                return Err(Error::Contract(format!("{what} is not unitary")));
            }
            Ok(())
        };
        if fib.len() != x.group.order() || hol.len() != x.inc.len() {
            return Err(Error::Contract("fiber data does not match the cell data".into()));
        }
        for (g, fg) in fib.iter().enumerate() {
            if fg.len() != x.counts.len() {
                return Err(Error::Contract("fiber action missing a dimension".into()));
            }
            for (p, fp) in fg.iter().enumerate() {
                if fp.len() != x.counts[p] {
                    return Err(Error::Contract("fiber action missing a cell".into()));
                }
                for (i, u) in fp.iter().enumerate() {
                    check_unitary(u, &format!("fiber action of element {g} at {p}-cell {i}"))?;
                }
            }
        }
        for (p, hp) in hol.iter().enumerate() {
            if hp.len() != x.inc[p].len() {
                return Err(Error::Contract(format!(
                    "need one holonomy per incidence entry in dimension {p}"
                )));
            }
            for (k, u) in hp.iter().enumerate() {
                check_unitary(u, &format!("holonomy {k} in dimension {p}"))?;
            }
        }
        Ok(LocalSystem { fiber_dim, fib, hol })
    }

    /// The constant sheaf of rank `m`.
    pub fn trivial(x: &EquivariantCellComplex, m: usize) -> LocalSystem {
        let id = CMatrix::identity(m, m);
        let fib = (0..x.group.order())
            .map(|_| x.counts.iter().map(|&c| vec![id.clone(); c]).collect())
            .collect();
        let hol = x.inc.iter().map(|entries| vec![id.clone(); entries.len()]).collect();
        LocalSystem { fiber_dim: m, fib, hol }
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }
}

/// Assemble the twisted cellular cochain complex.  Degree `p` has dimension
/// `fiber_dim * counts[p]`; validation of the result checks that the
/// holonomy data is equivariant and that the coboundary squares to zero.
pub fn cochain_complex(x: &EquivariantCellComplex, f: &LocalSystem) -> Result<GammaComplex> {
    let m = f.fiber_dim;
    let n = x.group.order();
    let mut spaces = Vec::with_capacity(x.counts.len());
    for p in 0..x.counts.len() {
        let dim = m * x.counts[p];
        let mut ops = Vec::with_capacity(n);
        for g in 0..n {
            let mut op = CMatrix::zeros(dim, dim);
            for i in 0..x.counts[p] {
                let j = x.perm[g][p][i];
                op.view_mut((j * m, i * m), (m, m)).copy_from(&f.fib[g][p][i]);
            }
            ops.push(op);
        }
        let rep = UnitaryRep::new(&x.group, ops).map_err(|e| {
            Error::Contract(format!("fiber action in dimension {p} is inconsistent: {e}"))
        })?;
        spaces.push(GammaModule::new(rep));
    }
    let mut diffs = Vec::with_capacity(x.inc.len());
    for (p, entries) in x.inc.iter().enumerate() {
        let mut d = CMatrix::zeros(m * x.counts[p + 1], m * x.counts[p]);
        for (k, &(to, from, sign)) in entries.iter().enumerate() {
            let block = &f.hol[p][k] * C64::new(sign, 0.0);
            let mut view = d.view_mut((to * m, from * m), (m, m));
            view += block;
        }
        diffs.push(d);
    }
    GammaComplex::new(&x.group, 0, spaces, diffs)
}

/// Reidemeister torsion of the complex with the given cohomology metric.
pub fn torsion_cw(
    x: &EquivariantCellComplex,
    f: &LocalSystem,
    mu: &CohomologyMetric,
) -> Result<ClassFunction> {
    torsion_with_cohomology(&cochain_complex(x, f)?, mu)
}

/// The 0-dimensional model of the orbit `group/h` with fiber data induced
/// from a unitary representation of `h`.  Its cochain complex is the
/// induced representation concentrated in degree 0.
pub fn build_orbit(
    group: &FiniteGroup,
    h: &Subgroup,
    rho_h: &UnitaryRep,
) -> Result<(EquivariantCellComplex, LocalSystem)> {
    if rho_h.group().cayley() != h.as_group().cayley() {
        return Err(Error::Contract("fiber representation is not over the subgroup".into()));
    }
    let n = group.order();
    // left cosets gH, indexed by first appearance
    let mut coset_of = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for g in 0..n {
        if coset_of[g] != usize::MAX {
            continue;
        }
        let idx = reps.len();
        reps.push(g);
        for &hm in h.members() {
            coset_of[group.mul(g, hm)] = idx;
        }
    }
    let cells = reps.len();
    let member_index = |g: usize| -> Result<usize> {
        h.members()
            .binary_search(&g)
            .map_err(|_| Error::Contract("coset bookkeeping left the subgroup".into()))
    };
    let mut perm = Vec::with_capacity(n);
    let mut fib = Vec::with_capacity(n);
    for g in 0..n {
        let mut pg = vec![0usize; cells];
        let mut fg = Vec::with_capacity(cells);
        for (i, &r) in reps.iter().enumerate() {
            let moved = group.mul(g, r);
            let j = coset_of[moved];
            pg[i] = j;
            // g r_i = r_j h with h in the subgroup
            let hm = group.mul(group.inv(reps[j]), moved);
            fg.push(rho_h.op(member_index(hm)?).clone());
        }
        perm.push(vec![pg]);
        fib.push(vec![fg]);
    }
    let x = EquivariantCellComplex::new(group, vec![cells], perm, vec![])?;
    let f = LocalSystem::new(&x, rho_h.dim(), fib, vec![])?;
    Ok((x, f))
}

fn matrix_power(u: &CMatrix, k: i64) -> CMatrix {
    let base = if k < 0 { u.adjoint() } else { u.clone() };
    let mut out = CMatrix::identity(u.nrows(), u.ncols());
    for _ in 0..k.unsigned_abs() {
        out = &out * &base;
    }
    out
}

/// Circle with `n` vertex and `n` edge cells, fiber holonomy `u` inserted
/// on the closing edge, and a rotation action shifting indices by `k` while
/// twisting fibers by `lambda`.
///
/// The rotation alone need not have finite order on sections: its `n`-th
/// power acts on fibers by `lambda^n u^{-k}`.  The acting group is the
/// cyclic group of order `n * ord(lambda^n u^{-k})`, which reduces to the
/// plain rotation group `Z_n` whenever that unitary is the identity.
pub fn build_circle(
    n: usize,
    k: usize,
    u: &CMatrix,
    lambda: &CMatrix,
) -> Result<(EquivariantCellComplex, LocalSystem)> {
    let m = u.nrows();
    if n == 0 {
        return Err(Error::Contract("circle needs at least one cell".into()));
    }
    if u.ncols() != m || lambda.nrows() != m || lambda.ncols() != m {
        return Err(Error::Contract("holonomy and twist must be square of equal size".into()));
    }
    let id = CMatrix::identity(m, m);
    if frob(&(u.adjoint() * u - &id)) > EPS_ALG || frob(&(lambda.adjoint() * lambda - &id)) > EPS_ALG
    {
        return Err(Error::Contract("holonomy and twist must be unitary".into()));
    }
    if frob(&(lambda * u - u * lambda)) > EPS_ALG {
        return Err(Error::Contract("twist must commute with the holonomy".into()));
    }
    let k = k % n;
    // order of the fiber unitary picked up by the n-th power of the rotation
    let seam = matrix_power(lambda, n as i64) * matrix_power(u, -(k as i64));
    let mut pw = id.clone();
    let mut ord = 0usize;
    for r in 1..=720usize {
        pw = &pw * &seam;
        if frob(&(&pw - &id)) < 1e-7 {
            ord = r;
            break;
        }
    }
    if ord == 0 {
        return Err(Error::Contract(
            "fiber twist has no finite order; the circle admits no finite cyclic action".into(),
        ));
    }
    let big = n * ord;
    let group = FiniteGroup::cyclic(big)?;

    // generator: shift cells by k, twist fibers by lambda, crossing the
    // seam picks up u^{-1}
    let gen_perm: Vec<usize> = (0..n).map(|i| (i + k) % n).collect();
    let gen_fib: Vec<CMatrix> = (0..n)
        .map(|i| if i + k < n { lambda.clone() } else { lambda * u.adjoint() })
        .collect();
    let mut perm = vec![vec![(0..n).collect::<Vec<usize>>(); 2]];
    let mut fib = vec![vec![vec![id.clone(); n]; 2]];
    for r in 1..big {
        let prev_perm = &perm[r - 1][0];
        let prev_fib = &fib[r - 1];
        let next_perm: Vec<usize> = (0..n).map(|i| gen_perm[prev_perm[i]]).collect();
        let next_fib: Vec<Vec<CMatrix>> = (0..2)
            .map(|p| (0..n).map(|i| &gen_fib[prev_perm[i]] * &prev_fib[p][i]).collect())
            .collect();
        perm.push(vec![next_perm.clone(), next_perm]);
        fib.push(next_fib);
    }

    // coboundary: (d sigma)(e_i) = sigma(v_{i+1}) - sigma(v_i), with the
    // closing edge transported through u
    let mut inc = Vec::new();
    let mut hol = Vec::new();
    for i in 0..n {
        inc.push((i, i, -1.0));
        hol.push(id.clone());
        if i + 1 < n {
            inc.push((i, i + 1, 1.0));
            hol.push(id.clone());
        } else {
            inc.push((i, 0, 1.0));
            hol.push(u.clone());
        }
    }
    let x = EquivariantCellComplex::new(&group, vec![n, n], perm, vec![inc])?;
    let f = LocalSystem::new(&x, m, fib, vec![hol])?;
    Ok((x, f))
}

/// Disjoint union of two complexes over the same group with equal fiber
/// dimension.
pub fn disjoint_union(
    x1: &EquivariantCellComplex,
    f1: &LocalSystem,
    x2: &EquivariantCellComplex,
    f2: &LocalSystem,
) -> Result<(EquivariantCellComplex, LocalSystem)> {
    if x1.group.cayley() != x2.group.cayley() {
        return Err(Error::Contract("disjoint union needs a common group".into()));
    }
    if f1.fiber_dim != f2.fiber_dim {
        return Err(Error::Contract("disjoint union needs equal fiber dimensions".into()));
    }
    let dims = x1.counts.len().max(x2.counts.len());
    let count = |x: &EquivariantCellComplex, p: usize| *x.counts.get(p).unwrap_or(&0);
    let counts: Vec<usize> = (0..dims).map(|p| count(x1, p) + count(x2, p)).collect();
    let n = x1.group.order();
    let mut perm = Vec::with_capacity(n);
    let mut fib = Vec::with_capacity(n);
    for g in 0..n {
        let mut pg = Vec::with_capacity(dims);
        let mut fg = Vec::with_capacity(dims);
        for p in 0..dims {
            let off = count(x1, p);
            let mut pi: Vec<usize> = Vec::with_capacity(counts[p]);
            let mut fi: Vec<CMatrix> = Vec::with_capacity(counts[p]);
            if p < x1.counts.len() {
                pi.extend(x1.perm[g][p].iter().copied());
                fi.extend(f1.fib[g][p].iter().cloned());
            }
            if p < x2.counts.len() {
                pi.extend(x2.perm[g][p].iter().map(|&j| j + off));
                fi.extend(f2.fib[g][p].iter().cloned());
            }
            pg.push(pi);
            fg.push(fi);
        }
        perm.push(pg);
        fib.push(fg);
    }
    let mut inc = Vec::with_capacity(dims - 1);
    let mut hol = Vec::with_capacity(dims - 1);
    for p in 0..dims - 1 {
        let mut entries = Vec::new();
        let mut hs = Vec::new();
        if p + 1 < x1.counts.len() {
            entries.extend(x1.inc[p].iter().copied());
            hs.extend(f1.hol[p].iter().cloned());
        }
        if p + 1 < x2.counts.len() {
            let (ot, of) = (count(x1, p + 1), count(x1, p));
            entries.extend(x2.inc[p].iter().map(|&(t, fr, s)| (t + ot, fr + of, s)));
            hs.extend(f2.hol[p].iter().cloned());
        }
        inc.push(entries);
        hol.push(hs);
    }
    let x = EquivariantCellComplex::new(&x1.group, counts, perm, inc)?;
    let f = LocalSystem::new(&x, f1.fiber_dim, fib, hol)?;
    Ok((x, f))
}

/// Product with a disk on which the group acts trivially: cells `E x D^n`
/// only shift every contribution up by the disk dimension.
pub fn product_with_disk(
    x: &EquivariantCellComplex,
    f: &LocalSystem,
    n_disk: usize,
) -> Result<(EquivariantCellComplex, LocalSystem)> {
    if n_disk == 0 {
        return Ok((x.clone(), f.clone()));
    }
    let counts: Vec<usize> =
        std::iter::repeat(0).take(n_disk).chain(x.counts.iter().copied()).collect();
    let pad_perm = |pg: &Vec<Vec<usize>>| -> Vec<Vec<usize>> {
        std::iter::repeat(Vec::new()).take(n_disk).chain(pg.iter().cloned()).collect()
    };
    let perm = x.perm.iter().map(pad_perm).collect();
    let fib = f
        .fib
        .iter()
        .map(|fg| std::iter::repeat(Vec::new()).take(n_disk).chain(fg.iter().cloned()).collect())
        .collect();
    let inc: Vec<Vec<(usize, usize, f64)>> =
        std::iter::repeat(Vec::new()).take(n_disk).chain(x.inc.iter().cloned()).collect();
    let hol = std::iter::repeat(Vec::new()).take(n_disk).chain(f.hol.iter().cloned()).collect();
    let xx = EquivariantCellComplex::new(&x.group, counts, perm, inc)?;
    let ff = LocalSystem::new(&xx, f.fiber_dim, fib, hol)?;
    Ok((xx, ff))
}

/// Join of two circles, each subdivided into `m` arcs, carrying the
/// constant rank-one sheaf.  The cyclic group of order `m` rotates the
/// first factor by `k1` steps and the second by `k2`; the join cells of a
/// `p`-cell and a `q`-cell sit in dimension `p + q + 1`.  The result is a
/// cell model of the 3-sphere.
pub fn join_of_circles(
    m: usize,
    k1: usize,
    k2: usize,
) -> Result<(EquivariantCellComplex, LocalSystem)> {
    if m == 0 {
        return Err(Error::Contract("join needs at least one arc per circle".into()));
    }
    let (k1, k2) = (k1 % m, k2 % m);
    // dimension 0: a_i, b_j; dimension 1: alpha_i, beta_j, joins a_i*b_j;
    // dimension 2: alpha_i*b_j, a_i*beta_j; dimension 3: alpha_i*beta_j
    let counts = vec![2 * m, 2 * m + m * m, 2 * m * m, m * m];
    let a = |i: usize| i % m;
    let b = |j: usize| m + j % m;
    let al = |i: usize| i % m;
    let be = |j: usize| m + j % m;
    let gam = |i: usize, j: usize| 2 * m + (i % m) * m + j % m;
    let alb = |i: usize, j: usize| (i % m) * m + j % m;
    let abe = |i: usize, j: usize| m * m + (i % m) * m + j % m;
    let albe = |i: usize, j: usize| (i % m) * m + j % m;

    let mut inc0 = Vec::new();
    let mut inc1 = Vec::new();
    let mut inc2 = Vec::new();
    for i in 0..m {
        // boundary of the arcs: d(alpha_i) = a_{i+1} - a_i, likewise beta
        inc0.push((al(i), a(i + 1), 1.0));
        inc0.push((al(i), a(i), -1.0));
        inc0.push((be(i), b(i + 1), 1.0));
        inc0.push((be(i), b(i), -1.0));
        for j in 0..m {
            // join segments: d(a_i * b_j) = b_j - a_i
            inc0.push((gam(i, j), b(j), 1.0));
            inc0.push((gam(i, j), a(i), -1.0));
            // d(alpha_i * b_j) = gamma_{i+1,j} - gamma_{i,j} + alpha_i
            inc1.push((alb(i, j), gam(i + 1, j), 1.0));
            inc1.push((alb(i, j), gam(i, j), -1.0));
            inc1.push((alb(i, j), al(i), 1.0));
            // d(a_i * beta_j) = beta_j - gamma_{i,j+1} + gamma_{i,j}
            inc1.push((abe(i, j), be(j), 1.0));
            inc1.push((abe(i, j), gam(i, j + 1), -1.0));
            inc1.push((abe(i, j), gam(i, j), 1.0));
            // d(alpha_i * beta_j) = a_{i+1}*beta_j - a_i*beta_j
            //                     + alpha_i*b_{j+1} - alpha_i*b_j
            inc2.push((albe(i, j), abe(i + 1, j), 1.0));
            inc2.push((albe(i, j), abe(i, j), -1.0));
            inc2.push((albe(i, j), alb(i, j + 1), 1.0));
            inc2.push((albe(i, j), alb(i, j), -1.0));
        }
    }
    let group = FiniteGroup::cyclic(m)?;
    let mut perm = Vec::with_capacity(m);
    for r in 0..m {
        let s1 = r * k1;
        let s2 = r * k2;
        let p0: Vec<usize> = (0..2 * m)
            .map(|c| if c < m { a(c + s1) } else { b(c - m + s2) })
            .collect();
        let p1: Vec<usize> = (0..counts[1])
            .map(|c| {
                if c < m {
                    al(c + s1)
                } else if c < 2 * m {
                    be(c - m + s2)
                } else {
                    let (i, j) = ((c - 2 * m) / m, (c - 2 * m) % m);
                    gam(i + s1, j + s2)
                }
            })
            .collect();
        let p2: Vec<usize> = (0..counts[2])
            .map(|c| {
                if c < m * m {
                    alb(c / m + s1, c % m + s2)
                } else {
                    abe((c - m * m) / m + s1, (c - m * m) % m + s2)
                }
            })
            .collect();
        let p3: Vec<usize> = (0..counts[3]).map(|c| albe(c / m + s1, c % m + s2)).collect();
        perm.push(vec![p0, p1, p2, p3]);
    }
    let x = EquivariantCellComplex::new(&group, counts, perm, vec![inc0, inc1, inc2])?;
    let f = LocalSystem::trivial(&x, 1);
    Ok((x, f))
}

/// De Rham cohomology metric of a circle built by [`build_circle`]: degree
/// 0 pairs the constant fiber values of harmonic representatives, degree 1
/// pairs their periods around the circle.  Both are independent of the
/// subdivision.
pub fn circle_de_rham_metric(
    x: &EquivariantCellComplex,
    f: &LocalSystem,
    c: &GammaComplex,
) -> Result<CohomologyMetric> {
    if x.counts.len() != 2 || x.counts[0] != x.counts[1] {
        return Err(Error::Contract("de Rham metric is defined for circle models".into()));
    }
    let n = x.counts[0];
    let m = f.fiber_dim;
    let h0 = c.harmonic_basis(0);
    let values = h0.view((0, 0), (m, h0.ncols())).clone_owned();
    let gram0 = values.adjoint() * values;
    let h1 = c.harmonic_basis(1);
    let mut periods = CMatrix::zeros(m, h1.ncols());
    for i in 0..n {
        periods += h1.view((i * m, 0), (m, h1.ncols()));
    }
    let gram1 = periods.adjoint() * periods;
    CohomologyMetric::new(0, vec![gram0, gram1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::hat_torsion;
    use crate::group::restrict_class_function;
    use crate::linalg::herm_eig;
    use crate::zeta::{psi_scalar, ZetaAccuracy};
    use nalgebra::{dmatrix, DMatrix};
    use std::f64::consts::{LN_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar(z: C64) -> CMatrix {
        CMatrix::from_element(1, 1, z)
    }

    fn standard_torsion(x: &EquivariantCellComplex, f: &LocalSystem) -> ClassFunction {
        let c = cochain_complex(x, f).unwrap();
        torsion_with_cohomology(&c, &CohomologyMetric::standard(&c)).unwrap()
    }

    #[test]
    fn orbit_of_full_subgroup_is_one_fixed_cell() {
        let g = FiniteGroup::cyclic(2).unwrap();
        let h = Subgroup::full(&g).unwrap();
        let rho = UnitaryRep::trivial(h.as_group(), 1);
        let (x, f) = build_orbit(&g, &h, &rho).unwrap();
        assert_eq!(x.counts(), &[1]);
        let cx = cochain_complex(&x, &f).unwrap();
        let chi = cx.module(0).unwrap().rep.character();
        assert!((chi.eval(0) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((chi.eval(1) - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn free_orbit_gives_regular_representation() {
        let g = FiniteGroup::cyclic(2).unwrap();
        let h = Subgroup::trivial(&g).unwrap();
        let rho = UnitaryRep::trivial(h.as_group(), 1);
        let (x, f) = build_orbit(&g, &h, &rho).unwrap();
        assert_eq!(x.counts(), &[2]);
        let cx = cochain_complex(&x, &f).unwrap();
        let chi = cx.module(0).unwrap().rep.character();
        assert!((chi.eval(0) - c(2.0, 0.0)).norm() < 1e-12);
        assert!(chi.eval(1).norm() < 1e-12);
    }

    #[test]
    fn induced_sign_character_on_z4() {
        let g = FiniteGroup::cyclic(4).unwrap();
        let h = Subgroup::new(&g, vec![0, 2], None).unwrap();
        let sign = UnitaryRep::new(
            h.as_group(),
            vec![scalar(c(1.0, 0.0)), scalar(c(-1.0, 0.0))],
        )
        .unwrap();
        let (x, f) = build_orbit(&g, &h, &sign).unwrap();
        let c0 = cochain_complex(&x, &f).unwrap();
        let chi = c0.module(0).unwrap().rep.character();
        let expect = [c(2.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0), c(0.0, 0.0)];
        for g_el in 0..4 {
            assert!((chi.eval(g_el) - expect[g_el]).norm() < 1e-12, "element {g_el}");
        }
    }

    #[test]
    fn orbit_isotropy_metadata() {
        let g = FiniteGroup::cyclic(4).unwrap();
        let h = Subgroup::new(&g, vec![0, 2], None).unwrap();
        let rho = UnitaryRep::trivial(h.as_group(), 1);
        let (x, _) = build_orbit(&g, &h, &rho).unwrap();
        let orbits = x.orbits().unwrap();
        assert_eq!(orbits.len(), 1);
        assert_eq!(orbits[0].cells.len(), 2);
        assert_eq!(orbits[0].isotropy.members(), &[0, 2]);
    }

    #[test]
    fn single_cell_circle_differential_and_torsion() {
        let a = 0.25;
        let u = scalar(C64::from_polar(1.0, 2.0 * PI * a));
        let (x, f) = build_circle(1, 0, &u, &scalar(c(1.0, 0.0))).unwrap();
        let cx = cochain_complex(&x, &f).unwrap();
        assert_eq!(cx.betti(), vec![0, 0]);
        let d = cx.diff_matrix(0);
        assert!((d[(0, 0)] - (u[(0, 0)] - c(1.0, 0.0))).norm() < 1e-12);
        let rho = standard_torsion(&x, &f);
        // |e^{i pi/2} - 1| = sqrt 2
        assert!((rho.eval(0).re - 0.5 * LN_2).abs() < 1e-10);
    }

    #[test]
    fn two_cell_circle_with_trivial_holonomy() {
        let u = scalar(c(1.0, 0.0));
        for lam_val in [c(1.0, 0.0), c(-1.0, 0.0)] {
            let lam = scalar(lam_val);
            let (x, f) = build_circle(2, 1, &u, &lam).unwrap();
            assert_eq!(x.group().order(), 2); // lambda^2 u^{-1} = 1, no extension needed
            let cx = cochain_complex(&x, &f).unwrap();
            assert_eq!(cx.betti(), vec![1, 1]);
            // the generator twists both harmonic lines by lambda; the
            // rotation preserves orientation, so no extra sign on H^1
            let h0 = cx.harmonic_basis(0);
            let h1 = cx.harmonic_basis(1);
            let act0 = (h0.adjoint() * cx.module(0).unwrap().rep.op(1) * &h0)[(0, 0)];
            let act1 = (h1.adjoint() * cx.module(1).unwrap().rep.op(1) * &h1)[(0, 0)];
            assert!((act0 - lam_val).norm() < 1e-9);
            assert!((act1 - lam_val).norm() < 1e-9);
        }
    }

    #[test]
    fn circle_acyclic_iff_no_fixed_holonomy_vector() {
        let theta = 2.0 * PI / 3.0;
        let q = dmatrix![
            c(1.0 / 2f64.sqrt(), 0.0), c(1.0 / 2f64.sqrt(), 0.0);
            c(1.0 / 2f64.sqrt(), 0.0), c(-1.0 / 2f64.sqrt(), 0.0)
        ];
        let with_fixed =
            &q * DMatrix::from_diagonal(
                &nalgebra::DVector::from_vec(vec![c(1.0, 0.0), C64::from_polar(1.0, theta)]),
            ) * q.adjoint();
        let without = &with_fixed * C64::from_polar(1.0, PI / 2.0);
        let lam = CMatrix::identity(2, 2);
        for n in [1usize, 3] {
            let (x, f) = build_circle(n, n / 2, &with_fixed, &lam).unwrap();
            let cx = cochain_complex(&x, &f).unwrap();
            assert_eq!(cx.betti(), vec![1, 1], "n={n} fixed vector");
            let (x, f) = build_circle(n, n / 2, &without, &lam).unwrap();
            let cx = cochain_complex(&x, &f).unwrap();
            assert_eq!(cx.betti(), vec![0, 0], "n={n} acyclic");
        }
    }

    #[test]
    fn half_holonomy_circle_matches_analytic_values() {
        // two arcs, rotation by a half turn, holonomy -1: the rotation
        // action closes up only in the cyclic group of order four
        let (x, f) = build_circle(2, 1, &scalar(c(-1.0, 0.0)), &scalar(c(1.0, 0.0))).unwrap();
        assert_eq!(x.group().order(), 4);
        let rho = standard_torsion(&x, &f);
        let acc = ZetaAccuracy::default();
        // analytic values at the powers of the rotation, halved
        let analytic = [
            psi_scalar(c(1.0, 0.0), 0.5, 0.0, &acc).unwrap(),
            psi_scalar(c(1.0, 0.0), 0.5, 0.5, &acc).unwrap(),
            psi_scalar(c(-1.0, 0.0), 0.5, 0.0, &acc).unwrap(),
            psi_scalar(c(-1.0, 0.0), 0.5, 0.5, &acc).unwrap(),
        ];
        for r in 0..4 {
            let expect = analytic[r] / c(crate::ANALYTIC_OVER_COMBINATORIAL, 0.0);
            assert!(
                (rho.eval(r) - expect).norm() < 1e-8,
                "power {r}: {} vs {}",
                rho.eval(r),
                expect
            );
        }
    }

    #[test]
    fn disjoint_union_adds_euler_and_torsion() {
        let u1 = scalar(C64::from_polar(1.0, 2.0 * PI * 0.25));
        let u2 = scalar(C64::from_polar(1.0, 2.0 * PI * 0.3));
        let one = scalar(c(1.0, 0.0));
        let (x1, f1) = build_circle(2, 0, &u1, &one).unwrap();
        let (x2, f2) = build_circle(2, 0, &u2, &one).unwrap();
        let (x, f) = disjoint_union(&x1, &f1, &x2, &f2).unwrap();
        assert_eq!(
            x.euler_characteristic(),
            x1.euler_characteristic() + x2.euler_characteristic()
        );
        let rho = standard_torsion(&x, &f);
        let r1 = standard_torsion(&x1, &f1);
        let r2 = standard_torsion(&x2, &f2);
        assert!(rho.sub(&r1.add(&r2)).max_abs() < 1e-9);
    }

    #[test]
    fn disk_product_shifts_degree_parity() {
        let u = scalar(C64::from_polar(1.0, 2.0 * PI * 0.3));
        let one = scalar(c(1.0, 0.0));
        let (x, f) = build_circle(1, 0, &u, &one).unwrap();
        let (same_x, same_f) = product_with_disk(&x, &f, 0).unwrap();
        assert!(standard_torsion(&same_x, &same_f)
            .sub(&standard_torsion(&x, &f))
            .max_abs()
            .abs()
            < 1e-12);
        let (odd_x, odd_f) = product_with_disk(&x, &f, 1).unwrap();
        assert_eq!(odd_x.counts(), &[0, 1, 1]);
        let flipped = standard_torsion(&odd_x, &odd_f);
        assert!(flipped.add(&standard_torsion(&x, &f)).max_abs() < 1e-9);
        let (even_x, even_f) = product_with_disk(&x, &f, 2).unwrap();
        assert!(standard_torsion(&even_x, &even_f)
            .sub(&standard_torsion(&x, &f))
            .max_abs()
            < 1e-9);
    }

    #[test]
    fn join_of_circles_is_a_three_sphere() {
        for (m, k1, k2) in [(1usize, 0usize, 0usize), (2, 1, 0), (3, 1, 2)] {
            let (x, f) = join_of_circles(m, k1, k2).unwrap();
            let cx = cochain_complex(&x, &f).unwrap();
            assert_eq!(cx.betti(), vec![1, 0, 0, 1], "m={m}");
            // rotations act trivially on H^0 and H^3
            for p in [0i64, 3] {
                let h = cx.harmonic_basis(p);
                for g in 0..m {
                    let act = h.adjoint() * cx.module(p).unwrap().rep.op(g) * &h;
                    assert!((act[(0, 0)] - c(1.0, 0.0)).norm() < 1e-9, "m={m} p={p} g={g}");
                }
            }
        }
    }

    #[test]
    fn zero_differential_orbit_has_zero_torsion() {
        let g = FiniteGroup::cyclic(4).unwrap();
        let h = Subgroup::new(&g, vec![0, 2], None).unwrap();
        let sign = UnitaryRep::new(
            h.as_group(),
            vec![scalar(c(1.0, 0.0)), scalar(c(-1.0, 0.0))],
        )
        .unwrap();
        let (x, f) = build_orbit(&g, &h, &sign).unwrap();
        let rho = standard_torsion(&x, &f);
        assert!(rho.max_abs() < 1e-12);
    }

    #[test]
    fn restriction_law_on_built_in_complexes() {
        let one = scalar(c(1.0, 0.0));
        let u = scalar(c(-1.0, 0.0));
        let (cx1, _) = {
            let (x, f) = build_circle(2, 1, &u, &one).unwrap();
            (cochain_complex(&x, &f).unwrap(), f)
        };
        let (x2, f2) = join_of_circles(3, 1, 0).unwrap();
        let cx2 = cochain_complex(&x2, &f2).unwrap();
        for cx in [&cx1, &cx2] {
            let mu = CohomologyMetric::standard(cx);
            let rho = torsion_with_cohomology(cx, &mu).unwrap();
            let g = cx.group().clone();
            for gen in 0..g.order() {
                let sub = Subgroup::generated(&g, &[gen]).unwrap();
                let restricted = cx.restrict(&sub).unwrap();
                let mu_r = CohomologyMetric::standard(&restricted);
                let rho_r = torsion_with_cohomology(&restricted, &mu_r).unwrap();
                let pushed = restrict_class_function(&rho, &sub).unwrap();
                assert!(pushed.sub(&rho_r).max_abs() < 1e-9, "generator {gen}");
            }
        }
    }

    #[test]
    fn conjugation_by_group_element_preserves_torsion() {
        // relabeling the arcs by a deck rotation conjugates the complex
        let u = scalar(c(-1.0, 0.0));
        let lam = scalar(c(0.0, 1.0));
        let (x, f) = build_circle(4, 1, &u, &lam).unwrap();
        let cx = cochain_complex(&x, &f).unwrap();
        let h_el = 2usize;
        let units: Vec<CMatrix> = (0..=cx.degree_max())
            .map(|p| cx.module(p).unwrap().rep.op(h_el).clone())
            .collect();
        let conj = cx.conjugate_by(&units).unwrap();
        let rho = torsion_with_cohomology(&cx, &CohomologyMetric::standard(&cx)).unwrap();
        let rho_c = torsion_with_cohomology(&conj, &CohomologyMetric::standard(&conj)).unwrap();
        for g in 0..cx.group().order() {
            let gh = cx.group().conj(g, h_el);
            assert!((rho.eval(gh) - rho_c.eval(g)).norm() < 1e-9, "element {g}");
        }
    }

    #[test]
    fn inconsistent_fiber_action_is_rejected() {
        let g = FiniteGroup::cyclic(2).unwrap();
        let counts = vec![2usize];
        let perm = vec![vec![vec![0, 1]], vec![vec![1, 0]]];
        let x = EquivariantCellComplex::new(&g, counts, perm, vec![]).unwrap();
        // swapping cells with a fiber factor i squares to -1, not the identity
        let fib = vec![
            vec![vec![scalar(c(1.0, 0.0)); 2]],
            vec![vec![scalar(c(0.0, 1.0)); 2]],
        ];
        let f = LocalSystem::new(&x, 1, fib, vec![]).unwrap();
        assert!(matches!(cochain_complex(&x, &f), Err(Error::Contract(_))));
    }

    #[test]
    fn de_rham_metric_is_subdivision_independent() {
        let u = CMatrix::identity(1, 1);
        let lam = scalar(c(1.0, 0.0));
        let mut values = Vec::new();
        for n in 1..=4usize {
            let (x, f) = build_circle(n, 0, &u, &lam).unwrap();
            let cx = cochain_complex(&x, &f).unwrap();
            let sub = Subgroup::trivial(cx.group()).unwrap();
            let cx = cx.restrict(&sub).unwrap();
            let (xx, ff) = build_circle(n, 0, &u, &lam).unwrap();
            let mu = circle_de_rham_metric(&xx, &ff, &cx).unwrap();
            values.push(torsion_with_cohomology(&cx, &mu).unwrap().eval(0));
        }
        for v in &values[1..] {
            assert!((v - values[0]).norm() < 1e-9, "{values:?}");
        }
    }

    #[test]
    fn hat_torsion_ignores_the_metric_choice() {
        // the fixed-subgroup quotient removes all metric dependence
        let u = scalar(c(1.0, 0.0));
        let lam = scalar(c(-1.0, 0.0));
        let (x, f) = build_circle(2, 1, &u, &lam).unwrap();
        let cx = cochain_complex(&x, &f).unwrap();
        let normal = Subgroup::trivial(cx.group()).unwrap();
        let mu1 = CohomologyMetric::standard(&cx);
        let mut grams: Vec<CMatrix> = Vec::new();
        for p in 0..=1i64 {
            let k = cx.harmonic_basis(p).ncols();
            grams.push(CMatrix::identity(k, k) * c(3.0, 0.0));
        }
        let mu2 = CohomologyMetric::new(0, grams).unwrap();
        let h1 = hat_torsion(&cx, &mu1, &normal).unwrap();
        let h2 = hat_torsion(&cx, &mu2, &normal).unwrap();
        assert!(h1.sub(&h2).max_abs() < 1e-9);
    }

    #[test]
    fn joint_fiber_data_stays_unitary() {
        // sanity on the internal power bookkeeping of build_circle
        let u = scalar(C64::from_polar(1.0, 2.0 * PI * 0.3));
        let lam = scalar(c(0.0, 1.0));
        let (x, f) = build_circle(3, 2, &u, &lam).unwrap();
        let cx = cochain_complex(&x, &f).unwrap();
        for p in 0..=1i64 {
            let lap = cx.laplacian(p);
            let (ev, _) = herm_eig(&lap);
            assert!(ev.iter().all(|&e| e > -1e-9));
        }
        let _ = x.group().order();
        assert_eq!(f.fiber_dim(), 1);
    }
}
