//! Finite groups, conjugacy classes, character tables and class functions.
//!
//! Groups are given by Cayley tables over element indices `0..order`. The
//! character table of a nonabelian group is obtained numerically by
//! simultaneous diagonalization of the class-multiplication matrices; every
//! downstream consumer tolerates `EPS_ALG` on character identities.

use std::sync::Arc;

use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::linalg::{self, C64, CMatrix};
use crate::{Error, Result, EPS_ALG};

/// Largest group order for which a character table is computed.
pub const MAX_CHARACTER_TABLE_ORDER: usize = 512;

#[derive(Debug)]
struct GroupData {
    order: usize,
    cayley: Vec<Vec<usize>>,
    identity: usize,
    inverses: Vec<usize>,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
}

/// A finite group with Cayley table, cheap to clone.
#[derive(Clone, Debug)]
pub struct FiniteGroup {
    data: Arc<GroupData>,
}

impl PartialEq for FiniteGroup {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.data, &other.data) || self.data.cayley == other.data.cayley
    }
}

impl FiniteGroup {
    /// Builds a group from a Cayley table `cayley[g][h] = g*h`, checking the
    /// group axioms.
    pub fn from_cayley(cayley: Vec<Vec<usize>>) -> Result<Self> {
        let n = cayley.len();
        if n == 0 {
            return Err(Error::Structure("empty Cayley table".into()));
        }
        for row in &cayley {
            if row.len() != n || row.iter().any(|&x| x >= n) {
                return Err(Error::Structure("Cayley table is not square over valid indices".into()));
            }
        }
        // identity
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| cayley[e][g] == g && cayley[g][e] == g))
            .ok_or_else(|| Error::Structure("no identity element".into()))?;
        // inverses
        let mut inverses = vec![usize::MAX; n];
        for g in 0..n {
            let inv = (0..n)
                .find(|&h| cayley[g][h] == identity && cayley[h][g] == identity)
                .ok_or_else(|| Error::Structure(format!("element {g} has no inverse")))?;
            inverses[g] = inv;
        }
        // associativity
        for a in 0..n {
            for b in 0..n {
                let ab = cayley[a][b];
                for c in 0..n {
                    if cayley[ab][c] != cayley[a][cayley[b][c]] {
                        return Err(Error::Structure(format!(
                            "associativity fails on ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
        let (classes, class_of) = conjugacy_partition(&cayley, &inverses, identity);
        Ok(FiniteGroup {
            data: Arc::new(GroupData {
                order: n,
                cayley,
                identity,
                inverses,
                classes,
                class_of,
            }),
        })
    }

    /// Generates a group from permutation generators acting on `0..k`.
    pub fn from_perm_generators(gens: &[Vec<usize>]) -> Result<Self> {
        if gens.is_empty() {
            return Self::trivial();
        }
        let k = gens[0].len();
        for g in gens {
            let mut seen = vec![false; k];
            if g.len() != k || g.iter().any(|&x| x >= k) {
                return Err(Error::Structure("generator is not a permutation".into()));
            }
            for &x in g {
                if seen[x] {
                    return Err(Error::Structure("generator is not a permutation".into()));
                }
                seen[x] = true;
            }
        }
        let id: Vec<usize> = (0..k).collect();
        let mut elements = vec![id.clone()];
        let mut frontier = vec![id];
        while let Some(p) = frontier.pop() {
            for g in gens {
                let q: Vec<usize> = (0..k).map(|i| g[p[i]]).collect();
                if !elements.contains(&q) {
                    if elements.len() >= 10_000 {
                        return Err(Error::Structure("generated group too large".into()));
                    }
                    elements.push(q.clone());
                    frontier.push(q);
                }
            }
        }
        elements.sort();
        let n = elements.len();
        let index_of = |p: &Vec<usize>| elements.binary_search(p).unwrap();
        let mut cayley = vec![vec![0usize; n]; n];
        for (i, p) in elements.iter().enumerate() {
            for (j, q) in elements.iter().enumerate() {
                let r: Vec<usize> = (0..k).map(|x| p[q[x]]).collect();
                cayley[i][j] = index_of(&r);
            }
        }
        Self::from_cayley(cayley)
    }

    pub fn trivial() -> Result<Self> {
        Self::from_cayley(vec![vec![0]])
    }

    /// Cyclic group of order `n`, element `i` representing `i` mod `n`.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Structure("cyclic group of order 0".into()));
        }
        let cayley = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        Self::from_cayley(cayley)
    }

    /// Dihedral group of order `2n` as permutations of an `n`-gon.
    pub fn dihedral(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Structure("dihedral group needs n >= 3".into()));
        }
        let rot: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        let refl: Vec<usize> = (0..n).map(|i| (n - i) % n).collect();
        Self::from_perm_generators(&[rot, refl])
    }

    /// Symmetric group on `n <= 4` letters.
    pub fn symmetric(n: usize) -> Result<Self> {
        if n == 0 || n > 4 {
            return Err(Error::Structure("symmetric constructor supports 1..=4".into()));
        }
        if n == 1 {
            return Self::trivial();
        }
        let mut transposition: Vec<usize> = (0..n).collect();
        transposition.swap(0, 1);
        let cycle: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        Self::from_perm_generators(&[transposition, cycle])
    }

    pub fn order(&self) -> usize {
        self.data.order
    }

    pub fn identity(&self) -> usize {
        self.data.identity
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.data.cayley[g][h]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.data.inverses[g]
    }

    pub fn conj(&self, g: usize, by: usize) -> usize {
        self.mul(self.mul(by, g), self.inv(by))
    }

    pub fn cayley(&self) -> &[Vec<usize>] {
        &self.data.cayley
    }

    /// Conjugacy classes; the class of the identity comes first.
    pub fn conjugacy_classes(&self) -> &[Vec<usize>] {
        &self.data.classes
    }

    pub fn class_count(&self) -> usize {
        self.data.classes.len()
    }

    pub fn class_of(&self, g: usize) -> usize {
        self.data.class_of[g]
    }

    /// A representative of each conjugacy class.
    pub fn class_reps(&self) -> Vec<usize> {
        self.data.classes.iter().map(|c| c[0]).collect()
    }

    pub fn is_abelian(&self) -> bool {
        self.data.classes.len() == self.data.order
    }

    pub fn element_order(&self, g: usize) -> usize {
        let mut x = g;
        let mut k = 1;
        while x != self.identity() {
            x = self.mul(x, g);
            k += 1;
        }
        k
    }

    /// Power `g^k` with `k >= 0`.
    pub fn pow(&self, g: usize, k: usize) -> usize {
        let mut acc = self.identity();
        for _ in 0..k {
            acc = self.mul(acc, g);
        }
        acc
    }
}

fn conjugacy_partition(
    cayley: &[Vec<usize>],
    inverses: &[usize],
    identity: usize,
) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = cayley.len();
    let mut class_of = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    // identity class first, then in element order
    let order: Vec<usize> =
        std::iter::once(identity).chain((0..n).filter(|&g| g != identity)).collect();
    for g in order {
        if class_of[g] != usize::MAX {
            continue;
        }
        let idx = classes.len();
        let mut class = Vec::new();
        for h in 0..n {
            let c = cayley[cayley[h][g]][inverses[h]];
            if class_of[c] == usize::MAX {
                class_of[c] = idx;
                class.push(c);
            }
        }
        class.sort_unstable();
        classes.push(class);
    }
    (classes, class_of)
}

/// A subgroup of a finite group, optionally twisted by a conjugator.
///
/// The twist realizes the orbit-category morphisms `gamma -> g gamma g^-1`;
/// restriction of class functions along the subgroup composes the plain
/// restriction with that conjugation.
#[derive(Clone, Debug)]
pub struct Subgroup {
    parent: FiniteGroup,
    members: Vec<usize>,
    conjugator: Option<usize>,
    /// The subgroup as a standalone group; `members[i]` is the parent index
    /// of its element `i`.
    group: FiniteGroup,
}

impl Subgroup {
    pub fn new(parent: &FiniteGroup, mut members: Vec<usize>, conjugator: Option<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if !members.contains(&parent.identity()) {
            return Err(Error::Contract("subgroup must contain the identity".into()));
        }
        for &a in &members {
            if a >= parent.order() {
                return Err(Error::Contract("subgroup member out of range".into()));
            }
            if !members.contains(&parent.inv(a)) {
                return Err(Error::Contract("subgroup not closed under inverse".into()));
            }
            for &b in &members {
                if !members.contains(&parent.mul(a, b)) {
                    return Err(Error::Contract("subgroup not closed under product".into()));
                }
            }
        }
        let index_of = |g: usize| members.binary_search(&g).unwrap();
        let m = members.len();
        let mut cayley = vec![vec![0usize; m]; m];
        for i in 0..m {
            for j in 0..m {
                cayley[i][j] = index_of(parent.mul(members[i], members[j]));
            }
        }
        let group = FiniteGroup::from_cayley(cayley)?;
        Ok(Subgroup { parent: parent.clone(), members, conjugator, group })
    }

    /// Subgroup generated by the given parent elements.
    pub fn generated(parent: &FiniteGroup, gens: &[usize]) -> Result<Self> {
        let mut members = vec![parent.identity()];
        let mut frontier = members.clone();
        while let Some(g) = frontier.pop() {
            for &s in gens {
                for x in [parent.mul(g, s), parent.mul(g, parent.inv(s))] {
                    if !members.contains(&x) {
                        members.push(x);
                        frontier.push(x);
                    }
                }
            }
        }
        Self::new(parent, members, None)
    }

    pub fn full(parent: &FiniteGroup) -> Result<Self> {
        Self::new(parent, (0..parent.order()).collect(), None)
    }

    pub fn trivial(parent: &FiniteGroup) -> Result<Self> {
        Self::new(parent, vec![parent.identity()], None)
    }

    pub fn parent(&self) -> &FiniteGroup {
        &self.parent
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, g: usize) -> bool {
        self.members.binary_search(&g).is_ok()
    }

    /// The subgroup as a group in its own right.
    pub fn as_group(&self) -> &FiniteGroup {
        &self.group
    }

    /// Parent index of subgroup element `i`, conjugated by the twist if set.
    pub fn embed(&self, i: usize) -> usize {
        let raw = self.members[i];
        match self.conjugator {
            Some(g) => self.parent.conj(raw, g),
            None => raw,
        }
    }

    pub fn is_normal(&self) -> bool {
        (0..self.parent.order())
            .all(|g| self.members.iter().all(|&h| self.contains(self.parent.conj(h, g))))
    }
}

/// A complex-valued conjugation-invariant function, stored per class.
#[derive(Clone, Debug)]
pub struct ClassFunction {
    group: FiniteGroup,
    values: Vec<C64>,
}

impl ClassFunction {
    pub fn new(group: &FiniteGroup, values: Vec<C64>) -> Result<Self> {
        if values.len() != group.class_count() {
            return Err(Error::Contract("one value per conjugacy class required".into()));
        }
        Ok(ClassFunction { group: group.clone(), values })
    }

    pub fn from_fn(group: &FiniteGroup, f: impl Fn(usize) -> C64) -> Self {
        let values = group.class_reps().iter().map(|&g| f(g)).collect();
        ClassFunction { group: group.clone(), values }
    }

    pub fn zero(group: &FiniteGroup) -> Self {
        ClassFunction { group: group.clone(), values: vec![C64::new(0.0, 0.0); group.class_count()] }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    /// Value on the class of element `g`.
    pub fn eval(&self, g: usize) -> C64 {
        self.values[self.group.class_of(g)]
    }

    pub fn class_values(&self) -> &[C64] {
        &self.values
    }

    /// Pointwise difference; groups must agree.
    pub fn sub(&self, other: &ClassFunction) -> ClassFunction {
        assert_eq!(self.values.len(), other.values.len());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        ClassFunction { group: self.group.clone(), values }
    }

    pub fn add(&self, other: &ClassFunction) -> ClassFunction {
        assert_eq!(self.values.len(), other.values.len());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        ClassFunction { group: self.group.clone(), values }
    }

    pub fn scale(&self, c: f64) -> ClassFunction {
        ClassFunction {
            group: self.group.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Normalized Hermitian pairing `(1/|G|) sum_g f(g) conj(h(g))`.
    pub fn pairing(&self, other: &ClassFunction) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (c, class) in self.group.conjugacy_classes().iter().enumerate() {
            acc += self.values[c] * other.values[c].conj() * (class.len() as f64);
        }
        acc / (self.group.order() as f64)
    }
}

/// An irreducible character together with its dimension.
#[derive(Clone, Debug)]
pub struct Irreducible {
    pub dimension: usize,
    pub character: ClassFunction,
}

/// A finite-dimensional unitary representation given by one operator per
/// group element.
#[derive(Clone, Debug)]
pub struct UnitaryRep {
    group: FiniteGroup,
    dim: usize,
    ops: Vec<CMatrix>,
}

impl UnitaryRep {
    pub fn new(group: &FiniteGroup, ops: Vec<CMatrix>) -> Result<Self> {
        if ops.len() != group.order() {
            return Err(Error::Contract("one operator per group element required".into()));
        }
        let dim = ops.first().map(|m| m.nrows()).unwrap_or(0);
        for m in &ops {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Contract("operators must be square of equal size".into()));
            }
        }
        let rep = UnitaryRep { group: group.clone(), dim, ops };
        rep.validate(EPS_ALG * 10.0)?;
        Ok(rep)
    }

    fn validate(&self, tol: f64) -> Result<()> {
        if self.dim == 0 {
            return Ok(());
        }
        let id = CMatrix::identity(self.dim, self.dim);
        for (g, m) in self.ops.iter().enumerate() {
            if linalg::frob(&(m * m.adjoint() - &id)) > tol * (self.dim as f64) {
                return Err(Error::Contract(format!("operator of element {g} is not unitary")));
            }
        }
        for g in 0..self.group.order() {
            for h in 0..self.group.order() {
                let gh = self.group.mul(g, h);
                if linalg::frob(&(&self.ops[g] * &self.ops[h] - &self.ops[gh]))
                    > tol * (self.dim.max(1) as f64)
                {
                    return Err(Error::Contract(format!(
                        "homomorphism property fails on ({g},{h})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn trivial(group: &FiniteGroup, dim: usize) -> Self {
        let ops = (0..group.order()).map(|_| CMatrix::identity(dim, dim)).collect();
        UnitaryRep { group: group.clone(), dim, ops }
    }

    /// The regular representation on `C^{|G|}` by left translation.
    pub fn regular(group: &FiniteGroup) -> Self {
        let n = group.order();
        let ops = (0..n)
            .map(|g| {
                let mut m = CMatrix::zeros(n, n);
                for h in 0..n {
                    m[(group.mul(g, h), h)] = C64::new(1.0, 0.0);
                }
                m
            })
            .collect();
        UnitaryRep { group: group.clone(), dim: n, ops }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn op(&self, g: usize) -> &CMatrix {
        &self.ops[g]
    }

    pub fn character(&self) -> ClassFunction {
        ClassFunction::from_fn(&self.group, |g| self.ops[g].trace())
    }

    pub fn direct_sum(&self, other: &UnitaryRep) -> UnitaryRep {
        assert!(self.group == other.group);
        let ops = (0..self.group.order())
            .map(|g| linalg::block_diag(&[self.ops[g].clone(), other.ops[g].clone()]))
            .collect();
        UnitaryRep { group: self.group.clone(), dim: self.dim + other.dim, ops }
    }

    /// Conjugated representation `u* rho(g) u` for unitary `u`.
    pub fn conjugate_by(&self, u: &CMatrix) -> UnitaryRep {
        let ops = (0..self.group.order()).map(|g| u.adjoint() * &self.ops[g] * u).collect();
        UnitaryRep { group: self.group.clone(), dim: self.dim, ops }
    }

    /// Restriction along a (possibly twisted) subgroup.
    pub fn restrict(&self, sub: &Subgroup) -> UnitaryRep {
        let g = sub.as_group().clone();
        let ops = (0..g.order()).map(|i| self.ops[sub.embed(i)].clone()).collect();
        UnitaryRep { group: g, dim: self.dim, ops }
    }
}

/// Conjugacy classes of `g`, exposed as an operation for the CLI and tests.
pub fn conjugacy_classes(group: &FiniteGroup) -> &[Vec<usize>] {
    group.conjugacy_classes()
}

/// Character table of a finite group of order at most
/// [`MAX_CHARACTER_TABLE_ORDER`].
///
/// Numerically diagonalizes a random Hermitian combination of the
/// weight-conjugated class-multiplication matrices; the common eigenbasis is
/// exactly the set of central characters, from which characters and
/// dimensions are read off. Row orthogonality and the dimension sum are
/// verified to `EPS_ALG`.
pub fn character_table(group: &FiniteGroup) -> Result<Vec<Irreducible>> {
    let n = group.order();
    if n > MAX_CHARACTER_TABLE_ORDER {
        return Err(Error::Contract(format!(
            "group order {n} exceeds character-table bound {MAX_CHARACTER_TABLE_ORDER}"
        )));
    }
    let classes = group.conjugacy_classes();
    let k = classes.len();
    let class_sizes: Vec<f64> = classes.iter().map(|c| c.len() as f64).collect();

    // Class multiplication coefficients a_{ijl}: C_i C_j = sum_l a_{ijl} C_l.
    let mut m_mats: Vec<CMatrix> = vec![CMatrix::zeros(k, k); k];
    for i in 0..k {
        for &x in &classes[i] {
            for (j, class_j) in classes.iter().enumerate() {
                for &y in class_j {
                    let l = group.class_of(group.mul(x, y));
                    // (M_i)_{j,l} accumulates a_{ijl} = #{(x,y)} / |class_l|
                    m_mats[i][(j, l)] += C64::new(1.0 / class_sizes[l], 0.0);
                }
            }
        }
    }

    // Conjugate by diag(1/sqrt(|class|)) so that the common eigenbasis is
    // orthonormal, then diagonalize a random Hermitian combination.
    let d: Vec<f64> = class_sizes.iter().map(|s| 1.0 / s.sqrt()).collect();
    let mut normals: Vec<CMatrix> = Vec::with_capacity(k);
    for m in &m_mats {
        let mut c = m.clone();
        for j in 0..k {
            for l in 0..k {
                c[(j, l)] *= C64::new(d[j] / d[l], 0.0);
            }
        }
        normals.push(c);
    }

    let mut last_residual = f64::INFINITY;
    for attempt in 0..8u64 {
        let mut rng = StdRng::seed_from_u64(0x7411 + attempt);
        let mut h = CMatrix::zeros(k, k);
        for m in &normals {
            let (r, s) = (rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            h += (m + m.adjoint()).scale(r);
            let anti = (m - m.adjoint()).scale(s);
            h += anti.map(|z| C64::new(z.im, -z.re));
        }
        let (_, q) = linalg::herm_eig(&h);
        // Verify the columns are common eigenvectors of every class matrix.
        let mut residual: f64 = 0.0;
        for m in &normals {
            let mq = m * &q;
            for c in 0..k {
                let col = q.column(c);
                let lam = col.dotc(&mq.column(c));
                let diff = mq.column(c) - col.scale(1.0) * lam;
                residual = residual.max(diff.norm());
            }
        }
        last_residual = residual;
        if residual > 1e-7 {
            continue;
        }
        if let Ok(table) = assemble_table(group, &q, &class_sizes) {
            return Ok(table);
        }
    }
    Err(Error::Diagnostics(format!(
        "class-matrix diagonalization degenerate; residual {last_residual:.3e}"
    )))
}

fn assemble_table(
    group: &FiniteGroup,
    q: &CMatrix,
    class_sizes: &[f64],
) -> Result<Vec<Irreducible>> {
    let n = group.order() as f64;
    let k = class_sizes.len();
    let mut irreducibles = Vec::with_capacity(k);
    for c in 0..k {
        // Central character u_l = |class_l| chi(g_l) / chi(1).
        let mut u: Vec<C64> = (0..k).map(|l| q[(l, c)] * class_sizes[l].sqrt()).collect();
        let u0 = u[0];
        if u0.norm() < 1e-10 {
            return Err(Error::Diagnostics("central character vanishes at identity".into()));
        }
        for v in u.iter_mut() {
            *v /= u0;
        }
        let norm_sq: f64 = (0..k).map(|l| u[l].norm_sqr() / class_sizes[l]).sum();
        let dim_f = (n / norm_sq).sqrt();
        let dim = dim_f.round();
        if (dim_f - dim).abs() > 1e-6 || dim < 1.0 {
            return Err(Error::Diagnostics(format!("non-integral dimension {dim_f}")));
        }
        let values: Vec<C64> = (0..k).map(|l| u[l] * (dim / class_sizes[l])).collect();
        irreducibles.push(Irreducible {
            dimension: dim as usize,
            character: ClassFunction::new(group, values)?,
        });
    }
    // Deterministic order: by dimension, then by character values.
    irreducibles.sort_by(|a, b| {
        a.dimension.cmp(&b.dimension).then_with(|| {
            for (x, y) in a.character.values.iter().zip(&b.character.values) {
                let o = (x.re, x.im)
                    .partial_cmp(&(y.re, y.im))
                    .unwrap_or(std::cmp::Ordering::Equal);
                if o != std::cmp::Ordering::Equal
                    && (x - y).norm() > 1e-7
                {
                    return o;
                }
            }
            std::cmp::Ordering::Equal
        })
    });
    let dim_sum: usize = irreducibles.iter().map(|p| p.dimension * p.dimension).sum();
    if dim_sum != group.order() {
        return Err(Error::Diagnostics(format!(
            "sum of squared dimensions {dim_sum} != group order {}",
            group.order()
        )));
    }
    for (i, a) in irreducibles.iter().enumerate() {
        for (j, b) in irreducibles.iter().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            let p = a.character.pairing(&b.character);
            if (p - C64::new(delta, 0.0)).norm() > EPS_ALG {
                return Err(Error::Diagnostics(format!(
                    "orthogonality failure between irreducibles {i} and {j}: {p}"
                )));
            }
        }
    }
    Ok(irreducibles)
}

/// Isotypic projector `P_pi = (dim pi / |G|) sum_g conj(chi_pi(g)) rho(g)`.
pub fn isotypic_projector(rep: &UnitaryRep, pi: &Irreducible) -> Result<CMatrix> {
    if !(rep.group() == pi.character.group()) {
        return Err(Error::Contract("representation and irreducible live on different groups".into()));
    }
    let n = rep.group().order() as f64;
    let mut p = CMatrix::zeros(rep.dim(), rep.dim());
    for g in 0..rep.group().order() {
        p += rep.op(g).scale(1.0) * (pi.character.eval(g).conj() * (pi.dimension as f64) / n);
    }
    Ok(p)
}

/// Restriction of a class function along a (possibly twisted) subgroup
/// inclusion: `(C(i) f)(gamma) = f(g gamma g^-1)`.
pub fn restrict_class_function(f: &ClassFunction, sub: &Subgroup) -> Result<ClassFunction> {
    if !(f.group() == sub.parent()) {
        return Err(Error::Contract("class function lives on a different group".into()));
    }
    let g = sub.as_group();
    Ok(ClassFunction::from_fn(g, |i| f.eval(sub.embed(i))))
}

/// Quotient group `G / N` for a normal subgroup, together with the coset map.
pub fn quotient_group(group: &FiniteGroup, normal: &Subgroup) -> Result<(FiniteGroup, Vec<usize>)> {
    if !normal.is_normal() {
        return Err(Error::Contract("subgroup is not normal".into()));
    }
    let n = group.order();
    let mut coset_of = vec![usize::MAX; n];
    let mut reps: Vec<usize> = Vec::new();
    for g in 0..n {
        if coset_of[g] != usize::MAX {
            continue;
        }
        let idx = reps.len();
        reps.push(g);
        for &h in normal.members() {
            coset_of[group.mul(g, h)] = idx;
        }
    }
    let m = reps.len();
    let mut cayley = vec![vec![0usize; m]; m];
    for i in 0..m {
        for j in 0..m {
            cayley[i][j] = coset_of[group.mul(reps[i], reps[j])];
        }
    }
    Ok((FiniteGroup::from_cayley(cayley)?, coset_of))
}

/// Canonical representative of the class of `f` in the quotient of class
/// functions by pullbacks from `G / N`.
///
/// Projects `f`, with respect to the counting-measure inner product on group
/// elements, onto the orthogonal complement of the subspace of class
/// functions that are constant on `N`-cosets.
pub fn hat_project(f: &ClassFunction, normal: &Subgroup) -> Result<ClassFunction> {
    if !(f.group() == normal.parent()) {
        return Err(Error::Contract("class function lives on a different group".into()));
    }
    let group = f.group().clone();
    let n = group.order();
    let (quot, coset_of) = quotient_group(&group, normal)?;
    // Pullback basis: indicator of each conjugacy class of the quotient.
    let k = quot.class_count();
    let mut basis = CMatrix::zeros(n, k);
    for g in 0..n {
        basis[(g, quot.class_of(coset_of[g]))] = C64::new(1.0, 0.0);
    }
    let fvec = DVector::from_fn(n, |g, _| f.eval(g));
    let coeff = linalg::lstsq(&basis, &CMatrix::from_column_slice(n, 1, fvec.as_slice()), 1e-12);
    let pullback = &basis * coeff;
    let residual = DVector::from_fn(n, |g, _| fvec[g] - pullback[(g, 0)]);
    Ok(ClassFunction::from_fn(&group, |g| residual[g]))
}

/// Pseudo-random unitary representation of the requested dimension.
///
/// Takes a random equivariant Hermitian operator on the regular
/// representation (Reynolds average of a random Hermitian matrix); its
/// eigenspaces are invariant subspaces, generically irreducible. A random
/// selection of eigenspaces totalling `dim` is compressed to a
/// representation and hidden behind a random unitary change of basis.
/// Deterministic in the seed.
pub fn random_unitary_rep(group: &FiniteGroup, dim: usize, seed: u64) -> Result<UnitaryRep> {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
    let n = group.order();
    if dim == 0 {
        return Ok(UnitaryRep { group: group.clone(), dim: 0, ops: vec![CMatrix::zeros(0, 0); n] });
    }
    let reg = UnitaryRep::regular(group);
    let raw = CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let herm = (&raw + raw.adjoint()).scale(0.5);
    let mut avg = CMatrix::zeros(n, n);
    for g in 0..n {
        avg += reg.op(g) * &herm * reg.op(group.inv(g));
    }
    avg /= C64::new(n as f64, 0.0);
    let (evs, q) = linalg::herm_eig(&avg);
    // Cluster nearly equal eigenvalues; each cluster spans a submodule.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| evs[a].partial_cmp(&evs[b]).unwrap());
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match clusters.last_mut() {
            Some(c) if (evs[i] - evs[c[0]]).abs() < 1e-7 => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let cluster_ops: Vec<Vec<CMatrix>> = clusters
        .iter()
        .map(|c| {
            let mut basis = CMatrix::zeros(n, c.len());
            for (col, &i) in c.iter().enumerate() {
                basis.set_column(col, &q.column(i));
            }
            (0..n).map(|g| basis.adjoint() * reg.op(g) * &basis).collect()
        })
        .collect();
    // Random multiset of clusters summing to `dim` (repetition allowed).
    for _ in 0..200 {
        let mut picked: Vec<usize> = Vec::new();
        let mut total = 0usize;
        while total < dim {
            let candidates: Vec<usize> = (0..clusters.len())
                .filter(|&j| clusters[j].len() <= dim - total)
                .collect();
            if candidates.is_empty() {
                break;
            }
            let j = candidates[rng.gen_range(0..candidates.len())];
            picked.push(j);
            total += clusters[j].len();
        }
        if total != dim {
            continue;
        }
        let ops: Vec<CMatrix> = (0..n)
            .map(|g| {
                linalg::block_diag(
                    &picked.iter().map(|&j| cluster_ops[j][g].clone()).collect::<Vec<_>>(),
                )
            })
            .collect();
        let raw_u = CMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let u = linalg::colspace_onb(&raw_u, 1e-12);
        let rep = UnitaryRep { group: group.clone(), dim, ops };
        let rep = rep.conjugate_by(&u);
        if rep.validate(1e-8).is_ok() {
            return Ok(rep);
        }
    }
    Err(Error::Diagnostics(format!(
        "could not assemble a random representation of dimension {dim}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn cyclic_classes_are_singletons() {
        let g = FiniteGroup::cyclic(3).unwrap();
        assert_eq!(g.conjugacy_classes().len(), 3);
        assert!(g.conjugacy_classes().iter().all(|c| c.len() == 1));
        let t = FiniteGroup::trivial().unwrap();
        assert_eq!(t.conjugacy_classes().len(), 1);
    }

    #[test]
    fn s3_classes_match_brute_force() {
        let g = FiniteGroup::symmetric(3).unwrap();
        assert_eq!(g.order(), 6);
        // independent oracle: orbits of conjugation computed pairwise
        let mut sizes: Vec<usize> = Vec::new();
        let mut seen = vec![false; 6];
        for x in 0..6 {
            if seen[x] {
                continue;
            }
            let mut orbit: Vec<usize> = (0..6).map(|h| g.conj(x, h)).collect();
            orbit.sort_unstable();
            orbit.dedup();
            for &y in &orbit {
                seen[y] = true;
            }
            sizes.push(orbit.len());
        }
        sizes.sort_unstable();
        let mut got: Vec<usize> = g.conjugacy_classes().iter().map(|c| c.len()).collect();
        got.sort_unstable();
        assert_eq!(sizes, vec![1, 2, 3]);
        assert_eq!(got, sizes);
    }

    #[test]
    fn cyclic_character_table_closed_form() {
        for n in [1usize, 2, 3, 4, 6] {
            let g = FiniteGroup::cyclic(n).unwrap();
            let table = character_table(&g).unwrap();
            assert_eq!(table.len(), n);
            assert!(table.iter().all(|p| p.dimension == 1));
            // every closed-form character e^{2 pi i jk/n} appears
            for k in 0..n {
                let found = table.iter().any(|p| {
                    (0..n).all(|j| {
                        let expect =
                            C64::from_polar(1.0, 2.0 * PI * (j * k) as f64 / n as f64);
                        (p.character.eval(j) - expect).norm() < 1e-8
                    })
                });
                assert!(found, "missing character k={k} of Z_{n}");
            }
        }
    }

    #[test]
    fn s3_character_table() {
        let g = FiniteGroup::symmetric(3).unwrap();
        let table = character_table(&g).unwrap();
        let mut dims: Vec<usize> = table.iter().map(|p| p.dimension).collect();
        dims.sort_unstable();
        assert_eq!(dims, vec![1, 1, 2]);
        // standard table values on class representatives, up to row order
        for p in &table {
            let vals: Vec<f64> = g.class_reps().iter().map(|&r| p.character.eval(r).re).collect();
            for v in g.class_reps().iter().map(|&r| p.character.eval(r).im) {
                assert!(v.abs() < 1e-9);
            }
            let id_val = p.character.eval(g.identity()).re;
            assert!((id_val - p.dimension as f64).abs() < 1e-9);
            let _ = vals;
        }
    }

    #[test]
    fn s4_and_dihedral_tables_are_consistent() {
        for g in [FiniteGroup::symmetric(4).unwrap(), FiniteGroup::dihedral(4).unwrap()] {
            let table = character_table(&g).unwrap();
            let sum: usize = table.iter().map(|p| p.dimension * p.dimension).sum();
            assert_eq!(sum, g.order());
        }
    }

    #[test]
    fn projector_trivial_group_is_identity() {
        let g = FiniteGroup::trivial().unwrap();
        let table = character_table(&g).unwrap();
        let rep = UnitaryRep::trivial(&g, 3);
        let p = isotypic_projector(&rep, &table[0]).unwrap();
        assert!(linalg::frob(&(p - CMatrix::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn projector_regular_z2_sign_component() {
        let g = FiniteGroup::cyclic(2).unwrap();
        let table = character_table(&g).unwrap();
        let sign = table
            .iter()
            .find(|p| (p.character.eval(1) - c(-1.0, 0.0)).norm() < 1e-9)
            .unwrap();
        let reg = UnitaryRep::regular(&g);
        let p = isotypic_projector(&reg, sign).unwrap();
        // rank-1 projector onto (1,-1)/sqrt(2)
        let expect = CMatrix::from_row_slice(2, 2, &[
            c(0.5, 0.0), c(-0.5, 0.0),
            c(-0.5, 0.0), c(0.5, 0.0),
        ]);
        assert!(linalg::frob(&(p - expect)) < 1e-10);
        // trivial rep has no sign component
        let triv = UnitaryRep::trivial(&g, 2);
        let p0 = isotypic_projector(&triv, sign).unwrap();
        assert!(linalg::frob(&p0) < 1e-10);
    }

    #[test]
    fn projectors_resolve_identity_on_random_reps() {
        for (gi, g) in [
            FiniteGroup::cyclic(4).unwrap(),
            FiniteGroup::symmetric(3).unwrap(),
            FiniteGroup::dihedral(4).unwrap(),
        ]
        .iter()
        .enumerate()
        {
            let table = character_table(g).unwrap();
            for dim in [3usize, 7, 12] {
                let rep = random_unitary_rep(g, dim, 100 + gi as u64 * 7 + dim as u64).unwrap();
                let mut sum = CMatrix::zeros(dim, dim);
                for p in &table {
                    let proj = isotypic_projector(&rep, p).unwrap();
                    // idempotent, self-adjoint, commutes with the action
                    assert!(linalg::frob(&(&proj * &proj - &proj)) < 1e-8);
                    assert!(linalg::frob(&(&proj - proj.adjoint())) < 1e-8);
                    for g_el in 0..g.order() {
                        let comm = &proj * rep.op(g_el) - rep.op(g_el) * &proj;
                        assert!(linalg::frob(&comm) < 1e-8);
                    }
                    sum += proj;
                }
                assert!(linalg::frob(&(sum - CMatrix::identity(dim, dim))) < 1e-9);
            }
        }
    }

    #[test]
    fn restriction_z2_in_z4_gives_sign() {
        let z4 = FiniteGroup::cyclic(4).unwrap();
        let table = character_table(&z4).unwrap();
        let chi1 = table
            .iter()
            .find(|p| (p.character.eval(1) - c(0.0, 1.0)).norm() < 1e-9)
            .unwrap();
        let sub = Subgroup::generated(&z4, &[2]).unwrap();
        let restricted = restrict_class_function(&chi1.character, &sub).unwrap();
        // {0,2} -> chi1 takes values 1, -1
        assert!((restricted.eval(0) - c(1.0, 0.0)).norm() < 1e-9);
        assert!((restricted.eval(1) - c(-1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn restriction_identity_and_constant() {
        let g = FiniteGroup::symmetric(3).unwrap();
        let f = ClassFunction::from_fn(&g, |x| c(x as f64, 0.0));
        let full = Subgroup::full(&g).unwrap();
        let r = restrict_class_function(&f, &full).unwrap();
        for x in 0..g.order() {
            assert!((r.eval(x) - f.eval(x)).norm() < 1e-12);
        }
        let constant = ClassFunction::from_fn(&g, |_| c(2.5, 0.0));
        let sub = Subgroup::generated(&g, &[1]).unwrap();
        let rc = restrict_class_function(&constant, &sub).unwrap();
        assert!(rc.class_values().iter().all(|v| (v - c(2.5, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn restriction_functorial_along_chain() {
        // Z2 inside Z4 inside Z8: restricting twice equals restricting once.
        let z8 = FiniteGroup::cyclic(8).unwrap();
        let f = ClassFunction::from_fn(&z8, |x| c((x * x) as f64, x as f64));
        let z4 = Subgroup::generated(&z8, &[2]).unwrap();
        let f4 = restrict_class_function(&f, &z4).unwrap();
        let z2_in_z4 = Subgroup::generated(z4.as_group(), &[2]).unwrap();
        let f2_via_z4 = restrict_class_function(&f4, &z2_in_z4).unwrap();
        let z2 = Subgroup::generated(&z8, &[4]).unwrap();
        let f2 = restrict_class_function(&f, &z2).unwrap();
        for i in 0..2 {
            assert!((f2.eval(i) - f2_via_z4.eval(i)).norm() < 1e-12);
        }
    }

    #[test]
    fn hat_project_cases() {
        let z4 = FiniteGroup::cyclic(4).unwrap();
        // trivial normal subgroup: everything is a pullback, output 0
        let f = ClassFunction::from_fn(&z4, |x| c(x as f64, 0.0));
        let triv = Subgroup::trivial(&z4).unwrap();
        let out = hat_project(&f, &triv).unwrap();
        assert!(out.max_abs() < 1e-10);
        // pullback from Z4/Z2 maps to 0
        let z2 = Subgroup::generated(&z4, &[2]).unwrap();
        let pullback = ClassFunction::from_fn(&z4, |x| c(if x % 2 == 0 { 1.0 } else { 3.0 }, 0.0));
        let out = hat_project(&pullback, &z2).unwrap();
        assert!(out.max_abs() < 1e-10);
        // chi_1 of Z4 is orthogonal to pullbacks: fixed by the projection
        let table = character_table(&z4).unwrap();
        let chi1 = table
            .iter()
            .find(|p| (p.character.eval(1) - c(0.0, 1.0)).norm() < 1e-9)
            .unwrap();
        let out = hat_project(&chi1.character, &z2).unwrap();
        assert!(out.sub(&chi1.character).max_abs() < 1e-9);
        // idempotent
        let mixed = ClassFunction::from_fn(&z4, |x| c(x as f64 * 1.3, -(x as f64)));
        let once = hat_project(&mixed, &z2).unwrap();
        let twice = hat_project(&once, &z2).unwrap();
        assert!(once.sub(&twice).max_abs() < 1e-9);
    }

    #[test]
    fn hat_project_rank_counts_classes() {
        // rank of the projection = #classes(G) - #classes(G/N)
        let g = FiniteGroup::dihedral(4).unwrap();
        // center of D4 is {e, r^2}; find it as a normal subgroup of order 2
        let center: Vec<usize> = (0..g.order())
            .filter(|&z| (0..g.order()).all(|h| g.mul(z, h) == g.mul(h, z)))
            .collect();
        assert_eq!(center.len(), 2);
        let n = Subgroup::new(&g, center, None).unwrap();
        let (quot, _) = quotient_group(&g, &n).unwrap();
        let mut rank = 0usize;
        for cidx in 0..g.class_count() {
            let mut vals = vec![C64::new(0.0, 0.0); g.class_count()];
            vals[cidx] = C64::new(1.0, 0.0);
            let f = ClassFunction::new(&g, vals).unwrap();
            let h = hat_project(&f, &n).unwrap();
            if h.max_abs() > 1e-8 {
                rank += 1;
            }
        }
        // D4 has 5 classes, quotient (Klein four) has 4
        assert_eq!(g.class_count() - quot.class_count(), 5 - 4);
        assert!(rank >= g.class_count() - quot.class_count());
    }

    #[test]
    fn non_normal_subgroup_rejected() {
        let s3 = FiniteGroup::symmetric(3).unwrap();
        // a transposition generates a non-normal Z2
        let transposition = (1..6).find(|&x| s3.element_order(x) == 2).unwrap();
        let sub = Subgroup::generated(&s3, &[transposition]).unwrap();
        let f = ClassFunction::from_fn(&s3, |x| c(x as f64, 0.0));
        assert!(matches!(hat_project(&f, &sub), Err(Error::Contract(_))));
    }

    #[test]
    fn malformed_cayley_rejected() {
        assert!(FiniteGroup::from_cayley(vec![vec![0, 1], vec![0, 1]]).is_err());
        assert!(FiniteGroup::from_cayley(vec![vec![1]]).is_err());
    }
}
