//! Dense complex linear algebra helpers used throughout the crate.
//!
//! Everything is plain `nalgebra` over `Complex<f64>`; subspaces are always
//! handled as matrices with orthonormal columns so that projections and
//! quotient models (orthogonal complements) stay numerically tame.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn cone() -> C64 {
    C64::new(1.0, 0.0)
}

/// Frobenius norm.
pub fn frob(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// One-sided Jacobi SVD, `a = u diag(sv) v*`.
///
/// `v` is a full `n x n` unitary, `sv` has length `n` sorted descending, and
/// `u` is `m x n` with orthonormal columns wherever `sv > 0` (zero columns
/// for vanishing singular values). Hand-rolled because the library complex
/// SVD is unreliable on rank-deficient input; Jacobi is slow but gives high
/// relative accuracy.
pub fn svd_onesided(a: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let (m, n) = (a.nrows(), a.ncols());
    let mut b = a.clone();
    let mut v = CMatrix::identity(n, n);
    // columns this far below the matrix scale are numerically zero; rotating
    // them risks subnormal garbage in the phase factor
    let floor = 1e-120 * a.iter().map(|z| z.norm_sqr()).sum::<f64>().max(f64::MIN_POSITIVE);
    for _sweep in 0..128 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = czero();
                for k in 0..m {
                    alpha += b[(k, i)].norm_sqr();
                    beta += b[(k, j)].norm_sqr();
                    gamma += b[(k, i)].conj() * b[(k, j)];
                }
                let gn = gamma.norm();
                if gn <= 1e-15 * (alpha * beta).sqrt() || alpha <= floor || beta <= floor {
                    continue;
                }
                rotated = true;
                // de-phase column j so the pair Gram matrix is real, then a
                // classic real Jacobi rotation
                let phase_conj = (gamma / gn).conj();
                let tau = (beta - alpha) / (2.0 * gn);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let bi = b[(k, i)];
                    let bj = b[(k, j)] * phase_conj;
                    b[(k, i)] = bi.scale(c) - bj.scale(s);
                    b[(k, j)] = bi.scale(s) + bj.scale(c);
                }
                for k in 0..n {
                    let vi = v[(k, i)];
                    let vj = v[(k, j)] * phase_conj;
                    v[(k, i)] = vi.scale(c) - vj.scale(s);
                    v[(k, j)] = vi.scale(s) + vj.scale(c);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| b.column(j).norm()).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());
    let mut u = CMatrix::zeros(m, n);
    let mut v_sorted = CMatrix::zeros(n, n);
    let mut sv = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sv.push(s);
        v_sorted.set_column(dst, &v.column(src));
        if s > 0.0 {
            let col = b.column(src).clone_owned().scale(1.0 / s);
            u.set_column(dst, &col);
        }
    }
    (u, sv, v_sorted)
}

/// Largest singular value, or 0 for an empty matrix.
pub fn opnorm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Singular values, descending, `min(nrows, ncols)` of them.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let (_, mut sv, _) = svd_onesided(m);
    sv.truncate(m.nrows().min(m.ncols()));
    sv
}

/// Orthonormal basis of the column space, keeping singular directions with
/// `sigma > tol * sigma_max` (absolute `tol` when the matrix is zero).
pub fn colspace_onb(m: &CMatrix, tol: f64) -> CMatrix {
    if m.nrows() == 0 || m.ncols() == 0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let (u, sv, _) = svd_onesided(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    let cutoff = if smax > 0.0 { tol * smax } else { tol };
    let k = sv.iter().take_while(|&&s| s > cutoff).count();
    u.columns(0, k).clone_owned()
}

/// Orthonormal basis of the null space of `m`.
pub fn nullspace_onb(m: &CMatrix, tol: f64) -> CMatrix {
    if m.ncols() == 0 {
        return CMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return CMatrix::identity(m.ncols(), m.ncols());
    }
    let (_, sv, v) = svd_onesided(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    let cutoff = if smax > 0.0 { tol * smax } else { tol };
    let k = sv.iter().take_while(|&&s| s > cutoff).count();
    v.columns(k, m.ncols() - k).clone_owned()
}

/// Orthogonal projector onto the span of the orthonormal columns `q`.
pub fn projector(q: &CMatrix) -> CMatrix {
    q * q.adjoint()
}

/// Orthonormal basis of `span(a) ∩ span(b)^perp`, where `a` and `b` have
/// orthonormal columns. This is the concrete model of the quotient
/// `span(a)/span(b)` when `span(b) ⊆ span(a)`.
pub fn complement_within(a: &CMatrix, b: &CMatrix, tol: f64) -> CMatrix {
    if a.ncols() == 0 {
        return a.clone();
    }
    let residual = a - b * (b.adjoint() * a);
    // the inputs are orthonormal, so the residual's singular values are at
    // most 1 and an absolute cutoff is meaningful (a relative one would
    // inflate the rank of a numerically zero residual)
    let (u, sv, _) = svd_onesided(&residual);
    let cutoff = tol.max(1e-10);
    let k = sv.iter().take_while(|&&s| s > cutoff).count();
    u.columns(0, k).clone_owned()
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq(a: &CMatrix, b: &CMatrix, tol: f64) -> CMatrix {
    if a.ncols() == 0 {
        return CMatrix::zeros(0, b.ncols());
    }
    if a.nrows() == 0 {
        return CMatrix::zeros(a.ncols(), b.ncols());
    }
    let (u, sv, v) = svd_onesided(a);
    let smax = sv.first().copied().unwrap_or(0.0);
    let cutoff = if smax > 0.0 { tol * smax } else { f64::INFINITY };
    let mut core = u.adjoint() * b;
    for (i, &s) in sv.iter().enumerate() {
        let f = if s > cutoff { 1.0 / s } else { 0.0 };
        for j in 0..core.ncols() {
            core[(i, j)] *= C64::new(f, 0.0);
        }
    }
    v * core
}

/// Logarithm of a positive-definite Hermitian matrix.
///
/// Returns the log together with the smallest eigenvalue encountered, so the
/// caller can enforce its own singularity cutoff.
pub fn herm_log(m: &CMatrix) -> (CMatrix, f64) {
    let n = m.nrows();
    if n == 0 {
        return (m.clone(), f64::INFINITY);
    }
    let (evs, q) = herm_eig(m);
    let mut lambda_min = f64::INFINITY;
    let mut diag = CMatrix::zeros(n, n);
    for (i, &ev) in evs.iter().enumerate() {
        lambda_min = lambda_min.min(ev);
        diag[(i, i)] = C64::new(ev.max(f64::MIN_POSITIVE).ln(), 0.0);
    }
    (&q * diag * q.adjoint(), lambda_min)
}

/// Eigendecomposition of a Hermitian matrix: `(eigenvalues, unitary)`, by
/// cyclic complex Jacobi. Eigenvalues come out in descending order.
pub fn herm_eig(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), m.clone());
    }
    let mut a = (m + m.adjoint()).scale(0.5);
    let mut q = CMatrix::identity(n, n);
    let scale = frob(&a).max(f64::MIN_POSITIVE);
    for _ in 0..128 {
        let mut off = 0.0;
        for p in 0..n {
            for r in (p + 1)..n {
                off += a[(p, r)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for r in (p + 1)..n {
                let gamma = a[(p, r)];
                let gn = gamma.norm();
                if gn <= 1e-18 * scale {
                    continue;
                }
                // de-phase the pivot, then a real Jacobi rotation
                let phi = gamma.unscale(gn);
                let alpha = a[(p, p)].re;
                let beta = a[(r, r)].re;
                let tau = (beta - alpha) / (2.0 * gn);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // unitary J = 1 outside {p,r}; on the pair,
                // [[c, s], [-s conj(phi), c conj(phi)]]
                let jpp = C64::new(c, 0.0);
                let jpr = C64::new(s, 0.0);
                let jrp = phi.conj().scale(-s);
                let jrr = phi.conj().scale(c);
                for i in 0..n {
                    let (x, y) = (a[(i, p)], a[(i, r)]);
                    a[(i, p)] = x * jpp + y * jrp;
                    a[(i, r)] = x * jpr + y * jrr;
                    let (x, y) = (q[(i, p)], q[(i, r)]);
                    q[(i, p)] = x * jpp + y * jrp;
                    q[(i, r)] = x * jpr + y * jrr;
                }
                for i in 0..n {
                    let (x, y) = (a[(p, i)], a[(r, i)]);
                    a[(p, i)] = jpp.conj() * x + jrp.conj() * y;
                    a[(r, i)] = jpr.conj() * x + jrr.conj() * y;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let evs: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let q = CMatrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    (evs, q)
}

/// Log-determinant `log |det(m)|` accumulated over singular values.
///
/// Returns an error-free pair `(logdet, smallest_relative_sv)`.
pub fn logabsdet(m: &CMatrix) -> (f64, f64) {
    let sv = singular_values(m);
    if sv.is_empty() {
        return (0.0, f64::INFINITY);
    }
    let smax = sv[0];
    let mut acc = 0.0;
    for &s in &sv {
        acc += s.max(f64::MIN_POSITIVE).ln();
    }
    let rel = if smax > 0.0 {
        sv[sv.len() - 1] / smax
    } else {
        0.0
    };
    (acc, rel)
}

/// Hermitian inner-product Gram matrix `a* b` convenience.
pub fn gram(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.adjoint() * b
}

/// Cholesky-like factor `l` with `m = l l*` for Hermitian positive-definite `m`.
pub fn herm_sqrt(m: &CMatrix) -> CMatrix {
    let (evs, q) = herm_eig(m);
    let n = m.nrows();
    let mut diag = CMatrix::zeros(n, n);
    for i in 0..n {
        diag[(i, i)] = C64::new(evs[i].max(0.0).sqrt(), 0.0);
    }
    &q * diag * q.adjoint()
}

/// Inverse of the Hermitian square root, for metric orthonormalization.
pub fn herm_inv_sqrt(m: &CMatrix) -> CMatrix {
    let (evs, q) = herm_eig(m);
    let n = m.nrows();
    let mut diag = CMatrix::zeros(n, n);
    for i in 0..n {
        diag[(i, i)] = C64::new(1.0 / evs[i].max(f64::MIN_POSITIVE).sqrt(), 0.0);
    }
    &q * diag * q.adjoint()
}

/// Direct sum of square blocks.
pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let m: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(n, m);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng, n: usize, m: usize) -> CMatrix {
        CMatrix::from_fn(n, m, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    #[test]
    fn colspace_and_nullspace_dimensions() {
        let mut rng = StdRng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 6, 3);
        let b = random_matrix(&mut rng, 3, 5);
        let m = &a * &b; // rank 3 generically
        let col = colspace_onb(&m, 1e-10);
        let nul = nullspace_onb(&m, 1e-10);
        assert_eq!(col.ncols(), 3);
        assert_eq!(nul.ncols(), 2);
        assert!(frob(&(&m * &nul)) < 1e-9);
        let qtq = col.adjoint() * &col;
        assert!(frob(&(qtq - CMatrix::identity(3, 3))) < 1e-10);
    }

    #[test]
    fn herm_log_inverts_exp() {
        let mut rng = StdRng::seed_from_u64(8);
        let a = random_matrix(&mut rng, 4, 4);
        let pos = &a * a.adjoint() + CMatrix::identity(4, 4);
        let (log, lmin) = herm_log(&pos);
        assert!(lmin >= 1.0 - 1e-9);
        // exp via eigen of log
        let (evs, q) = herm_eig(&log);
        let mut d = CMatrix::zeros(4, 4);
        for i in 0..4 {
            d[(i, i)] = C64::new(evs[i].exp(), 0.0);
        }
        let back = &q * d * q.adjoint();
        assert!(frob(&(back - pos)) < 1e-8);
    }

    #[test]
    fn lstsq_solves_consistent_system() {
        let mut rng = StdRng::seed_from_u64(9);
        let a = random_matrix(&mut rng, 5, 3);
        let x = random_matrix(&mut rng, 3, 2);
        let b = &a * &x;
        let sol = lstsq(&a, &b, 1e-12);
        assert!(frob(&(&a * sol - b)) < 1e-9);
    }
}

#[cfg(test)]
mod svd_tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn onesided_svd_reconstructs_rank_deficient_matrices() {
        let mut rng = StdRng::seed_from_u64(1);
        for trial in 0..100 {
            let (m, n, r) = (2 + trial % 5, 2 + (trial / 5) % 5, 1 + trial % 3);
            let a = CMatrix::from_fn(m, r, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let b = CMatrix::from_fn(r, n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let prod = &a * &b;
            let (u, sv, v) = svd_onesided(&prod);
            let mut sig = CMatrix::zeros(n, n);
            for (i, &s) in sv.iter().enumerate() {
                sig[(i, i)] = C64::new(s, 0.0);
            }
            let rec = &u * sig * v.adjoint();
            assert!(frob(&(rec - &prod)) < 1e-10, "trial {trial}");
            assert!(frob(&(v.adjoint() * &v - CMatrix::identity(n, n))) < 1e-10, "trial {trial}");
            // descending order
            for w in sv.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn onesided_svd_handles_projectors() {
        let mut rng = StdRng::seed_from_u64(2);
        for trial in 0..100 {
            let n = 4;
            let m = CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let v0 = m.column(0).clone_owned();
            let v0 = v0.scale(1.0 / v0.norm());
            let p = &v0 * v0.adjoint();
            let bv = colspace_onb(&p, 1e-9);
            assert_eq!(bv.ncols(), 1, "trial {trial}");
            assert!(frob(&(&p * &bv - &bv)) < 1e-12, "trial {trial}");
            let ns = nullspace_onb(&p, 1e-9);
            assert_eq!(ns.ncols(), n - 1);
            assert!(frob(&(&p * &ns)) < 1e-12);
        }
    }

    // heavily clustered spectra tripped up the library eigensolver; keep the
    // Jacobi version honest there
    #[test]
    fn herm_eig_accurate_on_degenerate_spectra() {
        let mut rng = StdRng::seed_from_u64(3);
        for trial in 0..50 {
            let n = 8;
            let m = CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let (_, q) = herm_eig(&(&m + m.adjoint()));
            // eigenvalues 2, 2, 2, 2, 5, 5, 5, 5 in a random unitary frame
            let mut d = CMatrix::zeros(n, n);
            for i in 0..n {
                d[(i, i)] = C64::new(if i < 4 { 2.0 } else { 5.0 }, 0.0);
            }
            let a = &q * &d * q.adjoint();
            let (evs, w) = herm_eig(&a);
            let mut dd = CMatrix::zeros(n, n);
            for i in 0..n {
                dd[(i, i)] = C64::new(evs[i], 0.0);
            }
            assert!(frob(&(&w * &dd * w.adjoint() - &a)) < 1e-12, "trial {trial}");
            assert!(frob(&(w.adjoint() * &w - CMatrix::identity(n, n))) < 1e-12, "trial {trial}");
            for (i, &e) in evs.iter().enumerate() {
                let want = if i < 4 { 5.0 } else { 2.0 };
                assert!((e - want).abs() < 1e-12, "trial {trial} ev {e}");
            }
        }
    }
}
