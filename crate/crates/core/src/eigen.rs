//! Complex Hermitian eigendecomposition.
//!
//! Householder reduction to Hermitian tridiagonal form, a diagonal phase
//! transform making the subdiagonal real non-negative, then implicit-shift
//! QL iterations on the real tridiagonal with the rotations accumulated
//! into the complex transform. Eigenpairs are returned sorted by ascending
//! eigenvalue.
//!
//! Exists because the general-purpose decomposition this crate previously
//! leaned on mispairs eigenvectors across degenerate clusters of complex
//! Hermitian matrices, silently breaking `V Λ V† = M`; the models here are
//! permutation symmetric, so exact degeneracies are the common case, not
//! the exception.

use crate::error::{MagnusError, Result};
use crate::{C64, CMat, RVec};

/// Eigenvalues (ascending) and matching orthonormal eigenvectors (columns).
pub struct HermitianEigen {
    pub eigenvalues: RVec,
    pub eigenvectors: CMat,
}

/// Decompose a Hermitian matrix. Only the Hermitian part of the input is
/// referenced (entries are symmetrized on the fly).
pub fn hermitian_eigen(m: &CMat) -> Result<HermitianEigen> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    if n == 0 {
        return Err(MagnusError::Validation("empty matrix".into()));
    }
    // Work on the Hermitian average to shed roundoff asymmetry.
    let mut a = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
        }
    }
    let mut q = CMat::identity(n, n);

    // Householder reduction to Hermitian tridiagonal form.
    for k in 0..n.saturating_sub(2) {
        // x = a[k+1.., k]
        let mut xnorm2 = 0.0;
        for i in (k + 1)..n {
            xnorm2 += a[(i, k)].norm_sqr();
        }
        let tail2 = xnorm2 - a[(k + 1, k)].norm_sqr();
        if tail2 <= 0.0 {
            continue; // already eliminated below the subdiagonal
        }
        let xnorm = xnorm2.sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        // v = x - alpha e1
        let mut v = vec![C64::new(0.0, 0.0); n];
        for i in (k + 1)..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;

        // p = tau * A v ; K = tau * v† p ; w = p - (K/2) v
        let mut p = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (j, vj) in v.iter().enumerate().skip(k + 1) {
                acc += a[(i, j)] * vj;
            }
            p[i] = acc * tau;
        }
        // K = tau v†p is real for Hermitian A; w = p - (K/2) v gives the
        // rank-2 update HAH = A - v w† - w v†.
        let kappa = v
            .iter()
            .zip(&p)
            .map(|(vi, pi)| (vi.conj() * pi).re)
            .sum::<f64>()
            * tau;
        let w: Vec<C64> = p.iter().zip(&v).map(|(pi, vi)| pi - vi * (kappa * 0.5)).collect();
        // A <- A - v w† - w v†
        for i in 0..n {
            for j in 0..n {
                let delta = v[i] * w[j].conj() + w[i] * v[j].conj();
                a[(i, j)] -= delta;
            }
        }
        // Q <- Q (I - tau v v†) = Q - tau (Q v) v†
        for r in 0..n {
            let mut qv = C64::new(0.0, 0.0);
            for (c, vc) in v.iter().enumerate().skip(k + 1) {
                qv += q[(r, c)] * vc;
            }
            let qv = qv * tau;
            for (c, vc) in v.iter().enumerate().skip(k + 1) {
                q[(r, c)] -= qv * vc.conj();
            }
        }
    }

    // Diagonal phase transform: make subdiagonals real non-negative.
    let mut d = vec![0.0_f64; n];
    let mut e = vec![0.0_f64; n];
    let mut phi = vec![C64::new(1.0, 0.0); n];
    for i in 0..n {
        d[i] = a[(i, i)].re;
    }
    for i in 0..n - 1 {
        // Subdiagonal of D† A D at (i+1, i) is conj(φ_{i+1}) β_i φ_i = |β_i|
        // with φ_{i+1} = φ_i β_i / |β_i|.
        let beta = a[(i + 1, i)];
        let r = beta.norm();
        e[i] = r;
        phi[i + 1] = if r > 0.0 { phi[i] * (beta / r) } else { phi[i] };
    }
    for c in 0..n {
        if phi[c] != C64::new(1.0, 0.0) {
            for r in 0..n {
                q[(r, c)] *= phi[c];
            }
        }
    }

    // Implicit-shift QL on the real tridiagonal (d, e), rotations
    // accumulated into the complex columns of q.
    tql2(&mut d, &mut e, &mut q)?;

    // Sort ascending.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let eigenvalues = RVec::from_iterator(n, order.iter().map(|&i| d[i]));
    let mut eigenvectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.column_mut(dst).copy_from(&q.column(src));
    }
    Ok(HermitianEigen { eigenvalues, eigenvectors })
}

/// Classic symmetric tridiagonal QL with implicit shifts, eigenvectors
/// accumulated into the (complex) columns of `z`.
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut CMat) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            // Find a negligible subdiagonal element.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(MagnusError::Numeric(
                    "tridiagonal QL failed to converge in 50 iterations".into(),
                ));
            }
            // Form the implicit shift.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0_f64, 1.0_f64);
            let mut p = 0.0_f64;
            let mut deflated = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Deflate to avoid division by zero.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // Accumulate the rotation into columns i and i+1.
                for k in 0..z.nrows() {
                    f = z[(k, i + 1)].re;
                    let fi = z[(k, i + 1)].im;
                    let zi = z[(k, i)];
                    z[(k, i + 1)] = C64::new(s * zi.re + c * f, s * zi.im + c * fi);
                    z[(k, i)] = C64::new(c * zi.re - s * f, c * zi.im - s * fi);
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::kron;
    use rand::Rng;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut rng = crate::rng::rng_from_seed(seed);
        let m = CMat::from_fn(n, n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        (&m + m.adjoint()) * C64::new(0.5, 0.0)
    }

    fn check(m: &CMat, tol: f64) {
        let n = m.nrows();
        let eig = hermitian_eigen(m).unwrap();
        let gram = (eig.eigenvectors.adjoint() * &eig.eigenvectors - CMat::identity(n, n)).norm();
        assert!(gram <= tol, "orthonormality residual {gram}");
        let mut lam = CMat::zeros(n, n);
        for i in 0..n {
            lam[(i, i)] = C64::new(eig.eigenvalues[i], 0.0);
        }
        let recon = (&eig.eigenvectors * lam * eig.eigenvectors.adjoint() - m).norm();
        let scale = m.norm().max(1.0);
        assert!(recon <= tol * scale, "reconstruction residual {recon} (scale {scale})");
        for w in eig.eigenvalues.as_slice().windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn random_matrices_reconstruct() {
        for (i, &n) in [1usize, 2, 3, 5, 8, 16, 27, 40].iter().enumerate() {
            check(&random_hermitian(n, 100 + i as u64), 1e-12);
        }
    }

    #[test]
    fn real_symmetric_matrices() {
        let mut rng = crate::rng::rng_from_seed(7);
        let m = CMat::from_fn(12, 12, |_, _| C64::new(rng.gen_range(-1.0..1.0), 0.0));
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        check(&h, 1e-12);
    }

    #[test]
    fn exactly_degenerate_spectra() {
        // kron(I_3, H) has every eigenvalue three-fold degenerate.
        let h = random_hermitian(9, 42);
        let m = kron(&CMat::identity(3, 3), &h);
        check(&m, 1e-12);
        // The identity itself.
        check(&CMat::identity(10, 10), 1e-12);
        // Diagonal with repeated entries.
        let mut diag = CMat::zeros(6, 6);
        for (i, v) in [1.0, 1.0, 1.0, -2.0, -2.0, 7.0].iter().enumerate() {
            diag[(i, i)] = C64::new(*v, 0.0);
        }
        check(&diag, 1e-13);
    }

    #[test]
    fn permutation_symmetric_operators() {
        // The regression case: effective Hamiltonians of the three-atom
        // blockade model, which carry exact permutation degeneracies.
        use crate::lie::{generate_lie_algebra, DEFAULT_EPS_L};
        use crate::models::{build_model, ModelKind, ModelSpec};
        use crate::operator::HermitianOperator;
        let spec = ModelSpec::new(ModelKind::Rydberg, 3).unwrap();
        let (a, b) = build_model(&spec).unwrap();
        let basis = generate_lie_algebra(&a, &b, 24, DEFAULT_EPS_L).unwrap();
        let mut rng = crate::rng::rng_from_seed(11);
        for _ in 0..20 {
            let coeffs = RVec::from_fn(basis.dim_g(), |_, _| rng.gen_range(-0.5..0.5));
            let op: HermitianOperator = basis.assemble(&coeffs).unwrap();
            check(op.matrix(), 1e-11);
        }
    }

    #[test]
    fn eigenvalues_match_characteristic_values_2x2() {
        // [[a, z], [conj(z), b]] has eigenvalues (a+b)/2 ± sqrt(((a-b)/2)² + |z|²).
        let (a, b) = (0.7, -0.4);
        let z = C64::new(0.3, -0.8);
        let m = CMat::from_row_slice(2, 2, &[C64::new(a, 0.0), z, z.conj(), C64::new(b, 0.0)]);
        let eig = hermitian_eigen(&m).unwrap();
        let mid = (a + b) / 2.0;
        let rad = (((a - b) / 2.0).powi(2) + z.norm_sqr()).sqrt();
        approx::assert_abs_diff_eq!(eig.eigenvalues[0], mid - rad, epsilon = 1e-13);
        approx::assert_abs_diff_eq!(eig.eigenvalues[1], mid + rad, epsilon = 1e-13);
    }
}
