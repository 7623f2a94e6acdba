//! Eigendecomposition of small dense Hermitian matrices.
//!
//! Householder reduction to Hermitian tridiagonal form, a diagonal phase
//! change that makes the off-diagonal real, then implicit QL iterations with
//! Wilkinson-style shifts on the real symmetric tridiagonal matrix.

use crate::error::{NlaError, Result};
use crate::scalar::{Real, C};

use super::{CMatrix, DensityOperator, FockVector};

/// Eigenpairs with eigenvalues sorted in descending order; column `k` of
/// `vectors` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn vector(&self, k: usize) -> FockVector<T> {
        FockVector::from_vec_unchecked(self.vectors.column(k))
    }

    /// `sum_k f(v_k) |psi_k><psi_k|`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> CMatrix<T> {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n);
        for (k, &v) in self.values.iter().enumerate() {
            let w = f(v);
            if w != T::zero() {
                out.add_outer(&self.vectors.column(k), w);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMatrix<T> {
        self.reconstruct_with(|v| v)
    }
}

pub fn eigh<T: Real>(rho: &DensityOperator<T>) -> Result<HermitianEigen<T>> {
    eigh_matrix(rho.mat())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Inputs whose anti-Hermitian part exceeds `1e-12` (relative to the largest
/// entry when that is above one) are rejected.
pub fn eigh_matrix<T: Real>(a: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    let n = a.dim();
    let scale = a.data().iter().map(|z| z.norm()).fold(T::one(), T::max);
    let dev = a.hermiticity_deviation();
    if !(dev <= T::tol(1e-12) * scale) {
        return Err(NlaError::NonHermitianInput { deviation: dev.to_f64_lossy() });
    }
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: CMatrix::zeros(0) });
    }

    let mut a = a.hermitian_part();
    let mut q = CMatrix::identity(n);
    tridiagonalize(&mut a, &mut q);

    let mut d: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut e = vec![T::zero(); n];
    let mut phase = vec![C::new(T::one(), T::zero()); n];
    for i in 0..n - 1 {
        let sub = a[(i + 1, i)];
        let r = sub.norm();
        e[i] = r;
        phase[i + 1] = if r > T::zero() { phase[i] * (sub / r) } else { phase[i] };
    }
    for r in 0..n {
        for (c, ph) in phase.iter().enumerate() {
            q[(r, c)] = q[(r, c)] * ph;
        }
    }

    tql2(&mut d, &mut e, &mut q)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = CMatrix::from_fn(n, |r, c| q[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Reduces `a` in place to Hermitian tridiagonal form `Q^dag A Q`,
/// accumulating the unitary in `q`.
fn tridiagonalize<T: Real>(a: &mut CMatrix<T>, q: &mut CMatrix<T>) {
    let n = a.dim();
    let two = T::lit(2.0);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C<T>> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let tail: T = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == T::zero() {
            continue;
        }
        let xnorm = (x[0].norm_sqr() + tail).sqrt();
        let x0abs = x[0].norm();
        let ph = if x0abs > T::zero() { x[0] / x0abs } else { C::new(T::one(), T::zero()) };
        let alpha = -ph * xnorm;

        let mut v = x;
        v[0] = v[0] - alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for z in v.iter_mut() {
            *z = *z / vnorm;
        }

        // Trailing block: A <- A - 2 (v w^dag + w v^dag), w = Av - (v^dag A v) v.
        let m = v.len();
        let off = k + 1;
        let p: Vec<C<T>> =
            (0..m).map(|i| (0..m).fold(C::default(), |acc, j| acc + a[(off + i, off + j)] * v[j])).collect();
        let kappa: T = v.iter().zip(&p).fold(C::<T>::default(), |acc, (vi, pi)| acc + vi.conj() * pi).re;
        let w: Vec<C<T>> = p.iter().zip(&v).map(|(pi, vi)| pi - vi * kappa).collect();
        for i in 0..m {
            for j in 0..m {
                let upd = (v[i] * w[j].conj() + w[i] * v[j].conj()) * two;
                a[(off + i, off + j)] = a[(off + i, off + j)] - upd;
            }
        }
        for i in 0..m {
            let val = if i == 0 { alpha } else { C::default() };
            a[(off + i, k)] = val;
            a[(k, off + i)] = val.conj();
        }

        // Q <- Q H
        for r in 0..n {
            let s = (0..m).fold(C::default(), |acc, j| acc + q[(r, off + j)] * v[j]) * two;
            for j in 0..m {
                q[(r, off + j)] = q[(r, off + j)] - s * v[j].conj();
            }
        }
    }
}

/// Implicit QL on the real symmetric tridiagonal matrix with diagonal `d` and
/// sub-diagonal `e` (`e[i]` couples `i` and `i + 1`), rotating the columns of `z`.
fn tql2<T: Real>(d: &mut [T], e: &mut [T], z: &mut CMatrix<T>) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let max_iter = 60 * n;
    let mut iters = 0;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                iters += 1;
                if iters > max_iter {
                    return Err(NlaError::InvalidInput("tridiagonal QL iteration did not converge".into()));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let hk = z[(k, i + 1)];
                        let zk = z[(k, i)];
                        z[(k, i + 1)] = zk * s + hk * c;
                        z[(k, i)] = zk * c - hk * s;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = T::zero();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use proptest::prelude::*;

    fn check_decomposition(a: &CMatrix<f64>) {
        let eig = eigh_matrix(a).unwrap();
        let n = a.dim();
        assert!(eig.reconstruct().max_abs_diff(a) <= 1e-10 * (1.0 + n as f64).sqrt());
        let gram = eig.vectors.adjoint().matmul(&eig.vectors);
        assert!(gram.max_abs_diff(&CMatrix::identity(n)) <= 1e-10);
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn half_identity() {
        let rho = CMatrix::<f64>::diagonal(&[0.5, 0.5]);
        let eig = eigh_matrix(&rho).unwrap();
        assert_eq!(eig.values, vec![0.5, 0.5]);
    }

    #[test]
    fn vacuum_projector() {
        let rho = CMatrix::<f64>::diagonal(&[1.0, 0.0, 0.0]);
        let eig = eigh_matrix(&rho).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-15);
        assert!(eig.values[1].abs() < 1e-15 && eig.values[2].abs() < 1e-15);
    }

    #[test]
    fn complex_two_by_two_against_closed_form() {
        // [[2, 1-i],[1+i, 3]] has eigenvalues (5 +- sqrt(9)) / 2 = 4, 1.
        let a = CMatrix::<f64>::from_fn(2, |i, j| match (i, j) {
            (0, 0) => cplx(2.0),
            (1, 1) => cplx(3.0),
            (0, 1) => C::new(1.0, -1.0),
            _ => C::new(1.0, 1.0),
        });
        let eig = eigh_matrix(&a).unwrap();
        assert!((eig.values[0] - 4.0).abs() < 1e-13);
        assert!((eig.values[1] - 1.0).abs() < 1e-13);
        check_decomposition(&a);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = CMatrix::<f64>::identity(3);
        a[(0, 2)] = cplx(1e-6);
        assert!(matches!(eigh_matrix(&a), Err(NlaError::NonHermitianInput { .. })));
    }

    #[test]
    fn degenerate_and_already_diagonal() {
        check_decomposition(&CMatrix::<f64>::identity(7));
        check_decomposition(&CMatrix::<f64>::diagonal(&[3.0, -1.0, 3.0, 0.0, 2.5]));
    }

    #[test]
    fn single_precision_works() {
        let a = CMatrix::<f32>::from_fn(3, |i, j| {
            let x = (i + j) as f32 * 0.25 + if i == j { 1.0 } else { 0.0 };
            C::new(x, 0.0)
        });
        let eig = eigh_matrix(&a).unwrap();
        assert!(eig.reconstruct().max_abs_diff(&a) < 1e-5);
    }

    fn hermitian(n: usize, seed: u64) -> CMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = cplx(rng.gen_range(-1.0..1.0));
            for j in i + 1..n {
                let z = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_hermitian_reconstructs(n in 1usize..=64, seed in any::<u64>()) {
            check_decomposition(&hermitian(n, seed));
        }
    }
}
