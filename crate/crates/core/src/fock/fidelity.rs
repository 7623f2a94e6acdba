//! Uhlmann fidelity between density operators.

use crate::error::{NlaError, Result};
use crate::scalar::{Real, C};

use super::eigh::eigh_matrix;
use super::{CMatrix, DensityOperator};

/// `F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn fidelity<T: Real>(rho: &DensityOperator<T>, sigma: &DensityOperator<T>) -> Result<T> {
    check_dims(rho, sigma)?;
    let er = rho.validate_physical()?;
    sigma.validate_physical()?;
    let cut = T::lit(1e-12) * er.values.first().copied().unwrap_or_else(T::zero);
    let sqrt_rho = er.reconstruct_with(|v| if v > cut { v.sqrt() } else { T::zero() });
    let m = sqrt_rho.matmul(sigma.mat()).matmul(&sqrt_rho).hermitian_part();
    let em = eigh_matrix(&m)?;
    let cut = T::lit(1e-12) * em.values.first().copied().unwrap_or_else(T::zero);
    let root_fid: T = em.values.iter().filter(|&&v| v > cut).map(|&v| v.sqrt()).sum();
    Ok((root_fid * root_fid).min(T::one()))
}

/// `1 - sqrt(F(rho, sigma))`, computed without cancellation.
///
/// With purification matrices `A`, `B` (`rho = A A^dag`), `sqrt F` is the trace
/// norm of `A^dag B`, attained by `B U` with `U` the polar factor. The deficit
/// then equals `||A - B U||_F^2 / 2`, a sum of squared small differences.
pub fn bures_deficit<T: Real>(rho: &DensityOperator<T>, sigma: &DensityOperator<T>) -> Result<T> {
    check_dims(rho, sigma)?;
    let a = purification(rho)?;
    let b = purification(sigma)?;
    Ok(purification_deficit(&a, &b))
}

/// Columns `sqrt(v_k) |psi_k>` for eigenvalues above `1e-12 * v_max`,
/// rescaled to unit Frobenius norm.
pub fn purification<T: Real>(rho: &DensityOperator<T>) -> Result<Vec<Vec<C<T>>>> {
    let eig = rho.eigh()?;
    let vmax = eig.values.first().copied().unwrap_or_else(T::zero);
    if vmax <= T::zero() {
        return Err(NlaError::NonPhysicalState("operator has no positive eigenvalue".into()));
    }
    let thresh = vmax * T::tol(1e-12);
    let mut cols: Vec<Vec<C<T>>> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > thresh)
        .map(|(k, &v)| eig.vectors.column(k).into_iter().map(|z| z * v.sqrt()).collect())
        .collect();
    let norm = cols.iter().flat_map(|c| c.iter().map(|z| z.norm_sqr())).sum::<T>().sqrt();
    for c in cols.iter_mut() {
        for z in c.iter_mut() {
            *z = *z / norm;
        }
    }
    Ok(cols)
}

/// `min_U ||A - B U||_F^2 / 2` over unitaries `U`, for column lists of one
/// common row dimension. Missing columns are treated as zero.
pub fn purification_deficit<T: Real>(a: &[Vec<C<T>>], b: &[Vec<C<T>>]) -> T {
    let k = a.len().max(b.len());
    let n = a.first().or(b.first()).map_or(0, |c| c.len());
    let zero_col = vec![C::default(); n];
    let col_a = |i: usize| a.get(i).unwrap_or(&zero_col);
    let col_b = |i: usize| b.get(i).unwrap_or(&zero_col);
    let dot = |u: &[C<T>], v: &[C<T>]| u.iter().zip(v).fold(C::default(), |acc, (x, y)| acc + x.conj() * y);

    // M = A^dag B and the polar factor U = V W^dag from M = W S V^dag.
    let m = CMatrix::from_fn(k, |i, j| dot(col_a(i), col_b(j)));
    let mtm = m.adjoint().matmul(&m).hermitian_part();
    let eig = eigh_matrix(&mtm).expect("Gram matrix is Hermitian");
    let smax = eig.values.first().copied().unwrap_or_else(T::zero).max(T::zero()).sqrt();
    let mut w_cols: Vec<Vec<C<T>>> = Vec::with_capacity(k);
    for (j, &lam) in eig.values.iter().enumerate() {
        let s = lam.max(T::zero()).sqrt();
        if s > smax * T::tol(1e-10) && s > T::zero() {
            let vj = eig.vectors.column(j);
            let mut w: Vec<C<T>> = m.apply(&vj).into_iter().map(|z| z / s).collect();
            // M v_j / s_j inherits an O(eps / s_j) error along the larger
            // singular directions; any non-unitarity of U enters the deficit
            // at first order, so re-orthogonalize.
            for prev in w_cols.iter().filter(|c| !c.is_empty()) {
                let proj = dot(prev, &w);
                for (wi, pi) in w.iter_mut().zip(prev) {
                    *wi = *wi - pi * proj;
                }
            }
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
            w_cols.push(w.into_iter().map(|z| z / norm).collect());
        } else {
            w_cols.push(Vec::new());
        }
    }
    complete_orthonormal(&mut w_cols, k);
    let u =
        CMatrix::from_fn(k, |i, j| (0..k).fold(C::default(), |acc, l| acc + eig.vectors[(i, l)] * w_cols[l][j].conj()));

    let mut total = T::zero();
    for j in 0..k {
        let aj = col_a(j);
        for r in 0..n {
            let bu = (0..k).fold(C::default(), |acc, l| acc + col_b(l)[r] * u[(l, j)]);
            total = total + (aj[r] - bu).norm_sqr();
        }
    }
    total / T::lit(2.0)
}

/// Fills empty entries of `cols` with unit vectors orthogonal to the rest.
fn complete_orthonormal<T: Real>(cols: &mut [Vec<C<T>>], k: usize) {
    let missing: Vec<usize> = (0..cols.len()).filter(|&i| cols[i].is_empty()).collect();
    let mut cand = 0;
    for idx in missing {
        loop {
            let mut v = vec![C::default(); k];
            v[cand % k] = C::new(T::one(), T::zero());
            cand += 1;
            for c in cols.iter().filter(|c| !c.is_empty()) {
                let proj = c.iter().zip(&v).fold(C::default(), |acc, (x, y)| acc + x.conj() * y);
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi = *vi - ci * proj;
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
            if norm > T::lit(0.5) {
                cols[idx] = v.into_iter().map(|z| z / norm).collect();
                break;
            }
        }
    }
}

fn check_dims<T: Real>(a: &DensityOperator<T>, b: &DensityOperator<T>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(NlaError::InvalidInput(format!("dimension mismatch {} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockVector;
    use crate::scalar::cplx;

    fn diag(d: &[f64]) -> DensityOperator<f64> {
        DensityOperator::new(CMatrix::diagonal(d)).unwrap()
    }

    #[test]
    fn examples() {
        let zero = diag(&[1.0, 0.0]);
        let one = diag(&[0.0, 1.0]);
        let mixed = diag(&[0.5, 0.5]);
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);
        assert!((fidelity(&zero, &mixed).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pure_states_give_squared_overlap_and_deficit_agrees() {
        let a = FockVector::normalize(vec![cplx(0.3f64), C::new(0.2, -0.7), cplx(0.1)]).unwrap().0;
        let b = FockVector::normalize(vec![C::new(0.1, 0.4), cplx(0.5), C::new(0.0, 0.3)]).unwrap().0;
        let (ra, rb) = (DensityOperator::from_pure(&a), DensityOperator::from_pure(&b));
        let ov = a.inner(&b).norm_sqr();
        let f = fidelity(&ra, &rb).unwrap();
        assert!((f - ov).abs() < 1e-12);
        assert!((fidelity(&rb, &ra).unwrap() - f).abs() < 1e-12);
        let d = bures_deficit(&ra, &rb).unwrap();
        assert!(((1.0 - d).powi(2) - f).abs() < 1e-12);
    }

    #[test]
    fn mixed_states_deficit_matches_fidelity() {
        let p = FockVector::normalize(vec![cplx(1.0), C::new(0.5, 0.5), cplx(0.2)]).unwrap().0;
        let q = FockVector::normalize(vec![cplx(0.2), cplx(-0.3), C::new(0.0, 1.0)]).unwrap().0;
        let rho = DensityOperator::mixture(&[(0.7, &p), (0.3, &q)]).unwrap();
        let sigma = diag(&[0.2, 0.5, 0.3]);
        let f = fidelity(&rho, &sigma).unwrap();
        let d = bures_deficit(&rho, &sigma).unwrap();
        assert!(((1.0 - d).powi(2) - f).abs() < 1e-12);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
        assert!(bures_deficit(&rho, &rho).unwrap().abs() < 1e-15);
    }

    #[test]
    fn unphysical_input_rejected() {
        let bad = diag(&[0.7, 0.7]);
        assert!(matches!(fidelity(&bad, &bad), Err(NlaError::NonPhysicalState(_))));
    }
}
