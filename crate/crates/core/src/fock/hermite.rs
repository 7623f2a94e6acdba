//! Hermite polynomials and harmonic-oscillator position wavefunctions for the
//! quadrature `x = (a + a^dag) / sqrt(2)`.

use crate::scalar::Real;

/// Physicists' Hermite polynomial `H_n(x)` from `H_{n+1} = 2x H_n - 2n H_{n-1}`.
///
/// The polynomial grows like `sqrt(2^n n!)`, so the result overflows to an
/// infinity around `n ~ 150` in `f64` (much earlier in `f32`). Use
/// [`hermite_functions`] when only the normalized wavefunctions are needed.
pub fn hermite<T: Real>(n: usize, x: T) -> T {
    let two = T::lit(2.0);
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let mut cur = two * x;
    for k in 1..n {
        let next = two * x * cur - two * T::from_usize_lossy(k) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `<x|n>` for `n = 0..count`, via the normalized recurrence
/// `psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}`,
/// which neither overflows nor needs factorials.
pub fn hermite_functions<T: Real>(count: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(count);
    fill_hermite_functions(x, count, &mut out);
    out
}

/// Buffer-reusing form of [`hermite_functions`].
pub fn fill_hermite_functions<T: Real>(x: T, count: usize, out: &mut Vec<T>) {
    out.clear();
    if count == 0 {
        return;
    }
    let psi0 = T::PI().powf(T::lit(-0.25)) * (-x * x / T::lit(2.0)).exp();
    out.push(psi0);
    if count == 1 {
        return;
    }
    out.push(T::SQRT_2() * x * psi0);
    for n in 1..count - 1 {
        let nf = T::from_usize_lossy(n);
        let a = (T::lit(2.0) / (nf + T::one())).sqrt();
        let b = (nf / (nf + T::one())).sqrt();
        let next = a * x * out[n] - b * out[n - 1];
        out.push(next);
    }
}

/// `<x|n> = pi^{-1/4} (2^n n!)^{-1/2} H_n(x) e^{-x^2/2}`.
pub fn position_wavefunction<T: Real>(n: usize, x: T) -> T {
    hermite_functions(n + 1, x)[n]
}
