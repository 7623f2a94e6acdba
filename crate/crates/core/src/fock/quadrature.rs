//! Composite Gauss-Legendre quadrature with panel doubling.

use crate::scalar::Real;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T: Real> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Newton iteration on `P_order` from the Tricomi initial guesses.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order;
        let nf = T::from_usize_lossy(n);
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        for i in 0..n.div_ceil(2) {
            let mut x = (T::PI() * (T::from_usize_lossy(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= T::epsilon() * T::lit(4.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        Self { nodes, weights }
    }
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = T::from_usize_lossy(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Quadrature rule on the real line: strictly increasing nodes, positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid<T: Real> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    panel_order: usize,
}

impl<T: Real> QuadratureGrid<T> {
    /// `panels` equal sub-intervals of `[a, b]`, each with an `order`-point rule.
    pub fn composite(a: T, b: T, panels: usize, order: usize) -> Self {
        assert!(b > a && panels >= 1);
        let gl = GaussLegendre::<T>::new(order);
        let h = (b - a) / T::from_usize_lossy(panels);
        let half = h / T::lit(2.0);
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for k in 0..panels {
            let mid = a + h * (T::from_usize_lossy(k) + T::lit(0.5));
            for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                nodes.push(mid + half * *x);
                weights.push(half * *w);
            }
        }
        Self { nodes, weights, panel_order: order }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Weighted sum over precomputed integrand values at the nodes.
    pub fn sum_values(&self, values: &[T]) -> T {
        self.weights.iter().zip(values).map(|(&w, &v)| w * v).sum()
    }

    fn edge_panels_sum(&self, values: &[T]) -> T {
        let m = self.panel_order;
        let n = self.len();
        let head: T = (0..m).map(|i| self.weights[i] * values[i]).sum();
        let tail: T = (n - m..n).map(|i| self.weights[i] * values[i]).sum();
        head.abs() + tail.abs()
    }
}

/// Result of [`integrate_real_line`]: the converged grid and one integral per
/// integrand component.
#[derive(Debug, Clone)]
pub struct AdaptiveIntegral<T: Real> {
    pub grid: QuadratureGrid<T>,
    pub integrals: Vec<T>,
    pub half_width: T,
}

pub const PANEL_ORDER: usize = 16;
const MAX_PANELS: usize = 1 << 14;

/// Integrates `components` functions over `[-L, L]`, doubling the number of
/// panels until every component changes by less than `rel_tol` (relative, with
/// `abs_tol` as floor), then widening `L` by 25% until the outermost panels
/// carry less than `1e-12` of every accumulated integral.
///
/// `f(x, out)` writes the `components` integrand values at `x` into `out`.
pub fn integrate_real_line<T: Real>(
    half_width: T,
    rel_tol: T,
    abs_tol: T,
    components: usize,
    f: impl Fn(T, &mut [T]),
) -> AdaptiveIntegral<T> {
    let mut l = half_width;
    loop {
        let (grid, values, integrals) = converge_panels(l, rel_tol, abs_tol, components, &f);
        let edge_ok = (0..components).all(|c| {
            let col: Vec<T> = values.iter().map(|row| row[c]).collect();
            grid.edge_panels_sum(&col) <= T::tol(1e-12) * integrals[c].abs() + abs_tol
        });
        if edge_ok || l > T::lit(200.0) {
            return AdaptiveIntegral { grid, integrals, half_width: l };
        }
        l = l * T::lit(1.25);
    }
}

type Sampled<T> = (QuadratureGrid<T>, Vec<Vec<T>>, Vec<T>);

fn converge_panels<T: Real>(l: T, rel_tol: T, abs_tol: T, components: usize, f: &impl Fn(T, &mut [T])) -> Sampled<T> {
    let eval = |panels: usize| {
        let grid = QuadratureGrid::composite(-l, l, panels, PANEL_ORDER);
        let mut values = Vec::with_capacity(grid.len());
        let mut sums = vec![T::zero(); components];
        for (&x, &w) in grid.nodes.iter().zip(&grid.weights) {
            let mut row = vec![T::zero(); components];
            f(x, &mut row);
            for (s, v) in sums.iter_mut().zip(&row) {
                *s = *s + w * *v;
            }
            values.push(row);
        }
        (grid, values, sums)
    };
    let mut panels = (l.to_f64_lossy().ceil() as usize).max(4);
    let mut prev = eval(panels);
    loop {
        panels *= 2;
        let next = eval(panels);
        let converged = prev.2.iter().zip(&next.2).all(|(a, b)| (*a - *b).abs() <= rel_tol * b.abs() + abs_tol);
        if converged || panels >= MAX_PANELS {
            return next;
        }
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::hermite::hermite_functions;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let gl = GaussLegendre::<f64>::new(8);
        let s: f64 = gl.nodes.iter().zip(&gl.weights).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!(gl.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(gl.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn composite_grid_is_ordered() {
        let g = QuadratureGrid::<f64>::composite(-3.0, 3.0, 5, 16);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(g.weights.iter().all(|&w| w > 0.0));
        assert!((g.weights.iter().sum::<f64>() - 6.0).abs() < 1e-13);
    }

    #[test]
    fn vacuum_density_integrates_to_one() {
        let r = integrate_real_line(8.0, 1e-12, 0.0, 1, |x: f64, out| {
            out[0] = (-x * x).exp() / std::f64::consts::PI.sqrt();
        });
        assert!((r.integrals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let n = 21;
        let r = integrate_real_line((2.0 * n as f64 + 1.0).sqrt() + 6.0, 1e-12, 0.0, n * n, |x: f64, out| {
            let psi = hermite_functions(n, x);
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = psi[i] * psi[j];
                }
            }
        });
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((r.integrals[i * n + j] - want).abs() < 1e-8, "({i},{j})");
            }
        }
    }
}
