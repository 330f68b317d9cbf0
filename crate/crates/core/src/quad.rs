//! Composite quadrature on the uniform kernel grid.
//!
//! Every integral in the toolkit goes through one shared rule so that the
//! transform round trips and the controller's dual representation compare
//! like with like. Prefix integrals over [0, x_i] use composite Simpson when
//! i is even; for odd i the leading i-1 subintervals get Simpson and the last
//! one a trapezoid.

use crate::num::{r64, Real};

/// Precomputed prefix-integral weights for a uniform grid.
///
/// `weights(i)` holds w_0..w_i with ∫_0^{x_i} f ≈ dx · Σ_j w_j f(x_j).
#[derive(Debug, Clone)]
pub struct PrefixWeights<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Real> PrefixWeights<T> {
    pub fn new(n_nodes: usize) -> Self {
        let third = T::one() / r64(3.0);
        let half = r64::<T>(0.5);
        let mut rows = Vec::with_capacity(n_nodes);
        for i in 0..n_nodes {
            let mut w = vec![T::zero(); i + 1];
            if i == 1 {
                w[0] = half;
                w[1] = half;
            } else if i >= 2 {
                let m = if i % 2 == 0 { i } else { i - 1 };
                for j in 0..=m {
                    let coeff = if j == 0 || j == m {
                        T::one()
                    } else if j % 2 == 1 {
                        r64(4.0)
                    } else {
                        r64(2.0)
                    };
                    w[j] += coeff * third;
                }
                if m != i {
                    w[i - 1] += half;
                    w[i] += half;
                }
            }
            rows.push(w);
        }
        Self { rows }
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn weights(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    /// ∫_0^{x_i} f dx for samples on the shared grid.
    pub fn integrate_prefix(&self, dx: T, values: &[T], i: usize) -> T {
        let w = &self.rows[i];
        let mut acc = T::zero();
        for (j, wj) in w.iter().enumerate() {
            acc += *wj * values[j];
        }
        acc * dx
    }

    /// ∫_0^1 f dx over the whole grid.
    pub fn integrate(&self, dx: T, values: &[T]) -> T {
        self.integrate_prefix(dx, values, self.rows.len() - 1)
    }

    /// L2 norm squared ∫_0^1 f^2 dx.
    pub fn norm_sq(&self, dx: T, values: &[T]) -> T {
        let w = &self.rows[self.rows.len() - 1];
        let mut acc = T::zero();
        for (j, wj) in w.iter().enumerate() {
            acc += *wj * values[j] * values[j];
        }
        acc * dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_cubic_exactly_on_even_prefix() {
        // Simpson is exact for cubics.
        let n = 101;
        let dx = 0.01;
        let vals: Vec<f64> = (0..n).map(|i| (i as f64 * dx).powi(3)).collect();
        let w = PrefixWeights::new(n);
        let exact = 0.25 * 0.8f64.powi(4);
        assert!((w.integrate_prefix(dx, &vals, 80) - exact).abs() < 1e-15);
    }

    #[test]
    fn odd_prefix_keeps_third_order() {
        let n = 101;
        let dx = 0.01;
        let vals: Vec<f64> = (0..n).map(|i| (i as f64 * dx).sin()).collect();
        let w = PrefixWeights::new(n);
        let exact = 1.0 - 0.81f64.cos();
        let err = (w.integrate_prefix(dx, &vals, 81) - exact).abs();
        assert!(err < 2e-7, "err = {err}");
    }

    #[test]
    fn empty_and_single_interval() {
        let w = PrefixWeights::<f64>::new(3);
        let vals = [1.0, 1.0, 1.0];
        assert_eq!(w.integrate_prefix(0.1, &vals, 0), 0.0);
        assert!((w.integrate_prefix(0.1, &vals, 1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn norm_of_cosine() {
        // ||cos(pi x)||^2 over [0,1] = 1/2; the 25-interval grid ends in a
        // trapezoid tail, so the error is O(dx^3) rather than Simpson-grade
        let n = 26;
        let dx = 0.04;
        let vals: Vec<f64> = (0..n).map(|i| (std::f64::consts::PI * i as f64 * dx).cos()).collect();
        let w = PrefixWeights::new(n);
        assert!((w.norm_sq(dx, &vals) - 0.5).abs() < 2e-4);
        // even interval count: full Simpson accuracy
        let n2 = 51;
        let dx2 = 0.02;
        let vals2: Vec<f64> =
            (0..n2).map(|i| (std::f64::consts::PI * i as f64 * dx2).cos()).collect();
        let w2 = PrefixWeights::new(n2);
        assert!((w2.norm_sq(dx2, &vals2) - 0.5).abs() < 1e-7);
    }
}
