//! Plant description and design gains for the delayed ODE-heat cascade.
//!
//! The cascade couples an n-dimensional delayed ODE to a 1-D heat equation
//! on [0, 1] with a reflecting left boundary and an actuated right boundary:
//!
//! ```text
//! X'(t)     = A X(t) + A1 X(t - tau(t)) + B u(0, t)
//! u_t(x,t)  = u_xx + a_heat u + a2_heat u(x, t - tau(t))
//! u_x(0,t)  = 0,   u(1,t) = U(t)  or  u_x(1,t) = U(t)
//! ```

use crate::error::{Error, Result};
use crate::linalg::{controllability_rank, is_hurwitz, Matrix};
use crate::num::{r64, Real};

/// Which boundary the control acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Actuation {
    /// u(1, t) = U(t)
    Dirichlet,
    /// u_x(1, t) = U(t)
    Neumann,
}

/// Time-varying delay profile tau(t), continuously differentiable and
/// confined to [h0, h].
#[derive(Debug, Clone)]
pub enum DelayProfile<T> {
    Constant(T),
    /// tau(t) = (h + h0)/2 + (h - h0)/2 * sin(omega t)
    Sinusoid { h0: T, h: T, omega: T },
}

impl<T: Real> DelayProfile<T> {
    pub fn tau(&self, t: T) -> T {
        match self {
            Self::Constant(v) => *v,
            Self::Sinusoid { h0, h, omega } => {
                let mid = (*h + *h0) * r64(0.5);
                let amp = (*h - *h0) * r64(0.5);
                mid + amp * (*omega * t).sin()
            }
        }
    }

    pub fn bounds(&self) -> (T, T) {
        match self {
            Self::Constant(v) => (*v, *v),
            Self::Sinusoid { h0, h, .. } => (*h0, *h),
        }
    }
}

/// The cascade's matrices, reaction coefficients, delay bounds, and
/// saturation amplitude.
#[derive(Debug, Clone)]
pub struct PlantParams<T> {
    /// ODE state matrix A (n x n).
    pub a: Matrix<T>,
    /// Delayed ODE state matrix A1 (n x n).
    pub a1: Matrix<T>,
    /// Input column B (n x 1).
    pub b: Matrix<T>,
    /// Undelayed heat reaction coefficient.
    pub a_heat: T,
    /// Delayed heat reaction coefficient.
    pub a2_heat: T,
    /// Lower delay bound, > 0.
    pub h0: T,
    /// Upper delay bound, >= h0.
    pub h: T,
    /// Saturation amplitude, > 0.
    pub u_bar: T,
    /// Delay profile tau(t) within [h0, h].
    pub delay: DelayProfile<T>,
}

impl<T: Real> PlantParams<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Matrix<T>,
        a1: Matrix<T>,
        b: Matrix<T>,
        a_heat: T,
        a2_heat: T,
        h0: T,
        h: T,
        u_bar: T,
        delay: DelayProfile<T>,
    ) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n || a1.rows() != n || a1.cols() != n {
            return Err(Error::InvalidPlant("A and A1 must be square of equal order".into()));
        }
        if b.rows() != n || b.cols() != 1 {
            return Err(Error::InvalidPlant("B must be an n x 1 column".into()));
        }
        if !(h0 > T::zero()) {
            return Err(Error::InvalidPlant("h0 must be positive".into()));
        }
        if !(h >= h0) {
            return Err(Error::InvalidPlant("h must be >= h0".into()));
        }
        if !(u_bar > T::zero()) {
            return Err(Error::InvalidPlant("u_bar must be positive".into()));
        }
        let (lo, hi) = delay.bounds();
        if lo < h0 || hi > h {
            return Err(Error::InvalidPlant("delay profile leaves [h0, h]".into()));
        }
        let finite = |m: &Matrix<T>| (0..m.rows()).all(|i| (0..m.cols()).all(|j| m.get(i, j).is_finite()));
        if !finite(&a) || !finite(&a1) || !finite(&b) || !a_heat.is_finite() || !a2_heat.is_finite() {
            return Err(Error::NonFinite("plant parameters"));
        }
        if controllability_rank(&a, &b) != n {
            return Err(Error::InvalidPlant("(A, B) is not controllable".into()));
        }
        Ok(Self { a, a1, b, a_heat, a2_heat, h0, h, u_bar, delay })
    }

    /// Scalar-plant convenience constructor (n = 1).
    #[allow(clippy::too_many_arguments)]
    pub fn scalar(
        a: T,
        a1: T,
        b: T,
        a_heat: T,
        a2_heat: T,
        h0: T,
        h: T,
        u_bar: T,
        delay: DelayProfile<T>,
    ) -> Result<Self> {
        let one = |v: T| Matrix::from_fn(1, 1, |_, _| v);
        Self::new(one(a), one(a1), one(b), a_heat, a2_heat, h0, h, u_bar, delay)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// A + B K for a 1 x n gain row.
    pub fn closed_loop_matrix(&self, k_row: &[T]) -> Matrix<T> {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| self.a.get(i, j) + self.b.get(i, 0) * k_row[j])
    }
}

/// ODE gain row K and target damping c.
#[derive(Debug, Clone)]
pub struct DesignGains<T> {
    /// 1 x n state-feedback row.
    pub k: Vec<T>,
    /// Target heat damping, > 0.
    pub c: T,
}

impl<T: Real> DesignGains<T> {
    pub fn new(k: Vec<T>, c: T) -> Self {
        Self { k, c }
    }

    /// Sanity checks: c > 0, dimensions agree, and A + BK is Hurwitz.
    /// The delayed stability itself is certified separately by the LMIs.
    pub fn validate(&self, plant: &PlantParams<T>) -> Result<()> {
        if !(self.c > T::zero()) {
            return Err(Error::InvalidGains("c must be positive".into()));
        }
        if self.k.len() != plant.dim() {
            return Err(Error::InvalidGains(format!(
                "gain row has {} entries for an order-{} plant",
                self.k.len(),
                plant.dim()
            )));
        }
        if self.k.iter().any(|v| !v.is_finite()) || !self.c.is_finite() {
            return Err(Error::NonFinite("design gains"));
        }
        if !is_hurwitz(&plant.closed_loop_matrix(&self.k)) {
            return Err(Error::InvalidGains("A + BK is not Hurwitz".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The first worked scalar configuration used throughout the test suite:
    /// A = 1, A1 = 0.4, B = 1, a = 0.2, a2 = 0.1, u_bar = 20, tau = 0.4.
    pub fn dirichlet_demo_plant() -> PlantParams<f64> {
        PlantParams::scalar(1.0, 0.4, 1.0, 0.2, 0.1, 0.4, 0.4, 20.0, DelayProfile::Constant(0.4))
            .unwrap()
    }

    #[test]
    fn accepts_the_demo_plant() {
        let p = dirichlet_demo_plant();
        assert_eq!(p.dim(), 1);
    }

    #[test]
    fn rejects_bad_delay_bounds() {
        let r = PlantParams::scalar(
            1.0, 0.4, 1.0, 0.2, 0.1, 0.0, 0.4, 20.0, DelayProfile::Constant(0.4),
        );
        assert!(matches!(r, Err(Error::InvalidPlant(_))));
        let r = PlantParams::scalar(
            1.0, 0.4, 1.0, 0.2, 0.1, 0.5, 0.4, 20.0, DelayProfile::Constant(0.4),
        );
        assert!(matches!(r, Err(Error::InvalidPlant(_))));
    }

    #[test]
    fn rejects_uncontrollable_pair() {
        let a = Matrix::from_fn(2, 2, |i, j| if i == j { -1.0 } else { 0.0 });
        let a1 = Matrix::zeros(2, 2);
        let b = Matrix::from_fn(2, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let r = PlantParams::new(a, a1, b, 0.1, 0.0, 0.1, 0.2, 1.0, DelayProfile::Constant(0.1));
        assert!(matches!(r, Err(Error::InvalidPlant(_))));
    }

    #[test]
    fn gains_validation() {
        let p = dirichlet_demo_plant();
        assert!(DesignGains::new(vec![-2.0], 0.8).validate(&p).is_ok());
        // A + BK = 1 for K = 0: unstable
        assert!(DesignGains::new(vec![0.0], 0.8).validate(&p).is_err());
        assert!(DesignGains::new(vec![-2.0], -0.1).validate(&p).is_err());
    }

    #[test]
    fn sinusoid_delay_stays_in_bounds() {
        let d = DelayProfile::Sinusoid { h0: 0.3, h: 0.5, omega: 2.0 };
        for i in 0..200 {
            let t = i as f64 * 0.05;
            let tau = d.tau(t);
            assert!((0.3..=0.5).contains(&tau));
        }
    }
}
