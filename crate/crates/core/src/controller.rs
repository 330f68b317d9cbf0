//! Boundary feedback laws in original coordinates, with saturation.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::num::Real;
use crate::plant::Actuation;
use crate::transform::{u_to_w, z_to_w, CoupledState};

/// sat(u, u_bar) = sign(u) min(|u|, u_bar).
pub fn saturate<T: Real>(u: T, u_bar: T) -> T {
    debug_assert!(u_bar > T::zero());
    if u > u_bar {
        u_bar
    } else if u < -u_bar {
        -u_bar
    } else {
        u
    }
}

/// U(t) = int k(1,y) u(y) dy + gamma(1) X + int q(1,y) w(y) dy, with the
/// bracketed intermediate field w computed by the shared transform.
pub fn dirichlet_u<T: Real>(state: &CoupledState<T>, kernels: &KernelSet<T>) -> Result<T> {
    let w = u_to_w(state, kernels)?;
    let nn = kernels.n_nodes();
    let top = nn - 1;
    let wts = kernels.quad.weights(top);
    let dx = kernels.dx;
    let mut k_term = T::zero();
    let mut q_term = T::zero();
    for (j, wj) in wts.iter().enumerate() {
        k_term += *wj * kernels.k.get(top, j) * state.field.values[j];
        q_term += *wj * kernels.q.get(top, j) * w.field.values[j];
    }
    let gamma_term: T = kernels
        .gamma_at_end()
        .iter()
        .zip(state.x.iter())
        .map(|(g, x)| *g * *x)
        .sum();
    Ok(k_term * dx + gamma_term + q_term * dx)
}

/// U(t) = int k_x(1,y) u(y) dy + gamma'(1) X + q(1,1) w(1) + int q_x(1,y) w(y) dy.
pub fn neumann_u<T: Real>(state: &CoupledState<T>, kernels: &KernelSet<T>) -> Result<T> {
    let w = u_to_w(state, kernels)?;
    let nn = kernels.n_nodes();
    let top = nn - 1;
    let wts = kernels.quad.weights(top);
    let dx = kernels.dx;
    let mut kx_term = T::zero();
    let mut qx_term = T::zero();
    for (j, wj) in wts.iter().enumerate() {
        kx_term += *wj * kernels.k_x.get(top, j) * state.field.values[j];
        qx_term += *wj * kernels.q_x.get(top, j) * w.field.values[j];
    }
    let gamma_prime_term: T = kernels
        .gamma_prime_at_end()
        .iter()
        .zip(state.x.iter())
        .map(|(g, x)| *g * *x)
        .sum();
    let corner = kernels.q.get(top, top) * w.field.values[top];
    Ok(kx_term * dx + gamma_prime_term + corner + qx_term * dx)
}

/// Dual representation of the Dirichlet law through target coordinates:
/// U = int n(1,y) w(y) dy + psi(1) X + int l(1,y) z(y) dy with w = z + int l z.
/// Used by the verification command as an independent evaluation route.
pub fn dirichlet_u_target_form<T: Real>(
    z_state: &CoupledState<T>,
    kernels: &KernelSet<T>,
) -> Result<T> {
    let w = z_to_w(z_state, kernels)?;
    let nn = kernels.n_nodes();
    let top = nn - 1;
    let wts = kernels.quad.weights(top);
    let dx = kernels.dx;
    let mut n_term = T::zero();
    let mut l_term = T::zero();
    for (j, wj) in wts.iter().enumerate() {
        n_term += *wj * kernels.n.get(top, j) * w.field.values[j];
        l_term += *wj * kernels.l.get(top, j) * z_state.field.values[j];
    }
    let psi_term: T = kernels
        .psi_at_end()
        .iter()
        .zip(z_state.x.iter())
        .map(|(p, x)| *p * *x)
        .sum();
    Ok(n_term * dx + psi_term + l_term * dx)
}

/// Dual representation of the Neumann law (uses n(1,1) = 0):
/// U = int n_x(1,y) w(y) dy + psi'(1) X + l(1,1) z(1) + int l_x(1,y) z(y) dy.
pub fn neumann_u_target_form<T: Real>(
    z_state: &CoupledState<T>,
    kernels: &KernelSet<T>,
) -> Result<T> {
    let w = z_to_w(z_state, kernels)?;
    let nn = kernels.n_nodes();
    let top = nn - 1;
    let wts = kernels.quad.weights(top);
    let dx = kernels.dx;
    let mut nx_term = T::zero();
    let mut lx_term = T::zero();
    for (j, wj) in wts.iter().enumerate() {
        nx_term += *wj * kernels.n_x.get(top, j) * w.field.values[j];
        lx_term += *wj * kernels.l_x.get(top, j) * z_state.field.values[j];
    }
    let psi_prime_term: T = kernels
        .psi_prime_at_end()
        .iter()
        .zip(z_state.x.iter())
        .map(|(p, x)| *p * *x)
        .sum();
    let corner = kernels.l.get(top, top) * z_state.field.values[top];
    Ok(nx_term * dx + psi_prime_term + corner + lx_term * dx)
}

/// A boundary feedback law bound to a kernel set, or the zero law when no
/// kernels are attached.
#[derive(Debug, Clone)]
pub struct ControlLaw<T> {
    pub actuation: Actuation,
    pub kernels: Option<Arc<KernelSet<T>>>,
    pub u_bar: T,
    pub saturated: bool,
}

impl<T: Real> ControlLaw<T> {
    pub fn new(actuation: Actuation, kernels: Arc<KernelSet<T>>, u_bar: T) -> Self {
        Self { actuation, kernels: Some(kernels), u_bar, saturated: true }
    }

    /// U(t) = 0: used for open-loop runs.
    pub fn zero(actuation: Actuation) -> Self {
        Self { actuation, kernels: None, u_bar: T::infinity(), saturated: false }
    }

    /// Unsaturated control value.
    pub fn raw(&self, state: &CoupledState<T>) -> Result<T> {
        match &self.kernels {
            None => Ok(T::zero()),
            Some(k) => match self.actuation {
                Actuation::Dirichlet => dirichlet_u(state, k),
                Actuation::Neumann => neumann_u(state, k),
            },
        }
    }

    /// Applied control value plus whether the clamp was active.
    pub fn apply(&self, state: &CoupledState<T>) -> Result<(T, bool)> {
        let u = self.raw(state)?;
        if !self.saturated {
            return Ok((u, false));
        }
        let clamped = saturate(u, self.u_bar);
        Ok((clamped, clamped != u))
    }

    pub fn kernels(&self) -> Result<&Arc<KernelSet<T>>> {
        self.kernels.as_ref().ok_or(Error::MissingKernels("zero law"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{DelayProfile, DesignGains, PlantParams};
    use crate::transform::{w_to_z, Field};

    fn ex1(dx: f64) -> (PlantParams<f64>, DesignGains<f64>, Arc<KernelSet<f64>>) {
        let plant = PlantParams::scalar(
            1.0, 0.4, 1.0, 0.2, 0.1, 0.4, 0.4, 20.0, DelayProfile::Constant(0.4),
        )
        .unwrap();
        let gains = DesignGains::new(vec![-2.0], 0.8);
        let ks = Arc::new(KernelSet::build(&plant, &gains, dx).unwrap());
        (plant, gains, ks)
    }

    #[test]
    fn saturate_cases() {
        assert_eq!(saturate(5.0, 20.0), 5.0);
        assert_eq!(saturate(30.0, 20.0), 20.0);
        assert_eq!(saturate(-30.0, 20.0), -20.0);
        // idempotent and odd
        assert_eq!(saturate(saturate(33.0, 20.0), 20.0), 20.0);
        assert_eq!(saturate(-7.5, 20.0), -saturate(7.5, 20.0));
    }

    #[test]
    fn zero_state_gives_zero_control() {
        let (_, _, ks) = ex1(0.04);
        let state = CoupledState::new(vec![0.0], Field::zeros(0.04, ks.n_nodes()));
        assert_eq!(dirichlet_u(&state, &ks).unwrap(), 0.0);
        assert_eq!(neumann_u(&state, &ks).unwrap(), 0.0);
    }

    #[test]
    fn vanishing_kernels_give_zero_control() {
        // K = 0 (stable A) and a + c = 0: every kernel term vanishes
        let plant = PlantParams::scalar(
            -1.0, 0.1, 1.0, -0.8, 0.1, 0.4, 0.4, 20.0, DelayProfile::Constant(0.4),
        )
        .unwrap();
        let gains = DesignGains::new(vec![0.0], 0.8);
        let ks = KernelSet::build(&plant, &gains, 0.04).unwrap();
        let state = CoupledState::new(
            vec![1.7],
            Field::from_fn(0.04, ks.n_nodes(), |x: f64| (2.0 * x).sin() + 0.3),
        );
        assert!(dirichlet_u(&state, &ks).unwrap().abs() < 1e-12);
        assert!(neumann_u(&state, &ks).unwrap().abs() < 1e-12);
    }

    #[test]
    fn law_is_linear_in_the_state() {
        let (_, _, ks) = ex1(0.04);
        let nn = ks.n_nodes();
        let s1 = CoupledState::new(vec![0.4], Field::from_fn(0.04, nn, |x: f64| (3.0 * x).cos()));
        let s2 = CoupledState::new(vec![-0.9], Field::from_fn(0.04, nn, |x| x * x - 0.2));
        let alpha = 2.3;
        let combo = CoupledState::new(
            vec![alpha * s1.x[0] + s2.x[0]],
            Field {
                dx: 0.04,
                values: s1
                    .field
                    .values
                    .iter()
                    .zip(s2.field.values.iter())
                    .map(|(a, b)| alpha * a + b)
                    .collect(),
            },
        );
        for f in [dirichlet_u::<f64>, neumann_u::<f64>] {
            let u1 = f(&s1, &ks).unwrap();
            let u2 = f(&s2, &ks).unwrap();
            let uc = f(&combo, &ks).unwrap();
            assert!((uc - (alpha * u1 + u2)).abs() < 1e-12);
        }
    }

    /// Dual-representation oracle: the original-coordinates law equals the
    /// target-coordinates form after transforming the state.
    #[test]
    fn dual_representation_agreement() {
        let (_, _, ks) = ex1(0.01);
        let nn = ks.n_nodes();
        let state = CoupledState::new(
            vec![0.82],
            Field::from_fn(0.01, nn, |x| {
                0.29 * (std::f64::consts::PI * x).cos() + 0.1 * (2.0 * x).sin()
            }),
        );
        let z = w_to_z(&u_to_w(&state, &ks).unwrap(), &ks).unwrap();

        let u_a = dirichlet_u(&state, &ks).unwrap();
        let u_b = dirichlet_u_target_form(&z, &ks).unwrap();
        assert!((u_a - u_b).abs() < 1e-4, "dirichlet {u_a} vs {u_b}");

        let v_a = neumann_u(&state, &ks).unwrap();
        let v_b = neumann_u_target_form(&z, &ks).unwrap();
        assert!((v_a - v_b).abs() < 1e-4, "neumann {v_a} vs {v_b}");
    }

    #[test]
    fn apply_reports_clamping() {
        let (_, _, ks) = ex1(0.04);
        let law = ControlLaw::new(Actuation::Dirichlet, ks.clone(), 0.5);
        let state = CoupledState::new(
            vec![5.0],
            Field::from_fn(0.04, ks.n_nodes(), |x| 4.0 * (std::f64::consts::PI * x).cos()),
        );
        let (u, clamped) = law.apply(&state).unwrap();
        assert!(clamped);
        assert_eq!(u.abs(), 0.5);
        let zero_law = ControlLaw::zero(Actuation::Neumann);
        let (u0, c0) = zero_law.apply(&state).unwrap();
        assert_eq!(u0, 0.0);
        assert!(!c0);
    }
}
