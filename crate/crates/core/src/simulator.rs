//! Explicit finite-difference integration of the delayed closed loop, in
//! original or target coordinates, with delay history management and
//! optional Lyapunov/Halanay monitoring.
//!
//! Scheme: forward Euler in time, centered second differences in space,
//! ghost points for the Neumann ends (u_{-1} = u_1 at x = 0 and
//! u_{N+1} = u_{N-1} + 2 dx sat(U) at x = 1). Stability requires the CFL
//! bound dt <= dx^2 / 2 for the unit-diffusivity heat equation.

use crate::controller::ControlLaw;
use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::linalg::Matrix;
use crate::num::{r64, rus, Real};
use crate::plant::{Actuation, DesignGains, PlantParams};
use crate::quad::PrefixWeights;
use crate::transform::{u_to_w, w_to_z, CoupledState, Field};

/// Constant-in-theta initial history on [-h, 0]: X(theta) = x0 and
/// u(., theta) = u0 (the common case in practice).
#[derive(Debug, Clone)]
pub struct InitialData<T> {
    pub x0: Vec<T>,
    pub u0: Field<T>,
}

/// Ring buffer of past (X, field) snapshots, one per time step, with linear
/// interpolation between steps for lags that are not multiples of dt.
#[derive(Debug, Clone)]
pub struct HistoryBuffer<T> {
    dt: T,
    /// Step index of the newest stored entry.
    newest: i64,
    capacity: usize,
    entries: std::collections::VecDeque<(Vec<T>, Vec<T>)>,
}

impl<T: Real> HistoryBuffer<T> {
    /// Buffer covering `lag_steps` steps of history; pre-filled with the
    /// initial data for steps -lag_steps..=0.
    pub fn new(dt: T, lag_steps: usize, init: &InitialData<T>) -> Self {
        let capacity = lag_steps + 2;
        let mut entries = std::collections::VecDeque::with_capacity(capacity);
        for _ in 0..=lag_steps {
            entries.push_back((init.x0.clone(), init.u0.values.clone()));
        }
        Self { dt, newest: 0, capacity, entries }
    }

    pub fn push(&mut self, x: Vec<T>, field: Vec<T>) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((x, field));
        self.newest += 1;
    }

    fn entry(&self, step: i64) -> Option<&(Vec<T>, Vec<T>)> {
        let oldest = self.newest - (self.entries.len() as i64 - 1);
        if step < oldest || step > self.newest {
            return None;
        }
        self.entries.get((step - oldest) as usize)
    }

    /// Sample the stored history at time `t - tau` where `t` is the time of
    /// the newest entry. Linear interpolation between neighbouring steps;
    /// exact lookup when the lag is a step multiple.
    pub fn sample(&self, tau: T) -> Result<(Vec<T>, Vec<T>)> {
        let t_now = rus::<T>(self.newest.max(0) as usize) * self.dt;
        let steps_back = tau / self.dt;
        let lo = steps_back.floor();
        let frac = steps_back - lo;
        let lo_i = lo.to_i64().ok_or(Error::NonFinite("delay lag"))?;
        let hi_step = self.newest - lo_i;
        let lo_step = hi_step - 1;
        let out_of_range = || Error::DelayOutOfRange {
            t: t_now.to_f64().unwrap_or(f64::NAN),
            lag: tau.to_f64().unwrap_or(f64::NAN),
        };
        if frac == T::zero() {
            let (x, f) = self.entry(hi_step).ok_or_else(out_of_range)?;
            return Ok((x.clone(), f.clone()));
        }
        let (x1, f1) = self.entry(hi_step).ok_or_else(out_of_range)?;
        let (x0, f0) = self.entry(lo_step).ok_or_else(out_of_range)?;
        let w1 = T::one() - frac;
        let x = x0.iter().zip(x1.iter()).map(|(a, b)| *a * frac + *b * w1).collect();
        let f = f0.iter().zip(f1.iter()).map(|(a, b)| *a * frac + *b * w1).collect();
        Ok((x, f))
    }
}

/// Grid, horizon, and recording options for a run.
#[derive(Debug, Clone)]
pub struct SimConfig<T> {
    pub dt: T,
    pub t_end: T,
    /// Record every `stride` steps (the initial state is always recorded).
    pub stride: usize,
    /// Norm-squared threshold that flags a diverged run.
    pub divergence_threshold: T,
    /// Saturated samples strictly after this time are counted separately.
    pub sat_mark_time: T,
    pub monitor: Option<MonitorParams<T>>,
}

impl<T: Real> SimConfig<T> {
    pub fn new(dt: T, t_end: T) -> Self {
        Self {
            dt,
            t_end,
            stride: 250,
            divergence_threshold: r64(1e12),
            sat_mark_time: T::one(),
            monitor: None,
        }
    }
}

/// Lyapunov weights for monitoring V = X^T P X + p1 ||z||^2 (+ p2 ||z_x||^2).
#[derive(Debug, Clone)]
pub struct MonitorParams<T> {
    pub p_mat: Matrix<T>,
    pub p1: T,
    /// Include the gradient term (Neumann certificates).
    pub p2: Option<T>,
    pub delta0: T,
    pub delta1: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimStatus {
    Completed,
    Diverged,
}

/// Recorded run: stride-sampled series plus scalar summaries tracked at
/// every step.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub dt: T,
    pub stride: usize,
    pub times: Vec<T>,
    pub x: Vec<Vec<T>>,
    pub u_applied: Vec<T>,
    pub sat_active: Vec<bool>,
    pub norm_sq: Vec<T>,
    pub v: Option<Vec<T>>,
    pub fields: Vec<Vec<T>>,
    pub status: SimStatus,
    pub initial_norm_sq: T,
    pub terminal_norm_sq: T,
    pub max_norm_sq: T,
    pub max_abs_u: T,
    pub sat_count_total: usize,
    pub sat_count_after_mark: usize,
    pub halanay_violations: usize,
}

enum Dynamics<'a, T> {
    /// Original coordinates driven by the boundary law.
    Original { law: &'a ControlLaw<T> },
    /// Target coordinates: damped heat with forcing rows g(x) (A1 - a2 I),
    /// homogeneous actuated boundary, and A + BK in the ODE.
    Target { actuation: Actuation, forcing: Vec<Vec<T>>, acl: Matrix<T> },
}

/// Applied boundary value of one explicit step.
#[derive(Debug, Clone, Copy)]
pub struct StepOutcome<T> {
    pub u_applied: T,
    pub clamped: bool,
}

/// One explicit Euler / centered-difference integrator instance. It owns its
/// state and delay history exclusively; independent instances may run on
/// separate threads.
pub struct Integrator<'a, T: Real> {
    /// For target runs this is a shadow plant whose `a_heat` holds the
    /// damping c.
    plant: PlantParams<T>,
    dynamics: Dynamics<'a, T>,
    kernels: Option<&'a KernelSet<T>>,
    dx: T,
    dt: T,
    nn: usize,
    quad: PrefixWeights<T>,
    include_deriv: bool,
    history: HistoryBuffer<T>,
    x: Vec<T>,
    u: Vec<T>,
    step_idx: usize,
}

impl<'a, T: Real> Integrator<'a, T> {
    /// Closed loop in original coordinates under the given boundary law.
    /// Refuses to construct when dt violates the CFL bound dx^2 / 2.
    pub fn original(
        plant: &PlantParams<T>,
        law: &'a ControlLaw<T>,
        init: &InitialData<T>,
        dt: T,
    ) -> Result<Self> {
        let nn = init.u0.n_nodes();
        if let Some(ks) = &law.kernels {
            if ks.n_nodes() != nn {
                return Err(Error::GridMismatch { expected: ks.n_nodes(), got: nn });
            }
        }
        let include_deriv = law.actuation == Actuation::Neumann;
        Self::build(
            plant.clone(),
            Dynamics::Original { law },
            law.kernels.as_deref(),
            init,
            dt,
            include_deriv,
        )
    }

    /// Target system z_t = z_xx - c z + a2 z(t - tau) minus the forcing
    /// [gamma - int q gamma](A1 - a2 I) X(t - tau), with z_x(0) = 0 and the
    /// homogeneous actuated boundary (z(1) = 0 or z_x(1) = 0).
    pub fn target(
        plant: &PlantParams<T>,
        gains: &DesignGains<T>,
        actuation: Actuation,
        init_z: &InitialData<T>,
        kernels: &'a KernelSet<T>,
        dt: T,
    ) -> Result<Self> {
        let nn = kernels.n_nodes();
        if init_z.u0.n_nodes() != nn {
            return Err(Error::GridMismatch { expected: nn, got: init_z.u0.n_nodes() });
        }
        let n = plant.dim();
        let dx = kernels.dx;
        // forcing rows: [gamma(x_i) - int_0^{x_i} q(x_i,y) gamma(y) dy](A1 - a2 I)
        let shifted = Matrix::from_fn(n, n, |i, j| {
            plant.a1.get(i, j) - if i == j { plant.a2_heat } else { T::zero() }
        });
        let mut forcing = Vec::with_capacity(nn);
        for i in 0..nn {
            let w = kernels.quad.weights(i);
            let mut g = kernels.gamma[i].clone();
            for (j, wj) in w.iter().enumerate() {
                let scale = *wj * kernels.q.get(i, j) * dx;
                for (gc, gj) in g.iter_mut().zip(kernels.gamma[j].iter()) {
                    *gc -= scale * *gj;
                }
            }
            let row: Vec<T> =
                (0..n).map(|j| (0..n).map(|m| g[m] * shifted.get(m, j)).sum()).collect();
            forcing.push(row);
        }
        // the target reaction reads the damping c out of the a_heat slot
        let mut shadow = plant.clone();
        shadow.a_heat = gains.c;
        let dynamics = Dynamics::Target {
            actuation,
            forcing,
            acl: plant.closed_loop_matrix(&gains.k),
        };
        Self::build(shadow, dynamics, Some(kernels), init_z, dt, actuation == Actuation::Neumann)
    }

    fn build(
        plant: PlantParams<T>,
        dynamics: Dynamics<'a, T>,
        kernels: Option<&'a KernelSet<T>>,
        init: &InitialData<T>,
        dt: T,
        include_deriv: bool,
    ) -> Result<Self> {
        let nn = init.u0.n_nodes();
        if nn < 3 {
            return Err(Error::GridTooCoarse { needed: 2, got: nn.saturating_sub(1) });
        }
        let dx = init.u0.dx;
        let limit = dx * dx * r64(0.5);
        if dt > limit {
            return Err(Error::CflViolation {
                dt: dt.to_f64().unwrap_or(f64::NAN),
                limit: limit.to_f64().unwrap_or(f64::NAN),
            });
        }
        if init.x0.len() != plant.dim() {
            return Err(Error::GridMismatch { expected: plant.dim(), got: init.x0.len() });
        }
        let lag_steps =
            (plant.h / dt).ceil().to_usize().ok_or(Error::NonFinite("delay horizon"))?;
        Ok(Self {
            history: HistoryBuffer::new(dt, lag_steps, init),
            x: init.x0.clone(),
            u: init.u0.values.clone(),
            quad: PrefixWeights::new(nn),
            plant,
            dynamics,
            kernels,
            dx,
            dt,
            nn,
            include_deriv,
            step_idx: 0,
        })
    }

    #[inline]
    pub fn time(&self) -> T {
        rus::<T>(self.step_idx) * self.dt
    }

    pub fn ode_state(&self) -> &[T] {
        &self.x
    }

    pub fn field(&self) -> &[T] {
        &self.u
    }

    pub fn snapshot(&self) -> CoupledState<T> {
        CoupledState::new(self.x.clone(), Field { dx: self.dx, values: self.u.clone() })
    }

    fn field_norm_sq(&self, values: &[T]) -> T {
        self.quad.norm_sq(self.dx, values)
    }

    fn deriv_norm_sq(&self, values: &[T]) -> T {
        let nn = self.nn;
        let dx = self.dx;
        let two = r64::<T>(2.0);
        let mut d = Vec::with_capacity(nn);
        d.push((values[1] - values[0]) / dx);
        for i in 1..nn - 1 {
            d.push((values[i + 1] - values[i - 1]) / (two * dx));
        }
        d.push((values[nn - 1] - values[nn - 2]) / dx);
        self.quad.norm_sq(dx, &d)
    }

    /// |X|^2 + ||u||^2, plus ||u_x||^2 under Neumann actuation.
    pub fn norm_sq(&self) -> T {
        let mut n: T = self.x.iter().map(|v| *v * *v).sum();
        n += self.field_norm_sq(&self.u);
        if self.include_deriv {
            n += self.deriv_norm_sq(&self.u);
        }
        n
    }

    /// V = X^T P X + p1 ||z||^2 (+ p2 ||z_x||^2); original-coordinate runs
    /// transform the snapshot to z first.
    pub fn lyapunov(&self, monitor: &MonitorParams<T>) -> Result<T> {
        let z_values = match &self.dynamics {
            Dynamics::Original { .. } => {
                let ks = self.kernels.ok_or(Error::MissingKernels("monitor"))?;
                let z = w_to_z(&u_to_w(&self.snapshot(), ks)?, ks)?;
                z.field.values
            }
            Dynamics::Target { .. } => self.u.clone(),
        };
        let px = monitor.p_mat.matvec(&self.x);
        let mut v: T = self.x.iter().zip(px.iter()).map(|(a, b)| *a * *b).sum();
        v += monitor.p1 * self.field_norm_sq(&z_values);
        if let Some(p2) = monitor.p2 {
            v += p2 * self.deriv_norm_sq(&z_values);
        }
        Ok(v)
    }

    /// One forward-Euler update: boundary value from the pre-step state,
    /// delayed terms from the ring buffer, centered differences inside,
    /// ghost points at the reflecting/Neumann ends.
    pub fn step(&mut self) -> Result<StepOutcome<T>> {
        let dt = self.dt;
        let dx = self.dx;
        let nn = self.nn;
        let two = r64::<T>(2.0);
        let rdt = dt / (dx * dx);
        let tau = self.plant.delay.tau(self.time());
        let (x_d, u_d) = self.history.sample(tau)?;

        let (u_applied, clamped, x_new) = match &self.dynamics {
            Dynamics::Original { law } => {
                let (uv, clamped) = law.apply(&self.snapshot())?;
                let mut x_new = vec![T::zero(); self.x.len()];
                for i in 0..self.x.len() {
                    let dxdt = self.plant.a.row_dot(i, &self.x)
                        + self.plant.a1.row_dot(i, &x_d)
                        + self.plant.b.get(i, 0) * self.u[0];
                    x_new[i] = self.x[i] + dt * dxdt;
                }
                (uv, clamped, x_new)
            }
            Dynamics::Target { acl, .. } => {
                let mut x_new = vec![T::zero(); self.x.len()];
                for i in 0..self.x.len() {
                    let dxdt = acl.row_dot(i, &self.x)
                        + self.plant.a1.row_dot(i, &x_d)
                        + self.plant.b.get(i, 0) * self.u[0];
                    x_new[i] = self.x[i] + dt * dxdt;
                }
                (T::zero(), false, x_new)
            }
        };

        let a_heat = self.plant.a_heat;
        let a2_heat = self.plant.a2_heat;
        let reaction = |i: usize, u: &[T]| -> T {
            match &self.dynamics {
                Dynamics::Original { .. } => a_heat * u[i] + a2_heat * u_d[i],
                Dynamics::Target { forcing, .. } => {
                    let g_term: T =
                        forcing[i].iter().zip(x_d.iter()).map(|(g, xv)| *g * *xv).sum();
                    -a_heat * u[i] + a2_heat * u_d[i] - g_term
                }
            }
        };
        let u = &self.u;
        let mut u_new = vec![T::zero(); nn];
        // left end: ghost point for u_x(0) = 0
        u_new[0] = u[0] + rdt * (two * u[1] - two * u[0]) + dt * reaction(0, u);
        for i in 1..nn - 1 {
            u_new[i] = u[i] + rdt * (u[i + 1] - two * u[i] + u[i - 1]) + dt * reaction(i, u);
        }
        let actuation = match &self.dynamics {
            Dynamics::Original { law } => law.actuation,
            Dynamics::Target { actuation, .. } => *actuation,
        };
        match actuation {
            Actuation::Dirichlet => {
                u_new[nn - 1] = u_applied;
            }
            Actuation::Neumann => {
                let flux = two * dx * u_applied;
                u_new[nn - 1] = u[nn - 1]
                    + rdt * (two * u[nn - 2] + flux - two * u[nn - 1])
                    + dt * reaction(nn - 1, u);
            }
        }

        self.x = x_new;
        self.u = u_new;
        self.history.push(self.x.clone(), self.u.clone());
        self.step_idx += 1;
        Ok(StepOutcome { u_applied, clamped })
    }
}

fn run<T: Real>(mut integ: Integrator<'_, T>, cfg: &SimConfig<T>) -> Result<Trajectory<T>> {
    let n_steps = (cfg.t_end / cfg.dt).round().to_usize().ok_or(Error::NonFinite("horizon"))?;
    let mut traj = Trajectory {
        dt: cfg.dt,
        stride: cfg.stride,
        times: Vec::new(),
        x: Vec::new(),
        u_applied: Vec::new(),
        sat_active: Vec::new(),
        norm_sq: Vec::new(),
        v: cfg.monitor.as_ref().map(|_| Vec::new()),
        fields: Vec::new(),
        status: SimStatus::Completed,
        initial_norm_sq: integ.norm_sq(),
        terminal_norm_sq: T::zero(),
        max_norm_sq: T::zero(),
        max_abs_u: T::zero(),
        sat_count_total: 0,
        sat_count_after_mark: 0,
        halanay_violations: 0,
    };
    traj.max_norm_sq = traj.initial_norm_sq;

    // Halanay monitor state: stride-sampled V values inside the delay window.
    let mut v_window: std::collections::VecDeque<(T, T)> = std::collections::VecDeque::new();
    let mut v_prev: Option<(T, T)> = None;
    let h = integ.plant.h;

    let record = |traj: &mut Trajectory<T>,
                      integ: &Integrator<'_, T>,
                      outcome: StepOutcome<T>,
                      v_window: &mut std::collections::VecDeque<(T, T)>,
                      v_prev: &mut Option<(T, T)>|
     -> Result<()> {
        let t = integ.time();
        traj.times.push(t);
        traj.x.push(integ.x.clone());
        traj.u_applied.push(outcome.u_applied);
        traj.sat_active.push(outcome.clamped);
        traj.norm_sq.push(integ.norm_sq());
        traj.fields.push(integ.u.clone());
        if let Some(monitor) = &cfg.monitor {
            let v = integ.lyapunov(monitor)?;
            if let Some((tp, vp)) = *v_prev {
                // discrete Halanay residual: V' + 2 d0 V - 2 d1 sup V <= tol
                let vdot = (v - vp) / (t - tp);
                let sup = v_window.iter().map(|(_, vv)| *vv).fold(v, |m, vv| m.max(vv));
                let two = r64::<T>(2.0);
                let resid = vdot + two * monitor.delta0 * v - two * monitor.delta1 * sup;
                let tol = r64::<T>(1e-6) * sup.max(T::one());
                if resid > tol {
                    traj.halanay_violations += 1;
                }
            }
            while let Some(&(tf, _)) = v_window.front() {
                if tf < t - h {
                    v_window.pop_front();
                } else {
                    break;
                }
            }
            v_window.push_back((t, v));
            *v_prev = Some((t, v));
            traj.v.as_mut().expect("monitor storage").push(v);
        }
        Ok(())
    };

    let zero = StepOutcome { u_applied: T::zero(), clamped: false };
    record(&mut traj, &integ, zero, &mut v_window, &mut v_prev)?;

    for step in 1..=n_steps {
        let outcome = integ.step()?;
        if outcome.clamped {
            traj.sat_count_total += 1;
            if integ.time() > cfg.sat_mark_time {
                traj.sat_count_after_mark += 1;
            }
        }
        traj.max_abs_u = traj.max_abs_u.max(outcome.u_applied.abs());
        let nrm = integ.norm_sq();
        traj.max_norm_sq = traj.max_norm_sq.max(nrm);
        if step % cfg.stride == 0 || step == n_steps {
            record(&mut traj, &integ, outcome, &mut v_window, &mut v_prev)?;
        }
        if !nrm.is_finite() || nrm > cfg.divergence_threshold {
            traj.status = SimStatus::Diverged;
            traj.terminal_norm_sq = nrm;
            return Ok(traj);
        }
        traj.terminal_norm_sq = nrm;
    }
    Ok(traj)
}

/// Integrate the original closed loop under the given boundary law.
pub fn simulate<T: Real>(
    plant: &PlantParams<T>,
    law: &ControlLaw<T>,
    init: &InitialData<T>,
    cfg: &SimConfig<T>,
) -> Result<Trajectory<T>> {
    if cfg.monitor.is_some() && law.kernels.is_none() {
        return Err(Error::MissingKernels("Lyapunov monitor"));
    }
    let integ = Integrator::original(plant, law, init, cfg.dt)?;
    run(integ, cfg)
}

/// Integrate the target system from target-coordinate initial data.
pub fn simulate_target<T: Real>(
    plant: &PlantParams<T>,
    gains: &DesignGains<T>,
    actuation: Actuation,
    init_z: &InitialData<T>,
    kernels: &KernelSet<T>,
    cfg: &SimConfig<T>,
) -> Result<Trajectory<T>> {
    let integ = Integrator::target(plant, gains, actuation, init_z, kernels, cfg.dt)?;
    run(integ, cfg)
}
