//! Closed-form backstepping kernels and their grid sampling.
//!
//! The forward transform uses the row kernel gamma(x) and the triangular
//! kernel k(x, y); the inverse uses psi(x) and n(x, y); the damping
//! transform pair uses q(x, y) and l(x, y). All six have closed forms:
//! gamma/psi through a 2n x 2n matrix exponential, k/n as running integrals
//! of gamma/psi, and q/l through first-order Bessel ratio series.

use crate::bessel::{i1_ratio, i1_ratio_deriv, j1_ratio, j1_ratio_deriv};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::num::{r64, rus, Real};
use crate::plant::{DesignGains, PlantParams};
use crate::quad::PrefixWeights;

/// Square row-major table holding a triangular kernel sampled at
/// (x_i, y_j) for j <= i; entries above the diagonal stay zero.
#[derive(Debug, Clone)]
pub struct Table<T> {
    nn: usize,
    data: Vec<T>,
}

impl<T: Real> Table<T> {
    pub fn zeros(nn: usize) -> Self {
        Self { nn, data: vec![T::zero(); nn * nn] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.nn + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.nn + j] = v;
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.nn
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Max |value| over the stored triangle j <= i.
    pub fn max_abs_triangle(&self) -> T {
        let mut best = T::zero();
        for i in 0..self.nn {
            for j in 0..=i {
                best = best.max(self.get(i, j).abs());
            }
        }
        best
    }
}

/// Closed-form evaluators for gamma, psi and their x-derivatives.
///
/// gamma(x) = [K 0] exp(M x) [I; 0] with M = [[0, A - aI], [I, 0]];
/// psi uses A + BK - aI in place of A - aI.
#[derive(Debug, Clone)]
pub struct GammaPsiEval<T> {
    n: usize,
    k_row: Vec<T>,
    m_gamma: Matrix<T>,
    m_psi: Matrix<T>,
}

impl<T: Real> GammaPsiEval<T> {
    pub fn new(plant: &PlantParams<T>, gains: &DesignGains<T>) -> Self {
        let n = plant.dim();
        let shifted = |m: &Matrix<T>| {
            Matrix::from_fn(n, n, |i, j| {
                m.get(i, j) - if i == j { plant.a_heat } else { T::zero() }
            })
        };
        let block = |top_right: Matrix<T>| {
            let zero = Matrix::zeros(n, n);
            let eye = Matrix::identity(n);
            Matrix::from_blocks(&zero, &top_right, &eye, &zero)
        };
        Self {
            n,
            k_row: gains.k.clone(),
            m_gamma: block(shifted(&plant.a)),
            m_psi: block(shifted(&plant.closed_loop_matrix(&gains.k))),
        }
    }

    fn row_exp(&self, m: &Matrix<T>, x: T, deriv: bool) -> Result<Vec<T>> {
        let e = m.scale(x).expm()?;
        let e = if deriv { m.matmul(&e) } else { e };
        // [K 0] * e * [I; 0]: top-left n x n block acted on by the gain row.
        let mut out = vec![T::zero(); self.n];
        for (j, o) in out.iter_mut().enumerate() {
            for (i, ki) in self.k_row.iter().enumerate() {
                *o += *ki * e.get(i, j);
            }
        }
        Ok(out)
    }

    pub fn gamma(&self, x: T) -> Result<Vec<T>> {
        self.row_exp(&self.m_gamma, x, false)
    }

    pub fn gamma_prime(&self, x: T) -> Result<Vec<T>> {
        self.row_exp(&self.m_gamma, x, true)
    }

    pub fn psi(&self, x: T) -> Result<Vec<T>> {
        self.row_exp(&self.m_psi, x, false)
    }

    pub fn psi_prime(&self, x: T) -> Result<Vec<T>> {
        self.row_exp(&self.m_psi, x, true)
    }
}

/// Output of [`compute_gamma_psi`]: the four sampled row families.
#[derive(Debug, Clone)]
pub struct GammaPsiSamples<T> {
    pub gamma: Vec<Vec<T>>,
    pub gamma_prime: Vec<Vec<T>>,
    pub psi: Vec<Vec<T>>,
    pub psi_prime: Vec<Vec<T>>,
}

/// Sample gamma, psi and their exact derivatives on an arbitrary sorted grid
/// within [0, 1].
pub fn compute_gamma_psi<T: Real>(
    plant: &PlantParams<T>,
    gains: &DesignGains<T>,
    grid: &[T],
) -> Result<GammaPsiSamples<T>> {
    gains.validate(plant)?;
    let eval = GammaPsiEval::new(plant, gains);
    let mut out = GammaPsiSamples {
        gamma: Vec::with_capacity(grid.len()),
        gamma_prime: Vec::with_capacity(grid.len()),
        psi: Vec::with_capacity(grid.len()),
        psi_prime: Vec::with_capacity(grid.len()),
    };
    for &x in grid {
        out.gamma.push(eval.gamma(x)?);
        out.gamma_prime.push(eval.gamma_prime(x)?);
        out.psi.push(eval.psi(x)?);
        out.psi_prime.push(eval.psi_prime(x)?);
    }
    Ok(out)
}

/// A (value, x-derivative) table pair for two kernels.
pub type KernelTables<T> = (Table<T>, Table<T>, Table<T>, Table<T>);

/// k(x, y) = int_0^{x-y} gamma(s) B ds and its x-derivative gamma(x-y) B,
/// plus the psi-based analogues n, n_x. The kernels depend on x - y only,
/// so the tables are filled from one running profile along the grid.
pub fn compute_k_n<T: Real>(
    samples: &GammaPsiSamples<T>,
    plant: &PlantParams<T>,
    dx: T,
) -> Result<KernelTables<T>> {
    let nn = samples.gamma.len();
    if nn < 5 {
        return Err(Error::GridTooCoarse { needed: 4, got: nn.saturating_sub(1) });
    }
    let quad = PrefixWeights::new(nn);
    let dot_b = |row: &[T]| -> T {
        row.iter().zip(0..plant.dim()).map(|(v, i)| *v * plant.b.get(i, 0)).sum()
    };
    let gamma_b: Vec<T> = samples.gamma.iter().map(|r| dot_b(r)).collect();
    let psi_b: Vec<T> = samples.psi.iter().map(|r| dot_b(r)).collect();
    let kappa: Vec<T> = (0..nn).map(|d| quad.integrate_prefix(dx, &gamma_b, d)).collect();
    let nu: Vec<T> = (0..nn).map(|d| quad.integrate_prefix(dx, &psi_b, d)).collect();

    let mut k = Table::zeros(nn);
    let mut k_x = Table::zeros(nn);
    let mut n = Table::zeros(nn);
    let mut n_x = Table::zeros(nn);
    for i in 0..nn {
        for j in 0..=i {
            let d = i - j;
            k.set(i, j, kappa[d]);
            k_x.set(i, j, gamma_b[d]);
            n.set(i, j, nu[d]);
            n_x.set(i, j, psi_b[d]);
        }
    }
    Ok((k, k_x, n, n_x))
}

/// q(x, y) = -(a+c) x I1(sqrt(s))/sqrt(s) with s = (a+c)(x^2 - y^2).
pub fn q_kernel<T: Real>(a_plus_c: T, x: T, y: T) -> T {
    -a_plus_c * x * i1_ratio(a_plus_c * (x * x - y * y))
}

/// d/dx of [`q_kernel`].
pub fn q_kernel_x<T: Real>(a_plus_c: T, x: T, y: T) -> T {
    let s = a_plus_c * (x * x - y * y);
    -a_plus_c * i1_ratio(s) - r64::<T>(2.0) * a_plus_c * a_plus_c * x * x * i1_ratio_deriv(s)
}

/// l(x, y) = -(a+c) x J1(sqrt(s))/sqrt(s).
pub fn l_kernel<T: Real>(a_plus_c: T, x: T, y: T) -> T {
    -a_plus_c * x * j1_ratio(a_plus_c * (x * x - y * y))
}

/// d/dx of [`l_kernel`].
pub fn l_kernel_x<T: Real>(a_plus_c: T, x: T, y: T) -> T {
    let s = a_plus_c * (x * x - y * y);
    -a_plus_c * j1_ratio(s) - r64::<T>(2.0) * a_plus_c * a_plus_c * x * x * j1_ratio_deriv(s)
}

/// Sample q, q_x, l, l_x on the triangular grid. The series formulation is
/// entire in s, so a + c may take any sign.
pub fn compute_q_l<T: Real>(a_heat: T, c: T, nodes: &[T]) -> KernelTables<T> {
    let apc = a_heat + c;
    let nn = nodes.len();
    let mut q = Table::zeros(nn);
    let mut q_x = Table::zeros(nn);
    let mut l = Table::zeros(nn);
    let mut l_x = Table::zeros(nn);
    for i in 0..nn {
        for j in 0..=i {
            let (x, y) = (nodes[i], nodes[j]);
            q.set(i, j, q_kernel(apc, x, y));
            q_x.set(i, j, q_kernel_x(apc, x, y));
            l.set(i, j, l_kernel(apc, x, y));
            l_x.set(i, j, l_kernel_x(apc, x, y));
        }
    }
    (q, q_x, l, l_x)
}

/// Discretized kernels plus the closed-form evaluators that produced them.
#[derive(Debug, Clone)]
pub struct KernelSet<T> {
    pub dx: T,
    pub a_plus_c: T,
    n_ode: usize,
    b_col: Vec<T>,
    eval: GammaPsiEval<T>,
    pub(crate) quad: PrefixWeights<T>,
    pub gamma: Vec<Vec<T>>,
    pub gamma_prime: Vec<Vec<T>>,
    pub psi: Vec<Vec<T>>,
    pub psi_prime: Vec<Vec<T>>,
    pub k: Table<T>,
    pub k_x: Table<T>,
    pub n: Table<T>,
    pub n_x: Table<T>,
    pub q: Table<T>,
    pub q_x: Table<T>,
    pub l: Table<T>,
    pub l_x: Table<T>,
}

impl<T: Real> KernelSet<T> {
    /// Build every kernel table on the uniform grid with step `dx`
    /// (which must divide 1).
    pub fn build(plant: &PlantParams<T>, gains: &DesignGains<T>, dx: T) -> Result<Self> {
        gains.validate(plant)?;
        let steps_f = (T::one() / dx).round();
        let steps = steps_f.to_usize().ok_or(Error::NonFinite("grid step"))?;
        if (steps_f * dx - T::one()).abs() > r64(1e-9) {
            return Err(Error::InvalidPlant(format!("dx = {dx} does not divide the unit interval")));
        }
        if steps < 4 {
            return Err(Error::GridTooCoarse { needed: 4, got: steps });
        }
        let nn = steps + 1;
        let nodes: Vec<T> = (0..nn).map(|i| rus::<T>(i) * dx).collect();
        let samples = compute_gamma_psi(plant, gains, &nodes)?;
        let (k, k_x, n, n_x) = compute_k_n(&samples, plant, dx)?;
        let (q, q_x, l, l_x) = compute_q_l(plant.a_heat, gains.c, &nodes);
        Ok(Self {
            dx,
            a_plus_c: plant.a_heat + gains.c,
            n_ode: plant.dim(),
            b_col: (0..plant.dim()).map(|i| plant.b.get(i, 0)).collect(),
            eval: GammaPsiEval::new(plant, gains),
            quad: PrefixWeights::new(nn),
            gamma: samples.gamma,
            gamma_prime: samples.gamma_prime,
            psi: samples.psi,
            psi_prime: samples.psi_prime,
            k,
            k_x,
            n,
            n_x,
            q,
            q_x,
            l,
            l_x,
        })
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.k.n_nodes()
    }

    #[inline]
    pub fn ode_dim(&self) -> usize {
        self.n_ode
    }

    pub fn node(&self, i: usize) -> T {
        rus::<T>(i) * self.dx
    }

    pub fn evaluators(&self) -> &GammaPsiEval<T> {
        &self.eval
    }

    /// L2 norm squared of a field sampled on this grid.
    pub fn field_norm_sq(&self, values: &[T]) -> T {
        self.quad.norm_sq(self.dx, values)
    }

    fn row_norm(row: &[T]) -> T {
        row.iter().map(|v| *v * *v).sum::<T>().sqrt()
    }

    /// Grid plus midpoint refinement of max |gamma(x)| (Euclidean row norm).
    pub fn max_abs_gamma(&self) -> Result<T> {
        self.refined_row_max(false)
    }

    pub fn max_abs_gamma_prime(&self) -> Result<T> {
        self.refined_row_max(true)
    }

    fn refined_row_max(&self, deriv: bool) -> Result<T> {
        let nn = self.n_nodes();
        let half = self.dx * r64(0.5);
        let mut best = T::zero();
        for i in 0..nn {
            let sampled = if deriv { &self.gamma_prime[i] } else { &self.gamma[i] };
            best = best.max(Self::row_norm(sampled));
            if i + 1 < nn {
                let x = self.node(i) + half;
                let row = if deriv { self.eval.gamma_prime(x)? } else { self.eval.gamma(x)? };
                best = best.max(Self::row_norm(&row));
            }
        }
        Ok(best)
    }

    /// k depends on x - y only, so its refined maximum scans the half grid
    /// of differences (and never reports less than the table maximum).
    pub fn max_abs_k(&self) -> Result<T> {
        let fine = self.half_grid_profile()?;
        let refined = fine.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        Ok(refined.max(self.k.max_abs_triangle()))
    }

    pub fn max_abs_k_x(&self) -> Result<T> {
        let nn = self.n_nodes();
        let half = self.dx * r64(0.5);
        let mut best = T::zero();
        for i in 0..(2 * nn - 1) {
            let d = rus::<T>(i) * half;
            let row = self.eval.gamma(d)?;
            let v: T = row.iter().zip(self.b_col.iter()).map(|(g, b)| *g * *b).sum();
            best = best.max(v.abs());
        }
        Ok(best)
    }

    /// Running profile of int_0^d gamma B on the dx/2 grid.
    fn half_grid_profile(&self) -> Result<Vec<T>> {
        let nn = self.n_nodes();
        let fine_nodes = 2 * nn - 1;
        let half = self.dx * r64(0.5);
        let mut gb = Vec::with_capacity(fine_nodes);
        for i in 0..fine_nodes {
            let row = self.eval.gamma(rus::<T>(i) * half)?;
            gb.push(row.iter().zip(self.b_col.iter()).map(|(g, b)| *g * *b).sum());
        }
        let quad = PrefixWeights::new(fine_nodes);
        Ok((0..fine_nodes).map(|d| quad.integrate_prefix(half, &gb, d)).collect())
    }

    fn triangle_max(&self, f: impl Fn(T, T) -> T) -> T {
        let nn = self.n_nodes();
        let half = self.dx * r64(0.5);
        let fine = 2 * nn - 1;
        let mut best = T::zero();
        for i in 0..fine {
            let x = rus::<T>(i) * half;
            for j in 0..=i {
                let y = rus::<T>(j) * half;
                best = best.max(f(x, y).abs());
            }
        }
        best
    }

    pub fn max_abs_q(&self) -> T {
        let apc = self.a_plus_c;
        self.triangle_max(|x, y| q_kernel(apc, x, y))
    }

    pub fn max_abs_q_x(&self) -> T {
        let apc = self.a_plus_c;
        self.triangle_max(|x, y| q_kernel_x(apc, x, y))
    }

    /// max over x of |q(x, x)| = |a+c|/2 at x = 1.
    pub fn max_abs_q_diag(&self) -> T {
        (self.a_plus_c * r64(0.5)).abs()
    }

    pub fn max_abs_l(&self) -> T {
        let apc = self.a_plus_c;
        self.triangle_max(|x, y| l_kernel(apc, x, y))
    }

    pub fn max_abs_l_x(&self) -> T {
        let apc = self.a_plus_c;
        self.triangle_max(|x, y| l_kernel_x(apc, x, y))
    }

    fn top_slice_max(&self, f: impl Fn(T) -> T) -> T {
        let nn = self.n_nodes();
        let half = self.dx * r64(0.5);
        let mut best = T::zero();
        for j in 0..(2 * nn - 1) {
            best = best.max(f(rus::<T>(j) * half).abs());
        }
        best
    }

    /// max over y of |n(1, y)|; n(1, y) = nu(1 - y) on the half grid.
    pub fn max_abs_n_top(&self) -> Result<T> {
        let fine = self.half_grid_profile_psi()?;
        let refined = fine.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let top = self.n_nodes() - 1;
        let table = (0..=top).fold(T::zero(), |m, j| m.max(self.n.get(top, j).abs()));
        Ok(refined.max(table))
    }

    pub fn max_abs_n_x_top(&self) -> Result<T> {
        let nn = self.n_nodes();
        let half = self.dx * r64(0.5);
        let mut best = T::zero();
        for d in 0..(2 * nn - 1) {
            let row = self.eval.psi(rus::<T>(d) * half)?;
            let v: T = row.iter().zip(self.b_col.iter()).map(|(p, b)| *p * *b).sum();
            best = best.max(v.abs());
        }
        Ok(best)
    }

    fn half_grid_profile_psi(&self) -> Result<Vec<T>> {
        let nn = self.n_nodes();
        let fine_nodes = 2 * nn - 1;
        let half = self.dx * r64(0.5);
        let mut pb = Vec::with_capacity(fine_nodes);
        for i in 0..fine_nodes {
            let row = self.eval.psi(rus::<T>(i) * half)?;
            pb.push(row.iter().zip(self.b_col.iter()).map(|(p, b)| *p * *b).sum());
        }
        let quad = PrefixWeights::new(fine_nodes);
        Ok((0..fine_nodes).map(|d| quad.integrate_prefix(half, &pb, d)).collect())
    }

    pub fn max_abs_l_top(&self) -> T {
        let apc = self.a_plus_c;
        self.top_slice_max(|y| l_kernel(apc, T::one(), y))
    }

    pub fn max_abs_l_x_top(&self) -> T {
        let apc = self.a_plus_c;
        self.top_slice_max(|y| l_kernel_x(apc, T::one(), y))
    }

    pub fn l_at_corner(&self) -> T {
        l_kernel(self.a_plus_c, T::one(), T::one())
    }

    pub fn psi_at_end(&self) -> &[T] {
        self.psi.last().expect("non-empty grid")
    }

    pub fn psi_prime_at_end(&self) -> &[T] {
        self.psi_prime.last().expect("non-empty grid")
    }

    pub fn gamma_at_end(&self) -> &[T] {
        self.gamma.last().expect("non-empty grid")
    }

    pub fn gamma_prime_at_end(&self) -> &[T] {
        self.gamma_prime.last().expect("non-empty grid")
    }
}

/// Max interior second-difference residuals of each kernel's defining
/// PDE/ODE and max boundary/diagonal violations. All residuals are O(dx^2)
/// for the exact kernels.
#[derive(Debug, Clone)]
pub struct KernelResidualReport<T> {
    /// max |D2 gamma - gamma (A - aI)| over interior nodes.
    pub gamma_ode: T,
    /// max |D2 psi - psi (A + BK - aI)|.
    pub psi_ode: T,
    /// max |k_xx - k_yy| on the strict triangle interior.
    pub k_pde: T,
    /// max |n_xx - n_yy|.
    pub n_pde: T,
    /// max |q_xx - q_yy - (a+c) q|.
    pub q_pde: T,
    /// max |l_xx - l_yy + (a+c) l|.
    pub l_pde: T,
    /// max |k_y(x, 0) + gamma(x) B|.
    pub k_bc: T,
    /// max |n_y(x, 0) + psi(x) B|.
    pub n_bc: T,
    /// max |q_y(x, 0)|.
    pub q_bc: T,
    /// max |l_y(x, 0)|.
    pub l_bc: T,
    /// max |k(x, x)|, exact zero up to rounding.
    pub k_diag: T,
    /// max |n(x, x)|.
    pub n_diag: T,
    /// max |q(x, x) + (a+c) x / 2|.
    pub q_diag: T,
    /// max |l(x, x) + (a+c) x / 2|.
    pub l_diag: T,
}

impl<T: Real> KernelResidualReport<T> {
    /// Worst residual over every category.
    pub fn max_residual(&self) -> T {
        [
            self.gamma_ode, self.psi_ode, self.k_pde, self.n_pde, self.q_pde, self.l_pde,
            self.k_bc, self.n_bc, self.q_bc, self.l_bc, self.k_diag, self.n_diag,
            self.q_diag, self.l_diag,
        ]
        .into_iter()
        .fold(T::zero(), |m, v| m.max(v))
    }
}

/// Check every kernel table against its defining PDE/ODE system by finite
/// differences. Pure diagnostic: returns the residual magnitudes.
pub fn verify_kernel_pdes<T: Real>(
    kernels: &KernelSet<T>,
    plant: &PlantParams<T>,
    gains: &DesignGains<T>,
) -> KernelResidualReport<T> {
    let nn = kernels.n_nodes();
    let dx = kernels.dx;
    let dx2 = dx * dx;
    let apc = kernels.a_plus_c;
    let n = plant.dim();

    let a_shift = Matrix::from_fn(n, n, |i, j| {
        plant.a.get(i, j) - if i == j { plant.a_heat } else { T::zero() }
    });
    let acl = plant.closed_loop_matrix(&gains.k);
    let acl_shift = Matrix::from_fn(n, n, |i, j| {
        acl.get(i, j) - if i == j { plant.a_heat } else { T::zero() }
    });

    let row_ode_residual = |rows: &Vec<Vec<T>>, mat: &Matrix<T>| -> T {
        let mut worst = T::zero();
        for i in 1..nn - 1 {
            for j in 0..n {
                let second = (rows[i + 1][j] - r64::<T>(2.0) * rows[i][j] + rows[i - 1][j]) / dx2;
                // (row * mat)_j = sum_i row_i mat_{ij}
                let rhs: T = (0..n).map(|m| rows[i][m] * mat.get(m, j)).sum();
                worst = worst.max((second - rhs).abs());
            }
        }
        worst
    };

    let wave_residual = |t: &Table<T>| -> T {
        let mut worst = T::zero();
        for i in 2..nn - 1 {
            for j in 1..i.saturating_sub(1) {
                let xx = (t.get(i + 1, j) - r64::<T>(2.0) * t.get(i, j) + t.get(i - 1, j)) / dx2;
                let yy = (t.get(i, j + 1) - r64::<T>(2.0) * t.get(i, j) + t.get(i, j - 1)) / dx2;
                worst = worst.max((xx - yy).abs());
            }
        }
        worst
    };

    let kg_residual = |t: &Table<T>, sign: T| -> T {
        // residual of t_xx = t_yy + sign*(a+c)*t
        let mut worst = T::zero();
        for i in 2..nn - 1 {
            for j in 1..i.saturating_sub(1) {
                let xx = (t.get(i + 1, j) - r64::<T>(2.0) * t.get(i, j) + t.get(i - 1, j)) / dx2;
                let yy = (t.get(i, j + 1) - r64::<T>(2.0) * t.get(i, j) + t.get(i, j - 1)) / dx2;
                worst = worst.max((xx - yy - sign * apc * t.get(i, j)).abs());
            }
        }
        worst
    };

    // one-sided O(dx^2) derivative in y at y = 0
    let bc_residual = |t: &Table<T>, target: &dyn Fn(usize) -> T| -> T {
        let mut worst = T::zero();
        for i in 2..nn {
            let dy = (-r64::<T>(3.0) * t.get(i, 0) + r64::<T>(4.0) * t.get(i, 1) - t.get(i, 2))
                / (r64::<T>(2.0) * dx);
            worst = worst.max((dy - target(i)).abs());
        }
        worst
    };

    let dot_b = |row: &[T]| -> T {
        row.iter().zip(0..n).map(|(v, i)| *v * plant.b.get(i, 0)).sum()
    };

    let diag_residual = |t: &Table<T>, target: &dyn Fn(usize) -> T| -> T {
        (0..nn).fold(T::zero(), |m, i| m.max((t.get(i, i) - target(i)).abs()))
    };

    let half = r64::<T>(0.5);
    KernelResidualReport {
        gamma_ode: row_ode_residual(&kernels.gamma, &a_shift),
        psi_ode: row_ode_residual(&kernels.psi, &acl_shift),
        k_pde: wave_residual(&kernels.k),
        n_pde: wave_residual(&kernels.n),
        q_pde: kg_residual(&kernels.q, T::one()),
        l_pde: kg_residual(&kernels.l, -T::one()),
        k_bc: bc_residual(&kernels.k, &|i| -dot_b(&kernels.gamma[i])),
        n_bc: bc_residual(&kernels.n, &|i| -dot_b(&kernels.psi[i])),
        q_bc: bc_residual(&kernels.q, &|_| T::zero()),
        l_bc: bc_residual(&kernels.l, &|_| T::zero()),
        k_diag: diag_residual(&kernels.k, &|_| T::zero()),
        n_diag: diag_residual(&kernels.n, &|_| T::zero()),
        q_diag: diag_residual(&kernels.q, &|i| -apc * half * kernels.node(i)),
        l_diag: diag_residual(&kernels.l, &|i| -apc * half * kernels.node(i)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::DelayProfile;

    fn ex1_plant() -> PlantParams<f64> {
        PlantParams::scalar(1.0, 0.4, 1.0, 0.2, 0.1, 0.4, 0.4, 20.0, DelayProfile::Constant(0.4))
            .unwrap()
    }

    fn ex1_gains() -> DesignGains<f64> {
        DesignGains::new(vec![-2.0], 0.8)
    }

    #[test]
    fn gamma_is_constant_when_a_equals_a_heat_identity() {
        // A = aI makes the gamma ODE degenerate: gamma(x) = K for all x.
        let plant = PlantParams::scalar(
            0.2, 0.1, 1.0, 0.2, 0.1, 0.4, 0.4, 20.0, DelayProfile::Constant(0.4),
        )
        .unwrap();
        let gains = DesignGains::new(vec![-2.0], 0.8);
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let s = compute_gamma_psi(&plant, &gains, &grid).unwrap();
        for i in 0..grid.len() {
            assert!((s.gamma[i][0] + 2.0).abs() < 1e-13);
            assert!(s.gamma_prime[i][0].abs() < 1e-13);
        }
    }

    #[test]
    fn gamma_matches_scalar_cosh_solution() {
        // Example data: gamma'' = 0.8 gamma, gamma(0) = -2 -> -2 cosh(sqrt(0.8) x)
        let plant = ex1_plant();
        let gains = ex1_gains();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let s = compute_gamma_psi(&plant, &gains, &grid).unwrap();
        let r = 0.8f64.sqrt();
        for (i, &x) in grid.iter().enumerate() {
            assert!((s.gamma[i][0] + 2.0 * (r * x).cosh()).abs() < 1e-12);
            assert!((s.gamma_prime[i][0] + 2.0 * r * (r * x).sinh()).abs() < 1e-12);
            // psi'' = -1.2 psi -> -2 cos(sqrt(1.2) x)
            let w = 1.2f64.sqrt();
            assert!((s.psi[i][0] + 2.0 * (w * x).cos()).abs() < 1e-12);
        }
    }

    /// Independent oracle: classical RK4 on gamma'' = gamma (A - aI).
    #[test]
    fn gamma_matches_rk4_oracle() {
        let plant = ex1_plant();
        let gains = ex1_gains();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let s = compute_gamma_psi(&plant, &gains, &grid).unwrap();
        // RK4 on [g, g'] with g'' = 0.8 g, from g(0) = -2, g'(0) = 0
        let h = 1e-4f64;
        let mut g = -2.0f64;
        let mut gp = 0.0f64;
        let mut idx = 0usize;
        let steps = (1.0 / h).round() as usize;
        for m in 0..=steps {
            let x = m as f64 * h;
            if idx < grid.len() && (x - grid[idx]).abs() < h / 2.0 {
                assert!(
                    (g - s.gamma[idx][0]).abs() < 1e-8,
                    "x = {x}: {g} vs {}",
                    s.gamma[idx][0]
                );
                idx += 1;
            }
            let f = |g: f64, gp: f64| (gp, 0.8 * g);
            let (k1a, k1b) = f(g, gp);
            let (k2a, k2b) = f(g + h / 2.0 * k1a, gp + h / 2.0 * k1b);
            let (k3a, k3b) = f(g + h / 2.0 * k2a, gp + h / 2.0 * k2b);
            let (k4a, k4b) = f(g + h * k3a, gp + h * k3b);
            g += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
            gp += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        }
        assert_eq!(idx, grid.len());
    }

    #[test]
    fn k_diagonal_vanishes_and_linear_case() {
        // A = aI, B = 1, K = -2 -> gamma constant, k(x, y) = -2 (x - y)
        let plant = PlantParams::scalar(
            0.2, 0.1, 1.0, 0.2, 0.1, 0.4, 0.4, 20.0, DelayProfile::Constant(0.4),
        )
        .unwrap();
        let gains = DesignGains::new(vec![-2.0], 0.8);
        let ks = KernelSet::build(&plant, &gains, 0.04).unwrap();
        for i in 0..ks.n_nodes() {
            assert_eq!(ks.k.get(i, i), 0.0);
            for j in 0..=i {
                let expect: f64 = -2.0 * (ks.node(i) - ks.node(j));
                assert!((ks.k.get(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn k_corner_matches_closed_antiderivative() {
        // k(1,0) = int_0^1 -2 cosh(sqrt(0.8) s) ds = -2 sinh(sqrt(0.8))/sqrt(0.8)
        let ks = KernelSet::build(&ex1_plant(), &ex1_gains(), 0.02).unwrap();
        let nn = ks.n_nodes();
        let r = 0.8f64.sqrt();
        let exact = -2.0 * r.sinh() / r;
        assert!(
            (ks.k.get(nn - 1, 0) - exact).abs() < 1e-8,
            "{} vs {exact}",
            ks.k.get(nn - 1, 0)
        );
    }

    #[test]
    fn q_l_closed_form_values() {
        // a + c = 1: q(1,0) = -I1(1), l(1,0) = -J1(1)
        assert!((q_kernel::<f64>(1.0, 1.0, 0.0) + 0.5651591039924851).abs() < 1e-12);
        assert!((l_kernel::<f64>(1.0, 1.0, 0.0) + 0.4400505857449335).abs() < 1e-12);
        // a + c = 0 -> q = l = 0 everywhere
        assert_eq!(q_kernel(0.0, 0.7, 0.3), 0.0);
        assert_eq!(l_kernel(0.0, 0.7, 0.3), 0.0);
        // diagonal: q(x,x) = -(a+c) x / 2, both kernels
        for &apc in &[1.0f64, 2.0, -0.5] {
            for &x in &[0.3f64, 1.0] {
                assert!((q_kernel(apc, x, x) + apc * x / 2.0).abs() < 1e-14);
                assert!((l_kernel(apc, x, x) + apc * x / 2.0).abs() < 1e-14);
            }
        }
        // Example-2 coefficient: |l(1,1)| = (a+c)/2 = 1 for a = 0.2, c = 1.8
        assert!((l_kernel::<f64>(2.0, 1.0, 1.0).abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_pde_residuals_are_second_order() {
        let plant = ex1_plant();
        let gains = ex1_gains();
        let coarse = KernelSet::build(&plant, &gains, 0.02).unwrap();
        let fine = KernelSet::build(&plant, &gains, 0.01).unwrap();
        let rc = verify_kernel_pdes(&coarse, &plant, &gains);
        let rf = verify_kernel_pdes(&fine, &plant, &gains);
        // diagonal identities are exact
        assert!(rc.k_diag < 1e-12 && rc.n_diag < 1e-12);
        assert!(rc.q_diag < 1e-12 && rc.l_diag < 1e-12);
        // k and n depend on x - y only, so their aligned-grid wave residual
        // is zero up to rounding at any dx
        assert!(rc.k_pde < 1e-9 && rc.n_pde < 1e-9, "{} {}", rc.k_pde, rc.n_pde);
        // halving dx cuts the genuine residuals by ~4 (allow 3x as the bar)
        for (c, f, name) in [
            (rc.gamma_ode, rf.gamma_ode, "gamma"),
            (rc.psi_ode, rf.psi_ode, "psi"),
            (rc.q_pde, rf.q_pde, "q"),
            (rc.l_pde, rf.l_pde, "l"),
        ] {
            assert!(f > 0.0, "{name} residual must be nonzero for the exact kernels");
            let ratio = c / f;
            assert!(ratio > 3.0 && ratio < 5.0, "{name}: ratio {ratio}");
        }
    }

    #[test]
    fn zero_coupling_gives_exactly_zero_q_residual() {
        // a + c = 0 -> q == 0 and its residual is exactly zero
        let plant = PlantParams::scalar(
            1.0, 0.4, 1.0, -0.8, 0.1, 0.4, 0.4, 20.0, DelayProfile::Constant(0.4),
        )
        .unwrap();
        let gains = DesignGains::new(vec![-2.0], 0.8);
        let ks = KernelSet::build(&plant, &gains, 0.05).unwrap();
        let rep = verify_kernel_pdes(&ks, &plant, &gains);
        assert_eq!(rep.q_pde, 0.0);
        assert_eq!(rep.l_pde, 0.0);
    }

    #[test]
    fn sampled_derivatives_match_centered_differences() {
        let ks = KernelSet::build(&ex1_plant(), &ex1_gains(), 0.01).unwrap();
        let nn = ks.n_nodes();
        let dx = ks.dx;
        let mut worst: f64 = 0.0;
        for i in 1..nn - 1 {
            let fd = (ks.gamma[i + 1][0] - ks.gamma[i - 1][0]) / (2.0 * dx);
            worst = worst.max((fd - ks.gamma_prime[i][0]).abs());
        }
        assert!(worst < 5.0 * dx * dx, "gamma' fd mismatch {worst}");
        // q_x against centered differences in x (interior of the triangle)
        let mut worst_q: f64 = 0.0;
        for i in 2..nn - 1 {
            for j in 0..i - 1 {
                let fd = (ks.q.get(i + 1, j) - ks.q.get(i - 1, j)) / (2.0 * dx);
                worst_q = worst_q.max((fd - ks.q_x.get(i, j)).abs());
            }
        }
        assert!(worst_q < 5.0 * dx * dx, "q_x fd mismatch {worst_q}");
    }

    #[test]
    fn refined_maxima_cover_grid_maxima() {
        let ks = KernelSet::build(&ex1_plant(), &ex1_gains(), 0.04).unwrap();
        assert!(ks.max_abs_q() >= ks.q.max_abs_triangle());
        assert!(ks.max_abs_k().unwrap() >= ks.k.max_abs_triangle());
        // known values for the example data
        assert!((ks.max_abs_gamma().unwrap() - 2.0 * (0.8f64.sqrt()).cosh()).abs() < 1e-10);
        assert!((ks.max_abs_q() - 0.5651591039924851).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_dividing_dx() {
        assert!(KernelSet::build(&ex1_plant(), &ex1_gains(), 0.03).is_err());
        assert!(KernelSet::build(&ex1_plant(), &ex1_gains(), 0.3).is_err());
    }
}
