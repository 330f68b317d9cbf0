//! Derivative-free inner search used by the certificate optimizer.
//!
//! Coordinate descent with shrinking steps, restarted from several seeded
//! starting points. The objective is the maximum constraint-violation
//! eigenvalue, so "feasible" simply means a negative objective.

use crate::num::{r64, Real};

/// Deterministic 64-bit PRNG (SplitMix64). Small enough to own outright and
/// bit-identical across platforms, which keeps the optimizer reproducible.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Budget and seeding for the witness search.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Independent restarts per feasibility probe.
    pub restarts: usize,
    /// Coordinate-descent cycles per restart.
    pub max_cycles: usize,
    /// Upper cap for the bisected scale parameter.
    pub beta_cap: f64,
    /// Relative width at which the outer bisection stops.
    pub beta_rel_tol: f64,
    /// Total objective-evaluation budget; exhausting it mid-search yields
    /// an undetermined verdict.
    pub max_evals: u64,
    /// PRNG seed.
    pub seed: u64,
    /// Evaluate restarts on worker threads.
    pub parallel: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_cycles: 220,
            beta_cap: 1e6,
            beta_rel_tol: 1e-3,
            max_evals: 40_000_000,
            seed: 0x5eed,
            parallel: true,
        }
    }
}

/// Minimize `f` by cyclic coordinate descent with multiplicative step decay.
/// Returns the best point, its value, and the number of evaluations spent.
pub fn coordinate_descent<T, F>(
    f: &F,
    x0: &[T],
    scales: &[T],
    max_cycles: usize,
) -> (Vec<T>, T, u64)
where
    T: Real,
    F: Fn(&[T]) -> T,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut evals = 1u64;
    let mut step = r64::<T>(0.4);
    let floor = r64::<T>(1e-12);
    for _ in 0..max_cycles {
        let mut improved = false;
        for i in 0..x.len() {
            let delta = step * scales[i];
            for dir in [T::one(), -T::one()] {
                let mut trial = x.clone();
                trial[i] = x[i] + dir * delta;
                let ft = f(&trial);
                evals += 1;
                if ft < fx {
                    x = trial;
                    fx = ft;
                    improved = true;
                    // ride the descent direction while it keeps paying
                    loop {
                        let mut further = x.clone();
                        further[i] = x[i] + dir * delta;
                        let ff = f(&further);
                        evals += 1;
                        if ff < fx {
                            x = further;
                            fx = ff;
                        } else {
                            break;
                        }
                    }
                    break;
                }
            }
        }
        if !improved {
            step *= r64(0.5);
            if step < floor {
                break;
            }
        }
    }
    (x, fx, evals)
}

/// Run `restarts` independent coordinate descents (optionally on threads)
/// and keep the best outcome.
pub fn multistart<T, F, G>(
    f: &F,
    make_start: &G,
    dim: usize,
    scales: &[T],
    cfg: &SearchConfig,
    rng: &mut SplitMix64,
) -> (Vec<T>, T, u64)
where
    T: Real,
    F: Fn(&[T]) -> T + Sync,
    G: Fn(&mut SplitMix64) -> Vec<T> + Sync,
{
    let starts: Vec<Vec<T>> = (0..cfg.restarts)
        .map(|_| {
            let s = make_start(rng);
            assert_eq!(s.len(), dim);
            s
        })
        .collect();
    let run_one = |x0: &Vec<T>| coordinate_descent(f, x0, scales, cfg.max_cycles);
    let results: Vec<(Vec<T>, T, u64)> = if cfg.parallel && cfg.restarts > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = starts.iter().map(|x0| scope.spawn(move || run_one(x0))).collect();
            handles.into_iter().map(|h| h.join().expect("search worker")).collect()
        })
    } else {
        starts.iter().map(run_one).collect()
    };
    let total_evals: u64 = results.iter().map(|r| r.2).sum();
    let best = results
        .into_iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite objective"))
        .expect("at least one restart");
    (best.0, best.1, total_evals)
}
