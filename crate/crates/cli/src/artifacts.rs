//! On-disk artifact schemas: kernels.json, certificate.json, summary.json,
//! verify.json, and the trajectory CSVs.

use serde::{Deserialize, Serialize};

use heatstep_core::certify::{Certificate, SearchStatus};
use heatstep_core::kernels::KernelSet;
use heatstep_core::plant::Actuation;
use heatstep_core::simulator::{SimStatus, Trajectory};

#[derive(Debug, Serialize, Deserialize)]
pub struct KernelsDoc {
    pub dx: f64,
    pub nodes: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub gamma_prime: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    pub psi_prime: Vec<Vec<f64>>,
    /// Row-major (n_nodes x n_nodes) tables; entries above the diagonal are
    /// zero padding.
    pub k: Vec<f64>,
    pub k_x: Vec<f64>,
    pub n: Vec<f64>,
    pub n_x: Vec<f64>,
    pub q: Vec<f64>,
    pub q_x: Vec<f64>,
    pub l: Vec<f64>,
    pub l_x: Vec<f64>,
}

impl KernelsDoc {
    pub fn from_kernels(ks: &KernelSet<f64>) -> Self {
        Self {
            dx: ks.dx,
            nodes: (0..ks.n_nodes()).map(|i| ks.node(i)).collect(),
            gamma: ks.gamma.clone(),
            gamma_prime: ks.gamma_prime.clone(),
            psi: ks.psi.clone(),
            psi_prime: ks.psi_prime.clone(),
            k: ks.k.as_slice().to_vec(),
            k_x: ks.k_x.as_slice().to_vec(),
            n: ks.n.as_slice().to_vec(),
            n_x: ks.n_x.as_slice().to_vec(),
            q: ks.q.as_slice().to_vec(),
            q_x: ks.q_x.as_slice().to_vec(),
            l: ks.l.as_slice().to_vec(),
            l_x: ks.l_x.as_slice().to_vec(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConstantsDoc {
    pub c1: f64,
    pub c2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    pub m1: f64,
    pub m2: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub p: Vec<Vec<f64>>,
    pub p1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    pub delta0: f64,
    pub delta1: f64,
    pub r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AdmissibleSetDoc {
    /// beta*M1 and beta*M2, plus 4*beta for Neumann actuation.
    pub coefficients: Vec<f64>,
    /// beta^{-1}.
    pub radius: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub actuation: String,
    pub feasible: bool,
    pub status: String,
    pub beta: Option<f64>,
    pub decay_delta: f64,
    pub zeta: f64,
    pub constants: ConstantsDoc,
    pub witness: Option<WitnessDoc>,
    pub admissible_set: Option<AdmissibleSetDoc>,
    pub best_violation: f64,
    pub evals: u64,
}

impl CertificateDoc {
    pub fn from_certificate(cert: &Certificate<f64>) -> Self {
        let neumann = cert.actuation == Actuation::Neumann;
        let witness = cert.witness.as_ref().map(|w| WitnessDoc {
            p: (0..w.p_mat.rows())
                .map(|i| (0..w.p_mat.cols()).map(|j| w.p_mat.get(i, j)).collect())
                .collect(),
            p1: w.p1,
            p2: neumann.then_some(w.p2),
            lambda: w.lambda,
            lambda1: neumann.then_some(w.lambda1),
            delta0: w.delta0,
            delta1: w.delta1,
            r: w.r,
            r1: neumann.then_some(w.r1),
        });
        let admissible_set = cert.beta.map(|beta| {
            let mut coefficients = vec![beta * cert.constants.m1, beta * cert.constants.m2];
            if neumann {
                coefficients.push(4.0 * beta);
            }
            AdmissibleSetDoc { coefficients, radius: 1.0 / beta }
        });
        Self {
            actuation: if neumann { "neumann".into() } else { "dirichlet".into() },
            feasible: cert.feasible,
            status: match cert.status {
                SearchStatus::Feasible => "feasible".into(),
                SearchStatus::Infeasible => "infeasible".into(),
                SearchStatus::Undetermined => "undetermined".into(),
            },
            beta: cert.beta,
            decay_delta: cert.decay_delta,
            zeta: cert.zeta,
            constants: ConstantsDoc {
                c1: cert.constants.c1,
                c2: cert.constants.c2,
                c3: cert.constants.c3,
                xi: cert.constants.xi,
                m1: cert.constants.m1,
                m2: cert.constants.m2,
            },
            witness,
            admissible_set,
            best_violation: cert.best_violation,
            evals: cert.evals,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryDoc {
    /// beta (M1 |X0|^2 + M2 ||u0||^2 [+ 4 ||u0'||^2]); absent when the
    /// certificate is infeasible.
    pub membership: Option<f64>,
    pub inside: Option<bool>,
    pub initial_norm_sq: f64,
    pub terminal_norm_sq: f64,
    /// "converged" | "completed" | "diverged"
    pub status: String,
    pub max_abs_u: f64,
    pub saturation_samples: usize,
    pub saturation_samples_after_t1: usize,
    pub halanay_violations: Option<usize>,
}

impl SummaryDoc {
    pub fn from_trajectory(traj: &Trajectory<f64>, membership: Option<(f64, bool)>) -> Self {
        let status = match traj.status {
            SimStatus::Diverged => "diverged",
            SimStatus::Completed => {
                if traj.terminal_norm_sq <= 1e-2 * traj.initial_norm_sq {
                    "converged"
                } else {
                    "completed"
                }
            }
        };
        Self {
            membership: membership.map(|(v, _)| v),
            inside: membership.map(|(_, i)| i),
            initial_norm_sq: traj.initial_norm_sq,
            terminal_norm_sq: traj.terminal_norm_sq,
            status: status.into(),
            max_abs_u: traj.max_abs_u,
            saturation_samples: traj.sat_count_total,
            saturation_samples_after_t1: traj.sat_count_after_mark,
            halanay_violations: traj.v.as_ref().map(|_| traj.halanay_violations),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyCheckDoc {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyDoc {
    pub all_pass: bool,
    pub checks: Vec<VerifyCheckDoc>,
}

/// Render the stride-sampled trajectory as CSV
/// (t, x_1..x_n, u, sat_active, norm_sq[, v]).
pub fn trajectory_csv(traj: &Trajectory<f64>) -> String {
    let n = traj.x.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 1..=n {
        out.push_str(&format!(",x_{i}"));
    }
    out.push_str(",u,sat_active,norm_sq");
    if traj.v.is_some() {
        out.push_str(",v");
    }
    out.push('\n');
    for k in 0..traj.times.len() {
        out.push_str(&format!("{:.6}", traj.times[k]));
        for v in &traj.x[k] {
            out.push_str(&format!(",{v:.9e}"));
        }
        out.push_str(&format!(
            ",{:.9e},{},{:.9e}",
            traj.u_applied[k],
            u8::from(traj.sat_active[k]),
            traj.norm_sq[k]
        ));
        if let Some(vs) = &traj.v {
            out.push_str(&format!(",{:.9e}", vs[k]));
        }
        out.push('\n');
    }
    out
}

/// Render the recorded fields as CSV (t, u at every grid node), decimated by
/// `dump_stride` over the recorded samples.
pub fn fields_csv(traj: &Trajectory<f64>, dump_stride: usize) -> String {
    let stride = dump_stride.max(1);
    let n_nodes = traj.fields.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 0..n_nodes {
        out.push_str(&format!(",u_{i}"));
    }
    out.push('\n');
    for k in (0..traj.times.len()).step_by(stride) {
        out.push_str(&format!("{:.6}", traj.times[k]));
        for v in &traj.fields[k] {
            out.push_str(&format!(",{v:.9e}"));
        }
        out.push('\n');
    }
    out
}
