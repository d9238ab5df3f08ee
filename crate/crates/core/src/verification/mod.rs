//! Estimate monitors, a-priori bound constants, manufactured solutions,
//! convergence orders and continuous dependence.

mod bounds;
mod convergence;
mod dependence;
mod manufactured;
mod monitors;

use thiserror::Error;

use crate::graphs::GraphError;
use crate::mesh::MeshError;
use crate::problem::{ProblemError, ProblemSpec, SolverConfig};
use crate::stepper::{SolutionState, StepperError};

pub use bounds::{apriori_bounds, BoundCheck, BoundConstants, BoundReport};
pub use convergence::{convergence_order, spatial_study, temporal_study, ConvergenceReport, ConvergenceSetup, OrderEstimate};
pub use dependence::{backward_euler_difference_lhs, dependence_check, dependence_constant, DependenceReport};
pub use manufactured::{manufactured_source, CosineMode, ExactSolution, TimeProfile};
pub use monitors::{energy_monitors, EstimateReport, MonitorLevel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerificationError {
    #[error("need at least 3 refinement levels, got {0}")]
    InsufficientLevels(usize),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("{bound} violated at level {level}: monitored {monitored:e} > bound {limit:e}")]
    BoundViolation {
        bound: &'static str,
        level: usize,
        monitored: f64,
        limit: f64,
    },
    #[error("dependence margin {margin:e} is negative")]
    DependenceViolation { margin: f64 },
    #[error("exact solution has normal derivative {value:e} on the zero-flux boundary at {point:?}")]
    NonzeroZeroFluxDerivative { point: [f64; 2], value: f64 },
    #[error(transparent)]
    Stepper(#[from] StepperError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Space-time norms of the data of one run, as consumed by the bound formulas.
///
/// Time integrals are right-point sums over the step times `t_1..t_N`, which
/// is how the data enter the backward-Euler scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct DataNorms {
    pub final_time: f64,
    pub tau: f64,
    pub volume: f64,
    pub trace_constant: f64,
    /// `‖v₀‖·‖u₀‖` for the initial level actually used.
    pub m1: f64,
    /// `‖h‖_{L²(0,T;L²(Γ₁))}`.
    pub m2: f64,
    /// `Σ M_ii β̂(u₀_i)` for the unsmoothed initial datum.
    pub l: f64,
    pub g_l2l2: f64,
    pub g_l1linf: f64,
    /// `‖g(t_k)‖_∞` for `k = 1..N`.
    pub g_sup: Vec<f64>,
}

impl DataNorms {
    /// Trace constant `0` stands for an empty active boundary (no boundary terms).
    pub fn compute(spec: &ProblemSpec, solution: &SolutionState) -> Result<Self, VerificationError> {
        let ops = &spec.ops;
        let trace_constant = if ops.gamma1_nodes.is_empty() {
            0.0
        } else {
            ops.trace_constant()?
        };
        let tau = solution.tau;
        let mut g_sq = 0.0;
        let mut h_sq = 0.0;
        let mut g_l1linf = 0.0;
        let mut g_sup = Vec::with_capacity(solution.steps());
        for &t in &solution.times[1..] {
            let g = spec.g.sample(&spec.mesh, t);
            let h = spec.h.sample(&spec.mesh, t);
            g_sq += tau * ops.l2_norm(&g).powi(2);
            h_sq += tau * ops.boundary_l2_norm(&h).powi(2);
            let sup = g.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            g_l1linf += tau * sup;
            g_sup.push(sup);
        }
        let u0 = &solution.u[0];
        let m1 = ops.l2_norm(&solution.v[0]) * ops.l2_norm(u0);
        let mut l = 0.0;
        for (m, &u) in ops.mass.iter().zip(&spec.u0) {
            l += m * spec.beta.potential(u)?;
        }
        Ok(DataNorms {
            final_time: spec.final_time,
            tau,
            volume: ops.volume(),
            trace_constant,
            m1,
            m2: h_sq.sqrt(),
            l,
            g_l2l2: g_sq.sqrt(),
            g_l1linf,
            g_sup,
        })
    }
}

/// Solver settings forced by the continuous-dependence and bound hypotheses.
pub fn unregularized(config: &SolverConfig) -> SolverConfig {
    SolverConfig {
        lambda_schedule: vec![0.0],
        mass_regularization: false,
        epsilon: 0.0,
        smooth_initial: false,
        ..config.clone()
    }
}
