//! Backward-Euler time marching with Yosida-regularized boundary flux.

mod newton;
mod picard;
mod step;

use std::io::{self, Write};

use thiserror::Error;

use crate::graphs::GraphError;
use crate::linalg::{BandedCholesky, LinalgError};
use crate::mesh::{AssembledOperators, MeshError};
use crate::problem::{ProblemError, ProblemSpec, SolverConfig, SolverKind};
use crate::sweep::parallel_map;

pub use newton::step_newton;
pub use picard::step_picard;
pub use step::{StepOutcome, StepSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepperError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("{solver} did not converge at step {step} (last residual {:e})", residuals.last().copied().unwrap_or(f64::NAN))]
    NonConvergence {
        step: usize,
        solver: &'static str,
        residuals: Vec<f64>,
    },
    #[error("singular Jacobian at step {step}")]
    SingularJacobian { step: usize },
    #[error("picard and newton disagree by {difference:e} at step {step}")]
    SolverDisagreement { step: usize, difference: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(#[from] LinalgError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Time history of one transient solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionState {
    pub lambda: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub times: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    /// Nodes carrying `xi`, in increasing order.
    pub gamma1_nodes: Vec<usize>,
    /// Boundary flux per level on `gamma1_nodes`.
    pub xi: Vec<Vec<f64>>,
    /// Iterations of each step (length = number of steps).
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
}

impl SolutionState {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn final_u(&self) -> &[f64] {
        self.u.last().expect("at least the initial level")
    }

    /// Columns `k,t,node_id,u,v`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "k,t,node_id,u,v")?;
        for (k, t) in self.times.iter().enumerate() {
            for (i, (u, v)) in self.u[k].iter().zip(&self.v[k]).enumerate() {
                writeln!(w, "{k},{t:.16e},{i},{u:.16e},{v:.16e}")?;
            }
        }
        Ok(())
    }

    /// Columns `k,t,node_id,xi`.
    pub fn write_boundary_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "k,t,node_id,xi")?;
        for (k, t) in self.times.iter().enumerate() {
            for (node, xi) in self.gamma1_nodes.iter().zip(&self.xi[k]) {
                writeln!(w, "{k},{t:.16e},{node},{xi:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Solves `(M + λK)U = M·u0`, the zero-flux elliptic smoothing of initial data.
pub fn smooth_initial(ops: &AssembledOperators, u0: &[f64], lambda: f64) -> Result<Vec<f64>, StepperError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(StepperError::InvalidConfig(format!("smoothing parameter must be > 0, got {lambda}")));
    }
    if u0.len() != ops.node_count() {
        return Err(MeshError::DimensionMismatch {
            expected: ops.node_count(),
            got: u0.len(),
        }
        .into());
    }
    let a = ops.stiffness.scaled_plus_diagonal(lambda, &ops.mass);
    let b: Vec<f64> = ops.mass.iter().zip(u0).map(|(m, u)| m * u).collect();
    Ok(BandedCholesky::factor(&a)?.solve(&b)?)
}

/// Solves one step with the configured solver(s), starting from `guess`.
pub fn solve_step(system: &StepSystem<'_>, guess: &[f64], config: &SolverConfig, step: usize) -> Result<StepOutcome, StepperError> {
    match config.solver_kind {
        SolverKind::Picard => step_picard(system, guess, config.picard_damping, config.picard_tol, config.max_iters, step),
        SolverKind::Newton => step_newton(system, guess, config.newton_tol, config.max_iters, step),
        SolverKind::Both => {
            let n = step_newton(system, guess, config.newton_tol, config.max_iters, step)?;
            let p = step_picard(system, guess, config.picard_damping, config.picard_tol, config.max_iters, step)?;
            let difference = n.u.iter().zip(&p.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = n.u.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
            if difference > 10.0 * config.picard_tol.max(config.newton_tol) * scale {
                return Err(StepperError::SolverDisagreement { step, difference });
            }
            Ok(n)
        }
    }
}

/// Marches `k = 0..T/τ` at the smallest λ of the schedule.
pub fn solve_transient(spec: &ProblemSpec, config: &SolverConfig) -> Result<SolutionState, StepperError> {
    config.validate()?;
    solve_transient_at(spec, config, config.final_lambda())
}

/// Marches at the given λ.
pub fn solve_transient_at(spec: &ProblemSpec, config: &SolverConfig, lambda: f64) -> Result<SolutionState, StepperError> {
    config.validate()?;
    let steps = config.step_count(spec.final_time)?;
    let ops = &spec.ops;
    let u0 = if config.smooth_initial && lambda > 0.0 {
        smooth_initial(ops, &spec.u0, lambda)?
    } else {
        spec.u0.clone()
    };
    let gamma1_nodes = ops.gamma1_nodes.clone();
    let flux = |u: &[f64]| -> Result<Vec<f64>, StepperError> {
        gamma1_nodes
            .iter()
            .map(|&i| step::boundary_flux(&spec.beta, lambda, config.epsilon, u[i]))
            .collect()
    };
    let mut state = SolutionState {
        lambda,
        epsilon: config.epsilon,
        tau: config.tau,
        times: vec![0.0],
        v: vec![spec.v_of(&u0)],
        xi: vec![flux(&u0)?],
        u: vec![u0],
        gamma1_nodes: gamma1_nodes.clone(),
        iterations: Vec::with_capacity(steps),
        residuals: Vec::with_capacity(steps),
    };
    for k in 0..steps {
        let t_next = if k + 1 == steps { spec.final_time } else { (k + 1) as f64 * config.tau };
        let system = StepSystem::new(
            spec,
            config.tau,
            lambda,
            config.epsilon,
            config.mass_regularization,
            &state.v[k],
            t_next,
        )?;
        let out = solve_step(&system, &state.u[k], config, k + 1)?;
        state.times.push(t_next);
        state.v.push(spec.v_of(&out.u));
        state.xi.push(flux(&out.u)?);
        state.u.push(out.u);
        state.iterations.push(out.iterations);
        state.residuals.push(out.residual);
    }
    Ok(state)
}

/// `sqrt(Σ_k w_k τ ‖a_k − b_k‖²)` with trapezoid weights.
pub fn l2_time_space_distance(ops: &AssembledOperators, tau: f64, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for k in 0..n {
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        let d: Vec<f64> = a[k].iter().zip(&b[k]).map(|(x, y)| x - y).collect();
        s += w * tau * ops.l2_norm(&d).powi(2);
    }
    s.sqrt()
}

/// `sqrt(Σ_k τ ‖(v_{k+1} − v_k)/τ‖²_*)`, the discrete `L²(0,T;(H¹)')` norm of `∂v/∂t`.
pub fn time_derivative_dual_norm(ops: &AssembledOperators, solution: &SolutionState) -> Result<f64, StepperError> {
    let tau = solution.tau;
    let mut s = 0.0;
    for k in 0..solution.steps() {
        let load: Vec<f64> = (0..ops.node_count())
            .map(|i| ops.mass[i] * (solution.v[k + 1][i] - solution.v[k][i]) / tau)
            .collect();
        s += tau * ops.dual_norm(&load)?.powi(2);
    }
    Ok(s.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationRun {
    pub lambda: f64,
    pub solution: SolutionState,
    pub dual_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationReport {
    pub runs: Vec<ContinuationRun>,
    /// `‖u_{λ_{j+1}} − u_{λ_j}‖_{L²(0,T;L²)}` for consecutive schedule entries.
    pub cauchy_diffs: Vec<f64>,
}

impl ContinuationReport {
    pub fn final_solution(&self) -> &SolutionState {
        &self.runs.last().expect("at least two runs").solution
    }
}

/// One transient solve per λ of the schedule (run concurrently), with the
/// Cauchy differences between consecutive solutions.
pub fn lambda_continuation(spec: &ProblemSpec, config: &SolverConfig) -> Result<ContinuationReport, StepperError> {
    config.validate()?;
    if config.lambda_schedule.len() < 2 {
        return Err(StepperError::InvalidConfig("continuation needs at least two lambda values".into()));
    }
    let results = parallel_map(&config.lambda_schedule, |&lambda| -> Result<ContinuationRun, StepperError> {
        let solution = solve_transient_at(spec, config, lambda)?;
        let dual_norm = time_derivative_dual_norm(&spec.ops, &solution)?;
        Ok(ContinuationRun {
            lambda,
            solution,
            dual_norm,
        })
    });
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let cauchy_diffs = runs
        .windows(2)
        .map(|w| l2_time_space_distance(&spec.ops, config.tau, &w[1].solution.u, &w[0].solution.u))
        .collect();
    Ok(ContinuationReport { runs, cauchy_diffs })
}
