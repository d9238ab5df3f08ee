use std::fmt;
use std::sync::Arc;

use crate::graphs::ScalarGraph;
use crate::mesh::MeshPreset;
use crate::problem::SolverConfig;
use crate::stepper::solve_transient;
use crate::sweep::parallel_map;

use super::{manufactured_source, unregularized, ExactSolution, VerificationError};

const SATURATION: f64 = 1e-12;

/// Everything but the refinement parameter of a manufactured-solution study.
#[derive(Clone)]
pub struct ConvergenceSetup {
    pub preset: MeshPreset,
    pub c0: f64,
    pub gamma: ScalarGraph,
    pub beta: ScalarGraph,
    pub final_time: f64,
    pub exact: Arc<dyn ExactSolution>,
    /// Solver tolerances and kind; regularization is switched off.
    pub solver: SolverConfig,
}

impl fmt::Debug for ConvergenceSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvergenceSetup")
            .field("preset", &self.preset)
            .field("c0", &self.c0)
            .field("gamma", &self.gamma)
            .field("beta", &self.beta)
            .field("final_time", &self.final_time)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderEstimate {
    /// Least-squares slope of `log(error)` against `log(parameter)`; `None`
    /// when saturated.
    pub order: Option<f64>,
    /// Every error is at rounding level.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub axis: &'static str,
    /// Mesh size or step, one per level.
    pub parameters: Vec<f64>,
    /// Discrete `L²` error at the final time.
    pub errors: Vec<f64>,
    pub estimate: OrderEstimate,
}

impl ConvergenceReport {
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "axis,parameter,error")?;
        for (p, e) in self.parameters.iter().zip(&self.errors) {
            writeln!(w, "{},{:.16e},{:.16e}", self.axis, p, e)?;
        }
        Ok(())
    }
}

/// Slope of the least-squares line through `(log p, log e)`.
pub fn convergence_order(parameters: &[f64], errors: &[f64], scale: f64) -> Result<OrderEstimate, VerificationError> {
    let n = parameters.len().min(errors.len());
    if n < 3 {
        return Err(VerificationError::InsufficientLevels(n));
    }
    let floor = SATURATION * scale.max(1.0);
    if errors[..n].iter().all(|&e| e <= floor) {
        return Ok(OrderEstimate {
            order: None,
            saturated: true,
        });
    }
    let xs: Vec<f64> = parameters[..n].iter().map(|p| p.ln()).collect();
    let ys: Vec<f64> = errors[..n].iter().map(|e| e.max(f64::MIN_POSITIVE).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(OrderEstimate {
        order: Some(sxy / sxx),
        saturated: false,
    })
}

fn final_error(setup: &ConvergenceSetup, preset: &MeshPreset, tau: f64) -> Result<(f64, f64, f64), VerificationError> {
    let spec = manufactured_source(
        setup.exact.clone(),
        preset,
        setup.c0,
        setup.gamma.clone(),
        setup.beta.clone(),
        setup.final_time,
    )?;
    let config = SolverConfig {
        tau,
        ..unregularized(&setup.solver)
    };
    let sol = solve_transient(&spec, &config)?;
    let t = *sol.times.last().expect("nonempty");
    let exact: Vec<f64> = spec.mesh.nodes().iter().map(|&p| setup.exact.value(p, t)).collect();
    let diff: Vec<f64> = sol.final_u().iter().zip(&exact).map(|(a, b)| a - b).collect();
    Ok((spec.mesh.h_max(), spec.ops.l2_norm(&diff), spec.ops.l2_norm(&exact)))
}

fn study(
    axis: &'static str,
    runs: Vec<Result<(f64, f64, f64), VerificationError>>,
    parameter: impl Fn(usize, f64) -> f64,
) -> Result<ConvergenceReport, VerificationError> {
    let mut parameters = Vec::new();
    let mut errors = Vec::new();
    let mut scale = 0.0_f64;
    for (i, r) in runs.into_iter().enumerate() {
        let (h, e, s) = r?;
        parameters.push(parameter(i, h));
        errors.push(e);
        scale = scale.max(s);
    }
    let estimate = convergence_order(&parameters, &errors, scale)?;
    Ok(ConvergenceReport {
        axis,
        parameters,
        errors,
        estimate,
    })
}

/// Error at `T` against mesh size, for `resolutions` subdivisions per side at step `tau`.
pub fn spatial_study(setup: &ConvergenceSetup, resolutions: &[usize], tau: f64) -> Result<ConvergenceReport, VerificationError> {
    if resolutions.len() < 3 {
        return Err(VerificationError::InsufficientLevels(resolutions.len()));
    }
    let runs = parallel_map(resolutions, |&n| final_error(setup, &setup.preset.with_resolution(n), tau));
    study("space", runs, |_, h| h)
}

/// Error at `T` against step size on the setup's own mesh.
pub fn temporal_study(setup: &ConvergenceSetup, taus: &[f64]) -> Result<ConvergenceReport, VerificationError> {
    if taus.len() < 3 {
        return Err(VerificationError::InsufficientLevels(taus.len()));
    }
    let runs = parallel_map(taus, |&tau| final_error(setup, &setup.preset, tau));
    study("time", runs, |i, _| taus[i])
}
