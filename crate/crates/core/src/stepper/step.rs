use crate::graphs::{truncate, ScalarGraph};
use crate::linalg::{norm2, CsrMatrix};
use crate::problem::ProblemSpec;

use super::StepperError;

/// The nonlinear system of one backward-Euler step,
///
/// `R(U) = M·c0γ(U) + τKU + τμMU + τMΓ·ξ(U) − [M·v_k + τM·g + τMΓ·h]`,
///
/// where `ξ` is the truncated Yosida approximation of `β` at the working `λ`
/// (or `β` itself at `λ = 0`) and `μ` is the optional mass coefficient.
#[derive(Debug, Clone)]
pub struct StepSystem<'a> {
    pub spec: &'a ProblemSpec,
    pub tau: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub mass_coefficient: f64,
    rhs: Vec<f64>,
    rhs_norm: f64,
}

/// Per-step solver output.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

/// `ξ(r)` on the active boundary.
pub(crate) fn boundary_flux(beta: &ScalarGraph, lambda: f64, epsilon: f64, r: f64) -> Result<f64, StepperError> {
    let v = if lambda > 0.0 {
        beta.yosida(lambda, r)?
    } else {
        beta.value(r)
    };
    Ok(truncate(v, epsilon))
}

/// `ξ'(r)`: zero where the truncation is active.
pub(crate) fn boundary_flux_slope(beta: &ScalarGraph, lambda: f64, epsilon: f64, r: f64) -> Result<f64, StepperError> {
    let raw = if lambda > 0.0 {
        beta.yosida(lambda, r)?
    } else {
        beta.value(r)
    };
    if epsilon > 0.0 && raw.abs() > 1.0 / epsilon {
        return Ok(0.0);
    }
    if lambda > 0.0 {
        Ok(beta.yosida_slope(lambda, r)?)
    } else {
        let d = beta.slope(r);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(StepperError::InvalidConfig(format!("{beta} is not single-valued at {r}; lambda = 0 needs a single-valued beta")))
        }
    }
}

impl<'a> StepSystem<'a> {
    /// Step from `v_prev` to time `t_next`.
    pub fn new(
        spec: &'a ProblemSpec,
        tau: f64,
        lambda: f64,
        epsilon: f64,
        mass_regularization: bool,
        v_prev: &[f64],
        t_next: f64,
    ) -> Result<Self, StepperError> {
        if lambda == 0.0 && !spec.beta.is_single_valued() {
            return Err(StepperError::InvalidConfig(format!(
                "lambda = 0 needs a single-valued beta, got {}",
                spec.beta
            )));
        }
        let g = spec.g.sample(&spec.mesh, t_next);
        let h = spec.h.sample(&spec.mesh, t_next);
        Ok(Self::with_data(spec, tau, lambda, epsilon, mass_regularization, v_prev, &g, &h))
    }

    /// As [`StepSystem::new`] with `g` and `h` already sampled at the new time.
    #[allow(clippy::too_many_arguments)]
    pub fn with_data(
        spec: &'a ProblemSpec,
        tau: f64,
        lambda: f64,
        epsilon: f64,
        mass_regularization: bool,
        v_prev: &[f64],
        g: &[f64],
        h: &[f64],
    ) -> Self {
        let ops = &spec.ops;
        let rhs: Vec<f64> = (0..ops.node_count())
            .map(|i| ops.mass[i] * (v_prev[i] + tau * g[i]) + tau * ops.boundary_mass[i] * h[i])
            .collect();
        let rhs_norm = norm2(&rhs);
        StepSystem {
            spec,
            tau,
            lambda,
            epsilon,
            mass_coefficient: if mass_regularization { lambda } else { 0.0 },
            rhs,
            rhs_norm,
        }
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Convergence threshold `tol·(1 + ‖rhs‖)`.
    pub fn threshold(&self, tol: f64) -> f64 {
        tol * (1.0 + self.rhs_norm)
    }

    pub fn flux(&self, r: f64) -> Result<f64, StepperError> {
        boundary_flux(&self.spec.beta, self.lambda, self.epsilon, r)
    }

    pub fn flux_slope(&self, r: f64) -> Result<f64, StepperError> {
        boundary_flux_slope(&self.spec.beta, self.lambda, self.epsilon, r)
    }

    pub fn residual(&self, u: &[f64]) -> Result<Vec<f64>, StepperError> {
        let ops = &self.spec.ops;
        let mut r = ops.stiffness.mul_vec(u);
        for i in 0..r.len() {
            let mut nodal = ops.mass[i] * (self.spec.c0 * self.spec.gamma.value(u[i]) + self.tau * self.mass_coefficient * u[i]);
            if ops.boundary_mass[i] > 0.0 {
                nodal += self.tau * ops.boundary_mass[i] * self.flux(u[i])?;
            }
            r[i] = self.tau * r[i] + nodal - self.rhs[i];
        }
        Ok(r)
    }

    /// Symmetric Jacobian `τK + diag(M·c0γ' + τμM + τMΓ·ξ')`.
    pub fn jacobian(&self, u: &[f64]) -> Result<CsrMatrix, StepperError> {
        let ops = &self.spec.ops;
        let mut d = vec![0.0; u.len()];
        for i in 0..u.len() {
            let gp = self.spec.gamma.slope(u[i]);
            d[i] = ops.mass[i] * (self.spec.c0 * gp + self.tau * self.mass_coefficient);
            if ops.boundary_mass[i] > 0.0 {
                d[i] += self.tau * ops.boundary_mass[i] * self.flux_slope(u[i])?;
            }
        }
        Ok(ops.stiffness.scaled_plus_diagonal(self.tau, &d))
    }

    /// Constant-coefficient operator of the L-scheme: nonlinear terms are
    /// replaced by their Lipschitz bounds.
    pub fn l_scheme_operator(&self, u: &[f64]) -> Result<CsrMatrix, StepperError> {
        let ops = &self.spec.ops;
        let (_, big_c) = self.spec.effective_gamma_constants();
        let beta_bound = self.spec.beta.constants().lipschitz_upper;
        let mut d = vec![0.0; u.len()];
        for i in 0..u.len() {
            d[i] = ops.mass[i] * (big_c + self.tau * self.mass_coefficient);
            if ops.boundary_mass[i] > 0.0 {
                let l = match (self.lambda > 0.0, beta_bound) {
                    (true, Some(b)) => b.min(1.0 / self.lambda),
                    (true, None) => 1.0 / self.lambda,
                    (false, Some(b)) => b,
                    (false, None) => self.flux_slope(u[i])?,
                };
                d[i] += self.tau * ops.boundary_mass[i] * l;
            }
        }
        Ok(ops.stiffness.scaled_plus_diagonal(self.tau, &d))
    }
}
