use std::io::{self, Write};

use crate::linalg::dot;
use crate::problem::ProblemSpec;
use crate::stepper::{time_derivative_dual_norm, SolutionState};

use super::VerificationError;

/// Estimate functionals at one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorLevel {
    pub k: usize,
    pub t: f64,
    pub u_l2: f64,
    /// `Σ_{j≤k} τ‖∇u_j‖²`.
    pub grad_sq_cumulative: f64,
    /// `Φ*(v_k) = Σ M_ii·c0·γ̂*(v_i/c0)`.
    pub phi_star: f64,
    /// `Σ M_ii β̂_λ(u_i)`, with `β̂` itself at `λ = 0`.
    pub beta_hat: f64,
    /// `Σ_{j≤k} τ·Σ MΓ_ii ξ_i u_i`.
    pub boundary_dissipation: f64,
    /// `Σ_{j≤k} τ‖ξ_j‖²_{Γ₁}`.
    pub flux_sq_cumulative: f64,
    /// Slack in the per-step energy inequality; `0` at `k = 0`.
    pub energy_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub levels: Vec<MonitorLevel>,
    /// `Σ_{k≥1} τ(‖u_k‖² + ‖∇u_k‖²)`.
    pub u_l2h1_sq: f64,
    /// `Σ_{k≥1} τ(‖v_k‖² + ‖∇v_k‖²)`.
    pub v_l2h1_sq: f64,
    /// Discrete `‖∂v/∂t‖_{L²(0,T;(H¹)')}`.
    pub dv_dual: f64,
}

impl EstimateReport {
    pub fn sup_u_l2(&self) -> f64 {
        self.levels.iter().map(|l| l.u_l2).fold(0.0, f64::max)
    }

    pub fn sup_beta_hat(&self) -> f64 {
        self.levels.iter().map(|l| l.beta_hat).fold(0.0, f64::max)
    }

    pub fn flux_l2(&self) -> f64 {
        self.levels.last().map_or(0.0, |l| l.flux_sq_cumulative).sqrt()
    }

    pub fn min_energy_slack(&self) -> f64 {
        self.levels.iter().skip(1).map(|l| l.energy_slack).fold(f64::INFINITY, f64::min)
    }

    /// One row per level.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(
            w,
            "k,t,u_l2,grad_sq_cumulative,phi_star,beta_hat,boundary_dissipation,flux_sq_cumulative,energy_slack"
        )?;
        for l in &self.levels {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                l.k, l.t, l.u_l2, l.grad_sq_cumulative, l.phi_star, l.beta_hat, l.boundary_dissipation, l.flux_sq_cumulative, l.energy_slack
            )?;
        }
        Ok(())
    }
}

fn phi_star(spec: &ProblemSpec, v: &[f64]) -> Result<f64, VerificationError> {
    let mut s = 0.0;
    for (m, &vi) in spec.ops.mass.iter().zip(v) {
        s += m * spec.c0 * spec.gamma.conjugate_potential(vi / spec.c0)?;
    }
    Ok(s)
}

fn beta_hat(spec: &ProblemSpec, lambda: f64, u: &[f64]) -> Result<f64, VerificationError> {
    let mut s = 0.0;
    for (m, &ui) in spec.ops.mass.iter().zip(u) {
        let p = if lambda > 0.0 {
            spec.beta.moreau_envelope(lambda, ui)?
        } else {
            spec.beta.potential(ui)?
        };
        s += m * p;
    }
    Ok(s)
}

/// Evaluates every monitor at every level of `solution`.
pub fn energy_monitors(solution: &SolutionState, spec: &ProblemSpec) -> Result<EstimateReport, VerificationError> {
    let ops = &spec.ops;
    let tau = solution.tau;
    let mut levels = Vec::with_capacity(solution.times.len());
    let mut grad_cum = 0.0;
    let mut diss_cum = 0.0;
    let mut flux_cum = 0.0;
    let mut u_l2h1_sq = 0.0;
    let mut v_l2h1_sq = 0.0;
    let mut prev_phi = 0.0;
    for (k, &t) in solution.times.iter().enumerate() {
        let u = &solution.u[k];
        let v = &solution.v[k];
        let grad = ops.gradient_norm_sq(u);
        let phi = phi_star(spec, v)?;
        let mut slack = 0.0;
        if k > 0 {
            grad_cum += tau * grad;
            let mut diss = 0.0;
            let mut flux = 0.0;
            for (&node, &xi) in solution.gamma1_nodes.iter().zip(&solution.xi[k]) {
                diss += ops.boundary_mass[node] * xi * u[node];
                flux += ops.boundary_mass[node] * xi * xi;
            }
            diss_cum += tau * diss;
            flux_cum += tau * flux;
            let u_l2 = ops.l2_norm(u);
            u_l2h1_sq += tau * (u_l2 * u_l2 + grad);
            v_l2h1_sq += tau * (ops.l2_norm(v).powi(2) + ops.gradient_norm_sq(v));
            let g = spec.g.sample(&spec.mesh, t);
            let h = spec.h.sample(&spec.mesh, t);
            let mg: Vec<f64> = g.iter().zip(&ops.mass).map(|(a, m)| a * m).collect();
            let mh: Vec<f64> = h.iter().zip(&ops.boundary_mass).map(|(a, m)| a * m).collect();
            let work = dot(&mg, u) + dot(&mh, u);
            slack = prev_phi + tau * work - phi - tau * grad;
        }
        levels.push(MonitorLevel {
            k,
            t,
            u_l2: ops.l2_norm(u),
            grad_sq_cumulative: grad_cum,
            phi_star: phi,
            beta_hat: beta_hat(spec, solution.lambda, u)?,
            boundary_dissipation: diss_cum,
            flux_sq_cumulative: flux_cum,
            energy_slack: slack,
        });
        prev_phi = phi;
    }
    Ok(EstimateReport {
        levels,
        u_l2h1_sq,
        v_l2h1_sq,
        dv_dual: time_derivative_dual_norm(ops, solution)?,
    })
}
