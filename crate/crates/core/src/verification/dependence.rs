use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::problem::{ProblemSpec, SolverConfig};
use crate::stepper::{solve_transient, SolutionState};

use super::{unregularized, VerificationError};

const DATA_TOLERANCE: f64 = 1e-14;

/// Both sides of the continuous-dependence inequality for one pair of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceReport {
    /// Effective slope `c0·α` of `v = c0·γ(u)`.
    pub alpha: f64,
    pub trace_constant: f64,
    /// `max_k ‖e_k‖²`.
    pub sup_l2_sq: f64,
    /// `Σ_{k≥1} τ(‖e_k‖² + ‖∇e_k‖²)`.
    pub l2h1_sq: f64,
    /// `max(sup_l2_sq, l2h1_sq)`.
    pub lhs: f64,
    /// `(α/2)‖Δu₀‖² + ‖Δg‖²_{L²L²} + C_tr²‖Δh‖²_{L²L²(Γ₁)}`.
    pub rhs: f64,
    pub c_dep: f64,
    pub margin: f64,
}

impl DependenceReport {
    pub fn into_result(self) -> Result<Self, VerificationError> {
        if self.margin >= 0.0 {
            Ok(self)
        } else {
            Err(VerificationError::DependenceViolation { margin: self.margin })
        }
    }

    pub fn write_summary<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "alpha = {:.16e}", self.alpha)?;
        writeln!(w, "trace_constant = {:.16e}", self.trace_constant)?;
        writeln!(w, "sup_l2_sq = {:.16e}", self.sup_l2_sq)?;
        writeln!(w, "l2h1_sq = {:.16e}", self.l2h1_sq)?;
        writeln!(w, "lhs = {:.16e}", self.lhs)?;
        writeln!(w, "rhs = {:.16e}", self.rhs)?;
        writeln!(w, "c_dep = {:.16e}", self.c_dep)?;
        writeln!(w, "margin = {:.16e}", self.margin)?;
        writeln!(w, "check.dependence = {}", if self.margin >= 0.0 { "pass" } else { "fail" })
    }
}

/// `C_dep = 2e^{T/α} / (α·min(1, 1/α))`.
pub fn dependence_constant(alpha: f64, final_time: f64) -> f64 {
    2.0 * (final_time / alpha).exp() / (alpha * 1.0_f64.min(1.0 / alpha))
}

fn hypothesis(msg: impl Into<String>) -> VerificationError {
    VerificationError::HypothesisViolation(msg.into())
}

/// Shared effective slope `c0·α`, after checking that the pair is admissible.
fn common_alpha(spec1: &ProblemSpec, spec2: &ProblemSpec) -> Result<f64, VerificationError> {
    let a1 = spec1
        .gamma
        .linear_slope()
        .ok_or_else(|| hypothesis(format!("gamma = {} is not linear", spec1.gamma)))?;
    let a2 = spec2
        .gamma
        .linear_slope()
        .ok_or_else(|| hypothesis(format!("gamma = {} is not linear", spec2.gamma)))?;
    if spec1.c0 * a1 != spec2.c0 * a2 {
        return Err(hypothesis("the two runs have different c0·gamma"));
    }
    if spec1.mesh != spec2.mesh {
        return Err(hypothesis("the two runs use different meshes"));
    }
    if spec1.final_time != spec2.final_time {
        return Err(hypothesis("the two runs have different final times"));
    }
    if spec1.beta != spec2.beta {
        return Err(hypothesis("the two runs have different boundary graphs"));
    }
    if !spec1.beta.is_single_valued() {
        return Err(hypothesis(format!("beta = {} is set-valued", spec1.beta)));
    }
    Ok(spec1.c0 * a1)
}

fn difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn lhs_parts(spec: &ProblemSpec, tau: f64, e: &[Vec<f64>]) -> (f64, f64) {
    let ops = &spec.ops;
    let sup = e.iter().map(|x| ops.l2_norm(x).powi(2)).fold(0.0, f64::max);
    let l2h1 = e[1..]
        .iter()
        .map(|x| tau * (ops.l2_norm(x).powi(2) + ops.gradient_norm_sq(x)))
        .sum();
    (sup, l2h1)
}

/// Runs both problems without regularization and evaluates the inequality.
pub fn dependence_check(spec1: &ProblemSpec, spec2: &ProblemSpec, config: &SolverConfig) -> Result<DependenceReport, VerificationError> {
    let alpha = common_alpha(spec1, spec2)?;
    let config = unregularized(config);
    let s1 = solve_transient(spec1, &config)?;
    let s2 = solve_transient(spec2, &config)?;
    Ok(report_from(spec1, spec2, alpha, &s1, &s2)?)
}

fn report_from(
    spec1: &ProblemSpec,
    spec2: &ProblemSpec,
    alpha: f64,
    s1: &SolutionState,
    s2: &SolutionState,
) -> Result<DependenceReport, VerificationError> {
    let ops = &spec1.ops;
    let tau = s1.tau;
    let e: Vec<Vec<f64>> = s1.u.iter().zip(&s2.u).map(|(a, b)| difference(a, b)).collect();
    let (sup_l2_sq, l2h1_sq) = lhs_parts(spec1, tau, &e);
    let trace_constant = if ops.gamma1_nodes.is_empty() { 0.0 } else { ops.trace_constant()? };
    let dg = spec1.g.difference(&spec2.g);
    let dh = spec1.h.difference(&spec2.h);
    let mut g_sq = 0.0;
    let mut h_sq = 0.0;
    for &t in &s1.times[1..] {
        g_sq += tau * ops.l2_norm(&dg.sample(&spec1.mesh, t)).powi(2);
        h_sq += tau * ops.boundary_l2_norm(&dh.sample(&spec1.mesh, t)).powi(2);
    }
    let du0 = ops.l2_norm(&difference(&spec1.u0, &spec2.u0));
    let rhs = 0.5 * alpha * du0 * du0 + g_sq + trace_constant * trace_constant * h_sq;
    let c_dep = dependence_constant(alpha, spec1.final_time);
    let lhs = sup_l2_sq.max(l2h1_sq);
    Ok(DependenceReport {
        alpha,
        trace_constant,
        sup_l2_sq,
        l2h1_sq,
        lhs,
        rhs,
        c_dep,
        margin: c_dep * rhs - lhs,
    })
}

/// Closed-form left side for a pair that differs only in the initial datum,
/// with linear `γ` and linear `β`.
///
/// The error obeys `αM(e_k − e_{k−1})/τ + (K + b·M_Γ)e_k = 0`; expanding `e₀` in
/// the generalized eigenpairs `(μ_j, φ_j)` of `(K + b·M_Γ, αM)` gives
/// `e_k = Σ_j c_j (1 + τμ_j)^{−k} φ_j`.
pub fn backward_euler_difference_lhs(spec1: &ProblemSpec, spec2: &ProblemSpec, tau: f64) -> Result<f64, VerificationError> {
    let alpha = common_alpha(spec1, spec2)?;
    let b = spec1
        .beta
        .linear_slope()
        .ok_or_else(|| hypothesis(format!("beta = {} is not linear", spec1.beta)))?;
    let steps = (spec1.final_time / tau).round() as usize;
    let dg = spec1.g.difference(&spec2.g);
    let dh = spec1.h.difference(&spec2.h);
    for k in 0..=steps {
        let t = k as f64 * tau;
        let zero = |f: &crate::problem::SpaceTimeField| f.sample(&spec1.mesh, t).iter().all(|x| x.abs() <= DATA_TOLERANCE);
        if !zero(&dg) || !zero(&dh) {
            return Err(hypothesis("closed form needs equal source and boundary data"));
        }
    }
    let ops = &spec1.ops;
    let n = ops.node_count();
    let k = DMatrix::from_fn(n, n, |i, j| ops.stiffness.get(i, j));
    let d: Vec<f64> = ops.mass.iter().map(|m| 1.0 / (alpha * m).sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| {
        let a = k[(i, j)] + if i == j { b * ops.boundary_mass[i] } else { 0.0 };
        d[i] * a * d[j]
    });
    let eig = SymmetricEigen::new(s);
    let e0 = DVector::from_iterator(n, (0..n).map(|i| (spec1.u0[i] - spec2.u0[i]) / d[i]));
    let coeffs = eig.eigenvectors.transpose() * &e0;
    let mut e = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let damped = DVector::from_iterator(
            n,
            (0..n).map(|j| coeffs[j] * (1.0 + tau * eig.eigenvalues[j]).powi(-(step as i32))),
        );
        let w = &eig.eigenvectors * damped;
        e.push((0..n).map(|i| d[i] * w[i]).collect::<Vec<f64>>());
    }
    let (sup, l2h1) = lhs_parts(spec1, tau, &e);
    Ok(sup.max(l2h1))
}
