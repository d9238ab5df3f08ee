use crate::linalg::{norm2, BandedCholesky};

use super::step::{StepOutcome, StepSystem};
use super::StepperError;

const MAX_HALVINGS: usize = 30;
const ARMIJO: f64 = 1e-4;

/// Newton's method with a backtracking line search on `‖R‖₂`.
pub fn step_newton(system: &StepSystem<'_>, guess: &[f64], tol: f64, max_iters: usize, step: usize) -> Result<StepOutcome, StepperError> {
    let threshold = system.threshold(tol);
    let mut u = guess.to_vec();
    let mut r = system.residual(&u)?;
    let mut rn = norm2(&r);
    let mut history = vec![rn];
    for it in 0..=max_iters {
        if rn <= threshold {
            return Ok(StepOutcome {
                u,
                iterations: it,
                residual: rn,
                residual_history: history,
            });
        }
        if it == max_iters || !rn.is_finite() {
            break;
        }
        let j = system.jacobian(&u)?;
        let factor = BandedCholesky::factor(&j).map_err(|_| StepperError::SingularJacobian { step })?;
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        let delta = factor.solve(&neg)?;
        let mut t = 1.0;
        let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(x, d)| x + t * d).collect();
            let tr = system.residual(&trial)?;
            let tn = norm2(&tr);
            if tn <= (1.0 - ARMIJO * t) * rn {
                best = Some((trial, tr, tn));
                break;
            }
            if best.as_ref().is_none_or(|b| tn < b.2) {
                best = Some((trial, tr, tn));
            }
            t *= 0.5;
        }
        let (nu, nr, nn) = best.expect("at least one trial");
        if nn >= rn {
            // no descent left: residual is at its rounding floor
            history.push(nn);
            break;
        }
        u = nu;
        r = nr;
        rn = nn;
        history.push(rn);
    }
    Err(StepperError::NonConvergence {
        step,
        solver: "newton",
        residuals: history,
    })
}
