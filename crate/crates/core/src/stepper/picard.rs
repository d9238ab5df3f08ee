use crate::linalg::{norm2, BandedCholesky};

use super::step::{StepOutcome, StepSystem};
use super::StepperError;

const MAX_BACKTRACKS: usize = 6;

/// Damped L-scheme fixed point.
///
/// Each sweep solves `A_L δ = −R(Uʲ)` with the frozen constant-coefficient
/// operator `A_L` (factored once per step) and sets `Uʲ⁺¹ = Uʲ + θδ`. The
/// damping is halved while the residual grows.
pub fn step_picard(
    system: &StepSystem<'_>,
    guess: &[f64],
    damping: f64,
    tol: f64,
    max_iters: usize,
    step: usize,
) -> Result<StepOutcome, StepperError> {
    let threshold = system.threshold(tol);
    let mut u = guess.to_vec();
    let mut r = system.residual(&u)?;
    let mut rn = norm2(&r);
    let mut history = vec![rn];
    if rn <= threshold {
        return Ok(StepOutcome {
            u,
            iterations: 0,
            residual: rn,
            residual_history: history,
        });
    }
    let a = system.l_scheme_operator(&u)?;
    let factor = BandedCholesky::factor(&a).map_err(|_| StepperError::SingularJacobian { step })?;
    for it in 1..=max_iters {
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        let delta = factor.solve(&neg)?;
        let mut theta = damping;
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACKS {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(x, d)| x + theta * d).collect();
            let tr = system.residual(&trial)?;
            let tn = norm2(&tr);
            if tn < rn || accepted.is_none() {
                let better = tn < rn;
                accepted = Some((trial, tr, tn));
                if better {
                    break;
                }
            }
            theta *= 0.5;
        }
        let (nu, nr, nn) = accepted.expect("at least one trial");
        u = nu;
        r = nr;
        rn = nn;
        history.push(rn);
        if rn <= threshold {
            return Ok(StepOutcome {
                u,
                iterations: it,
                residual: rn,
                residual_history: history,
            });
        }
        if !rn.is_finite() {
            break;
        }
    }
    Err(StepperError::NonConvergence {
        step,
        solver: "picard",
        residuals: history,
    })
}
