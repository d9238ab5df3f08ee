use super::GraphError;

/// One evaluation of a (possibly set-valued) nondecreasing scalar map.
///
/// `lower..=upper` is the image interval at the evaluation point. `slope` is
/// the derivative where the map is single-valued and differentiable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneSample {
    pub lower: f64,
    pub upper: f64,
    pub slope: Option<f64>,
}

impl MonotoneSample {
    pub fn single(value: f64, slope: Option<f64>) -> Self {
        MonotoneSample {
            lower: value,
            upper: value,
            slope,
        }
    }

    fn contains_zero(&self) -> bool {
        self.lower <= 0.0 && self.upper >= 0.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Absolute bracket width at which the search stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl RootOptions {
    pub const MAX_ITERATIONS: usize = 200;

    /// Bracket width `1e-13 * max(1, |scale|)`.
    pub fn relative_to(scale: f64) -> Self {
        RootOptions {
            tolerance: 1e-13 * scale.abs().max(1.0),
            max_iterations: Self::MAX_ITERATIONS,
        }
    }
}

/// Finds `y` in `[a, b]` with `0 ∈ f(y)` for a nondecreasing map `f`.
///
/// Safeguarded Newton: a Newton step is taken when the derivative is known and
/// the step lands strictly inside the current bracket and halves the residual;
/// otherwise the bracket is bisected.
pub fn solve_monotone<F>(f: F, a: f64, b: f64, opts: RootOptions) -> Result<f64, GraphError>
where
    F: Fn(f64) -> MonotoneSample,
{
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(GraphError::DomainError(if lo.is_finite() { hi } else { lo }));
    }
    let f_lo = f(lo);
    if f_lo.contains_zero() {
        return Ok(lo);
    }
    if f_lo.lower > 0.0 {
        return Err(GraphError::DomainError(lo));
    }
    let f_hi = f(hi);
    if f_hi.contains_zero() {
        return Ok(hi);
    }
    if f_hi.upper < 0.0 {
        return Err(GraphError::DomainError(hi));
    }

    let mut y = 0.5 * (lo + hi);
    let mut last_residual = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let s = f(y);
        if s.lower.is_nan() || s.upper.is_nan() {
            break;
        }
        if s.contains_zero() {
            return Ok(y);
        }
        if s.lower > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        if hi - lo <= opts.tolerance {
            return Ok(0.5 * (lo + hi));
        }
        let residual = if s.lower > 0.0 { s.lower } else { -s.upper };
        let newton = match s.slope {
            Some(d) if d.is_finite() && d > 0.0 && s.lower == s.upper && residual < 0.5 * last_residual => {
                let candidate = y - s.lower / d;
                if candidate > lo && candidate < hi {
                    if (candidate - y).abs() <= 0.5 * opts.tolerance {
                        return Ok(candidate);
                    }
                    Some(candidate)
                } else {
                    None
                }
            }
            _ => None,
        };
        last_residual = residual;
        y = newton.unwrap_or(0.5 * (lo + hi));
    }
    Err(GraphError::NonConvergence {
        iterations: opts.max_iterations,
        lower: lo,
        upper: hi,
    })
}
