//! Maximal monotone graphs on ℝ and their scalar calculus.
//!
//! Every built-in graph has full domain ℝ and contains the origin. Set-valued
//! points (the vertical segment of `sign` at zero) are represented as closed
//! intervals; the rest of the crate only ever consumes resolvents, Yosida
//! approximants and minimal sections, all of which are single-valued.

mod properties;
mod quadrature;
mod root;

use std::fmt;

use thiserror::Error;

pub use properties::{graph_property_suite, graph_property_suite_with_tolerance, Property, PropertyCheck, PropertyReport};
pub use quadrature::adaptive_simpson;
pub use root::{solve_monotone, MonotoneSample, RootOptions};

/// Absolute tolerance for potentials without a closed form.
pub const QUADRATURE_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("scalar root finder did not converge after {iterations} iterations (bracket [{lower}, {upper}])")]
    NonConvergence { iterations: usize, lower: f64, upper: f64 },
    #[error("argument {0} cannot be bracketed inside the domain of the graph")]
    DomainError(f64),
    #[error("adaptive quadrature stalled on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid graph parameter: {0}")]
    InvalidParameter(String),
    #[error("declared {constant} fails audit at x = {x}: {detail}")]
    AuditFailure {
        constant: &'static str,
        x: f64,
        detail: String,
    },
}

/// Shape of a built-in graph.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    /// `r ↦ αr`.
    Linear { slope: f64 },
    /// `r ↦ αr + b·tanh(r)`; slopes lie in `[α, α + b]`.
    SaturatingBiLipschitz { slope: f64, saturation: f64 },
    /// `r ↦ h·γ(r) + s·|γ(r)|³·γ(r)` for an inner graph `γ`.
    PhysicalBeta { h: f64, s: f64, inner: Box<ScalarGraph> },
    /// `r ↦ sign(r)·|r|^p`.
    Power { exponent: f64 },
    /// Subdifferential of `|·|`: `[-1, 1]` at the origin.
    Sign,
    /// Pointwise sum of graphs.
    Composite(Vec<ScalarGraph>),
}

/// Declared constants of a graph, consumed by the a-priori bound calculators.
///
/// `lipschitz_lower`/`lipschitz_upper` bound the difference quotients of the
/// graph from below/above, so a graph is bi-Lipschitz when both are present.
/// `linear_bound` is `(C₁, C₂)` with `|ξ| ≤ C₁|x| + C₂` for `ξ ∈ graph(x)`, and
/// `potential_bound` is `(D₁, D₂)` with `|ξ| ≤ D₁·Â(r) + D₂` for `ξ ∈ graph(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GraphConstants {
    pub lipschitz_lower: Option<f64>,
    pub lipschitz_upper: Option<f64>,
    pub linear_bound: Option<(f64, f64)>,
    pub potential_bound: Option<(f64, f64)>,
}

impl GraphConstants {
    pub fn bi_lipschitz(&self) -> Option<(f64, f64)> {
        match (self.lipschitz_lower, self.lipschitz_upper) {
            (Some(c), Some(big_c)) => Some((c, big_c)),
            _ => None,
        }
    }
}

/// A maximal monotone graph on ℝ with `0 ∈ graph(0)` and domain ℝ.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGraph {
    kind: GraphKind,
}

fn positive(name: &str, value: f64) -> Result<f64, GraphError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(GraphError::InvalidParameter(format!("{name} must be finite and > 0, got {value}")))
    }
}

fn nonnegative(name: &str, value: f64) -> Result<f64, GraphError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(GraphError::InvalidParameter(format!("{name} must be finite and >= 0, got {value}")))
    }
}

fn check_lambda(lambda: f64) -> Result<(), GraphError> {
    positive("lambda", lambda).map(|_| ())
}

fn check_arg(x: f64) -> Result<(), GraphError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(GraphError::DomainError(x))
    }
}

/// `ln cosh r` without overflow.
fn log_cosh(r: f64) -> f64 {
    let a = r.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `t ↦ h·t + s·|t|³·t`, the outer map of [`GraphKind::PhysicalBeta`].
fn physical_outer(h: f64, s: f64, t: f64) -> f64 {
    h * t + s * t.abs().powi(3) * t
}

impl ScalarGraph {
    pub fn linear(slope: f64) -> Result<Self, GraphError> {
        Ok(ScalarGraph {
            kind: GraphKind::Linear {
                slope: positive("linear slope", slope)?,
            },
        })
    }

    pub fn identity() -> Self {
        ScalarGraph {
            kind: GraphKind::Linear { slope: 1.0 },
        }
    }

    pub fn saturating(slope: f64, saturation: f64) -> Result<Self, GraphError> {
        Ok(ScalarGraph {
            kind: GraphKind::SaturatingBiLipschitz {
                slope: positive("saturating slope", slope)?,
                saturation: nonnegative("saturation", saturation)?,
            },
        })
    }

    /// The boundary law `h·γ(r) + s·|γ(r)|³·γ(r)` with inner graph `γ`.
    pub fn physical(h: f64, s: f64, inner: ScalarGraph) -> Result<Self, GraphError> {
        let h = positive("h", h)?;
        let s = nonnegative("s", s)?;
        Ok(ScalarGraph {
            kind: GraphKind::PhysicalBeta {
                h,
                s,
                inner: Box::new(inner),
            },
        })
    }

    pub fn power(exponent: f64) -> Result<Self, GraphError> {
        Ok(ScalarGraph {
            kind: GraphKind::Power {
                exponent: positive("power exponent", exponent)?,
            },
        })
    }

    pub fn sign() -> Self {
        ScalarGraph { kind: GraphKind::Sign }
    }

    pub fn composite(parts: Vec<ScalarGraph>) -> Result<Self, GraphError> {
        if parts.is_empty() {
            return Err(GraphError::InvalidParameter("composite graph needs at least one part".into()));
        }
        Ok(ScalarGraph {
            kind: GraphKind::Composite(parts),
        })
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    /// Domain of the graph. Every built-in graph has `D = ℝ`.
    pub fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Slope `α` if the graph is `r ↦ αr`.
    pub fn linear_slope(&self) -> Option<f64> {
        match &self.kind {
            GraphKind::Linear { slope } => Some(*slope),
            GraphKind::SaturatingBiLipschitz { slope, saturation } if *saturation == 0.0 => Some(*slope),
            GraphKind::Power { exponent } if *exponent == 1.0 => Some(1.0),
            GraphKind::PhysicalBeta { h, s, inner } if *s == 0.0 => inner.linear_slope().map(|a| h * a),
            GraphKind::Composite(parts) => parts.iter().map(|p| p.linear_slope()).sum(),
            _ => None,
        }
    }

    pub fn is_single_valued(&self) -> bool {
        match &self.kind {
            GraphKind::Sign => false,
            GraphKind::PhysicalBeta { inner, .. } => inner.is_single_valued(),
            GraphKind::Composite(parts) => parts.iter().all(|p| p.is_single_valued()),
            _ => true,
        }
    }

    /// True when the resolvent is evaluated in closed form.
    pub fn has_closed_form_resolvent(&self) -> bool {
        matches!(self.kind, GraphKind::Linear { .. } | GraphKind::Sign)
            || matches!(self.kind, GraphKind::Power { exponent } if exponent == 1.0)
    }

    /// The image interval `graph(r)`.
    pub fn bounds(&self, r: f64) -> (f64, f64) {
        match &self.kind {
            GraphKind::Linear { slope } => (slope * r, slope * r),
            GraphKind::SaturatingBiLipschitz { slope, saturation } => {
                let v = slope * r + saturation * r.tanh();
                (v, v)
            }
            GraphKind::PhysicalBeta { h, s, inner } => {
                let (lo, hi) = inner.bounds(r);
                (physical_outer(*h, *s, lo), physical_outer(*h, *s, hi))
            }
            GraphKind::Power { exponent } => {
                let v = r.signum() * r.abs().powf(*exponent);
                let v = if r == 0.0 { 0.0 } else { v };
                (v, v)
            }
            GraphKind::Sign => {
                if r > 0.0 {
                    (1.0, 1.0)
                } else if r < 0.0 {
                    (-1.0, -1.0)
                } else {
                    (-1.0, 1.0)
                }
            }
            GraphKind::Composite(parts) => parts.iter().fold((0.0, 0.0), |(l, u), p| {
                let (pl, pu) = p.bounds(r);
                (l + pl, u + pu)
            }),
        }
    }

    /// Derivative of the graph at `r`; `+∞` on vertical segments.
    pub fn slope(&self, r: f64) -> f64 {
        match &self.kind {
            GraphKind::Linear { slope } => *slope,
            GraphKind::SaturatingBiLipschitz { slope, saturation } => {
                let t = r.tanh();
                slope + saturation * (1.0 - t * t)
            }
            GraphKind::PhysicalBeta { h, s, inner } => {
                let (lo, hi) = inner.bounds(r);
                if lo != hi {
                    return f64::INFINITY;
                }
                let d = inner.slope(r);
                if d.is_infinite() {
                    return f64::INFINITY;
                }
                (h + 4.0 * s * lo.abs().powi(3)) * d
            }
            GraphKind::Power { exponent } => {
                let p = *exponent;
                if r == 0.0 {
                    if p < 1.0 {
                        f64::INFINITY
                    } else if p == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    p * r.abs().powf(p - 1.0)
                }
            }
            GraphKind::Sign => {
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            GraphKind::Composite(parts) => parts.iter().map(|p| p.slope(r)).sum(),
        }
    }

    /// Single-valued evaluation; for set-valued points this is the minimal section.
    pub fn value(&self, r: f64) -> f64 {
        let (lo, hi) = self.bounds(r);
        if lo <= 0.0 && hi >= 0.0 {
            0.0
        } else if lo > 0.0 {
            lo
        } else {
            hi
        }
    }

    /// `A⁰x`, the element of `graph(x)` of least absolute value.
    pub fn minimal_section(&self, x: f64) -> Result<f64, GraphError> {
        check_arg(x)?;
        Ok(self.value(x))
    }

    fn sample(&self, r: f64) -> MonotoneSample {
        let (lower, upper) = self.bounds(r);
        let d = self.slope(r);
        let slope = if lower == upper && d.is_finite() { Some(d) } else { None };
        MonotoneSample { lower, upper, slope }
    }

    /// `J_λx = (I + λA)⁻¹x`.
    pub fn resolvent(&self, lambda: f64, x: f64) -> Result<f64, GraphError> {
        check_lambda(lambda)?;
        check_arg(x)?;
        match &self.kind {
            GraphKind::Linear { slope } => return Ok(x / (1.0 + lambda * slope)),
            GraphKind::Power { exponent } if *exponent == 1.0 => return Ok(x / (1.0 + lambda)),
            GraphKind::Sign => return Ok(x.signum() * (x.abs() - lambda).max(0.0)),
            _ => {}
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        let map = |y: f64| {
            let s = self.sample(y);
            MonotoneSample {
                lower: y + lambda * s.lower - x,
                upper: y + lambda * s.upper - x,
                slope: s.slope.map(|d| 1.0 + lambda * d),
            }
        };
        // 0 ∈ A(0) and monotonicity put the root between 0 and x.
        solve_monotone(map, x.min(0.0), x.max(0.0), RootOptions::relative_to(x))
    }

    /// `A_λx = (x − J_λx)/λ`.
    pub fn yosida(&self, lambda: f64, x: f64) -> Result<f64, GraphError> {
        check_lambda(lambda)?;
        check_arg(x)?;
        match &self.kind {
            GraphKind::Linear { slope } => Ok(slope * x / (1.0 + lambda * slope)),
            GraphKind::Sign => Ok((x / lambda).clamp(-1.0, 1.0)),
            _ => {
                let j = self.resolvent(lambda, x)?;
                Ok((x - j) / lambda)
            }
        }
    }

    /// Derivative of `A_λ` at `x` (a generalized derivative at kinks).
    pub fn yosida_slope(&self, lambda: f64, x: f64) -> Result<f64, GraphError> {
        let j = self.resolvent(lambda, x)?;
        let d = self.slope(j);
        let (lo, hi) = self.bounds(j);
        if d.is_infinite() || lo != hi {
            Ok(1.0 / lambda)
        } else {
            Ok(d / (1.0 + lambda * d))
        }
    }

    /// `clamp(A_λr, −1/ε, 1/ε)`; `ε = 0` disables the truncation.
    pub fn truncated_yosida(&self, lambda: f64, epsilon: f64, r: f64) -> Result<f64, GraphError> {
        let v = self.yosida(lambda, r)?;
        Ok(truncate(v, epsilon))
    }

    /// The convex potential `Â(r) = ∫₀ʳ A⁰(s) ds`, normalized by `Â(0) = 0`.
    pub fn potential(&self, r: f64) -> Result<f64, GraphError> {
        check_arg(r)?;
        if r == 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            GraphKind::Linear { slope } => Ok(0.5 * slope * r * r),
            GraphKind::SaturatingBiLipschitz { slope, saturation } => Ok(0.5 * slope * r * r + saturation * log_cosh(r)),
            GraphKind::PhysicalBeta { h, s, inner } => match inner.linear_slope() {
                Some(a) => Ok(0.5 * h * a * r * r + s * a.powi(4) * r.abs().powi(5) / 5.0),
                None => adaptive_simpson(|t| self.value(t), 0.0, r, QUADRATURE_TOLERANCE).map(|v| v.max(0.0)),
            },
            GraphKind::Power { exponent } => Ok(r.abs().powf(exponent + 1.0) / (exponent + 1.0)),
            GraphKind::Sign => Ok(r.abs()),
            GraphKind::Composite(parts) => parts.iter().map(|p| p.potential(r)).sum(),
        }
    }

    /// `φ_λ(x) = min_y { |y − x|²/(2λ) + Â(y) }`, attained at `y = J_λx`.
    pub fn moreau_envelope(&self, lambda: f64, x: f64) -> Result<f64, GraphError> {
        let j = self.resolvent(lambda, x)?;
        let d = x - j;
        Ok(d * d / (2.0 * lambda) + self.potential(j)?)
    }

    /// A point `x` with `y ∈ graph(x)`.
    pub fn inverse(&self, y: f64) -> Result<f64, GraphError> {
        check_arg(y)?;
        if let Some(a) = self.linear_slope() {
            return Ok(y / a);
        }
        let (lo0, hi0) = self.bounds(0.0);
        if lo0 <= y && y <= hi0 {
            return Ok(0.0);
        }
        let map = |x: f64| {
            let s = self.sample(x);
            MonotoneSample {
                lower: s.lower - y,
                upper: s.upper - y,
                slope: s.slope,
            }
        };
        let direction = if y > 0.0 { 1.0 } else { -1.0 };
        let mut far = direction;
        for _ in 0..64 {
            let s = map(far);
            let beyond = if direction > 0.0 { s.upper >= 0.0 } else { s.lower <= 0.0 };
            if beyond {
                return solve_monotone(map, 0.0, far, RootOptions::relative_to(far));
            }
            far *= 2.0;
        }
        Err(GraphError::Unsupported(format!("{y} is outside the range of {self}")))
    }

    /// The convex conjugate `Â*(y) = sup_x { xy − Â(x) }`.
    ///
    /// Evaluated as `y·x − Â(x)` at a preimage `x ∈ graph⁻¹(y)`; `+∞` for `sign`
    /// outside `[-1, 1]`.
    pub fn conjugate_potential(&self, y: f64) -> Result<f64, GraphError> {
        check_arg(y)?;
        match &self.kind {
            GraphKind::Linear { slope } => Ok(y * y / (2.0 * slope)),
            GraphKind::Power { exponent } => {
                let q = 1.0 + 1.0 / exponent;
                Ok(y.abs().powf(q) / q)
            }
            GraphKind::Sign => Ok(if y.abs() <= 1.0 { 0.0 } else { f64::INFINITY }),
            _ => {
                let x = self.inverse(y)?;
                Ok((x * y - self.potential(x)?).max(0.0))
            }
        }
    }

    /// Declared constants of the built-in families.
    pub fn constants(&self) -> GraphConstants {
        match &self.kind {
            GraphKind::Linear { slope: a } => GraphConstants {
                lipschitz_lower: Some(*a),
                lipschitz_upper: Some(*a),
                linear_bound: Some((*a, 0.0)),
                // a|r| ≤ 2·(ar²/2) + a/4
                potential_bound: Some((2.0, 0.25 * a)),
            },
            GraphKind::SaturatingBiLipschitz { slope: a, saturation: b } => GraphConstants {
                lipschitz_lower: Some(*a),
                lipschitz_upper: Some(a + b),
                linear_bound: Some((*a, *b)),
                potential_bound: Some((2.0, 0.25 * a + b)),
            },
            GraphKind::PhysicalBeta { h, s, inner } => {
                let ic = inner.constants();
                let lower = ic.lipschitz_lower.map(|c| h * c);
                let (upper, linear) = if *s == 0.0 {
                    let u = ic.lipschitz_upper.map(|c| h * c);
                    (u, ic.linear_bound.map(|(c1, c2)| (h * c1, h * c2)))
                } else {
                    (None, None)
                };
                // c|r| ≤ |γ(r)| ≤ C|r| gives |β(r)| ≤ 5(C/c)⁴·β̂(r) + hC/4 + sC⁴.
                let potential = ic.bi_lipschitz().map(|(c, big_c)| {
                    let ratio = big_c / c;
                    (5.0 * ratio.powi(4), 0.25 * h * big_c + s * big_c.powi(4))
                });
                GraphConstants {
                    lipschitz_lower: lower,
                    lipschitz_upper: upper,
                    linear_bound: linear,
                    potential_bound: potential,
                }
            }
            GraphKind::Power { exponent: p } => {
                let p = *p;
                let lip = if p == 1.0 { Some(1.0) } else { None };
                GraphConstants {
                    lipschitz_lower: lip,
                    lipschitz_upper: lip,
                    linear_bound: if p <= 1.0 { Some((1.0, 1.0)) } else { None },
                    potential_bound: Some((p + 1.0, 1.0)),
                }
            }
            GraphKind::Sign => GraphConstants {
                lipschitz_lower: None,
                lipschitz_upper: None,
                linear_bound: Some((1.0, 1.0)),
                potential_bound: Some((1.0, 1.0)),
            },
            GraphKind::Composite(parts) => {
                let cs: Vec<GraphConstants> = parts.iter().map(|p| p.constants()).collect();
                let sum_opt = |f: &dyn Fn(&GraphConstants) -> Option<f64>| -> Option<f64> { cs.iter().map(f).sum() };
                let lower = sum_opt(&|c| c.lipschitz_lower);
                let upper = sum_opt(&|c| c.lipschitz_upper);
                let linear = cs
                    .iter()
                    .map(|c| c.linear_bound)
                    .try_fold((0.0, 0.0), |(a, b), lb| lb.map(|(c1, c2)| (a + c1, b + c2)));
                let potential = cs
                    .iter()
                    .map(|c| c.potential_bound)
                    .try_fold((0.0_f64, 0.0), |(d1, d2), pb| pb.map(|(e1, e2)| (d1.max(e1), d2 + e2)));
                GraphConstants {
                    lipschitz_lower: lower,
                    lipschitz_upper: upper,
                    linear_bound: linear,
                    potential_bound: potential,
                }
            }
        }
    }

    /// Checks the declared constants against sampled difference quotients and
    /// values. Any violation is an error.
    pub fn audit(&self, samples: &[f64]) -> Result<(), GraphError> {
        let consts = self.constants();
        const SLACK: f64 = 1e-9;
        for (i, &x) in samples.iter().enumerate() {
            check_arg(x)?;
            let (lo, hi) = self.bounds(x);
            if lo > 0.0 && x < 0.0 || hi < 0.0 && x > 0.0 {
                return Err(GraphError::AuditFailure {
                    constant: "0 ∈ graph(0) with monotonicity",
                    x,
                    detail: format!("graph({x}) = [{lo}, {hi}]"),
                });
            }
            if let Some((c1, c2)) = consts.linear_bound {
                let m = lo.abs().max(hi.abs());
                if m > (c1 * x.abs() + c2) * (1.0 + SLACK) + SLACK {
                    return Err(GraphError::AuditFailure {
                        constant: "linear bound (C1, C2)",
                        x,
                        detail: format!("|ξ| = {m} > {c1}·|x| + {c2}"),
                    });
                }
            }
            if let Some((d1, d2)) = consts.potential_bound {
                let m = lo.abs().max(hi.abs());
                let pot = self.potential(x)?;
                if m > (d1 * pot + d2) * (1.0 + SLACK) + SLACK {
                    return Err(GraphError::AuditFailure {
                        constant: "potential bound (D1, D2)",
                        x,
                        detail: format!("|ξ| = {m} > {d1}·{pot} + {d2}"),
                    });
                }
            }
            for &y in &samples[i + 1..] {
                if x == y {
                    continue;
                }
                let q = (self.value(y) - self.value(x)) / (y - x);
                if q < -SLACK {
                    return Err(GraphError::AuditFailure {
                        constant: "monotonicity",
                        x,
                        detail: format!("negative difference quotient {q} against y = {y}"),
                    });
                }
                if let Some(c) = consts.lipschitz_lower {
                    if q < c * (1.0 - SLACK) {
                        return Err(GraphError::AuditFailure {
                            constant: "lower Lipschitz constant c_γ",
                            x,
                            detail: format!("difference quotient {q} < {c} against y = {y}"),
                        });
                    }
                }
                if let Some(c) = consts.lipschitz_upper {
                    if q > c * (1.0 + SLACK) {
                        return Err(GraphError::AuditFailure {
                            constant: "upper Lipschitz constant C_γ",
                            x,
                            detail: format!("difference quotient {q} > {c} against y = {y}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// [`ScalarGraph::audit`] on a fixed grid covering `[-10, 10]` densely near the origin.
    pub fn audit_default(&self) -> Result<(), GraphError> {
        self.audit(&default_audit_samples())
    }
}

pub fn default_audit_samples() -> Vec<f64> {
    let mut s: Vec<f64> = (0..=80).map(|i| -10.0 + 0.25 * i as f64).collect();
    s.extend((1..=20).map(|i| 1e-3 * i as f64 - 0.0105));
    s
}

pub fn truncate(value: f64, epsilon: f64) -> f64 {
    if epsilon > 0.0 {
        let cap = 1.0 / epsilon;
        value.clamp(-cap, cap)
    } else {
        value
    }
}

impl fmt::Display for ScalarGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GraphKind::Linear { slope } => write!(f, "linear({slope})"),
            GraphKind::SaturatingBiLipschitz { slope, saturation } => write!(f, "saturating({slope}, {saturation})"),
            GraphKind::PhysicalBeta { h, s, inner } => write!(f, "physical(h={h}, s={s}, inner={inner})"),
            GraphKind::Power { exponent } => write!(f, "power({exponent})"),
            GraphKind::Sign => write!(f, "sign()"),
            GraphKind::Composite(parts) => {
                write!(f, "sum(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// The five single-family built-ins used by graph checks.
pub fn builtin_graphs() -> Vec<ScalarGraph> {
    vec![
        ScalarGraph::linear(2.0).expect("valid"),
        ScalarGraph::saturating(1.0, 1.0).expect("valid"),
        ScalarGraph::physical(1.0, 1.0, ScalarGraph::identity()).expect("valid"),
        ScalarGraph::power(3.0).expect("valid"),
        ScalarGraph::sign(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn phys() -> ScalarGraph {
        ScalarGraph::physical(1.0, 1.0, ScalarGraph::identity()).unwrap()
    }

    /// Bisection on `y + λβ(y) − x`, independent of the safeguarded Newton.
    fn bisect_resolvent(g: &ScalarGraph, lambda: f64, x: f64) -> f64 {
        let (mut a, mut b) = (x.min(0.0), x.max(0.0));
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m + lambda * g.value(m) - x > 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn resolvent_examples() {
        let lin = ScalarGraph::linear(2.0).unwrap();
        assert_abs_diff_eq!(lin.resolvent(0.5, 4.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ScalarGraph::sign().resolvent(1.0, 0.3).unwrap(), 0.0);
        // root of y⁴ + 2y − 3
        let oracle = bisect_resolvent(&phys(), 1.0, 3.0);
        assert_abs_diff_eq!(oracle, 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(phys().resolvent(1.0, 3.0).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn yosida_examples() {
        let lin = ScalarGraph::linear(2.0).unwrap();
        assert_abs_diff_eq!(lin.yosida(0.5, 4.0).unwrap(), 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ScalarGraph::sign().yosida(1.0, 0.3).unwrap(), 0.3, epsilon = 1e-15);
        let a = phys().yosida(1.0, 3.0).unwrap();
        assert_abs_diff_eq!(a, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a, phys().value(phys().resolvent(1.0, 3.0).unwrap()), epsilon = 1e-11);
    }

    #[test]
    fn minimal_section_examples() {
        assert_eq!(ScalarGraph::sign().minimal_section(0.0).unwrap(), 0.0);
        assert_eq!(ScalarGraph::linear(2.0).unwrap().minimal_section(3.0).unwrap(), 6.0);
        assert_eq!(phys().minimal_section(1.0).unwrap(), 2.0);
        assert!(matches!(
            ScalarGraph::sign().minimal_section(f64::NAN),
            Err(GraphError::DomainError(_))
        ));
    }

    #[test]
    fn potential_examples() {
        let closed = phys().potential(1.0).unwrap();
        assert_abs_diff_eq!(closed, 0.7, epsilon = 1e-15);
        let quad = adaptive_simpson(|t| phys().value(t), 0.0, 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(closed, quad, epsilon = 1e-11);
        for g in builtin_graphs() {
            assert_eq!(g.potential(0.0).unwrap(), 0.0);
        }
        assert_abs_diff_eq!(ScalarGraph::linear(2.0).unwrap().potential(3.0).unwrap(), 9.0);
    }

    #[test]
    fn potential_by_quadrature_for_nonlinear_inner() {
        let inner = ScalarGraph::saturating(1.0, 1.0).unwrap();
        let g = ScalarGraph::physical(1.0, 1.0, inner.clone()).unwrap();
        // closed form of ∫ γ + γ⁴·sign(γ) with γ = r + tanh r, by a fine midpoint rule
        let n = 200_000;
        let r = 1.5;
        let dx = r / n as f64;
        let mid: f64 = (0..n).map(|i| g.value((i as f64 + 0.5) * dx)).sum::<f64>() * dx;
        assert_abs_diff_eq!(g.potential(r).unwrap(), mid, epsilon = 1e-8);
    }

    #[test]
    fn moreau_envelope_examples() {
        let lin = ScalarGraph::linear(2.0).unwrap();
        // grid minimization oracle
        let grid_min = (0..=400_000)
            .map(|i| -1.0 + 6.0 * i as f64 / 400_000.0)
            .map(|y| (y - 4.0_f64).powi(2) / (2.0 * 0.5) + lin.potential(y).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(grid_min, 8.0, epsilon = 1e-8);
        assert_abs_diff_eq!(lin.moreau_envelope(0.5, 4.0).unwrap(), 8.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ScalarGraph::sign().moreau_envelope(1.0, 0.3).unwrap(), 0.045, epsilon = 1e-15);
        for g in builtin_graphs() {
            assert_eq!(g.moreau_envelope(0.5, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn conjugate_examples() {
        let lin = ScalarGraph::linear(2.0).unwrap();
        assert_abs_diff_eq!(lin.conjugate_potential(4.0).unwrap(), 4.0);
        assert_abs_diff_eq!(lin.conjugate_potential(6.0).unwrap(), 9.0);
        assert_abs_diff_eq!(lin.potential(3.0).unwrap() + lin.conjugate_potential(6.0).unwrap(), 18.0);

        let sat = ScalarGraph::saturating(1.0, 1.0).unwrap();
        let y = sat.value(2.0);
        // sup over a fine grid
        let sup = (0..=200_000)
            .map(|i| -10.0 + 20.0 * i as f64 / 200_000.0)
            .map(|x| x * y - sat.potential(x).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let conj = sat.conjugate_potential(y).unwrap();
        assert_abs_diff_eq!(conj, sup, epsilon = 1e-7);
        assert!(conj >= y * y / (4.0 * 2.0));
    }

    #[test]
    fn conjugate_outside_range_is_unsupported() {
        let g = ScalarGraph::composite(vec![ScalarGraph::sign()]).unwrap();
        assert!(matches!(g.conjugate_potential(2.0), Err(GraphError::Unsupported(_))));
        assert_eq!(ScalarGraph::sign().conjugate_potential(2.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn truncation_cases() {
        let lin = ScalarGraph::linear(2.0).unwrap();
        // yosida(2, λ=0.5, x) = x, so x selects the untruncated value
        assert_abs_diff_eq!(lin.yosida(0.5, 5.0).unwrap(), 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(lin.truncated_yosida(0.5, 0.5, 5.0).unwrap(), 2.0);
        assert_abs_diff_eq!(lin.truncated_yosida(0.5, 0.5, -3.0).unwrap(), -2.0);
        assert_abs_diff_eq!(lin.truncated_yosida(0.5, 0.5, 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(lin.truncated_yosida(0.5, 0.0, 5.0).unwrap(), 5.0, epsilon = 1e-14);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ScalarGraph::linear(0.0).is_err());
        assert!(ScalarGraph::linear(-1.0).is_err());
        assert!(ScalarGraph::power(f64::NAN).is_err());
        assert!(ScalarGraph::composite(vec![]).is_err());
        assert!(ScalarGraph::identity().resolvent(0.0, 1.0).is_err());
    }

    #[test]
    fn declared_constants_pass_audit() {
        for g in builtin_graphs() {
            g.audit_default().unwrap_or_else(|e| panic!("{g}: {e}"));
        }
        let c = ScalarGraph::composite(vec![ScalarGraph::saturating(1.0, 0.5).unwrap(), ScalarGraph::sign()]).unwrap();
        c.audit_default().unwrap();
        let p = ScalarGraph::physical(0.5, 2.0, ScalarGraph::saturating(1.0, 1.0).unwrap()).unwrap();
        p.audit_default().unwrap();
        assert_eq!(ScalarGraph::saturating(1.0, 1.0).unwrap().constants().bi_lipschitz(), Some((1.0, 2.0)));
    }

    #[test]
    fn misdeclared_constant_fails_audit() {
        // tanh part has slope b = 1 at the origin, so a zero-saturation twin with
        // the same declared constants must still pass, and a tighter claim fails.
        let g = ScalarGraph::saturating(1.0, 1.0).unwrap();
        let consts = g.constants();
        assert_eq!(consts.lipschitz_upper, Some(2.0));
        let liar = ScalarGraph::composite(vec![g, ScalarGraph::power(3.0).unwrap()]).unwrap();
        // power(3) declares no Lipschitz constants, so the sum declares none either
        assert_eq!(liar.constants().lipschitz_upper, None);
        liar.audit_default().unwrap();
    }

    #[test]
    fn display_round_trips_through_grammar_shape() {
        assert_eq!(phys().to_string(), "physical(h=1, s=1, inner=linear(1))");
        assert_eq!(ScalarGraph::sign().to_string(), "sign()");
    }
}
