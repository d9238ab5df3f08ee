use std::fmt;

use super::{solve_monotone, GraphError, MonotoneSample, RootOptions, ScalarGraph};

/// Tolerance for graphs whose resolvent is evaluated in closed form.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-10;
/// Tolerance for graphs whose resolvent comes from the scalar root finder.
pub const ITERATIVE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    Nonexpansive,
    YosidaLipschitz,
    Consistency,
    Semigroup,
    MonotoneBound,
    EnvelopeMonotone,
    EnvelopeGradient,
    FenchelYoung,
}

impl Property {
    pub const ALL: [Property; 8] = [
        Property::Nonexpansive,
        Property::YosidaLipschitz,
        Property::Consistency,
        Property::Semigroup,
        Property::MonotoneBound,
        Property::EnvelopeMonotone,
        Property::EnvelopeGradient,
        Property::FenchelYoung,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Nonexpansive => "nonexpansive_resolvent",
            Property::YosidaLipschitz => "yosida_lipschitz",
            Property::Consistency => "consistency",
            Property::Semigroup => "semigroup",
            Property::MonotoneBound => "monotone_bound",
            Property::EnvelopeMonotone => "envelope_monotone",
            Property::EnvelopeGradient => "envelope_gradient",
            Property::FenchelYoung => "fenchel_young",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One evaluated check. `lambda` is `None` for properties that do not depend on it.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub property: Property,
    pub lambda: Option<f64>,
    pub x: f64,
    pub observed: f64,
    pub violation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn of(&self, property: Property) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(move |c| c.property == property)
    }

    pub fn max_violation(&self) -> f64 {
        self.checks.iter().map(|c| c.violation).fold(0.0, f64::max)
    }
}

struct Recorder {
    base: f64,
    checks: Vec<PropertyCheck>,
}

impl Recorder {
    fn push(&mut self, property: Property, lambda: Option<f64>, x: f64, scale: f64, outcome: Result<(f64, f64), GraphError>) {
        let tolerance = self.base * scale.abs().max(1.0);
        let (observed, violation) = match outcome {
            Ok(pair) => pair,
            Err(_) => (f64::NAN, f64::INFINITY),
        };
        let passed = violation.is_finite() && violation <= tolerance;
        self.checks.push(PropertyCheck {
            property,
            lambda,
            x,
            observed,
            violation,
            tolerance,
            passed,
        });
    }
}

/// `(A_μ)_λ(x)`, computed by solving `z + λ·A_μ(z) = x` with the root finder.
pub(crate) fn nested_yosida(graph: &ScalarGraph, mu: f64, lambda: f64, x: f64) -> Result<f64, GraphError> {
    let map = |z: f64| -> MonotoneSample {
        match (graph.yosida(mu, z), graph.yosida_slope(mu, z)) {
            (Ok(a), Ok(d)) => MonotoneSample::single(z + lambda * a - x, Some(1.0 + lambda * d)),
            _ => MonotoneSample::single(f64::NAN, None),
        }
    };
    let z = solve_monotone(map, x.min(0.0), x.max(0.0), RootOptions::relative_to(x))?;
    Ok((x - z) / lambda)
}

/// Fourth-order central difference of `φ_λ` at `x`.
fn envelope_derivative(graph: &ScalarGraph, lambda: f64, x: f64) -> Result<f64, GraphError> {
    let h = 1e-3 * x.abs().max(1.0);
    let f = |t: f64| graph.moreau_envelope(lambda, t);
    Ok((-f(x + 2.0 * h)? + 8.0 * f(x + h)? - 8.0 * f(x - h)? + f(x - 2.0 * h)?) / (12.0 * h))
}

/// Runs every property at every `λ` (sorted into decreasing order) and sample point,
/// with the default tolerance for the graph family.
pub fn graph_property_suite(graph: &ScalarGraph, lambdas: &[f64], samples: &[f64]) -> PropertyReport {
    let tol = if graph.has_closed_form_resolvent() {
        CLOSED_FORM_TOLERANCE
    } else {
        ITERATIVE_TOLERANCE
    };
    graph_property_suite_with_tolerance(graph, lambdas, samples, tol)
}

/// As [`graph_property_suite`] with a caller-chosen base tolerance. Each check
/// scales it by `max(1, |magnitude|)` of the quantities being compared.
pub fn graph_property_suite_with_tolerance(graph: &ScalarGraph, lambdas: &[f64], samples: &[f64], tolerance: f64) -> PropertyReport {
    let mut lams: Vec<f64> = lambdas.to_vec();
    lams.sort_by(|a, b| b.total_cmp(a));
    lams.dedup();
    let mut rec = Recorder {
        base: tolerance,
        checks: Vec::new(),
    };

    for &lambda in &lams {
        for (i, &x) in samples.iter().enumerate() {
            // Pairwise contraction properties, worst case over partners.
            let mut worst_j: Result<(f64, f64), GraphError> = Ok((0.0, 0.0));
            let mut worst_a: Result<(f64, f64), GraphError> = Ok((0.0, 0.0));
            let mut scale_j = x.abs();
            let mut scale_a = 0.0_f64;
            for (k, &y) in samples.iter().enumerate() {
                if k == i || x == y {
                    continue;
                }
                let d = (x - y).abs();
                match (graph.resolvent(lambda, x), graph.resolvent(lambda, y)) {
                    (Ok(jx), Ok(jy)) => {
                        let gap = (jx - jy).abs();
                        if let Ok((_, v)) = worst_j {
                            let viol = (gap - d).max(0.0);
                            if viol >= v {
                                worst_j = Ok((gap / d, viol));
                                scale_j = scale_j.max(y.abs());
                            }
                        }
                    }
                    (Err(e), _) | (_, Err(e)) => worst_j = Err(e),
                }
                match (graph.yosida(lambda, x), graph.yosida(lambda, y)) {
                    (Ok(ax), Ok(ay)) => {
                        let gap = (ax - ay).abs();
                        if let Ok((_, v)) = worst_a {
                            let viol = (gap - d / lambda).max(0.0);
                            if viol >= v {
                                worst_a = Ok((gap * lambda / d, viol));
                                scale_a = scale_a.max(ax.abs()).max(ay.abs());
                            }
                        }
                    }
                    (Err(e), _) | (_, Err(e)) => worst_a = Err(e),
                }
            }
            rec.push(Property::Nonexpansive, Some(lambda), x, scale_j, worst_j);
            rec.push(Property::YosidaLipschitz, Some(lambda), x, scale_a, worst_a);

            let consistency = graph.resolvent(lambda, x).and_then(|j| {
                let a = graph.yosida(lambda, x)?;
                let (lo, hi) = graph.bounds(j);
                let dist = (lo - a).max(a - hi).max(0.0);
                Ok((a, dist))
            });
            let scale = consistency.as_ref().map(|(a, _)| *a).unwrap_or(1.0);
            rec.push(Property::Consistency, Some(lambda), x, scale, consistency);

            for &mu in &lams {
                let outcome = nested_yosida(graph, mu, lambda, x).and_then(|nested| {
                    let direct = graph.yosida(mu + lambda, x)?;
                    Ok((nested, (nested - direct).abs()))
                });
                let scale = outcome.as_ref().map(|(v, _)| *v).unwrap_or(1.0);
                rec.push(Property::Semigroup, Some(lambda), x, scale, outcome);
            }

            let a0 = graph.value(x).abs();
            let bound = graph.yosida(lambda, x).map(|a| {
                let a = a.abs();
                (a, (a - a0).max(0.0))
            });
            rec.push(Property::MonotoneBound, Some(lambda), x, a0, bound);

            let envelope = graph.moreau_envelope(lambda, x).and_then(|env| {
                let phi = graph.potential(x)?;
                let gap = phi - env;
                let viol = (-gap).max(0.0).max(gap - 0.5 * lambda * a0 * a0);
                Ok((env, viol))
            });
            let scale = graph.potential(x).unwrap_or(1.0);
            rec.push(Property::EnvelopeMonotone, Some(lambda), x, scale, envelope);

            let gradient = envelope_derivative(graph, lambda, x).and_then(|fd| {
                let a = graph.yosida(lambda, x)?;
                Ok((fd, (fd - a).abs()))
            });
            let scale = graph.yosida(lambda, x).unwrap_or(1.0);
            rec.push(Property::EnvelopeGradient, Some(lambda), x, scale, gradient);
        }
    }

    // Ordering in λ: |A_λx| and φ_λ(x) grow as λ decreases.
    for pair in lams.windows(2) {
        let (big, small) = (pair[0], pair[1]);
        for &x in samples {
            let outcome = graph.yosida(big, x).and_then(|ab| {
                let asmall = graph.yosida(small, x)?;
                Ok((asmall.abs(), (ab.abs() - asmall.abs()).max(0.0)))
            });
            let scale = outcome.as_ref().map(|(v, _)| *v).unwrap_or(1.0);
            rec.push(Property::MonotoneBound, Some(small), x, scale, outcome);

            let outcome = graph.moreau_envelope(big, x).and_then(|eb| {
                let es = graph.moreau_envelope(small, x)?;
                Ok((es, (eb - es).max(0.0)))
            });
            let scale = outcome.as_ref().map(|(v, _)| *v).unwrap_or(1.0);
            rec.push(Property::EnvelopeMonotone, Some(small), x, scale, outcome);
        }
    }

    for &x in samples {
        let xi = graph.value(x);
        let outcome = graph.potential(x).and_then(|p| {
            let c = graph.conjugate_potential(xi)?;
            let s = p + c;
            Ok((s, (s - x * xi).abs()))
        });
        rec.push(Property::FenchelYoung, None, x, x * xi, outcome);
    }

    PropertyReport { checks: rec.checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::builtin_graphs;

    fn acceptance_samples() -> Vec<f64> {
        (0..25).map(|i| -2.88 + 0.24 * i as f64).collect()
    }

    #[test]
    fn linear_passes_everything() {
        let g = ScalarGraph::linear(2.0).unwrap();
        let r = graph_property_suite(&g, &[1.0, 0.5], &[-1.0, 0.0, 3.0]);
        assert!(r.all_passed(), "{:?}", r.failures().collect::<Vec<_>>());
        for p in Property::ALL {
            assert!(r.of(p).count() > 0, "{p} not evaluated");
        }
    }

    #[test]
    fn sign_yosida_grows_to_cap() {
        let g = ScalarGraph::sign();
        let vals: Vec<f64> = [1.0, 0.5, 0.25].iter().map(|&l| g.yosida(l, 0.3).unwrap().abs()).collect();
        assert!((vals[0] - 0.3).abs() < 1e-15);
        assert!((vals[1] - 0.6).abs() < 1e-15);
        assert_eq!(vals[2], 1.0);
        let r = graph_property_suite(&g, &[0.25, 1.0, 0.5], &[0.3]);
        assert!(r.all_passed(), "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn physical_semigroup_matches_direct() {
        let g = ScalarGraph::physical(1.0, 1.0, ScalarGraph::identity()).unwrap();
        let nested = nested_yosida(&g, 0.5, 0.5, 3.0).unwrap();
        let direct = g.yosida(1.0, 3.0).unwrap();
        assert!((nested - direct).abs() <= 1e-10, "{nested} vs {direct}");
    }

    #[test]
    fn all_builtins_pass_on_acceptance_grid() {
        let lams = [1.0, 0.5, 0.25, 0.1, 0.01];
        for g in builtin_graphs() {
            let r = graph_property_suite(&g, &lams, &acceptance_samples());
            assert!(r.all_passed(), "{g}: {:?}", r.failures().take(5).collect::<Vec<_>>());
        }
    }

    #[test]
    fn detects_broken_tolerance() {
        // a negative tolerance makes every nontrivial check fail
        let g = ScalarGraph::linear(2.0).unwrap();
        let r = graph_property_suite_with_tolerance(&g, &[1.0], &[1.0, 2.0], -1.0);
        assert!(!r.all_passed());
    }
}
