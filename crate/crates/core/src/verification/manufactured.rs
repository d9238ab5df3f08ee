use std::sync::Arc;

use crate::graphs::ScalarGraph;
use crate::mesh::{BoundaryLabel, MeshPreset};
use crate::problem::{ProblemSpec, SpaceTimeField};

use super::VerificationError;

const ZERO_FLUX_TOLERANCE: f64 = 1e-10;

/// A closed-form field `u*(x, t)` with the derivatives needed to manufacture
/// its data.
pub trait ExactSolution: Send + Sync {
    fn value(&self, p: [f64; 2], t: f64) -> f64;
    fn time_derivative(&self, p: [f64; 2], t: f64) -> f64;
    fn gradient(&self, p: [f64; 2], t: f64) -> [f64; 2];
    fn laplacian(&self, p: [f64; 2], t: f64) -> f64;
}

/// Time factor of a [`CosineMode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile {
    /// `a + b·t`
    Affine { a: f64, b: f64 },
    /// `amplitude·e^{−rate·t}`
    Decay { amplitude: f64, rate: f64 },
}

impl TimeProfile {
    fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Affine { a, b } => a + b * t,
            TimeProfile::Decay { amplitude, rate } => amplitude * (-rate * t).exp(),
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Affine { b, .. } => b,
            TimeProfile::Decay { amplitude, rate } => -rate * amplitude * (-rate * t).exp(),
        }
    }
}

/// `u*(x, y, t) = T(t)·cos(kx·x)·cos(ky·y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineMode {
    pub profile: TimeProfile,
    pub kx: f64,
    pub ky: f64,
}

impl CosineMode {
    pub fn constant(c: f64) -> Self {
        CosineMode {
            profile: TimeProfile::Affine { a: c, b: 0.0 },
            kx: 0.0,
            ky: 0.0,
        }
    }

    pub fn affine(a: f64, b: f64, kx: f64, ky: f64) -> Self {
        CosineMode {
            profile: TimeProfile::Affine { a, b },
            kx,
            ky,
        }
    }

    pub fn decaying(amplitude: f64, rate: f64, kx: f64, ky: f64) -> Self {
        CosineMode {
            profile: TimeProfile::Decay { amplitude, rate },
            kx,
            ky,
        }
    }

    fn shape(&self, p: [f64; 2]) -> f64 {
        (self.kx * p[0]).cos() * (self.ky * p[1]).cos()
    }
}

impl ExactSolution for CosineMode {
    fn value(&self, p: [f64; 2], t: f64) -> f64 {
        self.profile.value(t) * self.shape(p)
    }

    fn time_derivative(&self, p: [f64; 2], t: f64) -> f64 {
        self.profile.derivative(t) * self.shape(p)
    }

    fn gradient(&self, p: [f64; 2], t: f64) -> [f64; 2] {
        let a = self.profile.value(t);
        let (cx, sx) = ((self.kx * p[0]).cos(), (self.kx * p[0]).sin());
        let (cy, sy) = ((self.ky * p[1]).cos(), (self.ky * p[1]).sin());
        [-a * self.kx * sx * cy, -a * self.ky * cx * sy]
    }

    fn laplacian(&self, p: [f64; 2], t: f64) -> f64 {
        -(self.kx * self.kx + self.ky * self.ky) * self.value(p, t)
    }
}

/// Builds the problem on `preset` whose exact solution is `exact`.
///
/// `g = c0·γ'(u*)·∂ₜu* − Δu*` and `h = β(u*) + ∇u*·n` on the active boundary,
/// with `u0` the nodal interpolant of `u*(·, 0)`. Fails if `∇u*·n` does not
/// vanish on the zero-flux boundary.
pub fn manufactured_source(
    exact: Arc<dyn ExactSolution>,
    preset: &MeshPreset,
    c0: f64,
    gamma: ScalarGraph,
    beta: ScalarGraph,
    final_time: f64,
) -> Result<ProblemSpec, VerificationError> {
    let mesh = preset.build()?;
    for probe in [0.0, 0.5 * final_time, final_time] {
        for (p, label) in mesh.nodes().iter().zip(mesh.labels()) {
            if *label == BoundaryLabel::Interior {
                continue;
            }
            let grad = exact.gradient(*p, probe);
            for n in preset.zero_flux_normals(*p) {
                let value = grad[0] * n[0] + grad[1] * n[1];
                if value.abs() > ZERO_FLUX_TOLERANCE {
                    return Err(VerificationError::NonzeroZeroFluxDerivative { point: *p, value });
                }
            }
        }
    }
    let u0: Vec<f64> = mesh.nodes().iter().map(|&p| exact.value(p, 0.0)).collect();
    let g = {
        let exact = exact.clone();
        let gamma = gamma.clone();
        SpaceTimeField::function(move |p, t| {
            let u = exact.value(p, t);
            c0 * gamma.slope(u) * exact.time_derivative(p, t) - exact.laplacian(p, t)
        })
    };
    let h = {
        let exact = exact.clone();
        let beta = beta.clone();
        let preset = *preset;
        SpaceTimeField::function(move |p, t| {
            let grad = exact.gradient(p, t);
            let n = preset.active_normal(p);
            beta.value(exact.value(p, t)) + grad[0] * n[0] + grad[1] * n[1]
        })
    };
    Ok(ProblemSpec::new(mesh, c0, gamma, beta, g, h, u0, final_time)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::GammaOneSide;
    use std::f64::consts::PI;

    fn preset(side: GammaOneSide) -> MeshPreset {
        MeshPreset::Interval { length: 1.0, n: 8, side }
    }

    #[test]
    fn constant_reproduces_steady_data() {
        let beta = ScalarGraph::physical(1.0, 1.0, ScalarGraph::identity()).unwrap();
        let spec = manufactured_source(
            Arc::new(CosineMode::constant(0.7)),
            &preset(GammaOneSide::Right),
            1.0,
            ScalarGraph::linear(2.0).unwrap(),
            beta.clone(),
            1.0,
        )
        .unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert!(spec.g.sample(&spec.mesh, t).iter().all(|&x| x == 0.0));
            let h = spec.h.sample(&spec.mesh, t);
            assert!((h[8] - beta.value(0.7)).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_in_time() {
        let alpha = 3.0;
        let beta = ScalarGraph::linear(2.0).unwrap();
        let spec = manufactured_source(
            Arc::new(CosineMode::affine(0.0, 1.0, 0.0, 0.0)),
            &preset(GammaOneSide::Both),
            1.5,
            ScalarGraph::linear(alpha).unwrap(),
            beta,
            1.0,
        )
        .unwrap();
        let t = 0.4;
        assert!(spec.g.sample(&spec.mesh, t).iter().all(|&x| (x - 1.5 * alpha).abs() < 1e-14));
        let h = spec.h.sample(&spec.mesh, t);
        assert!((h[0] - 2.0 * t).abs() < 1e-15 && (h[8] - 2.0 * t).abs() < 1e-15);
    }

    #[test]
    fn decaying_cosine_source() {
        let spec = manufactured_source(
            Arc::new(CosineMode::decaying(1.0, 1.0, PI, 0.0)),
            &preset(GammaOneSide::None),
            1.0,
            ScalarGraph::identity(),
            ScalarGraph::linear(1.0).unwrap(),
            1.0,
        )
        .unwrap();
        let t = 0.25;
        let g = spec.g.sample(&spec.mesh, t);
        for (p, gi) in spec.mesh.nodes().iter().zip(&g) {
            let oracle = (PI * PI - 1.0) * (-t).exp() * (PI * p[0]).cos();
            assert!((gi - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_flux_on_zero_flux_boundary() {
        let err = manufactured_source(
            Arc::new(CosineMode::affine(1.0, 0.0, PI / 2.0, 0.0)),
            &preset(GammaOneSide::Left),
            1.0,
            ScalarGraph::identity(),
            ScalarGraph::linear(1.0).unwrap(),
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, VerificationError::NonzeroZeroFluxDerivative { .. }));
    }

    #[test]
    fn derivatives_match_differences() {
        let m = CosineMode::decaying(1.3, 0.7, 1.1, 2.3);
        let (p, t, h) = ([0.3, 0.6], 0.4, 1e-5);
        let dt = (m.value(p, t + h) - m.value(p, t - h)) / (2.0 * h);
        assert!((dt - m.time_derivative(p, t)).abs() < 1e-8);
        let g = m.gradient(p, t);
        let dx = (m.value([p[0] + h, p[1]], t) - m.value([p[0] - h, p[1]], t)) / (2.0 * h);
        let dy = (m.value([p[0], p[1] + h], t) - m.value([p[0], p[1] - h], t)) / (2.0 * h);
        assert!((dx - g[0]).abs() < 1e-8 && (dy - g[1]).abs() < 1e-8);
        let h2 = 1e-4;
        let lap = (m.value([p[0] + h2, p[1]], t) + m.value([p[0] - h2, p[1]], t) + m.value([p[0], p[1] + h2], t)
            + m.value([p[0], p[1] - h2], t)
            - 4.0 * m.value(p, t))
            / (h2 * h2);
        assert!((lap - m.laplacian(p, t)).abs() < 1e-5);
    }
}
