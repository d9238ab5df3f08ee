//! Problem data: graphs, coefficients, source and boundary fields, and the
//! solver configuration.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::graphs::{GraphError, ScalarGraph};
use crate::mesh::{AssembledOperators, Mesh, MeshError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

pub type FieldFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;

/// A scalar field of space and time, sampled at mesh nodes.
#[derive(Clone)]
pub enum SpaceTimeField {
    Constant(f64),
    /// Time-independent nodal values.
    Nodal(Vec<f64>),
    /// `nodal[i] · profile(t)`.
    Modulated {
        nodal: Vec<f64>,
        profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    Function(FieldFn),
    Difference(Box<SpaceTimeField>, Box<SpaceTimeField>),
    Sum(Vec<SpaceTimeField>),
}

impl fmt::Debug for SpaceTimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceTimeField::Constant(c) => write!(f, "Constant({c})"),
            SpaceTimeField::Nodal(v) => write!(f, "Nodal({} values)", v.len()),
            SpaceTimeField::Modulated { nodal, .. } => write!(f, "Modulated({} values)", nodal.len()),
            SpaceTimeField::Function(_) => write!(f, "Function"),
            SpaceTimeField::Difference(a, b) => write!(f, "Difference({a:?}, {b:?})"),
            SpaceTimeField::Sum(parts) => write!(f, "Sum({parts:?})"),
        }
    }
}

impl SpaceTimeField {
    pub fn zero() -> Self {
        SpaceTimeField::Constant(0.0)
    }

    pub fn function(f: impl Fn([f64; 2], f64) -> f64 + Send + Sync + 'static) -> Self {
        SpaceTimeField::Function(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SpaceTimeField::Constant(c) => *c == 0.0,
            SpaceTimeField::Nodal(v) => v.iter().all(|&x| x == 0.0),
            SpaceTimeField::Modulated { nodal, .. } => nodal.iter().all(|&x| x == 0.0),
            SpaceTimeField::Function(_) => false,
            SpaceTimeField::Difference(a, b) => a.is_zero() && b.is_zero(),
            SpaceTimeField::Sum(parts) => parts.iter().all(|p| p.is_zero()),
        }
    }

    pub fn sample(&self, mesh: &Mesh, t: f64) -> Vec<f64> {
        match self {
            SpaceTimeField::Constant(c) => vec![*c; mesh.node_count()],
            SpaceTimeField::Nodal(v) => v.clone(),
            SpaceTimeField::Modulated { nodal, profile } => {
                let s = profile(t);
                nodal.iter().map(|x| x * s).collect()
            }
            SpaceTimeField::Function(f) => mesh.nodes().iter().map(|&p| f(p, t)).collect(),
            SpaceTimeField::Difference(a, b) => {
                let mut x = a.sample(mesh, t);
                for (p, q) in x.iter_mut().zip(b.sample(mesh, t)) {
                    *p -= q;
                }
                x
            }
            SpaceTimeField::Sum(parts) => {
                let mut x = vec![0.0; mesh.node_count()];
                for part in parts {
                    for (p, q) in x.iter_mut().zip(part.sample(mesh, t)) {
                        *p += q;
                    }
                }
                x
            }
        }
    }

    pub(crate) fn check_len(&self, n: usize, name: &str) -> Result<(), ProblemError> {
        let len = match self {
            SpaceTimeField::Nodal(v) | SpaceTimeField::Modulated { nodal: v, .. } => v.len(),
            SpaceTimeField::Difference(a, b) => {
                a.check_len(n, name)?;
                return b.check_len(n, name);
            }
            SpaceTimeField::Sum(parts) => {
                return parts.iter().try_for_each(|p| p.check_len(n, name));
            }
            _ => return Ok(()),
        };
        if len == n {
            Ok(())
        } else {
            Err(ProblemError::Invalid(format!("{name} has {len} nodal values, mesh has {n} nodes")))
        }
    }

    /// `self − other`, for data differences in dependence estimates.
    pub fn difference(&self, other: &SpaceTimeField) -> SpaceTimeField {
        match (self, other) {
            (SpaceTimeField::Constant(x), SpaceTimeField::Constant(y)) => SpaceTimeField::Constant(x - y),
            (SpaceTimeField::Nodal(x), SpaceTimeField::Nodal(y)) if x.len() == y.len() => {
                SpaceTimeField::Nodal(x.iter().zip(y).map(|(p, q)| p - q).collect())
            }
            _ => SpaceTimeField::Difference(Box::new(self.clone()), Box::new(other.clone())),
        }
    }
}

/// All continuous data of one problem together with its mesh.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub c0: f64,
    pub gamma: ScalarGraph,
    pub beta: ScalarGraph,
    pub g: SpaceTimeField,
    pub h: SpaceTimeField,
    pub u0: Vec<f64>,
    pub final_time: f64,
    pub mesh: Arc<Mesh>,
    pub ops: Arc<AssembledOperators>,
}

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mesh: Mesh,
        c0: f64,
        gamma: ScalarGraph,
        beta: ScalarGraph,
        g: SpaceTimeField,
        h: SpaceTimeField,
        u0: Vec<f64>,
        final_time: f64,
    ) -> Result<Self, ProblemError> {
        let ops = mesh.assemble()?;
        Self::with_operators(Arc::new(mesh), Arc::new(ops), c0, gamma, beta, g, h, u0, final_time)
    }

    /// As [`ProblemSpec::new`] with operators already assembled for `mesh`.
    #[allow(clippy::too_many_arguments)]
    pub fn with_operators(
        mesh: Arc<Mesh>,
        ops: Arc<AssembledOperators>,
        c0: f64,
        gamma: ScalarGraph,
        beta: ScalarGraph,
        g: SpaceTimeField,
        h: SpaceTimeField,
        u0: Vec<f64>,
        final_time: f64,
    ) -> Result<Self, ProblemError> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(ProblemError::Invalid(format!("c0 must be > 0, got {c0}")));
        }
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(ProblemError::Invalid(format!("final time must be > 0, got {final_time}")));
        }
        if gamma.constants().bi_lipschitz().is_none() {
            return Err(ProblemError::Invalid(format!("gamma = {gamma} is not declared bi-Lipschitz")));
        }
        gamma.audit_default()?;
        beta.audit_default()?;
        let n = mesh.node_count();
        if u0.len() != n {
            return Err(ProblemError::Invalid(format!("u0 has {} values, mesh has {n} nodes", u0.len())));
        }
        g.check_len(n, "g")?;
        h.check_len(n, "h")?;
        for (i, &u) in u0.iter().enumerate() {
            let v = c0 * gamma.value(u);
            let b = beta.potential(u)?;
            if !v.is_finite() || !b.is_finite() {
                return Err(ProblemError::Invalid(format!("initial data not admissible at node {i} (u0 = {u})")));
            }
        }
        Ok(ProblemSpec {
            c0,
            gamma,
            beta,
            g,
            h,
            u0,
            final_time,
            mesh,
            ops,
        })
    }

    pub fn node_count(&self) -> usize {
        self.mesh.node_count()
    }

    /// `v = c0·γ(u)` nodewise.
    pub fn v_of(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&x| self.c0 * self.gamma.value(x)).collect()
    }

    /// Effective bi-Lipschitz constants of `c0·γ`.
    pub fn effective_gamma_constants(&self) -> (f64, f64) {
        let (c, big_c) = self.gamma.constants().bi_lipschitz().expect("checked at construction");
        (self.c0 * c, self.c0 * big_c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Picard,
    Newton,
    /// Both solvers on every step; their answers must agree.
    Both,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Picard => "picard",
            SolverKind::Newton => "newton",
            SolverKind::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tau: f64,
    /// Strictly decreasing, nonnegative. Transient solves use the last entry.
    pub lambda_schedule: Vec<f64>,
    /// Truncation level; `0` disables it.
    pub epsilon: f64,
    /// Adds `λ∫uz` to the operator.
    pub mass_regularization: bool,
    /// Replaces `u0` by the solution of `(M + λK)U = M·u0` before marching.
    pub smooth_initial: bool,
    pub picard_damping: f64,
    pub picard_tol: f64,
    pub newton_tol: f64,
    pub max_iters: usize,
    pub solver_kind: SolverKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tau: 0.01,
            lambda_schedule: vec![1e-3],
            epsilon: 0.0,
            mass_regularization: true,
            smooth_initial: false,
            picard_damping: 0.5,
            picard_tol: 1e-12,
            newton_tol: 1e-12,
            max_iters: 2000,
            solver_kind: SolverKind::Newton,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ProblemError> {
        let bad = |m: String| Err(ProblemError::Invalid(m));
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad(format!("tau must be > 0, got {}", self.tau));
        }
        if self.lambda_schedule.is_empty() {
            return bad("lambda_schedule must not be empty".into());
        }
        if self.lambda_schedule.iter().any(|&l| !(l.is_finite() && l >= 0.0)) {
            return bad(format!("lambda values must be finite and >= 0: {:?}", self.lambda_schedule));
        }
        if self.lambda_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return bad(format!("lambda_schedule must be strictly decreasing: {:?}", self.lambda_schedule));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if !(self.picard_damping > 0.0 && self.picard_damping <= 1.0) {
            return bad(format!("picard_damping must lie in (0, 1], got {}", self.picard_damping));
        }
        if !(self.picard_tol > 0.0 && self.newton_tol > 0.0) {
            return bad("tolerances must be > 0".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be >= 1".into());
        }
        Ok(())
    }

    /// The working (smallest) regularization parameter.
    pub fn final_lambda(&self) -> f64 {
        *self.lambda_schedule.last().expect("validated")
    }

    /// Number of steps `T/τ`; `T` must be a whole multiple of `τ`.
    pub fn step_count(&self, final_time: f64) -> Result<usize, ProblemError> {
        let n = (final_time / self.tau).round();
        if n < 1.0 || (n * self.tau - final_time).abs() > 1e-9 * final_time {
            return Err(ProblemError::Invalid(format!(
                "final time {final_time} is not a whole multiple of tau = {}",
                self.tau
            )));
        }
        Ok(n as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::GammaOneSide;

    fn mesh() -> Mesh {
        Mesh::interval(1.0, 4, GammaOneSide::Right).unwrap()
    }

    #[test]
    fn rejects_non_bilipschitz_gamma() {
        let r = ProblemSpec::new(
            mesh(),
            1.0,
            ScalarGraph::power(3.0).unwrap(),
            ScalarGraph::identity(),
            SpaceTimeField::zero(),
            SpaceTimeField::zero(),
            vec![0.0; 5],
            1.0,
        );
        assert!(matches!(r, Err(ProblemError::Invalid(_))));
    }

    #[test]
    fn rejects_wrong_lengths_and_times() {
        let mk = |u0: Vec<f64>, t: f64, g: SpaceTimeField| {
            ProblemSpec::new(mesh(), 1.0, ScalarGraph::identity(), ScalarGraph::sign(), g, SpaceTimeField::zero(), u0, t)
        };
        assert!(mk(vec![0.0; 4], 1.0, SpaceTimeField::zero()).is_err());
        assert!(mk(vec![0.0; 5], 0.0, SpaceTimeField::zero()).is_err());
        assert!(mk(vec![0.0; 5], 1.0, SpaceTimeField::Nodal(vec![1.0; 3])).is_err());
        assert!(mk(vec![0.0; 5], 1.0, SpaceTimeField::Nodal(vec![1.0; 5])).is_ok());
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        c.validate().unwrap();
        c.lambda_schedule = vec![0.5, 0.25, 0.125];
        c.validate().unwrap();
        c.lambda_schedule = vec![0.125, 0.25, 0.5];
        assert!(c.validate().is_err());
        c.lambda_schedule = vec![0.5, 0.0];
        c.validate().unwrap();
        c.picard_damping = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn step_count_requires_whole_multiple() {
        let c = SolverConfig {
            tau: 0.1,
            ..SolverConfig::default()
        };
        assert_eq!(c.step_count(1.0).unwrap(), 10);
        assert!(c.step_count(1.05).is_err());
    }

    #[test]
    fn field_sampling_and_difference() {
        let m = mesh();
        let f = SpaceTimeField::function(|p, t| p[0] + t);
        assert_eq!(f.sample(&m, 1.0), vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        let d = f.difference(&SpaceTimeField::Constant(1.0));
        assert_eq!(d.sample(&m, 1.0), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let modulated = SpaceTimeField::Modulated {
            nodal: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            profile: Arc::new(|t| 2.0 * t),
        };
        assert_eq!(modulated.sample(&m, 0.5), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }
}
