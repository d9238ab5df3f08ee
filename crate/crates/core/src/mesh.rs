//! P1 finite elements on intervals and structured rectangles.

use std::io::{self, Write};
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::linalg::{BandedCholesky, CsrMatrix, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid mesh argument: {0}")]
    InvalidArgument(String),
    #[error("element {0} has zero measure")]
    DegenerateElement(usize),
    #[error("the active boundary has no nodes")]
    EmptyBoundary,
    #[error("field has {got} entries, mesh has {expected} nodes")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryLabel {
    Interior,
    Gamma0,
    Gamma1,
}

impl BoundaryLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryLabel::Interior => "interior",
            BoundaryLabel::Gamma0 => "gamma0",
            BoundaryLabel::Gamma1 => "gamma1",
        }
    }
}

/// Which interval endpoints carry the Robin condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaOneSide {
    Left,
    Right,
    Both,
    /// No active boundary: zero flux at both ends.
    None,
}

impl GammaOneSide {
    pub fn as_str(self) -> &'static str {
        match self {
            GammaOneSide::Left => "left",
            GammaOneSide::Right => "right",
            GammaOneSide::Both => "both",
            GammaOneSide::None => "none",
        }
    }
}

/// A mesh family that can be rebuilt at any resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshPreset {
    Interval { length: f64, n: usize, side: GammaOneSide },
    Rect { lx: f64, ly: f64, nx: usize, ny: usize, lateral: bool },
}

impl MeshPreset {
    pub fn build(&self) -> Result<Mesh, MeshError> {
        match *self {
            MeshPreset::Interval { length, n, side } => Mesh::interval(length, n, side),
            MeshPreset::Rect { lx, ly, nx, ny, lateral } => Mesh::rectangle(lx, ly, nx, ny, lateral),
        }
    }

    /// The same family with `n` subdivisions per side.
    pub fn with_resolution(&self, n: usize) -> Self {
        match *self {
            MeshPreset::Interval { length, side, .. } => MeshPreset::Interval { length, n, side },
            MeshPreset::Rect { lx, ly, lateral, .. } => MeshPreset::Rect { lx, ly, nx: n, ny: n, lateral },
        }
    }

    /// `(x_min, x_max, y_min, y_max)`.
    pub fn bounding_box(&self) -> [f64; 4] {
        match *self {
            MeshPreset::Interval { length, .. } => [0.0, length, 0.0, 0.0],
            MeshPreset::Rect { lx, ly, .. } => [0.0, lx, 0.0, ly],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MeshPreset::Interval { .. } => 1,
            MeshPreset::Rect { .. } => 2,
        }
    }

    /// Outward unit normal used for the active-boundary flux at `p`: the
    /// nearer endpoint in 1-D, the nearer lateral side in 2-D.
    pub fn active_normal(&self, p: [f64; 2]) -> [f64; 2] {
        let [x0, x1, _, _] = self.bounding_box();
        if (p[0] - x0).abs() <= (x1 - p[0]).abs() {
            [-1.0, 0.0]
        } else {
            [1.0, 0.0]
        }
    }

    /// Outward normals of the zero-flux boundary pieces through `p`.
    pub fn zero_flux_normals(&self, p: [f64; 2]) -> Vec<[f64; 2]> {
        let [x0, x1, y0, y1] = self.bounding_box();
        let tol = 1e-12 * (x1 - x0).max(y1 - y0);
        let mut out = Vec::new();
        match *self {
            MeshPreset::Interval { side, .. } => {
                let left_active = matches!(side, GammaOneSide::Left | GammaOneSide::Both);
                let right_active = matches!(side, GammaOneSide::Right | GammaOneSide::Both);
                if (p[0] - x0).abs() <= tol && !left_active {
                    out.push([-1.0, 0.0]);
                }
                if (p[0] - x1).abs() <= tol && !right_active {
                    out.push([1.0, 0.0]);
                }
            }
            MeshPreset::Rect { lateral, .. } => {
                if (p[1] - y0).abs() <= tol {
                    out.push([0.0, -1.0]);
                }
                if (p[1] - y1).abs() <= tol {
                    out.push([0.0, 1.0]);
                }
                if !lateral {
                    if (p[0] - x0).abs() <= tol {
                        out.push([-1.0, 0.0]);
                    }
                    if (p[0] - x1).abs() <= tol {
                        out.push([1.0, 0.0]);
                    }
                }
            }
        }
        out
    }
}

impl std::fmt::Display for MeshPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            MeshPreset::Interval { length, n, side } => write!(f, "interval({length}, {n}, gamma1={})", side.as_str()),
            MeshPreset::Rect { lx, ly, nx, ny, lateral } => {
                write!(f, "rect({lx}, {ly}, {nx}, {ny}, {})", if lateral { "lateral" } else { "neumann" })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cells {
    Segments(Vec<[usize; 2]>),
    Triangles(Vec<[usize; 3]>),
}

/// A piece of the active boundary: an endpoint in 1-D, an edge in 2-D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Facet {
    Point(usize),
    Edge(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    nodes: Vec<[f64; 2]>,
    cells: Cells,
    labels: Vec<BoundaryLabel>,
    gamma1_facets: Vec<Facet>,
    element_sizes: Vec<f64>,
}

impl Mesh {
    /// Uniform mesh of `[0, length]` with `n_elems` elements.
    pub fn interval(length: f64, n_elems: usize, side: GammaOneSide) -> Result<Self, MeshError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(MeshError::InvalidArgument(format!("interval length must be > 0, got {length}")));
        }
        if n_elems == 0 {
            return Err(MeshError::InvalidArgument("interval needs at least one element".into()));
        }
        let h = length / n_elems as f64;
        let nodes: Vec<[f64; 2]> = (0..=n_elems)
            .map(|i| [if i == n_elems { length } else { i as f64 * h }, 0.0])
            .collect();
        let segments: Vec<[usize; 2]> = (0..n_elems).map(|e| [e, e + 1]).collect();
        let mut labels = vec![BoundaryLabel::Interior; n_elems + 1];
        let (left, right) = match side {
            GammaOneSide::Left => (BoundaryLabel::Gamma1, BoundaryLabel::Gamma0),
            GammaOneSide::Right => (BoundaryLabel::Gamma0, BoundaryLabel::Gamma1),
            GammaOneSide::Both => (BoundaryLabel::Gamma1, BoundaryLabel::Gamma1),
            GammaOneSide::None => (BoundaryLabel::Gamma0, BoundaryLabel::Gamma0),
        };
        labels[0] = left;
        labels[n_elems] = right;
        let gamma1_facets = [0, n_elems]
            .into_iter()
            .filter(|&i| labels[i] == BoundaryLabel::Gamma1)
            .map(Facet::Point)
            .collect();
        Ok(Mesh {
            dim: 1,
            nodes,
            cells: Cells::Segments(segments),
            labels,
            gamma1_facets,
            element_sizes: vec![h; n_elems],
        })
    }

    /// Structured triangulation of `[0, lx] × [0, ly]`.
    ///
    /// Nodes are numbered row by row (`id = j·(nx+1) + i`). With
    /// `lateral_gamma1`, the edges `x = 0` and `x = lx` (corners included) are
    /// active and the rest of the boundary is zero-flux; otherwise the whole
    /// boundary is zero-flux.
    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize, lateral_gamma1: bool) -> Result<Self, MeshError> {
        if !(lx.is_finite() && lx > 0.0 && ly.is_finite() && ly > 0.0) {
            return Err(MeshError::InvalidArgument(format!("rectangle sides must be > 0, got {lx} x {ly}")));
        }
        if nx == 0 || ny == 0 {
            return Err(MeshError::InvalidArgument("rectangle needs at least one subdivision per side".into()));
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let coord = |k: usize, n: usize, l: f64| if k == n { l } else { k as f64 * l / n as f64 };
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut labels = Vec::with_capacity(nodes.capacity());
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([coord(i, nx, lx), coord(j, ny, ly)]);
                let lateral = i == 0 || i == nx;
                let cap = j == 0 || j == ny;
                labels.push(if lateral && lateral_gamma1 {
                    BoundaryLabel::Gamma1
                } else if lateral || cap {
                    BoundaryLabel::Gamma0
                } else {
                    BoundaryLabel::Interior
                });
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let mut gamma1_facets = Vec::new();
        if lateral_gamma1 {
            for i in [0, nx] {
                for j in 0..ny {
                    gamma1_facets.push(Facet::Edge(id(i, j), id(i, j + 1)));
                }
            }
        }
        let diag = (lx / nx as f64).hypot(ly / ny as f64);
        Ok(Mesh {
            dim: 2,
            nodes,
            cells: Cells::Triangles(triangles),
            labels,
            gamma1_facets,
            element_sizes: vec![diag; 2 * nx * ny],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn cells(&self) -> &Cells {
        &self.cells
    }

    pub fn cell_count(&self) -> usize {
        match &self.cells {
            Cells::Segments(s) => s.len(),
            Cells::Triangles(t) => t.len(),
        }
    }

    pub fn labels(&self) -> &[BoundaryLabel] {
        &self.labels
    }

    pub fn gamma1_facets(&self) -> &[Facet] {
        &self.gamma1_facets
    }

    pub fn gamma1_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.labels[i] == BoundaryLabel::Gamma1).collect()
    }

    pub fn element_sizes(&self) -> &[f64] {
        &self.element_sizes
    }

    pub fn h_max(&self) -> f64 {
        self.element_sizes.iter().copied().fold(0.0, f64::max)
    }

    /// The same mesh shifted by `offset`.
    pub fn translated(&self, offset: [f64; 2]) -> Self {
        let mut m = self.clone();
        for p in &mut m.nodes {
            p[0] += offset[0];
            if self.dim == 2 {
                p[1] += offset[1];
            }
        }
        m
    }

    /// Two CSV tables: `node_id,x,y,label` then `element_id,n0,n1[,n2]`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "node_id,x,y,label")?;
        for (i, (p, l)) in self.nodes.iter().zip(&self.labels).enumerate() {
            writeln!(w, "{i},{:.16e},{:.16e},{}", p[0], p[1], l.as_str())?;
        }
        writeln!(w)?;
        match &self.cells {
            Cells::Segments(s) => {
                writeln!(w, "element_id,n0,n1")?;
                for (e, c) in s.iter().enumerate() {
                    writeln!(w, "{e},{},{}", c[0], c[1])?;
                }
            }
            Cells::Triangles(t) => {
                writeln!(w, "element_id,n0,n1,n2")?;
                for (e, c) in t.iter().enumerate() {
                    writeln!(w, "{e},{},{},{}", c[0], c[1], c[2])?;
                }
            }
        }
        Ok(())
    }

    /// Lumped mass, stiffness and lumped boundary mass.
    pub fn assemble(&self) -> Result<AssembledOperators, MeshError> {
        let n = self.nodes.len();
        let mut mass = vec![0.0; n];
        let mut triplets = Vec::new();
        match &self.cells {
            Cells::Segments(segs) => {
                for (e, &[a, b]) in segs.iter().enumerate() {
                    let h = self.nodes[b][0] - self.nodes[a][0];
                    if !(h.abs() > 0.0) {
                        return Err(MeshError::DegenerateElement(e));
                    }
                    let h = h.abs();
                    mass[a] += 0.5 * h;
                    mass[b] += 0.5 * h;
                    let k = 1.0 / h;
                    triplets.extend([(a, a, k), (a, b, -k), (b, a, -k), (b, b, k)]);
                }
            }
            Cells::Triangles(tris) => {
                for (e, tri) in tris.iter().enumerate() {
                    let p = tri.map(|i| self.nodes[i]);
                    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
                    let area = 0.5 * det.abs();
                    if !(area > 0.0) {
                        return Err(MeshError::DegenerateElement(e));
                    }
                    // gradients of barycentric coordinates times 2·area
                    let g = [
                        [p[1][1] - p[2][1], p[2][0] - p[1][0]],
                        [p[2][1] - p[0][1], p[0][0] - p[2][0]],
                        [p[0][1] - p[1][1], p[1][0] - p[0][0]],
                    ];
                    for a in 0..3 {
                        mass[tri[a]] += area / 3.0;
                        for b in 0..3 {
                            let k = (g[a][0] * g[b][0] + g[a][1] * g[b][1]) / (4.0 * area);
                            triplets.push((tri[a], tri[b], k));
                        }
                    }
                }
            }
        }
        let mut boundary_mass = vec![0.0; n];
        for f in &self.gamma1_facets {
            match *f {
                Facet::Point(i) => boundary_mass[i] += 1.0,
                Facet::Edge(a, b) => {
                    let (pa, pb) = (self.nodes[a], self.nodes[b]);
                    let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
                    boundary_mass[a] += 0.5 * len;
                    boundary_mass[b] += 0.5 * len;
                }
            }
        }
        Ok(AssembledOperators {
            mass,
            stiffness: CsrMatrix::from_triplets(n, &triplets),
            boundary_mass,
            gamma1_nodes: self.gamma1_nodes(),
            mk_factor: OnceLock::new(),
            trace: OnceLock::new(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
    pub l1: f64,
    pub boundary_l2: f64,
}

/// Discrete operators of a mesh. `M + K` is factored lazily and the trace
/// constant is computed on first request.
#[derive(Debug)]
pub struct AssembledOperators {
    pub mass: Vec<f64>,
    pub stiffness: CsrMatrix,
    pub boundary_mass: Vec<f64>,
    pub gamma1_nodes: Vec<usize>,
    mk_factor: OnceLock<Result<BandedCholesky, LinalgError>>,
    trace: OnceLock<Result<f64, MeshError>>,
}

impl Clone for AssembledOperators {
    fn clone(&self) -> Self {
        AssembledOperators {
            mass: self.mass.clone(),
            stiffness: self.stiffness.clone(),
            boundary_mass: self.boundary_mass.clone(),
            gamma1_nodes: self.gamma1_nodes.clone(),
            mk_factor: OnceLock::new(),
            trace: self.trace.clone(),
        }
    }
}

impl AssembledOperators {
    pub fn node_count(&self) -> usize {
        self.mass.len()
    }

    /// `|Ω|`.
    pub fn volume(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `|Γ₁|`.
    pub fn boundary_measure(&self) -> f64 {
        self.boundary_mass.iter().sum()
    }

    fn check(&self, field: &[f64]) -> Result<(), MeshError> {
        if field.len() == self.mass.len() {
            Ok(())
        } else {
            Err(MeshError::DimensionMismatch {
                expected: self.mass.len(),
                got: field.len(),
            })
        }
    }

    pub fn norms(&self, field: &[f64]) -> Result<Norms, MeshError> {
        self.check(field)?;
        let l2sq: f64 = self.mass.iter().zip(field).map(|(m, f)| m * f * f).sum();
        let semi = self.stiffness.quadratic_form(field).max(0.0);
        Ok(Norms {
            l2: l2sq.sqrt(),
            h1: (l2sq + semi).sqrt(),
            l1: self.mass.iter().zip(field).map(|(m, f)| m * f.abs()).sum(),
            boundary_l2: self.boundary_mass.iter().zip(field).map(|(m, f)| m * f * f).sum::<f64>().sqrt(),
        })
    }

    pub fn l2_norm(&self, field: &[f64]) -> f64 {
        self.mass.iter().zip(field).map(|(m, f)| m * f * f).sum::<f64>().sqrt()
    }

    pub fn boundary_l2_norm(&self, field: &[f64]) -> f64 {
        self.boundary_mass.iter().zip(field).map(|(m, f)| m * f * f).sum::<f64>().sqrt()
    }

    /// `‖∇f‖²`.
    pub fn gradient_norm_sq(&self, field: &[f64]) -> f64 {
        self.stiffness.quadratic_form(field).max(0.0)
    }

    pub fn mass_plus_stiffness(&self) -> CsrMatrix {
        self.stiffness.scaled_plus_diagonal(1.0, &self.mass)
    }

    fn mk(&self) -> Result<&BandedCholesky, MeshError> {
        self.mk_factor
            .get_or_init(|| BandedCholesky::factor(&self.mass_plus_stiffness()))
            .as_ref()
            .map_err(|e| MeshError::Linalg(e.clone()))
    }

    /// `‖f‖` in the dual of the discrete `H¹`, i.e. `sqrt(fᵀ(M+K)⁻¹f)` for a
    /// load vector `f`.
    pub fn dual_norm(&self, load: &[f64]) -> Result<f64, MeshError> {
        self.check(load)?;
        let y = self.mk()?.solve(load)?;
        Ok(crate::linalg::dot(&y, load).max(0.0).sqrt())
    }

    /// The smallest `C` with `zᵀMΓz ≤ C²·zᵀ(M+K)z` over the finite-element space.
    ///
    /// Interior nodes are eliminated by a Schur complement, then the boundary
    /// pencil is solved densely.
    pub fn trace_constant(&self) -> Result<f64, MeshError> {
        self.trace.get_or_init(|| self.compute_trace_constant()).clone()
    }

    fn compute_trace_constant(&self) -> Result<f64, MeshError> {
        let n = self.node_count();
        let b: Vec<usize> = (0..n).filter(|&i| self.boundary_mass[i] > 0.0).collect();
        if b.is_empty() {
            return Err(MeshError::EmptyBoundary);
        }
        let mut is_b = vec![false; n];
        for &i in &b {
            is_b[i] = true;
        }
        let interior: Vec<usize> = (0..n).filter(|&i| !is_b[i]).collect();
        let a = self.mass_plus_stiffness();
        let nb = b.len();
        let mut s = DMatrix::from_fn(nb, nb, |p, q| a.get(b[p], b[q]));
        if !interior.is_empty() {
            let aii = BandedCholesky::factor(&a.principal_submatrix(&interior))?;
            let mut pos = vec![usize::MAX; n];
            for (k, &i) in interior.iter().enumerate() {
                pos[i] = k;
            }
            // columns of A_IB
            let mut cols = vec![vec![0.0; interior.len()]; nb];
            for (q, &bq) in b.iter().enumerate() {
                for (j, v) in a.row(bq) {
                    if pos[j] != usize::MAX {
                        cols[q][pos[j]] = v;
                    }
                }
            }
            for q in 0..nb {
                let x = aii.solve(&cols[q])?;
                for p in 0..nb {
                    s[(p, q)] -= crate::linalg::dot(&cols[p], &x);
                }
            }
        }
        let dinv: Vec<f64> = b.iter().map(|&i| 1.0 / self.boundary_mass[i].sqrt()).collect();
        let scaled = DMatrix::from_fn(nb, nb, |p, q| 0.5 * (s[(p, q)] + s[(q, p)]) * dinv[p] * dinv[q]);
        let eig = SymmetricEigen::new(scaled);
        let mu = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if !(mu > 0.0) {
            return Err(MeshError::Linalg(LinalgError::NotPositiveDefinite { row: 0, pivot: mu }));
        }
        Ok(1.0 / mu.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Cholesky;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Largest eigenvalue of `L⁻¹ MΓ L⁻ᵀ` with `M + K = LLᵀ`, all dense.
    fn dense_trace_oracle(ops: &AssembledOperators) -> f64 {
        let n = ops.node_count();
        let a = DMatrix::from_fn(n, n, |i, j| ops.mass_plus_stiffness().get(i, j));
        let l = Cholesky::new(a).unwrap().l();
        let linv = l.try_inverse().unwrap();
        let mg = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(ops.boundary_mass.clone()));
        let p = &linv * mg * linv.transpose();
        let p = 0.5 * (&p + p.transpose());
        SymmetricEigen::new(p).eigenvalues.max().sqrt()
    }

    #[test]
    fn interval_labels() {
        let m = Mesh::interval(1.0, 2, GammaOneSide::Right).unwrap();
        assert_eq!(m.nodes().iter().map(|p| p[0]).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert_eq!(m.labels()[2], BoundaryLabel::Gamma1);
        assert_eq!(m.labels()[0], BoundaryLabel::Gamma0);
        let m = Mesh::interval(1.0, 1, GammaOneSide::Both).unwrap();
        assert_eq!(m.gamma1_nodes(), vec![0, 1]);
        let m = Mesh::interval(2.0, 4, GammaOneSide::Left).unwrap();
        assert!(m.element_sizes().iter().all(|&h| h == 0.5));
        assert!(Mesh::interval(1.0, 0, GammaOneSide::Left).is_err());
    }

    #[test]
    fn rectangle_labels() {
        let m = Mesh::rectangle(1.0, 1.0, 2, 2, true).unwrap();
        let boundary = m.labels().iter().filter(|&&l| l != BoundaryLabel::Interior).count();
        assert_eq!(boundary, 8);
        assert_eq!(m.gamma1_nodes().len(), 6);
        for c in [0, 2, 6, 8] {
            assert_eq!(m.labels()[c], BoundaryLabel::Gamma1);
        }
        let m = Mesh::rectangle(1.0, 1.0, 1, 1, true).unwrap();
        assert_eq!((m.node_count(), m.cell_count()), (4, 2));
        let m = Mesh::rectangle(1.0, 1.0, 3, 2, false).unwrap();
        assert!(m.gamma1_nodes().is_empty());
        assert!(m.labels().iter().all(|&l| l != BoundaryLabel::Gamma1));
        assert!(Mesh::rectangle(1.0, 1.0, 0, 2, true).is_err());
    }

    #[test]
    fn assembly_1d_by_hand() {
        let ops = Mesh::interval(1.0, 2, GammaOneSide::Right).unwrap().assemble().unwrap();
        assert_eq!(ops.mass, vec![0.25, 0.5, 0.25]);
        let k = ops.stiffness.to_dense();
        assert_eq!(k, vec![vec![2.0, -2.0, 0.0], vec![-2.0, 4.0, -2.0], vec![0.0, -2.0, 2.0]]);
        assert_eq!(ops.boundary_mass, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn assembly_invariants_2d() {
        let ops = Mesh::rectangle(2.0, 0.5, 5, 3, true).unwrap().assemble().unwrap();
        assert!((ops.volume() - 1.0).abs() < 1e-12);
        assert!((ops.boundary_measure() - 1.0).abs() < 1e-12);
        assert!(ops.mass.iter().all(|&m| m > 0.0));
        assert!(ops.stiffness.is_symmetric(1e-14));
        let kc = ops.stiffness.mul_vec(&vec![3.0; ops.node_count()]);
        assert!(kc.iter().all(|v| v.abs() < 1e-12));
        for i in 0..ops.node_count() {
            for (j, v) in ops.stiffness.row(i) {
                if i != j {
                    assert!(v <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn translation_leaves_operators_unchanged() {
        let m = Mesh::rectangle(1.0, 1.0, 4, 3, true).unwrap();
        let a = m.assemble().unwrap();
        let b = m.translated([0.25, -0.75]).assemble().unwrap();
        for (x, y) in a.mass.iter().zip(&b.mass) {
            assert!((x - y).abs() < 1e-14);
        }
        for (x, y) in a.boundary_mass.iter().zip(&b.boundary_mass) {
            assert!((x - y).abs() < 1e-14);
        }
        for i in 0..a.node_count() {
            for (j, v) in a.stiffness.row(i) {
                assert!((v - b.stiffness.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn norm_examples() {
        let ops = Mesh::interval(1.0, 2, GammaOneSide::Right).unwrap().assemble().unwrap();
        let n = ops.norms(&[1.0, 1.0, 1.0]).unwrap();
        assert!((n.l2 - 1.0).abs() < 1e-15 && (n.h1 - 1.0).abs() < 1e-15 && (n.l1 - 1.0).abs() < 1e-15);
        let n = ops.norms(&[0.0, 0.5, 1.0]).unwrap();
        assert!((n.l2 * n.l2 - 0.375).abs() < 1e-15);
        let n = ops.norms(&[0.0; 3]).unwrap();
        assert_eq!((n.l2, n.h1, n.l1, n.boundary_l2), (0.0, 0.0, 0.0, 0.0));
        assert!(matches!(ops.norms(&[1.0]), Err(MeshError::DimensionMismatch { .. })));
    }

    #[test]
    fn trace_constant_matches_dense_and_continuum() {
        let continuum = (1.0 / 1.0_f64.tanh()).sqrt();
        let mut prev: Option<f64> = None;
        for n in [16, 32, 64] {
            let ops = Mesh::interval(1.0, n, GammaOneSide::Right).unwrap().assemble().unwrap();
            let c = ops.trace_constant().unwrap();
            assert!((c - dense_trace_oracle(&ops)).abs() < 1e-10);
            assert!((c / continuum - 1.0).abs() < 0.02, "n={n}: {c}");
            if let Some(p) = prev {
                assert!(((c - p) / p).abs() < 0.01);
            }
            prev = Some(c);
        }
        let ops = Mesh::rectangle(1.0, 1.0, 4, 4, true).unwrap().assemble().unwrap();
        assert!((ops.trace_constant().unwrap() - dense_trace_oracle(&ops)).abs() < 1e-10);
        let ops = Mesh::rectangle(1.0, 1.0, 4, 4, false).unwrap().assemble().unwrap();
        assert_eq!(ops.trace_constant(), Err(MeshError::EmptyBoundary));
    }

    #[test]
    fn trace_inequality_on_random_fields() {
        let ops = Mesh::rectangle(1.0, 0.5, 6, 4, true).unwrap().assemble().unwrap();
        let c = ops.trace_constant().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let z: Vec<f64> = (0..ops.node_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = ops.norms(&z).unwrap();
            assert!(n.boundary_l2 <= c * n.h1 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn dual_norm_of_mass_times_field_is_bounded_by_l2() {
        let ops = Mesh::interval(1.0, 8, GammaOneSide::Left).unwrap().assemble().unwrap();
        let f: Vec<f64> = (0..9).map(|i| (i as f64).cos()).collect();
        let load: Vec<f64> = f.iter().zip(&ops.mass).map(|(a, m)| a * m).collect();
        assert!(ops.dual_norm(&load).unwrap() <= ops.l2_norm(&f) + 1e-14);
    }

    #[test]
    fn preset_normals() {
        let p = MeshPreset::Rect {
            lx: 2.0,
            ly: 1.0,
            nx: 4,
            ny: 2,
            lateral: true,
        };
        assert_eq!(p.active_normal([2.0, 0.0]), [1.0, 0.0]);
        assert_eq!(p.zero_flux_normals([2.0, 0.0]), vec![[0.0, -1.0]]);
        assert!(p.zero_flux_normals([1.0, 0.5]).is_empty());
        let q = MeshPreset::Interval {
            length: 1.0,
            n: 4,
            side: GammaOneSide::Right,
        };
        assert_eq!(q.zero_flux_normals([0.0, 0.0]), vec![[-1.0, 0.0]]);
        assert_eq!(q.with_resolution(8).build().unwrap().node_count(), 9);
        assert_eq!(p.to_string(), "rect(2, 1, 4, 2, lateral)");
    }

    #[test]
    fn csv_dump_lists_nodes_and_elements() {
        let m = Mesh::interval(1.0, 2, GammaOneSide::Right).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("node_id,x,y,label\n0,"));
        assert!(s.contains("2,1.0000000000000000e0,0.0000000000000000e0,gamma1"));
        assert!(s.contains("element_id,n0,n1\n0,0,1\n1,1,2\n"));
    }
}
