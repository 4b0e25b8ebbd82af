//! Assembly of the CFO saddle-point system and the Ritz-Galerkin system.
//!
//! The CFO unknowns are the continuous P_k field `u`, the edge fluxes `q`
//! (P_{k-1} per edge, measured along the fixed edge normal `n_e`) and one
//! multiplier per triangle. The symmetric system is
//!
//! ```text
//! [ A  Bᵀ ] [x]   [F]
//! [ B  0  ] [λ] = [G]
//! ```
//!
//! with `A` the form
//! `(α∇u,∇v) + Σ_D Σ_{e⊂∂D} h_D^β ⟨q + α∇u·n_e, p + α∇v·n_e⟩_e`,
//! `B` the conservation rows `Σ_e σ ∫_e q ds` and `G_D = ∫_D f`.
//!
//! Dirichlet nodes of `u` and prescribed fluxes of `q` are eliminated; their
//! couplings move to the right-hand side.

use crate::dofs::{build_dof_layout, DofLayout, SpaceConfig};
use crate::error::{CfoError, Result};
use crate::exec::Exec;
use crate::geom::Point;
use crate::mesh::TriMesh;
use crate::problems::{BoundaryKind, Cell, DiffusionProblem};
use crate::quadrature::TriangleRule;
use crate::solver::{solve_spd, solve_symmetric_indefinite, SolveDiagnostics};
use crate::sparse::SparseMatrix;

/// Which length plays the role of `h_D` in the weight `h_D^β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElementSize {
    /// Longest edge of the triangle.
    Diameter,
    /// Side of the subsquare the triangle was cut from (`√(2|D|)`).
    #[default]
    Spacing,
}

impl ElementSize {
    pub fn of(self, mesh: &TriMesh, t: usize) -> f64 {
        match self {
            ElementSize::Diameter => mesh.tri_diameters[t],
            ElementSize::Spacing => (2.0 * mesh.tri_areas[t]).sqrt(),
        }
    }
}

/// Options of the CFO functional `J_{2,β}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyConfig {
    pub beta: f64,
    /// Exponent of the flux mismatch norm; only 2 is supported.
    pub r: u32,
    pub element_size: ElementSize,
    pub exec: Exec,
}

impl AssemblyConfig {
    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(CfoError::InvalidConfig(format!("beta must be finite, got {beta}")));
        }
        Ok(AssemblyConfig { beta, r: 2, element_size: ElementSize::default(), exec: Exec::default() })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.r != 2 {
            return Err(CfoError::InvalidConfig(format!("only r = 2 is supported, got {}", self.r)));
        }
        if !self.beta.is_finite() {
            return Err(CfoError::InvalidConfig(format!("beta must be finite, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Affine map from the reference triangle.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AffineMap {
    a: Point,
    j: [[f64; 2]; 2],
    pub(crate) det: f64,
}

impl AffineMap {
    pub(crate) fn new(mesh: &TriMesh, t: usize) -> Self {
        let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
        let j = [[b.x - a.x, c.x - a.x], [b.y - a.y, c.y - a.y]];
        AffineMap { a, j, det: j[0][0] * j[1][1] - j[0][1] * j[1][0] }
    }

    pub(crate) fn point(&self, xi: f64, eta: f64) -> Point {
        Point::new(
            self.a.x + self.j[0][0] * xi + self.j[0][1] * eta,
            self.a.y + self.j[1][0] * xi + self.j[1][1] * eta,
        )
    }

    pub(crate) fn reference(&self, p: Point) -> [f64; 2] {
        let d = p - self.a;
        [
            (self.j[1][1] * d.x - self.j[0][1] * d.y) / self.det,
            (-self.j[1][0] * d.x + self.j[0][0] * d.y) / self.det,
        ]
    }

    pub(crate) fn grad(&self, g: [f64; 2]) -> Point {
        Point::new(
            (self.j[1][1] * g[0] - self.j[1][0] * g[1]) / self.det,
            (-self.j[0][1] * g[0] + self.j[0][0] * g[1]) / self.det,
        )
    }
}

/// Reference basis values tabulated at the triangle quadrature points.
struct Tabulation {
    rule: TriangleRule,
    /// Finer rule for `∫_D f`, shared with the conservation audit.
    source_rule: TriangleRule,
    phi: Vec<Vec<f64>>,
    dphi: Vec<Vec<[f64; 2]>>,
}

impl Tabulation {
    fn new(layout: &DofLayout, degree: usize) -> Self {
        let rule = TriangleRule::with_degree(degree);
        let phi = rule.points.iter().map(|p| layout.tri_basis.eval(p[0], p[1])).collect();
        let dphi = rule.points.iter().map(|p| layout.tri_basis.grad(p[0], p[1])).collect();
        Tabulation { rule, phi, dphi, source_rule: source_rule(layout.k) }
    }
}

/// Rule used for every `∫_D f dx`, two degrees above the assembly rule.
pub(crate) fn source_rule(k: usize) -> TriangleRule {
    TriangleRule::with_degree(2 * k + 4)
}

/// `∫_D f dx` on triangle `t`.
pub(crate) fn source_integral(problem: &dyn DiffusionProblem, mesh: &TriMesh, t: usize, rule: &TriangleRule) -> f64 {
    let map = AffineMap::new(mesh, t);
    let c = cell(mesh, t);
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(&[xi, eta], &w)| w * map.det.abs() * problem.source(map.point(xi, eta), c))
        .sum()
}

pub(crate) fn cell(mesh: &TriMesh, t: usize) -> Cell {
    Cell { index: t, centroid: mesh.tri_centroids[t] }
}

fn check_spd(problem: &dyn DiffusionProblem, x: Point, c: Cell) -> Result<crate::geom::Tensor2> {
    let a = problem.alpha(x, c);
    if !a.is_spd() {
        return Err(CfoError::InvalidProblem(format!(
            "coefficient is not SPD at ({}, {}) in triangle {}: {a:?}",
            x.x, x.y, c.index
        )));
    }
    Ok(a)
}

/// Gauss points of local edge `i` of `t`: physical point, weight (including
/// the edge length) and the parameter `s ∈ [0,1]` from the global start vertex.
pub(crate) fn edge_points(mesh: &TriMesh, t: usize, i: usize, n: usize) -> Vec<(Point, f64, f64)> {
    let e = mesh.tri_edges[t][i];
    let [s, f] = mesh.edges[e];
    let (a, b) = (mesh.vertices[s], mesh.vertices[f]);
    let len = mesh.edge_lengths[e];
    crate::quadrature::GaussLegendre::new(n)
        .unit_points()
        .map(|(u, w)| (a.lerp(b, u), w * len, u))
        .collect()
}

/// Dense element contribution in local numbering: the `u` nodes of the
/// triangle followed by the `3k` flux modes of its edges (local edge-major).
struct ElementBlock {
    u_dofs: Vec<usize>,
    q_dofs: Vec<usize>,
    /// Row-major `m × m`, `m = u_dofs.len() + q_dofs.len()`.
    matrix: Vec<f64>,
    load: Vec<f64>,
    constraint: Vec<f64>,
    source_integral: f64,
    edge_terms: usize,
}

impl ElementBlock {
    fn size(&self) -> usize {
        self.u_dofs.len() + self.q_dofs.len()
    }
}

fn element_block(
    mesh: &TriMesh,
    layout: &DofLayout,
    problem: &dyn DiffusionProblem,
    tab: &Tabulation,
    cfg: &SpaceConfig,
    t: usize,
    weight: Option<f64>,
) -> Result<ElementBlock> {
    let k = layout.k;
    let nu = layout.u_per_tri;
    let nq = if weight.is_some() { 3 * k } else { 0 };
    let m = nu + nq;
    let map = AffineMap::new(mesh, t);
    let c = cell(mesh, t);
    let mut matrix = vec![0.0; m * m];
    let mut load = vec![0.0; nu];
    let source_integral = source_integral(problem, mesh, t, &tab.source_rule);

    for (qp, (&[xi, eta], &w)) in tab.rule.points.iter().zip(&tab.rule.weights).enumerate() {
        let x = map.point(xi, eta);
        let wq = w * map.det.abs();
        let alpha = check_spd(problem, x, c)?;
        let f = problem.source(x, c);
        let grads: Vec<Point> = tab.dphi[qp].iter().map(|&g| map.grad(g)).collect();
        for i in 0..nu {
            load[i] += wq * f * tab.phi[qp][i];
            let ag = alpha.apply(grads[i]);
            for j in 0..nu {
                matrix[i * m + j] += wq * ag.dot(grads[j]);
            }
        }
    }

    let mut constraint = vec![0.0; nq];
    let mut q_dofs = Vec::with_capacity(nq);
    let mut edge_terms = 0;
    if let Some(hb) = weight {
        for i in 0..3 {
            let e = mesh.tri_edges[t][i];
            let n_e = mesh.edge_normals[e];
            let sigma = mesh.tri_signs[t][i];
            q_dofs.extend((0..k).map(|j| layout.q_dof(e, j)));
            edge_terms += 1;
            for (x, w, s) in edge_points(mesh, t, i, cfg.edge_quad_points) {
                let [xi, eta] = map.reference(x);
                let alpha = check_spd(problem, x, c)?;
                let flux: Vec<f64> = layout
                    .tri_basis
                    .grad(xi, eta)
                    .into_iter()
                    .map(|g| alpha.apply(map.grad(g)).dot(n_e))
                    .collect();
                let psi = layout.edge_basis.eval(s);
                let off = nu + i * k;
                for a in 0..nu {
                    for b in 0..nu {
                        matrix[a * m + b] += hb * w * flux[a] * flux[b];
                    }
                    for jb in 0..k {
                        let v = hb * w * flux[a] * psi[jb];
                        matrix[a * m + off + jb] += v;
                        matrix[(off + jb) * m + a] += v;
                    }
                }
                for ja in 0..k {
                    constraint[i * k + ja] += sigma * w * psi[ja];
                    for jb in 0..k {
                        matrix[(off + ja) * m + off + jb] += hb * w * psi[ja] * psi[jb];
                    }
                }
            }
        }
    }

    Ok(ElementBlock {
        u_dofs: layout.tri_u_dofs(t).to_vec(),
        q_dofs,
        matrix,
        load,
        constraint,
        source_integral,
        edge_terms,
    })
}

/// Dirichlet values of `u` (nodal interpolation of `g` on Dirichlet sides)
/// and prescribed values of `q` (zero on no-flow sides).
fn boundary_data(
    mesh: &TriMesh,
    layout: &DofLayout,
    problem: &dyn DiffusionProblem,
) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
    let mut u_fixed = vec![None; layout.n_u];
    let mut q_fixed = vec![None; layout.n_q];
    for e in 0..mesh.num_edges() {
        let Some(side) = mesh.edge_boundary[e] else { continue };
        match problem.boundary_kind(side) {
            BoundaryKind::Dirichlet => {
                for n in layout.edge_u_nodes(mesh, e) {
                    u_fixed[n] = Some(problem.dirichlet(layout.u_nodes[n]));
                }
            }
            BoundaryKind::NoFlow => {
                for j in 0..layout.k {
                    q_fixed[layout.q_dof(e, j)] = Some(0.0);
                }
            }
        }
    }
    (u_fixed, q_fixed)
}

fn free_index(fixed: &[Option<f64>], offset: usize) -> (Vec<Option<usize>>, usize) {
    let mut next = offset;
    let idx = fixed
        .iter()
        .map(|f| {
            if f.is_none() {
                next += 1;
                Some(next - 1)
            } else {
                None
            }
        })
        .collect();
    (idx, next - offset)
}

/// The assembled CFO system over the free unknowns, ordered `u`, `q`, `λ`.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub n_u_free: usize,
    pub n_q_free: usize,
    pub n_lambda: usize,
    /// System row of each global `u` node, `None` for Dirichlet nodes.
    pub u_index: Vec<Option<usize>>,
    pub q_index: Vec<Option<usize>>,
    /// Dirichlet values (zero at free nodes).
    pub u_boundary: Vec<f64>,
    /// Prescribed fluxes (zero at free modes).
    pub q_boundary: Vec<f64>,
    /// `∫_D f` per triangle, before any elimination.
    pub source_integrals: Vec<f64>,
    pub beta: f64,
    /// Number of (triangle, edge) stabilization terms assembled.
    pub stabilization_terms: usize,
}

impl SaddleSystem {
    pub fn size(&self) -> usize {
        self.matrix.n
    }

    pub fn lambda_offset(&self) -> usize {
        self.n_u_free + self.n_q_free
    }

    /// Full `u`, `q` and `λ` vectors from a system solution.
    pub fn expand(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let u = self
            .u_index
            .iter()
            .zip(&self.u_boundary)
            .map(|(i, g)| i.map_or(*g, |i| x[i]))
            .collect();
        let q = self
            .q_index
            .iter()
            .zip(&self.q_boundary)
            .map(|(i, g)| i.map_or(*g, |i| x[i]))
            .collect();
        (u, q, x[self.lambda_offset()..].to_vec())
    }

    /// Constraint block `B` as triplets (row = triangle, col = free flux index).
    pub fn constraint_block(&self) -> Vec<(usize, usize, f64)> {
        let rows: Vec<usize> = (self.lambda_offset()..self.size()).collect();
        let cols: Vec<usize> = (self.n_u_free..self.lambda_offset()).collect();
        self.matrix.block(&rows, &cols)
    }
}

/// Discrete weak divergence `(1/|D|) Σ_e σ ∫_e q ds` on triangle `t`.
pub fn weak_divergence(mesh: &TriMesh, layout: &DofLayout, q: &[f64], t: usize) -> f64 {
    boundary_flux(mesh, layout, q, t) / mesh.tri_areas[t]
}

/// Net outward flux `Σ_e σ ∫_e q ds` of triangle `t`. Only the constant
/// edge mode has a nonzero mean.
pub fn boundary_flux(mesh: &TriMesh, layout: &DofLayout, q: &[f64], t: usize) -> f64 {
    (0..3)
        .map(|i| {
            let e = mesh.tri_edges[t][i];
            mesh.tri_signs[t][i] * mesh.edge_lengths[e] * q[layout.q_dof(e, 0)]
        })
        .sum()
}

type Triplets = Vec<(usize, usize, f64)>;

/// Constraint rows `Σ_e σ ∫_e ψ_j ds` per triangle and the vector `∫_D f`.
pub fn assemble_constraint(
    mesh: &TriMesh,
    layout: &DofLayout,
    problem: &dyn DiffusionProblem,
) -> Result<(Triplets, Vec<f64>)> {
    let cfg = SpaceConfig::new(layout.k)?;
    let tab = Tabulation::new(layout, cfg.tri_quad_degree);
    let mut rows = Vec::new();
    let mut rhs = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let blk = element_block(mesh, layout, problem, &tab, &cfg, t, Some(1.0))?;
        for (c, &b) in blk.q_dofs.iter().zip(&blk.constraint) {
            rows.push((t, *c, b));
        }
        rhs.push(blk.source_integral);
    }
    Ok((rows, rhs))
}

/// Builds the CFO saddle-point system.
pub fn assemble_cfo(
    mesh: &TriMesh,
    layout: &DofLayout,
    problem: &dyn DiffusionProblem,
    config: &AssemblyConfig,
) -> Result<SaddleSystem> {
    config.validate()?;
    let cfg = SpaceConfig::new(layout.k)?;
    let tab = Tabulation::new(layout, cfg.tri_quad_degree);
    let (u_fixed, q_fixed) = boundary_data(mesh, layout, problem);
    let (u_index, n_u_free) = free_index(&u_fixed, 0);
    let (q_index, n_q_free) = free_index(&q_fixed, n_u_free);
    let n_lambda = mesh.num_triangles();
    let lam0 = n_u_free + n_q_free;
    let n = lam0 + n_lambda;

    // Each element yields its triplets and right-hand-side updates.
    type Part = (Vec<(usize, usize, f64)>, Vec<(usize, f64)>, f64, usize);
    let parts: Vec<Result<Part>> = config.exec.map(mesh.num_triangles(), |t| {
        let hb = config.element_size.of(mesh, t).powf(config.beta);
        let blk = element_block(mesh, layout, problem, &tab, &cfg, t, Some(hb))?;
        let m = blk.size();
        let nu = blk.u_dofs.len();
        let var = |a: usize| -> (Option<usize>, f64) {
            if a < nu {
                let g = blk.u_dofs[a];
                (u_index[g], u_fixed[g].unwrap_or(0.0))
            } else {
                let g = blk.q_dofs[a - nu];
                (q_index[g], q_fixed[g].unwrap_or(0.0))
            }
        };
        let mut trips = Vec::with_capacity(m * m + 2 * blk.q_dofs.len());
        let mut rhs = Vec::with_capacity(m + 1);
        for a in 0..m {
            let (Some(ra), _) = var(a) else { continue };
            if a < nu {
                rhs.push((ra, blk.load[a]));
            }
            for b in 0..m {
                let v = blk.matrix[a * m + b];
                match var(b) {
                    (Some(cb), _) => trips.push((ra, cb, v)),
                    (None, g) => rhs.push((ra, -v * g)),
                }
            }
        }
        let row = lam0 + t;
        let mut g = blk.source_integral;
        for (j, &b) in blk.constraint.iter().enumerate() {
            match var(nu + j) {
                (Some(c), _) => {
                    trips.push((row, c, b));
                    trips.push((c, row, b));
                }
                (None, val) => g -= b * val,
            }
        }
        rhs.push((row, g));
        Ok((trips, rhs, blk.source_integral, blk.edge_terms))
    });

    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n];
    let mut source_integrals = Vec::with_capacity(n_lambda);
    let mut stabilization_terms = 0;
    for part in parts {
        let (trips, r, g, terms) = part?;
        triplets.extend(trips);
        for (i, v) in r {
            rhs[i] += v;
        }
        source_integrals.push(g);
        stabilization_terms += terms;
    }
    let matrix = SparseMatrix::from_triplets(n, &triplets, true)?;
    Ok(SaddleSystem {
        matrix,
        rhs,
        n_u_free,
        n_q_free,
        n_lambda,
        u_index,
        q_index,
        u_boundary: u_fixed.iter().map(|v| v.unwrap_or(0.0)).collect(),
        q_boundary: q_fixed.iter().map(|v| v.unwrap_or(0.0)).collect(),
        source_integrals,
        beta: config.beta,
        stabilization_terms,
    })
}

/// Ritz-Galerkin stiffness system over the free `u` nodes.
#[derive(Debug, Clone)]
pub struct RitzSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub u_index: Vec<Option<usize>>,
    pub u_boundary: Vec<f64>,
}

impl RitzSystem {
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.u_index
            .iter()
            .zip(&self.u_boundary)
            .map(|(i, g)| i.map_or(*g, |i| x[i]))
            .collect()
    }
}

/// `(α∇R_h u, ∇v) = (f, v)` with the same Dirichlet lifting as the CFO system.
pub fn assemble_ritz(
    mesh: &TriMesh,
    layout: &DofLayout,
    problem: &dyn DiffusionProblem,
    exec: Exec,
) -> Result<RitzSystem> {
    let cfg = SpaceConfig::new(layout.k)?;
    let tab = Tabulation::new(layout, cfg.tri_quad_degree);
    let (u_fixed, _) = boundary_data(mesh, layout, problem);
    let (u_index, n) = free_index(&u_fixed, 0);
    type Part = (Vec<(usize, usize, f64)>, Vec<(usize, f64)>);
    let parts: Vec<Result<Part>> = exec.map(mesh.num_triangles(), |t| {
        let blk = element_block(mesh, layout, problem, &tab, &cfg, t, None)?;
        let m = blk.size();
        let mut trips = Vec::with_capacity(m * m);
        let mut rhs = Vec::with_capacity(2 * m);
        for a in 0..m {
            let Some(ra) = u_index[blk.u_dofs[a]] else { continue };
            rhs.push((ra, blk.load[a]));
            for b in 0..m {
                let v = blk.matrix[a * m + b];
                let gb = blk.u_dofs[b];
                match u_index[gb] {
                    Some(cb) => trips.push((ra, cb, v)),
                    None => rhs.push((ra, -v * u_fixed[gb].unwrap_or(0.0))),
                }
            }
        }
        Ok((trips, rhs))
    });
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n];
    for part in parts {
        let (trips, r) = part?;
        triplets.extend(trips);
        for (i, v) in r {
            rhs[i] += v;
        }
    }
    Ok(RitzSystem {
        matrix: SparseMatrix::from_triplets(n, &triplets, true)?,
        rhs,
        u_index,
        u_boundary: u_fixed.iter().map(|v| v.unwrap_or(0.0)).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct CfoSolution {
    pub k: usize,
    pub beta: f64,
    pub element_size: ElementSize,
    /// Subdivisions per side of the mesh solved on.
    pub mesh_n: usize,
    pub layout: DofLayout,
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Ritz-Galerkin companion, when requested.
    pub ritz: Option<Vec<f64>>,
    pub diagnostics: SolveDiagnostics,
}

/// Assembles and solves the CFO system; with `with_ritz` also computes the
/// Ritz-Galerkin solution on the same space.
pub fn solve_cfo(
    mesh: &TriMesh,
    problem: &dyn DiffusionProblem,
    k: usize,
    config: &AssemblyConfig,
    with_ritz: bool,
) -> Result<CfoSolution> {
    let layout = build_dof_layout(mesh, k)?;
    let sys = assemble_cfo(mesh, &layout, problem, config)?;
    let sol = solve_symmetric_indefinite(&sys.matrix, &sys.rhs)?;
    let (u, q, lambda) = sys.expand(&sol.x);
    if let Some(t) = lambda.iter().position(|v| !v.is_finite()) {
        return Err(CfoError::Factorization(format!("non-finite multiplier on triangle {t}")));
    }
    let ritz = if with_ritz {
        let rs = assemble_ritz(mesh, &layout, problem, config.exec)?;
        Some(rs.expand(&solve_spd(&rs.matrix, &rs.rhs)?.x))
    } else {
        None
    };
    Ok(CfoSolution {
        k,
        beta: config.beta,
        element_size: config.element_size,
        mesh_n: mesh.n,
        layout,
        u,
        q,
        lambda,
        ritz,
        diagnostics: sol.diagnostics,
    })
}
