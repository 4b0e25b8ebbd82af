//! Error norms, conservation audits, convergence tables and the multiplier
//! estimator comparison.

use std::fmt::Write as _;

use crate::assembly::{cell, edge_points, solve_cfo, source_integral, source_rule, AffineMap, AssemblyConfig, CfoSolution};
use crate::error::{CfoError, Result};
use crate::exec::Exec;
use crate::geom::Point;
use crate::io::sci;
use crate::mesh::{build_uniform_mesh, TriMesh};
use crate::problems::DiffusionProblem;
use crate::quadrature::TriangleRule;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Subsquare side length.
    pub h: f64,
    pub k: usize,
    pub beta: f64,
    pub l2: f64,
    /// `|u_h - u|₁`, the gradient seminorm.
    pub h1: f64,
    /// `(Σ_T h_T ∫_{∂T} |α∇u·n_e + q_h|² ds)^½`.
    pub flux: f64,
    pub lambda: f64,
    pub urh_l2: f64,
    pub urh_h1: f64,
    /// `|R_h u - u|₁`, reported for the triangle-inequality audit.
    pub ritz_h1: f64,
    /// Largest per-element conservation residual.
    pub cons_residual: f64,
}

/// Values and gradients of a P_k coefficient vector on one triangle.
fn eval_field(sol: &CfoSolution, coef: &[f64], t: usize, map: &AffineMap, xi: f64, eta: f64) -> (f64, Point) {
    let basis = &sol.layout.tri_basis;
    let dofs = sol.layout.tri_u_dofs(t);
    let phi = basis.eval(xi, eta);
    let dphi = basis.grad(xi, eta);
    let mut v = 0.0;
    let mut g = Point::default();
    for (i, &d) in dofs.iter().enumerate() {
        v += coef[d] * phi[i];
        g = g + map.grad(dphi[i]) * coef[d];
    }
    (v, g)
}

/// `q_h` on global edge `e` at parameter `s` from its start vertex.
fn edge_flux(sol: &CfoSolution, e: usize, s: f64) -> f64 {
    let psi = sol.layout.edge_basis.eval(s);
    (0..sol.k).map(|j| sol.q[sol.layout.q_dof(e, j)] * psi[j]).sum()
}

/// Quadrature used to evaluate error norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorQuadrature {
    pub tri_degree: usize,
    pub edge_points: usize,
}

impl ErrorQuadrature {
    pub fn for_degree(k: usize) -> Self {
        ErrorQuadrature { tri_degree: 2 * k + 4, edge_points: k + 3 }
    }
}

fn error_quadrature(k: usize) -> (TriangleRule, usize) {
    let q = ErrorQuadrature::for_degree(k);
    (TriangleRule::with_degree(q.tri_degree), q.edge_points)
}

/// Error norms against the exact solution. Requires `solution.ritz` for the
/// super-closeness columns (they are reported as NaN otherwise).
pub fn compute_errors(
    solution: &CfoSolution,
    problem: &dyn DiffusionProblem,
    mesh: &TriMesh,
) -> Result<ErrorReport> {
    compute_errors_with(solution, problem, mesh, ErrorQuadrature::for_degree(solution.k))
}

pub fn compute_errors_with(
    solution: &CfoSolution,
    problem: &dyn DiffusionProblem,
    mesh: &TriMesh,
    quadrature: ErrorQuadrature,
) -> Result<ErrorReport> {
    if !problem.has_exact() {
        return Err(CfoError::InvalidProblem(format!("{} has no exact solution", problem.name())));
    }
    let rule = TriangleRule::with_degree(quadrature.tri_degree);
    let edge_n = quadrature.edge_points;
    let ritz = solution.ritz.as_deref();
    // [l2, h1, flux, urh_l2, urh_h1, ritz_h1, lambda]
    let parts: Vec<[f64; 7]> = Exec::default().map(mesh.num_triangles(), |t| {
        let map = AffineMap::new(mesh, t);
        let c = cell(mesh, t);
        let mut acc = [0.0; 7];
        for (&[xi, eta], &w) in rule.points.iter().zip(&rule.weights) {
            let x = map.point(xi, eta);
            let wq = w * map.det.abs();
            let (uh, guh) = eval_field(solution, &solution.u, t, &map, xi, eta);
            let u = problem.exact(x, c).unwrap_or(0.0);
            let gu = problem.exact_grad(x, c).unwrap_or_default();
            acc[0] += wq * (uh - u).powi(2);
            acc[1] += wq * (guh - gu).dot(guh - gu);
            if let Some(r) = ritz {
                let (rh, grh) = eval_field(solution, r, t, &map, xi, eta);
                acc[3] += wq * (uh - rh).powi(2);
                acc[4] += wq * (guh - grh).dot(guh - grh);
                acc[5] += wq * (grh - gu).dot(grh - gu);
            }
        }
        let ht = solution.element_size.of(mesh, t);
        for i in 0..3 {
            let e = mesh.tri_edges[t][i];
            let n = mesh.edge_normals[e];
            for (x, w, s) in edge_points(mesh, t, i, edge_n) {
                let q = problem.exact_flux(x, n, c).unwrap_or(0.0);
                acc[2] += ht * w * (edge_flux(solution, e, s) - q).powi(2);
            }
        }
        acc[6] = solution.lambda[t].powi(2) * mesh.tri_areas[t];
        acc
    });
    let mut tot = [0.0; 7];
    for p in &parts {
        for (a, b) in tot.iter_mut().zip(p) {
            *a += b;
        }
    }
    let nan_if_missing = |v: f64| if ritz.is_some() { v.sqrt() } else { f64::NAN };
    let audit = conservation_audit(solution, problem, mesh)?;
    Ok(ErrorReport {
        h: mesh.spacing(),
        k: solution.k,
        beta: solution.beta,
        l2: tot[0].sqrt(),
        h1: tot[1].sqrt(),
        flux: tot[2].sqrt(),
        lambda: tot[6].sqrt(),
        urh_l2: nan_if_missing(tot[3]),
        urh_h1: nan_if_missing(tot[4]),
        ritz_h1: nan_if_missing(tot[5]),
        cons_residual: audit.max_residual,
    })
}

/// Per-element mass balance `|Σ_e σ ∫_e q ds - ∫_D f dx|`.
#[derive(Debug, Clone)]
pub struct ConservationAudit {
    pub residuals: Vec<f64>,
    /// `∫_D f dx` per element.
    pub source: Vec<f64>,
    pub max_residual: f64,
}

impl ConservationAudit {
    /// Largest `residual_D / max(1, |∫_D f|)`.
    pub fn max_relative(&self) -> f64 {
        self.residuals
            .iter()
            .zip(&self.source)
            .map(|(r, f)| r / f.abs().max(1.0))
            .fold(0.0, f64::max)
    }

    /// Whether every element balances to `tol · max(1, |∫_D f|)`.
    pub fn passes(&self, tol: f64) -> bool {
        self.max_relative() <= tol
    }

    fn from_fluxes(net: Vec<f64>, source: Vec<f64>) -> Self {
        let residuals: Vec<f64> = net.iter().zip(&source).map(|(a, b)| (a - b).abs()).collect();
        let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
        ConservationAudit { residuals, source, max_residual }
    }
}

fn source_integrals(problem: &dyn DiffusionProblem, mesh: &TriMesh, k: usize) -> Vec<f64> {
    let rule = source_rule(k);
    Exec::default().map(mesh.num_triangles(), |t| source_integral(problem, mesh, t, &rule))
}

/// Audits the CFO flux `q_h`.
pub fn conservation_audit(
    solution: &CfoSolution,
    problem: &dyn DiffusionProblem,
    mesh: &TriMesh,
) -> Result<ConservationAudit> {
    let net = (0..mesh.num_triangles())
        .map(|t| crate::assembly::boundary_flux(mesh, &solution.layout, &solution.q, t))
        .collect();
    Ok(ConservationAudit::from_fluxes(net, source_integrals(problem, mesh, solution.k)))
}

/// Audits the flux `-α∇R_h u · n_e` of the Ritz-Galerkin solution, averaged
/// over the two sides of interior edges so it is single-valued.
pub fn ritz_flux_audit(
    solution: &CfoSolution,
    problem: &dyn DiffusionProblem,
    mesh: &TriMesh,
) -> Result<ConservationAudit> {
    let ritz = solution
        .ritz
        .as_deref()
        .ok_or_else(|| CfoError::InvalidConfig("solution was computed without the Ritz-Galerkin companion".into()))?;
    let (_, edge_n) = error_quadrature(solution.k);
    // ∫_e -α∇R_h u·n_e ds seen from each adjacent triangle.
    let mut side_sum = vec![0.0; mesh.num_edges()];
    let mut side_count = vec![0usize; mesh.num_edges()];
    for t in 0..mesh.num_triangles() {
        let map = AffineMap::new(mesh, t);
        let c = cell(mesh, t);
        for i in 0..3 {
            let e = mesh.tri_edges[t][i];
            let n = mesh.edge_normals[e];
            for (x, w, _) in edge_points(mesh, t, i, edge_n) {
                let [xi, eta] = map.reference(x);
                let (_, g) = eval_field(solution, ritz, t, &map, xi, eta);
                side_sum[e] -= w * problem.alpha(x, c).apply(g).dot(n);
            }
            side_count[e] += 1;
        }
    }
    let net = (0..mesh.num_triangles())
        .map(|t| {
            (0..3)
                .map(|i| {
                    let e = mesh.tri_edges[t][i];
                    mesh.tri_signs[t][i] * side_sum[e] / side_count[e] as f64
                })
                .sum()
        })
        .collect();
    Ok(ConservationAudit::from_fluxes(net, source_integrals(problem, mesh, solution.k)))
}

/// `log₂(e_i / e_{i+1})` between consecutive entries. Equal errors give 0,
/// including two zeros.
pub fn rates(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| if w[0] == w[1] { 0.0 } else { (w[0] / w[1]).log2() })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub problem: String,
    pub k: usize,
    pub beta: f64,
    pub rows: Vec<ErrorReport>,
}

impl ConvergenceTable {
    pub fn metric(&self, f: impl Fn(&ErrorReport) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn rates(&self, f: impl Fn(&ErrorReport) -> f64) -> Vec<f64> {
        rates(&self.metric(f))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "h,L2,L2_rate,H1,H1_rate,flux,flux_rate,lambda,lambda_rate,uRh_L2,uRh_L2_rate,uRh_H1,uRh_H1_rate,cons_residual\n",
        );
        type Getter = fn(&ErrorReport) -> f64;
        let metrics: [Getter; 6] = [|r| r.l2, |r| r.h1, |r| r.flux, |r| r.lambda, |r| r.urh_l2, |r| r.urh_h1];
        let rate_cols: Vec<Vec<f64>> = metrics.iter().map(|f| self.rates(f)).collect();
        for (i, row) in self.rows.iter().enumerate() {
            let mut line = sci(row.h);
            for (m, f) in metrics.iter().enumerate() {
                let rate = if i == 0 { "-".to_string() } else { format!("{:.2}", rate_cols[m][i - 1]) };
                let _ = write!(line, ",{},{}", sci(f(row)), rate);
            }
            let _ = writeln!(line, ",{}", sci(row.cons_residual));
            out.push_str(&line);
        }
        out
    }
}

/// Solves on each `n × n` mesh of `ns` (which must double at every step)
/// and tabulates the errors.
pub fn convergence_study(
    problem: &dyn DiffusionProblem,
    k: usize,
    config: &AssemblyConfig,
    ns: &[usize],
) -> Result<ConvergenceTable> {
    if ns.len() < 2 {
        return Err(CfoError::InvalidConfig("a convergence study needs at least two meshes".into()));
    }
    if let Some(w) = ns.windows(2).find(|w| w[1] != 2 * w[0]) {
        return Err(CfoError::InvalidConfig(format!(
            "mesh sizes must halve h at every step, got N = {} then {}",
            w[0], w[1]
        )));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let mesh = build_uniform_mesh(problem.domain(), n)?;
        let sol = solve_cfo(&mesh, problem, k, config, true)?;
        rows.push(compute_errors(&sol, problem, &mesh)?);
    }
    Ok(ConvergenceTable { problem: problem.name(), k, beta: config.beta, rows })
}

/// Per-element `λ_h²` and `∫_T |u_h - u|²`, with their Pearson correlation.
#[derive(Debug, Clone)]
pub struct EstimatorFields {
    pub lambda_sq: Vec<f64>,
    pub error_sq: Vec<f64>,
    /// `None` when either field is constant.
    pub correlation: Option<f64>,
}

pub fn estimator_fields(
    solution: &CfoSolution,
    problem: &dyn DiffusionProblem,
    mesh: &TriMesh,
) -> Result<EstimatorFields> {
    if !problem.has_exact() {
        return Err(CfoError::InvalidProblem(format!("{} has no exact solution", problem.name())));
    }
    let (rule, _) = error_quadrature(solution.k);
    let error_sq = Exec::default().map(mesh.num_triangles(), |t| {
        let map = AffineMap::new(mesh, t);
        let c = cell(mesh, t);
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(&[xi, eta], &w)| {
                let (uh, _) = eval_field(solution, &solution.u, t, &map, xi, eta);
                let u = problem.exact(map.point(xi, eta), c).unwrap_or(0.0);
                w * map.det.abs() * (uh - u).powi(2)
            })
            .sum()
    });
    let lambda_sq: Vec<f64> = solution.lambda.iter().map(|l| l * l).collect();
    let correlation = pearson(&lambda_sq, &error_sq);
    Ok(EstimatorFields { lambda_sq, error_sq, correlation })
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}
