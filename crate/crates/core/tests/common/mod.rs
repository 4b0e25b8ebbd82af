//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use cfo_core::dofs::DofLayout;
use cfo_core::geom::Point;
use cfo_core::mesh::TriMesh;
use cfo_core::problems::{Cell, DiffusionProblem};
use cfo_core::quadrature::{GaussLegendre, TriangleRule};
use cfo_core::twophase::Mobility;

fn cell(mesh: &TriMesh, t: usize) -> Cell {
    Cell { index: t, centroid: mesh.tri_centroids[t] }
}

/// Physical point and physical basis gradients at reference `(ξ, η)`.
fn map_point(mesh: &TriMesh, t: usize, xi: f64, eta: f64) -> (Point, [[f64; 2]; 2], f64) {
    let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
    let (e1, e2) = (b - a, c - a);
    let det = e1.x * e2.y - e2.x * e1.y;
    // Inverse transpose of [e1 e2].
    let jit = [[e2.y / det, -e1.y / det], [-e2.x / det, e1.x / det]];
    (a + e1 * xi + e2 * eta, jit, det)
}

fn ref_coords(mesh: &TriMesh, t: usize, p: Point) -> [f64; 2] {
    let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
    let (e1, e2) = (b - a, c - a);
    let det = e1.x * e2.y - e2.x * e1.y;
    let d = p - a;
    [(d.x * e2.y - d.y * e2.x) / det, (e1.x * d.y - e1.y * d.x) / det]
}

fn grad_u(layout: &DofLayout, u: &[f64], t: usize, jit: [[f64; 2]; 2], xi: f64, eta: f64) -> Point {
    let g = layout.tri_basis.grad(xi, eta);
    let mut out = Point::default();
    for (i, &d) in layout.tri_u_dofs(t).iter().enumerate() {
        let gx = jit[0][0] * g[i][0] + jit[0][1] * g[i][1];
        let gy = jit[1][0] * g[i][0] + jit[1][1] * g[i][1];
        out = out + Point::new(gx, gy) * u[d];
    }
    out
}

/// `J_{2,β}(v, p) = ½ Σ_D h_D^β Σ_e ∫_e (p + α∇v·n_e)² + ½(α∇v,∇v) - (f,v)`
/// with `h_D` the subsquare side, evaluated by direct quadrature.
pub fn functional(
    mesh: &TriMesh,
    layout: &DofLayout,
    problem: &dyn DiffusionProblem,
    beta: f64,
    u: &[f64],
    q: &[f64],
) -> f64 {
    let k = layout.k;
    let rule = TriangleRule::with_degree(2 * k + 6);
    let gl = GaussLegendre::new(k + 4);
    let hb = mesh.spacing().powf(beta);
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let c = cell(mesh, t);
        for (&[xi, eta], &w) in rule.points.iter().zip(&rule.weights) {
            let (x, jit, det) = map_point(mesh, t, xi, eta);
            let g = grad_u(layout, u, t, jit, xi, eta);
            let phi = layout.tri_basis.eval(xi, eta);
            let v: f64 = layout.tri_u_dofs(t).iter().enumerate().map(|(i, &d)| u[d] * phi[i]).sum();
            let a = problem.alpha(x, c);
            total += w * det.abs() * (0.5 * a.apply(g).dot(g) - problem.source(x, c) * v);
        }
        for &e in &mesh.tri_edges[t] {
            let [s0, s1] = mesh.edges[e].map(|v| mesh.vertices[v]);
            let n = mesh.edge_normals[e];
            let len = (s1 - s0).norm();
            for (s, w) in gl.unit_points() {
                let x = s0.lerp(s1, s);
                let [xi, eta] = ref_coords(mesh, t, x);
                let (_, jit, _) = map_point(mesh, t, xi, eta);
                let g = grad_u(layout, u, t, jit, xi, eta);
                let psi = layout.edge_basis.eval(s);
                let p: f64 = (0..k).map(|j| q[layout.q_dof(e, j)] * psi[j]).sum();
                let r = p + problem.alpha(x, c).apply(g).dot(n);
                total += 0.5 * hb * w * len * r * r;
            }
        }
    }
    total
}

/// `Σ_D λ_D (Σ_e σ ∫_e p ds - ∫_D f)`, with the edge integrals by quadrature.
pub fn constraint_term(
    mesh: &TriMesh,
    layout: &DofLayout,
    problem: &dyn DiffusionProblem,
    q: &[f64],
    lambda: &[f64],
) -> f64 {
    let k = layout.k;
    let rule = TriangleRule::with_degree(2 * k + 6);
    let gl = GaussLegendre::new(k + 4);
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let c = cell(mesh, t);
        let mut flux = 0.0;
        for (i, &e) in mesh.tri_edges[t].iter().enumerate() {
            let len = mesh.edge_lengths[e];
            for (s, w) in gl.unit_points() {
                let psi = layout.edge_basis.eval(s);
                let p: f64 = (0..k).map(|j| q[layout.q_dof(e, j)] * psi[j]).sum();
                flux += mesh.tri_signs[t][i] * w * len * p;
            }
        }
        let mut f = 0.0;
        for (&[xi, eta], &w) in rule.points.iter().zip(&rule.weights) {
            let (x, _, det) = map_point(mesh, t, xi, eta);
            f += w * det.abs() * problem.source(x, c);
        }
        total += lambda[t] * (flux - f);
    }
    total
}

/// 1D Buckley-Leverett displacement on `(0, 1)` with `p(0) = 1`, `p(1) = 0`,
/// `S(0) = 1` and unit permeability; returns cell saturations at `t_end`.
pub fn buckley_leverett_1d(cells: usize, mobility: &Mobility, t_end: f64) -> Vec<f64> {
    let dx = 1.0 / cells as f64;
    let fmax = mobility.max_fractional_derivative();
    let mut s = vec![0.0; cells];
    let mut t = 0.0;
    while t < t_end - 1e-14 {
        // Total Darcy velocity from the series resistance of the cells.
        let resistance: f64 = s.iter().map(|&si| dx / mobility.total(si)).sum();
        let v = 1.0 / resistance;
        let dt = (0.5 * dx / (fmax * v)).min(t_end - t);
        let mut next = s.clone();
        for i in 0..cells {
            let up = if i == 0 { 1.0 } else { s[i - 1] };
            next[i] -= dt / dx * v * (mobility.fractional(s[i]) - mobility.fractional(up));
        }
        s = next;
        t += dt;
    }
    s
}

/// First position where a profile sampled at `centers` drops below `level`
/// (linear interpolation between samples).
pub fn front_position(centers: &[f64], values: &[f64], level: f64) -> f64 {
    for i in 1..values.len() {
        if values[i - 1] >= level && values[i] < level {
            let a = (values[i - 1] - level) / (values[i - 1] - values[i]);
            return centers[i - 1] + a * (centers[i] - centers[i - 1]);
        }
    }
    *centers.last().unwrap()
}

/// Column averages of a per-triangle field on a uniform `n × n` unit mesh.
pub fn column_profile(mesh: &TriMesh, field: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = mesh.n;
    let mut col = vec![0.0; n];
    let mut area = vec![0.0; n];
    for (t, c) in mesh.tri_centroids.iter().enumerate() {
        let i = ((c.x * n as f64) as usize).min(n - 1);
        col[i] += field[t] * mesh.tri_areas[t];
        area[i] += mesh.tri_areas[t];
    }
    let centers = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    (centers, col.iter().zip(&area).map(|(c, a)| c / a).collect())
}
