//! Uniform conforming triangulations of rectangles.
//!
//! Every edge carries a fixed unit normal `n_e`: the direction from its
//! lexicographically smaller endpoint (by `x`, then `y`) to the larger one,
//! rotated by +90 degrees. Each triangle stores, per local edge, the sign
//! `σ = n · n_e` relating its outward normal to that global orientation.
//! Local edge `i` is the edge opposite local vertex `i`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{CfoError, Result};
use crate::geom::{Point, Rect};
use crate::quadrature::GaussLegendre;

/// Which side of the bounding rectangle a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundarySide {
    Left,
    Right,
    Bottom,
    Top,
}

/// Control volumes over which conservation is enforced. Only the primal
/// triangulation is supported; the enum keeps room for dual volumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlVolumes {
    #[default]
    Triangles,
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub domain: Rect,
    /// Subdivisions per side.
    pub n: usize,
    pub control_volumes: ControlVolumes,
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Edge endpoints, smaller vertex (lexicographically) first.
    pub edges: Vec<[usize; 2]>,
    pub edge_normals: Vec<Point>,
    pub edge_lengths: Vec<f64>,
    /// Adjacent triangles; the second slot is `None` on the boundary.
    pub edge_triangles: Vec<(usize, Option<usize>)>,
    pub edge_boundary: Vec<Option<BoundarySide>>,
    pub vertex_boundary: Vec<bool>,
    pub tri_edges: Vec<[usize; 3]>,
    pub tri_signs: Vec<[f64; 3]>,
    pub tri_areas: Vec<f64>,
    pub tri_diameters: Vec<f64>,
    pub tri_centroids: Vec<Point>,
}

fn lex_less(a: Point, b: Point) -> bool {
    a.x < b.x || (a.x == b.x && a.y < b.y)
}

/// Builds the `n × n` uniform mesh of `domain`, each subsquare cut along its
/// bottom-left to top-right diagonal.
pub fn build_uniform_mesh(domain: Rect, n: usize) -> Result<TriMesh> {
    if n == 0 {
        return Err(CfoError::InvalidMesh("N must be at least 1".into()));
    }
    if !(domain.width() > 0.0 && domain.height() > 0.0) || !domain.area().is_finite() {
        return Err(CfoError::InvalidMesh(format!("degenerate rectangle {domain:?}")));
    }
    let stride = n + 1;
    let dx = domain.width() / n as f64;
    let dy = domain.height() / n as f64;
    let mut vertices = Vec::with_capacity(stride * stride);
    for j in 0..=n {
        for i in 0..=n {
            // Snap the last row/column so boundary coordinates are exact.
            let x = if i == n { domain.x1 } else { domain.x0 + i as f64 * dx };
            let y = if j == n { domain.y1 } else { domain.y0 + j as f64 * dy };
            vertices.push(Point::new(x, y));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = i + j * stride;
            let v10 = v00 + 1;
            let v01 = v00 + stride;
            let v11 = v01 + 1;
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    TriMesh::from_triangles(domain, n, vertices, triangles)
}

impl TriMesh {
    /// Derives edges, orientation signs and element geometry from a
    /// counterclockwise triangle list.
    pub fn from_triangles(
        domain: Rect,
        n: usize,
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<TriMesh> {
        let nt = triangles.len();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * nt / 2 + n + 4);
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<(usize, Option<usize>)> = Vec::new();
        let mut tri_edges = Vec::with_capacity(nt);
        let mut tri_areas = Vec::with_capacity(nt);
        let mut tri_diameters = Vec::with_capacity(nt);
        let mut tri_centroids = Vec::with_capacity(nt);

        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area = 0.5 * (b - a).perp().dot(c - a);
            if area <= 0.0 {
                return Err(CfoError::InvalidMesh(format!("triangle {t} is not counterclockwise")));
            }
            tri_areas.push(area);
            tri_diameters.push((b - a).norm().max((c - b).norm()).max((a - c).norm()));
            tri_centroids.push(Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0));

            let mut local = [0usize; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let p = tri[(i + 1) % 3];
                let q = tri[(i + 2) % 3];
                let key = (p.min(q), p.max(q));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    let (s, e) = if lex_less(vertices[p], vertices[q]) { (p, q) } else { (q, p) };
                    edges.push([s, e]);
                    edge_triangles.push((t, None));
                    edges.len() - 1
                });
                if edge_triangles[e].0 != t {
                    if edge_triangles[e].1.is_some() {
                        return Err(CfoError::InvalidMesh(format!("edge {key:?} shared by more than two triangles")));
                    }
                    edge_triangles[e].1 = Some(t);
                }
                *slot = e;
            }
            tri_edges.push(local);
        }

        let mut edge_normals = Vec::with_capacity(edges.len());
        let mut edge_lengths = Vec::with_capacity(edges.len());
        for &[s, e] in &edges {
            let d = vertices[e] - vertices[s];
            let len = d.norm();
            edge_lengths.push(len);
            edge_normals.push(d.perp() * (1.0 / len));
        }

        let mut tri_signs = Vec::with_capacity(nt);
        for (t, tri) in triangles.iter().enumerate() {
            let mut signs = [0.0; 3];
            for i in 0..3 {
                let p = vertices[tri[(i + 1) % 3]];
                let q = vertices[tri[(i + 2) % 3]];
                // Counterclockwise traversal: outward normal is the tangent rotated by -90°.
                let outward = (q - p).perp() * -1.0;
                signs[i] = if outward.dot(edge_normals[tri_edges[t][i]]) > 0.0 { 1.0 } else { -1.0 };
            }
            tri_signs.push(signs);
        }

        let tol = 1e-12 * domain.width().max(domain.height());
        let mut edge_boundary = vec![None; edges.len()];
        let mut vertex_boundary = vec![false; vertices.len()];
        for (e, &[s, f]) in edges.iter().enumerate() {
            if edge_triangles[e].1.is_some() {
                continue;
            }
            let m = vertices[s].lerp(vertices[f], 0.5);
            let side = if (m.x - domain.x0).abs() < tol {
                BoundarySide::Left
            } else if (m.x - domain.x1).abs() < tol {
                BoundarySide::Right
            } else if (m.y - domain.y0).abs() < tol {
                BoundarySide::Bottom
            } else if (m.y - domain.y1).abs() < tol {
                BoundarySide::Top
            } else {
                return Err(CfoError::InvalidMesh(format!("boundary edge {e} is not on the rectangle")));
            };
            edge_boundary[e] = Some(side);
            vertex_boundary[s] = true;
            vertex_boundary[f] = true;
        }

        Ok(TriMesh {
            domain,
            n,
            control_volumes: ControlVolumes::Triangles,
            vertices,
            triangles,
            edges,
            edge_normals,
            edge_lengths,
            edge_triangles,
            edge_boundary,
            vertex_boundary,
            tri_edges,
            tri_signs,
            tri_areas,
            tri_diameters,
            tri_centroids,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Global meshsize `max h_T`.
    pub fn h(&self) -> f64 {
        self.tri_diameters.iter().cloned().fold(0.0, f64::max)
    }

    /// Subsquare side length (the `h` column of convergence tables).
    pub fn spacing(&self) -> f64 {
        self.domain.width() / self.n as f64
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_boundary[e].is_some()
    }

    pub fn num_interior_edges(&self) -> usize {
        self.edge_boundary.iter().filter(|b| b.is_none()).count()
    }

    /// Endpoints of local edge `i` of triangle `t` in counterclockwise order.
    pub fn local_edge_vertices(&self, t: usize, i: usize) -> (usize, usize) {
        let tri = self.triangles[t];
        (tri[(i + 1) % 3], tri[(i + 2) % 3])
    }

    /// Whether the counterclockwise traversal of local edge `i` of `t` runs
    /// from the global edge's start vertex to its end vertex.
    pub fn local_edge_aligned(&self, t: usize, i: usize) -> bool {
        let (p, _) = self.local_edge_vertices(t, i);
        self.edges[self.tri_edges[t][i]][0] == p
    }

    /// Gauss-Legendre points on edge `e`, parameterized from its start vertex.
    /// `order` is the number of points.
    pub fn edge_quadrature_points(&self, e: usize, order: usize) -> Vec<(Point, f64)> {
        let rule = GaussLegendre::new(order.max(1));
        let [s, f] = self.edges[e];
        let (a, b) = (self.vertices[s], self.vertices[f]);
        let len = self.edge_lengths[e];
        rule.unit_points()
            .map(|(t, w)| (a.lerp(b, t), w * len))
            .collect()
    }

    /// Plain-text dump: `V E T`, then vertices, edges with normals, triangles.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.num_vertices(), self.num_edges(), self.num_triangles());
        for v in &self.vertices {
            let _ = writeln!(out, "{:.17e} {:.17e}", v.x, v.y);
        }
        for (e, [s, f]) in self.edges.iter().enumerate() {
            let n = self.edge_normals[e];
            let _ = writeln!(out, "{s} {f} {:.17e} {:.17e}", n.x, n.y);
        }
        for [a, b, c] in &self.triangles {
            let _ = writeln!(out, "{a} {b} {c}");
        }
        out
    }
}
