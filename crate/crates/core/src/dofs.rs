//! Degree-of-freedom layouts for the primal space `S_h` (continuous P_k),
//! the flux space `V_h` (P_{k-1} per edge) and the multiplier space `W_h`
//! (one constant per triangle).

use crate::basis::{EdgeBasis, LagrangeTri};
use crate::error::{CfoError, Result};
use crate::geom::Point;
use crate::mesh::TriMesh;

/// Polynomial degree plus the quadrature orders used with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceConfig {
    pub k: usize,
    /// Total degree integrated exactly on triangles.
    pub tri_quad_degree: usize,
    /// Number of Gauss points per edge.
    pub edge_quad_points: usize,
}

impl SpaceConfig {
    pub fn new(k: usize) -> Result<Self> {
        if !(1..=3).contains(&k) {
            return Err(CfoError::UnsupportedDegree(k));
        }
        Ok(SpaceConfig { k, tri_quad_degree: 2 * k + 4, edge_quad_points: k + 3 })
    }
}

/// Local CFO unknowns on one triangle: `(k+1)(k+2)/2 + 3k + 1`.
pub fn local_dof_count(k: usize) -> usize {
    (k + 1) * (k + 2) / 2 + 3 * k + 1
}

/// Per-triangle unknown counts `(CFO, Raviart-Thomas, BDM)` at order `k`.
pub fn dof_comparison(k: usize) -> (usize, usize, usize) {
    (local_dof_count(k), (k + 1) * (k + 3), (k + 1) * (k + 2))
}

#[derive(Debug, Clone)]
pub struct DofLayout {
    pub k: usize,
    pub n_u: usize,
    pub n_q: usize,
    pub n_lambda: usize,
    /// Local primal nodes per triangle, `(k+1)(k+2)/2`.
    pub u_per_tri: usize,
    /// Row-major `n_tri × u_per_tri` local-to-global primal map.
    pub u_map: Vec<usize>,
    /// Physical coordinates of every primal node.
    pub u_nodes: Vec<Point>,
    pub tri_basis: LagrangeTri,
    pub edge_basis: EdgeBasis,
    n_vertices: usize,
}

impl DofLayout {
    pub fn tri_u_dofs(&self, t: usize) -> &[usize] {
        &self.u_map[t * self.u_per_tri..(t + 1) * self.u_per_tri]
    }

    /// Global flux DOF of mode `j` on edge `e`.
    pub fn q_dof(&self, e: usize, j: usize) -> usize {
        e * self.k + j
    }

    /// Primal nodes lying on edge `e`, from its start vertex to its end vertex.
    pub fn edge_u_nodes(&self, mesh: &TriMesh, e: usize) -> Vec<usize> {
        let [s, f] = mesh.edges[e];
        let mut out = vec![s];
        out.extend((0..self.k - 1).map(|m| self.n_vertices + e * (self.k - 1) + m));
        out.push(f);
        out
    }

    /// Nodes on the domain boundary (used for Dirichlet lifting).
    pub fn boundary_u_nodes(&self, mesh: &TriMesh) -> Vec<bool> {
        let mut flag = vec![false; self.n_u];
        for e in 0..mesh.num_edges() {
            if mesh.is_boundary_edge(e) {
                for n in self.edge_u_nodes(mesh, e) {
                    flag[n] = true;
                }
            }
        }
        flag
    }
}

pub fn build_dof_layout(mesh: &TriMesh, k: usize) -> Result<DofLayout> {
    let tri_basis = LagrangeTri::new(k)?;
    let edge_basis = EdgeBasis::new(k - 1)?;
    let nv = mesh.num_vertices();
    let ne = mesh.num_edges();
    let nt = mesh.num_triangles();
    let interior_per_tri = tri_basis.len() - 3 - 3 * (k - 1);
    let n_u = nv + (k - 1) * ne + interior_per_tri * nt;
    let per = tri_basis.len();

    let mut u_map = vec![0usize; nt * per];
    let mut u_nodes = vec![Point::default(); n_u];
    u_nodes[..nv].copy_from_slice(&mesh.vertices);
    for (e, &[s, f]) in mesh.edges.iter().enumerate() {
        for m in 1..k {
            u_nodes[nv + e * (k - 1) + m - 1] =
                mesh.vertices[s].lerp(mesh.vertices[f], m as f64 / k as f64);
        }
    }
    for t in 0..nt {
        let tri = mesh.triangles[t];
        let local = &mut u_map[t * per..(t + 1) * per];
        local[..3].copy_from_slice(&tri);
        for i in 0..3 {
            let e = mesh.tri_edges[t][i];
            let aligned = mesh.local_edge_aligned(t, i);
            for m in 1..k {
                let along = if aligned { m } else { k - m };
                local[tri_basis.edge_node(i, m)] = nv + e * (k - 1) + along - 1;
            }
        }
        let [a, b, c] = tri.map(|v| mesh.vertices[v]);
        for j in 0..interior_per_tri {
            let local_idx = 3 + 3 * (k - 1) + j;
            let g = nv + (k - 1) * ne + t * interior_per_tri + j;
            local[local_idx] = g;
            let [xi, eta] = tri_basis.node_point(local_idx);
            u_nodes[g] = a + (b - a) * xi + (c - a) * eta;
        }
    }

    Ok(DofLayout {
        k,
        n_u,
        n_q: k * ne,
        n_lambda: nt,
        u_per_tri: per,
        u_map,
        u_nodes,
        tri_basis,
        edge_basis,
        n_vertices: nv,
    })
}
