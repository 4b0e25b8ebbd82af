//! Reference bases: nodal Lagrange P_k on the triangle and orthonormal
//! shifted Legendre polynomials on edges.

use crate::error::{CfoError, Result};

/// Nodal Lagrange basis of degree `k` on the reference triangle with
/// vertices `(0,0)`, `(1,0)`, `(0,1)`.
///
/// Nodes are stored as barycentric multi-indices `(i, j, l)` with
/// `i + j + l = k`, ordered: vertices, then the `k - 1` interior nodes of
/// local edges 0, 1, 2 (each traversed counterclockwise), then the
/// triangle-interior nodes.
#[derive(Debug, Clone)]
pub struct LagrangeTri {
    pub k: usize,
    pub nodes: Vec<[usize; 3]>,
}

impl LagrangeTri {
    pub fn new(k: usize) -> Result<Self> {
        if !(1..=3).contains(&k) {
            return Err(CfoError::UnsupportedDegree(k));
        }
        let mut nodes = vec![[k, 0, 0], [0, k, 0], [0, 0, k]];
        // Local edge i is opposite vertex i; edge 0 runs v1 -> v2, edge 1 v2 -> v0, edge 2 v0 -> v1.
        for m in 1..k {
            nodes.push([0, k - m, m]);
        }
        for m in 1..k {
            nodes.push([m, 0, k - m]);
        }
        for m in 1..k {
            nodes.push([k - m, m, 0]);
        }
        for i in 1..k {
            for j in 1..k {
                if i + j < k {
                    nodes.push([k - i - j, i, j]);
                }
            }
        }
        debug_assert_eq!(nodes.len(), (k + 1) * (k + 2) / 2);
        Ok(LagrangeTri { k, nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Reference coordinates of node `i`.
    pub fn node_point(&self, i: usize) -> [f64; 2] {
        let [_, a, b] = self.nodes[i];
        [a as f64 / self.k as f64, b as f64 / self.k as f64]
    }

    /// Local node index of the `m`-th (1-based) interior node of local edge
    /// `edge`, counted along the counterclockwise direction.
    pub fn edge_node(&self, edge: usize, m: usize) -> usize {
        debug_assert!(m >= 1 && m < self.k);
        3 + edge * (self.k - 1) + (m - 1)
    }

    /// Values of all basis functions at `(ξ, η)`.
    pub fn eval(&self, xi: f64, eta: f64) -> Vec<f64> {
        let lam = [1.0 - xi - eta, xi, eta];
        self.nodes
            .iter()
            .map(|idx| (0..3).map(|c| silvester(self.k, idx[c], lam[c]).0).product())
            .collect()
    }

    /// Reference gradients `(∂/∂ξ, ∂/∂η)` of all basis functions at `(ξ, η)`.
    pub fn grad(&self, xi: f64, eta: f64) -> Vec<[f64; 2]> {
        let lam = [1.0 - xi - eta, xi, eta];
        self.nodes
            .iter()
            .map(|idx| {
                let f: [(f64, f64); 3] = std::array::from_fn(|c| silvester(self.k, idx[c], lam[c]));
                let d0 = f[0].1 * f[1].0 * f[2].0;
                let d1 = f[0].0 * f[1].1 * f[2].0;
                let d2 = f[0].0 * f[1].0 * f[2].1;
                [d1 - d0, d2 - d0]
            })
            .collect()
    }
}

/// `Π_{m<a} (kλ - m) / (m + 1)` and its derivative in `λ`.
fn silvester(k: usize, a: usize, lam: f64) -> (f64, f64) {
    let kf = k as f64;
    let mut val = 1.0;
    let mut der = 0.0;
    for m in 0..a {
        let mf = m as f64;
        let factor = (kf * lam - mf) / (mf + 1.0);
        let dfactor = kf / (mf + 1.0);
        der = der * factor + val * dfactor;
        val *= factor;
    }
    (val, der)
}

/// Orthonormal shifted Legendre basis of degree `degree` on `[0, 1]`:
/// `ψ_j(s) = √(2j+1) P_j(2s - 1)`, so `∫₀¹ ψ_i ψ_j ds = δ_ij` and only
/// `ψ_0 ≡ 1` has a nonzero mean.
#[derive(Debug, Clone, Copy)]
pub struct EdgeBasis {
    pub degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree > 2 {
            return Err(CfoError::UnsupportedDegree(degree + 1));
        }
        Ok(EdgeBasis { degree })
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval(&self, s: f64) -> [f64; 3] {
        let t = 2.0 * s - 1.0;
        let mut out = [0.0; 3];
        out[0] = 1.0;
        if self.degree >= 1 {
            out[1] = 3f64.sqrt() * t;
        }
        if self.degree >= 2 {
            out[2] = 5f64.sqrt() * 0.5 * (3.0 * t * t - 1.0);
        }
        out
    }
}
