//! Explicit upwind finite-volume transport of the water saturation.

use crate::error::{CfoError, Result};
use crate::exec::Exec;
use crate::mesh::{BoundarySide, TriMesh};

/// Quadratic Corey relative permeabilities with constant viscosities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobility {
    pub mu_w: f64,
    pub mu_o: f64,
}

impl Default for Mobility {
    fn default() -> Self {
        Mobility { mu_w: 1.0, mu_o: 1.0 }
    }
}

impl Mobility {
    pub fn new(mu_w: f64, mu_o: f64) -> Result<Self> {
        if !(mu_w > 0.0 && mu_o > 0.0 && mu_w.is_finite() && mu_o.is_finite()) {
            return Err(CfoError::InvalidConfig(format!("viscosities must be positive, got {mu_w}, {mu_o}")));
        }
        Ok(Mobility { mu_w, mu_o })
    }

    /// Total mobility `λ(S) = S²/μ_w + (1-S)²/μ_o`.
    pub fn total(&self, s: f64) -> f64 {
        s * s / self.mu_w + (1.0 - s) * (1.0 - s) / self.mu_o
    }

    /// Fractional flow of water `f(S)`.
    pub fn fractional(&self, s: f64) -> f64 {
        s * s / self.mu_w / self.total(s)
    }

    pub fn fractional_derivative(&self, s: f64) -> f64 {
        let a = s * s / self.mu_w;
        let b = (1.0 - s) * (1.0 - s) / self.mu_o;
        let da = 2.0 * s / self.mu_w;
        let db = -2.0 * (1.0 - s) / self.mu_o;
        (da * b - a * db) / ((a + b) * (a + b))
    }

    /// `max f'` on `[0, 1]`, by dense sampling.
    pub fn max_fractional_derivative(&self) -> f64 {
        (0..=10_000)
            .map(|i| self.fractional_derivative(i as f64 / 10_000.0))
            .fold(0.0, f64::max)
    }
}

/// Saturation entering through each side when the flux points inward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InflowSaturation {
    pub left: f64,
    pub other: f64,
}

impl Default for InflowSaturation {
    fn default() -> Self {
        InflowSaturation { left: 1.0, other: 0.0 }
    }
}

impl InflowSaturation {
    fn at(&self, side: BoundarySide) -> f64 {
        match side {
            BoundarySide::Left => self.left,
            _ => self.other,
        }
    }
}

/// Largest stable step: `cfl · min_D |D| / (max f' · Σ_e |Q_e|)`.
pub fn cfl_time_step(mesh: &TriMesh, edge_flux: &[f64], mobility: &Mobility, cfl: f64) -> f64 {
    let fmax = mobility.max_fractional_derivative();
    (0..mesh.num_triangles())
        .map(|t| {
            let out: f64 = mesh.tri_edges[t].iter().map(|&e| edge_flux[e].abs()).sum();
            if out > 0.0 {
                cfl * mesh.tri_areas[t] / (fmax * out)
            } else {
                f64::INFINITY
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Result of one transport step.
#[derive(Debug, Clone)]
pub struct TransportUpdate {
    pub saturation: Vec<f64>,
    /// Net water volume entering through the boundary during the step.
    pub boundary_inflow: f64,
}

/// Values this close outside `[0, 1]` are rounding and are snapped back.
const BOUND_SLACK: f64 = 1e-12;

/// `S_D ← S_D - (Δt/|D|) Σ_e σ Q_e f(S_up)` with `Q_e = ∫_e q ds` along `n_e`.
pub fn transport_step(
    mesh: &TriMesh,
    saturation: &[f64],
    edge_flux: &[f64],
    dt: f64,
    mobility: &Mobility,
    inflow: &InflowSaturation,
    exec: Exec,
) -> Result<TransportUpdate> {
    let limit = cfl_time_step(mesh, edge_flux, mobility, 0.9);
    if dt > limit * (1.0 + 1e-12) {
        return Err(CfoError::CflViolation { dt, suggested: limit });
    }
    // Water flux along n_e, upwinded by the sign of Q_e.
    let water: Vec<f64> = exec.map(mesh.num_edges(), |e| {
        let q = edge_flux[e];
        let (t1, t2) = mesh.edge_triangles[e];
        let i1 = mesh.tri_edges[t1].iter().position(|&x| x == e).unwrap();
        // t1 sees n_e as outward when its sign is +1.
        let s1_outward = mesh.tri_signs[t1][i1] > 0.0;
        let up = match (q >= 0.0, s1_outward, t2) {
            (true, true, _) | (false, false, _) => saturation[t1],
            (_, _, Some(t2)) => saturation[t2],
            (_, _, None) => inflow.at(mesh.edge_boundary[e].expect("boundary edge")),
        };
        q * mobility.fractional(up)
    });
    let saturation = exec
        .map(mesh.num_triangles(), |t| {
            let net: f64 = (0..3).map(|i| mesh.tri_signs[t][i] * water[mesh.tri_edges[t][i]]).sum();
            let s = saturation[t] - dt / mesh.tri_areas[t] * net;
            if (-BOUND_SLACK..=1.0 + BOUND_SLACK).contains(&s) {
                Ok(s.clamp(0.0, 1.0))
            } else {
                Err(CfoError::SaturationOutOfRange { element: t, value: s })
            }
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let boundary_inflow = (0..mesh.num_edges())
        .filter(|&e| mesh.is_boundary_edge(e))
        .map(|e| {
            let t = mesh.edge_triangles[e].0;
            let i = mesh.tri_edges[t].iter().position(|&x| x == e).unwrap();
            -dt * mesh.tri_signs[t][i] * water[e]
        })
        .sum();
    Ok(TransportUpdate { saturation, boundary_inflow })
}
