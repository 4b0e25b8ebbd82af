//! Scalar permeability on a regular cell grid over the unit square.
//!
//! Values are stored as `ln κ`. Text format: a header `nx ny`, then `ny`
//! rows of `nx` values each; the first row is the bottom of the domain.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CfoError, Result};
use crate::geom::Point;
use crate::mesh::TriMesh;

/// Parameters of a log-normal field with Gaussian correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub nx: usize,
    pub ny: usize,
    /// Mean of `ln κ`.
    pub mean: f64,
    /// Variance of `ln κ`.
    pub variance: f64,
    /// Correlation length as a fraction of the domain width.
    pub correlation_length: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec { nx: 64, ny: 64, mean: 0.0, variance: 1.0, correlation_length: 0.05, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermeabilityField {
    pub nx: usize,
    pub ny: usize,
    /// Row-major `ln κ`, row 0 at `y = 0`.
    pub log_k: Vec<f64>,
}

impl PermeabilityField {
    pub fn uniform(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(CfoError::InvalidConfig(format!("permeability must be positive, got {kappa}")));
        }
        Ok(PermeabilityField { nx: 1, ny: 1, log_k: vec![kappa.ln()] })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut dim = |what: &str| -> Result<usize> {
            let tok = tokens
                .next()
                .ok_or_else(|| CfoError::Parse(format!("permeability header is missing {what}")))?;
            tok.parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| CfoError::Parse(format!("bad permeability header value {what} = {tok:?}")))
        };
        let nx = dim("nx")?;
        let ny = dim("ny")?;
        let log_k = tokens
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CfoError::Parse(format!("non-numeric permeability entry {t:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if log_k.len() != nx * ny {
            return Err(CfoError::Parse(format!(
                "permeability grid {nx}x{ny} needs {} values, found {}",
                nx * ny,
                log_k.len()
            )));
        }
        Ok(PermeabilityField { nx, ny, log_k })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CfoError::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.nx, self.ny);
        for row in self.log_k.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// White noise smoothed by a separable Gaussian kernel, rescaled to the
    /// requested mean and variance of `ln κ`.
    pub fn synthetic(spec: &SyntheticSpec) -> Result<Self> {
        let SyntheticSpec { nx, ny, mean, variance, correlation_length, seed } = *spec;
        if nx == 0 || ny == 0 {
            return Err(CfoError::InvalidConfig("synthetic grid must be at least 1x1".into()));
        }
        if !(variance >= 0.0 && variance.is_finite() && mean.is_finite()) {
            return Err(CfoError::InvalidConfig(format!("bad log-permeability moments mean={mean} variance={variance}")));
        }
        if !(correlation_length > 0.0 && correlation_length.is_finite()) {
            return Err(CfoError::InvalidConfig(format!("correlation length must be positive, got {correlation_length}")));
        }
        if variance == 0.0 {
            return Ok(PermeabilityField { nx, ny, log_k: vec![mean; nx * ny] });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise: Vec<f64> = (0..nx * ny).map(|_| StandardNormal.sample(&mut rng)).collect();
        let sx = smooth_rows(&noise, nx, ny, correlation_length * nx as f64);
        let z = transpose(&smooth_rows(&transpose(&sx, nx, ny), ny, nx, correlation_length * ny as f64), ny, nx);
        let m = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / z.len() as f64;
        let scale = if var > 0.0 { (variance / var).sqrt() } else { 0.0 };
        Ok(PermeabilityField { nx, ny, log_k: z.iter().map(|v| mean + scale * (v - m)).collect() })
    }

    /// `κ` at a point of the unit square (cells are half-open, the top and
    /// right edges belong to the last cell).
    pub fn kappa_at(&self, p: Point) -> f64 {
        let i = ((p.x * self.nx as f64).floor().max(0.0) as usize).min(self.nx - 1);
        let j = ((p.y * self.ny as f64).floor().max(0.0) as usize).min(self.ny - 1);
        self.log_k[j * self.nx + i].exp()
    }

    /// `κ` sampled at each triangle centroid.
    pub fn for_mesh(&self, mesh: &TriMesh) -> Vec<f64> {
        mesh.tri_centroids.iter().map(|&c| self.kappa_at(c)).collect()
    }
}

fn transpose(v: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for j in 0..ny {
        for i in 0..nx {
            out[i * ny + j] = v[j * nx + i];
        }
    }
    out
}

/// Convolves each row with a Gaussian of standard deviation `sigma` cells,
/// reflecting at the ends.
fn smooth_rows(v: &[f64], nx: usize, ny: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius).map(|d| (-0.5 * (d as f64 / sigma).powi(2)).exp()).collect();
    let reflect = |i: isize| -> usize {
        let n = nx as isize;
        let period = 2 * n;
        let mut m = i.rem_euclid(period);
        if m >= n {
            m = period - 1 - m;
        }
        m as usize
    };
    let mut out = vec![0.0; v.len()];
    for j in 0..ny {
        let row = &v[j * nx..(j + 1) * nx];
        for i in 0..nx {
            out[j * nx + i] = kernel
                .iter()
                .enumerate()
                .map(|(o, w)| w * row[reflect(i as isize + o as isize - radius)])
                .sum();
        }
    }
    out
}
