//! Operator splitting for immiscible two-phase displacement in a porous
//! unit square.
//!
//! Each step solves the pressure equation `-div(λ(S) κ ∇p) = 0` with the CFO
//! scheme (`p = 1` at `x = 0`, `p = 0` at `x = 1`, no flow through `y = 0`
//! and `y = 1`), then advances the saturation with an explicit upwind
//! finite-volume step driven by the element-conservative edge flux.

pub mod permeability;
pub mod transport;

use std::fmt::Write as _;

pub use permeability::{PermeabilityField, SyntheticSpec};
pub use transport::{cfl_time_step, transport_step, InflowSaturation, Mobility, TransportUpdate};

use crate::analysis::conservation_audit;
use crate::assembly::{solve_cfo, AssemblyConfig};
use crate::error::{CfoError, Result};
use crate::exec::Exec;
use crate::geom::{Point, Rect, Tensor2};
use crate::io::format_sci;
use crate::mesh::{build_uniform_mesh, BoundarySide, TriMesh};
use crate::problems::{BoundaryKind, Cell, DiffusionProblem};

/// Pressure equation with the coefficient frozen at the current saturation.
pub struct PressureProblem<'a> {
    pub mesh: &'a TriMesh,
    /// Per-triangle `λ(S_D) κ_D`.
    pub coefficient: Vec<f64>,
}

impl PressureProblem<'_> {
    fn triangle_of(&self, c: Cell) -> usize {
        if c.index < self.coefficient.len() {
            return c.index;
        }
        // Uniform mesh lookup for evaluations not tied to a triangle.
        let n = self.mesh.n;
        let d = self.mesh.domain;
        let fx = ((c.centroid.x - d.x0) / d.width() * n as f64).clamp(0.0, n as f64 - 1e-9);
        let fy = ((c.centroid.y - d.y0) / d.height() * n as f64).clamp(0.0, n as f64 - 1e-9);
        let (i, j) = (fx.floor(), fy.floor());
        let upper = fy - j > fx - i;
        2 * (j as usize * n + i as usize) + upper as usize
    }
}

impl DiffusionProblem for PressureProblem<'_> {
    fn name(&self) -> String {
        "two-phase pressure".into()
    }

    fn domain(&self) -> Rect {
        self.mesh.domain
    }

    fn alpha(&self, _x: Point, cell: Cell) -> Tensor2 {
        Tensor2::IDENTITY.scaled(self.coefficient[self.triangle_of(cell)])
    }

    fn source(&self, _x: Point, _cell: Cell) -> f64 {
        0.0
    }

    fn dirichlet(&self, x: Point) -> f64 {
        if x.x < 0.5 {
            1.0
        } else {
            0.0
        }
    }

    fn boundary_kind(&self, side: BoundarySide) -> BoundaryKind {
        match side {
            BoundarySide::Left | BoundarySide::Right => BoundaryKind::Dirichlet,
            BoundarySide::Bottom | BoundarySide::Top => BoundaryKind::NoFlow,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoPhaseState {
    /// Water saturation per triangle.
    pub saturation: Vec<f64>,
    pub pressure: Vec<f64>,
    /// Edge flux coefficients of the last pressure solve.
    pub flux: Vec<f64>,
    /// `∫_e q ds` per edge, along the edge normal.
    pub edge_flux: Vec<f64>,
    pub time: f64,
    pub dt: f64,
    pub steps: usize,
    /// Largest relative conservation residual of the last pressure solve.
    pub conservation: f64,
}

impl TwoPhaseState {
    pub fn initial(mesh: &TriMesh) -> Self {
        TwoPhaseState {
            saturation: vec![0.0; mesh.num_triangles()],
            pressure: Vec::new(),
            flux: Vec::new(),
            edge_flux: vec![0.0; mesh.num_edges()],
            time: 0.0,
            dt: 0.0,
            steps: 0,
            conservation: 0.0,
        }
    }

    /// Water volume `Σ S_D |D|`.
    pub fn water_volume(&self, mesh: &TriMesh) -> f64 {
        self.saturation.iter().zip(&mesh.tri_areas).map(|(s, a)| s * a).sum()
    }
}

/// Solves the pressure equation for the current saturation.
pub fn pressure_step(
    state: &mut TwoPhaseState,
    kappa: &[f64],
    mesh: &TriMesh,
    k: usize,
    config: &AssemblyConfig,
    mobility: &Mobility,
) -> Result<()> {
    if let Some((t, &s)) = state.saturation.iter().enumerate().find(|(_, s)| !(0.0..=1.0).contains(*s)) {
        return Err(CfoError::SaturationOutOfRange { element: t, value: s });
    }
    let problem = PressureProblem {
        mesh,
        coefficient: state.saturation.iter().zip(kappa).map(|(&s, &kp)| mobility.total(s) * kp).collect(),
    };
    let sol = solve_cfo(mesh, &problem, k, config, false)?;
    state.conservation = conservation_audit(&sol, &problem, mesh)?.max_relative();
    state.edge_flux = (0..mesh.num_edges()).map(|e| mesh.edge_lengths[e] * sol.q[sol.layout.q_dof(e, 0)]).collect();
    state.pressure = sol.u;
    state.flux = sol.q;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum PermeabilitySource {
    Uniform(f64),
    File(std::path::PathBuf),
    Synthetic(SyntheticSpec),
}

impl PermeabilitySource {
    pub fn load(&self) -> Result<PermeabilityField> {
        match self {
            PermeabilitySource::Uniform(k) => PermeabilityField::uniform(*k),
            PermeabilitySource::File(p) => PermeabilityField::load(p),
            PermeabilitySource::Synthetic(spec) => PermeabilityField::synthetic(spec),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhaseConfig {
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub end_time: f64,
    /// Times at which the saturation is recorded; steps are shortened to hit them.
    pub snapshots: Vec<f64>,
    pub mobility: Mobility,
    pub permeability: PermeabilitySource,
    /// Re-solve the pressure every `pressure_stride` transport steps.
    pub pressure_stride: usize,
    pub cfl: f64,
    /// Optional cap on the step length.
    pub max_dt: Option<f64>,
    /// Stop after this many steps even if `end_time` is not reached.
    pub max_steps: Option<usize>,
    pub exec: Exec,
}

impl Default for TwoPhaseConfig {
    fn default() -> Self {
        TwoPhaseConfig {
            n: 32,
            k: 1,
            beta: 1.0,
            end_time: 0.25,
            snapshots: vec![0.02, 0.1, 0.25],
            mobility: Mobility::default(),
            permeability: PermeabilitySource::Synthetic(SyntheticSpec::default()),
            pressure_stride: 1,
            cfl: 0.9,
            max_dt: None,
            max_steps: None,
            exec: Exec::default(),
        }
    }
}

impl TwoPhaseConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CfoError::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(1..=3).contains(&self.k) {
            return Err(CfoError::UnsupportedDegree(self.k));
        }
        if !(self.end_time >= 0.0 && self.end_time.is_finite()) {
            return bad(format!("end time must be finite and non-negative, got {}", self.end_time));
        }
        if let Some(t) = self.snapshots.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return bad(format!("bad snapshot time {t}"));
        }
        if self.pressure_stride == 0 {
            return bad("pressure stride must be at least 1".into());
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return bad(format!("CFL factor must lie in (0, 0.9], got {}", self.cfl));
        }
        if let Some(dt) = self.max_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("max dt must be positive, got {dt}"));
            }
        }
        Mobility::new(self.mobility.mu_w, self.mobility.mu_o)?;
        AssemblyConfig::new(self.beta)?;
        Ok(())
    }
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    pub dt: f64,
    /// `|ΔΣ S|D| - boundary inflow|`.
    pub mass_error: f64,
    pub min_saturation: f64,
    pub max_saturation: f64,
    pub conservation: f64,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub saturation: Vec<f64>,
}

impl Snapshot {
    /// Time on the first line, then one `tri_id S` row per triangle.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", format_sci(self.time, 12));
        for (i, s) in self.saturation.iter().enumerate() {
            let _ = writeln!(out, "{i} {}", format_sci(*s, 12));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub mesh: TriMesh,
    pub kappa: Vec<f64>,
    pub state: TwoPhaseState,
    pub snapshots: Vec<Snapshot>,
    pub history: Vec<StepRecord>,
    /// Water that entered through the boundary over the whole run.
    pub injected: f64,
}

/// Runs the splitting loop from `S ≡ 0` to `end_time`.
pub fn run_simulation(config: &TwoPhaseConfig) -> Result<SimulationResult> {
    config.validate()?;
    let mesh = build_uniform_mesh(Rect::unit(), config.n)?;
    let field = config.permeability.load()?;
    let kappa = field.for_mesh(&mesh);
    let asm = AssemblyConfig::new(config.beta)?.with_exec(config.exec);
    let mut state = TwoPhaseState::initial(&mesh);
    let mut pending: Vec<f64> = config.snapshots.iter().copied().filter(|&t| t <= config.end_time).collect();
    pending.sort_by(f64::total_cmp);
    pending.dedup();
    let mut snapshots = Vec::new();
    let mut history = Vec::new();
    let mut injected = 0.0;
    let take = |state: &TwoPhaseState, pending: &mut Vec<f64>, snaps: &mut Vec<Snapshot>| {
        while pending.first().is_some_and(|&t| t <= state.time * (1.0 + 1e-12) + 1e-15) {
            snaps.push(Snapshot { time: pending.remove(0), saturation: state.saturation.clone() });
        }
    };
    take(&state, &mut pending, &mut snapshots);
    let tol = 1e-12 * config.end_time.max(1.0);
    while state.time < config.end_time - tol {
        if config.max_steps.is_some_and(|m| state.steps >= m) {
            break;
        }
        if state.steps.is_multiple_of(config.pressure_stride) {
            pressure_step(&mut state, &kappa, &mesh, config.k, &asm, &config.mobility)?;
        }
        let mut dt = cfl_time_step(&mesh, &state.edge_flux, &config.mobility, config.cfl);
        if let Some(cap) = config.max_dt {
            dt = dt.min(cap);
        }
        let target = pending.first().copied().unwrap_or(config.end_time).min(config.end_time);
        let land = target - state.time <= dt;
        if land {
            dt = target - state.time;
        }
        if !dt.is_finite() {
            return Err(CfoError::InvalidProblem("no flow through the domain; the time step is unbounded".into()));
        }
        let before = state.water_volume(&mesh);
        let upd = transport_step(
            &mesh,
            &state.saturation,
            &state.edge_flux,
            dt,
            &config.mobility,
            &InflowSaturation::default(),
            config.exec,
        )?;
        state.saturation = upd.saturation;
        state.time = if land { target } else { state.time + dt };
        state.dt = dt;
        state.steps += 1;
        injected += upd.boundary_inflow;
        let after = state.water_volume(&mesh);
        history.push(StepRecord {
            time: state.time,
            dt,
            mass_error: (after - before - upd.boundary_inflow).abs(),
            min_saturation: state.saturation.iter().copied().fold(f64::INFINITY, f64::min),
            max_saturation: state.saturation.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            conservation: state.conservation,
        });
        take(&state, &mut pending, &mut snapshots);
    }
    Ok(SimulationResult { mesh, kappa, state, snapshots, history, injected })
}
