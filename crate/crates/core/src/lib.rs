//! High-order conservative flux optimization (CFO) finite elements.
//!
//! The scheme pairs a continuous P_k Galerkin approximation `u_h` with a
//! discontinuous P_{k-1} edge flux `q_h` and a piecewise-constant multiplier
//! `λ_h`. The flux is the minimizer of a stabilized mismatch functional
//! subject to exact mass conservation on every triangle, which leads to a
//! symmetric indefinite saddle-point system.
//!
//! Module map:
//!
//! * [`mesh`]: uniform triangulations of rectangles with oriented edges.
//! * [`quadrature`], [`basis`], [`dofs`]: reference-element machinery.
//! * [`problems`]: the manufactured test problems and the coefficient trait.
//! * [`assembly`]: the CFO saddle-point system and the Ritz-Galerkin system.
//! * [`solver`]: sparse direct solvers for both.
//! * [`analysis`]: error norms, conservation audits and convergence tables.
//! * [`twophase`]: operator-splitting driver for immiscible displacement.

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod dofs;
pub mod error;
pub mod exec;
pub mod geom;
pub mod io;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod twophase;

pub use analysis::{compute_errors, conservation_audit, convergence_study, estimator_fields, ConvergenceTable, ErrorReport};
pub use assembly::{assemble_cfo, assemble_ritz, solve_cfo, AssemblyConfig, CfoSolution, SaddleSystem};
pub use dofs::{build_dof_layout, local_dof_count, DofLayout, SpaceConfig};
pub use error::{CfoError, Result};
pub use exec::Exec;
pub use geom::{Point, Rect, Tensor2};
pub use mesh::{build_uniform_mesh, TriMesh};
pub use twophase::{run_simulation, TwoPhaseConfig};
pub use problems::{test_case_1, test_case_2, test_case_3, test_case_4, DiffusionProblem};
