use cfo_core::assembly::{assemble_cfo, AssemblyConfig};
use cfo_core::dofs::build_dof_layout;
use cfo_core::mesh::build_uniform_mesh;
use cfo_core::problems::{test_case_1, test_case_4, DiffusionProblem};
use cfo_core::solver::{solve_spd, solve_symmetric_indefinite};
use cfo_core::sparse::{inf_norm, SparseMatrix};
use proptest::prelude::*;

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    inf_norm(&d) / inf_norm(b)
}

/// Log-uniform scaling factors in `[1e-2, 1e2]` from a repeating seed.
fn scaling(seed: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| 10f64.powf(2.0 * seed[(i * 13 + 5) % seed.len()])).collect()
}

fn cfo_system(problem: &dyn DiffusionProblem, n: usize, k: usize, beta: f64) -> (SparseMatrix, Vec<f64>) {
    let mesh = build_uniform_mesh(problem.domain(), n).unwrap();
    let layout = build_dof_layout(&mesh, k).unwrap();
    let sys = assemble_cfo(&mesh, &layout, problem, &AssemblyConfig::new(beta).unwrap()).unwrap();
    (sys.matrix, sys.rhs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Solving `(DMD) y = D b` and returning `D y` recovers `x`.
    #[test]
    fn diagonal_scaling_is_harmless(
        seed in prop::collection::vec(-1.0..1.0f64, 31),
        k in 1usize..=3,
        case4 in any::<bool>(),
    ) {
        let n = if k == 3 { 8 } else { 16 };
        let (m, b) = if case4 { cfo_system(&test_case_4(), n, k, 2.0) } else { cfo_system(&test_case_1(), n, k, 1.0) };
        let x = solve_symmetric_indefinite(&m, &b).unwrap().x;
        let d = scaling(&seed, m.n);
        let db: Vec<f64> = b.iter().zip(&d).map(|(v, s)| v * s).collect();
        let y = solve_symmetric_indefinite(&m.scaled_symmetric(&d), &db).unwrap().x;
        let xs: Vec<f64> = y.iter().zip(&d).map(|(v, s)| v * s).collect();
        prop_assert!(rel_diff(&xs, &x) <= 1e-8, "difference {}", rel_diff(&xs, &x));
    }

    #[test]
    fn random_spd_systems(n in 1usize..40, vals in prop::collection::vec(-1.0..1.0f64, 1600)) {
        // M = GᵀG + I for a random sparse-ish G.
        let g: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if (i * 7 + j * 3) % 5 == 0 { vals[i * 40 + j] } else { 0.0 }).collect()).collect();
        let dense: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|l| g[l][i] * g[l][j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let m = SparseMatrix::from_dense(&dense, true).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| vals[(i * 31) % 1600]).collect();
        let b = m.matvec(&x_true);
        let chol = solve_spd(&m, &b).unwrap();
        let lu = solve_symmetric_indefinite(&m, &b).unwrap();
        prop_assert!(rel_diff(&chol.x, &x_true) < 1e-10);
        prop_assert!(rel_diff(&lu.x, &x_true) < 1e-10);
    }

    #[test]
    fn random_saddle_systems(n in 2usize..30, m in 1usize..10, vals in prop::collection::vec(-1.0..1.0f64, 1600)) {
        prop_assume!(m < n);
        // [A Bᵀ; B 0] with A = diag(1..2) and B of full row rank.
        let size = n + m;
        let mut dense = vec![vec![0.0; size]; size];
        for i in 0..n {
            dense[i][i] = 1.5 + 0.5 * vals[i];
        }
        for r in 0..m {
            for c in 0..n {
                let v = if c == r { 2.0 } else { 0.3 * vals[(r * 37 + c) % 1600] };
                dense[n + r][c] = v;
                dense[c][n + r] = v;
            }
        }
        let mat = SparseMatrix::from_dense(&dense, true).unwrap();
        let x_true: Vec<f64> = (0..size).map(|i| vals[(i * 17 + 1) % 1600]).collect();
        let b = mat.matvec(&x_true);
        let sol = solve_symmetric_indefinite(&mat, &b).unwrap();
        prop_assert!(rel_diff(&sol.x, &x_true) < 1e-10);
    }
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let (m, b) = cfo_system(&test_case_1(), 16, 2, 2.0);
    let a = solve_symmetric_indefinite(&m, &b).unwrap();
    let c = solve_symmetric_indefinite(&m, &b).unwrap();
    assert_eq!(a.x, c.x);
    assert_eq!(a.diagnostics, c.diagnostics);
}
