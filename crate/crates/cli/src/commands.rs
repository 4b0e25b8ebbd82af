use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cfo_core::analysis::{compute_errors, conservation_audit, convergence_study, estimator_fields};
use cfo_core::assembly::{solve_cfo, AssemblyConfig, ElementSize};
use cfo_core::dofs::dof_comparison;
use cfo_core::io::{field_text, format_sci, key_value_text, sci};
use cfo_core::mesh::build_uniform_mesh;
use cfo_core::problems::{test_case, Case2Domain, DiffusionProblem, ManufacturedProblem};
use cfo_core::twophase::{
    run_simulation, Mobility, PermeabilitySource, SyntheticSpec, TwoPhaseConfig,
};
use cfo_core::Exec;

use crate::config::{CliError, CliResult, Resolver};
use crate::{Common, ConvergeArgs, DofsArgs, ProblemArgs, SolveArgs, TwophaseArgs};

const PROBLEM_KEYS: &[&str] = &["case", "domain", "k", "element_size", "out", "sequential"];

fn config_err(m: impl Into<String>) -> CliError {
    CliError::Config(m.into())
}

struct ProblemChoice {
    problem: ManufacturedProblem,
    k: usize,
    element_size: ElementSize,
}

fn resolve_problem(r: &mut Resolver, a: &ProblemArgs) -> CliResult<ProblemChoice> {
    let case = r.get("case", a.case, 1usize)?;
    let domain = match r.get("domain", a.domain.clone(), "full".to_string())?.as_str() {
        "full" => Case2Domain::Full,
        "shifted" => Case2Domain::Shifted,
        d => return Err(config_err(format!("domain must be full or shifted, got {d:?}"))),
    };
    let problem = test_case(case, domain).ok_or_else(|| config_err(format!("case must be 1-4, got {case}")))?;
    let k = r.get("k", a.k, 1usize)?;
    if !(1..=3).contains(&k) {
        return Err(config_err(format!("k must be 1, 2 or 3, got {k}")));
    }
    let element_size = match r.get("element_size", a.element_size.clone(), "spacing".to_string())?.as_str() {
        "spacing" => ElementSize::Spacing,
        "diameter" => ElementSize::Diameter,
        s => return Err(config_err(format!("element_size must be spacing or diameter, got {s:?}"))),
    };
    Ok(ProblemChoice { problem, k, element_size })
}

fn resolve_common(r: &mut Resolver, c: &Common, default_out: &str) -> CliResult<(PathBuf, Exec)> {
    let out = r.get("out", c.out.clone(), PathBuf::from(default_out))?;
    let sequential = r.get("sequential", c.sequential.then_some(true), false)?;
    Ok((out, if sequential { Exec::Sequential } else { Exec::default() }))
}

fn assembly_config(beta: f64, choice: &ProblemChoice, exec: Exec) -> CliResult<AssemblyConfig> {
    let mut cfg = AssemblyConfig::new(beta)?.with_exec(exec);
    cfg.element_size = choice.element_size;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, text: &str) -> CliResult<()> {
    fs::write(dir.join(name), text).map_err(|e| CliError::Io(format!("{}: {e}", dir.join(name).display())))
}

fn open_out(dir: &Path, r: &Resolver) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    write(dir, "manifest.txt", &r.manifest())
}

fn beta_tag(beta: f64) -> String {
    format!("{beta}")
}

pub fn solve(a: SolveArgs) -> CliResult<()> {
    let mut keys = PROBLEM_KEYS.to_vec();
    keys.extend(["beta", "n"]);
    let mut r = Resolver::new("solve", a.common.config.as_deref(), &keys)?;
    let choice = resolve_problem(&mut r, &a.problem)?;
    let beta = r.get("beta", a.beta, 1.0)?;
    let n = r.get("n", a.n, 16usize)?;
    let (out, exec) = resolve_common(&mut r, &a.common, "cfo-out")?;
    let cfg = assembly_config(beta, &choice, exec)?;
    let p = &choice.problem;
    let mesh = build_uniform_mesh(p.domain(), n)?;

    let sol = solve_cfo(&mesh, p, choice.k, &cfg, true)?;
    let report = compute_errors(&sol, p, &mesh)?;
    let audit = conservation_audit(&sol, p, &mesh)?;

    open_out(&out, &r)?;
    write(&out, "mesh.txt", &mesh.to_text())?;
    write(&out, "u.txt", &field_text(&sol.u))?;
    let mut nodes = String::new();
    for (i, x) in sol.layout.u_nodes.iter().enumerate() {
        let _ = writeln!(nodes, "{i} {} {}", format_sci(x.x, 12), format_sci(x.y, 12));
    }
    write(&out, "u_nodes.txt", &nodes)?;
    write(&out, "q.txt", &field_text(&sol.q))?;
    write(&out, "lambda.txt", &field_text(&sol.lambda))?;
    let entries: Vec<(String, String)> = [
        ("problem", p.name()),
        ("k", choice.k.to_string()),
        ("beta", beta_tag(beta)),
        ("n", n.to_string()),
        ("h", sci(report.h)),
        ("l2", sci(report.l2)),
        ("h1", sci(report.h1)),
        ("flux", sci(report.flux)),
        ("lambda", sci(report.lambda)),
        ("urh_l2", sci(report.urh_l2)),
        ("urh_h1", sci(report.urh_h1)),
        ("ritz_h1", sci(report.ritz_h1)),
        ("max_conservation_residual", sci(audit.max_residual)),
        ("solver_residual", sci(sol.diagnostics.residual_inf)),
        ("solver_refinement_steps", sol.diagnostics.refinement_steps.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let text = key_value_text(&entries);
    write(&out, "report.txt", &text)?;
    print!("{text}");
    Ok(())
}

pub fn converge(a: ConvergeArgs) -> CliResult<()> {
    let mut keys = PROBLEM_KEYS.to_vec();
    keys.extend(["beta", "sizes"]);
    let mut r = Resolver::new("converge", a.common.config.as_deref(), &keys)?;
    let choice = resolve_problem(&mut r, &a.problem)?;
    let betas = r.get("beta", a.beta.clone(), vec![1.0])?;
    let sizes = r.get("sizes", a.sizes.clone(), vec![8, 16, 32, 64])?;
    let (out, exec) = resolve_common(&mut r, &a.common, "cfo-out")?;
    if betas.is_empty() {
        return Err(config_err("the beta list is empty"));
    }
    if sizes.len() < 2 {
        return Err(config_err("at least two mesh sizes are needed"));
    }
    if let Some(w) = sizes.windows(2).find(|w| w[1] != 2 * w[0]) {
        return Err(config_err(format!("sizes must double at each step, got {} then {}", w[0], w[1])));
    }
    let configs = betas
        .iter()
        .map(|&b| assembly_config(b, &choice, exec))
        .collect::<CliResult<Vec<_>>>()?;

    open_out(&out, &r)?;
    for (beta, cfg) in betas.iter().zip(&configs) {
        let table = convergence_study(&choice.problem, choice.k, cfg, &sizes)?;
        let csv = table.to_csv();
        let name = format!("{}_k{}_beta{}.csv", choice.problem.name(), choice.k, beta_tag(*beta));
        write(&out, &name, &csv)?;
        println!("# {name}");
        print!("{csv}");
    }
    Ok(())
}

pub fn estimator(a: SolveArgs) -> CliResult<()> {
    let mut keys = PROBLEM_KEYS.to_vec();
    keys.extend(["beta", "n"]);
    let mut r = Resolver::new("estimator", a.common.config.as_deref(), &keys)?;
    let choice = resolve_problem(&mut r, &a.problem)?;
    let beta = r.get("beta", a.beta, 1.0)?;
    let n = r.get("n", a.n, 16usize)?;
    let (out, exec) = resolve_common(&mut r, &a.common, "cfo-out")?;
    let cfg = assembly_config(beta, &choice, exec)?;
    let p = &choice.problem;
    let mesh = build_uniform_mesh(p.domain(), n)?;

    let sol = solve_cfo(&mesh, p, choice.k, &cfg, false)?;
    let fields = estimator_fields(&sol, p, &mesh)?;

    open_out(&out, &r)?;
    write(&out, "mesh.txt", &mesh.to_text())?;
    write(&out, "lambda_sq.txt", &field_text(&fields.lambda_sq))?;
    write(&out, "error_sq.txt", &field_text(&fields.error_sq))?;
    let corr = fields.correlation.map_or_else(|| "undefined".to_string(), sci);
    write(&out, "estimator.txt", &format!("correlation={corr}\n"))?;
    println!("correlation={corr}");
    Ok(())
}

const TWOPHASE_KEYS: &[&str] = &[
    "n", "k", "beta", "end_time", "snapshots", "mu_w", "mu_o", "perm", "kappa", "perm_file", "seed", "mean",
    "variance", "correlation_length", "field_n", "stride", "cfl", "max_dt", "max_steps", "out", "sequential",
];

pub fn twophase(a: TwophaseArgs) -> CliResult<()> {
    let mut r = Resolver::new("twophase", a.common.config.as_deref(), TWOPHASE_KEYS)?;
    let d = TwoPhaseConfig::default();
    let n = r.get("n", a.n, d.n)?;
    let k = r.get("k", a.k, d.k)?;
    let beta = r.get("beta", a.beta, d.beta)?;
    let end_time = r.get("end_time", a.end_time, d.end_time)?;
    let snapshots = r.get("snapshots", a.snapshots.clone(), d.snapshots.clone())?;
    let mu_w = r.get("mu_w", a.mu_w, d.mobility.mu_w)?;
    let mu_o = r.get("mu_o", a.mu_o, d.mobility.mu_o)?;
    let permeability = match r.get("perm", a.perm.clone(), "synthetic".to_string())?.as_str() {
        "uniform" => PermeabilitySource::Uniform(r.get("kappa", a.kappa, 1.0)?),
        "file" => {
            let path: Option<PathBuf> = r.get("perm_file", a.perm_file.clone().map(Some), None)?;
            PermeabilitySource::File(path.ok_or_else(|| config_err("--perm file needs --perm-file"))?)
        }
        "synthetic" => {
            let s = SyntheticSpec::default();
            let field_n = r.get("field_n", a.field_n, s.nx)?;
            PermeabilitySource::Synthetic(SyntheticSpec {
                nx: field_n,
                ny: field_n,
                mean: r.get("mean", a.mean, s.mean)?,
                variance: r.get("variance", a.variance, s.variance)?,
                correlation_length: r.get("correlation_length", a.correlation_length, s.correlation_length)?,
                seed: r.get("seed", a.seed, s.seed)?,
            })
        }
        p => return Err(config_err(format!("perm must be synthetic, uniform or file, got {p:?}"))),
    };
    let pressure_stride = r.get("stride", a.stride, d.pressure_stride)?;
    let cfl = r.get("cfl", a.cfl, d.cfl)?;
    let max_dt = r.get("max_dt", a.max_dt.map(Some), d.max_dt)?;
    let max_steps = r.get("max_steps", a.max_steps.map(Some), d.max_steps)?;
    let (out, exec) = resolve_common(&mut r, &a.common, "cfo-twophase")?;
    let config = TwoPhaseConfig {
        n,
        k,
        beta,
        end_time,
        snapshots,
        mobility: Mobility::new(mu_w, mu_o)?,
        permeability,
        pressure_stride,
        cfl,
        max_dt,
        max_steps,
        exec,
    };
    config.validate()?;
    let field = config.permeability.load()?;
    r.note("relative permeabilities: quadratic Corey, total mobility S^2/mu_w + (1-S)^2/mu_o");
    r.note("porosity 1; p = 1 on x = 0, p = 0 on x = 1, no flow on y = 0 and y = 1; S = 1 injected");

    let result = run_simulation(&config)?;

    open_out(&out, &r)?;
    write(&out, "permeability.txt", &field.to_text())?;
    for (i, snap) in result.snapshots.iter().enumerate() {
        write(&out, &format!("saturation_{i:03}.txt"), &snap.to_text())?;
    }
    let last = cfo_core::twophase::Snapshot { time: result.state.time, saturation: result.state.saturation.clone() };
    write(&out, "saturation_final.txt", &last.to_text())?;
    let mut hist = String::from("step,time,dt,mass_error,min_saturation,max_saturation,conservation\n");
    for (i, h) in result.history.iter().enumerate() {
        let _ = writeln!(
            hist,
            "{},{},{},{},{},{},{}",
            i + 1,
            sci(h.time),
            sci(h.dt),
            sci(h.mass_error),
            sci(h.min_saturation),
            sci(h.max_saturation),
            sci(h.conservation)
        );
    }
    write(&out, "history.csv", &hist)?;
    let worst = |f: fn(&cfo_core::twophase::StepRecord) -> f64| result.history.iter().map(f).fold(0.0, f64::max);
    println!("steps={}", result.state.steps);
    println!("time={}", sci(result.state.time));
    println!("max_mass_error={}", sci(worst(|h| h.mass_error)));
    println!("max_conservation_residual={}", sci(worst(|h| h.conservation)));
    println!("snapshots={}", result.snapshots.len());
    Ok(())
}

pub fn dofs(a: DofsArgs) -> CliResult<()> {
    if let Some(k) = a.k.iter().find(|&&k| k == 0) {
        return Err(config_err(format!("degrees must be at least 1, got {k}")));
    }
    println!("k,CFO,RT,BDM");
    for k in a.k {
        let (cfo, rt, bdm) = dof_comparison(k);
        println!("{k},{cfo},{rt},{bdm}");
    }
    Ok(())
}
