//! Command-line front door for the ac2cd solver and its verification
//! harness.
//!
//! Subcommands: `solve` an instance file, `verify` a named suite,
//! `complexity` (bounds vs empirical identification), and `sweep` a
//! parameter grid. Fixed seeds make every run byte-reproducible in its
//! report files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ac2cd::instance::Instance;
use ac2cd::oracle::solve_qp_enumerate;
use ac2cd::solver::{
    identification_detector, solve, PermutationStrategy, SolveStatus, SolverConfig, TraceLevel,
};
use ac2cd::suites::{run_suite, SuiteKind, SuiteOptions};
use ac2cd::theory::{complexity_bounds, exact_table_for, identification_radii, rate_constants};
use ac2cd::zoo::{default_x0, smallest_hessian_eigenvalue};
use ac2cd::StepStrategy;

#[derive(Parser)]
#[command(
    name = "ac2cd",
    about = "Almost cyclic 2-coordinate descent with a verification harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file; writes trace.jsonl, summary.csv and
    /// report.json into the output directory.
    Solve {
        /// Instance JSON path.
        instance: PathBuf,
        /// Starting point as comma-separated values (default: analytic
        /// center of the bounds projected onto the hyperplane).
        #[arg(long)]
        x0: Option<String>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Run a named verification suite over generated instances.
    Verify {
        /// One of: seminorm, lemmas, descent, stepsize, interiority, rate,
        /// identification.
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Random trials for the pointwise suites.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Battery size for the trace suites.
        #[arg(long, default_value_t = 20)]
        instances: usize,
        /// Negative control: corrupt the Lipschitz tables; the suite must
        /// then report violations and exit nonzero.
        #[arg(long)]
        corrupt_lipschitz: bool,
        /// Write the report JSON here (also printed to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare identification bounds with the empirical iteration counts on
    /// one strongly convex instance.
    Complexity {
        instance: PathBuf,
        #[arg(long)]
        x0: Option<String>,
        /// Write report.json here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Run the solver over a parameter grid; writes sweep.csv.
    Sweep {
        instance: PathBuf,
        /// Grid like "tau=0.25,0.5,1.0;epsilon=0.3,0.5" over numeric config
        /// keys.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
    },
}

/// Solver configuration: file plus flag overrides (flags win). Defaults:
/// tau=0.5, gamma=0.1, delta=0.5, epsilon=0.5, a_u=1, a_l=1e-8,
/// kkt_tol=1e-8, active_tol=1e-8, max_outer=100000,
/// permutation=reshuffle_per_outer, strategy=interiority_preserving.
#[derive(Args, Clone)]
struct ConfigFlags {
    /// key=value config file (same keys as the flags below).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Lower cap parameter A_l.
    #[arg(long)]
    a_l: Option<f64>,
    /// Upper cap parameter A_u.
    #[arg(long)]
    a_u: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// fixed_clamp | interiority_preserving
    #[arg(long)]
    strategy: Option<String>,
    /// identity | fixed_shuffle | reshuffle_per_outer
    #[arg(long)]
    permutation: Option<String>,
    /// Seed for the permutation strategies (fallback: AC2CD_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kkt_tol: Option<f64>,
    #[arg(long)]
    active_tol: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    /// summary | full
    #[arg(long)]
    trace_level: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve {
            instance,
            x0,
            out_dir,
            config,
        } => cmd_solve(&instance, x0, &out_dir, &config),
        Command::Verify {
            suite,
            seed,
            trials,
            instances,
            corrupt_lipschitz,
            out,
        } => cmd_verify(
            &suite,
            seed,
            trials,
            instances,
            corrupt_lipschitz,
            out.as_deref(),
        ),
        Command::Complexity {
            instance,
            x0,
            out_dir,
            config,
        } => cmd_complexity(&instance, x0, out_dir.as_deref(), &config),
        Command::Sweep {
            instance,
            grid,
            out_dir,
            config,
        } => cmd_sweep(&instance, &grid, &out_dir, &config),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn env_seed() -> Option<u64> {
    std::env::var("AC2CD_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
}

/// Assemble the solver configuration from defaults, a key=value file and
/// flag overrides, in that order.
fn build_config(flags: &ConfigFlags) -> Result<SolverConfig, String> {
    let mut tau = 0.5_f64;
    let mut gamma = 0.1_f64;
    let mut delta = 0.5_f64;
    let mut a_l = 1e-8_f64;
    let mut a_u = 1.0_f64;
    let mut epsilon = 0.5_f64;
    let mut strategy = "interiority_preserving".to_string();
    let mut permutation = "reshuffle_per_outer".to_string();
    let mut seed: Option<u64> = None;
    let mut kkt_tol = 1e-8_f64;
    let mut active_tol = 1e-8_f64;
    let mut max_outer = 100_000_usize;
    let mut trace_level = "full".to_string();

    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {} is not key=value: {raw:?}", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: std::num::ParseFloatError| format!("config key {key}: {e}");
            match key {
                "tau" => tau = value.parse().map_err(bad)?,
                "gamma" => gamma = value.parse().map_err(bad)?,
                "delta" => delta = value.parse().map_err(bad)?,
                "a_l" => a_l = value.parse().map_err(bad)?,
                "a_u" => a_u = value.parse().map_err(bad)?,
                "epsilon" => epsilon = value.parse().map_err(bad)?,
                "strategy" => strategy = value.to_string(),
                "permutation" => permutation = value.to_string(),
                "seed" => seed = Some(value.parse().map_err(|e| format!("config key seed: {e}"))?),
                "kkt_tol" => kkt_tol = value.parse().map_err(bad)?,
                "active_tol" => active_tol = value.parse().map_err(bad)?,
                "max_outer" => {
                    max_outer = value
                        .parse()
                        .map_err(|e| format!("config key max_outer: {e}"))?
                }
                "trace_level" => trace_level = value.to_string(),
                other => return Err(format!("unknown config key {other:?}")),
            }
        }
    }

    if let Some(v) = flags.tau {
        tau = v;
    }
    if let Some(v) = flags.gamma {
        gamma = v;
    }
    if let Some(v) = flags.delta {
        delta = v;
    }
    if let Some(v) = flags.a_l {
        a_l = v;
    }
    if let Some(v) = flags.a_u {
        a_u = v;
    }
    if let Some(v) = flags.epsilon {
        epsilon = v;
    }
    if let Some(v) = &flags.strategy {
        strategy = v.clone();
    }
    if let Some(v) = &flags.permutation {
        permutation = v.clone();
    }
    if let Some(v) = flags.seed {
        seed = Some(v);
    }
    if let Some(v) = flags.kkt_tol {
        kkt_tol = v;
    }
    if let Some(v) = flags.active_tol {
        active_tol = v;
    }
    if let Some(v) = flags.max_outer {
        max_outer = v;
    }
    if let Some(v) = &flags.trace_level {
        trace_level = v.clone();
    }

    let seed = seed.or_else(env_seed).unwrap_or(0);
    let strategy = match strategy.as_str() {
        "fixed_clamp" => StepStrategy::FixedClamp,
        "interiority_preserving" => StepStrategy::InteriorityPreserving,
        other => return Err(format!("unknown strategy {other:?}")),
    };
    let permutation = match permutation.as_str() {
        "identity" => PermutationStrategy::Identity,
        "fixed_shuffle" => PermutationStrategy::FixedShuffle(seed),
        "reshuffle_per_outer" => PermutationStrategy::ReshufflePerOuter(seed),
        other => return Err(format!("unknown permutation {other:?}")),
    };
    let trace_level = match trace_level.as_str() {
        "summary" => TraceLevel::Summary,
        "full" => TraceLevel::Full,
        other => return Err(format!("unknown trace level {other:?}")),
    };
    let config = SolverConfig {
        tau,
        permutation,
        armijo: ac2cd::ArmijoParams {
            gamma,
            delta,
            a_lower: a_l,
            a_upper: a_u,
            epsilon,
            strategy,
            max_backtracks: 60,
        },
        max_outer,
        kkt_tol,
        active_tol,
        trace_level,
    };
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn load_instance(path: &Path) -> Result<Instance, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read instance {}: {e}", path.display()))?;
    Instance::from_json_str(&text).map_err(|e| e.to_string())
}

fn parse_x0(spec: Option<String>, inst: &Instance) -> Result<Vec<f64>, String> {
    match spec {
        Some(text) => text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad x0 entry {s:?}: {e}"))
            })
            .collect(),
        None => default_x0(&inst.problem).map_err(|e| e.to_string()),
    }
}

fn reference_f_star(inst: &Instance) -> Option<f64> {
    if let Some(cert) = &inst.certificate {
        return Some(cert.f_star);
    }
    solve_qp_enumerate(&inst.problem).ok().map(|c| c.f_star)
}

fn cmd_solve(
    path: &Path,
    x0: Option<String>,
    out_dir: &Path,
    flags: &ConfigFlags,
) -> Result<u8, String> {
    let inst = load_instance(path)?;
    let config = build_config(flags)?;
    let x0 = parse_x0(x0, &inst)?;
    let result = solve(&inst.problem, &x0, &config).map_err(|e| e.to_string())?;

    fs::create_dir_all(out_dir).map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let f_star = reference_f_star(&inst);
    fs::write(out_dir.join("trace.jsonl"), result.trace.to_jsonl()).map_err(|e| e.to_string())?;
    fs::write(
        out_dir.join("summary.csv"),
        result.trace.csv_summary(f_star),
    )
    .map_err(|e| e.to_string())?;

    let exit_code = match &result.status {
        SolveStatus::Converged => 0u8,
        SolveStatus::IterationCap => 2,
        SolveStatus::LineSearchFailure(_) => 3,
    };
    let report = serde_json::json!({
        "instance": inst.name,
        "status": result.status,
        "exit_code": exit_code,
        "outer_iterations": result.trace.outers.len(),
        "final_f": result.trace.final_f,
        "final_gap": f_star.map(|fs| result.trace.final_f - fs),
        "final_residual": result.trace.final_residual,
        "final_active": result.trace.final_active,
        "final_x": result.trace.final_x,
        "certificate": result.certificate,
        "config": config,
    });
    fs::write(
        out_dir.join("report.json"),
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )
    .map_err(|e| e.to_string())?;
    println!(
        "{}: {} after {} outer iterations, f = {:.12e}, residual = {:.3e}",
        inst.name,
        match &result.status {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationCap => "iteration cap",
            SolveStatus::LineSearchFailure(_) => "line-search failure",
        },
        result.trace.outers.len(),
        result.trace.final_f,
        result.trace.final_residual,
    );
    if let SolveStatus::LineSearchFailure(detail) = &result.status {
        eprintln!("line search failed: {detail}");
    }
    Ok(exit_code)
}

fn cmd_verify(
    suite: &str,
    seed: Option<u64>,
    trials: usize,
    instances: usize,
    corrupt_lipschitz: bool,
    out: Option<&Path>,
) -> Result<u8, String> {
    let kind = SuiteKind::parse(suite).map_err(|e| e.to_string())?;
    let options = SuiteOptions {
        seed: seed.or_else(env_seed).unwrap_or(0),
        trials,
        instances,
        corrupt_lipschitz,
    };
    let report = run_suite(kind, &options).map_err(|e| e.to_string())?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(path) = out {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|e| e.to_string())?;
            }
        }
        fs::write(path, &text).map_err(|e| e.to_string())?;
    }
    println!("{text}");
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_complexity(
    path: &Path,
    x0: Option<String>,
    out_dir: Option<&Path>,
    flags: &ConfigFlags,
) -> Result<u8, String> {
    let inst = load_instance(path)?;
    let config = build_config(flags)?;
    let p = &inst.problem;
    let mu = inst
        .mu
        .or_else(|| smallest_hessian_eigenvalue(p))
        .unwrap_or(0.0);
    if mu <= 0.0 {
        return Err("bounds require strong convexity".to_string());
    }
    let cert = match &inst.certificate {
        Some(c) => c.clone(),
        None => solve_qp_enumerate(p).map_err(|e| e.to_string())?,
    };
    let x0 = parse_x0(x0, &inst)?;
    let result = solve(p, &x0, &config).map_err(|e| e.to_string())?;
    if result.status != SolveStatus::Converged {
        return Err(format!("run did not converge: {:?}", result.status));
    }
    let table = exact_table_for(p).map_err(|e| e.to_string())?;
    let rc = rate_constants(p, &table, &cert, p.eval(&x0), &config.armijo, mu, None)
        .map_err(|e| e.to_string())?;
    let radii = identification_radii(&cert, &table, table.global, &config.armijo, config.tau)
        .map_err(|e| e.to_string())?;
    let id = identification_detector(&result.trace, p, &cert, 1e-5).map_err(|e| e.to_string())?;
    let bounds = cert
        .dmin_star
        .map(|dmin| complexity_bounds(&rc, &radii, dmin))
        .transpose()
        .map_err(|e| e.to_string())?;

    let ratio = |emp: Option<usize>, bound: Option<f64>| -> Option<f64> {
        match (emp, bound) {
            (Some(e), Some(b)) => Some(b / (e.max(1) as f64)),
            _ => None,
        }
    };
    let degenerate: Vec<usize> = cert
        .active
        .iter()
        .copied()
        .filter(|i| !cert.strict_active.contains(i))
        .collect();
    let report = serde_json::json!({
        "instance": inst.name,
        "mu": mu,
        "rate_constant_c": rc.c,
        "r0": rc.r0,
        "g_star": rc.g_star,
        "f_dec": rc.f_dec,
        "r_j": radii.r_j,
        "r_a": radii.r_a,
        "k_active_bound": bounds.as_ref().and_then(|b| b.k_active),
        "k_nonactive_bound": bounds.as_ref().map(|b| b.k_nonactive),
        "k_active_emp": id.k_active,
        "k_nonactive_emp": id.k_nonactive,
        "bound_over_empirical_active": ratio(id.k_active, bounds.as_ref().and_then(|b| b.k_active)),
        "bound_over_empirical_nonactive": ratio(id.k_nonactive, bounds.as_ref().map(|b| b.k_nonactive)),
        "outer_iterations": result.trace.outers.len(),
        "degenerate_active": degenerate,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if radii.r_a.is_none() {
        println!("note: r_a undefined (strict active set empty); only the non-active path applies");
    }
    if !degenerate.is_empty() {
        println!(
            "note: coordinates {degenerate:?} are active but not strictly; \
             identification guarantees cover only the strict active set"
        );
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        fs::write(dir.join("report.json"), &text).map_err(|e| e.to_string())?;
    }
    Ok(0)
}

fn cmd_sweep(path: &Path, grid: &str, out_dir: &Path, flags: &ConfigFlags) -> Result<u8, String> {
    let inst = load_instance(path)?;
    let f_star = reference_f_star(&inst);

    // parse "key=v1,v2;key2=w1,w2" into ordered (key, values) pairs
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    for part in grid.split(';').filter(|s| !s.trim().is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| format!("grid part {part:?} is not key=v1,v2"))?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if values.is_empty() {
            return Err(format!("grid key {key:?} has no values"));
        }
        axes.push((key.trim().to_string(), values));
    }
    if axes.is_empty() {
        return Err("empty grid".to_string());
    }

    let mut rows = Vec::new();
    let mut counters = vec![0usize; axes.len()];
    loop {
        let mut combo_flags = flags.clone();
        let mut combo_desc = Vec::new();
        for (axis, &c) in axes.iter().zip(&counters) {
            let (key, values) = axis;
            let value = &values[c];
            combo_desc.push(value.clone());
            let numeric = || {
                value
                    .parse::<f64>()
                    .map_err(|e| format!("grid value {value:?}: {e}"))
            };
            match key.as_str() {
                "tau" => combo_flags.tau = Some(numeric()?),
                "gamma" => combo_flags.gamma = Some(numeric()?),
                "delta" => combo_flags.delta = Some(numeric()?),
                "a_l" => combo_flags.a_l = Some(numeric()?),
                "a_u" => combo_flags.a_u = Some(numeric()?),
                "epsilon" => combo_flags.epsilon = Some(numeric()?),
                "seed" => {
                    combo_flags.seed = Some(
                        value
                            .parse()
                            .map_err(|e| format!("grid seed {value:?}: {e}"))?,
                    )
                }
                "strategy" => combo_flags.strategy = Some(value.clone()),
                "permutation" => combo_flags.permutation = Some(value.clone()),
                other => return Err(format!("grid key {other:?} is not sweepable")),
            }
        }
        let config = build_config(&combo_flags)?;
        let x0 = default_x0(&inst.problem).map_err(|e| e.to_string())?;
        let result = solve(&inst.problem, &x0, &config).map_err(|e| e.to_string())?;
        rows.push((combo_desc, result));

        let mut pos = 0;
        loop {
            if pos == counters.len() {
                break;
            }
            counters[pos] += 1;
            if counters[pos] < axes[pos].1.len() {
                break;
            }
            counters[pos] = 0;
            pos += 1;
        }
        if pos == counters.len() {
            break;
        }
    }

    fs::create_dir_all(out_dir).map_err(|e| e.to_string())?;
    let mut csv = String::new();
    let header: Vec<String> = axes.iter().map(|(k, _)| k.clone()).collect();
    csv.push_str(&format!(
        "{},status,outer_iterations,final_f,final_gap,final_residual\n",
        header.join(",")
    ));
    for (desc, result) in &rows {
        let status = match result.status {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationCap => "iteration_cap",
            SolveStatus::LineSearchFailure(_) => "line_search_failure",
        };
        csv.push_str(&format!(
            "{},{},{},{:e},{},{:e}\n",
            desc.join(","),
            status,
            result.trace.outers.len(),
            result.trace.final_f,
            f_star
                .map(|fs| format!("{:e}", result.trace.final_f - fs))
                .unwrap_or_default(),
            result.trace.final_residual,
        ));
    }
    fs::write(out_dir.join("sweep.csv"), &csv).map_err(|e| e.to_string())?;
    println!(
        "{} runs written to {}",
        rows.len(),
        out_dir.join("sweep.csv").display()
    );
    Ok(0)
}
