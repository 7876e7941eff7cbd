mod failure;
mod output;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use schrodinger::entropy::relative_entropy;
use schrodinger::graph_file::parse_graph;
use schrodinger::interpolation::{
    action_value, backward_hjb_residual, build_path, current_equation_residual, entropy_convexity_check,
    hjb_residual,
};
use schrodinger::marginal_file::parse_marginal;
use schrodinger::markov::ReversibleChain;
use schrodinger::particles::{condition_and_compare, InitialPositions, SimulationConfig};
use schrodinger::schrodinger::{solve, verify_schrodinger_system, BridgePotentials, SolveOptions};
use schrodinger::transport::{
    default_k_values, entropic_midpoint_vs_displacement, gamma_sweep_gaussian, gamma_sweep_graph, GammaSweepReport,
};
use schrodinger::{Measure, ProbabilityMeasure};

use failure::Failure;
use output::{float, optional_float, read_input, Manifest, OutputDir};

/// Environment variable holding the worker count.
const WORKERS_VAR: &str = "SCHRODINGER_WORKERS";

#[derive(Parser)]
#[command(name = "schrodinger", version, about = "Schrödinger bridges on finite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the static problem for a graph and two marginals.
    Solve(SolveArgs),
    /// Build the entropic interpolation of a solved bridge.
    Interpolate(InterpolateArgs),
    /// Sweep the slowing-down parameter and compare with optimal transport.
    Gamma(GammaArgs),
    /// Condition a particle system on its terminal profile.
    Particles(ParticlesArgs),
    /// Run the acceptance checks.
    Selftest,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    mu0: PathBuf,
    #[arg(long)]
    mu1: PathBuf,
    #[arg(long, default_value_t = schrodinger::schrodinger::DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long, default_value_t = schrodinger::schrodinger::DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct InterpolateArgs {
    #[arg(long)]
    graph: PathBuf,
    /// `solution.json` written by `solve`.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, default_value_t = 1000)]
    grid_size: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GammaArgs {
    /// Graph file; slowed-down chains with graph-distance cost.
    #[arg(long, conflicts_with = "grid_points", required_unless_present = "grid_points")]
    graph: Option<PathBuf>,
    /// Number of points of a uniform grid on `[grid-min, grid-max]`; Gaussian kernels with quadratic cost.
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    grid_min: f64,
    #[arg(long, default_value_t = 1.0)]
    grid_max: f64,
    #[arg(long)]
    mu0: PathBuf,
    #[arg(long)]
    mu1: PathBuf,
    /// Comma-separated, increasing.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<f64>>,
    #[arg(long, default_value_t = schrodinger::schrodinger::DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ParticlesArgs {
    /// TOML configuration; paths inside are relative to its directory.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParticlesConfig {
    graph: PathBuf,
    mu0: PathBuf,
    target: PathBuf,
    n: usize,
    epsilon: f64,
    seed: u64,
    batches: usize,
    #[serde(default = "default_grid_size")]
    grid_size: usize,
}

fn default_grid_size() -> usize {
    100
}

/// The record written by `solve` and read back by `interpolate`.
#[derive(Debug, Serialize, Deserialize)]
struct SolutionRecord {
    primal_value: f64,
    dual_value: f64,
    iterations: usize,
    residual: f64,
    f0: Vec<f64>,
    g1: Vec<f64>,
    coupling: Vec<Vec<f64>>,
    mu0: Vec<f64>,
    mu1: Vec<f64>,
    graph_sha256: String,
    normalization: f64,
}

fn configure_workers() -> Result<(), Failure> {
    if let Ok(value) = std::env::var(WORKERS_VAR) {
        let n: usize = value
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Failure::Input(format!("{WORKERS_VAR} must be a positive integer, got `{value}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Input(format!("cannot start {n} workers: {e}")))?;
    }
    Ok(())
}

fn load_chain(path: &Path, manifest: &mut Manifest) -> Result<(ReversibleChain, String), Failure> {
    let text = read_input(path)?;
    manifest.record_input(path, &text);
    let chain = parse_graph(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok((chain, output::sha256_hex(text.as_bytes())))
}

fn load_marginal(path: &Path, states: usize, manifest: &mut Manifest) -> Result<ProbabilityMeasure, Failure> {
    let text = read_input(path)?;
    manifest.record_input(path, &text);
    parse_marginal(&text, states).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|x| m.row(x).iter().copied().collect()).collect()
}

fn cmd_solve(args: &SolveArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let mut manifest =
        Manifest::new("solve", json!({ "tol": args.tol, "max_iter": args.max_iter }));
    let (chain, graph_sha256) = load_chain(&args.graph, &mut manifest)?;
    let mu0 = load_marginal(&args.mu0, chain.len(), &mut manifest)?;
    let mu1 = load_marginal(&args.mu1, chain.len(), &mut manifest)?;
    let kernel = chain.endpoint_coupling()?;
    let options = SolveOptions { tol: args.tol, max_iter: args.max_iter, initial_log_g1: None };
    let sol = solve(&kernel, &mu0, &mu1, &options)?;
    let residual = verify_schrodinger_system(&sol.potentials, &kernel, &mu0, &mu1)?;

    let record = SolutionRecord {
        primal_value: sol.primal_value,
        dual_value: sol.dual_value,
        iterations: sol.iterations,
        residual: sol.potentials.residual,
        f0: sol.potentials.f0.clone(),
        g1: sol.potentials.g1.clone(),
        coupling: matrix_rows(&sol.coupling),
        mu0: mu0.weights().to_vec(),
        mu1: mu1.weights().to_vec(),
        graph_sha256,
        normalization: sol.potentials.normalization,
    };
    let mut out = OutputDir::create(&args.out_dir)?;
    out.write_json("solution.json", &record)?;
    out.write_json(
        "residual.json",
        &json!({
            "f_residual": residual.f_residual,
            "g_residual": residual.g_residual,
            "max_residual": residual.max(),
            "duality_gap": sol.duality_gap(),
            "marginal_residual_history": sol.residual_history,
        }),
    )?;
    println!("primal value {}  dual value {}  iterations {}", sol.primal_value, sol.dual_value, sol.iterations);
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    out.finish(manifest)
}

fn cmd_interpolate(args: &InterpolateArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let mut manifest = Manifest::new("interpolate", json!({ "grid_size": args.grid_size }));
    let (chain, graph_sha256) = load_chain(&args.graph, &mut manifest)?;
    let text = read_input(&args.solution)?;
    manifest.record_input(&args.solution, &text);
    let record: SolutionRecord = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: not a solution record: {e}", args.solution.display())))?;
    if record.graph_sha256 != graph_sha256 {
        return Err(Failure::Input(format!(
            "{} was computed for a different graph than {}",
            args.solution.display(),
            args.graph.display()
        )));
    }
    if record.f0.len() != chain.len() || record.g1.len() != chain.len() {
        return Err(Failure::Input("solution potentials do not match the graph's state count".into()));
    }
    let logs = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
    let potentials = BridgePotentials::from_logs(logs(&record.f0), logs(&record.g1), record.normalization, record.residual);
    let path = build_path(&chain, &potentials, args.grid_size)?;

    let mut csv = String::from("t,state,mu,f,g,phi,psi\n");
    for (i, &t) in path.times.iter().enumerate() {
        for x in 0..chain.len() {
            csv.push_str(&format!(
                "{},{x},{},{},{},{},{}\n",
                float(t),
                float(path.mu[i][x]),
                float(path.f[i][x]),
                float(path.g[i][x]),
                optional_float(path.phi[i][x]),
                optional_float(path.psi[i][x]),
            ));
        }
    }
    let mu0 = ProbabilityMeasure::from_unnormalized(record.mu0.clone())?;
    let h0 = relative_entropy(&mu0, chain.m())?.expect_finite("H(mu0|m)");
    let action = action_value(&path, &chain);
    let reference = record.primal_value - h0;
    let convexity = entropy_convexity_check(&path, &chain).ok();
    let diagnostics = json!({
        "hjb_max_residual": hjb_residual(&path, &chain)?.max(),
        "backward_hjb_max_residual": backward_hjb_residual(&path, &chain)?.max(),
        "current_eq_residual": current_equation_residual(&path, &chain)?.max(),
        "action": action,
        "action_reference": reference,
        "action_gap": (action - reference).abs(),
        "entropy_profile": path.entropy_profile(chain.m())?,
        "convexity_mismatch": convexity.as_ref().map(|c| c.max_relative_mismatch),
        "convexity_measured_ratio": convexity.as_ref().map(|c| c.measured_ratio),
        "normalization_defect": path.normalization_defect,
    });
    let mut out = OutputDir::create(&args.out_dir)?;
    out.write("path.csv", csv.as_bytes())?;
    out.write_json("diagnostics.json", &diagnostics)?;
    println!("action {action}  reference {reference}");
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    out.finish(manifest)
}

fn cmd_gamma(args: &GammaArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let k_values = args.k.clone().unwrap_or_else(default_k_values);
    let mut manifest = Manifest::new(
        "gamma",
        json!({
            "k": k_values,
            "tol": args.tol,
            "grid_points": args.grid_points,
            "grid_min": args.grid_min,
            "grid_max": args.grid_max,
        }),
    );
    let options = SolveOptions::with_tol(args.tol);
    let mut out = OutputDir::create(&args.out_dir)?;

    let (result, midpoint_tv, alpha): (Result<GammaSweepReport, schrodinger::Error>, _, _) = match (&args.graph, args.grid_points) {
        (Some(graph), _) => {
            let (chain, _) = load_chain(graph, &mut manifest)?;
            let mu0 = load_marginal(&args.mu0, chain.len(), &mut manifest)?;
            let mu1 = load_marginal(&args.mu1, chain.len(), &mut manifest)?;
            (gamma_sweep_graph(&chain, &mu0, &mu1, &k_values, &options), None, "log k")
        }
        (None, Some(points)) => {
            if points < 2 || !(args.grid_min < args.grid_max) {
                return Err(Failure::Input("the grid needs at least 2 points and grid-min < grid-max".into()));
            }
            let step = (args.grid_max - args.grid_min) / (points - 1) as f64;
            let grid: Vec<f64> = (0..points).map(|i| args.grid_min + step * i as f64).collect();
            let base = Measure::new(vec![step; points])?;
            let mu0 = load_marginal(&args.mu0, points, &mut manifest)?;
            let mu1 = load_marginal(&args.mu1, points, &mut manifest)?;
            let r = gamma_sweep_gaussian(&grid, &base, &mu0, &mu1, &k_values, &options);
            let tv = match &r {
                Ok(report) => Some(entropic_midpoint_vs_displacement(report, &grid, &mu0, &mu1)?),
                Err(_) => None,
            };
            (r, tv, "k")
        }
        (None, None) => return Err(Failure::Input("either --graph or --grid-points is required".into())),
    };

    let report = match result {
        Ok(r) => r,
        Err(e) => {
            let failure = Failure::from(e);
            out.write_json("gamma_summary.json", &json!({ "error": failure.to_string() }))?;
            manifest.wall_time_seconds = start.elapsed().as_secs_f64();
            out.finish(manifest)?;
            return Err(failure);
        }
    };
    let mut csv = String::from("k,normalized_value,cost_gap,tv_midpoint_distance\n");
    for (i, k) in report.k_values.iter().enumerate() {
        let tv = midpoint_tv.as_ref().map(|v| v[i]);
        csv.push_str(&format!(
            "{},{},{},{}\n",
            float(*k),
            float(report.normalized_values[i]),
            float(report.mk_optimal_set_check[i]),
            optional_float(tv)
        ));
    }
    out.write("gamma_sweep.csv", csv.as_bytes())?;
    out.write_json(
        "gamma_summary.json",
        &json!({
            "mk_value": report.mk_value,
            "alpha": alpha,
            "k_values": report.k_values,
            "normalized_values": report.normalized_values,
            "cost_gaps": report.mk_optimal_set_check,
            "tv_midpoint_distance": midpoint_tv,
            "last_is_closest": report.last_is_closest(),
        }),
    )?;
    let points: Vec<(f64, f64)> =
        report.k_values.iter().zip(&report.normalized_values).map(|(k, v)| (k.log10(), *v)).collect();
    let chart = svg::line_chart(
        &format!("Normalized entropy H / {alpha} against the transport value"),
        "log10 k",
        "normalized value",
        &points,
        Some(report.mk_value),
    );
    out.write("gamma_sweep.svg", chart.as_bytes())?;
    println!("transport value {}  last normalized value {}", report.mk_value, report.normalized_values.last().unwrap_or(&f64::NAN));
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    out.finish(manifest)
}

fn cmd_particles(args: &ParticlesArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let text = read_input(&args.config)?;
    let config: ParticlesConfig =
        toml::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", args.config.display())))?;
    let mut manifest = Manifest::new("particles", serde_json::to_value(&config).expect("config serializes"));
    manifest.record_input(&args.config, &text);
    manifest.seed = Some(config.seed);
    let dir = args.config.parent().unwrap_or(Path::new("."));
    let (chain, _) = load_chain(&dir.join(&config.graph), &mut manifest)?;
    let mu0 = load_marginal(&dir.join(&config.mu0), chain.len(), &mut manifest)?;
    let target = load_marginal(&dir.join(&config.target), chain.len(), &mut manifest)?;

    let sol = solve(&chain.endpoint_coupling()?, &mu0, &target, &SolveOptions::default())?;
    let path = build_path(&chain, &sol.potentials, config.grid_size)?;
    let sim = SimulationConfig {
        chain,
        n: config.n,
        initial_positions: InitialPositions::Profile(mu0),
        target,
        epsilon: config.epsilon,
        seed: config.seed,
        batches: config.batches,
    };
    let report = condition_and_compare(&sim, &sol, &path)?;
    let mut out = OutputDir::create(&args.out_dir)?;
    out.write_json("conditional_report.json", &json!({ "report": report, "config": config }))?;
    println!(
        "accepted {} of {}  mid-time TV {:.4}  rate {:.5}  reference {:.5}",
        report.accepted_batches, report.batches, report.midtime_tv, report.rate_estimate, report.reference_value
    );
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    out.finish(manifest)
}

fn cmd_selftest() -> Result<(), Failure> {
    let outcomes = schrodinger_selftest::run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.to_string()).collect();
    println!("{} of {} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Checks(format!("failed criteria: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_workers().and_then(|()| match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Interpolate(a) => cmd_interpolate(a),
        Command::Gamma(a) => cmd_gamma(a),
        Command::Particles(a) => cmd_particles(a),
        Command::Selftest => cmd_selftest(),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
