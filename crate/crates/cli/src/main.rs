//! `dsg`: run experiments, diagnose trajectories, sweep the inequality checks
//! and report graph spectra.
//!
//! Exit status is 0 on success, 1 for invalid input or usage, 2 for failures
//! while running (including a failed sweep).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dsg_core::analysis::{excitation_report, noise_accumulation_trace, rate_fit, ExcitationConfig, RateWindow};
use dsg_core::harness::{emit_outputs, run_all_sweeps, run_experiment, ExperimentConfig};
use dsg_core::{build_metropolis, laplacian_spectrum, DVector, Error, Result, Topology, TrajectoryRecord};

#[derive(Parser, Debug)]
#[command(name = "dsg", version, about = "Distributed stochastic-gradient estimation over sensor networks")]
struct Cli {
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the horizon.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Override the number of Monte Carlo runs.
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run cooperative and non-cooperative estimators and write MSE outputs.
    Simulate {
        config: PathBuf,
        /// Output directory; defaults to `outputs` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Excitation, noise and rate diagnostics of a trajectory CSV.
    Diagnose {
        trajectory: PathBuf,
        /// True parameter, comma separated; read from the `.meta` sidecar when omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
        /// Evaluate the Gram eigenvalues every `stride` steps.
        #[arg(long, default_value_t = 10)]
        stride: usize,
        /// Evaluate every step (same as `--stride 1`).
        #[arg(long)]
        full: bool,
        /// Test the excitation bound with this constant instead of fitting one.
        #[arg(long)]
        n_bound: Option<f64>,
        /// Write `excitation.csv`, `noise.csv` and `diagnose.txt` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random-instance sweeps of the operator inequalities at the config's step sizes.
    LemmaCheck {
        config: PathBuf,
        /// Instances per sweep; defaults to `sweep_instances` from the config.
        #[arg(long)]
        instances: Option<usize>,
    },
    /// Metropolis weights, Laplacian spectrum and diameter of an edge list.
    Graph { edgelist: PathBuf },
}

fn load_config(path: &Path, cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(steps) = cli.steps {
        if steps == 0 {
            return Err(Error::Invalid("--steps must be at least 1".into()));
        }
        config.steps = steps;
    }
    if let Some(runs) = cli.runs {
        if runs == 0 {
            return Err(Error::Invalid("--runs must be at least 1".into()));
        }
        config.runs = runs;
    }
    Ok(config)
}

fn simulate(cli: &Cli, config: &Path, out: Option<&Path>) -> Result<u8> {
    let config = load_config(config, cli)?;
    let dir = out.map_or_else(|| config.outputs.clone(), Path::to_path_buf);
    let outcome = run_experiment(&config)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let files = emit_outputs(&config, &outcome, &dir)?;
    let s = &outcome.series;
    let last = s.steps();
    println!("{} runs x {} steps on {} sensors", s.runs, last, config.n);
    println!("max cooperative MSE:     k=1 {:.6e}  k={last} {:.6e}", s.max_coop(1), s.max_coop(last));
    println!("min non-cooperative MSE: k=1 {:.6e}  k={last} {:.6e}", s.min_nonco(1), s.min_nonco(last));
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(0)
}

fn sidecar_theta(trajectory: &Path) -> Option<DVector<f64>> {
    let meta = trajectory.with_extension("meta");
    meta.exists().then(|| ExperimentConfig::load(&meta).ok()).flatten().map(|c| c.theta)
}

fn diagnose(
    path: &Path,
    theta: Option<&[f64]>,
    stride: usize,
    full: bool,
    n_bound: Option<f64>,
    out: Option<&Path>,
) -> Result<u8> {
    let trajectory = TrajectoryRecord::load(path)?;
    let config = ExcitationConfig { stride: if full { 1 } else { stride }, n_bound };
    let report = excitation_report(&trajectory, config)?;
    let noise = noise_accumulation_trace(&trajectory)?;

    let mut text = report.to_string();
    let last = trajectory.len();
    let half = last.div_ceil(2);
    text.push_str(&format!(
        "noise partial sums: |S_{last}| = {:.6e}, tail oscillation after k = {half}: {:.6e} ({:.3e} of |S_{half}|)\n",
        noise.norms[last - 1],
        noise.tail_oscillation[half - 1],
        noise.relative_tail(half).unwrap_or(f64::NAN)
    ));
    let theta = match theta {
        Some(t) => Some(DVector::from_column_slice(t)),
        None => sidecar_theta(path),
    };
    match theta {
        Some(t) => match rate_fit(&trajectory, &t, RateWindow::default()) {
            Ok(fit) => text.push_str(&format!(
                "rate fit: d1_hat = {:.6e} over {} points (rms residual {:.3e})\n",
                fit.d1_hat, fit.used, fit.residual
            )),
            Err(e @ Error::Dimension(_)) => return Err(e),
            Err(e) => text.push_str(&format!("rate fit: unavailable ({e})\n")),
        },
        None => text.push_str("rate fit: skipped (no --theta and no .meta sidecar)\n"),
    }
    print!("{text}");

    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?;
        let csv_path = dir.join("excitation.csv");
        let file = std::fs::File::create(&csv_path).map_err(|e| Error::Io { path: csv_path.clone(), source: e })?;
        report.write_csv(file).map_err(|source| Error::Csv { path: csv_path.clone(), source })?;
        let noise_path = dir.join("noise.csv");
        let mut body = String::from("k,norm_s,tail_oscillation\n");
        for (idx, (n, t)) in noise.norms.iter().zip(&noise.tail_oscillation).enumerate() {
            body.push_str(&format!("{},{},{}\n", idx + 1, dsg_core::full_precision(*n), dsg_core::full_precision(*t)));
        }
        write(&noise_path, &body)?;
        write(&dir.join("diagnose.txt"), &text)?;
    }
    Ok(0)
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn lemma_check(cli: &Cli, config: &Path, instances: Option<usize>) -> Result<u8> {
    let config = load_config(config, cli)?;
    let mut settings = config.sweep;
    if let Some(i) = instances {
        if i == 0 {
            return Err(Error::Invalid("--instances must be at least 1".into()));
        }
        settings.instances = i;
    }
    println!(
        "mu = {}, nu = {}, mu*(1+4*nu) = {}; n <= {}, m <= {}, window {}",
        config.params.mu,
        config.params.nu,
        config.params.step_product(),
        settings.max_n,
        settings.max_m,
        settings.window
    );
    if !config.params.is_strict() {
        eprintln!("warning: mu*(1+4*nu) = 1; the determinant and norm bounds assume a strict inequality");
    }
    let outcomes = run_all_sweeps(&settings, config.params.mu, config.params.nu, config.seed)?;
    for o in &outcomes {
        println!("{o}");
    }
    Ok(if outcomes.iter().all(|o| o.passed) { 0 } else { 2 })
}

fn graph(path: &Path) -> Result<u8> {
    let topology = Topology::read_edge_list(path)?;
    let weights = build_metropolis(&topology);
    let spectrum = laplacian_spectrum(&weights, &topology)?;
    println!("edges: {}", topology.edge_count());
    print!("{spectrum}");
    println!("Metropolis weights:");
    for i in 0..topology.n() {
        let row: Vec<String> = (0..topology.n()).map(|j| format!("{:.6}", weights.get(i, j))).collect();
        println!("  {}", row.join(" "));
    }
    for w in weights.warnings() {
        println!("warning: {w}");
    }
    Ok(0)
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Simulate { config, out } => simulate(cli, config, out.as_deref()),
        Command::Diagnose { trajectory, theta, stride, full, n_bound, out } => {
            diagnose(trajectory, theta.as_deref(), *stride, *full, *n_bound, out.as_deref())
        }
        Command::LemmaCheck { config, instances } => lemma_check(cli, config, *instances),
        Command::Graph { edgelist } => graph(edgelist),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
