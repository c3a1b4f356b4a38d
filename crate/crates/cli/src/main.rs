use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use timebin_qst::config::{parse_config, ConfigFileError, RunConfig, StateSpec};
use timebin_qst::counts::{counts_for, simulate};
use timebin_qst::estimate::estimate_with_model;
use timebin_qst::metrics::{fidelity, trace_distance};
use timebin_qst::output::{self, Series};
use timebin_qst::povm::{make_time_grid_with_window, MeasurementSet, TimeGrid};
use timebin_qst::sweep::{export_bloch, run_phase_sweep, run_sweep, SampleKind, SampleSpec, SweepError, SweepResult};
use timebin_qst::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
    fn svg(self) -> bool {
        matches!(self, Format::Svg | Format::Both)
    }
}

/// Time-bin state tomography under fiber dispersion and detector jitter.
#[derive(Debug, Parser)]
#[command(name = "timebin-qst", version)]
struct Cli {
    /// `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Use the full-size state samples
    #[arg(long, global = true)]
    full_scale: bool,
    /// More log output (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Point {
    /// Fiber length in metres
    #[arg(long)]
    length: Option<f64>,
    /// Detector jitter in seconds
    #[arg(long)]
    jitter: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump the measurement operators on the time grid
    Povm {
        #[command(flatten)]
        point: Point,
    },
    /// Expected and measured counts for one input state
    Simulate {
        #[command(flatten)]
        point: Point,
        /// e.g. `bloch:1,1.5708,0`, `phase:0.3`, `qutrit:0.5,0,0`
        #[arg(long)]
        state: Option<StateSpec>,
    },
    /// Reconstruct a state from counts
    Reconstruct {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        state: Option<StateSpec>,
        #[arg(long, default_value = "MLE")]
        method: Method,
        /// Counts CSV to fit; simulated from `--state` when absent
        #[arg(long)]
        counts: Option<PathBuf>,
    },
    /// Worst-case fidelity over the configured (length, jitter, method) grid
    Sweep,
    /// Sweep over an equatorial phase family
    PhaseSweep,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigFileError> for Failure {
    fn from(e: ConfigFileError) -> Self {
        match e {
            ConfigFileError::Io { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path)?,
        None => RunConfig::default(),
    };
    if cli.full_scale && !cfg.full_scale {
        cfg.apply_full_scale();
    }
    if let Some(seed) = cli.seed {
        cfg.sweep.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.sweep.workers = workers;
    }
    Ok(cfg)
}

fn apply_point(cfg: &mut RunConfig, point: &Point) -> Result<(), Failure> {
    if let Some(l) = point.length {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Failure::Config(format!("--length must be >= 0, got {l}")));
        }
        cfg.sweep.base.length = l;
    }
    if let Some(j) = point.jitter {
        if !(j >= 0.0 && j.is_finite()) {
            return Err(Failure::Config(format!("--jitter must be >= 0, got {j}")));
        }
        cfg.sweep.base.sigma_d = j;
    }
    cfg.sweep.base.validate().map_err(|e| Failure::Config(e.to_string()))
}

fn pick_state(cfg: &mut RunConfig, state: Option<StateSpec>) -> Result<StateSpec, Failure> {
    if let Some(s) = state {
        cfg.state = Some(s);
    }
    let s = cfg.state_or_default();
    if s.dim() != cfg.sweep.base.dim {
        cfg.sweep.base = cfg.sweep.base.with_dim(s.dim());
    }
    Ok(s)
}

fn save(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    output::write_atomic(&path, contents).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn grid_for(cfg: &RunConfig) -> Result<TimeGrid, Failure> {
    make_time_grid_with_window(&cfg.sweep.base, cfg.sweep.grid_points, cfg.sweep.window_widths).map_err(runtime)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = load(cli)?;
    match &cli.command {
        Command::Povm { point } => {
            apply_point(&mut cfg, point)?;
            let base = cfg.sweep.base;
            let grid = grid_for(&cfg)?;
            let set = MeasurementSet::jittered(&base, &grid);
            if cli.format.csv() {
                save(&cli.out, "povm.csv", &output::povm_csv(set.elements()))?;
            }
            if base.dim == 2 {
                let rows = export_bloch(&base, base.length, base.sigma_d, cfg.sweep.grid_points).map_err(runtime)?;
                if cli.format.csv() {
                    save(&cli.out, "bloch.csv", &output::bloch_csv(&rows))?;
                }
                if cli.format.svg() {
                    let title = format!("L = {} m, jitter = {} s", base.length, base.sigma_d);
                    save(&cli.out, "bloch.svg", &output::bloch_scatter(&title, &rows))?;
                }
            }
        }
        Command::Simulate { point, state } => {
            apply_point(&mut cfg, point)?;
            let spec = pick_state(&mut cfg, *state)?;
            let grid = grid_for(&cfg)?;
            let records = simulate(&spec.build(), &grid, &cfg.sweep.base).map_err(runtime)?;
            save(&cli.out, "counts.csv", &output::counts_csv(&records))?;
        }
        Command::Reconstruct {
            point,
            state,
            method,
            counts,
        } => {
            apply_point(&mut cfg, point)?;
            let spec = pick_state(&mut cfg, *state)?;
            let base = cfg.sweep.base;
            let (grid, measured, truth) = match counts {
                Some(path) => {
                    let (grid, measured) = read_counts(path)?;
                    (grid, measured, None)
                }
                None => {
                    let grid = grid_for(&cfg)?;
                    let rho = spec.build();
                    let measured = counts_for(&MeasurementSet::jittered(&base, &grid), &rho, base.photons).map_err(runtime)?;
                    (grid, measured, Some((spec, rho)))
                }
            };
            let model = MeasurementSet::ideal(&base, &grid);
            let est = estimate_with_model(&measured, &model, base.photons, *method, cfg.sweep.seed, cfg.sweep.restarts)
                .map_err(runtime)?;
            println!("method: {method}  objective: {:.6e}  converged: {}", est.objective, est.converged);
            println!("{}", est.rho.matrix());
            if let Some((spec, rho)) = &truth {
                println!("input: {spec}");
                println!("fidelity: {:.9}", fidelity(rho, &est.rho).map_err(runtime)?);
                println!("trace distance: {:.9}", trace_distance(rho, &est.rho).map_err(runtime)?);
            }
            let mut csv = String::from("row,col,re,im\n");
            let m = est.rho.matrix();
            for i in 0..m.dim() {
                for j in 0..m.dim() {
                    let z = m[(i, j)];
                    csv.push_str(&format!("{i},{j},{},{}\n", output::fmt_sig(z.re), output::fmt_sig(z.im)));
                }
            }
            save(&cli.out, "rho.csv", &csv)?;
        }
        Command::Sweep => {
            let rows = run_sweep(&cfg.sweep)?;
            emit_sweep(cli, &cfg, &rows, "sweep", false)?;
        }
        Command::PhaseSweep => {
            if !cfg.sweep.sample.kind.is_phase_family() {
                let kind = if cfg.sweep.base.dim == 3 { SampleKind::QutritPhase } else { SampleKind::QubitPhase };
                let size = if cfg.full_scale { kind.full_size() } else { kind.default_size() };
                cfg.sweep.sample = SampleSpec::new(kind, size);
            }
            let rows = run_phase_sweep(&cfg.sweep)?;
            emit_sweep(cli, &cfg, &rows, "phase_sweep", true)?;
        }
    }
    Ok(())
}

fn emit_sweep(cli: &Cli, cfg: &RunConfig, rows: &[SweepResult], stem: &str, log_x: bool) -> Result<(), Failure> {
    for r in rows {
        println!(
            "L={:>8} m  jitter={:>8.2e} s  {:<3}  F_min={:.6}  D_max={:.6}  worst={}",
            r.length, r.jitter, r.method, r.f_min, r.d_max, r.worst_state
        );
    }
    if cli.format.csv() {
        save(&cli.out, &format!("{stem}.csv"), &output::sweep_csv(rows, cfg.sweep.timing))?;
    }
    if cli.format.svg() {
        let mut series = Vec::new();
        for &jitter in &cfg.sweep.jitters {
            for &method in &cfg.sweep.methods {
                let points = rows
                    .iter()
                    .filter(|r| r.jitter == jitter && r.method == method)
                    .map(|r| (r.length, r.f_min))
                    .collect();
                series.push(Series {
                    label: format!("{method}, {} ps", jitter * 1e12),
                    points,
                });
            }
        }
        let title = format!("worst-case fidelity, {}", cfg.sweep.sample.kind);
        let svg = output::line_plot(&title, "fiber length [m]", "F_min", &series, log_x);
        save(&cli.out, &format!("{stem}.svg"), &svg)?;
    }
    Ok(())
}

/// Reads `t_seconds,n_expected,n_measured` rows.
fn read_counts(path: &Path) -> Result<(TimeGrid, Vec<f64>), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let mut times = Vec::new();
    let mut measured = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Config(format!("{} line {}: `{s}` is not a number", path.display(), i + 1)))
        };
        if cols.len() != 3 {
            return Err(Failure::Config(format!("{} line {}: expected 3 columns", path.display(), i + 1)));
        }
        times.push(parse(cols[0])?);
        measured.push(parse(cols[2])?);
    }
    if times.is_empty() {
        return Err(Failure::Config(format!("{}: no count rows", path.display())));
    }
    Ok((TimeGrid::new(times), measured))
}
