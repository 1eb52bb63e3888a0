use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plasmofiber_cli::config::{AnalysisKind, Mode, Orientation, Precision, Preset, RunConfig, SynthKind};
use plasmofiber_cli::{analysis, init_threads, pipeline, CliError, THREADS_ENV};

/// FDTD emitter-nanorod-nanofiber simulations and photon-statistics analysis.
#[derive(Parser)]
#[command(version, after_help = format!("Set {THREADS_ENV} to override the number of compute threads."))]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scene for one dipole orientation.
    Simulate {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        numerics: NumericsArgs,
    },
    /// Sweep rod-dipole separation and rod length; resumable.
    Sweep {
        /// Separations, nm, comma separated.
        #[arg(long, value_delimiter = ',')]
        d_nm: Option<Vec<f64>>,
        /// Rod lengths, nm, comma separated.
        #[arg(long, value_delimiter = ',')]
        rod_length_nm: Option<Vec<f64>>,
        /// Start from a predefined grid; explicit lists take precedence.
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        numerics: NumericsArgs,
    },
    /// Fit photon-statistics data.
    Analyze {
        kind: Option<AnalysisKind>,
        /// Stream files or directories (`g2`, `power`) or scan files (`hwp`).
        inputs: Vec<PathBuf>,
        #[arg(long)]
        bin_width_ps: Option<u64>,
        #[arg(long)]
        max_lag_ps: Option<u64>,
        #[arg(long)]
        jitter_sigma_ps: Option<f64>,
    },
    /// Generate synthetic detector data.
    Synth {
        kind: Option<SynthKind>,
        #[arg(long)]
        tau1_ns: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        p_exc_uw: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        powers_uw: Option<Vec<f64>>,
        #[arg(long)]
        emitters: Option<usize>,
        #[arg(long)]
        duration_s: Option<f64>,
        #[arg(long)]
        efficiency: Option<f64>,
        #[arg(long)]
        dark_rate_hz: Option<f64>,
        #[arg(long)]
        jitter_sigma_ps: Option<f64>,
        #[arg(long)]
        p_true: Option<f64>,
        #[arg(long)]
        samples_per_angle: Option<usize>,
    },
    /// Print the effective configuration in canonical form.
    Config {
        #[arg(long, default_value = "simulate")]
        mode: Mode,
    },
}

#[derive(Args)]
struct GeometryArgs {
    #[arg(long)]
    d_nm: Option<f64>,
    #[arg(long, conflicts_with = "bare")]
    rod_length_nm: Option<f64>,
    /// No rod: the bare-fiber reference.
    #[arg(long)]
    bare: bool,
    /// `x`, `y`, `z` or three comma-separated components.
    #[arg(long)]
    orientation: Option<Orientation>,
}

#[derive(Args)]
struct NumericsArgs {
    #[arg(long)]
    resolution_nm: Option<f64>,
    #[arg(long)]
    fiber_diameter_nm: Option<f64>,
    #[arg(long)]
    precision: Option<Precision>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    margin_nm: Option<f64>,
    #[arg(long)]
    plane_distance_nm: Option<f64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl NumericsArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let s = &mut cfg.scene;
        set(&mut s.resolution_nm, self.resolution_nm);
        set(&mut s.fiber_diameter_nm, self.fiber_diameter_nm);
        set(&mut s.precision, self.precision);
        set(&mut s.max_steps, self.max_steps);
        set(&mut s.margin_nm, self.margin_nm);
        set(&mut s.plane_distance_nm, self.plane_distance_nm);
    }
}

fn load(cli: &Cli, mode: Mode) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::new(mode),
    };
    cfg.mode = mode;
    set(&mut cfg.output_dir, cli.output_dir.clone());
    set(&mut cfg.seed, cli.seed);
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    init_threads()?;
    let mode = match &cli.command {
        Command::Simulate { .. } => Mode::Simulate,
        Command::Sweep { .. } => Mode::Sweep,
        Command::Analyze { .. } => Mode::Analyze,
        Command::Synth { .. } => Mode::Synthesize,
        Command::Config { mode } => *mode,
    };
    let mut cfg = load(&cli, mode)?;
    match cli.command {
        Command::Simulate { geometry, numerics } => {
            numerics.apply(&mut cfg);
            set(&mut cfg.scene.d_nm, geometry.d_nm);
            set(&mut cfg.scene.orientation, geometry.orientation);
            if geometry.bare {
                cfg.scene.rod_length_nm = None;
            } else if geometry.rod_length_nm.is_some() {
                cfg.scene.rod_length_nm = geometry.rod_length_nm;
            }
            print_json(&pipeline::simulate(&cfg)?)?;
        }
        Command::Sweep {
            d_nm,
            rod_length_nm,
            preset,
            workers,
            numerics,
        } => {
            numerics.apply(&mut cfg);
            if let Some(p) = preset {
                let w = cfg.sweep.workers;
                cfg.sweep = p.sweep();
                cfg.sweep.workers = w;
            }
            set(&mut cfg.sweep.d_nm, d_nm);
            set(&mut cfg.sweep.rod_length_nm, rod_length_nm);
            set(&mut cfg.sweep.workers, workers);
            let report = pipeline::run_sweep(&cfg)?;
            for (d, l, e) in &report.failed {
                eprintln!("point d = {d} nm, L = {l} nm failed: {e}");
            }
            print_json(&report)?;
            return Ok(report.failed.is_empty());
        }
        Command::Analyze {
            kind,
            inputs,
            bin_width_ps,
            max_lag_ps,
            jitter_sigma_ps,
        } => {
            let a = &mut cfg.analyze;
            set(&mut a.kind, kind);
            if !inputs.is_empty() {
                a.inputs = inputs;
            }
            set(&mut a.bin_width_ps, bin_width_ps);
            set(&mut a.max_lag_ps, max_lag_ps);
            set(&mut a.jitter_sigma_ps, jitter_sigma_ps);
            print_json(&analysis::analyze(&cfg)?)?;
        }
        Command::Synth {
            kind,
            tau1_ns,
            alpha,
            p_exc_uw,
            powers_uw,
            emitters,
            duration_s,
            efficiency,
            dark_rate_hz,
            jitter_sigma_ps,
            p_true,
            samples_per_angle,
        } => {
            let s = &mut cfg.synth;
            set(&mut s.kind, kind);
            set(&mut s.tau1_ns, tau1_ns);
            set(&mut s.alpha, alpha);
            set(&mut s.p_exc_uw, p_exc_uw);
            set(&mut s.powers_uw, powers_uw);
            set(&mut s.emitters, emitters);
            set(&mut s.duration_s, duration_s);
            set(&mut s.efficiency, efficiency);
            set(&mut s.dark_rate_hz, dark_rate_hz);
            set(&mut s.jitter_sigma_ps, jitter_sigma_ps);
            set(&mut s.p_true, p_true);
            set(&mut s.samples_per_angle, samples_per_angle);
            for f in analysis::synthesize(&cfg)? {
                println!("{}", f.display());
            }
        }
        Command::Config { .. } => {
            cfg.validate()?;
            print!("{}", cfg.to_toml());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
