//! Command-line frontend: constraint inference, single-model fitting,
//! synthetic generation, and the error-versus-length evaluation curve.
//!
//! Exit codes: 0 success, 2 parse/validation error, 3 no segments found,
//! 4 insufficient data.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use wrenchfit::eval::{eval_curve, parse_lengths};
use wrenchfit::io::{read_trajectory_file, write_labels, write_trajectory_file};
use wrenchfit::kinematics::estimate_velocities;
use wrenchfit::models::param_len;
use wrenchfit::regression::{fit, FitMode};
use wrenchfit::synth::{generate, script_task, ScriptStep, SynthSpec};
use wrenchfit::{run_inference, Error, ModelKind, PipelineConfig};

#[derive(Parser)]
#[command(name = "wrenchfit", version, about = "Infer geometric constraints from pose and wrench recordings")]
struct Cli {
    /// Seed for all randomized steps (fit restarts, window sampling).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Kinematic,
    Combined,
}

impl From<ModeArg> for FitMode {
    fn from(m: ModeArg) -> FitMode {
        match m {
            ModeArg::Kinematic => FitMode::Kinematic,
            ModeArg::Combined => FitMode::Combined,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: segment, fit all models, select, report.
    Infer {
        #[arg(long)]
        input: PathBuf,
        /// TOML pipeline configuration; defaults used when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured fit mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Report file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a single model to a sample range and emit parameters.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: String,
        /// Inclusive:exclusive sample index range, e.g. 0:240; whole file
        /// when absent.
        #[arg(long)]
        range: Option<String>,
        #[arg(long, value_enum, default_value = "combined")]
        mode: ModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic demonstration from a TOML spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        /// Trajectory output; a ground-truth sidecar is written next to it
        /// with the extension `labels.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit-error-versus-window-length curves for one model, both modes.
    EvalCurve {
        #[arg(long)]
        input: PathBuf,
        /// Ground-truth demonstration the fits are scored against.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        model: String,
        /// Comma list or `lo:hi:log` for doubling steps.
        #[arg(long, default_value = "2:256:log")]
        lengths: String,
        #[arg(long, default_value_t = 5)]
        per_length: usize,
        /// CSV output; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InsufficientData(_) => 4,
        Error::NoSegments => 3,
        _ => 2,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text).map_err(Error::from),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// A synth spec file: either one constrained recording or a script of
/// free-space and constrained steps.
#[derive(Deserialize)]
#[serde(untagged)]
enum SynthFile {
    Script {
        #[serde(default = "default_rate")]
        rate_hz: f64,
        script: Vec<ScriptStep>,
    },
    Single(SynthSpec),
}

fn default_rate() -> f64 {
    120.0
}

fn load_demo(path: &Path, velocity_window: usize) -> Result<wrenchfit::Demonstration, Error> {
    let (demo, had_velocities) = read_trajectory_file(path)?;
    if had_velocities {
        Ok(demo)
    } else {
        estimate_velocities(&demo, velocity_window)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Infer {
            input,
            config,
            mode,
            out,
        } => {
            let mut cfg = match config {
                Some(path) => PipelineConfig::from_toml(&fs::read_to_string(path)?)?,
                None => PipelineConfig::default(),
            };
            if let Some(m) = mode {
                cfg.fit.mode = m.into();
            }
            let (demo, had_velocities) = read_trajectory_file(&input)?;
            let report = run_inference(&demo, &cfg, had_velocities, cli.seed)?;
            emit(
                out.as_deref(),
                &serde_json::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?,
            )
        }
        Command::Fit {
            input,
            model,
            range,
            mode,
            out,
        } => {
            let kind = ModelKind::from_name(&model)?;
            let demo = load_demo(&input, PipelineConfig::default().velocity_window)?;
            let n = demo.samples().len();
            let (a, b) = match range {
                Some(spec) => {
                    let (a, b) = spec
                        .split_once(':')
                        .ok_or_else(|| Error::invalid(format!("bad range '{spec}'")))?;
                    let a: usize = a
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad range '{spec}'")))?;
                    let b: usize = b
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad range '{spec}'")))?;
                    if a >= b || b > n {
                        return Err(Error::invalid(format!(
                            "range {a}:{b} outside 0:{n}"
                        )));
                    }
                    (a, b)
                }
                None => (0, n),
            };
            let mut fit_cfg = PipelineConfig::default().fit;
            fit_cfg.mode = mode.into();
            let res = fit(kind, &demo.samples()[a..b], &fit_cfg, cli.seed)?;
            let doc = serde_json::json!({
                "model": kind,
                "range": [a, b],
                "mode": fit_cfg.mode,
                "alpha": res.params.data(),
                "n_stored_params": param_len(kind),
                "objective": res.objective,
                "k_error": res.k_error,
                "w_error": res.w_error,
                "irls_rounds": res.iterations,
            });
            emit(
                out.as_deref(),
                &serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))?,
            )
        }
        Command::Synth { spec, out } => {
            let text = fs::read_to_string(spec)?;
            let parsed: SynthFile =
                toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let labeled = match parsed {
                SynthFile::Script { rate_hz, script } => script_task(&script, rate_hz)?,
                SynthFile::Single(spec) => generate(&spec)?,
            };
            write_trajectory_file(&out, &labeled.demo, true)?;
            let sidecar = out.with_extension("labels.json");
            let file = fs::File::create(&sidecar)?;
            write_labels(file, &labeled)?;
            eprintln!(
                "wrote {} samples, {} labeled segments ({})",
                labeled.demo.samples().len(),
                labeled.true_segments.len(),
                sidecar.display()
            );
            Ok(())
        }
        Command::EvalCurve {
            input,
            truth,
            model,
            lengths,
            per_length,
            out,
        } => {
            let kind = ModelKind::from_name(&model)?;
            let lengths = parse_lengths(&lengths)?;
            let cfg = PipelineConfig::default();
            let demo = load_demo(&input, cfg.velocity_window)?;
            let truth_demo = load_demo(&truth, cfg.velocity_window)?;
            for &l in &lengths {
                if l > demo.samples().len() {
                    eprintln!("skipping length {l}: only {} samples", demo.samples().len());
                }
            }
            let rows = eval_curve(
                &demo,
                &truth_demo,
                kind,
                &lengths,
                per_length,
                &cfg.fit,
                cli.seed,
            )?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["length", "mode", "mean_error_m", "std_error_m", "fits_ok"])
                .map_err(|e| Error::Parse(e.to_string()))?;
            for row in &rows {
                let mode = match row.mode {
                    FitMode::Kinematic => "kinematic",
                    FitMode::Combined => "combined",
                };
                w.write_record([
                    row.length.to_string(),
                    mode.to_string(),
                    format!("{:.9e}", row.mean_error_m),
                    format!("{:.9e}", row.std_error_m),
                    row.fits_ok.to_string(),
                ])
                .map_err(|e| Error::Parse(e.to_string()))?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| Error::Parse(e.to_string()))?;
            emit(
                out.as_deref(),
                String::from_utf8_lossy(&bytes).trim_end(),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
