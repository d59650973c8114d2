//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::{self, SimConfig};
use crate::dictionary::build_dictionary;
use crate::error::{Error, Result};
use crate::matching_pursuit::{decompose, reconstruct};
use crate::simulation::{run_closed_loop, SimRun};
use crate::svg::{line_plot, render_atoms, write_trace_svg, Series};
use crate::trace::{
    read_signal_file, write_atoms_file, write_decomposition_file, write_trace_file,
};

/// Description of the pinned measurement-noise stream, echoed into `config.json`.
pub const NOISE_GENERATOR: &str =
    "ChaCha8Rng::seed_from_u64(seed), one rand_distr::StandardNormal draw per step scaled by std; std = 0 draws nothing";

#[derive(Debug, Parser)]
#[command(
    name = "ampctl",
    version,
    about = "Adaptive matching pursuit identification and control"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON config merged over the built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Dotted `key=value` override, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Also render SVG plots.
    #[arg(long, global = true)]
    pub svg: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Slowly varying rational plant.
    Example1,
    /// Plant with a parameter step at t = 25 s.
    Example2,
    /// Run an arbitrary config file.
    Custom {
        #[arg(value_name = "CONFIG")]
        path: Option<PathBuf>,
    },
    /// Batch matching pursuit of a sampled signal over the configured dictionary.
    Decompose {
        #[arg(value_name = "SIGNAL")]
        signal: PathBuf,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Write every atom of the configured dictionary on a 0.01 grid.
    ExportAtoms,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Example1 => "example1",
            Command::Example2 => "example2",
            Command::Custom { .. } => "custom",
            Command::Decompose { .. } => "decompose",
            Command::ExportAtoms => "export-atoms",
        }
    }
}

fn resolve(cli: &Cli, defaults: Option<SimConfig>, path: Option<&Path>) -> Result<SimConfig> {
    let file = path.map(config::read_config_file).transpose()?;
    let overrides = cli
        .overrides
        .iter()
        .map(|s| config::parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    config::resolve(defaults, file, &overrides)
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(cli.command.name()));
    fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Run metadata written next to the trace.
pub fn run_metadata(config: &SimConfig, run: &SimRun) -> Value {
    json!({
        "config": config,
        "reference_coefficients": run.reference_coefficients,
        "dictionary": {
            "size": run.dictionary.len(),
            "summary": run.dictionary.summary(),
        },
        "identifier": run.identifier,
        "noise_generator": NOISE_GENERATOR,
        "steps": config.steps(),
    })
}

/// Writes `trace.csv`, `metrics.json`, `config.json` (and plots) for one run.
pub fn write_run(dir: &Path, config: &SimConfig, run: &SimRun, svg: bool) -> Result<()> {
    write_trace_file(&dir.join("trace.csv"), &run.trace)?;
    write_json(
        &dir.join("metrics.json"),
        &serde_json::to_value(run.metrics)?,
    )?;
    write_json(&dir.join("config.json"), &run_metadata(config, run))?;
    if svg {
        write_trace_svg(
            &dir.join("output.svg"),
            &run.trace,
            &["y", "ym"],
            "Plant and reference model output",
        )?;
        write_trace_svg(
            &dir.join("input.svg"),
            &run.trace,
            &["u"],
            "Closed-loop input",
        )?;
        write_trace_svg(
            &dir.join("identification.svg"),
            &run.trace,
            &["f_true", "f_hat"],
            "Nonlinearity and estimate",
        )?;
        write_svg(
            &dir.join("atoms.svg"),
            &render_atoms(&run.dictionary, "Basis functions")?,
        )?;
    }
    Ok(())
}

fn write_svg(path: &Path, svg: &str) -> Result<()> {
    fs::write(path, svg).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn simulate(cli: &Cli, config: SimConfig, out: &mut dyn Write) -> Result<()> {
    let dir = out_dir(cli)?;
    let run = run_closed_loop(&config)?;
    write_run(&dir, &config, &run, cli.svg)?;
    let metrics = serde_json::to_string_pretty(&run.metrics)?;
    writeln!(out, "{metrics}").map_err(|e| Error::io("writing stdout", e))
}

/// Executes a parsed command, writing human-readable results to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Example1 => simulate(
            cli,
            resolve(cli, Some(SimConfig::example1()), cli.config.as_deref())?,
            out,
        ),
        Command::Example2 => simulate(
            cli,
            resolve(cli, Some(SimConfig::example2()), cli.config.as_deref())?,
            out,
        ),
        Command::Custom { path } => {
            let path = path
                .as_deref()
                .or(cli.config.as_deref())
                .ok_or_else(|| Error::Config("custom needs a config file".into()))?;
            simulate(cli, resolve(cli, None, Some(path))?, out)
        }
        Command::Decompose {
            signal,
            max_iters,
            tol,
        } => {
            let config = resolve(cli, None, cli.config.as_deref())?;
            let f = read_signal_file(signal)?;
            let dict = build_dictionary(&config.dictionary, config.regressor.dim())?;
            let sampled = dict.to_sampled(f.len())?;
            let result = decompose(&f, &sampled, *max_iters, *tol)?;
            let dir = out_dir(cli)?;
            write_decomposition_file(&dir.join("decomposition.csv"), &result)?;
            if cli.svg {
                let approx = reconstruct(&result, &sampled)?;
                let xs = |v: &[f64]| -> Vec<(f64, f64)> {
                    v.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect()
                };
                let plot = line_plot(
                    &[
                        Series {
                            label: "signal".into(),
                            points: xs(&f),
                        },
                        Series {
                            label: "approximation".into(),
                            points: xs(&approx),
                        },
                    ],
                    "sample",
                    "value",
                    "Matching pursuit approximation",
                )?;
                write_svg(&dir.join("decomposition.svg"), &plot)?;
            }
            let norms = &result.residual_norms;
            writeln!(
                out,
                "{} atoms picked from {}; residual norm {} -> {}",
                result.picks.len(),
                dict.len(),
                norms[0],
                norms[norms.len() - 1]
            )
            .map_err(|e| Error::io("writing stdout", e))
        }
        Command::ExportAtoms => {
            let config = resolve(cli, None, cli.config.as_deref())?;
            let dict = build_dictionary(&config.dictionary, config.regressor.dim())?;
            let dir = out_dir(cli)?;
            write_atoms_file(&dir.join("atoms.csv"), &dict)?;
            if cli.svg {
                write_svg(
                    &dir.join("atoms.svg"),
                    &render_atoms(&dict, "Basis functions")?,
                )?;
            }
            writeln!(out, "{} atoms: {}", dict.len(), dict.summary())
                .map_err(|e| Error::io("writing stdout", e))
        }
    }
}
