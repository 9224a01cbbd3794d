//! Command-line surface: simulate, classify, sweep, fit, figure.
//!
//! Exit codes: 0 on success, 1 on validation/usage errors, 2 on numerical
//! failures (divergence, refinement failure, figure mismatch).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{classify_regime, ClassifierThresholds, RegimeReport};
use crate::error::Result;
use crate::export::{
    export_regime_map_csv, export_trajectory_csv, format_significant, parse_trajectory_csv,
    render_svg_plot, SeriesSelection,
};
use crate::figures::{reproduce_figure, FigureId};
use crate::integrator::integrate;
use crate::model::Scenario;
use crate::scenario_file::{parse_scenario, parse_thresholds};
use crate::sweep::{fit_parameters, run_sweep, AxisSpec, ParamPath, SweepOptions};

#[derive(Parser)]
#[command(
    name = "culturedyn",
    version,
    about = "Simulate and analyze differentiation-synthesis culture dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Svg,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write trajectory artifacts.
    Simulate {
        /// Scenario document to run.
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's horizon.
        #[arg(long)]
        horizon: Option<f64>,
        /// Override the scenario's integration step.
        #[arg(long)]
        dt: Option<f64>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Both)]
        format: OutputFormat,
    },
    /// Integrate a scenario and print each culture's regime.
    Classify {
        #[arg(long)]
        scenario: PathBuf,
        /// Optional thresholds document overriding classifier defaults.
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
    /// Build a regime map over 1 or 2 parameter axes.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Axis as PATH:LO:HI:STEPS, e.g. c0.a:2:20:10 (repeatable).
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Culture index to classify in each cell.
        #[arg(long, default_value_t = 0)]
        culture: usize,
        /// Evaluate cells sequentially instead of concurrently.
        #[arg(long)]
        sequential: bool,
    },
    /// Fit free parameters so the scenario reproduces an observed trajectory.
    Fit {
        /// Observed trajectory CSV (as written by simulate).
        #[arg(long)]
        observed: PathBuf,
        /// Template scenario; must share the observed sampling grid.
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated parameter paths, e.g. a,b,d or c0.a,c1.e.
        #[arg(long)]
        free: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reproduce a canonical figure scenario and verify its regime.
    Figure {
        /// One of fig1a, fig1b, fig2.
        id: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

fn load_thresholds(path: Option<&PathBuf>) -> Result<ClassifierThresholds> {
    match path {
        Some(p) => parse_thresholds(&std::fs::read_to_string(p)?),
        None => Ok(ClassifierThresholds::default()),
    }
}

fn print_report(culture: usize, report: &RegimeReport) {
    println!("culture {culture}: {}", report.label);
    println!("  oscillation_count = {}", report.oscillation_count);
    for (name, v) in [
        ("relative_amplitude_full", report.relative_amplitude_full),
        ("relative_amplitude_early", report.relative_amplitude_early),
        ("relative_amplitude_late", report.relative_amplitude_late),
        ("d_trend_late", report.d_trend_late),
        ("s_monotone_fraction", report.s_monotone_fraction),
    ] {
        println!("  {name} = {}", format_significant(v, 9));
    }
}

fn parse_axis(spec: &str) -> Result<AxisSpec> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = |what: &str| {
        crate::error::Error::InvalidInput(format!("axis '{spec}': {what} (want PATH:LO:HI:STEPS)"))
    };
    if parts.len() != 4 {
        return Err(bad("expected 4 fields"));
    }
    let path: ParamPath = parts[0].parse()?;
    let lo: f64 = parts[1].parse().map_err(|_| bad("bad lo"))?;
    let hi: f64 = parts[2].parse().map_err(|_| bad("bad hi"))?;
    let steps: usize = parts[3].parse().map_err(|_| bad("bad steps"))?;
    Ok(AxisSpec {
        path,
        lo,
        hi,
        steps,
    })
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            scenario,
            horizon,
            dt,
            out,
            format,
        } => {
            let mut sc = load_scenario(&scenario)?;
            if let Some(h) = horizon {
                sc.horizon = h;
            }
            if let Some(step) = dt {
                sc.dt = step;
            }
            sc.validate()?;
            let traj = integrate(&sc)?;
            std::fs::create_dir_all(&out)?;
            if format != OutputFormat::Svg {
                let path = out.join("trajectory.csv");
                std::fs::write(&path, export_trajectory_csv(&traj))?;
                println!("wrote {}", path.display());
            }
            if format != OutputFormat::Csv {
                let path = out.join("trajectory.svg");
                std::fs::write(
                    &path,
                    render_svg_plot(&traj, &SeriesSelection::d_and_s(&traj))?,
                )?;
                println!("wrote {}", path.display());
            }
            for ev in &traj.events {
                println!(
                    "note: culture {} clamped to D = 0 at t = {}",
                    ev.culture,
                    format_significant(ev.time, 9)
                );
            }
            Ok(())
        }
        Command::Classify {
            scenario,
            thresholds,
        } => {
            let sc = load_scenario(&scenario)?;
            let th = load_thresholds(thresholds.as_ref())?;
            let traj = integrate(&sc)?;
            for culture in 0..traj.culture_count() {
                let report = classify_regime(&traj, culture, &th)?;
                print_report(culture, &report);
            }
            Ok(())
        }
        Command::Sweep {
            scenario,
            axes,
            out,
            thresholds,
            culture,
            sequential,
        } => {
            let sc = load_scenario(&scenario)?;
            let th = load_thresholds(thresholds.as_ref())?;
            let axes: Vec<AxisSpec> = axes.iter().map(|s| parse_axis(s)).collect::<Result<_>>()?;
            let options = SweepOptions {
                culture,
                parallel: !sequential,
            };
            let map = run_sweep(&sc, &axes, &th, &options)?;
            std::fs::create_dir_all(&out)?;
            let path = out.join("regime_map.csv");
            std::fs::write(&path, export_regime_map_csv(&map))?;
            println!("wrote {} ({} cells)", path.display(), map.labels.len());
            Ok(())
        }
        Command::Fit {
            observed,
            scenario,
            free,
            seed,
        } => {
            let template = load_scenario(&scenario)?;
            let traj = parse_trajectory_csv(&std::fs::read_to_string(&observed)?)?;
            let paths: Vec<ParamPath> = free
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<Result<_>>()?;
            let fit = fit_parameters(&traj, &template, &paths, seed)?;
            for (path, value) in paths.iter().zip(&fit.values) {
                println!("{path} = {}", format_significant(*value, 9));
            }
            println!("residual = {}", format_significant(fit.residual, 9));
            println!("iterations = {}", fit.iterations);
            println!("converged = {}", fit.converged);
            Ok(())
        }
        Command::Figure { id, out } => {
            let id: FigureId = id.parse()?;
            let rep = reproduce_figure(id, &out)?;
            println!("{id}: refined dt = {}", format_significant(rep.dt_used, 9));
            println!("wrote {}", rep.csv_path.display());
            println!("wrote {}", rep.svg_path.display());
            for (culture, report) in rep.reports.iter().enumerate() {
                print_report(culture, report);
            }
            Ok(())
        }
    }
}
