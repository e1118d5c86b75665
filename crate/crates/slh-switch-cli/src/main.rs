use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use slh_switch::sweep::{grid_sweep, SweepAxis, SweepBase, SweepBudget, SweepParam};
use slh_switch::{integrate, SwitchError};
use slh_switch_cli::config::RunConfig;
use slh_switch_cli::output::{surface_csv, timeseries_csv, OutDir, Summary};
use slh_switch_cli::reproduce::{load_or_run_calibration, run_calibration, run_target, Target};

const EXIT_OK: u8 = 0;
const EXIT_GENERIC: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NON_CONVERGED: u8 = 3;
const EXIT_DIVERGENCE: u8 = 4;
const EXIT_BUDGET: u8 = 5;

/// Simulator workbench for a single-photon switching network: run scenarios,
/// sweep parameters, reproduce the bundled benchmarks.
#[derive(Parser)]
#[command(name = "slh-switch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write timeseries.csv + summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep 1-2 parameters over explicit value lists.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Axis as name=v1,v2,... (repeatable; up to two). Names: gamma1,
        /// gamma2, gamma3, bandwidth_s, bandwidth_c, tau, t_a_c, t0, j, dt.
        #[arg(long = "axis")]
        axes: Vec<String>,
        /// maxP2, fluxDiff, or fluxValue:<channel>:<kind>.
        #[arg(long)]
        objective: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a bundled benchmark target and report its metrics.
    Reproduce {
        /// One of: p2-optimum, fig4, stepA, stepB, modelA-final, modelB,
        /// extinction, recovery.
        target: String,
        #[arg(long)]
        out: PathBuf,
        /// Use a previously written calibration.json instead of
        /// <out>/calibration.json.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Re-run a configuration at dt/2 and cutoff+1 and report the deltas.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        /// Also write convergence.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resolve the rate-unit convention against the bundled benchmark.
    Calibrate {
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code_for(err: &SwitchError) -> u8 {
    match err {
        SwitchError::Divergence { .. } => EXIT_DIVERGENCE,
        SwitchError::BudgetExceeded { .. } => EXIT_BUDGET,
        _ => EXIT_CONFIG,
    }
}

fn budget_from_env() -> SweepBudget {
    match std::env::var("SLH_SWITCH_BUDGET_SECONDS") {
        Ok(text) => match text.parse::<f64>() {
            Ok(seconds) if seconds > 0.0 => SweepBudget::seconds(seconds),
            _ => {
                eprintln!("warning: ignoring unparsable SLH_SWITCH_BUDGET_SECONDS={text}");
                SweepBudget::unlimited()
            }
        },
        Err(_) => SweepBudget::unlimited(),
    }
}

fn load_config(path: &PathBuf) -> Result<RunConfig, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read config {}: {e}", path.display());
        EXIT_CONFIG
    })?;
    RunConfig::from_json(&text).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })
}

fn cmd_simulate(config_path: PathBuf, out_path: PathBuf) -> u8 {
    let cfg = match load_config(&config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let scenario = match cfg.to_scenario() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    // Validation comes before any file is created.
    let traj = match integrate(&scenario) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let result = (|| -> anyhow::Result<bool> {
        let mut out = OutDir::create(&out_path)?;
        out.write_text("timeseries.csv", &timeseries_csv(&traj.samples))?;
        let summary = Summary::for_run(&scenario, &traj, cfg.convention);
        out.write_json("summary.json", &summary)?;
        out.write_json("config_resolved.json", &cfg)?;
        out.append_manifest(
            "simulate",
            serde_json::to_value(&cfg)?,
            scenario.dt,
            scenario.horizon,
        )?;
        println!(
            "simulate: {} steps, Phi = [{:.6}, {:.6}, {:.6}], max P2 = {:.6}, residual = {:.3e}, converged = {}",
            traj.steps,
            traj.integrated[0],
            traj.integrated[1],
            traj.integrated[2],
            traj.max_p2,
            traj.residual,
            traj.converged
        );
        Ok(traj.converged)
    })();
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_NON_CONVERGED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_GENERIC
        }
    }
}

fn parse_axis(text: &str) -> Result<SweepAxis, SwitchError> {
    let (name, values) = text.split_once('=').ok_or_else(|| {
        SwitchError::InvalidScenario(format!("axis `{text}` is not name=v1,v2,..."))
    })?;
    let param = SweepParam::from_name(name)?;
    let values: Result<Vec<f64>, _> = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| SwitchError::InvalidScenario(format!("bad axis value `{v}`")))
        })
        .collect();
    SweepAxis::new(param, values?)
}

fn cmd_sweep(config_path: PathBuf, axes: Vec<String>, objective: String, out_path: PathBuf) -> u8 {
    let cfg = match load_config(&config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let run = || -> Result<_, SwitchError> {
        let scenario = cfg.to_scenario()?;
        let preset = cfg.preset()?.ok_or_else(|| {
            SwitchError::InvalidScenario(
                "sweeps need preset schedules (explicit breakpoint lists cannot be re-derived)"
                    .into(),
            )
        })?;
        let parsed_axes: Result<Vec<SweepAxis>, _> = axes.iter().map(|a| parse_axis(a)).collect();
        let parsed_axes = parsed_axes?;
        let objective = objective.parse()?;
        let base = SweepBase {
            scenario,
            preset,
            convention: cfg.convention,
        };
        grid_sweep(&base, &parsed_axes, objective, budget_from_env())
    };
    match run() {
        Ok(result) => {
            let write = (|| -> anyhow::Result<()> {
                let mut out = OutDir::create(&out_path)?;
                out.write_text("surface.csv", &surface_csv(&result))?;
                let argmax = result.argmax().map(|best| {
                    let mut params = serde_json::Map::new();
                    for (axis, v) in result.axes.iter().zip(&best.params) {
                        params.insert(axis.param.name().to_string(), serde_json::json!(v));
                    }
                    serde_json::json!({
                        "schema": "slh-switch/argmax/1",
                        "objective": result.objective,
                        "params": params,
                        "value": best.value,
                        "provenance": result.provenance,
                    })
                });
                out.write_json(
                    "argmax.json",
                    &argmax.clone().unwrap_or(serde_json::json!({
                        "schema": "slh-switch/argmax/1",
                        "error": "no converged grid point"
                    })),
                )?;
                out.append_manifest(
                    "sweep",
                    serde_json::to_value(&cfg)?,
                    result.provenance.dt,
                    result.provenance.horizon,
                )?;
                Ok(())
            })();
            if let Err(e) = write {
                eprintln!("error: {e}");
                return EXIT_GENERIC;
            }
            match result.argmax() {
                Some(best) => {
                    println!(
                        "sweep: {} points, argmax {:?} -> {:.6}",
                        result.points.len(),
                        best.params,
                        best.value
                    );
                    EXIT_OK
                }
                None => {
                    eprintln!("sweep: no converged grid point");
                    EXIT_NON_CONVERGED
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn cmd_reproduce(target: String, out_path: PathBuf, calibration: Option<PathBuf>) -> u8 {
    let target = match Target::from_name(&target) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = (|| -> anyhow::Result<u8> {
        let mut out = OutDir::create(&out_path)?;
        let calibration = load_or_run_calibration(out.path(), calibration.as_deref())?;
        if calibration.report.unresolved {
            eprintln!(
                "note: unit calibration unresolved (as-given dev {:.1}%, times-2pi dev {:.1}%); using {:?}",
                100.0 * calibration.report.as_given_rel_dev,
                100.0 * calibration.report.times_2pi_rel_dev,
                calibration.effective_convention
            );
        }
        let report = run_target(target, &mut out, &calibration, budget_from_env())?;
        out.append_manifest(
            "reproduce",
            serde_json::json!({"target": target.name(), "convention": report.convention}),
            0.0,
            0.0,
        )?;
        for m in &report.metrics {
            match (m.reference, m.relative_deviation) {
                (Some(r), Some(d)) => println!(
                    "{}: {} = {:.6e} (reference {:.6e}, deviation {:.1}%)",
                    target.name(),
                    m.name,
                    m.value,
                    r,
                    100.0 * d
                ),
                _ => println!("{}: {} = {:.6e}", target.name(), m.name, m.value),
            }
        }
        Ok(if report.converged {
            EXIT_OK
        } else {
            EXIT_NON_CONVERGED
        })
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            if let Some(se) = e.downcast_ref::<SwitchError>() {
                eprintln!("error: {se}");
                return exit_code_for(se);
            }
            eprintln!("error: {e}");
            EXIT_GENERIC
        }
    }
}

fn cmd_convergence(config_path: PathBuf, out_path: Option<PathBuf>) -> u8 {
    let cfg = match load_config(&config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let run = || -> Result<serde_json::Value, SwitchError> {
        let scenario = cfg.to_scenario()?;
        let base = integrate(&scenario)?;
        let mut half = scenario.clone();
        half.dt /= 2.0;
        let fine = integrate(&half)?;
        let mut bumped = scenario.clone();
        bumped.spec.cutoff_cavity1 += 1;
        bumped.spec.cutoff_cavity2 += 1;
        let lifted = integrate(&bumped)?;
        Ok(serde_json::json!({
            "schema": "slh-switch/convergence/1",
            "base": {"phi2": base.integrated[1], "max_p2": base.max_p2, "dt": scenario.dt,
                      "cavity_cutoff": scenario.spec.cutoff_cavity1},
            "dt_halved": {"phi2": fine.integrated[1], "max_p2": fine.max_p2},
            "cutoff_raised": {"phi2": lifted.integrated[1], "max_p2": lifted.max_p2},
            "delta_phi2_dt": (base.integrated[1] - fine.integrated[1]).abs(),
            "delta_phi2_cutoff": (base.integrated[1] - lifted.integrated[1]).abs(),
            "delta_max_p2_dt": (base.max_p2 - fine.max_p2).abs(),
            "delta_max_p2_cutoff": (base.max_p2 - lifted.max_p2).abs(),
        }))
    };
    match run() {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            if let Some(dir) = out_path {
                let write = (|| -> anyhow::Result<()> {
                    let mut out = OutDir::create(&dir)?;
                    out.write_json("convergence.json", &report)?;
                    out.append_manifest(
                        "convergence",
                        serde_json::to_value(&cfg).unwrap_or_default(),
                        cfg.integration.dt,
                        cfg.integration.t_end,
                    )?;
                    Ok(())
                })();
                if let Err(e) = write {
                    eprintln!("error: {e}");
                    return EXIT_GENERIC;
                }
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn cmd_calibrate(out_path: PathBuf) -> u8 {
    match run_calibration() {
        Ok(file) => {
            let write = (|| -> anyhow::Result<()> {
                let mut out = OutDir::create(&out_path)?;
                out.write_json("calibration.json", &file)?;
                out.append_manifest("calibrate", serde_json::json!({}), 0.0, 0.0)?;
                Ok(())
            })();
            if let Err(e) = write {
                eprintln!("error: {e}");
                return EXIT_GENERIC;
            }
            println!(
                "calibrate: as-given max P2 = {:.6} ({:.1}% off), times-2pi max P2 = {:.6} ({:.1}% off)",
                file.report.as_given_max_p2,
                100.0 * file.report.as_given_rel_dev,
                file.report.times_2pi_max_p2,
                100.0 * file.report.times_2pi_rel_dev,
            );
            match file.report.chosen {
                Some(c) => println!("calibrate: selected {c:?}"),
                None => println!(
                    "calibrate: UNRESOLVED (neither within 25%); falling back to {:?}",
                    file.effective_convention
                ),
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Simulate { config, out } => cmd_simulate(config, out),
        Command::Sweep {
            config,
            axes,
            objective,
            out,
        } => cmd_sweep(config, axes, objective, out),
        Command::Reproduce {
            target,
            out,
            calibration,
        } => cmd_reproduce(target, out, calibration),
        Command::Convergence { config, out } => cmd_convergence(config, out),
        Command::Calibrate { out } => cmd_calibrate(out),
    };
    ExitCode::from(code)
}
