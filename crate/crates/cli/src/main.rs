//! `cardioscope` command-line entry point.
//!
//! Exit status: 0 when every evaluated requirement passes, 1 when any fails,
//! 2 on a usage, configuration or runtime error.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cardioscope::config::SimConfig;
use cardioscope::control::CommandScript;
use cardioscope::harness::{self, CalibrationSource, HarnessError, MetricsReport, Scenario};
use cardioscope_teleop::{live_executor, LiveConfig, LiveLoop};

#[derive(Debug, Parser)]
#[command(
    name = "cardioscope",
    version,
    about = "Steerable balloon cardioscope simulator and experiment runner"
)]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for rendering noise.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for traces, reports and calibration files.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CalibrationArg {
    /// Calibration file; a fresh calibration sweep is run when omitted.
    #[arg(long, value_name = "PATH")]
    calibration: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Inflation sweep with and without the tool.
    Sweep,
    /// Fit the pixel-ratio calibration and save it.
    Calibrate {
        /// Sweep with the tool inserted.
        #[arg(long)]
        tool: bool,
    },
    /// Repeated 0 to target steps.
    Step(CalibrationArg),
    /// Tool insertion and removal while holding an angle.
    Toolcomp(CalibrationArg),
    /// Replay a recorded knob trace (CSV `time_s,angle_deg`).
    Replay {
        knob: PathBuf,
        #[command(flatten)]
        cal: CalibrationArg,
    },
    /// Run the loop in real time behind the websocket interface.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[command(flatten)]
        cal: CalibrationArg,
    },
}

fn source(arg: &CalibrationArg) -> CalibrationSource {
    arg.calibration
        .clone()
        .map_or(CalibrationSource::Auto, CalibrationSource::File)
}

fn load_config(path: Option<&Path>) -> Result<SimConfig, HarnessError> {
    Ok(match path {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    })
}

fn finish(report: &MetricsReport, out: &Path) -> ExitCode {
    print!("{}", report.summary());
    println!("outputs in {}", out.display());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    let config = load_config(cli.config.as_deref())?;
    let base = Scenario::new("cli", config).with_seed(cli.seed).with_out_dir(&cli.out);
    let code = match &cli.command {
        Command::Sweep => {
            let run = harness::run_sweep(&Scenario {
                name: "sweep".into(),
                ..base
            })?;
            finish(&run.report, &cli.out)
        }
        Command::Calibrate { tool } => {
            let run = harness::run_calibration(
                &Scenario {
                    name: "calibrate".into(),
                    ..base
                },
                *tool,
            )?;
            let c = &run.calibration;
            println!("coefficients (P = sum c_k alpha^k, alpha in deg):");
            for (k, v) in c.coefficients.iter().enumerate() {
                println!("  c{k} = {v:.9e}");
            }
            println!(
                "bracket [{}, {}] deg, rmse {:.3e}, samples {}, monotone {}",
                c.bracket_deg[0], c.bracket_deg[1], c.rmse, c.sample_count, c.monotone
            );
            finish(&run.report, &cli.out)
        }
        Command::Step(cal) => {
            let run = harness::run_step(
                &Scenario {
                    name: "step".into(),
                    ..base
                }
                .with_calibration(source(cal)),
            )?;
            for (i, t) in run.trials.iter().enumerate() {
                let m = &t.metrics;
                println!(
                    "trial {i} seed {}: settle {} s, overshoot {:.3} deg, rate {} deg/s",
                    t.seed,
                    m.settle_time_s.map_or("never".into(), |s| format!("{s:.3}")),
                    m.overshoot_deg,
                    m.mean_rate_deg_s.map_or("undefined".into(), |r| format!("{r:.2}"))
                );
            }
            finish(&run.report, &cli.out)
        }
        Command::Toolcomp(cal) => {
            let run = harness::run_tool_compensation(
                &Scenario {
                    name: "toolcomp".into(),
                    ..base
                }
                .with_calibration(source(cal)),
            )?;
            for ev in &run.events {
                println!(
                    "{} at {} s: transient {:+.3} deg, steady error {:.3} deg, direction {}",
                    if ev.inserted { "insert" } else { "remove" },
                    ev.time_s,
                    ev.transient_deg,
                    ev.steady_state_error_deg,
                    if ev.direction_ok() { "ok" } else { "WRONG" }
                );
            }
            finish(&run.report, &cli.out)
        }
        Command::Replay { knob, cal } => {
            let text = std::fs::read_to_string(knob).map_err(|e| HarnessError::Io {
                path: knob.clone(),
                message: e.to_string(),
            })?;
            let script = CommandScript::parse_knob_trace(&text).map_err(|e| HarnessError::Io {
                path: knob.clone(),
                message: e.to_string(),
            })?;
            let run = harness::replay_operator(
                &Scenario {
                    name: "replay".into(),
                    ..base
                }
                .with_calibration(source(cal)),
                &script,
            )?;
            finish(&run.report, &cli.out)
        }
        Command::Serve { port, host, cal } => {
            let addr: SocketAddr = format!("{host}:{port}").parse().map_err(|e| HarnessError::Io {
                path: PathBuf::from(host),
                message: format!("bad listen address: {e}"),
            })?;
            let scenario = Scenario {
                name: "serve".into(),
                ..base
            }
            .with_calibration(source(cal));
            let calibration = scenario.resolve_calibration()?;
            let executor = live_executor(&scenario.config, calibration, cli.seed)?;
            let live_cfg = LiveConfig::default();
            let rt = tokio::runtime::Runtime::new().map_err(|e| HarnessError::Io {
                path: PathBuf::new(),
                message: e.to_string(),
            })?;
            rt.block_on(async move {
                let loop_ = LiveLoop::spawn(executor, &live_cfg);
                let server = cardioscope_teleop::start(addr, loop_, live_cfg).await?;
                println!("serving on {}", server.url());
                tokio::select! {
                    r = server.wait() => r,
                    _ = tokio::signal::ctrl_c() => Ok(()),
                }
            })
            .map_err(|e| HarnessError::Io {
                path: PathBuf::from(addr.to_string()),
                message: e.to_string(),
            })?;
            ExitCode::SUCCESS
        }
    };
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
