use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use morphoarms::gait::{RotationDirection, StepDirection, Trajectory};
use morphoarms::scenario::write_event_log;
use morphoarms::{
    invariant_suite, run_scripted_with, BodyPose, Command, GaitEngine, RobotConfig, RobotMode, Scenario, Script,
    World,
};
use morphoarms_service::ServiceConfig;

const EXIT_INCOMPLETE: u8 = 2;
const DEFAULT_PORT: u16 = 8080;

#[derive(Parser)]
#[command(name = "morphoarms", version, about = "Walking/manipulating four-limb robot simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Play a command script against a scenario and report the metrics.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        script: PathBuf,
        /// Robot config; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Pace the run at this multiple of real time. Runs unpaced when omitted.
        #[arg(long)]
        speed: Option<f64>,
        /// Write the segment metrics here as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the event log here as JSON lines.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Serve a live session over WebSocket. MORPHOARMS_PORT overrides --port.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        /// Scenario file; the default layout when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
    },
    /// Write the joint and foot trajectories of a command sequence as CSV.
    ExportGait {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Gait commands played back to back from the home stance.
        #[arg(default_values_t = ["step_forward".to_string()])]
        commands: Vec<String>,
    },
    /// Run the invariant suite on a robot config.
    Check {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}

/// The error chain joined with ": ", skipping causes their parent already quotes.
fn describe(error: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in error.chain() {
        let part = cause.to_string();
        if !text.contains(&part) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&part);
        }
    }
    text
}

fn dispatch(command: Cmd) -> Result<ExitCode> {
    match command {
        Cmd::Run { scenario, script, config, speed, out, events } => {
            run(&scenario, &script, config.as_deref(), speed, out.as_deref(), events.as_deref())
        }
        Cmd::Serve { port, scenario, config, speed } => serve(port, scenario.as_deref(), config.as_deref(), speed),
        Cmd::ExportGait { config, out, commands } => export_gait(config.as_deref(), &out, &commands),
        Cmd::Check { config } => check(config.as_deref()),
    }
}

fn load_config(path: Option<&Path>) -> Result<RobotConfig> {
    match path {
        Some(path) => RobotConfig::load(path).with_context(|| format!("loading robot config {}", path.display())),
        None => Ok(RobotConfig::default()),
    }
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::load(path).with_context(|| format!("loading scenario {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn run(
    scenario: &Path,
    script: &Path,
    config: Option<&Path>,
    speed: Option<f64>,
    out: Option<&Path>,
    events: Option<&Path>,
) -> Result<ExitCode> {
    let config = load_config(config)?;
    let scenario = load_scenario(scenario)?;
    let script = Script::load(script).with_context(|| format!("loading script {}", script.display()))?;
    if let Some(speed) = speed {
        if !(speed.is_finite() && speed > 0.0) {
            bail!("--speed must be a positive number");
        }
    }

    let mut world = World::new(config, scenario);
    let started = Instant::now();
    let report = run_scripted_with(&mut world, &script, |world| {
        if let Some(speed) = speed {
            let due = Duration::from_secs_f64(world.clock() / speed);
            if let Some(wait) = due.checked_sub(started.elapsed()) {
                std::thread::sleep(wait);
            }
        }
        log::trace!("tick {} clock {:.2}", world.tick(), world.clock());
    });

    if let Some(path) = out {
        let mut file = create(path)?;
        serde_json::to_writer_pretty(&mut file, &report.metrics)?;
        writeln!(file)?;
        file.flush()?;
    }
    if let Some(path) = events {
        let mut file = create(path)?;
        write_event_log(&mut file, world.events())?;
        file.flush()?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    if report.success {
        log::info!("scenario complete in {:.2} s", report.metrics.total_time);
        Ok(ExitCode::SUCCESS)
    } else {
        log::warn!("script ended before the scenario was complete");
        Ok(ExitCode::from(EXIT_INCOMPLETE))
    }
}

fn serve(port: u16, scenario: Option<&Path>, config: Option<&Path>, speed: f64) -> Result<ExitCode> {
    let port = match std::env::var("MORPHOARMS_PORT") {
        Ok(value) => value.parse().with_context(|| format!("MORPHOARMS_PORT={value:?} is not a port"))?,
        Err(_) => port,
    };
    if !(speed.is_finite() && speed > 0.0) {
        bail!("--speed must be a positive number");
    }
    let service = ServiceConfig {
        robot: load_config(config)?,
        scenario: match scenario {
            Some(path) => load_scenario(path)?,
            None => Scenario::default(),
        },
        speed,
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", port))
            .await
            .with_context(|| format!("binding port {port}"))?;
        morphoarms_service::serve(listener, service).await?;
        Ok(ExitCode::SUCCESS)
    })
}

/// Plans `names` in order, tracking the mode the way the robot would.
fn plan(config: &RobotConfig, names: &[String]) -> Result<Vec<Trajectory>> {
    let engine = GaitEngine::new(config.clone());
    let mut mode = RobotMode::Locomotion;
    let mut plans = Vec::new();
    for name in names {
        let command: Command = name.parse().with_context(|| format!("parsing command {name:?}"))?;
        let trajectory = match command {
            Command::StepForward => engine.step(mode, StepDirection::Forward)?,
            Command::StepBackward => engine.step(mode, StepDirection::Backward)?,
            Command::StepLeft => engine.step(mode, StepDirection::Left)?,
            Command::StepRight => engine.step(mode, StepDirection::Right)?,
            Command::RotateLeft => engine.rotate_in_place(mode, RotationDirection::Ccw)?,
            Command::RotateRight => engine.rotate_in_place(mode, RotationDirection::Cw)?,
            Command::SwitchMode => {
                let target = mode.other();
                let switch = engine.switch_mode(mode, target, &config.gait.arm_pose)?;
                mode = target;
                match switch {
                    Some(trajectory) => trajectory,
                    None => continue,
                }
            }
            other => bail!("{other} has no gait trajectory to export"),
        };
        plans.push(trajectory);
    }
    Ok(plans)
}

fn export_gait(config: Option<&Path>, out: &Path, commands: &[String]) -> Result<ExitCode> {
    let config = load_config(config)?;
    let plans = plan(&config, commands)?;
    let start = BodyPose::new(0.0, 0.0, 0.0, config.stance_height());
    let mut file = create(out)?;
    morphoarms::gait::write_trajectory_csv(&mut file, &config, &start, &plans)?;
    file.flush()?;
    let ticks: u32 = plans.iter().map(|p| p.total_ticks()).sum();
    log::info!("wrote {} trajectories, {ticks} ticks, to {}", plans.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn check(config: Option<&Path>) -> Result<ExitCode> {
    let config = load_config(config)?;
    let results = invariant_suite(&config);
    for r in &results {
        println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    if failed == 0 {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{failed} of {} checks failed", results.len());
        Ok(ExitCode::from(1))
    }
}
