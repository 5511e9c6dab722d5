//! Pick-and-place scenario, scripted runs, event logs and task metrics.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gait::RobotMode;
use crate::teleop::{Command, SubmitResult, TeleopSettings};
use crate::world::{Event, EventKind, World};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("script entry {index}: {message}")]
    Script { index: usize, message: String },
    #[error("event log line {line}: {message}")]
    EventLog { line: usize, message: String },
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    /// Radians; when absent the robot faces the ball.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default = "default_ball_radius")]
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default = "default_aperture_radius")]
    pub aperture_radius: f64,
}

impl BoxSpec {
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }
}

fn default_ball_radius() -> f64 {
    0.0335
}

fn default_aperture_radius() -> f64 {
    0.075
}

fn default_return_tolerance() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub robot_start: StartPose,
    pub ball: BallSpec,
    #[serde(rename = "box")]
    pub target_box: BoxSpec,
    /// Distance from the start position that counts as "back at start".
    #[serde(default = "default_return_tolerance")]
    pub return_tolerance: f64,
    #[serde(default)]
    pub teleop: TeleopSettings,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            robot_start: StartPose { x: 2.0, y: 1.0, heading: None },
            ball: BallSpec { x: 0.0, y: 0.0, radius: default_ball_radius() },
            target_box: BoxSpec { x: 0.0, y: 0.2, aperture_radius: default_aperture_radius() },
            return_tolerance: default_return_tolerance(),
            teleop: TeleopSettings::default(),
        }
    }
}

impl Scenario {
    pub fn start_heading(&self) -> f64 {
        self.robot_start.heading.unwrap_or_else(|| {
            (self.ball.y - self.robot_start.y).atan2(self.ball.x - self.robot_start.x)
        })
    }

    pub fn ball_rest_position(&self) -> Vector3<f64> {
        Vector3::new(self.ball.x, self.ball.y, self.ball.radius)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let finite = [
            self.robot_start.x,
            self.robot_start.y,
            self.robot_start.heading.unwrap_or(0.0),
            self.ball.x,
            self.ball.y,
            self.target_box.x,
            self.target_box.y,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(ScenarioError::Invalid("coordinates must be finite".into()));
        }
        let positive = [
            ("ball.radius", self.ball.radius),
            ("box.aperture_radius", self.target_box.aperture_radius),
            ("return_tolerance", self.return_tolerance),
            ("teleop.reach_threshold", self.teleop.reach_threshold),
            ("teleop.jog_distance", self.teleop.jog_distance),
            ("teleop.grasp_radius", self.teleop.grasp_radius),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ScenarioError::Invalid(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        Self::from_json(&read(path.as_ref())?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum ScriptEntry {
    Plain(String),
    Repeated { command: String, repeat: u32 },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptDoc {
    commands: Vec<ScriptEntry>,
}

/// An operator script: commands submitted in order, each once the robot is idle.
///
/// JSON form: `{"commands": ["step_forward", {"command": "arm_jog -z", "repeat": 5}]}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Script {
    pub commands: Vec<Command>,
}

impl Script {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let doc: ScriptDoc = serde_json::from_str(text)?;
        let mut commands = Vec::new();
        for (index, entry) in doc.commands.into_iter().enumerate() {
            let (text, repeat) = match entry {
                ScriptEntry::Plain(text) => (text, 1),
                ScriptEntry::Repeated { command, repeat } => (command, repeat),
            };
            let cmd: Command = text.parse().map_err(|e: crate::teleop::ProtocolError| {
                ScenarioError::Script { index, message: e.to_string() }
            })?;
            commands.extend(std::iter::repeat_n(cmd, repeat as usize));
        }
        if commands.is_empty() {
            return Err(ScenarioError::Invalid("script has no commands".into()));
        }
        Ok(Self { commands })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        Self::from_json(&read(path.as_ref())?)
    }
}

/// Time spent in each part of the task, seconds of simulated clock.
///
/// Parts that never finished are 0. `total_time` is the time of success, or
/// of the last logged event when the task was not completed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub total_time: f64,
    pub walk_to_goal_time: f64,
    pub telemanipulation_time: f64,
    pub walk_to_start_time: f64,
    pub trials: u32,
    pub success: bool,
}

/// Splits an event log into task segments.
///
/// Walking to the goal ends at the first switch to manipulation;
/// telemanipulation ends at the first switch back to locomotion after the
/// ball lands in the box; walking back ends at success.
pub fn segment_metrics(events: &[Event]) -> ScenarioMetrics {
    let first = |from: f64, pred: &dyn Fn(&EventKind) -> bool| {
        events.iter().find(|e| e.t >= from && pred(&e.kind)).map(|e| e.t)
    };
    let goal = first(0.0, &|k| matches!(k, EventKind::ModeChanged { mode: RobotMode::Manipulation }));
    let placed = goal.and_then(|g| first(g, &|k| matches!(k, EventKind::Release { in_box: true })));
    let manip_end =
        placed.and_then(|p| first(p, &|k| matches!(k, EventKind::ModeChanged { mode: RobotMode::Locomotion })));
    let success = first(0.0, &|k| matches!(k, EventKind::Success {}));
    let done_back = match (manip_end, success) {
        (Some(m), Some(s)) if s >= m => Some(s),
        _ => None,
    };

    let walk_to_goal = goal.unwrap_or(0.0);
    let telemanipulation = match (goal, manip_end) {
        (Some(g), Some(m)) => m - g,
        _ => 0.0,
    };
    let walk_to_start = match (manip_end, done_back) {
        (Some(m), Some(s)) => s - m,
        _ => 0.0,
    };
    let failures = events.iter().filter(|e| matches!(e.kind, EventKind::Failure { .. })).count() as u32;
    let total_time = match done_back {
        Some(_) => walk_to_goal + telemanipulation + walk_to_start,
        None => success.or(events.last().map(|e| e.t)).unwrap_or(0.0),
    };
    ScenarioMetrics {
        total_time,
        walk_to_goal_time: walk_to_goal,
        telemanipulation_time: telemanipulation,
        walk_to_start_time: walk_to_start,
        trials: failures + 1,
        success: success.is_some(),
    }
}

pub fn write_event_log<W: Write>(mut out: W, events: &[Event]) -> std::io::Result<()> {
    for event in events {
        serde_json::to_writer(&mut out, event)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a JSON-lines event log; blank lines are skipped.
pub fn read_event_log<R: BufRead>(input: R) -> Result<Vec<Event>, ScenarioError> {
    let mut events = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line = line.map_err(|e| ScenarioError::EventLog { line: index + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line)
            .map_err(|e| ScenarioError::EventLog { line: index + 1, message: e.to_string() })?;
        events.push(event);
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub success: bool,
    pub ticks: u64,
    pub clock: f64,
    pub trial_count: u32,
    pub accepted: usize,
    pub rejected: usize,
    /// Commands left unsent because the task was already complete.
    pub skipped: usize,
    /// Sum of the nominal durations of the accepted commands, ticks.
    pub nominal_ticks: u64,
    pub metrics: ScenarioMetrics,
}

/// Plays `script` against `world`, submitting each command as soon as the
/// robot is idle, then runs until the last command finishes. Stops feeding
/// commands once the task has succeeded.
pub fn run_scripted(world: &mut World, script: &Script) -> RunReport {
    run_scripted_with(world, script, |_| {})
}

/// Like [`run_scripted`], calling `on_tick` after every simulation tick.
pub fn run_scripted_with(world: &mut World, script: &Script, mut on_tick: impl FnMut(&World)) -> RunReport {
    let mut idle = |world: &mut World| {
        while world.busy() {
            world.step();
            on_tick(world);
        }
    };
    let mut accepted = 0;
    let mut rejected = 0;
    let mut skipped = 0;
    let mut nominal_ticks = 0u64;
    for cmd in &script.commands {
        idle(world);
        if world.success() {
            skipped += 1;
            continue;
        }
        let ticks = world.command_ticks(cmd) as u64;
        match world.submit(*cmd) {
            SubmitResult::Accepted => {
                accepted += 1;
                nominal_ticks += ticks;
            }
            _ => rejected += 1,
        }
    }
    idle(world);
    RunReport {
        success: world.success(),
        ticks: world.tick(),
        clock: world.clock(),
        trial_count: world.trial_count(),
        accepted,
        rejected,
        skipped,
        nominal_ticks,
        metrics: segment_metrics(world.events()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RobotConfig;
    use crate::teleop::{Axis, Sign};
    use approx::assert_abs_diff_eq;

    fn ev(t: f64, kind: EventKind) -> Event {
        Event { t, kind }
    }

    #[test]
    fn default_scenario_round_trips() {
        let s = Scenario::default();
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
        let minimal = r#"{"robot_start":{"x":2,"y":1},"ball":{"x":0,"y":0},"box":{"x":0,"y":0.2}}"#;
        assert_eq!(Scenario::from_json(minimal).unwrap(), s);
    }

    #[test]
    fn rejects_nonpositive_sizes() {
        let mut s = Scenario::default();
        s.return_tolerance = 0.0;
        assert!(matches!(s.validate(), Err(ScenarioError::Invalid(_))));
        assert!(Scenario::from_json(r#"{"robot_start":{"x":2,"y":1}}"#).is_err());
    }

    #[test]
    fn script_expands_repeats() {
        let script = Script::from_json(
            r#"{"commands":["rotate_right",{"command":"arm_jog -z","repeat":3},"gripper_close"]}"#,
        )
        .unwrap();
        assert_eq!(script.commands.len(), 5);
        assert_eq!(script.commands[1], Command::ArmJog { axis: Axis::Z, sign: Sign::Negative });
        let err = Script::from_json(r#"{"commands":["step_forward","moonwalk"]}"#).unwrap_err();
        assert!(matches!(err, ScenarioError::Script { index: 1, .. }));
    }

    #[test]
    fn metrics_from_a_complete_log() {
        let events = vec![
            ev(0.0, EventKind::CommandAccepted { command: Command::StepForward }),
            ev(12.0, EventKind::ModeChanged { mode: RobotMode::Manipulation }),
            ev(20.0, EventKind::Release { in_box: false }),
            ev(20.0, EventKind::Failure { trial: 1 }),
            ev(30.0, EventKind::Release { in_box: true }),
            ev(45.0, EventKind::ModeChanged { mode: RobotMode::Locomotion }),
            ev(61.0, EventKind::Success {}),
        ];
        let m = segment_metrics(&events);
        assert_eq!(m.walk_to_goal_time, 12.0);
        assert_eq!(m.telemanipulation_time, 33.0);
        assert_eq!(m.walk_to_start_time, 16.0);
        assert_eq!(m.total_time, 61.0);
        assert_eq!(m.trials, 2);
        assert!(m.success);
    }

    #[test]
    fn metrics_of_an_unfinished_log() {
        let events = vec![
            ev(12.0, EventKind::ModeChanged { mode: RobotMode::Manipulation }),
            ev(15.0, EventKind::ModeChanged { mode: RobotMode::Locomotion }),
        ];
        let m = segment_metrics(&events);
        assert_eq!(m.walk_to_goal_time, 12.0);
        assert_eq!(m.telemanipulation_time, 0.0);
        assert_eq!(m.walk_to_start_time, 0.0);
        assert_eq!(m.total_time, 15.0);
        assert_eq!(m.trials, 1);
        assert!(!m.success);
        assert_eq!(segment_metrics(&[]).total_time, 0.0);
    }

    #[test]
    fn segmentation_example() {
        let events = vec![
            ev(200.0, EventKind::ModeChanged { mode: RobotMode::Manipulation }),
            ev(300.0, EventKind::Release { in_box: true }),
            ev(380.0, EventKind::ModeChanged { mode: RobotMode::Locomotion }),
            ev(460.0, EventKind::Success {}),
        ];
        let m = segment_metrics(&events);
        assert_eq!(
            (m.walk_to_goal_time, m.telemanipulation_time, m.walk_to_start_time, m.total_time),
            (200.0, 180.0, 80.0, 460.0)
        );
        let failures = [ev(1.0, EventKind::Failure { trial: 1 }), ev(2.0, EventKind::Failure { trial: 2 })];
        assert_eq!(segment_metrics(&failures).trials, 3);
    }

    #[test]
    fn cancel_only_script_is_incomplete() {
        let script = Script::from_json(r#"{"commands":["cancel_rotation","cancel_rotation"]}"#).unwrap();
        let mut world = World::new(RobotConfig::default(), Scenario::default());
        let report = run_scripted(&mut world, &script);
        assert!(!report.success);
        let m = report.metrics;
        assert_eq!((m.walk_to_goal_time, m.telemanipulation_time, m.walk_to_start_time), (0.0, 0.0, 0.0));
        assert_eq!(m.total_time, report.clock);
    }

    #[test]
    fn empty_script_is_rejected() {
        assert!(matches!(Script::from_json(r#"{"commands":[]}"#), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn event_log_round_trip_and_errors() {
        let events = vec![
            ev(0.5, EventKind::Grasp { captured: true }),
            ev(1.25, EventKind::Success {}),
        ];
        let mut buf = Vec::new();
        write_event_log(&mut buf, &events).unwrap();
        assert_eq!(read_event_log(buf.as_slice()).unwrap(), events);
        let bad = b"{\"t\":0,\"kind\":\"success\",\"payload\":{}}\n\nnot json\n";
        let err = read_event_log(&bad[..]).unwrap_err();
        assert!(matches!(err, ScenarioError::EventLog { line: 3, .. }));
    }

    #[test]
    fn scripted_run_time_is_sum_of_durations() {
        let script = Script::from_json(
            r#"{"commands":["step_forward","rotate_left","step_right","gripper_open","switch_mode",
                 {"command":"arm_jog -x","repeat":2},"gripper_close","switch_mode"]}"#,
        )
        .unwrap();
        let mut world = World::new(RobotConfig::default(), Scenario::default());
        let report = run_scripted(&mut world, &script);
        assert_eq!(report.rejected, 1);
        assert_eq!(report.nominal_ticks, 200 + 500 + 200 + 750 + 250 + 750);
        assert_eq!(report.ticks, report.nominal_ticks);
        assert_abs_diff_eq!(report.clock, 53.0, epsilon = 1e-9);
        assert!(!report.success);
    }
}
