//! Kinematic simulator and teleoperation stack for a four-limb chassis whose
//! limbs serve both as legs and as a manipulator.

pub mod check;
pub mod config;
pub mod gait;
pub mod kinematics;
pub mod pose;
pub mod scenario;
pub mod teleop;
pub mod world;

pub use check::{invariant_suite, CheckResult};
pub use config::{ConfigError, RobotConfig, LIMB_COUNT};
pub use gait::{GaitEngine, GaitError, GaitParams, GaitPhase, PhaseKind, RobotMode};
pub use kinematics::{JointAngles, KinematicsError, LimbGeometry, StanceConfig};
pub use pose::BodyPose;
pub use scenario::{run_scripted, run_scripted_with, Scenario, Script, ScenarioMetrics};
pub use teleop::{Command, SessionState, SubmitResult};
pub use world::{Event, EventKind, Snapshot, World};
