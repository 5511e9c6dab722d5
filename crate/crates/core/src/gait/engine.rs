use super::trajectory::{BodyMotion, LimbMotion, Segment, Trajectory};
use super::{GaitError, GaitPhase, PhaseKind, RobotMode, RotationDirection, StepDirection};
use crate::config::{RobotConfig, LIMB_COUNT};
use crate::kinematics::JointAngles;

/// Index of the limb raised as a manipulator.
pub const FORWARD_LIMB: usize = 0;

/// Plans joint trajectories for every motion command.
///
/// Every plan starts from the home stance (all yaws zero, vertical forearms)
/// except the switch back to locomotion, which starts from the current arm pose.
#[derive(Debug, Clone)]
pub struct GaitEngine {
    config: RobotConfig,
}

impl GaitEngine {
    pub fn new(config: RobotConfig) -> Self {
        Self { config }
    }

    pub fn config(&self) -> &RobotConfig {
        &self.config
    }

    fn stance(&self, yaw: f64) -> JointAngles {
        self.config.stance.joints(yaw)
    }

    fn require_mode(actual: RobotMode, required: RobotMode) -> Result<(), GaitError> {
        if actual == required {
            Ok(())
        } else {
            Err(GaitError::WrongMode { required, actual })
        }
    }

    /// One locomotion cycle: place the side limbs forward, push the body over
    /// them along the chord, then swing them back to stance.
    pub fn step(&self, mode: RobotMode, direction: StepDirection) -> Result<Trajectory, GaitError> {
        Self::require_mode(mode, RobotMode::Locomotion)?;
        let params = &self.config.gait;
        let sweep = params.sweep_limit;
        let lift = params.swing_lift;
        let lead = direction.leading_limb();
        let trail = (lead + 2) % LIMB_COUNT;
        // Side limbs and the yaw that points each of them along the travel direction.
        let sides = [((lead + 1) % LIMB_COUNT, -sweep), ((lead + 3) % LIMB_COUNT, sweep)];

        let total = params.step_ticks();
        let place = total / 4;
        let push = total / 2;
        let recover = total - place - push;

        let home = self.stance(0.0);
        let mut along_grounded = [false; LIMB_COUNT];
        along_grounded[lead] = true;
        along_grounded[trail] = true;
        let mut side_grounded = [false; LIMB_COUNT];

        let mut place_limbs = [LimbMotion::Hold(home); LIMB_COUNT];
        let mut push_limbs = [LimbMotion::Hold(home); LIMB_COUNT];
        let mut recover_limbs = [LimbMotion::Hold(home); LIMB_COUNT];
        for &(limb, forward_yaw) in &sides {
            side_grounded[limb] = true;
            place_limbs[limb] = LimbMotion::Swing {
                from: home,
                to: self.stance(forward_yaw),
                lift,
            };
            push_limbs[limb] = LimbMotion::Push {
                from_yaw: forward_yaw,
                to_yaw: -forward_yaw,
                sweep,
                stance: self.config.stance,
            };
            recover_limbs[limb] = LimbMotion::Swing {
                from: self.stance(-forward_yaw),
                to: home,
                lift,
            };
        }

        let stride = self.config.stride();
        let [ux, uy] = direction.unit();
        Trajectory::planned(
            lead,
            vec![
                Segment {
                    kind: PhaseKind::PlaceForward,
                    ticks: place,
                    limbs: place_limbs,
                    grounded: along_grounded,
                    body: BodyMotion::Still,
                },
                Segment {
                    kind: PhaseKind::LiftAndPush,
                    ticks: push,
                    limbs: push_limbs,
                    grounded: side_grounded,
                    body: BodyMotion::Translate {
                        dx: stride * ux,
                        dy: stride * uy,
                    },
                },
                Segment {
                    kind: PhaseKind::Recover,
                    ticks: recover,
                    limbs: recover_limbs,
                    grounded: along_grounded,
                    body: BodyMotion::Still,
                },
            ],
        )
    }

    /// All shoulders yaw together while the body turns, then each limb steps
    /// back to stance in index order.
    pub fn rotate_in_place(
        &self,
        mode: RobotMode,
        direction: RotationDirection,
    ) -> Result<Trajectory, GaitError> {
        Self::require_mode(mode, RobotMode::Locomotion)?;
        let params = &self.config.gait;
        let turn = direction.sign() * params.sweep_limit;
        // Feet stay put while the body turns, so the shoulders yaw the other way.
        let yawed = self.stance(-turn);
        let home = self.stance(0.0);

        let total = params.rotation_ticks();
        let place = total / 5;
        let rest = total - place;
        let each = rest / LIMB_COUNT as u32;

        let mut segments = vec![Segment {
            kind: PhaseKind::RotatePlace,
            ticks: place,
            limbs: [LimbMotion::Interp { from: home, to: yawed }; LIMB_COUNT],
            grounded: [true; LIMB_COUNT],
            body: BodyMotion::Rotate { dheading: turn },
        }];
        for limb in 0..LIMB_COUNT {
            let ticks = if limb + 1 == LIMB_COUNT {
                rest - each * (LIMB_COUNT as u32 - 1)
            } else {
                each
            };
            let limbs = std::array::from_fn(|k| match k.cmp(&limb) {
                std::cmp::Ordering::Less => LimbMotion::Hold(home),
                std::cmp::Ordering::Equal => LimbMotion::Swing {
                    from: yawed,
                    to: home,
                    lift: params.swing_lift,
                },
                std::cmp::Ordering::Greater => LimbMotion::Hold(yawed),
            });
            let mut grounded = [true; LIMB_COUNT];
            grounded[limb] = false;
            segments.push(Segment {
                kind: PhaseKind::RotateRecover(limb),
                ticks,
                limbs,
                grounded,
                body: BodyMotion::Still,
            });
        }
        Trajectory::planned(FORWARD_LIMB, segments)
    }

    /// Reverses the first `elapsed` ticks of a rotation, restoring the
    /// pre-rotation stance and heading.
    pub fn cancel_rotation(&self, rotation: &Trajectory, elapsed: u32) -> Trajectory {
        Trajectory::reversed(rotation.clone(), elapsed)
    }

    /// Mode-switch choreography. Returns `None` when already in `target`.
    ///
    /// To manipulation: the two limbs beside the forward limb swing forward
    /// one at a time, then the forward limb rises into `arm_pose`. To
    /// locomotion the same moves play in reverse order starting from `arm`.
    pub fn switch_mode(
        &self,
        current: RobotMode,
        target: RobotMode,
        arm: &JointAngles,
    ) -> Result<Option<Trajectory>, GaitError> {
        if current == target {
            return Ok(None);
        }
        let params = &self.config.gait;
        let sweep = params.sweep_limit;
        let lift = params.swing_lift;
        let home = self.stance(0.0);
        let left = FORWARD_LIMB + 1;
        let right = FORWARD_LIMB + 3;
        let left_forward = self.stance(-sweep);
        let right_forward = self.stance(sweep);

        let total = params.mode_switch_ticks();
        let brace = total * 4 / 15;
        let raise = total - 2 * brace;

        let grounded_except = |limb: usize| {
            let mut g = [true; LIMB_COUNT];
            g[limb] = false;
            g
        };

        let segments = match target {
            RobotMode::Manipulation => {
                let mut first = [LimbMotion::Hold(home); LIMB_COUNT];
                first[left] = LimbMotion::Swing { from: home, to: left_forward, lift };
                let mut second = [LimbMotion::Hold(home); LIMB_COUNT];
                second[left] = LimbMotion::Hold(left_forward);
                second[right] = LimbMotion::Swing { from: home, to: right_forward, lift };
                let mut third = second;
                third[right] = LimbMotion::Hold(right_forward);
                third[FORWARD_LIMB] = LimbMotion::Interp { from: home, to: params.arm_pose };
                vec![
                    (brace, first, grounded_except(left)),
                    (brace, second, grounded_except(right)),
                    (raise, third, grounded_except(FORWARD_LIMB)),
                ]
            }
            RobotMode::Locomotion => {
                let mut first = [LimbMotion::Hold(home); LIMB_COUNT];
                first[left] = LimbMotion::Hold(left_forward);
                first[right] = LimbMotion::Hold(right_forward);
                first[FORWARD_LIMB] = LimbMotion::Interp { from: *arm, to: home };
                let mut second = first;
                second[FORWARD_LIMB] = LimbMotion::Hold(home);
                second[right] = LimbMotion::Swing { from: right_forward, to: home, lift };
                let mut third = second;
                third[right] = LimbMotion::Hold(home);
                third[left] = LimbMotion::Swing { from: left_forward, to: home, lift };
                vec![
                    (raise, first, grounded_except(FORWARD_LIMB)),
                    (brace, second, grounded_except(right)),
                    (brace, third, grounded_except(left)),
                ]
            }
        };

        let segments = segments
            .into_iter()
            .map(|(ticks, limbs, grounded)| Segment {
                kind: PhaseKind::ModeSwitch,
                ticks,
                limbs,
                grounded,
                body: BodyMotion::Still,
            })
            .collect();
        Trajectory::planned(FORWARD_LIMB, segments).map(Some)
    }
}

/// Joint angles of all four limbs `t` seconds into a locomotion-cycle phase.
///
/// Only `Idle` and the three stepping phases are self-contained; the leading
/// limb of `phase` selects the walking direction.
pub fn limb_trajectory_for_phase(
    phase: &GaitPhase,
    t: f64,
    config: &RobotConfig,
) -> Result<[JointAngles; LIMB_COUNT], GaitError> {
    let kind = phase.kind;
    if kind == PhaseKind::Idle {
        return Ok([config.stance.joints(0.0); LIMB_COUNT]);
    }
    if !matches!(
        kind,
        PhaseKind::PlaceForward | PhaseKind::LiftAndPush | PhaseKind::Recover
    ) {
        return Err(GaitError::UnsupportedPhase(kind));
    }
    let direction = match phase.leading_limb % LIMB_COUNT {
        0 => StepDirection::Forward,
        1 => StepDirection::Left,
        2 => StepDirection::Backward,
        _ => StepDirection::Right,
    };
    let plan = GaitEngine::new(config.clone()).step(RobotMode::Locomotion, direction)?;
    let segment = plan
        .segments()
        .iter()
        .find(|s| s.kind == kind)
        .expect("step plan contains every stepping phase");
    let duration = segment.ticks as f64 / config.gait.tick_rate;
    if !(0.0..=duration).contains(&t) {
        return Err(GaitError::Config(format!(
            "t = {t} s outside the {duration} s {kind:?} phase"
        )));
    }
    let u = t / duration;
    let mut joints = [JointAngles::default(); LIMB_COUNT];
    for (slot, motion) in joints.iter_mut().zip(segment.limbs.iter()) {
        *slot = motion.at(u)?;
    }
    Ok(joints)
}
