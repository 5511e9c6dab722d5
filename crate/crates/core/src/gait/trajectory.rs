//! Tick-sampled joint trajectories for the four limbs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::compensation::{lifting_angle, theta_tilde};
use super::{GaitError, GaitPhase, PhaseKind};
use crate::config::LIMB_COUNT;
use crate::kinematics::{JointAngles, StanceConfig, JOINT_LIMITS};

/// Motion of one limb across a segment, parameterized by `u ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimbMotion {
    Hold(JointAngles),
    /// Straight line in joint space.
    Interp { from: JointAngles, to: JointAngles },
    /// Joint-space line with the upper arm raised by `lift·sin(πu)` to clear the ground.
    Swing {
        from: JointAngles,
        to: JointAngles,
        lift: f64,
    },
    /// Grounded push: yaw sweeps linearly, pitches follow the lifting angle.
    Push {
        from_yaw: f64,
        to_yaw: f64,
        sweep: f64,
        stance: StanceConfig,
    },
}

fn lerp(a: f64, b: f64, u: f64) -> f64 {
    (1.0 - u) * a + u * b
}

fn lerp_joints(a: &JointAngles, b: &JointAngles, u: f64) -> JointAngles {
    JointAngles::new(
        lerp(a.shoulder_yaw, b.shoulder_yaw, u),
        lerp(a.upper_arm_pitch, b.upper_arm_pitch, u),
        lerp(a.forearm_pitch, b.forearm_pitch, u),
    )
}

impl LimbMotion {
    pub fn at(&self, u: f64) -> Result<JointAngles, GaitError> {
        Ok(match self {
            LimbMotion::Hold(q) => *q,
            LimbMotion::Interp { from, to } => lerp_joints(from, to, u),
            LimbMotion::Swing { from, to, lift } => {
                let mut q = lerp_joints(from, to, u);
                if u > 0.0 && u < 1.0 {
                    q.upper_arm_pitch -= lift * (PI * u).sin();
                }
                q
            }
            LimbMotion::Push {
                from_yaw,
                to_yaw,
                sweep,
                stance,
            } => {
                let yaw = lerp(*from_yaw, *to_yaw, u);
                let xi = lifting_angle(theta_tilde(yaw, *sweep), stance)?;
                JointAngles::new(yaw, stance.theta1_init + xi, stance.theta2_init - xi)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BodyMotion {
    Still,
    /// Straight-line translation at constant speed, body frame at command start.
    Translate { dx: f64, dy: f64 },
    Rotate { dheading: f64 },
}

/// Body displacement relative to the pose at the start of a command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyDelta {
    pub dx: f64,
    pub dy: f64,
    pub dheading: f64,
}

impl BodyDelta {
    fn add_fraction(self, motion: &BodyMotion, u: f64) -> Self {
        match *motion {
            BodyMotion::Still => self,
            BodyMotion::Translate { dx, dy } => BodyDelta {
                dx: self.dx + dx * u,
                dy: self.dy + dy * u,
                ..self
            },
            BodyMotion::Rotate { dheading } => BodyDelta {
                dheading: self.dheading + dheading * u,
                ..self
            },
        }
    }

    /// Expresses `self` relative to `base` (both measured from the same origin).
    fn relative_to(self, base: &BodyDelta) -> Self {
        let (s, c) = (-base.dheading).sin_cos();
        let (ex, ey) = (self.dx - base.dx, self.dy - base.dy);
        BodyDelta {
            dx: c * ex - s * ey,
            dy: s * ex + c * ey,
            dheading: self.dheading - base.dheading,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub kind: PhaseKind,
    pub ticks: u32,
    pub limbs: [LimbMotion; LIMB_COUNT],
    pub grounded: [bool; LIMB_COUNT],
    pub body: BodyMotion,
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Planned(Vec<Segment>),
    /// Plays `original` backwards from `from_tick` to its start.
    Reversed {
        original: Box<Trajectory>,
        from_tick: u32,
    },
}

/// One tick of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub tick: u32,
    pub phase: GaitPhase,
    pub joints: [JointAngles; LIMB_COUNT],
    pub grounded: [bool; LIMB_COUNT],
    pub body: BodyDelta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    leading_limb: usize,
    source: Source,
}

impl Trajectory {
    pub fn planned(leading_limb: usize, segments: Vec<Segment>) -> Result<Self, GaitError> {
        if segments.iter().any(|s| s.ticks == 0) {
            return Err(GaitError::Config("segment with zero ticks".into()));
        }
        let trajectory = Self {
            leading_limb,
            source: Source::Planned(segments),
        };
        trajectory.validate()?;
        Ok(trajectory)
    }

    /// Replays the first `from_tick` ticks of `original` in reverse.
    pub fn reversed(original: Trajectory, from_tick: u32) -> Self {
        let from_tick = from_tick.min(original.total_ticks());
        Self {
            leading_limb: original.leading_limb,
            source: Source::Reversed {
                original: Box::new(original),
                from_tick,
            },
        }
    }

    pub fn leading_limb(&self) -> usize {
        self.leading_limb
    }

    pub fn segments(&self) -> &[Segment] {
        match &self.source {
            Source::Planned(segments) => segments,
            Source::Reversed { .. } => &[],
        }
    }

    pub fn total_ticks(&self) -> u32 {
        match &self.source {
            Source::Planned(segments) => segments.iter().map(|s| s.ticks).sum(),
            Source::Reversed { from_tick, .. } => *from_tick,
        }
    }

    /// Samples the trajectory at `tick ∈ [0, total_ticks]`; tick 0 is the start pose.
    pub fn sample(&self, tick: u32) -> Result<TrajectorySample, GaitError> {
        let tick = tick.min(self.total_ticks());
        match &self.source {
            Source::Planned(segments) => self.sample_planned(segments, tick),
            Source::Reversed {
                original,
                from_tick,
            } => {
                let base = original.sample(*from_tick)?;
                let mut s = original.sample(from_tick - tick)?;
                s.body = s.body.relative_to(&base.body);
                s.tick = tick;
                let progress = if *from_tick == 0 {
                    1.0
                } else {
                    tick as f64 / *from_tick as f64
                };
                s.phase = GaitPhase::new(PhaseKind::CancelRotation, progress, self.leading_limb);
                Ok(s)
            }
        }
    }

    fn sample_planned(&self, segments: &[Segment], tick: u32) -> Result<TrajectorySample, GaitError> {
        let mut body = BodyDelta::default();
        let mut start = 0u32;
        let mut index = 0;
        // Boundary ticks belong to the segment that ends there.
        while index + 1 < segments.len() && tick > start + segments[index].ticks {
            body = body.add_fraction(&segments[index].body, 1.0);
            start += segments[index].ticks;
            index += 1;
        }
        let segment = &segments[index];
        let local = tick - start;
        let u = local as f64 / segment.ticks as f64;
        body = body.add_fraction(&segment.body, u);

        let mut joints = [JointAngles::default(); LIMB_COUNT];
        for (slot, motion) in joints.iter_mut().zip(segment.limbs.iter()) {
            *slot = motion.at(u)?;
        }

        // Progress spans consecutive segments that share a phase kind.
        let (mut group_start, mut group_end) = (start, start + segment.ticks);
        let mut k = index;
        while k > 0 && segments[k - 1].kind == segment.kind {
            k -= 1;
            group_start -= segments[k].ticks;
        }
        let mut k = index;
        while k + 1 < segments.len() && segments[k + 1].kind == segment.kind {
            k += 1;
            group_end += segments[k].ticks;
        }
        let progress = (tick - group_start) as f64 / (group_end - group_start) as f64;

        Ok(TrajectorySample {
            tick,
            phase: GaitPhase::new(segment.kind, progress, self.leading_limb),
            joints,
            grounded: segment.grounded,
            body,
        })
    }

    /// Samples for ticks `0..=total_ticks`.
    pub fn samples(&self) -> Result<Vec<TrajectorySample>, GaitError> {
        (0..=self.total_ticks()).map(|t| self.sample(t)).collect()
    }

    pub fn final_delta(&self) -> Result<BodyDelta, GaitError> {
        Ok(self.sample(self.total_ticks())?.body)
    }

    /// Checks every tick against the joint limits.
    pub fn validate(&self) -> Result<(), GaitError> {
        for tick in 0..=self.total_ticks() {
            let sample = self.sample(tick)?;
            for (limb, q) in sample.joints.iter().enumerate() {
                q.check_limits(&JOINT_LIMITS)
                    .map_err(|source| GaitError::JointLimit {
                        limb_label: format!("limb {limb}"),
                        phase: sample.phase.kind,
                        source,
                    })?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hold_all(q: JointAngles) -> [LimbMotion; LIMB_COUNT] {
        [LimbMotion::Hold(q); LIMB_COUNT]
    }

    #[test]
    fn swing_returns_exact_endpoints() {
        let from = JointAngles::new(0.1, 0.5, 1.0);
        let to = JointAngles::new(-0.2, 0.5, 1.0);
        let swing = LimbMotion::Swing { from, to, lift: 0.2 };
        assert_eq!(swing.at(0.0).unwrap(), from);
        assert_eq!(swing.at(1.0).unwrap(), to);
        assert_abs_diff_eq!(swing.at(0.5).unwrap().upper_arm_pitch, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn progress_spans_segments_of_same_kind() {
        let q = StanceConfig::default().joints(0.0);
        let seg = |ticks| Segment {
            kind: PhaseKind::ModeSwitch,
            ticks,
            limbs: hold_all(q),
            grounded: [true; LIMB_COUNT],
            body: BodyMotion::Still,
        };
        let t = Trajectory::planned(0, vec![seg(10), seg(30)]).unwrap();
        assert_eq!(t.total_ticks(), 40);
        assert_abs_diff_eq!(t.sample(10).unwrap().phase.progress, 0.25);
        assert_abs_diff_eq!(t.sample(20).unwrap().phase.progress, 0.5);
        assert_abs_diff_eq!(t.sample(40).unwrap().phase.progress, 1.0);
    }

    #[test]
    fn reversed_trajectory_returns_to_start() {
        let q0 = StanceConfig::default().joints(0.0);
        let q1 = StanceConfig::default().joints(-0.3);
        let t = Trajectory::planned(
            0,
            vec![Segment {
                kind: PhaseKind::RotatePlace,
                ticks: 20,
                limbs: [LimbMotion::Interp { from: q0, to: q1 }; LIMB_COUNT],
                grounded: [true; LIMB_COUNT],
                body: BodyMotion::Rotate { dheading: 0.4 },
            }],
        )
        .unwrap();
        let back = Trajectory::reversed(t.clone(), 5);
        assert_eq!(back.total_ticks(), 5);
        let end = back.sample(5).unwrap();
        assert_eq!(end.joints, [q0; LIMB_COUNT]);
        assert_abs_diff_eq!(end.body.dheading, -0.1, epsilon = 1e-15);
        assert_eq!(end.phase.kind, PhaseKind::CancelRotation);
    }

    #[test]
    fn validate_reports_limit_violation() {
        let bad = JointAngles::new(0.0, 0.0, 2.0);
        let err = Trajectory::planned(
            0,
            vec![Segment {
                kind: PhaseKind::Recover,
                ticks: 4,
                limbs: hold_all(bad),
                grounded: [false; LIMB_COUNT],
                body: BodyMotion::Still,
            }],
        )
        .unwrap_err();
        assert!(matches!(err, GaitError::JointLimit { .. }));
    }
}
