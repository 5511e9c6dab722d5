//! Robot geometry configuration and its JSON document.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gait::GaitParams;
use crate::kinematics::{normalize_angle, KinematicsError, LimbGeometry, StanceConfig};

pub const LIMB_COUNT: usize = 4;

pub const DEFAULT_UPPER_ARM_LENGTH: f64 = 0.22;
pub const DEFAULT_FOREARM_LENGTH: f64 = 0.28;
pub const DEFAULT_SHOULDER_RADIUS: f64 = 0.16;

const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("expected {LIMB_COUNT} limbs, found {0}")]
    LimbCount(usize),
    #[error("limb {index} breaks the 90° symmetry of the chassis")]
    Asymmetric { index: usize },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("invalid gait parameters: {0}")]
    Gait(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LimbDoc {
    upper_arm_length: f64,
    forearm_length: f64,
    shoulder_offset: [f64; 3],
    mount_yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StanceDoc {
    theta1_init: f64,
    theta2_init: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RobotDoc {
    limbs: Vec<LimbDoc>,
    stance: StanceDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gait: Option<GaitParams>,
}

/// Four limbs indexed counterclockwise from body-frame +x, plus the standing pose.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotConfig {
    pub limbs: [LimbGeometry; LIMB_COUNT],
    pub stance: StanceConfig,
    pub gait: GaitParams,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self::symmetric(
            DEFAULT_UPPER_ARM_LENGTH,
            DEFAULT_FOREARM_LENGTH,
            DEFAULT_SHOULDER_RADIUS,
            StanceConfig::default(),
        )
    }
}

impl RobotConfig {
    /// Square chassis with limb `k` mounted at angle `k·π/2`.
    pub fn symmetric(
        upper_arm_length: f64,
        forearm_length: f64,
        shoulder_radius: f64,
        stance: StanceConfig,
    ) -> Self {
        let limbs = std::array::from_fn(|k| {
            let yaw = mount_angle(k);
            LimbGeometry::new(upper_arm_length, forearm_length).with_mount(
                Vector3::new(shoulder_radius * yaw.cos(), shoulder_radius * yaw.sin(), 0.0),
                yaw,
            )
        });
        Self {
            limbs,
            stance,
            gait: GaitParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for limb in &self.limbs {
            limb.validate()?;
        }
        self.stance.validate()?;
        self.gait.validate().map_err(ConfigError::Gait)?;

        let first = &self.limbs[0];
        for (index, limb) in self.limbs.iter().enumerate().skip(1) {
            let turn = index as f64 * FRAC_PI_2;
            let expected_offset =
                Rotation3::from_axis_angle(&Vector3::z_axis(), turn) * first.shoulder_offset;
            let yaw_gap = normalize_angle(limb.mount_yaw - first.mount_yaw - turn);
            let symmetric = (limb.upper_arm_length - first.upper_arm_length).abs() < SYMMETRY_TOLERANCE
                && (limb.forearm_length - first.forearm_length).abs() < SYMMETRY_TOLERANCE
                && (limb.shoulder_offset - expected_offset).norm() < SYMMETRY_TOLERANCE
                && yaw_gap.abs() < SYMMETRY_TOLERANCE;
            if !symmetric {
                return Err(ConfigError::Asymmetric { index });
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let doc: RobotDoc = serde_json::from_str(text)?;
        if doc.limbs.len() != LIMB_COUNT {
            return Err(ConfigError::LimbCount(doc.limbs.len()));
        }
        let limbs = std::array::from_fn(|k| {
            let l = &doc.limbs[k];
            LimbGeometry::new(l.upper_arm_length, l.forearm_length)
                .with_mount(Vector3::from(l.shoulder_offset), l.mount_yaw)
        });
        let config = Self {
            limbs,
            stance: StanceConfig {
                theta1_init: doc.stance.theta1_init,
                theta2_init: doc.stance.theta2_init,
            },
            gait: doc.gait.unwrap_or_default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        let doc = RobotDoc {
            limbs: self
                .limbs
                .iter()
                .map(|l| LimbDoc {
                    upper_arm_length: l.upper_arm_length,
                    forearm_length: l.forearm_length,
                    shoulder_offset: l.shoulder_offset.into(),
                    mount_yaw: l.mount_yaw,
                })
                .collect(),
            stance: StanceDoc {
                theta1_init: self.stance.theta1_init,
                theta2_init: self.stance.theta2_init,
            },
            gait: Some(self.gait.clone()),
        };
        serde_json::to_string_pretty(&doc).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Horizontal distance from shoulder to a grounded foot in stance.
    pub fn stance_reach(&self) -> f64 {
        self.limbs[0].upper_arm_length * self.stance.theta1_init.cos()
    }

    /// Height of the body frame origin above the ground in stance.
    pub fn stance_height(&self) -> f64 {
        let limb = &self.limbs[0];
        limb.upper_arm_length * self.stance.theta1_init.sin() + limb.forearm_length
            - limb.shoulder_offset.z
    }

    /// Net body displacement of one locomotion cycle: the chord `2·R·sin(sweep)`.
    pub fn stride(&self) -> f64 {
        2.0 * self.stance_reach() * self.gait.sweep_limit.sin()
    }
}

/// Mount direction of limb `k` (counterclockwise from +x).
pub fn mount_angle(k: usize) -> f64 {
    k as f64 * FRAC_PI_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_config_is_valid() {
        let config = RobotConfig::default();
        config.validate().unwrap();
        assert_abs_diff_eq!(config.stance_height(), 0.39, epsilon = 1e-15);
        assert_abs_diff_eq!(config.stride(), 0.1905255888325765, epsilon = 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let config = RobotConfig::default();
        let parsed = RobotConfig::from_json(&config.to_json()).unwrap();
        for (a, b) in config.limbs.iter().zip(parsed.limbs.iter()) {
            assert_abs_diff_eq!(a.shoulder_offset, b.shoulder_offset, epsilon = 1e-15);
            assert_abs_diff_eq!(a.mount_yaw, b.mount_yaw, epsilon = 1e-15);
        }
        assert_eq!(config.stance, parsed.stance);
        assert_eq!(config.gait, parsed.gait);
    }

    #[test]
    fn rejects_wrong_limb_count() {
        let mut doc: serde_json::Value = serde_json::from_str(&RobotConfig::default().to_json()).unwrap();
        doc["limbs"].as_array_mut().unwrap().pop();
        let err = RobotConfig::from_json(&doc.to_string()).unwrap_err();
        assert!(matches!(err, ConfigError::LimbCount(3)));
    }

    #[test]
    fn rejects_asymmetric_chassis() {
        let mut doc: serde_json::Value = serde_json::from_str(&RobotConfig::default().to_json()).unwrap();
        doc["limbs"][2]["forearm_length"] = serde_json::json!(0.3);
        let err = RobotConfig::from_json(&doc.to_string()).unwrap_err();
        assert!(matches!(err, ConfigError::Asymmetric { index: 2 }));
    }

    #[test]
    fn rejects_bad_stance() {
        let mut doc: serde_json::Value = serde_json::from_str(&RobotConfig::default().to_json()).unwrap();
        doc["stance"]["theta2_init"] = serde_json::json!(0.1);
        assert!(matches!(
            RobotConfig::from_json(&doc.to_string()).unwrap_err(),
            ConfigError::Kinematics(_)
        ));
    }

    #[test]
    fn gait_section_is_optional() {
        let mut doc: serde_json::Value = serde_json::from_str(&RobotConfig::default().to_json()).unwrap();
        doc.as_object_mut().unwrap().remove("gait");
        let config = RobotConfig::from_json(&doc.to_string()).unwrap();
        assert_eq!(config.gait, GaitParams::default());
    }
}
