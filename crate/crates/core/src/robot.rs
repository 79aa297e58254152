//! Pin-level arm simulator: five servos and a gripper driven by pin-high
//! events, with an append-only action log.

use std::io::Write;

use thiserror::Error;

use crate::model::{ActionEffect, ArmAction, ModelError, SERVO_COUNT};

pub const MIN_ANGLE: f64 = 0.0;
pub const MAX_ANGLE: f64 = 180.0;
pub const HOME_ANGLE: f64 = 90.0;
pub const DEFAULT_STEP_DEG: f64 = 5.0;
/// Servo 4 holds the gripper jaws; it follows the gripper state.
pub const GRIPPER_SERVO: usize = 4;
pub const GRIPPER_OPEN_ANGLE: f64 = HOME_ANGLE;
pub const GRIPPER_CLOSED_ANGLE: f64 = 30.0;

pub const SERVO_NAMES: [&str; SERVO_COUNT] = ["base", "shoulder", "elbow", "wrist", "gripper"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RobotError {
    #[error("pin {0} is not wired to the arm")]
    UnmappedPin(u8),
    #[error("event at {t_ms} ms precedes last logged event at {last} ms")]
    TimeRegression { t_ms: u64, last: u64 },
    #[error("step size must be a positive finite number of degrees")]
    InvalidStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gripper {
    Open,
    Closed,
}

impl Gripper {
    pub fn name(self) -> &'static str {
        match self {
            Gripper::Open => "open",
            Gripper::Closed => "closed",
        }
    }

    fn toggled(self) -> Self {
        match self {
            Gripper::Open => Gripper::Closed,
            Gripper::Closed => Gripper::Open,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta {
    Servo {
        servo: usize,
        before: f64,
        after: f64,
    },
    Gripper {
        before: Gripper,
        after: Gripper,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub t_ms: u64,
    pub pin: u8,
    pub delta: Delta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmState {
    angles: [f64; SERVO_COUNT],
    gripper: Gripper,
    step_deg: f64,
    log: Vec<LogEntry>,
}

impl Default for ArmState {
    fn default() -> Self {
        Self::new(DEFAULT_STEP_DEG).expect("default step is valid")
    }
}

impl ArmState {
    /// Home pose with a custom step size.
    pub fn new(step_deg: f64) -> Result<Self, RobotError> {
        if !(step_deg.is_finite() && step_deg > 0.0) {
            return Err(RobotError::InvalidStep);
        }
        Ok(Self {
            angles: [HOME_ANGLE; SERVO_COUNT],
            gripper: Gripper::Open,
            step_deg,
            log: Vec::new(),
        })
    }

    pub fn angle(&self, servo: usize) -> f64 {
        self.angles[servo]
    }

    pub fn angles(&self) -> [f64; SERVO_COUNT] {
        self.angles
    }

    /// Places a servo directly, clamped to the mechanical range. Not logged.
    pub fn set_angle(&mut self, servo: usize, angle: f64) {
        self.angles[servo] = angle.clamp(MIN_ANGLE, MAX_ANGLE);
    }

    pub fn gripper(&self) -> Gripper {
        self.gripper
    }

    pub fn step_deg(&self) -> f64 {
        self.step_deg
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// Drives `pin` high at `t_ms`.
    pub fn apply_pin_high(&mut self, pin: u8, t_ms: u64) -> Result<&LogEntry, RobotError> {
        let action = ArmAction::for_pin(pin).map_err(|e| match e {
            ModelError::UnmappedPin(p) => RobotError::UnmappedPin(p),
            _ => RobotError::UnmappedPin(pin),
        })?;
        self.apply(&action, t_ms)
    }

    pub fn apply(&mut self, action: &ArmAction, t_ms: u64) -> Result<&LogEntry, RobotError> {
        if let Some(last) = self.log.last() {
            if t_ms < last.t_ms {
                return Err(RobotError::TimeRegression {
                    t_ms,
                    last: last.t_ms,
                });
            }
        }
        let delta = match action.effect {
            ActionEffect::StepServo { servo, direction } => {
                let before = self.angles[servo];
                let after =
                    (before + f64::from(direction) * self.step_deg).clamp(MIN_ANGLE, MAX_ANGLE);
                self.angles[servo] = after;
                Delta::Servo {
                    servo,
                    before,
                    after,
                }
            }
            ActionEffect::ToggleGripper => {
                let before = self.gripper;
                self.gripper = before.toggled();
                self.angles[GRIPPER_SERVO] = match self.gripper {
                    Gripper::Open => GRIPPER_OPEN_ANGLE,
                    Gripper::Closed => GRIPPER_CLOSED_ANGLE,
                };
                Delta::Gripper {
                    before,
                    after: self.gripper,
                }
            }
        };
        self.log.push(LogEntry {
            t_ms,
            pin: action.pin,
            delta,
        });
        Ok(self.log.last().expect("just pushed"))
    }

    /// Home pose, gripper open, empty log. The step size is kept.
    pub fn reset(&mut self) {
        *self = Self {
            step_deg: self.step_deg,
            ..Self::default()
        };
    }

    /// Action log as CSV with header `t_ms,pin,servo_or_gripper,before,after`.
    pub fn write_log_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_ms", "pin", "servo_or_gripper", "before", "after"])?;
        for e in &self.log {
            let (target, before, after) = match e.delta {
                Delta::Servo {
                    servo,
                    before,
                    after,
                } => (
                    SERVO_NAMES[servo].to_string(),
                    format!("{before}"),
                    format!("{after}"),
                ),
                Delta::Gripper { before, after } => (
                    "gripper".to_string(),
                    before.name().to_string(),
                    after.name().to_string(),
                ),
            };
            w.write_record([e.t_ms.to_string(), e.pin.to_string(), target, before, after])?;
        }
        w.flush()
    }

    pub fn describe(&self) -> String {
        let servos: Vec<String> = SERVO_NAMES
            .iter()
            .zip(self.angles)
            .map(|(n, a)| format!("{n}={a}"))
            .collect();
        format!("{} ({})", servos.join(" "), self.gripper.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gripper_toggles() {
        let mut arm = ArmState::default();
        arm.apply_pin_high(10, 0).unwrap();
        assert_eq!(arm.gripper(), Gripper::Closed);
        assert_eq!(arm.angle(GRIPPER_SERVO), GRIPPER_CLOSED_ANGLE);
        arm.apply_pin_high(10, 1).unwrap();
        assert_eq!(arm.gripper(), Gripper::Open);
    }

    #[test]
    fn step_clamps_at_limit() {
        let mut arm = ArmState::default();
        arm.set_angle(0, 178.0);
        let e = *arm.apply_pin_high(3, 0).unwrap();
        assert_eq!(arm.angle(0), 180.0);
        assert_eq!(
            e.delta,
            Delta::Servo {
                servo: 0,
                before: 178.0,
                after: 180.0
            }
        );
    }

    #[test]
    fn thirty_six_steps_cover_the_range() {
        let mut arm = ArmState::default();
        arm.set_angle(0, 0.0);
        for t in 0..36 {
            arm.apply_pin_high(3, t).unwrap();
        }
        assert_eq!(arm.angle(0), 180.0);
        // no clamping happened along the way
        assert!(arm.log().iter().all(
            |e| matches!(e.delta, Delta::Servo { before, after, .. } if after - before == 5.0)
        ));
    }

    #[test]
    fn pins_drive_documented_servos() {
        let mut arm = ArmState::default();
        for (pin, servo) in [(3, 0), (4, 1), (5, 2), (9, 3)] {
            arm.apply_pin_high(pin, 0).unwrap();
            assert_eq!(arm.angle(servo), 95.0);
        }
    }

    #[test]
    fn errors() {
        let mut arm = ArmState::default();
        assert_eq!(
            arm.apply_pin_high(7, 0).unwrap_err(),
            RobotError::UnmappedPin(7)
        );
        arm.apply_pin_high(3, 100).unwrap();
        assert_eq!(
            arm.apply_pin_high(3, 99).unwrap_err(),
            RobotError::TimeRegression {
                t_ms: 99,
                last: 100
            }
        );
        assert_eq!(arm.log().len(), 1);
        assert_eq!(ArmState::new(0.0), Err(RobotError::InvalidStep));
    }

    #[test]
    fn reset_examples() {
        let mut arm = ArmState::default();
        arm.apply_pin_high(3, 0).unwrap();
        arm.apply_pin_high(10, 1).unwrap();
        arm.reset();
        assert_eq!(arm.angles(), [90.0; 5]);
        assert_eq!(arm.gripper(), Gripper::Open);
        assert!(arm.log().is_empty());
        let once = arm.clone();
        arm.reset();
        assert_eq!(arm, once);
        arm.apply_pin_high(4, 0).unwrap();
        assert_eq!(arm.log().len(), 1);
    }

    #[test]
    fn csv_log() {
        let mut arm = ArmState::default();
        arm.apply_pin_high(3, 10).unwrap();
        arm.apply_pin_high(10, 20).unwrap();
        let mut buf = Vec::new();
        arm.write_log_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t_ms,pin,servo_or_gripper,before,after\n10,3,base,90,95\n20,10,gripper,open,closed\n"
        );
    }
}
