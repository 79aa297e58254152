//! Command vocabularies and the fixed tables that tie gestures, spoken
//! commands, board pins and arm actions together.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("no pin is assigned to the missed-gesture marker")]
    NoGesture,
    #[error("unknown gesture name {0:?}")]
    UnknownGesture(String),
    #[error("unknown speech command {0:?}")]
    UnknownCommand(String),
    #[error("pin {0} is not wired to any arm action")]
    UnmappedPin(u8),
}

/// The five gestures the armband recognises.
///
/// A missed capture is not a gesture; it is represented as `None` wherever a
/// reading may be absent (see [`GestureReading`](crate::fusion::GestureReading)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gesture {
    Fist,
    WaveIn,
    WaveOut,
    FingerSpread,
    DoubleTap,
}

impl Gesture {
    pub const ALL: [Gesture; 5] = [
        Gesture::Fist,
        Gesture::WaveIn,
        Gesture::WaveOut,
        Gesture::FingerSpread,
        Gesture::DoubleTap,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Lower-case display name, e.g. `"wave in"`.
    pub fn name(self) -> &'static str {
        match self {
            Gesture::Fist => "fist",
            Gesture::WaveIn => "wave in",
            Gesture::WaveOut => "wave out",
            Gesture::FingerSpread => "finger spread",
            Gesture::DoubleTap => "double tap",
        }
    }

    /// Upper-case wire token, e.g. `"WAVE_IN"`.
    pub fn token(self) -> &'static str {
        match self {
            Gesture::Fist => "FIST",
            Gesture::WaveIn => "WAVE_IN",
            Gesture::WaveOut => "WAVE_OUT",
            Gesture::FingerSpread => "FINGER_SPREAD",
            Gesture::DoubleTap => "DOUBLE_TAP",
        }
    }

    /// Snake-case config key, e.g. `"wave_in"`.
    pub fn key(self) -> &'static str {
        match self {
            Gesture::Fist => "fist",
            Gesture::WaveIn => "wave_in",
            Gesture::WaveOut => "wave_out",
            Gesture::FingerSpread => "finger_spread",
            Gesture::DoubleTap => "double_tap",
        }
    }

    pub fn from_token(tok: &str) -> Option<Gesture> {
        Gesture::ALL.into_iter().find(|g| g.token() == tok)
    }

    pub fn pin(self) -> u8 {
        match self {
            Gesture::Fist => 3,
            Gesture::WaveIn => 4,
            Gesture::WaveOut => 5,
            Gesture::FingerSpread => 9,
            Gesture::DoubleTap => 10,
        }
    }

    pub fn speech_command(self) -> SpeechCommand {
        match self {
            Gesture::DoubleTap => SpeechCommand::MoveGripper,
            Gesture::Fist => SpeechCommand::MoveDown,
            Gesture::FingerSpread => SpeechCommand::MoveUp,
            Gesture::WaveIn => SpeechCommand::MoveLeft,
            Gesture::WaveOut => SpeechCommand::MoveRight,
        }
    }

    pub fn action(self) -> ArmAction {
        ArmAction::for_pin(self.pin()).expect("every gesture pin is wired")
    }
}

impl fmt::Display for Gesture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Gesture {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_gesture_name(s)
    }
}

/// Pin for a gesture reading; `None` (a missed capture) has no pin.
pub fn gesture_to_pin(g: Option<Gesture>) -> Result<u8, ModelError> {
    g.map(Gesture::pin).ok_or(ModelError::NoGesture)
}

/// Case-insensitive gesture parse.
///
/// Accepts the display names, wire tokens, config keys and the left/right
/// aliases: "wave left" is `WaveIn`, "wave right" is `WaveOut`.
pub fn parse_gesture_name(s: &str) -> Result<Gesture, ModelError> {
    let norm = s
        .trim()
        .to_ascii_lowercase()
        .replace(['_', '-'], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    let g = match norm.as_str() {
        "fist" => Gesture::Fist,
        "wave in" | "wave left" => Gesture::WaveIn,
        "wave out" | "wave right" => Gesture::WaveOut,
        "finger spread" | "fingers spread" => Gesture::FingerSpread,
        "double tap" => Gesture::DoubleTap,
        _ => return Err(ModelError::UnknownGesture(s.to_string())),
    };
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpeechCommand {
    MoveRight,
    MoveLeft,
    MoveUp,
    MoveDown,
    MoveGripper,
}

impl SpeechCommand {
    pub const ALL: [SpeechCommand; 5] = [
        SpeechCommand::MoveRight,
        SpeechCommand::MoveLeft,
        SpeechCommand::MoveUp,
        SpeechCommand::MoveDown,
        SpeechCommand::MoveGripper,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn utterance(self) -> &'static str {
        match self {
            SpeechCommand::MoveRight => "move right",
            SpeechCommand::MoveLeft => "move left",
            SpeechCommand::MoveUp => "move up",
            SpeechCommand::MoveDown => "move down",
            SpeechCommand::MoveGripper => "move gripper",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            SpeechCommand::MoveRight => "move_right",
            SpeechCommand::MoveLeft => "move_left",
            SpeechCommand::MoveUp => "move_up",
            SpeechCommand::MoveDown => "move_down",
            SpeechCommand::MoveGripper => "move_gripper",
        }
    }

    pub fn gesture(self) -> Gesture {
        speech_to_gesture(self)
    }
}

impl fmt::Display for SpeechCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.utterance())
    }
}

impl FromStr for SpeechCommand {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', " ");
        SpeechCommand::ALL
            .into_iter()
            .find(|c| c.utterance() == norm)
            .ok_or_else(|| ModelError::UnknownCommand(s.to_string()))
    }
}

pub fn speech_to_gesture(c: SpeechCommand) -> Gesture {
    match c {
        SpeechCommand::MoveGripper => Gesture::DoubleTap,
        SpeechCommand::MoveDown => Gesture::Fist,
        SpeechCommand::MoveUp => Gesture::FingerSpread,
        SpeechCommand::MoveLeft => Gesture::WaveIn,
        SpeechCommand::MoveRight => Gesture::WaveOut,
    }
}

/// One row of the fused-operation table: a spoken command and the gesture
/// performed alongside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FusionOperation {
    pub speech: SpeechCommand,
    pub gesture: Gesture,
    pub label: &'static str,
}

impl FusionOperation {
    /// The five operations in published row order.
    pub const ALL: [FusionOperation; 5] = [
        FusionOperation {
            speech: SpeechCommand::MoveGripper,
            gesture: Gesture::DoubleTap,
            label: "Move Gripper & Double Tap",
        },
        FusionOperation {
            speech: SpeechCommand::MoveDown,
            gesture: Gesture::Fist,
            label: "Move Down & Fist",
        },
        FusionOperation {
            speech: SpeechCommand::MoveUp,
            gesture: Gesture::FingerSpread,
            label: "Move Up & Finger spread",
        },
        FusionOperation {
            speech: SpeechCommand::MoveLeft,
            gesture: Gesture::WaveIn,
            label: "Move Left & Wave left",
        },
        FusionOperation {
            speech: SpeechCommand::MoveRight,
            gesture: Gesture::WaveOut,
            label: "Move Right & Wave out",
        },
    ];

    pub fn for_gesture(g: Gesture) -> FusionOperation {
        *FusionOperation::ALL
            .iter()
            .find(|op| op.gesture == g)
            .expect("every gesture belongs to one operation")
    }

    /// Position in [`FusionOperation::ALL`].
    pub fn index(self) -> usize {
        FusionOperation::ALL
            .iter()
            .position(|op| *op == self)
            .expect("operation constants are exhaustive")
    }

    pub fn action(self) -> ArmAction {
        self.gesture.action()
    }

    /// Looks an operation up by its label, gesture name or command
    /// (e.g. `"Move Down & Fist"`, `"fist"`, `"move down"`).
    pub fn find(name: &str) -> Option<FusionOperation> {
        let lower = name.trim().to_ascii_lowercase();
        if let Some(op) = FusionOperation::ALL
            .iter()
            .find(|op| op.label.to_ascii_lowercase() == lower)
        {
            return Some(*op);
        }
        if let Ok(g) = parse_gesture_name(&lower) {
            return Some(FusionOperation::for_gesture(g));
        }
        lower
            .parse::<SpeechCommand>()
            .ok()
            .map(|c| FusionOperation::for_gesture(c.gesture()))
    }
}

pub const BOARD_PINS: u8 = 14;
pub const SERVO_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionEffect {
    /// Step one servo by a signed multiple of the configured step size.
    StepServo {
        servo: usize,
        direction: i8,
    },
    ToggleGripper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArmAction {
    pub pin: u8,
    pub effect: ActionEffect,
}

impl ArmAction {
    /// Pins 3/4/5/9 drive base, shoulder, elbow and wrist; pin 10 toggles
    /// the gripper.
    pub fn for_pin(pin: u8) -> Result<ArmAction, ModelError> {
        let effect = match pin {
            3 => ActionEffect::StepServo {
                servo: 0,
                direction: 1,
            },
            4 => ActionEffect::StepServo {
                servo: 1,
                direction: 1,
            },
            5 => ActionEffect::StepServo {
                servo: 2,
                direction: 1,
            },
            9 => ActionEffect::StepServo {
                servo: 3,
                direction: 1,
            },
            10 => ActionEffect::ToggleGripper,
            other => return Err(ModelError::UnmappedPin(other)),
        };
        Ok(ArmAction { pin, effect })
    }

    /// Wire name, e.g. `PIN5`.
    pub fn name(&self) -> String {
        format!("PIN{}", self.pin)
    }

    pub fn gesture(&self) -> Gesture {
        Gesture::ALL
            .into_iter()
            .find(|g| g.pin() == self.pin)
            .expect("actions are only built for wired pins")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn published_pin_table() {
        assert_eq!(gesture_to_pin(Some(Gesture::Fist)), Ok(3));
        assert_eq!(gesture_to_pin(Some(Gesture::WaveIn)), Ok(4));
        assert_eq!(gesture_to_pin(Some(Gesture::WaveOut)), Ok(5));
        assert_eq!(gesture_to_pin(Some(Gesture::FingerSpread)), Ok(9));
        assert_eq!(gesture_to_pin(Some(Gesture::DoubleTap)), Ok(10));
        assert_eq!(gesture_to_pin(None), Err(ModelError::NoGesture));
    }

    #[test]
    fn pins_form_a_bijection_inside_the_board() {
        let pins: BTreeSet<u8> = Gesture::ALL.iter().map(|g| g.pin()).collect();
        assert_eq!(pins, BTreeSet::from([3, 4, 5, 9, 10]));
        assert!(pins.iter().all(|&p| p < BOARD_PINS));
    }

    #[test]
    fn speech_pairing() {
        assert_eq!(
            speech_to_gesture(SpeechCommand::MoveGripper),
            Gesture::DoubleTap
        );
        assert_eq!(
            speech_to_gesture(SpeechCommand::MoveRight),
            Gesture::WaveOut
        );
        assert_eq!(speech_to_gesture(SpeechCommand::MoveDown), Gesture::Fist);
        assert_eq!(
            speech_to_gesture(SpeechCommand::MoveUp),
            Gesture::FingerSpread
        );
        assert_eq!(speech_to_gesture(SpeechCommand::MoveLeft), Gesture::WaveIn);
    }

    #[test]
    fn pairing_round_trips() {
        for c in SpeechCommand::ALL {
            assert_eq!(c.gesture().speech_command(), c);
        }
        for g in Gesture::ALL {
            assert_eq!(g.speech_command().gesture(), g);
        }
    }

    #[test]
    fn operations_match_pairing() {
        let gestures: BTreeSet<_> = FusionOperation::ALL.iter().map(|o| o.gesture).collect();
        let commands: BTreeSet<_> = FusionOperation::ALL.iter().map(|o| o.speech).collect();
        assert_eq!(gestures.len(), 5);
        assert_eq!(commands.len(), 5);
        for op in FusionOperation::ALL {
            assert_eq!(speech_to_gesture(op.speech), op.gesture);
            assert_eq!(FusionOperation::ALL[op.index()], op);
        }
    }

    #[test]
    fn parse_names_and_aliases() {
        assert_eq!(parse_gesture_name("Fist"), Ok(Gesture::Fist));
        assert_eq!(parse_gesture_name("wave left"), Ok(Gesture::WaveIn));
        assert_eq!(parse_gesture_name("Wave Right"), Ok(Gesture::WaveOut));
        assert_eq!(
            parse_gesture_name("FINGER_SPREAD"),
            Ok(Gesture::FingerSpread)
        );
        assert_eq!(
            parse_gesture_name("thumbs up"),
            Err(ModelError::UnknownGesture("thumbs up".into()))
        );
        for g in Gesture::ALL {
            assert_eq!(parse_gesture_name(g.name()), Ok(g));
            assert_eq!(Gesture::from_token(g.token()), Some(g));
        }
    }

    #[test]
    fn find_operation_by_any_name() {
        assert_eq!(
            FusionOperation::find("move down & fist").unwrap().gesture,
            Gesture::Fist
        );
        assert_eq!(
            FusionOperation::find("double tap").unwrap().speech,
            SpeechCommand::MoveGripper
        );
        assert_eq!(
            FusionOperation::find("move_left").unwrap().gesture,
            Gesture::WaveIn
        );
        assert!(FusionOperation::find("jump").is_none());
    }

    #[test]
    fn actions_only_on_wired_pins() {
        assert_eq!(
            ArmAction::for_pin(10).unwrap().effect,
            ActionEffect::ToggleGripper
        );
        assert_eq!(ArmAction::for_pin(7), Err(ModelError::UnmappedPin(7)));
        for g in Gesture::ALL {
            assert_eq!(g.action().gesture(), g);
        }
    }
}
