//! Versioned TOML configuration for the recognition models, the
//! normalisation map and fusion timing.
//!
//! Every section is optional; anything omitted keeps the built-in default.
//!
//! ```toml
//! version = 1
//!
//! [gesture.fist]
//! p_correct = 0.864
//! p_wrong = 0.0952
//! p_missed = 0.0408
//! confusion = { wave_in = 1.0, wave_out = 1.0, finger_spread = 1.0, double_tap = 1.0 }
//!
//! [speech]
//! filler = "please"
//! mode_weights = { confusable = 0.5, duplicated = 0.25, extraneous = 0.25 }
//!
//! [speech.commands.move_right]
//! p_correct = 0.90
//! confusable = "override"
//!
//! [normalization]
//! "over ride" = "move_right"
//!
//! [fusion]
//! fallback_window_ms = 2000
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emg::{EmgError, GestureOutcomeModel, GestureStats};
use crate::fusion::{
    CalibrationError, FusionConfig, OperationCalibration, Operator, DEFAULT_FALLBACK_WINDOW_MS,
};
use crate::model::{FusionOperation, Gesture, SpeechCommand};
use crate::speech::{NormalizationMap, RecognitionModel, SpeechError};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported config version {0}, expected {CONFIG_VERSION}")]
    Version(u32),
    #[error("unknown {kind} key {key:?}")]
    UnknownKey { kind: &'static str, key: String },
    #[error(transparent)]
    Gesture(#[from] EmgError),
    #[error(transparent)]
    Speech(#[from] SpeechError),
    #[error("fallback window must be positive")]
    ZeroWindow,
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GestureEntry {
    p_correct: f64,
    p_wrong: f64,
    p_missed: f64,
    #[serde(default)]
    confusion: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeWeights {
    confusable: f64,
    duplicated: f64,
    extraneous: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommandEntry {
    p_correct: Option<f64>,
    confusable: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeechSection {
    filler: Option<String>,
    mode_weights: Option<ModeWeights>,
    #[serde(default)]
    commands: BTreeMap<String, CommandEntry>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FusionSection {
    fallback_window_ms: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: u32,
    #[serde(default)]
    gesture: BTreeMap<String, GestureEntry>,
    #[serde(default)]
    speech: SpeechSection,
    #[serde(default)]
    normalization: BTreeMap<String, String>,
    #[serde(default)]
    fusion: FusionSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub gestures: GestureOutcomeModel,
    pub speech: RecognitionModel,
    pub normalization: NormalizationMap,
    pub fallback_window_ms: u64,
}

impl Default for Config {
    fn default() -> Self {
        let speech = RecognitionModel::default();
        Self {
            gestures: GestureOutcomeModel::default(),
            normalization: NormalizationMap::for_model(&speech).expect("default map is consistent"),
            speech,
            fallback_window_ms: DEFAULT_FALLBACK_WINDOW_MS,
        }
    }
}

fn gesture_key(key: &str) -> Result<Gesture, ConfigError> {
    Gesture::ALL
        .into_iter()
        .find(|g| g.key() == key)
        .ok_or_else(|| ConfigError::UnknownKey {
            kind: "gesture",
            key: key.to_string(),
        })
}

fn command_key(key: &str) -> Result<SpeechCommand, ConfigError> {
    SpeechCommand::ALL
        .into_iter()
        .find(|c| c.key() == key)
        .ok_or_else(|| ConfigError::UnknownKey {
            kind: "command",
            key: key.to_string(),
        })
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        if raw.version != CONFIG_VERSION {
            return Err(ConfigError::Version(raw.version));
        }

        let mut gestures = GestureOutcomeModel::default();
        for (key, entry) in &raw.gesture {
            let g = gesture_key(key)?;
            let mut confusion = [0.0; 5];
            if entry.confusion.is_empty() {
                confusion = [1.0; 5];
                confusion[g.index()] = 0.0;
            }
            for (other, w) in &entry.confusion {
                confusion[gesture_key(other)?.index()] = *w;
            }
            gestures.set_stats(
                g,
                GestureStats {
                    p_correct: entry.p_correct,
                    p_wrong: entry.p_wrong,
                    p_missed: entry.p_missed,
                    confusion,
                },
            )?;
        }

        let defaults = RecognitionModel::default();
        let mut p_correct = SpeechCommand::ALL.map(|c| defaults.p_correct(c));
        let mut confusables = SpeechCommand::ALL.map(|c| defaults.confusable(c).to_string());
        for (key, entry) in &raw.speech.commands {
            let c = command_key(key)?;
            if let Some(p) = entry.p_correct {
                p_correct[c.index()] = p;
            }
            if let Some(s) = &entry.confusable {
                confusables[c.index()] = s.clone();
            }
        }
        let mode_weights = raw
            .speech
            .mode_weights
            .as_ref()
            .map(|m| [m.confusable, m.duplicated, m.extraneous])
            .unwrap_or(defaults.mode_weights());
        let filler = raw
            .speech
            .filler
            .clone()
            .unwrap_or_else(|| defaults.filler().to_string());
        let speech = RecognitionModel::new(p_correct, mode_weights, confusables, filler)?;

        let mut normalization = NormalizationMap::for_model(&speech)?;
        for (text, key) in &raw.normalization {
            normalization.insert(text, command_key(key)?)?;
        }

        let fallback_window_ms = raw
            .fusion
            .fallback_window_ms
            .unwrap_or(DEFAULT_FALLBACK_WINDOW_MS);
        if fallback_window_ms == 0 {
            return Err(ConfigError::ZeroWindow);
        }
        Ok(Self {
            gestures,
            speech,
            normalization,
            fallback_window_ms,
        })
    }

    /// A warmed-up operator using this configuration's models.
    pub fn operator(&self) -> Operator {
        Operator {
            gestures: self.gestures.clone(),
            speech: self.speech.clone(),
            ..Operator::default()
        }
    }

    /// Fusion settings calibrated to the published per-operation errors,
    /// carrying this configuration's window and normalisation map.
    pub fn calibrated_fusion(
        &self,
    ) -> Result<(FusionConfig, [OperationCalibration; 5]), ConfigError> {
        let (base, cals) = FusionConfig::calibrated_to_reference(&self.gestures, &self.speech)?;
        let detection = FusionOperation::ALL.map(|op| base.wrong_detection(op));
        let cfg = FusionConfig::new(
            self.fallback_window_ms,
            detection,
            self.normalization.clone(),
        )
        .map_err(|_| ConfigError::ZeroWindow)?;
        Ok((cfg, cals))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Full TOML rendering; [`Config::from_toml`] reads it back unchanged.
    pub fn to_toml(&self) -> String {
        let gesture = Gesture::ALL
            .into_iter()
            .map(|g| {
                let s = self.gestures.stats(g);
                let confusion = Gesture::ALL
                    .into_iter()
                    .filter(|o| *o != g)
                    .map(|o| (o.key().to_string(), s.confusion[o.index()]))
                    .collect();
                (
                    g.key().to_string(),
                    GestureEntry {
                        p_correct: s.p_correct,
                        p_wrong: s.p_wrong,
                        p_missed: s.p_missed,
                        confusion,
                    },
                )
            })
            .collect();
        let [confusable, duplicated, extraneous] = self.speech.mode_weights();
        let commands = SpeechCommand::ALL
            .into_iter()
            .map(|c| {
                (
                    c.key().to_string(),
                    CommandEntry {
                        p_correct: Some(self.speech.p_correct(c)),
                        confusable: Some(self.speech.confusable(c).to_string()),
                    },
                )
            })
            .collect();
        let normalization = self
            .normalization
            .iter()
            .map(|(text, c)| (text.to_string(), c.key().to_string()))
            .collect();
        let raw = RawConfig {
            version: CONFIG_VERSION,
            gesture,
            speech: SpeechSection {
                filler: Some(self.speech.filler().to_string()),
                mode_weights: Some(ModeWeights {
                    confusable,
                    duplicated,
                    extraneous,
                }),
                commands,
            },
            normalization,
            fusion: FusionSection {
                fallback_window_ms: Some(self.fallback_window_ms),
            },
        };
        toml::to_string(&raw).expect("config serialises")
    }
}
