//! Simulated speech recognizer and the many-to-one normalisation map.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::SpeechCommand;
use crate::reference;
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpeechError {
    #[error("recognition probability for {command} is {p}, outside [0, 1]")]
    InvalidProbability { command: SpeechCommand, p: f64 },
    #[error("error-mode weights must be non-negative and sum to 1, got {0:?}")]
    InvalidModeWeights([f64; 3]),
    #[error("{text:?} already maps to {existing}, cannot also map to {new}")]
    ConflictingMapping {
        text: String,
        existing: SpeechCommand,
        new: SpeechCommand,
    },
    #[error("utterance text must be non-empty")]
    EmptyText,
}

/// How a misrecognition shows up in the emitted string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMode {
    /// A different string that sounds alike, e.g. "override" for "move right".
    ConfusableString,
    /// The command captured twice.
    DuplicatedString,
    /// The command followed by a filler word.
    ExtraneousTokens,
}

impl ErrorMode {
    pub const ALL: [ErrorMode; 3] = [
        ErrorMode::ConfusableString,
        ErrorMode::DuplicatedString,
        ErrorMode::ExtraneousTokens,
    ];
}

/// Confusable output per command, indexed like [`SpeechCommand::ALL`].
///
/// Only "override" was actually observed; the other four are placeholders
/// chosen to sound like their command and are not measured data.
pub const DEFAULT_CONFUSABLES: [&str; 5] = [
    "override",
    "move lift",
    "move app",
    "move town",
    "move grip her",
];

pub const DEFAULT_FILLER: &str = "please";

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionModel {
    p_correct: [f64; 5],
    /// Weights over [`ErrorMode::ALL`].
    mode_weights: [f64; 3],
    confusables: [String; 5],
    filler: String,
}

impl Default for RecognitionModel {
    fn default() -> Self {
        Self {
            p_correct: SpeechCommand::ALL.map(|c| reference::speech_correct_pct(c) / 100.0),
            mode_weights: [0.5, 0.25, 0.25],
            confusables: DEFAULT_CONFUSABLES.map(String::from),
            filler: DEFAULT_FILLER.to_string(),
        }
    }
}

impl RecognitionModel {
    pub fn new(
        p_correct: [f64; 5],
        mode_weights: [f64; 3],
        confusables: [String; 5],
        filler: String,
    ) -> Result<Self, SpeechError> {
        for c in SpeechCommand::ALL {
            let p = p_correct[c.index()];
            if !(0.0..=1.0).contains(&p) {
                return Err(SpeechError::InvalidProbability { command: c, p });
            }
        }
        let sum: f64 = mode_weights.iter().sum();
        if mode_weights.iter().any(|w| w.is_nan() || *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(SpeechError::InvalidModeWeights(mode_weights));
        }
        if confusables.iter().any(|s| normalize_text(s).is_empty())
            || normalize_text(&filler).is_empty()
        {
            return Err(SpeechError::EmptyText);
        }
        Ok(Self {
            p_correct,
            mode_weights,
            confusables,
            filler,
        })
    }

    /// Uniform recognition accuracy for every command.
    pub fn with_accuracy(p: f64) -> Result<Self, SpeechError> {
        let d = Self::default();
        Self::new([p; 5], d.mode_weights, d.confusables, d.filler)
    }

    pub fn p_correct(&self, c: SpeechCommand) -> f64 {
        self.p_correct[c.index()]
    }

    pub fn p_error(&self, c: SpeechCommand) -> f64 {
        1.0 - self.p_correct(c)
    }

    pub fn mode_weights(&self) -> [f64; 3] {
        self.mode_weights
    }

    pub fn confusable(&self, c: SpeechCommand) -> &str {
        &self.confusables[c.index()]
    }

    pub fn filler(&self) -> &str {
        &self.filler
    }
}

/// A recognised string together with what the speaker meant, when known.
///
/// Utterances arriving from outside the simulator (wire clients, the REPL)
/// carry no ground truth and have `spoken == None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawUtterance {
    pub text: String,
    pub spoken: Option<SpeechCommand>,
}

impl RawUtterance {
    pub fn new(
        text: impl Into<String>,
        spoken: Option<SpeechCommand>,
    ) -> Result<Self, SpeechError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(SpeechError::EmptyText);
        }
        Ok(Self { text, spoken })
    }

    pub fn observed(text: impl Into<String>) -> Result<Self, SpeechError> {
        Self::new(text, None)
    }
}

pub fn sample_recognition(
    c: SpeechCommand,
    model: &RecognitionModel,
    rng: &mut SimRng,
) -> RawUtterance {
    let canonical = c.utterance();
    let text = if rng.uniform() < model.p_correct(c) {
        canonical.to_string()
    } else {
        let mode = rng
            .weighted_index(&model.mode_weights)
            .map(|i| ErrorMode::ALL[i])
            .unwrap_or(ErrorMode::ConfusableString);
        match mode {
            ErrorMode::ConfusableString => model.confusable(c).to_string(),
            ErrorMode::DuplicatedString => format!("{canonical} {canonical}"),
            ErrorMode::ExtraneousTokens => format!("{canonical} {}", model.filler),
        }
    };
    RawUtterance {
        text,
        spoken: Some(c),
    }
}

/// Lower-cases and collapses runs of whitespace to single spaces.
pub fn normalize_text(s: &str) -> String {
    s.split_whitespace()
        .map(|t| t.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Many-to-one lookup from recogniser output to command.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NormalizationMap {
    entries: BTreeMap<String, SpeechCommand>,
}

impl NormalizationMap {
    /// Canonical utterances only.
    pub fn canonical() -> Self {
        let mut map = Self::default();
        for c in SpeechCommand::ALL {
            map.insert(c.utterance(), c)
                .expect("canonical utterances are distinct");
        }
        map
    }

    /// Canonical utterances plus every variant the recognition model can emit.
    pub fn for_model(model: &RecognitionModel) -> Result<Self, SpeechError> {
        let mut map = Self::canonical();
        for c in SpeechCommand::ALL {
            let canonical = c.utterance();
            map.insert(model.confusable(c), c)?;
            map.insert(&format!("{canonical} {canonical}"), c)?;
            map.insert(&format!("{canonical} {}", model.filler()), c)?;
        }
        Ok(map)
    }

    pub fn insert(&mut self, text: &str, c: SpeechCommand) -> Result<(), SpeechError> {
        let key = normalize_text(text);
        if key.is_empty() {
            return Err(SpeechError::EmptyText);
        }
        match self.entries.get(&key) {
            Some(&existing) if existing != c => Err(SpeechError::ConflictingMapping {
                text: key,
                existing,
                new: c,
            }),
            _ => {
                self.entries.insert(key, c);
                Ok(())
            }
        }
    }

    pub fn lookup(&self, text: &str) -> Option<SpeechCommand> {
        self.entries.get(&normalize_text(text)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, SpeechCommand)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// `None` means the text is unrecognised.
pub fn normalize_utterance(u: &RawUtterance, map: &NormalizationMap) -> Option<SpeechCommand> {
    map.lookup(&u.text)
}

/// Whether a captured string counts as a recognition error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaptureClass {
    /// Exactly the canonical utterance.
    Clean,
    /// The canonical utterance appears two or more times.
    Duplicated,
    /// The canonical utterance plus other tokens.
    Extraneous,
    /// The canonical utterance does not appear at all.
    Substituted,
}

impl CaptureClass {
    pub fn is_error(self) -> bool {
        self != CaptureClass::Clean
    }
}

fn count_occurrences(tokens: &[&str], pattern: &[&str]) -> usize {
    let mut count = 0;
    let mut i = 0;
    while i + pattern.len() <= tokens.len() {
        if tokens[i..i + pattern.len()] == *pattern {
            count += 1;
            i += pattern.len();
        } else {
            i += 1;
        }
    }
    count
}

/// Classifies a capture against the spoken command's canonical utterance.
///
/// When the spoken command is unknown, the command whose canonical utterance
/// occurs most often in the text is assumed.
pub fn classify_capture_error(u: &RawUtterance) -> CaptureClass {
    let text = normalize_text(&u.text);
    let tokens: Vec<&str> = text.split(' ').filter(|t| !t.is_empty()).collect();
    let count_for = |c: SpeechCommand| {
        let pattern: Vec<&str> = c.utterance().split(' ').collect();
        (count_occurrences(&tokens, &pattern), pattern.len())
    };
    let (count, pattern_len) = match u.spoken {
        Some(c) => count_for(c),
        None => SpeechCommand::ALL
            .into_iter()
            .map(count_for)
            .fold((0, 0), |best, cur| if cur.0 > best.0 { cur } else { best }),
    };
    match count {
        0 => CaptureClass::Substituted,
        1 if tokens.len() == pattern_len => CaptureClass::Clean,
        1 => CaptureClass::Extraneous,
        _ => CaptureClass::Duplicated,
    }
}
