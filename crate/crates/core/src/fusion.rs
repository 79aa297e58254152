//! Gesture-first fusion of the two command channels.
//!
//! The armband is authoritative. Speech is consulted only when the gesture
//! channel fails: a missed gesture always falls back (absence is observable
//! through the window timeout), while a wrong gesture falls back only when it
//! is detected, which happens with a per-operation probability. Undetected
//! wrong gestures are executed as captured.
//!
//! State graph (`t` is the event time, `W` the fallback window):
//!
//! ```text
//! Idle ── gesture ok / undetected wrong ──────────────▶ Emitting(t+W)
//! Idle ── missed / detected wrong ────────────────────▶ SpeechFallback(t+W)
//! Idle ── speech ─────────────────────────────────────▶ AwaitingGesture(t+W, speech)
//! AwaitingGesture ── gesture ok ──────────────────────▶ Emitting
//! AwaitingGesture ── missed / detected wrong / tick ≥ deadline ─▶ resolve speech
//! SpeechFallback ── speech ≤ deadline ────────────────▶ resolve speech
//! SpeechFallback ── tick > deadline ──────────────────▶ Idle (WindowExpired)
//! Emitting(until) ── speech < until ──────────────────▶ Emitting (absorbed)
//! Emitting(until) ── anything else ───────────────────▶ as Idle
//! ```
//!
//! Resolving speech emits the command when the capture is clean and
//! normalises, and reports `FallbackFailed` otherwise.

use std::cmp::Ordering;

use thiserror::Error;

use crate::emg::{self, GestureOutcome, GestureOutcomeModel, WarmupState};
use crate::model::{ArmAction, FusionOperation, Gesture};
use crate::reference;
use crate::rng::SimRng;
use crate::speech::{
    self, classify_capture_error, CaptureClass, NormalizationMap, RawUtterance, RecognitionModel,
};

pub const DEFAULT_FALLBACK_WINDOW_MS: u64 = 2000;
/// Delay between performing a gesture and the recogniser emitting the
/// accompanying utterance in simulated episodes.
pub const SPEECH_LATENCY_MS: u64 = 600;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionConfigError {
    #[error("fallback window must be positive")]
    ZeroWindow,
    #[error("detection probability {0} outside [0, 1]")]
    DetectionOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("{name} = {value} outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("speech error rate must be below 1 to calibrate detection")]
    SpeechAlwaysFails,
    #[error("target {target} is below the perfect-detection floor {floor}")]
    BelowFloor { target: f64, floor: f64 },
    #[error("overall detection {detection} is below the missed-error share {missed_share}, which is always detected")]
    BelowMissedShare { detection: f64, missed_share: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Gesture,
    Speech,
}

impl Source {
    pub fn token(self) -> &'static str {
        match self {
            Source::Gesture => "GESTURE",
            Source::Speech => "SPEECH",
        }
    }
}

/// What the band reported for one gesture attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GestureReading {
    /// A captured gesture taken at face value.
    Captured(Gesture),
    /// A substitution known to the simulator. The engine cannot see the
    /// performed gesture directly; it only uses it to pick the detection
    /// probability of the operation.
    Wrong {
        performed: Gesture,
        captured: Gesture,
    },
    /// Nothing captured.
    Missed,
}

impl GestureReading {
    pub fn from_outcome(performed: Gesture, outcome: GestureOutcome) -> Self {
        match outcome {
            GestureOutcome::Correct => GestureReading::Captured(performed),
            GestureOutcome::Wrong(captured) => GestureReading::Wrong {
                performed,
                captured,
            },
            GestureOutcome::Missed => GestureReading::Missed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Gesture(GestureReading),
    Speech(RawUtterance),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModalityEvent {
    pub seq: u64,
    pub t_ms: u64,
    pub payload: Payload,
}

impl ModalityEvent {
    pub fn gesture(seq: u64, t_ms: u64, reading: GestureReading) -> Self {
        Self {
            seq,
            t_ms,
            payload: Payload::Gesture(reading),
        }
    }

    pub fn speech(seq: u64, t_ms: u64, u: RawUtterance) -> Self {
        Self {
            seq,
            t_ms,
            payload: Payload::Speech(u),
        }
    }

    pub fn source(&self) -> Source {
        match self.payload {
            Payload::Gesture(_) => Source::Gesture,
            Payload::Speech(_) => Source::Speech,
        }
    }
}

/// Total order for delivery: time, then gesture before speech, then sequence.
pub fn delivery_order(a: &ModalityEvent, b: &ModalityEvent) -> Ordering {
    (a.t_ms, a.source(), a.seq).cmp(&(b.t_ms, b.source(), b.seq))
}

/// Merges per-channel event lists into delivery order.
pub fn merge_events(mut events: Vec<ModalityEvent>) -> Vec<ModalityEvent> {
    events.sort_by(delivery_order);
    events
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    Event(ModalityEvent),
    Tick(u64),
}

impl Input {
    pub fn t_ms(&self) -> u64 {
        match self {
            Input::Event(e) => e.t_ms,
            Input::Tick(t) => *t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    fallback_window_ms: u64,
    /// Probability that a wrong capture during each operation (indexed like
    /// [`FusionOperation::ALL`]) is detected and handed to speech.
    wrong_detection: [f64; 5],
    normalization: NormalizationMap,
}

impl Default for FusionConfig {
    /// Default window, no wrong-gesture detection, default normalisation map.
    fn default() -> Self {
        Self {
            fallback_window_ms: DEFAULT_FALLBACK_WINDOW_MS,
            wrong_detection: [0.0; 5],
            normalization: NormalizationMap::for_model(&RecognitionModel::default())
                .expect("default map is consistent"),
        }
    }
}

impl FusionConfig {
    pub fn new(
        fallback_window_ms: u64,
        wrong_detection: [f64; 5],
        normalization: NormalizationMap,
    ) -> Result<Self, FusionConfigError> {
        if fallback_window_ms == 0 {
            return Err(FusionConfigError::ZeroWindow);
        }
        if let Some(&d) = wrong_detection.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(FusionConfigError::DetectionOutOfRange(d));
        }
        Ok(Self {
            fallback_window_ms,
            wrong_detection,
            normalization,
        })
    }

    /// Same wrong-gesture detection probability for every operation.
    pub fn with_uniform_detection(d: f64) -> Result<Self, FusionConfigError> {
        let base = Self::default();
        Self::new(base.fallback_window_ms, [d; 5], base.normalization)
    }

    /// Detection probabilities calibrated so each operation's fused error
    /// matches `targets` (fractions, indexed like [`FusionOperation::ALL`]).
    pub fn calibrated(
        gestures: &GestureOutcomeModel,
        speech: &RecognitionModel,
        targets: [f64; 5],
    ) -> Result<(Self, [OperationCalibration; 5]), CalibrationError> {
        let mut cals = Vec::with_capacity(5);
        for op in FusionOperation::ALL {
            cals.push(calibrate_operation(
                op,
                gestures,
                speech,
                targets[op.index()],
            )?);
        }
        let cals: [OperationCalibration; 5] = cals.try_into().expect("five operations");
        let base = Self::default();
        let cfg = Self {
            fallback_window_ms: base.fallback_window_ms,
            wrong_detection: cals.map(|c| c.wrong_detection),
            normalization: NormalizationMap::for_model(speech).unwrap_or(base.normalization),
        };
        Ok((cfg, cals))
    }

    /// Calibrated against the published fused error of each operation.
    pub fn calibrated_to_reference(
        gestures: &GestureOutcomeModel,
        speech: &RecognitionModel,
    ) -> Result<(Self, [OperationCalibration; 5]), CalibrationError> {
        Self::calibrated(
            gestures,
            speech,
            FusionOperation::ALL.map(|op| reference::fused_error_pct(op) / 100.0),
        )
    }

    pub fn fallback_window_ms(&self) -> u64 {
        self.fallback_window_ms
    }

    pub fn wrong_detection(&self, op: FusionOperation) -> f64 {
        self.wrong_detection[op.index()]
    }

    pub fn normalization(&self) -> &NormalizationMap {
        &self.normalization
    }

    pub fn set_fallback_window_ms(&mut self, ms: u64) -> Result<(), FusionConfigError> {
        if ms == 0 {
            return Err(FusionConfigError::ZeroWindow);
        }
        self.fallback_window_ms = ms;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FusionState {
    Idle,
    /// Speech arrived first; waiting for the higher-priority gesture.
    AwaitingGesture {
        deadline: u64,
        pending: RawUtterance,
    },
    /// The gesture failed; waiting for a substitute utterance.
    SpeechFallback {
        deadline: u64,
    },
    /// A command was emitted; companion speech before `absorb_until` is dropped.
    Emitting {
        absorb_until: u64,
    },
}

impl FusionState {
    pub fn name(&self) -> &'static str {
        match self {
            FusionState::Idle => "idle",
            FusionState::AwaitingGesture { .. } => "awaiting-gesture",
            FusionState::SpeechFallback { .. } => "speech-fallback",
            FusionState::Emitting { .. } => "emitting",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FusedCommand {
    pub action: ArmAction,
    pub source: Source,
    pub t_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FusionError {
    /// A wrong capture was not detected; its action was still executed.
    #[error("undetected wrong gesture executed as {}", emitted.action.name())]
    UndetectedWrongGesture { emitted: FusedCommand },
    #[error("speech fallback failed on {text:?}")]
    FallbackFailed { text: String },
    #[error("fallback window expired")]
    WindowExpired,
}

impl FusionError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            FusionError::UndetectedWrongGesture { .. } => ErrorKind::UndetectedWrongGesture,
            FusionError::FallbackFailed { .. } => ErrorKind::FallbackFailed,
            FusionError::WindowExpired => ErrorKind::WindowExpired,
        }
    }

    /// The action actually sent to the arm, if any.
    pub fn emitted(&self) -> Option<&FusedCommand> {
        match self {
            FusionError::UndetectedWrongGesture { emitted } => Some(emitted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorKind {
    UndetectedWrongGesture,
    FallbackFailed,
    WindowExpired,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::UndetectedWrongGesture => "undetected-wrong-gesture",
            ErrorKind::FallbackFailed => "fallback-failed",
            ErrorKind::WindowExpired => "window-expired",
        }
    }
}

/// End result of one episode.
pub type Resolution = Result<FusedCommand, FusionError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub state: FusionState,
    pub output: Option<Resolution>,
}

impl Step {
    fn quiet(state: FusionState) -> Self {
        Self {
            state,
            output: None,
        }
    }

    fn emit(state: FusionState, output: Resolution) -> Self {
        Self {
            state,
            output: Some(output),
        }
    }
}

fn resolve_speech(u: &RawUtterance, t_ms: u64, cfg: &FusionConfig) -> Resolution {
    let class = classify_capture_error(u);
    match speech::normalize_utterance(u, &cfg.normalization) {
        Some(c) if class == CaptureClass::Clean => Ok(FusedCommand {
            action: c.gesture().action(),
            source: Source::Speech,
            t_ms,
        }),
        _ => Err(FusionError::FallbackFailed {
            text: u.text.clone(),
        }),
    }
}

fn on_gesture(
    reading: GestureReading,
    pending: Option<&RawUtterance>,
    t: u64,
    cfg: &FusionConfig,
    rng: &mut SimRng,
) -> Step {
    let window_end = t + cfg.fallback_window_ms;
    // With speech already consumed there is nothing left to absorb.
    let absorb_until = if pending.is_some() { t } else { window_end };
    let fall_back = |pending: Option<&RawUtterance>| match pending {
        Some(u) => Step::emit(FusionState::Idle, resolve_speech(u, t, cfg)),
        None => Step::quiet(FusionState::SpeechFallback {
            deadline: window_end,
        }),
    };
    match reading {
        GestureReading::Captured(g) => Step::emit(
            FusionState::Emitting { absorb_until },
            Ok(FusedCommand {
                action: g.action(),
                source: Source::Gesture,
                t_ms: t,
            }),
        ),
        GestureReading::Missed => fall_back(pending),
        GestureReading::Wrong {
            performed,
            captured,
        } => {
            let d = cfg.wrong_detection(FusionOperation::for_gesture(performed));
            if rng.bernoulli(d) {
                fall_back(pending)
            } else {
                let emitted = FusedCommand {
                    action: captured.action(),
                    source: Source::Gesture,
                    t_ms: t,
                };
                Step::emit(
                    FusionState::Emitting { absorb_until },
                    Err(FusionError::UndetectedWrongGesture { emitted }),
                )
            }
        }
    }
}

/// One transition of the fusion state machine.
///
/// Inputs must arrive in delivery order (see [`delivery_order`]).
/// [`FusionEngine`] enforces that and inserts the clock ticks needed to
/// expire windows before later events.
pub fn step(state: &FusionState, input: &Input, cfg: &FusionConfig, rng: &mut SimRng) -> Step {
    let t = input.t_ms();
    match input {
        Input::Tick(_) => match state {
            FusionState::AwaitingGesture { deadline, pending } if t >= *deadline => {
                Step::emit(FusionState::Idle, resolve_speech(pending, *deadline, cfg))
            }
            FusionState::SpeechFallback { deadline } if t > *deadline => {
                Step::emit(FusionState::Idle, Err(FusionError::WindowExpired))
            }
            FusionState::Emitting { absorb_until } if t >= *absorb_until => {
                Step::quiet(FusionState::Idle)
            }
            other => Step::quiet(other.clone()),
        },
        Input::Event(ev) => match (&ev.payload, state) {
            (Payload::Gesture(r), FusionState::Idle | FusionState::Emitting { .. }) => {
                on_gesture(*r, None, t, cfg, rng)
            }
            (Payload::Gesture(r), FusionState::AwaitingGesture { pending, .. }) => {
                on_gesture(*r, Some(pending), t, cfg, rng)
            }
            (Payload::Gesture(GestureReading::Captured(g)), FusionState::SpeechFallback { .. }) => {
                Step::emit(
                    FusionState::Emitting {
                        absorb_until: t + cfg.fallback_window_ms,
                    },
                    Ok(FusedCommand {
                        action: g.action(),
                        source: Source::Gesture,
                        t_ms: t,
                    }),
                )
            }
            // another failed reading while already falling back changes nothing
            (Payload::Gesture(_), FusionState::SpeechFallback { .. }) => Step::quiet(state.clone()),
            (Payload::Speech(_), FusionState::Emitting { absorb_until }) if t < *absorb_until => {
                Step::quiet(state.clone())
            }
            (Payload::Speech(u), FusionState::Idle | FusionState::Emitting { .. }) => {
                Step::quiet(FusionState::AwaitingGesture {
                    deadline: t + cfg.fallback_window_ms,
                    pending: u.clone(),
                })
            }
            (Payload::Speech(u), FusionState::AwaitingGesture { deadline, .. }) => {
                Step::quiet(FusionState::AwaitingGesture {
                    deadline: *deadline,
                    pending: u.clone(),
                })
            }
            (Payload::Speech(u), FusionState::SpeechFallback { deadline }) => {
                if t <= *deadline {
                    Step::emit(FusionState::Idle, resolve_speech(u, t, cfg))
                } else {
                    Step::emit(FusionState::Idle, Err(FusionError::WindowExpired))
                }
            }
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("{modality:?} timestamp {t_ms} precedes previous {last}")]
    TimeRegression {
        modality: Option<Source>,
        t_ms: u64,
        last: u64,
    },
    #[error("{modality:?} sequence {seq} does not increase past {last}")]
    SequenceRegression {
        modality: Source,
        seq: u64,
        last: u64,
    },
}

/// Stateful wrapper around [`step`] that checks input ordering.
#[derive(Debug, Clone)]
pub struct FusionEngine {
    cfg: FusionConfig,
    state: FusionState,
    rng: SimRng,
    clock: u64,
    last_seq: [Option<u64>; 2],
}

impl FusionEngine {
    pub fn new(cfg: FusionConfig, rng: SimRng) -> Self {
        Self {
            cfg,
            state: FusionState::Idle,
            rng,
            clock: 0,
            last_seq: [None; 2],
        }
    }

    pub fn state(&self) -> &FusionState {
        &self.state
    }

    pub fn config(&self) -> &FusionConfig {
        &self.cfg
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// Clears the state machine and ordering history; the RNG stream continues.
    pub fn reset(&mut self) {
        self.state = FusionState::Idle;
        self.clock = 0;
        self.last_seq = [None; 2];
    }

    /// Feeds one input. Before an event, the clock is advanced to the event
    /// time so an expired window resolves first; hence up to two resolutions.
    pub fn feed(&mut self, input: Input) -> Result<Vec<Resolution>, EngineError> {
        let t = input.t_ms();
        if t < self.clock {
            let source = match &input {
                Input::Event(e) => Some(e.source()),
                Input::Tick(_) => None,
            };
            return Err(EngineError::TimeRegression {
                modality: source,
                t_ms: t,
                last: self.clock,
            });
        }
        if let Input::Event(e) = &input {
            let slot = &mut self.last_seq[e.source() as usize];
            if let Some(last) = *slot {
                if e.seq <= last {
                    return Err(EngineError::SequenceRegression {
                        modality: e.source(),
                        seq: e.seq,
                        last,
                    });
                }
            }
            *slot = Some(e.seq);
        }
        self.clock = t;
        let mut out = Vec::new();
        if matches!(input, Input::Event(_)) {
            self.apply(&Input::Tick(t), &mut out);
        }
        self.apply(&input, &mut out);
        Ok(out)
    }

    fn apply(&mut self, input: &Input, out: &mut Vec<Resolution>) {
        let s = step(&self.state, input, &self.cfg, &mut self.rng);
        self.state = s.state;
        out.extend(s.output);
    }
}

// ---------------------------------------------------------------------------
// Closed-form error algebra
// ---------------------------------------------------------------------------

fn check_unit(name: &'static str, value: f64) -> Result<(), CalibrationError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(CalibrationError::OutOfRange { name, value })
    }
}

/// Fused error for gesture error `g`, speech error `s` and overall detection
/// probability `d` of gesture errors: `g·(1−d) + g·d·s`.
pub fn closed_form_fused_error(g: f64, s: f64, d: f64) -> Result<f64, CalibrationError> {
    check_unit("g", g)?;
    check_unit("s", s)?;
    check_unit("d", d)?;
    Ok(g * (1.0 - d) + g * d * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detection {
    Feasible(f64),
    /// The target is not below the raw gesture error; no fallback needed.
    NoFallbackNeeded,
}

impl Detection {
    pub fn d(self) -> f64 {
        match self {
            Detection::Feasible(d) => d,
            Detection::NoFallbackNeeded => 0.0,
        }
    }
}

/// Inverts [`closed_form_fused_error`] for `d`.
pub fn calibrate_detection(g: f64, s: f64, target: f64) -> Result<Detection, CalibrationError> {
    check_unit("g", g)?;
    check_unit("s", s)?;
    check_unit("target", target)?;
    if s >= 1.0 {
        return Err(CalibrationError::SpeechAlwaysFails);
    }
    if target > g {
        return Ok(Detection::NoFallbackNeeded);
    }
    if target == g {
        return Ok(Detection::Feasible(0.0));
    }
    let floor = g * s;
    if target < floor {
        return Err(CalibrationError::BelowFloor { target, floor });
    }
    Ok(Detection::Feasible(
        ((g - target) / (g * (1.0 - s))).clamp(0.0, 1.0),
    ))
}

/// Converts an overall detection probability into the probability for wrong
/// captures alone, given that missed captures (a `missed_share` of all
/// errors) are always detected.
pub fn wrong_detection_probability(
    overall: f64,
    missed_share: f64,
) -> Result<f64, CalibrationError> {
    check_unit("d", overall)?;
    check_unit("missed_share", missed_share)?;
    if missed_share >= 1.0 {
        return Ok(0.0);
    }
    if overall < missed_share {
        return Err(CalibrationError::BelowMissedShare {
            detection: overall,
            missed_share,
        });
    }
    Ok(((overall - missed_share) / (1.0 - missed_share)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperationCalibration {
    pub op: FusionOperation,
    pub gesture_error: f64,
    pub speech_error: f64,
    pub target: f64,
    /// Overall detection probability over all gesture errors.
    pub detection: Detection,
    /// Detection probability applied to wrong captures by the state machine.
    pub wrong_detection: f64,
}

pub fn calibrate_operation(
    op: FusionOperation,
    gestures: &GestureOutcomeModel,
    speech: &RecognitionModel,
    target: f64,
) -> Result<OperationCalibration, CalibrationError> {
    let stats = gestures.stats(op.gesture);
    let g = stats.error_rate();
    let s = speech.p_error(op.speech);
    let detection = calibrate_detection(g, s, target)?;
    let wrong_detection = match detection {
        Detection::Feasible(d) => wrong_detection_probability(d, stats.missed_share())?,
        Detection::NoFallbackNeeded => 0.0,
    };
    Ok(OperationCalibration {
        op,
        gesture_error: g,
        speech_error: s,
        target,
        detection,
        wrong_detection,
    })
}

// ---------------------------------------------------------------------------
// Episode simulation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeOutcome {
    Success(Source),
    Error(ErrorKind),
}

impl EpisodeOutcome {
    pub fn is_error(self) -> bool {
        matches!(self, EpisodeOutcome::Error(_))
    }
}

/// Models for one simulated operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub gestures: GestureOutcomeModel,
    pub speech: RecognitionModel,
    pub warmup: WarmupState,
}

impl Default for Operator {
    fn default() -> Self {
        Self {
            gestures: GestureOutcomeModel::default(),
            speech: RecognitionModel::default(),
            warmup: WarmupState::warmed(),
        }
    }
}

/// Runs one episode: the gesture at t = 0 (nothing when missed), the
/// utterance at [`SPEECH_LATENCY_MS`], then a tick past every window.
pub fn run_episode(
    op: FusionOperation,
    operator: &Operator,
    cfg: &FusionConfig,
    rng: &mut SimRng,
) -> EpisodeOutcome {
    let mult = emg::warmup_factor(&operator.warmup).unwrap_or(1.0);
    let outcome = emg::draw_outcome(operator.gestures.stats(op.gesture), mult, rng);
    let utterance = speech::sample_recognition(op.speech, &operator.speech, rng);

    let mut inputs = Vec::with_capacity(3);
    if outcome != GestureOutcome::Missed {
        inputs.push(Input::Event(ModalityEvent::gesture(
            0,
            0,
            GestureReading::from_outcome(op.gesture, outcome),
        )));
    }
    inputs.push(Input::Event(ModalityEvent::speech(
        0,
        SPEECH_LATENCY_MS,
        utterance,
    )));
    inputs.push(Input::Tick(
        SPEECH_LATENCY_MS + 2 * cfg.fallback_window_ms + 1,
    ));

    let mut state = FusionState::Idle;
    let mut resolution = None;
    for input in &inputs {
        let s = step(&state, input, cfg, rng);
        state = s.state;
        if let Some(r) = s.output {
            debug_assert!(resolution.is_none(), "one resolution per episode");
            resolution = Some(r);
        }
    }
    match resolution {
        Some(Ok(cmd)) if cmd.action == op.action() => EpisodeOutcome::Success(cmd.source),
        Some(Ok(_)) => EpisodeOutcome::Error(ErrorKind::UndetectedWrongGesture),
        Some(Err(e)) => EpisodeOutcome::Error(e.kind()),
        None => EpisodeOutcome::Error(ErrorKind::WindowExpired),
    }
}

/// Runs `n_trials` independent episodes of `op` from one stream.
pub fn simulate_fused_operation(
    op: FusionOperation,
    operator: &Operator,
    cfg: &FusionConfig,
    n_trials: usize,
    rng: &mut SimRng,
) -> Vec<EpisodeOutcome> {
    (0..n_trials)
        .map(|_| run_episode(op, operator, cfg, rng))
        .collect()
}
