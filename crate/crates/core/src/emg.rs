//! Simulated 8-sensor armband.
//!
//! Two layers model the band. [`GestureOutcomeModel`] is the statistical
//! layer used by the experiment harness: each performed gesture is captured
//! correctly, captured as a different gesture, or missed. The signal layer
//! ([`synth_emg_window`], [`classify_window`]) renders noisy 8-channel
//! activation windows from fixed templates and classifies them by nearest
//! centroid, and [`calibrate_noise`] tunes its noise level to the same
//! per-gesture error targets.

use thiserror::Error;

use crate::model::Gesture;
use crate::reference;
use crate::rng::SimRng;

pub const CHANNELS: usize = 8;
pub const WINDOW_SAMPLES: usize = 40;
pub const SAMPLE_RATE_HZ: f64 = 200.0;
/// Bumped whenever the template shapes below change.
pub const TEMPLATE_VERSION: u32 = 1;

/// Share of the combined error rate attributed to wrong (not missed) captures.
pub const DEFAULT_WRONG_SHARE: f64 = 0.7;

const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmgError {
    #[error("elapsed time must be non-negative, got {0}")]
    NegativeElapsed(f64),
    #[error("warm-up parameters invalid: cold multiplier {cold} must be >= 1, adapt time {adapt} must be > 0")]
    InvalidWarmup { cold: f64, adapt: f64 },
    #[error("outcome probabilities for {gesture} are invalid: {reason}")]
    InvalidModel { gesture: Gesture, reason: String },
    #[error("noise scale must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("target error {target} outside (0, 1)")]
    InvalidTarget { target: f64 },
    #[error(
        "calibration infeasible: target {target} not bracketed (error at upper bracket {max_rate})"
    )]
    CalibrationInfeasible { target: f64, max_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GestureOutcome {
    Correct,
    Wrong(Gesture),
    Missed,
}

impl GestureOutcome {
    pub fn is_error(self) -> bool {
        !matches!(self, GestureOutcome::Correct)
    }
}

/// Recognition statistics for one performed gesture.
#[derive(Debug, Clone, PartialEq)]
pub struct GestureStats {
    pub p_correct: f64,
    pub p_wrong: f64,
    pub p_missed: f64,
    /// Unnormalised weights over [`Gesture::ALL`] for what a wrong capture
    /// reads as. The performed gesture's own weight must be zero.
    pub confusion: [f64; 5],
}

impl GestureStats {
    pub fn error_rate(&self) -> f64 {
        self.p_wrong + self.p_missed
    }

    /// Fraction of errors that are misses rather than substitutions.
    pub fn missed_share(&self) -> f64 {
        let e = self.error_rate();
        if e > 0.0 {
            self.p_missed / e
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfusionProfile {
    /// Wrong captures land uniformly on the other four gestures.
    Uniform,
    /// Finger spread mostly reads as fist and wave out mostly as wave in.
    Emphasis,
}

impl ConfusionProfile {
    fn weights(self, g: Gesture) -> [f64; 5] {
        let mut w = [1.0; 5];
        w[g.index()] = 0.0;
        if self == ConfusionProfile::Emphasis {
            let favoured = match g {
                Gesture::FingerSpread => Some(Gesture::Fist),
                Gesture::WaveOut => Some(Gesture::WaveIn),
                _ => None,
            };
            if let Some(f) = favoured {
                w = [0.5 / 3.0; 5];
                w[g.index()] = 0.0;
                w[f.index()] = 0.5;
            }
        }
        w
    }
}

/// Per-gesture outcome probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct GestureOutcomeModel {
    stats: [GestureStats; 5],
}

impl Default for GestureOutcomeModel {
    /// Published per-gesture error rates, 70:30 wrong:missed, uniform confusion.
    fn default() -> Self {
        Self::from_error_rates(
            Gesture::ALL.map(|g| reference::gesture_error_pct(g) / 100.0),
            DEFAULT_WRONG_SHARE,
            ConfusionProfile::Uniform,
        )
        .expect("published rates are valid")
    }
}

impl GestureOutcomeModel {
    pub fn new(stats: [GestureStats; 5]) -> Result<Self, EmgError> {
        let model = Self { stats };
        model.validate()?;
        Ok(model)
    }

    /// Builds a model from combined error rates indexed like [`Gesture::ALL`].
    pub fn from_error_rates(
        error_rates: [f64; 5],
        wrong_share: f64,
        profile: ConfusionProfile,
    ) -> Result<Self, EmgError> {
        if !(0.0..=1.0).contains(&wrong_share) {
            return Err(EmgError::InvalidModel {
                gesture: Gesture::Fist,
                reason: format!("wrong share {wrong_share} outside [0, 1]"),
            });
        }
        let stats = Gesture::ALL.map(|g| {
            let e = error_rates[g.index()];
            GestureStats {
                p_correct: 1.0 - e,
                p_wrong: e * wrong_share,
                p_missed: e * (1.0 - wrong_share),
                confusion: profile.weights(g),
            }
        });
        Self::new(stats)
    }

    /// Published rates with a different wrong:missed split.
    pub fn with_wrong_share(wrong_share: f64) -> Result<Self, EmgError> {
        Self::from_error_rates(
            Gesture::ALL.map(|g| reference::gesture_error_pct(g) / 100.0),
            wrong_share,
            ConfusionProfile::Uniform,
        )
    }

    pub fn emphasis() -> Self {
        Self::from_error_rates(
            Gesture::ALL.map(|g| reference::gesture_error_pct(g) / 100.0),
            DEFAULT_WRONG_SHARE,
            ConfusionProfile::Emphasis,
        )
        .expect("published rates are valid")
    }

    pub fn error_free() -> Self {
        Self::from_error_rates([0.0; 5], DEFAULT_WRONG_SHARE, ConfusionProfile::Uniform)
            .expect("zero rates are valid")
    }

    pub fn stats(&self, g: Gesture) -> &GestureStats {
        &self.stats[g.index()]
    }

    pub fn set_stats(&mut self, g: Gesture, stats: GestureStats) -> Result<(), EmgError> {
        let old = std::mem::replace(&mut self.stats[g.index()], stats);
        if let Err(e) = self.validate() {
            self.stats[g.index()] = old;
            return Err(e);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), EmgError> {
        for g in Gesture::ALL {
            let s = &self.stats[g.index()];
            let bad = |reason: String| EmgError::InvalidModel { gesture: g, reason };
            for (name, p) in [
                ("p_correct", s.p_correct),
                ("p_wrong", s.p_wrong),
                ("p_missed", s.p_missed),
            ] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(bad(format!("{name} = {p} outside [0, 1]")));
                }
            }
            let sum = s.p_correct + s.p_wrong + s.p_missed;
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(bad(format!("probabilities sum to {sum}")));
            }
            if s.confusion.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(bad(
                    "confusion weights must be finite and non-negative".into()
                ));
            }
            if s.confusion[g.index()] != 0.0 {
                return Err(bad("confusion must exclude the performed gesture".into()));
            }
            if s.p_wrong > 0.0 && s.confusion.iter().sum::<f64>() <= 0.0 {
                return Err(bad(
                    "wrong captures need a non-empty confusion distribution".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Elevated error while the band adapts to skin temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmupState {
    pub elapsed_s: f64,
    pub cold_multiplier: f64,
    pub adapt_time_s: f64,
}

impl WarmupState {
    pub const DEFAULT_COLD_MULTIPLIER: f64 = 3.0;
    pub const DEFAULT_ADAPT_TIME_S: f64 = 120.0;

    pub fn at(elapsed_s: f64) -> Self {
        Self {
            elapsed_s,
            cold_multiplier: Self::DEFAULT_COLD_MULTIPLIER,
            adapt_time_s: Self::DEFAULT_ADAPT_TIME_S,
        }
    }

    /// Fully adapted band.
    pub fn warmed() -> Self {
        Self::at(Self::DEFAULT_ADAPT_TIME_S)
    }
}

/// Error-rate multiplier: linear from `cold_multiplier` at t = 0 down to 1 at
/// `adapt_time_s`, then flat.
pub fn warmup_factor(state: &WarmupState) -> Result<f64, EmgError> {
    if state.elapsed_s.is_nan() || state.elapsed_s < 0.0 {
        return Err(EmgError::NegativeElapsed(state.elapsed_s));
    }
    if state.cold_multiplier.is_nan()
        || state.cold_multiplier < 1.0
        || state.adapt_time_s.is_nan()
        || state.adapt_time_s <= 0.0
    {
        return Err(EmgError::InvalidWarmup {
            cold: state.cold_multiplier,
            adapt: state.adapt_time_s,
        });
    }
    if state.elapsed_s >= state.adapt_time_s {
        return Ok(1.0);
    }
    let remaining = 1.0 - state.elapsed_s / state.adapt_time_s;
    Ok(1.0 + (state.cold_multiplier - 1.0) * remaining)
}

/// Draws the band's reading of one performed gesture.
///
/// The combined error rate is scaled by the warm-up multiplier (capped at 1)
/// keeping the wrong:missed proportion.
pub fn sample_gesture_outcome(
    g: Gesture,
    model: &GestureOutcomeModel,
    warmup: &WarmupState,
    rng: &mut SimRng,
) -> Result<GestureOutcome, EmgError> {
    let mult = warmup_factor(warmup)?;
    Ok(draw_outcome(model.stats(g), mult, rng))
}

pub(crate) fn draw_outcome(s: &GestureStats, mult: f64, rng: &mut SimRng) -> GestureOutcome {
    let base = s.error_rate();
    if base <= 0.0 {
        return GestureOutcome::Correct;
    }
    let err = (mult * base).min(1.0);
    let wrong = err * s.p_wrong / base;
    let u = rng.uniform();
    if u < wrong {
        let idx = rng
            .weighted_index(&s.confusion)
            .expect("validated: wrong captures have confusion mass");
        GestureOutcome::Wrong(Gesture::ALL[idx])
    } else if u < err {
        GestureOutcome::Missed
    } else {
        GestureOutcome::Correct
    }
}

// ---------------------------------------------------------------------------
// Signal layer
// ---------------------------------------------------------------------------

/// One analysis window: `CHANNELS` rows of `WINDOW_SAMPLES` activations.
#[derive(Debug, Clone, PartialEq)]
pub struct EmgWindow {
    pub samples: [Vec<f64>; CHANNELS],
    pub sample_rate_hz: f64,
    pub true_gesture: Gesture,
}

impl EmgWindow {
    pub fn len(&self) -> usize {
        self.samples[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-channel root-mean-square activation.
    pub fn rms_features(&self) -> [f64; CHANNELS] {
        let n = self.len().max(1) as f64;
        std::array::from_fn(|ch| (self.samples[ch].iter().map(|x| x * x).sum::<f64>() / n).sqrt())
    }
}

// Mean activation per channel for each gesture, rows in Gesture::ALL order.
const TEMPLATE_AMPLITUDES: [[f64; CHANNELS]; 5] = [
    [0.90, 0.85, 0.80, 0.75, 0.75, 0.80, 0.85, 0.90], // fist
    [0.85, 0.70, 0.35, 0.15, 0.10, 0.20, 0.45, 0.70], // wave in
    [0.15, 0.35, 0.70, 0.90, 0.80, 0.50, 0.25, 0.10], // wave out
    [0.40, 0.65, 0.85, 0.60, 0.40, 0.65, 0.85, 0.60], // finger spread
    [0.30, 0.30, 0.35, 0.40, 0.40, 0.35, 0.30, 0.30], // double tap
];

/// Noise-free reference windows and their feature centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct Templates {
    windows: Vec<[Vec<f64>; CHANNELS]>,
    centroids: Vec<[f64; CHANNELS]>,
}

impl Default for Templates {
    fn default() -> Self {
        Self::standard()
    }
}

impl Templates {
    /// Version [`TEMPLATE_VERSION`] templates: each channel carries a slow
    /// modulation around its mean activation.
    pub fn standard() -> Self {
        let windows: Vec<[Vec<f64>; CHANNELS]> = TEMPLATE_AMPLITUDES
            .iter()
            .map(|amps| {
                std::array::from_fn(|ch| {
                    (0..WINDOW_SAMPLES)
                        .map(|k| {
                            let phase =
                                2.0 * std::f64::consts::PI * k as f64 / WINDOW_SAMPLES as f64;
                            amps[ch] * (1.0 + 0.25 * (phase * (ch + 1) as f64).sin())
                        })
                        .collect()
                })
            })
            .collect();
        let centroids = windows
            .iter()
            .zip(Gesture::ALL)
            .map(|(w, g)| {
                EmgWindow {
                    samples: w.clone(),
                    sample_rate_hz: SAMPLE_RATE_HZ,
                    true_gesture: g,
                }
                .rms_features()
            })
            .collect();
        Self { windows, centroids }
    }

    pub fn window(&self, g: Gesture) -> &[Vec<f64>; CHANNELS] {
        &self.windows[g.index()]
    }

    pub fn centroid(&self, g: Gesture) -> &[f64; CHANNELS] {
        &self.centroids[g.index()]
    }
}

/// Default rejection radius in RMS-feature space.
pub const DEFAULT_REJECT_THRESHOLD: f64 = 0.25;

/// Template plus i.i.d. zero-mean Gaussian noise of standard deviation `sigma`.
pub fn synth_emg_window(
    g: Gesture,
    sigma: f64,
    templates: &Templates,
    rng: &mut SimRng,
) -> Result<EmgWindow, EmgError> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(EmgError::NegativeSigma(sigma));
    }
    let template = templates.window(g);
    let samples = std::array::from_fn(|ch| {
        template[ch]
            .iter()
            .map(|&x| {
                if sigma > 0.0 {
                    x + sigma * rng.standard_normal()
                } else {
                    x
                }
            })
            .collect()
    });
    Ok(EmgWindow {
        samples,
        sample_rate_hz: SAMPLE_RATE_HZ,
        true_gesture: g,
    })
}

fn distance(a: &[f64; CHANNELS], b: &[f64; CHANNELS]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Nearest-centroid classification on RMS features with distance rejection.
pub fn classify_window(
    w: &EmgWindow,
    templates: &Templates,
    reject_threshold: f64,
) -> GestureOutcome {
    let features = w.rms_features();
    let (best, dist) = Gesture::ALL
        .into_iter()
        .map(|g| (g, distance(&features, templates.centroid(g))))
        .fold((Gesture::Fist, f64::INFINITY), |acc, cur| {
            if cur.1 < acc.1 {
                cur
            } else {
                acc
            }
        });
    if dist > reject_threshold {
        GestureOutcome::Missed
    } else if best == w.true_gesture {
        GestureOutcome::Correct
    } else {
        GestureOutcome::Wrong(best)
    }
}

/// Outcome counts of one signal-layer batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SignalTally {
    pub correct: u64,
    pub wrong: u64,
    pub missed: u64,
}

impl SignalTally {
    pub fn total(&self) -> u64 {
        self.correct + self.wrong + self.missed
    }

    pub fn error_rate(&self) -> f64 {
        (self.wrong + self.missed) as f64 / self.total().max(1) as f64
    }
}

/// Runs `trials` synth→classify round trips from a fresh stream seeded with `seed`.
///
/// Re-using the seed across noise levels gives common random numbers, which
/// keeps the error curve smooth in `sigma`.
pub fn signal_error_tally(
    g: Gesture,
    sigma: f64,
    trials: usize,
    templates: &Templates,
    reject_threshold: f64,
    seed: u64,
) -> Result<SignalTally, EmgError> {
    let mut rng = SimRng::new(seed);
    let mut tally = SignalTally::default();
    for _ in 0..trials {
        let w = synth_emg_window(g, sigma, templates, &mut rng)?;
        match classify_window(&w, templates, reject_threshold) {
            GestureOutcome::Correct => tally.correct += 1,
            GestureOutcome::Wrong(_) => tally.wrong += 1,
            GestureOutcome::Missed => tally.missed += 1,
        }
    }
    Ok(tally)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCalibration {
    pub sigma: f64,
    pub achieved_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSettings {
    pub trials_per_eval: usize,
    pub sigma_max: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub reject_threshold: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            trials_per_eval: 20_000,
            sigma_max: 2.0,
            tolerance: 0.003,
            max_iterations: 60,
            reject_threshold: DEFAULT_REJECT_THRESHOLD,
        }
    }
}

/// Bisects the noise scale until the signal layer's error for `g` is within
/// `settings.tolerance` of `target_error`.
///
/// A zero target is satisfied by the noiseless window and returns sigma 0.
pub fn calibrate_noise(
    g: Gesture,
    target_error: f64,
    templates: &Templates,
    settings: &CalibrationSettings,
    seed: u64,
) -> Result<NoiseCalibration, EmgError> {
    if target_error.is_nan() || !(0.0..1.0).contains(&target_error) {
        return Err(EmgError::InvalidTarget {
            target: target_error,
        });
    }
    let eval = |sigma: f64| -> Result<f64, EmgError> {
        Ok(signal_error_tally(
            g,
            sigma,
            settings.trials_per_eval,
            templates,
            settings.reject_threshold,
            seed,
        )?
        .error_rate())
    };
    let mut evaluations = 0;
    let mut lo = 0.0;
    let lo_err = eval(lo)?;
    evaluations += 1;
    if (lo_err - target_error).abs() <= settings.tolerance || target_error == 0.0 {
        return Ok(NoiseCalibration {
            sigma: lo,
            achieved_error: lo_err,
            evaluations,
        });
    }
    let mut hi = settings.sigma_max;
    let hi_err = eval(hi)?;
    evaluations += 1;
    if hi_err < target_error - settings.tolerance || lo_err > target_error {
        return Err(EmgError::CalibrationInfeasible {
            target: target_error,
            max_rate: hi_err,
        });
    }
    let mut best = (hi, hi_err);
    for _ in 0..settings.max_iterations {
        let mid = 0.5 * (lo + hi);
        let err = eval(mid)?;
        evaluations += 1;
        if (err - target_error).abs() < (best.1 - target_error).abs() {
            best = (mid, err);
        }
        if (err - target_error).abs() <= settings.tolerance {
            return Ok(NoiseCalibration {
                sigma: mid,
                achieved_error: err,
                evaluations,
            });
        }
        if err < target_error {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.1 - target_error).abs() <= settings.tolerance {
        Ok(NoiseCalibration {
            sigma: best.0,
            achieved_error: best.1,
            evaluations,
        })
    } else {
        Err(EmgError::CalibrationInfeasible {
            target: target_error,
            max_rate: hi_err,
        })
    }
}
