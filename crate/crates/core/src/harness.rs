//! Experiment runners reproducing the single-modality and fused trials.
//!
//! Each item (gesture, command or fused operation) runs on its own stream
//! seeded with `seed XOR item_index`, so items can run on separate threads
//! and the results do not depend on scheduling.

use std::thread;

use crate::emg::{sample_gesture_outcome, GestureOutcome};
use crate::fusion::{run_episode, EpisodeOutcome, ErrorKind, FusionConfig, Operator};
use crate::model::{FusionOperation, Gesture, SpeechCommand};
use crate::rng::SimRng;
use crate::speech::{
    classify_capture_error, normalize_utterance, sample_recognition, NormalizationMap,
};
use crate::stats::{BlockStats, StatsError};

pub const DEFAULT_REPETITIONS: usize = 10;
pub const DEFAULT_PER_REPETITION: usize = 100;
pub const DEFAULT_BLOCKS: usize = 4;
pub const DEFAULT_BLOCK_SIZE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Emg,
    Speech,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Item {
    Gesture(Gesture),
    Command(SpeechCommand),
    Operation(FusionOperation),
}

impl Item {
    pub fn label(&self) -> String {
        match self {
            Item::Gesture(g) => g.name().to_string(),
            Item::Command(c) => c.utterance().to_string(),
            Item::Operation(op) => op.label.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    Success,
    Error(TrialError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialError {
    WrongGesture,
    MissedGesture,
    /// Recognised string was not clean; `recovered` when normalisation still
    /// maps it to the spoken command.
    Speech {
        recovered: bool,
    },
    Fused(ErrorKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub item: Item,
    pub index: usize,
    pub outcome: TrialOutcome,
}

impl TrialRecord {
    pub fn is_error(&self) -> bool {
        matches!(self.outcome, TrialOutcome::Error(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemResult {
    pub item: Item,
    /// Error percentage of each repetition.
    pub repetition_error_pct: Vec<f64>,
    /// Mean of the repetition percentages.
    pub error_pct: f64,
    pub trials: usize,
    pub errors: usize,
    /// Speech only: erroneous captures that normalisation still maps to the
    /// spoken command.
    pub recovered: usize,
}

impl ItemResult {
    pub fn correct_pct(&self) -> f64 {
        100.0 - self.error_pct
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalityTable {
    pub modality: Modality,
    pub items: Vec<ItemResult>,
}

impl ModalityTable {
    pub fn correct_pcts(&self) -> Vec<f64> {
        self.items.iter().map(ItemResult::correct_pct).collect()
    }
}

fn trial_outcome(
    item: Item,
    operator: &Operator,
    map: &NormalizationMap,
    rng: &mut SimRng,
) -> TrialOutcome {
    match item {
        Item::Gesture(g) => {
            match sample_gesture_outcome(g, &operator.gestures, &operator.warmup, rng) {
                Ok(GestureOutcome::Correct) => TrialOutcome::Success,
                Ok(GestureOutcome::Wrong(_)) => TrialOutcome::Error(TrialError::WrongGesture),
                Ok(GestureOutcome::Missed) | Err(_) => {
                    TrialOutcome::Error(TrialError::MissedGesture)
                }
            }
        }
        Item::Command(c) => {
            let u = sample_recognition(c, &operator.speech, rng);
            if classify_capture_error(&u).is_error() {
                let recovered = normalize_utterance(&u, map) == Some(c);
                TrialOutcome::Error(TrialError::Speech { recovered })
            } else {
                TrialOutcome::Success
            }
        }
        Item::Operation(_) => unreachable!("fused items run through run_fusion_experiment"),
    }
}

/// Runs `reps × per_rep` trials of one gesture or command.
pub fn run_modality_item(
    item: Item,
    operator: &Operator,
    map: &NormalizationMap,
    reps: usize,
    per_rep: usize,
    seed: u64,
) -> ItemResult {
    let mut rng = SimRng::new(seed);
    let mut repetition_error_pct = Vec::with_capacity(reps);
    let (mut errors, mut recovered) = (0, 0);
    for _ in 0..reps {
        let mut rep_errors = 0;
        for _ in 0..per_rep {
            if let TrialOutcome::Error(e) = trial_outcome(item, operator, map, &mut rng) {
                rep_errors += 1;
                if e == (TrialError::Speech { recovered: true }) {
                    recovered += 1;
                }
            }
        }
        errors += rep_errors;
        repetition_error_pct.push(100.0 * rep_errors as f64 / per_rep.max(1) as f64);
    }
    let error_pct = if reps == 0 {
        0.0
    } else {
        repetition_error_pct.iter().sum::<f64>() / reps as f64
    };
    ItemResult {
        item,
        repetition_error_pct,
        error_pct,
        trials: reps * per_rep,
        errors,
        recovered,
    }
}

fn modality_items(modality: Modality) -> Vec<Item> {
    match modality {
        Modality::Emg => Gesture::ALL.map(Item::Gesture).to_vec(),
        Modality::Speech => SpeechCommand::ALL.map(Item::Command).to_vec(),
    }
}

/// Per-item error table for one modality, items on parallel threads.
pub fn run_modality_experiment(
    modality: Modality,
    operator: &Operator,
    map: &NormalizationMap,
    reps: usize,
    per_rep: usize,
    seed: u64,
) -> ModalityTable {
    let items = modality_items(modality);
    let results = thread::scope(|scope| {
        let handles: Vec<_> = items
            .iter()
            .enumerate()
            .map(|(i, &item)| {
                let item_seed = SimRng::derive_seed(seed, i as u64);
                scope
                    .spawn(move || run_modality_item(item, operator, map, reps, per_rep, item_seed))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("item thread panicked"))
            .collect()
    });
    ModalityTable {
        modality,
        items: results,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionRun {
    pub op: FusionOperation,
    pub stats: BlockStats,
    pub records: Vec<TrialRecord>,
}

impl FusionRun {
    pub fn count(&self, kind: ErrorKind) -> usize {
        self.records
            .iter()
            .filter(|r| r.outcome == TrialOutcome::Error(TrialError::Fused(kind)))
            .count()
    }

    pub fn speech_successes(&self) -> usize {
        self.records.len() - self.records.iter().filter(|r| r.is_error()).count()
    }
}

/// Runs `blocks × block_size` fused episodes of `op`.
pub fn run_fusion_experiment(
    op: FusionOperation,
    operator: &Operator,
    cfg: &FusionConfig,
    blocks: usize,
    block_size: usize,
    seed: u64,
) -> Result<FusionRun, StatsError> {
    let mut rng = SimRng::new(seed);
    let records: Vec<TrialRecord> = (0..blocks * block_size)
        .map(|index| {
            let outcome = match run_episode(op, operator, cfg, &mut rng) {
                EpisodeOutcome::Success(_) => TrialOutcome::Success,
                EpisodeOutcome::Error(kind) => TrialOutcome::Error(TrialError::Fused(kind)),
            };
            TrialRecord {
                item: Item::Operation(op),
                index,
                outcome,
            }
        })
        .collect();
    let stats =
        BlockStats::from_trials(records.iter().map(TrialRecord::is_error), block_size as u64)?;
    Ok(FusionRun { op, stats, records })
}

/// All five operations, each on its own derived stream and thread.
pub fn run_fusion_table(
    operator: &Operator,
    cfg: &FusionConfig,
    blocks: usize,
    block_size: usize,
    seed: u64,
) -> Result<Vec<FusionRun>, StatsError> {
    thread::scope(|scope| {
        let handles: Vec<_> = FusionOperation::ALL
            .iter()
            .map(|&op| {
                let op_seed = SimRng::derive_seed(seed, op.index() as u64);
                scope.spawn(move || {
                    run_fusion_experiment(op, operator, cfg, blocks, block_size, op_seed)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("operation thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emg::GestureOutcomeModel;
    use crate::speech::RecognitionModel;

    fn map() -> NormalizationMap {
        NormalizationMap::for_model(&RecognitionModel::default()).unwrap()
    }

    #[test]
    fn error_free_models_give_zero() {
        let operator = Operator {
            gestures: GestureOutcomeModel::error_free(),
            speech: RecognitionModel::with_accuracy(1.0).unwrap(),
            ..Operator::default()
        };
        for modality in [Modality::Emg, Modality::Speech] {
            let t = run_modality_experiment(modality, &operator, &map(), 10, 100, 3);
            assert!(t
                .items
                .iter()
                .all(|i| i.error_pct == 0.0 && i.trials == 1000));
        }
    }

    #[test]
    fn deterministic_and_schedule_independent() {
        let operator = Operator::default();
        let a = run_modality_experiment(Modality::Speech, &operator, &map(), 10, 100, 99);
        let b = run_modality_experiment(Modality::Speech, &operator, &map(), 10, 100, 99);
        assert_eq!(a, b);
        // same as running each item alone, in reverse order
        for (i, item) in a.items.iter().enumerate().rev() {
            let alone = run_modality_item(
                item.item,
                &operator,
                &map(),
                10,
                100,
                SimRng::derive_seed(99, i as u64),
            );
            assert_eq!(&alone, item);
        }
    }

    #[test]
    fn recovery_is_tracked() {
        let operator = Operator::default();
        let t = run_modality_experiment(Modality::Speech, &operator, &map(), 10, 100, 1);
        for item in &t.items {
            assert!(item.recovered <= item.errors);
        }
        assert!(t.items.iter().map(|i| i.recovered).sum::<usize>() > 0);
    }

    #[test]
    fn fusion_records_are_dense() {
        let operator = Operator::default();
        let (cfg, _) =
            FusionConfig::calibrated_to_reference(&operator.gestures, &operator.speech).unwrap();
        let run =
            run_fusion_experiment(FusionOperation::ALL[0], &operator, &cfg, 4, 50, 5).unwrap();
        assert_eq!(run.stats.total_trials, 200);
        assert!(run.records.iter().enumerate().all(|(i, r)| r.index == i));
        let errors = run.records.iter().filter(|r| r.is_error()).count() as u64;
        assert_eq!(errors, run.stats.total_errors());
    }

    #[test]
    fn fusion_table_matches_individual_runs() {
        let operator = Operator::default();
        let (cfg, _) =
            FusionConfig::calibrated_to_reference(&operator.gestures, &operator.speech).unwrap();
        let table = run_fusion_table(&operator, &cfg, 4, 50, 21).unwrap();
        for op in FusionOperation::ALL.iter().rev() {
            let alone = run_fusion_experiment(
                *op,
                &operator,
                &cfg,
                4,
                50,
                SimRng::derive_seed(21, op.index() as u64),
            )
            .unwrap();
            assert_eq!(table[op.index()], alone);
        }
    }
}
