use mmfuse::speech::{
    classify_capture_error, normalize_utterance, sample_recognition, CaptureClass,
    NormalizationMap, RawUtterance, RecognitionModel,
};
use mmfuse::stats::standard_error;
use mmfuse::{SimRng, SpeechCommand};
use proptest::prelude::*;

const N: u64 = 200_000;

#[test]
fn error_frequencies_converge_to_model() {
    let model = RecognitionModel::default();
    for c in SpeechCommand::ALL {
        let mut rng = SimRng::derived(5, c.index() as u64);
        let mut classes = [0u64; 4];
        for _ in 0..N {
            let u = sample_recognition(c, &model, &mut rng);
            let i = match classify_capture_error(&u) {
                CaptureClass::Clean => 0,
                CaptureClass::Substituted => 1,
                CaptureClass::Duplicated => 2,
                CaptureClass::Extraneous => 3,
            };
            classes[i] += 1;
        }
        let p = model.p_error(c);
        let errors = N - classes[0];
        let f = errors as f64 / N as f64;
        assert!(
            (f - p).abs() <= 3.0 * standard_error(p, N),
            "{c:?}: {f} vs {p}"
        );
        for (count, w) in classes[1..].iter().zip(model.mode_weights()) {
            let share = *count as f64 / errors as f64;
            assert!((share - w).abs() <= 3.0 * standard_error(w, errors));
        }
    }
}

#[test]
fn clean_utterances_normalise_to_their_command() {
    let model = RecognitionModel::default();
    let map = NormalizationMap::for_model(&model).unwrap();
    let mut rng = SimRng::new(8);
    for c in SpeechCommand::ALL {
        for _ in 0..2000 {
            let u = sample_recognition(c, &model, &mut rng);
            if classify_capture_error(&u) == CaptureClass::Clean {
                assert_eq!(normalize_utterance(&u, &map), Some(c));
            }
        }
    }
}

#[test]
fn duplicated_and_extraneous_recover_but_count_as_errors() {
    let map = NormalizationMap::for_model(&RecognitionModel::default()).unwrap();
    for c in SpeechCommand::ALL {
        for text in [
            format!("{0} {0}", c.utterance()),
            format!("{} please", c.utterance()),
        ] {
            let u = RawUtterance::new(text, Some(c)).unwrap();
            assert!(classify_capture_error(&u).is_error());
            assert_eq!(normalize_utterance(&u, &map), Some(c));
        }
    }
}

proptest! {
    #[test]
    fn normalisation_is_stable(text in "[a-z ]{1,30}") {
        let map = NormalizationMap::for_model(&RecognitionModel::default()).unwrap();
        if let Ok(u) = RawUtterance::observed(text) {
            let first = normalize_utterance(&u, &map);
            prop_assert_eq!(normalize_utterance(&u, &map), first);
            if let Some(c) = first {
                let canonical = RawUtterance::observed(c.utterance()).unwrap();
                prop_assert_eq!(normalize_utterance(&canonical, &map), Some(c));
            }
        }
    }

    #[test]
    fn case_and_spacing_do_not_matter(idx in 0usize..5, pad in 0usize..4) {
        let map = NormalizationMap::canonical();
        let c = SpeechCommand::ALL[idx];
        let text = format!("{}{}{}", " ".repeat(pad), c.utterance().to_uppercase().replace(' ', "   "), " ".repeat(pad));
        let u = RawUtterance::observed(text).unwrap();
        prop_assert_eq!(normalize_utterance(&u, &map), Some(c));
    }
}
