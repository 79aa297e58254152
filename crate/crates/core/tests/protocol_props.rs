use mmfuse::fusion::Source;
use mmfuse::model::ArmAction;
use mmfuse::protocol::{decode, encode, EventPayload, ProtocolError, WireMessage};
use mmfuse::Gesture;
use proptest::prelude::*;

fn text() -> impl Strategy<Value = String> {
    // printable text including quotes and backslashes, never a newline
    "[ -~é]{0,40}"
}

fn message() -> impl Strategy<Value = WireMessage> {
    let gesture = prop::option::of(prop::sample::select(Gesture::ALL.to_vec()));
    let source = prop::sample::select(vec![Source::Gesture, Source::Speech]);
    prop_oneof![
        "[a-z0-9/._-]{1,12}".prop_map(|version| WireMessage::Hello { version }),
        (any::<u64>(), any::<u64>(), gesture).prop_map(|(seq, t_ms, g)| WireMessage::Evt {
            seq,
            t_ms,
            payload: EventPayload::Gesture(g)
        }),
        (any::<u64>(), any::<u64>(), text()).prop_map(|(seq, t_ms, s)| WireMessage::Evt {
            seq,
            t_ms,
            payload: EventPayload::Speech(s)
        }),
        any::<u64>().prop_map(|seq| WireMessage::Ack { seq }),
        (
            any::<u64>(),
            prop::sample::select(Gesture::ALL.to_vec()),
            source
        )
            .prop_map(|(t_ms, g, source)| {
                WireMessage::Fused {
                    t_ms,
                    action: ArmAction::for_pin(g.pin()).unwrap(),
                    source,
                }
            }),
        (any::<u16>(), text()).prop_map(|(code, message)| WireMessage::Err { code, message }),
        Just(WireMessage::Bye),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn encode_decode_round_trip(m in message()) {
        let line = encode(&m).unwrap();
        prop_assert!(line.ends_with('\n'));
        prop_assert_eq!(line.matches('\n').count(), 1);
        prop_assert_eq!(decode(&line).unwrap(), m.clone());
        prop_assert_eq!(decode(line.trim_end_matches('\n')).unwrap(), m);
    }

    #[test]
    fn decode_never_panics(line in "[ -~]{0,60}") {
        if let Ok(m) = decode(&line) {
            // whatever decodes must re-encode to the same bytes
            let again = encode(&m).unwrap();
            prop_assert_eq!(again.trim_end_matches('\n'), line.as_str());
        }
    }
}

#[test]
fn newline_in_text_is_rejected() {
    let m = WireMessage::Err {
        code: 400,
        message: "a\nb".into(),
    };
    assert_eq!(encode(&m), Err(ProtocolError::EmbeddedNewline));
}

#[test]
fn non_canonical_integers_rejected() {
    assert!(decode("ACK 007").is_err());
    assert!(decode("ACK +7").is_err());
    assert!(decode("ACK  7").is_err());
    assert!(decode("ACK 18446744073709551616").is_err());
}
