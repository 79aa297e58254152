use mmfuse::robot::{ArmState, Gripper, RobotError, MAX_ANGLE, MIN_ANGLE};
use mmfuse::SimRng;
use proptest::prelude::*;

#[test]
fn ten_thousand_random_pin_events_stay_in_range() {
    for (seed, step) in [(1u64, 5.0), (2, 37.0), (3, 180.0)] {
        let mut rng = SimRng::new(seed);
        let mut arm = ArmState::new(step).unwrap();
        let mut accepted = 0;
        for t in 0..10_000u64 {
            let pin = (rng.next_u64() % 16) as u8;
            match arm.apply_pin_high(pin, t) {
                Ok(_) => accepted += 1,
                Err(RobotError::UnmappedPin(p)) => assert_eq!(p, pin),
                Err(e) => panic!("unexpected {e}"),
            }
            assert!(arm
                .angles()
                .iter()
                .all(|a| (MIN_ANGLE..=MAX_ANGLE).contains(a)));
        }
        assert_eq!(arm.log().len(), accepted);
    }
}

proptest! {
    #[test]
    fn angles_clamped_and_log_counts_accepted(
        pins in prop::collection::vec(0u8..14, 0..400),
        step in 0.5f64..90.0,
    ) {
        let mut arm = ArmState::new(step).unwrap();
        let mut accepted = 0;
        for (t, pin) in pins.iter().enumerate() {
            if arm.apply_pin_high(*pin, t as u64).is_ok() {
                accepted += 1;
            }
            prop_assert!(arm.angles().iter().all(|a| (MIN_ANGLE..=MAX_ANGLE).contains(a)));
        }
        prop_assert_eq!(arm.log().len(), accepted);
    }

    #[test]
    fn gripper_open_iff_even_toggles(pins in prop::collection::vec(prop::sample::select(vec![3u8, 4, 5, 9, 10]), 0..200)) {
        let mut arm = ArmState::default();
        arm.apply_pin_high(10, 0).unwrap();
        arm.reset();
        for (t, pin) in pins.iter().enumerate() {
            arm.apply_pin_high(*pin, t as u64).unwrap();
        }
        let toggles = pins.iter().filter(|&&p| p == 10).count();
        prop_assert_eq!(arm.gripper() == Gripper::Open, toggles % 2 == 0);
    }

    #[test]
    fn time_may_not_run_backwards(t0 in 1u64..1_000_000, back in 1u64..1000) {
        let mut arm = ArmState::default();
        arm.apply_pin_high(3, t0).unwrap();
        let earlier = t0.saturating_sub(back);
        prop_assert!(earlier == t0 || arm.apply_pin_high(3, earlier).is_err());
        prop_assert_eq!(arm.log().len(), 1);
    }
}
