//! Deterministic simulator for priority-based fusion of EMG gestures and
//! speech commands driving a five-servo arm.
//!
//! Gestures are the primary modality. When a gesture is missed, or a wrong
//! capture is flagged, a spoken command can stand in for it inside a fallback
//! window. Everything is seeded, so a given seed reproduces a run exactly.

pub mod config;
pub mod emg;
pub mod fusion;
pub mod harness;
pub mod model;
pub mod protocol;
pub mod reference;
pub mod repl;
pub mod report;
pub mod rng;
pub mod robot;
pub mod server;
pub mod speech;
pub mod stats;

pub use model::{ArmAction, FusionOperation, Gesture, SpeechCommand};
pub use rng::SimRng;
