//! Interactive driver: type gestures and utterances, watch the fused
//! commands move the arm.
//!
//! ```text
//! g <gesture|none>     gesture capture at the current time
//! s "<utterance>"      speech capture at the current time
//! tick <ms>            advance the clock
//! state                show fusion state, clock and arm
//! reset                idle engine, home arm, clock 0
//! quit
//! ```

use std::io::{self, BufRead, Write};

use crate::fusion::{FusionConfig, FusionEngine, GestureReading, Input, ModalityEvent, Resolution};
use crate::model::{parse_gesture_name, Gesture};
use crate::protocol::WireMessage;
use crate::rng::SimRng;
use crate::robot::{ArmState, Delta, LogEntry, SERVO_NAMES};
use crate::speech::RawUtterance;

pub const USAGE: &str =
    "commands: g <gesture|none> | s \"<utterance>\" | tick <ms> | state | reset | quit";

pub struct Repl {
    engine: FusionEngine,
    arm: ArmState,
    seq: u64,
}

fn describe_delta(e: &LogEntry) -> String {
    match e.delta {
        Delta::Servo {
            servo,
            before,
            after,
        } => {
            format!(
                "arm: PIN{} {} {before} -> {after}",
                e.pin, SERVO_NAMES[servo]
            )
        }
        Delta::Gripper { before, after } => {
            format!(
                "arm: PIN{} gripper {} -> {}",
                e.pin,
                before.name(),
                after.name()
            )
        }
    }
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    s.strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .unwrap_or(s)
}

impl Repl {
    pub fn new(cfg: FusionConfig, seed: u64) -> Self {
        Self {
            engine: FusionEngine::new(cfg, SimRng::new(seed)),
            arm: ArmState::default(),
            seq: 0,
        }
    }

    pub fn arm(&self) -> &ArmState {
        &self.arm
    }

    fn resolve(&mut self, resolutions: Vec<Resolution>, out: &mut Vec<String>) {
        for r in resolutions {
            let cmd = match &r {
                Ok(cmd) => Some(*cmd),
                Err(e) => e.emitted().copied(),
            };
            if let Err(e) = &r {
                out.push(format!("error: {}", e.kind().name()));
            }
            if let Some(cmd) = cmd {
                out.push(
                    WireMessage::Fused {
                        t_ms: cmd.t_ms,
                        action: cmd.action,
                        source: cmd.source,
                    }
                    .to_string(),
                );
                match self.arm.apply(&cmd.action, cmd.t_ms) {
                    Ok(entry) => out.push(describe_delta(entry)),
                    Err(e) => out.push(format!("arm error: {e}")),
                }
            }
        }
    }

    fn feed(&mut self, input: Input, out: &mut Vec<String>) {
        match self.engine.feed(input) {
            Ok(r) => self.resolve(r, out),
            Err(e) => out.push(format!("error: {e}")),
        }
    }

    /// Handles one command line. Returns the output lines and `false` once
    /// the session should end.
    pub fn handle(&mut self, line: &str) -> (Vec<String>, bool) {
        let mut out = Vec::new();
        let line = line.trim();
        let (cmd, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let now = self.engine.clock();
        match cmd {
            "" => {}
            "g" => {
                let reading = if rest.eq_ignore_ascii_case("none") {
                    Ok(GestureReading::Missed)
                } else {
                    Gesture::from_token(rest)
                        .map(Ok)
                        .unwrap_or_else(|| parse_gesture_name(rest))
                        .map(GestureReading::Captured)
                };
                match reading {
                    Ok(r) => {
                        self.seq += 1;
                        self.feed(
                            Input::Event(ModalityEvent::gesture(self.seq, now, r)),
                            &mut out,
                        );
                    }
                    Err(e) => out.push(format!("error: {e}")),
                }
            }
            "s" => match RawUtterance::observed(unquote(rest)) {
                Ok(u) => {
                    self.seq += 1;
                    self.feed(
                        Input::Event(ModalityEvent::speech(self.seq, now, u)),
                        &mut out,
                    );
                }
                Err(e) => out.push(format!("error: {e}")),
            },
            "tick" => match rest.parse::<u64>() {
                Ok(ms) => self.feed(Input::Tick(now.saturating_add(ms)), &mut out),
                Err(_) => out.push("error: tick needs a duration in ms".to_string()),
            },
            "state" => {
                out.push(format!(
                    "state: {} at {} ms",
                    self.engine.state().name(),
                    now
                ));
                out.push(format!("arm: {}", self.arm.describe()));
            }
            "reset" => {
                self.engine.reset();
                self.arm.reset();
                self.seq = 0;
                out.push("reset".to_string());
            }
            "quit" | "exit" => return (out, false),
            _ => out.push(USAGE.to_string()),
        }
        (out, true)
    }
}

/// Runs the loop until `quit` or end of input.
pub fn run<R: BufRead, W: Write>(input: R, mut output: W, repl: &mut Repl) -> io::Result<()> {
    for line in input.lines() {
        let (lines, keep_going) = repl.handle(&line?);
        for l in lines {
            writeln!(output, "{l}")?;
        }
        output.flush()?;
        if !keep_going {
            break;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(script: &str) -> String {
        let mut repl = Repl::new(FusionConfig::default(), 0);
        let mut out = Vec::new();
        run(script.as_bytes(), &mut out, &mut repl).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn gesture_moves_arm() {
        let out = session("g fist\nstate\n");
        assert!(out.contains("FUSED 0 PIN3 GESTURE"));
        assert!(out.contains("arm: PIN3 base 90 -> 95"));
        assert!(out.contains("state: emitting"));
    }

    #[test]
    fn speech_after_miss() {
        let out = session("g none\ntick 300\ns \"move up\"\n");
        assert!(out.contains("FUSED 300 PIN9 SPEECH"), "{out}");
    }

    #[test]
    fn window_expiry_reported() {
        let out = session("g none\ntick 5000\n");
        assert!(out.contains("error: window-expired"), "{out}");
    }

    #[test]
    fn unknown_command_prints_usage() {
        assert_eq!(session("jump\n").trim(), USAGE);
    }

    #[test]
    fn quit_stops_reading() {
        let out = session("quit\ng fist\n");
        assert!(out.is_empty());
    }
}
