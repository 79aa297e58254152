//! Fusion server: one [`Session`] per connection over the line protocol.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::thread;

use crate::fusion::{
    EngineError, FusionConfig, FusionEngine, GestureReading, Input, ModalityEvent, Resolution,
};
use crate::protocol::{decode, encode, EventPayload, WireMessage, PROTOCOL_VERSION};
use crate::rng::SimRng;
use crate::speech::RawUtterance;

pub const ERR_BAD_REQUEST: u16 = 400;
pub const ERR_ORDERING: u16 = 409;
pub const ERR_VERSION: u16 = 426;

/// Protocol state for one connection. Holds its own engine and RNG stream.
#[derive(Debug)]
pub struct Session {
    engine: FusionEngine,
    greeted: bool,
    last_seq: Option<u64>,
    closed: bool,
}

/// Replies to one inbound line, and whether the connection must close.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub messages: Vec<WireMessage>,
    pub close: bool,
}

impl Session {
    pub fn new(cfg: FusionConfig, seed: u64) -> Self {
        Self {
            engine: FusionEngine::new(cfg, SimRng::new(seed)),
            greeted: false,
            last_seq: None,
            closed: false,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    fn fail(&mut self, code: u16, message: impl Into<String>) -> Reply {
        self.closed = true;
        Reply {
            messages: vec![WireMessage::Err {
                code,
                message: message.into(),
            }],
            close: true,
        }
    }

    fn fused(resolutions: Vec<Resolution>) -> impl Iterator<Item = WireMessage> {
        resolutions.into_iter().filter_map(|r| {
            let cmd = match r {
                Ok(cmd) => cmd,
                Err(e) => *e.emitted()?,
            };
            Some(WireMessage::Fused {
                t_ms: cmd.t_ms,
                action: cmd.action,
                source: cmd.source,
            })
        })
    }

    pub fn handle_line(&mut self, line: &str) -> Reply {
        if self.closed {
            return Reply {
                messages: Vec::new(),
                close: true,
            };
        }
        let msg = match decode(line) {
            Ok(m) => m,
            Err(e) => return self.fail(ERR_BAD_REQUEST, e.to_string()),
        };
        self.handle(msg)
    }

    pub fn handle(&mut self, msg: WireMessage) -> Reply {
        if self.closed {
            return Reply {
                messages: Vec::new(),
                close: true,
            };
        }
        if !self.greeted {
            return match msg {
                WireMessage::Hello { version } if version == PROTOCOL_VERSION => {
                    self.greeted = true;
                    Reply {
                        messages: vec![WireMessage::Hello { version }],
                        close: false,
                    }
                }
                WireMessage::Hello { version } => {
                    self.fail(ERR_VERSION, format!("unsupported version {version}"))
                }
                _ => self.fail(ERR_BAD_REQUEST, "expected HELLO"),
            };
        }
        match msg {
            WireMessage::Evt { seq, t_ms, payload } => {
                if let Some(last) = self.last_seq {
                    if seq <= last {
                        return self
                            .fail(ERR_ORDERING, format!("seq {seq} does not follow {last}"));
                    }
                }
                let event = match payload {
                    EventPayload::Gesture(Some(g)) => {
                        ModalityEvent::gesture(seq, t_ms, GestureReading::Captured(g))
                    }
                    EventPayload::Gesture(None) => {
                        ModalityEvent::gesture(seq, t_ms, GestureReading::Missed)
                    }
                    EventPayload::Speech(text) => match RawUtterance::observed(text) {
                        Ok(u) => ModalityEvent::speech(seq, t_ms, u),
                        Err(e) => return self.fail(ERR_BAD_REQUEST, e.to_string()),
                    },
                };
                match self.engine.feed(Input::Event(event)) {
                    Ok(resolutions) => {
                        self.last_seq = Some(seq);
                        let mut messages = vec![WireMessage::Ack { seq }];
                        messages.extend(Self::fused(resolutions));
                        Reply {
                            messages,
                            close: false,
                        }
                    }
                    Err(
                        e @ (EngineError::TimeRegression { .. }
                        | EngineError::SequenceRegression { .. }),
                    ) => self.fail(ERR_ORDERING, e.to_string()),
                }
            }
            WireMessage::Bye => {
                let mut messages: Vec<WireMessage> = match self.engine.feed(Input::Tick(u64::MAX)) {
                    Ok(r) => Self::fused(r).collect(),
                    Err(_) => Vec::new(),
                };
                messages.push(WireMessage::Bye);
                self.closed = true;
                Reply {
                    messages,
                    close: true,
                }
            }
            WireMessage::Hello { .. } => self.fail(ERR_BAD_REQUEST, "duplicate HELLO"),
            _ => self.fail(
                ERR_BAD_REQUEST,
                "only EVT and BYE are accepted from clients",
            ),
        }
    }
}

/// Lines exchanged on one connection, prefixed `C: ` (inbound) or `S: `.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub lines: Vec<String>,
}

impl Transcript {
    /// Outbound FUSED lines only.
    pub fn fused_lines(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter_map(|l| l.strip_prefix("S: "))
            .filter(|l| l.starts_with("FUSED "))
            .collect()
    }

    pub fn count_sent(&self, verb: &str) -> usize {
        self.lines
            .iter()
            .filter_map(|l| l.strip_prefix("S: "))
            .filter(|l| l.split(' ').next() == Some(verb))
            .count()
    }

    pub fn count_received(&self, verb: &str) -> usize {
        self.lines
            .iter()
            .filter_map(|l| l.strip_prefix("C: "))
            .filter(|l| l.split(' ').next() == Some(verb))
            .count()
    }
}

/// Drives a session over any line stream until close or end of input.
pub fn serve<R: BufRead, W: Write>(
    mut reader: R,
    mut writer: W,
    session: &mut Session,
) -> io::Result<Transcript> {
    let mut transcript = Transcript::default();
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        transcript
            .lines
            .push(format!("C: {}", line.trim_end_matches('\n')));
        let reply = session.handle_line(&line);
        for m in &reply.messages {
            let text =
                encode(m).unwrap_or_else(|_| format!("{m}\n").replace(['\n', '\r'], " ") + "\n");
            writer.write_all(text.as_bytes())?;
            transcript
                .lines
                .push(format!("S: {}", text.trim_end_matches('\n')));
        }
        writer.flush()?;
        if reply.close {
            break;
        }
    }
    Ok(transcript)
}

/// TCP front end. Connection `i` (0-based, in accept order) gets session
/// seed `base_seed XOR i`.
pub struct Server {
    listener: TcpListener,
    cfg: FusionConfig,
    base_seed: u64,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, cfg: FusionConfig, base_seed: u64) -> io::Result<Self> {
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            cfg,
            base_seed,
        })
    }

    pub fn local_addr(&self) -> io::Result<std::net::SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts `limit` connections (or forever when `None`), each on its own
    /// thread, and returns their transcripts in accept order.
    pub fn run(&self, limit: Option<usize>) -> io::Result<Vec<Transcript>> {
        let mut handles = Vec::new();
        for (index, stream) in self.listener.incoming().enumerate() {
            let stream = stream?;
            let cfg = self.cfg.clone();
            let seed = SimRng::derive_seed(self.base_seed, index as u64);
            handles.push(thread::spawn(move || handle_connection(stream, cfg, seed)));
            if limit.is_some_and(|n| handles.len() >= n) {
                break;
            }
        }
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(io::Error::other("session thread panicked")))
            })
            .collect()
    }
}

fn handle_connection(stream: TcpStream, cfg: FusionConfig, seed: u64) -> io::Result<Transcript> {
    let reader = BufReader::new(stream.try_clone()?);
    let mut session = Session::new(cfg, seed);
    let transcript = serve(reader, &stream, &mut session)?;
    let _ = stream.shutdown(std::net::Shutdown::Both);
    Ok(transcript)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(lines: &str) -> Transcript {
        let mut session = Session::new(FusionConfig::default(), 1);
        let mut out = Vec::new();
        serve(lines.as_bytes(), &mut out, &mut session).unwrap()
    }

    #[test]
    fn correct_gesture_is_fused() {
        let t = run("HELLO mmfuse/1\nEVT GESTURE 1 900 FIST\nBYE\n");
        assert_eq!(
            t.lines,
            vec![
                "C: HELLO mmfuse/1",
                "S: HELLO mmfuse/1",
                "C: EVT GESTURE 1 900 FIST",
                "S: ACK 1",
                "S: FUSED 900 PIN3 GESTURE",
                "C: BYE",
                "S: BYE",
            ]
        );
    }

    #[test]
    fn missing_hello_closes() {
        let t = run("EVT GESTURE 1 900 FIST\nBYE\n");
        assert_eq!(
            t.lines,
            vec!["C: EVT GESTURE 1 900 FIST", "S: ERR 400 \"expected HELLO\""]
        );
    }

    #[test]
    fn wrong_version_rejected() {
        let t = run("HELLO mmfuse/9\n");
        assert!(t.lines[1].starts_with("S: ERR 426"));
    }

    #[test]
    fn missed_gesture_recovered_by_speech() {
        let t = run("HELLO mmfuse/1\nEVT GESTURE 1 0 NONE\nEVT SPEECH 2 500 \"move down\"\nBYE\n");
        assert_eq!(t.fused_lines(), vec!["FUSED 500 PIN3 SPEECH"]);
    }

    #[test]
    fn pending_speech_flushed_on_bye() {
        let t = run("HELLO mmfuse/1\nEVT SPEECH 1 100 \"move up\"\nBYE\n");
        assert_eq!(t.fused_lines(), vec!["FUSED 2100 PIN9 SPEECH"]);
        assert_eq!(t.lines.last().unwrap(), "S: BYE");
    }

    #[test]
    fn seq_must_increase() {
        let t = run(
            "HELLO mmfuse/1\nEVT GESTURE 5 0 FIST\nEVT GESTURE 5 10 FIST\nEVT GESTURE 6 20 FIST\n",
        );
        assert!(t.lines.last().unwrap().starts_with("S: ERR 409"));
        assert_eq!(t.count_received("EVT"), 2);
    }

    #[test]
    fn malformed_line_closes() {
        let t = run("HELLO mmfuse/1\nEVT SPEECH x 900 \"hi\"\nBYE\n");
        assert!(t.lines.last().unwrap().starts_with("S: ERR 400"));
    }

    #[test]
    fn every_event_acked() {
        let t = run(
            "HELLO mmfuse/1\nEVT GESTURE 1 0 FIST\nEVT SPEECH 2 300 \"move down\"\nEVT GESTURE 3 5000 NONE\n\
             EVT SPEECH 4 5200 \"override\"\nEVT SPEECH 5 9000 \"banana\"\nBYE\n",
        );
        assert_eq!(t.count_received("EVT"), t.count_sent("ACK"));
        assert_eq!(t.fused_lines(), vec!["FUSED 0 PIN3 GESTURE"]);
    }
}
