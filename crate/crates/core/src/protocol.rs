//! Line-oriented wire format between the speech client and the fusion server.
//!
//! Every message is one UTF-8 line of single-space-separated fields ending in
//! `\n`:
//!
//! ```text
//! HELLO <version>
//! EVT GESTURE <seq> <t_ms> <FIST|WAVE_IN|WAVE_OUT|FINGER_SPREAD|DOUBLE_TAP|NONE>
//! EVT SPEECH <seq> <t_ms> "<utterance>"
//! ACK <seq>
//! FUSED <t_ms> PIN<n> <GESTURE|SPEECH>
//! ERR <code> "<message>"
//! BYE
//! ```
//!
//! Integers are unsigned decimal without sign or leading zeros. Quoted text
//! escapes `"` and `\` with a backslash and may not contain a newline.
//! Decoding is strict: the only accepted encoding of a message is the one
//! [`encode`] produces (the trailing `\n` may be omitted).

use std::fmt;

use thiserror::Error;

use crate::fusion::Source;
use crate::model::{ArmAction, Gesture};

pub const PROTOCOL_VERSION: &str = "mmfuse/1";
pub const DEFAULT_PORT: u16 = 7207;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("cannot encode a newline inside a message field")]
    EmbeddedNewline,
    #[error("malformed message at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("unknown verb {0:?}")]
    UnknownVerb(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventPayload {
    /// `None` is a missed capture.
    Gesture(Option<Gesture>),
    Speech(String),
}

impl EventPayload {
    pub fn source(&self) -> Source {
        match self {
            EventPayload::Gesture(_) => Source::Gesture,
            EventPayload::Speech(_) => Source::Speech,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WireMessage {
    Hello {
        version: String,
    },
    Evt {
        seq: u64,
        t_ms: u64,
        payload: EventPayload,
    },
    Ack {
        seq: u64,
    },
    Fused {
        t_ms: u64,
        action: ArmAction,
        source: Source,
    },
    Err {
        code: u16,
        message: String,
    },
    Bye,
}

impl fmt::Display for WireMessage {
    /// The encoded line without its terminator. Newlines in text fields are
    /// written as-is; use [`encode`] to reject them.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WireMessage::Hello { version } => write!(f, "HELLO {version}"),
            WireMessage::Evt { seq, t_ms, payload } => {
                write!(f, "EVT {} {seq} {t_ms} ", payload.source().token())?;
                match payload {
                    EventPayload::Gesture(Some(g)) => f.write_str(g.token()),
                    EventPayload::Gesture(None) => f.write_str("NONE"),
                    EventPayload::Speech(text) => write_quoted(f, text),
                }
            }
            WireMessage::Ack { seq } => write!(f, "ACK {seq}"),
            WireMessage::Fused {
                t_ms,
                action,
                source,
            } => {
                write!(f, "FUSED {t_ms} {} {}", action.name(), source.token())
            }
            WireMessage::Err { code, message } => {
                write!(f, "ERR {code} ")?;
                write_quoted(f, message)
            }
            WireMessage::Bye => f.write_str("BYE"),
        }
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, text: &str) -> fmt::Result {
    f.write_str("\"")?;
    for ch in text.chars() {
        match ch {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_graphic() && b != b'"')
}

pub fn encode(m: &WireMessage) -> Result<String, ProtocolError> {
    let text_ok = match m {
        WireMessage::Hello { version } => {
            if !is_token(version) {
                return Err(ProtocolError::Parse {
                    offset: 6,
                    reason: "version must be a non-empty token".into(),
                });
            }
            true
        }
        WireMessage::Evt {
            payload: EventPayload::Speech(t),
            ..
        } => !t.contains(['\n', '\r']),
        WireMessage::Err { message, .. } => !message.contains(['\n', '\r']),
        _ => true,
    };
    if !text_ok {
        return Err(ProtocolError::EmbeddedNewline);
    }
    Ok(format!("{m}\n"))
}

struct Cursor<'a> {
    line: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, reason: impl Into<String>) -> Result<T, ProtocolError> {
        Err(ProtocolError::Parse {
            offset: self.pos,
            reason: reason.into(),
        })
    }

    fn at_end(&self) -> bool {
        self.pos == self.line.len()
    }

    /// Next run of non-space bytes.
    fn word(&mut self) -> Result<&'a str, ProtocolError> {
        let rest = &self.line[self.pos..];
        let len = rest.find(' ').unwrap_or(rest.len());
        if len == 0 {
            return self.err("expected a field");
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn space(&mut self) -> Result<(), ProtocolError> {
        if self.line[self.pos..].starts_with(' ') {
            self.pos += 1;
            Ok(())
        } else {
            self.err("expected a single space")
        }
    }

    fn end(&self) -> Result<(), ProtocolError> {
        if self.at_end() {
            Ok(())
        } else {
            self.err("unexpected trailing data")
        }
    }

    fn number<T: std::str::FromStr>(&mut self) -> Result<T, ProtocolError> {
        let start = self.pos;
        let w = self.word()?;
        let canonical = w.bytes().all(|b| b.is_ascii_digit()) && (w == "0" || !w.starts_with('0'));
        match w.parse::<T>() {
            Ok(v) if canonical => Ok(v),
            _ => Err(ProtocolError::Parse {
                offset: start,
                reason: format!("{w:?} is not a canonical unsigned integer"),
            }),
        }
    }

    fn quoted(&mut self) -> Result<String, ProtocolError> {
        if !self.line[self.pos..].starts_with('"') {
            return self.err("expected '\"'");
        }
        self.pos += 1;
        let mut out = String::new();
        let mut chars = self.line[self.pos..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, e @ ('"' | '\\'))) => out.push(e),
                    _ => {
                        self.pos += i;
                        return self.err("invalid escape");
                    }
                },
                '\n' | '\r' => {
                    self.pos += i;
                    return self.err("newline inside quoted text");
                }
                c => out.push(c),
            }
        }
        self.pos = self.line.len();
        self.err("unterminated quoted text")
    }
}

pub fn decode(line: &str) -> Result<WireMessage, ProtocolError> {
    let body = line.strip_suffix('\n').unwrap_or(line);
    let mut c = Cursor { line: body, pos: 0 };
    let verb = c.word()?;
    let msg = match verb {
        "HELLO" => {
            c.space()?;
            let version = c.word()?;
            if !is_token(version) {
                return Err(ProtocolError::Parse {
                    offset: 6,
                    reason: "version must be a token".into(),
                });
            }
            WireMessage::Hello {
                version: version.to_string(),
            }
        }
        "EVT" => {
            c.space()?;
            let source_at = c.pos;
            let source = c.word()?;
            c.space()?;
            let seq = c.number()?;
            c.space()?;
            let t_ms = c.number()?;
            c.space()?;
            let payload = match source {
                "GESTURE" => {
                    let at = c.pos;
                    let tok = c.word()?;
                    if tok == "NONE" {
                        EventPayload::Gesture(None)
                    } else {
                        EventPayload::Gesture(Some(Gesture::from_token(tok).ok_or_else(|| {
                            ProtocolError::Parse {
                                offset: at,
                                reason: format!("unknown gesture {tok:?}"),
                            }
                        })?))
                    }
                }
                "SPEECH" => EventPayload::Speech(c.quoted()?),
                other => {
                    return Err(ProtocolError::Parse {
                        offset: source_at,
                        reason: format!("unknown source {other:?}"),
                    })
                }
            };
            WireMessage::Evt { seq, t_ms, payload }
        }
        "ACK" => {
            c.space()?;
            WireMessage::Ack { seq: c.number()? }
        }
        "FUSED" => {
            c.space()?;
            let t_ms = c.number()?;
            c.space()?;
            let at = c.pos;
            let action_tok = c.word()?;
            let action = action_tok
                .strip_prefix("PIN")
                .filter(|n| n == &"0" || !n.starts_with('0'))
                .and_then(|n| n.parse::<u8>().ok())
                .and_then(|pin| ArmAction::for_pin(pin).ok())
                .ok_or_else(|| ProtocolError::Parse {
                    offset: at,
                    reason: format!("unknown action {action_tok:?}"),
                })?;
            c.space()?;
            let at = c.pos;
            let source = match c.word()? {
                "GESTURE" => Source::Gesture,
                "SPEECH" => Source::Speech,
                other => {
                    return Err(ProtocolError::Parse {
                        offset: at,
                        reason: format!("unknown source {other:?}"),
                    })
                }
            };
            WireMessage::Fused {
                t_ms,
                action,
                source,
            }
        }
        "ERR" => {
            c.space()?;
            let code = c.number()?;
            c.space()?;
            WireMessage::Err {
                code,
                message: c.quoted()?,
            }
        }
        "BYE" => WireMessage::Bye,
        other => return Err(ProtocolError::UnknownVerb(other.to_string())),
    };
    c.end()?;
    Ok(msg)
}
