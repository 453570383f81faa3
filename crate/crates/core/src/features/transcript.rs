//! Simplified transcript format.
//!
//! ```text
//! # free-form comment
//! #duration: 60
//! SUBJ: the boy <pause:short> is falling
//! INT: what else do you see
//! ```
//!
//! `#duration: <seconds>` is mandatory and must appear once. Lines starting
//! with `SUBJ:` or `INT:` are utterances; the remaining text is split on
//! whitespace into tokens, and `<pause:short|medium|long>` marks are collected
//! as pauses of that utterance instead of tokens. Blank lines are ignored and
//! any other line is an error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Subject,
    Interviewer,
}

/// Pause length class as marked by the annotator: short below 0.5 s,
/// medium 0.5-2 s, long above 2 s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauseClass {
    Short,
    Medium,
    Long,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub tokens: Vec<String>,
    pub pauses: Vec<PauseClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub subject_id: String,
    /// Audio length in seconds.
    pub audio_duration: f64,
    pub utterances: Vec<Utterance>,
}

impl Transcript {
    pub fn new(subject_id: impl Into<String>, audio_duration: f64, utterances: Vec<Utterance>) -> Result<Self> {
        if !(audio_duration > 0.0) || !audio_duration.is_finite() {
            return Err(Error::Data(format!("audio duration must be positive, got {audio_duration}")));
        }
        if utterances.is_empty() {
            return Err(Error::Data("no utterances".into()));
        }
        Ok(Self {
            subject_id: subject_id.into(),
            audio_duration,
            utterances,
        })
    }

    pub fn minutes(&self) -> f64 {
        self.audio_duration / 60.0
    }

    pub fn with_subject_id(mut self, id: impl Into<String>) -> Self {
        self.subject_id = id.into();
        self
    }
}

fn parse_pause(token: &str) -> Option<std::result::Result<PauseClass, String>> {
    let inner = token.strip_prefix("<pause:")?.strip_suffix('>')?;
    Some(match inner {
        "short" => Ok(PauseClass::Short),
        "medium" => Ok(PauseClass::Medium),
        "long" => Ok(PauseClass::Long),
        other => Err(format!("unknown pause class `{other}`")),
    })
}

/// Parses the simplified transcript format. The subject id is left empty;
/// loaders fill it from the file name.
pub fn parse_transcript(text: &str) -> Result<Transcript> {
    let mut duration: Option<f64> = None;
    let mut utterances = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(value) = comment.trim_start().strip_prefix("duration:") {
                if duration.is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "duplicate duration header".into(),
                    });
                }
                let secs: f64 = value.trim().parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid duration `{}`", value.trim()),
                })?;
                if !(secs > 0.0) || !secs.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("duration must be positive, got {secs}"),
                    });
                }
                duration = Some(secs);
            }
            continue;
        }

        let (speaker, rest) = if let Some(rest) = line.strip_prefix("SUBJ:") {
            (Speaker::Subject, rest)
        } else if let Some(rest) = line.strip_prefix("INT:") {
            (Speaker::Interviewer, rest)
        } else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `SUBJ:`, `INT:` or `#`, found `{line}`"),
            });
        };

        let mut tokens = Vec::new();
        let mut pauses = Vec::new();
        for tok in rest.split_whitespace() {
            match parse_pause(tok) {
                Some(Ok(p)) => pauses.push(p),
                Some(Err(message)) => return Err(Error::Parse { line: line_no, message }),
                None if tok.starts_with("<pause") => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("malformed pause mark `{tok}`"),
                    })
                }
                None => tokens.push(tok.to_string()),
            }
        }
        utterances.push(Utterance {
            speaker,
            tokens,
            pauses,
        });
    }

    let duration = duration.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing `#duration:` header".into(),
    })?;
    if utterances.is_empty() {
        return Err(Error::Data("no utterances".into()));
    }
    Transcript::new(String::new(), duration, utterances)
}
