use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::transcript::{Speaker, Transcript};
use crate::error::{Error, Result};

pub const SEQUENCE_LEN: usize = 32;
/// Width of the one-hot encoding: subject, interviewer, pad.
pub const TOKEN_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InterventionToken {
    Subject,
    Interviewer,
    Pad,
}

impl InterventionToken {
    fn as_char(self) -> char {
        match self {
            InterventionToken::Subject => 'S',
            InterventionToken::Interviewer => 'I',
            InterventionToken::Pad => 'P',
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c {
            'S' => Some(InterventionToken::Subject),
            'I' => Some(InterventionToken::Interviewer),
            'P' => Some(InterventionToken::Pad),
            _ => None,
        }
    }

    pub fn one_hot(self) -> [f64; TOKEN_DIM] {
        match self {
            InterventionToken::Subject => [1.0, 0.0, 0.0],
            InterventionToken::Interviewer => [0.0, 1.0, 0.0],
            InterventionToken::Pad => [0.0, 0.0, 1.0],
        }
    }
}

impl From<Speaker> for InterventionToken {
    fn from(s: Speaker) -> Self {
        match s {
            Speaker::Subject => InterventionToken::Subject,
            Speaker::Interviewer => InterventionToken::Interviewer,
        }
    }
}

/// Speaker sequence fixed at 32 steps; padding only ever forms a suffix.
///
/// Serialised as a 32-character string over `S`, `I`, `P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InterventionSequence([InterventionToken; SEQUENCE_LEN]);

impl InterventionSequence {
    /// Keeps the first 32 speakers and pads shorter sequences.
    pub fn from_speakers<I: IntoIterator<Item = Speaker>>(speakers: I) -> Self {
        let mut steps = [InterventionToken::Pad; SEQUENCE_LEN];
        for (slot, s) in steps.iter_mut().zip(speakers) {
            *slot = s.into();
        }
        Self(steps)
    }

    pub fn from_tokens(tokens: &[InterventionToken]) -> Result<Self> {
        if tokens.len() != SEQUENCE_LEN {
            return Err(Error::mismatch(
                format!("{SEQUENCE_LEN} tokens"),
                format!("{} tokens", tokens.len()),
            ));
        }
        let first_pad = tokens.iter().position(|&t| t == InterventionToken::Pad).unwrap_or(SEQUENCE_LEN);
        if tokens[first_pad..].iter().any(|&t| t != InterventionToken::Pad) {
            return Err(Error::Data("pad tokens must form a contiguous suffix".into()));
        }
        let mut steps = [InterventionToken::Pad; SEQUENCE_LEN];
        steps.copy_from_slice(tokens);
        Ok(Self(steps))
    }

    pub fn tokens(&self) -> &[InterventionToken; SEQUENCE_LEN] {
        &self.0
    }

    pub fn unpadded_len(&self) -> usize {
        self.0.iter().take_while(|&&t| t != InterventionToken::Pad).count()
    }

    pub fn one_hot(&self) -> Vec<Vec<f64>> {
        self.0.iter().map(|t| t.one_hot().to_vec()).collect()
    }
}

impl fmt::Display for InterventionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|t| write!(f, "{}", t.as_char()))
    }
}

impl std::str::FromStr for InterventionSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = s
            .chars()
            .map(|c| InterventionToken::from_char(c).ok_or_else(|| Error::Data(format!("invalid intervention token `{c}`"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_tokens(&tokens)
    }
}

impl Serialize for InterventionSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InterventionSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn extract_interventions(t: &Transcript) -> InterventionSequence {
    InterventionSequence::from_speakers(t.utterances.iter().map(|u| u.speaker))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::transcript::Utterance;
    use proptest::prelude::*;

    fn transcript(n: usize) -> Transcript {
        let utterances = (0..n)
            .map(|i| Utterance {
                speaker: if i % 2 == 0 { Speaker::Subject } else { Speaker::Interviewer },
                tokens: vec!["x".into()],
                pauses: vec![],
            })
            .collect();
        Transcript::new("t", 60.0, utterances).unwrap()
    }

    #[test]
    fn pads_short_sequences() {
        let s = extract_interventions(&transcript(6));
        assert_eq!(s.unpadded_len(), 6);
        assert_eq!(s.to_string(), format!("SISISI{}", "P".repeat(26)));
    }

    #[test]
    fn truncates_long_sequences_keeping_the_start() {
        let s = extract_interventions(&transcript(40));
        assert_eq!(s.unpadded_len(), 32);
        assert_eq!(s.to_string(), "SI".repeat(16));
    }

    #[test]
    fn exact_length_unchanged() {
        let s = extract_interventions(&transcript(32));
        assert_eq!(s.to_string(), "SI".repeat(16));
    }

    #[test]
    fn rejects_interior_pad() {
        let bad = format!("SP{}", "S".repeat(30));
        assert!(bad.parse::<InterventionSequence>().is_err());
        assert!("SSS".parse::<InterventionSequence>().is_err());
    }

    #[test]
    fn one_hot_shape() {
        let oh = extract_interventions(&transcript(3)).one_hot();
        assert_eq!(oh.len(), SEQUENCE_LEN);
        assert_eq!(oh[0], vec![1.0, 0.0, 0.0]);
        assert_eq!(oh[1], vec![0.0, 1.0, 0.0]);
        assert_eq!(oh[31], vec![0.0, 0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn always_32_with_pad_suffix(speakers in proptest::collection::vec(any::<bool>(), 1..80)) {
            let seq = InterventionSequence::from_speakers(
                speakers.iter().map(|&s| if s { Speaker::Subject } else { Speaker::Interviewer }),
            );
            let tokens = seq.tokens();
            let n = seq.unpadded_len();
            prop_assert_eq!(n, speakers.len().min(SEQUENCE_LEN));
            prop_assert!(tokens[n..].iter().all(|&t| t == InterventionToken::Pad));
            let back: InterventionSequence = seq.to_string().parse().unwrap();
            prop_assert_eq!(back, seq);
        }
    }
}
