//! Transcript-level disfluency rates.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::transcript::{PauseClass, Speaker, Transcript};
use crate::error::{Error, Result};

pub const DISFLUENCY_DIM: usize = 11;

pub const FILLERS: [&str; 4] = ["uh", "um", "er", "ah"];

pub const DISFLUENCY_NAMES: [&str; DISFLUENCY_DIM] = [
    "word_rate",
    "unique_word_rate",
    "intervention_rate",
    "filler_rate",
    "short_pause_rate",
    "medium_pause_rate",
    "long_pause_rate",
    "pause_rate",
    "incomplete_word_rate",
    "repetition_rate",
    "mean_utterance_length",
];

/// Eleven non-negative features. All but the last are counts per minute of
/// audio; the last is the mean subject-utterance length in words.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisfluencyVector(pub [f64; DISFLUENCY_DIM]);

impl DisfluencyVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        DISFLUENCY_NAMES.iter().copied().zip(self.0.iter().copied())
    }
}

fn normalize_token(tok: &str) -> String {
    tok.trim_matches(|c: char| matches!(c, '.' | ',' | '?' | '!' | ';' | ':' | '"' | '\'' | '(' | ')'))
        .to_lowercase()
}

pub fn extract_disfluency(t: &Transcript) -> DisfluencyVector {
    let minutes = t.minutes();
    let mut words = 0usize;
    let mut unique = HashSet::new();
    let mut interventions = 0usize;
    let mut fillers = 0usize;
    let mut pauses = [0usize; 3];
    let mut incomplete = 0usize;
    let mut repetitions = 0usize;
    let mut subject_utterances = 0usize;

    for u in &t.utterances {
        if u.speaker == Speaker::Interviewer {
            interventions += 1;
            continue;
        }
        subject_utterances += 1;
        for p in &u.pauses {
            pauses[match p {
                PauseClass::Short => 0,
                PauseClass::Medium => 1,
                PauseClass::Long => 2,
            }] += 1;
        }
        let tokens: Vec<String> = u
            .tokens
            .iter()
            .map(|t| normalize_token(t))
            .filter(|t| !t.is_empty())
            .collect();
        words += tokens.len();
        for tok in &tokens {
            if FILLERS.contains(&tok.as_str()) {
                fillers += 1;
            }
            if tok.len() > 1 && tok.ends_with('-') {
                incomplete += 1;
            }
            unique.insert(tok.clone());
        }
        repetitions += tokens.windows(2).filter(|w| w[0] == w[1]).count();
    }

    let rate = |count: usize| count as f64 / minutes;
    let mean_len = if subject_utterances == 0 {
        0.0
    } else {
        words as f64 / subject_utterances as f64
    };
    DisfluencyVector([
        rate(words),
        rate(unique.len()),
        rate(interventions),
        rate(fillers),
        rate(pauses[0]),
        rate(pauses[1]),
        rate(pauses[2]),
        rate(pauses.iter().sum()),
        rate(incomplete),
        rate(repetitions),
        mean_len,
    ])
}

/// Per-column min-max scaling to `[0, 1]` using extrema of the rows it was
/// fitted on. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::Data("cannot fit scaler on zero rows".into()))?;
        let d = first.len();
        let mut min = first.clone();
        let mut max = first.clone();
        for row in rows {
            if row.len() != d {
                return Err(Error::mismatch(format!("rows of length {d}"), format!("row of length {}", row.len())));
            }
            for j in 0..d {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        Ok(Self { min, max })
    }

    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.min.len() {
            return Err(Error::mismatch(
                format!("row of length {}", self.min.len()),
                format!("row of length {}", row.len()),
            ));
        }
        Ok(row
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
            .collect())
    }
}
