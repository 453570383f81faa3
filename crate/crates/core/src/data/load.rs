//! Loaders for the on-disk corpus layout:
//!
//! ```text
//! <data-dir>/
//!   transcripts/<subject_id>.txt   simplified transcript format
//!   acoustic.csv                   subject_id,f1,...,fD (header required)
//!   labels.csv                     subject_id,mmse (header required)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::split::{split, SplitSpec};
use crate::error::{Error, Result};
use crate::features::{
    extract_disfluency, extract_interventions, parse_transcript, pca_fit, MinMaxScaler, PcaModel, Transcript,
};

pub const MMSE_MAX: f64 = 30.0;

/// Row-aligned feature matrix read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub dim: usize,
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e)
}

pub fn load_feature_csv(path: impl AsRef<Path>) -> Result<FeatureTable> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.len() < 2 {
        return Err(Error::format(path, "feature CSV needs a subject_id column and at least one feature"));
    }
    let dim = headers.len() - 1;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = i + 2;
        let id = record.get(0).unwrap_or_default().to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::format(path, format!("duplicate subject_id `{id}` on line {line}")));
        }
        let row = record
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::format(path, format!("line {line}: invalid number `{v}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        ids.push(id);
        rows.push(row);
    }
    Ok(FeatureTable { ids, rows, dim })
}

pub fn load_labels_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, f64>> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["subject_id", "mmse"] {
        return Err(Error::format(path, "label CSV header must be `subject_id,mmse`"));
    }
    let mut labels = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = i + 2;
        let id = record.get(0).unwrap_or_default().to_string();
        let raw = record.get(1).unwrap_or_default();
        let value: f64 = raw
            .parse()
            .map_err(|_| Error::format(path, format!("line {line}: invalid label `{raw}`")))?;
        if !(0.0..=MMSE_MAX).contains(&value) {
            return Err(Error::format(path, format!("line {line}: label {value} for `{id}` outside [0, 30]")));
        }
        if labels.insert(id.clone(), value).is_some() {
            return Err(Error::format(path, format!("duplicate subject_id `{id}` on line {line}")));
        }
    }
    Ok(labels)
}

/// Reads every `*.txt` file in `dir`, in file-name order; the subject id is
/// the file stem.
pub fn load_transcript_dir(dir: impl AsRef<Path>) -> Result<Vec<Transcript>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    paths.retain(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"));
    paths.sort();
    let mut seen = BTreeSet::new();
    paths
        .into_iter()
        .map(|p| {
            let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            if !seen.insert(id.clone()) {
                return Err(Error::format(&p, format!("duplicate subject_id `{id}`")));
            }
            let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let t = parse_transcript(&text).map_err(|e| Error::format(&p, e))?;
            Ok(t.with_subject_id(id))
        })
        .collect()
}

/// Scaler and PCA fitted on the non-test subjects during extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipeline {
    pub disfluency_scaler: MinMaxScaler,
    pub acoustic_pca: PcaModel,
    /// Width of the raw acoustic vectors.
    pub acoustic_dim: usize,
}

/// Aligns ids across the three sources; every mismatch is reported at once.
fn align_ids(transcripts: &[Transcript], acoustic: &FeatureTable, labels: &BTreeMap<String, f64>) -> Result<Vec<String>> {
    let t_ids: BTreeSet<&str> = transcripts.iter().map(|t| t.subject_id.as_str()).collect();
    let a_ids: BTreeSet<&str> = acoustic.ids.iter().map(String::as_str).collect();
    let l_ids: BTreeSet<&str> = labels.keys().map(String::as_str).collect();
    let mut problems = Vec::new();
    for id in t_ids.difference(&l_ids) {
        problems.push(format!("`{id}` has a transcript but no label"));
    }
    for id in a_ids.difference(&l_ids) {
        problems.push(format!("`{id}` has acoustic features but no label"));
    }
    for id in l_ids.difference(&t_ids) {
        problems.push(format!("`{id}` has a label but no transcript"));
    }
    for id in l_ids.difference(&a_ids) {
        problems.push(format!("`{id}` has a label but no acoustic features"));
    }
    if !problems.is_empty() {
        return Err(Error::Data(format!("unmatched subject ids: {}", problems.join("; "))));
    }
    Ok(l_ids.into_iter().map(str::to_string).collect())
}

/// Builds a dataset from the corpus layout. The disfluency scaler and the
/// acoustic PCA are fitted on the non-test part of `spec`'s split only.
pub fn extract_dataset(data_dir: impl AsRef<Path>, spec: &SplitSpec) -> Result<(Dataset, FeaturePipeline)> {
    let dir = data_dir.as_ref();
    let transcripts = load_transcript_dir(dir.join("transcripts"))?;
    let acoustic = load_feature_csv(dir.join("acoustic.csv"))?;
    let labels = load_labels_csv(dir.join("labels.csv"))?;
    let ids = align_ids(&transcripts, &acoustic, &labels)?;

    let by_id_t: BTreeMap<&str, &Transcript> = transcripts.iter().map(|t| (t.subject_id.as_str(), t)).collect();
    let by_id_a: BTreeMap<&str, &Vec<f64>> = acoustic.ids.iter().map(String::as_str).zip(&acoustic.rows).collect();

    let raw_disfluency: Vec<Vec<f64>> = ids
        .iter()
        .map(|id| extract_disfluency(by_id_t[id.as_str()]).0.to_vec())
        .collect();
    let raw_acoustic: Vec<Vec<f64>> = ids.iter().map(|id| by_id_a[id.as_str()].clone()).collect();
    let interventions = ids
        .iter()
        .map(|id| extract_interventions(by_id_t[id.as_str()]))
        .collect();
    let label_vec: Vec<f64> = ids.iter().map(|id| labels[id]).collect();

    let parts = split(ids.len(), spec)?;
    let fit_rows = parts.non_test();
    let scaler = MinMaxScaler::fit(&fit_rows.iter().map(|&i| raw_disfluency[i].clone()).collect::<Vec<_>>())?;
    let pca = pca_fit(&fit_rows.iter().map(|&i| raw_acoustic[i].clone()).collect::<Vec<_>>())?;

    let dataset = Dataset {
        disfluency: raw_disfluency
            .iter()
            .map(|r| scaler.transform(r))
            .collect::<Result<_>>()?,
        acoustic: raw_acoustic.iter().map(|r| pca.project(r)).collect::<Result<_>>()?,
        subject_ids: ids,
        interventions,
        labels: label_vec,
        truth: None,
        split: Some(*spec),
    };
    dataset.validate()?;
    Ok((
        dataset,
        FeaturePipeline {
            disfluency_scaler: scaler,
            acoustic_pca: pca,
            acoustic_dim: acoustic.dim,
        },
    ))
}
