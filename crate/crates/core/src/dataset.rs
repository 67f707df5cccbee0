//! Artifact persistence: dataset CSVs with JSON sidecars, trajectory
//! dumps, and model documents.
//!
//! Float formatting goes through the standard shortest-round-trip
//! formatter, so identical runs produce byte-identical files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Method;
use crate::contact::TrialTrace;
use crate::error::{Error, Result};
use crate::features::{LabeledSample, WindowSpec};
use crate::svr::SvrModel;

/// Sidecar describing a dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub method: Method,
    pub window: WindowSpec,
    pub seed: u64,
    pub config_hash: String,
    pub rows: usize,
    pub feature_dim: usize,
}

/// Write labeled samples as CSV: trial_id, material, f_n, step, label_s,
/// then one column per feature dimension.
pub fn write_dataset_csv(path: &Path, samples: &[LabeledSample]) -> Result<()> {
    let file = File::create(path)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let dim = samples.first().map(|s| s.feature.len()).unwrap_or(0);
    let mut header = vec![
        "trial_id".to_string(),
        "material".to_string(),
        "f_n".to_string(),
        "step".to_string(),
        "label_s".to_string(),
    ];
    header.extend((0..dim).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for s in samples {
        let mut rec = vec![
            s.trial_id.to_string(),
            s.material.clone(),
            s.f_n.to_string(),
            s.step.to_string(),
            s.label_s.to_string(),
        ];
        rec.extend(s.feature.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a dataset CSV written by [`write_dataset_csv`].
pub fn read_dataset_csv(path: &Path) -> Result<Vec<LabeledSample>> {
    let file = File::open(path).map_err(|_| {
        Error::MissingArtifact(path.display().to_string())
    })?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let headers = r.headers()?.clone();
    let dim = headers.len().saturating_sub(5);
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad csv number at column {i}: {e}")))
        };
        let mut feature = Vec::with_capacity(dim);
        for i in 0..dim {
            feature.push(parse(5 + i)?);
        }
        out.push(LabeledSample {
            trial_id: record[0]
                .parse()
                .map_err(|e| Error::Config(format!("bad trial_id: {e}")))?,
            material: record[1].to_string(),
            f_n: parse(2)?,
            step: record[3]
                .parse()
                .map_err(|e| Error::Config(format!("bad step: {e}")))?,
            label_s: parse(4)?,
            feature,
        });
    }
    Ok(out)
}

/// Append trial trajectories as CSV rows:
/// trial_id, material, t, f_n, f_t, stick_ratio_true, y.
pub fn write_trajectories_csv(path: &Path, trials: &[(u32, &TrialTrace)]) -> Result<()> {
    let file = File::create(path)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["trial_id", "material", "t", "f_n", "f_t", "stick_ratio_true", "y"])?;
    for (trial_id, trace) in trials {
        let mut rows = vec![trace.initial];
        rows.extend(trace.steps.iter().map(|s| s.state));
        for st in rows {
            w.write_record(&[
                trial_id.to_string(),
                trace.material.clone(),
                st.t.to_string(),
                st.f_n.to_string(),
                st.f_t.to_string(),
                st.stick_ratio_true.to_string(),
                st.y.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Self-describing trained-model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub method: Method,
    pub config_hash: String,
    pub model: SvrModel,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|_| {
        Error::MissingArtifact(path.display().to_string())
    })?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}
