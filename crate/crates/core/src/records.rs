//! Tabular records: per-image results and phantom ground truth as CSV.
//!
//! Floats are written in shortest round-trip form with '.' as the decimal
//! separator. Failed rows leave the numeric columns empty.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measurement::Measurement;
use crate::phantom::PhantomTruth;
use crate::pipeline::PipelineError;
use crate::stats::{PairedSeries, Series, StatsError};

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("row {row}: bad value '{value}' in column '{column}'")]
    BadValue { row: usize, column: String, value: String },
    #[error("duplicate filename '{0}'")]
    DuplicateKey(String),
    #[error("filename sets differ: only in predictions {only_pred:?}, only in truth {only_truth:?}")]
    KeyMismatch {
        only_pred: Vec<String>,
        only_truth: Vec<String>,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub const RESULT_COLUMNS: [&str; 10] = [
    "filename",
    "limb",
    "posterior_side",
    "aco_px",
    "pco_px",
    "fd_px",
    "acor",
    "pcor",
    "warnings",
    "status",
];

pub const TRUTH_COLUMNS: [&str; 7] = [
    "filename",
    "posterior_side",
    "aco_px",
    "pco_px",
    "fd_px",
    "acor",
    "pcor",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Failed(String),
}

impl Status {
    /// `ok`, or `failed:<stage>`.
    pub fn as_field(&self) -> String {
        match self {
            Status::Ok => "ok".into(),
            Status::Failed(stage) => format!("failed:{stage}"),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(Status::Ok),
            _ => s.strip_prefix("failed:").map(|st| Status::Failed(st.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub filename: String,
    pub measurement: Option<Measurement>,
    /// Measurement warnings, or the error message for a failed row.
    pub warnings: Vec<String>,
    pub status: Status,
    /// Set only for rows read back from CSV.
    pub ratios: Option<(f64, f64)>,
}

impl ResultRow {
    pub fn ok(filename: impl Into<String>, m: Measurement) -> Self {
        Self {
            filename: filename.into(),
            warnings: m.warnings.clone(),
            ratios: Some((m.acor, m.pcor)),
            measurement: Some(m),
            status: Status::Ok,
        }
    }

    pub fn failed(filename: impl Into<String>, e: &PipelineError) -> Self {
        Self {
            filename: filename.into(),
            measurement: None,
            warnings: vec![e.message.clone()],
            status: Status::Failed(e.stage.as_str().into()),
            ratios: None,
        }
    }
}

fn f(v: f64) -> String {
    format!("{v}")
}

pub fn write_results<W: Write>(w: W, rows: &[ResultRow]) -> Result<(), RecordError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RESULT_COLUMNS)?;
    for r in rows {
        let warn = r.warnings.join(";");
        let status = r.status.as_field();
        match &r.measurement {
            Some(m) => out.write_record([
                r.filename.as_str(),
                m.limb.as_str(),
                m.posterior_side.as_str(),
                &f(m.aco_px),
                &f(m.pco_px),
                &f(m.fd_px),
                &f(m.acor),
                &f(m.pcor),
                &warn,
                &status,
            ])?,
            None => out.write_record([r.filename.as_str(), "", "", "", "", "", "", "", &warn, &status])?,
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_truth<W: Write>(w: W, rows: &[(String, PhantomTruth)]) -> Result<(), RecordError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRUTH_COLUMNS)?;
    for (name, t) in rows {
        out.write_record([
            name.as_str(),
            t.posterior_side.as_str(),
            &f(t.aco_px),
            &f(t.pco_px),
            &f(t.fd_px),
            &f(t.acor),
            &f(t.pcor),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Rows keyed by the named columns, in file order.
struct Table {
    cols: Vec<usize>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read<R: Read>(r: R, required: &[&str]) -> Result<Self, RecordError> {
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(r);
        let headers = rd.headers()?.clone();
        let cols = required
            .iter()
            .map(|c| {
                headers
                    .iter()
                    .position(|h| h.trim() == *c)
                    .ok_or_else(|| RecordError::MissingColumn(c.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rows = rd.records().collect::<Result<Vec<_>, _>>()?;
        Ok(Self { cols, rows })
    }

    fn get<'a>(&self, row: &'a csv::StringRecord, k: usize) -> &'a str {
        row.get(self.cols[k]).unwrap_or("").trim()
    }
}

fn ratio(row: usize, column: &str, v: &str) -> Result<f64, RecordError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| RecordError::BadValue {
            row,
            column: column.into(),
            value: v.into(),
        })
}

/// Reads a results CSV. Only filename, acor, pcor and status are required.
pub fn read_results<R: Read>(r: R) -> Result<Vec<ResultRow>, RecordError> {
    let t = Table::read(r, &["filename", "acor", "pcor", "status"])?;
    let mut out = Vec::with_capacity(t.rows.len());
    for (i, rec) in t.rows.iter().enumerate() {
        let row = i + 1;
        let status_s = t.get(rec, 3);
        let status = Status::parse(status_s).ok_or_else(|| RecordError::BadValue {
            row,
            column: "status".into(),
            value: status_s.into(),
        })?;
        let ratios = match status {
            Status::Ok => Some((ratio(row, "acor", t.get(rec, 1))?, ratio(row, "pcor", t.get(rec, 2))?)),
            Status::Failed(_) => None,
        };
        out.push(ResultRow {
            filename: t.get(rec, 0).to_string(),
            measurement: None,
            warnings: Vec::new(),
            status,
            ratios,
        });
    }
    Ok(out)
}

/// `(filename, (acor, pcor))`.
pub type TruthRatios = (String, (f64, f64));

/// Reads `(filename, (acor, pcor))` from a truth CSV.
pub fn read_truth<R: Read>(r: R) -> Result<Vec<TruthRatios>, RecordError> {
    let t = Table::read(r, &["filename", "acor", "pcor"])?;
    t.rows
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            Ok((
                t.get(rec, 0).to_string(),
                (
                    ratio(i + 1, "acor", t.get(rec, 1))?,
                    ratio(i + 1, "pcor", t.get(rec, 2))?,
                ),
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRatios {
    pub acor: PairedSeries,
    pub pcor: PairedSeries,
    /// Predictions without a measurement; left out of both series.
    pub excluded: Vec<String>,
}

fn index<T: Clone>(rows: impl Iterator<Item = (String, T)>) -> Result<BTreeMap<String, T>, RecordError> {
    let mut m = BTreeMap::new();
    for (k, v) in rows {
        if m.insert(k.clone(), v).is_some() {
            return Err(RecordError::DuplicateKey(k));
        }
    }
    Ok(m)
}

/// Joins predictions and truth on filename, sorted by filename.
pub fn pair_ratios(pred: &[ResultRow], truth: &[(String, (f64, f64))]) -> Result<PairedRatios, RecordError> {
    let p = index(pred.iter().map(|r| (r.filename.clone(), r.ratios)))?;
    let t = index(truth.iter().cloned())?;
    let pk: BTreeSet<&String> = p.keys().collect();
    let tk: BTreeSet<&String> = t.keys().collect();
    if pk != tk {
        return Err(RecordError::KeyMismatch {
            only_pred: pk.difference(&tk).map(|s| s.to_string()).collect(),
            only_truth: tk.difference(&pk).map(|s| s.to_string()).collect(),
        });
    }
    let (mut ma, mut mp, mut ta, mut tp, mut excluded) = (vec![], vec![], vec![], vec![], vec![]);
    for (name, pr) in &p {
        match pr {
            Some((a, pc)) => {
                let (a_t, p_t) = t[name];
                ma.push(*a);
                mp.push(*pc);
                ta.push(a_t);
                tp.push(p_t);
            }
            None => excluded.push(name.clone()),
        }
    }
    Ok(PairedRatios {
        acor: PairedSeries::new(Series::new("model ACOR", ma)?, Series::new("truth ACOR", ta)?)?,
        pcor: PairedSeries::new(Series::new("model PCOR", mp)?, Series::new("truth PCOR", tp)?)?,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{Limb, PosteriorSide, LIMB_BASIS};
    use crate::pipeline::Stage;

    fn m(acor: f64, pcor: f64) -> Measurement {
        Measurement {
            aco_px: acor * 100.0,
            pco_px: pcor * 100.0,
            fd_px: 100.0,
            acor,
            pcor,
            posterior_side: PosteriorSide::ImageLeft,
            limb: Limb::Right,
            limb_basis: LIMB_BASIS.into(),
            warnings: vec!["a, b".into(), "c".into()],
        }
    }

    fn rows() -> Vec<ResultRow> {
        vec![
            ResultRow::ok("a.png", m(0.1, 0.9)),
            ResultRow::failed(
                "b.png",
                &PipelineError {
                    stage: Stage::Landmarks,
                    message: "no edge pixels on row 100".into(),
                },
            ),
            ResultRow::ok("c.png", m(1.0 / 3.0, 1.2)),
        ]
    }

    #[test]
    fn results_round_trip() {
        let mut buf = Vec::new();
        write_results(&mut buf, &rows()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("filename,limb,posterior_side,aco_px,pco_px,fd_px,acor,pcor,warnings,status\n"));
        assert!(text.contains("b.png,,,,,,,,no edge pixels on row 100,failed:landmarks\n"));
        assert!(text.contains("0.3333333333333333"));
        assert!(text.contains("\"a, b;c\""));
        let back = read_results(&buf[..]).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[0].ratios, Some((0.1, 0.9)));
        assert_eq!(back[1].status, Status::Failed("landmarks".into()));
        assert_eq!(back[2].ratios, Some((1.0 / 3.0, 1.2)));
    }

    #[test]
    fn missing_column_and_bad_values() {
        let e = read_results("filename,acor,status\nx,1,ok\n".as_bytes()).unwrap_err();
        assert!(matches!(e, RecordError::MissingColumn(c) if c == "pcor"));
        let e = read_truth("filename,acor,pcor\nx,nan,1\n".as_bytes()).unwrap_err();
        assert!(matches!(e, RecordError::BadValue { row: 1, .. }));
        let e = read_results("filename,acor,pcor,status\nx,1,1,maybe\n".as_bytes()).unwrap_err();
        assert!(matches!(e, RecordError::BadValue { .. }));
    }

    #[test]
    fn pairing_checks_keys() {
        let truth = vec![
            ("a.png".to_string(), (0.1, 0.95)),
            ("b.png".to_string(), (0.2, 1.0)),
            ("c.png".to_string(), (0.3, 1.1)),
        ];
        let p = pair_ratios(&rows(), &truth).unwrap();
        assert_eq!(p.excluded, vec!["b.png".to_string()]);
        assert_eq!(p.pcor.model.values, vec![0.9, 1.2]);
        assert_eq!(p.pcor.truth.values, vec![0.95, 1.1]);
        let e = pair_ratios(&rows(), &truth[..2]).unwrap_err();
        assert!(matches!(e, RecordError::KeyMismatch { ref only_pred, .. } if only_pred == &["c.png".to_string()]));
        let dup = vec![truth[0].clone(), truth[0].clone()];
        assert!(matches!(
            pair_ratios(&rows()[..1], &dup),
            Err(RecordError::DuplicateKey(_))
        ));
    }
}
