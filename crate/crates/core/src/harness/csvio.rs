//! CSV formats.
//!
//! * dataset: no header, rows `x1,...,xd,y`
//! * provenance: header `id,is_outlier`, 0/1 flags
//! * scores: header `round,id,score,is_outlier` (flag blank when unknown)
//! * results: header `eps,attack,defense,learner,trial,test_error,rounds,removed_good,removed_bad`

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::filter::ScoreReport;
use crate::linalg::Matrix;

/// 17 significant digits; parses back to the identical `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut cols: Option<usize> = None;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() < 2 {
            return Err(parse_err(line, "missing label column"));
        }
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(parse_err(line, format!("expected {c} fields, found {}", rec.len())))
            }
            _ => {}
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("non-numeric cell `{field}` in column {}", j + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite cell `{field}`")));
            }
            if j + 1 == rec.len() {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    let Some(c) = cols else {
        return Err(parse_err(0, "no rows"));
    };
    Dataset::new(Matrix::from_vec(y.len(), c - 1, x)?, y)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

/// Writes every row (the active mask is not serialized).
pub fn write_dataset<W: Write>(data: &Dataset, mut w: W) -> Result<()> {
    for i in 0..data.len() {
        let s = data.sample(i);
        let mut line: Vec<String> = s.x.iter().map(|v| fmt_f64(*v)).collect();
        line.push(fmt_f64(s.y));
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(data, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn save_provenance(is_outlier: &[bool], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "is_outlier"])?;
    for (i, &b) in is_outlier.iter().enumerate() {
        w.write_record([i.to_string(), u8::from(b).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_provenance(path: impl AsRef<Path>) -> Result<Vec<bool>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut flags = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(parse_err(line, "expected `id,is_outlier`"));
        }
        let id: usize = rec[0].parse().map_err(|_| parse_err(line, "bad id"))?;
        if id != flags.len() {
            return Err(parse_err(line, format!("expected id {}, found {id}", flags.len())));
        }
        flags.push(match &rec[1] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line, format!("bad flag `{other}`"))),
        });
    }
    Ok(flags)
}

/// One row per (round, sample); rounds are numbered from 1.
pub fn write_scores<W: Write>(rounds: &[ScoreReport], is_outlier: Option<&[bool]>, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["round", "id", "score", "is_outlier"])?;
    for (r, report) in rounds.iter().enumerate() {
        for (&id, &s) in report.indices.iter().zip(&report.scores) {
            let flag = is_outlier
                .and_then(|f| f.get(id))
                .map_or(String::new(), |b| u8::from(*b).to_string());
            w.write_record([(r + 1).to_string(), id.to_string(), fmt_f64(s), flag])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_scores(rounds: &[ScoreReport], is_outlier: Option<&[bool]>, path: impl AsRef<Path>) -> Result<()> {
    write_scores(rounds, is_outlier, File::create(path)?)
}

/// Which trial a result row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Trial {
    Index(usize),
    /// Aggregate over trials.
    Median,
}

impl std::fmt::Display for Trial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Trial::Index(i) => write!(f, "{i}"),
            Trial::Median => write!(f, "median"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub eps: f64,
    pub attack: String,
    pub defense: String,
    pub learner: String,
    pub trial: Trial,
    pub test_error: f64,
    pub rounds: usize,
    pub removed_good: usize,
    pub removed_bad: usize,
}

pub const RESULTS_HEADER: [&str; 9] = [
    "eps",
    "attack",
    "defense",
    "learner",
    "trial",
    "test_error",
    "rounds",
    "removed_good",
    "removed_bad",
];

pub fn write_results<W: Write>(records: &[ExperimentRecord], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        w.write_record([
            r.eps.to_string(),
            r.attack.clone(),
            r.defense.clone(),
            r.learner.clone(),
            r.trial.to_string(),
            fmt_f64(r.test_error),
            r.rounds.to_string(),
            r.removed_good.to_string(),
            r.removed_bad.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_results(records: &[ExperimentRecord], path: impl AsRef<Path>) -> Result<()> {
    write_results(records, File::create(path)?)
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != RESULTS_HEADER.len() {
            return Err(parse_err(line, "wrong field count"));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| parse_err(line, format!("bad {}", RESULTS_HEADER[i])))
        };
        let int = |i: usize| -> Result<usize> {
            rec[i].parse().map_err(|_| parse_err(line, format!("bad {}", RESULTS_HEADER[i])))
        };
        out.push(ExperimentRecord {
            eps: num(0)?,
            attack: rec[1].to_string(),
            defense: rec[2].to_string(),
            learner: rec[3].to_string(),
            trial: if &rec[4] == "median" {
                Trial::Median
            } else {
                Trial::Index(int(4)?)
            },
            test_error: num(5)?,
            rounds: int(6)?,
            removed_good: int(7)?,
            removed_bad: int(8)?,
        });
    }
    Ok(out)
}
