//! Per-run CSV log.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Fixed column order of the run log. Changing it is a schema change.
pub const RUN_RECORD_HEADER: [&str; 12] = [
    "step",
    "epoch",
    "split",
    "loss",
    "accuracy",
    "alpha",
    "sigma",
    "sharpness_raw",
    "sharpness_ema",
    "lambda_max",
    "grad_norm",
    "wall_ms",
];

/// One logged event. Optional fields are written as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub step: u64,
    pub epoch: u64,
    pub split: String,
    pub loss: f64,
    pub accuracy: Option<f64>,
    pub alpha: f64,
    pub sigma: f64,
    pub sharpness_raw: f64,
    pub sharpness_ema: f64,
    pub lambda_max: Option<f64>,
    pub grad_norm: Option<f64>,
    pub wall_ms: u64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl RunRecord {
    fn fields(&self) -> [String; 12] {
        [
            self.step.to_string(),
            self.epoch.to_string(),
            self.split.clone(),
            self.loss.to_string(),
            opt(self.accuracy),
            self.alpha.to_string(),
            self.sigma.to_string(),
            self.sharpness_raw.to_string(),
            self.sharpness_ema.to_string(),
            opt(self.lambda_max),
            opt(self.grad_norm),
            self.wall_ms.to_string(),
        ]
    }
}

/// Writes the header on creation and flushes after every row, so a killed
/// run leaves a readable prefix.
pub struct RunWriter {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl RunWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut inner = csv::Writer::from_writer(BufWriter::new(file));
        inner.write_record(RUN_RECORD_HEADER)?;
        inner.flush().map_err(|e| Error::io(&path, e))?;
        Ok(Self { path, inner })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, row: &RunRecord) -> Result<()> {
        self.inner.write_record(row.fields())?;
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Writes every row of `rows` to `path`.
pub fn write_run_csv<'a>(path: impl AsRef<Path>, rows: impl IntoIterator<Item = &'a RunRecord>) -> Result<()> {
    let mut w = RunWriter::create(path)?;
    for row in rows {
        w.write(row)?;
    }
    Ok(())
}

fn parse_cell<T: std::str::FromStr>(path: &Path, line: u64, name: &str, cell: &str) -> Result<T> {
    cell.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        offset: line,
        reason: format!("column {name}: cannot parse {cell:?}"),
    })
}

fn parse_opt(path: &Path, line: u64, name: &str, cell: &str) -> Result<Option<f64>> {
    if cell.is_empty() {
        Ok(None)
    } else {
        parse_cell(path, line, name, cell).map(Some)
    }
}

/// Reads a run log back. Parse errors report the byte offset of the row.
pub fn read_run_csv(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != RUN_RECORD_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            offset: 0,
            reason: format!("unexpected header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let off = rec.position().map(|p| p.byte()).unwrap_or(0);
        let c = |i: usize| rec.get(i).unwrap_or("");
        out.push(RunRecord {
            step: parse_cell(path, off, "step", c(0))?,
            epoch: parse_cell(path, off, "epoch", c(1))?,
            split: c(2).to_owned(),
            loss: parse_cell(path, off, "loss", c(3))?,
            accuracy: parse_opt(path, off, "accuracy", c(4))?,
            alpha: parse_cell(path, off, "alpha", c(5))?,
            sigma: parse_cell(path, off, "sigma", c(6))?,
            sharpness_raw: parse_cell(path, off, "sharpness_raw", c(7))?,
            sharpness_ema: parse_cell(path, off, "sharpness_ema", c(8))?,
            lambda_max: parse_opt(path, off, "lambda_max", c(9))?,
            grad_norm: parse_opt(path, off, "grad_norm", c(10))?,
            wall_ms: parse_cell(path, off, "wall_ms", c(11))?,
        });
    }
    Ok(out)
}
