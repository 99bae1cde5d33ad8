//! MNIST ingestion, shuffling, batching and run logs.
//!
//! Pixels stay as `u8` in memory and are normalised when a batch is built:
//! `(p/255 − 0.1307)/0.3081`.

mod idx;
mod record;

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

pub use idx::{parse_idx, read_maybe_gz, IdxArray, IMAGES_MAGIC, LABELS_MAGIC};
pub use record::{read_run_csv, write_run_csv, RunRecord, RunWriter, RUN_RECORD_HEADER};

use crate::error::{Error, Result};
use crate::objectives::{Evaluation, LabeledBatch, Mlp};
use crate::stable_noise::{stream_rng, streams};

pub const PIXEL_MEAN: f64 = 0.1307;
pub const PIXEL_STD: f64 = 0.3081;
pub const NUM_CLASSES: u8 = 10;
/// Environment variable naming the dataset directory.
pub const DATA_DIR_ENV: &str = "AHTSGD_DATA_DIR";

pub fn normalize_pixel(p: u8) -> f64 {
    (p as f64 / 255.0 - PIXEL_MEAN) / PIXEL_STD
}

pub fn denormalize_pixel(x: f64) -> f64 {
    (x * PIXEL_STD + PIXEL_MEAN) * 255.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn stem(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

/// Immutable labelled image set.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxDataset {
    pixels: Vec<u8>,
    labels: Vec<u8>,
    rows: usize,
    cols: usize,
    split: Split,
}

impl IdxDataset {
    pub fn from_raw(pixels: Vec<u8>, labels: Vec<u8>, rows: usize, cols: usize, split: Split) -> Result<Self> {
        if pixels.len() != labels.len() * rows * cols {
            return Err(Error::Config(format!(
                "{} pixels do not fit {} images of {rows}x{cols}",
                pixels.len(),
                labels.len()
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= NUM_CLASSES) {
            return Err(Error::Config(format!("label {y} out of range")));
        }
        Ok(Self {
            pixels,
            labels,
            rows,
            cols,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn image_dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn raw_image(&self, i: usize) -> &[u8] {
        let d = self.image_dim();
        &self.pixels[i * d..(i + 1) * d]
    }

    /// Normalised pixels of image `i`.
    pub fn image(&self, i: usize) -> Vec<f64> {
        let lut = normalization_table();
        self.raw_image(i).iter().map(|&p| lut[p as usize]).collect()
    }

    /// Per-class counts.
    pub fn class_counts(&self) -> [usize; NUM_CLASSES as usize] {
        let mut c = [0; NUM_CLASSES as usize];
        for &y in &self.labels {
            c[y as usize] += 1;
        }
        c
    }

    /// Normalised batch of the given rows, in the given order.
    pub fn batch(&self, indices: &[usize]) -> LabeledBatch {
        let lut = normalization_table();
        let d = self.image_dim();
        let mut inputs = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            inputs.extend(self.raw_image(i).iter().map(|&p| lut[p as usize]));
            labels.push(self.labels[i]);
        }
        LabeledBatch {
            inputs,
            labels,
            input_dim: d,
        }
    }

    /// The first `n` examples of a fixed permutation keyed by `subset_seed`.
    /// `n >= len` returns the full set in stored order.
    pub fn subset(&self, n: usize, subset_seed: u64) -> Self {
        if n >= self.len() {
            return self.clone();
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut stream_rng(subset_seed, streams::SUBSET));
        order.truncate(n);
        let d = self.image_dim();
        let mut pixels = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for &i in &order {
            pixels.extend_from_slice(self.raw_image(i));
            labels.push(self.labels[i]);
        }
        Self {
            pixels,
            labels,
            rows: self.rows,
            cols: self.cols,
            split: self.split,
        }
    }

    /// Shuffled mini-batches for one epoch; the final short batch is kept.
    pub fn batches(&self, batch_size: usize, seed: u64, epoch: u64) -> Result<impl Iterator<Item = LabeledBatch> + '_> {
        let plan = batch_indices(self.len(), batch_size, seed, epoch)?;
        Ok(plan.into_iter().map(move |idx| self.batch(&idx)))
    }

    /// Consecutive batches in stored order, for evaluation.
    pub fn chunks(&self, chunk: usize) -> impl Iterator<Item = LabeledBatch> + '_ {
        let chunk = chunk.max(1);
        (0..self.len()).step_by(chunk).map(move |start| {
            let idx: Vec<usize> = (start..(start + chunk).min(self.len())).collect();
            self.batch(&idx)
        })
    }
}

fn normalization_table() -> &'static [f64; 256] {
    static TABLE: std::sync::OnceLock<[f64; 256]> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|p| normalize_pixel(p as u8)))
}

/// Epoch permutation of `0..n` keyed by `(seed, epoch)`.
pub fn epoch_order(n: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, streams::SHUFFLE_BASE + epoch));
    order
}

/// Index lists of every mini-batch in one epoch.
pub fn batch_indices(n: usize, batch_size: usize, seed: u64, epoch: u64) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::param("batch_size", "must be >= 1"));
    }
    Ok(epoch_order(n, seed, epoch).chunks(batch_size).map(<[usize]>::to_vec).collect())
}

/// Reads an image file and a label file into a dataset.
pub fn load_idx(images: &Path, labels: &Path, split: Split) -> Result<IdxDataset> {
    let img = parse_idx(&read_maybe_gz(images)?, IMAGES_MAGIC, images)?;
    let lab = parse_idx(&read_maybe_gz(labels)?, LABELS_MAGIC, labels)?;
    let (n, rows, cols) = (img.dims[0], img.dims[1], img.dims[2]);
    if lab.dims[0] != n {
        return Err(Error::Parse {
            path: labels.to_path_buf(),
            offset: 4,
            reason: format!("{} labels for {n} images", lab.dims[0]),
        });
    }
    if let Some(pos) = lab.data.iter().position(|&y| y >= NUM_CLASSES) {
        return Err(Error::Parse {
            path: labels.to_path_buf(),
            offset: 8 + pos as u64,
            reason: format!("label {} out of range", lab.data[pos]),
        });
    }
    IdxDataset::from_raw(img.data, lab.data, rows, cols, split)
}

/// Standard file names (`train-images-idx3-ubyte` and so on), with or without
/// a `.gz` suffix.
pub fn mnist_paths(dir: &Path, split: Split) -> (PathBuf, PathBuf) {
    let pick = |name: String| {
        let plain = dir.join(&name);
        let gz = dir.join(format!("{name}.gz"));
        if !plain.exists() && gz.exists() {
            gz
        } else {
            plain
        }
    };
    (
        pick(format!("{}-images-idx3-ubyte", split.stem())),
        pick(format!("{}-labels-idx1-ubyte", split.stem())),
    )
}

pub fn load_mnist(dir: &Path, split: Split) -> Result<IdxDataset> {
    let (images, labels) = mnist_paths(dir, split);
    load_idx(&images, &labels, split)
}

/// Dataset directory: explicit choice, else `$AHTSGD_DATA_DIR`, else
/// `./data/mnist`.
pub fn resolve_data_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("data/mnist"),
    }
}

/// Loss and accuracy of `theta` over the whole dataset, evaluated in chunks.
pub fn evaluate(mlp: &Mlp, theta: &[f64], ds: &IdxDataset, chunk: usize) -> Result<Evaluation> {
    if ds.is_empty() {
        return Err(Error::Config("cannot evaluate on an empty dataset".into()));
    }
    let mut loss = 0.0;
    let mut correct = 0;
    for b in ds.chunks(chunk) {
        let e = mlp.evaluate(theta, &b)?;
        loss += e.loss * e.count as f64;
        correct += e.correct;
    }
    Ok(Evaluation {
        loss: loss / ds.len() as f64,
        correct,
        count: ds.len(),
    })
}
