//! `fetch-mnist`: download (or import) the four MNIST IDX files and verify
//! them by SHA-256.

use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use sha2::{Digest, Sha256};

use crate::config::{self, Params};
use crate::error::CliError;

/// File name and SHA-256 of the decompressed content.
pub const MNIST_FILES: [(&str, &str); 4] = [
    ("train-images-idx3-ubyte", "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db"),
    ("train-labels-idx1-ubyte", "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5"),
    ("t10k-images-idx3-ubyte", "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7"),
    ("t10k-labels-idx1-ubyte", "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2"),
];

pub const DEFAULT_BASE_URL: &str = "https://ossci-datasets.s3.amazonaws.com/mnist/";

const MAX_DOWNLOAD: u64 = 64 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct FetchParams {
    /// Destination; falls back to `$AHTSGD_DATA_DIR`, then `data/mnist`.
    pub out: Option<PathBuf>,
    /// Import from a local directory instead of downloading.
    pub from: Option<PathBuf>,
    pub base_url: String,
    /// Re-fetch even when a verified copy is already present.
    pub force: bool,
}

impl Default for FetchParams {
    fn default() -> Self {
        Self {
            out: None,
            from: None,
            base_url: DEFAULT_BASE_URL.into(),
            force: false,
        }
    }
}

impl Params for FetchParams {
    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let opt_path = |v: &str| (!v.is_empty()).then(|| config::path(v));
        match key {
            "out" => self.out = opt_path(value),
            "from" => self.from = opt_path(value),
            "base_url" => self.base_url = value.to_owned(),
            "force" => self.force = config::parse_bool(key, value)?,
            _ => return Err(config::unknown(key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        let p = |x: &Option<PathBuf>| x.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        vec![
            ("out", p(&self.out)),
            ("from", p(&self.from)),
            ("base_url", self.base_url.clone()),
            ("force", self.force.to_string()),
        ]
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Decompresses if the bytes carry a gzip header.
fn maybe_gunzip(bytes: Vec<u8>, origin: &str) -> Result<Vec<u8>, CliError> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| CliError::Data(format!("{origin}: bad gzip stream: {e}")))?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

fn verify(name: &str, expected: &str, bytes: &[u8], origin: &str) -> Result<(), CliError> {
    let got = sha256_hex(bytes);
    if got != expected {
        return Err(CliError::Data(format!("{origin}: sha256 {got} does not match {expected} for {name}")));
    }
    Ok(())
}

fn import(dir: &Path, name: &str) -> Result<(Vec<u8>, String), CliError> {
    for candidate in [dir.join(name), dir.join(format!("{name}.gz"))] {
        if candidate.exists() {
            let bytes = std::fs::read(&candidate).map_err(|e| CliError::io(&candidate, e))?;
            return Ok((bytes, candidate.display().to_string()));
        }
    }
    Err(CliError::Data(format!("{}: neither {name} nor {name}.gz found", dir.display())))
}

fn download(base: &str, name: &str) -> Result<(Vec<u8>, String), CliError> {
    let url = format!("{}/{name}.gz", base.trim_end_matches('/'));
    let mut resp = ureq::get(&url)
        .call()
        .map_err(|e| CliError::Io(format!("{url}: {e}")))?;
    let bytes = resp
        .body_mut()
        .with_config()
        .limit(MAX_DOWNLOAD)
        .read_to_vec()
        .map_err(|e| CliError::Io(format!("{url}: {e}")))?;
    Ok((bytes, url))
}

/// Returns the destination directory.
pub fn run(p: &FetchParams) -> Result<PathBuf, CliError> {
    let dir = ahtsgd::data_io::resolve_data_dir(p.out.as_deref());
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    for (name, sha) in MNIST_FILES {
        let dest = dir.join(name);
        if !p.force && dest.exists() {
            let bytes = std::fs::read(&dest).map_err(|e| CliError::io(&dest, e))?;
            if sha256_hex(&bytes) == sha {
                eprintln!("{name}: present and verified");
                continue;
            }
        }
        let (raw, origin) = match &p.from {
            Some(src) => import(src, name)?,
            None => download(&p.base_url, name)?,
        };
        let bytes = maybe_gunzip(raw, &origin)?;
        verify(name, sha, &bytes, &origin)?;
        // Write then rename so an interrupted fetch never leaves a bad file
        // under the final name.
        let tmp = dir.join(format!("{name}.part"));
        std::fs::write(&tmp, &bytes).map_err(|e| CliError::io(&tmp, e))?;
        std::fs::rename(&tmp, &dest).map_err(|e| CliError::io(&dest, e))?;
        eprintln!("{name}: written from {origin}");
    }
    Ok(dir)
}
