//! IDX container parsing (big-endian magic, dimensions, unsigned-byte payload).

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Parsed IDX file: dimensions and the raw byte payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

/// Reads a file, transparently decompressing gzip when the first two bytes
/// are the gzip magic.
pub fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn parse_err(path: &Path, offset: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        offset: offset as u64,
        reason: reason.into(),
    }
}

/// Parses an unsigned-byte IDX buffer and checks its magic number.
/// `path` is only used for error messages.
pub fn parse_idx(bytes: &[u8], expected_magic: u32, path: &Path) -> Result<IdxArray> {
    if bytes.len() < 4 {
        return Err(parse_err(path, bytes.len(), "truncated magic number"));
    }
    let magic = u32::from_be_bytes(bytes[..4].try_into().unwrap());
    if magic != expected_magic {
        return Err(parse_err(
            path,
            0,
            format!("bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}"),
        ));
    }
    let ndim = (magic & 0xff) as usize;
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(parse_err(path, bytes.len(), format!("truncated header, need {header} bytes")));
    }
    let dims: Vec<usize> = (0..ndim)
        .map(|i| u32::from_be_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize)
        .collect();
    let payload = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| parse_err(path, 4, "dimension product overflows"))?;
    let available = bytes.len() - header;
    if available < payload {
        return Err(parse_err(
            path,
            bytes.len(),
            format!("truncated payload: {available} of {payload} bytes present"),
        ));
    }
    if available > payload {
        return Err(parse_err(
            path,
            header + payload,
            format!("{} trailing bytes after payload", available - payload),
        ));
    }
    Ok(IdxArray {
        dims,
        data: bytes[header..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encode(magic: u32, dims: &[u32], payload: &[u8]) -> Vec<u8> {
        let mut out = magic.to_be_bytes().to_vec();
        for d in dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(payload);
        out
    }

    fn offset_of(e: Error) -> u64 {
        match e {
            Error::Parse { offset, .. } => offset,
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn parses_images_and_labels() {
        let p = Path::new("x");
        let img = parse_idx(&encode(IMAGES_MAGIC, &[2, 2, 3], &[7; 12]), IMAGES_MAGIC, p).unwrap();
        assert_eq!(img.dims, vec![2, 2, 3]);
        assert_eq!(img.data.len(), 12);
        let lab = parse_idx(&encode(LABELS_MAGIC, &[3], &[1, 2, 3]), LABELS_MAGIC, p).unwrap();
        assert_eq!(lab.data, vec![1, 2, 3]);
    }

    #[test]
    fn errors_name_offsets() {
        let p = Path::new("x");
        assert_eq!(offset_of(parse_idx(&[0, 0], LABELS_MAGIC, p).unwrap_err()), 2);
        assert_eq!(
            offset_of(parse_idx(&encode(IMAGES_MAGIC, &[1], &[]), LABELS_MAGIC, p).unwrap_err()),
            0
        );
        assert_eq!(
            offset_of(parse_idx(&encode(LABELS_MAGIC, &[5], &[0; 3]), LABELS_MAGIC, p).unwrap_err()),
            11
        );
        assert_eq!(
            offset_of(parse_idx(&encode(LABELS_MAGIC, &[2], &[0; 3]), LABELS_MAGIC, p).unwrap_err()),
            10
        );
        let short_header = &encode(IMAGES_MAGIC, &[1, 1, 1], &[0])[..10];
        assert_eq!(offset_of(parse_idx(short_header, IMAGES_MAGIC, p).unwrap_err()), 10);
    }

    #[test]
    fn gzip_is_sniffed() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let raw = encode(LABELS_MAGIC, &[4], &[0, 1, 2, 3]);
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("plain");
        let gz = dir.path().join("packed");
        std::fs::write(&plain, &raw).unwrap();
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(&raw).unwrap();
        std::fs::write(&gz, enc.finish().unwrap()).unwrap();
        assert_eq!(read_maybe_gz(&plain).unwrap(), raw);
        assert_eq!(read_maybe_gz(&gz).unwrap(), raw);
        assert!(matches!(read_maybe_gz(&dir.path().join("missing")), Err(Error::Io { .. })));
    }
}
