//! Representation matrices and their on-disk formats.
//!
//! Binary layout (`REPR`, version 1, all integers little-endian):
//!
//! ```text
//! "REPR" | u8 version | u32 n_rows | u32 dim | n_rows*dim f32 (row-major)
//!        | u32 len | encoder_label utf-8 | u32 len | split_label utf-8
//! ```
//!
//! The CSV fallback has one representation per line, comma separated, no
//! header. CSV carries no labels; they default to `"unknown"`.

use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

pub const REPR_MAGIC: &[u8; 4] = b"REPR";
pub const REPR_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 4 + 4;
const DEFAULT_LABEL: &str = "unknown";

/// Role of a representation set in the dataset-inference protocol.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitLabel {
    /// Private data scored by the density estimator.
    P1,
    /// Private data the density estimator is trained on.
    P2,
    /// Held-out data from the same distribution.
    N,
    /// Attacker query data.
    S,
    Other(String),
}

impl fmt::Display for SplitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitLabel::P1 => f.write_str("P1"),
            SplitLabel::P2 => f.write_str("P2"),
            SplitLabel::N => f.write_str("N"),
            SplitLabel::S => f.write_str("S"),
            SplitLabel::Other(s) => f.write_str(s),
        }
    }
}

impl FromStr for SplitLabel {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "P1" => SplitLabel::P1,
            "P2" => SplitLabel::P2,
            "N" => SplitLabel::N,
            "S" => SplitLabel::S,
            other => SplitLabel::Other(other.to_owned()),
        })
    }
}

/// An `n_rows x dim` row-major matrix of encoder outputs plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationSet<T> {
    data: Vec<T>,
    n_rows: usize,
    dim: usize,
    pub encoder_label: String,
    pub split_label: SplitLabel,
}

impl<T: Scalar> RepresentationSet<T> {
    /// Builds a set, checking the shape and that every entry is finite.
    pub fn new(data: Vec<T>, n_rows: usize, dim: usize) -> Result<Self> {
        if n_rows == 0 {
            return Err(Error::TooFewRows { needed: 1, found: 0 });
        }
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if data.len() != n_rows * dim {
            return Err(Error::DimensionMismatch {
                expected: n_rows * dim,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self {
            data,
            n_rows,
            dim,
            encoder_label: DEFAULT_LABEL.to_owned(),
            split_label: SplitLabel::Other(DEFAULT_LABEL.to_owned()),
        })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(data, n_rows, dim)
    }

    pub fn with_labels(mut self, encoder: impl Into<String>, split: SplitLabel) -> Self {
        self.encoder_label = encoder.into();
        self.split_label = split;
        self
    }

    /// Same labels, new payload. The caller guarantees shape and finiteness.
    pub(crate) fn with_data(&self, data: Vec<T>, dim: usize) -> Self {
        debug_assert_eq!(data.len(), self.n_rows * dim);
        Self {
            data,
            n_rows: self.n_rows,
            dim,
            encoder_label: self.encoder_label.clone(),
            split_label: self.split_label.clone(),
        }
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.dim)
    }

    /// New set holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.n_rows {
                return Err(Error::TooFewRows {
                    needed: i + 1,
                    found: self.n_rows,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Self {
            data,
            n_rows: indices.len(),
            dim: self.dim,
            encoder_label: self.encoder_label.clone(),
            split_label: self.split_label.clone(),
        })
    }

    /// Row-wise concatenation `[a_i | b_i]`.
    pub fn concat_columns(&self, other: &Self) -> Result<Self> {
        if self.n_rows != other.n_rows {
            return Err(Error::RowCountMismatch {
                left: self.n_rows,
                right: other.n_rows,
            });
        }
        let dim = self.dim + other.dim;
        let mut data = Vec::with_capacity(self.n_rows * dim);
        for (a, b) in self.rows().zip(other.rows()) {
            data.extend_from_slice(a);
            data.extend_from_slice(b);
        }
        Ok(self.with_data(data, dim))
    }

    pub fn cast<U: Scalar>(&self) -> RepresentationSet<U> {
        RepresentationSet {
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
            n_rows: self.n_rows,
            dim: self.dim,
            encoder_label: self.encoder_label.clone(),
            split_label: self.split_label.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Binary,
    Csv,
}

/// Reads a REPR binary file, or CSV when the magic bytes are absent.
pub fn read_representations<T: Scalar>(path: impl AsRef<Path>) -> Result<RepresentationSet<T>> {
    let bytes = fs::read(path.as_ref())?;
    if bytes.starts_with(REPR_MAGIC) {
        decode_binary(&bytes)
    } else {
        parse_csv(BufReader::new(&bytes[..]))
    }
}

pub fn write_representations<T: Scalar>(
    set: &RepresentationSet<T>,
    path: impl AsRef<Path>,
    format: FileFormat,
) -> Result<()> {
    let file = fs::File::create(path.as_ref())?;
    let mut out = BufWriter::new(file);
    match format {
        FileFormat::Binary => out.write_all(&encode_binary(set)?)?,
        FileFormat::Csv => write_csv(set, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

/// Serializes to the REPR layout. Entries are rounded to `f32`; values that
/// overflow `f32` are rejected.
pub fn encode_binary<T: Scalar>(set: &RepresentationSet<T>) -> Result<Vec<u8>> {
    let enc = set.encoder_label.as_bytes();
    let split = set.split_label.to_string();
    let split = split.as_bytes();
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * set.data.len() + 8 + enc.len() + split.len());
    buf.extend_from_slice(REPR_MAGIC);
    buf.push(REPR_VERSION);
    buf.extend_from_slice(&header_u32(set.n_rows)?.to_le_bytes());
    buf.extend_from_slice(&header_u32(set.dim)?.to_le_bytes());
    for (pos, v) in set.data.iter().enumerate() {
        let f = v.to_f32().unwrap_or(f32::NAN);
        if !f.is_finite() {
            return Err(Error::NonFiniteValue {
                row: pos / set.dim,
                col: pos % set.dim,
            });
        }
        buf.extend_from_slice(&f.to_le_bytes());
    }
    for s in [enc, split] {
        buf.extend_from_slice(&header_u32(s.len())?.to_le_bytes());
        buf.extend_from_slice(s);
    }
    Ok(buf)
}

fn header_u32(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::MalformedHeader(format!("{n} does not fit in u32")))
}

pub fn decode_binary<T: Scalar>(bytes: &[u8]) -> Result<RepresentationSet<T>> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != REPR_MAGIC {
        return Err(Error::MalformedHeader("missing REPR magic".into()));
    }
    if bytes[4] != REPR_VERSION {
        return Err(Error::MalformedHeader(format!("unsupported version {}", bytes[4])));
    }
    let n_rows = read_u32(bytes, 5) as usize;
    let dim = read_u32(bytes, 9) as usize;
    let expected = n_rows
        .checked_mul(dim)
        .ok_or_else(|| Error::MalformedHeader("n_rows * dim overflows".into()))?;
    let payload_end = HEADER_LEN + 4 * expected;

    // Whatever follows the header must be exactly the payload plus two
    // length-prefixed labels; anything else means the payload size is off.
    let mismatch = || {
        let found = bytes.len().saturating_sub(HEADER_LEN + 8) / 4;
        Error::DimensionMismatch { expected, found }
    };
    let (encoder_label, after_enc) = read_label(bytes, payload_end).ok_or_else(mismatch)?;
    let (split_label, end) = read_label(bytes, after_enc).ok_or_else(mismatch)?;
    if end != bytes.len() {
        return Err(mismatch());
    }
    let encoder_label = String::from_utf8(encoder_label.to_vec())
        .map_err(|_| Error::MalformedHeader("encoder label is not utf-8".into()))?;
    let split_label = String::from_utf8(split_label.to_vec())
        .map_err(|_| Error::MalformedHeader("split label is not utf-8".into()))?;

    let data: Vec<T> = bytes[HEADER_LEN..payload_end]
        .chunks_exact(4)
        .map(|c| T::of(f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))))
        .collect();
    let mut set = RepresentationSet::new(data, n_rows, dim)?;
    set.encoder_label = encoder_label;
    set.split_label = split_label.parse().unwrap_or_else(|e| match e {});
    Ok(set)
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn read_label(bytes: &[u8], at: usize) -> Option<(&[u8], usize)> {
    if at.checked_add(4)? > bytes.len() {
        return None;
    }
    let len = read_u32(bytes, at) as usize;
    let start = at + 4;
    let end = start.checked_add(len)?;
    (end <= bytes.len()).then(|| (&bytes[start..end], end))
}

fn parse_csv<T: Scalar, R: BufRead>(reader: R) -> Result<RepresentationSet<T>> {
    let mut data = Vec::new();
    let mut dim = None;
    let mut n_rows = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
                line: lineno + 1,
                message: format!("{field:?}: {e}"),
            })?;
            data.push(T::of(v));
            count += 1;
        }
        match dim {
            None => dim = Some(count),
            Some(d) if d != count => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: count,
                })
            }
            _ => {}
        }
        n_rows += 1;
    }
    let dim = dim.ok_or(Error::EmptyInput)?;
    RepresentationSet::new(data, n_rows, dim)
}

fn write_csv<T: Scalar, W: Write>(set: &RepresentationSet<T>, out: &mut W) -> io::Result<()> {
    for row in set.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.write_all(b",")?;
            }
            write!(out, "{}", v.as_f64())?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> RepresentationSet<f64> {
        RepresentationSet::from_rows(&[[1.0, 2.0, 3.0], [-0.5, 0.25, 4.0]])
            .unwrap()
            .with_labels("victim", SplitLabel::P1)
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.repr");
        let set = sample();
        write_representations(&set, &path, FileFormat::Binary).unwrap();
        let back: RepresentationSet<f64> = read_representations(&path).unwrap();
        assert_eq!(back.n_rows(), 2);
        assert_eq!(back.dim(), 3);
        assert_eq!(back, set);
    }

    #[test]
    fn short_payload_is_dimension_mismatch() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(REPR_MAGIC);
        bytes.push(1);
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&3u32.to_le_bytes());
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for s in ["enc", "P1"] {
            bytes.extend_from_slice(&(s.len() as u32).to_le_bytes());
            bytes.extend_from_slice(s.as_bytes());
        }
        let err = decode_binary::<f64>(&bytes).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 6, .. }), "{err}");
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode_binary(&sample()).unwrap();
        bytes[4] = 2;
        assert!(matches!(decode_binary::<f64>(&bytes), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode_binary::<f64>(b"REPX\x01"), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn non_finite_reports_position() {
        let mut bytes = encode_binary(&sample()).unwrap();
        let at = HEADER_LEN + 4 * 4; // row 1, col 1
        bytes[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        match decode_binary::<f64>(&bytes) {
            Err(Error::NonFiniteValue { row: 1, col: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_parse_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        fs::write(&path, "1.0,2.0\n3.0,4.0").unwrap();
        let set: RepresentationSet<f64> = read_representations(&path).unwrap();
        assert_eq!((set.n_rows(), set.dim()), (2, 2));
        assert_eq!(set.data(), &[1.0, 2.0, 3.0, 4.0]);

        let odd = RepresentationSet::from_rows(&[[0.1234567891, -1e-7], [1e6 / 3.0, 2.5]]).unwrap();
        write_representations(&odd, &path, FileFormat::Csv).unwrap();
        let back: RepresentationSet<f64> = read_representations(&path).unwrap();
        for (a, b) in odd.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn ragged_csv_rejected() {
        let rows = "1,2\n3\n";
        let err = parse_csv::<f64, _>(BufReader::new(rows.as_bytes())).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 1 }));
    }

    #[test]
    fn unwritable_path_is_io_failure() {
        let err = write_representations(&sample(), "/nonexistent-dir/x/y.repr", FileFormat::Binary)
            .unwrap_err();
        assert!(matches!(err, Error::IoFailure(_)));
    }

    #[test]
    fn invalid_construction() {
        assert!(RepresentationSet::<f64>::new(vec![], 0, 3).is_err());
        assert!(RepresentationSet::new(vec![1.0, f64::INFINITY], 1, 2).is_err());
        assert!(RepresentationSet::new(vec![1.0; 5], 2, 3).is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip_is_identity(
            n in 1usize..12,
            d in 1usize..9,
            seed in any::<u64>(),
        ) {
            // f32-representable payload so the f32 encoding is lossless
            let mut x = seed;
            let data: Vec<f32> = (0..n * d)
                .map(|_| {
                    x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    f32::from_bits(((x >> 33) as u32 & 0x3fff_ffff) | 0x3000_0000)
                        * if x & 1 == 0 { 1.0 } else { -1.0 }
                })
                .collect();
            let set = RepresentationSet::new(data, n, d).unwrap().with_labels("e", SplitLabel::N);
            let back: RepresentationSet<f32> = decode_binary(&encode_binary(&set).unwrap()).unwrap();
            prop_assert_eq!(back.n_rows(), n);
            prop_assert_eq!(back.dim(), d);
            let bits = |s: &RepresentationSet<f32>| s.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&set));
        }
    }
}
