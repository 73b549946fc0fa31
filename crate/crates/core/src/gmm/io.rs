//! Versioned little-endian serialization of fitted mixtures.
//!
//! ```text
//! "GMMB" | u8 version | u8 kind (0 diagonal, 1 full) | u32 k | u32 dim
//!        | f64 weights[k] | f64 means[k*dim] | f64 covariances[k*dim or k*dim*dim]
//!        | u8 l2_normalize | f64 stdev_floor | u8 has_standardization
//!        | [f64 means[dim] | f64 stdevs[dim]]
//!        | u32 n | f64 fit_log[n] | u32 m | u32 reseed_iters[m]
//! ```
//!
//! Parameters are stored as `f64` so a saved model reloads bit-exactly.

use std::fs;
use std::path::Path;

use super::{Covariances, GmmModel};
use crate::preprocess::{PreprocessRecord, StandardizationStats};
use crate::{Error, Result, Scalar};

pub const GMM_MAGIC: &[u8; 4] = b"GMMB";
pub const GMM_VERSION: u8 = 1;

pub fn encode_model<T: Scalar>(model: &GmmModel<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(GMM_MAGIC);
    out.push(GMM_VERSION);
    out.push(match model.covariances() {
        Covariances::Diagonal(_) => 0,
        Covariances::Full(_) => 1,
    });
    put_u32(&mut out, model.k());
    put_u32(&mut out, model.dim());
    put_f64s(&mut out, model.weights());
    put_f64s(&mut out, model.means());
    match model.covariances() {
        Covariances::Diagonal(v) | Covariances::Full(v) => put_f64s(&mut out, v),
    }
    let pre = &model.preprocessing;
    out.push(u8::from(pre.l2_normalize));
    put_f64s(&mut out, &[pre.stdev_floor]);
    match &pre.standardization {
        Some(s) => {
            out.push(1);
            put_f64s(&mut out, &s.means);
            put_f64s(&mut out, &s.stdevs);
        }
        None => out.push(0),
    }
    put_u32(&mut out, model.fit_log().len());
    put_f64s(&mut out, model.fit_log());
    put_u32(&mut out, model.reseed_iters().len());
    for &r in model.reseed_iters() {
        put_u32(&mut out, r);
    }
    out
}

pub fn decode_model<T: Scalar>(bytes: &[u8]) -> Result<GmmModel<T>> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(4)? != GMM_MAGIC {
        return Err(Error::MalformedHeader("missing GMMB magic".into()));
    }
    let version = r.u8()?;
    if version != GMM_VERSION {
        return Err(Error::MalformedHeader(format!("unsupported model version {version}")));
    }
    let kind = r.u8()?;
    let k = r.u32()? as usize;
    let d = r.u32()? as usize;
    let weights = r.f64s(k)?;
    let means = r.f64s(k * d)?;
    let covariances = match kind {
        0 => Covariances::Diagonal(r.f64s(k * d)?),
        1 => Covariances::Full(r.f64s(k * d * d)?),
        other => return Err(Error::MalformedHeader(format!("unknown covariance kind {other}"))),
    };
    let l2_normalize = r.u8()? != 0;
    let stdev_floor = r.f64s(1)?[0];
    let standardization = match r.u8()? {
        0 => None,
        _ => Some(StandardizationStats { means: r.f64s(d)?, stdevs: r.f64s(d)? }),
    };
    let n_log = r.u32()? as usize;
    let fit_log = r.f64s(n_log)?;
    let n_reseed = r.u32()? as usize;
    let reseeds = (0..n_reseed).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    if r.at != bytes.len() {
        return Err(Error::MalformedHeader("trailing bytes after model".into()));
    }
    Ok(GmmModel::from_parts(weights, means, covariances, d)?
        .with_preprocessing(PreprocessRecord { standardization, stdev_floor, l2_normalize })
        .with_fit_log(fit_log, reseeds))
}

pub fn save_model<T: Scalar>(model: &GmmModel<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<GmmModel<T>> {
    decode_model(&fs::read(path)?)
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f64s<T: Scalar>(out: &mut Vec<u8>, vs: &[T]) {
    for v in vs {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::MalformedHeader("truncated model".into()))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64s<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>> {
        let len = n.checked_mul(8).ok_or_else(|| Error::MalformedHeader("size overflow".into()))?;
        Ok(self
            .take(len)?
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
            .collect())
    }
}
