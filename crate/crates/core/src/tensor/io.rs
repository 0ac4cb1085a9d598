//! The `.atd` binary tensor format.
//!
//! ```text
//! bytes 0..4    magic "ATD1"
//! u32 LE        order d
//! d x u64 LE    extents
//! f64 LE        product(extents) values in storage order
//! ```

use std::fs;
use std::path::Path;

use super::{Result, Tensor, TensorError, MAX_ORDER};

pub const ATD_MAGIC: &[u8; 4] = b"ATD1";

pub fn encode_atd(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * t.order() + 8 * t.len());
    out.extend_from_slice(ATD_MAGIC);
    out.extend_from_slice(&(t.order() as u32).to_le_bytes());
    for &d in t.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_atd(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < 4 || &bytes[..4] != ATD_MAGIC {
        return Err(TensorError::BadMagic);
    }
    let rest = &bytes[4..];
    if rest.len() < 4 {
        return Err(TensorError::TruncatedHeader("missing order field".into()));
    }
    let order = u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize;
    if order == 0 || order > MAX_ORDER {
        return Err(TensorError::InvalidHeader(format!(
            "order {order} outside 1..={MAX_ORDER}"
        )));
    }
    let rest = &rest[4..];
    if rest.len() < 8 * order {
        return Err(TensorError::TruncatedHeader(format!(
            "expected {order} extents, found {} bytes",
            rest.len()
        )));
    }
    let mut dims = Vec::with_capacity(order);
    let mut numel: usize = 1;
    for chunk in rest[..8 * order].chunks_exact(8) {
        let d = u64::from_le_bytes(chunk.try_into().unwrap());
        let d = usize::try_from(d)
            .map_err(|_| TensorError::InvalidHeader(format!("extent {d} too large")))?;
        if d == 0 {
            return Err(TensorError::InvalidHeader("zero extent".into()));
        }
        numel = numel
            .checked_mul(d)
            .filter(|n| n.checked_mul(8).is_some())
            .ok_or_else(|| TensorError::InvalidHeader("element count overflows".into()))?;
        dims.push(d);
    }
    let payload = &rest[8 * order..];
    if payload.len() != numel * 8 {
        return Err(TensorError::PayloadLengthMismatch {
            expected: numel,
            found_bytes: payload.len(),
        });
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor::new(dims, data)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    decode_atd(&fs::read(path)?)
}

pub fn write_tensor(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_atd(t))?;
    Ok(())
}
