use std::fs;
use std::path::{Path, PathBuf};

use super::{Result, Tensor, TensorError};

/// Maps `v` from `[lo, hi]` onto `0..=255`, rounding half up. A degenerate
/// range maps everything to mid-gray 128.
pub fn rescale_to_byte(v: f64, lo: f64, hi: f64) -> u8 {
    if !(hi > lo) {
        return 128;
    }
    let s = (v - lo) / (hi - lo) * 255.0;
    (s + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Binary graymap (P5) with maxval 255; `pixels` is row-major.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Writes every mode-`mode` slice of an order-3 tensor as
/// `slice_000.pgm`, `slice_001.pgm`, .. using the global min/max of `t`.
///
/// Image rows follow the first remaining mode and columns the second.
pub fn export_pgm(t: &Tensor, mode: usize, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if t.order() != 3 {
        return Err(TensorError::Unsupported(format!(
            "graymap export needs an order-3 tensor, got order {}",
            t.order()
        )));
    }
    let (_, _, _) = t.fiber_layout(mode)?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let (lo, hi) = t.min_max();
    let count = t.dims()[mode - 1];
    let mut written = Vec::with_capacity(count);
    for i in 1..=count {
        let s = t.slice(&[mode], &[i])?;
        let (h, w) = (s.dims()[0], s.dims()[1]);
        let mut pixels = Vec::with_capacity(w * h);
        for r in 1..=h {
            for c in 1..=w {
                pixels.push(rescale_to_byte(s.get(&[r, c]), lo, hi));
            }
        }
        let path = out_dir.join(format!("slice_{:03}.pgm", i - 1));
        fs::write(&path, encode_pgm(w, h, &pixels))?;
        written.push(path);
    }
    Ok(written)
}
