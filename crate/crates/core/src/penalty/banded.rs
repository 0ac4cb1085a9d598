//! Banded Cholesky factorization for the SPD systems `(c D^T D + I) y = x`.

/// Cholesky factor `L` of a symmetric positive definite band matrix with
/// half-bandwidth `p`. Row `i` of `L` is stored at `i * (p + 1)`, entry
/// `L[i][j]` at offset `j + p - i`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    p: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    /// Factors the band matrix whose lower band is given by `entry(i, j)`
    /// for `i - p <= j <= i`. Returns `None` if the matrix is not positive
    /// definite.
    pub fn factor(n: usize, p: usize, entry: impl Fn(usize, usize) -> f64) -> Option<Self> {
        let w = p + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let j0 = i.saturating_sub(p);
            for j in j0..=i {
                let mut sum = entry(i, j);
                let k0 = j0.max(j.saturating_sub(p));
                for k in k0..j {
                    sum -= l[i * w + k + p - i] * l[j * w + k + p - j];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return None;
                    }
                    l[i * w + p] = sum.sqrt();
                } else {
                    l[i * w + j + p - i] = sum / l[j * w + p];
                }
            }
        }
        Some(Self { n, p, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites `x` with the solution of `L L^T y = x`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        let (p, w) = (self.p, self.p + 1);
        for i in 0..self.n {
            let mut s = x[i];
            for k in i.saturating_sub(p)..i {
                s -= self.l[i * w + k + p - i] * x[k];
            }
            x[i] = s / self.l[i * w + p];
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + p + 1).min(self.n) {
                s -= self.l[k * w + i + p - k] * x[k];
            }
            x[i] = s / self.l[i * w + p];
        }
    }
}
