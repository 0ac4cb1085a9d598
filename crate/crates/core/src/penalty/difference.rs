use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::banded::BandedCholesky;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Plain,
    Neumann,
}

/// Finite-difference operator `D^l` of order 1 or 2 on a length-`I` fiber.
///
/// * order 1, plain: `(I-1) x I`, rows `(.. 1 -1 ..)`.
/// * order 2, plain: `(I-2) x I`, rows `(1 -2 1)`.
/// * order 2, Neumann: `I x I`, first row `(-1, 1)`, interior `(1, -2, 1)`,
///   last row `(1, -1)`.
/// * order 1, Neumann: the reflected boundary row is identically zero, so
///   the operator coincides with the plain one.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceMatrix {
    order: u8,
    extent: usize,
    boundary: Boundary,
    rows: Vec<Vec<(usize, f64)>>,
}

impl DifferenceMatrix {
    pub fn new(order: u8, extent: usize, boundary: Boundary) -> Option<Self> {
        let n = extent;
        let rows: Vec<Vec<(usize, f64)>> = match (order, boundary) {
            (1, _) => (0..n.saturating_sub(1))
                .map(|i| vec![(i, 1.0), (i + 1, -1.0)])
                .collect(),
            (2, Boundary::Plain) => (0..n.saturating_sub(2))
                .map(|i| vec![(i, 1.0), (i + 1, -2.0), (i + 2, 1.0)])
                .collect(),
            (2, Boundary::Neumann) => {
                if n < 2 {
                    Vec::new()
                } else {
                    let mut r = vec![vec![(0, -1.0), (1, 1.0)]];
                    for i in 1..n - 1 {
                        r.push(vec![(i - 1, 1.0), (i, -2.0), (i + 1, 1.0)]);
                    }
                    r.push(vec![(n - 2, 1.0), (n - 1, -1.0)]);
                    r
                }
            }
            _ => return None,
        };
        Some(Self {
            order,
            extent,
            boundary,
            rows,
        })
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows.len(), self.extent);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// `|| D x ||^2` for one fiber.
    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|row| {
                let s: f64 = row.iter().map(|&(j, v)| v * x[j]).sum();
                s * s
            })
            .sum()
    }

    /// Factors `c D^T D + I` (half-bandwidth = order).
    pub fn factor_shifted_gram(&self, c: f64) -> BandedCholesky {
        let p = self.order as usize;
        // Row supports are windows of width p + 1, so only rows within p of
        // i can touch column i.
        BandedCholesky::factor(self.extent, p, |i, j| {
            let mut g = 0.0;
            for r in i.saturating_sub(p)..(i + p + 1).min(self.rows.len()) {
                let row = &self.rows[r];
                let a = row.iter().find(|e| e.0 == i).map_or(0.0, |e| e.1);
                let b = row.iter().find(|e| e.0 == j).map_or(0.0, |e| e.1);
                g += a * b;
            }
            c * g + if i == j { 1.0 } else { 0.0 }
        })
        .expect("c D^T D + I is positive definite for c >= 0")
    }
}
