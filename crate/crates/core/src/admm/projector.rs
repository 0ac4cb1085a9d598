use nalgebra::{DMatrix, DVector};

use super::AdmmError;

/// Copy counts per component; copies are ordered component-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopyLayout {
    counts: Vec<usize>,
    starts: Vec<usize>,
}

impl CopyLayout {
    pub fn new(counts: &[usize]) -> Result<Self, AdmmError> {
        if counts.is_empty() {
            return Err(AdmmError::Invalid("layout needs at least one component".into()));
        }
        if let Some(i) = counts.iter().position(|&n| n == 0) {
            return Err(AdmmError::Invalid(format!("component {} has no copies", i + 1)));
        }
        let mut starts = Vec::with_capacity(counts.len());
        let mut acc = 0;
        for &n in counts {
            starts.push(acc);
            acc += n;
        }
        Ok(Self {
            counts: counts.to_vec(),
            starts,
        })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn components(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Position of copy `j` (0-based) of component `i` (0-based).
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j < self.counts[i]);
        self.starts[i] + j
    }

    /// Copy positions of the first copy of each component.
    pub fn leaders(&self) -> &[usize] {
        &self.starts
    }
}

/// Projection onto `{x : A x = (0, .., 0, m)}` for one element's copy
/// vector: `proj(x) = P x + q m`.
#[derive(Debug, Clone)]
pub struct ConsensusProjector {
    layout: CopyLayout,
    a: DMatrix<f64>,
    p: DMatrix<f64>,
    q: DVector<f64>,
}

impl ConsensusProjector {
    pub fn build(layout: &CopyLayout) -> Self {
        let n = layout.total();
        let rows = n - layout.components() + 1;
        let mut a = DMatrix::zeros(rows, n);
        let mut r = 0;
        for (i, &ni) in layout.counts().iter().enumerate() {
            for j in 0..ni - 1 {
                a[(r, layout.index(i, j))] = 1.0;
                a[(r, layout.index(i, j + 1))] = -1.0;
                r += 1;
            }
        }
        for &k in layout.leaders() {
            a[(r, k)] = 1.0;
        }
        let gram = &a * a.transpose();
        let ginv = gram
            .cholesky()
            .expect("equality chains plus one sum row have full row rank")
            .inverse();
        let pinv = a.transpose() * ginv;
        let mut p = DMatrix::identity(n, n) - &pinv * &a;
        p = (&p + p.transpose()) * 0.5;
        let q = pinv.column(rows - 1).into_owned();
        Self {
            layout: layout.clone(),
            a,
            p,
            q,
        }
    }

    pub fn layout(&self) -> &CopyLayout {
        &self.layout
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn project_element(&self, x: &[f64], m_val: f64) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.project_into(x, m_val, &mut out);
        out
    }

    pub(crate) fn project_into(&self, x: &[f64], m_val: f64, out: &mut [f64]) {
        let n = self.q.len();
        debug_assert_eq!(x.len(), n);
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = self.q[r] * m_val;
            for (c, &v) in x.iter().enumerate() {
                s += self.p[(r, c)] * v;
            }
            *o = s;
        }
    }
}
