use nalgebra::DMatrix;

use super::{check_modes, strides, Result, Tensor, TensorError};

/// Partition of the modes into ordered row and column groups.
///
/// The row of element `(i_1..i_d)` is `i_{r_1} + (i_{r_2}-1) I_{r_1} + ..`
/// (1-based) and the column follows the same fastest-first rule over the
/// column modes, which are the complement of the row modes in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatricizationSpec {
    row_modes: Vec<usize>,
    col_modes: Vec<usize>,
}

impl MatricizationSpec {
    pub fn new(order: usize, row_modes: &[usize]) -> Result<Self> {
        check_modes(row_modes, order)?;
        let col_modes = (1..=order).filter(|m| !row_modes.contains(m)).collect();
        Ok(Self {
            row_modes: row_modes.to_vec(),
            col_modes,
        })
    }

    /// Mode-j unfolding `A_(j)`.
    pub fn mode(order: usize, mode: usize) -> Result<Self> {
        Self::new(order, &[mode])
    }

    pub fn row_modes(&self) -> &[usize] {
        &self.row_modes
    }

    pub fn col_modes(&self) -> &[usize] {
        &self.col_modes
    }

    pub fn order(&self) -> usize {
        self.row_modes.len() + self.col_modes.len()
    }

    pub fn shape(&self, dims: &[usize]) -> (usize, usize) {
        let rows = self.row_modes.iter().map(|&m| dims[m - 1]).product();
        let cols = self.col_modes.iter().map(|&m| dims[m - 1]).product();
        (rows, cols)
    }

    /// Per-mode contribution to the (row, col) position: `(is_row, stride)`.
    fn mode_strides(&self, dims: &[usize]) -> Vec<(bool, usize)> {
        let mut out = vec![(false, 0); dims.len()];
        let mut acc = 1;
        for &m in &self.row_modes {
            out[m - 1] = (true, acc);
            acc *= dims[m - 1];
        }
        acc = 1;
        for &m in &self.col_modes {
            out[m - 1] = (false, acc);
            acc *= dims[m - 1];
        }
        out
    }

    fn check_order(&self, dims: &[usize]) -> Result<()> {
        if self.order() != dims.len() {
            return Err(TensorError::InvalidModes {
                modes: self.row_modes.clone(),
                order: dims.len(),
                reason: format!("specification is for order {}", self.order()),
            });
        }
        Ok(())
    }

    /// Storage offset of every matrix entry, in column-major matrix order.
    pub(crate) fn storage_map(&self, dims: &[usize]) -> Result<Vec<usize>> {
        self.check_order(dims)?;
        let (rows, cols) = self.shape(dims);
        let ms = self.mode_strides(dims);
        let mut map = vec![0usize; rows * cols];
        let tstrides = strides(dims);
        let n = rows * cols;
        let mut idx = vec![0usize; dims.len()];
        for off in 0..n {
            let mut r = 0;
            let mut c = 0;
            for (k, &i) in idx.iter().enumerate() {
                let (is_row, s) = ms[k];
                if is_row {
                    r += i * s;
                } else {
                    c += i * s;
                }
            }
            debug_assert_eq!(
                off,
                idx.iter().zip(&tstrides).map(|(i, s)| i * s).sum::<usize>()
            );
            map[r + rows * c] = off;
            for (i, &d) in idx.iter_mut().zip(dims) {
                *i += 1;
                if *i < d {
                    break;
                }
                *i = 0;
            }
        }
        Ok(map)
    }
}

pub fn matricize(t: &Tensor, spec: &MatricizationSpec) -> Result<DMatrix<f64>> {
    let (rows, cols) = {
        spec.check_order(t.dims())?;
        spec.shape(t.dims())
    };
    if spec.row_modes.iter().copied().eq(1..=t.order()) {
        return Ok(DMatrix::from_column_slice(rows, 1, t.data()));
    }
    let map = spec.storage_map(t.dims())?;
    let data = t.data();
    Ok(DMatrix::from_iterator(
        rows,
        cols,
        map.iter().map(|&o| data[o]),
    ))
}

pub fn dematricize(m: &DMatrix<f64>, spec: &MatricizationSpec, dims: &[usize]) -> Result<Tensor> {
    spec.check_order(dims)?;
    let (rows, cols) = spec.shape(dims);
    if m.nrows() != rows || m.ncols() != cols {
        return Err(TensorError::ShapeMismatch {
            expected: vec![rows, cols],
            found: vec![m.nrows(), m.ncols()],
        });
    }
    let map = spec.storage_map(dims)?;
    let mut data = vec![0.0; rows * cols];
    for (&o, &v) in map.iter().zip(m.as_slice()) {
        data[o] = v;
    }
    Tensor::new(dims.to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> Tensor {
        Tensor::from_fn(&[2, 2, 2], |i| (100 * i[0] + 10 * i[1] + i[2]) as f64).unwrap()
    }

    #[test]
    fn mode_one_unfolding_of_cube() {
        let spec = MatricizationSpec::mode(3, 1).unwrap();
        let m = matricize(&cube(), &spec).unwrap();
        assert_eq!(m.shape(), (2, 4));
        let row1: Vec<f64> = m.row(0).iter().copied().collect();
        assert_eq!(row1, vec![111.0, 121.0, 112.0, 122.0]);
    }

    #[test]
    fn mode_two_unfolding_orders_columns_fastest_first() {
        let spec = MatricizationSpec::mode(3, 2).unwrap();
        let m = matricize(&cube(), &spec).unwrap();
        // columns (i1, i3): (1,1), (2,1), (1,2), (2,2)
        let row2: Vec<f64> = m.row(1).iter().copied().collect();
        assert_eq!(row2, vec![121.0, 221.0, 122.0, 222.0]);
    }

    #[test]
    fn reordered_row_modes() {
        let spec = MatricizationSpec::new(3, &[3, 1]).unwrap();
        let m = matricize(&cube(), &spec).unwrap();
        assert_eq!(m.shape(), (4, 2));
        // row index = i3 + (i1 - 1) * 2
        assert_eq!(m[(1, 0)], 112.0);
        assert_eq!(m[(2, 0)], 211.0);
        assert_eq!(m[(3, 1)], 222.0);
    }

    #[test]
    fn order_one_and_vectorization() {
        let v = Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        let m = matricize(&v, &MatricizationSpec::mode(1, 1).unwrap()).unwrap();
        assert_eq!(m.shape(), (3, 1));
        assert_eq!(m.as_slice(), v.data());
        let t = cube();
        let all = MatricizationSpec::new(3, &[1, 2, 3]).unwrap();
        let m = matricize(&t, &all).unwrap();
        assert_eq!(m.shape(), (8, 1));
        assert_eq!(m.as_slice(), t.data());
    }

    #[test]
    fn invalid_specs() {
        assert!(MatricizationSpec::new(3, &[1, 1]).is_err());
        assert!(MatricizationSpec::new(3, &[4]).is_err());
        assert!(MatricizationSpec::new(3, &[0]).is_err());
        let spec = MatricizationSpec::mode(2, 1).unwrap();
        assert!(matricize(&cube(), &spec).is_err());
    }

    #[test]
    fn dematricize_shape_errors_and_scalar() {
        let spec = MatricizationSpec::mode(3, 1).unwrap();
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            dematricize(&m, &spec, &[2, 2, 2]),
            Err(TensorError::ShapeMismatch { .. })
        ));
        let one = DMatrix::from_element(1, 1, 4.5);
        let t = dematricize(&one, &MatricizationSpec::mode(2, 2).unwrap(), &[1, 1]).unwrap();
        assert_eq!(t.data(), &[4.5]);
    }

    #[test]
    fn cube_round_trip() {
        let t = cube();
        for rows in [vec![1], vec![2], vec![3], vec![2, 3], vec![3, 1], vec![]] {
            let spec = MatricizationSpec::new(3, &rows).unwrap();
            let m = matricize(&t, &spec).unwrap();
            assert_eq!(dematricize(&m, &spec, t.dims()).unwrap(), t);
        }
    }
}
