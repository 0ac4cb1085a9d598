//! Independent reference solvers shared by the integration tests.
//!
//! Nothing here calls into the library's prox code: penalties are rebuilt
//! from index arithmetic and minimized by generic first-order methods.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// Storage offset of a 0-based multi-index, first index fastest.
pub fn offset(dims: &[usize], idx: &[usize]) -> usize {
    let mut off = 0;
    let mut stride = 1;
    for (&i, &d) in idx.iter().zip(dims) {
        off += i * stride;
        stride *= d;
    }
    off
}

/// Every 0-based multi-index, first index fastest.
pub fn all_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let n: usize = dims.iter().product();
    let mut out = Vec::with_capacity(n);
    let mut idx = vec![0; dims.len()];
    for _ in 0..n {
        out.push(idx.clone());
        for (k, &d) in dims.iter().enumerate() {
            idx[k] += 1;
            if idx[k] < d {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

/// One entry of a linear image: `y[plus] - y[minus]` or just `y[plus]`.
#[derive(Clone, Copy, Debug)]
pub struct Lin {
    pub plus: usize,
    pub minus: Option<usize>,
}

/// A sum of Euclidean norms of linear images, `sum_g ||B_g y||`.
#[derive(Clone, Debug, Default)]
pub struct NormSum {
    pub groups: Vec<Vec<Lin>>,
}

impl NormSum {
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.groups.iter().map(|g| norm(&image(g, y))).sum()
    }

    /// Gradient of the Huber envelope `sum_g env_mu ||B_g y||`.
    fn huber_grad(&self, y: &[f64], mu: f64, out: &mut [f64]) {
        for g in &self.groups {
            let v = image(g, y);
            let s = 1.0 / norm(&v).max(mu);
            for (l, vi) in g.iter().zip(&v) {
                out[l.plus] += s * vi;
                if let Some(m) = l.minus {
                    out[m] -= s * vi;
                }
            }
        }
    }
}

fn image(g: &[Lin], y: &[f64]) -> Vec<f64> {
    g.iter().map(|l| y[l.plus] - l.minus.map_or(0.0, |m| y[m])).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Elementwise l1.
pub fn l1_groups(n: usize) -> NormSum {
    NormSum {
        groups: (0..n).map(|i| vec![Lin { plus: i, minus: None }]).collect(),
    }
}

/// Groups of entries sharing their indices at `group_modes` (1-based).
pub fn slice_groups(dims: &[usize], group_modes: &[usize]) -> NormSum {
    let mut map: std::collections::BTreeMap<Vec<usize>, Vec<Lin>> = Default::default();
    for idx in all_indices(dims) {
        let key: Vec<usize> = group_modes.iter().map(|&m| idx[m - 1]).collect();
        map.entry(key).or_default().push(Lin {
            plus: offset(dims, &idx),
            minus: None,
        });
    }
    NormSum {
        groups: map.into_values().collect(),
    }
}

/// Differences between consecutive positions along `chain_mode`; for each
/// fixed index at `slice_modes` and each position, one group spanning the
/// remaining modes.
pub fn chain_groups(dims: &[usize], chain_mode: usize, slice_modes: &[usize]) -> NormSum {
    let mut map: std::collections::BTreeMap<(Vec<usize>, usize), Vec<Lin>> = Default::default();
    for idx in all_indices(dims) {
        let c = idx[chain_mode - 1];
        if c + 1 == dims[chain_mode - 1] {
            continue;
        }
        let mut next = idx.clone();
        next[chain_mode - 1] += 1;
        let key: Vec<usize> = slice_modes.iter().map(|&m| idx[m - 1]).collect();
        map.entry((key, c)).or_default().push(Lin {
            plus: offset(dims, &next),
            minus: Some(offset(dims, &idx)),
        });
    }
    NormSum {
        groups: map.into_values().collect(),
    }
}

/// Dense difference operator on a length-`n` fiber.
pub fn difference_matrix(order: u8, n: usize, neumann: bool) -> DMatrix<f64> {
    match (order, neumann) {
        (1, _) => DMatrix::from_fn(n.saturating_sub(1), n, |i, j| {
            if j == i {
                1.0
            } else if j == i + 1 {
                -1.0
            } else {
                0.0
            }
        }),
        (2, false) => DMatrix::from_fn(n.saturating_sub(2), n, |i, j| match j as isize - i as isize {
            0 | 2 => 1.0,
            1 => -2.0,
            _ => 0.0,
        }),
        (2, true) => {
            let mut d = DMatrix::zeros(n, n);
            if n >= 2 {
                d[(0, 0)] = -1.0;
                d[(0, 1)] = 1.0;
                for i in 1..n - 1 {
                    d[(i, i - 1)] = 1.0;
                    d[(i, i)] = -2.0;
                    d[(i, i + 1)] = 1.0;
                }
                d[(n - 1, n - 2)] = 1.0;
                d[(n - 1, n - 1)] = -1.0;
            }
            d
        }
        _ => panic!("unsupported order"),
    }
}

/// `G` with `sum_fibers ||D x_fiber||^2 = y^T G y` for mode-`mode` fibers.
pub fn smoothness_gram(dims: &[usize], mode: usize, order: u8, neumann: bool) -> DMatrix<f64> {
    let n: usize = dims.iter().product();
    let d = difference_matrix(order, dims[mode - 1], neumann);
    let dtd = d.transpose() * &d;
    let mut g = DMatrix::zeros(n, n);
    for idx in all_indices(dims) {
        if idx[mode - 1] != 0 {
            continue;
        }
        let fiber: Vec<usize> = (0..dims[mode - 1])
            .map(|k| {
                let mut j = idx.clone();
                j[mode - 1] = k;
                offset(dims, &j)
            })
            .collect();
        for (a, &oa) in fiber.iter().enumerate() {
            for (b, &ob) in fiber.iter().enumerate() {
                g[(oa, ob)] += dtd[(a, b)];
            }
        }
    }
    g
}

/// Row-mode-`row_mode` unfoldings of an order-2 or order-3 tensor, one
/// per index of `slice_mode` (if any), as (rows, cols, offsets col-major).
pub fn unfolding_offsets(dims: &[usize], row_mode: usize, slice_mode: Option<usize>) -> Vec<(usize, usize, Vec<usize>)> {
    let others: Vec<usize> = (1..=dims.len()).filter(|&m| m != row_mode && Some(m) != slice_mode).collect();
    let rows = dims[row_mode - 1];
    let cols: usize = others.iter().map(|&m| dims[m - 1]).product();
    let slices = slice_mode.map_or(1, |s| dims[s - 1]);
    let mut out = Vec::new();
    for s in 0..slices {
        let mut offs = vec![0; rows * cols];
        for idx in all_indices(dims) {
            if slice_mode.is_some_and(|sm| idx[sm - 1] != s) {
                continue;
            }
            let r = idx[row_mode - 1];
            let mut c = 0;
            let mut stride = 1;
            for &m in &others {
                c += idx[m - 1] * stride;
                stride *= dims[m - 1];
            }
            offs[r + c * rows] = offset(dims, &idx);
        }
        out.push((rows, cols, offs));
    }
    out
}

/// A penalty assembled for the oracle: `lambda * nonsmooth + y^T Q y`,
/// optionally restricted to `y >= 0`.
pub struct OraclePenalty {
    pub lambda: f64,
    pub norms: NormSum,
    /// Unfoldings whose nuclear norms are added (times lambda).
    pub nuclear: Vec<(usize, usize, Vec<usize>)>,
    /// Quadratic part, already multiplied by its weight.
    pub quad: Option<DMatrix<f64>>,
    pub nonnegative: bool,
}

impl OraclePenalty {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            norms: NormSum::default(),
            nuclear: Vec::new(),
            quad: None,
            nonnegative: false,
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let mut v = self.lambda * self.norms.eval(y);
        for (r, c, offs) in &self.nuclear {
            let m = DMatrix::from_fn(*r, *c, |i, j| y[offs[i + j * r]]);
            let sig = gram_singular_values(&m);
            v += self.lambda * sig.iter().sum::<f64>();
        }
        if let Some(q) = &self.quad {
            let yv = nalgebra::DVector::from_column_slice(y);
            v += (yv.transpose() * q * &yv)[(0, 0)];
        }
        v
    }
}

/// Singular values via the eigenvalues of the smaller Gram matrix.
pub fn gram_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let g = if m.nrows() <= m.ncols() {
        m * m.transpose()
    } else {
        m.transpose() * m
    };
    SymmetricEigen::new(g).eigenvalues.iter().map(|&e| e.max(0.0).sqrt()).collect()
}

/// `tr (N^T N + mu^2 I)^{1/2} - q mu`, a smooth surrogate of the nuclear
/// norm of one unfolding, oriented so that `N` is `p x q` with `q <= p`.
struct SmoothNuclear {
    p: usize,
    q: usize,
    /// Flat offset of `N[(a, b)]` at `a + b p`.
    pos: Vec<usize>,
    n_mat: DMatrix<f64>,
    v: DMatrix<f64>,
    s: Vec<f64>,
}

impl SmoothNuclear {
    fn new(y: &[f64], rows: usize, cols: usize, offs: &[usize], mu: f64) -> Self {
        let (p, q, pos): (usize, usize, Vec<usize>) = if cols <= rows {
            (rows, cols, offs.to_vec())
        } else {
            let mut pos = vec![0; rows * cols];
            for j in 0..cols {
                for i in 0..rows {
                    pos[j + i * cols] = offs[i + j * rows];
                }
            }
            (cols, rows, pos)
        };
        let n_mat = DMatrix::from_fn(p, q, |a, b| y[pos[a + b * p]]);
        let eig = SymmetricEigen::new(n_mat.transpose() * &n_mat);
        let s = eig.eigenvalues.iter().map(|&l| (l.max(0.0) + mu * mu).sqrt()).collect();
        Self {
            p,
            q,
            pos,
            n_mat,
            v: eig.eigenvectors,
            s,
        }
    }

    fn value(&self, mu: f64) -> f64 {
        self.s.iter().map(|s| s - mu).sum()
    }

    /// Adds `w N S^{-1}` to `out`.
    fn add_gradient(&self, w: f64, out: &mut [f64]) {
        let inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(self.q, self.s.iter().map(|s| 1.0 / s)));
        let g = &self.n_mat * &self.v * inv * self.v.transpose();
        for b in 0..self.q {
            for a in 0..self.p {
                out[self.pos[a + b * self.p]] += w * g[(a, b)];
            }
        }
    }

    /// Adds `w` times the Hessian: along `E` the gradient moves by
    /// `E S^{-1} - N S^{-1} dS S^{-1}`, where `S dS + dS S = E^T N + N^T E`.
    fn add_hessian(&self, w: f64, hess: &mut DMatrix<f64>) {
        let (p, q) = (self.p, self.q);
        let nt = &self.n_mat * &self.v;
        let inv: Vec<f64> = self.s.iter().map(|s| 1.0 / s).collect();
        for b in 0..q {
            for a in 0..p {
                // E = e_a e_b^T, so E V has the single row a equal to row b of V
                let mut et = DMatrix::zeros(p, q);
                for k in 0..q {
                    et[(a, k)] = self.v[(b, k)];
                }
                let bm = et.transpose() * &nt + nt.transpose() * &et;
                let ds = DMatrix::from_fn(q, q, |i, j| bm[(i, j)] / (self.s[i] + self.s[j]));
                let mut d = et;
                for k in 0..q {
                    for r in 0..p {
                        d[(r, k)] *= inv[k];
                    }
                }
                let scaled = DMatrix::from_fn(q, q, |i, j| inv[i] * ds[(i, j)] * inv[j]);
                d -= &nt * scaled;
                let col = d * self.v.transpose();
                let c = self.pos[a + b * p];
                for bb in 0..q {
                    for aa in 0..p {
                        hess[(self.pos[aa + bb * p], c)] += w * col[(aa, bb)];
                    }
                }
            }
        }
    }
}

/// `argmin_y pen(y) + 1/2 ||x - y||^2` by damped Newton on a smoothed
/// objective (Huber envelopes of the norms, a quadratic penalty for the sign
/// constraint, `tr (Y^T Y + mu^2)^{1/2}` for nuclear norms), shrinking the
/// smoothing parameter geometrically and warm-starting each stage.
pub fn prox_oracle(pen: &OraclePenalty, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let has_nonsmooth = !pen.norms.groups.is_empty() || !pen.nuclear.is_empty() || pen.nonnegative;
    let stages: Vec<f64> = if has_nonsmooth {
        (1..=20).map(|k| 10f64.powf(-0.5 * k as f64)).collect()
    } else {
        vec![1.0]
    };
    let mut y = x.to_vec();
    let mut g = vec![0.0; n];
    for &mu in &stages {
        for _ in 0..200 {
            gradient(pen, x, &y, mu, &mut g);
            if norm(&g) <= 1e-13 {
                break;
            }
            let hess = hessian(pen, &y, mu);
            let rhs = nalgebra::DVector::from_column_slice(&g);
            let dir = match hess.cholesky() {
                Some(c) => c.solve(&rhs),
                None => rhs.clone(),
            };
            // Newton decrement: the predicted decrease is below rounding
            if dir.dot(&rhs) <= 1e-26 {
                break;
            }
            let f0 = smoothed_value(pen, x, &y, mu);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand: Vec<f64> = y.iter().zip(dir.iter()).map(|(a, d)| a - t * d).collect();
                if smoothed_value(pen, x, &cand, mu) <= f0 - 1e-4 * t * dir.dot(&rhs) {
                    y = cand;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
    }
    if pen.nonnegative {
        for v in &mut y {
            *v = v.max(0.0);
        }
    }
    y
}

/// `I + 2Q` plus the generalized Hessians of the smoothed penalties.
fn hessian(pen: &OraclePenalty, y: &[f64], mu: f64) -> DMatrix<f64> {
    let n = y.len();
    let mut hess = DMatrix::identity(n, n);
    if let Some(q) = &pen.quad {
        hess += q * 2.0;
    }
    for grp in &pen.norms.groups {
        let v = image(grp, y);
        let r = norm(&v);
        let k = grp.len();
        let w = if r < mu {
            DMatrix::identity(k, k) / mu
        } else {
            let vv = nalgebra::DVector::from_column_slice(&v);
            (DMatrix::identity(k, k) - &vv * vv.transpose() / (r * r)) / r
        };
        for (a, la) in grp.iter().enumerate() {
            for (b, lb) in grp.iter().enumerate() {
                let c = pen.lambda * w[(a, b)];
                let mut add = |i: usize, j: usize, s: f64| hess[(i, j)] += s * c;
                add(la.plus, lb.plus, 1.0);
                if let Some(mb) = lb.minus {
                    add(la.plus, mb, -1.0);
                }
                if let Some(ma) = la.minus {
                    add(ma, lb.plus, -1.0);
                    if let Some(mb) = lb.minus {
                        add(ma, mb, 1.0);
                    }
                }
            }
        }
    }
    if pen.nonnegative {
        for i in 0..n {
            if y[i] < 0.0 {
                hess[(i, i)] += 1.0 / mu;
            }
        }
    }
    for (r, c, offs) in &pen.nuclear {
        SmoothNuclear::new(y, *r, *c, offs, mu).add_hessian(pen.lambda, &mut hess);
    }
    hess
}

fn huber(t: f64, mu: f64) -> f64 {
    if t >= mu {
        t - mu / 2.0
    } else {
        t * t / (2.0 * mu)
    }
}

fn smoothed_value(pen: &OraclePenalty, x: &[f64], y: &[f64], mu: f64) -> f64 {
    let mut v = 0.5 * dist(x, y).powi(2);
    for grp in &pen.norms.groups {
        v += pen.lambda * huber(norm(&image(grp, y)), mu);
    }
    for (r, c, offs) in &pen.nuclear {
        v += pen.lambda * SmoothNuclear::new(y, *r, *c, offs, mu).value(mu);
    }
    if let Some(q) = &pen.quad {
        let yv = nalgebra::DVector::from_column_slice(y);
        v += (yv.transpose() * q * &yv)[(0, 0)];
    }
    if pen.nonnegative {
        v += y.iter().map(|&t| t.min(0.0).powi(2)).sum::<f64>() / (2.0 * mu);
    }
    v
}

fn gradient(pen: &OraclePenalty, x: &[f64], y: &[f64], mu: f64, out: &mut [f64]) {
    for i in 0..y.len() {
        out[i] = y[i] - x[i];
    }
    if !pen.norms.groups.is_empty() {
        let mut g = vec![0.0; y.len()];
        pen.norms.huber_grad(y, mu, &mut g);
        for (o, v) in out.iter_mut().zip(g) {
            *o += pen.lambda * v;
        }
    }
    for (r, c, offs) in &pen.nuclear {
        SmoothNuclear::new(y, *r, *c, offs, mu).add_gradient(pen.lambda, out);
    }
    if let Some(q) = &pen.quad {
        let yv = nalgebra::DVector::from_column_slice(y);
        let g = q * yv * 2.0;
        for (o, v) in out.iter_mut().zip(g.iter()) {
            *o += v;
        }
    }
    if pen.nonnegative {
        for (o, v) in out.iter_mut().zip(y) {
            if *v < 0.0 {
                *o += v / mu;
            }
        }
    }
}

/// The crack structure on a small tensor with `X1 = M - X2` eliminated:
/// `l11 ||D X1_(2)||^2 + l12 ||D X1_(3)||^2 + l21 ||D_N^2 X2_(1)||^2
/// + l22 ||X2||_1`, minimized over `X2` by FISTA. Returns `(X1, X2)` as
/// flat vectors and the objective value.
pub fn crack_reference(dims: &[usize], m: &[f64], l: [f64; 4], iters: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let n = m.len();
    let g2 = smoothness_gram(dims, 2, 1, false) * l[0];
    let g3 = smoothness_gram(dims, 3, 1, false) * l[1];
    let g1 = smoothness_gram(dims, 1, 2, true) * l[2];
    let bg = &g2 + &g3;
    let mv = nalgebra::DVector::from_column_slice(m);
    // f(x2) = (m - x2)^T bg (m - x2) + x2^T g1 x2
    let hess = (&bg + &g1) * 2.0;
    let lip = hess.symmetric_eigenvalues().max();
    let objective = |x2: &nalgebra::DVector<f64>| {
        let x1 = &mv - x2;
        (x1.transpose() * &bg * &x1)[(0, 0)] + (x2.transpose() * &g1 * x2)[(0, 0)] + l[3] * x2.abs().sum()
    };
    let mut x = nalgebra::DVector::zeros(n);
    let mut yk = x.clone();
    let mut t = 1.0f64;
    let mut best = (objective(&x), x.clone());
    for _ in 0..iters {
        let grad = (&bg * (&yk - &mv) + &g1 * &yk) * 2.0;
        let step = &yk - grad / lip;
        let thr = l[3] / lip;
        let next = step.map(|v| v.signum() * (v.abs() - thr).max(0.0));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let mom = (t - 1.0) / t_next;
        // restart when the objective goes up
        let f_next = objective(&next);
        if f_next > objective(&x) {
            t = 1.0;
            yk = x.clone();
            continue;
        }
        yk = &next + (&next - &x) * mom;
        x = next;
        t = t_next;
        if f_next < best.0 {
            best = (f_next, x.clone());
        }
    }
    let x2 = best.1;
    let x1 = &mv - &x2;
    (x1.as_slice().to_vec(), x2.as_slice().to_vec(), best.0)
}

/// Penalty families exercised against the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Smoothness,
    L1Signed,
    L1Nonnegative,
    GroupLasso,
    Nuclear,
    ChainScalar,
    ChainVector,
    SquaredFrobenius,
}

pub const FAMILIES: [Family; 8] = [
    Family::Smoothness,
    Family::L1Signed,
    Family::L1Nonnegative,
    Family::GroupLasso,
    Family::Nuclear,
    Family::ChainScalar,
    Family::ChainVector,
    Family::SquaredFrobenius,
];

/// A random case: the library term, the oracle for `eta * term`, the
/// point and its shape.
pub struct OracleCase {
    pub term: atd_core::PenaltyTerm,
    pub eta: f64,
    pub oracle: OraclePenalty,
    pub dims: Vec<usize>,
    pub x: Vec<f64>,
}

fn random_dims(rng: &mut impl rand::Rng, min_order: usize, max_order: usize) -> Vec<usize> {
    loop {
        let order = rng.random_range(min_order..=max_order);
        let dims: Vec<usize> = (0..order).map(|_| rng.random_range(2..=5)).collect();
        if dims.iter().product::<usize>() <= 50 {
            return dims;
        }
    }
}

pub fn oracle_case(family: Family, rng: &mut impl rand::Rng) -> OracleCase {
    use atd_core::penalty::Boundary;
    use atd_core::PenaltyTerm;
    let lambda = rng.random_range(0.05..2.0);
    let eta = *[0.1, 0.5, 1.0, 2.0].get(rng.random_range(0..4)).unwrap();
    let w = lambda * eta;
    let (dims, term, oracle) = match family {
        Family::Smoothness => {
            let dims = random_dims(rng, 1, 3);
            let mode = rng.random_range(1..=dims.len());
            let (order, neumann) = match rng.random_range(0..3) {
                0 => (1u8, false),
                1 => (2, false),
                _ => (2, true),
            };
            let b = if neumann { Boundary::Neumann } else { Boundary::Plain };
            let mut o = OraclePenalty::new(w);
            o.quad = Some(smoothness_gram(&dims, mode, order, neumann) * w);
            (dims, PenaltyTerm::smoothness(mode, order, b, lambda), o)
        }
        Family::L1Signed | Family::L1Nonnegative => {
            let dims = random_dims(rng, 1, 3);
            let n = dims.iter().product();
            let mut o = OraclePenalty::new(w);
            o.norms = l1_groups(n);
            let t = if family == Family::L1Signed {
                PenaltyTerm::l1(lambda)
            } else {
                o.nonnegative = true;
                PenaltyTerm::l1_nonnegative(lambda)
            };
            (dims, t, o)
        }
        Family::GroupLasso => {
            let dims = random_dims(rng, 2, 3);
            let k = rng.random_range(1..dims.len());
            let mut modes: Vec<usize> = (1..=dims.len()).collect();
            for i in (1..modes.len()).rev() {
                modes.swap(i, rng.random_range(0..=i));
            }
            let mut group: Vec<usize> = modes[..k].to_vec();
            group.sort();
            let mut o = OraclePenalty::new(w);
            o.norms = slice_groups(&dims, &group);
            (dims, PenaltyTerm::group_lasso(group, lambda), o)
        }
        Family::Nuclear => {
            let dims = random_dims(rng, 2, 3);
            let row = rng.random_range(1..=dims.len());
            let slice = if dims.len() == 3 && rng.random_bool(0.5) {
                let others: Vec<usize> = (1..=3).filter(|&m| m != row).collect();
                Some(others[rng.random_range(0..2)])
            } else {
                None
            };
            let mut o = OraclePenalty::new(w);
            o.nuclear = unfolding_offsets(&dims, row, slice);
            let slices = slice.map_or(Vec::new(), |s| vec![s]);
            (dims, PenaltyTerm::nuclear(vec![row], slices, lambda), o)
        }
        Family::ChainScalar => {
            let dims = random_dims(rng, 1, 3);
            let chain = rng.random_range(1..=dims.len());
            let slices: Vec<usize> = (1..=dims.len()).filter(|&m| m != chain).collect();
            let mut o = OraclePenalty::new(w);
            o.norms = chain_groups(&dims, chain, &slices);
            (dims, PenaltyTerm::chain_tv(chain, slices, lambda), o)
        }
        Family::ChainVector => {
            let dims = random_dims(rng, 2, 3);
            let chain = rng.random_range(1..=dims.len());
            let others: Vec<usize> = (1..=dims.len()).filter(|&m| m != chain).collect();
            let slices = if others.len() == 2 && rng.random_bool(0.5) {
                vec![others[rng.random_range(0..2)]]
            } else {
                Vec::new()
            };
            let mut o = OraclePenalty::new(w);
            o.norms = chain_groups(&dims, chain, &slices);
            (dims, PenaltyTerm::chain_tv(chain, slices, lambda), o)
        }
        Family::SquaredFrobenius => {
            let dims = random_dims(rng, 1, 3);
            let n: usize = dims.iter().product();
            let mut o = OraclePenalty::new(w);
            o.quad = Some(DMatrix::identity(n, n) * w);
            (dims, PenaltyTerm::squared_frobenius(lambda), o)
        }
    };
    let n: usize = dims.iter().product();
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    OracleCase {
        term,
        eta,
        oracle,
        dims,
        x,
    }
}

/// Frobenius distance between the library prox and the oracle.
pub fn oracle_gap(case: &OracleCase) -> f64 {
    let t = atd_core::Tensor::new(case.dims.clone(), case.x.clone()).unwrap();
    let got = case.term.prox(&t, case.eta).unwrap();
    let want = prox_oracle(&case.oracle, &case.x);
    dist(got.data(), &want)
}
