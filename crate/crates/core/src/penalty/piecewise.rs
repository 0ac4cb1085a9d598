use rayon::prelude::*;

use super::{mode_layout, Grouping, Neighborhood, PenaltyError, PiecewiseForm, ProxOperator, Result};
use crate::tensor::Tensor;

/// Accuracy target of the vector-chain dual solver, relative to `max(1, ||x||)`.
pub const DUAL_TOL: f64 = 1e-8;

fn l2(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|a| a * a).sum::<f64>().sqrt()
}

fn chain_grouping(dims: &[usize], chain_mode: usize, slice_modes: &[usize]) -> Result<(Grouping, usize, usize)> {
    let mut trailing = vec![chain_mode];
    trailing.extend_from_slice(slice_modes);
    let order = mode_layout(dims.len(), &[], &trailing);
    let len = dims[chain_mode - 1];
    let width: usize = order[..order.len() - trailing.len()]
        .iter()
        .map(|&m| dims[m - 1])
        .product();
    Ok((Grouping::new(dims, &order, width * len)?, width, len))
}

pub(crate) fn evaluate(t: &Tensor, form: &PiecewiseForm) -> Result<f64> {
    match form {
        PiecewiseForm::Chain {
            chain_mode,
            slice_modes,
        } => {
            let (g, width, len) = chain_grouping(t.dims(), *chain_mode, slice_modes)?;
            let buf = g.gather(t.data());
            let mut total = 0.0;
            for chain in buf.chunks(g.chunk()) {
                for c in 0..len - 1 {
                    let (a, b) = (&chain[c * width..(c + 1) * width], &chain[(c + 1) * width..(c + 2) * width]);
                    total += l2(a.iter().zip(b).map(|(u, v)| v - u));
                }
            }
            Ok(total)
        }
        PiecewiseForm::Graph {
            sub_modes,
            slice_modes,
            neighborhood,
        } => graph_evaluate(t, sub_modes, slice_modes, *neighborhood),
    }
}

/// Neighbor offsets with exactly one of `delta`, `-delta` kept, so every
/// unordered pair is visited once.
fn half_offsets(k: usize, nb: Neighborhood) -> Vec<Vec<isize>> {
    match nb {
        Neighborhood::Rook => (0..k)
            .map(|s| (0..k).map(|j| (j == s) as isize).collect())
            .collect(),
        Neighborhood::Queen => {
            let mut out = Vec::new();
            let total = 3usize.pow(k as u32);
            for code in 0..total {
                let mut c = code;
                let delta: Vec<isize> = (0..k)
                    .map(|_| {
                        let v = (c % 3) as isize - 1;
                        c /= 3;
                        v
                    })
                    .collect();
                if delta.iter().find(|&&v| v != 0) == Some(&1) {
                    out.push(delta);
                }
            }
            out
        }
    }
}

fn graph_evaluate(t: &Tensor, sub_modes: &[usize], slice_modes: &[usize], nb: Neighborhood) -> Result<f64> {
    let dims = t.dims();
    let order = mode_layout(dims.len(), sub_modes, slice_modes);
    let width: usize = sub_modes.iter().map(|&m| dims[m - 1]).product();
    let grid: Vec<usize> = order[sub_modes.len()..order.len() - slice_modes.len()]
        .iter()
        .map(|&m| dims[m - 1])
        .collect();
    let npoints: usize = grid.iter().product();
    let g = Grouping::new(dims, &order, width * npoints)?;
    let buf = g.gather(t.data());
    let offsets = half_offsets(grid.len(), nb);
    let mut strides = vec![1usize; grid.len()];
    for k in 1..grid.len() {
        strides[k] = strides[k - 1] * grid[k - 1];
    }
    let mut total = 0.0;
    for chunk in buf.chunks(g.chunk()) {
        for p in 0..npoints {
            let idx: Vec<usize> = (0..grid.len()).map(|k| p / strides[k] % grid[k]).collect();
            for delta in &offsets {
                let mut q = 0usize;
                let inside = idx.iter().zip(delta).zip(&grid).zip(&strides).all(|(((&i, &dl), &n), &s)| {
                    let j = i as isize + dl;
                    if j < 0 || j >= n as isize {
                        return false;
                    }
                    q += j as usize * s;
                    true
                });
                if inside {
                    let (a, b) = (&chunk[p * width..(p + 1) * width], &chunk[q * width..(q + 1) * width]);
                    total += l2(a.iter().zip(b).map(|(u, v)| u - v));
                }
            }
        }
    }
    Ok(total)
}

/// Exact solution of `min_x 1/2 ||x - y||^2 + lambda sum |x_{k+1} - x_k|`
/// by Condat's direct algorithm; writes into `out`.
pub fn tv1d_denoise(input: &[f64], out: &mut [f64], lambda: f64) {
    let n = input.len();
    assert_eq!(out.len(), n);
    if n == 0 {
        return;
    }
    if lambda <= 0.0 {
        out.copy_from_slice(input);
        return;
    }
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let mut umin = lambda;
    let mut umax = -lambda;
    let mut vmin = input[0] - lambda;
    let mut vmax = input[0] + lambda;
    let twolambda = 2.0 * lambda;
    let minlambda = -lambda;
    loop {
        while k == n - 1 {
            if umin < 0.0 {
                loop {
                    out[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                vmin = input[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                loop {
                    out[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k0;
                vmax = input[k0];
                umax = minlambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                loop {
                    out[k0] = vmin;
                    k0 += 1;
                    if k0 > k {
                        break;
                    }
                }
                return;
            }
        }
        umin += input[k + 1] - vmin;
        if umin < minlambda {
            loop {
                out[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmin = input[k0];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = minlambda;
            continue;
        }
        umax += input[k + 1] - vmax;
        if umax > lambda {
            loop {
                out[k0] = vmax;
                k0 += 1;
                if k0 > kplus {
                    break;
                }
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmax = input[k0];
            vmin = vmax - twolambda;
            umin = lambda;
            umax = minlambda;
            continue;
        }
        k += 1;
        if umin >= lambda {
            kminus = k;
            vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
            umin = lambda;
        }
        if umax <= minlambda {
            kplus = k;
            vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
            umax = minlambda;
        }
    }
}

pub(crate) fn chain_prox(
    dims: &[usize],
    chain_mode: usize,
    slice_modes: &[usize],
    w: f64,
) -> Result<Box<dyn ProxOperator>> {
    let (grouping, width, len) = chain_grouping(dims, chain_mode, slice_modes)?;
    if width == 1 {
        return Ok(Box::new(ScalarChainProx { grouping, w }));
    }
    let chains = grouping_count(&grouping, dims);
    let n = width * len;
    Ok(Box::new(VectorChainProx {
        grouping,
        width,
        len,
        w,
        tol: DUAL_TOL,
        max_iters: (10 * n).max(1000),
        duals: vec![vec![0.0; width * (len - 1)]; chains],
    }))
}

fn grouping_count(g: &Grouping, dims: &[usize]) -> usize {
    dims.iter().product::<usize>() / g.chunk()
}

struct ScalarChainProx {
    grouping: Grouping,
    w: f64,
}

impl ProxOperator for ScalarChainProx {
    fn apply(&mut self, x: &mut Tensor) -> Result<()> {
        let w = self.w;
        let mut buf = self.grouping.gather(x.data());
        buf.par_chunks_mut(self.grouping.chunk()).for_each(|chain| {
            let input = chain.to_vec();
            tv1d_denoise(&input, chain, w);
        });
        self.grouping.scatter(&buf, x.data_mut());
        Ok(())
    }
}

/// Group fused lasso along a chain of vectors, solved on the dual
/// `min_p 1/2 ||x - D^T p||^2  s.t. ||p_c|| <= w` by accelerated projected
/// gradient with adaptive restart. The dual variables persist between calls
/// as a warm start.
struct VectorChainProx {
    grouping: Grouping,
    width: usize,
    len: usize,
    w: f64,
    tol: f64,
    max_iters: usize,
    duals: Vec<Vec<f64>>,
}

impl ProxOperator for VectorChainProx {
    fn apply(&mut self, x: &mut Tensor) -> Result<()> {
        let mut buf = self.grouping.gather(x.data());
        let (width, len, w, tol, max_iters) = (self.width, self.len, self.w, self.tol, self.max_iters);
        buf.par_chunks_mut(self.grouping.chunk())
            .zip(self.duals.par_iter_mut())
            .try_for_each(|(chain, p)| group_fused_prox(chain, p, width, len, w, tol, max_iters))?;
        self.grouping.scatter(&buf, x.data_mut());
        Ok(())
    }
}

/// `y = x - D^T p` with `(D y)_c = y_{c+1} - y_c`.
fn primal_from_dual(x: &[f64], p: &[f64], y: &mut [f64], width: usize, len: usize) {
    y.copy_from_slice(x);
    for c in 0..len - 1 {
        for e in 0..width {
            let v = p[c * width + e];
            y[c * width + e] += v;
            y[(c + 1) * width + e] -= v;
        }
    }
}

fn project_balls(p: &mut [f64], width: usize, w: f64) {
    for block in p.chunks_mut(width) {
        let n = l2(block.iter().copied());
        if n > w {
            let s = w / n;
            block.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Duality gap `sum_c w ||(Dy)_c|| - <p_c, (Dy)_c>` and the scale of its
/// first sum.
fn duality_gap(p: &[f64], y: &[f64], width: usize, len: usize, w: f64) -> (f64, f64) {
    let (mut gap, mut scale) = (0.0, 0.0);
    for c in 0..len - 1 {
        let mut nsq = 0.0;
        let mut dot = 0.0;
        for e in 0..width {
            let d = y[(c + 1) * width + e] - y[c * width + e];
            nsq += d * d;
            dot += p[c * width + e] * d;
        }
        let t = w * nsq.sqrt();
        gap += t - dot;
        scale += t;
    }
    (gap, scale)
}

fn group_fused_prox(
    chain: &mut [f64],
    p: &mut Vec<f64>,
    width: usize,
    len: usize,
    w: f64,
    tol: f64,
    max_iters: usize,
) -> Result<()> {
    if w == 0.0 || len < 2 {
        p.iter_mut().for_each(|v| *v = 0.0);
        return Ok(());
    }
    let x = chain.to_vec();
    let xnorm = l2(x.iter().copied());
    let target = {
        let a = tol * xnorm.max(1.0);
        0.5 * a * a
    };
    let step = 0.25;
    project_balls(p, width, w);
    let mut z = p.clone();
    let mut p_prev = p.clone();
    let mut y = vec![0.0; x.len()];
    let mut theta = 1.0f64;
    let mut last_gap = f64::INFINITY;
    for it in 0..max_iters {
        primal_from_dual(&x, &z, &mut y, width, len);
        p_prev.copy_from_slice(p);
        for c in 0..len - 1 {
            for e in 0..width {
                let g = y[(c + 1) * width + e] - y[c * width + e];
                p[c * width + e] = z[c * width + e] + step * g;
            }
        }
        project_balls(p, width, w);
        // gradient restart: drop momentum when it points uphill
        let uphill: f64 = z
            .iter()
            .zip(p.iter())
            .zip(p_prev.iter())
            .map(|((z, p), q)| (z - p) * (p - q))
            .sum();
        let theta_next = if uphill > 0.0 {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt())
        };
        let beta = if uphill > 0.0 { 0.0 } else { (theta - 1.0) / theta_next };
        theta = theta_next;
        for ((z, &p), &q) in z.iter_mut().zip(p.iter()).zip(p_prev.iter()) {
            *z = p + beta * (p - q);
        }
        if it % 8 == 7 || it + 1 == max_iters {
            primal_from_dual(&x, p, &mut y, width, len);
            let (gap, scale) = duality_gap(p, &y, width, len, w);
            last_gap = gap;
            // y carries rounding of order eps ||x||, which the gap sees
            // through w ||Dy||
            let floor = 64.0 * f64::EPSILON * (scale + w * xnorm);
            if gap <= target || gap <= floor {
                chain.copy_from_slice(&y);
                return Ok(());
            }
        }
    }
    Err(PenaltyError::Numerical {
        context: "group fused lasso dual solve".into(),
        detail: format!(
            "duality gap {last_gap:.3e} above target {target:.3e} after {max_iters} iterations"
        ),
    })
}
