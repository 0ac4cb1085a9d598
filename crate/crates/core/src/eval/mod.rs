//! Scoring decompositions against ground truth and grid-search tuning.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admm::AdmmError;
use crate::problem::{ProblemError, ProblemSpec};
use crate::tensor::{Tensor, TensorError};

pub const DEFAULT_TAU: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{0}")]
    Invalid(String),
    #[error("grid point {point:?}: {source}")]
    Problem {
        point: Vec<f64>,
        source: ProblemError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportMetrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of entries where the two supports disagree.
    pub zero_one_loss: usize,
}

fn ratio_or_one(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Compares `{|est| > tau}` with `{|truth| > tau}`. Empty denominators
/// count as perfect, so two empty supports give f1 = 1.
pub fn support_metrics(est: &Tensor, truth: &Tensor, tau: f64) -> Result<SupportMetrics, EvalError> {
    est.ensure_same_shape(truth)?;
    if !(tau > 0.0) {
        return Err(EvalError::Invalid(format!("support threshold must be positive, got {tau}")));
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (&e, &t) in est.data().iter().zip(truth.data()) {
        match (e.abs() > tau, t.abs() > tau) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(SupportMetrics {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        precision: ratio_or_one(tp, tp + fp),
        recall: ratio_or_one(tp, tp + fn_),
        f1: ratio_or_one(2 * tp, 2 * tp + fp + fn_),
        zero_one_loss: fp + fn_,
    })
}

/// `||est - truth||_F`.
pub fn frob_loss(est: &Tensor, truth: &Tensor) -> Result<f64, EvalError> {
    est.ensure_same_shape(truth)?;
    Ok(est.distance(truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    ZeroOne,
    Frobenius,
    Ignore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    kinds: Vec<LossKind>,
    tau: f64,
}

impl LossSpec {
    pub fn new(kinds: Vec<LossKind>, tau: f64) -> Result<Self, EvalError> {
        if kinds.iter().all(|k| *k == LossKind::Ignore) {
            return Err(EvalError::Invalid("every component is ignored by the loss".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(EvalError::Invalid(format!("support threshold must be positive, got {tau}")));
        }
        Ok(Self { kinds, tau })
    }

    pub fn kinds(&self) -> &[LossKind] {
        &self.kinds
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Sum of the per-component losses.
    pub fn score(&self, est: &[Tensor], truth: &[Tensor]) -> Result<f64, EvalError> {
        if est.len() != self.kinds.len() || truth.len() != self.kinds.len() {
            return Err(EvalError::Invalid(format!(
                "loss covers {} components, got {} estimates and {} truths",
                self.kinds.len(),
                est.len(),
                truth.len()
            )));
        }
        let mut total = 0.0;
        for ((k, e), t) in self.kinds.iter().zip(est).zip(truth) {
            total += match k {
                LossKind::ZeroOne => support_metrics(e, t, self.tau)?.zero_one_loss as f64,
                LossKind::Frobenius => frob_loss(e, t)?,
                LossKind::Ignore => 0.0,
            };
        }
        Ok(total)
    }
}

#[derive(Debug, Clone)]
pub struct TrainingScene {
    pub data: Tensor,
    pub truth: Vec<Tensor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    pub names: Vec<String>,
    pub points: Vec<Vec<f64>>,
}

impl LambdaGrid {
    /// Every combination of the axis values, first axis slowest.
    pub fn cartesian(names: Vec<String>, axes: &[Vec<f64>]) -> Result<Self, EvalError> {
        if names.len() != axes.len() {
            return Err(EvalError::Invalid(format!("{} names for {} axes", names.len(), axes.len())));
        }
        if axes.iter().any(Vec::is_empty) {
            return Err(EvalError::Invalid("grid axis without values".into()));
        }
        let mut points = vec![Vec::new()];
        for axis in axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        Ok(Self { names, points })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub lambda: Vec<f64>,
    /// `+inf` where the solve failed numerically.
    pub scene_scores: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub names: Vec<String>,
    pub rows: Vec<ScoreRow>,
    pub best_index: usize,
}

impl TuneResult {
    pub fn best(&self) -> &ScoreRow {
        &self.rows[self.best_index]
    }

    /// Columns: lambda names, `scene_1..`, `total`.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let scenes = self.rows.first().map_or(0, |r| r.scene_scores.len());
        let mut header = self.names.clone();
        header.extend((1..=scenes).map(|s| format!("scene_{s}")));
        header.push("total".into());
        out.write_record(&header)?;
        for r in &self.rows {
            let rec: Vec<String> = r
                .lambda
                .iter()
                .chain(&r.scene_scores)
                .chain(std::iter::once(&r.total))
                .map(|v| v.to_string())
                .collect();
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Solves every grid point on every scene and picks the smallest total
/// loss, breaking ties by the lexicographically smallest lambda.
///
/// `template(data, lambda)` builds the problem for one cell. Solver
/// failures score `+inf`; template or validation errors abort.
pub fn grid_tune<F>(
    template: F,
    scenes: &[TrainingScene],
    grid: &LambdaGrid,
    losses: &LossSpec,
) -> Result<TuneResult, EvalError>
where
    F: Fn(&Tensor, &[f64]) -> Result<ProblemSpec, ProblemError> + Sync,
{
    if scenes.is_empty() {
        return Err(EvalError::Invalid("grid search needs at least one training scene".into()));
    }
    if grid.points.is_empty() {
        return Err(EvalError::Invalid("empty grid".into()));
    }
    if let Some(p) = grid.points.iter().find(|p| p.len() != grid.names.len()) {
        return Err(EvalError::Invalid(format!("grid point {p:?} does not match {} names", grid.names.len())));
    }
    let cells: Vec<(usize, usize)> = (0..grid.points.len())
        .flat_map(|g| (0..scenes.len()).map(move |s| (g, s)))
        .collect();
    let scores: Vec<Result<f64, EvalError>> = cells
        .par_iter()
        .map(|&(g, s)| {
            let point = &grid.points[g];
            let scene = &scenes[s];
            let wrap = |source| EvalError::Problem {
                point: point.clone(),
                source,
            };
            let problem = template(&scene.data, point).and_then(|sp| sp.validate()).map_err(wrap)?;
            match problem.solve() {
                Ok(sol) => {
                    let v = losses.score(&sol.components, &scene.truth)?;
                    Ok(if v.is_nan() { f64::INFINITY } else { v })
                }
                Err(AdmmError::Invalid(msg)) => Err(wrap(ProblemError::Solver(AdmmError::Invalid(msg)))),
                Err(_) => Ok(f64::INFINITY),
            }
        })
        .collect();
    let mut it = scores.into_iter();
    let mut rows = Vec::with_capacity(grid.points.len());
    for point in &grid.points {
        let scene_scores = it.by_ref().take(scenes.len()).collect::<Result<Vec<f64>, _>>()?;
        let total = scene_scores.iter().sum();
        rows.push(ScoreRow {
            lambda: point.clone(),
            scene_scores,
            total,
        });
    }
    let best_index = (0..rows.len())
        .min_by(|&a, &b| {
            rows[a]
                .total
                .total_cmp(&rows[b].total)
                .then_with(|| lex_cmp(&rows[a].lambda, &rows[b].lambda))
        })
        .expect("grid is nonempty");
    Ok(TuneResult {
        names: grid.names.clone(),
        rows,
        best_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[f64]) -> Tensor {
        Tensor::new(vec![v.len()], v.to_vec()).unwrap()
    }

    #[test]
    fn perfect_and_empty_estimates() {
        let truth = t(&[0.0, 1.0, -2.0, 0.0]);
        let m = support_metrics(&truth, &truth, DEFAULT_TAU).unwrap();
        assert_eq!((m.f1, m.zero_one_loss), (1.0, 0));
        let m = support_metrics(&t(&[0.0; 4]), &truth, DEFAULT_TAU).unwrap();
        assert_eq!((m.recall, m.f1, m.zero_one_loss), (0.0, 0.0, 2));
        let m = support_metrics(&t(&[0.0; 4]), &t(&[0.0; 4]), DEFAULT_TAU).unwrap();
        assert_eq!(m.f1, 1.0);
        assert!(support_metrics(&t(&[0.0; 3]), &truth, DEFAULT_TAU).is_err());
        assert!(support_metrics(&truth, &truth, 0.0).is_err());
    }

    #[test]
    fn shifted_block() {
        // 3x3 image, truth block at rows 1-2 cols 1-2, estimate shifted one column
        let img = |c0: usize| {
            Tensor::from_fn(&[3, 3], |i| if i[0] <= 2 && (c0..c0 + 2).contains(&i[1]) { 1.0 } else { 0.0 }).unwrap()
        };
        let m = support_metrics(&img(2), &img(1), DEFAULT_TAU).unwrap();
        // overlap {(1,2),(2,2)}; est extra {(1,3),(2,3)}; missed {(1,1),(2,1)}
        assert_eq!((m.true_positives, m.false_positives, m.false_negatives), (2, 2, 2));
        assert_eq!(m.f1, 0.5);
        assert_eq!(m.zero_one_loss, 4);
    }

    #[test]
    fn frobenius_offset() {
        let a = t(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(frob_loss(&a, &a).unwrap(), 0.0);
        let b = a.map(|v| v + 0.5);
        assert!((frob_loss(&b, &a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn loss_spec_rules() {
        assert!(LossSpec::new(vec![LossKind::Ignore, LossKind::Ignore], 1e-3).is_err());
        let l = LossSpec::new(vec![LossKind::Ignore, LossKind::ZeroOne, LossKind::Frobenius], 1e-3).unwrap();
        let z = t(&[0.0, 0.0]);
        let one = t(&[1.0, 0.0]);
        let s = l
            .score(&[one.clone(), one.clone(), one.clone()], &[z.clone(), z.clone(), z.clone()])
            .unwrap();
        assert_eq!(s, 2.0);
    }

    #[test]
    fn cartesian_order() {
        let g = LambdaGrid::cartesian(vec!["a".into(), "b".into()], &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(g.points, vec![vec![1.0, 3.0], vec![1.0, 4.0], vec![2.0, 3.0], vec![2.0, 4.0]]);
    }

    #[test]
    fn lexicographic_tie_break() {
        assert_eq!(lex_cmp(&[1.0, 5.0], &[2.0, 0.0]), Ordering::Less);
        assert_eq!(lex_cmp(&[1.0, 5.0], &[1.0, 0.0]), Ordering::Greater);
    }
}
