//! Seeded synthetic scenes with known components.
//!
//! * crack: a smooth random background plus a growing crack;
//! * hotspot: a blended thermal background, a fixed hotspot and a hotspot
//!   drifting left to right.
//!
//! Each scene is 30 images of 40 x 40 pixels (mode 1 is time).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{write_tensor, Tensor, TensorError};

pub const IMAGES: usize = 30;
pub const SIDE: usize = 40;

pub const GP_LENGTH_SCALE: f64 = 8.0;
pub const GP_STD: f64 = 0.05;
pub const GP_MEAN: f64 = 0.3;
pub const CRACK_MEAN: f64 = 0.1;
pub const CRACK_VARIANCE: f64 = 0.1;
/// Pixels in the fully grown crack.
pub const CRACK_MAX_LEN: usize = 32;

pub const HOTSPOT_CENTER: (f64, f64) = (20.0, 20.0);
pub const HOTSPOT_VARIANCE: f64 = 10.0;
/// Top-left pixel of the static block (row, column), 1-based.
pub const STATIC_BLOCK: (usize, usize) = (35, 5);
pub const MOVING_ROW: usize = 6;
pub const MOVING_FIRST_COL: usize = 4;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrackScene {
    pub seed: u64,
    pub m: Tensor,
    pub x1_true: Tensor,
    pub x2_true: Tensor,
    /// Crack pixels per image as 1-based (row, column), in path order.
    pub support: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HotspotScene {
    pub seed: u64,
    pub m: Tensor,
    pub x1_true: Tensor,
    pub x2_true: Tensor,
    pub x3_true: Tensor,
    pub t0: DMatrix<f64>,
    pub t1: DMatrix<f64>,
    pub u: Vec<f64>,
}

/// Symmetric square root of the unit-variance squared-exponential kernel
/// on `n` equally spaced points.
fn kernel_sqrt(n: usize, length: f64) -> DMatrix<f64> {
    let k = DMatrix::from_fn(n, n, |a, b| {
        let d = a as f64 - b as f64;
        (-d * d / (2.0 * length * length)).exp()
    });
    let eig = SymmetricEigen::new(k);
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

fn draw_gp_image(rng: &mut ChaCha8Rng, root: &DMatrix<f64>) -> DMatrix<f64> {
    let n = root.nrows();
    let z = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    // Cov(vec(R Z R^T)) = (R R^T) kron (R R^T), the separable 2-D kernel.
    (root * z * root.transpose()).map(|v: f64| GP_MEAN + GP_STD * v)
}

/// A 4-connected path that moves right or one step in a fixed vertical
/// direction, so it never revisits a pixel.
fn draw_crack_path(rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut row = rng.random_range(12..=28usize);
    let mut col = rng.random_range(3..=6usize);
    let down = rng.random_bool(0.5);
    let mut path = vec![(row, col)];
    while path.len() < CRACK_MAX_LEN {
        let vertical = rng.random_bool(0.4);
        let next_row = if down { row + 1 } else { row - 1 };
        if vertical && (1..=SIDE).contains(&next_row) {
            row = next_row;
        } else {
            col += 1;
        }
        path.push((row, col));
    }
    path
}

/// Visible crack length in image `i` (1-based).
pub fn crack_length(i: usize) -> usize {
    (CRACK_MAX_LEN * i).div_ceil(IMAGES)
}

pub fn gen_crack(seed: u64) -> CrackScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = kernel_sqrt(SIDE, GP_LENGTH_SCALE);
    let path = draw_crack_path(&mut rng);
    let noise = Normal::new(CRACK_MEAN, CRACK_VARIANCE.sqrt()).expect("valid normal parameters");
    let dims = [IMAGES, SIDE, SIDE];
    let mut x1 = Tensor::zeros(&dims);
    let mut x2 = Tensor::zeros(&dims);
    let mut support = Vec::with_capacity(IMAGES);
    for i in 1..=IMAGES {
        let bg = draw_gp_image(&mut rng, &root);
        for r in 1..=SIDE {
            for c in 1..=SIDE {
                x1.set(&[i, r, c], bg[(r - 1, c - 1)]);
            }
        }
        let visible = path[..crack_length(i)].to_vec();
        for &(r, c) in &visible {
            x2.set(&[i, r, c], noise.sample(&mut rng));
        }
        support.push(visible);
    }
    CrackScene {
        seed,
        m: x1.add(&x2),
        x1_true: x1,
        x2_true: x2,
        support,
    }
}

/// Gaussian bump centered at `HOTSPOT_CENTER`, rescaled to [0, 1].
pub fn hotspot_t0() -> DMatrix<f64> {
    let (ci, cj) = HOTSPOT_CENTER;
    let dens = DMatrix::from_fn(SIDE, SIDE, |a, b| {
        let di = (a + 1) as f64 - ci;
        let dj = (b + 1) as f64 - cj;
        (-(di * di + dj * dj) / (2.0 * HOTSPOT_VARIANCE)).exp() / (2.0 * std::f64::consts::PI * HOTSPOT_VARIANCE)
    });
    let (lo, hi) = (dens.min(), dens.max());
    dens.map(|v| (v - lo) / (hi - lo))
}

/// `c1 (i + j) + c2` with 0 at the upper-left corner and 1 at the
/// bottom-right one.
pub fn hotspot_t1() -> DMatrix<f64> {
    let c1 = 1.0 / (2 * SIDE - 2) as f64;
    let c2 = -2.0 * c1;
    DMatrix::from_fn(SIDE, SIDE, |a, b| c1 * ((a + 1) + (b + 1)) as f64 + c2)
}

/// Column of the moving block's left edge in image `i` (1-based).
pub fn moving_block_col(i: usize) -> usize {
    (MOVING_FIRST_COL + i - 1).min(SIDE - 1)
}

pub fn gen_hotspot(seed: u64) -> HotspotScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t0 = hotspot_t0();
    let t1 = hotspot_t1();
    let u: Vec<f64> = (0..IMAGES).map(|_| rng.random::<f64>()).collect();
    let dims = [IMAGES, SIDE, SIDE];
    let x1 = Tensor::from_fn(&dims, |ix| {
        let w = u[ix[0] - 1];
        let (r, c) = (ix[1] - 1, ix[2] - 1);
        w * t0[(r, c)] + (1.0 - w) * t1[(r, c)]
    })
    .expect("fixed scene dims");
    let (sr, sc) = STATIC_BLOCK;
    let x2 = Tensor::from_fn(&dims, |ix| {
        f64::from(u8::from((sr..sr + 2).contains(&ix[1]) && (sc..sc + 2).contains(&ix[2])))
    })
    .expect("fixed scene dims");
    let x3 = Tensor::from_fn(&dims, |ix| {
        let c0 = moving_block_col(ix[0]);
        f64::from(u8::from((MOVING_ROW..MOVING_ROW + 2).contains(&ix[1]) && (c0..c0 + 2).contains(&ix[2])))
    })
    .expect("fixed scene dims");
    HotspotScene {
        seed,
        m: x1.add(&x2).add(&x3),
        x1_true: x1,
        x2_true: x2,
        x3_true: x3,
        t0,
        t1,
        u,
    }
}

/// Written next to the tensors of a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub scene: String,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub parameters: BTreeMap<String, f64>,
    /// Data file first, then ground-truth components in order.
    pub files: Vec<String>,
}

pub const SCENE_MANIFEST: &str = "scene.toml";

impl SceneManifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {}", path.display(), e.message()))
    }

    /// Ground-truth file names, in component order.
    pub fn truth_files(&self) -> &[String] {
        self.files.get(1..).unwrap_or(&[])
    }
}

pub trait Scene {
    fn name(&self) -> &'static str;
    fn seed(&self) -> u64;
    fn data(&self) -> &Tensor;
    fn truth(&self) -> Vec<&Tensor>;
    fn parameters(&self) -> BTreeMap<String, f64>;

    /// Writes `m.atd`, `x1_true.atd`, .. and the manifest into `dir`.
    fn write(&self, dir: &Path) -> Result<SceneManifest, SimError> {
        fs::create_dir_all(dir).map_err(|source| SimError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut files = vec!["m.atd".to_string()];
        write_tensor(self.data(), dir.join("m.atd"))?;
        for (k, t) in self.truth().into_iter().enumerate() {
            let name = format!("x{}_true.atd", k + 1);
            write_tensor(t, dir.join(&name))?;
            files.push(name);
        }
        let manifest = SceneManifest {
            scene: self.name().into(),
            seed: self.seed(),
            dims: self.data().dims().to_vec(),
            parameters: self.parameters(),
            files,
        };
        let path = dir.join(SCENE_MANIFEST);
        let text = toml::to_string(&manifest).expect("manifest is plain data");
        fs::write(&path, text).map_err(|source| SimError::Io { path, source })?;
        Ok(manifest)
    }
}

impl Scene for CrackScene {
    fn name(&self) -> &'static str {
        "crack"
    }
    fn seed(&self) -> u64 {
        self.seed
    }
    fn data(&self) -> &Tensor {
        &self.m
    }
    fn truth(&self) -> Vec<&Tensor> {
        vec![&self.x1_true, &self.x2_true]
    }
    fn parameters(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("gp_length_scale".into(), GP_LENGTH_SCALE),
            ("gp_std".into(), GP_STD),
            ("gp_mean".into(), GP_MEAN),
            ("crack_mean".into(), CRACK_MEAN),
            ("crack_variance".into(), CRACK_VARIANCE),
            ("crack_max_len".into(), CRACK_MAX_LEN as f64),
        ])
    }
}

impl Scene for HotspotScene {
    fn name(&self) -> &'static str {
        "hotspot"
    }
    fn seed(&self) -> u64 {
        self.seed
    }
    fn data(&self) -> &Tensor {
        &self.m
    }
    fn truth(&self) -> Vec<&Tensor> {
        vec![&self.x1_true, &self.x2_true, &self.x3_true]
    }
    fn parameters(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("t0_center_row".into(), HOTSPOT_CENTER.0),
            ("t0_center_col".into(), HOTSPOT_CENTER.1),
            ("t0_variance".into(), HOTSPOT_VARIANCE),
            ("static_row".into(), STATIC_BLOCK.0 as f64),
            ("static_col".into(), STATIC_BLOCK.1 as f64),
            ("moving_row".into(), MOVING_ROW as f64),
            ("moving_first_col".into(), MOVING_FIRST_COL as f64),
        ])
    }
}
