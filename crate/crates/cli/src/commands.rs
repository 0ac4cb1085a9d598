use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use atd_core::eval::{
    frob_loss, grid_tune, support_metrics, LambdaGrid, LossKind, LossSpec, TrainingScene,
};
use atd_core::problem::{parse_config, ProblemConfig, ProblemSpec};
use atd_core::simgen::{gen_crack, gen_hotspot, Scene, SceneManifest, SCENE_MANIFEST};
use atd_core::tensor::{export_pgm, read_csv_slices, read_tensor, write_tensor};
use atd_core::Tensor;

use crate::error::{io_err, tensor_err, CliError, Result};
use crate::manifest::{Convergence, HashedFile, OutputComponent, RunManifest, Timings, RUN_MANIFEST};

#[derive(Debug, Clone, Default)]
pub struct SolverOverrides {
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub record_objective: bool,
}

impl SolverOverrides {
    fn apply(&self, spec: &mut ProblemSpec) {
        if let Some(n) = self.max_iters {
            spec.options.max_iters = n;
        }
        if let Some(t) = self.tol {
            spec.options.stop_tol = t;
        }
        if self.record_objective {
            spec.options.record_objective = true;
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir.display(), e))
}

fn load_tensor(path: &Path) -> Result<Tensor> {
    read_tensor(path).map_err(|e| tensor_err(path.display(), e))
}

/// One `.atd` file, or CSV slices stacked along mode 1.
fn load_input(paths: &[PathBuf]) -> Result<Tensor> {
    let is_csv = |p: &PathBuf| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if paths.iter().all(is_csv) {
        read_csv_slices(paths).map_err(|e| tensor_err("csv input", e))
    } else if paths.len() == 1 {
        load_tensor(&paths[0])
    } else {
        Err(CliError::Validation(
            "several inputs are only accepted as CSV slices".into(),
        ))
    }
}

fn load_config(path: &Path) -> Result<(ProblemConfig, HashedFile)> {
    let bytes = fs::read(path).map_err(|e| io_err(path.display(), e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Validation(format!("{}: config is not UTF-8", path.display())))?;
    let config = parse_config(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok((config, HashedFile::of_bytes(path, &bytes)))
}

fn component_file(k: usize, name: &str) -> String {
    let clean: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("x{}_{clean}.atd", k + 1)
}

pub fn simulate(example: &str, seed: u64, out: &Path, pgm: bool) -> Result<()> {
    let scene: Box<dyn Scene> = match example {
        "crack" => Box::new(gen_crack(seed)),
        "hotspot" => Box::new(gen_hotspot(seed)),
        other => {
            return Err(CliError::Validation(format!(
                "unknown example \"{other}\" (expected crack or hotspot)"
            )))
        }
    };
    let manifest = scene.write(out).map_err(|e| io_err(out.display(), e))?;
    if pgm {
        let mut tensors = vec![scene.data()];
        tensors.extend(scene.truth());
        for (t, f) in tensors.into_iter().zip(&manifest.files) {
            let dir = out.join("pgm").join(f.trim_end_matches(".atd"));
            export_pgm(t, 1, &dir).map_err(|e| tensor_err(dir.display(), e))?;
        }
    }
    println!("wrote {} scene (seed {seed}) to {}: {}", example, out.display(), manifest.files.join(", "));
    Ok(())
}

pub struct DecomposeArgs<'a> {
    pub config: &'a Path,
    pub inputs: &'a [PathBuf],
    pub out: &'a Path,
    pub overrides: SolverOverrides,
    pub pgm: bool,
    pub workers: usize,
}

pub fn decompose(args: DecomposeArgs<'_>) -> Result<()> {
    let t0 = Instant::now();
    let (config, config_hash) = load_config(args.config)?;
    let inputs: Vec<PathBuf> = if args.inputs.is_empty() {
        match &config.data.path {
            Some(p) => vec![args.config.parent().unwrap_or(Path::new(".")).join(p)],
            None => {
                return Err(CliError::Validation(
                    "no input given: pass --input or set data.path in the config".into(),
                ))
            }
        }
    } else {
        args.inputs.to_vec()
    };
    let data = load_input(&inputs)?;
    let input_hashes = inputs.iter().map(|p| HashedFile::of(p)).collect::<Result<Vec<_>>>()?;
    config
        .check_dims(data.dims())
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.config.display())))?;
    let mut spec = config.into_spec(data);
    args.overrides.apply(&mut spec);
    let problem = spec.validate()?;
    let load_secs = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let solution = problem.solve()?;
    let solve_secs = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    create_dir(args.out)?;
    let mut components = Vec::new();
    for (k, (name, x)) in problem.component_names().iter().zip(&solution.components).enumerate() {
        let file = component_file(k, name);
        let path = args.out.join(&file);
        write_tensor(x, &path).map_err(|e| tensor_err(path.display(), e))?;
        if args.pgm {
            let dir = args.out.join("pgm").join(file.trim_end_matches(".atd"));
            export_pgm(x, 1, &dir).map_err(|e| tensor_err(dir.display(), e))?;
        }
        components.push(OutputComponent {
            name: name.to_string(),
            file,
        });
    }
    let diagnostics = "diagnostics.csv".to_string();
    let diag_path = args.out.join(&diagnostics);
    let f = fs::File::create(&diag_path).map_err(|e| io_err(diag_path.display(), e))?;
    solution
        .write_diagnostics_csv(io::BufWriter::new(f))
        .map_err(|e| io_err(diag_path.display(), e))?;
    let last = solution.history.last();
    let convergence = Convergence {
        converged: solution.converged,
        iterations: solution.iterations,
        u_residual: last.map_or(f64::NAN, |r| r.u_residual),
        z_residual: last.map_or(f64::NAN, |r| r.z_residual),
        objective: solution.objective,
        feasibility_gap: solution.feasibility_gap(problem.data()),
    };
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        workers: args.workers,
        config: config_hash,
        inputs: input_hashes,
        out_dir: args.out.to_path_buf(),
        components,
        diagnostics,
        timings: Timings {
            load_secs,
            solve_secs,
            write_secs: t2.elapsed().as_secs_f64(),
        },
        convergence: convergence.clone(),
    };
    manifest.write(args.out)?;
    let summary = format!(
        "{} iterations, u residual {:.3e}, z residual {:.3e}, objective {:.6e}",
        convergence.iterations, convergence.u_residual, convergence.z_residual, convergence.objective
    );
    if convergence.converged {
        println!("converged after {summary}; wrote {}", args.out.display());
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "stopped at the iteration cap after {summary}; partial results written to {}",
            args.out.display()
        )))
    }
}

/// A run or scene directory expands to its listed component files.
fn expand_tensor_list(paths: &[PathBuf], truth: bool) -> Result<Vec<PathBuf>> {
    if let [dir] = paths {
        if dir.is_dir() {
            if truth {
                let m = SceneManifest::read(dir.join(SCENE_MANIFEST)).map_err(CliError::Io)?;
                return Ok(m.truth_files().iter().map(|f| dir.join(f)).collect());
            }
            if dir.join(RUN_MANIFEST).exists() {
                let m = RunManifest::read(dir)?;
                return Ok(m.components.iter().map(|c| dir.join(&c.file)).collect());
            }
            return Err(CliError::Validation(format!("{} holds no {RUN_MANIFEST}", dir.display())));
        }
    }
    Ok(paths.to_vec())
}

pub fn evaluate(est: &[PathBuf], truth: &[PathBuf], tau: f64, out: Option<&Path>) -> Result<()> {
    let est = expand_tensor_list(est, false)?;
    let truth = expand_tensor_list(truth, true)?;
    if est.len() != truth.len() || est.is_empty() {
        return Err(CliError::Validation(format!(
            "{} estimates for {} ground-truth tensors",
            est.len(),
            truth.len()
        )));
    }
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "component", "estimate", "truth", "precision", "recall", "f1", "zero_one_loss", "frobenius",
        ])
        .map_err(|e| io_err("metrics", e))?;
        for (k, (e, t)) in est.iter().zip(&truth).enumerate() {
            let (et, tt) = (load_tensor(e)?, load_tensor(t)?);
            let m = support_metrics(&et, &tt, tau)?;
            let f = frob_loss(&et, &tt)?;
            w.write_record([
                (k + 1).to_string(),
                e.display().to_string(),
                t.display().to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.f1.to_string(),
                m.zero_one_loss.to_string(),
                f.to_string(),
            ])
            .map_err(|e| io_err("metrics", e))?;
        }
        w.flush().map_err(|e| io_err("metrics", e))?;
    }
    io::stdout().write_all(&buf).map_err(|e| io_err("stdout", e))?;
    if let Some(path) = out {
        fs::write(path, &buf).map_err(|e| io_err(path.display(), e))?;
    }
    Ok(())
}

/// `NAME=v1,v2,..` where NAME is `<component>.<term>`, the component given
/// by name or 1-based position and the term by 1-based position.
pub fn parse_grid_axis(spec: &str) -> Result<(String, Vec<f64>)> {
    let bad = |why: &str| CliError::Validation(format!("grid axis \"{spec}\": {why}"));
    let (name, values) = spec.split_once('=').ok_or_else(|| bad("expected NAME=v1,v2,.."))?;
    let vals = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad("values must be numbers")))
        .collect::<Result<Vec<_>>>()?;
    if vals.is_empty() {
        return Err(bad("no values"));
    }
    Ok((name.trim().to_string(), vals))
}

fn resolve_term(config: &ProblemConfig, name: &str) -> Result<(usize, usize)> {
    let bad = |why: String| CliError::Validation(format!("grid name \"{name}\": {why}"));
    let (comp, term) = name
        .rsplit_once('.')
        .ok_or_else(|| bad("expected <component>.<term>".into()))?;
    let ci = match comp.parse::<usize>() {
        Ok(i) if i >= 1 && i <= config.components.len() => i - 1,
        Ok(i) => return Err(bad(format!("no component {i}"))),
        Err(_) => config
            .components
            .iter()
            .position(|c| c.name == comp)
            .ok_or_else(|| bad(format!("no component named {comp}")))?,
    };
    let ti = term
        .parse::<usize>()
        .ok()
        .filter(|&t| t >= 1 && t <= config.components[ci].terms.len())
        .ok_or_else(|| bad(format!("component {comp} has no term {term}")))?;
    Ok((ci, ti - 1))
}

fn parse_losses(text: Option<&str>, components: usize) -> Result<Vec<LossKind>> {
    let Some(t) = text else {
        return Ok(vec![LossKind::ZeroOne; components]);
    };
    let kinds = t
        .split(',')
        .map(|k| match k.trim() {
            "zero_one" => Ok(LossKind::ZeroOne),
            "frobenius" => Ok(LossKind::Frobenius),
            "ignore" => Ok(LossKind::Ignore),
            other => Err(CliError::Validation(format!(
                "unknown loss \"{other}\" (expected zero_one, frobenius or ignore)"
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    if kinds.len() != components {
        return Err(CliError::Validation(format!(
            "{} losses for {components} components",
            kinds.len()
        )));
    }
    Ok(kinds)
}

pub struct TuneArgs<'a> {
    pub config: &'a Path,
    pub scenes: &'a [PathBuf],
    pub grid: &'a [String],
    pub losses: Option<&'a str>,
    pub tau: f64,
    pub out: Option<&'a Path>,
    pub overrides: SolverOverrides,
}

pub fn tune(args: TuneArgs<'_>) -> Result<()> {
    let (config, _) = load_config(args.config)?;
    if args.scenes.is_empty() {
        return Err(CliError::Validation("tuning needs at least one --scene".into()));
    }
    if args.grid.is_empty() {
        return Err(CliError::Validation("empty grid: pass at least one --grid axis".into()));
    }
    let mut names = Vec::new();
    let mut axes = Vec::new();
    let mut targets = Vec::new();
    for g in args.grid {
        let (name, vals) = parse_grid_axis(g)?;
        targets.push(resolve_term(&config, &name)?);
        names.push(name);
        axes.push(vals);
    }
    let grid = LambdaGrid::cartesian(names, &axes)?;
    let losses = LossSpec::new(parse_losses(args.losses, config.components.len())?, args.tau)?;
    let mut scenes = Vec::new();
    for dir in args.scenes {
        let m = SceneManifest::read(dir.join(SCENE_MANIFEST)).map_err(CliError::Io)?;
        let data = load_tensor(&dir.join(&m.files[0]))?;
        let truth = m
            .truth_files()
            .iter()
            .map(|f| load_tensor(&dir.join(f)))
            .collect::<Result<Vec<_>>>()?;
        scenes.push(TrainingScene { data, truth });
    }
    let template = |data: &Tensor, lambda: &[f64]| {
        let mut c = config.clone();
        for (&(ci, ti), &l) in targets.iter().zip(lambda) {
            c.components[ci].terms[ti].lambda = l;
        }
        let mut spec = c.into_spec(data.clone());
        args.overrides.apply(&mut spec);
        Ok(spec)
    };
    let result = grid_tune(template, &scenes, &grid, &losses)?;
    let mut buf = Vec::new();
    result.write_csv(&mut buf).map_err(|e| io_err("score table", e))?;
    io::stdout().write_all(&buf).map_err(|e| io_err("stdout", e))?;
    if let Some(dir) = args.out {
        create_dir(dir)?;
        let p = dir.join("scores.csv");
        fs::write(&p, &buf).map_err(|e| io_err(p.display(), e))?;
        let mut best = config.clone();
        for (&(ci, ti), &l) in targets.iter().zip(&result.best().lambda) {
            best.components[ci].terms[ti].lambda = l;
        }
        let p = dir.join("best.toml");
        fs::write(&p, best.to_toml()).map_err(|e| io_err(p.display(), e))?;
    }
    let best = result.best();
    let pairs: Vec<String> = result
        .names
        .iter()
        .zip(&best.lambda)
        .map(|(n, v)| format!("{n}={v}"))
        .collect();
    println!("best: {} (total loss {})", pairs.join(" "), best.total);
    Ok(())
}

pub fn export(inputs: &[PathBuf], out: &Path, mode: usize) -> Result<()> {
    if inputs.is_empty() {
        return Err(CliError::Validation("nothing to export: pass --input".into()));
    }
    for p in inputs {
        let t = load_tensor(p)?;
        let stem = p.file_stem().map_or("tensor".into(), |s| s.to_string_lossy().into_owned());
        let dir = out.join(stem);
        let files = export_pgm(&t, mode, &dir).map_err(|e| tensor_err(dir.display(), e))?;
        println!("{}: {} slices to {}", p.display(), files.len(), dir.display());
    }
    Ok(())
}
