//! Run orchestration and file output.
//!
//! A run writes one CSV snapshot per output time, a JSON diagnostics
//! report and a JSON summary listing every file produced. Outputs are
//! byte-deterministic: the same configuration always produces identical
//! files, so wall-clock time is reported to the caller but never
//! written to disk.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::config::RunConfig;
use crate::diagnostics::{l1_distance, DiagnosticsSummary};
use crate::error::{Error, Result};
use crate::grid::DensityField;
use crate::local_reference::{simulate_local, LocalConfig};
use crate::scheme::{simulate, ModelConfig, ModelVariant, Solver, Trajectory};

/// Where and whether to write results.
#[derive(Debug, Clone)]
pub struct OutputOptions {
    pub out_dir: PathBuf,
    /// Validate and report the plan without simulating or writing.
    pub dry_run: bool,
    /// Record and write per-step diagnostics.
    pub diagnostics: bool,
}

impl OutputOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        OutputOptions {
            out_dir: out_dir.into(),
            dry_run: false,
            diagnostics: true,
        }
    }
}

/// What a run produced; serialized as `summary.json` except for the
/// wall time, which would break output determinism.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub model: String,
    pub n_cells: usize,
    pub dt: f64,
    pub steps: usize,
    pub output_times: Vec<f64>,
    pub files: Vec<String>,
    pub diagnostics: Option<DiagnosticsSummary>,
    #[serde(skip)]
    pub wall_time: Duration,
}

fn run_name(cfg: &RunConfig) -> String {
    cfg.name.clone().unwrap_or_else(|| "run".into())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Snapshot CSV with full-precision floats; 17 significant digits make
/// the round trip through text exact.
fn snapshot_csv(field: &DensityField, centers: &[f64]) -> String {
    let mut out = String::with_capacity(field.values.len() * 50 + 8);
    out.push_str("x,rho\n");
    for (x, v) in centers.iter().zip(&field.values) {
        out.push_str(&format!("{x:.16e},{v:.16e}\n"));
    }
    out
}

fn time_tag(t: f64) -> String {
    format!("{t:.6}")
}

/// Execute one simulation and write its artifacts.
pub fn run(cfg: &RunConfig, opts: &OutputOptions) -> Result<RunSummary> {
    let model = cfg.build()?;
    let mut model = model;
    model.diagnostics.enabled = opts.diagnostics;
    model.diagnostics.record_steps = opts.diagnostics;
    let solver = Solver::new(&model)?;
    let name = run_name(cfg);
    let label = model.variant.to_string();

    if opts.dry_run {
        let t_end = model
            .output_times
            .iter()
            .fold(model.t_end, |m, &t| m.max(t));
        return Ok(RunSummary {
            name,
            model: label,
            n_cells: model.grid.n_cells,
            dt: solver.cfl_dt,
            steps: (t_end / solver.cfl_dt).ceil() as usize,
            output_times: model.output_times.clone(),
            files: Vec::new(),
            diagnostics: None,
            wall_time: Duration::ZERO,
        });
    }

    let started = Instant::now();
    let (trajectory, report) = simulate(&model)?;
    let wall_time = started.elapsed();

    ensure_dir(&opts.out_dir)?;
    let centers: Vec<f64> = model.grid.cell_centers().collect();
    let mut files = Vec::new();
    for (t, snap) in trajectory.times.iter().zip(&trajectory.snapshots) {
        let file = format!("snapshot_{label}_t{}.csv", time_tag(*t));
        write_bytes(&opts.out_dir.join(&file), snapshot_csv(snap, &centers).as_bytes())?;
        files.push(file);
    }
    if opts.diagnostics {
        let file = format!("diagnostics_{label}.json");
        let json = serde_json::to_vec_pretty(&report)?;
        write_bytes(&opts.out_dir.join(&file), &json)?;
        files.push(file);
    }

    let summary = RunSummary {
        name,
        model: label,
        n_cells: model.grid.n_cells,
        dt: solver.cfl_dt,
        steps: report.summary.steps,
        output_times: trajectory.times.clone(),
        files: {
            let mut f = files.clone();
            f.push("summary.json".into());
            f
        },
        diagnostics: Some(report.summary),
        wall_time,
    };
    let json = serde_json::to_vec_pretty(&summary)?;
    write_bytes(&opts.out_dir.join("summary.json"), &json)?;
    Ok(summary)
}

/// One row of the convergence table.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub eta: f64,
    pub l1_distance: f64,
}

/// Distance between a nonlocal run at each η and the local Godunov
/// reference, measured in L1 at the last output time. Writes
/// `convergence.csv` unless dry-running.
pub fn convergence_study(
    base: &RunConfig,
    etas: &[f64],
    opts: &OutputOptions,
) -> Result<Vec<ConvergenceRow>> {
    if etas.is_empty() {
        return Err(Error::config("convergence study needs at least one eta"));
    }
    let local_cfg: LocalConfig = base.build_local()?;
    let t_compare = *base
        .output_times
        .iter()
        .max_by(|a, b| a.partial_cmp(b).unwrap())
        .ok_or_else(|| Error::config("convergence study needs an output time"))?;
    if opts.dry_run {
        for eta in etas {
            let mut cfg = base.clone();
            cfg.kernel.eta = *eta;
            cfg.build()?;
        }
        return Ok(Vec::new());
    }

    let reference = simulate_local(&local_cfg)?;
    let ref_index = reference
        .times
        .iter()
        .position(|&t| t == t_compare)
        .expect("reference trajectory holds every output time");

    let mut rows = Vec::with_capacity(etas.len());
    for &eta in etas {
        let mut cfg = base.clone();
        cfg.kernel.eta = eta;
        let model = cfg.build()?;
        let (trajectory, _) = simulate(&model)?;
        let index = trajectory
            .times
            .iter()
            .position(|&t| t == t_compare)
            .expect("trajectory holds every output time");
        let d = l1_distance(
            &trajectory.snapshots[index],
            &reference.snapshots[ref_index],
            model.grid.dx,
        )?;
        rows.push(ConvergenceRow { eta, l1_distance: d });
    }

    ensure_dir(&opts.out_dir)?;
    let mut csv = String::from("eta,l1_distance\n");
    for row in &rows {
        csv.push_str(&format!("{:.16e},{:.16e}\n", row.eta, row.l1_distance));
    }
    write_bytes(&opts.out_dir.join("convergence.csv"), csv.as_bytes())?;
    Ok(rows)
}

/// Run the same scenario under several source models and write one CSV
/// per output time with a density column per model.
pub fn compare_models(
    cfg: &RunConfig,
    variants: &[ModelVariant],
    opts: &OutputOptions,
) -> Result<Vec<PathBuf>> {
    if variants.is_empty() {
        return Err(Error::config("model comparison needs at least one model"));
    }
    let mut trajectories: Vec<(ModelVariant, Trajectory, ModelConfig)> = Vec::new();
    for &variant in variants {
        let mut c = cfg.clone();
        c.model = variant;
        let model = c.build()?;
        if opts.dry_run {
            continue;
        }
        let (trajectory, _) = simulate(&model)?;
        trajectories.push((variant, trajectory, model));
    }
    if opts.dry_run {
        return Ok(Vec::new());
    }

    ensure_dir(&opts.out_dir)?;
    let (_, first, model0) = &trajectories[0];
    let centers: Vec<f64> = model0.grid.cell_centers().collect();
    let mut written = Vec::new();
    for (ti, &t) in first.times.iter().enumerate() {
        let mut csv = String::from("x");
        for (variant, _, _) in &trajectories {
            csv.push_str(&format!(",rho_{variant}"));
        }
        csv.push('\n');
        for (j, x) in centers.iter().enumerate() {
            csv.push_str(&format!("{x:.16e}"));
            for (_, traj, _) in &trajectories {
                csv.push_str(&format!(",{:.16e}", traj.snapshots[ti].values[j]));
            }
            csv.push('\n');
        }
        let path = opts.out_dir.join(format!("compare_t{}.csv", time_tag(t)));
        write_bytes(&path, csv.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DomainSpec, KernelSpec, RampSpec};
    use crate::grid::{InitialDatum, RampRates, Schedule};
    use crate::scheme::{BoundaryPolicy, VelocityLaw};

    fn small_config() -> RunConfig {
        RunConfig {
            name: Some("small".into()),
            domain: DomainSpec {
                x_left: -1.0,
                x_right: 3.0,
                dx: 0.01,
            },
            kernel: KernelSpec {
                eta: 0.05,
                delta: 0.0,
            },
            velocity: VelocityLaw::Affine { v_max: 1.0 },
            model: ModelVariant::Model2,
            ramps: Some(RampSpec {
                on: [0.0, 0.1],
                off: [1.0, 1.1],
                length: 0.1,
            }),
            rates: RampRates {
                on: Schedule::Constant { value: 1.0 },
                off: Schedule::Constant { value: 0.5 },
            },
            initial: InitialDatum::Constant { value: 0.3 },
            boundary: BoundaryPolicy::Outflow,
            output_times: vec![0.1, 0.2],
            t_end: 0.0,
            cfl_safety: 0.9,
            kappa_spacing: 0.05,
        }
    }

    #[test]
    fn run_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let opts = OutputOptions::new(dir.path());
        let summary = run(&small_config(), &opts).unwrap();
        assert_eq!(summary.model, "model2");
        for file in &summary.files {
            assert!(dir.path().join(file).exists(), "missing {file}");
        }
        assert!(dir.path().join("snapshot_model2_t0.100000.csv").exists());
        assert!(dir.path().join("diagnostics_model2.json").exists());
        let csv = fs::read_to_string(dir.path().join("snapshot_model2_t0.200000.csv")).unwrap();
        assert!(csv.starts_with("x,rho\n"));
        assert_eq!(csv.lines().count(), 401);
    }

    #[test]
    fn run_outputs_are_byte_identical() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let s1 = run(&small_config(), &OutputOptions::new(d1.path())).unwrap();
        run(&small_config(), &OutputOptions::new(d2.path())).unwrap();
        for file in &s1.files {
            let a = fs::read(d1.path().join(file)).unwrap();
            let b = fs::read(d2.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between identical runs");
        }
    }

    #[test]
    fn dry_run_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let opts = OutputOptions {
            out_dir: dir.path().join("sub"),
            dry_run: true,
            diagnostics: true,
        };
        let summary = run(&small_config(), &opts).unwrap();
        assert!(summary.steps > 0);
        assert!(!dir.path().join("sub").exists());
    }

    #[test]
    fn no_diagnostics_skips_report() {
        let dir = tempfile::tempdir().unwrap();
        let opts = OutputOptions {
            out_dir: dir.path().to_path_buf(),
            dry_run: false,
            diagnostics: false,
        };
        let summary = run(&small_config(), &opts).unwrap();
        assert!(!dir.path().join("diagnostics_model2.json").exists());
        assert!(summary.files.iter().all(|f| !f.contains("diagnostics")));
    }

    #[test]
    fn convergence_rows_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let opts = OutputOptions::new(dir.path());
        let rows = convergence_study(&small_config(), &[0.1, 0.05], &opts).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.l1_distance.is_finite() && r.l1_distance >= 0.0));
        let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
        assert!(csv.starts_with("eta,l1_distance\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn compare_writes_one_csv_per_time() {
        let dir = tempfile::tempdir().unwrap();
        let opts = OutputOptions::new(dir.path());
        let files = compare_models(
            &small_config(),
            &[ModelVariant::Model0, ModelVariant::Model1, ModelVariant::Model2],
            &opts,
        )
        .unwrap();
        assert_eq!(files.len(), 2);
        let csv = fs::read_to_string(&files[0]).unwrap();
        assert!(csv.starts_with("x,rho_model0,rho_model1,rho_model2\n"));
    }
}
