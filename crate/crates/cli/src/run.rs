//! Config → simulation → analysis → artifacts on disk.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tipbeam::asymptotics::{classify_limit, project_omega, slowest_period, LimitReport};
use tipbeam::fem::{assemble, interpolate, interpolate_mode, simulate, IntegratorStats, SimOptions, TrajectoryRecord};
use tipbeam::model::{validate_laws, validate_params, ValidationReport};
use tipbeam::spectral::{find_modes, j_exceptional, nodal_mode, Operator};
use tipbeam::{BeamParams, BeamState, Mesh, NonlinearLaws};

use crate::config::{ConfigError, Horizon, InertiaSpec, RunConfig};
use crate::CliError;

/// Overrides the directory that relative output paths are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "TIPBEAM_OUTPUT_ROOT";

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const SNAPSHOTS_FILE: &str = "snapshots.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.json";
pub const CONFIG_FILE: &str = "config.ini";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "limit_report.json";
pub const COMPARISON_FILE: &str = "xi_comparison.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactPaths {
    pub config: PathBuf,
    pub timeseries: PathBuf,
    pub snapshots: PathBuf,
    pub trajectory: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub simulate_seconds: f64,
    pub analyze_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub software_version: String,
    pub params: BeamParams,
    pub files: ArtifactPaths,
    pub report: Option<LimitReport>,
    /// Why `report` is absent.
    pub analysis_note: Option<String>,
    pub stats: IntegratorStats,
    pub wall_clock: WallClock,
}

/// Both admissibility reports; the run aborts unless both pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub params: ValidationReport,
    pub laws: ValidationReport,
}

impl ValidationOutcome {
    pub fn passed(&self) -> bool {
        self.params.passed && self.laws.passed
    }
}

pub fn resolve_params(cfg: &RunConfig) -> Result<BeamParams, CliError> {
    let b = &cfg.beam;
    let mut params = BeamParams::new(b.rho, b.lambda, b.length, b.tip_mass, 0.0);
    params.tip_inertia = match b.tip_inertia {
        InertiaSpec::Value(j) => j,
        InertiaSpec::Exceptional(ell) => j_exceptional(ell, &params).map_err(|e| {
            CliError::Config(ConfigError {
                line: None,
                message: format!("tip_inertia = exceptional:{ell}: {e}"),
            })
        })?,
    };
    Ok(params)
}

pub fn build_laws(cfg: &RunConfig) -> NonlinearLaws {
    let l = &cfg.laws;
    NonlinearLaws::new(l.spring, l.damper, l.k_bound, l.delta)
}

pub fn validate(cfg: &RunConfig) -> Result<ValidationOutcome, CliError> {
    let params = resolve_params(cfg)?;
    Ok(ValidationOutcome {
        params: validate_params(&params),
        laws: validate_laws(&build_laws(cfg))?,
    })
}

/// Initial state from the modal and closed-form terms, projected if requested.
pub fn initial_state(cfg: &RunConfig, params: &BeamParams, mesh: &Mesh) -> Result<BeamState, CliError> {
    let n = mesh.dofs();
    let mut q = vec![0.0; n];
    let mut qdot = vec![0.0; n];
    for op in [Operator::A, Operator::B] {
        let terms: Vec<_> = cfg.initial.modes.iter().filter(|m| m.op == op).collect();
        let Some(count) = terms.iter().map(|m| m.index).max() else {
            continue;
        };
        let modes = find_modes(op, params, count)?;
        for term in terms {
            let shape = interpolate_mode(&modes[term.index - 1], mesh)?;
            for i in 0..n {
                q[i] += term.u_amp * shape[i];
                qdot[i] += term.v_amp * shape[i];
            }
        }
    }
    for term in &cfg.initial.closed_form {
        let (k, length) = (term.degree as i32, params.length);
        let shape = interpolate(|x| ((x / length).powi(k), k as f64 * (x / length).powi(k - 1) / length), mesh)?;
        for i in 0..n {
            q[i] += term.u_amp * shape[i];
            qdot[i] += term.v_amp * shape[i];
        }
    }
    let state = BeamState::new(*mesh, q, qdot)?;
    if !cfg.initial.project {
        return Ok(state);
    }
    let InertiaSpec::Exceptional(ell) = cfg.beam.tip_inertia else {
        return Err(CliError::Config(ConfigError {
            line: None,
            message: "[initial] project = true needs tip_inertia = exceptional:ℓ".into(),
        }));
    };
    Ok(project_omega(&state, params, &nodal_mode(ell, params)?)?)
}

pub fn horizon_seconds(cfg: &RunConfig, params: &BeamParams) -> Result<f64, CliError> {
    Ok(match cfg.discretization.t_end {
        Horizon::Seconds(t) => t,
        Horizon::Periods(n) => n * slowest_period(params)?,
    })
}

/// Resolves the configured output directory against the output root.
pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    if cfg.output.is_absolute() {
        return cfg.output.clone();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) => PathBuf::from(root).join(&cfg.output),
        None => cfg.output.clone(),
    }
}

fn sci(v: f64) -> String {
    format!("{v:.17e}")
}

fn write_timeseries(path: &Path, rec: &TrajectoryRecord) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "V", "dVdt_model", "uL", "vL", "vprimeL"])?;
    for i in 0..rec.times.len() {
        w.write_record([
            sci(rec.times[i]),
            sci(rec.energies[i]),
            sci(rec.dissipations[i]),
            sci(rec.tip_values[i]),
            sci(rec.tip_velocities[i]),
            sci(rec.tip_slope_rates[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_snapshots(path: &Path, rec: &TrajectoryRecord) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "dof", "q", "qdot"])?;
    for snap in &rec.snapshots {
        for (i, (q, v)) in snap.q.iter().zip(&snap.qdot).enumerate() {
            w.write_record([sci(snap.t), i.to_string(), sci(*q), sci(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Classification, or the reason it is unavailable (horizon too short).
fn analyze_record(
    rec: &TrajectoryRecord,
    cfg: &RunConfig,
    laws: &NonlinearLaws,
) -> Result<(Option<LimitReport>, Option<String>), CliError> {
    match classify_limit(rec, &rec.params, laws, &cfg.analysis) {
        Ok(report) => Ok((Some(report), None)),
        Err(e @ tipbeam::Error::HorizonTooShort { .. }) => Ok((None, Some(e.to_string()))),
        Err(e) => Err(e.into()),
    }
}

/// Validate, assemble, simulate, analyze and persist one configuration into its
/// resolved output directory.
pub fn run(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    run_in(cfg, &output_dir(cfg))
}

/// [`run`] with an explicit output directory.
pub fn run_in(cfg: &RunConfig, dir: &Path) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let outcome = validate(cfg)?;
    if !outcome.passed() {
        return Err(CliError::Validation(Box::new(outcome)));
    }
    let params = resolve_params(cfg)?;
    let laws = build_laws(cfg);
    let d = &cfg.discretization;
    let disc = assemble(&params, d.n_elements)?;
    let initial = initial_state(cfg, &params, &disc.mesh)?;
    let t_end = horizon_seconds(cfg, &params)?;
    let options = SimOptions::new(d.dt, t_end, d.stride).with_snapshot_stride(d.snapshot_stride);
    let rec = simulate(&disc, &laws, &initial, &options)?;
    let simulate_seconds = start.elapsed().as_secs_f64();

    let analysis_start = Instant::now();
    let (report, analysis_note) = analyze_record(&rec, cfg, &laws)?;
    let analyze_seconds = analysis_start.elapsed().as_secs_f64();

    fs::create_dir_all(dir)?;
    let files = ArtifactPaths {
        config: dir.join(CONFIG_FILE),
        timeseries: dir.join(TIMESERIES_FILE),
        snapshots: dir.join(SNAPSHOTS_FILE),
        trajectory: dir.join(TRAJECTORY_FILE),
    };
    fs::write(&files.config, cfg.to_ini())?;
    write_timeseries(&files.timeseries, &rec)?;
    write_snapshots(&files.snapshots, &rec)?;
    write_json(&files.trajectory, &rec)?;
    let manifest = RunManifest {
        config_hash: cfg.hash(),
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        params,
        files,
        report,
        analysis_note,
        stats: rec.stats.clone(),
        wall_clock: WallClock {
            simulate_seconds,
            analyze_seconds,
            total_seconds: start.elapsed().as_secs_f64(),
        },
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn run_config(path: &Path) -> Result<RunManifest, CliError> {
    let (cfg, _) = RunConfig::load(path)?;
    run(&cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOutput {
    pub report: LimitReport,
    pub report_path: PathBuf,
    pub comparison_path: PathBuf,
}

/// Re-analyze a finished run from its manifest.
///
/// Writes the report JSON and `t,xi_sim,xi_pred` next to the manifest; `xi_pred` is 0
/// when no orbit is predicted.
pub fn analyze(manifest_path: &Path) -> Result<AnalysisOutput, CliError> {
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
    let (cfg, _) = RunConfig::load(&manifest.files.config)?;
    if cfg.hash() != manifest.config_hash {
        return Err(CliError::Config(ConfigError {
            line: None,
            message: format!("{} does not match the manifest hash", manifest.files.config.display()),
        }));
    }
    let rec: TrajectoryRecord = serde_json::from_str(&fs::read_to_string(&manifest.files.trajectory)?)?;
    let laws = build_laws(&cfg);
    let report = classify_limit(&rec, &rec.params, &laws, &cfg.analysis)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let report_path = dir.join(REPORT_FILE);
    let comparison_path = dir.join(COMPARISON_FILE);
    write_json(&report_path, &report)?;
    let mut w = csv::Writer::from_path(&comparison_path)?;
    w.write_record(["t", "xi_sim", "xi_pred"])?;
    let j = rec.params.tip_inertia;
    for (t, rate) in rec.times.iter().zip(&rec.tip_slope_rates) {
        let pred = report.orbit.as_ref().map_or(0.0, |o| j * o.tip_slope_rate(*t));
        w.write_record([sci(*t), sci(j * rate), sci(pred)])?;
    }
    w.flush()?;
    Ok(AnalysisOutput {
        report,
        report_path,
        comparison_path,
    })
}

#[derive(Debug, Serialize)]
pub struct SweepEntry {
    pub config: PathBuf,
    pub output: PathBuf,
    pub manifest: Option<RunManifest>,
    pub error: Option<String>,
}

/// Runs configurations on `workers` threads; output directories must be distinct.
pub fn sweep(paths: &[PathBuf], workers: usize) -> Result<Vec<SweepEntry>, CliError> {
    let configs = paths
        .iter()
        .map(|p| RunConfig::load(p).map(|(c, _)| c))
        .collect::<Result<Vec<_>, _>>()?;
    let dirs: Vec<PathBuf> = configs.iter().map(output_dir).collect();
    for (i, a) in dirs.iter().enumerate() {
        if let Some(j) = dirs[..i].iter().position(|b| b == a) {
            return Err(CliError::Config(ConfigError {
                line: None,
                message: format!(
                    "{} and {} share the output directory {}",
                    paths[j].display(),
                    paths[i].display(),
                    a.display()
                ),
            }));
        }
    }
    let workers = workers.max(1);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<Option<Result<RunManifest, String>>> = (0..configs.len()).map(|_| None).collect();
    let slots = std::sync::Mutex::new(&mut results);
    std::thread::scope(|s| {
        for _ in 0..workers.min(configs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(cfg) = configs.get(i) else { break };
                let out = run(cfg).map_err(|e| e.to_string());
                slots.lock().expect("sweep results poisoned")[i] = Some(out);
            });
        }
    });
    Ok(paths
        .iter()
        .zip(dirs)
        .zip(results)
        .map(|((config, output), result)| {
            let (manifest, error) = match result.expect("every config is run") {
                Ok(m) => (Some(m), None),
                Err(e) => (None, Some(e)),
            };
            SweepEntry {
                config: config.clone(),
                output,
                manifest,
                error,
            }
        })
        .collect())
}
