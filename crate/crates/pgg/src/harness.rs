//! Experiment orchestration: flat key = value configuration files, the
//! main convergence experiments (orbit convergence, phase shift, d_z
//! sweep, shadow-to-ODE), and CSV report serialization.
//!
//! Config format: one `key = value` per line, `#` starts a comment,
//! list values comma-separated. Unknown keys are rejected with the
//! offending line number. Defaults: grid n = 256, L = 1, dt = 1e-3,
//! t_end = 200, snapshot_every = 0.2, reference game parameters
//! r = 3, N = 5, sigma = 1, d_f = d_z = 0.1.
//!
//! Reports are written as `report.csv` (17-significant-digit doubles),
//! a single-line `summary.txt` of key=value pairs, and a reparseable
//! `config_echo.cfg`. Exit codes: 0 pass, 2 threshold failure, 1 error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::error::{PggError, Result};
use crate::hamiltonian::HamiltonianContext;
use crate::model::{interior_fixed_point, ModelParams, OdeState};
use crate::ode::{integrate, linearized_frequency, measure_period, OrbitRecord};
use crate::pde::{self, FieldPair, Grid1D, InitialData};
use crate::shadow::{self, ShadowState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    CheckHessian,
    Ode,
    Pde,
    Shadow,
    ConvergeDz,
    PhaseShift,
    ShadowToOde,
}

impl ExperimentKind {
    pub fn from_str(s: &str) -> Option<Self> {
        Some(match s {
            "check-hessian" => Self::CheckHessian,
            "ode" => Self::Ode,
            "pde" => Self::Pde,
            "shadow" => Self::Shadow,
            "converge-dz" => Self::ConvergeDz,
            "phase-shift" => Self::PhaseShift,
            "shadow-to-ode" => Self::ShadowToOde,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CheckHessian => "check-hessian",
            Self::Ode => "ode",
            Self::Pde => "pde",
            Self::Shadow => "shadow",
            Self::ConvergeDz => "converge-dz",
            Self::PhaseShift => "phase-shift",
            Self::ShadowToOde => "shadow-to-ode",
        }
    }
}

/// Initial-data description before the fixed-point-relative defaults
/// are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InitialKind {
    Constant,
    Perturbed,
    Step,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub params: ModelParams,
    pub grid_n: usize,
    pub length: f64,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_every: f64,
    initial_kind: InitialKind,
    f0: Option<f64>,
    z0: Option<f64>,
    amp_f: f64,
    amp_z: f64,
    mode: usize,
    step_values: Option<[f64; 4]>,
    pub d_z_list: Vec<f64>,
    pub dist_tol: f64,
    pub grad_tol: f64,
    pub residual_tol: f64,
    pub transient_fraction: f64,
    pub hessian_grid: usize,
    pub ode_tol: f64,
    pub dump_snapshots: bool,
}

impl ExperimentConfig {
    /// Resolves the initial-data spec; unset base values default to the
    /// perturbed fixed point (f* + 0.1, z*).
    pub fn initial_data(&self) -> Result<InitialData> {
        let fp = interior_fixed_point(&self.params)?;
        let f0 = self.f0.unwrap_or(fp.f + 0.1);
        let z0 = self.z0.unwrap_or(fp.z);
        Ok(match self.initial_kind {
            InitialKind::Constant => InitialData::Constant { f0, z0 },
            InitialKind::Perturbed => InitialData::Perturbed {
                f0,
                z0,
                amp_f: self.amp_f,
                amp_z: self.amp_z,
                mode: self.mode,
            },
            InitialKind::Step => {
                let v = self.step_values.unwrap_or([f0 - 0.05, f0 + 0.05, z0, z0]);
                InitialData::Step {
                    f_left: v[0],
                    f_right: v[1],
                    z_left: v[2],
                    z_right: v[3],
                }
            }
        })
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.length, self.grid_n)
    }

    /// Reparseable `key = value` echo of every field.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("kind".into(), self.kind.as_str().to_string()),
            ("r".into(), fmt_f64(self.params.r())),
            ("n".into(), self.params.n().to_string()),
            ("sigma".into(), fmt_f64(self.params.sigma())),
            ("d_f".into(), fmt_f64(self.params.d_f())),
            ("d_z".into(), fmt_f64(self.params.d_z())),
            ("relaxed".into(), self.params.is_relaxed().to_string()),
            ("grid_n".into(), self.grid_n.to_string()),
            ("length".into(), fmt_f64(self.length)),
            ("dt".into(), fmt_f64(self.dt)),
            ("t_end".into(), fmt_f64(self.t_end)),
            ("snapshot_every".into(), fmt_f64(self.snapshot_every)),
            (
                "initial".into(),
                match self.initial_kind {
                    InitialKind::Constant => "constant",
                    InitialKind::Perturbed => "perturbed",
                    InitialKind::Step => "step",
                }
                .to_string(),
            ),
            ("amp_f".into(), fmt_f64(self.amp_f)),
            ("amp_z".into(), fmt_f64(self.amp_z)),
            ("mode".into(), self.mode.to_string()),
            (
                "d_z_list".into(),
                self.d_z_list
                    .iter()
                    .map(|v| fmt_f64(*v))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("dist_tol".into(), fmt_f64(self.dist_tol)),
            ("grad_tol".into(), fmt_f64(self.grad_tol)),
            ("residual_tol".into(), fmt_f64(self.residual_tol)),
            ("transient_fraction".into(), fmt_f64(self.transient_fraction)),
            ("hessian_grid".into(), self.hessian_grid.to_string()),
            ("ode_tol".into(), fmt_f64(self.ode_tol)),
            ("dump_snapshots".into(), self.dump_snapshots.to_string()),
        ];
        if let Some(f0) = self.f0 {
            out.push(("f0".into(), fmt_f64(f0)));
        }
        if let Some(z0) = self.z0 {
            out.push(("z0".into(), fmt_f64(z0)));
        }
        if let Some(v) = self.step_values {
            out.push(("f_left".into(), fmt_f64(v[0])));
            out.push(("f_right".into(), fmt_f64(v[1])));
            out.push(("z_left".into(), fmt_f64(v[2])));
            out.push(("z_right".into(), fmt_f64(v[3])));
        }
        out
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_err(line: usize, msg: impl Into<String>) -> PggError {
    PggError::ParseError {
        line,
        msg: msg.into(),
    }
}

/// Parses a flat `key = value` configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut map: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, format!("expected key = value, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(parse_err(line_no, "empty key or value"));
        }
        if map.insert(key, (line_no, value)).is_some() {
            return Err(parse_err(line_no, format!("duplicate key {key:?}")));
        }
    }

    const KNOWN: &[&str] = &[
        "kind", "r", "n", "sigma", "d_f", "d_z", "relaxed", "grid_n", "length", "dt", "t_end",
        "snapshot_every", "initial", "f0", "z0", "amp_f", "amp_z", "mode", "f_left", "f_right",
        "z_left", "z_right", "d_z_list", "dist_tol", "grad_tol", "residual_tol",
        "transient_fraction", "hessian_grid", "ode_tol", "dump_snapshots",
    ];
    for (key, (line_no, _)) in &map {
        if !KNOWN.contains(key) {
            return Err(parse_err(*line_no, format!("unknown key {key:?}")));
        }
    }

    let get_f64 = |key: &str, default: f64| -> Result<f64> {
        match map.get(key) {
            None => Ok(default),
            Some((line_no, v)) => v
                .parse::<f64>()
                .map_err(|_| parse_err(*line_no, format!("{key}: invalid number {v:?}"))),
        }
    };
    let get_usize = |key: &str, default: usize| -> Result<usize> {
        match map.get(key) {
            None => Ok(default),
            Some((line_no, v)) => v
                .parse::<usize>()
                .map_err(|_| parse_err(*line_no, format!("{key}: invalid integer {v:?}"))),
        }
    };
    let get_bool = |key: &str, default: bool| -> Result<bool> {
        match map.get(key) {
            None => Ok(default),
            Some((line_no, v)) => v
                .parse::<bool>()
                .map_err(|_| parse_err(*line_no, format!("{key}: invalid bool {v:?}"))),
        }
    };

    let kind = match map.get("kind") {
        None => ExperimentKind::Pde,
        Some((line_no, v)) => ExperimentKind::from_str(v)
            .ok_or_else(|| parse_err(*line_no, format!("unknown experiment kind {v:?}")))?,
    };

    let r = get_f64("r", 3.0)?;
    let n = get_usize("n", 5)?;
    let sigma = get_f64("sigma", 1.0)?;
    let d_f = get_f64("d_f", 0.1)?;
    let d_z = get_f64("d_z", 0.1)?;
    let relaxed = get_bool("relaxed", false)?;
    // strict-range validation happens here, at parse time
    let params = if relaxed {
        ModelParams::relaxed_from_f64(r, n, sigma, d_f, d_z)?
    } else {
        ModelParams::from_f64(r, n, sigma, d_f, d_z)?
    };

    let initial_kind = match map.get("initial") {
        None => InitialKind::Perturbed,
        Some((_, "constant")) => InitialKind::Constant,
        Some((_, "perturbed")) => InitialKind::Perturbed,
        Some((_, "step")) => InitialKind::Step,
        Some((line_no, v)) => {
            return Err(parse_err(*line_no, format!("unknown initial kind {v:?}")))
        }
    };

    let step_values = if map.contains_key("f_left") {
        Some([
            get_f64("f_left", 0.0)?,
            get_f64("f_right", 0.0)?,
            get_f64("z_left", 0.0)?,
            get_f64("z_right", 0.0)?,
        ])
    } else {
        None
    };

    let d_z_list = match map.get("d_z_list") {
        None => vec![1.0, 10.0, 100.0, 1000.0],
        Some((line_no, v)) => {
            let list: Vec<f64> = v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| parse_err(*line_no, format!("d_z_list: bad entry {s:?}")))
                })
                .collect::<Result<_>>()?;
            if list.is_empty() {
                return Err(parse_err(*line_no, "d_z_list: empty"));
            }
            if !list.windows(2).all(|w| w[0] < w[1]) {
                return Err(parse_err(*line_no, "d_z_list must be strictly increasing"));
            }
            if list.iter().any(|v| *v <= 0.0) {
                return Err(parse_err(*line_no, "d_z_list entries must be positive"));
            }
            list
        }
    };

    let config = ExperimentConfig {
        kind,
        params,
        grid_n: get_usize("grid_n", 256)?,
        length: get_f64("length", 1.0)?,
        dt: get_f64("dt", 1e-3)?,
        t_end: get_f64("t_end", 200.0)?,
        snapshot_every: get_f64("snapshot_every", 0.2)?,
        initial_kind,
        f0: map.get("f0").map(|_| get_f64("f0", 0.0)).transpose()?,
        z0: map.get("z0").map(|_| get_f64("z0", 0.0)).transpose()?,
        amp_f: get_f64("amp_f", 0.05)?,
        amp_z: get_f64("amp_z", 0.0)?,
        mode: get_usize("mode", 1)?,
        step_values,
        d_z_list,
        dist_tol: get_f64("dist_tol", 1e-3)?,
        grad_tol: get_f64("grad_tol", 1e-6)?,
        residual_tol: get_f64("residual_tol", 1e-2)?,
        transient_fraction: get_f64("transient_fraction", 0.5)?,
        hessian_grid: get_usize("hessian_grid", 10_000)?,
        ode_tol: get_f64("ode_tol", 1e-10)?,
        dump_snapshots: get_bool("dump_snapshots", false)?,
    };

    for (name, v) in [
        ("length", config.length),
        ("dt", config.dt),
        ("t_end", config.t_end),
        ("snapshot_every", config.snapshot_every),
        ("dist_tol", config.dist_tol),
        ("grad_tol", config.grad_tol),
        ("residual_tol", config.residual_tol),
        ("ode_tol", config.ode_tol),
    ] {
        if !(v > 0.0) {
            return Err(PggError::InvalidParams(format!("{name} = {v}, need > 0")));
        }
    }
    if !(0.0..1.0).contains(&config.transient_fraction) {
        return Err(PggError::InvalidParams(format!(
            "transient_fraction = {}, need in [0, 1)",
            config.transient_fraction
        )));
    }
    Ok(config)
}

/// Experiment result: diagnostic rows, summary scalars, and the overall
/// pass flag against the configured thresholds.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub kind: ExperimentKind,
    pub config_echo: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub summary: Vec<(String, f64)>,
    pub passed: bool,
    /// Optional (x, f, z) snapshot dumps keyed by time.
    pub snapshots: Vec<(f64, Vec<(f64, f64, f64)>)>,
}

impl RunReport {
    fn new(config: &ExperimentConfig, columns: &[&str]) -> Self {
        RunReport {
            kind: config.kind,
            config_echo: config.echo(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
            passed: false,
            snapshots: Vec::new(),
        }
    }

    pub fn summary_line(&self) -> String {
        let mut line = format!("kind={} pass={}", self.kind.as_str(), self.passed);
        for (k, v) in &self.summary {
            let _ = write!(line, " {k}={v:.16e}");
        }
        line
    }
}

/// Writes `report.csv`, `summary.txt`, `config_echo.cfg` (and snapshot
/// CSVs if present) into `dir`.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut csv = report.columns.join(",");
    csv.push('\n');
    for row in &report.rows {
        let mut first = true;
        for v in row {
            if !first {
                csv.push(',');
            }
            let _ = write!(csv, "{v:.16e}");
            first = false;
        }
        csv.push('\n');
    }
    std::fs::write(dir.join("report.csv"), csv)?;
    std::fs::write(dir.join("summary.txt"), report.summary_line() + "\n")?;
    let mut echo = String::new();
    for (k, v) in &report.config_echo {
        let _ = writeln!(echo, "{k} = {v}");
    }
    std::fs::write(dir.join("config_echo.cfg"), echo)?;
    for (t, rows) in &report.snapshots {
        let mut s = String::from("x,f,z\n");
        for (x, f, z) in rows {
            let _ = writeln!(s, "{x:.16e},{f:.16e},{z:.16e}");
        }
        std::fs::write(dir.join(format!("snapshot_t{t:.3}.csv")), s)?;
    }
    Ok(())
}

/// Integrates from `state`, measures the period, and returns one closed
/// period of the asymptotic orbit. Degenerate (fixed-point) data yields
/// an orbit with `period = None`.
pub fn asymptotic_orbit(
    state: OdeState,
    ctx: &HamiltonianContext,
    tol: f64,
) -> Result<OrbitRecord> {
    let omega = linearized_frequency(ctx.params())?;
    let horizon = (16.0 * std::f64::consts::PI / omega).max(50.0);
    let mut probe = integrate(state, horizon, ctx, tol)?;
    match measure_period(&mut probe) {
        Ok(period) => {
            let mut orbit = integrate(state, period, ctx, tol)?;
            orbit.period = Some(period);
            Ok(orbit)
        }
        Err(_) => integrate(state, 1.0, ctx, tol),
    }
}

/// Plain ODE orbit run; rows are (t, f, z, H).
pub fn experiment_ode(config: &ExperimentConfig) -> Result<RunReport> {
    let ctx = HamiltonianContext::build(config.params.clone())?;
    let fp = interior_fixed_point(&config.params)?;
    let initial = OdeState::new(config.f0.unwrap_or(fp.f + 0.1), config.z0.unwrap_or(fp.z));
    let mut orbit = integrate(initial, config.t_end, &ctx, config.ode_tol)?;
    let period = measure_period(&mut orbit).ok();
    let mut report = RunReport::new(config, &["t", "f", "z", "H"]);
    for i in 0..orbit.times.len() {
        report.rows.push(vec![
            orbit.times[i],
            orbit.states[i].f,
            orbit.states[i].z,
            orbit.h_values[i],
        ]);
    }
    report.summary.push(("h_drift".into(), orbit.h_drift));
    if let Some(p) = period {
        report.summary.push(("period".into(), p));
        report
            .summary
            .push(("omega_linear".into(), linearized_frequency(&config.params)?));
    }
    report.passed = orbit.h_drift < 1e-8;
    Ok(report)
}

/// Hessian-positivity certification; a single CSV row.
pub fn experiment_check_hessian(config: &ExperimentConfig) -> Result<RunReport> {
    let ctx = HamiltonianContext::build(config.params.clone())?;
    let h = ctx.certify_hessian(config.hessian_grid);
    let mut report = RunReport::new(
        config,
        &[
            "r",
            "N",
            "sigma",
            "grid_size",
            "min_value",
            "argmin_z",
            "certified",
            "lemma_range",
        ],
    );
    report.rows.push(vec![
        config.params.r(),
        config.params.n() as f64,
        config.params.sigma(),
        h.grid_size as f64,
        h.min_value,
        h.argmin_z,
        h.certified_positive as u8 as f64,
        h.lemma_range as u8 as f64,
    ]);
    report.summary.push(("min_value".into(), h.min_value));
    report.summary.push(("argmin_z".into(), h.argmin_z));
    report.passed = h.certified_positive;
    Ok(report)
}

const PDE_COLUMNS: &[&str] = &[
    "t",
    "lyapunov",
    "dissipation",
    "grad_sup_f",
    "grad_sup_z",
    "hess_sup_f",
    "hess_sup_z",
    "dist_to_orbit",
    "mean_f",
    "mean_z",
];

fn push_pde_rows(report: &mut RunReport, diags: &[pde::PdeDiagnostics], dists: &[f64]) {
    for (d, dist) in diags.iter().zip(dists) {
        report.rows.push(vec![
            d.time,
            d.lyapunov,
            d.dissipation,
            d.grad_sup_f,
            d.grad_sup_z,
            d.hess_sup_f,
            d.hess_sup_z,
            *dist,
            d.mean_f,
            d.mean_z,
        ]);
    }
}

struct PdeRunArtifacts {
    grid: Grid1D,
    out: pde::RunOutput,
    orbit: OrbitRecord,
    dists: Vec<f64>,
}

fn run_pde_with_orbit(config: &ExperimentConfig, ctx: &HamiltonianContext) -> Result<PdeRunArtifacts> {
    let grid = config.grid()?;
    let initial = pde::init_fields(&grid, &config.initial_data()?)?;
    let out = pde::run(
        &grid,
        initial,
        config.t_end,
        config.dt,
        ctx,
        config.snapshot_every,
    )?;
    let (mean_f, mean_z) = out.final_fields.means(&grid);
    let orbit = asymptotic_orbit(OdeState::new(mean_f, mean_z), ctx, config.ode_tol)?;
    let dists: Vec<f64> = out
        .snapshots
        .iter()
        .map(|s| pde::dist_to_orbit(s, &grid, &orbit))
        .collect();
    Ok(PdeRunArtifacts {
        grid,
        out,
        orbit,
        dists,
    })
}

/// PDE-to-orbit convergence: runs the PDE to t_end, builds the orbit
/// through the final spatial means, and reports the distance series.
pub fn experiment_ode_convergence(config: &ExperimentConfig) -> Result<RunReport> {
    let ctx = HamiltonianContext::build(config.params.clone())?;
    let art = run_pde_with_orbit(config, &ctx)?;
    let mut report = RunReport::new(config, PDE_COLUMNS);
    push_pde_rows(&mut report, &art.out.diagnostics, &art.dists);

    let last = art.out.diagnostics.last().unwrap();
    let final_dist = *art.dists.last().unwrap();
    let grad_sup = last.grad_sup_f.max(last.grad_sup_z);
    // tail monotonicity within 10% jitter, informational
    let tail_start = art.dists.len() - art.dists.len() / 4;
    let tail_monotone = art.dists[tail_start..]
        .windows(2)
        .all(|w| w[1] <= 1.1 * w[0] + 1e-12);
    report.summary.push(("final_dist".into(), final_dist));
    report.summary.push(("final_grad_sup".into(), grad_sup));
    report
        .summary
        .push(("final_lyapunov".into(), last.lyapunov));
    report
        .summary
        .push(("tail_monotone".into(), tail_monotone as u8 as f64));
    if let Some(p) = art.orbit.period {
        report.summary.push(("orbit_period".into(), p));
    }
    report.passed = final_dist < config.dist_tol && grad_sup < config.grad_tol;
    if config.dump_snapshots {
        for s in &art.out.snapshots {
            let rows = (0..art.grid.n_cells)
                .map(|i| (art.grid.node(i), s.f[i], s.z[i]))
                .collect();
            report.snapshots.push((s.time, rows));
        }
    }
    Ok(report)
}

fn c2_norm(u: &[f64], dx: f64) -> f64 {
    let n = u.len();
    let sup = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let grad = u
        .windows(2)
        .map(|w| ((w[1] - w[0]) / dx).abs())
        .fold(0.0, f64::max);
    let dx2 = dx * dx;
    let hess = (0..n)
        .map(|i| {
            let left = if i == 0 { u[0] } else { u[i - 1] };
            let right = if i == n - 1 { u[n - 1] } else { u[i + 1] };
            ((left - 2.0 * u[i] + right) / dx2).abs()
        })
        .fold(0.0, f64::max);
    sup + grad + hess
}

/// Discrete-C^2 discrepancy of Eq.-style `||f - F|| + ||z - Z||` between
/// a PDE snapshot and a shadow snapshot.
fn shadow_discrepancy(p: &FieldPair, s: &ShadowState, dx: f64) -> f64 {
    let df: Vec<f64> = p.f.iter().zip(&s.f).map(|(a, b)| a - b).collect();
    let dz: Vec<f64> = p.z.iter().map(|z| z - s.z).collect();
    c2_norm(&df, dx) + c2_norm(&dz, dx)
}

fn sweep_threads() -> usize {
    std::env::var("PGG_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n >= 1)
        .unwrap_or(1)
}

/// d_z sweep: runs the PDE once per d_z and the shadow system once,
/// reporting the per-snapshot discrepancy and its sup over t > 0.
pub fn experiment_converge_dz(config: &ExperimentConfig) -> Result<RunReport> {
    let grid = config.grid()?;
    let initial_spec = config.initial_data()?;
    let shadow_ctx = HamiltonianContext::build(config.params.clone())?;
    let shadow_initial = shadow::init_shadow(&grid, &initial_spec)?;
    let shadow_out = shadow::shadow_run(
        &grid,
        shadow_initial,
        config.t_end,
        config.dt,
        &shadow_ctx,
        config.snapshot_every,
    )?;

    // one full PDE run per d_z, optionally in parallel (PGG_THREADS)
    let n_runs = config.d_z_list.len();
    let results: Mutex<Vec<Option<Result<pde::RunOutput>>>> =
        Mutex::new((0..n_runs).map(|_| None).collect());
    let run_one = |idx: usize| -> Result<pde::RunOutput> {
        let params = config.params.with_d_z(config.d_z_list[idx])?;
        let ctx = HamiltonianContext::build(params)?;
        let initial = pde::init_fields(&grid, &initial_spec)?;
        pde::run(
            &grid,
            initial,
            config.t_end,
            config.dt,
            &ctx,
            config.snapshot_every,
        )
    };
    let threads = sweep_threads().min(n_runs);
    if threads <= 1 {
        for idx in 0..n_runs {
            results.lock().unwrap()[idx] = Some(run_one(idx));
        }
    } else {
        std::thread::scope(|scope| {
            for tid in 0..threads {
                let results = &results;
                let run_one = &run_one;
                scope.spawn(move || {
                    for idx in (tid..n_runs).step_by(threads) {
                        let r = run_one(idx);
                        results.lock().unwrap()[idx] = Some(r);
                    }
                });
            }
        });
    }
    let outputs: Vec<pde::RunOutput> = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.unwrap())
        .collect::<Result<_>>()?;

    let mut columns = vec!["t".to_string()];
    for dz in &config.d_z_list {
        columns.push(format!("disc_dz_{dz}"));
    }
    let mut report = RunReport::new(config, &[]);
    report.columns = columns;

    let n_snap = shadow_out.snapshots.len();
    let mut sups = vec![0.0f64; n_runs];
    for k in 0..n_snap {
        let mut row = vec![shadow_out.snapshots[k].time];
        for (j, out) in outputs.iter().enumerate() {
            let disc = shadow_discrepancy(&out.snapshots[k], &shadow_out.snapshots[k], grid.dx);
            row.push(disc);
            // the t = 0 discrepancy is d_z-independent by construction;
            // the sup tracks the dynamics only
            if k > 0 {
                sups[j] = sups[j].max(disc);
            }
        }
        report.rows.push(row);
    }

    let monotone = sups.windows(2).all(|w| w[1] < w[0]);
    for (j, dz) in config.d_z_list.iter().enumerate() {
        report.summary.push((format!("sup_dz_{dz}"), sups[j]));
    }
    // a-priori bound on the z-gradient energy at the largest d_z
    let last = outputs.last().unwrap();
    let dz_max = *config.d_z_list.last().unwrap();
    let bound = (2.0 * config.params.sigma() * config.t_end).exp() * last.z0_l2_sq / (2.0 * dz_max);
    report
        .summary
        .push(("grad_z_energy".into(), last.grad_z_sq_time_integral));
    report.summary.push(("grad_z_bound".into(), bound));
    report
        .summary
        .push(("monotone".into(), monotone as u8 as f64));
    report.passed = monotone && last.grad_z_sq_time_integral < 10.0 * bound;
    Ok(report)
}

/// Maximizes circular cross-correlation of the sampled mean-z signal
/// against the orbit z over one period; returns lambda in [0, period).
pub fn estimate_phase_shift(
    samples: &[(f64, f64)],
    orbit: &OrbitRecord,
    period: f64,
    resolution: f64,
) -> f64 {
    let mismatch = |lambda: f64| -> f64 {
        samples
            .iter()
            .map(|(t, v)| {
                let s = orbit.state_at((t + lambda).rem_euclid(period));
                let d = v - s.z;
                d * d
            })
            .sum()
    };
    let coarse = 256;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..coarse {
        let lam = period * i as f64 / coarse as f64;
        let m = mismatch(lam);
        if m < best.1 {
            best = (lam, m);
        }
    }
    let half = period / coarse as f64;
    let (mut a, mut b) = (best.0 - half, best.0 + half);
    // golden-section refinement of the best coarse cell
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    while b - a > resolution {
        let c = b - INV_PHI * (b - a);
        let d = a + INV_PHI * (b - a);
        if mismatch(c) < mismatch(d) {
            b = d;
        } else {
            a = c;
        }
    }
    (0.5 * (a + b)).rem_euclid(period)
}

/// Phase-shift experiment: estimates lambda from the post-transient
/// mean-z signal and reports the post-shift discrete-C^2 residual.
pub fn experiment_phase_shift(config: &ExperimentConfig) -> Result<RunReport> {
    let ctx = HamiltonianContext::build(config.params.clone())?;
    let art = run_pde_with_orbit(config, &ctx)?;
    let period = art.orbit.period.ok_or_else(|| {
        PggError::InsufficientData(
            "limiting orbit degenerates to the fixed point; lambda undefined".into(),
        )
    })?;

    // orbit time 0 corresponds to PDE time t_end; measure lambda from the
    // post-transient tail of the mean-z signal
    let diags = &art.out.diagnostics;
    let first = ((diags.len() as f64) * config.transient_fraction) as usize;
    let tail: Vec<(f64, f64)> = diags[first..]
        .iter()
        .map(|d| (d.time - config.t_end, d.mean_z))
        .collect();
    if (tail.last().unwrap().0 - tail[0].0) < 2.0 * period {
        return Err(PggError::InsufficientData(format!(
            "post-transient window shorter than two periods ({period})"
        )));
    }
    let resolution = config.dt / 10.0;
    let lambda = estimate_phase_shift(&tail, &art.orbit, period, resolution);
    // estimator stability: recompute on half the window
    let half_tail = &tail[tail.len() / 2..];
    let lambda_half = estimate_phase_shift(half_tail, &art.orbit, period, resolution);

    // post-shift residual over the last period of snapshots
    let mut residual = 0.0f64;
    for s in art.out.snapshots.iter().rev() {
        if config.t_end - s.time > period {
            break;
        }
        let target = art
            .orbit
            .state_at((s.time - config.t_end + lambda).rem_euclid(period));
        residual = residual.max(pde::c2_distance_to_state(s, &art.grid, target));
    }

    let mut report = RunReport::new(config, PDE_COLUMNS);
    push_pde_rows(&mut report, diags, &art.dists);
    report.summary.push(("lambda".into(), lambda));
    report.summary.push(("lambda_half_window".into(), lambda_half));
    report.summary.push(("period".into(), period));
    report.summary.push(("residual".into(), residual));
    let d_lam = (lambda - lambda_half).abs().min(period - (lambda - lambda_half).abs());
    report.summary.push(("lambda_stability".into(), d_lam));
    report.passed = residual < config.residual_tol;
    Ok(report)
}

/// Shadow-to-ODE experiment: orbit distance (primary) plus the
/// pointwise comparison against the ODE from the initial means
/// (informational).
pub fn experiment_shadow_to_ode(config: &ExperimentConfig) -> Result<RunReport> {
    let ctx = HamiltonianContext::build(config.params.clone())?;
    let grid = config.grid()?;
    let initial = shadow::init_shadow(&grid, &config.initial_data()?)?;
    let f_bar0 = initial.mean_f();
    let z0 = initial.z;
    let out = shadow::shadow_run(
        &grid,
        initial,
        config.t_end,
        config.dt,
        &ctx,
        config.snapshot_every,
    )?;

    // asymptotic orbit from the final means (primary comparison)
    let final_state = &out.final_state;
    let orbit = asymptotic_orbit(
        OdeState::new(final_state.mean_f(), final_state.z),
        &ctx,
        config.ode_tol,
    )?;
    // pointwise reference solution from the initial means (informational)
    let reference = integrate(OdeState::new(f_bar0, z0), config.t_end, &ctx, config.ode_tol)?;

    let mut report = RunReport::new(
        config,
        &[
            "t",
            "Z",
            "mean_F",
            "lyapunov",
            "dissipation",
            "grad_sup_F",
            "dist_to_orbit",
            "f_hat_gap",
            "z_hat_gap",
        ],
    );
    let mut final_dist = f64::NAN;
    for (snap, diag) in out.snapshots.iter().zip(&out.diagnostics) {
        let dist = shadow::shadow_dist_to_orbit(snap, &grid, &orbit);
        let point = reference.state_at(snap.time.min(config.t_end));
        report.rows.push(vec![
            snap.time,
            snap.z,
            snap.mean_f(),
            diag.lyapunov,
            diag.dissipation,
            diag.grad_sup_f,
            dist,
            (snap.mean_f() - point.f).abs(),
            (snap.z - point.z).abs(),
        ]);
        final_dist = dist;
    }
    let grad_sup = out.diagnostics.last().unwrap().grad_sup_f;
    report.summary.push(("final_dist".into(), final_dist));
    report.summary.push(("final_grad_sup_f".into(), grad_sup));
    if let Some(p) = orbit.period {
        report.summary.push(("orbit_period".into(), p));
    }
    report.passed = final_dist < config.dist_tol && grad_sup < config.grad_tol;
    Ok(report)
}

/// Plain shadow run with the shadow CSV columns.
pub fn experiment_shadow(config: &ExperimentConfig) -> Result<RunReport> {
    experiment_shadow_to_ode(config)
}

/// Dispatches on the experiment kind.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    match config.kind {
        ExperimentKind::CheckHessian => experiment_check_hessian(config),
        ExperimentKind::Ode => experiment_ode(config),
        ExperimentKind::Pde => experiment_ode_convergence(config),
        ExperimentKind::Shadow => experiment_shadow(config),
        ExperimentKind::ConvergeDz => experiment_converge_dz(config),
        ExperimentKind::PhaseShift => experiment_phase_shift(config),
        ExperimentKind::ShadowToOde => experiment_shadow_to_ode(config),
    }
}

/// CLI driver. `args` excludes the program name. Returns the process
/// exit code: 0 pass, 2 threshold failure, 1 error.
pub fn cli_main(args: &[String]) -> i32 {
    match cli_inner(args) {
        Ok(passed) => {
            if passed {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cli_inner(args: &[String]) -> Result<bool> {
    let usage = "usage: pgg <check-hessian|ode|pde|shadow|converge-dz|phase-shift|shadow-to-ode> --config <path> [--out <dir>]";
    let kind = args
        .first()
        .and_then(|s| ExperimentKind::from_str(s))
        .ok_or_else(|| PggError::InvalidParams(usage.into()))?;
    let mut config_path: Option<PathBuf> = None;
    let mut out_dir: Option<PathBuf> = None;
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--config" => {
                config_path = Some(PathBuf::from(args.get(i + 1).ok_or_else(|| {
                    PggError::InvalidParams("--config needs a path".into())
                })?));
                i += 2;
            }
            "--out" => {
                out_dir = Some(PathBuf::from(args.get(i + 1).ok_or_else(|| {
                    PggError::InvalidParams("--out needs a directory".into())
                })?));
                i += 2;
            }
            other => {
                return Err(PggError::InvalidParams(format!(
                    "unexpected argument {other:?}; {usage}"
                )))
            }
        }
    }
    let config_path =
        config_path.ok_or_else(|| PggError::InvalidParams(format!("--config required; {usage}")))?;
    let mut config = parse_config(&config_path)?;
    config.kind = kind;
    let report = run_experiment(&config)?;
    println!("{}", report.summary_line());
    if let Some(dir) = out_dir {
        write_report(&report, &dir)?;
    }
    Ok(report.passed)
}
