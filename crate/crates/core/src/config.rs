//! Flat key-value configuration (`key = value` per line, `#` comments)
//! with defaults, validation, and a resolved echo for reproducibility.

use crate::error::{Result, SimError};
use crate::grid::{build_grid, Grid, GridSettings};
use crate::stepper::StepParams;
use crate::stokes::MuAveraging;
use crate::transport::AdvectScheme;
use crate::viscosity::ViscosityLaw;
use std::collections::BTreeMap;
use std::path::Path;

/// Scenario selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Decay,
    ThresholdSweep,
    StokesProbe,
    Oracles,
    VacuumSmoke,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Decay => "decay",
            Scenario::ThresholdSweep => "threshold-sweep",
            Scenario::StokesProbe => "stokes-probe",
            Scenario::Oracles => "oracles",
            Scenario::VacuumSmoke => "vacuum-smoke",
        }
    }
}

/// Shape of the initial temperature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaKind {
    Mode,
    Blob,
}

/// Shape of the initial velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityKind {
    /// Squared-sine streamfunction modes spanning the box.
    Mode,
    /// Circulation supported on the density blob.
    Blob,
}

/// Fully resolved simulation configuration.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub dim: usize,
    pub cells: [usize; 3],
    pub lengths: [f64; 3],
    pub kappa: f64,
    pub q: f64,
    pub r: f64,
    pub visc_kind: String,
    pub visc_a: f64,
    pub visc_b: f64,
    pub visc_table: Vec<(f64, f64)>,
    pub mu_min: f64,
    pub mu_max: f64,
    pub rho_background: f64,
    pub blob_center: [f64; 3],
    pub blob_radius: f64,
    pub blob_height: f64,
    pub u0_amp: f64,
    pub u0_kind: VelocityKind,
    pub u0_modes: [usize; 3],
    pub theta0_kind: ThetaKind,
    pub theta0_amp: f64,
    pub theta0_modes: [usize; 3],
    pub cfl: f64,
    pub dt_max: f64,
    pub t_end: f64,
    pub output_interval: f64,
    pub checkpoint_interval: f64,
    pub proj_tol: f64,
    pub solver_tol: f64,
    pub slack_abs: f64,
    pub slack_rel: f64,
    /// 0 means calibrate empirically from the run's c1 ratio.
    pub c1: f64,
    pub seed: u64,
    pub eps_rho: f64,
    pub u_floor: f64,
    pub advection: AdvectScheme,
    pub mu_averaging: MuAveraging,
    pub freeze_velocity: bool,
    pub buoyancy: bool,
    pub source: bool,
    pub adaptive: bool,
    pub controller_tol: f64,
    pub max_iter: usize,
    pub fit_t1: f64,
    pub fit_t2: f64,
    pub sweep_values: Vec<f64>,
    /// Optional checkpoint to resume from (empty: build initial data).
    pub restart_from: String,
}

impl SimConfig {
    /// Largest initial density, the rho_bar of the rate formulas.
    pub fn rho_bar(&self) -> f64 {
        self.rho_background + self.blob_height
    }

    pub fn grid(&self) -> Result<Grid> {
        build_grid(&GridSettings {
            dim: self.dim,
            cells: self.cells,
            lengths: self.lengths,
        })
    }

    pub fn law(&self) -> Result<ViscosityLaw> {
        match self.visc_kind.as_str() {
            "affine" => ViscosityLaw::affine(
                self.visc_a,
                self.visc_b,
                self.mu_min,
                self.mu_max,
                self.rho_bar(),
            ),
            "tabulated" => ViscosityLaw::tabulated(&self.visc_table, self.mu_min, self.mu_max),
            other => Err(SimError::Config(format!(
                "visc_kind must be 'affine' or 'tabulated', got '{other}'"
            ))),
        }
    }

    pub fn step_params(&self) -> StepParams {
        StepParams {
            kappa: self.kappa,
            cfl: self.cfl,
            dt_max: self.dt_max,
            u_floor: self.u_floor,
            eps_rho: self.eps_rho,
            rho_bar: self.rho_bar(),
            proj_tol: self.proj_tol,
            solver_tol: self.solver_tol,
            max_iter: self.max_iter,
            buoyancy_on: self.buoyancy,
            source_on: self.source,
            freeze_velocity: self.freeze_velocity,
            advection: self.advection,
            mu_averaging: self.mu_averaging,
        }
    }

    /// Echo of every resolved key, written to `resolved_config.txt`.
    pub fn resolved_text(&self) -> String {
        let mut s = String::new();
        let mut push = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        push("scenario", self.scenario.as_str().into());
        push("dim", self.dim.to_string());
        push("nx", self.cells[0].to_string());
        push("ny", self.cells[1].to_string());
        push("nz", self.cells[2].to_string());
        push("lx", format!("{}", self.lengths[0]));
        push("ly", format!("{}", self.lengths[1]));
        push("lz", format!("{}", self.lengths[2]));
        push("kappa", format!("{}", self.kappa));
        push("q", format!("{}", self.q));
        push("r", format!("{}", self.r));
        push("visc_kind", self.visc_kind.clone());
        push("visc_a", format!("{}", self.visc_a));
        push("visc_b", format!("{}", self.visc_b));
        push(
            "visc_table",
            self.visc_table
                .iter()
                .map(|(a, b)| format!("{a}:{b}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        push("mu_min", format!("{}", self.mu_min));
        push("mu_max", format!("{}", self.mu_max));
        push("rho_background", format!("{}", self.rho_background));
        push("blob_center_x", format!("{}", self.blob_center[0]));
        push("blob_center_y", format!("{}", self.blob_center[1]));
        push("blob_center_z", format!("{}", self.blob_center[2]));
        push("blob_radius", format!("{}", self.blob_radius));
        push("blob_height", format!("{}", self.blob_height));
        push("u0_amp", format!("{}", self.u0_amp));
        push(
            "u0_kind",
            match self.u0_kind {
                VelocityKind::Mode => "mode".into(),
                VelocityKind::Blob => "blob".into(),
            },
        );
        push("u0_kx", self.u0_modes[0].to_string());
        push("u0_ky", self.u0_modes[1].to_string());
        push("u0_kz", self.u0_modes[2].to_string());
        push(
            "theta0_kind",
            match self.theta0_kind {
                ThetaKind::Mode => "mode".into(),
                ThetaKind::Blob => "blob".into(),
            },
        );
        push("theta0_amp", format!("{}", self.theta0_amp));
        push("theta0_kx", self.theta0_modes[0].to_string());
        push("theta0_ky", self.theta0_modes[1].to_string());
        push("theta0_kz", self.theta0_modes[2].to_string());
        push("cfl", format!("{}", self.cfl));
        push("dt_max", format!("{}", self.dt_max));
        push("t_end", format!("{}", self.t_end));
        push("output_interval", format!("{}", self.output_interval));
        push(
            "checkpoint_interval",
            format!("{}", self.checkpoint_interval),
        );
        push("proj_tol", format!("{}", self.proj_tol));
        push("solver_tol", format!("{}", self.solver_tol));
        push("slack_abs", format!("{}", self.slack_abs));
        push("slack_rel", format!("{}", self.slack_rel));
        push("c1", format!("{}", self.c1));
        push("seed", self.seed.to_string());
        push("eps_rho", format!("{}", self.eps_rho));
        push("u_floor", format!("{}", self.u_floor));
        push(
            "advection",
            match self.advection {
                AdvectScheme::Upwind => "upwind".into(),
                AdvectScheme::MusclMinmod => "muscl".into(),
            },
        );
        push(
            "mu_averaging",
            match self.mu_averaging {
                MuAveraging::Arithmetic => "arithmetic".into(),
                MuAveraging::Harmonic => "harmonic".into(),
            },
        );
        push("freeze_velocity", self.freeze_velocity.to_string());
        push("buoyancy", self.buoyancy.to_string());
        push("source", self.source.to_string());
        push("adaptive", self.adaptive.to_string());
        push("controller_tol", format!("{}", self.controller_tol));
        push("max_iter", self.max_iter.to_string());
        push("fit_t1", format!("{}", self.fit_t1));
        push("fit_t2", format!("{}", self.fit_t2));
        push("restart_from", self.restart_from.clone());
        push(
            "sweep_values",
            self.sweep_values
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        s
    }
}

/// Parse and validate a configuration file.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Io(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parse the flat key-value text.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(SimError::Config(format!(
                "line {} is not 'key = value': '{line}'",
                lineno + 1
            )));
        };
        let key = line[..eq].trim().to_string();
        let val = line[eq + 1..].trim().to_string();
        if key.is_empty() {
            return Err(SimError::Config(format!("empty key on line {}", lineno + 1)));
        }
        kv.insert(key, val);
    }
    build(kv)
}

fn build(mut kv: BTreeMap<String, String>) -> Result<SimConfig> {
    fn take(kv: &mut BTreeMap<String, String>, key: &str) -> Option<String> {
        kv.remove(key)
    }
    fn required(kv: &mut BTreeMap<String, String>, key: &str) -> Result<String> {
        take(kv, key).ok_or_else(|| SimError::Config(format!("missing key: {key}")))
    }
    fn parse_f64(key: &str, v: &str) -> Result<f64> {
        v.parse::<f64>()
            .map_err(|_| SimError::Config(format!("{key} must be a number, got '{v}'")))
    }
    fn parse_usize(key: &str, v: &str) -> Result<usize> {
        v.parse::<usize>()
            .map_err(|_| SimError::Config(format!("{key} must be a nonnegative integer, got '{v}'")))
    }
    fn parse_bool(key: &str, v: &str) -> Result<bool> {
        match v {
            "true" | "on" | "1" | "yes" => Ok(true),
            "false" | "off" | "0" | "no" => Ok(false),
            _ => Err(SimError::Config(format!(
                "{key} must be a boolean, got '{v}'"
            ))),
        }
    }
    let f64_or = |kv: &mut BTreeMap<String, String>, key: &str, def: f64| -> Result<f64> {
        match take(kv, key) {
            Some(v) => parse_f64(key, &v),
            None => Ok(def),
        }
    };
    let usize_or = |kv: &mut BTreeMap<String, String>, key: &str, def: usize| -> Result<usize> {
        match take(kv, key) {
            Some(v) => parse_usize(key, &v),
            None => Ok(def),
        }
    };
    let bool_or = |kv: &mut BTreeMap<String, String>, key: &str, def: bool| -> Result<bool> {
        match take(kv, key) {
            Some(v) => parse_bool(key, &v),
            None => Ok(def),
        }
    };

    let scenario = match required(&mut kv, "scenario")?.as_str() {
        "decay" => Scenario::Decay,
        "threshold-sweep" => Scenario::ThresholdSweep,
        "stokes-probe" => Scenario::StokesProbe,
        "oracles" => Scenario::Oracles,
        "vacuum-smoke" => Scenario::VacuumSmoke,
        other => {
            return Err(SimError::Config(format!(
                "scenario must be one of decay, threshold-sweep, stokes-probe, oracles, vacuum-smoke; got '{other}'"
            )))
        }
    };
    let t_end = parse_f64("t_end", &required(&mut kv, "t_end")?)?;
    if !(t_end > 0.0) {
        return Err(SimError::Config(format!("t_end must be positive, got {t_end}")));
    }

    let dim = usize_or(&mut kv, "dim", 2)?;
    let cells = [
        usize_or(&mut kv, "nx", 64)?,
        usize_or(&mut kv, "ny", 64)?,
        usize_or(&mut kv, "nz", 32)?,
    ];
    let lengths = [
        f64_or(&mut kv, "lx", 1.0)?,
        f64_or(&mut kv, "ly", 1.0)?,
        f64_or(&mut kv, "lz", 1.0)?,
    ];
    let kappa = f64_or(&mut kv, "kappa", 1.0)?;
    if !(kappa > 0.0) {
        return Err(SimError::Config(format!("kappa must be positive, got {kappa}")));
    }
    let q = f64_or(&mut kv, "q", 4.0)?;
    if !(q > 3.0) {
        return Err(SimError::Hypothesis(format!(
            "q = {q} violates the standing hypothesis q > 3 of the decay theory"
        )));
    }
    let r = f64_or(&mut kv, "r", 0.5 * (3.0 + q.min(6.0)))?;
    if !(r > 3.0 && r < q.min(6.0)) {
        return Err(SimError::Hypothesis(format!(
            "r = {r} must lie in (3, min(q, 6)) = (3, {})",
            q.min(6.0)
        )));
    }

    let visc_kind = take(&mut kv, "visc_kind").unwrap_or_else(|| "affine".into());
    let visc_a = f64_or(&mut kv, "visc_a", 1.0)?;
    let visc_b = f64_or(&mut kv, "visc_b", 1.0)?;
    let visc_table = match take(&mut kv, "visc_table") {
        None => Vec::new(),
        Some(s) if s.trim().is_empty() => Vec::new(),
        Some(s) => {
            let mut pts = Vec::new();
            for part in s.split(',') {
                let mut it = part.split(':');
                let (Some(a), Some(b)) = (it.next(), it.next()) else {
                    return Err(SimError::Config(format!(
                        "visc_table entries must be rho:mu pairs, got '{part}'"
                    )));
                };
                pts.push((parse_f64("visc_table", a.trim())?, parse_f64("visc_table", b.trim())?));
            }
            pts
        }
    };
    let rho_background = f64_or(&mut kv, "rho_background", 0.05)?;
    if rho_background < 0.0 {
        return Err(SimError::Config(format!(
            "rho_background must be nonnegative, got {rho_background}"
        )));
    }
    let blob_height = f64_or(&mut kv, "blob_height", 0.95)?;
    let rho_bar = rho_background + blob_height;
    let mu_min = f64_or(&mut kv, "mu_min", visc_a.min(visc_a + visc_b * rho_bar))?;
    let mu_max = f64_or(&mut kv, "mu_max", visc_a.max(visc_a + visc_b * rho_bar))?;

    let cfg = SimConfig {
        scenario,
        dim,
        cells,
        lengths,
        kappa,
        q,
        r,
        visc_kind,
        visc_a,
        visc_b,
        visc_table,
        mu_min,
        mu_max,
        rho_background,
        blob_center: [
            f64_or(&mut kv, "blob_center_x", 0.5)?,
            f64_or(&mut kv, "blob_center_y", 0.5)?,
            f64_or(&mut kv, "blob_center_z", 0.5)?,
        ],
        blob_radius: f64_or(&mut kv, "blob_radius", 0.12)?,
        blob_height,
        u0_amp: f64_or(&mut kv, "u0_amp", 0.25)?,
        u0_kind: match take(&mut kv, "u0_kind").as_deref() {
            None | Some("mode") => VelocityKind::Mode,
            Some("blob") => VelocityKind::Blob,
            Some(other) => {
                return Err(SimError::Config(format!(
                    "u0_kind must be 'mode' or 'blob', got '{other}'"
                )))
            }
        },
        u0_modes: [
            usize_or(&mut kv, "u0_kx", 1)?,
            usize_or(&mut kv, "u0_ky", 1)?,
            usize_or(&mut kv, "u0_kz", 1)?,
        ],
        theta0_kind: match take(&mut kv, "theta0_kind").as_deref() {
            None | Some("mode") => ThetaKind::Mode,
            Some("blob") => ThetaKind::Blob,
            Some(other) => {
                return Err(SimError::Config(format!(
                    "theta0_kind must be 'mode' or 'blob', got '{other}'"
                )))
            }
        },
        theta0_amp: f64_or(&mut kv, "theta0_amp", 0.5)?,
        theta0_modes: [
            usize_or(&mut kv, "theta0_kx", 1)?,
            usize_or(&mut kv, "theta0_ky", 1)?,
            usize_or(&mut kv, "theta0_kz", 1)?,
        ],
        cfl: f64_or(&mut kv, "cfl", 0.5)?,
        dt_max: f64_or(&mut kv, "dt_max", 0.02)?,
        t_end,
        output_interval: f64_or(&mut kv, "output_interval", 0.05)?,
        checkpoint_interval: f64_or(&mut kv, "checkpoint_interval", 0.0)?,
        proj_tol: f64_or(&mut kv, "proj_tol", 1e-12)?,
        solver_tol: f64_or(&mut kv, "solver_tol", 1e-12)?,
        slack_abs: f64_or(&mut kv, "slack_abs", 1e-8)?,
        slack_rel: f64_or(&mut kv, "slack_rel", 1e-10)?,
        c1: f64_or(&mut kv, "c1", 0.0)?,
        seed: usize_or(&mut kv, "seed", 42)? as u64,
        eps_rho: f64_or(&mut kv, "eps_rho", 1e-6)?,
        u_floor: f64_or(&mut kv, "u_floor", 1e-8)?,
        advection: match take(&mut kv, "advection").as_deref() {
            None | Some("upwind") => AdvectScheme::Upwind,
            Some("muscl") => AdvectScheme::MusclMinmod,
            Some(other) => {
                return Err(SimError::Config(format!(
                    "advection must be 'upwind' or 'muscl', got '{other}'"
                )))
            }
        },
        mu_averaging: match take(&mut kv, "mu_averaging").as_deref() {
            None | Some("arithmetic") => MuAveraging::Arithmetic,
            Some("harmonic") => MuAveraging::Harmonic,
            Some(other) => {
                return Err(SimError::Config(format!(
                    "mu_averaging must be 'arithmetic' or 'harmonic', got '{other}'"
                )))
            }
        },
        freeze_velocity: bool_or(&mut kv, "freeze_velocity", false)?,
        buoyancy: bool_or(&mut kv, "buoyancy", true)?,
        source: bool_or(&mut kv, "source", true)?,
        adaptive: bool_or(&mut kv, "adaptive", false)?,
        controller_tol: f64_or(&mut kv, "controller_tol", 1e-4)?,
        max_iter: usize_or(&mut kv, "max_iter", 60_000)?,
        fit_t1: f64_or(&mut kv, "fit_t1", 0.0)?,
        fit_t2: f64_or(&mut kv, "fit_t2", 0.0)?,
        restart_from: take(&mut kv, "restart_from").unwrap_or_default(),
        sweep_values: match take(&mut kv, "sweep_values") {
            None => vec![0.17, 0.2315, 0.3153, 0.4284],
            Some(s) => {
                let mut v = Vec::new();
                for part in s.split(',') {
                    v.push(parse_f64("sweep_values", part.trim())?);
                }
                v
            }
        },
    };

    if let Some((key, _)) = kv.into_iter().next() {
        return Err(SimError::Config(format!("unknown key: {key}")));
    }
    // validate the grid and viscosity law eagerly so bad settings fail here
    cfg.grid()?;
    cfg.law()?;
    if !(cfg.output_interval > 0.0) {
        return Err(SimError::Config(format!(
            "output_interval must be positive, got {}",
            cfg.output_interval
        )));
    }
    let spans = cfg.t_end / cfg.output_interval;
    if (spans - spans.round()).abs() > 1e-6 * spans.round().max(1.0) {
        return Err(SimError::Config(format!(
            "t_end ({}) must be a whole number of output intervals ({})",
            cfg.t_end, cfg.output_interval
        )));
    }
    Ok(cfg)
}
