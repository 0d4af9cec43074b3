//! Scenario orchestration: the decay run with its verdicts, the
//! threshold sweep, the Stokes probe, the oracle suite and the vacuum
//! smoke test. Each scenario writes `resolved_config.txt`, its ledger
//! and verdicts, and a human-readable summary; the exit flag is true iff
//! every verdict applicable to the scenario holds.

use crate::config::{Scenario, SimConfig};
use crate::error::{Result, SimError};
use crate::field::{Boundary, ScalarField, VectorField};
use crate::grid::Grid;
use crate::inequalities;
use crate::initial;
use crate::ledger::{self, LedgerRow, RateParams, Verdict};
use crate::norms;
use crate::output;
use crate::stepper::{self, FluidState};
use crate::stokes::{self, mms};
use crate::transport;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// Result of one scenario run.
#[derive(Debug)]
pub struct ScenarioOutcome {
    pub ok: bool,
    pub verdicts: Vec<Verdict>,
    pub rows: Vec<LedgerRow>,
    pub summary: String,
    pub out_dir: PathBuf,
}

/// Dispatch on the configured scenario.
pub fn run_scenario(cfg: &SimConfig, out_dir: &Path) -> Result<ScenarioOutcome> {
    std::fs::create_dir_all(out_dir)?;
    output::atomic_write(
        &out_dir.join("resolved_config.txt"),
        cfg.resolved_text().as_bytes(),
    )?;
    match cfg.scenario {
        Scenario::Decay => run_decay(cfg, out_dir),
        Scenario::VacuumSmoke => run_vacuum_smoke(cfg, out_dir),
        Scenario::ThresholdSweep => run_threshold_sweep(cfg, &cfg.sweep_values, out_dir),
        Scenario::StokesProbe => run_stokes_probe(cfg, out_dir),
        Scenario::Oracles => run_oracles(cfg, out_dir),
    }
}

/// Ledger rows plus the per-row velocity L2 norms used by the runtime
/// Poincaré check.
pub struct SimulationTrace {
    pub rows: Vec<LedgerRow>,
    pub u_l2: Vec<f64>,
    pub max_div_residual: f64,
    pub final_state: FluidState,
    pub rate: RateParams,
}

/// Advance a configured run, emitting one ledger row per output
/// interval. Interval ends are hit exactly by splitting the remaining
/// time into equal CFL-admissible sub-steps, so rows are uniformly
/// spaced and no step degenerates.
pub fn run_simulation(cfg: &SimConfig, out_dir: Option<&Path>) -> Result<SimulationTrace> {
    let law = cfg.law()?;
    let params = cfg.step_params();
    let mut state = if cfg.restart_from.is_empty() {
        initial::build_state(cfg)?
    } else {
        let state = output::read_checkpoint(Path::new(&cfg.restart_from))?;
        if state.rho.grid != cfg.grid()? {
            return Err(SimError::Config(format!(
                "restart checkpoint grid does not match the configured grid ({})",
                cfg.restart_from
            )));
        }
        state
    };
    let grid = state.rho.grid;
    let m0 = norms::lp_norm_scalar(&state.rho, 1.0)?;
    let c1_seed = if cfg.c1 > 0.0 { cfg.c1 } else { 1.0 };
    let mut rate = ledger::sigma_and_threshold(
        cfg.mu_min,
        cfg.kappa,
        cfg.rho_bar(),
        grid.diameter,
        c1_seed,
        m0,
    )?;
    rate.m0 = m0;

    let t0 = state.t;
    let dt_out = cfg.output_interval;
    let n_out = ((cfg.t_end - t0) / dt_out).round().max(1.0) as usize;

    let mut rows = Vec::with_capacity(n_out + 1);
    rows.push(ledger::ledger_row(&state, None, &law, cfg.q, &rate)?);
    let mut u_l2 = vec![norms::lp_norm_vector(&state.u, 2.0)?];
    let mut max_div = 0.0f64;
    let mut next_checkpoint = if cfg.checkpoint_interval > 0.0 {
        cfg.checkpoint_interval
    } else {
        f64::INFINITY
    };

    for out_idx in 1..=n_out {
        let t_target = t0 + out_idx as f64 * dt_out;
        let mut last: Option<(FluidState, f64)> = None;
        while state.t < t_target - 1e-9 * dt_out {
            let remaining = t_target - state.t;
            let stable = stepper::stable_dt(&state, &params);
            let n_sub = (remaining / stable).ceil().max(1.0);
            let dt = remaining / n_sub;
            let prev = state.clone();
            let (next, rep) = if cfg.adaptive {
                let (s, r, _, _) =
                    stepper::step_doubling(&prev, &law, dt, &params, cfg.controller_tol)?;
                (s, r)
            } else {
                stepper::step(&prev, &law, dt, &params)?
            };
            max_div = max_div.max(rep.div_residual);
            last = Some((prev, rep.dt_used));
            state = next;
        }
        state.t = t_target; // remove accumulated rounding
        let row = match &last {
            Some((prev, dt)) => ledger::ledger_row(&state, Some((prev, *dt)), &law, cfg.q, &rate)?,
            None => ledger::ledger_row(&state, None, &law, cfg.q, &rate)?,
        };
        rows.push(row);
        u_l2.push(norms::lp_norm_vector(&state.u, 2.0)?);
        if let Some(dir) = out_dir {
            if state.t >= next_checkpoint - 1e-9 * dt_out {
                output::write_checkpoint(
                    &dir.join(format!("checkpoint_{out_idx:05}.bin")),
                    &state,
                )?;
                next_checkpoint += cfg.checkpoint_interval;
            }
        }
    }
    if let Some(dir) = out_dir {
        output::write_checkpoint(&dir.join("checkpoint_final.bin"), &state)?;
    }
    Ok(SimulationTrace {
        rows,
        u_l2,
        max_div_residual: max_div,
        final_state: state,
        rate,
    })
}

/// Calibrated C1: configured value, or the run's own c1-ratio supremum.
fn calibrate_c1(cfg: &SimConfig, rows: &[LedgerRow]) -> f64 {
    if cfg.c1 > 0.0 {
        return cfg.c1;
    }
    rows.iter()
        .map(|r| r.c1_ratio)
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-6)
}

fn decay_verdicts(cfg: &SimConfig, trace: &SimulationTrace) -> Result<(Vec<Verdict>, RateParams)> {
    let rows = &trace.rows;
    let c1 = calibrate_c1(cfg, rows);
    let rate = ledger::sigma_and_threshold(
        cfg.mu_min,
        cfg.kappa,
        cfg.rho_bar(),
        trace.final_state.rho.grid.diameter,
        c1,
        trace.rate.m0,
    )?;
    let mut verdicts = Vec::new();

    verdicts.push(ledger::monotone_energy_verdict(rows, cfg.slack_rel));
    verdicts.push(ledger::gronwall_mu_verdict(rows, cfg.slack_abs));
    let boot = ledger::bootstrap_monitor(rows, &rate, rows[0].grad_mu_lq, cfg.q);
    verdicts.push(boot.cond_grad_mu);
    verdicts.push(boot.cond_dissipation);
    verdicts.push(boot.strong_grad_mu);
    verdicts.push(boot.strong_dissipation);

    // mass below the calibrated smallness threshold
    verdicts.push(Verdict {
        name: "mass_below_threshold".into(),
        holds: rate.m0 < rate.m0_threshold,
        margin: rate.m0_threshold - rate.m0,
        first_violation_t: None,
    });

    // runtime Poincaré check on the velocity
    let d = trace.final_state.rho.grid.diameter;
    let margins: Vec<(f64, f64)> = rows
        .iter()
        .zip(trace.u_l2.iter())
        .map(|(r, ul2)| {
            let denom = r.grad_u_l2;
            let m = if denom > 0.0 {
                d - ul2 / denom
            } else {
                f64::INFINITY
            };
            (r.t, m + cfg.slack_abs)
        })
        .collect();
    let mut first = None;
    let mut worst = f64::INFINITY;
    for (t, m) in &margins {
        if *m < 0.0 && first.is_none() {
            first = Some(*t);
        }
        worst = worst.min(*m);
    }
    verdicts.push(Verdict {
        name: "poincare_velocity".into(),
        holds: first.is_none(),
        margin: worst,
        first_violation_t: first,
    });

    // decay-rate fit over [zeta(T), T] (or the configured window)
    let t_end = rows.last().map(|r| r.t).unwrap_or(0.0);
    let zt = ledger::zeta(t_end);
    let (t1, t2) = if cfg.fit_t2 > cfg.fit_t1 && cfg.fit_t2 > 0.0 {
        (cfg.fit_t1, cfg.fit_t2)
    } else {
        (zt, t_end)
    };
    if t2 > t1 && t_end > zt + 1e-12 {
        match ledger::fit_decay_rate(rows, (t1, t2)) {
            Ok(fitted) => {
                verdicts.push(Verdict {
                    name: "decay_rate_at_least_09_sigma".into(),
                    holds: fitted >= 0.9 * rate.sigma,
                    margin: fitted - 0.9 * rate.sigma,
                    first_violation_t: None,
                });
            }
            Err(e) => {
                verdicts.push(Verdict {
                    name: format!("decay_rate_fit_failed({e})"),
                    holds: false,
                    margin: f64::NEG_INFINITY,
                    first_violation_t: None,
                });
            }
        }
    }

    // bounded weighted suprema
    let w = ledger::weighted_series(rows, &rate);
    verdicts.push(Verdict {
        name: "weighted_sups_bounded".into(),
        holds: w.tail_bounded,
        margin: if w.tail_bounded { 0.0 } else { -1.0 },
        first_violation_t: None,
    });

    Ok((verdicts, rate))
}

fn write_summary(
    out_dir: &Path,
    cfg: &SimConfig,
    rate: &RateParams,
    rows: &[LedgerRow],
    verdicts: &[Verdict],
    extra: &str,
) -> Result<String> {
    let mut s = String::new();
    s.push_str(&format!("scenario = {}\n", cfg.scenario.as_str()));
    s.push_str(&format!("m0 = {}\n", output::format_g17(rate.m0)));
    s.push_str(&format!("sigma = {}\n", output::format_g17(rate.sigma)));
    s.push_str(&format!("c1 = {}\n", output::format_g17(rate.c1)));
    s.push_str(&format!(
        "m0_threshold = {}\n",
        output::format_g17(rate.m0_threshold)
    ));
    s.push_str(&format!("rows = {}\n", rows.len()));
    if !rows.is_empty() {
        let w = ledger::weighted_series(rows, rate);
        for (k, v) in w.entries() {
            s.push_str(&format!("{k} = {}\n", output::format_g17(v)));
        }
    }
    for v in verdicts {
        s.push_str(&format!(
            "verdict {} = {} (margin {})\n",
            v.name,
            v.holds,
            output::format_g17(v.margin)
        ));
    }
    s.push_str(extra);
    output::atomic_write(&out_dir.join("summary.txt"), s.as_bytes())?;
    Ok(s)
}

/// The decay-verification scenario.
pub fn run_decay(cfg: &SimConfig, out_dir: &Path) -> Result<ScenarioOutcome> {
    let trace = run_simulation(cfg, Some(out_dir))?;
    let (verdicts, rate) = decay_verdicts(cfg, &trace)?;
    output::write_ledger_csv(&out_dir.join("ledger.csv"), &trace.rows)?;
    output::write_verdicts(&out_dir.join("verdicts.txt"), &verdicts)?;
    let extra = format!(
        "max_div_residual = {}\n",
        output::format_g17(trace.max_div_residual)
    );
    let summary = write_summary(out_dir, cfg, &rate, &trace.rows, &verdicts, &extra)?;
    let ok = verdicts.iter().all(|v| v.holds);
    Ok(ScenarioOutcome {
        ok,
        verdicts,
        rows: trace.rows,
        summary,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Stability-only smoke test over a vacuum patch.
pub fn run_vacuum_smoke(cfg: &SimConfig, out_dir: &Path) -> Result<ScenarioOutcome> {
    let trace = run_simulation(cfg, Some(out_dir))?;
    let rows = &trace.rows;
    let mut verdicts = Vec::new();
    let finite = rows.iter().all(|r| {
        r.e.is_finite() && r.d.is_finite() && r.grad_u_l2.is_finite() && r.mass_l1.is_finite()
    }) && trace.final_state.u.max_abs().is_finite();
    verdicts.push(Verdict {
        name: "fields_finite".into(),
        holds: finite,
        margin: if finite { 0.0 } else { -1.0 },
        first_violation_t: None,
    });
    let rho_bar = cfg.rho_bar();
    let rho_ok = rows
        .iter()
        .all(|r| r.rho_min >= -1e-10 && r.rho_max <= rho_bar + 1e-10);
    verdicts.push(Verdict {
        name: "density_bounds".into(),
        holds: rho_ok,
        margin: if rho_ok { 0.0 } else { -1.0 },
        first_violation_t: None,
    });
    verdicts.push(Verdict {
        name: "divergence_controlled".into(),
        holds: trace.max_div_residual <= cfg.slack_abs,
        margin: cfg.slack_abs - trace.max_div_residual,
        first_violation_t: None,
    });
    output::write_ledger_csv(&out_dir.join("ledger.csv"), rows)?;
    output::write_verdicts(&out_dir.join("verdicts.txt"), &verdicts)?;
    let summary = write_summary(out_dir, cfg, &trace.rate, rows, &verdicts, "")?;
    let ok = verdicts.iter().all(|v| v.holds);
    Ok(ScenarioOutcome {
        ok,
        verdicts,
        rows: trace.rows,
        summary,
        out_dir: out_dir.to_path_buf(),
    })
}

/// One sweep sample: total mass against the realized cross-term ratios.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub radius: f64,
    pub m0: f64,
    pub sup_c1_ratio: f64,
    /// sup over rows of |B| / (||grad u|| ||grad theta||)
    pub sup_b_over_grads: f64,
}

/// Fixed-height blobs of varying support, run in parallel worker
/// threads (capped by `BENARD_THREADS`).
pub fn run_threshold_sweep(
    cfg: &SimConfig,
    radii: &[f64],
    out_dir: &Path,
) -> Result<ScenarioOutcome> {
    if radii.is_empty() {
        return Err(SimError::Config("threshold sweep needs at least one radius".into()));
    }
    let max_threads = std::env::var("BENARD_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        });
    let results: Mutex<Vec<(usize, Result<SweepPoint>)>> = Mutex::new(Vec::new());
    let jobs: Mutex<std::collections::VecDeque<(usize, f64)>> =
        Mutex::new(radii.iter().cloned().enumerate().collect());
    std::thread::scope(|scope| {
        for _ in 0..max_threads.min(radii.len()) {
            scope.spawn(|| loop {
                let job = jobs.lock().unwrap().pop_front();
                let Some((idx, radius)) = job else { break };
                let mut sub = cfg.clone();
                sub.blob_radius = radius;
                sub.scenario = Scenario::Decay;
                let dir = out_dir.join(format!("run_{idx:02}"));
                let point = (|| -> Result<SweepPoint> {
                    std::fs::create_dir_all(&dir)?;
                    output::atomic_write(
                        &dir.join("resolved_config.txt"),
                        sub.resolved_text().as_bytes(),
                    )?;
                    let trace = run_simulation(&sub, Some(&dir))?;
                    output::write_ledger_csv(&dir.join("ledger.csv"), &trace.rows)?;
                    let sup_c1 = trace
                        .rows
                        .iter()
                        .map(|r| r.c1_ratio)
                        .fold(0.0f64, f64::max);
                    let sup_b = trace
                        .rows
                        .iter()
                        .filter(|r| r.grad_u_l2 > 0.0 && r.grad_theta_l2 > 0.0)
                        .map(|r| r.b.abs() / (r.grad_u_l2 * r.grad_theta_l2))
                        .fold(0.0f64, f64::max);
                    Ok(SweepPoint {
                        radius,
                        m0: trace.rate.m0,
                        sup_c1_ratio: sup_c1,
                        sup_b_over_grads: sup_b,
                    })
                })();
                results.lock().unwrap().push((idx, point));
            });
        }
    });
    let mut collected = results.into_inner().unwrap();
    collected.sort_by_key(|(idx, _)| *idx);
    let mut points = Vec::new();
    for (_, r) in collected {
        points.push(r?);
    }

    // table
    let mut csv = String::from("radius,m0,sup_c1_ratio,sup_b_over_grads\n");
    for p in &points {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            output::format_g17(p.radius),
            output::format_g17(p.m0),
            output::format_g17(p.sup_c1_ratio),
            output::format_g17(p.sup_b_over_grads)
        ));
    }
    output::atomic_write(&out_dir.join("sweep.csv"), csv.as_bytes())?;

    let scaled: Vec<f64> = points
        .iter()
        .map(|p| p.sup_b_over_grads / p.m0.powf(2.0 / 3.0))
        .collect();
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(0.0f64, f64::max);
    let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let c1_bounded = points.iter().all(|p| p.sup_c1_ratio.is_finite());
    let verdicts = vec![
        Verdict {
            name: "sweep_c1_bounded".into(),
            holds: c1_bounded,
            margin: if c1_bounded { 0.0 } else { -1.0 },
            first_violation_t: None,
        },
        Verdict {
            name: "sweep_b_scaling_within_factor_2".into(),
            holds: spread < 2.0,
            margin: 2.0 - spread,
            first_violation_t: None,
        },
    ];
    output::write_verdicts(&out_dir.join("verdicts.txt"), &verdicts)?;
    let mut extra = String::new();
    for (p, s) in points.iter().zip(scaled.iter()) {
        extra.push_str(&format!(
            "radius {} m0 {} ratio/m0^(2/3) {}\n",
            p.radius,
            output::format_g17(p.m0),
            output::format_g17(*s)
        ));
    }
    extra.push_str(&format!("spread = {}\n", output::format_g17(spread)));
    let m0s: Vec<f64> = points.iter().map(|p| p.m0).collect();
    let m0_range = m0s.iter().cloned().fold(0.0f64, f64::max)
        / m0s.iter().cloned().fold(f64::INFINITY, f64::min);
    extra.push_str(&format!("m0_range = {}\n", output::format_g17(m0_range)));
    let rate = ledger::sigma_and_threshold(
        cfg.mu_min,
        cfg.kappa,
        cfg.rho_bar(),
        cfg.grid()?.diameter,
        1.0,
        m0s.first().cloned().unwrap_or(1.0),
    )?;
    let summary = write_summary(out_dir, cfg, &rate, &[], &verdicts, &extra)?;
    let ok = verdicts.iter().all(|v| v.holds);
    Ok(ScenarioOutcome {
        ok,
        verdicts,
        rows: Vec::new(),
        summary,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Convergence and regularity-probe report for the manufactured Stokes
/// problems.
pub fn run_stokes_probe(cfg: &SimConfig, out_dir: &Path) -> Result<ScenarioOutcome> {
    let base = cfg.cells[0].max(16);
    let sizes = [base / 4, base / 2, base];
    let tol = 1e-9;
    let mut csv = String::from("case,n,velocity_l2_error,order,ratio_l2,ratio_lr,p_h1,p_over_mu_h1\n");
    let mut verdicts = Vec::new();
    let mut extra = String::new();
    for case in [mms::MmsCase::ConstantMu, mms::MmsCase::VariableMu] {
        let mut errors: Vec<f64> = Vec::new();
        let mut ratios: Vec<f64> = Vec::new();
        for (i, n) in sizes.iter().enumerate() {
            let grid = Grid::new(2, [*n, *n, 1], [1.0, 1.0, 1.0])?;
            let problem = mms::build_problem(grid, case);
            let sol = stokes::solve_stokes(&problem, tol)?;
            let err = mms::velocity_error(&sol.u);
            let ratio = stokes::regularity_probe(&problem, &sol, cfg.q)?;
            let ratio_lr = stokes::regularity_probe_lr(&problem, &sol, cfg.q, cfg.r)?;
            let p_h1 = stokes::pressure_h1(&sol.p);
            let p_mu = stokes::pressure_over_mu_h1(&sol.p, &problem.mu);
            let order = if i > 0 {
                (errors[i - 1] / err).log2()
            } else {
                f64::NAN
            };
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                match case {
                    mms::MmsCase::ConstantMu => "constant_mu",
                    mms::MmsCase::VariableMu => "variable_mu",
                },
                n,
                output::format_g17(err),
                output::format_g17(order),
                output::format_g17(ratio),
                output::format_g17(ratio_lr),
                output::format_g17(p_h1),
                output::format_g17(p_mu)
            ));
            errors.push(err);
            ratios.push(ratio);
        }
        let name = match case {
            mms::MmsCase::ConstantMu => "constant_mu",
            mms::MmsCase::VariableMu => "variable_mu",
        };
        for i in 1..errors.len() {
            let order = (errors[i - 1] / errors[i]).log2();
            verdicts.push(Verdict {
                name: format!("stokes_order_{name}_{}to{}", sizes[i - 1], sizes[i]),
                holds: order >= 1.9,
                margin: order - 1.9,
                first_violation_t: None,
            });
        }
        let drift = (ratios[2] - ratios[1]).abs() / ratios[1];
        verdicts.push(Verdict {
            name: format!("stokes_probe_stable_{name}"),
            holds: drift <= 0.10,
            margin: 0.10 - drift,
            first_violation_t: None,
        });
        let running_max = ratios.iter().cloned().fold(0.0f64, f64::max);
        extra.push_str(&format!(
            "{name}: errors {:?} probe drift {} probe running max {}\n",
            errors,
            output::format_g17(drift),
            output::format_g17(running_max)
        ));
    }
    output::atomic_write(&out_dir.join("stokes_probe.csv"), csv.as_bytes())?;
    output::write_verdicts(&out_dir.join("verdicts.txt"), &verdicts)?;
    let rate = ledger::sigma_and_threshold(
        cfg.mu_min,
        cfg.kappa,
        cfg.rho_bar(),
        cfg.grid()?.diameter,
        1.0,
        1.0,
    )?;
    let summary = write_summary(out_dir, cfg, &rate, &[], &verdicts, &extra)?;
    let ok = verdicts.iter().all(|v| v.holds);
    Ok(ScenarioOutcome {
        ok,
        verdicts,
        rows: Vec::new(),
        summary,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Rotation-transport oracle: one revolution of an offset blob.
pub struct RotationOracleReport {
    pub mass_drift_rel: f64,
    pub min_undershoot: f64,
    pub max_overshoot: f64,
    pub shape_error_rel: f64,
}

pub fn rotation_oracle(n: usize, cfl: f64, scheme: transport::AdvectScheme) -> Result<RotationOracleReport> {
    let grid = Grid::new(2, [n, n, 1], [1.0, 1.0, 1.0])?;
    let rho0 = ScalarField::from_fn(grid, Boundary::Free, |x, y, _| {
        let r2 = (x - 0.5) * (x - 0.5) + (y - 0.68) * (y - 0.68);
        (-r2 / (2.0 * 0.05 * 0.05)).exp()
    });
    let u = VectorField::from_fn_raw(grid, |a, x, y, _| match a {
        0 => -(y - 0.5),
        _ => x - 0.5,
    });
    let umax = u.max_abs();
    let dt0 = cfl * grid.min_spacing() / umax;
    let steps = (2.0 * std::f64::consts::PI / dt0).ceil() as usize;
    let dt = 2.0 * std::f64::consts::PI / steps as f64;
    let m0 = norms::lp_norm_scalar(&rho0, 1.0)?;
    let lo0 = rho0.min();
    let hi0 = rho0.max();
    let mut rho = rho0.clone();
    let mut min_under = 0.0f64;
    let mut max_over = 0.0f64;
    for _ in 0..steps {
        rho = transport::advect_density(&rho, &u, dt, scheme)?;
        min_under = min_under.max(lo0 - rho.min());
        max_over = max_over.max(rho.max() - hi0);
    }
    let m1 = norms::lp_norm_scalar(&rho, 1.0)?;
    let mut err = rho.clone();
    for (e, r) in err.lat.data.iter_mut().zip(rho0.lat.data.iter()) {
        *e -= r;
    }
    Ok(RotationOracleReport {
        mass_drift_rel: (m1 - m0).abs() / m0,
        min_undershoot: min_under,
        max_overshoot: max_over,
        shape_error_rel: norms::lp_norm_scalar(&err, 1.0)? / m0,
    })
}

/// Heat-decay oracle: frozen velocity, unit density, first Dirichlet
/// mode; returns the fitted energy decay rate (target 4 pi^2 kappa).
pub fn heat_decay_oracle(n: usize, dt: f64, t_end: f64, fit_from: f64) -> Result<f64> {
    let text = format!(
        "scenario = decay\nt_end = {t_end}\nnx = {n}\nny = {n}\nkappa = 1\n\
         rho_background = 1\nblob_height = 0\nblob_radius = 0.1\n\
         u0_amp = 0\ntheta0_amp = 1\nfreeze_velocity = true\nbuoyancy = false\nsource = false\n\
         dt_max = {dt}\noutput_interval = {out}\nmu_min = 1\nmu_max = 1\nvisc_b = 0\n",
        out = 8.0 * dt,
    );
    let cfg = crate::config::parse_config(&text)?;
    let trace = run_simulation(&cfg, None)?;
    ledger::fit_decay_rate(&trace.rows, (fit_from, t_end))
}

/// The oracle suite: analytic checks of transport, diffusion, the
/// manufactured Stokes problem and the functional-inequality probes.
pub fn run_oracles(cfg: &SimConfig, out_dir: &Path) -> Result<ScenarioOutcome> {
    let mut verdicts = Vec::new();
    let mut extra = String::new();
    let n = cfg.cells[0].max(16);

    // transport
    let rot = rotation_oracle(n, cfg.cfl, transport::AdvectScheme::Upwind)?;
    verdicts.push(Verdict {
        name: "oracle_rotation_mass".into(),
        holds: rot.mass_drift_rel <= 1e-12,
        margin: 1e-12 - rot.mass_drift_rel,
        first_violation_t: None,
    });
    let max_principle = rot.min_undershoot.max(rot.max_overshoot);
    verdicts.push(Verdict {
        name: "oracle_rotation_max_principle".into(),
        holds: max_principle <= 1e-10,
        margin: 1e-10 - max_principle,
        first_violation_t: None,
    });
    extra.push_str(&format!(
        "rotation: mass drift {} overshoot {} shape error {}\n",
        output::format_g17(rot.mass_drift_rel),
        output::format_g17(max_principle),
        output::format_g17(rot.shape_error_rel)
    ));

    // diffusion
    let rate = heat_decay_oracle(n, 4e-4, 1.2, 1.0)?;
    let target = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
    let rel = (rate - target).abs() / target;
    verdicts.push(Verdict {
        name: "oracle_heat_decay_rate".into(),
        holds: rel <= 0.02,
        margin: 0.02 - rel,
        first_violation_t: None,
    });
    extra.push_str(&format!(
        "heat: fitted {} target {}\n",
        output::format_g17(rate),
        output::format_g17(target)
    ));

    // manufactured Stokes (short ladder; the dedicated probe runs three)
    let mut errors = Vec::new();
    for m in [n / 4, n / 2] {
        let grid = Grid::new(2, [m, m, 1], [1.0, 1.0, 1.0])?;
        let problem = mms::build_problem(grid, mms::MmsCase::VariableMu);
        let sol = stokes::solve_stokes(&problem, 1e-9)?;
        errors.push(mms::velocity_error(&sol.u));
    }
    let order = (errors[0] / errors[1]).log2();
    verdicts.push(Verdict {
        name: "oracle_stokes_order".into(),
        holds: order >= 1.9,
        margin: order - 1.9,
        first_violation_t: None,
    });
    extra.push_str(&format!("stokes: order {}\n", output::format_g17(order)));

    // Poincaré / GN probes over seeded random fields
    let grid = Grid::new(2, [n, n, 1], [1.0, 1.0, 1.0])?;
    let grid_half = Grid::new(2, [n / 2, n / 2, 1], [1.0, 1.0, 1.0])?;
    let mut worst_poincare = f64::NEG_INFINITY;
    let mut worst_p2 = 0.0f64;
    let mut worst_drift = 0.0f64;
    let mut gn_c_p4 = 0.0f64;
    let mut gn_c_p6 = 0.0f64;
    let mut probe_rows =
        String::from("seed,poincare_ratio,poincare_bound,poincare_satisfied,gn_p2,gn_p4,gn_p6\n");
    for i in 0..100 {
        let seed = cfg.seed.wrapping_add(i);
        let f = inequalities::random_dirichlet_field(grid, seed, 4);
        let pr = inequalities::poincare_ratio(&f)?;
        worst_poincare = worst_poincare.max(pr.ratio - grid.diameter);
        let g2 = inequalities::gn_ratio(&f, 2.0)?;
        worst_p2 = worst_p2.max((g2.ratio - 1.0).abs());
        let fh = inequalities::random_dirichlet_field(grid_half, seed, 4);
        let mut fine_ratios = [0.0f64; 2];
        for (slot, p) in [4.0, 6.0].into_iter().enumerate() {
            let fine = inequalities::gn_ratio(&f, p)?.ratio;
            let coarse = inequalities::gn_ratio(&fh, p)?.ratio;
            worst_drift = worst_drift.max((fine - coarse).abs() / fine);
            fine_ratios[slot] = fine;
        }
        gn_c_p4 = gn_c_p4.max(fine_ratios[0]);
        gn_c_p6 = gn_c_p6.max(fine_ratios[1]);
        probe_rows.push_str(&format!(
            "{seed},{},{},{},{},{},{}\n",
            output::format_g17(pr.ratio),
            output::format_g17(pr.bound_claimed.unwrap_or(f64::NAN)),
            pr.satisfied,
            output::format_g17(g2.ratio),
            output::format_g17(fine_ratios[0]),
            output::format_g17(fine_ratios[1])
        ));
    }
    output::atomic_write(&out_dir.join("probes.csv"), probe_rows.as_bytes())?;
    verdicts.push(Verdict {
        name: "oracle_poincare_100_fields".into(),
        holds: worst_poincare <= 0.0,
        margin: -worst_poincare,
        first_violation_t: None,
    });
    verdicts.push(Verdict {
        name: "oracle_gn_p2_identity".into(),
        holds: worst_p2 <= 1e-12,
        margin: 1e-12 - worst_p2,
        first_violation_t: None,
    });
    verdicts.push(Verdict {
        name: "oracle_gn_refinement_stable".into(),
        holds: worst_drift <= 0.05,
        margin: 0.05 - worst_drift,
        first_violation_t: None,
    });
    extra.push_str(&format!(
        "probes: worst poincare margin {} p2 deviation {} gn drift {}\n",
        output::format_g17(-worst_poincare),
        output::format_g17(worst_p2),
        output::format_g17(worst_drift)
    ));
    // empirical lower bounds on the GN constant: running max of ratios
    extra.push_str(&format!(
        "gn_empirical_c_p4 = {}\ngn_empirical_c_p6 = {}\n",
        output::format_g17(gn_c_p4),
        output::format_g17(gn_c_p6)
    ));

    output::write_verdicts(&out_dir.join("verdicts.txt"), &verdicts)?;
    let rate_params = ledger::sigma_and_threshold(
        cfg.mu_min,
        cfg.kappa,
        cfg.rho_bar(),
        grid.diameter,
        1.0,
        1.0,
    )?;
    let summary = write_summary(out_dir, cfg, &rate_params, &[], &verdicts, &extra)?;
    let ok = verdicts.iter().all(|v| v.holds);
    Ok(ScenarioOutcome {
        ok,
        verdicts,
        rows: Vec::new(),
        summary,
        out_dir: out_dir.to_path_buf(),
    })
}
