//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with its measured numbers. Criteria 5-7 and 10 share
//! a single decay run.

use benard::config::parse_config;
use benard::grid::Grid;
use benard::inequalities;
use benard::ledger;
use benard::scenario::{self, ScenarioOutcome};
use benard::stokes::{self, mms};
use benard::transport::AdvectScheme;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

fn outdir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!(
        "benard-acceptance-{tag}-{}",
        std::process::id()
    ));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn verdict_line(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// Criterion 1: conservation and max principle of the transport oracle.
#[test]
fn criterion_01_conservation_and_max_principle() {
    let start = Instant::now();
    let rep = scenario::rotation_oracle(64, 0.5, AdvectScheme::Upwind).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = rep.mass_drift_rel <= 1e-12
        && rep.min_undershoot <= 1e-10
        && rep.max_overshoot <= 1e-10
        && elapsed < 30.0;
    verdict_line(
        "1 (conservation & max principle)",
        pass,
        &format!(
            "mass drift {:.2e}, undershoot {:.2e}, overshoot {:.2e}, shape error {:.3}, {elapsed:.1}s",
            rep.mass_drift_rel, rep.min_undershoot, rep.max_overshoot, rep.shape_error_rel
        ),
    );
}

/// Criterion 2: heat-decay oracle within 2% of 2 kappa lambda_1 = 4 pi^2.
#[test]
fn criterion_02_heat_decay_rate() {
    let start = Instant::now();
    let rate = scenario::heat_decay_oracle(64, 4e-4, 1.2, 1.0).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let target = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
    let rel = (rate - target).abs() / target;
    let pass = rel <= 0.02 && elapsed < 30.0;
    verdict_line(
        "2 (heat decay)",
        pass,
        &format!("fitted {rate:.4} vs {target:.4} ({:.3}%), {elapsed:.1}s", 100.0 * rel),
    );
}

/// Criterion 3: manufactured Stokes convergence and probe stability.
#[test]
fn criterion_03_manufactured_stokes() {
    let start = Instant::now();
    let mut all_orders = Vec::new();
    let mut drifts = Vec::new();
    for case in [mms::MmsCase::ConstantMu, mms::MmsCase::VariableMu] {
        let mut errors = Vec::new();
        let mut ratios = Vec::new();
        for n in [16usize, 32, 64] {
            let grid = Grid::new(2, [n, n, 1], [1.0, 1.0, 1.0]).unwrap();
            let problem = mms::build_problem(grid, case);
            let sol = stokes::solve_stokes(&problem, 1e-9).unwrap();
            errors.push(mms::velocity_error(&sol.u));
            ratios.push(stokes::regularity_probe(&problem, &sol, 4.0).unwrap());
        }
        for i in 1..errors.len() {
            all_orders.push((errors[i - 1] / errors[i]).log2());
        }
        drifts.push((ratios[2] - ratios[1]).abs() / ratios[1]);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let min_order = all_orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_drift = drifts.iter().cloned().fold(0.0f64, f64::max);
    let pass = min_order >= 1.9 && max_drift <= 0.10 && elapsed < 120.0;
    verdict_line(
        "3 (manufactured Stokes)",
        pass,
        &format!(
            "orders {:?}, probe drift {:.3}%, {elapsed:.1}s",
            all_orders
                .iter()
                .map(|o| (o * 100.0).round() / 100.0)
                .collect::<Vec<_>>(),
            100.0 * max_drift
        ),
    );
}

/// Criterion 4: energy-identity residual is first order in dt. The
/// comparison branches from a shared warm state so both runs resolve the
/// same dynamics (the initial momentum relaxation under small density is
/// stiffer than any tested dt).
#[test]
fn criterion_04_energy_identity_convergence() {
    use benard::initial;
    use benard::stepper;

    let start = Instant::now();
    // order-one background density and moderate kappa keep the coupled
    // dynamics alive and temporally resolved over the window, while the
    // total mass stays below the calibrated threshold
    let cfg = parse_config(
        "scenario = decay\nt_end = 1.0\nnx = 32\nny = 32\nkappa = 0.2\n\
         visc_a = 1\nvisc_b = 0.2\n\
         rho_background = 1.0\nblob_height = 0.2\nblob_radius = 0.1\n\
         u0_amp = 0.3\ntheta0_amp = 0.5\n",
    )
    .unwrap();
    let law = cfg.law().unwrap();
    let params = cfg.step_params();
    let rate =
        ledger::sigma_and_threshold(cfg.mu_min, cfg.kappa, cfg.rho_bar(), 2.0f64.sqrt(), 1.0, 0.1)
            .unwrap();

    // warm start: 0 -> 0.1 at the finest step
    let mut warm = initial::build_state(&cfg).unwrap();
    for _ in 0..40 {
        let (next, _) = stepper::step(&warm, &law, 0.0025, &params).unwrap();
        warm = next;
    }

    // branch: rows every 5 steps over the same window [0.1, 0.6]
    let branch = |dt: f64, rows_wanted: usize| -> Vec<ledger::LedgerRow> {
        let mut state = warm.clone();
        let mut rows = vec![ledger::ledger_row(&state, None, &law, cfg.q, &rate).unwrap()];
        for _ in 0..rows_wanted {
            let mut prev = state.clone();
            for _ in 0..5 {
                prev = state.clone();
                let (next, _) = stepper::step(&state, &law, dt, &params).unwrap();
                state = next;
            }
            rows.push(ledger::ledger_row(&state, Some((&prev, dt)), &law, cfg.q, &rate).unwrap());
        }
        rows
    };
    let rms = |rows: &[ledger::LedgerRow]| {
        let r = ledger::energy_identity_residual(rows).unwrap();
        (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt()
    };
    let coarse = branch(0.01, 10);
    let fine = branch(0.005, 20);
    let ratio = rms(&coarse) / rms(&fine);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = ratio >= 1.8 && elapsed < 120.0;
    verdict_line(
        "4 (energy identity)",
        pass,
        &format!(
            "rms {:.3e} vs {:.3e}, ratio {ratio:.2}, {elapsed:.1}s",
            rms(&coarse),
            rms(&fine)
        ),
    );
}

/// The shared decay run for criteria 5, 6, 7 and 10.
fn decay_run() -> &'static (ScenarioOutcome, PathBuf, f64) {
    static RUN: OnceLock<(ScenarioOutcome, PathBuf, f64)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let cfg = decay_config();
        let dir = outdir("decay-main");
        let outcome = scenario::run_scenario(&cfg, &dir).unwrap();
        (outcome, dir, start.elapsed().as_secs_f64())
    })
}

fn decay_config() -> benard::config::SimConfig {
    parse_config(
        "scenario = decay\nt_end = 2.0\nnx = 64\nny = 64\n\
         dt_max = 0.02\noutput_interval = 0.05\n\
         rho_background = 0.05\nblob_height = 0.95\nblob_radius = 0.12\n\
         u0_amp = 0.1\ntheta0_amp = 0.5\nq = 4\n",
    )
    .unwrap()
}

fn find<'a>(outcome: &'a ScenarioOutcome, name: &str) -> &'a ledger::Verdict {
    outcome
        .verdicts
        .iter()
        .find(|v| v.name == name)
        .unwrap_or_else(|| panic!("verdict {name} missing"))
}

/// Criterion 5: monotone energy and at-least-0.9-sigma decay.
#[test]
fn criterion_05_monotone_energy_and_decay() {
    let (outcome, _, elapsed) = decay_run();
    let mono = find(outcome, "monotone_energy");
    let decay = find(outcome, "decay_rate_at_least_09_sigma");
    let mass = find(outcome, "mass_below_threshold");
    let sigma_line = outcome
        .summary
        .lines()
        .find(|l| l.starts_with("sigma"))
        .unwrap_or("")
        .to_string();
    let pass = mono.holds && decay.holds && mass.holds && *elapsed < 300.0;
    verdict_line(
        "5 (monotone energy + exponential decay)",
        pass,
        &format!(
            "monotone {} (margin {:.2e}), rate margin {:.3}, mass margin {:.3}, {sigma_line}, {elapsed:.0}s",
            mono.holds, mono.margin, decay.margin, mass.margin
        ),
    );
}

/// Criterion 6: Groenwall bound on grad mu along the same run.
#[test]
fn criterion_06_gronwall_grad_mu() {
    let (outcome, _, _) = decay_run();
    let v = find(outcome, "gronwall_grad_mu");
    verdict_line(
        "6 (Groenwall bound on grad mu)",
        v.holds,
        &format!("margin {:.3e}", v.margin),
    );
}

/// Criterion 7: bootstrap conditions and strengthened conclusions.
#[test]
fn criterion_07_bootstrap_conditions() {
    let (outcome, _, _) = decay_run();
    let names = [
        "bootstrap_grad_mu_4x",
        "bootstrap_int_grad_u4_2x",
        "bootstrap_grad_mu_2x",
        "bootstrap_int_grad_u4_1x",
    ];
    let mut detail = String::new();
    let mut pass = true;
    for n in names {
        let v = find(outcome, n);
        pass &= v.holds;
        detail.push_str(&format!("{n} margin {:.3e}; ", v.margin));
    }
    verdict_line("7 (bootstrap monitor)", pass, &detail);
}

/// Criterion 8: Poincaré and GN probes over 100 seeded fields.
#[test]
fn criterion_08_inequality_probes() {
    let start = Instant::now();
    let g64 = Grid::new(2, [64, 64, 1], [1.0, 1.0, 1.0]).unwrap();
    let g32 = Grid::new(2, [32, 32, 1], [1.0, 1.0, 1.0]).unwrap();
    let mut worst_margin = f64::INFINITY;
    let mut worst_p2 = 0.0f64;
    let mut worst_drift = 0.0f64;
    for seed in 0..100u64 {
        let f = inequalities::random_dirichlet_field(g64, seed, 4);
        let pr = inequalities::poincare_ratio(&f).unwrap();
        worst_margin = worst_margin.min(g64.diameter - pr.ratio);
        worst_p2 = worst_p2.max((inequalities::gn_ratio(&f, 2.0).unwrap().ratio - 1.0).abs());
        let fh = inequalities::random_dirichlet_field(g32, seed, 4);
        for p in [4.0, 6.0] {
            let fine = inequalities::gn_ratio(&f, p).unwrap().ratio;
            let coarse = inequalities::gn_ratio(&fh, p).unwrap().ratio;
            worst_drift = worst_drift.max((fine - coarse).abs() / fine);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_margin >= 0.0 && worst_p2 <= 1e-12 && worst_drift <= 0.05 && elapsed < 60.0;
    verdict_line(
        "8 (Poincare/GN probes)",
        pass,
        &format!(
            "poincare margin {worst_margin:.3}, p2 deviation {worst_p2:.2e}, refinement drift {:.2}%, {elapsed:.1}s",
            100.0 * worst_drift
        ),
    );
}

/// Criterion 9: cross-term scaling across a 16x mass range.
#[test]
fn criterion_09_threshold_sweep_scaling() {
    let start = Instant::now();
    // self-similar blob data: density, temperature and circulation all
    // share the blob's support, so the realized cross-term sharpness
    // scales exactly like the L^{3/2} mass norm across radii. The runs
    // use the diagnostic switches (no buoyancy feedback, no convective
    // source) so the supremum stays at the matched configuration; the
    // coupled feedback terms are exercised by the decay criteria.
    let cfg = parse_config(
        "scenario = threshold-sweep\nt_end = 0.02\ndim = 3\nnx = 32\nny = 32\nnz = 32\n\
         dt_max = 0.005\noutput_interval = 0.01\nkappa = 0.005\n\
         visc_a = 0.005\nvisc_b = 0.005\nbuoyancy = false\nsource = false\n\
         rho_background = 0\nblob_height = 1\ntheta0_kind = blob\ntheta0_amp = 1\n\
         u0_kind = blob\nu0_amp = 0.05\neps_rho = 0.02\nsolver_tol = 1e-9\nproj_tol = 1e-9\n\
         sweep_values = 0.17,0.2315,0.3153,0.4284\n",
    )
    .unwrap();
    let dir = outdir("sweep");
    let outcome = scenario::run_scenario(&cfg, &dir).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let spread = find(&outcome, "sweep_b_scaling_within_factor_2");
    let m0_range = outcome
        .summary
        .lines()
        .find(|l| l.starts_with("m0_range"))
        .and_then(|l| l.split('=').nth(1))
        .and_then(|v| v.trim().parse::<f64>().ok())
        .unwrap_or(0.0);
    let pass = outcome.ok && m0_range >= 15.5 && elapsed < 600.0;
    verdict_line(
        "9 (threshold-sweep scaling)",
        pass,
        &format!(
            "spread margin {:.3}, m0 range {m0_range:.1}x, {elapsed:.0}s",
            spread.margin
        ),
    );
}

/// Criterion 10: repeated criterion-5 run is byte-identical.
#[test]
fn criterion_10_determinism() {
    let (_, dir, _) = decay_run();
    let first = std::fs::read(dir.join("ledger.csv")).unwrap();
    let cfg = decay_config();
    let dir2 = outdir("decay-repeat");
    scenario::run_scenario(&cfg, &dir2).unwrap();
    let second = std::fs::read(dir2.join("ledger.csv")).unwrap();
    let pass = first == second;
    verdict_line(
        "10 (determinism)",
        pass,
        &format!("{} bytes compared", first.len()),
    );
}
