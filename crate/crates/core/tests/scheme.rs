//! Scheme-level integration tests: temporal refinement of the energy
//! identity on the frozen-velocity heat run, the transport Groenwall
//! check on a rotating blob, and the bundled oracle scenario.

use benard::config::parse_config;
use benard::field::{Boundary, ScalarField, VectorField};
use benard::grid::Grid;
use benard::ledger;
use benard::norms;
use benard::scenario;
use benard::transport::{self, AdvectScheme};
use benard::viscosity::ViscosityLaw;

/// Frozen-velocity heat decay: the energy-identity residual is the
/// scheme's first-order truncation and halves with dt.
#[test]
fn heat_run_residual_scales_linearly_with_dt() {
    let run = |dt: f64| -> f64 {
        let cfg = parse_config(&format!(
            "scenario = decay\nt_end = 0.04\nnx = 32\nny = 32\nkappa = 1\n\
             rho_background = 1\nblob_height = 0\nblob_radius = 0.1\n\
             u0_amp = 0\ntheta0_amp = 1\nfreeze_velocity = true\n\
             buoyancy = false\nsource = false\nmu_min = 1\nmu_max = 1\nvisc_b = 0\n\
             dt_max = {dt}\noutput_interval = {}\n",
            4.0 * dt
        ))
        .unwrap();
        let trace = scenario::run_simulation(&cfg, None).unwrap();
        let r = ledger::energy_identity_residual(&trace.rows).unwrap();
        (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt()
    };
    let coarse = run(0.002);
    let fine = run(0.001);
    let ratio = coarse / fine;
    assert!(
        ratio > 1.8 && ratio < 2.4,
        "rms {coarse:.3e} vs {fine:.3e}, ratio {ratio:.2}"
    );
}

/// Rotating-blob transport: the Groenwall bound on grad mu(rho) holds at
/// every check time with the accumulated exponent.
#[test]
fn rotating_blob_satisfies_gronwall_bound() {
    let n = 32;
    let g = Grid::new(2, [n, n, 1], [1.0, 1.0, 1.0]).unwrap();
    let law = ViscosityLaw::affine(1.0, 1.0, 1.0, 2.0, 1.0).unwrap();
    let rho0 = ScalarField::from_fn(g, Boundary::Free, |x, y, _| {
        let r2 = (x - 0.5) * (x - 0.5) + (y - 0.7) * (y - 0.7);
        (-r2 / (2.0 * 0.08 * 0.08)).exp()
    });
    let u = VectorField::from_fn_raw(g, |a, x, y, _| match a {
        0 => -(y - 0.5),
        _ => x - 0.5,
    });
    let q = 4.0;
    let grad_inf = norms::grad_inf_vector(&u);
    let dt = 0.4 * g.min_spacing() / u.max_abs();
    let g0 = transport::grad_mu_lq(&rho0, &law, q).unwrap();
    let mut rho = rho0;
    let mut t = 0.0;
    for step in 1..=200 {
        rho = transport::advect_density(&rho, &u, dt, AdvectScheme::Upwind).unwrap();
        t += dt;
        if step % 20 == 0 {
            let gq = transport::grad_mu_lq(&rho, &law, q).unwrap();
            let bound = g0 * (grad_inf * t).exp() + 1e-8;
            assert!(gq <= bound, "t={t}: {gq} vs bound {bound}");
        }
    }
}

/// The oracle scenario bundles the analytic checks and exits clean.
#[test]
fn oracle_scenario_passes_at_desk_scale() {
    let cfg = parse_config("scenario = oracles\nt_end = 1\nnx = 32\nny = 32\n").unwrap();
    let dir = std::env::temp_dir().join(format!("benard-oracles-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let outcome = scenario::run_scenario(&cfg, &dir).unwrap();
    for v in &outcome.verdicts {
        println!("{}: {} (margin {:.3e})", v.name, v.holds, v.margin);
    }
    assert!(outcome.ok, "oracle verdicts failed");
    assert!(dir.join("verdicts.txt").exists());
}

/// The empirical C1 (the run's c1-ratio supremum) is stable under grid
/// refinement of a fixed scenario.
#[test]
fn c1_supremum_stable_under_refinement() {
    let sup_c1 = |n: usize| -> f64 {
        let cfg = parse_config(&format!(
            "scenario = decay\nt_end = 0.5\nnx = {n}\nny = {n}\n\
             dt_max = 0.02\noutput_interval = 0.05\n\
             rho_background = 0.05\nblob_height = 0.95\nblob_radius = 0.12\n\
             u0_amp = 0.1\ntheta0_amp = 0.5\n"
        ))
        .unwrap();
        let trace = scenario::run_simulation(&cfg, None).unwrap();
        trace
            .rows
            .iter()
            .map(|r| r.c1_ratio)
            .fold(0.0f64, f64::max)
    };
    let coarse = sup_c1(24);
    let fine = sup_c1(48);
    let rel = (fine - coarse).abs() / fine;
    assert!(rel <= 0.25, "sup c1 {coarse:.4} vs {fine:.4} ({:.0}%)", 100.0 * rel);
}

/// Adaptive stepping and the MUSCL transport mode run through the same
/// scenario machinery.
#[test]
fn adaptive_muscl_decay_smoke() {
    let cfg = parse_config(
        "scenario = decay\nt_end = 0.04\nnx = 16\nny = 16\noutput_interval = 0.02\n\
         dt_max = 0.01\nadaptive = true\ncontroller_tol = 1e-3\nadvection = muscl\n\
         rho_background = 0.05\nblob_height = 0.95\nblob_radius = 0.15\n\
         u0_amp = 0.05\ntheta0_amp = 0.3\n",
    )
    .unwrap();
    let trace = scenario::run_simulation(&cfg, None).unwrap();
    assert_eq!(trace.rows.len(), 3);
    assert!(trace.rows.iter().all(|r| r.e.is_finite()));
    // the max principle loosens under MUSCL but stays near the band
    assert!(trace.rows.iter().all(|r| r.rho_max <= 1.0 + 1e-6));
}

/// A small 3D decay run exercises the full stepper and verdict stack in
/// three dimensions.
#[test]
fn decay_3d_smoke_with_verdicts() {
    let cfg = parse_config(
        "scenario = decay\nt_end = 0.04\ndim = 3\nnx = 12\nny = 12\nnz = 12\n\
         output_interval = 0.02\ndt_max = 0.005\n\
         rho_background = 0.05\nblob_height = 0.95\nblob_radius = 0.2\n\
         u0_amp = 0.05\ntheta0_amp = 0.3\n",
    )
    .unwrap();
    let dir = std::env::temp_dir().join(format!("benard-3d-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let outcome = scenario::run_scenario(&cfg, &dir).unwrap();
    for v in &outcome.verdicts {
        assert!(v.holds, "{} failed with margin {}", v.name, v.margin);
    }
    assert_eq!(outcome.rows.len(), 3);
}

/// Restarting from a checkpoint continues the run on the same grid.
#[test]
fn checkpoint_restart_continues_run() {
    let dir = std::env::temp_dir().join(format!("benard-restart-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = parse_config(
        "scenario = decay\nt_end = 0.04\nnx = 12\nny = 12\noutput_interval = 0.02\ndt_max = 0.005\n",
    )
    .unwrap();
    scenario::run_scenario(&cfg, &dir).unwrap();
    let chk = dir.join("checkpoint_final.bin");
    assert!(chk.exists());
    let cfg2 = parse_config(&format!(
        "scenario = decay\nt_end = 0.08\nnx = 12\nny = 12\noutput_interval = 0.02\ndt_max = 0.005\n\
         restart_from = {}\n",
        chk.display()
    ))
    .unwrap();
    let dir2 = dir.join("resumed");
    let outcome = scenario::run_scenario(&cfg2, &dir2).unwrap();
    // resumed run starts at the checkpoint time
    assert!((outcome.rows[0].t - 0.04).abs() < 1e-12);
}
