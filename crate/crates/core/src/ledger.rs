//! The estimate ledger: per-output-time norms and functionals of the
//! flow, the decay-rate machinery, and the inequality verdicts.
//!
//! Columns follow the energy identity
//! `d/dt E + 2 D = 2 B` with `E = ||sqrt(rho) u||^2 + ||sqrt(rho) theta||^2`,
//! `D = integral (2 mu |D(u)|^2 + kappa |grad theta|^2)` and
//! `B = 2 integral rho (u . e3) theta`. D and B are evaluated with the
//! same discrete forms the scheme dissipates and forces with, so the
//! residual of the identity measures splitting error alone.

use crate::error::{Result, SimError};
use crate::field::{Boundary, ScalarField, VectorField};
use crate::norms;
use crate::ops;
use crate::stepper::FluidState;
use crate::stokes;
use crate::transport;
use crate::viscosity::{viscosity_field, ViscosityLaw};

/// Default slacks for inequality verdicts (absolute plus relative).
pub const SLACK_ABS: f64 = 1e-8;
pub const SLACK_REL: f64 = 1e-10;

/// One output-time row. Backward-difference columns are `NaN` on the
/// first row, where no previous state exists.
#[derive(Debug, Clone, Copy)]
pub struct LedgerRow {
    pub t: f64,
    pub e: f64,
    pub d: f64,
    pub b: f64,
    pub grad_u_l2: f64,
    pub grad_theta_l2: f64,
    pub grad_u_linf: f64,
    pub grad_mu_lq: f64,
    pub sq_rho_ut_l2: f64,
    pub sq_rho_thetat_l2: f64,
    pub grad_rho_l2: f64,
    pub rho_t_l32: f64,
    pub mass_l1: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub c1_ratio: f64,
    pub u_h2: f64,
    pub theta_h2: f64,
}

pub const CSV_HEADER: &str = "t,E,D,B,grad_u_l2,grad_theta_l2,grad_u_linf,grad_mu_lq,sq_rho_ut_l2,sq_rho_thetat_l2,grad_rho_l2,rho_t_l32,mass_l1,rho_min,rho_max,c1_ratio,u_h2,theta_h2";

impl LedgerRow {
    pub fn values(&self) -> [f64; 18] {
        [
            self.t,
            self.e,
            self.d,
            self.b,
            self.grad_u_l2,
            self.grad_theta_l2,
            self.grad_u_linf,
            self.grad_mu_lq,
            self.sq_rho_ut_l2,
            self.sq_rho_thetat_l2,
            self.grad_rho_l2,
            self.rho_t_l32,
            self.mass_l1,
            self.rho_min,
            self.rho_max,
            self.c1_ratio,
            self.u_h2,
            self.theta_h2,
        ]
    }

    pub fn from_values(v: &[f64]) -> Result<Self> {
        if v.len() != 18 {
            return Err(SimError::Input(format!(
                "ledger row needs 18 columns, got {}",
                v.len()
            )));
        }
        Ok(LedgerRow {
            t: v[0],
            e: v[1],
            d: v[2],
            b: v[3],
            grad_u_l2: v[4],
            grad_theta_l2: v[5],
            grad_u_linf: v[6],
            grad_mu_lq: v[7],
            sq_rho_ut_l2: v[8],
            sq_rho_thetat_l2: v[9],
            grad_rho_l2: v[10],
            rho_t_l32: v[11],
            mass_l1: v[12],
            rho_min: v[13],
            rho_max: v[14],
            c1_ratio: v[15],
            u_h2: v[16],
            theta_h2: v[17],
        })
    }
}

/// Rate constants of the decay theory, all derived exactly from their
/// inputs: `sigma = min(mu_min, kappa) / (2 rho_bar d^2)` and the mass
/// threshold `m0* = mu_min kappa / (C1^2 rho_bar^{2/3})`.
#[derive(Debug, Clone, Copy)]
pub struct RateParams {
    pub mu_lower: f64,
    pub kappa: f64,
    pub rho_bar: f64,
    pub diameter: f64,
    pub sigma: f64,
    pub c1: f64,
    pub m0: f64,
    pub m0_threshold: f64,
}

/// zeta(t) = min(1, t), the window opening for time-weighted bounds.
pub fn zeta(t: f64) -> f64 {
    t.min(1.0)
}

/// Build [`RateParams`] from positive inputs.
pub fn sigma_and_threshold(
    mu_lower: f64,
    kappa: f64,
    rho_bar: f64,
    diameter: f64,
    c1: f64,
    m0: f64,
) -> Result<RateParams> {
    for (name, v) in [
        ("mu_lower", mu_lower),
        ("kappa", kappa),
        ("rho_bar", rho_bar),
        ("diameter", diameter),
        ("c1", c1),
    ] {
        if !(v > 0.0) {
            return Err(SimError::Domain(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let denom = 2.0 * rho_bar * diameter * diameter;
    let sigma = (mu_lower / denom).min(kappa / denom);
    let m0_threshold = mu_lower * kappa / (c1 * c1 * rho_bar.powf(2.0 / 3.0));
    Ok(RateParams {
        mu_lower,
        kappa,
        rho_bar,
        diameter,
        sigma,
        c1,
        m0,
        m0_threshold,
    })
}

/// Outcome of one inequality check over a run.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: String,
    pub holds: bool,
    /// Worst slack left (positive when the inequality holds strictly;
    /// negative by the amount of the worst violation).
    pub margin: f64,
    pub first_violation_t: Option<f64>,
}

impl Verdict {
    fn from_margins(name: &str, margins: &[(f64, f64)]) -> Verdict {
        let mut worst = f64::INFINITY;
        let mut first = None;
        for (t, m) in margins {
            if *m < 0.0 && first.is_none() {
                first = Some(*t);
            }
            worst = worst.min(*m);
        }
        Verdict {
            name: name.into(),
            holds: first.is_none(),
            margin: worst,
            first_violation_t: first,
        }
    }
}

/// Assemble a ledger row from a state and, when available, the state one
/// step earlier together with that step's size.
pub fn ledger_row(
    state: &FluidState,
    prev: Option<(&FluidState, f64)>,
    law: &ViscosityLaw,
    q: f64,
    params: &RateParams,
) -> Result<LedgerRow> {
    let grid = state.rho.grid;
    let va = grid.vertical_axis();
    let mu = viscosity_field(&state.rho, law)?;

    let e_kin = norms::kinetic_energy_sq(&state.u, &state.rho);
    let e_th = norms::weighted_l2_sq_cells(&grid, &state.rho.lat, &state.theta.lat);
    let e = e_kin + e_th;

    let grad_theta_sq = norms::grad_l2_sq_scalar(&state.theta);
    let d = stokes::viscous_dissipation(&state.u, &mu) + params.kappa * grad_theta_sq;

    // work of the buoyancy force plus the thermal source, each in its own
    // discrete inner product; their sum is the quadrature of
    // 2 integral rho (u . e3) theta
    let vol = grid.cell_volume();
    let rho_theta = {
        let mut l = state.rho.lat.clone();
        for (v, th) in l.data.iter_mut().zip(state.theta.lat.data.iter()) {
            *v *= th;
        }
        l
    };
    let buoy_face = ops::cell_to_face(&grid, &rho_theta, va);
    let mut w_mom = 0.0;
    {
        let shape = grid.face_shape(va);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let w = VectorField::face_weight(&grid, va, i, j, k);
                    w_mom += w * buoy_face.get(i, j, k) * state.u.comps[va].get(i, j, k);
                }
            }
        }
    }
    let u_vert = ops::face_to_cell(&state.u, va);
    let mut w_th = 0.0;
    for idx in 0..grid.n_cells() {
        w_th += vol * state.rho.lat.data[idx] * u_vert.data[idx] * state.theta.lat.data[idx];
    }
    let b = w_mom + w_th;

    let grad_u_l2 = norms::grad_l2_vector(&state.u);
    let grad_theta_l2 = grad_theta_sq.sqrt();
    let grad_u_linf = norms::grad_inf_vector(&state.u);
    let grad_mu_lq = transport::grad_lq_of(&mu, q)?;

    let (ut, tht, rho_t_l32) = match prev {
        Some((p, dt)) => {
            let mut du = state.u.clone();
            for a in 0..grid.dim {
                for (x, y) in du.comps[a].data.iter_mut().zip(p.u.comps[a].data.iter()) {
                    *x = (*x - y) / dt;
                }
            }
            let ut = norms::kinetic_energy_sq(&du, &state.rho).sqrt();
            let mut dth = state.theta.lat.clone();
            for (x, y) in dth.data.iter_mut().zip(p.theta.lat.data.iter()) {
                *x = (*x - y) / dt;
            }
            let tht = norms::weighted_l2_sq_cells(&grid, &state.rho.lat, &dth).sqrt();
            // rho_t = -u . grad rho, measured in L^{3/2}
            let mut rt = ScalarField::zeros(grid, Boundary::Free);
            let adv = scalar_advection_for_ledger(&state.rho, &state.u);
            for (x, y) in rt.lat.data.iter_mut().zip(adv.iter()) {
                *x = -y;
            }
            let rho_t = norms::lp_norm_scalar(&rt, 1.5)?;
            (ut, tht, rho_t)
        }
        None => (f64::NAN, f64::NAN, f64::NAN),
    };

    let grad_rho_l2 = {
        let mut r = state.rho.clone();
        r.boundary = Boundary::Free;
        norms::grad_l2_scalar(&r)
    };
    let moments = transport::mass_moments(&state.rho)?;

    let denom = params.rho_bar.powf(1.0 / 3.0)
        * params.m0.powf(2.0 / 3.0)
        * grad_u_l2
        * grad_theta_l2;
    let c1_ratio = if denom > 0.0 { b.abs() / denom } else { 0.0 };

    Ok(LedgerRow {
        t: state.t,
        e,
        d,
        b,
        grad_u_l2,
        grad_theta_l2,
        grad_u_linf,
        grad_mu_lq,
        sq_rho_ut_l2: ut,
        sq_rho_thetat_l2: tht,
        grad_rho_l2,
        rho_t_l32: rho_t_l32,
        mass_l1: moments.m0,
        rho_min: moments.rho_min,
        rho_max: moments.rho_max,
        c1_ratio,
        u_h2: norms::h2_norm_vector(&state.u),
        theta_h2: norms::h2_norm_scalar(&state.theta),
    })
}

/// Central-difference u . grad rho at cells (ledger column only).
fn scalar_advection_for_ledger(rho: &ScalarField, u: &VectorField) -> Vec<f64> {
    let grid = rho.grid;
    let grad = ops::gradient(rho);
    let mut out = vec![0.0; grid.n_cells()];
    let [nx, ny, nz] = grid.cells;
    let mut idx = 0;
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let mut s = 0.0;
                for a in 0..grid.dim {
                    let gf = 0.5
                        * (grad.comps[a].get(i, j, k) + grad.comps[a].shift(i, j, k, a, 1));
                    let uf = 0.5
                        * (u.comps[a].get(i, j, k) + u.comps[a].shift(i, j, k, a, 1));
                    s += gf * uf;
                }
                out[idx] = s;
                idx += 1;
            }
        }
    }
    out
}

/// Residual series of the energy identity over uniformly spaced rows:
/// `r_n = (E_{n+1} - E_n)/dt + 2 D_{n+1/2} - 2 B_{n+1/2}` with midpoint
/// averages of D and B.
pub fn energy_identity_residual(rows: &[LedgerRow]) -> Result<Vec<f64>> {
    if rows.len() < 2 {
        return Err(SimError::Input(
            "energy identity residual needs at least two rows".into(),
        ));
    }
    let dt0 = rows[1].t - rows[0].t;
    for w in rows.windows(2) {
        let dt = w[1].t - w[0].t;
        if (dt - dt0).abs() > 1e-9 * dt0.abs().max(1e-300) {
            return Err(SimError::Input(format!(
                "rows must be uniformly spaced: got {dt} vs {dt0}"
            )));
        }
    }
    Ok(rows
        .windows(2)
        .map(|w| {
            let de = (w[1].e - w[0].e) / dt0;
            let dmid = 0.5 * (w[0].d + w[1].d);
            let bmid = 0.5 * (w[0].b + w[1].b);
            de + 2.0 * dmid - 2.0 * bmid
        })
        .collect())
}

/// Least-squares decay rate of E over `[t1, t2]`: the negative slope of
/// log E against t. The window must start no earlier than zeta(T).
pub fn fit_decay_rate(rows: &[LedgerRow], window: (f64, f64)) -> Result<f64> {
    let (t1, t2) = window;
    let t_end = rows.last().map(|r| r.t).unwrap_or(0.0);
    if !(t2 > t1) {
        return Err(SimError::Input(format!(
            "decay window must satisfy t2 > t1, got [{t1}, {t2}]"
        )));
    }
    if t1 < zeta(t_end) - 1e-9 {
        return Err(SimError::Input(format!(
            "decay window must start at or after zeta(T) = {}, got {t1}",
            zeta(t_end)
        )));
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.t >= t1 - 1e-12 && r.t <= t2 + 1e-12)
        .map(|r| (r.t, r.e))
        .collect();
    if pts.len() < 2 {
        return Err(SimError::Input(format!(
            "decay window [{t1}, {t2}] holds fewer than two rows"
        )));
    }
    if pts.iter().any(|(_, e)| *e <= 0.0) {
        return Err(SimError::DegenerateInput(
            "decay fit needs strictly positive energies in the window".into(),
        ));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(t, _)| t).sum();
    let sy: f64 = pts.iter().map(|(_, e)| e.ln()).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| t * t).sum();
    let sxy: f64 = pts.iter().map(|(t, e)| t * e.ln()).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(-slope)
}

/// E non-increasing across all consecutive rows (relative slack).
pub fn monotone_energy_verdict(rows: &[LedgerRow], slack_rel: f64) -> Verdict {
    if rows.len() < 2 {
        return Verdict {
            name: "monotone_energy".into(),
            holds: true,
            margin: f64::INFINITY,
            first_violation_t: None,
        };
    }
    let margins: Vec<(f64, f64)> = rows
        .windows(2)
        .map(|w| {
            let allowed = w[0].e * (1.0 + slack_rel);
            (w[1].t, allowed - w[1].e)
        })
        .collect();
    Verdict::from_margins("monotone_energy", &margins)
}

/// `||grad mu(t)||_q <= ||grad mu(0)||_q exp(int ||grad u||_inf)` with
/// trapezoid accumulation of the exponent and absolute slack.
pub fn gronwall_mu_verdict(rows: &[LedgerRow], slack_abs: f64) -> Verdict {
    if rows.is_empty() {
        return Verdict {
            name: "gronwall_grad_mu".into(),
            holds: true,
            margin: f64::INFINITY,
            first_violation_t: None,
        };
    }
    let g0 = rows[0].grad_mu_lq;
    let mut acc = 0.0;
    let mut margins = Vec::with_capacity(rows.len());
    margins.push((rows[0].t, g0 * 1.0 + slack_abs - rows[0].grad_mu_lq));
    for w in rows.windows(2) {
        let dt = w[1].t - w[0].t;
        acc += 0.5 * dt * (w[0].grad_u_linf + w[1].grad_u_linf);
        let bound = g0 * acc.exp() + slack_abs;
        margins.push((w[1].t, bound - w[1].grad_mu_lq));
    }
    Verdict::from_margins("gronwall_grad_mu", &margins)
}

/// The four bootstrap verdicts: the working conditions (factors 4 and 2)
/// and the strengthened conclusions (factors 2 and 1).
#[derive(Debug, Clone)]
pub struct BootstrapVerdicts {
    pub cond_grad_mu: Verdict,
    pub cond_dissipation: Verdict,
    pub strong_grad_mu: Verdict,
    pub strong_dissipation: Verdict,
}

/// Monitor of the bootstrap conditions:
/// `sup ||grad mu||_q <= 4 ||grad mu(0)||_q` and
/// `int ||grad u||_2^4 dt <= 2 m0^{1/3}` (trapezoid), plus the versions
/// with the improved factors 2 and 1.
pub fn bootstrap_monitor(
    rows: &[LedgerRow],
    params: &RateParams,
    grad_mu_0: f64,
    _q: f64,
) -> BootstrapVerdicts {
    let mut margins4 = Vec::new();
    let mut margins2 = Vec::new();
    let mut acc = 0.0;
    let mut int_margins2 = Vec::new();
    let mut int_margins1 = Vec::new();
    let budget = params.m0.powf(1.0 / 3.0);
    for (i, r) in rows.iter().enumerate() {
        margins4.push((r.t, 4.0 * grad_mu_0 + SLACK_ABS - r.grad_mu_lq));
        margins2.push((r.t, 2.0 * grad_mu_0 + SLACK_ABS - r.grad_mu_lq));
        if i > 0 {
            let w = &rows[i - 1];
            let dt = r.t - w.t;
            acc += 0.5 * dt * (w.grad_u_l2.powi(4) + r.grad_u_l2.powi(4));
        }
        int_margins2.push((r.t, 2.0 * budget + SLACK_ABS - acc));
        int_margins1.push((r.t, budget + SLACK_ABS - acc));
    }
    BootstrapVerdicts {
        cond_grad_mu: Verdict::from_margins("bootstrap_grad_mu_4x", &margins4),
        cond_dissipation: Verdict::from_margins("bootstrap_int_grad_u4_2x", &int_margins2),
        strong_grad_mu: Verdict::from_margins("bootstrap_grad_mu_2x", &margins2),
        strong_dissipation: Verdict::from_margins("bootstrap_int_grad_u4_1x", &int_margins1),
    }
}

/// Time-weighted running suprema and integrals tracked by the ledger.
#[derive(Debug, Clone)]
pub struct WeightedSeries {
    /// sup of t (||grad u||^2 + ||grad theta||^2)
    pub sup_t1_grad: f64,
    /// sup of t^2 (||grad u||^2 + ||grad theta||^2)
    pub sup_t2_grad: f64,
    /// sup of e^{sigma t} E
    pub sup_exp_e: f64,
    /// time where the exp-weighted energy sup is attained
    pub sup_exp_e_at: f64,
    /// sup over t >= zeta(T) of e^{sigma t}(||sqrt(rho)u_t||^2 + ||sqrt(rho)theta_t||^2)
    pub sup_exp_dt: f64,
    /// trapezoid integral of e^{sigma t}(||grad u||^2 + ||grad theta||^2)
    pub int_exp_grad: f64,
    /// all entries finite and the suprema stopped growing in the tail
    pub tail_bounded: bool,
}

impl WeightedSeries {
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("sup_t1_grad", self.sup_t1_grad),
            ("sup_t2_grad", self.sup_t2_grad),
            ("sup_exp_e", self.sup_exp_e),
            ("sup_exp_e_at", self.sup_exp_e_at),
            ("sup_exp_dt", self.sup_exp_dt),
            ("int_exp_grad", self.int_exp_grad),
            ("tail_bounded", if self.tail_bounded { 1.0 } else { 0.0 }),
        ]
    }
}

pub fn weighted_series(rows: &[LedgerRow], params: &RateParams) -> WeightedSeries {
    let sigma = params.sigma;
    let t_end = rows.last().map(|r| r.t).unwrap_or(0.0);
    let zt = zeta(t_end);
    let mut sup_t1: f64 = 0.0;
    let mut sup_t2: f64 = 0.0;
    let mut sup_e: f64 = 0.0;
    let mut sup_e_at = 0.0;
    let mut sup_dt: f64 = 0.0;
    let mut int_exp = 0.0;
    let mut sup_e_early: f64 = 0.0; // sup over the first two thirds
    for (i, r) in rows.iter().enumerate() {
        let gsq = r.grad_u_l2 * r.grad_u_l2 + r.grad_theta_l2 * r.grad_theta_l2;
        sup_t1 = sup_t1.max(r.t * gsq);
        sup_t2 = sup_t2.max(r.t * r.t * gsq);
        let ee = (sigma * r.t).exp() * r.e;
        if ee > sup_e {
            sup_e = ee;
            sup_e_at = r.t;
        }
        if r.t <= 2.0 * t_end / 3.0 {
            sup_e_early = sup_e_early.max(ee);
        }
        if r.t >= zt - 1e-12 && r.sq_rho_ut_l2.is_finite() {
            let dd = (sigma * r.t).exp()
                * (r.sq_rho_ut_l2 * r.sq_rho_ut_l2 + r.sq_rho_thetat_l2 * r.sq_rho_thetat_l2);
            sup_dt = sup_dt.max(dd);
        }
        if i > 0 {
            let w = &rows[i - 1];
            let dt = r.t - w.t;
            let f0 = (sigma * w.t).exp()
                * (w.grad_u_l2 * w.grad_u_l2 + w.grad_theta_l2 * w.grad_theta_l2);
            let f1 = (sigma * r.t).exp() * gsq;
            int_exp += 0.5 * dt * (f0 + f1);
        }
    }
    let finite = [sup_t1, sup_t2, sup_e, sup_dt, int_exp]
        .iter()
        .all(|v| v.is_finite());
    // tail test: the exp-weighted energy sup must not keep growing in the
    // final third of the run
    let tail_ok = sup_e <= sup_e_early * 1.05 + SLACK_ABS || sup_e_at <= 2.0 * t_end / 3.0;
    WeightedSeries {
        sup_t1_grad: sup_t1,
        sup_t2_grad: sup_t2,
        sup_exp_e: sup_e,
        sup_exp_e_at: sup_e_at,
        sup_exp_dt: sup_dt,
        int_exp_grad: int_exp,
        tail_bounded: finite && tail_ok,
    }
}
