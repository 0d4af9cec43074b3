//! Semi-implicit time stepper for the coupled system: explicit upwind
//! advection, implicit variable-viscosity momentum solve, variable-density
//! pressure projection, and implicit temperature diffusion with the
//! convective source.
//!
//! One step consumes a state and produces a new one; nothing is mutated.
//! Order inside a step: (1) transport rho; (2) momentum predictor with
//! explicit advection and buoyancy `rho theta e3` plus the implicit
//! viscous solve; (3) projection to the divergence-free space;
//! (4) temperature with explicit advection, source `rho u . e3` and
//! implicit diffusion. The density seen by stages (2)-(4) is frozen at
//! its post-transport value. Division by rho (projection, implicit mass
//! matrices) uses `rho_eff = max(rho, eps_rho * rho_bar)`; all physical
//! coefficients keep the true density.

use crate::error::{Result, SimError};
use crate::field::{Boundary, Lat, ScalarField, VectorField};
use crate::linsolve;
use crate::norms;
use crate::ops;
use crate::poisson;
use crate::stokes::{self, MuAveraging};
use crate::transport::{self, AdvectScheme};
use crate::viscosity::{viscosity_field, ViscosityLaw};

/// One time slice of the coupled system.
#[derive(Debug, Clone)]
pub struct FluidState {
    pub t: f64,
    pub rho: ScalarField,
    pub u: VectorField,
    pub theta: ScalarField,
    pub p: ScalarField,
}

impl FluidState {
    pub fn quiescent(grid: crate::grid::Grid, rho0: f64) -> Self {
        FluidState {
            t: 0.0,
            rho: ScalarField::constant(grid, Boundary::Free, rho0),
            u: VectorField::zeros(grid),
            theta: ScalarField::zeros(grid, Boundary::DirichletZero),
            p: ScalarField::zeros(grid, Boundary::Free),
        }
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub dt_used: f64,
    pub projection_iterations: usize,
    pub div_residual: f64,
    /// ||sqrt(rho) u_t||_2 by backward difference over this step.
    pub ut_l2: f64,
    pub thetat_l2: f64,
}

/// Numerical knobs of the stepper.
#[derive(Debug, Clone, Copy)]
pub struct StepParams {
    pub kappa: f64,
    pub cfl: f64,
    pub dt_max: f64,
    /// Velocity floor in the CFL formula, prevents division by zero.
    pub u_floor: f64,
    /// Vacuum regularization fraction of rho_bar.
    pub eps_rho: f64,
    pub rho_bar: f64,
    /// Relative tolerance of the projection Poisson solve.
    pub proj_tol: f64,
    /// Relative tolerance of the implicit momentum/temperature solves.
    pub solver_tol: f64,
    pub max_iter: usize,
    pub buoyancy_on: bool,
    pub source_on: bool,
    /// Diagnostic mode: skip the momentum and projection stages.
    pub freeze_velocity: bool,
    pub advection: AdvectScheme,
    pub mu_averaging: MuAveraging,
}

impl Default for StepParams {
    fn default() -> Self {
        StepParams {
            kappa: 1.0,
            cfl: 0.5,
            dt_max: 0.02,
            u_floor: 1e-8,
            eps_rho: 1e-6,
            rho_bar: 1.0,
            proj_tol: 1e-12,
            solver_tol: 1e-12,
            max_iter: 50_000,
            buoyancy_on: true,
            source_on: true,
            freeze_velocity: false,
            advection: AdvectScheme::Upwind,
            mu_averaging: MuAveraging::Arithmetic,
        }
    }
}

/// Advective CFL time step: `min(dt_max, cfl h_min / max(|u|, floor))`.
/// Diffusion is implicit, so no diffusive restriction enters.
pub fn stable_dt(state: &FluidState, params: &StepParams) -> f64 {
    let umax = state.u.max_abs().max(params.u_floor);
    params.dt_max.min(params.cfl * state.rho.grid.min_spacing() / umax)
}

/// Advective term (u . grad) u_a at interior faces, upwind form with
/// no-slip wall ghosts; wall faces carry zero.
fn velocity_advection(u: &VectorField) -> VectorField {
    let grid = u.grid;
    let mut out = VectorField::zeros(grid);
    for a in 0..grid.dim {
        let shape = grid.face_shape(a);
        let n_a = grid.cells[a];
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let f = [i, j, k];
                    let fa = f[a];
                    if fa == 0 || fa == n_a {
                        continue;
                    }
                    let val = u.comps[a].get(i, j, k);
                    let mut adv = 0.0;
                    for b in 0..grid.dim {
                        let h = grid.spacing[b];
                        let vel = if b == a {
                            val
                        } else {
                            // 4-point average of u_b around this a-face
                            let mut c_lo = f;
                            c_lo[a] -= 1;
                            let c_hi = f;
                            let mut s = 0.0;
                            for c in [c_lo, c_hi] {
                                let mut cb = c;
                                s += u.comps[b].get(cb[0], cb[1], cb[2]);
                                cb[b] += 1;
                                s += u.comps[b].get(cb[0], cb[1], cb[2]);
                            }
                            0.25 * s
                        };
                        let n_b = grid.cells[b];
                        let fb = f[b];
                        let diff = if vel >= 0.0 {
                            let lo = if b == a {
                                u.comps[a].shift(i, j, k, a, -1)
                            } else if fb >= 1 {
                                u.comps[a].shift(i, j, k, b, -1)
                            } else {
                                -val // wall ghost: tangential velocity is 0 on the wall
                            };
                            (val - lo) / h
                        } else {
                            let hi = if b == a {
                                u.comps[a].shift(i, j, k, a, 1)
                            } else if fb + 1 <= n_b - 1 {
                                u.comps[a].shift(i, j, k, b, 1)
                            } else {
                                -val
                            };
                            (hi - val) / h
                        };
                        adv += vel * diff;
                    }
                    out.comps[a].set(i, j, k, adv);
                }
            }
        }
    }
    out
}

/// Advective term (u . grad) s at cell centers, upwind with ghosts from
/// the scalar's boundary kind.
fn scalar_advection(s: &ScalarField, u: &VectorField) -> Lat {
    let grid = s.grid;
    let mut out = Lat::zeros(grid.cells);
    let [nx, ny, nz] = grid.cells;
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let val = s.lat.get(i, j, k);
                let mut adv = 0.0;
                for a in 0..grid.dim {
                    let h = grid.spacing[a];
                    let n = grid.cells[a];
                    let c = [i, j, k][a];
                    let vel = 0.5
                        * (u.comps[a].get(i, j, k) + u.comps[a].shift(i, j, k, a, 1));
                    let ghost = |inner: f64| match s.boundary {
                        Boundary::DirichletZero => -inner,
                        Boundary::DirichletValue(v) => 2.0 * v - inner,
                        Boundary::Free => inner,
                    };
                    let diff = if vel >= 0.0 {
                        let lo = if c >= 1 {
                            s.lat.shift(i, j, k, a, -1)
                        } else {
                            ghost(val)
                        };
                        (val - lo) / h
                    } else {
                        let hi = if c + 1 <= n - 1 {
                            s.lat.shift(i, j, k, a, 1)
                        } else {
                            ghost(val)
                        };
                        (hi - val) / h
                    };
                    adv += vel * diff;
                }
                out.set(i, j, k, adv);
            }
        }
    }
    out
}

/// Integrated Dirichlet diffusion operator `kappa L theta` (the exact
/// gradient of the thermal dissipation quadrature).
fn apply_thermal(grid: &crate::grid::Grid, kappa: f64, theta: &Lat, out: &mut Lat) {
    out.data.fill(0.0);
    for a in 0..grid.dim {
        let h = grid.spacing[a];
        let n = grid.cells[a];
        let shape = grid.face_shape(a);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let fi = [i, j, k][a];
                    let w = VectorField::face_weight(grid, a, i, j, k);
                    if fi >= 1 && fi <= n - 1 {
                        let g = (theta.get(i, j, k) - theta.shift(i, j, k, a, -1)) / h;
                        let t = kappa * w * g / h;
                        out.add(i, j, k, t);
                        let mut lo = [i, j, k];
                        lo[a] = fi - 1;
                        out.add(lo[0], lo[1], lo[2], -t);
                    } else {
                        let mut cell = [i, j, k];
                        if fi == n {
                            cell[a] = n - 1;
                        }
                        let inner = theta.get(cell[0], cell[1], cell[2]);
                        // ghost mirror: wall value zero
                        out.add(cell[0], cell[1], cell[2], 4.0 * kappa * w * inner / (h * h));
                    }
                }
            }
        }
    }
}

fn thermal_diag(grid: &crate::grid::Grid, kappa: f64) -> Lat {
    let mut diag = Lat::zeros(grid.cells);
    for a in 0..grid.dim {
        let h = grid.spacing[a];
        let n = grid.cells[a];
        let shape = grid.face_shape(a);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let fi = [i, j, k][a];
                    let w = VectorField::face_weight(grid, a, i, j, k);
                    if fi >= 1 && fi <= n - 1 {
                        let c = kappa * w / (h * h);
                        diag.add(i, j, k, c);
                        let mut lo = [i, j, k];
                        lo[a] = fi - 1;
                        diag.add(lo[0], lo[1], lo[2], c);
                    } else {
                        let mut cell = [i, j, k];
                        if fi == n {
                            cell[a] = n - 1;
                        }
                        diag.add(cell[0], cell[1], cell[2], 4.0 * kappa * w / (h * h));
                    }
                }
            }
        }
    }
    diag
}

/// Floored density: physical rho where it is safe to divide, the vacuum
/// floor elsewhere.
fn rho_effective(rho: &ScalarField, params: &StepParams) -> Lat {
    let floor = params.eps_rho * params.rho_bar;
    let mut out = rho.lat.clone();
    for v in out.data.iter_mut() {
        *v = v.max(floor);
    }
    out
}

/// Project `u_star` onto the discretely divergence-free space. Returns
/// the corrected velocity, the pressure-like potential and the Poisson
/// iteration count.
pub fn projection(
    u_star: &VectorField,
    rho: &ScalarField,
    dt: f64,
    params: &StepParams,
) -> Result<(VectorField, ScalarField, usize)> {
    let grid = u_star.grid;
    let beta = poisson::beta_faces(rho, params.eps_rho, params.rho_bar);
    let div = ops::divergence(u_star);
    let mut rhs = div.lat.clone();
    for v in rhs.data.iter_mut() {
        *v /= dt;
    }
    let (phi, outcome) = poisson::solve(&grid, &beta, &rhs, params.proj_tol, params.max_iter)
        .map_err(|e| e.in_stage("projection"))?;
    let mut u = u_star.clone();
    let phi_field = {
        let mut f = ScalarField::zeros(grid, Boundary::Free);
        f.lat = phi;
        f
    };
    for a in 0..grid.dim {
        let h = grid.spacing[a];
        let n = grid.cells[a];
        let shape = grid.face_shape(a);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let fi = [i, j, k][a];
                    if fi == 0 || fi == n {
                        continue;
                    }
                    let g = (phi_field.lat.get(i, j, k) - phi_field.lat.shift(i, j, k, a, -1)) / h;
                    let corr = dt * beta[a].get(i, j, k) * g;
                    let idx = u.comps[a].idx(i, j, k);
                    u.comps[a].data[idx] -= corr;
                }
            }
        }
    }
    u.enforce_noslip();
    Ok((u, phi_field, outcome.iterations))
}

/// L2 norm of the discrete divergence.
pub fn divergence_l2(u: &VectorField) -> f64 {
    let vol = u.grid.cell_volume();
    let div = ops::divergence(u);
    div.lat.data.iter().map(|v| v * v * vol).sum::<f64>().sqrt()
}

/// Advance one step of size `dt` (callers derive `dt` from
/// [`stable_dt`]). Returns the new state and its report.
pub fn step(
    state: &FluidState,
    law: &ViscosityLaw,
    dt: f64,
    params: &StepParams,
) -> Result<(FluidState, StepReport)> {
    if !(dt > 0.0) {
        return Err(SimError::Domain(format!("dt must be positive, got {dt}")));
    }
    let grid = state.rho.grid;
    let va = grid.vertical_axis();
    let vol = grid.cell_volume();

    // (1) transport the density
    let rho_new = transport::advect_density(&state.rho, &state.u, dt, params.advection)
        .map_err(|e| e.in_stage("density-transport"))?;
    let mu = viscosity_field(&rho_new, law).map_err(|e| e.in_stage("viscosity"))?;
    let rho_eff = rho_effective(&rho_new, params);

    // (2) momentum predictor + implicit viscous solve
    let (p_new, proj_iters, div_res, u_new) = if params.freeze_velocity {
        let u = state.u.clone();
        let d = divergence_l2(&u);
        (state.p.clone(), 0usize, d, u)
    } else {
        let adv = velocity_advection(&state.u);
        let rho_theta = {
            let mut l = rho_new.lat.clone();
            for (v, th) in l.data.iter_mut().zip(state.theta.lat.data.iter()) {
                *v *= th;
            }
            l
        };
        let buoy_face = ops::cell_to_face(&grid, &rho_theta, va);

        let mut mass = VectorField::zeros(grid);
        for a in 0..grid.dim {
            let re = ops::cell_to_face(&grid, &rho_eff, a);
            let shape = grid.face_shape(a);
            for i in 0..shape[0] {
                for j in 0..shape[1] {
                    for k in 0..shape[2] {
                        let w = VectorField::face_weight(&grid, a, i, j, k);
                        mass.comps[a].set(i, j, k, re.get(i, j, k) * w / dt);
                    }
                }
            }
        }
        let mut rhs = VectorField::zeros(grid);
        for a in 0..grid.dim {
            let rho_face = ops::cell_to_face(&grid, &rho_new.lat, a);
            let shape = grid.face_shape(a);
            for i in 0..shape[0] {
                for j in 0..shape[1] {
                    for k in 0..shape[2] {
                        let fi = [i, j, k][a];
                        if fi == 0 || fi == grid.cells[a] {
                            continue;
                        }
                        let w = VectorField::face_weight(&grid, a, i, j, k);
                        let mut r = mass.comps[a].get(i, j, k) * state.u.comps[a].get(i, j, k);
                        r -= rho_face.get(i, j, k) * w * adv.comps[a].get(i, j, k);
                        if params.buoyancy_on && a == va {
                            r += buoy_face.get(i, j, k) * w;
                        }
                        rhs.comps[a].set(i, j, k, r);
                    }
                }
            }
        }
        let (u_star, _) = stokes::solve_viscous(
            &grid,
            &mu.lat,
            Some(&mass),
            &rhs,
            Some(&state.u),
            params.solver_tol,
            params.max_iter,
            "momentum",
            params.mu_averaging,
        )?;

        // (3) projection
        let (u_new, p_new, iters) = projection(&u_star, &rho_new, dt, params)?;
        let div_res = divergence_l2(&u_new);
        (p_new, iters, div_res, u_new)
    };

    // (4) temperature: explicit advection + source, implicit diffusion
    let adv_theta = scalar_advection(&state.theta, &u_new);
    let u_vert = ops::face_to_cell(&u_new, va);
    let n_cells = grid.n_cells();
    let mut b = vec![0.0; n_cells];
    for idx in 0..n_cells {
        let m = rho_eff.data[idx] * vol / dt;
        let mut r = m * state.theta.lat.data[idx];
        r -= rho_new.lat.data[idx] * vol * adv_theta.data[idx];
        if params.source_on {
            r += rho_new.lat.data[idx] * vol * u_vert.data[idx];
        }
        b[idx] = r;
    }
    let diag_l = thermal_diag(&grid, params.kappa);
    let mut theta_lat = Lat::zeros(grid.cells);
    let mut work = Lat::zeros(grid.cells);
    let apply = |v: &[f64], out: &mut [f64]| {
        theta_lat.data.copy_from_slice(v);
        apply_thermal(&grid, params.kappa, &theta_lat, &mut work);
        for idx in 0..out.len() {
            out[idx] = work.data[idx] + rho_eff.data[idx] * vol / dt * v[idx];
        }
    };
    let precond = |r: &[f64], z: &mut [f64]| {
        for idx in 0..r.len() {
            z[idx] = r[idx] / (diag_l.data[idx] + rho_eff.data[idx] * vol / dt);
        }
    };
    let mut x: Vec<f64> = state.theta.lat.data.clone();
    let out = linsolve::cg(
        apply,
        precond,
        &b,
        &mut x,
        params.solver_tol,
        0.0,
        params.max_iter,
        |_| {},
    );
    if !out.converged {
        return Err(SimError::Solver {
            stage: "temperature".into(),
            residual: out.residual,
            iterations: out.iterations,
        });
    }
    let mut theta_new = ScalarField::zeros(grid, Boundary::DirichletZero);
    theta_new.lat.data.copy_from_slice(&x);

    // report: backward differences weighted by the new density
    let mut du = u_new.clone();
    for a in 0..grid.dim {
        for (d, o) in du.comps[a]
            .data
            .iter_mut()
            .zip(state.u.comps[a].data.iter())
        {
            *d = (*d - o) / dt;
        }
    }
    let ut_l2 = norms::kinetic_energy_sq(&du, &rho_new).sqrt();
    let mut dth = theta_new.lat.clone();
    for (d, o) in dth.data.iter_mut().zip(state.theta.lat.data.iter()) {
        *d = (*d - o) / dt;
    }
    let thetat_l2 = norms::weighted_l2_sq_cells(&grid, &rho_new.lat, &dth).sqrt();

    let report = StepReport {
        dt_used: dt,
        projection_iterations: proj_iters,
        div_residual: div_res,
        ut_l2,
        thetat_l2,
    };
    let new_state = FluidState {
        t: state.t + dt,
        rho: rho_new,
        u: u_new,
        theta: theta_new,
        p: p_new,
    };
    Ok((new_state, report))
}

/// Step-doubling error control: compare one `dt` step against two `dt/2`
/// steps; accept the halved-step result when the discrepancy stays below
/// `10 * tol`, otherwise halve `dt` and retry.
pub fn step_doubling(
    state: &FluidState,
    law: &ViscosityLaw,
    dt0: f64,
    params: &StepParams,
    tol: f64,
) -> Result<(FluidState, StepReport, f64, f64)> {
    let mut dt = dt0;
    for _ in 0..24 {
        let (full, _) = step(state, law, dt, params)?;
        let (half, _) = step(state, law, 0.5 * dt, params)?;
        let (half2, rep2) = step(&half, law, 0.5 * dt, params)?;
        let err = state_distance(&full, &half2);
        if err <= 10.0 * tol {
            return Ok((half2, rep2, dt, err));
        }
        dt *= 0.5;
    }
    Err(SimError::Stability(format!(
        "step-doubling controller failed to reach tolerance {tol} from dt {dt0}"
    )))
}

/// Relative distance between two states (velocity, temperature, density).
pub fn state_distance(a: &FluidState, b: &FluidState) -> f64 {
    let mut du = a.u.clone();
    for (ca, cb) in du.comps.iter_mut().zip(b.u.comps.iter()) {
        for (x, y) in ca.data.iter_mut().zip(cb.data.iter()) {
            *x -= y;
        }
    }
    let mut dth = a.theta.clone();
    for (x, y) in dth.lat.data.iter_mut().zip(b.theta.lat.data.iter()) {
        *x -= y;
    }
    let mut drho = a.rho.clone();
    for (x, y) in drho.lat.data.iter_mut().zip(b.rho.lat.data.iter()) {
        *x -= y;
    }
    let num = norms::lp_norm_vector(&du, 2.0).unwrap()
        + norms::lp_norm_scalar(&dth, 2.0).unwrap()
        + norms::lp_norm_scalar(&drho, 2.0).unwrap();
    let den = norms::lp_norm_vector(&b.u, 2.0).unwrap()
        + norms::lp_norm_scalar(&b.theta, 2.0).unwrap()
        + norms::lp_norm_scalar(&b.rho, 2.0).unwrap();
    num / den.max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn grid2(n: usize) -> Grid {
        Grid::new(2, [n, n, 1], [1.0, 1.0, 1.0]).unwrap()
    }

    fn law_unit() -> ViscosityLaw {
        ViscosityLaw::affine(1.0, 1.0, 1.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn oversized_step_fails_with_stage_label() {
        let g = grid2(8);
        let mut state = FluidState::quiescent(g, 1.0);
        for v in state.u.comps[0].data.iter_mut() {
            *v = 1.0;
        }
        state.u.enforce_noslip();
        let err = step(&state, &law_unit(), 10.0, &StepParams::default()).unwrap_err();
        assert!(matches!(err, SimError::Stability(_)), "{err}");
    }

    #[test]
    fn stable_dt_formula() {
        let g = grid2(4);
        let mut state = FluidState::quiescent(g, 1.0);
        let params = StepParams {
            dt_max: 1.0,
            cfl: 0.5,
            ..Default::default()
        };
        assert_eq!(stable_dt(&state, &params), 1.0); // u = 0 -> dt_max
        for v in state.u.comps[0].data.iter_mut() {
            *v = 1.0;
        }
        // max|u| = 1, h = 0.25, cfl = 0.5 -> 0.125
        assert!((stable_dt(&state, &params) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn quiescent_state_is_a_fixed_point() {
        let g = grid2(8);
        let state = FluidState::quiescent(g, 1.0);
        let params = StepParams::default();
        let law = law_unit();
        let mut s = state;
        for _ in 0..3 {
            let (next, rep) = step(&s, &law, 0.01, &params).unwrap();
            assert_eq!(next.u.max_abs(), 0.0);
            assert_eq!(next.theta.max(), 0.0);
            assert_eq!(rep.div_residual, 0.0);
            s = next;
        }
    }

    #[test]
    fn projection_leaves_divergence_free_field() {
        let g = grid2(16);
        // discretely divergence-free initial data (curl of a node function)
        let h = g.spacing[0];
        let psi = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
        let mut u = VectorField::zeros(g);
        for i in 0..=16 {
            for j in 0..16 {
                let x = i as f64 * h;
                let y0 = j as f64 * h;
                u.comps[0].set(i, j, 0, (psi(x, y0 + h) - psi(x, y0)) / h);
            }
        }
        for i in 0..16 {
            for j in 0..=16 {
                let x0 = i as f64 * h;
                let y = j as f64 * h;
                u.comps[1].set(i, j, 0, -(psi(x0 + h, y) - psi(x0, y)) / h);
            }
        }
        u.enforce_noslip();
        let rho = ScalarField::constant(g, Boundary::Free, 1.0);
        let params = StepParams::default();
        let (u2, phi, _) = projection(&u, &rho, 0.01, &params).unwrap();
        // already divergence free: potential is constant, u unchanged
        assert!(phi.max() - phi.min() < 1e-10);
        for a in 0..2 {
            for (x, y) in u2.comps[a].data.iter().zip(u.comps[a].data.iter()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projection_annihilates_discrete_gradients() {
        // u* = grad psi for a Neumann-compatible psi: projected to ~0
        let g = grid2(16);
        let psi = ScalarField::from_fn(g, Boundary::Free, |x, y, _| {
            (PI * x).cos() * (PI * y).cos()
        });
        let mut u = VectorField::zeros(g);
        for a in 0..2 {
            let h = g.spacing[a];
            let n = g.cells[a];
            let shape = g.face_shape(a);
            for i in 0..shape[0] {
                for j in 0..shape[1] {
                    for k in 0..shape[2] {
                        let fi = [i, j, k][a];
                        if fi == 0 || fi == n {
                            continue;
                        }
                        let gderiv =
                            (psi.lat.get(i, j, k) - psi.lat.shift(i, j, k, a, -1)) / h;
                        u.comps[a].set(i, j, k, gderiv);
                    }
                }
            }
        }
        let rho = ScalarField::constant(g, Boundary::Free, 1.0);
        let params = StepParams {
            proj_tol: 1e-13,
            ..Default::default()
        };
        let scale = norms::lp_norm_vector(&u, 2.0).unwrap();
        let (u2, _, _) = projection(&u, &rho, 0.01, &params).unwrap();
        let left = norms::lp_norm_vector(&u2, 2.0).unwrap();
        assert!(left <= 1e-9 * scale, "residual velocity {left} of {scale}");
    }

    #[test]
    fn projection_with_vacuum_patch_still_divergence_free() {
        let g = grid2(16);
        let rho = ScalarField::from_fn(g, Boundary::Free, |x, y, _| {
            if (x - 0.3) * (x - 0.3) + (y - 0.3) * (y - 0.3) < 0.04 {
                0.0
            } else {
                1.0
            }
        });
        let u = VectorField::from_fn(g, |a, x, y, _| match a {
            0 => (PI * x).sin() * y,
            _ => (PI * y).cos() * x,
        });
        let params = StepParams {
            eps_rho: 1e-3,
            ..Default::default()
        };
        let (u2, _, _) = projection(&u, &rho, 0.005, &params).unwrap();
        let res = divergence_l2(&u2);
        assert!(res < 1e-9, "divergence after projection {res}");
    }

    #[test]
    fn heat_decay_matches_first_eigenvalue() {
        // frozen velocity, rho = 1: theta decays at kappa * 2 pi^2 in norm
        let g = grid2(32);
        let mut state = FluidState::quiescent(g, 1.0);
        state.theta = ScalarField::from_fn(g, Boundary::DirichletZero, |x, y, _| {
            (PI * x).sin() * (PI * y).sin()
        });
        let params = StepParams {
            freeze_velocity: true,
            buoyancy_on: false,
            source_on: false,
            kappa: 1.0,
            ..Default::default()
        };
        let law = law_unit();
        let dt = 2e-4;
        let mut s = state;
        let e0 = norms::weighted_l2_sq_cells(&g, &s.rho.lat, &s.theta.lat);
        for _ in 0..100 {
            let (next, _) = step(&s, &law, dt, &params).unwrap();
            s = next;
        }
        let e1 = norms::weighted_l2_sq_cells(&g, &s.rho.lat, &s.theta.lat);
        let rate = -(e1 / e0).ln() / (100.0 * dt);
        let exact = 4.0 * PI * PI;
        assert!(
            (rate - exact).abs() / exact < 0.02,
            "rate {rate} vs {exact}"
        );
    }

    #[test]
    fn kinetic_energy_nonincreasing_without_forcing() {
        let g = grid2(16);
        let h = g.spacing[0];
        let psi = |x: f64, y: f64| 0.2 * (PI * x).sin() * (PI * y).sin();
        let mut state = FluidState::quiescent(g, 1.0);
        for i in 0..=16 {
            for j in 0..16 {
                let x = i as f64 * h;
                let y0 = j as f64 * h;
                state.u.comps[0].set(i, j, 0, (psi(x, y0 + h) - psi(x, y0)) / h);
            }
        }
        for i in 0..16 {
            for j in 0..=16 {
                let x0 = i as f64 * h;
                let y = j as f64 * h;
                state.u.comps[1].set(i, j, 0, -(psi(x0 + h, y) - psi(x0, y)) / h);
            }
        }
        state.u.enforce_noslip();
        let params = StepParams {
            buoyancy_on: false,
            source_on: false,
            ..Default::default()
        };
        let law = law_unit();
        let mut s = state;
        let mut prev = norms::kinetic_energy_sq(&s.u, &s.rho);
        for _ in 0..10 {
            let dt = stable_dt(&s, &params);
            let (next, _) = step(&s, &law, dt, &params).unwrap();
            let e = norms::kinetic_energy_sq(&next.u, &next.rho);
            assert!(e <= prev * (1.0 + 1e-12), "energy grew: {prev} -> {e}");
            prev = e;
            s = next;
        }
    }

    #[test]
    fn step_reports_divergence_and_time_derivatives() {
        let g = grid2(16);
        let mut state = FluidState::quiescent(g, 1.0);
        state.theta = ScalarField::from_fn(g, Boundary::DirichletZero, |x, y, _| {
            0.5 * (PI * x).sin() * (PI * y).sin()
        });
        let params = StepParams::default();
        let law = law_unit();
        let (next, rep) = step(&state, &law, 0.005, &params).unwrap();
        assert!(rep.div_residual < 1e-9);
        assert!(rep.thetat_l2 > 0.0);
        assert!(rep.ut_l2 > 0.0); // buoyancy kicked the velocity
        assert!(next.t > state.t);
    }

    #[test]
    fn controller_first_step_uses_dt_max_then_halves_when_needed() {
        // buoyancy-dominated start: u = 0, theta large
        let g = grid2(12);
        let mut state = FluidState::quiescent(g, 1.0);
        state.theta = ScalarField::from_fn(g, Boundary::DirichletZero, |x, y, _| {
            10.0 * (PI * x).sin() * (PI * y).sin()
        });
        let params = StepParams {
            dt_max: 0.1,
            ..Default::default()
        };
        let law = law_unit();
        let dt0 = stable_dt(&state, &params);
        assert_eq!(dt0, params.dt_max); // first step starts from dt_max
        let tol = 1e-4;
        let (_, _, dt_used, err) = step_doubling(&state, &law, dt0, &params, tol).unwrap();
        // contract: either the estimate met 10 x tol at dt_max, or the
        // controller halved at least once
        if dt_used == params.dt_max {
            assert!(err <= 10.0 * tol);
        } else {
            assert!(dt_used < params.dt_max);
            assert!(err <= 10.0 * tol);
        }
    }
}
