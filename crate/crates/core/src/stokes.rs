//! Steady variable-viscosity Stokes solver and the implicit viscous core
//! of the time stepper.
//!
//! The viscous operator is defined variationally: the discrete
//! dissipation functional
//!
//! ```text
//! Phi(u) = sum_cells 2 mu vol sum_a D_aa^2
//!        + sum_{a<b} sum_edges 4 mu_edge w_edge D_ab^2
//! ```
//!
//! is a quadratic form, and `apply_viscous` scatters its exact gradient,
//! so `<K u, u> = Phi(u)` holds to rounding and K is symmetric positive
//! semidefinite by construction. The full deformation form is kept (not
//! the simplified Laplacian) because grad mu != 0 makes them differ.
//! Viscosity at edge sites is the arithmetic mean of the touching cells;
//! a harmonic mean is available as an option.
//!
//! The saddle problem is solved by conjugate gradients on the pressure
//! Schur complement (outer), with Jacobi-preconditioned CG on the viscous
//! block (inner). The outer residual is exactly the divergence of the
//! reconstructed velocity, so the divergence tolerance is controlled
//! directly.

use crate::error::{Result, SimError};
use crate::field::{Boundary, Lat, ScalarField, VectorField};
use crate::grid::Grid;
use crate::linsolve::{self, CgOutcome};
use crate::norms;
use crate::ops;

/// Averaging used for viscosity at edge sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuAveraging {
    Arithmetic,
    Harmonic,
}

/// Steady problem: -div(2 mu D(u)) + grad P = F, div u = 0, no-slip walls.
#[derive(Debug, Clone)]
pub struct StokesProblem {
    pub mu: ScalarField,
    pub forcing: VectorField,
    pub mu_min: f64,
    pub mu_max: f64,
    pub averaging: MuAveraging,
}

/// Converged solution with its measured residuals.
#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub u: VectorField,
    /// Mean-zero pressure.
    pub p: ScalarField,
    /// Outer (Schur) iterations.
    pub iterations: usize,
    /// L2 norm of the discrete divergence of `u`.
    pub div_residual: f64,
    /// L2 norm of the discrete momentum residual.
    pub momentum_residual: f64,
}

impl StokesSolution {
    /// Worst of the two measured residuals.
    pub fn residual(&self) -> f64 {
        self.div_residual.max(self.momentum_residual)
    }
}

fn edge_mu_avg(grid: &Grid, mu: &Lat, a: usize, b: usize, site: [usize; 3], avg: MuAveraging) -> f64 {
    match avg {
        MuAveraging::Arithmetic => ops::edge_mu(grid, mu, a, b, site),
        MuAveraging::Harmonic => {
            let mut sum = 0.0;
            let mut count = 0.0;
            let ia = site[a] as isize;
            let ib = site[b] as isize;
            for da in [-1isize, 0] {
                for db in [-1isize, 0] {
                    let ca = ia + da;
                    let cb = ib + db;
                    if ca < 0
                        || cb < 0
                        || ca >= grid.cells[a] as isize
                        || cb >= grid.cells[b] as isize
                    {
                        continue;
                    }
                    let mut c = site;
                    c[a] = ca as usize;
                    c[b] = cb as usize;
                    sum += 1.0 / mu.get(c[0], c[1], c[2]);
                    count += 1.0;
                }
            }
            count / sum
        }
    }
}

/// The dissipation functional `integral of 2 mu |D(u)|^2` on the
/// staggered variational sampling. This is the form whose gradient the
/// implicit operator applies, so ledger rows and the energy identity use
/// the same number the scheme dissipates.
pub fn viscous_dissipation(u: &VectorField, mu: &ScalarField) -> f64 {
    viscous_dissipation_avg(u, mu, MuAveraging::Arithmetic)
}

pub fn viscous_dissipation_avg(u: &VectorField, mu: &ScalarField, avg: MuAveraging) -> f64 {
    let grid = u.grid;
    let vol = grid.cell_volume();
    let mut sum = 0.0;
    for a in 0..grid.dim {
        let d = ops::strain_diag(u, a);
        for (v, m) in d.data.iter().zip(mu.lat.data.iter()) {
            sum += 2.0 * m * vol * v * v;
        }
    }
    for (a, b) in ops::axis_pairs(grid.dim) {
        let gab = ops::edge_grad(u, a, b);
        let gba = ops::edge_grad(u, b, a);
        let shape = gab.shape;
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let d = 0.5 * (gab.get(i, j, k) + gba.get(i, j, k));
                    let w = ops::edge_weight(&grid, a, b, [i, j, k]);
                    let m = edge_mu_avg(&grid, &mu.lat, a, b, [i, j, k], avg);
                    sum += 4.0 * m * w * d * d;
                }
            }
        }
    }
    sum
}

/// Matrix-free application of the viscous operator (integrated form):
/// `out = K u` with `<K u, v> = integral 2 mu D(u):D(v)`.
pub fn apply_viscous(mu: &Lat, u: &VectorField, out: &mut VectorField, avg: MuAveraging) {
    let grid = u.grid;
    let vol = grid.cell_volume();
    for c in out.comps.iter_mut() {
        c.data.fill(0.0);
    }
    // diagonal strain terms, one per cell and axis
    for a in 0..grid.dim {
        let d = ops::strain_diag(u, a);
        let h = grid.spacing[a];
        let [nx, ny, nz] = grid.cells;
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let t = 2.0 * mu.get(i, j, k) * vol * d.get(i, j, k) / h;
                    let mut hi = [i, j, k];
                    hi[a] += 1;
                    out.comps[a].add(hi[0], hi[1], hi[2], t);
                    out.comps[a].add(i, j, k, -t);
                }
            }
        }
    }
    // off-diagonal strain terms at edge sites
    for (a, b) in ops::axis_pairs(grid.dim) {
        let gab = ops::edge_grad(u, a, b);
        let gba = ops::edge_grad(u, b, a);
        let shape = gab.shape;
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let site = [i, j, k];
                    let d = 0.5 * (gab.get(i, j, k) + gba.get(i, j, k));
                    let w = ops::edge_weight(&grid, a, b, site);
                    let m = edge_mu_avg(&grid, mu, a, b, site, avg);
                    let t = 4.0 * m * w * d;
                    scatter_edge(out, a, b, site, t, &grid);
                    scatter_edge(out, b, a, site, t, &grid);
                }
            }
        }
    }
    out.enforce_noslip();
}

/// Scatter the derivative of `D_ab` with respect to the `u_a` samples
/// entering `d u_a / d x_b` at one edge site (mirrors `ops::edge_grad`).
#[inline]
fn scatter_edge(out: &mut VectorField, a: usize, b: usize, site: [usize; 3], t: f64, grid: &Grid) {
    let n_b = grid.cells[b];
    let h = grid.spacing[b];
    let ib = site[b];
    if ib >= 1 && ib <= n_b - 1 {
        let mut hi = site;
        hi[b] = ib;
        let mut lo = site;
        lo[b] = ib - 1;
        out.comps[a].add(hi[0], hi[1], hi[2], t / (2.0 * h));
        out.comps[a].add(lo[0], lo[1], lo[2], -t / (2.0 * h));
    } else if ib == 0 {
        out.comps[a].add(site[0], site[1], site[2], t / h);
    } else {
        let mut c = site;
        c[b] = n_b - 1;
        out.comps[a].add(c[0], c[1], c[2], -t / h);
    }
}

/// Diagonal of the viscous operator, for Jacobi preconditioning.
pub fn viscous_diag(grid: &Grid, mu: &Lat, avg: MuAveraging) -> VectorField {
    let vol = grid.cell_volume();
    let mut diag = VectorField::zeros(*grid);
    for a in 0..grid.dim {
        let h = grid.spacing[a];
        let [nx, ny, nz] = grid.cells;
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let c = 2.0 * mu.get(i, j, k) * vol / (h * h);
                    let mut hi = [i, j, k];
                    hi[a] += 1;
                    diag.comps[a].add(hi[0], hi[1], hi[2], c);
                    diag.comps[a].add(i, j, k, c);
                }
            }
        }
    }
    for (a, b) in ops::axis_pairs(grid.dim) {
        let shape = ops::edge_shape(grid, a, b);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let site = [i, j, k];
                    let w = ops::edge_weight(grid, a, b, site);
                    let m = edge_mu_avg(grid, mu, a, b, site, avg);
                    let c = 4.0 * m * w;
                    for (comp, other) in [(a, b), (b, a)] {
                        let n_o = grid.cells[other];
                        let h_o = grid.spacing[other];
                        let io = site[other];
                        if io >= 1 && io <= n_o - 1 {
                            let g = 1.0 / (2.0 * h_o);
                            let mut hi = site;
                            hi[other] = io;
                            let mut lo = site;
                            lo[other] = io - 1;
                            diag.comps[comp].add(hi[0], hi[1], hi[2], c * g * g);
                            diag.comps[comp].add(lo[0], lo[1], lo[2], c * g * g);
                        } else {
                            let g = 1.0 / h_o;
                            let mut cc = site;
                            if io == n_o {
                                cc[other] = n_o - 1;
                            }
                            diag.comps[comp].add(cc[0], cc[1], cc[2], c * g * g);
                        }
                    }
                }
            }
        }
    }
    diag
}

pub fn pack(u: &VectorField) -> Vec<f64> {
    let mut v = Vec::with_capacity(u.comps.iter().map(|c| c.len()).sum());
    for c in &u.comps {
        v.extend_from_slice(&c.data);
    }
    v
}

pub fn unpack_into(flat: &[f64], u: &mut VectorField) {
    let mut off = 0;
    for c in u.comps.iter_mut() {
        let len = c.data.len();
        c.data.copy_from_slice(&flat[off..off + len]);
        off += len;
    }
}

/// Integrated pressure gradient: face value `w_f (p_R - p_L) / h`,
/// zero on wall faces (the discrete adjoint of the divergence).
pub fn pressure_gradient_integrated(grid: &Grid, p: &Lat) -> VectorField {
    let mut out = VectorField::zeros(*grid);
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
                    let w = VectorField::face_weight(grid, a, i, j, k);
                    let hi = p.get(i, j, k);
                    let lo = p.shift(i, j, k, a, -1);
                    out.comps[a].set(i, j, k, w * (hi - lo) / h);
                }
            }
        }
    }
    out
}

/// Solve `(M + K) u = rhs` by preconditioned CG, with `M` a diagonal
/// (integrated) mass term; pass `None` for the steady operator.
pub fn solve_viscous(
    grid: &Grid,
    mu: &Lat,
    mass_diag: Option<&VectorField>,
    rhs: &VectorField,
    initial: Option<&VectorField>,
    tol_rel: f64,
    max_iter: usize,
    stage: &str,
    avg: MuAveraging,
) -> Result<(VectorField, CgOutcome)> {
    let b = pack(rhs);
    let mut x = match initial {
        Some(u0) => pack(u0),
        None => vec![0.0; b.len()],
    };
    let mut diag = viscous_diag(grid, mu, avg);
    if let Some(m) = mass_diag {
        for (a, c) in diag.comps.iter_mut().enumerate() {
            for (d, mv) in c.data.iter_mut().zip(m.comps[a].data.iter()) {
                *d += mv;
            }
        }
    }
    // pinned boundary faces get a harmless unit diagonal
    for c in diag.comps.iter_mut() {
        for d in c.data.iter_mut() {
            if *d == 0.0 {
                *d = 1.0;
            }
        }
    }
    let diag_flat = pack(&diag);
    let mut work = VectorField::zeros(*grid);
    let mut tmp_in = VectorField::zeros(*grid);
    let apply = |v: &[f64], out: &mut [f64]| {
        unpack_into(v, &mut tmp_in);
        tmp_in.enforce_noslip();
        apply_viscous(mu, &tmp_in, &mut work, avg);
        if let Some(m) = mass_diag {
            for a in 0..work.comps.len() {
                for idx in 0..work.comps[a].data.len() {
                    work.comps[a].data[idx] += m.comps[a].data[idx] * tmp_in.comps[a].data[idx];
                }
            }
            work.enforce_noslip();
        }
        let mut off = 0;
        for c in &work.comps {
            out[off..off + c.data.len()].copy_from_slice(&c.data);
            off += c.data.len();
        }
    };
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..r.len() {
            z[i] = r[i] / diag_flat[i];
        }
    };
    let out = linsolve::cg(apply, precond, &b, &mut x, tol_rel, 0.0, max_iter, |_| {});
    if !out.converged {
        return Err(SimError::Solver {
            stage: stage.into(),
            residual: out.residual,
            iterations: out.iterations,
        });
    }
    let mut u = VectorField::zeros(*grid);
    unpack_into(&x, &mut u);
    u.enforce_noslip();
    Ok((u, out))
}

const INNER_TOL_REL: f64 = 1e-12;
const INNER_MAX_ITER: usize = 40_000;
const OUTER_MAX_ITER: usize = 2_000;

/// Solve the steady Stokes problem to the given absolute tolerance on the
/// L2 momentum and divergence residuals.
pub fn solve_stokes(problem: &StokesProblem, tol: f64) -> Result<StokesSolution> {
    if !(tol > 0.0) {
        return Err(SimError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let grid = problem.mu.grid;
    problem.forcing.same_grid_scalar(&problem.mu)?;
    let mu_lo = problem.mu.min();
    let mu_hi = problem.mu.max();
    if mu_lo < problem.mu_min - 1e-12 || mu_hi > problem.mu_max + 1e-12 {
        return Err(SimError::ViscosityBounds(format!(
            "mu field spans [{mu_lo}, {mu_hi}] outside declared [{}, {}]",
            problem.mu_min, problem.mu_max
        )));
    }
    let avg = problem.averaging;
    let vol = grid.cell_volume();

    // integrated forcing
    let mut f_w = VectorField::zeros(grid);
    for a in 0..grid.dim {
        let shape = grid.face_shape(a);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let w = VectorField::face_weight(&grid, a, i, j, k);
                    f_w.comps[a].set(i, j, k, w * problem.forcing.comps[a].get(i, j, k));
                }
            }
        }
    }
    f_w.enforce_noslip();

    if f_w.max_abs() == 0.0 {
        return Ok(StokesSolution {
            u: VectorField::zeros(grid),
            p: ScalarField::zeros(grid, Boundary::Free),
            iterations: 0,
            div_residual: 0.0,
            momentum_residual: 0.0,
        });
    }

    let inner_solve = |rhs: &VectorField, guess: Option<&VectorField>| -> Result<VectorField> {
        let (u, _) = solve_viscous(
            &grid,
            &problem.mu.lat,
            None,
            rhs,
            guess,
            INNER_TOL_REL,
            INNER_MAX_ITER,
            "stokes/viscous-block",
            avg,
        )?;
        Ok(u)
    };

    // b_p = -div A^{-1} F (flat over cells)
    let u_f = inner_solve(&f_w, None)?;
    let div_uf = ops::divergence(&u_f);
    let n_cells = grid.n_cells();
    let mut b_p: Vec<f64> = div_uf.lat.data.iter().map(|v| -v).collect();
    linsolve::remove_mean(&mut b_p);

    let mu_flat = problem.mu.lat.data.clone();
    let mut p = vec![0.0; n_cells];
    let outer_iters;
    {
        let mut p_lat = Lat::zeros(grid.cells);
        let apply = |v: &[f64], out: &mut [f64]| {
            p_lat.data.copy_from_slice(v);
            let g = pressure_gradient_integrated(&grid, &p_lat);
            // errors inside the closure cannot propagate; fall back to a
            // zero application, which CG reports as a breakdown
            match inner_solve(&g, None) {
                Ok(u) => {
                    let div = ops::divergence(&u);
                    for (o, d) in out.iter_mut().zip(div.lat.data.iter()) {
                        *o = -*d;
                    }
                }
                Err(_) => out.fill(0.0),
            }
        };
        let precond = |r: &[f64], z: &mut [f64]| {
            for i in 0..r.len() {
                z[i] = r[i] * mu_flat[i];
            }
        };
        let out = linsolve::cg(
            apply,
            precond,
            &b_p,
            &mut p,
            1e-16,
            tol / vol.sqrt(),
            OUTER_MAX_ITER,
            linsolve::remove_mean,
        );
        outer_iters = out.iterations;
        if !out.converged {
            return Err(SimError::Solver {
                stage: "stokes/schur".into(),
                residual: out.residual * vol.sqrt(),
                iterations: out.iterations,
            });
        }
    }

    // reconstruct velocity at the converged pressure
    let mut p_lat = Lat::zeros(grid.cells);
    p_lat.data.copy_from_slice(&p);
    let g = pressure_gradient_integrated(&grid, &p_lat);
    let mut rhs = f_w.clone();
    for a in 0..grid.dim {
        for (r, gv) in rhs.comps[a].data.iter_mut().zip(g.comps[a].data.iter()) {
            *r -= gv;
        }
    }
    let u = inner_solve(&rhs, Some(&u_f))?;

    // measured residuals
    let div = ops::divergence(&u);
    let div_residual = div
        .lat
        .data
        .iter()
        .map(|v| v * v * vol)
        .sum::<f64>()
        .sqrt();
    let mut ku = VectorField::zeros(grid);
    apply_viscous(&problem.mu.lat, &u, &mut ku, avg);
    let mut mom_sq = 0.0;
    for a in 0..grid.dim {
        let shape = grid.face_shape(a);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let fi = [i, j, k][a];
                    if fi == 0 || fi == grid.cells[a] {
                        continue;
                    }
                    let w = VectorField::face_weight(&grid, a, i, j, k);
                    let r = ku.comps[a].get(i, j, k) + g.comps[a].get(i, j, k)
                        - f_w.comps[a].get(i, j, k);
                    mom_sq += r * r / w;
                }
            }
        }
    }
    let momentum_residual = mom_sq.sqrt();

    let mut p_field = ScalarField::zeros(grid, Boundary::Free);
    p_field.lat.data.copy_from_slice(&p);
    let mean = p_field.lat.data.iter().sum::<f64>() / n_cells as f64;
    for v in p_field.lat.data.iter_mut() {
        *v -= mean;
    }

    Ok(StokesSolution {
        u,
        p: p_field,
        iterations: outer_iters,
        div_residual,
        momentum_residual,
    })
}

/// Regularity-estimate probe: the ratio
/// `||u||_H2 / (||F||_2 (1 + ||grad mu||_q^{q/(q-3)}))`.
pub fn regularity_probe(problem: &StokesProblem, solution: &StokesSolution, q: f64) -> Result<f64> {
    if !(q > 3.0) {
        return Err(SimError::Domain(format!(
            "regularity probe requires q > 3, got {q}"
        )));
    }
    let f_l2 = norms::lp_norm_vector(&problem.forcing, 2.0)?;
    if f_l2 == 0.0 {
        return Err(SimError::DegenerateInput(
            "regularity probe is 0/0 for zero forcing".into(),
        ));
    }
    let grad_mu = norms::grad_lq_scalar(&problem.mu, q)?;
    let h2 = norms::h2_norm_vector(&solution.u);
    Ok(h2 / (f_l2 * (1.0 + grad_mu.powf(q / (q - 3.0)))))
}

/// Same probe with the exponent of the W^{2,r} estimate,
/// `q (5 r - 6) / (2 r (q - 3))`, applied to the L^r norm of F.
pub fn regularity_probe_lr(
    problem: &StokesProblem,
    solution: &StokesSolution,
    q: f64,
    r: f64,
) -> Result<f64> {
    if !(q > 3.0) {
        return Err(SimError::Domain(format!(
            "regularity probe requires q > 3, got {q}"
        )));
    }
    if !(r > 3.0 && r < q.min(6.0)) {
        return Err(SimError::Hypothesis(format!(
            "r must lie in (3, min(q, 6)) = (3, {}), got {r}",
            q.min(6.0)
        )));
    }
    let f_lr = norms::lp_norm_vector(&problem.forcing, r)?;
    if f_lr == 0.0 {
        return Err(SimError::DegenerateInput(
            "regularity probe is 0/0 for zero forcing".into(),
        ));
    }
    let grad_mu = norms::grad_lq_scalar(&problem.mu, q)?;
    let expo = q * (5.0 * r - 6.0) / (2.0 * r * (q - 3.0));
    let h2 = norms::h2_norm_vector(&solution.u);
    Ok(h2 / (f_lr * (1.0 + grad_mu.powf(expo))))
}

/// Discrete H1-style norm of the pressure, `||p||_2 + ||grad p||_2`.
pub fn pressure_h1(p: &ScalarField) -> f64 {
    norms::lp_norm_scalar(p, 2.0).unwrap() + {
        let mut q = p.clone();
        q.boundary = Boundary::Free;
        norms::grad_l2_scalar(&q)
    }
}

/// The same norm for p / mu(rho), the normalization the regularity
/// estimate states. Both columns are reported by the probe scenario.
pub fn pressure_over_mu_h1(p: &ScalarField, mu: &ScalarField) -> f64 {
    let mut q = p.clone();
    q.boundary = Boundary::Free;
    for (v, m) in q.lat.data.iter_mut().zip(mu.lat.data.iter()) {
        *v /= m;
    }
    pressure_h1(&q)
}

/// Manufactured solutions on the unit square for the convergence and
/// regularity studies. The forcing is the analytic image of the exact
/// fields under the variable-viscosity operator.
pub mod mms {
    use super::*;
    use std::f64::consts::PI;

    /// Which viscosity enters the manufactured problem.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum MmsCase {
        ConstantMu,
        VariableMu,
    }

    pub fn mu_value(case: MmsCase, x: f64, y: f64) -> f64 {
        match case {
            MmsCase::ConstantMu => 1.0,
            MmsCase::VariableMu => 1.0 + 0.5 * (PI * x).sin() * (PI * y).sin(),
        }
    }

    /// Exact velocity (divergence free, zero on the boundary of the
    /// unit square).
    pub fn u_exact(comp: usize, x: f64, y: f64) -> f64 {
        let sx = (PI * x).sin();
        let sy = (PI * y).sin();
        match comp {
            0 => sx * sx * (2.0 * PI * y).sin(),
            _ => -(2.0 * PI * x).sin() * sy * sy,
        }
    }

    /// Exact mean-zero pressure.
    pub fn p_exact(x: f64, y: f64) -> f64 {
        (PI * x).cos() * (PI * y).cos()
    }

    /// Analytic forcing `-div(2 mu D(u*)) + grad P*`.
    pub fn forcing(case: MmsCase, comp: usize, x: f64, y: f64) -> f64 {
        let sx = (PI * x).sin();
        let cx = (PI * x).cos();
        let sy = (PI * y).sin();
        let cy = (PI * y).cos();
        let s2x = (2.0 * PI * x).sin();
        let c2x = (2.0 * PI * x).cos();
        let s2y = (2.0 * PI * y).sin();
        let c2y = (2.0 * PI * y).cos();
        let pi2 = PI * PI;

        let d11 = PI * s2x * s2y;
        let d22 = -d11;
        let d12 = PI * (sx * sx * c2y - c2x * sy * sy);
        let d11_x = 2.0 * pi2 * c2x * s2y;
        let d11_y = 2.0 * pi2 * s2x * c2y;
        let d22_y = -d11_y;
        let d12_x = pi2 * (s2x * c2y + 2.0 * s2x * sy * sy);
        let d12_y = -pi2 * (2.0 * sx * sx * s2y + c2x * s2y);

        let (mu, mu_x, mu_y) = match case {
            MmsCase::ConstantMu => (1.0, 0.0, 0.0),
            MmsCase::VariableMu => (
                1.0 + 0.5 * sx * sy,
                0.5 * PI * cx * sy,
                0.5 * PI * sx * cy,
            ),
        };
        let p_x = -PI * sx * cy;
        let p_y = -PI * cx * sy;

        match comp {
            0 => -2.0 * (mu_x * d11 + mu * d11_x + mu_y * d12 + mu * d12_y) + p_x,
            _ => -2.0 * (mu_x * d12 + mu * d12_x + mu_y * d22 + mu * d22_y) + p_y,
        }
    }

    /// Assemble the manufactured problem on a grid.
    pub fn build_problem(grid: Grid, case: MmsCase) -> StokesProblem {
        let mu = ScalarField::from_fn(grid, Boundary::Free, move |x, y, _| mu_value(case, x, y));
        let forcing = VectorField::from_fn_raw(grid, move |a, x, y, _| forcing(case, a, x, y));
        let (mu_min, mu_max) = match case {
            MmsCase::ConstantMu => (1.0, 1.0),
            MmsCase::VariableMu => (1.0, 1.5),
        };
        StokesProblem {
            mu,
            forcing,
            mu_min,
            mu_max,
            averaging: MuAveraging::Arithmetic,
        }
    }

    /// Face-quadrature L2 error of a computed velocity against the exact
    /// one sampled at face centers.
    pub fn velocity_error(u: &VectorField) -> f64 {
        let grid = u.grid;
        let mut sum = 0.0;
        for a in 0..grid.dim {
            let shape = grid.face_shape(a);
            for i in 0..shape[0] {
                for j in 0..shape[1] {
                    for k in 0..shape[2] {
                        let x = grid.face_coord(a, i, 0);
                        let y = grid.face_coord(a, j, 1);
                        let w = VectorField::face_weight(&grid, a, i, j, k);
                        let e = u.comps[a].get(i, j, k) - u_exact(a, x, y);
                        sum += e * e * w;
                    }
                }
            }
        }
        sum.sqrt()
    }
}
