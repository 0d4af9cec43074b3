//! Variable-coefficient pressure Poisson problem for the projection step:
//! `div((1/rho_eff) grad phi) = div(u*)/dt` with homogeneous Neumann
//! walls. Solved by Jacobi-preconditioned CG restricted to mean-zero
//! (the compatibility condition holds exactly because no-slip makes the
//! total divergence telescope to zero).

use crate::error::{Result, SimError};
use crate::field::{Lat, ScalarField, VectorField};
use crate::grid::Grid;
use crate::linsolve::{self, CgOutcome};
use crate::ops;

/// Face-interpolated inverse density with the vacuum floor applied.
pub fn beta_faces(rho: &ScalarField, eps_rho: f64, rho_bar: f64) -> Vec<Lat> {
    let grid = rho.grid;
    let floor = eps_rho * rho_bar;
    (0..grid.dim)
        .map(|a| {
            let mut f = ops::cell_to_face(&grid, &rho.lat, a);
            for v in f.data.iter_mut() {
                *v = 1.0 / v.max(floor);
            }
            f
        })
        .collect()
}

/// Matrix-free application of `-vol * div(beta grad phi)` with Neumann
/// walls (wall fluxes vanish). Symmetric positive semidefinite with the
/// constants as nullspace.
fn apply(grid: &Grid, beta: &[Lat], phi: &Lat, out: &mut Lat) {
    out.data.fill(0.0);
    let vol = grid.cell_volume();
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
                    let g = (phi.get(i, j, k) - phi.shift(i, j, k, a, -1)) / h;
                    let t = beta[a].get(i, j, k) * w * g / h;
                    out.add(i, j, k, t);
                    let mut lo = [i, j, k];
                    lo[a] = fi - 1;
                    out.add(lo[0], lo[1], lo[2], -t);
                }
            }
        }
    }
    let _ = vol;
}

fn diagonal(grid: &Grid, beta: &[Lat]) -> Lat {
    let mut diag = Lat::zeros(grid.cells);
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
                    let c = beta[a].get(i, j, k) * w / (h * h);
                    diag.add(i, j, k, c);
                    let mut lo = [i, j, k];
                    lo[a] = fi - 1;
                    diag.add(lo[0], lo[1], lo[2], c);
                }
            }
        }
    }
    diag
}

/// Solve the Neumann problem; `rhs_cells` carries `div(u*)/dt` and the
/// returned potential is mean-zero. Tolerance is relative to the rhs.
pub fn solve(
    grid: &Grid,
    beta: &[Lat],
    rhs_cells: &Lat,
    tol_rel: f64,
    max_iter: usize,
) -> Result<(Lat, CgOutcome)> {
    let vol = grid.cell_volume();
    // integrated, sign-flipped rhs so the operator is positive
    let mut b: Vec<f64> = rhs_cells.data.iter().map(|v| -v * vol).collect();
    linsolve::remove_mean(&mut b);
    let diag = diagonal(grid, beta);
    let mut x = vec![0.0; b.len()];
    let mut phi = Lat::zeros(grid.cells);
    let mut out_lat = Lat::zeros(grid.cells);
    let apply_flat = |v: &[f64], out: &mut [f64]| {
        phi.data.copy_from_slice(v);
        apply(grid, beta, &phi, &mut out_lat);
        out.copy_from_slice(&out_lat.data);
    };
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..r.len() {
            z[i] = r[i] / diag.data[i];
        }
    };
    let outcome = linsolve::cg(
        apply_flat,
        precond,
        &b,
        &mut x,
        tol_rel,
        0.0,
        max_iter,
        linsolve::remove_mean,
    );
    if !outcome.converged {
        return Err(SimError::Solver {
            stage: "projection/poisson".into(),
            residual: outcome.residual,
            iterations: outcome.iterations,
        });
    }
    let mut result = Lat::zeros(grid.cells);
    result.data.copy_from_slice(&x);
    linsolve::remove_mean(&mut result.data);
    Ok((result, outcome))
}
