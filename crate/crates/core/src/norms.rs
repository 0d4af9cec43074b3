//! Lp norms and the quadratic functionals of the energy ledger.
//!
//! All integrals are midpoint quadrature over the staggered sample sets:
//! cell scalars sum over centers, face fields sum component-wise over
//! faces with half weights on the walls. The viscous dissipation used by
//! the ledger lives in [`crate::stokes`] because it shares its sampling
//! with the implicit operator; the center-based [`deformation_dissipation`]
//! here is the free-standing diagnostic (one-sided at walls, exact on
//! linear fields).

use crate::error::{Result, SimError};
use crate::field::{Lat, ScalarField, VectorField};
use crate::grid::Grid;
use crate::ops;

fn check_p(p: f64) -> Result<()> {
    if p.is_infinite() && p > 0.0 {
        return Ok(());
    }
    if !(p >= 1.0) {
        return Err(SimError::Domain(format!("lp_norm needs p >= 1, got {p}")));
    }
    Ok(())
}

/// Midpoint-quadrature Lp norm of a cell scalar; `p = f64::INFINITY`
/// returns the max of absolute values.
pub fn lp_norm_scalar(f: &ScalarField, p: f64) -> Result<f64> {
    check_p(p)?;
    if p.is_infinite() {
        return Ok(f.lat.data.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let vol = f.grid.cell_volume();
    let sum: f64 = f.lat.data.iter().map(|v| v.abs().powf(p) * vol).sum();
    Ok(sum.powf(1.0 / p))
}

/// Component-wise face-quadrature Lp norm of a face field. For p = 2 this
/// is the energy norm the mass matrices induce; for p = infinity it is the
/// max over face samples.
pub fn lp_norm_vector(u: &VectorField, p: f64) -> Result<f64> {
    check_p(p)?;
    if p.is_infinite() {
        return Ok(u.max_abs());
    }
    let grid = u.grid;
    let mut sum = 0.0;
    for a in 0..grid.dim {
        let shape = grid.face_shape(a);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let w = VectorField::face_weight(&grid, a, i, j, k);
                    sum += u.comps[a].get(i, j, k).abs().powf(p) * w;
                }
            }
        }
    }
    Ok(sum.powf(1.0 / p))
}

/// Sum of w * v^2 * cell volume over cells (for quantities like
/// the squared weighted norm of sqrt(rho) theta).
pub fn weighted_l2_sq_cells(grid: &Grid, weight: &Lat, vals: &Lat) -> f64 {
    let vol = grid.cell_volume();
    weight
        .data
        .iter()
        .zip(vals.data.iter())
        .map(|(w, v)| w * v * v * vol)
        .sum()
}

/// Squared kinetic energy norm with a cell-centered density weight:
/// sum over faces of rho_face * u^2 * face weight. This is exactly the
/// quadratic form of the momentum mass matrix.
pub fn kinetic_energy_sq(u: &VectorField, rho: &ScalarField) -> f64 {
    let grid = u.grid;
    let mut sum = 0.0;
    for a in 0..grid.dim {
        let rho_f = ops::cell_to_face(&grid, &rho.lat, a);
        let shape = grid.face_shape(a);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let w = VectorField::face_weight(&grid, a, i, j, k);
                    let v = u.comps[a].get(i, j, k);
                    sum += rho_f.get(i, j, k) * v * v * w;
                }
            }
        }
    }
    sum
}

/// Squared face-quadrature L2 norm of the gradient of a cell scalar
/// (Dirichlet ghosts at walls when the field carries that boundary).
pub fn grad_l2_sq_scalar(f: &ScalarField) -> f64 {
    let g = ops::gradient(f);
    let grid = f.grid;
    let mut sum = 0.0;
    for a in 0..grid.dim {
        let shape = grid.face_shape(a);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let w = VectorField::face_weight(&grid, a, i, j, k);
                    let v = g.comps[a].get(i, j, k);
                    sum += v * v * w;
                }
            }
        }
    }
    sum
}

pub fn grad_l2_scalar(f: &ScalarField) -> f64 {
    grad_l2_sq_scalar(f).sqrt()
}

/// Lq norm of the gradient of a cell scalar by the same face quadrature.
pub fn grad_lq_scalar(f: &ScalarField, q: f64) -> Result<f64> {
    check_p(q)?;
    let g = ops::gradient(f);
    lp_norm_vector(&g, q)
}

/// Squared L2 norm of the full velocity gradient on its natural staggered
/// sampling: diagonal entries at cell centers, off-diagonal entries at
/// edge sites with no-slip wall ghosts.
pub fn grad_l2_sq_vector(u: &VectorField) -> f64 {
    let grid = u.grid;
    let vol = grid.cell_volume();
    let mut sum = 0.0;
    for a in 0..grid.dim {
        let d = ops::strain_diag(u, a);
        sum += d.data.iter().map(|v| v * v * vol).sum::<f64>();
    }
    for (a, b) in ops::axis_pairs(grid.dim) {
        let gab = ops::edge_grad(u, a, b);
        let gba = ops::edge_grad(u, b, a);
        let shape = gab.shape;
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let w = ops::edge_weight(&grid, a, b, [i, j, k]);
                    let x = gab.get(i, j, k);
                    let y = gba.get(i, j, k);
                    sum += w * (x * x + y * y);
                }
            }
        }
    }
    sum
}

pub fn grad_l2_vector(u: &VectorField) -> f64 {
    grad_l2_sq_vector(u).sqrt()
}

/// Sup-norm approximation of |grad u|: the largest absolute gradient
/// entry over the natural staggered samples (a stated approximation of
/// the pointwise tensor norm).
pub fn grad_inf_vector(u: &VectorField) -> f64 {
    let grid = u.grid;
    let mut m = 0.0f64;
    for a in 0..grid.dim {
        let d = ops::strain_diag(u, a);
        m = d.data.iter().fold(m, |acc, v| acc.max(v.abs()));
    }
    for (a, b) in ops::axis_pairs(grid.dim) {
        for lat in [ops::edge_grad(u, a, b), ops::edge_grad(u, b, a)] {
            m = lat.data.iter().fold(m, |acc, v| acc.max(v.abs()));
        }
    }
    m
}

/// Diagnostic deformation-tensor dissipation: integral of
/// 2 mu |D(u)|^2 from the center-sampled gradient tensor (one-sided
/// differences at walls, no ghost assumption).
pub fn deformation_dissipation(u: &VectorField, mu: &ScalarField) -> Result<f64> {
    u.same_grid_scalar(mu)?;
    if mu.min() <= 0.0 {
        return Err(SimError::ViscosityBounds(format!(
            "viscosity must be positive everywhere, min {}",
            mu.min()
        )));
    }
    let grid = u.grid;
    let vol = grid.cell_volume();
    let tensor = ops::grad_tensor_centers(u);
    let [nx, ny, nz] = grid.cells;
    let mut sum = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let mut dsq = 0.0;
                for a in 0..grid.dim {
                    for b in 0..grid.dim {
                        let d = 0.5 * (tensor[a][b].get(i, j, k) + tensor[b][a].get(i, j, k));
                        dsq += d * d;
                    }
                }
                sum += 2.0 * mu.lat.get(i, j, k) * dsq * vol;
            }
        }
    }
    Ok(sum)
}

/// Discrete H2-style probe norm of a cell scalar:
/// ||f||_2 + ||grad f||_2 + ||grad^2 f||_2 with one-sided differences at
/// the walls (center sampling throughout).
pub fn h2_norm_scalar(f: &ScalarField) -> f64 {
    let grid = f.grid;
    let vol = grid.cell_volume();
    let l2 = |lat: &Lat| -> f64 {
        lat.data.iter().map(|v| v * v * vol).sum::<f64>()
    };
    let mut first = 0.0;
    let mut second = 0.0;
    let mut grads = Vec::new();
    for a in 0..grid.dim {
        let d = ops::cell_derivative(&grid, &f.lat, a);
        first += l2(&d);
        grads.push(d);
    }
    for a in 0..grid.dim {
        for b in 0..grid.dim {
            let dd = if a == b {
                ops::cell_second_derivative(&grid, &f.lat, a)
            } else {
                ops::cell_derivative(&grid, &grads[b], a)
            };
            second += l2(&dd);
        }
    }
    l2(&f.lat).sqrt() + first.sqrt() + second.sqrt()
}

/// Same probe norm for a face field, built on the center-interpolated
/// components.
pub fn h2_norm_vector(u: &VectorField) -> f64 {
    let grid = u.grid;
    let vol = grid.cell_volume();
    let l2 = |lat: &Lat| -> f64 { lat.data.iter().map(|v| v * v * vol).sum::<f64>() };
    let mut zero = 0.0;
    let mut first = 0.0;
    let mut second = 0.0;
    for a in 0..grid.dim {
        let centered = ops::face_to_cell(u, a);
        zero += l2(&centered);
        let mut grads = Vec::new();
        for b in 0..grid.dim {
            let d = ops::cell_derivative(&grid, &centered, b);
            first += l2(&d);
            grads.push(d);
        }
        for b in 0..grid.dim {
            for c in 0..grid.dim {
                let dd = if b == c {
                    ops::cell_second_derivative(&grid, &centered, b)
                } else {
                    ops::cell_derivative(&grid, &grads[c], b)
                };
                second += l2(&dd);
            }
        }
    }
    zero.sqrt() + first.sqrt() + second.sqrt()
}
