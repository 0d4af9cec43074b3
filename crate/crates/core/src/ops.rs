//! Discrete differential operators on the staggered layout.
//!
//! Conventions, used consistently by the solvers and the ledger:
//! - divergence of a face field is cell-centered and telescopes exactly,
//!   so no-slip fields have zero total divergence to rounding;
//! - the gradient of a cell scalar is face-centered; wall faces use a
//!   ghost cell reflecting the boundary kind (Dirichlet mirror, or
//!   constant extrapolation of the gradient for `Boundary::Free`);
//! - `divergence(gradient(f))` reproduces the compact Laplacian stencil
//!   exactly, which the projection step relies on.

use crate::error::{Result, SimError};
use crate::field::{Boundary, Lat, ScalarField, VectorField};
use crate::grid::Grid;

/// Face-centered gradient of a cell scalar.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid;
    let mut out = VectorField::zeros(grid);
    for a in 0..grid.dim {
        let h = grid.spacing[a];
        let shape = grid.face_shape(a);
        let n = grid.cells[a];
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let fi = [i, j, k][a];
                    let g = if fi >= 1 && fi <= n - 1 {
                        let hi = f.lat.get(i, j, k);
                        let lo = f.lat.shift(i, j, k, a, -1);
                        (hi - lo) / h
                    } else {
                        // wall faces handled in a second pass
                        0.0
                    };
                    out.comps[a].set(i, j, k, g);
                }
            }
        }
        // Wall faces by boundary kind.
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let fi = [i, j, k][a];
                    if fi != 0 && fi != n {
                        continue;
                    }
                    let mut cell = [i, j, k];
                    if fi == n {
                        cell[a] = n - 1;
                    }
                    let fc = f.lat.get(cell[0], cell[1], cell[2]);
                    let g = match f.boundary {
                        Boundary::DirichletZero => {
                            if fi == 0 {
                                2.0 * fc / h
                            } else {
                                -2.0 * fc / h
                            }
                        }
                        Boundary::DirichletValue(v) => {
                            if fi == 0 {
                                2.0 * (fc - v) / h
                            } else {
                                2.0 * (v - fc) / h
                            }
                        }
                        Boundary::Free => {
                            // copy the adjacent interior face gradient
                            let mut adj = [i, j, k];
                            adj[a] = if fi == 0 { 1 } else { n - 1 };
                            out.comps[a].get(adj[0], adj[1], adj[2])
                        }
                    };
                    out.comps[a].set(i, j, k, g);
                }
            }
        }
    }
    out
}

/// Cell-centered divergence of a face field.
pub fn divergence(u: &VectorField) -> ScalarField {
    let grid = u.grid;
    let mut out = ScalarField::zeros(grid, Boundary::Free);
    let [nx, ny, nz] = grid.cells;
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let mut d = 0.0;
                for a in 0..grid.dim {
                    let h = grid.spacing[a];
                    let lo = u.comps[a].get(i, j, k);
                    let hi = u.comps[a].shift(i, j, k, a, 1);
                    d += (hi - lo) / h;
                }
                out.lat.set(i, j, k, d);
            }
        }
    }
    out
}

/// Compact Laplacian, identical to `divergence(gradient(f))`.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    divergence(&gradient(f))
}

/// Interpolate face component `a` to cell centers.
pub fn face_to_cell(u: &VectorField, a: usize) -> Lat {
    let grid = u.grid;
    let mut out = Lat::zeros(grid.cells);
    let [nx, ny, nz] = grid.cells;
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let lo = u.comps[a].get(i, j, k);
                let hi = u.comps[a].shift(i, j, k, a, 1);
                out.set(i, j, k, 0.5 * (lo + hi));
            }
        }
    }
    out
}

/// Interpolate a cell lattice to the face lattice of axis `a`
/// (arithmetic mean in the interior, copy at wall faces).
pub fn cell_to_face(grid: &Grid, cells: &Lat, a: usize) -> Lat {
    let shape = grid.face_shape(a);
    let n = grid.cells[a];
    let mut out = Lat::zeros(shape);
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                let fi = [i, j, k][a];
                let v = if fi >= 1 && fi <= n - 1 {
                    0.5 * (cells.shift(i, j, k, a, -1) + cells.get(i, j, k))
                } else {
                    let mut c = [i, j, k];
                    if fi == n {
                        c[a] = n - 1;
                    }
                    cells.get(c[0], c[1], c[2])
                };
                out.set(i, j, k, v);
            }
        }
    }
    out
}

/// First derivative of a cell lattice along `axis`, at cell centers:
/// central differences inside, 3-point one-sided at the two end layers.
pub fn cell_derivative(grid: &Grid, vals: &Lat, axis: usize) -> Lat {
    let mut out = Lat::zeros(vals.shape);
    let n = vals.shape[axis];
    let h = grid.spacing[axis];
    debug_assert!(n >= 3);
    for i in 0..vals.shape[0] {
        for j in 0..vals.shape[1] {
            for k in 0..vals.shape[2] {
                let c = [i, j, k][axis];
                let d = if c == 0 {
                    (-3.0 * vals.get(i, j, k) + 4.0 * vals.shift(i, j, k, axis, 1)
                        - vals.shift(i, j, k, axis, 2))
                        / (2.0 * h)
                } else if c == n - 1 {
                    (3.0 * vals.get(i, j, k) - 4.0 * vals.shift(i, j, k, axis, -1)
                        + vals.shift(i, j, k, axis, -2))
                        / (2.0 * h)
                } else {
                    (vals.shift(i, j, k, axis, 1) - vals.shift(i, j, k, axis, -1)) / (2.0 * h)
                };
                out.set(i, j, k, d);
            }
        }
    }
    out
}

/// Second derivative of a cell lattice along `axis`, one-sided at walls.
pub fn cell_second_derivative(grid: &Grid, vals: &Lat, axis: usize) -> Lat {
    let mut out = Lat::zeros(vals.shape);
    let n = vals.shape[axis];
    let h2 = grid.spacing[axis] * grid.spacing[axis];
    debug_assert!(n >= 3);
    for i in 0..vals.shape[0] {
        for j in 0..vals.shape[1] {
            for k in 0..vals.shape[2] {
                let c = [i, j, k][axis];
                let d = if c == 0 {
                    (vals.get(i, j, k) - 2.0 * vals.shift(i, j, k, axis, 1)
                        + vals.shift(i, j, k, axis, 2))
                        / h2
                } else if c == n - 1 {
                    (vals.get(i, j, k) - 2.0 * vals.shift(i, j, k, axis, -1)
                        + vals.shift(i, j, k, axis, -2))
                        / h2
                } else {
                    (vals.shift(i, j, k, axis, 1) - 2.0 * vals.get(i, j, k)
                        + vals.shift(i, j, k, axis, -1))
                        / h2
                };
                out.set(i, j, k, d);
            }
        }
    }
    out
}

/// Full velocity gradient tensor at cell centers, `tensor[a][b] =
/// d u_a / d x_b`, built from center-interpolated components with
/// one-sided differences at the walls. This is the diagnostic sampling
/// (no wall ghosts), exact on linear fields.
pub fn grad_tensor_centers(u: &VectorField) -> Vec<Vec<Lat>> {
    let grid = u.grid;
    let mut tensor = Vec::with_capacity(grid.dim);
    for a in 0..grid.dim {
        let centered = face_to_cell(u, a);
        let mut row = Vec::with_capacity(grid.dim);
        for b in 0..grid.dim {
            if b == a {
                // exact staggered derivative, second order at centers
                let mut d = Lat::zeros(grid.cells);
                let h = grid.spacing[a];
                let [nx, ny, nz] = grid.cells;
                for i in 0..nx {
                    for j in 0..ny {
                        for k in 0..nz {
                            let lo = u.comps[a].get(i, j, k);
                            let hi = u.comps[a].shift(i, j, k, a, 1);
                            d.set(i, j, k, (hi - lo) / h);
                        }
                    }
                }
                row.push(d);
            } else {
                row.push(cell_derivative(&grid, &centered, b));
            }
        }
        tensor.push(row);
    }
    tensor
}

/// Diagonal strain sample `D_aa` at cell centers.
pub fn strain_diag(u: &VectorField, a: usize) -> Lat {
    let grid = u.grid;
    let mut out = Lat::zeros(grid.cells);
    let h = grid.spacing[a];
    let [nx, ny, nz] = grid.cells;
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let lo = u.comps[a].get(i, j, k);
                let hi = u.comps[a].shift(i, j, k, a, 1);
                out.set(i, j, k, (hi - lo) / h);
            }
        }
    }
    out
}

/// Shape of the edge-site lattice for the off-diagonal pair (a, b):
/// node-like along both a and b, cell-like along the remaining axis.
pub fn edge_shape(grid: &Grid, a: usize, b: usize) -> [usize; 3] {
    let mut s = grid.cells;
    s[a] += 1;
    s[b] += 1;
    s
}

/// `d u_a / d x_b` on the (a, b) edge-site lattice, with no-slip wall
/// ghosts (the tangential velocity vanishes on the wall, so the ghost
/// sample mirrors the interior one with opposite sign).
pub fn edge_grad(u: &VectorField, a: usize, b: usize) -> Lat {
    let grid = u.grid;
    let shape = edge_shape(&grid, a, b);
    let n_b = grid.cells[b];
    let h = grid.spacing[b];
    let mut out = Lat::zeros(shape);
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                // u_a is face-like along a (same index) and cell-like
                // along b; the site index along b addresses the cell pair
                // (ib-1, ib).
                let ib = [i, j, k][b];
                let g = if ib >= 1 && ib <= n_b - 1 {
                    let mut hi = [i, j, k];
                    hi[b] = ib;
                    let mut lo = [i, j, k];
                    lo[b] = ib - 1;
                    (u.comps[a].get(hi[0], hi[1], hi[2]) - u.comps[a].get(lo[0], lo[1], lo[2])) / h
                } else if ib == 0 {
                    let c = [i, j, k];
                    2.0 * u.comps[a].get(c[0], c[1], c[2]) / h
                } else {
                    let mut c = [i, j, k];
                    c[b] = n_b - 1;
                    -2.0 * u.comps[a].get(c[0], c[1], c[2]) / h
                };
                out.set(i, j, k, g);
            }
        }
    }
    out
}

/// Quadrature weight of an edge site (trapezoid along the two node-like
/// axes, so weights over all sites sum to the domain measure).
#[inline]
pub fn edge_weight(grid: &Grid, a: usize, b: usize, site: [usize; 3]) -> f64 {
    let lam = |idx: usize, n: usize| if idx == 0 || idx == n { 0.5 } else { 1.0 };
    grid.cell_volume() * lam(site[a], grid.cells[a]) * lam(site[b], grid.cells[b])
}

/// Viscosity at an edge site: arithmetic mean of the adjacent cells
/// (4 in the interior, 2 on faces, 1 at corners).
pub fn edge_mu(grid: &Grid, mu: &Lat, a: usize, b: usize, site: [usize; 3]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0.0;
    let ia = site[a] as isize;
    let ib = site[b] as isize;
    for da in [-1isize, 0] {
        for db in [-1isize, 0] {
            let ca = ia + da;
            let cb = ib + db;
            if ca < 0 || cb < 0 || ca >= grid.cells[a] as isize || cb >= grid.cells[b] as isize {
                continue;
            }
            let mut c = site;
            c[a] = ca as usize;
            c[b] = cb as usize;
            sum += mu.get(c[0], c[1], c[2]);
            count += 1.0;
        }
    }
    sum / count
}

/// Pairs of distinct axes for the active dimension.
pub fn axis_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for a in 0..dim {
        for b in (a + 1)..dim {
            v.push((a, b));
        }
    }
    v
}

/// Fail unless the two fields share a grid.
pub fn check_same_grid(g1: &Grid, g2: &Grid) -> Result<()> {
    if g1 != g2 {
        return Err(SimError::GridMismatch(
            "operands live on different grids".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms;

    fn grid2(n: usize) -> Grid {
        Grid::new(2, [n, n, 1], [1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = grid2(8);
        let f = ScalarField::constant(g, Boundary::Free, 3.0);
        let gr = gradient(&f);
        assert!(gr.max_abs() == 0.0);
    }

    #[test]
    fn gradient_exact_on_linear_interior() {
        let g = grid2(8);
        let f = ScalarField::from_fn(g, Boundary::Free, |x, _, _| x);
        let gr = gradient(&f);
        // interior x-faces carry exactly 1, y-faces exactly 0
        for i in 1..8 {
            for j in 0..8 {
                assert!((gr.comps[0].get(i, j, 0) - 1.0).abs() < 1e-14);
            }
        }
        for i in 0..8 {
            for j in 1..8 {
                assert!(gr.comps[1].get(i, j, 0).abs() < 1e-14);
            }
        }
        // Free boundary copies the interior gradient
        assert!((gr.comps[0].get(0, 3, 0) - 1.0).abs() < 1e-14);
        assert!((gr.comps[0].get(8, 3, 0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gradient_error_quarters_under_refinement() {
        // interior max error of d/dx sin(2 pi x) for h and h/2
        let err = |n: usize| {
            let g = grid2(n);
            let f = ScalarField::from_fn(g, Boundary::Free, |x, _, _| (2.0 * std::f64::consts::PI * x).sin());
            let gr = gradient(&f);
            let mut e = 0.0f64;
            for i in 1..n {
                let x = i as f64 / n as f64;
                let exact = 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * x).cos();
                for j in 0..n {
                    e = e.max((gr.comps[0].get(i, j, 0) - exact).abs());
                }
            }
            e
        };
        let e1 = err(16);
        let e2 = err(32);
        let ratio = e1 / e2;
        assert!(ratio > 3.7 && ratio < 4.3, "ratio {ratio}");
    }

    #[test]
    fn div_grad_equals_laplacian_stencil() {
        // compatibility: div(grad f) must equal the compact stencil exactly
        let g = grid2(8);
        let f = ScalarField::from_fn(g, Boundary::DirichletZero, |x, y, _| {
            (x * 3.1).sin() * (y * 1.7).cos() + x * y
        });
        let lap = laplacian(&f);
        let h = g.spacing[0];
        // interior cells: compare against the hand-written 5-point stencil
        for i in 1..7 {
            for j in 1..7 {
                let stencil = (f.lat.get(i + 1, j, 0) - 2.0 * f.lat.get(i, j, 0)
                    + f.lat.get(i - 1, j, 0))
                    / (h * h)
                    + (f.lat.get(i, j + 1, 0) - 2.0 * f.lat.get(i, j, 0) + f.lat.get(i, j - 1, 0))
                        / (h * h);
                assert!((lap.lat.get(i, j, 0) - stencil).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn divergence_of_streamfunction_curl_is_zero() {
        let g = grid2(16);
        let mut u = VectorField::zeros(g);
        // u = curl psi sampled discretely: exactly divergence free
        let psi = |x: f64, y: f64| (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin();
        let h = g.spacing[0];
        for i in 0..17 {
            for j in 0..16 {
                let x = i as f64 * h;
                let y0 = j as f64 * h;
                u.comps[0].set(i, j, 0, (psi(x, y0 + h) - psi(x, y0)) / h);
            }
        }
        for i in 0..16 {
            for j in 0..17 {
                let x0 = i as f64 * h;
                let y = j as f64 * h;
                u.comps[1].set(i, j, 0, -(psi(x0 + h, y) - psi(x0, y)) / h);
            }
        }
        u.enforce_noslip();
        let div = divergence(&u);
        let max = div.lat.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-12, "max div {max}");
    }

    #[test]
    fn rigid_rotation_has_zero_deformation() {
        let g = grid2(12);
        let u = VectorField::from_fn_raw(g, |a, x, y, _| match a {
            0 => -(y - 0.5),
            _ => x - 0.5,
        });
        // one-sided diagnostics are exact on linear fields
        let d = norms::deformation_dissipation(&u, &ScalarField::constant(g, Boundary::Free, 1.0))
            .unwrap();
        assert!(d.abs() < 1e-20, "dissipation {d}");
    }
}
