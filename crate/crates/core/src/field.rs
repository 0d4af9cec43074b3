//! Field storage: cell-centered scalars and face-centered (MAC) vectors.

use crate::error::{Result, SimError};
use crate::grid::Grid;

/// Boundary treatment of a cell-centered scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Homogeneous Dirichlet (theta, P-like auxiliaries, probe fields).
    DirichletZero,
    /// Inhomogeneous Dirichlet with a constant wall value.
    DirichletValue(f64),
    /// No boundary condition of its own (rho, mu(rho)); gradients at wall
    /// faces are extrapolated from the interior.
    Free,
}

/// Dense lattice with three padded axes (C order, last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Lat {
    pub shape: [usize; 3],
    pub data: Vec<f64>,
}

impl Lat {
    pub fn zeros(shape: [usize; 3]) -> Self {
        Lat {
            shape,
            data: vec![0.0; shape[0] * shape[1] * shape[2]],
        }
    }

    #[inline(always)]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.shape[1] + j) * self.shape[2] + k
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.idx(i, j, k)]
    }

    #[inline(always)]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let n = self.idx(i, j, k);
        self.data[n] = v;
    }

    #[inline(always)]
    pub fn add(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let n = self.idx(i, j, k);
        self.data[n] += v;
    }

    /// Index offset by +1 or -1 along `axis`; caller guarantees validity.
    #[inline(always)]
    pub fn shift(&self, i: usize, j: usize, k: usize, axis: usize, by: isize) -> f64 {
        let mut c = [i as isize, j as isize, k as isize];
        c[axis] += by;
        self.get(c[0] as usize, c[1] as usize, c[2] as usize)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Cell-centered scalar field (rho, theta, P, mu(rho) samples).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub boundary: Boundary,
    pub lat: Lat,
}

impl ScalarField {
    pub fn zeros(grid: Grid, boundary: Boundary) -> Self {
        ScalarField {
            grid,
            boundary,
            lat: Lat::zeros(grid.cells),
        }
    }

    pub fn constant(grid: Grid, boundary: Boundary, value: f64) -> Self {
        let mut f = Self::zeros(grid, boundary);
        f.lat.data.fill(value);
        f
    }

    /// Sample `f(x, y, z)` at cell centers (z = 0.5 in 2D).
    pub fn from_fn<F: Fn(f64, f64, f64) -> f64>(grid: Grid, boundary: Boundary, f: F) -> Self {
        let mut out = Self::zeros(grid, boundary);
        let [nx, ny, nz] = grid.cells;
        for i in 0..nx {
            let x = grid.cell_coord(i, 0);
            for j in 0..ny {
                let y = grid.cell_coord(j, 1);
                for k in 0..nz {
                    let z = grid.cell_coord(k, 2);
                    out.lat.set(i, j, k, f(x, y, z));
                }
            }
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.lat.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.lat
            .data
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(SimError::GridMismatch(
                "scalar fields live on different grids".into(),
            ));
        }
        Ok(())
    }
}

/// Face-centered velocity-like field with no-slip walls. Component `a`
/// has one extra sample along axis `a`; samples with face index 0 or
/// `cells[a]` sit on the boundary and are pinned to zero by
/// [`VectorField::enforce_noslip`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub comps: Vec<Lat>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        let comps = (0..grid.dim).map(|a| Lat::zeros(grid.face_shape(a))).collect();
        VectorField { grid, comps }
    }

    /// Sample component closures at face centers, then enforce no-slip.
    pub fn from_fn<F: Fn(usize, f64, f64, f64) -> f64>(grid: Grid, f: F) -> Self {
        let mut out = Self::from_fn_raw(grid, f);
        out.enforce_noslip();
        out
    }

    /// Sample component closures at face centers without touching the
    /// wall values. Diagnostic oracles (rigid rotation, shear) use fields
    /// that do not satisfy no-slip.
    pub fn from_fn_raw<F: Fn(usize, f64, f64, f64) -> f64>(grid: Grid, f: F) -> Self {
        let mut out = Self::zeros(grid);
        for a in 0..grid.dim {
            let shape = grid.face_shape(a);
            for i in 0..shape[0] {
                let x = grid.face_coord(a, i, 0);
                for j in 0..shape[1] {
                    let y = grid.face_coord(a, j, 1);
                    for k in 0..shape[2] {
                        let z = grid.face_coord(a, k, 2);
                        out.comps[a].set(i, j, k, f(a, x, y, z));
                    }
                }
            }
        }
        out
    }

    /// Zero the boundary-face normal components exactly.
    pub fn enforce_noslip(&mut self) {
        for a in 0..self.grid.dim {
            let shape = self.comps[a].shape;
            let last = shape[a] - 1;
            for i in 0..shape[0] {
                for j in 0..shape[1] {
                    for k in 0..shape[2] {
                        let on_wall = match a {
                            0 => i == 0 || i == last,
                            1 => j == 0 || j == last,
                            _ => k == 0 || k == last,
                        };
                        if on_wall {
                            self.comps[a].set(i, j, k, 0.0);
                        }
                    }
                }
            }
        }
    }

    /// Largest absolute face sample over all components.
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.data.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest absolute face sample of one component.
    pub fn max_abs_comp(&self, a: usize) -> f64 {
        self.comps[a].data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn same_grid_scalar(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(SimError::GridMismatch(
                "vector and scalar fields live on different grids".into(),
            ));
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &VectorField) -> Result<()> {
        if self.grid != other.grid {
            return Err(SimError::GridMismatch(
                "vector fields live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// Quadrature weight of a face sample: full cell volume in the
    /// interior, half on the wall.
    #[inline]
    pub fn face_weight(grid: &Grid, comp: usize, i: usize, j: usize, k: usize) -> f64 {
        let vol = grid.cell_volume();
        let fi = [i, j, k][comp];
        if fi == 0 || fi == grid.cells[comp] {
            0.5 * vol
        } else {
            vol
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lat_indexing_round_trip() {
        let mut l = Lat::zeros([3, 4, 2]);
        l.set(2, 3, 1, 7.5);
        assert_eq!(l.get(2, 3, 1), 7.5);
        assert_eq!(l.idx(2, 3, 1), (2 * 4 + 3) * 2 + 1);
    }

    #[test]
    fn scalar_shape_matches_grid() {
        let g = Grid::new(2, [6, 4, 1], [1.0, 1.0, 1.0]).unwrap();
        let f = ScalarField::zeros(g, Boundary::DirichletZero);
        assert_eq!(f.lat.shape, [6, 4, 1]);
        assert_eq!(f.lat.len(), 24);
    }

    #[test]
    fn vector_staggering_adds_one_sample() {
        let g = Grid::new(2, [6, 4, 1], [1.0, 1.0, 1.0]).unwrap();
        let u = VectorField::zeros(g);
        assert_eq!(u.comps[0].shape, [7, 4, 1]);
        assert_eq!(u.comps[1].shape, [6, 5, 1]);
    }

    #[test]
    fn noslip_zeroes_wall_faces() {
        let g = Grid::new(2, [4, 4, 1], [1.0, 1.0, 1.0]).unwrap();
        let mut u = VectorField::zeros(g);
        for v in u.comps[0].data.iter_mut() {
            *v = 1.0;
        }
        u.enforce_noslip();
        for j in 0..4 {
            assert_eq!(u.comps[0].get(0, j, 0), 0.0);
            assert_eq!(u.comps[0].get(4, j, 0), 0.0);
            assert_eq!(u.comps[0].get(2, j, 0), 1.0);
        }
    }
}
