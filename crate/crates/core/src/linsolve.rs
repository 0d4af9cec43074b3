//! Preconditioned conjugate gradients on flat vectors.
//!
//! Deterministic by construction: sequential loops, fixed reduction
//! order, no threading. The `project` hook keeps iterates inside a
//! constraint subspace (mean-zero pressure for the singular Neumann
//! problem); pass a no-op for plain SPD systems.

/// Result of a CG solve.
#[derive(Debug, Clone, Copy)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = b` with Jacobi-style preconditioning.
///
/// `apply` computes `A v`, `precond` applies the (approximate) inverse
/// preconditioner. Convergence when the residual 2-norm falls below
/// `max(tol_rel * ||b||, tol_abs)`.
pub fn cg<A, P, Pr>(
    mut apply: A,
    precond: P,
    b: &[f64],
    x: &mut [f64],
    tol_rel: f64,
    tol_abs: f64,
    max_iter: usize,
    project: Pr,
) -> CgOutcome
where
    A: FnMut(&[f64], &mut [f64]),
    P: Fn(&[f64], &mut [f64]),
    Pr: Fn(&mut [f64]),
{
    let n = b.len();
    let target = (tol_rel * norm(b)).max(tol_abs);
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];

    project(x);
    apply(x, &mut q);
    for i in 0..n {
        r[i] = b[i] - q[i];
    }
    let mut res = norm(&r);
    if res <= target {
        return CgOutcome {
            iterations: 0,
            residual: res,
            converged: true,
        };
    }
    precond(&r, &mut z);
    project(&mut z);
    p.copy_from_slice(&z);
    let mut rz = dot(&r, &z);

    for it in 1..=max_iter {
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 || !pq.is_finite() {
            // lost positive definiteness (numerically); report failure
            return CgOutcome {
                iterations: it,
                residual: res,
                converged: false,
            };
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        // periodic residual replacement: keeps the recurred residual
        // honest on badly conditioned systems (vacuum-floored density)
        if it % 64 == 0 {
            apply(x, &mut q);
            for i in 0..n {
                r[i] = b[i] - q[i];
            }
        }
        res = norm(&r);
        if res <= target {
            project(x);
            return CgOutcome {
                iterations: it,
                residual: res,
                converged: true,
            };
        }
        precond(&r, &mut z);
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome {
        iterations: max_iter,
        residual: res,
        converged: false,
    }
}

/// Subtract the mean so the vector sums to zero (constant-nullspace
/// projection for the Neumann pressure problem).
pub fn remove_mean(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_diagonal_system() {
        let d = [2.0, 5.0, 10.0, 0.5];
        let b = [2.0, 10.0, 30.0, 1.0];
        let mut x = [0.0; 4];
        let out = cg(
            |v, out| {
                for i in 0..4 {
                    out[i] = d[i] * v[i];
                }
            },
            |r, z| {
                for i in 0..4 {
                    z[i] = r[i] / d[i];
                }
            },
            &b,
            &mut x,
            1e-14,
            0.0,
            50,
            |_| {},
        );
        assert!(out.converged);
        for i in 0..4 {
            assert!((x[i] - b[i] / d[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn solves_1d_laplacian() {
        // tridiagonal [-1, 2, -1] with unit rhs
        let n = 50;
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let left = if i > 0 { v[i - 1] } else { 0.0 };
                let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                out[i] = 2.0 * v[i] - left - right;
            }
        };
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let out = cg(
            apply,
            |r, z| z.copy_from_slice(r),
            &b,
            &mut x,
            1e-12,
            0.0,
            10 * n,
            |_| {},
        );
        assert!(out.converged, "residual {}", out.residual);
        // residual check
        let mut q = vec![0.0; n];
        apply(&x, &mut q);
        let res: f64 = q
            .iter()
            .zip(b.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(res < 1e-10);
    }
}
