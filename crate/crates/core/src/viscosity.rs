//! The viscosity law rho -> mu(rho) with its declared bounds.

use crate::error::{Result, SimError};
use crate::field::{Boundary, ScalarField};

/// Density-dependent viscosity, continuously differentiable on
/// [0, rho_max] and bounded in [mu_min, mu_max]. Bounds are validated at
/// construction by dense sampling.
#[derive(Debug, Clone)]
pub struct ViscosityLaw {
    kind: LawKind,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Upper end of the density range the law is declared on.
    pub rho_max: f64,
}

#[derive(Debug, Clone)]
enum LawKind {
    /// mu = a + b * rho
    Affine { a: f64, b: f64 },
    /// Monotone C1 cubic through the given (rho, mu) knots
    /// (Fritsch-Carlson slopes).
    Tabulated {
        rho: Vec<f64>,
        mu: Vec<f64>,
        slope: Vec<f64>,
    },
}

const VALIDATION_SAMPLES: usize = 2048;
const BOUND_TOL: f64 = 1e-12;

impl ViscosityLaw {
    pub fn affine(a: f64, b: f64, mu_min: f64, mu_max: f64, rho_max: f64) -> Result<Self> {
        let law = ViscosityLaw {
            kind: LawKind::Affine { a, b },
            mu_min,
            mu_max,
            rho_max,
        };
        law.validate()?;
        Ok(law)
    }

    /// Monotone spline over knots; `points` must be sorted by density and
    /// start at rho = 0.
    pub fn tabulated(points: &[(f64, f64)], mu_min: f64, mu_max: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(SimError::Config(
                "tabulated viscosity needs at least two points".into(),
            ));
        }
        let rho: Vec<f64> = points.iter().map(|p| p.0).collect();
        let mu: Vec<f64> = points.iter().map(|p| p.1).collect();
        for w in rho.windows(2) {
            if w[1] <= w[0] {
                return Err(SimError::Config(
                    "tabulated viscosity densities must be strictly increasing".into(),
                ));
            }
        }
        let slope = fritsch_carlson_slopes(&rho, &mu)?;
        let rho_max = *rho.last().unwrap();
        let law = ViscosityLaw {
            kind: LawKind::Tabulated { rho, mu, slope },
            mu_min,
            mu_max,
            rho_max,
        };
        law.validate()?;
        Ok(law)
    }

    /// Pointwise evaluation; densities beyond the declared range clamp.
    pub fn eval(&self, rho: f64) -> f64 {
        let r = rho.clamp(0.0, self.rho_max);
        match &self.kind {
            LawKind::Affine { a, b } => a + b * r,
            LawKind::Tabulated { rho, mu, slope } => {
                let n = rho.len();
                let seg = match rho.binary_search_by(|v| v.partial_cmp(&r).unwrap()) {
                    Ok(i) => i.min(n - 2),
                    Err(i) => i.saturating_sub(1).min(n - 2),
                };
                let h = rho[seg + 1] - rho[seg];
                let t = (r - rho[seg]) / h;
                let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
                let h10 = t * (1.0 - t) * (1.0 - t);
                let h01 = t * t * (3.0 - 2.0 * t);
                let h11 = t * t * (t - 1.0);
                h00 * mu[seg] + h10 * h * slope[seg] + h01 * mu[seg + 1] + h11 * h * slope[seg + 1]
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.mu_min > 0.0) {
            return Err(SimError::ViscosityBounds(format!(
                "mu_min must be positive, got {}",
                self.mu_min
            )));
        }
        if self.mu_max < self.mu_min {
            return Err(SimError::ViscosityBounds(format!(
                "mu_max {} below mu_min {}",
                self.mu_max, self.mu_min
            )));
        }
        if !(self.rho_max >= 0.0) {
            return Err(SimError::Config(format!(
                "rho_max must be nonnegative, got {}",
                self.rho_max
            )));
        }
        for s in 0..=VALIDATION_SAMPLES {
            let r = self.rho_max * s as f64 / VALIDATION_SAMPLES as f64;
            let m = self.eval(r);
            if m < self.mu_min - BOUND_TOL || m > self.mu_max + BOUND_TOL {
                return Err(SimError::ViscosityBounds(format!(
                    "mu({r}) = {m} leaves the declared band [{}, {}]",
                    self.mu_min, self.mu_max
                )));
            }
        }
        Ok(())
    }
}

/// Fritsch-Carlson monotone slopes; rejects non-monotone data so the
/// resulting spline is C1 and stays inside the knot range.
fn fritsch_carlson_slopes(rho: &[f64], mu: &[f64]) -> Result<Vec<f64>> {
    let n = rho.len();
    let mut delta = vec![0.0; n - 1];
    for i in 0..n - 1 {
        delta[i] = (mu[i + 1] - mu[i]) / (rho[i + 1] - rho[i]);
    }
    let increasing = delta.iter().all(|d| *d >= 0.0);
    let decreasing = delta.iter().all(|d| *d <= 0.0);
    if !increasing && !decreasing {
        return Err(SimError::Config(
            "tabulated viscosity must be monotone in density".into(),
        ));
    }
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        m[i] = if delta[i - 1] * delta[i] <= 0.0 {
            0.0
        } else {
            0.5 * (delta[i - 1] + delta[i])
        };
    }
    for i in 0..n - 1 {
        if delta[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let alpha = m[i] / delta[i];
        let beta = m[i + 1] / delta[i];
        let s = alpha * alpha + beta * beta;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m[i] = tau * alpha * delta[i];
            m[i + 1] = tau * beta * delta[i];
        }
    }
    Ok(m)
}

/// Pointwise mu(rho) over a density field, checked against the declared
/// band (a violation means the law was misdeclared).
pub fn viscosity_field(rho: &ScalarField, law: &ViscosityLaw) -> Result<ScalarField> {
    let mut out = ScalarField::zeros(rho.grid, Boundary::Free);
    for (dst, r) in out.lat.data.iter_mut().zip(rho.lat.data.iter()) {
        let m = law.eval(*r);
        if m < law.mu_min - BOUND_TOL || m > law.mu_max + BOUND_TOL {
            return Err(SimError::ViscosityBounds(format!(
                "mu({r}) = {m} outside [{}, {}]",
                law.mu_min, law.mu_max
            )));
        }
        *dst = m;
    }
    Ok(out)
}
