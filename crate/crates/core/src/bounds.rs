//! Closed-form corollaries of the entropy–volume inequality for manifolds
//! locally isometric to `(ℍ²)ⁿ`.

use serde::{Deserialize, Serialize};

use crate::hyperbolic::entropy_locally_symmetric;
use crate::{Error, Result};

/// Relative slack absorbing rounding in `h^{2n}` at the equality case.
const DEGREE_SLACK: f64 = 1e-12;

/// Inputs to the corollary calculators.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundQuery {
    pub n: usize,
    /// Volume entropy `h(g)` of the metric on the domain.
    pub h_g: Option<f64>,
    pub vol_y: Option<f64>,
    pub vol_m: Option<f64>,
    pub vol_g0: Option<f64>,
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(Error::InvalidArgument(format!(
            "{name} must be a positive finite number, got {x}"
        ))),
        _ => Ok(()),
    }
}

impl BoundQuery {
    pub fn new(n: usize) -> Self {
        BoundQuery {
            n,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::ZeroDimension);
        }
        positive("h_g", self.h_g)?;
        positive("vol_y", self.vol_y)?;
        positive("vol_m", self.vol_m)?;
        positive("vol_g0", self.vol_g0)
    }
}

/// `nⁿ / (2n−1)^{2n}` as an exactly rounded ratio where the integers fit.
fn minvol_constant(n: usize) -> f64 {
    let num = (n as u128).checked_pow(n as u32);
    let den = (2 * n as u128 - 1).checked_pow(2 * n as u32);
    match (num, den) {
        (Some(a), Some(b)) if a < 1 << 53 && b < 1 << 53 => a as f64 / b as f64,
        _ => ((n as f64).sqrt() / (2 * n - 1) as f64).powi(2 * n as i32),
    }
}

/// `(√n/(2n−1))^{2n} · vol_g0`, a lower bound for the minimal volume.
pub fn minvol_bound(n: usize, vol_g0: f64) -> Result<f64> {
    BoundQuery {
        vol_g0: Some(vol_g0),
        ..BoundQuery::new(n)
    }
    .validate()?;
    Ok(minvol_constant(n) * vol_g0)
}

/// Largest `|deg f|` allowed by `h(g)^{2n} Vol(Y,g) ≥ |deg f| · nⁿ · Vol(M,g₀)`.
pub fn degree_bound(q: &BoundQuery) -> Result<u64> {
    q.validate()?;
    let h = q.h_g.ok_or(Error::MissingField("h_g"))?;
    let vol_y = q.vol_y.ok_or(Error::MissingField("vol_y"))?;
    let vol_m = q.vol_m.ok_or(Error::MissingField("vol_m"))?;
    let n = q.n as i32;
    let h0 = entropy_locally_symmetric(q.n);
    let ratio = (h * h).powi(n) * vol_y / ((h0 * h0).powi(n) * vol_m);
    Ok((ratio * (1.0 + DEGREE_SLACK)).floor() as u64)
}

/// `2n − 1`, the entropy bound under `|K| ≤ 1` from volume comparison.
pub fn curvature_entropy_bound(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok((2 * n - 1) as f64)
}
