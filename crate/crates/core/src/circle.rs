//! Integration on circles and tori.
//!
//! Closed forms for the one-factor Euler-class integrals, seeded Monte-Carlo
//! with a counter-based generator, and the trapezoidal product rule. Every
//! integral is taken against the probability measure `(dθ/2π)^dim`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hyperbolic::CirclePoint;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

impl Phase {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Phase::Cos => x.cos(),
            Phase::Sin => x.sin(),
        }
    }

    pub fn other(self) -> Phase {
        match self {
            Phase::Cos => Phase::Sin,
            Phase::Sin => Phase::Cos,
        }
    }
}

/// `amplitude · cos(kθ)` or `amplitude · sin(kθ)` with `k ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigMonomial {
    pub k: u32,
    pub phase: Phase,
    pub amplitude: f64,
}

impl TrigMonomial {
    pub fn new(k: u32, phase: Phase, amplitude: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("frequency must be at least 1".into()));
        }
        if !amplitude.is_finite() {
            return Err(Error::InvalidArgument("amplitude must be finite".into()));
        }
        Ok(TrigMonomial { k, phase, amplitude })
    }

    pub fn cos(k: u32) -> Self {
        TrigMonomial::new(k, Phase::Cos, 1.0).expect("k >= 1")
    }

    pub fn sin(k: u32) -> Self {
        TrigMonomial::new(k, Phase::Sin, 1.0).expect("k >= 1")
    }

    pub fn scaled(self, factor: f64) -> Self {
        TrigMonomial {
            amplitude: self.amplitude * factor,
            ..self
        }
    }

    #[inline]
    pub fn eval(&self, theta: f64) -> f64 {
        self.amplitude * self.phase.eval(self.k as f64 * theta)
    }

    /// Zero-mean primitive with respect to `dθ/2π`.
    pub fn primitive(&self) -> TrigMonomial {
        let scale = 1.0 / (TAU * self.k as f64);
        match self.phase {
            Phase::Cos => TrigMonomial {
                phase: Phase::Sin,
                amplitude: self.amplitude * scale,
                ..*self
            },
            Phase::Sin => TrigMonomial {
                phase: Phase::Cos,
                amplitude: -self.amplitude * scale,
                ..*self
            },
        }
    }

    /// `L²(dθ/2π)` inner product.
    pub fn inner(&self, other: &TrigMonomial) -> f64 {
        if self.k == other.k && self.phase == other.phase {
            0.5 * self.amplitude * other.amplitude
        } else {
            0.0
        }
    }
}

/// `∫ e(θ₀, b, c) dθ₀/2π = 1 − ℓ/π`, with `ℓ ∈ (0, 2π)` the counter-clockwise
/// arc length from `b` to `c`; zero when `b = c`.
pub fn euler_marginal(b: CirclePoint, c: CirclePoint) -> f64 {
    if b == c {
        return 0.0;
    }
    let arc = (c.angle() - b.angle()).rem_euclid(TAU);
    1.0 - arc / PI
}

/// `∫∫∫ e(θ₀,θ₁,θ₂) m1(θ₁) m2(θ₂)` through `2∫F₁ dF₂`, with `F₁` the zero-mean
/// primitive of `m1` and `dF₂ = m2 dθ/2π`.
pub fn euler_trig_triple(m1: &TrigMonomial, m2: &TrigMonomial) -> f64 {
    2.0 * m1.primitive().inner(m2)
}

/// `∫∫∫ e(x,y,z) e^{i(px+qy+rz)}` over `(𝕊¹)³`.
///
/// Nonzero only when one frequency vanishes and the other two are opposite;
/// the value is then `1/(iπs)` with `s` the frequency cyclically following
/// the zero.
pub fn euler_exp_triple(p: i64, q: i64, r: i64) -> Complex64 {
    if p + q + r != 0 {
        return Complex64::new(0.0, 0.0);
    }
    let s = match (p == 0, q == 0, r == 0) {
        (true, false, false) => q,
        (false, true, false) => r,
        (false, false, true) => p,
        _ => return Complex64::new(0.0, 0.0),
    };
    // 1/(iπs) = −i/(πs)
    Complex64::new(0.0, -1.0 / (PI * s as f64))
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl MCEstimate {
    /// Distance to `target` in units of the standard error.
    pub fn sigmas_from(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if self.std_error == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / self.std_error
        }
    }

    pub fn within_sigmas(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Samples per generator stream; fixed so results do not depend on the
/// number of worker threads.
pub const MC_BLOCK: u64 = 4096;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * (other.count as f64 / count as f64);
        let m2 = self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64 / count as f64);
        Moments { count, mean, m2 }
    }
}

/// Generator for block `block` of a run keyed by `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Uniform i.i.d. Monte-Carlo over `(𝕊¹)^dim`.
///
/// The integrand receives `dim` angles in `[0, 2π)`. The estimate is a pure
/// function of `(f, dim, samples, seed)`.
pub fn mc_integrate<F>(f: F, dim: usize, samples: u64, seed: u64) -> Result<MCEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    if samples < 2 {
        return Err(Error::InvalidSampleCount(samples));
    }
    let blocks = samples.div_ceil(MC_BLOCK);
    let partial: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut angles = vec![0.0; dim];
            let mut m = Moments::default();
            for _ in 0..count {
                for a in angles.iter_mut() {
                    *a = CirclePoint::new(rng.random::<f64>() * TAU).angle();
                }
                m.push(f(&angles));
            }
            m
        })
        .collect();
    let total = partial.into_iter().fold(Moments::default(), Moments::merge);
    let variance = total.m2.max(0.0) / (total.count - 1) as f64;
    Ok(MCEstimate {
        value: total.mean,
        std_error: (variance / total.count as f64).sqrt(),
        samples,
        seed,
    })
}

/// Largest grid `nodes^dim` accepted by [`tensor_quadrature`].
pub const QUADRATURE_BUDGET: u64 = 100_000_000;

/// Trapezoidal product rule with `nodes_per_axis` equispaced nodes per circle.
pub fn tensor_quadrature<F>(f: F, dim: usize, nodes_per_axis: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    if nodes_per_axis < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 nodes per axis, got {nodes_per_axis}"
        )));
    }
    let total = (nodes_per_axis as u64)
        .checked_pow(dim as u32)
        .filter(|&t| t <= QUADRATURE_BUDGET)
        .ok_or_else(|| {
            Error::BudgetExceeded(format!(
                "{nodes_per_axis}^{dim} quadrature nodes exceed {QUADRATURE_BUDGET}"
            ))
        })?;
    let step = TAU / nodes_per_axis as f64;
    let inner = total / nodes_per_axis as u64;
    let slices: Vec<f64> = (0..nodes_per_axis)
        .into_par_iter()
        .map(|first| {
            let mut angles = vec![0.0; dim];
            angles[0] = first as f64 * step;
            let mut sum = 0.0;
            for idx in 0..inner {
                let mut rest = idx;
                for a in angles.iter_mut().skip(1) {
                    *a = (rest % nodes_per_axis as u64) as f64 * step;
                    rest /= nodes_per_axis as u64;
                }
                sum += f(&angles);
            }
            sum
        })
        .collect();
    Ok(slices.iter().sum::<f64>() / total as f64)
}
