//! The Poisson embedding `Φ₀ : (ℍ²)ⁿ → L²(𝕋ⁿ)`, `x ↦ Π √p_o(xⁱ, ·)`, and
//! the geometry it induces.
//!
//! Differentials are central finite differences with one Richardson step.
//! Pairings are computed one factor at a time: `Φ₀(x)` is a product of
//! unit-norm one-variable functions, so every `L²(𝕋ⁿ)` pairing of first
//! derivatives is a product of circle integrals. [`pullback_metric_grid`]
//! repeats the computation on the full product grid for `n ≤ 2`.

use std::f64::consts::{SQRT_2, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::Phase;
use crate::hyperbolic::{
    check_dim, poisson_kernel, poisson_raw, DiskPoint, PolyDiskPoint, ProductAutomorphism, TorusPoint,
};
use crate::omega::Frame;
use crate::{Error, Result};

/// Nodes of the per-factor trapezoidal rule.
pub const THETA_NODES: usize = 2048;
/// Finite-difference step used when none is given.
pub const DEFAULT_STEP: f64 = 1e-4;
pub const MIN_STEP: f64 = 1e-6;
pub const MAX_STEP: f64 = 1e-3;

/// `Φ₀(x)(θ) = Π √p_o(xⁱ, θⁱ)`.
pub fn phi0_evaluate(x: &PolyDiskPoint, theta: &TorusPoint) -> Result<f64> {
    check_dim(x.dim(), theta.dim())?;
    Ok(x.factors()
        .iter()
        .zip(theta.coords())
        .map(|(&xi, &ti)| poisson_kernel(xi, ti).sqrt())
        .product())
}

/// The function `Φ₀(x)` on `𝕋ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedPoint {
    source: PolyDiskPoint,
}

impl EmbeddedPoint {
    pub fn new(source: PolyDiskPoint) -> Self {
        EmbeddedPoint { source }
    }

    pub fn source(&self) -> &PolyDiskPoint {
        &self.source
    }

    pub fn eval(&self, theta: &TorusPoint) -> Result<f64> {
        phi0_evaluate(&self.source, theta)
    }

    /// `‖Φ₀(x)‖²`, a product of per-factor trapezoidal sums.
    pub fn norm_sqr(&self, nodes: usize) -> f64 {
        self.source
            .factors()
            .iter()
            .map(|xi| circle_mean(nodes, |t| poisson_raw(xi.z(), t)))
            .product()
    }
}

fn circle_mean(nodes: usize, f: impl Fn(f64) -> f64) -> f64 {
    let step = TAU / nodes as f64;
    (0..nodes).map(|k| f(k as f64 * step)).sum::<f64>() / nodes as f64
}

fn sample_grid(nodes: usize) -> Vec<f64> {
    let step = TAU / nodes as f64;
    (0..nodes).map(|k| k as f64 * step).collect()
}

/// Symmetric matrix of `L²` pairings of the differential of `Φ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    entries: Vec<Vec<f64>>,
}

impl GramMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let d = entries.len();
        if let Some(row) = entries.iter().find(|r| r.len() != d) {
            return Err(Error::LengthMismatch {
                expected: d,
                actual: row.len(),
            });
        }
        Ok(GramMatrix { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn asymmetry(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..d {
            for j in 0..i {
                m = m.max((self.entries[i][j] - self.entries[j][i]).abs());
            }
        }
        m
    }

    /// Largest `|G_ij − c·δ_ij|`.
    pub fn distance_to_scalar(&self, c: f64) -> f64 {
        let mut m: f64 = 0.0;
        for (i, row) in self.entries.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let target = if i == j { c } else { 0.0 };
                m = m.max((v - target).abs());
            }
        }
        m
    }

    /// Largest entry pairing directions of different factors.
    pub fn max_cross_factor(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (i, row) in self.entries.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i / 2 != j / 2 {
                    m = m.max(v.abs());
                }
            }
        }
        m
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    #[allow(clippy::needless_range_loop)]
    pub fn det(&self) -> f64 {
        let mut a = self.entries.clone();
        let d = a.len();
        let mut det = 1.0;
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
                .unwrap_or(col);
            if a[pivot][col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                a.swap(pivot, col);
                det = -det;
            }
            det *= a[col][col];
            for r in col + 1..d {
                let f = a[r][col] / a[col][col];
                for c in col..d {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
        det
    }
}

fn check_step(step: f64) -> Result<()> {
    if !(MIN_STEP..=MAX_STEP).contains(&step) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {step:e} outside [{MIN_STEP:e}, {MAX_STEP:e}]"
        )));
    }
    Ok(())
}

/// `(4·D_{h/2} − D_h)/3` for the central difference `D_h`.
fn richardson(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

const DIRECTIONS: [Complex64; 2] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];

/// Samples of `√p(x,·)` and its derivatives along `Re` and `Im` on a grid.
struct FactorSamples {
    value: Vec<f64>,
    deriv: [Vec<f64>; 2],
}

impl FactorSamples {
    fn new(x: DiskPoint, step: f64, grid: &[f64]) -> Result<Self> {
        // the widest stencil point has to stay inside the disk
        for dir in DIRECTIONS {
            for s in [-step, step] {
                DiskPoint::from_complex(x.z() + dir * s)?;
            }
        }
        let z = x.z();
        let value = grid.iter().map(|&t| poisson_raw(z, t).sqrt()).collect();
        let deriv = DIRECTIONS.map(|dir| {
            grid.iter()
                .map(|&t| richardson(|s| poisson_raw(z + dir * s, t).sqrt(), step))
                .collect()
        });
        Ok(FactorSamples { value, deriv })
    }
}

fn mean_product(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

/// Gram matrix of `∂Φ₀` along the Euclidean coordinate directions
/// `(Re x¹, Im x¹, …, Re xⁿ, Im xⁿ)`.
#[allow(clippy::needless_range_loop)]
pub fn pullback_metric_coordinates(x: &PolyDiskPoint, step: f64) -> Result<GramMatrix> {
    check_step(step)?;
    let n = x.dim();
    let grid = sample_grid(THETA_NODES);
    let factors = x
        .factors()
        .par_iter()
        .map(|&xi| FactorSamples::new(xi, step, &grid))
        .collect::<Result<Vec<_>>>()?;
    // ⟨√p, √p⟩, ⟨∂√p, √p⟩ and ⟨∂√p, ∂√p⟩ per factor
    let norm: Vec<f64> = factors.iter().map(|f| mean_product(&f.value, &f.value)).collect();
    let mixed: Vec<[f64; 2]> = factors
        .iter()
        .map(|f| [0, 1].map(|d| mean_product(&f.deriv[d], &f.value)))
        .collect();
    let mut g = vec![vec![0.0; 2 * n]; 2 * n];
    for a in 0..2 * n {
        for b in 0..2 * n {
            let (i, d) = (a / 2, a % 2);
            let (j, e) = (b / 2, b % 2);
            let mut v = if i == j {
                mean_product(&factors[i].deriv[d], &factors[i].deriv[e])
            } else {
                mixed[i][d] * mixed[j][e]
            };
            for (l, nl) in norm.iter().enumerate() {
                if l != i && l != j {
                    v *= nl;
                }
            }
            g[a][b] = v;
        }
    }
    GramMatrix::new(g)
}

fn to_orthonormal_frame(x: &PolyDiskPoint, g: GramMatrix) -> GramMatrix {
    let scale: Vec<f64> = x
        .factors()
        .iter()
        .flat_map(|xi| {
            let s = (1.0 - xi.norm_sqr()) / 2.0;
            [s, s]
        })
        .collect();
    let entries = g
        .entries
        .iter()
        .enumerate()
        .map(|(a, row)| row.iter().enumerate().map(|(b, v)| v * scale[a] * scale[b]).collect())
        .collect();
    GramMatrix { entries }
}

/// Pull-back of the `L²` metric by `Φ₀` at `x`, expressed in the orthonormal
/// frame of the hyperbolic metric `4|dx|²/(1−|x|²)²`, i.e. along the
/// coordinate directions scaled by `(1−|xⁱ|²)/2`. Equals `(1/8)·I` at `o`.
pub fn pullback_metric(x: &PolyDiskPoint, step: f64) -> Result<GramMatrix> {
    Ok(to_orthonormal_frame(x, pullback_metric_coordinates(x, step)?))
}

/// [`pullback_metric`] evaluated on the full `nodes^n` product grid
/// (`n ≤ 2`), without using the product structure.
pub fn pullback_metric_grid(x: &PolyDiskPoint, step: f64, nodes: usize) -> Result<GramMatrix> {
    check_step(step)?;
    let n = x.dim();
    if n > 2 {
        return Err(Error::SizeLimit {
            what: "n",
            limit: "n ≤ 2 for product-grid pairings".into(),
        });
    }
    let grid = sample_grid(nodes);
    let d = 2 * n;
    for xi in x.factors() {
        FactorSamples::new(*xi, step, &grid[..1])?;
    }
    let phi =
        |z: &[Complex64], t: &[f64]| -> f64 { z.iter().zip(t).map(|(&zi, &ti)| poisson_raw(zi, ti).sqrt()).product() };
    let base: Vec<Complex64> = x.factors().iter().map(|p| p.z()).collect();
    let total = nodes.pow(n as u32);
    let sums = (0..total)
        .into_par_iter()
        .map(|idx| {
            let t: Vec<f64> = (0..n).map(|i| grid[idx / nodes.pow(i as u32) % nodes]).collect();
            let grads: Vec<f64> = (0..d)
                .map(|a| {
                    richardson(
                        |s| {
                            let mut z = base.clone();
                            z[a / 2] += DIRECTIONS[a % 2] * s;
                            phi(&z, &t)
                        },
                        step,
                    )
                })
                .collect();
            let mut out = vec![0.0; d * d];
            for a in 0..d {
                for b in 0..d {
                    out[a * d + b] = grads[a] * grads[b];
                }
            }
            out
        })
        .reduce(
            || vec![0.0; d * d],
            |mut acc, v| {
                for (s, x) in acc.iter_mut().zip(v) {
                    *s += x;
                }
                acc
            },
        );
    let g = (0..d)
        .map(|a| (0..d).map(|b| sums[a * d + b] / total as f64).collect())
        .collect();
    Ok(to_orthonormal_frame(x, GramMatrix::new(g)?))
}

/// `√det(g_{Φ₀}) / √det(g₀)` at `x`; constant `(1/8)ⁿ`.
pub fn volume_density_ratio(x: &PolyDiskPoint) -> Result<f64> {
    let g = pullback_metric(x, DEFAULT_STEP)?;
    Ok(g.det().max(0.0).sqrt())
}

/// Coefficients of the differential of `Φ₀` at `o` against the tangent frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentSpanReport {
    pub n: usize,
    pub kmax: u32,
    /// Largest `L²` norm of the part of a differential orthogonal to the frame,
    /// among Fourier modes up to `kmax`.
    pub span_residual: f64,
    /// `coefficients[a][b] = ⟨dΦ₀(e_a), f_b⟩` for unit hyperbolic directions.
    pub coefficients: Vec<Vec<f64>>,
    /// Largest `|Σ_c coefficients[a][c]·coefficients[b][c] − G_ab|`.
    pub gram_mismatch: f64,
}

/// The frame `(√2 cos θⁱ, √2 sin θⁱ)ᵢ` spanning the image of `dΦ₀` at `o`.
pub fn tangent_frame_at_origin(n: usize) -> Frame {
    Frame::standard(n)
}

/// Projects finite-difference differentials of `Φ₀` at `o` onto Fourier
/// modes up to `kmax` and compares them with [`tangent_frame_at_origin`].
pub fn tangent_span_check(n: usize, kmax: u32) -> Result<TangentSpanReport> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let origin = PolyDiskPoint::origin(n);
    let grid = sample_grid(THETA_NODES);
    let samples = FactorSamples::new(DiskPoint::ORIGIN, DEFAULT_STEP, &grid)?;
    // unit hyperbolic vectors at o have Euclidean length 1/2; at o every other
    // factor of Φ₀ is the constant 1, so the differential lives on one circle
    let deriv: [Vec<f64>; 2] = samples.deriv.map(|v| v.iter().map(|d| 0.5 * d).collect());
    let mut span_residual: f64 = 0.0;
    let mut local = [[0.0; 2]; 2];
    for (d, g) in deriv.iter().enumerate() {
        let mut outside = mean_product(g, &vec![1.0; g.len()]).powi(2);
        for k in 1..=kmax {
            for (p, phase) in [Phase::Cos, Phase::Sin].into_iter().enumerate() {
                let basis: Vec<f64> = grid.iter().map(|&t| SQRT_2 * phase.eval(k as f64 * t)).collect();
                let c = mean_product(g, &basis);
                if k == 1 {
                    local[d][p] = c;
                } else {
                    outside += c * c;
                }
            }
        }
        span_residual = span_residual.max(outside.sqrt());
    }
    let mut coefficients = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for d in 0..2 {
            for p in 0..2 {
                coefficients[2 * i + d][2 * i + p] = local[d][p];
            }
        }
    }
    let gram = pullback_metric(&origin, DEFAULT_STEP)?;
    let mut gram_mismatch: f64 = 0.0;
    for a in 0..2 * n {
        for b in 0..2 * n {
            let v: f64 = (0..2 * n).map(|c| coefficients[a][c] * coefficients[b][c]).sum();
            gram_mismatch = gram_mismatch.max((v - gram.get(a, b)).abs());
        }
    }
    Ok(TangentSpanReport {
        n,
        kmax,
        span_residual,
        coefficients,
        gram_mismatch,
    })
}

/// Smallest grid accepted by [`equivariance_residual`].
pub const MIN_EQUIVARIANCE_GRID: usize = 32;

/// `max_θ |Φ₀(g·x)(θ) − Φ₀(x)(g⁻¹θ)·Π √p_o(g·o, θⁱ)|` over a `grid^n` lattice.
pub fn equivariance_residual(g: &ProductAutomorphism, x: &PolyDiskPoint, grid: usize) -> Result<f64> {
    let n = x.dim();
    check_dim(n, g.dim())?;
    if grid < MIN_EQUIVARIANCE_GRID {
        return Err(Error::InvalidArgument(format!(
            "equivariance grid needs at least {MIN_EQUIVARIANCE_GRID} nodes per axis, got {grid}"
        )));
    }
    if n > 2 {
        return Err(Error::SizeLimit {
            what: "n",
            limit: "n ≤ 2 for grid evaluation".into(),
        });
    }
    let gx = g.act_on_disk(x)?;
    let go = g.act_on_disk(&PolyDiskPoint::origin(n))?;
    let g_inv = g.inverse();
    let nodes = sample_grid(grid);
    let total = grid.pow(n as u32);
    (0..total)
        .into_par_iter()
        .map(|idx| -> Result<f64> {
            let angles: Vec<f64> = (0..n).map(|i| nodes[idx / grid.pow(i as u32) % grid]).collect();
            let theta = TorusPoint::from_angles(&angles)?;
            let lhs = phi0_evaluate(&gx, &theta)?;
            let pulled = phi0_evaluate(x, &g_inv.act_on_torus(&theta)?)?;
            let weight = phi0_evaluate(&go, &theta)?;
            Ok((lhs - pulled * weight).abs())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::DiskAutomorphism;
    use crate::omega::{comass_bound, omega_exact};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_factor(re: f64, im: f64) -> PolyDiskPoint {
        PolyDiskPoint::new(vec![DiskPoint::new(re, im).unwrap()]).unwrap()
    }

    #[test]
    fn phi0_examples() {
        let o = PolyDiskPoint::origin(2);
        let t = TorusPoint::from_angles(&[0.3, 4.0]).unwrap();
        assert_eq!(phi0_evaluate(&o, &t).unwrap(), 1.0);
        let x = one_factor(0.5, 0.0);
        let t = TorusPoint::from_angles(&[0.0]).unwrap();
        assert!((phi0_evaluate(&x, &t).unwrap() - 3f64.sqrt()).abs() < 1e-14);
        assert!(phi0_evaluate(&x, &TorusPoint::from_angles(&[0.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn unit_norm_and_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = PolyDiskPoint::random(2, 0.9, &mut rng);
            let e = EmbeddedPoint::new(x.clone());
            assert!((e.norm_sqr(10_000) - 1.0).abs() < 1e-8);
            let t = TorusPoint::random(2, &mut rng);
            assert!(e.eval(&t).unwrap() > 0.0);
        }
    }

    #[test]
    fn gram_at_origin() {
        for n in 1..=3 {
            let g = pullback_metric(&PolyDiskPoint::origin(n), DEFAULT_STEP).unwrap();
            assert!(g.distance_to_scalar(0.125) < 1e-6, "n={n}: {g:?}");
            let gc = pullback_metric_coordinates(&PolyDiskPoint::origin(n), DEFAULT_STEP).unwrap();
            assert!(gc.distance_to_scalar(0.5) < 1e-6);
        }
    }

    #[test]
    fn gram_properties_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let x = PolyDiskPoint::random(2, 0.7, &mut rng);
            let g = pullback_metric(&x, DEFAULT_STEP).unwrap();
            assert!(g.asymmetry() < 1e-15);
            assert!(g.max_cross_factor() < 1e-8);
            assert!(g.distance_to_scalar(0.125) < 1e-6, "{g:?}");
        }
    }

    #[test]
    fn grid_pairings_agree_with_factorwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = PolyDiskPoint::random(2, 0.5, &mut rng);
        let a = pullback_metric(&x, DEFAULT_STEP).unwrap();
        let b = pullback_metric_grid(&x, DEFAULT_STEP, 128).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-8, "{a:?} {b:?}");
            }
        }
        assert!(pullback_metric_grid(&PolyDiskPoint::origin(3), DEFAULT_STEP, 8).is_err());
    }

    #[test]
    fn step_bounds_and_boundary() {
        let o = PolyDiskPoint::origin(1);
        assert!(pullback_metric(&o, 1e-2).is_err());
        assert!(pullback_metric(&o, 1e-7).is_err());
        let near = one_factor(1.0 - 1e-4, 0.0);
        assert!(matches!(
            pullback_metric(&near, 1e-3),
            Err(Error::BoundaryProximity { .. })
        ));
    }

    #[test]
    fn density_ratio() {
        assert!((volume_density_ratio(&PolyDiskPoint::origin(1)).unwrap() - 0.125).abs() < 1e-5);
        assert!((volume_density_ratio(&PolyDiskPoint::origin(2)).unwrap() - 1.0 / 64.0).abs() < 1e-5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let x = PolyDiskPoint::random(1, 0.7, &mut rng);
            assert!((volume_density_ratio(&x).unwrap() - 0.125).abs() < 1e-5);
        }
    }

    #[test]
    fn tangent_frame() {
        for n in 1..=3 {
            let r = tangent_span_check(n, 4).unwrap();
            assert!(r.span_residual < 1e-5, "{r:?}");
            assert!(r.gram_mismatch < 1e-6, "{r:?}");
            let expected = 1.0 / (2.0 * SQRT_2);
            for a in 0..2 * n {
                assert!((r.coefficients[a][a] - expected).abs() < 1e-8);
            }
            let f = tangent_frame_at_origin(n);
            assert_eq!(f.functions().len(), 2 * n);
            assert!((omega_exact(&f) - comass_bound(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = PolyDiskPoint::random(2, 0.6, &mut rng);
        let id = ProductAutomorphism::identity(2);
        assert_eq!(equivariance_residual(&id, &x, 32).unwrap(), 0.0);
        let rot = ProductAutomorphism::rotations(&[0.7, -2.0]).unwrap();
        assert!(equivariance_residual(&rot, &x, 32).unwrap() < 1e-12);
        for _ in 0..5 {
            let g = ProductAutomorphism::new(vec![DiskAutomorphism::random(0.8, &mut rng)]).unwrap();
            let x = PolyDiskPoint::random(1, 0.8, &mut rng);
            assert!(equivariance_residual(&g, &x, 256).unwrap() < 1e-10);
        }
        assert!(equivariance_residual(&id, &x, 16).is_err());
    }

    #[test]
    fn determinant() {
        let g = GramMatrix::new(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!((g.det() - 5.0).abs() < 1e-15);
        let g = GramMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((g.det() + 1.0).abs() < 1e-15);
    }
}
