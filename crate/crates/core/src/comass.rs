//! Multi-start search for the comass of `Ω_𝟙` over band-limited frames.
//!
//! Frames are stored as dense coefficient vectors over the truncated basis
//! `{(K, phase) : K in the half-space, |Kⁱ| ≤ kmax}`. The objective is the
//! closed-form evaluation of [`omega`](crate::omega), recomputed from the
//! dense vectors without building [`TrigPolynomial`]s.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::circle::Phase;
use crate::omega::{comass_bound, omega_exact, omega_from_pairings, FourierIndex, Frame, TrigPolynomial};
use crate::{Error, Result};

/// Soundness margin between the search trace and the proven comass.
pub const TOL_COMASS: f64 = 1e-9;
/// Gram determinants (of normalised vectors) below this are rejected.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;
pub const SEARCH_MAX_N: usize = 3;
pub const SEARCH_MAX_KMAX: u32 = 3;
pub const MAX_ITERATIONS: u64 = 10_000;
pub const MIN_STEP: f64 = 1e-9;
const INITIAL_STEP: f64 = 0.25;

/// `2n` raw coefficient vectors over the truncated Fourier basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameParameterization {
    n: usize,
    kmax: u32,
    basis: Vec<(FourierIndex, Phase)>,
    raw: Vec<Vec<f64>>,
}

fn check_search_size(n: usize, kmax: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if n > SEARCH_MAX_N || kmax == 0 || kmax > SEARCH_MAX_KMAX {
        return Err(Error::BudgetExceeded(format!(
            "frame search supports 1 ≤ n ≤ {SEARCH_MAX_N} and 1 ≤ kmax ≤ {SEARCH_MAX_KMAX}, got n = {n}, kmax = {kmax}"
        )));
    }
    Ok(())
}

impl FrameParameterization {
    pub fn basis(n: usize, kmax: u32) -> Vec<(FourierIndex, Phase)> {
        FourierIndex::enumerate(n, kmax)
            .into_iter()
            .flat_map(|k| [(k.clone(), Phase::Cos), (k, Phase::Sin)])
            .collect()
    }

    pub fn new(n: usize, kmax: u32, raw: Vec<Vec<f64>>) -> Result<Self> {
        check_search_size(n, kmax)?;
        let basis = Self::basis(n, kmax);
        if raw.len() != 2 * n {
            return Err(Error::LengthMismatch {
                expected: 2 * n,
                actual: raw.len(),
            });
        }
        for v in &raw {
            if v.len() != basis.len() {
                return Err(Error::LengthMismatch {
                    expected: basis.len(),
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("raw coefficients must be finite".into()));
            }
        }
        Ok(FrameParameterization { n, kmax, basis, raw })
    }

    /// Coefficients of `(√2 cos θⁱ, √2 sin θⁱ)ᵢ`.
    pub fn standard(n: usize, kmax: u32) -> Result<Self> {
        check_search_size(n, kmax)?;
        let basis = Self::basis(n, kmax);
        let raw = (0..2 * n)
            .map(|j| {
                let target = (
                    FourierIndex::axis(n, j / 2, 1),
                    if j % 2 == 0 { Phase::Cos } else { Phase::Sin },
                );
                basis.iter().map(|b| if *b == target { SQRT_2 } else { 0.0 }).collect()
            })
            .collect();
        Self::new(n, kmax, raw)
    }

    /// Uniform coefficients in `[−1, 1]`.
    pub fn random<R: Rng + ?Sized>(n: usize, kmax: u32, rng: &mut R) -> Result<Self> {
        check_search_size(n, kmax)?;
        let d = Self::basis(n, kmax).len();
        let raw = (0..2 * n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        Self::new(n, kmax, raw)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kmax(&self) -> u32 {
        self.kmax
    }

    pub fn basis_len(&self) -> usize {
        self.basis.len()
    }

    pub fn raw(&self) -> &[Vec<f64>] {
        &self.raw
    }

    pub fn scaled(&self, a: f64) -> Self {
        FrameParameterization {
            raw: self.raw.iter().map(|v| v.iter().map(|x| x * a).collect()).collect(),
            ..self.clone()
        }
    }

    fn to_polynomials(&self, vectors: &[Vec<f64>]) -> Vec<TrigPolynomial> {
        vectors
            .iter()
            .map(|v| {
                let mut p = TrigPolynomial::zero(self.n);
                for ((k, phase), &c) in self.basis.iter().zip(v) {
                    if c != 0.0 {
                        p.add_term(k.entries(), *phase, c).expect("basis index has dimension n");
                    }
                }
                p
            })
            .collect()
    }
}

/// `L²` inner product of coefficient vectors (all basis terms have mean zero).
fn dot(u: &[f64], v: &[f64]) -> f64 {
    0.5 * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
}

fn gram_schmidt(raw: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    // Gram determinant of the normalised vectors, i.e. the product of the
    // squared residual norms of normalised inputs
    let mut det = 1.0;
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(raw.len());
    for v in raw {
        let norm = dot(v, v).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Degenerate(0.0));
        }
        let mut w: Vec<f64> = v.iter().map(|x| x / norm).collect();
        // two passes keep the result orthonormal to rounding
        for _ in 0..2 {
            for q in &out {
                let c = dot(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let r = dot(&w, &w);
        det *= r;
        if det < DEGENERACY_THRESHOLD {
            return Err(Error::Degenerate(det));
        }
        let r = r.sqrt();
        w.iter_mut().for_each(|x| *x /= r);
        out.push(w);
    }
    Ok(out)
}

/// Gram–Schmidt under the `L²` inner product.
pub fn orthonormalize(p: &FrameParameterization) -> Result<Frame> {
    let q = gram_schmidt(&p.raw)?;
    Frame::new(p.to_polynomials(&q))
}

/// `|Ω_𝟙(frame)|`.
pub fn objective(frame: &Frame) -> f64 {
    omega_exact(frame).abs()
}

/// Dense-vector evaluation of `|Ω_𝟙|`.
struct DenseObjective {
    n: usize,
    /// `(axis, 1/k, cos slot, sin slot)` for every single-axis index.
    pairs: Vec<(usize, f64, usize, usize)>,
}

impl DenseObjective {
    fn new(n: usize, basis: &[(FourierIndex, Phase)]) -> Self {
        let mut pairs = Vec::new();
        for (i, (k, phase)) in basis.iter().enumerate() {
            if *phase != Phase::Cos {
                continue;
            }
            if let Some((axis, freq)) = k.single_support() {
                let j = basis
                    .iter()
                    .position(|b| b.0 == *k && b.1 == Phase::Sin)
                    .expect("basis holds both phases");
                pairs.push((axis, 1.0 / freq as f64, i, j));
            }
        }
        DenseObjective { n, pairs }
    }

    fn eval(&self, vectors: &[Vec<f64>]) -> f64 {
        let m = 2 * self.n;
        let mut pairing = vec![vec![vec![0.0; m]; m]; self.n];
        for &(axis, inv_k, c, s) in &self.pairs {
            for a in 0..m {
                let ca = vectors[a][c];
                if ca == 0.0 {
                    continue;
                }
                for b in 0..m {
                    if a != b {
                        pairing[axis][a][b] += ca * vectors[b][s] * inv_k;
                    }
                }
            }
        }
        omega_from_pairings(self.n, &pairing).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub n: usize,
    pub kmax: u32,
    pub best_value: f64,
    pub best_frame: Frame,
    pub best_restart: usize,
    pub theoretical: f64,
    /// `theoretical − best_value`.
    pub gap: f64,
    pub restarts: usize,
    /// Coordinate sweeps, summed over restarts.
    pub iterations: u64,
    /// Objective evaluations, summed over restarts.
    pub evaluations: u64,
    pub seed: u64,
    /// Largest objective seen on any frame evaluated during the search.
    pub max_trace_value: f64,
    /// Final value of each restart, in restart order.
    pub restart_values: Vec<f64>,
}

impl SearchReport {
    /// No evaluated frame exceeded the proven comass by more than [`TOL_COMASS`].
    pub fn sound(&self) -> bool {
        self.max_trace_value <= self.theoretical + TOL_COMASS
    }
}

struct RestartOutcome {
    value: f64,
    vectors: Vec<Vec<f64>>,
    sweeps: u64,
    evaluations: u64,
    max_trace: f64,
}

fn ascend(obj: &DenseObjective, start: Vec<Vec<f64>>) -> Result<RestartOutcome> {
    let mut q = gram_schmidt(&start)?;
    let mut value = obj.eval(&q);
    let mut max_trace = value;
    let mut evaluations = 1;
    let mut sweeps = 0;
    let mut step = INITIAL_STEP;
    while step >= MIN_STEP && sweeps < MAX_ITERATIONS {
        sweeps += 1;
        let mut improved = false;
        for j in 0..q.len() {
            for b in 0..q[j].len() {
                for s in [step, -step] {
                    let mut cand = q.clone();
                    cand[j][b] += s;
                    let Ok(cand) = gram_schmidt(&cand) else {
                        continue;
                    };
                    let v = obj.eval(&cand);
                    evaluations += 1;
                    max_trace = max_trace.max(v);
                    if v > value {
                        value = v;
                        q = cand;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(RestartOutcome {
        value,
        vectors: q,
        sweeps,
        evaluations,
        max_trace,
    })
}

/// Multi-start coordinate ascent of `|Ω_𝟙|`. Restart `0` starts at the
/// standard frame, the others at seeded random frames.
pub fn search(n: usize, kmax: u32, restarts: usize, seed: u64) -> Result<SearchReport> {
    check_search_size(n, kmax)?;
    if restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    let basis = FrameParameterization::basis(n, kmax);
    let obj = DenseObjective::new(n, &basis);
    let outcomes = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                FrameParameterization::standard(n, kmax)?
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                FrameParameterization::random(n, kmax, &mut rng)?
            };
            ascend(&obj, start.raw)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[best].value {
            best = i;
        }
    }
    let template = FrameParameterization::standard(n, kmax)?;
    let best_frame = Frame::new(template.to_polynomials(&outcomes[best].vectors))?;
    let theoretical = comass_bound(n);
    let best_value = outcomes[best].value;
    Ok(SearchReport {
        n,
        kmax,
        best_value,
        best_frame,
        best_restart: best,
        theoretical,
        gap: theoretical - best_value,
        restarts,
        iterations: outcomes.iter().map(|o| o.sweeps).sum(),
        evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
        seed,
        max_trace_value: outcomes.iter().map(|o| o.max_trace).fold(f64::MIN, f64::max),
        restart_values: outcomes.iter().map(|o| o.value).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub n: usize,
    pub trials: usize,
    pub radius: f64,
    pub seed: u64,
    pub theoretical: f64,
    pub max_value: f64,
    pub min_value: f64,
    pub passed: bool,
}

/// Largest radius accepted by [`certify_local_max`].
pub const MAX_CERTIFY_RADIUS: f64 = 1e-2;
/// Basis used for the perturbations.
pub const CERTIFY_KMAX: u32 = 3;

/// Perturbs the standard frame `trials` times by raw vectors of norm at most
/// `radius` (over the `kmax = 3` basis), re-orthonormalises and checks that
/// the objective never exceeds the comass by more than `1e−12`.
pub fn certify_local_max(n: usize, trials: usize, radius: f64, seed: u64) -> Result<CertifyReport> {
    check_search_size(n, CERTIFY_KMAX)?;
    if !(0.0..=MAX_CERTIFY_RADIUS).contains(&radius) {
        return Err(Error::InvalidArgument(format!(
            "radius {radius} outside [0, {MAX_CERTIFY_RADIUS}]"
        )));
    }
    let standard = FrameParameterization::standard(n, CERTIFY_KMAX)?;
    let obj = DenseObjective::new(n, &standard.basis);
    let values = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut raw = standard.raw.clone();
            let dirs: Vec<Vec<f64>> = raw
                .iter()
                .map(|v| v.iter().map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let norm = dirs.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
            let scale = if norm > 0.0 {
                radius * rng.random::<f64>() / norm
            } else {
                0.0
            };
            for (v, d) in raw.iter_mut().zip(&dirs) {
                for (x, y) in v.iter_mut().zip(d) {
                    *x += scale * y;
                }
            }
            Ok(obj.eval(&gram_schmidt(&raw)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    let theoretical = comass_bound(n);
    let max_value = values.iter().copied().fold(f64::MIN, f64::max);
    let min_value = values.iter().copied().fold(f64::MAX, f64::min);
    Ok(CertifyReport {
        n,
        trials,
        radius,
        seed,
        theoretical,
        max_value,
        min_value,
        passed: trials > 0 && max_value <= theoretical + 1e-12,
    })
}
