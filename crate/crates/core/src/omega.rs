//! The calibrating `2n`-form at the constant function `𝟙`.
//!
//! `Ω_𝟙(f₁,…,f₂ₙ) = ∫ C(θ₀,…,θ₂ₙ) f₁(θ₁)⋯f₂ₙ(θ₂ₙ)` over `(𝕋ⁿ)^{2n+1}`.
//!
//! Two independent evaluators are provided:
//!
//! * [`fourier_coefficient`] expands the integrand into exponentials and sums
//!   over every permutation compatible with the Fourier support, using the
//!   closed-form one-factor integral [`euler_exp_triple`].
//! * [`omega_exact`] only visits paired-diagonal index patterns and weights
//!   them by the certified value `1/((2n)!·πⁿ·Πk)` per plain `cos`/`sin`
//!   product. This is a mixed Pfaffian in the per-coordinate pairing matrices
//!   and costs `O((2n)!)` regardless of the number of Fourier terms.
//!
//! [`scan_fourier`] cross-checks both on every small coefficient matrix.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{euler_exp_triple, euler_marginal, mc_integrate, MCEstimate, Phase};
use crate::cocycle::{self, factorial, SignedPermutation, MAX_N};
use crate::hyperbolic::{check_dim, CirclePoint, TorusPoint};
use crate::{Error, Result};

/// Orthonormality tolerance carried by [`Frame`].
pub const TOL_ORTHO: f64 = 1e-10;
/// Agreement tolerance between scanned coefficients and certificates.
pub const TOL_FOURIER: f64 = 1e-10;
/// Coefficients below this are reported as zero by the scan.
pub const TOL_ZERO: f64 = 1e-12;
/// Largest Monte-Carlo sample count accepted by [`omega_mc`].
pub const MC_SAMPLE_BUDGET: u64 = 100_000_000;

/// `2ⁿ/((2n)!·πⁿ)`, the comass of `Ω`.
pub fn comass_bound(n: usize) -> f64 {
    2f64.powi(n as i32) / (factorial(2 * n) as f64 * PI.powi(n as i32))
}

/// A nonzero integer vector whose first nonzero entry is positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i32>", into = "Vec<i32>")]
pub struct FourierIndex(Vec<i32>);

impl FourierIndex {
    pub fn new(k: Vec<i32>) -> Result<Self> {
        match k.iter().find(|&&v| v != 0) {
            Some(&first) if first > 0 => Ok(FourierIndex(k)),
            Some(_) => Err(Error::InvalidArgument(format!(
                "index {k:?} is not in the half-space (first nonzero entry negative)"
            ))),
            None => Err(Error::InvalidArgument("zero Fourier index".into())),
        }
    }

    /// Moves `k` into the half-space; the flag is set when `k` was negated.
    pub fn normalize(k: &[i32]) -> Option<(FourierIndex, bool)> {
        let first = *k.iter().find(|&&v| v != 0)?;
        if first > 0 {
            Some((FourierIndex(k.to_vec()), false))
        } else {
            Some((FourierIndex(k.iter().map(|v| -v).collect()), true))
        }
    }

    /// `k·e_axis` for `k ≥ 1`.
    pub fn axis(n: usize, axis: usize, k: u32) -> Self {
        let mut v = vec![0; n];
        v[axis] = k as i32;
        FourierIndex(v)
    }

    pub fn entries(&self) -> &[i32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `(axis, k)` when exactly one entry is nonzero.
    pub fn single_support(&self) -> Option<(usize, u32)> {
        let mut found = None;
        for (l, &v) in self.0.iter().enumerate() {
            if v != 0 {
                if found.is_some() {
                    return None;
                }
                found = Some((l, v as u32));
            }
        }
        found
    }

    #[inline]
    pub fn dot(&self, theta: &[f64]) -> f64 {
        self.0.iter().zip(theta).map(|(&k, &t)| k as f64 * t).sum()
    }

    /// Every index of the half-space with `|kⁱ| ≤ kmax`, in lexicographic order.
    pub fn enumerate(n: usize, kmax: u32) -> Vec<FourierIndex> {
        let k = kmax as i32;
        let mut out = Vec::new();
        let mut cur = vec![-k; n];
        loop {
            if let Ok(idx) = FourierIndex::new(cur.clone()) {
                out.push(idx);
            }
            let mut pos = n;
            loop {
                if pos == 0 {
                    out.sort();
                    return out;
                }
                pos -= 1;
                if cur[pos] < k {
                    cur[pos] += 1;
                    for c in cur.iter_mut().skip(pos + 1) {
                        *c = -k;
                    }
                    break;
                }
            }
        }
    }
}

impl TryFrom<Vec<i32>> for FourierIndex {
    type Error = Error;
    fn try_from(v: Vec<i32>) -> Result<Self> {
        FourierIndex::new(v)
    }
}

impl From<FourierIndex> for Vec<i32> {
    fn from(k: FourierIndex) -> Self {
        k.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TermRecord {
    index: FourierIndex,
    phase: Phase,
    coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrigPolynomialRepr {
    n: usize,
    constant: f64,
    terms: Vec<TermRecord>,
}

/// Finite Fourier series `c + Σ a_K cos(K·θ) + b_K sin(K·θ)` on `𝕋ⁿ` with
/// `K` in the half-space. Coefficients are plain; the `L²` inner product
/// applies the `½` weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TrigPolynomialRepr", try_from = "TrigPolynomialRepr")]
pub struct TrigPolynomial {
    n: usize,
    constant: f64,
    terms: BTreeMap<(FourierIndex, Phase), f64>,
}

impl From<TrigPolynomial> for TrigPolynomialRepr {
    fn from(p: TrigPolynomial) -> Self {
        TrigPolynomialRepr {
            n: p.n,
            constant: p.constant,
            terms: p
                .terms
                .into_iter()
                .map(|((index, phase), coef)| TermRecord { index, phase, coef })
                .collect(),
        }
    }
}

impl TryFrom<TrigPolynomialRepr> for TrigPolynomial {
    type Error = Error;
    fn try_from(r: TrigPolynomialRepr) -> Result<Self> {
        let mut p = TrigPolynomial::zero(r.n);
        p.constant = r.constant;
        for t in r.terms {
            check_dim(r.n, t.index.dim())?;
            p.add_term(t.index.entries(), t.phase, t.coef)?;
        }
        Ok(p)
    }
}

impl TrigPolynomial {
    pub fn zero(n: usize) -> Self {
        TrigPolynomial {
            n,
            constant: 0.0,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        TrigPolynomial {
            constant: c,
            ..TrigPolynomial::zero(n)
        }
    }

    /// `coef · cos(k θ^axis)` or `coef · sin(k θ^axis)`.
    pub fn monomial(n: usize, axis: usize, k: u32, phase: Phase, coef: f64) -> Self {
        let mut p = TrigPolynomial::zero(n);
        p.terms.insert((FourierIndex::axis(n, axis, k), phase), coef);
        p
    }

    /// Adds `coef · phase(K·θ)`; indices outside the half-space are mirrored.
    pub fn add_term(&mut self, k: &[i32], phase: Phase, coef: f64) -> Result<()> {
        check_dim(self.n, k.len())?;
        match FourierIndex::normalize(k) {
            None => {
                if phase == Phase::Cos {
                    self.constant += coef;
                }
            }
            Some((idx, flipped)) => {
                let c = if flipped && phase == Phase::Sin { -coef } else { coef };
                *self.terms.entry((idx, phase)).or_insert(0.0) += c;
            }
        }
        Ok(())
    }

    pub fn with_term(mut self, k: &[i32], phase: Phase, coef: f64) -> Result<Self> {
        self.add_term(k, phase, coef)?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FourierIndex, Phase, f64)> {
        self.terms.iter().map(|((k, p), &c)| (k, *p, c))
    }

    pub fn coefficient(&self, k: &FourierIndex, phase: Phase) -> f64 {
        self.terms.get(&(k.clone(), phase)).copied().unwrap_or(0.0)
    }

    pub fn is_zero_mean(&self) -> bool {
        self.constant == 0.0
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|((k, p), c)| c * p.eval(k.dot(theta)))
                .sum::<f64>()
    }

    /// `L²(𝕋ⁿ)` inner product for the probability measure.
    pub fn inner(&self, other: &TrigPolynomial) -> f64 {
        let mut s = self.constant * other.constant;
        let mut half = 0.0;
        for (key, c) in &self.terms {
            if let Some(d) = other.terms.get(key) {
                half += c * d;
            }
        }
        s += 0.5 * half;
        s
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn scaled(&self, a: f64) -> TrigPolynomial {
        TrigPolynomial {
            n: self.n,
            constant: self.constant * a,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c * a)).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &TrigPolynomial, b: f64) -> TrigPolynomial {
        let mut out = self.scaled(a);
        out.constant += b * other.constant;
        for (k, c) in &other.terms {
            *out.terms.entry(k.clone()).or_insert(0.0) += b * c;
        }
        out
    }
}

/// Ordered family of `2n` zero-mean trigonometric polynomials, orthonormal
/// to within [`TOL_ORTHO`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    n: usize,
    functions: Vec<TrigPolynomial>,
    /// Largest `|⟨fᵢ, fⱼ⟩ − δᵢⱼ|` observed at construction.
    max_deviation: f64,
}

impl Frame {
    pub fn new(functions: Vec<TrigPolynomial>) -> Result<Self> {
        let n = functions.len() / 2;
        if n == 0 || functions.len() != 2 * n {
            return Err(Error::LengthMismatch {
                expected: 2 * n.max(1),
                actual: functions.len(),
            });
        }
        for (i, f) in functions.iter().enumerate() {
            check_dim(n, f.dim())?;
            if f.constant_term().abs() > TOL_ORTHO {
                return Err(Error::NonZeroMean(i));
            }
        }
        let dev = gram_deviation(&functions);
        if dev > TOL_ORTHO {
            return Err(Error::NotOrthonormal(dev));
        }
        Ok(Frame {
            n,
            functions,
            max_deviation: dev,
        })
    }

    /// `(√2 cos θ¹, √2 sin θ¹, …, √2 cos θⁿ, √2 sin θⁿ)`.
    pub fn standard(n: usize) -> Self {
        Self::harmonic(n, &vec![1; n])
    }

    /// `(√2 cos kᵢθⁱ, √2 sin kᵢθⁱ)ᵢ`.
    pub fn harmonic(n: usize, ks: &[u32]) -> Self {
        assert_eq!(ks.len(), n);
        let functions = (0..n)
            .flat_map(|i| [Phase::Cos, Phase::Sin].map(|p| TrigPolynomial::monomial(n, i, ks[i], p, SQRT_2)))
            .collect();
        Frame::new(functions).expect("harmonic frames are orthonormal")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn functions(&self) -> &[TrigPolynomial] {
        &self.functions
    }

    pub fn max_deviation(&self) -> f64 {
        self.max_deviation
    }

    pub fn permuted(&self, perm: &[usize]) -> Result<Frame> {
        Frame::new(perm.iter().map(|&i| self.functions[i].clone()).collect())
    }

    pub fn into_functions(self) -> Vec<TrigPolynomial> {
        self.functions
    }
}

pub fn gram_deviation(functions: &[TrigPolynomial]) -> f64 {
    let mut dev: f64 = 0.0;
    for (i, f) in functions.iter().enumerate() {
        for (j, g) in functions.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((f.inner(g) - target).abs());
        }
    }
    dev
}

fn even_permutations(n: usize) -> &'static [SignedPermutation] {
    static TABLES: [OnceLock<Vec<SignedPermutation>>; MAX_N] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    TABLES[n - 1].get_or_init(|| cocycle::all_permutations(2 * n))
}

fn check_frame_size(n: usize, len: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if n > MAX_N {
        return Err(Error::SizeLimit {
            what: "n",
            limit: format!("n ≤ {MAX_N}"),
        });
    }
    if len != 2 * n {
        return Err(Error::LengthMismatch {
            expected: 2 * n,
            actual: len,
        });
    }
    Ok(())
}

/// Per-coordinate pairing matrices:
/// `pairing[l][a][b] = Σ_k cos-coef(f_a, k e_l) · sin-coef(f_b, k e_l) / k`.
pub(crate) type PairingMatrices = Vec<Vec<Vec<f64>>>;

/// `Ω_𝟙` from pairing matrices:
/// `1/((2n)!πⁿ) Σ_{π ∈ 𝔖_{2n}} sign(π) Π_l pairing[l][π(2l)][π(2l+1)]`.
pub(crate) fn omega_from_pairings(n: usize, pairing: &PairingMatrices) -> f64 {
    let mut total = 0.0;
    for sp in even_permutations(n) {
        let p = &sp.perm;
        let mut prod = sp.sign as f64;
        for (l, mat) in pairing.iter().enumerate() {
            prod *= mat[p[2 * l]][p[2 * l + 1]];
            if prod == 0.0 {
                break;
            }
        }
        total += prod;
    }
    total / (factorial(2 * n) as f64 * PI.powi(n as i32))
}

/// `Ω_𝟙(f₁,…,f₂ₙ)` for arbitrary (not necessarily orthonormal) zero-mean
/// trigonometric polynomials. Only single-axis Fourier terms contribute.
pub fn omega_exact_functions(functions: &[TrigPolynomial]) -> Result<f64> {
    let n = functions.len() / 2;
    check_frame_size(n, functions.len())?;
    let mut pairing = vec![vec![vec![0.0; 2 * n]; 2 * n]; n];
    // single-axis cos and sin coefficients per slot, keyed by (axis, k)
    let split: Vec<BTreeMap<(usize, u32), (f64, f64)>> = functions
        .iter()
        .map(|f| {
            let mut m: BTreeMap<(usize, u32), (f64, f64)> = BTreeMap::new();
            for (k, phase, c) in f.terms() {
                if let Some(key) = k.single_support() {
                    let e = m.entry(key).or_default();
                    match phase {
                        Phase::Cos => e.0 += c,
                        Phase::Sin => e.1 += c,
                    }
                }
            }
            m
        })
        .collect();
    for a in 0..2 * n {
        for b in 0..2 * n {
            if a == b {
                continue;
            }
            for (&(l, k), &(cos_a, _)) in &split[a] {
                if let Some(&(_, sin_b)) = split[b].get(&(l, k)) {
                    pairing[l][a][b] += cos_a * sin_b / k as f64;
                }
            }
        }
    }
    Ok(omega_from_pairings(n, &pairing))
}

/// `Ω_𝟙` on a frame.
pub fn omega_exact(frame: &Frame) -> f64 {
    omega_exact_functions(frame.functions()).expect("frame sizes validated at construction")
}

/// Monte-Carlo estimate of `Ω_𝟙(frame)` over `(𝕋ⁿ)^{2n+1}`.
pub fn omega_mc(frame: &Frame, samples: u64, seed: u64) -> Result<MCEstimate> {
    omega_mc_functions(frame.functions(), samples, seed)
}

pub fn omega_mc_functions(functions: &[TrigPolynomial], samples: u64, seed: u64) -> Result<MCEstimate> {
    let n = functions.len() / 2;
    check_frame_size(n, functions.len())?;
    check_budget(samples)?;
    let norm = factorial(2 * n + 1) as f64;
    mc_integrate(
        |a| {
            let mut prod = 1.0;
            for (j, f) in functions.iter().enumerate() {
                prod *= f.eval(&a[(j + 1) * n..(j + 2) * n]);
            }
            if prod == 0.0 {
                return 0.0;
            }
            let c = cocycle::cocycle_sum_raw(n, |j, i| a[j * n + i]);
            c as f64 / norm * prod
        },
        n * (2 * n + 1),
        samples,
        seed,
    )
}

/// Monte-Carlo estimate of `∫ C·(φ²(θ₀)−1)·Π φ(θⱼ)fⱼ(θⱼ)`.
///
/// Requires `‖φ‖ = 1` and `⟨φ, fⱼ⟩ = 0` (the `fⱼ` are tangent to the unit
/// sphere at `φ`), so that every measure `φfⱼ dθ` has zero mass. The cocycle
/// identity then forces the integral to vanish, which is what allows
/// evaluating the form at `φ = 𝟙` only. Without tangency it does not vanish.
pub fn basepoint_defect_mc(
    functions: &[TrigPolynomial],
    phi: &TrigPolynomial,
    samples: u64,
    seed: u64,
) -> Result<MCEstimate> {
    let n = functions.len() / 2;
    check_frame_size(n, functions.len())?;
    check_dim(n, phi.dim())?;
    if (phi.norm() - 1.0).abs() > TOL_ORTHO {
        return Err(Error::InvalidArgument(format!("φ has norm {}, expected 1", phi.norm())));
    }
    for (i, f) in functions.iter().enumerate() {
        check_dim(n, f.dim())?;
        if f.inner(phi).abs() > TOL_ORTHO {
            return Err(Error::InvalidArgument(format!("function {i} is not orthogonal to φ")));
        }
    }
    check_budget(samples)?;
    let norm = factorial(2 * n + 1) as f64;
    mc_integrate(
        |a| {
            let p0 = phi.eval(&a[..n]);
            let mut prod = p0 * p0 - 1.0;
            for (j, f) in functions.iter().enumerate() {
                let t = &a[(j + 1) * n..(j + 2) * n];
                prod *= phi.eval(t) * f.eval(t);
            }
            let c = cocycle::cocycle_sum_raw(n, |j, i| a[j * n + i]);
            c as f64 / norm * prod
        },
        n * (2 * n + 1),
        samples,
        seed,
    )
}

fn check_budget(samples: u64) -> Result<()> {
    if samples > MC_SAMPLE_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "{samples} samples exceed the limit of {MC_SAMPLE_BUDGET}"
        )));
    }
    Ok(())
}

/// `D(θ₁,…,θ₂ₙ) = ∫ C(θ₀,θ₁,…,θ₂ₙ) dθ₀`, with the `θ₀` coordinates integrated
/// in closed form factor by factor.
pub fn d_evaluate(points: &[TorusPoint]) -> Result<f64> {
    let n = points.len() / 2;
    check_frame_size(n, points.len())?;
    for p in points {
        check_dim(n, p.dim())?;
    }
    // slot j ≥ 1 refers to points[j-1]; slot 0 is the integrated point
    let coord = |j: usize, i: usize| -> CirclePoint { points[j - 1].coord(i) };
    let mut total = 0.0;
    for sp in cocycle::permutations(n)? {
        let p = &sp.perm;
        let mut prod = sp.sign as f64;
        for i in 0..n {
            let slots = [p[2 * i], p[2 * i + 1], p[2 * i + 2]];
            let factor = match slots {
                [0, b, c] | [b, c, 0] => euler_marginal(coord(b, i), coord(c, i)),
                [b, 0, c] => euler_marginal(coord(c, i), coord(b, i)),
                [a, b, c] => cocycle::euler_class(coord(a, i), coord(b, i), coord(c, i)) as f64,
            };
            prod *= factor;
            if prod == 0.0 {
                break;
            }
        }
        total += prod;
    }
    Ok(total / factorial(2 * n + 1) as f64)
}

/// Rows `K₁,…,K₂ₙ` of Fourier indices with one `cos`/`sin` choice per row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoeffMatrix {
    rows: Vec<FourierIndex>,
    phases: Vec<Phase>,
}

impl CoeffMatrix {
    pub fn new(rows: Vec<FourierIndex>, phases: Vec<Phase>) -> Result<Self> {
        let n = rows.len() / 2;
        check_frame_size(n, rows.len())?;
        if phases.len() != rows.len() {
            return Err(Error::LengthMismatch {
                expected: rows.len(),
                actual: phases.len(),
            });
        }
        for r in &rows {
            check_dim(n, r.dim())?;
        }
        Ok(CoeffMatrix { rows, phases })
    }

    pub fn from_rows(rows: &[&[i32]], phases: &[Phase]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| FourierIndex::new(r.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        CoeffMatrix::new(rows, phases.to_vec())
    }

    /// The paired-diagonal matrix `diag((k¹,k¹),…,(kⁿ,kⁿ))` with phases
    /// `(cos, sin)` in every pair.
    pub fn paired_diagonal(ks: &[u32]) -> Self {
        let n = ks.len();
        let rows = (0..2 * n).map(|j| FourierIndex::axis(n, j / 2, ks[j / 2])).collect();
        let phases = (0..2 * n)
            .map(|j| if j % 2 == 0 { Phase::Cos } else { Phase::Sin })
            .collect();
        CoeffMatrix { rows, phases }
    }

    pub fn dim(&self) -> usize {
        self.rows.len() / 2
    }

    pub fn rows(&self) -> &[FourierIndex] {
        &self.rows
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn entries(&self) -> Vec<Vec<i32>> {
        self.rows.iter().map(|r| r.entries().to_vec()).collect()
    }
}

/// `∫ D(θ₁,…,θ₂ₙ) γ_{K₁}(θ₁)⋯γ_{K₂ₙ}(θ₂ₙ)` with `γ_K = √2 cos(K·θ)` or
/// `√2 sin(K·θ)`.
///
/// Each `γ` is split into `e^{±iK·θ}`; the integrand then factors over the
/// `n` coordinates and each factor is a one-circle triple integral.
#[allow(clippy::needless_range_loop)]
pub fn fourier_coefficient(m: &CoeffMatrix) -> f64 {
    let n = m.dim();
    let slots = 2 * n + 1;
    // freq[j][l] for slot j (slot 0 carries no function)
    let mut freq = vec![vec![0i64; n]; slots];
    for (j, row) in m.rows.iter().enumerate() {
        for (l, &k) in row.entries().iter().enumerate() {
            freq[j + 1][l] = k as i64;
        }
    }
    let perms = cocycle::permutations(n).expect("size validated");
    let mut total = Complex64::new(0.0, 0.0);
    'perm: for sp in perms {
        let p = &sp.perm;
        // every slot carrying frequency on axis l must sit in class l
        for j in 1..slots {
            for l in 0..n {
                if freq[j][l] != 0 && !p[2 * l..=2 * l + 2].contains(&j) {
                    continue 'perm;
                }
            }
        }
        for signs in 0u32..(1 << (2 * n)) {
            let mut weight = Complex64::new(sp.sign as f64, 0.0);
            for (j, &phase) in m.phases.iter().enumerate() {
                let eps = if signs >> j & 1 == 0 { 1.0 } else { -1.0 };
                weight *= match phase {
                    Phase::Cos => Complex64::new(0.5, 0.0),
                    // eps/(2i)
                    Phase::Sin => Complex64::new(0.0, -0.5 * eps),
                };
            }
            let sign_of = |j: usize| -> i64 {
                if j == 0 || signs >> (j - 1) & 1 == 0 {
                    1
                } else {
                    -1
                }
            };
            for l in 0..n {
                let f = |pos: usize| sign_of(p[pos]) * freq[p[pos]][l];
                weight *= euler_exp_triple(f(2 * l), f(2 * l + 1), f(2 * l + 2));
                if weight == Complex64::new(0.0, 0.0) {
                    break;
                }
            }
            total += weight;
        }
    }
    // (√2)^{2n} from the γ normalisation
    total.re * 2f64.powi(n as i32) / factorial(slots) as f64
}

/// Evidence that a coefficient matrix is a paired-diagonal pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCertificate {
    /// Frequency `kˡ` carried by column `l`.
    pub frequencies: Vec<u32>,
    /// Rows listed pair by pair, `cos` row first: `[a₁, b₁, a₂, b₂, …]`.
    pub row_permutation: Vec<usize>,
    /// Column carried by each pair, in the order of `row_permutation`.
    pub column_permutation: Vec<usize>,
    /// `2ⁿ/((2n)!·πⁿ·Πkⁱ)`.
    pub predicted_value: f64,
    /// Orientation of the pattern relative to the standard one.
    pub sign: i8,
}

impl PatternCertificate {
    pub fn signed_value(&self) -> f64 {
        self.sign as f64 * self.predicted_value
    }
}

/// Detects the paired-diagonal pattern with one `cos` and one `sin` per pair.
pub fn pattern_match(m: &CoeffMatrix) -> Option<PatternCertificate> {
    let n = m.dim();
    let mut cos_row = vec![None; n];
    let mut sin_row = vec![None; n];
    let mut frequencies = vec![0u32; n];
    for (j, row) in m.rows.iter().enumerate() {
        let (l, k) = row.single_support()?;
        let slot = match m.phases[j] {
            Phase::Cos => &mut cos_row[l],
            Phase::Sin => &mut sin_row[l],
        };
        if slot.is_some() {
            return None;
        }
        *slot = Some(j);
        if frequencies[l] != 0 && frequencies[l] != k {
            return None;
        }
        frequencies[l] = k;
    }
    let mut ordered = Vec::with_capacity(2 * n);
    for l in 0..n {
        ordered.push(cos_row[l]?);
        ordered.push(sin_row[l]?);
    }
    let sign = cocycle::permutation_sign(&ordered);
    // present the pairs in order of their first row
    let mut pairs: Vec<(usize, usize, usize)> = (0..n).map(|l| (ordered[2 * l], ordered[2 * l + 1], l)).collect();
    pairs.sort_by_key(|&(a, b, _)| a.min(b));
    let prod_k: f64 = frequencies.iter().map(|&k| k as f64).product();
    Some(PatternCertificate {
        row_permutation: pairs.iter().flat_map(|&(a, b, _)| [a, b]).collect(),
        column_permutation: pairs.iter().map(|&(_, _, l)| l).collect(),
        predicted_value: comass_bound(n) / prod_k,
        frequencies,
        sign,
    })
}

/// One scanned coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub matrix: Vec<Vec<i32>>,
    pub phases: Vec<Phase>,
    pub value: f64,
    pub pattern: bool,
    pub predicted: f64,
    pub abs_error: f64,
}

impl ScanEntry {
    /// Nonzero exactly at certified patterns, with the certified value.
    pub fn consistent(&self) -> bool {
        if self.pattern {
            self.abs_error <= TOL_FOURIER && self.value.abs() > TOL_ZERO
        } else {
            self.value.abs() <= TOL_ZERO
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub n: usize,
    pub kmax: u32,
    pub matrices: u64,
    pub nonzero: u64,
    pub patterns: u64,
    pub inconsistent: u64,
    pub max_pattern_error: f64,
    pub max_off_pattern_value: f64,
    /// Distinct nonzero magnitudes, ascending.
    pub nonzero_values: Vec<f64>,
    pub entries: Vec<ScanEntry>,
}

impl ScanReport {
    pub fn passed(&self) -> bool {
        self.inconsistent == 0
    }
}

/// Largest scan accepted: `n ≤ 2`, `kmax ≤ 3`.
pub const SCAN_MAX_N: usize = 2;
pub const SCAN_MAX_KMAX: u32 = 3;

/// Evaluates every coefficient matrix with entries bounded by `kmax` (all
/// phase choices) and compares it with [`pattern_match`].
pub fn scan_fourier(n: usize, kmax: u32) -> Result<ScanReport> {
    scan_fourier_with(n, kmax, None)
}

/// As [`scan_fourier`], optionally restricted to one phase assignment.
pub fn scan_fourier_with(n: usize, kmax: u32, phases: Option<&[Phase]>) -> Result<ScanReport> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if n > SCAN_MAX_N || kmax > SCAN_MAX_KMAX || kmax == 0 {
        return Err(Error::BudgetExceeded(format!(
            "scan supports 1 ≤ n ≤ {SCAN_MAX_N} and 1 ≤ kmax ≤ {SCAN_MAX_KMAX}, got n = {n}, kmax = {kmax}"
        )));
    }
    if let Some(p) = phases {
        if p.len() != 2 * n {
            return Err(Error::LengthMismatch {
                expected: 2 * n,
                actual: p.len(),
            });
        }
    }
    let index_set = FourierIndex::enumerate(n, kmax);
    let rows = 2 * n;
    let n_rows = index_set.len() as u64;
    let n_matrices = n_rows.pow(rows as u32);
    let phase_choices: Vec<Vec<Phase>> = match phases {
        Some(p) => vec![p.to_vec()],
        None => (0u32..(1 << rows))
            .map(|bits| {
                (0..rows)
                    .map(|j| if bits >> j & 1 == 0 { Phase::Cos } else { Phase::Sin })
                    .collect()
            })
            .collect(),
    };
    let entries: Vec<ScanEntry> = (0..n_matrices)
        .into_par_iter()
        .flat_map_iter(|code| {
            let mut rest = code;
            let mut chosen = Vec::with_capacity(rows);
            for _ in 0..rows {
                chosen.push(index_set[(rest % n_rows) as usize].clone());
                rest /= n_rows;
            }
            chosen.reverse();
            phase_choices
                .iter()
                .map(|ph| {
                    let m = CoeffMatrix {
                        rows: chosen.clone(),
                        phases: ph.clone(),
                    };
                    let value = fourier_coefficient(&m);
                    let cert = pattern_match(&m);
                    let predicted = cert.as_ref().map_or(0.0, PatternCertificate::signed_value);
                    ScanEntry {
                        matrix: m.entries(),
                        phases: ph.clone(),
                        value,
                        pattern: cert.is_some(),
                        predicted,
                        abs_error: (value - predicted).abs(),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut nonzero_values: Vec<f64> = Vec::new();
    let mut report = ScanReport {
        n,
        kmax,
        matrices: entries.len() as u64,
        nonzero: 0,
        patterns: 0,
        inconsistent: 0,
        max_pattern_error: 0.0,
        max_off_pattern_value: 0.0,
        nonzero_values: Vec::new(),
        entries: Vec::new(),
    };
    for e in &entries {
        if e.value.abs() > TOL_ZERO {
            report.nonzero += 1;
            let v = e.value.abs();
            if !nonzero_values.iter().any(|&u| (u - v).abs() <= TOL_FOURIER) {
                nonzero_values.push(v);
            }
        }
        if e.pattern {
            report.patterns += 1;
            report.max_pattern_error = report.max_pattern_error.max(e.abs_error);
        } else {
            report.max_off_pattern_value = report.max_off_pattern_value.max(e.value.abs());
        }
        if !e.consistent() {
            report.inconsistent += 1;
        }
    }
    nonzero_values.sort_by(f64::total_cmp);
    report.nonzero_values = nonzero_values;
    report.entries = entries;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::mc_integrate;
    use crate::cocycle::cocycle_c_f64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const INV_PI: f64 = 1.0 / PI;

    #[test]
    fn comass_bound_values() {
        assert!((comass_bound(1) - INV_PI).abs() < 1e-16);
        assert!((comass_bound(2) - 1.0 / (6.0 * PI * PI)).abs() < 1e-17);
        assert!((comass_bound(3) - 1.0 / (90.0 * PI.powi(3))).abs() < 1e-18);
    }

    #[test]
    fn omega_exact_standard_frames() {
        assert!((omega_exact(&Frame::standard(1)) - INV_PI).abs() < 1e-15);
        assert!((omega_exact(&Frame::standard(2)) - 1.0 / (6.0 * PI * PI)).abs() < 1e-15);
        assert!((omega_exact(&Frame::standard(3)) - 1.0 / (90.0 * PI.powi(3))).abs() < 1e-15);
        let v = omega_exact(&Frame::harmonic(1, &[2]));
        assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn fourier_coefficient_examples() {
        let m = CoeffMatrix::paired_diagonal(&[1]);
        assert!((fourier_coefficient(&m) - INV_PI).abs() < 1e-14);
        let m = CoeffMatrix::paired_diagonal(&[1, 1]);
        assert!((fourier_coefficient(&m) - 1.0 / (6.0 * PI * PI)).abs() < 1e-14);
        // a row with two nonzero entries
        let m = CoeffMatrix::from_rows(
            &[&[1, 1], &[1, 0], &[0, 1], &[0, 1]],
            &[Phase::Cos, Phase::Sin, Phase::Cos, Phase::Sin],
        )
        .unwrap();
        assert!(fourier_coefficient(&m).abs() <= 1e-12);
    }

    #[test]
    fn fourier_coefficient_agrees_with_certificates_n3() {
        for ks in [[1u32, 1, 1], [1, 2, 3], [2, 1, 1]] {
            let m = CoeffMatrix::paired_diagonal(&ks);
            let cert = pattern_match(&m).unwrap();
            assert_eq!(cert.sign, 1);
            assert!((fourier_coefficient(&m) - cert.signed_value()).abs() < 1e-14);
        }
    }

    #[test]
    fn pattern_match_examples() {
        let m = CoeffMatrix::paired_diagonal(&[1, 1]);
        let c = pattern_match(&m).unwrap();
        assert!((c.predicted_value - 1.0 / (6.0 * PI * PI)).abs() < 1e-16);
        let m = CoeffMatrix::from_rows(
            &[&[1, 0], &[1, 0], &[0, 2], &[0, 2]],
            &[Phase::Cos, Phase::Sin, Phase::Cos, Phase::Sin],
        )
        .unwrap();
        let c = pattern_match(&m).unwrap();
        assert_eq!(c.frequencies, vec![1, 2]);
        assert!((c.predicted_value - 1.0 / (12.0 * PI * PI)).abs() < 1e-16);
        assert!((fourier_coefficient(&m) - 1.0 / (12.0 * PI * PI)).abs() < 1e-14);
        let m = CoeffMatrix::from_rows(
            &[&[1, 0], &[1, 0], &[1, 0], &[0, 1]],
            &[Phase::Cos, Phase::Sin, Phase::Cos, Phase::Sin],
        )
        .unwrap();
        assert!(pattern_match(&m).is_none());
        assert!(fourier_coefficient(&m).abs() <= 1e-12);
    }

    #[test]
    fn permuted_pattern_sign() {
        // swap the two pairs and flip one pair's phases
        let m = CoeffMatrix::from_rows(
            &[&[0, 1], &[1, 0], &[0, 1], &[1, 0]],
            &[Phase::Sin, Phase::Cos, Phase::Cos, Phase::Sin],
        )
        .unwrap();
        let c = pattern_match(&m).unwrap();
        assert_eq!(c.row_permutation, vec![2, 0, 1, 3]);
        assert_eq!(c.column_permutation, vec![1, 0]);
        let v = fourier_coefficient(&m);
        assert!((v - c.signed_value()).abs() < 1e-14, "{v} vs {}", c.signed_value());
    }

    #[test]
    fn fourier_index_enumeration() {
        assert_eq!(FourierIndex::enumerate(1, 3).len(), 3);
        assert_eq!(FourierIndex::enumerate(2, 1).len(), 4);
        assert_eq!(FourierIndex::enumerate(2, 2).len(), 12);
        assert_eq!(FourierIndex::enumerate(2, 3).len(), 24);
        assert_eq!(FourierIndex::enumerate(3, 3).len(), 171);
        assert!(FourierIndex::new(vec![0, -1]).is_err());
        assert!(FourierIndex::new(vec![0, 0]).is_err());
        assert_eq!(FourierIndex::new(vec![0, 2, -3]).unwrap().single_support(), None);
    }

    #[test]
    fn add_term_mirrors_negative_indices() {
        let p = TrigPolynomial::zero(2)
            .with_term(&[-1, 2], Phase::Sin, 1.5)
            .unwrap()
            .with_term(&[0, -3], Phase::Cos, 2.0)
            .unwrap();
        let theta = [0.4, 1.1];
        let expected = 1.5 * (-0.4f64 + 2.2).sin() + 2.0 * (-3.3f64).cos();
        assert!((p.eval(&theta) - expected).abs() < 1e-14);
    }

    #[test]
    fn frame_validation() {
        let f = TrigPolynomial::monomial(1, 0, 1, Phase::Cos, SQRT_2);
        assert!(matches!(
            Frame::new(vec![f.clone(), f.clone()]),
            Err(Error::NotOrthonormal(_))
        ));
        let g = TrigPolynomial::constant(1, 1.0);
        assert!(matches!(Frame::new(vec![f.clone(), g]), Err(Error::NonZeroMean(1))));
        assert!(Frame::new(vec![f]).is_err());
    }

    #[test]
    fn d_evaluate_antipodal_and_mc() {
        let pts = [
            TorusPoint::from_angles(&[0.0]).unwrap(),
            TorusPoint::from_angles(&[PI]).unwrap(),
        ];
        assert!(d_evaluate(&pts).unwrap().abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for n in 1..=2usize {
            for _ in 0..3 {
                let pts: Vec<TorusPoint> = (0..2 * n).map(|_| TorusPoint::random(n, &mut rng)).collect();
                let closed = d_evaluate(&pts).unwrap();
                let est = mc_integrate(
                    |a| {
                        let mut all = vec![TorusPoint::from_angles(a).unwrap()];
                        all.extend(pts.iter().cloned());
                        cocycle_c_f64(&all).unwrap()
                    },
                    n,
                    100_000,
                    rng.random(),
                )
                .unwrap();
                assert!(est.within_sigmas(closed, 3.0), "n={n}: {est:?} vs {closed}");
            }
        }
    }

    #[test]
    fn d_evaluate_n1_is_marginal() {
        let b = CirclePoint::new(0.4);
        let c = CirclePoint::new(2.0);
        let pts = [TorusPoint::new(vec![b]).unwrap(), TorusPoint::new(vec![c]).unwrap()];
        assert!((d_evaluate(&pts).unwrap() - euler_marginal(b, c)).abs() < 1e-15);
    }

    #[test]
    fn omega_exact_is_alternating() {
        let frame = Frame::standard(2);
        let base = omega_exact(&frame);
        for sp in even_permutations(2) {
            let v = omega_exact(&frame.permuted(&sp.perm).unwrap());
            assert!((v - sp.sign as f64 * base).abs() <= 1e-14);
        }
    }

    #[test]
    fn omega_exact_matches_brute_force_on_basis_products() {
        // multilinear expansion of random polynomials, term by term
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let index_set = FourierIndex::enumerate(2, 1);
        let fs: Vec<TrigPolynomial> = (0..4)
            .map(|_| {
                let mut p = TrigPolynomial::zero(2);
                for k in &index_set {
                    for ph in [Phase::Cos, Phase::Sin] {
                        p.add_term(k.entries(), ph, rng.random_range(-1.0..1.0)).unwrap();
                    }
                }
                p
            })
            .collect();
        let mut brute = 0.0;
        let terms: Vec<Vec<(FourierIndex, Phase, f64)>> = fs
            .iter()
            .map(|f| f.terms().map(|(k, p, c)| (k.clone(), p, c)).collect())
            .collect();
        for t0 in &terms[0] {
            for t1 in &terms[1] {
                for t2 in &terms[2] {
                    for t3 in &terms[3] {
                        let m = CoeffMatrix::new(
                            vec![t0.0.clone(), t1.0.clone(), t2.0.clone(), t3.0.clone()],
                            vec![t0.1, t1.1, t2.1, t3.1],
                        )
                        .unwrap();
                        // fourier_coefficient uses √2-normalised γ
                        brute += fourier_coefficient(&m) / 4.0 * t0.2 * t1.2 * t2.2 * t3.2;
                    }
                }
            }
        }
        let fast = omega_exact_functions(&fs).unwrap();
        assert!((fast - brute).abs() <= 1e-14, "{fast} vs {brute}");
    }

    #[test]
    fn omega_mc_n1_standard() {
        let est = omega_mc(&Frame::standard(1), 200_000, 1).unwrap();
        assert!(est.within_sigmas(INV_PI, 3.0), "{est:?}");
    }

    #[test]
    fn omega_mc_duplicated_function_vanishes() {
        let f = TrigPolynomial::monomial(1, 0, 1, Phase::Cos, SQRT_2);
        let est = omega_mc_functions(&[f.clone(), f], 200_000, 2).unwrap();
        assert!(est.within_sigmas(0.0, 3.0), "{est:?}");
    }

    #[test]
    fn omega_mc_budget() {
        assert!(matches!(
            omega_mc(&Frame::standard(1), MC_SAMPLE_BUDGET + 1, 0),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn scan_n1() {
        let r = scan_fourier(1, 2).unwrap();
        assert!(r.passed());
        assert_eq!(r.matrices, 4 * 4);
        assert_eq!(r.nonzero_values.len(), 2);
        assert!((r.nonzero_values[0] - 1.0 / (2.0 * PI)).abs() < 1e-12);
        assert!((r.nonzero_values[1] - INV_PI).abs() < 1e-12);
        let r = scan_fourier_with(1, 1, Some(&[Phase::Cos, Phase::Cos])).unwrap();
        assert_eq!(r.nonzero, 0);
        assert!(scan_fourier(3, 1).is_err());
        assert!(scan_fourier(1, 4).is_err());
    }

    #[test]
    fn scan_n2_kmax1() {
        let r = scan_fourier(2, 1).unwrap();
        assert!(r.passed(), "{} inconsistent", r.inconsistent);
        assert_eq!(r.nonzero_values.len(), 1);
        assert!((r.nonzero_values[0] - 1.0 / (6.0 * PI * PI)).abs() < 1e-12);
        // 4!/(2!2!)·2 row arrangements × 2 column assignments × 2·2 phase orders
        assert_eq!(r.patterns, r.nonzero);
    }
}
