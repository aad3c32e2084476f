//! Verification suites: each check records the measured value next to the
//! expected constant and the tolerance it was held to.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{euler_trig_triple, mc_integrate, Phase, TrigMonomial};
use crate::cocycle::{
    coboundary_c, cocycle_c, cocycle_c_f64, enumerate_suitable, euler_class, invariance_residual, OrderedTuple,
};
use crate::comass::{certify_local_max, orthonormalize, search, FrameParameterization, TOL_COMASS};
use crate::embedding::{
    equivariance_residual, tangent_frame_at_origin, tangent_span_check, volume_density_ratio, EmbeddedPoint,
};
use crate::hyperbolic::{CirclePoint, PolyDiskPoint, ProductAutomorphism, TorusPoint};
use crate::omega::{
    comass_bound, d_evaluate, fourier_coefficient, omega_exact, omega_mc, pattern_match, scan_fourier, CoeffMatrix,
    Frame, TOL_FOURIER,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    Quick,
    Full,
}

impl Budget {
    pub fn max_n(self) -> usize {
        match self {
            Budget::Quick => 2,
            Budget::Full => 3,
        }
    }

    /// Samples for Monte-Carlo checks of `Ω` on `(𝕋ⁿ)^{2n+1}`.
    pub fn omega_samples(self, n: usize) -> u64 {
        match (self, n) {
            (Budget::Quick, _) => 100_000,
            (Budget::Full, 1) => 1_000_000,
            (Budget::Full, 2) => 10_000_000,
            // 5040 permutations per sample
            (Budget::Full, _) => 100_000,
        }
    }

    pub fn triple_samples(self) -> u64 {
        match self {
            Budget::Quick => 100_000,
            Budget::Full => 1_000_000,
        }
    }

    pub fn tuples(self) -> usize {
        match self {
            Budget::Quick => 100,
            Budget::Full => 1000,
        }
    }

    pub fn scan_kmax(self, n: usize) -> u32 {
        match (self, n) {
            (Budget::Quick, 1) => 2,
            (Budget::Full, 1) => 3,
            (Budget::Quick, _) => 1,
            (Budget::Full, _) => 2,
        }
    }

    pub fn search_kmax(self) -> u32 {
        match self {
            Budget::Quick => 1,
            Budget::Full => 3,
        }
    }

    pub fn restarts(self, n: usize) -> usize {
        match (self, n) {
            (Budget::Quick, _) => 8,
            (Budget::Full, 1 | 2) => 50,
            (Budget::Full, _) => 8,
        }
    }

    pub fn trials(self) -> usize {
        match self {
            Budget::Quick => 100,
            Budget::Full => 1000,
        }
    }

    pub fn points(self) -> usize {
        match self {
            Budget::Quick => 10,
            Budget::Full => 50,
        }
    }

    pub fn automorphisms(self) -> usize {
        match self {
            Budget::Quick => 20,
            Budget::Full => 100,
        }
    }
}

impl FromStr for Budget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Budget::Quick),
            "full" => Ok(Budget::Full),
            _ => Err(Error::InvalidArgument(format!(
                "unknown budget `{s}` (expected quick or full)"
            ))),
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Budget::Quick => "quick",
            Budget::Full => "full",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Cocycle,
    Fourier,
    Comass,
    Embedding,
    All,
}

impl Suite {
    pub const MODULES: [Suite; 4] = [Suite::Cocycle, Suite::Fourier, Suite::Comass, Suite::Embedding];
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cocycle" => Ok(Suite::Cocycle),
            "fourier" => Ok(Suite::Fourier),
            "comass" => Ok(Suite::Comass),
            "embedding" => Ok(Suite::Embedding),
            "all" => Ok(Suite::All),
            _ => Err(Error::UnknownSuite(s.to_string())),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Cocycle => "cocycle",
            Suite::Fourier => "fourier",
            Suite::Comass => "comass",
            Suite::Embedding => "embedding",
            Suite::All => "all",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// One check: passes iff `|value − expected| ≤ tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub runtime_ms: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: Suite,
    pub n: usize,
    pub seed: u64,
    pub budget: Budget,
    pub checks: Vec<CheckRecord>,
    pub overall: Status,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.overall == Status::Pass
    }

    /// The report with every `runtime_ms` zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> VerificationReport {
        let mut r = self.clone();
        r.checks.iter_mut().for_each(|c| c.runtime_ms = 0);
        r
    }
}

/// Sub-seed for check `index` of a suite.
fn check_seed(seed: u64, suite: Suite, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((suite as u64) << 32) | index);
    rng.next_u64()
}

struct Recorder {
    suite: Suite,
    seed: u64,
    checks: Vec<CheckRecord>,
}

impl Recorder {
    fn new(suite: Suite, seed: u64) -> Self {
        Recorder {
            suite,
            seed,
            checks: Vec::new(),
        }
    }

    /// Runs `f` with a fresh sub-seed; `f` returns `(value, expected, tolerance)`.
    fn check(&mut self, name: &str, f: impl FnOnce(u64) -> Result<(f64, f64, f64)>) -> Result<()> {
        let seed = check_seed(self.seed, self.suite, self.checks.len() as u64);
        let start = Instant::now();
        let (value, expected, tolerance) = f(seed)?;
        self.checks.push(CheckRecord {
            name: name.to_string(),
            status: Status::from_bool((value - expected).abs() <= tolerance),
            value,
            expected,
            tolerance,
            runtime_ms: start.elapsed().as_millis() as u64,
            seed,
        });
        Ok(())
    }
}

fn cocycle_checks(n: usize, budget: Budget, rec: &mut Recorder) -> Result<()> {
    let tuples = budget.tuples();
    rec.check("alternation_violations", |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bad = 0;
        for _ in 0..tuples {
            let t = OrderedTuple::random(n, 2 * n + 1, &mut rng);
            let i = rng.random_range(0..2 * n + 1);
            let j = (i + rng.random_range(1..2 * n + 1)) % (2 * n + 1);
            if cocycle_c(&t.swapped(i, j))? != -cocycle_c(&t)? {
                bad += 1;
            }
        }
        Ok((bad as f64, 0.0, 0.0))
    })?;
    rec.check("coboundary_nonzero", |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bad = 0;
        for r in 0..tuples {
            let mut pts = OrderedTuple::random(n, 2 * n + 2, &mut rng).points().to_vec();
            if r % 4 == 0 {
                // repeated points make many Euler factors vanish
                let (i, j) = (rng.random_range(0..pts.len()), rng.random_range(0..pts.len()));
                pts[i] = pts[j].clone();
            }
            if !coboundary_c(&OrderedTuple::new(pts)?)?.is_zero() {
                bad += 1;
            }
        }
        Ok((bad as f64, 0.0, 0.0))
    })?;
    rec.check("invariance_nonzero", |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bad = 0;
        for _ in 0..tuples {
            let g = ProductAutomorphism::random(n, 0.9, &mut rng);
            let t = OrderedTuple::random(n, 2 * n + 1, &mut rng);
            if !invariance_residual(&g, &t)?.is_zero() {
                bad += 1;
            }
        }
        Ok((bad as f64, 0.0, 0.0))
    })?;
    rec.check("suitable_permutations", |_| {
        let count = enumerate_suitable(n)?.len();
        Ok((count as f64, ((1usize << n) * (2 * n + 1)) as f64, 0.0))
    })?;
    Ok(())
}

fn fourier_checks(n: usize, budget: Budget, rec: &mut Recorder) -> Result<()> {
    let bound = comass_bound(n);
    let standard = Frame::standard(n);
    rec.check("omega.exact_standard_frame", |_| {
        Ok((omega_exact(&standard), bound, 1e-12))
    })?;
    rec.check("omega.mc_standard_frame", |seed| {
        let est = omega_mc(&standard, budget.omega_samples(n), seed)?;
        Ok((est.value, bound, 3.0 * est.std_error))
    })?;
    if n <= 2 {
        let kmax = budget.scan_kmax(n);
        let scan = scan_fourier(n, kmax)?;
        rec.check(&format!("scan.kmax{kmax}.inconsistent_coefficients"), |_| {
            Ok((scan.inconsistent as f64, 0.0, 0.0))
        })?;
        // distinct certified magnitudes bound/Πk over k ∈ [1, kmax]ⁿ
        let mut expected: Vec<f64> = Vec::new();
        let mut ks = vec![1u32; n];
        loop {
            let v = bound / ks.iter().map(|&k| k as f64).product::<f64>();
            if !expected.iter().any(|&u| (u - v).abs() <= TOL_FOURIER) {
                expected.push(v);
            }
            let Some(pos) = ks.iter().position(|&k| k < kmax) else {
                break;
            };
            ks[pos] += 1;
            ks[..pos].iter_mut().for_each(|k| *k = 1);
        }
        expected.sort_by(f64::total_cmp);
        rec.check("scan.distinct_nonzero_values", |_| {
            Ok((scan.nonzero_values.len() as f64, expected.len() as f64, 0.0))
        })?;
        for (i, e) in expected.iter().enumerate() {
            let got = scan.nonzero_values.get(i).copied().unwrap_or(f64::NAN);
            rec.check(&format!("scan.nonzero_value.{i}"), |_| Ok((got, *e, TOL_FOURIER)))?;
        }
    } else {
        rec.check("pattern.paired_diagonal_certificates", |_| {
            let mut worst: f64 = 0.0;
            for code in 0..8u32 {
                let ks: Vec<u32> = (0..n).map(|i| 1 + (code >> i & 1)).collect();
                let m = CoeffMatrix::paired_diagonal(&ks);
                let cert = pattern_match(&m).ok_or(Error::Degenerate(0.0))?;
                worst = worst.max((fourier_coefficient(&m) - cert.signed_value()).abs());
            }
            Ok((worst, 0.0, TOL_FOURIER))
        })?;
    }
    if n <= 2 {
        rec.check("omega.d_evaluate_vs_mc", |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<TorusPoint> = (0..2 * n).map(|_| TorusPoint::random(n, &mut rng)).collect();
            let closed = d_evaluate(&pts)?;
            let est = mc_integrate(
                |a| {
                    let mut all = vec![TorusPoint::from_angles(a).expect("n angles")];
                    all.extend(pts.iter().cloned());
                    cocycle_c_f64(&all).expect("valid tuple")
                },
                n,
                100_000,
                seed,
            )?;
            Ok((est.value, closed, 3.0 * est.std_error))
        })?;
    }
    rec.check("circle.matched_pairs_max_error", |_| {
        let mut worst: f64 = 0.0;
        for k in 1..=8u32 {
            let v = euler_trig_triple(&TrigMonomial::cos(k), &TrigMonomial::sin(k));
            worst = worst.max((v - 1.0 / (2.0 * k as f64 * std::f64::consts::PI)).abs());
        }
        Ok((worst, 0.0, 1e-12))
    })?;
    rec.check("circle.triple_pairs_outside_3_sigma", |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut outside = 0;
        for _ in 0..20 {
            let pick = |rng: &mut ChaCha8Rng| {
                let phase = if rng.random::<bool>() { Phase::Cos } else { Phase::Sin };
                TrigMonomial::new(rng.random_range(1..=3), phase, 1.0).expect("k ≥ 1")
            };
            let (m1, m2) = (pick(&mut rng), pick(&mut rng));
            let closed = euler_trig_triple(&m1, &m2);
            let est = mc_integrate(
                |a| {
                    let e = euler_class(CirclePoint::new(a[0]), CirclePoint::new(a[1]), CirclePoint::new(a[2]));
                    e as f64 * m1.eval(a[1]) * m2.eval(a[2])
                },
                3,
                budget.triple_samples(),
                rng.random(),
            )?;
            if !est.within_sigmas(closed, 3.0) {
                outside += 1;
            }
        }
        Ok((outside as f64, 0.0, 0.0))
    })?;
    Ok(())
}

fn comass_checks(n: usize, budget: Budget, rec: &mut Recorder) -> Result<()> {
    let bound = comass_bound(n);
    let kmax = budget.search_kmax();
    let restarts = budget.restarts(n);
    let mut report = None;
    rec.check(&format!("search_best_value.kmax{kmax}"), |seed| {
        let r = search(n, kmax, restarts, seed)?;
        let v = r.best_value;
        report = Some(r);
        Ok((v, bound, 1e-6))
    })?;
    let r = report.expect("search ran");
    rec.check("search_trace_excess", |_| {
        Ok(((r.max_trace_value - bound).max(0.0), 0.0, TOL_COMASS))
    })?;
    rec.check("certify_local_max_excess", |seed| {
        let c = certify_local_max(n, budget.trials(), 1e-3, seed)?;
        Ok(((c.max_value - bound).max(0.0), 0.0, 1e-12))
    })?;
    rec.check("random_frames_excess", |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::MIN;
        for _ in 0..budget.trials() {
            let p = FrameParameterization::random(n, 3, &mut rng)?;
            worst = worst.max(omega_exact(&orthonormalize(&p)?).abs());
        }
        Ok(((worst - bound).max(0.0), 0.0, 1e-12))
    })?;
    Ok(())
}

fn embedding_checks(n: usize, budget: Budget, rec: &mut Recorder) -> Result<()> {
    let target = 0.125f64.powi(n as i32);
    let mut ratios = Vec::new();
    rec.check("volume_density_ratio_max_error", |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..budget.points() {
            let r = volume_density_ratio(&PolyDiskPoint::random(n, 0.7, &mut rng))?;
            worst = worst.max((r - target).abs());
            ratios.push(r);
        }
        Ok((worst, 0.0, 1e-5))
    })?;
    rec.check("volume_density_relative_spread", |_| {
        let max = ratios.iter().copied().fold(f64::MIN, f64::max);
        let min = ratios.iter().copied().fold(f64::MAX, f64::min);
        Ok(((max - min) / target, 0.0, 1e-4))
    })?;
    rec.check("unit_norm_max_error", |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..budget.points() {
            let e = EmbeddedPoint::new(PolyDiskPoint::random(n, 0.9, &mut rng));
            worst = worst.max((e.norm_sqr(10_000) - 1.0).abs());
        }
        Ok((worst, 0.0, 1e-8))
    })?;
    rec.check("tangent_span_residual", |_| {
        Ok((tangent_span_check(n, 4)?.span_residual, 0.0, 1e-5))
    })?;
    rec.check("tangent_frame_calibration", |_| {
        Ok((omega_exact(&tangent_frame_at_origin(n)), comass_bound(n), 1e-12))
    })?;
    if n <= 2 {
        rec.check("equivariance_max_residual", |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let grid = if n == 1 { 256 } else { 32 };
            let mut worst: f64 = 0.0;
            for _ in 0..budget.automorphisms() {
                let g = ProductAutomorphism::random(n, 0.8, &mut rng);
                let x = PolyDiskPoint::random(n, 0.8, &mut rng);
                worst = worst.max(equivariance_residual(&g, &x, grid)?);
            }
            Ok((worst, 0.0, 1e-10))
        })?;
    }
    Ok(())
}

fn run_module(suite: Suite, n: usize, seed: u64, budget: Budget) -> Result<Vec<CheckRecord>> {
    let mut rec = Recorder::new(suite, seed);
    match suite {
        Suite::Cocycle => cocycle_checks(n, budget, &mut rec)?,
        Suite::Fourier => fourier_checks(n, budget, &mut rec)?,
        Suite::Comass => comass_checks(n, budget, &mut rec)?,
        Suite::Embedding => embedding_checks(n, budget, &mut rec)?,
        Suite::All => unreachable!("expanded by run_suite"),
    }
    for c in &mut rec.checks {
        c.name = format!("{suite}/{}", c.name);
    }
    Ok(rec.checks)
}

/// Runs a suite. Identical arguments give identical reports up to `runtime_ms`.
pub fn run_suite(suite: Suite, n: usize, seed: u64, budget: Budget) -> Result<VerificationReport> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if n > budget.max_n() {
        return Err(Error::BudgetExceeded(format!(
            "budget `{budget}` supports n ≤ {}, got n = {n}",
            budget.max_n()
        )));
    }
    let modules: Vec<Suite> = match suite {
        Suite::All => Suite::MODULES.to_vec(),
        s => vec![s],
    };
    let parts = modules
        .par_iter()
        .map(|&s| run_module(s, n, seed, budget))
        .collect::<Result<Vec<_>>>()?;
    let checks: Vec<CheckRecord> = parts.into_iter().flatten().collect();
    let overall = Status::from_bool(checks.iter().all(|c| c.status == Status::Pass));
    Ok(VerificationReport {
        suite,
        n,
        seed,
        budget,
        checks,
        overall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        assert_eq!("cocycle".parse::<Suite>().unwrap(), Suite::Cocycle);
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert_eq!("nope".parse::<Suite>(), Err(Error::UnknownSuite("nope".into())));
        assert_eq!("full".parse::<Budget>().unwrap(), Budget::Full);
        assert!("medium".parse::<Budget>().is_err());
    }

    #[test]
    fn budget_limits_n() {
        assert!(matches!(
            run_suite(Suite::Cocycle, 3, 0, Budget::Quick),
            Err(Error::BudgetExceeded(_))
        ));
        assert!(run_suite(Suite::Cocycle, 0, 0, Budget::Quick).is_err());
    }

    #[test]
    fn cocycle_suite_quick_is_reproducible() {
        let a = run_suite(Suite::Cocycle, 2, 5, Budget::Quick).unwrap();
        assert!(a.passed(), "{a:#?}");
        let b = run_suite(Suite::Cocycle, 2, 5, Budget::Quick).unwrap();
        assert_eq!(a.without_timings(), b.without_timings());
    }

    #[test]
    fn fourier_suite_n1_reports_values() {
        let r = run_suite(Suite::Fourier, 1, 1, Budget::Quick).unwrap();
        assert!(r.passed(), "{r:#?}");
        let values: Vec<f64> = r
            .checks
            .iter()
            .filter(|c| c.name.contains("scan.nonzero_value"))
            .map(|c| c.value)
            .collect();
        let pi = std::f64::consts::PI;
        assert_eq!(values.len(), 2);
        assert!((values[0] - 1.0 / (2.0 * pi)).abs() < 1e-12);
        assert!((values[1] - 1.0 / pi).abs() < 1e-12);
    }
}
