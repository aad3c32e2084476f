//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use calibra::bounds::{curvature_entropy_bound, degree_bound, minvol_bound, BoundQuery};
use calibra::circle::{euler_trig_triple, Phase, TrigMonomial};
use calibra::cocycle::{coboundary_c, cocycle_c, enumerate_suitable, invariance_residual, OrderedTuple};
use calibra::comass::{certify_local_max, search};
use calibra::embedding::{equivariance_residual, tangent_span_check, volume_density_ratio};
use calibra::hyperbolic::{PolyDiskPoint, ProductAutomorphism};
use calibra::omega::{omega_exact, omega_mc, scan_fourier, Frame, ScanEntry};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn factorial(m: u64) -> u64 {
    (1..=m).product()
}

/// All permutations of `0..m` by Heap's algorithm.
fn heap_permutations(m: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..m).collect();
    let mut c = vec![0; m];
    let mut out = vec![a.clone()];
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn exact_cocycle() -> Outcome {
    let mut summary = Vec::new();
    for n in 1..=3usize {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + n as u64);
        let len = 2 * n + 1;
        for _ in 0..1000 {
            let t = OrderedTuple::random(n, len, &mut rng);
            let i = rng.random_range(0..len);
            let j = (i + rng.random_range(1..len)) % len;
            let c = cocycle_c(&t).map_err(|e| e.to_string())?;
            let s = cocycle_c(&t.swapped(i, j)).map_err(|e| e.to_string())?;
            ensure(s == -c.clone(), || {
                format!("n={n}: swapping {i},{j} gave {s}, expected {}", -c)
            })?;

            let wide = OrderedTuple::random(n, len + 1, &mut rng);
            let d = coboundary_c(&wide).map_err(|e| e.to_string())?;
            ensure(d.is_zero(), || format!("n={n}: coboundary {d}"))?;

            let g = ProductAutomorphism::random(n, 0.9, &mut rng);
            let r = invariance_residual(&g, &t).map_err(|e| e.to_string())?;
            ensure(r.is_zero(), || format!("n={n}: invariance residual {r}"))?;
        }
        // brute-force count of permutations whose Euler slots absorb each pair
        let brute = heap_permutations(len)
            .into_iter()
            .filter(|p| {
                (1..=n).all(|i| {
                    let slots = &p[2 * i - 2..=2 * i];
                    slots.contains(&(2 * i - 1)) && slots.contains(&(2 * i))
                })
            })
            .count();
        let expected = [6, 20, 56][n - 1];
        let lib = enumerate_suitable(n).map_err(|e| e.to_string())?.len();
        ensure(brute == expected && lib == expected, || {
            format!("n={n}: suitable counts brute={brute} library={lib}, expected {expected}")
        })?;
        summary.push(format!("n={n}: 3000 exact checks, {expected} suitable"));
    }
    Ok(summary.join("; "))
}

fn comass_constants() -> Outcome {
    let expected = [1.0 / PI, 1.0 / (6.0 * PI * PI), 1.0 / (90.0 * PI.powi(3))];
    for (i, &e) in expected.iter().enumerate() {
        let v = omega_exact(&Frame::standard(i + 1));
        ensure((v - e).abs() <= 1e-12, || format!("n={}: exact {v} vs {e}", i + 1))?;
    }
    let mut parts = Vec::new();
    for (n, samples) in [(1usize, 1_000_000u64), (2, 10_000_000)] {
        let est = omega_mc(&Frame::standard(n), samples, 2024 + n as u64).map_err(|e| e.to_string())?;
        let target = expected[n - 1];
        ensure(est.within_sigmas(target, 3.0), || {
            format!("n={n}: MC {} ± {} vs {target}", est.value, est.std_error)
        })?;
        parts.push(format!("n={n} MC {:.3}σ", est.sigmas_from(target)));
    }
    Ok(format!("exact values within 1e-12; {}", parts.join(", ")))
}

/// `±2ⁿ/((2n)!πⁿΠk)` read off a paired-diagonal matrix, or `None`.
fn expected_coefficient(e: &ScanEntry) -> Option<f64> {
    let n = e.matrix[0].len();
    let mut cos_row = vec![None; n];
    let mut sin_row = vec![None; n];
    let mut freq = vec![0i32; n];
    for (j, row) in e.matrix.iter().enumerate() {
        let nz: Vec<usize> = (0..n).filter(|&l| row[l] != 0).collect();
        if nz.len() != 1 {
            return None;
        }
        let l = nz[0];
        let slot = if e.phases[j] == Phase::Cos {
            &mut cos_row[l]
        } else {
            &mut sin_row[l]
        };
        if slot.is_some() || (freq[l] != 0 && freq[l] != row[l]) {
            return None;
        }
        *slot = Some(j);
        freq[l] = row[l];
    }
    let mut order = Vec::new();
    for l in 0..n {
        order.push(cos_row[l]?);
        order.push(sin_row[l]?);
    }
    let mut inversions = 0;
    for a in 0..order.len() {
        for b in a + 1..order.len() {
            if order[a] > order[b] {
                inversions += 1;
            }
        }
    }
    let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
    let prod: f64 = freq.iter().map(|&k| k as f64).product();
    Some(sign * 2f64.powi(n as i32) / (factorial(2 * n as u64) as f64 * PI.powi(n as i32) * prod))
}

fn fourier_characterization() -> Outcome {
    let mut parts = Vec::new();
    for (n, kmax) in [(1usize, 3u32), (2, 1), (2, 2)] {
        let r = scan_fourier(n, kmax).map_err(|e| e.to_string())?;
        let mut nonzero = 0;
        for e in &r.entries {
            match expected_coefficient(e) {
                Some(v) => {
                    nonzero += 1;
                    ensure((e.value - v).abs() <= 1e-10, || {
                        format!("n={n}: {:?} {:?} gave {} expected {v}", e.matrix, e.phases, e.value)
                    })?;
                    ensure(e.pattern, || format!("n={n}: {:?} not flagged as a pattern", e.matrix))?;
                }
                None => {
                    ensure(e.value.abs() <= 1e-12, || {
                        format!("n={n}: off-pattern {:?} {:?} gave {}", e.matrix, e.phases, e.value)
                    })?;
                    ensure(!e.pattern, || format!("n={n}: {:?} wrongly flagged", e.matrix))?;
                }
            }
        }
        parts.push(format!(
            "n={n} kmax={kmax}: {} matrices, {nonzero} nonzero",
            r.entries.len()
        ));
    }
    Ok(parts.join("; "))
}

fn calibration_maximality() -> Outcome {
    let mut parts = Vec::new();
    for (n, bound) in [(1usize, 1.0 / PI), (2, 1.0 / (6.0 * PI * PI))] {
        let r = search(n, 3, 50, 77).map_err(|e| e.to_string())?;
        ensure((r.best_value - bound).abs() <= 1e-6, || {
            format!("n={n}: best {} vs {bound}", r.best_value)
        })?;
        ensure(r.max_trace_value <= bound + 1e-9, || {
            format!("n={n}: trace reached {} above {bound}", r.max_trace_value)
        })?;
        let c = certify_local_max(n, 1000, 1e-3, 78).map_err(|e| e.to_string())?;
        ensure(c.passed && c.max_value <= bound + 1e-12, || {
            format!("n={n}: certificate {c:?}")
        })?;
        parts.push(format!("n={n} gap {:.1e} over {} sweeps", r.gap, r.iterations));
    }
    Ok(parts.join("; "))
}

fn embedding_volume() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_equiv: f64 = 0.0;
    for n in 1..=2usize {
        let target = 0.125f64.powi(n as i32);
        for _ in 0..50 {
            let x = PolyDiskPoint::random(n, 0.7, &mut rng);
            let v = volume_density_ratio(&x).map_err(|e| e.to_string())?;
            ensure((v - target).abs() <= 1e-5, || format!("n={n}: ratio {v} at {x:?}"))?;
            worst_ratio = worst_ratio.max((v - target).abs());
        }
        let span = tangent_span_check(n, 4).map_err(|e| e.to_string())?;
        ensure(span.span_residual <= 1e-5, || {
            format!("n={n}: span residual {}", span.span_residual)
        })?;
        let grid = if n == 1 { 256 } else { 32 };
        for _ in 0..100 {
            let g = ProductAutomorphism::random(n, 0.8, &mut rng);
            let x = PolyDiskPoint::random(n, 0.8, &mut rng);
            let r = equivariance_residual(&g, &x, grid).map_err(|e| e.to_string())?;
            ensure(r <= 1e-10, || format!("n={n}: equivariance residual {r}"))?;
            worst_equiv = worst_equiv.max(r);
        }
    }
    Ok(format!(
        "max ratio error {worst_ratio:.1e}, max equivariance residual {worst_equiv:.1e}"
    ))
}

/// Cyclic orientation from the signed area of the inscribed triangle.
fn orientation(a: f64, b: f64, c: f64) -> f64 {
    let area = (b - a).sin() + (c - b).sin() + (a - c).sin();
    if area > 0.0 {
        1.0
    } else if area < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn one_factor_identity() -> Outcome {
    for k in 1..=8u32 {
        let v = euler_trig_triple(&TrigMonomial::cos(k), &TrigMonomial::sin(k));
        let e = 1.0 / (2.0 * k as f64 * PI);
        ensure((v - e).abs() <= 1e-12, || format!("k={k}: {v} vs {e}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6006);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut pick = || {
            let phase = if rng.random::<bool>() { Phase::Cos } else { Phase::Sin };
            (rng.random_range(1..=3u32), phase)
        };
        let (m1, m2) = (pick(), pick());
        let closed = euler_trig_triple(
            &TrigMonomial::new(m1.0, m1.1, 1.0).unwrap(),
            &TrigMonomial::new(m2.0, m2.1, 1.0).unwrap(),
        );
        let samples = 1_000_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..samples {
            let (x, y, z) = (
                rng.random::<f64>() * TAU,
                rng.random::<f64>() * TAU,
                rng.random::<f64>() * TAU,
            );
            let f = orientation(x, y, z) * m1.1.eval(m1.0 as f64 * y) * m2.1.eval(m2.0 as f64 * z);
            sum += f;
            sq += f * f;
        }
        let mean = sum / samples as f64;
        let se = ((sq / samples as f64 - mean * mean) / (samples as f64 - 1.0)).sqrt();
        ensure((mean - closed).abs() <= 3.0 * se, || {
            format!("{m1:?} {m2:?}: closed {closed} vs MC {mean} ± {se}")
        })?;
        worst = worst.max((mean - closed).abs() / se);
    }
    Ok(format!(
        "matched pairs within 1e-12; 20 random pairs, worst {worst:.2}σ"
    ))
}

fn corollary_calculators() -> Outcome {
    let v = minvol_bound(2, 1.0).map_err(|e| e.to_string())?;
    ensure(v == 4.0 / 81.0, || format!("minvol(2, 1) = {v}"))?;
    for n in 1..=10usize {
        let h = curvature_entropy_bound(n).map_err(|e| e.to_string())?;
        ensure(h == (2 * n - 1) as f64, || format!("entropy bound n={n}: {h}"))?;
        let q = BoundQuery {
            h_g: Some((n as f64).sqrt()),
            vol_y: Some(2.5),
            vol_m: Some(2.5),
            ..BoundQuery::new(n)
        };
        let d = degree_bound(&q).map_err(|e| e.to_string())?;
        ensure(d == 1, || format!("degree bound n={n}: {d}"))?;
    }
    Ok("minvol(2,1) = 4/81, entropy bound 2n-1, equality degree 1 for n ≤ 10".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("exact cocycle identities", exact_cocycle),
        ("comass constants", comass_constants),
        ("Fourier characterization", fourier_characterization),
        ("calibration maximality", calibration_maximality),
        ("embedding volume", embedding_volume),
        ("one-factor identity", one_factor_identity),
        ("corollary calculators", corollary_calculators),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}) [{secs:.1}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}) [{secs:.1}s]: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
