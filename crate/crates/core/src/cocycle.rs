//! The Euler class of the circle and the alternated cup-product cocycle
//! `C` on `(𝕋ⁿ)^{2n+1}`.
//!
//! `C(θ₀,…,θ₂ₙ) = 1/(2n+1)! · Σ_σ sign(σ) Π_i e(θⁱ_{σ(2i−2)}, θⁱ_{σ(2i−1)}, θⁱ_{σ(2i)})`
//!
//! Values are returned as [`ExactRational`]; the permutation sum itself is an
//! integer, so alternation, closedness and invariance are checked exactly.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::hyperbolic::{check_dim, CirclePoint, ProductAutomorphism, TorusPoint};
use crate::{Error, Result};

/// Largest `n` for which the full permutation sum is tabulated (`9! = 362880`).
pub const MAX_N: usize = 4;

/// Exact rational number with a positive, reduced denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        ExactRational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn zero() -> Self {
        ExactRational(BigRational::zero())
    }

    pub fn from_integer(v: i64) -> Self {
        ExactRational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn abs(&self) -> Self {
        ExactRational(self.0.abs())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// True when the reduced denominator divides `d`.
    pub fn denominator_divides(&self, d: u64) -> bool {
        (BigInt::from(d) % self.0.denom()).is_zero()
    }

    pub fn one() -> Self {
        ExactRational(BigRational::one())
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for ExactRational {
    type Output = ExactRational;
    fn add(self, rhs: Self) -> Self {
        ExactRational(self.0 + rhs.0)
    }
}

impl Sub for ExactRational {
    type Output = ExactRational;
    fn sub(self, rhs: Self) -> Self {
        ExactRational(self.0 - rhs.0)
    }
}

impl Neg for ExactRational {
    type Output = ExactRational;
    fn neg(self) -> Self {
        ExactRational(-self.0)
    }
}

/// Orientation of a triple of circle points: `+1` counter-clockwise, `−1`
/// clockwise, `0` when two of them coincide.
#[inline]
pub fn euler_class(a: CirclePoint, b: CirclePoint, c: CirclePoint) -> i8 {
    let (a, b, c) = (a.angle(), b.angle(), c.angle());
    if a == b || b == c || a == c {
        return 0;
    }
    // a positively ordered triple has exactly one descent around the cycle
    let descents = (a > b) as u8 + (b > c) as u8 + (c > a) as u8;
    if descents == 1 {
        1
    } else {
        -1
    }
}

/// A permutation of `{0, …, m−1}` together with its sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedPermutation {
    pub perm: Vec<usize>,
    pub sign: i8,
}

/// A permutation whose Euler-class slots contain `{2i−1, 2i}` for every `i`.
pub type SuitablePermutation = SignedPermutation;

pub(crate) fn permutation_sign(p: &[usize]) -> i8 {
    let mut inversions = 0usize;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub(crate) fn all_permutations(m: usize) -> Vec<SignedPermutation> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<SignedPermutation>) {
        if prefix.len() == used.len() {
            out.push(SignedPermutation {
                sign: permutation_sign(prefix),
                perm: prefix.clone(),
            });
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(m), &mut vec![false; m], &mut out);
    out
}

/// All signed permutations of `{0, …, 2n}`, computed once per `n`.
pub fn permutations(n: usize) -> Result<&'static [SignedPermutation]> {
    static TABLES: [OnceLock<Vec<SignedPermutation>>; MAX_N] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    check_n(n)?;
    Ok(TABLES[n - 1].get_or_init(|| all_permutations(2 * n + 1)))
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if n > MAX_N {
        return Err(Error::SizeLimit {
            what: "n",
            limit: format!("n ≤ {MAX_N}"),
        });
    }
    Ok(())
}

pub(crate) fn factorial(m: usize) -> u64 {
    (1..=m as u64).product()
}

/// Ordered tuple of torus points sharing a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedTuple {
    points: Vec<TorusPoint>,
}

impl OrderedTuple {
    pub fn new(points: Vec<TorusPoint>) -> Result<Self> {
        let n = points.first().ok_or(Error::ZeroDimension)?.dim();
        for p in &points {
            check_dim(n, p.dim())?;
        }
        Ok(OrderedTuple { points })
    }

    pub fn random<R: rand::Rng + ?Sized>(n: usize, len: usize, rng: &mut R) -> Self {
        OrderedTuple {
            points: (0..len).map(|_| TorusPoint::random(n, rng)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }

    pub fn without(&self, index: usize) -> OrderedTuple {
        let mut points = self.points.clone();
        points.remove(index);
        OrderedTuple { points }
    }

    pub fn swapped(&self, i: usize, j: usize) -> OrderedTuple {
        let mut points = self.points.clone();
        points.swap(i, j);
        OrderedTuple { points }
    }
}

/// Integer numerator `Σ_σ sign(σ) Π_i e(…)` of `C`; the value is this over `(2n+1)!`.
pub fn cocycle_sum(points: &[TorusPoint]) -> Result<i64> {
    let n = points.first().ok_or(Error::ZeroDimension)?.dim();
    check_n(n)?;
    let m = 2 * n + 1;
    if points.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            actual: points.len(),
        });
    }
    for p in points {
        check_dim(n, p.dim())?;
    }
    Ok(cocycle_sum_raw(n, |j, i| points[j].coord(i).angle()))
}

/// Permutation sum over raw angles; `angle(j, i)` is coordinate `i` of point
/// `j`, already reduced to `[0, 2π)`. Requires `1 ≤ n ≤ MAX_N`.
pub(crate) fn cocycle_sum_raw(n: usize, angle: impl Fn(usize, usize) -> f64) -> i64 {
    const M: usize = 2 * MAX_N + 1;
    let m = 2 * n + 1;
    // orientation of every ordered triple, per coordinate
    let mut table = [0i8; MAX_N * M * M * M];
    for i in 0..n {
        for a in 0..m {
            let ta = CirclePoint::new(angle(a, i));
            for b in 0..m {
                let tb = CirclePoint::new(angle(b, i));
                for c in 0..m {
                    table[((i * m + a) * m + b) * m + c] = euler_class(ta, tb, CirclePoint::new(angle(c, i)));
                }
            }
        }
    }
    let perms = permutations(n).expect("n checked by caller");
    let mut total = 0i64;
    for sp in perms {
        let p = &sp.perm;
        let mut prod = sp.sign as i64;
        for i in 0..n {
            let e = table[((i * m + p[2 * i]) * m + p[2 * i + 1]) * m + p[2 * i + 2]];
            if e == 0 {
                prod = 0;
                break;
            }
            prod *= e as i64;
        }
        total += prod;
    }
    total
}

/// `C(θ₀,…,θ₂ₙ)` as an exact rational.
pub fn cocycle_c(t: &OrderedTuple) -> Result<ExactRational> {
    let n = t.dim();
    let s = cocycle_sum(t.points())?;
    Ok(ExactRational::new(s, factorial(2 * n + 1) as i64))
}

/// `C` as a float, for integrands.
pub fn cocycle_c_f64(points: &[TorusPoint]) -> Result<f64> {
    let n = points.first().ok_or(Error::ZeroDimension)?.dim();
    Ok(cocycle_sum(points)? as f64 / factorial(2 * n + 1) as f64)
}

/// `Σᵢ (−1)ⁱ C(θ₀,…,θ̂ᵢ,…,θ₂ₙ₊₁)` on a tuple of `2n+2` points.
pub fn coboundary_c(t: &OrderedTuple) -> Result<ExactRational> {
    let n = t.dim();
    let m = 2 * n + 2;
    if t.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            actual: t.len(),
        });
    }
    let mut total = 0i64;
    for i in 0..m {
        let face: Vec<TorusPoint> = t
            .points()
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, p)| p.clone())
            .collect();
        let s = cocycle_sum(&face)?;
        total += if i % 2 == 0 { s } else { -s };
    }
    Ok(ExactRational::new(total, factorial(2 * n + 1) as i64))
}

/// `C(gθ₀,…,gθ₂ₙ) − C(θ₀,…,θ₂ₙ)`.
pub fn invariance_residual(g: &ProductAutomorphism, t: &OrderedTuple) -> Result<ExactRational> {
    let moved = t
        .points()
        .iter()
        .map(|p| g.act_on_torus(p))
        .collect::<Result<Vec<_>>>()?;
    let moved = OrderedTuple::new(moved)?;
    Ok(cocycle_c(&moved)? - cocycle_c(t)?)
}

/// True when `{2i−1, 2i} ⊆ {σ(2i−2), σ(2i−1), σ(2i)}` for all `i = 1..n`.
pub fn is_suitable(perm: &[usize]) -> bool {
    let n = (perm.len() - 1) / 2;
    (1..=n).all(|i| {
        let slots = &perm[2 * i - 2..=2 * i];
        slots.contains(&(2 * i - 1)) && slots.contains(&(2 * i))
    })
}

/// Brute-force filter of `𝔖_{2n+1}` by [`is_suitable`]; there are `2ⁿ(2n+1)`.
pub fn enumerate_suitable(n: usize) -> Result<Vec<SuitablePermutation>> {
    Ok(permutations(n)?
        .iter()
        .filter(|sp| is_suitable(&sp.perm))
        .cloned()
        .collect())
}
