//! Poincaré-disk geometry for each hyperbolic factor.
//!
//! Angles are in radians and the boundary circle carries the probability
//! measure `dθ/2π`. The disk metric is `4|dx|²/(1−|x|²)²` (curvature −1).

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result};

/// Disk points closer than this to the unit circle are rejected.
pub const BOUNDARY_MARGIN: f64 = 1e-9;

/// A point `e^{iθ}` of the boundary circle, stored as an angle in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CirclePoint(f64);

impl CirclePoint {
    pub fn new(angle: f64) -> Self {
        let mut r = angle.rem_euclid(TAU);
        // rem_euclid rounds tiny negative inputs up to exactly 2π
        if r >= TAU {
            r = 0.0;
        }
        CirclePoint(r)
    }

    #[inline]
    pub fn angle(self) -> f64 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(1.0, self.0)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        CirclePoint::new(rng.random::<f64>() * TAU)
    }
}

impl From<f64> for CirclePoint {
    fn from(angle: f64) -> Self {
        CirclePoint::new(angle)
    }
}

/// A point of the Furstenberg boundary `𝕋ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint {
    coords: Vec<CirclePoint>,
}

impl TorusPoint {
    pub fn new(coords: Vec<CirclePoint>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(TorusPoint { coords })
    }

    pub fn from_angles(angles: &[f64]) -> Result<Self> {
        Self::new(angles.iter().copied().map(CirclePoint::new).collect())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        assert!(n >= 1);
        TorusPoint {
            coords: (0..n).map(|_| CirclePoint::random(rng)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[CirclePoint] {
        &self.coords
    }

    #[inline]
    pub fn coord(&self, i: usize) -> CirclePoint {
        self.coords[i]
    }
}

/// A point of the open unit disk, bounded away from the circle by
/// [`BOUNDARY_MARGIN`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint(Complex64);

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint(Complex64::new(0.0, 0.0));

    pub fn new(re: f64, im: f64) -> Result<Self> {
        Self::from_complex(Complex64::new(re, im))
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        let radius = z.norm();
        if !radius.is_finite() || radius >= 1.0 - BOUNDARY_MARGIN {
            return Err(Error::BoundaryProximity {
                radius,
                margin: BOUNDARY_MARGIN,
            });
        }
        Ok(DiskPoint(z))
    }

    /// Uniform in angle, radius uniform in `[0, max_radius)`.
    pub fn random<R: Rng + ?Sized>(max_radius: f64, rng: &mut R) -> Self {
        let r = rng.random::<f64>() * max_radius;
        let t = rng.random::<f64>() * TAU;
        DiskPoint::from_complex(Complex64::from_polar(r, t)).expect("radius below max_radius")
    }

    #[inline]
    pub fn z(self) -> Complex64 {
        self.0
    }

    pub fn norm_sqr(self) -> f64 {
        self.0.norm_sqr()
    }

    /// Hyperbolic area density `4/(1−|x|²)²` relative to Lebesgue measure.
    pub fn area_density(self) -> f64 {
        let s = 1.0 - self.norm_sqr();
        4.0 / (s * s)
    }
}

/// A point of `(ℍ²)ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyDiskPoint {
    factors: Vec<DiskPoint>,
}

impl PolyDiskPoint {
    pub fn new(factors: Vec<DiskPoint>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(PolyDiskPoint { factors })
    }

    pub fn origin(n: usize) -> Self {
        assert!(n >= 1);
        PolyDiskPoint {
            factors: vec![DiskPoint::ORIGIN; n],
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, max_radius: f64, rng: &mut R) -> Self {
        PolyDiskPoint {
            factors: (0..n).map(|_| DiskPoint::random(max_radius, rng)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[DiskPoint] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> DiskPoint {
        self.factors[i]
    }
}

/// `p_o(x, θ) = (1−|x|²)/|x−e^{iθ}|²`.
pub fn poisson_kernel(x: DiskPoint, theta: CirclePoint) -> f64 {
    poisson_raw(x.z(), theta.angle())
}

/// Unchecked kernel, for stencils that step slightly off validated points.
#[inline]
pub(crate) fn poisson_raw(x: Complex64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let r2 = x.norm_sqr();
    // |x − e^{iθ}|² with |e^{iθ}| = 1 taken exactly
    (1.0 - r2) / (1.0 - 2.0 * (x.re * c + x.im * s) + r2)
}

/// Busemann function normalised at the origin: `−log p_o(x, θ)`.
pub fn busemann(x: DiskPoint, theta: CirclePoint) -> f64 {
    -poisson_kernel(x, theta).ln()
}

/// Volume entropy of the locally symmetric metric on `Γ\(ℍ²)ⁿ`, i.e. `√n`.
pub fn entropy_locally_symmetric(n: usize) -> f64 {
    (n as f64).sqrt()
}

/// `z ↦ e^{iφ}(z−a)/(1−āz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskAutomorphism {
    a: DiskPoint,
    phi: f64,
}

impl DiskAutomorphism {
    pub const IDENTITY: DiskAutomorphism = DiskAutomorphism {
        a: DiskPoint::ORIGIN,
        phi: 0.0,
    };

    pub fn new(a: DiskPoint, phi: f64) -> Self {
        DiskAutomorphism { a, phi }
    }

    pub fn rotation(phi: f64) -> Self {
        DiskAutomorphism {
            a: DiskPoint::ORIGIN,
            phi,
        }
    }

    pub fn random<R: Rng + ?Sized>(max_radius: f64, rng: &mut R) -> Self {
        let a = DiskPoint::random(max_radius, rng);
        let phi = rng.random::<f64>() * TAU;
        DiskAutomorphism { a, phi }
    }

    /// The point sent to the origin.
    pub fn a(&self) -> DiskPoint {
        self.a
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Evaluates the Möbius map on any point of the closed disk.
    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        let a = self.a.z();
        Complex64::from_polar(1.0, self.phi) * (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z)
    }

    /// Complex derivative at `z`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let a = self.a.z();
        let den = Complex64::new(1.0, 0.0) - a.conj() * z;
        Complex64::from_polar(1.0 - a.norm_sqr(), self.phi) / (den * den)
    }

    pub fn apply(&self, x: DiskPoint) -> DiskPoint {
        // The image of an interior point can land in the rejected collar only
        // when |a| or |x| is itself within rounding of the circle.
        DiskPoint::from_complex(self.apply_complex(x.z())).expect("disk automorphism maps the open disk into itself")
    }

    pub fn boundary_action(&self, theta: CirclePoint) -> CirclePoint {
        if self.a.z() == Complex64::new(0.0, 0.0) {
            return CirclePoint::new(theta.angle() + self.phi);
        }
        CirclePoint::new(self.apply_complex(theta.to_complex()).arg())
    }

    /// `|m′(e^{iθ})|`, equal to `p_o(m⁻¹(0), θ)`.
    pub fn boundary_jacobian(&self, theta: CirclePoint) -> f64 {
        poisson_kernel(self.a, theta)
    }

    pub fn inverse(&self) -> Self {
        let a = -self.a.z() * Complex64::from_polar(1.0, self.phi);
        DiskAutomorphism {
            a: DiskPoint(a),
            phi: -self.phi,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &DiskAutomorphism) -> Self {
        let a = other.inverse().apply_complex(self.a.z());
        let phi = self.phi + other.derivative(a).arg();
        DiskAutomorphism { a: DiskPoint(a), phi }
    }
}

/// Factor-wise automorphism of `(ℍ²)ⁿ` and of `𝕋ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductAutomorphism {
    parts: Vec<DiskAutomorphism>,
}

impl ProductAutomorphism {
    pub fn new(parts: Vec<DiskAutomorphism>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(ProductAutomorphism { parts })
    }

    pub fn identity(n: usize) -> Self {
        ProductAutomorphism {
            parts: vec![DiskAutomorphism::IDENTITY; n],
        }
    }

    pub fn rotations(angles: &[f64]) -> Result<Self> {
        Self::new(angles.iter().map(|&p| DiskAutomorphism::rotation(p)).collect())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, max_radius: f64, rng: &mut R) -> Self {
        ProductAutomorphism {
            parts: (0..n).map(|_| DiskAutomorphism::random(max_radius, rng)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[DiskAutomorphism] {
        &self.parts
    }

    pub fn inverse(&self) -> Self {
        ProductAutomorphism {
            parts: self.parts.iter().map(DiskAutomorphism::inverse).collect(),
        }
    }

    pub fn act_on_disk(&self, x: &PolyDiskPoint) -> Result<PolyDiskPoint> {
        check_dim(self.dim(), x.dim())?;
        PolyDiskPoint::new(self.parts.iter().zip(x.factors()).map(|(m, &xi)| m.apply(xi)).collect())
    }

    pub fn act_on_torus(&self, theta: &TorusPoint) -> Result<TorusPoint> {
        check_dim(self.dim(), theta.dim())?;
        TorusPoint::new(
            self.parts
                .iter()
                .zip(theta.coords())
                .map(|(m, &t)| m.boundary_action(t))
                .collect(),
        )
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
