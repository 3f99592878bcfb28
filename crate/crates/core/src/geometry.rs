//! Transverse coordinates and the lens configuration.

use std::f64::consts::TAU;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;

use crate::error::{ensure_finite, ensure_positive, Result};

/// Scalar field amplitude. Mode and polarization labels are not tracked.
pub type ComplexAmplitude = Complex64;

/// A point in a plane transverse to the optical axis, in meters.
///
/// Components are always finite; the only way to build one from user data is
/// [`TransverseVector::new`], which rejects NaN and infinities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransverseVector {
    x: f64,
    y: f64,
}

impl TransverseVector {
    pub const ORIGIN: Self = Self { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Result<Self> {
        Ok(Self {
            x: ensure_finite("x", x)?,
            y: ensure_finite("y", y)?,
        })
    }

    /// Point on the x axis.
    pub fn along_x(x: f64) -> Result<Self> {
        Self::new(x, 0.0)
    }

    pub(crate) const fn raw(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::raw(self.x * k, self.y * k)
    }
}

impl Add for TransverseVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::raw(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for TransverseVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::raw(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for TransverseVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::raw(-self.x, -self.y)
    }
}

/// Wavelength and focal length of the single-lens Fourier setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalConfig {
    wavelength: f64,
    focal_length: f64,
}

impl OpticalConfig {
    pub fn new(wavelength: f64, focal_length: f64) -> Result<Self> {
        Ok(Self {
            wavelength: ensure_positive("wavelength", wavelength)?,
            focal_length: ensure_positive("focal_length", focal_length)?,
        })
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn focal_length(&self) -> f64 {
        self.focal_length
    }

    /// λ·f, the area scale of the focal-plane Fourier transform.
    pub fn lambda_f(&self) -> f64 {
        self.wavelength * self.focal_length
    }

    /// Spatial-frequency scale 2π/(λf): a detector coordinate r maps to the
    /// angular frequency `q_scale * r`.
    pub fn q_scale(&self) -> f64 {
        TAU / self.lambda_f()
    }

    /// Same wavelength with a different focal length.
    pub fn with_focal_length(&self, focal_length: f64) -> Result<Self> {
        Self::new(self.wavelength, focal_length)
    }
}
