//! Impulse response of a thin lens between its front and back focal planes.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;

use crate::geometry::{ComplexAmplitude, OpticalConfig, TransverseVector};

/// h_f(r, r₀) = exp(i4πf/λ)/(iλf) · exp(−i2π r·r₀/(λf)).
///
/// The constant phase exp(i4πf/λ) is kept even though every measured
/// quantity is insensitive to it.
pub fn lens_kernel(
    r: TransverseVector,
    r0: TransverseVector,
    cfg: &OpticalConfig,
) -> ComplexAmplitude {
    kernel_prefactor(cfg) * Complex64::cis(-cfg.q_scale() * r.dot(&r0))
}

/// exp(i4πf/λ)/(iλf), the position-independent part of [`lens_kernel`].
pub fn kernel_prefactor(cfg: &OpticalConfig) -> ComplexAmplitude {
    let phase = global_phase(cfg) - FRAC_PI_2;
    Complex64::from_polar(1.0 / cfg.lambda_f(), phase)
}

/// 4πf/λ reduced modulo 2π.
pub(crate) fn global_phase(cfg: &OpticalConfig) -> f64 {
    (2.0 * TAU * cfg.focal_length() / cfg.wavelength()).rem_euclid(TAU)
}

/// One Cartesian factor of the kernel's position-dependent phase:
/// exp(−i2π r·r₀/(λf)) = axis_phase(x, x₀) · axis_phase(y, y₀).
pub(crate) fn axis_phase(r_component: f64, r0_component: f64, q_scale: f64) -> Complex64 {
    Complex64::cis(-q_scale * r_component * r0_component)
}
