//! Two-photon Fraunhofer diffraction through a thin lens.
//!
//! An entangled photon pair emitted from an aperture at the front focal plane
//! produces, in coincidence at the back focal plane, the Fourier transform of
//! the aperture evaluated at the *sum* of the two detector coordinates. For a
//! circular aperture the coincidence pattern is an Airy disk with half the
//! radius of the one-photon pattern.
//!
//! * [`special`], [`geometry`], [`kernel`], [`mask`]: numeric building blocks.
//! * [`biphoton`]: two-photon amplitudes by source-plane quadrature.
//! * [`analytic`]: closed-form patterns and spot-size metrology.
//! * [`experiment`]: Monte Carlo coincidence scans and model fitting.

pub mod analytic;
pub mod biphoton;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod kernel;
pub mod mask;
pub mod profile;
pub mod special;

pub use analytic::{
    classical_airy_profile, doubleslit_fringe_profiles, first_zero, fringe_period, fwhm,
    quantum_airy_profile, resolution_ratio, AiryPattern, PatternMetrics, DEFAULT_ZERO_THRESHOLD,
};
pub use biphoton::{
    biphoton_amplitude_general, biphoton_amplitude_ideal, coincidence_map, coincidence_rate,
    correlated_profile, degenerate_profile, mask_fourier_numeric, BiphotonSource, CoincidenceMap,
    FocalPlaneIntegrator, QuadratureSpec, Slice,
};
pub use error::{Error, Result};
pub use experiment::{
    expected_counts, fit_profile, fit_profile_with, fit_samples, scan_positions_from_mirror,
    simulate_scan, CountRecord, DetectorModel, FitOptions, FitResult,
};
pub use geometry::{ComplexAmplitude, OpticalConfig, TransverseVector};
pub use kernel::lens_kernel;
pub use mask::{ApertureMask, PixelGrid};
pub use profile::{Normalization, ScanProfile};
pub use special::{airy_kernel, bessel_j1, AIRY_HALF_MAX, J1_FIRST_ZERO};
