//! Closed-form classical and two-photon patterns, and the metrology used to
//! compare them (first dark ring, FWHM, fringe period).

use std::f64::consts::PI;

use crate::error::{ensure_positive, Error, Result};
use crate::geometry::OpticalConfig;
use crate::profile::ScanProfile;
use crate::special::{airy, sinc, J1_FIRST_ZERO};

/// Threshold below which a normalized sample counts as dark.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-3;

/// Which pattern a measurement is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiryPattern {
    /// One-photon Airy disk, argument 2πar/(λf).
    ClassicalAiry,
    /// Coincidence pattern of the entangled pair, argument 2π·2a·r/(λf).
    QuantumAiry,
}

impl AiryPattern {
    /// Aperture radius that gives the same pattern in a one-photon setup.
    pub fn effective_radius(&self, aperture_radius: f64) -> f64 {
        match self {
            Self::ClassicalAiry => aperture_radius,
            Self::QuantumAiry => 2.0 * aperture_radius,
        }
    }

    /// Multiplies a detector radius to give the `airy_kernel` argument.
    pub fn argument_scale(&self, aperture_radius: f64, cfg: &OpticalConfig) -> f64 {
        cfg.q_scale() * self.effective_radius(aperture_radius)
    }

    /// Radius of the first dark ring.
    pub fn first_zero(&self, aperture_radius: f64, cfg: &OpticalConfig) -> f64 {
        J1_FIRST_ZERO / self.argument_scale(aperture_radius, cfg)
    }
}

/// Size measures of a central spot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternMetrics {
    pub first_zero_radius: f64,
    pub fwhm: f64,
    pub peak_position: f64,
}

impl PatternMetrics {
    pub fn measure(profile: &ScanProfile, zero_threshold: f64) -> Result<Self> {
        Ok(Self {
            first_zero_radius: first_zero(profile, zero_threshold)?,
            fwhm: fwhm(profile)?,
            peak_position: profile.peak_position(),
        })
    }
}

fn airy_profile(effective_radius: f64, cfg: &OpticalConfig, radii: &[f64]) -> Result<ScanProfile> {
    ensure_positive("aperture_radius", effective_radius)?;
    let scale = cfg.q_scale();
    let values = radii
        .iter()
        .map(|&r| airy(scale * effective_radius * r.abs()))
        .collect();
    ScanProfile::relative_to_origin(radii.to_vec(), values)
}

/// Far-field pattern of a plane wave through a circular aperture of radius `a`.
pub fn classical_airy_profile(a: f64, cfg: &OpticalConfig, radii: &[f64]) -> Result<ScanProfile> {
    ensure_positive("aperture_radius", a)?;
    airy_profile(AiryPattern::ClassicalAiry.effective_radius(a), cfg, radii)
}

/// Normalized coincidence pattern R(r)/R(0) of a delta-correlated pair
/// through a circular aperture of radius `a`.
pub fn quantum_airy_profile(a: f64, cfg: &OpticalConfig, radii: &[f64]) -> Result<ScanProfile> {
    ensure_positive("aperture_radius", a)?;
    airy_profile(AiryPattern::QuantumAiry.effective_radius(a), cfg, radii)
}

/// Double-slit fringes (slit width `w`, center separation `d`) in the
/// infinite-slit-height limit, classical and two-photon.
pub fn doubleslit_fringe_profiles(
    w: f64,
    d: f64,
    cfg: &OpticalConfig,
    positions: &[f64],
) -> Result<(ScanProfile, ScanProfile)> {
    let w = ensure_positive("slit_width", w)?;
    let d = ensure_positive("separation", d)?;
    if w >= d {
        return Err(Error::InvalidParameter {
            name: "slit_width",
            reason: format!("slit width {w} must be below the separation {d}"),
        });
    }
    let pattern = |photons: f64| -> Result<ScanProfile> {
        let values = positions
            .iter()
            .map(|&x| {
                let u = PI * photons * x / cfg.lambda_f();
                let envelope = sinc(u * w);
                let fringe = (u * d).cos();
                (envelope * fringe).powi(2)
            })
            .collect();
        ScanProfile::relative_to_origin(positions.to_vec(), values)
    };
    Ok((pattern(1.0)?, pattern(2.0)?))
}

/// Vertex abscissa of the parabola through three samples, clamped to their span.
fn parabolic_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    // shift to the middle sample for conditioning
    let (a, b) = (x[0] - x[1], x[2] - x[1]);
    let (fa, fb) = (y[0] - y[1], y[2] - y[1]);
    let denom = a * b * (a - b);
    if denom == 0.0 {
        return x[1];
    }
    let curv = (b * fa - a * fb) / denom;
    let slope = (a * a * fb - b * b * fa) / denom;
    if curv == 0.0 {
        return x[1];
    }
    (x[1] - slope / (2.0 * curv)).clamp(x[0], x[2])
}

/// Distance from the peak to the first dark ring on the +x side.
///
/// The first sample after the peak whose normalized value drops below
/// `threshold` opens a bracket; the local minimum reached by descending from
/// it is refined with a parabola through its two neighbours.
pub fn first_zero(profile: &ScanProfile, threshold: f64) -> Result<f64> {
    let v = profile.unit_peak_values();
    let x = profile.positions();
    let peak = profile.peak_index();
    let start = (peak + 1..v.len())
        .find(|&i| v[i] < threshold)
        .ok_or(Error::NotFound("first zero"))?;
    let mut m = start;
    while m + 1 < v.len() && v[m + 1] < v[m] {
        m += 1;
    }
    if m + 1 >= v.len() {
        return Err(Error::NotFound("first zero"));
    }
    let zero = parabolic_vertex([x[m - 1], x[m], x[m + 1]], [v[m - 1], v[m], v[m + 1]]);
    Ok(zero - x[peak])
}

fn half_max_crossing(x: &[f64], v: &[f64], from: usize, to: usize) -> f64 {
    let t = (v[from] - 0.5) / (v[from] - v[to]);
    x[from] + t * (x[to] - x[from])
}

/// Full width at half maximum, by linear interpolation of the half-maximum
/// crossings on either side of the peak.
///
/// A radial profile (peak at its first sample, located at r = 0) is treated
/// as even, so its width is twice the outer crossing radius.
pub fn fwhm(profile: &ScanProfile) -> Result<f64> {
    let v = profile.unit_peak_values();
    let x = profile.positions();
    let peak = profile.peak_index();
    let right = (peak + 1..v.len())
        .find(|&i| v[i] < 0.5)
        .map(|i| half_max_crossing(x, &v, i - 1, i))
        .ok_or(Error::NotFound("half-maximum crossing"))?;
    if peak == 0 && x[0] == 0.0 {
        return Ok(2.0 * right);
    }
    let left = (0..peak)
        .rev()
        .find(|&i| v[i] < 0.5)
        .map(|i| half_max_crossing(x, &v, i + 1, i))
        .ok_or(Error::NotFound("half-maximum crossing"))?;
    Ok(right - left)
}

/// Half the distance between the local maxima flanking the global peak
/// (or the one-sided spacing when only one neighbour is in range).
pub fn fringe_period(profile: &ScanProfile) -> Result<f64> {
    let v = profile.unit_peak_values();
    let x = profile.positions();
    let peak = profile.peak_index();
    let is_max = |i: usize| v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] > 1e-6;
    let refine =
        |i: usize| parabolic_vertex([x[i - 1], x[i], x[i + 1]], [v[i - 1], v[i], v[i + 1]]);
    let center = if peak > 0 && peak + 1 < v.len() {
        refine(peak)
    } else {
        x[peak]
    };
    let right = (peak + 1..v.len().saturating_sub(1))
        .find(|&i| is_max(i))
        .map(refine);
    let left = (1..peak).rev().find(|&i| is_max(i)).map(refine);
    match (left, right) {
        (Some(l), Some(r)) => Ok(0.5 * (r - l)),
        (None, Some(r)) => Ok(r - center),
        (Some(l), None) => Ok(center - l),
        (None, None) => Err(Error::NotFound("neighbouring fringe maximum")),
    }
}

/// Ratio of classical to two-photon first-zero radii.
pub fn resolution_ratio(classical: &PatternMetrics, quantum: &PatternMetrics) -> Result<f64> {
    let q = quantum.first_zero_radius;
    let c = classical.first_zero_radius;
    if !(q.is_finite() && q > 0.0) || !c.is_finite() {
        return Err(Error::InvalidMetrics(format!(
            "first-zero radii classical={c}, quantum={q}"
        )));
    }
    Ok(c / q)
}
