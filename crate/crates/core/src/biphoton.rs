//! Two-photon amplitudes and coincidence rates in the back focal plane.
//!
//! Both photons pass through the same lens, so a single kernel h_f serves as
//! h₁ and h₂. Integrals over the source plane use the midpoint rule on a
//! uniform square grid; the mask is sampled at the cell centers.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{ComplexAmplitude, OpticalConfig, TransverseVector};
use crate::kernel::{axis_phase, kernel_prefactor};
use crate::mask::ApertureMask;
use crate::profile::ScanProfile;

/// Default ceiling on the number of 4D grid samples for the correlated
/// source.
pub const DEFAULT_SAMPLE_BUDGET: u128 = 1_000_000_000;

/// Transverse correlation C(r′, r″) of the photon pair at the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiphotonSource {
    /// C(r′, r″) = δ(r′ − r″): both photons leave from the same point.
    IdealDelta,
    /// C(r′, r″) = exp(−|r′−r″|²/(2σ_c²)) · exp(−|r′+r″|²/(8σ_b²)).
    GaussianCorrelated {
        correlation_width: f64,
        beam_width: f64,
    },
}

impl BiphotonSource {
    pub fn gaussian(correlation_width: f64, beam_width: f64) -> Result<Self> {
        let correlation_width = ensure_positive("correlation_width", correlation_width)?;
        let beam_width = ensure_positive("beam_width", beam_width)?;
        if correlation_width > beam_width {
            return Err(Error::InvalidParameter {
                name: "correlation_width",
                reason: format!(
                    "correlation width {correlation_width} exceeds beam width {beam_width}"
                ),
            });
        }
        Ok(Self::GaussianCorrelated {
            correlation_width,
            beam_width,
        })
    }

    /// C(r′, r″) for the Gaussian model; `None` for the delta source.
    pub fn correlation(&self, r1: TransverseVector, r2: TransverseVector) -> Option<f64> {
        match *self {
            Self::IdealDelta => None,
            Self::GaussianCorrelated {
                correlation_width,
                beam_width,
            } => Some(
                gaussian_factor(r1.x(), r2.x(), correlation_width, beam_width)
                    * gaussian_factor(r1.y(), r2.y(), correlation_width, beam_width),
            ),
        }
    }
}

fn gaussian_factor(u: f64, v: f64, sigma_c: f64, sigma_b: f64) -> f64 {
    let d = u - v;
    let s = u + v;
    (-d * d / (2.0 * sigma_c * sigma_c) - s * s / (8.0 * sigma_b * sigma_b)).exp()
}

/// Discretization of the source-plane integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    half_extent: f64,
    samples_per_axis: usize,
    sample_budget: u128,
}

impl QuadratureSpec {
    pub fn new(half_extent: f64, samples_per_axis: usize) -> Result<Self> {
        let half_extent = ensure_positive("half_extent", half_extent)?;
        if samples_per_axis == 0 {
            return Err(Error::InvalidParameter {
                name: "samples_per_axis",
                reason: "must be positive".into(),
            });
        }
        Ok(Self {
            half_extent,
            samples_per_axis,
            sample_budget: DEFAULT_SAMPLE_BUDGET,
        })
    }

    /// Smallest grid over the mask's extent that satisfies the phase-sampling
    /// bound up to `detector_radius`, with at least `min_samples` per axis.
    pub fn covering(
        mask: &ApertureMask,
        cfg: &OpticalConfig,
        detector_radius: f64,
        min_samples: usize,
    ) -> Result<Self> {
        let half_extent = mask.extent();
        let needed = if detector_radius > 0.0 {
            (2.0 * half_extent / phase_step_bound(cfg, detector_radius)).ceil() as usize
        } else {
            1
        };
        Self::new(half_extent, needed.max(min_samples).max(1))
    }

    pub fn with_sample_budget(mut self, budget: u128) -> Self {
        self.sample_budget = budget;
        self
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn samples_per_axis(&self) -> usize {
        self.samples_per_axis
    }

    pub fn sample_budget(&self) -> u128 {
        self.sample_budget
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_extent / self.samples_per_axis as f64
    }

    /// Same window, `samples_per_axis` multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            samples_per_axis: self.samples_per_axis * factor,
            ..*self
        }
    }

    /// Checks window coverage and the phase-sampling bound for detector
    /// coordinates up to `detector_radius`.
    pub fn validate(
        &self,
        mask: &ApertureMask,
        cfg: &OpticalConfig,
        detector_radius: f64,
    ) -> Result<()> {
        let required = mask.extent();
        if self.half_extent < required {
            return Err(Error::WindowTooSmall {
                half_extent: self.half_extent,
                required,
            });
        }
        if detector_radius > 0.0 {
            let bound = phase_step_bound(cfg, detector_radius);
            let step = self.step();
            if step > bound {
                return Err(Error::Resolution {
                    step,
                    bound,
                    detector_radius,
                });
            }
        }
        Ok(())
    }

    fn centers(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.samples_per_axis)
            .map(|i| -self.half_extent + (i as f64 + 0.5) * h)
            .collect()
    }
}

/// Largest admissible grid step for detector coordinates up to `detector_radius`:
/// λf/(4·r_max).
pub fn phase_step_bound(cfg: &OpticalConfig, detector_radius: f64) -> f64 {
    cfg.lambda_f() / (4.0 * detector_radius)
}

/// Mask sampled on the quadrature grid, stored as runs of open cells per row.
struct SampledMask {
    centers: Vec<f64>,
    // half-open [start, end) column ranges for each row
    runs: Vec<Vec<(usize, usize)>>,
    step: f64,
}

impl SampledMask {
    fn new(mask: &ApertureMask, quad: &QuadratureSpec) -> Self {
        let centers = quad.centers();
        let runs = centers
            .par_iter()
            .map(|&y| {
                let mut row = Vec::new();
                let mut start = None;
                for (i, &x) in centers.iter().enumerate() {
                    match (mask.is_open(x, y), start) {
                        (true, None) => start = Some(i),
                        (false, Some(s)) => {
                            row.push((s, i));
                            start = None;
                        }
                        _ => {}
                    }
                }
                if let Some(s) = start {
                    row.push((s, centers.len()));
                }
                row
            })
            .collect();
        Self {
            centers,
            runs,
            step: quad.step(),
        }
    }

    fn axis_phases(&self, r1: f64, r2: f64, q_scale: f64) -> Vec<Complex64> {
        self.centers
            .iter()
            .map(|&c| axis_phase(r1, c, q_scale) * axis_phase(r2, c, q_scale))
            .collect()
    }
}

/// Integrator for one (mask, optics, grid) combination, reusable across
/// detector positions.
pub struct FocalPlaneIntegrator {
    cfg: OpticalConfig,
    quad: QuadratureSpec,
    sampled: SampledMask,
    max_radius: f64,
}

impl FocalPlaneIntegrator {
    /// Prepares the grid and checks it against detector coordinates up to
    /// `max_detector_radius`.
    pub fn new(
        mask: &ApertureMask,
        cfg: &OpticalConfig,
        quad: &QuadratureSpec,
        max_detector_radius: f64,
    ) -> Result<Self> {
        quad.validate(mask, cfg, max_detector_radius)?;
        Ok(Self {
            cfg: *cfg,
            quad: *quad,
            sampled: SampledMask::new(mask, quad),
            max_radius: max_detector_radius,
        })
    }

    fn check_radius(&self, r1: TransverseVector, r2: TransverseVector) -> Result<()> {
        let r = r1.norm().max(r2.norm());
        if r > self.max_radius {
            // re-run the bound check for the larger radius
            let bound = phase_step_bound(&self.cfg, r);
            if self.quad.step() > bound {
                return Err(Error::Resolution {
                    step: self.quad.step(),
                    bound,
                    detector_radius: r,
                });
            }
        }
        Ok(())
    }

    /// ∫ P(r₀) h_f(r₁, r₀) h_f(r₂, r₀) d²r₀.
    pub fn ideal_amplitude(
        &self,
        r1: TransverseVector,
        r2: TransverseVector,
    ) -> Result<ComplexAmplitude> {
        self.check_radius(r1, r2)?;
        let q = self.cfg.q_scale();
        let ex = self.sampled.axis_phases(r1.x(), r2.x(), q);
        let ey = self.sampled.axis_phases(r1.y(), r2.y(), q);

        let mut prefix = Vec::with_capacity(ex.len() + 1);
        let mut acc = Complex64::new(0.0, 0.0);
        prefix.push(acc);
        for e in &ex {
            acc += e;
            prefix.push(acc);
        }

        let mut total = Complex64::new(0.0, 0.0);
        for (row, phase_y) in self.sampled.runs.iter().zip(&ey) {
            if row.is_empty() {
                continue;
            }
            let row_sum: Complex64 = row.iter().map(|&(s, e)| prefix[e] - prefix[s]).sum();
            total += row_sum * phase_y;
        }
        let k0 = kernel_prefactor(&self.cfg);
        let h = self.sampled.step;
        Ok(k0 * k0 * total * (h * h))
    }

    /// ∫∫ P(r′)P(r″) h_f(r₁, r′) h_f(r₂, r″) C(r′, r″) d²r′ d²r″ for a
    /// Gaussian-correlated source.
    pub fn correlated_amplitude(
        &self,
        r1: TransverseVector,
        r2: TransverseVector,
        source: &BiphotonSource,
    ) -> Result<ComplexAmplitude> {
        let weights = CorrelationWeights::new(source, &self.sampled.centers, &self.quad)?;
        self.correlated_with(r1, r2, &weights)
    }

    fn correlated_with(
        &self,
        r1: TransverseVector,
        r2: TransverseVector,
        weights: &CorrelationWeights,
    ) -> Result<ComplexAmplitude> {
        self.check_radius(r1, r2)?;
        let n = self.sampled.centers.len();
        let q = self.cfg.q_scale();
        let phases = |r: f64| -> Vec<Complex64> {
            self.sampled
                .centers
                .iter()
                .map(|&c| axis_phase(r, c, q))
                .collect()
        };
        let u1x = phases(r1.x());
        let u2x = phases(r2.x());
        let u1y = phases(r1.y());
        let u2y = phases(r2.y());
        let g = &weights.matrix;
        let runs = &self.sampled.runs;

        // v[j'][k] = Σ_{i open in row j'} u1x[i] G[i][k]
        let mut v = vec![Complex64::new(0.0, 0.0); n * n];
        for (jp, row) in runs.iter().enumerate() {
            let out = &mut v[jp * n..(jp + 1) * n];
            for &(s, e) in row {
                for i in s..e {
                    let u = u1x[i];
                    let gi = &g[i * n..(i + 1) * n];
                    for (o, &gik) in out.iter_mut().zip(gi) {
                        *o += u * gik;
                    }
                }
            }
        }

        let mut total = Complex64::new(0.0, 0.0);
        for (jp, row_p) in runs.iter().enumerate() {
            if row_p.is_empty() {
                continue;
            }
            let vj = &v[jp * n..(jp + 1) * n];
            let mut inner = Complex64::new(0.0, 0.0);
            for (jpp, row_pp) in runs.iter().enumerate() {
                if row_pp.is_empty() {
                    continue;
                }
                let gy = g[jp * n + jpp];
                if gy == 0.0 {
                    continue;
                }
                let mut w = Complex64::new(0.0, 0.0);
                for &(s, e) in row_pp {
                    for k in s..e {
                        w += u2x[k] * vj[k];
                    }
                }
                inner += u2y[jpp] * (w * gy);
            }
            total += u1y[jp] * inner;
        }

        let k0 = kernel_prefactor(&self.cfg);
        let h2 = self.sampled.step * self.sampled.step;
        Ok(k0 * k0 * total * (h2 * h2))
    }

    /// Midpoint-rule transform ∫ P(r₀) exp(−i q·r₀) d²r₀ of the sampled mask.
    pub fn mask_transform(&self, q: TransverseVector) -> ComplexAmplitude {
        let ex: Vec<Complex64> = self
            .sampled
            .centers
            .iter()
            .map(|&c| Complex64::cis(-q.x() * c))
            .collect();
        let mut total = Complex64::new(0.0, 0.0);
        for (j, row) in self.sampled.runs.iter().enumerate() {
            let mut row_sum = Complex64::new(0.0, 0.0);
            for &(s, e) in row {
                row_sum += ex[s..e].iter().sum::<Complex64>();
            }
            total += row_sum * Complex64::cis(-q.y() * self.sampled.centers[j]);
        }
        let h = self.sampled.step;
        total * (h * h)
    }

    /// Number of open cells on the grid.
    pub fn open_cells(&self) -> usize {
        self.sampled
            .runs
            .iter()
            .flatten()
            .map(|&(s, e)| e - s)
            .sum()
    }
}

struct CorrelationWeights {
    matrix: Vec<f64>,
}

impl CorrelationWeights {
    fn new(source: &BiphotonSource, centers: &[f64], quad: &QuadratureSpec) -> Result<Self> {
        let (sigma_c, sigma_b) = match *source {
            BiphotonSource::GaussianCorrelated {
                correlation_width,
                beam_width,
            } => (correlation_width, beam_width),
            BiphotonSource::IdealDelta => {
                return Err(Error::InvalidParameter {
                    name: "source",
                    reason: "the delta-correlated source uses the ideal amplitude".into(),
                })
            }
        };
        let n = centers.len() as u128;
        let samples = n * n * n * n;
        if samples > quad.sample_budget() {
            return Err(Error::CostBudget {
                samples,
                budget: quad.sample_budget(),
            });
        }
        let matrix = centers
            .iter()
            .flat_map(|&u| {
                centers
                    .iter()
                    .map(move |&w| gaussian_factor(u, w, sigma_c, sigma_b))
            })
            .collect();
        Ok(Self { matrix })
    }
}

fn max_radius(points: &[(TransverseVector, TransverseVector)]) -> f64 {
    points
        .iter()
        .map(|(a, b)| a.norm().max(b.norm()))
        .fold(0.0, f64::max)
}

/// Ideal-source amplitude ⟨0|E₁E₂|Ψ⟩ at detector points r₁, r₂.
pub fn biphoton_amplitude_ideal(
    r1: TransverseVector,
    r2: TransverseVector,
    mask: &ApertureMask,
    cfg: &OpticalConfig,
    quad: &QuadratureSpec,
) -> Result<ComplexAmplitude> {
    let integrator = FocalPlaneIntegrator::new(mask, cfg, quad, max_radius(&[(r1, r2)]))?;
    integrator.ideal_amplitude(r1, r2)
}

/// Amplitude for a Gaussian-correlated source.
pub fn biphoton_amplitude_general(
    r1: TransverseVector,
    r2: TransverseVector,
    mask: &ApertureMask,
    source: &BiphotonSource,
    cfg: &OpticalConfig,
    quad: &QuadratureSpec,
) -> Result<ComplexAmplitude> {
    let integrator = FocalPlaneIntegrator::new(mask, cfg, quad, max_radius(&[(r1, r2)]))?;
    integrator.correlated_amplitude(r1, r2, source)
}

/// Coincidence rate R(r₁, r₂) = |amplitude|², up to a constant.
pub fn coincidence_rate(
    r1: TransverseVector,
    r2: TransverseVector,
    mask: &ApertureMask,
    source: &BiphotonSource,
    cfg: &OpticalConfig,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let amp = match source {
        BiphotonSource::IdealDelta => biphoton_amplitude_ideal(r1, r2, mask, cfg, quad)?,
        _ => biphoton_amplitude_general(r1, r2, mask, source, cfg, quad)?,
    };
    Ok(amp.norm_sqr())
}

/// Which detector configurations a [`CoincidenceMap`] covers. Scanned
/// positions always move along x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slice {
    /// Both detectors at the same point, r₁ = r₂ = (x, 0).
    Degenerate,
    /// Detector 2 held at a fixed point, detector 1 at (x, 0).
    FixedPartner(TransverseVector),
}

impl Slice {
    fn points(&self, x: f64) -> (TransverseVector, TransverseVector) {
        let r1 = TransverseVector::raw(x, 0.0);
        match *self {
            Slice::Degenerate => (r1, r1),
            Slice::FixedPartner(r2) => (r1, r2),
        }
    }
}

/// Raw coincidence rates along a slice.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceMap {
    pub slice: Slice,
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
    /// Rate at r₁ = r₂ = 0.
    pub origin_rate: f64,
    /// Largest rate on the slice, used to normalize it.
    pub peak_rate: f64,
    pub peak_position: f64,
}

impl CoincidenceMap {
    /// Slice divided by its peak rate.
    pub fn normalized(&self) -> Result<ScanProfile> {
        let values = self.values.iter().map(|v| v / self.peak_rate).collect();
        ScanProfile::new(
            self.positions.clone(),
            values,
            None,
            crate::profile::Normalization::PeakNormalized,
        )
    }
}

fn validate_positions(positions: &[f64]) -> Result<f64> {
    if positions.is_empty() {
        return Err(Error::InvalidProfile("no positions".into()));
    }
    if positions.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidProfile("non-finite position".into()));
    }
    Ok(positions.iter().map(|p| p.abs()).fold(0.0, f64::max))
}

fn evaluate(
    integrator: &FocalPlaneIntegrator,
    source: &BiphotonSource,
    weights: Option<&CorrelationWeights>,
    r1: TransverseVector,
    r2: TransverseVector,
) -> Result<f64> {
    let amp = match (source, weights) {
        (BiphotonSource::IdealDelta, _) => integrator.ideal_amplitude(r1, r2)?,
        (_, Some(w)) => integrator.correlated_with(r1, r2, w)?,
        (_, None) => integrator.correlated_amplitude(r1, r2, source)?,
    };
    Ok(amp.norm_sqr())
}

/// Coincidence rates along `slice`, evaluated in parallel over positions.
pub fn coincidence_map(
    slice: Slice,
    positions: &[f64],
    mask: &ApertureMask,
    source: &BiphotonSource,
    cfg: &OpticalConfig,
    quad: &QuadratureSpec,
) -> Result<CoincidenceMap> {
    let mut reach = validate_positions(positions)?;
    if let Slice::FixedPartner(r2) = slice {
        reach = reach.max(r2.norm());
    }
    let integrator = FocalPlaneIntegrator::new(mask, cfg, quad, reach)?;
    let weights = match source {
        BiphotonSource::IdealDelta => None,
        _ => Some(CorrelationWeights::new(
            source,
            &integrator.sampled.centers,
            quad,
        )?),
    };
    let values = positions
        .par_iter()
        .map(|&x| {
            let (r1, r2) = slice.points(x);
            evaluate(&integrator, source, weights.as_ref(), r1, r2)
        })
        .collect::<Result<Vec<f64>>>()?;
    let origin_rate = evaluate(
        &integrator,
        source,
        weights.as_ref(),
        TransverseVector::ORIGIN,
        TransverseVector::ORIGIN,
    )?;
    let (peak_idx, peak_rate) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
    if peak_rate <= 0.0 {
        return Err(Error::InvalidProfile(
            "coincidence rate vanishes on the whole slice".into(),
        ));
    }
    Ok(CoincidenceMap {
        slice,
        positions: positions.to_vec(),
        values,
        origin_rate,
        peak_rate,
        peak_position: positions[peak_idx],
    })
}

/// R(r)/R(0) along r₁ = r₂ = (r, 0) for the ideal source.
pub fn degenerate_profile(
    mask: &ApertureMask,
    cfg: &OpticalConfig,
    radii: &[f64],
    quad: &QuadratureSpec,
) -> Result<ScanProfile> {
    correlated_profile(mask, &BiphotonSource::IdealDelta, cfg, radii, quad)
}

/// R(r)/R(0) along r₁ = r₂ = (r, 0) for any source model.
pub fn correlated_profile(
    mask: &ApertureMask,
    source: &BiphotonSource,
    cfg: &OpticalConfig,
    radii: &[f64],
    quad: &QuadratureSpec,
) -> Result<ScanProfile> {
    let map = coincidence_map(Slice::Degenerate, radii, mask, source, cfg, quad)?;
    if map.origin_rate <= 0.0 {
        return Err(Error::InvalidProfile(
            "on-axis coincidence rate is zero".into(),
        ));
    }
    let values = map.values.iter().map(|v| v / map.origin_rate).collect();
    ScanProfile::relative_to_origin(map.positions, values)
}

/// Numerical P̃(q) on the quadrature grid; works for every mask shape.
pub fn mask_fourier_numeric(
    mask: &ApertureMask,
    q: TransverseVector,
    quad: &QuadratureSpec,
) -> Result<ComplexAmplitude> {
    let required = mask.extent();
    if quad.half_extent() < required {
        return Err(Error::WindowTooSmall {
            half_extent: quad.half_extent(),
            required,
        });
    }
    let sampled = SampledMask::new(mask, quad);
    let integrator = FocalPlaneIntegrator {
        cfg: OpticalConfig::new(1.0, 1.0)?,
        quad: *quad,
        sampled,
        max_radius: 0.0,
    };
    Ok(integrator.mask_transform(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bench() -> (ApertureMask, OpticalConfig) {
        (
            ApertureMask::circle(0.45e-3).unwrap(),
            OpticalConfig::new(800e-9, 0.5).unwrap(),
        )
    }

    fn v(x: f64, y: f64) -> TransverseVector {
        TransverseVector::new(x, y).unwrap()
    }

    #[test]
    fn gaussian_source_invariants() {
        assert!(BiphotonSource::gaussian(2e-3, 1e-3).is_err());
        assert!(BiphotonSource::gaussian(0.0, 1e-3).is_err());
        let s = BiphotonSource::gaussian(1e-5, 1e-3).unwrap();
        let a = v(1e-4, 2e-5);
        let b = v(-3e-5, 1e-4);
        assert_eq!(s.correlation(a, b), s.correlation(b, a));
        assert_eq!(BiphotonSource::IdealDelta.correlation(a, b), None);
    }

    #[test]
    fn refuses_undersampled_grid() {
        let (mask, cfg) = bench();
        let quad = QuadratureSpec::new(0.45e-3, 8).unwrap();
        let r = v(1.5e-3, 0.0);
        let err = biphoton_amplitude_ideal(r, r, &mask, &cfg, &quad).unwrap_err();
        assert!(matches!(err, Error::Resolution { .. }));
    }

    #[test]
    fn refuses_window_smaller_than_mask() {
        let (mask, cfg) = bench();
        let quad = QuadratureSpec::new(0.4e-3, 64).unwrap();
        let err = biphoton_amplitude_ideal(
            TransverseVector::ORIGIN,
            TransverseVector::ORIGIN,
            &mask,
            &cfg,
            &quad,
        )
        .unwrap_err();
        assert!(matches!(err, Error::WindowTooSmall { .. }));
    }

    #[test]
    fn covering_spec_meets_bound() {
        let (mask, cfg) = bench();
        let quad = QuadratureSpec::covering(&mask, &cfg, 1.5e-3, 0).unwrap();
        assert!(quad.validate(&mask, &cfg, 1.5e-3).is_ok());
        let smaller = QuadratureSpec::new(quad.half_extent(), quad.samples_per_axis() - 1).unwrap();
        assert!(smaller.validate(&mask, &cfg, 1.5e-3).is_err());
    }

    #[test]
    fn origin_amplitude_is_open_area() {
        let (mask, cfg) = bench();
        let quad = QuadratureSpec::new(0.45e-3, 1024).unwrap();
        let amp = biphoton_amplitude_ideal(
            TransverseVector::ORIGIN,
            TransverseVector::ORIGIN,
            &mask,
            &cfg,
            &quad,
        )
        .unwrap();
        let k0 = cfg.lambda_f().recip();
        let area = amp.norm() / (k0 * k0);
        let exact = PI * 0.45e-3 * 0.45e-3;
        assert!((area / exact - 1.0).abs() < 1e-3, "{area} vs {exact}");
    }

    #[test]
    fn anti_correlated_positions_match_origin() {
        let (mask, cfg) = bench();
        let quad = QuadratureSpec::new(0.45e-3, 512).unwrap();
        let integ = FocalPlaneIntegrator::new(&mask, &cfg, &quad, 1e-3).unwrap();
        let a0 = integ
            .ideal_amplitude(TransverseVector::ORIGIN, TransverseVector::ORIGIN)
            .unwrap()
            .norm();
        for r in [v(1e-4, 0.0), v(3e-4, -2e-4), v(0.0, 7e-4)] {
            let a = integ.ideal_amplitude(r, -r).unwrap().norm();
            assert!((a / a0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_vanishes_at_mapped_bessel_zero() {
        let (mask, cfg) = bench();
        // |r1 + r2| = 3.8317 λf / (2π a) with r1 = r2
        let sum = crate::special::J1_FIRST_ZERO * cfg.lambda_f() / (2.0 * PI * 0.45e-3);
        let r = v(0.5 * sum, 0.0);
        let quad = QuadratureSpec::new(0.45e-3, 2048).unwrap();
        let integ = FocalPlaneIntegrator::new(&mask, &cfg, &quad, r.norm()).unwrap();
        let a0 = integ
            .ideal_amplitude(TransverseVector::ORIGIN, TransverseVector::ORIGIN)
            .unwrap()
            .norm();
        let a = integ.ideal_amplitude(r, r).unwrap().norm();
        assert!(a / a0 < 1e-3, "{}", a / a0);
    }

    #[test]
    fn correlated_budget_guard() {
        let (mask, cfg) = bench();
        let source = BiphotonSource::gaussian(1e-5, 1e-3).unwrap();
        let quad = QuadratureSpec::new(0.45e-3, 200).unwrap();
        let err = biphoton_amplitude_general(
            TransverseVector::ORIGIN,
            TransverseVector::ORIGIN,
            &mask,
            &source,
            &cfg,
            &quad,
        )
        .unwrap_err();
        assert!(matches!(err, Error::CostBudget { .. }));
        let ok = quad.with_sample_budget(2_000_000_000);
        assert!(biphoton_amplitude_general(
            TransverseVector::ORIGIN,
            TransverseVector::ORIGIN,
            &mask,
            &source,
            &cfg,
            &ok,
        )
        .is_ok());
    }

    #[test]
    fn correlated_requires_gaussian_source() {
        let (mask, cfg) = bench();
        let quad = QuadratureSpec::new(0.45e-3, 32).unwrap();
        assert!(biphoton_amplitude_general(
            TransverseVector::ORIGIN,
            TransverseVector::ORIGIN,
            &mask,
            &BiphotonSource::IdealDelta,
            &cfg,
            &quad,
        )
        .is_err());
    }

    #[test]
    fn correlated_origin_is_slice_maximum() {
        let (mask, cfg) = bench();
        let source = BiphotonSource::gaussian(0.45e-3 / 10.0, 4.5e-3).unwrap();
        let quad = QuadratureSpec::new(0.45e-3, 64).unwrap();
        let radii: Vec<f64> = (0..=20).map(|i| i as f64 * 25e-6).collect();
        let map = coincidence_map(Slice::Degenerate, &radii, &mask, &source, &cfg, &quad).unwrap();
        assert_eq!(map.peak_position, 0.0);
        assert_eq!(map.peak_rate, map.origin_rate);
        assert!(map.values.iter().all(|&v| v <= map.origin_rate));
    }

    #[test]
    fn degenerate_profile_starts_at_one() {
        let (mask, cfg) = bench();
        let quad = QuadratureSpec::new(0.45e-3, 256).unwrap();
        let radii = [0.0, 1e-4, 2e-4];
        let p = degenerate_profile(&mask, &cfg, &radii, &quad).unwrap();
        assert_eq!(p.values()[0], 1.0);
    }

    #[test]
    fn numeric_transform_matches_rectangle() {
        let mask = ApertureMask::rectangle(0.3e-3, 0.2e-3).unwrap();
        let quad = QuadratureSpec::new(0.3e-3, 600).unwrap();
        for q in [v(0.0, 0.0), v(5e3, 0.0), v(2e3, -7e3)] {
            let num = mask_fourier_numeric(&mask, q, &quad).unwrap();
            let exact = mask.fourier_analytic(q).unwrap();
            assert!((num - exact).norm() < 1e-4 * 0.24e-6, "{num} vs {exact}");
        }
    }
}
