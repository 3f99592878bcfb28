//! The four workflows behind the subcommands.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context, Result};
use twophoton::experiment::{fit_profile_with, FitOptions};
use twophoton::{
    classical_airy_profile, correlated_profile, quantum_airy_profile, simulate_scan, AiryPattern,
    ApertureMask, BiphotonSource, CountRecord, FitResult, OpticalConfig, PatternMetrics,
    QuadratureSpec, ScanProfile, TransverseVector, DEFAULT_ZERO_THRESHOLD,
};

use crate::config::{load_mask, MaskSpec, RunConfig};

/// A tolerance or validation check failed after the computation ran.
#[derive(Debug, thiserror::Error)]
#[error("check failed: {0}")]
pub struct CheckFailed(pub String);

const AUTO_MIN_SAMPLES_IDEAL: usize = 512;
const AUTO_MIN_SAMPLES_CORRELATED: usize = 64;

/// Quadrature grid from the config, or the smallest admissible one when the
/// sample count is left open.
pub fn resolve_quadrature(
    cfg: &RunConfig,
    mask: &ApertureMask,
    detector_radius: f64,
) -> Result<QuadratureSpec> {
    let half_extent = cfg.quad.half_extent.unwrap_or_else(|| mask.extent());
    let samples = match cfg.quad.samples_per_axis {
        Some(n) => n,
        None => {
            let floor = match cfg.source {
                BiphotonSource::IdealDelta => AUTO_MIN_SAMPLES_IDEAL,
                _ => AUTO_MIN_SAMPLES_CORRELATED,
            };
            let bound =
                twophoton::biphoton::phase_step_bound(&cfg.optical, detector_radius.max(1e-300));
            ((2.0 * half_extent / bound).ceil() as usize).max(floor)
        }
    };
    let mut quad = QuadratureSpec::new(half_extent, samples)?;
    if let Some(b) = cfg.quad.sample_budget {
        quad = quad.with_sample_budget(b);
    }
    Ok(quad)
}

fn reach(positions: &[f64]) -> f64 {
    positions.iter().map(|p| p.abs()).fold(0.0, f64::max)
}

/// Normalized two-photon pattern R(r)/R(0) along r₁ = r₂ = (r, 0).
pub fn run_pattern(cfg: &RunConfig) -> Result<ScanProfile> {
    let mask = load_mask(&cfg.mask)?;
    let positions = cfg.scan.positions();
    let quad = resolve_quadrature(cfg, &mask, reach(&positions))?;
    Ok(correlated_profile(
        &mask,
        &cfg.source,
        &cfg.optical,
        &positions,
        &quad,
    )?)
}

/// Radius of the circle that closed-form curves are computed for, if any.
fn reference_circle(spec: &MaskSpec, mask: &ApertureMask) -> Option<f64> {
    match (spec, mask) {
        (MaskSpec::Circle { radius }, _) => Some(*radius),
        (
            MaskSpec::PixelGrid {
                reference_radius: Some(r),
                ..
            },
            _,
        ) => Some(*r),
        (MaskSpec::PixelGrid { .. }, ApertureMask::PixelGrid(grid)) => {
            Some((grid.open_area() / PI).sqrt())
        }
        _ => None,
    }
}

/// |P̃(m·q·r)|²/|P̃(0)|² along x, with m = 1 (one photon) or 2 (pair).
fn fourier_pattern(
    mask: &ApertureMask,
    optics: &OpticalConfig,
    photons: f64,
    positions: &[f64],
) -> Result<ScanProfile> {
    let p0 = mask.fourier_analytic(TransverseVector::ORIGIN)?.norm_sqr();
    let values = positions
        .iter()
        .map(|&r| {
            let q = TransverseVector::along_x(photons * optics.q_scale() * r)?;
            Ok(mask.fourier_analytic(q)?.norm_sqr() / p0)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max = values.iter().copied().fold(0.0, f64::max);
    let normalization = if (max - 1.0).abs() <= 1e-12 {
        twophoton::Normalization::PeakNormalized
    } else {
        twophoton::Normalization::OriginNormalized
    };
    Ok(ScanProfile::new(
        positions.to_vec(),
        values,
        None,
        normalization,
    )?)
}

fn analytic_pair(
    cfg: &RunConfig,
    mask: &ApertureMask,
    positions: &[f64],
) -> Result<(ScanProfile, ScanProfile)> {
    match reference_circle(&cfg.mask, mask) {
        Some(a) => Ok((
            classical_airy_profile(a, &cfg.optical, positions)?,
            quantum_airy_profile(a, &cfg.optical, positions)?,
        )),
        None => Ok((
            fourier_pattern(mask, &cfg.optical, 1.0, positions)?,
            fourier_pattern(mask, &cfg.optical, 2.0, positions)?,
        )),
    }
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub positions: Vec<f64>,
    pub classical: ScanProfile,
    pub quantum_analytic: ScanProfile,
    pub quantum_numeric: ScanProfile,
    pub classical_metrics: PatternMetrics,
    pub quantum_metrics: PatternMetrics,
    pub numeric_metrics: PatternMetrics,
    pub ratio: f64,
    pub numeric_rms: f64,
    pub rms_tolerance: f64,
}

impl CompareReport {
    pub fn passed(&self) -> bool {
        self.numeric_rms <= self.rms_tolerance
    }

    pub fn summary(&self) -> String {
        let um = |m: f64| m * 1e6;
        format!(
            "classical.first_zero_um = {:.3}\n\
             classical.fwhm_um = {:.3}\n\
             quantum_analytic.first_zero_um = {:.3}\n\
             quantum_analytic.fwhm_um = {:.3}\n\
             quantum_numeric.first_zero_um = {:.3}\n\
             quantum_numeric.fwhm_um = {:.3}\n\
             resolution_ratio = {:.4}\n\
             numeric_vs_analytic_rms = {:.3e}\n\
             rms_tolerance = {:.3e}\n\
             status = {}\n",
            um(self.classical_metrics.first_zero_radius),
            um(self.classical_metrics.fwhm),
            um(self.quantum_metrics.first_zero_radius),
            um(self.quantum_metrics.fwhm),
            um(self.numeric_metrics.first_zero_radius),
            um(self.numeric_metrics.fwhm),
            self.ratio,
            self.numeric_rms,
            self.rms_tolerance,
            if self.passed() { "pass" } else { "FAIL" },
        )
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record([
            "position_m",
            "classical",
            "quantum_analytic",
            "quantum_numeric",
        ])?;
        for i in 0..self.positions.len() {
            w.write_record([
                fmt(self.positions[i]),
                fmt(self.classical.values()[i]),
                fmt(self.quantum_analytic.values()[i]),
                fmt(self.quantum_numeric.values()[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Classical and two-photon patterns side by side, with spot metrics and the
/// numeric-versus-closed-form check.
pub fn run_compare(cfg: &RunConfig) -> Result<CompareReport> {
    let mask = load_mask(&cfg.mask)?;
    let positions = cfg.scan.positions();
    let (classical, quantum_analytic) = analytic_pair(cfg, &mask, &positions)?;
    let quad = resolve_quadrature(cfg, &mask, reach(&positions))?;
    let quantum_numeric = correlated_profile(&mask, &cfg.source, &cfg.optical, &positions, &quad)?;

    let measure = |p: &ScanProfile, what: &str| {
        PatternMetrics::measure(p, DEFAULT_ZERO_THRESHOLD)
            .with_context(|| format!("measuring {what} profile"))
    };
    let classical_metrics = measure(&classical, "classical")?;
    let quantum_metrics = measure(&quantum_analytic, "quantum analytic")?;
    let numeric_metrics = measure(&quantum_numeric, "quantum numeric")?;
    let ratio = twophoton::resolution_ratio(&classical_metrics, &quantum_metrics)?;
    let numeric_rms = quantum_numeric.rms_difference(&quantum_analytic)?;
    Ok(CompareReport {
        positions,
        classical,
        quantum_analytic,
        quantum_numeric,
        classical_metrics,
        quantum_metrics,
        numeric_metrics,
        ratio,
        numeric_rms,
        rms_tolerance: cfg.rms_tolerance,
    })
}

/// Detector-plane pattern for the scan, peak-normalized.
fn scan_pattern(
    cfg: &RunConfig,
    mask: &ApertureMask,
) -> Result<Box<dyn Fn(TransverseVector) -> f64>> {
    let pattern = cfg.scan.pattern;
    if let Some(a) = match &cfg.mask {
        MaskSpec::Circle { radius } => Some(*radius),
        MaskSpec::PixelGrid {
            reference_radius, ..
        } => *reference_radius,
        _ => None,
    } {
        let scale = pattern.argument_scale(a, &cfg.optical);
        return Ok(Box::new(move |v: TransverseVector| {
            twophoton::airy_kernel(scale * v.norm()).unwrap_or(0.0)
        }));
    }
    if matches!(mask, ApertureMask::PixelGrid(_)) {
        bail!("scan of a pixel-grid mask needs mask.pixel_grid.reference_radius");
    }
    let photons = match pattern {
        AiryPattern::ClassicalAiry => 1.0,
        AiryPattern::QuantumAiry => 2.0,
    };
    let q = photons * cfg.optical.q_scale();
    let mask = mask.clone();
    let p0 = mask.fourier_analytic(TransverseVector::ORIGIN)?.norm_sqr();
    Ok(Box::new(move |v: TransverseVector| {
        mask.fourier_analytic(v.scale(q))
            .map(|p| p.norm_sqr() / p0)
            .unwrap_or(0.0)
    }))
}

/// Simulated coincidence counts across the configured scan.
pub fn run_scan(cfg: &RunConfig) -> Result<Vec<CountRecord>> {
    let Some(det) = &cfg.detector else {
        bail!("the scan workflow needs a [detector] section (detector.* keys)");
    };
    let mask = load_mask(&cfg.mask)?;
    let profile = scan_pattern(cfg, &mask)?;
    Ok(simulate_scan(
        &cfg.scan.positions(),
        &det.model,
        profile,
        det.background,
    )?)
}

pub fn write_scan_csv(records: &[CountRecord], path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["position_m", "counts", "expected", "accidental"])?;
    for r in records {
        w.write_record([
            fmt(r.position),
            r.coincidences.to_string(),
            fmt(r.expected),
            fmt(r.accidental_estimate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scan_csv(path: &Path) -> Result<Vec<CountRecord>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = r.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .with_context(|| format!("{} has no `{name}` column", path.display()))
    };
    let (ip, ic) = (column("position_m")?, column("counts")?);
    let ie = headers.iter().position(|h| h.trim() == "expected");
    let ia = headers.iter().position(|h| h.trim() == "accidental");
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i)
                .map(str::trim)
                .with_context(|| format!("row {} is short", line + 2))
        };
        let num = |i: Option<usize>| -> Result<f64> {
            match i {
                Some(i) => field(i)?
                    .parse()
                    .with_context(|| format!("row {}: bad number", line + 2)),
                None => Ok(f64::NAN),
            }
        };
        out.push(CountRecord {
            position: num(Some(ip))?,
            coincidences: field(ic)?.parse().with_context(|| {
                format!("row {}: counts must be a nonnegative integer", line + 2)
            })?,
            expected: num(ie)?,
            accidental_estimate: num(ia)?,
        });
    }
    Ok(out)
}

/// Fits the configured Airy model to a scan CSV.
pub fn run_fit(cfg: &RunConfig, input: Option<&Path>) -> Result<FitResult> {
    let input = match (input, &cfg.fit.input) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p.into(),
        (None, None) => bail!("no scan to fit: set fit.input or pass --input"),
    };
    let a = match &cfg.mask {
        MaskSpec::Circle { radius } => *radius,
        MaskSpec::PixelGrid {
            reference_radius: Some(r),
            ..
        } => *r,
        _ => bail!("fitting needs a circular aperture radius"),
    };
    let records = read_scan_csv(&input)?;
    let options = FitOptions {
        max_iterations: cfg.fit.max_iterations,
    };
    Ok(fit_profile_with(
        &records,
        a,
        &cfg.optical,
        cfg.fit.pattern,
        &options,
    )?)
}

pub fn fit_rows(fit: &FitResult) -> Vec<(String, f64)> {
    let mut rows = vec![
        ("amplitude".to_string(), fit.amplitude),
        ("center_offset_m".into(), fit.center_offset),
        ("background".into(), fit.background),
        ("first_zero_m".into(), fit.first_zero_estimate),
        ("first_zero_sigma_m".into(), fit.first_zero_uncertainty),
        ("reduced_chi_square".into(), fit.reduced_chi_square),
        ("iterations".into(), fit.iterations as f64),
    ];
    let names = ["amplitude", "center", "background"];
    for i in 0..3 {
        for j in 0..3 {
            rows.push((
                format!("cov_{}_{}", names[i], names[j]),
                fit.covariance[(i, j)],
            ));
        }
    }
    rows
}

pub fn write_fit_csv(fit: &FitResult, path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["quantity", "value"])?;
    for (name, value) in fit_rows(fit) {
        w.write_record([name, fmt(value)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_profile_csv(profile: &ScanProfile, path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["position_m", "rate"])?;
    for (p, v) in profile.positions().iter().zip(profile.values()) {
        w.write_record([fmt(*p), fmt(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip scientific notation; never locale-dependent.
fn fmt(v: f64) -> String {
    format!("{v:e}")
}
