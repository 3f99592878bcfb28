//! Monte Carlo emulation of the scanning coincidence measurement and the
//! least-squares fit of the Airy model to the recorded counts.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::analytic::AiryPattern;
use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{OpticalConfig, TransverseVector};
use crate::special::{airy, J1_FIRST_ZERO};

/// Pinhole two-photon detector behind the back focal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    /// Zero means a point detector.
    pub pinhole_radius: f64,
    /// Detected pairs per second with the pinhole at the pattern peak.
    pub pair_flux: f64,
    pub dwell_time: f64,
    pub coincidence_window: f64,
    /// Singles rate of each detector, for the accidental estimate.
    pub singles_rate: f64,
    pub rng_seed: u64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            pinhole_radius: 25e-6,
            pair_flux: 200.0,
            dwell_time: 10.0,
            coincidence_window: 2e-9,
            singles_rate: 1e4,
            rng_seed: 0,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and nonnegative, got {v}"),
                })
            }
        };
        nonneg("pinhole_radius", self.pinhole_radius)?;
        nonneg("pair_flux", self.pair_flux)?;
        nonneg("singles_rate", self.singles_rate)?;
        ensure_positive("dwell_time", self.dwell_time)?;
        ensure_positive("coincidence_window", self.coincidence_window)?;
        if self.coincidence_window > 1e-3 * self.dwell_time {
            return Err(Error::InvalidParameter {
                name: "coincidence_window",
                reason: format!(
                    "window {} s is not small against the dwell time {} s",
                    self.coincidence_window, self.dwell_time
                ),
            });
        }
        Ok(())
    }

    /// Expected accidental coincidences per scan position,
    /// singles² · window · dwell.
    pub fn accidentals(&self) -> f64 {
        self.singles_rate * self.singles_rate * self.coincidence_window * self.dwell_time
    }

    /// Expected true coincidences per position at the pattern peak.
    pub fn peak_counts(&self) -> f64 {
        self.pair_flux * self.dwell_time
    }
}

/// One scan position of a simulated measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord {
    pub position: f64,
    pub coincidences: u64,
    pub expected: f64,
    pub accidental_estimate: f64,
}

const PINHOLE_RINGS: usize = 16;
const PINHOLE_SPOKES: usize = 32;

/// Mean of `profile_fn` over the pinhole disk centered at (position, 0).
fn pinhole_average<F>(position: f64, radius: f64, profile_fn: &F) -> f64
where
    F: Fn(TransverseVector) -> f64,
{
    if radius == 0.0 {
        return profile_fn(TransverseVector::raw(position, 0.0));
    }
    let mut sum = 0.0;
    for ring in 0..PINHOLE_RINGS {
        // equal-area rings
        let rho = radius * ((ring as f64 + 0.5) / PINHOLE_RINGS as f64).sqrt();
        for spoke in 0..PINHOLE_SPOKES {
            let theta = TAU * (spoke as f64 + 0.5) / PINHOLE_SPOKES as f64;
            let (s, c) = theta.sin_cos();
            sum += profile_fn(TransverseVector::raw(position + rho * c, rho * s));
        }
    }
    sum / (PINHOLE_RINGS * PINHOLE_SPOKES) as f64
}

/// Mean coincidence count at a scan position: true pairs through the pinhole
/// plus accidentals plus a flat `background` (counts per position).
///
/// `profile_fn` maps a detector-plane point to the peak-normalized pattern.
pub fn expected_counts<F>(
    position: f64,
    model: &DetectorModel,
    profile_fn: F,
    background: f64,
) -> f64
where
    F: Fn(TransverseVector) -> f64,
{
    model.peak_counts() * pinhole_average(position, model.pinhole_radius, &profile_fn)
        + model.accidentals()
        + background
}

// Above this mean the normal approximation replaces exact inversion.
pub(crate) const POISSON_NORMAL_CUTOFF: f64 = 500.0;

pub(crate) fn poisson_inversion<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut k = 0u64;
    let cap = (mean + 40.0 * mean.sqrt() + 50.0) as u64;
    while u > cdf && k < cap {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

pub(crate) fn poisson_normal<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    let z: f64 = rng.sample(StandardNormal);
    (mean + mean.sqrt() * z).round().max(0.0) as u64
}

pub(crate) fn sample_poisson<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        0
    } else if mean > POISSON_NORMAL_CUTOFF {
        poisson_normal(mean, rng)
    } else {
        poisson_inversion(mean, rng)
    }
}

/// Simulates one scan. Positions are visited in order from a generator
/// seeded with `model.rng_seed`, so equal inputs give identical records.
pub fn simulate_scan<F>(
    positions: &[f64],
    model: &DetectorModel,
    profile_fn: F,
    background: f64,
) -> Result<Vec<CountRecord>>
where
    F: Fn(TransverseVector) -> f64,
{
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.rng_seed);
    let accidentals = model.accidentals();
    Ok(positions
        .iter()
        .map(|&position| {
            let expected = expected_counts(position, model, &profile_fn, background);
            CountRecord {
                position,
                coincidences: sample_poisson(expected, &mut rng),
                expected,
                accidental_estimate: accidentals,
            }
        })
        .collect())
}

/// Maps mirror rotation angles to pattern displacements, 2θ·L.
pub fn scan_positions_from_mirror(angles: &[f64], lever_arm: f64) -> Result<Vec<f64>> {
    ensure_positive("lever_arm", lever_arm)?;
    angles
        .iter()
        .map(|&theta| {
            if !theta.is_finite() || theta.abs() >= 0.05 {
                Err(Error::Domain(format!(
                    "mirror angle {theta} rad is outside the small-angle range |θ| < 0.05"
                )))
            } else {
                Ok(2.0 * theta * lever_arm)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
        }
    }
}

/// Outcome of fitting A·K(s·|r − r_c|) + B to a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub pattern: AiryPattern,
    pub amplitude: f64,
    pub center_offset: f64,
    pub background: f64,
    /// r_c plus the model's first-zero radius.
    pub first_zero_estimate: f64,
    pub first_zero_uncertainty: f64,
    /// Parameter order: amplitude, center offset, background.
    pub covariance: Matrix3<f64>,
    pub reduced_chi_square: f64,
    pub iterations: usize,
}

/// Fits the Airy model of `pattern` to coincidence counts, with the aperture
/// radius `a` held at its known value.
pub fn fit_profile(
    records: &[CountRecord],
    a: f64,
    cfg: &OpticalConfig,
    pattern: AiryPattern,
) -> Result<FitResult> {
    fit_profile_with(records, a, cfg, pattern, &FitOptions::default())
}

pub fn fit_profile_with(
    records: &[CountRecord],
    a: f64,
    cfg: &OpticalConfig,
    pattern: AiryPattern,
    options: &FitOptions,
) -> Result<FitResult> {
    let x: Vec<f64> = records.iter().map(|r| r.position).collect();
    let y: Vec<f64> = records.iter().map(|r| r.coincidences as f64).collect();
    fit_samples(&x, &y, a, cfg, pattern, options)
}

/// Same model fit on real-valued samples, weighted by 1/max(y, 1).
pub fn fit_samples(
    positions: &[f64],
    values: &[f64],
    a: f64,
    cfg: &OpticalConfig,
    pattern: AiryPattern,
    options: &FitOptions,
) -> Result<FitResult> {
    ensure_positive("aperture_radius", a)?;
    if positions.len() != values.len() {
        return Err(Error::InsufficientData(format!(
            "{} positions for {} values",
            positions.len(),
            values.len()
        )));
    }
    if positions.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "need at least 10 records, got {}",
            positions.len()
        )));
    }
    if positions.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(Error::InsufficientData("non-finite sample".into()));
    }
    let problem = AiryFit {
        x: positions,
        y: values,
        w: values.iter().map(|&c| 1.0 / c.max(1.0)).collect(),
        scale: pattern.argument_scale(a, cfg),
        pattern,
    };
    let start = problem.initial_guess();
    let zero = J1_FIRST_ZERO / problem.scale;
    let (lo, hi) = positions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &p| {
            (l.min(p), h.max(p))
        });
    if hi - start[1] < zero && start[1] - lo < zero {
        return Err(Error::InsufficientData(format!(
            "scan [{lo:e}, {hi:e}] m does not reach the first zero at {zero:e} m from the peak"
        )));
    }
    problem.levenberg_marquardt(start, options.max_iterations)
}

struct AiryFit<'a> {
    x: &'a [f64],
    y: &'a [f64],
    w: Vec<f64>,
    scale: f64,
    pattern: AiryPattern,
}

impl AiryFit<'_> {
    fn model(&self, x: f64, p: &Vector3<f64>) -> f64 {
        p[0] * airy(self.scale * (x - p[1]).abs()) + p[2]
    }

    fn chi_square(&self, p: &Vector3<f64>) -> f64 {
        self.x
            .iter()
            .zip(self.y)
            .zip(&self.w)
            .map(|((&x, &y), &w)| {
                let r = y - self.model(x, p);
                w * r * r
            })
            .sum()
    }

    fn initial_guess(&self) -> Vector3<f64> {
        let mut sorted = self.y.to_vec();
        sorted.sort_by(f64::total_cmp);
        let low = (sorted.len() / 10).max(1);
        let background = sorted[..low].iter().sum::<f64>() / low as f64;
        let peak = sorted[sorted.len() - 1];
        let amplitude = if peak > background {
            peak - background
        } else {
            1.0
        };
        let (mut num, mut den) = (0.0, 0.0);
        for (&x, &y) in self.x.iter().zip(self.y) {
            let excess = y - background;
            if excess > 0.5 * amplitude {
                num += excess * x;
                den += excess;
            }
        }
        let center = if den > 0.0 {
            num / den
        } else {
            self.x[self.x.len() / 2]
        };
        Vector3::new(amplitude, center, background)
    }

    /// Normal matrix JᵀWJ and gradient JᵀW(y − model).
    fn normal_equations(&self, p: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
        let delta = 1e-5 / self.scale;
        let shifted = |d: f64| Vector3::new(p[0], p[1] + d, p[2]);
        let (plus, minus) = (shifted(delta), shifted(-delta));
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for ((&x, &y), &w) in self.x.iter().zip(self.y).zip(&self.w) {
            let kernel = airy(self.scale * (x - p[1]).abs());
            let d_center = (self.model(x, &plus) - self.model(x, &minus)) / (2.0 * delta);
            let j = Vector3::new(kernel, d_center, 1.0);
            let r = y - (p[0] * kernel + p[2]);
            jtj += w * j * j.transpose();
            jtr += w * r * j;
        }
        (jtj, jtr)
    }

    fn result(&self, p: Vector3<f64>, iterations: usize) -> FitResult {
        let (jtj, _) = self.normal_equations(&p);
        let covariance = jtj
            .try_inverse()
            .map(|c| 0.5 * (c + c.transpose()))
            .unwrap_or_else(|| Matrix3::from_element(f64::NAN));
        let dof = self.x.len().saturating_sub(3).max(1) as f64;
        FitResult {
            pattern: self.pattern,
            amplitude: p[0],
            center_offset: p[1],
            background: p[2],
            first_zero_estimate: p[1] + J1_FIRST_ZERO / self.scale,
            first_zero_uncertainty: covariance[(1, 1)].sqrt(),
            covariance,
            reduced_chi_square: self.chi_square(&p) / dof,
            iterations,
        }
    }

    fn levenberg_marquardt(&self, start: Vector3<f64>, max_iterations: usize) -> Result<FitResult> {
        let mut p = start;
        let mut chi2 = self.chi_square(&p);
        let mut lambda = 1e-3;
        for iteration in 1..=max_iterations {
            let (jtj, jtr) = self.normal_equations(&p);
            let mut damped = jtj;
            for i in 0..3 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(f64::MIN_POSITIVE);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let trial_chi2 = self.chi_square(&trial);
            if trial_chi2.is_finite() && trial_chi2 <= chi2 {
                let gain = chi2 - trial_chi2;
                p = trial;
                chi2 = trial_chi2;
                lambda = (lambda / 10.0).max(1e-12);
                if gain <= 1e-10 * chi2 + 1e-300 {
                    return Ok(self.result(p, iteration));
                }
            } else {
                lambda *= 10.0;
                // no downhill step exists at any damping: the iterate is a minimum
                if lambda > 1e12 {
                    return Ok(self.result(p, iteration));
                }
            }
        }
        Err(Error::FitDiverged {
            iterations: max_iterations,
            last: Box::new(self.result(p, max_iterations)),
        })
    }
}
