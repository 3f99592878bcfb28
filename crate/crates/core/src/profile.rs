use crate::error::{Error, Result};

/// How the values of a [`ScanProfile`] are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Largest value is 1.
    PeakNormalized,
    /// Divided by the on-axis value R(0), which need not be among the samples.
    OriginNormalized,
    RawCounts,
}

/// Ordered samples of a one-dimensional cut through a pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanProfile {
    positions: Vec<f64>,
    values: Vec<f64>,
    uncertainties: Option<Vec<f64>>,
    normalization: Normalization,
}

const PEAK_TOLERANCE: f64 = 1e-12;

impl ScanProfile {
    pub fn new(
        positions: Vec<f64>,
        values: Vec<f64>,
        uncertainties: Option<Vec<f64>>,
        normalization: Normalization,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidProfile("no samples".into()));
        }
        if positions.len() != values.len() {
            return Err(Error::InvalidProfile(format!(
                "{} positions but {} values",
                positions.len(),
                values.len()
            )));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidProfile("non-finite position".into()));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile(
                "positions must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidProfile(
                "values must be finite and nonnegative".into(),
            ));
        }
        if let Some(u) = &uncertainties {
            if u.len() != values.len() {
                return Err(Error::InvalidProfile(format!(
                    "{} uncertainties for {} values",
                    u.len(),
                    values.len()
                )));
            }
            if u.iter().any(|s| !s.is_finite() || *s < 0.0) {
                return Err(Error::InvalidProfile(
                    "uncertainties must be finite and nonnegative".into(),
                ));
            }
        }
        let max = values.iter().copied().fold(0.0, f64::max);
        match normalization {
            Normalization::PeakNormalized if (max - 1.0).abs() > PEAK_TOLERANCE => {
                return Err(Error::InvalidProfile(format!(
                    "peak-normalized profile has maximum {max}"
                )))
            }
            Normalization::OriginNormalized if max > 1.0 + PEAK_TOLERANCE => {
                return Err(Error::InvalidProfile(format!(
                    "origin-normalized profile exceeds its on-axis value ({max})"
                )))
            }
            _ => {}
        }
        Ok(Self {
            positions,
            values,
            uncertainties,
            normalization,
        })
    }

    /// Values already divided by the on-axis value; tagged peak-normalized
    /// when the on-axis point is among the samples.
    pub(crate) fn relative_to_origin(positions: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let max = values.iter().copied().fold(0.0, f64::max);
        let normalization = if (max - 1.0).abs() <= PEAK_TOLERANCE {
            Normalization::PeakNormalized
        } else {
            Normalization::OriginNormalized
        };
        Self::new(positions, values, None, normalization)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn uncertainties(&self) -> Option<&[f64]> {
        self.uncertainties.as_deref()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub(crate) fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn peak_position(&self) -> f64 {
        self.positions[self.peak_index()]
    }

    /// Values scaled so that the largest is 1.
    pub(crate) fn unit_peak_values(&self) -> Vec<f64> {
        let max = self.values[self.peak_index()];
        if max > 0.0 {
            self.values.iter().map(|v| v / max).collect()
        } else {
            self.values.clone()
        }
    }

    /// Root-mean-square difference of the values of two profiles sampled at
    /// the same positions.
    pub fn rms_difference(&self, other: &ScanProfile) -> Result<f64> {
        if self.positions != other.positions {
            return Err(Error::InvalidProfile(
                "profiles are sampled at different positions".into(),
            ));
        }
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((sum / self.len() as f64).sqrt())
    }

    /// ‖self − other‖₂ / ‖other‖₂ over the shared samples.
    pub fn relative_l2_distance(&self, other: &ScanProfile) -> Result<f64> {
        if self.positions != other.positions {
            return Err(Error::InvalidProfile(
                "profiles are sampled at different positions".into(),
            ));
        }
        let (num, den) = self
            .values
            .iter()
            .zip(&other.values)
            .fold((0.0, 0.0), |(n, d), (a, b)| {
                (n + (a - b) * (a - b), d + b * b)
            });
        if den == 0.0 {
            return Err(Error::InvalidProfile(
                "reference profile is identically zero".into(),
            ));
        }
        Ok((num / den).sqrt())
    }
}
