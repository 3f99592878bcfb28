//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! optical.wavelength   = 800nm
//! optical.focal_length = 50cm
//! mask.circle.diameter = 0.9mm
//! ```
//!
//! Dimensioned values must carry a unit suffix; they are normalized to SI
//! base units on parse. Unknown keys, duplicate keys and wrong units are
//! errors that name the offending key.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;
use twophoton::experiment::DetectorModel;
use twophoton::{AiryPattern, ApertureMask, BiphotonSource, OpticalConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("`{key}`: {reason}")]
    Unit { key: String, reason: String },
    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Length,
    Time,
    Rate,
    Real,
    Integer,
    Text,
}

const KEYS: &[(&str, Kind)] = &[
    ("optical.wavelength", Kind::Length),
    ("optical.focal_length", Kind::Length),
    ("mask.circle.radius", Kind::Length),
    ("mask.circle.diameter", Kind::Length),
    ("mask.double_slit.width", Kind::Length),
    ("mask.double_slit.separation", Kind::Length),
    ("mask.double_slit.height", Kind::Length),
    ("mask.rectangle.half_width_x", Kind::Length),
    ("mask.rectangle.half_width_y", Kind::Length),
    ("mask.pixel_grid.file", Kind::Text),
    ("mask.pixel_grid.reference_radius", Kind::Length),
    ("source.model", Kind::Text),
    ("source.correlation_width", Kind::Length),
    ("source.beam_width", Kind::Length),
    ("quad.half_extent", Kind::Length),
    ("quad.samples_per_axis", Kind::Integer),
    ("quad.sample_budget", Kind::Integer),
    ("detector.pinhole_radius", Kind::Length),
    ("detector.pair_flux", Kind::Rate),
    ("detector.dwell_time", Kind::Time),
    ("detector.coincidence_window", Kind::Time),
    ("detector.singles_rate", Kind::Rate),
    ("detector.seed", Kind::Integer),
    ("detector.background", Kind::Real),
    ("scan.r_min", Kind::Length),
    ("scan.r_max", Kind::Length),
    ("scan.step", Kind::Length),
    ("scan.pattern", Kind::Text),
    ("fit.input", Kind::Text),
    ("fit.pattern", Kind::Text),
    ("fit.max_iterations", Kind::Integer),
    ("compare.rms_tolerance", Kind::Real),
    ("output.path", Kind::Text),
];

fn unit_exponent(kind: Kind, unit: &str) -> Option<i32> {
    match kind {
        Kind::Length => match unit {
            "nm" => Some(-9),
            "um" | "µm" => Some(-6),
            "mm" => Some(-3),
            "cm" => Some(-2),
            "m" => Some(0),
            _ => None,
        },
        Kind::Time => match unit {
            "ns" => Some(-9),
            "us" | "µs" => Some(-6),
            "ms" => Some(-3),
            "s" => Some(0),
            _ => None,
        },
        Kind::Rate => match unit {
            "/s" | "Hz" => Some(0),
            "kHz" => Some(3),
            "MHz" => Some(6),
            _ => None,
        },
        Kind::Real => unit.is_empty().then_some(0),
        Kind::Integer | Kind::Text => None,
    }
}

fn unit_label(kind: Kind) -> &'static str {
    match kind {
        Kind::Length => "a length unit (nm, um, mm, cm, m)",
        Kind::Time => "a time unit (ns, us, ms, s)",
        Kind::Rate => "a rate unit (/s, Hz, kHz, MHz)",
        _ => "no unit",
    }
}

/// Parses `<number><unit>`, applying the unit as a decimal exponent so that
/// e.g. `800nm` gives exactly the double nearest 8e-7.
fn parse_quantity(key: &str, kind: Kind, raw: &str) -> Result<f64, ConfigError> {
    let split = raw
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '+' | '-' | 'e' | 'E')))
        .unwrap_or(raw.len());
    let (number, unit) = raw.split_at(split);
    let unit = unit.trim();
    if number.is_empty() {
        return Err(invalid(key, format!("`{raw}` is not a number")));
    }
    let exponent = unit_exponent(kind, unit).ok_or_else(|| ConfigError::Unit {
        key: key.to_string(),
        reason: if unit.is_empty() {
            format!("`{raw}` needs {}", unit_label(kind))
        } else {
            format!("unit `{unit}` does not fit; expected {}", unit_label(kind))
        },
    })?;
    let (mantissa, own_exp) = match number.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = number[i + 1..]
                .parse()
                .map_err(|_| invalid(key, format!("`{raw}` is not a number")))?;
            (&number[..i], e)
        }
        None => (number, 0),
    };
    let value: f64 = format!("{mantissa}e{}", own_exp + exponent)
        .parse()
        .map_err(|_| invalid(key, format!("`{raw}` is not a number")))?;
    if !value.is_finite() {
        return Err(invalid(key, "value is not finite"));
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskSpec {
    Circle {
        radius: f64,
    },
    DoubleSlit {
        width: f64,
        separation: f64,
        height: f64,
    },
    Rectangle {
        half_width_x: f64,
        half_width_y: f64,
    },
    /// Loaded from `file` when a command runs; `reference_radius` names the
    /// circle the grid is compared against.
    PixelGrid {
        file: String,
        reference_radius: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSettings {
    pub half_extent: Option<f64>,
    pub samples_per_axis: Option<usize>,
    pub sample_budget: Option<u128>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSettings {
    pub model: DetectorModel,
    /// Flat extra counts per position.
    pub background: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRange {
    pub r_min: f64,
    pub r_max: f64,
    pub step: f64,
    pub pattern: AiryPattern,
}

impl ScanRange {
    /// r_min, r_min + step, … up to r_max. When the span is a whole number of
    /// steps the grid is built as a linspace so that both ends (and zero, for
    /// symmetric ranges) are hit exactly.
    pub fn positions(&self) -> Vec<f64> {
        let span = self.r_max - self.r_min;
        let steps = span / self.step;
        let whole = steps.round();
        if (steps - whole).abs() < 1e-9 * whole.max(1.0) {
            let n = whole as usize;
            (0..=n)
                .map(|i| self.r_min + span * (i as f64 / n as f64))
                .collect()
        } else {
            let n = steps.floor() as usize;
            (0..=n).map(|i| self.r_min + i as f64 * self.step).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub input: Option<String>,
    pub pattern: AiryPattern,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub optical: OpticalConfig,
    pub mask: MaskSpec,
    pub source: BiphotonSource,
    pub quad: QuadSettings,
    pub detector: Option<DetectorSettings>,
    pub scan: ScanRange,
    pub fit: FitSettings,
    pub rms_tolerance: f64,
    pub output_path: Option<String>,
}

pub const DEFAULT_RMS_TOLERANCE: f64 = 1e-3;

enum Value {
    Number(f64),
    Integer(u128),
    Text(String),
}

struct Document {
    entries: BTreeMap<&'static str, Value>,
}

impl Document {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw_line).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                reason: format!("expected `section.key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let &(name, kind) =
                KEYS.iter()
                    .find(|(k, _)| *k == key)
                    .ok_or_else(|| ConfigError::UnknownKey {
                        line: line_no,
                        key: key.to_string(),
                    })?;
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    reason: format!("`{key}` has no value"),
                });
            }
            let parsed = match kind {
                Kind::Text => Value::Text(value.to_string()),
                Kind::Integer => Value::Integer(value.parse().map_err(|_| {
                    invalid(name, format!("`{value}` is not a nonnegative integer"))
                })?),
                _ => Value::Number(parse_quantity(name, kind, value)?),
            };
            if entries.insert(name, parsed).is_some() {
                return Err(ConfigError::DuplicateKey {
                    line: line_no,
                    key: name.to_string(),
                });
            }
        }
        Ok(Self { entries })
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn has_section(&self, prefix: &str) -> bool {
        self.entries.keys().any(|k| k.starts_with(prefix))
    }

    fn number(&self, key: &str) -> Option<f64> {
        match self.entries.get(key) {
            Some(Value::Number(v)) => Some(*v),
            _ => None,
        }
    }

    fn required(&self, key: &str) -> Result<f64, ConfigError> {
        self.number(key)
            .ok_or_else(|| ConfigError::MissingKey(key.to_string()))
    }

    fn integer(&self, key: &str) -> Option<u128> {
        match self.entries.get(key) {
            Some(Value::Integer(v)) => Some(*v),
            _ => None,
        }
    }

    fn text(&self, key: &str) -> Option<&str> {
        match self.entries.get(key) {
            Some(Value::Text(v)) => Some(v),
            _ => None,
        }
    }
}

fn strip_comment(line: &str) -> &str {
    if line.trim_start().starts_with('#') {
        return "";
    }
    match line.find(" #").or_else(|| line.find("\t#")) {
        Some(i) => &line[..i],
        None => line,
    }
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be positive, got {v}")))
    }
}

fn pattern_from(key: &str, text: Option<&str>) -> Result<AiryPattern, ConfigError> {
    match text {
        None | Some("quantum") => Ok(AiryPattern::QuantumAiry),
        Some("classical") => Ok(AiryPattern::ClassicalAiry),
        Some(other) => Err(invalid(
            key,
            format!("expected `quantum` or `classical`, got `{other}`"),
        )),
    }
}

fn pattern_name(p: AiryPattern) -> &'static str {
    match p {
        AiryPattern::QuantumAiry => "quantum",
        AiryPattern::ClassicalAiry => "classical",
    }
}

fn parse_mask(doc: &Document) -> Result<MaskSpec, ConfigError> {
    let shapes: Vec<&str> = [
        "mask.circle.",
        "mask.double_slit.",
        "mask.rectangle.",
        "mask.pixel_grid.",
    ]
    .into_iter()
    .filter(|p| doc.has_section(p))
    .collect();
    match shapes.as_slice() {
        [] => Err(ConfigError::MissingKey("mask.<shape>".into())),
        [one] => match *one {
            "mask.circle." => {
                let radius = match (
                    doc.number("mask.circle.radius"),
                    doc.number("mask.circle.diameter"),
                ) {
                    (Some(r), None) => positive("mask.circle.radius", r)?,
                    (None, Some(d)) => positive("mask.circle.diameter", d)? / 2.0,
                    (Some(_), Some(_)) => {
                        return Err(invalid(
                            "mask.circle",
                            "give either radius or diameter, not both",
                        ))
                    }
                    (None, None) => unreachable!("section present"),
                };
                Ok(MaskSpec::Circle { radius })
            }
            "mask.double_slit." => {
                let width = positive(
                    "mask.double_slit.width",
                    doc.required("mask.double_slit.width")?,
                )?;
                let separation = positive(
                    "mask.double_slit.separation",
                    doc.required("mask.double_slit.separation")?,
                )?;
                let height = positive(
                    "mask.double_slit.height",
                    doc.required("mask.double_slit.height")?,
                )?;
                if width >= separation {
                    return Err(invalid(
                        "mask.double_slit.width",
                        format!("width {width} m must be below the separation {separation} m"),
                    ));
                }
                Ok(MaskSpec::DoubleSlit {
                    width,
                    separation,
                    height,
                })
            }
            "mask.rectangle." => Ok(MaskSpec::Rectangle {
                half_width_x: positive(
                    "mask.rectangle.half_width_x",
                    doc.required("mask.rectangle.half_width_x")?,
                )?,
                half_width_y: positive(
                    "mask.rectangle.half_width_y",
                    doc.required("mask.rectangle.half_width_y")?,
                )?,
            }),
            _ => {
                let file = doc
                    .text("mask.pixel_grid.file")
                    .ok_or_else(|| ConfigError::MissingKey("mask.pixel_grid.file".into()))?
                    .to_string();
                let reference_radius = doc
                    .number("mask.pixel_grid.reference_radius")
                    .map(|r| positive("mask.pixel_grid.reference_radius", r))
                    .transpose()?;
                Ok(MaskSpec::PixelGrid {
                    file,
                    reference_radius,
                })
            }
        },
        _ => Err(invalid(
            "mask",
            format!("more than one shape given: {}", shapes.join(", ")),
        )),
    }
}

fn parse_source(doc: &Document) -> Result<BiphotonSource, ConfigError> {
    let widths = doc.has("source.correlation_width") || doc.has("source.beam_width");
    match doc.text("source.model").unwrap_or("ideal") {
        "ideal" => {
            if widths {
                return Err(invalid(
                    "source.model",
                    "correlation and beam widths only apply to `gaussian`",
                ));
            }
            Ok(BiphotonSource::IdealDelta)
        }
        "gaussian" => {
            let sc = doc.required("source.correlation_width")?;
            let sb = doc.required("source.beam_width")?;
            BiphotonSource::gaussian(sc, sb).map_err(|e| invalid("source", e))
        }
        other => Err(invalid(
            "source.model",
            format!("expected `ideal` or `gaussian`, got `{other}`"),
        )),
    }
}

fn parse_detector(doc: &Document) -> Result<Option<DetectorSettings>, ConfigError> {
    if !doc.has_section("detector.") {
        return Ok(None);
    }
    let defaults = DetectorModel::default();
    let model = DetectorModel {
        pinhole_radius: doc
            .number("detector.pinhole_radius")
            .unwrap_or(defaults.pinhole_radius),
        pair_flux: doc
            .number("detector.pair_flux")
            .unwrap_or(defaults.pair_flux),
        dwell_time: doc
            .number("detector.dwell_time")
            .unwrap_or(defaults.dwell_time),
        coincidence_window: doc
            .number("detector.coincidence_window")
            .unwrap_or(defaults.coincidence_window),
        singles_rate: doc
            .number("detector.singles_rate")
            .unwrap_or(defaults.singles_rate),
        rng_seed: match doc.integer("detector.seed") {
            Some(s) => {
                u64::try_from(s).map_err(|_| invalid("detector.seed", "does not fit in 64 bits"))?
            }
            None => defaults.rng_seed,
        },
    };
    model.validate().map_err(|e| invalid("detector", e))?;
    let background = doc.number("detector.background").unwrap_or(0.0);
    if background < 0.0 {
        return Err(invalid("detector.background", "must be nonnegative"));
    }
    Ok(Some(DetectorSettings { model, background }))
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let doc = Document::parse(text)?;

    let optical = OpticalConfig::new(
        doc.required("optical.wavelength")?,
        doc.required("optical.focal_length")?,
    )
    .map_err(|e| invalid("optical", e))?;

    let mask = parse_mask(&doc)?;
    let source = parse_source(&doc)?;

    let quad = QuadSettings {
        half_extent: doc
            .number("quad.half_extent")
            .map(|v| positive("quad.half_extent", v))
            .transpose()?,
        samples_per_axis: doc
            .integer("quad.samples_per_axis")
            .map(|n| match usize::try_from(n) {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(invalid(
                    "quad.samples_per_axis",
                    "must be a positive integer",
                )),
            })
            .transpose()?,
        sample_budget: doc.integer("quad.sample_budget"),
    };

    let detector = parse_detector(&doc)?;

    let scan = ScanRange {
        r_min: doc.required("scan.r_min")?,
        r_max: doc.required("scan.r_max")?,
        step: positive("scan.step", doc.required("scan.step")?)?,
        pattern: pattern_from("scan.pattern", doc.text("scan.pattern"))?,
    };
    if scan.r_min >= scan.r_max {
        return Err(invalid(
            "scan.r_min",
            format!(
                "r_min {} m must be below r_max {} m",
                scan.r_min, scan.r_max
            ),
        ));
    }

    let fit = FitSettings {
        input: doc.text("fit.input").map(str::to_string),
        pattern: pattern_from("fit.pattern", doc.text("fit.pattern"))?,
        max_iterations: match doc.integer("fit.max_iterations") {
            Some(n) => usize::try_from(n)
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| invalid("fit.max_iterations", "must be a positive integer"))?,
            None => twophoton::FitOptions::default().max_iterations,
        },
    };

    let rms_tolerance = match doc.number("compare.rms_tolerance") {
        Some(t) => positive("compare.rms_tolerance", t)?,
        None => DEFAULT_RMS_TOLERANCE,
    };

    Ok(RunConfig {
        optical,
        mask,
        source,
        quad,
        detector,
        scan,
        fit,
        rms_tolerance,
        output_path: doc.text("output.path").map(str::to_string),
    })
}

/// Serializes a configuration in canonical form (SI units, every set field).
/// `parse_config(&render(c)) == c` for every valid `c`.
pub fn render(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let mut put = |key: &str, value: String| {
        let _ = writeln!(out, "{key} = {value}");
    };
    put(
        "optical.wavelength",
        format!("{:e}m", cfg.optical.wavelength()),
    );
    put(
        "optical.focal_length",
        format!("{:e}m", cfg.optical.focal_length()),
    );
    match &cfg.mask {
        MaskSpec::Circle { radius } => put("mask.circle.radius", format!("{radius:e}m")),
        MaskSpec::DoubleSlit {
            width,
            separation,
            height,
        } => {
            put("mask.double_slit.width", format!("{width:e}m"));
            put("mask.double_slit.separation", format!("{separation:e}m"));
            put("mask.double_slit.height", format!("{height:e}m"));
        }
        MaskSpec::Rectangle {
            half_width_x,
            half_width_y,
        } => {
            put("mask.rectangle.half_width_x", format!("{half_width_x:e}m"));
            put("mask.rectangle.half_width_y", format!("{half_width_y:e}m"));
        }
        MaskSpec::PixelGrid {
            file,
            reference_radius,
        } => {
            put("mask.pixel_grid.file", file.clone());
            if let Some(r) = reference_radius {
                put("mask.pixel_grid.reference_radius", format!("{r:e}m"));
            }
        }
    }
    match cfg.source {
        BiphotonSource::IdealDelta => put("source.model", "ideal".into()),
        BiphotonSource::GaussianCorrelated {
            correlation_width,
            beam_width,
        } => {
            put("source.model", "gaussian".into());
            put(
                "source.correlation_width",
                format!("{correlation_width:e}m"),
            );
            put("source.beam_width", format!("{beam_width:e}m"));
        }
    }
    if let Some(h) = cfg.quad.half_extent {
        put("quad.half_extent", format!("{h:e}m"));
    }
    if let Some(n) = cfg.quad.samples_per_axis {
        put("quad.samples_per_axis", n.to_string());
    }
    if let Some(b) = cfg.quad.sample_budget {
        put("quad.sample_budget", b.to_string());
    }
    if let Some(det) = &cfg.detector {
        let m = &det.model;
        put(
            "detector.pinhole_radius",
            format!("{:e}m", m.pinhole_radius),
        );
        put("detector.pair_flux", format!("{:e}/s", m.pair_flux));
        put("detector.dwell_time", format!("{:e}s", m.dwell_time));
        put(
            "detector.coincidence_window",
            format!("{:e}s", m.coincidence_window),
        );
        put("detector.singles_rate", format!("{:e}/s", m.singles_rate));
        put("detector.seed", m.rng_seed.to_string());
        put("detector.background", format!("{:e}", det.background));
    }
    put("scan.r_min", format!("{:e}m", cfg.scan.r_min));
    put("scan.r_max", format!("{:e}m", cfg.scan.r_max));
    put("scan.step", format!("{:e}m", cfg.scan.step));
    put("scan.pattern", pattern_name(cfg.scan.pattern).into());
    if let Some(input) = &cfg.fit.input {
        put("fit.input", input.clone());
    }
    put("fit.pattern", pattern_name(cfg.fit.pattern).into());
    put("fit.max_iterations", cfg.fit.max_iterations.to_string());
    put("compare.rms_tolerance", format!("{:e}", cfg.rms_tolerance));
    if let Some(p) = &cfg.output_path {
        put("output.path", p.clone());
    }
    out
}

/// Builds the aperture described by `spec`, reading pixel grids from disk.
pub fn load_mask(spec: &MaskSpec) -> anyhow::Result<ApertureMask> {
    use anyhow::Context;
    Ok(match spec {
        MaskSpec::Circle { radius } => ApertureMask::circle(*radius)?,
        MaskSpec::DoubleSlit {
            width,
            separation,
            height,
        } => ApertureMask::double_slit(*width, *separation, *height)?,
        MaskSpec::Rectangle {
            half_width_x,
            half_width_y,
        } => ApertureMask::rectangle(*half_width_x, *half_width_y)?,
        MaskSpec::PixelGrid { file, .. } => {
            let text = std::fs::read_to_string(file)
                .with_context(|| format!("reading pixel grid `{file}`"))?;
            ApertureMask::PixelGrid(
                twophoton::PixelGrid::parse(&text).with_context(|| format!("parsing `{file}`"))?,
            )
        }
    })
}
