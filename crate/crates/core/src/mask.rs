//! Binary aperture masks P(r₀) and their closed-form Fourier transforms.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::geometry::{ComplexAmplitude, TransverseVector};
use crate::special::{j1, sinc};

/// Binary transmittance mask placed at the front focal plane.
///
/// Every shape is centered on the optical axis except pixel grids, which
/// carry their own origin.
#[derive(Debug, Clone, PartialEq)]
pub enum ApertureMask {
    Circle {
        radius: f64,
    },
    /// Two slits of width `slit_width` whose centers sit at x = ±separation/2,
    /// each `height` tall.
    DoubleSlit {
        slit_width: f64,
        separation: f64,
        height: f64,
    },
    Rectangle {
        half_width_x: f64,
        half_width_y: f64,
    },
    PixelGrid(PixelGrid),
}

impl ApertureMask {
    pub fn circle(radius: f64) -> Result<Self> {
        Ok(Self::Circle {
            radius: ensure_positive("radius", radius)?,
        })
    }

    pub fn double_slit(slit_width: f64, separation: f64, height: f64) -> Result<Self> {
        let slit_width = ensure_positive("slit_width", slit_width)?;
        let separation = ensure_positive("separation", separation)?;
        let height = ensure_positive("height", height)?;
        if slit_width >= separation {
            return Err(Error::InvalidParameter {
                name: "slit_width",
                reason: format!("slits overlap: width {slit_width} >= separation {separation}"),
            });
        }
        Ok(Self::DoubleSlit {
            slit_width,
            separation,
            height,
        })
    }

    pub fn rectangle(half_width_x: f64, half_width_y: f64) -> Result<Self> {
        Ok(Self::Rectangle {
            half_width_x: ensure_positive("half_width_x", half_width_x)?,
            half_width_y: ensure_positive("half_width_y", half_width_y)?,
        })
    }

    pub fn shape_name(&self) -> &'static str {
        match self {
            Self::Circle { .. } => "circle",
            Self::DoubleSlit { .. } => "double_slit",
            Self::Rectangle { .. } => "rectangle",
            Self::PixelGrid(_) => "pixel_grid",
        }
    }

    /// P(r₀) ∈ {0, 1}. Boundaries count as transparent.
    pub fn transmittance(&self, r0: TransverseVector) -> u8 {
        u8::from(self.is_open(r0.x(), r0.y()))
    }

    pub(crate) fn is_open(&self, x: f64, y: f64) -> bool {
        match *self {
            Self::Circle { radius } => x * x + y * y <= radius * radius,
            Self::DoubleSlit {
                slit_width,
                separation,
                height,
            } => {
                let half_w = 0.5 * slit_width;
                let c = 0.5 * separation;
                y.abs() <= 0.5 * height && ((x - c).abs() <= half_w || (x + c).abs() <= half_w)
            }
            Self::Rectangle {
                half_width_x,
                half_width_y,
            } => x.abs() <= half_width_x && y.abs() <= half_width_y,
            Self::PixelGrid(ref grid) => grid.lookup(x, y),
        }
    }

    /// Largest |x| or |y| reachable by a transparent point.
    pub fn extent(&self) -> f64 {
        match *self {
            Self::Circle { radius } => radius,
            Self::DoubleSlit {
                slit_width,
                separation,
                height,
            } => (0.5 * (separation + slit_width)).max(0.5 * height),
            Self::Rectangle {
                half_width_x,
                half_width_y,
            } => half_width_x.max(half_width_y),
            Self::PixelGrid(ref grid) => grid.extent(),
        }
    }

    /// Radius of a disk containing the whole support.
    pub fn support_radius(&self) -> f64 {
        match *self {
            Self::Circle { radius } => radius,
            Self::DoubleSlit {
                slit_width,
                separation,
                height,
            } => (0.5 * (separation + slit_width)).hypot(0.5 * height),
            Self::Rectangle {
                half_width_x,
                half_width_y,
            } => half_width_x.hypot(half_width_y),
            Self::PixelGrid(ref grid) => grid.support_radius(),
        }
    }

    /// P̃(q) = ∫ P(r₀) exp(−i q·r₀) d²r₀ for the analytic shapes.
    pub fn fourier_analytic(&self, q: TransverseVector) -> Result<ComplexAmplitude> {
        let value = match *self {
            Self::Circle { radius } => {
                let qn = q.norm();
                if qn == 0.0 {
                    PI * radius * radius
                } else {
                    2.0 * PI * radius * j1(qn * radius) / qn
                }
            }
            Self::DoubleSlit {
                slit_width,
                separation,
                height,
            } => {
                let fringe = 2.0 * (0.5 * q.x() * separation).cos();
                let along_x = slit_width * sinc(0.5 * q.x() * slit_width);
                let along_y = height * sinc(0.5 * q.y() * height);
                along_x * fringe * along_y
            }
            Self::Rectangle {
                half_width_x,
                half_width_y,
            } => {
                4.0 * half_width_x
                    * half_width_y
                    * sinc(q.x() * half_width_x)
                    * sinc(q.y() * half_width_y)
            }
            Self::PixelGrid(_) => return Err(Error::UnsupportedShape("pixel_grid")),
        };
        Ok(Complex64::new(value, 0.0))
    }
}

/// Rasterized binary mask.
///
/// `origin` is the lower-left corner of the grid. Row 0 is the bottom row
/// (smallest y) and is the first data line of the text format.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    pitch: f64,
    origin: (f64, f64),
    cells: Vec<bool>,
}

impl PixelGrid {
    pub fn new(
        width: usize,
        height: usize,
        pitch: f64,
        origin: (f64, f64),
        cells: Vec<bool>,
    ) -> Result<Self> {
        let pitch = ensure_positive("pitch", pitch)?;
        ensure_finite("origin_x", origin.0)?;
        ensure_finite("origin_y", origin.1)?;
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter {
                name: "width",
                reason: "grid must have at least one pixel".into(),
            });
        }
        if cells.len() != width * height {
            return Err(Error::InvalidParameter {
                name: "cells",
                reason: format!("expected {} cells, got {}", width * height, cells.len()),
            });
        }
        Ok(Self {
            width,
            height,
            pitch,
            origin,
            cells,
        })
    }

    /// Grid of `n × n` pixels centered on the axis, opening every pixel whose
    /// center satisfies `open`.
    pub fn rasterize(n: usize, pitch: f64, open: impl Fn(f64, f64) -> bool) -> Result<Self> {
        let half = 0.5 * n as f64 * pitch;
        let mut cells = Vec::with_capacity(n * n);
        for j in 0..n {
            let y = -half + (j as f64 + 0.5) * pitch;
            for i in 0..n {
                let x = -half + (i as f64 + 0.5) * pitch;
                cells.push(open(x, y));
            }
        }
        Self::new(n, n, pitch, (-half, -half), cells)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    /// Transparent area in m².
    pub fn open_area(&self) -> f64 {
        self.cells.iter().filter(|&&c| c).count() as f64 * self.pitch * self.pitch
    }

    fn lookup(&self, x: f64, y: f64) -> bool {
        let fi = ((x - self.origin.0) / self.pitch).floor();
        let fj = ((y - self.origin.1) / self.pitch).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.width as f64 || fj >= self.height as f64 {
            return false;
        }
        self.cells[fj as usize * self.width + fi as usize]
    }

    fn corners(&self) -> [(f64, f64); 4] {
        let (x0, y0) = self.origin;
        let x1 = x0 + self.width as f64 * self.pitch;
        let y1 = y0 + self.height as f64 * self.pitch;
        [(x0, y0), (x1, y0), (x0, y1), (x1, y1)]
    }

    fn extent(&self) -> f64 {
        self.corners()
            .iter()
            .map(|(x, y)| x.abs().max(y.abs()))
            .fold(0.0, f64::max)
    }

    fn support_radius(&self) -> f64 {
        self.corners()
            .iter()
            .map(|(x, y)| x.hypot(*y))
            .fold(0.0, f64::max)
    }

    /// Parses the text format:
    ///
    /// ```text
    /// width height pitch_meters origin_x_meters origin_y_meters
    /// 0110
    /// 1111
    /// ```
    ///
    /// followed by `height` lines of exactly `width` characters from `{0, 1}`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::GridParse {
            line: 1,
            reason: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::GridParse {
                line: 1,
                reason: format!("header needs 5 fields, found {}", fields.len()),
            });
        }
        let bad = |what: &str, v: &str| Error::GridParse {
            line: 1,
            reason: format!("invalid {what} `{v}`"),
        };
        let width: usize = fields[0].parse().map_err(|_| bad("width", fields[0]))?;
        let height: usize = fields[1].parse().map_err(|_| bad("height", fields[1]))?;
        let pitch: f64 = fields[2].parse().map_err(|_| bad("pitch", fields[2]))?;
        let ox: f64 = fields[3].parse().map_err(|_| bad("origin_x", fields[3]))?;
        let oy: f64 = fields[4].parse().map_err(|_| bad("origin_y", fields[4]))?;

        let mut cells = Vec::with_capacity(width.saturating_mul(height));
        for row in 0..height {
            let line_no = row + 2;
            let line = lines.next().ok_or(Error::GridParse {
                line: line_no,
                reason: format!("expected {height} rows, found {row}"),
            })?;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.len() != width {
                return Err(Error::GridParse {
                    line: line_no,
                    reason: format!("expected {width} characters, found {}", line.len()),
                });
            }
            for ch in line.chars() {
                cells.push(match ch {
                    '1' => true,
                    '0' => false,
                    other => {
                        return Err(Error::GridParse {
                            line: line_no,
                            reason: format!("unexpected character `{other}`"),
                        })
                    }
                });
            }
        }
        if let Some((i, extra)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::GridParse {
                line: height + 2 + i,
                reason: format!("trailing data `{extra}`"),
            });
        }
        Self::new(width, height, pitch, (ox, oy), cells).map_err(|e| Error::GridParse {
            line: 1,
            reason: e.to_string(),
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height + 64);
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            self.width, self.height, self.pitch, self.origin.0, self.origin.1
        );
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|&c| if c { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }
}
