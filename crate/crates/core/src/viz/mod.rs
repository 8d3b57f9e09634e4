//! Deterministic SVG figures built from engine outputs.
//!
//! Renderers only map numbers to geometry; every statistic they show was
//! computed by the engine. Output is byte-identical for identical inputs:
//! fixed attribute order, two-decimal coordinates, no timestamps. Each
//! document starts with a provenance comment carrying seed, draw count and
//! as-of date.

mod bars;
mod density;
mod parliaments;
mod svg;
mod timeline;

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ingest::Rgb;

pub use bars::{render_classic_bars, render_poe_bars, PoeBar};
pub use density::{render_forecast_ridgeline, render_ridgeline, render_seat_density};
pub use parliaments::render_parliaments;
pub use timeline::{render_fan_chart, render_poe_timeline};

/// Vertical scale of the PoE timeline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoeAxis {
    /// Logit of the probability, clamped to [1%, 99%] for positioning.
    #[default]
    Logit,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Theme {
    pub width: u32,
    pub height: u32,
    pub font_family: String,
    pub font_size: u32,
    pub background: Rgb,
    pub text: Rgb,
    pub axis: Rgb,
    pub majority: Rgb,
    pub ci_bar: Rgb,
    pub subset: Rgb,
    pub quartile: Rgb,
    pub quartile_dash: String,
    pub poe_axis: PoeAxis,
}

impl Default for Theme {
    fn default() -> Self {
        Theme {
            width: 800,
            height: 480,
            font_family: "Helvetica, Arial, sans-serif".into(),
            font_size: 12,
            background: Rgb(0xff, 0xff, 0xff),
            text: Rgb(0x22, 0x22, 0x22),
            axis: Rgb(0x55, 0x55, 0x55),
            majority: Rgb(0x2b, 0x6c, 0xb0),
            ci_bar: Rgb(0xf2, 0x8e, 0x2b),
            subset: Rgb(0xd3, 0xd3, 0xd3),
            quartile: Rgb(0x80, 0x80, 0x80),
            quartile_dash: "6 4".into(),
            poe_axis: PoeAxis::Logit,
        }
    }
}

impl Theme {
    pub fn validate(&self) -> crate::Result<()> {
        if self.width == 0 || self.height == 0 || self.font_size == 0 {
            return Err(crate::Error::Parameter("theme dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Run parameters embedded in every figure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub m: usize,
    pub as_of: NaiveDate,
}

/// A complete SVG 1.1 document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SvgDocument(String);

impl SvgDocument {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for SvgDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Inner plotting rectangle.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Frame {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl Frame {
    pub fn inset(theme: &Theme, left: f64, top: f64, right: f64, bottom: f64) -> Self {
        let (w, h) = (f64::from(theme.width), f64::from(theme.height));
        Frame { left, top, width: (w - left - right).max(1.0), height: (h - top - bottom).max(1.0) }
    }

    pub fn right(&self) -> f64 {
        self.left + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.top + self.height
    }

    /// x position of `t` in [0, 1], clamped to the frame.
    pub fn x(&self, t: f64) -> f64 {
        self.left + t.clamp(0.0, 1.0) * self.width
    }

    /// y position of `t` in [0, 1] (0 at the bottom), clamped to the frame.
    pub fn y(&self, t: f64) -> f64 {
        self.bottom() - t.clamp(0.0, 1.0) * self.height
    }
}

fn date_label(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}
