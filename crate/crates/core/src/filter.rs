//! Threshold noise filter over RCS, arrival angles and radial velocity.
//!
//! Each point is judged on its own fields only, so a frame is filtered in a
//! single linear pass. Rules run in a fixed order and a rejected point is
//! charged to the first rule it fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::point::{Frame, RadarPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterConfigError {
    #[error("`{0}` is not finite")]
    NonFinite(&'static str),
    #[error("empty interval: {lo_name} = {lo} must be below {hi_name} = {hi}")]
    EmptyInterval {
        lo_name: &'static str,
        hi_name: &'static str,
        lo: f64,
        hi: f64,
    },
    #[error("`{name}` = {value} is outside {bound}")]
    OutOfBounds {
        name: &'static str,
        value: f64,
        bound: &'static str,
    },
}

/// Threshold bounds. Angles in radians; all bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub rcs_min: f64,
    pub rcs_max: f64,
    pub az_min: f64,
    pub az_max: f64,
    pub el_min: f64,
    pub el_max: f64,
    /// Points faster than this (absolute radial velocity) are rejected.
    pub v_abs_max: f64,
    /// Half-width of the near-zero velocity band.
    pub static_band: f64,
    /// Near-zero-velocity points are kept only inside this range window.
    pub static_range_min: f64,
    pub static_range_max: f64,
    pub enable_static_gate: bool,
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterConfigError> {
        for (name, value) in [
            ("rcs_min", self.rcs_min),
            ("rcs_max", self.rcs_max),
            ("az_min", self.az_min),
            ("az_max", self.az_max),
            ("el_min", self.el_min),
            ("el_max", self.el_max),
            ("v_abs_max", self.v_abs_max),
            ("static_band", self.static_band),
            ("static_range_min", self.static_range_min),
            ("static_range_max", self.static_range_max),
        ] {
            if !value.is_finite() {
                return Err(FilterConfigError::NonFinite(name));
            }
        }
        for (lo_name, lo, hi_name, hi) in [
            ("rcs_min", self.rcs_min, "rcs_max", self.rcs_max),
            ("az_min", self.az_min, "az_max", self.az_max),
            ("el_min", self.el_min, "el_max", self.el_max),
            (
                "static_range_min",
                self.static_range_min,
                "static_range_max",
                self.static_range_max,
            ),
        ] {
            if lo >= hi {
                return Err(FilterConfigError::EmptyInterval {
                    lo_name,
                    hi_name,
                    lo,
                    hi,
                });
            }
        }
        if self.v_abs_max <= 0.0 {
            return Err(FilterConfigError::OutOfBounds {
                name: "v_abs_max",
                value: self.v_abs_max,
                bound: "(0, inf)",
            });
        }
        if self.static_band < 0.0 {
            return Err(FilterConfigError::OutOfBounds {
                name: "static_band",
                value: self.static_band,
                bound: "[0, inf)",
            });
        }
        for (name, value) in [("az_min", self.az_min), ("az_max", self.az_max)] {
            if !(-PI..=PI).contains(&value) {
                return Err(FilterConfigError::OutOfBounds {
                    name,
                    value,
                    bound: "[-pi, pi]",
                });
            }
        }
        for (name, value) in [("el_min", self.el_min), ("el_max", self.el_max)] {
            if !(-FRAC_PI_2..=FRAC_PI_2).contains(&value) {
                return Err(FilterConfigError::OutOfBounds {
                    name,
                    value,
                    bound: "[-pi/2, pi/2]",
                });
            }
        }
        Ok(())
    }
}

/// The rule that rejected a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Rcs,
    Angle,
    Velocity,
    StaticVelocity,
}

impl Rule {
    pub const ALL: [Rule; 4] = [Rule::Rcs, Rule::Angle, Rule::Velocity, Rule::StaticVelocity];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Rcs => "rcs",
            Rule::Angle => "angle",
            Rule::Velocity => "velocity",
            Rule::StaticVelocity => "velocity_static",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Reject(Rule),
}

impl Verdict {
    pub fn is_keep(self) -> bool {
        matches!(self, Verdict::Keep)
    }
}

/// Judges a single point.
#[inline]
pub fn point_passes(p: &RadarPoint, cfg: &FilterConfig) -> Verdict {
    if !(cfg.rcs_min <= p.rcs && p.rcs <= cfg.rcs_max) {
        return Verdict::Reject(Rule::Rcs);
    }
    let az_ok = cfg.az_min <= p.azimuth && p.azimuth <= cfg.az_max;
    let el_ok = cfg.el_min <= p.elevation && p.elevation <= cfg.el_max;
    if !(az_ok && el_ok) {
        return Verdict::Reject(Rule::Angle);
    }
    let speed = p.v.abs();
    if speed > cfg.v_abs_max {
        return Verdict::Reject(Rule::Velocity);
    }
    if cfg.enable_static_gate && speed <= cfg.static_band {
        let range = p.range();
        if !(cfg.static_range_min <= range && range <= cfg.static_range_max) {
            return Verdict::Reject(Rule::StaticVelocity);
        }
    }
    Verdict::Keep
}

/// Per-frame tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_count: usize,
    pub kept_count: usize,
    pub rejected: RejectCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RejectCounts {
    pub rcs: usize,
    pub angle: usize,
    pub velocity: usize,
    pub velocity_static: usize,
}

impl RejectCounts {
    pub fn get(&self, rule: Rule) -> usize {
        match rule {
            Rule::Rcs => self.rcs,
            Rule::Angle => self.angle,
            Rule::Velocity => self.velocity,
            Rule::StaticVelocity => self.velocity_static,
        }
    }

    fn bump(&mut self, rule: Rule) {
        match rule {
            Rule::Rcs => self.rcs += 1,
            Rule::Angle => self.angle += 1,
            Rule::Velocity => self.velocity += 1,
            Rule::StaticVelocity => self.velocity_static += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.rcs + self.angle + self.velocity + self.velocity_static
    }
}

/// Filters a frame, keeping survivors in their original order.
pub fn filter_frame(frame: &Frame, cfg: &FilterConfig) -> (Frame, FilterReport) {
    let mut report = FilterReport {
        input_count: frame.points.len(),
        ..Default::default()
    };
    // Grow on demand: survivors are typically a small fraction of the input.
    let mut kept = Vec::new();
    for p in &frame.points {
        match point_passes(p, cfg) {
            Verdict::Keep => kept.push(*p),
            Verdict::Reject(rule) => report.rejected.bump(rule),
        }
    }
    report.kept_count = kept.len();
    (Frame::new(frame.seq, frame.timestamp, kept), report)
}
