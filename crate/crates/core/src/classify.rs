//! Cluster descriptors and rule-based labelling.
//!
//! A rule is a conjunction of closed intervals over descriptor fields. Rules
//! are tried in ascending priority and the first one that holds labels the
//! cluster; a class that needs a disjunction gets several rules.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::Clustering;
use crate::point::Frame;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("cluster has no members")]
    EmptyCluster,
    #[error("member index {index} out of range for a frame of {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("rcs bin width {0} must be positive and finite")]
    InvalidBinWidth(f64),
    #[error("clustering covers {labels} points but the frame has {frame}")]
    MismatchedClustering { labels: usize, frame: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleSetError {
    #[error("rule `{rule}`: interval for `{field}` has lo {lo} > hi {hi}")]
    InvertedInterval {
        rule: String,
        field: &'static str,
        lo: f64,
        hi: f64,
    },
    #[error("rule `{rule}`: interval for `{field}` contains NaN")]
    NanBound { rule: String, field: &'static str },
    #[error("priority {0} is used by more than one rule")]
    DuplicatePriority(u32),
    #[error("rule name `{0}` is used more than once")]
    DuplicateName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Pedestrian,
    Clutter,
    Unknown,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Pedestrian => "Pedestrian",
            Label::Clutter => "Clutter",
            Label::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-cluster semantics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterDescriptor {
    pub size: usize,
    /// Arithmetic mean of the members' signed radial velocity.
    pub mean_velocity: f64,
    pub abs_mean_velocity: f64,
    /// Centre of the most populated RCS histogram bin.
    pub mode_rcs: f64,
    pub centroid: [f64; 3],
    /// Axis-aligned bounding-box dimensions.
    pub extent: [f64; 3],
    /// Distance of the centroid from the sensor.
    pub range: f64,
}

impl ClusterDescriptor {
    pub fn horizontal_extent(&self) -> f64 {
        self.extent[0].max(self.extent[1])
    }
}

/// Bin index of an RCS value; bins are `[k·w, (k+1)·w)`.
fn rcs_bin(rcs: f64, bin_width: f64) -> i64 {
    (rcs / bin_width).floor() as i64
}

/// Computes the descriptor of one cluster. The result does not depend on the
/// order of `members`.
pub fn describe_cluster(frame: &Frame, members: &[usize], bin_width: f64) -> Result<ClusterDescriptor, ClassifyError> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(ClassifyError::InvalidBinWidth(bin_width));
    }
    if members.is_empty() {
        return Err(ClassifyError::EmptyCluster);
    }
    let len = frame.points.len();
    if let Some(&index) = members.iter().find(|&&i| i >= len) {
        return Err(ClassifyError::IndexOutOfRange { index, len });
    }

    // Accumulate in index order so floating-point sums are reproducible.
    let mut sorted = members.to_vec();
    sorted.sort_unstable();

    let mut sum = [0.0; 3];
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut v_sum = 0.0;
    let mut histogram: BTreeMap<i64, usize> = BTreeMap::new();
    for &i in &sorted {
        let p = &frame.points[i];
        for (axis, value) in p.position().into_iter().enumerate() {
            sum[axis] += value;
            lo[axis] = lo[axis].min(value);
            hi[axis] = hi[axis].max(value);
        }
        v_sum += p.v;
        *histogram.entry(rcs_bin(p.rcs, bin_width)).or_default() += 1;
    }

    let n = sorted.len() as f64;
    let centroid = sum.map(|s| s / n);
    // Guard against rounding pushing the mean outside the member span.
    let centroid = [0, 1, 2].map(|a| centroid[a].clamp(lo[a], hi[a]));
    let extent = [0, 1, 2].map(|a| hi[a] - lo[a]);
    let mean_velocity = v_sum / n;

    // BTreeMap iterates bins ascending; strict `>` keeps the lower bin on ties.
    let mut mode_bin = 0;
    let mut mode_count = 0;
    for (&bin, &count) in &histogram {
        if count > mode_count {
            mode_bin = bin;
            mode_count = count;
        }
    }

    Ok(ClusterDescriptor {
        size: sorted.len(),
        mean_velocity,
        abs_mean_velocity: mean_velocity.abs(),
        mode_rcs: (mode_bin as f64 + 0.5) * bin_width,
        centroid,
        extent,
        range: crate::point::norm(centroid),
    })
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// One conjunction of interval constraints. Absent fields are unconstrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassRule {
    pub name: String,
    pub label: Label,
    /// Lower values are tried first.
    pub priority: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<Interval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_mean_velocity: Option<Interval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_rcs: Option<Interval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent_z: Option<Interval>,
    /// Constrains `max(extent_x, extent_y)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizontal_extent: Option<Interval>,
}

impl ClassRule {
    fn constraints(&self) -> [(&'static str, Option<Interval>); 5] {
        [
            ("size", self.size),
            ("abs_mean_velocity", self.abs_mean_velocity),
            ("mode_rcs", self.mode_rcs),
            ("extent_z", self.extent_z),
            ("horizontal_extent", self.horizontal_extent),
        ]
    }

    pub fn matches(&self, d: &ClusterDescriptor) -> bool {
        let values = [
            d.size as f64,
            d.abs_mean_velocity,
            d.mode_rcs,
            d.extent[2],
            d.horizontal_extent(),
        ];
        self.constraints()
            .iter()
            .zip(values)
            .all(|((_, interval), value)| interval.is_none_or(|i| i.contains(value)))
    }
}

impl fmt::Display for ClassRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (priority {}) -> {}:", self.name, self.priority, self.label)?;
        let mut any = false;
        for (field, interval) in self.constraints() {
            if let Some(i) = interval {
                write!(f, "{} {field} in {i}", if any { " AND" } else { "" })?;
                any = true;
            }
        }
        if !any {
            f.write_str(" always")?;
        }
        Ok(())
    }
}

/// Validated rules, kept sorted by priority.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RuleSet {
    rules: Vec<ClassRule>,
}

impl RuleSet {
    pub fn new(mut rules: Vec<ClassRule>) -> Result<Self, RuleSetError> {
        let mut priorities = HashSet::new();
        let mut names = HashSet::new();
        for rule in &rules {
            for (field, interval) in rule.constraints() {
                let Some(i) = interval else { continue };
                if i.lo.is_nan() || i.hi.is_nan() {
                    return Err(RuleSetError::NanBound {
                        rule: rule.name.clone(),
                        field,
                    });
                }
                if i.lo > i.hi {
                    return Err(RuleSetError::InvertedInterval {
                        rule: rule.name.clone(),
                        field,
                        lo: i.lo,
                        hi: i.hi,
                    });
                }
            }
            if !priorities.insert(rule.priority) {
                return Err(RuleSetError::DuplicatePriority(rule.priority));
            }
            if !names.insert(rule.name.as_str()) {
                return Err(RuleSetError::DuplicateName(rule.name.clone()));
            }
        }
        rules.sort_by_key(|r| r.priority);
        Ok(Self { rules })
    }

    pub fn rules(&self) -> &[ClassRule] {
        &self.rules
    }
}

impl<'de> Deserialize<'de> for RuleSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rules = Vec::<ClassRule>::deserialize(deserializer)?;
        RuleSet::new(rules).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        writeln!(f, "otherwise -> {}", Label::Unknown)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub cluster_id: usize,
    pub label: Label,
    pub descriptor: ClusterDescriptor,
    /// Name of the rule that fired, `None` for [`Label::Unknown`].
    pub rule: Option<String>,
}

pub fn classify_cluster(cluster_id: usize, descriptor: ClusterDescriptor, rules: &RuleSet) -> Detection {
    match rules.rules().iter().find(|r| r.matches(&descriptor)) {
        Some(rule) => Detection {
            cluster_id,
            label: rule.label,
            descriptor,
            rule: Some(rule.name.clone()),
        },
        None => Detection {
            cluster_id,
            label: Label::Unknown,
            descriptor,
            rule: None,
        },
    }
}

/// One detection per cluster, in cluster-id order.
pub fn classify_frame(
    frame: &Frame,
    clustering: &Clustering,
    rules: &RuleSet,
    bin_width: f64,
) -> Result<Vec<Detection>, ClassifyError> {
    if clustering.labels.len() != frame.len() {
        return Err(ClassifyError::MismatchedClustering {
            labels: clustering.labels.len(),
            frame: frame.len(),
        });
    }
    clustering
        .clusters
        .iter()
        .enumerate()
        .map(|(id, members)| {
            let descriptor = describe_cluster(frame, members, bin_width).map_err(|e| match e {
                ClassifyError::IndexOutOfRange { .. } => ClassifyError::MismatchedClustering {
                    labels: clustering.labels.len(),
                    frame: frame.len(),
                },
                other => other,
            })?;
            Ok(classify_cluster(id, descriptor, rules))
        })
        .collect()
}
