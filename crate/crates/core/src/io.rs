//! Interchange formats between pipeline stages.
//!
//! Frames are text, one frame per line:
//!
//! ```text
//! seq,timestamp,x,y,z,rcs,v,azimuth_deg,elevation_deg[,x,y,z,...]
//! ```
//!
//! i.e. the sequence number, the timestamp in seconds and a flat run of
//! 7-field points. Angles are degrees on disk and radians in memory. Numbers
//! are written as the shortest decimal that parses back to the same `f64`.
//! Blank lines and lines starting with `#` are ignored.
//!
//! Ground truth is JSON lines, one [`GroundTruth`] per frame. Detections,
//! per-frame reports, cluster labels and evaluation summaries are CSV tables
//! with a header row.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ClusterDescriptor, Detection, Label};
use crate::cluster::Clustering;
use crate::metrics::EvalSummary;
use crate::pipeline::{FrameDetections, FrameReport};
use crate::point::{Frame, PointError, RadarPoint};
use crate::sim::GroundTruth;

pub const FRAME_HEADER: &str = "# seq,timestamp,x,y,z,rcs,v,azimuth_deg,elevation_deg,...";

#[derive(Debug, Error)]
pub enum FrameIoError {
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("line {line}: sequence number {seq} does not follow {previous}")]
    NonMonotonicSeq { line: usize, seq: u64, previous: u64 },
    #[error("line {line}: timestamp {timestamp} is earlier than {previous}")]
    NonMonotonicTimestamp { line: usize, timestamp: f64, previous: f64 },
    #[error("line {line}, point {index}: {source}")]
    InvalidPoint {
        line: usize,
        index: usize,
        source: PointError,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("table error: {0}")]
    Table(#[from] csv::Error),
}

/// Appends `value` in a compact, locale-independent, round-trip-exact form.
fn push_number(out: &mut String, value: f64) {
    let magnitude = value.abs();
    if value == 0.0 || (1e-5..1e16).contains(&magnitude) || !value.is_finite() {
        write!(out, "{value}").unwrap();
    } else {
        write!(out, "{value:e}").unwrap();
    }
}

/// Renders one frame as a line, without the trailing newline.
pub fn format_frame(frame: &Frame) -> String {
    let mut line = String::with_capacity(16 + frame.points.len() * 80);
    write!(line, "{}", frame.seq).unwrap();
    line.push(',');
    push_number(&mut line, frame.timestamp);
    for p in &frame.points {
        for value in [
            p.x,
            p.y,
            p.z,
            p.rcs,
            p.v,
            p.azimuth.to_degrees(),
            p.elevation.to_degrees(),
        ] {
            line.push(',');
            push_number(&mut line, value);
        }
    }
    line
}

/// Parses one frame line. `line_no` is used in error messages only.
pub fn parse_frame(text: &str, line_no: usize) -> Result<Frame, FrameIoError> {
    let err = |detail: String| FrameIoError::Parse { line: line_no, detail };
    let fields: Vec<&str> = text.trim().split(',').map(str::trim).collect();
    if fields.len() < 2 {
        return Err(err("expected at least seq and timestamp".into()));
    }
    let seq: u64 = fields[0]
        .parse()
        .map_err(|_| err(format!("bad sequence number `{}`", fields[0])))?;
    let number = |s: &str| -> Result<f64, FrameIoError> {
        let v: f64 = s.parse().map_err(|_| err(format!("bad number `{s}`")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(err(format!("non-finite number `{s}`")))
        }
    };
    let timestamp = number(fields[1])?;
    let rest = &fields[2..];
    if !rest.len().is_multiple_of(7) {
        return Err(err(format!("{} point fields is not a multiple of 7", rest.len())));
    }
    let mut points = Vec::with_capacity(rest.len() / 7);
    for chunk in rest.chunks_exact(7) {
        let mut v = [0.0; 7];
        for (slot, s) in v.iter_mut().zip(chunk) {
            *slot = number(s)?;
        }
        points.push(RadarPoint {
            x: v[0],
            y: v[1],
            z: v[2],
            rcs: v[3],
            v: v[4],
            // Degree round trips can land one ulp outside the closed ranges.
            azimuth: v[5].to_radians().clamp(-PI, PI),
            elevation: v[6].to_radians().clamp(-FRAC_PI_2, FRAC_PI_2),
        });
    }
    Ok(Frame::new(seq, timestamp, points))
}

/// Streams frames from a line-oriented source, checking ordering and,
/// optionally, point consistency.
pub struct FrameReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    previous: Option<(u64, f64)>,
    angle_tolerance: Option<f64>,
}

impl<R: BufRead> FrameReader<R> {
    pub fn new(source: R) -> Self {
        Self {
            lines: source.lines(),
            line_no: 0,
            previous: None,
            angle_tolerance: None,
        }
    }

    /// Rejects points that fail [`RadarPoint::validate`] at this tolerance.
    pub fn validating(mut self, angle_tolerance: f64) -> Self {
        self.angle_tolerance = Some(angle_tolerance);
        self
    }
}

impl<R: BufRead> Iterator for FrameReader<R> {
    type Item = Result<Frame, FrameIoError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Some(self.check(parse_frame(trimmed, self.line_no)));
        }
    }
}

impl<R> FrameReader<R> {
    fn check(&mut self, frame: Result<Frame, FrameIoError>) -> Result<Frame, FrameIoError> {
        let frame = frame?;
        let line = self.line_no;
        if let Some((seq, timestamp)) = self.previous {
            if frame.seq <= seq {
                return Err(FrameIoError::NonMonotonicSeq {
                    line,
                    seq: frame.seq,
                    previous: seq,
                });
            }
            if frame.timestamp < timestamp {
                return Err(FrameIoError::NonMonotonicTimestamp {
                    line,
                    timestamp: frame.timestamp,
                    previous: timestamp,
                });
            }
        }
        if let Some(tol) = self.angle_tolerance {
            frame
                .validate(tol)
                .map_err(|(index, source)| FrameIoError::InvalidPoint { line, index, source })?;
        }
        self.previous = Some((frame.seq, frame.timestamp));
        Ok(frame)
    }
}

pub fn read_frames<R: BufRead>(source: R) -> FrameReader<R> {
    FrameReader::new(source)
}

/// Writes a header comment followed by one line per frame.
pub fn write_frames<'a, W: Write>(
    sink: &mut W,
    frames: impl IntoIterator<Item = &'a Frame>,
) -> Result<(), FrameIoError> {
    writeln!(sink, "{FRAME_HEADER}")?;
    for frame in frames {
        write_frame(sink, frame)?;
    }
    Ok(())
}

pub fn write_frame<W: Write>(sink: &mut W, frame: &Frame) -> Result<(), FrameIoError> {
    writeln!(sink, "{}", format_frame(frame))?;
    Ok(())
}

pub fn write_ground_truth<W: Write>(sink: &mut W, truth: &GroundTruth) -> Result<(), FrameIoError> {
    serde_json::to_writer(&mut *sink, truth).map_err(std::io::Error::from)?;
    sink.write_all(b"\n")?;
    Ok(())
}

pub fn read_ground_truth<R: BufRead>(source: R) -> Result<Vec<GroundTruth>, FrameIoError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let gt = serde_json::from_str(&line).map_err(|e| FrameIoError::Parse {
            line: i + 1,
            detail: e.to_string(),
        })?;
        out.push(gt);
    }
    Ok(out)
}

/// Flat detection record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub seq: u64,
    pub cluster_id: usize,
    pub label: Label,
    pub rule: String,
    pub size: usize,
    pub mean_velocity: f64,
    pub abs_mean_velocity: f64,
    pub mode_rcs: f64,
    pub centroid_x: f64,
    pub centroid_y: f64,
    pub centroid_z: f64,
    pub extent_x: f64,
    pub extent_y: f64,
    pub extent_z: f64,
    pub range: f64,
}

impl DetectionRow {
    pub fn new(seq: u64, d: &Detection) -> Self {
        let c = &d.descriptor;
        Self {
            seq,
            cluster_id: d.cluster_id,
            label: d.label,
            rule: d.rule.clone().unwrap_or_default(),
            size: c.size,
            mean_velocity: c.mean_velocity,
            abs_mean_velocity: c.abs_mean_velocity,
            mode_rcs: c.mode_rcs,
            centroid_x: c.centroid[0],
            centroid_y: c.centroid[1],
            centroid_z: c.centroid[2],
            extent_x: c.extent[0],
            extent_y: c.extent[1],
            extent_z: c.extent[2],
            range: c.range,
        }
    }

    pub fn into_detection(self) -> Detection {
        Detection {
            cluster_id: self.cluster_id,
            label: self.label,
            rule: (!self.rule.is_empty()).then_some(self.rule),
            descriptor: ClusterDescriptor {
                size: self.size,
                mean_velocity: self.mean_velocity,
                abs_mean_velocity: self.abs_mean_velocity,
                mode_rcs: self.mode_rcs,
                centroid: [self.centroid_x, self.centroid_y, self.centroid_z],
                extent: [self.extent_x, self.extent_y, self.extent_z],
                range: self.range,
            },
        }
    }
}

const DETECTION_COLUMNS: [&str; 15] = [
    "seq",
    "cluster_id",
    "label",
    "rule",
    "size",
    "mean_velocity",
    "abs_mean_velocity",
    "mode_rcs",
    "centroid_x",
    "centroid_y",
    "centroid_z",
    "extent_x",
    "extent_y",
    "extent_z",
    "range",
];

/// Streaming writer for the detection table.
pub struct DetectionWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> DetectionWriter<W> {
    pub fn new(sink: W) -> Result<Self, FrameIoError> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
        inner.write_record(DETECTION_COLUMNS)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, frame: &FrameDetections) -> Result<(), FrameIoError> {
        for d in &frame.detections {
            self.inner.serialize(DetectionRow::new(frame.seq, d))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, FrameIoError> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| FrameIoError::Io(e.into_error()))
    }
}

pub fn write_detections<'a, W: Write>(
    sink: W,
    frames: impl IntoIterator<Item = &'a FrameDetections>,
) -> Result<W, FrameIoError> {
    let mut w = DetectionWriter::new(sink)?;
    for f in frames {
        w.write(f)?;
    }
    w.finish()
}

/// Reads a detection table and regroups it per frame.
///
/// Frames without detections do not appear in the table, so the result holds
/// only sequence numbers that had at least one row.
pub fn read_detections<R: std::io::Read>(source: R) -> Result<Vec<FrameDetections>, FrameIoError> {
    let mut reader = csv::Reader::from_reader(source);
    let mut out: Vec<FrameDetections> = Vec::new();
    for row in reader.deserialize::<DetectionRow>() {
        let row = row?;
        let seq = row.seq;
        match out.last_mut() {
            Some(last) if last.seq == seq => last.detections.push(row.into_detection()),
            _ => out.push(FrameDetections {
                seq,
                detections: vec![row.into_detection()],
            }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ReportRow {
    seq: u64,
    timestamp: f64,
    dust_level: Option<usize>,
    input_points: usize,
    kept_points: usize,
    rejected_rcs: usize,
    rejected_angle: usize,
    rejected_velocity: usize,
    rejected_velocity_static: usize,
    clusters: usize,
    pedestrians: usize,
    latency_ms: f64,
}

/// Streaming writer for the per-frame report table.
pub struct ReportWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ReportWriter<W> {
    pub fn new(sink: W) -> Self {
        Self {
            inner: csv::Writer::from_writer(sink),
        }
    }

    pub fn write(&mut self, r: &FrameReport) -> Result<(), FrameIoError> {
        self.inner.serialize(ReportRow {
            seq: r.seq,
            timestamp: r.timestamp,
            dust_level: r.dust_level,
            input_points: r.filter.input_count,
            kept_points: r.filter.kept_count,
            rejected_rcs: r.filter.rejected.rcs,
            rejected_angle: r.filter.rejected.angle,
            rejected_velocity: r.filter.rejected.velocity,
            rejected_velocity_static: r.filter.rejected.velocity_static,
            clusters: r.clusters,
            pedestrians: r.pedestrians,
            latency_ms: r.latency_ms,
        })?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, FrameIoError> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| FrameIoError::Io(e.into_error()))
    }
}

pub fn write_reports<'a, W: Write>(
    sink: W,
    reports: impl IntoIterator<Item = &'a FrameReport>,
) -> Result<W, FrameIoError> {
    let mut w = ReportWriter::new(sink);
    for r in reports {
        w.write(r)?;
    }
    w.finish()
}

pub fn read_reports<R: std::io::Read>(source: R) -> Result<Vec<FrameReport>, FrameIoError> {
    let mut reader = csv::Reader::from_reader(source);
    reader
        .deserialize::<ReportRow>()
        .map(|row| {
            let r = row?;
            Ok(FrameReport {
                seq: r.seq,
                timestamp: r.timestamp,
                dust_level: r.dust_level,
                filter: crate::filter::FilterReport {
                    input_count: r.input_points,
                    kept_count: r.kept_points,
                    rejected: crate::filter::RejectCounts {
                        rcs: r.rejected_rcs,
                        angle: r.rejected_angle,
                        velocity: r.rejected_velocity,
                        velocity_static: r.rejected_velocity_static,
                    },
                },
                clusters: r.clusters,
                pedestrians: r.pedestrians,
                latency_ms: r.latency_ms,
            })
        })
        .collect()
}

/// Per-point cluster labels: `seq,point,cluster` with an empty cluster for
/// unclustered points.
pub fn write_cluster_labels<W: Write>(
    writer: &mut csv::Writer<W>,
    seq: u64,
    clustering: &Clustering,
) -> Result<(), FrameIoError> {
    for (point, label) in clustering.labels.iter().enumerate() {
        writer.serialize((seq, point, label))?;
    }
    Ok(())
}

pub fn cluster_label_writer<W: Write>(sink: W) -> Result<csv::Writer<W>, FrameIoError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(["seq", "point", "cluster"])?;
    Ok(w)
}

/// One row per dust level.
pub fn write_summary<W: Write>(sink: W, summary: &EvalSummary) -> Result<W, FrameIoError> {
    let mut w = csv::Writer::from_writer(sink);
    for level in &summary.levels {
        w.serialize(level)?;
    }
    w.flush()?;
    w.into_inner().map_err(|e| FrameIoError::Io(e.into_error()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::SIM_ANGLE_TOLERANCE;
    use proptest::prelude::*;

    fn read_all(text: &str) -> Result<Vec<Frame>, FrameIoError> {
        read_frames(text.as_bytes()).collect()
    }

    #[test]
    fn empty_input_gives_no_frames() {
        assert!(read_all("").unwrap().is_empty());
        assert!(read_all("# header only\n\n").unwrap().is_empty());
    }

    #[test]
    fn single_boresight_frame() {
        let frames = read_all("4,0.4,5,0,0,-3,1.5,0,0\n").unwrap();
        let expected = Frame::new(
            4,
            0.4,
            vec![RadarPoint::from_spherical(5.0, 0.0, 0.0, -3.0, 1.5).unwrap()],
        );
        assert_eq!(frames, vec![expected]);
    }

    #[test]
    fn frame_without_points() {
        let frames = read_all("0,0\n1,0.1\n").unwrap();
        assert_eq!(frames.len(), 2);
        assert!(frames[1].is_empty());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match read_all("# h\n0,0\n1,0.1,1,2,3\n") {
            Err(FrameIoError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(read_all("x,0\n"), Err(FrameIoError::Parse { line: 1, .. })));
        assert!(matches!(
            read_all("0,0,1,0,0,0,0,nan,0\n"),
            Err(FrameIoError::Parse { .. })
        ));
    }

    #[test]
    fn sequence_must_increase() {
        match read_all("3,0\n3,0.1\n") {
            Err(FrameIoError::NonMonotonicSeq { line, seq, previous }) => {
                assert_eq!((line, seq, previous), (2, 3, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            read_all("1,0.5\n2,0.4\n"),
            Err(FrameIoError::NonMonotonicTimestamp { line: 2, .. })
        ));
    }

    #[test]
    fn validation_catches_inconsistent_points() {
        let text = "0,0,0,1,0,0,0,0,0\n";
        assert!(read_all(text).is_ok());
        let r: Result<Vec<_>, _> = read_frames(text.as_bytes()).validating(1e-4).collect();
        assert!(matches!(r, Err(FrameIoError::InvalidPoint { line: 1, index: 0, .. })));
    }

    #[test]
    fn extreme_angles_survive_degree_round_trip() {
        let p = RadarPoint::from_cartesian([-1.0, 0.0, 0.0], 0.0, 0.0);
        let q = RadarPoint::from_cartesian([0.0, 0.0, 2.0], 0.0, 0.0);
        let f = Frame::new(0, 0.0, vec![p, q]);
        let back = parse_frame(&format_frame(&f), 1).unwrap();
        assert_eq!(back.validate(SIM_ANGLE_TOLERANCE), Ok(()));
    }

    #[test]
    fn numbers_are_compact() {
        let mut s = String::new();
        for v in [0.0, -0.5, 1e-300, 123456.25, 2e20] {
            push_number(&mut s, v);
            s.push(' ');
        }
        assert_eq!(s, "0 -0.5 1e-300 123456.25 2e20 ");
    }

    #[test]
    fn empty_detection_table_is_header_only() {
        let out = write_detections(Vec::new(), std::iter::empty()).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            format!("{}\n", DETECTION_COLUMNS.join(","))
        );
    }

    #[test]
    fn detection_row_round_trip() {
        let det = Detection {
            cluster_id: 2,
            label: Label::Pedestrian,
            rule: Some("pedestrian".into()),
            descriptor: ClusterDescriptor {
                size: 38,
                mean_velocity: -1.125,
                abs_mean_velocity: 1.125,
                mode_rcs: -4.5,
                centroid: [6.1, -0.6, -0.15],
                extent: [0.49, 0.5, 1.62],
                range: 6.131,
            },
        };
        let frames = vec![FrameDetections {
            seq: 9,
            detections: vec![det],
        }];
        let bytes = write_detections(Vec::new(), &frames).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("9,2,Pedestrian,pedestrian,38,"));
        assert_eq!(read_detections(bytes.as_slice()).unwrap(), frames);
    }

    fn arb_frame() -> impl Strategy<Value = Frame> {
        let point = (prop::array::uniform3(-1e3f64..1e3), -80.0f64..80.0, -50.0f64..50.0)
            .prop_map(|(p, rcs, v)| RadarPoint::from_cartesian(p, rcs, v));
        (0u64..1_000_000, 0.0f64..1e5, prop::collection::vec(point, 0..20))
            .prop_map(|(seq, t, points)| Frame::new(seq, t, points))
    }

    proptest! {
        #[test]
        fn frame_round_trip_within_tolerance(frame in arb_frame()) {
            let back = parse_frame(&format_frame(&frame), 1).unwrap();
            prop_assert_eq!(back.seq, frame.seq);
            prop_assert_eq!(back.timestamp, frame.timestamp);
            prop_assert_eq!(back.len(), frame.len());
            for (a, b) in frame.points.iter().zip(&back.points) {
                // Cartesian fields and rcs/v are exact; angles pass through degrees.
                prop_assert_eq!(a.position(), b.position());
                prop_assert_eq!((a.rcs, a.v), (b.rcs, b.v));
                for (x, y) in [(a.azimuth, b.azimuth), (a.elevation, b.elevation)] {
                    prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-12));
                }
            }
            prop_assert_eq!(back.validate(SIM_ANGLE_TOLERANCE), Ok(()));
        }
    }
}
