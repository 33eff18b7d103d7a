//! Detection scoring against simulator ground truth and latency statistics.
//!
//! A pedestrian detection matches a visible true pedestrian when its cluster
//! centroid lies within `match_radius` of the true body centre. Matching is
//! greedy, nearest pair first, one-to-one. Precision and recall are computed
//! per frame and then averaged over the frames of each dust level. A frame
//! with no predictions scores precision 1.0 and is counted in
//! `zero_prediction_frames`; a frame with nothing to find scores recall 1.0.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::filter::filter_frame;
use crate::pipeline::{duration_ms, process_frame, FrameDetections, FrameReport, PipelineError};
use crate::point::{distance, Frame, RadarPoint};
use crate::sim::GroundTruth;

pub const DEFAULT_MATCH_RADIUS: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("frame {index}: detections are for seq {detections}, ground truth for seq {truth}")]
    FrameMismatch { index: usize, detections: u64, truth: u64 },
    #[error("{detections} detection frames but {truth} ground-truth frames")]
    LengthMismatch { detections: usize, truth: usize },
    #[error("detection frame {index} has seq {seq}, which has no ground truth")]
    UnknownFrame { index: usize, seq: u64 },
    #[error("match radius {0} must be non-negative")]
    InvalidRadius(f64),
}

/// Outcome of matching one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameScore {
    pub predicted: usize,
    pub truth: usize,
    pub matched: usize,
}

impl FrameScore {
    pub fn precision(&self) -> f64 {
        if self.predicted == 0 {
            1.0
        } else {
            self.matched as f64 / self.predicted as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.truth == 0 {
            1.0
        } else {
            self.matched as f64 / self.truth as f64
        }
    }
}

/// Greedy nearest-first one-to-one matching of predicted to true positions.
pub fn match_frame(predicted: &[[f64; 3]], truth: &[[f64; 3]], match_radius: f64) -> FrameScore {
    let mut pairs = Vec::new();
    for (i, &p) in predicted.iter().enumerate() {
        for (j, &t) in truth.iter().enumerate() {
            let d = distance(p, t);
            if d <= match_radius {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; predicted.len()];
    let mut used_t = vec![false; truth.len()];
    let mut matched = 0;
    for (_, i, j) in pairs {
        if !used_p[i] && !used_t[j] {
            used_p[i] = true;
            used_t[j] = true;
            matched += 1;
        }
    }
    FrameScore {
        predicted: predicted.len(),
        truth: truth.len(),
        matched,
    }
}

/// Scores one frame's pedestrian detections.
pub fn score_frame(detections: &FrameDetections, truth: &GroundTruth, match_radius: f64) -> FrameScore {
    let predicted: Vec<[f64; 3]> = detections.pedestrians().map(|d| d.descriptor.centroid).collect();
    let actual: Vec<[f64; 3]> = truth.visible().map(|p| p.position).collect();
    match_frame(&predicted, &actual, match_radius)
}

/// Nearest-rank percentile of an unsorted sample; `q` in `[0, 100]`.
pub fn percentile(samples: &[f64], q: f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
}

impl LatencyStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.is_empty() {
            return Self {
                p50_ms: f64::NAN,
                p95_ms: f64::NAN,
                p99_ms: f64::NAN,
            };
        }
        Self {
            p50_ms: percentile_sorted(&sorted, 50.0),
            p95_ms: percentile_sorted(&sorted, 95.0),
            p99_ms: percentile_sorted(&sorted, 99.0),
        }
    }
}

/// One row of the evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub dust_level: usize,
    pub frames: usize,
    pub mean_raw_points: f64,
    pub mean_kept_points: f64,
    pub mean_detected_pedestrians: f64,
    pub mean_true_pedestrians: f64,
    pub precision: f64,
    pub recall: f64,
    pub zero_prediction_frames: usize,
    pub latency_p50_ms: f64,
    pub latency_p95_ms: f64,
    pub latency_p99_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalSummary {
    pub levels: Vec<LevelSummary>,
}

impl EvalSummary {
    pub fn level(&self, dust_level: usize) -> Option<&LevelSummary> {
        self.levels.iter().find(|l| l.dust_level == dust_level)
    }

    /// Plain-text block for terminals.
    pub fn render(&self) -> String {
        let mut s = String::from(
            "level frames  raw/frame  kept/frame  ped/frame  true/frame  precision  recall  p50 ms  p95 ms  p99 ms\n",
        );
        for l in &self.levels {
            s.push_str(&format!(
                "{:>5} {:>6} {:>10.1} {:>11.1} {:>10.3} {:>11.3} {:>10.4} {:>7.4} {:>7.3} {:>7.3} {:>7.3}\n",
                l.dust_level,
                l.frames,
                l.mean_raw_points,
                l.mean_kept_points,
                l.mean_detected_pedestrians,
                l.mean_true_pedestrians,
                l.precision,
                l.recall,
                l.latency_p50_ms,
                l.latency_p95_ms,
                l.latency_p99_ms,
            ));
        }
        s
    }
}

#[derive(Default)]
struct Accumulator {
    frames: usize,
    raw: usize,
    kept: usize,
    detected: usize,
    truth: usize,
    precision: f64,
    recall: f64,
    zero_prediction_frames: usize,
    latencies: Vec<f64>,
}

/// Aggregates per-level statistics.
///
/// `detections` may omit frames that had no detections (as a detection table
/// does); `reports` and `truth` must cover the same frames in the same order.
pub fn evaluate(
    detections: &[FrameDetections],
    reports: &[FrameReport],
    truth: &[GroundTruth],
    match_radius: f64,
) -> Result<EvalSummary, EvalError> {
    if match_radius.is_nan() || match_radius < 0.0 {
        return Err(EvalError::InvalidRadius(match_radius));
    }
    if reports.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            detections: reports.len(),
            truth: truth.len(),
        });
    }
    let by_seq: BTreeMap<u64, &FrameDetections> = detections.iter().map(|d| (d.seq, d)).collect();
    for (index, d) in detections.iter().enumerate() {
        if truth.binary_search_by_key(&d.seq, |t| t.seq).is_err() {
            return Err(EvalError::UnknownFrame { index, seq: d.seq });
        }
    }

    let empty = FrameDetections {
        seq: 0,
        detections: Vec::new(),
    };
    let mut levels: BTreeMap<usize, Accumulator> = BTreeMap::new();
    for (index, (report, gt)) in reports.iter().zip(truth).enumerate() {
        if report.seq != gt.seq {
            return Err(EvalError::FrameMismatch {
                index,
                detections: report.seq,
                truth: gt.seq,
            });
        }
        let dets = by_seq.get(&gt.seq).copied().unwrap_or(&empty);
        let score = score_frame(dets, gt, match_radius);
        let acc = levels.entry(gt.dust_level).or_default();
        acc.frames += 1;
        acc.raw += report.filter.input_count;
        acc.kept += report.filter.kept_count;
        acc.detected += score.predicted;
        acc.truth += score.truth;
        acc.precision += score.precision();
        acc.recall += score.recall();
        acc.zero_prediction_frames += usize::from(score.predicted == 0);
        acc.latencies.push(report.latency_ms);
    }

    let levels = levels
        .into_iter()
        .map(|(dust_level, a)| {
            let n = a.frames as f64;
            let lat = LatencyStats::from_samples(&a.latencies);
            LevelSummary {
                dust_level,
                frames: a.frames,
                mean_raw_points: a.raw as f64 / n,
                mean_kept_points: a.kept as f64 / n,
                mean_detected_pedestrians: a.detected as f64 / n,
                mean_true_pedestrians: a.truth as f64 / n,
                precision: a.precision / n,
                recall: a.recall / n,
                zero_prediction_frames: a.zero_prediction_frames,
                latency_p50_ms: lat.p50_ms,
                latency_p95_ms: lat.p95_ms,
                latency_p99_ms: lat.p99_ms,
            }
        })
        .collect();
    Ok(EvalSummary { levels })
}

/// Uniformly scattered points covering a wide slice of every filter gate,
/// for throughput measurements.
pub fn random_frame(rng: &mut impl Rng, seq: u64, points: usize) -> Frame {
    let pts = (0..points)
        .map(|_| {
            let range = rng.random_range(0.0..20.0);
            let az = rng.random_range(-1.4..1.4);
            let el = rng.random_range(-0.6..0.6);
            let rcs = rng.random_range(-60.0..45.0);
            let v = rng.random_range(-12.0..12.0);
            RadarPoint::from_spherical(range, az, el, rcs, v).expect("in-range draw")
        })
        .collect();
    Frame::new(seq, seq as f64 * 0.1, pts)
}

/// Latency of one frame size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub points: usize,
    pub frames: usize,
    pub filter_median_ms: f64,
    pub pipeline: LatencyStats,
}

/// Times the filter alone and the whole chain on random frames of each size.
pub fn bench(sizes: &[usize], frames: usize, seed: u64, cfg: &PipelineConfig) -> Result<Vec<BenchRow>, PipelineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let batch: Vec<Frame> = (0..frames as u64).map(|i| random_frame(&mut rng, i, n)).collect();
        let mut filter_ms = Vec::with_capacity(frames);
        let mut pipeline_ms = Vec::with_capacity(frames);
        for frame in &batch {
            let start = Instant::now();
            let out = filter_frame(frame, &cfg.filter);
            filter_ms.push(duration_ms(start.elapsed()));
            std::hint::black_box(out);
            pipeline_ms.push(process_frame(frame, cfg)?.report.latency_ms);
        }
        rows.push(BenchRow {
            points: n,
            frames,
            filter_median_ms: percentile(&filter_ms, 50.0),
            pipeline: LatencyStats::from_samples(&pipeline_ms),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{ClusterDescriptor, Detection, Label};
    use crate::filter::FilterReport;
    use crate::sim::TruePedestrian;

    fn det(centroid: [f64; 3], label: Label) -> Detection {
        Detection {
            cluster_id: 0,
            label,
            rule: None,
            descriptor: ClusterDescriptor {
                size: 10,
                mean_velocity: 1.0,
                abs_mean_velocity: 1.0,
                mode_rcs: -4.5,
                centroid,
                extent: [0.5, 0.5, 1.6],
                range: 1.0,
            },
        }
    }

    fn truth(seq: u64, positions: &[[f64; 3]]) -> GroundTruth {
        GroundTruth {
            seq,
            dust_level: 0,
            pedestrians: positions
                .iter()
                .enumerate()
                .map(|(id, &position)| TruePedestrian {
                    id,
                    position,
                    in_fov: true,
                })
                .collect(),
            labels: vec![],
        }
    }

    fn report(seq: u64) -> FrameReport {
        FrameReport {
            seq,
            timestamp: seq as f64,
            dust_level: Some(0),
            filter: FilterReport::default(),
            clusters: 0,
            pedestrians: 0,
            latency_ms: 1.0,
        }
    }

    #[test]
    fn perfect_detections_score_one() {
        let pos = [[5.0, 0.6, -0.15], [7.0, -0.6, -0.15]];
        let d = FrameDetections {
            seq: 0,
            detections: pos.iter().map(|&p| det(p, Label::Pedestrian)).collect(),
        };
        let s = evaluate(&[d], &[report(0)], &[truth(0, &pos)], DEFAULT_MATCH_RADIUS).unwrap();
        assert_eq!(s.levels[0].precision, 1.0);
        assert_eq!(s.levels[0].recall, 1.0);
        assert_eq!(s.levels[0].mean_detected_pedestrians, 2.0);
    }

    #[test]
    fn no_detections_means_zero_recall_and_flagged_precision() {
        let s = evaluate(&[], &[report(0)], &[truth(0, &[[5.0, 0.0, 0.0]])], DEFAULT_MATCH_RADIUS).unwrap();
        assert_eq!(s.levels[0].recall, 0.0);
        assert_eq!(s.levels[0].precision, 1.0);
        assert_eq!(s.levels[0].zero_prediction_frames, 1);
    }

    #[test]
    fn non_pedestrian_detections_are_ignored() {
        let d = FrameDetections {
            seq: 0,
            detections: vec![det([5.0, 0.0, 0.0], Label::Clutter)],
        };
        let s = evaluate(&[d], &[report(0)], &[truth(0, &[])], DEFAULT_MATCH_RADIUS).unwrap();
        assert_eq!(s.levels[0].precision, 1.0);
        assert_eq!(s.levels[0].recall, 1.0);
    }

    #[test]
    fn greedy_matching_is_one_to_one() {
        let s = match_frame(&[[0.0; 3], [0.1, 0.0, 0.0]], &[[0.05, 0.0, 0.0]], 1.0);
        assert_eq!(s.matched, 1);
        let s = match_frame(&[[0.0; 3]], &[[0.8, 0.0, 0.0]], 0.75);
        assert_eq!(s.matched, 0);
        // Nearest pair first: prediction 1 takes truth 0, prediction 0 takes truth 1.
        let s = match_frame(&[[0.0; 3], [1.0, 0.0, 0.0]], &[[0.9, 0.0, 0.0], [-0.5, 0.0, 0.0]], 0.75);
        assert_eq!(s.matched, 2);
    }

    #[test]
    fn mismatched_frames_are_rejected() {
        assert!(matches!(
            evaluate(&[], &[report(1)], &[truth(0, &[])], 0.75),
            Err(EvalError::FrameMismatch { .. })
        ));
        assert!(matches!(
            evaluate(&[], &[report(0), report(1)], &[truth(0, &[])], 0.75),
            Err(EvalError::LengthMismatch { .. })
        ));
        let stray = FrameDetections {
            seq: 42,
            detections: vec![],
        };
        assert!(evaluate(&[stray], &[report(0)], &[truth(0, &[])], 0.75).is_err());
    }

    #[test]
    fn percentiles_are_nearest_rank() {
        let xs: Vec<f64> = (1..=100).rev().map(f64::from).collect();
        assert_eq!(percentile(&xs, 50.0), 50.0);
        assert_eq!(percentile(&xs, 95.0), 95.0);
        assert_eq!(percentile(&xs, 100.0), 100.0);
        assert_eq!(percentile(&xs, 0.0), 1.0);
        assert!(percentile(&[], 50.0).is_nan());
        let s = LatencyStats::from_samples(&[3.0, 1.0, 2.0]);
        assert!(s.p50_ms <= s.p95_ms && s.p95_ms <= s.p99_ms);
    }

    #[test]
    fn bench_runs() {
        let rows = bench(&[100, 200], 5, 1, &PipelineConfig::shipped_default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].points, 200);
        assert!(rows.iter().all(|r| r.filter_median_ms >= 0.0));
    }
}
