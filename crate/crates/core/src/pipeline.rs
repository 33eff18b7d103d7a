//! Filter → KD-tree → cluster → classify, one frame at a time.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{classify_frame, ClassifyError, Detection, Label};
use crate::cluster::{extract_clusters, ClusterError, Clustering};
use crate::config::PipelineConfig;
use crate::filter::{filter_frame, FilterReport};
use crate::kdtree::KdTree;
use crate::point::Frame;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("clustering failed on frame {seq}: {source}")]
    Cluster { seq: u64, source: ClusterError },
    #[error("classification failed on frame {seq}: {source}")]
    Classify { seq: u64, source: ClassifyError },
}

/// Detections of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDetections {
    pub seq: u64,
    pub detections: Vec<Detection>,
}

impl FrameDetections {
    pub fn pedestrians(&self) -> impl Iterator<Item = &Detection> {
        self.detections.iter().filter(|d| d.label == Label::Pedestrian)
    }
}

/// Per-frame bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub seq: u64,
    pub timestamp: f64,
    /// Filled in by callers that know the scene, e.g. the simulator driver.
    pub dust_level: Option<usize>,
    pub filter: FilterReport,
    pub clusters: usize,
    pub pedestrians: usize,
    /// Wall-clock time of the filter→classify chain, milliseconds.
    pub latency_ms: f64,
}

/// Everything one frame produces.
#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub filtered: Frame,
    pub clustering: Clustering,
    pub detections: FrameDetections,
    pub report: FrameReport,
}

/// Runs the full chain on one frame, timing it.
pub fn process_frame(frame: &Frame, cfg: &PipelineConfig) -> Result<FrameOutput, PipelineError> {
    let seq = frame.seq;
    let start = Instant::now();
    let (filtered, filter_report) = filter_frame(frame, &cfg.filter);
    let tree = KdTree::build(&filtered);
    let clustering = extract_clusters(&filtered, &tree, cfg.cluster.radius, cfg.cluster.min_cluster_size)
        .map_err(|source| PipelineError::Cluster { seq, source })?;
    let detections = classify_frame(&filtered, &clustering, &cfg.classify.rules, cfg.classify.rcs_bin_width)
        .map_err(|source| PipelineError::Classify { seq, source })?;
    let elapsed = start.elapsed();

    let detections = FrameDetections { seq, detections };
    let report = FrameReport {
        seq,
        timestamp: frame.timestamp,
        dust_level: None,
        filter: filter_report,
        clusters: clustering.len(),
        pedestrians: detections.pedestrians().count(),
        latency_ms: duration_ms(elapsed),
    };
    Ok(FrameOutput {
        filtered,
        clustering,
        detections,
        report,
    })
}

pub fn duration_ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOutput {
    pub detections: Vec<FrameDetections>,
    pub reports: Vec<FrameReport>,
}

impl PipelineOutput {
    pub fn latencies_ms(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.latency_ms).collect()
    }
}

/// Processes a stream in order, collecting detections and reports.
pub fn run_pipeline<'a>(
    frames: impl IntoIterator<Item = &'a Frame>,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let mut out = PipelineOutput::default();
    for frame in frames {
        let FrameOutput { detections, report, .. } = process_frame(frame, cfg)?;
        out.detections.push(detections);
        out.reports.push(report);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, SceneSpec};

    #[test]
    fn empty_stream() {
        let out = run_pipeline(&[], &PipelineConfig::shipped_default()).unwrap();
        assert!(out.detections.is_empty());
        assert!(out.reports.is_empty());
    }

    #[test]
    fn single_clean_pedestrian_is_detected_every_frame() {
        let mut spec = SceneSpec::default_scene();
        spec.pedestrians.truncate(1);
        spec.ghosts.enabled = false;
        spec.structure.enabled = false;
        spec.dust_level = 0;
        spec.frame_count = 50;
        let frames: Vec<Frame> = simulate(spec).unwrap().map(|(f, _)| f).collect();
        let out = run_pipeline(&frames, &PipelineConfig::shipped_default()).unwrap();
        for (f, r) in out.detections.iter().zip(&out.reports) {
            assert_eq!(f.pedestrians().count(), 1, "frame {}", f.seq);
            assert_eq!(r.pedestrians, 1);
            assert_eq!(r.filter.input_count, 40);
        }
    }

    #[test]
    fn output_order_follows_input() {
        let mut spec = SceneSpec::default_scene();
        spec.frame_count = 5;
        let frames: Vec<Frame> = simulate(spec).unwrap().map(|(f, _)| f).collect();
        let out = run_pipeline(&frames, &PipelineConfig::shipped_default()).unwrap();
        let seqs: Vec<u64> = out.reports.iter().map(|r| r.seq).collect();
        assert_eq!(seqs, vec![0, 1, 2, 3, 4]);
    }
}
