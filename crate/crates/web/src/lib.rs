//! Browser bindings: simulate a dusty scene, run the chain on one frame with
//! live parameters, and sweep all dust levels. Results cross the boundary as
//! JSON strings.
//!
//! Nothing here reads the clock; `std::time::Instant` is unavailable on
//! `wasm32-unknown-unknown`, so the page times calls itself.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use radar4d::metrics::{evaluate, DEFAULT_MATCH_RADIUS};
use radar4d::sim::simulate_sweep;
use radar4d::{
    classify_frame, extract_clusters, filter_frame, point_passes, simulate, ClusterDescriptor, Frame, FrameDetections,
    FrameReport, GroundTruth, KdTree, Label, PipelineConfig, SceneSpec,
};

#[derive(Serialize)]
struct SceneView {
    room: [f64; 3],
    sensor: [f64; 3],
    fov_azimuth_deg: f64,
    fov_elevation_deg: f64,
    max_range: f64,
    frames: usize,
    dust_level: usize,
}

#[derive(Serialize)]
struct DetectionView {
    id: usize,
    label: Label,
    rule: Option<String>,
    descriptor: ClusterDescriptor,
}

#[derive(Serialize)]
struct FrameView {
    seq: u64,
    dust_level: usize,
    /// `[x, y, z, rcs, v]` per raw point, sensor frame.
    points: Vec<[f64; 5]>,
    /// Simulator provenance per raw point.
    source: Vec<String>,
    kept: Vec<bool>,
    /// Cluster id per raw point, `-1` when filtered out or unclustered.
    cluster: Vec<i64>,
    detections: Vec<DetectionView>,
    truth: Vec<[f64; 3]>,
    rejected: [usize; 4],
}

#[derive(Serialize)]
struct LevelView {
    dust_level: usize,
    raw: f64,
    kept: f64,
    pedestrians: f64,
    truth: f64,
    precision: f64,
    recall: f64,
}

/// State behind the demo page.
#[wasm_bindgen]
pub struct Demo {
    spec: SceneSpec,
    config: PipelineConfig,
    stream: Vec<(Frame, GroundTruth)>,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        let mut spec = SceneSpec::default_scene();
        spec.frame_count = 100;
        let mut demo = Demo {
            spec,
            config: PipelineConfig::shipped_default(),
            stream: Vec::new(),
        };
        demo.regenerate();
        demo
    }

    /// Re-simulates the scene; returns the scene geometry as JSON.
    pub fn simulate(&mut self, dust_level: usize, frames: usize, seed: u64, ghosts: bool) -> Result<String, JsError> {
        let mut spec = self.spec.clone();
        spec.dust_level = dust_level;
        spec.frame_count = frames;
        spec.rng_seed = seed;
        spec.ghosts.enabled = ghosts;
        spec.validate()?;
        self.spec = spec;
        self.regenerate();
        Ok(self.scene_json())
    }

    pub fn scene_json(&self) -> String {
        let s = &self.spec;
        to_json(&SceneView {
            room: [s.room.length, s.room.width, s.room.height],
            sensor: s.sensor.position,
            fov_azimuth_deg: s.sensor.fov_azimuth_deg,
            fov_elevation_deg: s.sensor.fov_elevation_deg,
            max_range: s.sensor.max_range,
            frames: self.stream.len(),
            dust_level: s.dust_level,
        })
    }

    /// Sets the filter gates; angles are symmetric half-widths in degrees.
    pub fn set_filter(
        &mut self,
        rcs_min: f64,
        rcs_max: f64,
        az_half_deg: f64,
        el_half_deg: f64,
        static_gate: bool,
    ) -> Result<(), JsError> {
        let mut cfg = self.config.clone();
        cfg.filter.rcs_min = rcs_min;
        cfg.filter.rcs_max = rcs_max;
        cfg.filter.az_min = -az_half_deg.to_radians();
        cfg.filter.az_max = az_half_deg.to_radians();
        cfg.filter.el_min = -el_half_deg.to_radians();
        cfg.filter.el_max = el_half_deg.to_radians();
        cfg.filter.enable_static_gate = static_gate;
        cfg.validate()?;
        self.config = cfg;
        Ok(())
    }

    pub fn set_cluster(&mut self, radius: f64, min_size: usize) -> Result<(), JsError> {
        let mut cfg = self.config.clone();
        cfg.cluster.radius = radius;
        cfg.cluster.min_cluster_size = min_size;
        cfg.validate()?;
        self.config = cfg;
        Ok(())
    }

    /// Runs filter → cluster → classify on frame `index`.
    pub fn frame_json(&self, index: usize) -> Result<String, JsError> {
        let (frame, truth) = self
            .stream
            .get(index)
            .ok_or_else(|| JsError::new(&format!("frame {index} out of range")))?;
        let (detections, labels, report) = self.run(frame)?;

        let kept: Vec<bool> = frame
            .points
            .iter()
            .map(|p| point_passes(p, &self.config.filter).is_keep())
            .collect();
        let mut cluster = vec![-1; frame.len()];
        let mut filtered = 0;
        for (raw, &k) in kept.iter().enumerate() {
            if k {
                cluster[raw] = labels[filtered].map_or(-1, |c| c as i64);
                filtered += 1;
            }
        }
        let r = report.rejected;
        Ok(to_json(&FrameView {
            seq: frame.seq,
            dust_level: truth.dust_level,
            points: frame.points.iter().map(|p| [p.x, p.y, p.z, p.rcs, p.v]).collect(),
            source: truth.labels.iter().map(|l| l.to_string()).collect(),
            kept,
            cluster,
            detections: detections
                .detections
                .into_iter()
                .map(|d| DetectionView {
                    id: d.cluster_id,
                    label: d.label,
                    rule: d.rule,
                    descriptor: d.descriptor,
                })
                .collect(),
            truth: truth.visible().map(|p| p.position).collect(),
            rejected: [r.rcs, r.angle, r.velocity, r.velocity_static],
        }))
    }

    /// Runs every dust level of the current scene with the current settings
    /// and scores the detections; one row per level.
    pub fn sweep_json(&self, frames_per_level: usize) -> Result<String, JsError> {
        let mut spec = self.spec.clone();
        spec.frame_count = frames_per_level;
        let levels: Vec<usize> = (0..spec.dust.rates.len()).collect();
        let mut detections = Vec::new();
        let mut reports = Vec::new();
        let mut truth = Vec::new();
        for (frame, gt) in simulate_sweep(&spec, &levels)? {
            let (dets, _, filter) = self.run(&frame)?;
            reports.push(FrameReport {
                seq: frame.seq,
                timestamp: frame.timestamp,
                dust_level: Some(gt.dust_level),
                filter,
                clusters: 0,
                pedestrians: dets.pedestrians().count(),
                latency_ms: 0.0,
            });
            detections.push(dets);
            truth.push(gt);
        }
        let summary = evaluate(&detections, &reports, &truth, DEFAULT_MATCH_RADIUS)?;
        let rows: Vec<LevelView> = summary
            .levels
            .iter()
            .map(|l| LevelView {
                dust_level: l.dust_level,
                raw: l.mean_raw_points,
                kept: l.mean_kept_points,
                pedestrians: l.mean_detected_pedestrians,
                truth: l.mean_true_pedestrians,
                precision: l.precision,
                recall: l.recall,
            })
            .collect();
        Ok(to_json(&rows))
    }

    /// The active rule set in evaluation order.
    pub fn rules(&self) -> String {
        self.config.classify.rules.to_string()
    }
}

impl Default for Demo {
    fn default() -> Self {
        Self::new()
    }
}

impl Demo {
    fn regenerate(&mut self) {
        self.stream = simulate(self.spec.clone()).expect("validated scene").collect();
    }

    fn run(&self, frame: &Frame) -> Result<(FrameDetections, Vec<Option<usize>>, radar4d::FilterReport), JsError> {
        let cfg = &self.config;
        let (filtered, report) = filter_frame(frame, &cfg.filter);
        let tree = KdTree::build(&filtered);
        let clustering = extract_clusters(&filtered, &tree, cfg.cluster.radius, cfg.cluster.min_cluster_size)?;
        let detections = classify_frame(&filtered, &clustering, &cfg.classify.rules, cfg.classify.rcs_bin_width)?;
        Ok((
            FrameDetections {
                seq: frame.seq,
                detections,
            },
            clustering.labels,
            report,
        ))
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("view types serialize")
}
