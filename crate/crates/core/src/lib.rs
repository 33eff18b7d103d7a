//! Streaming perception for 4D mmWave radar point clouds in cluttered,
//! dusty enclosed spaces.
//!
//! The chain per frame is: threshold noise filter ([`filter`]) →
//! KD-tree ([`kdtree`]) → Euclidean clustering ([`cluster`]) → descriptor
//! and rule-based classification ([`classify`]). [`sim`] generates
//! ground-truth-labelled scenes, [`metrics`] scores detections against them,
//! and [`io`] / [`config`] define the on-disk formats.

pub mod classify;
pub mod cluster;
pub mod config;
pub mod filter;
pub mod io;
pub mod kdtree;
pub mod metrics;
pub mod pipeline;
pub mod point;
pub mod sim;

pub use classify::{
    classify_cluster, classify_frame, describe_cluster, ClassRule, ClusterDescriptor, Detection, Interval, Label,
    RuleSet,
};
pub use cluster::{cluster_frame, extract_clusters, ClusterParams, Clustering};
pub use config::PipelineConfig;
pub use filter::{filter_frame, point_passes, FilterConfig, FilterReport, Rule, Verdict};
pub use kdtree::KdTree;
pub use metrics::{evaluate, EvalSummary};
pub use pipeline::{process_frame, run_pipeline, FrameDetections, FrameReport};
pub use point::{Frame, RadarPoint};
pub use sim::{mirror_ghost, simulate, GroundTruth, Provenance, SceneSpec, Simulator};
