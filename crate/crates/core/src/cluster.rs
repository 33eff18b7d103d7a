//! Euclidean connected-component clustering on top of [`KdTree`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kdtree::{KdTree, QueryError};
use crate::point::Frame;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("cluster radius {0} is negative or not a number")]
    NegativeRadius(f64),
    #[error("minimum cluster size must be at least 1")]
    ZeroMinSize,
    #[error("tree indexes {tree} points but the frame has {frame}")]
    TreeMismatch { tree: usize, frame: usize },
}

impl From<QueryError> for ClusterError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::NegativeRadius(r) => ClusterError::NegativeRadius(r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    /// Linking distance, meters (inclusive).
    pub radius: f64,
    pub min_cluster_size: usize,
}

/// Partition of a frame's points into clusters.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Clustering {
    /// Cluster id per point; `None` for points left unclustered.
    pub labels: Vec<Option<usize>>,
    /// Member indices per cluster id, each list ascending. Clusters are
    /// ordered by their lowest member index.
    pub clusters: Vec<Vec<usize>>,
}

impl Clustering {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn unclustered(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.is_none().then_some(i))
    }
}

/// Connected components of the graph linking every pair of points within
/// `radius` of each other. Components smaller than `min_cluster_size` are
/// left unclustered.
pub fn extract_clusters(
    frame: &Frame,
    tree: &KdTree,
    radius: f64,
    min_cluster_size: usize,
) -> Result<Clustering, ClusterError> {
    if radius.is_nan() || radius < 0.0 {
        return Err(ClusterError::NegativeRadius(radius));
    }
    if min_cluster_size == 0 {
        return Err(ClusterError::ZeroMinSize);
    }
    if tree.len() != frame.len() {
        return Err(ClusterError::TreeMismatch {
            tree: tree.len(),
            frame: frame.len(),
        });
    }

    let n = frame.len();
    let mut visited = vec![false; n];
    let mut labels = vec![None; n];
    let mut clusters = Vec::new();
    let mut queue = Vec::new();
    let mut neighbors = Vec::new();

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        queue.clear();
        queue.push(seed);
        let mut head = 0;
        while head < queue.len() {
            let current = queue[head];
            head += 1;
            neighbors.clear();
            tree.radius_neighbors_into(tree.position(current), radius, &mut neighbors)?;
            for &j in &neighbors {
                if !visited[j] {
                    visited[j] = true;
                    queue.push(j);
                }
            }
        }
        if queue.len() >= min_cluster_size {
            let id = clusters.len();
            let mut members = queue.clone();
            members.sort_unstable();
            for &m in &members {
                labels[m] = Some(id);
            }
            clusters.push(members);
        }
    }

    Ok(Clustering { labels, clusters })
}

/// Builds the tree and clusters in one call.
pub fn cluster_frame(frame: &Frame, params: &ClusterParams) -> Result<Clustering, ClusterError> {
    let tree = KdTree::build(frame);
    extract_clusters(frame, &tree, params.radius, params.min_cluster_size)
}
