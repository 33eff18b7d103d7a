//! Balanced 3-D KD-tree with exact inclusive radius queries.
//!
//! The tree is stored implicitly: `order` is a permutation of point indices
//! where the node of a sub-range `[lo, hi)` sits at its midpoint, the left
//! subtree occupies `[lo, mid)` and the right `[mid + 1, hi)`. The split axis
//! cycles x, y, z with depth.

use std::cmp::Ordering;

use thiserror::Error;

use crate::point::{distance, Frame};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QueryError {
    #[error("search radius {0} is negative or not a number")]
    NegativeRadius(f64),
}

#[derive(Debug, Clone)]
pub struct KdTree {
    positions: Vec<[f64; 3]>,
    order: Vec<usize>,
}

impl KdTree {
    /// Builds the index over every point of the frame.
    pub fn build(frame: &Frame) -> Self {
        Self::from_positions(frame.points.iter().map(|p| p.position()).collect())
    }

    pub fn from_positions(positions: Vec<[f64; 3]>) -> Self {
        let mut order: Vec<usize> = (0..positions.len()).collect();
        split(&positions, &mut order, 0);
        Self { positions, order }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, index: usize) -> [f64; 3] {
        self.positions[index]
    }

    /// All indices `j` with `distance(position(j), center) <= radius`, ascending.
    pub fn radius_neighbors(&self, center: [f64; 3], radius: f64) -> Result<Vec<usize>, QueryError> {
        let mut out = Vec::new();
        self.radius_neighbors_into(center, radius, &mut out)?;
        out.sort_unstable();
        Ok(out)
    }

    /// Appends matches to `out` in tree order (unsorted).
    pub fn radius_neighbors_into(&self, center: [f64; 3], radius: f64, out: &mut Vec<usize>) -> Result<(), QueryError> {
        if radius.is_nan() || radius < 0.0 {
            return Err(QueryError::NegativeRadius(radius));
        }
        self.search(center, radius, 0, self.order.len(), 0, out);
        Ok(())
    }

    fn search(&self, center: [f64; 3], radius: f64, lo: usize, hi: usize, depth: usize, out: &mut Vec<usize>) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                if distance(self.positions[i], center) <= radius {
                    out.push(i);
                }
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let node = self.order[mid];
        let pivot = self.positions[node];
        let axis = depth % 3;
        if distance(pivot, center) <= radius {
            out.push(node);
        }
        // Lower bound on the distance from `center` to anything across the
        // split plane, computed with the same float ops as `distance` so the
        // pruning never drops a point that `distance` would accept.
        let mut on_plane = center;
        on_plane[axis] = pivot[axis];
        let plane_gap = distance(on_plane, center);
        let (near, far) = if center[axis] < pivot[axis] {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(center, radius, near.0, near.1, depth + 1, out);
        if plane_gap <= radius {
            self.search(center, radius, far.0, far.1, depth + 1, out);
        }
    }
}

fn compare(positions: &[[f64; 3]], axis: usize, a: usize, b: usize) -> Ordering {
    positions[a][axis].total_cmp(&positions[b][axis]).then(a.cmp(&b))
}

fn split(positions: &[[f64; 3]], order: &mut [usize], depth: usize) {
    if order.len() <= LEAF_SIZE {
        return;
    }
    let axis = depth % 3;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| compare(positions, axis, a, b));
    let (left, rest) = order.split_at_mut(mid);
    split(positions, left, depth + 1);
    split(positions, &mut rest[1..], depth + 1);
}
