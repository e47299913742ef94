//! Exact k-nearest-neighbor search over 3D points.
//!
//! A balanced k-d tree with a bounded max-heap per query. Candidates are
//! ordered by `(squared distance, index)`, so ties resolve to the lower
//! target index and results match an exhaustive scan exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};

const LEAF_SIZE: usize = 8;

/// For each query point, target indices sorted by ascending distance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborGraph {
    pub neighbors: Vec<Vec<usize>>,
}

impl NeighborGraph {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn of(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.index.cmp(&other.index))
    }
}

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

pub struct KdTree<'a> {
    points: &'a [Point],
    order: Vec<usize>,
    root: Node,
}

impl<'a> KdTree<'a> {
    pub fn build(points: &'a [Point]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyTarget);
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        let root = Self::build_node(points, &mut order, 0);
        Ok(Self { points, order, root })
    }

    fn build_node(points: &[Point], order: &mut [usize], offset: usize) -> Node {
        let len = order.len();
        if len <= LEAF_SIZE {
            return Node::Leaf {
                start: offset,
                end: offset + len,
            };
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in order.iter() {
            for a in 0..3 {
                lo[a] = lo[a].min(points[i][a]);
                hi[a] = hi[a].max(points[i][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap();
        let mid = len / 2;
        order.select_nth_unstable_by(mid, |&i, &j| points[i][axis].total_cmp(&points[j][axis]));
        let value = points[order[mid]][axis];
        let (left, right) = order.split_at_mut(mid);
        Node::Split {
            axis,
            value,
            left: Box::new(Self::build_node(points, left, offset)),
            right: Box::new(Self::build_node(points, right, offset + mid)),
        }
    }

    /// Indices of the `k` nearest points to `query`, nearest first.
    pub fn nearest(&self, query: &Point, k: usize) -> Vec<usize> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(&self.root, query, k, &mut heap);
        heap.into_sorted_vec().into_iter().map(|c| c.index).collect()
    }

    fn search(&self, node: &Node, query: &Point, k: usize, heap: &mut BinaryHeap<Candidate>) {
        match node {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start..*end] {
                    let cand = Candidate {
                        dist2: (self.points[i] - query).norm_squared(),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[*axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, k, heap);
                // Equal plane distance may still hide a lower-index tie.
                if heap.len() < k || diff * diff <= heap.peek().unwrap().dist2 {
                    self.search(far, query, k, heap);
                }
            }
        }
    }
}

/// The `k` nearest target points of every query point.
pub fn knn_search(target: &PointCloud, queries: &PointCloud, k: usize) -> Result<NeighborGraph> {
    knn_points(target.points(), queries.points(), k)
}

pub fn knn_points(target: &[Point], queries: &[Point], k: usize) -> Result<NeighborGraph> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let tree = KdTree::build(target)?;
    let neighbors = queries.par_iter().map(|q| tree.nearest(q, k)).collect();
    Ok(NeighborGraph { neighbors })
}

/// Neighbors of every point within its own cloud, excluding the point itself.
pub fn self_neighbors(cloud: &PointCloud, k: usize) -> Result<NeighborGraph> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let k = k.min(cloud.len() - 1);
    if k == 0 {
        return Ok(NeighborGraph {
            neighbors: vec![Vec::new(); cloud.len()],
        });
    }
    let tree = KdTree::build(cloud.points())?;
    let neighbors = cloud
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let mut found = tree.nearest(q, k + 1);
            match found.iter().position(|&j| j == i) {
                Some(pos) => {
                    found.remove(pos);
                }
                None => {
                    found.pop();
                }
            }
            found
        })
        .collect();
    Ok(NeighborGraph { neighbors })
}
