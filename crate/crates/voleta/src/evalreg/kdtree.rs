//! Exact nearest-neighbor queries over 3D points.
//!
//! Median-split k-d tree with branch-and-bound descent. Queries return the
//! true nearest point (no approximation), which the Chamfer and ICP layers
//! rely on; the test suite cross-checks against a brute-force scan.

use nalgebra::Point3;

const LEAF_SIZE: usize = 16;

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Immutable spatial index over a point set. Safe for concurrent queries.
pub struct KdTree3 {
    points: Vec<Point3<f64>>,
    /// permutation of the input indices, partitioned by the tree
    order: Vec<u32>,
    nodes: Vec<Node>,
    root: usize,
}

impl KdTree3 {
    /// Build from a nonempty point set.
    pub fn build(points: &[Point3<f64>]) -> Self {
        assert!(!points.is_empty(), "k-d tree needs at least one point");
        let points = points.to_vec();
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        let root = build_node(&points, &mut order, 0, points.len(), &mut nodes);
        Self {
            points,
            order,
            nodes,
            root,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and squared distance of the nearest point to `q`.
    pub fn nearest(&self, q: &Point3<f64>) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.descend(self.root, q, &mut best);
        best
    }

    /// Euclidean distance from `q` to its nearest point.
    pub fn nearest_distance(&self, q: &Point3<f64>) -> f64 {
        self.nearest(q).1.sqrt()
    }

    fn descend(&self, node: usize, q: &Point3<f64>, best: &mut (usize, f64)) {
        match &self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start..*end] {
                    let d2 = (self.points[i as usize] - q).norm_squared();
                    if d2 < best.1 {
                        *best = (i as usize, d2);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = q[*axis] - value;
                let (near, far) = if delta <= 0.0 { (*left, *right) } else { (*right, *left) };
                self.descend(near, q, best);
                if delta * delta < best.1 {
                    self.descend(far, q, best);
                }
            }
        }
    }
}

fn build_node(
    points: &[Point3<f64>],
    order: &mut Vec<u32>,
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let span = &mut order[start..end];
    if span.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return nodes.len() - 1;
    }

    // split on the widest axis at the median
    let mut lo = points[span[0] as usize];
    let mut hi = lo;
    for &i in span.iter() {
        let p = points[i as usize];
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let extents = [hi.x - lo.x, hi.y - lo.y, hi.z - lo.z];
    let axis = (0..3)
        .max_by(|&a, &b| extents[a].total_cmp(&extents[b]))
        .unwrap();
    if extents[axis] == 0.0 {
        // all points coincide; no split can make progress
        nodes.push(Node::Leaf { start, end });
        return nodes.len() - 1;
    }

    let mid = span.len() / 2;
    span.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis].total_cmp(&points[b as usize][axis])
    });
    let value = points[span[mid] as usize][axis];

    let left = build_node(points, order, start, start + mid, nodes);
    let right = build_node(points, order, start + mid, end, nodes);
    nodes.push(Node::Split {
        axis,
        value,
        left,
        right,
    });
    nodes.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_cloud(n: usize, seed: u64) -> Vec<Point3<f64>> {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).max(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n)
            .map(|_| Point3::new(next() * 4.0 - 2.0, next() * 4.0 - 2.0, next() * 4.0 - 2.0))
            .collect()
    }

    fn brute_force(q: &Point3<f64>, pts: &[Point3<f64>]) -> f64 {
        pts.iter()
            .map(|p| (p - q).norm_squared())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn matches_brute_force_on_random_clouds() {
        for seed in 1..=4u64 {
            let target = pseudo_cloud(2000, seed);
            let queries = pseudo_cloud(500, seed + 100);
            let tree = KdTree3::build(&target);
            for q in &queries {
                let (_, d2) = tree.nearest(q);
                let expect = brute_force(q, &target);
                assert!(
                    (d2 - expect).abs() <= 1e-12,
                    "kd {d2} vs brute {expect} for {q:?}"
                );
            }
        }
    }

    #[test]
    fn self_queries_return_zero() {
        let pts = pseudo_cloud(300, 9);
        let tree = KdTree3::build(&pts);
        for (i, p) in pts.iter().enumerate() {
            let (j, d2) = tree.nearest(p);
            assert_eq!(d2, 0.0);
            assert_eq!(pts[j], pts[i]);
        }
    }

    #[test]
    fn coincident_points_do_not_recurse_forever() {
        let pts = vec![Point3::new(1.0, 2.0, 3.0); 100];
        let tree = KdTree3::build(&pts);
        let (_, d2) = tree.nearest(&Point3::new(0.0, 0.0, 0.0));
        assert!((d2 - 14.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_tree() {
        let tree = KdTree3::build(&[Point3::new(1.0, 0.0, 0.0)]);
        assert_eq!(tree.nearest_distance(&Point3::origin()), 1.0);
    }
}
