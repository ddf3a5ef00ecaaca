use std::collections::BinaryHeap;

/// Static k-d tree over a borrowed point set, for k-nearest-neighbour queries.
pub struct KdTree<'a, const D: usize> {
    points: &'a [[f64; D]],
    /// Point indices permuted so every node owns a contiguous range.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

struct Node {
    lo: usize,
    hi: usize,
    axis: usize,
    split: f64,
    children: Option<(usize, usize)>,
}

const LEAF_SIZE: usize = 16;

#[derive(PartialEq)]
struct Cand(f64, usize);

impl Eq for Cand {}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

pub(crate) fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl<'a, const D: usize> KdTree<'a, D> {
    pub fn new(points: &'a [[f64; D]]) -> Self {
        let mut tree = Self {
            points,
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    fn build(&mut self, lo: usize, hi: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            axis: 0,
            split: 0.0,
            children: None,
        });
        if hi - lo <= LEAF_SIZE {
            return id;
        }
        let mut spread = [(f64::INFINITY, f64::NEG_INFINITY); D];
        for &i in &self.order[lo..hi] {
            for (a, s) in spread.iter_mut().enumerate() {
                s.0 = s.0.min(self.points[i][a]);
                s.1 = s.1.max(self.points[i][a]);
            }
        }
        let axis = (0..D)
            .max_by(|&a, &b| (spread[a].1 - spread[a].0).total_cmp(&(spread[b].1 - spread[b].0)))
            .unwrap_or(0);
        let mid = lo + (hi - lo) / 2;
        let pts = self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]));
        let split = pts[self.order[mid]][axis];
        let left = self.build(lo, mid);
        let right = self.build(mid, hi);
        let n = &mut self.nodes[id];
        n.axis = axis;
        n.split = split;
        n.children = Some((left, right));
        id
    }

    /// The `k` nearest points to `q` (including `q` itself if it is in the set),
    /// as `(distance, index)` sorted by distance.
    pub fn nearest(&self, q: &[f64; D], k: usize) -> Vec<(f64, usize)> {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Cand> = BinaryHeap::with_capacity(k + 1);
        self.search(0, q, k, &mut heap);
        let mut out: Vec<(f64, usize)> = heap.into_iter().map(|c| (c.0.sqrt(), c.1)).collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    fn search(&self, node: usize, q: &[f64; D], k: usize, heap: &mut BinaryHeap<Cand>) {
        let n = &self.nodes[node];
        match n.children {
            None => {
                for &i in &self.order[n.lo..n.hi] {
                    let d = dist2(q, &self.points[i]);
                    if heap.len() < k {
                        heap.push(Cand(d, i));
                    } else if d < heap.peek().map_or(f64::INFINITY, |c| c.0) {
                        heap.pop();
                        heap.push(Cand(d, i));
                    }
                }
            }
            Some((l, r)) => {
                let diff = q[n.axis] - n.split;
                let (near, far) = if diff < 0.0 { (l, r) } else { (r, l) };
                self.search(near, q, k, heap);
                let worst = if heap.len() < k {
                    f64::INFINITY
                } else {
                    heap.peek().map_or(f64::INFINITY, |c| c.0)
                };
                if diff * diff <= worst {
                    self.search(far, q, k, heap);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<[f64; 3]> = (0..700).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let tree = KdTree::new(&pts);
        for q in pts.iter().take(50) {
            let got: Vec<f64> = tree.nearest(q, 9).iter().map(|c| c.0).collect();
            let mut all: Vec<f64> = pts.iter().map(|p| dist2(q, p).sqrt()).collect();
            all.sort_by(f64::total_cmp);
            assert_eq!(got, all[..9].to_vec());
        }
    }

    #[test]
    fn empty_and_small() {
        let pts: Vec<[f64; 2]> = vec![];
        assert!(KdTree::new(&pts).nearest(&[0.0, 0.0], 3).is_empty());
        let pts = vec![[0.0, 0.0], [1.0, 0.0]];
        assert_eq!(KdTree::new(&pts).nearest(&[0.9, 0.0], 5).len(), 2);
    }
}
