//! HDBSCAN: mutual-reachability MST, single-linkage hierarchy, condensed tree
//! and flat cluster extraction.

use serde::{Deserialize, Serialize};

use super::kdtree::{dist2, KdTree};
use crate::par;

/// Above this many points core distances come from a k-d tree instead of a
/// full distance scan.
pub const BRUTE_FORCE_LIMIT: usize = 50_000;

/// How flat clusters are read off the condensed tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterSelection {
    ExcessOfMass,
    Leaf,
}

/// One edge of the condensed tree. Ids below the point count are points;
/// larger ids are clusters. `lambda` is `1/distance` (`null` in JSON when infinite).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensedRow {
    pub parent: usize,
    pub child: usize,
    pub lambda: f64,
    pub child_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedTree {
    pub n_points: usize,
    pub rows: Vec<CondensedRow>,
    /// Excess-of-mass stability per cluster id, offset by `n_points`.
    pub stability: Vec<f64>,
    /// Selected cluster ids, ascending; flat label `k` is `selected[k]`.
    pub selected: Vec<usize>,
}

/// Flat clustering of a point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    /// Cluster label per point; `None` is noise.
    pub labels: Vec<Option<usize>>,
    /// Membership strength in `[0, 1]`; 0 for noise, positive for members.
    pub probabilities: Vec<f64>,
    /// Stability of each flat cluster.
    pub persistence: Vec<f64>,
    pub tree: CondensedTree,
}

impl Clustering {
    pub fn all_noise(n: usize) -> Self {
        Self {
            labels: vec![None; n],
            probabilities: vec![0.0; n],
            persistence: Vec::new(),
            tree: CondensedTree {
                n_points: n,
                rows: Vec::new(),
                stability: Vec::new(),
                selected: Vec::new(),
            },
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.persistence.len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }
}

fn core_distances<const D: usize>(points: &[[f64; D]], k: usize) -> Vec<f64> {
    let n = points.len();
    let k = k.clamp(1, n);
    if n > BRUTE_FORCE_LIMIT {
        let tree = KdTree::new(points);
        return par::map_slice(points, |p| tree.nearest(p, k).last().map_or(0.0, |c| c.0));
    }
    par::map_slice(points, |p| {
        let mut d: Vec<f64> = points.iter().map(|q| dist2(p, q)).collect();
        let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
        kth.sqrt()
    })
}

/// Prim's algorithm on the implicit complete mutual-reachability graph.
fn mst<const D: usize>(points: &[[f64; D]], core: &[f64]) -> Vec<(usize, usize, f64)> {
    #[derive(Clone, Copy)]
    struct Slot {
        dist: f64,
        from: usize,
        done: bool,
    }
    let n = points.len();
    let mut slots = vec![
        Slot {
            dist: f64::INFINITY,
            from: 0,
            done: false,
        };
        n
    ];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    slots[0].done = true;
    for _ in 1..n {
        let (pc, cc) = (points[current], core[current]);
        par::for_each_chunk_mut(&mut slots, 2048, |start, chunk| {
            for (o, s) in chunk.iter_mut().enumerate() {
                if s.done {
                    continue;
                }
                let j = start + o;
                let mr = dist2(&pc, &points[j]).sqrt().max(cc).max(core[j]);
                if mr < s.dist {
                    s.dist = mr;
                    s.from = current;
                }
            }
        });
        let mut best = (usize::MAX, f64::INFINITY);
        for (j, s) in slots.iter().enumerate() {
            if !s.done && (best.0 == usize::MAX || s.dist < best.1) {
                best = (j, s.dist);
            }
        }
        let j = best.0;
        slots[j].done = true;
        edges.push((slots[j].from, j, slots[j].dist));
        current = j;
    }
    edges
}

struct Linkage {
    /// Merge `k` creates node `n + k` from `(left, right)` at `dist`.
    merges: Vec<(usize, usize, f64)>,
    sizes: Vec<usize>,
}

fn single_linkage(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Linkage {
    edges.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut parent: Vec<usize> = (0..2 * n).collect();
    let mut sizes = vec![1usize; 2 * n];
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut merges = Vec::with_capacity(n - 1);
    for (k, (a, b, d)) in edges.into_iter().enumerate() {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let node = n + k;
        parent[ra] = node;
        parent[rb] = node;
        sizes[node] = sizes[ra] + sizes[rb];
        merges.push((ra, rb, d));
    }
    sizes.truncate(2 * n - 1);
    Linkage { merges, sizes }
}

fn subtree_leaves(link: &Linkage, n: usize, root: usize, out: &mut Vec<usize>, visited: &mut Vec<usize>) {
    let mut stack = vec![root];
    while let Some(x) = stack.pop() {
        visited.push(x);
        if x < n {
            out.push(x);
        } else {
            let (l, r, _) = link.merges[x - n];
            stack.push(r);
            stack.push(l);
        }
    }
}

fn condense(link: &Linkage, n: usize, min_size: usize) -> Vec<CondensedRow> {
    let root = 2 * n - 2;
    let mut relabel = vec![usize::MAX; 2 * n - 1];
    relabel[root] = n;
    let mut next = n + 1;
    let mut ignore = vec![false; 2 * n - 1];
    let mut rows = Vec::new();
    let mut queue = std::collections::VecDeque::from([root]);
    let mut leaves = Vec::new();
    let mut visited = Vec::new();
    while let Some(node) = queue.pop_front() {
        if node < n || ignore[node] {
            continue;
        }
        let (l, r, d) = link.merges[node - n];
        queue.push_back(l);
        queue.push_back(r);
        let lambda = if d > 0.0 { 1.0 / d } else { f64::INFINITY };
        let (ls, rs) = (link.sizes[l], link.sizes[r]);
        let me = relabel[node];
        let mut fall_out = |child: usize, rows: &mut Vec<CondensedRow>, ignore: &mut Vec<bool>| {
            leaves.clear();
            visited.clear();
            subtree_leaves(link, n, child, &mut leaves, &mut visited);
            for &v in &visited {
                ignore[v] = true;
            }
            for &p in &leaves {
                rows.push(CondensedRow {
                    parent: me,
                    child: p,
                    lambda,
                    child_size: 1,
                });
            }
        };
        if ls >= min_size && rs >= min_size {
            for (c, s) in [(l, ls), (r, rs)] {
                relabel[c] = next;
                rows.push(CondensedRow {
                    parent: me,
                    child: next,
                    lambda,
                    child_size: s,
                });
                next += 1;
            }
        } else if ls < min_size && rs < min_size {
            fall_out(l, &mut rows, &mut ignore);
            fall_out(r, &mut rows, &mut ignore);
        } else if ls < min_size {
            relabel[r] = me;
            fall_out(l, &mut rows, &mut ignore);
        } else {
            relabel[l] = me;
            fall_out(r, &mut rows, &mut ignore);
        }
    }
    rows
}

/// Clusters `points` (Euclidean metric) with minimum cluster size
/// `min_cluster_size` and core distances from `min_samples` neighbours
/// (the point itself counts as the first).
pub fn hdbscan_cluster<const D: usize>(
    points: &[[f64; D]],
    min_cluster_size: usize,
    min_samples: usize,
    selection: ClusterSelection,
) -> Clustering {
    let n = points.len();
    let min_cluster_size = min_cluster_size.max(2);
    if n < min_cluster_size || n < 2 {
        return Clustering::all_noise(n);
    }
    let core = core_distances(points, min_samples);
    let link = single_linkage(n, mst(points, &core));
    let rows = condense(&link, n, min_cluster_size);

    let max_id = rows
        .iter()
        .map(|r| if r.child >= n { r.parent.max(r.child) } else { r.parent })
        .max()
        .unwrap_or(n);
    let n_clusters = max_id + 1 - n;
    let mut birth = vec![0.0; n_clusters];
    let mut parent_of = vec![usize::MAX; n_clusters];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    for r in rows.iter().filter(|r| r.child >= n) {
        birth[r.child - n] = r.lambda;
        parent_of[r.child - n] = r.parent;
        children[r.parent - n].push(r.child);
    }
    let mut stability = vec![0.0; n_clusters];
    for r in &rows {
        let b = birth[r.parent - n];
        stability[r.parent - n] += (r.lambda - b) * r.child_size as f64;
    }

    let mut selected = vec![false; n_clusters];
    match selection {
        ClusterSelection::ExcessOfMass => {
            let mut prop = stability.clone();
            for c in (1..n_clusters).rev() {
                let sub: f64 = children[c].iter().map(|&k| prop[k - n]).sum();
                if sub > prop[c] {
                    prop[c] = sub;
                } else {
                    selected[c] = true;
                    let mut stack = children[c].clone();
                    while let Some(k) = stack.pop() {
                        selected[k - n] = false;
                        stack.extend(children[k - n].iter().copied());
                    }
                }
            }
        }
        ClusterSelection::Leaf => {
            for c in 1..n_clusters {
                selected[c] = children[c].is_empty();
            }
        }
    }
    let chosen: Vec<usize> = (0..n_clusters).filter(|&c| selected[c]).collect();
    let mut flat = vec![usize::MAX; n_clusters];
    for (k, &c) in chosen.iter().enumerate() {
        flat[c] = k;
    }

    let mut labels = vec![None; n];
    let mut lambdas = vec![0.0; n];
    for r in rows.iter().filter(|r| r.child < n) {
        lambdas[r.child] = r.lambda;
        let mut c = r.parent - n;
        loop {
            if flat[c] != usize::MAX {
                labels[r.child] = Some(flat[c]);
                break;
            }
            if parent_of[c] == usize::MAX {
                break;
            }
            c = parent_of[c] - n;
        }
    }
    let mut lmax = vec![f64::NEG_INFINITY; chosen.len()];
    for p in 0..n {
        if let Some(k) = labels[p] {
            if lambdas[p].is_finite() {
                lmax[k] = lmax[k].max(lambdas[p]);
            }
        }
    }
    let probabilities = (0..n)
        .map(|p| match labels[p] {
            None => 0.0,
            Some(k) => {
                let b = birth[chosen[k]];
                let v = if lambdas[p].is_infinite() || !(lmax[k] > b) {
                    1.0
                } else {
                    (lambdas[p].min(lmax[k]) - b) / (lmax[k] - b)
                };
                v.clamp(f64::EPSILON, 1.0)
            }
        })
        .collect();

    Clustering {
        labels,
        probabilities,
        persistence: chosen.iter().map(|&c| stability[c]).collect(),
        tree: CondensedTree {
            n_points: n,
            rows,
            stability,
            selected: chosen.iter().map(|&c| c + n).collect(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64) -> (Vec<[f64; 4]>, Vec<Option<usize>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nrm = Normal::new(0.0, 0.02).unwrap();
        let centers = [[0.2, 0.2, 0.5, 0.5], [0.7, 0.3, 0.4, 0.6], [0.4, 0.8, 0.6, 0.3]];
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (k, c) in centers.iter().enumerate() {
            for _ in 0..300 {
                pts.push(std::array::from_fn(|a| c[a] + nrm.sample(&mut rng)));
                truth.push(Some(k));
            }
        }
        for _ in 0..100 {
            pts.push(std::array::from_fn(|_| rng.random::<f64>()));
            truth.push(None);
        }
        (pts, truth)
    }

    #[test]
    fn three_blobs_and_noise() {
        let (pts, truth) = blobs(11);
        let c = hdbscan_cluster(&pts, 50, 50, ClusterSelection::ExcessOfMass);
        assert_eq!(c.n_clusters(), 3);
        for (l, p) in c.labels.iter().zip(&c.probabilities) {
            assert_eq!(l.is_none(), *p == 0.0);
            assert!((0.0..=1.0).contains(p));
        }
        let _ = truth;
    }

    #[test]
    fn too_few_points_is_all_noise() {
        let (pts, _) = blobs(1);
        let c = hdbscan_cluster(&pts[..40], 50, 50, ClusterSelection::ExcessOfMass);
        assert_eq!(c.noise_count(), 40);
    }

    #[test]
    fn leaf_selection_runs() {
        let (pts, _) = blobs(2);
        let c = hdbscan_cluster(&pts, 50, 50, ClusterSelection::Leaf);
        assert!(c.n_clusters() >= 3);
    }

    #[test]
    fn parallel_matches_sequential() {
        let (pts, _) = blobs(5);
        let a = hdbscan_cluster(&pts, 30, 30, ClusterSelection::ExcessOfMass);
        let b = par::with_sequential(|| hdbscan_cluster(&pts, 30, 30, ClusterSelection::ExcessOfMass));
        assert_eq!(a, b);
    }

    #[test]
    fn kd_tree_core_distances_match_scan() {
        let (pts, _) = blobs(9);
        let tree = KdTree::new(&pts);
        let scan = core_distances(&pts, 7);
        for (p, s) in pts.iter().zip(&scan) {
            assert_eq!(tree.nearest(p, 7).last().unwrap().0, *s);
        }
    }
}
