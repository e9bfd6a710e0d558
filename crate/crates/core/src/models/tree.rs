//! Greedy CART-style tree growth over pre-sorted feature orders.
//!
//! One builder serves three purposes: Gini classification trees (random
//! forest members), squared-error regression trees (gradient boosting) and
//! second-order regularized trees (XGBoost-style boosting). Each row carries a
//! first-order statistic `g`, a second-order statistic `h` and an integer
//! weight; the split objective and leaf rule decide how those are combined.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;

/// Nodes with at least this many (row, feature) pairs are scanned in parallel.
const PARALLEL_WORK: usize = 1 << 16;

/// Splits must improve the objective by more than this.
pub const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SplitObjective {
    /// Weighted Gini impurity decrease; `g` holds the 0/1 label.
    Gini,
    /// Squared-error reduction; `g` holds the response.
    SquaredError,
    /// Regularized second-order gain with leaf penalty `lambda` and split cost `gamma`.
    Regularized { lambda: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LeafRule {
    /// Weighted mean of `g` (class proportion or mean response).
    Mean,
    /// One Newton step `sum(g) / sum(h)`, clipped to `[-clip, clip]`.
    Newton { clip: f64 },
    /// `-sum(g) / (sum(h) + lambda)`.
    Regularized { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub objective: SplitObjective,
    pub leaf: LeafRule,
    /// Features considered per split; `None` means all.
    pub max_features: Option<usize>,
}

impl TreeParams {
    pub fn classification(max_depth: Option<usize>, min_leaf: usize) -> Self {
        TreeParams {
            max_depth,
            min_leaf,
            objective: SplitObjective::Gini,
            leaf: LeafRule::Mean,
            max_features: None,
        }
    }

    pub fn regression(max_depth: Option<usize>, min_leaf: usize) -> Self {
        TreeParams {
            max_depth,
            min_leaf,
            objective: SplitObjective::SquaredError,
            leaf: LeafRule::Mean,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf(value: f64) -> Self {
        DecisionTree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[*feature] < *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Adds each split's gain to its feature's entry.
    pub fn accumulate_gain(&self, importance: &mut [f64]) {
        for n in &self.nodes {
            if let Node::Split { feature, gain, .. } = n {
                importance[*feature] += gain;
            }
        }
    }

    pub fn uses_feature(&self, j: usize) -> bool {
        self.nodes
            .iter()
            .any(|n| matches!(n, Node::Split { feature, .. } if *feature == j))
    }
}

/// Row order of every column, sorted by value then row index. Built once per
/// matrix and shared by every tree grown on it.
#[derive(Debug, Clone)]
pub struct Presorted {
    orders: Vec<Vec<u32>>,
    /// Column-major copy of the matrix for cache-friendly scans.
    columns: Vec<Vec<f64>>,
}

impl Presorted {
    pub fn new(x: &Matrix) -> Self {
        let columns: Vec<Vec<f64>> = (0..x.n_cols()).into_par_iter().map(|j| x.column(j)).collect();
        let orders = columns
            .par_iter()
            .map(|col| {
                let mut o: Vec<u32> = (0..x.n_rows() as u32).collect();
                o.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                o
            })
            .collect();
        Presorted { orders, columns }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeStats {
    pub w: f64,
    pub g: f64,
    pub h: f64,
}

impl NodeStats {
    fn add(&mut self, w: f64, g: f64, h: f64) {
        self.w += w;
        self.g += w * g;
        self.h += w * h;
    }

    fn minus(self, o: NodeStats) -> NodeStats {
        NodeStats {
            w: self.w - o.w,
            g: self.g - o.g,
            h: self.h - o.h,
        }
    }
}

fn gini_impurity_mass(s: NodeStats) -> f64 {
    // w * 2p(1-p) with p = g / w
    2.0 * (s.g - s.g * s.g / s.w)
}

pub fn split_gain(objective: SplitObjective, left: NodeStats, right: NodeStats) -> f64 {
    let parent = NodeStats {
        w: left.w + right.w,
        g: left.g + right.g,
        h: left.h + right.h,
    };
    match objective {
        SplitObjective::Gini => {
            gini_impurity_mass(parent) - gini_impurity_mass(left) - gini_impurity_mass(right)
        }
        SplitObjective::SquaredError => {
            left.g * left.g / left.w + right.g * right.g / right.w - parent.g * parent.g / parent.w
        }
        SplitObjective::Regularized { lambda, gamma } => {
            regularized_split_gain(left.g, left.h, right.g, right.h, lambda, gamma)
        }
    }
}

/// `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − (G_L+G_R)²/(H_L+H_R+λ)] − γ`
pub fn regularized_split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma
}

/// Optimal leaf weight `−G/(H+λ)`.
pub fn regularized_leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda)
}

pub fn leaf_value(rule: LeafRule, s: NodeStats) -> f64 {
    match rule {
        LeafRule::Mean => {
            if s.w > 0.0 {
                s.g / s.w
            } else {
                0.0
            }
        }
        LeafRule::Newton { clip } => {
            if s.h > 0.0 {
                (s.g / s.h).clamp(-clip, clip)
            } else if s.g == 0.0 {
                0.0
            } else {
                clip.copysign(s.g)
            }
        }
        LeafRule::Regularized { lambda } => regularized_leaf_weight(s.g, s.h, lambda),
    }
}

/// Per-row training statistics.
#[derive(Debug, Clone, Copy)]
pub struct RowStats<'a> {
    pub g: &'a [f64],
    pub h: &'a [f64],
    /// Multiplicity of each row; zero drops it (bootstrap / subsampling).
    pub weight: &'a [u32],
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Task {
    node: usize,
    start: usize,
    end: usize,
    depth: usize,
}

pub fn grow_tree<R: Rng>(
    x: &Matrix,
    presorted: &Presorted,
    stats: RowStats<'_>,
    params: &TreeParams,
    pool: Option<&[usize]>,
    rng: &mut R,
) -> DecisionTree {
    let p = x.n_cols();
    let all_features: Vec<usize> = (0..p).collect();
    let pool = pool.unwrap_or(&all_features);
    let mut orders: Vec<Vec<u32>> = presorted
        .orders
        .iter()
        .map(|o| o.iter().copied().filter(|&r| stats.weight[r as usize] > 0).collect())
        .collect();
    let n_in = orders.first().map_or_else(
        || stats.weight.iter().filter(|&&w| w > 0).count(),
        |o| o.len(),
    );

    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut goes_left = vec![false; x.n_rows()];
    let mut scratch: Vec<u32> = Vec::with_capacity(n_in);
    let mut stack = vec![Task {
        node: 0,
        start: 0,
        end: n_in,
        depth: 0,
    }];

    // rows of the node in original order, for stats when there are no features
    let all_rows: Vec<u32> = (0..x.n_rows() as u32).filter(|&r| stats.weight[r as usize] > 0).collect();

    while let Some(task) = stack.pop() {
        let rows: &[u32] = if p > 0 {
            &orders[0][task.start..task.end]
        } else {
            &all_rows[task.start..task.end]
        };
        let mut node_stats = NodeStats::default();
        for &r in rows {
            let r = r as usize;
            node_stats.add(stats.weight[r] as f64, stats.g[r], stats.h[r]);
        }

        let can_split = !pool.is_empty()
            && params.max_depth.is_none_or(|d| task.depth < d)
            && node_stats.w >= 2.0 * params.min_leaf.max(1) as f64;
        let best = if can_split {
            let features = candidate_features(pool, params.max_features, rng);
            best_split(&presorted.columns, &orders, &features, task.start, task.end, stats, params)
        } else {
            None
        };

        let Some(best) = best else {
            nodes[task.node] = Node::Leaf {
                value: leaf_value(params.leaf, node_stats),
            };
            continue;
        };

        let column = &presorted.columns[best.feature];
        let mut n_left = 0;
        for &r in &orders[best.feature][task.start..task.end] {
            let left = column[r as usize] < best.threshold;
            goes_left[r as usize] = left;
            n_left += usize::from(left);
        }
        // stable partition of every feature order around the split
        let partition = |order: &mut Vec<u32>, scratch: &mut Vec<u32>| {
            let seg = &mut order[task.start..task.end];
            scratch.clear();
            let mut write = 0;
            for k in 0..seg.len() {
                let r = seg[k];
                if goes_left[r as usize] {
                    seg[write] = r;
                    write += 1;
                } else {
                    scratch.push(r);
                }
            }
            seg[write..].copy_from_slice(scratch);
        };
        if (task.end - task.start) * orders.len() >= PARALLEL_WORK {
            orders.par_iter_mut().for_each_init(Vec::new, |buf, order| partition(order, buf));
        } else {
            for order in orders.iter_mut() {
                partition(order, &mut scratch);
            }
        }

        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[task.node] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            gain: best.gain,
            left,
            right,
        };
        let mid = task.start + n_left;
        stack.push(Task {
            node: right,
            start: mid,
            end: task.end,
            depth: task.depth + 1,
        });
        stack.push(Task {
            node: left,
            start: task.start,
            end: mid,
            depth: task.depth + 1,
        });
    }
    DecisionTree { nodes }
}

fn candidate_features<R: Rng>(pool: &[usize], max_features: Option<usize>, rng: &mut R) -> Vec<usize> {
    match max_features {
        Some(m) if m < pool.len() => {
            let mut f: Vec<usize> = rand::seq::index::sample(rng, pool.len(), m.max(1))
                .into_iter()
                .map(|k| pool[k])
                .collect();
            f.sort_unstable();
            f
        }
        _ => pool.to_vec(),
    }
}

fn best_split(
    columns: &[Vec<f64>],
    orders: &[Vec<u32>],
    features: &[usize],
    start: usize,
    end: usize,
    stats: RowStats<'_>,
    params: &TreeParams,
) -> Option<Candidate> {
    let mut total = NodeStats::default();
    for &r in &orders[0][start..end] {
        let r = r as usize;
        total.add(stats.weight[r] as f64, stats.g[r], stats.h[r]);
    }
    let scan = |j: usize| best_split_on(&columns[j], &orders[j][start..end], j, total, stats, params);
    let per_feature: Vec<Option<Candidate>> = if (end - start) * features.len() >= PARALLEL_WORK {
        features.par_iter().map(|&j| scan(j)).collect()
    } else {
        features.iter().map(|&j| scan(j)).collect()
    };
    // strictly greater gain wins, so ties keep the earliest feature
    let mut best: Option<Candidate> = None;
    for c in per_feature.into_iter().flatten() {
        if best.is_none_or(|b| c.gain > b.gain) {
            best = Some(c);
        }
    }
    best
}

/// Best threshold on one feature; ties keep the lowest threshold.
fn best_split_on(
    column: &[f64],
    seg: &[u32],
    j: usize,
    total: NodeStats,
    stats: RowStats<'_>,
    params: &TreeParams,
) -> Option<Candidate> {
    let min_leaf = params.min_leaf.max(1) as f64;
    let mut best: Option<Candidate> = None;
    let mut left = NodeStats::default();
    for k in 0..seg.len().saturating_sub(1) {
        let r = seg[k] as usize;
        left.add(stats.weight[r] as f64, stats.g[r], stats.h[r]);
        let a = column[r];
        let b = column[seg[k + 1] as usize];
        if !(a < b) {
            continue;
        }
        let right = total.minus(left);
        if left.w < min_leaf || right.w < min_leaf {
            continue;
        }
        let gain = split_gain(params.objective, left, right);
        if gain > MIN_GAIN && best.is_none_or(|c| gain > c.gain) {
            let mut threshold = a + (b - a) / 2.0;
            if !(a < threshold) {
                threshold = b;
            }
            best = Some(Candidate {
                feature: j,
                threshold,
                gain,
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn grow(x: &Matrix, g: &[f64], params: &TreeParams) -> DecisionTree {
        let h = vec![1.0; g.len()];
        let w = vec![1u32; g.len()];
        grow_tree(
            x,
            &Presorted::new(x),
            RowStats { g, h: &h, weight: &w },
            params,
            None,
            &mut rng::stream(0, &[]),
        )
    }

    fn one_d(xs: &[f64]) -> Matrix {
        Matrix::new(vec!["x".into()], xs.to_vec(), xs.len()).unwrap()
    }

    #[test]
    fn separable_data_gives_one_split() {
        let xs = [-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
        let y: Vec<f64> = xs.iter().map(|&v| if v < 0.0 { 0.0 } else { 1.0 }).collect();
        let t = grow(&one_d(&xs), &y, &TreeParams::classification(None, 1));
        assert_eq!(t.depth(), 1);
        match &t.nodes[0] {
            Node::Split { threshold, .. } => assert!(*threshold > -0.5 && *threshold <= 0.0),
            _ => panic!("expected a split"),
        }
        for (v, yy) in xs.iter().zip(&y) {
            assert_eq!(t.predict_row(&[*v]), *yy);
        }
    }

    #[test]
    fn constant_target_is_single_leaf() {
        let t = grow(&one_d(&[1.0, 2.0, 3.0]), &[1.0, 1.0, 1.0], &TreeParams::classification(None, 1));
        assert_eq!(t, DecisionTree::leaf(1.0));
    }

    #[test]
    fn min_leaf_equal_to_rows_gives_base_rate() {
        let t = grow(&one_d(&[1.0, 2.0, 3.0, 4.0]), &[0.0, 0.0, 1.0, 1.0], &TreeParams::classification(None, 4));
        assert_eq!(t, DecisionTree::leaf(0.5));
    }

    #[test]
    fn depth_limit_is_respected() {
        let xs: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..64).map(|i| ((i / 3) % 2) as f64).collect();
        let t = grow(&one_d(&xs), &y, &TreeParams::classification(Some(3), 1));
        assert!(t.depth() <= 3);
    }

    #[test]
    fn leaf_formulas() {
        assert_eq!(regularized_leaf_weight(2.0, 3.0, 1.0), -0.5);
        let s = NodeStats { w: 2.0, g: 1.0, h: 0.0 };
        assert_eq!(leaf_value(LeafRule::Newton { clip: 4.0 }, s), 4.0);
        let s = NodeStats { w: 2.0, g: -30.0, h: 1.0 };
        assert_eq!(leaf_value(LeafRule::Newton { clip: 4.0 }, s), -4.0);
    }

    #[test]
    fn zero_weight_rows_are_ignored() {
        let x = one_d(&[0.0, 1.0, 2.0, 3.0]);
        let g = [0.0, 0.0, 1.0, 1.0];
        let h = [1.0; 4];
        let w = [1, 1, 0, 0];
        let t = grow_tree(&x, &Presorted::new(&x), RowStats { g: &g, h: &h, weight: &w }, &TreeParams::classification(None, 1), None, &mut rng::stream(0, &[]));
        assert_eq!(t, DecisionTree::leaf(0.0));
    }
}
