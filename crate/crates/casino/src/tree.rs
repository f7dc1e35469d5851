//! Regression tree with greedy variance-reduction splits.
//!
//! Split candidates are midpoints between consecutive distinct feature
//! values; the chosen split minimizes the summed squared error of the two
//! children, with ties broken by lowest feature index then lowest
//! threshold. Nodes stop at `max_depth`, `min_samples_leaf`, or zero
//! variance.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            max_depth: 8,
            min_samples_leaf: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
        n: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub root: Node,
    pub n_features: usize,
    pub params: CartParams,
}

/// One step of a decision path, for prediction breakdowns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub feature: usize,
    pub threshold: f64,
    pub went_left: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub total_sse: f64,
}

fn mean(y: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64
}

fn all_equal(y: &[f64], idx: &[usize]) -> bool {
    let first = y[idx[0]];
    idx.iter().all(|&i| y[i] == first)
}

/// Exhaustive-within-candidates best split via prefix sums.
pub fn best_split(
    x: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitChoice> {
    let n = idx.len();
    if n < 2 * min_samples_leaf.max(1) {
        return None;
    }
    let n_features = x[idx[0]].len();
    let mut best: Option<SplitChoice> = None;
    let mut sorted = idx.to_vec();
    for f in 0..n_features {
        sorted.sort_by(|&a, &b| x[a][f].partial_cmp(&x[b][f]).unwrap());
        let mut prefix_sum = vec![0.0; n + 1];
        let mut prefix_sq = vec![0.0; n + 1];
        for (k, &i) in sorted.iter().enumerate() {
            prefix_sum[k + 1] = prefix_sum[k] + y[i];
            prefix_sq[k + 1] = prefix_sq[k] + y[i] * y[i];
        }
        let total_sum = prefix_sum[n];
        let total_sq = prefix_sq[n];
        for i in min_samples_leaf.max(1)..=(n - min_samples_leaf.max(1)) {
            let lo = x[sorted[i - 1]][f];
            let hi = x[sorted[i]][f];
            if lo == hi {
                continue;
            }
            let mut threshold = 0.5 * (lo + hi);
            if !(threshold < hi) {
                // midpoint collapsed onto the right value; keep the
                // partition consistent with `value <= threshold`
                threshold = lo;
            }
            let left_n = i as f64;
            let right_n = (n - i) as f64;
            let sse_left = prefix_sq[i] - prefix_sum[i] * prefix_sum[i] / left_n;
            let right_sum = total_sum - prefix_sum[i];
            let sse_right = (total_sq - prefix_sq[i]) - right_sum * right_sum / right_n;
            let total = sse_left + sse_right;
            if best.map_or(true, |b| total < b.total_sse) {
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    total_sse: total,
                });
            }
        }
    }
    best
}

fn build(x: &[Vec<f64>], y: &[f64], idx: Vec<usize>, depth: usize, params: &CartParams) -> Node {
    let value = mean(y, &idx);
    if depth >= params.max_depth || all_equal(y, &idx) {
        return Node::Leaf { value, n: idx.len() };
    }
    let choice = match best_split(x, y, &idx, params.min_samples_leaf) {
        Some(c) => c,
        None => return Node::Leaf { value, n: idx.len() },
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
        .into_iter()
        .partition(|&i| x[i][choice.feature] <= choice.threshold);
    Node::Split {
        feature: choice.feature,
        threshold: choice.threshold,
        left: Box::new(build(x, y, left_idx, depth + 1, params)),
        right: Box::new(build(x, y, right_idx, depth + 1, params)),
    }
}

pub fn fit_cart(x: &[Vec<f64>], y: &[f64], params: &CartParams) -> Result<RegressionTree> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyInput("fit_cart on empty data".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Config(format!(
            "feature/target length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < params.min_samples_leaf.max(1) {
        return Err(Error::Config(format!(
            "need at least min_samples_leaf = {} samples, got {}",
            params.min_samples_leaf,
            x.len()
        )));
    }
    let n_features = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != n_features {
            return Err(Error::Config(format!(
                "row {i} has {} features, expected {n_features}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) || !y[i].is_finite() {
            return Err(Error::Numeric(format!("non-finite value in sample {i}")));
        }
    }
    let idx: Vec<usize> = (0..x.len()).collect();
    Ok(RegressionTree {
        root: build(x, y, idx, 0, params),
        n_features,
        params: *params,
    })
}

pub fn predict_cart(tree: &RegressionTree, x: &[f64]) -> f64 {
    let mut node = &tree.root;
    loop {
        match node {
            Node::Leaf { value, .. } => return *value,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                node = if x[*feature] <= *threshold { left } else { right };
            }
        }
    }
}

/// Prediction plus the decision path taken, for what-if breakdowns.
pub fn predict_with_path(tree: &RegressionTree, x: &[f64]) -> (f64, Vec<PathStep>) {
    let mut node = &tree.root;
    let mut path = Vec::new();
    loop {
        match node {
            Node::Leaf { value, .. } => return (*value, path),
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let went_left = x[*feature] <= *threshold;
                path.push(PathStep {
                    feature: *feature,
                    threshold: *threshold,
                    went_left,
                });
                node = if went_left { left } else { right };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_instance(rng: &mut StdRng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|row| row.iter().sum::<f64>() + rng.gen_range(-0.1..0.1))
            .collect();
        (x, y)
    }

    /// Independent oracle: direct partition and two-pass SSE per candidate.
    pub(crate) fn exhaustive_best_split(
        x: &[Vec<f64>],
        y: &[f64],
        idx: &[usize],
        min_leaf: usize,
    ) -> Option<SplitChoice> {
        let d = x[idx[0]].len();
        let mut best: Option<SplitChoice> = None;
        for f in 0..d {
            let mut values: Vec<f64> = idx.iter().map(|&i| x[i][f]).collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            values.dedup();
            for w in values.windows(2) {
                let mut t = 0.5 * (w[0] + w[1]);
                if !(t < w[1]) {
                    t = w[0];
                }
                let left: Vec<usize> = idx.iter().copied().filter(|&i| x[i][f] <= t).collect();
                let right: Vec<usize> = idx.iter().copied().filter(|&i| x[i][f] > t).collect();
                if left.len() < min_leaf || right.len() < min_leaf {
                    continue;
                }
                let sse = |part: &[usize]| {
                    let m = part.iter().map(|&i| y[i]).sum::<f64>() / part.len() as f64;
                    part.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
                };
                let total = sse(&left) + sse(&right);
                if best.map_or(true, |b| total < b.total_sse) {
                    best = Some(SplitChoice {
                        feature: f,
                        threshold: t,
                        total_sse: total,
                    });
                }
            }
        }
        best
    }

    #[test]
    fn depth_zero_predicts_mean() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![1.0, 2.0, 3.0, 6.0];
        let tree = fit_cart(
            &x,
            &y,
            &CartParams {
                max_depth: 0,
                min_samples_leaf: 1,
            },
        )
        .unwrap();
        assert_eq!(predict_cart(&tree, &[0.5]), 3.0);
        assert_eq!(predict_cart(&tree, &[100.0]), 3.0);
    }

    #[test]
    fn separable_case_zero_training_error() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 1.0 } else { 5.0 }).collect();
        let tree = fit_cart(
            &x,
            &y,
            &CartParams {
                max_depth: 1,
                min_samples_leaf: 1,
            },
        )
        .unwrap();
        for (row, target) in x.iter().zip(&y) {
            assert_eq!(predict_cart(&tree, row), *target);
        }
    }

    #[test]
    fn split_matches_exhaustive_oracle() {
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..50 {
            let n = rng.gen_range(10..60);
            let d = rng.gen_range(1..5);
            let (x, y) = random_instance(&mut rng, n, d);
            let idx: Vec<usize> = (0..n).collect();
            let ours = best_split(&x, &y, &idx, 2);
            let oracle = exhaustive_best_split(&x, &y, &idx, 2);
            match (ours, oracle) {
                (Some(a), Some(b)) => {
                    assert_eq!(a.feature, b.feature);
                    assert_eq!(a.threshold, b.threshold);
                }
                (a, b) => assert_eq!(a.is_some(), b.is_some()),
            }
        }
    }

    #[test]
    fn training_error_nonincreasing_in_depth() {
        let mut rng = StdRng::seed_from_u64(88);
        let (x, y) = random_instance(&mut rng, 200, 3);
        let mut prev = f64::INFINITY;
        for depth in [0, 1, 2, 4, 8] {
            let tree = fit_cart(
                &x,
                &y,
                &CartParams {
                    max_depth: depth,
                    min_samples_leaf: 5,
                },
            )
            .unwrap();
            let err: f64 = x
                .iter()
                .zip(&y)
                .map(|(row, t)| (predict_cart(&tree, row) - t).powi(2))
                .sum();
            assert!(err <= prev + 1e-9, "depth {depth}: {err} > {prev}");
            prev = err;
        }
    }

    #[test]
    fn empty_input_errors() {
        assert!(fit_cart(&[], &[], &CartParams::default()).is_err());
    }

    #[test]
    fn path_matches_prediction() {
        let mut rng = StdRng::seed_from_u64(99);
        let (x, y) = random_instance(&mut rng, 100, 3);
        let tree = fit_cart(
            &x,
            &y,
            &CartParams {
                max_depth: 4,
                min_samples_leaf: 3,
            },
        )
        .unwrap();
        for row in x.iter().take(20) {
            let (p, path) = predict_with_path(&tree, row);
            assert_eq!(p, predict_cart(&tree, row));
            // re-walk the recorded path by hand
            let mut node = &tree.root;
            for step in &path {
                match node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        assert_eq!(*feature, step.feature);
                        assert_eq!(*threshold, step.threshold);
                        node = if step.went_left { left } else { right };
                    }
                    Node::Leaf { .. } => panic!("path longer than tree"),
                }
            }
            match node {
                Node::Leaf { value, .. } => assert_eq!(*value, p),
                _ => panic!("path ended before a leaf"),
            }
        }
    }
}
