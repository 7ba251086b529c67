//! Regression forest with "best random" splits: at every node each feature
//! gets one uniformly random threshold, and the (feature, threshold) pair
//! with the lowest summed child squared error wins. Randomizing thresholds
//! instead of optimizing them spreads the trees out, which is what makes
//! the per-tree disagreement a usable uncertainty signal.

use rand::{Rng, RngCore};

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Node::Leaf(v) => *v,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }
}

fn mean(ys: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| ys[i]).sum::<f64>() / idx.len() as f64
}

fn sse(ys: &[f64], idx: &[usize]) -> f64 {
    let m = mean(ys, idx);
    idx.iter().map(|&i| (ys[i] - m) * (ys[i] - m)).sum()
}

#[allow(clippy::needless_range_loop)]
fn build(xs: &[Vec<f64>], ys: &[f64], idx: Vec<usize>, rng: &mut dyn RngCore) -> Node {
    if idx.len() < 2 {
        return Node::Leaf(mean(ys, &idx));
    }
    let first = ys[idx[0]];
    if idx.iter().all(|&i| ys[i] == first) {
        return Node::Leaf(first);
    }

    let n_features = xs[0].len();
    let mut best: Option<(f64, usize, f64)> = None;
    for feature in 0..n_features {
        let lo = idx
            .iter()
            .map(|&i| xs[i][feature])
            .fold(f64::INFINITY, f64::min);
        let hi = idx
            .iter()
            .map(|&i| xs[i][feature])
            .fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            continue;
        }
        let threshold = rng.gen_range(lo..hi);
        let left: Vec<usize> = idx
            .iter()
            .copied()
            .filter(|&i| xs[i][feature] <= threshold)
            .collect();
        let right: Vec<usize> = idx
            .iter()
            .copied()
            .filter(|&i| xs[i][feature] > threshold)
            .collect();
        if left.is_empty() || right.is_empty() {
            continue;
        }
        let score = sse(ys, &left) + sse(ys, &right);
        if best.is_none_or(|(b, _, _)| score < b) {
            best = Some((score, feature, threshold));
        }
    }

    match best {
        None => Node::Leaf(mean(ys, &idx)),
        Some((_, feature, threshold)) => {
            let left_idx: Vec<usize> = idx
                .iter()
                .copied()
                .filter(|&i| xs[i][feature] <= threshold)
                .collect();
            let right_idx: Vec<usize> = idx
                .iter()
                .copied()
                .filter(|&i| xs[i][feature] > threshold)
                .collect();
            Node::Split {
                feature,
                threshold,
                left: Box::new(build(xs, ys, left_idx, rng)),
                right: Box::new(build(xs, ys, right_idx, rng)),
            }
        }
    }
}

/// A fitted forest. Immutable; safe for concurrent reads.
#[derive(Debug, Clone)]
pub struct ForestSurrogate {
    trees: Vec<Node>,
}

impl ForestSurrogate {
    /// The untrained prior: mean 0, standard deviation 1 everywhere.
    /// Used while fewer than two observations exist.
    pub fn prior() -> Self {
        Self { trees: Vec::new() }
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Mean and population standard deviation of the per-tree predictions.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        if self.trees.is_empty() {
            return (0.0, 1.0);
        }
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        let n = preds.len() as f64;
        let mu = preds.iter().sum::<f64>() / n;
        let var = preds.iter().map(|p| (p - mu) * (p - mu)).sum::<f64>() / n;
        (mu, var.sqrt())
    }
}

/// Trains `n_trees` trees, each on a bootstrap resample of the data.
/// No depth cap, minimum leaf size 1. Deterministic given the RNG state.
pub fn fit_forest(
    xs: &[Vec<f64>],
    ys: &[f64],
    n_trees: usize,
    rng: &mut dyn RngCore,
) -> ForestSurrogate {
    assert!(xs.len() >= 2, "forest needs at least 2 training points");
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let trees = (0..n_trees)
        .map(|_| {
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            build(xs, ys, bootstrap, rng)
        })
        .collect();
    ForestSurrogate { trees }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_targets_predict_that_target_with_zero_spread() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ys = vec![0.7; 10];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = fit_forest(&xs, &ys, 25, &mut rng);
        for x in &xs {
            let (mu, sigma) = f.predict(x);
            // Every tree is a pure leaf at 0.7; only the forest-level mean
            // accumulates float rounding.
            assert!((mu - 0.7).abs() < 1e-12, "mu = {mu}");
            assert!(sigma < 1e-9, "sigma = {sigma}");
        }
    }

    #[test]
    fn binary_feature_group_means_are_recovered() {
        // 200 points split by one binary feature with group means 0 and 1.
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..200 {
            let g = i % 2;
            xs.push(vec![g as f64]);
            ys.push(g as f64);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = fit_forest(&xs, &ys, 100, &mut rng);
        let (mu0, _) = f.predict(&[0.0]);
        let (mu1, _) = f.predict(&[1.0]);
        assert!((mu0 - 0.0).abs() < 0.05, "group 0 mean {mu0}");
        assert!((mu1 - 1.0).abs() < 0.05, "group 1 mean {mu1}");
    }

    #[test]
    fn fitting_is_deterministic_given_seed() {
        let xs: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i % 5) as f64, (i % 3) as f64])
            .collect();
        let ys: Vec<f64> = (0..30).map(|i| (i % 7) as f64 / 7.0).collect();
        let fit = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            fit_forest(&xs, &ys, 20, &mut rng)
        };
        let a = fit(9);
        let b = fit(9);
        for x in &xs {
            assert_eq!(a.predict(x), b.predict(x));
        }
    }

    #[test]
    fn single_tree_forest_has_zero_sigma() {
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = fit_forest(&xs, &ys, 1, &mut rng);
        for x in &xs {
            let (_, sigma) = f.predict(x);
            assert_eq!(sigma, 0.0);
        }
    }

    #[test]
    fn training_points_are_memorized_closely() {
        // Smooth target over a 1-d ordinal feature; prediction at a
        // training point stays within 0.1 of its value.
        let xs: Vec<Vec<f64>> = (0..200).map(|i| vec![(i % 20) as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0] / 20.0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = fit_forest(&xs, &ys, 100, &mut rng);
        for (x, &y) in xs.iter().zip(&ys) {
            let (mu, _) = f.predict(x);
            assert!((mu - y).abs() < 0.1, "predicted {mu} for target {y}");
        }
    }

    #[test]
    fn sigma_grows_away_from_training_data() {
        // One feature, one point per value, convex target: a far-out probe
        // resolves to whichever extreme point landed in-bag, and the wide
        // right-hand target gaps make that disagreement larger than the
        // neighbor substitution at an interior training point.
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = (0..10).map(|i| (i as f64 / 10.0).powi(2)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = fit_forest(&xs, &ys, 200, &mut rng);
        let (_, sigma_interior) = f.predict(&[4.0]);
        let (_, sigma_far) = f.predict(&[25.0]);
        assert!(
            sigma_far > sigma_interior,
            "far {sigma_far} vs interior {sigma_interior}"
        );
    }

    #[test]
    fn prior_reports_unit_uncertainty() {
        let f = ForestSurrogate::prior();
        assert_eq!(f.predict(&[1.0, 2.0]), (0.0, 1.0));
    }
}
