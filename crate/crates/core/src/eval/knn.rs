use crate::error::{Error, Result};
use crate::sphere::dot;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Distance {
    #[default]
    Euclidean,
    /// `1 − cos(a, b)`.
    Cosine,
}

impl Distance {
    fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Distance::Cosine => {
                let denom = (dot(a, a) * dot(b, b)).sqrt();
                if denom == 0.0 {
                    1.0
                } else {
                    1.0 - dot(a, b) / denom
                }
            }
        }
    }
}

/// Majority vote among the `k` nearest training points.
///
/// Distance ties go to the lower training index. Vote ties go to the tied label
/// whose nearest member ranks first, which is the single nearest neighbor's label
/// whenever that label is among the tied ones.
pub fn knn_classify(
    train_points: &[Vec<f64>],
    train_labels: &[usize],
    test_points: &[Vec<f64>],
    k: usize,
    distance: Distance,
) -> Result<Vec<usize>> {
    if train_points.is_empty() {
        return Err(Error::Eval("k-NN needs a non-empty training set".into()));
    }
    if train_points.len() != train_labels.len() {
        return Err(Error::Eval(format!(
            "{} training points but {} labels",
            train_points.len(),
            train_labels.len()
        )));
    }
    if k == 0 || k > train_points.len() {
        return Err(Error::Eval(format!(
            "k = {k} must be in 1..={} (training set size)",
            train_points.len()
        )));
    }
    let classes = train_labels.iter().max().map_or(0, |m| m + 1);
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(train_points.len());
    let mut votes = vec![0usize; classes];
    let predictions = test_points
        .iter()
        .map(|q| {
            order.clear();
            order.extend(
                train_points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (distance.eval(q, p), i)),
            );
            order.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let nearest = &mut order[..k];
            nearest.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            votes.iter_mut().for_each(|v| *v = 0);
            for &(_, i) in nearest.iter() {
                votes[train_labels[i]] += 1;
            }
            let top = *votes.iter().max().unwrap();
            nearest
                .iter()
                .map(|&(_, i)| train_labels[i])
                .find(|&l| votes[l] == top)
                .unwrap()
        })
        .collect();
    Ok(predictions)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct F1Scores {
    pub macro_f1: f64,
    pub micro_f1: f64,
}

/// Macro-F1 averages per-class F1 over all `class_count` classes (a class with no
/// gold or predicted members scores 0). Micro-F1 pools TP/FP/FN over classes.
pub fn f1_scores(predicted: &[usize], gold: &[usize], class_count: usize) -> Result<F1Scores> {
    if predicted.len() != gold.len() {
        return Err(Error::Eval(format!(
            "{} predictions for {} gold labels",
            predicted.len(),
            gold.len()
        )));
    }
    if class_count == 0 {
        return Err(Error::Eval("class_count must be >= 1".into()));
    }
    if let Some(&bad) = predicted.iter().chain(gold).find(|&&l| l >= class_count) {
        return Err(Error::Eval(format!(
            "label {bad} >= class_count {class_count}"
        )));
    }
    let mut tp = vec![0usize; class_count];
    let mut fp = vec![0usize; class_count];
    let mut fn_ = vec![0usize; class_count];
    for (&p, &g) in predicted.iter().zip(gold) {
        if p == g {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[g] += 1;
        }
    }
    let f1 = |tp: usize, fp: usize, fn_: usize| {
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let macro_f1 = (0..class_count)
        .map(|c| f1(tp[c], fp[c], fn_[c]))
        .sum::<f64>()
        / class_count as f64;
    let micro_f1 = f1(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    Ok(F1Scores { macro_f1, micro_f1 })
}
