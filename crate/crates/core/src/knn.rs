//! Brute-force k-nearest-neighbor classification in embedding space.
//!
//! Euclidean distance, majority vote. Distance ties go to the lower training
//! index; vote ties go to the tied class whose nearest member is closest to
//! the query. Results are therefore fully deterministic.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnResult {
    pub predictions: Vec<usize>,
    pub accuracy: f64,
    pub k: usize,
}

pub fn knn_predict(
    train_emb: &DMatrix<f64>,
    train_labels: &[usize],
    query_emb: &DMatrix<f64>,
    neighbors: usize,
) -> Result<Vec<usize>> {
    let n = train_emb.ncols();
    if n == 0 {
        return Err(Error::Empty("k-NN needs at least one training point".into()));
    }
    if train_labels.len() != n {
        return Err(Error::Shape(format!(
            "{n} training points but {} labels",
            train_labels.len()
        )));
    }
    if query_emb.nrows() != train_emb.nrows() {
        return Err(Error::Shape(format!(
            "training embedding has {} rows, queries have {}",
            train_emb.nrows(),
            query_emb.nrows()
        )));
    }
    if neighbors == 0 || neighbors > n {
        return Err(Error::InvalidInput(format!(
            "neighbors must lie in 1..={n}, got {neighbors}"
        )));
    }
    let n_classes = train_labels.iter().max().map_or(0, |&m| m + 1);

    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut votes = vec![0usize; n_classes];
    let predictions = query_emb
        .column_iter()
        .map(|q| {
            order.clear();
            order.extend(
                train_emb
                    .column_iter()
                    .enumerate()
                    .map(|(i, t)| ((t - q).norm_squared(), i)),
            );
            let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if neighbors < n {
                order.select_nth_unstable_by(neighbors - 1, by_distance);
            }
            let nearest = &mut order[..neighbors];
            nearest.sort_unstable_by(by_distance);

            votes.iter_mut().for_each(|v| *v = 0);
            for &(_, i) in nearest.iter() {
                votes[train_labels[i]] += 1;
            }
            let top = *votes.iter().max().expect("at least one class");
            // Nearest-first scan finds the tied class with the closest member.
            nearest
                .iter()
                .map(|&(_, i)| train_labels[i])
                .find(|&c| votes[c] == top)
                .expect("winning class has a member among the neighbors")
        })
        .collect();
    Ok(predictions)
}

/// Fraction of positions where `predictions` equals `truth`.
pub fn accuracy(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Empty("accuracy of an empty prediction set".into()));
    }
    let correct = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / truth.len() as f64)
}

/// Predicts `query_emb` and scores it against `query_labels`.
pub fn evaluate(
    train_emb: &DMatrix<f64>,
    train_labels: &[usize],
    query_emb: &DMatrix<f64>,
    query_labels: &[usize],
    neighbors: usize,
) -> Result<KnnResult> {
    let predictions = knn_predict(train_emb, train_labels, query_emb, neighbors)?;
    let accuracy = accuracy(&predictions, query_labels)?;
    Ok(KnnResult {
        predictions,
        accuracy,
        k: neighbors,
    })
}
