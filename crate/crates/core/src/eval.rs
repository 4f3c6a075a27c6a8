//! Clustering quality (permutation accuracy, adjusted Rand index) and topic
//! quality (co-document coherence, top terms).

use std::collections::HashMap;

use pathfinding::prelude::{kuhn_munkres, Matrix as CostMatrix};
use serde::{Deserialize, Serialize};

use crate::corpus::DocumentTermMatrix;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringEval {
    pub accuracy: f64,
    pub ari: f64,
    /// `best_permutation[k - 1]` is the true label matched to predicted
    /// label `k`.
    pub best_permutation: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub per_topic: Vec<f64>,
    pub mean_coherence: f64,
    pub top_terms: Vec<Vec<String>>,
    /// Group index (1-based) of each reported topic, in report order.
    pub topic_order: Vec<usize>,
}

fn check_labels(labels: &[usize], groups: usize, what: &str) -> Result<()> {
    match labels.iter().position(|&l| l == 0 || l > groups) {
        Some(i) => Err(Error::invalid(format!(
            "{what} label {} at position {i} is outside 1..={groups}",
            labels[i]
        ))),
        None => Ok(()),
    }
}

/// Fraction of items matched under the label permutation that maximizes
/// agreement, found with the Hungarian method on the `G × G` confusion
/// matrix. Labels are in `1..=G`.
pub fn permutation_accuracy(truth: &[usize], pred: &[usize], groups: usize) -> Result<(f64, Vec<usize>)> {
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::invalid("accuracy needs at least one item"));
    }
    if groups == 0 {
        return Err(Error::invalid("number of groups must be at least 1"));
    }
    check_labels(truth, groups, "true")?;
    check_labels(pred, groups, "predicted")?;
    let mut confusion = CostMatrix::new(groups, groups, 0i64);
    for (&t, &p) in truth.iter().zip(pred) {
        confusion[(p - 1, t - 1)] += 1;
    }
    let (matched, assignment) = kuhn_munkres(&confusion);
    let perm = assignment.into_iter().map(|t| t + 1).collect();
    Ok((matched as f64 / truth.len() as f64, perm))
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

/// Pair-counting adjusted Rand index. Labels may be arbitrary integers.
/// When both partitions are trivial in the same way (the index is `0/0`)
/// the result is 1.
pub fn adjusted_rand_index(truth: &[usize], pred: &[usize]) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    let n = truth.len() as u64;
    if n < 2 {
        return Err(Error::invalid("ARI needs at least two items"));
    }
    let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&t, &p) in truth.iter().zip(pred) {
        *cells.entry((t, p)).or_default() += 1;
        *rows.entry(t).or_default() += 1;
        *cols.entry(p).or_default() += 1;
    }
    let index: f64 = cells.values().map(|&c| choose2(c)).sum();
    let a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let expected = a * b / choose2(n);
    let max = 0.5 * (a + b);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Accuracy, best permutation and ARI together.
pub fn evaluate_clustering(truth: &[usize], pred: &[usize], groups: usize) -> Result<ClusteringEval> {
    let (accuracy, best_permutation) = permutation_accuracy(truth, pred, groups)?;
    let ari = adjusted_rand_index(truth, pred)?;
    Ok(ClusteringEval {
        accuracy,
        ari,
        best_permutation,
    })
}

/// Co-document coherence of an ordered top-term list:
/// `Σ_{m≥2} Σ_{s<m} log((D(v_m, v_s) + 1) / D(v_s))`.
pub fn topic_coherence<S: AsRef<str>>(dtm: &DocumentTermMatrix, terms: &[S]) -> Result<f64> {
    if terms.len() < 2 {
        return Err(Error::invalid("coherence needs at least two terms"));
    }
    let index: HashMap<&str, usize> = dtm.vocab().iter().enumerate().map(|(j, t)| (t.as_str(), j)).collect();
    let cols = terms
        .iter()
        .map(|t| {
            index
                .get(t.as_ref())
                .copied()
                .ok_or_else(|| Error::invalid(format!("term `{}` is not in the vocabulary", t.as_ref())))
        })
        .collect::<Result<Vec<_>>>()?;
    // Document sets of each term, as sorted document indices.
    let mut docs: Vec<Vec<usize>> = vec![Vec::new(); cols.len()];
    for i in 0..dtm.n_docs() {
        let (row, _) = dtm.row(i);
        for (k, c) in cols.iter().enumerate() {
            if row.binary_search(c).is_ok() {
                docs[k].push(i);
            }
        }
    }
    let co = |a: &[usize], b: &[usize]| a.iter().filter(|i| b.binary_search(i).is_ok()).count();
    let mut total = 0.0;
    for m in 1..cols.len() {
        for s in 0..m {
            let d_s = docs[s].len();
            if d_s == 0 {
                return Err(Error::Domain(format!(
                    "term `{}` occurs in no document",
                    terms[s].as_ref()
                )));
            }
            total += ((co(&docs[m], &docs[s]) + 1) as f64 / d_s as f64).ln();
        }
    }
    Ok(total)
}

/// The `m` most probable terms of every topic (ties by vocabulary order),
/// with topics ordered by descending weight (ties by index). Returns the
/// term lists and the 1-based group of each list.
pub fn top_m_terms<T: Scalar>(
    topics: &Matrix<T>,
    weights: &[T],
    vocab: &[String],
    m: usize,
) -> Result<(Vec<Vec<String>>, Vec<usize>)> {
    if topics.cols() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: vocab.len(),
            actual: topics.cols(),
        });
    }
    if weights.len() != topics.rows() {
        return Err(Error::DimensionMismatch {
            expected: topics.rows(),
            actual: weights.len(),
        });
    }
    if m > vocab.len() {
        return Err(Error::invalid(format!("cannot take {m} terms from a vocabulary of {}", vocab.len())));
    }
    let mut order: Vec<usize> = (0..topics.rows()).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap_or(std::cmp::Ordering::Equal));
    let lists = order
        .iter()
        .map(|&g| {
            let row = topics.row(g);
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap_or(std::cmp::Ordering::Equal));
            idx.truncate(m);
            idx.into_iter().map(|j| vocab[j].clone()).collect()
        })
        .collect();
    Ok((lists, order.into_iter().map(|g| g + 1).collect()))
}

/// Top-term lists and their coherence values.
pub fn coherence_report<T: Scalar>(
    dtm: &DocumentTermMatrix,
    topics: &Matrix<T>,
    weights: &[T],
    m: usize,
) -> Result<CoherenceReport> {
    let (top_terms, topic_order) = top_m_terms(topics, weights, dtm.vocab(), m)?;
    let per_topic = top_terms
        .iter()
        .map(|t| topic_coherence(dtm, t))
        .collect::<Result<Vec<_>>>()?;
    let mean_coherence = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(CoherenceReport {
        per_topic,
        mean_coherence,
        top_terms,
        topic_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> DocumentTermMatrix {
        DocumentTermMatrix::from_dense(
            &[vec![1, 1, 0], vec![1, 0, 0], vec![0, 1, 0]],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap()
    }

    #[test]
    fn accuracy_cases() {
        let t = [1, 1, 2, 2, 3];
        assert_eq!(permutation_accuracy(&t, &[3, 3, 1, 1, 2], 3).unwrap().0, 1.0);
        assert_eq!(permutation_accuracy(&t, &[3, 3, 1, 1, 2], 3).unwrap().1, vec![2, 3, 1]);
        assert!((permutation_accuracy(&t, &[1, 1, 2, 3, 3], 3).unwrap().0 - 0.8).abs() < 1e-15);
        assert!(permutation_accuracy(&t, &[1, 1, 2, 4, 3], 3).is_err());
    }

    #[test]
    fn ari_cases() {
        assert_eq!(adjusted_rand_index(&[1, 1, 2, 2], &[1, 1, 2, 2]).unwrap(), 1.0);
        assert!((adjusted_rand_index(&[1, 1, 2, 2], &[1, 2, 1, 2]).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(adjusted_rand_index(&[1, 1, 1], &[2, 2, 2]).unwrap(), 1.0);
        assert!(adjusted_rand_index(&[1], &[1]).is_err());
    }

    #[test]
    fn coherence_cases() {
        assert!(topic_coherence(&abc(), &["a", "b"]).unwrap().abs() < 1e-15);
        assert!(matches!(topic_coherence(&abc(), &["c", "a"]), Err(Error::Domain(_))));
        assert!(topic_coherence(&abc(), &["a", "zzz"]).is_err());
    }

    #[test]
    fn top_terms_cases() {
        let vocab: Vec<String> = vec!["t1".into(), "t2".into(), "t3".into()];
        let topics = Matrix::from_rows(vec![vec![0.5, 1.0 / 6.0, 1.0 / 3.0], vec![0.25, 0.5, 0.25]]).unwrap();
        let (lists, order) = top_m_terms(&topics, &[0.3, 0.7], &vocab, 2).unwrap();
        assert_eq!(order, vec![2, 1]);
        assert_eq!(lists[1], vec!["t1", "t3"]);
        assert_eq!(lists[0], vec!["t2", "t1"]);
        let (all, _) = top_m_terms(&topics, &[0.5, 0.5], &vocab, 3).unwrap();
        assert_eq!(all[0].len(), 3);
    }
}
