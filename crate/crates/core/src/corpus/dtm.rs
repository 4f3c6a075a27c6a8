use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::Count;

/// Sparse `n × p` matrix of term counts with its vocabulary.
///
/// Rows are stored compressed (CSR) with strictly increasing column indices
/// and no explicit zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentTermMatrix {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Count>,
    vocab: Vec<String>,
    labels: Option<Vec<String>>,
    doc_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n: usize,
    pub p: usize,
    /// Fraction of zero cells.
    pub sparsity: f64,
    pub mean_terms_per_doc: f64,
}

impl DocumentTermMatrix {
    /// Builds from `(row, col, count)` triplets in any order. Zero counts are
    /// dropped; duplicate coordinates are an error.
    pub fn from_triplets(
        n_docs: usize,
        vocab: Vec<String>,
        mut entries: Vec<(usize, usize, Count)>,
        labels: Option<Vec<String>>,
        doc_ids: Option<Vec<String>>,
    ) -> Result<Self> {
        let p = vocab.len();
        check_vocab(&vocab)?;
        entries.retain(|e| e.2 != 0);
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        for w in entries.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::invalid(format!(
                    "duplicate entry at document {}, term {}",
                    w[0].0, w[0].1
                )));
            }
        }
        let mut row_ptr = vec![0; n_docs + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for &(r, c, v) in &entries {
            if r >= n_docs || c >= p {
                return Err(Error::invalid(format!(
                    "entry ({r}, {c}) outside a {n_docs} x {p} matrix"
                )));
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..n_docs {
            row_ptr[r + 1] += row_ptr[r];
        }
        let doc_ids = doc_ids.unwrap_or_else(|| (1..=n_docs).map(|i| i.to_string()).collect());
        if doc_ids.len() != n_docs {
            return Err(Error::DimensionMismatch {
                expected: n_docs,
                actual: doc_ids.len(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != n_docs {
                return Err(Error::DimensionMismatch {
                    expected: n_docs,
                    actual: l.len(),
                });
            }
        }
        Ok(DocumentTermMatrix {
            row_ptr,
            col_idx,
            values,
            vocab,
            labels,
            doc_ids,
        })
    }

    /// Builds from dense rows.
    pub fn from_dense(rows: &[Vec<Count>], vocab: Vec<String>) -> Result<Self> {
        let p = vocab.len();
        let mut entries = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    actual: row.len(),
                });
            }
            entries.extend(row.iter().enumerate().map(|(c, &v)| (r, c, v)));
        }
        Self::from_triplets(rows.len(), vocab, entries, None, None)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_docs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_docs(),
                actual: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_doc_ids(mut self, doc_ids: Vec<String>) -> Result<Self> {
        if doc_ids.len() != self.n_docs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_docs(),
                actual: doc_ids.len(),
            });
        }
        self.doc_ids = doc_ids;
        Ok(self)
    }

    #[inline]
    pub fn n_docs(&self) -> usize {
        self.row_ptr.len() - 1
    }

    #[inline]
    pub fn n_terms(&self) -> usize {
        self.vocab.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    /// Column indices and counts of document `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[Count]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, Count)> + '_ {
        let (c, v) = self.row(i);
        c.iter().copied().zip(v.iter().copied())
    }

    pub fn dense_row(&self, i: usize) -> Vec<Count> {
        let mut out = vec![0; self.n_terms()];
        for (c, v) in self.row_entries(i) {
            out[c] = v;
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> Count {
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(0, |k| v[k])
    }

    pub fn doc_length(&self, i: usize) -> u64 {
        self.row(i).1.iter().map(|&v| u64::from(v)).sum()
    }

    pub fn total_count(&self) -> u64 {
        self.values.iter().map(|&v| u64::from(v)).sum()
    }

    /// Total count of every term over the corpus.
    pub fn column_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.n_terms()];
        for (&c, &v) in self.col_idx.iter().zip(&self.values) {
            totals[c] += u64::from(v);
        }
        totals
    }

    /// Number of documents containing each term.
    pub fn doc_frequencies(&self) -> Vec<usize> {
        let mut df = vec![0usize; self.n_terms()];
        for &c in &self.col_idx {
            df[c] += 1;
        }
        df
    }

    /// Keeps the given columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> Result<Self> {
        let mut new_index = vec![usize::MAX; self.n_terms()];
        for (new, &old) in keep.iter().enumerate() {
            if old >= self.n_terms() {
                return Err(Error::invalid(format!("column {old} out of range")));
            }
            if new_index[old] != usize::MAX {
                return Err(Error::invalid(format!("column {old} selected twice")));
            }
            new_index[old] = new;
        }
        let mut entries = Vec::with_capacity(self.nnz());
        for i in 0..self.n_docs() {
            for (c, v) in self.row_entries(i) {
                if new_index[c] != usize::MAX {
                    entries.push((i, new_index[c], v));
                }
            }
        }
        let vocab = keep.iter().map(|&c| self.vocab[c].clone()).collect();
        Self::from_triplets(
            self.n_docs(),
            vocab,
            entries,
            self.labels.clone(),
            Some(self.doc_ids.clone()),
        )
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, keep: &[usize]) -> Result<Self> {
        let mut entries = Vec::new();
        for (new, &old) in keep.iter().enumerate() {
            if old >= self.n_docs() {
                return Err(Error::invalid(format!("row {old} out of range")));
            }
            entries.extend(self.row_entries(old).map(|(c, v)| (new, c, v)));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| keep.iter().map(|&i| l[i].clone()).collect());
        let ids = keep.iter().map(|&i| self.doc_ids[i].clone()).collect();
        Self::from_triplets(keep.len(), self.vocab.clone(), entries, labels, Some(ids))
    }

    /// Removes documents with no counts. Returns the reduced matrix and the
    /// original indices of the dropped rows.
    pub fn drop_empty_rows(&self) -> Result<(Self, Vec<usize>)> {
        let (keep, dropped): (Vec<usize>, Vec<usize>) =
            (0..self.n_docs()).partition(|&i| self.doc_length(i) > 0);
        if dropped.is_empty() {
            return Ok((self.clone(), dropped));
        }
        Ok((self.select_rows(&keep)?, dropped))
    }

    /// Removes terms whose document frequency is below `ceil(fraction · n)`.
    /// Terms exactly at the threshold are kept; survivor order is preserved.
    pub fn filter_sparse_terms(&self, min_doc_freq: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&min_doc_freq) {
            return Err(Error::invalid(format!(
                "min_doc_freq must lie in [0, 1), got {min_doc_freq}"
            )));
        }
        let threshold = (min_doc_freq * self.n_docs() as f64).ceil() as usize;
        let keep: Vec<usize> = self
            .doc_frequencies()
            .iter()
            .enumerate()
            .filter(|(_, &df)| df >= threshold)
            .map(|(c, _)| c)
            .collect();
        if keep.is_empty() {
            return Err(Error::EmptyVocabulary(format!(
                "no term reaches document frequency {threshold} of {}",
                self.n_docs()
            )));
        }
        self.select_columns(&keep)
    }

    pub fn stats(&self) -> Result<CorpusStats> {
        let (n, p) = (self.n_docs(), self.n_terms());
        if n == 0 || p == 0 {
            return Err(Error::EmptyCorpus("statistics need at least one document and term".into()));
        }
        let cells = (n * p) as f64;
        Ok(CorpusStats {
            n,
            p,
            sparsity: (cells - self.nnz() as f64) / cells,
            mean_terms_per_doc: self.total_count() as f64 / n as f64,
        })
    }
}

fn check_vocab(vocab: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(vocab.len());
    for term in vocab {
        if !seen.insert(term.as_str()) {
            return Err(Error::invalid(format!("duplicate vocabulary term {term:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    #[test]
    fn stats_of_identity() {
        let d = DocumentTermMatrix::from_dense(&[vec![1, 0], vec![0, 1]], vocab(2)).unwrap();
        let s = d.stats().unwrap();
        assert_eq!((s.n, s.p), (2, 2));
        assert_eq!(s.sparsity, 0.5);
        assert_eq!(s.mean_terms_per_doc, 1.0);
    }

    #[test]
    fn all_zero_stats() {
        let d = DocumentTermMatrix::from_dense(&[vec![0, 0]], vocab(2)).unwrap();
        let s = d.stats().unwrap();
        assert_eq!(s.sparsity, 1.0);
        assert_eq!(s.mean_terms_per_doc, 0.0);
    }

    #[test]
    fn duplicate_vocab_rejected() {
        let v = vec!["a".to_string(), "a".to_string()];
        assert!(DocumentTermMatrix::from_dense(&[vec![1, 1]], v).is_err());
    }

    #[test]
    fn filter_threshold_boundaries() {
        // n = 100; term 0 in 1 doc, term 1 in exactly 5 docs, term 2 everywhere.
        let rows: Vec<Vec<Count>> = (0..100)
            .map(|i| vec![u32::from(i == 0), u32::from(i < 5), 1])
            .collect();
        let d = DocumentTermMatrix::from_dense(&rows, vocab(3)).unwrap();
        assert_eq!(d.filter_sparse_terms(0.0).unwrap(), d);
        let f = d.filter_sparse_terms(0.05).unwrap();
        assert_eq!(f.vocab(), &["t1".to_string(), "t2".to_string()]);
        let f = d.filter_sparse_terms(0.06).unwrap();
        assert_eq!(f.vocab(), &["t2".to_string()]);
        assert!(d.filter_sparse_terms(1.0).is_err());
    }

    #[test]
    fn filter_removing_everything_is_an_error() {
        let d = DocumentTermMatrix::from_dense(&[vec![1, 0], vec![0, 0], vec![0, 0]], vocab(2)).unwrap();
        assert!(matches!(d.filter_sparse_terms(0.9), Err(Error::EmptyVocabulary(_))));
    }

    #[test]
    fn drop_empty_rows_records_indices() {
        let d = DocumentTermMatrix::from_dense(&[vec![0, 0], vec![1, 2], vec![0, 0]], vocab(2))
            .unwrap()
            .with_labels(vec!["x".into(), "y".into(), "z".into()])
            .unwrap();
        let (kept, dropped) = d.drop_empty_rows().unwrap();
        assert_eq!(dropped, vec![0, 2]);
        assert_eq!(kept.n_docs(), 1);
        assert_eq!(kept.labels().unwrap(), &["y".to_string()]);
        assert_eq!(kept.doc_ids(), &["2".to_string()]);
        assert_eq!(kept.dense_row(0), vec![1, 2]);
    }

    #[test]
    fn select_columns_reorders() {
        let d = DocumentTermMatrix::from_dense(&[vec![1, 2, 3]], vocab(3)).unwrap();
        let s = d.select_columns(&[2, 0]).unwrap();
        assert_eq!(s.dense_row(0), vec![3, 1]);
        assert_eq!(s.vocab(), &["t2".to_string(), "t0".to_string()]);
        assert!(d.select_columns(&[0, 0]).is_err());
    }
}
