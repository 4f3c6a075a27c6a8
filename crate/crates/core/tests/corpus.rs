use std::fs;

use blmix::corpus::{MATRIX_FILE, VOCAB_FILE};
use blmix::{load_dtm, preprocess, save_dtm, DocumentTermMatrix, PreprocessConfig};
use proptest::prelude::*;

fn dense(max_docs: usize, p: usize) -> impl Strategy<Value = Vec<Vec<u32>>> {
    proptest::collection::vec(proptest::collection::vec(0u32..4, p), 1..max_docs)
}

fn vocab(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("term{j}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn save_load_is_byte_exact(rows in dense(20, 6), labeled in any::<bool>()) {
        let mut dtm = DocumentTermMatrix::from_dense(&rows, vocab(6)).unwrap();
        if labeled {
            dtm = dtm.with_labels((0..rows.len()).map(|i| format!("c{}", i % 3)).collect()).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        save_dtm(&dtm, dir.path()).unwrap();
        let first = fs::read(dir.path().join(MATRIX_FILE)).unwrap();
        let loaded = load_dtm(dir.path()).unwrap();
        prop_assert_eq!(&loaded, &dtm);
        let again = tempfile::tempdir().unwrap();
        save_dtm(&loaded, again.path()).unwrap();
        prop_assert_eq!(fs::read(again.path().join(MATRIX_FILE)).unwrap(), first);
        prop_assert_eq!(
            fs::read(again.path().join(VOCAB_FILE)).unwrap(),
            fs::read(dir.path().join(VOCAB_FILE)).unwrap()
        );
    }

    #[test]
    fn filtering_keeps_counts_and_order(rows in dense(30, 8), frac in 0.0f64..0.9) {
        let dtm = DocumentTermMatrix::from_dense(&rows, vocab(8)).unwrap();
        let Ok(f) = dtm.filter_sparse_terms(frac) else { return Ok(()); };
        let threshold = (frac * rows.len() as f64).ceil() as usize;
        let df = dtm.doc_frequencies();
        let kept: Vec<usize> = (0..8).filter(|&j| df[j] >= threshold).collect();
        prop_assert_eq!(f.vocab().to_vec(), kept.iter().map(|&j| format!("term{j}")).collect::<Vec<_>>());
        for i in 0..rows.len() {
            for (k, &j) in kept.iter().enumerate() {
                prop_assert_eq!(f.get(i, k), rows[i][j]);
            }
        }
    }

    #[test]
    fn stats_are_consistent(rows in dense(20, 5)) {
        let dtm = DocumentTermMatrix::from_dense(&rows, vocab(5)).unwrap();
        let s = dtm.stats().unwrap();
        let zeros = rows.iter().flatten().filter(|&&c| c == 0).count();
        let total: u32 = rows.iter().flatten().sum();
        prop_assert!((s.sparsity - zeros as f64 / (5 * rows.len()) as f64).abs() < 1e-15);
        prop_assert!((s.mean_terms_per_doc - total as f64 / rows.len() as f64).abs() < 1e-12);
        prop_assert_eq!(s.mean_terms_per_doc == 0.0, total == 0);
    }
}

#[test]
fn filter_boundary_cases() {
    let mut rows = vec![vec![0u32, 1, 1]; 100];
    rows[0][0] = 1;
    let dtm = DocumentTermMatrix::from_dense(&rows, vocab(3)).unwrap();
    assert_eq!(dtm.filter_sparse_terms(0.0).unwrap(), dtm);
    assert_eq!(dtm.filter_sparse_terms(0.05).unwrap().n_terms(), 2);
    for row in rows.iter_mut().take(5) {
        row[0] = 1;
    }
    let dtm = DocumentTermMatrix::from_dense(&rows, vocab(3)).unwrap();
    assert_eq!(dtm.filter_sparse_terms(0.05).unwrap().n_terms(), 3);
}

#[test]
fn stats_hand_case() {
    let dtm = DocumentTermMatrix::from_dense(&[vec![1, 0], vec![0, 1]], vocab(2)).unwrap();
    let s = dtm.stats().unwrap();
    assert_eq!((s.n, s.p, s.sparsity, s.mean_terms_per_doc), (2, 2, 0.5, 1.0));
}

#[test]
fn malformed_files_report_positions() {
    let dtm = DocumentTermMatrix::from_dense(&[vec![1, 0], vec![0, 2]], vocab(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_dtm(&dtm, dir.path()).unwrap();
    fs::write(dir.path().join(VOCAB_FILE), "term0\nterm0\n").unwrap();
    let err = load_dtm(dir.path()).unwrap_err().to_string();
    assert!(err.contains("term0"), "{err}");

    save_dtm(&dtm, dir.path()).unwrap();
    let mtx = dir.path().join(MATRIX_FILE);
    fs::write(&mtx, "%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 1 1\n2 2 -2\n").unwrap();
    let err = load_dtm(dir.path()).unwrap_err().to_string();
    assert!(err.contains("(2, 2)") || err.contains("2, 2"), "{err}");
}

#[test]
fn preprocess_then_filter_pipeline() {
    let docs = [
        "Crude oil prices rose as OPEC production quotas tightened.",
        "OPEC ministers discussed crude production.",
        "The central bank raised interest rates again.",
        "Interest rates and bank lending climbed.",
    ];
    let config = PreprocessConfig {
        min_doc_freq: 0.5,
        ..PreprocessConfig::default()
    };
    let dtm = preprocess(&docs, &config).unwrap();
    for term in ["bank", "crude", "interest", "opec", "product", "rate"] {
        assert!(dtm.vocab().iter().any(|t| t == term), "missing {term}: {:?}", dtm.vocab());
    }
    assert!(!dtm.vocab().iter().any(|t| t == "oil"));
    let mut sorted = dtm.vocab().to_vec();
    sorted.sort();
    assert_eq!(sorted, dtm.vocab());
}
