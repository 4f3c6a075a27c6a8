//! Clustering of short-text corpora with a mixture of Unigram models under a
//! Beta-Liouville (or Dirichlet) topic prior, fitted by coordinate-ascent or
//! stochastic variational inference.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*F64` and
//! `*F32` aliases below name the common instantiations.
//!
//! ```
//! use blmix::{fit, DocumentTermMatrix, FitConfig, MixtureHyperparams};
//!
//! let dtm = DocumentTermMatrix::from_dense(
//!     &[vec![4, 1, 0, 0], vec![5, 0, 1, 0], vec![0, 0, 3, 4], vec![0, 1, 4, 3]],
//!     vec!["goal".into(), "match".into(), "share".into(), "stock".into()],
//! )
//! .unwrap();
//! let hyper = MixtureHyperparams::<f64>::beta_liouville(2, 4, -0.2).unwrap();
//! let config = FitConfig { max_iter: 500, restarts: 4, ..FitConfig::default() };
//! let result = fit(&dtm, &hyper, &config).unwrap();
//! assert_eq!(result.assignments.len(), 4);
//! ```

pub mod bl;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod generative;
pub mod inference;
pub mod matrix;
pub mod scalar;
pub mod special;

/// A single term count.
pub type Count = u32;

pub use bl::{BLMoments, BLParams, DirichletParams, ExpectedLogStats, SimplexPoint};
pub use corpus::{load_dtm, preprocess, save_dtm, CorpusStats, DocumentTermMatrix, PreprocessConfig, Stemmer};
pub use error::{Error, Result};
pub use eval::{
    adjusted_rand_index, coherence_report, evaluate_clustering, permutation_accuracy, top_m_terms, topic_coherence,
    ClusteringEval, CoherenceReport,
};
pub use generative::{
    blm_log_pmf, dm_log_pmf, sample_corpus, sample_documents, DocLengthLaw, MixtureHyperparams, PriorFamily,
    SyntheticCorpus,
};
pub use inference::{
    compute_elbo, estimate_topics, fit, map_assign, Algorithm, BetaSlot, FitConfig, FitResult, PhiAlphaRule,
    TopicParams, TracePoint, VariationalState,
};
pub use matrix::Matrix;
pub use scalar::Scalar;

pub type BLParamsF64 = BLParams<f64>;
pub type BLParamsF32 = BLParams<f32>;
pub type DirichletParamsF64 = DirichletParams<f64>;
pub type DirichletParamsF32 = DirichletParams<f32>;
pub type MixtureHyperparamsF64 = MixtureHyperparams<f64>;
pub type MixtureHyperparamsF32 = MixtureHyperparams<f32>;
pub type VariationalStateF64 = VariationalState<f64>;
pub type VariationalStateF32 = VariationalState<f32>;
pub type FitResultF64 = FitResult<f64>;
pub type FitResultF32 = FitResult<f32>;
