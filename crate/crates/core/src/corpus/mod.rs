//! Document-term matrices: construction, preprocessing of raw text, sparsity
//! filtering and MatrixMarket persistence.

mod dtm;
mod io;
mod preprocess;

pub use dtm::{CorpusStats, DocumentTermMatrix};
pub use io::{load_dtm, save_dtm, DOCS_FILE, LABELS_FILE, MATRIX_FILE, VOCAB_FILE};
pub use preprocess::{default_stopwords, preprocess, PreprocessConfig, Stemmer};
