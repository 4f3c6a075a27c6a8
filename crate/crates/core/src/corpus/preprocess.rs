use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use rust_stemmers::Algorithm;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::DocumentTermMatrix;
use crate::error::{Error, Result};
use crate::Count;

const STOPWORDS_EN: &str = include_str!("stopwords_en.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stemmer {
    /// Snowball (Porter2) English stemmer.
    EnglishSnowball,
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub min_token_len: usize,
    pub max_token_len: usize,
    pub lowercase: bool,
    pub strip_punct_digits: bool,
    pub stopwords: BTreeSet<String>,
    pub stemmer: Stemmer,
    /// Terms present in fewer than `ceil(min_doc_freq · n)` documents are dropped.
    pub min_doc_freq: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            min_token_len: 4,
            max_token_len: 16,
            lowercase: true,
            strip_punct_digits: true,
            stopwords: default_stopwords(),
            stemmer: Stemmer::EnglishSnowball,
            min_doc_freq: 0.01,
        }
    }
}

/// The bundled English stopword list, with and without apostrophes.
pub fn default_stopwords() -> BTreeSet<String> {
    let mut set = BTreeSet::new();
    for w in STOPWORDS_EN.lines().map(str::trim).filter(|w| !w.is_empty()) {
        set.insert(w.to_owned());
        set.insert(w.chars().filter(|c| c.is_alphanumeric()).collect());
    }
    set
}

impl PreprocessConfig {
    fn validate(&self) -> Result<()> {
        if self.min_token_len == 0 || self.min_token_len > self.max_token_len {
            return Err(Error::invalid(format!(
                "token length bounds must satisfy 0 < min ({}) <= max ({})",
                self.min_token_len, self.max_token_len
            )));
        }
        if !(0.0..1.0).contains(&self.min_doc_freq) {
            return Err(Error::invalid(format!(
                "min_doc_freq must lie in [0, 1), got {}",
                self.min_doc_freq
            )));
        }
        Ok(())
    }

    /// Tokens surviving the pipeline for a single document, in text order.
    pub fn tokens(&self, text: &str) -> Vec<String> {
        let stemmer = match self.stemmer {
            Stemmer::EnglishSnowball => Some(rust_stemmers::Stemmer::create(Algorithm::English)),
            Stemmer::None => None,
        };
        self.tokens_with(text, stemmer.as_ref())
    }

    fn tokens_with(&self, text: &str, stemmer: Option<&rust_stemmers::Stemmer>) -> Vec<String> {
        let composed: String = text.nfc().collect();
        let mut cleaned = String::with_capacity(composed.len());
        let mut pending_space = false;
        for ch in composed.chars() {
            if ch.is_whitespace() {
                pending_space = !cleaned.is_empty();
                continue;
            }
            if self.strip_punct_digits && !ch.is_alphabetic() {
                continue;
            }
            if pending_space {
                cleaned.push(' ');
                pending_space = false;
            }
            if self.lowercase {
                cleaned.extend(ch.to_lowercase());
            } else {
                cleaned.push(ch);
            }
        }
        cleaned
            .split(' ')
            .filter(|t| !t.is_empty() && !self.stopwords.contains(*t))
            .map(|t| match stemmer {
                Some(s) => s.stem(t).into_owned(),
                None => t.to_owned(),
            })
            .filter(|t| {
                let len = t.chars().count();
                (self.min_token_len..=self.max_token_len).contains(&len)
            })
            .collect()
    }
}

/// Turns raw documents into a document-term matrix with a lexicographically
/// ordered vocabulary, then drops sparse terms.
pub fn preprocess<S: AsRef<str> + Sync>(docs: &[S], config: &PreprocessConfig) -> Result<DocumentTermMatrix> {
    config.validate()?;
    if docs.is_empty() {
        return Err(Error::EmptyCorpus("no documents to preprocess".into()));
    }
    let per_doc: Vec<BTreeMap<String, Count>> = docs
        .par_iter()
        .map_init(
            || match config.stemmer {
                Stemmer::EnglishSnowball => Some(rust_stemmers::Stemmer::create(Algorithm::English)),
                Stemmer::None => None,
            },
            |stemmer, doc| {
                let mut counts = BTreeMap::new();
                for tok in config.tokens_with(doc.as_ref(), stemmer.as_ref()) {
                    *counts.entry(tok).or_insert(0) += 1;
                }
                counts
            },
        )
        .collect();

    let vocab: Vec<String> = per_doc
        .iter()
        .flat_map(|m| m.keys())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .cloned()
        .collect();
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary("no token survived preprocessing".into()));
    }
    let index: HashMap<&str, usize> =
        vocab.iter().enumerate().map(|(k, t)| (t.as_str(), k)).collect();
    let entries = per_doc
        .iter()
        .enumerate()
        .flat_map(|(i, m)| m.iter().map(move |(t, &c)| (i, t, c)))
        .map(|(i, t, c)| (i, index[t.as_str()], c))
        .collect();
    let dtm = DocumentTermMatrix::from_triplets(docs.len(), vocab, entries, None, None)?;
    if config.min_doc_freq > 0.0 {
        dtm.filter_sparse_terms(config.min_doc_freq)
    } else {
        Ok(dtm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PreprocessConfig {
        PreprocessConfig {
            min_doc_freq: 0.0,
            ..PreprocessConfig::default()
        }
    }

    #[test]
    fn short_tokens_are_dropped() {
        assert!(cfg().tokens("oil").is_empty());
        assert_eq!(cfg().tokens("crude oil prices"), vec!["crude", "price"]);
    }

    #[test]
    fn punctuation_and_case() {
        let c = PreprocessConfig {
            stemmer: Stemmer::None,
            ..cfg()
        };
        assert_eq!(c.tokens("Merger,"), vec!["merger"]);
        assert_eq!(c.tokens("  Q3   1987 results!! "), vec!["results"]);
    }

    #[test]
    fn stopwords_removed() {
        let c = PreprocessConfig {
            min_token_len: 1,
            stemmer: Stemmer::None,
            ..cfg()
        };
        assert_eq!(c.tokens("the merger"), vec!["merger"]);
        assert_eq!(c.tokens("Don't stop"), vec!["stop"]);
    }

    #[test]
    fn unicode_letters_kept_digits_removed() {
        let c = PreprocessConfig {
            stemmer: Stemmer::None,
            ..cfg()
        };
        // decomposed é composes to one character
        assert_eq!(c.tokens("cafe\u{301}s 2024"), vec!["cafés"]);
    }

    #[test]
    fn max_length_applies() {
        let c = PreprocessConfig {
            stemmer: Stemmer::None,
            ..cfg()
        };
        assert!(c.tokens("abcdefghijklmnopq").is_empty());
        assert_eq!(c.tokens("abcdefghijklmnop").len(), 1);
    }

    #[test]
    fn vocabulary_is_sorted_and_counted() {
        let dtm = preprocess(&["zebra zebra apple", "apple mango"], &cfg()).unwrap();
        assert_eq!(dtm.vocab(), &["appl", "mango", "zebra"]);
        assert_eq!(dtm.dense_row(0), vec![1, 0, 2]);
        assert_eq!(dtm.dense_row(1), vec![1, 1, 0]);
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        assert!(matches!(preprocess(&["a an the", "oil"], &cfg()), Err(Error::EmptyVocabulary(_))));
        assert!(preprocess::<&str>(&[], &cfg()).is_err());
        let bad = PreprocessConfig {
            min_token_len: 5,
            max_token_len: 4,
            ..cfg()
        };
        assert!(preprocess(&["hello"], &bad).is_err());
    }

    #[test]
    fn idempotent_on_its_own_vocabulary() {
        let docs = [
            "Oil prices rallied as OPEC ministers agreed on production quotas.",
            "The company announced a merger with its largest competitor.",
            "Wheat and grain exports fell sharply, traders said on Tuesday.",
            "Shares of the bank climbed after quarterly earnings beat forecasts.",
        ];
        let c = cfg();
        let first = preprocess(&docs, &c).unwrap();
        let rejoined: Vec<String> = (0..first.n_docs())
            .map(|i| {
                first
                    .row_entries(i)
                    .flat_map(|(j, n)| std::iter::repeat_n(first.vocab()[j].as_str(), n as usize))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        // Without stemming, the processed tokens pass through unchanged.
        let plain = PreprocessConfig {
            stemmer: Stemmer::None,
            ..cfg()
        };
        assert_eq!(preprocess(&rejoined, &plain).unwrap(), first);

        // With stemming, every stem that is its own stem keeps its counts.
        let second = preprocess(&rejoined, &c).unwrap();
        for (j, term) in first.vocab().iter().enumerate() {
            if c.tokens(term) != [term.clone()] {
                continue;
            }
            let k = second.vocab().iter().position(|t| t == term).unwrap();
            for i in 0..first.n_docs() {
                assert_eq!(first.get(i, j), second.get(i, k), "{term}");
            }
        }
    }
}
