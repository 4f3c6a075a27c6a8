//! The hierarchical mixture of Unigrams: hyperparameters, synthetic corpora
//! and exact marginal probability mass functions.

use rand::Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::bl::{sample_dirichlet_f64, BLParams, DirichletParams};
use crate::corpus::DocumentTermMatrix;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{log_sum_exp, Scalar};
use crate::special::ln_gamma;
use crate::Count;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorFamily {
    BetaLiouville,
    Dirichlet,
}

/// Prior specification of a `G`-component mixture over a `p`-term vocabulary.
///
/// `alphas`, `alpha` and `beta` parameterize the Beta-Liouville topic prior;
/// `theta` is the symmetric Dirichlet topic concentration of the baseline;
/// `psi` is the symmetric Dirichlet concentration of the mixing weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureHyperparams<T> {
    pub groups: usize,
    pub vocab_size: usize,
    pub prior_family: PriorFamily,
    pub alphas: Vec<T>,
    pub alpha: T,
    pub beta: T,
    pub theta: T,
    pub psi: T,
}

impl<T: Scalar> MixtureHyperparams<T> {
    /// Beta-Liouville prior with unit `alphas` and `beta`, `ψ = 5/G` and
    /// `α = α₀(1 + δ)`.
    pub fn beta_liouville(groups: usize, vocab_size: usize, delta: T) -> Result<Self> {
        if vocab_size < 2 {
            return Err(Error::invalid("vocabulary size must be at least 2"));
        }
        let alphas = vec![T::one(); vocab_size - 1];
        let alpha = delta_to_alpha(delta, &alphas)?;
        let h = MixtureHyperparams {
            groups,
            vocab_size,
            prior_family: PriorFamily::BetaLiouville,
            alphas,
            alpha,
            beta: T::one(),
            theta: T::one(),
            psi: default_psi(groups)?,
        };
        h.validate()?;
        Ok(h)
    }

    /// Dirichlet baseline with `θ = 1` and `ψ = 5/G`.
    pub fn dirichlet(groups: usize, vocab_size: usize) -> Result<Self> {
        let mut h = Self::beta_liouville(groups, vocab_size, T::zero())?;
        h.prior_family = PriorFamily::Dirichlet;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups == 0 {
            return Err(Error::invalid("number of groups must be at least 1"));
        }
        if self.vocab_size < 2 {
            return Err(Error::invalid("vocabulary size must be at least 2"));
        }
        if self.alphas.len() + 1 != self.vocab_size {
            return Err(Error::DimensionMismatch {
                expected: self.vocab_size - 1,
                actual: self.alphas.len(),
            });
        }
        let positive = |name: &str, v: T| {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        for (l, &a) in self.alphas.iter().enumerate() {
            positive(&format!("alphas[{l}]"), a)?;
        }
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        positive("theta", self.theta)?;
        positive("psi", self.psi)
    }

    pub fn alpha0(&self) -> T {
        self.alphas.iter().copied().sum()
    }

    /// The `δ` for which `α = α₀(1 + δ)`.
    pub fn delta(&self) -> T {
        self.alpha / self.alpha0() - T::one()
    }

    pub fn topic_prior_bl(&self) -> Result<BLParams<T>> {
        BLParams::new(self.alphas.clone(), self.alpha, self.beta)
    }

    pub fn topic_prior_dirichlet(&self) -> Result<DirichletParams<T>> {
        DirichletParams::symmetric(self.vocab_size, self.theta)
    }

    pub fn weight_prior(&self) -> Result<DirichletParams<T>> {
        DirichletParams::symmetric(self.groups, self.psi)
    }
}

fn default_psi<T: Scalar>(groups: usize) -> Result<T> {
    if groups == 0 {
        return Err(Error::invalid("number of groups must be at least 1"));
    }
    Ok(T::of(5.0) / T::of_usize(groups))
}

/// `α = α₀ + δ·α₀`, the divergence knob away from the Dirichlet case.
pub fn delta_to_alpha<T: Scalar>(delta: T, alphas: &[T]) -> Result<T> {
    let alpha0: T = alphas.iter().copied().sum();
    let alpha = alpha0 + delta * alpha0;
    if !delta.is_finite() || delta <= -T::one() || !(alpha > T::zero()) {
        return Err(Error::invalid(format!(
            "delta = {delta} gives a non-positive alpha; delta must exceed -1"
        )));
    }
    Ok(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "law", content = "mean")]
pub enum DocLengthLaw {
    Fixed(usize),
    /// Poisson lengths; zero draws are redrawn.
    Poisson(f64),
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus<T> {
    pub dtm: DocumentTermMatrix,
    /// Component of each document, 1-based.
    pub true_labels: Vec<usize>,
    pub true_topics: Matrix<T>,
    pub true_weights: Vec<T>,
}

/// Draws weights, topics and documents from the generative model.
pub fn sample_corpus<T: Scalar, R: Rng + ?Sized>(
    hyper: &MixtureHyperparams<T>,
    n_docs: usize,
    lengths: DocLengthLaw,
    rng: &mut R,
) -> Result<SyntheticCorpus<T>> {
    hyper.validate()?;
    check_sampling_args(n_docs, lengths)?;
    let weights: Vec<T> = hyper.weight_prior()?.sample(rng).coords().to_vec();
    let mut topics = Matrix::filled(hyper.groups, hyper.vocab_size, T::zero());
    match hyper.prior_family {
        PriorFamily::BetaLiouville => {
            let prior = hyper.topic_prior_bl()?;
            for g in 0..hyper.groups {
                topics.row_mut(g).copy_from_slice(prior.sample(rng).coords());
            }
        }
        PriorFamily::Dirichlet => {
            let conc = vec![hyper.theta; hyper.vocab_size];
            for g in 0..hyper.groups {
                for (dst, v) in topics.row_mut(g).iter_mut().zip(sample_dirichlet_f64(&conc, rng)) {
                    *dst = T::of(v);
                }
            }
        }
    }
    sample_documents(topics, weights, n_docs, lengths, rng)
}

/// Draws documents from fixed topics and weights (the latent draws of
/// [`sample_corpus`] replaced by the given values).
pub fn sample_documents<T: Scalar, R: Rng + ?Sized>(
    topics: Matrix<T>,
    weights: Vec<T>,
    n_docs: usize,
    lengths: DocLengthLaw,
    rng: &mut R,
) -> Result<SyntheticCorpus<T>> {
    check_sampling_args(n_docs, lengths)?;
    let (groups, p) = (topics.rows(), topics.cols());
    if weights.len() != groups {
        return Err(Error::DimensionMismatch {
            expected: groups,
            actual: weights.len(),
        });
    }
    if groups == 0 || p < 2 {
        return Err(Error::invalid("need at least one topic over at least two terms"));
    }
    let as_f64 = |xs: &[T]| xs.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
    let label_dist = WeightedIndex::new(as_f64(&weights))
        .map_err(|e| Error::invalid(format!("mixing weights: {e}")))?;
    let term_dists = topics
        .iter_rows()
        .map(|row| WeightedIndex::new(as_f64(row)).map_err(|e| Error::invalid(format!("topic row: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let poisson = match lengths {
        DocLengthLaw::Poisson(mean) => Some(Poisson::new(mean).map_err(|e| Error::invalid(format!("{e}")))?),
        DocLengthLaw::Fixed(_) => None,
    };

    let mut labels = Vec::with_capacity(n_docs);
    let mut entries = Vec::new();
    let mut counts = vec![0 as Count; p];
    for i in 0..n_docs {
        let g = label_dist.sample(rng);
        labels.push(g + 1);
        let len = match (lengths, &poisson) {
            (DocLengthLaw::Fixed(l), _) => l,
            (_, Some(pois)) => loop {
                let l: f64 = pois.sample(rng);
                if l >= 1.0 {
                    break l as usize;
                }
            },
            _ => unreachable!(),
        };
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..len {
            counts[term_dists[g].sample(rng)] += 1;
        }
        entries.extend(counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(j, &c)| (i, j, c)));
    }
    let width = p.to_string().len();
    let vocab = (1..=p).map(|j| format!("w{j:0width$}")).collect();
    let text_labels = labels.iter().map(usize::to_string).collect();
    let dtm = DocumentTermMatrix::from_triplets(n_docs, vocab, entries, Some(text_labels), None)?;
    Ok(SyntheticCorpus {
        dtm,
        true_labels: labels,
        true_topics: topics,
        true_weights: weights,
    })
}

fn check_sampling_args(n_docs: usize, lengths: DocLengthLaw) -> Result<()> {
    if n_docs == 0 {
        return Err(Error::invalid("number of documents must be at least 1"));
    }
    match lengths {
        DocLengthLaw::Fixed(0) => Err(Error::invalid("document length must be at least 1")),
        DocLengthLaw::Poisson(m) if !(m.is_finite() && m >= 1.0) => {
            Err(Error::invalid(format!("Poisson mean length must be >= 1, got {m}")))
        }
        _ => Ok(()),
    }
}

/// `ln[(Σy)! / Π y_l!]`.
pub fn log_multinomial_coefficient<T: Scalar>(y: &[Count]) -> T {
    let total: u64 = y.iter().map(|&c| u64::from(c)).sum();
    ln_gamma(T::of(total as f64 + 1.0)) - y.iter().map(|&c| ln_gamma(T::of(f64::from(c) + 1.0))).sum::<T>()
}

/// Multinomial log pmf of `y` under probabilities `pi`, with the coefficient.
pub fn multinomial_log_pmf<T: Scalar>(pi: &[T], y: &[Count]) -> Result<T> {
    if pi.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: pi.len(),
            actual: y.len(),
        });
    }
    let kernel: T = pi
        .iter()
        .zip(y)
        .filter(|(_, &c)| c > 0)
        .map(|(&p, &c)| T::of(f64::from(c)) * p.ln())
        .sum();
    Ok(log_multinomial_coefficient::<T>(y) + kernel)
}

/// Beta-Liouville-Multinomial log pmf.
pub fn blm_log_pmf<T: Scalar>(params: &BLParams<T>, y: &[Count]) -> Result<T> {
    let post = params.posterior(y)?;
    Ok(log_multinomial_coefficient::<T>(y) + params.log_normalizer() - post.log_normalizer())
}

/// Dirichlet-Multinomial log pmf.
pub fn dm_log_pmf<T: Scalar>(params: &DirichletParams<T>, y: &[Count]) -> Result<T> {
    if y.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            actual: y.len(),
        });
    }
    let total: u64 = y.iter().map(|&c| u64::from(c)).sum();
    let a = params.total();
    let cells: T = params
        .concentrations()
        .iter()
        .zip(y)
        .map(|(&c, &n)| ln_gamma(c + T::of(f64::from(n))) - ln_gamma(c))
        .sum();
    Ok(log_multinomial_coefficient::<T>(y) + ln_gamma(a) - ln_gamma(a + T::of(total as f64)) + cells)
}

/// `log Σ_g λ_g Multinomial(y | π_g)`.
pub fn mixture_log_likelihood<T: Scalar>(topics: &Matrix<T>, weights: &[T], y: &[Count]) -> Result<T> {
    if weights.len() != topics.rows() {
        return Err(Error::DimensionMismatch {
            expected: topics.rows(),
            actual: weights.len(),
        });
    }
    let terms = topics
        .iter_rows()
        .zip(weights)
        .map(|(row, &w)| Ok(w.ln() + multinomial_log_pmf(row, y)?))
        .collect::<Result<Vec<T>>>()?;
    Ok(log_sum_exp(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// All count vectors of length `p` summing to `total`.
    fn compositions(total: Count, p: usize) -> Vec<Vec<Count>> {
        if p == 1 {
            return vec![vec![total]];
        }
        (0..=total)
            .flat_map(|first| {
                compositions(total - first, p - 1).into_iter().map(move |mut rest| {
                    rest.insert(0, first);
                    rest
                })
            })
            .collect()
    }

    #[test]
    fn delta_examples() {
        let a = delta_to_alpha(-0.4f64, &vec![1.0; 753]).unwrap();
        assert!((a - 451.8).abs() < 1e-9);
        assert_eq!(delta_to_alpha(0.0, &[0.5, 2.0]).unwrap(), 2.5);
        assert!((delta_to_alpha(0.1f64, &vec![1.0; 10]).unwrap() - 11.0).abs() < 1e-12);
        assert!(delta_to_alpha(-1.0, &[1.0]).is_err());
        assert!(delta_to_alpha(-1.5, &[1.0]).is_err());
    }

    #[test]
    fn defaults() {
        let h = MixtureHyperparams::<f64>::beta_liouville(4, 10, -0.3).unwrap();
        assert_eq!(h.psi, 1.25);
        assert_eq!(h.beta, 1.0);
        assert!((h.alpha - 6.3).abs() < 1e-12);
        assert!((h.delta() + 0.3).abs() < 1e-12);
        assert!(MixtureHyperparams::<f64>::beta_liouville(0, 10, 0.0).is_err());
        assert!(MixtureHyperparams::<f64>::dirichlet(2, 1).is_err());
    }

    #[test]
    fn beta_binomial_uniform() {
        let bl = BLParams::new(vec![1.0], 1.0, 1.0).unwrap();
        assert!((blm_log_pmf(&bl, &[1, 1]).unwrap() - (1.0f64 / 3.0).ln()).abs() < 1e-12);
        let dm = DirichletParams::new(vec![1.0, 1.0]).unwrap();
        assert!((dm_log_pmf(&dm, &[1, 1]).unwrap() - (1.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!(dm_log_pmf(&dm, &[0, 0]).unwrap().abs() < 1e-14);
        assert!(dm_log_pmf(&dm, &[0, 0, 1]).is_err());
    }

    #[test]
    fn pmfs_sum_to_one_by_enumeration() {
        let bl = BLParams::<f64>::new(vec![1.0, 1.0], 2.0, 1.0).unwrap();
        let s: f64 = compositions(4, 3).iter().map(|y| blm_log_pmf(&bl, y).unwrap().exp()).sum();
        assert!((s - 1.0).abs() < 1e-12);
        let dm = DirichletParams::<f64>::new(vec![1.0, 1.0, 1.0]).unwrap();
        let s: f64 = compositions(5, 3).iter().map(|y| dm_log_pmf(&dm, y).unwrap().exp()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_likelihood_cases() {
        let topics = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let v = mixture_log_likelihood(&topics, &[0.5, 0.5], &[2, 0]).unwrap();
        assert!((v - 0.5f64.ln()).abs() < 1e-12);

        let one = Matrix::<f64>::from_rows(vec![vec![0.2, 0.3, 0.5]]).unwrap();
        let y = [1, 0, 2];
        assert!(
            (mixture_log_likelihood(&one, &[1.0], &y).unwrap() - multinomial_log_pmf(one.row(0), &y).unwrap())
                .abs()
                < 1e-14
        );
        let same = Matrix::<f64>::from_rows(vec![vec![0.2, 0.3, 0.5], vec![0.2, 0.3, 0.5]]).unwrap();
        let a = mixture_log_likelihood(&same, &[0.1, 0.9], &y).unwrap();
        let b = mixture_log_likelihood(&same, &[0.7, 0.3], &y).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!(mixture_log_likelihood(&same, &[1.0], &y).is_err());
    }

    #[test]
    fn degenerate_single_group_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = MixtureHyperparams::<f64>::beta_liouville(1, 6, 0.0).unwrap();
        let c = sample_corpus(&h, 3, DocLengthLaw::Fixed(5), &mut rng).unwrap();
        assert_eq!(c.true_labels, vec![1, 1, 1]);
        assert!((0..3).all(|i| c.dtm.doc_length(i) == 5));
        assert_eq!(c.true_weights, vec![1.0]);
    }

    #[test]
    fn sampling_is_reproducible() {
        let h = MixtureHyperparams::<f64>::beta_liouville(3, 20, -0.2).unwrap();
        let a = sample_corpus(&h, 50, DocLengthLaw::Poisson(8.0), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_corpus(&h, 50, DocLengthLaw::Poisson(8.0), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.dtm, b.dtm);
        assert_eq!(a.true_labels, b.true_labels);
        assert_eq!(a.true_topics, b.true_topics);
        for row in a.true_topics.iter_rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((0..50).all(|i| a.dtm.doc_length(i) >= 1));
    }

    #[test]
    fn sampling_argument_errors() {
        let h = MixtureHyperparams::<f64>::dirichlet(2, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_corpus(&h, 0, DocLengthLaw::Fixed(3), &mut rng).is_err());
        assert!(sample_corpus(&h, 2, DocLengthLaw::Fixed(0), &mut rng).is_err());
        assert!(sample_corpus(&h, 2, DocLengthLaw::Poisson(0.5), &mut rng).is_err());
    }
}
