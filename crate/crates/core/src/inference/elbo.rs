use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::{TopicParams, VariationalState};
use crate::corpus::DocumentTermMatrix;
use crate::error::{Error, Result};
use crate::generative::MixtureHyperparams;
use crate::scalar::Scalar;
use crate::special::{digamma, ln_gamma};

/// The evidence lower bound split into its term groups. The multinomial
/// coefficients of the documents are left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElboTerms<T> {
    /// `Σ_i Σ_g γ_ig Σ_l y_il E[log π_gl]`.
    pub likelihood: T,
    /// `Σ_i Σ_g γ_ig E[log λ_g]`.
    pub assignment: T,
    /// `-Σ_i Σ_g γ_ig log γ_ig`.
    pub assignment_entropy: T,
    /// `Σ_g E[log p(π_g)]`.
    pub topic_prior: T,
    /// `-Σ_g E[log q(π_g)]`.
    pub topic_entropy: T,
    /// `E[log p(λ)]`.
    pub weight_prior: T,
    /// `-E[log q(λ)]`.
    pub weight_entropy: T,
}

impl<T: Scalar> ElboTerms<T> {
    pub fn total(&self) -> T {
        self.likelihood
            + self.assignment
            + self.assignment_entropy
            + self.topic_prior
            + self.topic_entropy
            + self.weight_prior
            + self.weight_entropy
    }

    fn named(&self) -> [(&'static str, T); 7] {
        [
            ("likelihood", self.likelihood),
            ("assignment", self.assignment),
            ("assignment_entropy", self.assignment_entropy),
            ("topic_prior", self.topic_prior),
            ("topic_entropy", self.topic_entropy),
            ("weight_prior", self.weight_prior),
            ("weight_entropy", self.weight_entropy),
        ]
    }
}

/// Evaluates every term group of the bound at `state`.
pub fn elbo_terms<T: Scalar>(
    state: &VariationalState<T>,
    dtm: &DocumentTermMatrix,
    hyper: &MixtureHyperparams<T>,
) -> Result<ElboTerms<T>> {
    hyper.validate()?;
    if state.n_docs() != dtm.n_docs() {
        return Err(Error::DimensionMismatch {
            expected: dtm.n_docs(),
            actual: state.n_docs(),
        });
    }
    if state.vocab_size() != dtm.n_terms() || hyper.vocab_size != dtm.n_terms() {
        return Err(Error::DimensionMismatch {
            expected: dtm.n_terms(),
            actual: state.vocab_size(),
        });
    }
    if state.groups() != hyper.groups || state.topics.family() != hyper.prior_family {
        return Err(Error::invalid("variational state does not match the hyperparameters"));
    }
    let logs = state.expected_logs();

    // Per-document contributions, summed in document order.
    let per_doc: Vec<(T, T, T)> = (0..dtm.n_docs())
        .into_par_iter()
        .map(|i| {
            let (cols, counts) = dtm.row(i);
            let (mut lik, mut asg, mut ent) = (T::zero(), T::zero(), T::zero());
            for (g, &r) in state.gamma.row(i).iter().enumerate() {
                if r <= T::zero() {
                    continue;
                }
                let row = logs.log_pi.row(g);
                let ll: T = cols.iter().zip(counts).map(|(&l, &y)| T::of(f64::from(y)) * row[l]).sum();
                lik = lik + r * ll;
                asg = asg + r * logs.log_lambda[g];
                ent = ent - r * r.ln();
            }
            (lik, asg, ent)
        })
        .collect();
    let (mut likelihood, mut assignment, mut assignment_entropy) = (T::zero(), T::zero(), T::zero());
    for (a, b, c) in per_doc {
        likelihood = likelihood + a;
        assignment = assignment + b;
        assignment_entropy = assignment_entropy + c;
    }

    let (mut topic_prior, mut topic_entropy) = (T::zero(), T::zero());
    match &state.topics {
        TopicParams::BetaLiouville {
            phi,
            phi_alpha,
            phi_beta,
        } => {
            let alpha0 = hyper.alpha0();
            let prior_log_c = ln_gamma(alpha0) + ln_gamma(hyper.alpha + hyper.beta)
                - ln_gamma(hyper.alpha)
                - ln_gamma(hyper.beta)
                - hyper.alphas.iter().map(|&a| ln_gamma(a)).sum::<T>();
            let p = hyper.vocab_size;
            for g in 0..hyper.groups {
                let f = phi.row(g);
                let (fa, fb) = (phi_alpha[g], phi_beta[g]);
                let f0: T = f.iter().copied().sum();
                let e_log_pi = logs.log_pi.row(g);
                let e_s2 = digamma(fa) - digamma(fa + fb);
                let e_s3 = e_log_pi[p - 1];

                let mut prior = prior_log_c + (hyper.alpha - alpha0) * e_s2 + (hyper.beta - T::one()) * e_s3;
                for (&a, &e) in hyper.alphas.iter().zip(e_log_pi) {
                    prior = prior + (a - T::one()) * e;
                }
                topic_prior = topic_prior + prior;

                let log_c = ln_gamma(f0) + ln_gamma(fa + fb)
                    - ln_gamma(fa)
                    - ln_gamma(fb)
                    - f.iter().map(|&x| ln_gamma(x)).sum::<T>();
                let mut log_q = log_c + (fa - f0) * e_s2 + (fb - T::one()) * e_s3;
                for (&x, &e) in f.iter().zip(e_log_pi) {
                    log_q = log_q + (x - T::one()) * e;
                }
                topic_entropy = topic_entropy - log_q;
            }
        }
        TopicParams::Dirichlet { phi } => {
            let p = T::of_usize(hyper.vocab_size);
            let prior_log_c = ln_gamma(p * hyper.theta) - p * ln_gamma(hyper.theta);
            for g in 0..hyper.groups {
                let f = phi.row(g);
                let e_log_pi = logs.log_pi.row(g);
                let sum_e: T = e_log_pi.iter().copied().sum();
                topic_prior = topic_prior + prior_log_c + (hyper.theta - T::one()) * sum_e;
                let mut log_q = ln_gamma(f.iter().copied().sum::<T>()) - f.iter().map(|&x| ln_gamma(x)).sum::<T>();
                for (&x, &e) in f.iter().zip(e_log_pi) {
                    log_q = log_q + (x - T::one()) * e;
                }
                topic_entropy = topic_entropy - log_q;
            }
        }
    }

    let groups = T::of_usize(hyper.groups);
    let sum_e_lambda: T = logs.log_lambda.iter().copied().sum();
    let weight_prior =
        ln_gamma(groups * hyper.psi) - groups * ln_gamma(hyper.psi) + (hyper.psi - T::one()) * sum_e_lambda;
    let mut log_q_lambda = ln_gamma(state.eta.iter().copied().sum::<T>());
    for (&e, &el) in state.eta.iter().zip(&logs.log_lambda) {
        log_q_lambda = log_q_lambda - ln_gamma(e) + (e - T::one()) * el;
    }

    Ok(ElboTerms {
        likelihood,
        assignment,
        assignment_entropy,
        topic_prior,
        topic_entropy,
        weight_prior,
        weight_entropy: -log_q_lambda,
    })
}

/// The evidence lower bound at `state`. Fails with a numerical error naming
/// the first non-finite term group.
pub fn compute_elbo<T: Scalar>(
    state: &VariationalState<T>,
    dtm: &DocumentTermMatrix,
    hyper: &MixtureHyperparams<T>,
) -> Result<T> {
    let terms = elbo_terms(state, dtm, hyper)?;
    if let Some((name, v)) = terms.named().into_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Numerical {
            iteration: 0,
            what: format!("ELBO term group `{name}` is {v}"),
        });
    }
    Ok(terms.total())
}
