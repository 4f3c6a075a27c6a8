use rand::Rng;

use super::state::{ExpectedLogs, TopicParams, VariationalState};
use super::PhiAlphaRule;
use crate::corpus::DocumentTermMatrix;
use crate::error::{Error, Result};
use crate::generative::{MixtureHyperparams, PriorFamily};
use crate::matrix::Matrix;
use crate::scalar::{softmax_in_place, Scalar};

fn check_shapes<T: Scalar>(state: &VariationalState<T>, dtm: &DocumentTermMatrix, hyper: &MixtureHyperparams<T>) -> Result<()> {
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
    if state.groups() != hyper.groups {
        return Err(Error::DimensionMismatch {
            expected: hyper.groups,
            actual: state.groups(),
        });
    }
    if state.topics.family() != hyper.prior_family {
        return Err(Error::invalid("variational family does not match the prior family"));
    }
    Ok(())
}

/// Responsibilities of one document under the current expectations, written
/// into `out` (length `G`). Normalized in log space.
pub fn local_responsibilities<T: Scalar>(
    logs: &ExpectedLogs<T>,
    dtm: &DocumentTermMatrix,
    doc: usize,
    out: &mut [T],
) -> Result<()> {
    let (cols, counts) = dtm.row(doc);
    for (g, o) in out.iter_mut().enumerate() {
        let row = logs.log_pi.row(g);
        let ll: T = cols
            .iter()
            .zip(counts)
            .map(|(&l, &y)| T::of(f64::from(y)) * row[l])
            .sum();
        *o = ll + logs.log_lambda[g];
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical {
            iteration: 0,
            what: format!("non-finite responsibility logit for document {doc}"),
        });
    }
    softmax_in_place(out);
    Ok(())
}

/// Recomputes every row of `gamma` from the current global parameters.
pub fn cavi_update_gamma<T: Scalar>(
    state: &mut VariationalState<T>,
    dtm: &DocumentTermMatrix,
    hyper: &MixtureHyperparams<T>,
) -> Result<()> {
    check_shapes(state, dtm, hyper)?;
    let logs = state.expected_logs();
    for i in 0..dtm.n_docs() {
        local_responsibilities(&logs, dtm, i, state.gamma.row_mut(i))?;
    }
    Ok(())
}

/// `Σ_i y_il γ_ig` as a `G × p` matrix.
fn expected_counts<T: Scalar>(gamma: &Matrix<T>, dtm: &DocumentTermMatrix) -> Matrix<T> {
    let groups = gamma.cols();
    let mut acc = Matrix::filled(groups, dtm.n_terms(), T::zero());
    for i in 0..dtm.n_docs() {
        let resp = gamma.row(i);
        for (l, y) in dtm.row_entries(i) {
            let y = T::of(f64::from(y));
            for (g, &r) in resp.iter().enumerate() {
                let cur = acc.get(g, l);
                acc.set(g, l, cur + y * r);
            }
        }
    }
    acc
}

/// Global topic update from the expected counts.
pub fn cavi_update_phi<T: Scalar>(
    state: &mut VariationalState<T>,
    dtm: &DocumentTermMatrix,
    hyper: &MixtureHyperparams<T>,
    rule: PhiAlphaRule,
) -> Result<()> {
    check_shapes(state, dtm, hyper)?;
    let counts = expected_counts(&state.gamma, dtm);
    let p = hyper.vocab_size;
    match &mut state.topics {
        TopicParams::BetaLiouville {
            phi,
            phi_alpha,
            phi_beta,
        } => {
            for g in 0..hyper.groups {
                let c = counts.row(g);
                for (l, dst) in phi.row_mut(g).iter_mut().enumerate() {
                    *dst = hyper.alphas[l] + c[l];
                }
                phi_beta[g] = hyper.beta + c[p - 1];
                phi_alpha[g] = match rule {
                    PhiAlphaRule::Fixed => hyper.alpha,
                    PhiAlphaRule::Conjugate => hyper.alpha + c[..p - 1].iter().copied().sum::<T>(),
                };
            }
        }
        TopicParams::Dirichlet { phi } => {
            for g in 0..hyper.groups {
                for (dst, &c) in phi.row_mut(g).iter_mut().zip(counts.row(g)) {
                    *dst = hyper.theta + c;
                }
            }
        }
    }
    Ok(())
}

/// `η_g = ψ + Σ_i γ_ig`.
pub fn cavi_update_eta<T: Scalar>(state: &mut VariationalState<T>, hyper: &MixtureHyperparams<T>) -> Result<()> {
    if state.groups() != hyper.groups {
        return Err(Error::DimensionMismatch {
            expected: hyper.groups,
            actual: state.groups(),
        });
    }
    let mut eta = vec![hyper.psi; hyper.groups];
    for row in state.gamma.iter_rows() {
        for (e, &r) in eta.iter_mut().zip(row) {
            *e = *e + r;
        }
    }
    state.eta = eta;
    Ok(())
}

/// One coordinate-ascent sweep: responsibilities, topics, weights.
pub fn cavi_sweep<T: Scalar>(
    state: &mut VariationalState<T>,
    dtm: &DocumentTermMatrix,
    hyper: &MixtureHyperparams<T>,
    rule: PhiAlphaRule,
) -> Result<()> {
    cavi_update_gamma(state, dtm, hyper)?;
    cavi_update_phi(state, dtm, hyper, rule)?;
    cavi_update_eta(state, hyper)
}

/// Robbins-Monro step size `(1 + t)^(-κ)`.
pub fn step_size(t: usize, kappa: f64) -> f64 {
    (1.0 + t as f64).powf(-kappa)
}

/// Convex combination `(1 - ρ)·current + ρ·target`.
#[inline]
pub fn blend<T: Scalar>(current: T, target: T, rho: T) -> T {
    (T::one() - rho) * current + rho * target
}

/// One stochastic step at iteration `t >= 1`: samples a document uniformly,
/// refreshes its responsibilities, and moves every global parameter toward
/// the estimate obtained by replicating that document `n` times.
pub fn svi_step<T: Scalar, R: Rng + ?Sized>(
    state: &mut VariationalState<T>,
    dtm: &DocumentTermMatrix,
    hyper: &MixtureHyperparams<T>,
    rule: PhiAlphaRule,
    t: usize,
    kappa: f64,
    rng: &mut R,
) -> Result<()> {
    check_shapes(state, dtm, hyper)?;
    if t == 0 {
        return Err(Error::invalid("SVI iterations are numbered from 1"));
    }
    let n = dtm.n_docs();
    let s = rng.random_range(0..n);
    let logs = state.expected_logs();
    local_responsibilities(&logs, dtm, s, state.gamma.row_mut(s))?;
    let resp = state.gamma.row(s).to_vec();

    let rho = T::of(step_size(t, kappa));
    let n_t = T::of_usize(n);
    let p = hyper.vocab_size;
    let y = dtm.dense_row(s);
    let y: Vec<T> = y.iter().map(|&c| T::of(f64::from(c))).collect();
    let head_total: T = y[..p - 1].iter().copied().sum();

    match (&mut state.topics, hyper.prior_family) {
        (
            TopicParams::BetaLiouville {
                phi,
                phi_alpha,
                phi_beta,
            },
            PriorFamily::BetaLiouville,
        ) => {
            for (g, &r) in resp.iter().enumerate() {
                for (l, dst) in phi.row_mut(g).iter_mut().enumerate() {
                    *dst = blend(*dst, hyper.alphas[l] + n_t * y[l] * r, rho);
                }
                phi_beta[g] = blend(phi_beta[g], hyper.beta + n_t * y[p - 1] * r, rho);
                if rule == PhiAlphaRule::Conjugate {
                    phi_alpha[g] = blend(phi_alpha[g], hyper.alpha + n_t * head_total * r, rho);
                }
            }
        }
        (TopicParams::Dirichlet { phi }, PriorFamily::Dirichlet) => {
            for (g, &r) in resp.iter().enumerate() {
                for (dst, &yl) in phi.row_mut(g).iter_mut().zip(&y) {
                    *dst = blend(*dst, hyper.theta + n_t * yl * r, rho);
                }
            }
        }
        _ => unreachable!("family checked above"),
    }
    for (e, &r) in state.eta.iter_mut().zip(&resp) {
        *e = blend(*e, hyper.psi + n_t * r, rho);
    }
    Ok(())
}
