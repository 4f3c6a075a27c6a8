use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bl::{sample_dirichlet_f64, sample_gamma_f64};
use crate::error::{Error, Result};
use crate::generative::{MixtureHyperparams, PriorFamily};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::special::digamma;

const INIT_SHAPE: f64 = 1.0;
const INIT_SCALE: f64 = 100.0;

/// Parameters of the variational topic factors `q(π_g)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
#[serde(bound = "T: Scalar + Serialize + for<'a> Deserialize<'a>")]
pub enum TopicParams<T> {
    /// `q(π_g) = BL(φ_g1, …, φ_g(p-1), φ_gα, φ_gβ)`.
    BetaLiouville {
        /// `G × (p - 1)`.
        phi: Matrix<T>,
        phi_alpha: Vec<T>,
        phi_beta: Vec<T>,
    },
    /// `q(π_g) = Dirichlet(φ_g1, …, φ_gp)`.
    Dirichlet { phi: Matrix<T> },
}

impl<T: Scalar> TopicParams<T> {
    pub fn groups(&self) -> usize {
        match self {
            TopicParams::BetaLiouville { phi, .. } | TopicParams::Dirichlet { phi } => phi.rows(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            TopicParams::BetaLiouville { phi, .. } => phi.cols() + 1,
            TopicParams::Dirichlet { phi } => phi.cols(),
        }
    }

    pub fn family(&self) -> PriorFamily {
        match self {
            TopicParams::BetaLiouville { .. } => PriorFamily::BetaLiouville,
            TopicParams::Dirichlet { .. } => PriorFamily::Dirichlet,
        }
    }

    /// `E_q[log π_gl]` for all `g` and all `p` terms.
    pub fn expected_log_pi(&self) -> Matrix<T> {
        let (groups, p) = (self.groups(), self.vocab_size());
        let mut out = Matrix::filled(groups, p, T::zero());
        match self {
            TopicParams::BetaLiouville {
                phi,
                phi_alpha,
                phi_beta,
            } => {
                for g in 0..groups {
                    let row = phi.row(g);
                    let psi_ab = digamma(phi_alpha[g] + phi_beta[g]);
                    let e_log_sum = digamma(phi_alpha[g]) - psi_ab;
                    let psi_phi0 = digamma(row.iter().copied().sum::<T>());
                    let dst = out.row_mut(g);
                    for (d, &f) in dst.iter_mut().zip(row) {
                        *d = digamma(f) - psi_phi0 + e_log_sum;
                    }
                    dst[p - 1] = digamma(phi_beta[g]) - psi_ab;
                }
            }
            TopicParams::Dirichlet { phi } => {
                for g in 0..groups {
                    let row = phi.row(g);
                    let psi_total = digamma(row.iter().copied().sum::<T>());
                    for (d, &f) in out.row_mut(g).iter_mut().zip(row) {
                        *d = digamma(f) - psi_total;
                    }
                }
            }
        }
        out
    }
}

/// Variational parameters of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + for<'a> Deserialize<'a>")]
pub struct VariationalState<T> {
    /// Responsibilities, `n × G`, rows on the simplex.
    pub gamma: Matrix<T>,
    pub topics: TopicParams<T>,
    /// Dirichlet parameters of `q(λ)`.
    pub eta: Vec<T>,
}

/// Expectations of log topic probabilities and log weights under `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedLogs<T> {
    /// `G × p`.
    pub log_pi: Matrix<T>,
    pub log_lambda: Vec<T>,
}

impl<T: Scalar> VariationalState<T> {
    pub fn n_docs(&self) -> usize {
        self.gamma.rows()
    }

    pub fn groups(&self) -> usize {
        self.eta.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.topics.vocab_size()
    }

    pub fn expected_log_lambda(&self) -> Vec<T> {
        let psi_total = digamma(self.eta.iter().copied().sum::<T>());
        self.eta.iter().map(|&e| digamma(e) - psi_total).collect()
    }

    pub fn expected_logs(&self) -> ExpectedLogs<T> {
        ExpectedLogs {
            log_pi: self.topics.expected_log_pi(),
            log_lambda: self.expected_log_lambda(),
        }
    }

    /// Checks shapes, positivity and row normalization of `gamma`.
    pub fn validate(&self) -> Result<()> {
        let groups = self.groups();
        if groups == 0 || self.topics.groups() != groups || self.gamma.cols() != groups {
            return Err(Error::invalid("inconsistent number of groups in variational state"));
        }
        let positive = |name: &str, xs: &[T]| {
            xs.iter()
                .position(|&x| !(x.is_finite() && x > T::zero()))
                .map_or(Ok(()), |k| Err(Error::invalid(format!("{name}[{k}] = {} is not positive", xs[k]))))
        };
        positive("eta", &self.eta)?;
        match &self.topics {
            TopicParams::BetaLiouville {
                phi,
                phi_alpha,
                phi_beta,
            } => {
                if phi_alpha.len() != groups || phi_beta.len() != groups {
                    return Err(Error::invalid("phi_alpha/phi_beta length differs from the number of groups"));
                }
                positive("phi", phi.as_slice())?;
                positive("phi_alpha", phi_alpha)?;
                positive("phi_beta", phi_beta)?;
            }
            TopicParams::Dirichlet { phi } => positive("phi", phi.as_slice())?,
        }
        let tol = T::of(1e-10).max(T::epsilon() * T::of(64.0));
        for (i, row) in self.gamma.iter_rows().enumerate() {
            let s: T = row.iter().copied().sum();
            if row.iter().any(|&x| !(x >= T::zero())) || (s - T::one()).abs() > tol {
                return Err(Error::invalid(format!("gamma row {i} is not a probability vector")));
            }
        }
        Ok(())
    }
}

fn gamma_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let v = INIT_SCALE * sample_gamma_f64(INIT_SHAPE, rng);
        if v > 0.0 {
            return v;
        }
    }
}

/// Random starting point: global parameters i.i.d. Gamma(shape 1, scale 100),
/// responsibilities from a flat Dirichlet, `φ_gα = α`.
pub fn init_state<T: Scalar, R: Rng + ?Sized>(
    hyper: &MixtureHyperparams<T>,
    n_docs: usize,
    rng: &mut R,
) -> Result<VariationalState<T>> {
    hyper.validate()?;
    let (groups, p) = (hyper.groups, hyper.vocab_size);
    let topics = match hyper.prior_family {
        PriorFamily::BetaLiouville => {
            let phi = Matrix::from_fn(groups, p - 1, |_, _| T::of(gamma_draw(rng)));
            let phi_beta = (0..groups).map(|_| T::of(gamma_draw(rng))).collect();
            TopicParams::BetaLiouville {
                phi,
                phi_alpha: vec![hyper.alpha; groups],
                phi_beta,
            }
        }
        PriorFamily::Dirichlet => TopicParams::Dirichlet {
            phi: Matrix::from_fn(groups, p, |_, _| T::of(gamma_draw(rng))),
        },
    };
    let eta = (0..groups).map(|_| T::of(gamma_draw(rng))).collect();
    let ones = vec![T::one(); groups];
    let mut gamma = Matrix::filled(n_docs, groups, T::zero());
    for i in 0..n_docs {
        for (d, v) in gamma.row_mut(i).iter_mut().zip(sample_dirichlet_f64(&ones, rng)) {
            *d = T::of(v);
        }
    }
    Ok(VariationalState { gamma, topics, eta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hyper() -> MixtureHyperparams<f64> {
        MixtureHyperparams::beta_liouville(3, 7, -0.2).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_valid() {
        let a = init_state(&hyper(), 10, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = init_state(&hyper(), 10, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let c = init_state(&hyper(), 10, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        a.validate().unwrap();
        match &a.topics {
            TopicParams::BetaLiouville { phi_alpha, .. } => {
                assert!(phi_alpha.iter().all(|&x| x == hyper().alpha))
            }
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn dirichlet_init_shape() {
        let h = MixtureHyperparams::<f64>::dirichlet(2, 5).unwrap();
        let s = init_state(&h, 4, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(s.topics.vocab_size(), 5);
        assert_eq!(s.topics.family(), PriorFamily::Dirichlet);
        s.validate().unwrap();
    }

    #[test]
    fn expected_log_pi_matches_bl_stats() {
        let s = init_state(&hyper(), 2, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let logs = s.topics.expected_log_pi();
        if let TopicParams::BetaLiouville {
            phi,
            phi_alpha,
            phi_beta,
        } = &s.topics
        {
            for g in 0..3 {
                let bl = crate::bl::BLParams::new(phi.row(g).to_vec(), phi_alpha[g], phi_beta[g]).unwrap();
                let st = bl.expected_log_stats();
                for l in 0..6 {
                    assert!((logs.get(g, l) - st.e_log_pi[l]).abs() < 1e-12);
                }
                assert!((logs.get(g, 6) - st.e_log_last).abs() < 1e-12);
            }
        }
    }
}
