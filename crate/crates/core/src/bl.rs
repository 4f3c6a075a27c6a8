//! Beta-Liouville distribution on the probability simplex and its Dirichlet
//! special case.
//!
//! A `BLParams` with `p - 1` component concentrations describes a distribution
//! over `p`-dimensional probability vectors `(π_1, …, π_p)`. The first `p - 1`
//! coordinates are `r·u` with `u ~ Dirichlet(alphas)` and `r ~ Beta(alpha, beta)`;
//! the last coordinate is `1 - r`. At `alpha == alphas.sum()` the law is
//! `Dirichlet(alphas…, beta)`.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::special::{digamma, ln_beta, ln_gamma};
use crate::Count;

fn check_positive<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")))
    }
}

/// Parameters `(α_1, …, α_{p-1}, α, β)` of a Beta-Liouville distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBLParams<T>", into = "RawBLParams<T>")]
#[serde(bound = "T: Scalar + Serialize + for<'a> Deserialize<'a>")]
pub struct BLParams<T> {
    alphas: Vec<T>,
    alpha: T,
    beta: T,
    alpha0: T,
}

#[derive(Serialize, Deserialize)]
struct RawBLParams<T> {
    alphas: Vec<T>,
    alpha: T,
    beta: T,
}

impl<T: Scalar> TryFrom<RawBLParams<T>> for BLParams<T> {
    type Error = Error;

    fn try_from(raw: RawBLParams<T>) -> Result<Self> {
        BLParams::new(raw.alphas, raw.alpha, raw.beta)
    }
}

impl<T: Scalar> From<BLParams<T>> for RawBLParams<T> {
    fn from(p: BLParams<T>) -> Self {
        RawBLParams {
            alphas: p.alphas,
            alpha: p.alpha,
            beta: p.beta,
        }
    }
}

impl<T: Scalar> BLParams<T> {
    pub fn new(alphas: Vec<T>, alpha: T, beta: T) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::invalid("Beta-Liouville needs p >= 2 (at least one alpha_l)"));
        }
        for (l, &a) in alphas.iter().enumerate() {
            check_positive(&format!("alphas[{l}]"), a)?;
        }
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        let alpha0 = alphas.iter().copied().sum();
        Ok(BLParams {
            alphas,
            alpha,
            beta,
            alpha0,
        })
    }

    /// The parameterization that reduces to `Dirichlet(alphas…, beta)`.
    pub fn dirichlet_equivalent(alphas: Vec<T>, beta: T) -> Result<Self> {
        let alpha0: T = alphas.iter().copied().sum();
        Self::new(alphas, alpha0, beta)
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// Sum of `alphas`.
    pub fn alpha0(&self) -> T {
        self.alpha0
    }

    /// Dimension `p` of the simplex the distribution lives on.
    pub fn dim(&self) -> usize {
        self.alphas.len() + 1
    }

    /// Log of the normalizing constant
    /// `Γ(α_0) Γ(α+β) / (Γ(α) Γ(β) Π Γ(α_l))`.
    pub fn log_normalizer(&self) -> T {
        ln_gamma(self.alpha0) - ln_beta(self.alpha, self.beta)
            - self.alphas.iter().map(|&a| ln_gamma(a)).sum::<T>()
    }

    /// Log density at an interior simplex point.
    pub fn log_density(&self, x: &SimplexPoint<T>) -> Result<T> {
        let coords = x.coords();
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: coords.len(),
            });
        }
        if let Some(l) = coords.iter().position(|&c| c <= T::zero()) {
            return Err(Error::Domain(format!(
                "log density requires an interior point; coordinate {l} is {}",
                coords[l]
            )));
        }
        let (head, last) = coords.split_at(self.alphas.len());
        let sum: T = head.iter().copied().sum();
        let kernel: T = self
            .alphas
            .iter()
            .zip(head)
            .map(|(&a, &x)| (a - T::one()) * x.ln())
            .sum();
        Ok(self.log_normalizer()
            + kernel
            + (self.alpha - self.alpha0) * sum.ln()
            + (self.beta - T::one()) * last[0].ln())
    }

    /// Draws one point through the generator construction, using Gamma
    /// variates for both the Dirichlet direction and the Beta radius.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SimplexPoint<T> {
        let u = sample_dirichlet_f64(&self.alphas, rng);
        let r = sample_beta_f64(self.alpha.as_f64(), self.beta.as_f64(), rng);
        let mut coords: Vec<T> = u.iter().map(|&u| T::of(r * u)).collect();
        coords.push(T::of(1.0 - r));
        SimplexPoint { coords }
    }

    pub fn moments(&self) -> BLMoments<T> {
        let one = T::one();
        let (a, b, a0) = (self.alpha, self.beta, self.alpha0);
        let mu1 = a / (a + b);
        let mu2 = a * (a + one) / ((a + b) * (a + b + one));
        let mean: Vec<T> = self.alphas.iter().map(|&al| mu1 * al / a0).collect();
        let variance: Vec<T> = self
            .alphas
            .iter()
            .map(|&al| mu2 * al * (al + one) / (a0 * (a0 + one)) - mu1 * mu1 * al * al / (a0 * a0))
            .collect();
        let cross = mu2 / (a0 + one) - mu1 * mu1 / a0;
        let k = self.alphas.len();
        let covariance = Matrix::from_fn(k, k, |i, j| {
            if i == j {
                variance[i]
            } else {
                self.alphas[i] * self.alphas[j] / a0 * cross
            }
        });
        BLMoments {
            mean,
            variance,
            covariance,
        }
    }

    /// Expectations of `log π_l` (l < p), `log Σ_{l<p} π_l` and `log π_p`.
    pub fn expected_log_stats(&self) -> ExpectedLogStats<T> {
        let psi_ab = digamma(self.alpha + self.beta);
        let e_log_sum = digamma(self.alpha) - psi_ab;
        let e_log_last = digamma(self.beta) - psi_ab;
        let psi_a0 = digamma(self.alpha0);
        let e_log_pi = self
            .alphas
            .iter()
            .map(|&a| digamma(a) - psi_a0 + e_log_sum)
            .collect();
        ExpectedLogStats {
            e_log_pi,
            e_log_sum,
            e_log_last,
        }
    }

    /// Conjugate update with a count vector of length `p`.
    pub fn posterior(&self, counts: &[Count]) -> Result<Self> {
        if counts.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: counts.len(),
            });
        }
        let (head, last) = counts.split_at(self.alphas.len());
        let alphas = self
            .alphas
            .iter()
            .zip(head)
            .map(|(&a, &y)| a + T::of(f64::from(y)))
            .collect();
        let head_total: u64 = head.iter().map(|&y| u64::from(y)).sum();
        Self::new(
            alphas,
            self.alpha + T::of(head_total as f64),
            self.beta + T::of(f64::from(last[0])),
        )
    }
}

/// Mean, variance and covariance of the first `p - 1` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BLMoments<T> {
    pub mean: Vec<T>,
    pub variance: Vec<T>,
    pub covariance: Matrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedLogStats<T> {
    /// `E[log π_l]` for `l < p`.
    pub e_log_pi: Vec<T>,
    /// `E[log Σ_{l<p} π_l]`.
    pub e_log_sum: T,
    /// `E[log π_p]`.
    pub e_log_last: T,
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint<T> {
    coords: Vec<T>,
}

impl<T: Scalar> SimplexPoint<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::invalid("simplex point needs at least two coordinates"));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite() || **c < T::zero()) {
            return Err(Error::invalid(format!("simplex coordinate {c} is negative or non-finite")));
        }
        let sum: T = coords.iter().copied().sum();
        let tol = T::of(1e-12).max(T::epsilon() * T::of_usize(16 * coords.len()));
        if (sum - T::one()).abs() > tol {
            return Err(Error::invalid(format!("simplex coordinates sum to {sum}, not 1")));
        }
        Ok(SimplexPoint { coords })
    }

    /// Builds `(x_1, …, x_{p-1}, 1 - Σ x)` from the free coordinates.
    pub fn from_free(head: &[T]) -> Result<Self> {
        let sum: T = head.iter().copied().sum();
        let mut coords = head.to_vec();
        coords.push(T::one() - sum);
        Self::new(coords)
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Concentration vector of a Dirichlet distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams<T> {
    concentrations: Vec<T>,
}

impl<T: Scalar> DirichletParams<T> {
    pub fn new(concentrations: Vec<T>) -> Result<Self> {
        if concentrations.is_empty() {
            return Err(Error::invalid("Dirichlet needs at least one concentration"));
        }
        for (i, &c) in concentrations.iter().enumerate() {
            check_positive(&format!("concentrations[{i}]"), c)?;
        }
        Ok(DirichletParams { concentrations })
    }

    pub fn symmetric(dim: usize, c: T) -> Result<Self> {
        Self::new(vec![c; dim])
    }

    pub fn concentrations(&self) -> &[T] {
        &self.concentrations
    }

    pub fn dim(&self) -> usize {
        self.concentrations.len()
    }

    pub fn total(&self) -> T {
        self.concentrations.iter().copied().sum()
    }

    /// `ln Γ(Σc) − Σ ln Γ(c_g)`.
    pub fn log_normalizer(&self) -> T {
        ln_gamma(self.total()) - self.concentrations.iter().map(|&c| ln_gamma(c)).sum::<T>()
    }

    /// Component-wise `E[log x_g] = Ψ(c_g) − Ψ(Σc)`.
    pub fn expected_log(&self) -> Vec<T> {
        let psi_total = digamma(self.total());
        self.concentrations.iter().map(|&c| digamma(c) - psi_total).collect()
    }

    pub fn log_density(&self, x: &SimplexPoint<T>) -> Result<T> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.dim(),
            });
        }
        if let Some(l) = x.coords().iter().position(|&c| c <= T::zero()) {
            return Err(Error::Domain(format!(
                "log density requires an interior point; coordinate {l} is zero"
            )));
        }
        let kernel: T = self
            .concentrations
            .iter()
            .zip(x.coords())
            .map(|(&c, &x)| (c - T::one()) * x.ln())
            .sum();
        Ok(self.log_normalizer() + kernel)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SimplexPoint<T> {
        let coords = sample_dirichlet_f64(&self.concentrations, rng)
            .into_iter()
            .map(T::of)
            .collect();
        SimplexPoint { coords }
    }
}

pub(crate) fn sample_gamma_f64<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0)
        .expect("validated positive shape")
        .sample(rng)
}

pub(crate) fn sample_dirichlet_f64<T: Scalar, R: Rng + ?Sized>(conc: &[T], rng: &mut R) -> Vec<f64> {
    let mut draws: Vec<f64> = conc.iter().map(|&c| sample_gamma_f64(c.as_f64(), rng)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.iter_mut().for_each(|d| *d /= total);
    } else {
        // Every Gamma draw underflowed (tiny shapes): put the mass on the largest shape.
        let best = conc
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
            .map_or(0, |(i, _)| i);
        draws[best] = 1.0;
    }
    draws
}

pub(crate) fn sample_beta_f64<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let x = sample_gamma_f64(a, rng);
    let y = sample_gamma_f64(b, rng);
    if x + y > 0.0 {
        x / (x + y)
    } else if a >= b {
        1.0
    } else {
        0.0
    }
}
