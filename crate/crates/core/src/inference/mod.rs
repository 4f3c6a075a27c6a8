//! Variational inference for Beta-Liouville and Dirichlet multinomial
//! mixtures: coordinate ascent (CAVI), stochastic updates (SVI), the evidence
//! lower bound and the multi-restart driver.

mod elbo;
mod fit;
mod state;
mod updates;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use elbo::{compute_elbo, elbo_terms, ElboTerms};
pub use fit::{estimate_topics, fit, map_assign, BetaSlot, FitResult, RestartSummary, TracePoint};
pub use state::{init_state, ExpectedLogs, TopicParams, VariationalState};
pub use updates::{
    blend, cavi_sweep, cavi_update_eta, cavi_update_gamma, cavi_update_phi, local_responsibilities, step_size,
    svi_step,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Cavi,
    Svi,
}

/// How the generator parameter `φ_gα` of each Beta-Liouville topic factor is
/// set during the global update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiAlphaRule {
    /// `φ_gα = α + Σ_i γ_ig Σ_{l<p} y_il`, the exact coordinate optimum.
    Conjugate,
    /// `φ_gα = α` at every iteration.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub algorithm: Algorithm,
    pub max_iter: usize,
    /// Forgetting rate of the SVI step size `(1 + t)^(-κ)`.
    pub kappa: f64,
    pub restarts: usize,
    pub seed: u64,
    pub elbo_every: usize,
    /// Relative ELBO change below which CAVI stops (two evaluations in a row).
    pub tol: f64,
    pub phi_alpha_rule: PhiAlphaRule,
    pub beta_slot: BetaSlot,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            algorithm: Algorithm::Svi,
            max_iter: 5000,
            kappa: 0.6,
            restarts: 30,
            seed: 0,
            elbo_every: 50,
            tol: 1e-6,
            phi_alpha_rule: PhiAlphaRule::Conjugate,
            beta_slot: BetaSlot::Last,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.5 && self.kappa <= 1.0) {
            return Err(Error::invalid(format!("kappa must lie in (0.5, 1], got {}", self.kappa)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if self.elbo_every == 0 {
            return Err(Error::invalid("elbo_every must be at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid(format!("tol must be >= 0, got {}", self.tol)));
        }
        Ok(())
    }
}
