use std::time::Instant;

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::elbo::compute_elbo;
use super::state::{init_state, TopicParams, VariationalState};
use super::updates::{cavi_sweep, cavi_update_gamma, svi_step};
use super::{Algorithm, FitConfig};
use crate::corpus::DocumentTermMatrix;
use crate::error::{Error, Result};
use crate::generative::MixtureHyperparams;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Which corpus column plays the role of the last (`β`) coordinate of the
/// Beta-Liouville topic prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaSlot {
    /// Keep the corpus column order.
    #[default]
    Last,
    /// Sort columns by descending corpus frequency (stable), so the rarest
    /// term takes the last slot.
    LeastFrequent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint<T> {
    pub iteration: usize,
    pub elbo: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary<T> {
    pub restart: usize,
    /// ChaCha8 stream of the master seed used by this restart.
    pub stream: u64,
    pub final_elbo: Option<T>,
    pub iterations: usize,
    pub converged: bool,
    pub runtime_seconds: f64,
    pub error: Option<String>,
}

/// Outcome of a multi-restart fit: the best chain plus run metadata.
///
/// `state` lives in the fitted column order (see `column_order`), while
/// `topic_estimates` is mapped back to the column order of the input matrix.
/// Document-indexed fields refer to the matrix after all-zero documents were
/// removed; `dropped_docs` holds the original indices of those.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + for<'a> Deserialize<'a>")]
pub struct FitResult<T> {
    pub state: VariationalState<T>,
    pub elbo_trace: Vec<TracePoint<T>>,
    /// MAP labels in `1..=G`.
    pub assignments: Vec<usize>,
    pub topic_estimates: Matrix<T>,
    pub weight_estimates: Vec<T>,
    /// Mean wall-clock seconds per restart.
    pub runtime_seconds: f64,
    pub seed: u64,
    pub config: FitConfig,
    pub hyperparams: MixtureHyperparams<T>,
    /// Input column placed in the `β` slot.
    pub beta_slot_column: usize,
    /// `column_order[k]` is the input column at fitted position `k`.
    pub column_order: Vec<usize>,
    pub dropped_docs: Vec<usize>,
    /// Components that received no document under MAP assignment.
    pub empty_clusters: Vec<usize>,
    pub best_restart: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Whether responsibilities were recomputed for every document with the
    /// final global parameters before assignment (always the case for SVI).
    pub final_local_pass: bool,
    pub restarts: Vec<RestartSummary<T>>,
}

impl<T: Scalar> FitResult<T> {
    pub fn final_elbo(&self) -> T {
        self.elbo_trace.last().map(|p| p.elbo).unwrap_or_else(T::nan)
    }

    /// The trace as `iteration,elbo` CSV with a header line.
    pub fn elbo_csv(&self) -> String {
        let mut out = String::from("iteration,elbo\n");
        for p in &self.elbo_trace {
            out.push_str(&format!("{},{}\n", p.iteration, p.elbo));
        }
        out
    }
}

/// Per-row argmax of `gamma` as labels `1..=G`; ties go to the lowest index.
pub fn map_assign<T: Scalar>(gamma: &Matrix<T>) -> Vec<usize> {
    gamma
        .iter_rows()
        .map(|row| {
            let mut best = 0;
            for (g, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = g;
                }
            }
            best + 1
        })
        .collect()
}

/// Posterior-mean topic estimates, one row-stochastic `p`-vector per group.
pub fn estimate_topics<T: Scalar>(state: &VariationalState<T>) -> Matrix<T> {
    let (groups, p) = (state.groups(), state.vocab_size());
    let mut out = Matrix::filled(groups, p, T::zero());
    for g in 0..groups {
        let dst = out.row_mut(g);
        match &state.topics {
            TopicParams::BetaLiouville { phi, phi_beta, .. } => {
                dst[..p - 1].copy_from_slice(phi.row(g));
                dst[p - 1] = phi_beta[g];
            }
            TopicParams::Dirichlet { phi } => dst.copy_from_slice(phi.row(g)),
        }
        let total: T = dst.iter().copied().sum();
        for v in dst.iter_mut() {
            *v = *v / total;
        }
    }
    out
}

fn with_iteration(err: Error, t: usize) -> Error {
    match err {
        Error::Numerical { what, .. } => Error::Numerical { iteration: t, what },
        other => other,
    }
}

struct Chain<T> {
    state: VariationalState<T>,
    trace: Vec<TracePoint<T>>,
    iterations: usize,
    converged: bool,
    seconds: f64,
}

/// ELBO of the current globals with every responsibility at its optimum.
fn elbo_at_local_optimum<T: Scalar>(
    state: &VariationalState<T>,
    dtm: &DocumentTermMatrix,
    hyper: &MixtureHyperparams<T>,
) -> Result<T> {
    let mut local = state.clone();
    cavi_update_gamma(&mut local, dtm, hyper)?;
    compute_elbo(&local, dtm, hyper)
}

fn run_chain<T: Scalar>(
    dtm: &DocumentTermMatrix,
    hyper: &MixtureHyperparams<T>,
    config: &FitConfig,
    restart: usize,
) -> Result<Chain<T>> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(restart as u64);
    let mut state = init_state(hyper, dtm.n_docs(), &mut rng)?;
    let every = config.elbo_every;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    match config.algorithm {
        Algorithm::Cavi => {
            let mut prev = compute_elbo(&state, dtm, hyper)?;
            trace.push(TracePoint { iteration: 0, elbo: prev });
            let mut small = 0;
            for t in 1..=config.max_iter {
                cavi_sweep(&mut state, dtm, hyper, config.phi_alpha_rule).map_err(|e| with_iteration(e, t))?;
                iterations = t;
                if t % every == 0 || t == config.max_iter {
                    let e = compute_elbo(&state, dtm, hyper).map_err(|e| with_iteration(e, t))?;
                    trace.push(TracePoint { iteration: t, elbo: e });
                    let rel = ((e - prev) / prev.abs().max(T::min_positive_value())).abs();
                    small = if rel.as_f64() < config.tol { small + 1 } else { 0 };
                    prev = e;
                    if small >= 2 {
                        converged = true;
                        break;
                    }
                }
            }
        }
        Algorithm::Svi => {
            let e = elbo_at_local_optimum(&state, dtm, hyper)?;
            trace.push(TracePoint { iteration: 0, elbo: e });
            for t in 1..=config.max_iter {
                svi_step(&mut state, dtm, hyper, config.phi_alpha_rule, t, config.kappa, &mut rng)
                    .map_err(|e| with_iteration(e, t))?;
                iterations = t;
                if t % every == 0 || t == config.max_iter {
                    let e = elbo_at_local_optimum(&state, dtm, hyper).map_err(|e| with_iteration(e, t))?;
                    trace.push(TracePoint { iteration: t, elbo: e });
                }
            }
            cavi_update_gamma(&mut state, dtm, hyper).map_err(|e| with_iteration(e, iterations))?;
        }
    }
    debug!(
        "restart {restart}: {iterations} iterations, final ELBO {}",
        trace.last().map(|p| p.elbo).unwrap_or_else(T::nan)
    );
    Ok(Chain {
        state,
        trace,
        iterations,
        converged,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Fits the mixture with `config.restarts` independent chains and keeps the
/// one with the highest final ELBO (ties go to the lowest restart index).
///
/// All-zero documents are removed first. Restart `r` draws from the ChaCha8
/// generator seeded with `config.seed` on stream `r`, so results do not
/// depend on thread scheduling.
pub fn fit<T: Scalar>(
    dtm: &DocumentTermMatrix,
    hyper: &MixtureHyperparams<T>,
    config: &FitConfig,
) -> Result<FitResult<T>> {
    config.validate()?;
    hyper.validate()?;
    if hyper.vocab_size != dtm.n_terms() {
        return Err(Error::DimensionMismatch {
            expected: dtm.n_terms(),
            actual: hyper.vocab_size,
        });
    }
    let (kept, dropped_docs) = dtm.drop_empty_rows()?;
    if kept.n_docs() == 0 {
        return Err(Error::EmptyCorpus("every document has zero counts".into()));
    }
    if !dropped_docs.is_empty() {
        warn!("dropping {} all-zero documents before fitting", dropped_docs.len());
    }
    if hyper.groups > kept.n_docs() {
        warn!(
            "{} groups requested for {} documents; some clusters will be empty",
            hyper.groups,
            kept.n_docs()
        );
    }

    let p = kept.n_terms();
    let column_order: Vec<usize> = match config.beta_slot {
        BetaSlot::Last => (0..p).collect(),
        BetaSlot::LeastFrequent => {
            let totals = kept.column_totals();
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by(|&a, &b| totals[b].cmp(&totals[a]));
            order
        }
    };
    let work = if config.beta_slot == BetaSlot::Last {
        kept
    } else {
        kept.select_columns(&column_order)?
    };

    let chains: Vec<Result<Chain<T>>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_chain(&work, hyper, config, r))
        .collect();

    let mut summaries = Vec::with_capacity(chains.len());
    let mut best: Option<(usize, T)> = None;
    let mut first_error = None;
    for (r, chain) in chains.iter().enumerate() {
        match chain {
            Ok(c) => {
                let e = c.trace.last().expect("trace is never empty").elbo;
                if best.is_none_or(|(_, b)| e > b) {
                    best = Some((r, e));
                }
                summaries.push(RestartSummary {
                    restart: r,
                    stream: r as u64,
                    final_elbo: Some(e),
                    iterations: c.iterations,
                    converged: c.converged,
                    runtime_seconds: c.seconds,
                    error: None,
                });
            }
            Err(err) => {
                warn!("restart {r} failed: {err}");
                summaries.push(RestartSummary {
                    restart: r,
                    stream: r as u64,
                    final_elbo: None,
                    iterations: 0,
                    converged: false,
                    runtime_seconds: 0.0,
                    error: Some(err.to_string()),
                });
                first_error.get_or_insert(r);
            }
        }
    }
    let runtime_seconds = summaries.iter().map(|s| s.runtime_seconds).sum::<f64>() / summaries.len() as f64;
    let Some((best_restart, _)) = best else {
        let r = first_error.expect("no restarts succeeded");
        let mut chains = chains;
        return Err(chains.swap_remove(r).err().expect("failed restart"));
    };
    let chain = chains
        .into_iter()
        .nth(best_restart)
        .expect("best restart index in range")
        .expect("best restart succeeded");

    let assignments = map_assign(&chain.state.gamma);
    let mut counts = vec![0usize; hyper.groups];
    for &a in &assignments {
        counts[a - 1] += 1;
    }
    let empty_clusters: Vec<usize> = (0..hyper.groups).filter(|&g| counts[g] == 0).map(|g| g + 1).collect();
    if !empty_clusters.is_empty() {
        debug!("empty clusters: {empty_clusters:?}");
    }

    let fitted = estimate_topics(&chain.state);
    let mut topic_estimates = Matrix::filled(hyper.groups, p, T::zero());
    for g in 0..hyper.groups {
        for (k, &c) in column_order.iter().enumerate() {
            topic_estimates.set(g, c, fitted.get(g, k));
        }
    }
    let eta_total: T = chain.state.eta.iter().copied().sum();
    let weight_estimates = chain.state.eta.iter().map(|&e| e / eta_total).collect();

    Ok(FitResult {
        elbo_trace: chain.trace,
        assignments,
        topic_estimates,
        weight_estimates,
        runtime_seconds,
        seed: config.seed,
        config: config.clone(),
        hyperparams: hyper.clone(),
        beta_slot_column: column_order[p - 1],
        column_order,
        dropped_docs,
        empty_clusters,
        best_restart,
        iterations: chain.iterations,
        converged: chain.converged,
        final_local_pass: config.algorithm == Algorithm::Svi,
        restarts: summaries,
        state: chain.state,
    })
}
