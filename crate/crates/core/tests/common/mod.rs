//! Independent reference implementations used as test oracles. They use
//! `statrs` special functions and straightforward formulas, sharing no code
//! with the library's numerical routines.

#![allow(dead_code, unused_imports)]

use statrs::function::gamma::ln_gamma;

/// Log Dirichlet density.
pub fn dirichlet_log_density(conc: &[f64], x: &[f64]) -> f64 {
    let total: f64 = conc.iter().sum();
    ln_gamma(total) - conc.iter().map(|&a| ln_gamma(a)).sum::<f64>()
        + conc.iter().zip(x).map(|(&a, &v)| (a - 1.0) * v.ln()).sum::<f64>()
}

/// Unnormalized log Beta-Liouville density at a point whose last coordinate
/// is `1 - Σ head`.
pub fn bl_log_kernel(alphas: &[f64], alpha: f64, beta: f64, head: &[f64]) -> f64 {
    let s: f64 = head.iter().sum();
    let alpha0: f64 = alphas.iter().sum();
    alphas.iter().zip(head).map(|(&a, &x)| (a - 1.0) * x.ln()).sum::<f64>()
        + (alpha - alpha0) * s.ln()
        + (beta - 1.0) * (1.0 - s).ln()
}

/// Log normalizing constant of the Beta-Liouville density.
pub fn bl_log_norm(alphas: &[f64], alpha: f64, beta: f64) -> f64 {
    let alpha0: f64 = alphas.iter().sum();
    ln_gamma(alpha0) + ln_gamma(alpha + beta) - ln_gamma(alpha) - ln_gamma(beta)
        - alphas.iter().map(|&a| ln_gamma(a)).sum::<f64>()
}

pub fn log_multinomial_coef(y: &[u32]) -> f64 {
    let n: u32 = y.iter().sum();
    ln_gamma(n as f64 + 1.0) - y.iter().map(|&c| ln_gamma(c as f64 + 1.0)).sum::<f64>()
}

/// Log marginal probability of a set of documents that share one topic drawn
/// from a Beta-Liouville prior (multinomial coefficients included).
pub fn pooled_bl_log_marginal(alphas: &[f64], alpha: f64, beta: f64, docs: &[Vec<u32>]) -> f64 {
    let p = alphas.len() + 1;
    let mut totals = vec![0u64; p];
    for d in docs {
        for (t, &c) in totals.iter_mut().zip(d) {
            *t += c as u64;
        }
    }
    let head: u64 = totals[..p - 1].iter().sum();
    let post_alphas: Vec<f64> = alphas.iter().zip(&totals).map(|(&a, &t)| a + t as f64).collect();
    let coefs: f64 = docs.iter().map(|d| log_multinomial_coef(d)).sum();
    coefs + bl_log_norm(alphas, alpha, beta)
        - bl_log_norm(&post_alphas, alpha + head as f64, beta + totals[p - 1] as f64)
}

pub use statrs::function::gamma::digamma;

/// All count vectors of length `p` summing to `n`.
pub fn compositions(n: u32, p: usize) -> Vec<Vec<u32>> {
    if p == 1 {
        return vec![vec![n]];
    }
    (0..=n)
        .flat_map(|first| {
            compositions(n - first, p - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Maximum agreement over all relabelings, by exhaustive enumeration.
pub fn brute_force_accuracy(truth: &[usize], pred: &[usize], groups: usize) -> f64 {
    let mut perm: Vec<usize> = (0..groups).collect();
    let mut best = 0;
    permute(&mut perm, 0, &mut |p| {
        let hits = truth.iter().zip(pred).filter(|(&t, &q)| p[q - 1] == t - 1).count();
        best = best.max(hits);
    });
    best as f64 / truth.len() as f64
}

fn permute(perm: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        f(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, f);
        perm.swap(k, i);
    }
}

/// ARI from explicit enumeration of all item pairs.
pub fn pairwise_ari(truth: &[usize], pred: &[usize]) -> f64 {
    let n = truth.len();
    let (mut both, mut only_t, mut only_p, mut neither) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            match (truth[i] == truth[j], pred[i] == pred[j]) {
                (true, true) => both += 1.0,
                (true, false) => only_t += 1.0,
                (false, true) => only_p += 1.0,
                (false, false) => neither += 1.0,
            }
        }
    }
    let pairs = both + only_t + only_p + neither;
    let same_t = both + only_t;
    let same_p = both + only_p;
    let expected = same_t * same_p / pairs;
    let max = 0.5 * (same_t + same_p);
    if max == expected {
        1.0
    } else {
        (both - expected) / (max - expected)
    }
}

/// Topics concentrating `mass` on disjoint blocks of `block` terms.
pub fn block_topics(groups: usize, block: usize, mass: f64) -> Vec<Vec<f64>> {
    let p = groups * block;
    (0..groups)
        .map(|g| {
            (0..p)
                .map(|j| {
                    if j / block == g {
                        mass / block as f64
                    } else {
                        (1.0 - mass) / (p - block) as f64
                    }
                })
                .collect()
        })
        .collect()
}
