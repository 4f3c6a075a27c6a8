//! Digamma and log-gamma for positive real arguments.
//!
//! Both use upward recurrence into the asymptotic regime (x >= 10) followed by
//! a truncated Stirling-type series.

use crate::scalar::Scalar;

const ASYMPTOTIC_FROM: f64 = 10.0;

/// Digamma function Ψ(x) = d/dx ln Γ(x), for x > 0.
///
/// Returns NaN for non-positive or NaN input.
pub fn digamma<T: Scalar>(x: T) -> T {
    if x.is_nan() || x <= T::zero() {
        return T::nan();
    }
    if x.is_infinite() {
        return x;
    }
    let mut x = x;
    let mut shift = T::zero();
    let threshold = T::of(ASYMPTOTIC_FROM);
    while x < threshold {
        shift = shift - x.recip();
        x = x + T::one();
    }
    let inv2 = (x * x).recip();
    // Bernoulli coefficients B_2k / (2k).
    let series = inv2
        * (T::of(1.0 / 12.0)
            - inv2
                * (T::of(1.0 / 120.0)
                    - inv2
                        * (T::of(1.0 / 252.0)
                            - inv2
                                * (T::of(1.0 / 240.0)
                                    - inv2
                                        * (T::of(1.0 / 132.0)
                                            - inv2 * (T::of(691.0 / 32760.0) - inv2 * T::of(1.0 / 12.0)))))));
    shift + x.ln() - T::of(0.5) / x - series
}

/// Natural log of the Gamma function, for x > 0.
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    if x.is_nan() || x <= T::zero() {
        return T::nan();
    }
    if x.is_infinite() {
        return x;
    }
    let mut x = x;
    let mut product = T::one();
    let threshold = T::of(ASYMPTOTIC_FROM);
    while x < threshold {
        product = product * x;
        x = x + T::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    let series = inv
        * (T::of(1.0 / 12.0)
            - inv2
                * (T::of(1.0 / 360.0)
                    - inv2
                        * (T::of(1.0 / 1260.0)
                            - inv2
                                * (T::of(1.0 / 1680.0)
                                    - inv2
                                        * (T::of(1.0 / 1188.0)
                                            - inv2 * (T::of(691.0 / 360360.0) - inv2 * T::of(1.0 / 156.0)))))));
    let half_ln_two_pi = T::of(0.918_938_533_204_672_8);
    (x - T::of(0.5)) * x.ln() - x + half_ln_two_pi + series - product.ln()
}

/// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b).
pub fn ln_beta<T: Scalar>(a: T, b: T) -> T {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}
