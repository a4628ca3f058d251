//! Vasicek discount-bond analytics and the volatility of the firm-value /
//! discount-bond ratio under the bond-numeraire measure.
//!
//! Notation: `tau = T − t` is the remaining tenor and `a = θ·tau` the
//! dimensionless mean-reversion horizon. Every closed form here is a
//! combination of three kernels in `a`,
//!
//! * `B̄ = tau · k0(a)` with `k0(a) = (1 − e^{−a})/a`,
//! * `∫B̄  = tau² · k1(a)` with `k1(a) = (a − 1 + e^{−a})/a²`,
//! * `∫B̄² = tau³ · k2(a)` with `k2(a) = (a − 2(1 − e^{−a}) + (1 − e^{−2a})/2)/a³`,
//!
//! which lose all precision as `a → 0` when evaluated literally. Below
//! [`SERIES_CUTOFF`] they are summed as power series instead.

use serde::{Deserialize, Serialize};

use crate::analytics::Correlation;
use crate::error::{PricingError, Result};
use crate::scalar::Scalar;

/// Kernels switch from closed form to power series below this value of `θ·tau`.
pub const SERIES_CUTOFF: f64 = 0.5;

/// Total variances at or below this are treated as zero.
pub const VARIANCE_FLOOR: f64 = 1e-16;

/// Market and credit constants of the two-factor model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<F = f64> {
    /// Mean-reversion speed of the short rate.
    pub theta: F,
    /// Long-run short-rate level.
    pub mu: F,
    /// Short-rate volatility (normal).
    pub s_r: F,
    /// Lognormal volatility of the firm value.
    pub s_v: F,
    /// Correlation between the rate and firm-value Brownian motions.
    pub rho: Correlation<F>,
    /// Default barrier as a multiple of the risk-free discount bond.
    pub barrier_b: F,
    /// Recovery fraction of the risk-free discount bond paid at default.
    pub recovery_r: F,
}

impl<F: Scalar> ModelParams<F> {
    pub fn new(
        theta: F,
        mu: F,
        s_r: F,
        s_v: F,
        rho: F,
        barrier_b: F,
        recovery_r: F,
    ) -> Result<Self> {
        let params = Self {
            theta,
            mu,
            s_r,
            s_v,
            rho: Correlation::new(rho)?,
            barrier_b,
            recovery_r,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |field: &'static str, reason: &str| {
            Err(PricingError::InvalidParams { field, reason: reason.to_string() })
        };
        for (field, v) in [
            ("theta", self.theta),
            ("mu", self.mu),
            ("s_r", self.s_r),
            ("s_v", self.s_v),
            ("barrier_b", self.barrier_b),
            ("recovery_r", self.recovery_r),
        ] {
            if !v.is_finite() {
                return invalid(field, "must be finite");
            }
        }
        if !(self.theta > F::zero()) {
            return invalid("theta", "mean-reversion speed must be positive");
        }
        if self.s_r < F::zero() {
            return invalid("s_r", "rate volatility must be non-negative");
        }
        if self.s_v < F::zero() {
            return invalid("s_v", "firm-value volatility must be non-negative");
        }
        if !(self.s_r + self.s_v > F::zero()) {
            return invalid("s_v", "s_r and s_v cannot both be zero");
        }
        Correlation::new(self.rho.value())?;
        if !(self.barrier_b > F::zero()) {
            return invalid("barrier_b", "default barrier must be positive");
        }
        if self.recovery_r < F::zero() || self.recovery_r >= F::one() {
            return invalid("recovery_r", "recovery must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Evaluation point `(r, V, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketState<F = f64> {
    /// Short rate; negative values are allowed.
    pub r: F,
    /// Firm value per unit of debt face.
    pub v: F,
    /// Evaluation time in years.
    pub t: F,
}

impl<F: Scalar> MarketState<F> {
    pub fn new(r: F, v: F, t: F) -> Self {
        Self { r, v, t }
    }
}

pub(crate) fn check_tenor<F: Scalar>(start: F, end: F) -> Result<()> {
    if start.is_nan() || end.is_nan() || start > end {
        return Err(PricingError::InvalidTenor { start: start.as_f64(), end: end.as_f64() });
    }
    Ok(())
}

fn series<F: Scalar>(a: F, first: F, next: impl Fn(usize) -> F) -> F {
    // Terms decay at least geometrically with ratio 2a/k for a < SERIES_CUTOFF.
    let mut term = first;
    let mut sum = first;
    for k in 1..60 {
        term = term * a * next(k);
        sum = sum + term;
        if term.abs() <= F::epsilon() * sum.abs() * F::lit(1e-3) {
            break;
        }
    }
    sum
}

/// `(1 − e^{−a})/a`
fn kernel0<F: Scalar>(a: F) -> F {
    if a >= F::lit(SERIES_CUTOFF) {
        -(-a).exp_m1() / a
    } else {
        // Σ (−a)^k/(k+1)!
        series(a, F::one(), |k| -F::one() / F::lit((k + 1) as f64))
    }
}

/// `(a − 1 + e^{−a})/a²`
fn kernel1<F: Scalar>(a: F) -> F {
    if a >= F::lit(SERIES_CUTOFF) {
        (a + (-a).exp_m1()) / (a * a)
    } else {
        // Σ (−a)^k/(k+2)!
        series(a, F::lit(0.5), |k| -F::one() / F::lit((k + 2) as f64))
    }
}

/// `(a − 2(1 − e^{−a}) + (1 − e^{−2a})/2)/a³`
fn kernel2<F: Scalar>(a: F) -> F {
    if a >= F::lit(SERIES_CUTOFF) {
        (a + F::lit(2.0) * (-a).exp_m1() - F::lit(0.5) * (-F::lit(2.0) * a).exp_m1()) / (a * a * a)
    } else {
        // Σ_{k≥3} (−1)^k (2 − 2^{k−1}) a^{k−3}/k!, summed directly because the
        // coefficient ratio is not a simple rational function of k.
        let mut sum = F::zero();
        let mut power = F::one();
        let mut factorial = 6.0_f64;
        let mut two_pow = 4.0_f64;
        for k in 3..60 {
            if k > 3 {
                factorial *= k as f64;
                two_pow *= 2.0;
                power = power * a;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let term = F::lit(sign * (2.0 - two_pow) / factorial) * power;
            sum = sum + term;
            if term.abs() <= F::epsilon() * sum.abs() * F::lit(1e-3) {
                break;
            }
        }
        sum
    }
}

/// `∫_0^tau B̄(s) ds` as a function of remaining tenor.
fn int_bbar<F: Scalar>(tau: F, theta: F) -> F {
    tau * tau * kernel1(theta * tau)
}

/// `∫_0^tau B̄(s)² ds` as a function of remaining tenor.
fn int_bbar_sq<F: Scalar>(tau: F, theta: F) -> F {
    tau * tau * tau * kernel2(theta * tau)
}

/// Duration factor `B̄(t,T) = (1 − e^{−θ(T−t)})/θ`.
pub fn bbar<F: Scalar>(t: F, maturity: F, params: &ModelParams<F>) -> Result<F> {
    check_tenor(t, maturity)?;
    let tau = maturity - t;
    Ok(tau * kernel0(params.theta * tau))
}

/// Log-level term `Ā(t,T)` of the Vasicek discount bond.
pub fn abar<F: Scalar>(t: F, maturity: F, params: &ModelParams<F>) -> Result<F> {
    check_tenor(t, maturity)?;
    let tau = maturity - t;
    let theta = params.theta;
    let sr2 = params.s_r * params.s_r;
    if theta * tau >= F::lit(SERIES_CUTOFF) {
        let b = bbar(t, maturity, params)?;
        Ok((b - tau) * (params.mu - sr2 / (F::lit(2.0) * theta * theta))
            - sr2 * b * b / (F::lit(4.0) * theta))
    } else {
        // −∫[θμB̄ − ½s_r²B̄²] evaluated through the stable kernels.
        Ok(-theta * params.mu * int_bbar(tau, theta) + F::lit(0.5) * sr2 * int_bbar_sq(tau, theta))
    }
}

/// Risk-free zero-coupon bond `Z(r,t;T) = exp(Ā − B̄·r)`.
pub fn zcb_price<F: Scalar>(r: F, t: F, maturity: F, params: &ModelParams<F>) -> Result<F> {
    let a = abar(t, maturity, params)?;
    let b = bbar(t, maturity, params)?;
    Ok((a - b * r).exp())
}

/// Instantaneous variance rate of `x = V/Z(·;T)`:
/// `s_r²B̄² + s_V² + 2ρ s_r s_V B̄`.
///
/// `ln Z` carries the diffusion `−B̄ s_r dW₁`, so `ln x` carries
/// `s_V dW₂ + B̄ s_r dW₁` and the cross term enters with `+2ρ`.
pub fn sigma_x2<F: Scalar>(t: F, maturity: F, params: &ModelParams<F>) -> Result<F> {
    let b = bbar(t, maturity, params)?;
    let rho = params.rho.value();
    // (s_r B̄ + ρ s_V)² + (1 − ρ²) s_V²: non-negative term by term.
    let shifted = params.s_r * b + rho * params.s_v;
    let residual = (F::one() - rho * rho).max(F::zero()) * params.s_v * params.s_v;
    Ok(shifted * shifted + residual)
}

/// `∫_t^{T1} σ_x²(u; T) du` in closed form.
pub fn cum_variance<F: Scalar>(t: F, t1: F, maturity: F, params: &ModelParams<F>) -> Result<F> {
    check_tenor(t, t1)?;
    check_tenor(t1, maturity)?;
    let theta = params.theta;
    let tau0 = maturity - t;
    let tau1 = maturity - t1;
    let sq = int_bbar_sq(tau0, theta) - int_bbar_sq(tau1, theta);
    let lin = int_bbar(tau0, theta) - int_bbar(tau1, theta);
    let v = params.s_r * params.s_r * sq + params.s_v * params.s_v * (tau0 - tau1)
        + F::lit(2.0) * params.rho.value() * params.s_r * params.s_v * lin;
    Ok(v.max(F::zero()))
}

/// Correlation `δ̄ = √(∫_t^{T1}σ_x² / ∫_t^{T}σ_x²)` between the ratio's
/// log-increments over `[t, T1]` and `[t, T]`.
pub fn delta_bar<F: Scalar>(t: F, t1: F, maturity: F, params: &ModelParams<F>) -> Result<Correlation<F>> {
    let partial = cum_variance(t, t1, maturity, params)?;
    let total = cum_variance(t, maturity, maturity, params)?;
    if total <= F::lit(VARIANCE_FLOOR) {
        return Err(PricingError::DegenerateVariance { variance: total.as_f64() });
    }
    if t1 == maturity {
        return Ok(Correlation::clamped(F::one()));
    }
    Ok(Correlation::clamped((partial / total).sqrt()))
}
