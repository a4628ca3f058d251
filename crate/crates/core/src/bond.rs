//! Defaultable zero-coupon bond with a default barrier proportional to the
//! risk-free discount bond and face-value recovery.
//!
//! With `Z(r,t;T)` as numeraire the firm-value ratio `x = V/Z` is a
//! driftless diffusion killed at `x = B`, so the bond is
//! `C = [R + (1 − R)·W(x,t)]·Z` where `W` is the barrier survival functional
//! `N(d₁) − (x/B)·N(d₂)`.

use serde::{Deserialize, Serialize};

use crate::analytics::norm_cdf;
use crate::error::{PricingError, Result};
use crate::model::{check_tenor, cum_variance, zcb_price, MarketState, ModelParams, VARIANCE_FLOOR};
use crate::scalar::Scalar;

/// Zero-coupon bond contract; face value is fixed at one unit of currency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondSpec<F = f64> {
    pub maturity_t: F,
}

impl<F: Scalar> BondSpec<F> {
    pub fn new(maturity_t: F) -> Result<Self> {
        let spec = Self { maturity_t };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.maturity_t > F::zero()) || !self.maturity_t.is_finite() {
            return Err(PricingError::InvalidParams {
                field: "maturity_t",
                reason: format!("maturity {} must be positive and finite", self.maturity_t),
            });
        }
        Ok(())
    }

    #[inline]
    pub fn face(&self) -> F {
        F::one()
    }
}

/// Straight-bond price with the intermediates of the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondPriceResult<F = f64> {
    pub price: F,
    /// Risk-free discount factor `Z(r,t;T)`.
    pub z: F,
    /// Numeraire ratio `V/Z`.
    pub x: F,
    /// Survival functional `W(x,t)`.
    pub w: F,
    /// `∫_t^T σ_x²(u;T) du`.
    pub total_variance: F,
}

/// `(ln ratio − I/2)/√I` with `I = ∫_t^{T1} σ_x²(u;T) du`.
pub fn d_fn<F: Scalar>(ratio: F, t: F, t1: F, maturity: F, params: &ModelParams<F>) -> Result<F> {
    let variance = cum_variance(t, t1, maturity, params)?;
    d_with_variance(ratio, variance)
}

pub(crate) fn d_with_variance<F: Scalar>(ratio: F, variance: F) -> Result<F> {
    if !(ratio > F::zero()) {
        return Err(PricingError::DomainError(format!("d-function ratio {ratio} must be positive")));
    }
    if variance <= F::lit(VARIANCE_FLOOR) {
        return Err(PricingError::DegenerateVariance { variance: variance.as_f64() });
    }
    let sd = variance.sqrt();
    Ok((ratio.ln() - F::lit(0.5) * variance) / sd)
}

/// Survival functional for a barrier at `barrier` given the remaining variance.
pub(crate) fn survival_with_variance<F: Scalar>(x: F, barrier: F, variance: F) -> Result<F> {
    if x.is_nan() || x < barrier {
        return Err(PricingError::DomainError(format!("ratio {x} is below the barrier {barrier}")));
    }
    if x == barrier {
        return Ok(F::zero());
    }
    let d1 = d_with_variance(x / barrier, variance)?;
    let d2 = d_with_variance(barrier / x, variance)?;
    let ratio_term = norm_cdf(d2);
    // x/B can overflow only when N(d₂) has already underflowed to zero.
    let image = if ratio_term == F::zero() { F::zero() } else { x / barrier * ratio_term };
    Ok(norm_cdf(d1) - image)
}

/// `W(x,t) = N(d₁) − (x/B)N(d₂)` using the variance of `x` over `[t, t1]`
/// (volatility structure of the bond maturing at `maturity`).
pub fn survival_w_over<F: Scalar>(
    x: F,
    t: F,
    t1: F,
    maturity: F,
    params: &ModelParams<F>,
) -> Result<F> {
    let variance = cum_variance(t, t1, maturity, params)?;
    survival_with_variance(x, params.barrier_b, variance)
}

/// Survival functional to bond maturity.
pub fn survival_w<F: Scalar>(x: F, t: F, spec: &BondSpec<F>, params: &ModelParams<F>) -> Result<F> {
    survival_w_over(x, t, spec.maturity_t, spec.maturity_t, params)
}

/// Closed-form straight-bond price `[R + (1 − R)W(V/Z,t)]·Z(r,t)`.
pub fn bond_price<F: Scalar>(
    state: &MarketState<F>,
    spec: &BondSpec<F>,
    params: &ModelParams<F>,
) -> Result<BondPriceResult<F>> {
    params.validate()?;
    spec.validate()?;
    let maturity = spec.maturity_t;
    check_tenor(state.t, maturity)?;
    if state.t == maturity {
        return Ok(BondPriceResult {
            price: spec.face(),
            z: F::one(),
            x: state.v,
            w: F::one(),
            total_variance: F::zero(),
        });
    }
    let z = zcb_price(state.r, state.t, maturity, params)?;
    let barrier = params.barrier_b * z;
    if !(state.v > barrier) {
        return Err(PricingError::BelowBarrier { v: state.v.as_f64(), barrier: barrier.as_f64() });
    }
    let x = state.v / z;
    let total_variance = cum_variance(state.t, maturity, maturity, params)?;
    let w = survival_with_variance(x, params.barrier_b, total_variance)?;
    let r = params.recovery_r;
    Ok(BondPriceResult { price: (r + (F::one() - r) * w) * z, z, x, w, total_variance })
}
