//! Put and call options on the defaultable bond, exercisable once at `T₁`
//! for the strike `K = E·Z(r,T₁;T)`, and the puttable/callable bonds built
//! from them.
//!
//! Both options are knocked out on default. In numeraire units the problem
//! is a barrier option on the driftless ratio `x` whose payoff at `T₁`
//! involves the survival functional over `[T₁, T]`; it is split at the
//! early-redemption boundary `L`, where `R + (1 − R)W_T(L,T₁) = E`.
//! Pricing uses the method of images at `x = B` together with the
//! two-period joint law of `ln x`, which is what brings in the bivariate
//! normal terms with correlation `δ̄`.

use serde::{Deserialize, Serialize};

use crate::analytics::{binorm_cdf, find_root, norm_cdf, Correlation};
use crate::bond::{bond_price, d_with_variance, survival_with_variance, BondSpec};
use crate::error::{PricingError, Result};
use crate::model::{check_tenor, cum_variance, zcb_price, MarketState, ModelParams, VARIANCE_FLOOR};
use crate::scalar::Scalar;

/// Single-date exercise terms: expiry `T₁` and exercise multiple `E` of `Z(r,T₁;T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec<F = f64> {
    pub expiry_t1: F,
    pub exercise_e: F,
}

impl<F: Scalar> OptionSpec<F> {
    pub fn new(expiry_t1: F, exercise_e: F) -> Self {
        Self { expiry_t1, exercise_e }
    }

    pub fn validate(&self, bond: &BondSpec<F>, params: &ModelParams<F>) -> Result<()> {
        bond.validate()?;
        if !(self.expiry_t1 > F::zero() && self.expiry_t1 < bond.maturity_t) {
            return Err(PricingError::InvalidParams {
                field: "expiry_t1",
                reason: format!(
                    "expiry {} must lie strictly inside (0, {})",
                    self.expiry_t1, bond.maturity_t
                ),
            });
        }
        let e = self.exercise_e;
        if e.is_nan() || e <= params.recovery_r || e >= F::one() {
            return Err(PricingError::InvalidExercise {
                exercise: e.as_f64(),
                recovery: params.recovery_r.as_f64(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Put,
    Call,
}

/// Arguments of the normal and bivariate normal terms in the option formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DValues<F = f64> {
    /// `d(x/B, t, T)`
    pub a: F,
    /// `d(B/x, t, T)`
    pub a_tilde: F,
    /// `d(x/B, t, T₁)`
    pub b1: F,
    /// `d(x/L, t, T₁)`
    pub b2: F,
    /// `d(Lx/B², t, T₁)`
    pub b3: F,
    /// `d(B/x, t, T₁)`
    pub b1_tilde: F,
    /// `d(B²/(Lx), t, T₁)`
    pub b2_tilde: F,
    /// `d(L/x, t, T₁)`
    pub b3_tilde: F,
    pub delta_bar: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionPriceResult<F = f64> {
    pub price: F,
    pub boundary_l: F,
    /// Absent when priced at expiry, where the payoff is returned directly.
    pub dvalues: Option<DValues<F>>,
    pub z: F,
    pub x: F,
}

/// Solves `R + (1 − R)·W_T(L, T₁) = E` for the early-redemption boundary,
/// where `W_T` uses the remaining variance over `[T₁, T]`.
pub fn find_boundary_l<F: Scalar>(
    spec: &OptionSpec<F>,
    bond: &BondSpec<F>,
    params: &ModelParams<F>,
) -> Result<F> {
    params.validate()?;
    spec.validate(bond, params)?;
    let barrier = params.barrier_b;
    let remaining = cum_variance(spec.expiry_t1, bond.maturity_t, bond.maturity_t, params)?;
    if remaining <= F::lit(VARIANCE_FLOOR) {
        return Err(PricingError::DegenerateVariance { variance: remaining.as_f64() });
    }
    let r = params.recovery_r;
    let target = (spec.exercise_e - r) / (F::one() - r);
    let sd = remaining.sqrt();
    // Residual in log-distance above the barrier.
    let residual = |y: F| -> F {
        match survival_with_variance(barrier * y.exp(), barrier, remaining) {
            Ok(w) => w - target,
            Err(_) => F::nan(),
        }
    };

    let mut upper = sd;
    while residual(upper) < F::zero() {
        upper = upper * F::lit(2.0);
        if upper > F::lit(80.0) * sd {
            let hi = F::lit(80.0) * sd;
            return Err(PricingError::NoBracket {
                lo: barrier.as_f64(),
                hi: (barrier * hi.exp()).as_f64(),
                f_lo: (-target).as_f64(),
                f_hi: residual(hi).as_f64(),
            });
        }
    }
    let y = find_root(residual, F::zero(), upper, F::epsilon() * F::lit(4.0))?;
    Ok(barrier * y.exp())
}

/// Option pricer with the exercise boundary solved once up front.
#[derive(Debug, Clone, Copy)]
pub struct OptionPricer<F = f64> {
    spec: OptionSpec<F>,
    bond: BondSpec<F>,
    params: ModelParams<F>,
    boundary_l: F,
}

impl<F: Scalar> OptionPricer<F> {
    pub fn new(spec: OptionSpec<F>, bond: BondSpec<F>, params: ModelParams<F>) -> Result<Self> {
        let boundary_l = find_boundary_l(&spec, &bond, &params)?;
        Ok(Self { spec, bond, params, boundary_l })
    }

    pub fn boundary_l(&self) -> F {
        self.boundary_l
    }

    pub fn spec(&self) -> &OptionSpec<F> {
        &self.spec
    }

    /// Option payoff at `T₁` in units of `Z(r,T₁;T)` as a function of `x`.
    pub fn terminal_payoff(&self, kind: OptionKind, x: F) -> Result<F> {
        let p = &self.params;
        let remaining = cum_variance(self.spec.expiry_t1, self.bond.maturity_t, self.bond.maturity_t, p)?;
        let w = survival_with_variance(x, p.barrier_b, remaining)?;
        let r = p.recovery_r;
        let value = r + (F::one() - r) * w - self.spec.exercise_e;
        Ok(match kind {
            OptionKind::Put if x < self.boundary_l => -value,
            OptionKind::Call if x > self.boundary_l => value,
            _ => F::zero(),
        })
    }

    pub fn price(&self, kind: OptionKind, state: &MarketState<F>) -> Result<OptionPriceResult<F>> {
        let mut result = self.price_unclamped(kind, state)?;
        result.price = result.price.max(F::zero());
        Ok(result)
    }

    fn price_unclamped(&self, kind: OptionKind, state: &MarketState<F>) -> Result<OptionPriceResult<F>> {
        let p = &self.params;
        let t1 = self.spec.expiry_t1;
        let maturity = self.bond.maturity_t;
        check_tenor(state.t, t1)?;
        let z = zcb_price(state.r, state.t, maturity, p)?;
        let barrier = p.barrier_b * z;
        if !(state.v > barrier) {
            return Err(PricingError::BelowBarrier { v: state.v.as_f64(), barrier: barrier.as_f64() });
        }
        let x = state.v / z;
        let l = self.boundary_l;
        if state.t == t1 {
            let payoff = self.terminal_payoff(kind, x)?;
            return Ok(OptionPriceResult { price: payoff * z, boundary_l: l, dvalues: None, z, x });
        }

        let b = p.barrier_b;
        let var_t1 = cum_variance(state.t, t1, maturity, p)?;
        let var_t = cum_variance(state.t, maturity, maturity, p)?;
        if var_t1 <= F::lit(VARIANCE_FLOOR) {
            return Err(PricingError::DegenerateVariance { variance: var_t1.as_f64() });
        }
        let dv = DValues {
            a: d_with_variance(x / b, var_t)?,
            a_tilde: d_with_variance(b / x, var_t)?,
            b1: d_with_variance(x / b, var_t1)?,
            b2: d_with_variance(x / l, var_t1)?,
            b3: d_with_variance(l * x / (b * b), var_t1)?,
            b1_tilde: d_with_variance(b / x, var_t1)?,
            b2_tilde: d_with_variance(b * b / (l * x), var_t1)?,
            b3_tilde: d_with_variance(l / x, var_t1)?,
            delta_bar: Correlation::clamped((var_t1 / var_t).sqrt()).value(),
        };
        let u = match kind {
            OptionKind::Put => put_in_numeraire(&dv, x / b, p.recovery_r, self.spec.exercise_e),
            OptionKind::Call => call_in_numeraire(&dv, x / b, p.recovery_r, self.spec.exercise_e),
        };
        Ok(OptionPriceResult { price: u * z, boundary_l: l, dvalues: Some(dv), z, x })
    }

    /// Put minus call minus the model parity value; zero up to rounding.
    pub fn parity_gap(&self, state: &MarketState<F>) -> Result<F> {
        let put = self.price_unclamped(OptionKind::Put, state)?;
        let call = self.price_unclamped(OptionKind::Call, state)?;
        let p = &self.params;
        let t1 = self.spec.expiry_t1;
        let maturity = self.bond.maturity_t;
        let r = p.recovery_r;
        let x = put.x;
        let w_t = survival_with_variance(x, p.barrier_b, cum_variance(state.t, maturity, maturity, p)?)?;
        let w_1 = if state.t == t1 {
            F::one()
        } else {
            survival_with_variance(x, p.barrier_b, cum_variance(state.t, t1, maturity, p)?)?
        };
        let parity = put.z * ((self.spec.exercise_e - r) * w_1 - (F::one() - r) * w_t);
        Ok(put.price - call.price - parity)
    }
}

fn put_in_numeraire<F: Scalar>(d: &DValues<F>, x_over_b: F, r: F, e: F) -> F {
    let one = F::one();
    let pos = Correlation::clamped(d.delta_bar);
    let neg = Correlation::clamped(-d.delta_bar);
    let direct = (e - r) * (norm_cdf(d.b1) - norm_cdf(d.b2))
        - (one - r)
            * (binorm_cdf(d.a, d.b1, pos) - binorm_cdf(d.a, d.b2, pos) + binorm_cdf(d.a, -d.b1, neg)
                - binorm_cdf(d.a, -d.b3, neg));
    let image = -(e - r) * (norm_cdf(d.b1_tilde) - norm_cdf(d.b2_tilde))
        + (one - r)
            * (binorm_cdf(d.a_tilde, d.b1_tilde, pos) - binorm_cdf(d.a_tilde, d.b2_tilde, pos)
                + binorm_cdf(d.a_tilde, -d.b1_tilde, neg)
                - binorm_cdf(d.a_tilde, -d.b3_tilde, neg));
    direct + scaled(x_over_b, image)
}

fn call_in_numeraire<F: Scalar>(d: &DValues<F>, x_over_b: F, r: F, e: F) -> F {
    let one = F::one();
    let pos = Correlation::clamped(d.delta_bar);
    let neg = Correlation::clamped(-d.delta_bar);
    let direct = (r - e) * norm_cdf(d.b2)
        + (one - r) * (binorm_cdf(d.a, d.b2, pos) + binorm_cdf(d.a, -d.b3, neg));
    let image = -(r - e) * norm_cdf(d.b2_tilde)
        - (one - r) * (binorm_cdf(d.a_tilde, d.b2_tilde, pos) + binorm_cdf(d.a_tilde, -d.b3_tilde, neg));
    direct + scaled(x_over_b, image)
}

// Image terms vanish exactly once their probabilities underflow; avoid ∞·0.
fn scaled<F: Scalar>(factor: F, value: F) -> F {
    if value == F::zero() {
        F::zero()
    } else {
        factor * value
    }
}

/// Holder's put on the defaultable bond (early redemption at `T₁` for `E·Z(r,T₁)`).
pub fn put_price<F: Scalar>(
    state: &MarketState<F>,
    spec: &OptionSpec<F>,
    bond: &BondSpec<F>,
    params: &ModelParams<F>,
) -> Result<OptionPriceResult<F>> {
    OptionPricer::new(*spec, *bond, *params)?.price(OptionKind::Put, state)
}

/// Issuer's call on the defaultable bond at `T₁` for `E·Z(r,T₁)`.
pub fn call_price<F: Scalar>(
    state: &MarketState<F>,
    spec: &OptionSpec<F>,
    bond: &BondSpec<F>,
    params: &ModelParams<F>,
) -> Result<OptionPriceResult<F>> {
    OptionPricer::new(*spec, *bond, *params)?.price(OptionKind::Call, state)
}

/// `put − call − Z·[(E − R)·W₁(x,t) − (1 − R)·W_T(x,t)]`, where `W₁` is the
/// survival functional to `T₁` and `W_T` to bond maturity.
pub fn put_call_parity_gap<F: Scalar>(
    state: &MarketState<F>,
    spec: &OptionSpec<F>,
    bond: &BondSpec<F>,
    params: &ModelParams<F>,
) -> Result<F> {
    OptionPricer::new(*spec, *bond, *params)?.parity_gap(state)
}

/// Straight bond plus the holder's put; equals the straight bond after `T₁`.
pub fn puttable_bond_price<F: Scalar>(
    state: &MarketState<F>,
    spec: &OptionSpec<F>,
    bond: &BondSpec<F>,
    params: &ModelParams<F>,
) -> Result<F> {
    spec.validate(bond, params)?;
    let straight = bond_price(state, bond, params)?.price;
    if state.t > spec.expiry_t1 {
        return Ok(straight);
    }
    Ok(straight + put_price(state, spec, bond, params)?.price)
}

/// Straight bond minus the issuer's call; equals the straight bond after `T₁`.
pub fn callable_bond_price<F: Scalar>(
    state: &MarketState<F>,
    spec: &OptionSpec<F>,
    bond: &BondSpec<F>,
    params: &ModelParams<F>,
) -> Result<F> {
    spec.validate(bond, params)?;
    let straight = bond_price(state, bond, params)?.price;
    if state.t > spec.expiry_t1 {
        return Ok(straight);
    }
    Ok((straight - call_price(state, spec, bond, params)?.price).max(F::zero()))
}
