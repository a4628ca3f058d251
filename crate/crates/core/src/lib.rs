//! Two-factor structural pricing of defaultable zero-coupon bonds.
//!
//! The short rate follows a Vasicek process and the firm value a correlated
//! geometric Brownian motion. Default happens when the firm value falls to a
//! fixed multiple `B` of the risk-free discount bond, and the holder then
//! recovers a fraction `R` of that discount bond. Using the discount bond as
//! numeraire collapses the problem to one driftless state variable, which
//! gives closed forms for the straight bond and for put/call options on it
//! exercisable at a single date (hence puttable and callable bonds).
//!
//! The closed-form modules ([`analytics`], [`model`], [`bond`], [`options`])
//! are generic over the floating-point type through [`Scalar`]; the
//! verification engines in [`oracles`] work in `f64`.
//!
//! ```
//! use credbond::{bond_price, BondSpec, MarketState, ModelParams};
//!
//! let params = ModelParams::new(1.0, 0.05, 0.01, 0.2, -0.3, 0.6, 0.4).unwrap();
//! let bond = BondSpec::new(2.0).unwrap();
//! let res = bond_price(&MarketState::new(0.05, 1.0, 0.0), &bond, &params).unwrap();
//! assert!(res.price > 0.4 * res.z && res.price < res.z);
//! ```

pub mod analytics;
pub mod bond;
pub mod error;
pub mod model;
pub mod oracles;
pub mod options;
pub mod scalar;

pub use analytics::{binorm_cdf, find_root, integrate, norm_cdf, Correlation};
pub use bond::{bond_price, d_fn, survival_w, survival_w_over, BondPriceResult, BondSpec};
pub use error::{PricingError, Result};
pub use model::{abar, bbar, cum_variance, delta_bar, sigma_x2, zcb_price, MarketState, ModelParams};
pub use options::{
    call_price, callable_bond_price, find_boundary_l, put_call_parity_gap, put_price,
    puttable_bond_price, DValues, OptionKind, OptionPriceResult, OptionPricer, OptionSpec,
};
pub use scalar::Scalar;

pub type ModelParamsF64 = ModelParams<f64>;
pub type ModelParamsF32 = ModelParams<f32>;
pub type MarketStateF64 = MarketState<f64>;
pub type MarketStateF32 = MarketState<f32>;
pub type BondSpecF64 = BondSpec<f64>;
pub type BondSpecF32 = BondSpec<f32>;
pub type OptionSpecF64 = OptionSpec<f64>;
pub type OptionSpecF32 = OptionSpec<f32>;
pub type BondPriceResultF64 = BondPriceResult<f64>;
pub type OptionPriceResultF64 = OptionPriceResult<f64>;
pub type CorrelationF64 = Correlation<f64>;
