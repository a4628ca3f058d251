//! Monte-Carlo engines.
//!
//! Paths are split into fixed-size chunks. Chunk `k` draws from a ChaCha8
//! stream keyed by `(seed, k)`, chunks run in parallel and their statistics
//! are merged in chunk order, so an estimate depends only on the seed and the
//! path count, never on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bond::{bond_price, BondSpec};
use crate::error::{PricingError, Result};
use crate::model::{abar, bbar, check_tenor, cum_variance, zcb_price, MarketState, ModelParams};
use crate::options::OptionSpec;

/// Paths per chunk (an even number so antithetic pairs never straddle chunks).
pub const CHUNK_PATHS: u64 = 4096;

/// Lowest admissible time-step density for [`mc_spot`].
pub const MIN_STEPS_PER_YEAR: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: u64,
    pub seed: u64,
    /// Pair every normal draw with its negation; `n_paths` counts both legs.
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(n_paths: u64, seed: u64) -> Self {
        Self { n_paths, seed, antithetic: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Number of standard errors separating the estimate from `target`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error
    }
}

/// How [`mc_spot`] detects default between grid dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monitoring {
    /// Default only when the state is below the barrier at a grid date.
    /// Misses excursions between dates, so prices are biased upward by
    /// roughly `O(√Δt)`.
    #[default]
    Discrete,
    /// Additionally weights each step by the Brownian-bridge probability of
    /// an intra-step crossing, using the step covariance of the simulated
    /// increments. The barrier moves with `r`, so this is approximate, with
    /// a residual bias of order `Δt`.
    Bridge,
}

/// Claim settled by [`mc_spot`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpotClaim {
    /// Straight defaultable bond held to maturity.
    Straight,
    /// Bond plus the holder's right to sell it at `T₁` for `E·Z(r,T₁)`.
    Puttable(OptionSpec<f64>),
    /// Bond minus the issuer's right to buy it at `T₁` for `E·Z(r,T₁)`.
    Callable(OptionSpec<f64>),
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }
}

/// Draws standard normals, optionally replaying the previous path negated.
struct NormalSource {
    rng: ChaCha8Rng,
    tape: Vec<f64>,
    replay: bool,
    cursor: usize,
}

impl NormalSource {
    fn new(seed: u64, chunk: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        Self { rng, tape: Vec::new(), replay: false, cursor: 0 }
    }

    fn start_path(&mut self, replay: bool) {
        self.replay = replay;
        self.cursor = 0;
        if !replay {
            self.tape.clear();
        }
    }

    fn next(&mut self, record: bool) -> f64 {
        // The mirrored path may outlive the original one when that was
        // knocked out early; it then continues with fresh draws.
        if self.replay && self.cursor < self.tape.len() {
            let z = -self.tape[self.cursor];
            self.cursor += 1;
            z
        } else {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            if record {
                self.tape.push(z);
            }
            z
        }
    }
}

fn run_chunks<P>(config: &McConfig, path_value: P) -> Result<McEstimate>
where
    P: Fn(&mut NormalSource, bool) -> f64 + Sync,
{
    if config.n_paths == 0 {
        return Err(PricingError::SeedError("at least one path is required".into()));
    }
    if config.antithetic && config.n_paths % 2 != 0 {
        return Err(PricingError::SeedError(format!(
            "antithetic sampling needs an even path count (got {})",
            config.n_paths
        )));
    }
    let n_chunks = config.n_paths.div_ceil(CHUNK_PATHS);
    let chunks: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let paths = CHUNK_PATHS.min(config.n_paths - chunk * CHUNK_PATHS);
            let mut source = NormalSource::new(config.seed, chunk);
            let mut moments = Moments::default();
            if config.antithetic {
                for _ in 0..paths / 2 {
                    source.start_path(false);
                    let up = path_value(&mut source, true);
                    source.start_path(true);
                    let down = path_value(&mut source, true);
                    moments.push(0.5 * (up + down));
                }
            } else {
                for _ in 0..paths {
                    source.start_path(false);
                    moments.push(path_value(&mut source, false));
                }
            }
            moments
        })
        .collect();
    let total = chunks.into_iter().fold(Moments::default(), Moments::merge);
    let variance = if total.n > 1 { total.m2 / (total.n - 1) as f64 } else { 0.0 };
    Ok(McEstimate {
        mean: total.mean,
        std_error: (variance / total.n as f64).sqrt(),
        n_paths: config.n_paths,
        seed: config.seed,
    })
}

/// Expected payoff of the driftless ratio `x = V/Z(r,·;T)` in numeraire units.
///
/// `x` is stepped exactly in log space over `n_steps` equal calendar
/// intervals. Barrier crossings between steps are handled by the Brownian
/// bridge: each path carries its conditional survival probability `S`, and
/// contributes `S·payoff(x_horizon) + (1 − S)·rebate`. Multiply by
/// `Z(r,t;T)` for a price.
#[allow(clippy::too_many_arguments)]
pub fn mc_forward<P>(
    x0: f64,
    t: f64,
    horizon: f64,
    bond_t: f64,
    payoff: P,
    rebate: f64,
    params: &ModelParams<f64>,
    n_steps: usize,
    config: &McConfig,
) -> Result<McEstimate>
where
    P: Fn(f64) -> f64 + Sync,
{
    params.validate()?;
    if !(t < horizon && horizon <= bond_t) {
        return Err(PricingError::InvalidTenor { start: t, end: horizon });
    }
    if n_steps == 0 {
        return Err(PricingError::StepError { steps_per_year: 0 });
    }
    let barrier = params.barrier_b.ln();
    if !(x0 > params.barrier_b) {
        return Err(PricingError::BelowBarrier { v: x0, barrier: params.barrier_b });
    }
    let dt = (horizon - t) / n_steps as f64;
    let increments: Vec<(f64, f64)> = (0..n_steps)
        .map(|k| {
            let start = t + k as f64 * dt;
            let end = if k + 1 == n_steps { horizon } else { start + dt };
            let v = cum_variance(start, end, bond_t, params)?;
            Ok((v, v.sqrt()))
        })
        .collect::<Result<_>>()?;
    let y0 = x0.ln();

    run_chunks(config, |source, record| {
        let mut y = y0;
        let mut survival = 1.0;
        for &(v, sd) in &increments {
            let next = y - 0.5 * v + sd * source.next(record);
            if next <= barrier {
                survival = 0.0;
                break;
            }
            if v > 0.0 {
                survival *= 1.0 - (-2.0 * (y - barrier) * (next - barrier) / v).exp();
            }
            y = next;
        }
        if survival == 0.0 {
            rebate
        } else {
            survival * payoff(y.exp()) + (1.0 - survival) * rebate
        }
    })
}

struct SpotStep {
    decay: f64,
    mean_shift: f64,
    sd_r: f64,
    sd_v: f64,
    corr: f64,
    corr_perp: f64,
    dt: f64,
    // Default when ln V ≤ ln B + Ā(u) − B̄(u)·r at the step end u.
    barrier_a: f64,
    barrier_b: f64,
    // Variance of the increment of ln V + B̄(u)·r over the step.
    gap_var: f64,
}

fn spot_steps(
    start: f64,
    end: f64,
    maturity: f64,
    steps_per_year: usize,
    params: &ModelParams<f64>,
) -> Result<Vec<SpotStep>> {
    let n = (((end - start) * steps_per_year as f64) - 1e-9).ceil().max(1.0) as usize;
    let dt = (end - start) / n as f64;
    let theta = params.theta;
    let decay = (-theta * dt).exp();
    let sd_r = params.s_r * (-(-2.0 * theta * dt).exp_m1() / (2.0 * theta)).sqrt();
    let sd_v = params.s_v * dt.sqrt();
    let cov = params.rho.value() * params.s_r * params.s_v * (-(-theta * dt).exp_m1() / theta);
    let corr = if sd_r > 0.0 && sd_v > 0.0 { (cov / (sd_r * sd_v)).clamp(-1.0, 1.0) } else { 0.0 };
    let ln_b = params.barrier_b.ln();
    (1..=n)
        .map(|k| {
            let u = if k == n { end } else { start + k as f64 * dt };
            let slope = bbar(u, maturity, params)?;
            let gap_var = sd_v * sd_v + slope * slope * sd_r * sd_r + 2.0 * slope * corr * sd_r * sd_v;
            Ok(SpotStep {
                decay,
                mean_shift: params.mu * (1.0 - decay),
                sd_r,
                sd_v,
                corr,
                corr_perp: (1.0 - corr * corr).sqrt(),
                dt,
                barrier_a: ln_b + abar(u, maturity, params)?,
                barrier_b: slope,
                gap_var,
            })
        })
        .collect()
}

/// Risk-neutral simulation of `(r, ln V)` in calendar time.
///
/// `r` uses the exact Vasicek transition, `ln V` an Euler step whose drift is
/// the trapezoidal average of `r − s_V²/2`, and default is checked against
/// `V ≤ B·Z(r,u;T)` according to `monitoring`. A defaulted path pays
/// `R·Z(r_τ,τ;T)` at the default date (the end of the step in which it
/// occurs). For the option claims simulation stops at `T₁`, where the
/// surviving bond is valued in closed form and the exercise decision applied.
pub fn mc_spot(
    state: &MarketState<f64>,
    bond: &BondSpec<f64>,
    claim: SpotClaim,
    params: &ModelParams<f64>,
    steps_per_year: usize,
    monitoring: Monitoring,
    config: &McConfig,
) -> Result<McEstimate> {
    params.validate()?;
    bond.validate()?;
    if steps_per_year < MIN_STEPS_PER_YEAR {
        return Err(PricingError::StepError { steps_per_year });
    }
    let maturity = bond.maturity_t;
    let option = match claim {
        SpotClaim::Straight => None,
        SpotClaim::Puttable(spec) | SpotClaim::Callable(spec) => {
            spec.validate(bond, params)?;
            Some(spec)
        }
    };
    let end = option.map_or(maturity, |s| s.expiry_t1);
    check_tenor(state.t, end)?;
    if state.t == end {
        return Err(PricingError::InvalidTenor { start: state.t, end });
    }
    let z0 = zcb_price(state.r, state.t, maturity, params)?;
    if !(state.v > params.barrier_b * z0) {
        return Err(PricingError::BelowBarrier { v: state.v, barrier: params.barrier_b * z0 });
    }
    let steps = spot_steps(state.t, end, maturity, steps_per_year, params)?;
    let recovery = params.recovery_r;
    let half_var = 0.5 * params.s_v * params.s_v;

    let settle = |r: f64, ln_v: f64| -> f64 {
        let Some(spec) = option else {
            return 1.0;
        };
        let z = zcb_price(r, end, maturity, params).unwrap_or(f64::NAN);
        let strike = spec.exercise_e * z;
        let bond_value = match bond_price(&MarketState::new(r, ln_v.exp(), end), bond, params) {
            Ok(res) => res.price,
            Err(_) => recovery * z,
        };
        match claim {
            SpotClaim::Puttable(_) => bond_value.max(strike),
            _ => bond_value.min(strike),
        }
    };

    let (r0, ln_v0) = (state.r, state.v.ln());
    let ln_b = params.barrier_b.ln();
    let bridge = monitoring == Monitoring::Bridge;
    let gap0 = ln_v0 - (ln_b + abar(state.t, maturity, params)? - bbar(state.t, maturity, params)? * r0);
    run_chunks(config, |source, record| {
        let mut r = r0;
        let mut ln_v = ln_v0;
        let mut log_discount = 0.0;
        let mut gap = gap0;
        let mut survival = 1.0;
        let mut value = 0.0;
        for step in &steps {
            let e1 = source.next(record);
            let e2 = source.next(record);
            let r_next = r * step.decay + step.mean_shift + step.sd_r * e1;
            let r_avg = 0.5 * (r + r_next);
            ln_v += (r_avg - half_var) * step.dt + step.sd_v * (step.corr * e1 + step.corr_perp * e2);
            log_discount -= r_avg * step.dt;
            r = r_next;
            let threshold = step.barrier_a - step.barrier_b * r;
            let next_gap = ln_v - threshold;
            // Z(r,u;T) = exp(threshold − ln B).
            let default_value = || log_discount.exp() * recovery * (threshold - ln_b).exp();
            if next_gap <= 0.0 {
                return value + survival * default_value();
            }
            if bridge && step.gap_var > 0.0 {
                let crossing = (-2.0 * gap * next_gap / step.gap_var).exp();
                value += survival * crossing * default_value();
                survival *= 1.0 - crossing;
            }
            gap = next_gap;
        }
        value + survival * log_discount.exp() * settle(r, ln_v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bond::survival_w_over;

    fn bench() -> ModelParams<f64> {
        ModelParams::new(1.0, 0.05, 0.01, 0.2, -0.3, 0.6, 0.4).unwrap()
    }

    #[test]
    fn constant_payoff_without_barrier_is_exact() {
        let p = ModelParams::new(1.0, 0.05, 0.01, 0.2, -0.3, 1e-300, 0.4).unwrap();
        let est = mc_forward(1.0, 0.0, 1.0, 2.0, |_| 1.0, 0.4, &p, 4, &McConfig::new(1000, 1)).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn forward_survival_matches_closed_form() {
        let p = bench();
        let x0 = 0.8;
        let est = mc_forward(x0, 0.0, 2.0, 2.0, |_| 1.0, 0.0, &p, 8, &McConfig::new(100_000, 7)).unwrap();
        let exact = survival_w_over(x0, 0.0, 2.0, 2.0, &p).unwrap();
        assert!(est.z_score(exact).abs() < 3.0, "{est:?} vs {exact}");
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let p = bench();
        let cfg = McConfig { n_paths: 20_000, seed: 42, antithetic: true };
        let run = || mc_forward(1.1, 0.0, 1.0, 2.0, |x| x.min(1.0), 0.4, &p, 6, &cfg).unwrap();
        let a = run();
        let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(run);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        let other_seed = mc_forward(1.1, 0.0, 1.0, 2.0, |x| x.min(1.0), 0.4, &p, 6, &McConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.mean, other_seed.mean);
    }

    #[test]
    fn errors() {
        let p = bench();
        assert!(matches!(
            mc_forward(1.0, 0.0, 1.0, 2.0, |_| 1.0, 0.0, &p, 4, &McConfig::new(0, 1)),
            Err(PricingError::SeedError(_))
        ));
        assert!(matches!(
            mc_forward(1.0, 0.0, 1.0, 2.0, |_| 1.0, 0.0, &p, 4, &McConfig { n_paths: 3, seed: 1, antithetic: true }),
            Err(PricingError::SeedError(_))
        ));
        let bond = BondSpec::new(2.0).unwrap();
        let state = MarketState::new(0.05, 1.0, 0.0);
        assert!(matches!(
            mc_spot(&state, &bond, SpotClaim::Straight, &p, 49, Monitoring::Discrete, &McConfig::new(10, 1)),
            Err(PricingError::StepError { steps_per_year: 49 })
        ));
        assert!(matches!(
            mc_spot(&MarketState::new(0.05, 0.5, 0.0), &bond, SpotClaim::Straight, &p, 100, Monitoring::Discrete, &McConfig::new(10, 1)),
            Err(PricingError::BelowBarrier { .. })
        ));
    }

    #[test]
    fn spot_riskless_bond_matches_vasicek() {
        let p = ModelParams::new(1.0, 0.05, 0.02, 0.2, -0.3, 1e-300, 0.4).unwrap();
        let bond = BondSpec::new(2.0).unwrap();
        let state = MarketState::new(0.03, 1.0, 0.0);
        let est = mc_spot(&state, &bond, SpotClaim::Straight, &p, 50, Monitoring::Discrete, &McConfig::new(50_000, 3)).unwrap();
        let z = zcb_price(0.03, 0.0, 2.0, &p).unwrap();
        assert!(est.z_score(z).abs() < 3.0, "{est:?} vs {z}");
    }
}
