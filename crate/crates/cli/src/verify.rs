//! `verify` command: closed forms against the numerical oracles at the
//! configured point and a small grid around it.

use clap::ValueEnum;
use credbond::oracles::{cn_solve, mc_forward, mc_spot, GridConfig, McConfig, McEstimate, Monitoring, SpotClaim};
use credbond::{
    bond_price, callable_bond_price, cum_variance, puttable_bond_price, survival_w_over, zcb_price, BondSpec,
    MarketState, ModelParams, OptionKind, OptionPricer, OptionSpec,
};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, VerifyConfig};
use crate::error::{CliError, CliResult};

pub const FD_BOND_TOL: f64 = 1e-4;
pub const FD_OPTION_TOL: f64 = 1e-3;
pub const MC_Z_TOL: f64 = 3.0;
pub const PARITY_TOL: f64 = 1e-9;
pub const FD_PARITY_TOL: f64 = 1e-3;

/// Oracle values below this are too small for a relative comparison.
const MIN_OPTION_VALUE: f64 = 1e-6;
/// Option probes closer than this (in `ln x`) to the exercise boundary are skipped.
const KINK_EXCLUSION: f64 = 0.05;
const PROBE_FACTORS: [f64; 5] = [0.8, 0.9, 1.0, 1.1, 1.25];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Fd,
    McForward,
    McSpot,
    Parity,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RelativeError,
    ScaledAbsError,
    ZScore,
    /// `(oracle − closed form)/std_error`, which must stay above `−tolerance`.
    LowerBoundZ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub closed_form: f64,
    pub oracle: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    pub metric: Metric,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: Suite,
    pub settings: VerifyConfig,
    pub passed: bool,
    pub n_checks: usize,
    pub n_failed: usize,
    pub checks: Vec<Check>,
}

struct Context {
    params: ModelParams,
    bond: BondSpec,
    option: Option<OptionSpec>,
    state: MarketState,
    settings: VerifyConfig,
    z0: f64,
    x0: f64,
}

impl Context {
    fn maturity(&self) -> f64 {
        self.bond.maturity_t
    }

    /// Option spec when the evaluation time is before expiry.
    fn live_option(&self) -> Option<OptionSpec> {
        self.option.filter(|spec| self.state.t < spec.expiry_t1)
    }

    fn pricer(&self, spec: OptionSpec) -> CliResult<OptionPricer<f64>> {
        Ok(OptionPricer::new(spec, self.bond, self.params)?)
    }

    /// Closed-form option value in numeraire units at ratio `x`.
    fn option_ratio(&self, pricer: &OptionPricer<f64>, kind: OptionKind, x: f64, t: f64) -> CliResult<f64> {
        let z = zcb_price(self.state.r, t, self.maturity(), &self.params)?;
        Ok(pricer.price(kind, &MarketState::new(self.state.r, x * z, t))?.price / z)
    }

    fn probes(&self) -> impl Iterator<Item = f64> + '_ {
        let floor = self.params.barrier_b * 1.01;
        PROBE_FACTORS.iter().map(move |f| f * self.x0).filter(move |&x| x > floor)
    }
}

fn relative_check(suite: Suite, name: String, x: f64, t: f64, closed: f64, oracle: f64, tol: f64) -> Check {
    let value = ((closed - oracle) / oracle).abs();
    Check {
        suite,
        name,
        x: Some(x),
        t: Some(t),
        closed_form: closed,
        oracle,
        std_error: None,
        metric: Metric::RelativeError,
        value,
        tolerance: tol,
        passed: value <= tol,
    }
}

fn mc_check(suite: Suite, name: &str, closed: f64, est: &McEstimate, scale: f64, metric: Metric) -> Check {
    let oracle = est.mean * scale;
    let std_error = est.std_error * scale;
    let z = if std_error > 0.0 { (oracle - closed) / std_error } else if oracle == closed { 0.0 } else { f64::INFINITY };
    let passed = match metric {
        Metric::LowerBoundZ => z >= -MC_Z_TOL,
        _ => z.abs() <= MC_Z_TOL,
    };
    Check {
        suite,
        name: name.to_string(),
        x: None,
        t: None,
        closed_form: closed,
        oracle,
        std_error: Some(std_error),
        metric,
        value: z,
        tolerance: MC_Z_TOL,
        passed,
    }
}

fn fd_suite(ctx: &Context, checks: &mut Vec<Check>) -> CliResult<()> {
    let p = &ctx.params;
    let (t0, maturity) = (ctx.state.t, ctx.maturity());
    let r = p.recovery_r;
    let s = &ctx.settings;
    let grid = GridConfig::new(s.fd_space, s.fd_time);
    let sol = cn_solve(|_| 1.0, |_| 0.0, t0, maturity, maturity, p, &grid)?;
    for frac in [0.0, 0.25, 0.5] {
        let t = t0 + frac * (maturity - t0);
        for x in ctx.probes() {
            let closed = r + (1.0 - r) * survival_w_over(x, t, maturity, maturity, p)?;
            let oracle = r + (1.0 - r) * sol.interpolate(x, t)?;
            checks.push(relative_check(Suite::Fd, "bond".into(), x, t, closed, oracle, FD_BOND_TOL));
        }
    }
    let Some(spec) = ctx.live_option() else {
        return Ok(());
    };
    let pricer = ctx.pricer(spec)?;
    let l = pricer.boundary_l();
    let grid = GridConfig::new(s.fd_option_space, s.fd_option_time).aligned_at(l);
    for (kind, name) in [(OptionKind::Put, "put"), (OptionKind::Call, "call")] {
        let payoff = |x: f64| pricer.terminal_payoff(kind, x).unwrap_or(f64::NAN);
        let sol = cn_solve(payoff, |_| 0.0, t0, spec.expiry_t1, maturity, p, &grid)?;
        for frac in [0.0, 0.5] {
            let t = t0 + frac * (spec.expiry_t1 - t0);
            for x in ctx.probes() {
                if (x / l).ln().abs() < KINK_EXCLUSION {
                    continue;
                }
                let oracle = sol.interpolate(x, t)?;
                if oracle < MIN_OPTION_VALUE {
                    continue;
                }
                let closed = ctx.option_ratio(&pricer, kind, x, t)?;
                checks.push(relative_check(Suite::Fd, name.into(), x, t, closed, oracle, FD_OPTION_TOL));
            }
        }
    }
    Ok(())
}

fn mc_config(settings: &VerifyConfig) -> McConfig {
    McConfig { n_paths: settings.paths, seed: settings.seed, antithetic: settings.antithetic }
}

fn forward_steps(span: f64) -> usize {
    ((span * 12.0).ceil() as usize).max(8)
}

fn mc_forward_suite(ctx: &Context, checks: &mut Vec<Check>) -> CliResult<()> {
    let p = &ctx.params;
    let (t0, maturity) = (ctx.state.t, ctx.maturity());
    let cfg = mc_config(&ctx.settings);
    let closed = bond_price(&ctx.state, &ctx.bond, p)?.price;
    let est = mc_forward(ctx.x0, t0, maturity, maturity, |_| 1.0, p.recovery_r, p, forward_steps(maturity - t0), &cfg)?;
    checks.push(mc_check(Suite::McForward, "bond", closed, &est, ctx.z0, Metric::ZScore));
    if let Some(spec) = ctx.live_option() {
        let pricer = ctx.pricer(spec)?;
        for (kind, name) in [(OptionKind::Put, "put"), (OptionKind::Call, "call")] {
            let closed = pricer.price(kind, &ctx.state)?.price;
            let payoff = |x: f64| pricer.terminal_payoff(kind, x).unwrap_or(f64::NAN);
            let steps = forward_steps(spec.expiry_t1 - t0);
            let est = mc_forward(ctx.x0, t0, spec.expiry_t1, maturity, payoff, 0.0, p, steps, &cfg)?;
            checks.push(mc_check(Suite::McForward, name, closed, &est, ctx.z0, Metric::ZScore));
        }
    }
    Ok(())
}

fn mc_spot_suite(ctx: &Context, checks: &mut Vec<Check>) -> CliResult<()> {
    let p = &ctx.params;
    let s = &ctx.settings;
    let cfg = mc_config(s);
    let closed = bond_price(&ctx.state, &ctx.bond, p)?.price;
    let est = mc_spot(&ctx.state, &ctx.bond, SpotClaim::Straight, p, s.steps_per_year, s.monitoring, &cfg)?;
    let name = match s.monitoring {
        Monitoring::Bridge => "bond",
        Monitoring::Discrete => "bond_discrete_lower_bound",
    };
    let metric = if s.monitoring == Monitoring::Bridge { Metric::ZScore } else { Metric::LowerBoundZ };
    checks.push(mc_check(Suite::McSpot, name, closed, &est, 1.0, metric));
    if s.monitoring == Monitoring::Bridge {
        let est = mc_spot(&ctx.state, &ctx.bond, SpotClaim::Straight, p, s.steps_per_year, Monitoring::Discrete, &cfg)?;
        checks.push(mc_check(Suite::McSpot, "bond_discrete_lower_bound", closed, &est, 1.0, Metric::LowerBoundZ));
    }
    if let Some(spec) = ctx.live_option() {
        let claims = [
            ("puttable", SpotClaim::Puttable(spec), puttable_bond_price(&ctx.state, &spec, &ctx.bond, p)?),
            ("callable", SpotClaim::Callable(spec), callable_bond_price(&ctx.state, &spec, &ctx.bond, p)?),
        ];
        for (name, claim, closed) in claims {
            let est = mc_spot(&ctx.state, &ctx.bond, claim, p, s.steps_per_year, s.monitoring, &cfg)?;
            let metric = if s.monitoring == Monitoring::Bridge { Metric::ZScore } else { Metric::LowerBoundZ };
            checks.push(mc_check(Suite::McSpot, name, closed, &est, 1.0, metric));
        }
    }
    Ok(())
}

fn parity_suite(ctx: &Context, checks: &mut Vec<Check>) -> CliResult<()> {
    let Some(spec) = ctx.live_option() else {
        return Ok(());
    };
    let p = &ctx.params;
    let (t0, maturity) = (ctx.state.t, ctx.maturity());
    let pricer = ctx.pricer(spec)?;
    let mut points = vec![ctx.state];
    for dr in [-0.02, 0.0, 0.02] {
        for factor in [1.05, 1.3, 2.0] {
            for frac in [0.0, 0.5] {
                let r = ctx.state.r + dr;
                let t = t0 + frac * (spec.expiry_t1 - t0);
                let z = zcb_price(r, t, maturity, p)?;
                points.push(MarketState::new(r, factor * p.barrier_b * z, t));
            }
        }
    }
    for state in points {
        let z = zcb_price(state.r, state.t, maturity, p)?;
        let gap = pricer.parity_gap(&state)?;
        let value = gap.abs() / z;
        checks.push(Check {
            suite: Suite::Parity,
            name: "gap".into(),
            x: Some(state.v / z),
            t: Some(state.t),
            closed_form: 0.0,
            oracle: gap,
            std_error: None,
            metric: Metric::ScaledAbsError,
            value,
            tolerance: PARITY_TOL,
            passed: value <= PARITY_TOL,
        });
    }

    // The parity statement itself, checked once on the grid.
    let s = &ctx.settings;
    let grid = GridConfig::new(s.fd_option_space, s.fd_option_time).aligned_at(pricer.boundary_l());
    let solve = |kind| {
        cn_solve(|x| pricer.terminal_payoff(kind, x).unwrap_or(f64::NAN), |_| 0.0, t0, spec.expiry_t1, maturity, p, &grid)
    };
    let (put, call) = (solve(OptionKind::Put)?, solve(OptionKind::Call)?);
    let (e, r) = (spec.exercise_e, p.recovery_r);
    let top = p.barrier_b * (8.0 * cum_variance(t0, spec.expiry_t1, maturity, p)?.sqrt()).exp();
    for factor in [0.8, 1.0, 1.25, 1.6, 2.0] {
        let x = factor * ctx.x0;
        if x <= p.barrier_b * 1.01 || x >= 0.5 * top {
            continue;
        }
        let statement = (e - r) * survival_w_over(x, t0, spec.expiry_t1, maturity, p)?
            - (1.0 - r) * survival_w_over(x, t0, maturity, maturity, p)?;
        let oracle = put.interpolate(x, t0)? - call.interpolate(x, t0)?;
        let value = (statement - oracle).abs() / statement.abs().max(1e-2);
        checks.push(Check {
            suite: Suite::Parity,
            name: "statement_on_grid".into(),
            x: Some(x),
            t: Some(t0),
            closed_form: statement,
            oracle,
            std_error: None,
            metric: Metric::RelativeError,
            value,
            tolerance: FD_PARITY_TOL,
            passed: value <= FD_PARITY_TOL,
        });
    }
    Ok(())
}

/// Runs `suite` and returns the report; fails only on configuration or
/// domain errors, not on failed checks.
pub fn verify(config: &RunConfig, suite: Suite, settings: VerifyConfig) -> CliResult<Report> {
    let params = config.params()?;
    let bond = config.bond_spec()?;
    let state = config.market_state();
    let option = match config.option {
        Some(_) => {
            let spec = config.option_spec()?;
            spec.validate(&bond, &params)?;
            Some(spec)
        }
        None => None,
    };
    if suite == Suite::Parity && option.is_none() {
        return Err(CliError::Config("option: section required for the parity suite".into()));
    }
    if !(state.t < bond.maturity_t) {
        return Err(CliError::Config(format!(
            "state.t: verification needs t < maturity (got {} ≥ {})",
            state.t, bond.maturity_t
        )));
    }
    let z0 = zcb_price(state.r, state.t, bond.maturity_t, &params)?;
    bond_price(&state, &bond, &params)?;
    let ctx = Context { params, bond, option, state, settings, z0, x0: state.v / z0 };

    let mut checks = Vec::new();
    let run_all = suite == Suite::All;
    if run_all || suite == Suite::Fd {
        fd_suite(&ctx, &mut checks)?;
    }
    if run_all || suite == Suite::McForward {
        mc_forward_suite(&ctx, &mut checks)?;
    }
    if run_all || suite == Suite::McSpot {
        mc_spot_suite(&ctx, &mut checks)?;
    }
    if run_all || suite == Suite::Parity {
        parity_suite(&ctx, &mut checks)?;
    }
    let n_failed = checks.iter().filter(|c| !c.passed).count();
    Ok(Report { suite, settings, passed: n_failed == 0, n_checks: checks.len(), n_failed, checks })
}
