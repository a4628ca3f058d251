//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p credbond-cli --test acceptance`.

use std::time::{Duration, Instant};

use credbond::oracles::{cn_solve, mc_spot, GridConfig, McConfig, Monitoring, SpotClaim};
use credbond::{
    binorm_cdf, bond_price, cum_variance, find_boundary_l, norm_cdf, survival_w, survival_w_over, zcb_price,
    BondSpec, Correlation, MarketState, ModelParams, OptionKind, OptionPricer, OptionSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

fn bench() -> ModelParams {
    ModelParams::new(1.0, 0.05, 0.01, 0.2, -0.3, 0.6, 0.4).unwrap()
}

fn bench_bond() -> BondSpec {
    BondSpec::new(2.0).unwrap()
}

fn bench_pricer() -> OptionPricer<f64> {
    OptionPricer::new(OptionSpec::new(1.0, 0.9), bench_bond(), bench()).unwrap()
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams::new(
        rng.random_range(0.05..3.0),
        rng.random_range(-0.01..0.1),
        rng.random_range(0.0..0.05),
        rng.random_range(0.05..0.5),
        rng.random_range(-0.99..0.99),
        rng.random_range(0.2..0.9),
        rng.random_range(0.0..0.9),
    )
    .unwrap()
}

fn vasicek_residual() -> Outcome {
    let p = bench();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (hr, ht) = (1e-4, 1e-5);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let r = rng.random_range(-0.02..0.15);
        let t = rng.random_range(0.01..1.99);
        let z = |r: f64, t: f64| zcb_price(r, t, 2.0, &p).unwrap();
        let zt = (z(r, t + ht) - z(r, t - ht)) / (2.0 * ht);
        let zr = (z(r + hr, t) - z(r - hr, t)) / (2.0 * hr);
        let zrr = (z(r + hr, t) - 2.0 * z(r, t) + z(r - hr, t)) / (hr * hr);
        let residual = zt + 0.5 * p.s_r * p.s_r * zrr + p.theta * (p.mu - r) * zr - r * z(r, t);
        worst = worst.max(residual.abs() / z(r, t));
    }
    outcome(worst <= 1e-6, format!("max |residual|/Z = {worst:.3e} (tol 1e-6) at 50 points"))
}

fn bond_vs_fd() -> Outcome {
    let p = bench();
    let sol = cn_solve(|_| 1.0, |_| 0.0, 0.0, 2.0, 2.0, &p, &GridConfig::new(800, 800)).unwrap();
    let mut worst = 0.0_f64;
    for i in 0..20 {
        for j in 0..20 {
            let x = 0.63 * 1.1_f64.powi(i);
            let t = 1.9 * j as f64 / 20.0;
            let exact = 0.4 + 0.6 * survival_w_over(x, t, 2.0, 2.0, &p).unwrap();
            let grid = 0.4 + 0.6 * sol.interpolate(x, t).unwrap();
            worst = worst.max(((grid - exact) / exact).abs());
        }
    }
    outcome(worst <= 1e-4, format!("max relative error {worst:.3e} (tol 1e-4) on 20x20 (x,t) probes"))
}

fn bond_vs_spot_mc() -> Outcome {
    let p = bench();
    let bond = bench_bond();
    let state = MarketState::new(0.05, 1.0, 0.0);
    let closed = bond_price(&state, &bond, &p).unwrap().price;
    let cfg = McConfig::new(200_000, 0);
    let est = mc_spot(&state, &bond, SpotClaim::Straight, &p, 500, Monitoring::Bridge, &cfg).unwrap();
    let discrete = mc_spot(&state, &bond, SpotClaim::Straight, &p, 500, Monitoring::Discrete, &cfg).unwrap();
    let z = est.z_score(closed);
    let z_discrete = discrete.z_score(closed);
    let passed = z.abs() <= 3.0 && est.std_error <= 5e-4 && z_discrete >= -3.0;
    outcome(
        passed,
        format!(
            "closed {closed:.6}, bridge-monitored MC {:.6} ± {:.2e} (z = {z:+.2}); \
             grid-date monitoring {:.6} (z = {z_discrete:+.2}, upward bias expected)",
            est.mean, est.std_error, discrete.mean
        ),
    )
}

fn option_vs_fd(kind: OptionKind) -> Outcome {
    let p = bench();
    let pricer = bench_pricer();
    let l = pricer.boundary_l();
    let grid = GridConfig::new(1600, 1600).aligned_at(l);
    let sol = cn_solve(|x| pricer.terminal_payoff(kind, x).unwrap(), |_| 0.0, 0.0, 1.0, 2.0, &p, &grid).unwrap();
    let mut worst = 0.0_f64;
    let mut count = 0;
    for &x in &[0.65, 0.7, 0.95, 1.0, 1.1] {
        for &t in &[0.0, 0.5] {
            let z = zcb_price(0.05, t, 2.0, &p).unwrap();
            let closed = pricer.price(kind, &MarketState::new(0.05, x * z, t)).unwrap().price / z;
            let fd = sol.interpolate(x, t).unwrap();
            worst = worst.max(((closed - fd) / fd).abs());
            count += 1;
        }
    }
    outcome(worst <= 1e-3, format!("max relative error {worst:.3e} (tol 1e-3) at {count} probes, L = {l:.6}"))
}

fn parity() -> Outcome {
    // The parity statement itself on the grid first.
    let p = bench();
    let pricer = bench_pricer();
    let grid = GridConfig::new(1600, 1600).aligned_at(pricer.boundary_l());
    let solve = |kind| cn_solve(|x| pricer.terminal_payoff(kind, x).unwrap(), |_| 0.0, 0.0, 1.0, 2.0, &p, &grid).unwrap();
    let (put, call) = (solve(OptionKind::Put), solve(OptionKind::Call));
    let mut fd_worst = 0.0_f64;
    for &(x, t) in &[(0.7, 0.0), (0.9, 0.2), (1.0, 0.5), (1.3, 0.0), (2.0, 0.8)] {
        let statement = 0.5 * survival_w_over(x, t, 1.0, 2.0, &p).unwrap() - 0.6 * survival_w_over(x, t, 2.0, 2.0, &p).unwrap();
        let fd = put.interpolate(x, t).unwrap() - call.interpolate(x, t).unwrap();
        fd_worst = fd_worst.max((fd - statement).abs() / statement.abs().max(1e-2));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let params = random_params(&mut rng);
        let maturity = rng.random_range(0.5..10.0);
        let t1 = maturity * rng.random_range(0.1..0.9);
        let e = params.recovery_r + rng.random_range(0.05..0.95) * (1.0 - params.recovery_r);
        let pricer = OptionPricer::new(OptionSpec::new(t1, e), BondSpec::new(maturity).unwrap(), params).unwrap();
        let t = t1 * rng.random_range(0.0..0.95);
        let r = rng.random_range(-0.02..0.15);
        let z = zcb_price(r, t, maturity, &params).unwrap();
        let sd = cum_variance(t, maturity, maturity, &params).unwrap().sqrt();
        let v = params.barrier_b * z * (rng.random_range(0.01..6.0) * sd).exp();
        let gap = pricer.parity_gap(&MarketState::new(r, v, t)).unwrap();
        worst = worst.max(gap.abs() / z);
    }
    outcome(
        fd_worst <= 1e-3 && worst <= 1e-9,
        format!("grid check of the statement {fd_worst:.3e} (tol 1e-3, 5 points); max |gap|/Z {worst:.3e} (tol 1e-9, 100 points)"),
    )
}

fn bounds_and_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut violations = Vec::new();
    for draw in 0..1000 {
        let p = random_params(&mut rng);
        let maturity = rng.random_range(0.5..10.0);
        let bond = BondSpec::new(maturity).unwrap();
        let t = maturity * rng.random_range(0.0..0.95);
        let r = rng.random_range(-0.02..0.15);
        let z = zcb_price(r, t, maturity, &p).unwrap();
        let sd = cum_variance(t, maturity, maturity, &p).unwrap().sqrt();
        let x = p.barrier_b * (rng.random_range(0.01..6.0) * sd).exp();
        let c = bond_price(&MarketState::new(r, x * z, t), &bond, &p).unwrap().price;
        let c_up = bond_price(&MarketState::new(r, 1.01 * x * z, t), &bond, &p).unwrap().price;
        if !(p.recovery_r * z < c && c < z) {
            violations.push(format!("draw {draw}: C bounds"));
        }
        if !(c_up > c) {
            violations.push(format!("draw {draw}: C not increasing in V"));
        }
        let w = survival_w(x, t, &bond, &p).unwrap();
        let w_up = survival_w(1.01 * x, t, &bond, &p).unwrap();
        if !((0.0..1.0).contains(&w) && w_up > w && survival_w(p.barrier_b, t, &bond, &p).unwrap() == 0.0) {
            violations.push(format!("draw {draw}: W bounds/monotonicity"));
        }

        let t1 = maturity * rng.random_range(0.1..0.9);
        let e = p.recovery_r + rng.random_range(0.05..0.95) * (1.0 - p.recovery_r);
        let pricer = OptionPricer::new(OptionSpec::new(t1, e), bond, p).unwrap();
        let te = t1 * rng.random_range(0.0..0.9);
        let ze = zcb_price(r, te, maturity, &p).unwrap();
        let state = MarketState::new(r, p.barrier_b * (1.0 + 1e-8) * ze, te);
        for kind in [OptionKind::Put, OptionKind::Call] {
            let price = pricer.price(kind, &state).unwrap().price;
            if !(0.0..=1e-6).contains(&price) {
                violations.push(format!("draw {draw}: {kind:?} knock-out {price:e}"));
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!("{} violations over 1000 draws{}", violations.len(), violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()),
    )
}

fn boundary_solver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let p0 = bench();
    let bond = bench_bond();
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let recovery = rng.random_range(0.0..0.95);
        let e = rng.random_range(recovery..1.0);
        if !(e > recovery && e < 1.0) {
            continue;
        }
        let p = ModelParams { recovery_r: recovery, ..p0 };
        let l = find_boundary_l(&OptionSpec::new(1.0, e), &bond, &p).unwrap();
        let w = survival_w_over(l, 1.0, 2.0, 2.0, &p).unwrap();
        worst = worst.max((recovery + (1.0 - recovery) * w - e).abs());
    }
    outcome(worst <= 1e-12, format!("max |R + (1-R)W_T(L,T1) - E| = {worst:.3e} (tol 1e-12) over 100 pairs"))
}

fn bivariate_normal() -> Outcome {
    let mut arcsin_worst = 0.0_f64;
    for k in -99..=99 {
        let rho = k as f64 / 100.0;
        let exact = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
        arcsin_worst = arcsin_worst.max((binorm_cdf(0.0, 0.0, Correlation::new(rho).unwrap()) - exact).abs());
    }
    let mut reduction_worst = 0.0_f64;
    for &a in &[-3.0_f64, -1.2, 0.0, 0.4, 2.5] {
        for &b in &[-2.0_f64, -0.3, 0.0, 1.1, 3.0] {
            let independent = binorm_cdf(a, b, Correlation::new(0.0).unwrap());
            reduction_worst = reduction_worst.max((independent - norm_cdf(a) * norm_cdf(b)).abs());
            for &rho in &[-0.95, -0.5, 0.3, 0.97] {
                let c = Correlation::new(rho).unwrap();
                let marginal = binorm_cdf(a, 50.0, c);
                reduction_worst = reduction_worst.max((marginal - norm_cdf(a)).abs());
                let split = binorm_cdf(a, b, c) + binorm_cdf(a, -b, Correlation::new(-rho).unwrap());
                reduction_worst = reduction_worst.max((split - norm_cdf(a)).abs());
            }
        }
    }
    outcome(
        arcsin_worst <= 1e-12 && reduction_worst <= 1e-10,
        format!("arcsine identity {arcsin_worst:.3e} (tol 1e-12, 199 values); reductions {reduction_worst:.3e} (tol 1e-10)"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.json");
    std::fs::write(
        &path,
        r#"{
  "model": {"theta": 1.0, "mu": 0.05, "s_r": 0.01, "s_v": 0.2, "rho": -0.3, "barrier_b": 0.6, "recovery_r": 0.4},
  "bond": {"maturity_t": 2.0},
  "option": {"expiry_t1": 1.0, "exercise_e": 0.9},
  "state": {"r": 0.05, "v": 1.0, "t": 0.0}
}"#,
    )
    .unwrap();
    let run = |suite: &str, threads: &str| {
        let config = path.to_str().unwrap();
        credbond_cli::run([
            "credbond", "verify", "--config", config, "--suite", suite, "--seed", "42", "--paths", "20000",
            "--steps-per-year", "100", "--threads", threads,
        ])
    };
    let mut mismatches = Vec::new();
    for suite in ["mc-spot", "mc-forward"] {
        let first = run(suite, "1");
        let second = run(suite, "1");
        let parallel = run(suite, "4");
        if first.code != 0 || first.stdout.is_empty() {
            mismatches.push(format!("{suite} exited {}", first.code));
        }
        if first.stdout != second.stdout {
            mismatches.push(format!("{suite}: repeated run differs"));
        }
        if first.stdout != parallel.stdout {
            mismatches.push(format!("{suite}: 1 vs 4 threads differ"));
        }
    }
    outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "verify reports byte-identical across repeat runs and 1 vs 4 threads (mc-spot, mc-forward, seed 42)".into()
        } else {
            mismatches.join("; ")
        },
    )
}

fn fd_convergence() -> Outcome {
    let p = bench();
    let exact = |x: f64, t: f64| survival_w_over(x, t, 2.0, 2.0, &p).unwrap();
    let error = |n: usize| {
        let grid = GridConfig { rannacher: false, ..GridConfig::new(n, n) };
        let sol = cn_solve(|x| exact(x, 1.0), |_| 0.0, 0.0, 1.0, 2.0, &p, &grid).unwrap();
        [0.7, 0.9, 1.0, 1.2, 1.5]
            .iter()
            .map(|&x| (sol.interpolate(x, 0.0).unwrap() - exact(x, 0.0)).abs())
            .fold(0.0, f64::max)
    };
    let errors: Vec<f64> = [100, 200, 400].iter().map(|&n| error(n)).collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let passed = ratios.iter().all(|r| (3.2..=4.8).contains(r));
    outcome(passed, format!("error ratios {:.3} and {:.3} (band [3.2, 4.8]) for n = 100, 200, 400", ratios[0], ratios[1]))
}

fn main() {
    let criteria: Vec<(&str, Option<Duration>, fn() -> Outcome)> = vec![
        ("Vasicek bond PDE residual", Some(Duration::from_secs(1)), vasicek_residual),
        ("straight bond vs finite differences", Some(Duration::from_secs(10)), bond_vs_fd),
        ("straight bond vs two-factor Monte Carlo", Some(Duration::from_secs(60)), bond_vs_spot_mc),
        ("put vs finite differences", Some(Duration::from_secs(10)), || option_vs_fd(OptionKind::Put)),
        ("call vs finite differences", Some(Duration::from_secs(10)), || option_vs_fd(OptionKind::Call)),
        ("put-call parity", None, parity),
        ("bounds and monotonicity", None, bounds_and_monotonicity),
        ("exercise boundary solver", None, boundary_solver),
        ("bivariate normal accuracy", None, bivariate_normal),
        ("verify determinism", None, determinism),
        ("finite-difference convergence order", None, fd_convergence),
    ];
    let mut failures = 0;
    for (index, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed < l);
        let passed = result.passed && in_time;
        if !passed {
            failures += 1;
        }
        let budget = limit.map(|l| format!(" / {}s", l.as_secs())).unwrap_or_default();
        println!(
            "criterion {:>2} {} {name}: {} [{:.2}s{budget}]",
            index + 1,
            if passed { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
