//! Closed forms plugged back into the untransformed pricing equations by
//! central finite differences.

use credbond::{
    bond_price, zcb_price, BondSpec, MarketState, ModelParams, OptionKind, OptionPricer, OptionSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H_R: f64 = 1e-4;
const H_V_REL: f64 = 1e-4;
const H_T: f64 = 1e-5;

fn bench_with_rho(rho: f64) -> ModelParams {
    ModelParams::new(1.0, 0.05, 0.01, 0.2, rho, 0.6, 0.4).unwrap()
}

/// `C_t + ½(s_r²C_rr + 2ρs_rs_V V C_rV + s_V²V²C_VV) + θ(μ − r)C_r + rV C_V − rC`.
fn two_factor_residual(price: impl Fn(f64, f64, f64) -> f64, r: f64, v: f64, t: f64, p: &ModelParams) -> f64 {
    let hv = H_V_REL * v;
    let c = price(r, v, t);
    let c_t = (price(r, v, t + H_T) - price(r, v, t - H_T)) / (2.0 * H_T);
    let c_r = (price(r + H_R, v, t) - price(r - H_R, v, t)) / (2.0 * H_R);
    let c_v = (price(r, v + hv, t) - price(r, v - hv, t)) / (2.0 * hv);
    let c_rr = (price(r + H_R, v, t) - 2.0 * c + price(r - H_R, v, t)) / (H_R * H_R);
    let c_vv = (price(r, v + hv, t) - 2.0 * c + price(r, v - hv, t)) / (hv * hv);
    let c_rv = (price(r + H_R, v + hv, t) - price(r + H_R, v - hv, t) - price(r - H_R, v + hv, t)
        + price(r - H_R, v - hv, t))
        / (4.0 * H_R * hv);
    let rho = p.rho.value();
    c_t + 0.5 * (p.s_r * p.s_r * c_rr + 2.0 * rho * p.s_r * p.s_v * v * c_rv + p.s_v * p.s_v * v * v * c_vv)
        + p.theta * (p.mu - r) * c_r
        + r * v * c_v
        - r * c
}

fn probe_points(seed: u64, n: usize, t_max: f64, p: &ModelParams, maturity: f64) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = rng.random_range(-0.02..0.12);
            let t = rng.random_range(0.05..t_max);
            let z = zcb_price(r, t, maturity, p).unwrap();
            let v = p.barrier_b * z * rng.random_range(1.15..3.5);
            (r, v, t)
        })
        .collect()
}

#[test]
fn vasicek_bond_solves_its_equation() {
    let p = bench_with_rho(-0.3);
    let z = |r: f64, t: f64| zcb_price(r, t, 2.0, &p).unwrap();
    for (r, _, t) in probe_points(1, 50, 1.95, &p, 2.0) {
        let zt = (z(r, t + H_T) - z(r, t - H_T)) / (2.0 * H_T);
        let zr = (z(r + H_R, t) - z(r - H_R, t)) / (2.0 * H_R);
        let zrr = (z(r + H_R, t) - 2.0 * z(r, t) + z(r - H_R, t)) / (H_R * H_R);
        let residual = zt + 0.5 * p.s_r * p.s_r * zrr + p.theta * (p.mu - r) * zr - r * z(r, t);
        assert!(residual.abs() <= 1e-6 * z(r, t), "residual {residual:e} at r={r}, t={t}");
    }
}

#[test]
fn straight_bond_solves_two_factor_equation() {
    let bond = BondSpec::new(2.0).unwrap();
    for rho in [-0.8, -0.3, 0.0, 0.5, 0.9] {
        let p = ModelParams::new(0.7, 0.04, 0.03, 0.25, rho, 0.6, 0.4).unwrap();
        let price = |r: f64, v: f64, t: f64| bond_price(&MarketState::new(r, v, t), &bond, &p).unwrap().price;
        for (r, v, t) in probe_points(2, 25, 1.8, &p, 2.0) {
            let residual = two_factor_residual(price, r, v, t, &p);
            assert!(residual.abs() <= 1e-4, "rho={rho}: residual {residual:e} at ({r}, {v}, {t})");
        }
    }
}

#[test]
fn reduction_requires_positive_cross_term() {
    // The price computed with the correlation sign flipped inside σ_x² does
    // not solve the equation: the cross term of ln(V/Z) enters as +2ρ s_r s_V B̄.
    let bond = BondSpec::new(2.0).unwrap();
    let p = ModelParams::new(0.7, 0.04, 0.03, 0.25, -0.8, 0.6, 0.4).unwrap();
    let flipped = ModelParams::new(0.7, 0.04, 0.03, 0.25, 0.8, 0.6, 0.4).unwrap();
    let price = |r: f64, v: f64, t: f64| bond_price(&MarketState::new(r, v, t), &bond, &flipped).unwrap().price;
    let worst = probe_points(3, 25, 1.8, &p, 2.0)
        .into_iter()
        .map(|(r, v, t)| two_factor_residual(price, r, v, t, &p).abs())
        .fold(0.0, f64::max);
    assert!(worst > 1e-3, "worst residual {worst:e}");
}

#[test]
fn options_solve_two_factor_equation() {
    let bond = BondSpec::new(2.0).unwrap();
    let p = bench_with_rho(-0.3);
    let pricer = OptionPricer::new(OptionSpec::new(1.0, 0.9), bond, p).unwrap();
    for kind in [OptionKind::Put, OptionKind::Call] {
        let price = |r: f64, v: f64, t: f64| pricer.price(kind, &MarketState::new(r, v, t)).unwrap().price;
        for (r, v, t) in probe_points(4, 25, 0.9, &p, 2.0) {
            let residual = two_factor_residual(price, r, v, t, &p);
            assert!(residual.abs() <= 1e-4, "{kind:?}: residual {residual:e} at ({r}, {v}, {t})");
        }
    }
}
