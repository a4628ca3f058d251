//! Special functions and numerical primitives shared by the pricing code:
//! univariate and bivariate normal distribution functions, a bracketed
//! root finder and adaptive Gauss–Kronrod quadrature.

#![allow(clippy::excessive_precision)]

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::scalar::Scalar;

/// Arguments with magnitude at or beyond this are treated as ±∞.
pub const SATURATION: f64 = 40.0;

/// Correlation coefficient in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Correlation<F = f64>(F);

impl<F: Scalar> Correlation<F> {
    pub fn new(value: F) -> Result<Self> {
        if value.is_nan() || value < -F::one() || value > F::one() {
            return Err(PricingError::InvalidParams {
                field: "rho",
                reason: format!("correlation {value} outside [-1, 1]"),
            });
        }
        Ok(Self(value))
    }

    /// Clamps into `[-1, 1]`; for values that are correlations up to rounding.
    pub fn clamped(value: F) -> Self {
        Self(value.max(-F::one()).min(F::one()))
    }

    #[inline]
    pub fn value(self) -> F {
        self.0
    }
}

impl TryFrom<f64> for Correlation<f64> {
    type Error = PricingError;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Correlation<f64>> for f64 {
    fn from(c: Correlation<f64>) -> f64 {
        c.0
    }
}

/// Standard normal distribution function Φ(x).
///
/// Evaluated as `erfc(-x/√2)/2`, which keeps full relative accuracy in the
/// lower tail. Saturates to exactly 0 or 1 for `|x| ≥ 40`.
pub fn norm_cdf<F: Scalar>(x: F) -> F {
    let sat = F::lit(SATURATION);
    if x.is_nan() {
        return x;
    }
    if x >= sat {
        return F::one();
    }
    if x <= -sat {
        return F::zero();
    }
    F::lit(0.5) * (-x * F::FRAC_1_SQRT_2()).erfc()
}

/// Standard normal density.
pub fn norm_pdf<F: Scalar>(x: F) -> F {
    (-F::lit(0.5) * x * x).exp() / (F::TAU()).sqrt()
}

// Gauss–Legendre (weight, abscissa) pairs on [-1, 1]; only the negative half
// of each symmetric rule is stored.
const GL_6: [(f64, f64); 3] = [
    (0.1713244923791705e+00, -0.9324695142031522e+00),
    (0.3607615730481384e+00, -0.6612093864662647e+00),
    (0.4679139345726904e+00, -0.2386191860831970e+00),
];

const GL_12: [(f64, f64); 6] = [
    (0.4717533638651177e-01, -0.9815606342467191e+00),
    (0.1069393259953183e+00, -0.9041172563704750e+00),
    (0.1600783285433464e+00, -0.7699026741943050e+00),
    (0.2031674267230659e+00, -0.5873179542866171e+00),
    (0.2334925365383547e+00, -0.3678314989981802e+00),
    (0.2491470458134029e+00, -0.1252334085114692e+00),
];

const GL_20: [(f64, f64); 10] = [
    (0.1761400713915212e-01, -0.9931285991850949e+00),
    (0.4060142980038694e-01, -0.9639719272779138e+00),
    (0.6267204833410906e-01, -0.9122344282513259e+00),
    (0.8327674157670475e-01, -0.8391169718222188e+00),
    (0.1019301198172404e+00, -0.7463319064601508e+00),
    (0.1181945319615184e+00, -0.6360536807265150e+00),
    (0.1316886384491766e+00, -0.5108670019508271e+00),
    (0.1420961093183821e+00, -0.3737060887154196e+00),
    (0.1491729864726037e+00, -0.2277858511416451e+00),
    (0.1527533871307259e+00, -0.7652652113349733e-01),
];

fn gl_rule(rho_abs: f64) -> &'static [(f64, f64)] {
    if rho_abs < 0.3 {
        &GL_6
    } else if rho_abs < 0.75 {
        &GL_12
    } else {
        &GL_20
    }
}

/// Bivariate standard normal distribution function `P[X ≤ a, Y ≤ b]` with
/// correlation `rho`.
///
/// Drezner–Wesolowsky integral of the density along the correlation path,
/// with Genz's expansion for `|rho| > 0.925`. Negative high correlations are
/// reflected onto the positive branch via `N₂(a,b;ρ) = N(a) − N₂(a,−b;−ρ)`.
pub fn binorm_cdf<F: Scalar>(a: F, b: F, rho: Correlation<F>) -> F {
    let sat = F::lit(SATURATION);
    let r = rho.value();
    if a.is_nan() || b.is_nan() {
        return F::nan();
    }
    if a <= -sat || b <= -sat {
        return F::zero();
    }
    if a >= sat {
        return norm_cdf(b);
    }
    if b >= sat {
        return norm_cdf(a);
    }
    let one = F::one();
    if r == F::zero() {
        return norm_cdf(a) * norm_cdf(b);
    }
    if r >= one {
        return norm_cdf(a.min(b));
    }
    if r <= -one {
        return (norm_cdf(a) - norm_cdf(-b)).max(F::zero());
    }
    if r < F::lit(-0.925) {
        let flipped = Correlation(-r);
        return (norm_cdf(a) - binorm_cdf(a, -b, flipped)).max(F::zero());
    }
    // Upper-orthant form P[X > h, Y > k] with h = −a, k = −b.
    upper_orthant(-a, -b, r).max(F::zero()).min(one)
}

fn upper_orthant<F: Scalar>(h: F, k: F, r: F) -> F {
    let one = F::one();
    let two = F::lit(2.0);
    let half = F::lit(0.5);
    let rule = gl_rule(r.abs().as_f64());
    let hk = h * k;

    if r.abs() <= F::lit(0.925) {
        let hs = (h * h + k * k) * half;
        let asr = r.asin();
        let mut sum = F::zero();
        for &(w, x) in rule {
            for sign in [-1.0, 1.0] {
                let sn = (asr * (F::lit(sign * x) + one) * half).sin();
                sum = sum + F::lit(w) * ((sn * hk - hs) / (one - sn * sn)).exp();
            }
        }
        return sum * asr / (two * F::TAU()) + norm_cdf(-h) * norm_cdf(-k);
    }

    // 0.925 < r < 1
    let hundred = F::lit(100.0);
    let a_s = (one - r) * (one + r);
    let mut a = a_s.sqrt();
    let b_s = (h - k) * (h - k);
    let c = (F::lit(4.0) - hk) / F::lit(8.0);
    let d = (F::lit(12.0) - hk) / F::lit(16.0);
    let fifth = F::lit(0.2);
    let third = one / F::lit(3.0);

    let mut bvn = F::zero();
    let asr = -(b_s / a_s + hk) * half;
    if asr > -hundred {
        bvn = a
            * asr.exp()
            * (one - c * (b_s - a_s) * (one - d * b_s * fifth) * third + c * d * a_s * a_s * fifth);
    }
    if -hk < hundred {
        let b = b_s.sqrt();
        bvn = bvn
            - (-hk * half).exp()
                * F::TAU().sqrt()
                * norm_cdf(-b / a)
                * b
                * (one - c * b_s * (one - d * b_s * fifth) * third);
    }
    a = a * half;
    for &(w, x) in rule {
        for sign in [-1.0, 1.0] {
            let xi = a * (F::lit(sign * x) + one);
            let x_s = xi * xi;
            let r_s = (one - x_s).sqrt();
            let asr = -(b_s / x_s + hk) * half;
            if asr > -hundred {
                bvn = bvn
                    + a * F::lit(w)
                        * asr.exp()
                        * ((-hk * (one - r_s) / (two * (one + r_s))).exp() / r_s
                            - (one + c * x_s * (one + d * x_s)));
            }
        }
    }
    -bvn / F::TAU() + norm_cdf(-h.max(k))
}

const MAX_ROOT_ITERATIONS: usize = 200;

/// Brent's bracketed root finder (bisection safeguarded inverse quadratic /
/// secant steps).
///
/// Stops when `|f(x)| ≤ tol` or the bracket is narrower than
/// `tol·max(1, |x|)`. The returned point always lies inside `[lo, hi]`.
pub fn find_root<F, Func>(mut f: Func, lo: F, hi: F, tol: F) -> Result<F>
where
    F: Scalar,
    Func: FnMut(F) -> F,
{
    if !(tol > F::zero()) {
        return Err(PricingError::DomainError(format!("root tolerance {tol} must be positive")));
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa.is_nan() || fb.is_nan() || fa * fb > F::zero() {
        return Err(PricingError::NoBracket {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            f_lo: fa.as_f64(),
            f_hi: fb.as_f64(),
        });
    }
    if fa == F::zero() {
        return Ok(a);
    }
    if fb == F::zero() {
        return Ok(b);
    }

    let two = F::lit(2.0);
    let half = F::lit(0.5);
    let three = F::lit(3.0);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..MAX_ROOT_ITERATIONS {
        if fb * fc > F::zero() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let width_tol = half * tol * F::one().max(b.abs());
        let m = half * (c - b);
        if fb.abs() <= tol || m.abs() <= width_tol {
            return Ok(b);
        }
        if e.abs() >= width_tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = F::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - F::one()));
                q = (qa - F::one()) * (r - F::one()) * (s - F::one());
            }
            if p > F::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (three * m * q - (width_tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b = if d.abs() > width_tol {
            b + d
        } else if m > F::zero() {
            b + width_tol
        } else {
            b - width_tol
        };
        fb = f(b);
        if fb.is_nan() {
            return Err(PricingError::DomainError("root function returned NaN".into()));
        }
    }
    Err(PricingError::NoConvergence { iterations: MAX_ROOT_ITERATIONS })
}

const MAX_QUADRATURE_DEPTH: usize = 60;

// 15-point Kronrod extension of the 7-point Gauss rule (abscissae on [0, 1]).
const GK15_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const GK15_KRONROD_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK15_GAUSS_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Scalar, Func: FnMut(F) -> F>(f: &mut Func, lo: F, hi: F) -> (F, F) {
    let half = F::lit(0.5);
    let center = half * (lo + hi);
    let radius = half * (hi - lo);
    let f_center = f(center);
    let mut kronrod = f_center * F::lit(GK15_KRONROD_WEIGHTS[7]);
    let mut gauss = f_center * F::lit(GK15_GAUSS_WEIGHTS[3]);
    for i in 0..7 {
        let dx = radius * F::lit(GK15_NODES[i]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + F::lit(GK15_KRONROD_WEIGHTS[i]) * pair;
        if i % 2 == 1 {
            gauss = gauss + F::lit(GK15_GAUSS_WEIGHTS[i / 2]) * pair;
        }
    }
    (kronrod * radius, ((kronrod - gauss) * radius).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[lo, hi]` to
/// absolute tolerance `tol`.
pub fn integrate<F, Func>(mut f: Func, lo: F, hi: F, tol: F) -> Result<F>
where
    F: Scalar,
    Func: FnMut(F) -> F,
{
    if !(tol > F::zero()) {
        return Err(PricingError::DomainError(format!("quadrature tolerance {tol} must be positive")));
    }
    if hi < lo {
        return Err(PricingError::DomainError(format!("integration bounds reversed: [{lo}, {hi}]")));
    }
    if hi == lo {
        return Ok(F::zero());
    }
    adapt(&mut f, lo, hi, tol, 0)
}

fn adapt<F: Scalar, Func: FnMut(F) -> F>(f: &mut Func, lo: F, hi: F, tol: F, depth: usize) -> Result<F> {
    let (estimate, error) = gk15(f, lo, hi);
    if error.is_nan() {
        return Err(PricingError::DomainError("integrand returned NaN".into()));
    }
    // Stop when the interval can no longer be split in the working precision.
    let mid = F::lit(0.5) * (lo + hi);
    if error <= tol || mid <= lo || mid >= hi {
        return Ok(estimate);
    }
    if depth >= MAX_QUADRATURE_DEPTH {
        return Err(PricingError::NoConvergence { iterations: depth });
    }
    let half_tol = F::lit(0.5) * tol;
    Ok(adapt(f, lo, mid, half_tol, depth + 1)? + adapt(f, mid, hi, half_tol, depth + 1)?)
}
