//! Real special functions and Gauss-Legendre quadrature.
//!
//! `erfi` is never evaluated from its own power series. Everything goes
//! through the Dawson function `D(x) = exp(-x^2) * int_0^x exp(t^2) dt`,
//! which stays bounded, so the Gaussian-damped product `exp(-x^2) erfi(x)`
//! can be formed without ever materialising `erfi` itself.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Below this |x| the Dawson Maclaurin series converges in a handful of terms.
const DAWSON_SERIES_LIMIT: f64 = 0.2;
/// Above this |x| the asymptotic series reaches machine precision in < 10 terms.
const DAWSON_ASYMPTOTIC_LIMIT: f64 = 50.0;
/// Rybicki sampling step. The aliasing error is ~exp(-(pi / 2h)^2) ~ 1e-17.
const RYBICKI_STEP: f64 = 0.25;
/// Gaussian terms with |x - nh| beyond this are below 1e-18.
const RYBICKI_CUTOFF: f64 = 6.5;

/// Largest |x| accepted by [`erfi`] before reporting overflow regardless of
/// the computed value.
pub const ERFI_MAX_ARG: f64 = 30.0;

/// Dawson function `D(x) = exp(-x^2) * int_0^x exp(t^2) dt`.
pub fn dawson(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("dawson", format!("non-finite argument {x}")));
    }
    Ok(dawson_unchecked(x))
}

pub(crate) fn dawson_unchecked(x: f64) -> f64 {
    let ax = x.abs();
    let value = if ax < DAWSON_SERIES_LIMIT {
        dawson_series(ax)
    } else if ax > DAWSON_ASYMPTOTIC_LIMIT {
        dawson_asymptotic(ax)
    } else {
        dawson_rybicki(ax)
    };
    value.copysign(x)
}

// D(x) = sum_n (-1)^n 2^n x^(2n+1) / (2n+1)!!
fn dawson_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term.abs() > 1e-18 * sum.abs() {
        n += 1.0;
        term *= -2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
    }
    sum
}

// D(x) ~ 1/(2x) * sum_k (2k-1)!! / (2x^2)^k
fn dawson_asymptotic(x: f64) -> f64 {
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let next = term * (2.0 * k - 1.0) * inv;
        if next < 1e-18 * sum || next > term {
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    sum / (2.0 * x)
}

// Rybicki's sampling-theorem representation,
//   D(x) = lim_{h->0} pi^(-1/2) sum_{n odd} exp(-(x - n h)^2) / n,
// which converges exponentially in 1/h^2. Only odd n with |x - nh| within
// the cutoff contribute.
fn dawson_rybicki(x: f64) -> f64 {
    let h = RYBICKI_STEP;
    let lo = ((x - RYBICKI_CUTOFF) / h).floor() as i64;
    let hi = ((x + RYBICKI_CUTOFF) / h).ceil() as i64;
    let lo = lo.min(-((RYBICKI_CUTOFF / h).ceil() as i64));
    let mut pos = 0.0;
    let mut neg = 0.0;
    for n in lo..=hi {
        if n % 2 == 0 {
            continue;
        }
        let d = x - n as f64 * h;
        if d.abs() > RYBICKI_CUTOFF {
            continue;
        }
        let t = (-d * d).exp() / n as f64;
        if t > 0.0 {
            pos += t;
        } else {
            neg += t;
        }
    }
    (pos + neg) / PI.sqrt()
}

/// Imaginary error function `erfi(x) = -i erf(ix) = 2/sqrt(pi) exp(x^2) D(x)`.
///
/// Fails with [`Error::Overflow`] once the result leaves the `f64` range
/// (|x| above roughly 26.6) and for every |x| > [`ERFI_MAX_ARG`].
pub fn erfi(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("erfi", format!("non-finite argument {x}")));
    }
    if x.abs() > ERFI_MAX_ARG {
        return Err(Error::Overflow { func: "erfi", x });
    }
    let v = FRAC_2_SQRT_PI * (x * x).exp() * dawson_unchecked(x);
    if !v.is_finite() {
        return Err(Error::Overflow { func: "erfi", x });
    }
    Ok(v)
}

/// `exp(-x^2) * erfi(x)`, evaluated as `2/sqrt(pi) * D(x)` so that neither
/// factor is ever formed. Bounded by ~0.61 for all real x.
pub fn gaussian_damped_erfi(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(
            "gaussian_damped_erfi",
            format!("non-finite argument {x}"),
        ));
    }
    Ok(FRAC_2_SQRT_PI * dawson_unchecked(x))
}

/// `(sin(pi a), cos(pi a))` with exact zeros at integer and half-integer `a`.
///
/// The argument is reduced to |r| <= 1/4 around the nearest half-integer
/// before scaling by pi, so large flux values keep full relative accuracy
/// and `a -> -a` flips the sine bit-exactly.
pub fn sin_cos_pi(a: f64) -> (f64, f64) {
    let n = (2.0 * a).round();
    let r = a - 0.5 * n;
    let (s, c) = (PI * r).sin_cos();
    match (n as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// A fixed set of abscissae and positive weights on a closed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    lo: f64,
    hi: f64,
    degree: usize,
}

impl QuadratureRule {
    /// `n`-point Gauss-Legendre rule on `[lo, hi]`, exact for polynomials of
    /// degree `2n - 1`.
    pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "quadrature needs at least one node"));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param(
                "interval",
                format!("need finite lo < hi, got [{lo}, {hi}]"),
            ));
        }
        let (x, w) = legendre_nodes(n);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let nodes = x.iter().map(|&t| mid + half * t).collect();
        let weights = w.iter().map(|&wi| half * wi).collect();
        Ok(QuadratureRule {
            nodes,
            weights,
            lo,
            hi,
            degree: 2 * n - 1,
        })
    }

    /// The same rule affinely mapped onto `[lo, hi]`.
    pub fn rescaled(&self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param(
                "interval",
                format!("need finite lo < hi, got [{lo}, {hi}]"),
            ));
        }
        let scale = (hi - lo) / (self.hi - self.lo);
        Ok(QuadratureRule {
            nodes: self
                .nodes
                .iter()
                .map(|&x| lo + (x - self.lo) * scale)
                .collect(),
            weights: self.weights.iter().map(|&w| w * scale).collect(),
            lo,
            hi,
            degree: self.degree,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Highest polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// True when the nodes are mirror images about the interval midpoint.
    pub fn is_symmetric(&self) -> bool {
        let mid = 0.5 * (self.lo + self.hi);
        let n = self.nodes.len();
        (0..n / 2).all(|i| {
            let a = self.nodes[i] - mid;
            let b = self.nodes[n - 1 - i] - mid;
            (a + b).abs() <= 1e-14 * (self.hi - self.lo)
        })
    }
}

// Nodes and weights on [-1, 1], ascending, exactly mirror-symmetric.
fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Weighted sum `sum_i w_i f(x_i)` over the rule.
pub fn integrate<F>(f: F, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut sum = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("integrand is {v} at x = {x}")));
        }
        sum += w * v;
    }
    Ok(sum)
}
