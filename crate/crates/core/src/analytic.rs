//! Closed-form paraxial scattering amplitude of a Gaussian beam past an
//! ideal flux line, and the average deflection it implies.
//!
//! With `x = w theta / sqrt(2)` the amplitude is
//!
//! ```text
//! c(alpha, theta) = exp(-x^2) [cos(pi alpha) + sin(pi alpha) erfi(x)]
//!                 = cos(pi alpha) exp(-x^2) + sin(pi alpha) (2/sqrt(pi)) D(x)
//! ```
//!
//! and only the second (Dawson) form is ever evaluated. Note that the second
//! term decays like `1/theta`, not like a Gaussian, so `|c|^2` carries an
//! algebraic `1/theta^2` tail whenever `alpha` is not an integer.

use num_complex::Complex64;

use crate::constants::{ELEMENTARY_CHARGE, PLANCK};
use crate::error::{Error, Result};
use crate::specfn::{dawson_unchecked, integrate, sin_cos_pi, QuadratureRule};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Dimensionless width parameter `w`; the incident r.m.s. angular spread is
/// `1 / (w sqrt 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParaxialBeam {
    w: f64,
}

impl ParaxialBeam {
    pub fn new(w: f64) -> Result<Self> {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::param("w", format!("must be finite and > 0, got {w}")));
        }
        Ok(ParaxialBeam { w })
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// R.m.s. angular width of the incident distribution.
    pub fn rms_angular_width(&self) -> f64 {
        1.0 / (self.w * std::f64::consts::SQRT_2)
    }
}

/// Enclosed flux in quantum units, `alpha = -e Phi / h`.
///
/// `alpha` is stored as given; it is never reduced modulo 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxStrength {
    alpha: f64,
    phi: Option<f64>,
}

impl FluxStrength {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::param("alpha", format!("must be finite, got {alpha}")));
        }
        Ok(FluxStrength { alpha, phi: None })
    }

    /// From a physical flux in weber.
    pub fn from_weber(phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::param("phi", format!("must be finite, got {phi}")));
        }
        Ok(FluxStrength {
            alpha: -ELEMENTARY_CHARGE * phi / PLANCK,
            phi: Some(phi),
        })
    }

    /// Both values given; they must agree to 1e-12 relative.
    pub fn with_weber(alpha: f64, phi: f64) -> Result<Self> {
        let from_phi = Self::from_weber(phi)?;
        Self::new(alpha)?;
        let scale = alpha.abs().max(from_phi.alpha.abs());
        if (alpha - from_phi.alpha).abs() > 1e-12 * scale {
            return Err(Error::param(
                "phi",
                format!(
                    "flux {phi} Wb corresponds to alpha = {}, not {alpha}",
                    from_phi.alpha
                ),
            ));
        }
        Ok(FluxStrength {
            alpha,
            phi: Some(phi),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Physical flux in weber, `Phi = -alpha h / e`.
    pub fn weber(&self) -> f64 {
        self.phi
            .unwrap_or(-self.alpha * PLANCK / ELEMENTARY_CHARGE)
    }

    /// Aharonov-Bohm phase `2 pi alpha` accumulated around the flux.
    pub fn ab_phase(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.alpha
    }
}

/// Scattering amplitude `c(alpha, theta)`.
///
/// Real for real inputs; the complex return type leaves room for complex
/// envelopes. The imaginary part is exactly zero.
pub fn amplitude(alpha: &FluxStrength, theta: f64, beam: &ParaxialBeam) -> Result<Complex64> {
    if !theta.is_finite() {
        return Err(Error::domain("amplitude", format!("non-finite angle {theta}")));
    }
    Ok(Complex64::new(amplitude_re(alpha.alpha, theta, beam.w), 0.0))
}

fn amplitude_re(alpha: f64, theta: f64, w: f64) -> f64 {
    let x = w * theta * std::f64::consts::FRAC_1_SQRT_2;
    let (s, c) = sin_cos_pi(alpha);
    let gauss = if c == 0.0 { 0.0 } else { c * (-x * x).exp() };
    let tail = if s == 0.0 {
        0.0
    } else {
        s * FRAC_2_SQRT_PI * dawson_unchecked(x)
    };
    gauss + tail
}

/// `|c(alpha, theta)|^2`.
pub fn intensity(alpha: &FluxStrength, theta: f64, beam: &ParaxialBeam) -> Result<f64> {
    Ok(amplitude(alpha, theta, beam)?.norm_sqr())
}

/// Average deflection angle `sin(2 pi alpha) / (w sqrt(pi))`.
///
/// Vanishes exactly when `alpha` is an integer or half-integer.
pub fn deflection_formula(alpha: &FluxStrength, beam: &ParaxialBeam) -> f64 {
    sin_cos_pi(2.0 * alpha.alpha).0 / (beam.w * std::f64::consts::PI.sqrt())
}

/// Half-width (in theta) beyond which the Gaussian envelope `exp(-w^2 theta^2)`
/// of `|c|^2` falls below 1e-16 of its peak.
pub fn envelope_window(beam: &ParaxialBeam) -> f64 {
    (16.0 * std::f64::consts::LN_10).sqrt() / beam.w
}

/// Gauss-Legendre rule with `n` nodes on `[-L, L]`, `L` from
/// [`envelope_window`].
pub fn default_rule(beam: &ParaxialBeam, n: usize) -> Result<QuadratureRule> {
    let l = envelope_window(beam);
    QuadratureRule::gauss_legendre(n, -l, l)
}

/// Expectation `<theta> = int theta |c|^2 / int |c|^2` over the whole line.
///
/// `rule` must be symmetric about zero. The first moment is taken over the
/// rule's window: outside it the odd part of `|c|^2` is Gaussian-small and
/// the even part cancels. The normalisation, which has a `1/theta^2` tail,
/// adds both tails `[L, inf)` through the substitution `theta = L / t`,
/// integrated with the same rule mapped onto `(0, 1]`.
pub fn deflection_numeric(
    alpha: &FluxStrength,
    beam: &ParaxialBeam,
    rule: &QuadratureRule,
) -> Result<f64> {
    let (lo, hi) = rule.domain();
    if !rule.is_symmetric() || (lo + hi).abs() > 1e-14 * (hi - lo) {
        return Err(Error::param(
            "rule",
            format!("needs a rule symmetric about zero, got [{lo}, {hi}]"),
        ));
    }
    let a = alpha.alpha;
    let w = beam.w;
    let i = |t: f64| {
        let c = amplitude_re(a, t, w);
        c * c
    };

    // Pair each node with its mirror so that symmetric patterns give
    // exactly zero.
    let nodes = rule.nodes();
    let weights = rule.weights();
    let n = nodes.len();
    let mut moment = 0.0;
    for k in 0..n / 2 {
        let t = nodes[n - 1 - k];
        let odd = i(t) - i(-t);
        moment += weights[n - 1 - k] * t * odd;
    }
    let core = integrate(i, rule)?;

    let l = hi;
    let tail_rule = rule.rescaled(0.0, 1.0)?;
    let tail = integrate(|s| (i(l / s) + i(-l / s)) * l / (s * s), &tail_rule)?;
    let norm = core + tail;

    if !(moment.is_finite() && norm.is_finite()) {
        return Err(Error::Evaluation(format!(
            "moment {moment}, normalisation {norm}"
        )));
    }
    if norm < 1e-300 {
        return Err(Error::Degenerate(format!("normalisation integral {norm}")));
    }
    Ok(moment / norm)
}
