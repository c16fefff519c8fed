//! Quantities computed from wavefields and diffraction patterns: deflection
//! and asymmetry, the Bohmian quantum potential and its force moment, a
//! partial-coherence model, momentum spectra and longitudinal dispersion.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::analytic::{intensity, FluxStrength, ParaxialBeam};
use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::specfn::sin_cos_pi;
use crate::wavefield::{Grid1D, WaveField, WaveField2D};

/// Tail fraction above which a pattern is considered truncated.
pub const COVERAGE_LIMIT: f64 = 0.01;

/// Samples with `R` below this fraction of the peak are masked in `Q`.
pub const Q_MASK_THRESHOLD: f64 = 1e-6;

/// Fraction of the weight that must sit on unmasked samples.
pub const MASK_COVERAGE_REQUIRED: f64 = 0.95;

/// Smallest margin, in units of the source r.m.s., between the pattern
/// edges and its outermost significant sample.
pub const COHERENCE_MARGIN: f64 = 5.0;

/// Kernel truncation of the coherence convolution, in r.m.s. units.
const COHERENCE_CUTOFF: f64 = 8.0;

pub const PHASE_ONLY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleUnit {
    Radians,
    /// Dimensionless `w theta`.
    Scaled,
    /// Detector coordinate.
    Meters,
}

impl AngleUnit {
    pub fn label(self) -> &'static str {
        match self {
            AngleUnit::Radians => "rad",
            AngleUnit::Scaled => "w*theta",
            AngleUnit::Meters => "m",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternNormalization {
    UnitPeak,
    UnitArea,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    DirectSum,
    Fraunhofer,
    /// Output of [`apply_partial_coherence`] on a pattern of the given
    /// origin.
    PartiallyCoherent(PatternSource),
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternSource {
    Analytic,
    DirectSum,
    Fraunhofer,
    External,
}

impl Provenance {
    fn source(self) -> PatternSource {
        match self {
            Provenance::Analytic => PatternSource::Analytic,
            Provenance::DirectSum => PatternSource::DirectSum,
            Provenance::Fraunhofer => PatternSource::Fraunhofer,
            Provenance::PartiallyCoherent(s) => s,
            Provenance::External => PatternSource::External,
        }
    }
}

/// Intensity against angle.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffractionPattern {
    angles: Vec<f64>,
    intensities: Vec<f64>,
    unit: AngleUnit,
    normalization: PatternNormalization,
    provenance: Provenance,
}

impl DiffractionPattern {
    pub fn new(
        angles: Vec<f64>,
        intensities: Vec<f64>,
        unit: AngleUnit,
        normalization: PatternNormalization,
        provenance: Provenance,
    ) -> Result<Self> {
        if angles.len() != intensities.len() {
            return Err(Error::GridMismatch(format!(
                "{} angles but {} intensities",
                angles.len(),
                intensities.len()
            )));
        }
        if angles.len() < 2 {
            return Err(Error::param("angles", "a pattern needs at least two samples"));
        }
        if angles.iter().any(|a| !a.is_finite()) || angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("angles", "must be finite and strictly increasing"));
        }
        if let Some(i) = intensities.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param(
                "intensities",
                format!("must be finite and >= 0, got {} at sample {i}", intensities[i]),
            ));
        }
        Ok(DiffractionPattern {
            angles,
            intensities,
            unit,
            normalization,
            provenance,
        })
    }

    /// `|c(alpha, theta)|^2` sampled at `angles` (radians, or `w theta` when
    /// `beam.w() == 1`).
    pub fn analytic(alpha: &FluxStrength, beam: &ParaxialBeam, angles: Vec<f64>, unit: AngleUnit) -> Result<Self> {
        let intensities = angles
            .iter()
            .map(|&t| intensity(alpha, t, beam))
            .collect::<Result<Vec<_>>>()?;
        Self::new(angles, intensities, unit, PatternNormalization::Raw, Provenance::Analytic)
    }

    /// `|psi|^2` of a far-field wavefield, with detector coordinates turned
    /// into angles by `angle = x * scale` (e.g. `w / z` for `w theta`).
    pub fn from_field(field: &WaveField, scale: f64, unit: AngleUnit, provenance: Provenance) -> Result<Self> {
        let angles = field.grid().coordinates().into_iter().map(|x| x * scale).collect();
        Self::new(angles, field.intensities(), unit, PatternNormalization::Raw, provenance)
    }

    /// Projection of a 2-D far field onto its `y` axis: intensity summed over
    /// `x` with the `x` spacing as weight.
    pub fn projected_y(field: &WaveField2D, scale: f64, unit: AngleUnit, provenance: Provenance) -> Result<Self> {
        let g = field.grid();
        let ny = g.y.len();
        let mut acc = vec![0.0; ny];
        for ix in 0..g.x.len() {
            for (iy, a) in acc.iter_mut().enumerate() {
                *a += field.at(ix, iy).norm_sqr();
            }
        }
        let dx = g.x.spacing();
        acc.iter_mut().for_each(|a| *a *= dx);
        let angles = g.y.coordinates().into_iter().map(|y| y * scale).collect();
        Self::new(angles, acc, unit, PatternNormalization::Raw, provenance)
    }

    /// Projection onto the `x` axis: intensity summed over `y`.
    pub fn projected_x(field: &WaveField2D, scale: f64, unit: AngleUnit, provenance: Provenance) -> Result<Self> {
        let g = field.grid();
        let dy = g.y.spacing();
        let acc = (0..g.x.len())
            .map(|ix| (0..g.y.len()).map(|iy| field.at(ix, iy).norm_sqr()).sum::<f64>() * dy)
            .collect();
        let angles = g.x.coordinates().into_iter().map(|x| x * scale).collect();
        Self::new(angles, acc, unit, PatternNormalization::Raw, provenance)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn unit(&self) -> AngleUnit {
        self.unit
    }

    pub fn normalization(&self) -> PatternNormalization {
        self.normalization
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.intensities.iter().copied().fold(0.0, f64::max)
    }

    /// Trapezoidal area.
    pub fn area(&self) -> f64 {
        trapezoid_weights(&self.angles)
            .iter()
            .zip(&self.intensities)
            .map(|(w, i)| w * i)
            .sum()
    }

    pub fn normalized(&self, kind: PatternNormalization) -> Result<Self> {
        let factor = match kind {
            PatternNormalization::Raw => 1.0,
            PatternNormalization::UnitPeak => self.peak(),
            PatternNormalization::UnitArea => self.area(),
        };
        if factor <= 0.0 {
            return Err(Error::Degenerate("pattern has zero intensity".into()));
        }
        let mut out = self.clone();
        if kind != PatternNormalization::Raw {
            out.intensities.iter_mut().for_each(|v| *v /= factor);
            out.normalization = kind;
        }
        Ok(out)
    }

    /// Samples with `lo <= angle <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> Result<Self> {
        let (a, i): (Vec<f64>, Vec<f64>) = self
            .angles
            .iter()
            .zip(&self.intensities)
            .filter(|(a, _)| **a >= lo && **a <= hi)
            .map(|(a, i)| (*a, *i))
            .unzip();
        Self::new(a, i, self.unit, self.normalization, self.provenance)
    }

    /// Depth of the central minimum: the lowest intensity between the
    /// strongest sample at negative angle and the strongest at positive
    /// angle, relative to the overall peak. `None` if either side is empty.
    pub fn central_dip(&self) -> Option<(f64, f64)> {
        let argmax = |range: &mut dyn Iterator<Item = usize>| {
            range.max_by(|&a, &b| self.intensities[a].total_cmp(&self.intensities[b]))
        };
        let left = argmax(&mut (0..self.len()).filter(|&i| self.angles[i] < 0.0))?;
        let right = argmax(&mut (0..self.len()).filter(|&i| self.angles[i] > 0.0))?;
        let i = (left..=right).min_by(|&a, &b| self.intensities[a].total_cmp(&self.intensities[b]))?;
        let p = self.peak();
        (p > 0.0).then(|| (self.angles[i], self.intensities[i] / p))
    }
}

/// Trapezoidal weights on a strictly increasing, possibly non-uniform grid.
fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Tail estimate: an intensity falling like `1/theta^2` beyond the edge
/// carries `I_edge * |theta_edge - theta_peak|`; faster decay carries less.
fn coverage_check(p: &DiffractionPattern, total: f64) -> Result<()> {
    let ipk = p
        .intensities
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let tp = p.angles[ipk];
    let n = p.len();
    let tail = p.intensities[0] * (p.angles[0] - tp).abs() + p.intensities[n - 1] * (p.angles[n - 1] - tp).abs();
    let fraction = tail / (total + tail);
    if fraction > COVERAGE_LIMIT {
        return Err(Error::Coverage {
            tail_fraction: fraction,
            limit: COVERAGE_LIMIT,
        });
    }
    Ok(())
}

fn checked_total(p: &DiffractionPattern) -> Result<f64> {
    let total = p.area();
    if total <= 0.0 {
        return Err(Error::Degenerate("pattern has zero total intensity".into()));
    }
    coverage_check(p, total)?;
    Ok(total)
}

/// `<theta> = sum theta_i I_i / sum I_i` with trapezoidal weights.
pub fn expectation_deflection(p: &DiffractionPattern) -> Result<f64> {
    let total = checked_total(p)?;
    let w = trapezoid_weights(&p.angles);
    let m: f64 = p
        .angles
        .iter()
        .zip(&p.intensities)
        .zip(&w)
        .map(|((t, i), w)| t * i * w)
        .sum();
    Ok(m / total)
}

/// `A = (int_{theta>0} I - int_{theta<0} I) / int I`, with the piecewise
/// linear interpolant split exactly at `theta = 0`.
pub fn asymmetry_metric(p: &DiffractionPattern) -> Result<f64> {
    let n = p.len();
    if !(p.angles[0] < 0.0 && p.angles[n - 1] > 0.0) {
        return Err(Error::domain("asymmetry_metric", "theta = 0 must lie inside the pattern"));
    }
    let total = checked_total(p)?;
    let (mut neg, mut pos) = (0.0, 0.0);
    for i in 0..n - 1 {
        let (a, b) = (p.angles[i], p.angles[i + 1]);
        let (ia, ib) = (p.intensities[i], p.intensities[i + 1]);
        if b <= 0.0 {
            neg += 0.5 * (b - a) * (ia + ib);
        } else if a >= 0.0 {
            pos += 0.5 * (b - a) * (ia + ib);
        } else {
            let i0 = ia + (ib - ia) * (-a) / (b - a);
            neg += 0.5 * (-a) * (ia + i0);
            pos += 0.5 * b * (i0 + ib);
        }
    }
    Ok((pos - neg) / total)
}

/// Bohmian quantum potential `Q = -hbar^2 R'' / (2 m R)` on a 1-D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumPotentialProfile {
    grid: Grid1D,
    r: Vec<f64>,
    q: Vec<f64>,
    mask: Vec<bool>,
    mass: f64,
}

impl QuantumPotentialProfile {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn y(&self) -> Vec<f64> {
        self.grid.coordinates()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// `Q` in joules; `NaN` on masked samples.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `true` where the sample is excluded.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Natural energy scale `hbar^2 / (2 m beta^2)` for a packet width.
    pub fn energy_scale(&self, beta: f64) -> f64 {
        HBAR * HBAR / (2.0 * self.mass * beta * beta)
    }

    /// `max |Q(y) - Q(-y)| / max |Q|` over unmasked mirror pairs.
    pub fn mirror_asymmetry(&self) -> Result<f64> {
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        let mut pairs = 0usize;
        for i in 0..self.q.len() {
            if self.mask[i] {
                continue;
            }
            den = den.max(self.q[i].abs());
            if let Some(j) = self.grid.mirror_index(i) {
                if !self.mask[j] {
                    num = num.max((self.q[i] - self.q[j]).abs());
                    pairs += 1;
                }
            }
        }
        if pairs == 0 {
            return Err(Error::GridMismatch("no unmasked mirror pairs about y = 0".into()));
        }
        if den == 0.0 {
            return Ok(0.0);
        }
        Ok(num / den)
    }
}

/// Quantum potential of a smooth field for a particle of mass `mass` (kg).
///
/// `R'' ` uses centred second differences with second-order one-sided
/// closures at the ends. Samples with `R < 1e-6 max R` are masked.
pub fn quantum_potential(field: &WaveField, mass: f64) -> Result<QuantumPotentialProfile> {
    if field.origin().is_discontinuous() {
        return Err(Error::Smoothness(
            "the quantum potential needs a propagated field; the raw step state has no derivative at y = 0".into(),
        ));
    }
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::param("mass", format!("must be finite and > 0, got {mass}")));
    }
    let grid = *field.grid();
    let n = grid.len();
    let h = grid.spacing();
    let r: Vec<f64> = field.values().iter().map(|v| v.norm()).collect();
    let rmax = r.iter().copied().fold(0.0, f64::max);
    if rmax == 0.0 {
        return Err(Error::Degenerate("field is identically zero".into()));
    }
    let lap = |i: usize| -> f64 {
        if i == 0 {
            (2.0 * r[0] - 5.0 * r[1] + 4.0 * r[2] - r[3]) / (h * h)
        } else if i == n - 1 {
            (2.0 * r[n - 1] - 5.0 * r[n - 2] + 4.0 * r[n - 3] - r[n - 4]) / (h * h)
        } else {
            (r[i + 1] - 2.0 * r[i] + r[i - 1]) / (h * h)
        }
    };
    let pref = -HBAR * HBAR / (2.0 * mass);
    let mut q = vec![f64::NAN; n];
    let mut mask = vec![true; n];
    for i in 0..n {
        if r[i] >= Q_MASK_THRESHOLD * rmax {
            mask[i] = false;
            q[i] = pref * lap(i) / r[i];
            if !q[i].is_finite() {
                return Err(Error::Evaluation(format!("Q = {} at sample {i}", q[i])));
            }
        }
    }
    Ok(QuantumPotentialProfile { grid, r, q, mask, mass })
}

/// Moments of the quantum-force density `dQ/dy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumForceMoment {
    /// `int dQ/dy dy` over the unmasked samples.
    pub unweighted: f64,
    /// `int w dQ/dy dy / int w dy` over the unmasked samples.
    pub weighted: f64,
    /// Fraction of the weight on unmasked samples.
    pub covered: f64,
}

/// Centred first differences with second-order one-sided closures at the
/// ends of each unmasked run; `NaN` on masked samples.
fn gradient_on_runs(q: &[f64], mask: &[bool], h: f64) -> Vec<f64> {
    let n = q.len();
    let mut g = vec![f64::NAN; n];
    let mut i = 0;
    while i < n {
        if mask[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && !mask[i] {
            i += 1;
        }
        let end = i; // exclusive
        let len = end - start;
        if len < 3 {
            continue;
        }
        for j in start..end {
            g[j] = if j == start {
                (-3.0 * q[j] + 4.0 * q[j + 1] - q[j + 2]) / (2.0 * h)
            } else if j == end - 1 {
                (3.0 * q[j] - 4.0 * q[j - 1] + q[j - 2]) / (2.0 * h)
            } else {
                (q[j + 1] - q[j - 1]) / (2.0 * h)
            };
        }
    }
    g
}

/// `int dQ/dy dy` and its `weight`-weighted mean over unmasked samples.
///
/// `weight` is normally `|psi|^2` on the profile's grid.
pub fn quantum_force_moment(profile: &QuantumPotentialProfile, weight: &[f64]) -> Result<QuantumForceMoment> {
    let n = profile.q.len();
    if weight.len() != n {
        return Err(Error::GridMismatch(format!("{} weights for {n} samples", weight.len())));
    }
    let total_w: f64 = weight.iter().sum();
    if total_w.is_nan() || total_w <= 0.0 {
        return Err(Error::Degenerate("weight has zero total".into()));
    }
    let h = profile.grid.spacing();
    let g = gradient_on_runs(&profile.q, &profile.mask, h);
    let usable: Vec<bool> = g.iter().map(|v| v.is_finite()).collect();
    let covered_w: f64 = weight.iter().zip(&usable).filter(|(_, u)| **u).map(|(w, _)| w).sum();
    let covered = covered_w / total_w;
    if covered < MASK_COVERAGE_REQUIRED {
        return Err(Error::MaskCoverage {
            covered,
            required: MASK_COVERAGE_REQUIRED,
        });
    }
    // Trapezoid over each run of usable samples.
    let mut unweighted = 0.0;
    for i in 0..n - 1 {
        if usable[i] && usable[i + 1] {
            unweighted += 0.5 * h * (g[i] + g[i + 1]);
        }
    }
    let weighted = g
        .iter()
        .zip(weight)
        .filter(|(v, _)| v.is_finite())
        .map(|(v, w)| v * w)
        .sum::<f64>()
        / covered_w;
    Ok(QuantumForceMoment {
        unweighted,
        weighted,
        covered,
    })
}

/// Incoherent Gaussian source: every sample's mass `I_i dtheta_i` is spread
/// over the grid with a unit-area Gaussian of r.m.s. `source_rms`,
/// truncated at 8 r.m.s. and renormalised on the grid, so the trapezoidal
/// area is preserved.
pub fn apply_partial_coherence(p: &DiffractionPattern, source_rms: f64) -> Result<DiffractionPattern> {
    if !(source_rms.is_finite() && source_rms >= 0.0) {
        return Err(Error::param("source_rms", format!("must be finite and >= 0, got {source_rms}")));
    }
    if source_rms == 0.0 {
        return Ok(p.clone());
    }
    let n = p.len();
    let pk = p.peak();
    if pk <= 0.0 {
        return Err(Error::Degenerate("pattern has zero intensity".into()));
    }
    let cut = 0.01 * pk;
    let lo = p.intensities.iter().position(|v| *v > cut).unwrap();
    let hi = p.intensities.iter().rposition(|v| *v > cut).unwrap();
    let need = COHERENCE_MARGIN * source_rms;
    let left = p.angles[lo] - p.angles[0];
    let right = p.angles[n - 1] - p.angles[hi];
    if left < need || right < need {
        return Err(Error::Margin(format!(
            "pattern extends {left:e} / {right:e} beyond its significant region; \
             source r.m.s. {source_rms:e} needs {need:e} on both ends"
        )));
    }

    let w = trapezoid_weights(&p.angles);
    let reach = COHERENCE_CUTOFF * source_rms;
    let mut out = vec![0.0; n];
    let mut kernel = Vec::new();
    for i in 0..n {
        let mass = p.intensities[i] * w[i];
        if mass == 0.0 {
            continue;
        }
        let t = p.angles[i];
        let a = p.angles.partition_point(|x| *x < t - reach);
        let b = p.angles.partition_point(|x| *x <= t + reach);
        kernel.clear();
        kernel.extend((a..b).map(|j| {
            let d = (p.angles[j] - t) / source_rms;
            (-0.5 * d * d).exp() * w[j]
        }));
        let s: f64 = kernel.iter().sum();
        for (j, k) in (a..b).zip(&kernel) {
            out[j] += mass * k / s;
        }
    }
    for (o, wj) in out.iter_mut().zip(&w) {
        *o /= wj;
    }
    DiffractionPattern::new(
        p.angles.clone(),
        out,
        p.unit,
        PatternNormalization::Raw,
        Provenance::PartiallyCoherent(p.provenance.source()),
    )
}

/// Transverse momentum amplitude
/// `phi(k) = (2 pi)^(-1/2) sum_j psi(y_j) exp(-i k y_j) dy`
/// on the FFT grid `k_m = m dk`, `dk = 2 pi / (n dy)`, in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumSpectrum {
    grid: Grid1D,
    amplitude: Vec<Complex64>,
}

impl MomentumSpectrum {
    /// Spectrum from explicit samples on a `k` grid.
    pub fn new(grid: Grid1D, amplitude: Vec<Complex64>) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} amplitudes on a grid of {}",
                amplitude.len(),
                grid.len()
            )));
        }
        Ok(MomentumSpectrum { grid, amplitude })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn k(&self) -> Vec<f64> {
        self.grid.coordinates()
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm()).collect()
    }

    pub fn phase(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.arg()).collect()
    }

    /// `sum |phi|^2 dk`.
    pub fn total_probability(&self) -> f64 {
        self.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// Pointwise `phi(k) f(k)`.
    pub fn map_with<F: Fn(f64) -> Complex64>(&self, f: F) -> Self {
        let amplitude = self
            .amplitude
            .iter()
            .enumerate()
            .map(|(i, a)| a * f(self.grid.coordinate(i)))
            .collect();
        MomentumSpectrum {
            grid: self.grid,
            amplitude,
        }
    }
}

pub fn momentum_spectrum(field: &WaveField) -> Result<MomentumSpectrum> {
    let g = field.grid();
    let n = g.len();
    let dy = g.spacing();
    let mut buf = field.values().to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = dy / (2.0 * std::f64::consts::PI).sqrt();
    let half = (n / 2) as i64;
    let amplitude = (0..n as i64)
        .map(|i| {
            let m = i - half;
            // exp(-i k_m y_0) with y_0 = -center dy: exp(2 pi i m center / n)
            let t = (2.0 * m as f64 * g.center() / n as f64).rem_euclid(2.0);
            let (s, c) = sin_cos_pi(t);
            buf[m.rem_euclid(n as i64) as usize] * Complex64::new(c, s) * scale
        })
        .collect();
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * dy);
    let grid = Grid1D::from_spacing(n, dk, half as f64)?;
    Ok(MomentumSpectrum { grid, amplitude })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseOnlyReport {
    pub is_phase_only: bool,
    pub magnitude_deviation: f64,
}

/// Whether `after` differs from `before` by a momentum-dependent phase
/// only: `max_k ||after| - |before|| / max |before| < 1e-6`.
pub fn phase_only_test(before: &MomentumSpectrum, after: &MomentumSpectrum) -> Result<PhaseOnlyReport> {
    if before.grid != after.grid {
        return Err(Error::GridMismatch("spectra live on different k grids".into()));
    }
    let scale = before.amplitude.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Degenerate("reference spectrum is identically zero".into()));
    }
    let dev = before
        .amplitude
        .iter()
        .zip(&after.amplitude)
        .map(|(b, a)| (a.norm() - b.norm()).abs())
        .fold(0.0, f64::max)
        / scale;
    Ok(PhaseOnlyReport {
        is_phase_only: dev < PHASE_ONLY_THRESHOLD,
        magnitude_deviation: dev,
    })
}

/// `d delta / dk` on a possibly non-uniform grid, exact for quadratics.
/// Written in terms of differences so that a constant `delta` gives exact
/// zeros.
fn derivative(k: &[f64], d: &[f64]) -> Vec<f64> {
    let n = k.len();
    let s: Vec<f64> = (0..n - 1).map(|i| (d[i + 1] - d[i]) / (k[i + 1] - k[i])).collect();
    let h: Vec<f64> = (0..n - 1).map(|i| k[i + 1] - k[i]).collect();
    (0..n)
        .map(|i| {
            if i == 0 {
                s[0] - h[0] * (s[1] - s[0]) / (h[0] + h[1])
            } else if i == n - 1 {
                s[n - 2] + h[n - 2] * (s[n - 2] - s[n - 3]) / (h[n - 3] + h[n - 2])
            } else {
                (h[i] * s[i - 1] + h[i - 1] * s[i]) / (h[i - 1] + h[i])
            }
        })
        .collect()
}

/// `sum_i w_i delta'(k_i)`: the longitudinal-shift term of a momentum-
/// dependent phase. Zero for force-free interactions.
///
/// `weight` must sum to 1 (within 1e-10).
pub fn zeilinger_dispersion_term(k: &[f64], weight: &[f64], delta: &[f64]) -> Result<f64> {
    let n = k.len();
    if weight.len() != n || delta.len() != n {
        return Err(Error::GridMismatch(format!(
            "{n} k samples, {} weights, {} phases",
            weight.len(),
            delta.len()
        )));
    }
    if n < 3 {
        return Err(Error::param("k", "need at least three samples"));
    }
    if k.iter().any(|v| !v.is_finite()) || k.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("k", "must be finite and strictly increasing"));
    }
    if weight.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::param("weight", "must be finite and >= 0"));
    }
    let sum: f64 = weight.iter().sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(Error::param("weight", format!("must sum to 1, sums to {sum}")));
    }
    if delta.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("delta", "must be finite"));
    }
    let dd = derivative(k, delta);
    Ok(weight.iter().zip(&dd).map(|(w, d)| w * d).sum())
}
