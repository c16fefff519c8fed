//! Sampled transverse wavefunctions: grids, beam parameters, the phase-step
//! state behind an ideal flux line, finite flux-bar masks and the 2-D
//! circular aperture with an opaque magnetised rod.

use num_complex::Complex64;

use crate::analytic::{FluxStrength, ParaxialBeam};
use crate::constants::{ELECTRON_MASS, ELEMENTARY_CHARGE, PLANCK, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::specfn::sin_cos_pi;

/// Minimum samples per grid axis.
pub const MIN_GRID_POINTS: usize = 16;

/// Uniform 1-D sample grid. Sample `i` sits at `(i - center) * spacing`, so
/// grids with an integer or half-integer `center` are exactly antisymmetric
/// in floating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    spacing: f64,
    center: f64,
}

impl Grid1D {
    /// `n` samples over `extent`, with `y = 0` on sample `n / 2` (FFT layout).
    pub fn centered(n: usize, extent: f64) -> Result<Self> {
        Self::from_spacing(n, extent / n as f64, (n / 2) as f64)
    }

    /// `n` samples over `extent`, mirror symmetric about `y = 0`. Odd `n`
    /// puts a sample on `y = 0`.
    pub fn symmetric(n: usize, extent: f64) -> Result<Self> {
        Self::from_spacing(n, extent / n as f64, (n as f64 - 1.0) / 2.0)
    }

    /// General form: sample 0 at `origin`.
    pub fn with_origin(n: usize, extent: f64, origin: f64) -> Result<Self> {
        let spacing = extent / n as f64;
        Self::from_spacing(n, spacing, -origin / spacing)
    }

    /// `n` samples of the given spacing with `y = 0` at fractional index
    /// `center`.
    pub fn from_spacing(n: usize, spacing: f64, center: f64) -> Result<Self> {
        if n < MIN_GRID_POINTS {
            return Err(Error::param(
                "n",
                format!("grid needs at least {MIN_GRID_POINTS} samples, got {n}"),
            ));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::param(
                "extent",
                format!("grid spacing must be finite and > 0, got {spacing}"),
            ));
        }
        if !center.is_finite() {
            return Err(Error::param("origin", "grid origin must be finite"));
        }
        Ok(Grid1D { n, spacing, center })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn extent(&self) -> f64 {
        self.spacing * self.n as f64
    }

    /// Coordinate of sample 0.
    pub fn origin(&self) -> f64 {
        self.coordinate(0)
    }

    /// Fractional index of `y = 0`.
    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - self.center) * self.spacing
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coordinate(i)).collect()
    }

    /// Index of the sample at exactly `y = 0`, if any.
    pub fn zero_index(&self) -> Option<usize> {
        (self.center.fract() == 0.0).then_some(self.center as usize)
    }

    /// True when `y = 0` lies strictly inside the sampled range.
    pub fn has_interior_zero(&self) -> bool {
        self.center > 0.0 && self.center < (self.n - 1) as f64
    }

    /// True when sample `i` and sample `n - 1 - i` are exact mirror images.
    pub fn is_mirror_symmetric(&self) -> bool {
        2.0 * self.center == (self.n - 1) as f64
    }

    /// Index of the sample mirrored through `y = 0`, when it exists.
    pub fn mirror_index(&self, i: usize) -> Option<usize> {
        let j = 2.0 * self.center - i as f64;
        (j >= 0.0 && j <= (self.n - 1) as f64 && j.fract() == 0.0).then_some(j as usize)
    }
}

/// Tensor-product grid; values are stored with `y` fastest (`ix * ny + iy`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub x: Grid1D,
    pub y: Grid1D,
}

impl Grid2D {
    pub fn new(x: Grid1D, y: Grid1D) -> Self {
        Grid2D { x, y }
    }

    pub fn centered(nx: usize, ny: usize, extent_x: f64, extent_y: f64) -> Result<Self> {
        Ok(Grid2D {
            x: Grid1D::centered(nx, extent_x)?,
            y: Grid1D::centered(ny, extent_y)?,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.y.len() + iy
    }

    pub fn cell_area(&self) -> f64 {
        self.x.spacing() * self.y.spacing()
    }
}

/// Relativistic de Broglie wavelength `h / p` for an electron of the given
/// kinetic energy in eV, with `p c = sqrt(E_k^2 + 2 E_k m0 c^2)`.
pub fn de_broglie_wavelength(kinetic_energy_ev: f64) -> Result<f64> {
    if !(kinetic_energy_ev.is_finite() && kinetic_energy_ev > 0.0) {
        return Err(Error::domain(
            "de_broglie_wavelength",
            format!("kinetic energy must be finite and > 0 eV, got {kinetic_energy_ev}"),
        ));
    }
    let ek = kinetic_energy_ev * ELEMENTARY_CHARGE;
    let p = (2.0 * ELECTRON_MASS * ek + (ek / SPEED_OF_LIGHT).powi(2)).sqrt();
    Ok(PLANCK / p)
}

/// Electron beam: energy, derived wavelength, Gaussian packet width and an
/// optional coherence width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    kinetic_energy_ev: f64,
    lambda_db: f64,
    packet_width_beta: f64,
    coherence_width: f64,
}

impl BeamParams {
    /// `coherence_width` is carried for reporting; 0 means fully coherent.
    pub fn new(kinetic_energy_ev: f64, packet_width_beta: f64, coherence_width: f64) -> Result<Self> {
        let lambda_db = de_broglie_wavelength(kinetic_energy_ev)?;
        if !(packet_width_beta.is_finite() && packet_width_beta > 0.0) {
            return Err(Error::param(
                "beta",
                format!("packet width must be finite and > 0, got {packet_width_beta}"),
            ));
        }
        if !(coherence_width.is_finite() && coherence_width >= 0.0) {
            return Err(Error::param(
                "coherence_width",
                format!("must be finite and >= 0, got {coherence_width}"),
            ));
        }
        Ok(BeamParams {
            kinetic_energy_ev,
            lambda_db,
            packet_width_beta,
            coherence_width,
        })
    }

    pub fn kinetic_energy_ev(&self) -> f64 {
        self.kinetic_energy_ev
    }

    pub fn lambda_db(&self) -> f64 {
        self.lambda_db
    }

    pub fn beta(&self) -> f64 {
        self.packet_width_beta
    }

    pub fn coherence_width(&self) -> f64 {
        self.coherence_width
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.lambda_db
    }

    /// Lorentz factor of the beam electrons.
    pub fn gamma(&self) -> f64 {
        1.0 + self.kinetic_energy_ev * ELEMENTARY_CHARGE
            / (ELECTRON_MASS * SPEED_OF_LIGHT * SPEED_OF_LIGHT)
    }

    /// `gamma m0`, the mass that governs paraxial transverse motion.
    pub fn relativistic_mass(&self) -> f64 {
        self.gamma() * ELECTRON_MASS
    }

    /// `w = k beta / sqrt(2)`: the far field of `exp(-y^2 / beta^2)` has
    /// angular r.m.s. `1 / (k beta)`, which equals `1 / (w sqrt 2)`.
    pub fn paraxial(&self) -> ParaxialBeam {
        ParaxialBeam::new(self.wavenumber() * self.packet_width_beta * std::f64::consts::FRAC_1_SQRT_2)
            .expect("k beta is positive and finite")
    }

    /// Packet width that realises a given `w` at this energy.
    pub fn beta_for_w(kinetic_energy_ev: f64, w: f64) -> Result<f64> {
        let lambda = de_broglie_wavelength(kinetic_energy_ev)?;
        Ok(w * std::f64::consts::SQRT_2 * lambda / (2.0 * std::f64::consts::PI))
    }
}

/// How a field's overall scale is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormConvention {
    /// `sum |psi|^2 * cell = 1`.
    UnitTotalProbability,
    /// `max |psi| = 1`.
    UnitPeak,
    Raw,
}

/// What produced a field. Used to refuse derivatives of discontinuous
/// states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldOrigin {
    /// The raw phase-step state; discontinuous at `y = 0`.
    StepState,
    /// A hard-edged aperture; discontinuous at its rim.
    ApertureState,
    /// Output of a propagator at the given distance in metres.
    Propagated { distance: f64 },
    Synthetic,
}

impl FieldOrigin {
    pub fn is_discontinuous(&self) -> bool {
        matches!(self, FieldOrigin::StepState | FieldOrigin::ApertureState)
    }
}

fn check_values(values: &[Complex64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(Error::GridMismatch(format!(
            "{} values for a grid of {expected} samples",
            values.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Evaluation(format!("field value {} at sample {i}", values[i])));
    }
    Ok(())
}

fn rescale(values: &mut [Complex64], current: NormConvention, target: NormConvention, cell: f64) -> Result<()> {
    if current == target || target == NormConvention::Raw {
        return Ok(());
    }
    let factor = match target {
        NormConvention::UnitTotalProbability => {
            let p: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell;
            if p <= 0.0 {
                return Err(Error::Degenerate("field has zero total probability".into()));
            }
            1.0 / p.sqrt()
        }
        NormConvention::UnitPeak => {
            let m = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if m <= 0.0 {
                return Err(Error::Degenerate("field is identically zero".into()));
            }
            1.0 / m
        }
        NormConvention::Raw => unreachable!(),
    };
    values.iter_mut().for_each(|v| *v *= factor);
    Ok(())
}

fn check_norm(values: &[Complex64], norm: NormConvention, cell: f64) -> Result<()> {
    if norm == NormConvention::UnitTotalProbability {
        let p: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell;
        if (p - 1.0).abs() > 1e-10 {
            return Err(Error::param(
                "norm_convention",
                format!("unit-total-probability field has total probability {p}"),
            ));
        }
    }
    Ok(())
}

/// Complex transverse wavefunction on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: Grid1D,
    values: Vec<Complex64>,
    norm: NormConvention,
    origin: FieldOrigin,
}

impl WaveField {
    pub fn new(grid: Grid1D, values: Vec<Complex64>, norm: NormConvention, origin: FieldOrigin) -> Result<Self> {
        check_values(&values, grid.len())?;
        check_norm(&values, norm, grid.spacing())?;
        Ok(WaveField {
            grid,
            values,
            norm,
            origin,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn norm_convention(&self) -> NormConvention {
        self.norm
    }

    pub fn origin(&self) -> FieldOrigin {
        self.origin
    }

    /// `sum |psi|^2 dy`.
    pub fn total_probability(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Copy rescaled to another convention. `Raw` keeps the current scale.
    pub fn normalized(&self, target: NormConvention) -> Result<Self> {
        let mut values = self.values.clone();
        rescale(&mut values, self.norm, target, self.grid.spacing())?;
        let norm = if target == NormConvention::Raw { self.norm } else { target };
        Ok(WaveField {
            grid: self.grid,
            values,
            norm,
            origin: self.origin,
        })
    }

    /// Pointwise `a * self + b * other` on the same grid (raw convention).
    pub fn linear_combination(&self, a: Complex64, other: &WaveField, b: Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        WaveField::new(self.grid, values, NormConvention::Raw, FieldOrigin::Synthetic)
    }
}

/// Complex wavefunction on a [`Grid2D`], `y` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField2D {
    grid: Grid2D,
    values: Vec<Complex64>,
    norm: NormConvention,
    origin: FieldOrigin,
}

impl WaveField2D {
    pub fn new(grid: Grid2D, values: Vec<Complex64>, norm: NormConvention, origin: FieldOrigin) -> Result<Self> {
        check_values(&values, grid.len())?;
        check_norm(&values, norm, grid.cell_area())?;
        Ok(WaveField2D {
            grid,
            values,
            norm,
            origin,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn norm_convention(&self) -> NormConvention {
        self.norm
    }

    pub fn origin(&self) -> FieldOrigin {
        self.origin
    }

    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[self.grid.index(ix, iy)]
    }

    pub fn total_probability(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn normalized(&self, target: NormConvention) -> Result<Self> {
        let mut values = self.values.clone();
        rescale(&mut values, self.norm, target, self.grid.cell_area())?;
        let norm = if target == NormConvention::Raw { self.norm } else { target };
        Ok(WaveField2D {
            grid: self.grid,
            values,
            norm,
            origin: self.origin,
        })
    }
}

/// Axis along which a flux bar lies in the 2-D scenario. The AB phase steps
/// across the other axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarAxis {
    AlongX,
    AlongY,
}

/// A magnetised rod of finite width (0 for an ideal flux line).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxBar {
    width: f64,
    flux: FluxStrength,
    orientation: BarAxis,
    opaque: bool,
}

impl FluxBar {
    pub fn new(width: f64, flux: FluxStrength, orientation: BarAxis, opaque: bool) -> Result<Self> {
        if !(width.is_finite() && width >= 0.0) {
            return Err(Error::param("bar_width", format!("must be finite and >= 0, got {width}")));
        }
        Ok(FluxBar {
            width,
            flux,
            orientation,
            opaque,
        })
    }

    /// Ideal transparent flux line along `x`.
    pub fn line(flux: FluxStrength) -> Self {
        FluxBar {
            width: 0.0,
            flux,
            orientation: BarAxis::AlongX,
            opaque: false,
        }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn flux(&self) -> FluxStrength {
        self.flux
    }

    pub fn orientation(&self) -> BarAxis {
        self.orientation
    }

    pub fn is_opaque(&self) -> bool {
        self.opaque
    }

    /// AB phase as a multiple of pi at transverse coordinate `y`:
    /// `-alpha` below the bar, `+alpha` above, linear across it (the
    /// enclosed flux of a uniformly magnetised bar grows linearly).
    fn phase_over_pi(&self, y: f64) -> f64 {
        let a = self.flux.alpha();
        if self.width == 0.0 {
            if y > 0.0 {
                a
            } else if y < 0.0 {
                -a
            } else {
                0.0
            }
        } else {
            a * (2.0 * y / self.width).clamp(-1.0, 1.0)
        }
    }

    fn covers(&self, y: f64) -> bool {
        self.opaque && self.width > 0.0 && y.abs() <= 0.5 * self.width
    }
}

/// Unimodular phase factor `exp(i phi(y))` of a flux bar on a 1-D grid of
/// transverse coordinates.
pub fn flux_bar_phase_mask(grid: &Grid1D, bar: &FluxBar) -> Vec<Complex64> {
    (0..grid.len())
        .map(|i| {
            let (s, c) = sin_cos_pi(bar.phase_over_pi(grid.coordinate(i)));
            Complex64::new(c, s)
        })
        .collect()
}

/// Gaussian packet `exp(-y^2 / beta^2)` carrying phase `-alpha pi` for
/// `y < 0` and `+alpha pi` for `y > 0`. A sample exactly at `y = 0` takes
/// the mean of the two phase factors, `cos(alpha pi)`.
pub fn phase_step_state(grid: &Grid1D, alpha: &FluxStrength, beta: f64) -> Result<WaveField> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::param("beta", format!("must be finite and > 0, got {beta}")));
    }
    if !grid.has_interior_zero() {
        return Err(Error::Geometry("the flux line at y = 0 must lie inside the grid".into()));
    }
    let (s, c) = sin_cos_pi(alpha.alpha());
    let values = (0..grid.len())
        .map(|i| {
            let y = grid.coordinate(i);
            let g = (-(y / beta).powi(2)).exp();
            let phase = if y > 0.0 {
                Complex64::new(c, s)
            } else if y < 0.0 {
                Complex64::new(c, -s)
            } else {
                Complex64::new(c, 0.0)
            };
            phase * g
        })
        .collect();
    WaveField::new(*grid, values, NormConvention::Raw, FieldOrigin::StepState)
}

/// Uniformly illuminated disc of `radius` centred on the origin, times the
/// flux-bar phase across the axis transverse to the bar. An opaque bar
/// zeroes the amplitude over its footprint.
pub fn circular_aperture_state(grid: &Grid2D, radius: f64, bar: &FluxBar) -> Result<WaveField2D> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::param("radius", format!("must be finite and > 0, got {radius}")));
    }
    if bar.width() > 2.0 * radius {
        return Err(Error::Geometry(format!(
            "bar width {} exceeds the aperture diameter {}",
            bar.width(),
            2.0 * radius
        )));
    }
    for (name, axis) in [("x", grid.x), ("y", grid.y)] {
        let lo = -axis.origin();
        let hi = axis.coordinate(axis.len() - 1);
        if lo.min(hi) < 1.2 * radius {
            return Err(Error::Geometry(format!(
                "aperture radius {radius} needs a 20% zero-padding margin on the {name} axis \
                 (grid spans [{}, {hi}])",
                axis.origin()
            )));
        }
    }
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let r2 = radius * radius;
    for ix in 0..grid.x.len() {
        let x = grid.x.coordinate(ix);
        for iy in 0..grid.y.len() {
            let y = grid.y.coordinate(iy);
            if x * x + y * y > r2 {
                continue;
            }
            let across = match bar.orientation() {
                BarAxis::AlongX => y,
                BarAxis::AlongY => x,
            };
            if bar.covers(across) {
                continue;
            }
            let (s, c) = sin_cos_pi(bar.phase_over_pi(across));
            values[grid.index(ix, iy)] = Complex64::new(c, s);
        }
    }
    WaveField2D::new(*grid, values, NormConvention::Raw, FieldOrigin::ApertureState)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flux(a: f64) -> FluxStrength {
        FluxStrength::new(a).unwrap()
    }

    #[test]
    fn grid_layouts() {
        let g = Grid1D::centered(16, 16.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.zero_index(), Some(8));
        assert_eq!(g.origin(), -8.0);
        assert!(!g.is_mirror_symmetric());

        let s = Grid1D::symmetric(17, 17.0).unwrap();
        assert!(s.is_mirror_symmetric());
        assert_eq!(s.zero_index(), Some(8));
        for i in 0..17 {
            assert_eq!(s.coordinate(i), -s.coordinate(16 - i));
        }
        assert_eq!(s.mirror_index(3), Some(13));

        let o = Grid1D::with_origin(20, 10.0, -2.5).unwrap();
        assert!((o.origin() + 2.5).abs() < 1e-15);
        assert!((o.extent() - 10.0).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(Grid1D::centered(8, 1.0).is_err());
        assert!(Grid1D::centered(32, 0.0).is_err());
        assert!(Grid1D::centered(32, f64::NAN).is_err());
    }

    #[test]
    fn wavelength_reference_values() {
        // h / sqrt(2 m0 E (1 + E / 2 m0 c^2)), evaluated independently in
        // 40-digit arithmetic.
        let l60k = de_broglie_wavelength(60_000.0).unwrap();
        assert!((l60k / 4.866_060_502_967_859e-12 - 1.0).abs() < 1e-12);
        let l1 = de_broglie_wavelength(1.0).unwrap();
        assert!((l1 / 1.226_425_366_144_653e-9 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wavelength_halves_for_four_times_energy() {
        let r = de_broglie_wavelength(10.0).unwrap() / de_broglie_wavelength(40.0).unwrap();
        assert!((r - 2.0).abs() < 2e-3);
    }

    #[test]
    fn wavelength_rejects_non_positive_energy() {
        assert!(de_broglie_wavelength(0.0).is_err());
        assert!(de_broglie_wavelength(-5.0).is_err());
    }

    #[test]
    fn beam_round_trips_wavelength() {
        let b = BeamParams::new(60_000.0, 50e-9, 0.0).unwrap();
        let again = de_broglie_wavelength(b.kinetic_energy_ev()).unwrap();
        assert!((again / b.lambda_db() - 1.0).abs() < 1e-12);
        let beta = BeamParams::beta_for_w(60_000.0, b.paraxial().w()).unwrap();
        assert!((beta / 50e-9 - 1.0).abs() < 1e-12);
        assert!(BeamParams::new(60_000.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn step_state_phases() {
        let g = Grid1D::symmetric(65, 6.4).unwrap();
        let beta = 1.0;
        let zero = phase_step_state(&g, &flux(0.0), beta).unwrap();
        for (i, v) in zero.values().iter().enumerate() {
            assert_eq!(v.im, 0.0);
            assert_eq!(v.re, zero.values()[64 - i].re);
        }

        let half = phase_step_state(&g, &flux(0.5), beta).unwrap();
        for i in 0..65 {
            let y = g.coordinate(i);
            let env = (-(y * y)).exp();
            let v = half.values()[i];
            assert!((v.norm() - env).abs() < 1e-15 || y == 0.0);
            if y < 0.0 {
                assert!((v - Complex64::new(0.0, -env)).norm() < 1e-15);
            } else if y > 0.0 {
                assert!((v - Complex64::new(0.0, env)).norm() < 1e-15);
            }
        }
        assert_eq!(half.values()[32].norm(), 0.0);
        assert_eq!(half.origin(), FieldOrigin::StepState);
    }

    #[test]
    fn step_state_needs_interior_flux_line() {
        let g = Grid1D::with_origin(32, 3.2, 0.5).unwrap();
        assert!(phase_step_state(&g, &flux(0.25), 1.0).is_err());
    }

    #[test]
    fn bar_mask_profile() {
        let g = Grid1D::symmetric(41, 4.1).unwrap();
        let a = 0.3;
        let bar = FluxBar::new(1.6, flux(a), BarAxis::AlongX, false).unwrap();
        let mask = flux_bar_phase_mask(&g, &bar);
        for (i, m) in mask.iter().enumerate() {
            assert!((m.norm() - 1.0).abs() < 1e-15);
            let y = g.coordinate(i);
            let expect = std::f64::consts::PI * a * (2.0 * y / 1.6).clamp(-1.0, 1.0);
            assert!((m.arg() - expect).abs() < 1e-14);
        }
        // y = 0 and y = d/4
        assert_eq!(mask[20], Complex64::new(1.0, 0.0));
        let quarter = FluxBar::new(4.0 * g.spacing() * 4.0, flux(a), BarAxis::AlongX, false).unwrap();
        let m = flux_bar_phase_mask(&g, &quarter);
        assert!((m[24].arg() - std::f64::consts::PI * a / 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_width_mask_matches_step_phases() {
        let g = Grid1D::centered(64, 6.4).unwrap();
        let f = flux(0.37);
        let mask = flux_bar_phase_mask(&g, &FluxBar::line(f));
        let step = phase_step_state(&g, &f, 1.0).unwrap();
        for (m, s) in mask.iter().zip(step.values()) {
            assert!((m.arg() - s.arg()).abs() < 1e-14);
        }
    }

    #[test]
    fn aperture_geometry_checks() {
        let g = Grid2D::centered(64, 64, 6.4, 6.4).unwrap();
        let f = flux(0.39);
        let wide = FluxBar::new(3.0, f, BarAxis::AlongX, true).unwrap();
        assert!(matches!(circular_aperture_state(&g, 1.0, &wide), Err(Error::Geometry(_))));
        let bar = FluxBar::new(0.3, f, BarAxis::AlongX, true).unwrap();
        assert!(matches!(circular_aperture_state(&g, 3.0, &bar), Err(Error::Geometry(_))));
        let ok = circular_aperture_state(&g, 2.0, &bar).unwrap();
        for ix in 0..64 {
            for iy in 0..64 {
                let x = g.x.coordinate(ix);
                let y = g.y.coordinate(iy);
                let v = ok.at(ix, iy);
                if x * x + y * y > 4.0 || y.abs() <= 0.15 {
                    assert_eq!(v.norm(), 0.0);
                } else {
                    assert!((v.norm() - 1.0).abs() < 1e-15);
                    assert!(v.arg() * y.signum() > 0.0);
                }
            }
        }
    }

    #[test]
    fn normalization_conventions() {
        let g = Grid1D::centered(128, 12.8).unwrap();
        let f = phase_step_state(&g, &flux(0.2), 1.0).unwrap();
        let p = f.normalized(NormConvention::UnitTotalProbability).unwrap();
        assert!((p.total_probability() - 1.0).abs() < 1e-12);
        let u = f.normalized(NormConvention::UnitPeak).unwrap();
        let peak = u.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-15);
        assert!(WaveField::new(g, f.values().to_vec(), NormConvention::UnitTotalProbability, FieldOrigin::Synthetic).is_err());
    }
}
