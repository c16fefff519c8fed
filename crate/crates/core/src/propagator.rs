//! Free-space propagation of sampled wavefields.
//!
//! The direct route evaluates the path-integral sum
//!
//! ```text
//! psi_f(x) = N sum_j exp(i k (l_j - z)) psi_i(x_j) dx,   l_j = sqrt(z^2 + |x - x_j|^2)
//! ```
//!
//! for every target sample. The constant phase `exp(i k z)` is left out of
//! every route; it carries no information and cannot be represented
//! accurately at `k z ~ 1e12`. The Fraunhofer route replaces the sum by an
//! FFT when the Fresnel number is small.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::specfn::sin_cos_pi;
use crate::summation::pairwise_sum;
use crate::wavefield::{FieldOrigin, Grid1D, Grid2D, NormConvention, WaveField, WaveField2D};

/// Fresnel number below which the Fraunhofer route is accepted.
pub const FRAUNHOFER_LIMIT: f64 = 0.1;

/// Samples with `|psi|` below this fraction of the peak are ignored when
/// measuring the source support.
const SUPPORT_THRESHOLD: f64 = 1e-10;

const MAX_FFT_LEN: usize = 1 << 24;

/// Phase accumulated per unit path length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelPhase {
    /// `exp(2 pi i l / lambda)`, the free-particle kernel.
    #[default]
    TwoPi,
    /// `exp(pi i l / lambda)`.
    Pi,
}

impl KernelPhase {
    pub fn wavenumber(self, lambda: f64) -> f64 {
        match self {
            KernelPhase::TwoPi => 2.0 * std::f64::consts::PI / lambda,
            KernelPhase::Pi => std::f64::consts::PI / lambda,
        }
    }

    /// Wavelength the kernel actually propagates, `2 pi / k`.
    pub fn effective_wavelength(self, lambda: f64) -> f64 {
        match self {
            KernelPhase::TwoPi => lambda,
            KernelPhase::Pi => 2.0 * lambda,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelPhase::TwoPi => "two_pi",
            KernelPhase::Pi => "pi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegimeHint {
    Near,
    Far,
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Direct,
    Fraunhofer,
}

/// Route for a hint and a measured Fresnel number.
pub fn choose_route(hint: RegimeHint, fresnel_number: f64) -> Route {
    match hint {
        RegimeHint::Near => Route::Direct,
        RegimeHint::Far => Route::Fraunhofer,
        RegimeHint::Auto if fresnel_number < FRAUNHOFER_LIMIT => Route::Fraunhofer,
        RegimeHint::Auto => Route::Direct,
    }
}

/// How the overall factor `N` is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `N = 1`.
    #[default]
    Raw,
    /// Fresnel prefactor `1 / sqrt(i lambda z)` (1-D) or `1 / (i lambda z)`
    /// (2-D), which conserves probability.
    Physical,
    UnitTotalProbability,
    UnitPeak,
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::Raw => "raw",
            Normalization::Physical => "physical",
            Normalization::UnitTotalProbability => "unit_total_probability",
            Normalization::UnitPeak => "unit_peak",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PropagationOptions {
    pub kernel: KernelPhase,
    pub normalization: Normalization,
    pub execution: Execution,
}

/// Target plane at `distance` downstream, sampled on `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationGeometry<G> {
    distance: f64,
    target: G,
    regime_hint: RegimeHint,
}

impl<G: Copy> PropagationGeometry<G> {
    pub fn new(distance: f64, target: G, regime_hint: RegimeHint) -> Result<Self> {
        if !(distance.is_finite() && distance > 0.0) {
            return Err(Error::param(
                "distance",
                format!("must be finite and > 0, got {distance}"),
            ));
        }
        Ok(PropagationGeometry {
            distance,
            target,
            regime_hint,
        })
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn target(&self) -> G {
        self.target
    }

    pub fn regime_hint(&self) -> RegimeHint {
        self.regime_hint
    }
}

pub type Geometry1D = PropagationGeometry<Grid1D>;
pub type Geometry2D = PropagationGeometry<Grid2D>;

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult<F> {
    pub field: F,
    pub normalization_applied: Normalization,
    /// The factor `N` that multiplied the raw sum.
    pub scale: Complex64,
    pub kernel: KernelPhase,
    pub route: Route,
    pub fresnel_number: f64,
    /// `pi` over the largest adjacent-sample phase step (direct route only;
    /// at least 1 whenever a result is returned).
    pub aliasing_margin: Option<f64>,
    /// Probability on the target grid over probability in the source, both
    /// under the physical prefactor.
    pub captured_probability: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::param("lambda_db", format!("must be finite and > 0, got {lambda}")))
    }
}

fn peak(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn support_1d(values: &[Complex64], grid: &Grid1D) -> Result<(f64, f64)> {
    let m = peak(values);
    if m == 0.0 {
        return Err(Error::Degenerate("source field is identically zero".into()));
    }
    let cut = SUPPORT_THRESHOLD * m;
    let lo = values.iter().position(|v| v.norm() > cut).unwrap();
    let hi = values.iter().rposition(|v| v.norm() > cut).unwrap();
    Ok((grid.coordinate(lo), grid.coordinate(hi)))
}

/// `(x range, y range, largest radius)` of the non-negligible samples.
type Support2D = ((f64, f64), (f64, f64), f64);

fn support_2d(field: &WaveField2D) -> Result<Support2D> {
    let values = field.values();
    let grid = field.grid();
    let m = peak(values);
    if m == 0.0 {
        return Err(Error::Degenerate("source field is identically zero".into()));
    }
    let cut = SUPPORT_THRESHOLD * m;
    let (mut xl, mut xh, mut yl, mut yh, mut r) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN, 0.0f64);
    for ix in 0..grid.x.len() {
        let x = grid.x.coordinate(ix);
        for iy in 0..grid.y.len() {
            if values[grid.index(ix, iy)].norm() > cut {
                let y = grid.y.coordinate(iy);
                xl = xl.min(x);
                xh = xh.max(x);
                yl = yl.min(y);
                yh = yh.max(y);
                r = r.max(x.hypot(y));
            }
        }
    }
    Ok(((xl, xh), (yl, yh), r))
}

/// `a^2 / (lambda z)` with `a` the largest distance of the source support
/// from the axis.
pub fn fresnel_number_1d(source: &WaveField, distance: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let (lo, hi) = support_1d(source.values(), source.grid())?;
    let a = lo.abs().max(hi.abs());
    Ok(a * a / (lambda * distance))
}

pub fn fresnel_number_2d(source: &WaveField2D, distance: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let (_, _, a) = support_2d(source)?;
    Ok(a * a / (lambda * distance))
}

/// Largest `sin` of the angle between any support sample in
/// `[slo, shi]` and any target sample in `[tlo, thi]`.
fn max_sin(slo: f64, shi: f64, tlo: f64, thi: f64, z: f64) -> f64 {
    let d = (thi - slo).abs().max((tlo - shi).abs());
    d / z.hypot(d)
}

fn aliasing_check(k: f64, spacing: f64, ms: f64, extent: f64) -> Result<f64> {
    let step = k * spacing * ms;
    if step > std::f64::consts::PI {
        return Err(Error::Aliasing {
            phase_step: step,
            spacing,
            max_sin: ms,
            extent,
        });
    }
    Ok(if step == 0.0 {
        f64::INFINITY
    } else {
        std::f64::consts::PI / step
    })
}

/// Aliasing margin (`>= 1` is safe) of a 1-D direct propagation, without
/// running it.
pub fn aliasing_margin_1d(source: &WaveField, geom: &Geometry1D, k: f64) -> Result<f64> {
    let (slo, shi) = support_1d(source.values(), source.grid())?;
    let t = geom.target();
    let ms = max_sin(slo, shi, t.coordinate(0), t.coordinate(t.len() - 1), geom.distance());
    let step = k * source.grid().spacing() * ms;
    Ok(std::f64::consts::PI / step)
}

/// `l - z` without cancellation.
#[inline]
fn excess_path(d2: f64, z: f64) -> f64 {
    d2 / ((z * z + d2).sqrt() + z)
}

/// Core direct sum. `sources` carries pre-multiplied `psi * cell`; each
/// target reduces its terms with [`pairwise_sum`] in source order.
fn direct_sum<T, D>(targets: &[T], sources: &[(T, Complex64)], z: f64, k: f64, exec: Execution, dist2: D) -> Vec<Complex64>
where
    T: Sync,
    D: Fn(&T, &T) -> f64 + Sync,
{
    let one = |buf: &mut Vec<Complex64>, t: &T| {
        buf.clear();
        buf.extend(sources.iter().map(|(s, v)| {
            let (sn, cs) = (k * excess_path(dist2(t, s), z)).sin_cos();
            v * Complex64::new(cs, sn)
        }));
        pairwise_sum(buf)
    };
    match exec {
        Execution::Serial => {
            let mut buf = Vec::with_capacity(sources.len());
            targets.iter().map(|t| one(&mut buf, t)).collect()
        }
        Execution::Parallel => targets
            .par_iter()
            .map_init(|| Vec::with_capacity(sources.len()), |buf, t| one(buf, t))
            .collect(),
    }
}

struct Scaled {
    values: Vec<Complex64>,
    scale: Complex64,
    convention: NormConvention,
    captured: f64,
}

/// Applies the requested normalisation. `dims` is 1 or 2.
fn apply_normalization(
    mut raw: Vec<Complex64>,
    target_cell: f64,
    source_probability: f64,
    norm: Normalization,
    lambda_eff: f64,
    z: f64,
    dims: i32,
) -> Result<Scaled> {
    let raw_prob: f64 = raw.iter().map(|v| v.norm_sqr()).sum::<f64>() * target_cell;
    let phys_mag2 = (lambda_eff * z).powi(-dims);
    let captured = phys_mag2 * raw_prob / source_probability;
    let (scale, convention) = match norm {
        Normalization::Raw => (Complex64::new(1.0, 0.0), NormConvention::Raw),
        Normalization::Physical => {
            // 1/sqrt(i) = exp(-i pi/4); 1/i = -i
            let (s, c) = sin_cos_pi(-0.25 * dims as f64);
            (Complex64::new(c, s) * phys_mag2.sqrt(), NormConvention::Raw)
        }
        Normalization::UnitTotalProbability => {
            if raw_prob <= 0.0 {
                return Err(Error::Degenerate("propagated field has zero probability".into()));
            }
            (Complex64::new(1.0 / raw_prob.sqrt(), 0.0), NormConvention::UnitTotalProbability)
        }
        Normalization::UnitPeak => {
            let m = peak(&raw);
            if m <= 0.0 {
                return Err(Error::Degenerate("propagated field is identically zero".into()));
            }
            (Complex64::new(1.0 / m, 0.0), NormConvention::UnitPeak)
        }
    };
    if scale != Complex64::new(1.0, 0.0) {
        raw.iter_mut().for_each(|v| *v *= scale);
    }
    if raw.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Evaluation("non-finite value in propagated field".into()));
    }
    Ok(Scaled {
        values: raw,
        scale,
        convention,
        captured,
    })
}

/// Direct path-integral summation onto a 1-D target grid.
///
/// Refuses to run (`Error::Aliasing`) when the kernel phase changes by more
/// than pi between adjacent source samples anywhere on the target.
pub fn propagate_direct(
    source: &WaveField,
    geom: &Geometry1D,
    lambda_db: f64,
    opts: &PropagationOptions,
) -> Result<PropagationResult<WaveField>> {
    check_lambda(lambda_db)?;
    let z = geom.distance();
    let k = opts.kernel.wavenumber(lambda_db);
    let lambda_eff = opts.kernel.effective_wavelength(lambda_db);
    let sg = source.grid();
    let tg = geom.target();

    let (slo, shi) = support_1d(source.values(), sg)?;
    let ms = max_sin(slo, shi, tg.coordinate(0), tg.coordinate(tg.len() - 1), z);
    let margin = aliasing_check(k, sg.spacing(), ms, shi - slo)?;
    let a = slo.abs().max(shi.abs());
    let fresnel = a * a / (lambda_eff * z);

    let dy = sg.spacing();
    let sources: Vec<(f64, Complex64)> = source
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != Complex64::new(0.0, 0.0))
        .map(|(i, v)| (sg.coordinate(i), v * dy))
        .collect();
    let targets = tg.coordinates();
    let raw = direct_sum(&targets, &sources, z, k, opts.execution, |x, y| (x - y) * (x - y));

    let scaled = apply_normalization(
        raw,
        tg.spacing(),
        source.total_probability(),
        opts.normalization,
        lambda_eff,
        z,
        1,
    )?;
    let field = WaveField::new(tg, scaled.values, scaled.convention, FieldOrigin::Propagated { distance: z })?;
    Ok(PropagationResult {
        field,
        normalization_applied: opts.normalization,
        scale: scaled.scale,
        kernel: opts.kernel,
        route: Route::Direct,
        fresnel_number: fresnel,
        aliasing_margin: Some(margin),
        captured_probability: scaled.captured,
    })
}

/// Direct summation to the intermediate plane at `fraction * total_distance`.
pub fn propagate_near(
    source: &WaveField,
    fraction: f64,
    total_distance: f64,
    target: Grid1D,
    lambda_db: f64,
    opts: &PropagationOptions,
) -> Result<PropagationResult<WaveField>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param("fraction", format!("must lie in (0, 1], got {fraction}")));
    }
    let geom = Geometry1D::new(fraction * total_distance, target, RegimeHint::Near)?;
    propagate_direct(source, &geom, lambda_db, opts)
}

/// Direct summation onto a 2-D target grid. Cost is
/// `O(source support * target samples)`; meant for cross-checks.
pub fn propagate_direct_2d(
    source: &WaveField2D,
    geom: &Geometry2D,
    lambda_db: f64,
    opts: &PropagationOptions,
) -> Result<PropagationResult<WaveField2D>> {
    check_lambda(lambda_db)?;
    let z = geom.distance();
    let k = opts.kernel.wavenumber(lambda_db);
    let lambda_eff = opts.kernel.effective_wavelength(lambda_db);
    let sg = source.grid();
    let tg = geom.target();

    let ((xl, xh), (yl, yh), a) = support_2d(source)?;
    let msx = max_sin(xl, xh, tg.x.coordinate(0), tg.x.coordinate(tg.x.len() - 1), z);
    let msy = max_sin(yl, yh, tg.y.coordinate(0), tg.y.coordinate(tg.y.len() - 1), z);
    let mx = aliasing_check(k, sg.x.spacing(), msx, xh - xl)?;
    let my = aliasing_check(k, sg.y.spacing(), msy, yh - yl)?;
    let fresnel = a * a / (lambda_eff * z);

    let cell = sg.cell_area();
    let mut sources = Vec::new();
    for ix in 0..sg.x.len() {
        for iy in 0..sg.y.len() {
            let v = source.values()[sg.index(ix, iy)];
            if v != Complex64::new(0.0, 0.0) {
                sources.push(([sg.x.coordinate(ix), sg.y.coordinate(iy)], v * cell));
            }
        }
    }
    let mut targets = Vec::with_capacity(tg.len());
    for ix in 0..tg.x.len() {
        for iy in 0..tg.y.len() {
            targets.push([tg.x.coordinate(ix), tg.y.coordinate(iy)]);
        }
    }
    let raw = direct_sum(&targets, &sources, z, k, opts.execution, |t, s| {
        let dx = t[0] - s[0];
        let dy = t[1] - s[1];
        dx * dx + dy * dy
    });

    let scaled = apply_normalization(
        raw,
        tg.cell_area(),
        source.total_probability(),
        opts.normalization,
        lambda_eff,
        z,
        2,
    )?;
    let field = WaveField2D::new(tg, scaled.values, scaled.convention, FieldOrigin::Propagated { distance: z })?;
    Ok(PropagationResult {
        field,
        normalization_applied: opts.normalization,
        scale: scaled.scale,
        kernel: opts.kernel,
        route: Route::Direct,
        fresnel_number: fresnel,
        aliasing_margin: Some(mx.min(my)),
        captured_probability: scaled.captured,
    })
}

/// One FFT axis: padded length, native target spacing, kept bin range and
/// the index offset of `y = 0` in the source.
struct FftAxis {
    len: usize,
    spacing: f64,
    m_lo: i64,
    m_hi: i64,
    source_center: f64,
}

impl FftAxis {
    fn plan(source: &Grid1D, target: &Grid1D, lambda_eff: f64, z: f64) -> Result<Self> {
        let need = lambda_eff * z / (source.spacing() * target.spacing());
        if !(need.is_finite() && need <= MAX_FFT_LEN as f64) {
            return Err(Error::param(
                "target_spacing",
                format!("resolving target spacing {:e} needs an FFT longer than {MAX_FFT_LEN}", target.spacing()),
            ));
        }
        let len = source.len().max(need.ceil() as usize).next_power_of_two();
        let spacing = lambda_eff * z / (len as f64 * source.spacing());
        let half = (len / 2) as i64 - 1;
        let lo = target.coordinate(0);
        let hi = target.coordinate(target.len() - 1);
        let slack = 1e-9 * spacing;
        let m_lo = ((lo - slack) / spacing).ceil().max(-(half as f64)) as i64;
        let m_hi = ((hi + slack) / spacing).floor().min(half as f64) as i64;
        if m_hi < m_lo || ((m_hi - m_lo + 1) as usize) < crate::wavefield::MIN_GRID_POINTS {
            return Err(Error::param(
                "target_extent",
                format!("target window [{lo:e}, {hi:e}] holds fewer than 16 native far-field samples"),
            ));
        }
        Ok(FftAxis {
            len,
            spacing,
            m_lo,
            m_hi,
            source_center: source.center(),
        })
    }

    fn count(&self) -> usize {
        (self.m_hi - self.m_lo + 1) as usize
    }

    fn grid(&self) -> Result<Grid1D> {
        Grid1D::from_spacing(self.count(), self.spacing, -self.m_lo as f64)
    }

    fn bin(&self, m: i64) -> usize {
        m.rem_euclid(self.len as i64) as usize
    }

    /// `exp(-2 pi i f x0)` with `x0 = -center * dx` and `f = m / (len dx)`.
    fn origin_phase(&self, m: i64) -> Complex64 {
        let t = 2.0 * m as f64 * self.source_center / self.len as f64;
        let (s, c) = sin_cos_pi(t.rem_euclid(2.0));
        Complex64::new(c, s)
    }
}

fn quadratic_phase(k: f64, x: f64, z: f64) -> Complex64 {
    let (s, c) = (k * x * x / (2.0 * z)).sin_cos();
    Complex64::new(c, s)
}

fn regime_check(fresnel: f64) -> Result<()> {
    if fresnel < FRAUNHOFER_LIMIT {
        Ok(())
    } else {
        Err(Error::Regime {
            fresnel_number: fresnel,
            limit: FRAUNHOFER_LIMIT,
        })
    }
}

/// Far field by FFT:
/// `psi_f(x) = N exp(i k x^2 / 2z) sum_j psi(x_j) exp(-i k x x_j / z) dx`.
///
/// The output lives on the native FFT grid, padded until its spacing is no
/// coarser than the target's and cropped to the target's extent. The
/// unmatched Nyquist bin is dropped, so the native grid is symmetric.
pub fn propagate_fraunhofer(
    source: &WaveField,
    geom: &Geometry1D,
    lambda_db: f64,
    opts: &PropagationOptions,
) -> Result<PropagationResult<WaveField>> {
    check_lambda(lambda_db)?;
    let z = geom.distance();
    let k = opts.kernel.wavenumber(lambda_db);
    let lambda_eff = opts.kernel.effective_wavelength(lambda_db);
    let sg = source.grid();
    let fresnel = fresnel_number_1d(source, z, lambda_eff)?;
    regime_check(fresnel)?;

    let ax = FftAxis::plan(sg, &geom.target(), lambda_eff, z)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); ax.len];
    buf[..sg.len()].copy_from_slice(source.values());
    FftPlanner::new().plan_fft_forward(ax.len).process(&mut buf);

    let dy = sg.spacing();
    let out_grid = ax.grid()?;
    let raw: Vec<Complex64> = (ax.m_lo..=ax.m_hi)
        .map(|m| {
            let x = m as f64 * ax.spacing;
            buf[ax.bin(m)] * ax.origin_phase(m) * quadratic_phase(k, x, z) * dy
        })
        .collect();

    let scaled = apply_normalization(
        raw,
        out_grid.spacing(),
        source.total_probability(),
        opts.normalization,
        lambda_eff,
        z,
        1,
    )?;
    let field = WaveField::new(out_grid, scaled.values, scaled.convention, FieldOrigin::Propagated { distance: z })?;
    Ok(PropagationResult {
        field,
        normalization_applied: opts.normalization,
        scale: scaled.scale,
        kernel: opts.kernel,
        route: Route::Fraunhofer,
        fresnel_number: fresnel,
        aliasing_margin: None,
        captured_probability: scaled.captured,
    })
}

/// 2-D counterpart of [`propagate_fraunhofer`].
pub fn propagate_fraunhofer_2d(
    source: &WaveField2D,
    geom: &Geometry2D,
    lambda_db: f64,
    opts: &PropagationOptions,
) -> Result<PropagationResult<WaveField2D>> {
    check_lambda(lambda_db)?;
    let z = geom.distance();
    let k = opts.kernel.wavenumber(lambda_db);
    let lambda_eff = opts.kernel.effective_wavelength(lambda_db);
    let sg = source.grid();
    let tg = geom.target();
    let fresnel = fresnel_number_2d(source, z, lambda_eff)?;
    regime_check(fresnel)?;

    let ax = FftAxis::plan(&sg.x, &tg.x, lambda_eff, z)?;
    let ay = FftAxis::plan(&sg.y, &tg.y, lambda_eff, z)?;
    let (mx, my) = (ax.len, ay.len);

    let mut planner = FftPlanner::new();
    let fy = planner.plan_fft_forward(my);
    let fx = planner.plan_fft_forward(mx);

    // Rows along y for the source columns that exist, then along x for the
    // kept y bins only.
    let zero = Complex64::new(0.0, 0.0);
    let mut rows = vec![zero; sg.x.len() * my];
    for ix in 0..sg.x.len() {
        let row = &mut rows[ix * my..(ix + 1) * my];
        row[..sg.y.len()].copy_from_slice(&source.values()[ix * sg.y.len()..(ix + 1) * sg.y.len()]);
        fy.process(row);
    }
    let ny_out = ay.count();
    let nx_out = ax.count();
    let mut out = vec![zero; nx_out * ny_out];
    let mut col = vec![zero; mx];
    for (jy, m_y) in (ay.m_lo..=ay.m_hi).enumerate() {
        let by = ay.bin(m_y);
        col.iter_mut().for_each(|c| *c = zero);
        for ix in 0..sg.x.len() {
            col[ix] = rows[ix * my + by];
        }
        fx.process(&mut col);
        let py = ay.origin_phase(m_y) * quadratic_phase(k, m_y as f64 * ay.spacing, z);
        for (jx, m_x) in (ax.m_lo..=ax.m_hi).enumerate() {
            let px = ax.origin_phase(m_x) * quadratic_phase(k, m_x as f64 * ax.spacing, z);
            out[jx * ny_out + jy] = col[ax.bin(m_x)] * px * py * sg.cell_area();
        }
    }

    let out_grid = Grid2D::new(ax.grid()?, ay.grid()?);
    let scaled = apply_normalization(
        out,
        out_grid.cell_area(),
        source.total_probability(),
        opts.normalization,
        lambda_eff,
        z,
        2,
    )?;
    let field = WaveField2D::new(out_grid, scaled.values, scaled.convention, FieldOrigin::Propagated { distance: z })?;
    Ok(PropagationResult {
        field,
        normalization_applied: opts.normalization,
        scale: scaled.scale,
        kernel: opts.kernel,
        route: Route::Fraunhofer,
        fresnel_number: fresnel,
        aliasing_margin: None,
        captured_probability: scaled.captured,
    })
}
