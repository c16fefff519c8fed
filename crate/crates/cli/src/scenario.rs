//! Runs a scenario through the wavefield, propagator and analysis stages
//! and collects its tabular output and scalar metrics.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::{json, Value};

use abwave_core::analysis::{
    apply_partial_coherence, asymmetry_metric, expectation_deflection, quantum_force_moment,
    quantum_potential, AngleUnit, DiffractionPattern, PatternNormalization, Provenance,
    QuantumPotentialProfile,
};
use abwave_core::analytic::{deflection_formula, FluxStrength, ParaxialBeam};
use abwave_core::propagator::{
    choose_route, fresnel_number_1d, fresnel_number_2d, propagate_direct, propagate_direct_2d,
    propagate_fraunhofer, propagate_fraunhofer_2d, propagate_near, Geometry1D, Geometry2D,
    PropagationOptions, PropagationResult, Route,
};
use abwave_core::wavefield::{
    circular_aperture_state, flux_bar_phase_mask, phase_step_state, BarAxis, BeamParams,
    FieldOrigin, FluxBar, Grid1D, Grid2D, NormConvention, WaveField, WaveField2D,
};

use crate::config::{AngleUnitCfg, Mode, ScenarioConfig};
use crate::error::{CliError, Stage};

/// Columns of numbers with unit-annotated headers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// What to draw from a [`Table`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    pub y: Vec<String>,
    pub x_label: String,
    pub y_label: String,
}

/// The three numbers a sweep tabulates.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub expectation_deflection: Result<f64, String>,
    pub asymmetry_metric: Result<f64, String>,
    pub deflection_formula: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub table: Table,
    pub plot: PlotSpec,
    /// Named patterns in the scenario's angle unit.
    pub patterns: Vec<(String, DiffractionPattern)>,
    pub profile: Option<QuantumPotentialProfile>,
    pub summary: Summary,
    pub metrics: BTreeMap<String, Value>,
    pub derived: BTreeMap<String, Value>,
    pub diagnostics: BTreeMap<String, Value>,
}

impl ScenarioOutput {
    pub fn pattern(&self, name: &str) -> Option<&DiffractionPattern> {
        self.patterns.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }
}

/// JSON number, or `null` when not finite.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn metric(v: &Result<f64, String>) -> Value {
    match v {
        Ok(x) => num(*x),
        Err(_) => Value::Null,
    }
}

fn config_error(field: &str, message: String) -> CliError {
    CliError::Config {
        origin: "config".into(),
        line: None,
        field: field.into(),
        message,
    }
}

struct Setup {
    flux: FluxStrength,
    beam: BeamParams,
    unit: AngleUnit,
    /// Multiplies a far-field detector coordinate to give the pattern angle.
    scale: f64,
    /// Beam whose `w` matches the pattern's angle unit.
    unit_beam: ParaxialBeam,
    opts: PropagationOptions,
}

fn setup(cfg: &ScenarioConfig) -> Result<Setup, CliError> {
    let flux = cfg.flux_strength().map_err(|m| config_error("flux.alpha", m))?;
    let beam = cfg.beam_params().map_err(|m| config_error("beam", m))?;
    let w = beam.paraxial().w();
    let z = cfg.geometry.distance;
    let (unit, scale, unit_beam) = match cfg.grid.angle_unit {
        AngleUnitCfg::Scaled => (AngleUnit::Scaled, w / z, ParaxialBeam::new(1.0).stage("beam")?),
        AngleUnitCfg::Rad => (AngleUnit::Radians, 1.0 / z, beam.paraxial()),
    };
    Ok(Setup {
        flux,
        beam,
        unit,
        scale,
        unit_beam,
        opts: PropagationOptions {
            kernel: cfg.kernel(),
            normalization: cfg.normalization(),
            execution: cfg.execution(),
        },
    })
}

fn derived_common(cfg: &ScenarioConfig, s: &Setup) -> BTreeMap<String, Value> {
    let mut d = BTreeMap::new();
    d.insert("lambda_db_m".into(), num(s.beam.lambda_db()));
    d.insert("wavenumber_per_m".into(), num(s.beam.wavenumber()));
    d.insert("beta_m".into(), num(s.beam.beta()));
    d.insert("w".into(), num(s.beam.paraxial().w()));
    d.insert("gamma".into(), num(s.beam.gamma()));
    d.insert("relativistic_mass_kg".into(), num(s.beam.relativistic_mass()));
    d.insert(
        "rayleigh_range_m".into(),
        num(std::f64::consts::PI * s.beam.beta().powi(2) / s.beam.lambda_db()),
    );
    d.insert("alpha".into(), num(s.flux.alpha()));
    d.insert("phi_weber".into(), num(s.flux.weber()));
    d.insert("angle_unit".into(), json!(s.unit.label()));
    d.insert("kernel_phase_factor".into(), json!(cfg.kernel().name()));
    d.insert("normalization".into(), json!(cfg.normalization().name()));
    d
}

fn symmetric_grid(n: usize, half: f64) -> Result<Grid1D, CliError> {
    Grid1D::symmetric(n, 2.0 * half * n as f64 / (n - 1) as f64).stage("grid")
}

/// Source state on a 1-D grid: the ideal step, or a Gaussian times a
/// finite-bar mask.
pub fn initial_state_1d(cfg: &ScenarioConfig, flux: &FluxStrength, beam: &BeamParams, n: usize) -> Result<WaveField, CliError> {
    let grid = Grid1D::centered(n, cfg.grid.extent).stage("grid")?;
    if cfg.flux.bar_width == 0.0 {
        return phase_step_state(&grid, flux, beam.beta()).stage("wavefield");
    }
    let bar = FluxBar::new(cfg.flux.bar_width, *flux, BarAxis::AlongX, cfg.flux.bar_opaque).stage("flux.bar_width")?;
    let plain = phase_step_state(&grid, &FluxStrength::new(0.0).stage("flux")?, beam.beta()).stage("wavefield")?;
    let mask = flux_bar_phase_mask(&grid, &bar);
    let half = 0.5 * cfg.flux.bar_width;
    let values = plain
        .values()
        .iter()
        .zip(&mask)
        .enumerate()
        .map(|(i, (v, m))| {
            if cfg.flux.bar_opaque && grid.coordinate(i).abs() <= half {
                Complex64::new(0.0, 0.0)
            } else {
                v * m
            }
        })
        .collect();
    WaveField::new(grid, values, NormConvention::Raw, FieldOrigin::StepState).stage("wavefield")
}

fn route_1d(cfg: &ScenarioConfig, src: &WaveField, lambda_eff: f64) -> Result<(Route, f64), CliError> {
    let fresnel = fresnel_number_1d(src, cfg.geometry.distance, lambda_eff).stage("propagator")?;
    Ok((choose_route(cfg.geometry.route.hint(), fresnel), fresnel))
}

fn far_field_1d(cfg: &ScenarioConfig, s: &Setup, n: usize) -> Result<(PropagationResult<WaveField>, DiffractionPattern), CliError> {
    let src = initial_state_1d(cfg, &s.flux, &s.beam, n)?;
    let half = cfg.grid.target_half_angle.unwrap_or(0.0) / s.scale;
    let target = symmetric_grid(cfg.grid.target_n.unwrap_or(0), half)?;
    let geom = Geometry1D::new(cfg.geometry.distance, target, cfg.geometry.route.hint()).stage("geometry")?;
    let lambda = s.beam.lambda_db();
    let (route, _) = route_1d(cfg, &src, s.opts.kernel.effective_wavelength(lambda))?;
    let (r, prov) = match route {
        Route::Direct => (propagate_direct(&src, &geom, lambda, &s.opts).stage("propagator")?, Provenance::DirectSum),
        Route::Fraunhofer => (propagate_fraunhofer(&src, &geom, lambda, &s.opts).stage("propagator")?, Provenance::Fraunhofer),
    };
    let p = DiffractionPattern::from_field(&r.field, s.scale, s.unit, prov).stage("analysis")?;
    Ok((r, p))
}

fn peak_normalized(p: &DiffractionPattern) -> Result<DiffractionPattern, CliError> {
    p.normalized(PatternNormalization::UnitPeak).stage("analysis")
}

/// `max |a - b|` of peak-normalised intensities where `reference >= floor`.
pub fn linf_where(reference: &[f64], other: &[f64], floor: f64) -> f64 {
    reference
        .iter()
        .zip(other)
        .filter(|(r, _)| **r >= floor)
        .map(|(r, o)| (r - o).abs())
        .fold(0.0, f64::max)
}

fn display_rows(cfg: &ScenarioConfig, angles: &[f64]) -> Vec<usize> {
    let h = cfg.outputs.display_half_angle.unwrap_or(f64::INFINITY);
    (0..angles.len()).filter(|&i| angles[i].abs() <= h).collect()
}

/// Angle columns shared by far-field tables: `theta(rad)`, `w_theta(1)` and
/// optionally the detector coordinate.
fn angle_columns(cfg: &ScenarioConfig, s: &Setup, angles: &[f64], rows: &[usize]) -> (Vec<String>, Vec<Vec<f64>>) {
    let w = s.beam.paraxial().w();
    let to_rad = |a: f64| match s.unit {
        AngleUnit::Scaled => a / w,
        _ => a,
    };
    let mut cols = vec!["theta(rad)".to_string(), "w_theta(1)".to_string()];
    if cfg.geometry.camera_length.is_some() {
        cols.push("x_detector(m)".into());
    }
    let data = rows
        .iter()
        .map(|&i| {
            let t = to_rad(angles[i]);
            let mut r = vec![t, t * w];
            if let Some(l) = cfg.geometry.camera_length {
                r.push(t * l);
            }
            r
        })
        .collect();
    (cols, data)
}

fn angle_axis(s: &Setup) -> (String, String) {
    match s.unit {
        AngleUnit::Scaled => ("w_theta(1)".into(), "w theta".into()),
        _ => ("theta(rad)".into(), "theta (rad)".into()),
    }
}

fn summarize(p: &DiffractionPattern, formula: f64) -> Summary {
    Summary {
        expectation_deflection: expectation_deflection(p).map_err(|e| e.to_string()),
        asymmetry_metric: asymmetry_metric(p).map_err(|e| e.to_string()),
        deflection_formula: formula,
    }
}

fn summary_metrics(m: &mut BTreeMap<String, Value>, prefix: &str, s: &Summary) {
    m.insert(format!("{prefix}expectation_deflection"), metric(&s.expectation_deflection));
    m.insert(format!("{prefix}asymmetry_metric"), metric(&s.asymmetry_metric));
    if let Err(e) = &s.expectation_deflection {
        m.insert(format!("{prefix}expectation_deflection_error"), json!(e));
    }
    if let Err(e) = &s.asymmetry_metric {
        m.insert(format!("{prefix}asymmetry_metric_error"), json!(e));
    }
}

fn propagation_diagnostics<F>(d: &mut BTreeMap<String, Value>, r: &PropagationResult<F>) {
    d.insert("route".into(), json!(format!("{:?}", r.route).to_lowercase()));
    d.insert("fresnel_number".into(), num(r.fresnel_number));
    d.insert("aliasing_margin".into(), r.aliasing_margin.map(num).unwrap_or(Value::Null));
    d.insert("captured_probability".into(), num(r.captured_probability));
}

/// Runs a validated scenario.
pub fn run(cfg: &ScenarioConfig) -> Result<ScenarioOutput, CliError> {
    match cfg.mode {
        Mode::Analytic => run_analytic(cfg),
        Mode::PathIntegral1d if cfg.is_near_plane() => run_near_plane(cfg),
        Mode::PathIntegral1d => run_far_1d(cfg),
        Mode::PathIntegral2d => run_2d(cfg),
    }
}

fn run_analytic(cfg: &ScenarioConfig) -> Result<ScenarioOutput, CliError> {
    let s = setup(cfg)?;
    let angles = symmetric_grid(cfg.grid.target_n.unwrap_or(0), cfg.grid.target_half_angle.unwrap_or(0.0))?.coordinates();
    let pattern = DiffractionPattern::analytic(&s.flux, &s.unit_beam, angles, s.unit).stage("analytic")?;
    let formula = deflection_formula(&s.flux, &s.unit_beam);
    let mut patterns = vec![("analytic".to_string(), pattern.clone())];
    let mut shown = pattern.clone();
    if cfg.coherence.source_rms > 0.0 {
        shown = apply_partial_coherence(&pattern, cfg.coherence.source_rms).stage("coherence")?;
        patterns.push(("analytic_pc".into(), shown.clone()));
    }
    let summary = summarize(&shown, formula);
    let mut metrics = BTreeMap::new();
    summary_metrics(&mut metrics, "", &summary);
    metrics.insert("deflection_formula".into(), num(formula));

    let norm = peak_normalized(&pattern)?;
    let rows = display_rows(cfg, pattern.angles());
    let (mut columns, mut data) = angle_columns(cfg, &s, pattern.angles(), &rows);
    columns.push("I_analytic(peak=1)".into());
    for (r, &i) in data.iter_mut().zip(&rows) {
        r.push(norm.intensities()[i]);
    }
    let mut y = vec!["I_analytic(peak=1)".to_string()];
    if cfg.coherence.source_rms > 0.0 {
        let pc = peak_normalized(&shown)?;
        columns.push("I_analytic_pc(peak=1)".into());
        for (r, &i) in data.iter_mut().zip(&rows) {
            r.push(pc.intensities()[i]);
        }
        y.push("I_analytic_pc(peak=1)".into());
    }
    let (x, x_label) = angle_axis(&s);
    Ok(ScenarioOutput {
        table: Table { columns, rows: data },
        plot: PlotSpec {
            title: format!("{}: |c|^2, alpha = {}", cfg.name, s.flux.alpha()),
            x,
            y,
            x_label,
            y_label: "intensity (peak = 1)".into(),
        },
        patterns,
        profile: None,
        summary,
        metrics,
        derived: derived_common(cfg, &s),
        diagnostics: BTreeMap::new(),
    })
}

fn run_far_1d(cfg: &ScenarioConfig) -> Result<ScenarioOutput, CliError> {
    let s = setup(cfg)?;
    let (r, pattern) = far_field_1d(cfg, &s, cfg.grid.n)?;
    let analytic = DiffractionPattern::analytic(&s.flux, &s.unit_beam, pattern.angles().to_vec(), s.unit).stage("analytic")?;
    let formula = deflection_formula(&s.flux, &s.unit_beam);

    let pi_norm = peak_normalized(&pattern)?;
    let an_norm = peak_normalized(&analytic)?;
    let linf = linf_where(an_norm.intensities(), pi_norm.intensities(), 0.01);

    let mut patterns = vec![("pathintegral".to_string(), pattern.clone()), ("analytic".to_string(), analytic.clone())];
    let (mut shown_pi, mut shown_an) = (pattern.clone(), analytic.clone());
    if cfg.coherence.source_rms > 0.0 {
        shown_pi = apply_partial_coherence(&pattern, cfg.coherence.source_rms).stage("coherence")?;
        shown_an = apply_partial_coherence(&analytic, cfg.coherence.source_rms).stage("coherence")?;
        patterns.push(("pathintegral_pc".into(), shown_pi.clone()));
        patterns.push(("analytic_pc".into(), shown_an.clone()));
    }
    let summary = summarize(&shown_pi, formula);
    let analytic_summary = summarize(&shown_an, formula);

    let mut metrics = BTreeMap::new();
    summary_metrics(&mut metrics, "", &summary);
    summary_metrics(&mut metrics, "analytic_", &analytic_summary);
    metrics.insert("deflection_formula".into(), num(formula));
    metrics.insert("linf_vs_analytic_peak_normalized".into(), num(linf));

    let mut diagnostics = BTreeMap::new();
    propagation_diagnostics(&mut diagnostics, &r);
    if cfg.outputs.convergence && cfg.grid.n / 2 >= 16 {
        let (_, coarse) = far_field_1d(cfg, &s, cfg.grid.n / 2)?;
        let c = peak_normalized(&coarse)?;
        diagnostics.insert("convergence_coarse_n".into(), json!(cfg.grid.n / 2));
        diagnostics.insert(
            "convergence_linf_change".into(),
            num(linf_where(pi_norm.intensities(), c.intensities(), 0.01)),
        );
    }

    let rows = display_rows(cfg, pattern.angles());
    let (mut columns, mut data) = angle_columns(cfg, &s, pattern.angles(), &rows);
    columns.push("I_analytic(peak=1)".into());
    columns.push("I_pathintegral(peak=1)".into());
    let mut extra = vec![&an_norm, &pi_norm];
    let pc_an;
    let pc_pi;
    if cfg.coherence.source_rms > 0.0 {
        pc_an = peak_normalized(&shown_an)?;
        pc_pi = peak_normalized(&shown_pi)?;
        columns.push("I_analytic_pc(peak=1)".into());
        columns.push("I_pathintegral_pc(peak=1)".into());
        extra.push(&pc_an);
        extra.push(&pc_pi);
    }
    for (row, &i) in data.iter_mut().zip(&rows) {
        row.extend(extra.iter().map(|p| p.intensities()[i]));
    }
    let (x, x_label) = angle_axis(&s);
    Ok(ScenarioOutput {
        table: Table { columns, rows: data },
        plot: PlotSpec {
            title: format!("{}: path integral vs analytic, alpha = {}", cfg.name, s.flux.alpha()),
            x,
            y: vec!["I_analytic(peak=1)".into(), "I_pathintegral(peak=1)".into()],
            x_label,
            y_label: "intensity (peak = 1)".into(),
        },
        patterns,
        profile: None,
        summary,
        metrics,
        derived: derived_common(cfg, &s),
        diagnostics,
    })
}

struct NearPlane {
    result: PropagationResult<WaveField>,
    profile: QuantumPotentialProfile,
}

fn near_plane(cfg: &ScenarioConfig, s: &Setup, flux: &FluxStrength, n: usize, target_n: usize) -> Result<NearPlane, CliError> {
    let src = initial_state_1d(cfg, flux, &s.beam, n)?;
    let target = symmetric_grid(target_n, cfg.grid.target_half_width.unwrap_or(0.0))?;
    let result = propagate_near(&src, cfg.geometry.fraction, cfg.geometry.distance, target, s.beam.lambda_db(), &s.opts)
        .stage("propagator")?;
    let profile = quantum_potential(&result.field, s.beam.relativistic_mass()).stage("analysis")?;
    Ok(NearPlane { result, profile })
}

fn force_metrics(m: &mut BTreeMap<String, Value>, prefix: &str, np: &NearPlane) {
    match quantum_force_moment(&np.profile, &np.result.field.intensities()) {
        Ok(f) => {
            m.insert(format!("{prefix}quantum_force_moment_unweighted"), num(f.unweighted));
            m.insert(format!("{prefix}quantum_force_moment_weighted"), num(f.weighted));
            m.insert(format!("{prefix}quantum_force_mask_coverage"), num(f.covered));
        }
        Err(e) => {
            m.insert(format!("{prefix}quantum_force_moment_error"), json!(e.to_string()));
        }
    }
}

fn run_near_plane(cfg: &ScenarioConfig) -> Result<ScenarioOutput, CliError> {
    let s = setup(cfg)?;
    let target_n = cfg.grid.target_n.unwrap_or(0);
    let main = near_plane(cfg, &s, &s.flux, cfg.grid.n, target_n)?;
    let reference = near_plane(cfg, &s, &FluxStrength::new(0.0).stage("flux")?, cfg.grid.n, target_n)?;
    let r = main.profile.mirror_asymmetry().stage("analysis")?;
    let r0 = reference.profile.mirror_asymmetry().stage("analysis")?;

    let mut metrics = BTreeMap::new();
    metrics.insert("q_mirror_asymmetry".into(), num(r));
    metrics.insert("q_mirror_asymmetry_unmagnetized".into(), num(r0));
    metrics.insert("q_mirror_asymmetry_ratio".into(), num(if r0 > 0.0 { r / r0 } else { f64::INFINITY }));
    metrics.insert("deflection_formula".into(), num(deflection_formula(&s.flux, &s.unit_beam)));
    force_metrics(&mut metrics, "", &main);
    metrics.insert(
        "masked_samples".into(),
        json!(main.profile.mask().iter().filter(|m| **m).count()),
    );

    let mut diagnostics = BTreeMap::new();
    propagation_diagnostics(&mut diagnostics, &main.result);
    diagnostics.insert("plane_distance_m".into(), num(cfg.geometry.fraction * cfg.geometry.distance));
    if cfg.outputs.convergence && cfg.grid.n / 2 >= 16 && target_n / 2 >= 16 {
        let coarse_t = (target_n - 1) / 2 + 1;
        let coarse = near_plane(cfg, &s, &s.flux, cfg.grid.n / 2, coarse_t)?;
        diagnostics.insert("convergence_coarse_n".into(), json!(cfg.grid.n / 2));
        diagnostics.insert("convergence_coarse_target_n".into(), json!(coarse_t));
        diagnostics.insert(
            "convergence_coarse_q_mirror_asymmetry".into(),
            num(coarse.profile.mirror_asymmetry().stage("analysis")?),
        );
        force_metrics(&mut diagnostics, "convergence_coarse_", &coarse);
    }

    let scale = main.profile.energy_scale(s.beam.beta());
    let rmax = main.profile.r().iter().copied().fold(0.0, f64::max);
    let y = main.profile.y();
    let rows = (0..y.len())
        .map(|i| {
            let q = main.profile.q()[i];
            vec![y[i], main.profile.r()[i] / rmax, q, q / scale]
        })
        .collect();
    let mut derived = derived_common(cfg, &s);
    derived.insert("q_energy_scale_j".into(), num(scale));
    let summary = Summary {
        expectation_deflection: Err("near-plane scenario".into()),
        asymmetry_metric: Err("near-plane scenario".into()),
        deflection_formula: deflection_formula(&s.flux, &s.unit_beam),
    };
    Ok(ScenarioOutput {
        table: Table {
            columns: vec!["y(m)".into(), "R(peak=1)".into(), "Q(J)".into(), "Q(hbar^2/(2 m beta^2))".into()],
            rows,
        },
        plot: PlotSpec {
            title: format!(
                "{}: quantum potential at {} of the distance, alpha = {}",
                cfg.name,
                cfg.geometry.fraction,
                s.flux.alpha()
            ),
            x: "y(m)".into(),
            y: vec!["Q(hbar^2/(2 m beta^2))".into()],
            x_label: "y (m)".into(),
            y_label: "Q / (hbar^2 / 2 m beta^2)".into(),
        },
        patterns: Vec::new(),
        profile: Some(main.profile),
        summary,
        metrics,
        derived,
        diagnostics,
    })
}

/// Far-field target for the 2-D scenario: every native FFT sample of a
/// `pad`-times padded transform.
fn target_2d(cfg: &ScenarioConfig, lambda_eff: f64, n: usize) -> Result<Grid2D, CliError> {
    let m = cfg.grid.pad * n;
    let dtheta = lambda_eff / (cfg.grid.pad as f64 * cfg.grid.extent);
    let g = Grid1D::symmetric(m - 1, (m - 1) as f64 * dtheta * cfg.geometry.distance).stage("grid")?;
    Ok(Grid2D::new(g, g))
}

fn aperture_state(cfg: &ScenarioConfig, flux: &FluxStrength, n: usize) -> Result<WaveField2D, CliError> {
    let grid = Grid2D::centered(n, n, cfg.grid.extent, cfg.grid.extent).stage("grid")?;
    let bar = FluxBar::new(cfg.flux.bar_width, *flux, cfg.bar_axis(), cfg.flux.bar_opaque).stage("flux.bar_width")?;
    let radius = cfg.aperture.as_ref().map(|a| a.radius).unwrap_or(0.0);
    circular_aperture_state(&grid, radius, &bar).stage("aperture")
}

fn far_field_2d(
    cfg: &ScenarioConfig,
    s: &Setup,
    flux: &FluxStrength,
    n: usize,
) -> Result<(PropagationResult<WaveField2D>, DiffractionPattern), CliError> {
    let src = aperture_state(cfg, flux, n)?;
    let lambda = s.beam.lambda_db();
    let lambda_eff = s.opts.kernel.effective_wavelength(lambda);
    let target = target_2d(cfg, lambda_eff, n)?;
    let geom = Geometry2D::new(cfg.geometry.distance, target, cfg.geometry.route.hint()).stage("geometry")?;
    let fresnel = fresnel_number_2d(&src, cfg.geometry.distance, lambda_eff).stage("propagator")?;
    let (r, prov) = match choose_route(cfg.geometry.route.hint(), fresnel) {
        Route::Direct => (propagate_direct_2d(&src, &geom, lambda, &s.opts).stage("propagator")?, Provenance::DirectSum),
        Route::Fraunhofer => (
            propagate_fraunhofer_2d(&src, &geom, lambda, &s.opts).stage("propagator")?,
            Provenance::Fraunhofer,
        ),
    };
    let p = match cfg.bar_axis() {
        BarAxis::AlongX => DiffractionPattern::projected_y(&r.field, s.scale, s.unit, prov),
        BarAxis::AlongY => DiffractionPattern::projected_x(&r.field, s.scale, s.unit, prov),
    }
    .stage("analysis")?;
    Ok((r, p))
}

fn run_2d(cfg: &ScenarioConfig) -> Result<ScenarioOutput, CliError> {
    let s = setup(cfg)?;
    let zero = FluxStrength::new(0.0).stage("flux")?;
    let (r, mag) = far_field_2d(cfg, &s, &s.flux, cfg.grid.n)?;
    let (_, demag) = far_field_2d(cfg, &s, &zero, cfg.grid.n)?;
    let formula = deflection_formula(&s.flux, &s.unit_beam);
    let rms = cfg.coherence.source_rms;
    let mag_pc = apply_partial_coherence(&mag, rms).stage("coherence")?;
    let demag_pc = apply_partial_coherence(&demag, rms).stage("coherence")?;

    let summary = summarize(&mag_pc, formula);
    let coherent = summarize(&mag, formula);
    let demag_summary = summarize(&demag, deflection_formula(&zero, &s.unit_beam));
    let demag_pc_summary = summarize(&demag_pc, deflection_formula(&zero, &s.unit_beam));

    let mut metrics = BTreeMap::new();
    summary_metrics(&mut metrics, "", &summary);
    summary_metrics(&mut metrics, "coherent_", &coherent);
    summary_metrics(&mut metrics, "demagnetized_coherent_", &demag_summary);
    summary_metrics(&mut metrics, "demagnetized_", &demag_pc_summary);
    metrics.insert("deflection_formula".into(), num(formula));
    if let (Ok(a), Ok(b)) = (&coherent.asymmetry_metric, &demag_summary.asymmetry_metric) {
        metrics.insert(
            "asymmetry_ratio_magnetized_over_demagnetized".into(),
            num(if *b != 0.0 { a.abs() / b.abs() } else { f64::INFINITY }),
        );
    }
    for (name, p) in [("coherent", &mag), ("partially_coherent", &mag_pc)] {
        if let Some((at, depth)) = p.central_dip() {
            metrics.insert(format!("central_dip_{name}"), num(depth));
            metrics.insert(format!("central_dip_{name}_angle"), num(at));
        }
    }

    let mut diagnostics = BTreeMap::new();
    propagation_diagnostics(&mut diagnostics, &r);
    diagnostics.insert("camera_mtf".into(), json!("not modelled; absorbed into coherence.source_rms"));
    if cfg.outputs.convergence && cfg.grid.n / 2 >= 16 {
        let (_, coarse) = far_field_2d(cfg, &s, &s.flux, cfg.grid.n / 2)?;
        let fine = peak_normalized(&mag)?;
        let coarse = peak_normalized(&coarse)?;
        // Coarse run has the same angular spacing over half the range.
        let offset = (fine.len() - coarse.len()) / 2;
        let change = linf_where(&fine.intensities()[offset..offset + coarse.len()], coarse.intensities(), 0.01);
        diagnostics.insert("convergence_coarse_n".into(), json!(cfg.grid.n / 2));
        diagnostics.insert("convergence_linf_change".into(), num(change));
    }

    let rows = display_rows(cfg, mag.angles());
    let (mut columns, mut data) = angle_columns(cfg, &s, mag.angles(), &rows);
    let normed = [
        peak_normalized(&mag)?,
        peak_normalized(&demag)?,
        peak_normalized(&mag_pc)?,
        peak_normalized(&demag_pc)?,
    ];
    for c in ["I_magnetized(peak=1)", "I_demagnetized(peak=1)", "I_magnetized_pc(peak=1)", "I_demagnetized_pc(peak=1)"] {
        columns.push(c.into());
    }
    for (row, &i) in data.iter_mut().zip(&rows) {
        row.extend(normed.iter().map(|p| p.intensities()[i]));
    }
    let (x, x_label) = angle_axis(&s);
    let y = if rms > 0.0 {
        vec!["I_magnetized_pc(peak=1)".into(), "I_demagnetized_pc(peak=1)".into()]
    } else {
        vec!["I_magnetized(peak=1)".into(), "I_demagnetized(peak=1)".into()]
    };
    Ok(ScenarioOutput {
        table: Table { columns, rows: data },
        plot: PlotSpec {
            title: format!("{}: aperture with flux bar, alpha = {} and 0", cfg.name, s.flux.alpha()),
            x,
            y,
            x_label,
            y_label: "projected intensity (peak = 1)".into(),
        },
        patterns: vec![
            ("magnetized".into(), mag),
            ("demagnetized".into(), demag),
            ("magnetized_pc".into(), mag_pc),
            ("demagnetized_pc".into(), demag_pc),
        ],
        profile: None,
        summary,
        metrics,
        derived: derived_common(cfg, &s),
        diagnostics,
    })
}

/// Derived quantities and precondition checks, without running the
/// propagation. Each entry is `(name, value or problem)`.
pub fn dry_run(cfg: &ScenarioConfig) -> Result<(BTreeMap<String, Value>, Vec<CliError>), CliError> {
    let s = setup(cfg)?;
    let mut d = derived_common(cfg, &s);
    let mut problems = Vec::new();
    let lambda = s.beam.lambda_db();
    let lambda_eff = s.opts.kernel.effective_wavelength(lambda);
    let k = s.opts.kernel.wavenumber(lambda);
    let z = cfg.geometry.distance * cfg.geometry.fraction;
    match cfg.mode {
        Mode::Analytic => {
            d.insert("route".into(), json!("analytic"));
        }
        Mode::PathIntegral1d => {
            let src = initial_state_1d(cfg, &s.flux, &s.beam, cfg.grid.n)?;
            let fresnel = fresnel_number_1d(&src, z, lambda_eff).stage("propagator")?;
            d.insert("fresnel_number".into(), num(fresnel));
            let (target, route) = if cfg.is_near_plane() {
                (symmetric_grid(cfg.grid.target_n.unwrap_or(0), cfg.grid.target_half_width.unwrap_or(0.0))?, Route::Direct)
            } else {
                let half = cfg.grid.target_half_angle.unwrap_or(0.0) / s.scale;
                (symmetric_grid(cfg.grid.target_n.unwrap_or(0), half)?, choose_route(cfg.geometry.route.hint(), fresnel))
            };
            d.insert("route".into(), json!(format!("{route:?}").to_lowercase()));
            let geom = Geometry1D::new(z, target, cfg.geometry.route.hint()).stage("geometry")?;
            let margin = abwave_core::propagator::aliasing_margin_1d(&src, &geom, k).stage("propagator")?;
            d.insert("aliasing_margin".into(), num(margin));
            if route == Route::Direct && margin < 1.0 {
                let (slo, shi) = (src.grid().origin(), src.grid().coordinate(src.grid().len() - 1));
                problems.push(CliError::Numerical {
                    stage: "propagator".into(),
                    source: abwave_core::Error::Aliasing {
                        phase_step: std::f64::consts::PI / margin,
                        spacing: src.grid().spacing(),
                        max_sin: std::f64::consts::PI / (margin * k * src.grid().spacing()),
                        extent: shi - slo,
                    },
                });
            }
            if route == Route::Fraunhofer && fresnel >= abwave_core::propagator::FRAUNHOFER_LIMIT {
                problems.push(CliError::Numerical {
                    stage: "propagator".into(),
                    source: abwave_core::Error::Regime {
                        fresnel_number: fresnel,
                        limit: abwave_core::propagator::FRAUNHOFER_LIMIT,
                    },
                });
            }
        }
        Mode::PathIntegral2d => {
            let src = aperture_state(cfg, &s.flux, cfg.grid.n)?;
            let fresnel = fresnel_number_2d(&src, z, lambda_eff).stage("propagator")?;
            let route = choose_route(cfg.geometry.route.hint(), fresnel);
            d.insert("fresnel_number".into(), num(fresnel));
            d.insert("route".into(), json!(format!("{route:?}").to_lowercase()));
            d.insert("fft_length".into(), json!((cfg.grid.pad * cfg.grid.n).next_power_of_two()));
            d.insert(
                "angular_spacing_rad".into(),
                num(lambda_eff / (cfg.grid.pad as f64 * cfg.grid.extent)),
            );
            if route == Route::Fraunhofer && fresnel >= abwave_core::propagator::FRAUNHOFER_LIMIT {
                problems.push(CliError::Numerical {
                    stage: "propagator".into(),
                    source: abwave_core::Error::Regime {
                        fresnel_number: fresnel,
                        limit: abwave_core::propagator::FRAUNHOFER_LIMIT,
                    },
                });
            }
        }
    }
    Ok((d, problems))
}
