//! Acceptance suite. One PASS/FAIL line per check; exits non-zero if any
//! check fails.

use std::time::Instant;

use num_complex::Complex64;

use abwave_cli::config::{self, LoadedConfig};
use abwave_cli::output::{self, RunInfo};
use abwave_cli::scenario::{self, ScenarioOutput};
use abwave_cli::{preset, CliError};
use abwave_core::analysis::{
    asymmetry_metric, expectation_deflection, momentum_spectrum, phase_only_test, quantum_force_moment,
    quantum_potential, zeilinger_dispersion_term, AngleUnit, DiffractionPattern,
};
use abwave_core::analytic::{deflection_formula, intensity, FluxStrength, ParaxialBeam};
use abwave_core::propagator::{
    propagate_direct, propagate_direct_2d, propagate_fraunhofer, propagate_fraunhofer_2d, propagate_near, Execution,
    Geometry1D, Geometry2D, Normalization, PropagationOptions, RegimeHint,
};
use abwave_core::wavefield::{
    circular_aperture_state, phase_step_state, BarAxis, BeamParams, FieldOrigin, FluxBar, Grid1D, Grid2D,
    WaveField,
};

struct Report {
    failures: usize,
    total: usize,
}

impl Report {
    fn check(&mut self, id: &str, pass: bool, detail: String) {
        self.total += 1;
        if !pass {
            self.failures += 1;
        }
        println!("{} [{id}] {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn error(&mut self, id: &str, e: impl std::fmt::Display) {
        self.check(id, false, format!("error: {e}"));
    }
}

fn load_preset(name: &str) -> LoadedConfig {
    config::parse(preset(name).expect("preset exists"), name).expect("preset parses")
}

fn with_alpha(base: &LoadedConfig, alpha: f64) -> Result<LoadedConfig, CliError> {
    let mut c = config::with_parameter(base, "flux.alpha", alpha)?.validated()?;
    c.config.outputs.convergence = false;
    Ok(c)
}

fn metric(out: &ScenarioOutput, name: &str) -> f64 {
    out.metrics.get(name).and_then(|v| v.as_f64()).unwrap_or(f64::NAN)
}

fn uniform(half: f64, step: f64) -> Vec<f64> {
    let n = (half / step).round() as i64;
    (-n..=n).map(|i| i as f64 * step).collect()
}

fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn max_abs(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Relative tolerance check with an absolute floor for targets at zero.
fn within(value: f64, target: f64, rel: f64, floor: f64) -> bool {
    (value - target).abs() <= (rel * target.abs()).max(floor)
}

fn oracle_equivalence(r: &mut Report) {
    let base = load_preset("fig2b");
    for alpha in [0.0, 0.25, 0.5, 1.0] {
        let id = format!("1 alpha={alpha}");
        let cfg = match with_alpha(&base, alpha) {
            Ok(c) => c,
            Err(e) => return r.error(&id, e),
        };
        let t = Instant::now();
        match scenario::run(&cfg.config) {
            Ok(out) => {
                let secs = t.elapsed().as_secs_f64();
                let linf = metric(&out, "linf_vs_analytic_peak_normalized");
                r.check(
                    &id,
                    linf <= 0.02 && secs < 10.0,
                    format!("n=8192 L_inf={linf:.3e} (<= 2e-2) runtime={secs:.2}s (< 10s)"),
                );
            }
            Err(e) => r.error(&id, e),
        }
    }
}

fn deflection_sweep(r: &mut Report) {
    let unit = ParaxialBeam::new(1.0).unwrap();
    let angles = uniform(2000.0, 0.01);
    let base = load_preset("fig2b");
    let mut worst_analytic: f64 = 0.0;
    let mut worst_path: f64 = 0.0;
    for i in 1..=19 {
        let alpha = 0.05 * i as f64;
        let flux = FluxStrength::new(alpha).unwrap();
        let f = deflection_formula(&flux, &unit);
        let floor = 1e-8;

        let id = format!("2 analytic alpha={alpha:.2}");
        match DiffractionPattern::analytic(&flux, &unit, angles.clone(), AngleUnit::Scaled)
            .and_then(|p| expectation_deflection(&p))
        {
            Ok(d) => {
                let rel = if f.abs() > floor { (d - f).abs() / f.abs() } else { 0.0 };
                worst_analytic = worst_analytic.max(rel);
                r.check(
                    &id,
                    within(d, f, 0.01, floor),
                    format!("|w theta| <= 2000: <theta>={d:.9} formula={f:.9} residual={:.3e}", d - f),
                );
            }
            Err(e) => r.error(&id, e),
        }

        let id = format!("2 path-integral alpha={alpha:.2}");
        let out = with_alpha(&base, alpha).and_then(|c| scenario::run(&c.config));
        match out {
            Ok(out) => match out.summary.expectation_deflection {
                Ok(d) => {
                    let rel = if f.abs() > floor { (d - f).abs() / f.abs() } else { 0.0 };
                    worst_path = worst_path.max(rel);
                    r.check(
                        &id,
                        within(d, f, 0.03, floor),
                        format!("|w theta| <= 100: <theta>={d:.9} formula={f:.9} residual={:.3e}", d - f),
                    );
                }
                Err(e) => r.error(&id, e),
            },
            Err(e) => r.error(&id, e),
        }
    }
    println!("     worst relative residual: analytic {worst_analytic:.3e}, path integral {worst_path:.3e}");
}

fn symmetry_dichotomy(r: &mut Report) {
    let unit = ParaxialBeam::new(1.0).unwrap();
    let angles = uniform(100.0, 0.01);
    for alpha in [0.0, 0.5, 1.0, 0.25] {
        let id = format!("3 alpha={alpha}");
        let flux = FluxStrength::new(alpha).unwrap();
        match DiffractionPattern::analytic(&flux, &unit, angles.clone(), AngleUnit::Scaled).and_then(|p| asymmetry_metric(&p)) {
            Ok(a) if alpha == 0.25 => r.check(&id, a > 0.05, format!("asymmetry={a:.6} (> 0.05)")),
            Ok(a) => r.check(&id, a.abs() <= 1e-8, format!("asymmetry={a:.3e} (|.| <= 1e-8)")),
            Err(e) => r.error(&id, e),
        }
    }
}

fn periodicity_and_mirror(r: &mut Report) {
    let unit = ParaxialBeam::new(1.0).unwrap();
    let mut worst_period: f64 = 0.0;
    let mut worst_mirror: f64 = 0.0;
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    for i in 0..50 {
        let alpha = -1.7 + 3.4 * i as f64 / 49.0;
        for j in 0..200 {
            let theta = -8.0 + 16.0 * j as f64 / 199.0;
            let i0 = intensity(&FluxStrength::new(alpha).unwrap(), theta, &unit).unwrap();
            let i1 = intensity(&FluxStrength::new(alpha + 1.0).unwrap(), theta, &unit).unwrap();
            let im = intensity(&FluxStrength::new(-alpha).unwrap(), -theta, &unit).unwrap();
            worst_period = worst_period.max(rel(i0, i1));
            worst_mirror = worst_mirror.max(rel(i0, im));
        }
    }
    r.check("4 periodicity", worst_period <= 1e-12, format!("50x200 grid, max relative difference {worst_period:.3e} (<= 1e-12)"));
    r.check("4 mirror", worst_mirror <= 1e-12, format!("50x200 grid, max relative difference {worst_mirror:.3e} (<= 1e-12)"));
}

fn quantum_potential_checks(r: &mut Report) {
    let base = load_preset("fig3");
    let t = Instant::now();
    let out = match scenario::run(&base.config) {
        Ok(o) => o,
        Err(e) => return r.error("5", e),
    };
    let secs = t.elapsed().as_secs_f64();
    let (q, q0) = (metric(&out, "q_mirror_asymmetry"), metric(&out, "q_mirror_asymmetry_unmagnetized"));
    r.check(
        "5 mirror asymmetry",
        q >= 10.0 * q0 && secs < 30.0,
        format!("r(0.25)={q:.4e} r0={q0:.4e} ratio={:.3e} (>= 10) runtime={secs:.2}s (< 30s)", q / q0),
    );

    let beam = base.config.beam_params().unwrap();
    let sign = deflection_formula(&FluxStrength::new(0.25).unwrap(), &beam.paraxial()).signum();
    let opts = PropagationOptions::default();
    let mut signs = Vec::new();
    let mut lines = Vec::new();
    for (n, tn) in [(4096usize, 2001usize), (4096, 4001), (8192, 4001)] {
        let res = (|| {
            let src = scenario::initial_state_1d(&base.config, &FluxStrength::new(0.25).unwrap(), &beam, n).map_err(|e| e.to_string())?;
            let core = || {
                let target = Grid1D::symmetric(tn, 2.0 * 2.5e-6 * tn as f64 / (tn - 1) as f64)?;
                let p = propagate_near(&src, 0.01, 1.0, target, beam.lambda_db(), &opts)?;
                let prof = quantum_potential(&p.field, beam.relativistic_mass())?;
                quantum_force_moment(&prof, &p.field.intensities())
            };
            core().map_err(|e| e.to_string())
        })();
        match res {
            Ok(m) => {
                signs.push(m.unweighted.signum() == sign);
                lines.push(format!(
                    "n={n} targets={tn}: unweighted={:.3e} weighted={:.3e}",
                    m.unweighted, m.weighted
                ));
            }
            Err(e) => {
                signs.push(false);
                lines.push(format!("n={n} targets={tn}: error {e}"));
            }
        }
    }
    r.check(
        "5 force-moment sign",
        signs.iter().all(|s| *s),
        format!("sign(formula)={sign:+}; {}", lines.join("; ")),
    );
}

fn zeilinger_scope(r: &mut Report) {
    let k: Vec<f64> = (0..401).map(|i| -4.0 + 0.02 * i as f64).collect();
    let raw: Vec<f64> = k.iter().map(|x| (-x * x).exp()).collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let wsum: f64 = w.iter().sum();
    let c = 0.731;
    let zero = zeilinger_dispersion_term(&k, &w, &vec![1.234; k.len()]);
    let linear = zeilinger_dispersion_term(&k, &w, &k.iter().map(|x| c * x).collect::<Vec<_>>());
    match (zero, linear) {
        (Ok(z), Ok(l)) => {
            r.check("6 constant delta", z == 0.0, format!("term={z:e} (exactly 0)"));
            r.check(
                "6 linear delta",
                (l - c * wsum).abs() <= 1e-10,
                format!("term={l:.15} expected={:.15} (tol 1e-10)", c * wsum),
            );
        }
        (z, l) => r.error("6 dispersion term", format!("{z:?} {l:?}")),
    }

    let res = (|| {
        let g = Grid1D::centered(4096, 2e-6)?;
        let plain = phase_step_state(&g, &FluxStrength::new(0.0)?, 50e-9)?;
        let stepped = phase_step_state(&g, &FluxStrength::new(0.25)?, 50e-9)?;
        let phased = plain.linear_combination(Complex64::from_polar(1.0, 0.7), &plain, Complex64::new(0.0, 0.0))?;
        let mut shifted = plain.values().to_vec();
        shifted.rotate_right(37);
        let shifted = WaveField::new(g, shifted, plain.norm_convention(), FieldOrigin::Synthetic)?;
        let s0 = momentum_spectrum(&plain)?;
        Ok::<_, abwave_core::Error>((
            phase_only_test(&s0, &momentum_spectrum(&stepped)?)?,
            phase_only_test(&s0, &momentum_spectrum(&phased)?)?,
            phase_only_test(&s0, &momentum_spectrum(&shifted)?)?,
        ))
    })();
    match res {
        Ok((step, phase, shift)) => {
            r.check(
                "6 step state",
                !step.is_phase_only && step.magnitude_deviation > 0.01,
                format!("deviation={:.4e} (> 0.01, not phase-only)", step.magnitude_deviation),
            );
            r.check(
                "6 global phase control",
                phase.is_phase_only && phase.magnitude_deviation < 1e-6,
                format!("deviation={:.3e} (< 1e-6)", phase.magnitude_deviation),
            );
            r.check(
                "6 translation control",
                shift.is_phase_only && shift.magnitude_deviation < 1e-6,
                format!("deviation={:.3e} (< 1e-6)", shift.magnitude_deviation),
            );
        }
        Err(e) => r.error("6 phase-only", e),
    }
}

fn experimental_scenario(r: &mut Report) {
    let base = load_preset("fig5");
    let t = Instant::now();
    let out = match scenario::run(&base.config) {
        Ok(o) => o,
        Err(e) => return r.error("7", e),
    };
    let secs = t.elapsed().as_secs_f64();
    let a = metric(&out, "coherent_asymmetry_metric");
    let a0 = metric(&out, "demagnetized_coherent_asymmetry_metric");
    let apc = metric(&out, "asymmetry_metric");
    let a0pc = metric(&out, "demagnetized_asymmetry_metric");
    r.check(
        "7 magnetized vs demagnetized",
        a.abs() >= 10.0 * a0.abs() && secs < 120.0,
        format!("A={a:.4e} A0={a0:.3e} ratio={:.3e} (>= 10) runtime={secs:.2}s (< 120s)", a.abs() / a0.abs()),
    );
    r.check(
        "7 demagnetized symmetry",
        a0.abs() <= 1e-3 && a0pc.abs() <= 1e-3,
        format!("coherent A0={a0:.3e}, partially coherent A0={a0pc:.3e} (|.| <= 1e-3)"),
    );
    let (d, dpc) = (metric(&out, "central_dip_coherent"), metric(&out, "central_dip_partially_coherent"));
    r.check(
        "7 partial coherence",
        dpc > d && apc.signum() == a.signum(),
        format!("dip {d:.4e} -> {dpc:.4e} (raised), A {a:.4e} -> {apc:.4e} (same sign)"),
    );

    let res = (|| {
        let beam = BeamParams::new(60_000.0, 50e-9, 0.0)?;
        let lam = beam.lambda_db();
        let (ext, z, n) = (12e-6, 1000.0, 256);
        let g = Grid2D::centered(n, n, ext, ext)?;
        let bar = FluxBar::new(600e-9, FluxStrength::new(0.39)?, BarAxis::AlongX, true)?;
        let src = circular_aperture_state(&g, 2.5e-6, &bar)?;
        let dth = lam / (2.0 * ext);
        let patch = Grid1D::symmetric(41, 41.0 * dth * z)?;
        let geom = Geometry2D::new(z, Grid2D::new(patch, patch), RegimeHint::Far)?;
        let opts = PropagationOptions::default();
        let f = propagate_fraunhofer_2d(&src, &geom, lam, &opts)?;
        let geom = Geometry2D::new(z, *f.field.grid(), RegimeHint::Far)?;
        let d = propagate_direct_2d(&src, &geom, lam, &opts)?;
        let fi: Vec<f64> = f.field.values().iter().map(|v| v.norm_sqr()).collect();
        let di: Vec<f64> = d.field.values().iter().map(|v| v.norm_sqr()).collect();
        let fm = fi.iter().copied().fold(0.0, f64::max);
        let dm = di.iter().copied().fold(0.0, f64::max);
        let linf = fi.iter().zip(&di).map(|(a, b)| (a / fm - b / dm).abs()).fold(0.0, f64::max);
        Ok::<_, abwave_core::Error>((linf, f.field.grid().x.len()))
    })();
    match res {
        Ok((linf, m)) => r.check(
            "7 direct cross-check",
            linf <= 1e-3,
            format!("256^2 source, {m}x{m} far-field samples, peak-normalised L_inf={linf:.3e} (<= 1e-3)"),
        ),
        Err(e) => r.error("7 direct cross-check", e),
    }
}

fn hygiene(r: &mut Report) {
    let res = (|| {
        let g = Grid1D::centered(4096, 2e-6)?;
        let psi = phase_step_state(&g, &FluxStrength::new(0.25)?, 50e-9)?;
        let s = momentum_spectrum(&psi)?;
        Ok::<_, abwave_core::Error>((psi.total_probability(), s.total_probability()))
    })();
    match res {
        Ok((p, q)) => r.check(
            "8 Parseval",
            (p - q).abs() <= 1e-10 * p,
            format!("position {p:.15e} momentum {q:.15e} (relative 1e-10)"),
        ),
        Err(e) => r.error("8 Parseval", e),
    }

    let lam = BeamParams::new(60_000.0, 50e-9, 0.0).unwrap().lambda_db();
    let raw = PropagationOptions {
        normalization: Normalization::Raw,
        ..Default::default()
    };
    let res = (|| {
        let g = Grid1D::centered(2048, 2e-6)?;
        let p1 = phase_step_state(&g, &FluxStrength::new(0.25)?, 50e-9)?;
        let p2 = phase_step_state(&g, &FluxStrength::new(0.6)?, 80e-9)?;
        let (a, b) = (Complex64::new(0.8, -0.3), Complex64::new(-0.2, 1.1));
        let mix = p1.linear_combination(a, &p2, b)?;
        let w = 50e-9 * 2.0 * std::f64::consts::PI / lam / std::f64::consts::SQRT_2;
        let t = Grid1D::symmetric(801, 2.0 * 20.0 / w * 801.0 / 800.0)?;
        let geom = Geometry1D::new(1.0, t, RegimeHint::Auto)?;
        let mut worst: f64 = 0.0;
        for direct in [true, false] {
            let prop = |f: &WaveField| {
                if direct {
                    propagate_direct(f, &geom, lam, &raw)
                } else {
                    propagate_fraunhofer(f, &geom, lam, &raw)
                }
            };
            let (r1, r2, rm) = (prop(&p1)?, prop(&p2)?, prop(&mix)?);
            let lin: Vec<Complex64> = r1.field.values().iter().zip(r2.field.values()).map(|(x, y)| a * x + b * y).collect();
            worst = worst.max(max_abs_diff(&lin, rm.field.values()) / max_abs(rm.field.values()));
        }
        Ok::<_, abwave_core::Error>(worst)
    })();
    match res {
        Ok(e) => r.check("8 linearity", e <= 1e-12, format!("direct and FFT routes, max relative deviation {e:.3e} (<= 1e-12)")),
        Err(e) => r.error("8 linearity", e),
    }

    let base = load_preset("fig2b");
    match scenario::run(&base.config) {
        Ok(out) => {
            let c = out.diagnostics.get("convergence_linf_change").and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
            r.check("8 refinement 1-D", c < 5e-3, format!("n 4096 -> 8192: peak-normalised L_inf change {c:.3e} (< 5e-3)"));
        }
        Err(e) => r.error("8 refinement 1-D", e),
    }
    let base5 = load_preset("fig5");
    match scenario::run(&base5.config) {
        Ok(out) => {
            let c = out.diagnostics.get("convergence_linf_change").and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
            r.check("8 refinement 2-D", c < 5e-3, format!("n 512 -> 1024: peak-normalised L_inf change {c:.3e} (< 5e-3)"));
        }
        Err(e) => r.error("8 refinement 2-D", e),
    }

    let res = (|| {
        let g = Grid1D::centered(2048, 2e-6)?;
        let psi = phase_step_state(&g, &FluxStrength::new(0.25)?, 50e-9)?;
        let t = Grid1D::symmetric(1001, 2e-6)?;
        let geom = Geometry1D::new(0.01, t, RegimeHint::Near)?;
        let run = |execution| propagate_direct(&psi, &geom, lam, &PropagationOptions { execution, ..Default::default() });
        let (s, p) = (run(Execution::Serial)?, run(Execution::Parallel)?);
        let d1 = max_abs_diff(s.field.values(), p.field.values()) / max_abs(s.field.values());

        let g2 = Grid2D::centered(64, 64, 12e-6, 12e-6)?;
        let bar = FluxBar::new(600e-9, FluxStrength::new(0.39)?, BarAxis::AlongX, true)?;
        let src = circular_aperture_state(&g2, 2.5e-6, &bar)?;
        let tg = Grid1D::symmetric(21, 21.0 * lam / 24e-6 * 1000.0)?;
        let geom2 = Geometry2D::new(1000.0, Grid2D::new(tg, tg), RegimeHint::Far)?;
        let run2 = |execution| propagate_direct_2d(&src, &geom2, lam, &PropagationOptions { execution, ..Default::default() });
        let (s2, p2) = (run2(Execution::Serial)?, run2(Execution::Parallel)?);
        let d2 = max_abs_diff(s2.field.values(), p2.field.values()) / max_abs(s2.field.values());
        Ok::<_, abwave_core::Error>(d1.max(d2))
    })();
    match res {
        Ok(d) => r.check("8 serial/parallel", d <= 1e-13, format!("1-D and 2-D direct sums, max relative difference {d:.3e} (<= 1e-13)")),
        Err(e) => r.error("8 serial/parallel", e),
    }

    let res = (|| {
        let mut texts = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| CliError::io("tempdir", e))?;
            let cfg = load_preset("fig3");
            let out = scenario::run(&cfg.config)?;
            let info = RunInfo {
                config: &cfg.config,
                config_text: &cfg.text,
                duration_s: 0.0,
            };
            output::write_all(&out, &info, dir.path())?;
            let p = dir.path().join("fig3.csv");
            texts.push(std::fs::read(&p).map_err(|e| CliError::io(&p, e))?);
        }
        Ok::<_, CliError>(texts)
    })();
    match res {
        Ok(t) => r.check(
            "8 deterministic CSV",
            t[0] == t[1],
            format!("two runs, {} and {} bytes, identical={}", t[0].len(), t[1].len(), t[0] == t[1]),
        ),
        Err(e) => r.error("8 deterministic CSV", e),
    }
}

fn main() {
    let mut r = Report { failures: 0, total: 0 };
    let start = Instant::now();
    type Section = (&'static str, fn(&mut Report));
    let sections: [Section; 8] = [
        ("1 path integral vs analytic far field", oracle_equivalence),
        ("2 first-moment deflection sweep", deflection_sweep),
        ("3 symmetry dichotomy", symmetry_dichotomy),
        ("4 flux periodicity and mirror", periodicity_and_mirror),
        ("5 quantum potential near the flux line", quantum_potential_checks),
        ("6 dispersion term and phase-only test", zeilinger_scope),
        ("7 aperture with opaque flux bar", experimental_scenario),
        ("8 numerical hygiene", hygiene),
    ];
    for (title, f) in sections {
        println!("== {title}");
        let t = Instant::now();
        f(&mut r);
        println!("   ({:.1}s)", t.elapsed().as_secs_f64());
    }
    println!(
        "acceptance: {} of {} checks passed, {} failed ({:.1}s)",
        r.total - r.failures,
        r.total,
        r.failures,
        start.elapsed().as_secs_f64()
    );
    if r.failures > 0 {
        std::process::exit(1);
    }
}
