use abwave_core::analytic::FluxStrength;
use abwave_core::propagator::{
    propagate_direct, propagate_fraunhofer, propagate_fraunhofer_2d, Geometry1D, Geometry2D, Normalization,
    PropagationOptions, RegimeHint,
};
use abwave_core::wavefield::{circular_aperture_state, de_broglie_wavelength, phase_step_state, FluxBar, Grid1D, Grid2D};
use abwave_core::Error;

#[test]
fn airy_first_zero_sits_at_1_22_lambda_z_over_d() {
    let lam = de_broglie_wavelength(60_000.0).unwrap();
    let (ext, n, radius, z) = (12e-6, 512, 2.5e-6, 1000.0);
    let g = Grid2D::centered(n, n, ext, ext).unwrap();
    let src = circular_aperture_state(&g, radius, &FluxBar::line(FluxStrength::new(0.0).unwrap())).unwrap();
    let dth = lam / (4.0 * ext);
    let axis = Grid1D::symmetric(201, 201.0 * dth * z).unwrap();
    let geom = Geometry2D::new(z, Grid2D::new(axis, axis), RegimeHint::Far).unwrap();
    let f = propagate_fraunhofer_2d(&src, &geom, lam, &PropagationOptions::default()).unwrap();
    let fg = *f.field.grid();
    let cy = fg.y.zero_index().unwrap();
    let row: Vec<f64> = (0..fg.x.len()).map(|ix| f.field.at(ix, cy).norm_sqr()).collect();
    let c = fg.x.zero_index().unwrap();
    let first_min = (c + 1..row.len() - 1).find(|&i| row[i] < row[i - 1] && row[i] <= row[i + 1]).unwrap();
    // Intensity is quadratic about a zero; fit through the three nearest samples.
    let (a, b, c2) = (row[first_min - 1], row[first_min], row[first_min + 1]);
    let shift = 0.5 * (a - c2) / (a - 2.0 * b + c2);
    let theta = (fg.x.coordinate(first_min) + shift * fg.x.spacing()) / z;
    let want = 1.22 * lam / (2.0 * radius);
    assert!((theta - want).abs() <= 0.02 * want, "first zero {theta:e} vs {want:e}");
}

#[test]
fn direct_and_fft_routes_agree_in_the_far_field() {
    let lam = de_broglie_wavelength(60_000.0).unwrap();
    let g = Grid1D::centered(2048, 2e-6).unwrap();
    let src = phase_step_state(&g, &FluxStrength::new(0.25).unwrap(), 50e-9).unwrap();
    let t = Grid1D::symmetric(401, 0.02).unwrap();
    let geom = Geometry1D::new(100.0, t, RegimeHint::Auto).unwrap();
    let opts = PropagationOptions {
        normalization: Normalization::Physical,
        ..Default::default()
    };
    let f = propagate_fraunhofer(&src, &geom, lam, &opts).unwrap();
    let native = Geometry1D::new(100.0, *f.field.grid(), RegimeHint::Auto).unwrap();
    let d = propagate_direct(&src, &native, lam, &opts).unwrap();
    assert!(f.field.grid().len() > 100);
    let peak = d.field.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let worst = d
        .field
        .values()
        .iter()
        .zip(f.field.values())
        .map(|(a, b)| (a - b).norm() / peak)
        .fold(0.0, f64::max);
    // Residual is the paraxial phase error, k x^4 / 8 z^3 at the window edge.
    assert!(worst < 1e-3, "worst deviation {worst:e}");
    assert!((d.captured_probability - f.captured_probability).abs() < 1e-3);
}

#[test]
fn coarse_source_grid_is_refused() {
    let lam = de_broglie_wavelength(60_000.0).unwrap();
    let g = Grid1D::centered(64, 2e-6).unwrap();
    let src = phase_step_state(&g, &FluxStrength::new(0.25).unwrap(), 50e-9).unwrap();
    let geom = Geometry1D::new(0.01, Grid1D::symmetric(101, 2e-5).unwrap(), RegimeHint::Near).unwrap();
    let r = propagate_direct(&src, &geom, lam, &PropagationOptions::default());
    assert!(matches!(r, Err(Error::Aliasing { .. })));
}

#[test]
fn near_field_is_refused_by_the_fft_route() {
    let lam = de_broglie_wavelength(60_000.0).unwrap();
    let g = Grid1D::centered(1024, 2e-6).unwrap();
    let src = phase_step_state(&g, &FluxStrength::new(0.25).unwrap(), 50e-9).unwrap();
    let geom = Geometry1D::new(1e-4, Grid1D::symmetric(101, 2e-6).unwrap(), RegimeHint::Far).unwrap();
    let r = propagate_fraunhofer(&src, &geom, lam, &PropagationOptions::default());
    assert!(matches!(r, Err(Error::Regime { .. })));
}
