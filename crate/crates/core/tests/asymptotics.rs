//! Log-Puiseux fits of measured passing times.

use surface_flows::log_puiseux::lp_fit;
use surface_flows::ode::Tolerances;
use surface_flows::saddle::{passing_time, sector_at, sectors, SaddleModel, Shape, DEGENERATE_TAU_CONSTANT};

fn tau_samples(m: &SaddleModel, angle: f64, hs: &[f64], tol: &Tolerances) -> Vec<(f64, f64)> {
    let s = sector_at(&sectors(m, 720).unwrap(), angle).unwrap();
    hs.iter().map(|&h| (h, passing_time(m, &s, h, tol).unwrap().tau)).collect()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn xy_passing_time_is_pure_log() {
    for rho in [1.0, 0.5] {
        let m = SaddleModel::xy(rho, Shape::Square).unwrap();
        let hs = log_grid(1e-5, 0.05 * rho * rho, 12);
        let fit = lp_fit(&tau_samples(&m, 0.7, &hs, &Tolerances::default()), 1, 0, 3).unwrap();
        let (a0, b0) = fit.series.coefficient(0);
        assert!((b0 + 1.0).abs() < 1e-4, "b0 = {b0}");
        assert!((a0 - 2.0 * rho.ln()).abs() < 1e-4, "a0 = {a0}");
        for k in 1..3 {
            let (a, b) = fit.series.coefficient(k);
            assert!(a.abs() < 1e-4 && b.abs() < 1e-4, "k = {k}: {a}, {b}");
        }
    }
}

#[test]
fn degenerate_saddle_power_law() {
    let m = SaddleModel::degenerate(0.5, Shape::Disk).unwrap();
    let hs = log_grid(1e-7, 1e-3, 14);
    let tol = Tolerances { rtol: 1e-13, atol: 1e-15, ..Tolerances::default() };
    let fit = lp_fit(&tau_samples(&m, std::f64::consts::FRAC_PI_2, &hs, &tol), 4, -1, 4).unwrap();
    let (a, b) = fit.series.coefficient(-1);
    assert!(((a - DEGENERATE_TAU_CONSTANT) / DEGENERATE_TAU_CONSTANT).abs() < 1e-3, "leading {a}");
    assert!(b.abs() < 1e-3, "log part of leading term {b}");
    assert!(fit.max_relative_residual < 1e-6);
}
