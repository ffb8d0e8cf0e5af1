//! Log-Puiseux series: evaluation, differentiation, the sector integrals
//! B_{k,l} against their quadrature oracle, and least-squares fitting.

use surface_flows::log_puiseux::{
    bkl_closed_form, bkl_quadrature_oracle, bkl_table, lp_derivative, lp_eval, lp_fit, LogPuiseuxSeries,
};

fn main() {
    // 2 - ln h + 3 h^{1/2} ln h
    let p = LogPuiseuxSeries::new(2, 0, vec![(2.0, -1.0), (0.0, 3.0)]).expect("series");
    let dp = lp_derivative(&p);
    for h in [1e-3, 1e-2, 1e-1] {
        let fd = (lp_eval(&p, h * (1.0 + 1e-6)).unwrap() - lp_eval(&p, h * (1.0 - 1e-6)).unwrap()) / (2e-6 * h);
        println!(
            "h = {h:e}: P = {:.10}, P' = {:.10}, central difference = {:.10}",
            lp_eval(&p, h).unwrap(),
            lp_eval(&dp, h).unwrap(),
            fd
        );
    }

    for (k, l, n, m) in [(0, 0, 1, 1), (1, 0, 2, 1), (0, 2, 1, 3), (2, 1, 3, 2)] {
        let h = 1e-2;
        let c = bkl_closed_form(k, l, n, m, h).unwrap();
        let o = bkl_quadrature_oracle(k, l, n, m, h, 1e-12).unwrap();
        println!("B_{{{k},{l}}} (n = {n}, m = {m}, h = {h}): closed {c:.15e}, oracle {o:.15e}");
    }
    let rows = bkl_table(3, 3, &[1e-3, 1e-2, 1e-1], 1e-12).unwrap();
    let worst = rows.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    println!("full grid: {} rows, worst relative error {worst:e}", rows.len());

    let samples: Vec<(f64, f64)> = (0..40)
        .map(|i| {
            let h = 1e-4 * 10f64.powf(i as f64 / 13.0);
            (h, lp_eval(&p, h).unwrap())
        })
        .collect();
    let fit = lp_fit(&samples, 2, 0, 3).expect("fit");
    println!(
        "fit: {:?}, residual {:e}, condition {:e}",
        fit.series.snapped(1e-8).coefficients,
        fit.max_relative_residual,
        fit.condition
    );
}
