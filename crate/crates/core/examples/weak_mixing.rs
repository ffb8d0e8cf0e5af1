//! Weak-mixing diagnostics: Weyl sums for constant and singular roofs, a
//! frequency sweep and the Birkhoff stretch certificate.

use surface_flows::exact::ExactScalar;
use surface_flows::iet::Iet;
use surface_flows::induction::{tcut_partition, DEFAULT_KMAX, DEFAULT_RETURN_CAP};
use surface_flows::roof::RoofFunction;
use surface_flows::weakmix::{eigen_defect, stretch_certificate, weyl_diagnostic, DiagnosticConfig};

fn main() {
    let g = Iet::golden_rotation();
    let constant = RoofFunction::constant(2.0).unwrap();
    let log_roof = RoofFunction::canonical_log(&g).unwrap();
    let cfg = DiagnosticConfig::new(1.0, 1 << 16, 4, 7);

    for row in eigen_defect(&g, &constant, &[0.5, 0.3, 1.0], &cfg).unwrap() {
        println!("constant roof 2, s = {}: max W_N = {:.3e}", row.s, row.max);
    }
    for row in eigen_defect(&g, &log_roof, &[0.5, 1.0, 2.0], &cfg).unwrap() {
        println!("log roof, s = {}: mean W_N = {:.3e}, max W_N = {:.3e}", row.s, row.mean, row.max);
    }
    let samples = weyl_diagnostic(&g, &log_roof, &cfg).unwrap();
    for &(n, w) in &samples[0].values {
        println!("  N = {n:>6}: W_N = {w:.4e}");
    }

    let part = tcut_partition(&g, &ExactScalar::from_ratio(1, 20), DEFAULT_KMAX, DEFAULT_RETURN_CAP).unwrap();
    let rep =
        stretch_certificate(&g, &log_roof, &part.partition, &g.discontinuities(), 1.0, 16, DEFAULT_RETURN_CAP).unwrap();
    println!(
        "stretch certificate: {} towers, passes = {}, global min F''(b - a)^2 = {:?}",
        rep.towers.len(),
        rep.passes(),
        rep.global_min
    );
}
