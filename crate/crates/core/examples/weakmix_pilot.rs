//! Pilot run calibrating the Weyl-sum threshold for the asymmetric
//! Kochergin log roof (c_left = 2, c_right = 1) over the golden rotation.
//!
//! `cargo run --release --example weakmix_pilot [N] [samples] [out.toml]`

use std::time::Instant;

use surface_flows::iet::Iet;
use surface_flows::roof::{RoofFunction, TermKind};
use surface_flows::weakmix::{weyl_diagnostic, DiagnosticConfig, WEYL_PILOT_THRESHOLD};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map_or(1_000_000, |a| a.parse().expect("N"));
    let samples: usize = args.get(2).map_or(16, |a| a.parse().expect("samples"));
    let seed = 20_240_601u64;
    let t = Iet::golden_rotation();
    let f = RoofFunction::kochergin(&t, TermKind::Log, 2.0, 1.0, 10.0).expect("roof");
    let mut out = format!(
        "# Weyl-sum pilot: golden rotation, asymmetric log roof (2, 1), offset 10\n\
         # threshold: about 4x the largest W_N observed over all frequencies and samples\n\
         threshold = {WEYL_PILOT_THRESHOLD:e}\nN = {n}\nsamples = {samples}\nseed = {seed}\n\n"
    );
    for s in [0.5, 1.0, 2.0] {
        let start = Instant::now();
        let res = weyl_diagnostic(&t, &f, &DiagnosticConfig::new(s, n, samples, seed)).expect("diagnostic");
        let finals: Vec<f64> = res.iter().map(|r| r.final_value()).collect();
        let max = finals.iter().copied().fold(0.0, f64::max);
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        println!("s = {s}: mean W_N = {mean:.4e}, max W_N = {max:.4e} ({:.1?})", start.elapsed());
        for cp in 0..res[0].values.len() {
            let m = res.iter().map(|r| r.values[cp].1).fold(0.0, f64::max);
            println!("  N' = {:>8}  max W = {m:.4e}", res[0].values[cp].0);
        }
        out.push_str(&format!("[[run]]\ns = {s}\nmean_W_N = {mean:e}\nmax_W_N = {max:e}\n\n"));
    }
    if let Some(path) = args.get(3) {
        std::fs::write(path, out).expect("write manifest");
    }
}
