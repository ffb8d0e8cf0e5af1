//! Singular roofs over the golden rotation: evaluation with derivatives,
//! Birkhoff sums along exact orbits and the logarithmic-growth audit.

use surface_flows::exact::ExactScalar;
use surface_flows::iet::Iet;
use surface_flows::roof::{birkhoff_sum, check_log_growth, conformance_check, RoofFunction, TermKind};

fn main() {
    let g = Iet::golden_rotation();
    let f = RoofFunction::canonical_log(&g).expect("roof");
    let k = RoofFunction::kochergin(&g, TermKind::Log, 2.0, 1.0, 10.0).expect("roof");
    for x in [0.1, 0.38, 0.382, 0.9] {
        println!("f({x}) = {:?}", f.eval_with_derivatives(x, 2).expect("eval"));
    }
    let x0 = ExactScalar::from_ratio(1, 3);
    for n in [10usize, 1000, 100_000] {
        let s = birkhoff_sum(&g, &k, &x0, n, 2).expect("birkhoff");
        println!("S_{n} f(1/3) = {:.6}, S_{n} f' = {:.6}, S_{n} f'' = {:.6}", s[0], s[1], s[2]);
    }
    let cert = conformance_check(&g, &f, 1.0, 0.0, 10_000).expect("audit");
    println!(
        "canonical log roof: covered = {}, passes = {}, worst margin = {:e}",
        cert.discontinuities_covered,
        cert.passes(),
        cert.growth.worst_margin
    );
    let c = check_log_growth(&RoofFunction::constant(3.0).expect("roof"), 1.0, 0.0, 100).expect("audit");
    println!("constant roof: passes = {}, reason = {:?}", c.passes(), c.structural_failure);
    println!("\n{}", k.to_spec().to_toml());
}
