//! Induction on the golden rotation: renormalization to [0, α) and the
//! T-cut partition with its certificates.

use surface_flows::exact::ExactScalar;
use surface_flows::iet::{Iet, Interval};
use surface_flows::induction::{induce, tcut_partition, towers, DEFAULT_KMAX, DEFAULT_RETURN_CAP};

fn main() {
    let g = Iet::golden_rotation();
    let a = ExactScalar::golden();
    let base = Interval::new(ExactScalar::zero(), a.clone()).expect("base");
    let ind = induce(&g, &base, DEFAULT_RETURN_CAP).expect("induce");
    for c in &ind.cells {
        println!(
            "cell [{}, {}) return time {} translation {}",
            c.interval.left, c.interval.right, c.return_time, c.translation
        );
    }
    let rescaled = ind.rescaled(5).expect("rescale");
    let expected = Iet::rotation(&(&ExactScalar::one() - &a)).expect("rotation");
    println!("rescaled induced map equals rotation by 1 - α: {}", rescaled == expected);

    for (num, den) in [(1, 5), (1, 20)] {
        let eps = ExactScalar::from_ratio(num, den);
        let p = tcut_partition(&g, &eps, DEFAULT_KMAX, DEFAULT_RETURN_CAP).expect("partition");
        println!(
            "eps = {num}/{den}: K = {}, mesh = {} (~{:.6}), all certified = {}",
            p.k,
            p.partition.mesh,
            p.partition.mesh.to_f64(),
            p.all_certified()
        );
    }

    let p = tcut_partition(&g, &ExactScalar::from_ratio(1, 5), DEFAULT_KMAX, DEFAULT_RETURN_CAP).expect("partition");
    let cell = p.partition.cells().next().expect("a cell");
    let ts = towers(&g, &cell, &g.discontinuities(), DEFAULT_RETURN_CAP).expect("towers");
    for t in &ts.towers {
        println!(
            "tower over [{:.6}, {:.6}): height {}, endpoint hits {}",
            t.base.left.to_f64(),
            t.base.right.to_f64(),
            t.height,
            t.endpoint_hits.len()
        );
    }
    println!("\n{}", p.to_toml());
}
