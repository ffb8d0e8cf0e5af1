//! Exact interval exchanges: the golden rotation, a 3-interval exchange,
//! orbits, inverses and the finite-depth Keane check.

use surface_flows::exact::ExactScalar;
use surface_flows::iet::Iet;

fn main() {
    let g = Iet::golden_rotation();
    let x = ExactScalar::from_ratio(1, 7);
    println!("golden rotation breakpoints: {:?}", g.breakpoints().iter().map(ToString::to_string).collect::<Vec<_>>());
    let orbit = g.orbit(&x, 5).expect("orbit");
    for (i, y) in orbit.iter().enumerate() {
        println!("  T^{} (1/7) = {}  (~{:.12})", i + 1, y, y.to_f64());
    }
    let back = (0..5).fold(orbit[4].clone(), |y, _| g.apply_inverse(&y).expect("inverse"));
    println!("inverse recovers the start point: {}", back == x);
    println!("Keane to depth 10^4: {:?}", g.is_keane_to_depth(10_000).expect("keane"));

    // lengths (α/2, α²/2, 1/2) under the reversal permutation (3 2 1)
    let a = ExactScalar::golden();
    let half = ExactScalar::from_ratio(1, 2);
    let l1 = &a * &half;
    let l2 = &(&a * &a) * &half;
    let l3 = half.clone();
    let b1 = l1.clone();
    let b2 = &l1 + &l2;
    let t = Iet::new(
        vec![ExactScalar::zero(), b1, b2, ExactScalar::one()],
        vec![&l2 + &l3, &l3 - &l1, &ExactScalar::zero() - &(&l1 + &l2)],
    )
    .expect("valid 3-IET");
    let y = t.apply(&x).expect("apply");
    println!("3-IET: T(1/7) = {y}, Keane to depth 10^3: {}", t.is_keane_to_depth(1000).expect("keane").holds());
    let rational = Iet::rotation(&ExactScalar::from_ratio(2, 5)).expect("rotation");
    println!("rotation by 2/5 is periodic: {:?}", rational.detect_periodicity(10).map(|(p, n)| (p.to_string(), n)));
}
