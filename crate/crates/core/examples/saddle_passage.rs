//! Saddle neighbourhoods: separatrix sectors, sector areas and passing
//! times, with the identity τ(h) = dA/dh checked numerically.

use surface_flows::ode::Tolerances;
use surface_flows::saddle::{sector_at, sectors, verify_da_dh, SaddleModel, Shape, DEGENERATE_TAU_CONSTANT};

fn main() {
    let tol = Tolerances::default();
    let hs = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
    let cases = [
        ("xy, square", SaddleModel::xy(1.0, Shape::Square).unwrap(), 0.7),
        ("monkey, disk", SaddleModel::monkey(1.0, Shape::Disk).unwrap(), 0.0),
        ("y^2 - x^4, disk 1/2", SaddleModel::degenerate(0.5, Shape::Disk).unwrap(), std::f64::consts::FRAC_PI_2),
    ];
    for (name, m, angle) in cases {
        let secs = sectors(&m, 720).expect("sectors");
        let s = sector_at(&secs, angle).expect("sector");
        println!("{name}: {} separatrices, sector {} with sign {}", secs.len(), s.id, s.sign);
        let rep = verify_da_dh(&m, &s, &hs, &tol).expect("dA/dh");
        for r in &rep.rows {
            println!(
                "  h = {:.0e}: A = {:.10}, tau = {:.10}, dA/dh = {:.10}, deviation {:.1e}, drift/h {:.1e}",
                r.h,
                r.area,
                r.tau,
                r.da_dh,
                r.deviation,
                r.drift / r.h
            );
        }
    }
    println!("for y^2 - x^4, tau(h) h^(1/4) tends to {DEGENERATE_TAU_CONSTANT} as rho grows");
}
