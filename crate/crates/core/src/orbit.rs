//! Fast exact orbit walking.
//!
//! Orbit points of an IET started at `x₀` stay in the additive group spanned
//! by `x₀`, the breakpoints and the translations, so every point can be stored
//! as `(a + b√d)/Q` over one common denominator `Q` with machine integers.
//! Ordering is decided exactly (squares compared in `u128`), and distances to
//! anchors are converted to floats without cancellation. Any overflow drops
//! back to arbitrary precision for the rest of the walk.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::exact::ExactScalar;
use crate::iet::Iet;

/// `a + b√d` over the walker's common denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Qd {
    a: i128,
    b: i128,
}

impl Qd {
    fn checked_add(self, o: Qd) -> Option<Qd> {
        Some(Qd { a: self.a.checked_add(o.a)?, b: self.b.checked_add(o.b)? })
    }
    fn checked_sub(self, o: Qd) -> Option<Qd> {
        Some(Qd { a: self.a.checked_sub(o.a)?, b: self.b.checked_sub(o.b)? })
    }
}

/// Exact sign of `a + b√d`, `None` on overflow.
fn sign(v: Qd, d: u128) -> Option<i32> {
    let sa = v.a.signum() as i32;
    let sb = v.b.signum() as i32;
    if sa == 0 || sb == 0 || sa == sb {
        return Some(if sa != 0 { sa } else { sb });
    }
    let a2 = v.a.unsigned_abs().checked_mul(v.a.unsigned_abs())?;
    let b2d = v.b.unsigned_abs().checked_mul(v.b.unsigned_abs())?.checked_mul(d)?;
    Some(match a2.cmp(&b2d) {
        std::cmp::Ordering::Greater => sa,
        std::cmp::Ordering::Less => sb,
        std::cmp::Ordering::Equal => 0,
    })
}

/// `(a + b√d)/q` as a float, accurate to a few ulps even under cancellation.
fn to_f64(v: Qd, d: u128, sqrt_d: f64, q: f64) -> Option<f64> {
    if v.a.signum() * v.b.signum() >= 0 {
        return Some((v.a as f64 + v.b as f64 * sqrt_d) / q);
    }
    // a + b√d = (a² − b²d)/(a − b√d); the denominator has no cancellation
    let a2 = v.a.unsigned_abs().checked_mul(v.a.unsigned_abs())?;
    let b2d = v.b.unsigned_abs().checked_mul(v.b.unsigned_abs())?.checked_mul(d)?;
    let num = if a2 >= b2d { (a2 - b2d) as f64 } else { -((b2d - a2) as f64) };
    Some(num / (v.a as f64 - v.b as f64 * sqrt_d) / q)
}

struct FastIet {
    d: u128,
    sqrt_d: f64,
    q: BigInt,
    qf: f64,
    breakpoints: Vec<Qd>,
    translations: Vec<Qd>,
}

fn denominators(x: &ExactScalar) -> [BigInt; 2] {
    [x.rational_part().denom().clone(), x.radical_part().denom().clone()]
}

fn scale(x: &ExactScalar, q: &BigInt) -> Option<Qd> {
    let a = x.rational_part() * BigRational::from_integer(q.clone());
    let b = x.radical_part() * BigRational::from_integer(q.clone());
    Some(Qd { a: a.to_integer().to_i128()?, b: b.to_integer().to_i128()? })
}

impl FastIet {
    fn build(t: &Iet, points: &[&ExactScalar]) -> Option<(FastIet, Vec<Qd>)> {
        let mut q = BigInt::one();
        let all = t.breakpoints().iter().chain(t.translations()).chain(points.iter().copied());
        for x in all {
            for den in denominators(x) {
                q = q.lcm(&den);
            }
        }
        // keep headroom so orbit numerators of length ~10⁹ still fit
        if q.bits() > 62 {
            return None;
        }
        let breakpoints = t.breakpoints().iter().map(|b| scale(b, &q)).collect::<Option<Vec<_>>>()?;
        let translations = t.translations().iter().map(|b| scale(b, &q)).collect::<Option<Vec<_>>>()?;
        let scaled = points.iter().map(|p| scale(p, &q)).collect::<Option<Vec<_>>>()?;
        let d = t.radicand() as u128;
        let fast = FastIet { d, sqrt_d: (d as f64).sqrt(), qf: q.to_f64()?, q, breakpoints, translations };
        Some((fast, scaled))
    }

    fn cell_of(&self, x: Qd) -> Option<usize> {
        // least j with x < breakpoint[j], minus one; breakpoints are few
        let (mut lo, mut hi) = (0usize, self.breakpoints.len() - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if sign(x.checked_sub(self.breakpoints[mid])?, self.d)? >= 0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    fn step(&self, x: Qd) -> Option<Qd> {
        x.checked_add(self.translations[self.cell_of(x)?])
    }

    fn value(&self, v: Qd) -> Option<f64> {
        to_f64(v, self.d, self.sqrt_d, self.qf)
    }

    fn to_exact(&self, v: Qd, d: u64) -> ExactScalar {
        let q = BigRational::from_integer(self.q.clone());
        ExactScalar::new(
            BigRational::from_integer(BigInt::from(v.a)) / &q,
            BigRational::from_integer(BigInt::from(v.b)) / &q,
            d,
        )
    }
}

/// One orbit point handed to a visitor: `T^i x₀` as a float and its signed
/// distances `T^i x₀ − y_j` to the anchors, each accurate to a few ulps.
pub struct OrbitPoint<'a> {
    pub index: usize,
    pub x: f64,
    pub deltas: &'a [f64],
}

/// Visits `T^i x₀` for `0 ≤ i < n`; the visitor returns `false` to stop.
/// Anchors must lie in the same field as the map.
pub fn walk<F>(t: &Iet, x0: &ExactScalar, n: usize, anchors: &[ExactScalar], mut visit: F)
where
    F: FnMut(OrbitPoint<'_>) -> bool,
{
    let mut deltas = vec![0.0; anchors.len()];
    let mut refs: Vec<&ExactScalar> = vec![x0];
    refs.extend(anchors.iter());
    let mut start = 0usize;
    let mut resume = x0.clone();

    if let Some((fast, scaled)) = FastIet::build(t, &refs) {
        let mut x = scaled[0];
        let ys = &scaled[1..];
        let mut i = 0usize;
        'fast: while i < n {
            let Some(xf) = fast.value(x) else { break 'fast };
            for (k, y) in ys.iter().enumerate() {
                match x.checked_sub(*y).and_then(|v| fast.value(v)) {
                    Some(v) => deltas[k] = v,
                    None => break 'fast,
                }
            }
            if !visit(OrbitPoint { index: i, x: xf, deltas: &deltas }) {
                return;
            }
            i += 1;
            if i == n {
                return;
            }
            match fast.step(x) {
                Some(next) => x = next,
                None => break 'fast,
            }
        }
        start = i;
        resume = fast.to_exact(x, t.radicand());
    }

    let mut x = resume;
    for i in start..n {
        for (k, y) in anchors.iter().enumerate() {
            deltas[k] = (&x - y).to_f64();
        }
        if !visit(OrbitPoint { index: i, x: x.to_f64(), deltas: &deltas }) {
            return;
        }
        if i + 1 < n {
            x = t.apply_unchecked(&x);
        }
    }
}

/// Exact orbit point `T^n x₀` computed through the fast path when possible.
pub fn iterate(t: &Iet, x0: &ExactScalar, n: usize) -> ExactScalar {
    if let Some((fast, scaled)) = FastIet::build(t, &[x0]) {
        let mut x = scaled[0];
        let mut done = 0;
        while done < n {
            match fast.step(x) {
                Some(next) => {
                    x = next;
                    done += 1;
                }
                None => break,
            }
        }
        let mut exact = fast.to_exact(x, t.radicand());
        for _ in done..n {
            exact = t.apply_unchecked(&exact);
        }
        return exact;
    }
    let mut x = x0.clone();
    for _ in 0..n {
        x = t.apply_unchecked(&x);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_walk_matches_exact_orbit() {
        let g = Iet::golden_rotation();
        let x0 = ExactScalar::from_ratio(123_457, 1 << 20);
        let anchors = g.discontinuities();
        let mut exact = vec![x0.clone()];
        exact.extend(g.orbit(&x0, 1999).unwrap());
        let mut seen = 0;
        walk(&g, &x0, 2000, &anchors, |p| {
            let e = &exact[p.index];
            assert!((p.x - e.to_f64()).abs() < 1e-15);
            let de = (e - &anchors[0]).to_f64();
            assert!((p.deltas[0] - de).abs() <= 1e-15 * de.abs().max(1e-300));
            seen += 1;
            true
        });
        assert_eq!(seen, 2000);
        assert_eq!(iterate(&g, &x0, 1999), exact[1999]);
    }

    #[test]
    fn signs_are_exact_near_cancellation() {
        // 2 + (-1)·√5 ≈ −0.236, 9 − 4√5 ≈ 0.0557, 161 − 72√5 ≈ 0.0031
        assert_eq!(sign(Qd { a: 2, b: -1 }, 5), Some(-1));
        assert_eq!(sign(Qd { a: 9, b: -4 }, 5), Some(1));
        assert_eq!(sign(Qd { a: 0, b: 0 }, 5), Some(0));
        let v = to_f64(Qd { a: 161, b: -72 }, 5, 5f64.sqrt(), 1.0).unwrap();
        assert!((v - 1.0 / (161.0 + 72.0 * 5f64.sqrt())).abs() < 1e-18);
    }

    #[test]
    fn walk_falls_back_when_denominators_are_huge() {
        let g = Iet::golden_rotation();
        let x0 = ExactScalar::new(
            BigRational::new(BigInt::one(), BigInt::from(3u8).pow(60)),
            BigRational::from_integer(BigInt::from(0)),
            5,
        );
        let mut exact = vec![x0.clone()];
        exact.extend(g.orbit(&x0, 49).unwrap());
        walk(&g, &x0, 50, &[], |p| {
            assert_eq!(p.x, exact[p.index].to_f64());
            true
        });
    }
}
