//! Globally adaptive Gauss–Kronrod (7, 15) quadrature on finite intervals.

use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("tolerance not reached within {budget} subdivisions (error estimate {estimate:e})")]
    Budget { budget: usize, estimate: f64 },
    #[error("non-finite integrand value at x = {0}")]
    NonFinite(f64),
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// One GK15 panel: `(kronrod estimate, |kronrod − gauss|)`.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite(c));
    }
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = r * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        if !f1.is_finite() {
            return Err(QuadError::NonFinite(c - dx));
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite(c + dx));
        }
        k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((k * r, ((k - g) * r).abs()))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Integrates `f` over `[a, b]` until the summed error estimate is below
/// `max(abs_tol, rel_tol·|I|)`, bisecting the worst panel each time.
/// Returns the value and the final error estimate.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    budget: usize,
) -> Result<(f64, f64), QuadError> {
    integrate_with_breaks(&mut f, &[a, b], abs_tol, rel_tol, budget)
}

/// As [`integrate`], starting from the panels delimited by `breaks`
/// (known kinks of the integrand belong there).
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    f: &mut F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    budget: usize,
) -> Result<(f64, f64), QuadError> {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk15(f, w[0], w[1])?;
            heap.push(Panel { a: w[0], b: w[1], value, error });
        }
    }
    let totals = |h: &BinaryHeap<Panel>| h.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    for _ in 0..budget {
        let (value, error) = totals(&heap);
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok((value, error));
        }
        let Some(worst) = heap.pop() else { return Ok((0.0, 0.0)) };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // panel cannot be split further in floating point
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        let (v1, e1) = gk15(f, worst.a, m)?;
        let (v2, e2) = gk15(f, m, worst.b)?;
        heap.push(Panel { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: worst.b, value: v2, error: e2 });
    }
    let (value, error) = totals(&heap);
    if error <= abs_tol.max(rel_tol * value.abs()) {
        Ok((value, error))
    } else {
        Err(QuadError::Budget { budget, estimate: error })
    }
}
