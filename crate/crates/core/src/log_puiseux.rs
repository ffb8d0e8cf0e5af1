//! Truncated log-Puiseux series `Σ_k (a_k + b_k ln h) h^{k/n}` and the
//! monomial sector integrals `B_{k,l}(h) = ∬_{xⁿyᵐ<h, 0<x,y<1} x^k y^l dx dy`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{fmt_f64, CsvTable};
use crate::quad::{self, QuadError};

pub const DEFAULT_MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PuiseuxError {
    #[error("h = {0} is outside (0, 1)")]
    Domain(f64),
    #[error("branching order must be positive")]
    BadOrder,
    #[error("B_kl needs n, m >= 1, got n = {n}, m = {m}")]
    BadExponents { n: u32, m: u32 },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("fit needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("samples span less than one decade of h ({lo:e} .. {hi:e})")]
    NarrowSpan { lo: f64, hi: f64 },
    #[error("design matrix condition number {condition:e} exceeds {limit:e}")]
    IllConditioned { condition: f64, limit: f64 },
    #[error("quadrature oracle: {0}")]
    Quadrature(#[from] QuadError),
}

pub type Result<T> = std::result::Result<T, PuiseuxError>;

/// `Σ_{j} (a_j + b_j ln h) h^{(k0 + j)/n}`, trimmed so the first and last
/// coefficient pairs are nonzero (the zero series has no pairs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPuiseuxSeries {
    pub n: u32,
    pub k0: i64,
    /// `(a_k, b_k)` for `k = k0, k0 + 1, …`.
    pub coefficients: Vec<(f64, f64)>,
    /// Radius of convergence, as recorded by the producer; not enforced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<f64>,
}

impl LogPuiseuxSeries {
    pub fn new(n: u32, k0: i64, coefficients: Vec<(f64, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(PuiseuxError::BadOrder);
        }
        let mut s = LogPuiseuxSeries { n, k0, coefficients, h0: None };
        s.trim();
        Ok(s)
    }

    pub fn zero(n: u32) -> Self {
        LogPuiseuxSeries { n, k0: 0, coefficients: Vec::new(), h0: None }
    }

    fn trim(&mut self) {
        while self.coefficients.last() == Some(&(0.0, 0.0)) {
            self.coefficients.pop();
        }
        let lead = self.coefficients.iter().take_while(|c| **c == (0.0, 0.0)).count();
        self.coefficients.drain(..lead);
        self.k0 = if self.coefficients.is_empty() { 0 } else { self.k0 + lead as i64 };
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `(a_k, b_k)`, zero outside the stored range.
    pub fn coefficient(&self, k: i64) -> (f64, f64) {
        let j = k - self.k0;
        if j < 0 {
            return (0.0, 0.0);
        }
        self.coefficients.get(j as usize).copied().unwrap_or((0.0, 0.0))
    }

    /// Exponents `k/n` carried by the stored pairs.
    pub fn exponents(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.coefficients.len()).map(move |j| (self.k0 + j as i64) as f64 / self.n as f64)
    }

    /// Sets to zero every coefficient below `tol` times the largest one.
    pub fn snapped(&self, tol: f64) -> Self {
        let max = self.coefficients.iter().fold(0.0f64, |m, (a, b)| m.max(a.abs()).max(b.abs()));
        let snap = |v: f64| if v.abs() <= tol * max { 0.0 } else { v };
        let mut s = LogPuiseuxSeries {
            n: self.n,
            k0: self.k0,
            coefficients: self.coefficients.iter().map(|&(a, b)| (snap(a), snap(b))).collect(),
            h0: self.h0,
        };
        s.trim();
        s
    }
}

/// Evaluates the series at `0 < h < 1`, smallest exponent first.
pub fn lp_eval(p: &LogPuiseuxSeries, h: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(PuiseuxError::Domain(h));
    }
    let l = h.ln();
    let mut sum = 0.0;
    for (j, &(a, b)) in p.coefficients.iter().enumerate() {
        let e = (p.k0 + j as i64) as f64 / p.n as f64;
        sum += (a + b * l) * (e * l).exp();
    }
    Ok(sum)
}

/// Term-wise derivative in `h`.
pub fn lp_derivative(p: &LogPuiseuxSeries) -> LogPuiseuxSeries {
    let n = p.n as f64;
    let coefficients = p
        .coefficients
        .iter()
        .enumerate()
        .map(|(j, &(a, b))| {
            let e = (p.k0 + j as i64) as f64 / n;
            (a * e + b, b * e)
        })
        .collect();
    let mut d = LogPuiseuxSeries { n: p.n, k0: p.k0 - p.n as i64, coefficients, h0: p.h0 };
    d.trim();
    d
}

fn check_bkl(n: u32, m: u32, h: f64) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(PuiseuxError::BadExponents { n, m });
    }
    if !(h > 0.0 && h < 1.0) {
        return Err(PuiseuxError::Domain(h));
    }
    Ok(())
}

/// `(p h^q − q h^p)/((p − q)·norm)`, or its limit `h^p (1 + p|ln h|)/norm`
/// when `p = q`. With `p = (k+1)/n`, `q = (l+1)/m`, `norm = (k+1)(l+1)` this
/// is `B_{k,l}(h)`.
pub fn sector_moment(p: f64, q: f64, norm: f64, h: f64, resonant: bool) -> f64 {
    if resonant {
        h.powf(p) * (1.0 - p * h.ln()) / norm
    } else {
        (p * h.powf(q) - q * h.powf(p)) / ((p - q) * norm)
    }
}

/// Closed form of `B_{k,l}(h)`. Generic case:
/// `h^{(l+1)/m}/((k+1)(l+1)) + (h^{(k+1)/n} − h^{(l+1)/m})/((k+1)(l+1 − m(k+1)/n))`;
/// resonant case `(k+1)/n = (l+1)/m`:
/// `h^{(l+1)/m}/((k+1)(l+1)) + h^{(k+1)/n}|ln h|/(m(k+1))`.
pub fn bkl_closed_form(k: u32, l: u32, n: u32, m: u32, h: f64) -> Result<f64> {
    check_bkl(n, m, h)?;
    let (k1, l1) = ((k + 1) as f64, (l + 1) as f64);
    let (nf, mf) = (n as f64, m as f64);
    let hq = h.powf(l1 / mf);
    let hp = h.powf(k1 / nf);
    if (k as u64 + 1) * m as u64 == (l as u64 + 1) * n as u64 {
        Ok(hq / (k1 * l1) + hp * (-h.ln()) / (mf * k1))
    } else {
        Ok(hq / (k1 * l1) + (hp - hq) / (k1 * (l1 - mf * k1 / nf)))
    }
}

/// Independent adaptive quadrature of `B_{k,l}(h)` to relative tolerance
/// `tol`: an outer GK integral in `x` whose integrand integrates `y^l` up to
/// the boundary of `{xⁿyᵐ < h}`, located by bisection.
pub fn bkl_quadrature_oracle(k: u32, l: u32, n: u32, m: u32, h: f64, tol: f64) -> Result<f64> {
    check_bkl(n, m, h)?;
    if !(tol > 0.0) {
        return Err(PuiseuxError::BadTolerance(tol));
    }
    let inside = |x: f64, y: f64| x.powi(n as i32) * y.powi(m as i32) < h;
    let mut inner_err = None;
    let outer = |x: f64| -> f64 {
        let top = if inside(x, 1.0) {
            1.0
        } else {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if inside(x, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        match quad::integrate(|y| y.powi(l as i32), 0.0, top, 0.0, tol * 1e-3, 50) {
            Ok((v, _)) => x.powi(k as i32) * v,
            Err(e) => {
                inner_err = Some(e);
                0.0
            }
        }
    };
    // dyadic starting panels toward x = 0, where thin strips of the region live
    let mut breaks: Vec<f64> = (0..=60).rev().map(|j| (-(j as f64)).exp2()).collect();
    breaks.insert(0, 0.0);
    let mut outer = outer;
    let (v, _) = quad::integrate_with_breaks(&mut outer, &breaks, 0.0, tol * 0.1, 20_000)?;
    if let Some(e) = inner_err {
        return Err(e.into());
    }
    Ok(v)
}

/// One row of the closed-form versus oracle comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct BklRow {
    pub k: u32,
    pub l: u32,
    pub n: u32,
    pub m: u32,
    pub h: f64,
    pub resonant: bool,
    pub closed_form: f64,
    pub oracle: f64,
    pub relative_error: f64,
}

/// Compares closed form and oracle over `k, l ≤ kl_max`, `n, m ≤ nm_max`.
pub fn bkl_table(kl_max: u32, nm_max: u32, hs: &[f64], tol: f64) -> Result<Vec<BklRow>> {
    let mut rows = Vec::new();
    for k in 0..=kl_max {
        for l in 0..=kl_max {
            for n in 1..=nm_max {
                for m in 1..=nm_max {
                    for &h in hs {
                        let closed_form = bkl_closed_form(k, l, n, m, h)?;
                        let oracle = bkl_quadrature_oracle(k, l, n, m, h, tol)?;
                        rows.push(BklRow {
                            k,
                            l,
                            n,
                            m,
                            h,
                            resonant: (k + 1) * m == (l + 1) * n,
                            closed_form,
                            oracle,
                            relative_error: ((closed_form - oracle) / oracle).abs(),
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

pub fn bkl_csv(rows: &[BklRow]) -> CsvTable {
    let mut t = CsvTable::new(["k", "l", "n", "m", "h", "resonant", "closed_form", "oracle", "relative_error"]);
    for r in rows {
        t.push(vec![
            r.k.to_string(),
            r.l.to_string(),
            r.n.to_string(),
            r.m.to_string(),
            fmt_f64(r.h),
            r.resonant.to_string(),
            fmt_f64(r.closed_form),
            fmt_f64(r.oracle),
            fmt_f64(r.relative_error),
        ]);
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub series: LogPuiseuxSeries,
    pub max_relative_residual: f64,
    /// Condition number of the column-scaled design matrix.
    pub condition: f64,
}

/// Least-squares fit over `{h^{k/n}, h^{k/n} ln h : k0 ≤ k < k0 + num_terms}`.
pub fn lp_fit(samples: &[(f64, f64)], n: u32, k0: i64, num_terms: usize) -> Result<FitReport> {
    lp_fit_with_limit(samples, n, k0, num_terms, DEFAULT_MAX_CONDITION)
}

pub fn lp_fit_with_limit(
    samples: &[(f64, f64)],
    n: u32,
    k0: i64,
    num_terms: usize,
    max_condition: f64,
) -> Result<FitReport> {
    if n == 0 {
        return Err(PuiseuxError::BadOrder);
    }
    let cols = 2 * num_terms;
    if samples.len() < cols.max(1) {
        return Err(PuiseuxError::TooFewSamples { needed: cols.max(1), got: samples.len() });
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &(h, _) in samples {
        if !(h > 0.0 && h < 1.0) {
            return Err(PuiseuxError::Domain(h));
        }
        lo = lo.min(h);
        hi = hi.max(h);
    }
    if hi < 10.0 * lo {
        return Err(PuiseuxError::NarrowSpan { lo, hi });
    }

    let mut a = DMatrix::<f64>::zeros(samples.len(), cols);
    for (i, &(h, _)) in samples.iter().enumerate() {
        let l = h.ln();
        for j in 0..num_terms {
            let e = (k0 + j as i64) as f64 / n as f64;
            let p = (e * l).exp();
            a[(i, 2 * j)] = p;
            a[(i, 2 * j + 1)] = p * l;
        }
    }
    let scales: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    for (j, s) in scales.iter().enumerate() {
        if *s > 0.0 {
            a.column_mut(j).scale_mut(1.0 / s);
        }
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= max_condition) {
        return Err(PuiseuxError::IllConditioned { condition, limit: max_condition });
    }
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let x = svd.solve(&y, 0.0).map_err(|_| PuiseuxError::IllConditioned { condition, limit: max_condition })?;
    let coefficients: Vec<(f64, f64)> =
        (0..num_terms).map(|j| (x[2 * j] / scales[2 * j], x[2 * j + 1] / scales[2 * j + 1])).collect();
    let fitted = &a * &x;
    let max_relative_residual = samples
        .iter()
        .enumerate()
        .map(|(i, &(_, v))| {
            let r = (fitted[i] - v).abs();
            if v != 0.0 {
                r / v.abs()
            } else {
                r
            }
        })
        .fold(0.0, f64::max);
    let series = LogPuiseuxSeries::new(n, k0, coefficients)?;
    Ok(FitReport { series, max_relative_residual, condition })
}
