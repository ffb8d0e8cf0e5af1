//! Polynomial saddles: separatrix crossings on the boundary of a neighbourhood
//! of the origin, separatrix sectors, sublevel areas `A(h)` of `|H|` in a
//! sector, passing times `τ(h)` along Hamiltonian trajectories, and the
//! check `τ = dA/dh`.
//!
//! The neighbourhood is either the disk of radius `ρ` or the square
//! `max(|x|, |y|) ≤ ρ`; both are star-shaped, so they are parametrised by
//! the polar angle.

use std::f64::consts::{FRAC_PI_4, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{fmt_f64, CsvTable};
use crate::ode::{self, OdeError, State, Tolerances};
use crate::quad::{self, QuadError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SaddleError {
    #[error("H must vanish at the origin (constant term {0})")]
    NonZeroValue(f64),
    #[error("gradient of H must vanish at the origin (linear term {0} x^{1} y^{2})")]
    NonCriticalOrigin(f64, u32, u32),
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("H is identically zero")]
    ZeroHamiltonian,
    #[error("critical point of H near ({x:.3e}, {y:.3e}) inside the neighbourhood; use a smaller radius")]
    NotIsolated { x: f64, y: f64 },
    #[error("non-transversal zero of H on the boundary near angle {angle:.6}; use a smaller radius")]
    Tangential { angle: f64 },
    #[error("{0} separatrix crossings found; a saddle needs an even number of at least four")]
    NotASaddle(usize),
    #[error("no sector with index {0}")]
    NoSuchSector(usize),
    #[error("level h = {h} is outside (0, h0 = {h0})")]
    LevelOutOfRange { h: f64, h0: f64 },
    #[error("level |H| = {h} meets the sector arc {crossings} times, expected 2")]
    SectorStructure { h: f64, crossings: usize },
    #[error("Hamiltonian drift {drift:e} exceeds 1e-8 h after tolerance tightening and projection")]
    Drift { drift: f64 },
    #[error("integrator: {0}")]
    Ode(#[from] OdeError),
    #[error("quadrature: {0}")]
    Quadrature(#[from] QuadError),
    #[error("saddle description: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, SaddleError>;

/// `c xᵖ yᵠ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub c: f64,
    pub x: u32,
    pub y: u32,
}

/// A real polynomial in two variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2 {
    terms: Vec<Monomial>,
}

impl Poly2 {
    pub fn new(terms: Vec<Monomial>) -> Self {
        let mut merged: Vec<Monomial> = Vec::new();
        for t in terms {
            match merged.iter_mut().find(|m| m.x == t.x && m.y == t.y) {
                Some(m) => m.c += t.c,
                None => merged.push(t),
            }
        }
        merged.retain(|m| m.c != 0.0);
        Poly2 { terms: merged }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|m| m.x + m.y).max().unwrap_or(0)
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|m| m.c * x.powi(m.x as i32) * y.powi(m.y as i32)).sum()
    }

    /// `(∂H/∂x, ∂H/∂y)`.
    #[inline]
    pub fn grad(&self, x: f64, y: f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        for m in &self.terms {
            if m.x > 0 {
                g[0] += m.c * m.x as f64 * x.powi(m.x as i32 - 1) * y.powi(m.y as i32);
            }
            if m.y > 0 {
                g[1] += m.c * m.y as f64 * x.powi(m.x as i32) * y.powi(m.y as i32 - 1);
            }
        }
        g
    }

    /// Coefficients of `r ↦ H(r cos θ, r sin θ)` by ascending power.
    pub fn along_ray(&self, theta: f64) -> Vec<f64> {
        let (s, c) = theta.sin_cos();
        let mut out = vec![0.0; self.degree() as usize + 1];
        for m in &self.terms {
            out[(m.x + m.y) as usize] += m.c * c.powi(m.x as i32) * s.powi(m.y as i32);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// `x² + y² ≤ ρ²`.
    #[default]
    Disk,
    /// `max(|x|, |y|) ≤ ρ`.
    Square,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaddleModel {
    h: Poly2,
    rho: f64,
    shape: Shape,
}

impl SaddleModel {
    pub fn new(h: Poly2, rho: f64, shape: Shape) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(SaddleError::BadRadius(rho));
        }
        if h.terms.is_empty() {
            return Err(SaddleError::ZeroHamiltonian);
        }
        for m in &h.terms {
            match m.x + m.y {
                0 => return Err(SaddleError::NonZeroValue(m.c)),
                1 => return Err(SaddleError::NonCriticalOrigin(m.c, m.x, m.y)),
                _ => {}
            }
        }
        let model = SaddleModel { h, rho, shape };
        model.audit_isolated()?;
        Ok(model)
    }

    /// `H = xy`.
    pub fn xy(rho: f64, shape: Shape) -> Result<Self> {
        Self::new(Poly2::new(vec![Monomial { c: 1.0, x: 1, y: 1 }]), rho, shape)
    }

    /// `H = x³ − 3xy²`.
    pub fn monkey(rho: f64, shape: Shape) -> Result<Self> {
        Self::new(Poly2::new(vec![Monomial { c: 1.0, x: 3, y: 0 }, Monomial { c: -3.0, x: 1, y: 2 }]), rho, shape)
    }

    /// `H = y² − x⁴`.
    pub fn degenerate(rho: f64, shape: Shape) -> Result<Self> {
        Self::new(Poly2::new(vec![Monomial { c: 1.0, x: 0, y: 2 }, Monomial { c: -1.0, x: 4, y: 0 }]), rho, shape)
    }

    pub fn hamiltonian(&self) -> &Poly2 {
        &self.h
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Distance from the origin to the boundary along angle `θ`.
    #[inline]
    pub fn boundary_radius(&self, theta: f64) -> f64 {
        match self.shape {
            Shape::Disk => self.rho,
            Shape::Square => {
                let (s, c) = theta.sin_cos();
                self.rho / c.abs().max(s.abs())
            }
        }
    }

    pub fn boundary_point(&self, theta: f64) -> [f64; 2] {
        let r = self.boundary_radius(theta);
        let (s, c) = theta.sin_cos();
        [r * c, r * s]
    }

    /// `< 1` inside, `1` on the boundary.
    #[inline]
    pub fn gauge(&self, p: &State) -> f64 {
        match self.shape {
            Shape::Disk => (p[0] * p[0] + p[1] * p[1]).sqrt() / self.rho,
            Shape::Square => p[0].abs().max(p[1].abs()) / self.rho,
        }
    }

    /// Hamiltonian vector field `(∂H/∂y, −∂H/∂x)`.
    #[inline]
    pub fn field(&self, p: &State) -> State {
        let g = self.h.grad(p[0], p[1]);
        [g[1], -g[0]]
    }

    fn boundary_h(&self, theta: f64) -> f64 {
        let p = self.boundary_point(theta);
        self.h.eval(p[0], p[1])
    }

    /// Grid audit that the origin is the only critical point: the gradient
    /// does not come close to vanishing away from a small core.
    fn audit_isolated(&self) -> Result<()> {
        const N: usize = 121;
        let core = self.rho / 40.0;
        let mut samples = Vec::with_capacity(N * N);
        let mut gmax = 0.0f64;
        for i in 0..N {
            for j in 0..N {
                let x = self.rho * (2.0 * i as f64 / (N - 1) as f64 - 1.0);
                let y = self.rho * (2.0 * j as f64 / (N - 1) as f64 - 1.0);
                if self.gauge(&[x, y]) > 1.0 || x.hypot(y) < core {
                    continue;
                }
                let g = self.h.grad(x, y);
                let n = g[0].hypot(g[1]);
                gmax = gmax.max(n);
                samples.push((x, y, n));
            }
        }
        for (x, y, n) in samples {
            if n <= 1e-10 * gmax {
                return Err(SaddleError::NotIsolated { x, y });
            }
        }
        Ok(())
    }
}

/// Structured-text saddle description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaddleSpec {
    pub rho: f64,
    #[serde(default)]
    pub shape: Shape,
    pub monomials: Vec<Monomial>,
}

impl SaddleSpec {
    pub fn build(&self) -> Result<SaddleModel> {
        SaddleModel::new(Poly2::new(self.monomials.clone()), self.rho, self.shape)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SaddleError::Spec(e.to_string()))
    }
}

impl SaddleModel {
    pub fn to_spec(&self) -> SaddleSpec {
        SaddleSpec { rho: self.rho, shape: self.shape, monomials: self.h.terms.clone() }
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..120 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Angles in `[0, 2π)` where the zero level of `H` crosses the boundary,
/// sorted. Tangential zeros are rejected.
pub fn separatrix_directions(m: &SaddleModel, angular_resolution: usize) -> Result<Vec<f64>> {
    let out = boundary_sign_changes(|t| m.boundary_h(t), angular_resolution)?;
    if out.len() < 4 || out.len() % 2 == 1 {
        return Err(SaddleError::NotASaddle(out.len()));
    }
    Ok(out)
}

/// Sign changes of a `2π`-periodic function, refined by bisection; a dip of
/// `|g|` to zero without a sign change is reported as tangential.
fn boundary_sign_changes<G: Fn(f64) -> f64>(g: G, angular_resolution: usize) -> Result<Vec<f64>> {
    let n = angular_resolution.max(16);
    let step = TAU / n as f64;
    // half-step offset keeps samples off axis-aligned crossings
    let thetas: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * step).collect();
    let vals: Vec<f64> = thetas.iter().map(|&t| g(t)).collect();
    let vmax = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        let k = (i + n - 1) % n;
        if (vals[i] < 0.0) != (vals[j] < 0.0) {
            out.push(bisect(&g, thetas[i], thetas[i] + step).rem_euclid(TAU));
            continue;
        }
        if vals[i].abs() <= vals[k].abs() && vals[i].abs() <= vals[j].abs() {
            let (tm, fm) = golden_min(|t| g(t).abs(), thetas[i] - step, thetas[i] + step);
            let same_sign = (g(tm - 1e-3 * step) < 0.0) == (g(tm + 1e-3 * step) < 0.0);
            if fm <= 1e-9 * vmax && same_sign && (vals[k] < 0.0) == (vals[i] < 0.0) {
                return Err(SaddleError::Tangential { angle: tm.rem_euclid(TAU) });
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(out)
}

/// A separatrix sector, anchored by the boundary arc between two
/// consecutive crossings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sector {
    pub id: usize,
    pub arc_start: f64,
    /// `arc_end > arc_start`, possibly beyond `2π`.
    pub arc_end: f64,
    /// Sign of `H` in the sector.
    pub sign: f64,
    /// Angular window used for membership: the arc widened by half of each
    /// neighbouring arc, which carries the opposite sign.
    pub window_start: f64,
    pub window_end: f64,
}

impl Sector {
    pub fn contains_angle(&self, theta: f64) -> bool {
        let t = (theta - self.arc_start).rem_euclid(TAU);
        t > 0.0 && t < self.arc_end - self.arc_start
    }

    pub fn mid_angle(&self) -> f64 {
        0.5 * (self.arc_start + self.arc_end)
    }
}

/// Sectors in angular order; sector `i` starts at the `i`-th crossing.
pub fn sectors(m: &SaddleModel, angular_resolution: usize) -> Result<Vec<Sector>> {
    let cr = separatrix_directions(m, angular_resolution)?;
    let k = cr.len();
    let arc = |i: usize| {
        let s = cr[i % k];
        let mut e = cr[(i + 1) % k];
        if e <= s {
            e += TAU;
        }
        (s, e)
    };
    Ok((0..k)
        .map(|i| {
            let (s, e) = arc(i);
            let (ps, pe) = arc(i + k - 1);
            let (ns, ne) = arc(i + 1);
            Sector {
                id: i,
                arc_start: s,
                arc_end: e,
                sign: m.boundary_h(0.5 * (s + e)).signum(),
                window_start: s - 0.5 * (pe - ps),
                window_end: e + 0.5 * (ne - ns),
            }
        })
        .collect())
}

/// The sector whose arc contains `theta`.
pub fn sector_at(sectors: &[Sector], theta: f64) -> Option<Sector> {
    sectors.iter().copied().find(|s| s.contains_angle(theta))
}

const ARC_SAMPLES: usize = 4000;

/// Half the minimum of `|H|` on the sector arc after removing the monotone
/// stretches that rise from the two separatrix crossings.
pub fn sector_h0(m: &SaddleModel, s: &Sector) -> f64 {
    let vals: Vec<f64> = (1..ARC_SAMPLES)
        .map(|i| {
            let t = s.arc_start + (s.arc_end - s.arc_start) * i as f64 / ARC_SAMPLES as f64;
            m.boundary_h(t).abs()
        })
        .collect();
    let mut i1 = 0;
    while i1 + 1 < vals.len() && vals[i1 + 1] >= vals[i1] {
        i1 += 1;
    }
    let mut i2 = vals.len() - 1;
    while i2 > 0 && vals[i2 - 1] >= vals[i2] {
        i2 -= 1;
    }
    let (lo, hi) = if i1 <= i2 { (i1, i2) } else { (i2, i1) };
    0.5 * vals[lo..=hi].iter().fold(f64::INFINITY, |a, &v| a.min(v))
}

fn horner(c: &[f64], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * r + a)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect()
}

/// Real roots of the polynomial `c` in the open interval `(a, b)`, located by
/// recursive isolation between critical points and bisection.
pub fn real_roots(c: &[f64], a: f64, b: f64) -> Vec<f64> {
    let deg = match c.iter().rposition(|&v| v != 0.0) {
        Some(d) => d,
        None => return Vec::new(),
    };
    let c = &c[..=deg];
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        let r = -c[0] / c[1];
        return if r > a && r < b { vec![r] } else { Vec::new() };
    }
    let mut pts = vec![a];
    pts.extend(real_roots(&derivative(c), a, b));
    pts.push(b);
    let mut roots = Vec::new();
    for w in pts.windows(2) {
        let (u, v) = (w[0], w[1]);
        let (fu, fv) = (horner(c, u), horner(c, v));
        if fu == 0.0 && u > a {
            roots.push(u);
        } else if fu != 0.0 && fv != 0.0 && (fu < 0.0) != (fv < 0.0) {
            roots.push(bisect(|r| horner(c, r), u, v));
        }
    }
    roots
}

/// `∫ 1[0 < σH < h] r dr` along the ray at angle `θ`.
fn ray_measure(m: &SaddleModel, sign: f64, h: f64, theta: f64) -> f64 {
    let mut p = m.h.along_ray(theta);
    for v in p.iter_mut() {
        *v *= sign;
    }
    let rmax = m.boundary_radius(theta);
    let mut q = p.clone();
    q[0] -= h;
    let mut cuts = vec![0.0];
    cuts.extend(real_roots(&p, 0.0, rmax));
    cuts.extend(real_roots(&q, 0.0, rmax));
    cuts.push(rmax);
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v <= u {
            continue;
        }
        let val = horner(&p, 0.5 * (u + v));
        if val > 0.0 && val < h {
            total += 0.5 * (v * v - u * u);
        }
    }
    total
}

/// Area of `{0 < σH < h}` in the sector, by adaptive quadrature over the
/// polar angle of exact per-ray lengths, to absolute tolerance `tol`.
pub fn sector_area(m: &SaddleModel, s: &Sector, h: f64, tol: f64) -> Result<f64> {
    let h0 = sector_h0(m, s);
    if !(h > 0.0 && h < h0) {
        return Err(SaddleError::LevelOutOfRange { h, h0 });
    }
    Ok(sector_area_unchecked(m, s, h, tol)?)
}

/// As [`sector_area`] without the `h < h₀` restriction.
pub fn sector_area_unchecked(m: &SaddleModel, s: &Sector, h: f64, tol: f64) -> std::result::Result<f64, QuadError> {
    let mut breaks = Vec::new();
    let panels = 64;
    for i in 0..=panels {
        breaks.push(s.window_start + (s.window_end - s.window_start) * i as f64 / panels as f64);
    }
    if m.shape == Shape::Square {
        // corners of the square are kinks of the boundary radius
        let mut c = (s.window_start / FRAC_PI_4).ceil();
        while c * FRAC_PI_4 < s.window_end {
            if (c as i64).rem_euclid(2) == 1 {
                breaks.push(c * FRAC_PI_4);
            }
            c += 1.0;
        }
        breaks.sort_by(f64::total_cmp);
    }
    let mut f = |t: f64| ray_measure(m, s.sign, h, t);
    let (v, _) = quad::integrate_with_breaks(&mut f, &breaks, tol, 0.0, 400_000)?;
    Ok(v)
}

/// Passing-time measurement with integration diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct PassingTime {
    pub tau: f64,
    pub entry: [f64; 2],
    pub exit: [f64; 2],
    /// Largest `|H(γ(t)) − H(γ(0))|` over accepted steps.
    pub drift: f64,
    pub steps: usize,
    pub projected: bool,
}

/// Boundary points of the sector arc where `σH = h`.
fn arc_crossings(m: &SaddleModel, s: &Sector, h: f64) -> Vec<f64> {
    let f = |t: f64| s.sign * m.boundary_h(t) - h;
    let n = ARC_SAMPLES;
    let ts: Vec<f64> = (0..=n).map(|i| s.arc_start + (s.arc_end - s.arc_start) * i as f64 / n as f64).collect();
    let vs: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let mut out = Vec::new();
    for i in 0..n {
        if (vs[i] < 0.0) != (vs[i + 1] < 0.0) {
            out.push(bisect(f, ts[i], ts[i + 1]));
        }
    }
    out
}

/// Time spent in the neighbourhood by the trajectory on `σH = h` inside the
/// sector, from its entry through the boundary arc to its exit.
pub fn passing_time(m: &SaddleModel, s: &Sector, h: f64, tol: &Tolerances) -> Result<PassingTime> {
    let h0 = sector_h0(m, s);
    if !(h > 0.0 && h < h0) {
        return Err(SaddleError::LevelOutOfRange { h, h0 });
    }
    let crossings = arc_crossings(m, s, h);
    if crossings.len() != 2 {
        return Err(SaddleError::SectorStructure { h, crossings: crossings.len() });
    }
    let inward = |p: &[f64; 2]| {
        let v = m.field(p);
        match m.shape {
            Shape::Disk => p[0] * v[0] + p[1] * v[1] < 0.0,
            Shape::Square if p[0].abs() >= p[1].abs() => p[0].signum() * v[0] < 0.0,
            Shape::Square => p[1].signum() * v[1] < 0.0,
        }
    };
    let a = m.boundary_point(crossings[0]);
    let b = m.boundary_point(crossings[1]);
    let entry = if inward(&a) { a } else { b };

    let field = |p: &State| m.field(p);
    let event = |p: &State| m.gauge(p) - 1.0;
    let monitor = |p: &State| m.h.eval(p[0], p[1]);
    let limit = 1e-8 * h;
    let mut t = *tol;
    for _ in 0..3 {
        let run = ode::integrate_to_event(&field, entry, &event, &monitor, None, &t)?;
        if run.monitor_drift <= limit {
            return Ok(PassingTime {
                tau: run.t_event,
                entry,
                exit: run.y_event,
                drift: run.monitor_drift,
                steps: run.steps,
                projected: false,
            });
        }
        t.rtol = (t.rtol * 0.1).max(1e-15);
        t.atol = (t.atol * 0.1).max(1e-18);
    }
    // last resort: Newton projection back onto H = H(entry) after each step
    let target = monitor(&entry);
    let project = |p: State| {
        let g = m.h.grad(p[0], p[1]);
        let n2 = g[0] * g[0] + g[1] * g[1];
        if n2 == 0.0 {
            return p;
        }
        let d = (m.h.eval(p[0], p[1]) - target) / n2;
        [p[0] - d * g[0], p[1] - d * g[1]]
    };
    let run = ode::integrate_to_event(&field, entry, &event, &monitor, Some(&project), &t)?;
    if run.monitor_drift > limit {
        return Err(SaddleError::Drift { drift: run.monitor_drift });
    }
    Ok(PassingTime {
        tau: run.t_event,
        entry,
        exit: run.y_event,
        drift: run.monitor_drift,
        steps: run.steps,
        projected: true,
    })
}

/// One row of the `τ` versus `dA/dh` comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct DadhRow {
    pub h: f64,
    pub area: f64,
    pub tau: f64,
    pub da_dh: f64,
    pub deviation: f64,
    pub drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DadhReport {
    pub rows: Vec<DadhRow>,
    pub max_deviation: f64,
}

impl DadhReport {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["h", "area", "tau_time", "dA_dh_time", "rel_deviation", "H_drift"]);
        for r in &self.rows {
            t.push(vec![
                fmt_f64(r.h),
                fmt_f64(r.area),
                fmt_f64(r.tau),
                fmt_f64(r.da_dh),
                fmt_f64(r.deviation),
                fmt_f64(r.drift),
            ]);
        }
        t
    }
}

/// Boundary samples used to locate separatrix crossings.
pub const DEFAULT_ANGULAR_RESOLUTION: usize = 720;

/// Relative step of the central difference for `dA/dh`.
pub const FD_STEP: f64 = 1e-2;
/// Absolute tolerance of each area evaluation relative to `h`.
pub const AREA_TOL: f64 = 1e-11;

/// Compares `τ(h)` with the central difference of `A` at each grid level.
pub fn verify_da_dh(m: &SaddleModel, s: &Sector, hs: &[f64], tol: &Tolerances) -> Result<DadhReport> {
    let h0 = sector_h0(m, s);
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        let delta = FD_STEP * h;
        if !(h > 0.0 && h + delta < h0) {
            return Err(SaddleError::LevelOutOfRange { h, h0 });
        }
        let atol = AREA_TOL * h;
        let ap = sector_area_unchecked(m, s, h + delta, atol)?;
        let am = sector_area_unchecked(m, s, h - delta, atol)?;
        let area = sector_area_unchecked(m, s, h, atol)?;
        let da_dh = (ap - am) / (2.0 * delta);
        let pt = passing_time(m, s, h, tol)?;
        rows.push(DadhRow {
            h,
            area,
            tau: pt.tau,
            da_dh,
            deviation: ((pt.tau - da_dh) / pt.tau).abs(),
            drift: pt.drift,
        });
    }
    let max_deviation = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(DadhReport { rows, max_deviation })
}

/// `Γ(1/4)²/(4√π)`: `τ(h) ≈ C h^{−1/4}` in the upper sector of `y² − x⁴`.
pub const DEGENERATE_TAU_CONSTANT: f64 = 1.854_074_677_301_372;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ang_close(a: f64, b: f64) -> bool {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d) < 1e-10
    }

    #[test]
    fn validation() {
        let lin = Poly2::new(vec![Monomial { c: 1.0, x: 1, y: 0 }, Monomial { c: 1.0, x: 1, y: 1 }]);
        assert!(matches!(SaddleModel::new(lin, 1.0, Shape::Disk), Err(SaddleError::NonCriticalOrigin(..))));
        let cst = Poly2::new(vec![Monomial { c: 1.0, x: 0, y: 0 }, Monomial { c: 1.0, x: 1, y: 1 }]);
        assert!(matches!(SaddleModel::new(cst, 1.0, Shape::Disk), Err(SaddleError::NonZeroValue(_))));
        assert!(matches!(SaddleModel::xy(0.0, Shape::Disk), Err(SaddleError::BadRadius(_))));
        // H = xy(1 − x) has a second critical point at (1, 0)
        let extra = Poly2::new(vec![Monomial { c: 1.0, x: 1, y: 1 }, Monomial { c: -1.0, x: 2, y: 1 }]);
        assert!(matches!(SaddleModel::new(extra, 1.5, Shape::Disk), Err(SaddleError::NotIsolated { .. })));
        // a minimum has no separatrices
        let bowl = SaddleModel::new(
            Poly2::new(vec![Monomial { c: 1.0, x: 2, y: 0 }, Monomial { c: 1.0, x: 0, y: 2 }]),
            1.0,
            Shape::Disk,
        )
        .unwrap();
        assert_eq!(separatrix_directions(&bowl, 720), Err(SaddleError::NotASaddle(0)));
    }

    #[test]
    fn separatrix_examples() {
        let d = separatrix_directions(&SaddleModel::xy(1.0, Shape::Disk).unwrap(), 720).unwrap();
        assert_eq!(d.len(), 4);
        for t in [0.0, FRAC_PI_2, PI, 1.5 * PI] {
            assert!(d.iter().any(|&a| ang_close(a, t)), "{t} in {d:?}");
        }
        let d = separatrix_directions(&SaddleModel::monkey(1.0, Shape::Disk).unwrap(), 720).unwrap();
        assert_eq!(d.len(), 6);
        for a in &d {
            assert!((3.0 * a).cos().abs() < 1e-12);
        }
        let m = SaddleModel::degenerate(0.5, Shape::Disk).unwrap();
        let d = separatrix_directions(&m, 720).unwrap();
        assert_eq!(d.len(), 4);
        for a in &d {
            let p = m.boundary_point(*a);
            assert!((p[1].abs() - p[0] * p[0]).abs() < 1e-12);
        }
        for model in [SaddleModel::xy(1.0, Shape::Square), SaddleModel::monkey(1.0, Shape::Square)] {
            let d = separatrix_directions(&model.unwrap(), 720).unwrap();
            assert!(d.len().is_multiple_of(2) && d.len() >= 4);
        }
    }

    #[test]
    fn tangential_zero_is_rejected() {
        // cos 2θ − 1 touches zero at 0 and π without changing sign
        let err = boundary_sign_changes(|t| (2.0 * t).cos() - 1.0, 720).unwrap_err();
        assert!(matches!(err, SaddleError::Tangential { .. }));
        let ok = boundary_sign_changes(|t| (2.0 * t).cos(), 720).unwrap();
        assert_eq!(ok.len(), 4);
    }

    #[test]
    fn real_roots_basic() {
        // (r − 0.2)(r − 0.5)(r − 0.9)
        let c = [-0.09, 0.73, -1.6, 1.0];
        let r = real_roots(&c, 0.0, 1.0);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([0.2, 0.5, 0.9]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(real_roots(&[1.0, 0.0, 1.0], -2.0, 2.0).is_empty());
        assert!(real_roots(&[0.0, 0.0], 0.0, 1.0).is_empty());
    }

    #[test]
    fn xy_square_area_closed_form() {
        let m = SaddleModel::xy(1.0, Shape::Square).unwrap();
        let secs = sectors(&m, 720).unwrap();
        let q = sector_at(&secs, FRAC_PI_4).unwrap();
        assert_eq!(q.sign, 1.0);
        assert_relative_eq!(sector_h0(&m, &q), 0.5, max_relative = 1e-6);
        for h in [1e-3, 1e-2, 0.1, 0.3] {
            let a = sector_area(&m, &q, h, 1e-13).unwrap();
            assert_relative_eq!(a, h * (1.0 - h.ln()), max_relative = 1e-10);
        }
        let a = sector_area(&m, &q, 0.01, 1e-12).unwrap();
        assert!((a - 0.056_052).abs() < 1e-6);
        // constraint inactive: whole quarter square
        assert_relative_eq!(sector_area_unchecked(&m, &q, 1.5, 1e-12).unwrap(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn area_increases_and_tau_decreases() {
        let m = SaddleModel::monkey(1.0, Shape::Disk).unwrap();
        let secs = sectors(&m, 720).unwrap();
        let s = sector_at(&secs, 0.0).unwrap();
        let hs = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 0.3];
        let areas: Vec<f64> = hs.iter().map(|&h| sector_area(&m, &s, h, 1e-12).unwrap()).collect();
        let taus: Vec<f64> = hs.iter().map(|&h| passing_time(&m, &s, h, &Tolerances::default()).unwrap().tau).collect();
        for w in areas.windows(2) {
            assert!(w[1] > w[0]);
        }
        for w in taus.windows(2) {
            assert!(w[1] < w[0] && w[1] > 0.0);
        }
    }

    #[test]
    fn xy_passing_time() {
        let m = SaddleModel::xy(1.0, Shape::Square).unwrap();
        let secs = sectors(&m, 720).unwrap();
        let q = sector_at(&secs, FRAC_PI_4).unwrap();
        let h = (-3f64).exp();
        let pt = passing_time(&m, &q, h, &Tolerances::default()).unwrap();
        assert_relative_eq!(pt.tau, 3.0, max_relative = 1e-9);
        assert!(pt.drift < 1e-8 * h);
        assert!(matches!(passing_time(&m, &q, 1.0, &Tolerances::default()), Err(SaddleError::LevelOutOfRange { .. })));
    }

    #[test]
    fn spec_round_trip() {
        let text =
            "rho = 0.5\nshape = \"square\"\nmonomials = [{ c = 1.0, x = 0, y = 2 }, { c = -1.0, x = 4, y = 0 }]\n";
        let m = SaddleSpec::from_toml(text).unwrap().build().unwrap();
        assert_eq!(m, SaddleModel::degenerate(0.5, Shape::Square).unwrap());
        let back = toml::to_string(&m.to_spec()).unwrap();
        assert_eq!(SaddleSpec::from_toml(&back).unwrap().build().unwrap(), m);
    }
}
