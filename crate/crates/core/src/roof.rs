//! Singular roof functions over `[0, 1)`, their derivatives, Birkhoff sums
//! along exact IET orbits, and the at-least-logarithmic growth audit.
//!
//! A roof is `f(x) = offset + P(x) + Σ_y Σ_terms g(|x − y|)` where each
//! singularity `y` carries one list of blow-up terms active for `x < y` and
//! one for `x > y`. Term kinds are `−c ln h`, `c h^{−r}` and `−c ln(h) h^{−r}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::ExactScalar;
use crate::iet::{Iet, ScalarText};
use crate::numerics::{fmt_f64, CompensatedSum, CsvTable};
use crate::orbit;

pub const DEFAULT_GUARD_BAND: f64 = 1e-12;
pub const DEFAULT_OFFSET: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoofError {
    #[error("singularity at {position} has no blow-up term on its {side} side")]
    MissingBlowUp { position: f64, side: Side },
    #[error("invalid term: {0}")]
    BadTerm(String),
    #[error("singularity position {0} is not inside (0, 1)")]
    BadPosition(f64),
    #[error("two singularities share position {0}")]
    DuplicateSingularity(f64),
    #[error("roof is not positive: f({x}) = {value}")]
    NotPositive { x: f64, value: f64 },
    #[error("guard band must be positive and below 1e-3, got {0}")]
    BadGuardBand(f64),
    #[error("x = {0} is outside [0, 1)")]
    OutOfDomain(f64),
    #[error("point {x} is within the guard band of singularity {singularity} (distance {distance:e})")]
    GuardBand { x: f64, singularity: usize, distance: f64 },
    #[error("orbit point {index} is within the guard band of singularity {singularity} (distance {distance:e})")]
    OrbitGuardBand { index: usize, singularity: usize, distance: f64 },
    #[error("growth constants need C > 0 and B >= 0, got C = {c}, B = {b}")]
    BadConstants { c: f64, b: f64 },
    #[error("derivative order must be 0, 1 or 2, got {0}")]
    BadOrder(usize),
    #[error("roof description: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, RoofError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Both,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Both => "both",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TermKind {
    Log,
    Power { r: f64 },
    LogPower { r: f64 },
}

/// One blow-up term `g(h)` with `h = |x − y|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub kind: TermKind,
    pub coefficient: f64,
}

impl Term {
    pub fn log(c: f64) -> Self {
        Term { kind: TermKind::Log, coefficient: c }
    }

    fn validate(&self) -> Result<()> {
        if !(self.coefficient > 0.0 && self.coefficient.is_finite()) {
            return Err(RoofError::BadTerm(format!("coefficient {} must be positive", self.coefficient)));
        }
        match self.kind {
            TermKind::Power { r } | TermKind::LogPower { r } if !(r > 0.0 && r.is_finite()) => {
                Err(RoofError::BadTerm(format!("exponent {r} must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// `(g, dg/dh, d²g/dh²)` at `h > 0`.
    #[inline]
    pub fn eval(&self, h: f64) -> [f64; 3] {
        let c = self.coefficient;
        match self.kind {
            TermKind::Log => [-c * h.ln(), -c / h, c / (h * h)],
            TermKind::Power { r } => {
                let p = h.powf(-r);
                [c * p, -r * c * p / h, r * (r + 1.0) * c * p / (h * h)]
            }
            TermKind::LogPower { r } => {
                let p = h.powf(-r);
                let l = h.ln();
                [-c * l * p, -c * p / h * (1.0 - r * l), c * p / (h * h) * (2.0 * r + 1.0 - r * (r + 1.0) * l)]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Singularity {
    pub position: f64,
    /// Exact location when the singularity comes from an IET.
    pub anchor: Option<ExactScalar>,
    /// Terms active for `x < position`.
    pub left: Vec<Term>,
    /// Terms active for `x > position`.
    pub right: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoofFunction {
    singularities: Vec<Singularity>,
    /// Coefficients of the smooth background `Σ p_k x^k`.
    background: Vec<f64>,
    offset: f64,
    guard_band: f64,
}

impl RoofFunction {
    pub fn new(
        mut singularities: Vec<Singularity>,
        background: Vec<f64>,
        offset: f64,
        guard_band: f64,
    ) -> Result<Self> {
        if !(guard_band > 0.0 && guard_band < 1e-3) {
            return Err(RoofError::BadGuardBand(guard_band));
        }
        singularities.sort_by(|a, b| a.position.total_cmp(&b.position));
        for s in &singularities {
            if !(s.position > 0.0 && s.position < 1.0) {
                return Err(RoofError::BadPosition(s.position));
            }
            if s.left.is_empty() {
                return Err(RoofError::MissingBlowUp { position: s.position, side: Side::Left });
            }
            if s.right.is_empty() {
                return Err(RoofError::MissingBlowUp { position: s.position, side: Side::Right });
            }
            for t in s.left.iter().chain(&s.right) {
                t.validate()?;
            }
        }
        for w in singularities.windows(2) {
            if w[0].position == w[1].position {
                return Err(RoofError::DuplicateSingularity(w[0].position));
            }
        }
        let roof = RoofFunction { singularities, background, offset, guard_band };
        roof.check_positive()?;
        Ok(roof)
    }

    /// Constant roof `f ≡ c`, with no singularities.
    pub fn constant(c: f64) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), c, DEFAULT_GUARD_BAND)
    }

    /// `offset − Σ_d c_left ln(d − x)` left of each discontinuity `d` and
    /// `− c_right ln(x − d)` right of it (or the power analogues), anchored
    /// exactly at the discontinuities of `t`.
    pub fn kochergin(t: &Iet, kind: TermKind, c_left: f64, c_right: f64, offset: f64) -> Result<Self> {
        let sing = t
            .discontinuities()
            .into_iter()
            .map(|d| Singularity {
                position: d.to_f64(),
                anchor: Some(d),
                left: vec![Term { kind, coefficient: c_left }],
                right: vec![Term { kind, coefficient: c_right }],
            })
            .collect();
        Self::new(sing, Vec::new(), offset, DEFAULT_GUARD_BAND)
    }

    /// Symmetric log roof `10 − Σ_d ln|x − d|` over the discontinuities of `t`.
    pub fn canonical_log(t: &Iet) -> Result<Self> {
        Self::kochergin(t, TermKind::Log, 1.0, 1.0, DEFAULT_OFFSET)
    }

    pub fn singularities(&self) -> &[Singularity] {
        &self.singularities
    }

    pub fn guard_band(&self) -> f64 {
        self.guard_band
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn background(&self) -> &[f64] {
        &self.background
    }

    pub fn with_guard_band(mut self, g: f64) -> Result<Self> {
        if !(g > 0.0 && g < 1e-3) {
            return Err(RoofError::BadGuardBand(g));
        }
        self.guard_band = g;
        Ok(self)
    }

    fn check_positive(&self) -> Result<()> {
        // singular terms are non-negative on (0,1), so offset + P bounds f below
        const N: usize = 4096;
        for i in 0..=N {
            let x = i as f64 / N as f64;
            let v = self.offset + self.poly(x)[0];
            if !(v > 0.0) {
                return Err(RoofError::NotPositive { x, value: v });
            }
        }
        Ok(())
    }

    fn poly(&self, x: f64) -> [f64; 3] {
        let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
        for &c in self.background.iter().rev() {
            ddp = ddp * x + 2.0 * dp;
            dp = dp * x + p;
            p = p * x + c;
        }
        [p, dp, ddp]
    }

    /// `(f, f′, f″)` from `x` and the signed offsets `δ_j = x − y_j`.
    #[inline]
    pub fn eval_deltas(&self, x: f64, deltas: &[f64]) -> std::result::Result<[f64; 3], (usize, f64)> {
        let mut acc = [0.0f64; 3];
        for (j, (s, &delta)) in self.singularities.iter().zip(deltas).enumerate() {
            let h = delta.abs();
            if h <= self.guard_band {
                return Err((j, h));
            }
            let (terms, sigma) = if delta < 0.0 { (&s.left, -1.0) } else { (&s.right, 1.0) };
            for t in terms {
                let g = t.eval(h);
                acc[0] += g[0];
                acc[1] += sigma * g[1];
                acc[2] += g[2];
            }
        }
        let p = self.poly(x);
        Ok([acc[0] + p[0] + self.offset, acc[1] + p[1], acc[2] + p[2]])
    }

    fn deltas_f64(&self, x: f64) -> Vec<f64> {
        self.singularities.iter().map(|s| x - s.position).collect()
    }

    /// `f(x)`, then `f′(x)` and `f″(x)` up to `order`.
    pub fn eval_with_derivatives(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        if order > 2 {
            return Err(RoofError::BadOrder(order));
        }
        if !(0.0..1.0).contains(&x) {
            return Err(RoofError::OutOfDomain(x));
        }
        let v = self.eval_deltas(x, &self.deltas_f64(x)).map_err(|(singularity, distance)| RoofError::GuardBand {
            x,
            singularity,
            distance,
        })?;
        Ok(v[..=order].to_vec())
    }

    /// Distance to the nearest singularity, infinite when there is none.
    pub fn min_distance(deltas: &[f64]) -> f64 {
        deltas.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()))
    }

    /// Exact anchors usable by the orbit walker for `t`, with the index of
    /// the singularity each belongs to.
    pub(crate) fn anchors_for(&self, t: &Iet) -> (Vec<ExactScalar>, Vec<Option<usize>>) {
        let mut anchors = Vec::new();
        let mut slot = Vec::with_capacity(self.singularities.len());
        for s in &self.singularities {
            match &s.anchor {
                Some(a) if a.radicand().is_none_or(|d| d == t.radicand()) => {
                    slot.push(Some(anchors.len()));
                    anchors.push(a.clone());
                }
                _ => slot.push(None),
            }
        }
        (anchors, slot)
    }

    /// Visits `(i, f, f′, f″)` along the exact orbit of `x` for `i < n`.
    /// The visitor returns `false` to stop early.
    pub fn along_orbit<F>(&self, t: &Iet, x: &ExactScalar, n: usize, mut visit: F) -> Result<()>
    where
        F: FnMut(usize, [f64; 3]) -> bool,
    {
        let (anchors, slot) = self.anchors_for(t);
        let mut deltas = vec![0.0; self.singularities.len()];
        let mut failure = None;
        orbit::walk(t, x, n, &anchors, |p| {
            for (j, s) in self.singularities.iter().enumerate() {
                deltas[j] = match slot[j] {
                    Some(k) => p.deltas[k],
                    None => p.x - s.position,
                };
            }
            match self.eval_deltas(p.x, &deltas) {
                Ok(v) => visit(p.index, v),
                Err((singularity, distance)) => {
                    failure = Some(RoofError::OrbitGuardBand { index: p.index, singularity, distance });
                    false
                }
            }
        });
        failure.map_or(Ok(()), Err)
    }

    pub fn to_spec(&self) -> RoofSpec {
        let mut terms = Vec::new();
        for s in &self.singularities {
            for (side, list) in [(Side::Left, &s.left), (Side::Right, &s.right)] {
                for t in list {
                    let (kind, exponent) = match t.kind {
                        TermKind::Log => (KindText::Log, None),
                        TermKind::Power { r } => (KindText::Power, Some(r)),
                        TermKind::LogPower { r } => (KindText::LogPower, Some(r)),
                    };
                    terms.push(TermSpec {
                        position: Some(s.position),
                        anchor: s.anchor.as_ref().map(ScalarText::from),
                        side,
                        kind,
                        coefficient: t.coefficient,
                        exponent,
                    });
                }
            }
        }
        RoofSpec {
            d: self
                .singularities
                .iter()
                .find_map(|s| s.anchor.as_ref().and_then(ExactScalar::radicand))
                .unwrap_or(crate::exact::DEFAULT_RADICAND),
            offset: self.offset,
            background: self.background.clone(),
            guard_band: self.guard_band,
            terms,
        }
    }
}

/// `(S_n f(x), S_n f′(x), S_n f″(x))` truncated to `order`, along the exact
/// orbit of `x` with compensated summation.
pub fn birkhoff_sum(t: &Iet, f: &RoofFunction, x: &ExactScalar, n: usize, order: usize) -> Result<Vec<f64>> {
    if order > 2 {
        return Err(RoofError::BadOrder(order));
    }
    let xf = x.to_f64();
    if !(x.signum() >= 0 && xf < 1.0) {
        return Err(RoofError::OutOfDomain(xf));
    }
    let mut sums = [CompensatedSum::new(); 3];
    f.along_orbit(t, x, n, |_, v| {
        for k in 0..=order {
            sums[k].add(v[k]);
        }
        true
    })?;
    Ok(sums[..=order].iter().map(CompensatedSum::value).collect())
}

/// One audited grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthSample {
    pub x: f64,
    pub min_distance: f64,
    pub f2: f64,
    /// `f″(x) − C/min_dist² + B`.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthCertificate {
    pub c: f64,
    pub b: f64,
    /// Set when the audit is meaningless for this roof (no singularities).
    pub structural_failure: Option<String>,
    pub worst_margin: f64,
    pub argmin: f64,
    pub samples: Vec<GrowthSample>,
}

impl GrowthCertificate {
    /// Passes iff the roof has singularities and every sampled margin is `≥ 0`.
    /// This certifies the inequality on the audited grid only.
    pub fn passes(&self) -> bool {
        self.structural_failure.is_none() && self.worst_margin >= 0.0
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["x", "min_dist", "f2_per_len2", "margin_per_len2"]);
        for s in &self.samples {
            t.push(vec![fmt_f64(s.x), fmt_f64(s.min_distance), fmt_f64(s.f2), fmt_f64(s.margin)]);
        }
        t
    }
}

/// Audits `f″(x) ≥ C/min_{y∈A_f}|x − y|² − B` on a geometric ladder
/// `|x − y| = 2^{−k}` down to the guard band at each side of each
/// singularity, plus a uniform grid of `grid_size` midpoints.
pub fn check_log_growth(f: &RoofFunction, c: f64, b: f64, grid_size: usize) -> Result<GrowthCertificate> {
    if !(c > 0.0 && c.is_finite() && b >= 0.0 && b.is_finite()) {
        return Err(RoofError::BadConstants { c, b });
    }
    if f.singularities.is_empty() {
        return Ok(GrowthCertificate {
            c,
            b,
            structural_failure: Some("roof has no singularities, so it cannot grow logarithmically".into()),
            worst_margin: f64::NEG_INFINITY,
            argmin: f64::NAN,
            samples: Vec::new(),
        });
    }

    let mut points: Vec<(f64, Vec<f64>)> = Vec::new();
    for (j, s) in f.singularities.iter().enumerate() {
        for sigma in [-1.0f64, 1.0] {
            let mut k = 1;
            loop {
                let h = (-(k as f64)).exp2();
                if h <= f.guard_band {
                    break;
                }
                k += 1;
                let x = s.position + sigma * h;
                if !(x > 0.0 && x < 1.0) {
                    continue;
                }
                let mut deltas = f.deltas_f64(x);
                deltas[j] = sigma * h;
                points.push((x, deltas));
            }
        }
    }
    for i in 0..grid_size {
        let x = (i as f64 + 0.5) / grid_size as f64;
        points.push((x, f.deltas_f64(x)));
    }

    let mut samples = Vec::with_capacity(points.len());
    for (x, deltas) in points {
        let Ok(v) = f.eval_deltas(x, &deltas) else { continue };
        let md = RoofFunction::min_distance(&deltas);
        samples.push(GrowthSample { x, min_distance: md, f2: v[2], margin: v[2] - c / (md * md) + b });
    }
    samples.sort_by(|p, q| p.x.total_cmp(&q.x));
    let (worst_margin, argmin) =
        samples.iter().fold((f64::INFINITY, f64::NAN), |(m, a), s| if s.margin < m { (s.margin, s.x) } else { (m, a) });
    Ok(GrowthCertificate { c, b, structural_failure: None, worst_margin, argmin, samples })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConformanceReport {
    /// Every discontinuity of the map is an (exactly anchored) singularity.
    pub discontinuities_covered: bool,
    pub uncovered: Vec<ExactScalar>,
    pub growth: GrowthCertificate,
}

impl ConformanceReport {
    pub fn passes(&self) -> bool {
        self.discontinuities_covered && self.growth.passes()
    }
}

/// Checks that every discontinuity of `t` is a singularity of `f` (exact
/// anchors only) and audits the growth bound with `(C, B)`.
pub fn conformance_check(t: &Iet, f: &RoofFunction, c: f64, b: f64, grid_size: usize) -> Result<ConformanceReport> {
    let uncovered: Vec<ExactScalar> = t
        .discontinuities()
        .into_iter()
        .filter(|d| !f.singularities.iter().any(|s| s.anchor.as_ref() == Some(d)))
        .collect();
    Ok(ConformanceReport {
        discontinuities_covered: uncovered.is_empty(),
        uncovered,
        growth: check_log_growth(f, c, b, grid_size)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindText {
    Log,
    Power,
    LogPower,
}

/// One `(position, side, kind, coefficient, exponent)` entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<ScalarText>,
    pub side: Side,
    pub kind: KindText,
    pub coefficient: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
}

fn default_guard() -> f64 {
    DEFAULT_GUARD_BAND
}
fn default_d() -> u64 {
    crate::exact::DEFAULT_RADICAND
}

/// Structured-text roof description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoofSpec {
    /// Radicand for exact anchors.
    #[serde(default = "default_d")]
    pub d: u64,
    pub offset: f64,
    #[serde(default)]
    pub background: Vec<f64>,
    #[serde(default = "default_guard")]
    pub guard_band: f64,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
}

impl RoofSpec {
    pub fn build(&self) -> Result<RoofFunction> {
        let mut sing: Vec<Singularity> = Vec::new();
        for t in &self.terms {
            let anchor = match &t.anchor {
                Some(a) => Some(a.to_scalar(self.d).map_err(|e| RoofError::Spec(e.to_string()))?),
                None => None,
            };
            let position = match (&anchor, t.position) {
                (Some(a), _) => a.to_f64(),
                (None, Some(p)) => p,
                (None, None) => return Err(RoofError::Spec("term needs a position or an anchor".into())),
            };
            let kind = match (t.kind, t.exponent) {
                (KindText::Log, None) => TermKind::Log,
                (KindText::Power, Some(r)) => TermKind::Power { r },
                (KindText::LogPower, Some(r)) => TermKind::LogPower { r },
                (KindText::Log, Some(_)) => return Err(RoofError::Spec("log terms take no exponent".into())),
                (_, None) => return Err(RoofError::Spec("power terms need an exponent".into())),
            };
            let term = Term { kind, coefficient: t.coefficient };
            let idx = match sing.iter().position(|s| match (&s.anchor, &anchor) {
                (Some(a), Some(b)) => a == b,
                (None, None) => s.position == position,
                _ => false,
            }) {
                Some(i) => i,
                None => {
                    sing.push(Singularity { position, anchor, left: Vec::new(), right: Vec::new() });
                    sing.len() - 1
                }
            };
            if matches!(t.side, Side::Left | Side::Both) {
                sing[idx].left.push(term);
            }
            if matches!(t.side, Side::Right | Side::Both) {
                sing[idx].right.push(term);
            }
        }
        RoofFunction::new(sing, self.background.clone(), self.offset, self.guard_band)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| RoofError::Spec(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("roof description serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sing(position: f64, left: Vec<Term>, right: Vec<Term>) -> Singularity {
        Singularity { position, anchor: None, left, right }
    }

    fn log_half() -> RoofFunction {
        RoofFunction::new(vec![sing(0.5, vec![Term::log(1.0)], vec![Term::log(1.0)])], vec![], 10.0, DEFAULT_GUARD_BAND)
            .unwrap()
    }

    #[test]
    fn eval_examples() {
        let f = log_half();
        let x = 0.5 + (-2f64).exp();
        let v = f.eval_with_derivatives(x, 2).unwrap();
        assert_relative_eq!(v[0], 12.0, max_relative = 1e-14);
        assert_relative_eq!(v[2], 4f64.exp(), max_relative = 1e-12);

        let p = RoofFunction::new(
            vec![sing(
                0.5,
                vec![Term { kind: TermKind::Power { r: 0.5 }, coefficient: 1.0 }],
                vec![Term { kind: TermKind::Power { r: 0.5 }, coefficient: 1.0 }],
            )],
            vec![],
            1.0,
            DEFAULT_GUARD_BAND,
        )
        .unwrap();
        let v = p.eval_with_derivatives(0.54, 2).unwrap();
        assert_relative_eq!(v[0], 6.0, max_relative = 1e-12);
        assert_relative_eq!(v[2], 0.75 * 0.04f64.powf(-2.5), max_relative = 1e-10);

        assert!(matches!(f.eval_with_derivatives(0.5 + 1e-13, 0), Err(RoofError::GuardBand { singularity: 0, .. })));
        assert!(matches!(f.eval_with_derivatives(0.3, 3), Err(RoofError::BadOrder(3))));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let kinds = [TermKind::Log, TermKind::Power { r: 0.3 }, TermKind::LogPower { r: 0.25 }];
        for kind in kinds {
            let f = RoofFunction::new(
                vec![
                    sing(0.3, vec![Term { kind, coefficient: 2.0 }], vec![Term { kind, coefficient: 1.0 }]),
                    sing(0.7, vec![Term::log(1.5)], vec![Term { kind, coefficient: 0.5 }]),
                ],
                vec![1.0, -0.5, 0.25],
                20.0,
                DEFAULT_GUARD_BAND,
            )
            .unwrap();
            for &x in &[0.05, 0.2, 0.29, 0.31, 0.5, 0.69, 0.72, 0.95] {
                let v = f.eval_with_derivatives(x, 2).unwrap();
                let e = 1e-5 * 0.01;
                let fp = |y: f64| f.eval_with_derivatives(y, 1).unwrap();
                let d1 = (fp(x + e)[0] - fp(x - e)[0]) / (2.0 * e);
                let d2 = (fp(x + e)[1] - fp(x - e)[1]) / (2.0 * e);
                assert_relative_eq!(v[1], d1, max_relative = 1e-6);
                assert_relative_eq!(v[2], d2, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn missing_blow_up_is_structural() {
        let err = RoofFunction::new(vec![sing(0.5, vec![], vec![Term::log(1.0)])], vec![10.0], 0.0, 1e-12).unwrap_err();
        assert_eq!(err, RoofError::MissingBlowUp { position: 0.5, side: Side::Left });
        // 10 + (x − d)² declared with a singularity at d
        let d = 1.0 - ExactScalar::golden().to_f64();
        let err = RoofFunction::new(vec![sing(d, vec![], vec![])], vec![10.0 + d * d, -2.0 * d, 1.0], 0.0, 1e-12)
            .unwrap_err();
        assert!(matches!(err, RoofError::MissingBlowUp { .. }));
        assert!(matches!(RoofFunction::new(vec![], vec![-5.0], 1.0, 1e-12), Err(RoofError::NotPositive { .. })));
    }

    #[test]
    fn growth_examples() {
        let g = Iet::golden_rotation();
        let canon = RoofFunction::canonical_log(&g).unwrap();
        let cert = check_log_growth(&canon, 1.0, 0.0, 2000).unwrap();
        assert!(cert.passes(), "worst margin {}", cert.worst_margin);
        assert!(cert.worst_margin >= 0.0);

        let koch = RoofFunction::kochergin(&g, TermKind::Log, 2.0, 1.0, 10.0).unwrap();
        assert!(check_log_growth(&koch, 1.0, 0.0, 2000).unwrap().passes());

        let constant = RoofFunction::constant(3.0).unwrap();
        let cert = check_log_growth(&constant, 1.0, 0.0, 100).unwrap();
        assert!(!cert.passes());
        assert!(cert.structural_failure.is_some());

        assert!(matches!(check_log_growth(&canon, 0.0, 0.0, 10), Err(RoofError::BadConstants { .. })));
        assert!(!check_log_growth(&canon, 1.5, 0.0, 100).unwrap().passes());
    }

    #[test]
    fn growth_is_monotone_in_constants() {
        let g = Iet::golden_rotation();
        let koch = RoofFunction::kochergin(&g, TermKind::Power { r: 0.2 }, 1.0, 3.0, 10.0).unwrap();
        let cs = [0.01, 0.1, 0.2, 0.5, 1.0, 3.0];
        let bs = [0.0, 1.0, 100.0];
        for (i, &c) in cs.iter().enumerate() {
            for (j, &b) in bs.iter().enumerate() {
                if check_log_growth(&koch, c, b, 500).unwrap().passes() {
                    for &c2 in &cs[..=i] {
                        for &b2 in &bs[j..] {
                            assert!(check_log_growth(&koch, c2, b2, 500).unwrap().passes());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn pure_log_second_derivative_bound() {
        let g = Iet::rotation(&ExactScalar::from_parts(0, 1, 1, 3, 2)).unwrap();
        let f = RoofFunction::kochergin(&g, TermKind::Log, 0.7, 1.9, 10.0).unwrap();
        let cert = check_log_growth(&f, 0.7, 0.0, 1000).unwrap();
        assert!(cert.passes());
        for s in &cert.samples {
            assert!(s.f2 >= 0.7 / (s.min_distance * s.min_distance));
        }
    }

    #[test]
    fn birkhoff_examples() {
        let g = Iet::golden_rotation();
        let c = RoofFunction::constant(2.5).unwrap();
        let s = birkhoff_sum(&g, &c, &ExactScalar::from_ratio(1, 7), 1000, 2).unwrap();
        assert_eq!(s, vec![2500.0, 0.0, 0.0]);

        let f = RoofFunction::canonical_log(&g).unwrap();
        let a = ExactScalar::golden().to_f64();
        let d = 1.0 - a;
        let s = birkhoff_sum(&g, &f, &ExactScalar::zero(), 2, 0).unwrap();
        let direct = (10.0 - d.ln()) + (10.0 - (a - d).ln());
        assert_relative_eq!(s[0], direct, max_relative = 1e-14);

        // T(1−α − ε) is within ε of 1 − α + α − 1 + ... ; start inside the band
        let near = &(&ExactScalar::one() - &ExactScalar::golden()) + &ExactScalar::from_ratio(1, 1 << 42);
        assert!(matches!(
            birkhoff_sum(&g, &f, &near, 5, 0),
            Err(RoofError::OrbitGuardBand { index: 0, singularity: 0, .. })
        ));
        // find a start whose orbit enters the band at step 3
        let pre = g.inverse().orbit(&near, 3).unwrap()[2].clone();
        assert!(matches!(birkhoff_sum(&g, &f, &pre, 10, 0), Err(RoofError::OrbitGuardBand { index: 3, .. })));
    }

    #[test]
    fn birkhoff_additivity() {
        let g = Iet::golden_rotation();
        let f = RoofFunction::kochergin(&g, TermKind::Log, 2.0, 1.0, 10.0).unwrap();
        let x = ExactScalar::from_ratio(3, 11);
        let (m, n) = (137, 411);
        let total = birkhoff_sum(&g, &f, &x, m + n, 2).unwrap();
        let head = birkhoff_sum(&g, &f, &x, m, 2).unwrap();
        let tail = birkhoff_sum(&g, &f, &crate::orbit::iterate(&g, &x, m), n, 2).unwrap();
        for k in 0..3 {
            assert_relative_eq!(total[k], head[k] + tail[k], max_relative = 1e-10);
        }
    }

    #[test]
    fn conformance_examples() {
        let g = Iet::golden_rotation();
        let f = RoofFunction::canonical_log(&g).unwrap();
        let r = conformance_check(&g, &f, 1.0, 0.0, 500).unwrap();
        assert!(r.discontinuities_covered && r.growth.passes() && r.passes());

        let half = RoofFunction::new(
            vec![Singularity {
                position: 0.5,
                anchor: Some(ExactScalar::from_ratio(1, 2)),
                left: vec![Term::log(1.0)],
                right: vec![Term::log(1.0)],
            }],
            vec![],
            10.0,
            DEFAULT_GUARD_BAND,
        )
        .unwrap();
        let r = conformance_check(&g, &half, 1.0, 0.0, 500).unwrap();
        assert!(!r.discontinuities_covered);
        assert_eq!(r.uncovered, vec![&ExactScalar::one() - &ExactScalar::golden()]);

        let r = conformance_check(&Iet::identity(), &half, 1.0, 0.0, 500).unwrap();
        assert!(r.discontinuities_covered);
    }

    #[test]
    fn spec_round_trip() {
        let g = Iet::golden_rotation();
        let f = RoofFunction::kochergin(&g, TermKind::LogPower { r: 0.5 }, 2.0, 1.0, 10.0).unwrap();
        let text = f.to_spec().to_toml();
        let back = RoofSpec::from_toml(&text).unwrap().build().unwrap();
        assert_eq!(back, f);

        let text = r#"
offset = 10.0
[[terms]]
position = 0.5
side = "both"
kind = "log"
coefficient = 1.0
"#;
        let f = RoofSpec::from_toml(text).unwrap().build().unwrap();
        assert_eq!(f, log_half());
        let bad = "offset = 1.0\n[[terms]]\nposition = 0.5\nside = \"left\"\nkind = \"log\"\ncoefficient = 1.0\n";
        assert!(matches!(
            RoofSpec::from_toml(bad).unwrap().build(),
            Err(RoofError::MissingBlowUp { side: Side::Right, .. })
        ));
    }
}
