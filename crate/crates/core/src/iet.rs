//! Right-continuous interval exchange transformations on `[0, 1)`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{check_radicand, ExactScalar, ScalarError, DEFAULT_RADICAND};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IetError {
    #[error("expected {expected} translations for {cells} cells, got {got}")]
    LengthMismatch { cells: usize, expected: usize, got: usize },
    #[error("breakpoints must start at 0, end at 1 and increase strictly (problem at index {0})")]
    BadBreakpoints(usize),
    #[error("image of cell {0} leaves [0, 1)")]
    ImageOutOfRange(usize),
    #[error("images of cells {first} and {second} overlap")]
    Overlap { first: usize, second: usize },
    #[error("gap in the image between cells {first} and {second}")]
    Gap { first: usize, second: usize },
    #[error("images do not cover [0, 1)")]
    NotCovering,
    #[error("point {0} outside the domain")]
    Domain(String),
    #[error("Keane condition undefined: the map has no discontinuities")]
    KeaneUndefined,
    #[error("coordinate does not lie in Q(sqrt {0})")]
    WrongField(u64),
    #[error("bad interval [{0}, {1})")]
    BadInterval(String, String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// Half-open interval `[left, right)` inside `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub left: ExactScalar,
    pub right: ExactScalar,
}

impl Interval {
    pub fn new(left: ExactScalar, right: ExactScalar) -> Result<Self, IetError> {
        if left >= right || left.signum() < 0 || right > ExactScalar::one() {
            return Err(IetError::BadInterval(left.to_string(), right.to_string()));
        }
        Ok(Interval { left, right })
    }

    pub fn unit() -> Self {
        Interval { left: ExactScalar::zero(), right: ExactScalar::one() }
    }

    pub fn contains(&self, x: &ExactScalar) -> bool {
        &self.left <= x && x < &self.right
    }

    /// Membership of a left neighbourhood of `y`, i.e. `y ∈ (left, right]`.
    pub fn contains_left_of(&self, y: &ExactScalar) -> bool {
        &self.left < y && y <= &self.right
    }

    pub fn length(&self) -> ExactScalar {
        &self.right - &self.left
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.left, self.right)
    }
}

/// Witness that the finite-depth Keane check failed:
/// `T^n d_j = T^m d_k` (with `m = 0` meaning the discontinuity `d_k` itself).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeaneViolation {
    pub j: usize,
    pub n: usize,
    pub k: usize,
    pub m: usize,
}

/// Outcome of [`Iet::is_keane_to_depth`]. `Certified` only speaks for the
/// iterates that were actually examined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KeaneReport {
    Certified { depth: usize },
    Violated(KeaneViolation),
}

impl KeaneReport {
    pub fn holds(&self) -> bool {
        matches!(self, KeaneReport::Certified { .. })
    }
}

/// A right-continuous IET: on `[a_{i-1}, a_i)` the map is `x ↦ x + σ_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Iet {
    d: u64,
    breakpoints: Vec<ExactScalar>,
    translations: Vec<ExactScalar>,
    // inverse data: image cells sorted by left end, with the source cell index
    image_starts: Vec<ExactScalar>,
    image_cells: Vec<usize>,
}

impl Iet {
    /// Builds an IET over `Q(√5)`.
    pub fn new(breakpoints: Vec<ExactScalar>, translations: Vec<ExactScalar>) -> Result<Self, IetError> {
        Self::with_radicand(DEFAULT_RADICAND, breakpoints, translations)
    }

    pub fn with_radicand(
        d: u64,
        breakpoints: Vec<ExactScalar>,
        translations: Vec<ExactScalar>,
    ) -> Result<Self, IetError> {
        let d = check_radicand(d)?;
        if breakpoints.len() < 2 {
            return Err(IetError::BadBreakpoints(0));
        }
        let cells = breakpoints.len() - 1;
        if translations.len() != cells {
            return Err(IetError::LengthMismatch { cells, expected: cells, got: translations.len() });
        }
        for v in breakpoints.iter().chain(&translations) {
            if let Some(e) = v.radicand() {
                if e != d {
                    return Err(IetError::WrongField(e));
                }
            }
        }
        if !breakpoints[0].is_zero() {
            return Err(IetError::BadBreakpoints(0));
        }
        if breakpoints[cells] != ExactScalar::one() {
            return Err(IetError::BadBreakpoints(cells));
        }
        for i in 1..=cells {
            if breakpoints[i] <= breakpoints[i - 1] {
                return Err(IetError::BadBreakpoints(i));
            }
        }

        let mut images: Vec<(ExactScalar, ExactScalar, usize)> = (0..cells)
            .map(|i| (&breakpoints[i] + &translations[i], &breakpoints[i + 1] + &translations[i], i))
            .collect();
        for (l, r, i) in &images {
            if l.signum() < 0 || r > &ExactScalar::one() {
                return Err(IetError::ImageOutOfRange(*i));
            }
        }
        images.sort_by(|a, b| a.0.cmp(&b.0));
        if !images[0].0.is_zero() {
            return Err(IetError::NotCovering);
        }
        for w in images.windows(2) {
            match w[0].1.cmp(&w[1].0) {
                std::cmp::Ordering::Greater => {
                    return Err(IetError::Overlap { first: w[0].2.min(w[1].2), second: w[0].2.max(w[1].2) })
                }
                std::cmp::Ordering::Less => {
                    return Err(IetError::Gap { first: w[0].2.min(w[1].2), second: w[0].2.max(w[1].2) })
                }
                std::cmp::Ordering::Equal => {}
            }
        }
        if images[cells - 1].1 != ExactScalar::one() {
            return Err(IetError::NotCovering);
        }
        let image_starts = images.iter().map(|t| t.0.clone()).collect();
        let image_cells = images.iter().map(|t| t.2).collect();
        Ok(Iet { d, breakpoints, translations, image_starts, image_cells })
    }

    pub fn identity() -> Self {
        Self::new(vec![ExactScalar::zero(), ExactScalar::one()], vec![ExactScalar::zero()]).expect("identity is valid")
    }

    /// Rotation `x ↦ x + β mod 1` for `0 < β < 1`.
    pub fn rotation(beta: &ExactScalar) -> Result<Self, IetError> {
        let d = beta.radicand().unwrap_or(DEFAULT_RADICAND);
        let one = ExactScalar::one();
        if beta.signum() <= 0 || beta >= &one {
            return Err(IetError::Domain(beta.to_string()));
        }
        let cut = &one - beta;
        Self::with_radicand(d, vec![ExactScalar::zero(), cut, one.clone()], vec![beta.clone(), beta - &one])
    }

    /// Rotation by the golden number `(√5 − 1)/2`.
    pub fn golden_rotation() -> Self {
        Self::rotation(&ExactScalar::golden()).expect("golden rotation is valid")
    }

    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn breakpoints(&self) -> &[ExactScalar] {
        &self.breakpoints
    }

    pub fn translations(&self) -> &[ExactScalar] {
        &self.translations
    }

    pub fn num_cells(&self) -> usize {
        self.translations.len()
    }

    fn check_domain(&self, x: &ExactScalar) -> Result<(), IetError> {
        if x.signum() < 0 || x >= &ExactScalar::one() {
            return Err(IetError::Domain(x.to_string()));
        }
        Ok(())
    }

    /// Index of the cell `[a_i, a_{i+1})` containing `x ∈ [0, 1)`.
    pub fn cell_of(&self, x: &ExactScalar) -> usize {
        self.breakpoints.partition_point(|b| b <= x) - 1
    }

    /// Index of the cell whose closure contains a left neighbourhood of `y ∈ (0, 1]`.
    pub fn cell_left_of(&self, y: &ExactScalar) -> usize {
        self.breakpoints.partition_point(|b| b < y) - 1
    }

    pub fn apply(&self, x: &ExactScalar) -> Result<ExactScalar, IetError> {
        self.check_domain(x)?;
        Ok(self.apply_unchecked(x))
    }

    /// `apply` without the domain check, for hot loops over known orbits.
    pub fn apply_unchecked(&self, x: &ExactScalar) -> ExactScalar {
        x + &self.translations[self.cell_of(x)]
    }

    /// `lim_{x→y⁻} T x`, a value in `[0, 1]`.
    pub fn apply_left_limit(&self, y: &ExactScalar) -> Result<ExactScalar, IetError> {
        if y.signum() <= 0 || y > &ExactScalar::one() {
            return Err(IetError::Domain(y.to_string()));
        }
        Ok(self.left_limit_unchecked(y))
    }

    pub fn left_limit_unchecked(&self, y: &ExactScalar) -> ExactScalar {
        y + &self.translations[self.cell_left_of(y)]
    }

    pub fn apply_inverse(&self, x: &ExactScalar) -> Result<ExactScalar, IetError> {
        self.check_domain(x)?;
        Ok(self.inverse_unchecked(x))
    }

    pub fn inverse_unchecked(&self, x: &ExactScalar) -> ExactScalar {
        let k = self.image_starts.partition_point(|b| b <= x) - 1;
        x - &self.translations[self.image_cells[k]]
    }

    /// The inverse map as an IET in its own right.
    pub fn inverse(&self) -> Iet {
        let mut bps: Vec<ExactScalar> = self.image_starts.clone();
        bps.push(ExactScalar::one());
        let trs = self.image_cells.iter().map(|&i| -&self.translations[i]).collect();
        Iet::with_radicand(self.d, bps, trs).expect("inverse of a valid IET is valid")
    }

    /// Interior breakpoints where the left limit differs from the value.
    pub fn discontinuities(&self) -> Vec<ExactScalar> {
        (1..self.num_cells())
            .filter(|&i| self.translations[i - 1] != self.translations[i])
            .map(|i| self.breakpoints[i].clone())
            .collect()
    }

    pub fn is_discontinuity(&self, x: &ExactScalar) -> bool {
        match self.breakpoints.binary_search(x) {
            Ok(i) if i > 0 && i < self.num_cells() => self.translations[i - 1] != self.translations[i],
            _ => false,
        }
    }

    /// `(T x, T² x, …, Tⁿ x)`.
    pub fn orbit(&self, x: &ExactScalar, n: usize) -> Result<Vec<ExactScalar>, IetError> {
        self.check_domain(x)?;
        let mut out = Vec::with_capacity(n);
        let mut cur = x.clone();
        for _ in 0..n {
            cur = self.apply_unchecked(&cur);
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Finite-depth check of the one-sided Keane condition: the forward orbits
    /// `{Tⁿ d_j : 1 ≤ n ≤ depth}` are pairwise disjoint, never revisit a
    /// discontinuity and never repeat.
    pub fn is_keane_to_depth(&self, depth: usize) -> Result<KeaneReport, IetError> {
        let discs = self.discontinuities();
        if discs.is_empty() {
            return Err(IetError::KeaneUndefined);
        }
        let mut seen: HashMap<ExactScalar, (usize, usize)> = HashMap::new();
        for (k, d) in discs.iter().enumerate() {
            seen.insert(d.clone(), (k, 0));
        }
        let mut current = discs.clone();
        for n in 1..=depth {
            for (j, p) in current.iter_mut().enumerate() {
                *p = self.apply_unchecked(p);
                if let Some(&(k, m)) = seen.get(p) {
                    return Ok(KeaneReport::Violated(KeaneViolation { j, n, k, m }));
                }
                seen.insert(p.clone(), (j, n));
            }
        }
        Ok(KeaneReport::Certified { depth })
    }

    /// Looks for a breakpoint `a_i` with `T^p a_i = a_i`, `p ≤ depth`.
    /// `None` is an inconclusive certificate to the given depth.
    pub fn detect_periodicity(&self, depth: usize) -> Option<(ExactScalar, usize)> {
        for start in &self.breakpoints[..self.num_cells()] {
            let mut cur = start.clone();
            for p in 1..=depth {
                cur = self.apply_unchecked(&cur);
                if &cur == start {
                    return Some((start.clone(), p));
                }
            }
        }
        None
    }

    pub fn to_spec(&self) -> IetSpec {
        IetSpec {
            d: self.d,
            breakpoints: self.breakpoints.iter().map(ScalarText::from).collect(),
            translations: self.translations.iter().map(ScalarText::from).collect(),
        }
    }

    pub fn from_spec(spec: &IetSpec) -> Result<Self, IetError> {
        let conv = |v: &[ScalarText]| -> Result<Vec<ExactScalar>, IetError> {
            v.iter().map(|s| s.to_scalar(spec.d).map_err(IetError::from)).collect()
        };
        Self::with_radicand(spec.d, conv(&spec.breakpoints)?, conv(&spec.translations)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_spec()).expect("IET description serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, IetFileError> {
        let spec: IetSpec = toml::from_str(text)?;
        Ok(Self::from_spec(&spec)?)
    }
}

#[derive(Debug, Error)]
pub enum IetFileError {
    #[error("malformed IET file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Iet(#[from] IetError),
}

/// Text form of an exact scalar: `["p/q", "r/s"]` meaning `p/q + (r/s)·√d`,
/// or five integers `[p, q, r, s, d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarText {
    Pair([String; 2]),
    Parts([i64; 5]),
}

impl ScalarText {
    pub fn to_scalar(&self, d: u64) -> Result<ExactScalar, ScalarError> {
        match self {
            ScalarText::Pair([r, s]) => ExactScalar::parse_pair(r, s, d),
            ScalarText::Parts([p, q, r, s, dd]) => {
                if *q == 0 || *s == 0 {
                    return Err(ScalarError::Parse(format!("{p}/{q} + {r}/{s} sqrt {dd}")));
                }
                if *r != 0 && *dd as u64 != d {
                    return Err(ScalarError::BadRadicand(*dd as u64));
                }
                Ok(ExactScalar::from_parts(*p, *q, *r, *s, d))
            }
        }
    }
}

impl From<&ExactScalar> for ScalarText {
    fn from(x: &ExactScalar) -> Self {
        ScalarText::Pair([x.rational_part().to_string(), x.radical_part().to_string()])
    }
}

/// Serializable IET description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IetSpec {
    #[serde(default = "default_d")]
    pub d: u64,
    pub breakpoints: Vec<ScalarText>,
    pub translations: Vec<ScalarText>,
}

fn default_d() -> u64 {
    DEFAULT_RADICAND
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> ExactScalar {
        ExactScalar::from_ratio(n, d)
    }

    fn rot3() -> Iet {
        Iet::new(vec![q(0, 1), q(2, 3), q(1, 1)], vec![q(1, 3), q(-2, 3)]).unwrap()
    }

    fn alpha() -> ExactScalar {
        ExactScalar::golden()
    }

    #[test]
    fn construction_examples() {
        assert_eq!(rot3(), Iet::rotation(&q(1, 3)).unwrap());
        let id = Iet::new(vec![q(0, 1), q(1, 1)], vec![q(0, 1)]).unwrap();
        assert_eq!(id, Iet::identity());
        let err = Iet::new(vec![q(0, 1), q(2, 3), q(1, 1)], vec![q(1, 3), q(1, 3)]).unwrap_err();
        assert_eq!(err, IetError::ImageOutOfRange(1));
        let err = Iet::new(vec![q(0, 1), q(1, 2), q(1, 1)], vec![q(1, 4), q(-1, 2)]).unwrap_err();
        assert_eq!(err, IetError::Overlap { first: 0, second: 1 });
        let err = Iet::new(vec![q(0, 1), q(1, 2), q(1, 1)], vec![q(0, 1), q(0, 1), q(0, 1)]).unwrap_err();
        assert!(matches!(err, IetError::LengthMismatch { .. }));
    }

    #[test]
    fn overlapping_images_name_cell_pair() {
        // cell images [1/4, 1/2) and [1/2, 1) would need cell 0 at 0; instead both start at 0
        let err = Iet::new(vec![q(0, 1), q(1, 2), q(1, 1)], vec![q(0, 1), q(-1, 2)]).unwrap_err();
        assert_eq!(err, IetError::Overlap { first: 0, second: 1 });
    }

    #[test]
    fn apply_examples() {
        let t = rot3();
        assert_eq!(t.apply(&q(1, 2)).unwrap(), q(5, 6));
        assert_eq!(t.apply(&q(2, 3)).unwrap(), q(0, 1));
        assert_eq!(Iet::golden_rotation().apply(&q(0, 1)).unwrap(), alpha());
        assert!(t.apply(&q(1, 1)).is_err());
        assert!(t.apply(&q(-1, 5)).is_err());
    }

    #[test]
    fn left_limit_examples() {
        let t = rot3();
        assert_eq!(t.apply_left_limit(&q(2, 3)).unwrap(), q(1, 1));
        assert_eq!(t.apply_left_limit(&q(1, 2)).unwrap(), q(5, 6));
        assert_eq!(Iet::identity().apply_left_limit(&q(1, 1)).unwrap(), q(1, 1));
        assert!(t.apply_left_limit(&q(0, 1)).is_err());
    }

    #[test]
    fn discontinuity_examples() {
        assert_eq!(rot3().discontinuities(), vec![q(2, 3)]);
        assert!(Iet::identity().discontinuities().is_empty());
        // reverse the blocks [0,1/4), [1/4,1/2), [1/2,1)
        let t = Iet::new(vec![q(0, 1), q(1, 4), q(1, 2), q(1, 1)], vec![q(3, 4), q(1, 4), q(-1, 2)]).unwrap();
        let expect: Vec<_> =
            [q(1, 4), q(1, 2)].into_iter().filter(|b| t.apply_left_limit(b).unwrap() != t.apply(b).unwrap()).collect();
        assert_eq!(t.discontinuities(), expect);
        assert_eq!(expect.len(), 2);
        // a breakpoint with equal translations on both sides is not a jump
        let fake = Iet::new(vec![q(0, 1), q(1, 3), q(2, 3), q(1, 1)], vec![q(1, 3), q(1, 3), q(-2, 3)]).unwrap();
        assert_eq!(fake.discontinuities(), vec![q(2, 3)]);
    }

    #[test]
    fn orbit_examples() {
        assert_eq!(rot3().orbit(&q(2, 3), 3).unwrap(), vec![q(0, 1), q(1, 3), q(2, 3)]);
        let x = q(3, 7);
        assert_eq!(Iet::identity().orbit(&x, 2).unwrap(), vec![x.clone(), x]);
        let a = alpha();
        let one = q(1, 1);
        let g = Iet::golden_rotation();
        let got = g.orbit(&(&one - &a), 4).unwrap();
        let two = q(2, 1);
        let three = q(3, 1);
        assert_eq!(got, vec![q(0, 1), a.clone(), &(&two * &a) - &one, &(&three * &a) - &one]);
    }

    #[test]
    fn keane_examples() {
        assert!(Iet::golden_rotation().is_keane_to_depth(1000).unwrap().holds());
        let r = rot3().is_keane_to_depth(3).unwrap();
        assert_eq!(r, KeaneReport::Violated(KeaneViolation { j: 0, n: 3, k: 0, m: 0 }));
        assert_eq!(Iet::identity().is_keane_to_depth(5), Err(IetError::KeaneUndefined));
    }

    #[test]
    fn periodicity_examples() {
        assert_eq!(rot3().detect_periodicity(5), Some((q(0, 1), 3)));
        assert_eq!(Iet::golden_rotation().detect_periodicity(10_000), None);
        assert_eq!(Iet::identity().detect_periodicity(1), Some((q(0, 1), 1)));
    }

    #[test]
    fn inverse_map() {
        let g = Iet::golden_rotation();
        let inv = g.inverse();
        let x = q(1, 5);
        assert_eq!(inv.apply(&g.apply(&x).unwrap()).unwrap(), x);
        assert_eq!(g.apply_inverse(&g.apply(&x).unwrap()).unwrap(), x);
    }

    #[test]
    fn toml_round_trip() {
        let g = Iet::golden_rotation();
        let text = g.to_toml();
        assert_eq!(Iet::from_toml(&text).unwrap(), g);
        let parts =
            "d = 5\nbreakpoints = [[0,1,0,1,5],[3,2,-1,2,5],[1,1,0,1,5]]\ntranslations = [[-1,2,1,2,5],[-3,2,1,2,5]]\n";
        assert_eq!(Iet::from_toml(parts).unwrap(), g);
        assert!(Iet::from_toml("d = 5\nbreakpoints = 3").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn inverse_round_trip(p in 0i64..997, k in 1i64..40) {
                let g = Iet::golden_rotation();
                let x = q(p, 997);
                let mut y = x.clone();
                for _ in 0..k { y = g.apply(&y).unwrap(); }
                for _ in 0..k { y = g.apply_inverse(&y).unwrap(); }
                prop_assert_eq!(y, x.clone());
                prop_assert_eq!(g.apply(&g.apply_inverse(&x).unwrap()).unwrap(), x);
            }

            #[test]
            fn left_limit_matches_value_at_continuity_points(p in 1i64..997) {
                let g = Iet::golden_rotation();
                let y = q(p, 997);
                prop_assume!(!g.is_discontinuity(&y));
                prop_assert_eq!(g.apply_left_limit(&y).unwrap(), g.apply(&y).unwrap());
            }

            #[test]
            fn rational_rotation_is_periodic(num in 1i64..12, den in 2i64..13, p in 0i64..50) {
                prop_assume!(num < den);
                let t = Iet::rotation(&q(num, den)).unwrap();
                let x = q(p, 50);
                let g = num_integer::gcd(num, den);
                let period = (den / g) as usize;
                let orb = t.orbit(&x, period).unwrap();
                prop_assert_eq!(&orb[period - 1], &x);
            }

            #[test]
            fn measure_preserved(l1 in 1i64..20, l2 in 1i64..20, l3 in 1i64..20) {
                // permutation (3 1 2) of three blocks
                let s = l1 + l2 + l3;
                let t = Iet::new(
                    vec![q(0, 1), q(l1, s), q(l1 + l2, s), q(1, 1)],
                    vec![q(l3, s), q(l3, s), q(-(l1 + l2), s)],
                ).unwrap();
                for i in 0..3 {
                    let a = &t.breakpoints()[i];
                    let b = &t.breakpoints()[i + 1];
                    let img_len = &(b + &t.translations()[i]) - &(a + &t.translations()[i]);
                    prop_assert_eq!(img_len, b - a);
                }
            }
        }
    }
}
