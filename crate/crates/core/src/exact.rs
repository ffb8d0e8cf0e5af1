//! Exact arithmetic in a real quadratic field `Q(√d)`.
//!
//! Every IET coordinate in this crate is an [`ExactScalar`], i.e. a number
//! `p + q·√d` with `p, q` arbitrary-precision rationals. Comparison is decided
//! by integer arithmetic only, so orbit iteration never accumulates rounding.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

/// Default radicand: the golden field `Q(√5)`.
pub const DEFAULT_RADICAND: u64 = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("radicand {0} must be an integer >= 2 that is not a perfect square")]
    BadRadicand(u64),
    #[error("cannot parse rational `{0}`")]
    Parse(String),
}

/// Validates a radicand: `d >= 2` and not a perfect square.
pub fn check_radicand(d: u64) -> Result<u64, ScalarError> {
    if d < 2 || d.sqrt() * d.sqrt() == d {
        return Err(ScalarError::BadRadicand(d));
    }
    Ok(d)
}

/// An element `rational + radical·√d` of `Q(√d)`.
///
/// Values whose radical part is zero are plain rationals and combine with
/// values of any field. Combining two genuinely irrational values from
/// different fields is a logic error and panics.
#[derive(Clone)]
pub struct ExactScalar {
    rational: BigRational,
    radical: BigRational,
    // 0 whenever `radical == 0`, so that Eq and Hash agree.
    d: u64,
}

impl ExactScalar {
    pub fn new(rational: BigRational, radical: BigRational, d: u64) -> Self {
        let d = if radical.is_zero() { 0 } else { d };
        ExactScalar { rational, radical, d }
    }

    pub fn from_rational(r: BigRational) -> Self {
        Self::new(r, BigRational::zero(), 0)
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(BigRational::new(num.into(), den.into()))
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    /// `(p/q) + (r/s)·√d`, the config-file form.
    pub fn from_parts(p: i64, q: i64, r: i64, s: i64, d: u64) -> Self {
        Self::new(BigRational::new(p.into(), q.into()), BigRational::new(r.into(), s.into()), d)
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// `√d` itself.
    pub fn sqrt_radicand(d: u64) -> Self {
        Self::new(BigRational::zero(), BigRational::one(), d)
    }

    /// The golden rotation number `(√5 − 1)/2`.
    pub fn golden() -> Self {
        Self::from_parts(-1, 2, 1, 2, 5)
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rational
    }

    pub fn radical_part(&self) -> &BigRational {
        &self.radical
    }

    /// The radicand, or `None` for a plain rational.
    pub fn radicand(&self) -> Option<u64> {
        (self.d != 0).then_some(self.d)
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.radical.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.radical.is_zero()
    }

    fn join_d(&self, other: &Self) -> u64 {
        match (self.d, other.d) {
            (0, d) | (d, 0) => d,
            (a, b) if a == b => a,
            (a, b) => panic!("mixed quadratic fields Q(sqrt {a}) and Q(sqrt {b})"),
        }
    }

    /// Sign of the value: -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        let p = sign_of(&self.rational);
        let q = sign_of(&self.radical);
        if q == 0 {
            return p;
        }
        if p == 0 || p == q {
            return q;
        }
        // p and q have opposite signs: compare p^2 with q^2 d in integers.
        let (a, b) = (self.rational.numer(), self.rational.denom());
        let (c, e) = (self.radical.numer(), self.radical.denom());
        let lhs = a * a * e * e;
        let rhs = c * c * b * b * BigInt::from(self.d);
        match lhs.cmp(&rhs) {
            Ordering::Greater => p,
            Ordering::Less => q,
            Ordering::Equal => unreachable!("d is not a perfect square"),
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    /// Algebraic conjugate `p − q√d`.
    pub fn conjugate(&self) -> Self {
        Self::new(self.rational.clone(), -&self.radical, self.d)
    }

    /// Field norm `p² − q²d`.
    pub fn norm(&self) -> BigRational {
        &self.rational * &self.rational
            - &self.radical * &self.radical * BigRational::from_integer(BigInt::from(self.d))
    }

    pub fn checked_div(&self, rhs: &Self) -> Option<Self> {
        if rhs.is_zero() {
            return None;
        }
        let d = self.join_d(rhs);
        let norm = rhs.norm();
        let num = self * &rhs.conjugate();
        Some(Self::new(num.rational / &norm, num.radical / norm, d))
    }

    /// Nearest double, computed without catastrophic cancellation.
    ///
    /// When the two parts have opposite signs the value is rewritten as
    /// `(p² − q²d) / (p − q√d)`, whose denominator has no cancellation.
    pub fn to_f64(&self) -> f64 {
        let p = sign_of(&self.rational);
        let q = sign_of(&self.radical);
        let sqrt_d = (self.d as f64).sqrt();
        let rat = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
        if q == 0 {
            return rat(&self.rational);
        }
        if p == 0 || p == q {
            return rat(&self.rational) + rat(&self.radical) * sqrt_d;
        }
        let denom = rat(&self.rational) - rat(&self.radical) * sqrt_d;
        rat(&self.norm()) / denom
    }

    /// Largest integer not exceeding the value.
    pub fn floor(&self) -> BigInt {
        let approx = self.to_f64().floor();
        let mut k = BigInt::from(approx as i64);
        // correct for the rare double rounding across an integer
        while Self::from_rational(BigRational::from_integer(k.clone())) > *self {
            k -= 1;
        }
        while Self::from_rational(BigRational::from_integer(&k + 1)) <= *self {
            k += 1;
        }
        k
    }

    /// Parses the pair-of-rationals text form, e.g. `("-1/2", "1/2")`.
    pub fn parse_pair(rational: &str, radical: &str, d: u64) -> Result<Self, ScalarError> {
        let r = parse_rational(rational)?;
        let s = parse_rational(radical)?;
        Ok(Self::new(r, s, d))
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational, ScalarError> {
    let t = s.trim();
    if let Ok(r) = BigRational::from_str(t) {
        return Ok(r);
    }
    BigInt::from_str(t).map(BigRational::from_integer).map_err(|_| ScalarError::Parse(s.to_string()))
}

fn sign_of(r: &BigRational) -> i32 {
    match r.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

impl PartialEq for ExactScalar {
    fn eq(&self, other: &Self) -> bool {
        if self.d != other.d {
            self.join_d(other);
        }
        self.rational == other.rational && self.radical == other.radical
    }
}

impl Eq for ExactScalar {}

impl Hash for ExactScalar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rational.hash(state);
        self.radical.hash(state);
        self.d.hash(state);
    }
}

impl PartialOrd for ExactScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.radical == other.radical {
            return self.rational.cmp(&other.rational);
        }
        (self - other).signum().cmp(&0)
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.radical.is_zero() {
            write!(f, "{}", self.rational)
        } else if self.rational.is_zero() {
            write!(f, "{}*sqrt({})", self.radical, self.d)
        } else {
            write!(f, "{} + {}*sqrt({})", self.rational, self.radical, self.d)
        }
    }
}

impl<'a> Add<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: &ExactScalar) -> ExactScalar {
        let d = self.join_d(rhs);
        ExactScalar::new(&self.rational + &rhs.rational, &self.radical + &rhs.radical, d)
    }
}

impl<'a> Sub<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn sub(self, rhs: &ExactScalar) -> ExactScalar {
        let d = self.join_d(rhs);
        ExactScalar::new(&self.rational - &rhs.rational, &self.radical - &rhs.radical, d)
    }
}

impl<'a> Mul<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: &ExactScalar) -> ExactScalar {
        let d = self.join_d(rhs);
        let dd = BigRational::from_integer(BigInt::from(d));
        let rational = &self.rational * &rhs.rational + &self.radical * &rhs.radical * dd;
        let radical = &self.rational * &rhs.radical + &self.radical * &rhs.rational;
        ExactScalar::new(rational, radical, d)
    }
}

impl<'a> Div<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn div(self, rhs: &ExactScalar) -> ExactScalar {
        self.checked_div(rhs).expect("division by zero")
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar::new(-&self.rational, -&self.radical, self.d)
    }
}

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        -&self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $m(self, rhs: ExactScalar) -> ExactScalar {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $m(self, rhs: &ExactScalar) -> ExactScalar {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<ExactScalar> for &'a ExactScalar {
            type Output = ExactScalar;
            fn $m(self, rhs: ExactScalar) -> ExactScalar {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl From<i64> for ExactScalar {
    fn from(n: i64) -> Self {
        ExactScalar::from_int(n)
    }
}
