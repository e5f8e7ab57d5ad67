//! Scalar fields used by the operator layer.
//!
//! Two modes exist: exact complex rationals ([`ExactComplex`]) for every
//! construction and certificate check, and double-precision complex floats
//! ([`Complex64`]) for the iterative solver. Operators are generic over
//! [`Scalar`], so combining modes is a type error; the dynamic
//! [`AnyOperator`](crate::io::AnyOperator) wrapper reports it as
//! [`Error::ModeMismatch`](crate::Error::ModeMismatch).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::psd;

/// Which arithmetic an operator carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

/// Complex number with arbitrary-precision rational parts.
///
/// Both parts are [`BigRational`], which keeps values in lowest terms with a
/// positive denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactComplex {
    pub re: BigRational,
    pub im: BigRational,
}

impl ExactComplex {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        Self { re, im: BigRational::zero() }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::real(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num / den` as a real value. Panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Self {
        Self::real(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -&self.im }
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        Self { re: &self.re * r, im: &self.im * r }
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return None;
        }
        Some(Self { re: &self.re / &n, im: -(&self.im / &n) })
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Formats a rational as `"p/q"`, always with an explicit denominator.
pub fn format_ratio(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"p/q"` or a bare integer `"p"`.
pub fn parse_ratio(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Format(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

impl fmt::Display for ExactComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "{} - {}i", self.re, -&self.im)
        } else {
            write!(f, "{} + {}i", self.re, self.im)
        }
    }
}

impl Add for ExactComplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl<'a> Add<&'a ExactComplex> for &'a ExactComplex {
    type Output = ExactComplex;
    fn add(self, rhs: &ExactComplex) -> ExactComplex {
        ExactComplex { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub for ExactComplex {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl<'a> Sub<&'a ExactComplex> for &'a ExactComplex {
    type Output = ExactComplex;
    fn sub(self, rhs: &ExactComplex) -> ExactComplex {
        ExactComplex { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Mul for ExactComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<'a> Mul<&'a ExactComplex> for &'a ExactComplex {
    type Output = ExactComplex;
    fn mul(self, rhs: &ExactComplex) -> ExactComplex {
        if self.im.is_zero() && rhs.im.is_zero() {
            return ExactComplex::real(&self.re * &rhs.re);
        }
        ExactComplex {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Neg for ExactComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self { re: -self.re, im: -self.im }
    }
}

impl Zero for ExactComplex {
    fn zero() -> Self {
        Self::real(BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for ExactComplex {
    fn one() -> Self {
        Self::real(BigRational::one())
    }
}

/// Field interface shared by exact and float operators.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// Real companion field (priors, traces, objective values).
    type Real: Clone + fmt::Debug + PartialEq + Send + Sync + 'static;

    const MODE: Mode;

    fn conj(&self) -> Self;
    fn from_real(r: &Self::Real) -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn real_part(&self) -> Self::Real;
    fn imag_part(&self) -> Self::Real;
    fn to_c64(&self) -> Complex64;
    fn real_to_f64(r: &Self::Real) -> f64;
    /// Equality within `tol`; the exact mode ignores `tol`.
    fn close_to(&self, other: &Self, tol: f64) -> bool;
    fn real_close(a: &Self::Real, b: &Self::Real, tol: f64) -> bool;
    fn real_is_positive(r: &Self::Real) -> bool;
    fn real_from_rational(r: &BigRational) -> Self::Real;
    /// Mode-appropriate PSD test: exact elimination, or minimum eigenvalue
    /// `≥ -1e-10` for floats.
    fn is_psd(op: &Operator<Self>) -> bool;
}

impl Scalar for ExactComplex {
    type Real = BigRational;
    const MODE: Mode = Mode::Exact;

    fn conj(&self) -> Self {
        ExactComplex::conj(self)
    }
    fn from_real(r: &BigRational) -> Self {
        Self::real(r.clone())
    }
    fn from_rational(r: &BigRational) -> Self {
        Self::real(r.clone())
    }
    fn real_part(&self) -> BigRational {
        self.re.clone()
    }
    fn imag_part(&self) -> BigRational {
        self.im.clone()
    }
    fn to_c64(&self) -> Complex64 {
        ExactComplex::to_c64(self)
    }
    fn real_to_f64(r: &BigRational) -> f64 {
        ratio_to_f64(r)
    }
    fn close_to(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
    fn real_close(a: &BigRational, b: &BigRational, _tol: f64) -> bool {
        a == b
    }
    fn real_is_positive(r: &BigRational) -> bool {
        r.is_positive()
    }
    fn real_from_rational(r: &BigRational) -> BigRational {
        r.clone()
    }
    fn is_psd(op: &Operator<Self>) -> bool {
        psd::is_psd_exact(op).psd
    }
}

impl Scalar for Complex64 {
    type Real = f64;
    const MODE: Mode = Mode::Float;

    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn from_real(r: &f64) -> Self {
        Complex64::new(*r, 0.0)
    }
    fn from_rational(r: &BigRational) -> Self {
        Complex64::new(ratio_to_f64(r), 0.0)
    }
    fn real_part(&self) -> f64 {
        self.re
    }
    fn imag_part(&self) -> f64 {
        self.im
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn real_to_f64(r: &f64) -> f64 {
        *r
    }
    fn close_to(&self, other: &Self, tol: f64) -> bool {
        (self - other).norm() <= tol
    }
    fn real_close(a: &f64, b: &f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }
    fn real_is_positive(r: &f64) -> bool {
        *r > 0.0
    }
    fn real_from_rational(r: &BigRational) -> f64 {
        ratio_to_f64(r)
    }
    fn is_psd(op: &Operator<Self>) -> bool {
        psd::is_psd_within(op, FLOAT_PSD_TOL).psd
    }
}

/// Eigenvalue tolerance used by [`Scalar::is_psd`] in float mode.
pub const FLOAT_PSD_TOL: f64 = 1e-10;

/// Shorthand for the rational `num / den`.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_stay_reduced() {
        let r = rat(6, -8);
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(4));
        assert_eq!(format_ratio(&r), "-3/4");
    }

    #[test]
    fn parse_accepts_both_forms() {
        assert_eq!(parse_ratio("7/8").unwrap(), rat(7, 8));
        assert_eq!(parse_ratio("-3").unwrap(), rat(-3, 1));
        assert_eq!(parse_ratio(" 2/4 ").unwrap(), rat(1, 2));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("0.5").is_err());
    }

    #[test]
    fn complex_arithmetic() {
        let a = ExactComplex::new(rat(1, 2), rat(1, 3));
        let b = ExactComplex::new(rat(-1, 4), rat(2, 1));
        let p = &a * &b;
        assert_eq!(p.re, rat(-1, 8) - rat(2, 3));
        assert_eq!(p.im, rat(1, 1) - rat(1, 12));
        let inv = a.inv().unwrap();
        assert_eq!(&a * &inv, ExactComplex::one());
        assert!(ExactComplex::zero().inv().is_none());
        assert_eq!(a.conj().im, rat(-1, 3));
    }
}
