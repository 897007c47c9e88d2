//! Elements of `Q_p` with tracked absolute precision.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::ringcore::{mod_inverse, pow_p, valuation, PadicInt};

/// `p^val · unit` known modulo `p^(val + rel)`; the zero class has `rel = 0`
/// and is known modulo `p^val`.
#[derive(Clone, PartialEq, Eq)]
pub struct Qp {
    p: u64,
    val: i64,
    rel: u32,
    unit: BigInt,
}

impl fmt::Debug for Qp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "O({}^{})", self.p, self.val)
        } else {
            write!(f, "{}^{} * {} + O({}^{})", self.p, self.val, self.unit, self.p, self.abs_precision())
        }
    }
}

impl fmt::Display for Qp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Qp {
    /// `p^shift · n` known modulo `p^abs`.
    pub fn from_scaled(p: u64, n: &BigInt, shift: i64, abs: i64) -> Self {
        if abs <= shift {
            return Self::zero(p, abs);
        }
        let width = (abs - shift) as u32;
        let n = n.mod_floor(&pow_p(p, width));
        match valuation(&n, p) {
            None => Self::zero(p, abs),
            Some(v) => {
                let rel = width - v;
                let unit = (n / pow_p(p, v)).mod_floor(&pow_p(p, rel));
                Qp { p, val: shift + v as i64, rel, unit }
            }
        }
    }

    pub fn zero(p: u64, abs: i64) -> Self {
        Qp { p, val: abs, rel: 0, unit: BigInt::zero() }
    }

    pub fn from_int(p: u64, n: &BigInt, abs: i64) -> Self {
        Self::from_scaled(p, n, 0, abs)
    }

    pub fn from_i64(p: u64, n: i64, abs: i64) -> Self {
        Self::from_int(p, &BigInt::from(n), abs)
    }

    pub fn from_padic(x: &PadicInt) -> Self {
        Self::from_int(x.p(), x.residue(), x.precision() as i64)
    }

    /// A rational number, known to `rel` digits beyond its valuation.
    pub fn from_rational(p: u64, r: &BigRational, rel: u32) -> Self {
        if r.is_zero() {
            return Self::zero(p, rel as i64);
        }
        let vn = valuation(r.numer(), p).unwrap_or(0) as i64;
        let vd = valuation(r.denom(), p).unwrap_or(0) as i64;
        let m = pow_p(p, rel);
        let num = r.numer() / pow_p(p, vn as u32);
        let den = r.denom() / pow_p(p, vd as u32);
        let inv = mod_inverse(&den, &m).expect("p-free denominator");
        Qp { p, val: vn - vd, rel, unit: (num * inv).mod_floor(&m) }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.rel == 0
    }

    /// Valuation; for the zero class, the absolute precision.
    pub fn valuation(&self) -> i64 {
        self.val
    }

    pub fn abs_precision(&self) -> i64 {
        self.val + self.rel as i64
    }

    pub fn rel_precision(&self) -> u32 {
        self.rel
    }

    /// The unit part, meaningful modulo `p^rel`.
    pub fn unit(&self) -> &BigInt {
        &self.unit
    }

    /// Lowers the absolute precision to at most `abs`.
    pub fn truncate(&self, abs: i64) -> Self {
        if abs >= self.abs_precision() {
            return self.clone();
        }
        Self::from_scaled(self.p, &self.unit, self.val, abs)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.p == other.p {
            Ok(())
        } else {
            Err(Error::Config(format!("mismatched primes {} and {}", self.p, other.p)))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let abs = self.abs_precision().min(other.abs_precision());
        let base = self.val.min(other.val).min(abs);
        let lift = |x: &Qp| if x.is_zero() || x.val >= abs { BigInt::zero() } else { &x.unit * pow_p(x.p, (x.val - base) as u32) };
        Ok(Self::from_scaled(self.p, &(lift(self) + lift(other)), base, abs))
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Self::from_scaled(self.p, &-&self.unit, self.val, self.abs_precision())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Ok(Self::zero(self.p, self.val + other.val)),
            (true, false) => Ok(Self::zero(self.p, self.val + other.val)),
            (false, true) => Ok(Self::zero(self.p, self.val + other.val)),
            (false, false) => {
                let rel = self.rel.min(other.rel);
                Ok(Qp { p: self.p, val: self.val + other.val, rel, unit: (&self.unit * &other.unit).mod_floor(&pow_p(self.p, rel)) })
            }
        }
    }

    /// An exact integer, stored with `rel` digits of unit.
    pub fn exact_int(p: u64, n: &BigInt, rel: u32) -> Self {
        match valuation(n, p) {
            None => Self::zero(p, i64::from(u32::MAX)),
            Some(v) => Qp { p, val: v as i64, rel, unit: (n / pow_p(p, v)).mod_floor(&pow_p(p, rel)) },
        }
    }

    pub fn mul_int(&self, n: &BigInt) -> Result<Self> {
        self.mul(&Self::exact_int(self.p, n, self.rel.max(1)))
    }

    /// Multiplication by `p^k`.
    pub fn shift(&self, k: i64) -> Self {
        Qp { val: self.val + k, ..self.clone() }
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::InsufficientPrecision(format!("inverting a value known only modulo {}^{}", self.p, self.val)));
        }
        let m = pow_p(self.p, self.rel);
        let inv = mod_inverse(&self.unit, &m).ok_or(Error::NotDivisible)?;
        Ok(Qp { p: self.p, val: -self.val, rel: self.rel, unit: inv })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.mul(&other.inverse()?)
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut acc = Self::exact_int(self.p, &BigInt::one(), self.rel.max(1));
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Whether the value is zero to its known precision.
    pub fn is_zero_to(&self, abs: i64) -> bool {
        self.is_zero() && self.val >= abs
    }

    /// Conversion to `Z_p`; the valuation must be nonnegative.
    pub fn to_padic(&self) -> Result<PadicInt> {
        if self.val < 0 && !self.is_zero() {
            return Err(Error::ConvergenceDomain(format!("valuation {} is negative", self.val)));
        }
        let abs = self.abs_precision().max(0) as u32;
        if self.is_zero() {
            return Ok(PadicInt::zero(self.p, abs));
        }
        Ok(PadicInt::new(self.p, &self.unit * pow_p(self.p, self.val as u32), abs))
    }

    /// A representative in `(-p^abs/2, p^abs/2]` scaled by `p^min(val,0)`.
    pub fn representative(&self) -> BigRational {
        if self.is_zero() {
            return BigRational::zero();
        }
        let m = pow_p(self.p, self.rel);
        let u = if &self.unit * 2 > m { &self.unit - m } else { self.unit.clone() };
        let scale = pow_p(self.p, self.val.unsigned_abs() as u32);
        if self.val >= 0 {
            BigRational::from_integer(u * scale)
        } else {
            BigRational::new(u, scale)
        }
    }

    /// `true` when the two values agree to the precision both are known to.
    pub fn agrees(&self, other: &Self) -> bool {
        self.sub(other).map(|d| d.is_zero()).unwrap_or(false)
    }

}
