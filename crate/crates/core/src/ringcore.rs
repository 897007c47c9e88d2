//! Coefficient rings: the integers with their Fermat-quotient π-derivation,
//! truncated p-adic integers with precision tracking, and the ring
//! interface used by the Witt vector and δ-polynomial code.
//!
//! Over `Z` (and `Z_p`) the Frobenius lift is the identity, so the attached
//! π-derivation is `δ(x) = (x - x^q) / p`.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A prime `p` together with the residue-field size `q = p^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeCfg {
    p: u64,
    q: u64,
}

impl PrimeCfg {
    pub fn new(p: u64) -> Result<Self> {
        Self::with_q(p, p)
    }

    pub fn with_q(p: u64, q: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Config(format!("{p} is not prime")));
        }
        let mut r = q;
        while r > 1 && r % p == 0 {
            r /= p;
        }
        if r != 1 || q < p {
            return Err(Error::Config(format!("q = {q} is not a positive power of p = {p}")));
        }
        Ok(PrimeCfg { p, q })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn p_big(&self) -> BigInt {
        BigInt::from(self.p)
    }

    /// `v_p(p) = 1 <= p - 2`, i.e. `p >= 3`.
    pub fn e_bound_ok(&self) -> bool {
        self.p >= 3
    }

    /// Rejects `p = 2` for the parts of the library that need `v_p(p) <= p - 2`.
    pub fn require_odd(&self) -> Result<()> {
        if self.e_bound_ok() {
            Ok(())
        } else {
            Err(Error::UnsupportedPrime(self.p))
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// `p^e` as a big integer.
pub fn pow_p(p: u64, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), e as usize)
}

/// p-adic valuation of a nonzero integer; `None` for zero.
pub fn valuation(x: &BigInt, p: u64) -> Option<u32> {
    if x.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut y = x.clone();
    loop {
        let (q, r) = y.div_rem(&pb);
        if !r.is_zero() {
            return Some(v);
        }
        v += 1;
        y = q;
    }
}

/// Exact division of an integer by `p`.
pub fn div_exact_int(x: &BigInt, p: u64) -> Result<BigInt> {
    let (q, r) = x.div_rem(&BigInt::from(p));
    if r.is_zero() {
        Ok(q)
    } else {
        Err(Error::NotDivisible)
    }
}

/// `C_p(x, y) = (x^q + y^q - (x + y)^q) / p` over the integers.
pub fn carry_poly_int(x: &BigInt, y: &BigInt, cfg: &PrimeCfg) -> BigInt {
    let q = cfg.q() as usize;
    let s = num_traits::pow(x.clone(), q) + num_traits::pow(y.clone(), q) - num_traits::pow(x + y, q);
    div_exact_int(&s, cfg.p()).expect("binomial coefficients are divisible by p")
}

/// The ring interface shared by integers, truncated p-adic integers and
/// δ-polynomials.
///
/// Constructors take `&self` as a template so that rings whose elements
/// carry context (the prime, the precision) can produce compatible values.
pub trait Ring: Clone + PartialEq + fmt::Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn from_int_like(&self, n: &BigInt) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero_elt(&self) -> bool;
    /// Exact division by the prime `p`.
    fn div_p(&self, p: u64) -> Result<Self>;

    fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = self.one_like();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    fn div_p_pow(&self, p: u64, k: u32) -> Result<Self> {
        let mut r = self.clone();
        for _ in 0..k {
            r = r.div_p(p)?;
        }
        Ok(r)
    }

    fn scale_int(&self, n: &BigInt) -> Self {
        self.mul(&self.from_int_like(n))
    }

    /// Multiplication by `p^k`. Precision-tracking rings gain `k` digits.
    fn mul_p_pow(&self, p: u64, k: u32) -> Self {
        self.scale_int(&pow_p(p, k))
    }
}

/// A ring equipped with a Frobenius lift `φ(x) = x^q + p·δ(x)`.
pub trait DeltaRing: Ring {
    fn frobenius(&self, cfg: &PrimeCfg) -> Result<Self>;
    fn delta(&self, cfg: &PrimeCfg) -> Result<Self>;
}

impl Ring for BigInt {
    fn zero_like(&self) -> Self {
        BigInt::zero()
    }
    fn one_like(&self) -> Self {
        BigInt::one()
    }
    fn from_int_like(&self, n: &BigInt) -> Self {
        n.clone()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero_elt(&self) -> bool {
        Zero::is_zero(self)
    }
    fn div_p(&self, p: u64) -> Result<Self> {
        div_exact_int(self, p)
    }
    fn pow(&self, e: u64) -> Self {
        num_traits::pow(self.clone(), e as usize)
    }
}

impl DeltaRing for BigInt {
    fn frobenius(&self, _cfg: &PrimeCfg) -> Result<Self> {
        Ok(self.clone())
    }
    fn delta(&self, cfg: &PrimeCfg) -> Result<Self> {
        div_exact_int(&(self - Ring::pow(self, cfg.q())), cfg.p())
    }
}

/// An element of `Z_p` known modulo `p^precision`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PadicInt {
    p: u64,
    precision: u32,
    residue: BigInt,
}

#[derive(Serialize, Deserialize)]
struct PadicIntRepr {
    p: u64,
    precision: u32,
    residue: String,
}

impl Serialize for PadicInt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PadicIntRepr { p: self.p, precision: self.precision, residue: self.residue.to_string() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PadicInt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PadicIntRepr::deserialize(d)?;
        let v: BigInt = r.residue.parse().map_err(serde::de::Error::custom)?;
        if !is_prime(r.p) {
            return Err(serde::de::Error::custom(format!("{} is not prime", r.p)));
        }
        Ok(PadicInt::new(r.p, v, r.precision))
    }
}

impl fmt::Debug for PadicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + O({}^{})", self.residue, self.p, self.precision)
    }
}

impl fmt::Display for PadicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl PadicInt {
    /// Reduces `value` into `[0, p^precision)`.
    pub fn new(p: u64, value: BigInt, precision: u32) -> Self {
        let m = pow_p(p, precision);
        PadicInt { p, precision, residue: value.mod_floor(&m) }
    }

    pub fn from_i64(p: u64, value: i64, precision: u32) -> Self {
        Self::new(p, BigInt::from(value), precision)
    }

    pub fn zero(p: u64, precision: u32) -> Self {
        Self::new(p, BigInt::zero(), precision)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn residue(&self) -> &BigInt {
        &self.residue
    }

    /// Representative in `(-p^N/2, p^N/2]`.
    pub fn symmetric(&self) -> BigInt {
        let m = pow_p(self.p, self.precision);
        if &self.residue * 2 > m {
            &self.residue - m
        } else {
            self.residue.clone()
        }
    }

    /// Valuation, capped at the precision for the zero class.
    pub fn valuation(&self) -> u32 {
        valuation(&self.residue, self.p).unwrap_or(self.precision).min(self.precision)
    }

    pub fn is_unit(&self) -> bool {
        self.precision > 0 && self.valuation() == 0
    }

    /// Reduces to a lower precision.
    pub fn truncate(&self, precision: u32) -> Self {
        Self::new(self.p, self.residue.clone(), precision.min(self.precision))
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.p != other.p {
            Err(Error::Config(format!("mismatched primes {} and {}", self.p, other.p)))
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::new(self.p, &self.residue + &other.residue, self.precision.min(other.precision)))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::new(self.p, &self.residue - &other.residue, self.precision.min(other.precision)))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::new(self.p, &self.residue * &other.residue, self.precision.min(other.precision)))
    }

    /// Division by `p`; costs one digit of precision.
    pub fn exact_div_pi(&self) -> Result<Self> {
        if self.precision == 0 {
            return Err(Error::InsufficientPrecision("cannot divide a value known modulo 1".into()));
        }
        if self.valuation() == 0 {
            return Err(Error::NotDivisible);
        }
        Ok(Self::new(self.p, &self.residue / BigInt::from(self.p), self.precision - 1))
    }

    /// The Fermat-quotient π-derivation `(x - x^q)/p` for the identity
    /// Frobenius lift on `Z_p`.
    pub fn fermat_delta(&self, cfg: &PrimeCfg) -> Result<Self> {
        if cfg.p() != self.p {
            return Err(Error::Config(format!("mismatched primes {} and {}", self.p, cfg.p())));
        }
        if self.precision == 0 {
            return Err(Error::InsufficientPrecision("fermat_delta needs precision >= 1".into()));
        }
        let d = <BigInt as DeltaRing>::delta(&self.residue, cfg)?;
        Ok(Self::new(self.p, d, self.precision - 1))
    }

    /// Multiplicative inverse of a unit.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_unit() {
            return Err(Error::NotDivisible);
        }
        let m = pow_p(self.p, self.precision);
        let inv = mod_inverse(&self.residue, &m).ok_or(Error::NotDivisible)?;
        Ok(Self::new(self.p, inv, self.precision))
    }
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let g = a.mod_floor(m).extended_gcd(m);
    if g.gcd.is_one() {
        Some(g.x.mod_floor(m))
    } else {
        None
    }
}

impl Ring for PadicInt {
    fn zero_like(&self) -> Self {
        Self::zero(self.p, self.precision)
    }
    fn one_like(&self) -> Self {
        Self::new(self.p, BigInt::one(), self.precision)
    }
    fn from_int_like(&self, n: &BigInt) -> Self {
        Self::new(self.p, n.clone(), self.precision)
    }
    fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("p-adic operands over different primes")
    }
    fn sub(&self, other: &Self) -> Self {
        self.try_sub(other).expect("p-adic operands over different primes")
    }
    fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("p-adic operands over different primes")
    }
    fn neg(&self) -> Self {
        Self::new(self.p, -&self.residue, self.precision)
    }
    fn is_zero_elt(&self) -> bool {
        self.residue.is_zero()
    }
    fn div_p(&self, p: u64) -> Result<Self> {
        if p != self.p {
            return Err(Error::Config(format!("division by {p} in Z_{}", self.p)));
        }
        self.exact_div_pi()
    }
    fn mul_p_pow(&self, p: u64, k: u32) -> Self {
        if p != self.p {
            return self.scale_int(&pow_p(p, k));
        }
        Self::new(self.p, &self.residue * pow_p(p, k), self.precision + k)
    }
    fn pow(&self, e: u64) -> Self {
        let m = pow_p(self.p, self.precision);
        PadicInt { p: self.p, precision: self.precision, residue: self.residue.modpow(&BigInt::from(e), &m) }
    }
}

impl DeltaRing for PadicInt {
    fn frobenius(&self, _cfg: &PrimeCfg) -> Result<Self> {
        Ok(self.clone())
    }
    fn delta(&self, cfg: &PrimeCfg) -> Result<Self> {
        self.fermat_delta(cfg)
    }
}

/// Evaluates an integer polynomial (coefficients from low to high degree).
pub fn eval_int_poly(coeffs: &[BigInt], x: &BigInt) -> BigInt {
    coeffs.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
}

fn derivative(coeffs: &[BigInt]) -> Vec<BigInt> {
    coeffs.iter().enumerate().skip(1).map(|(i, c)| c * BigInt::from(i)).collect()
}

/// Newton–Hensel lift of a simple root of `poly` modulo `p` to precision `n`.
///
/// `poly` is given by its integer coefficients, lowest degree first.
pub fn hensel_root(poly: &[BigInt], seed: &BigInt, p: u64, n: u32) -> Result<PadicInt> {
    let pb = BigInt::from(p);
    let deriv = derivative(poly);
    let r0 = seed.mod_floor(&pb);
    if !eval_int_poly(poly, &r0).mod_floor(&pb).is_zero() {
        return Err(Error::NoHenselLift(format!("{seed} is not a root modulo {p}")));
    }
    if eval_int_poly(&deriv, &r0).mod_floor(&pb).is_zero() {
        return Err(Error::NoHenselLift(format!("{seed} is a multiple root modulo {p}")));
    }
    let mut root = r0;
    let mut k = 1u32;
    while k < n {
        k = (2 * k).min(n);
        let m = pow_p(p, k);
        let f = eval_int_poly(poly, &root);
        let df = eval_int_poly(&deriv, &root);
        let inv = mod_inverse(&df, &m).ok_or_else(|| Error::NoHenselLift("derivative not invertible".into()))?;
        root = (root - f * inv).mod_floor(&m);
    }
    Ok(PadicInt::new(p, root, n))
}

/// Legendre symbol style test: is `a` a nonzero square modulo the odd prime `p`?
pub fn is_qr(a: u64, p: u64) -> bool {
    let a = a % p;
    if a == 0 {
        return false;
    }
    BigInt::from(a).modpow(&BigInt::from((p - 1) / 2), &BigInt::from(p)).is_one()
}

/// Square root of `a` modulo an odd prime by exhaustive search (small `p`).
pub fn sqrt_mod_p(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    (0..p).find(|y| (y * y) % p == a)
}

/// Convenience: the value as `i64` if it fits.
pub fn to_i64(x: &BigInt) -> Option<i64> {
    x.to_i64()
}

/// Sign-aware absolute value helper used by reports.
pub fn abs_int(x: &BigInt) -> BigInt {
    if x.sign() == Sign::Minus {
        -x
    } else {
        x.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pi(p: u64, v: i64, n: u32) -> PadicInt {
        PadicInt::from_i64(p, v, n)
    }

    #[test]
    fn ring_ops_small() {
        assert_eq!(pi(3, 6, 5).add(&pi(3, 3, 5)), pi(3, 9, 5));
        let x = pi(3, 17, 5);
        let z = x.add(&x.neg());
        assert!(Ring::is_zero_elt(&z));
        assert_eq!(z.precision(), 5);
        assert_eq!(pi(5, 624, 4).mul(&pi(5, 1, 4)), pi(5, 624, 4));
    }

    #[test]
    fn precision_is_min() {
        let s = pi(3, 1, 5).add(&pi(3, 1, 2));
        assert_eq!(s.precision(), 2);
    }

    #[test]
    fn mismatched_primes() {
        assert!(matches!(pi(3, 1, 5).try_add(&pi(5, 1, 5)), Err(Error::Config(_))));
    }

    #[test]
    fn exact_division() {
        assert_eq!(pi(3, 6, 5).exact_div_pi().unwrap(), pi(3, 2, 4));
        assert_eq!(pi(3, 1, 5).exact_div_pi(), Err(Error::NotDivisible));
        assert_eq!(pi(5, 0, 4).exact_div_pi().unwrap(), pi(5, 0, 3));
        assert!(matches!(pi(5, 0, 0).exact_div_pi(), Err(Error::InsufficientPrecision(_))));
    }

    #[test]
    fn fermat_delta_examples() {
        let c3 = PrimeCfg::new(3).unwrap();
        let c5 = PrimeCfg::new(5).unwrap();
        let d = pi(3, 2, 6).fermat_delta(&c3).unwrap();
        assert_eq!(d, pi(3, -2, 5));
        assert!(Ring::is_zero_elt(&pi(5, 0, 6).fermat_delta(&c5).unwrap()));
        assert!(Ring::is_zero_elt(&pi(3, 1, 6).fermat_delta(&c3).unwrap()));
    }

    #[test]
    fn hensel_examples() {
        let poly = |c: &[i64]| c.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        // T^2 + 3T + 5 over Z_5, unit root
        let f = poly(&[5, 3, 1]);
        let u = hensel_root(&f, &BigInt::from(2), 5, 10).unwrap();
        assert_eq!(u.residue() % 5, BigInt::from(2));
        assert!(eval_int_poly(&f, u.residue()).mod_floor(&pow_p(5, 10)).is_zero());
        // T^2 - T, root 1
        let g = poly(&[0, -1, 1]);
        assert_eq!(hensel_root(&g, &BigInt::from(1), 5, 8).unwrap(), pi(5, 1, 8));
        // sqrt 2 in Z_7
        let h = poly(&[-2, 0, 1]);
        let r = hensel_root(&h, &BigInt::from(3), 7, 12).unwrap();
        assert_eq!(r.mul(&r), pi(7, 2, 12));
        // failures
        assert!(matches!(hensel_root(&h, &BigInt::from(2), 7, 4), Err(Error::NoHenselLift(_))));
        let sq = poly(&[0, 0, 1]);
        assert!(matches!(hensel_root(&sq, &BigInt::from(0), 7, 4), Err(Error::NoHenselLift(_))));
    }

    #[test]
    fn prime_cfg() {
        assert!(PrimeCfg::new(4).is_err());
        assert!(PrimeCfg::with_q(3, 9).is_ok());
        assert!(PrimeCfg::with_q(3, 6).is_err());
        assert!(!PrimeCfg::new(2).unwrap().e_bound_ok());
        assert!(PrimeCfg::new(3).unwrap().e_bound_ok());
    }

    #[test]
    fn json_form() {
        let x = pi(3, 11, 5);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"p":3,"precision":5,"residue":"11"}"#);
        let y: PadicInt = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
    }
}
