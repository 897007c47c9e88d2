//! Elliptic curves `y² = x³ + ax + b` over `Z_p`: chord-tangent law, point
//! counts, the formal group with its logarithm, the characters `Ψ_i` on
//! kernels of jet spaces and the δ-character `Θ`.
//!
//! With `φ = id` on `Z_p`, a character `Σ b_i φ^i` acts on a Witt point of the
//! formal group through the ghost components of its logarithm. `Θ` is
//! normalized as `(1/p)·Σ b_i·log_F(w_i)`.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde_json::{json, Value};

use crate::dpoly::{var, DPoly, Var};
use crate::error::{Error, Result};
use crate::jetspace::{build_jet, AffinePresentation};
use crate::json::{int_from_json, int_to_json};
use crate::qp::Qp;
use crate::ringcore::{hensel_root, is_prime, is_qr, pow_p, sqrt_mod_p, valuation, PadicInt, PrimeCfg};
use crate::series::{Series, Series2};
use crate::shiftedwitt::ShiftedWitt;
use crate::witt::{ghost_of, WittVec};

/// Largest prime accepted by the point counts.
pub const COUNT_CAP: u64 = 10_000;

/// Truncation order of the two-variable group law.
pub const LAW_ORDER: usize = 10;

/// `F`, `log_F` and `exp_F` for the parameter `t = −x/y`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalGroup {
    /// `w = −1/y` as a series in `t`.
    pub w: Series,
    pub log: Series,
    pub exp: Series,
    /// The group law, truncated at total degree [`LAW_ORDER`] or less.
    pub law: Series2,
}

/// `w(t) = t³ + a·t·w² + b·w³`, solved by fixed-point iteration.
fn w_series(a: &BigInt, b: &BigInt, order: usize) -> Series {
    let t = Series::t(order);
    let t3 = t.mul(&t).mul(&t);
    let (a, b) = (BigRational::from_integer(a.clone()), BigRational::from_integer(b.clone()));
    let mut w = t3.clone();
    for _ in 0..order {
        let w2 = w.mul(&w);
        w = t3.add(&t.mul(&w2).scale(&a)).add(&w2.mul(&w).scale(&b));
    }
    w
}

impl FormalGroup {
    /// Builds the series to order `k`; the group law is truncated at
    /// `min(k, LAW_ORDER)`.
    pub fn new(p: u64, a: &BigInt, b: &BigInt, k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::Config("formal group needs truncation order >= 3".into()));
        }
        // One extra order so that u = w/t³ is known to order k.
        let w = w_series(a, b, k + 3);
        let u = Series { coeffs: w.coeffs[3..].to_vec() };
        // ω/dt = 1 + t·u'/(2u) for x = t/w, y = −1/w
        let tu = Series::t(k).mul(&u.derivative());
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let omega = Series::from_ints(&[BigInt::one()], k).add(&tu.mul(&u.inverse()?).scale(&half));
        let log = omega.integral();
        let exp = log.reversion()?;
        let lk = k.min(LAW_ORDER);
        let log_short = Series { coeffs: log.coeffs[..=lk].to_vec() };
        let exp_short = Series { coeffs: exp.coeffs[..=lk].to_vec() };
        let sum = Series2::from_series(&log_short, false).add(&Series2::from_series(&log_short, true));
        let law = sum.compose_into(&exp_short)?;
        let fg = FormalGroup { w: Series { coeffs: w.coeffs[..=k].to_vec() }, log, exp, law };
        if !fg.law.is_integral() {
            return Err(Error::Invariant("formal group law has non-integral coefficients".into()));
        }
        if !fg.rescaled_exp_integral(p) {
            return Err(Error::Invariant("(1/p)exp(pt) is not p-integral".into()));
        }
        Ok(fg)
    }

    pub fn order(&self) -> usize {
        self.log.order()
    }

    /// Whether `(1/p)·exp_F(p·t)` has `p`-integral coefficients.
    pub fn rescaled_exp_integral(&self, p: u64) -> bool {
        self.exp.coeffs.iter().enumerate().skip(1).all(|(n, c)| {
            let c = c * BigRational::from_integer(pow_p(p, n as u32 - 1));
            c.is_zero() || valuation(c.denom(), p).unwrap_or(0) == 0
        })
    }

    /// Evaluates `Σ c_n z^n` for `v(z) ≥ 1`, truncating where the omitted
    /// terms fall below the precision of `z`.
    fn eval_series(&self, s: &Series, z: &Qp) -> Result<Qp> {
        let p = z.p();
        if z.is_zero() {
            return Ok(z.clone());
        }
        if z.valuation() < 1 {
            return Err(Error::ConvergenceDomain(format!("series argument has valuation {}", z.valuation())));
        }
        let target = z.abs_precision();
        let v = z.valuation();
        let last = truncation_order(p, v, target);
        if last > s.order() {
            return Err(Error::InsufficientPrecision(format!("series of order {} cannot reach {p}^{target}", s.order())));
        }
        let rel = (target + last as i64 + 8) as u32;
        let mut acc = Qp::zero(p, target);
        let mut zn = z.clone();
        for n in 1..=last {
            if n > 1 {
                zn = zn.mul(z)?;
            }
            let c = s.coeff(n);
            if !c.is_zero() {
                acc = acc.add(&Qp::from_rational(p, c, rel).mul(&zn)?)?;
            }
        }
        Ok(acc.truncate(target))
    }

    pub fn log_at(&self, z: &Qp) -> Result<Qp> {
        self.eval_series(&self.log, z)
    }

    pub fn exp_at(&self, z: &Qp) -> Result<Qp> {
        self.eval_series(&self.exp, z)
    }
}

/// Largest `n` with `n·v − ⌊log_p n⌋ < target`; later terms `c_n z^n` with
/// `v_p(c_n) ≥ −v_p(n)` are invisible modulo `p^target`.
fn truncation_order(p: u64, v: i64, target: i64) -> usize {
    let mut last = 0usize;
    let mut n = 1usize;
    let mut misses = 0;
    while misses < 64 {
        let lg = (n as f64).log(p as f64).floor() as i64;
        if n as i64 * v - lg < target {
            last = n;
            misses = 0;
        } else {
            misses += 1;
        }
        n += 1;
    }
    last
}

/// A point of `E(Q_p)`.
#[derive(Clone, Debug, PartialEq)]
pub enum CurvePoint {
    Infinity,
    Affine { x: Qp, y: Qp },
}

impl CurvePoint {
    pub fn is_infinity(&self) -> bool {
        matches!(self, CurvePoint::Infinity)
    }

    /// Reduces to the identity modulo `p`.
    pub fn is_formal(&self) -> bool {
        match self {
            CurvePoint::Infinity => true,
            CurvePoint::Affine { x, .. } => !x.is_zero() && x.valuation() < 0,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CurvePoint::Infinity => json!({"infinity": true}),
            CurvePoint::Affine { x, y } => json!({"infinity": false, "x": qp_to_json(x), "y": qp_to_json(y)}),
        }
    }

    pub fn from_json(v: &Value, p: u64, precision: u32) -> Result<Self> {
        if v.get("infinity").and_then(Value::as_bool).unwrap_or(false) {
            return Ok(CurvePoint::Infinity);
        }
        let coord = |k: &str| -> Result<Qp> {
            let c = v.get(k).ok_or_else(|| Error::Parse(format!("point without \"{k}\"")))?;
            qp_from_json(c, p, precision)
        };
        Ok(CurvePoint::Affine { x: coord("x")?, y: coord("y")? })
    }
}

/// `{"val": v, "unit": u, "precision": N}` for `p^v·u + O(p^N)`.
pub fn qp_to_json(x: &Qp) -> Value {
    json!({"val": x.valuation(), "unit": int_to_json(x.unit()), "precision": x.abs_precision()})
}

/// Accepts [`qp_to_json`] output or a plain integer at the given precision.
pub fn qp_from_json(v: &Value, p: u64, precision: u32) -> Result<Qp> {
    if v.is_object() {
        let val = v.get("val").and_then(Value::as_i64).ok_or_else(|| Error::Parse("missing \"val\"".into()))?;
        let abs = v.get("precision").and_then(Value::as_i64).ok_or_else(|| Error::Parse("missing \"precision\"".into()))?;
        let unit = int_from_json(v.get("unit").ok_or_else(|| Error::Parse("missing \"unit\"".into()))?)?;
        return Ok(Qp::from_scaled(p, &unit, val, abs));
    }
    Ok(Qp::from_int(p, &int_from_json(v)?, precision as i64))
}

/// Reduction type of a curve with good reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    Ordinary,
    Supersingular,
}

/// A character `Σ b_i φ^i` of `Ĝ_a`, evaluated on ghost components.
#[derive(Clone, Debug, PartialEq)]
pub struct Character {
    pub coeffs: Vec<Qp>,
}

impl Character {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `Σ b_i·w_i`.
    pub fn evaluate(&self, ghost: &[Qp]) -> Result<Qp> {
        if ghost.len() <= self.order() {
            return Err(Error::LengthMismatch(format!("character of order {} needs {} ghost components", self.order(), self.order() + 1)));
        }
        let mut acc = self.coeffs[0].mul(&ghost[0])?;
        for (b, w) in self.coeffs.iter().zip(ghost).skip(1) {
            acc = acc.add(&b.mul(w)?)?;
        }
        Ok(acc)
    }

    pub fn coeff_sum(&self) -> Result<Qp> {
        let mut acc = self.coeffs[0].clone();
        for b in &self.coeffs[1..] {
            acc = acc.add(b)?;
        }
        Ok(acc)
    }
}

/// `y² = x³ + ax + b` over `Z_p` with working precision `N`.
#[derive(Clone, Debug)]
pub struct Curve {
    p: u64,
    a: BigInt,
    b: BigInt,
    precision: u32,
    canonical_lift: bool,
    formal: OnceLock<FormalGroup>,
}

impl PartialEq for Curve {
    fn eq(&self, o: &Self) -> bool {
        (self.p, &self.a, &self.b, self.precision, self.canonical_lift) == (o.p, &o.a, &o.b, o.precision, o.canonical_lift)
    }
}

/// The affine Witt coordinates `(exp_δ x, exp_δ y)` of `∇P`, or the Witt
/// vector of the formal parameter for points reducing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub enum JetPoint {
    Affine { x: WittVec<PadicInt>, y: WittVec<PadicInt> },
    Formal { t: WittVec<PadicInt> },
}

/// Outcome of checking `i*φ*Θ = f̃*(i*Θ) + γΨ₁` on kernel points.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffReport {
    /// `γ` extracted at the first sample point.
    pub gamma: Qp,
    /// `λ` in `i*Θ = Ψ₂ − λΨ₁`, extracted at the first sample point.
    pub lambda: Qp,
    pub a_p: i64,
    pub points: usize,
    /// The relation with `γ = p` holds at every point.
    pub holds: bool,
    pub gamma_is_p: bool,
    pub lambda_is_ap: bool,
    /// Smallest absolute precision among the residuals and extracted constants.
    pub precision: i64,
}

impl DiffReport {
    pub fn to_json(&self) -> Value {
        json!({
            "gamma": qp_to_json(&self.gamma),
            "lambda": qp_to_json(&self.lambda),
            "a_p": self.a_p,
            "points": self.points,
            "holds": self.holds,
            "gamma_is_p": self.gamma_is_p,
            "lambda_is_ap": self.lambda_is_ap,
            "precision": self.precision,
        })
    }
}

impl Curve {
    /// Requires `p ≥ 5` and good reduction.
    pub fn new(p: u64, a: BigInt, b: BigInt, precision: u32) -> Result<Self> {
        if !is_prime(p) || p < 5 {
            return Err(Error::InvalidCurve(format!("p = {p} must be a prime >= 5")));
        }
        if precision < 3 {
            return Err(Error::InsufficientPrecision("curves need precision >= 3".into()));
        }
        let m = pow_p(p, precision);
        let (a, b) = (a.mod_floor(&m), b.mod_floor(&m));
        let c = Curve { p, a, b, precision, canonical_lift: false, formal: OnceLock::new() };
        if c.discriminant().mod_floor(&BigInt::from(p)).is_zero() {
            return Err(Error::InvalidCurve(format!("bad reduction at {p}")));
        }
        Ok(c)
    }

    pub fn from_i64(p: u64, a: i64, b: i64, precision: u32) -> Result<Self> {
        Self::new(p, BigInt::from(a), BigInt::from(b), precision)
    }

    /// Declares the curve a canonical lift of its reduction.
    pub fn with_canonical_lift(mut self, cl: bool) -> Self {
        self.canonical_lift = cl;
        self
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn cfg(&self) -> PrimeCfg {
        PrimeCfg::new(self.p).expect("validated prime")
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn is_canonical_lift(&self) -> bool {
        self.canonical_lift
    }

    pub fn a(&self) -> PadicInt {
        PadicInt::new(self.p, self.a.clone(), self.precision)
    }

    pub fn b(&self) -> PadicInt {
        PadicInt::new(self.p, self.b.clone(), self.precision)
    }

    /// `−16(4a³ + 27b²)`.
    pub fn discriminant(&self) -> BigInt {
        let four_a3 = BigInt::from(4) * &self.a * &self.a * &self.a;
        let b2 = BigInt::from(27) * &self.b * &self.b;
        BigInt::from(-16) * (four_a3 + b2)
    }

    pub fn to_json(&self) -> Value {
        json!({"p": self.p, "a": int_to_json(&self.a), "b": int_to_json(&self.b), "precision": self.precision, "canonical_lift": self.canonical_lift})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let p = v.get("p").and_then(Value::as_u64).ok_or_else(|| Error::Parse("curve without \"p\"".into()))?;
        let a = int_from_json(v.get("a").ok_or_else(|| Error::Parse("curve without \"a\"".into()))?)?;
        let b = int_from_json(v.get("b").ok_or_else(|| Error::Parse("curve without \"b\"".into()))?)?;
        let n = v.get("precision").and_then(Value::as_u64).unwrap_or(12) as u32;
        let cl = v.get("canonical_lift").and_then(Value::as_bool).unwrap_or(false);
        Ok(Self::new(p, a, b, n)?.with_canonical_lift(cl))
    }

    fn rhs_mod_p(&self, x: u64) -> u64 {
        let p = BigInt::from(self.p);
        let x = BigInt::from(x);
        (&x * &x * &x + &self.a * &x + &self.b).mod_floor(&p).to_u64().expect("residue below p")
    }

    fn check_countable(&self) -> Result<()> {
        if self.p > COUNT_CAP {
            return Err(Error::Config(format!("point counting is capped at p <= {COUNT_CAP}")));
        }
        Ok(())
    }

    /// `a_p = p + 1 − #E(F_p)`: for each `x`, add the number of square roots
    /// of `x³ + ax + b`.
    pub fn count_ap(&self) -> Result<i64> {
        self.check_countable()?;
        let mut count = 1u64;
        for x in 0..self.p {
            let r = self.rhs_mod_p(x);
            count += if r == 0 {
                1
            } else if is_qr(r, self.p) {
                2
            } else {
                0
            };
        }
        let ap = self.p as i64 + 1 - count as i64;
        if (ap * ap) as u64 > 4 * self.p {
            return Err(Error::Invariant(format!("a_p = {ap} violates the Hasse bound")));
        }
        Ok(ap)
    }

    /// `a_p` by a second enumeration: tabulate squares `y²` first, then look
    /// up each right-hand side.
    pub fn count_ap_by_squares(&self) -> Result<i64> {
        self.check_countable()?;
        let p = self.p as usize;
        let mut roots = vec![0u64; p];
        for y in 0..p {
            roots[(y * y) % p] += 1;
        }
        let affine: u64 = (0..self.p).map(|x| roots[self.rhs_mod_p(x) as usize]).sum();
        Ok(self.p as i64 - affine as i64)
    }

    pub fn reduction(&self) -> Result<Reduction> {
        Ok(if self.count_ap()? % self.p as i64 == 0 { Reduction::Supersingular } else { Reduction::Ordinary })
    }

    /// `#E(F_p) = p + 1 − a_p`.
    pub fn reduced_order(&self) -> Result<u64> {
        Ok((self.p as i64 + 1 - self.count_ap()?) as u64)
    }

    /// `p | #E(F_p)`, i.e. `a_p ≡ 1 mod p`.
    pub fn is_anomalous(&self) -> Result<bool> {
        Ok(self.reduced_order()? % self.p == 0)
    }

    /// Series order sufficient for arguments of valuation `≥ 1` known to
    /// `N + 4` digits.
    fn series_order(&self) -> usize {
        truncation_order(self.p, 1, self.precision as i64 + 4).max(3)
    }

    pub fn formal_group(&self) -> Result<&FormalGroup> {
        if let Some(fg) = self.formal.get() {
            return Ok(fg);
        }
        let fg = FormalGroup::new(self.p, &self.a, &self.b, self.series_order())?;
        Ok(self.formal.get_or_init(|| fg))
    }

    fn a_qp(&self) -> Qp {
        Qp::from_int(self.p, &self.a, self.precision as i64)
    }

    fn b_qp(&self) -> Qp {
        Qp::from_int(self.p, &self.b, self.precision as i64)
    }

    /// `y² − x³ − ax − b` vanishes to the precision it is known to.
    pub fn contains(&self, pt: &CurvePoint) -> Result<bool> {
        match pt {
            CurvePoint::Infinity => Ok(true),
            CurvePoint::Affine { x, y } => {
                let r = y.mul(y)?.sub(&x.mul(x)?.mul(x)?)?.sub(&self.a_qp().mul(x)?)?.sub(&self.b_qp())?;
                Ok(r.is_zero())
            }
        }
    }

    pub fn neg(&self, pt: &CurvePoint) -> CurvePoint {
        match pt {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine { x, y } => CurvePoint::Affine { x: x.clone(), y: y.neg() },
        }
    }

    /// The chord-tangent law.
    pub fn add(&self, p1: &CurvePoint, p2: &CurvePoint) -> Result<CurvePoint> {
        let (x1, y1, x2, y2) = match (p1, p2) {
            (CurvePoint::Infinity, q) | (q, CurvePoint::Infinity) => return Ok(q.clone()),
            (CurvePoint::Affine { x: x1, y: y1 }, CurvePoint::Affine { x: x2, y: y2 }) => (x1, y1, x2, y2),
        };
        let dx = x2.sub(x1)?;
        let lambda = if dx.is_zero() {
            let sy = y1.add(y2)?;
            if sy.is_zero() {
                return Ok(CurvePoint::Infinity);
            }
            // tangent slope (3x² + a)/(2y)
            x1.mul(x1)?.mul_int(&BigInt::from(3))?.add(&self.a_qp())?.div(&y1.mul_int(&BigInt::from(2))?)?
        } else {
            y2.sub(y1)?.div(&dx)?
        };
        let x3 = lambda.mul(&lambda)?.sub(x1)?.sub(x2)?;
        let y3 = lambda.mul(&x1.sub(&x3)?)?.sub(y1)?;
        Ok(CurvePoint::Affine { x: x3, y: y3 })
    }

    /// `n·P` by double-and-add; negative `n` uses `−P`.
    pub fn mul(&self, n: i64, pt: &CurvePoint) -> Result<CurvePoint> {
        let base = if n < 0 { self.neg(pt) } else { pt.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = CurvePoint::Infinity;
        let mut pow = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(&acc, &pow)?;
            }
            k >>= 1;
            if k > 0 {
                pow = self.add(&pow, &pow)?;
            }
        }
        Ok(acc)
    }

    /// `t = −x/y`; zero at infinity.
    pub fn parameter(&self, pt: &CurvePoint) -> Result<Qp> {
        match pt {
            CurvePoint::Infinity => Ok(Qp::exact_int(self.p, &BigInt::zero(), 1)),
            CurvePoint::Affine { x, y } => x.div(y).map(|t| t.neg()),
        }
    }

    /// The point with parameter `t`, `v(t) ≥ 1`: `x = t/w(t)`, `y = −1/w(t)`.
    pub fn point_from_parameter(&self, t: &Qp) -> Result<CurvePoint> {
        if t.is_zero() {
            return Ok(CurvePoint::Infinity);
        }
        if t.valuation() < 1 {
            return Err(Error::ConvergenceDomain(format!("parameter of valuation {} is not in pZ_p", t.valuation())));
        }
        let fg = self.formal_group()?;
        // u(t) = w(t)/t³ = 1 + …, summed until the terms drop below the
        // relative precision of t
        let rel = t.rel_precision() as i64;
        let mut u = Qp::from_i64(self.p, 1, rel);
        let mut tn = Qp::exact_int(self.p, &BigInt::one(), t.rel_precision());
        for n in 1..=fg.w.order() - 3 {
            tn = tn.mul(t)?;
            if tn.valuation() >= rel {
                break;
            }
            let c = fg.w.coeff(n + 3);
            if !c.is_zero() {
                u = u.add(&Qp::from_rational(self.p, c, t.rel_precision()).mul(&tn)?)?;
            }
        }
        let w = u.mul(&t.pow(3)?)?;
        let inv = w.inverse()?;
        Ok(CurvePoint::Affine { x: t.mul(&inv)?, y: inv.neg() })
    }

    /// A point of `E(Z_p)` with `x` uniform modulo `p^N` and nonzero
    /// reduction of `y`.
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> Result<CurvePoint> {
        let m = pow_p(self.p, self.precision);
        let modulus = m.to_u128().filter(|_| m.bits() <= 120);
        for _ in 0..10_000 {
            let x = match modulus {
                Some(mm) => BigInt::from(rng.gen_range(0..mm)),
                None => BigInt::from(rng.gen::<u128>()).mod_floor(&m),
            };
            let r = (&x * &x * &x + &self.a * &x + &self.b).mod_floor(&m);
            let r0 = r.mod_floor(&BigInt::from(self.p)).to_u64().expect("residue below p");
            if r0 == 0 || !is_qr(r0, self.p) {
                continue;
            }
            let seed = sqrt_mod_p(r0, self.p).expect("quadratic residue");
            let y = hensel_root(&[-r, BigInt::zero(), BigInt::one()], &BigInt::from(seed), self.p, self.precision)?;
            return Ok(CurvePoint::Affine { x: Qp::from_int(self.p, &x, self.precision as i64), y: Qp::from_padic(&y) });
        }
        Err(Error::Invariant("no affine point with y ≢ 0 found".into()))
    }

    /// Two points of `E(Z_p)` whose reductions have distinct `x`-coordinates,
    /// so neither they nor their sum meet the chord through equal residues.
    pub fn random_pair_distinct_reductions<R: Rng>(&self, rng: &mut R) -> Result<(CurvePoint, CurvePoint)> {
        let first = self.random_point(rng)?;
        let xbar = |pt: &CurvePoint| match pt {
            CurvePoint::Affine { x, .. } => x.to_padic().map(|v| v.residue() % self.p),
            CurvePoint::Infinity => Err(Error::Invariant("affine point expected".into())),
        };
        let x1 = xbar(&first)?;
        for _ in 0..10_000 {
            let second = self.random_point(rng)?;
            if xbar(&second)? != x1 {
                return Ok((first, second));
            }
        }
        Err(Error::Invariant("the reduction has a single affine x-coordinate".into()))
    }

    /// A point reducing to the identity, with parameter `t ∈ pZ_p \ p²Z_p`.
    pub fn random_formal_point<R: Rng>(&self, rng: &mut R) -> Result<CurvePoint> {
        let u = rng.gen_range(1..self.p) as i64;
        let rest = BigInt::from(rng.gen::<u64>()) * self.p;
        let t = Qp::from_scaled(self.p, &(rest + u), 1, self.precision as i64);
        self.point_from_parameter(&t)
    }

    /// The order-2 character `p − a_p·φ + φ²` (no canonical lift) or the
    /// order-1 character `−β + φ` with `β` the non-unit root of
    /// `T² − a_p·T + p` (canonical lift).
    pub fn character(&self) -> Result<Character> {
        let ap = self.count_ap()?;
        let n = self.precision as i64;
        let p = self.p;
        if self.canonical_lift {
            let beta = self.beta()?;
            Ok(Character { coeffs: vec![Qp::from_padic(&beta).neg(), Qp::from_i64(p, 1, n)] })
        } else {
            Ok(Character { coeffs: vec![Qp::from_i64(p, p as i64, n + 1), Qp::from_i64(p, -ap, n), Qp::from_i64(p, 1, n)] })
        }
    }

    /// The non-unit root of `T² − a_p·T + p`, for ordinary reduction.
    pub fn beta(&self) -> Result<PadicInt> {
        let ap = self.count_ap()?;
        if ap % self.p as i64 == 0 {
            return Err(Error::Contradiction("supersingular reduction has no unit root to split off".into()));
        }
        hensel_root(&[BigInt::from(self.p), BigInt::from(-ap), BigInt::one()], &BigInt::zero(), self.p, self.precision)
    }

    /// `Θ` on a point of the formal group with parameter `t`:
    /// `(1/p)·(Σ b_i)·log_F(t)`.
    pub fn theta_formal(&self, t: &Qp) -> Result<Qp> {
        if t.is_zero() {
            return Ok(t.clone());
        }
        let s = self.character()?.coeff_sum()?;
        Ok(s.mul(&self.formal_group()?.log_at(t)?)?.shift(-1))
    }

    /// `Θ(P)`; points off the formal group go through `Θ(P) = Θ(n̄P)/n̄` with
    /// `n̄ = #E(F_p)`.
    pub fn theta_eval(&self, pt: &CurvePoint) -> Result<Qp> {
        if pt.is_infinity() {
            return Ok(Qp::exact_int(self.p, &BigInt::zero(), 1));
        }
        if self.reduction()? == Reduction::Supersingular {
            return Err(Error::InvalidCurve("Θ is only evaluated for ordinary reduction".into()));
        }
        if pt.is_formal() {
            return self.theta_formal(&self.parameter(pt)?);
        }
        let nbar = self.reduced_order()?;
        if nbar % self.p == 0 {
            return Err(Error::UnsupportedAnomalous);
        }
        let q = self.mul(nbar as i64, pt)?;
        if !q.is_formal() {
            return Err(Error::Invariant("n̄·P does not reduce to the identity".into()));
        }
        let th = match q {
            CurvePoint::Infinity => return Ok(Qp::exact_int(self.p, &BigInt::zero(), 1)),
            _ => self.theta_formal(&self.parameter(&q)?)?,
        };
        th.div(&Qp::exact_int(self.p, &BigInt::from(nbar), th.rel_precision().max(1)))
    }

    /// `Θ` on a Witt point `T = (t_0, t_1, …)` of the formal group:
    /// `(1/p)·Σ b_i·log_F(w_i(T))`.
    pub fn theta_witt(&self, t: &[PadicInt]) -> Result<Qp> {
        let fg = self.formal_group()?;
        let ghost = ghost_of(&self.cfg(), t);
        let logs = ghost.iter().map(|w| fg.log_at(&Qp::from_padic(w))).collect::<Result<Vec<_>>>()?;
        Ok(self.character()?.evaluate(&logs)?.shift(-1))
    }

    /// `Ψ_i(Q) = ψ_1(f̃^{i−1}Q)` for the kernel point with parameter tail
    /// `(0; s_1, …, s_n)`, where `ψ_1 = (1/p)·log_F(p·s_1)`.
    pub fn psi_eval(&self, i: usize, tail: &[PadicInt]) -> Result<Qp> {
        if i == 0 || i > tail.len() {
            return Err(Error::Config(format!("Ψ_{i} needs 1 <= i <= {}", tail.len())));
        }
        let head = vec![PadicInt::zero(self.p, self.precision + 1)];
        let q = ShiftedWitt::new(self.cfg(), 0, head, tail.to_vec())?.lateral_frobenius_iter(i - 1)?;
        let s = Qp::from_padic(&q.tail()[0]).shift(1);
        Ok(self.formal_group()?.log_at(&s)?.shift(-1))
    }

    /// `Ψ_i` directly from the ghost side: `(1/p)·log_F(w_i(0, s_1, …))`.
    pub fn psi_by_ghost(&self, i: usize, tail: &[PadicInt]) -> Result<Qp> {
        let mut coords = vec![PadicInt::zero(self.p, self.precision + 1)];
        coords.extend(tail.iter().cloned());
        let w = ghost_of(&self.cfg(), &coords);
        let z = w.get(i).ok_or_else(|| Error::Config(format!("no ghost component {i}")))?;
        Ok(self.formal_group()?.log_at(&Qp::from_padic(z))?.shift(-1))
    }

    /// Samples kernel points of `N³A(Z_p)` and compares `i*φ*Θ` with
    /// `f̃*(i*Θ) + γΨ₁`, extracting `γ`, and `i*Θ` with `Ψ₂ − λΨ₁`,
    /// extracting `λ`.
    pub fn verify_diff_relation<R: Rng>(&self, rng: &mut R, points: usize) -> Result<DiffReport> {
        if self.canonical_lift {
            return Err(Error::Config("canonical lift: Θ has order 1, use the order-1 character".into()));
        }
        if self.reduction()? == Reduction::Supersingular {
            return Err(Error::InvalidCurve("the relation is checked for ordinary reduction".into()));
        }
        let ap = self.count_ap()?;
        let p = self.p;
        let n = self.precision;
        let m = pow_p(p, n);
        let mut report: Option<DiffReport> = None;
        for _ in 0..points.max(1) {
            let mut s: Vec<PadicInt> = (0..3).map(|_| PadicInt::new(p, BigInt::from(rng.gen::<u128>()).mod_floor(&m), n)).collect();
            if s[0].valuation() > 0 {
                s[0] = PadicInt::new(p, s[0].residue() + BigInt::one(), n);
            }
            let r = self.diff_at(&s, ap)?;
            report = Some(match report {
                None => r,
                Some(acc) => DiffReport {
                    holds: acc.holds && r.holds,
                    gamma_is_p: acc.gamma_is_p && r.gamma_is_p,
                    lambda_is_ap: acc.lambda_is_ap && r.lambda_is_ap,
                    precision: acc.precision.min(r.precision),
                    points: acc.points + 1,
                    ..acc
                },
            });
        }
        Ok(report.expect("at least one point"))
    }

    /// The relation at one kernel point `(0; s_1, s_2, s_3)` with `s_1` a unit.
    pub fn diff_at(&self, s: &[PadicInt], ap: i64) -> Result<DiffReport> {
        let p = self.p;
        let cfg = self.cfg();
        let zero = PadicInt::zero(p, self.precision + 1);
        let mut q3 = vec![zero.clone()];
        q3.extend(s[..3].iter().cloned());
        // i*φ*Θ on N³: Θ of the Witt Frobenius of the point
        let lhs = self.theta_witt(WittVec::new(cfg, q3)?.frobenius()?.coords())?;
        // f̃*(i*Θ): Θ of the lateral Frobenius of the point
        let lat = ShiftedWitt::new(cfg, 0, vec![zero.clone()], s[..3].to_vec())?.lateral_frobenius()?;
        let rhs = self.theta_witt(&lat.coords())?;
        let psi1 = self.psi_eval(1, &s[..3])?;
        let gamma = lhs.sub(&rhs)?.div(&psi1)?;
        let relation = lhs.sub(&rhs)?.sub(&psi1.mul_int(&BigInt::from(p))?)?;
        // i*Θ on N²
        let mut q2 = vec![zero];
        q2.extend(s[..2].iter().cloned());
        let itheta = self.theta_witt(&q2)?;
        let psi2 = self.psi_eval(2, &s[..2])?;
        let lambda = psi2.sub(&itheta)?.div(&psi1)?;
        let split = itheta.sub(&psi2.sub(&psi1.mul_int(&BigInt::from(ap))?)?)?;
        let gamma_err = gamma.sub(&Qp::exact_int(p, &BigInt::from(p), gamma.rel_precision().max(1)))?;
        let lambda_err = lambda.sub(&Qp::exact_int(p, &BigInt::from(ap), lambda.rel_precision().max(1)))?;
        let precision = [&relation, &split, &gamma_err, &lambda_err].iter().map(|x| x.abs_precision()).min().expect("nonempty");
        Ok(DiffReport {
            gamma_is_p: gamma_err.is_zero(),
            lambda_is_ap: lambda_err.is_zero(),
            holds: relation.is_zero() && split.is_zero(),
            gamma,
            lambda,
            a_p: ap,
            points: 1,
            precision,
        })
    }

    /// `∇P` at level `n`: `exp_δ` of each affine coordinate, or of the formal
    /// parameter when `P` reduces to the identity.
    pub fn nabla(&self, pt: &CurvePoint, n: usize) -> Result<JetPoint> {
        let cfg = self.cfg();
        if pt.is_formal() {
            let t = self.parameter(pt)?.truncate(self.precision as i64).to_padic()?;
            return Ok(JetPoint::Formal { t: WittVec::exp_delta_padic(cfg, &t, n)? });
        }
        let CurvePoint::Affine { x, y } = pt else { unreachable!("infinity is formal") };
        let x = x.to_padic()?;
        let y = y.to_padic()?;
        Ok(JetPoint::Affine { x: WittVec::exp_delta_padic(cfg, &x, n)?, y: WittVec::exp_delta_padic(cfg, &y, n)? })
    }

    /// The Weierstrass relation `y² − x³ − ax − b` with `x = var(0,0)`,
    /// `y = var(1,0)`.
    pub fn equation(&self) -> DPoly {
        let (x, y) = (DPoly::var(0, 0), DPoly::var(1, 0));
        y.pow(2).sub(&x.pow(3)).sub(&x.scale(&self.a)).sub(&DPoly::constant(self.b.clone()))
    }

    /// Checks `∇P` against the jet relations `δ^k(y² − x³ − ax − b)`,
    /// `k ≤ n`, at the δ-coordinates `δ^j x, δ^j y`, and that the Witt
    /// coordinates re-ghost to `⟨x, …, x⟩`, `⟨y, …, y⟩`.
    pub fn nabla_jet_check(&self, pt: &CurvePoint, n: usize) -> Result<bool> {
        let cfg = self.cfg();
        let JetPoint::Affine { x: wx, y: wy } = self.nabla(pt, n)? else {
            return Err(Error::Config("jet relations are checked on affine points".into()));
        };
        let (x0, y0) = (wx.coords()[0].clone(), wy.coords()[0].clone());
        for (w, c) in [(&wx, &x0), (&wy, &y0)] {
            if ghost_of(&cfg, w.coords()).iter().any(|g| g.try_sub(c).map(|d| !d.residue().is_zero()).unwrap_or(true)) {
                return Ok(false);
            }
        }
        let pres = AffinePresentation { num_vars: 2, generators: vec![self.equation()], marked_point: vec![BigInt::zero(); 2] };
        let jet = build_jet(&cfg, &pres, n)?;
        let mut vals: std::collections::HashMap<Var, PadicInt> = std::collections::HashMap::new();
        let (mut dx, mut dy) = (x0.clone(), y0.clone());
        for j in 0..=n {
            vals.insert(var(0, j as u32), dx.clone());
            vals.insert(var(1, j as u32), dy.clone());
            if j < n {
                dx = dx.fermat_delta(&cfg)?;
                dy = dy.fermat_delta(&cfg)?;
            }
        }
        for f in &jet.relations {
            if !f.eval(&x0, &vals)?.residue().is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `Λ = (p, −a_p, 1)` on ghost components is additive on `W_2(Z_p)`:
/// returns `Λ(x + y) − Λ(x) − Λ(y)`.
pub fn lambda_additivity_defect(cfg: &PrimeCfg, ap: i64, x: &WittVec<PadicInt>, y: &WittVec<PadicInt>) -> Result<PadicInt> {
    let p = cfg.p();
    let n = x.coords()[0].precision();
    let lam = |v: &WittVec<PadicInt>| -> PadicInt {
        let g = v.ghost();
        let b = [PadicInt::from_i64(p, p as i64, n), PadicInt::from_i64(p, -ap, n), PadicInt::from_i64(p, 1, n)];
        b.iter().zip(g.comps.iter()).fold(PadicInt::zero(p, n), |acc, (bi, gi)| acc.try_add(&bi.try_mul(gi).expect("same prime")).expect("same prime"))
    };
    let s = x.add(y)?;
    lam(&s).try_sub(&lam(x))?.try_sub(&lam(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn curve(p: u64, a: i64, b: i64) -> Curve {
        Curve::from_i64(p, a, b, 12).unwrap()
    }

    #[test]
    fn point_counts() {
        assert_eq!(curve(5, 1, 1).count_ap().unwrap(), -3);
        assert_eq!(curve(5, 1, 1).reduced_order().unwrap(), 9);
        let c = curve(13, 1, 0);
        let a13 = c.count_ap().unwrap();
        assert!(a13 * a13 <= 52 && a13 % 2 == 0);
        assert_eq!(curve(7, 0, 1).count_ap().unwrap(), -4);
        for (p, a, b) in [(5, 1, 1), (7, 1, 1), (13, 1, 1), (13, 1, 0), (7, 0, 1), (7, 1, 0), (5, 0, 1)] {
            let c = curve(p, a, b);
            assert_eq!(c.count_ap().unwrap(), c.count_ap_by_squares().unwrap());
        }
        assert!(matches!(Curve::from_i64(5, 2, 3, 12), Err(Error::InvalidCurve(_))));
    }

    /// `x(t)` from `x² = t²(x³ + ax + b)` as a Laurent series, then
    /// `ω = −t·dx/(2x)` integrated; coefficients of `log_F` up to `t^k`.
    fn log_by_laurent(a: i64, b: i64, k: usize) -> Vec<BigRational> {
        // X = t²x = 1 + Σ c_i t^i satisfies X² = X³ + a t⁴ X + b t⁶
        let order = k + 4;
        let r = |n: i64| BigRational::from_integer(BigInt::from(n));
        let mut xs = vec![r(0); order + 1];
        xs[0] = r(1);
        let mul = |u: &[BigRational], v: &[BigRational]| {
            let mut out = vec![r(0); order + 1];
            for i in 0..=order {
                for j in 0..=order - i {
                    out[i + j] += &u[i] * &v[j];
                }
            }
            out
        };
        for _ in 0..order {
            // X = X³/X + (a t⁴ X + b t⁶)/X rewritten as X = X² − a t⁴ − b t⁶ X^{-1}
            // solved by Newton-free substitution: X² − X³ = a t⁴ X + b t⁶
            let x2 = mul(&xs, &xs);
            let x3 = mul(&x2, &xs);
            let mut next = xs.clone();
            for i in 1..=order {
                let mut rhs = r(0);
                if i >= 4 {
                    rhs += r(a) * &xs[i - 4];
                }
                if i == 6 {
                    rhs += r(b);
                }
                // coefficient i of X² − X³ − a t⁴X − b t⁶ vanishes; its
                // linear part in c_i is (2 − 3)c_i = −c_i
                let residual = &x2[i] - &x3[i] - rhs;
                next[i] = &xs[i] + residual;
            }
            xs = next;
        }
        // x = X/t², dx/dt = (X' t − 2X)/t³, y = −x/t, ω = dx/(2y) = −t dx/(2x)
        //   = (2X − tX')/(2X)
        let mut num = vec![r(0); order + 1];
        for i in 0..=order {
            num[i] = r(2) * &xs[i] - r(i as i64) * &xs[i];
        }
        let xinv = Series { coeffs: xs.clone() }.inverse().unwrap();
        let omega = mul(&num, &xinv.coeffs);
        let mut log = vec![r(0); k + 1];
        for n in 1..=k {
            log[n] = &omega[n - 1] / r(2 * n as i64);
        }
        log
    }

    #[test]
    fn formal_group_matches_laurent_oracle() {
        for (a, b) in [(1, 1), (-1, 1), (2, 7)] {
            let fg = FormalGroup::new(7, &BigInt::from(a), &BigInt::from(b), 12).unwrap();
            let oracle = log_by_laurent(a, b, 12);
            for n in 1..=12 {
                assert_eq!(fg.log.coeff(n), &oracle[n], "a={a} b={b} n={n}");
            }
            assert!(fg.log.coeff(3).is_zero());
            assert_eq!(fg.log.coeff(5), &BigRational::new(BigInt::from(2 * a), BigInt::from(5)));
            assert_eq!(fg.law.coeff(1, 0), BigRational::one());
            assert!((2..=fg.law.order()).all(|i| fg.law.coeff(i, 0).is_zero()));
            assert_eq!(fg.law, fg.law.swapped());
            assert_eq!(fg.log.compose(&fg.exp).unwrap(), Series::t(12));
            assert_eq!(fg.exp.compose(&fg.log).unwrap(), Series::t(12));
            // log(F(s, t)) = log s + log t
            let lk = fg.law.order();
            let short = Series { coeffs: fg.log.coeffs[..=lk].to_vec() };
            let lhs = fg.law.compose_into(&short).unwrap();
            let rhs = Series2::from_series(&short, false).add(&Series2::from_series(&short, true));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn group_law_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (p, a, b) in [(5, 1, 1), (7, 1, 1), (13, 1, 0)] {
            let c = curve(p, a, b);
            for _ in 0..50 {
                let (x, y, z) = (c.random_point(&mut rng).unwrap(), c.random_point(&mut rng).unwrap(), c.random_point(&mut rng).unwrap());
                assert!(c.contains(&x).unwrap());
                let xy = c.add(&x, &y).unwrap();
                assert!(c.contains(&xy).unwrap());
                assert_eq!(xy, c.add(&y, &x).unwrap());
                let l = c.add(&xy, &z).unwrap();
                let r = c.add(&x, &c.add(&y, &z).unwrap()).unwrap();
                if let (CurvePoint::Affine { x: lx, y: ly }, CurvePoint::Affine { x: rx, y: ry }) = (&l, &r) {
                    assert!(lx.agrees(rx) && ly.agrees(ry), "associativity at p={p}");
                }
            }
        }
    }

    #[test]
    fn parameter_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = curve(5, 1, 1);
        for _ in 0..10 {
            let pt = c.random_formal_point(&mut rng).unwrap();
            assert!(pt.is_formal());
            assert!(c.contains(&pt).unwrap());
            let t = c.parameter(&pt).unwrap();
            let back = c.point_from_parameter(&t).unwrap();
            let t2 = c.parameter(&back).unwrap();
            assert!(t.agrees(&t2));
        }
    }

    #[test]
    fn theta_formal_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = curve(5, 1, 1);
        assert!(c.theta_eval(&CurvePoint::Infinity).unwrap().is_zero());
        for _ in 0..10 {
            let (pt, qt) = (c.random_formal_point(&mut rng).unwrap(), c.random_formal_point(&mut rng).unwrap());
            let th = c.theta_eval(&pt).unwrap();
            assert!(th.add(&c.theta_eval(&c.neg(&pt)).unwrap()).unwrap().is_zero());
            let sum = c.theta_eval(&c.add(&pt, &qt).unwrap()).unwrap();
            let d = sum.sub(&th).unwrap().sub(&c.theta_eval(&qt).unwrap()).unwrap();
            assert!(d.is_zero() && d.abs_precision() >= 9, "{d:?}");
        }
    }

    #[test]
    fn theta_full_group_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (p, a, b) in [(5, 1, 1), (7, 1, 1), (13, 1, 1)] {
            let c = curve(p, a, b);
            let mut worst = i64::MAX;
            for _ in 0..20 {
                let (pt, qt) = c.random_pair_distinct_reductions(&mut rng).unwrap();
                let sum = c.add(&pt, &qt).unwrap();
                let d = c.theta_eval(&sum).unwrap().sub(&c.theta_eval(&pt).unwrap()).unwrap().sub(&c.theta_eval(&qt).unwrap()).unwrap();
                assert!(d.is_zero(), "p={p}: {d:?}");
                worst = worst.min(d.abs_precision());
            }
            assert!(worst >= 9, "p={p}: precision {worst}");
        }
    }

    #[test]
    fn psi_matches_ghost_side_and_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = curve(5, 1, 1);
        let p = 5u64;
        let m = pow_p(p, 12);
        for _ in 0..10 {
            let tail: Vec<PadicInt> = (0..2).map(|_| PadicInt::new(p, BigInt::from(rng.gen::<u64>()).mod_floor(&m), 12)).collect();
            for i in 1..=2 {
                assert!(c.psi_eval(i, &tail).unwrap().agrees(&c.psi_by_ghost(i, &tail).unwrap()));
            }
        }
        // ψ_1 ∘ ϑ^{-1} = id with ϑ^{-1}(z) = (1/p)exp_F(p·z)
        let fg = c.formal_group().unwrap();
        let z = Qp::from_i64(p, 3, 12);
        let s = fg.exp_at(&z.shift(1)).unwrap().shift(-1).to_padic().unwrap();
        assert!(c.psi_eval(1, &[s]).unwrap().agrees(&z));
        let zero = vec![PadicInt::zero(p, 12); 2];
        assert!(c.psi_eval(2, &zero).unwrap().is_zero());
    }

    #[test]
    fn diff_relation_non_cl() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = curve(5, 1, 1);
        let r = c.verify_diff_relation(&mut rng, 3).unwrap();
        assert!(r.holds && r.gamma_is_p && r.lambda_is_ap, "{r:?}");
        assert!(r.precision >= 8);
        let zero = vec![PadicInt::zero(5, 12); 3];
        let z = c.theta_witt(&[PadicInt::zero(5, 13), zero[0].clone(), zero[1].clone()]).unwrap();
        assert!(z.is_zero());
        assert!(c.clone().with_canonical_lift(true).verify_diff_relation(&mut rng, 1).is_err());
    }

    #[test]
    fn nabla_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = curve(5, 1, 1);
        let pt = c.random_point(&mut rng).unwrap();
        let JetPoint::Affine { x, .. } = c.nabla(&pt, 0).unwrap() else { panic!() };
        assert_eq!(x.len(), 1);
        assert!(c.nabla_jet_check(&pt, 2).unwrap());
        let JetPoint::Formal { t } = c.nabla(&CurvePoint::Infinity, 3).unwrap() else { panic!() };
        assert!(t.coords().iter().all(|v| v.residue().is_zero()));
    }

    #[test]
    fn lambda_is_additive_on_w2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = PrimeCfg::new(7).unwrap();
        let m = pow_p(7, 10);
        for _ in 0..10 {
            let mut v = || WittVec::new(cfg, (0..3).map(|_| PadicInt::new(7, BigInt::from(rng.gen::<u64>()).mod_floor(&m), 10)).collect()).unwrap();
            let (x, y) = (v(), v());
            assert!(lambda_additivity_defect(&cfg, 3, &x, &y).unwrap().residue().is_zero());
        }
    }
}
