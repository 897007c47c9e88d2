//! p-typical Witt vectors of finite length.
//!
//! `W_n(B)` has coordinates `(x_0, …, x_n)` and ghost components
//! `w_h = x_0^{q^h} + p·x_1^{q^{h-1}} + … + p^h·x_h`. Ring operations are
//! given by universal integer polynomials; over torsion-free rings they are
//! computed on the ghost side, which yields the same values.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::dpoly::{var, DPoly, Var};
use crate::error::{Error, Result};
use crate::json::{vec_from_json, vec_to_json, JsonElem};
use crate::ringcore::{DeltaRing, PadicInt, PrimeCfg, Ring};

/// Lengths above this never use universal polynomials.
pub const UNIVERSAL_LENGTH_CAP: usize = 5;

/// Term cap for building one universal polynomial family.
pub const UNIVERSAL_TERM_BUDGET: usize = 20_000;

/// A Witt vector `(x_0, …, x_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WittVec<R> {
    cfg: PrimeCfg,
    coords: Vec<R>,
}

/// Ghost components `⟨w_0, …, w_n⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct GhostVec<R> {
    pub comps: Vec<R>,
}

impl<R> GhostVec<R> {
    pub fn new(comps: Vec<R>) -> Self {
        GhostVec { comps }
    }
}

/// The two binary Witt operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WittOp {
    Add,
    Mul,
}

/// Coefficient rings for Witt arithmetic.
///
/// `via_torsion_free` evaluates a coordinate map that is given by integer
/// polynomials: the map is computed in a torsion-free ring `Tf` on lifts of
/// the inputs and the result is brought back. Output coordinate `h` may
/// depend on the first `deps(h)` coordinates of each input.
pub trait WittCoeff: Ring {
    type Tf: Ring;

    /// The Frobenius lift on lifted values.
    fn tf_frobenius(cfg: &PrimeCfg, x: &Self::Tf) -> Result<Self::Tf>;

    /// Equality of values; precision-tracking rings compare at the common
    /// precision.
    fn same_value(a: &Self, b: &Self) -> bool {
        a == b
    }

    fn via_torsion_free<F>(inputs: &[&[Self]], deps: &dyn Fn(usize) -> usize, f: F) -> Result<Vec<Self>>
    where
        F: FnOnce(&[Vec<Self::Tf>]) -> Result<Vec<Self::Tf>>;

    /// Applies a binary Witt operation.
    fn witt_binop(cfg: &PrimeCfg, op: WittOp, x: &[Self], y: &[Self]) -> Result<Vec<Self>> {
        Self::via_torsion_free(&[x, y], &|h| h + 1, |v| ghost_binop(cfg, op, &v[0], &v[1]))
    }
}

impl WittCoeff for BigInt {
    type Tf = BigInt;
    fn tf_frobenius(_cfg: &PrimeCfg, x: &BigInt) -> Result<BigInt> {
        Ok(x.clone())
    }
    fn via_torsion_free<F>(inputs: &[&[Self]], _deps: &dyn Fn(usize) -> usize, f: F) -> Result<Vec<Self>>
    where
        F: FnOnce(&[Vec<BigInt>]) -> Result<Vec<BigInt>>,
    {
        let v: Vec<Vec<BigInt>> = inputs.iter().map(|x| x.to_vec()).collect();
        f(&v)
    }
}

impl WittCoeff for DPoly {
    type Tf = DPoly;
    fn tf_frobenius(cfg: &PrimeCfg, x: &DPoly) -> Result<DPoly> {
        x.frobenius(cfg)
    }
    fn via_torsion_free<F>(inputs: &[&[Self]], _deps: &dyn Fn(usize) -> usize, f: F) -> Result<Vec<Self>>
    where
        F: FnOnce(&[Vec<DPoly>]) -> Result<Vec<DPoly>>,
    {
        let v: Vec<Vec<DPoly>> = inputs.iter().map(|x| x.to_vec()).collect();
        f(&v)
    }
}

impl WittCoeff for PadicInt {
    type Tf = BigInt;
    fn tf_frobenius(_cfg: &PrimeCfg, x: &BigInt) -> Result<BigInt> {
        Ok(x.clone())
    }

    fn same_value(a: &Self, b: &Self) -> bool {
        let n = a.precision().min(b.precision());
        a.p() == b.p() && a.truncate(n) == b.truncate(n)
    }
    fn via_torsion_free<F>(inputs: &[&[Self]], deps: &dyn Fn(usize) -> usize, f: F) -> Result<Vec<Self>>
    where
        F: FnOnce(&[Vec<BigInt>]) -> Result<Vec<BigInt>>,
    {
        let p = inputs
            .iter()
            .flat_map(|x| x.first())
            .map(|x| x.p())
            .next()
            .ok_or_else(|| Error::LengthMismatch("empty Witt vector".into()))?;
        if inputs.iter().flat_map(|x| x.iter()).any(|x| x.p() != p) {
            return Err(Error::Config("mismatched primes in Witt coordinates".into()));
        }
        let lifts: Vec<Vec<BigInt>> = inputs.iter().map(|x| x.iter().map(|c| c.residue().clone()).collect()).collect();
        let out = f(&lifts)?;
        Ok(out
            .into_iter()
            .enumerate()
            .map(|(h, v)| {
                let d = deps(h);
                let prec = inputs.iter().flat_map(|x| x.iter().take(d)).map(|c| c.precision()).min().unwrap_or(0);
                PadicInt::new(p, v, prec)
            })
            .collect())
    }

    fn witt_binop(cfg: &PrimeCfg, op: WittOp, x: &[Self], y: &[Self]) -> Result<Vec<Self>> {
        if let Some(polys) = universal_polynomials(cfg, op, x.len()) {
            let top = x.iter().chain(y).map(|c| c.precision()).max().unwrap_or(0);
            let template = PadicInt::zero(cfg.p(), top);
            let mut vals: HashMap<Var, PadicInt> = HashMap::new();
            for (i, c) in x.iter().enumerate() {
                vals.insert(var(0, i as u32), c.clone());
            }
            for (i, c) in y.iter().enumerate() {
                vals.insert(var(1, i as u32), c.clone());
            }
            return polys.iter().map(|s| s.eval(&template, &vals)).collect();
        }
        Self::via_torsion_free(&[x, y], &|h| h + 1, |v| ghost_binop(cfg, op, &v[0], &v[1]))
    }
}

fn ghost_binop<T: Ring>(cfg: &PrimeCfg, op: WittOp, x: &[T], y: &[T]) -> Result<Vec<T>> {
    let gx = ghost_of(cfg, x);
    let gy = ghost_of(cfg, y);
    let g: Vec<T> = gx
        .iter()
        .zip(&gy)
        .map(|(a, b)| match op {
            WittOp::Add => a.add(b),
            WittOp::Mul => a.mul(b),
        })
        .collect();
    unghost_of(cfg, &g)
}

/// Ghost components of a coordinate tuple.
pub fn ghost_of<T: Ring>(cfg: &PrimeCfg, x: &[T]) -> Vec<T> {
    let q = cfg.q();
    (0..x.len())
        .map(|h| {
            let mut acc = x[0].zero_like();
            for (i, xi) in x.iter().enumerate().take(h + 1) {
                let e = q.pow((h - i) as u32);
                acc = acc.add(&xi.pow(e).mul_p_pow(cfg.p(), i as u32));
            }
            acc
        })
        .collect()
}

/// Solves the ghost equations for the coordinates by exact division.
pub fn unghost_of<T: Ring>(cfg: &PrimeCfg, g: &[T]) -> Result<Vec<T>> {
    let q = cfg.q();
    let mut x: Vec<T> = Vec::with_capacity(g.len());
    for (h, wh) in g.iter().enumerate() {
        let mut num = wh.clone();
        for (i, xi) in x.iter().enumerate() {
            let e = q.pow((h - i) as u32);
            num = num.sub(&xi.pow(e).mul_p_pow(cfg.p(), i as u32));
        }
        let xh = num.div_p_pow(cfg.p(), h as u32).map_err(|e| match e {
            Error::NotDivisible => Error::NotInGhostImage { index: h },
            other => other,
        })?;
        x.push(xh);
    }
    Ok(x)
}

type UniversalKey = (u64, u64, WittOp, usize);

fn universal_cache() -> &'static Mutex<HashMap<UniversalKey, Option<Arc<Vec<DPoly>>>>> {
    static CACHE: OnceLock<Mutex<HashMap<UniversalKey, Option<Arc<Vec<DPoly>>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Universal sum or product polynomials `S_h(x_0..x_h, y_0..y_h)` for
/// vectors of the given length, built once by unghosting over the integer
/// polynomial ring and cached. The coordinate `x_i` is the variable
/// `var(0, i)` and `y_i` is `var(1, i)`.
///
/// Returns `None` above [`UNIVERSAL_LENGTH_CAP`] or when the polynomials
/// exceed [`UNIVERSAL_TERM_BUDGET`] terms; callers then fall back to
/// torsion-free ghost arithmetic.
pub fn universal_polynomials(cfg: &PrimeCfg, op: WittOp, len: usize) -> Option<Arc<Vec<DPoly>>> {
    if len == 0 || len > UNIVERSAL_LENGTH_CAP {
        return None;
    }
    let key = (cfg.p(), cfg.q(), op, len);
    if let Some(hit) = universal_cache().lock().expect("cache lock").get(&key) {
        return hit.clone();
    }
    let built = build_universal(cfg, op, len).ok().map(Arc::new);
    universal_cache().lock().expect("cache lock").insert(key, built.clone());
    built
}

fn build_universal(cfg: &PrimeCfg, op: WittOp, len: usize) -> Result<Vec<DPoly>> {
    let xs: Vec<DPoly> = (0..len).map(|i| DPoly::var(0, i as u32)).collect();
    let ys: Vec<DPoly> = (0..len).map(|i| DPoly::var(1, i as u32)).collect();
    let budget = UNIVERSAL_TERM_BUDGET;
    let q = cfg.q();
    let ghost = |v: &[DPoly]| -> Result<Vec<DPoly>> {
        (0..len)
            .map(|h| {
                let mut acc = DPoly::zero();
                for (i, vi) in v.iter().enumerate().take(h + 1) {
                    acc = acc.add(&vi.try_pow(q.pow((h - i) as u32), budget)?.mul_p_pow(cfg.p(), i as u32));
                }
                Ok(acc)
            })
            .collect()
    };
    let gx = ghost(&xs)?;
    let gy = ghost(&ys)?;
    let mut g = Vec::with_capacity(len);
    for (a, b) in gx.iter().zip(&gy) {
        g.push(match op {
            WittOp::Add => a.add(b),
            WittOp::Mul => a.try_mul(b, budget)?,
        });
    }
    let mut out: Vec<DPoly> = Vec::with_capacity(len);
    for (h, wh) in g.iter().enumerate() {
        let mut num = wh.clone();
        for (i, si) in out.iter().enumerate() {
            num = num.sub(&si.try_pow(q.pow((h - i) as u32), budget)?.mul_p_pow(cfg.p(), i as u32));
            if num.num_terms() > budget {
                return Err(Error::TermBudget { limit: budget });
            }
        }
        out.push(num.div_p_pow(cfg.p(), h as u32).map_err(|_| Error::Invariant("universal polynomial not integral".into()))?);
    }
    Ok(out)
}

impl<R: WittCoeff> WittVec<R> {
    pub fn new(cfg: PrimeCfg, coords: Vec<R>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::LengthMismatch("a Witt vector needs at least one coordinate".into()));
        }
        Ok(WittVec { cfg, coords })
    }

    pub fn cfg(&self) -> &PrimeCfg {
        &self.cfg
    }

    pub fn coords(&self) -> &[R] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<R> {
        self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    /// Always false: a Witt vector has at least one coordinate.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn zero_like(&self) -> Self {
        WittVec { cfg: self.cfg, coords: vec![self.coords[0].zero_like(); self.len()] }
    }

    pub fn ghost(&self) -> GhostVec<R> {
        GhostVec::new(ghost_of(&self.cfg, &self.coords))
    }

    pub fn unghost(cfg: PrimeCfg, g: &GhostVec<R>) -> Result<Self> {
        Self::new(cfg, unghost_of(&cfg, &g.comps)?)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.cfg != other.cfg {
            return Err(Error::Config("Witt vectors over different primes".into()));
        }
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(format!("lengths {} and {}", self.len(), other.len())));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Self::new(self.cfg, R::witt_binop(&self.cfg, WittOp::Add, &self.coords, &other.coords)?)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Self::new(self.cfg, R::witt_binop(&self.cfg, WittOp::Mul, &self.coords, &other.coords)?)
    }

    pub fn neg(&self) -> Result<Self> {
        let cfg = self.cfg;
        let out = R::via_torsion_free(&[&self.coords], &|h| h + 1, |v| {
            let g: Vec<_> = ghost_of(&cfg, &v[0]).iter().map(|w| w.neg()).collect();
            unghost_of(&cfg, &g)
        })?;
        Self::new(cfg, out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg()?)
    }

    /// Witt multiplication by the integer `n`, i.e. `n ⊠ x`.
    pub fn scale_int(&self, n: &BigInt) -> Result<Self> {
        let cfg = self.cfg;
        let out = R::via_torsion_free(&[&self.coords], &|h| h + 1, |v| {
            let g: Vec<_> = ghost_of(&cfg, &v[0]).iter().map(|w| w.scale_int(n)).collect();
            unghost_of(&cfg, &g)
        })?;
        Self::new(cfg, out)
    }

    /// The Witt Frobenius `F: W_n → W_{n-1}`, the one-step ghost shift.
    pub fn frobenius(&self) -> Result<Self> {
        if self.len() < 2 {
            return Err(Error::LengthMismatch("Frobenius needs length >= 2".into()));
        }
        let cfg = self.cfg;
        let out = R::via_torsion_free(&[&self.coords], &|h| h + 2, |v| {
            let g = ghost_of(&cfg, &v[0]);
            unghost_of(&cfg, &g[1..])
        })?;
        Self::new(cfg, out)
    }

    /// `F^k`.
    pub fn frobenius_iter(&self, k: usize) -> Result<Self> {
        if self.len() <= k {
            return Err(Error::LengthMismatch(format!("F^{k} needs length > {k}")));
        }
        let cfg = self.cfg;
        let out = R::via_torsion_free(&[&self.coords], &|h| h + k + 1, |v| {
            let g = ghost_of(&cfg, &v[0]);
            unghost_of(&cfg, &g[k..])
        })?;
        Self::new(cfg, out)
    }

    /// The restriction `T`: drops the last coordinate.
    pub fn restriction(&self) -> Result<Self> {
        if self.len() < 2 {
            return Err(Error::LengthMismatch("restriction needs length >= 2".into()));
        }
        Self::new(self.cfg, self.coords[..self.len() - 1].to_vec())
    }

    /// The Verschiebung `V(x_0, …, x_{n-1}) = (0, x_0, …, x_{n-1})`.
    pub fn verschiebung(&self) -> Self {
        let mut coords = vec![self.coords[0].zero_like()];
        coords.extend(self.coords.iter().cloned());
        WittVec { cfg: self.cfg, coords }
    }

    /// The Teichmüller lift `(a, 0, …, 0)` of length `len`.
    pub fn teichmuller(cfg: PrimeCfg, a: R, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::LengthMismatch("length must be positive".into()));
        }
        let mut coords = vec![a.zero_like(); len];
        coords[0] = a;
        Self::new(cfg, coords)
    }

    /// The coordinatewise congruence `F(x) ≡ (x_0^p, …) mod p` fails at index `h`.
    pub fn frobenius_congruence_failure(&self) -> Result<Option<usize>> {
        let f = self.frobenius()?;
        for (h, fh) in f.coords.iter().enumerate() {
            let d = fh.sub(&self.coords[h].pow(self.cfg.p()));
            if d.div_p(self.cfg.p()).is_err() {
                return Ok(Some(h));
            }
        }
        Ok(None)
    }
}

impl<R: WittCoeff + DeltaRing> WittVec<R> {
    /// The universal map `r ↦ exp_δ(r) ∈ W_n`, with ghost `⟨r, φr, …, φ^n r⟩`.
    /// The result has `n + 1` coordinates.
    pub fn exp_delta(cfg: PrimeCfg, r: &R, n: usize) -> Result<Self> {
        let mut g = vec![r.clone()];
        for _ in 0..n {
            let next = g.last().unwrap().frobenius(&cfg)?;
            g.push(next);
        }
        Self::new(cfg, unghost_of(&cfg, &g)?)
    }
}

impl WittVec<PadicInt> {
    /// `exp_δ` over `Z_p`, requiring precision at least `n`.
    pub fn exp_delta_padic(cfg: PrimeCfg, r: &PadicInt, n: usize) -> Result<Self> {
        if (r.precision() as usize) < n {
            return Err(Error::InsufficientPrecision(format!("exp_delta to length {} needs precision >= {n}", n + 1)));
        }
        Self::exp_delta(cfg, r, n)
    }
}

impl<R: WittCoeff + JsonElem> WittVec<R> {
    pub fn to_json(&self) -> Value {
        json!({"p": self.cfg.p(), "coords": vec_to_json(&self.coords)})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let p = v.get("p").and_then(Value::as_u64).ok_or_else(|| Error::Parse("missing \"p\"".into()))?;
        let coords = vec_from_json(v.get("coords").ok_or_else(|| Error::Parse("missing \"coords\"".into()))?)?;
        Self::new(PrimeCfg::new(p)?, coords)
    }
}

/// The symbolic first two sum coordinates, for documentation and tests:
/// `s_1 = x_1 + y_1 + C_p(x_0, y_0)` with `C_p(x, y) = (x^q + y^q − (x+y)^q)/p`.
pub fn carry_polynomial(cfg: &PrimeCfg) -> DPoly {
    let x = DPoly::var(0, 0);
    let y = DPoly::var(1, 0);
    let q = cfg.q();
    x.pow(q).add(&y.pow(q)).sub(&x.add(&y).pow(q)).div_exact(&cfg.p_big()).expect("binomial coefficients are divisible by p")
}

/// Integer helper: `exp_δ(r)` over `Z` with `φ = id`.
pub fn exp_delta_int(cfg: PrimeCfg, r: &BigInt, n: usize) -> Result<WittVec<BigInt>> {
    WittVec::unghost(cfg, &GhostVec::new(vec![r.clone(); n + 1]))
}

#[allow(dead_code)]
fn is_unit_int(x: &BigInt) -> bool {
    x.is_one() || (-x).is_one() || x.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(p: u64) -> PrimeCfg {
        PrimeCfg::new(p).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn wv(p: u64, v: &[i64]) -> WittVec<BigInt> {
        WittVec::new(cfg(p), ints(v)).unwrap()
    }

    #[test]
    fn ghost_examples() {
        assert_eq!(wv(3, &[2, 1]).ghost().comps, ints(&[2, 11]));
        assert_eq!(wv(3, &[5, 0, 0]).ghost().comps, ints(&[5, 125, 5i64.pow(9)]));
        assert_eq!(wv(5, &[0, 0, 0]).ghost().comps, ints(&[0, 0, 0]));
    }

    #[test]
    fn unghost_examples() {
        let u = WittVec::unghost(cfg(2), &GhostVec::new(ints(&[2, 2]))).unwrap();
        assert_eq!(u.coords(), &ints(&[2, -1])[..]);
        let t = WittVec::unghost(cfg(3), &GhostVec::new(ints(&[4, 64]))).unwrap();
        assert_eq!(t.coords(), &ints(&[4, 0])[..]);
        assert_eq!(WittVec::unghost(cfg(3), &GhostVec::new(ints(&[1, 2]))), Err(Error::NotInGhostImage { index: 1 }));
    }

    #[test]
    fn add_examples() {
        let x = wv(3, &[4, -2, 7]);
        assert_eq!(x.add(&x.zero_like()).unwrap(), x);
        assert_eq!(wv(2, &[1, 0]).add(&wv(2, &[1, 0])).unwrap(), wv(2, &[2, -1]));
    }

    #[test]
    fn universal_sum_low_coordinates() {
        for p in [2u64, 3, 5] {
            let c = cfg(p);
            let s = universal_polynomials(&c, WittOp::Add, 2).unwrap();
            assert_eq!(s[0], DPoly::var(0, 0).add(&DPoly::var(1, 0)));
            let s1 = DPoly::var(0, 1).add(&DPoly::var(1, 1)).add(&carry_polynomial(&c));
            assert_eq!(s[1], s1);
        }
    }

    #[test]
    fn frobenius_restriction_verschiebung() {
        let c = cfg(3);
        let x = wv(3, &[2, 5]);
        assert_eq!(x.frobenius().unwrap().coords(), &ints(&[8 + 15])[..]);
        assert_eq!(wv(3, &[1, 2, 3]).restriction().unwrap(), wv(3, &[1, 2]));
        assert!(wv(3, &[1]).frobenius().is_err());
        assert!(wv(3, &[1]).restriction().is_err());
        for v in [[3i64, -1], [7, 2]] {
            let x = wv(3, &v);
            let fv = x.verschiebung().frobenius().unwrap();
            assert_eq!(fv, x.scale_int(&BigInt::from(3)).unwrap());
        }
        let x = WittVec::new(c, ints(&[2, 1, 4])).unwrap();
        let fv = x.verschiebung().frobenius().unwrap();
        assert_eq!(fv, x.scale_int(&BigInt::from(3)).unwrap());
        assert_eq!(WittVec::teichmuller(c, BigInt::from(5), 3).unwrap(), wv(3, &[5, 0, 0]));
    }

    #[test]
    fn exp_delta_examples() {
        let c3 = cfg(3);
        assert_eq!(exp_delta_int(c3, &BigInt::from(2), 1).unwrap(), wv(3, &[2, -2]));
        for r in [0, 1] {
            assert_eq!(exp_delta_int(c3, &BigInt::from(r), 3).unwrap(), wv(3, &[r, 0, 0, 0]));
        }
        let c5 = cfg(5);
        let e = exp_delta_int(c5, &BigInt::from(7), 2).unwrap();
        assert_eq!(e.coords()[1], BigInt::from((7 - 7i64.pow(5)) / 5));
        assert_eq!(e.ghost().comps, ints(&[7, 7, 7]));
        let r = PadicInt::from_i64(5, 7, 6);
        let ep = WittVec::exp_delta_padic(c5, &r, 2).unwrap();
        for (h, x) in ep.coords().iter().enumerate() {
            assert_eq!(x.precision(), 6 - h as u32);
            assert_eq!(x, &PadicInt::new(5, e.coords()[h].clone(), 6 - h as u32));
        }
        assert!(WittVec::exp_delta_padic(c5, &PadicInt::from_i64(5, 7, 1), 2).is_err());
    }

    #[test]
    fn padic_unghost_precision() {
        let c = cfg(3);
        let g = GhostVec::new(vec![PadicInt::from_i64(3, 2, 8); 3]);
        let u = WittVec::unghost(c, &g).unwrap();
        let prec: Vec<u32> = u.coords().iter().map(|x| x.precision()).collect();
        assert_eq!(prec, vec![8, 7, 6]);
    }

    #[test]
    fn padic_ops_match_integer_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [2u64, 3, 5] {
            let c = cfg(p);
            for len in 1..=4 {
                for _ in 0..10 {
                    let a: Vec<i64> = (0..len).map(|_| rng.gen_range(-40..40)).collect();
                    let b: Vec<i64> = (0..len).map(|_| rng.gen_range(-40..40)).collect();
                    let (xa, xb) = (wv(p, &a), wv(p, &b));
                    let pa = WittVec::new(c, a.iter().map(|&v| PadicInt::from_i64(p, v, 10)).collect()).unwrap();
                    let pb = WittVec::new(c, b.iter().map(|&v| PadicInt::from_i64(p, v, 10)).collect()).unwrap();
                    for (int_res, pad_res) in [
                        (xa.add(&xb).unwrap(), pa.add(&pb).unwrap()),
                        (xa.mul(&xb).unwrap(), pa.mul(&pb).unwrap()),
                    ] {
                        for (i, z) in int_res.coords().iter().enumerate() {
                            assert_eq!(pad_res.coords()[i], PadicInt::new(p, z.clone(), 10));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ghost_homomorphy_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = [2u64, 3, 5][rng.gen_range(0..3)];
            let len = rng.gen_range(1..=4);
            let a: Vec<i64> = (0..len).map(|_| rng.gen_range(-30..30)).collect();
            let b: Vec<i64> = (0..len).map(|_| rng.gen_range(-30..30)).collect();
            let (x, y) = (wv(p, &a), wv(p, &b));
            let (gx, gy) = (x.ghost().comps, y.ghost().comps);
            let s = x.add(&y).unwrap().ghost().comps;
            let m = x.mul(&y).unwrap().ghost().comps;
            for h in 0..len {
                assert_eq!(s[h], &gx[h] + &gy[h]);
                assert_eq!(m[h], &gx[h] * &gy[h]);
            }
            assert_eq!(WittVec::unghost(x.cfg, &x.ghost()).unwrap(), x);
        }
    }

    #[test]
    fn json_round_trip() {
        let x = wv(3, &[2, -1]);
        let j = x.to_json();
        assert_eq!(j.to_string(), r#"{"coords":[2,-1],"p":3}"#);
        assert_eq!(WittVec::<BigInt>::from_json(&j).unwrap(), x);
    }
}
