//! m-shifted Witt vectors `W_{[m]n}(B) = R^{m+1} × B^n` and the lateral
//! Frobenius `F̃: W_{[m]n} → W_{[m]n-1}`.
//!
//! On ghost components `F̃` acts by
//! `⟨z_0, …, z_{m+n}⟩ ↦ ⟨φz_0, …, φz_m, z_{m+2}, …, z_{m+n}⟩`: it applies the
//! Frobenius lift to the head and skips the slot `m + 1`.

use num_bigint::BigInt;
use serde_json::{json, Value};

use crate::dpoly::DPoly;
use crate::error::{Error, Result};
use crate::json::{vec_from_json, vec_to_json, JsonElem};
use crate::ringcore::{DeltaRing, PrimeCfg, Ring};
use crate::witt::{ghost_of, GhostVec, WittCoeff, WittVec};

/// An element `(x_0, …, x_m; x_{m+1}, …, x_{m+n})`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedWitt<R> {
    cfg: PrimeCfg,
    m: usize,
    head: Vec<R>,
    tail: Vec<R>,
}

/// Outcome of comparing `F^{m+2}∘I` with `F^{m+1}∘I∘F̃`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommReport<R> {
    pub m: usize,
    pub n: usize,
    pub equal: bool,
    /// First coordinate where the two sides differ.
    pub mismatch: Option<usize>,
    pub lhs: Vec<R>,
    pub rhs: Vec<R>,
}

impl<R: WittCoeff + DeltaRing> ShiftedWitt<R> {
    pub fn new(cfg: PrimeCfg, m: usize, head: Vec<R>, tail: Vec<R>) -> Result<Self> {
        if head.len() != m + 1 {
            return Err(Error::LengthMismatch(format!("head of a {m}-shifted vector has {} entries, expected {}", head.len(), m + 1)));
        }
        Ok(ShiftedWitt { cfg, m, head, tail })
    }

    /// Splits a full coordinate tuple after position `m`.
    pub fn from_coords(cfg: PrimeCfg, m: usize, coords: Vec<R>) -> Result<Self> {
        if coords.len() < m + 1 {
            return Err(Error::LengthMismatch(format!("need at least {} coordinates", m + 1)));
        }
        let mut head = coords;
        let tail = head.split_off(m + 1);
        Self::new(cfg, m, head, tail)
    }

    pub fn cfg(&self) -> &PrimeCfg {
        &self.cfg
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.tail.len()
    }

    pub fn head(&self) -> &[R] {
        &self.head
    }

    pub fn tail(&self) -> &[R] {
        &self.tail
    }

    pub fn coords(&self) -> Vec<R> {
        self.head.iter().chain(&self.tail).cloned().collect()
    }

    pub fn shifted_ghost(&self) -> GhostVec<R> {
        GhostVec::new(ghost_of(&self.cfg, &self.coords()))
    }

    /// The inclusion `I: W_{[m]n}(B) → W_{m+n}(B)`.
    pub fn include(&self) -> WittVec<R> {
        WittVec::new(self.cfg, self.coords()).expect("head is nonempty")
    }

    /// The restriction `T: W_{[m]n} → W_{[m]n-1}`.
    pub fn restriction(&self) -> Result<Self> {
        if self.tail.is_empty() {
            return Err(Error::LengthMismatch("restriction needs n >= 1".into()));
        }
        Self::new(self.cfg, self.m, self.head.clone(), self.tail[..self.tail.len() - 1].to_vec())
    }

    /// Witt sum of the underlying tuples.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.binop(other, true)
    }

    /// Witt product of the underlying tuples.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.binop(other, false)
    }

    fn binop(&self, other: &Self, add: bool) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::LengthMismatch(format!("shifts {} and {}", self.m, other.m)));
        }
        let (a, b) = (self.include(), other.include());
        let r = if add { a.add(&b)? } else { a.mul(&b)? };
        Self::from_coords(self.cfg, self.m, r.into_coords())
    }

    /// The lateral Frobenius. Head entries map to `φ(x_i)`; tail entries are
    /// given by the recurrence
    /// `F̃_h = Σ_{i<h} p^{i-h}(x_i^{q^{h+1-i}} − F̃_i^{q^{h-i}}) + x_h^q + p·x_{h+1}`,
    /// every division being exact.
    pub fn lateral_frobenius(&self) -> Result<Self> {
        if self.tail.is_empty() {
            return Err(Error::LengthMismatch("lateral Frobenius needs n >= 1".into()));
        }
        let cfg = self.cfg;
        let m = self.m;
        let coords = self.coords();
        let out = R::via_torsion_free(&[&coords], &|h| if h <= m { h + 1 } else { h + 2 }, |v| lateral_recurrence::<R>(&cfg, m, &v[0]))?;
        Self::from_coords(cfg, m, out)
    }

    /// `F̃^k`.
    pub fn lateral_frobenius_iter(&self, k: usize) -> Result<Self> {
        let mut s = self.clone();
        for _ in 0..k {
            s = s.lateral_frobenius()?;
        }
        Ok(s)
    }

    /// Index `h` of the first output coordinate with `F̃_h ≢ x_h^q (mod p)`.
    pub fn congruence_failure(&self, out: &Self) -> Option<usize> {
        let x = self.coords();
        out.coords().iter().enumerate().find_map(|(h, fh)| {
            let d = fh.sub(&x[h].pow(self.cfg.q()));
            if d.div_p(self.cfg.p()).is_err() {
                Some(h)
            } else {
                None
            }
        })
    }

    /// Evaluates both sides of `F^{m+2}∘I = F^{m+1}∘I∘F̃`.
    pub fn check_comm_identity(&self) -> Result<CommReport<R>> {
        if self.n() < 2 {
            return Err(Error::LengthMismatch("the identity is stated for n >= 2".into()));
        }
        let lhs = self.include().frobenius_iter(self.m + 2)?.into_coords();
        let rhs = self.lateral_frobenius()?.include().frobenius_iter(self.m + 1)?.into_coords();
        let mismatch = lhs.iter().zip(&rhs).position(|(a, b)| !R::same_value(a, b));
        let mismatch = if lhs.len() != rhs.len() { Some(lhs.len().min(rhs.len())) } else { mismatch };
        Ok(CommReport { m: self.m, n: self.n(), equal: mismatch.is_none(), mismatch, lhs, rhs })
    }
}

/// Runs the lateral Frobenius recurrence in a torsion-free ring.
fn lateral_recurrence<R: WittCoeff>(cfg: &PrimeCfg, m: usize, x: &[R::Tf]) -> Result<Vec<R::Tf>> {
    let p = cfg.p();
    let q = cfg.q();
    let len = x.len() - 1;
    let mut out: Vec<R::Tf> = Vec::with_capacity(len);
    for xi in x.iter().take(m + 1) {
        out.push(R::tf_frobenius(cfg, xi)?);
    }
    for h in (m + 1)..len {
        let mut num = x[0].zero_like();
        for i in 0..h {
            let a = x[i].pow(q.pow((h + 1 - i) as u32));
            let b = out[i].pow(q.pow((h - i) as u32));
            num = num.add(&a.sub(&b).mul_p_pow(p, i as u32));
        }
        let lead = num
            .div_p_pow(p, h as u32)
            .map_err(|_| Error::Invariant(format!("lateral Frobenius division at coordinate {h} is not exact")))?;
        out.push(lead.add(&x[h].pow(q)).add(&x[h + 1].mul_p_pow(p, 1)));
    }
    Ok(out)
}

impl<R: WittCoeff + DeltaRing + JsonElem> ShiftedWitt<R> {
    pub fn to_json(&self) -> Value {
        json!({"p": self.cfg.p(), "m": self.m, "head": vec_to_json(&self.head), "tail": vec_to_json(&self.tail)})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let p = v.get("p").and_then(Value::as_u64).ok_or_else(|| Error::Parse("missing \"p\"".into()))?;
        let m = v.get("m").and_then(Value::as_u64).ok_or_else(|| Error::Parse("missing \"m\"".into()))? as usize;
        let head = vec_from_json(v.get("head").ok_or_else(|| Error::Parse("missing \"head\"".into()))?)?;
        let tail = vec_from_json(v.get("tail").unwrap_or(&Value::Array(vec![])))?;
        Self::new(PrimeCfg::new(p)?, m, head, tail)
    }
}

/// A shifted vector of free symbols: coordinate `i` is the variable
/// `x_i^{(0)}`, and `φ(x_i) = x_i^q + p·x_i'` on the head.
pub fn symbolic(cfg: PrimeCfg, m: usize, n: usize) -> ShiftedWitt<DPoly> {
    let coords: Vec<DPoly> = (0..=(m + n)).map(|i| DPoly::var(i as u32, 0)).collect();
    ShiftedWitt::from_coords(cfg, m, coords).expect("lengths are consistent")
}

/// Integer shifted vector from small values.
pub fn from_ints(cfg: PrimeCfg, m: usize, coords: &[i64]) -> Result<ShiftedWitt<BigInt>> {
    ShiftedWitt::from_coords(cfg, m, coords.iter().map(|&c| BigInt::from(c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ringcore::PadicInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(p: u64) -> PrimeCfg {
        PrimeCfg::new(p).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn ghost_examples() {
        let s = from_ints(cfg(2), 1, &[3, 5, 7]).unwrap();
        assert_eq!(s.shifted_ghost().comps, ints(&[3, 9 + 10, 81 + 50 + 28]));
        let h = from_ints(cfg(3), 2, &[1, 2, 3]).unwrap();
        assert_eq!(h.shifted_ghost(), WittVec::new(cfg(3), ints(&[1, 2, 3])).unwrap().ghost());
        assert_eq!(from_ints(cfg(5), 0, &[0, 0]).unwrap().shifted_ghost().comps, ints(&[0, 0]));
    }

    #[test]
    fn include_examples() {
        let s = from_ints(cfg(3), 0, &[4, 9]).unwrap();
        assert_eq!(s.include().coords(), &ints(&[4, 9])[..]);
        assert_eq!(s.include().ghost(), s.shifted_ghost());
    }

    #[test]
    fn lateral_examples() {
        let s = from_ints(cfg(3), 0, &[5, 7]).unwrap();
        assert_eq!(s.lateral_frobenius().unwrap().coords(), ints(&[5]));
        let s = from_ints(cfg(2), 0, &[1, 1, 1]).unwrap();
        let f = s.lateral_frobenius().unwrap();
        assert_eq!(f.coords(), ints(&[1, 3]));
        assert_eq!(f.shifted_ghost().comps, ints(&[1, 7]));
    }

    #[test]
    fn symbolic_first_tail_coordinate() {
        for p in [2u64, 3] {
            let c = cfg(p);
            let s = symbolic(c, 0, 2);
            let f = s.lateral_frobenius().unwrap();
            let x0 = DPoly::var(0, 0);
            let phi0 = x0.frobenius(&c).unwrap();
            let q = c.q();
            let expect = DPoly::var(1, 0)
                .pow(q)
                .add(&DPoly::var(2, 0).scale_i64(p as i64))
                .add(&x0.pow(q * q).sub(&phi0.pow(q)).div_exact(&BigInt::from(p)).unwrap());
            assert_eq!(f.coords()[1], expect);
        }
    }

    #[test]
    fn ghost_contract_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..60 {
            let p = [2u64, 3, 5][rng.gen_range(0..3)];
            let m = rng.gen_range(0..3);
            let n = rng.gen_range(1..4);
            let v: Vec<i64> = (0..=(m + n)).map(|_| rng.gen_range(-20..20)).collect();
            let s = from_ints(cfg(p), m, &v).unwrap();
            let f = s.lateral_frobenius().unwrap();
            let z = s.shifted_ghost().comps;
            let mut expect: Vec<BigInt> = z[..=m].to_vec();
            expect.extend(z[m + 2..].iter().cloned());
            assert_eq!(f.shifted_ghost().comps, expect);
            assert_eq!(s.congruence_failure(&f), None);
        }
    }

    #[test]
    fn homomorphism_and_restriction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let p = [2u64, 3][rng.gen_range(0..2)];
            let m = rng.gen_range(0..3);
            let n = rng.gen_range(1..4);
            let a: Vec<i64> = (0..=(m + n)).map(|_| rng.gen_range(-9..9)).collect();
            let b: Vec<i64> = (0..=(m + n)).map(|_| rng.gen_range(-9..9)).collect();
            let (x, y) = (from_ints(cfg(p), m, &a).unwrap(), from_ints(cfg(p), m, &b).unwrap());
            let fx = x.lateral_frobenius().unwrap();
            let fy = y.lateral_frobenius().unwrap();
            assert_eq!(x.add(&y).unwrap().lateral_frobenius().unwrap(), fx.add(&fy).unwrap());
            assert_eq!(x.mul(&y).unwrap().lateral_frobenius().unwrap(), fx.mul(&fy).unwrap());
            if n >= 2 {
                assert_eq!(fx.restriction().unwrap(), x.restriction().unwrap().lateral_frobenius().unwrap());
            }
        }
    }

    #[test]
    fn comm_identity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<i64> = (0..3).map(|_| rng.gen_range(-50..50)).collect();
        let s = from_ints(cfg(3), 0, &v).unwrap();
        assert!(s.check_comm_identity().unwrap().equal);
        let z = from_ints(cfg(3), 1, &[0, 0, 0, 0]).unwrap();
        assert!(z.check_comm_identity().unwrap().equal);
        assert!(from_ints(cfg(3), 1, &[1, 2, 3]).unwrap().check_comm_identity().is_err());
        let sym = symbolic(cfg(2), 1, 3);
        let r = sym.check_comm_identity().unwrap();
        assert!(r.equal, "{:?}", r.mismatch);
    }

    #[test]
    fn padic_lateral_matches_integers() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let p = [2u64, 3, 5][rng.gen_range(0..3)];
            let m = rng.gen_range(0..3);
            let n = rng.gen_range(1..4);
            let v: Vec<i64> = (0..=(m + n)).map(|_| rng.gen_range(-99..99)).collect();
            let s = from_ints(cfg(p), m, &v).unwrap();
            let sp = ShiftedWitt::from_coords(cfg(p), m, v.iter().map(|&c| PadicInt::from_i64(p, c, 12)).collect()).unwrap();
            let fi = s.lateral_frobenius().unwrap().coords();
            let fp = sp.lateral_frobenius().unwrap().coords();
            for (a, b) in fi.iter().zip(&fp) {
                assert_eq!(PadicInt::new(p, a.clone(), 12), *b);
            }
            if n >= 2 {
                assert!(sp.check_comm_identity().unwrap().equal);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let s = from_ints(cfg(3), 1, &[1, 2, 3]).unwrap();
        let j = s.to_json();
        assert_eq!(ShiftedWitt::<BigInt>::from_json(&j).unwrap(), s);
    }
}
