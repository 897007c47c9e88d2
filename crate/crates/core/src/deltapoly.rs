//! The free δ-polynomial ring: structural π-derivation, centered-polynomial
//! witnesses, the expansion of `φ^m` and the change between Witt
//! coordinates and δ-coordinates.
//!
//! On `Z[x, x', x'', …]` the Frobenius lift is `φ(x^{(i)}) = (x^{(i)})^q + p·x^{(i+1)}`
//! and `∂f = (φ(f) − f^q)/p`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::dpoly::{slot_var, var, DPoly, Var, DEFAULT_TERM_BUDGET};
use crate::error::{Error, Result};
use crate::ringcore::{pow_p, PrimeCfg};

/// `∂f`, satisfying both π-derivation axioms.
pub fn delta_apply(cfg: &PrimeCfg, f: &DPoly) -> Result<DPoly> {
    f.try_delta(cfg, DEFAULT_TERM_BUDGET)
}

/// `∂^k f`.
pub fn delta_iter(cfg: &PrimeCfg, f: &DPoly, k: usize) -> Result<DPoly> {
    let mut g = f.clone();
    for _ in 0..k {
        g = delta_apply(cfg, &g)?;
    }
    Ok(g)
}

/// `Ψ(f) = f^q + p·∂f`, i.e. the Frobenius lift.
pub fn psi(cfg: &PrimeCfg, f: &DPoly) -> Result<DPoly> {
    f.try_frobenius(cfg, DEFAULT_TERM_BUDGET)
}

/// `C_p(x, y) = (x^q + y^q − (x+y)^q)/p` for polynomials.
pub fn carry(cfg: &PrimeCfg, x: &DPoly, y: &DPoly) -> Result<DPoly> {
    let q = cfg.q();
    let b = DEFAULT_TERM_BUDGET;
    x.try_pow(q, b)?.add(&y.try_pow(q, b)?).sub(&x.add(y).try_pow(q, b)?).div_exact(&cfg.p_big())
}

/// A centered polynomial `G(T…)` together with slot values, certifying
/// that a target equals `G(slots)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CenteredWitness {
    /// The polynomial in slot variables.
    pub expr: DPoly,
    /// Slot variable and the value it stands for.
    pub slots: Vec<(Var, DPoly)>,
    /// How the witness was built.
    pub trace: Vec<String>,
}

impl CenteredWitness {
    pub fn new(expr: DPoly, slots: Vec<(Var, DPoly)>, step: impl Into<String>) -> Self {
        CenteredWitness { expr, slots, trace: vec![step.into()] }
    }

    /// `G(0, …, 0) = 0`.
    pub fn is_centered(&self) -> bool {
        self.expr.is_centered()
    }

    pub fn slot_map(&self) -> HashMap<Var, DPoly> {
        self.slots.iter().cloned().collect()
    }

    /// `G(slots)`.
    pub fn evaluate(&self, budget: usize) -> Result<DPoly> {
        self.expr.try_substitute(&self.slot_map(), budget)
    }

    /// Checks `target = G(slots)` by exact expansion.
    pub fn certifies(&self, target: &DPoly, budget: usize) -> Result<bool> {
        Ok(self.evaluate(budget)? == *target)
    }

    fn merged_slots(&self, other: &CenteredWitness) -> Result<Vec<(Var, DPoly)>> {
        let mut slots = self.slots.clone();
        for (v, val) in &other.slots {
            match slots.iter().find(|(w, _)| w == v) {
                Some((_, existing)) if existing != val => {
                    return Err(Error::Invariant(format!("slot {v:#x} bound to two different values")));
                }
                Some(_) => {}
                None => slots.push((*v, val.clone())),
            }
        }
        Ok(slots)
    }

    /// Sum of two witnesses; centered when both are.
    pub fn sum(&self, other: &CenteredWitness) -> Result<CenteredWitness> {
        let mut trace = self.trace.clone();
        trace.push("sum".into());
        Ok(CenteredWitness { expr: self.expr.add(&other.expr), slots: self.merged_slots(other)?, trace })
    }

    /// Product of two witnesses; centered when either is.
    pub fn product(&self, other: &CenteredWitness) -> Result<CenteredWitness> {
        let mut trace = self.trace.clone();
        trace.push("product".into());
        Ok(CenteredWitness { expr: self.expr.mul(&other.expr), slots: self.merged_slots(other)?, trace })
    }

    /// `∂` of a centered combination: `∂G(s) = (∂G)(s, ∂s)` with the slot
    /// set enlarged by the derivatives of the slot values.
    pub fn delta(&self, cfg: &PrimeCfg) -> Result<CenteredWitness> {
        let expr = delta_apply(cfg, &self.expr)?;
        let mut slots = self.slots.clone();
        for (v, val) in &self.slots {
            let dv = v + 1;
            if !slots.iter().any(|(w, _)| *w == dv) {
                slots.push((dv, delta_apply(cfg, val)?));
            }
        }
        let mut trace = self.trace.clone();
        trace.push("delta".into());
        Ok(CenteredWitness { expr, slots, trace })
    }

    /// Pushes the slot values through a ring map; the polynomial is unchanged.
    pub fn map_slots<F: Fn(&DPoly) -> Result<DPoly>>(&self, f: F) -> Result<CenteredWitness> {
        let slots = self.slots.iter().map(|(v, val)| Ok((*v, f(val)?))).collect::<Result<Vec<_>>>()?;
        let mut trace = self.trace.clone();
        trace.push("map".into());
        Ok(CenteredWitness { expr: self.expr.clone(), slots, trace })
    }
}

/// The centered polynomial `P_k(T_0, …, T_k)` with
/// `Ψ^{k+1}(a) = p^{k+1}·∂^{k+1}a + P_k(a, ∂a, …, ∂^k a)`, where `T_i` is the
/// slot variable `slot_var(0, i)` and `∂T_i = T_{i+1}`. Built by
/// `P_0 = T_0^q` and
/// `P_k = (p^k T_k)^q + P_{k-1}^q + p·∂P_{k-1} + p^k(1 − p^{k(q-1)})·T_k^q`.
pub fn phi_del_polynomial(cfg: &PrimeCfg, k: usize) -> Result<DPoly> {
    let q = cfg.q();
    let p = cfg.p();
    let t = |i: usize| DPoly::slot(0, i as u32);
    let mut pk = t(0).pow(q);
    for j in 1..=k {
        let pj = pow_p(p, j as u32);
        let tj_q = t(j).pow(q);
        let first = tj_q.scale(&num_traits::pow(pj.clone(), q as usize));
        let last = tj_q.scale(&(&pj * (BigInt::one() - pow_p(p, (j as u64 * (q - 1)) as u32))));
        let d = delta_apply(cfg, &pk)?;
        pk = first.add(&pk.try_pow(q, DEFAULT_TERM_BUDGET)?).add(&d.scale(&cfg.p_big())).add(&last);
    }
    Ok(pk)
}

/// Result of expanding `Ψ^m(a)`.
#[derive(Clone, Debug)]
pub struct PhiExpansion {
    /// `∂^m a`.
    pub lead: DPoly,
    /// `P_{m-1}` with slots `(a, ∂a, …, ∂^{m-1}a)`.
    pub remainder: CenteredWitness,
}

/// Writes `Ψ^m(a) = p^m·∂^m a + P_{m-1}(a, ∂a, …, ∂^{m-1}a)`.
pub fn phi_power_expand(cfg: &PrimeCfg, a: &DPoly, m: usize) -> Result<PhiExpansion> {
    if m == 0 {
        return Err(Error::Config("phi_power_expand needs m >= 1".into()));
    }
    let expr = phi_del_polynomial(cfg, m - 1)?;
    let mut slots = Vec::with_capacity(m);
    let mut cur = a.clone();
    for i in 0..m {
        slots.push((slot_var(0, i as u32), cur.clone()));
        cur = delta_apply(cfg, &cur)?;
    }
    let trace = format!("phi-del recursion to P_{}", m - 1);
    Ok(PhiExpansion { lead: cur, remainder: CenteredWitness::new(expr, slots, trace) })
}

/// Checks `Ψ^m(a) − p^m ∂^m a = P_{m-1}(slots)` with `Ψ^m(a)` computed by
/// iterating the Frobenius lift directly.
pub fn verify_phi_expansion(cfg: &PrimeCfg, a: &DPoly, m: usize, e: &PhiExpansion) -> Result<bool> {
    let mut lhs = a.clone();
    for _ in 0..m {
        lhs = psi(cfg, &lhs)?;
    }
    let lhs = lhs.sub(&e.lead.scale(&pow_p(cfg.p(), m as u32)));
    Ok(e.remainder.is_centered() && e.remainder.certifies(&lhs, DEFAULT_TERM_BUDGET)?)
}

/// The change between Witt coordinates `t_m` and δ-coordinates `x^{(m)}`
/// of `B_n = R[t_0, …, t_n]`, where `Ψ^n(t_0) = Σ p^i t_i^{q^{n-i}}`.
///
/// δ-coordinates are `var(0, i)`; Witt coordinates in `inverse` are written
/// with the variables `var(1, i)`.
#[derive(Clone, Debug)]
pub struct CoordChange {
    pub level: usize,
    /// `t_m` as a polynomial in `x, x', …, x^{(m)}`.
    pub forward: Vec<DPoly>,
    /// `x^{(m)}` as a polynomial in `t_0, …, t_m`.
    pub inverse: Vec<DPoly>,
    /// `t_m − ∂^m t_0` as a centered polynomial in slots `t_0, …, t_{m-1}`.
    pub witnesses: Vec<CenteredWitness>,
}

/// The Witt coordinate variable `t_i`.
pub fn witt_coord_var(i: usize) -> Var {
    var(1, i as u32)
}

fn binomial(n: u64, k: u64) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

/// Builds the coordinate change up to level `n` from the recursion
/// `t_n = ∂t_{n-1} + Σ_{i≤n-2} Σ_{j=1}^{q^{n-1-i}} p^{i+j-n} C(q^{n-1-i}, j) t_i^{q(q^{n-1-i}-j)} (∂t_i)^j`.
pub fn witt_to_delta(cfg: &PrimeCfg, n: usize) -> Result<CoordChange> {
    cfg.require_odd()?;
    let p = cfg.p();
    let q = cfg.q();
    let budget = DEFAULT_TERM_BUDGET;
    let x0 = DPoly::var(0, 0);
    let mut forward = vec![x0];
    let mut dt: Vec<DPoly> = Vec::new();
    for lvl in 1..=n {
        dt.push(delta_apply(cfg, &forward[lvl - 1])?);
        let mut t = dt[lvl - 1].clone();
        for i in 0..lvl.saturating_sub(1) {
            let big = q.pow((lvl - 1 - i) as u32);
            let ti_q = forward[i].try_pow(q, budget)?;
            let mut dpow = DPoly::one();
            for j in 1..=big {
                dpow = dpow.try_mul(&dt[i], budget)?;
                let num = binomial(big, j) * pow_p(p, (i as u64 + j) as u32);
                let den = pow_p(p, lvl as u32);
                let (c, r) = num.div_rem(&den);
                if !r.is_zero() {
                    return Err(Error::Invariant(format!("coordinate change coefficient not integral (i={i}, j={j})")));
                }
                let term = ti_q.try_pow(big - j, budget)?.try_mul(&dpow, budget)?.scale(&c);
                t = t.add(&term);
            }
        }
        forward.push(t);
    }

    let mut inverse: Vec<DPoly> = Vec::with_capacity(n + 1);
    let mut witnesses = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let g = forward[m].sub(&DPoly::var(0, m as u32));
        let to_t: HashMap<Var, DPoly> = (0..m).map(|i| (var(0, i as u32), inverse[i].clone())).collect();
        let g_t = g.try_substitute(&to_t, budget)?;
        inverse.push(DPoly::from_var(witt_coord_var(m)).sub(&g_t));
        let expr = g_t.map_vars(|v| if crate::dpoly::var_gen(v) == 1 { slot_var(crate::dpoly::var_order(v), 0) } else { v });
        let slots = (0..m).map(|i| (slot_var(i as u32, 0), forward[i].clone())).collect();
        witnesses.push(CenteredWitness::new(expr, slots, format!("coordinate change at level {m}")));
    }
    Ok(CoordChange { level: n, forward, inverse, witnesses })
}

impl CoordChange {
    /// Substituting `inverse` into `forward` gives `t_m`, and `forward` into
    /// `inverse` gives `x^{(m)}`, for every level.
    pub fn round_trip_ok(&self) -> Result<bool> {
        let budget = DEFAULT_TERM_BUDGET;
        let x_to_t: HashMap<Var, DPoly> = self.inverse.iter().enumerate().map(|(i, e)| (var(0, i as u32), e.clone())).collect();
        let t_to_x: HashMap<Var, DPoly> = self.forward.iter().enumerate().map(|(i, e)| (witt_coord_var(i), e.clone())).collect();
        for m in 0..=self.level {
            if self.forward[m].try_substitute(&x_to_t, budget)? != DPoly::from_var(witt_coord_var(m)) {
                return Ok(false);
            }
            if self.inverse[m].try_substitute(&t_to_x, budget)? != DPoly::var(0, m as u32) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Every witness is centered and certifies `t_m − x^{(m)}`.
    pub fn witnesses_ok(&self) -> Result<bool> {
        for (m, w) in self.witnesses.iter().enumerate() {
            let target = self.forward[m].sub(&DPoly::var(0, m as u32));
            if !w.is_centered() || !w.certifies(&target, DEFAULT_TERM_BUDGET)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witt::WittVec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(p: u64) -> PrimeCfg {
        PrimeCfg::new(p).unwrap()
    }

    fn random_poly(rng: &mut ChaCha8Rng) -> DPoly {
        let mut f = DPoly::zero();
        for _ in 0..rng.gen_range(1..4) {
            let mut t = DPoly::from_i64(rng.gen_range(-3..4));
            for _ in 0..rng.gen_range(0..4) {
                t = t.mul(&DPoly::var(rng.gen_range(0..2), rng.gen_range(0..3)));
            }
            f = f.add(&t);
        }
        f
    }

    #[test]
    fn delta_axioms_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in [2u64, 3, 5] {
            let c = cfg(p);
            for _ in 0..15 {
                let (f, g) = (random_poly(&mut rng), random_poly(&mut rng));
                let (df, dg) = (delta_apply(&c, &f).unwrap(), delta_apply(&c, &g).unwrap());
                let sum = delta_apply(&c, &f.add(&g)).unwrap();
                assert_eq!(sum, df.add(&dg).add(&carry(&c, &f, &g).unwrap()));
                let q = c.q();
                let prod = delta_apply(&c, &f.mul(&g)).unwrap();
                let expect = f.pow(q).mul(&dg).add(&g.pow(q).mul(&df)).add(&df.mul(&dg).scale_i64(p as i64));
                assert_eq!(prod, expect);
            }
        }
    }

    #[test]
    fn phi_expansion_examples() {
        let c = cfg(3);
        let x = DPoly::var(0, 0);
        let e1 = phi_power_expand(&c, &x, 1).unwrap();
        assert_eq!(e1.remainder.expr, DPoly::slot(0, 0).pow(3));
        let c2 = cfg(2);
        let e2 = phi_power_expand(&c2, &x, 2).unwrap();
        assert!(verify_phi_expansion(&c2, &x, 2, &e2).unwrap());
        for p in [2u64, 3] {
            for m in 1..=4 {
                let e = phi_power_expand(&cfg(p), &x, m).unwrap();
                assert!(e.remainder.is_centered());
            }
        }
    }

    #[test]
    fn phi_expansion_random_argument() {
        let c = cfg(3);
        let a = DPoly::var(0, 0).mul(&DPoly::var(1, 0)).add(&DPoly::from_i64(2));
        let e = phi_power_expand(&c, &a, 2).unwrap();
        assert!(verify_phi_expansion(&c, &a, 2, &e).unwrap());
    }

    #[test]
    fn coord_change_examples() {
        assert_eq!(witt_to_delta(&cfg(2), 2).unwrap_err(), Error::UnsupportedPrime(2));
        let c = cfg(3);
        let ch = witt_to_delta(&c, 2).unwrap();
        assert_eq!(ch.forward[0], DPoly::var(0, 0));
        assert_eq!(ch.forward[1], DPoly::var(0, 1));
        assert!(ch.round_trip_ok().unwrap());
        assert!(ch.witnesses_ok().unwrap());
        assert!(ch.witnesses[0].expr.is_zero() && ch.witnesses[1].expr.is_zero());
        let oracle = WittVec::exp_delta(c, &DPoly::var(0, 0), 2).unwrap();
        assert_eq!(oracle.coords(), &ch.forward[..]);
    }

    #[test]
    fn sideal_closures() {
        let c = cfg(3);
        let s0 = DPoly::var(0, 0).add(&DPoly::var(1, 0));
        let s1 = DPoly::var(0, 1).mul(&DPoly::var(1, 0));
        let w = CenteredWitness::new(DPoly::slot(0, 0).mul(&DPoly::slot(1, 0)).add(&DPoly::slot(1, 0)), vec![(slot_var(0, 0), s0.clone()), (slot_var(1, 0), s1.clone())], "seed");
        let v = CenteredWitness::new(DPoly::slot(0, 0).pow(2), vec![(slot_var(0, 0), s0.clone())], "seed");
        let target_w = w.evaluate(DEFAULT_TERM_BUDGET).unwrap();
        let target_v = v.evaluate(DEFAULT_TERM_BUDGET).unwrap();
        let sum = w.sum(&v).unwrap();
        assert!(sum.is_centered() && sum.certifies(&target_w.add(&target_v), DEFAULT_TERM_BUDGET).unwrap());
        let prod = w.product(&v).unwrap();
        assert!(prod.is_centered() && prod.certifies(&target_w.mul(&target_v), DEFAULT_TERM_BUDGET).unwrap());
        let d = w.delta(&c).unwrap();
        assert!(d.is_centered() && d.certifies(&delta_apply(&c, &target_w).unwrap(), DEFAULT_TERM_BUDGET).unwrap());
        let mut sub = HashMap::new();
        sub.insert(var(1, 0), DPoly::from_i64(5));
        let mapped = w.map_slots(|f| Ok(f.substitute(&sub))).unwrap();
        assert!(mapped.is_centered());
        assert!(mapped.certifies(&target_w.substitute(&sub), DEFAULT_TERM_BUDGET).unwrap());
        assert_eq!(d.trace, vec!["seed".to_string(), "delta".to_string()]);
    }
}
