//! Sparse multivariate polynomials over the integers in δ-variables.
//!
//! A variable is `x_j^{(i)}`: generator `j`, δ-order `i`. Generators with
//! index at or above [`SLOT_BASE`] are auxiliary slot variables used by
//! centered-polynomial witnesses and are printed as `T{k}^({i})`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::ringcore::{DeltaRing, PrimeCfg, Ring};

/// Default cap on the number of terms any symbolic operation may produce.
pub const DEFAULT_TERM_BUDGET: usize = 1_000_000;

/// First generator index reserved for slot variables.
pub const SLOT_BASE: u32 = 1 << 12;

/// A packed variable: generator in the high 16 bits, δ-order in the low 16.
pub type Var = u32;

pub fn var(gen: u32, order: u32) -> Var {
    debug_assert!(gen < (1 << 16) && order < (1 << 16));
    (gen << 16) | order
}

pub fn slot_var(k: u32, order: u32) -> Var {
    var(SLOT_BASE + k, order)
}

pub fn var_gen(v: Var) -> u32 {
    v >> 16
}

pub fn var_order(v: Var) -> u32 {
    v & 0xffff
}

fn var_name(v: Var) -> String {
    let (g, o) = (var_gen(v), var_order(v));
    if g >= SLOT_BASE {
        format!("T{}^({})", g - SLOT_BASE, o)
    } else {
        format!("x{}^({})", g, o)
    }
}

/// A monomial: `(variable, exponent)` pairs sorted by variable, exponents > 0.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct Mono(SmallVec<[(Var, u32); 4]>);

impl Mono {
    pub fn one() -> Self {
        Mono(SmallVec::new())
    }

    pub fn single(v: Var, e: u32) -> Self {
        let mut m = Mono::one();
        if e > 0 {
            m.0.push((v, e));
        }
        m
    }

    pub fn from_pairs(mut pairs: Vec<(Var, u32)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut out: SmallVec<[(Var, u32); 4]> = SmallVec::new();
        for (v, e) in pairs {
            if e == 0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += e,
                _ => out.push((v, e)),
            }
        }
        Mono(out)
    }

    pub fn pairs(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|p| p.1 as u64).sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0.iter().find(|p| p.0 == v).map(|p| p.1).unwrap_or(0)
    }

    /// Removes `v`, returning the remaining monomial and the exponent of `v`.
    pub fn without(&self, v: Var) -> (Mono, u32) {
        match self.0.iter().position(|p| p.0 == v) {
            None => (self.clone(), 0),
            Some(i) => {
                let mut m = self.clone();
                let e = m.0.remove(i).1;
                (m, e)
            }
        }
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let (a, b) = (&self.0, &other.0);
        let mut out: SmallVec<[(Var, u32); 4]> = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Mono(out)
    }

    /// Graded lexicographic order: total degree first, then the exponent
    /// vectors compared variable by variable (generator, then δ-order).
    pub fn grlex_cmp(&self, other: &Mono) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let (a, b) = (&self.0, &other.0);
            let n = a.len().min(b.len());
            for k in 0..n {
                if a[k].0 != b[k].0 {
                    // the monomial containing the smaller variable is larger
                    return b[k].0.cmp(&a[k].0);
                }
                if a[k].1 != b[k].1 {
                    return a[k].1.cmp(&b[k].1);
                }
            }
            a.len().cmp(&b.len())
        })
    }
}

/// A polynomial with integer coefficients in δ-variables.
#[derive(Clone, Default)]
pub struct DPoly {
    terms: FxHashMap<Mono, BigInt>,
}

impl PartialEq for DPoly {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for DPoly {}

impl fmt::Debug for DPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for DPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            write!(f, "{}", c.abs())?;
            for (v, e) in m.pairs() {
                if *e == 1 {
                    write!(f, " * {}", var_name(*v))?;
                } else {
                    write!(f, " * {}^{}", var_name(*v), e)?;
                }
            }
        }
        Ok(())
    }
}

impl DPoly {
    pub fn zero() -> Self {
        DPoly::default()
    }

    pub fn one() -> Self {
        Self::constant(BigInt::one())
    }

    pub fn constant(c: BigInt) -> Self {
        let mut p = DPoly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::one(), c);
        }
        p
    }

    pub fn from_i64(c: i64) -> Self {
        Self::constant(BigInt::from(c))
    }

    /// The variable `x_gen^{(order)}`.
    pub fn var(gen: u32, order: u32) -> Self {
        Self::from_var(var(gen, order))
    }

    pub fn from_var(v: Var) -> Self {
        Self::monomial(BigInt::one(), Mono::single(v, 1))
    }

    /// The slot variable `T_k^{(order)}`.
    pub fn slot(k: u32, order: u32) -> Self {
        Self::from_var(slot_var(k, order))
    }

    pub fn monomial(c: BigInt, m: Mono) -> Self {
        let mut p = DPoly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Mono, BigInt)>>(it: I) -> Self {
        let mut p = DPoly::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &BigInt)> {
        self.terms.iter()
    }

    /// Terms in canonical order: descending graded lexicographic.
    pub fn sorted_terms(&self) -> Vec<(&Mono, &BigInt)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| b.0.grlex_cmp(a.0));
        v
    }

    pub fn coeff(&self, m: &Mono) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn constant_term(&self) -> BigInt {
        self.coeff(&Mono::one())
    }

    /// `G(0, …, 0) = 0`.
    pub fn is_centered(&self) -> bool {
        self.constant_term().is_zero()
    }

    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 => self.terms.get(&Mono::one()).cloned(),
            _ => None,
        }
    }

    pub fn total_degree(&self) -> u64 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// All variables that occur, sorted.
    pub fn vars(&self) -> Vec<Var> {
        let mut v: Vec<Var> = self.terms.keys().flat_map(|m| m.pairs().iter().map(|p| p.0)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Highest δ-order present among non-slot generators.
    pub fn max_order(&self) -> Option<u32> {
        self.vars().into_iter().filter(|v| var_gen(*v) < SLOT_BASE).map(var_order).max()
    }

    /// Bit length of the largest coefficient.
    pub fn max_coeff_bits(&self) -> u64 {
        self.terms.values().map(|c| c.bits()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Mono, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn add_assign_ref(&mut self, other: &DPoly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn sub_assign_ref(&mut self, other: &DPoly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), -c);
        }
    }

    pub fn add(&self, other: &DPoly) -> DPoly {
        let (mut big, small) = if self.terms.len() >= other.terms.len() { (self.clone(), other) } else { (other.clone(), self) };
        big.add_assign_ref(small);
        big
    }

    pub fn sub(&self, other: &DPoly) -> DPoly {
        let mut r = self.clone();
        r.sub_assign_ref(other);
        r
    }

    pub fn neg(&self) -> DPoly {
        DPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn scale(&self, c: &BigInt) -> DPoly {
        if c.is_zero() {
            return DPoly::zero();
        }
        DPoly { terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    pub fn scale_i64(&self, c: i64) -> DPoly {
        self.scale(&BigInt::from(c))
    }

    pub fn mul_mono(&self, c: &BigInt, mono: &Mono) -> DPoly {
        if c.is_zero() {
            return DPoly::zero();
        }
        DPoly { terms: self.terms.iter().map(|(m, x)| (m.mul(mono), x * c)).collect() }
    }

    /// Product, failing once the number of distinct accumulated monomials
    /// exceeds `budget`.
    pub fn try_mul(&self, other: &DPoly, budget: usize) -> Result<DPoly> {
        if self.is_zero() || other.is_zero() {
            return Ok(DPoly::zero());
        }
        let (a, b) = if self.terms.len() <= other.terms.len() { (self, other) } else { (other, self) };
        if a.terms.len() == 1 {
            let (m, c) = a.terms.iter().next().unwrap();
            return Ok(b.mul_mono(c, m));
        }
        if let Some(pk) = Packing::for_product(a, b) {
            let av = pk.pack_all(a);
            let bv = pk.pack_all(b);
            let bits = a.max_coeff_bits() + b.max_coeff_bits() + usize::BITS as u64 - av.len().leading_zeros() as u64 + 2;
            if let Some(acc) = limb_product(&av, &bv, bits, budget)? {
                return Ok(pk.unpack_all(acc));
            }
            let mut acc: FxHashMap<u128, BigInt> = FxHashMap::default();
            acc.reserve(av.len().max(bv.len()) * 2);
            for (ka, ca) in &av {
                for (kb, cb) in &bv {
                    accumulate(&mut acc, ka + kb, *ca * *cb);
                }
                if acc.len() > budget {
                    return Err(Error::TermBudget { limit: budget });
                }
            }
            return Ok(pk.unpack_all(acc));
        }
        let bv: Vec<(&Mono, &BigInt)> = b.terms.iter().collect();
        let mut acc: FxHashMap<Mono, BigInt> = FxHashMap::default();
        acc.reserve(a.terms.len().max(bv.len()) * 2);
        for (ma, ca) in &a.terms {
            for (mb, cb) in &bv {
                let m = ma.mul(mb);
                match acc.entry(m) {
                    std::collections::hash_map::Entry::Occupied(mut e) => {
                        *e.get_mut() += ca * *cb;
                    }
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(ca * *cb);
                    }
                }
            }
            if acc.len() > budget {
                return Err(Error::TermBudget { limit: budget });
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(DPoly { terms: acc })
    }

    /// `self²`, visiting each unordered pair of terms once.
    pub fn try_square(&self, budget: usize) -> Result<DPoly> {
        let Some(pk) = Packing::for_product(self, self) else {
            return self.try_mul(self, budget);
        };
        let v = pk.pack_all(self);
        let mut acc: FxHashMap<u128, BigInt> = FxHashMap::default();
        acc.reserve(v.len() * 2);
        for (i, (ka, ca)) in v.iter().enumerate() {
            accumulate(&mut acc, ka + ka, *ca * *ca);
            let twice = *ca << 1usize;
            for (kb, cb) in &v[i + 1..] {
                accumulate(&mut acc, ka + kb, &twice * *cb);
            }
            if acc.len() > budget {
                return Err(Error::TermBudget { limit: budget });
            }
        }
        Ok(pk.unpack_all(acc))
    }

    pub fn mul(&self, other: &DPoly) -> DPoly {
        self.try_mul(other, usize::MAX).expect("unbounded multiplication")
    }

    pub fn try_pow(&self, e: u64, budget: usize) -> Result<DPoly> {
        if e == 0 {
            return Ok(DPoly::one());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            let mono = Mono(m.0.iter().map(|(v, x)| (*v, x * e as u32)).collect());
            return Ok(DPoly::monomial(num_traits::pow(c.clone(), e as usize), mono));
        }
        if self.terms.len() == 2 {
            return self.binomial_pow(e, budget);
        }
        if e <= 16 {
            // Sparse powers grow roughly like the number of monomials of the
            // result, so multiplying by the small base beats squaring.
            let mut acc = self.clone();
            for _ in 1..e {
                acc = acc.try_mul(self, budget)?;
            }
            return Ok(acc);
        }
        let mut base = self.clone();
        let mut acc: Option<DPoly> = None;
        let mut k = e;
        loop {
            if k & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.try_mul(&base, budget)?,
                });
            }
            k >>= 1;
            if k == 0 {
                break;
            }
            base = base.try_square(budget)?;
        }
        Ok(acc.unwrap())
    }

    fn binomial_pow(&self, e: u64, budget: usize) -> Result<DPoly> {
        let mut it = self.terms.iter();
        let (m1, c1) = it.next().unwrap();
        let (m2, c2) = it.next().unwrap();
        let e32 = e as u32;
        let mut pw1 = vec![(BigInt::one(), Mono::one())];
        let mut pw2 = vec![(BigInt::one(), Mono::one())];
        for _ in 0..e {
            let (c, m) = pw1.last().unwrap();
            pw1.push((c * c1, m.mul(m1)));
            let (c, m) = pw2.last().unwrap();
            pw2.push((c * c2, m.mul(m2)));
        }
        let mut out = DPoly::zero();
        let mut binom = BigInt::one();
        for k in 0..=e32 {
            let (ca, ma) = &pw1[(e32 - k) as usize];
            let (cb, mb) = &pw2[k as usize];
            out.add_term(ma.mul(mb), &binom * ca * cb);
            binom = binom * BigInt::from(e32 - k) / BigInt::from(k + 1);
            if out.terms.len() > budget {
                return Err(Error::TermBudget { limit: budget });
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u64) -> DPoly {
        self.try_pow(e, usize::MAX).expect("unbounded power")
    }

    /// Exact division of every coefficient by `d`.
    pub fn div_exact(&self, d: &BigInt) -> Result<DPoly> {
        let mut out = FxHashMap::default();
        for (m, c) in &self.terms {
            let (q, r) = c.div_rem(d);
            if !r.is_zero() {
                return Err(Error::NotDivisible);
            }
            out.insert(m.clone(), q);
        }
        Ok(DPoly { terms: out })
    }

    pub fn div_p_pow(&self, p: u64, k: u32) -> Result<DPoly> {
        self.div_exact(&crate::ringcore::pow_p(p, k))
    }

    /// Coefficients reduced into `[0, m)`.
    pub fn reduce_mod(&self, m: &BigInt) -> DPoly {
        DPoly::from_terms(self.terms.iter().map(|(mo, c)| (mo.clone(), c.mod_floor(m))))
    }

    /// Substitutes variables by polynomials; variables absent from `map`
    /// are left unchanged.
    pub fn try_substitute(&self, map: &HashMap<Var, DPoly>, budget: usize) -> Result<DPoly> {
        let mut subs: Vec<Var> = self.vars().into_iter().filter(|v| map.contains_key(v)).collect();
        if subs.is_empty() {
            return Ok(self.clone());
        }
        // Nested evaluation: the outermost variable has the largest image,
        // so its powers meet only the already collapsed inner sums.
        subs.sort_by_key(|v| std::cmp::Reverse((map[v].num_terms(), *v)));
        let terms: Vec<(Mono, BigInt)> = self.terms.iter().map(|(m, c)| (m.clone(), c.clone())).collect();
        let mut cache = PowCache { map, pows: HashMap::new(), budget };
        substitute_nested(terms, &subs, &mut cache)
    }

    pub fn substitute(&self, map: &HashMap<Var, DPoly>) -> DPoly {
        self.try_substitute(map, usize::MAX).expect("unbounded substitution")
    }

    /// Evaluates at values in an arbitrary ring; every variable must be bound.
    pub fn eval<R: Ring>(&self, template: &R, values: &HashMap<Var, R>) -> Result<R> {
        let mut acc = template.zero_like();
        let mut cache: HashMap<(Var, u32), R> = HashMap::new();
        for (m, c) in self.sorted_terms() {
            let mut t = template.from_int_like(c);
            for &(v, e) in m.pairs() {
                let x = values.get(&v).ok_or_else(|| Error::Invariant(format!("unbound variable {}", var_name(v))))?;
                let pw = cache.entry((v, e)).or_insert_with(|| x.pow(e as u64));
                t = t.mul(pw);
            }
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    /// Evaluates with integer values for every variable.
    pub fn eval_int(&self, values: &HashMap<Var, BigInt>) -> Result<BigInt> {
        self.eval(&BigInt::zero(), values)
    }

    /// Renames variables through `f`.
    pub fn map_vars<F: Fn(Var) -> Var>(&self, f: F) -> DPoly {
        DPoly::from_terms(
            self.terms.iter().map(|(m, c)| (Mono::from_pairs(m.pairs().iter().map(|(v, e)| (f(*v), *e)).collect()), c.clone())),
        )
    }

    /// The Frobenius lift `x^{(i)} ↦ (x^{(i)})^q + p·x^{(i+1)}` on every
    /// variable, identity on integer coefficients.
    pub fn try_frobenius(&self, cfg: &PrimeCfg, budget: usize) -> Result<DPoly> {
        let p = BigInt::from(cfg.p());
        let map: HashMap<Var, DPoly> = self
            .vars()
            .into_iter()
            .map(|v| {
                let img = DPoly::monomial(BigInt::one(), Mono::single(v, cfg.q() as u32))
                    .add(&DPoly::monomial(p.clone(), Mono::single(v + 1, 1)));
                (v, img)
            })
            .collect();
        self.try_substitute(&map, budget)
    }

    /// The structural π-derivation `δf = (φ(f) − f^q)/p`.
    pub fn try_delta(&self, cfg: &PrimeCfg, budget: usize) -> Result<DPoly> {
        let phi = self.try_frobenius(cfg, budget)?;
        let pw = self.try_pow(cfg.q(), budget)?;
        phi.sub(&pw)
            .div_exact(&cfg.p_big())
            .map_err(|_| Error::Invariant("δ of a polynomial must be integral".into()))
    }

    pub fn delta(&self, cfg: &PrimeCfg) -> DPoly {
        self.try_delta(cfg, usize::MAX).expect("unbounded δ")
    }

    /// Parses the text form produced by `Display`.
    pub fn parse(s: &str) -> Result<DPoly> {
        let s = s.trim();
        if s == "0" || s.is_empty() {
            return Ok(DPoly::zero());
        }
        let mut out = DPoly::zero();
        let normalized = s.replace(" - ", " + -").replace(" + ", "\u{1}");
        for term in normalized.split('\u{1}') {
            let term = term.trim();
            let (neg, body) = match term.strip_prefix('-') {
                Some(rest) => (true, rest.trim()),
                None => (false, term),
            };
            let mut parts = body.split('*').map(str::trim).peekable();
            let first = parts.peek().copied().ok_or_else(|| Error::Parse(format!("empty term in {s:?}")))?;
            // a term without a leading integer has coefficient 1
            let mut c = match first.parse::<BigInt>() {
                Ok(c) => {
                    parts.next();
                    c
                }
                Err(_) if first.starts_with(['x', 'T']) => BigInt::one(),
                Err(_) => return Err(Error::Parse(format!("bad coefficient {first:?}"))),
            };
            if neg {
                c = -c;
            }
            let mut pairs = Vec::new();
            for f in parts {
                let (name, e) = match f.rsplit_once(")^") {
                    Some((n, e)) => (format!("{n})"), e.parse::<u32>().map_err(|_| Error::Parse(format!("bad exponent in {f:?}")))?),
                    None => (f.to_string(), 1),
                };
                pairs.push((parse_var(&name)?, e));
            }
            out.add_term(Mono::from_pairs(pairs), c);
        }
        Ok(out)
    }
}

struct PowCache<'a> {
    map: &'a HashMap<Var, DPoly>,
    pows: HashMap<Var, Vec<(u32, DPoly)>>,
    budget: usize,
}

impl PowCache<'_> {
    /// `map[v]^e`, reusing the largest cached lower power.
    fn get(&mut self, v: Var, e: u32) -> Result<DPoly> {
        let base = &self.map[&v];
        let list = self.pows.entry(v).or_default();
        if let Some((_, p)) = list.iter().find(|(k, _)| *k == e) {
            return Ok(p.clone());
        }
        let below = list.iter().filter(|(k, _)| *k < e).max_by_key(|(k, _)| *k);
        let pw = match below {
            Some((k, pk)) => {
                let gap = if e - k == 1 { base.clone() } else { base.try_pow((e - k) as u64, self.budget)? };
                pk.try_mul(&gap, self.budget)?
            }
            None => base.try_pow(e as u64, self.budget)?,
        };
        list.push((e, pw.clone()));
        Ok(pw)
    }
}

fn substitute_nested(terms: Vec<(Mono, BigInt)>, subs: &[Var], cache: &mut PowCache<'_>) -> Result<DPoly> {
    let Some((&v, rest)) = subs.split_first() else {
        return Ok(DPoly::from_terms(terms));
    };
    let mut groups: std::collections::BTreeMap<u32, Vec<(Mono, BigInt)>> = std::collections::BTreeMap::new();
    for (m, c) in terms {
        let (m2, e) = m.without(v);
        groups.entry(e).or_default().push((m2, c));
    }
    let mut out = DPoly::zero();
    for (e, group) in groups {
        let inner = substitute_nested(group, rest, cache)?;
        if inner.is_zero() {
            continue;
        }
        if e == 0 {
            out.add_assign_ref(&inner);
        } else {
            let pw = cache.get(v, e)?;
            out.add_assign_ref(&inner.try_mul(&pw, cache.budget)?);
        }
        if out.terms.len() > cache.budget {
            return Err(Error::TermBudget { limit: cache.budget });
        }
    }
    Ok(out)
}

/// Magnitude limbs and sign of a coefficient.
struct Limbs {
    neg: bool,
    mag: Vec<u64>,
}

impl Limbs {
    fn of(c: &BigInt) -> Limbs {
        let (sign, mag) = c.to_u64_digits();
        Limbs { neg: sign == Sign::Minus, mag }
    }
}

/// `acc ± a·b` in `L`-limb two's complement, wrapping.
fn mul_acc<const L: usize>(acc: &mut [u64; L], a: &Limbs, b: &Limbs) {
    let mut prod = [0u64; L];
    for (i, &ai) in a.mag.iter().enumerate() {
        if i >= L {
            break;
        }
        let mut carry = 0u128;
        let mut k = i;
        for &bj in &b.mag {
            if k >= L {
                break;
            }
            let t = ai as u128 * bj as u128 + prod[k] as u128 + carry;
            prod[k] = t as u64;
            carry = t >> 64;
            k += 1;
        }
        while carry != 0 && k < L {
            let t = prod[k] as u128 + carry;
            prod[k] = t as u64;
            carry = t >> 64;
            k += 1;
        }
    }
    if a.neg == b.neg {
        let mut carry = 0u64;
        for k in 0..L {
            let (s1, c1) = acc[k].overflowing_add(prod[k]);
            let (s2, c2) = s1.overflowing_add(carry);
            acc[k] = s2;
            carry = (c1 as u64) + (c2 as u64);
        }
    } else {
        let mut borrow = 0u64;
        for k in 0..L {
            let (s1, b1) = acc[k].overflowing_sub(prod[k]);
            let (s2, b2) = s1.overflowing_sub(borrow);
            acc[k] = s2;
            borrow = (b1 as u64) + (b2 as u64);
        }
    }
}

fn limbs_to_bigint<const L: usize>(x: &[u64; L]) -> BigInt {
    let neg = x[L - 1] >> 63 == 1;
    let mut mag = *x;
    if neg {
        let mut carry = 1u64;
        for limb in mag.iter_mut() {
            let (s, c) = (!*limb).overflowing_add(carry);
            *limb = s;
            carry = c as u64;
        }
    }
    let digits: Vec<u32> = mag.iter().flat_map(|&l| [l as u32, (l >> 32) as u32]).collect();
    let m = BigInt::from_biguint(Sign::Plus, num_bigint::BigUint::new(digits));
    if neg {
        -m
    } else {
        m
    }
}

fn limb_product_fixed<const L: usize>(av: &[(u128, &BigInt)], bv: &[(u128, &BigInt)], budget: usize) -> Result<FxHashMap<u128, BigInt>> {
    let al: Vec<(u128, Limbs)> = av.iter().map(|(k, c)| (*k, Limbs::of(c))).collect();
    let bl: Vec<(u128, Limbs)> = bv.iter().map(|(k, c)| (*k, Limbs::of(c))).collect();
    let mut acc: FxHashMap<u128, [u64; L]> = FxHashMap::default();
    acc.reserve(al.len().max(bl.len()) * 2);
    for (kb, cb) in &bl {
        for (ka, ca) in &al {
            mul_acc(acc.entry(ka + kb).or_insert([0u64; L]), ca, cb);
        }
        if acc.len() > budget {
            return Err(Error::TermBudget { limit: budget });
        }
    }
    Ok(acc.into_iter().map(|(k, v)| (k, limbs_to_bigint(&v))).collect())
}

/// Packed product with fixed-width accumulators when `bits` bounds every
/// coefficient of the result; `None` when the bound is too large.
fn limb_product(av: &[(u128, &BigInt)], bv: &[(u128, &BigInt)], bits: u64, budget: usize) -> Result<Option<FxHashMap<u128, BigInt>>> {
    let limbs = bits.div_ceil(64);
    Ok(Some(match limbs {
        0..=1 => limb_product_fixed::<1>(av, bv, budget)?,
        2 => limb_product_fixed::<2>(av, bv, budget)?,
        3 => limb_product_fixed::<3>(av, bv, budget)?,
        4 => limb_product_fixed::<4>(av, bv, budget)?,
        5 => limb_product_fixed::<5>(av, bv, budget)?,
        6 => limb_product_fixed::<6>(av, bv, budget)?,
        7 => limb_product_fixed::<7>(av, bv, budget)?,
        8 => limb_product_fixed::<8>(av, bv, budget)?,
        9..=10 => limb_product_fixed::<10>(av, bv, budget)?,
        11..=12 => limb_product_fixed::<12>(av, bv, budget)?,
        13..=16 => limb_product_fixed::<16>(av, bv, budget)?,
        17..=24 => limb_product_fixed::<24>(av, bv, budget)?,
        25..=32 => limb_product_fixed::<32>(av, bv, budget)?,
        _ => return Ok(None),
    }))
}

fn accumulate(acc: &mut FxHashMap<u128, BigInt>, k: u128, c: BigInt) {
    match acc.entry(k) {
        std::collections::hash_map::Entry::Occupied(mut e) => {
            *e.get_mut() += c;
        }
        std::collections::hash_map::Entry::Vacant(e) => {
            e.insert(c);
        }
    }
}

/// Exponent vectors packed into one `u128` for a fixed set of variables,
/// wide enough that adding two packed monomials never carries.
struct Packing {
    vars: Vec<Var>,
    shifts: Vec<u32>,
    masks: Vec<u128>,
}

impl Packing {
    fn for_product(a: &DPoly, b: &DPoly) -> Option<Packing> {
        let mut deg: FxHashMap<Var, (u32, u32)> = FxHashMap::default();
        for m in a.terms.keys() {
            for &(v, e) in m.pairs() {
                let d = deg.entry(v).or_default();
                d.0 = d.0.max(e);
            }
        }
        for m in b.terms.keys() {
            for &(v, e) in m.pairs() {
                let d = deg.entry(v).or_default();
                d.1 = d.1.max(e);
            }
        }
        let mut vars: Vec<Var> = deg.keys().copied().collect();
        vars.sort_unstable();
        let mut shifts = Vec::with_capacity(vars.len());
        let mut masks = Vec::with_capacity(vars.len());
        let mut used = 0u32;
        for v in &vars {
            let (da, db) = deg[v];
            let top = da as u64 + db as u64;
            let width = 64 - top.leading_zeros();
            shifts.push(used);
            masks.push((1u128 << width) - 1);
            used += width;
            if used > 128 {
                return None;
            }
        }
        Some(Packing { vars, shifts, masks })
    }

    fn pack(&self, m: &Mono) -> u128 {
        let mut k = 0u128;
        let mut i = 0;
        for &(v, e) in m.pairs() {
            while self.vars[i] != v {
                i += 1;
            }
            k |= (e as u128) << self.shifts[i];
        }
        k
    }

    fn pack_all<'a>(&self, p: &'a DPoly) -> Vec<(u128, &'a BigInt)> {
        p.terms.iter().map(|(m, c)| (self.pack(m), c)).collect()
    }

    fn unpack(&self, k: u128) -> Mono {
        let mut out: SmallVec<[(Var, u32); 4]> = SmallVec::new();
        for (i, &v) in self.vars.iter().enumerate() {
            let e = ((k >> self.shifts[i]) & self.masks[i]) as u32;
            if e > 0 {
                out.push((v, e));
            }
        }
        Mono(out)
    }

    fn unpack_all(&self, acc: FxHashMap<u128, BigInt>) -> DPoly {
        DPoly { terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(k, c)| (self.unpack(k), c)).collect() }
    }
}

fn parse_var(name: &str) -> Result<Var> {
    let bad = || Error::Parse(format!("bad variable {name:?}"));
    let (slot, rest) = if let Some(r) = name.strip_prefix('x') {
        (false, r)
    } else if let Some(r) = name.strip_prefix('T') {
        (true, r)
    } else {
        return Err(bad());
    };
    let (g, o) = rest.split_once("^(").ok_or_else(bad)?;
    let o = o.strip_suffix(')').ok_or_else(bad)?;
    let g: u32 = g.parse().map_err(|_| bad())?;
    let o: u32 = o.parse().map_err(|_| bad())?;
    Ok(if slot { slot_var(g, o) } else { var(g, o) })
}

impl Ring for DPoly {
    fn zero_like(&self) -> Self {
        DPoly::zero()
    }
    fn one_like(&self) -> Self {
        DPoly::one()
    }
    fn from_int_like(&self, n: &BigInt) -> Self {
        DPoly::constant(n.clone())
    }
    fn add(&self, other: &Self) -> Self {
        DPoly::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        DPoly::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        DPoly::mul(self, other)
    }
    fn neg(&self) -> Self {
        DPoly::neg(self)
    }
    fn is_zero_elt(&self) -> bool {
        DPoly::is_zero(self)
    }
    fn div_p(&self, p: u64) -> Result<Self> {
        self.div_exact(&BigInt::from(p))
    }
    fn pow(&self, e: u64) -> Self {
        DPoly::pow(self, e)
    }
    fn scale_int(&self, n: &BigInt) -> Self {
        self.scale(n)
    }
}

impl DeltaRing for DPoly {
    fn frobenius(&self, cfg: &PrimeCfg) -> Result<Self> {
        self.try_frobenius(cfg, DEFAULT_TERM_BUDGET)
    }
    fn delta(&self, cfg: &PrimeCfg) -> Result<Self> {
        self.try_delta(cfg, DEFAULT_TERM_BUDGET)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> DPoly {
        DPoly::var(0, 0)
    }
    fn y() -> DPoly {
        DPoly::var(1, 0)
    }

    #[test]
    fn arithmetic() {
        let a = x().add(&y());
        let sq = a.mul(&a);
        let expect = x().pow(2).add(&x().mul(&y()).scale_i64(2)).add(&y().pow(2));
        assert_eq!(sq, expect);
        assert!(a.sub(&a).is_zero());
        assert_eq!(a.pow(5), a.mul(&a).mul(&a).mul(&a).mul(&a));
        let b = x().add(&y()).add(&DPoly::from_i64(3));
        assert_eq!(b.pow(4), b.mul(&b).mul(&b).mul(&b));
    }

    #[test]
    fn wide_coefficient_products() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for bits in [8u32, 60, 63, 64, 65, 200, 700, 2500] {
            let mut random = || {
                DPoly::from_terms((0..12).map(|_| {
                    let mono = Mono::from_pairs(vec![(var(0, 0), rng.gen_range(0..4)), (var(1, 0), rng.gen_range(0..4))]);
                    let mag = (BigInt::one() << (bits - 1)) + BigInt::from(rng.gen::<u64>());
                    (mono, if rng.gen() { mag } else { -mag })
                }))
            };
            let a = random();
            let b = random();
            let mut naive = DPoly::zero();
            for (m, c) in b.terms() {
                naive.add_assign_ref(&a.mul_mono(c, m));
            }
            assert_eq!(a.mul(&b), naive, "bits {bits}");
            assert_eq!(a.try_square(usize::MAX).unwrap(), a.mul(&a));
        }
    }

    #[test]
    fn delta_examples() {
        let c2 = PrimeCfg::new(2).unwrap();
        assert_eq!(x().delta(&c2), DPoly::var(0, 1));
        let lhs = x().add(&y()).delta(&c2).sub(&x().delta(&c2)).sub(&y().delta(&c2));
        assert_eq!(lhs, x().mul(&y()).neg());
        assert_eq!(DPoly::from_i64(3).delta(&c2), DPoly::from_i64(-3));
    }

    #[test]
    fn substitution_and_eval() {
        let f = x().pow(2).add(&y().scale_i64(3));
        let mut map = HashMap::new();
        map.insert(var(0, 0), y().add(&DPoly::one()));
        let g = f.substitute(&map);
        assert_eq!(g, y().pow(2).add(&y().scale_i64(5)).add(&DPoly::one()));
        let mut vals = HashMap::new();
        vals.insert(var(1, 0), BigInt::from(2));
        assert_eq!(g.eval_int(&vals).unwrap(), BigInt::from(15));
    }

    #[test]
    fn budget_is_enforced() {
        let f = (0..6).fold(DPoly::zero(), |acc, i| acc.add(&DPoly::var(i, 0)));
        assert!(matches!(f.try_pow(6, 100), Err(Error::TermBudget { limit: 100 })));
    }

    #[test]
    fn text_round_trip() {
        let f = x().pow(3).scale_i64(-4).add(&DPoly::var(0, 2).mul(&y())).add(&DPoly::slot(1, 0)).add(&DPoly::from_i64(7));
        let s = f.to_string();
        assert_eq!(DPoly::parse(&s).unwrap(), f);
        assert_eq!(DPoly::parse("0").unwrap(), DPoly::zero());
        assert_eq!(DPoly::parse("x0^(0)^2 - x1^(0) + 3").unwrap(), x().pow(2).sub(&y()).add(&DPoly::from_i64(3)));
        assert!(DPoly::parse("q * x0^(0)").is_err());
    }

    #[test]
    fn canonical_order() {
        let f = DPoly::one().add(&y()).add(&x()).add(&x().mul(&y()));
        assert_eq!(f.to_string(), "1 * x0^(0) * x1^(0) + 1 * x0^(0) + 1 * x1^(0) + 1");
    }
}
