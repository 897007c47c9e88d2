//! Jet rings `J_nA` of affine `A = R[x]/I`, kernels `N_{[m]n}A` over a marked
//! point, the lateral δ-structure `Δ` on the kernel and the comparison
//! `N^{[m]n}X ≅ J^{n-1}(N^{[m]1}X)` certified by explicit centered witnesses.
//!
//! Coordinate `g` of the ambient space at order `k` is the variable
//! `var(g, k)`. The kernel ring is the polynomial ring in the variables of
//! order `> m`; lower orders are evaluated at the δ-expansion of the point.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::deltapoly::{carry, delta_apply, phi_del_polynomial, CenteredWitness};
use crate::dpoly::{slot_var, var, var_gen, var_order, DPoly, Var, DEFAULT_TERM_BUDGET};
use crate::error::{Error, Result};
use crate::ringcore::{pow_p, DeltaRing, PrimeCfg};
use crate::shiftedwitt::ShiftedWitt;
use crate::witt::unghost_of;

/// `A = R[x_0, …, x_{d-1}]/I` with an integral point `P` on it.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePresentation {
    pub num_vars: usize,
    pub generators: Vec<DPoly>,
    pub marked_point: Vec<BigInt>,
}

impl AffinePresentation {
    pub fn new(num_vars: usize, generators: Vec<DPoly>, marked_point: Vec<BigInt>) -> Result<Self> {
        if marked_point.len() != num_vars {
            return Err(Error::LengthMismatch(format!("point has {} coordinates, expected {num_vars}", marked_point.len())));
        }
        for f in &generators {
            for v in f.vars() {
                if var_order(v) != 0 || var_gen(v) as usize >= num_vars {
                    return Err(Error::Config(format!("generator {f} uses a variable outside x_0..x_{}", num_vars - 1)));
                }
            }
        }
        let a = AffinePresentation { num_vars, generators, marked_point };
        for f in &a.generators {
            if !f.eval_int(&a.point_values(&[a.marked_point.clone()]))?.is_zero() {
                return Err(Error::InvalidPoint(format!("{f} does not vanish at the marked point")));
            }
        }
        Ok(a)
    }

    /// Affine `d`-space marked at the origin.
    pub fn affine_space(d: usize) -> Self {
        AffinePresentation { num_vars: d, generators: Vec::new(), marked_point: vec![BigInt::zero(); d] }
    }

    /// `y² − x³ − a·x − b` in the coordinates `x = x_0`, `y = x_1`.
    pub fn weierstrass(a: i64, b: i64, point: (i64, i64)) -> Result<Self> {
        let (x, y) = (DPoly::var(0, 0), DPoly::var(1, 0));
        let f = y.pow(2).sub(&x.pow(3)).sub(&x.scale_i64(a)).sub(&DPoly::from_i64(b));
        Self::new(2, vec![f], vec![BigInt::from(point.0), BigInt::from(point.1)])
    }

    /// `δ^j` of the point coordinates for `j = 0..=upto`, indexed `[j][g]`.
    pub fn point_expansion(&self, cfg: &PrimeCfg, upto: usize) -> Result<Vec<Vec<BigInt>>> {
        let mut out = vec![self.marked_point.clone()];
        for j in 0..upto {
            let next = out[j].iter().map(|c| c.delta(cfg)).collect::<Result<Vec<_>>>()?;
            out.push(next);
        }
        Ok(out)
    }

    fn point_values(&self, expansion: &[Vec<BigInt>]) -> HashMap<Var, BigInt> {
        let mut vals = HashMap::new();
        for (j, layer) in expansion.iter().enumerate() {
            for (g, c) in layer.iter().enumerate() {
                vals.insert(var(g as u32, j as u32), c.clone());
            }
        }
        vals
    }
}

/// `J_nA = R[x, x', …, x^{(n)}]/(I, δI, …, δ^nI)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetPresentation {
    pub level: usize,
    pub num_vars: usize,
    /// `δ^k f` for `k = 0..=level`, level-major.
    pub relations: Vec<DPoly>,
}

impl JetPresentation {
    /// The relations of level `k`.
    pub fn level_relations(&self, k: usize) -> &[DPoly] {
        let per = self.relations.len() / (self.level + 1);
        &self.relations[k * per..(k + 1) * per]
    }

    pub fn to_json(&self) -> Value {
        json!({"vars": self.num_vars, "level": self.level, "relations": self.relations.iter().map(|f| f.to_string()).collect::<Vec<_>>()})
    }
}

/// Iterates the structural δ on every generator of `I`.
pub fn build_jet(cfg: &PrimeCfg, a: &AffinePresentation, n: usize) -> Result<JetPresentation> {
    cfg.require_odd()?;
    let mut layer = a.generators.clone();
    let mut relations = layer.clone();
    for _ in 0..n {
        layer = layer.iter().map(|f| delta_apply(cfg, f)).collect::<Result<Vec<_>>>()?;
        relations.extend(layer.iter().cloned());
    }
    Ok(JetPresentation { level: n, num_vars: a.num_vars, relations })
}

/// Checks that every relation of `J_nA` vanishes at the δ-expansion of the
/// marked point.
pub fn jet_point_check(cfg: &PrimeCfg, a: &AffinePresentation, jet: &JetPresentation) -> Result<bool> {
    let vals = a.point_values(&a.point_expansion(cfg, jet.level)?);
    for f in &jet.relations {
        if !f.eval_int(&vals)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `N_{[m]n}A = R[x^{(m+1)}, …, x^{(m+n)}]/(i*δ^{m+1}I, …, i*δ^{m+n}I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelPresentation {
    pub shift: usize,
    pub level: usize,
    pub num_vars: usize,
    /// `δ^j P` for `j = 0..=m`, indexed `[j][g]`.
    pub point: Vec<Vec<BigInt>>,
    /// `i*δ^{m+k} f` for `k = 1..=level`, level-major.
    pub relations: Vec<DPoly>,
}

impl KernelPresentation {
    /// The relations `i*δ^{m+k}I`.
    pub fn level_relations(&self, k: usize) -> &[DPoly] {
        let per = if self.level == 0 { 0 } else { self.relations.len() / self.level };
        &self.relations[(k - 1) * per..k * per]
    }

    pub fn to_json(&self) -> Value {
        json!({
            "vars": self.num_vars,
            "shift": self.shift,
            "level": self.level,
            "relations": self.relations.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
        })
    }
}

/// `i*_m φ^a(x_g^{(0)})` for `a = 0..=top`, by
/// `i*φ^a(x^{(j)}) = (i*φ^{a-1}(x^{(j)}))^q + p·i*φ^{a-1}(x^{(j+1)})`.
fn restricted_phi_powers(cfg: &PrimeCfg, point: &[Vec<BigInt>], g: usize, top: usize, budget: usize) -> Result<Vec<DPoly>> {
    let m = point.len() - 1;
    let p = cfg.p_big();
    let mut layer: Vec<DPoly> = (0..=top)
        .map(|j| if j <= m { DPoly::constant(point[j][g].clone()) } else { DPoly::var(g as u32, j as u32) })
        .collect();
    let mut out = vec![layer[0].clone()];
    for a in 1..=top {
        let next: Vec<DPoly> = (0..=top - a)
            .map(|j| Ok(layer[j].try_pow(cfg.q(), budget)?.add(&layer[j + 1].scale(&p))))
            .collect::<Result<_>>()?;
        layer = next;
        out.push(layer[0].clone());
    }
    Ok(out)
}

/// `i*_m δ^ℓ f` for `ℓ = 0..=top`, without expanding `δ^ℓ f`: with
/// `T[a][b] = i*φ^a δ^b f` one has `T[a][b] = (T[a+1][b-1] − T[a][b-1]^q)/p`.
fn restricted_delta_powers(cfg: &PrimeCfg, f: &DPoly, point: &[Vec<BigInt>], top: usize, budget: usize) -> Result<Vec<DPoly>> {
    let d = point[0].len();
    let phis: Vec<Vec<DPoly>> = (0..d).map(|g| restricted_phi_powers(cfg, point, g, top, budget)).collect::<Result<_>>()?;
    let mut row: Vec<DPoly> = (0..=top)
        .map(|a| {
            let map: HashMap<Var, DPoly> = (0..d).map(|g| (var(g as u32, 0), phis[g][a].clone())).collect();
            f.try_substitute(&map, budget)
        })
        .collect::<Result<_>>()?;
    let mut out = vec![row[0].clone()];
    let p = cfg.p_big();
    for b in 1..=top {
        let next: Vec<DPoly> = (0..=top - b)
            .map(|a| {
                let num = row[a + 1].sub(&row[a].try_pow(cfg.q(), budget)?);
                num.div_exact(&p).map_err(|_| Error::Invariant("restricted δ must be integral".into()))
            })
            .collect::<Result<_>>()?;
        row = next;
        out.push(row[0].clone());
    }
    Ok(out)
}

/// Builds `N_{[m]n}A`; the point must lie on `A`.
pub fn build_kernel(cfg: &PrimeCfg, a: &AffinePresentation, m: usize, n: usize) -> Result<KernelPresentation> {
    build_kernel_with_budget(cfg, a, m, n, DEFAULT_TERM_BUDGET)
}

pub fn build_kernel_with_budget(cfg: &PrimeCfg, a: &AffinePresentation, m: usize, n: usize, budget: usize) -> Result<KernelPresentation> {
    cfg.require_odd()?;
    let point = a.point_expansion(cfg, m)?;
    let mut per_gen = Vec::with_capacity(a.generators.len());
    for f in &a.generators {
        let seq = restricted_delta_powers(cfg, f, &point, m + n, budget)?;
        if let Some(j) = (0..=m).find(|&j| !seq[j].is_zero()) {
            return Err(Error::InvalidPoint(format!("δ^{j} of {f} does not vanish at the point")));
        }
        per_gen.push(seq);
    }
    let mut relations = Vec::new();
    for k in 1..=n {
        for seq in &per_gen {
            relations.push(seq[m + k].clone());
        }
    }
    Ok(KernelPresentation { shift: m, level: n, num_vars: a.num_vars, point, relations })
}

/// `P_k` with its slots made independent generators: `T^{(i)} ↦ slot_var(i, 0)`.
fn independent_phi_del(cfg: &PrimeCfg, k: usize) -> Result<DPoly> {
    let pk = phi_del_polynomial(cfg, k)?;
    Ok(pk.map_vars(|v| slot_var(var_order(v), 0)))
}

/// The polynomials entering relation (*) for a fixed shift `m`.
#[derive(Clone, Debug)]
struct StarData {
    m: usize,
    pm: DPoly,
    pm1: DPoly,
    /// `δP_m` over the free δ-ring on the slots; `slot_var(i, 1)` is `δT_i`.
    dpm: DPoly,
}

impl StarData {
    fn new(cfg: &PrimeCfg, m: usize) -> Result<Self> {
        let pm = independent_phi_del(cfg, m)?;
        let pm1 = independent_phi_del(cfg, m + 1)?;
        let dpm = delta_apply(cfg, &pm)?;
        Ok(StarData { m, pm, pm1, dpm })
    }

    /// `p^{-(m+2)}(P_m(s)^q + p^{m+1}t^q + p·(δP_m)(s, Δs) − P_{m+1}(s, t))`, so
    /// that `i*δ^{m+2}a = Δ(i*δ^{m+1}a) + correction` for `s = (i*a, …, i*δ^m a)`
    /// and `t = i*δ^{m+1}a`.
    fn correction(&self, cfg: &PrimeCfg, s: &[DPoly], ds: &[DPoly], t: &DPoly, budget: usize) -> Result<DPoly> {
        let m = self.m;
        let p = cfg.p();
        let q = cfg.q();
        let mut map: HashMap<Var, DPoly> = HashMap::new();
        for i in 0..=m {
            map.insert(slot_var(i as u32, 0), s[i].clone());
            map.insert(slot_var(i as u32, 1), ds[i].clone());
        }
        let pm_s = self.pm.try_substitute(&map, budget)?;
        let dpm_s = self.dpm.try_substitute(&map, budget)?;
        map.insert(slot_var(m as u32 + 1, 0), t.clone());
        let pm1_s = self.pm1.try_substitute(&map, budget)?;
        let num = pm_s
            .try_pow(q, budget)?
            .add(&t.try_pow(q, budget)?.scale(&pow_p(p, m as u32 + 1)))
            .add(&dpm_s.scale(&cfg.p_big()))
            .sub(&pm1_s);
        num.div_p_pow(p, m as u32 + 2)
            .map_err(|_| Error::Invariant("relation (*) is not divisible by p^(m+2)".into()))
    }
}

/// The δ-structure `Δ` of the lateral Frobenius `f̃(a) = a^q + p·Δa` on the
/// kernel ring of affine `d`-space at a point.
#[derive(Clone, Debug)]
pub struct KernelDelta {
    cfg: PrimeCfg,
    m: usize,
    num_vars: usize,
    max_order: usize,
    /// `Δx_g^{(k)}` for `m < k ≤ max_order`.
    gens: HashMap<Var, DPoly>,
    budget: usize,
}

impl KernelDelta {
    /// Prepares `Δ` on the generators of order up to `max_order`.
    pub fn new(cfg: &PrimeCfg, point: &[Vec<BigInt>], max_order: usize, budget: usize) -> Result<Self> {
        cfg.require_odd()?;
        let m = point.len() - 1;
        let d = point[0].len();
        let star = StarData::new(cfg, m)?;
        let mut gens: HashMap<Var, DPoly> = HashMap::new();
        let const_delta: Vec<Vec<BigInt>> = point.iter().map(|l| l.iter().map(|c| c.delta(cfg)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
        for k in (m + 1)..=max_order {
            let j = k - m - 1;
            for g in 0..d {
                let mut s = Vec::with_capacity(m + 1);
                let mut ds = Vec::with_capacity(m + 1);
                for i in 0..=m {
                    let o = j + i;
                    if o <= m {
                        s.push(DPoly::constant(point[o][g].clone()));
                        ds.push(DPoly::constant(const_delta[o][g].clone()));
                    } else {
                        let v = var(g as u32, o as u32);
                        s.push(DPoly::from_var(v));
                        ds.push(gens[&v].clone());
                    }
                }
                let x = DPoly::var(g as u32, k as u32);
                let corr = star.correction(cfg, &s, &ds, &x, budget)?;
                gens.insert(var(g as u32, k as u32), DPoly::var(g as u32, k as u32 + 1).sub(&corr));
            }
        }
        Ok(KernelDelta { cfg: *cfg, m, num_vars: d, max_order, gens, budget })
    }

    pub fn shift(&self) -> usize {
        self.m
    }

    /// `Δx_g^{(k)}`.
    pub fn generator(&self, g: usize, k: usize) -> Option<&DPoly> {
        self.gens.get(&var(g as u32, k as u32))
    }

    fn check_vars(&self, f: &DPoly) -> Result<()> {
        for v in f.vars() {
            let o = var_order(v) as usize;
            if o <= self.m || o > self.max_order || var_gen(v) as usize >= self.num_vars {
                return Err(Error::Config(format!("variable of order {o} is outside the prepared kernel ring")));
            }
        }
        Ok(())
    }

    /// `f̃(f)`: every generator `x ↦ x^q + p·Δx`, constants fixed.
    pub fn lift(&self, f: &DPoly) -> Result<DPoly> {
        self.check_vars(f)?;
        let p = self.cfg.p_big();
        let map: HashMap<Var, DPoly> = f
            .vars()
            .into_iter()
            .map(|v| (v, DPoly::from_var(v).pow(self.cfg.q()).add(&self.gens[&v].scale(&p))))
            .collect();
        f.try_substitute(&map, self.budget)
    }

    /// `Δf = (f̃(f) − f^q)/p`.
    pub fn delta(&self, f: &DPoly) -> Result<DPoly> {
        let lifted = self.lift(f)?;
        lifted
            .sub(&f.try_pow(self.cfg.q(), self.budget)?)
            .div_exact(&self.cfg.p_big())
            .map_err(|_| Error::Invariant("Δ must be integral".into()))
    }
}

/// Slot for `Δ^j g_1` in the lateral form of a witness.
fn u_slot(j: usize) -> Var {
    slot_var(j as u32, 0)
}

const G_SLOT_BASE: u32 = 256;

/// Slot for `g_j = i*δ^{m+j}f`, `j ≥ 1`.
pub fn g_slot(j: usize) -> Var {
    slot_var(G_SLOT_BASE + j as u32 - 1, 0)
}

/// `H_1(t) = (p^{m+1}t^q − P_{m+1}(0, …, 0, t))/p^{m+2}` in the slot `g_slot(1)`.
pub fn h1_polynomial(cfg: &PrimeCfg, m: usize) -> Result<DPoly> {
    let p = cfg.p();
    let pm1 = independent_phi_del(cfg, m + 1)?;
    let t = DPoly::from_var(g_slot(1));
    let mut map: HashMap<Var, DPoly> = (0..=m).map(|i| (slot_var(i as u32, 0), DPoly::zero())).collect();
    map.insert(slot_var(m as u32 + 1, 0), t.clone());
    t.pow(cfg.q())
        .scale(&pow_p(p, m as u32 + 1))
        .sub(&pm1.substitute(&map))
        .div_p_pow(p, m as u32 + 2)
}

/// Witnesses for `Δ^k g_1 − g_{k+1}`, `k = 0..=n`, following the inductive
/// construction `W_k = H + K`.
#[derive(Clone, Debug)]
pub struct DeltaDelWitnesses {
    pub shift: usize,
    /// `W_k(U_0, …, U_{k-1})` with `U_j` standing for `Δ^j g_1`.
    pub lateral: Vec<DPoly>,
    /// `W_k` rewritten in the slots `g_1, …, g_k`.
    pub kernel: Vec<DPoly>,
}

/// Runs the recursion symbolically; nothing here depends on the scheme.
pub fn delta_del_witnesses(cfg: &PrimeCfg, m: usize, n: usize, budget: usize) -> Result<DeltaDelWitnesses> {
    cfg.require_odd()?;
    let star = StarData::new(cfg, m)?;
    let gs = |j: usize| DPoly::from_var(g_slot(j));
    let us = |j: usize| DPoly::from_var(u_slot(j));
    let mut lateral = vec![DPoly::zero()];
    let mut kernel = vec![DPoly::zero()];
    // Δg_j − g_{j+1} as a polynomial in g_1..g_j.
    let mut ktilde: Vec<DPoly> = vec![DPoly::zero()];
    for k in 1..=n {
        let l = &lateral[k - 1];
        let dl = delta_apply(cfg, l)?;
        let shift_map: HashMap<Var, DPoly> = (0..k).map(|j| (slot_var(j as u32, 1), us(j + 1))).collect();
        let mterm = dl.try_substitute(&shift_map, budget)?;
        let d = carry(cfg, &us(k - 1), &l.sub(&us(k - 1)))?;
        let h = mterm.sub(&d);

        let mut s = Vec::with_capacity(m + 1);
        let mut ds = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let idx = (k + i) as i64 - 1 - m as i64;
            if idx >= 1 {
                let idx = idx as usize;
                s.push(gs(idx));
                ds.push(gs(idx + 1).add(&ktilde[idx]));
            } else {
                s.push(DPoly::zero());
                ds.push(DPoly::zero());
            }
        }
        let kt = star.correction(cfg, &s, &ds, &gs(k), budget)?.neg();
        let to_u: HashMap<Var, DPoly> = (1..=k).map(|j| (g_slot(j), us(j - 1).sub(&lateral[j - 1]))).collect();
        let kk = kt.try_substitute(&to_u, budget)?;
        ktilde.push(kt);
        let w = h.add(&kk);
        let to_g: HashMap<Var, DPoly> = (0..k).map(|j| (u_slot(j), gs(j + 1).add(&kernel[j]))).collect();
        kernel.push(w.try_substitute(&to_g, budget)?);
        lateral.push(w);
    }
    Ok(DeltaDelWitnesses { shift: m, lateral, kernel })
}

/// Outcome of `kernel_jet_iso_check`.
#[derive(Clone, Debug)]
pub struct IsoReport {
    pub shift: usize,
    pub level: usize,
    /// `g_j = i*δ^{m+j}f` for `j = 1..=level+1`, one generator.
    pub relations: Vec<DPoly>,
    /// `Δ^k g_1 − g_{k+1} = W_k(g_1, …, g_k)`.
    pub witnesses: Vec<CenteredWitness>,
    pub verified: Vec<bool>,
}

impl IsoReport {
    pub fn all_verified(&self) -> bool {
        self.verified.iter().all(|&b| b)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "shift": self.shift,
            "level": self.level,
            "verified": self.verified,
            "witness_terms": self.witnesses.iter().map(|w| w.expr.num_terms()).collect::<Vec<_>>(),
            "witnesses": self.witnesses.iter().map(|w| w.expr.to_string()).collect::<Vec<_>>(),
        })
    }
}

/// Certifies `(g_1, Δg_1, …, Δ^k g_1) = (g_1, …, g_{k+1})` for `k ≤ n` and the
/// generator `f_index` of `I`, by expanding each witness exactly.
pub fn kernel_jet_iso_check(cfg: &PrimeCfg, a: &AffinePresentation, f_index: usize, m: usize, n: usize, budget: usize) -> Result<IsoReport> {
    cfg.require_odd()?;
    let f = a.generators.get(f_index).ok_or_else(|| Error::Config(format!("no generator {f_index}")))?;
    let single = AffinePresentation { num_vars: a.num_vars, generators: vec![f.clone()], marked_point: a.marked_point.clone() };
    let kernel = build_kernel_with_budget(cfg, &single, m, n + 1, budget)?;
    let g: Vec<DPoly> = kernel.relations.clone();
    let wit = delta_del_witnesses(cfg, m, n, budget)?;
    let kd = KernelDelta::new(cfg, &kernel.point, m + n, budget)?;
    let slots: Vec<(Var, DPoly)> = (1..=n).map(|j| (g_slot(j), g[j - 1].clone())).collect();
    let mut witnesses = Vec::with_capacity(n + 1);
    let mut verified = Vec::with_capacity(n + 1);
    let mut dk = g[0].clone();
    for k in 0..=n {
        if k > 0 {
            dk = kd.delta(&dk)?;
        }
        let target = dk.sub(&g[k]);
        let w = CenteredWitness::new(wit.kernel[k].clone(), slots[..k].to_vec(), format!("Delta-del recursion, k = {k}"));
        let ok = w.is_centered() && w.certifies(&target, budget)?;
        if !ok {
            return Err(Error::Contradiction(format!("witness for Δ^{k} g_1 − g_{} does not expand to the target", k + 1)));
        }
        witnesses.push(w);
        verified.push(ok);
    }
    Ok(IsoReport { shift: m, level: n, relations: g, witnesses, verified })
}

/// `f̃^i(x_{m+1}) = x_{m+1}^{q^{i-1}} + p·x_{m+2}^{q^{i-2}} + … + p^{i-1}x_{m+i}`
/// in the Witt coordinates `x_k = var(k, 0)`.
pub fn lateral_closed_form(cfg: &PrimeCfg, m: usize, i: usize) -> DPoly {
    let q = cfg.q();
    let mut out = DPoly::zero();
    for k in 1..=i {
        let e = q.pow((i - k) as u32);
        out = out.add(&DPoly::var((m + k) as u32, 0).pow(e).scale(&pow_p(cfg.p(), k as u32 - 1)));
    }
    out
}

/// Compares the closed form with the tail coordinate of `i − 1` lateral
/// Frobenius iterates of `(0, …, 0; x_{m+1}, …, x_{m+i})`.
pub fn affine_closed_form_check(cfg: &PrimeCfg, m: usize, i: usize) -> Result<bool> {
    if i == 0 {
        return Err(Error::Config("the closed form starts at i = 1".into()));
    }
    let head = vec![DPoly::zero(); m + 1];
    let tail = (1..=i).map(|k| DPoly::var((m + k) as u32, 0)).collect();
    let w = ShiftedWitt::new(*cfg, m, head, tail)?;
    let it = w.lateral_frobenius_iter(i - 1)?;
    Ok(it.tail()[0] == lateral_closed_form(cfg, m, i))
}

/// For affine `1`-space at an integral point: the Witt coordinates of the
/// universal kernel point, pushed through `f̃`, agree with the lateral
/// Frobenius of those coordinates.
pub fn affine_delta_matches_lateral(cfg: &PrimeCfg, point: &BigInt, m: usize, n: usize) -> Result<bool> {
    cfg.require_odd()?;
    let budget = DEFAULT_TERM_BUDGET;
    let a = AffinePresentation { num_vars: 1, generators: Vec::new(), marked_point: vec![point.clone()] };
    let expansion = a.point_expansion(cfg, m)?;
    let ghosts = restricted_phi_powers(cfg, &expansion, 0, m + n, budget)?;
    let tau = unghost_of(cfg, &ghosts)?;
    let kd = KernelDelta::new(cfg, &expansion, m + n, budget)?;
    let w = ShiftedWitt::new(*cfg, m, tau[..=m].to_vec(), tau[m + 1..].to_vec())?;
    let lat = w.lateral_frobenius()?;
    for (k, target) in lat.tail().iter().enumerate() {
        if kd.lift(&tau[m + 1 + k])? != *target {
            return Ok(false);
        }
    }
    Ok(lat.head().iter().zip(&tau[..=m]).all(|(a, b)| a == b))
}

/// `J^n Ĝ ≅ W_n` and `N^n G ≅ (W_{n-1})^d` for a `d`-dimensional formal group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelShape {
    pub dim: usize,
    /// Length of each Witt factor.
    pub witt_length: usize,
}

impl fmt::Display for KernelShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == 1 {
            write!(f, "W_{}", self.witt_length - 1)
        } else {
            write!(f, "(W_{})^{}", self.witt_length - 1, self.dim)
        }
    }
}

pub fn formal_group_kernel_shape(cfg: &PrimeCfg, dim: usize, n: usize) -> Result<KernelShape> {
    cfg.require_odd()?;
    if dim == 0 || n == 0 {
        return Err(Error::Config("dimension and level must be positive".into()));
    }
    Ok(KernelShape { dim, witt_length: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deltapoly::delta_iter;

    fn cfg(p: u64) -> PrimeCfg {
        PrimeCfg::new(p).unwrap()
    }

    fn full_kernel_relation(c: &PrimeCfg, a: &AffinePresentation, m: usize, k: usize) -> DPoly {
        let f = &a.generators[0];
        let full = delta_iter(c, f, m + k).unwrap();
        let exp = a.point_expansion(c, m).unwrap();
        let map: HashMap<Var, DPoly> = a.point_values(&exp).into_iter().map(|(v, c)| (v, DPoly::constant(c))).collect();
        full.substitute(&map)
    }

    #[test]
    fn jet_examples() {
        let c = cfg(3);
        let line = AffinePresentation::affine_space(1);
        let j = build_jet(&c, &line, 2).unwrap();
        assert!(j.relations.is_empty());
        let xa = AffinePresentation::new(1, vec![DPoly::var(0, 0)], vec![BigInt::zero()]).unwrap();
        let j = build_jet(&c, &xa, 1).unwrap();
        assert_eq!(j.relations, vec![DPoly::var(0, 0), DPoly::var(0, 1)]);
        assert!(matches!(build_jet(&cfg(2), &xa, 1), Err(Error::UnsupportedPrime(2))));
    }

    #[test]
    fn weierstrass_jet_and_point() {
        let c = cfg(5);
        let e = AffinePresentation::weierstrass(1, 1, (0, 1)).unwrap();
        let j = build_jet(&c, &e, 2).unwrap();
        assert_eq!(j.relations.len(), 3);
        assert!(jet_point_check(&c, &e, &j).unwrap());
        // Leading pieces of δf: (φ(y)² − y^{10})/5 contributes 2y^5y' and 5y'^2.
        let df = &j.level_relations(1)[0];
        let (y, y1, x1) = (DPoly::var(1, 0), DPoly::var(1, 1), DPoly::var(0, 1));
        assert_eq!(df.coeff(&y.pow(5).mul(&y1).sorted_terms()[0].0.clone()), BigInt::from(2));
        assert_eq!(df.coeff(&y1.pow(2).sorted_terms()[0].0.clone()), BigInt::from(5));
        assert_eq!(df.coeff(&x1.pow(3).sorted_terms()[0].0.clone()), BigInt::from(-25));
        assert!(matches!(AffinePresentation::weierstrass(1, 1, (1, 1)), Err(Error::InvalidPoint(_))));
    }

    #[test]
    fn kernel_matches_full_expansion() {
        for p in [3u64, 5] {
            let c = cfg(p);
            let e = AffinePresentation::weierstrass(1, 1, (0, 1)).unwrap();
            for m in 0..2 {
                let k = build_kernel(&c, &e, m, 2).unwrap();
                assert_eq!(k.relations.len(), 2);
                for j in 1..=2 {
                    if m + j <= 2 {
                        assert_eq!(k.level_relations(j)[0], full_kernel_relation(&c, &e, m, j), "p={p} m={m} j={j}");
                    }
                }
            }
        }
        let c = cfg(5);
        let e = AffinePresentation::weierstrass(1, 1, (0, 1)).unwrap();
        let k = build_kernel(&c, &e, 0, 1).unwrap();
        let (u, v) = (DPoly::var(0, 1), DPoly::var(1, 1));
        let expect = v.scale_i64(2).add(&v.pow(2).scale_i64(5)).sub(&u.pow(3).scale_i64(25)).sub(&u);
        assert_eq!(k.relations[0], expect);
        assert!(build_kernel(&c, &AffinePresentation::affine_space(2), 1, 3).unwrap().relations.is_empty());
    }

    #[test]
    fn second_kernel_relation_splits_as_delta_plus_h1() {
        let c = cfg(5);
        let e = AffinePresentation::weierstrass(1, 1, (0, 1)).unwrap();
        let k = build_kernel(&c, &e, 0, 2).unwrap();
        let kd = KernelDelta::new(&c, &k.point, 2, DEFAULT_TERM_BUDGET).unwrap();
        let g1 = &k.relations[0];
        // At m = 0 one has H_1(t) = −p^{q−2} t^q.
        let h1 = h1_polynomial(&c, 0).unwrap();
        assert_eq!(h1, DPoly::from_var(g_slot(1)).pow(5).scale_i64(-125));
        let expect = kd.delta(g1).unwrap().sub(&g1.pow(5).scale_i64(125));
        assert_eq!(k.relations[1], expect);
    }

    #[test]
    fn witness_level_one_is_minus_h1() {
        for p in [3u64, 5, 7] {
            let c = cfg(p);
            for m in 0..3 {
                let w = delta_del_witnesses(&c, m, 1, DEFAULT_TERM_BUDGET).unwrap();
                assert!(w.kernel[0].is_zero());
                assert_eq!(w.kernel[1], h1_polynomial(&c, m).unwrap().neg());
            }
        }
    }

    #[test]
    fn iso_check_small() {
        let c = cfg(3);
        let e = AffinePresentation::weierstrass(1, 1, (0, 1)).unwrap();
        for m in 0..2 {
            let r = kernel_jet_iso_check(&c, &e, 0, m, 2, DEFAULT_TERM_BUDGET).unwrap();
            assert!(r.all_verified());
            assert!(r.witnesses.iter().all(|w| w.is_centered()));
        }
    }

    #[test]
    fn lateral_witnesses_evaluate_on_delta_powers() {
        let c = cfg(3);
        let e = AffinePresentation::weierstrass(1, 1, (0, 1)).unwrap();
        let m = 0;
        let k = build_kernel(&c, &e, m, 3).unwrap();
        let kd = KernelDelta::new(&c, &k.point, 3, DEFAULT_TERM_BUDGET).unwrap();
        let w = delta_del_witnesses(&c, m, 2, DEFAULT_TERM_BUDGET).unwrap();
        let u0 = k.relations[0].clone();
        let u1 = kd.delta(&u0).unwrap();
        let u2 = kd.delta(&u1).unwrap();
        let map: HashMap<Var, DPoly> = [(u_slot(0), u0.clone()), (u_slot(1), u1)].into_iter().collect();
        assert_eq!(w.lateral[2].substitute(&map), u2.sub(&k.relations[2]));
    }

    #[test]
    fn affine_closed_form() {
        for p in [3u64, 5] {
            let c = cfg(p);
            for m in 0..3 {
                for i in 1..=3 {
                    assert!(affine_closed_form_check(&c, m, i).unwrap(), "p={p} m={m} i={i}");
                }
            }
        }
    }

    #[test]
    fn affine_delta_is_lateral_frobenius() {
        for p in [3u64, 5] {
            let c = cfg(p);
            for m in 0..3 {
                for pt in [0i64, 1, 2] {
                    assert!(affine_delta_matches_lateral(&c, &BigInt::from(pt), m, 3).unwrap(), "p={p} m={m} pt={pt}");
                }
            }
        }
    }

    #[test]
    fn kernel_shapes() {
        let c = cfg(3);
        assert_eq!(formal_group_kernel_shape(&c, 1, 1).unwrap().to_string(), "W_0");
        assert_eq!(formal_group_kernel_shape(&c, 1, 3).unwrap().witt_length, 3);
        assert_eq!(formal_group_kernel_shape(&c, 2, 2).unwrap().to_string(), "(W_1)^2");
        assert!(formal_group_kernel_shape(&cfg(2), 1, 1).is_err());
    }
}
