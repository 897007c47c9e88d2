//! The bundled curve catalog and the corpus runner.
//!
//! A corpus is a JSON array of entries `{"id", "kind", "inputs", "expected"}`.
//! Every entry is checked in isolation: a malformed entry fails with a
//! `parse:` reason and the rest of the run is unaffected. Random inputs come
//! from a stream derived from the run seed and the entry id.

use std::collections::BTreeSet;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::deltapoly::{phi_power_expand, verify_phi_expansion, witt_to_delta};
use crate::dpoly::{DPoly, DEFAULT_TERM_BUDGET};
use crate::elliptic::{qp_to_json, Curve};
use crate::error::{Error, Result};
use crate::isocrystal::Isocrystal;
use crate::jetspace::{affine_closed_form_check, kernel_jet_iso_check, AffinePresentation};
use crate::json::{int_from_json, vec_from_json};
use crate::ringcore::{pow_p, PadicInt, PrimeCfg};
use crate::shiftedwitt::{symbolic, ShiftedWitt};
use crate::witt::{ghost_of, WittVec};

pub const CATALOG_JSON: &str = include_str!("../data/catalog.json");
pub const CORPUS_JSON: &str = include_str!("../data/corpus.json");

/// Stated in every report.
pub const REPORT_NOTE: &str = "The source results are theorems; there are no tables or benchmark figures to reproduce, and no numeric claims beyond the identities checked here.";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogCurve {
    pub id: String,
    pub p: u64,
    pub a: i64,
    pub b: i64,
    pub canonical_lift: bool,
    pub note: String,
}

impl CatalogCurve {
    pub fn curve(&self, precision: u32) -> Result<Curve> {
        Ok(Curve::from_i64(self.p, self.a, self.b, precision)?.with_canonical_lift(self.canonical_lift))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub version: u32,
    pub curves: Vec<CatalogCurve>,
}

impl Catalog {
    pub fn bundled() -> Catalog {
        serde_json::from_str(CATALOG_JSON).expect("bundled catalog parses")
    }

    pub fn get(&self, id: &str) -> Result<&CatalogCurve> {
        self.curves.iter().find(|c| c.id == id).ok_or_else(|| Error::Config(format!("no catalog curve \"{id}\"")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    WittIdentity,
    ShiftedIdentity,
    DeltapolyIdentity,
    JetIso,
    Character,
    Isocrystal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub kind: EntryKind,
    pub inputs: Value,
    /// A JSON value to compare with, or the string `"property"`.
    #[serde(default = "property")]
    pub expected: Value,
}

fn property() -> Value {
    Value::String("property".into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryResult {
    pub id: String,
    pub kind: Option<EntryKind>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub detail: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub millis: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub skip: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub seed: u64,
    pub precision: u32,
    pub primes: Vec<u64>,
    pub entries: Vec<EntryResult>,
    pub summary: Summary,
    pub note: String,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.summary.fail == 0
    }

    /// One line per entry and a closing count.
    pub fn human_summary(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let status = match e.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Skip => "skip",
            };
            out.push_str(&format!("{status:4}  {}", e.id));
            if let Some(r) = &e.reason {
                out.push_str(&format!("  ({r})"));
            }
            out.push('\n');
        }
        out.push_str(&format!("{} passed, {} failed, {} skipped\n{}\n", self.summary.pass, self.summary.fail, self.summary.skip, self.note));
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub seed: u64,
    pub precision: u32,
    /// Adds wall-clock times, which makes the report nondeterministic.
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: 0, precision: 12, timings: false }
    }
}

/// FNV-1a, to give each entry its own random stream.
fn id_stream(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Runs a corpus given as JSON text.
pub fn run_corpus_str(text: &str, opts: RunOptions) -> Result<RunReport> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let items = match v {
        Value::Array(items) => items,
        Value::Object(mut o) => match o.remove("entries") {
            Some(Value::Array(items)) => items,
            _ => return Err(Error::Parse("corpus object without an \"entries\" array".into())),
        },
        _ => return Err(Error::Parse("corpus must be an array of entries".into())),
    };
    Ok(run_corpus(&items, opts))
}

pub fn run_corpus(items: &[Value], opts: RunOptions) -> RunReport {
    let catalog = Catalog::bundled();
    let mut seen = BTreeSet::new();
    let mut primes = BTreeSet::new();
    let mut entries = Vec::with_capacity(items.len());
    for (pos, item) in items.iter().enumerate() {
        let raw_id = item.get("id").and_then(Value::as_str).map(str::to_owned).unwrap_or_else(|| format!("#{pos}"));
        let parsed: std::result::Result<CorpusEntry, _> = serde_json::from_value(item.clone());
        let entry = match parsed {
            Ok(e) => e,
            Err(err) => {
                entries.push(EntryResult { id: raw_id, kind: None, status: Status::Fail, reason: Some(format!("parse: {err}")), detail: Value::Null, millis: None });
                continue;
            }
        };
        if !seen.insert(entry.id.clone()) {
            entries.push(EntryResult { id: entry.id, kind: Some(entry.kind), status: Status::Fail, reason: Some("parse: duplicate id".into()), detail: Value::Null, millis: None });
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(id_stream(&entry.id));
        let start = Instant::now();
        let outcome = run_entry(&entry, &catalog, opts.precision, &mut rng);
        let millis = opts.timings.then(|| start.elapsed().as_millis() as u64);
        let result = match outcome {
            Ok(o) => {
                if let Some(p) = o.prime {
                    primes.insert(p);
                }
                let (status, reason) = match compare_expected(&entry.expected, &o.value) {
                    Ok(true) if o.holds => (Status::Pass, None),
                    Ok(true) => (Status::Fail, Some("property does not hold".to_string())),
                    Ok(false) => (Status::Fail, Some(format!("expected {}, got {}", entry.expected, o.value))),
                    Err(e) => (Status::Fail, Some(format!("parse: {e}"))),
                };
                EntryResult { id: entry.id, kind: Some(entry.kind), status, reason, detail: o.detail, millis }
            }
            Err(e @ Error::Parse(_)) | Err(e @ Error::LengthMismatch(_)) => {
                EntryResult { id: entry.id, kind: Some(entry.kind), status: Status::Fail, reason: Some(format!("parse: {e}")), detail: Value::Null, millis }
            }
            Err(Error::TermBudget { limit }) => EntryResult {
                id: entry.id,
                kind: Some(entry.kind),
                status: Status::Skip,
                reason: Some(format!("term budget of {limit} exceeded")),
                detail: Value::Null,
                millis,
            },
            Err(e) => EntryResult { id: entry.id, kind: Some(entry.kind), status: Status::Fail, reason: Some(e.to_string()), detail: Value::Null, millis },
        };
        entries.push(result);
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    let count = |s: Status| entries.iter().filter(|e| e.status == s).count();
    let summary = Summary { pass: count(Status::Pass), fail: count(Status::Fail), skip: count(Status::Skip) };
    RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: opts.seed,
        precision: opts.precision,
        primes: primes.into_iter().collect(),
        entries,
        summary,
        note: REPORT_NOTE.to_string(),
    }
}

/// What an entry computed: `value` is compared with `expected`, `holds`
/// carries the verdict of property checks.
struct Outcome {
    value: Value,
    holds: bool,
    detail: Value,
    prime: Option<u64>,
}

impl Outcome {
    fn property(holds: bool, detail: Value, p: u64) -> Self {
        Outcome { value: property(), holds, detail, prime: Some(p) }
    }

    fn value(value: Value, p: u64) -> Self {
        Outcome { detail: value.clone(), value, holds: true, prime: Some(p) }
    }
}

fn compare_expected(expected: &Value, got: &Value) -> Result<bool> {
    if expected == &property() {
        return Ok(got == &property());
    }
    if got == &property() {
        return Err(Error::Parse("this check is a property; expected must be \"property\"".into()));
    }
    Ok(match (expected, got) {
        (Value::Object(e), Value::Object(g)) => e.iter().all(|(k, v)| g.get(k).is_some_and(|gv| values_match(v, gv))),
        _ => values_match(expected, got),
    })
}

/// Integers compare by value whether written as numbers or strings.
fn values_match(e: &Value, g: &Value) -> bool {
    match (int_from_json(e), int_from_json(g)) {
        (Ok(a), Ok(b)) => a == b,
        _ => match (e, g) {
            (Value::Array(a), Value::Array(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| values_match(x, y)),
            _ => e == g,
        },
    }
}

fn field<'a>(v: &'a Value, k: &str) -> Result<&'a Value> {
    v.get(k).ok_or_else(|| Error::Parse(format!("missing \"{k}\"")))
}

fn u64_field(v: &Value, k: &str) -> Result<u64> {
    field(v, k)?.as_u64().ok_or_else(|| Error::Parse(format!("\"{k}\" must be a nonnegative integer")))
}

fn usize_field_or(v: &Value, k: &str, default: usize) -> Result<usize> {
    match v.get(k) {
        None => Ok(default),
        Some(x) => x.as_u64().map(|n| n as usize).ok_or_else(|| Error::Parse(format!("\"{k}\" must be a nonnegative integer"))),
    }
}

fn str_field<'a>(v: &'a Value, k: &str) -> Result<&'a str> {
    field(v, k)?.as_str().ok_or_else(|| Error::Parse(format!("\"{k}\" must be a string")))
}

fn random_ints(rng: &mut ChaCha8Rng, len: usize, bound: i64) -> Vec<BigInt> {
    (0..len).map(|_| BigInt::from(rng.gen_range(-bound..=bound))).collect()
}

fn run_entry(e: &CorpusEntry, catalog: &Catalog, precision: u32, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let inp = &e.inputs;
    match e.kind {
        EntryKind::WittIdentity => witt_entry(inp, rng),
        EntryKind::ShiftedIdentity => shifted_entry(inp, precision, rng),
        EntryKind::DeltapolyIdentity => deltapoly_entry(inp),
        EntryKind::JetIso => jet_entry(inp),
        EntryKind::Character => character_entry(inp, catalog, precision, rng),
        EntryKind::Isocrystal => isocrystal_entry(inp, catalog, precision),
    }
}

fn witt_entry(inp: &Value, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let p = u64_field(inp, "p")?;
    let cfg = PrimeCfg::new(p)?;
    let op = str_field(inp, "op")?;
    let arg = |k: &str| -> Result<WittVec<BigInt>> { WittVec::new(cfg, vec_from_json(field(inp, k)?)?) };
    let out: Vec<BigInt> = match op {
        "ghost" => arg("x")?.ghost().comps,
        "add" => arg("x")?.add(&arg("y")?)?.into_coords(),
        "mul" => arg("x")?.mul(&arg("y")?)?.into_coords(),
        "frobenius" => arg("x")?.frobenius()?.into_coords(),
        "homomorphism" => {
            let len = usize_field_or(inp, "len", 3)?;
            let samples = usize_field_or(inp, "samples", 20)?;
            let mut ok = true;
            for _ in 0..samples {
                let x = WittVec::new(cfg, random_ints(rng, len, 1000))?;
                let y = WittVec::new(cfg, random_ints(rng, len, 1000))?;
                let (gx, gy) = (x.ghost().comps, y.ghost().comps);
                let gs = x.add(&y)?.ghost().comps;
                let gm = x.mul(&y)?.ghost().comps;
                ok &= gs.iter().zip(gx.iter().zip(&gy)).all(|(s, (a, b))| *s == a + b);
                ok &= gm.iter().zip(gx.iter().zip(&gy)).all(|(m, (a, b))| *m == a * b);
            }
            return Ok(Outcome::property(ok, json!({"samples": samples, "len": len}), p));
        }
        other => return Err(Error::Parse(format!("unknown witt op \"{other}\""))),
    };
    Ok(Outcome::value(json!(out.iter().map(|c| c.to_string()).collect::<Vec<_>>()), p))
}

fn shifted_entry(inp: &Value, precision: u32, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let p = u64_field(inp, "p")?;
    let cfg = PrimeCfg::new(p)?;
    let m = u64_field(inp, "m")? as usize;
    let n = u64_field(inp, "n")? as usize;
    match str_field(inp, "mode")? {
        "symbolic" => {
            let r = symbolic(cfg, m, n).check_comm_identity()?;
            Ok(Outcome::property(r.equal, json!({"m": m, "n": n, "mismatch": r.mismatch}), p))
        }
        "numeric" => {
            let samples = usize_field_or(inp, "samples", 20)?;
            let modulus = pow_p(p, precision);
            let mut ok = true;
            for _ in 0..samples {
                let coords: Vec<PadicInt> = (0..=m + n).map(|_| PadicInt::new(p, BigInt::from(rng.gen::<u64>()).mod_floor(&modulus), precision)).collect();
                ok &= ShiftedWitt::from_coords(cfg, m, coords)?.check_comm_identity()?.equal;
            }
            Ok(Outcome::property(ok, json!({"m": m, "n": n, "samples": samples, "precision": precision}), p))
        }
        "integrality" => {
            let samples = usize_field_or(inp, "samples", 50)?;
            let mut ok = true;
            for _ in 0..samples {
                let w = ShiftedWitt::from_coords(cfg, m, random_ints(rng, m + n + 1, 10_000))?;
                let out = w.lateral_frobenius()?;
                ok &= w.congruence_failure(&out).is_none();
            }
            Ok(Outcome::property(ok, json!({"m": m, "n": n, "samples": samples}), p))
        }
        other => Err(Error::Parse(format!("unknown mode \"{other}\""))),
    }
}

fn deltapoly_entry(inp: &Value) -> Result<Outcome> {
    let p = u64_field(inp, "p")?;
    let cfg = PrimeCfg::new(p)?;
    match str_field(inp, "check")? {
        "phi-del" => {
            let m = u64_field(inp, "m")? as usize;
            let a = DPoly::var(0, 0);
            let e = phi_power_expand(&cfg, &a, m)?;
            let ok = verify_phi_expansion(&cfg, &a, m, &e)?;
            Ok(Outcome::property(ok, json!({"m": m, "remainder_terms": e.remainder.expr.num_terms()}), p))
        }
        "coord-change" => {
            let n = u64_field(inp, "n")? as usize;
            let c = witt_to_delta(&cfg, n)?;
            let ok = c.round_trip_ok()? && c.witnesses_ok()?;
            Ok(Outcome::property(ok, json!({"n": n}), p))
        }
        other => Err(Error::Parse(format!("unknown check \"{other}\""))),
    }
}

fn jet_entry(inp: &Value) -> Result<Outcome> {
    let p = u64_field(inp, "p")?;
    let cfg = PrimeCfg::new(p)?;
    let m = u64_field(inp, "m")? as usize;
    match str_field(inp, "check")? {
        "kernel" => {
            let n = u64_field(inp, "n")? as usize;
            let a = field(inp, "a")?.as_i64().ok_or_else(|| Error::Parse("\"a\" must be an integer".into()))?;
            let b = field(inp, "b")?.as_i64().ok_or_else(|| Error::Parse("\"b\" must be an integer".into()))?;
            let pt: Vec<i64> = serde_json::from_value(field(inp, "point")?.clone()).map_err(|e| Error::Parse(e.to_string()))?;
            if pt.len() != 2 {
                return Err(Error::Parse("\"point\" must have two coordinates".into()));
            }
            let pres = AffinePresentation::weierstrass(a, b, (pt[0], pt[1]))?;
            let r = kernel_jet_iso_check(&cfg, &pres, 0, m, n, DEFAULT_TERM_BUDGET)?;
            Ok(Outcome::property(r.all_verified(), json!({"m": m, "n": n, "witnesses": r.witnesses.len()}), p))
        }
        "affine-closed-form" => {
            let i = u64_field(inp, "i")? as usize;
            let ok = affine_closed_form_check(&cfg, m, i)?;
            Ok(Outcome::property(ok, json!({"m": m, "i": i}), p))
        }
        other => Err(Error::Parse(format!("unknown check \"{other}\""))),
    }
}

fn catalog_curve(inp: &Value, catalog: &Catalog, precision: u32) -> Result<Curve> {
    match field(inp, "curve")? {
        Value::String(id) => catalog.get(id)?.curve(precision),
        v @ Value::Object(_) => {
            let mut v = v.clone();
            if v.get("precision").is_none() {
                v["precision"] = json!(precision);
            }
            Curve::from_json(&v)
        }
        _ => Err(Error::Parse("\"curve\" must be a catalog id or a curve object".into())),
    }
}

fn character_entry(inp: &Value, catalog: &Catalog, precision: u32, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let c = catalog_curve(inp, catalog, precision)?;
    let p = c.p();
    match str_field(inp, "check")? {
        "ap" => {
            let ap = c.count_ap()?;
            let other = c.count_ap_by_squares()?;
            if ap != other {
                return Err(Error::Contradiction(format!("point counts disagree: {ap} and {other}")));
            }
            Ok(Outcome::value(json!(ap), p))
        }
        "theta-additivity" => {
            let pairs = usize_field_or(inp, "pairs", 20)?;
            let need = usize_field_or(inp, "min_precision", precision as usize - 3)? as i64;
            let mut worst = i64::MAX;
            let mut ok = c.theta_eval(&crate::elliptic::CurvePoint::Infinity)?.is_zero();
            for _ in 0..pairs {
                let (x, y) = c.random_pair_distinct_reductions(rng)?;
                let d = c.theta_eval(&c.add(&x, &y)?)?.sub(&c.theta_eval(&x)?)?.sub(&c.theta_eval(&y)?)?;
                ok &= d.is_zero();
                worst = worst.min(d.abs_precision());
            }
            Ok(Outcome::property(ok && worst >= need, json!({"pairs": pairs, "precision": worst}), p))
        }
        "diff" => {
            let points = usize_field_or(inp, "points", 10)?;
            let need = usize_field_or(inp, "min_precision", precision as usize - 4)? as i64;
            let r = c.verify_diff_relation(rng, points)?;
            let ok = r.holds && r.gamma_is_p && r.lambda_is_ap && r.precision >= need;
            Ok(Outcome::property(ok, r.to_json(), p))
        }
        "theta-infinity" => {
            let z = c.theta_eval(&crate::elliptic::CurvePoint::Infinity)?;
            Ok(Outcome::property(z.is_zero(), qp_to_json(&z), p))
        }
        other => Err(Error::Parse(format!("unknown check \"{other}\""))),
    }
}

fn isocrystal_entry(inp: &Value, catalog: &Catalog, precision: u32) -> Result<Outcome> {
    let c = catalog_curve(inp, catalog, precision)?;
    let iso = Isocrystal::build(&c, c.is_canonical_lift())?;
    let mut v = iso.to_json()?;
    v["verdict_kind"] = json!(iso.verdict()?.name());
    Ok(Outcome { detail: v.clone(), value: v, holds: true, prime: Some(c.p()) })
}

/// Ghost components of integer coordinates, as strings.
pub fn ghost_strings(p: u64, coords: &[BigInt]) -> Result<Vec<String>> {
    let cfg = PrimeCfg::new(p)?;
    Ok(ghost_of(&cfg, coords).iter().map(|c| c.to_string()).collect())
}
