//! Acceptance suite: one line per criterion, with the tolerance and the
//! runtime bound it is held to.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use deltajet::corpus::Catalog;
use deltajet::deltapoly::{phi_power_expand, verify_phi_expansion, witt_to_delta};
use deltajet::dpoly::{DPoly, DEFAULT_TERM_BUDGET};
use deltajet::elliptic::{Curve, CurvePoint};
use deltajet::isocrystal::{Isocrystal, Verdict};
use deltajet::jetspace::{affine_closed_form_check, kernel_jet_iso_check, AffinePresentation};
use deltajet::ringcore::{pow_p, PadicInt, PrimeCfg};
use deltajet::shiftedwitt::{symbolic, ShiftedWitt};
use deltajet::Result;

const SEED: u64 = 20_261_015;
const PRECISION: u32 = 12;

struct Outcome {
    ok: bool,
    detail: String,
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn cfg(p: u64) -> PrimeCfg {
    PrimeCfg::new(p).unwrap()
}

/// Lateral Frobenius integrality, exact.
fn c1() -> Result<Outcome> {
    let mut r = rng(1);
    let mut cases = 0;
    for p in [2, 3, 5] {
        for m in 0..=2 {
            for n in 1..=4 {
                for _ in 0..200 {
                    let coords = (0..=m + n).map(|_| BigInt::from(r.gen_range(-1_000_000i64..=1_000_000))).collect();
                    let w = ShiftedWitt::from_coords(cfg(p), m, coords)?;
                    let out = w.lateral_frobenius()?;
                    if let Some(h) = w.congruence_failure(&out) {
                        return Ok(Outcome { ok: false, detail: format!("p={p} m={m} n={n}: congruence fails at {h}") });
                    }
                    cases += 1;
                }
            }
        }
    }
    Ok(Outcome { ok: true, detail: format!("{cases} vectors, p in {{2,3,5}}, m <= 2, n <= 4") })
}

/// The comm identity: symbolic and over Z/p^12.
fn c2() -> Result<Outcome> {
    let mut symbolic_cells = 0;
    for (p, skip) in [(2, None), (3, Some((2, 4)))] {
        for m in 0..=2 {
            for n in 2..=4 {
                if skip == Some((m, n)) {
                    continue;
                }
                let r = symbolic(cfg(p), m, n).check_comm_identity()?;
                if !r.equal {
                    return Ok(Outcome { ok: false, detail: format!("symbolic p={p} m={m} n={n} differs at {:?}", r.mismatch) });
                }
                symbolic_cells += 1;
            }
        }
    }
    let mut r = rng(2);
    let mut numeric = 0;
    for p in [3, 5, 7] {
        let modulus = pow_p(p, PRECISION);
        for m in 0..=2 {
            for n in 2..=4 {
                for _ in 0..10 {
                    let coords = (0..=m + n).map(|_| PadicInt::new(p, BigInt::from(r.gen::<u128>()).mod_floor(&modulus), PRECISION)).collect();
                    if !ShiftedWitt::from_coords(cfg(p), m, coords)?.check_comm_identity()?.equal {
                        return Ok(Outcome { ok: false, detail: format!("numeric p={p} m={m} n={n}") });
                    }
                    numeric += 1;
                }
            }
        }
    }
    Ok(Outcome { ok: true, detail: format!("{symbolic_cells} symbolic cells (p=2 all 9, p=3 without (2,4)), {numeric} numeric vectors mod p^{PRECISION}") })
}

/// Ψ^m(a) − p^m ∂^m a as a centered polynomial.
fn c3() -> Result<Outcome> {
    let a = DPoly::var(0, 0);
    for p in [2, 3] {
        for m in 1..=4 {
            let e = phi_power_expand(&cfg(p), &a, m)?;
            if !verify_phi_expansion(&cfg(p), &a, m, &e)? {
                return Ok(Outcome { ok: false, detail: format!("p={p} m={m}") });
            }
        }
    }
    Ok(Outcome { ok: true, detail: "m <= 4, p in {2,3}".into() })
}

/// Witt and δ-coordinates: round trip and centered witnesses.
fn c4() -> Result<Outcome> {
    for p in [3, 5] {
        let c = witt_to_delta(&cfg(p), 4)?;
        if !c.round_trip_ok()? || !c.witnesses_ok()? {
            return Ok(Outcome { ok: false, detail: format!("p={p}") });
        }
    }
    Ok(Outcome { ok: true, detail: "m <= 4, p in {3,5}".into() })
}

/// Kernel against jet space, and the affine closed form.
fn c5() -> Result<Outcome> {
    let curves = [(5, 1, 1, (0, 1)), (7, 1, 1, (0, 1))];
    // the four kernel checks are independent and run side by side
    let reports = std::thread::scope(|s| {
        let handles: Vec<_> = curves
            .iter()
            .flat_map(|&(p, a, b, pt)| (0..=1).map(move |m| (p, a, b, pt, m)))
            .map(|(p, a, b, pt, m)| {
                s.spawn(move || -> Result<(u64, usize, bool, usize)> {
                    let pres = AffinePresentation::weierstrass(a, b, pt)?;
                    let r = kernel_jet_iso_check(&cfg(p), &pres, 0, m, 2, DEFAULT_TERM_BUDGET)?;
                    Ok((p, m, r.all_verified(), r.witnesses.len()))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("kernel check panicked")).collect::<Vec<_>>()
    });
    let mut witnesses = 0;
    for r in reports {
        let (p, m, ok, count) = r?;
        if !ok {
            return Ok(Outcome { ok: false, detail: format!("witness fails for p={p} m={m}") });
        }
        witnesses += count;
    }
    for (p, ..) in curves {
        for m in 0..=1 {
            for i in 1..=3 {
                if !affine_closed_form_check(&cfg(p), m, i)? {
                    return Ok(Outcome { ok: false, detail: format!("closed form p={p} m={m} i={i}") });
                }
            }
        }
    }
    Ok(Outcome { ok: true, detail: format!("{witnesses} witnesses through kernel level 3, p in {{5,7}}, m in {{0,1}}; closed form i <= 3") })
}

fn catalog_curve(id: &str) -> Curve {
    Catalog::bundled().get(id).unwrap().curve(PRECISION).unwrap()
}

/// Θ additivity on A(Z_p) and Θ(∞) = 0.
fn c6() -> Result<Outcome> {
    let mut r = rng(6);
    let mut worst = i64::MAX;
    for id in ["e-1-1-p5", "e-1-1-p7", "e-1-1-p13"] {
        let c = catalog_curve(id);
        if c.is_anomalous()? {
            return Ok(Outcome { ok: false, detail: format!("{id} is anomalous") });
        }
        if !c.theta_eval(&CurvePoint::Infinity)?.is_zero() {
            return Ok(Outcome { ok: false, detail: format!("Θ(∞) ≠ 0 on {id}") });
        }
        for _ in 0..20 {
            let (x, y) = c.random_pair_distinct_reductions(&mut r)?;
            let d = c.theta_eval(&c.add(&x, &y)?)?.sub(&c.theta_eval(&x)?)?.sub(&c.theta_eval(&y)?)?;
            if !d.is_zero() {
                return Ok(Outcome { ok: false, detail: format!("defect {d} on {id}") });
            }
            worst = worst.min(d.abs_precision());
        }
    }
    Ok(Outcome { ok: worst >= 9, detail: format!("3 curves x 20 pairs, defect zero to p^{worst} (need p^9)") })
}

/// The diff relation with γ = p and λ = a_p.
fn c7() -> Result<Outcome> {
    let mut r = rng(7);
    let mut worst = i64::MAX;
    let ids = ["e-1-1-p5", "e-1-1-p7", "e-1-1-p13", "e-m1-1-p7"];
    for id in ids {
        let d = catalog_curve(id).verify_diff_relation(&mut r, 10)?;
        if !(d.holds && d.gamma_is_p && d.lambda_is_ap) {
            return Ok(Outcome { ok: false, detail: format!("{id}: γ = {}, λ = {}", d.gamma, d.lambda) });
        }
        worst = worst.min(d.precision);
    }
    Ok(Outcome { ok: worst >= 8, detail: format!("{} curves x 10 kernel points, γ = p and λ = a_p to p^{worst} (need p^8)", ids.len()) })
}

/// Isocrystal verdicts over the catalog.
fn c8() -> Result<Outcome> {
    let one = BigRational::one();
    let cat = Catalog::bundled();
    for entry in &cat.curves {
        let c = entry.curve(PRECISION)?;
        let ap = c.count_ap()?;
        let iso = Isocrystal::build(&c, entry.canonical_lift)?;
        let adm = iso.admissibility()?;
        let mut ok = adm.t_n == one && adm.t_h == 1 && adm.admissible;
        match iso.verdict()? {
            Verdict::IsoToCrystalline { char_poly, .. } => {
                ok &= !entry.canonical_lift && iso.dim == 2;
                ok &= char_poly == vec![BigInt::from(entry.p), BigInt::from(-ap), BigInt::one()];
            }
            Verdict::IsoToOmegaSubobject { beta, slope } => {
                ok &= entry.canonical_lift && iso.dim == 1 && slope == one;
                let b = beta.residue().clone();
                let f = &b * &b - BigInt::from(ap) * &b + BigInt::from(entry.p);
                ok &= beta.valuation() == 1 && (f % pow_p(entry.p, PRECISION)).is_zero();
            }
        }
        if !ok {
            return Ok(Outcome { ok: false, detail: format!("{}", entry.id) });
        }
    }
    Ok(Outcome { ok: true, detail: format!("{} catalog curves, exact", cat.curves.len()) })
}

/// a_p by two independent enumerations.
fn c9() -> Result<Outcome> {
    let cat = Catalog::bundled();
    for entry in &cat.curves {
        let c = entry.curve(PRECISION)?;
        let (a, b) = (c.count_ap()?, c.count_ap_by_squares()?);
        if a != b {
            return Ok(Outcome { ok: false, detail: format!("{}: {a} vs {b}", entry.id) });
        }
    }
    Ok(Outcome { ok: true, detail: format!("{} catalog curves, exact", cat.curves.len()) })
}

type Criterion = (&'static str, fn() -> Result<Outcome>, u64);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 lateral Frobenius integrality", c1, 5),
        ("2 F^{m+2}∘I = F^{m+1}∘I∘F̃", c2, 30),
        ("3 Ψ^m(a) − p^m∂^m a centered", c3, 10),
        ("4 coordinate change", c4, 10),
        ("5 kernel and jet space", c5, 60),
        ("6 Θ additivity", c6, 30),
        ("7 diff relation, γ = p, λ = a_p", c7, 30),
        ("8 isocrystal verdicts", c8, 5),
        ("9 a_p by two enumerations", c9, 5),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let res = run();
        let took = start.elapsed();
        let (ok, detail) = match res {
            Ok(o) => (o.ok, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = took <= Duration::from_secs(limit);
        let pass = ok && in_time;
        failed += usize::from(!pass);
        let status = if pass { "PASS" } else { "FAIL" };
        println!("{status}  criterion {name}: {detail}; {:.2}s (limit {limit}s)", took.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
