//! `deltajet`: command-line front end for the deltajet library.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use deltajet::corpus::{run_corpus_str, Catalog, RunOptions, CORPUS_JSON};
use deltajet::deltapoly::{delta_apply, phi_power_expand, witt_to_delta};
use deltajet::dpoly::{DPoly, DEFAULT_TERM_BUDGET};
use deltajet::elliptic::{qp_to_json, Curve, CurvePoint};
use deltajet::isocrystal::Isocrystal;
use deltajet::jetspace::{build_jet, build_kernel, kernel_jet_iso_check, AffinePresentation};
use deltajet::json::{int_from_json, vec_from_json, vec_to_json};
use deltajet::ringcore::{pow_p, PadicInt, PrimeCfg};
use deltajet::shiftedwitt::ShiftedWitt;
use deltajet::witt::{exp_delta_int, GhostVec, WittVec};
use deltajet::{Error, Result};

#[derive(Parser)]
#[command(name = "deltajet", version, about = "Shifted Witt vectors, arithmetic jet spaces and delta-characters of elliptic curves")]
struct Cli {
    /// Digits of p-adic precision.
    #[arg(long, global = true, env = "DELTAJET_PRECISION", default_value_t = 12)]
    precision: u32,
    /// Print JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for random inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Witt vectors over Z.
    Witt {
        #[arg(value_enum)]
        op: WittCmd,
        #[arg(long)]
        p: u64,
        /// Coordinates, or ghost components for `unghost`, or an integer for `exp-delta`.
        x: String,
        y: Option<String>,
        /// Length parameter for `exp-delta`.
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Shifted Witt vectors and the lateral Frobenius.
    Switt {
        #[arg(value_enum)]
        op: SwittCmd,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m: usize,
        /// All coordinates, head first.
        coords: String,
    },
    /// Free δ-polynomials.
    Dpoly {
        #[arg(value_enum)]
        op: DpolyCmd,
        #[arg(long)]
        p: u64,
        /// Polynomial text for `delta` and `phi-expand`.
        poly: Option<String>,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Jet spaces and their kernels for a Weierstrass curve.
    Jet {
        #[arg(value_enum)]
        op: JetCmd,
        #[command(flatten)]
        curve: WeierstrassArgs,
        /// Marked point `[x, y]` with integer coordinates.
        #[arg(long, default_value = "[0,1]")]
        point: String,
        #[arg(long, default_value_t = 0)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Elliptic curves over Z_p.
    Ec {
        #[arg(value_enum)]
        op: EcCmd,
        #[command(flatten)]
        curve: CurveArgs,
        /// A point as JSON; random when absent.
        #[arg(long)]
        point: Option<String>,
        /// Tail coordinates `[s_1, …]` for `psi`; random when absent.
        #[arg(long)]
        tail: Option<String>,
        #[arg(long, default_value_t = 1)]
        i: usize,
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
    /// Filtered isocrystals.
    Crystal {
        #[arg(value_enum)]
        op: CrystalCmd,
        #[command(flatten)]
        curve: CurveArgs,
    },
    /// Runs a corpus of checks; the bundled corpus when no path is given.
    Corpus {
        path: Option<PathBuf>,
        /// Where to write the JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Include wall-clock times in the report.
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WittCmd {
    Ghost,
    Unghost,
    Add,
    Mul,
    Frob,
    ExpDelta,
}

#[derive(Clone, Copy, ValueEnum)]
enum SwittCmd {
    Ghost,
    LateralFrob,
    Include,
    CheckComm,
}

#[derive(Clone, Copy, ValueEnum)]
enum DpolyCmd {
    Delta,
    PhiExpand,
    CoordChange,
}

#[derive(Clone, Copy, ValueEnum)]
enum JetCmd {
    Build,
    Kernel,
    IsoCheck,
}

#[derive(Clone, Copy, ValueEnum)]
enum EcCmd {
    Ap,
    Theta,
    Psi,
    DiffCheck,
}

#[derive(Clone, Copy, ValueEnum)]
enum CrystalCmd {
    Build,
    Slopes,
    Admissible,
    Compare,
}

#[derive(Args)]
struct WeierstrassArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, allow_hyphen_values = true)]
    a: i64,
    #[arg(long, allow_hyphen_values = true)]
    b: i64,
}

#[derive(Args)]
struct CurveArgs {
    /// Catalog id; otherwise give `--p`, `--a` and `--b`.
    id: Option<String>,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    /// Declare the curve a canonical lift.
    #[arg(long)]
    canonical_lift: bool,
}

impl CurveArgs {
    fn curve(&self, precision: u32) -> Result<Curve> {
        if let Some(id) = &self.id {
            let c = Catalog::bundled().get(id)?.curve(precision)?;
            return Ok(if self.canonical_lift { c.with_canonical_lift(true) } else { c });
        }
        let (Some(p), Some(a), Some(b)) = (self.p, &self.a, &self.b) else {
            return Err(Error::Config("give a catalog id or all of --p, --a, --b".into()));
        };
        let int = |s: &str| s.trim().parse::<BigInt>().map_err(|_| Error::Parse(format!("not an integer: {s}")));
        Ok(Curve::new(p, int(a)?, int(b)?, precision)?.with_canonical_lift(self.canonical_lift))
    }
}

fn parse_json(s: &str) -> Result<Value> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

fn ints(s: &str) -> Result<Vec<BigInt>> {
    vec_from_json(&parse_json(s)?)
}

fn padics(s: &str, p: u64, precision: u32) -> Result<Vec<PadicInt>> {
    Ok(ints(s)?.into_iter().map(|v| PadicInt::new(p, v, precision)).collect())
}

fn witt(op: WittCmd, p: u64, x: &str, y: Option<&str>, n: usize) -> Result<Value> {
    let cfg = PrimeCfg::new(p)?;
    let arg = |s: &str| WittVec::new(cfg, ints(s)?);
    let second = || arg(y.ok_or_else(|| Error::Config("this operation takes two vectors".into()))?);
    Ok(match op {
        WittCmd::Ghost => vec_to_json(&arg(x)?.ghost().comps),
        WittCmd::Unghost => vec_to_json(WittVec::unghost(cfg, &GhostVec::new(ints(x)?))?.coords()),
        WittCmd::Add => vec_to_json(arg(x)?.add(&second()?)?.coords()),
        WittCmd::Mul => vec_to_json(arg(x)?.mul(&second()?)?.coords()),
        WittCmd::Frob => vec_to_json(arg(x)?.frobenius()?.coords()),
        WittCmd::ExpDelta => vec_to_json(exp_delta_int(cfg, &int_from_json(&parse_json(x)?)?, n)?.coords()),
    })
}

fn switt(op: SwittCmd, p: u64, m: usize, coords: &str) -> Result<Value> {
    let w = ShiftedWitt::from_coords(PrimeCfg::new(p)?, m, ints(coords)?)?;
    Ok(match op {
        SwittCmd::Ghost => vec_to_json(&w.shifted_ghost().comps),
        SwittCmd::LateralFrob => w.lateral_frobenius()?.to_json(),
        SwittCmd::Include => w.include().to_json(),
        SwittCmd::CheckComm => {
            let r = w.check_comm_identity()?;
            json!({"m": r.m, "n": r.n, "equal": r.equal, "mismatch": r.mismatch, "lhs": vec_to_json(&r.lhs), "rhs": vec_to_json(&r.rhs)})
        }
    })
}

fn dpoly(op: DpolyCmd, p: u64, poly: Option<&str>, m: usize, n: usize) -> Result<Value> {
    let cfg = PrimeCfg::new(p)?;
    let poly = || DPoly::parse(poly.ok_or_else(|| Error::Config("this operation takes a polynomial".into()))?);
    Ok(match op {
        DpolyCmd::Delta => json!(delta_apply(&cfg, &poly()?)?.to_string()),
        DpolyCmd::PhiExpand => {
            let e = phi_power_expand(&cfg, &poly()?, m)?;
            json!({
                "lead": e.lead.to_string(),
                "remainder": e.remainder.expr.to_string(),
                "centered": e.remainder.is_centered(),
                "slots": e.remainder.slots.iter().map(|(v, f)| json!([DPoly::from_var(*v).to_string(), f.to_string()])).collect::<Vec<_>>(),
            })
        }
        DpolyCmd::CoordChange => {
            let c = witt_to_delta(&cfg, n)?;
            json!({
                "level": c.level,
                "forward": c.forward.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "inverse": c.inverse.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "round_trip": c.round_trip_ok()?,
                "witnesses_centered": c.witnesses_ok()?,
            })
        }
    })
}

fn jet(op: JetCmd, w: &WeierstrassArgs, point: &str, m: usize, n: usize) -> Result<Value> {
    let cfg = PrimeCfg::new(w.p)?;
    let pt: Vec<i64> = serde_json::from_str(point).map_err(|e| Error::Parse(e.to_string()))?;
    if pt.len() != 2 {
        return Err(Error::Parse("the point needs two coordinates".into()));
    }
    let pres = AffinePresentation::weierstrass(w.a, w.b, (pt[0], pt[1]))?;
    Ok(match op {
        JetCmd::Build => build_jet(&cfg, &pres, n)?.to_json(),
        JetCmd::Kernel => build_kernel(&cfg, &pres, m, n)?.to_json(),
        JetCmd::IsoCheck => kernel_jet_iso_check(&cfg, &pres, 0, m, n, DEFAULT_TERM_BUDGET)?.to_json(),
    })
}

fn ec(op: EcCmd, c: &Curve, point: Option<&str>, tail: Option<&str>, i: usize, points: usize, seed: u64) -> Result<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match op {
        EcCmd::Ap => json!(c.count_ap()?),
        EcCmd::Theta => {
            let pt = match point {
                Some(s) => CurvePoint::from_json(&parse_json(s)?, c.p(), c.precision())?,
                None => c.random_point(&mut rng)?,
            };
            if !c.contains(&pt)? {
                return Err(Error::InvalidPoint("the point is not on the curve".into()));
            }
            json!({"point": pt.to_json(), "theta": qp_to_json(&c.theta_eval(&pt)?)})
        }
        EcCmd::Psi => {
            let tail = match tail {
                Some(s) => padics(s, c.p(), c.precision())?,
                None => {
                    let modulus = pow_p(c.p(), c.precision());
                    (0..i).map(|_| PadicInt::new(c.p(), BigInt::from(rng.gen::<u64>()) % &modulus, c.precision())).collect()
                }
            };
            json!({"i": i, "tail": vec_to_json(&tail), "psi": qp_to_json(&c.psi_eval(i, &tail)?)})
        }
        EcCmd::DiffCheck => c.verify_diff_relation(&mut rng, points)?.to_json(),
    })
}

fn crystal(op: CrystalCmd, c: &Curve) -> Result<Value> {
    let iso = Isocrystal::build(c, c.is_canonical_lift())?;
    Ok(match op {
        CrystalCmd::Build => iso.to_json()?,
        CrystalCmd::Slopes => json!(iso.newton_slopes().iter().map(ToString::to_string).collect::<Vec<_>>()),
        CrystalCmd::Admissible => {
            let a = iso.admissibility()?;
            json!({"t_N": a.t_n.to_string(), "t_H": a.t_h, "admissible": a.admissible, "stable_lines": a.sub_objects.len()})
        }
        CrystalCmd::Compare => iso.verdict()?.to_json(),
    })
}

fn run(cli: &Cli) -> Result<(Value, Option<String>)> {
    let n = cli.precision;
    let v = match &cli.cmd {
        Command::Witt { op, p, x, y, n } => witt(*op, *p, x, y.as_deref(), *n)?,
        Command::Switt { op, p, m, coords } => switt(*op, *p, *m, coords)?,
        Command::Dpoly { op, p, poly, m, n } => dpoly(*op, *p, poly.as_deref(), *m, *n)?,
        Command::Jet { op, curve, point, m, n } => jet(*op, curve, point, *m, *n)?,
        Command::Ec { op, curve, point, tail, i, points } => ec(*op, &curve.curve(n)?, point.as_deref(), tail.as_deref(), *i, *points, cli.seed)?,
        Command::Crystal { op, curve } => crystal(*op, &curve.curve(n)?)?,
        Command::Corpus { path, report, timings } => {
            let text = match path {
                Some(p) => fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
                None => CORPUS_JSON.to_string(),
            };
            let r = run_corpus_str(&text, RunOptions { seed: cli.seed, precision: n, timings: *timings })?;
            let v = serde_json::to_value(&r).expect("reports serialize");
            if let Some(out) = report {
                let body = serde_json::to_string_pretty(&v).expect("reports serialize");
                fs::write(out, body + "\n").map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
            }
            let failed = !r.all_passed();
            let text = r.human_summary();
            if failed {
                return Err(Error::Contradiction(format!("corpus failures\n{text}")));
            }
            return Ok((v, Some(text)));
        }
    };
    Ok((v, None))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((v, text)) => {
            let out = match (cli.json, text) {
                (false, Some(t)) => t,
                (false, None) if !v.is_object() => format!("{v}\n"),
                _ => serde_json::to_string_pretty(&v).expect("values serialize") + "\n",
            };
            // a closed pipe downstream is not an error
            let _ = std::io::stdout().lock().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            if cli.json {
                println!("{}", json!({"error": e.to_string()}));
            }
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
