//! The filtered isocrystal of an elliptic curve over `Z_p` in the basis
//! `{Ψ₁, Ψ₂}`: Frobenius matrix, Hodge and Newton numbers, weak
//! admissibility and the comparison with crystalline cohomology.
//!
//! Without a canonical lift the matrix is `[[0, −p], [1, a_p]]` and the
//! filtration is `H ⊃ ⟨i*Θ₂⟩ ⊃ 0` with `i*Θ₂ = Ψ₂ − a_p·Ψ₁`. With a canonical
//! lift the object is the line `⟨Ψ₁⟩` with `f*Ψ₁ = γΨ₁`, `γ = −β`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::elliptic::Curve;
use crate::error::{Error, Result};
use crate::json::int_to_json;
use crate::ringcore::{hensel_root, pow_p, PadicInt};

/// `(H_K, f*, H_K^•)` of dimension 1 or 2.
#[derive(Clone, Debug, PartialEq)]
pub struct Isocrystal {
    pub p: u64,
    pub dim: usize,
    /// Column `j` holds the coordinates of `f*(e_j)`.
    pub matrix: Vec<Vec<PadicInt>>,
    /// Hodge jumps, sorted.
    pub jumps: Vec<i64>,
    /// The line carrying the top jump when `dim = 2`.
    pub hodge_line: Option<Vec<PadicInt>>,
    /// `det(T − M)`, lowest degree first, monic.
    pub char_poly: Vec<PadicInt>,
    pub canonical_lift: bool,
    pub a_p: i64,
}

/// A Frobenius-stable line with its Newton and Hodge numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct SubObject {
    pub eigenvalue: PadicInt,
    pub vector: Vec<PadicInt>,
    pub t_n: BigRational,
    pub t_h: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Admissibility {
    pub t_n: BigRational,
    pub t_h: i64,
    pub sub_objects: Vec<SubObject>,
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// `Iso(H_δ) ≅ Iso(H_cr)`: both have characteristic polynomial
    /// `T² − a_p·T + p`, whose roots are distinct.
    IsoToCrystalline { char_poly: Vec<BigInt>, discriminant: BigInt, distinct_roots: bool, split: bool },
    /// `Iso(H_δ)` is the slope-1 sub-isocrystal of `Iso(H_cr)`.
    IsoToOmegaSubobject { beta: PadicInt, slope: BigRational },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::IsoToCrystalline { .. } => "IsoToCrystalline",
            Verdict::IsoToOmegaSubobject { .. } => "IsoToOmegaSubobject",
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Verdict::IsoToCrystalline { char_poly, discriminant, distinct_roots, split } => json!({
                "kind": self.name(),
                "char_poly": char_poly.iter().map(int_to_json).collect::<Vec<_>>(),
                "discriminant": int_to_json(discriminant),
                "distinct_roots": distinct_roots,
                "split": split,
                "note": "the filtration H ⊃ ⟨i*Θ₂⟩ ⊃ 0 matches H_dR ⊃ H⁰(Ω) ⊃ 0; Θ₂ maps to a multiple γ/p of ω",
            }),
            Verdict::IsoToOmegaSubobject { beta, slope } => json!({
                "kind": self.name(),
                "beta": int_to_json(&beta.symmetric()),
                "slope": slope.to_string(),
                "note": "the image is the slope-1 line of the crystalline isocrystal",
            }),
        }
    }
}

fn padic(p: u64, n: i64, prec: u32) -> PadicInt {
    PadicInt::from_i64(p, n, prec)
}

impl Isocrystal {
    /// Builds the isocrystal from the point count and the declared
    /// canonical-lift status.
    pub fn build(curve: &Curve, canonical_lift: bool) -> Result<Self> {
        let p = curve.p();
        let n = curve.precision();
        let ap = curve.count_ap()?;
        let supersingular = ap % p as i64 == 0;
        if canonical_lift {
            if supersingular {
                return Err(Error::Contradiction("a canonical lift needs ordinary reduction".into()));
            }
            let beta = curve.clone().with_canonical_lift(true).beta()?;
            let gamma = beta.try_mul(&padic(p, -1, n))?;
            let char_poly = vec![gamma.try_mul(&padic(p, -1, n))?, padic(p, 1, n)];
            return Ok(Isocrystal { p, dim: 1, matrix: vec![vec![gamma]], jumps: vec![1], hodge_line: None, char_poly, canonical_lift, a_p: ap });
        }
        let matrix = vec![vec![padic(p, 0, n), padic(p, -(p as i64), n)], vec![padic(p, 1, n), padic(p, ap, n)]];
        let hodge_line = Some(vec![padic(p, -ap, n), padic(p, 1, n)]);
        Self::from_matrix(p, matrix, vec![0, 1], hodge_line, ap)
    }

    /// A two-dimensional object from explicit data.
    pub fn from_matrix(p: u64, matrix: Vec<Vec<PadicInt>>, mut jumps: Vec<i64>, hodge_line: Option<Vec<PadicInt>>, ap: i64) -> Result<Self> {
        if matrix.len() != 2 || matrix.iter().any(|r| r.len() != 2) {
            return Err(Error::LengthMismatch("expected a 2×2 matrix".into()));
        }
        if jumps.len() != 2 {
            return Err(Error::LengthMismatch("a 2-dimensional object has two Hodge jumps".into()));
        }
        jumps.sort_unstable();
        let tr = matrix[0][0].try_add(&matrix[1][1])?;
        let det = matrix[0][0].try_mul(&matrix[1][1])?.try_sub(&matrix[0][1].try_mul(&matrix[1][0])?)?;
        let one = PadicInt::new(p, BigInt::one(), det.precision());
        let char_poly = vec![det, tr.try_mul(&padic(p, -1, tr.precision()))?, one];
        Ok(Isocrystal { p, dim: 2, matrix, jumps, hodge_line, char_poly, canonical_lift: false, a_p: ap })
    }

    /// Slopes of the Newton polygon of the characteristic polynomial, i.e.
    /// the valuations of its roots, in increasing order.
    pub fn newton_slopes(&self) -> Vec<BigRational> {
        let pts: Vec<(i64, i64)> = self
            .char_poly
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.residue().is_zero())
            .map(|(i, c)| (i as i64, c.valuation() as i64))
            .collect();
        // lower convex hull, walking from the top degree down
        let mut slopes = Vec::new();
        let mut cur = pts.len() - 1;
        while cur > 0 {
            let (xc, yc) = pts[cur];
            let mut best = cur - 1;
            for k in 0..cur {
                let (xk, yk) = pts[k];
                let (xb, yb) = pts[best];
                // choose the point minimizing (y_k − y_c)/(x_c − x_k); ties go to the farthest
                let lhs = BigInt::from(yk - yc) * BigInt::from(xc - xb);
                let rhs = BigInt::from(yb - yc) * BigInt::from(xc - xk);
                if lhs < rhs || (lhs == rhs && xk < xb) {
                    best = k;
                }
            }
            let (xb, yb) = pts[best];
            let s = BigRational::new(BigInt::from(yb - yc), BigInt::from(xc - xb));
            for _ in 0..(xc - xb) {
                slopes.push(s.clone());
            }
            cur = best;
        }
        slopes.sort();
        slopes
    }

    /// `t_N = Σ` slopes `= v_p(det f*)`.
    pub fn t_n(&self) -> BigRational {
        self.newton_slopes().iter().fold(BigRational::zero(), |a, s| a + s)
    }

    /// `t_H = Σ` jumps.
    pub fn t_h(&self) -> i64 {
        self.jumps.iter().sum()
    }

    /// Frobenius-stable lines, found from roots of the characteristic
    /// polynomial that lift from simple roots modulo `p`.
    pub fn stable_lines(&self) -> Result<Vec<SubObject>> {
        if self.dim != 2 {
            return Ok(Vec::new());
        }
        let p = self.p;
        let prec = self.char_poly.iter().map(PadicInt::precision).min().unwrap_or(1);
        let coeffs: Vec<BigInt> = self.char_poly.iter().map(|c| c.residue().clone()).collect();
        let mut out = Vec::new();
        for r in 0..p {
            let Ok(mu) = hensel_root(&coeffs, &BigInt::from(r), p, prec) else { continue };
            // (M − μ)v = 0 from the first row: −μ·v₁ + m₀₁·v₂ … choose v
            // in the kernel of whichever row is nonzero modulo p
            let m = &self.matrix;
            let a = m[0][0].try_sub(&mu)?;
            let b = m[0][1].clone();
            let c = m[1][0].clone();
            let d = m[1][1].try_sub(&mu)?;
            let vector = if !b.residue().is_zero() || !a.residue().is_zero() {
                vec![b.try_mul(&padic(p, -1, prec))?, a]
            } else {
                vec![d.try_mul(&padic(p, -1, prec))?, c]
            };
            let t_h = self.hodge_number_of_line(&vector);
            out.push(SubObject { t_n: BigRational::from_integer(BigInt::from(mu.valuation())), eigenvalue: mu, vector, t_h });
        }
        Ok(out)
    }

    /// The top jump if the line is the Hodge line, otherwise the bottom jump.
    fn hodge_number_of_line(&self, v: &[PadicInt]) -> i64 {
        match &self.hodge_line {
            Some(h) => {
                let det = v[0].try_mul(&h[1]).and_then(|x| x.try_sub(&v[1].try_mul(&h[0])?));
                if det.map(|d| d.residue().is_zero()).unwrap_or(false) {
                    self.jumps[1]
                } else {
                    self.jumps[0]
                }
            }
            None => self.jumps[0],
        }
    }

    pub fn admissibility(&self) -> Result<Admissibility> {
        let t_n = self.t_n();
        let t_h = self.t_h();
        let sub_objects = self.stable_lines()?;
        let subs_ok = sub_objects.iter().all(|s| s.t_n >= BigRational::from_integer(BigInt::from(s.t_h)));
        Ok(Admissibility { admissible: t_n == BigRational::from_integer(BigInt::from(t_h)) && subs_ok, t_n, t_h, sub_objects })
    }

    /// The comparison with `Iso(H_cr)`.
    pub fn verdict(&self) -> Result<Verdict> {
        if self.canonical_lift {
            let beta = self.char_poly[0].clone();
            let slope = BigRational::from_integer(BigInt::from(beta.valuation()));
            return Ok(Verdict::IsoToOmegaSubobject { beta, slope });
        }
        let char_poly: Vec<BigInt> = self.char_poly.iter().map(PadicInt::symmetric).collect();
        let discriminant = &char_poly[1] * &char_poly[1] - BigInt::from(4) * &char_poly[0];
        let split = self.stable_lines()?.len() == 2;
        Ok(Verdict::IsoToCrystalline { distinct_roots: !discriminant.is_zero(), discriminant, char_poly, split })
    }

    pub fn to_json(&self) -> Result<Value> {
        let adm = self.admissibility()?;
        Ok(json!({
            "dim": self.dim,
            "matrix": self.matrix.iter().map(|r| r.iter().map(|c| int_to_json(&c.symmetric())).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "jumps": self.jumps,
            "char_poly": self.char_poly.iter().map(|c| int_to_json(&c.symmetric())).collect::<Vec<_>>(),
            "slopes": self.newton_slopes().iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            "t_N": adm.t_n.to_string(),
            "t_H": adm.t_h,
            "admissible": adm.admissible,
            "verdict": self.verdict()?.to_json(),
            "basis": if self.dim == 2 { json!(["Psi_1", "Psi_2"]) } else { json!(["Psi_1"]) },
        }))
    }
}

/// `β·u = p` for the two roots of `T² − a_p·T + p`; `u = a_p − β`.
pub fn unit_root(curve: &Curve) -> Result<PadicInt> {
    let beta = curve.beta()?;
    let ap = curve.count_ap()?;
    PadicInt::from_i64(curve.p(), ap, beta.precision()).try_sub(&beta)
}

/// `p^k` as a `p`-adic integer at precision `n`.
pub fn p_power(p: u64, k: u32, n: u32) -> PadicInt {
    PadicInt::new(p, pow_p(p, k), n)
}
