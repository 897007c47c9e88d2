//! Truncated power series over `Q` in one and two variables.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// `c_0 + c_1 t + … + c_K t^K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub coeffs: Vec<BigRational>,
}

impl Series {
    pub fn zero(order: usize) -> Self {
        Series { coeffs: vec![BigRational::zero(); order + 1] }
    }

    pub fn from_ints(coeffs: &[BigInt], order: usize) -> Self {
        let mut s = Self::zero(order);
        for (i, c) in coeffs.iter().enumerate().take(order + 1) {
            s.coeffs[i] = BigRational::from_integer(c.clone());
        }
        s
    }

    /// The series `t`.
    pub fn t(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = BigRational::one();
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, i: usize) -> &BigRational {
        &self.coeffs[i]
    }

    pub fn add(&self, other: &Series) -> Series {
        Series { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Series) -> Series {
        Series { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, c: &BigRational) -> Series {
        Series { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn mul(&self, other: &Series) -> Series {
        let k = self.order().min(other.order());
        let mut out = Self::zero(k);
        for (i, a) in self.coeffs.iter().enumerate().take(k + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(k + 1 - i) {
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }

    /// `1/f`, requiring an invertible constant term.
    pub fn inverse(&self) -> Result<Series> {
        let c0 = &self.coeffs[0];
        if c0.is_zero() {
            return Err(Error::Invariant("series with zero constant term is not invertible".into()));
        }
        let k = self.order();
        let mut out = Self::zero(k);
        out.coeffs[0] = c0.recip();
        for n in 1..=k {
            let s: BigRational = (1..=n).map(|i| &self.coeffs[i] * &out.coeffs[n - i]).sum();
            out.coeffs[n] = -s / c0;
        }
        Ok(out)
    }

    pub fn derivative(&self) -> Series {
        let k = self.order();
        let mut out = Self::zero(k);
        for i in 1..=k {
            out.coeffs[i - 1] = &self.coeffs[i] * BigInt::from(i);
        }
        out
    }

    /// The antiderivative vanishing at 0.
    pub fn integral(&self) -> Series {
        let k = self.order();
        let mut out = Self::zero(k);
        for i in 1..=k {
            out.coeffs[i] = &self.coeffs[i - 1] / BigInt::from(i);
        }
        out
    }

    /// `self ∘ g` for `g(0) = 0`, by Horner's rule.
    pub fn compose(&self, g: &Series) -> Result<Series> {
        if !g.coeffs[0].is_zero() {
            return Err(Error::Invariant("inner series must have zero constant term".into()));
        }
        let k = self.order().min(g.order());
        let mut out = Self::zero(k);
        for c in self.coeffs.iter().take(k + 1).rev() {
            out = out.mul(g);
            out.coeffs[0] += c;
        }
        Ok(out)
    }

    /// Compositional inverse of `f = t + …`.
    pub fn reversion(&self) -> Result<Series> {
        if !self.coeffs[0].is_zero() || !self.coeffs.get(1).is_some_and(One::is_one) {
            return Err(Error::Invariant("reversion needs f = t + O(t^2)".into()));
        }
        // g = t − (f − t)(g), iterated; each pass fixes one more coefficient.
        let k = self.order();
        let t = Self::t(k);
        let tail = self.sub(&t);
        let mut g = t.clone();
        for _ in 1..k {
            g = t.sub(&tail.compose(&g)?);
        }
        Ok(g)
    }
}

/// `Σ c_{ij} s^i t^j` truncated at total degree `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series2 {
    order: usize,
    coeffs: Vec<Vec<BigRational>>,
}

impl Series2 {
    pub fn zero(order: usize) -> Self {
        Series2 { order, coeffs: (0..=order).map(|i| vec![BigRational::zero(); order + 1 - i]).collect() }
    }

    /// `f(s)` or `f(t)` as a series in two variables.
    pub fn from_series(f: &Series, in_second: bool) -> Self {
        let mut out = Self::zero(f.order());
        for (i, c) in f.coeffs.iter().enumerate() {
            if in_second {
                out.coeffs[0][i] = c.clone();
            } else {
                out.coeffs[i][0] = c.clone();
            }
        }
        out
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of `s^i t^j`.
    pub fn coeff(&self, i: usize, j: usize) -> BigRational {
        self.coeffs.get(i).and_then(|row| row.get(j)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &Series2) -> Series2 {
        let mut out = self.clone();
        for (i, row) in other.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                out.coeffs[i][j] += c;
            }
        }
        out
    }

    pub fn mul(&self, other: &Series2) -> Series2 {
        let k = self.order;
        let mut out = Self::zero(k);
        for (i1, r1) in self.coeffs.iter().enumerate() {
            for (j1, a) in r1.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for i2 in 0..=k - i1 - j1 {
                    for j2 in 0..=k - i1 - j1 - i2 {
                        let b = &other.coeffs[i2][j2];
                        if !b.is_zero() {
                            out.coeffs[i1 + i2][j1 + j2] += a * b;
                        }
                    }
                }
            }
        }
        out
    }

    /// `f(self)` for a univariate `f`; `self` must have zero constant term.
    pub fn compose_into(&self, f: &Series) -> Result<Series2> {
        if !self.coeffs[0][0].is_zero() {
            return Err(Error::Invariant("inner series must have zero constant term".into()));
        }
        let mut out = Self::zero(self.order);
        for c in f.coeffs.iter().take(self.order + 1).rev() {
            out = out.mul(self);
            out.coeffs[0][0] += c;
        }
        Ok(out)
    }

    /// The series with the two variables exchanged.
    pub fn swapped(&self) -> Series2 {
        let mut out = Self::zero(self.order);
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                out.coeffs[j][i] = c.clone();
            }
        }
        out
    }

    /// Every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().flatten().all(|c| c.is_integer())
    }
}
