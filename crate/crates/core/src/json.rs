//! JSON encodings of ring elements.
//!
//! Integers are emitted as JSON numbers when they fit in 64 bits and as
//! decimal strings otherwise; p-adic integers use their object form and
//! polynomials their canonical text form.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde_json::Value;

use crate::dpoly::DPoly;
use crate::error::{Error, Result};
use crate::ringcore::PadicInt;

pub trait JsonElem: Sized {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

pub fn int_to_json(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) => Value::from(v),
        None => Value::String(x.to_string()),
    }
}

pub fn int_from_json(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .or_else(|| n.as_u64().map(BigInt::from))
            .ok_or_else(|| Error::Parse(format!("not an integer: {n}"))),
        Value::String(s) => s.trim().parse().map_err(|_| Error::Parse(format!("not an integer: {s:?}"))),
        other => Err(Error::Parse(format!("expected an integer, found {other}"))),
    }
}

impl JsonElem for BigInt {
    fn to_json(&self) -> Value {
        int_to_json(self)
    }
    fn from_json(v: &Value) -> Result<Self> {
        int_from_json(v)
    }
}

impl JsonElem for PadicInt {
    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("p-adic integers serialize")
    }
    fn from_json(v: &Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl JsonElem for DPoly {
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => DPoly::parse(s),
            other => Ok(DPoly::constant(int_from_json(other)?)),
        }
    }
}

pub fn vec_to_json<T: JsonElem>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(JsonElem::to_json).collect())
}

pub fn vec_from_json<T: JsonElem>(v: &Value) -> Result<Vec<T>> {
    v.as_array()
        .ok_or_else(|| Error::Parse(format!("expected an array, found {v}")))?
        .iter()
        .map(T::from_json)
        .collect()
}
