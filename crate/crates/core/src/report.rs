//! JSON helpers shared by the report types.
//!
//! Extended reals (`±inf`, `nan`) have no JSON number form; they are written
//! as the strings `"inf"`, `"-inf"` and `"nan"`.

use std::collections::BTreeMap;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::Serializer;
use serde_json::Value;

pub fn ext_real<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(ext_str(*x))
    }
}

pub fn ext_real_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&ExtReal(*x))?;
    }
    seq.end()
}

pub fn ext_real_map<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k, &ExtReal(*v))?;
    }
    map.end()
}

/// Newtype that serializes through [`ext_real`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtReal(pub f64);

impl serde::Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ext_real(&self.0, s)
    }
}

/// CSV/JSON token for a non-finite value.
pub fn ext_str(x: f64) -> &'static str {
    if x.is_nan() {
        "nan"
    } else if x > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

/// Formats a float for text output, using the tokens above for non-finite values.
pub fn fmt_ext(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        ext_str(x).to_string()
    }
}

/// JSON value for an extended real.
pub fn ext_value(x: f64) -> Value {
    serde_json::to_value(ExtReal(x)).unwrap_or(Value::Null)
}
