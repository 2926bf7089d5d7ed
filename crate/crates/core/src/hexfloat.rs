//! Exact `f64` text encoding as C99 hex floats (`0x1.8p+1`).
//!
//! JSON documents written by this crate store reals as hex-float strings;
//! readers accept either such strings or plain JSON numbers.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

/// Formats `v` exactly. Non-finite values use `inf`, `-inf`, `nan`.
pub fn format(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    if exp_bits == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exp_bits == 0 { (0, -1022) } else { (1, exp_bits - 1023) };
    let mut frac = format!("{mantissa:013x}");
    while frac.ends_with('0') {
        frac.pop();
    }
    if frac.is_empty() {
        format!("{sign}0x{lead}p{exp:+}")
    } else {
        format!("{sign}0x{lead}.{frac}p{exp:+}")
    }
}

/// Parses a hex float, a decimal literal, or `inf`/`-inf`/`nan`.
pub fn parse(s: &str) -> Option<f64> {
    let t = s.trim();
    match t {
        "nan" => return Some(f64::NAN),
        "inf" | "+inf" => return Some(f64::INFINITY),
        "-inf" => return Some(f64::NEG_INFINITY),
        _ => {}
    }
    let lower = t.to_ascii_lowercase();
    let body = lower.trim_start_matches(['-', '+']);
    if body.starts_with("0x") {
        // the parser wants an explicit exponent
        let with_exp = if lower.contains('p') {
            lower.clone()
        } else {
            format!("{lower}p0")
        };
        hexf_parse::parse_hexf64(&with_exp, false).ok()
    } else {
        t.parse().ok()
    }
}

/// An `f64` that serialises as an exact hex-float string.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct HexF64(pub f64);

impl Serialize for HexF64 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(self.0))
    }
}

struct HexVisitor;

impl Visitor<'_> for HexVisitor {
    type Value = HexF64;

    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("a number or a hex-float string")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<HexF64, E> {
        Ok(HexF64(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<HexF64, E> {
        Ok(HexF64(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<HexF64, E> {
        Ok(HexF64(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<HexF64, E> {
        parse(v)
            .map(HexF64)
            .ok_or_else(|| E::custom(format!("invalid real `{v}`")))
    }
}

impl<'de> Deserialize<'de> for HexF64 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(HexVisitor)
    }
}

pub fn wrap(v: &[f64]) -> Vec<HexF64> {
    v.iter().copied().map(HexF64).collect()
}

pub fn unwrap(v: &[HexF64]) -> Vec<f64> {
    v.iter().map(|h| h.0).collect()
}
