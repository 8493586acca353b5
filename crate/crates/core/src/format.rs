//! Fixed-precision number formatting shared by the CSV and JSON writers.

use serde::{Serialize, Serializer};

use crate::tensor::ComplexMatrix;

/// Significant digits in all emitted numbers.
pub const SIG_DIGITS: usize = 12;

/// Formats `x` with 12 significant digits, `%g` style.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mant.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".to_string()
        } else {
            t.to_string()
        }
    } else {
        s
    }
}

/// Rounds `x` to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x)
        .parse()
        .expect("round trip")
}

/// Serializes a list of matrices as nested `[[[re, im]]]` row lists.
pub(crate) fn serialize_matrices<S: Serializer>(
    ms: &Option<Vec<ComplexMatrix>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let rows: Option<Vec<Vec<Vec<[f64; 2]>>>> = ms.as_ref().map(|ms| {
        ms.iter()
            .map(|m| {
                m.to_rows()
                    .into_iter()
                    .map(|r| r.into_iter().map(|z| [z.re, z.im]).collect())
                    .collect()
            })
            .collect()
    });
    rows.serialize(s)
}
