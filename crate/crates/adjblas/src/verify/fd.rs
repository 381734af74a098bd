//! Central finite differences over flattened parameter vectors.
//!
//! The oracle knows nothing about matrices: callers pack whatever inputs a
//! map takes into one flat `&[f64]` and unpack inside the callback. That
//! keeps a single implementation honest for every rule it cross-checks.

use crate::error::{Error, Result};

/// Central difference `(f(p + h·d) − f(p − h·d)) / (2h)`.
///
/// `f` maps a flat parameter vector to a flat output vector; the result has
/// the shape of `f`'s output. Fails if either evaluation fails or returns a
/// non-finite entry, naming the offending side.
pub fn fd_directional<F>(f: F, point: &[f64], direction: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument {
            what: format!("finite-difference step must be positive and finite, got {h}"),
        });
    }
    if point.len() != direction.len() {
        return Err(Error::dim(
            "fd direction",
            format!("point has {} entries, direction has {}", point.len(), direction.len()),
        ));
    }

    let shifted = |sign: f64| -> Vec<f64> {
        point.iter().zip(direction).map(|(p, d)| p + sign * h * d).collect()
    };
    let plus = f(&shifted(1.0))?;
    if plus.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "fd evaluation at point + h*d".to_string() });
    }
    let minus = f(&shifted(-1.0))?;
    if minus.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "fd evaluation at point - h*d".to_string() });
    }
    if plus.len() != minus.len() {
        return Err(Error::dim(
            "fd output",
            format!("{} entries at +h vs {} at -h", plus.len(), minus.len()),
        ));
    }
    Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect())
}
