//! Coordinate changes between the quantile level in `(0, 1)` and the flat
//! coordinate in which the reversed flow has no drift.

use crate::error::{Error, Result};

/// `sign` with `sign(0) = 0`.
#[inline]
pub fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Lamperti transform `sign(1−2x)·ln(1−|1−2x|)` for `σ(x) = x ∧ (1−x)`.
pub fn psi(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfDomain {
            x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let u = 1.0 - 2.0 * x;
    Ok(sign0(u) * (1.0 - u.abs()).ln())
}

pub fn psi_inv(u: f64) -> f64 {
    // psi(x) = ln(2x) below ½ and −ln(2−2x) above.
    if u <= 0.0 {
        0.5 * u.exp()
    } else {
        1.0 - 0.5 * (-u).exp()
    }
}

/// Scale function `sign(x)(e^{|x|} − 1)`.
pub fn s(x: f64) -> f64 {
    sign0(x) * x.abs().exp_m1()
}

pub fn s_inv(y: f64) -> f64 {
    sign0(y) * y.abs().ln_1p()
}

/// `s∘ψ` in closed form.
pub fn s_psi(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfDomain {
            x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(if x <= 0.5 {
        1.0 - 0.5 / x
    } else {
        (2.0 * x - 1.0) / (2.0 - 2.0 * x)
    })
}

/// `(s∘ψ)^{-1}`; both branches give ½ at the seam.
#[inline]
pub fn s_psi_inv(y: f64) -> f64 {
    if y <= 0.0 {
        0.5 / (1.0 - y)
    } else {
        1.0 - 0.5 / (1.0 + y)
    }
}
