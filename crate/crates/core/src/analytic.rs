//! Exact frequency response of the linear observer and Hurwitz checks.
//!
//! For channel `j` the linear observer has
//!
//! ```text
//! X_j(s) / A(s) = k3 s^(j-1) / (eps^4 s^3 + k3 s^2 + k2 eps^2 s + k1 eps)
//! ```
//!
//! which tends to the ideal `s^(j-3)` as `eps -> 0`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observer::{Mode, ObserverParams};

/// Search bracket for [`cutoff_frequency`], rad/s.
pub const CUTOFF_BRACKET: (f64, f64) = (1e-3, 1e5);

const SCAN_POINTS_PER_DECADE: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferEval {
    pub channel: usize,
    pub omega: f64,
    pub gain: f64,
    pub gain_db: f64,
    /// `atan2(im, re)`, in `(-pi, pi]`.
    pub phase: f64,
}

impl TransferEval {
    fn from_complex(channel: usize, omega: f64, h: Complex64) -> Self {
        let gain = h.norm();
        Self { channel, omega, gain, gain_db: 20.0 * gain.log10(), phase: h.im.atan2(h.re) }
    }
}

fn check_channel(j: usize) {
    assert!((1..=3).contains(&j), "channel {j} out of range 1..=3");
}

/// `H_j(i omega)` as a complex number.
pub fn transfer_complex(p: &ObserverParams, j: usize, omega: f64) -> Result<Complex64> {
    check_channel(j);
    if p.mode() != Mode::Linear {
        return Err(Error::Config("closed-form transfer function needs a linear observer".into()));
    }
    let (k1, k2, k3) = p.k();
    let eps = p.epsilon();
    let eps2 = eps * eps;
    let s = Complex64::new(0.0, omega);
    // Horner on eps^4 s^3 + k3 s^2 + k2 eps^2 s + k1 eps
    let den = ((s * (eps2 * eps2) + k3) * s + k2 * eps2) * s + k1 * eps;
    if den.norm() < 1e-300 {
        return Err(Error::SingularDenominator { omega });
    }
    let num = s.powu(j as u32 - 1) * k3;
    Ok(num / den)
}

pub fn transfer_eval(p: &ObserverParams, j: usize, omega: f64) -> Result<TransferEval> {
    Ok(TransferEval::from_complex(j, omega, transfer_complex(p, j, omega)?))
}

/// Ideal response `(i omega)^(j-3)`: `1/s^2`, `1/s` or unity.
pub fn limit_transfer(j: usize, omega: f64) -> Result<Complex64> {
    check_channel(j);
    let order = 3 - j as i32;
    if order == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if omega == 0.0 {
        return Err(Error::SingularAtDc { order: order as u32 });
    }
    Ok(Complex64::from_polar(omega.powi(-order), -FRAC_PI_2 * order as f64))
}

/// Routh-Hurwitz test for the monic cubic `s^3 + c2 s^2 + c1 s + c0`.
pub fn is_hurwitz_cubic(c2: f64, c1: f64, c0: f64) -> bool {
    c2 > 0.0 && c1 > 0.0 && c0 > 0.0 && c2 * c1 > c0
}

/// Gain of channel `j` relative to its ideal integrator, in dB.
///
/// `H_j / s^(j-3) = H_3` for every channel, so all three channels share it.
pub fn relative_gain_db(p: &ObserverParams, omega: f64) -> Result<f64> {
    Ok(transfer_eval(p, 3, omega)?.gain_db)
}

/// Highest frequency at which channel `j` is still within `drop_db` of the
/// ideal integrator response, i.e. where the high-frequency roll-off of
/// `20 log10 |H_j / (i w)^(j-3)|` crosses `-drop_db`.
///
/// The reference is the ideal response rather than the peak of `|H_j|`:
/// `H_3` has a resonance near `sqrt(k1 eps / k3)` whose height grows as eps
/// shrinks, and a peak-referenced crossing would sit on its shoulder instead
/// of the roll-off.
pub fn cutoff_frequency(p: &ObserverParams, j: usize, drop_db: f64) -> Result<f64> {
    check_channel(j);
    if !(drop_db > 0.0) {
        return Err(Error::Domain { what: "drop_db > 0", value: drop_db });
    }
    let (lo, hi) = CUTOFF_BRACKET;
    let not_found = Error::CutoffNotFound { drop_db, lo, hi };
    let level = -drop_db;
    let above = |w: f64| -> Result<bool> { Ok(relative_gain_db(p, w)? >= level) };

    if above(hi)? {
        return Err(not_found);
    }
    let decades = (hi / lo).log10();
    let n = (decades * SCAN_POINTS_PER_DECADE as f64).ceil() as usize;
    let at = |i: usize| lo * 10f64.powf(decades * i as f64 / n as f64);

    // scan down from the top of the bracket for the first point back in band
    let mut upper = hi;
    for i in (0..n).rev() {
        let w = at(i);
        if above(w)? {
            let (mut a, mut b) = (w.ln(), upper.ln());
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if above(mid.exp())? {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a < 1e-14 {
                    break;
                }
            }
            return Ok(a.exp());
        }
        upper = w;
    }
    Err(not_found)
}
