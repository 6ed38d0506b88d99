//! Observer parameters, validity checks and right-hand-side dynamics.
//!
//! Both observers share the chain `x1' = x2`, `x2' = x3`. The fast state is
//! driven by
//!
//! ```text
//! eps^4 x3' = -k1 sig(eps x1)^a1 - k2 sig(eps^2 x2)^a2 - k3 sig(x3 - a)^a3   (nonlinear)
//! eps^4 x3' = -k1 eps x1 - k2 eps^2 x2 - k3 (x3 - a)                          (linear)
//! ```
//!
//! where `sig(x)^a = |x|^a sign(x)` and the exponents are tied together by
//! `a2 = a3 / (2 - a3)`, `a1 = a3 / (3 - 2 a3)`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest perturbation parameter accepted by default; keeps `1/eps^4 <= 1e12`.
pub const DEFAULT_EPSILON_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Nonlinear,
    Linear,
}

/// `|x|^alpha * sign(x)`, with `sign(0) = 0`.
#[inline]
pub fn power_sign(x: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        x
    } else {
        x.abs().powf(alpha).copysign(x)
    }
}

/// Exponents `(alpha1, alpha2)` implied by `alpha3`.
pub fn derive_alphas(alpha3: f64) -> Result<(f64, f64)> {
    if !(alpha3 > 0.0 && alpha3 <= 1.0) {
        return Err(Error::Domain { what: "alpha3 (0, 1]", value: alpha3 });
    }
    let alpha2 = alpha3 / (2.0 - alpha3);
    let alpha1 = alpha3 / (3.0 - 2.0 * alpha3);
    Ok((alpha1, alpha2))
}

/// Unchecked observer parameters, as they come from a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSet {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub epsilon: f64,
    pub alpha3: f64,
    pub mode: Mode,
}

impl ParamSet {
    pub fn new(k: (f64, f64, f64), epsilon: f64, alpha3: f64, mode: Mode) -> Self {
        Self { k1: k.0, k2: k.1, k3: k.2, epsilon, alpha3, mode }
    }

    pub fn linear(k: (f64, f64, f64), epsilon: f64) -> Self {
        Self::new(k, epsilon, 1.0, Mode::Linear)
    }

    pub fn nonlinear(k: (f64, f64, f64), epsilon: f64, alpha3: f64) -> Self {
        Self::new(k, epsilon, alpha3, Mode::Nonlinear)
    }

    /// Right-hand side of the gain inequality `k2 > eps^p k1 / k3`, where
    /// `p = 3 alpha3` for the nonlinear observer and `p = 3` for the linear one.
    pub fn gain_threshold(&self) -> f64 {
        let exponent = match self.mode {
            Mode::Nonlinear => 3.0 * self.alpha3,
            Mode::Linear => 3.0,
        };
        self.epsilon.powf(exponent) * self.k1 / self.k3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Positivity,
    EpsilonRange,
    AlphaRange,
    GainInequality,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::Positivity => "positivity",
            Constraint::EpsilonRange => "epsilon range",
            Constraint::AlphaRange => "alpha range",
            Constraint::GainInequality => "gain inequality",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub mode: Mode,
    /// `eps^p k1 / k3`; `k2` must exceed it.
    pub gain_threshold: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, constraint: Constraint) -> bool {
        self.violations.iter().any(|v| v.constraint == constraint)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid (k2 threshold {})", self.gain_threshold);
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{} violated: {}", v.constraint.name(), v.detail)?;
        }
        Ok(())
    }
}

pub fn validate_params(set: &ParamSet) -> ValidationReport {
    validate_params_with_floor(set, DEFAULT_EPSILON_FLOOR)
}

/// Checks every constraint and lists each one that fails. Never errors.
pub fn validate_params_with_floor(set: &ParamSet, epsilon_floor: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |constraint, detail: String| violations.push(Violation { constraint, detail });

    for (name, k) in [("k1", set.k1), ("k2", set.k2), ("k3", set.k3)] {
        if !(k > 0.0) || !k.is_finite() {
            push(Constraint::Positivity, format!("{name} = {k} must be > 0"));
        }
    }
    if !(set.epsilon > 0.0 && set.epsilon < 1.0) {
        push(Constraint::EpsilonRange, format!("epsilon = {} must lie in (0, 1)", set.epsilon));
    } else if set.epsilon < epsilon_floor {
        push(
            Constraint::EpsilonRange,
            format!("epsilon = {} is below the floor {epsilon_floor}", set.epsilon),
        );
    }
    if !(set.alpha3 > 0.0 && set.alpha3 <= 1.0) {
        push(Constraint::AlphaRange, format!("alpha3 = {} must lie in (0, 1]", set.alpha3));
    }
    let gain_threshold = set.gain_threshold();
    if !(set.k2 > gain_threshold) {
        push(Constraint::GainInequality, format!("k2 = {} <= threshold {gain_threshold}", set.k2));
    }

    ValidationReport { mode: set.mode, gain_threshold, violations }
}

/// Validated observer parameters with derived exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObserverParams {
    set: ParamSet,
    alpha1: f64,
    alpha2: f64,
    #[serde(skip)]
    eps2: f64,
    #[serde(skip)]
    inv_eps4: f64,
}

impl ObserverParams {
    pub fn new(set: ParamSet) -> Result<Self> {
        Self::with_epsilon_floor(set, DEFAULT_EPSILON_FLOOR)
    }

    pub fn with_epsilon_floor(set: ParamSet, epsilon_floor: f64) -> Result<Self> {
        let report = validate_params_with_floor(&set, epsilon_floor);
        if !report.is_valid() {
            return Err(Error::InvalidParams(report));
        }
        let (alpha1, alpha2) = derive_alphas(set.alpha3)?;
        let eps = set.epsilon;
        let eps2 = eps * eps;
        Ok(Self { set, alpha1, alpha2, eps2, inv_eps4: 1.0 / (eps2 * eps2) })
    }

    pub fn set(&self) -> &ParamSet {
        &self.set
    }
    pub fn mode(&self) -> Mode {
        self.set.mode
    }
    pub fn k(&self) -> (f64, f64, f64) {
        (self.set.k1, self.set.k2, self.set.k3)
    }
    pub fn epsilon(&self) -> f64 {
        self.set.epsilon
    }
    /// `(alpha1, alpha2, alpha3)`.
    pub fn alphas(&self) -> (f64, f64, f64) {
        (self.alpha1, self.alpha2, self.set.alpha3)
    }

    /// Rate of the fast linear mode, `k3 / eps^4`.
    pub fn fast_rate(&self) -> f64 {
        self.set.k3 * self.inv_eps4
    }

    pub fn rhs(&self, state: &ObserverState, a_t: f64) -> Result<ObserverState> {
        if !state.is_finite() || !a_t.is_finite() {
            return Err(Error::Diverged { time: None });
        }
        let ParamSet { k1, k2, k3, epsilon, alpha3, mode } = self.set;
        let scaled1 = epsilon * state.x1;
        let scaled2 = self.eps2 * state.x2;
        let tracking = state.x3 - a_t;
        let feedback = match mode {
            Mode::Linear => k1 * scaled1 + k2 * scaled2 + k3 * tracking,
            Mode::Nonlinear => {
                k1 * power_sign(scaled1, self.alpha1)
                    + k2 * power_sign(scaled2, self.alpha2)
                    + k3 * power_sign(tracking, alpha3)
            }
        };
        let d = ObserverState::new(state.x2, state.x3, -feedback * self.inv_eps4);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Diverged { time: None })
        }
    }
}

/// `(x1, x2, x3)`: double-integral estimate, onefold-integral estimate and
/// tracked signal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ObserverState {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl ObserverState {
    pub const ZERO: Self = Self { x1: 0.0, x2: 0.0, x3: 0.0 };

    pub fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }

    /// Component by channel number 1, 2 or 3.
    pub fn channel(&self, j: usize) -> f64 {
        match j {
            1 => self.x1,
            2 => self.x2,
            3 => self.x3,
            _ => panic!("channel {j} out of range"),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.x1 - other.x1).abs().max((self.x2 - other.x2).abs()).max((self.x3 - other.x3).abs())
    }
}

impl From<[f64; 3]> for ObserverState {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl Add for ObserverState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x1 + o.x1, self.x2 + o.x2, self.x3 + o.x3)
    }
}

impl Sub for ObserverState {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x1 - o.x1, self.x2 - o.x2, self.x3 - o.x3)
    }
}

impl Mul<f64> for ObserverState {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x1 * s, self.x2 * s, self.x3 * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const K: (f64, f64, f64) = (0.1, 0.1, 1.0);

    #[test]
    fn power_sign_examples() {
        assert_eq!(power_sign(0.0, 0.3), 0.0);
        assert_eq!(power_sign(-4.0, 0.5), -2.0);
        for x in [-3.5, -1e-9, 0.0, 2.0, 1e12] {
            assert_eq!(power_sign(x, 1.0), x);
        }
    }

    #[test]
    fn alpha_chain() {
        let (a1, a2) = derive_alphas(0.3).unwrap();
        assert!((a2 - 0.3 / 1.7).abs() < 1e-15);
        assert!((a2 - 0.176_470_588_235_294_1).abs() < 1e-15);
        assert!((a1 - 0.125).abs() < 1e-15);
        assert_eq!(derive_alphas(1.0).unwrap(), (1.0, 1.0));
        let (a1, a2) = derive_alphas(0.5).unwrap();
        assert!((a2 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(a1, 0.25);
        assert!(derive_alphas(0.0).is_err());
        assert!(derive_alphas(1.5).is_err());
    }

    #[test]
    fn validation_examples() {
        let ok = validate_params(&ParamSet::linear(K, 0.2));
        assert!(ok.is_valid());
        assert!((ok.gain_threshold - 0.0008).abs() < 1e-15);

        let low = validate_params(&ParamSet::linear((0.1, 0.0005, 1.0), 0.2));
        assert!(low.violates(Constraint::GainInequality));
        assert_eq!(low.violations.len(), 1);

        let zero = validate_params(&ParamSet::linear((0.0, 0.1, 1.0), 0.2));
        assert!(zero.violates(Constraint::Positivity));

        let alpha = validate_params(&ParamSet::nonlinear(K, 0.2, 1.5));
        assert!(alpha.violates(Constraint::AlphaRange));

        let eps = validate_params(&ParamSet::linear(K, 1.0));
        assert!(eps.violates(Constraint::EpsilonRange));
        let floor = validate_params(&ParamSet::linear(K, 1e-4));
        assert!(floor.violates(Constraint::EpsilonRange));
        assert!(validate_params_with_floor(&ParamSet::linear(K, 1e-4), 1e-5).is_valid());
    }

    #[test]
    fn nonlinear_threshold_uses_scaled_exponent() {
        let set = ParamSet::nonlinear(K, 0.2, 0.3);
        assert!((set.gain_threshold() - 0.2f64.powf(0.9) * 0.1).abs() < 1e-15);
        let at_one = ParamSet::nonlinear(K, 0.2, 1.0);
        assert_eq!(at_one.gain_threshold(), ParamSet::linear(K, 0.2).gain_threshold());
    }

    #[test]
    fn accepts_all_scenario_parameters() {
        for r in [3.0, 4.0, 5.0] {
            for alpha in [0.3, 0.5, 1.0] {
                assert!(validate_params(&ParamSet::nonlinear(K, 1.0 / r, alpha)).is_valid());
            }
            assert!(validate_params(&ParamSet::linear(K, 1.0 / r)).is_valid());
        }
    }

    #[test]
    fn rhs_at_origin_is_zero() {
        for set in [ParamSet::linear(K, 0.2), ParamSet::nonlinear(K, 0.2, 0.3)] {
            let p = ObserverParams::new(set).unwrap();
            assert_eq!(p.rhs(&ObserverState::ZERO, 0.0).unwrap(), ObserverState::ZERO);
        }
    }

    #[test]
    fn rhs_linear_example() {
        let p = ObserverParams::new(ParamSet::linear(K, 0.2)).unwrap();
        let d = p.rhs(&ObserverState::new(1.0, 1.0, 1.0), 0.0).unwrap();
        assert_eq!((d.x1, d.x2), (1.0, 1.0));
        assert!((d.x3 + 640.0).abs() < 1e-9);
    }

    #[test]
    fn rhs_nonlinear_matches_scalar_evaluation() {
        // term-by-term evaluation with eps = 0.5, alpha3 = 0.3, state (1, -1, 2), a = 1
        let eps: f64 = 0.5;
        let (a1, a2, a3) = (0.3 / 2.4, 0.3 / 1.7, 0.3);
        let t1 = 0.1 * (eps * 1.0).powf(a1);
        let t2 = -0.1 * (eps * eps * 1.0).powf(a2);
        let t3 = 1.0 * (2.0f64 - 1.0).powf(a3);
        let expected = -(t1 + t2 + t3) / eps.powi(4);

        let p = ObserverParams::new(ParamSet::nonlinear(K, eps, 0.3)).unwrap();
        let d = p.rhs(&ObserverState::new(1.0, -1.0, 2.0), 1.0).unwrap();
        assert_eq!((d.x1, d.x2), (-1.0, 2.0));
        assert!((d.x3 - expected).abs() < 1e-12 * expected.abs());
        assert!((d.x3 - -16.214_428_516_187_404).abs() < 1e-9, "{}", d.x3);
    }

    #[test]
    fn rhs_rejects_non_finite() {
        let p = ObserverParams::new(ParamSet::linear(K, 0.2)).unwrap();
        assert!(matches!(p.rhs(&ObserverState::new(f64::NAN, 0.0, 0.0), 0.0), Err(Error::Diverged { .. })));
        assert!(p.rhs(&ObserverState::ZERO, f64::INFINITY).is_err());
        assert!(p.rhs(&ObserverState::new(1e306, 1e306, 1e306), 0.0).is_err());
    }

    #[test]
    fn construction_rejects_invalid() {
        let err = ObserverParams::new(ParamSet::linear((0.1, 0.0, 1.0), 0.2)).unwrap_err();
        assert!(matches!(err, Error::InvalidParams(r) if r.violates(Constraint::GainInequality)));
    }

    fn finite() -> impl Strategy<Value = f64> {
        -1e3..1e3f64
    }

    proptest! {
        #[test]
        fn degenerates_to_linear(x1 in finite(), x2 in finite(), x3 in finite(), a in finite(),
                                 eps in 0.05..0.95f64) {
            let lin = ObserverParams::new(ParamSet::linear(K, eps)).unwrap();
            let nl = ObserverParams::new(ParamSet::nonlinear(K, eps, 1.0)).unwrap();
            let s = ObserverState::new(x1, x2, x3);
            prop_assert_eq!(lin.rhs(&s, a).unwrap(), nl.rhs(&s, a).unwrap());
        }

        #[test]
        fn dynamics_are_odd(x1 in finite(), x2 in finite(), x3 in finite(), a in finite(),
                            alpha in 0.05..=1.0f64, linear in any::<bool>()) {
            let set = if linear { ParamSet::linear(K, 0.25) } else { ParamSet::nonlinear(K, 0.25, alpha) };
            let p = ObserverParams::new(set).unwrap();
            let s = ObserverState::new(x1, x2, x3);
            let d = p.rhs(&s, a).unwrap();
            let m = p.rhs(&(s * -1.0), -a).unwrap();
            prop_assert_eq!(m, d * -1.0);
        }

        #[test]
        fn power_sign_is_monotone(x in finite(), y in finite(), alpha in 0.01..=1.0f64) {
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            prop_assert!(power_sign(lo, alpha) <= power_sign(hi, alpha));
        }

        #[test]
        fn alphas_stay_below_alpha3(alpha3 in 1e-6..=1.0f64) {
            let (a1, a2) = derive_alphas(alpha3).unwrap();
            prop_assert!(a1 > 0.0 && a1 <= alpha3);
            prop_assert!(a2 > 0.0 && a2 <= alpha3);
            prop_assert!(a1 <= a2);
        }
    }
}
