//! Bi-confluent Heun equation
//!
//! ```text
//! H'' + (-2z - b + (1+a)/z) H' + (-2 - a + c + D/z) H = 0,   D = -b(a+1)/2 - d/2
//! ```
//!
//! in the real variable `z = K r`, its power-series solution regular at the
//! origin, and the three-term recurrence that generates it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PhysicalSystem;

/// `|c_{n+1}|, |c_{n+2}|` must fall below this fraction of `max_{j<=n} |c_j|`.
pub const TERMINATION_TOL: f64 = 1e-10;

/// How close `c` has to be to `2(n+1) + a`, relative to `1 + |c|`, for
/// degree `n` to be a termination candidate at all.
const STRUCTURAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeunParameters {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// `-b(a+1)/2 - d/2`
    #[serde(rename = "big_d")]
    pub big_d: f64,
}

impl HeunParameters {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self {
            a,
            b,
            c,
            d,
            big_d: Self::derived_d(a, b, d),
        }
    }

    fn derived_d(a: f64, b: f64, d: f64) -> f64 {
        -b * (a + 1.0) / 2.0 - d / 2.0
    }

    /// True when the stored `D` is exactly the one implied by `(a, b, d)`.
    pub fn d_identity_holds(&self) -> bool {
        Self::derived_d(self.a, self.b, self.d).to_bits() == self.big_d.to_bits()
    }

    /// Multiplier of `c_{n-1}` and of `c_n` in the recurrence for `c_{n+1}`:
    /// `(E_{n-1}, A_n)`. For `n = 0` only `A_0 = -D/(1+a)` is meaningful.
    pub fn recurrence_factors(&self, n: usize) -> (f64, f64) {
        let nf = n as f64;
        let denom = (nf + 1.0) * (self.a + nf + 1.0);
        let e = (2.0 * nf + self.a - self.c) / denom;
        let an = (nf * self.b - self.big_d) / denom;
        (e, an)
    }

    /// Degree `n` for which `c` sits on the termination level
    /// `c = 2(n+1) + a`, i.e. `c = 2(n+l+1) + 1`, if any.
    pub fn termination_candidate(&self) -> Option<usize> {
        let t = (self.c - self.a - 2.0) / 2.0;
        let n = t.round();
        if n < 0.0 {
            return None;
        }
        let gap = 2.0 * (n + 1.0) + self.a - self.c;
        (gap.abs() <= STRUCTURAL_TOL * (1.0 + self.c.abs())).then_some(n as usize)
    }
}

/// Parameters for `sys` at energy `epsilon`:
/// `a = 2l+1`, `b = beta/K^3`, `c = 2 eps/K^2 + b^2/4`, `d = -2 alpha/K`.
pub fn to_heun_params(sys: &PhysicalSystem, epsilon: f64) -> Result<HeunParameters> {
    if !(sys.k > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "harmonic coefficient k must be positive, got {}",
            sys.k
        )));
    }
    let kap = sys.kappa();
    let a = 2.0 * sys.l as f64 + 1.0;
    let b = sys.beta / kap.powi(3);
    let c = 2.0 * epsilon / (kap * kap) + b * b / 4.0;
    let d = -2.0 * sys.alpha / kap;
    Ok(HeunParameters::new(a, b, c, d))
}

/// `(E_{n-1}, A_n)` of the short-form recurrence `c_{n+1} = E_{n-1} c_{n-1} + A_n c_n`.
pub fn recurrence_factors(hp: &HeunParameters, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "recurrence factors are defined for n >= 1".into(),
        ));
    }
    let denom_root = hp.a + n as f64 + 1.0;
    if denom_root == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "recurrence denominator vanishes at n = {n}"
        )));
    }
    Ok(hp.recurrence_factors(n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSequence {
    pub coefficients: Vec<f64>,
    pub c0: f64,
    /// Degree of the polynomial when the series terminates. All later
    /// coefficients are then stored as exact zeros.
    pub terminated_at: Option<usize>,
    /// `max(|c_{n+1}|, |c_{n+2}|) / max_{j<=n} |c_j|` as computed, before the
    /// tail was zeroed.
    pub termination_residual: Option<f64>,
}

impl CoefficientSequence {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `c_0 .. c_n` of a terminated sequence.
    pub fn polynomial(&self) -> Option<&[f64]> {
        self.terminated_at.map(|n| &self.coefficients[..=n])
    }

    /// Horner evaluation of the stored (truncated) series.
    pub fn eval(&self, z: f64) -> f64 {
        horner(&self.coefficients, z)
    }

    /// `(H, H', H'')` by term-wise differentiation of the stored series.
    pub fn eval_derivatives(&self, z: f64) -> (f64, f64, f64) {
        let mut h = 0.0;
        let mut dh = 0.0;
        let mut d2h = 0.0;
        for &c in self.coefficients.iter().rev() {
            d2h = d2h * z + 2.0 * dh;
            dh = dh * z + h;
            h = h * z + c;
        }
        (h, dh, d2h)
    }
}

pub(crate) fn horner(coeffs: &[f64], z: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
}

fn run_recurrence(hp: &HeunParameters, max_index: usize) -> Vec<f64> {
    let mut cs = Vec::with_capacity(max_index + 1);
    cs.push(1.0);
    if max_index == 0 {
        return cs;
    }
    let (_, a0) = hp.recurrence_factors(0);
    cs.push(a0);
    for j in 1..max_index {
        let (e, a) = hp.recurrence_factors(j);
        let next = e * cs[j - 1] + a * cs[j];
        cs.push(next);
    }
    cs
}

/// Raw `max(|c_{n+1}|, |c_{n+2}|) / max_{j<=n} |c_j|` for a chosen degree `n`,
/// whether or not the parameters sit on the termination level.
pub fn termination_residual(hp: &HeunParameters, n: usize) -> f64 {
    let cs = run_recurrence(hp, n + 2);
    let scale = cs[..=n].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    cs[n + 1].abs().max(cs[n + 2].abs()) / scale
}

/// Coefficients `c_0 = 1, c_1, ..., c_max_index`.
pub fn coefficient_sequence(hp: &HeunParameters, max_index: usize) -> CoefficientSequence {
    let mut cs = run_recurrence(hp, max_index);
    let mut terminated_at = None;
    let mut termination_residual = None;

    if let Some(n) = hp.termination_candidate() {
        if n + 2 <= max_index {
            let scale = cs[..=n].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
            let resid = cs[n + 1].abs().max(cs[n + 2].abs()) / scale;
            if resid < TERMINATION_TOL {
                terminated_at = Some(n);
                termination_residual = Some(resid);
                // c_{n+1} = c_{n+2} = 0 forces every later coefficient to vanish.
                for c in cs.iter_mut().skip(n + 1) {
                    *c = 0.0;
                }
            }
        }
    }

    CoefficientSequence {
        coefficients: cs,
        c0: 1.0,
        terminated_at,
        termination_residual,
    }
}

/// Truncation policy for [`eval_series`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesControl {
    /// Sum `c_0 .. c_order`.
    Order(usize),
    /// Double the truncation order from 16 until two successive sums agree to
    /// `tol` (relative), giving up past `cap` coefficients.
    Tail { tol: f64, cap: usize },
}

pub const DEFAULT_COEFFICIENT_CAP: usize = 4096;

pub fn eval_series(hp: &HeunParameters, z: f64, control: SeriesControl) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "series is evaluated on z >= 0, got {z}"
        )));
    }
    match control {
        SeriesControl::Order(order) => Ok(coefficient_sequence(hp, order).eval(z)),
        SeriesControl::Tail { tol, cap } => {
            let full = coefficient_sequence(hp, cap);
            if let Some(n) = full.terminated_at {
                return Ok(horner(&full.coefficients[..=n], z));
            }
            let mut order = 16.min(cap);
            let mut prev = horner(&full.coefficients[..=order], z);
            while order < cap {
                order = (2 * order).min(cap);
                let cur = horner(&full.coefficients[..=order], z);
                if (cur - prev).abs() <= tol * cur.abs().max(f64::MIN_POSITIVE) {
                    return Ok(cur);
                }
                prev = cur;
            }
            Err(Error::SeriesNotConverged { tol, cap })
        }
    }
}

/// The three terms of the left-hand side at `z`, summed and as absolute values.
fn ode_terms(hp: &HeunParameters, seq: &CoefficientSequence, z: f64) -> [f64; 3] {
    let (h, dh, d2h) = seq.eval_derivatives(z);
    [
        d2h,
        (-2.0 * z - hp.b + (1.0 + hp.a) / z) * dh,
        (-2.0 - hp.a + hp.c + hp.big_d / z) * h,
    ]
}

/// `|H'' + (-2z - b + (1+a)/z) H' + (-2 - a + c + D/z) H|` for the stored series.
pub fn ode_residual(hp: &HeunParameters, seq: &CoefficientSequence, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "equation is singular at z = 0; need z > 0, got {z}"
        )));
    }
    let t = ode_terms(hp, seq, z);
    Ok((t[0] + t[1] + t[2]).abs())
}

/// Residual divided by the local scale of the equation at `z`: each of the
/// three terms evaluated with absolute values throughout (`|c_j|`, `|b|`,
/// ...), which bounds the size of the rounding error in evaluating them.
pub fn ode_residual_relative(
    hp: &HeunParameters,
    seq: &CoefficientSequence,
    z: f64,
) -> Result<f64> {
    let resid = ode_residual(hp, seq, z)?;
    let abs_seq = CoefficientSequence {
        coefficients: seq.coefficients.iter().map(|c| c.abs()).collect(),
        ..seq.clone()
    };
    let (h, dh, d2h) = abs_seq.eval_derivatives(z);
    let scale = d2h
        + (2.0 * z + hp.b.abs() + (1.0 + hp.a).abs() / z) * dh
        + (2.0 + hp.a.abs() + hp.c.abs() + hp.big_d.abs() / z) * h;
    Ok(if scale == 0.0 { resid } else { resid / scale })
}
