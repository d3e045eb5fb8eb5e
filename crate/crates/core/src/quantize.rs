//! Termination of the Heun series and the quasi-exact spectrum it produces.
//!
//! Asking for `c_{n+1} = c_{n+2} = 0` pins the energy level,
//! `c = 2(n+l+1) + 1`, and leaves one condition on `b`:
//! `-2 c_{n-1}(b) + (n b - D(b)) c_n(b) = 0`, a polynomial of degree `n+1`
//! because `-D = b(l+1) - alpha/K` and every `c_j` is a degree-`j` polynomial
//! in `b`. Each real root fixes a different linear term `beta = b K^3`: the
//! solutions returned for one `(n, l, alpha, k)` live in *different*
//! potentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heun::{self, coefficient_sequence, horner, to_heun_params, HeunParameters};
use crate::model::{turning_points, PhysicalSystem};
use crate::poly::{is_real, Polynomial};

/// Roots with `|Im| > 1e-8 (1 + |Re|)` are treated as complex and dropped.
pub const B_ROOT_IMAG_TOL: f64 = 1e-8;
/// Polishing target `|P(b)| < 1e-12 * sum |p_i| |b|^i`.
pub const B_ROOT_RESIDUAL_TOL: f64 = 1e-12;
/// Largest degree handled without an explicit override.
pub const DEFAULT_DEGREE_CAP: usize = 32;
/// Number of `z` samples used for the ODE residual diagnostic.
pub const ODE_SAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintPolynomial {
    pub n: usize,
    pub l: u32,
    pub alpha_over_k: f64,
    /// Ascending powers of `b`.
    pub poly: Polynomial,
}

impl ConstraintPolynomial {
    pub fn eval(&self, b: f64) -> f64 {
        self.poly.eval(b)
    }

    /// `|P(b)|` relative to `sum |p_i| |b|^i`.
    pub fn relative_residual(&self, b: f64) -> f64 {
        let scale = self.poly.magnitude_at(b);
        if scale == 0.0 {
            0.0
        } else {
            self.poly.eval(b).abs() / scale
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionResiduals {
    /// `|P(b)| / sum |p_i| |b|^i`
    pub constraint: f64,
    /// Largest relative ODE residual over the sample grid in `z`.
    pub ode_sup: f64,
    /// Raw `max(|c_{n+1}|, |c_{n+2}|) / max_{j<=n} |c_j|`.
    pub termination: f64,
    pub oracle_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiExactSolution {
    pub n: usize,
    pub l: u32,
    pub alpha: f64,
    pub k: f64,
    pub b_root: f64,
    /// Linear coefficient this solution requires, `b K^3`.
    pub beta: f64,
    pub epsilon: f64,
    /// `c_0 .. c_n` of the polynomial `H(z)`.
    pub heun_coefficients: Vec<f64>,
    pub residuals: SolutionResiduals,
}

impl QuasiExactSolution {
    pub fn kappa(&self) -> f64 {
        self.k.sqrt().sqrt()
    }

    /// The potential this solution belongs to.
    pub fn system(&self) -> PhysicalSystem {
        PhysicalSystem {
            alpha: self.alpha,
            beta: self.beta,
            k: self.k,
            l: self.l,
        }
    }

    pub fn heun_params(&self) -> HeunParameters {
        to_heun_params(&self.system(), self.epsilon).expect("k > 0 by construction")
    }

    /// `H(z)` by Horner on the stored polynomial.
    pub fn heun_value(&self, z: f64) -> f64 {
        horner(&self.heun_coefficients, z)
    }
}

/// `eps = K^2 (n + l + 3/2) - K^2 b^2 / 8`.
pub fn energy_from_termination(n: usize, l: u32, kappa: f64, b: f64) -> f64 {
    let k2 = kappa * kappa;
    k2 * (n as f64 + l as f64 + 1.5) - k2 * b * b / 8.0
}

/// The degree-`(n+1)` polynomial in `b` whose roots make the series terminate
/// after `c_n`, built with exact polynomial arithmetic in `b`.
pub fn constraint_polynomial(n: usize, l: u32, alpha_over_k: f64) -> ConstraintPolynomial {
    let lf = l as f64;
    let a = 2.0 * lf + 1.0;
    let c = 2.0 * (n as f64 + lf + 1.0) + 1.0;
    // j b - D(b) = b (j + l + 1) - alpha/K
    let shifted = |j: usize| Polynomial::linear(-alpha_over_k, j as f64 + lf + 1.0);

    let poly = if n == 0 {
        shifted(0)
    } else {
        let mut prev = Polynomial::constant(1.0);
        let mut cur = shifted(0).scale(1.0 / (1.0 + a));
        for j in 1..n {
            let jf = j as f64;
            let denom = (jf + 1.0) * (a + jf + 1.0);
            let next = prev
                .scale((2.0 * jf + a - c) / denom)
                .add(&shifted(j).mul(&cur).scale(1.0 / denom));
            prev = cur;
            cur = next;
        }
        prev.scale(-2.0).add(&shifted(n).mul(&cur))
    };

    ConstraintPolynomial {
        n,
        l,
        alpha_over_k,
        poly,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BRoots {
    /// Real roots, ascending, Newton-polished.
    pub real: Vec<f64>,
    /// How many companion eigenvalues were discarded as complex.
    pub complex_discarded: usize,
}

pub fn solve_b_roots(cp: &ConstraintPolynomial) -> Result<BRoots> {
    if cp.poly.degree() == 0 {
        return Err(Error::DegenerateDegree(0));
    }
    let roots = cp.poly.roots()?;
    let mut real = Vec::new();
    let mut complex_discarded = 0;
    for z in roots {
        if is_real(z, B_ROOT_IMAG_TOL) {
            real.push(cp.poly.polish_real(z.re));
        } else {
            complex_discarded += 1;
        }
    }
    real.sort_by(f64::total_cmp);
    Ok(BRoots {
        real,
        complex_discarded,
    })
}

fn check_inputs(l: u32, alpha: f64, kappa: f64) -> Result<()> {
    let _ = l;
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "K must be positive, got {kappa}"
        )));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be non-negative, got {alpha}"
        )));
    }
    Ok(())
}

/// Builds the full solution record for a termination root `b`.
fn assemble(
    n: usize,
    l: u32,
    alpha: f64,
    k: f64,
    b: f64,
    cp: Option<&ConstraintPolynomial>,
) -> Result<QuasiExactSolution> {
    let kappa = k.sqrt().sqrt();
    let beta = b * kappa.powi(3);
    let epsilon = energy_from_termination(n, l, kappa, b);
    let sys = PhysicalSystem::new(alpha, beta, k, l)?;
    let hp = to_heun_params(&sys, epsilon)?;

    let termination = heun::termination_residual(&hp, n);
    let raw = coefficient_sequence(&hp, n + 2);
    let heun_coefficients = raw.coefficients[..=n].to_vec();

    let constraint = match cp {
        Some(cp) => cp.relative_residual(b),
        None => constraint_polynomial(n, l, alpha / kappa).relative_residual(b),
    };

    let poly_seq = heun::CoefficientSequence {
        coefficients: heun_coefficients.clone(),
        c0: 1.0,
        terminated_at: Some(n),
        termination_residual: Some(termination),
    };
    let z_max = 2.0 * kappa * outer_turning_point(&sys, epsilon);
    let ode_sup = (1..=ODE_SAMPLES)
        .map(|i| z_max * i as f64 / ODE_SAMPLES as f64)
        .map(|z| heun::ode_residual_relative(&hp, &poly_seq, z))
        .try_fold(0.0_f64, |m, r| r.map(|r| m.max(r)))?;

    Ok(QuasiExactSolution {
        n,
        l,
        alpha,
        k,
        b_root: b,
        beta,
        epsilon,
        heun_coefficients,
        residuals: SolutionResiduals {
            constraint,
            ode_sup,
            termination,
            oracle_gap: None,
        },
    })
}

/// Outer classical turning point; falls back to the Gaussian width when the
/// quartic has no positive real root.
pub fn outer_turning_point(sys: &PhysicalSystem, epsilon: f64) -> f64 {
    turning_points(sys, epsilon)
        .ok()
        .and_then(|tp| tp.outer())
        .unwrap_or_else(|| 3.0 / sys.kappa())
}

/// The single `n = 0` solution: `b = alpha / (K (l+1))`, `H = 1`,
/// `eps = K^2 (l + 3/2) - (alpha/(l+1))^2 / 8`.
pub fn closed_form_n0(l: u32, alpha: f64, kappa: f64) -> Result<QuasiExactSolution> {
    check_inputs(l, alpha, kappa)?;
    let lp1 = l as f64 + 1.0;
    let b = alpha / (kappa * lp1);
    let mut sol = assemble(0, l, alpha, kappa.powi(4), b, None)?;
    let ratio = alpha / lp1;
    sol.epsilon = kappa * kappa * (l as f64 + 1.5) - ratio * ratio / 8.0;
    Ok(sol)
}

/// Both `n = 1` solutions, lower `b` first:
/// `b = (alpha/K)(l + 3/2)/((l+1)(l+2)) -/+ sqrt((alpha/K)^2 / (4 (l+1)^2 (l+2)^2) + 4/(l+2))`.
pub fn closed_form_n1(l: u32, alpha: f64, kappa: f64) -> Result<[QuasiExactSolution; 2]> {
    check_inputs(l, alpha, kappa)?;
    let (lp1, lp2) = (l as f64 + 1.0, l as f64 + 2.0);
    let x = alpha / kappa;
    let centre = x * (l as f64 + 1.5) / (lp1 * lp2);
    let half_width = (x * x / (4.0 * lp1 * lp1 * lp2 * lp2) + 4.0 / lp2).sqrt();
    let k = kappa.powi(4);
    Ok([
        assemble(1, l, alpha, k, centre - half_width, None)?,
        assemble(1, l, alpha, k, centre + half_width, None)?,
    ])
}

/// All quasi-exact solutions of degree `n`, one per real root of the
/// constraint polynomial, in ascending `b`.
pub fn solve_family(n: usize, l: u32, alpha: f64, k: f64) -> Result<Vec<QuasiExactSolution>> {
    solve_family_capped(n, l, alpha, k, DEFAULT_DEGREE_CAP)
}

pub fn solve_family_capped(
    n: usize,
    l: u32,
    alpha: f64,
    k: f64,
    degree_cap: usize,
) -> Result<Vec<QuasiExactSolution>> {
    if n > degree_cap {
        return Err(Error::InvalidParameter(format!(
            "degree {n} exceeds the cap {degree_cap}"
        )));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "k must be positive, got {k}"
        )));
    }
    let kappa = k.sqrt().sqrt();
    check_inputs(l, alpha, kappa)?;
    let cp = constraint_polynomial(n, l, alpha / kappa);
    let roots = solve_b_roots(&cp)?;
    roots
        .real
        .iter()
        .map(|&b| assemble(n, l, alpha, k, b, Some(&cp)))
        .collect()
}

/// `R(r) = r^l exp(-beta r / 2K^2) exp(-K^2 r^2 / 2) H(K r)`, unnormalized.
pub fn wavefunction(sol: &QuasiExactSolution, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
    let kappa = sol.kappa();
    let k2 = kappa * kappa;
    radii
        .iter()
        .map(|&r| {
            if !(r >= 0.0) {
                return Err(Error::NonPositiveRadius(r));
            }
            let envelope = (-sol.beta * r / (2.0 * k2) - k2 * r * r / 2.0).exp();
            Ok((
                r,
                r.powi(sol.l as i32) * envelope * sol.heun_value(kappa * r),
            ))
        })
        .collect()
}

/// Scale so that the trapezoidal `int R^2 r^2 dr` is one, positive at the
/// first sample with `|R| > 1e-12`.
pub fn normalize(samples: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if samples.len() < 3 {
        return Err(Error::Normalization(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Normalization(
            "radii must be strictly ascending".into(),
        ));
    }
    let norm2 = radial_norm_squared(samples);
    if !(norm2 > 0.0) || !norm2.is_finite() {
        return Err(Error::Normalization(
            "wavefunction is identically zero".into(),
        ));
    }
    let mut s = 1.0 / norm2.sqrt();
    if let Some(&(_, first)) = samples.iter().find(|(_, v)| (v * s).abs() > 1e-12) {
        if first < 0.0 {
            s = -s;
        }
    }
    Ok(samples.iter().map(|&(r, v)| (r, v * s)).collect())
}

/// Trapezoidal `int R^2 r^2 dr`.
pub fn radial_norm_squared(samples: &[(f64, f64)]) -> f64 {
    samples
        .windows(2)
        .map(|w| {
            let (r0, v0) = w[0];
            let (r1, v1) = w[1];
            0.5 * (r1 - r0) * (v0 * v0 * r0 * r0 + v1 * v1 * r1 * r1)
        })
        .sum()
}
