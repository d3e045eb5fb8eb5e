//! Dense real polynomials in ascending-coefficient form, with a
//! companion-matrix root finder followed by Newton polishing.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// `coeffs[i]` multiplies `x^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `c0 + c1 x`
    pub fn linear(c0: f64, c1: f64) -> Self {
        Self::new(vec![c0, c1])
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    fn eval_complex_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `sum |c_i| |x|^i`, the natural size of the rounding error in `eval(x)`.
    pub fn magnitude_at(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(0.0);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| {
                self.coeffs.get(i).copied().unwrap_or(0.0)
                    + other.coeffs.get(i).copied().unwrap_or(0.0)
            })
            .collect();
        Self::new(coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// All complex roots with multiplicity.
    ///
    /// Exact zero roots (vanishing low-order coefficients) are split off first;
    /// the rest come from the eigenvalues of the companion matrix of the monic
    /// remainder, each refined by complex Newton steps on the full polynomial.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let deg = self.degree();
        if deg == 0 || self.leading() == 0.0 {
            return Err(Error::DegenerateDegree(deg));
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "polynomial has non-finite coefficients".into(),
            ));
        }

        let zeros = self.coeffs.iter().take_while(|&&c| c == 0.0).count();
        let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
        let rest = &self.coeffs[zeros..];
        let m = rest.len() - 1;
        if m == 0 {
            return Ok(roots);
        }

        let lead = rest[m];
        let mut companion = DMatrix::<f64>::zeros(m, m);
        for i in 1..m {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..m {
            companion[(i, m - 1)] = -rest[i] / lead;
        }
        let eigs = companion.complex_eigenvalues();

        let reduced = Polynomial::new(rest.to_vec());
        roots.extend(eigs.iter().map(|&z| reduced.polish_complex(z)));
        Ok(roots)
    }

    fn polish_complex(&self, mut z: Complex64) -> Complex64 {
        let (mut p, _) = self.eval_complex_with_derivative(z);
        for _ in 0..60 {
            let (_, dp) = self.eval_complex_with_derivative(z);
            if dp.norm() == 0.0 || p.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            let candidate = z - step;
            let (pc, _) = self.eval_complex_with_derivative(candidate);
            if !(pc.norm() < p.norm()) {
                break;
            }
            z = candidate;
            p = pc;
            if step.norm() <= 4.0 * f64::EPSILON * z.norm() {
                break;
            }
        }
        z
    }

    /// Real Newton refinement; a step is only taken if it reduces `|p|`.
    pub fn polish_real(&self, mut x: f64) -> f64 {
        let (mut p, _) = self.eval_with_derivative(x);
        for _ in 0..60 {
            let (_, dp) = self.eval_with_derivative(x);
            if dp == 0.0 || p == 0.0 {
                break;
            }
            let step = p / dp;
            let candidate = x - step;
            let pc = self.eval(candidate);
            if !(pc.abs() < p.abs()) {
                break;
            }
            x = candidate;
            p = pc;
            if step.abs() <= 2.0 * f64::EPSILON * x.abs() {
                break;
            }
        }
        x
    }
}

/// Scale-aware "is this root real" test: `|Im| <= tol * (1 + |Re|)`.
pub fn is_real(z: Complex64, tol: f64) -> bool {
    z.im.abs() <= tol * (1.0 + z.re.abs())
}

/// Real roots first (ascending, imaginary part dropped), then the complex ones
/// grouped in conjugate pairs by ascending real part, negative imaginary first.
pub fn order_roots(roots: &[Complex64], tol: f64) -> (Vec<Complex64>, usize) {
    let mut real: Vec<Complex64> = roots
        .iter()
        .filter(|z| is_real(**z, tol))
        .map(|z| Complex64::new(z.re, 0.0))
        .collect();
    let mut complex: Vec<Complex64> = roots
        .iter()
        .filter(|z| !is_real(**z, tol))
        .copied()
        .collect();
    real.sort_by(|a, b| a.re.total_cmp(&b.re));
    complex.sort_by(|a, b| {
        // Pair partners have equal real parts up to rounding; round them
        // together before comparing so conjugates stay adjacent.
        let ka = (a.re * 1e9).round();
        let kb = (b.re * 1e9).round();
        ka.total_cmp(&kb).then(a.im.total_cmp(&b.im))
    });
    let n_real = real.len();
    real.extend(complex);
    (real, n_real)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_and_derivative() {
        let p = Polynomial::new(vec![1.0, -3.0, 0.0, 2.0]);
        assert_eq!(p.eval(2.0), 1.0 - 6.0 + 16.0);
        let (v, d) = p.eval_with_derivative(2.0);
        assert_eq!(v, 11.0);
        assert_eq!(d, -3.0 + 6.0 * 4.0);
        assert_eq!(p.derivative().coeffs(), &[-3.0, 0.0, 6.0]);
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let p = Polynomial::new(vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 1);
    }

    #[test]
    fn product_of_linear_factors() {
        let p = Polynomial::linear(-1.0, 1.0).mul(&Polynomial::linear(2.0, 1.0));
        assert_eq!(p.coeffs(), &[-2.0, 1.0, 1.0]);
    }

    #[test]
    fn roots_of_quadratic() {
        let p = Polynomial::new(vec![-2.0, 1.0, 1.0]);
        let (r, nreal) = order_roots(&p.roots().unwrap(), 1e-9);
        assert_eq!(nreal, 2);
        assert!((r[0].re + 2.0).abs() < 1e-14);
        assert!((r[1].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_zero_roots_split_off() {
        // x^2 (x^2 - 4)
        let p = Polynomial::new(vec![0.0, 0.0, -4.0, 0.0, 1.0]);
        let (r, nreal) = order_roots(&p.roots().unwrap(), 1e-9);
        assert_eq!(nreal, 4);
        let re: Vec<f64> = r.iter().map(|z| z.re).collect();
        assert_eq!(re[1], 0.0);
        assert_eq!(re[2], 0.0);
        assert!((re[0] + 2.0).abs() < 1e-15 && (re[3] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn complex_pairs_ordered() {
        // (x^2 + 1)(x - 3)
        let p = Polynomial::new(vec![-3.0, 1.0, -3.0, 1.0]);
        let (r, nreal) = order_roots(&p.roots().unwrap(), 1e-9);
        assert_eq!(nreal, 1);
        assert!((r[0].re - 3.0).abs() < 1e-14);
        assert!(r[1].im < 0.0 && r[2].im > 0.0);
        assert!((r[1].im + 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_rejected() {
        assert!(Polynomial::constant(3.0).roots().is_err());
    }
}
