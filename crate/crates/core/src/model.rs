//! The physical system `U = -alpha/r + beta r + k r^2` in scaled units, where
//! the radial equation reads
//! `R'' + (2/r) R' + (2 eps + alpha/r - l(l+1)/r^2 - beta r - k r^2) R = 0`,
//! together with its classical turning points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{order_roots, Complex64, Polynomial};

/// Tolerance used to decide whether a quartic root is real.
pub const REAL_ROOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSystem {
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
    pub l: u32,
}

impl PhysicalSystem {
    pub fn new(alpha: f64, beta: f64, k: f64, l: u32) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "harmonic coefficient k must be positive and finite, got {k}"
            )));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Coulomb strength alpha must be non-negative and finite, got {alpha}"
            )));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "linear coefficient beta must be finite, got {beta}"
            )));
        }
        Ok(Self { alpha, beta, k, l })
    }

    /// Quartic scale `K = k^(1/4)`.
    pub fn kappa(&self) -> f64 {
        self.k.sqrt().sqrt()
    }

    pub fn centrifugal(&self) -> f64 {
        let l = self.l as f64;
        l * (l + 1.0)
    }

    /// `V(r) = -alpha/r + l(l+1)/r^2 + beta r + k r^2`, so that `P^2 = 2 eps - V`.
    pub fn effective_potential(&self, r: f64) -> f64 {
        -self.alpha / r + self.centrifugal() / (r * r) + self.beta * r + self.k * r * r
    }

    /// Left side of `-k r^4 - beta r^3 + 2 eps r^2 + alpha r - l(l+1) = 0`.
    pub fn turning_quartic(&self, epsilon: f64) -> Polynomial {
        Polynomial::new(vec![
            -self.centrifugal(),
            self.alpha,
            2.0 * epsilon,
            -self.beta,
            -self.k,
        ])
    }

    /// The system in units where `k = 1`: `(alpha/K, beta/K^3, 1)`.
    pub fn rescaled(&self) -> Self {
        let kap = self.kappa();
        Self {
            alpha: self.alpha / kap,
            beta: self.beta / kap.powi(3),
            k: 1.0,
            l: self.l,
        }
    }
}

/// `P^2(r) = 2 eps + alpha/r - l(l+1)/r^2 - beta r - k r^2`.
pub fn effective_momentum_squared(sys: &PhysicalSystem, epsilon: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius(r));
    }
    Ok(2.0 * epsilon - sys.effective_potential(r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurningPointSet {
    /// Real roots ascending, then complex conjugate pairs.
    pub roots: [Complex64; 4],
    pub real_count: usize,
    pub vieta_residuals: [f64; 4],
}

impl TurningPointSet {
    pub fn real_roots(&self) -> impl Iterator<Item = f64> + '_ {
        self.roots[..self.real_count].iter().map(|z| z.re)
    }

    /// Largest real root, the outer edge of classically allowed motion.
    pub fn outer(&self) -> Option<f64> {
        self.real_roots().filter(|&r| r > 0.0).last()
    }
}

/// All four roots of the turning-point quartic, with multiplicity.
pub fn turning_points(sys: &PhysicalSystem, epsilon: f64) -> Result<TurningPointSet> {
    let quartic = sys.turning_quartic(epsilon);
    let raw = quartic.roots()?;
    let (ordered, real_count) = order_roots(&raw, REAL_ROOT_TOL);
    let roots: [Complex64; 4] = ordered
        .try_into()
        .map_err(|_| Error::InvalidParameter("quartic did not yield four roots".into()))?;
    let vieta_residuals = vieta_residuals(&roots, sys, epsilon);
    Ok(TurningPointSet {
        roots,
        real_count,
        vieta_residuals,
    })
}

/// Absolute defects of the four symmetric-function identities
/// `e1 = -beta/k`, `e2 = -2 eps/k`, `e3 = alpha/k`, `e4 = l(l+1)/k`.
pub fn vieta_residuals(roots: &[Complex64; 4], sys: &PhysicalSystem, epsilon: f64) -> [f64; 4] {
    let [r1, r2, r3, r4] = *roots;
    let e1 = r1 + r2 + r3 + r4;
    let e2 = r1 * r2 + r1 * r3 + r1 * r4 + r2 * r3 + r2 * r4 + r3 * r4;
    let e3 = r2 * r3 * r4 + r1 * r3 * r4 + r1 * r2 * r4 + r1 * r2 * r3;
    let e4 = r1 * r2 * r3 * r4;
    let k = sys.k;
    [
        (e1 + sys.beta / k).norm(),
        (e2 + 2.0 * epsilon / k).norm(),
        (e3 - sys.alpha / k).norm(),
        (e4 - sys.centrifugal() / k).norm(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(alpha: f64, beta: f64, k: f64, l: u32) -> PhysicalSystem {
        PhysicalSystem::new(alpha, beta, k, l).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PhysicalSystem::new(1.0, 0.0, 0.0, 0).is_err());
        assert!(PhysicalSystem::new(1.0, 0.0, -1.0, 0).is_err());
        assert!(PhysicalSystem::new(-0.5, 0.0, 1.0, 0).is_err());
        assert!(PhysicalSystem::new(1.0, f64::NAN, 1.0, 0).is_err());
    }

    #[test]
    fn kappa_fourth_power() {
        for k in [1e-3, 0.5, 1.0, 16.0, 7.3e4] {
            let kap = sys(0.0, 0.0, k, 0).kappa();
            assert!((kap.powi(4) - k).abs() <= 4.0 * f64::EPSILON * k);
        }
    }

    #[test]
    fn momentum_zero_at_oscillator_turning_point() {
        let s = sys(0.0, 0.0, 1.0, 0);
        assert_eq!(effective_momentum_squared(&s, 2.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn momentum_diverges_at_origin_for_l_positive() {
        let s = sys(1.0, 0.0, 1.0, 1);
        let near = effective_momentum_squared(&s, 1.0, 1e-6).unwrap();
        assert!(near < -1e11);
        let far = effective_momentum_squared(&s, 1.0, 1e6).unwrap();
        assert!(far < -1e11);
    }

    #[test]
    fn momentum_matches_quartic_over_r_squared() {
        let s = sys(1.0, 1.0, 1.0, 1);
        let r = 1.0;
        let p2 = effective_momentum_squared(&s, 3.0, r).unwrap();
        // quartic value evaluated independently
        let q = -r.powi(4) - r.powi(3) + 6.0 * r * r + r - 2.0;
        assert!((p2 - q / (r * r)).abs() < 1e-15);
        assert_eq!(p2, 3.0);
    }

    #[test]
    fn non_positive_radius_rejected() {
        let s = sys(1.0, 0.0, 1.0, 0);
        assert!(matches!(
            effective_momentum_squared(&s, 1.0, 0.0),
            Err(Error::NonPositiveRadius(_))
        ));
        assert!(effective_momentum_squared(&s, 1.0, -1.0).is_err());
    }

    #[test]
    fn oscillator_turning_points() {
        let tp = turning_points(&sys(0.0, 0.0, 1.0, 0), 2.0).unwrap();
        assert_eq!(tp.real_count, 4);
        let re: Vec<f64> = tp.real_roots().collect();
        assert_eq!(re, vec![-2.0, 0.0, 0.0, 2.0]);
        assert!(tp.vieta_residuals.iter().all(|&v| v < 1e-12));
    }

    #[test]
    fn two_negative_two_positive_pattern() {
        let s = sys(1.0, 0.1, 1.0, 1);
        let tp = turning_points(&s, 3.0).unwrap();
        assert_eq!(tp.real_count, 4);
        let re: Vec<f64> = tp.real_roots().collect();
        assert!(re[0] < 0.0 && re[1] < 0.0 && re[2] > 0.0 && re[3] > 0.0);
        let q = s.turning_quartic(3.0);
        for r in re {
            assert!(q.eval(r).abs() < 1e-12 * q.magnitude_at(r));
        }
        // classically allowed between the two positive roots
        let mid = 0.5 * (tp.roots[2].re + tp.roots[3].re);
        assert!(effective_momentum_squared(&s, 3.0, mid).unwrap() > 0.0);
    }

    #[test]
    fn vieta_exact_for_constructed_roots() {
        // -(r+2)(r+1)(r-1/2)(r-2) = -r^4 - 0.5 r^3 + 4.5 r^2 + 2 r - 2
        let s = sys(2.0, 0.5, 1.0, 1);
        let eps = 2.25;
        let roots = [-2.0, -1.0, 0.5, 2.0].map(|r| Complex64::new(r, 0.0));
        let res = vieta_residuals(&roots, &s, eps);
        assert!(res.iter().all(|&v| v < 1e-12), "{res:?}");

        let mut perturbed = roots;
        perturbed[2].re += 1e-3;
        let res_p = vieta_residuals(&perturbed, &s, eps);
        assert!(res_p.iter().any(|&v| v > 1e-4));

        let tp = turning_points(&s, eps).unwrap();
        for (got, want) in tp.real_roots().zip([-2.0, -1.0, 0.5, 2.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn vieta_from_root_finder() {
        let s = sys(1.0, 1.0, 1.0, 1);
        let tp = turning_points(&s, 3.0).unwrap();
        assert!(
            tp.vieta_residuals.iter().all(|&v| v < 1e-9),
            "{:?}",
            tp.vieta_residuals
        );
    }

    #[test]
    fn l_zero_has_exact_zero_root() {
        let tp = turning_points(&sys(0.7, -0.3, 2.0, 0), 1.1).unwrap();
        assert!(tp.roots.iter().any(|z| z.re == 0.0 && z.im == 0.0));
    }
}
