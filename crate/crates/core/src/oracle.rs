//! Finite-difference eigensolver for `f'' + (2 eps - V(r)) f = 0`,
//! `f = r R`, with Dirichlet walls at `r_min` and `r_max`.
//!
//! The three-point Laplacian gives a symmetric tridiagonal matrix whose
//! eigenvalues `lambda` map to energies `eps = lambda / 2`. The lowest few are
//! located by Sturm-sequence bisection, eigenvectors by inverse iteration.
//! Nothing here touches the Heun machinery.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{turning_points, PhysicalSystem};

pub const DEFAULT_POINTS: usize = 6000;
/// Left wall in units of `1/K`.
pub const DEFAULT_R_MIN_SCALED: f64 = 1e-8;
/// `exp(-K^2 r^2 / 2) < 1e-12` once `K r > sqrt(54)`.
const GAUSSIAN_TAIL_SCALED: f64 = 7.348_469_228_349_534;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, points: usize) -> Result<Self> {
        if !(r_min > 0.0) || !(r_max > r_min) || !r_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid needs 0 < r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if points < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 16 points, got {points}"
            )));
        }
        Ok(Self {
            r_min,
            r_max,
            points,
        })
    }

    /// Domain sized from the outer turning point at `epsilon`:
    /// `r_max = max(1.5 r4, sqrt(54)/K)`.
    pub fn auto(sys: &PhysicalSystem, epsilon: f64, points: usize) -> Result<Self> {
        let kap = sys.kappa();
        let tail = GAUSSIAN_TAIL_SCALED / kap;
        let outer = turning_points(sys, epsilon)
            .ok()
            .and_then(|tp| tp.outer())
            .unwrap_or(0.0);
        let r_max = (1.5 * outer).max(tail);
        Self::new(DEFAULT_R_MIN_SCALED / kap, r_max, points)
    }

    pub fn spacing(&self) -> f64 {
        (self.r_max - self.r_min) / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.spacing()
    }

    /// Interior nodes, the ones carrying unknowns.
    pub fn interior(&self) -> Vec<f64> {
        (1..self.points - 1).map(|i| self.node(i)).collect()
    }

    /// Same interval, step halved.
    pub fn refined(&self) -> Self {
        Self {
            points: 2 * self.points - 1,
            ..*self
        }
    }

    /// The same grid in units where `k = 1`: all radii multiplied by `K`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            r_min: self.r_min * factor,
            r_max: self.r_max * factor,
            points: self.points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSolveResult {
    pub energies: Vec<f64>,
    /// `f = r R` on the interior nodes, `sum f^2 h = 1`.
    pub vectors: Vec<Vec<f64>>,
    pub node_counts: Vec<usize>,
    pub grid_used: RadialGrid,
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: f64,
}

impl Tridiagonal {
    fn build(sys: &PhysicalSystem, grid: &RadialGrid) -> Self {
        let h = grid.spacing();
        let inv_h2 = 1.0 / (h * h);
        let diag = grid
            .interior()
            .into_iter()
            .map(|r| 2.0 * inv_h2 + sys.effective_potential(r))
            .collect();
        Self { diag, off: -inv_h2 }
    }

    fn len(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x` (negative LDL^T pivots).
    fn sturm_count(&self, x: f64) -> usize {
        let off2 = self.off * self.off;
        let guard = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for &d in &self.diag[1..] {
            let q_safe = if q.abs() < guard { -guard } else { q };
            q = (d - x) - off2 / q_safe;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let r = 2.0 * self.off.abs();
        let lo = self.diag.iter().fold(f64::INFINITY, |m, &d| m.min(d - r));
        let hi = self
            .diag
            .iter()
            .fold(f64::NEG_INFINITY, |m, &d| m.max(d + r));
        (lo, hi)
    }

    /// Lowest `count` eigenvalues by bisection. Every Sturm count taken is
    /// remembered, so later indices start from the tightest known bracket.
    fn lowest(&self, count: usize) -> Vec<f64> {
        let (lo, hi_bound) = self.gershgorin();
        let mut probes: Vec<(f64, usize)> = vec![(lo, 0)];
        // upper bracket for the whole batch, grown geometrically from below
        let mut step = 1.0_f64.max(lo.abs() * 1e-3);
        let mut hi = lo + step;
        loop {
            let c = self.sturm_count(hi);
            probes.push((hi, c));
            if c >= count || hi >= hi_bound {
                break;
            }
            step *= 2.0;
            hi = (hi + step).min(hi_bound);
        }

        let mut out = Vec::with_capacity(count);
        for index in 0..count {
            let mut a = probes
                .iter()
                .filter(|p| p.1 <= index)
                .fold(f64::NEG_INFINITY, |m, p| m.max(p.0));
            let mut b = probes
                .iter()
                .filter(|p| p.1 > index)
                .fold(hi_bound, |m, p| m.min(p.0));
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                let c = self.sturm_count(mid);
                probes.push((mid, c));
                if c > index {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            out.push(0.5 * (a + b));
        }
        out
    }

    /// Solve `(T - shift) x = rhs` by LU without pivoting; tiny pivots are
    /// nudged so the near-singular solve still produces a huge, well-aligned
    /// vector.
    fn shifted_solve(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        let tiny = f64::EPSILON * self.off.abs().max(1.0);
        let mut u = vec![0.0; n];
        let mut y = rhs.to_vec();
        u[0] = self.diag[0] - shift;
        for i in 1..n {
            if u[i - 1].abs() < tiny {
                u[i - 1] = if u[i - 1] < 0.0 { -tiny } else { tiny };
            }
            let m = self.off / u[i - 1];
            u[i] = self.diag[i] - shift - m * self.off;
            y[i] -= m * y[i - 1];
        }
        if u[n - 1].abs() < tiny {
            u[n - 1] = tiny;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = y[n - 1] / u[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (y[i] - self.off * x[i + 1]) / u[i];
        }
        x
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off * v[i + 1];
                }
                s
            })
            .collect()
    }
}

fn unit_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inverse_iteration(t: &Tridiagonal, lambda: f64, previous: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = t.len();
    let scale = t.diag.iter().fold(0.0_f64, |m, d| m.max(d.abs())) + 2.0 * t.off.abs();
    // deterministic, non-symmetric start so no eigenvector is orthogonal to it
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 * 0.618_033_988_75).fract() - 0.5))
        .collect();
    unit_normalize(&mut v);
    for _ in 0..12 {
        let mut w = t.shifted_solve(lambda, &v);
        for p in previous {
            let c = dot(&w, p);
            w.iter_mut().zip(p).for_each(|(x, y)| *x -= c * y);
        }
        unit_normalize(&mut w);
        v = w;
        let tv = t.apply(&v);
        let resid = tv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if resid <= 1e-9 * scale {
            return Ok(v);
        }
    }
    Err(Error::NoConvergence(format!(
        "inverse iteration at lambda = {lambda} did not converge"
    )))
}

/// Interior sign changes, ignoring samples with `|f| <= 1e-10`.
pub fn node_count(vector: &[f64]) -> usize {
    let mut last_sign = 0.0;
    let mut count = 0;
    for &f in vector {
        if f.abs() <= 1e-10 {
            continue;
        }
        let s = f.signum();
        if last_sign != 0.0 && s != last_sign {
            count += 1;
        }
        last_sign = s;
    }
    count
}

/// Lowest `count` energies and eigenvectors.
pub fn fd_eigensolve(
    sys: &PhysicalSystem,
    grid: &RadialGrid,
    count: usize,
) -> Result<EigenSolveResult> {
    let lambdas = lowest_lambdas(sys, grid, count)?;
    let t = Tridiagonal::build(sys, grid);
    let h = grid.spacing();
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    for &lambda in &lambdas {
        let mut v = inverse_iteration(&t, lambda, &vectors)?;
        // sign: positive at the first significant sample
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * 1.0) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        vectors.push(v);
    }
    let node_counts = vectors.iter().map(|v| node_count(v)).collect();
    // unit Euclidean norm -> sum f^2 h = 1
    let s = 1.0 / h.sqrt();
    for v in &mut vectors {
        v.iter_mut().for_each(|x| *x *= s);
    }
    Ok(EigenSolveResult {
        energies: lambdas.iter().map(|l| 0.5 * l).collect(),
        vectors,
        node_counts,
        grid_used: *grid,
    })
}

fn lowest_lambdas(sys: &PhysicalSystem, grid: &RadialGrid, count: usize) -> Result<Vec<f64>> {
    let available = grid.points - 2;
    if count == 0 {
        return Err(Error::InvalidParameter(
            "need at least one eigenvalue".into(),
        ));
    }
    if count > available {
        return Err(Error::TooManyEigenvalues {
            requested: count,
            available,
        });
    }
    if !(sys.alpha.is_finite() && sys.beta.is_finite() && sys.k.is_finite()) {
        return Err(Error::InvalidParameter(
            "potential parameters must be finite".into(),
        ));
    }
    let out = Tridiagonal::build(sys, grid).lowest(count);
    for w in out.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::NoConvergence(format!(
                "eigenvalues not separated: {} and {}",
                w[0], w[1]
            )));
        }
    }
    Ok(out)
}

/// Lowest `count` energies only, skipping the eigenvectors.
pub fn fd_energies(sys: &PhysicalSystem, grid: &RadialGrid, count: usize) -> Result<Vec<f64>> {
    Ok(lowest_lambdas(sys, grid, count)?
        .into_iter()
        .map(|l| 0.5 * l)
        .collect())
}

/// One Richardson step for a second-order scheme: `(4 e(h/2) - e(h)) / 3`.
pub fn richardson_energies(
    sys: &PhysicalSystem,
    grid: &RadialGrid,
    count: usize,
) -> Result<Vec<f64>> {
    let coarse = fd_energies(sys, grid, count)?;
    let fine = fd_energies(sys, &grid.refined(), count)?;
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect())
}

/// Index of the eigenvalue closest to `epsilon` and its signed gap, if that
/// gap is within `rel_tol * max(1, |epsilon|)`.
pub fn match_energy(energies: &[f64], epsilon: f64, rel_tol: f64) -> Option<(usize, f64)> {
    let (idx, gap) = energies
        .iter()
        .enumerate()
        .map(|(i, &e)| (i, e - epsilon))
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
    (gap.abs() <= rel_tol * epsilon.abs().max(1.0)).then_some((idx, gap))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(l: u32) -> PhysicalSystem {
        PhysicalSystem::new(0.0, 0.0, 1.0, l).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(RadialGrid::new(0.0, 1.0, 100).is_err());
        assert!(RadialGrid::new(1.0, 0.5, 100).is_err());
        assert!(RadialGrid::new(1e-5, 10.0, 10).is_err());
        let g = RadialGrid::new(1.0, 2.0, 101).unwrap();
        assert!((g.spacing() - 0.01).abs() < 1e-15);
        assert_eq!(g.refined().points, 201);
    }

    #[test]
    fn auto_grid_covers_gaussian_tail() {
        let sys = oscillator(0);
        let g = RadialGrid::auto(&sys, 1.5, DEFAULT_POINTS).unwrap();
        assert!(g.r_max * g.r_max / 2.0 >= 27.0 - 1e-9);
        let sys = PhysicalSystem::new(0.0, -6.0, 1.0, 0).unwrap();
        let g = RadialGrid::auto(&sys, -4.0, DEFAULT_POINTS).unwrap();
        assert!(g.r_max >= 1.5 * 3.0);
    }

    #[test]
    fn oscillator_levels() {
        let grid = RadialGrid::new(1e-5, 12.0, 6000).unwrap();
        let res = fd_eigensolve(&oscillator(0), &grid, 3).unwrap();
        for (e, want) in res.energies.iter().zip([1.5, 3.5, 5.5]) {
            assert!((e - want).abs() < 1e-4 * want, "{e} vs {want}");
        }
        assert_eq!(res.node_counts, vec![0, 1, 2]);
        let h = grid.spacing();
        for v in &res.vectors {
            let n: f64 = v.iter().map(|x| x * x * h).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        for i in 0..3 {
            for j in 0..i {
                let o: f64 = dot(&res.vectors[i], &res.vectors[j]) * h;
                assert!(o.abs() < 1e-8, "<{i}|{j}> = {o}");
            }
        }
    }

    #[test]
    fn second_order_convergence() {
        let sys = oscillator(1);
        let coarse = RadialGrid::new(1e-8, 10.0, 500).unwrap();
        let e1 = fd_energies(&sys, &coarse, 1).unwrap()[0] - 2.5;
        let e2 = fd_energies(&sys, &coarse.refined(), 1).unwrap()[0] - 2.5;
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        let rich = richardson_energies(&sys, &coarse, 1).unwrap()[0];
        assert!((rich - 2.5).abs() < e2.abs() / 10.0);
    }

    #[test]
    fn n0_quasi_exact_level() {
        let sys = PhysicalSystem::new(1.0, 1.0, 1.0, 0).unwrap();
        let grid = RadialGrid::auto(&sys, 1.375, DEFAULT_POINTS).unwrap();
        let e = fd_energies(&sys, &grid, 1).unwrap()[0];
        assert!((e - 1.375).abs() < 1e-5 * 1.375, "{e}");
    }

    #[test]
    fn matching() {
        let energies = [1.500001, 3.5, 5.5];
        let (i, gap) = match_energy(&energies, 1.5, 1e-4).unwrap();
        assert_eq!(i, 0);
        assert!(gap.abs() < 1e-5);
        assert!(match_energy(&energies, 100.0, 1e-4).is_none());
        assert_eq!(match_energy(&energies, 3.50001, 1e-4).unwrap().0, 1);
    }

    #[test]
    fn count_limits() {
        let grid = RadialGrid::new(1e-5, 12.0, 16).unwrap();
        assert!(matches!(
            fd_eigensolve(&oscillator(0), &grid, 15),
            Err(Error::TooManyEigenvalues { .. })
        ));
        assert!(fd_eigensolve(&oscillator(0), &grid, 0).is_err());
    }

    #[test]
    fn nodes() {
        assert_eq!(node_count(&[0.0, 1.0, 2.0, 1.0, 0.0]), 0);
        assert_eq!(node_count(&[0.0, 1.0, -1.0, -2.0, 0.0]), 1);
        assert_eq!(node_count(&[1.0, 1e-12, -1e-12, 1.0]), 0);
        assert_eq!(node_count(&[1.0, -1.0, 1.0]), 2);
    }

    #[test]
    fn refinement_does_not_raise_levels_much() {
        let sys = PhysicalSystem::new(1.0, 0.5, 1.0, 1).unwrap();
        let g = RadialGrid::new(1e-8, 8.0, 800).unwrap();
        let a = fd_energies(&sys, &g, 3).unwrap();
        let b = fd_energies(&sys, &g.refined(), 3).unwrap();
        let wider = RadialGrid::new(1e-8, 10.0, 1000).unwrap();
        let c = fd_energies(&sys, &wider, 3).unwrap();
        for i in 0..3 {
            assert!(b[i] <= a[i] + 1e-3 * a[i].abs());
            assert!(c[i] <= a[i] + 1e-3 * a[i].abs());
        }
    }
}
