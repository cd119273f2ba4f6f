//! Gauss-Legendre rules (generated at runtime) and adaptive 1D quadrature.

use crate::error::QuadError;
use crate::scalar::Scalar;
use num_traits::Float;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule<R> {
    pub nodes: Vec<R>,
    pub weights: Vec<R>,
}

impl<R: Scalar> GaussRule<R> {
    /// Newton iteration on Legendre polynomials; accurate to ~1e-15 in f64.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![R::zero(); n];
        let mut weights = vec![R::zero(); n];
        for i in 0..n {
            // Chebyshev-like initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..60 {
                let (p, dp) = legendre_pd(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_pd(n, x);
            nodes[n - 1 - i] = R::lit(x);
            weights[n - 1 - i] = R::lit(2.0 / ((1.0 - x * x) * dp * dp));
        }
        GaussRule { nodes, weights }
    }

    /// Fixed-rule integral over [a, b].
    pub fn integrate<F: FnMut(R) -> R>(&self, a: R, b: R, mut f: F) -> R {
        let half = R::lit(0.5);
        let c = half * (a + b);
        let h = half * (b - a);
        let mut acc = R::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += *w * f(c + h * *x);
        }
        acc * h
    }
}

fn legendre_pd(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    if n == 1 {
        return (x, 1.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Adaptive bisection with a G12/G24 error estimate.
pub struct Adaptive<R> {
    coarse: GaussRule<R>,
    fine: GaussRule<R>,
    pub max_depth: usize,
    pub max_intervals: usize,
}

impl<R: Scalar> Default for Adaptive<R> {
    fn default() -> Self {
        Adaptive {
            coarse: GaussRule::new(12),
            fine: GaussRule::new(24),
            max_depth: 32,
            max_intervals: 100_000,
        }
    }
}

impl<R: Scalar> Adaptive<R> {
    /// Integrate f over [a, b] to the given relative tolerance.
    pub fn integrate<F: FnMut(R) -> R>(
        &self,
        a: R,
        b: R,
        rel_tol: R,
        mut f: F,
    ) -> Result<R, QuadError> {
        if a == b {
            return Ok(R::zero());
        }
        // First sweep for a magnitude scale.
        let rough = self.fine.integrate(a, b, &mut f);
        let scale = Float::max(Float::abs(rough), R::lit(1e-300));
        let tol = rel_tol * scale;
        let mut stack = vec![(a, b, tol, 0usize)];
        let mut total = R::zero();
        let mut worst_err = R::zero();
        let mut failed = false;
        let mut used = 0usize;
        while let Some((lo, hi, budget, depth)) = stack.pop() {
            used += 1;
            let coarse = self.coarse.integrate(lo, hi, &mut f);
            let fine = self.fine.integrate(lo, hi, &mut f);
            let err = Float::abs(fine - coarse);
            // roundoff floor: below it subdivision only amplifies noise
            let floor = R::lit(50.0) * R::epsilon() * (Float::abs(fine) + R::lit(1e-3) * (hi - lo) / (b - a) * scale);
            let budget = Float::max(budget, floor);
            if err <= budget || depth >= self.max_depth || used >= self.max_intervals {
                if err > budget {
                    failed = true;
                    worst_err = Float::max(worst_err, err);
                }
                total += fine;
            } else {
                let mid = R::lit(0.5) * (lo + hi);
                let half_budget = R::lit(0.5) * budget;
                stack.push((lo, mid, half_budget, depth + 1));
                stack.push((mid, hi, half_budget, depth + 1));
            }
        }
        if failed {
            return Err(QuadError::QuadratureNotConverged {
                a: a.f64(),
                b: b.f64(),
                err: worst_err.f64(),
            });
        }
        Ok(total)
    }
}
