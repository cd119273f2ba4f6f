//! C-infinity monotone step used by the flux carrier.
//!
//! mu(t) = 1 for t <= 0 and 0 for t >= 1, realized as 1 - S(t) with the
//! bump-quotient step S(t) = sig(t) / (sig(t) + sig(1-t)), sig(t) = exp(-1/t)
//! for t > 0. Plateau values are exact and supp mu' = [0, 1] exactly.

use crate::scalar::Scalar;
use num_traits::Float;

#[derive(Debug, Clone, Copy)]
pub struct Mollifier;

fn sig_jets<R: Scalar>(t: R) -> (R, R, R) {
    if t <= R::zero() {
        return (R::zero(), R::zero(), R::zero());
    }
    let e = Float::exp(-t.recip());
    let t2 = t * t;
    let d1 = e / t2;
    let d2 = e * (R::one() / (t2 * t2) - R::lit(2.0) / (t2 * t));
    (e, d1, d2)
}

impl Mollifier {
    /// (mu, mu', mu'') at t.
    pub fn jets<R: Scalar>(&self, t: R) -> (R, R, R) {
        if t <= R::zero() {
            return (R::one(), R::zero(), R::zero());
        }
        if t >= R::one() {
            return (R::zero(), R::zero(), R::zero());
        }
        let (a, a1, a2) = sig_jets(t);
        let (b, nb1, b2) = sig_jets(R::one() - t);
        let b1 = -nb1; // chain rule through 1 - t
        let s = a + b;
        let sv = a / s;
        let n = a1 * b - a * b1;
        let s1 = n / (s * s);
        let n1 = a2 * b - a * b2;
        let s2 = (n1 * s - R::lit(2.0) * n * (a1 + b1)) / (s * s * s);
        (R::one() - sv, -s1, -s2)
    }

    pub fn value<R: Scalar>(&self, t: R) -> R {
        self.jets(t).0
    }

    /// Sup norms of mu' and mu'' by dense tabulation.
    pub fn derivative_norms<R: Scalar>(&self) -> (R, R) {
        let mut m1 = R::zero();
        let mut m2 = R::zero();
        let n = 20_000;
        for i in 1..n {
            let t = R::lit(i as f64 / n as f64);
            let (_, d1, d2) = self.jets(t);
            m1 = Float::max(m1, Float::abs(d1));
            m2 = Float::max(m2, Float::abs(d2));
        }
        (m1, m2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus_are_exact() {
        let m = Mollifier;
        assert_eq!(m.value(-0.5_f64), 1.0);
        assert_eq!(m.value(0.0_f64), 1.0);
        assert_eq!(m.value(1.0_f64), 0.0);
        assert_eq!(m.value(7.0_f64), 0.0);
        let (mu, d1, d2) = m.jets(0.5_f64);
        assert!((mu - 0.5).abs() < 1e-15); // symmetric step
        assert!(d1 < 0.0);
        assert!(d2.abs() < 1e-12); // inflection at the midpoint
    }

    #[test]
    fn monotone_decreasing_with_supported_derivative() {
        let m = Mollifier;
        let mut prev = 1.0f64;
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            let (v, d1, _) = m.jets(t);
            assert!(d1 <= 0.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        // derivatives vanish outside [0, 1]
        assert_eq!(m.jets(-1e-9_f64), (1.0, 0.0, 0.0));
        assert_eq!(m.jets(1.0 + 1e-9_f64), (0.0, 0.0, 0.0));
    }

    #[test]
    fn jets_match_finite_differences() {
        let m = Mollifier;
        let h = 1e-6;
        for &t in &[0.11, 0.33, 0.5, 0.62, 0.9] {
            let (_, d1, d2) = m.jets(t);
            let fd1 = (m.value(t + h) - m.value(t - h)) / (2.0 * h);
            let fd2 = (m.value(t + h) - 2.0 * m.value(t) + m.value(t - h)) / (h * h);
            assert!((d1 - fd1).abs() < 1e-6 * d1.abs().max(1.0), "t={t}");
            assert!((d2 - fd2).abs() < 1e-3 * d2.abs().max(1.0), "t={t}");
        }
    }

    #[test]
    fn norms_finite() {
        let (m1, m2): (f64, f64) = Mollifier.derivative_norms();
        assert!(m1 > 1.0 && m1 < 10.0, "|mu'| = {m1}");
        assert!(m2 > 1.0 && m2 < 100.0, "|mu''| = {m2}");
    }
}
