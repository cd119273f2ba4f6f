//! Width-adapted reparametrization of the channel axis.
//!
//! `k(t) = int_0^t f^(-5/3)` rescales the axis so that unit steps in the new
//! variable correspond to slabs whose width tracks the local channel width.
//! `h` is the inverse of `k`; the shifted inverses
//! `hL(t) = h(-t) + beta* f(h(-t))` and `hR(t) = h(t) - beta* f(h(t))` bound
//! the width-adapted measurement windows. Whether the range of `k` is all of
//! R or has finite endpoints decides which truncation scheme applies.

use crate::error::GeometryError;
use crate::expr::{weight_integral_diverges, Direction};
use crate::geometry::{ChannelProfile, Window, WindowKind};
use crate::quad::Adaptive;
use crate::scalar::Scalar;
use num_traits::Float;

/// How the range of `k(t)` behaves at the two far fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    /// Range is all of R (both improper integrals diverge).
    BothInfinite,
    /// Range is a bounded interval (-L, R).
    BothFinite,
    /// Range is (-L, +inf): the left integral converges.
    LeftFinite,
    /// Range is (-inf, R): the right integral converges.
    RightFinite,
    /// The formula tree does not expose decidable asymptotics.
    FiniteHorizonUnknown,
}

#[derive(Debug, Clone)]
pub struct Reparametrization<R> {
    profile: ChannelProfile<R>,
    /// Tabulation abscissae (uniform on [-t_max, t_max]).
    ts: Vec<R>,
    /// k at the abscissae, strictly increasing.
    ks: Vec<R>,
    /// Fixed rule for sub-node refinements.
    rule: crate::quad::GaussRule<R>,
    pub beta_star: R,
    pub case_tag: CaseTag,
    /// Practical range endpoints: k(-t_max) and k(t_max).
    pub k_min: R,
    pub k_max: R,
    /// Analytic range endpoints where the integrals converge (quadrature
    /// estimates towards the tabulated horizon), `None` when divergent.
    pub l_bound: Option<R>,
    pub r_bound: Option<R>,
    /// Threshold above which the two width-adapted windows separate.
    pub t_star: R,
    /// Threshold above which hR(t) > 0.
    pub t_hat: R,
}

impl<R: Scalar> Reparametrization<R> {
    /// Tabulate on [-t_max, t_max] and locate the thresholds.
    pub fn build(profile: &ChannelProfile<R>, t_max: R) -> Result<Self, GeometryError> {
        assert!(t_max > R::zero());
        let beta_star = profile.beta_star()?;
        let n = 1024usize;
        let ad = Adaptive::default();
        let mut ts = Vec::with_capacity(2 * n + 1);
        for i in 0..=(2 * n) {
            ts.push(t_max * R::lit(i as f64 / n as f64 - 1.0));
        }
        // cumulative integral of f^(-5/3), anchored at k(0) = 0
        let mut ks = vec![R::zero(); ts.len()];
        for i in (0..n).rev() {
            let seg = ad
                .integrate(ts[i], ts[i + 1], R::lit(1e-12), |x| {
                    Float::powf(profile.width(x), R::lit(-5.0 / 3.0))
                })
                .map_err(|_| GeometryError::NonMonotoneK { t: ts[i].f64() })?;
            ks[i] = ks[i + 1] - seg;
        }
        for i in n..(ts.len() - 1) {
            let seg = ad
                .integrate(ts[i], ts[i + 1], R::lit(1e-12), |x| {
                    Float::powf(profile.width(x), R::lit(-5.0 / 3.0))
                })
                .map_err(|_| GeometryError::NonMonotoneK { t: ts[i].f64() })?;
            ks[i + 1] = ks[i] + seg;
        }
        for i in 0..ts.len() - 1 {
            if ks[i + 1] <= ks[i] {
                return Err(GeometryError::NonMonotoneK { t: ts[i].f64() });
            }
        }

        // symbolic case classification; fall back when undecidable
        let width = crate::expr::Expr::Sub(Box::new(profile.f2.clone()), Box::new(profile.f1.clone()));
        let q = 5.0 / 3.0;
        let div_minus = weight_integral_diverges(&width, q, Direction::MinusInf);
        let div_plus = weight_integral_diverges(&width, q, Direction::PlusInf);
        let case_tag = match (div_minus, div_plus) {
            (Some(true), Some(true)) => CaseTag::BothInfinite,
            (Some(false), Some(false)) => CaseTag::BothFinite,
            (Some(false), Some(true)) => CaseTag::LeftFinite,
            (Some(true), Some(false)) => CaseTag::RightFinite,
            _ => CaseTag::FiniteHorizonUnknown,
        };
        let l_bound = match div_minus {
            Some(false) => Some(-ks[0]),
            _ => None,
        };
        let r_bound = match div_plus {
            Some(false) => Some(*ks.last().unwrap()),
            _ => None,
        };

        let k_min = ks[0];
        let k_max = *ks.last().unwrap();
        let mut repar = Reparametrization {
            profile: profile.clone(),
            ts,
            ks,
            rule: crate::quad::GaussRule::new(16),
            beta_star,
            case_tag,
            k_min,
            k_max,
            l_bound,
            r_bound,
            t_star: R::zero(),
            t_hat: R::zero(),
        };

        repar.t_star = repar.bisect_threshold("t_star", |r, t| r.h_left(t) - r.h_right(t), t_max)?;
        repar.t_hat = repar.bisect_threshold("t_hat", |r, t| -r.h_right(t), t_max)?;
        Ok(repar)
    }

    /// k(t): tabulated at the nodes, fixed fine-rule quadrature in between
    /// (sub-node intervals are short and the integrand smooth).
    pub fn k(&self, t: R) -> R {
        let i = match self.ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.ks[i],
            Err(i) => i,
        };
        let i = i.clamp(1, self.ts.len() - 1);
        let base = self.ts[i - 1];
        self.ks[i - 1]
            + self.rule.integrate(base, t, |x| Float::powf(self.profile.width(x), R::lit(-5.0 / 3.0)))
    }

    /// Inverse of k, by bracketed Newton iteration on the tabulated nodes.
    pub fn h(&self, y: R) -> Result<R, GeometryError> {
        if y < self.k_min || y > self.k_max {
            return Err(GeometryError::OutsideHorizon { t: y.f64() });
        }
        let i = match self.ks.binary_search_by(|x| x.partial_cmp(&y).unwrap()) {
            Ok(i) => return Ok(self.ts[i]),
            Err(i) => i.clamp(1, self.ks.len() - 1),
        };
        let (mut lo, mut hi) = (self.ts[i - 1], self.ts[i]);
        let (mut klo, mut khi) = (self.ks[i - 1], self.ks[i]);
        let mut t = lo + (hi - lo) * (y - klo) / (khi - klo);
        for _ in 0..80 {
            let kt = self.k(t);
            let resid = kt - y;
            if Float::abs(resid) <= R::lit(1e-14) * Float::max(R::one(), Float::abs(y)) {
                return Ok(t);
            }
            if resid > R::zero() {
                hi = t;
                khi = kt;
            } else {
                lo = t;
                klo = kt;
            }
            // Newton step with k'(t) = f^(-5/3)(t), safeguarded by the bracket
            let slope = Float::powf(self.profile.width(t), R::lit(-5.0 / 3.0));
            let mut next = t - resid / slope;
            if !(next > lo && next < hi) {
                next = lo + (hi - lo) * (y - klo) / (khi - klo);
            }
            if next == t {
                break;
            }
            t = next;
        }
        Ok(t)
    }

    /// hL(t) = h(-t) + beta* f(h(-t)).
    pub fn h_left(&self, t: R) -> R {
        let x = self.h(-t).unwrap_or(self.ts[0]);
        x + self.beta_star * self.profile.width(x)
    }

    /// hR(t) = h(t) - beta* f(h(t)).
    pub fn h_right(&self, t: R) -> R {
        let x = self.h(t).unwrap_or(*self.ts.last().unwrap());
        x - self.beta_star * self.profile.width(x)
    }

    /// Locate the zero of a decreasing-to-negative indicator by sampling plus
    /// bisection to 1e-10 absolute.
    fn bisect_threshold(
        &self,
        what: &'static str,
        ind: impl Fn(&Self, R) -> R,
        _t_max: R,
    ) -> Result<R, GeometryError> {
        let hi_limit = Float::min(Float::abs(self.k_min), self.k_max) * R::lit(0.999999);
        let n = 256;
        let mut lo = hi_limit * R::lit(1e-9);
        if ind(self, lo) < R::zero() {
            return Ok(lo); // threshold below resolution: effectively zero
        }
        let mut hi = lo;
        let mut found = false;
        for i in 1..=n {
            let t = hi_limit * R::lit(i as f64 / n as f64);
            if ind(self, t) < R::zero() {
                hi = t;
                found = true;
                break;
            }
            lo = t;
        }
        if !found {
            return Err(GeometryError::HorizonTooShort { what, t_max: hi_limit.f64() });
        }
        for _ in 0..200 {
            if (hi - lo).f64() < 1e-10 {
                break;
            }
            let mid = R::lit(0.5) * (lo + hi);
            if ind(self, mid) < R::zero() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(R::lit(0.5) * (lo + hi))
    }
}

/// Energy-measurement windows at parameter t.
pub fn energy_windows<R: Scalar>(
    profile: &ChannelProfile<R>,
    repar: Option<&Reparametrization<R>>,
    t: R,
    kind: WindowKind,
) -> Result<Vec<Window<R>>, GeometryError> {
    match kind {
        WindowKind::Unit => Ok(vec![
            Window { lo: -t, hi: -t + R::one() },
            Window { lo: t - R::one(), hi: t },
        ]),
        WindowKind::Hat => {
            let repar = repar.expect("Hat windows need a reparametrization");
            // forces BetaZero for straight channels before anything else
            let _ = profile.beta_star()?;
            let lo1 = repar.h(-t)?;
            let hi1 = repar.h_left(t);
            let lo2 = repar.h_right(t);
            let hi2 = repar.h(t)?;
            // below t* the two windows collide and the plateau is empty
            if hi1 >= lo2 {
                return Err(GeometryError::DegenerateWindow { lo: hi1.f64(), hi: lo2.f64() });
            }
            for (lo, hi) in [(lo1, hi1), (lo2, hi2)] {
                if hi <= lo {
                    return Err(GeometryError::DegenerateWindow { lo: lo.f64(), hi: hi.f64() });
                }
            }
            Ok(vec![Window { lo: lo1, hi: hi1 }, Window { lo: lo2, hi: hi2 }])
        }
        WindowKind::BetaStar => {
            match profile.beta_star() {
                Ok(bs) => {
                    let w = bs * profile.width(t);
                    let win = if t >= R::zero() {
                        Window { lo: t - w, hi: t }
                    } else {
                        Window { lo: t, hi: t + w }
                    };
                    if win.hi <= win.lo {
                        return Err(GeometryError::DegenerateWindow {
                            lo: win.lo.f64(),
                            hi: win.hi.f64(),
                        });
                    }
                    Ok(vec![win])
                }
                // straight walls: width-adapted windows degenerate to unit slabs
                Err(GeometryError::BetaZero) => Ok(vec![if t >= R::zero() {
                    Window { lo: t - R::one(), hi: t }
                } else {
                    Window { lo: t, hi: t + R::one() }
                }]),
                Err(e) => Err(e),
            }
        }
    }
}
