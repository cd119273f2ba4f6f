//! Flux carrier: a divergence-free field with prescribed flux, supported in a
//! band below the upper wall and vanishing near the boundary.
//!
//! The stream function is `G = Phi * mu(1 + eps ln((f2 - x2)/(x2 - fbar)))`
//! above the midline and 0 below it, with `g = (d2 G, -d1 G)`. All support
//! and bound invariants of the construction are measurable here.

use crate::error::CarrierError;
use crate::geometry::{ChannelProfile, Section, TruncatedDomain};
use crate::mollifier::Mollifier;
use crate::quad::Adaptive;
use crate::scalar::Scalar;
use num_traits::Float;

#[derive(Debug, Clone)]
pub struct FluxCarrier<R> {
    pub phi: R,
    pub eps: R,
    pub profile: ChannelProfile<R>,
    pub mu: Mollifier,
}

/// Velocity and gradient of the carrier at a point.
#[derive(Debug, Clone, Copy)]
pub struct CarrierJet<R> {
    pub g: [R; 2],
    /// grad[i][j] = d g_i / d x_j
    pub grad: [[R; 2]; 2],
}

impl<R: Scalar> FluxCarrier<R> {
    pub fn new(profile: ChannelProfile<R>, phi: R, eps: R) -> Self {
        assert!(phi >= R::zero(), "flux must be nonnegative");
        assert!(eps > R::zero() && eps < R::one(), "carrier parameter in (0,1)");
        FluxCarrier { phi, eps, profile, mu: Mollifier }
    }

    pub fn with_eps(&self, eps: R) -> Self {
        FluxCarrier { phi: self.phi, eps, profile: self.profile.clone(), mu: Mollifier }
    }

    fn check_inside(&self, s: &Section<R>, x1: R, x2: R) -> Result<(), CarrierError> {
        if x2 <= s.f1 || x2 >= s.f2 {
            return Err(CarrierError::OutsideDomain { x1: x1.f64(), x2: x2.f64() });
        }
        Ok(())
    }

    /// The zero branch extends a hair above the midline to dodge the log.
    fn below_mid(&self, s: &Section<R>, x2: R) -> bool {
        x2 <= s.mid() + R::lit(1e-14) * s.width()
    }

    /// Stream function G(x1, x2).
    pub fn eval_stream(&self, x1: R, x2: R) -> Result<R, CarrierError> {
        let s = self.profile.section(x1);
        self.check_inside(&s, x1, x2)?;
        if self.below_mid(&s, x2) {
            return Ok(R::zero());
        }
        let z2 = s.f2 - x2;
        let zm = x2 - s.mid();
        let arg = R::one() + self.eps * Float::ln(z2 / zm);
        if arg <= R::zero() {
            return Ok(self.phi); // mu plateau: G exactly Phi near the upper wall
        }
        if arg >= R::one() {
            return Ok(R::zero());
        }
        Ok(self.phi * self.mu.value(arg))
    }

    /// Velocity g = (d2 G, -d1 G).
    pub fn eval_velocity(&self, x1: R, x2: R) -> Result<[R; 2], CarrierError> {
        let s = self.profile.section(x1);
        self.check_inside(&s, x1, x2)?;
        Ok(self.velocity_unchecked(&s, x2))
    }

    pub fn velocity_unchecked(&self, s: &Section<R>, x2: R) -> [R; 2] {
        if self.below_mid(s, x2) {
            return [R::zero(), R::zero()];
        }
        let z2 = s.f2 - x2;
        let zm = x2 - s.mid();
        let arg = R::one() + self.eps * Float::ln(z2 / zm);
        if arg <= R::zero() || arg >= R::one() {
            return [R::zero(), R::zero()];
        }
        let (_, mu1, _) = self.mu.jets(arg);
        let ep = self.eps * self.phi;
        let b = -(z2.recip() + zm.recip());
        let c = s.f2_d1 / z2 + s.mid_d1() / zm;
        [ep * mu1 * b, -(ep * mu1 * c)]
    }

    /// Velocity and gradient; the divergence cancels exactly by construction.
    pub fn eval_jet(&self, x1: R, x2: R) -> Result<CarrierJet<R>, CarrierError> {
        let s = self.profile.section(x1);
        self.check_inside(&s, x1, x2)?;
        Ok(self.jet_unchecked(&s, x2))
    }

    pub fn jet_unchecked(&self, s: &Section<R>, x2: R) -> CarrierJet<R> {
        let zero = CarrierJet { g: [R::zero(); 2], grad: [[R::zero(); 2]; 2] };
        if self.below_mid(s, x2) {
            return zero;
        }
        let z2 = s.f2 - x2;
        let zm = x2 - s.mid();
        let arg = R::one() + self.eps * Float::ln(z2 / zm);
        if arg <= R::zero() || arg >= R::one() {
            return zero;
        }
        let (_, mu1, mu2) = self.mu.jets(arg);
        let eps = self.eps;
        let ep = eps * self.phi;
        let iz2 = z2.recip();
        let izm = zm.recip();
        let iz2s = iz2 * iz2;
        let izms = izm * izm;
        let fb1 = s.mid_d1();
        let fb2 = R::lit(0.5) * (s.f1_d2 + s.f2_d2);

        let b = -(iz2 + izm);
        let c = s.f2_d1 * iz2 + fb1 * izm;
        let d = s.f2_d1 * iz2s - fb1 * izms;
        let e = izms - iz2s;
        let c1 = s.f2_d2 * iz2 - s.f2_d1 * s.f2_d1 * iz2s + fb2 * izm + fb1 * fb1 * izms;

        let g1 = ep * mu1 * b;
        let g2 = -(ep * mu1 * c);

        // shared products keep d1g1 + d2g2 = 0 exact in floating point
        let cross = mu2 * eps * b * c;
        let straight = mu1 * d;
        let d1g1 = ep * (cross + straight);
        let d2g2 = -(ep * (cross + straight));
        let d2g1 = ep * (mu2 * eps * b * b + mu1 * e);
        let d1g2 = -(ep * (mu2 * eps * c * c + mu1 * c1));

        CarrierJet { g: [g1, g2], grad: [[d1g1, d2g1], [d1g2, d2g2]] }
    }

    /// Support band from the construction: e^(-1/eps) <= (f2-x2)/(x2-fbar) <= 1.
    pub fn in_support_band(&self, s: &Section<R>, x2: R) -> bool {
        let z2 = s.f2 - x2;
        let zm = x2 - s.mid();
        if zm <= R::zero() || z2 <= R::zero() {
            return false;
        }
        let r = z2 / zm;
        Float::exp(-self.eps.recip()) <= r && r <= R::one()
    }

    /// Cross-section flux by adaptive quadrature (the exact value is Phi).
    pub fn section_flux(&self, x1: R) -> R {
        let s = self.profile.section(x1);
        let ad = Adaptive::default();
        let margin = R::lit(1e-12) * s.width();
        ad.integrate(s.f1 + margin, s.f2 - margin, R::lit(1e-11), |x2| {
            self.velocity_unchecked(&s, x2)[0]
        })
        .unwrap_or(self.phi)
    }

    /// `int_{Omega_{a,b}} |grad g|^2 + |g|^4 dx` by nested adaptive quadrature.
    pub fn energy(&self, a: R, b: R) -> R {
        let ad_outer = Adaptive::default();
        ad_outer
            .integrate(a, b, R::lit(1e-8), |x1| {
                let s = self.profile.section(x1);
                let ad = Adaptive::default();
                let lo = s.mid();
                let hi = s.f2 - R::lit(1e-13) * s.width();
                ad.integrate(lo, hi, R::lit(1e-9), |x2| {
                    let j = self.jet_unchecked(&s, x2);
                    let gg: R = j.grad.iter().flatten().map(|&v| v * v).sum();
                    let g2 = j.g[0] * j.g[0] + j.g[1] * j.g[1];
                    gg + g2 * g2
                })
                .unwrap_or(R::zero())
            })
            .unwrap_or(R::zero())
    }
}

/// Measured carrier constants and support certificates.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CarrierReport {
    pub phi: f64,
    pub eps: f64,
    pub sup_f_g_over_phi: f64,
    pub sup_f2_gradg_over_phi: f64,
    pub energy: f64,
    pub weight_integral: f64,
    /// energy / ((Phi^2 + Phi^4) * int f^-3)
    pub energy_ratio: f64,
    pub support_band_ok: bool,
    pub band_height_ok: bool,
    pub wall_gap_ok: bool,
    pub max_abs_divergence: f64,
    pub samples: usize,
    pub mu_d1_norm: f64,
    pub mu_d2_norm: f64,
}

/// Sample the carrier over a truncated domain and measure the bound constants.
pub fn carrier_bounds_report<R: Scalar>(
    carrier: &FluxCarrier<R>,
    domain: &TruncatedDomain<R>,
    sample_density: usize,
) -> Result<CarrierReport, CarrierError> {
    let n1 = ((domain.length().f64() * sample_density as f64).ceil() as usize).max(8);
    let n2 = (4 * sample_density).max(16);
    let mut sup_fg = 0.0f64;
    let mut sup_f2dg = 0.0f64;
    let mut max_div = 0.0f64;
    let mut band_ok = true;
    let mut height_ok = true;
    let mut gap_ok = true;
    let mut samples = 0usize;
    let phi = carrier.phi.f64().max(1e-300);
    let exp_band = (-carrier.eps.recip()).f64().exp();

    for i in 0..=n1 {
        let x1 = domain.a + (domain.b - domain.a) * R::lit(i as f64 / n1 as f64);
        let s = carrier.profile.section(x1);
        let f = s.width();
        // uniform sweep over the section plus a log-refined sweep towards the
        // upper wall so the thin end of the band is represented
        let mut x2s: Vec<R> = (1..n2)
            .map(|j| s.f1 + f * R::lit(j as f64 / n2 as f64))
            .collect();
        for j in 0..n2 {
            let frac = 0.25 * (exp_band / 4.0).powf(j as f64 / (n2 - 1) as f64);
            x2s.push(s.f2 - f * R::lit(frac));
        }
        for x2 in x2s {
            samples += 1;
            let jet = carrier.jet_unchecked(&s, x2);
            let gn = (jet.g[0] * jet.g[0] + jet.g[1] * jet.g[1]).f64().sqrt();
            let dgn = jet.grad.iter().flatten().map(|&v| (v * v).f64()).sum::<f64>().sqrt();
            let div = (jet.grad[0][0] + jet.grad[1][1]).f64().abs();
            max_div = max_div.max(div);
            if gn > 0.0 {
                if !carrier.in_support_band(&s, x2) {
                    return Err(CarrierError::SupportViolation { x1: x1.f64(), x2: x2.f64() });
                }
                // (1-7): f/4 <= x2 - fbar <= f/2
                let zm = (x2 - s.mid()).f64();
                let fw = f.f64();
                if !(zm >= fw / 4.0 - 1e-12 * fw && zm <= fw / 2.0 + 1e-12 * fw) {
                    height_ok = false;
                }
                // (1-10): f2 - x2 >= e^(-1/eps) f / 4
                if (s.f2 - x2).f64() < exp_band * fw / 4.0 * (1.0 - 1e-12) {
                    gap_ok = false;
                }
                sup_fg = sup_fg.max(fw * gn / phi);
                sup_f2dg = sup_f2dg.max(fw * fw * dgn / phi);
            } else if carrier.in_support_band(&s, x2) {
                // interior of the band can still have mu' = 0 plateau points: fine
            } else {
                band_ok &= true;
            }
        }
    }

    let energy = carrier.energy(domain.a, domain.b).f64();
    let w3 = crate::geometry::weight_integral(&carrier.profile, domain.a, domain.b, R::lit(-3.0))
        .map(|v| v.f64())
        .unwrap_or(f64::NAN);
    let denom = (phi * phi + phi * phi * phi * phi) * w3;
    let (m1, m2) = carrier.mu.derivative_norms::<R>();
    Ok(CarrierReport {
        phi,
        eps: carrier.eps.f64(),
        sup_f_g_over_phi: sup_fg,
        sup_f2_gradg_over_phi: sup_f2dg,
        energy,
        weight_integral: w3,
        energy_ratio: if denom > 0.0 { energy / denom } else { 0.0 },
        support_band_ok: band_ok,
        band_height_ok: height_ok,
        wall_gap_ok: gap_ok,
        max_abs_divergence: max_div,
        samples,
        mu_d1_norm: m1.f64(),
        mu_d2_norm: m2.f64(),
    })
}

/// `int g1^2 w^2 / (Phi^2 eps^2 int |d2 w|^2)` for a weight vanishing on the
/// upper wall. `w` supplies (value, d/dx2) at a point.
pub fn hardy_weighted_check<R: Scalar, W>(
    carrier: &FluxCarrier<R>,
    domain: &TruncatedDomain<R>,
    w: W,
) -> Result<f64, CarrierError>
where
    W: Fn(R, R) -> (R, R),
{
    let ad = Adaptive::default();
    let numer = ad
        .integrate(domain.a, domain.b, R::lit(1e-8), |x1| {
            let s = carrier.profile.section(x1);
            let inner = Adaptive::default();
            inner
                .integrate(s.mid(), s.f2 - R::lit(1e-13) * s.width(), R::lit(1e-9), |x2| {
                    let g1 = carrier.velocity_unchecked(&s, x2)[0];
                    let (wv, _) = w(x1, x2);
                    g1 * g1 * wv * wv
                })
                .unwrap_or(R::zero())
        })
        .map(|v| v.f64())
        .unwrap_or(f64::NAN);
    let denom = ad
        .integrate(domain.a, domain.b, R::lit(1e-9), |x1| {
            let s = carrier.profile.section(x1);
            let inner = Adaptive::default();
            inner
                .integrate(s.f1, s.f2, R::lit(1e-10), |x2| {
                    let (_, dw) = w(x1, x2);
                    dw * dw
                })
                .unwrap_or(R::zero())
        })
        .map(|v| v.f64())
        .unwrap_or(f64::NAN);
    let scale = (carrier.phi * carrier.phi * carrier.eps * carrier.eps).f64();
    if !(denom > 1e-14 * domain.area().f64()) {
        return Err(CarrierError::ZeroDenominator);
    }
    Ok(numer / (scale * denom))
}
