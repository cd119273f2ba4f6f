//! Exact shear flows `U(x2) e1` in the straight channel (-1, 1) under Navier
//! slip, used as far-field targets and manufactured solutions.
//!
//! Two coefficient conventions coexist. The weak form carries the boundary
//! term `2 alpha int u.p`, whose natural boundary condition for a shear
//! profile reads `U'(1)/2 + alpha U(1) = 0`; `WeakFormConsistent` satisfies
//! it. The closed-form profile printed alongside the boundary condition in
//! the source analysis satisfies `U'(1) + alpha U(1) = 0` instead;
//! `PaperFormula` reproduces that profile literally. Both carry flux Phi
//! exactly; the discrete solver is self-consistent with the first.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Convention {
    WeakFormConsistent,
    PaperFormula,
}

/// U(x2) = Phi (a0 - b0 x2^2) with pressure slope dP/dx1 = -2 b0 Phi.
#[derive(Debug, Clone, Copy)]
pub struct ShearFlow<R> {
    pub phi: R,
    pub alpha: R,
    pub convention: Convention,
    pub a0: R,
    pub b0: R,
    pub pressure_slope: R,
}

/// Build the shear flow for the given flux, friction and convention.
pub fn make_shear<R: Scalar>(phi: R, alpha: R, convention: Convention) -> ShearFlow<R> {
    assert!(alpha >= R::zero() && phi >= R::zero());
    let (a0, b0) = match convention {
        Convention::PaperFormula => {
            let den = R::lit(4.0) * (R::lit(3.0) + alpha);
            (R::lit(3.0) * (R::lit(2.0) + alpha) / den, R::lit(3.0) * alpha / den)
        }
        Convention::WeakFormConsistent => {
            let den = R::lit(2.0) * (R::lit(3.0) + R::lit(2.0) * alpha);
            (R::lit(3.0) * (R::one() + alpha) / den, R::lit(3.0) * alpha / den)
        }
    };
    ShearFlow { phi, alpha, convention, a0, b0, pressure_slope: -R::lit(2.0) * b0 * phi }
}

impl<R: Scalar> ShearFlow<R> {
    /// Horizontal velocity at x2.
    pub fn u(&self, x2: R) -> R {
        self.phi * (self.a0 - self.b0 * x2 * x2)
    }

    /// dU/dx2.
    pub fn du(&self, x2: R) -> R {
        -R::lit(2.0) * self.phi * self.b0 * x2
    }

    /// `int_{-1}^{1} U dx2` (equals Phi for both conventions).
    pub fn flux(&self) -> R {
        R::lit(2.0) * self.phi * (self.a0 - self.b0 / R::lit(3.0))
    }

    /// Boundary coefficient theta that the discrete wall term should use so
    /// that this profile is the solver's natural shear solution.
    pub fn boundary_theta(&self) -> R {
        match self.convention {
            Convention::WeakFormConsistent => R::lit(2.0) * self.alpha,
            Convention::PaperFormula => self.alpha,
        }
    }
}

/// Slip/flux residuals of a shear flow against the boundary coefficient theta:
/// `r_bc = U'(1)/2 + (theta/2) U(1)`, `r_flux = int U - Phi`.
pub fn shear_residual<R: Scalar>(flow: &ShearFlow<R>, weak_alpha_coeff: R) -> (R, R) {
    let half = R::lit(0.5);
    let r_bc = half * flow.du(R::one()) + half * weak_alpha_coeff * flow.u(R::one());
    let r_flux = flow.flux() - flow.phi;
    (r_bc, r_flux)
}
