//! Reference-cell shape functions: biquadratic velocity (9-node tensor
//! Lagrange on [0,1]^2) and three-mode linear pressure in physical
//! coordinates per cell.

use crate::scalar::Scalar;

/// 1D quadratic Lagrange basis at nodes {0, 1/2, 1}: values and derivatives.
#[inline]
pub fn lagrange3<R: Scalar>(x: R) -> ([R; 3], [R; 3]) {
    let one = R::one();
    let two = R::lit(2.0);
    let four = R::lit(4.0);
    let half = R::lit(0.5);
    let v = [
        two * (x - half) * (x - one),
        four * x * (one - x),
        two * x * (x - half),
    ];
    let d = [four * x - R::lit(3.0), four - R::lit(8.0) * x, four * x - one];
    let _ = two;
    (v, d)
}

/// Values and reference gradients of the 9 velocity shape functions at
/// (xi, eta). Local node ln = a*3 + b covers (xi_a, eta_b).
#[inline]
pub fn q2_basis<R: Scalar>(xi: R, eta: R) -> ([R; 9], [[R; 2]; 9]) {
    let (vx, dx) = lagrange3(xi);
    let (vy, dy) = lagrange3(eta);
    let mut val = [R::zero(); 9];
    let mut grad = [[R::zero(); 2]; 9];
    for a in 0..3 {
        for b in 0..3 {
            let ln = a * 3 + b;
            val[ln] = vx[a] * vy[b];
            grad[ln] = [dx[a] * vy[b], vx[a] * dy[b]];
        }
    }
    (val, grad)
}

/// The three pressure modes at a physical point, relative to the cell center
/// and scales: {1, (x1-xc)/lx, (x2-yc)/ly}.
#[inline]
pub fn p1_basis<R: Scalar>(x1: R, x2: R, xc: R, yc: R, lx: R, ly: R) -> [R; 3] {
    [R::one(), (x1 - xc) / lx, (x2 - yc) / ly]
}
