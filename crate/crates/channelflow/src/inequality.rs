//! Numerical estimation of the functional-inequality constants: sectional
//! Poincare, L4 embedding, Korn with slip, and the Bogovskii right inverse of
//! the divergence with its star-like domain decomposition.
//!
//! Measured Rayleigh ratios are suprema over analytic divergence-free trial
//! fields (stream functions respecting the boundary conditions), refined by
//! projected gradient ascent. Formula bounds carry one universal constant
//! each, calibrated on a canonical domain and then required to dominate
//! across profile families.

use crate::error::LabError;
use crate::geometry::{ChannelProfile, TruncatedDomain};
use crate::mesh::{Grading, Mesh};
use crate::quad::Adaptive;
use crate::scalar::Scalar;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Analytic trial field from a stream function
/// psi = X(x1) * sin(m pi s(x1,x2)), s = (x2 - f1)/f, with X a trig/poly mode.
/// Tangential on the walls, zero section flux, exactly divergence free.
#[derive(Debug, Clone)]
pub struct StreamMode {
    /// vertical mode number >= 1
    pub m: usize,
    /// horizontal mode: 0 = constant, 2k-1 = sin(k pi u), 2k = cos(k pi u) on u in [0,1]
    pub h: usize,
    /// multiply by the end window (makes v and grad v vanish at the ends)
    pub windowed: bool,
}

/// (X, X', X'') of the horizontal mode at u in [0,1], chain rule to x1 applied
/// by the caller.
fn horizontal(h: usize, u: f64) -> (f64, f64, f64) {
    if h == 0 {
        return (1.0, 0.0, 0.0);
    }
    let k = h.div_ceil(2) as f64;
    let w = k * std::f64::consts::PI;
    if h % 2 == 1 {
        ((w * u).sin(), w * (w * u).cos(), -w * w * (w * u).sin())
    } else {
        ((w * u).cos(), -w * (w * u).sin(), -w * w * (w * u).cos())
    }
}

/// Polynomial end window q(u) = 16 u^2 (1-u)^2 with q = q' = 0 at both ends.
fn window(u: f64) -> (f64, f64, f64) {
    let q = 16.0 * u * u * (1.0 - u) * (1.0 - u);
    let dq = 32.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
    let ddq = 32.0 * (1.0 - 6.0 * u + 6.0 * u * u);
    (q, dq, ddq)
}

/// Value and gradient of the trial velocity at a point.
pub fn stream_velocity<R: Scalar>(
    profile: &ChannelProfile<R>,
    a: R,
    b: R,
    modes: &[(StreamMode, f64)],
    x1: R,
    x2: R,
) -> ([f64; 2], [[f64; 2]; 2]) {
    let sec = profile.section(x1);
    let f = sec.width().f64();
    let f1 = sec.f1.f64();
    let fp = sec.width_d1().f64();
    let f1p = sec.f1_d1.f64();
    let fpp = (sec.f2_d2 - sec.f1_d2).f64();
    let f1pp = sec.f1_d2.f64();
    let x1f = x1.f64();
    let x2f = x2.f64();
    let len = (b - a).f64();
    let u = (x1f - a.f64()) / len;
    let s = (x2f - f1) / f;
    // s derivatives
    let s1 = -(f1p + s * fp) / f; // d s / d x1
    let s2 = 1.0 / f; // d s / d x2
    let s11 = -(f1pp + s1 * fp + s * fpp) / f + (f1p + s * fp) * fp / (f * f);
    let s12 = -fp / (f * f); // d2 s / dx1 dx2
    let mut v = [0.0; 2];
    let mut g = [[0.0; 2]; 2];
    for (mode, c) in modes {
        let (mut xx, mut dx, mut ddx) = horizontal(mode.h, u);
        // chain rule to physical x1
        dx /= len;
        ddx /= len * len;
        if mode.windowed {
            let (q, mut dq, mut ddq) = window(u);
            dq /= len;
            ddq /= len * len;
            let nx = xx * q;
            let ndx = dx * q + xx * dq;
            let nddx = ddx * q + 2.0 * dx * dq + xx * ddq;
            xx = nx;
            dx = ndx;
            ddx = nddx;
        }
        let w = mode.m as f64 * std::f64::consts::PI;
        let sv = (w * s).sin();
        let sp = w * (w * s).cos();
        let spp = -w * w * sv;
        // psi = X S; v = (psi_y, -psi_x)
        let v1 = xx * sp * s2;
        let v2 = -(dx * sv + xx * sp * s1);
        // d1 v1 = X' S' s2 + X (S'' s1 s2 + S' s12)
        let d1v1 = dx * sp * s2 + xx * (spp * s1 * s2 + sp * s12);
        // d2 v1 = X S'' s2^2
        let d2v1 = xx * spp * s2 * s2;
        // d1 v2 = -(X'' S + 2 X' S' s1 + X (S'' s1^2 + S' s11))
        let d1v2 = -(ddx * sv + 2.0 * dx * sp * s1 + xx * (spp * s1 * s1 + sp * s11));
        // divergence free: d2 v2 = -d1 v1
        let d2v2 = -d1v1;
        v[0] += c * v1;
        v[1] += c * v2;
        g[0][0] += c * d1v1;
        g[0][1] += c * d2v1;
        g[1][0] += c * d1v2;
        g[1][1] += c * d2v2;
    }
    (v, g)
}

/// Integrals of one trial field over the mesh quadrature.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrialIntegrals {
    pub l2_sq: f64,
    pub grad_sq: f64,
    pub l4_quart: f64,
    pub v1_over_f_sq: f64,
    pub d2v1_sq: f64,
    pub d_sq_twice: f64,
    pub wall_sq: f64,
    /// boundary term of the Korn identity: int (2 n.D(v).v - n.grad v.v) ds
    pub korn_boundary: f64,
}

pub fn trial_integrals<R: Scalar>(
    mesh: &Mesh<R>,
    modes: &[(StreamMode, f64)],
) -> TrialIntegrals {
    let profile = &mesh.profile;
    let (a, b) = (mesh.a, mesh.b);
    let mut out = TrialIntegrals::default();
    for i in 0..mesh.nx {
        for qx in 0..mesh.nq {
            let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
            let sec = profile.section(x1);
            let f = sec.width().f64();
            for j in 0..mesh.ny {
                for qy in 0..mesh.nq {
                    let qp = mesh.quad_point(i, j, qx, qy, &sec);
                    let (v, g) = stream_velocity(profile, a, b, modes, qp.x1, qp.x2);
                    let w = qp.w.f64();
                    let vsq = v[0] * v[0] + v[1] * v[1];
                    out.l2_sq += w * vsq;
                    out.l4_quart += w * vsq * vsq;
                    let gsq: f64 = g.iter().flatten().map(|x| x * x).sum();
                    out.grad_sq += w * gsq;
                    out.v1_over_f_sq += w * v[0] * v[0] / (f * f);
                    out.d2v1_sq += w * g[0][1] * g[0][1];
                    let d01 = 0.5 * (g[0][1] + g[1][0]);
                    out.d_sq_twice +=
                        w * 2.0 * (g[0][0] * g[0][0] + g[1][1] * g[1][1] + 2.0 * d01 * d01);
                }
            }
        }
        // wall integrals
        for upper in [false, true] {
            for qx in 0..mesh.nq {
                let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
                let sec = profile.section(x1);
                let slope = if upper { sec.f2_d1.f64() } else { sec.f1_d1.f64() };
                let x2 = if upper { sec.f2 } else { sec.f1 };
                let arc = mesh.hx().f64() * mesh.q_weights[qx].f64() * (1.0 + slope * slope).sqrt();
                let (v, g) = stream_velocity(profile, a, b, modes, x1, x2);
                let n = if upper {
                    let nn = (1.0 + slope * slope).sqrt();
                    [-slope / nn, 1.0 / nn]
                } else {
                    let nn = (1.0 + slope * slope).sqrt();
                    [slope / nn, -1.0 / nn]
                };
                let vsq = v[0] * v[0] + v[1] * v[1];
                out.wall_sq += arc * vsq;
                // 2 n.D(v).v - n.grad(v).v
                let mut ndv = 0.0;
                let mut ngv = 0.0;
                for c in 0..2 {
                    for d in 0..2 {
                        let dd = 0.5 * (g[c][d] + g[d][c]);
                        ndv += n[d] * dd * v[c];
                        // (n . grad v . v) = n_d (d_d v_c) v_c
                        ngv += n[d] * g[c][d] * v[c];
                    }
                }
                out.korn_boundary += arc * (2.0 * ndv - ngv);
            }
        }
    }
    out
}

fn random_modes(rng: &mut ChaCha20Rng, n_modes: usize, windowed: bool) -> Vec<(StreamMode, f64)> {
    let mut modes = Vec::new();
    for _ in 0..n_modes {
        let m = rng.gen_range(1..=4usize);
        let h = rng.gen_range(0..=6usize);
        let c = rng.gen_range(-1.0..1.0);
        modes.push((StreamMode { m, h, windowed }, c));
    }
    modes
}

/// Sectional Poincare: 1D zero-mean eigenproblem reference plus measured 2D
/// trials. Returns (measured sup ratio, M0 = 1/pi).
pub fn poincare_measure<R: Scalar>(mesh: &Mesh<R>, seed: u64, trials: usize) -> (f64, f64) {
    // 1D reference: lowest nonzero Neumann eigenvalue of -w'' on (0,1) is
    // pi^2; a P2 FE inverse-power iteration reproduces it from above, so
    // 1/sqrt(lambda_h) <= 1/pi always.
    let m0 = 1.0 / std::f64::consts::PI;
    let lambda_1d = zero_mean_eigenvalue_1d(64);
    let mut measured = 1.0 / lambda_1d.sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let modes = random_modes(&mut rng, 6, false);
        let ints = trial_integrals(mesh, &modes);
        if ints.d2v1_sq > 1e-14 {
            measured = measured.max((ints.v1_over_f_sq / ints.d2v1_sq).sqrt());
        }
    }
    (measured, m0)
}

/// Smallest nonzero eigenvalue of -w'' = lambda w on (0,1) with Neumann ends
/// and zero mean, via P2 elements and inverse power iteration.
fn zero_mean_eigenvalue_1d(nel: usize) -> f64 {
    let n = 2 * nel + 1;
    let h = 1.0 / nel as f64;
    // P2 element matrices on [0,h]
    let ke = [
        [7.0, -8.0, 1.0],
        [-8.0, 16.0, -8.0],
        [1.0, -8.0, 7.0],
    ];
    let me = [
        [4.0, 2.0, -1.0],
        [2.0, 16.0, 2.0],
        [-1.0, 2.0, 4.0],
    ];
    let mut k = nalgebra::DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for e in 0..nel {
        for a in 0..3 {
            for b in 0..3 {
                let (ia, ib) = (2 * e + a, 2 * e + b);
                k[(ia, ib)] += ke[a][b] / (3.0 * h);
                m[(ia, ib)] += me[a][b] * h / 30.0;
            }
        }
    }
    // zero-mean constraint via a bordered row of mass-lumped weights
    let ones = nalgebra::DVector::<f64>::from_element(n, 1.0);
    let weights = &m * &ones;
    for i in 0..n {
        k[(i, n)] = weights[i];
        k[(n, i)] = weights[i];
    }
    let kvv = k.view((0, 0), (n, n)).into_owned();
    let lu = k.lu();
    let mut x = nalgebra::DVector::<f64>::from_fn(n, |i, _| ((i as f64) * 0.7).sin());
    let mean = weights.dot(&x) / weights.sum();
    x.add_scalar_mut(-mean);
    let mut lambda = 0.0;
    for _ in 0..60 {
        let mx = &m * &x;
        let mut rhs = nalgebra::DVector::<f64>::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&mx);
        let y = lu.solve(&rhs).expect("1d eigen solve");
        let yv = y.rows(0, n).into_owned();
        let norm = (yv.dot(&(&m * &yv))).sqrt();
        x = yv / norm;
        lambda = x.dot(&(&kvv * &x));
    }
    lambda
}

/// Measured sup of |v| / |grad v| (L2) and the formula constant shape
/// `f_inf (1 + |f2'|_inf)`.
pub fn poincare_m1<R: Scalar>(mesh: &Mesh<R>, seed: u64, trials: usize) -> (f64, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut measured: f64 = 0.0;
    for _ in 0..trials {
        let modes = random_modes(&mut rng, 6, false);
        let ints = trial_integrals(mesh, &modes);
        if ints.grad_sq > 1e-14 {
            measured = measured.max((ints.l2_sq / ints.grad_sq).sqrt());
        }
    }
    let shape = formula_shape_m1(mesh);
    (measured, shape)
}

fn formula_shape_m1<R: Scalar>(mesh: &Mesh<R>) -> f64 {
    let mut f_inf: f64 = 0.0;
    let mut f2p_inf: f64 = 0.0;
    for k in 0..=200 {
        let x1 = mesh.a + (mesh.b - mesh.a) * R::lit(k as f64 / 200.0);
        let sec = mesh.profile.section(x1);
        f_inf = f_inf.max(sec.width().f64());
        f2p_inf = f2p_inf.max(sec.f2_d1.f64().abs());
    }
    f_inf * (1.0 + f2p_inf)
}

/// Mode dictionary with values and gradients cached at the quadrature points.
struct ModeCache {
    q: usize,
    /// per point: weight, then per mode: v (2) and grad (4)
    w: Vec<f64>,
    vals: Vec<[f64; 2]>,
    grads: Vec<[[f64; 2]; 2]>,
}

impl ModeCache {
    fn build<R: Scalar>(mesh: &Mesh<R>, dict: &[StreamMode]) -> Self {
        let q = dict.len();
        let mut w = Vec::new();
        let mut vals = Vec::new();
        let mut grads = Vec::new();
        for i in 0..mesh.nx {
            for qx in 0..mesh.nq {
                let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
                let sec = mesh.profile.section(x1);
                for j in 0..mesh.ny {
                    for qy in 0..mesh.nq {
                        let qp = mesh.quad_point(i, j, qx, qy, &sec);
                        w.push(qp.w.f64());
                        for mode in dict {
                            let (v, g) = stream_velocity(
                                &mesh.profile,
                                mesh.a,
                                mesh.b,
                                &[(mode.clone(), 1.0)],
                                qp.x1,
                                qp.x2,
                            );
                            vals.push(v);
                            grads.push(g);
                        }
                    }
                }
            }
        }
        ModeCache { q, w, vals, grads }
    }

    /// (|v|_4^4, |grad v|^2, d|v|_4^4/dc, d|grad v|^2/dc) at coefficients c.
    fn functionals(&self, c: &[f64]) -> (f64, f64, Vec<f64>, Vec<f64>) {
        let q = self.q;
        let mut n4 = 0.0;
        let mut g2 = 0.0;
        let mut dn4 = vec![0.0; q];
        let mut dg2 = vec![0.0; q];
        for (p, &wq) in self.w.iter().enumerate() {
            let base = p * q;
            let mut v = [0.0f64; 2];
            let mut g = [[0.0f64; 2]; 2];
            for m in 0..q {
                let mv = self.vals[base + m];
                let mg = self.grads[base + m];
                v[0] += c[m] * mv[0];
                v[1] += c[m] * mv[1];
                for a in 0..2 {
                    g[a][0] += c[m] * mg[a][0];
                    g[a][1] += c[m] * mg[a][1];
                }
            }
            let vsq = v[0] * v[0] + v[1] * v[1];
            n4 += wq * vsq * vsq;
            g2 += wq * g.iter().flatten().map(|x| x * x).sum::<f64>();
            for m in 0..q {
                let mv = self.vals[base + m];
                let mg = self.grads[base + m];
                let v_dot = v[0] * mv[0] + v[1] * mv[1];
                dn4[m] += wq * 4.0 * vsq * v_dot;
                let mut gdot = 0.0;
                for a in 0..2 {
                    gdot += g[a][0] * mg[a][0] + g[a][1] * mg[a][1];
                }
                dg2[m] += wq * 2.0 * gdot;
            }
        }
        (n4, g2, dn4, dg2)
    }
}

/// Measured sup of |v|_L4 / |grad v|_L2 (random starts + 20 analytic ascent
/// steps) and the formula shape of the embedding constant (without its
/// universal prefactor).
pub fn embedding_measure<R: Scalar>(mesh: &Mesh<R>, seed: u64, trials: usize) -> (f64, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut dict = Vec::new();
    for m in 1..=3usize {
        for h in 0..=4usize {
            dict.push(StreamMode { m, h, windowed: false });
        }
    }
    let cache = ModeCache::build(mesh, &dict);
    let q = dict.len();
    let mut best = 0.0f64;
    for _ in 0..trials {
        let mut c: Vec<f64> = (0..q).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let (mut n4, mut g2, mut dn4, mut dg2) = cache.functionals(&c);
        let ratio = |n4: f64, g2: f64| {
            if g2 > 1e-14 {
                n4.powf(0.25) / g2.sqrt()
            } else {
                0.0
            }
        };
        let mut r = ratio(n4, g2);
        let mut step = 0.5;
        for _ in 0..20 {
            // gradient of ln r = (1/4) ln n4 - (1/2) ln g2
            let mut grad = vec![0.0; q];
            for m in 0..q {
                grad[m] = 0.25 * dn4[m] / n4.max(1e-300) - 0.5 * dg2[m] / g2.max(1e-300);
            }
            let gn: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gn < 1e-12 {
                break;
            }
            let cand: Vec<f64> = c.iter().zip(&grad).map(|(ci, gi)| ci + step * gi / gn).collect();
            let (cn4, cg2, cdn4, cdg2) = cache.functionals(&cand);
            let rc = ratio(cn4, cg2);
            if rc > r {
                c = cand;
                r = rc;
                n4 = cn4;
                g2 = cg2;
                dn4 = cdn4;
                dg2 = cdg2;
            } else {
                step *= 0.5;
            }
        }
        best = best.max(r);
    }
    (best, formula_shape_m4(mesh))
}

/// Shape of the embedding constant (defM4) without the universal prefactor:
/// (1 + |(f1',f2')|_inf^2) (M1/(b-a) + 1)^(1/2) (|O| + (b-a) d)^(1/4) (1 + M1/d).
pub fn formula_shape_m4<R: Scalar>(mesh: &Mesh<R>) -> f64 {
    let len = (mesh.b - mesh.a).f64();
    let mut slopes: f64 = 0.0;
    let mut dab = f64::INFINITY;
    for k in 0..=200 {
        let x1 = mesh.a + (mesh.b - mesh.a) * R::lit(k as f64 / 200.0);
        let sec = mesh.profile.section(x1);
        slopes = slopes.max(sec.f1_d1.f64().abs()).max(sec.f2_d1.f64().abs());
        dab = dab.min(sec.width().f64());
    }
    let m1 = formula_shape_m1(mesh);
    let area = TruncatedDomain::new(mesh.profile.clone(), mesh.a, mesh.b).area().f64();
    (1.0 + slopes * slopes)
        * (m1 / len + 1.0).sqrt()
        * (area + len * dab).powf(0.25)
        * (1.0 + m1 / dab)
}

/// Korn with slip: identity residual and coercivity margin over windowed
/// divergence-free trials.
#[derive(Debug, Clone, serde::Serialize)]
pub struct KornReport {
    pub korn_c: f64,
    pub sup_curvature: f64,
    pub max_identity_residual: f64,
    pub min_margin: f64,
    pub trials: usize,
}

pub fn korn_check<R: Scalar>(mesh: &Mesh<R>, alpha: f64, seed: u64, trials: usize) -> KornReport {
    let sup_curv = mesh.profile.sup_curvature(mesh.a, mesh.b, 400).f64();
    let korn_c = alpha / (alpha + sup_curv);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst_resid: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    for _ in 0..trials {
        let modes = random_modes(&mut rng, 6, true);
        let ints = trial_integrals(mesh, &modes);
        if ints.grad_sq < 1e-12 {
            continue;
        }
        // |grad v|^2 = 2|D|^2 - int (2 n.D.v - n.grad v.v)
        let resid = (ints.grad_sq - ints.d_sq_twice + ints.korn_boundary).abs() / ints.grad_sq;
        worst_resid = worst_resid.max(resid);
        let margin = ints.d_sq_twice + alpha * ints.wall_sq - korn_c * ints.grad_sq;
        min_margin = min_margin.min(margin / ints.grad_sq.max(1e-30));
    }
    KornReport {
        korn_c,
        sup_curvature: sup_curv,
        max_identity_residual: worst_resid,
        min_margin,
        trials,
    }
}

/// Star-like cover of a unit slab.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StarDecomposition {
    pub n: usize,
    pub r: f64,
    pub s: f64,
    pub pieces: usize,
    pub rays_per_piece: usize,
    pub min_overlap_area: f64,
    pub overlap_lower_bound: f64,
    /// C_D of the decomposition (1 for a single piece).
    pub c_d: f64,
    pub r0: f64,
    /// formula bound C_D (R0/R)^2 (1 + R0/R)
    pub m5_formula: f64,
}

/// Cover the slab [t-1, t] with star-like pieces and certify by ray sampling.
pub fn star_decomposition<R: Scalar>(
    profile: &ChannelProfile<R>,
    t: f64,
    rays_per_piece: usize,
) -> Result<StarDecomposition, LabError> {
    let d = profile.d.f64();
    let beta = profile.beta.f64();
    // parameters per the cover construction: N > beta/d, s > beta, ball radius
    // from the tangency relation, constrained inside the piece
    let mut n = (beta / d).floor() as usize + 1;
    let (r, s) = loop {
        let a = d / 2.0 - beta / (2.0 * n as f64);
        let s = if beta > 0.0 { 1.5 * beta + 0.25 } else { 0.5 };
        if a > 0.0 && s < 2.0 * n as f64 * a {
            let r = (a - s / (2.0 * n as f64)) / (1.0 + s * s).sqrt();
            let r_cap = (1.0 / (2.0 * n as f64)).min(a) * 0.999;
            if r > 1e-9 {
                break (r.min(r_cap), s);
            }
        }
        n += 1;
        if n > 10_000 {
            return Err(LabError::NotStarLike { piece: 0, bx: 0.0, by: 0.0, rx: 0.0, ry: 0.0 });
        }
    };
    let pieces = 2 * n - 1;
    let lo = t - 1.0;
    // worst-case diameter over the slab
    let mut dbar: f64 = 0.0;
    for k in 0..=100 {
        let x1 = R::lit(lo + k as f64 / 100.0);
        dbar = dbar.max(profile.width(x1).f64());
    }
    let r0 = (1.0f64 + (dbar + beta) * (dbar + beta)).sqrt();

    let n_ball = 16usize.max(rays_per_piece / 640);
    let n_bnd = rays_per_piece / n_ball;
    for k in 1..=pieces {
        let x_lo = lo + (k - 1) as f64 / (2.0 * n as f64);
        let x_hi = lo + (k + 1) as f64 / (2.0 * n as f64);
        let tk = lo + k as f64 / (2.0 * n as f64);
        let sec = profile.section(R::lit(tk));
        let (cx, cy) = (tk, sec.mid().f64());
        let inside = |x: f64, y: f64| -> bool {
            if x < x_lo - 1e-12 || x > x_hi + 1e-12 {
                return false;
            }
            let s = profile.section(R::lit(x));
            y >= s.f1.f64() - 1e-12 && y <= s.f2.f64() + 1e-12
        };
        // boundary sampling: two vertical sides and both wall curves
        let mut boundary = Vec::with_capacity(n_bnd);
        let quarter = n_bnd / 4;
        for q in 0..4 {
            for i in 0..quarter {
                let u = (i as f64 + 0.5) / quarter as f64;
                let p = match q {
                    0 => {
                        let s = profile.section(R::lit(x_lo));
                        (x_lo, s.f1.f64() + u * (s.f2.f64() - s.f1.f64()))
                    }
                    1 => {
                        let s = profile.section(R::lit(x_hi));
                        (x_hi, s.f1.f64() + u * (s.f2.f64() - s.f1.f64()))
                    }
                    2 => {
                        let x = x_lo + u * (x_hi - x_lo);
                        (x, profile.section(R::lit(x)).f1.f64())
                    }
                    _ => {
                        let x = x_lo + u * (x_hi - x_lo);
                        (x, profile.section(R::lit(x)).f2.f64())
                    }
                };
                boundary.push(p);
            }
        }
        // ball points: center plus a ring at 0.8 r
        let mut ball = vec![(cx, cy)];
        for i in 1..n_ball {
            let th = 2.0 * std::f64::consts::PI * i as f64 / (n_ball - 1) as f64;
            ball.push((cx + 0.8 * r * th.cos(), cy + 0.8 * r * th.sin()));
        }
        for &(bx, by) in &ball {
            for &(rx, ry) in &boundary {
                // sample the open segment
                for step in 1..24 {
                    let u = step as f64 / 24.0;
                    let x = bx + u * (rx - bx);
                    let y = by + u * (ry - by);
                    if !inside(x, y) {
                        return Err(LabError::NotStarLike { piece: k, bx, by, rx, ry });
                    }
                }
            }
        }
    }
    // overlap areas |E_k cap E_{k+1}| >= d/(2N)
    let ad = Adaptive::<R>::default();
    let mut min_overlap = f64::INFINITY;
    for k in 1..pieces {
        let x_lo = lo + k as f64 / (2.0 * n as f64);
        let x_hi = lo + (k + 1) as f64 / (2.0 * n as f64);
        let area = ad
            .integrate(R::lit(x_lo), R::lit(x_hi), R::lit(1e-10), |x| profile.width(x))
            .map(|v| v.f64())
            .unwrap_or(0.0);
        min_overlap = min_overlap.min(area);
    }
    if pieces == 1 {
        min_overlap = f64::NAN;
    }
    // C_D per the decomposition bound; a single star-like piece needs none
    let c_d = if pieces == 1 {
        1.0
    } else {
        // |D| <= dbar (slab of unit length), |tilde D_k| >= d/(2N),
        // |hat D_k \ D_k| <= |D|
        let dd: f64 = dbar;
        let tilde = d / (2.0 * n as f64);
        let per = 1.0 + (dd / tilde).sqrt();
        per * per.powi((pieces - 1) as i32 - 1).max(1.0)
    };
    let m5 = c_d * (r0 / r) * (r0 / r) * (1.0 + r0 / r);
    Ok(StarDecomposition {
        n,
        r,
        s,
        pieces,
        rays_per_piece,
        min_overlap_area: min_overlap,
        overlap_lower_bound: d / (2.0 * n as f64),
        c_d,
        r0,
        m5_formula: m5,
    })
}

/// Minimal-energy discrete right inverse of the divergence on a slab piece
/// with homogeneous velocity boundary values: returns |grad a| / |w|.
pub fn bogovskii_solve<R: Scalar, W>(
    domain: &TruncatedDomain<R>,
    nx: usize,
    ny: usize,
    w: W,
) -> Result<f64, LabError>
where
    W: Fn(f64, f64) -> f64,
{
    use crate::band::BandMatrix;
    use crate::basis::{p1_basis, q2_basis};
    let mesh = Mesh::build(domain, nx, ny, Grading::Uniform).expect("bogovskii mesh");
    // mean of w must vanish
    let mut mean = 0.0;
    let mut mass = 0.0;
    let mut wsq = 0.0;
    for i in 0..nx {
        for qx in 0..mesh.nq {
            let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
            let sec = mesh.profile.section(x1);
            for j in 0..ny {
                for qy in 0..mesh.nq {
                    let qp = mesh.quad_point(i, j, qx, qy, &sec);
                    let wv = w(qp.x1.f64(), qp.x2.f64());
                    mean += qp.w.f64() * wv;
                    mass += qp.w.f64();
                    wsq += qp.w.f64() * wv * wv;
                }
            }
        }
    }
    if wsq.sqrt() < 1e-30 {
        return Ok(0.0);
    }
    if mean.abs() > 1e-10 * wsq.sqrt() {
        return Err(LabError::IncompatibleData { mean: mean.abs() });
    }
    let _ = mass;
    // numbering: interior velocity nodes (2 dofs), pressure multipliers with
    // the first constant mode pinned, interleaved by station
    let nlev = 2 * ny + 1;
    let ncols = 2 * nx + 1;
    let mut vid = vec![[usize::MAX; 2]; ncols * nlev];
    let mut pid = vec![[usize::MAX; 3]; nx * ny];
    let mut next = 0usize;
    for ix in 0..ncols {
        let interior_col = ix > 0 && ix + 1 < ncols;
        for iy in 1..(nlev - 1) {
            if interior_col {
                vid[ix * nlev + iy] = [next, next + 1];
                next += 2;
            }
        }
        if ix % 2 == 1 {
            let i = (ix - 1) / 2;
            for j in 0..ny {
                for m in 0..3 {
                    if i == 0 && j == 0 && m == 0 {
                        continue;
                    }
                    pid[i * ny + j][m] = next;
                    next += 1;
                }
            }
        }
    }
    let n = next;
    let mut hb = 0usize;
    // assemble K (vector Laplacian), B, rhs
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs = vec![0.0f64; n];
    for i in 0..nx {
        let mut secs = Vec::new();
        for qx in 0..mesh.nq {
            let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
            secs.push(mesh.profile.section(x1));
        }
        for j in 0..ny {
            let (_, xc) = mesh.cell_x1(i, R::lit(0.5));
            let secc = mesh.profile.section(xc);
            let sc = mesh.cell_s(j, R::lit(0.5));
            let yc = (secc.f1 + sc * secc.width()).f64();
            let lx = mesh.hx().f64();
            let ly = (mesh.ds(j) * secc.width()).f64();
            let mut kloc = [[0.0f64; 18]; 18];
            let mut bloc = [[0.0f64; 18]; 3];
            let mut floc = [0.0f64; 3];
            for qx in 0..mesh.nq {
                for qy in 0..mesh.nq {
                    let qp = mesh.quad_point(i, j, qx, qy, &secs[qx]);
                    let (_, gref) = q2_basis(mesh.q_nodes[qx], mesh.q_nodes[qy]);
                    let mut g = [[0.0f64; 2]; 9];
                    for ln in 0..9 {
                        let gg = qp.grad(gref[ln][0], gref[ln][1]);
                        g[ln] = [gg[0].f64(), gg[1].f64()];
                    }
                    let wq = qp.w.f64();
                    for a in 0..9 {
                        for b in 0..9 {
                            let dot = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                            kloc[2 * a][2 * b] += wq * dot;
                            kloc[2 * a + 1][2 * b + 1] += wq * dot;
                        }
                    }
                    let psi = p1_basis(qp.x1.f64(), qp.x2.f64(), xc.f64(), yc, lx, ly);
                    for a in 0..9 {
                        for m in 0..3 {
                            for c in 0..2 {
                                bloc[m][2 * a + c] += wq * psi[m] * g[a][c];
                            }
                        }
                    }
                    let wv = w(qp.x1.f64(), qp.x2.f64());
                    for m in 0..3 {
                        floc[m] += wq * psi[m] * wv;
                    }
                }
            }
            // scatter
            let mut gl = [usize::MAX; 21];
            for a3 in 0..3 {
                for b3 in 0..3 {
                    let nid = (2 * i + a3) * nlev + (2 * j + b3);
                    let ids = vid[nid];
                    gl[2 * (a3 * 3 + b3)] = ids[0];
                    gl[2 * (a3 * 3 + b3) + 1] = ids[1];
                }
            }
            for m in 0..3 {
                gl[18 + m] = pid[i * ny + j][m];
            }
            for r in 0..21 {
                if gl[r] == usize::MAX {
                    continue;
                }
                for c in 0..21 {
                    if gl[c] == usize::MAX {
                        continue;
                    }
                    let v = if r < 18 && c < 18 {
                        kloc[r][c]
                    } else if r >= 18 && c < 18 {
                        bloc[r - 18][c]
                    } else if r < 18 && c >= 18 {
                        bloc[c - 18][r]
                    } else {
                        0.0
                    };
                    if v != 0.0 {
                        entries.push((gl[r], gl[c], v));
                        hb = hb.max(gl[r].abs_diff(gl[c]));
                    }
                }
                if r >= 18 {
                    rhs[gl[r]] += floc[r - 18];
                }
            }
        }
    }
    let mut band = BandMatrix::<f64>::zeros(n, hb, hb);
    for &(r, c, v) in &entries {
        band.add(r, c, v);
    }
    let lu = band.factor().map_err(|_| LabError::IncompatibleData { mean: f64::NAN })?;
    let mut x = rhs.clone();
    lu.solve(&mut x);
    // |grad a|^2 by quadrature of the reconstructed field
    let mut kqf = 0.0;
    for i in 0..nx {
        let mut secs = Vec::new();
        for qx in 0..mesh.nq {
            let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
            secs.push(mesh.profile.section(x1));
        }
        for j in 0..ny {
            let mut nodal = [[0.0f64; 2]; 9];
            for a3 in 0..3 {
                for b3 in 0..3 {
                    let nid = (2 * i + a3) * nlev + (2 * j + b3);
                    let ids = vid[nid];
                    if ids[0] != usize::MAX {
                        nodal[a3 * 3 + b3] = [x[ids[0]], x[ids[1]]];
                    }
                }
            }
            for qx in 0..mesh.nq {
                for qy in 0..mesh.nq {
                    let qp = mesh.quad_point(i, j, qx, qy, &secs[qx]);
                    let (_, gref) = q2_basis(mesh.q_nodes[qx], mesh.q_nodes[qy]);
                    let mut grad = [[0.0f64; 2]; 2];
                    for ln in 0..9 {
                        let gg = qp.grad(gref[ln][0], gref[ln][1]);
                        for c in 0..2 {
                            grad[c][0] += nodal[ln][c] * gg[0].f64();
                            grad[c][1] += nodal[ln][c] * gg[1].f64();
                        }
                    }
                    let gsq: f64 = grad.iter().flatten().map(|v| v * v).sum();
                    kqf += qp.w.f64() * gsq;
                }
            }
        }
    }
    Ok(kqf.sqrt() / wsq.sqrt())
}
