//! Mapped structured mesh over a truncated channel.
//!
//! The reference rectangle [a,b] x [0,1] is mapped by
//! `x2 = f1(x1) + s f(x1)`; cells are the images of a tensor grid, biquadratic
//! in each cell. Geometry (Jacobians, wall normals, arclength) is evaluated
//! from the profile's exact derivatives at quadrature points, never from
//! interpolated node positions.

use crate::error::FemError;
use crate::geometry::{ChannelProfile, Section, TruncatedDomain};
use crate::quad::GaussRule;
use crate::scalar::Scalar;
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Grading {
    Uniform,
    /// Symmetric tanh clustering in s towards both walls.
    WallRefined,
}

#[derive(Debug, Clone)]
pub struct Mesh<R> {
    pub profile: ChannelProfile<R>,
    pub a: R,
    pub b: R,
    pub nx: usize,
    pub ny: usize,
    pub grading: Grading,
    /// Node columns (2 nx + 1 of them, uniform in x1).
    pub xcols: Vec<R>,
    /// Node levels in s (2 ny + 1); odd entries are exact midpoints.
    pub slev: Vec<R>,
    /// Quadrature points per direction within each cell.
    pub nq: usize,
    /// 1D Gauss rule on [0, 1].
    pub q_nodes: Vec<R>,
    pub q_weights: Vec<R>,
}

/// Geometry of one quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint<R> {
    pub x1: R,
    pub x2: R,
    /// Integration weight including |det J|.
    pub w: R,
    /// d(phys)/d(ref) entries of the lower-triangular Jacobian.
    pub j11: R,
    pub j21: R,
    pub j22: R,
}

impl<R: Scalar> QuadPoint<R> {
    /// Physical gradient from reference derivatives.
    #[inline]
    pub fn grad(&self, dxi: R, deta: R) -> [R; 2] {
        let d2 = deta / self.j22;
        [(dxi - self.j21 * d2) / self.j11, d2]
    }
}

impl<R: Scalar> Mesh<R> {
    pub fn build(
        domain: &TruncatedDomain<R>,
        nx: usize,
        ny: usize,
        grading: Grading,
    ) -> Result<Self, FemError> {
        Self::build_graded(domain, nx, ny, grading, 2.0)
    }

    pub fn build_graded(
        domain: &TruncatedDomain<R>,
        nx: usize,
        ny: usize,
        grading: Grading,
        strength: f64,
    ) -> Result<Self, FemError> {
        if nx < 2 || ny < 2 {
            return Err(FemError::MeshTooCoarse { nx, ny });
        }
        let (a, b) = (domain.a, domain.b);
        let mut xcols = Vec::with_capacity(2 * nx + 1);
        for k in 0..=(2 * nx) {
            xcols.push(a + (b - a) * R::lit(k as f64 / (2 * nx) as f64));
        }
        // macro levels then exact midpoints
        let mut macro_s = Vec::with_capacity(ny + 1);
        for j in 0..=ny {
            let u = j as f64 / ny as f64;
            let s = match grading {
                Grading::Uniform => u,
                Grading::WallRefined => {
                    let t = (strength * (2.0 * u - 1.0)).tanh() / strength.tanh();
                    0.5 * (1.0 + t)
                }
            };
            macro_s.push(R::lit(s));
        }
        *macro_s.first_mut().unwrap() = R::zero();
        *macro_s.last_mut().unwrap() = R::one();
        let mut slev = Vec::with_capacity(2 * ny + 1);
        for j in 0..ny {
            slev.push(macro_s[j]);
            slev.push(R::lit(0.5) * (macro_s[j] + macro_s[j + 1]));
        }
        slev.push(macro_s[ny]);

        let mesh = Mesh {
            profile: domain.profile.clone(),
            a,
            b,
            nx,
            ny,
            grading,
            xcols,
            slev,
            nq: 0,
            q_nodes: Vec::new(),
            q_weights: Vec::new(),
        }
        .with_quadrature(3);
        // positivity of the Jacobian at all quadrature points
        for i in 0..nx {
            for qx in 0..mesh.nq {
                let (x1, _) = mesh.cell_x1(i, mesh.q_nodes[qx]);
                let s = mesh.profile.section(x1);
                if s.width() <= R::zero() {
                    return Err(FemError::JacobianNonPositive { i, j: 0 });
                }
            }
            for j in 0..ny {
                if mesh.ds(j) <= R::zero() {
                    return Err(FemError::JacobianNonPositive { i, j });
                }
            }
        }
        Ok(mesh)
    }

    /// Replace the per-cell tensor quadrature (points per direction).
    pub fn with_quadrature(mut self, nq: usize) -> Self {
        let rule: GaussRule<R> = GaussRule::new(nq);
        self.nq = nq;
        self.q_nodes = rule.nodes.iter().map(|&x| R::lit(0.5) * (x + R::one())).collect();
        self.q_weights = rule.weights.iter().map(|&w| R::lit(0.5) * w).collect();
        self
    }

    #[inline]
    pub fn hx(&self) -> R {
        (self.b - self.a) / R::lit(self.nx as f64)
    }

    /// Left edge and physical x1 at reference coordinate xi of cell column i.
    #[inline]
    pub fn cell_x1(&self, i: usize, xi: R) -> (R, R) {
        let x0 = self.xcols[2 * i];
        (x0, x0 + xi * self.hx())
    }

    /// Height of cell row j in s.
    #[inline]
    pub fn ds(&self, j: usize) -> R {
        self.slev[2 * j + 2] - self.slev[2 * j]
    }

    /// s at reference eta within cell row j.
    #[inline]
    pub fn cell_s(&self, j: usize, eta: R) -> R {
        self.slev[2 * j] + eta * self.ds(j)
    }

    /// Node coordinates (node column ix in 0..=2nx, level iy in 0..=2ny).
    pub fn node(&self, ix: usize, iy: usize) -> (R, R) {
        let x1 = self.xcols[ix];
        let s = self.profile.section(x1);
        (x1, s.f1 + self.slev[iy] * s.width())
    }

    /// Geometry at quadrature point (qx, qy) of cell (i, j), given the
    /// profile section at that quadrature abscissa.
    #[inline]
    pub fn quad_point(&self, i: usize, j: usize, qx: usize, qy: usize, sec: &Section<R>) -> QuadPoint<R> {
        let (_, x1) = self.cell_x1(i, self.q_nodes[qx]);
        let eta = self.q_nodes[qy];
        let s = self.cell_s(j, eta);
        let f = sec.width();
        let x2 = sec.f1 + s * f;
        let hx = self.hx();
        let dsj = self.ds(j);
        let j11 = hx;
        let j21 = hx * (sec.f1_d1 + s * sec.width_d1());
        let j22 = dsj * f;
        let w = self.q_weights[qx] * self.q_weights[qy] * j11 * j22;
        QuadPoint { x1, x2, w, j11, j21, j22 }
    }

    /// Analytic outward unit normal on a wall at abscissa x1.
    pub fn wall_normal(&self, x1: R, upper: bool) -> [R; 2] {
        let s = self.profile.section(x1);
        if upper {
            let d = s.f2_d1;
            let n = Float::sqrt(R::one() + d * d);
            [-d / n, R::one() / n]
        } else {
            let d = s.f1_d1;
            let n = Float::sqrt(R::one() + d * d);
            [d / n, -R::one() / n]
        }
    }

    /// Wall tangent pointing in +x1.
    pub fn wall_tangent(&self, x1: R, upper: bool) -> [R; 2] {
        let s = self.profile.section(x1);
        let d = if upper { s.f2_d1 } else { s.f1_d1 };
        let n = Float::sqrt(R::one() + d * d);
        [R::one() / n, d / n]
    }

    /// Largest angle (radians) between analytic wall normals and the normals
    /// of the isoparametrically interpolated facet, sampled at facet
    /// midpoints. O(h^2) for smooth walls.
    pub fn normal_frame_report(&self) -> f64 {
        let mut worst = 0.0f64;
        for upper in [false, true] {
            let iy = if upper { 2 * self.ny } else { 0 };
            for i in 0..self.nx {
                let (x1m, _) = self.cell_x1(i, R::lit(0.5));
                let n_exact = self.wall_normal(x1m, upper);
                // quadratic interpolation of the three facet nodes
                let p0 = self.node(2 * i, iy);
                let p1 = self.node(2 * i + 1, iy);
                let p2 = self.node(2 * i + 2, iy);
                // tangent of the interpolated edge at xi = 1/2:
                // dN/dxi at midpoint: (-1, 0, 1) scaled
                let tx = (p2.0 - p0.0).f64();
                let ty = (p2.1 - p0.1).f64();
                let _ = p1;
                let norm = (tx * tx + ty * ty).sqrt();
                let n_geo = if upper { [-ty / norm, tx / norm] } else { [ty / norm, -tx / norm] };
                let dot = (n_exact[0].f64() * n_geo[0] + n_exact[1].f64() * n_geo[1]).clamp(-1.0, 1.0);
                worst = worst.max(dot.acos());
            }
        }
        worst
    }

    /// Smallest physical wall-adjacent cell height over the mesh.
    pub fn min_wall_cell_height(&self) -> R {
        let mut best = Float::max_value();
        for i in 0..=(2 * self.nx) {
            let x1 = self.xcols[i];
            let f = self.profile.width(x1);
            let bottom = (self.slev[2] - self.slev[0]) * f;
            let top = (self.slev[2 * self.ny] - self.slev[2 * self.ny - 2]) * f;
            best = Float::min(best, Float::min(bottom, top));
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChannelProfile;

    fn straight_dom() -> TruncatedDomain<f64> {
        TruncatedDomain::new(ChannelProfile::parse("-1", "1", 2.0, 0.0, 0.0).unwrap(), -2.0, 2.0)
    }

    fn bump_dom() -> TruncatedDomain<f64> {
        TruncatedDomain::new(
            ChannelProfile::parse("-(1+0.5*exp(-t*t))", "1+0.5*exp(-t*t)", 2.0, 0.61, 3.2).unwrap(),
            -3.0,
            3.0,
        )
    }

    #[test]
    fn straight_uniform_cells_are_congruent_rectangles() {
        let m = Mesh::build(&straight_dom(), 4, 4, Grading::Uniform).unwrap();
        // 16 cells, each 1 x 0.5
        assert_eq!(m.hx(), 1.0);
        for j in 0..4 {
            assert!((m.ds(j) - 0.25).abs() < 1e-15); // times width 2 => 0.5
        }
        let (x1, x2) = m.node(1, 1);
        assert!((x1 + 1.5).abs() < 1e-15 && (x2 + 0.75).abs() < 1e-15);
    }

    #[test]
    fn bump_mesh_positive_jacobians_and_normals() {
        let m = Mesh::build(&bump_dom(), 64, 32, Grading::Uniform).unwrap();
        for i in 0..m.nx {
            for qx in 0..m.nq {
                let (_, x1) = m.cell_x1(i, m.q_nodes[qx]);
                let sec = m.profile.section(x1);
                for j in 0..m.ny {
                    for qy in 0..m.nq {
                        let q = m.quad_point(i, j, qx, qy, &sec);
                        assert!(q.w > 0.0);
                    }
                }
            }
        }
        // top facet normal at a midpoint against the closed form
        let (_, x1) = m.cell_x1(10, 0.5);
        let n = m.wall_normal(x1, true);
        let d = m.profile.section(x1).f2_d1;
        let len = (1.0 + d * d).sqrt();
        assert!((n[0] + d / len).abs() < 1e-12 && (n[1] - 1.0 / len).abs() < 1e-12);
        // interpolated-facet frames approach analytic frames at O(h^2);
        // measure at (nearly) the same abscissa so the ratio is clean
        let angle_at = |mesh: &Mesh<f64>, x1: f64| {
            let i = (((x1 - mesh.a) / mesh.hx()).floor() as usize).min(mesh.nx - 1);
            let p0 = mesh.node(2 * i, 2 * mesh.ny);
            let p2 = mesh.node(2 * i + 2, 2 * mesh.ny);
            let (tx, ty) = (p2.0 - p0.0, p2.1 - p0.1);
            let norm = (tx * tx + ty * ty).sqrt();
            let n_geo = [-ty / norm, tx / norm];
            let (_, x1m) = mesh.cell_x1(i, 0.5);
            let n_ex = mesh.wall_normal(x1m, true);
            (n_ex[0] * n_geo[0] + n_ex[1] * n_geo[1]).clamp(-1.0, 1.0).acos()
        };
        let coarse = Mesh::build(&bump_dom(), 32, 8, Grading::Uniform).unwrap();
        let fine = Mesh::build(&bump_dom(), 64, 8, Grading::Uniform).unwrap();
        let r = angle_at(&coarse, 1.0) / angle_at(&fine, 1.0);
        assert!(r > 3.0 && r < 5.0, "frame error ratio {r} (expect ~4 for O(h^2))");
    }

    #[test]
    fn wall_refined_clusters_cells() {
        let dom = straight_dom();
        let uni = Mesh::build(&dom, 8, 32, Grading::Uniform).unwrap();
        let ref_ = Mesh::build(&dom, 8, 32, Grading::WallRefined).unwrap();
        let h_uni = uni.min_wall_cell_height();
        let h_ref = ref_.min_wall_cell_height();
        assert!(h_ref <= h_uni / 3.0, "{h_ref} vs uniform {h_uni}");
    }

    #[test]
    fn grad_mapping_consistent_with_finite_differences() {
        let m = Mesh::build(&bump_dom(), 12, 6, Grading::Uniform).unwrap();
        // scalar field phi(x1,x2) = sin(x1) * x2^2; compare mapped gradient of
        // its reference representation against the analytic gradient
        let (i, j) = (7usize, 3usize);
        for qx in 0..3 {
            for qy in 0..3 {
                let (_, x1) = m.cell_x1(i, m.q_nodes[qx]);
                let sec = m.profile.section(x1);
                let q = m.quad_point(i, j, qx, qy, &sec);
                // reference derivatives of phi(F(xi,eta)) by finite differences
                let h = 1e-6;
                let eval = |xi: f64, eta: f64| {
                    let (_, x1) = m.cell_x1(i, xi);
                    let sec = m.profile.section(x1);
                    let s = m.cell_s(j, eta);
                    let x2 = sec.f1 + s * sec.width();
                    x1.sin() * x2 * x2
                };
                let xi = m.q_nodes[qx];
                let eta = m.q_nodes[qy];
                let dxi = (eval(xi + h, eta) - eval(xi - h, eta)) / (2.0 * h);
                let deta = (eval(xi, eta + h) - eval(xi, eta - h)) / (2.0 * h);
                let g = q.grad(dxi, deta);
                let exact = [x1.cos() * q.x2 * q.x2, 2.0 * x1.sin() * q.x2];
                assert!((g[0] - exact[0]).abs() < 1e-6, "{} vs {}", g[0], exact[0]);
                assert!((g[1] - exact[1]).abs() < 1e-6);
            }
        }
    }
}
