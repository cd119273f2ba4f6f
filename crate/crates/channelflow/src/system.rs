//! Constrained saddle systems on a truncated channel: build, factor, solve.

use crate::assemble::{
    assemble_carrier_rhs, assemble_divergence, assemble_oseen, assemble_viscous_slip, BasisTables,
    QuadField, Triplets,
};
use crate::band::BandMatrix;
use crate::basis::q2_basis;
use crate::carrier::FluxCarrier;
use crate::dofmap::DofMap;
use crate::error::SolveError;
use crate::mesh::Mesh;
use crate::scalar::Scalar;
use crate::shear::ShearFlow;
use num_traits::Float;

/// End-section data for the velocity correction v.
#[derive(Debug, Clone)]
pub enum EndCondition<R> {
    /// v = 0 on both end sections (the truncation scheme).
    Zero,
    /// v = U - g: manufactured far-field data, exact for straight channels.
    ShearLift(ShearFlow<R>),
}

/// Mesh + numbering + reference tables + boundary coefficient.
pub struct Discretization<R> {
    pub mesh: Mesh<R>,
    pub dofmap: DofMap<R>,
    pub tables: BasisTables<R>,
    /// Wall term coefficient theta in a(v,phi) = 2 (D(v), D(phi)) + theta <v, phi>_walls.
    pub theta: R,
}

impl<R: Scalar> Discretization<R> {
    pub fn new(mesh: Mesh<R>, theta: R) -> Self {
        let dofmap = DofMap::build(&mesh);
        let tables = BasisTables::new(&mesh);
        Discretization { mesh, dofmap, tables, theta }
    }

    pub fn n(&self) -> usize {
        self.dofmap.n
    }

    /// Prescribed cartesian end-node values.
    pub fn end_values(&self, kind: &EndCondition<R>, carrier: &FluxCarrier<R>) -> Vec<[R; 2]> {
        let ncols = 2 * self.mesh.nx + 1;
        let nlev = 2 * self.mesh.ny + 1;
        let mut out = vec![[R::zero(); 2]; ncols * nlev];
        if let EndCondition::ShearLift(shear) = kind {
            for ix in [0, ncols - 1] {
                let x1 = self.mesh.xcols[ix];
                let sec = self.mesh.profile.section(x1);
                for iy in 0..nlev {
                    let (_, x2) = self.mesh.node(ix, iy);
                    let g = carrier.velocity_unchecked(&sec, x2);
                    out[ix * nlev + iy] = [shear.u(x2) - g[0], -g[1]];
                }
            }
        }
        out
    }

    /// Assemble the linearized operator (viscous + slip + transport frozen at
    /// the carrier + reaction against grad g + mixed coupling) as triplets,
    /// together with the carrier load and lifted end data on the rhs.
    pub fn assemble_linearized(
        &self,
        g_field: &QuadField<R>,
        end: &[[R; 2]],
    ) -> (Triplets<R>, Vec<R>) {
        let n = self.n();
        let mut trip = Triplets::new(n);
        let mut rhs = vec![R::zero(); n];
        assemble_viscous_slip(&self.mesh, &self.dofmap, &self.tables, self.theta, &mut trip, &mut rhs, end);
        assemble_divergence(&self.mesh, &self.dofmap, &self.tables, &mut trip, &mut rhs, end);
        assemble_oseen(
            &self.mesh,
            &self.dofmap,
            &self.tables,
            g_field,
            Some(g_field),
            &mut trip,
            &mut rhs,
            end,
        );
        assemble_carrier_rhs(&self.mesh, &self.dofmap, &self.tables, g_field, &mut rhs);
        (trip, rhs)
    }

    /// Expand triplets into a band matrix sized from the numbering.
    pub fn band_from(&self, trip: &Triplets<R>) -> BandMatrix<R> {
        let hb = self.dofmap.half_bandwidth;
        let mut band = BandMatrix::zeros(self.n(), hb, hb);
        for &(i, j, v) in &trip.entries {
            band.add(i as usize, j as usize, v);
        }
        band
    }

    /// Direct solve with one step of iterative refinement.
    pub fn solve_linear(
        &self,
        trip: &Triplets<R>,
        rhs: &[R],
    ) -> Result<(Vec<R>, f64), SolveError> {
        let band = self.band_from(trip);
        let lu = band.factor()?;
        let mut x = rhs.to_vec();
        lu.solve(&mut x);
        let mut residual = vec![R::zero(); x.len()];
        trip.matvec(&x, &mut residual);
        for (r, b) in residual.iter_mut().zip(rhs) {
            *r = *b - *r;
        }
        let mut dx = residual.clone();
        lu.solve(&mut dx);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += *d;
        }
        trip.matvec(&x, &mut residual);
        for (r, b) in residual.iter_mut().zip(rhs) {
            *r = *b - *r;
        }
        let rn = l2(&residual).f64();
        Ok((x, rn))
    }

    /// Flux of the reconstructed field u = v + g through the section at node
    /// column ix (even): quadrature of v1 plus the exact carrier flux.
    pub fn section_flux(&self, ix: usize, x: &[R], end: &[[R; 2]], phi: R) -> R {
        debug_assert!(ix % 2 == 0);
        let mesh = &self.mesh;
        let nlev = 2 * mesh.ny + 1;
        let mut acc = R::zero();
        let i = (ix / 2).min(mesh.nx - 1);
        let xi = if ix == 2 * mesh.nx { R::one() } else { R::zero() };
        let x1 = mesh.xcols[ix];
        let sec = mesh.profile.section(x1);
        for j in 0..mesh.ny {
            // 3-point Gauss along the cell edge
            for (qe, we) in mesh.q_nodes.iter().zip(&mesh.q_weights) {
                let (val, _) = q2_basis(xi, *qe);
                let mut v1 = R::zero();
                for a in 0..3 {
                    for b in 0..3 {
                        let nid = (2 * i + a) * nlev + (2 * j + b);
                        let nodal = self.dofmap.node_velocity(nid, x, end);
                        v1 += val[a * 3 + b] * nodal[0];
                    }
                }
                acc += *we * mesh.ds(j) * sec.width() * v1;
            }
        }
        acc + phi
    }

    /// Pressure-dof indicator (true for pressure unknowns).
    pub fn pressure_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n()];
        for i in 0..self.mesh.nx {
            for j in 0..self.mesh.ny {
                for id in self.dofmap.pressure_ids(i, j).into_iter().flatten() {
                    mask[id] = true;
                }
            }
        }
        mask
    }

    /// Continuity residual restricted to pressure rows.
    pub fn continuity_residual(&self, trip: &Triplets<R>, x: &[R], rhs: &[R]) -> f64 {
        let mask = self.pressure_mask();
        let mut r = vec![R::zero(); x.len()];
        trip.matvec(x, &mut r);
        let mut acc = R::zero();
        for i in 0..self.n() {
            if mask[i] {
                let d = rhs[i] - r[i];
                acc += d * d;
            }
        }
        Float::sqrt(acc).f64()
    }
}

impl<R: Scalar> Discretization<R> {
    /// Discrete inf-sup constant of the pairing on the constrained spaces,
    /// via the smallest generalized eigenvalue of the pressure-mass-scaled
    /// Schur complement. Dense; intended for coarse meshes.
    pub fn infsup_constant(&self) -> Result<f64, crate::error::FemError> {
        let n = self.n();
        let mut trip = Triplets::new(n);
        let mut rhs = vec![R::zero(); n];
        let end = vec![[R::zero(); 2]; (2 * self.mesh.nx + 1) * (2 * self.mesh.ny + 1)];
        // symmetric positive definite velocity block (strain form, theta = 1)
        crate::assemble::assemble_viscous_slip(
            &self.mesh, &self.dofmap, &self.tables, R::one(), &mut trip, &mut rhs, &end,
        );
        let mut full = Triplets::new(n);
        crate::assemble::assemble_divergence(
            &self.mesh, &self.dofmap, &self.tables, &mut full, &mut rhs, &end,
        );
        let mask = self.pressure_mask();
        let pidx: Vec<usize> = (0..n).filter(|i| mask[*i]).collect();
        let back: std::collections::HashMap<usize, usize> =
            pidx.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let np = pidx.len();
        // velocity-block band solve
        let hb = self.dofmap.half_bandwidth;
        let mut band = crate::band::BandMatrix::zeros(n, hb, hb);
        for &(i, j, v) in &trip.entries {
            band.add(i as usize, j as usize, v);
        }
        // make the pressure rows identity so the factorization is well posed;
        // the B^T columns never excite them
        for &i in &pidx {
            band.add(i, i, R::one());
        }
        let lu = band.factor().map_err(|_| crate::error::FemError::RankDeficient { infsup: 0.0 })?;
        // S = B A^-1 B^T assembled column by column
        let mut s = nalgebra::DMatrix::<f64>::zeros(np, np);
        for (col, &pj) in pidx.iter().enumerate() {
            // b_j = B^T e_j: velocity rows of column pj of the full coupling
            let mut bj = vec![R::zero(); n];
            for &(i, j, v) in &full.entries {
                if j as usize == pj && !mask[i as usize] {
                    bj[i as usize] += v;
                }
            }
            let mut x = bj.clone();
            lu.solve(&mut x);
            for &(i, j, v) in &full.entries {
                let (iu, ju) = (i as usize, j as usize);
                if mask[iu] && !mask[ju] {
                    s[(back[&iu], col)] += (v * x[ju]).f64();
                }
            }
        }
        // pressure mass (block diagonal over cells)
        let mut m = nalgebra::DMatrix::<f64>::zeros(np, np);
        for i in 0..self.mesh.nx {
            for j in 0..self.mesh.ny {
                let ids = self.dofmap.pressure_ids(i, j);
                let (_, xc) = self.mesh.cell_x1(i, R::lit(0.5));
                let secc = self.mesh.profile.section(xc);
                let sc = self.mesh.cell_s(j, R::lit(0.5));
                let yc = secc.f1 + sc * secc.width();
                let lx = self.mesh.hx();
                let ly = self.mesh.ds(j) * secc.width();
                for qx in 0..self.mesh.nq {
                    let (_, x1) = self.mesh.cell_x1(i, self.mesh.q_nodes[qx]);
                    let sec = self.mesh.profile.section(x1);
                    for qy in 0..self.mesh.nq {
                        let qp = self.mesh.quad_point(i, j, qx, qy, &sec);
                        let psi = crate::basis::p1_basis(qp.x1, qp.x2, xc, yc, lx, ly);
                        for a in 0..3 {
                            for b in 0..3 {
                                if let (Some(ia), Some(ib)) = (ids[a], ids[b]) {
                                    m[(back[&ia], back[&ib])] += (qp.w * psi[a] * psi[b]).f64();
                                }
                            }
                        }
                    }
                }
            }
        }
        // smallest eigenvalue of M^-1 S via symmetric whitening
        let mc = m.clone().cholesky().ok_or(crate::error::FemError::RankDeficient { infsup: 0.0 })?;
        let li = mc.l().try_inverse().ok_or(crate::error::FemError::RankDeficient { infsup: 0.0 })?;
        let w = &li * &s * li.transpose();
        let sym = 0.5 * (&w + w.transpose());
        let eig = sym.symmetric_eigen();
        let lam_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if lam_min <= 1e-12 {
            return Err(crate::error::FemError::RankDeficient { infsup: lam_min.max(0.0).sqrt() });
        }
        Ok(lam_min.sqrt())
    }
}

/// l2 norm.
pub fn l2<R: Scalar>(v: &[R]) -> R {
    Float::sqrt(v.iter().map(|&x| x * x).sum::<R>())
}
