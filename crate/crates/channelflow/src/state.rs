//! Discrete flow states and their energy bookkeeping.

use crate::assemble::{BasisTables, QuadField};
use crate::basis::q2_basis;
use crate::carrier::FluxCarrier;
use crate::scalar::Scalar;
use crate::shear::ShearFlow;
use crate::system::Discretization;
use num_traits::Float;

/// Solution of a truncated-domain problem: free unknowns plus the prescribed
/// end data the solve was run with.
#[derive(Debug, Clone)]
pub struct FlowState<R> {
    pub x: Vec<R>,
    pub end: Vec<[R; 2]>,
    pub phi: R,
    pub eps: R,
    /// Constant subtracted from the pressure so its mean vanishes.
    pub p_shift: R,
}

impl<R: Scalar> FlowState<R> {
    pub fn velocity_field(&self, disc: &Discretization<R>) -> QuadField<R> {
        QuadField::from_state(&disc.mesh, &disc.dofmap, &disc.tables, &self.x, &self.end)
    }

    /// Pressure value at a physical point of cell (i, j), zero-mean normalized.
    pub fn pressure_at(&self, disc: &Discretization<R>, i: usize, j: usize, x1: R, x2: R) -> R {
        let mesh = &disc.mesh;
        let (_, xc) = mesh.cell_x1(i, R::lit(0.5));
        let secc = mesh.profile.section(xc);
        let sc = mesh.cell_s(j, R::lit(0.5));
        let yc = secc.f1 + sc * secc.width();
        let lx = mesh.hx();
        let ly = mesh.ds(j) * secc.width();
        let psi = crate::basis::p1_basis(x1, x2, xc, yc, lx, ly);
        let ids = disc.dofmap.pressure_ids(i, j);
        let mut p = R::zero();
        for m in 0..3 {
            if let Some(id) = ids[m] {
                p += self.x[id] * psi[m];
            }
        }
        p - self.p_shift
    }

    /// Compute and store the zero-mean pressure shift.
    pub fn normalize_pressure(&mut self, disc: &Discretization<R>) {
        let mesh = &disc.mesh;
        let mut mass = R::zero();
        let mut total = R::zero();
        for i in 0..mesh.nx {
            let mut secs = Vec::with_capacity(mesh.nq);
            for qx in 0..mesh.nq {
                let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
                secs.push(mesh.profile.section(x1));
            }
            for j in 0..mesh.ny {
                for qx in 0..mesh.nq {
                    for qy in 0..mesh.nq {
                        let qp = mesh.quad_point(i, j, qx, qy, &secs[qx]);
                        self.p_shift = R::zero();
                        let p = self.pressure_at(disc, i, j, qp.x1, qp.x2);
                        total += qp.w * p;
                        mass += qp.w;
                    }
                }
            }
        }
        self.p_shift = total / mass;
    }
}

/// Energies split per cell column, used by all windowed estimates. The
/// u-quantities are for the reconstructed field u = v + g; wall integrals
/// carry the arclength weight. Columns are indexed 0..nx with x-range
/// [xcols[2i], xcols[2i+2]].
#[derive(Debug, Clone)]
pub struct ColumnEnergies {
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub grad_u_sq: Vec<f64>,
    pub wall_u_sq: Vec<f64>,
    pub grad_v_sq: Vec<f64>,
    pub wall_v_sq: Vec<f64>,
}

impl ColumnEnergies {
    /// Sum of a quantity over the columns intersecting [lo, hi] (columns are
    /// counted when their midpoint lies inside).
    pub fn window_sum(&self, values: &[f64], lo: f64, hi: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.x_lo.len() {
            let mid = 0.5 * (self.x_lo[i] + self.x_hi[i]);
            if mid > lo && mid < hi {
                acc += values[i];
            }
        }
        acc
    }
}

/// Per-column energies of v and u = v + g.
pub fn column_energies<R: Scalar>(
    disc: &Discretization<R>,
    carrier: &FluxCarrier<R>,
    state: &FlowState<R>,
) -> ColumnEnergies {
    let mesh = &disc.mesh;
    let nq = mesh.nq;
    let tables: &BasisTables<R> = &disc.tables;
    let nlev = 2 * mesh.ny + 1;
    let mut out = ColumnEnergies {
        x_lo: vec![0.0; mesh.nx],
        x_hi: vec![0.0; mesh.nx],
        grad_u_sq: vec![0.0; mesh.nx],
        wall_u_sq: vec![0.0; mesh.nx],
        grad_v_sq: vec![0.0; mesh.nx],
        wall_v_sq: vec![0.0; mesh.nx],
    };
    for i in 0..mesh.nx {
        out.x_lo[i] = mesh.xcols[2 * i].f64();
        out.x_hi[i] = mesh.xcols[2 * i + 2].f64();
        let mut secs = Vec::with_capacity(nq);
        for qx in 0..nq {
            let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
            secs.push(mesh.profile.section(x1));
        }
        let mut gu = R::zero();
        let mut gv = R::zero();
        for j in 0..mesh.ny {
            let mut nodal = [[R::zero(); 2]; 9];
            for a in 0..3 {
                for b in 0..3 {
                    let nid = (2 * i + a) * nlev + (2 * j + b);
                    nodal[a * 3 + b] = disc.dofmap.node_velocity(nid, &state.x, &state.end);
                }
            }
            for qx in 0..nq {
                for qy in 0..nq {
                    let q = qx * nq + qy;
                    let qp = mesh.quad_point(i, j, qx, qy, &secs[qx]);
                    let mut grad_v = [[R::zero(); 2]; 2];
                    for ln in 0..9 {
                        let gp = qp.grad(tables.grad[q][ln][0], tables.grad[q][ln][1]);
                        for c in 0..2 {
                            grad_v[c][0] += nodal[ln][c] * gp[0];
                            grad_v[c][1] += nodal[ln][c] * gp[1];
                        }
                    }
                    let jet = carrier.jet_unchecked(&secs[qx], qp.x2);
                    let mut v2 = R::zero();
                    let mut u2 = R::zero();
                    for c in 0..2 {
                        for d in 0..2 {
                            let gvv = grad_v[c][d];
                            let guu = gvv + jet.grad[c][d];
                            v2 += gvv * gvv;
                            u2 += guu * guu;
                        }
                    }
                    gv += qp.w * v2;
                    gu += qp.w * u2;
                }
            }
        }
        out.grad_u_sq[i] = gu.f64();
        out.grad_v_sq[i] = gv.f64();
        // wall traces: g vanishes there, so u = v on the walls
        let mut wall = R::zero();
        for upper in [false, true] {
            let j_facet = if upper { mesh.ny - 1 } else { 0 };
            let eta = if upper { R::one() } else { R::zero() };
            for qx in 0..nq {
                let sec = &secs[qx];
                let slope = if upper { sec.f2_d1 } else { sec.f1_d1 };
                let arc = mesh.hx() * mesh.q_weights[qx] * Float::sqrt(R::one() + slope * slope);
                let (val, _) = q2_basis(mesh.q_nodes[qx], eta);
                let mut v = [R::zero(); 2];
                for a in 0..3 {
                    for b in 0..3 {
                        let phi = val[a * 3 + b];
                        if phi == R::zero() {
                            continue;
                        }
                        let nid = (2 * i + a) * nlev + (2 * j_facet + b);
                        let nodal = disc.dofmap.node_velocity(nid, &state.x, &state.end);
                        v[0] += phi * nodal[0];
                        v[1] += phi * nodal[1];
                    }
                }
                wall += arc * (v[0] * v[0] + v[1] * v[1]);
            }
        }
        out.wall_u_sq[i] = wall.f64();
        out.wall_v_sq[i] = wall.f64();
    }
    out
}

/// Global velocity-correction energies: (|grad v|^2, wall |v|^2).
pub fn velocity_energy<R: Scalar>(
    disc: &Discretization<R>,
    x: &[R],
    end: &[[R; 2]],
) -> (f64, f64) {
    let carrier = FluxCarrier::new(disc.mesh.profile.clone(), R::zero(), R::lit(0.5));
    let state = FlowState {
        x: x.to_vec(),
        end: end.to_vec(),
        phi: R::zero(),
        eps: R::lit(0.5),
        p_shift: R::zero(),
    };
    let cols = column_energies(disc, &carrier, &state);
    (cols.grad_v_sq.iter().sum(), cols.wall_v_sq.iter().sum())
}

/// Per-column deviation of u = v + g from the shear flow U:
/// (int |u - U|^2, int |grad (u - U)|^2, int |U|^2) per column.
pub fn shear_deviation_per_column<R: Scalar>(
    disc: &Discretization<R>,
    carrier: &FluxCarrier<R>,
    state: &FlowState<R>,
    shear: &ShearFlow<R>,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mesh = &disc.mesh;
    let nq = mesh.nq;
    let tables = &disc.tables;
    let nlev = 2 * mesh.ny + 1;
    let mut l2 = vec![0.0; mesh.nx];
    let mut h1 = vec![0.0; mesh.nx];
    let mut unorm = vec![0.0; mesh.nx];
    for i in 0..mesh.nx {
        let mut secs = Vec::with_capacity(nq);
        for qx in 0..nq {
            let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
            secs.push(mesh.profile.section(x1));
        }
        let mut acc_l2 = R::zero();
        let mut acc_h1 = R::zero();
        let mut acc_u = R::zero();
        for j in 0..mesh.ny {
            let mut nodal = [[R::zero(); 2]; 9];
            for a in 0..3 {
                for b in 0..3 {
                    let nid = (2 * i + a) * nlev + (2 * j + b);
                    nodal[a * 3 + b] = disc.dofmap.node_velocity(nid, &state.x, &state.end);
                }
            }
            for qx in 0..nq {
                for qy in 0..nq {
                    let q = qx * nq + qy;
                    let qp = mesh.quad_point(i, j, qx, qy, &secs[qx]);
                    let mut v = [R::zero(); 2];
                    let mut grad_v = [[R::zero(); 2]; 2];
                    for ln in 0..9 {
                        let phi = tables.val[q][ln];
                        let gp = qp.grad(tables.grad[q][ln][0], tables.grad[q][ln][1]);
                        for c in 0..2 {
                            v[c] += nodal[ln][c] * phi;
                            grad_v[c][0] += nodal[ln][c] * gp[0];
                            grad_v[c][1] += nodal[ln][c] * gp[1];
                        }
                    }
                    let jet = carrier.jet_unchecked(&secs[qx], qp.x2);
                    let du = [v[0] + jet.g[0] - shear.u(qp.x2), v[1] + jet.g[1]];
                    let mut dgrad = [[R::zero(); 2]; 2];
                    for c in 0..2 {
                        for d in 0..2 {
                            dgrad[c][d] = grad_v[c][d] + jet.grad[c][d];
                        }
                    }
                    dgrad[0][1] -= shear.du(qp.x2);
                    acc_l2 += qp.w * (du[0] * du[0] + du[1] * du[1]);
                    let mut gsq = R::zero();
                    for c in 0..2 {
                        for d in 0..2 {
                            gsq += dgrad[c][d] * dgrad[c][d];
                        }
                    }
                    acc_h1 += qp.w * gsq;
                    let uu = shear.u(qp.x2);
                    acc_u += qp.w * uu * uu;
                }
            }
        }
        l2[i] = acc_l2.f64();
        h1[i] = acc_h1.f64();
        unorm[i] = acc_u.f64();
    }
    (l2, h1, unorm)
}

/// Flux of u through every even node column; returns (x1, flux) pairs.
pub fn section_fluxes<R: Scalar>(
    disc: &Discretization<R>,
    state: &FlowState<R>,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for ix in (0..=(2 * disc.mesh.nx)).step_by(2) {
        let fl = disc.section_flux(ix, &state.x, &state.end, state.phi);
        out.push((disc.mesh.xcols[ix].f64(), fl.f64()));
    }
    out
}
