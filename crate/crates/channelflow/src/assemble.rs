//! Assembly of the mixed bilinear forms on the mapped mesh.
//!
//! All operators scatter into a generic sink (triplets for tests, the band
//! matrix for solving) after rotating wall-node blocks into their
//! (tangent, normal) frames and moving prescribed end-node data to the right
//! hand side. Element loops run in a fixed cell order so assembly is
//! bit-reproducible.

use crate::basis::{p1_basis, q2_basis};
use crate::band::BandMatrix;
use crate::carrier::FluxCarrier;
use crate::dofmap::{DofMap, VelNode};
use crate::mesh::Mesh;
use crate::scalar::Scalar;

pub trait MatrixSink<R> {
    fn add(&mut self, i: usize, j: usize, v: R);
}

/// Triplet list; also does dense-ish matvecs for tests and residual checks.
#[derive(Debug, Clone)]
pub struct Triplets<R> {
    pub n: usize,
    pub entries: Vec<(u32, u32, R)>,
}

impl<R: Scalar> Triplets<R> {
    pub fn new(n: usize) -> Self {
        Triplets { n, entries: Vec::new() }
    }

    pub fn matvec(&self, x: &[R], y: &mut [R]) {
        for v in y.iter_mut() {
            *v = R::zero();
        }
        for &(i, j, a) in &self.entries {
            y[i as usize] += a * x[j as usize];
        }
    }

    pub fn quadratic_form(&self, x: &[R], y: &[R]) -> R {
        let mut acc = R::zero();
        for &(i, j, a) in &self.entries {
            acc += x[i as usize] * a * y[j as usize];
        }
        acc
    }

    /// Max |i - j| over entries.
    pub fn band_extent(&self) -> usize {
        self.entries
            .iter()
            .map(|&(i, j, _)| (i as isize - j as isize).unsigned_abs())
            .max()
            .unwrap_or(0)
    }
}

impl<R: Scalar> MatrixSink<R> for Triplets<R> {
    #[inline]
    fn add(&mut self, i: usize, j: usize, v: R) {
        self.entries.push((i as u32, j as u32, v));
    }
}

impl<R: Scalar> MatrixSink<R> for BandMatrix<R> {
    #[inline]
    fn add(&mut self, i: usize, j: usize, v: R) {
        BandMatrix::add(self, i, j, v);
    }
}

/// Reference basis tables at the tensor quadrature points.
pub struct BasisTables<R> {
    pub nq: usize,
    /// val[q][ln], grad[q][ln] with q = qx * nq + qy.
    pub val: Vec<[R; 9]>,
    pub grad: Vec<[[R; 2]; 9]>,
}

impl<R: Scalar> BasisTables<R> {
    pub fn new(mesh: &Mesh<R>) -> Self {
        let nq = mesh.nq;
        let mut val = Vec::with_capacity(nq * nq);
        let mut grad = Vec::with_capacity(nq * nq);
        for qx in 0..nq {
            for qy in 0..nq {
                let (v, g) = q2_basis(mesh.q_nodes[qx], mesh.q_nodes[qy]);
                val.push(v);
                grad.push(g);
            }
        }
        BasisTables { nq, val, grad }
    }
}

/// A vector field cached at every quadrature point (value and gradient).
#[derive(Debug, Clone)]
pub struct QuadField<R> {
    pub nq2: usize,
    pub val: Vec<[R; 2]>,
    pub grad: Vec<[[R; 2]; 2]>,
}

impl<R: Scalar> QuadField<R> {
    pub fn zeros(mesh: &Mesh<R>) -> Self {
        let n = mesh.nx * mesh.ny * mesh.nq * mesh.nq;
        QuadField { nq2: mesh.nq * mesh.nq, val: vec![[R::zero(); 2]; n], grad: vec![[[R::zero(); 2]; 2]; n] }
    }

    #[inline]
    pub fn idx(&self, mesh: &Mesh<R>, i: usize, j: usize, q: usize) -> usize {
        (i * mesh.ny + j) * self.nq2 + q
    }

    /// Analytic carrier field at the quadrature points.
    pub fn from_carrier(mesh: &Mesh<R>, carrier: &FluxCarrier<R>) -> Self {
        let mut out = Self::zeros(mesh);
        for i in 0..mesh.nx {
            for qx in 0..mesh.nq {
                let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
                let sec = mesh.profile.section(x1);
                for j in 0..mesh.ny {
                    for qy in 0..mesh.nq {
                        let qp = mesh.quad_point(i, j, qx, qy, &sec);
                        let jet = carrier.jet_unchecked(&sec, qp.x2);
                        let id = out.idx(mesh, i, j, qx * mesh.nq + qy);
                        out.val[id] = jet.g;
                        out.grad[id] = jet.grad;
                    }
                }
            }
        }
        out
    }

    /// Discrete velocity field (free vector + end data) at the quadrature points.
    pub fn from_state(
        mesh: &Mesh<R>,
        dofmap: &DofMap<R>,
        tables: &BasisTables<R>,
        free: &[R],
        end: &[[R; 2]],
    ) -> Self {
        let mut out = Self::zeros(mesh);
        let nq = mesh.nq;
        for i in 0..mesh.nx {
            let mut secs = Vec::with_capacity(nq);
            for qx in 0..nq {
                let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
                secs.push(mesh.profile.section(x1));
            }
            for j in 0..mesh.ny {
                let nodes = dofmap.cell_nodes(i, j);
                let mut nodal = [[R::zero(); 2]; 9];
                for (ln, nid) in nodes.iter().enumerate() {
                    nodal[ln] = dofmap.node_velocity(*nid, free, end);
                }
                for qx in 0..nq {
                    for qy in 0..nq {
                        let q = qx * nq + qy;
                        let qp = mesh.quad_point(i, j, qx, qy, &secs[qx]);
                        let id = out.idx(mesh, i, j, q);
                        let mut v = [R::zero(); 2];
                        let mut g = [[R::zero(); 2]; 2];
                        for ln in 0..9 {
                            let phi = tables.val[q][ln];
                            let gp = qp.grad(tables.grad[q][ln][0], tables.grad[q][ln][1]);
                            for c in 0..2 {
                                v[c] += nodal[ln][c] * phi;
                                g[c][0] += nodal[ln][c] * gp[0];
                                g[c][1] += nodal[ln][c] * gp[1];
                            }
                        }
                        out.val[id] = v;
                        out.grad[id] = g;
                    }
                }
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &QuadField<R>) {
        for (a, b) in self.val.iter_mut().zip(&other.val) {
            a[0] += b[0];
            a[1] += b[1];
        }
        for (a, b) in self.grad.iter_mut().zip(&other.grad) {
            for c in 0..2 {
                a[c][0] += b[c][0];
                a[c][1] += b[c][1];
            }
        }
    }
}

/// Local cell system: 18 velocity dofs then 3 pressure modes.
pub struct LocalSystem<R> {
    pub k: [[R; 21]; 21],
    pub f: [R; 21],
}

impl<R: Scalar> LocalSystem<R> {
    pub fn new() -> Self {
        LocalSystem { k: [[R::zero(); 21]; 21], f: [R::zero(); 21] }
    }
}

impl<R: Scalar> Default for LocalSystem<R> {
    fn default() -> Self {
        Self::new()
    }
}

/// Rotate wall-node blocks, then scatter into the sink / rhs, moving
/// prescribed end values to the right hand side.
pub fn scatter<R: Scalar, S: MatrixSink<R>>(
    dofmap: &DofMap<R>,
    i: usize,
    j: usize,
    local: &mut LocalSystem<R>,
    sink: &mut S,
    rhs: &mut [R],
    end: &[[R; 2]],
) {
    let nodes = dofmap.cell_nodes(i, j);
    // rotation: columns then rows, per wall node
    for (ln, nid) in nodes.iter().enumerate() {
        if let VelNode::Wall { tangent, normal, .. } = dofmap.vel_node(*nid) {
            let (c0, c1) = (2 * ln, 2 * ln + 1);
            for r in 0..21 {
                let kx = local.k[r][c0];
                let ky = local.k[r][c1];
                local.k[r][c0] = kx * tangent[0] + ky * tangent[1];
                local.k[r][c1] = kx * normal[0] + ky * normal[1];
            }
            for c in 0..21 {
                let kx = local.k[c0][c];
                let ky = local.k[c1][c];
                local.k[c0][c] = kx * tangent[0] + ky * tangent[1];
                local.k[c1][c] = kx * normal[0] + ky * normal[1];
            }
            let fx = local.f[c0];
            let fy = local.f[c1];
            local.f[c0] = fx * tangent[0] + fy * tangent[1];
            local.f[c1] = fx * normal[0] + fy * normal[1];
        }
    }
    // global ids and prescribed values per local dof
    let mut glob = [None::<usize>; 21];
    let mut fixed = [R::zero(); 21];
    for (ln, nid) in nodes.iter().enumerate() {
        match dofmap.vel_node(*nid) {
            VelNode::Interior { ids } => {
                glob[2 * ln] = Some(ids[0]);
                glob[2 * ln + 1] = Some(ids[1]);
            }
            VelNode::Wall { id, .. } => {
                glob[2 * ln] = Some(*id);
                // normal component prescribed to zero
            }
            VelNode::End => {
                let ev = end.get(*nid).copied().unwrap_or([R::zero(); 2]);
                fixed[2 * ln] = ev[0];
                fixed[2 * ln + 1] = ev[1];
            }
        }
    }
    let pids = dofmap.pressure_ids(i, j);
    for m in 0..3 {
        glob[18 + m] = pids[m]; // pinned mode keeps value zero
    }
    for r in 0..21 {
        let Some(gr) = glob[r] else { continue };
        let mut load = local.f[r];
        for c in 0..21 {
            match glob[c] {
                Some(gc) => {
                    let v = local.k[r][c];
                    if v != R::zero() {
                        sink.add(gr, gc, v);
                    }
                }
                None => {
                    load -= local.k[r][c] * fixed[c];
                }
            }
        }
        rhs[gr] += load;
    }
}

/// 2 int D(v):D(phi) + theta * wall integral of v . phi.
pub fn assemble_viscous_slip<R: Scalar, S: MatrixSink<R>>(
    mesh: &Mesh<R>,
    dofmap: &DofMap<R>,
    tables: &BasisTables<R>,
    theta: R,
    sink: &mut S,
    rhs: &mut [R],
    end: &[[R; 2]],
) {
    let nq = mesh.nq;
    for i in 0..mesh.nx {
        let mut secs = Vec::with_capacity(nq);
        for qx in 0..nq {
            let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
            secs.push(mesh.profile.section(x1));
        }
        for j in 0..mesh.ny {
            let mut local = LocalSystem::new();
            for qx in 0..nq {
                for qy in 0..nq {
                    let q = qx * nq + qy;
                    let qp = mesh.quad_point(i, j, qx, qy, &secs[qx]);
                    let mut g = [[R::zero(); 2]; 9];
                    for ln in 0..9 {
                        g[ln] = qp.grad(tables.grad[q][ln][0], tables.grad[q][ln][1]);
                    }
                    for a in 0..9 {
                        for b in 0..9 {
                            let dot = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                            for c in 0..2 {
                                for d in 0..2 {
                                    let mut v = g[b][c] * g[a][d];
                                    if c == d {
                                        v += dot;
                                    }
                                    local.k[2 * a + c][2 * b + d] += qp.w * v;
                                }
                            }
                        }
                    }
                }
            }
            // wall terms on the bottom (j = 0) and top (j = ny-1) edges
            if theta != R::zero() {
                for upper in [false, true] {
                    if (upper && j != mesh.ny - 1) || (!upper && j != 0) {
                        continue;
                    }
                    let eta = if upper { R::one() } else { R::zero() };
                    for qx in 0..nq {
                        let sec = &secs[qx];
                        let slope = if upper { sec.f2_d1 } else { sec.f1_d1 };
                        let arc = mesh.hx()
                            * mesh.q_weights[qx]
                            * num_traits::Float::sqrt(R::one() + slope * slope);
                        let (val, _) = q2_basis(mesh.q_nodes[qx], eta);
                        for a in 0..9 {
                            if val[a] == R::zero() {
                                continue;
                            }
                            for b in 0..9 {
                                if val[b] == R::zero() {
                                    continue;
                                }
                                let m = theta * arc * val[a] * val[b];
                                local.k[2 * a][2 * b] += m;
                                local.k[2 * a + 1][2 * b + 1] += m;
                            }
                        }
                    }
                }
            }
            scatter(dofmap, i, j, &mut local, sink, rhs, end);
        }
    }
}

/// Mixed coupling: pressure rows -int q div v and velocity rows -int p div phi.
pub fn assemble_divergence<R: Scalar, S: MatrixSink<R>>(
    mesh: &Mesh<R>,
    dofmap: &DofMap<R>,
    tables: &BasisTables<R>,
    sink: &mut S,
    rhs: &mut [R],
    end: &[[R; 2]],
) {
    let nq = mesh.nq;
    for i in 0..mesh.nx {
        let mut secs = Vec::with_capacity(nq);
        for qx in 0..nq {
            let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
            secs.push(mesh.profile.section(x1));
        }
        for j in 0..mesh.ny {
            let mut local = LocalSystem::new();
            // cell center and scales for the pressure modes
            let (_, xc) = mesh.cell_x1(i, R::lit(0.5));
            let secc = mesh.profile.section(xc);
            let sc = mesh.cell_s(j, R::lit(0.5));
            let yc = secc.f1 + sc * secc.width();
            let lx = mesh.hx();
            let ly = mesh.ds(j) * secc.width();
            for qx in 0..nq {
                for qy in 0..nq {
                    let q = qx * nq + qy;
                    let qp = mesh.quad_point(i, j, qx, qy, &secs[qx]);
                    let psi = p1_basis(qp.x1, qp.x2, xc, yc, lx, ly);
                    for a in 0..9 {
                        let g = qp.grad(tables.grad[q][a][0], tables.grad[q][a][1]);
                        for m in 0..3 {
                            let v = qp.w * psi[m];
                            for c in 0..2 {
                                let e = -v * g[c];
                                local.k[18 + m][2 * a + c] += e;
                                local.k[2 * a + c][18 + m] += e;
                            }
                        }
                    }
                }
            }
            scatter(dofmap, i, j, &mut local, sink, rhs, end);
        }
    }
}

/// Convection: reaction int (v . grad R) . phi plus skew-symmetrized
/// transport by the advecting field w.
pub fn assemble_oseen<R: Scalar, S: MatrixSink<R>>(
    mesh: &Mesh<R>,
    dofmap: &DofMap<R>,
    tables: &BasisTables<R>,
    advect: &QuadField<R>,
    reaction: Option<&QuadField<R>>,
    sink: &mut S,
    rhs: &mut [R],
    end: &[[R; 2]],
) {
    let nq = mesh.nq;
    let half = R::lit(0.5);
    for i in 0..mesh.nx {
        let mut secs = Vec::with_capacity(nq);
        for qx in 0..nq {
            let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
            secs.push(mesh.profile.section(x1));
        }
        for j in 0..mesh.ny {
            let mut local = LocalSystem::new();
            for qx in 0..nq {
                for qy in 0..nq {
                    let q = qx * nq + qy;
                    let qp = mesh.quad_point(i, j, qx, qy, &secs[qx]);
                    let id = advect.idx(mesh, i, j, q);
                    let w = advect.val[id];
                    let mut g = [[R::zero(); 2]; 9];
                    for ln in 0..9 {
                        g[ln] = qp.grad(tables.grad[q][ln][0], tables.grad[q][ln][1]);
                    }
                    let phi = &tables.val[q];
                    // skew transport: 1/2 [ (w . grad v) . phi - (w . grad phi) . v ]
                    for a in 0..9 {
                        let wga = w[0] * g[a][0] + w[1] * g[a][1];
                        for b in 0..9 {
                            let wgb = w[0] * g[b][0] + w[1] * g[b][1];
                            let t = half * qp.w * (phi[a] * wgb - phi[b] * wga);
                            local.k[2 * a][2 * b] += t;
                            local.k[2 * a + 1][2 * b + 1] += t;
                        }
                    }
                    if let Some(re) = reaction {
                        let gr = re.grad[re.idx(mesh, i, j, q)];
                        for a in 0..9 {
                            for b in 0..9 {
                                let m = qp.w * phi[a] * phi[b];
                                for c in 0..2 {
                                    for d in 0..2 {
                                        local.k[2 * a + c][2 * b + d] += m * gr[c][d];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            scatter(dofmap, i, j, &mut local, sink, rhs, end);
        }
    }
}

/// Carrier load: l(phi) = -2 int D(g):D(phi) + int (g . grad phi) . g.
pub fn assemble_carrier_rhs<R: Scalar>(
    mesh: &Mesh<R>,
    dofmap: &DofMap<R>,
    tables: &BasisTables<R>,
    g_field: &QuadField<R>,
    rhs: &mut [R],
) {
    let nq = mesh.nq;
    for i in 0..mesh.nx {
        let mut secs = Vec::with_capacity(nq);
        for qx in 0..nq {
            let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
            secs.push(mesh.profile.section(x1));
        }
        for j in 0..mesh.ny {
            let mut local = LocalSystem::new();
            for qx in 0..nq {
                for qy in 0..nq {
                    let q = qx * nq + qy;
                    let qp = mesh.quad_point(i, j, qx, qy, &secs[qx]);
                    let id = g_field.idx(mesh, i, j, q);
                    let gv = g_field.val[id];
                    let gg = g_field.grad[id];
                    for a in 0..9 {
                        let ga = qp.grad(tables.grad[q][a][0], tables.grad[q][a][1]);
                        let g_dot_ga = gv[0] * ga[0] + gv[1] * ga[1];
                        for c in 0..2 {
                            // -(2 D(g))_{ic} d_i phi_a
                            let mut visc = R::zero();
                            for ii in 0..2 {
                                visc += (gg[c][ii] + gg[ii][c]) * ga[ii];
                            }
                            local.f[2 * a + c] += qp.w * (gv[c] * g_dot_ga - visc);
                        }
                    }
                }
            }
            let mut nosink = Triplets::new(0);
            scatter(dofmap, i, j, &mut local, &mut nosink, rhs, &[]);
        }
    }
}

/// Quadratic load in skew form: subtract
/// `n(w)[phi] = 1/2 [ (w . grad w, phi) - (w . grad phi, w) ]`
/// from the rhs, so the discrete nonlinear term pairs to zero with w itself.
pub fn assemble_convection_rhs<R: Scalar>(
    mesh: &Mesh<R>,
    dofmap: &DofMap<R>,
    tables: &BasisTables<R>,
    w_field: &QuadField<R>,
    rhs: &mut [R],
) {
    let nq = mesh.nq;
    let half = R::lit(0.5);
    for i in 0..mesh.nx {
        let mut secs = Vec::with_capacity(nq);
        for qx in 0..nq {
            let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
            secs.push(mesh.profile.section(x1));
        }
        for j in 0..mesh.ny {
            let mut local = LocalSystem::new();
            for qx in 0..nq {
                for qy in 0..nq {
                    let q = qx * nq + qy;
                    let qp = mesh.quad_point(i, j, qx, qy, &secs[qx]);
                    let id = w_field.idx(mesh, i, j, q);
                    let w = w_field.val[id];
                    let gw = w_field.grad[id];
                    let conv = [
                        w[0] * gw[0][0] + w[1] * gw[0][1],
                        w[0] * gw[1][0] + w[1] * gw[1][1],
                    ];
                    for a in 0..9 {
                        let phi_a = tables.val[q][a];
                        let ga = qp.grad(tables.grad[q][a][0], tables.grad[q][a][1]);
                        let w_dot_ga = w[0] * ga[0] + w[1] * ga[1];
                        for c in 0..2 {
                            local.f[2 * a + c] -=
                                half * qp.w * (conv[c] * phi_a - w[c] * w_dot_ga);
                        }
                    }
                }
            }
            let mut nosink = Triplets::new(0);
            scatter(dofmap, i, j, &mut local, &mut nosink, rhs, &[]);
        }
    }
}

/// Jacobian block of the skew nonlinear term with respect to its argument at
/// the field `wbar`: `1/2 [ (delta . grad wbar, phi) - (delta . grad phi, wbar) ]`.
pub fn assemble_skew_reaction<R: Scalar, S: MatrixSink<R>>(
    mesh: &Mesh<R>,
    dofmap: &DofMap<R>,
    tables: &BasisTables<R>,
    wbar: &QuadField<R>,
    sink: &mut S,
    rhs: &mut [R],
    end: &[[R; 2]],
) {
    let nq = mesh.nq;
    let half = R::lit(0.5);
    for i in 0..mesh.nx {
        let mut secs = Vec::with_capacity(nq);
        for qx in 0..nq {
            let (_, x1) = mesh.cell_x1(i, mesh.q_nodes[qx]);
            secs.push(mesh.profile.section(x1));
        }
        for j in 0..mesh.ny {
            let mut local = LocalSystem::new();
            for qx in 0..nq {
                for qy in 0..nq {
                    let q = qx * nq + qy;
                    let qp = mesh.quad_point(i, j, qx, qy, &secs[qx]);
                    let id = wbar.idx(mesh, i, j, q);
                    let wv = wbar.val[id];
                    let gw = wbar.grad[id];
                    let phi = &tables.val[q];
                    let mut g = [[R::zero(); 2]; 9];
                    for ln in 0..9 {
                        g[ln] = qp.grad(tables.grad[q][ln][0], tables.grad[q][ln][1]);
                    }
                    for a in 0..9 {
                        for b in 0..9 {
                            let m = half * qp.w * phi[a] * phi[b];
                            let s = half * qp.w * phi[b];
                            for c in 0..2 {
                                for d in 0..2 {
                                    local.k[2 * a + c][2 * b + d] +=
                                        m * gw[c][d] - s * g[a][d] * wv[c];
                                }
                            }
                        }
                    }
                }
            }
            scatter(dofmap, i, j, &mut local, sink, rhs, end);
        }
    }
}
