//! Nonlinear solves on the truncated domain.
//!
//! The primary globalization mirrors the fixed-point map behind the existence
//! argument: the linearized operator (transport frozen at the carrier) is
//! factored once, and each iterate solves against the refreshed quadratic
//! load. Newton with the exact Jacobian of the skew-form nonlinearity is the
//! finisher; flux continuation warms large-flux solves through a geometric
//! ramp.

use crate::assemble::{
    assemble_convection_rhs, assemble_oseen, assemble_skew_reaction, QuadField, Triplets,
};
use crate::carrier::FluxCarrier;
use crate::error::SolveError;
use crate::scalar::Scalar;
use crate::shear::Convention;
use crate::state::{velocity_energy, FlowState};
use crate::system::{l2, Discretization, EndCondition};
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone)]
pub struct SolveOptions<R> {
    pub tol_rel: R,
    pub max_picard: usize,
    pub max_newton: usize,
    pub damping: R,
    pub continuation_steps: usize,
    /// Initial carrier parameter; halved on stalls.
    pub eps0: R,
    pub max_eps_fallbacks: usize,
    pub convention: Convention,
    pub seed: u64,
}

impl<R: Scalar> Default for SolveOptions<R> {
    fn default() -> Self {
        SolveOptions {
            tol_rel: R::lit(1e-10),
            max_picard: 60,
            max_newton: 12,
            damping: R::one(),
            continuation_steps: 1,
            eps0: R::lit(0.25),
            max_eps_fallbacks: 2,
            convention: Convention::WeakFormConsistent,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub newton_iterations: usize,
    pub residual_history: Vec<f64>,
    pub residual_monotone_after_damping: bool,
    pub grad_v_sq: f64,
    pub wall_v_sq: f64,
    pub carrier_energy: f64,
    /// (|grad v|^2 + alpha |v|^2_walls) / carrier energy: empirical constant
    /// of the a-priori bound.
    pub energy_ratio: f64,
    pub eps_used: f64,
    pub eps_fallbacks: usize,
    pub algebraic_residual: f64,
    pub continuity_residual: f64,
    pub max_flux_defect: f64,
}

/// Shared residual machinery: F(x) = A x + n_skew(v_x) - rhs0.
struct Problem<'a, R: Scalar> {
    disc: &'a Discretization<R>,
    trip: Triplets<R>,
    rhs0: Vec<R>,
    end: Vec<[R; 2]>,
    rhs_scale: R,
}

impl<'a, R: Scalar> Problem<'a, R> {
    fn build(disc: &'a Discretization<R>, carrier: &FluxCarrier<R>, end_cond: &EndCondition<R>) -> (Self, QuadField<R>) {
        let g_field = QuadField::from_carrier(&disc.mesh, carrier);
        let end = disc.end_values(end_cond, carrier);
        let (trip, rhs0) = disc.assemble_linearized(&g_field, &end);
        let rhs_scale = Float::max(l2(&rhs0), R::lit(1e-30));
        (Problem { disc, trip, rhs0, end, rhs_scale }, g_field)
    }

    /// rhs for the fixed-point solve at iterate v: rhs0 - n_skew(v).
    fn picard_rhs(&self, x: &[R]) -> Vec<R> {
        let mut rhs = self.rhs0.clone();
        let v = QuadField::from_state(&self.disc.mesh, &self.disc.dofmap, &self.disc.tables, x, &self.end);
        assemble_convection_rhs(&self.disc.mesh, &self.disc.dofmap, &self.disc.tables, &v, &mut rhs);
        rhs
    }

    /// Relative nonlinear residual |A x + n(v) - rhs0| / |rhs0|.
    fn residual(&self, x: &[R]) -> f64 {
        let rhs = self.picard_rhs(x);
        let mut ax = vec![R::zero(); x.len()];
        self.trip.matvec(x, &mut ax);
        let mut acc = R::zero();
        for i in 0..x.len() {
            let d = ax[i] - rhs[i];
            acc += d * d;
        }
        (Float::sqrt(acc) / self.rhs_scale).f64()
    }
}

fn physical_alpha<R: Scalar>(disc: &Discretization<R>, convention: Convention) -> R {
    match convention {
        Convention::WeakFormConsistent => disc.theta * R::lit(0.5),
        Convention::PaperFormula => disc.theta,
    }
}

fn finish_report<R: Scalar>(
    disc: &Discretization<R>,
    carrier: &FluxCarrier<R>,
    problem: &Problem<R>,
    x: &[R],
    history: Vec<f64>,
    newton_iterations: usize,
    eps_fallbacks: usize,
    monotone: bool,
    algebraic_residual: f64,
    alpha_like: R,
) -> (FlowState<R>, SolveReport) {
    let mut state = FlowState {
        x: x.to_vec(),
        end: problem.end.clone(),
        phi: carrier.phi,
        eps: carrier.eps,
        p_shift: R::zero(),
    };
    state.normalize_pressure(disc);
    let (gv, wv) = velocity_energy(disc, x, &problem.end);
    let energy = carrier.energy(disc.mesh.a, disc.mesh.b).f64();
    let cont = disc.continuity_residual(&problem.trip, x, &problem.picard_rhs(x));
    let fluxes = crate::state::section_fluxes(disc, &state);
    let max_defect = fluxes
        .iter()
        .map(|(_, f)| (f - carrier.phi.f64()).abs())
        .fold(0.0f64, f64::max);
    let iterations = history.len();
    let report = SolveReport {
        iterations,
        newton_iterations,
        residual_history: history,
        residual_monotone_after_damping: monotone,
        grad_v_sq: gv,
        wall_v_sq: wv,
        carrier_energy: energy,
        energy_ratio: if energy > 0.0 { (gv + alpha_like.f64() * wv) / energy } else { 0.0 },
        eps_used: carrier.eps.f64(),
        eps_fallbacks,
        algebraic_residual,
        continuity_residual: cont,
        max_flux_defect: max_defect,
    };
    (state, report)
}

/// Fixed-point iteration v <- damped K(v); the linear operator is factored
/// once per carrier. Stalls halve the carrier parameter and restart.
pub fn picard_solve<R: Scalar>(
    disc: &Discretization<R>,
    carrier0: &FluxCarrier<R>,
    options: &SolveOptions<R>,
    end_cond: &EndCondition<R>,
    warm: Option<&FlowState<R>>,
) -> Result<(FlowState<R>, SolveReport), SolveError> {
    let alpha_like = physical_alpha(disc, options.convention);
    let mut carrier = carrier0.clone();
    let mut fallbacks = 0usize;
    loop {
        let (problem, _g) = Problem::build(disc, &carrier, end_cond);
        let band = disc.band_from(&problem.trip);
        let lu = band.factor()?;
        let mut x = warm.map(|s| s.x.clone()).unwrap_or_else(|| vec![R::zero(); disc.n()]);
        let mut history = Vec::new();
        let mut monotone = true;
        let mut res_prev = problem.residual(&x);
        history.push(res_prev);
        let mut converged = res_prev < options.tol_rel.f64();
        if !converged {
            for _ in 0..options.max_picard {
                let mut rhs = problem.picard_rhs(&x);
                lu.solve(&mut rhs);
                let kx = rhs;
                let mut omega = options.damping;
                let mut accepted = false;
                for _ in 0..=4 {
                    let cand: Vec<R> = x
                        .iter()
                        .zip(&kx)
                        .map(|(&xi, &ki)| xi + omega * (ki - xi))
                        .collect();
                    let res = problem.residual(&cand);
                    if res <= res_prev * (1.0 + 1e-12) || res < options.tol_rel.f64() {
                        // relative update for the stopping rule
                        let mut dn = R::zero();
                        let mut xn = R::zero();
                        for (a, b) in cand.iter().zip(&x) {
                            let d = *a - *b;
                            dn += d * d;
                            xn += *a * *a;
                        }
                        let rel_update =
                            (Float::sqrt(dn) / Float::max(Float::sqrt(xn), R::lit(1e-30))).f64();
                        x = cand;
                        if res > res_prev {
                            monotone = false;
                        }
                        res_prev = res;
                        history.push(res);
                        accepted = true;
                        if rel_update < options.tol_rel.f64() || res < options.tol_rel.f64() {
                            converged = true;
                        }
                        break;
                    }
                    omega = omega * R::lit(0.5);
                }
                if !accepted {
                    break;
                }
                if converged {
                    break;
                }
            }
        }
        if converged && res_prev < Float::max(options.tol_rel, R::lit(1e-9)).f64() {
            let (state, report) = finish_report(
                disc,
                &carrier,
                &problem,
                &x,
                history,
                0,
                fallbacks,
                monotone,
                res_prev * problem.rhs_scale.f64(),
                alpha_like,
            );
            return Ok((state, report));
        }
        if fallbacks < options.max_eps_fallbacks {
            fallbacks += 1;
            carrier = carrier.with_eps(carrier.eps * R::lit(0.5));
            continue;
        }
        return Err(SolveError::NotConverged { residual: res_prev, iters: history.len() });
    }
}

/// Newton with the exact Jacobian of the skew-form problem.
pub fn newton_solve<R: Scalar>(
    disc: &Discretization<R>,
    carrier: &FluxCarrier<R>,
    options: &SolveOptions<R>,
    end_cond: &EndCondition<R>,
    warm: &FlowState<R>,
) -> Result<(FlowState<R>, SolveReport), SolveError> {
    let alpha_like = physical_alpha(disc, options.convention);
    let (problem, _g) = Problem::build(disc, carrier, end_cond);
    let mut x = warm.x.clone();
    let mut history = vec![problem.residual(&x)];
    let mut monotone = true;
    for it in 0..options.max_newton {
        let res = *history.last().unwrap();
        if res < options.tol_rel.f64() {
            break;
        }
        // residual vector F(x)
        let rhs = problem.picard_rhs(&x);
        let mut f = vec![R::zero(); x.len()];
        problem.trip.matvec(&x, &mut f);
        for (fi, ri) in f.iter_mut().zip(&rhs) {
            *fi = *ri - *fi; // -F
        }
        // Jacobian: A + d n_skew(v)
        let v = QuadField::from_state(&disc.mesh, &disc.dofmap, &disc.tables, &x, &problem.end);
        let mut jac = problem.trip.clone();
        let mut dummy = vec![R::zero(); x.len()];
        let zero_end = vec![[R::zero(); 2]; (2 * disc.mesh.nx + 1) * (2 * disc.mesh.ny + 1)];
        assemble_oseen(&disc.mesh, &disc.dofmap, &disc.tables, &v, None, &mut jac, &mut dummy, &zero_end);
        assemble_skew_reaction(&disc.mesh, &disc.dofmap, &disc.tables, &v, &mut jac, &mut dummy, &zero_end);
        let band = disc.band_from(&jac);
        let lu = band.factor().map_err(|_| SolveError::JacobianSingular)?;
        let mut delta = f;
        lu.solve(&mut delta);
        // damped update, halving on residual increase
        let mut omega = R::one();
        let mut accepted = false;
        for _ in 0..=4 {
            let cand: Vec<R> =
                x.iter().zip(&delta).map(|(&xi, &di)| xi + omega * di).collect();
            let cres = problem.residual(&cand);
            if cres < res || cres < options.tol_rel.f64() {
                x = cand;
                history.push(cres);
                accepted = true;
                break;
            }
            omega = omega * R::lit(0.5);
        }
        if !accepted {
            monotone = false;
            let cand: Vec<R> = x.iter().zip(&delta).map(|(&xi, &di)| xi + omega * di).collect();
            let cres = problem.residual(&cand);
            x = cand;
            history.push(cres);
        }
        let _ = it;
    }
    let res = *history.last().unwrap();
    if res >= Float::max(options.tol_rel, R::lit(1e-9)).f64() {
        return Err(SolveError::NotConverged { residual: res, iters: history.len() });
    }
    let newton_iterations = history.len() - 1;
    let (state, report) = finish_report(
        disc,
        carrier,
        &problem,
        &x,
        history,
        newton_iterations,
        0,
        monotone,
        res * problem.rhs_scale.f64(),
        alpha_like,
    );
    Ok((state, report))
}

/// Picard then Newton at one flux value.
pub fn solve_at_flux<R: Scalar>(
    disc: &Discretization<R>,
    profile_phi: R,
    eps: R,
    options: &SolveOptions<R>,
    end_cond: &EndCondition<R>,
    warm: Option<&FlowState<R>>,
) -> Result<(FlowState<R>, SolveReport, FluxCarrier<R>), SolveError> {
    let carrier = FluxCarrier::new(disc.mesh.profile.clone(), profile_phi, eps);
    // a loose Picard pass to enter the basin, then Newton to tolerance
    let mut loose = options.clone();
    loose.tol_rel = Float::max(options.tol_rel, R::lit(1e-6));
    loose.max_picard = options.max_picard;
    match picard_solve(disc, &carrier, &loose, end_cond, warm) {
        Ok((state, mut rep)) => {
            let carrier_used = carrier.with_eps(R::lit(rep.eps_used));
            match newton_solve(disc, &carrier_used, options, end_cond, &state) {
                Ok((s2, rep2)) => {
                    rep.newton_iterations = rep2.newton_iterations;
                    Ok((s2, rep2, carrier_used))
                }
                Err(_) => Ok((state, rep, carrier_used)),
            }
        }
        Err(e) => {
            // fall back to pure Newton from the warm start if provided
            if let Some(w) = warm {
                let (s, r) = newton_solve(disc, &carrier, options, end_cond, w)?;
                Ok((s, r, carrier))
            } else {
                Err(e)
            }
        }
    }
}

/// Geometric flux ramp with warm starts.
pub fn continuation_in_flux<R: Scalar>(
    disc: &Discretization<R>,
    options: &SolveOptions<R>,
    phi_target: R,
    end_cond: &EndCondition<R>,
) -> Result<(FlowState<R>, Vec<SolveReport>), SolveError> {
    let steps = options.continuation_steps.max(1);
    let mut reports = Vec::new();
    if phi_target == R::zero() || steps == 1 {
        let (s, r, _) = solve_at_flux(disc, phi_target, options.eps0, options, end_cond, None)?;
        reports.push(r);
        return Ok((s, reports));
    }
    let ratio = R::lit(2.0);
    let mut phis = Vec::new();
    let mut phi = phi_target;
    for _ in 0..steps {
        phis.push(phi);
        phi = phi / ratio;
    }
    phis.reverse();
    let mut state: Option<FlowState<R>> = None;
    let mut last_ok = R::zero();
    for phi in phis {
        match solve_at_flux(disc, phi, options.eps0, options, end_cond, state.as_ref()) {
            Ok((s, r, _)) => {
                state = Some(s);
                last_ok = phi;
                reports.push(r);
            }
            Err(_) => {
                return Err(SolveError::ContinuationStalled { last_phi: last_ok.f64() });
            }
        }
    }
    Ok((state.unwrap(), reports))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum UniquenessVerdict {
    Unique { max_pairwise_distance: f64 },
    MultipleCandidates { pairwise_distances: Vec<f64> },
}

/// Multi-start probe: Newton from seeded random initial states.
pub fn uniqueness_probe<R: Scalar>(
    disc: &Discretization<R>,
    carrier: &FluxCarrier<R>,
    options: &SolveOptions<R>,
    end_cond: &EndCondition<R>,
    n_seeds: usize,
) -> Result<(UniquenessVerdict, usize), SolveError> {
    assert!(n_seeds >= 2);
    // reference solve from rest
    let (reference, _rep) = picard_solve(disc, carrier, options, end_cond, None)?;
    let (refg, _) = velocity_energy(disc, &reference.x, &reference.end);
    let scale = R::lit((refg.sqrt() + 0.1) * 2.0);
    let mut states = vec![reference.clone()];
    let mut failures = 0usize;
    for s in 0..n_seeds {
        let mut rng =
            ChaCha20Rng::seed_from_u64(options.seed.wrapping_add(s as u64).wrapping_mul(0x9E3779B97F4A7C15));
        let mut x0 = vec![R::zero(); disc.n()];
        for v in x0.iter_mut() {
            *v = scale * R::lit(rng.gen_range(-1.0..1.0));
        }
        // zero the pressure part of the seed
        let mask = disc.pressure_mask();
        for (i, m) in mask.iter().enumerate() {
            if *m {
                x0[i] = R::zero();
            }
        }
        let warm = FlowState {
            x: x0,
            end: reference.end.clone(),
            phi: carrier.phi,
            eps: carrier.eps,
            p_shift: R::zero(),
        };
        match newton_solve(disc, carrier, options, end_cond, &warm) {
            Ok((s, _)) => states.push(s),
            Err(_) => failures += 1,
        }
    }
    // pairwise energy-norm distances
    let mut dists = Vec::new();
    for i in 0..states.len() {
        for j in (i + 1)..states.len() {
            let diff: Vec<R> = states[i]
                .x
                .iter()
                .zip(&states[j].x)
                .map(|(&a, &b)| a - b)
                .collect();
            let (g, _) = velocity_energy(disc, &diff, &vec![[R::zero(); 2]; states[i].end.len()]);
            dists.push(g.sqrt());
        }
    }
    let max_d = dists.iter().cloned().fold(0.0f64, f64::max);
    let tol = (10.0 * options.tol_rel.f64() * (1.0 + refg.sqrt())).max(1e-8);
    let verdict = if max_d <= tol {
        UniquenessVerdict::Unique { max_pairwise_distance: max_d }
    } else {
        UniquenessVerdict::MultipleCandidates { pairwise_distances: dists }
    };
    Ok((verdict, failures))
}
