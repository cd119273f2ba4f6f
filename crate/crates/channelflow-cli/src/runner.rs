//! Scenario execution: solve, verify, sweep, inequalities, carrier-check.

use crate::plots;
use crate::scenario::{Scenario, Truncation};
use anyhow::{anyhow, bail, Context, Result};
use channelflow::carrier::{carrier_bounds_report, hardy_weighted_check, FluxCarrier};
use channelflow::geometry::{validate_profile, ChannelProfile, TruncatedDomain};
use channelflow::inequality;
use channelflow::mesh::Mesh;
use channelflow::repar::Reparametrization;
use channelflow::shear::{make_shear, Convention};
use channelflow::solver::{
    continuation_in_flux, uniqueness_probe, SolveOptions, SolveReport, UniquenessVerdict,
};
use channelflow::state::{column_energies, section_fluxes, shear_deviation_per_column, FlowState};
use channelflow::system::{Discretization, EndCondition};
use channelflow::verifier::{
    compare_diff_ineq, condition_check, energy_profile, far_field_check, fit_growth,
    lower_bound_check, uniform_local_check, BoundForm, ComparisonMode, ComparisonProblem,
    EnergyProfile, GrowthFit, PsiSpec, Verdict,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub struct RunOutput {
    pub report: Report,
    pub out_dir: PathBuf,
    /// exit code derived from verdicts: 0 pass, 1 any fail
    pub exit: i32,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub profile_validation: ProfileValidation,
    pub solve: SolveSummary,
    pub flux: FluxReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_profile: Option<EnergyProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_growth_linear: Option<GrowthFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_growth_weight: Option<GrowthFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<channelflow::verifier::LowerBoundCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform_local: Option<channelflow::verifier::UniformLocalCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub far_field: Option<channelflow::verifier::FarFieldCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_rate: Option<channelflow::verifier::DecayRateCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition: Option<channelflow::verifier::ConditionCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniqueness: Option<UniquenessReport>,
    pub verdicts: BTreeMap<String, Verdict>,
}

#[derive(Debug, Serialize)]
pub struct ProfileValidation {
    pub inf_width: f64,
    pub sup_slope: f64,
    pub sup_curv_product: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub n_unknowns: usize,
    pub half_bandwidth: usize,
    pub continuation_steps: usize,
    pub reports: Vec<SolveReport>,
}

#[derive(Debug, Serialize)]
pub struct FluxReport {
    pub phi: f64,
    pub max_defect: f64,
    pub sections: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Serialize)]
pub struct UniquenessReport {
    pub verdict: UniquenessVerdict,
    pub seeds: usize,
    pub failed_seeds: usize,
}

pub struct Solved {
    pub disc: Discretization<f64>,
    pub carrier: FluxCarrier<f64>,
    pub state: FlowState<f64>,
    pub reports: Vec<SolveReport>,
    pub profile: ChannelProfile<f64>,
    pub alpha: f64,
}

/// Resolve the physical truncation interval.
pub fn truncation_interval(sc: &Scenario, profile: &ChannelProfile<f64>) -> Result<(f64, f64)> {
    Ok(match sc.truncation {
        Truncation::Symmetric { t } => (-t, t),
        Truncation::Explicit { a, b } => (a, b),
        Truncation::Hat { t } => {
            let horizon = 4.0 * t.max(10.0);
            let repar = Reparametrization::build(profile, horizon)
                .map_err(|e| anyhow!("hat truncation needs beta > 0: {e}"))?;
            let k = repar.k(t);
            let a = repar.h(-k.min(-repar.k_min * 0.98).max(repar.k_min * 0.98)).unwrap_or(-t);
            let b = repar.h(k.min(repar.k_max * 0.98)).unwrap_or(t);
            (a, b)
        }
    })
}

pub fn build_profile(sc: &Scenario) -> Result<ChannelProfile<f64>> {
    ChannelProfile::parse(&sc.profile.f1, &sc.profile.f2, sc.profile.d, sc.profile.beta, sc.profile.gamma_pp)
        .map_err(|e| anyhow!("ConfigInvalid: profile expression: {e}"))
}

pub fn solve_scenario(sc: &Scenario) -> Result<(Solved, ProfileValidation)> {
    let profile = build_profile(sc)?;
    let (a, b) = truncation_interval(sc, &profile)?;
    let grid: Vec<f64> = (0..=400).map(|i| a + (b - a) * i as f64 / 400.0).collect();
    let vr = validate_profile(&profile, &grid)
        .map_err(|e| anyhow!("profile validation failed: {e}"))?;
    let validation = ProfileValidation {
        inf_width: vr.inf_width,
        sup_slope: vr.sup_slope,
        sup_curv_product: vr.sup_curv_product,
        pass: vr.pass(),
    };
    let domain = TruncatedDomain::new(profile.clone(), a, b);
    let mesh = Mesh::build_graded(&domain, sc.mesh.nx, sc.mesh.ny, sc.mesh.grading, sc.mesh.strength)
        .map_err(|e| anyhow!("mesh build failed: {e}"))?;
    let theta = match sc.convention {
        Convention::WeakFormConsistent => 2.0 * sc.alpha,
        Convention::PaperFormula => sc.alpha,
    };
    let disc = Discretization::new(mesh, theta);
    let options = SolveOptions {
        tol_rel: sc.solver.tol_rel,
        max_picard: sc.solver.max_picard,
        max_newton: sc.solver.max_newton,
        damping: sc.solver.damping,
        continuation_steps: sc.solver.continuation_steps,
        eps0: sc.eps,
        max_eps_fallbacks: 2,
        convention: sc.convention,
        seed: sc.seed,
    };
    let end_cond = match sc.end_condition.as_str() {
        "ShearLift" => EndCondition::ShearLift(make_shear(sc.phi, sc.alpha, sc.convention)),
        _ => EndCondition::Zero,
    };
    let t0 = Instant::now();
    let (state, reports) = continuation_in_flux(&disc, &options, sc.phi, &end_cond)
        .map_err(|e| anyhow!("solver error: {e}"))?;
    eprintln!(
        "[solve] {}: {} unknowns, hb {}, {} continuation step(s), {:.2}s",
        sc.name,
        disc.n(),
        disc.dofmap.half_bandwidth,
        reports.len(),
        t0.elapsed().as_secs_f64()
    );
    let carrier = FluxCarrier::new(profile.clone(), sc.phi, state.eps);
    Ok((
        Solved { disc, carrier, state, reports, profile, alpha: sc.alpha },
        validation,
    ))
}

/// Solve plus the scenario's verification checklist; writes artifacts.
pub fn run(sc: &Scenario, out_dir: &Path) -> Result<RunOutput> {
    std::fs::create_dir_all(out_dir.join("tables"))?;
    std::fs::create_dir_all(out_dir.join("plots"))?;
    let (solved, validation) = solve_scenario(sc)?;
    let disc = &solved.disc;
    let state = &solved.state;
    let carrier = &solved.carrier;
    let mut verdicts: BTreeMap<String, Verdict> = BTreeMap::new();

    // flux exactness is always reported
    let fluxes = section_fluxes(disc, state);
    let max_defect = fluxes.iter().map(|(_, f)| (f - sc.phi).abs()).fold(0.0f64, f64::max);
    let flux_verdict = if max_defect < sc.thresholds.flux_defect * sc.phi.max(1.0) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    if sc.checks.iter().any(|c| c == "flux") {
        verdicts.insert("flux".into(), flux_verdict);
    }
    write_csv(
        &out_dir.join("tables/section_flux.csv"),
        "x1,flux,defect",
        fluxes.iter().map(|(x, f)| format!("{x},{f},{}", (f - sc.phi).abs())),
    )?;

    let cols = column_energies(disc, carrier, state);
    let (a, b) = (disc.mesh.a, disc.mesh.b);
    let half = 0.5 * (b - a);

    let mut report = Report {
        schema_version: crate::scenario::SCHEMA_VERSION,
        name: sc.name.clone(),
        seed: sc.seed,
        profile_validation: validation,
        solve: SolveSummary {
            n_unknowns: disc.n(),
            half_bandwidth: disc.dofmap.half_bandwidth,
            continuation_steps: solved.reports.len(),
            reports: solved.reports.clone(),
        },
        flux: FluxReport { phi: sc.phi, max_defect, sections: fluxes.len(), verdict: flux_verdict },
        energy_profile: None,
        fit_growth_linear: None,
        fit_growth_weight: None,
        lower_bound: None,
        uniform_local: None,
        far_field: None,
        decay_rate: None,
        condition: None,
        uniqueness: None,
        verdicts: BTreeMap::new(),
    };

    let wants = |name: &str| sc.checks.iter().any(|c| c == name);

    let needs_profile = wants("energy_profile")
        || wants("fit_growth_linear")
        || wants("fit_growth_weight")
        || wants("lower_bound");
    if needs_profile {
        // window half-widths at positive column edges
        let mut ts: Vec<f64> = cols
            .x_hi
            .iter()
            .cloned()
            .filter(|x| *x > 0.25 && *x < half * 0.999)
            .collect();
        ts.dedup();
        let ep = energy_profile(&cols, sc.alpha, &ts);
        // monotonicity invariant
        for w in ep.y_u.windows(2) {
            if w[1] < w[0] - 1e-9 * w[0].abs() {
                bail!("energy profile must be nondecreasing");
            }
        }
        write_csv(
            &out_dir.join("tables/energy_profile.csv"),
            "t,y_u,y_v",
            ep.t.iter().zip(ep.y_u.iter().zip(&ep.y_v)).map(|(t, (u, v))| format!("{t},{u},{v}")),
        )?;
        if wants("fit_growth_linear") {
            let fit = fit_growth(&solved.profile, &ep, BoundForm::Linear, sc.thresholds.fit_rel_residual)
                .map_err(|e| anyhow!("{e}"))?;
            verdicts.insert("fit_growth_linear".into(), fit.verdict);
            plot_fit(out_dir, &solved.profile, &ep, &fit, "fit_linear.svg")?;
            report.fit_growth_linear = Some(fit);
        }
        if wants("fit_growth_weight") {
            let fit = fit_growth(&solved.profile, &ep, BoundForm::WeightIntegral, sc.thresholds.fit_rel_residual)
                .map_err(|e| anyhow!("{e}"))?;
            verdicts.insert("fit_growth_weight".into(), fit.verdict);
            plot_fit(out_dir, &solved.profile, &ep, &fit, "fit_weight.svg")?;
            report.fit_growth_weight = Some(fit);
        }
        if wants("lower_bound") {
            let lb = lower_bound_check(&solved.profile, &ep, sc.phi);
            let stable = lb.max_over_median <= sc.thresholds.lower_bound_max_over_median;
            let v = match (lb.verdict, stable) {
                (Verdict::Pass, true) => Verdict::Pass,
                (Verdict::Inconclusive, _) => Verdict::Inconclusive,
                _ => Verdict::Fail,
            };
            verdicts.insert("lower_bound".into(), v);
            write_csv(
                &out_dir.join("tables/lower_bound.csv"),
                "t,ratio",
                lb.t.iter().zip(&lb.ratio).map(|(t, r)| format!("{t},{r}")),
            )?;
            report.lower_bound = Some(lb);
        }
        if wants("energy_profile") {
            verdicts.insert("energy_profile".into(), Verdict::Pass);
        }
        report.energy_profile = Some(ep);
    }

    if wants("uniform_local") {
        let ul = uniform_local_check(&cols, 2, sc.thresholds.uniform_local);
        verdicts.insert("uniform_local".into(), ul.verdict);
        write_csv(
            &out_dir.join("tables/uniform_local.csv"),
            "slab_lo,energy",
            ul.slab_lo.iter().zip(&ul.slab_energy).map(|(l, e)| format!("{l},{e}")),
        )?;
        plots::line_chart(
            &out_dir.join("plots/uniform_local.svg"),
            "unit-slab energies",
            "slab start",
            "energy",
            &[("slab energy", ul.slab_lo.iter().cloned().zip(ul.slab_energy.iter().cloned()).collect())],
        )?;
        report.uniform_local = Some(ul);
    }

    if wants("far_field") {
        let shear = make_shear(sc.phi, sc.alpha, sc.convention);
        let (l2c, h1c, _) = shear_deviation_per_column(disc, carrier, state, &shear);
        let ff = far_field_check(&l2c, &h1c, &cols, sc.far_field.k_start, sc.far_field.decay_frac);
        let v = match ff.verdict {
            Verdict::Pass => Verdict::Pass,
            _ if sc.phi > sc.far_field.small_flux_threshold => Verdict::Inconclusive,
            other => other,
        };
        verdicts.insert("far_field".into(), v);
        write_csv(
            &out_dir.join("tables/far_field.csv"),
            "slab_lo,h1_deviation",
            ff.slab_lo.iter().zip(&ff.h1_dev).map(|(l, d)| format!("{l},{d}")),
        )?;
        plots::line_chart(
            &out_dir.join("plots/far_field.svg"),
            "per-slab H1 deviation from the shear flow",
            "slab start",
            "deviation",
            &[("|u-U|_H1^2", ff.slab_lo.iter().cloned().zip(ff.h1_dev.iter().cloned()).collect())],
        )?;
        report.far_field = Some(ff);
    }

    if wants("decay_rate") {
        let t_grid: Vec<f64> = (0..24)
            .map(|k| half / 4.0 + (3.0 * half / 4.0 - half / 4.0) * k as f64 / 23.0)
            .collect();
        let dr = channelflow::verifier::decay_rate_check(
            &solved.profile,
            &cols,
            &t_grid,
            sc.thresholds.decay_rate,
        );
        verdicts.insert("decay_rate".into(), dr.verdict);
        write_csv(
            &out_dir.join("tables/decay_rate.csv"),
            "t,c_of_t",
            dr.t.iter().zip(&dr.c_of_t).map(|(t, c)| format!("{t},{c}")),
        )?;
        report.decay_rate = Some(dr);
    }

    if wants("condition") {
        let cc = condition_check(&solved.profile, half);
        verdicts.insert("condition".into(), Verdict::Pass);
        report.condition = Some(cc);
    }

    if wants("uniqueness_probe") {
        let options = SolveOptions {
            tol_rel: sc.solver.tol_rel,
            max_picard: sc.solver.max_picard,
            max_newton: sc.solver.max_newton,
            damping: sc.solver.damping,
            continuation_steps: 1,
            eps0: state.eps,
            max_eps_fallbacks: 2,
            convention: sc.convention,
            seed: sc.seed,
        };
        let end_cond = EndCondition::Zero;
        let (verdict, failed) =
            uniqueness_probe(disc, carrier, &options, &end_cond, sc.uniqueness_seeds)
                .map_err(|e| anyhow!("uniqueness probe: {e}"))?;
        let v = match verdict {
            UniquenessVerdict::Unique { .. } => Verdict::Pass,
            UniquenessVerdict::MultipleCandidates { .. } => Verdict::Fail,
        };
        verdicts.insert("uniqueness_probe".into(), v);
        report.uniqueness = Some(UniquenessReport {
            verdict,
            seeds: sc.uniqueness_seeds,
            failed_seeds: failed,
        });
    }

    report.verdicts = verdicts.clone();
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(out_dir.join("report.json"), &json)?;
    let exit = if verdicts.values().any(|v| *v == Verdict::Fail) { 1 } else { 0 };
    Ok(RunOutput { report, out_dir: out_dir.to_path_buf(), exit })
}

fn plot_fit(
    out_dir: &Path,
    profile: &ChannelProfile<f64>,
    ep: &EnergyProfile,
    fit: &GrowthFit,
    file: &str,
) -> Result<()> {
    let data: Vec<(f64, f64)> = ep.t.iter().cloned().zip(ep.y_u.iter().cloned()).collect();
    let fitted: Vec<(f64, f64)> = ep
        .t
        .iter()
        .map(|t| {
            let w = match fit.form {
                BoundForm::Linear => *t,
                BoundForm::WeightIntegral => {
                    channelflow::geometry::weight_integral(profile, -*t, *t, -3.0)
                        .map(|v| v)
                        .unwrap_or(f64::NAN)
                }
            };
            (*t, fit.c0 + fit.c1 * w)
        })
        .collect();
    plots::line_chart(
        &out_dir.join("plots").join(file),
        "windowed energy vs fitted bound",
        "t",
        "y(t)",
        &[("y(t)", data), ("fit", fitted)],
    )?;
    Ok(())
}

fn write_csv<I: Iterator<Item = String>>(path: &Path, header: &str, rows: I) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Parameter sweep: runs scenario variants and aggregates stability data.
pub fn sweep(sc: &Scenario, param: &str, values: &[f64], out_dir: &Path) -> Result<i32> {
    if values.is_empty() {
        bail!("ConfigInvalid: sweep values must be a nonempty monotone list");
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        bail!("ConfigInvalid: sweep values must be strictly increasing");
    }
    std::fs::create_dir_all(out_dir)?;
    let mut rows = Vec::new();
    let mut fitted_c1: Vec<(f64, f64)> = Vec::new();
    let mut worst_exit = 0;
    for v in values {
        let mut sub = sc.clone();
        match param {
            "phi" => sub.phi = *v,
            "t" | "T" => {
                sub.truncation = match sub.truncation {
                    Truncation::Hat { .. } => Truncation::Hat { t: *v },
                    _ => Truncation::Symmetric { t: *v },
                }
            }
            "mesh" => {
                let scale = *v;
                sub.mesh.nx = (sc.mesh.nx as f64 * scale).round() as usize;
                sub.mesh.ny = (sc.mesh.ny as f64 * scale).round() as usize;
            }
            other => bail!("ConfigInvalid: unknown sweep parameter `{other}`"),
        }
        sub.name = format!("{}_{}_{}", sc.name, param, v);
        let sub_dir = out_dir.join(format!("{param}_{v}"));
        let out = run(&sub, &sub_dir)?;
        worst_exit = worst_exit.max(out.exit);
        let c1 = out
            .report
            .fit_growth_linear
            .as_ref()
            .or(out.report.fit_growth_weight.as_ref())
            .map(|f| f.c1)
            .unwrap_or(f64::NAN);
        if c1.is_finite() {
            fitted_c1.push((*v, c1));
        }
        let uniq = out
            .report
            .uniqueness
            .as_ref()
            .map(|u| match u.verdict {
                UniquenessVerdict::Unique { .. } => "Unique".to_string(),
                UniquenessVerdict::MultipleCandidates { .. } => "MultipleCandidates".into(),
            })
            .unwrap_or_default();
        rows.push(format!(
            "{v},{},{},{}",
            out.report.flux.max_defect,
            c1,
            uniq
        ));
    }
    write_csv(&out_dir.join("sweep.csv"), &format!("{param},flux_defect,fitted_c1,uniqueness"), rows.into_iter())?;
    // stability of the fitted constant under parameter doubling
    let mut stable = true;
    for w in fitted_c1.windows(2) {
        let (v0, c0) = w[0];
        let (v1, c1) = w[1];
        if (v1 / v0 - 2.0).abs() < 0.25 {
            let rel = (c1 - c0).abs() / c0.abs().max(1e-300);
            if rel > sc.thresholds.fit_stability {
                stable = false;
            }
        }
    }
    #[derive(Serialize)]
    struct SweepSummary {
        parameter: String,
        values: Vec<f64>,
        fitted_c1: Vec<(f64, f64)>,
        stable_under_doubling: bool,
    }
    let summary = SweepSummary {
        parameter: param.to_string(),
        values: values.to_vec(),
        fitted_c1,
        stable_under_doubling: stable,
    };
    std::fs::write(out_dir.join("sweep.json"), serde_json::to_string_pretty(&summary)?)?;
    if !stable {
        worst_exit = worst_exit.max(1);
    }
    Ok(worst_exit)
}

#[derive(Debug, Serialize)]
pub struct InequalityReport {
    pub m0: f64,
    pub m0_measured: f64,
    pub m1_calibration_c: f64,
    pub korn_alpha: f64,
    pub profiles: Vec<ProfileInequalities>,
    pub star_rays_per_piece: usize,
    pub bogovskii_translation_spread: f64,
    pub all_bounds_hold: bool,
}

#[derive(Debug, Serialize)]
pub struct ProfileInequalities {
    pub name: String,
    pub m1_measured: f64,
    pub m1_bound: f64,
    pub m4_measured: f64,
    pub m4_bound: f64,
    pub korn: inequality::KornReport,
    pub star: inequality::StarDecomposition,
    pub m5_measured: f64,
    pub m5_formula: f64,
}

/// The shipped five-profile family.
pub fn profile_family() -> Vec<(&'static str, ChannelProfile<f64>)> {
    vec![
        ("straight", ChannelProfile::parse("-1", "1", 2.0, 1e-6, 0.0).unwrap()),
        (
            "bump",
            ChannelProfile::parse("-(1+0.5*exp(-t*t))", "1+0.5*exp(-t*t)", 2.0, 0.61, 3.2).unwrap(),
        ),
        (
            "sine",
            ChannelProfile::parse("-(1+0.5*sin(t))", "1+0.5*sin(t)", 1.0, 0.5, 1.5).unwrap(),
        ),
        (
            "power025",
            ChannelProfile::parse("-pow(1+t*t,0.25)", "pow(1+t*t,0.25)", 2.0, 0.32, 2.0).unwrap(),
        ),
        (
            "power04",
            ChannelProfile::parse("-pow(1+t*t,0.4)", "pow(1+t*t,0.4)", 2.0, 0.85, 4.0).unwrap(),
        ),
    ]
}

pub fn inequalities(seed: u64, out_dir: &Path) -> Result<i32> {
    std::fs::create_dir_all(out_dir)?;
    // calibration on the canonical straight unit channel (0,1) x (-1,1)
    let canon = ChannelProfile::parse("-1", "1", 2.0, 1e-6, 0.0).unwrap();
    let canon_dom = TruncatedDomain::new(canon.clone(), 0.0, 1.0);
    let canon_mesh = Mesh::build(&canon_dom, 12, 24, channelflow::mesh::Grading::Uniform).unwrap();
    let (m1_meas_canon, m1_shape_canon) = inequality::poincare_m1(&canon_mesh, seed, 40);
    let c1 = m1_meas_canon / m1_shape_canon;
    let (m4_meas_canon, m4_shape_canon) = inequality::embedding_measure(&canon_mesh, seed, 6);
    let c4 = m4_meas_canon / m4_shape_canon;
    let (m0_measured, m0) = inequality::poincare_measure(&canon_mesh, seed, 40);

    let alpha = 1.0;
    let mut profiles = Vec::new();
    let mut all_ok = m0_measured <= m0 + 1e-8;
    let rays = 10_000usize;
    for (name, profile) in profile_family() {
        let dom = TruncatedDomain::new(profile.clone(), -4.0, 4.0);
        let mesh = Mesh::build(&dom, 48, 16, channelflow::mesh::Grading::Uniform).unwrap();
        let (m1_measured, m1_shape) = inequality::poincare_m1(&mesh, seed + 1, 40);
        let m1_bound = c1 * m1_shape;
        let (m4_measured, m4_shape) = inequality::embedding_measure(&mesh, seed + 2, 4);
        let m4_bound = c4 * m4_shape;
        let korn = inequality::korn_check(&mesh, alpha, seed + 3, 200);
        let star = inequality::star_decomposition(&profile, 3.0, rays)
            .map_err(|e| anyhow!("star decomposition ({name}): {e}"))?;
        // Bogovskii on the unit slab [2, 3]
        let slab = TruncatedDomain::new(profile.clone(), 2.0, 3.0);
        let m5_measured = inequality::bogovskii_solve(&slab, 8, 16, |x1, _| 2.0 * (x1 - 2.5))
            .map_err(|e| anyhow!("bogovskii ({name}): {e}"))?;
        all_ok &= m1_measured <= m1_bound + 1e-8;
        all_ok &= m4_measured <= m4_bound + 1e-8;
        all_ok &= korn.min_margin >= -1e-8;
        all_ok &= m5_measured <= star.m5_formula + 1e-8;
        let m5_formula = star.m5_formula;
        profiles.push(ProfileInequalities {
            name: name.to_string(),
            m1_measured,
            m1_bound,
            m4_measured,
            m4_bound,
            korn,
            star,
            m5_measured,
            m5_formula,
        });
    }
    // translation invariance of the Bogovskii ratio on the straight channel
    let straight = ChannelProfile::parse("-1", "1", 2.0, 1e-6, 0.0).unwrap();
    let mut ratios = Vec::new();
    for t0 in [0.0, 7.0, 40.0] {
        let slab = TruncatedDomain::new(straight.clone(), t0, t0 + 1.0);
        let mid = t0 + 0.5;
        let r = inequality::bogovskii_solve(&slab, 8, 16, move |x1, _| 2.0 * (x1 - mid))
            .map_err(|e| anyhow!("bogovskii translation: {e}"))?;
        ratios.push(r);
    }
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max)
        - ratios.iter().cloned().fold(f64::MAX, f64::min);
    all_ok &= spread.abs() < 1e-10;

    let report = InequalityReport {
        m0,
        m0_measured,
        m1_calibration_c: c1,
        korn_alpha: alpha,
        profiles,
        star_rays_per_piece: rays,
        bogovskii_translation_spread: spread,
        all_bounds_hold: all_ok,
    };
    std::fs::write(out_dir.join("inequalities.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(if all_ok { 0 } else { 1 })
}

/// Carrier certification over the shipped profiles.
pub fn carrier_check(phi: f64, eps: f64, out_dir: &Path) -> Result<i32> {
    std::fs::create_dir_all(out_dir)?;
    let mut reports = Vec::new();
    let mut ok = true;
    for (name, profile) in profile_family().into_iter().take(3) {
        let carrier = FluxCarrier::new(profile.clone(), phi, eps);
        let mut domain_reports = Vec::new();
        for half in [2.0, 5.0, 10.0] {
            let dom = TruncatedDomain::new(profile.clone(), -half, half);
            let rep = carrier_bounds_report(&carrier, &dom, 16)
                .map_err(|e| anyhow!("carrier report ({name}): {e}"))?;
            ok &= rep.support_band_ok && rep.band_height_ok && rep.wall_gap_ok;
            ok &= rep.max_abs_divergence < 1e-10;
            ok &= rep.sup_f_g_over_phi.is_finite() && rep.sup_f2_gradg_over_phi.is_finite();
            domain_reports.push((half, rep));
        }
        // stability of the energy/weight ratio across domain triplings
        let ratios: Vec<f64> = domain_reports.iter().map(|(_, r)| r.energy_ratio).collect();
        let rmax = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let rmin = ratios.iter().cloned().fold(f64::MAX, f64::min);
        ok &= rmax <= 1.2 / 0.8 * rmin;
        // Hardy sweep with w = f2 - x2
        let dom = TruncatedDomain::new(profile.clone(), -2.0, 2.0);
        let mut hardy = Vec::new();
        for e in [0.4, 0.2, 0.1, 0.05] {
            let c = FluxCarrier::new(profile.clone(), phi, e);
            let p = profile.clone();
            let r = hardy_weighted_check(&c, &dom, move |x1, x2| {
                let s = p.section(x1);
                (s.f2 - x2, -1.0)
            })
            .map_err(|e| anyhow!("hardy: {e}"))?;
            hardy.push((e, r));
        }
        ok &= hardy.iter().all(|(_, r)| r.is_finite());
        #[derive(Serialize)]
        struct CarrierProfileReport {
            name: String,
            domains: Vec<(f64, channelflow::carrier::CarrierReport)>,
            energy_ratio_stable: bool,
            hardy_sweep: Vec<(f64, f64)>,
        }
        reports.push(CarrierProfileReport {
            name: name.to_string(),
            energy_ratio_stable: rmax <= 1.2 / 0.8 * rmin,
            domains: domain_reports,
            hardy_sweep: hardy,
        });
    }
    #[derive(Serialize)]
    struct CarrierCheck<T: Serialize> {
        phi: f64,
        eps: f64,
        profiles: Vec<T>,
        pass: bool,
    }
    let doc = CarrierCheck { phi, eps, profiles: reports, pass: ok };
    std::fs::write(out_dir.join("carrier.json"), serde_json::to_string_pretty(&doc)?)?;
    Ok(if ok { 0 } else { 1 })
}

/// Synthetic comparison-lemma battery (used by `verify --engine`).
pub fn comparison_engine_selftest() -> Result<()> {
    let n = 200usize;
    let t: Vec<f64> = (0..n).map(|i| 1.0 + 9.0 * i as f64 / (n - 1) as f64).collect();
    let phi: Vec<f64> = t.iter().map(|tt| 40.0 + 4.0 * tt).collect();
    let z: Vec<f64> = phi.iter().map(|p| 0.5 * p).collect();
    let problem = ComparisonProblem {
        t,
        z,
        phi,
        psi: PsiSpec::LinearPlus32 { c: 1.0 },
        delta1: 0.5,
    };
    let out = compare_diff_ineq(&problem, ComparisonMode::Part1).map_err(|e| anyhow!("{e}"))?;
    if out.verdict != Verdict::Pass {
        bail!("comparison engine self-test failed");
    }
    Ok(())
}
