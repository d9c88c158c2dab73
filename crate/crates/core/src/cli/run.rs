//! Executes a parsed configuration in memory and persists the result.

use std::f64::consts::TAU;
use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::config::{BChoice, Expectation, ExperimentKind, FieldChoice, InnerLaw, MeshKind, RunConfig, Truncation};
use crate::analytic::{
    annulus_decay_constant, annulus_decay_constant_negated, omega_d, sup_bound_constant, RadialProfile,
};
use crate::discretization::{
    fmt_num, sample_on_annuli, AnnularMesh2D, Discretization, FieldSource, PointSource, RadialGrid, Reduction,
    ScalarField,
};
use crate::energy_solver::{solve, BoundaryPiece, InnerArc, OuterTrace, ProblemSpec, SolveReport};
use crate::quadrature::integrate_interval;
use crate::radial_bvp::{shoot_radial, solve_radial, FarField, RadialBvp};
use crate::verification::{
    bound_check, build_cutoff, caccioppoli_check, classify_dichotomy, decay_fit, energy_cap, kelvin_limit_estimate,
    lemma_constants, sign_condition_check, DecayFit, DichotomyVerdict, FitMode, FitStatus, Transition,
    VerificationReport,
};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
/// Configuration, precondition or domain error.
pub const EXIT_CONFIG: i32 = 1;
/// Non-convergence or another solver failure.
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Process exit status for a run that stopped with `err`.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Precondition(_) => EXIT_CONFIG,
        Error::Solver(_) | Error::Oracle(_) | Error::NonConvergence { .. } => EXIT_SOLVER,
        Error::Io(_) => EXIT_IO,
    }
}

/// Everything a run produces, held in memory until it is written.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub kind: ExperimentKind,
    /// File name and contents, in write order; the first is the config echo.
    pub files: Vec<(String, Vec<u8>)>,
    pub report: VerificationReport,
    pub status: i32,
}

impl RunArtifact {
    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    fn add(&mut self, name: &str, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }
}

fn radial_problem(cfg: &RunConfig) -> Result<RadialBvp> {
    RadialBvp::new(cfg.geometry.r_in, cfg.inner.law(), cfg.far, cfg.exps)
}

fn closed_form(cfg: &RunConfig) -> Result<RadialProfile> {
    if cfg.gamma1.is_some() {
        return Err(Error::Precondition(
            "a problem with a Dirichlet arc has no radial closed form".into(),
        ));
    }
    solve_radial(&radial_problem(cfg)?)
}

fn outer_trace(cfg: &RunConfig, truncation: Truncation) -> Result<OuterTrace> {
    Ok(match truncation {
        Truncation::Matched => OuterTrace::Matched(closed_form(cfg)?),
        Truncation::Value => OuterTrace::Value(match cfg.far {
            FarField::Limit(b) => b,
            FarField::OuterDirichlet { value, .. } => value,
            FarField::GrowthCoefficient(c) => cfg.far_offset + c * cfg.exps.mu(cfg.geometry.r_out)?,
        }),
    })
}

fn pieces(cfg: &RunConfig) -> Vec<BoundaryPiece> {
    let law = cfg.inner.law();
    match cfg.gamma1 {
        None => vec![BoundaryPiece::full(law)],
        Some(a) => vec![
            BoundaryPiece {
                arc: InnerArc::Span {
                    start: a.start,
                    end: a.end,
                },
                law: crate::radial_bvp::BoundaryLaw::DirichletValue(a.value),
            },
            BoundaryPiece {
                arc: InnerArc::Span {
                    start: a.end,
                    end: a.start + TAU,
                },
                law,
            },
        ],
    }
}

fn problem<M: Discretization>(cfg: &RunConfig, mesh: Arc<M>, truncation: Truncation) -> Result<ProblemSpec<M>> {
    Ok(
        ProblemSpec::new(mesh, cfg.exps, pieces(cfg), outer_trace(cfg, truncation)?)?
            .with_schedule(cfg.solver.schedule.clone())?
            .with_tolerances(cfg.solver.tolerances)?
            .with_reduction(Reduction::from_env()),
    )
}

fn radial_grid(cfg: &RunConfig) -> Result<RadialGrid> {
    let g = &cfg.geometry;
    RadialGrid::geometric(cfg.exps.d(), g.r_in, g.r_out, g.n_r, g.grading)
}

fn annulus(cfg: &RunConfig) -> Result<AnnularMesh2D> {
    let g = &cfg.geometry;
    AnnularMesh2D::new(g.r_in, g.r_out, g.n_r, g.n_theta, g.grading)
}

/// Runs the configured experiment without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<RunArtifact> {
    let mut art = RunArtifact {
        kind: cfg.kind,
        files: vec![("config.txt".into(), cfg.to_text().into_bytes())],
        report: VerificationReport::new(),
        status: EXIT_OK,
    };
    let rep = &mut art.report;
    rep.push("kind", cfg.kind.name());
    rep.push_num("p", cfg.exps.p());
    rep.push("d", cfg.exps.d());
    match cfg.kind {
        ExperimentKind::Constants => constants(cfg, &mut art)?,
        ExperimentKind::OracleCompare => {
            let cmp = compare_with_oracle(cfg)?;
            cmp.record(cfg, &mut art)?;
        }
        _ => match cfg.geometry.mesh {
            MeshKind::Radial => field_run(cfg, Arc::new(radial_grid(cfg)?), &mut art)?,
            MeshKind::Annulus => field_run(cfg, Arc::new(annulus(cfg)?), &mut art)?,
        },
    }
    let mut text = Vec::new();
    art.report.write_text(&mut text)?;
    art.files.push(("report.txt".into(), text));
    if !art.report.caccioppoli.is_empty() {
        let mut csv = Vec::new();
        art.report.write_caccioppoli_csv(&mut csv)?;
        art.files.push(("caccioppoli.csv".into(), csv));
    }
    if !art.report.passed() {
        art.status = EXIT_VERIFICATION;
    }
    Ok(art)
}

fn field_run<M>(cfg: &RunConfig, mesh: Arc<M>, art: &mut RunArtifact) -> Result<()>
where
    M: Discretization + 'static,
    ScalarField<M>: FieldSource + PointSource,
{
    art.report
        .push("mesh", format!("{:?}", cfg.geometry.mesh).to_lowercase());
    art.report.push("nodes", mesh.node_count());
    if cfg.verify.field == FieldChoice::ClosedForm && cfg.kind.verb() != "solve" {
        let profile = closed_form(cfg)?;
        art.report.push("field", "closed-form");
        return verify_source(cfg, mesh.as_ref(), &profile, art);
    }
    let spec = problem(cfg, mesh.clone(), cfg.truncation)?;
    let sol = solve(&spec, None)?;
    record_solve(cfg, &sol, art)?;
    if cfg.kind.verb() == "solve" {
        return Ok(());
    }
    verify_source(cfg, mesh.as_ref(), &sol.solution, art)
}

fn record_solve<M: Discretization>(cfg: &RunConfig, sol: &SolveReport<M>, art: &mut RunArtifact) -> Result<()> {
    let rep = &mut art.report;
    rep.push_num("energy", sol.energy);
    rep.push_num("grad_norm", sol.grad_norm);
    rep.push_num("grad_tol", sol.grad_tol);
    rep.push("iterations", sol.iterations);
    rep.push_num("weak_residual_l2", sol.weak_residual.l2);
    let max_norm = sol.solution.max_abs();
    rep.push_num("solution_max_abs", max_norm);
    if !sol.energy_is_monotone() {
        rep.fail("accepted energies increase within a continuation stage");
    }
    if let Some(bound) = cfg.verify.max_norm {
        if !(max_norm <= bound) {
            rep.fail(format!("solution max-norm {max_norm:e} exceeds {bound:e}"));
        }
    }
    if let Ok(profile) = closed_form(cfg) {
        let mesh = sol.solution.mesh();
        let mut diff: f64 = 0.0;
        for (n, v) in sol.solution.values().iter().enumerate() {
            diff = diff.max((v - profile.eval(mesh.node_polar(n).0)?).abs());
        }
        rep.push_num("closed_form_max_diff", diff);
    }
    art.add("solution.csv", |o| {
        sol.solution.mesh().write_csv(sol.solution.values(), o)
    })?;
    art.add("trace.csv", |o| sol.write_trace_csv(o))?;
    art.add("solve_report.txt", |o| sol.write_report(o))?;
    Ok(())
}

fn verify_source<M, S>(cfg: &RunConfig, mesh: &M, source: &S, art: &mut RunArtifact) -> Result<()>
where
    M: Discretization + ?Sized,
    S: FieldSource + PointSource,
{
    match cfg.kind {
        ExperimentKind::VerifyCaccioppoli => verify_caccioppoli(cfg, mesh, source, art),
        ExperimentKind::VerifyDecay => verify_decay(cfg, source, art),
        ExperimentKind::Classify => classify(cfg, source, art),
        _ => Ok(()),
    }
}

/// Dirichlet data fixes `b` to the boundary value so that `v - b` vanishes
/// there; Robin-type laws need `b = 0` for the sign condition; a pure
/// Neumann hole takes the fitted limit.
fn resolve_b<S: PointSource>(cfg: &RunConfig, source: &S) -> Result<f64> {
    if let BChoice::Value(b) = cfg.verify.b {
        return Ok(b);
    }
    if let Some(a) = cfg.gamma1 {
        return Ok(a.value);
    }
    match cfg.inner {
        InnerLaw::Dirichlet(g) => Ok(g),
        InnerLaw::Robin { .. } | InnerLaw::Power { .. } => Ok(0.0),
        InnerLaw::Neumann => {
            let far = match cfg.far {
                FarField::Limit(b) => b,
                FarField::OuterDirichlet { value, .. } => value,
                FarField::GrowthCoefficient(_) => 0.0,
            };
            let radii: Vec<f64> = cfg.verify.radii.iter().copied().filter(|&r| r >= 2.0).collect();
            let r_out = cfg.geometry.r_out;
            let mut fit_radii: Vec<f64> = Vec::new();
            let mut r = 2.0 * cfg.geometry.r_in.max(1.0);
            while r <= r_out {
                fit_radii.push(r);
                r *= 2.0;
            }
            let use_radii = if radii.len() >= 4 { radii } else { fit_radii };
            if use_radii.len() < 4 || matches!(cfg.far, FarField::GrowthCoefficient(_)) {
                return Ok(far);
            }
            let samples = sample_on_annuli(source, &use_radii, cfg.verify.samples_per_circle)?;
            let fit = decay_fit(&samples, &cfg.exps, FitMode::Limit)?;
            Ok(match fit.status {
                FitStatus::Ok | FitStatus::Degenerate => fit.limit,
                FitStatus::Undetermined(_) => samples.means[samples.means.len() - 1],
            })
        }
    }
}

fn verify_caccioppoli<M, S>(cfg: &RunConfig, mesh: &M, source: &S, art: &mut RunArtifact) -> Result<()>
where
    M: Discretization + ?Sized,
    S: FieldSource + PointSource,
{
    let exps = cfg.exps;
    let p = exps.p();
    let b = resolve_b(cfg, source)?;
    art.report.push_num("b", b);
    let law = cfg.inner.law();
    if !law.is_dirichlet() {
        let values = (0..256)
            .map(|k| source.value_at(cfg.geometry.r_in, TAU * k as f64 / 256.0))
            .collect::<Result<Vec<f64>>>()?;
        let sign = sign_condition_check(&law, p, &values);
        art.report.push("sign_condition", sign.holds);
        if !sign.holds {
            art.report
                .fail(format!("h(v)v < 0 on the hole boundary: {:?}", sign.worst));
        }
    }
    let cutoffs = cfg
        .verify
        .radii
        .iter()
        .map(|&r| build_cutoff(Transition::ExpBump, r))
        .collect::<Result<Vec<_>>>()?;
    for c in &cutoffs {
        let rep = caccioppoli_check(mesh, source, b, c, &exps)?;
        art.report.add_caccioppoli(rep);
    }
    let c0 = cutoffs[0].c0(p);
    let bounds = bound_check(mesh, source, b, &exps, &cfg.verify.radii)?;
    let (c, delta) = lemma_constants(c0, bounds.c1, p);
    let cap = energy_cap(mesh, source, b, &cutoffs, &exps, c, delta)?;
    let rep = &mut art.report;
    rep.push_num("c0", c0);
    rep.push_num("c1", bounds.c1);
    rep.push_num("lemma_c", c);
    rep.push_num("lemma_delta", delta);
    rep.push_num("energy_cap", cap.cap);
    rep.push("energy_cap_holds", cap.holds());
    let bounded = !matches!(cfg.far, FarField::GrowthCoefficient(_));
    if bounded && !cap.holds() {
        rep.fail(format!("energy cap fails at radii {:?}", cap.premise_violations()));
    }
    art.add("energy_cap.csv", |o| {
        writeln!(
            o,
            "r,lhs,annulus_integral,premise_ratio,premise_holds,cap_holds,bound_value"
        )?;
        for (e, v) in cap.entries.iter().zip(&bounds.values) {
            writeln!(
                o,
                "{},{},{},{},{},{},{}",
                fmt_num(e.r),
                fmt_num(e.lhs),
                fmt_num(e.annulus_integral),
                fmt_num(e.premise_ratio),
                e.premise_holds,
                e.cap_holds,
                fmt_num(*v)
            )?;
        }
        Ok(())
    })
}

fn record_fit(rep: &mut VerificationReport, fit: &DecayFit) {
    rep.push("fit_status", format!("{:?}", fit.status));
    rep.push_num("fit_limit", fit.limit);
    if let Some(e) = fit.exponent {
        rep.push_num("fit_exponent", e);
    }
    rep.push_num("fit_prefactor", fit.prefactor);
    rep.push_num("fit_residual", fit.residual);
}

fn verify_decay<S: PointSource>(cfg: &RunConfig, source: &S, art: &mut RunArtifact) -> Result<()> {
    let samples = sample_on_annuli(source, &cfg.verify.radii, cfg.verify.samples_per_circle)?;
    let mode = match cfg.far {
        FarField::GrowthCoefficient(_) => FitMode::Growth,
        _ => FitMode::Limit,
    };
    let fit = decay_fit(&samples, &cfg.exps, mode)?;
    let rep = &mut art.report;
    record_fit(rep, &fit);
    if cfg.exps.d() >= 3 {
        let (b, w0) = kelvin_limit_estimate(&samples.radii, &samples.means, cfg.exps.d())?;
        rep.push_num("kelvin_limit", b);
        rep.push_num("kelvin_origin_value", w0);
    }
    if let Some(Expectation::Exponent(e)) = cfg.verify.expect {
        match (fit.exponent, &fit.status) {
            (Some(x), FitStatus::Ok) if (x - e).abs() <= cfg.verify.tolerance => {}
            (x, status) => rep.fail(format!(
                "fitted exponent {x:?} (status {status:?}) is not within {} of {e}",
                cfg.verify.tolerance
            )),
        }
    }
    art.add("samples.csv", |o| samples.write_csv(&cfg.exps, o))
}

fn classify<S: PointSource>(cfg: &RunConfig, source: &S, art: &mut RunArtifact) -> Result<()> {
    let samples = sample_on_annuli(source, &cfg.verify.radii, cfg.verify.samples_per_circle)?;
    let verdict = classify_dichotomy(&samples, &cfg.exps, cfg.verify.thresholds);
    let rep = &mut art.report;
    rep.push("verdict", verdict.label());
    match &verdict {
        DichotomyVerdict::ConstantLimit(b) => rep.push_num("limit", *b),
        DichotomyVerdict::FundamentalGrowth { c, sign } => {
            rep.push_num("growth_coefficient", *c);
            rep.push("growth_sign", sign);
        }
        DichotomyVerdict::Undetermined(why) => rep.push("reason", why),
    }
    let tol = cfg.verify.tolerance;
    match (cfg.verify.expect, &verdict, cfg.far) {
        (None, _, _) => {}
        (Some(Expectation::Constant), DichotomyVerdict::ConstantLimit(b), far) => {
            if let FarField::Limit(target) | FarField::OuterDirichlet { value: target, .. } = far {
                if !((b - target).abs() <= tol) {
                    rep.fail(format!("limit {b} is not within {tol} of {target}"));
                }
            }
        }
        (Some(Expectation::Growth), DichotomyVerdict::FundamentalGrowth { c, sign }, far) => {
            if let FarField::GrowthCoefficient(target) = far {
                let signed = *c * *sign as f64;
                if !((signed - target).abs() <= tol * target.abs()) {
                    rep.fail(format!(
                        "growth coefficient {signed} is not within {tol} (relative) of {target}"
                    ));
                }
            }
        }
        (Some(e), v, _) => rep.fail(format!("expected {e:?}, classifier returned {}", v.label())),
    }
    art.add("samples.csv", |o| samples.write_csv(&cfg.exps, o))
}

fn constants(cfg: &RunConfig, art: &mut RunArtifact) -> Result<()> {
    let exps = cfg.exps;
    let (p, d) = (exps.p(), exps.d());
    let c2 = annulus_decay_constant(&exps);
    let printed = annulus_decay_constant_negated(&exps);
    // independent check of c₂ at r = 1 by Gauss quadrature
    let kappa = exps.kappa();
    let quad = integrate_interval(|s| s.powf(p * kappa + d as f64 - 1.0), 1.0, 2.0, 64, 16);
    let rel = (quad - c2).abs() / c2.abs();
    let sup = Transition::ExpBump.sup_derivative();
    let rep = &mut art.report;
    rep.push_num("kappa", kappa);
    rep.push_num("omega_d", omega_d(d));
    rep.push_num("c2", c2);
    rep.push_num("c2_printed_form", printed);
    rep.push_num("c2_quadrature", quad);
    rep.push_num("c2_relative_error", rel);
    rep.push_num("cutoff_sup_derivative", sup);
    rep.push_num("c0", p * sup);
    if !(rel <= 1e-8) {
        rep.fail(format!("c2 = {c2} disagrees with quadrature {quad}"));
    }
    let radii = cfg.verify.radii.clone();
    let sup_norm = cfg.verify.sup_norm;
    let rows = radii
        .iter()
        .map(|&r| {
            let inner = integrate_interval(|s| s.powf(p * kappa + d as f64 - 1.0), r, 2.0 * r, 64, 16);
            let scaled = inner / r.powf(p) / r.powf(kappa);
            let bound = match sup_norm {
                Some(m) => Some(sup_bound_constant(&exps, m, r)?),
                None => None,
            };
            Ok((r, scaled, bound))
        })
        .collect::<Result<Vec<_>>>()?;
    art.add("constants.csv", |o| {
        writeln!(o, "r,c2_quadrature,sup_bound")?;
        for (r, c, b) in &rows {
            let b = b.map(fmt_num).unwrap_or_default();
            writeln!(o, "{},{},{}", fmt_num(*r), fmt_num(*c), b)?;
        }
        Ok(())
    })
}

/// Closed form, shooting oracle and (for planar problems) the 2-D energy
/// solution along `θ = 0`, all on the same radii.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub radii: Vec<f64>,
    pub closed_form: Vec<f64>,
    pub shooting: Vec<f64>,
    pub planar: Option<Vec<f64>>,
    pub closed_vs_shooting: f64,
    pub closed_vs_planar: Option<f64>,
    pub shooting_vs_planar: Option<f64>,
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// The 2-D solve uses the closed-form trace on `|x| = R`, so its error is
/// the discretization error alone.
pub fn compare_with_oracle(cfg: &RunConfig) -> Result<OracleComparison> {
    let bvp = radial_problem(cfg)?;
    let profile = closed_form(cfg)?;
    let planar_mesh = (cfg.exps.d() == 2 && cfg.geometry.mesh == MeshKind::Annulus)
        .then(|| annulus(cfg))
        .transpose()?
        .map(Arc::new);
    let grid = match &planar_mesh {
        Some(m) => RadialGrid::new(2, m.radii().to_vec())?,
        None => radial_grid(cfg)?,
    };
    let radii = grid.radii().to_vec();
    let closed = radii.iter().map(|&r| profile.eval(r)).collect::<Result<Vec<_>>>()?;
    let shooting = shoot_radial(&bvp, &grid)?;
    let planar = match planar_mesh {
        Some(mesh) => {
            let spec = problem(cfg, mesh.clone(), Truncation::Matched)?;
            let sol = solve(&spec, None)?;
            Some(
                (0..mesh.n_r())
                    .map(|i| sol.solution.values()[mesh.node_index(i, 0)])
                    .collect::<Vec<_>>(),
            )
        }
        None => None,
    };
    Ok(OracleComparison {
        closed_vs_shooting: max_diff(&closed, &shooting),
        closed_vs_planar: planar.as_ref().map(|v| max_diff(&closed, v)),
        shooting_vs_planar: planar.as_ref().map(|v| max_diff(&shooting, v)),
        radii,
        closed_form: closed,
        shooting,
        planar,
    })
}

impl OracleComparison {
    fn record(&self, cfg: &RunConfig, art: &mut RunArtifact) -> Result<()> {
        let rep = &mut art.report;
        rep.push_num("closed_vs_shooting", self.closed_vs_shooting);
        if self.closed_vs_shooting > cfg.verify.oracle_tol {
            rep.fail(format!(
                "closed form and shooting differ by {:e} > {:e}",
                self.closed_vs_shooting, cfg.verify.oracle_tol
            ));
        }
        if let (Some(cp), Some(sp)) = (self.closed_vs_planar, self.shooting_vs_planar) {
            rep.push_num("closed_vs_planar", cp);
            rep.push_num("shooting_vs_planar", sp);
            if cp > cfg.verify.solver_tol {
                rep.fail(format!(
                    "2-D solution differs from the closed form by {cp:e} > {:e}",
                    cfg.verify.solver_tol
                ));
            }
        }
        art.add("oracle.csv", |o| {
            writeln!(o, "r,closed_form,shooting,planar")?;
            for (k, r) in self.radii.iter().enumerate() {
                let planar = self.planar.as_ref().map(|v| fmt_num(v[k])).unwrap_or_default();
                writeln!(
                    o,
                    "{},{},{},{}",
                    fmt_num(*r),
                    fmt_num(self.closed_form[k]),
                    fmt_num(self.shooting[k]),
                    planar
                )?;
            }
            Ok(())
        })
    }
}

/// Writes the artifact to a fresh `<timestamp>-<kind>` directory under
/// `root` (suffixed `-1`, `-2`, ... on collision) and points `root/latest`
/// at it.
pub fn write_artifact(art: &RunArtifact, root: &Path) -> Result<PathBuf> {
    fs::create_dir_all(root)?;
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S");
    let base = format!("{stamp}-{}", art.kind.name());
    let mut k = 0;
    let (name, dir) = loop {
        let name = if k == 0 { base.clone() } else { format!("{base}-{k}") };
        let dir = root.join(&name);
        match fs::create_dir(&dir) {
            Ok(()) => break (name, dir),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => k += 1,
            Err(e) => return Err(e.into()),
        }
    };
    for (file, bytes) in &art.files {
        fs::write(dir.join(file), bytes)?;
    }
    fs::write(root.join("latest"), format!("{name}\n"))?;
    Ok(dir)
}

/// [`execute`] followed by [`write_artifact`]. Nothing is written when the
/// computation fails.
pub fn run(cfg: &RunConfig, root: &Path) -> Result<(PathBuf, RunArtifact)> {
    let art = execute(cfg)?;
    let dir = write_artifact(&art, root)?;
    Ok((dir, art))
}
