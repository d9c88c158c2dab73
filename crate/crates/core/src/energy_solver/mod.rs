//! Truncated exterior problems by regularized energy minimization.
//!
//! The discrete energy is
//! `E(u) = ∫ (ε² + |∇u|²)^{p/2} / p dx + Σ_{Γ₂ nodes} w H(u)` with
//! `H(t) = ∫_0^t h`. It is minimized over the free nodes by damped Newton with
//! Armijo backtracking, falling back to steepest descent whenever the
//! Hessian factorization fails. ε follows a continuation schedule, and the
//! default initial field is the harmonic (`p = 2`) solution, continued in `p`
//! when the target exponent is far from 2.

mod assembly;
mod problem;
mod skyline;

use std::io::Write;

pub use problem::{BoundaryPiece, InnerArc, NodeRole, OuterTrace, ProblemSpec, Tolerances, DEFAULT_SCHEDULE};

use crate::discretization::{fmt_num, Discretization, ScalarField};
use crate::{Error, Result};
use skyline::Skyline;

/// Armijo sufficient-decrease parameter.
const ARMIJO_C1: f64 = 1e-4;
/// Backtracking halvings before a line search is declared failed.
const MAX_HALVINGS: usize = 60;
/// Energy increases below this fraction of `|E|` are treated as roundoff
/// when testing sufficient decrease.
pub const ENERGY_ROUNDOFF: f64 = 1e-14;
/// Gradient tolerance used by intermediate continuation stages.
const STAGE_GRAD_TOL: f64 = 1e-6;
/// Consecutive sub-`τ_x` steps tolerated before declaring stagnation.
const STAGNATION_STEPS: usize = 8;

fn check_field<M: Discretization>(spec: &ProblemSpec<M>, field: &ScalarField<M>) -> Result<()> {
    if field.values().len() != spec.mesh().node_count() {
        return Err(Error::Precondition(format!(
            "field has {} values, problem mesh has {} nodes",
            field.values().len(),
            spec.mesh().node_count()
        )));
    }
    spec.check_constraints(field.values())
}

/// Energy at the problem's final regularization.
pub fn energy<M: Discretization>(spec: &ProblemSpec<M>, field: &ScalarField<M>) -> Result<f64> {
    energy_with_epsilon(spec, field, spec.epsilon())
}

/// Energy at an explicit regularization `eps >= 0`.
pub fn energy_with_epsilon<M: Discretization>(spec: &ProblemSpec<M>, field: &ScalarField<M>, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::Precondition(format!("epsilon must be >= 0, got {eps}")));
    }
    check_field(spec, field)?;
    Ok(assembly::energy_value(spec, field.values(), spec.exps().p(), eps))
}

/// Nodal partial derivatives of [`energy`]; zero on constrained nodes.
pub fn energy_gradient<M: Discretization>(spec: &ProblemSpec<M>, field: &ScalarField<M>) -> Result<Vec<f64>> {
    check_field(spec, field)?;
    Ok(assembly::gradient_full(
        spec,
        field.values(),
        spec.exps().p(),
        spec.epsilon(),
    ))
}

/// `∫ |∇v|^{p-2} ∇v·∇φ dx + ∫_{Γ₂} h(v) φ dH` with the unregularized flux.
/// The test field must vanish on every Dirichlet node.
pub fn weak_residual<M: Discretization>(
    spec: &ProblemSpec<M>,
    field: &ScalarField<M>,
    test: &ScalarField<M>,
) -> Result<f64> {
    check_field(spec, field)?;
    if test.values().len() != field.values().len() {
        return Err(Error::Precondition("test field lives on a different mesh".into()));
    }
    for (node, role) in spec.roles().iter().enumerate() {
        if matches!(role, NodeRole::Dirichlet(_)) && test.values()[node] != 0.0 {
            return Err(Error::Precondition(format!(
                "test field is {} at constrained node {node}",
                test.values()[node]
            )));
        }
    }
    let r = assembly::gradient_full(spec, field.values(), spec.exps().p(), 0.0);
    Ok(r.iter().zip(test.values()).map(|(a, b)| a * b).sum())
}

/// Unregularized weak-residual vector against the nodal basis of the free
/// nodes. For a test field `t` with unit ℓ² norm, `|residual(t)| <= l2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakResidualStats {
    pub max_abs: f64,
    pub l2: f64,
}

pub fn weak_residual_stats<M: Discretization>(
    spec: &ProblemSpec<M>,
    field: &ScalarField<M>,
) -> Result<WeakResidualStats> {
    check_field(spec, field)?;
    let r = assembly::gradient_full(spec, field.values(), spec.exps().p(), 0.0);
    Ok(residual_stats(spec, &r))
}

fn residual_stats<M: Discretization>(spec: &ProblemSpec<M>, r: &[f64]) -> WeakResidualStats {
    let free = spec.free_nodes().iter().map(|&n| r[n]);
    let max_abs = free.clone().fold(0.0, |m: f64, v| m.max(v.abs()));
    let l2 = free.map(|v| v * v).sum::<f64>().sqrt();
    WeakResidualStats { max_abs, l2 }
}

/// One row of the iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    /// Max-norm of the accepted update (0 for the first row of a stage).
    pub step: f64,
    pub epsilon: f64,
    /// Continuation stage the row belongs to (not written to CSV).
    pub stage: usize,
}

/// Summary of one continuation stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageSummary {
    pub p: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub energy: f64,
    pub grad_norm: f64,
    /// Tolerance the stage stopped on: the requested one, or the roundoff
    /// floor of the gradient when that is larger.
    pub grad_tol: f64,
    pub descent_fallbacks: usize,
}

#[derive(Debug, Clone)]
pub struct SolveReport<M> {
    pub solution: ScalarField<M>,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub epsilon: f64,
    /// Stopping tolerance of the final stage (see [`StageSummary::grad_tol`]).
    pub grad_tol: f64,
    pub stages: Vec<StageSummary>,
    pub trace: Vec<TraceRow>,
    pub weak_residual: WeakResidualStats,
}

impl<M: Discretization> SolveReport<M> {
    /// Energies of accepted iterates are non-increasing within every stage,
    /// up to [`ENERGY_ROUNDOFF`].
    pub fn energy_is_monotone(&self) -> bool {
        self.trace
            .windows(2)
            .all(|w| w[1].stage != w[0].stage || w[1].energy <= w[0].energy + ENERGY_ROUNDOFF * w[0].energy.abs())
    }

    /// `key: value` report.
    pub fn write_report(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "converged: true")?;
        writeln!(out, "energy: {}", fmt_num(self.energy))?;
        writeln!(out, "grad_norm: {}", fmt_num(self.grad_norm))?;
        writeln!(out, "grad_tol: {}", fmt_num(self.grad_tol))?;
        writeln!(out, "iterations: {}", self.iterations)?;
        writeln!(out, "epsilon: {}", fmt_num(self.epsilon))?;
        writeln!(out, "nodes: {}", self.solution.values().len())?;
        writeln!(out, "solution_max_abs: {}", fmt_num(self.solution.max_abs()))?;
        writeln!(out, "weak_residual_max: {}", fmt_num(self.weak_residual.max_abs))?;
        writeln!(out, "weak_residual_l2: {}", fmt_num(self.weak_residual.l2))?;
        for (k, s) in self.stages.iter().enumerate() {
            writeln!(
                out,
                "stage_{k}: p={} epsilon={} iterations={} energy={} grad_norm={} grad_tol={} descent_fallbacks={}",
                fmt_num(s.p),
                fmt_num(s.epsilon),
                s.iterations,
                fmt_num(s.energy),
                fmt_num(s.grad_norm),
                fmt_num(s.grad_tol),
                s.descent_fallbacks
            )?;
        }
        Ok(())
    }

    /// CSV `iter,energy,grad_norm,step,epsilon`.
    pub fn write_trace_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "iter,energy,grad_norm,step,epsilon")?;
        for t in &self.trace {
            writeln!(
                out,
                "{},{},{},{},{}",
                t.iter,
                fmt_num(t.energy),
                fmt_num(t.grad_norm),
                fmt_num(t.step),
                fmt_num(t.epsilon)
            )?;
        }
        Ok(())
    }
}

struct Newton<'a, M> {
    spec: &'a ProblemSpec<M>,
    hess: Skyline,
    iterations: usize,
    stages: usize,
    trace: Vec<TraceRow>,
}

fn free_norm<M: Discretization>(spec: &ProblemSpec<M>, g: &[f64]) -> f64 {
    spec.free_nodes().iter().map(|&n| g[n] * g[n]).sum::<f64>().sqrt()
}

impl<M: Discretization> Newton<'_, M> {
    fn non_convergence(&self, u: &[f64], grad_norm: f64, reason: String) -> Error {
        Error::NonConvergence {
            iterations: self.iterations,
            grad_norm,
            reason,
            best: u.to_vec(),
        }
    }

    fn stage(&mut self, u: &mut [f64], p: f64, eps: f64, tol: f64) -> Result<StageSummary> {
        let spec = self.spec;
        let max_iter = spec.tolerances().max_iter;
        let tau_x = spec.tolerances().step;
        let mut e = assembly::energy_value(spec, u, p, eps);
        let mut g = assembly::gradient_full(spec, u, p, eps);
        let mut gnorm = free_norm(spec, &g);
        let stage = self.stages;
        self.stages += 1;
        self.trace.push(TraceRow {
            iter: self.iterations,
            energy: e,
            grad_norm: gnorm,
            step: 0.0,
            epsilon: eps,
            stage,
        });
        let mut eff_tol = tol;
        let start = self.iterations;
        let mut fallbacks = 0;
        let mut tiny_steps = 0;
        let nf = spec.free_nodes().len();
        let mut dir = vec![0.0; nf];
        let mut trial = u.to_vec();
        while gnorm > tol {
            assembly::hessian(spec, u, p, eps, &mut self.hess);
            // rounding u alone perturbs the gradient by about ε_mach |H| |u|
            let umax = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let floor = f64::EPSILON * self.hess.max_diag() * umax * (nf as f64).sqrt();
            if gnorm <= floor {
                eff_tol = floor;
                break;
            }
            if self.iterations >= max_iter {
                return Err(self.non_convergence(u, gnorm, format!("iteration cap {max_iter} reached")));
            }
            self.iterations += 1;
            for (i, &n) in spec.free_nodes().iter().enumerate() {
                dir[i] = -g[n];
            }
            let mut slope: f64;
            let newton_ok = self.hess.factor().is_ok() && {
                self.hess.solve(&mut dir);
                slope = spec.free_nodes().iter().zip(&dir).map(|(&n, d)| g[n] * d).sum();
                dir.iter().all(|d| d.is_finite()) && slope < 0.0
            };
            if !newton_ok {
                fallbacks += 1;
                for (i, &n) in spec.free_nodes().iter().enumerate() {
                    dir[i] = -g[n] / gnorm;
                }
            }
            slope = spec.free_nodes().iter().zip(&dir).map(|(&n, d)| g[n] * d).sum();

            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                trial.copy_from_slice(u);
                for (&n, d) in spec.free_nodes().iter().zip(&dir) {
                    trial[n] += t * d;
                }
                let et = assembly::energy_value(spec, &trial, p, eps);
                if et.is_finite() && et <= e + ARMIJO_C1 * t * slope + ENERGY_ROUNDOFF * e.abs() {
                    accepted = Some(et);
                    break;
                }
                t *= 0.5;
            }
            let Some(et) = accepted else {
                return Err(self.non_convergence(u, gnorm, format!("line search failed at epsilon {eps:e}, p {p}")));
            };
            let step = t * dir.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
            u.copy_from_slice(&trial);
            e = et;
            g = assembly::gradient_full(spec, u, p, eps);
            gnorm = free_norm(spec, &g);
            self.trace.push(TraceRow {
                iter: self.iterations,
                energy: e,
                grad_norm: gnorm,
                step,
                epsilon: eps,
                stage,
            });
            if step < tau_x {
                tiny_steps += 1;
                if tiny_steps >= STAGNATION_STEPS {
                    return Err(self.non_convergence(u, gnorm, format!("stagnated with steps below {tau_x:e}")));
                }
            } else {
                tiny_steps = 0;
            }
        }
        Ok(StageSummary {
            p,
            epsilon: eps,
            iterations: self.iterations - start,
            energy: e,
            grad_norm: gnorm,
            grad_tol: eff_tol,
            descent_fallbacks: fallbacks,
        })
    }
}

/// Exponents visited by `p` continuation from the harmonic start.
fn p_path(p: f64) -> Vec<f64> {
    let mut path = vec![2.0];
    if (p - 2.0).abs() > 1.0 {
        let sign = (p - 2.0).signum();
        let mut q = 2.0 + sign;
        while (p - q) * sign > 1e-12 {
            path.push(q);
            q += sign;
        }
    }
    path
}

/// Minimizes the regularized energy. Without an initial field the harmonic
/// solution with the same data is used as the starting point.
pub fn solve<M: Discretization>(spec: &ProblemSpec<M>, initial: Option<&ScalarField<M>>) -> Result<SolveReport<M>> {
    let p = spec.exps().p();
    let tol = spec.tolerances();
    let mut u = spec.constrained_vector(0.0);
    let mut newton = Newton {
        spec,
        hess: Skyline::new(assembly::envelope(spec)),
        iterations: 0,
        stages: 0,
        trace: Vec::new(),
    };
    let mut stages = Vec::new();
    let schedule = spec.schedule();
    match initial {
        Some(f) => {
            if f.values().len() != u.len() || f.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::Precondition("initial field does not match the mesh".into()));
            }
            for (node, role) in spec.roles().iter().enumerate() {
                if !matches!(role, NodeRole::Dirichlet(_)) {
                    u[node] = f.values()[node];
                }
            }
        }
        None => {
            let stage_tol = STAGE_GRAD_TOL.max(tol.grad);
            for q in p_path(p) {
                if q == p {
                    break;
                }
                stages.push(newton.stage(&mut u, q, schedule[0], stage_tol)?);
            }
        }
    }
    let last = schedule.len() - 1;
    for (k, &eps) in schedule.iter().enumerate() {
        let stage_tol = if k == last {
            tol.grad
        } else {
            STAGE_GRAD_TOL.max(tol.grad)
        };
        stages.push(newton.stage(&mut u, p, eps, stage_tol)?);
    }
    let final_stage = *stages.last().expect("at least one stage");
    let weak = residual_stats(spec, &assembly::gradient_full(spec, &u, p, 0.0));
    let Newton { iterations, trace, .. } = newton;
    Ok(SolveReport {
        solution: ScalarField::new(spec.mesh().clone(), u)?,
        energy: final_stage.energy,
        grad_norm: final_stage.grad_norm,
        iterations,
        epsilon: spec.epsilon(),
        grad_tol: final_stage.grad_tol,
        stages,
        trace,
        weak_residual: weak,
    })
}
