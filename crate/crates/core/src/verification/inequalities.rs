use crate::analytic::PExponents;
use crate::discretization::{Discretization, FieldSource, QuadSample};
use crate::{Error, Result};

use super::cutoff::CutoffFamily;

/// Multiplicative slack in `lhs <= rhs (1 + HOLD_TOL)`.
pub const HOLD_TOL: f64 = 1e-8;
/// Left sides below this are numerically zero and count as holding.
pub const ZERO_FLOOR: f64 = 1e-24;
/// Gauss orders tried in turn before a violation is reported.
pub const REFINEMENT_ORDERS: [usize; 3] = [4, 8, 16];

fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + HOLD_TOL) || lhs <= ZERO_FLOOR
}

fn band_integral<M, F, G>(mesh: &M, field: &F, lo: f64, hi: f64, order: usize, f: G) -> f64
where
    M: Discretization + ?Sized,
    F: FieldSource + ?Sized,
    G: Fn(&QuadSample, f64, [f64; 2]) -> f64,
{
    mesh.band_samples(lo, hi, order)
        .iter()
        .map(|s| {
            let (v, g) = field.value_and_gradient(s);
            s.weight * f(s, v, g)
        })
        .sum()
}

fn grad_p(g: [f64; 2], p: f64) -> f64 {
    (g[0] * g[0] + g[1] * g[1]).powf(0.5 * p)
}

fn check_ball<M: Discretization + ?Sized>(mesh: &M, r: f64) -> Result<()> {
    if !(r >= mesh.inner_radius()) {
        return Err(Error::Precondition(format!(
            "r = {r} must enclose the hole (radius {})",
            mesh.inner_radius()
        )));
    }
    if 2.0 * r > mesh.outer_radius() * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "B_2r with r = {r} leaves the computational domain (R = {})",
            mesh.outer_radius()
        )));
    }
    Ok(())
}

/// Outcome of the cutoff energy inequality at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaccioppoliReport {
    pub r: f64,
    pub b: f64,
    /// `∫_{Ω∩B_2r} |∇v|^p φ_r^p`
    pub lhs: f64,
    /// `(C₀/r) A^{(p-1)/p} D^{1/p}`
    pub rhs: f64,
    pub c0: f64,
    /// `A = ∫_{B_2r \ B_r} |∇v|^p φ_r^p`
    pub gradient_integral: f64,
    /// `D = ∫_{B_2r \ B_r} |v - b|^p`
    pub deviation_integral: f64,
    pub quad_order: usize,
    pub holds: bool,
}

fn caccioppoli_at<M, F>(mesh: &M, field: &F, b: f64, cutoff: &CutoffFamily, p: f64, order: usize) -> CaccioppoliReport
where
    M: Discretization + ?Sized,
    F: FieldSource + ?Sized,
{
    let r = cutoff.radius();
    let lhs = band_integral(mesh, field, mesh.inner_radius(), 2.0 * r, order, |s, _, g| {
        grad_p(g, p) * cutoff.value(s.radius).powf(p)
    });
    let a = band_integral(mesh, field, r, 2.0 * r, order, |s, _, g| {
        grad_p(g, p) * cutoff.value(s.radius).powf(p)
    });
    let d = band_integral(mesh, field, r, 2.0 * r, order, |_, v, _| (v - b).abs().powf(p));
    let c0 = cutoff.c0(p);
    let rhs = c0 / r * a.powf((p - 1.0) / p) * d.powf(1.0 / p);
    CaccioppoliReport {
        r,
        b,
        lhs,
        rhs,
        c0,
        gradient_integral: a,
        deviation_integral: d,
        quad_order: order,
        holds: holds(lhs, rhs),
    }
}

/// Evaluates both sides of the cutoff energy inequality. A violation is
/// re-checked with finer quadrature before it is reported.
pub fn caccioppoli_check<M, F>(
    mesh: &M,
    field: &F,
    b: f64,
    cutoff: &CutoffFamily,
    exps: &PExponents,
) -> Result<CaccioppoliReport>
where
    M: Discretization + ?Sized,
    F: FieldSource + ?Sized,
{
    check_ball(mesh, cutoff.radius())?;
    let p = exps.p();
    let mut report = caccioppoli_at(mesh, field, b, cutoff, p, REFINEMENT_ORDERS[0]);
    for &order in &REFINEMENT_ORDERS[1..] {
        if report.holds {
            break;
        }
        report = caccioppoli_at(mesh, field, b, cutoff, p, order);
    }
    Ok(report)
}

/// `(1/r^p) ∫_{B_2r \ B_r} |v - b|^p` at each radius and their maximum `C₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub c1: f64,
}

pub fn bound_check<M, F>(mesh: &M, field: &F, b: f64, exps: &PExponents, radii: &[f64]) -> Result<BoundCheck>
where
    M: Discretization + ?Sized,
    F: FieldSource + ?Sized,
{
    if radii.is_empty() {
        return Err(Error::Precondition("bound check needs at least one radius".into()));
    }
    let p = exps.p();
    let mut values = Vec::with_capacity(radii.len());
    for &r in radii {
        check_ball(mesh, r)?;
        let d = band_integral(mesh, field, r, 2.0 * r, 8, |_, v, _| (v - b).abs().powf(p));
        values.push(d / r.powf(p));
    }
    let c1 = values.iter().copied().fold(0.0, f64::max);
    Ok(BoundCheck {
        radii: radii.to_vec(),
        values,
        c1,
    })
}

/// `∫_{B_2r \ B_r} |∇v|^p`.
pub fn annulus_gradient_energy<M, F>(mesh: &M, field: &F, exps: &PExponents, r: f64) -> Result<f64>
where
    M: Discretization + ?Sized,
    F: FieldSource + ?Sized,
{
    check_ball(mesh, r)?;
    let p = exps.p();
    Ok(band_integral(mesh, field, r, 2.0 * r, 8, |_, _, g| grad_p(g, p)))
}

/// `C = C₀ C₁^{1/p}` and `δ = (p-1)/p`.
pub fn lemma_constants(c0: f64, c1: f64, p: f64) -> (f64, f64) {
    (c0 * c1.powf(1.0 / p), (p - 1.0) / p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapEntry {
    pub r: f64,
    pub lhs: f64,
    pub annulus_integral: f64,
    /// `lhs / (C A^δ)`; the premise holds when this is at most 1.
    pub premise_ratio: f64,
    pub premise_holds: bool,
    pub cap_holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCap {
    pub c: f64,
    pub delta: f64,
    /// `C^{1/(1-δ)}`
    pub cap: f64,
    pub entries: Vec<CapEntry>,
}

impl EnergyCap {
    pub fn holds(&self) -> bool {
        self.entries.iter().all(|e| e.premise_holds && e.cap_holds)
    }

    pub fn premise_violations(&self) -> Vec<(f64, f64)> {
        self.entries
            .iter()
            .filter(|e| !e.premise_holds)
            .map(|e| (e.r, e.premise_ratio))
            .collect()
    }
}

/// Checks `lhs(r) <= C A(r)^δ` and the resulting cap
/// `∫|∇v|^p φ_r^p <= C^{1/(1-δ)}` at each cutoff radius.
pub fn energy_cap<M, F>(
    mesh: &M,
    field: &F,
    b: f64,
    cutoffs: &[CutoffFamily],
    exps: &PExponents,
    c: f64,
    delta: f64,
) -> Result<EnergyCap>
where
    M: Discretization + ?Sized,
    F: FieldSource + ?Sized,
{
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Precondition(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Precondition(format!("C must be finite and >= 0, got {c}")));
    }
    let cap = c.powf(1.0 / (1.0 - delta));
    let mut entries = Vec::with_capacity(cutoffs.len());
    for cutoff in cutoffs {
        let rep = caccioppoli_check(mesh, field, b, cutoff, exps)?;
        let bound = c * rep.gradient_integral.powf(delta);
        let premise_ratio = if bound > 0.0 {
            rep.lhs / bound
        } else if rep.lhs <= ZERO_FLOOR {
            0.0
        } else {
            f64::INFINITY
        };
        entries.push(CapEntry {
            r: cutoff.radius(),
            lhs: rep.lhs,
            annulus_integral: rep.gradient_integral,
            premise_ratio,
            premise_holds: holds(rep.lhs, bound),
            cap_holds: holds(rep.lhs, cap),
        });
    }
    Ok(EnergyCap { c, delta, cap, entries })
}

#[cfg(test)]
mod tests {
    use super::super::cutoff::{build_cutoff, Transition};
    use super::*;
    use crate::analytic::{annulus_decay_constant, omega_d, sup_bound_constant, RadialProfile};
    use crate::discretization::{AnnularMesh2D, RadialGrid, ScalarField};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn constant_field_is_trivial() {
        let m = Arc::new(AnnularMesh2D::new(1.0, 8.0, 10, 16, 1.1).unwrap());
        let f = ScalarField::constant(m.clone(), 3.0).unwrap();
        let e = PExponents::new(2.5, 2).unwrap();
        let c = build_cutoff(Transition::ExpBump, 2.0).unwrap();
        let rep = caccioppoli_check(m.as_ref(), &f, 3.0, &c, &e).unwrap();
        assert!(rep.lhs <= ZERO_FLOOR && rep.rhs <= ZERO_FLOOR);
        assert!(rep.holds);
        let bc = bound_check(m.as_ref(), &f, 3.0, &e, &[1.0, 2.0, 4.0]).unwrap();
        assert!(bc.values.iter().all(|v| *v <= 1e-30));
    }

    #[test]
    fn radius_preconditions() {
        let m = AnnularMesh2D::new(1.0, 8.0, 10, 16, 1.1).unwrap();
        let f = ScalarField::constant(Arc::new(m.clone()), 0.0).unwrap();
        let e = PExponents::new(2.0, 2).unwrap();
        for r in [0.5, 4.5] {
            let c = build_cutoff(Transition::ExpBump, r).unwrap();
            assert!(matches!(
                caccioppoli_check(&m, &f, 0.0, &c, &e),
                Err(Error::Precondition(_))
            ));
        }
    }

    #[test]
    fn bound_values_follow_decay_constant() {
        let e = PExponents::new(2.0, 3).unwrap();
        let g = RadialGrid::geometric(3, 1.0, 64.0, 400, 1.0).unwrap();
        let mu = RadialProfile::new(0.0, 1.0, e);
        let radii = [2.0, 4.0, 8.0, 16.0];
        let bc = bound_check(&g, &mu, 0.0, &e, &radii).unwrap();
        for (r, v) in radii.iter().zip(&bc.values) {
            let expected = omega_d(3) * annulus_decay_constant(&e) * r.powf(e.kappa());
            assert!((v - expected).abs() <= 1e-6 * expected, "{v} vs {expected}");
        }
        assert_eq!(bc.c1, bc.values[0]);
    }

    #[test]
    fn bounded_fields_respect_sup_bound() {
        let e = PExponents::new(3.0, 2).unwrap();
        let m = Arc::new(AnnularMesh2D::new(1.0, 16.0, 30, 32, 1.1).unwrap());
        for k in 0..20 {
            let a = 0.3 + 0.1 * k as f64;
            let f = ScalarField::from_fn(m.clone(), |x| a * (x[0] * 0.7 + x[1] * k as f64).sin()).unwrap();
            let bc = bound_check(m.as_ref(), &f, 0.0, &e, &[2.0, 4.0, 8.0]).unwrap();
            for (r, v) in bc.radii.iter().zip(&bc.values) {
                assert!(*v <= sup_bound_constant(&e, a, *r).unwrap());
            }
        }
    }

    #[test]
    fn log_gradient_energy_is_scale_free() {
        let e = PExponents::new(2.0, 2).unwrap();
        let m = AnnularMesh2D::new(1.0, 64.0, 120, 64, 1.03).unwrap();
        let mu = RadialProfile::new(0.0, 1.0, e);
        for r in [2.0, 4.0, 8.0, 16.0, 32.0] {
            let v = annulus_gradient_energy(&m, &mu, &e, r).unwrap();
            assert!((v - 2.0 * PI * 2f64.ln()).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn caccioppoli_holds_for_dirichlet_solution() {
        // v = 1 - 1/r vanishes on the hole, so b = 0 is the admissible choice
        let e = PExponents::new(2.0, 3).unwrap();
        let g = RadialGrid::geometric(3, 1.0, 40.0, 300, 1.0).unwrap();
        let v = RadialProfile::new(1.0, -1.0, e);
        let mut cutoffs = Vec::new();
        for r in [2.0, 4.0, 8.0, 16.0] {
            let c = build_cutoff(Transition::ExpBump, r).unwrap();
            let rep = caccioppoli_check(&g, &v, 0.0, &c, &e).unwrap();
            assert!(rep.holds && rep.lhs > 0.0 && rep.rhs > 0.0 && rep.c0 > 0.0);
            cutoffs.push(c);
        }
        let bc = bound_check(&g, &v, 0.0, &e, &[2.0, 4.0, 8.0, 16.0]).unwrap();
        let (c, delta) = lemma_constants(cutoffs[0].c0(2.0), bc.c1, 2.0);
        let cap = energy_cap(&g, &v, 0.0, &cutoffs, &e, c, delta).unwrap();
        assert!(cap.holds(), "{cap:?}");
        assert!((cap.cap - c * c).abs() < 1e-9 * cap.cap);
    }
}
