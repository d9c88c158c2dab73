//! Radially symmetric exterior problems.
//!
//! Every radial p-harmonic function is `a + b μ_p(r)`, so a radial problem
//! reduces to fixing two scalars from the inner boundary law and the far-field
//! condition. [`shoot_radial`] recomputes the same solutions without the
//! closed form by integrating the conserved flux `r^{d-1} Φ(v')`.
//!
//! The normal on the hole boundary points out of the domain, i.e. toward the
//! origin, so `∂v/∂ν = -v'(r_in)` and the Robin operator reads
//! `-Φ(v'(r_in)) + h(v(r_in))`.

use std::fmt;
use std::sync::Arc;

use crate::analytic::{PExponents, RadialProfile};
use crate::discretization::RadialGrid;
use crate::quadrature::gauss_legendre;
use crate::roots::{monotone_root, RootOptions};
use crate::verification::sign_condition_check;
use crate::{phi, phi_inverse, Error, Result};

/// A user-supplied boundary nonlinearity `h(v)`, assumed non-decreasing with
/// `h(v) v >= 0`.
#[derive(Clone)]
pub struct CustomLaw {
    name: String,
    h: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomLaw {
    pub fn new<F>(name: impl Into<String>, h: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            h: Arc::new(h),
        }
    }

    /// `h(v) = coeff |v|^{power-1} v`.
    pub fn signed_power(coeff: f64, power: f64) -> Self {
        Self::new(format!("{coeff}*|v|^{}*v", power - 1.0), move |v: f64| {
            if v == 0.0 {
                0.0
            } else {
                coeff * v.abs().powf(power - 1.0) * v
            }
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, v: f64) -> f64 {
        (self.h)(v)
    }
}

impl fmt::Debug for CustomLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomLaw({})", self.name)
    }
}

/// Boundary condition on (a piece of) the hole boundary.
#[derive(Debug, Clone)]
pub enum BoundaryLaw {
    DirichletValue(f64),
    NeumannZero,
    /// `h(v) = alpha |v|^{p-2} v`.
    RobinPower {
        alpha: f64,
    },
    CustomMonotone(CustomLaw),
}

impl BoundaryLaw {
    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryLaw::DirichletValue(_))
    }

    /// `h(v)`; zero for Neumann and Dirichlet laws.
    pub fn h(&self, v: f64, p: f64) -> f64 {
        match self {
            BoundaryLaw::DirichletValue(_) | BoundaryLaw::NeumannZero => 0.0,
            BoundaryLaw::RobinPower { alpha } => alpha * phi(v, p),
            BoundaryLaw::CustomMonotone(law) => law.eval(v),
        }
    }

    /// `h'(v)`. For the power law with `p < 2` the derivative is unbounded at
    /// zero; `floor` bounds `|v|` away from zero in that case.
    pub fn h_prime(&self, v: f64, p: f64, floor: f64) -> f64 {
        match self {
            BoundaryLaw::DirichletValue(_) | BoundaryLaw::NeumannZero => 0.0,
            BoundaryLaw::RobinPower { alpha } => {
                let t = v.abs().max(floor);
                if t == 0.0 {
                    if p > 2.0 {
                        0.0
                    } else {
                        *alpha
                    }
                } else {
                    alpha * (p - 1.0) * t.powf(p - 2.0)
                }
            }
            BoundaryLaw::CustomMonotone(law) => {
                let step = 1e-6 * v.abs().max(1e-3);
                (law.eval(v + step) - law.eval(v - step)) / (2.0 * step)
            }
        }
    }

    /// `H(t) = ∫_0^t h(s) ds`.
    pub fn primitive(&self, t: f64, p: f64) -> f64 {
        match self {
            BoundaryLaw::DirichletValue(_) | BoundaryLaw::NeumannZero => 0.0,
            BoundaryLaw::RobinPower { alpha } => alpha * t.abs().powf(p) / p,
            BoundaryLaw::CustomMonotone(law) => crate::quadrature::integrate_interval(|s| law.eval(s), 0.0, t, 4, 12),
        }
    }

    pub(crate) fn validate(&self, p: f64) -> Result<()> {
        match self {
            BoundaryLaw::DirichletValue(g) if !g.is_finite() => {
                Err(Error::Config(format!("Dirichlet value must be finite, got {g}")))
            }
            BoundaryLaw::RobinPower { alpha } if !(*alpha >= 0.0) || !alpha.is_finite() => Err(Error::Config(format!(
                "Robin coefficient must satisfy alpha >= 0 so that h(v)v >= 0, got {alpha}"
            ))),
            BoundaryLaw::CustomMonotone(_) => {
                let samples: Vec<f64> = (0..=400).map(|k| -10.0 + 0.05 * k as f64).collect();
                let check = sign_condition_check(self, p, &samples);
                if check.holds {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "custom boundary law violates h(v)v >= 0 at v = {:?}",
                        check.worst.map(|w| w.0)
                    )))
                }
            }
            _ => Ok(()),
        }
    }
}

/// Behaviour prescribed near infinity (or on an outer circle).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FarField {
    /// `v(x) -> b_inf` as `|x| -> ∞`.
    Limit(f64),
    /// `v = value` on `|x| = radius`.
    OuterDirichlet { radius: f64, value: f64 },
    /// `v / μ_p -> c` as `|x| -> ∞`; requires `p >= d`.
    GrowthCoefficient(f64),
}

/// Radial exterior problem outside the ball of radius `r_in`.
#[derive(Debug, Clone)]
pub struct RadialBvp {
    r_in: f64,
    inner: BoundaryLaw,
    far: FarField,
    exps: PExponents,
}

impl RadialBvp {
    pub fn new(r_in: f64, inner: BoundaryLaw, far: FarField, exps: PExponents) -> Result<Self> {
        if !(r_in > 0.0 && r_in.is_finite()) {
            return Err(Error::Config(format!("hole radius must be positive, got {r_in}")));
        }
        inner.validate(exps.p())?;
        match far {
            FarField::Limit(b) if !b.is_finite() => {
                return Err(Error::Config(format!("far-field limit must be finite, got {b}")))
            }
            FarField::OuterDirichlet { radius, value } => {
                if !(radius > r_in) || !radius.is_finite() || !value.is_finite() {
                    return Err(Error::Config(format!(
                        "outer Dirichlet circle must lie outside the hole (R = {radius}, r_in = {r_in})"
                    )));
                }
            }
            FarField::GrowthCoefficient(c) => {
                if exps.is_decaying() {
                    return Err(Error::Config(format!(
                        "growth coefficient needs p >= d (p = {}, d = {})",
                        exps.p(),
                        exps.d()
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::Config(format!("growth coefficient must be finite, got {c}")));
                }
            }
            _ => {}
        }
        Ok(Self { r_in, inner, far, exps })
    }

    pub fn r_in(&self) -> f64 {
        self.r_in
    }

    pub fn inner(&self) -> &BoundaryLaw {
        &self.inner
    }

    pub fn far(&self) -> FarField {
        self.far
    }

    pub fn exps(&self) -> PExponents {
        self.exps
    }
}

/// Residual of the inner boundary operator for `profile` at `r_in`:
/// `v(r_in) - g` for Dirichlet data, `-Φ(v'(r_in)) + h(v(r_in))` otherwise.
pub fn boundary_residual(profile: &RadialProfile, law: &BoundaryLaw, r_in: f64) -> Result<f64> {
    let v = profile.eval(r_in)?;
    match law {
        BoundaryLaw::DirichletValue(g) => Ok(v - g),
        _ => {
            let p = profile.exps.p();
            let dv = profile.derivative(r_in)?;
            Ok(-phi(dv, p) + law.h(v, p))
        }
    }
}

/// Tolerance for accepting an over-determined bounded solution when `p >= d`.
const CONSISTENCY_TOL: f64 = 1e-12;

/// Exact solution `a + b μ_p` of a radial problem.
pub fn solve_radial(bvp: &RadialBvp) -> Result<RadialProfile> {
    let exps = bvp.exps;
    let p = exps.p();
    let r0 = bvp.r_in;
    let mu_in = exps.mu_unchecked(r0);
    let slope_in = exps.mu_prime_unchecked(r0);
    let opts = || RootOptions {
        singular_at_zero: p < 2.0,
    };

    let (a, b) = match (&bvp.inner, bvp.far) {
        (_, FarField::Limit(b_inf)) if !exps.is_decaying() => {
            // μ_p is unbounded: boundedness forces b = 0, the inner law must agree
            let profile = RadialProfile::constant(b_inf, exps);
            let res = boundary_residual(&profile, &bvp.inner, r0)?;
            if res.abs() > CONSISTENCY_TOL * (1.0 + b_inf.abs()) {
                return Err(Error::Config(format!(
                    "no bounded solution with limit {b_inf} satisfies the inner law (residual {res:.3e})"
                )));
            }
            (b_inf, 0.0)
        }
        (BoundaryLaw::DirichletValue(g), FarField::Limit(b_inf)) => (b_inf, (g - b_inf) / mu_in),
        (BoundaryLaw::NeumannZero, FarField::Limit(b_inf)) => (b_inf, 0.0),
        (law, FarField::Limit(b_inf)) => {
            let f = |b: f64| -phi(b * slope_in, p) + law.h(b_inf + b * mu_in, p);
            let b = monotone_root(f, 0.0, 1.0 + b_inf.abs(), opts())?;
            (b_inf, b)
        }
        (BoundaryLaw::DirichletValue(g), FarField::OuterDirichlet { radius, value }) => {
            let mu_out = exps.mu_unchecked(radius);
            let b = (g - value) / (mu_in - mu_out);
            (value - b * mu_out, b)
        }
        (BoundaryLaw::NeumannZero, FarField::OuterDirichlet { value, .. }) => (value, 0.0),
        (law, FarField::OuterDirichlet { radius, value }) => {
            let mu_out = exps.mu_unchecked(radius);
            let span = mu_in - mu_out;
            let f = |b: f64| -phi(b * slope_in, p) + law.h(value + b * span, p);
            let b = monotone_root(f, 0.0, 1.0 + value.abs(), opts())?;
            (value - b * mu_out, b)
        }
        (BoundaryLaw::DirichletValue(g), FarField::GrowthCoefficient(c)) => (g - c * mu_in, c),
        (BoundaryLaw::NeumannZero, FarField::GrowthCoefficient(c)) => {
            return Err(Error::Config(format!(
                "zero Neumann data with growth coefficient {c} has no unique radial solution"
            )));
        }
        (law, FarField::GrowthCoefficient(c)) => {
            let target = phi(c * slope_in, p);
            if law.h(1.0, p) == 0.0 && law.h(-1.0, p) == 0.0 {
                return Err(Error::Config(
                    "Robin law with vanishing coefficient cannot fix the offset".into(),
                ));
            }
            let f = |a: f64| law.h(a + c * mu_in, p) - target;
            let a = monotone_root(f, 0.0, 1.0 + c.abs(), opts())?;
            (a, c)
        }
    };
    Ok(RadialProfile::new(a, b, exps))
}

/// Gauss points per panel in the shooting quadrature.
const SHOOT_ORDER: usize = 16;
/// Largest radius ratio within one quadrature panel.
const SHOOT_PANEL_RATIO: f64 = 1.2;

/// Independent oracle: integrates `(r^{d-1} Φ(v'))' = 0` with conserved flux
/// `F`, bisecting on `F` until the far-field condition holds, and returns the
/// values on the grid nodes.
pub fn shoot_radial(bvp: &RadialBvp, grid: &RadialGrid) -> Result<Vec<f64>> {
    let radii = grid.radii();
    let r0 = bvp.r_in;
    if (radii[0] - r0).abs() > 1e-12 * r0 {
        return Err(Error::Precondition(format!(
            "grid starts at {} but the hole radius is {r0}",
            radii[0]
        )));
    }
    if grid.dimension() != bvp.exps.d() {
        return Err(Error::Precondition(format!(
            "grid dimension {} differs from problem dimension {}",
            grid.dimension(),
            bvp.exps.d()
        )));
    }
    let p = bvp.exps.p();
    let d = bvp.exps.d() as f64;
    // v'(r) = Φ^{-1}(F) r^{-alpha}
    let alpha = (d - 1.0) / (p - 1.0);
    let rule = gauss_legendre(SHOOT_ORDER);
    let weight_integral = |a: f64, b: f64| power_integral(a, b, alpha, &rule);

    // cumulative ∫_{r0}^{r_k} r^{-alpha} dr
    let mut cumulative = Vec::with_capacity(radii.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in radii.windows(2) {
        acc += weight_integral(w[0], w[1]);
        cumulative.push(acc);
    }

    let law = &bvp.inner;
    let inner_flux_scale = r0.powf(d - 1.0);
    // v(r0) implied by the inner law for flux F; None when the law leaves it free
    let inner_value = |flux: f64| -> Result<Option<f64>> {
        match law {
            BoundaryLaw::DirichletValue(g) => Ok(Some(*g)),
            BoundaryLaw::NeumannZero => Ok(None),
            _ => {
                let target = flux / inner_flux_scale;
                let v = monotone_root(
                    |v| law.h(v, p) - target,
                    0.0,
                    1.0,
                    RootOptions {
                        singular_at_zero: p < 2.0,
                    },
                )
                .map_err(|e| Error::Oracle(format!("inner law inversion failed: {e}")))?;
                Ok(Some(v))
            }
        }
    };

    let (flux, v0) = match bvp.far {
        FarField::GrowthCoefficient(c) => {
            let flux = inner_flux_scale * phi(c * bvp.exps.mu_prime_unchecked(r0), p);
            match inner_value(flux)? {
                Some(v0) => (flux, v0),
                None => {
                    return Err(Error::Oracle(
                        "zero Neumann data cannot carry a non-zero growth flux".into(),
                    ))
                }
            }
        }
        FarField::Limit(b_inf) if !bvp.exps.is_decaying() => {
            // ∫^∞ r^{-alpha} diverges for alpha <= 1: only zero flux stays bounded
            let v0 = inner_value(0.0)?.unwrap_or(b_inf);
            if (v0 - b_inf).abs() > CONSISTENCY_TOL * (1.0 + b_inf.abs()) {
                return Err(Error::Oracle(format!(
                    "bounded branch needs v = {b_inf} but the inner law gives {v0}"
                )));
            }
            (0.0, b_inf)
        }
        far => {
            let (reach, target) = match far {
                FarField::Limit(b_inf) => {
                    let end = *radii.last().expect("grid has nodes");
                    (acc + tail_integral(end, alpha, &rule), b_inf)
                }
                FarField::OuterDirichlet { radius, value } => (weight_integral(r0, radius), value),
                FarField::GrowthCoefficient(_) => unreachable!(),
            };
            if matches!(law, BoundaryLaw::NeumannZero) {
                (0.0, target)
            } else {
                let mismatch = |flux: f64| -> Result<f64> {
                    let v0 = inner_value(flux)?.expect("non-Neumann law fixes v(r0)");
                    Ok(v0 + phi_inverse(flux, p) * reach - target)
                };
                let flux = bisect_flux(&mismatch)?;
                (flux, inner_value(flux)?.expect("non-Neumann law fixes v(r0)"))
            }
        }
    };

    let slope = phi_inverse(flux, p);
    Ok(cumulative.iter().map(|c| v0 + slope * c).collect())
}

/// Bisection on the flux constant; the mismatch is non-decreasing in `F`.
fn bisect_flux(mismatch: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    let m0 = mismatch(0.0)?;
    if m0 == 0.0 {
        return Ok(0.0);
    }
    // mismatch(0) > 0 means the root lies at negative flux
    let dir = if m0 > 0.0 { -1.0 } else { 1.0 };
    let mut lo = 0.0;
    let mut hi = dir;
    let mut expansions = 0;
    while mismatch(hi)?.signum() == m0.signum() {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 1100 {
            return Err(Error::Oracle(format!(
                "flux bracket not found: mismatch keeps sign {:+} up to F = {hi:.3e}",
                m0.signum()
            )));
        }
    }
    // invariant: mismatch(lo) has the sign of m0, mismatch(hi) does not
    for _ in 0..2200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi || (hi - lo).abs() <= 1e-16 * hi.abs().max(lo.abs()) {
            break;
        }
        let m = mismatch(mid)?;
        if m == 0.0 {
            return Ok(mid);
        }
        if m.signum() == m0.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `∫_a^b r^{-alpha} dr` by composite Gauss–Legendre on geometric panels.
fn power_integral(a: f64, b: f64, alpha: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let panels = ((b / a).ln() / SHOOT_PANEL_RATIO.ln()).ceil().max(1.0) as usize;
    let ratio = (b / a).powf(1.0 / panels as f64);
    let mut total = 0.0;
    let mut lo = a;
    for k in 0..panels {
        let hi = if k + 1 == panels { b } else { lo * ratio };
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let s: f64 = rule
            .0
            .iter()
            .zip(&rule.1)
            .map(|(x, w)| w * (mid + half * x).powf(-alpha))
            .sum();
        total += half * s;
        lo = hi;
    }
    total
}

/// `∫_R^∞ r^{-alpha} dr` for `alpha > 1` via `r = R/u`, integrating
/// `R^{1-alpha} u^{alpha-2}` over `(0, 1]`. Halving `u` scales the integral
/// over a dyadic panel by `2^{1-alpha}`, so the panels form a geometric series
/// summed from the first one.
fn tail_integral(end: f64, alpha: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let scale = end.powf(1.0 - alpha);
    let first: f64 = rule
        .0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| 0.25 * w * (0.75 + 0.25 * x).powf(alpha - 2.0))
        .sum();
    scale * first / -((1.0 - alpha) * std::f64::consts::LN_2).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(p: f64, d: u32) -> PExponents {
        PExponents::new(p, d).unwrap()
    }

    fn bvp(p: f64, d: u32, r: f64, inner: BoundaryLaw, far: FarField) -> RadialBvp {
        RadialBvp::new(r, inner, far, ex(p, d)).unwrap()
    }

    #[test]
    fn robin_growth_critical_case() {
        let b = bvp(
            2.0,
            2,
            1.0,
            BoundaryLaw::RobinPower { alpha: 1.0 },
            FarField::GrowthCoefficient(1.0),
        );
        let v = solve_radial(&b).unwrap();
        assert!((v.offset - 1.0).abs() < 1e-12 && (v.coefficient - 1.0).abs() < 1e-15);
        assert!(boundary_residual(&v, b.inner(), 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dirichlet_growth_supercritical_case() {
        let b = bvp(
            3.0,
            2,
            1.0,
            BoundaryLaw::DirichletValue(0.0),
            FarField::GrowthCoefficient(1.0),
        );
        let v = solve_radial(&b).unwrap();
        assert_eq!((v.offset, v.coefficient), (-1.0, 1.0));
    }

    #[test]
    fn robin_zero_limit_is_trivial() {
        let b = bvp(
            2.0,
            3,
            1.0,
            BoundaryLaw::RobinPower { alpha: 1.0 },
            FarField::Limit(0.0),
        );
        let v = solve_radial(&b).unwrap();
        assert_eq!(v.offset, 0.0);
        assert!(v.coefficient.abs() < 1e-300);
    }

    #[test]
    fn residual_examples() {
        let e = ex(2.0, 2);
        let v = RadialProfile::new(1.0, 1.0, e);
        assert!(
            boundary_residual(&v, &BoundaryLaw::RobinPower { alpha: 1.0 }, 1.0)
                .unwrap()
                .abs()
                < 1e-15
        );
        let c = RadialProfile::constant(3.0, ex(3.0, 2));
        assert_eq!(boundary_residual(&c, &BoundaryLaw::NeumannZero, 2.0).unwrap(), 0.0);
        let mu = RadialProfile::new(0.0, 1.0, ex(3.0, 2));
        let r = boundary_residual(&mu, &BoundaryLaw::RobinPower { alpha: 1.0 }, 1.0).unwrap();
        assert!((r - 0.75).abs() < 1e-15);
        let r = boundary_residual(&mu, &BoundaryLaw::DirichletValue(0.25), 1.0).unwrap();
        assert!((r - 0.75).abs() < 1e-15);
    }

    #[test]
    fn admissibility_errors() {
        let e = ex(2.0, 3);
        assert!(RadialBvp::new(0.0, BoundaryLaw::NeumannZero, FarField::Limit(0.0), e).is_err());
        assert!(RadialBvp::new(1.0, BoundaryLaw::RobinPower { alpha: -1.0 }, FarField::Limit(0.0), e).is_err());
        assert!(RadialBvp::new(1.0, BoundaryLaw::NeumannZero, FarField::GrowthCoefficient(1.0), e).is_err());
        assert!(RadialBvp::new(
            1.0,
            BoundaryLaw::NeumannZero,
            FarField::OuterDirichlet {
                radius: 0.5,
                value: 0.0
            },
            e
        )
        .is_err());
        let bad = CustomLaw::new("-v", |v| -v);
        assert!(RadialBvp::new(1.0, BoundaryLaw::CustomMonotone(bad), FarField::Limit(0.0), e).is_err());
    }

    #[test]
    fn inconsistent_bounded_branch() {
        let b = bvp(3.0, 2, 1.0, BoundaryLaw::DirichletValue(1.0), FarField::Limit(0.0));
        assert!(matches!(solve_radial(&b), Err(Error::Config(_))));
        let b = bvp(3.0, 2, 1.0, BoundaryLaw::NeumannZero, FarField::GrowthCoefficient(2.0));
        assert!(matches!(solve_radial(&b), Err(Error::Config(_))));
    }

    #[test]
    fn shooting_examples() {
        let grid = RadialGrid::geometric(2, 1.0, 4.0, 41, 1.0).unwrap();
        let b = bvp(
            3.0,
            2,
            1.0,
            BoundaryLaw::DirichletValue(0.0),
            FarField::OuterDirichlet {
                radius: 4.0,
                value: 1.0,
            },
        );
        let v = shoot_radial(&b, &grid).unwrap();
        for (r, s) in grid.radii().iter().zip(&v) {
            assert!((s - (r.sqrt() - 1.0)).abs() < 1e-10, "r={r}");
        }
        // r = 2.25 is a node: 1 + 1.25 = 1 + 16.666...·0.075
        let grid = RadialGrid::new(2, vec![1.0, 2.25, 4.0]).unwrap();
        let v = shoot_radial(&b, &grid).unwrap();
        assert!((v[1] - 0.5).abs() < 1e-12);

        let grid = RadialGrid::geometric(3, 1.0, 2.0, 11, 1.0).unwrap();
        let b = bvp(
            2.0,
            3,
            1.0,
            BoundaryLaw::DirichletValue(0.0),
            FarField::OuterDirichlet {
                radius: 2.0,
                value: 1.0,
            },
        );
        let v = shoot_radial(&b, &grid).unwrap();
        assert!((v.last().unwrap() - 1.0).abs() < 1e-12);
        for (r, s) in grid.radii().iter().zip(&v) {
            assert!((s - (1.0 - 1.0 / r) / 0.5).abs() < 1e-12);
        }

        let b = bvp(
            4.0,
            3,
            1.0,
            BoundaryLaw::NeumannZero,
            FarField::OuterDirichlet {
                radius: 2.0,
                value: -3.5,
            },
        );
        assert!(shoot_radial(&b, &grid).unwrap().iter().all(|v| *v == -3.5));
    }

    #[test]
    fn shooting_checks_grid() {
        let b = bvp(2.0, 3, 1.0, BoundaryLaw::NeumannZero, FarField::Limit(1.0));
        let g = RadialGrid::geometric(3, 2.0, 4.0, 5, 1.0).unwrap();
        assert!(matches!(shoot_radial(&b, &g), Err(Error::Precondition(_))));
        let g = RadialGrid::geometric(2, 1.0, 4.0, 5, 1.0).unwrap();
        assert!(matches!(shoot_radial(&b, &g), Err(Error::Precondition(_))));
    }

    #[test]
    fn tail_integral_matches_closed_form() {
        let rule = gauss_legendre(SHOOT_ORDER);
        for alpha in [1.0204, 1.5, 2.0, 3.0, 4.0] {
            let t = tail_integral(3.0, alpha, &rule);
            let exact = 3f64.powf(1.0 - alpha) / (alpha - 1.0);
            assert!((t - exact).abs() < 1e-13 * exact, "alpha={alpha}");
        }
    }
}
