//! Closed-form pieces: the fundamental solution `μ_p`, the two-parameter
//! family of radial p-harmonic functions, the Kelvin transform and the
//! constants that appear in the annulus estimates.

use std::f64::consts::{LN_2, PI};

use crate::{Error, Result};

/// Exponent pair `(p, d)` together with the decay exponent
/// `κ = (p - d)/(p - 1)` of the fundamental solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PExponents {
    p: f64,
    d: u32,
    kappa: f64,
}

impl PExponents {
    pub fn new(p: f64, d: u32) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::Domain(format!("p must satisfy p > 1, got {p}")));
        }
        if d < 2 {
            return Err(Error::Domain(format!("dimension must be at least 2, got {d}")));
        }
        Ok(Self {
            p,
            d,
            kappa: Self::kappa_of(p, d),
        })
    }

    fn kappa_of(p: f64, d: u32) -> f64 {
        (p - d as f64) / (p - 1.0)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `p == d`, the logarithmic case.
    pub fn is_critical(&self) -> bool {
        self.p == self.d as f64
    }

    /// `μ_p` is bounded near infinity exactly when `p < d`.
    pub fn is_decaying(&self) -> bool {
        self.p < self.d as f64
    }

    /// Same exponents with a different `p`; used by continuation in `p`.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(p, self.d)
    }

    /// `μ_p(r)`: `r^κ` for `p != d`, `ln r` for `p == d`.
    pub fn mu(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.mu_unchecked(r))
    }

    pub(crate) fn mu_unchecked(&self, r: f64) -> f64 {
        if self.is_critical() {
            r.ln()
        } else {
            r.powf(self.kappa)
        }
    }

    /// Radial derivative `μ_p'(r)`.
    pub fn mu_prime(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.mu_prime_unchecked(r))
    }

    pub(crate) fn mu_prime_unchecked(&self, r: f64) -> f64 {
        if self.is_critical() {
            1.0 / r
        } else {
            self.kappa * r.powf(self.kappa - 1.0)
        }
    }

    /// Cartesian gradient of `μ_p` at `x` (any length, usually `d`).
    pub fn mu_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        if !(r2 > 0.0) || !r2.is_finite() {
            return Err(Error::Domain("gradient of μ_p requested at the origin".into()));
        }
        let scale = if self.is_critical() {
            1.0 / r2
        } else {
            self.kappa * r2.sqrt().powf(self.kappa - 2.0)
        };
        Ok(x.iter().map(|c| scale * c).collect())
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius must be positive and finite, got {r}")))
    }
}

/// `μ_p(r)` for the given exponents.
pub fn mu_eval(exps: &PExponents, r: f64) -> Result<f64> {
    exps.mu(r)
}

/// Gradient of `μ_p` at `x`.
pub fn mu_grad(exps: &PExponents, x: &[f64]) -> Result<Vec<f64>> {
    exps.mu_grad(x)
}

/// `v(r) = a + b μ_p(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub offset: f64,
    pub coefficient: f64,
    pub exps: PExponents,
}

impl RadialProfile {
    pub fn new(offset: f64, coefficient: f64, exps: PExponents) -> Self {
        Self {
            offset,
            coefficient,
            exps,
        }
    }

    pub fn constant(value: f64, exps: PExponents) -> Self {
        Self::new(value, 0.0, exps)
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        Ok(self.offset + self.coefficient * self.exps.mu(r)?)
    }

    /// Radial derivative `v'(r)`.
    pub fn derivative(&self, r: f64) -> Result<f64> {
        Ok(self.coefficient * self.exps.mu_prime(r)?)
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.exps.mu_grad(x)?;
        Ok(g.into_iter().map(|c| self.coefficient * c).collect())
    }

    /// Limit at infinity, when it exists.
    pub fn limit_at_infinity(&self) -> Option<f64> {
        if self.coefficient == 0.0 || self.exps.is_decaying() {
            Some(self.offset)
        } else {
            None
        }
    }
}

pub fn radial_eval(profile: &RadialProfile, r: f64) -> Result<f64> {
    profile.eval(r)
}

pub fn radial_grad(profile: &RadialProfile, x: &[f64]) -> Result<Vec<f64>> {
    profile.grad(x)
}

/// Kelvin transform `K[v](x) = |x|^{2-d} v(x/|x|^2)` as a function combinator.
///
/// The returned closure fails with a domain error at `x = 0` and propagates
/// errors from `v`. Nesting two transforms gives back `v`.
pub fn kelvin<F>(v: F, d: u32) -> Result<impl Fn(&[f64]) -> Result<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if d < 3 {
        return Err(Error::Domain(format!(
            "Kelvin transform is provided for d >= 3, got d = {d}"
        )));
    }
    Ok(move |x: &[f64]| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        if !(r2 > 0.0) {
            return Err(Error::Domain("Kelvin transform evaluated at the origin".into()));
        }
        let image: Vec<f64> = x.iter().map(|c| c / r2).collect();
        let scale = r2.sqrt().powi(2 - d as i32);
        Ok(scale * v(&image)?)
    })
}

/// Surface area of the unit sphere in `R^d`, `2 π^{d/2} / Γ(d/2)`.
pub fn omega_d(d: u32) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half_integer(d)
}

/// `Γ(d/2)` by the recurrence `Γ(x + 1) = x Γ(x)` from `Γ(1) = 1`, `Γ(1/2) = √π`.
fn gamma_half_integer(d: u32) -> f64 {
    let (mut x, mut g) = if d.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (0.5, PI.sqrt())
    };
    let target = d as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Threshold on `|d - p^2|` below which the logarithmic branch is used.
pub const LOG_BRANCH_TOLERANCE: f64 = 1e-9;

/// Constant `c₂` with
/// `r^{-p} ∫_r^{2r} s^{pκ} s^{d-1} ds = c₂ r^κ`.
///
/// With `q = (p^2 - d)/(p - 1)` this is `(2^q - 1)/q`, and `ln 2` when
/// `d = p^2`. The value is always positive.
pub fn annulus_decay_constant(exps: &PExponents) -> f64 {
    let p = exps.p();
    let d = exps.d() as f64;
    if (d - p * p).abs() < LOG_BRANCH_TOLERANCE {
        return LN_2;
    }
    let q = (p * p - d) / (p - 1.0);
    (q * LN_2).exp_m1() / q
}

/// The same expression with the denominator written as `d - p^2`; it has the
/// opposite sign of [`annulus_decay_constant`] and is kept only so reports can
/// show the discrepancy.
pub fn annulus_decay_constant_negated(exps: &PExponents) -> f64 {
    let p = exps.p();
    let d = exps.d() as f64;
    if (d - p * p).abs() < LOG_BRANCH_TOLERANCE {
        return LN_2;
    }
    (p - 1.0) / (d - p * p) * (2f64.powf((p * p - d) / (p - 1.0)) - 1.0)
}

/// Upper bound `(ω_d/d)(2^d - 1) M^p r^{d-p}` for
/// `r^{-p} ∫_{B_{2r} \ B_r} |v - b|^p` when `|v - b| <= M`.
pub fn sup_bound_constant(exps: &PExponents, sup_norm: f64, r: f64) -> Result<f64> {
    if !(sup_norm >= 0.0) {
        return Err(Error::Domain(format!("sup norm must be non-negative, got {sup_norm}")));
    }
    check_radius(r)?;
    let d = exps.d() as f64;
    let p = exps.p();
    Ok(omega_d(exps.d()) / d * (2f64.powf(d) - 1.0) * sup_norm.powf(p) * r.powf(d - p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(p: f64, d: u32) -> PExponents {
        PExponents::new(p, d).unwrap()
    }

    #[test]
    fn exponent_validation() {
        assert!(PExponents::new(1.0, 2).is_err());
        assert!(PExponents::new(2.0, 1).is_err());
        assert!(PExponents::new(f64::NAN, 3).is_err());
        assert!(ex(1.5, 3).kappa() < 0.0);
        assert_eq!(ex(3.0, 3).kappa(), 0.0);
        assert!(ex(4.0, 3).kappa() > 0.0);
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu_eval(&ex(2.0, 3), 2.0).unwrap(), 0.5);
        assert_eq!(mu_eval(&ex(2.0, 2), 1.0).unwrap(), 0.0);
        assert!((mu_eval(&ex(3.0, 2), 4.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(mu_eval(&ex(2.0, 3), 0.0).is_err());
        assert!(mu_eval(&ex(2.0, 3), -1.0).is_err());
    }

    #[test]
    fn mu_grad_examples() {
        let g = mu_grad(&ex(2.0, 3), &[2.0, 0.0, 0.0]).unwrap();
        assert!((g[0] + 0.25).abs() < 1e-15 && g[1] == 0.0 && g[2] == 0.0);
        let g = mu_grad(&ex(2.0, 2), &[0.0, 2.0]).unwrap();
        assert!(g[0].abs() < 1e-15 && (g[1] - 0.5).abs() < 1e-15);
        assert!(mu_grad(&ex(2.0, 2), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn radial_examples() {
        let v = RadialProfile::new(1.0, -1.0, ex(2.0, 3));
        assert_eq!(v.eval(1.0).unwrap(), 0.0);
        let c = RadialProfile::constant(4.25, ex(3.0, 2));
        assert_eq!(c.eval(17.0).unwrap(), 4.25);
        assert_eq!(c.grad(&[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        let w = RadialProfile::new(-1.0, 1.0, ex(3.0, 2));
        assert!((w.eval(4.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(w.eval(0.0).is_err());
        assert_eq!(v.limit_at_infinity(), Some(1.0));
        assert_eq!(w.limit_at_infinity(), None);
    }

    #[test]
    fn kelvin_examples() {
        let k = kelvin(|_: &[f64]| Ok(1.0), 3).unwrap();
        assert!((k(&[2.0, 0.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(k(&[0.0, 0.0, 0.0]).is_err());
        let inv = |y: &[f64]| Ok(1.0 / y.iter().map(|c| c * c).sum::<f64>().sqrt());
        let k = kelvin(inv, 3).unwrap();
        for x in [[1.0, 2.0, 3.0], [0.1, -0.2, 0.05], [7.0, 0.0, -1.0]] {
            assert!((k(&x).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!(kelvin(|_: &[f64]| Ok(1.0), 2).is_err());
    }

    #[test]
    fn omega_examples() {
        assert!((omega_d(2) - 2.0 * PI).abs() < 1e-14);
        assert!((omega_d(3) - 4.0 * PI).abs() < 1e-14);
        assert!((omega_d(4) - 2.0 * PI * PI).abs() < 1e-13);
        // 8π²/3 for the 4-sphere in R^5
        assert!((omega_d(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn decay_constant_branches() {
        assert!((annulus_decay_constant(&ex(2.0, 4)) - LN_2).abs() < 1e-15);
        assert!((annulus_decay_constant(&ex(2.0, 3)) - 1.0).abs() < 1e-15);
        let c = annulus_decay_constant(&ex(1.5, 3));
        assert!(c > 0.0);
        assert!((annulus_decay_constant_negated(&ex(1.5, 3)) + c).abs() < 1e-14);
        // continuity across the logarithmic branch
        let near = annulus_decay_constant(&PExponents::new(2.0 + 1e-7, 4).unwrap());
        assert!((near - LN_2).abs() < 1e-6);
    }

    #[test]
    fn sup_bound_examples() {
        assert_eq!(sup_bound_constant(&ex(2.0, 2), 0.0, 3.0).unwrap(), 0.0);
        let v = sup_bound_constant(&ex(3.0, 3), 1.0, 5.0).unwrap();
        assert!((v - 4.0 * PI / 3.0 * 7.0).abs() < 1e-12);
        assert!((v - 29.321531433504735).abs() < 1e-10);
        assert!(sup_bound_constant(&ex(3.0, 3), -1.0, 5.0).is_err());
    }
}
