use std::sync::OnceLock;

use crate::{Error, Result};

/// Points used to estimate `sup |ψ'|` on `[1, 2]`.
pub const DENSE_SAMPLES: usize = 1_000_000;

/// Shape of the radial transition from 1 to 0 on `[1, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transition {
    /// `ψ(s) = g(2-s) / (g(2-s) + g(s-1))`, `g(t) = exp(-1/t)` for `t > 0`.
    #[default]
    ExpBump,
}

impl Transition {
    pub fn name(&self) -> &'static str {
        match self {
            Transition::ExpBump => "exp-bump",
        }
    }

    pub fn psi(&self, s: f64) -> f64 {
        if s <= 1.0 {
            return 1.0;
        }
        if s >= 2.0 {
            return 0.0;
        }
        // ψ = 1 / (1 + g(s-1)/g(2-s))
        let e = 1.0 / (2.0 - s) - 1.0 / (s - 1.0);
        1.0 / (1.0 + e.exp())
    }

    pub fn psi_prime(&self, s: f64) -> f64 {
        if s <= 1.0 || s >= 2.0 {
            return 0.0;
        }
        let (a, b) = (2.0 - s, s - 1.0);
        // A B / (A + B)² = 1 / (A/B + 2 + B/A) with A/B = exp(1/b - 1/a)
        let ratio = (1.0 / b - 1.0 / a).exp();
        let mix = 1.0 / (ratio + 2.0 + 1.0 / ratio);
        -(1.0 / (a * a) + 1.0 / (b * b)) * mix
    }

    /// Dense-sampled `max |ψ'|` over `[1, 2]`, computed once.
    pub fn sup_derivative(&self) -> f64 {
        static EXP_BUMP: OnceLock<f64> = OnceLock::new();
        match self {
            Transition::ExpBump => *EXP_BUMP.get_or_init(|| dense_sup(*self, DENSE_SAMPLES)),
        }
    }
}

pub(crate) fn dense_sup(t: Transition, n: usize) -> f64 {
    (0..=n)
        .map(|k| t.psi_prime(1.0 + k as f64 / n as f64).abs())
        .fold(0.0, f64::max)
}

/// The cutoff `φ(x) = ψ(|x|)` (1 inside `B_1`, 0 outside `B_2`) and its
/// scaling `φ_r(x) = φ(x / r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFamily {
    transition: Transition,
    r: f64,
    grad_sup: f64,
}

pub fn build_cutoff(transition: Transition, r: f64) -> Result<CutoffFamily> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Precondition(format!("cutoff radius must be positive, got {r}")));
    }
    Ok(CutoffFamily {
        transition,
        r,
        grad_sup: transition.sup_derivative(),
    })
}

impl CutoffFamily {
    pub fn transition(&self) -> Transition {
        self.transition
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    /// `‖∇φ‖_∞` of the unscaled cutoff.
    pub fn grad_sup(&self) -> f64 {
        self.grad_sup
    }

    /// `C₀ = p ‖∇φ‖_∞`.
    pub fn c0(&self, p: f64) -> f64 {
        p * self.grad_sup
    }

    /// `φ_r` at distance `rho` from the origin.
    pub fn value(&self, rho: f64) -> f64 {
        self.transition.psi(rho / self.r)
    }

    /// `|∇φ_r|` at distance `rho`.
    pub fn grad_norm(&self, rho: f64) -> f64 {
        self.transition.psi_prime(rho / self.r).abs() / self.r
    }

    /// Same transition at another radius.
    pub fn at_radius(&self, r: f64) -> Result<CutoffFamily> {
        build_cutoff(self.transition, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_values() {
        let t = Transition::ExpBump;
        assert_eq!(t.psi(1.0), 1.0);
        assert_eq!(t.psi(2.0), 0.0);
        assert!((t.psi(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(t.psi(0.3), 1.0);
        assert_eq!(t.psi(7.0), 0.0);
    }

    #[test]
    fn monotone_and_bounded() {
        let t = Transition::ExpBump;
        let mut prev = 1.0;
        for k in 0..=10_000 {
            let v = t.psi(1.0 + k as f64 / 10_000.0);
            assert!((0.0..=1.0).contains(&v) && v <= prev);
            prev = v;
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let t = Transition::ExpBump;
        for k in 1..100 {
            let s = 1.0 + k as f64 / 100.0;
            let h = 1e-6;
            let fd = (t.psi(s + h) - t.psi(s - h)) / (2.0 * h);
            assert!((fd - t.psi_prime(s)).abs() < 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn cached_sup_matches_independent_sampling() {
        let t = Transition::ExpBump;
        let stored = t.sup_derivative();
        // offset grid that never hits the stored sample points
        let n = 3_000_001;
        let oracle = (0..n)
            .map(|k| t.psi_prime(1.0 + (k as f64 + 0.37) / n as f64).abs())
            .fold(0.0, f64::max);
        assert!((stored - oracle).abs() <= 1e-6 * oracle);
        assert!(stored >= oracle);
        assert!((stored - 2.0).abs() < 1e-9);
    }

    #[test]
    fn scaled_gradient_bound() {
        let c = build_cutoff(Transition::ExpBump, 3.0).unwrap();
        for k in 0..1000 {
            let rho = 9.0 * k as f64 / 1000.0;
            assert!(c.grad_norm(rho) <= c.grad_sup() / 3.0 * (1.0 + 1e-12));
        }
        assert_eq!(c.value(2.0), 1.0);
        assert_eq!(c.value(6.5), 0.0);
        assert!(build_cutoff(Transition::ExpBump, 0.0).is_err());
    }
}
