//! Numerical certificates for computed and analytic fields: the cutoff
//! energy inequality and the energy cap it implies, annulus bounds, decay and
//! Kelvin-limit fits, the limit-versus-growth classifier and the boundary
//! sign condition.

mod asymptotics;
mod cutoff;
mod inequalities;

use std::io::Write;

pub use asymptotics::{
    classify_dichotomy, decay_fit, kelvin_limit_estimate, DecayFit, DichotomyThresholds, DichotomyVerdict, FitMode,
    FitStatus,
};
pub use cutoff::{build_cutoff, CutoffFamily, Transition, DENSE_SAMPLES};
pub use inequalities::{
    annulus_gradient_energy, bound_check, caccioppoli_check, energy_cap, lemma_constants, BoundCheck,
    CaccioppoliReport, CapEntry, EnergyCap, HOLD_TOL, REFINEMENT_ORDERS, ZERO_FLOOR,
};

use crate::discretization::fmt_num;
use crate::radial_bvp::BoundaryLaw;

/// Products `h(v) v` above this (negative) threshold count as non-negative.
pub const SIGN_TOL: f64 = -1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignCheck {
    pub holds: bool,
    /// `(v, h(v) v)` for the most negative product, when the check fails.
    pub worst: Option<(f64, f64)>,
}

/// Checks `h(v) v >= 0` at every sample.
pub fn sign_condition_check(law: &BoundaryLaw, p: f64, samples: &[f64]) -> SignCheck {
    let mut worst: Option<(f64, f64)> = None;
    for &v in samples {
        let prod = law.h(v, p) * v;
        if !(prod >= SIGN_TOL) && worst.is_none_or(|(_, w)| prod < w || w.is_nan()) {
            worst = Some((v, prod));
        }
    }
    SignCheck {
        holds: worst.is_none(),
        worst,
    }
}

/// Collected verification outcomes, serialized as `key: value` lines.
#[derive(Debug, Clone, Default)]
pub struct VerificationReport {
    pub entries: Vec<(String, String)>,
    pub caccioppoli: Vec<CaccioppoliReport>,
    pub failures: Vec<String>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn push_num(&mut self, key: impl Into<String>, value: f64) {
        self.entries.push((key.into(), fmt_num(value)));
    }

    /// Records a failed check; the report then no longer passes.
    pub fn fail(&mut self, what: impl Into<String>) {
        self.failures.push(what.into());
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn add_caccioppoli(&mut self, rep: CaccioppoliReport) {
        if !rep.holds {
            self.fail(format!("cutoff inequality at r = {}", rep.r));
        }
        self.caccioppoli.push(rep);
    }

    pub fn write_text(&self, out: &mut dyn Write) -> std::io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(out, "{k}: {v}")?;
        }
        writeln!(out, "passed: {}", self.passed())?;
        for (k, f) in self.failures.iter().enumerate() {
            writeln!(out, "failure_{k}: {f}")?;
        }
        Ok(())
    }

    /// CSV `r,lhs,rhs,holds`.
    pub fn write_caccioppoli_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "r,lhs,rhs,holds")?;
        for c in &self.caccioppoli {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_num(c.r),
                fmt_num(c.lhs),
                fmt_num(c.rhs),
                c.holds
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_bvp::CustomLaw;

    #[test]
    fn robin_power_always_holds() {
        let law = BoundaryLaw::RobinPower { alpha: 2.0 };
        let s: Vec<f64> = (-50..=50).map(|k| k as f64 * 0.37).collect();
        for p in [1.2, 2.0, 3.5] {
            assert!(sign_condition_check(&law, p, &s).holds);
        }
    }

    #[test]
    fn negative_identity_fails_at_largest_sample() {
        let law = BoundaryLaw::CustomMonotone(CustomLaw::new("-v", |v| -v));
        let c = sign_condition_check(&law, 2.0, &[0.0, 0.5, 1.0]);
        assert!(!c.holds);
        assert_eq!(c.worst, Some((1.0, -1.0)));
    }

    #[test]
    fn cubic_holds_on_wide_range() {
        let law = BoundaryLaw::CustomMonotone(CustomLaw::new("v^3", |v| v * v * v));
        let s: Vec<f64> = (0..=2000).map(|k| -10.0 + 0.01 * k as f64).collect();
        assert!(sign_condition_check(&law, 3.0, &s).holds);
    }

    #[test]
    fn report_serialization() {
        let mut r = VerificationReport::new();
        r.push("kind", "test");
        r.push_num("value", 0.5);
        r.fail("something");
        let mut buf = Vec::new();
        r.write_text(&mut buf).unwrap();
        let t = String::from_utf8(buf).unwrap();
        assert!(t.contains("kind: test\nvalue: 5.0000000000000000e-1\npassed: false\nfailure_0: something"));
    }
}
