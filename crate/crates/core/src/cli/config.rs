//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::analytic::PExponents;
use crate::discretization::DEFAULT_GRADING;
use crate::energy_solver::{Tolerances, DEFAULT_SCHEDULE};
use crate::radial_bvp::{BoundaryLaw, CustomLaw, FarField, RadialBvp};
use crate::verification::DichotomyThresholds;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    SolveRadial,
    Solve2d,
    VerifyCaccioppoli,
    VerifyDecay,
    Classify,
    OracleCompare,
    Constants,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::SolveRadial,
        ExperimentKind::Solve2d,
        ExperimentKind::VerifyCaccioppoli,
        ExperimentKind::VerifyDecay,
        ExperimentKind::Classify,
        ExperimentKind::OracleCompare,
        ExperimentKind::Constants,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SolveRadial => "solve-radial",
            ExperimentKind::Solve2d => "solve-2d",
            ExperimentKind::VerifyCaccioppoli => "verify-caccioppoli",
            ExperimentKind::VerifyDecay => "verify-decay",
            ExperimentKind::Classify => "classify",
            ExperimentKind::OracleCompare => "oracle-compare",
            ExperimentKind::Constants => "constants",
        }
    }

    /// CLI verb that runs this kind.
    pub fn verb(&self) -> &'static str {
        match self {
            ExperimentKind::SolveRadial | ExperimentKind::Solve2d => "solve",
            ExperimentKind::VerifyCaccioppoli | ExperimentKind::VerifyDecay => "verify",
            ExperimentKind::Classify => "classify",
            ExperimentKind::OracleCompare => "oracle",
            ExperimentKind::Constants => "constants",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn solves(&self) -> bool {
        !matches!(self, ExperimentKind::Constants | ExperimentKind::OracleCompare)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Radial,
    Annulus,
}

impl MeshKind {
    fn name(&self) -> &'static str {
        match self {
            MeshKind::Radial => "radial",
            MeshKind::Annulus => "annulus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub mesh: MeshKind,
    pub r_in: f64,
    pub r_out: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub grading: f64,
}

/// Law on the hole boundary outside the optional Dirichlet arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerLaw {
    Dirichlet(f64),
    Neumann,
    Robin {
        alpha: f64,
    },
    /// `h(v) = coeff |v|^{power-1} v`.
    Power {
        coeff: f64,
        power: f64,
    },
}

impl InnerLaw {
    pub fn law(&self) -> BoundaryLaw {
        match *self {
            InnerLaw::Dirichlet(g) => BoundaryLaw::DirichletValue(g),
            InnerLaw::Neumann => BoundaryLaw::NeumannZero,
            InnerLaw::Robin { alpha } => BoundaryLaw::RobinPower { alpha },
            InnerLaw::Power { coeff, power } => BoundaryLaw::CustomMonotone(CustomLaw::signed_power(coeff, power)),
        }
    }
}

/// Dirichlet data on the arc `start <= θ <= end` of the hole boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletArc {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

/// Data imposed on the truncation circle `|x| = r_out`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// The far-field value (`b`, the outer value, or `offset + c μ_p(R)`).
    Value,
    /// The exact radial solution evaluated at `R`.
    Matched,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub schedule: Vec<f64>,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BChoice {
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldChoice {
    Solution,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expectation {
    Constant,
    Growth,
    Exponent(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub radii: Vec<f64>,
    pub b: BChoice,
    pub field: FieldChoice,
    pub samples_per_circle: usize,
    pub thresholds: DichotomyThresholds,
    pub expect: Option<Expectation>,
    /// Tolerance for `expect` (exponent or fitted limit).
    pub tolerance: f64,
    /// Upper bound on the solution max-norm, checked when set.
    pub max_norm: Option<f64>,
    /// `M` in the sup-norm bound reported by `constants`.
    pub sup_norm: Option<f64>,
    pub oracle_tol: f64,
    pub solver_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub exps: PExponents,
    pub geometry: Geometry,
    pub inner: InnerLaw,
    pub gamma1: Option<DirichletArc>,
    pub far: FarField,
    pub far_offset: f64,
    pub truncation: Truncation,
    pub solver: SolverConfig,
    pub verify: VerifyConfig,
    pub output_dir: Option<PathBuf>,
}

/// Every problem found in a configuration text.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl From<ConfigErrors> for crate::Error {
    fn from(e: ConfigErrors) -> Self {
        crate::Error::Config(e.0.join("; "))
    }
}

const KNOWN_KEYS: &[&str] = &[
    "kind",
    "exps.p",
    "exps.d",
    "geometry.mesh",
    "geometry.r_in",
    "geometry.r_out",
    "geometry.n_r",
    "geometry.n_theta",
    "geometry.grading",
    "inner.law",
    "inner.value",
    "inner.alpha",
    "inner.coeff",
    "inner.power",
    "gamma1.arc",
    "gamma1.value",
    "far.kind",
    "far.value",
    "far.radius",
    "far.offset",
    "far.truncation",
    "solver.epsilon",
    "solver.schedule",
    "solver.tol_grad",
    "solver.tol_step",
    "solver.max_iter",
    "verify.radii",
    "verify.b",
    "verify.field",
    "verify.samples_per_circle",
    "verify.ratio_threshold",
    "verify.growth_band",
    "verify.expect",
    "verify.tolerance",
    "verify.max_norm",
    "verify.sup_norm",
    "verify.oracle_tol",
    "verify.solver_tol",
    "output.dir",
];

struct Table {
    values: BTreeMap<String, (usize, String)>,
    errors: Vec<String>,
}

impl Table {
    fn parse(text: &str) -> Self {
        let mut t = Table {
            values: BTreeMap::new(),
            errors: Vec::new(),
        };
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                t.errors
                    .push(format!("line {line_no}: expected `key = value`, got `{line}`"));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                t.errors.push(format!("line {line_no}: unknown key `{key}`"));
                continue;
            }
            if value.is_empty() {
                t.errors.push(format!("line {line_no}: `{key}` has no value"));
                continue;
            }
            if let Some((first, _)) = t.values.get(key) {
                t.errors
                    .push(format!("line {line_no}: `{key}` already set on line {first}"));
                continue;
            }
            t.values.insert(key.to_string(), (line_no, value.to_string()));
        }
        t
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(_, v)| v.as_str())
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn get<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let (line, v) = self.values.get(key)?.clone();
        match v.parse::<T>() {
            Ok(x) => Some(x),
            Err(_) => {
                self.errors
                    .push(format!("line {line}: `{key}` must be {what}, got `{v}`"));
                None
            }
        }
    }

    fn num(&mut self, key: &str) -> Option<f64> {
        let x: f64 = self.get(key, "a number")?;
        if x.is_finite() {
            Some(x)
        } else {
            self.errors.push(format!("`{key}` must be finite, got {x}"));
            None
        }
    }

    fn count(&mut self, key: &str) -> Option<usize> {
        self.get(key, "a non-negative integer")
    }

    fn list(&mut self, key: &str) -> Option<Vec<f64>> {
        let (line, v) = self.values.get(key)?.clone();
        let parsed: Result<Vec<f64>, _> = v.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(xs) if xs.iter().all(|x| x.is_finite()) => Some(xs),
            _ => {
                self.errors.push(format!(
                    "line {line}: `{key}` must be a comma-separated list of numbers, got `{v}`"
                ));
                None
            }
        }
    }

    fn require(&mut self, key: &str) -> bool {
        if self.has(key) {
            true
        } else {
            self.errors.push(format!("missing required key `{key}`"));
            false
        }
    }

    fn reject_unused(&mut self, key: &str, reason: &str) {
        if let Some((line, _)) = self.values.get(key) {
            self.errors.push(format!("line {line}: `{key}` is not used {reason}"));
        }
    }

    fn fail(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }
}

/// `2^k r_in` for `k >= 1` up to `limit`.
fn dyadic_radii(r_in: f64, limit: f64) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut r = 2.0 * r_in;
    while r <= limit * (1.0 + 1e-12) {
        radii.push(r);
        r *= 2.0;
    }
    radii
}

/// Parses and validates a configuration. Every problem is reported, and all
/// preconditions of the modules the run will call are checked here.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut t = Table::parse(text);

    let kind = if t.require("kind") {
        let k = t.raw("kind").unwrap().to_string();
        let parsed = ExperimentKind::parse(&k);
        if parsed.is_none() {
            let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            t.fail(format!("unknown kind `{k}` (expected one of {})", names.join(", ")));
        }
        parsed
    } else {
        None
    };

    t.require("exps.p");
    let p = t.num("exps.p");
    let d: Option<u32> = if t.has("exps.d") {
        t.get("exps.d", "an integer >= 2")
    } else {
        Some(2)
    };
    let exps = match (p, d) {
        (Some(p), Some(d)) => match PExponents::new(p, d) {
            Ok(e) => Some(e),
            Err(e) => {
                t.fail(e.to_string());
                None
            }
        },
        _ => None,
    };

    t.require("geometry.r_in");
    let r_in = t.num("geometry.r_in");
    let mesh = match t.raw("geometry.mesh").map(str::to_string) {
        None => match kind {
            Some(ExperimentKind::Solve2d) => Some(MeshKind::Annulus),
            Some(ExperimentKind::SolveRadial) => Some(MeshKind::Radial),
            _ => Some(if d == Some(2) {
                MeshKind::Annulus
            } else {
                MeshKind::Radial
            }),
        },
        Some(m) => match m.as_str() {
            "radial" => Some(MeshKind::Radial),
            "annulus" => Some(MeshKind::Annulus),
            _ => {
                t.fail(format!("`geometry.mesh` must be radial or annulus, got `{m}`"));
                None
            }
        },
    };
    match (kind, mesh) {
        (Some(ExperimentKind::Solve2d), Some(MeshKind::Radial)) => t.fail("solve-2d needs geometry.mesh = annulus"),
        (Some(ExperimentKind::SolveRadial), Some(MeshKind::Annulus)) => {
            t.fail("solve-radial needs geometry.mesh = radial")
        }
        _ => {}
    }
    if mesh == Some(MeshKind::Annulus) && d.is_some_and(|d| d != 2) {
        t.fail(format!(
            "the annulus mesh is planar; exps.d = {} needs geometry.mesh = radial",
            d.unwrap()
        ));
    }
    let annulus = mesh == Some(MeshKind::Annulus);

    // far field before geometry: an outer Dirichlet radius doubles as R
    let far_kind = t.raw("far.kind").unwrap_or("limit").to_string();
    let far_value = t.num("far.value");
    let far_radius = t.num("far.radius");
    let far_offset = t.num("far.offset");
    if far_offset.is_some() && far_kind != "growth" {
        t.fail("`far.offset` only applies to far.kind = growth");
    }
    if far_radius.is_some() && far_kind != "outer-dirichlet" {
        t.fail("`far.radius` only applies to far.kind = outer-dirichlet");
    }

    let r_out = match (t.num("geometry.r_out"), far_radius) {
        (Some(r), Some(fr)) if (r - fr).abs() > 1e-12 * r.abs() => {
            t.fail(format!("far.radius = {fr} differs from geometry.r_out = {r}"));
            None
        }
        (Some(r), _) | (None, Some(r)) => Some(r),
        (None, None) => r_in.map(|r| 16.0 * r),
    };
    let n_r = if t.has("geometry.n_r") {
        t.count("geometry.n_r")
    } else {
        Some(if annulus { 33 } else { 400 })
    };
    let n_theta = if t.has("geometry.n_theta") {
        t.count("geometry.n_theta")
    } else {
        Some(64)
    };
    if !annulus {
        t.reject_unused("geometry.n_theta", "by the radial mesh");
    }
    // radial grids default to spacing proportional to r
    let grading = match (t.has("geometry.grading"), annulus, r_in, r_out, n_r) {
        (true, _, _, _, _) => t.num("geometry.grading"),
        (false, false, Some(a), Some(b), Some(n)) if a > 0.0 && b > a && n >= 3 => {
            Some((b / a).powf(1.0 / (n - 2) as f64))
        }
        _ => Some(DEFAULT_GRADING),
    };

    if let Some(r) = r_in {
        if !(r > 0.0) {
            t.fail(format!("geometry.r_in must be positive, got {r}"));
        }
    }
    if let (Some(a), Some(b)) = (r_in, r_out) {
        if !(b > a) {
            t.fail(format!("geometry.r_out = {b} must exceed geometry.r_in = {a}"));
        }
    }
    let min_nr = if annulus { 2 } else { 3 };
    if let Some(n) = n_r {
        if n < min_nr {
            t.fail(format!("geometry.n_r must be at least {min_nr}, got {n}"));
        }
    }
    if let Some(n) = n_theta {
        if annulus && n < 8 {
            t.fail(format!("geometry.n_theta must be at least 8, got {n}"));
        }
    }
    if let Some(g) = grading {
        if !(g >= 1.0) {
            t.fail(format!("geometry.grading must be >= 1, got {g}"));
        } else if let (Some(a), Some(b), Some(n)) = (r_in, r_out, n_r) {
            let total: f64 = (0..n.saturating_sub(1)).map(|k| g.powi(k as i32)).sum();
            let h0 = (b - a) / total;
            if b > a && n >= 2 && !(h0 > 1e-10 * b) {
                t.fail(format!(
                    "geometry.grading = {g} with n_r = {n} makes the first radial spacing {h0:e}"
                ));
            }
        }
    }

    // hole boundary
    let law_name = t.raw("inner.law").unwrap_or("neumann").to_string();
    let inner = match law_name.as_str() {
        "dirichlet" => {
            t.require("inner.value");
            t.num("inner.value").map(InnerLaw::Dirichlet)
        }
        "neumann" => Some(InnerLaw::Neumann),
        "robin" => {
            t.require("inner.alpha");
            t.num("inner.alpha").map(|alpha| InnerLaw::Robin { alpha })
        }
        "power" => {
            t.require("inner.coeff");
            t.require("inner.power");
            match (t.num("inner.coeff"), t.num("inner.power")) {
                (Some(coeff), Some(power)) => {
                    if !(power > 0.0) {
                        t.fail(format!("inner.power must be positive, got {power}"));
                    }
                    Some(InnerLaw::Power { coeff, power })
                }
                _ => None,
            }
        }
        other => {
            t.fail(format!(
                "`inner.law` must be dirichlet, neumann, robin or power, got `{other}`"
            ));
            None
        }
    };
    for (key, law) in [
        ("inner.value", "dirichlet"),
        ("inner.alpha", "robin"),
        ("inner.coeff", "power"),
        ("inner.power", "power"),
    ] {
        if law_name != law {
            t.reject_unused(key, &format!("by inner.law = {law_name}"));
        }
    }
    if let (Some(inner), Some(e)) = (inner, exps) {
        // the sign condition h(v)v >= 0 is enforced by the law itself
        if let Err(err) = inner.law().validate(e.p()) {
            t.fail(format!("inner law: {err}"));
        }
    }

    let gamma1 = match (t.raw("gamma1.arc").map(str::to_string), t.has("gamma1.value")) {
        (None, false) => None,
        (None, true) => {
            t.fail("`gamma1.value` needs `gamma1.arc`");
            None
        }
        (Some(_), has_value) => {
            if !has_value {
                t.fail("`gamma1.arc` needs `gamma1.value`");
            }
            let arc = t.list("gamma1.arc");
            let value = t.num("gamma1.value");
            match (arc, value) {
                (Some(a), Some(value)) if a.len() == 2 => {
                    if !(a[1] > a[0]) || a[1] - a[0] >= std::f64::consts::TAU {
                        t.fail(format!("gamma1.arc must satisfy start < end < start + 2π, got {:?}", a));
                    }
                    Some(DirichletArc {
                        start: a[0],
                        end: a[1],
                        value,
                    })
                }
                (Some(a), _) => {
                    t.fail(format!("gamma1.arc needs exactly two angles, got {}", a.len()));
                    None
                }
                _ => None,
            }
        }
    };
    if gamma1.is_some() {
        if !annulus {
            t.fail("a Dirichlet arc needs the annulus mesh");
        }
        if matches!(inner, Some(InnerLaw::Dirichlet(_))) {
            t.fail("a Dirichlet arc needs a non-Dirichlet inner.law on the rest of the hole");
        }
    }

    let far = match far_kind.as_str() {
        "limit" => Some(FarField::Limit(far_value.unwrap_or(0.0))),
        "outer-dirichlet" => {
            t.require("far.value");
            match (far_value, r_out) {
                (Some(value), Some(radius)) => Some(FarField::OuterDirichlet { radius, value }),
                _ => None,
            }
        }
        "growth" => {
            t.require("far.value");
            far_value.map(FarField::GrowthCoefficient)
        }
        other => {
            t.fail(format!(
                "`far.kind` must be limit, outer-dirichlet or growth, got `{other}`"
            ));
            None
        }
    };

    let truncation = match t.raw("far.truncation") {
        None if far_kind == "growth" && gamma1.is_none() => Truncation::Matched,
        None => Truncation::Value,
        Some("value") => Truncation::Value,
        Some("matched") => {
            if gamma1.is_some() {
                t.fail("far.truncation = matched needs a radial problem (no gamma1 arc)");
            }
            Truncation::Matched
        }
        Some(other) => {
            let other = other.to_string();
            t.fail(format!("`far.truncation` must be value or matched, got `{other}`"));
            Truncation::Value
        }
    };

    // the radial problem must be well posed whenever its closed form is used
    if let (Some(r_in), Some(inner), Some(far), Some(e)) = (r_in, inner, far, exps) {
        if r_in > 0.0 {
            if let Err(err) = RadialBvp::new(r_in, inner.law(), far, e) {
                t.fail(format!("boundary-value problem: {err}"));
            }
        }
    }
    if kind == Some(ExperimentKind::OracleCompare) && gamma1.is_some() {
        t.fail("oracle-compare needs a radial problem (no gamma1 arc)");
    }

    // solver
    let epsilon = t.num("solver.epsilon");
    let schedule = match (t.list("solver.schedule"), epsilon) {
        (Some(s), eps) => {
            if s.is_empty() || s.iter().any(|e| !(*e > 0.0)) {
                t.fail("solver.schedule must list positive values");
            } else if s.windows(2).any(|w| w[1] > w[0]) {
                t.fail("solver.schedule must be non-increasing");
            } else if let Some(eps) = eps {
                if *s.last().unwrap() != eps {
                    t.fail(format!("solver.schedule must end at solver.epsilon = {eps}"));
                }
            }
            s
        }
        (None, Some(eps)) => {
            if !(eps > 0.0) {
                t.fail(format!("solver.epsilon must be positive, got {eps}"));
            }
            let mut s: Vec<f64> = DEFAULT_SCHEDULE.iter().copied().filter(|&e| e > eps).collect();
            s.push(eps);
            s
        }
        (None, None) => DEFAULT_SCHEDULE.to_vec(),
    };
    let defaults = Tolerances::default();
    let tolerances = Tolerances {
        grad: if t.has("solver.tol_grad") {
            t.num("solver.tol_grad").unwrap_or(defaults.grad)
        } else {
            defaults.grad
        },
        step: if t.has("solver.tol_step") {
            t.num("solver.tol_step").unwrap_or(defaults.step)
        } else {
            defaults.step
        },
        max_iter: if t.has("solver.max_iter") {
            t.count("solver.max_iter").unwrap_or(defaults.max_iter)
        } else {
            defaults.max_iter
        },
    };
    if !(tolerances.grad > 0.0) {
        t.fail(format!("solver.tol_grad must be positive, got {}", tolerances.grad));
    }
    if !(tolerances.step >= 0.0) {
        t.fail(format!("solver.tol_step must be >= 0, got {}", tolerances.step));
    }
    if tolerances.max_iter == 0 {
        t.fail("solver.max_iter must be at least 1");
    }

    // verification
    let r_lo = r_in.unwrap_or(1.0);
    let r_hi = r_out.unwrap_or(16.0 * r_lo);
    let needs_ball = kind == Some(ExperimentKind::VerifyCaccioppoli);
    let radii = match t.list("verify.radii") {
        Some(r) => r,
        None if needs_ball => dyadic_radii(r_lo, r_hi / 2.0),
        None => dyadic_radii(r_lo, r_hi),
    };
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        t.fail(format!("verify.radii must be strictly increasing, got {radii:?}"));
    }
    match kind {
        Some(ExperimentKind::VerifyCaccioppoli) => {
            if radii.is_empty() {
                t.fail(format!("no cutoff radius r with r_in <= r and 2r <= R = {r_hi}"));
            }
            for &r in &radii {
                if r < r_lo || 2.0 * r > r_hi * (1.0 + 1e-12) {
                    t.fail(format!("cutoff radius {r} needs r_in <= r and 2r <= R = {r_hi}"));
                }
            }
        }
        Some(ExperimentKind::VerifyDecay) | Some(ExperimentKind::Classify) => {
            let need = if kind == Some(ExperimentKind::Classify) { 5 } else { 4 };
            if radii.len() < need {
                t.fail(format!(
                    "{} needs at least {need} radii, got {}",
                    kind.unwrap().name(),
                    radii.len()
                ));
            }
            if radii.first().is_some_and(|&r| r < 2.0) {
                t.fail(format!("decay fits use radii >= 2, got {}", radii[0]));
            }
            for &r in &radii {
                if r < r_lo || r > r_hi * (1.0 + 1e-12) {
                    t.fail(format!("sample radius {r} lies outside [{r_lo}, {r_hi}]"));
                }
            }
        }
        Some(ExperimentKind::Constants) if radii.iter().any(|r| !(*r > 0.0)) => {
            t.fail("verify.radii must be positive");
        }
        _ => {}
    }

    let b = match t.raw("verify.b").map(str::to_string) {
        None => BChoice::Auto,
        Some(s) if s == "auto" => BChoice::Auto,
        Some(_) => t.num("verify.b").map(BChoice::Value).unwrap_or(BChoice::Auto),
    };
    let field = match t.raw("verify.field") {
        None | Some("solution") => FieldChoice::Solution,
        Some("closed-form") => FieldChoice::ClosedForm,
        Some(other) => {
            let other = other.to_string();
            t.fail(format!("`verify.field` must be solution or closed-form, got `{other}`"));
            FieldChoice::Solution
        }
    };
    if field == FieldChoice::ClosedForm && gamma1.is_some() {
        t.fail("verify.field = closed-form needs a radial problem (no gamma1 arc)");
    }
    let samples_per_circle = if t.has("verify.samples_per_circle") {
        t.count("verify.samples_per_circle").unwrap_or(1)
    } else {
        64
    };
    if samples_per_circle == 0 {
        t.fail("verify.samples_per_circle must be at least 1");
    }
    let mut thresholds = DichotomyThresholds::default();
    if let Some(r) = t.num("verify.ratio_threshold") {
        if !(r > 0.0 && r < 1.0) {
            t.fail(format!("verify.ratio_threshold must lie in (0, 1), got {r}"));
        }
        thresholds.ratio = r;
    }
    if let Some(g) = t.num("verify.growth_band") {
        if !(g > 0.0) {
            t.fail(format!("verify.growth_band must be positive, got {g}"));
        }
        thresholds.growth_band = g;
    }
    let expect = match t.raw("verify.expect").map(str::to_string) {
        None => None,
        Some(s) => match (kind, s.as_str()) {
            (Some(ExperimentKind::Classify), "constant") => Some(Expectation::Constant),
            (Some(ExperimentKind::Classify), "growth") => Some(Expectation::Growth),
            (Some(ExperimentKind::VerifyDecay), _) => t.num("verify.expect").map(Expectation::Exponent),
            (Some(ExperimentKind::Classify), _) => {
                t.fail(format!(
                    "`verify.expect` must be constant or growth for classify, got `{s}`"
                ));
                None
            }
            _ => {
                t.fail("`verify.expect` only applies to classify and verify-decay");
                None
            }
        },
    };
    let positive = |t: &mut Table, key: &str, default: f64| -> f64 {
        match t.num(key) {
            Some(x) if x > 0.0 => x,
            Some(x) => {
                t.fail(format!("`{key}` must be positive, got {x}"));
                default
            }
            None => default,
        }
    };
    let tolerance = positive(&mut t, "verify.tolerance", 0.05);
    let max_norm = t
        .has("verify.max_norm")
        .then(|| positive(&mut t, "verify.max_norm", 1.0));
    let sup_norm = t.num("verify.sup_norm");
    if let Some(m) = sup_norm {
        if !(m >= 0.0) {
            t.fail(format!("verify.sup_norm must be >= 0, got {m}"));
        }
    }
    let oracle_tol = positive(&mut t, "verify.oracle_tol", 1e-8);
    let solver_tol = positive(&mut t, "verify.solver_tol", 1e-2);
    if max_norm.is_some() && !kind.is_some_and(|k| k.solves()) {
        t.fail("`verify.max_norm` needs a kind that solves the problem");
    }

    let output_dir = t.raw("output.dir").map(PathBuf::from);

    if !t.errors.is_empty() {
        return Err(ConfigErrors(t.errors));
    }
    Ok(RunConfig {
        kind: kind.unwrap(),
        exps: exps.unwrap(),
        geometry: Geometry {
            mesh: mesh.unwrap(),
            r_in: r_in.unwrap(),
            r_out: r_out.unwrap(),
            n_r: n_r.unwrap(),
            n_theta: n_theta.unwrap(),
            grading: grading.unwrap(),
        },
        inner: inner.unwrap(),
        gamma1,
        far: far.unwrap(),
        far_offset: far_offset.unwrap_or(0.0),
        truncation,
        solver: SolverConfig { schedule, tolerances },
        verify: VerifyConfig {
            radii,
            b,
            field,
            samples_per_circle,
            thresholds,
            expect,
            tolerance,
            max_norm,
            sup_norm,
            oracle_tol,
            solver_tol,
        },
        output_dir,
    })
}

fn list_text(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// The fully resolved configuration in the input format; parsing it
    /// gives back the same configuration.
    pub fn to_text(&self) -> String {
        let g = &self.geometry;
        let v = &self.verify;
        let mut lines: Vec<(String, String)> = vec![
            ("kind".into(), self.kind.name().into()),
            ("exps.p".into(), self.exps.p().to_string()),
            ("exps.d".into(), self.exps.d().to_string()),
            ("geometry.mesh".into(), g.mesh.name().into()),
            ("geometry.r_in".into(), g.r_in.to_string()),
            ("geometry.r_out".into(), g.r_out.to_string()),
            ("geometry.n_r".into(), g.n_r.to_string()),
        ];
        if g.mesh == MeshKind::Annulus {
            lines.push(("geometry.n_theta".into(), g.n_theta.to_string()));
        }
        lines.push(("geometry.grading".into(), g.grading.to_string()));
        match self.inner {
            InnerLaw::Dirichlet(x) => {
                lines.push(("inner.law".into(), "dirichlet".into()));
                lines.push(("inner.value".into(), x.to_string()));
            }
            InnerLaw::Neumann => lines.push(("inner.law".into(), "neumann".into())),
            InnerLaw::Robin { alpha } => {
                lines.push(("inner.law".into(), "robin".into()));
                lines.push(("inner.alpha".into(), alpha.to_string()));
            }
            InnerLaw::Power { coeff, power } => {
                lines.push(("inner.law".into(), "power".into()));
                lines.push(("inner.coeff".into(), coeff.to_string()));
                lines.push(("inner.power".into(), power.to_string()));
            }
        }
        if let Some(a) = self.gamma1 {
            lines.push(("gamma1.arc".into(), list_text(&[a.start, a.end])));
            lines.push(("gamma1.value".into(), a.value.to_string()));
        }
        match self.far {
            FarField::Limit(b) => {
                lines.push(("far.kind".into(), "limit".into()));
                lines.push(("far.value".into(), b.to_string()));
            }
            FarField::OuterDirichlet { radius, value } => {
                lines.push(("far.kind".into(), "outer-dirichlet".into()));
                lines.push(("far.value".into(), value.to_string()));
                lines.push(("far.radius".into(), radius.to_string()));
            }
            FarField::GrowthCoefficient(c) => {
                lines.push(("far.kind".into(), "growth".into()));
                lines.push(("far.value".into(), c.to_string()));
                lines.push(("far.offset".into(), self.far_offset.to_string()));
            }
        }
        let trunc = match self.truncation {
            Truncation::Value => "value",
            Truncation::Matched => "matched",
        };
        lines.push(("far.truncation".into(), trunc.into()));
        lines.push(("solver.schedule".into(), list_text(&self.solver.schedule)));
        let tol = self.solver.tolerances;
        lines.push(("solver.tol_grad".into(), tol.grad.to_string()));
        lines.push(("solver.tol_step".into(), tol.step.to_string()));
        lines.push(("solver.max_iter".into(), tol.max_iter.to_string()));
        lines.push(("verify.radii".into(), list_text(&v.radii)));
        let b = match v.b {
            BChoice::Auto => "auto".to_string(),
            BChoice::Value(b) => b.to_string(),
        };
        lines.push(("verify.b".into(), b));
        let field = match v.field {
            FieldChoice::Solution => "solution",
            FieldChoice::ClosedForm => "closed-form",
        };
        lines.push(("verify.field".into(), field.into()));
        lines.push(("verify.samples_per_circle".into(), v.samples_per_circle.to_string()));
        lines.push(("verify.ratio_threshold".into(), v.thresholds.ratio.to_string()));
        lines.push(("verify.growth_band".into(), v.thresholds.growth_band.to_string()));
        if let Some(e) = v.expect {
            let s = match e {
                Expectation::Constant => "constant".to_string(),
                Expectation::Growth => "growth".to_string(),
                Expectation::Exponent(x) => x.to_string(),
            };
            lines.push(("verify.expect".into(), s));
        }
        lines.push(("verify.tolerance".into(), v.tolerance.to_string()));
        if let Some(m) = v.max_norm {
            lines.push(("verify.max_norm".into(), m.to_string()));
        }
        if let Some(m) = v.sup_norm {
            lines.push(("verify.sup_norm".into(), m.to_string()));
        }
        lines.push(("verify.oracle_tol".into(), v.oracle_tol.to_string()));
        lines.push(("verify.solver_tol".into(), v.solver_tol.to_string()));
        if let Some(dir) = &self.output_dir {
            lines.push(("output.dir".into(), dir.display().to_string()));
        }
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
kind = solve-radial
exps.p = 2
exps.d = 3
geometry.r_in = 1
inner.law = robin
inner.alpha = 1
far.kind = limit
far.value = 0
";

    #[test]
    fn minimal_radial_config_is_valid() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.kind, ExperimentKind::SolveRadial);
        assert_eq!(c.geometry.mesh, MeshKind::Radial);
        assert_eq!(c.geometry.r_out, 16.0);
        assert!((c.geometry.grading.powi(398) - 16.0).abs() < 1e-9);
        assert_eq!(c.inner, InnerLaw::Robin { alpha: 1.0 });
        assert_eq!(c.far, FarField::Limit(0.0));
        assert_eq!(c.solver.schedule, DEFAULT_SCHEDULE.to_vec());
        assert_eq!(c.solver.tolerances, Tolerances::default());
    }

    #[test]
    fn negative_robin_coefficient_cites_sign_condition() {
        let text = MINIMAL.replace("inner.alpha = 1", "inner.alpha = -1");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.iter().any(|e| e.contains("h(v)v >= 0")), "{err}");
    }

    #[test]
    fn p_equal_one_is_rejected() {
        let text = MINIMAL.replace("exps.p = 2", "exps.p = 1");
        let err = parse_config(&text).unwrap_err();
        assert!(
            err.0.iter().any(|e| e.contains("p > 1") || e.contains("p must")),
            "{err}"
        );
    }

    #[test]
    fn all_errors_are_reported() {
        let text = "kind = nonsense\nexps.p = abc\ncolour = blue\ngeometry.r_in = -1\nbroken line\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.0.len() >= 5, "{err}");
        assert!(err.0.iter().any(|e| e.contains("unknown key `colour`")));
        assert!(err.0.iter().any(|e| e.contains("unknown kind")));
        assert!(err.0.iter().any(|e| e.contains("expected `key = value`")));
    }

    #[test]
    fn duplicate_and_unused_keys_are_rejected() {
        let text = format!("{MINIMAL}exps.p = 3\ninner.value = 2\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.iter().any(|e| e.contains("already set")));
        assert!(err.0.iter().any(|e| e.contains("`inner.value` is not used")));
    }

    #[test]
    fn resolved_text_round_trips() {
        let text = "\
kind = verify-caccioppoli  # trailing comment
exps.p = 3
geometry.r_in = 1
geometry.r_out = 16
geometry.n_r = 17
geometry.n_theta = 32
inner.law = neumann
gamma1.arc = 0, 1.5
gamma1.value = 0
far.kind = limit
far.value = 5
solver.epsilon = 1e-4
";
        let c = parse_config(text).unwrap();
        assert_eq!(c.verify.radii, vec![2.0, 4.0, 8.0]);
        assert_eq!(c.solver.schedule, vec![0.1, 1e-3, 1e-4]);
        let again = parse_config(&c.to_text()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn growth_needs_p_at_least_d() {
        let text = MINIMAL.replace("far.kind = limit", "far.kind = growth");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.iter().any(|e| e.contains("p >= d")), "{err}");
    }

    #[test]
    fn cutoff_radii_must_fit_inside_the_truncation() {
        let text =
            "kind = verify-caccioppoli\nexps.p = 2\ngeometry.r_in = 1\ngeometry.r_out = 10\nverify.radii = 2,4,8\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.0.iter().any(|e| e.contains("cutoff radius 8")), "{err}");
    }
}
