use crate::analytic::PExponents;
use crate::discretization::AnnulusSamples;
use crate::{Error, Result};

/// Least-squares line `y = a + b x`; `None` when the `x` values have no spread.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(sxx > (1e-12 * scale).powi(2) * n) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Some((intercept, slope, rms))
}

/// Aitken extrapolation of three terms of a geometrically converging
/// sequence; `None` when the second difference vanishes.
fn aitken(m: &[f64]) -> Option<f64> {
    let [a, b, c] = [m[m.len() - 3], m[m.len() - 2], m[m.len() - 1]];
    let d1 = c - b;
    let d0 = b - a;
    let den = d1 - d0;
    let scale = a.abs().max(b.abs()).max(c.abs());
    if den.abs() <= 1e-14 * scale || den == 0.0 {
        return None;
    }
    Some(c - d1 * d1 / den)
}

fn negligible(diffs: &[f64], scale: f64) -> bool {
    diffs.iter().all(|d| d.abs() <= 1e-12 * scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// `v -> b` with `|v - b| ~ c₁ r^e`.
    Limit,
    /// `v ~ c μ_p`.
    Growth,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitStatus {
    Ok,
    /// Data constant to roundoff; no exponent can be fitted.
    Degenerate,
    Undetermined(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub mode: FitMode,
    /// `b̂` (limit mode) or the offset `a` of `a + ĉ μ_p` (growth mode).
    pub limit: f64,
    /// Fitted exponent of `|mean - b̂|` (limit mode only).
    pub exponent: Option<f64>,
    /// `c₁` in limit mode (signed), `ĉ` in growth mode.
    pub prefactor: f64,
    /// RMS regression residual.
    pub residual: f64,
    pub radii: Vec<f64>,
    pub status: FitStatus,
}

fn check_radii(radii: &[f64], min_len: usize) -> Result<()> {
    if radii.len() < min_len {
        return Err(Error::Precondition(format!(
            "need at least {min_len} radii, got {}",
            radii.len()
        )));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("radii must be strictly increasing".into()));
    }
    Ok(())
}

/// Fits circle means to `b + c₁ r^e` (limit mode) or `a + ĉ μ_p` (growth mode).
pub fn decay_fit(samples: &AnnulusSamples, exps: &PExponents, mode: FitMode) -> Result<DecayFit> {
    let radii = &samples.radii;
    check_radii(radii, 4)?;
    if radii[0] < 2.0 {
        return Err(Error::Precondition(format!(
            "decay fits use radii >= 2, got {}",
            radii[0]
        )));
    }
    let m = &samples.means;
    let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let diffs: Vec<f64> = m.windows(2).map(|w| w[1] - w[0]).collect();
    let mut fit = DecayFit {
        mode,
        limit: m[m.len() - 1],
        exponent: None,
        prefactor: 0.0,
        residual: 0.0,
        radii: radii.clone(),
        status: FitStatus::Ok,
    };
    match mode {
        FitMode::Limit => {
            if negligible(&diffs, scale) {
                fit.status = FitStatus::Degenerate;
                return Ok(fit);
            }
            let Some(b) = aitken(m) else {
                fit.status = FitStatus::Undetermined("second differences vanish; no geometric convergence".into());
                return Ok(fit);
            };
            fit.limit = b;
            let dev: Vec<f64> = m.iter().map(|v| v - b).collect();
            let sign = dev[0].signum();
            let monotone =
                dev.iter().all(|d| d.signum() == sign && *d != 0.0) && dev.windows(2).all(|w| w[1].abs() < w[0].abs());
            // radii where the mean already equals b̂ carry no exponent information
            let pts: Vec<(f64, f64)> = radii
                .iter()
                .zip(&dev)
                .filter(|(_, d)| d.abs() > 1e-13 * scale.max(f64::MIN_POSITIVE))
                .map(|(r, d)| (r.ln(), d.abs().ln()))
                .collect();
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            match linear_fit(&x, &y) {
                Some((icpt, slope, rms)) => {
                    fit.exponent = Some(slope);
                    fit.prefactor = sign * icpt.exp();
                    fit.residual = rms;
                    if !monotone {
                        fit.status =
                            FitStatus::Undetermined(format!("deviations from b̂ are not monotone (rms {rms:.3e})"));
                    }
                }
                None => {
                    fit.status = FitStatus::Undetermined("too few non-zero deviations to fit".into());
                }
            }
        }
        FitMode::Growth => {
            let mu: Vec<f64> = radii.iter().map(|&r| exps.mu_unchecked(r)).collect();
            match linear_fit(&mu, m) {
                Some((icpt, slope, rms)) => {
                    fit.limit = icpt;
                    fit.prefactor = slope;
                    fit.residual = rms;
                    let rising = diffs.iter().all(|d| *d > 0.0);
                    let falling = diffs.iter().all(|d| *d < 0.0);
                    if !(rising || falling) {
                        fit.status = FitStatus::Undetermined(format!("means are not monotone in r (rms {rms:.3e})"));
                    }
                }
                None => {
                    fit.status = FitStatus::Undetermined("μ_p has no spread over the radii".into());
                }
            }
        }
    }
    Ok(fit)
}

/// Regresses `v` on `r^{2-d}`: intercept `b̂`, slope `ŵ(0)`.
pub fn kelvin_limit_estimate(radii: &[f64], values: &[f64], d: u32) -> Result<(f64, f64)> {
    if d < 3 {
        return Err(Error::Domain(format!("Kelvin limit estimate needs d >= 3, got {d}")));
    }
    if radii.len() != values.len() || radii.len() < 2 {
        return Err(Error::Precondition("need at least two (r, v) pairs".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Domain("radii must be positive".into()));
    }
    let x: Vec<f64> = radii.iter().map(|r| r.powi(2 - d as i32)).collect();
    let (b, w0, _) = linear_fit(&x, values)
        .ok_or_else(|| Error::Precondition("rank-deficient design: all radii coincide".into()))?;
    Ok((b, w0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichotomyThresholds {
    /// Successive differences must shrink at least by this ratio.
    pub ratio: f64,
    /// Allowed relative spread of `mean / μ_p` over the last three radii.
    pub growth_band: f64,
}

impl Default for DichotomyThresholds {
    fn default() -> Self {
        Self {
            ratio: 0.9,
            growth_band: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DichotomyVerdict {
    ConstantLimit(f64),
    FundamentalGrowth { c: f64, sign: i8 },
    Undetermined(String),
}

impl DichotomyVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            DichotomyVerdict::ConstantLimit(_) => "ConstantLimit",
            DichotomyVerdict::FundamentalGrowth { .. } => "FundamentalGrowth",
            DichotomyVerdict::Undetermined(_) => "Undetermined",
        }
    }
}

fn dyadic(radii: &[f64]) -> bool {
    radii.windows(2).all(|w| (w[1] / w[0] - 2.0).abs() <= 1e-9)
}

/// Decides between a finite limit and `±c μ_p` growth from circle means on
/// at least five dyadic radii.
pub fn classify_dichotomy(
    samples: &AnnulusSamples,
    exps: &PExponents,
    thresholds: DichotomyThresholds,
) -> DichotomyVerdict {
    let radii = &samples.radii;
    let m = &samples.means;
    if radii.len() < 5 || !dyadic(radii) || radii[0] <= 0.0 {
        return DichotomyVerdict::Undetermined(format!("need at least 5 dyadic radii, got {:?}", radii));
    }
    let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let diffs: Vec<f64> = m.windows(2).map(|w| w[1] - w[0]).collect();
    if scale == 0.0 || negligible(&diffs, scale) {
        return DichotomyVerdict::ConstantLimit(m[m.len() - 1]);
    }
    let tail = &diffs[diffs.len() - 3..];
    let geometric = tail
        .windows(2)
        .all(|w| w[0] != 0.0 && w[1].signum() == w[0].signum() && w[1].abs() <= thresholds.ratio * w[0].abs())
        || tail[1..].iter().all(|d| d.abs() <= 1e-12 * scale);
    if geometric {
        let b = aitken(m).unwrap_or(m[m.len() - 1]);
        return DichotomyVerdict::ConstantLimit(b);
    }
    let ratios: Vec<f64> = diffs[diffs.len() - 3..]
        .windows(2)
        .map(|w| w[1].abs() / w[0].abs())
        .collect();
    if exps.is_decaying() {
        return DichotomyVerdict::Undetermined(format!(
            "no geometric convergence (difference ratios {ratios:?}) and growth needs p >= d"
        ));
    }
    let n = radii.len();
    let r3 = &radii[n - 3..];
    let m3 = &m[n - 3..];
    let mu: Vec<f64> = r3.iter().map(|&r| exps.mu_unchecked(r)).collect();
    if mu.iter().any(|v| v.abs() <= 1e-12) {
        return DichotomyVerdict::Undetermined("μ_p vanishes at a sampled radius".into());
    }
    let q: Vec<f64> = m3.iter().zip(&mu).map(|(a, b)| a / b).collect();
    let qbar = q.iter().sum::<f64>() / 3.0;
    let spread = q.iter().fold(0.0_f64, |a, v| a.max((v - qbar).abs())) / qbar.abs();
    if qbar != 0.0 && spread <= thresholds.growth_band {
        if let Some((_, slope, _)) = linear_fit(&mu, m3) {
            if slope != 0.0 && slope.signum() == qbar.signum() {
                return DichotomyVerdict::FundamentalGrowth {
                    c: slope.abs(),
                    sign: slope.signum() as i8,
                };
            }
        }
    }
    DichotomyVerdict::Undetermined(format!(
        "difference ratios {ratios:?}; mean/μ_p over the last radii {q:?}"
    ))
}
