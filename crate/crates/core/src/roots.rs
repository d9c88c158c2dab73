//! Safeguarded scalar root finding for monotone equations.

use crate::{Error, Result};

/// Bisection stops once the bracket is narrower than this, relative to the
/// larger endpoint magnitude.
pub(crate) const BRACKET_WIDTH: f64 = 1e-13;

/// Newton polish is skipped for iterates this close to zero when `Φ'` is
/// singular there (`p < 2`).
pub(crate) const SINGULAR_POLISH_GUARD: f64 = 1e-8;

pub(crate) struct RootOptions {
    /// Skip the Newton polish near zero.
    pub singular_at_zero: bool,
}

/// Finds the root of a strictly monotone `f`.
///
/// The bracket is grown geometrically around `guess` until the signs differ,
/// bisected to width [`BRACKET_WIDTH`], then polished with secant-free Newton
/// steps using a central-difference slope. Polish steps are kept only when
/// they stay inside the bracket and reduce `|f|`.
pub(crate) fn monotone_root<F>(f: F, guess: f64, scale: f64, opts: RootOptions) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let f0 = f(guess);
    if f0 == 0.0 {
        return Ok(guess);
    }
    let mut lo = guess - scale;
    let mut hi = guess + scale;
    let mut flo = f(lo);
    let mut fhi = f(hi);
    let mut step = scale;
    let mut grown = 0;
    while flo.signum() == fhi.signum() && flo != 0.0 && fhi != 0.0 {
        grown += 1;
        if grown > 200 || !flo.is_finite() || !fhi.is_finite() {
            return Err(Error::Solver(format!(
                "no sign change in [{lo:.6e}, {hi:.6e}] (f = {flo:.6e}, {fhi:.6e}) after {grown} expansions"
            )));
        }
        step *= 2.0;
        lo = guess - step;
        hi = guess + step;
        flo = f(lo);
        fhi = f(hi);
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    let increasing = fhi > flo;
    for _ in 0..2200 {
        let width = hi - lo;
        if width <= BRACKET_WIDTH * lo.abs().max(hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x);
    let (blo, bhi) = (lo - (hi - lo), hi + (hi - lo));
    for _ in 0..3 {
        if fx == 0.0 || (opts.singular_at_zero && x.abs() < SINGULAR_POLISH_GUARD) {
            break;
        }
        let h = 1e-7 * x.abs().max(1e-7);
        let slope = (f(x + h) - f(x - h)) / (2.0 * h);
        if !(slope.is_finite()) || slope == 0.0 {
            break;
        }
        let candidate = x - fx / slope;
        if !(candidate >= blo && candidate <= bhi) {
            break;
        }
        let fc = f(candidate);
        if fc.abs() < fx.abs() {
            x = candidate;
            fx = fc;
        } else {
            break;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPTS: RootOptions = RootOptions {
        singular_at_zero: false,
    };

    #[test]
    fn finds_cubic_root() {
        let r = monotone_root(|x| x * x * x - 8.0, 0.0, 1.0, OPTS).unwrap();
        assert!((r - 2.0).abs() < 1e-13);
    }

    #[test]
    fn decreasing_function() {
        let r = monotone_root(|x| 3.0 - x, 100.0, 0.5, OPTS).unwrap();
        assert!((r - 3.0).abs() < 1e-12);
    }

    #[test]
    fn reports_missing_sign_change() {
        let e = monotone_root(|x| x.atan() + 5.0, 0.0, 1.0, OPTS).unwrap_err();
        assert!(matches!(e, Error::Solver(_)));
    }

    #[test]
    fn root_at_zero_for_degenerate_slope() {
        // Φ-type function with p = 1.5: slope unbounded at 0
        let r = monotone_root(
            |x| x.abs().sqrt().copysign(x) + x,
            0.3,
            1.0,
            RootOptions { singular_at_zero: true },
        )
        .unwrap();
        assert!(r.abs() < 1e-12);
    }
}
