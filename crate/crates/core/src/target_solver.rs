//! Growth objectives: compound-growth arithmetic, catch-up problems and the
//! bracketed root finder that backs them.
//!
//! Growth is discrete and annual: `FV = PV (1 + g)^N`. Horizons are real
//! valued; rounding up to whole planning years is left to the caller.

use serde::{Deserialize, Serialize};

use crate::error::{BgaError, Result};

/// Iteration cap for [`solve_rate_numeric`].
pub const MAX_ROOT_ITERATIONS: usize = 200;

/// Residual tolerance of [`solve_rate_numeric`], relative to the larger of
/// `|f|` at the bracket ends.
pub const ROOT_RELATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetKind {
    Multiple,
    CatchUp,
    ExplicitRate,
}

/// A rival to catch: both firms' current levels and expected growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatchupProblem {
    pub follower_level: f64,
    pub leader_level: f64,
    pub leader_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub follower_rate: Option<f64>,
}

impl CatchupProblem {
    pub fn new(follower_level: f64, leader_level: f64, leader_rate: f64) -> Self {
        CatchupProblem {
            follower_level,
            leader_level,
            leader_rate,
            follower_rate: None,
        }
    }

    pub fn with_follower_rate(mut self, rate: f64) -> Self {
        self.follower_rate = Some(rate);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("follower_level", self.follower_level),
            ("leader_level", self.leader_level),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(BgaError::NonPositiveLevel {
                    location: name.to_string(),
                    value: v,
                });
            }
        }
        check_rate("leader_rate", self.leader_rate)?;
        if let Some(r) = self.follower_rate {
            check_rate("follower_rate", r)?;
        }
        Ok(())
    }
}

fn check_rate(name: &str, rate: f64) -> Result<()> {
    if rate.is_finite() && rate > -1.0 {
        Ok(())
    } else {
        Err(BgaError::InvalidArgument(format!(
            "{name} must be a finite rate above -1, got {rate}"
        )))
    }
}

/// A business objective. Which optional fields are required depends on
/// `kind`: `multiple` for `Multiple`, `rival` for `CatchUp`, `rate` for
/// `ExplicitRate`. `horizon_years` is optional everywhere and falls back to the
/// plan horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthTarget {
    pub kind: TargetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiple: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_years: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rival: Option<CatchupProblem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
}

impl GrowthTarget {
    pub fn multiple(multiple: f64, horizon_years: Option<f64>) -> Self {
        GrowthTarget {
            kind: TargetKind::Multiple,
            multiple: Some(multiple),
            horizon_years,
            rival: None,
            rate: None,
        }
    }

    pub fn catch_up(rival: CatchupProblem, horizon_years: Option<f64>) -> Self {
        GrowthTarget {
            kind: TargetKind::CatchUp,
            multiple: None,
            horizon_years,
            rival: Some(rival),
            rate: None,
        }
    }

    pub fn explicit_rate(rate: f64) -> Self {
        GrowthTarget {
            kind: TargetKind::ExplicitRate,
            multiple: None,
            horizon_years: None,
            rival: None,
            rate: Some(rate),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(BgaError::InvalidArgument(format!("target: {msg}")));
        if let Some(n) = self.horizon_years {
            if !(n.is_finite() && n > 0.0) {
                return Err(BgaError::NonPositiveHorizon(n));
            }
        }
        match self.kind {
            TargetKind::Multiple => {
                if self.rival.is_some() || self.rate.is_some() {
                    return bad("Multiple takes only `multiple` and `horizon_years`");
                }
                match self.multiple {
                    Some(m) if m.is_finite() && m > 0.0 => Ok(()),
                    Some(_) => bad("multiple must be positive"),
                    None => bad("Multiple requires `multiple`"),
                }
            }
            TargetKind::CatchUp => {
                if self.multiple.is_some() || self.rate.is_some() {
                    return bad("CatchUp takes only `rival` and `horizon_years`");
                }
                match &self.rival {
                    Some(r) => r.validate(),
                    None => bad("CatchUp requires `rival`"),
                }
            }
            TargetKind::ExplicitRate => {
                if self.multiple.is_some() || self.rival.is_some() {
                    return bad("ExplicitRate takes only `rate`");
                }
                match self.rate {
                    Some(r) => check_rate("rate", r),
                    None => bad("ExplicitRate requires `rate`"),
                }
            }
        }
    }

    /// Annual output growth this target requires. `default_horizon` is used
    /// when the target carries no horizon of its own.
    pub fn annual_rate(&self, default_horizon: f64) -> Result<f64> {
        self.validate()?;
        let horizon = self.horizon_years.unwrap_or(default_horizon);
        match self.kind {
            TargetKind::ExplicitRate => Ok(self.rate.expect("validated")),
            TargetKind::Multiple => {
                if !(horizon > 0.0) {
                    return Err(BgaError::NonPositiveHorizon(horizon));
                }
                Ok(self.multiple.expect("validated").powf(1.0 / horizon) - 1.0)
            }
            TargetKind::CatchUp => required_rate(&self.rival.expect("validated"), horizon),
        }
    }
}

/// `present * (1 + rate)^years`.
pub fn future_value(present: f64, rate: f64, years: f64) -> f64 {
    present * (1.0 + rate).powf(years)
}

/// Rule-of-70 doubling time for a growth rate given in percent.
pub fn years_to_multiple_rule70(rate_percent: f64) -> Result<f64> {
    if !(rate_percent > 0.0) {
        return Err(BgaError::NonPositiveRate(rate_percent));
    }
    Ok(70.0 / rate_percent)
}

/// Years for a level to grow by `multiple` at `rate`: `ln(m) / ln(1 + r)`.
pub fn years_to_multiple_exact(multiple: f64, rate: f64) -> Result<f64> {
    if !(multiple.is_finite() && multiple > 0.0) {
        return Err(BgaError::InvalidArgument(format!(
            "multiple must be positive, got {multiple}"
        )));
    }
    if multiple == 1.0 {
        return Ok(0.0);
    }
    let unreachable = BgaError::UnreachableTarget { multiple, rate };
    if !(rate > -1.0) {
        return Err(unreachable);
    }
    let num = multiple.ln();
    let den = rate.ln_1p();
    if den == 0.0 || num.signum() != den.signum() {
        return Err(unreachable);
    }
    Ok(num / den)
}

/// Years until the follower's level equals the leader's, both compounding at
/// their own rates. Zero when the follower is not behind.
pub fn catchup_horizon(problem: &CatchupProblem) -> Result<f64> {
    problem.validate()?;
    let follower_rate = problem.follower_rate.ok_or_else(|| {
        BgaError::InvalidArgument("catch-up horizon needs a follower_rate".into())
    })?;
    if problem.follower_level >= problem.leader_level {
        return Ok(0.0);
    }
    if follower_rate <= problem.leader_rate {
        return Err(BgaError::NeverCatches {
            follower_rate,
            leader_rate: problem.leader_rate,
        });
    }
    let gap = (problem.leader_level / problem.follower_level).ln();
    let speed = follower_rate.ln_1p() - problem.leader_rate.ln_1p();
    Ok(gap / speed)
}

/// Annual rate at which the follower matches the leader's future level after
/// `horizon_years`: `(leader FV / follower)^(1/N) - 1`.
pub fn required_rate(problem: &CatchupProblem, horizon_years: f64) -> Result<f64> {
    if !(horizon_years.is_finite() && horizon_years > 0.0) {
        return Err(BgaError::NonPositiveHorizon(horizon_years));
    }
    problem.validate()?;
    let target = future_value(problem.leader_level, problem.leader_rate, horizon_years);
    Ok((target / problem.follower_level).powf(1.0 / horizon_years) - 1.0)
}

/// [`required_rate`] computed with [`solve_rate_numeric`] instead of the
/// closed form.
pub fn required_rate_numeric(problem: &CatchupProblem, horizon_years: f64) -> Result<f64> {
    if !(horizon_years.is_finite() && horizon_years > 0.0) {
        return Err(BgaError::NonPositiveHorizon(horizon_years));
    }
    problem.validate()?;
    let target = future_value(problem.leader_level, problem.leader_rate, horizon_years);
    let f = |g: f64| future_value(problem.follower_level, g, horizon_years) - target;
    let lo = -1.0 + 1e-12;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(BgaError::NoSignChange { lo, hi });
        }
    }
    solve_rate_numeric(f, lo, hi)
}

/// Finds a root of `f` on `[lo, hi]` by bisection with Newton polishing.
///
/// Bisection keeps a sign-changing bracket at all times; a Newton step (with a
/// finite-difference slope) is taken only when it lands strictly inside the
/// bracket. Converges when `|f(x)|` drops below [`ROOT_RELATIVE_TOLERANCE`]
/// times the larger endpoint residual, or the bracket collapses to adjacent
/// floats.
pub fn solve_rate_numeric<F>(f: F, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let fb = f(b);
    if !(fa.is_finite() && fb.is_finite()) {
        return Err(BgaError::NoSignChange { lo, hi });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(BgaError::NoSignChange { lo, hi });
    }
    let tol = ROOT_RELATIVE_TOLERANCE * fa.abs().max(fb.abs());

    let mut x = 0.5 * (a + b);
    for _ in 0..MAX_ROOT_ITERATIONS {
        let fx = f(x);
        if fx.abs() <= tol {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let width = b - a;
        if width <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            return Ok(x);
        }

        let h = (1e-7 * x.abs().max(1.0)).min(0.25 * width);
        let (xl, xr) = ((x - h).max(a), (x + h).min(b));
        let slope = (f(xr) - f(xl)) / (xr - xl);
        let newton = x - fx / slope;
        x = if slope.is_finite() && slope != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    Err(BgaError::NoConvergence {
        iterations: MAX_ROOT_ITERATIONS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Year-stepping compounding, independent of powf.
    fn loop_fv(pv: f64, rate: f64, years: u32) -> f64 {
        (0..years).fold(pv, |v, _| v * (1.0 + rate))
    }

    #[test]
    fn future_value_examples() {
        assert!((future_value(100.0, 0.10, 2.0) - loop_fv(100.0, 0.10, 2)).abs() < 1e-12);
        assert!((future_value(100.0, 0.10, 2.0) - 121.0).abs() < 1e-12);
        assert_eq!(future_value(37.5, 0.2, 0.0), 37.5);
        assert!((future_value(632.057e6, 0.15, 5.0) - 1_271_292_390.0).abs() < 1.0);
    }

    #[test]
    fn rule70() {
        assert_eq!(years_to_multiple_rule70(10.0).unwrap(), 7.0);
        assert_eq!(years_to_multiple_rule70(70.0).unwrap(), 1.0);
        assert_eq!(years_to_multiple_rule70(7.0).unwrap(), 10.0);
        assert_eq!(
            years_to_multiple_rule70(0.0).unwrap_err().code(),
            "NonPositiveRate"
        );
    }

    #[test]
    fn exact_multiple_against_bisection() {
        // Independent bisection on the FV equation.
        let mut lo = 0.0;
        let mut hi = 100.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if future_value(1.0, 0.10, mid) < 3.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let n = years_to_multiple_exact(3.0, 0.10).unwrap();
        assert!((n - lo).abs() < 1e-9);
        assert!((n - 11.53).abs() < 0.01);
        assert_eq!(years_to_multiple_exact(1.0, 0.3).unwrap(), 0.0);
        let doubling = years_to_multiple_exact(2.0, 0.10).unwrap();
        assert!(loop_fv(1.0, 0.10, 7) < 2.0 && loop_fv(1.0, 0.10, 8) > 2.0);
        assert!((doubling - 7.27).abs() < 0.005);
        assert!((doubling - years_to_multiple_rule70(10.0).unwrap()).abs() < 0.3);
    }

    #[test]
    fn exact_multiple_unreachable() {
        for (m, r) in [(2.0, 0.0), (2.0, -0.1), (0.5, 0.1), (2.0, -1.0)] {
            assert_eq!(
                years_to_multiple_exact(m, r).unwrap_err().code(),
                "UnreachableTarget"
            );
        }
        // Shrinking to half at a negative rate is reachable.
        assert!(years_to_multiple_exact(0.5, -0.1).unwrap() > 0.0);
    }

    #[test]
    fn catchup_against_year_stepping() {
        let p = CatchupProblem::new(632.057, 1097.0, 0.03).with_follower_rate(0.07);
        let n = catchup_horizon(&p).unwrap();
        // Step in 1e-4 year increments until the follower overtakes.
        let mut t = 0.0;
        while future_value(632.057, 0.07, t) < future_value(1097.0, 0.03, t) {
            t += 1e-4;
        }
        assert!((n - t).abs() < 2e-4);
        assert!((n - 14.47).abs() < 0.01);
        let lhs = future_value(632.057, 0.07, n);
        let rhs = future_value(1097.0, 0.03, n);
        assert!((lhs / rhs - 1.0).abs() < 1e-9);
    }

    #[test]
    fn catchup_edge_cases() {
        let eq = CatchupProblem::new(5.0, 5.0, 0.1).with_follower_rate(0.01);
        assert_eq!(catchup_horizon(&eq).unwrap(), 0.0);
        let ahead = CatchupProblem::new(1097.0, 632.057, 0.07).with_follower_rate(0.03);
        assert_eq!(catchup_horizon(&ahead).unwrap(), 0.0);
        let never = CatchupProblem::new(1.0, 2.0, 0.05).with_follower_rate(0.05);
        assert_eq!(catchup_horizon(&never).unwrap_err().code(), "NeverCatches");
        let no_rate = CatchupProblem::new(1.0, 2.0, 0.05);
        assert!(catchup_horizon(&no_rate).is_err());
    }

    #[test]
    fn required_rate_worked_case() {
        let p = CatchupProblem::new(632.057e6, 1097e6, 0.03);
        let g = required_rate(&p, 5.0).unwrap();
        assert!((g - 0.15).abs() < 0.0005);
        let numeric = required_rate_numeric(&p, 5.0).unwrap();
        assert!((g - numeric).abs() < 1e-10);
        assert_eq!(
            required_rate(&p, 0.0).unwrap_err(),
            BgaError::NonPositiveHorizon(0.0)
        );
    }

    #[test]
    fn required_rate_zero_when_already_there() {
        let fv = future_value(800.0, 0.04, 3.0);
        let p = CatchupProblem::new(fv, 800.0, 0.04);
        assert!(required_rate(&p, 3.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn root_finder_examples() {
        let r = solve_rate_numeric(|g| 632.057 * (1.0 + g).powi(5) - 1271.72, 0.0, 1.0).unwrap();
        let closed = (1271.72f64 / 632.057).powf(0.2) - 1.0;
        assert!((r - closed).abs() < 1e-12);
        assert!((r - 0.15).abs() < 1e-4);
        assert_eq!(solve_rate_numeric(|x| x, -1.0, 1.0).unwrap(), 0.0);
        let s = solve_rate_numeric(|x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((s - std::f64::consts::SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn root_finder_errors() {
        assert_eq!(
            solve_rate_numeric(|x| x * x + 1.0, -1.0, 1.0).unwrap_err().code(),
            "NoSignChange"
        );
    }

    #[test]
    fn target_validation() {
        let mut t = GrowthTarget::multiple(2.0, Some(5.0));
        assert!(t.validate().is_ok());
        t.rate = Some(0.1);
        assert!(t.validate().is_err());
        let t = GrowthTarget {
            kind: TargetKind::CatchUp,
            multiple: None,
            horizon_years: Some(-1.0),
            rival: Some(CatchupProblem::new(1.0, 2.0, 0.0)),
            rate: None,
        };
        assert_eq!(t.validate().unwrap_err().code(), "NonPositiveHorizon");
    }

    #[test]
    fn target_rates() {
        let t = GrowthTarget::multiple(2.0113571875, Some(5.0));
        assert!((t.annual_rate(1.0).unwrap() - 0.15).abs() < 1e-12);
        let t = GrowthTarget::catch_up(CatchupProblem::new(632.057e6, 1097e6, 0.03), None);
        assert!((t.annual_rate(5.0).unwrap() - 0.150078).abs() < 1e-6);
        assert_eq!(GrowthTarget::explicit_rate(0.15).annual_rate(5.0).unwrap(), 0.15);
    }

    #[test]
    fn target_json_shape() {
        let t = GrowthTarget::catch_up(CatchupProblem::new(1.0, 2.0, 0.03), Some(5.0));
        let v: serde_json::Value = serde_json::to_value(&t).unwrap();
        assert_eq!(v["kind"], "CatchUp");
        assert_eq!(v["rival"]["leader_rate"], 0.03);
        assert!(v.get("multiple").is_none());
        let back: GrowthTarget = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
    }
}
