//! Power-law fits `err = b dt^nu` on log-log data.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Relative spread of local slopes tolerated inside the fit window.
pub const WINDOW_SPREAD: f64 = 0.05;
/// Relative deviation from the fitted line that counts as breakdown.
pub const BREAKDOWN_DEVIATION: f64 = 0.10;

#[derive(Clone, Debug, PartialEq)]
pub struct PowerLaw {
    pub nu: f64,
    pub prefactor: f64,
    /// RMS residual in natural-log units.
    pub residual: f64,
}

impl PowerLaw {
    pub fn eval(&self, x: f64) -> f64 {
        self.prefactor * x.powf(self.nu)
    }
}

/// Least squares on `(ln x, ln y)`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLaw> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("power-law fit needs positive finite data"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("abscissae must differ"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let nu = sxy / sxx;
    let c = my - nu * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - c - nu * x).powi(2)).sum();
    Ok(PowerLaw { nu, prefactor: c.exp(), residual: (rss / n).sqrt() })
}

/// Slopes between consecutive points in log-log space.
pub fn local_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| (y[1] / y[0]).ln() / (x[1] / x[0]).ln()).collect()
}

/// Log-spaced grid from `lo` to `hi` with `per_decade` intervals per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || per_decade == 0 {
        return Err(Error::InvalidArgument("grid needs 0 < lo < hi"));
    }
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    Ok((0..=n).map(|k| lo * 10f64.powf(decades * k as f64 / n as f64)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    /// Half-open index range `[start, end)` of the fit window.
    pub window: (usize, usize),
    /// `None` when every error is zero to rounding, i.e. the decomposition is exact.
    pub fit: Option<PowerLaw>,
    /// Smallest grid point above the window whose error leaves the fitted
    /// line by more than [`BREAKDOWN_DEVIATION`].
    pub breakdown: Option<f64>,
    /// Whether a window met the slope-spread rule; otherwise the whole grid
    /// was fitted.
    pub window_found: bool,
}

/// Errors below this are treated as rounding noise.
pub const EXACT_FLOOR: f64 = 1e-13;

/// Fit over the smallest-`dt` decade whose local slopes agree to
/// [`WINDOW_SPREAD`], then look for breakdown above it.
pub fn scaling_fit(dts: &[f64], errors: &[f64]) -> Result<ScalingFit> {
    if dts.len() != errors.len() {
        return Err(Error::DimensionMismatch { left: dts.len(), right: errors.len() });
    }
    if dts.len() < 6 {
        return Err(Error::InvalidArgument("grid needs at least six points"));
    }
    if dts.windows(2).any(|w| !(w[1] > w[0])) || !(dts[0] > 0.0) {
        return Err(Error::InvalidArgument("grid must be positive and strictly increasing"));
    }
    let base = ScalingFit {
        dts: dts.to_vec(),
        errors: errors.to_vec(),
        window: (0, dts.len()),
        fit: None,
        breakdown: None,
        window_found: false,
    };
    if errors.iter().all(|e| *e <= EXACT_FLOOR) {
        return Ok(base);
    }
    // skip the noise floor at the small end
    let first = errors.iter().position(|e| *e > EXACT_FLOOR * 1e2).unwrap_or(errors.len());
    let mut window = None;
    for s in first..dts.len() {
        let Some(e) = (s..dts.len()).find(|&e| dts[e] >= dts[s] * 10.0 * (1.0 - 1e-9)) else {
            break;
        };
        let slopes = local_slopes(&dts[s..=e], &errors[s..=e]);
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        let max = slopes.iter().copied().fold(f64::MIN, f64::max);
        let min = slopes.iter().copied().fold(f64::MAX, f64::min);
        if mean.is_finite() && mean != 0.0 && (max - min) / mean.abs() < WINDOW_SPREAD {
            window = Some((s, e + 1));
            break;
        }
    }
    let (window, found) = match window {
        Some(w) => (w, true),
        None => ((first.min(dts.len() - 2), dts.len()), false),
    };
    let fit = fit_power_law(&dts[window.0..window.1], &errors[window.0..window.1])?;
    let breakdown = (window.1..dts.len())
        .find(|&i| (errors[i] / fit.eval(dts[i]) - 1.0).abs() > BREAKDOWN_DEVIATION)
        .map(|i| dts[i]);
    Ok(ScalingFit { fit: Some(fit), breakdown, window, window_found: found, ..base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let xs = log_grid(1e-6, 1e-2, 3).unwrap();
        assert_eq!(xs.len(), 13);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(1.5)).collect();
        let f = scaling_fit(&xs, &ys).unwrap();
        let p = f.fit.unwrap();
        assert!((p.nu - 1.5).abs() < 1e-10 && (p.prefactor - 3.0).abs() < 1e-8);
        assert_eq!(f.window, (0, 4));
        assert!(f.window_found && f.breakdown.is_none());
    }

    #[test]
    fn detects_breakdown() {
        let xs = log_grid(1e-6, 1e-2, 3).unwrap();
        let ys: Vec<f64> = xs.iter().map(|x| x * (1.0 + 1e4 * x * x)).collect();
        let f = scaling_fit(&xs, &ys).unwrap();
        assert!((f.fit.unwrap().nu - 1.0).abs() < 1e-2);
        let b = f.breakdown.unwrap();
        assert!(b > 1e-4 && b < 1e-2, "{b}");
    }

    #[test]
    fn exact_decomposition_has_no_fit() {
        let xs = log_grid(1e-6, 1e-2, 3).unwrap();
        let f = scaling_fit(&xs, &alloc::vec![1e-15; xs.len()]).unwrap();
        assert!(f.fit.is_none());
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(scaling_fit(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        let xs = [1.0, 2.0, 2.0, 3.0, 4.0, 5.0];
        assert!(scaling_fit(&xs, &xs).is_err());
    }

    proptest! {
        #[test]
        fn recovers_exponent(nu in 0.5f64..3.0, b in 1e-3f64..1e3) {
            let xs = log_grid(1e-5, 1e-1, 4).unwrap();
            let ys: Vec<f64> = xs.iter().map(|x| b * x.powf(nu)).collect();
            let p = fit_power_law(&xs, &ys).unwrap();
            prop_assert!((p.nu - nu).abs() < 1e-9);
            prop_assert!((p.prefactor / b - 1.0).abs() < 1e-8);
        }
    }
}
