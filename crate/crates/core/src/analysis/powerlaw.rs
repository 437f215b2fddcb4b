use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Decay exponent `p` of `C_0(t) ∝ t^{−p}` from a least-squares line through
/// `(log t, log C_0)` over `t_min ≤ t ≤ t_max`.
pub fn autocorr_powerlaw_fit(times: &[f64], values: &[f64], t_min: f64, t_max: f64) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (&t, &c) in times.iter().zip(values) {
        if t >= t_min && t <= t_max {
            if !(t > 0.0) {
                return Err(invalid("power-law window must start after t = 0"));
            }
            if !(c > 0.0) {
                return Err(invalid("autocorrelation must be positive inside the window"));
            }
            pts.push((libm::log(t), libm::log(c)));
        }
    }
    if pts.len() < 2 {
        return Err(Error::DegenerateWindow("fewer than two points in the time window".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateWindow("all window times coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(-sxy / sxx)
}
