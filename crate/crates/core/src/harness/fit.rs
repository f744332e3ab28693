use crate::error::{Error, Result};

/// Least-squares line through `(log eps, log error)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Points used in the fit.
    pub points: Vec<(f64, f64)>,
}

/// Fits `log error = slope log eps + intercept`. Points with a nonpositive or
/// non-finite error are dropped with a warning; at least 3 must remain and
/// the epsilons must be strictly decreasing.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::Param("epsilons must be strictly decreasing".into()));
    }
    if points.iter().any(|p| !(p.0 > 0.0)) {
        return Err(Error::Param("epsilons must be positive".into()));
    }
    let used: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(eps, err)| {
            let keep = err > 0.0 && err.is_finite();
            if !keep {
                log::warn!("dropping rate point eps={eps}, error={err}");
            }
            keep
        })
        .collect();
    if used.len() < 3 {
        return Err(Error::Insufficient(format!("rate fit needs 3 positive points, got {}", used.len())));
    }
    let xy: Vec<(f64, f64)> = used.iter().map(|(e, r)| (e.ln(), r.ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: used,
    })
}
