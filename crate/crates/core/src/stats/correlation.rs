use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::{check_finite, mean, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Sample Pearson correlation with a two-sided p-value from Student's t with
/// `n − 2` degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFew { needed: 3, found: n });
    }
    check_finite(x)?;
    check_finite(y)?;

    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantSeries);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(CorrelationResult {
        r,
        p_value: t_test_p(r, n),
        n,
    })
}

fn t_test_p(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let one_minus_r2 = 1.0 - r * r;
    if one_minus_r2 <= 0.0 {
        return 0.0;
    }
    let t2 = r * r * df / one_minus_r2;
    // P(|T| > t) = I_{df/(df+t²)}(df/2, 1/2)
    beta_reg(df / 2.0, 0.5, df / (df + t2)).clamp(0.0, 1.0)
}
