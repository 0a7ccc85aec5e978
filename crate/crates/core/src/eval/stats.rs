//! Run statistics and Welch's two-sample t-test.

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1); zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Two-sided Welch t-test of equal means.
///
/// When both samples have zero variance, p is 1 for equal means and 0
/// otherwise.
pub fn t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument("t-test needs at least two values per sample".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("t-test sample"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let va = std_dev(a).powi(2) / na;
    let vb = std_dev(b).powi(2) / nb;
    let se2 = va + vb;
    if se2 == 0.0 {
        let p_value = if ma == mb { 1.0 } else { 0.0 };
        let t = if ma == mb { 0.0 } else { (ma - mb).signum() * f64::INFINITY };
        return Ok(TTest { t, df: na + nb - 2.0, p_value, reject: p_value < alpha });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    // P(|T| > |t|) = I_{df / (df + t^2)}(df / 2, 1 / 2)
    let p_value = beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0);
    Ok(TTest { t, df, p_value, reject: p_value < alpha })
}
