//! Monte Carlo estimates with a fixed three-sigma verdict.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consistent,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Claim {
    /// The quantity is at most `claim_bound`.
    UpperBound,
    /// The quantity equals `claim_bound`.
    Equality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub claim: Claim,
    pub claim_bound: f64,
    pub verdict: Verdict,
}

pub const SIGMAS: f64 = 3.0;

impl McReport {
    pub fn new(estimate: f64, stderr: f64, samples: usize, seed: u64, claim: Claim, claim_bound: f64) -> Self {
        let verdict = if samples == 0 || !estimate.is_finite() {
            Verdict::Inconclusive
        } else {
            let off = match claim {
                Claim::UpperBound => estimate - SIGMAS * stderr > claim_bound,
                Claim::Equality => (estimate - claim_bound).abs() > SIGMAS * stderr,
            };
            if off {
                Verdict::Violated
            } else {
                Verdict::Consistent
            }
        };
        Self { estimate, stderr, samples, seed, claim, claim_bound, verdict }
    }

    /// Proportion of `hits` among `samples`, with the binomial standard error.
    pub fn proportion(hits: usize, samples: usize, seed: u64, claim: Claim, claim_bound: f64) -> Self {
        if samples == 0 {
            return Self::new(f64::NAN, f64::NAN, 0, seed, claim, claim_bound);
        }
        let p = hits as f64 / samples as f64;
        Self::new(p, (p * (1.0 - p) / samples as f64).sqrt(), samples, seed, claim, claim_bound)
    }

    /// Mean of `xs` with standard error `sd / sqrt(n)`.
    pub fn mean(xs: &[f64], seed: u64, claim: Claim, claim_bound: f64) -> Self {
        let (m, se) = mean_stderr(xs);
        Self::new(m, se, xs.len(), seed, claim, claim_bound)
    }
}

/// Mean and standard error, summed pairwise.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (m, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Least-squares line `y = a + b x` with the standard error of `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_stderr: f64,
    /// Root mean square of the residuals.
    pub residual: f64,
    pub points: usize,
}

/// Weighted least squares; `None` with fewer than two distinct `x`.
pub fn fit_line(xs: &[f64], ys: &[f64], weights: Option<&[f64]>) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let w: Vec<f64> = weights.map_or_else(|| vec![1.0; n], |w| w.to_vec());
    let sw: f64 = w.iter().sum();
    let mx = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(&w).map(|(x, w)| w * (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).zip(&w).map(|((x, y), w)| w * (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).zip(&w).map(|((x, y), w)| w * (y - intercept - slope * x).powi(2)).sum();
    let dof = (n as f64 - 2.0).max(1.0);
    let slope_stderr = if n > 2 { (rss / dof / sxx).sqrt() } else { 0.0 };
    Some(LineFit { intercept, slope, slope_stderr, residual: (rss / sw).sqrt(), points: n })
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// One-sided 95% normal quantile.
pub const Z95_ONE_SIDED: f64 = 1.644_853_626_951_472_2;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        let r = McReport::new(0.5, 0.01, 100, 0, Claim::UpperBound, 0.45);
        assert_eq!(r.verdict, Verdict::Violated);
        let r = McReport::new(0.5, 0.02, 100, 0, Claim::UpperBound, 0.45);
        assert_eq!(r.verdict, Verdict::Consistent);
        let r = McReport::new(0.5, 0.01, 100, 0, Claim::Equality, 0.55);
        assert_eq!(r.verdict, Verdict::Violated);
        assert_eq!(McReport::proportion(0, 0, 0, Claim::Equality, 0.5).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 2.0 * x).collect();
        let f = fit_line(&xs, &ys, None).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0], None).is_none());
    }

    #[test]
    fn standard_error() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample variance 5/3
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
