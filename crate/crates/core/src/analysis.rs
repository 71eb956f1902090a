//! Aggregation of simulation outcomes and the small set of estimators the
//! experiments report: rates, least-squares fits, R² and a paired t-test.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::SimulationOutcome;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no data")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("outcomes mix author counts {0} and {1}")]
    InconsistentAuthors(usize, usize),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("need more than {coefficients} points, got {points}")]
    TooFewPoints { points: usize, coefficients: usize },
    #[error("value {0} is outside the domain of the fit")]
    Domain(f64),
    #[error("differences have zero variance")]
    ZeroVariance,
}

/// Aggregated indicators over a batch of replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationStats {
    pub n: usize,
    /// Fraction of runs with at least one ultimatum.
    pub iau_rate: f64,
    pub rate_std: f64,
    /// Issuance rate by initial position; empty when runs differ in size.
    pub per_position_rates: Vec<f64>,
    /// Mean payoff by initial position; empty when runs differ in size.
    pub mean_payoffs: Vec<f64>,
}

impl ReplicationStats {
    pub fn from_outcomes(outcomes: &[SimulationOutcome]) -> Result<Self, AnalysisError> {
        let (iau_rate, rate_std) = iau_rate(outcomes)?;
        let n_authors = outcomes[0].n_authors();
        let uniform = outcomes.iter().all(|o| o.n_authors() == n_authors);
        let (per_position_rates, mean_payoffs) = if uniform {
            let mut payoffs = vec![0.0; n_authors];
            for o in outcomes {
                for (p, &author) in o.initial_order.iter().enumerate() {
                    payoffs[p] += o.payoffs[author];
                }
            }
            payoffs.iter_mut().for_each(|x| *x /= outcomes.len() as f64);
            (per_position_rates(outcomes, n_authors)?, payoffs)
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Self {
            n: outcomes.len(),
            iau_rate,
            rate_std,
            per_position_rates,
            mean_payoffs,
        })
    }
}

/// Named least-squares coefficients with the fit's R².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub coefficients: Vec<(String, f64)>,
    pub r_squared: f64,
    pub n_points: usize,
}

impl RegressionResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.coefficients.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub two_tailed: bool,
}

/// Arithmetic mean and sample (n - 1) standard deviation.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64), AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.iter().all(|v| *v == values[0]) {
        return Ok((values[0], 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Ok((mean, (ss / (n - 1.0)).sqrt()))
}

/// Fraction of outcomes with at least one ultimatum, and the sample std of
/// that 0/1 indicator.
pub fn iau_rate(outcomes: &[SimulationOutcome]) -> Result<(f64, f64), AnalysisError> {
    let indicators: Vec<f64> = outcomes
        .iter()
        .map(|o| if o.has_ultimatum() { 1.0 } else { 0.0 })
        .collect();
    mean_std(&indicators)
}

/// Entry `p - 1` is the fraction of runs in which the author who started at
/// position `p` issued at least one ultimatum.
pub fn per_position_rates(outcomes: &[SimulationOutcome], n_authors: usize) -> Result<Vec<f64>, AnalysisError> {
    if outcomes.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut counts = vec![0usize; n_authors];
    let mut issued = vec![false; n_authors];
    for o in outcomes {
        if o.n_authors() != n_authors {
            return Err(AnalysisError::InconsistentAuthors(n_authors, o.n_authors()));
        }
        issued.iter_mut().for_each(|x| *x = false);
        for e in &o.events {
            if let Some(p) = o.initial_position(e.issuer) {
                issued[p - 1] = true;
            }
        }
        for (c, &i) in counts.iter_mut().zip(&issued) {
            *c += usize::from(i);
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 / outcomes.len() as f64).collect())
}

/// Coefficient of determination `1 - SS_res / SS_tot`. With a constant
/// response it is 1 for a perfect prediction and 0 otherwise.
pub fn r_squared(predicted: &[f64], actual: &[f64]) -> Result<f64, AnalysisError> {
    if predicted.len() != actual.len() {
        return Err(AnalysisError::LengthMismatch(predicted.len(), actual.len()));
    }
    let (mean, _) = mean_std(actual)?;
    let ss_res: f64 = predicted.iter().zip(actual).map(|(p, a)| (a - p).powi(2)).sum();
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        let scale: f64 = actual.iter().map(|a| a * a).sum::<f64>().max(1.0);
        return Ok(if ss_res <= 1e-20 * scale { 1.0 } else { 0.0 });
    }
    Ok(1.0 - ss_res / ss_tot)
}

/// Least squares `P ≈ a + b_U·U + b_C·C` over `(U, C, P)` points.
pub fn ols_fit_planar(points: &[(f64, f64, f64)]) -> Result<RegressionResult, AnalysisError> {
    let design: Vec<[f64; 3]> = points.iter().map(|&(u, c, _)| [1.0, u, c]).collect();
    let response: Vec<f64> = points.iter().map(|p| p.2).collect();
    fit(
        &design,
        &response,
        ["intercept", "utility_spectrum", "contribution_spectrum"],
    )
}

/// Least squares `P ≈ a + b·ln A` over `(A, P)` points with `A >= 1`.
pub fn log_fit(points: &[(f64, f64)]) -> Result<RegressionResult, AnalysisError> {
    if let Some(&(a, _)) = points.iter().find(|(a, _)| a.is_nan() || *a < 1.0) {
        return Err(AnalysisError::Domain(a));
    }
    let design: Vec<[f64; 2]> = points.iter().map(|&(a, _)| [1.0, a.ln()]).collect();
    let response: Vec<f64> = points.iter().map(|p| p.1).collect();
    fit(&design, &response, ["intercept", "ln_authors"])
}

fn fit<const P: usize>(
    design: &[[f64; P]],
    response: &[f64],
    names: [&str; P],
) -> Result<RegressionResult, AnalysisError> {
    let coefficients = least_squares(design, response)?;
    let predicted: Vec<f64> = design
        .iter()
        .map(|row| row.iter().zip(&coefficients).map(|(x, b)| x * b).sum())
        .collect();
    Ok(RegressionResult {
        r_squared: r_squared(&predicted, response)?,
        coefficients: names.iter().map(|n| n.to_string()).zip(coefficients).collect(),
        n_points: response.len(),
    })
}

/// Householder QR least squares. Requires more rows than columns and a
/// full-rank design.
pub fn least_squares<const P: usize>(design: &[[f64; P]], response: &[f64]) -> Result<[f64; P], AnalysisError> {
    let n = design.len();
    if n != response.len() {
        return Err(AnalysisError::LengthMismatch(n, response.len()));
    }
    if n < P {
        return Err(AnalysisError::RankDeficient);
    }
    if n == P {
        return Err(AnalysisError::TooFewPoints {
            points: n,
            coefficients: P,
        });
    }
    // column-major working copy
    let mut cols: Vec<Vec<f64>> = (0..P).map(|j| design.iter().map(|r| r[j]).collect()).collect();
    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut b = response.to_vec();
    for k in 0..P {
        let norm = cols[k][k..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-10 * norms[k] || norm == 0.0 {
            return Err(AnalysisError::RankDeficient);
        }
        let alpha = if cols[k][k] > 0.0 { -norm } else { norm };
        let mut v = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |target: &mut [f64]| {
            let s = 2.0 * v.iter().zip(target.iter()).map(|(a, b)| a * b).sum::<f64>() / vv;
            target.iter_mut().zip(&v).for_each(|(t, vi)| *t -= s * vi);
        };
        for col in cols.iter_mut().skip(k) {
            reflect(&mut col[k..]);
        }
        reflect(&mut b[k..]);
    }
    let mut coef = [0.0; P];
    for k in (0..P).rev() {
        let tail: f64 = (k + 1..P).map(|j| cols[j][k] * coef[j]).sum();
        coef[k] = (b[k] - tail) / cols[k][k];
    }
    Ok(coef)
}

/// Two-tailed paired t-test on `x - y` with `n - 1` degrees of freedom.
pub fn paired_t_test(x: &[f64], y: &[f64]) -> Result<TTestResult, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(AnalysisError::TooFewPoints {
            points: x.len(),
            coefficients: 1,
        });
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let (mean, sd) = mean_std(&d)?;
    let df = d.len() - 1;
    if sd == 0.0 {
        if mean == 0.0 {
            return Ok(TTestResult {
                t_statistic: 0.0,
                degrees_of_freedom: df,
                p_value: 1.0,
                two_tailed: true,
            });
        }
        return Err(AnalysisError::ZeroVariance);
    }
    let t = mean / (sd / (d.len() as f64).sqrt());
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: student_t_two_tailed(t, df as f64),
        two_tailed: true,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Regularized incomplete beta `I_x(a, b)` by continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // the fraction converges fastest on this side of the mean
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    let step = |num: f64, c: &mut f64, d: &mut f64| {
        *d = 1.0 + num * *d;
        if d.abs() < TINY {
            *d = TINY;
        }
        *c = 1.0 + num / *c;
        if c.abs() < TINY {
            *c = TINY;
        }
        *d = 1.0 / *d;
        *d * *c
    };
    for m in 1..=10_000 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        h *= step(m * (b - m) * x / ((a + m2 - 1.0) * (a + m2)), &mut c, &mut d);
        let delta = step(-(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0)), &mut c, &mut d);
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

/// Spearman rank correlation, ties ranked by their average.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(AnalysisError::Empty);
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, _) = mean_std(&rx)?;
    let (my, _) = mean_std(&ry)?;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Err(AnalysisError::ZeroVariance);
    }
    Ok(cov / (vx * vy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}
