//! Ordinary least squares via Householder QR.
//!
//! The design matrix always carries an intercept in column 0. Coefficients are
//! recovered from the triangular factor; the unscaled covariance `(X'X)^-1`
//! is formed as `R^-1 R^-T`, never by inverting `X'X` directly.

use serde::{Deserialize, Serialize};

use super::RegressError;
use crate::series::AlignedSample;

/// Coefficient covariance estimator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Covariance {
    /// Homoskedastic `s^2 (X'X)^-1`.
    #[default]
    Classical,
    /// Newey-West HAC with Bartlett weights. `lags: None` uses
    /// `floor(4 (n/100)^(2/9))`.
    NeweyWest { lags: Option<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OlsOptions {
    pub covariance: Covariance,
}

/// One fitted regression. Index 0 of every vector is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub t_stat: Vec<f64>,
    pub r2: f64,
    pub r2_adj: f64,
    pub n: usize,
    pub sse: f64,
    pub covariance: Covariance,
}

impl OlsFit {
    /// Number of slope regressors (excluding the intercept).
    pub fn k(&self) -> usize {
        self.beta.len() - 1
    }

    /// Residual degrees of freedom `n - k - 1`.
    pub fn df(&self) -> usize {
        self.n - self.beta.len()
    }

    /// Fitted value for one row of slope regressors.
    pub fn predict(&self, regressors: &[f64]) -> f64 {
        assert_eq!(regressors.len(), self.k(), "regressor count mismatch");
        predict(&self.beta, regressors)
    }
}

/// `beta[0] + sum(beta[i+1] * x[i])`.
pub fn predict(beta: &[f64], regressors: &[f64]) -> f64 {
    beta[0]
        + beta[1..]
            .iter()
            .zip(regressors)
            .map(|(b, x)| b * x)
            .sum::<f64>()
}

/// Tolerance on |R_jj| relative to the original column norm.
const RANK_TOL: f64 = 1e-9;

fn t_ratio(b: f64, se: f64) -> f64 {
    if se > 0.0 {
        b / se
    } else if b == 0.0 {
        0.0
    } else {
        b.signum() * f64::INFINITY
    }
}

/// Fits `y = b0 + sum(b_i x_i) + e` with an implicit intercept.
pub fn ols(y: &[f64], regressors: &[&[f64]], opts: &OlsOptions) -> Result<OlsFit, RegressError> {
    let n = y.len();
    let p = regressors.len() + 1;
    if regressors.iter().any(|x| x.len() != n) {
        panic!("regressor length differs from response length");
    }
    if n < p + 1 {
        return Err(RegressError::TooFewObservations { n, required: p + 1 });
    }

    // Column-major copy of X, and Q'y accumulated in place.
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    cols.push(vec![1.0; n]);
    cols.extend(regressors.iter().map(|x| x.to_vec()));
    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut qty = y.to_vec();

    for j in 0..p {
        let alpha = cols[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if alpha <= RANK_TOL * norms[j] || norms[j] == 0.0 {
            return Err(RegressError::RankDeficient { column: j });
        }
        let alpha = if cols[j][j] > 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = cols[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        cols[j][j] = alpha;
        for r in cols[j][j + 1..].iter_mut() {
            *r = 0.0;
        }
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |target: &mut [f64]| {
            let s: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * s / vnorm2;
            for (t, a) in target.iter_mut().zip(&v) {
                *t -= f * a;
            }
        };
        for c in cols.iter_mut().skip(j + 1) {
            reflect(&mut c[j..]);
        }
        reflect(&mut qty[j..]);
    }

    // R[i][j] = cols[j][i] for i <= j.
    let r = |i: usize, j: usize| cols[j][i];
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r(i, j) * beta[j]).sum();
        beta[i] = (qty[i] - s) / r(i, i);
    }

    // R^-1, upper triangular.
    let mut rinv = vec![vec![0.0; p]; p];
    #[allow(clippy::needless_range_loop)]
    for i in 0..p {
        rinv[i][i] = 1.0 / r(i, i);
        for j in (0..i).rev() {
            let s: f64 = (j + 1..=i).map(|m| r(j, m) * rinv[m][i]).sum();
            rinv[j][i] = -s / r(j, j);
        }
    }
    // (X'X)^-1 = R^-1 R^-T
    let mut xtx_inv = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            xtx_inv[i][j] = (i.max(j)..p).map(|m| rinv[i][m] * rinv[j][m]).sum();
        }
    }

    let resid: Vec<f64> = (0..n)
        .map(|t| y[t] - predict(&beta, &regressors.iter().map(|x| x[t]).collect::<Vec<_>>()))
        .collect();
    let sse: f64 = resid.iter().map(|e| e * e).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
    let k = (p - 1) as f64;
    let r2_adj = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - k - 1.0);

    let var = match opts.covariance {
        Covariance::Classical => {
            let s2 = sse / (n - p) as f64;
            (0..p).map(|i| s2 * xtx_inv[i][i]).collect::<Vec<_>>()
        }
        Covariance::NeweyWest { lags } => {
            let lags = lags.unwrap_or_else(|| newey_west_lags(n));
            let row = |t: usize| -> Vec<f64> {
                std::iter::once(1.0)
                    .chain(regressors.iter().map(|x| x[t]))
                    .collect()
            };
            let rows: Vec<Vec<f64>> = (0..n).map(row).collect();
            let meat = newey_west_meat(&rows, &resid, lags);
            let bread = &xtx_inv;
            (0..p)
                .map(|i| {
                    let mut v = 0.0;
                    for a in 0..p {
                        for b in 0..p {
                            v += bread[i][a] * meat[a][b] * bread[b][i];
                        }
                    }
                    v
                })
                .collect()
        }
    };
    let se: Vec<f64> = var.iter().map(|v| v.max(0.0).sqrt()).collect();
    let t_stat = beta.iter().zip(&se).map(|(&b, &s)| t_ratio(b, s)).collect();

    Ok(OlsFit {
        beta,
        se,
        t_stat,
        r2,
        r2_adj,
        n,
        sse,
        covariance: opts.covariance,
    })
}

/// Default Bartlett truncation lag `floor(4 (n/100)^(2/9))`.
pub fn newey_west_lags(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

fn newey_west_meat(rows: &[Vec<f64>], resid: &[f64], lags: usize) -> Vec<Vec<f64>> {
    let p = rows[0].len();
    let n = rows.len();
    let mut s = vec![vec![0.0; p]; p];
    for t in 0..n {
        let e2 = resid[t] * resid[t];
        for a in 0..p {
            for b in 0..p {
                s[a][b] += e2 * rows[t][a] * rows[t][b];
            }
        }
    }
    for l in 1..=lags.min(n.saturating_sub(1)) {
        let w = 1.0 - l as f64 / (lags as f64 + 1.0);
        for t in l..n {
            let ee = resid[t] * resid[t - l];
            for a in 0..p {
                for b in 0..p {
                    s[a][b] += w * ee * (rows[t][a] * rows[t - l][b] + rows[t - l][a] * rows[t][b]);
                }
            }
        }
    }
    s
}

fn columns(sample: &AlignedSample) -> (Vec<f64>, Vec<f64>, Option<Vec<f64>>) {
    let y = sample.rows.iter().map(|r| r.response).collect();
    let x = sample.rows.iter().map(|r| r.predictor).collect();
    let c = if sample.has_control() {
        Some(
            sample
                .rows
                .iter()
                .map(|r| r.control.unwrap_or(f64::NAN))
                .collect(),
        )
    } else {
        None
    };
    (y, x, c)
}

/// Regresses the response on the predictor, plus the control when present.
pub fn ols_fit(sample: &AlignedSample) -> Result<OlsFit, RegressError> {
    ols_fit_with(sample, &OlsOptions::default())
}

pub fn ols_fit_with(sample: &AlignedSample, opts: &OlsOptions) -> Result<OlsFit, RegressError> {
    let (y, x, c) = columns(sample);
    match &c {
        Some(c) => ols(&y, &[&x, c], opts),
        None => ols(&y, &[&x], opts),
    }
}

/// In-sample fit on the earlier segment and its out-of-sample R^2 on the later one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvaluation {
    pub in_sample: OlsFit,
    pub out_of_sample_r2: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Chronological split at `round(split_fraction * n)`.
///
/// Out-of-sample R^2 is `1 - SSE_pred / SST_test`, with SST about the test
/// segment's own mean. A constant test response gives 1 for a perfect
/// prediction and negative infinity otherwise.
pub fn split_evaluate(
    sample: &AlignedSample,
    split_fraction: f64,
) -> Result<SplitEvaluation, RegressError> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(RegressError::InvalidSplit(split_fraction));
    }
    let n = sample.n();
    let p = if sample.has_control() { 3 } else { 2 };
    let n_train = (split_fraction * n as f64).round() as usize;
    let n_test = n - n_train.min(n);
    if n_train < p + 1 || n_test < p + 1 {
        return Err(RegressError::TooFewObservations {
            n: n_train.min(n_test),
            required: p + 1,
        });
    }
    let mut rows = sample.rows.clone();
    rows.sort_by_key(|r| r.t);
    let train = AlignedSample {
        horizon: sample.horizon,
        rows: rows[..n_train].to_vec(),
    };
    let fit = ols_fit(&train)?;
    let test = &rows[n_train..];
    let mean = test.iter().map(|r| r.response).sum::<f64>() / n_test as f64;
    let (mut sse, mut sst) = (0.0, 0.0);
    for r in test {
        let x: Vec<f64> = std::iter::once(r.predictor).chain(r.control).collect();
        let e = r.response - fit.predict(&x);
        sse += e * e;
        sst += (r.response - mean) * (r.response - mean);
    }
    let out_of_sample_r2 = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    Ok(SplitEvaluation {
        in_sample: fit,
        out_of_sample_r2,
        n_train,
        n_test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 37 % 101) as f64) / 10.0).collect()
    }

    #[test]
    fn constant_response() {
        let x = xs(40);
        let y = vec![3.0; 40];
        let f = ols(&y, &[&x], &OlsOptions::default()).unwrap();
        assert!((f.beta[0] - 3.0).abs() < 1e-12);
        assert!(f.beta[1].abs() < 1e-12);
        assert!(f.r2_adj <= 0.0);
    }

    #[test]
    fn exact_line() {
        let x = xs(50);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let f = ols(&y, &[&x], &OlsOptions::default()).unwrap();
        assert!((f.beta[0] - 1.0).abs() < 1e-12);
        assert!((f.beta[1] - 2.0).abs() < 1e-12);
        assert!(f.sse < 1e-20);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_and_size_errors() {
        let x = vec![5.0; 20];
        let y = xs(20);
        assert!(matches!(
            ols(&y, &[&x], &OlsOptions::default()),
            Err(RegressError::RankDeficient { column: 1 })
        ));
        let x2: Vec<f64> = xs(20).iter().map(|v| v * 2.0).collect();
        let x1 = xs(20);
        assert!(matches!(
            ols(&y, &[&x1, &x2], &OlsOptions::default()),
            Err(RegressError::RankDeficient { column: 2 })
        ));
        assert!(matches!(
            ols(&[1.0, 2.0], &[&[0.0, 1.0]], &OlsOptions::default()),
            Err(RegressError::TooFewObservations { n: 2, required: 3 })
        ));
    }

    #[test]
    fn t_stat_is_ratio() {
        let x = xs(60);
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| 0.5 * v + ((i * 7919) % 13) as f64 / 13.0)
            .collect();
        let f = ols(&y, &[&x], &OlsOptions::default()).unwrap();
        for i in 0..2 {
            assert!((f.t_stat[i] - f.beta[i] / f.se[i]).abs() < 1e-12 * f.t_stat[i].abs().max(1.0));
        }
        assert_eq!(f.df(), 58);
    }

    #[test]
    fn newey_west_zero_lags_is_white() {
        // With L = 0 the HAC estimator reduces to White's HC0 sandwich; compare
        // against the closed form for a single regressor.
        let x = xs(80);
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| 0.3 * v + ((i * 31) % 17) as f64 / 17.0)
            .collect();
        let opts = OlsOptions {
            covariance: Covariance::NeweyWest { lags: Some(0) },
        };
        let f = ols(&y, &[&x], &opts).unwrap();
        let xm = x.iter().sum::<f64>() / 80.0;
        let sxx: f64 = x.iter().map(|v| (v - xm) * (v - xm)).sum();
        let e: Vec<f64> = (0..80)
            .map(|t| y[t] - f.beta[0] - f.beta[1] * x[t])
            .collect();
        let hc0: f64 = (0..80)
            .map(|t| (x[t] - xm).powi(2) * e[t] * e[t])
            .sum::<f64>()
            / (sxx * sxx);
        assert!((f.se[1] - hc0.sqrt()).abs() < 1e-10 * hc0.sqrt());
    }

    #[test]
    fn newey_west_default_lags() {
        assert_eq!(newey_west_lags(100), 4);
        assert_eq!(newey_west_lags(40_000), 15);
    }

    #[test]
    fn split_counts_and_perfect_fit() {
        let x = xs(100);
        let y: Vec<f64> = x.iter().map(|v| -1.5 * v + 4.0).collect();
        let s = AlignedSample::from_columns(&x, None, &y);
        let e = split_evaluate(&s, 0.7).unwrap();
        assert_eq!((e.n_train, e.n_test), (70, 30));
        assert!((e.out_of_sample_r2 - 1.0).abs() < 1e-12);
        assert!(matches!(
            split_evaluate(&s, 1.0),
            Err(RegressError::InvalidSplit(_))
        ));
        assert!(matches!(
            split_evaluate(&s, 0.02),
            Err(RegressError::TooFewObservations { .. })
        ));
    }
}
