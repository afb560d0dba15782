//! Empirical covariance across utterances, with an optional
//! normal-scores (Gaussian copula) transform applied first.
//!
//! Rows of the embedding matrix are the variables: entry (i, j) of the
//! output is the sample covariance between utterance i's and utterance
//! j's embedding coordinates. The nonparanormal path replaces each row
//! with its Winsorized normal scores before the covariance is taken,
//! which makes the estimate depend on the data only through within-row
//! ranks.

use crate::data::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::normal::std_normal_quantile;

/// Which path produced a covariance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceSource {
    Gaussian,
    Nonparanormal,
}

/// Dense symmetric covariance (or correlation) matrix over utterances.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub values: Matrix,
    pub source: CovarianceSource,
}

impl CovarianceMatrix {
    pub fn n(&self) -> usize {
        self.values.rows()
    }
}

/// Winsorization level for the normal-scores transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WinsorDelta {
    /// 1 / (4 L^{1/4} sqrt(π log L)), the truncation level published for
    /// the Winsorized normal-scores estimator.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonparanormalConfig {
    pub enabled: bool,
    pub winsorization_delta: WinsorDelta,
}

impl Default for NonparanormalConfig {
    fn default() -> Self {
        NonparanormalConfig {
            enabled: false,
            winsorization_delta: WinsorDelta::Auto,
        }
    }
}

impl NonparanormalConfig {
    pub fn enabled() -> Self {
        NonparanormalConfig {
            enabled: true,
            winsorization_delta: WinsorDelta::Auto,
        }
    }

    /// Resolves the truncation level for embedding dimension `l`.
    pub fn delta(&self, l: usize) -> Result<f64> {
        let d = match self.winsorization_delta {
            WinsorDelta::Auto => {
                let lf = l as f64;
                1.0 / (4.0 * lf.powf(0.25) * (std::f64::consts::PI * lf.ln()).sqrt())
            }
            WinsorDelta::Fixed(d) => d,
        };
        if !(d > 0.0 && d < 0.5) {
            return Err(Error::Validation(format!(
                "winsorization delta must lie in (0, 0.5), got {d}"
            )));
        }
        Ok(d)
    }
}

/// Sample covariance between rows: Σ̂_ij = 1/(L−1) Σ_l (u_il − ū_i)(u_jl − ū_j).
pub fn empirical_covariance(emb: &EmbeddingMatrix) -> Result<CovarianceMatrix> {
    empirical_covariance_from(emb, CovarianceSource::Gaussian)
}

/// Same as [`empirical_covariance`] but tagging the estimate's source.
pub fn empirical_covariance_from(
    emb: &EmbeddingMatrix,
    source: CovarianceSource,
) -> Result<CovarianceMatrix> {
    let l = emb.dim();
    if l < 2 {
        return Err(Error::Validation(format!(
            "covariance requires embedding dimension >= 2, got {l}"
        )));
    }
    let n = emb.n_rows();
    let means: Vec<f64> = (0..n)
        .map(|i| emb.row(i).iter().sum::<f64>() / l as f64)
        .collect();
    let mut cov = Matrix::zeros(n, n);
    let denom = (l - 1) as f64;
    for i in 0..n {
        let ri = emb.row(i);
        for j in i..n {
            let rj = emb.row(j);
            let mut s = 0.0;
            for k in 0..l {
                s += (ri[k] - means[i]) * (rj[k] - means[j]);
            }
            let v = s / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(CovarianceMatrix {
        values: cov,
        source,
    })
}

/// Average ranks (1-based, ties averaged) of one row.
fn average_ranks(row: &[f64]) -> Vec<f64> {
    let l = row.len();
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| row[a].partial_cmp(&row[b]).expect("finite values"));
    let mut ranks = vec![0.0; l];
    let mut start = 0;
    while start < l {
        let mut end = start + 1;
        while end < l && row[order[end]] == row[order[start]] {
            end += 1;
        }
        // ranks start..end (1-based) share the run's mean rank
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mean_rank;
        }
        start = end;
    }
    ranks
}

/// Replaces each row with its Winsorized normal scores and restandardizes
/// to zero mean and unit sample variance.
///
/// Rows with no rank spread (all values equal) make correlation
/// undefined and are rejected.
pub fn apply_nonparanormal(
    emb: &EmbeddingMatrix,
    cfg: &NonparanormalConfig,
) -> Result<EmbeddingMatrix> {
    let l = emb.dim();
    let delta = cfg.delta(l)?;
    let n = emb.n_rows();
    let mut out = Matrix::zeros(n, l);
    for i in 0..n {
        let row = emb.row(i);
        if row.iter().all(|&v| v == row[0]) {
            return Err(Error::Validation(format!(
                "cannot rank-transform row {} ({:?}): all values equal",
                i,
                emb.utt_ids()[i]
            )));
        }
        let ranks = average_ranks(row);
        let scores = out.row_mut(i);
        for (k, &r) in ranks.iter().enumerate() {
            let f = (r / (l as f64 + 1.0)).clamp(delta, 1.0 - delta);
            scores[k] = std_normal_quantile(f);
        }
        let mean = scores.iter().sum::<f64>() / l as f64;
        let var = scores.iter().map(|&s| (s - mean) * (s - mean)).sum::<f64>() / (l as f64 - 1.0);
        if var <= 0.0 {
            return Err(Error::Validation(format!(
                "cannot rank-transform row {} ({:?}): zero rank spread",
                i,
                emb.utt_ids()[i]
            )));
        }
        let sd = var.sqrt();
        for s in scores.iter_mut() {
            *s = (*s - mean) / sd;
        }
    }
    EmbeddingMatrix::new(emb.utt_ids().to_vec(), out)
}

/// Rescales a covariance to unit diagonal.
pub fn to_correlation(cov: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    let n = cov.n();
    for i in 0..n {
        if cov.values[(i, i)] <= 0.0 {
            return Err(Error::Validation(format!(
                "degenerate variance at index {i}: diagonal entry {} is not positive",
                cov.values[(i, i)]
            )));
        }
    }
    let sd: Vec<f64> = (0..n).map(|i| cov.values[(i, i)].sqrt()).collect();
    let mut corr = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            corr[(i, j)] = if i == j {
                1.0
            } else {
                cov.values[(i, j)] / (sd[i] * sd[j])
            };
        }
    }
    Ok(CovarianceMatrix {
        values: corr,
        source: cov.source,
    })
}
