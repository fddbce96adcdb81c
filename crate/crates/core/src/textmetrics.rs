//! BLEU and point-biserial correlation.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BleuError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("{hypotheses} hypotheses but {references} references")]
    LengthMismatch { hypotheses: usize, references: usize },
    #[error("reference line {0} is empty")]
    EmptyReference(usize),
}

/// Sufficient statistics of BLEU. Shards merge by adding counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl std::ops::AddAssign for BleuStats {
    fn add_assign(&mut self, o: BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += o.matches[n];
            self.totals[n] += o.totals[n];
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
    }
}

fn ngram_counts<S: AsRef<str>>(toks: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

impl BleuStats {
    /// Clipped n-gram statistics of one sentence pair.
    pub fn sentence<S: AsRef<str>, T: AsRef<str>>(hyp: &[S], reference: &[T]) -> BleuStats {
        let mut st = BleuStats { hyp_len: hyp.len() as u64, ref_len: reference.len() as u64, ..Default::default() };
        for n in 1..=MAX_ORDER {
            let h = ngram_counts(hyp, n);
            let r = ngram_counts(reference, n);
            st.totals[n - 1] = hyp.len().saturating_sub(n - 1) as u64;
            st.matches[n - 1] = h.iter().map(|(g, c)| (*c).min(*r.get(g).unwrap_or(&0))).sum();
        }
        st
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.hyp_len == 0 {
            0.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp().min(1.0)
        }
    }

    /// Unsmoothed if `smooth` is false; otherwise add-one smoothing on the
    /// precisions of order two and up.
    pub fn score(&self, smooth: bool) -> BleuScore {
        let mut precisions = [0.0; MAX_ORDER];
        for n in 0..MAX_ORDER {
            let (m, t) = (self.matches[n] as f64, self.totals[n] as f64);
            precisions[n] = if smooth && n > 0 {
                (m + 1.0) / (t + 1.0)
            } else if t > 0.0 {
                m / t
            } else {
                0.0
            };
        }
        let bp = self.brevity_penalty();
        let score = if precisions.iter().all(|&p| p > 0.0) {
            let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
            100.0 * bp * log_mean.exp()
        } else {
            0.0
        };
        BleuScore { score, precisions, brevity_penalty: bp, hyp_len: self.hyp_len, ref_len: self.ref_len }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// In [0, 100].
    pub score: f64,
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

pub fn tokenize(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}

/// Corpus-level BLEU-4, unsmoothed.
pub fn bleu<S: AsRef<str>, T: AsRef<str>>(hypotheses: &[Vec<S>], references: &[Vec<T>]) -> Result<BleuScore, BleuError> {
    Ok(corpus_stats(hypotheses, references)?.score(false))
}

pub fn corpus_stats<S: AsRef<str>, T: AsRef<str>>(hypotheses: &[Vec<S>], references: &[Vec<T>]) -> Result<BleuStats, BleuError> {
    if hypotheses.len() != references.len() {
        return Err(BleuError::LengthMismatch { hypotheses: hypotheses.len(), references: references.len() });
    }
    if hypotheses.is_empty() {
        return Err(BleuError::EmptyCorpus);
    }
    let mut total = BleuStats::default();
    for (i, (h, r)) in hypotheses.iter().zip(references).enumerate() {
        if r.is_empty() {
            return Err(BleuError::EmptyReference(i + 1));
        }
        total += BleuStats::sentence(h, r);
    }
    Ok(total)
}

/// Sentence-level BLEU with add-one smoothing for n >= 2.
pub fn sentence_bleu<S: AsRef<str>, T: AsRef<str>>(hyp: &[S], reference: &[T]) -> Result<BleuScore, BleuError> {
    if reference.is_empty() {
        return Err(BleuError::EmptyReference(1));
    }
    Ok(BleuStats::sentence(hyp, reference).score(true))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BiserialError {
    #[error("{values} values but {labels} labels")]
    LengthMismatch { values: usize, labels: usize },
    #[error("both label classes need at least one member")]
    DegenerateGroups,
    #[error("metric values have zero variance")]
    ZeroVariance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiserialResult {
    pub r: f64,
    pub n1: usize,
    pub n0: usize,
    pub mean1: f64,
    pub mean0: f64,
    /// Population standard deviation of all values.
    pub std_dev: f64,
}

/// Point-biserial correlation of `values` with dichotomous `labels`.
pub fn point_biserial(values: &[f64], labels: &[bool]) -> Result<BiserialResult, BiserialError> {
    if values.len() != labels.len() {
        return Err(BiserialError::LengthMismatch { values: values.len(), labels: labels.len() });
    }
    let n1 = labels.iter().filter(|&&l| l).count();
    let n0 = labels.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(BiserialError::DegenerateGroups);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let s = var.sqrt();
    if s == 0.0 {
        return Err(BiserialError::ZeroVariance);
    }
    let group_mean = |want: bool, count: usize| {
        values.iter().zip(labels).filter(|(_, &l)| l == want).map(|(v, _)| v).sum::<f64>() / count as f64
    };
    let (mean1, mean0) = (group_mean(true, n1), group_mean(false, n0));
    let r = (mean1 - mean0) / s * ((n1 as f64 * n0 as f64) / (n * n)).sqrt();
    Ok(BiserialResult { r: r.clamp(-1.0, 1.0), n1, n0, mean1, mean0, std_dev: s })
}

/// Pearson correlation, `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.is_empty() {
        return None;
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}
