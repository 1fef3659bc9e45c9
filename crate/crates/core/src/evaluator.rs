//! Machine-vision proxy evaluation of reconstructed features: retrieval
//! metrics (rank-1/CMC, mAP), best-threshold verification accuracy, an
//! inter/intra discriminability statistic, and a deterministic 2-D PCA
//! projection for inspection exports.

use crate::error::{Error, Result};
use crate::metrics::mse_distance;
use crate::numcore::Matrix;

/// Retrieval evaluation summary. `cmc[r]` is the fraction of scored queries
/// whose first correct match appears within the top `r+1` ranked gallery
/// items, so the curve is non-decreasing and `cmc[0] == rank1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalReport {
    pub rank1: f64,
    pub cmc: Vec<f64>,
    pub map: f64,
    /// Queries that had at least one same-label gallery item.
    pub num_queries: usize,
    /// Queries skipped because no gallery item shares their label.
    pub num_excluded: usize,
}

/// Verification evaluation summary: the accuracy-maximizing distance
/// threshold (predict "same" iff distance <= threshold) and its accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub best_threshold: f64,
    pub accuracy: f64,
    pub num_pairs: usize,
}

/// Mean pairwise distances within and across classes. `ratio` is
/// `mean_inter / mean_intra`, absent when `mean_intra` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminabilityStats {
    pub mean_intra: f64,
    pub mean_inter: f64,
    pub ratio: Option<f64>,
}

/// Distance matrix: entry (i, j) is the MSE distance from query row i to
/// gallery row j.
pub fn pairwise_distances(queries: &Matrix, gallery: &Matrix) -> Result<Matrix> {
    if queries.cols() != gallery.cols() {
        return Err(Error::shape(format!(
            "queries have dimension {}, gallery {}",
            queries.cols(),
            gallery.cols()
        )));
    }
    let mut out = Matrix::zeros(queries.rows(), gallery.rows())?;
    for i in 0..queries.rows() {
        for j in 0..gallery.rows() {
            out.set(i, j, mse_distance(queries.row(i), gallery.row(j))?);
        }
    }
    Ok(out)
}

/// Gallery indices of one query sorted ascending by (distance, index).
fn ranked_gallery(distmat: &Matrix, query: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..distmat.cols()).collect();
    order.sort_by(|&a, &b| {
        distmat
            .get(query, a)
            .total_cmp(&distmat.get(query, b))
            .then(a.cmp(&b))
    });
    order
}

fn validate_retrieval_shapes(
    distmat: &Matrix,
    query_labels: &[u32],
    gallery_labels: &[u32],
) -> Result<()> {
    if distmat.rows() != query_labels.len() || distmat.cols() != gallery_labels.len() {
        return Err(Error::shape(format!(
            "distance matrix is {}x{}, labels are {}/{}",
            distmat.rows(),
            distmat.cols(),
            query_labels.len(),
            gallery_labels.len()
        )));
    }
    Ok(())
}

/// Rank-1 and the CMC curve up to `max_rank`. Queries with no same-label
/// gallery item are excluded from the averages; it is an error if every
/// query is excluded.
pub fn cmc_and_rank1(
    distmat: &Matrix,
    query_labels: &[u32],
    gallery_labels: &[u32],
    max_rank: usize,
) -> Result<(f64, Vec<f64>)> {
    let report = evaluate_retrieval(distmat, query_labels, gallery_labels, max_rank)?;
    Ok((report.rank1, report.cmc))
}

/// Mean average precision over queries with at least one relevant item.
pub fn mean_ap(distmat: &Matrix, query_labels: &[u32], gallery_labels: &[u32]) -> Result<f64> {
    let report = evaluate_retrieval(distmat, query_labels, gallery_labels, 1)?;
    Ok(report.map)
}

/// Full retrieval evaluation: CMC (to `max_rank`, clamped to the gallery
/// size), rank-1, and mAP in one pass.
pub fn evaluate_retrieval(
    distmat: &Matrix,
    query_labels: &[u32],
    gallery_labels: &[u32],
    max_rank: usize,
) -> Result<RetrievalReport> {
    validate_retrieval_shapes(distmat, query_labels, gallery_labels)?;
    if max_rank == 0 {
        return Err(Error::domain("max_rank must be >= 1"));
    }
    let max_rank = max_rank.min(gallery_labels.len());
    let mut first_match_counts = vec![0usize; max_rank];
    let mut ap_sum = 0.0;
    let mut num_queries = 0usize;
    let mut num_excluded = 0usize;

    for (q, &qlabel) in query_labels.iter().enumerate() {
        let relevant_total = gallery_labels.iter().filter(|&&g| g == qlabel).count();
        if relevant_total == 0 {
            num_excluded += 1;
            continue;
        }
        num_queries += 1;
        let order = ranked_gallery(distmat, q);
        let mut hits = 0usize;
        let mut precision_sum = 0.0;
        let mut first_match: Option<usize> = None;
        for (rank, &g) in order.iter().enumerate() {
            if gallery_labels[g] == qlabel {
                hits += 1;
                precision_sum += hits as f64 / (rank + 1) as f64;
                if first_match.is_none() {
                    first_match = Some(rank);
                }
            }
        }
        ap_sum += precision_sum / relevant_total as f64;
        if let Some(r) = first_match {
            if r < max_rank {
                first_match_counts[r] += 1;
            }
        }
    }

    if num_queries == 0 {
        return Err(Error::Evaluation(
            "no query has a same-label gallery item".into(),
        ));
    }

    let mut cmc = Vec::with_capacity(max_rank);
    let mut acc = 0usize;
    for count in first_match_counts {
        acc += count;
        cmc.push(acc as f64 / num_queries as f64);
    }
    Ok(RetrievalReport {
        rank1: cmc[0],
        cmc,
        map: ap_sum / num_queries as f64,
        num_queries,
        num_excluded,
    })
}

/// Best-threshold verification accuracy. Sweeps thresholds over the
/// midpoints of adjacent sorted distinct distances plus one candidate below
/// the minimum and one above the maximum; ties by accuracy resolve to the
/// smallest threshold.
pub fn verification_accuracy(pos_dists: &[f64], neg_dists: &[f64]) -> Result<VerificationReport> {
    if pos_dists.is_empty() || neg_dists.is_empty() {
        return Err(Error::data(
            "verification needs at least one positive and one negative pair",
        ));
    }
    let mut all: Vec<f64> = pos_dists.iter().chain(neg_dists.iter()).copied().collect();
    if all.iter().any(|d| !d.is_finite()) {
        return Err(Error::numeric("non-finite distance in verification input"));
    }
    all.sort_by(|a, b| a.total_cmp(b));
    all.dedup();

    let mut candidates = Vec::with_capacity(all.len() + 1);
    candidates.push(all[0] - 1.0);
    for w in all.windows(2) {
        candidates.push(0.5 * (w[0] + w[1]));
    }
    candidates.push(all[all.len() - 1] + 1.0);

    let total = (pos_dists.len() + neg_dists.len()) as f64;
    let mut best_threshold = candidates[0];
    let mut best_accuracy = -1.0;
    for &t in &candidates {
        let tp = pos_dists.iter().filter(|&&d| d <= t).count();
        let tn = neg_dists.iter().filter(|&&d| d > t).count();
        let acc = (tp + tn) as f64 / total;
        if acc > best_accuracy {
            best_accuracy = acc;
            best_threshold = t;
        }
    }
    Ok(VerificationReport {
        best_threshold,
        accuracy: best_accuracy,
        num_pairs: pos_dists.len() + neg_dists.len(),
    })
}

/// Mean MSE distance over all same-class pairs and all cross-class pairs.
/// Needs at least two classes and two samples per class.
pub fn discriminability_stats(features: &Matrix, labels: &[u32]) -> Result<DiscriminabilityStats> {
    if features.rows() != labels.len() {
        return Err(Error::shape(format!(
            "{} feature rows but {} labels",
            features.rows(),
            labels.len()
        )));
    }
    let mut counts = std::collections::BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    if counts.len() < 2 {
        return Err(Error::data("discriminability needs at least 2 classes"));
    }
    if let Some((label, _)) = counts.iter().find(|(_, &c)| c < 2) {
        return Err(Error::data(format!(
            "class {label} has fewer than 2 samples"
        )));
    }
    let mut intra_sum = 0.0;
    let mut intra_count = 0usize;
    let mut inter_sum = 0.0;
    let mut inter_count = 0usize;
    for i in 0..features.rows() {
        for j in (i + 1)..features.rows() {
            let d = mse_distance(features.row(i), features.row(j))?;
            if labels[i] == labels[j] {
                intra_sum += d;
                intra_count += 1;
            } else {
                inter_sum += d;
                inter_count += 1;
            }
        }
    }
    let mean_intra = intra_sum / intra_count as f64;
    let mean_inter = inter_sum / inter_count as f64;
    let ratio = if mean_intra > 0.0 {
        Some(mean_inter / mean_intra)
    } else {
        None
    };
    Ok(DiscriminabilityStats {
        mean_intra,
        mean_inter,
        ratio,
    })
}

const PCA_ITERATIONS: usize = 200;
const PCA_TOLERANCE: f64 = 1e-10;

/// Deterministic 2-D PCA projection: center the rows, extract the top two
/// principal directions by power iteration with deflation (fixed start
/// vector, fixed iteration budget), and project. Each direction is
/// sign-canonical: its largest-magnitude component is positive. Rank-0 data
/// projects to zeros.
pub fn pca_project_2d(features: &Matrix) -> Result<Matrix> {
    if features.rows() < 3 {
        return Err(Error::data(format!(
            "projection needs at least 3 rows, got {}",
            features.rows()
        )));
    }
    let (centered, _mean) = center_rows(features)?;
    let cov = covariance(&centered)?;
    let (directions, _values) = top_directions(&cov, 2);
    let mut out = Matrix::zeros(features.rows(), 2)?;
    for r in 0..centered.rows() {
        for (c, dir) in directions.iter().enumerate() {
            let mut acc = 0.0;
            for k in 0..centered.cols() {
                acc += centered.get(r, k) * dir[k];
            }
            out.set(r, c, acc);
        }
    }
    Ok(out)
}

/// Center rows to zero mean; returns (centered, mean).
pub fn center_rows(features: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let n = features.rows();
    let mut mean = features.column_sums();
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut centered = features.clone();
    for r in 0..n {
        let row = centered.row_mut(r);
        for (v, m) in row.iter_mut().zip(mean.iter()) {
            *v -= m;
        }
    }
    Ok((centered, mean))
}

/// Sample covariance `X^T X / (n - 1)` of centered rows.
pub fn covariance(centered: &Matrix) -> Result<Matrix> {
    let n = centered.rows();
    let mut cov = centered.transpose().matmul(centered)?;
    let scale = 1.0 / (n as f64 - 1.0);
    for v in cov.data_mut() {
        *v *= scale;
    }
    Ok(cov)
}

/// Top-`k` eigenpairs of a symmetric PSD matrix by power iteration with
/// deflation. Returns (directions, eigenvalues); degenerate directions
/// (eigenvalue ~ 0) come back as zero vectors.
pub fn top_directions(cov: &Matrix, k: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let dim = cov.rows();
    let mut deflated = cov.clone();
    let mut directions = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for _ in 0..k {
        // fixed, documented start vector: 1/(i+1), normalized
        let mut v: Vec<f64> = (0..dim).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        normalize(&mut v);
        let mut degenerate = false;
        for _ in 0..PCA_ITERATIONS {
            let mut next = mat_vec(&deflated, &v);
            let norm = l2(&next);
            if norm < 1e-300 {
                degenerate = true;
                break;
            }
            for x in next.iter_mut() {
                *x /= norm;
            }
            let delta: f64 = next
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            v = next;
            if delta < PCA_TOLERANCE {
                break;
            }
        }
        if degenerate {
            directions.push(vec![0.0; dim]);
            values.push(0.0);
            continue;
        }
        let cv = mat_vec(&deflated, &v);
        let lambda: f64 = v.iter().zip(cv.iter()).map(|(a, b)| a * b).sum();
        canonicalize_sign(&mut v);
        // deflate: remove this component
        for i in 0..dim {
            for j in 0..dim {
                let val = deflated.get(i, j) - lambda * v[i] * v[j];
                deflated.set(i, j, val);
            }
        }
        directions.push(v);
        values.push(lambda);
    }
    (directions, values)
}

fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.rows()];
    for i in 0..m.rows() {
        let mut acc = 0.0;
        for j in 0..m.cols() {
            acc += m.get(i, j) * v[j];
        }
        out[i] = acc;
    }
    out
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = l2(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Flip the vector so its largest-magnitude component (first such index on
/// ties) is positive.
fn canonicalize_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}
