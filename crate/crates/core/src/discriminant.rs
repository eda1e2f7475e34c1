//! Two-group linear discriminant analysis with covariance-homogeneity and
//! separation tests, discriminant scoring, a centroid-average cutoff, and
//! classification.

use crate::error::{Error, Result};
use crate::linalg::{chol_log_det, chol_solve, cholesky};
use crate::real::{real, real_of_usize, Real};
use crate::tails::chi_square_upper;

/// The two paper-type groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    Quantitative,
    NonQuantitative,
}

impl Group {
    fn index(self) -> usize {
        match self {
            Group::Quantitative => 0,
            Group::NonQuantitative => 1,
        }
    }

    fn from_index(i: usize) -> Group {
        if i == 0 {
            Group::Quantitative
        } else {
            Group::NonQuantitative
        }
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Group::Quantitative => write!(f, "quantitative"),
            Group::NonQuantitative => write!(f, "non-quantitative"),
        }
    }
}

/// Group labels, one per observation; both groups need at least two members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    labels: Vec<Group>,
}

impl Grouping {
    pub fn new(labels: Vec<Group>) -> Result<Self> {
        let n_q = labels.iter().filter(|g| g.index() == 0).count();
        let n_nq = labels.len() - n_q;
        if n_q < 2 || n_nq < 2 {
            return Err(Error::Validation(format!(
                "both groups need at least 2 members (quantitative: {n_q}, non-quantitative: {n_nq})"
            )));
        }
        Ok(Grouping { labels })
    }

    pub fn labels(&self) -> &[Group] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// `n x d` feature matrix with named columns. The paper's usage is the
/// three columns B (pages blank), L (lines per page), W (words per line).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<F> {
    rows: Vec<Vec<F>>,
    names: Vec<String>,
}

impl<F: Real> FeatureMatrix<F> {
    pub fn new(names: Vec<String>, rows: Vec<Vec<F>>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Validation("need at least one feature column".into()));
        }
        if rows.len() < 4 {
            return Err(Error::Validation(format!(
                "need at least 4 observations, got {}",
                rows.len()
            )));
        }
        let d = names.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} values, expected {d}",
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "row {} contains a missing or non-finite value",
                    i + 1
                )));
            }
        }
        Ok(FeatureMatrix { rows, names })
    }

    /// The B/L/W trio used throughout the booklet analysis.
    pub fn blw(b: &[F], l: &[F], w: &[F]) -> Result<Self> {
        if b.len() != l.len() || l.len() != w.len() {
            return Err(Error::DimensionMismatch(
                "B, L, W columns must have equal length".into(),
            ));
        }
        let rows = b
            .iter()
            .zip(l)
            .zip(w)
            .map(|((&bv, &lv), &wv)| vec![bv, lv, wv])
            .collect();
        FeatureMatrix::new(vec!["B".into(), "L".into(), "W".into()], rows)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.rows[i]
    }
}

/// A fitted two-group discriminant function.
///
/// Scores are taken on raw feature values with the standardized
/// coefficients (this is how the booklet analysis computes them); the
/// cutoff is the average of the two group centroids on that same scale.
#[derive(Debug, Clone)]
pub struct LdaModel<F> {
    pub feature_names: Vec<String>,
    pub group_means: [Vec<F>; 2],
    pub pooled_cov: Vec<F>,
    pub raw_coefficients: Vec<F>,
    pub standardized_coefficients: Vec<F>,
    pub centroids: [F; 2],
    pub cutoff: F,
    /// Set when the group means coincide and no usable direction exists.
    pub degenerate: bool,
}

impl<F: Real> LdaModel<F> {
    pub fn score(&self, record: &[F]) -> F {
        score(&self.standardized_coefficients, record)
    }

    /// `score < cutoff` picks the group whose centroid sits below the
    /// cutoff; ties go to the other side.
    pub fn classify(&self, record: &[F]) -> Group {
        let s = self.score(record);
        let (below, above) = if self.centroids[0] <= self.centroids[1] {
            (Group::Quantitative, Group::NonQuantitative)
        } else {
            (Group::NonQuantitative, Group::Quantitative)
        };
        if s < self.cutoff {
            below
        } else {
            above
        }
    }
}

/// Dot product of discriminant coefficients with a record.
pub fn score<F: Real>(coefficients: &[F], record: &[F]) -> F {
    assert_eq!(
        coefficients.len(),
        record.len(),
        "coefficient and record lengths differ"
    );
    coefficients
        .iter()
        .zip(record)
        .map(|(&c, &x)| c * x)
        .fold(F::zero(), |a, t| a + t)
}

/// The bare-cutoff rule: quantitative iff the score is strictly below the
/// cutoff (ties are non-quantitative).
pub fn classify_by_cutoff<F: Real>(score: F, cutoff: F) -> Group {
    if score < cutoff {
        Group::Quantitative
    } else {
        Group::NonQuantitative
    }
}

fn split_rows<'a, F: Real>(
    features: &'a FeatureMatrix<F>,
    grouping: &Grouping,
) -> Result<[Vec<&'a [F]>; 2]> {
    if features.n() != grouping.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows but {} group labels",
            features.n(),
            grouping.len()
        )));
    }
    let mut out: [Vec<&[F]>; 2] = [Vec::new(), Vec::new()];
    for (i, g) in grouping.labels().iter().enumerate() {
        out[g.index()].push(features.row(i));
    }
    Ok(out)
}

fn mean_vector<F: Real>(rows: &[&[F]], d: usize) -> Vec<F> {
    let mut m = vec![F::zero(); d];
    for row in rows {
        for (mj, &v) in m.iter_mut().zip(*row) {
            *mj += v;
        }
    }
    let n = real_of_usize::<F>(rows.len());
    for mj in &mut m {
        *mj = *mj / n;
    }
    m
}

/// Sample covariance with an `n - 1` denominator.
fn covariance<F: Real>(rows: &[&[F]], mean: &[F], d: usize) -> Vec<F> {
    let mut s = vec![F::zero(); d * d];
    for row in rows {
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in 0..d {
                s[a * d + b] += da * (row[b] - mean[b]);
            }
        }
    }
    let denom = real_of_usize::<F>(rows.len() - 1);
    for v in &mut s {
        *v = *v / denom;
    }
    s
}

/// Fits the discriminant direction `S_w^{-1}(m_1 - m_2)`, standardizes it to
/// unit pooled within-group score variance, and fixes the sign so the first
/// coefficient is non-negative.
pub fn fit_lda<F: Real>(features: &FeatureMatrix<F>, grouping: &Grouping) -> Result<LdaModel<F>> {
    let d = features.dim();
    let groups = split_rows(features, grouping)?;
    let means = [
        mean_vector(&groups[0], d),
        mean_vector(&groups[1], d),
    ];
    let covs = [
        covariance(&groups[0], &means[0], d),
        covariance(&groups[1], &means[1], d),
    ];
    let n1 = groups[0].len();
    let n2 = groups[1].len();
    let denom = real_of_usize::<F>(n1 + n2 - 2);
    let mut pooled = vec![F::zero(); d * d];
    for idx in 0..d * d {
        pooled[idx] = (real_of_usize::<F>(n1 - 1) * covs[0][idx]
            + real_of_usize::<F>(n2 - 1) * covs[1][idx])
            / denom;
    }

    let l = cholesky(&pooled, d).map_err(|k| {
        Error::Singular(format!(
            "pooled within-group covariance is singular at column '{}' (collinear features)",
            features.names()[k]
        ))
    })?;
    let diff: Vec<F> = means[0]
        .iter()
        .zip(&means[1])
        .map(|(&a, &b)| a - b)
        .collect();
    let raw = chol_solve(&l, d, &diff);

    // a' S_w a = a . (m1 - m2): the within-group variance of raw scores.
    let quad = raw
        .iter()
        .zip(&diff)
        .map(|(&a, &dv)| a * dv)
        .fold(F::zero(), |acc, t| acc + t)
        .max(F::zero());
    let scale = quad.sqrt();

    let tiny = real::<F>(1e-12);
    let (standardized, centroids, cutoff, degenerate) = if scale <= tiny {
        (vec![F::zero(); d], [F::zero(); 2], F::zero(), true)
    } else {
        let mut c: Vec<F> = raw
            .iter()
            .enumerate()
            .map(|(j, &a)| a * pooled[j * d + j].sqrt() / scale)
            .collect();
        if let Some(first) = c.iter().find(|v| v.abs() > tiny) {
            if *first < F::zero() {
                for v in &mut c {
                    *v = -*v;
                }
            }
        }
        let centroids = [score(&c, &means[0]), score(&c, &means[1])];
        let cutoff = (centroids[0] + centroids[1]) * real(0.5);
        (c, centroids, cutoff, false)
    };

    Ok(LdaModel {
        feature_names: features.names().to_vec(),
        group_means: means,
        pooled_cov: pooled,
        raw_coefficients: raw,
        standardized_coefficients: standardized,
        centroids,
        cutoff,
        degenerate,
    })
}

/// Box's test of covariance-matrix homogeneity (chi-square approximation).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxMResult<F> {
    pub m: F,
    pub chi2: F,
    pub df: u32,
    pub p: F,
}

pub fn box_m<F: Real>(features: &FeatureMatrix<F>, grouping: &Grouping) -> Result<BoxMResult<F>> {
    let d = features.dim();
    let groups = split_rows(features, grouping)?;
    let g = 2usize;
    for (gi, rows) in groups.iter().enumerate() {
        if rows.len() <= d {
            return Err(Error::Validation(format!(
                "group {} has {} rows; Box's M needs more rows than features ({d})",
                Group::from_index(gi),
                rows.len()
            )));
        }
    }
    let n = features.n();
    let mut pooled = vec![F::zero(); d * d];
    let mut group_log_dets = Vec::with_capacity(g);
    for (gi, rows) in groups.iter().enumerate() {
        let mean = mean_vector(rows, d);
        let cov = covariance(rows, &mean, d);
        let l = cholesky(&cov, d).map_err(|_| {
            Error::Singular(format!(
                "covariance of group {} is singular",
                Group::from_index(gi)
            ))
        })?;
        group_log_dets.push((rows.len(), chol_log_det(&l, d)));
        let w = real_of_usize::<F>(rows.len() - 1);
        for idx in 0..d * d {
            pooled[idx] += w * cov[idx];
        }
    }
    let pooled_denom = real_of_usize::<F>(n - g);
    for v in &mut pooled {
        *v = *v / pooled_denom;
    }
    let lp = cholesky(&pooled, d)
        .map_err(|_| Error::Singular("pooled covariance is singular".into()))?;
    let log_det_pooled = chol_log_det(&lp, d);

    let mut m = pooled_denom * log_det_pooled;
    for &(ng, ld) in &group_log_dets {
        m = m - real_of_usize::<F>(ng - 1) * ld;
    }
    let m = m.max(F::zero());

    let df = (d * (d + 1) * (g - 1) / 2) as u32;
    let dd = d as f64;
    let sum_inv: f64 = group_log_dets
        .iter()
        .map(|&(ng, _)| 1.0 / (ng as f64 - 1.0))
        .sum::<f64>()
        - 1.0 / (n as f64 - g as f64);
    let c1 = sum_inv * (2.0 * dd * dd + 3.0 * dd - 1.0) / (6.0 * (dd + 1.0) * (g as f64 - 1.0));
    let chi2 = m * real(1.0 - c1);
    let p = chi_square_upper(chi2, df);
    Ok(BoxMResult { m, chi2, df, p })
}

/// Wilks' lambda `det(W)/det(T)` with Bartlett's chi-square approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct WilksResult<F> {
    pub lambda: F,
    pub chi2: F,
    pub df: u32,
    pub p: F,
}

pub fn wilks<F: Real>(features: &FeatureMatrix<F>, grouping: &Grouping) -> Result<WilksResult<F>> {
    let d = features.dim();
    let groups = split_rows(features, grouping)?;
    let g = 2usize;
    let n = features.n();

    let all_rows: Vec<&[F]> = (0..n).map(|i| features.row(i)).collect();
    let grand_mean = mean_vector(&all_rows, d);
    let mut total = vec![F::zero(); d * d];
    for row in &all_rows {
        for a in 0..d {
            let da = row[a] - grand_mean[a];
            for b in 0..d {
                total[a * d + b] += da * (row[b] - grand_mean[b]);
            }
        }
    }

    let mut within = vec![F::zero(); d * d];
    for rows in &groups {
        let mean = mean_vector(rows, d);
        for row in rows {
            for a in 0..d {
                let da = row[a] - mean[a];
                for b in 0..d {
                    within[a * d + b] += da * (row[b] - mean[b]);
                }
            }
        }
    }

    let lw = cholesky(&within, d)
        .map_err(|_| Error::Singular("within-group scatter is singular".into()))?;
    let lt = cholesky(&total, d)
        .map_err(|_| Error::Singular("total scatter is singular".into()))?;
    let lambda = (chol_log_det(&lw, d) - chol_log_det(&lt, d))
        .exp()
        .min(F::one());

    let df = (d * (g - 1)) as u32;
    let factor = real::<F>(n as f64 - 1.0 - (d as f64 + g as f64) / 2.0);
    let chi2 = (-factor * lambda.ln()).max(F::zero());
    let p = chi_square_upper(chi2, df);
    Ok(WilksResult {
        lambda,
        chi2,
        df,
        p,
    })
}

/// Actual-by-predicted counts with row percentages; rows and columns are
/// ordered quantitative first.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix<F> {
    pub counts: [[u32; 2]; 2],
    pub row_percentages: [[F; 2]; 2],
    pub overall_accuracy: F,
}

impl<F: Real> ConfusionMatrix<F> {
    pub fn from_counts(counts: [[u32; 2]; 2]) -> Self {
        let n: u32 = counts.iter().flatten().sum();
        let mut row_percentages = [[F::zero(); 2]; 2];
        for (i, row) in counts.iter().enumerate() {
            let total: u32 = row.iter().sum();
            if total > 0 {
                for (j, &c) in row.iter().enumerate() {
                    row_percentages[i][j] =
                        real::<F>(100.0) * real::<F>(c as f64) / real::<F>(total as f64);
                }
            }
        }
        let correct = counts[0][0] + counts[1][1];
        let overall_accuracy = if n > 0 {
            real::<F>(correct as f64) / real::<F>(n as f64)
        } else {
            F::zero()
        };
        ConfusionMatrix {
            counts,
            row_percentages,
            overall_accuracy,
        }
    }

    pub fn n(&self) -> u32 {
        self.counts.iter().flatten().sum()
    }
}

/// Classifies every observation with the fitted model and tabulates it
/// against the actual grouping.
pub fn confusion<F: Real>(
    model: &LdaModel<F>,
    features: &FeatureMatrix<F>,
    grouping: &Grouping,
) -> Result<ConfusionMatrix<F>> {
    if features.n() != grouping.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows but {} group labels",
            features.n(),
            grouping.len()
        )));
    }
    let mut counts = [[0u32; 2]; 2];
    for (i, actual) in grouping.labels().iter().enumerate() {
        let predicted = model.classify(features.row(i));
        counts[actual.index()][predicted.index()] += 1;
    }
    Ok(ConfusionMatrix::from_counts(counts))
}
