//! Design matrices for the mixed model: a dense fixed-effect matrix with a
//! leading intercept column, and a cluster indicator map standing in for
//! the one-hot random-effect matrix.

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::real::{real, Real};

use super::MixedModelSpec;

/// `n x p` fixed-effect matrix; the first column is all ones.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedDesign<F> {
    values: Vec<F>,
    n: usize,
    p: usize,
    labels: Vec<String>,
}

impl<F: Real> FixedDesign<F> {
    /// `values` is row-major `n x p`. Validates the intercept column, the
    /// shape, and full column rank.
    pub fn new(n: usize, p: usize, values: Vec<F>, labels: Vec<String>) -> Result<Self> {
        if values.len() != n * p || labels.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "expected {n}x{p} values with {p} labels"
            )));
        }
        if n < p {
            return Err(Error::Validation(format!(
                "need at least as many rows as columns (n = {n}, p = {p})"
            )));
        }
        if p == 0 {
            return Err(Error::Validation("design needs at least one column".into()));
        }
        for i in 0..n {
            if values[i * p] != F::one() {
                return Err(Error::Validation(format!(
                    "first design column must be the intercept (row {i} is not 1)"
                )));
            }
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "design contains a non-finite value: {bad}"
            )));
        }
        let design = FixedDesign {
            values,
            n,
            p,
            labels,
        };
        // Full column rank via the Gram matrix.
        let mut gram = vec![F::zero(); p * p];
        for i in 0..n {
            let row = design.row(i);
            for a in 0..p {
                for b in 0..p {
                    gram[a * p + b] += row[a] * row[b];
                }
            }
        }
        if let Err(k) = cholesky(&gram, p) {
            return Err(Error::Validation(format!(
                "design columns are collinear (column '{}')",
                design.labels[k]
            )));
        }
        Ok(design)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.values[i * self.p..(i + 1) * self.p]
    }
}

/// Cluster membership, one cluster per row (equivalent to an `n x q`
/// indicator matrix with a single 1 in each row).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomDesign {
    cluster_of: Vec<usize>,
    labels: Vec<String>,
}

impl RandomDesign {
    pub fn new(cluster_of: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        let q = labels.len();
        if q == 0 {
            return Err(Error::Validation("no clusters".into()));
        }
        if let Some(&bad) = cluster_of.iter().find(|&&c| c >= q) {
            return Err(Error::Validation(format!(
                "cluster index {bad} out of range for {q} clusters"
            )));
        }
        let mut seen = vec![false; q];
        for &c in &cluster_of {
            seen[c] = true;
        }
        if let Some(empty) = seen.iter().position(|&s| !s) {
            return Err(Error::Validation(format!(
                "cluster '{}' has no rows",
                labels[empty]
            )));
        }
        Ok(RandomDesign { cluster_of, labels })
    }

    pub fn n(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn q(&self) -> usize {
        self.labels.len()
    }

    pub fn cluster_of(&self, row: usize) -> usize {
        self.cluster_of[row]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Long-format input for [`build_design`]: a count response plus named
/// numeric and factor columns, all of equal length.
#[derive(Debug, Clone, Default)]
pub struct RegressionData<F> {
    pub response: Vec<u32>,
    pub numeric: IndexMap<String, Vec<F>>,
    pub factors: IndexMap<String, Vec<String>>,
}

impl<F: Real> RegressionData<F> {
    pub fn new(response: Vec<u32>) -> Self {
        RegressionData {
            response,
            numeric: IndexMap::new(),
            factors: IndexMap::new(),
        }
    }

    pub fn with_numeric(mut self, name: impl Into<String>, values: Vec<F>) -> Self {
        self.numeric.insert(name.into(), values);
        self
    }

    pub fn with_factor(mut self, name: impl Into<String>, levels: Vec<String>) -> Self {
        self.factors.insert(name.into(), levels);
        self
    }
}

/// Assembles `(X, Z, y)` from named columns: intercept plus the requested
/// covariates, cluster indicators in order of first appearance, and the
/// response checked against the truncation bound.
pub fn build_design<F: Real>(
    data: &RegressionData<F>,
    spec: &MixedModelSpec<F>,
) -> Result<(FixedDesign<F>, RandomDesign, Vec<u32>)> {
    let n = data.response.len();
    if n == 0 {
        return Err(Error::Validation("dataset has no rows".into()));
    }

    for (i, name) in spec.covariate_names.iter().enumerate() {
        if spec.covariate_names[..i].contains(name) {
            return Err(Error::Validation(format!("duplicate covariate '{name}'")));
        }
    }
    if spec.covariate_names.contains(&spec.cluster_variable) {
        return Err(Error::Validation(format!(
            "cluster variable '{}' cannot also be a covariate",
            spec.cluster_variable
        )));
    }

    let r = spec.bound.value();
    if let Some((row, &bad)) = data
        .response
        .iter()
        .enumerate()
        .find(|(_, &v)| v > r)
    {
        return Err(Error::Validation(format!(
            "row {}: response {bad} exceeds the truncation bound {r}",
            row + 1
        )));
    }

    let p = spec.covariate_names.len() + 1;
    let mut values = Vec::with_capacity(n * p);
    let mut columns: Vec<&[F]> = Vec::with_capacity(spec.covariate_names.len());
    for name in &spec.covariate_names {
        let col = data
            .numeric
            .get(name)
            .ok_or_else(|| Error::Validation(format!("unknown covariate column '{name}'")))?;
        if col.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "column '{name}' has {} rows, expected {n}",
                col.len()
            )));
        }
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            return Err(Error::Validation(format!(
                "covariate '{name}' is constant and collinear with the intercept"
            )));
        }
        columns.push(col);
    }
    for i in 0..n {
        values.push(F::one());
        for col in &columns {
            values.push(col[i]);
        }
    }
    let mut labels = vec!["intercept".to_string()];
    labels.extend(spec.covariate_names.iter().cloned());
    let x = FixedDesign::new(n, p, values, labels)?;

    let factor = data.factors.get(&spec.cluster_variable).ok_or_else(|| {
        Error::Validation(format!(
            "unknown cluster column '{}'",
            spec.cluster_variable
        ))
    })?;
    if factor.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "cluster column '{}' has {} rows, expected {n}",
            spec.cluster_variable,
            factor.len()
        )));
    }
    let mut level_index: IndexMap<&str, usize> = IndexMap::new();
    let mut cluster_of = Vec::with_capacity(n);
    for level in factor {
        let next = level_index.len();
        let idx = *level_index.entry(level.as_str()).or_insert(next);
        cluster_of.push(idx);
    }
    let labels: Vec<String> = level_index.keys().map(|s| s.to_string()).collect();
    let z = RandomDesign::new(cluster_of, labels)?;

    Ok((x, z, data.response.clone()))
}

/// Initial intercept on the log scale: `ln(xbar)` clamped into (-10, 10).
pub(crate) fn initial_intercept<F: Real>(y: &[u32]) -> F {
    let sum: u64 = y.iter().map(|&v| v as u64).sum();
    let xbar = real::<F>(sum as f64) / real::<F>(y.len() as f64);
    if xbar <= F::zero() {
        return real(-10.0);
    }
    num_traits::clamp(xbar.ln(), real(-10.0), real(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::TruncationBound;

    fn spec(cluster: &str, covariates: &[&str]) -> MixedModelSpec<f64> {
        MixedModelSpec::new(
            TruncationBound::new(25),
            cluster,
            covariates.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn toy_data(n: usize) -> RegressionData<f64> {
        let response: Vec<u32> = (0..n).map(|i| (i % 7) as u32).collect();
        let lines: Vec<f64> = (0..n).map(|i| 15.0 + (i % 10) as f64).collect();
        let words: Vec<f64> = (0..n).map(|i| 5.0 + (i % 4) as f64 * 0.5).collect();
        let paper: Vec<String> = (0..n)
            .map(|i| if i % 2 == 0 { "Q" } else { "NQ" }.to_string())
            .collect();
        let student: Vec<String> = (0..n).map(|i| format!("s{i:04}")).collect();
        RegressionData::new(response)
            .with_numeric("lines_per_page", lines)
            .with_numeric("words_per_line", words)
            .with_factor("paper_type", paper)
            .with_factor("student", student)
    }

    #[test]
    fn two_level_cluster_dimensions() {
        let data = toy_data(200);
        let (x, z, y) = build_design(
            &data,
            &spec("paper_type", &["lines_per_page", "words_per_line"]),
        )
        .unwrap();
        assert_eq!((x.n(), x.p()), (200, 3));
        assert_eq!((z.n(), z.q()), (200, 2));
        assert_eq!(y.len(), 200);
        assert_eq!(x.labels()[0], "intercept");
    }

    #[test]
    fn per_row_cluster_dimensions() {
        let data = toy_data(200);
        let (_, z, _) = build_design(
            &data,
            &spec("student", &["lines_per_page", "words_per_line"]),
        )
        .unwrap();
        assert_eq!((z.n(), z.q()), (200, 200));
    }

    #[test]
    fn response_above_bound_rejected() {
        let mut data = toy_data(10);
        data.response[3] = 26;
        let err = build_design(&data, &spec("paper_type", &["lines_per_page"])).unwrap_err();
        assert!(err.to_string().contains("row 4"), "{err}");
    }

    #[test]
    fn unknown_and_constant_columns_rejected() {
        let data = toy_data(10);
        assert!(build_design(&data, &spec("paper_type", &["nope"])).is_err());
        assert!(build_design(&data, &spec("nope", &["lines_per_page"])).is_err());

        let constant = toy_data(10).with_numeric("flat", vec![3.0; 10]);
        let err = build_design(&constant, &spec("paper_type", &["flat"])).unwrap_err();
        assert!(err.to_string().contains("flat"), "{err}");
    }

    #[test]
    fn cluster_cannot_be_covariate() {
        let data = toy_data(10);
        let mut s = spec("paper_type", &["lines_per_page"]);
        s.cluster_variable = "lines_per_page".into();
        assert!(build_design(&data, &s).is_err());
    }

    #[test]
    fn random_design_validates_empty_clusters() {
        assert!(RandomDesign::new(vec![0, 0], vec!["a".into(), "b".into()]).is_err());
        let z = RandomDesign::new(vec![0, 1, 0], vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(z.q(), 2);
        assert_eq!(z.cluster_of(2), 0);
    }

    #[test]
    fn fixed_design_checks_intercept_and_rank() {
        // Second column duplicates the intercept.
        let values = vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let err = FixedDesign::new(3, 2, values, vec!["intercept".into(), "dup".into()])
            .unwrap_err();
        assert!(err.to_string().contains("collinear"), "{err}");

        let bad_intercept = vec![2.0, 1.0];
        assert!(FixedDesign::new(2, 1, bad_intercept, vec!["intercept".into()]).is_err());
    }
}
