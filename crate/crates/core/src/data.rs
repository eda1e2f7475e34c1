//! Dataset ingestion and descriptive statistics for the five-column booklet
//! schema: `course_type,paper_type,pages_blank,lines_per_page,words_per_line`.
//!
//! Loading is strict: the header must carry exactly those columns (any
//! order), every cell must parse, and every failure names its row. The
//! truncation bound is a required input, not inferred from the data.

use std::io::Read;
use std::path::{Path, PathBuf};

use crate::discriminant::{FeatureMatrix, Group, Grouping};
use crate::distribution::{CountSample, DistFit, TruncationBound};
use crate::error::{Error, Result};
use crate::mixed::RegressionData;
use crate::real::{real, real_of_usize, Real};

pub const COLUMNS: [&str; 5] = [
    "course_type",
    "paper_type",
    "pages_blank",
    "lines_per_page",
    "words_per_line",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CourseType {
    Ug,
    Pg,
}

impl CourseType {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "UG" => Some(CourseType::Ug),
            "PG" => Some(CourseType::Pg),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CourseType::Ug => "UG",
            CourseType::Pg => "PG",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PaperType {
    Quantitative,
    NonQuantitative,
}

impl PaperType {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "Q" => Some(PaperType::Quantitative),
            "NQ" => Some(PaperType::NonQuantitative),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PaperType::Quantitative => "Q",
            PaperType::NonQuantitative => "NQ",
        }
    }

    pub fn group(self) -> Group {
        match self {
            PaperType::Quantitative => Group::Quantitative,
            PaperType::NonQuantitative => Group::NonQuantitative,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentRecord<F> {
    pub course_type: CourseType,
    pub paper_type: PaperType,
    pub pages_blank: u32,
    pub lines_per_page: F,
    pub words_per_line: F,
}

/// A validated dataset with its truncation bound and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    records: Vec<StudentRecord<F>>,
    bound: TruncationBound,
    source: PathBuf,
}

impl<F: Real> Dataset<F> {
    pub fn load(path: &Path, bound: TruncationBound) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(file, bound, path.to_path_buf())
    }

    pub fn from_reader<R: Read>(reader: R, bound: TruncationBound, source: PathBuf) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers = rdr.headers()?.clone();
        let mut index = [usize::MAX; 5];
        for (pos, name) in headers.iter().enumerate() {
            match COLUMNS.iter().position(|c| *c == name) {
                Some(slot) => {
                    if index[slot] != usize::MAX {
                        return Err(Error::Validation(format!(
                            "row 1: duplicate column '{name}'"
                        )));
                    }
                    index[slot] = pos;
                }
                None => {
                    return Err(Error::Validation(format!(
                        "row 1: unexpected column '{name}'"
                    )))
                }
            }
        }
        for (slot, &pos) in index.iter().enumerate() {
            if pos == usize::MAX {
                return Err(Error::Validation(format!(
                    "row 1: missing column '{}'",
                    COLUMNS[slot]
                )));
            }
        }

        let r = bound.value();
        let mut records = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let row = i + 2; // header is row 1
            let cell = |slot: usize| record.get(index[slot]).unwrap_or("");

            let course_type = CourseType::parse(cell(0)).ok_or_else(|| {
                Error::Validation(format!(
                    "row {row}: unknown course_type '{}' (expected UG or PG)",
                    cell(0)
                ))
            })?;
            let paper_type = PaperType::parse(cell(1)).ok_or_else(|| {
                Error::Validation(format!(
                    "row {row}: unknown paper_type '{}' (expected Q or NQ)",
                    cell(1)
                ))
            })?;
            let pages: i64 = cell(2).parse().map_err(|_| {
                Error::Validation(format!(
                    "row {row}: pages_blank '{}' is not an integer",
                    cell(2)
                ))
            })?;
            if pages < 0 {
                return Err(Error::Validation(format!(
                    "row {row}: pages_blank {pages} is negative"
                )));
            }
            if pages as u64 > r as u64 {
                return Err(Error::Validation(format!(
                    "row {row}: pages_blank {pages} exceeds the truncation bound {r}"
                )));
            }
            let parse_real = |slot: usize, name: &str| -> Result<F> {
                let raw = cell(slot);
                let v: f64 = raw.parse().map_err(|_| {
                    Error::Validation(format!("row {row}: {name} '{raw}' is not numeric"))
                })?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation(format!(
                        "row {row}: {name} must be finite and non-negative, got {raw}"
                    )));
                }
                Ok(real(v))
            };
            records.push(StudentRecord {
                course_type,
                paper_type,
                pages_blank: pages as u32,
                lines_per_page: parse_real(3, "lines_per_page")?,
                words_per_line: parse_real(4, "words_per_line")?,
            });
        }
        if records.is_empty() {
            return Err(Error::Validation("dataset has no data rows".into()));
        }
        Ok(Dataset {
            records,
            bound,
            source,
        })
    }

    pub fn records(&self) -> &[StudentRecord<F>] {
        &self.records
    }

    pub fn bound(&self) -> TruncationBound {
        self.bound
    }

    pub fn source(&self) -> &Path {
        &self.source
    }

    pub fn row_count(&self) -> usize {
        self.records.len()
    }

    /// The response column as a [`CountSample`].
    pub fn count_sample(&self) -> CountSample {
        let values = self.records.iter().map(|rec| rec.pages_blank).collect();
        CountSample::new(values, self.bound).expect("records validated on load")
    }

    pub fn column(&self, column: NumericColumn) -> Vec<F> {
        self.records
            .iter()
            .map(|rec| match column {
                NumericColumn::PagesBlank => real(rec.pages_blank as f64),
                NumericColumn::LinesPerPage => rec.lines_per_page,
                NumericColumn::WordsPerLine => rec.words_per_line,
            })
            .collect()
    }

    /// Long-format columns for the mixed model. Factors: `paper_type`,
    /// `course_type`, and a synthetic per-row `student` id.
    pub fn regression_data(&self) -> RegressionData<F> {
        let response = self.records.iter().map(|rec| rec.pages_blank).collect();
        let lines = self.column(NumericColumn::LinesPerPage);
        let words = self.column(NumericColumn::WordsPerLine);
        let paper = self
            .records
            .iter()
            .map(|rec| rec.paper_type.as_str().to_string())
            .collect();
        let course = self
            .records
            .iter()
            .map(|rec| rec.course_type.as_str().to_string())
            .collect();
        let student = (0..self.records.len())
            .map(|i| format!("s{:05}", i + 1))
            .collect();
        RegressionData::new(response)
            .with_numeric("lines_per_page", lines)
            .with_numeric("words_per_line", words)
            .with_factor("paper_type", paper)
            .with_factor("course_type", course)
            .with_factor("student", student)
    }

    /// The (B, L, W) feature matrix and paper-type grouping for
    /// discriminant analysis.
    pub fn discriminant_input(&self) -> Result<(FeatureMatrix<F>, Grouping)> {
        let b = self.column(NumericColumn::PagesBlank);
        let l = self.column(NumericColumn::LinesPerPage);
        let w = self.column(NumericColumn::WordsPerLine);
        let features = FeatureMatrix::blw(&b, &l, &w)?;
        let grouping = Grouping::new(
            self.records
                .iter()
                .map(|rec| rec.paper_type.group())
                .collect(),
        )?;
        Ok((features, grouping))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericColumn {
    PagesBlank,
    LinesPerPage,
    WordsPerLine,
}

impl NumericColumn {
    pub fn name(self) -> &'static str {
        match self {
            NumericColumn::PagesBlank => "pages_blank",
            NumericColumn::LinesPerPage => "lines_per_page",
            NumericColumn::WordsPerLine => "words_per_line",
        }
    }

    pub fn all() -> [NumericColumn; 3] {
        [
            NumericColumn::PagesBlank,
            NumericColumn::LinesPerPage,
            NumericColumn::WordsPerLine,
        ]
    }
}

impl std::str::FromStr for NumericColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pages_blank" => Ok(NumericColumn::PagesBlank),
            "lines_per_page" => Ok(NumericColumn::LinesPerPage),
            "words_per_line" => Ok(NumericColumn::WordsPerLine),
            other => Err(Error::Validation(format!(
                "unknown numeric column '{other}'"
            ))),
        }
    }
}

/// Mean, sample standard deviation, and moment skewness of one column.
/// Skewness is undefined (None) for constant columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSummary<F> {
    pub mean: F,
    pub sd: F,
    pub skewness: Option<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin<F> {
    pub lower: F,
    pub upper: F,
    pub count: u32,
}

/// Factor proportions, per-column moments, and default histogram tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport<F> {
    pub n: usize,
    /// (level, proportion) pairs for course_type: UG then PG.
    pub course_proportions: [(String, F); 2],
    /// (level, proportion) pairs for paper_type: Q then NQ.
    pub paper_proportions: [(String, F); 2],
    pub columns: Vec<(String, ColumnSummary<F>)>,
    pub histograms: Vec<(String, Vec<HistogramBin<F>>)>,
}

const DEFAULT_HISTOGRAM_BINS: u32 = 10;

pub fn summarize<F: Real>(dataset: &Dataset<F>) -> SummaryReport<F> {
    let n = dataset.row_count();
    let nf = real_of_usize::<F>(n);
    let ug = dataset
        .records()
        .iter()
        .filter(|r| r.course_type == CourseType::Ug)
        .count();
    let q = dataset
        .records()
        .iter()
        .filter(|r| r.paper_type == PaperType::Quantitative)
        .count();
    let prop = |c: usize| real_of_usize::<F>(c) / nf;

    let mut columns = Vec::new();
    let mut histograms = Vec::new();
    for column in NumericColumn::all() {
        let values = dataset.column(column);
        columns.push((column.name().to_string(), column_summary(&values)));
        histograms.push((
            column.name().to_string(),
            histogram_of(&values, DEFAULT_HISTOGRAM_BINS),
        ));
    }

    SummaryReport {
        n,
        course_proportions: [
            ("UG".to_string(), prop(ug)),
            ("PG".to_string(), prop(n - ug)),
        ],
        paper_proportions: [
            ("Q".to_string(), prop(q)),
            ("NQ".to_string(), prop(n - q)),
        ],
        columns,
        histograms,
    }
}

fn column_summary<F: Real>(values: &[F]) -> ColumnSummary<F> {
    let n = real_of_usize::<F>(values.len());
    let mean = values.iter().fold(F::zero(), |a, &v| a + v) / n;
    let m2 = values
        .iter()
        .map(|&v| (v - mean) * (v - mean))
        .fold(F::zero(), |a, t| a + t)
        / n;
    let m3 = values
        .iter()
        .map(|&v| (v - mean) * (v - mean) * (v - mean))
        .fold(F::zero(), |a, t| a + t)
        / n;
    let sd = if values.len() > 1 {
        (values
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .fold(F::zero(), |a, t| a + t)
            / (n - F::one()))
        .sqrt()
    } else {
        F::zero()
    };
    let skewness = if m2 > F::zero() {
        Some(m3 / m2.powf(real(1.5)))
    } else {
        None
    };
    ColumnSummary { mean, sd, skewness }
}

/// Equal-width bins covering `[min, max]`; the final bin is closed so the
/// counts always sum to `n`. A constant column collapses to a single bin.
pub fn histogram<F: Real>(
    dataset: &Dataset<F>,
    column: NumericColumn,
    bin_count: u32,
) -> Result<Vec<HistogramBin<F>>> {
    if bin_count < 1 {
        return Err(Error::Validation("bin_count must be at least 1".into()));
    }
    Ok(histogram_of(&dataset.column(column), bin_count))
}

fn histogram_of<F: Real>(values: &[F], bin_count: u32) -> Vec<HistogramBin<F>> {
    let min = values.iter().fold(F::infinity(), |a, &v| a.min(v));
    let max = values.iter().fold(F::neg_infinity(), |a, &v| a.max(v));
    if min >= max {
        return vec![HistogramBin {
            lower: min,
            upper: max,
            count: values.len() as u32,
        }];
    }
    let k = bin_count as usize;
    let width = (max - min) / real_of_usize(k);
    let mut counts = vec![0u32; k];
    for &v in values {
        let idx = ((v - min) / width).to_f64().unwrap_or(0.0).floor() as usize;
        counts[idx.min(k - 1)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lower: min + width * real_of_usize(i),
            upper: if i + 1 == k {
                max
            } else {
                min + width * real_of_usize(i + 1)
            },
            count,
        })
        .collect()
}

/// Observed tallies against fitted expected counts `n * pmf(x)` for every
/// `x` in the support (empty cells included).
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayRow<F> {
    pub x: u32,
    pub observed: u32,
    pub expected: F,
}

pub fn fit_overlay<F: Real>(dataset: &Dataset<F>, fit: &DistFit<F>) -> Result<Vec<OverlayRow<F>>> {
    if fit.bound != dataset.bound() {
        return Err(Error::Validation(format!(
            "fit bound {} does not match dataset bound {}",
            fit.bound,
            dataset.bound()
        )));
    }
    let r = dataset.bound().value();
    let mut observed = vec![0u32; r as usize + 1];
    for rec in dataset.records() {
        observed[rec.pages_blank as usize] += 1;
    }
    let n = real_of_usize::<F>(dataset.row_count());
    let expected: Vec<F> = if fit.lambda_hat > F::zero() {
        crate::distribution::pmf_table_from_log_lambda(fit.lambda_hat.ln(), r)
            .into_iter()
            .map(|p| n * p)
            .collect()
    } else {
        // Boundary fit: all mass at zero.
        let mut e = vec![F::zero(); r as usize + 1];
        e[0] = n;
        e
    };
    Ok(observed
        .into_iter()
        .zip(expected)
        .enumerate()
        .map(|(x, (obs, exp))| OverlayRow {
            x: x as u32,
            observed: obs,
            expected: exp,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{fit_mle, FitOptions};

    const TWO_ROWS: &str = "\
course_type,paper_type,pages_blank,lines_per_page,words_per_line
UG,Q,12,22.3,7.0
PG,NQ,3,25.0,8.7
";

    fn load(text: &str, r: u32) -> Result<Dataset<f64>> {
        Dataset::from_reader(text.as_bytes(), TruncationBound::new(r), PathBuf::from("mem"))
    }

    #[test]
    fn loads_valid_rows() {
        let ds = load(TWO_ROWS, 25).unwrap();
        assert_eq!(ds.row_count(), 2);
        assert_eq!(ds.records()[0].pages_blank, 12);
        assert_eq!(ds.records()[1].course_type, CourseType::Pg);
    }

    #[test]
    fn permuted_header_loads() {
        let text = "\
words_per_line,pages_blank,course_type,lines_per_page,paper_type
7.0,12,UG,22.3,Q
8.7,3,PG,25.0,NQ
";
        let ds = load(text, 25).unwrap();
        assert_eq!(ds.records()[0].words_per_line, 7.0);
        assert_eq!(ds.records()[0].pages_blank, 12);
    }

    #[test]
    fn errors_name_the_row() {
        let text = "\
course_type,paper_type,pages_blank,lines_per_page,words_per_line
UG,Q,12,22.3,7.0
PG,NQ,26,25.0,8.7
";
        let err = load(text, 25).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
        assert!(err.to_string().contains("26"), "{err}");

        let text = "\
course_type,paper_type,pages_blank,lines_per_page,words_per_line
UG,X,12,22.3,7.0
";
        let err = load(text, 25).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");

        let text = "\
course_type,paper_type,pages_blank,lines_per_page,words_per_line
UG,Q,-1,22.3,7.0
";
        let err = load(text, 25).unwrap_err();
        assert!(err.to_string().contains("negative"), "{err}");

        let text = "\
course_type,paper_type,pages_blank,lines_per_page,words_per_line
UG,Q,12,abc,7.0
";
        let err = load(text, 25).unwrap_err();
        assert!(err.to_string().contains("lines_per_page"), "{err}");
    }

    #[test]
    fn missing_and_unknown_columns_rejected() {
        let missing = "\
course_type,paper_type,pages_blank,lines_per_page
UG,Q,12,22.3
";
        let err = load(missing, 25).unwrap_err();
        assert!(err.to_string().contains("words_per_line"), "{err}");

        let extra = "\
course_type,paper_type,pages_blank,lines_per_page,words_per_line,bonus
UG,Q,12,22.3,7.0,1
";
        assert!(load(extra, 25).is_err());

        assert!(load("course_type,paper_type,pages_blank,lines_per_page,words_per_line\n", 25).is_err());
    }

    #[test]
    fn crlf_accepted() {
        let text = "course_type,paper_type,pages_blank,lines_per_page,words_per_line\r\nUG,Q,2,20.0,6.5\r\nPG,NQ,4,21.0,7.5\r\n";
        assert_eq!(load(text, 25).unwrap().row_count(), 2);
    }

    #[test]
    fn summarize_proportions_and_moments() {
        let mut text = String::from("course_type,paper_type,pages_blank,lines_per_page,words_per_line\n");
        for i in 0..200 {
            let course = if i < 152 { "UG" } else { "PG" };
            let paper = if i % 2 == 0 { "Q" } else { "NQ" };
            text.push_str(&format!("{course},{paper},{},20.0,7.0\n", i % 26));
        }
        let ds = load(&text, 25).unwrap();
        let report = summarize(&ds);
        assert_eq!(report.n, 200);
        assert!((report.course_proportions[1].1 - 0.24).abs() < 1e-12); // PG
        assert!((report.paper_proportions[0].1 - 0.56).abs() < 0.1);
        let total: f64 = report.course_proportions.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);

        // Constant column: sd 0, skewness undefined.
        let lines = &report.columns[1].1;
        assert_eq!(lines.sd, 0.0);
        assert!(lines.skewness.is_none());
    }

    #[test]
    fn skewness_near_zero_for_symmetric_column() {
        let mut text = String::from("course_type,paper_type,pages_blank,lines_per_page,words_per_line\n");
        // lines_per_page symmetric around 20: ten full cycles of 15..=25.
        for i in 0..110 {
            let offset = (i % 11) as f64 - 5.0;
            text.push_str(&format!("UG,{},1,{},7.0\n", if i % 2 == 0 { "Q" } else { "NQ" }, 20.0 + offset));
        }
        let ds = load(&text, 25).unwrap();
        let report = summarize(&ds);
        let skew = report.columns[1].1.skewness.unwrap();
        assert!(skew.abs() < 1e-10, "skew = {skew}");
    }

    #[test]
    fn histogram_counts_sum_to_n() {
        let ds = load(TWO_ROWS, 25).unwrap();
        let bins = histogram(&ds, NumericColumn::PagesBlank, 4).unwrap();
        let total: u32 = bins.iter().map(|b| b.count).sum();
        assert_eq!(total, 2);
        assert!(histogram(&ds, NumericColumn::PagesBlank, 0).is_err());

        let single = histogram(&ds, NumericColumn::PagesBlank, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].count, 2);
    }

    #[test]
    fn integer_column_with_unit_bins_matches_tallies() {
        let mut text = String::from("course_type,paper_type,pages_blank,lines_per_page,words_per_line\n");
        let mut tallies = [0u32; 26];
        for i in 0..120 {
            let v = (i * 7) % 26;
            tallies[v] += 1;
            text.push_str(&format!("UG,{},{v},20.0,7.0\n", if i % 2 == 0 { "Q" } else { "NQ" }));
        }
        // Make sure both extremes appear so the range is [0, 25].
        let ds = load(&text, 25).unwrap();
        let bins = histogram(&ds, NumericColumn::PagesBlank, 26).unwrap();
        assert_eq!(bins.len(), 26);
        for (bin, &want) in bins.iter().zip(&tallies) {
            assert_eq!(bin.count, want, "bin [{}, {}]", bin.lower, bin.upper);
        }
    }

    #[test]
    fn overlay_expected_sums_to_n_and_covers_support() {
        let mut text = String::from("course_type,paper_type,pages_blank,lines_per_page,words_per_line\n");
        for i in 0..60 {
            text.push_str(&format!("UG,{},{},20.0,7.0\n", if i % 2 == 0 { "Q" } else { "NQ" }, 5 + (i % 8)));
        }
        let ds = load(&text, 25).unwrap();
        let fit = fit_mle::<f64>(&ds.count_sample(), &FitOptions::default()).unwrap();
        let overlay = fit_overlay(&ds, &fit).unwrap();
        assert_eq!(overlay.len(), 26);
        let expected_total: f64 = overlay.iter().map(|row| row.expected).sum();
        assert!((expected_total - 60.0).abs() < 1e-8);
        // Empty cells still emitted.
        assert_eq!(overlay[20].observed, 0);
        let observed_total: u32 = overlay.iter().map(|row| row.observed).sum();
        assert_eq!(observed_total, 60);
    }

    #[test]
    fn overlay_requires_matching_bound() {
        let ds = load(TWO_ROWS, 25).unwrap();
        let mut fit = fit_mle::<f64>(&ds.count_sample(), &FitOptions::default()).unwrap();
        fit.bound = TruncationBound::new(30);
        assert!(fit_overlay(&ds, &fit).is_err());
    }
}
