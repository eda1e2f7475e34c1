//! Command-line surface for the truncated-count toolkit.
//!
//! Every subcommand prints one structured key-value document to stdout
//! (`key = value` lines, a fixed key set per subcommand) and optionally
//! writes flat CSV tables under `--out-dir`. Exit codes: 0 success, 1
//! validation error, 2 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use trunccount::data::{self, Dataset, NumericColumn};
use trunccount::discriminant::{self, FeatureMatrix, Grouping};
use trunccount::distribution::{self, CountSample, FitOptions, TruncatedPoissonModel};
use trunccount::mixed::{self, MixedModelSpec};
use trunccount::selection::{self, ModelScore};
use trunccount::utility::{self, OptimizeOutcome, UtilityProblem};
use trunccount::{Error, Result, TruncationBound};

/// Reads `TRUNC_COUNT_LOG` (quiet, info, debug) and configures logging to
/// stderr. Unset or unknown values mean quiet.
pub fn init_logging() {
    let level = match std::env::var("TRUNC_COUNT_LOG").as_deref() {
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Off,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
}

#[derive(Parser)]
#[command(
    name = "trunccount",
    about = "Right-truncated count modeling: fitting, regression, discrimination, page-allocation optimization",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit truncated and untruncated rate models with model-selection criteria.
    Fit {
        /// Input CSV dataset.
        #[arg(long)]
        input: PathBuf,
        /// Truncation bound (pages available).
        #[arg(long)]
        r: u32,
        /// Directory for CSV tables (observed-vs-expected overlay).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Mixed-effects truncated regression with a cluster random effect.
    Regress {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        r: u32,
        /// Cluster column: paper_type, course_type, or student.
        #[arg(long)]
        cluster: String,
        /// Comma-separated covariate columns (empty for intercept-only).
        #[arg(long, default_value = "lines_per_page,words_per_line")]
        covariates: String,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Linear discriminant analysis with Box's M, Wilks' lambda, and the
    /// classification table.
    Discriminate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        r: u32,
        /// Grouping column (two levels); only paper_type is supported.
        #[arg(long, default_value = "paper_type")]
        group: String,
        /// Comma-separated feature columns.
        #[arg(long, default_value = "pages_blank,lines_per_page,words_per_line")]
        features: String,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Exact page-allocation optimization from a key-value config file.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Emit a seeded synthetic dataset in the input schema.
    Simulate {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        seed: u64,
        /// Write dataset.csv here instead of streaming CSV to stdout.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Descriptive statistics, histograms, and factor proportions.
    Summarize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        r: u32,
        /// Histogram bin count for the exported tables.
        #[arg(long, default_value_t = 10)]
        bins: u32,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Parses `argv` and executes; returns the process exit code.
pub fn run(argv: &[OsString]) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes.
            if matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                print!("{err}");
                return 0;
            }
            eprint!("{err}");
            return 1;
        }
    };
    match dispatch(cli.command) {
        Ok(stdout_payload) => {
            print!("{stdout_payload}");
            0
        }
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn dispatch(command: Command) -> Result<String> {
    match command {
        Command::Fit { input, r, out_dir } => cmd_fit(&input, r, out_dir.as_deref()),
        Command::Regress {
            input,
            r,
            cluster,
            covariates,
            out_dir,
        } => cmd_regress(&input, r, &cluster, &covariates, out_dir.as_deref()),
        Command::Discriminate {
            input,
            r,
            group,
            features,
            out_dir,
        } => cmd_discriminate(&input, r, &group, &features, out_dir.as_deref()),
        Command::Optimize { config, out_dir } => cmd_optimize(&config, out_dir.as_deref()),
        Command::Simulate {
            lambda,
            r,
            n,
            seed,
            out_dir,
        } => cmd_simulate(lambda, r, n, seed, out_dir.as_deref()),
        Command::Summarize {
            input,
            r,
            bins,
            out_dir,
        } => cmd_summarize(&input, r, bins, out_dir.as_deref()),
    }
}

/// Ordered key-value document with stable float formatting.
struct Document {
    lines: String,
}

impl Document {
    fn new(command: &str) -> Self {
        let mut doc = Document {
            lines: String::new(),
        };
        doc.push("command", command);
        doc
    }

    fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.lines, "{key} = {value}");
    }

    fn push_f64(&mut self, key: &str, value: f64) {
        let _ = writeln!(self.lines, "{key} = {value:.6}");
    }

    fn push_opt_f64(&mut self, key: &str, value: Option<f64>) {
        match value {
            Some(v) => self.push_f64(key, v),
            None => self.push(key, "NA"),
        }
    }

    fn finish(self) -> String {
        self.lines
    }
}

fn write_table(out_dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let path = out_dir.join(name);
    std::fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn load_dataset(input: &Path, r: u32) -> Result<Dataset<f64>> {
    let ds = Dataset::load(input, TruncationBound::new(r))?;
    log::info!("loaded {} rows from {}", ds.row_count(), input.display());
    Ok(ds)
}

fn cmd_fit(input: &Path, r: u32, out_dir: Option<&Path>) -> Result<String> {
    let ds = load_dataset(input, r)?;
    let sample = ds.count_sample();
    let n = sample.len() as u32;

    let truncated = distribution::fit_mle::<f64>(&sample, &FitOptions::default())?;
    let poisson = distribution::fit_poisson_mle::<f64>(&sample)?;
    let moore = distribution::moore_estimate::<f64>(&sample).ok();

    let scores = vec![
        ModelScore::new("poisson", poisson.loglik, 1, n)?,
        ModelScore::new("right_truncated", truncated.loglik, 1, n)?,
    ];
    let ranking = selection::rank(&scores)?;

    let mut doc = Document::new("fit");
    doc.push("input", input.display());
    doc.push("r", r);
    doc.push("n", n);
    for score in &scores {
        let prefix = score.label.as_str();
        match prefix {
            "poisson" => {
                doc.push_f64("poisson.lambda_hat", poisson.lambda_hat);
                doc.push_opt_f64("poisson.std_error", poisson.std_error);
            }
            _ => {
                doc.push_f64("right_truncated.lambda_hat", truncated.lambda_hat);
                doc.push_opt_f64("right_truncated.std_error", truncated.std_error);
            }
        }
        doc.push_f64(&format!("{prefix}.loglik"), score.loglik);
        doc.push_f64(&format!("{prefix}.aic"), score.aic);
        doc.push_f64(&format!("{prefix}.caic"), score.caic);
        doc.push_f64(&format!("{prefix}.bic"), score.bic);
    }
    let expected_blank = if truncated.lambda_hat > 0.0 {
        TruncatedPoissonModel::new(truncated.lambda_hat, ds.bound())?.mean()
    } else {
        0.0
    };
    doc.push_f64("right_truncated.mean", expected_blank);
    doc.push("right_truncated.converged", truncated.converged);
    doc.push("right_truncated.iterations", truncated.iterations);
    doc.push_opt_f64("moore.lambda_hat", moore);
    doc.push("best.aic", &ranking.best_aic);
    doc.push("best.caic", &ranking.best_caic);
    doc.push("best.bic", &ranking.best_bic);

    if let Some(dir) = out_dir {
        let overlay = data::fit_overlay(&ds, &truncated)?;
        let mut table = String::from("x,observed_count,expected_count\n");
        for row in overlay {
            let _ = writeln!(table, "{},{},{:.6}", row.x, row.observed, row.expected);
        }
        write_table(dir, "overlay.csv", &table)?;
    }
    Ok(doc.finish())
}

fn cmd_regress(
    input: &Path,
    r: u32,
    cluster: &str,
    covariates: &str,
    out_dir: Option<&Path>,
) -> Result<String> {
    let ds = load_dataset(input, r)?;
    let data = ds.regression_data();
    let covariate_names: Vec<String> = covariates
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    let spec = MixedModelSpec::new(ds.bound(), cluster, covariate_names);
    let fit = mixed::fit(&spec, &data)?;
    let summary = fit.summary();

    let mut doc = Document::new("regress");
    doc.push("input", input.display());
    doc.push("r", r);
    doc.push("cluster", cluster);
    doc.push("n", fit.n);
    doc.push("p", fit.beta.len());
    doc.push("q", fit.u.len());
    for row in &summary.rows {
        doc.push_f64(&format!("coef.{}.estimate", row.name), row.estimate);
        doc.push_f64(&format!("coef.{}.std_error", row.name), row.std_error);
        doc.push_f64(&format!("coef.{}.t_value", row.name), row.t_value);
        doc.push_f64(&format!("coef.{}.p_value", row.name), row.p_value);
    }
    doc.push_f64("sigma2", fit.sigma2);
    doc.push_f64("loglik", fit.cond_loglik);
    doc.push_f64("aic", fit.aic);
    doc.push_f64("bic", fit.bic);
    doc.push("converged", fit.converged);
    doc.push("iterations", fit.iterations);

    if let Some(dir) = out_dir {
        let mut table = String::from("coefficient,estimate,std_error,t_value,p_value\n");
        for row in &summary.rows {
            let _ = writeln!(
                table,
                "{},{:.6},{:.6},{:.6},{:.6}",
                row.name, row.estimate, row.std_error, row.t_value, row.p_value
            );
        }
        write_table(dir, "coefficients.csv", &table)?;
    }
    Ok(doc.finish())
}

fn cmd_discriminate(
    input: &Path,
    r: u32,
    group: &str,
    features: &str,
    out_dir: Option<&Path>,
) -> Result<String> {
    if group != "paper_type" {
        return Err(Error::Validation(format!(
            "grouping column must be the two-level 'paper_type', got '{group}'"
        )));
    }
    let ds = load_dataset(input, r)?;
    let columns: Vec<NumericColumn> = features
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if columns.is_empty() {
        return Err(Error::Validation("no feature columns requested".into()));
    }
    let names: Vec<String> = columns.iter().map(|c| c.name().to_string()).collect();
    let rows: Vec<Vec<f64>> = (0..ds.row_count())
        .map(|i| {
            columns
                .iter()
                .map(|&c| ds.column(c)[i])
                .collect::<Vec<f64>>()
        })
        .collect();
    let matrix = FeatureMatrix::new(names.clone(), rows)?;
    let grouping = Grouping::new(
        ds.records()
            .iter()
            .map(|rec| rec.paper_type.group())
            .collect(),
    )?;

    let model = discriminant::fit_lda(&matrix, &grouping)?;
    let box_m = discriminant::box_m(&matrix, &grouping)?;
    let wilks = discriminant::wilks(&matrix, &grouping)?;
    let confusion = discriminant::confusion(&model, &matrix, &grouping)?;

    let mut doc = Document::new("discriminate");
    doc.push("input", input.display());
    doc.push("r", r);
    doc.push("group", group);
    doc.push("features", names.join(","));
    doc.push("n", matrix.n());
    doc.push_f64("box_m.m", box_m.m);
    doc.push_f64("box_m.chi2", box_m.chi2);
    doc.push("box_m.df", box_m.df);
    doc.push_f64("box_m.p", box_m.p);
    doc.push_f64("wilks.lambda", wilks.lambda);
    doc.push_f64("wilks.chi2", wilks.chi2);
    doc.push("wilks.df", wilks.df);
    doc.push_f64("wilks.p", wilks.p);
    for (name, value) in names.iter().zip(&model.standardized_coefficients) {
        doc.push_f64(&format!("coef.standardized.{name}"), *value);
    }
    for (name, value) in names.iter().zip(&model.raw_coefficients) {
        doc.push_f64(&format!("coef.raw.{name}"), *value);
    }
    doc.push_f64("centroid.quantitative", model.centroids[0]);
    doc.push_f64("centroid.non_quantitative", model.centroids[1]);
    doc.push_f64("cutoff", model.cutoff);
    doc.push("degenerate", model.degenerate);
    doc.push("confusion.q.q", confusion.counts[0][0]);
    doc.push("confusion.q.nq", confusion.counts[0][1]);
    doc.push("confusion.nq.q", confusion.counts[1][0]);
    doc.push("confusion.nq.nq", confusion.counts[1][1]);
    doc.push_f64("confusion.accuracy", confusion.overall_accuracy);

    if let Some(dir) = out_dir {
        let mut table =
            String::from("actual,predicted_q,predicted_nq,pct_q,pct_nq\n");
        for (i, label) in ["Q", "NQ"].iter().enumerate() {
            let _ = writeln!(
                table,
                "{},{},{},{:.2},{:.2}",
                label,
                confusion.counts[i][0],
                confusion.counts[i][1],
                confusion.row_percentages[i][0],
                confusion.row_percentages[i][1]
            );
        }
        write_table(dir, "confusion.csv", &table)?;
    }
    Ok(doc.finish())
}

fn cmd_optimize(config: &Path, out_dir: Option<&Path>) -> Result<String> {
    let problem = UtilityProblem::from_config_file(config)?;
    let outcome = utility::optimize(&problem)?;

    let mut doc = Document::new("optimize");
    doc.push("config", config.display());
    doc.push("x", problem.x);
    doc.push("n1", problem.n1);
    doc.push("n2", problem.n2);
    doc.push("c11", &problem.c11);
    doc.push("c12", &problem.c12);
    doc.push("c21", &problem.c21);
    doc.push("c22", &problem.c22);
    doc.push("a0", &problem.a0);
    doc.push(
        "x1_range",
        format!("{}..{}", problem.x1_range.0, problem.x1_range.1),
    );
    match &outcome {
        OptimizeOutcome::Optimal(sol) => {
            doc.push("status", "optimal");
            doc.push("feasible_count", sol.feasible_count);
            doc.push("x1_star", sol.x1_star);
            doc.push("utility.value", &sol.utility.value);
            doc.push_f64(
                "utility.value_approx",
                rational_to_f64(&sol.utility.value),
            );
            doc.push("utility.k_adjust", sol.utility.k_adjust);
            doc.push("binding.surplus_cost", sol.binding.surplus_cost);
            doc.push("binding.additional_cost", sol.binding.additional_cost);
        }
        OptimizeOutcome::Infeasible { candidates } => {
            doc.push("status", "infeasible");
            doc.push("feasible_count", 0);
            doc.push("candidates", candidates);
        }
    }

    if let Some(dir) = out_dir {
        let mut table = String::from("x1,feasible,utility,surplus_slack,additional_slack\n");
        for x1 in problem.x1_range.0..=problem.x1_range.1 {
            let feas = utility::feasible(problem.x, x1, &problem)?;
            let value = utility::utility(problem.x, x1, problem.n1)?;
            let _ = writeln!(
                table,
                "{},{},{},{},{}",
                x1, feas.feasible, value.value, feas.surplus_slack, feas.additional_slack
            );
        }
        write_table(dir, "candidates.csv", &table)?;
    }
    Ok(doc.finish())
}

fn rational_to_f64(v: &num_rational::BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::NAN)
}

fn cmd_simulate(lambda: f64, r: u32, n: u32, seed: u64, out_dir: Option<&Path>) -> Result<String> {
    if n == 0 {
        return Err(Error::Validation("n must be at least 1".into()));
    }
    let model = TruncatedPoissonModel::new(lambda, TruncationBound::new(r))?;
    let sample = model.sample(n as usize, seed);
    let csv_text = render_dataset_csv(&sample);

    match out_dir {
        None => Ok(csv_text),
        Some(dir) => {
            write_table(dir, "dataset.csv", &csv_text)?;
            let mut doc = Document::new("simulate");
            doc.push_f64("lambda", lambda);
            doc.push("r", r);
            doc.push("n", n);
            doc.push("seed", seed);
            doc.push("output", dir.join("dataset.csv").display());
            Ok(doc.finish())
        }
    }
}

/// Schema-complete CSV around the simulated counts. The auxiliary columns
/// follow fixed deterministic cycles (3:1 UG:PG, alternating paper type,
/// sliding lines/words grids) so identical invocations are byte-identical.
fn render_dataset_csv(sample: &CountSample) -> String {
    let mut out = String::from("course_type,paper_type,pages_blank,lines_per_page,words_per_line\n");
    for (i, &count) in sample.values().iter().enumerate() {
        let course = if i % 4 == 3 { "PG" } else { "UG" };
        let paper = if i % 2 == 0 { "Q" } else { "NQ" };
        let lines = 16.0 + (i % 13) as f64 * 0.9;
        let words = 5.0 + (i % 9) as f64 * 0.5;
        let _ = writeln!(out, "{course},{paper},{count},{lines:.1},{words:.1}");
    }
    out
}

fn cmd_summarize(input: &Path, r: u32, bins: u32, out_dir: Option<&Path>) -> Result<String> {
    let ds = load_dataset(input, r)?;
    let report = data::summarize(&ds);

    let mut doc = Document::new("summarize");
    doc.push("input", input.display());
    doc.push("r", r);
    doc.push("n", report.n);
    for (level, p) in &report.course_proportions {
        doc.push_f64(&format!("proportion.course_type.{level}"), *p);
    }
    for (level, p) in &report.paper_proportions {
        doc.push_f64(&format!("proportion.paper_type.{level}"), *p);
    }
    for (name, summary) in &report.columns {
        doc.push_f64(&format!("{name}.mean"), summary.mean);
        doc.push_f64(&format!("{name}.sd"), summary.sd);
        doc.push_opt_f64(&format!("{name}.skewness"), summary.skewness);
    }

    if let Some(dir) = out_dir {
        for column in NumericColumn::all() {
            let hist = data::histogram(&ds, column, bins)?;
            let mut table = String::from("lower,upper,count\n");
            for bin in hist {
                let _ = writeln!(table, "{:.6},{:.6},{}", bin.lower, bin.upper, bin.count);
            }
            write_table(dir, &format!("histogram_{}.csv", column.name()), &table)?;
        }
    }
    Ok(doc.finish())
}
