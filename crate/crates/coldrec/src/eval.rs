//! RMSE scoring and the per-method, per-test-set evaluation report.
//!
//! The combined column pools squared errors over the union of the two test
//! sets (never the mean of the two RMSE values); the identity
//! `rmse_combined^2 * (n1 + n2) = rmse1^2 * n1 + rmse2^2 * n2` is enforced on
//! every report. Stochastic methods report the mean RMSE over their trials
//! plus the population variance (and standard deviation); the identity is
//! enforced per trial, where it is exact.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `sqrt(Σ (predicted - actual)^2 / n)` over (predicted, actual) pairs.
pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Parameter("rmse of an empty list".into()));
    }
    let sse: f64 = pairs.iter().map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((sse / pairs.len() as f64).sqrt())
}

/// Sum of squared errors and count for one method on one test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetEval {
    pub sse: f64,
    pub n: usize,
}

impl SetEval {
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Parameter("empty evaluation set".into()));
        }
        Ok(Self {
            sse: pairs.iter().map(|(p, a)| (p - a) * (p - a)).sum(),
            n: pairs.len(),
        })
    }

    pub fn rmse(&self) -> f64 {
        (self.sse / self.n as f64).sqrt()
    }

    fn pooled(a: &SetEval, b: &SetEval) -> SetEval {
        SetEval {
            sse: a.sse + b.sse,
            n: a.n + b.n,
        }
    }
}

/// One stochastic trial, evaluated on whichever sets are present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialEval {
    pub test1: Option<SetEval>,
    pub test2: Option<SetEval>,
}

/// Per-method evaluation evidence handed to [`build_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MethodOutcome {
    /// One deterministic evaluation per set.
    Deterministic {
        test1: Option<SetEval>,
        test2: Option<SetEval>,
    },
    /// Independent trials of a stochastic method (all with the same shape).
    Stochastic { trials: Vec<TrialEval> },
}

/// One report cell. Variance and standard deviation are present iff the
/// method is stochastic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub rmse: f64,
    pub variance: Option<f64>,
    pub stddev: Option<f64>,
    pub n_reviews: usize,
}

/// All cells for one method.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MethodReport {
    pub test1: Option<ReportEntry>,
    pub test2: Option<ReportEntry>,
    pub combined: Option<ReportEntry>,
}

impl MethodReport {
    fn entry(&self, column: &str) -> Option<&ReportEntry> {
        match column {
            "test1" => self.test1.as_ref(),
            "test2" => self.test2.as_ref(),
            "combined" => self.combined.as_ref(),
            _ => None,
        }
    }
}

/// RMSE gain of `method` over `baseline` (baseline minus method; positive
/// means the method is better).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub method: String,
    pub baseline: String,
    pub column: String,
    pub delta: f64,
}

/// Reproducibility metadata carried by the report.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMeta {
    pub seeds: BTreeMap<String, u64>,
    pub config_digest: Option<String>,
    pub n_runs: Option<usize>,
    /// Populated only on request; kept out of default output so reruns are
    /// byte-identical.
    pub generated_at: Option<String>,
}

/// The assembled evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub methods: BTreeMap<String, MethodReport>,
    pub improvements: Vec<Improvement>,
    pub metadata: ReportMeta,
}

const COLUMNS: [&str; 3] = ["test1", "test2", "combined"];
const IDENTITY_TOL: f64 = 1e-9;

fn check_identity(r1: f64, n1: usize, r2: f64, n2: usize, rc: f64) -> Result<()> {
    let lhs = rc * rc * (n1 + n2) as f64;
    let rhs = r1 * r1 * n1 as f64 + r2 * r2 * n2 as f64;
    if (lhs - rhs).abs() > IDENTITY_TOL * rhs.abs().max(1.0) {
        return Err(Error::Contract(format!(
            "combined-column identity violated: {lhs} vs {rhs}"
        )));
    }
    Ok(())
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let variance =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, variance)
}

fn stochastic_entry(per_trial: &[(f64, usize)]) -> ReportEntry {
    let scores: Vec<f64> = per_trial.iter().map(|(r, _)| *r).collect();
    let (mean, variance) = mean_var(&scores);
    ReportEntry {
        rmse: mean,
        variance: Some(variance),
        stddev: Some(variance.sqrt()),
        n_reviews: per_trial[0].1,
    }
}

/// Assemble the report. Combined cells are pooled over the union of the two
/// sets; the pooled identity is verified for every deterministic method and
/// for every individual stochastic trial. Improvement deltas are computed
/// for each deterministic method against each stochastic baseline.
pub fn build_report(
    results: BTreeMap<String, MethodOutcome>,
    metadata: ReportMeta,
) -> Result<EvalReport> {
    if results.is_empty() {
        return Err(Error::Parameter("no method results to report".into()));
    }
    let mut methods: BTreeMap<String, MethodReport> = BTreeMap::new();
    let mut stochastic_names: Vec<String> = Vec::new();
    let mut deterministic_names: Vec<String> = Vec::new();

    for (name, outcome) in &results {
        let mut report = MethodReport::default();
        match outcome {
            MethodOutcome::Deterministic { test1, test2 } => {
                if test1.is_none() && test2.is_none() {
                    return Err(Error::Parameter(format!(
                        "method `{name}` has no evaluated sets"
                    )));
                }
                for eval in [test1, test2].into_iter().flatten() {
                    if eval.n == 0 {
                        return Err(Error::Parameter(format!(
                            "method `{name}` has an empty evaluation set"
                        )));
                    }
                }
                let to_entry = |e: &SetEval| ReportEntry {
                    rmse: e.rmse(),
                    variance: None,
                    stddev: None,
                    n_reviews: e.n,
                };
                report.test1 = test1.as_ref().map(to_entry);
                report.test2 = test2.as_ref().map(to_entry);
                if let (Some(a), Some(b)) = (test1, test2) {
                    let pooled = SetEval::pooled(a, b);
                    check_identity(a.rmse(), a.n, b.rmse(), b.n, pooled.rmse())?;
                    report.combined = Some(to_entry(&pooled));
                }
                deterministic_names.push(name.clone());
            }
            MethodOutcome::Stochastic { trials } => {
                if trials.is_empty() {
                    return Err(Error::Parameter(format!(
                        "method `{name}` has no trials"
                    )));
                }
                let shape = (trials[0].test1.map(|e| e.n), trials[0].test2.map(|e| e.n));
                let mut per1: Vec<(f64, usize)> = Vec::new();
                let mut per2: Vec<(f64, usize)> = Vec::new();
                let mut perc: Vec<(f64, usize)> = Vec::new();
                for trial in trials {
                    if (trial.test1.map(|e| e.n), trial.test2.map(|e| e.n)) != shape {
                        return Err(Error::Parameter(format!(
                            "method `{name}` has trials of different shapes"
                        )));
                    }
                    if let Some(e) = &trial.test1 {
                        per1.push((e.rmse(), e.n));
                    }
                    if let Some(e) = &trial.test2 {
                        per2.push((e.rmse(), e.n));
                    }
                    if let (Some(a), Some(b)) = (&trial.test1, &trial.test2) {
                        let pooled = SetEval::pooled(a, b);
                        check_identity(a.rmse(), a.n, b.rmse(), b.n, pooled.rmse())?;
                        perc.push((pooled.rmse(), pooled.n));
                    }
                }
                if per1.is_empty() && per2.is_empty() {
                    return Err(Error::Parameter(format!(
                        "method `{name}` has no evaluated sets"
                    )));
                }
                if !per1.is_empty() {
                    report.test1 = Some(stochastic_entry(&per1));
                }
                if !per2.is_empty() {
                    report.test2 = Some(stochastic_entry(&per2));
                }
                if !perc.is_empty() {
                    report.combined = Some(stochastic_entry(&perc));
                }
                stochastic_names.push(name.clone());
            }
        }
        methods.insert(name.clone(), report);
    }

    let mut improvements = Vec::new();
    for method in &deterministic_names {
        for baseline in &stochastic_names {
            for column in COLUMNS {
                let (Some(m), Some(b)) = (
                    methods[method].entry(column),
                    methods[baseline].entry(column),
                ) else {
                    continue;
                };
                improvements.push(Improvement {
                    method: method.clone(),
                    baseline: baseline.clone(),
                    column: column.to_string(),
                    delta: b.rmse - m.rmse,
                });
            }
        }
    }

    Ok(EvalReport {
        methods,
        improvements,
        metadata,
    })
}

impl EvalReport {
    /// CSV rows `method,set,rmse,variance,n` (variance empty when absent).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(["method", "set", "rmse", "variance", "n"])
            .map_err(|e| Error::Contract(format!("csv write: {e}")))?;
        for (name, report) in &self.methods {
            for column in COLUMNS {
                if let Some(entry) = report.entry(column) {
                    w.write_record([
                        name.as_str(),
                        column,
                        &entry.rmse.to_string(),
                        &entry.variance.map(|v| v.to_string()).unwrap_or_default(),
                        &entry.n_reviews.to_string(),
                    ])
                    .map_err(|e| Error::Contract(format!("csv write: {e}")))?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Contract(format!("report serialization: {e}")))
    }

    pub fn from_json_str(s: &str) -> Result<EvalReport> {
        serde_json::from_str(s).map_err(|e| Error::Contract(format!("report parse: {e}")))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_json_string()?.as_bytes())
            .map_err(|e| Error::io(path, e))?;
        file.write_all(b"\n").map_err(|e| Error::io(path, e))
    }

    /// Human-readable aligned table, one row per method plus improvement
    /// lines for each (method, baseline) pair.
    pub fn render_table(&self) -> String {
        let cell = |entry: &Option<ReportEntry>| match entry {
            None => "-".to_string(),
            Some(e) => match e.variance {
                Some(v) => format!("{:.4}±{:.1e} (sd {:.4})", e.rmse, v, e.stddev.unwrap_or(0.0)),
                None => format!("{:.4}", e.rmse),
            },
        };
        let mut rows: Vec<[String; 4]> = vec![[
            String::new(),
            "Test set 1".into(),
            "Test set 2".into(),
            "Test set 1 + Test set 2".into(),
        ]];
        for (name, report) in &self.methods {
            rows.push([
                name.clone(),
                cell(&report.test1),
                cell(&report.test2),
                cell(&report.combined),
            ]);
        }
        let mut widths = [0usize; 4];
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        for row in &rows {
            let line: Vec<String> = row
                .iter()
                .zip(widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        for imp in &self.improvements {
            out.push_str(&format!(
                "improvement of {} over {} on {}: {:.4}\n",
                imp.method, imp.baseline, imp.column, imp.delta
            ));
        }
        out
    }
}
