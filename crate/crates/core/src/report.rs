//! Audit and sweep reports: canonical JSON plus flat CSV for plotting.
//!
//! A report never contains `null`; optional sections are omitted when
//! absent, so a `null` in the serialized form can only come from a NaN or
//! infinite value and is rejected on write.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::debias::conceptor::Conceptor;
use crate::debias::hard::HardDebiasOutcome;
use crate::debias::{SoftWeatConfig, SoftWeatPlan};
use crate::embedding::{EmbeddingFormat, EmbeddingStore};
use crate::error::{Error, Result};
use crate::lexicon::ResolvedLexicon;
use crate::metrics::{mac_lexicon, weat_all_pairs, MacResult, WeatSummary};
use crate::rnsb::{rnsb, one_tailed_t_test, RnsbConfig, RnsbResult, SentimentLexicon, TTestResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub path: String,
    pub format: EmbeddingFormat,
    pub words: usize,
    pub dim: usize,
    pub normalized: bool,
    pub duplicates_dropped: usize,
    pub zero_rows: usize,
}

impl EmbeddingMeta {
    pub fn describe(store: &EmbeddingStore, path: impl Into<String>, format: EmbeddingFormat) -> Self {
        Self {
            path: path.into(),
            format,
            words: store.len(),
            dim: store.dim(),
            normalized: store.is_normalized(),
            duplicates_dropped: store.duplicates_dropped(),
            zero_rows: store.zero_row_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconMeta {
    pub class_name: String,
    pub subclasses: Vec<String>,
    pub attribute_sets: Vec<String>,
    pub equality_sets: usize,
    pub dropped_targets: Vec<String>,
    pub dropped_attribute_words: Vec<String>,
    pub dropped_attribute_sets: Vec<String>,
    pub dropped_equality_sets: Vec<String>,
}

impl LexiconMeta {
    pub fn describe(lexicon: &ResolvedLexicon) -> Self {
        let r = &lexicon.report;
        Self {
            class_name: lexicon.class_name.clone(),
            subclasses: lexicon.subclass_names(),
            attribute_sets: lexicon.attribute_sets.iter().map(|a| a.name.clone()).collect(),
            equality_sets: lexicon.equality_sets.len(),
            dropped_targets: r.dropped_targets.clone(),
            dropped_attribute_words: r.dropped_attribute_words.clone(),
            dropped_attribute_sets: r.dropped_attribute_sets.clone(),
            dropped_equality_sets: r.dropped_equality_sets.clone(),
        }
    }
}

/// Conventions in force for every number in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub weat_effect_size_std: String,
    pub weat_aggregate: String,
    pub mac_form: String,
    pub rnsb: RnsbConfig,
    pub normalized_on_load: bool,
}

impl Settings {
    pub fn new(rnsb: RnsbConfig, normalized_on_load: bool) -> Self {
        Self {
            weat_effect_size_std: "population standard deviation over T1 and T2 combined".into(),
            weat_aggregate: "mean |effect size| over unordered subclass pairs and unordered attribute-set pairs".into(),
            mac_form: "mean cosine distance; deviation reported as |1 - MAC|".into(),
            rnsb,
            normalized_on_load,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub weat: WeatSummary,
    pub mac: MacResult,
    /// `|1 - MAC|`.
    pub mac_deviation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rnsb: Option<RnsbResult>,
}

/// WEAT, MAC and (when a sentiment lexicon is given) RNSB on one store.
pub fn measure(
    store: &EmbeddingStore,
    lexicon: &ResolvedLexicon,
    sentiment: Option<&SentimentLexicon>,
    rnsb_config: &RnsbConfig,
) -> Result<Metrics> {
    let weat = weat_all_pairs(store, lexicon)?;
    let mac = mac_lexicon(store, lexicon)?;
    let rnsb = sentiment.map(|s| rnsb(store, lexicon, s, rnsb_config)).transpose()?;
    Ok(Metrics {
        mac_deviation: mac.deviation(),
        weat,
        mac,
        rnsb,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MethodDetails {
    Baseline,
    Hard {
        k: usize,
        explained_variance: Vec<f64>,
        neutralized: usize,
        preserved: usize,
        degenerate: Vec<String>,
        equalized_sets: usize,
        warnings: Vec<String>,
    },
    Softweat {
        config: SoftWeatConfig,
        translation: String,
        plans: Vec<SoftWeatPlan>,
    },
    Conceptor {
        aperture: f64,
        centered: bool,
        source_word_count: usize,
        eigenvalues: Vec<f64>,
    },
}

impl MethodDetails {
    pub fn name(&self) -> &'static str {
        match self {
            MethodDetails::Baseline => "baseline",
            MethodDetails::Hard { .. } => "hard",
            MethodDetails::Softweat { .. } => "softweat",
            MethodDetails::Conceptor { .. } => "conceptor",
        }
    }

    pub fn hard(outcome: &HardDebiasOutcome) -> Self {
        MethodDetails::Hard {
            k: outcome.subspace.k(),
            explained_variance: outcome.subspace.explained_variance.clone(),
            neutralized: outcome.neutralize.neutralized,
            preserved: outcome.neutralize.preserved,
            degenerate: outcome.neutralize.degenerate.clone(),
            equalized_sets: outcome.equalize.sets,
            warnings: outcome.equalize.warnings.clone(),
        }
    }

    pub fn softweat(config: SoftWeatConfig, plans: Vec<SoftWeatPlan>) -> Self {
        MethodDetails::Softweat {
            config,
            translation: "x + lambda * (|c| v - c), c = expanded-set centroid, v = chosen null-space vector".into(),
            plans,
        }
    }

    pub fn conceptor(c: &Conceptor, centered: bool) -> Self {
        MethodDetails::Conceptor {
            aperture: c.aperture,
            centered,
            source_word_count: c.source_word_count,
            eigenvalues: c.eigenvalues.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub details: MethodDetails,
    pub metrics: Metrics,
    /// One-tailed Welch test that baseline RNSB runs exceed this method's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rnsb_ttest_vs_baseline: Option<TTestResult>,
}

impl MethodReport {
    pub fn baseline(metrics: Metrics) -> Self {
        Self {
            details: MethodDetails::Baseline,
            metrics,
            rnsb_ttest_vs_baseline: None,
        }
    }

    /// Attach the t-test against `baseline` when both carry RNSB runs.
    pub fn compared_to(details: MethodDetails, metrics: Metrics, baseline: &Metrics) -> Result<Self> {
        let rnsb_ttest_vs_baseline = match (&baseline.rnsb, &metrics.rnsb) {
            (Some(pre), Some(post)) => Some(one_tailed_t_test(&pre.per_run_kl(), &post.per_run_kl())?),
            _ => None,
        };
        Ok(Self {
            details,
            metrics,
            rnsb_ttest_vs_baseline,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub tool_version: String,
    /// ISO-8601, UTC.
    pub timestamp: String,
    pub embedding: EmbeddingMeta,
    pub lexicon: LexiconMeta,
    pub settings: Settings,
    pub results: Vec<MethodReport>,
}

pub fn utc_timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Paths of every `null` in `v`, i.e. every non-finite number.
fn null_paths(v: &Value, path: &mut String, out: &mut Vec<String>) {
    match v {
        Value::Null => out.push(path.clone()),
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                let len = path.len();
                path.push_str(&format!("[{i}]"));
                null_paths(item, path, out);
                path.truncate(len);
            }
        }
        Value::Object(map) => {
            for (k, item) in map {
                let len = path.len();
                path.push('.');
                path.push_str(k);
                null_paths(item, path, out);
                path.truncate(len);
            }
        }
        _ => {}
    }
}

fn to_checked_json<T: Serialize>(value: &T) -> Result<String> {
    let tree = serde_json::to_value(value).map_err(|e| Error::Serialization(e.to_string()))?;
    let mut bad = Vec::new();
    null_paths(&tree, &mut String::new(), &mut bad);
    if !bad.is_empty() {
        return Err(Error::Serialization(format!("non-finite values at {}", bad.join(", "))));
    }
    serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
}

/// One row of the long-format CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub method: String,
    pub metric: String,
    pub key: String,
    pub value: f64,
}

impl AuditReport {
    pub fn new(embedding: EmbeddingMeta, lexicon: LexiconMeta, settings: Settings, results: Vec<MethodReport>) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            timestamp: utc_timestamp(),
            embedding,
            lexicon,
            settings,
            results,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_checked_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_json()?)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }

    /// Flat table: one row per (method, metric, key) value.
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let mut rows = Vec::new();
        for r in &self.results {
            let method = r.details.name();
            let mut push = |metric: &str, key: String, value: f64| {
                rows.push(CsvRow {
                    method: method.to_string(),
                    metric: metric.to_string(),
                    key,
                    value,
                })
            };
            let m = &r.metrics;
            push("weat_aggregate", String::new(), m.weat.aggregate);
            for c in &m.weat.combinations {
                let key = format!("{}|{}|{}|{}", c.target_a, c.target_b, c.attribute_a, c.attribute_b);
                push("weat_effect_size", key.clone(), c.result.effect_size);
                push("weat_statistic", key, c.result.statistic);
            }
            push("mac", String::new(), m.mac.mac);
            push("mac_deviation", String::new(), m.mac_deviation);
            for p in &m.mac.per_pair {
                push("mac_pair", format!("{}|{}", p.target_set, p.attribute_set), p.mean_distance);
            }
            if let Some(rn) = &m.rnsb {
                push("rnsb_kl", String::new(), rn.kl);
                push("rnsb_kl_std", String::new(), rn.kl_std);
                for (k, v) in &rn.per_subclass_negative_prob {
                    push("negative_probability", k.clone(), *v);
                }
                for (k, v) in &rn.distribution {
                    push("rnsb_distribution", k.clone(), *v);
                }
            }
            if let Some(t) = &r.rnsb_ttest_vs_baseline {
                push("ttest_t", String::new(), t.t);
                push("ttest_p", String::new(), t.p);
                push("ttest_df", String::new(), t.df);
            }
        }
        rows
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_csv(path.as_ref(), &self.csv_rows())
    }

    pub fn result(&self, method: &str) -> Option<&MethodReport> {
        self.results.iter().find(|r| r.details.name() == method)
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Serialization(format!("{}: {other:?}", path.display())),
    }
}

/// Metrics for one λ of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub weat: f64,
    pub mac_deviation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rnsb: Option<f64>,
}

impl SweepRow {
    pub fn from_metrics(lambda: f64, m: &Metrics) -> Self {
        Self {
            lambda,
            weat: m.weat.aggregate,
            mac_deviation: m.mac_deviation,
            rnsb: m.rnsb.as_ref().map(|r| r.kl),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: String,
    pub tool_version: String,
    pub timestamp: String,
    pub embedding: EmbeddingMeta,
    pub softweat: SoftWeatConfig,
    pub rows: Vec<SweepRow>,
}

/// Grid values must be finite and strictly increasing.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    if let Some(x) = grid.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("sweep grid value {x} is not finite")));
    }
    if let Some(w) = grid.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(format!(
            "sweep grid must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

impl SweepResult {
    pub fn grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.lambda).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        check_grid(&self.grid())?;
        to_checked_json(self)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_json()?)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }

    /// Columns `lambda,weat,mac_deviation,rnsb`; `rnsb` is empty when not
    /// measured.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_csv(path.as_ref(), &self.rows)
    }
}
