//! The `fairvec` command line: argument definitions and the commands
//! behind them. The binary only parses arguments and maps errors to exit
//! codes; everything here is callable from Rust as well.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::debias::conceptor::conceptor_debias;
use crate::debias::hard::hard_debias;
use crate::debias::{softweat_debias, DebiasMethod, SoftWeatConfig};
use crate::embedding::{self, EmbeddingFormat, EmbeddingStore};
use crate::error::{Error, Result};
use crate::lexicon::{BiasLexicon, ResolvedLexicon};
use crate::metrics::{enumerate_analogies, AnalogyScore};
use crate::report::{
    check_grid, measure, utc_timestamp, AuditReport, EmbeddingMeta, LexiconMeta, MethodDetails, MethodReport, Settings,
    SweepResult, SweepRow, TOOL_VERSION,
};
use crate::rnsb::{DistributionMode, RnsbConfig, SentimentLexicon};

#[derive(Debug, Parser)]
#[command(name = "fairvec", version, about = "Measure and remove multiclass bias in word embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure WEAT, MAC and RNSB on an embedding.
    Audit(AuditArgs),
    /// Debias an embedding and report metrics before and after.
    Debias(DebiasArgs),
    /// List stereotypical analogies between subclasses.
    Analogies(AnalogiesArgs),
    /// Run SoftWEAT over a grid of lambda values.
    Sweep(SweepArgs),
    /// Convert between embedding file formats.
    Convert(ConvertArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EmbeddingArgs {
    /// Embedding file.
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long, value_enum, default_value_t = EmbeddingFormat::GloveText)]
    pub format: EmbeddingFormat,
    /// Read at most this many words.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Scale every vector to unit length after loading.
    #[arg(long)]
    pub normalize: bool,
}

impl EmbeddingArgs {
    pub fn load(&self) -> Result<EmbeddingStore> {
        let store = embedding::load(&self.embedding, self.format, self.limit)?;
        Ok(if self.normalize { store.normalize_all() } else { store })
    }

    pub fn meta(&self, store: &EmbeddingStore) -> EmbeddingMeta {
        EmbeddingMeta::describe(store, self.embedding.display().to_string(), self.format)
    }
}

#[derive(Debug, Clone, Args)]
pub struct LexiconArgs {
    /// Bias lexicon JSON; the bundled religion lexicon when omitted.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

impl LexiconArgs {
    pub fn load(&self) -> Result<BiasLexicon> {
        match &self.lexicon {
            Some(p) => BiasLexicon::load(p),
            None => Ok(BiasLexicon::religion()),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SentimentArgs {
    /// Positive sentiment words, one per line; bundled lists when omitted.
    #[arg(long, requires = "sentiment_neg")]
    pub sentiment_pos: Option<PathBuf>,
    /// Negative sentiment words, one per line.
    #[arg(long, requires = "sentiment_pos")]
    pub sentiment_neg: Option<PathBuf>,
    /// Number of RNSB classifier runs.
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    /// Seed of the first RNSB run; run i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Normalize negative probabilities per target term instead of per subclass.
    #[arg(long)]
    pub per_term: bool,
}

impl SentimentArgs {
    pub fn load(&self) -> Result<SentimentLexicon> {
        match (&self.sentiment_pos, &self.sentiment_neg) {
            (Some(p), Some(n)) => SentimentLexicon::load(p, n),
            _ => Ok(SentimentLexicon::bundled()),
        }
    }

    pub fn rnsb_config(&self) -> RnsbConfig {
        RnsbConfig {
            runs: self.runs,
            base_seed: self.seed,
            mode: if self.per_term { DistributionMode::PerTerm } else { DistributionMode::PerSubclass },
            ..RnsbConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    #[command(flatten)]
    pub sentiment: SentimentArgs,
    /// Report JSON; a flat CSV is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    #[arg(long, value_enum)]
    pub method: DebiasMethod,
    /// Conceptor aperture.
    #[arg(long, default_value_t = 10.0)]
    pub alpha: f64,
    /// Centre bias-word vectors before building the conceptor.
    #[arg(long)]
    pub centered: bool,
    /// SoftWEAT translation scale.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// SoftWEAT effect-size threshold for selecting attribute sets.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// SoftWEAT nearest neighbours added per target term.
    #[arg(long, default_value_t = 5)]
    pub neighbors: usize,
    /// Hard-debias subspace size; number of subclasses minus one when omitted.
    #[arg(long)]
    pub k: Option<usize>,
}

impl MethodArgs {
    pub fn softweat_config(&self) -> SoftWeatConfig {
        SoftWeatConfig {
            lambda: self.lambda,
            threshold: self.threshold,
            neighbors: self.neighbors,
            ..SoftWeatConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DebiasArgs {
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    #[command(flatten)]
    pub sentiment: SentimentArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Debiased embedding output.
    #[arg(long)]
    pub out_embedding: PathBuf,
    /// Format of the debiased embedding; the input format when omitted.
    #[arg(long, value_enum)]
    pub out_format: Option<EmbeddingFormat>,
    /// Pre/post report JSON; a flat CSV is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AnalogiesArgs {
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    /// Maximum distance between x and y.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.15)]
    pub min_score: f64,
    /// CSV with columns a,b,x,y,score.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    #[command(flatten)]
    pub sentiment: SentimentArgs,
    /// Comma-separated, strictly increasing lambda values.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 5)]
    pub neighbors: usize,
    /// Sweep JSON; a CSV is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub out_format: EmbeddingFormat,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Audit(a) => cmd_audit(&a).map(drop),
        Command::Debias(a) => cmd_debias(&a).map(drop),
        Command::Analogies(a) => cmd_analogies(&a).map(drop),
        Command::Sweep(a) => cmd_sweep(&a).map(drop),
        Command::Convert(a) => cmd_convert(&a),
    }
}

/// `report.json` → `report.csv`.
pub fn csv_sibling(out: &Path) -> Result<PathBuf> {
    if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return Err(Error::InvalidInput(format!(
            "{}: --out names the JSON report; the CSV is written next to it",
            out.display()
        )));
    }
    Ok(out.with_extension("csv"))
}

struct Inputs {
    store: EmbeddingStore,
    lexicon: ResolvedLexicon,
    embedding_meta: EmbeddingMeta,
    lexicon_meta: LexiconMeta,
}

fn load_inputs(e: &EmbeddingArgs, l: &LexiconArgs) -> Result<Inputs> {
    let store = e.load()?;
    let lexicon = l.load()?.resolve(&store)?;
    Ok(Inputs {
        embedding_meta: e.meta(&store),
        lexicon_meta: LexiconMeta::describe(&lexicon),
        store,
        lexicon,
    })
}

fn write_report(report: &AuditReport, out: &Path) -> Result<()> {
    let csv = csv_sibling(out)?;
    report.write_json(out)?;
    report.write_csv(&csv)?;
    log::info!("wrote {} and {}", out.display(), csv.display());
    Ok(())
}

pub fn cmd_audit(args: &AuditArgs) -> Result<AuditReport> {
    let inputs = load_inputs(&args.embedding, &args.lexicon)?;
    let sentiment = args.sentiment.load()?;
    let config = args.sentiment.rnsb_config();
    let metrics = measure(&inputs.store, &inputs.lexicon, Some(&sentiment), &config)?;
    let report = AuditReport::new(
        inputs.embedding_meta,
        inputs.lexicon_meta,
        Settings::new(config, args.embedding.normalize),
        vec![MethodReport::baseline(metrics)],
    );
    write_report(&report, &args.out)?;
    Ok(report)
}

/// Apply one debiasing method and describe what it did.
pub fn apply_method(
    store: &EmbeddingStore,
    lexicon: &ResolvedLexicon,
    method: &MethodArgs,
) -> Result<(EmbeddingStore, MethodDetails)> {
    match method.method {
        DebiasMethod::Hard => {
            let out = hard_debias(store, lexicon, method.k)?;
            let details = MethodDetails::hard(&out);
            Ok((out.store, details))
        }
        DebiasMethod::Softweat => {
            let config = method.softweat_config();
            let out = softweat_debias(store, lexicon, &config)?;
            Ok((out.store, MethodDetails::softweat(config, out.plans)))
        }
        DebiasMethod::Conceptor => {
            let (out, c) = conceptor_debias(store, lexicon, method.alpha, method.centered)?;
            Ok((out, MethodDetails::conceptor(&c, method.centered)))
        }
    }
}

pub fn cmd_debias(args: &DebiasArgs) -> Result<AuditReport> {
    let inputs = load_inputs(&args.embedding, &args.lexicon)?;
    let sentiment = args.sentiment.load()?;
    let config = args.sentiment.rnsb_config();
    let (debiased, details) = apply_method(&inputs.store, &inputs.lexicon, &args.method)?;

    let out_format = args.out_format.unwrap_or(args.embedding.format);
    embedding::save(&debiased, &args.out_embedding, out_format)?;

    let pre = measure(&inputs.store, &inputs.lexicon, Some(&sentiment), &config)?;
    let post = measure(&debiased, &inputs.lexicon, Some(&sentiment), &config)?;
    let post = MethodReport::compared_to(details, post, &pre)?;
    let report = AuditReport::new(
        inputs.embedding_meta,
        inputs.lexicon_meta,
        Settings::new(config, args.embedding.normalize),
        vec![MethodReport::baseline(pre), post],
    );
    write_report(&report, &args.out)?;
    Ok(report)
}

/// Analogies between every ordered pair of distinct subclasses, best first.
pub fn lexicon_analogies(
    store: &EmbeddingStore,
    lexicon: &ResolvedLexicon,
    delta: f64,
    min_score: f64,
) -> Vec<AnalogyScore> {
    let terms: Vec<Vec<String>> = lexicon
        .subclasses
        .iter()
        .map(|s| s.targets.iter().map(|t| t.word.clone()).collect())
        .collect();
    let attributes: Vec<String> = lexicon
        .attribute_sets
        .iter()
        .flat_map(|a| a.words.iter().map(|t| t.word.clone()))
        .collect();
    let mut out = Vec::new();
    for (i, left) in terms.iter().enumerate() {
        for (j, right) in terms.iter().enumerate() {
            if i != j {
                out.extend(enumerate_analogies(store, left, right, &attributes, delta, min_score));
            }
        }
    }
    out.sort_by(|p, q| {
        q.score
            .total_cmp(&p.score)
            .then_with(|| (&p.a, &p.b, &p.x, &p.y).cmp(&(&q.a, &q.b, &q.x, &q.y)))
    });
    out
}

pub fn cmd_analogies(args: &AnalogiesArgs) -> Result<Vec<AnalogyScore>> {
    if !(args.delta >= 0.0) {
        return Err(Error::InvalidInput(format!("--delta must be non-negative, got {}", args.delta)));
    }
    let inputs = load_inputs(&args.embedding, &args.lexicon)?;
    let found = lexicon_analogies(&inputs.store, &inputs.lexicon, args.delta, args.min_score);
    let path = &args.out;
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
    w.write_record(["a", "b", "x", "y", "score"])
        .map_err(|e| Error::Serialization(e.to_string()))?;
    for s in &found {
        w.write_record([&s.a, &s.b, &s.x, &s.y, &s.score.to_string()])
            .map_err(|e| Error::Serialization(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    log::info!("{} analogies scored at least {}", found.len(), args.min_score);
    Ok(found)
}

/// SoftWEAT from the original store at every λ, each measured afresh.
pub fn sweep_lambda(
    store: &EmbeddingStore,
    lexicon: &ResolvedLexicon,
    sentiment: Option<&SentimentLexicon>,
    rnsb_config: &RnsbConfig,
    base: &SoftWeatConfig,
    grid: &[f64],
) -> Result<Vec<SweepRow>> {
    check_grid(grid)?;
    grid.iter()
        .map(|&lambda| {
            let config = SoftWeatConfig { lambda, ..*base };
            let out = softweat_debias(store, lexicon, &config)?;
            let m = measure(&out.store, lexicon, sentiment, rnsb_config)?;
            log::info!("lambda {lambda}: weat {:.5}, |1-mac| {:.5}", m.weat.aggregate, m.mac_deviation);
            Ok(SweepRow::from_metrics(lambda, &m))
        })
        .collect()
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepResult> {
    check_grid(&args.grid)?;
    let csv = csv_sibling(&args.out)?;
    let inputs = load_inputs(&args.embedding, &args.lexicon)?;
    let sentiment = args.sentiment.load()?;
    let base = SoftWeatConfig {
        threshold: args.threshold,
        neighbors: args.neighbors,
        ..SoftWeatConfig::default()
    };
    let rows = sweep_lambda(
        &inputs.store,
        &inputs.lexicon,
        Some(&sentiment),
        &args.sentiment.rnsb_config(),
        &base,
        &args.grid,
    )?;
    let result = SweepResult {
        parameter: "lambda".into(),
        tool_version: TOOL_VERSION.into(),
        timestamp: utc_timestamp(),
        embedding: inputs.embedding_meta,
        softweat: base,
        rows,
    };
    result.write_json(&args.out)?;
    result.write_csv(&csv)?;
    Ok(result)
}

pub fn cmd_convert(args: &ConvertArgs) -> Result<()> {
    let store = args.embedding.load()?;
    embedding::save(&store, &args.out, args.out_format)?;
    log::info!(
        "converted {} words ({} -> {})",
        store.len(),
        args.embedding.format.name(),
        args.out_format.name()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn defaults() {
        let cli = Cli::try_parse_from([
            "fairvec",
            "debias",
            "--embedding",
            "e.txt",
            "--method",
            "softweat",
            "--out-embedding",
            "o.txt",
            "--out",
            "r.json",
        ])
        .unwrap();
        let Command::Debias(d) = cli.command else { panic!() };
        assert_eq!(d.method.alpha, 10.0);
        assert_eq!(d.method.lambda, 0.5);
        assert_eq!(d.method.threshold, 0.5);
        assert_eq!(d.sentiment.runs, 20);
        assert_eq!(d.embedding.format, EmbeddingFormat::GloveText);

        let cli = Cli::try_parse_from(["fairvec", "sweep", "--embedding", "e", "--out", "s.json", "--grid", "0,0.5,1"]).unwrap();
        let Command::Sweep(s) = cli.command else { panic!() };
        assert_eq!(s.grid, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn sentiment_files_come_in_pairs() {
        let r = Cli::try_parse_from(["fairvec", "audit", "--embedding", "e", "--out", "r.json", "--sentiment-pos", "p"]);
        assert!(r.is_err());
    }

    #[test]
    fn csv_path_next_to_json() {
        assert_eq!(csv_sibling(Path::new("out/r.json")).unwrap(), PathBuf::from("out/r.csv"));
        assert!(csv_sibling(Path::new("r.csv")).is_err());
    }
}
