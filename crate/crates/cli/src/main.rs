//! twistkit command-line interface.
//!
//! Every subcommand is pure with respect to its inputs, configuration, and
//! seed: re-running a command yields byte-identical output. Primary output
//! goes to stdout, diagnostics to stderr. Exit codes: 0 success, 1 usage
//! error, 2 data or provider error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use twistkit::decoder::{decode, DecoderConfig};
use twistkit::g2p::transcribe_text;
use twistkit::lm::remote::RemoteProvider;
use twistkit::lm::{lm_tokenize, perplexity, NGramModel, NextTokenProvider, TextGenerator};
use twistkit::metrics::{metric_report, MetricReport};
use twistkit::phonology::Phoneme;
use twistkit::pipeline::{
    self, run_pipeline, GenerationConfig, PhonemicMetric, PipelineConfig, PipelineEnv,
    ReferenceStats, Stage, StubGenerator, TwisterRecord,
};
use twistkit::vocab::build_candidate_list_for_pair;

mod config;
use config::{ConfigOverrides, LoadedAssets, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "twistkit", version, about = "Tongue-twister phonology toolkit", disable_help_subcommand = true)]
struct Cli {
    #[command(flatten)]
    globals: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalOpts {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// Pronouncing dictionary (CMUdict format).
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    /// Phoneme feature table.
    #[arg(long, global = true)]
    feature_table: Option<PathBuf>,
    /// Letter-to-sound fallback rules.
    #[arg(long, global = true)]
    g2p_rules: Option<PathBuf>,
    /// Word-embedding table.
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// Function-word list.
    #[arg(long, global = true)]
    stopwords: Option<PathBuf>,
    /// Offensive-word bank.
    #[arg(long, global = true)]
    profanity: Option<PathBuf>,
    /// Familiar-word list for the Dale-Chall index.
    #[arg(long, global = true)]
    familiar: Option<PathBuf>,
    /// Word-initial consonant set.
    #[arg(long, global = true)]
    wip: Option<PathBuf>,
    /// Adjective/adverb list for topic sampling.
    #[arg(long, global = true)]
    adjectives: Option<PathBuf>,
    /// Noun list for topic sampling.
    #[arg(long, global = true)]
    nouns: Option<PathBuf>,
    /// Provider endpoint: "ngram:PATH" or an http(s) URL.
    #[arg(long, global = true)]
    provider: Option<String>,
    /// Seed for all randomized choices.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transcribe text to ARPABET (or IPA).
    Transcribe {
        #[arg(long, conflicts_with = "file")]
        text: Option<String>,
        /// One text per line.
        #[arg(long)]
        file: Option<PathBuf>,
        /// Render IPA instead of ARPABET.
        #[arg(long)]
        ipa: bool,
    },
    /// Score texts with the full metric suite.
    Metrics {
        #[arg(long, conflicts_with = "file")]
        text: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
        /// csv (default) or jsonl.
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Build the shuffled phoneme-constrained candidate list for a topic.
    Vocab {
        #[arg(long)]
        topic: String,
        /// Force the primary phoneme (IPA symbol).
        #[arg(long)]
        ph: Option<String>,
        /// Candidates per phoneme bank.
        #[arg(short, long, default_value_t = 10)]
        n: usize,
    },
    /// Print a phoneme and its nearest word-initial neighbour.
    Pair {
        /// Primary phoneme (IPA symbol).
        #[arg(long)]
        ph: String,
    },
    /// Phoneme-aware constrained decoding for a topic.
    Decode {
        #[arg(long)]
        topic: String,
        #[arg(long, default_value_t = 30)]
        max_length: usize,
        /// Write the step trace (step, token, rank, reason) to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Emit the full decode result as JSON instead of plain text.
        #[arg(long)]
        json: bool,
    },
    /// Train an n-gram model and write its counts file.
    NgramTrain {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(short, default_value_t = 1.0)]
        k: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sequence perplexity under the configured provider.
    Score {
        #[arg(long, conflicts_with = "file")]
        text: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Run the refinement filters over a record file.
    Filter {
        /// Line-delimited JSON records.
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        ppl_mean: f64,
        #[arg(long, default_value_t = 0.0)]
        ppl_std: f64,
        #[arg(long, default_value_t = 0.0)]
        phon_mean: f64,
        #[arg(long, default_value_t = 0.0)]
        phon_std: f64,
        /// Token-sort-ratio dedup threshold (percent).
        #[arg(long, default_value_t = 60.0)]
        threshold: f64,
        /// Phonemic filter metric: iped or oped.
        #[arg(long, default_value = "iped")]
        metric: String,
        /// Comma-separated stage order.
        #[arg(
            long,
            default_value = "ppl_filter,phonemic_filter,dedup,profanity_filter,topic_dedup"
        )]
        stages: String,
        /// Kept records go here (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stage report JSON goes here (stderr summary if omitted).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the dataset pipeline: generate (or read) records, refine, enrich.
    Pipeline {
        /// Start from existing line-delimited JSON records.
        #[arg(long, conflicts_with = "topics")]
        records: Option<PathBuf>,
        /// Generate this many topics instead.
        #[arg(long)]
        topics: Option<usize>,
        /// Use the deterministic stub generator instead of a remote provider.
        #[arg(long)]
        dry_run: bool,
        #[arg(long, default_value_t = 1e9)]
        ppl_mean: f64,
        #[arg(long, default_value_t = 0.0)]
        ppl_std: f64,
        #[arg(long, default_value_t = 1e9)]
        phon_mean: f64,
        #[arg(long, default_value_t = 0.0)]
        phon_std: f64,
        #[arg(long, default_value_t = 60.0)]
        threshold: f64,
        /// Candidates per phoneme bank during generation.
        #[arg(short, long, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Probe the remote provider's three endpoints.
    ServeCheck,
}

/// The configured next-token provider.
enum Provider {
    Ngram(NGramModel),
    Remote(RemoteProvider),
}

impl Provider {
    fn open(endpoint: &str) -> Result<Self, CliError> {
        if let Some(path) = endpoint.strip_prefix("ngram:") {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("cannot read model {path}: {e}")))?;
            let model =
                NGramModel::from_text(&text).map_err(|e| CliError::Data(e.to_string()))?;
            Ok(Provider::Ngram(model))
        } else if endpoint.starts_with("http://") || endpoint.starts_with("https://") {
            Ok(Provider::Remote(RemoteProvider::new(endpoint)))
        } else {
            Err(CliError::Usage(format!(
                "provider must be ngram:PATH or an http(s) URL, got {endpoint:?}"
            )))
        }
    }

    fn as_next_token(&self) -> &dyn NextTokenProvider {
        match self {
            Provider::Ngram(m) => m,
            Provider::Remote(r) => r,
        }
    }
}

fn require_provider(cfg: &RunConfig) -> Result<Provider, CliError> {
    let endpoint = cfg
        .provider
        .as_deref()
        .ok_or_else(|| CliError::Usage("no provider configured (use --provider)".into()))?;
    Provider::open(endpoint)
}

fn read_texts(text: &Option<String>, file: &Option<PathBuf>) -> Result<Vec<String>, CliError> {
    match (text, file) {
        (Some(t), None) => Ok(vec![t.clone()]),
        (None, Some(f)) => {
            let content = fs::read_to_string(f)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", f.display())))?;
            Ok(content
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(str::to_string)
                .collect())
        }
        _ => Err(CliError::Usage("exactly one of --text or --file is required".into())),
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_or_print(path: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, content)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn parse_stage_list(list: &str, allow_refine: bool) -> Result<Vec<Stage>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| match name {
            "refine" if allow_refine => Ok(Stage::Refine),
            "ppl_filter" => Ok(Stage::PplFilter),
            "phonemic_filter" => Ok(Stage::PhonemicFilter),
            "dedup" => Ok(Stage::Dedup),
            "profanity_filter" => Ok(Stage::ProfanityFilter),
            "topic_dedup" => Ok(Stage::TopicDedup),
            other => Err(CliError::Usage(format!("unknown stage {other:?}"))),
        })
        .collect()
}

fn parse_metric(name: &str) -> Result<PhonemicMetric, CliError> {
    match name {
        "iped" => Ok(PhonemicMetric::Iped),
        "oped" => Ok(PhonemicMetric::Oped),
        other => Err(CliError::Usage(format!("metric must be iped or oped, got {other:?}"))),
    }
}

fn find_phoneme(assets: &LoadedAssets, ipa: &str) -> Result<Phoneme, CliError> {
    assets
        .table
        .by_ipa(ipa)
        .cloned()
        .map_err(|e| CliError::Data(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file_cfg = match &cli.globals.config {
        Some(path) => config::parse_config_file(path)?,
        None => ConfigOverrides::default(),
    };
    let flags = ConfigOverrides {
        lexicon: cli.globals.lexicon.clone(),
        feature_table: cli.globals.feature_table.clone(),
        g2p_rules: cli.globals.g2p_rules.clone(),
        embeddings: cli.globals.embeddings.clone(),
        stopwords: cli.globals.stopwords.clone(),
        profanity: cli.globals.profanity.clone(),
        familiar: cli.globals.familiar.clone(),
        wip: cli.globals.wip.clone(),
        adjectives: cli.globals.adjectives.clone(),
        nouns: cli.globals.nouns.clone(),
        provider: cli.globals.provider.clone(),
        seed: cli.globals.seed,
    };
    let cfg = RunConfig::resolve(flags, file_cfg);

    if cli.globals.print_config {
        print!("{}", cfg.render());
        return Ok(());
    }

    let assets = LoadedAssets::load(&cfg)?;
    let env = PipelineEnv {
        lexicon: &assets.lexicon,
        rules: &assets.rules,
        table: &assets.table,
    };

    match cli.command {
        Command::Transcribe { text, file, ipa } => {
            for text in read_texts(&text, &file)? {
                let t = transcribe_text(&text, &assets.lexicon, &assets.rules, &assets.table);
                if ipa {
                    println!("{}", t.ipa_text());
                } else {
                    println!("{}", t.arpabet_text());
                }
            }
            Ok(())
        }
        Command::Metrics { text, file, format } => {
            let texts = read_texts(&text, &file)?;
            match format.as_str() {
                "csv" => {
                    println!("text,{}", MetricReport::CSV_FIELDS);
                    for text in texts {
                        let report =
                            metric_report(&text, &assets.lexicon, &assets.rules, &assets.table, &assets.familiar)
                                .map_err(|e| CliError::Data(format!("{text:?}: {e}")))?;
                        println!("{},{}", csv_quote(&text), report.csv_row());
                    }
                }
                "jsonl" => {
                    for text in texts {
                        let report =
                            metric_report(&text, &assets.lexicon, &assets.rules, &assets.table, &assets.familiar)
                                .map_err(|e| CliError::Data(format!("{text:?}: {e}")))?;
                        let mut value = serde_json::to_value(&report)
                            .map_err(|e| CliError::Data(e.to_string()))?;
                        value["text"] = serde_json::Value::String(text);
                        println!("{value}");
                    }
                }
                other => return Err(CliError::Usage(format!("unknown format {other:?}"))),
            }
            Ok(())
        }
        Command::Vocab { topic, ph, n } => {
            let words: Vec<String> = topic.split_whitespace().map(str::to_string).collect();
            let phrase = twistkit::vocab::TopicPhrase {
                modifier: words.first().cloned().unwrap_or_default(),
                noun: words.get(1..).map(|w| w.join(" ")).unwrap_or_default(),
            };
            if phrase.modifier.is_empty() {
                return Err(CliError::Usage("topic must not be empty".into()));
            }
            let (ph1, ph2) = match ph {
                Some(symbol) => {
                    let ph1 = find_phoneme(&assets, &symbol)?;
                    let ph2 = assets
                        .table
                        .nearest_phoneme(&ph1, &assets.wip.without(&ph1))
                        .map_err(|e| CliError::Data(e.to_string()))?;
                    (ph1, ph2)
                }
                None => twistkit::vocab::select_phoneme_pair(&phrase, &assets.wip, cfg.seed, &assets.table)
                    .map_err(|e| CliError::Data(e.to_string()))?,
            };
            let list = build_candidate_list_for_pair(
                &phrase,
                &ph1,
                &ph2,
                &assets.lexicon,
                &assets.embeddings,
                n,
                cfg.seed,
            )
            .map_err(|e| CliError::Data(e.to_string()))?;
            println!("{} {}", list.ph1.ipa, list.ph2.ipa);
            for word in &list.words {
                println!("{}\t{}\t{:.6}", word.token, word.initial.ipa, word.score);
            }
            Ok(())
        }
        Command::Pair { ph } => {
            let ph1 = find_phoneme(&assets, &ph)?;
            let ph2 = assets
                .table
                .nearest_phoneme(&ph1, &assets.wip.without(&ph1))
                .map_err(|e| CliError::Data(e.to_string()))?;
            println!("{} {}", ph1.ipa, ph2.ipa);
            Ok(())
        }
        Command::Decode { topic, max_length, trace, json } => {
            let provider = require_provider(&cfg)?;
            let mut dec_cfg = DecoderConfig::new(
                assets.stopwords.clone(),
                assets.lexicon.headwords().map(str::to_string).collect(),
                cfg.seed,
            );
            dec_cfg.max_length = max_length;
            let result = decode(
                &topic,
                provider.as_next_token(),
                &dec_cfg,
                &assets.lexicon,
                &assets.rules,
                &assets.table,
                &assets.wip,
            )
            .map_err(|e| CliError::Data(e.to_string()))?;
            if let Some(path) = trace {
                fs::write(&path, result.trace_text())
                    .map_err(|e| CliError::Data(format!("cannot write trace: {e}")))?;
            }
            eprintln!(
                "ph1={} ph2={} status={:?} words={}",
                result.ph1.ipa,
                result.ph2.ipa,
                result.status,
                result.generated.len()
            );
            if json {
                println!(
                    "{}",
                    serde_json::to_string(&result).map_err(|e| CliError::Data(e.to_string()))?
                );
            } else {
                println!("{}", result.text());
            }
            Ok(())
        }
        Command::NgramTrain { corpus, order, k, out } => {
            let text = fs::read_to_string(&corpus)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", corpus.display())))?;
            if !(1..=3).contains(&order) {
                return Err(CliError::Usage("order must be 1, 2, or 3".into()));
            }
            if k <= 0.0 {
                return Err(CliError::Usage("k must be positive".into()));
            }
            let model = NGramModel::train(&text, order, k).map_err(|e| CliError::Data(e.to_string()))?;
            fs::write(&out, model.to_text())
                .map_err(|e| CliError::Data(format!("cannot write {}: {e}", out.display())))?;
            eprintln!(
                "trained order={order} k={k} vocab={} -> {}",
                model.vocab_len(),
                out.display()
            );
            Ok(())
        }
        Command::Score { text, file } => {
            let provider = require_provider(&cfg)?;
            for text in read_texts(&text, &file)? {
                let tokens = lm_tokenize(&text);
                let ppl = perplexity(provider.as_next_token(), &tokens)
                    .map_err(|e| CliError::Data(e.to_string()))?;
                println!("{ppl:.6}");
            }
            Ok(())
        }
        Command::Filter {
            records,
            ppl_mean,
            ppl_std,
            phon_mean,
            phon_std,
            threshold,
            metric,
            stages,
            out,
            report,
        } => {
            let text = fs::read_to_string(&records)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", records.display())))?;
            let input = pipeline::read_records(&text).map_err(|e| CliError::Data(e.to_string()))?;
            let stage_order = parse_stage_list(&stages, false)?;
            let needs_scorer = stage_order.contains(&Stage::PplFilter);
            let provider = if needs_scorer {
                Some(require_provider(&cfg)?)
            } else {
                None
            };
            let scorer_fallback = NGramModel::uniform(std::iter::empty(), 1.0);
            let scorer: &dyn NextTokenProvider = match &provider {
                Some(p) => p.as_next_token(),
                None => &scorer_fallback,
            };
            let mut pipe_cfg = PipelineConfig::new(ReferenceStats {
                ppl_mean,
                ppl_std,
                phon_mean,
                phon_std,
                source_label: "cli".into(),
            });
            pipe_cfg.stage_order = stage_order;
            pipe_cfg.dedup_threshold = threshold;
            pipe_cfg.phonemic_metric = parse_metric(&metric)?;
            let (kept, run_report) = run_pipeline(
                input,
                &StubGenerator,
                scorer,
                &assets.profanity,
                env,
                &pipe_cfg,
            )
            .map_err(|e| CliError::Data(e.to_string()))?;
            emit_records_and_report(&kept, &run_report, &out, &report)
        }
        Command::Pipeline {
            records,
            topics,
            dry_run,
            ppl_mean,
            ppl_std,
            phon_mean,
            phon_std,
            threshold,
            n,
            out,
            report,
        } => {
            let remote = match (&cfg.provider, dry_run) {
                (_, true) => None,
                (Some(endpoint), false) => match Provider::open(endpoint)? {
                    Provider::Remote(r) => Some(r),
                    Provider::Ngram(_) => {
                        return Err(CliError::Usage(
                            "pipeline generation needs a remote provider (or --dry-run)".into(),
                        ))
                    }
                },
                (None, false) => {
                    return Err(CliError::Usage(
                        "pipeline needs --dry-run or a remote --provider".into(),
                    ))
                }
            };
            let generator: &dyn TextGenerator = match &remote {
                Some(r) => r,
                None => &StubGenerator,
            };

            let input = match (&records, topics) {
                (Some(path), None) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
                    pipeline::read_records(&text).map_err(|e| CliError::Data(e.to_string()))?
                }
                (None, Some(n_topics)) => {
                    let gen_cfg = GenerationConfig {
                        n_topics,
                        seed: cfg.seed,
                        n_candidates: n,
                        paraphrases: true,
                        source_label: if dry_run { "stub".into() } else { "remote".into() },
                        ..GenerationConfig::default()
                    };
                    pipeline::generate_records(
                        &gen_cfg,
                        generator,
                        &assets.adjectives,
                        &assets.nouns,
                        &assets.wip,
                        &assets.embeddings,
                        env,
                    )
                    .map_err(|e| CliError::Data(e.to_string()))?
                }
                _ => {
                    return Err(CliError::Usage(
                        "exactly one of --records or --topics is required".into(),
                    ))
                }
            };

            // Without a scoring provider the PPL stage uses the corpus-trained
            // bundled model.
            let scorer_model;
            let provider_for_scoring = cfg.provider.as_deref().map(Provider::open).transpose()?;
            let scorer: &dyn NextTokenProvider = match &provider_for_scoring {
                Some(p) => p.as_next_token(),
                None => {
                    scorer_model = NGramModel::train(twistkit::assets::CORPUS_SRC, 3, 1.0)
                        .map_err(|e| CliError::Data(e.to_string()))?;
                    &scorer_model
                }
            };

            let pipe_cfg = {
                let mut c = PipelineConfig::new(ReferenceStats {
                    ppl_mean,
                    ppl_std,
                    phon_mean,
                    phon_std,
                    source_label: "cli".into(),
                });
                c.dedup_threshold = threshold;
                c
            };
            let (kept, run_report) =
                run_pipeline(input, generator, scorer, &assets.profanity, env, &pipe_cfg)
                    .map_err(|e| CliError::Data(e.to_string()))?;
            emit_records_and_report(&kept, &run_report, &out, &report)
        }
        Command::ServeCheck => {
            let provider = require_provider(&cfg)?;
            let remote = match provider {
                Provider::Remote(r) => r,
                Provider::Ngram(_) => {
                    return Err(CliError::Usage("serve-check needs an http(s) provider".into()))
                }
            };
            let mut failed = false;
            for (endpoint, result) in remote.check_endpoints() {
                match result {
                    Ok(()) => println!("ok {endpoint}"),
                    Err(e) => {
                        failed = true;
                        println!("fail {endpoint}: {e}");
                    }
                }
            }
            if failed {
                Err(CliError::Data("one or more endpoints failed".into()))
            } else {
                Ok(())
            }
        }
    }
}

fn emit_records_and_report(
    kept: &[TwisterRecord],
    run_report: &pipeline::PipelineReport,
    out: &Option<PathBuf>,
    report: &Option<PathBuf>,
) -> Result<(), CliError> {
    let records_text = pipeline::write_records(kept);
    write_or_print(out, &records_text)?;
    let report_json =
        serde_json::to_string_pretty(run_report).map_err(|e| CliError::Data(e.to_string()))?;
    match report {
        Some(path) => fs::write(path, report_json)
            .map_err(|e| CliError::Data(format!("cannot write report: {e}")))?,
        None => {
            for stage in &run_report.stages {
                eprintln!(
                    "stage {}: input {} kept {} removed {}",
                    stage.stage, stage.input, stage.kept, stage.removed
                );
            }
            eprintln!("final count {}", run_report.final_count);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes, anything else is a
            // usage error.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
