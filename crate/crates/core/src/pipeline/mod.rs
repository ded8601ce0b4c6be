//! Dataset construction: prompt building, remote (or stubbed) generation,
//! the refinement filter cascade, and record enrichment with phonetic
//! transcriptions.
//!
//! Filters partition their input — kept and removed sets are disjoint, cover
//! the input, and preserve input order — and every removal is reported with
//! its reason, so a run is fully auditable from the stage report.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::g2p::{transcribe_text, FallbackRules, Lexicon};
use crate::lm::{lm_tokenize, perplexity, GenParams, LmError, NextTokenProvider, TextGenerator};
use crate::metrics::{iped, oped};
use crate::phonology::PhonemeFeatureTable;
use crate::vocab::{
    build_candidate_list, sample_topic, EmbeddingTable, VocabError, WordInitialSet,
};

mod fuzzy;
pub mod prompts;

pub use fuzzy::token_sort_ratio;
pub use prompts::{build_prompt, PromptKind, PromptPayload};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("unknown prompt variant {0:?}")]
    UnknownPromptVariant(String),
    #[error("prompt payload mismatch: {0}")]
    PromptArity(String),
    #[error("stage {stage} failed: {source}")]
    StageFailure {
        stage: &'static str,
        #[source]
        source: LmError,
        /// Stages completed before the failure.
        report: PipelineReport,
    },
    #[error("record parse error at line {line}: {msg}")]
    RecordParse { line: usize, msg: String },
    #[error("reference stats invalid: {0}")]
    BadStats(String),
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

/// Which prompt produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptVariant {
    A,
    B,
    #[serde(rename = "human")]
    Human,
}

/// One dataset row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwisterRecord {
    pub tt_id: u64,
    pub topic: String,
    pub source: String,
    pub prompt_variant: PromptVariant,
    pub twister: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paraphrase: Option<String>,
    #[serde(default)]
    pub twister_arpabet: String,
    #[serde(default)]
    pub twister_ipa: String,
}

impl TwisterRecord {
    pub fn new(tt_id: u64, topic: &str, source: &str, variant: PromptVariant, twister: &str) -> Self {
        Self {
            tt_id,
            topic: topic.to_string(),
            source: source.to_string(),
            prompt_variant: variant,
            twister: twister.to_string(),
            paraphrase: None,
            twister_arpabet: String::new(),
            twister_ipa: String::new(),
        }
    }
}

/// Parse line-delimited JSON records.
pub fn read_records(src: &str) -> Result<Vec<TwisterRecord>, PipelineError> {
    src.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| PipelineError::RecordParse {
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// Render line-delimited JSON records.
pub fn write_records(records: &[TwisterRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Reference distribution statistics the threshold filters compare against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub ppl_mean: f64,
    pub ppl_std: f64,
    pub phon_mean: f64,
    pub phon_std: f64,
    pub source_label: String,
}

impl ReferenceStats {
    /// Means must be finite, deviations finite and non-negative.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let finite = [self.ppl_mean, self.ppl_std, self.phon_mean, self.phon_std]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.ppl_std < 0.0 || self.phon_std < 0.0 {
            return Err(PipelineError::BadStats(format!(
                "ppl {} ± {}, phonemic {} ± {}",
                self.ppl_mean, self.ppl_std, self.phon_mean, self.phon_std
            )));
        }
        Ok(())
    }
}

/// A record a filter rejected, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct RemovedRecord {
    pub record: TwisterRecord,
    pub reason: String,
}

/// Result of one partitioning filter.
#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<TwisterRecord>,
    pub removed: Vec<RemovedRecord>,
}

/// Immutable per-run text resources.
#[derive(Clone, Copy)]
pub struct PipelineEnv<'a> {
    pub lexicon: &'a Lexicon,
    pub rules: &'a FallbackRules,
    pub table: &'a PhonemeFeatureTable,
}

impl PipelineEnv<'_> {
    pub fn bundled() -> PipelineEnv<'static> {
        PipelineEnv {
            lexicon: crate::assets::lexicon(),
            rules: crate::assets::fallback_rules(),
            table: crate::assets::feature_table(),
        }
    }
}

/// Keep records whose perplexity under `scorer` is at most mean + std
/// (boundary inclusive).
pub fn ppl_filter(
    records: Vec<TwisterRecord>,
    scorer: &dyn NextTokenProvider,
    stats: &ReferenceStats,
) -> Result<FilterOutcome, LmError> {
    let threshold = stats.ppl_mean + stats.ppl_std;
    let mut out = FilterOutcome::default();
    for record in records {
        let tokens = lm_tokenize(&record.twister);
        let ppl = perplexity(scorer, &tokens)?;
        if ppl <= threshold {
            out.kept.push(record);
        } else {
            out.removed.push(RemovedRecord {
                reason: format!("ppl {ppl:.4} > {threshold:.4}"),
                record,
            });
        }
    }
    Ok(out)
}

/// Which transition metric the phonemic filter thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhonemicMetric {
    Iped,
    Oped,
}

/// Keep records whose phonemic score is at most mean + std (boundary
/// inclusive). Records that cannot be scored (too few words or phonemes) are
/// removed with the failure as reason.
pub fn phonemic_filter(
    records: Vec<TwisterRecord>,
    env: PipelineEnv<'_>,
    stats: &ReferenceStats,
    metric: PhonemicMetric,
) -> FilterOutcome {
    let threshold = stats.phon_mean + stats.phon_std;
    let mut out = FilterOutcome::default();
    for record in records {
        let t = transcribe_text(&record.twister, env.lexicon, env.rules, env.table);
        let score = match metric {
            PhonemicMetric::Iped => iped(&t, env.table),
            PhonemicMetric::Oped => oped(&t, env.table),
        };
        match score {
            Ok(s) if s <= threshold => out.kept.push(record),
            Ok(s) => out.removed.push(RemovedRecord {
                reason: format!("phonemic {s:.4} > {threshold:.4}"),
                record,
            }),
            Err(e) => out.removed.push(RemovedRecord {
                reason: format!("unscorable: {e}"),
                record,
            }),
        }
    }
    out
}

/// Greedy near-duplicate removal in input order: a record is removed when its
/// token sort ratio against any earlier kept record exceeds `threshold`.
pub fn dedup(records: Vec<TwisterRecord>, threshold: f64) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for record in records {
        let dup = out
            .kept
            .iter()
            .find(|k| token_sort_ratio(&k.twister, &record.twister) > threshold);
        match dup {
            Some(k) => {
                let ratio = token_sort_ratio(&k.twister, &record.twister);
                out.removed.push(RemovedRecord {
                    reason: format!("overlap {ratio:.1} with tt_id {}", k.tt_id),
                    record,
                });
            }
            None => out.kept.push(record),
        }
    }
    out
}

/// Tokens of a twister for profanity matching: maximal alphanumeric (plus
/// internal apostrophe) runs, lowercased.
fn profanity_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric() && c != '\'')
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Remove records containing any bank word as a whole token (never as a
/// substring), case-insensitively.
pub fn profanity_filter(records: Vec<TwisterRecord>, bank: &HashSet<String>) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for record in records {
        let hit = profanity_tokens(&record.twister)
            .into_iter()
            .find(|t| bank.contains(t));
        match hit {
            Some(word) => out.removed.push(RemovedRecord {
                reason: format!("offensive token {word:?}"),
                record,
            }),
            None => out.kept.push(record),
        }
    }
    out
}

fn normalize_topic(topic: &str) -> String {
    topic.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Keep the first record per normalized (lowercased, whitespace-collapsed)
/// topic; remove later duplicates.
pub fn dedup_topics(records: Vec<TwisterRecord>) -> FilterOutcome {
    let mut seen: HashMap<String, u64> = HashMap::new();
    let mut out = FilterOutcome::default();
    for record in records {
        let key = normalize_topic(&record.topic);
        match seen.get(&key) {
            Some(first) => out.removed.push(RemovedRecord {
                reason: format!("duplicate topic of tt_id {first}"),
                record,
            }),
            None => {
                seen.insert(key, record.tt_id);
                out.kept.push(record);
            }
        }
    }
    out
}

/// The refinement stages, in their default order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Refine,
    PplFilter,
    PhonemicFilter,
    Dedup,
    ProfanityFilter,
    TopicDedup,
}

impl Stage {
    pub const DEFAULT_ORDER: [Stage; 6] = [
        Stage::Refine,
        Stage::PplFilter,
        Stage::PhonemicFilter,
        Stage::Dedup,
        Stage::ProfanityFilter,
        Stage::TopicDedup,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Refine => "refine",
            Stage::PplFilter => "ppl_filter",
            Stage::PhonemicFilter => "phonemic_filter",
            Stage::Dedup => "dedup",
            Stage::ProfanityFilter => "profanity_filter",
            Stage::TopicDedup => "topic_dedup",
        }
    }
}

/// Per-stage accounting.
#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub stage: &'static str,
    pub input: usize,
    pub kept: usize,
    pub removed: usize,
    pub removals: Vec<(u64, String)>,
}

/// Whole-run accounting, stages in execution order.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PipelineReport {
    pub stages: Vec<StageReport>,
    pub final_count: usize,
}

/// Pipeline knobs.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub stage_order: Vec<Stage>,
    pub stats: ReferenceStats,
    pub dedup_threshold: f64,
    pub phonemic_metric: PhonemicMetric,
    pub gen_params: GenParams,
}

impl PipelineConfig {
    pub fn new(stats: ReferenceStats) -> Self {
        Self {
            stage_order: Stage::DEFAULT_ORDER.to_vec(),
            stats,
            dedup_threshold: 60.0,
            phonemic_metric: PhonemicMetric::Iped,
            gen_params: GenParams::default(),
        }
    }
}

fn record_outcome(report: &mut PipelineReport, stage: Stage, input: usize, outcome: &FilterOutcome) {
    report.stages.push(StageReport {
        stage: stage.name(),
        input,
        kept: outcome.kept.len(),
        removed: outcome.removed.len(),
        removals: outcome
            .removed
            .iter()
            .map(|r| (r.record.tt_id, r.reason.clone()))
            .collect(),
    });
}

/// Run the refinement stages over `records` in the configured order, then
/// enrich the survivors with ARPABET and IPA transcriptions.
///
/// The refine stage re-prompts the generator for records produced with
/// prompt variant A. A generator or scorer failure aborts the run and the
/// error carries the partial report.
pub fn run_pipeline(
    records: Vec<TwisterRecord>,
    generator: &dyn TextGenerator,
    scorer: &dyn NextTokenProvider,
    bank: &HashSet<String>,
    env: PipelineEnv<'_>,
    cfg: &PipelineConfig,
) -> Result<(Vec<TwisterRecord>, PipelineReport), PipelineError> {
    cfg.stats.validate()?;
    let mut report = PipelineReport::default();
    let mut current = records;

    for &stage in &cfg.stage_order {
        let input = current.len();
        match stage {
            Stage::Refine => {
                let mut refined = Vec::with_capacity(current.len());
                for mut record in current {
                    if record.prompt_variant == PromptVariant::A {
                        let prompt = build_prompt(PromptKind::Refine, PromptPayload::Text(&record.twister))?;
                        match generator.generate_text(&prompt, &cfg.gen_params) {
                            Ok(text) => record.twister = text.trim().to_string(),
                            Err(e) => {
                                return Err(PipelineError::StageFailure {
                                    stage: "refine",
                                    source: e,
                                    report,
                                })
                            }
                        }
                    }
                    refined.push(record);
                }
                current = refined;
                report.stages.push(StageReport {
                    stage: Stage::Refine.name(),
                    input,
                    kept: input,
                    removed: 0,
                    removals: Vec::new(),
                });
            }
            Stage::PplFilter => {
                let outcome = match ppl_filter(current, scorer, &cfg.stats) {
                    Ok(o) => o,
                    Err(e) => {
                        return Err(PipelineError::StageFailure {
                            stage: "ppl_filter",
                            source: e,
                            report,
                        })
                    }
                };
                record_outcome(&mut report, stage, input, &outcome);
                current = outcome.kept;
            }
            Stage::PhonemicFilter => {
                let outcome = phonemic_filter(current, env, &cfg.stats, cfg.phonemic_metric);
                record_outcome(&mut report, stage, input, &outcome);
                current = outcome.kept;
            }
            Stage::Dedup => {
                let outcome = dedup(current, cfg.dedup_threshold);
                record_outcome(&mut report, stage, input, &outcome);
                current = outcome.kept;
            }
            Stage::ProfanityFilter => {
                let outcome = profanity_filter(current, bank);
                record_outcome(&mut report, stage, input, &outcome);
                current = outcome.kept;
            }
            Stage::TopicDedup => {
                let outcome = dedup_topics(current);
                record_outcome(&mut report, stage, input, &outcome);
                current = outcome.kept;
            }
        }
    }

    for record in &mut current {
        let t = transcribe_text(&record.twister, env.lexicon, env.rules, env.table);
        record.twister_arpabet = t.arpabet_text();
        record.twister_ipa = t.ipa_text();
    }
    report.final_count = current.len();
    Ok((current, report))
}

/// Check one enriched record: non-empty twister and transcriptions that
/// regenerate from the twister text.
pub fn validate_record(record: &TwisterRecord, env: PipelineEnv<'_>) -> Result<(), String> {
    if record.twister.trim().is_empty() {
        return Err(format!("tt_id {}: empty twister", record.tt_id));
    }
    let t = transcribe_text(&record.twister, env.lexicon, env.rules, env.table);
    if record.twister_arpabet != t.arpabet_text() {
        return Err(format!("tt_id {}: ARPABET does not regenerate", record.tt_id));
    }
    if record.twister_ipa != t.ipa_text() {
        return Err(format!("tt_id {}: IPA does not regenerate", record.tt_id));
    }
    Ok(())
}

/// Check a whole dataset: every record valid, ids unique.
pub fn validate_dataset(records: &[TwisterRecord], env: PipelineEnv<'_>) -> Result<(), String> {
    let mut seen = HashSet::new();
    for record in records {
        if !seen.insert(record.tt_id) {
            return Err(format!("duplicate tt_id {}", record.tt_id));
        }
        validate_record(record, env)?;
    }
    Ok(())
}

/// Settings for the generation front half (topic sampling through prompted
/// generation).
#[derive(Debug, Clone)]
pub struct GenerationConfig {
    pub n_topics: usize,
    pub seed: u64,
    /// Candidate-bank size per phoneme.
    pub n_candidates: usize,
    /// Generate a prose paraphrase for each record.
    pub paraphrases: bool,
    pub gen_params: GenParams,
    pub source_label: String,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            n_topics: 10,
            seed: 0,
            n_candidates: 10,
            paraphrases: true,
            gen_params: GenParams::default(),
            source_label: "generator".to_string(),
        }
    }
}

/// The generation front half: sample a topic per index, build its shuffled
/// phoneme-constrained candidate list, prompt the generator (two word-list
/// prompts A for every B), and assemble raw records for the refinement
/// stages. Topics whose candidate banks are empty are skipped.
#[allow(clippy::too_many_arguments)]
pub fn generate_records(
    cfg: &GenerationConfig,
    generator: &dyn TextGenerator,
    modifiers: &[String],
    nouns: &[String],
    wip: &WordInitialSet,
    embeddings: &EmbeddingTable,
    env: PipelineEnv<'_>,
) -> Result<Vec<TwisterRecord>, PipelineError> {
    let mut records = Vec::with_capacity(cfg.n_topics);
    for i in 0..cfg.n_topics {
        let seed = cfg.seed.wrapping_add(i as u64);
        let topic = sample_topic(seed, modifiers, nouns)?;
        let list = match build_candidate_list(&topic, wip, env.lexicon, embeddings, cfg.n_candidates, seed, env.table) {
            Ok(list) => list,
            Err(VocabError::EmptyCandidateBanks(_, _)) => continue,
            Err(e) => return Err(e.into()),
        };
        let variant = if i % 3 == 2 { PromptVariant::B } else { PromptVariant::A };
        let kind = match variant {
            PromptVariant::A => PromptKind::A,
            _ => PromptKind::B,
        };
        let tokens = list.tokens();
        let prompt = build_prompt(kind, PromptPayload::WordList(&tokens))?;
        let twister = generator
            .generate_text(&prompt, &cfg.gen_params)
            .map_err(|e| PipelineError::StageFailure {
                stage: "generate",
                source: e,
                report: PipelineReport::default(),
            })?;
        let mut record = TwisterRecord::new(
            i as u64 + 1,
            &topic.to_string(),
            &cfg.source_label,
            variant,
            twister.trim(),
        );
        if cfg.paraphrases {
            let prompt = build_prompt(PromptKind::Paraphrase, PromptPayload::Text(&record.twister))?;
            let paraphrase = generator
                .generate_text(&prompt, &cfg.gen_params)
                .map_err(|e| PipelineError::StageFailure {
                    stage: "paraphrase",
                    source: e,
                    report: PipelineReport::default(),
                })?;
            record.paraphrase = Some(paraphrase.trim().to_string());
        }
        records.push(record);
    }
    Ok(records)
}

/// Deterministic offline stand-in for a remote generator, used by dry runs
/// and tests.
///
/// Word-list prompts come back as the listed words joined into a sentence;
/// refine prompts echo the embedded twister; paraphrase prompts return a
/// plain rewording marker; topic prompts return a one-line twister skeleton.
#[derive(Debug, Clone, Default)]
pub struct StubGenerator;

impl StubGenerator {
    fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
        let addr = text.find(start)? + start.len();
        let rest = &text[addr..];
        match rest.find(end) {
            Some(stop) => Some(&rest[..stop]),
            None => Some(rest),
        }
    }
}

impl TextGenerator for StubGenerator {
    fn generate_text(&self, prompt: &str, _params: &GenParams) -> Result<String, LmError> {
        const LIST_MARK: &str = "from the following list: ";
        const INPUT_MARK: &str = "\n\nINPUT = \"";
        const TOPIC_MARK: &str = "on the topic of \"";

        if prompt.contains(LIST_MARK) {
            let words = Self::between(prompt, LIST_MARK, ". The output").unwrap_or("");
            let sentence = words.split(", ").collect::<Vec<_>>().join(" ");
            return Ok(format!("{sentence}."));
        }
        if prompt.starts_with("Improve the following tongue-twister") {
            if let Some((_, twister)) = prompt.split_once("is grammatical: ") {
                return Ok(twister.to_string());
            }
        }
        if let Some(inner) = Self::between(prompt, INPUT_MARK, ", OUTPUT = ") {
            return Ok(format!("a plain rewording of {inner}"));
        }
        if let Some(topic) = Self::between(prompt, TOPIC_MARK, "\"") {
            return Ok(format!("a twister about {topic}."));
        }
        Ok(prompt.to_string())
    }
}
