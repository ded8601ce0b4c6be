//! Phoneme-aware constrained decoding: a per-step scan of a provider's
//! ranked next-token candidates that admits function words inside a small
//! rank window and content words only when they are dictionary-valid, long
//! enough, not yet repeated, and start with one of the two target phonemes.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::g2p::{tokenize, transcribe_word, FallbackRules, Lexicon, LexiconError};
use crate::lm::{NextTokenProvider, TokenCandidate};
use crate::phonology::{Phoneme, PhonemeFeatureTable, PhonologyError};
use crate::vocab::WordInitialSet;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("decoder config invalid: {0}")]
    InvalidConfig(String),
    #[error("topic is empty")]
    EmptyTopic,
    #[error(transparent)]
    G2p(#[from] LexiconError),
    #[error(transparent)]
    Phonology(#[from] PhonologyError),
}

/// Decoding constants and the token sets they check against.
#[derive(Debug, Clone)]
pub struct DecoderConfig {
    /// Stop once this many words have been generated.
    pub max_length: usize,
    /// Function words are admitted only at rank <= this.
    pub function_window: usize,
    /// Content words must have at least this many characters.
    pub min_word_length: usize,
    /// Maximum occurrences of one content word in the generated output.
    pub max_repetition: usize,
    /// Only the top this-many predictions are scanned per step.
    pub scan_limit: usize,
    /// Function word set F (lowercase).
    pub function_words: HashSet<String>,
    /// Dictionary D (lowercase); defaults to the lexicon headword set.
    pub dictionary: HashSet<String>,
    /// Seed for the fallback draw of ph1 on non-consonant-initial topics.
    pub rng_seed: u64,
}

impl DecoderConfig {
    /// Defaults: length 30, function window 1, minimum word length 3,
    /// repetition cap 1, scan limit 2500.
    pub fn new(function_words: HashSet<String>, dictionary: HashSet<String>, rng_seed: u64) -> Self {
        Self {
            max_length: 30,
            function_window: 1,
            min_word_length: 3,
            max_repetition: 1,
            scan_limit: 2500,
            function_words,
            dictionary,
            rng_seed,
        }
    }

    /// Bundled defaults: the stopword list as F, the bundled lexicon
    /// headwords as D.
    pub fn bundled(rng_seed: u64) -> Self {
        let function_words = crate::assets::stopwords().clone();
        let dictionary = crate::assets::lexicon()
            .headwords()
            .map(str::to_string)
            .collect();
        Self::new(function_words, dictionary, rng_seed)
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        let bound = |name: &str, v: usize| {
            if v == 0 {
                Err(DecodeError::InvalidConfig(format!("{name} must be >= 1")))
            } else {
                Ok(())
            }
        };
        bound("max_length", self.max_length)?;
        bound("function_window", self.function_window)?;
        bound("min_word_length", self.min_word_length)?;
        bound("max_repetition", self.max_repetition)?;
        bound("scan_limit", self.scan_limit)?;
        if self.function_words.is_empty() {
            return Err(DecodeError::InvalidConfig("function word set is empty".into()));
        }
        if self.dictionary.is_empty() {
            return Err(DecodeError::InvalidConfig("dictionary is empty".into()));
        }
        if self
            .function_words
            .iter()
            .any(|w| w.chars().all(|c| !c.is_alphanumeric()))
        {
            return Err(DecodeError::InvalidConfig(
                "function word set contains punctuation tokens".into(),
            ));
        }
        Ok(())
    }
}

/// Why a candidate was admitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmitReason {
    Function,
    Content,
}

impl fmt::Display for AdmitReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdmitReason::Function => write!(f, "function"),
            AdmitReason::Content => write!(f, "content"),
        }
    }
}

/// Why a candidate was rejected: the first failed content check, in check
/// order (length, dictionary, repetition, phoneme).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    TooShort,
    NotInDictionary,
    Repeated,
    PhonemeMismatch,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::TooShort => "too_short",
            RejectReason::NotInDictionary => "not_in_dictionary",
            RejectReason::Repeated => "repeated",
            RejectReason::PhonemeMismatch => "phoneme_mismatch",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmitDecision {
    AdmitFunction,
    AdmitContent,
    Reject(RejectReason),
}

/// One generated word plus how it was admitted.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct GeneratedWord {
    pub token: String,
    pub kind: AdmitReason,
}

/// Trace record for one appended token.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub token: String,
    pub rank: usize,
    pub reason: AdmitReason,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t{}", self.step, self.token, self.rank, self.reason)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStatus {
    Complete,
    ExhaustedVocabulary,
    ProviderError,
}

/// The decode outcome: target phonemes, generated words (prompt excluded),
/// terminal status, and the per-step trace.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecodeResult {
    pub prompt: String,
    pub ph1: Phoneme,
    pub ph2: Phoneme,
    pub generated: Vec<GeneratedWord>,
    pub status: DecodeStatus,
    pub trace: Vec<TraceStep>,
    /// Present only when status is `provider_error`.
    pub provider_error: Option<String>,
}

impl DecodeResult {
    pub fn words(&self) -> Vec<&str> {
        self.generated.iter().map(|w| w.token.as_str()).collect()
    }

    pub fn text(&self) -> String {
        self.words().join(" ")
    }

    /// Line-delimited trace rendering: step, token, rank, reason.
    pub fn trace_text(&self) -> String {
        self.trace
            .iter()
            .map(TraceStep::to_string)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// The decoder's task prompt for a topic.
pub fn topic_prompt(topic: &str) -> String {
    format!("Generate a tongue-twister on the topic of \"{topic}\"")
}

/// Choose the target phoneme pair for a topic: the topic's first word-initial
/// phoneme when it is a consonant in the word-initial set, otherwise a seeded
/// uniform draw from the set; the secondary is always the nearest neighbour
/// among the remaining members.
pub fn pick_target_phonemes(
    topic: &str,
    wip: &WordInitialSet,
    table: &PhonemeFeatureTable,
    lexicon: &Lexicon,
    rules: &FallbackRules,
    rng_seed: u64,
) -> Result<(Phoneme, Phoneme), DecodeError> {
    let first_word = tokenize(topic).into_iter().next().ok_or(DecodeError::EmptyTopic)?;
    let unit = transcribe_word(&first_word, lexicon, rules, table)?;
    let initial = unit.phonemes.first().cloned();
    let ph1 = match initial {
        Some(p) if p.is_consonant() && wip.contains(&p) => p,
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            wip.phonemes()[rng.random_range(0..wip.len())].clone()
        }
    };
    let ph2 = table.nearest_phoneme(&ph1, &wip.without(&ph1))?;
    Ok((ph1, ph2))
}

/// Decide one candidate against the generated-so-far state.
///
/// Function branch first: token in F and rank within the window. Otherwise
/// the content checks run in order — length, dictionary, repetition (content
/// words only, case-insensitive), word-initial phoneme — and the first
/// failure is the reject reason. Total: never errors; a token whose
/// grapheme-to-phoneme conversion fails is rejected as a phoneme mismatch.
pub fn admissible(
    candidate: &TokenCandidate,
    generated: &[GeneratedWord],
    cfg: &DecoderConfig,
    lexicon: &Lexicon,
    rules: &FallbackRules,
    table: &PhonemeFeatureTable,
    targets: (&Phoneme, &Phoneme),
) -> AdmitDecision {
    let token = candidate.token.to_lowercase();
    if cfg.function_words.contains(&token) && candidate.rank <= cfg.function_window {
        return AdmitDecision::AdmitFunction;
    }
    if token.chars().count() < cfg.min_word_length {
        return AdmitDecision::Reject(RejectReason::TooShort);
    }
    if !cfg.dictionary.contains(&token) {
        return AdmitDecision::Reject(RejectReason::NotInDictionary);
    }
    let occurrences = generated
        .iter()
        .filter(|w| w.kind == AdmitReason::Content && w.token.to_lowercase() == token)
        .count();
    if occurrences >= cfg.max_repetition {
        return AdmitDecision::Reject(RejectReason::Repeated);
    }
    let initial = transcribe_word(&token, lexicon, rules, table)
        .ok()
        .and_then(|u| u.phonemes.first().cloned());
    match initial {
        Some(p) if p.arpabet == targets.0.arpabet || p.arpabet == targets.1.arpabet => {
            AdmitDecision::AdmitContent
        }
        _ => AdmitDecision::Reject(RejectReason::PhonemeMismatch),
    }
}

/// Run the full constrained decode for a topic against a provider.
///
/// Each step fetches the provider's top `scan_limit` candidates for the
/// current context (prompt plus generated words, lowercased) and appends the
/// first admissible one. Decoding stops at `max_length` words (complete),
/// when no scanned candidate is admissible (exhausted_vocabulary), or on a
/// provider failure (provider_error, partial output retained).
#[allow(clippy::too_many_arguments)]
pub fn decode(
    topic: &str,
    provider: &dyn NextTokenProvider,
    cfg: &DecoderConfig,
    lexicon: &Lexicon,
    rules: &FallbackRules,
    table: &PhonemeFeatureTable,
    wip: &WordInitialSet,
) -> Result<DecodeResult, DecodeError> {
    cfg.validate()?;
    let (ph1, ph2) = pick_target_phonemes(topic, wip, table, lexicon, rules, cfg.rng_seed)?;
    let prompt = topic_prompt(topic);
    let prompt_tokens: Vec<String> = tokenize(&prompt)
        .into_iter()
        .map(|t| t.to_lowercase())
        .collect();

    let mut generated: Vec<GeneratedWord> = Vec::new();
    let mut trace: Vec<TraceStep> = Vec::new();
    let mut status = DecodeStatus::Complete;
    let mut provider_error = None;

    while generated.len() < cfg.max_length {
        let mut context = prompt_tokens.clone();
        context.extend(generated.iter().map(|w| w.token.to_lowercase()));
        let candidates = match provider.next_token_distribution(&context, cfg.scan_limit) {
            Ok(c) => c,
            Err(e) => {
                status = DecodeStatus::ProviderError;
                provider_error = Some(e.to_string());
                break;
            }
        };
        let mut appended = false;
        for candidate in &candidates {
            let kind = match admissible(candidate, &generated, cfg, lexicon, rules, table, (&ph1, &ph2)) {
                AdmitDecision::AdmitFunction => AdmitReason::Function,
                AdmitDecision::AdmitContent => AdmitReason::Content,
                AdmitDecision::Reject(_) => continue,
            };
            generated.push(GeneratedWord {
                token: candidate.token.clone(),
                kind,
            });
            trace.push(TraceStep {
                step: generated.len(),
                token: candidate.token.clone(),
                rank: candidate.rank,
                reason: kind,
            });
            appended = true;
            break;
        }
        if !appended {
            status = DecodeStatus::ExhaustedVocabulary;
            break;
        }
    }

    Ok(DecodeResult {
        prompt,
        ph1,
        ph2,
        generated,
        status,
        trace,
        provider_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use crate::lm::{LmError, NGramModel};

    fn fixtures() -> (
        &'static Lexicon,
        &'static FallbackRules,
        &'static PhonemeFeatureTable,
        &'static WordInitialSet,
    ) {
        (
            assets::lexicon(),
            assets::fallback_rules(),
            assets::feature_table(),
            assets::word_initial_set(),
        )
    }

    /// Provider that replays scripted distributions step by step, indexed by
    /// how many words follow the prompt.
    struct Scripted {
        prompt_len: usize,
        steps: Vec<Vec<(&'static str, f64)>>,
    }

    fn prompt_len(topic: &str) -> usize {
        tokenize(&topic_prompt(topic)).len()
    }

    impl NextTokenProvider for Scripted {
        fn next_token_distribution(
            &self,
            context: &[String],
            top_k: usize,
        ) -> Result<Vec<TokenCandidate>, LmError> {
            let step = context.len().saturating_sub(self.prompt_len);
            let dist = self.steps.get(step.min(self.steps.len() - 1)).unwrap();
            Ok(dist
                .iter()
                .take(top_k)
                .enumerate()
                .map(|(i, (tok, lp))| TokenCandidate {
                    token: tok.to_string(),
                    logprob: *lp,
                    rank: i + 1,
                })
                .collect())
        }

        fn score_tokens(&self, _tokens: &[String]) -> Result<Vec<f64>, LmError> {
            Err(LmError::Unsupported("score"))
        }
    }

    #[test]
    fn topic_initial_consonant_sets_ph1() {
        let (lex, rules, table, wip) = fixtures();
        let (ph1, ph2) = pick_target_phonemes("fun", wip, table, lex, rules, 0).unwrap();
        assert_eq!(ph1.ipa, "f");
        assert_eq!(ph2.ipa, "v");

        let (ph1, ph2) = pick_target_phonemes("brewery", wip, table, lex, rules, 0).unwrap();
        assert_eq!(ph1.ipa, "b");
        assert_eq!(ph2.ipa, "p");
    }

    #[test]
    fn vowel_initial_topic_draws_from_wip() {
        let (lex, rules, table, wip) = fixtures();
        let (a1, _) = pick_target_phonemes("apple", wip, table, lex, rules, 7).unwrap();
        let (b1, _) = pick_target_phonemes("apple", wip, table, lex, rules, 7).unwrap();
        assert_eq!(a1, b1, "seeded draw is deterministic");
        assert!(wip.contains(&a1));
    }

    #[test]
    fn empty_topic_errors() {
        let (lex, rules, table, wip) = fixtures();
        assert!(matches!(
            pick_target_phonemes("  ", wip, table, lex, rules, 0),
            Err(DecodeError::EmptyTopic)
        ));
    }

    fn cand(token: &str, rank: usize) -> TokenCandidate {
        TokenCandidate {
            token: token.to_string(),
            logprob: -1.0,
            rank,
        }
    }

    #[test]
    fn admission_walkthrough_cases() {
        let (lex, rules, table, _) = fixtures();
        let cfg = DecoderConfig::bundled(0);
        let f = table.by_ipa("f").unwrap().clone();
        let v = table.by_ipa("v").unwrap().clone();
        let targets = (&f, &v);

        // Function word at rank 1, window 1.
        assert_eq!(
            admissible(&cand("The", 1), &[], &cfg, lex, rules, table, targets),
            AdmitDecision::AdmitFunction
        );
        // Content word with matching initial at rank 3.
        assert_eq!(
            admissible(&cand("funny", 3), &[], &cfg, lex, rules, table, targets),
            AdmitDecision::AdmitContent
        );
        // Wrong initial phoneme, any rank.
        assert_eq!(
            admissible(&cand("grey", 1), &[], &cfg, lex, rules, table, targets),
            AdmitDecision::Reject(RejectReason::PhonemeMismatch)
        );
        assert_eq!(
            admissible(&cand("big", 2), &[], &cfg, lex, rules, table, targets),
            AdmitDecision::Reject(RejectReason::PhonemeMismatch)
        );
        // Function word outside the window falls through to content checks.
        assert_eq!(
            admissible(&cand("the", 2), &[], &cfg, lex, rules, table, targets),
            AdmitDecision::Reject(RejectReason::PhonemeMismatch)
        );
        // Too short.
        assert_eq!(
            admissible(&cand("fo", 5), &[], &cfg, lex, rules, table, targets),
            AdmitDecision::Reject(RejectReason::TooShort)
        );
        // Not in dictionary.
        assert_eq!(
            admissible(&cand("fzzzt", 5), &[], &cfg, lex, rules, table, targets),
            AdmitDecision::Reject(RejectReason::NotInDictionary)
        );
        // Repetition binds content words, case-insensitively.
        let prior = vec![GeneratedWord {
            token: "Funny".to_string(),
            kind: AdmitReason::Content,
        }];
        assert_eq!(
            admissible(&cand("funny", 4), &prior, &cfg, lex, rules, table, targets),
            AdmitDecision::Reject(RejectReason::Repeated)
        );
        // A prior *function* occurrence does not count against the cap.
        let prior = vec![GeneratedWord {
            token: "for".to_string(),
            kind: AdmitReason::Function,
        }];
        assert_eq!(
            admissible(&cand("for", 9), &prior, &cfg, lex, rules, table, targets),
            AdmitDecision::AdmitContent
        );
    }

    #[test]
    fn function_words_are_exempt_from_repetition() {
        // Rank-1 token is always "the": the decode fills max_length with it.
        let (lex, rules, table, wip) = fixtures();
        let provider = Scripted {
            prompt_len: prompt_len("fun"),
            steps: vec![vec![("the", -0.1), ("fun", -0.2)]],
        };
        let mut cfg = DecoderConfig::bundled(0);
        cfg.max_length = 5;
        let result = decode("fun", &provider, &cfg, lex, rules, table, wip).unwrap();
        assert_eq!(result.status, DecodeStatus::Complete);
        assert_eq!(result.words(), ["the"; 5].to_vec());
    }

    #[test]
    fn tiny_vocabulary_exhausts_after_constrained_words() {
        let (lex, rules, table, wip) = fixtures();
        // fog and vat match /f/-/v/; dog never does; no function words.
        let provider = Scripted {
            prompt_len: prompt_len("fun"),
            steps: vec![vec![("fog", -0.1), ("vat", -0.2), ("dog", -0.3)]],
        };
        let cfg = DecoderConfig::bundled(0);
        let result = decode("fun", &provider, &cfg, lex, rules, table, wip).unwrap();
        assert_eq!(result.status, DecodeStatus::ExhaustedVocabulary);
        let words = result.words();
        assert_eq!(words, vec!["fog", "vat"]);
        for step in &result.trace {
            assert_eq!(step.reason, AdmitReason::Content);
        }
    }

    #[test]
    fn provider_failure_keeps_partial_output() {
        struct Failing {
            prompt_len: usize,
            after: usize,
        }
        impl NextTokenProvider for Failing {
            fn next_token_distribution(
                &self,
                context: &[String],
                _top_k: usize,
            ) -> Result<Vec<TokenCandidate>, LmError> {
                if context.len() >= self.prompt_len + self.after {
                    return Err(LmError::Transport {
                        url: "http://example".into(),
                        msg: "boom".into(),
                    });
                }
                Ok(vec![TokenCandidate {
                    token: "fog".into(),
                    logprob: -0.5,
                    rank: 1,
                }])
            }
            fn score_tokens(&self, _tokens: &[String]) -> Result<Vec<f64>, LmError> {
                Err(LmError::Unsupported("score"))
            }
        }
        let (lex, rules, table, wip) = fixtures();
        let cfg = DecoderConfig::bundled(0);
        let failing = Failing {
            prompt_len: prompt_len("fun"),
            after: 1,
        };
        let result = decode("fun", &failing, &cfg, lex, rules, table, wip).unwrap();
        assert_eq!(result.status, DecodeStatus::ProviderError);
        assert_eq!(result.words(), vec!["fog"]);
        assert!(result.provider_error.is_some());
    }

    #[test]
    fn decode_is_deterministic_with_ngram_provider() {
        let (lex, rules, table, wip) = fixtures();
        let model = NGramModel::train(assets::CORPUS_SRC, 3, 1.0).unwrap();
        let cfg = DecoderConfig::bundled(1234);
        let a = decode("fresh fish", &model, &cfg, lex, rules, table, wip).unwrap();
        let b = decode("fresh fish", &model, &cfg, lex, rules, table, wip).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.generated.len() <= cfg.max_length);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let (lex, rules, table, wip) = fixtures();
        let provider = Scripted {
            prompt_len: prompt_len("fun"),
            steps: vec![vec![("the", -0.1)]],
        };
        let mut cfg = DecoderConfig::bundled(0);
        cfg.max_length = 0;
        assert!(decode("fun", &provider, &cfg, lex, rules, table, wip).is_err());

        let mut cfg = DecoderConfig::bundled(0);
        cfg.function_words = HashSet::from(["...".to_string()]);
        assert!(cfg.validate().is_err());
    }
}
