//! Language-model providers: the abstract next-token interface consumed by
//! the decoder and the dataset pipeline, a deterministic add-k n-gram model
//! that serves as the built-in provider, and sequence perplexity.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub mod remote;

/// Sentence-end marker scored by [`perplexity`]; never returned as a
/// candidate token.
pub const END_MARKER: &str = "</s>";
/// Context padding for the first tokens of a sequence.
pub const START_MARKER: &str = "<s>";

#[derive(Debug, Error)]
pub enum LmError {
    #[error("corpus is empty after tokenization")]
    EmptyCorpus,
    #[error("text is empty after tokenization")]
    EmptyText,
    #[error("model returned an empty distribution")]
    EmptyDistribution,
    #[error("transport failure talking to {url}: {msg} (retriable)")]
    Transport { url: String, msg: String },
    #[error("provider returned status {status} from {url}")]
    Status { url: String, status: u16 },
    #[error("provider response malformed: {0}")]
    Protocol(String),
    #[error("model parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("operation not supported by this provider: {0}")]
    Unsupported(&'static str),
}

impl LmError {
    /// Transport failures may be retried; anything else is final.
    pub fn is_retriable(&self) -> bool {
        matches!(self, LmError::Transport { .. })
    }
}

/// One ranked next-token prediction. Ranks start at 1 and follow
/// non-increasing log-probability; equal log-probabilities order
/// alphabetically.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TokenCandidate {
    pub token: String,
    pub logprob: f64,
    pub rank: usize,
}

/// Remote generation parameters.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GenParams {
    pub max_tokens: u32,
    pub temperature: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            max_tokens: 1000,
            temperature: 0.8,
        }
    }
}

/// A source of ranked next-token distributions and token-level scores.
pub trait NextTokenProvider {
    /// Top-`top_k` candidates after `context`, ranked 1..=k. Probability ties
    /// break alphabetically. May return fewer than `top_k` candidates when
    /// the vocabulary is smaller.
    fn next_token_distribution(
        &self,
        context: &[String],
        top_k: usize,
    ) -> Result<Vec<TokenCandidate>, LmError>;

    /// Natural-log probabilities for each token of the sequence given its
    /// preceding context, plus one final entry for the end marker; length is
    /// `tokens.len() + 1`.
    fn score_tokens(&self, tokens: &[String]) -> Result<Vec<f64>, LmError>;
}

/// A source of free-form completions (the pipeline's generation step).
pub trait TextGenerator {
    fn generate_text(&self, prompt: &str, params: &GenParams) -> Result<String, LmError>;
}

/// exp of the mean negative log-likelihood over the sequence, end marker
/// included in the token count.
pub fn perplexity(provider: &dyn NextTokenProvider, tokens: &[String]) -> Result<f64, LmError> {
    if tokens.is_empty() {
        return Err(LmError::EmptyText);
    }
    let logprobs = provider.score_tokens(tokens)?;
    let n = logprobs.len() as f64;
    let total: f64 = logprobs.iter().sum();
    Ok((-total / n).exp())
}

/// Lowercased word tokens for language-model consumption.
pub fn lm_tokenize(text: &str) -> Vec<String> {
    crate::g2p::tokenize(text)
        .into_iter()
        .map(|t| t.to_lowercase())
        .collect()
}

/// Add-k smoothed n-gram model (order 1..=3) over word tokens, with full
/// backoff to the next lower order when a context was never observed.
///
/// Conditional distributions are proper: for every context the probabilities
/// over vocabulary plus end marker sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    k: f64,
    vocab: BTreeSet<String>,
    // (context tokens, next token) -> count, for every order 1..=order;
    // context may contain START_MARKER, next may be END_MARKER.
    counts: BTreeMap<Vec<String>, BTreeMap<String, u64>>,
}

impl NGramModel {
    /// Train on a corpus, one sentence per line; each line contributes its
    /// tokens plus an end-marker event.
    pub fn train(corpus: &str, order: usize, k: f64) -> Result<Self, LmError> {
        assert!((1..=3).contains(&order), "order must be 1, 2, or 3");
        assert!(k > 0.0, "smoothing constant must be positive");
        let mut model = Self {
            order,
            k,
            vocab: BTreeSet::new(),
            counts: BTreeMap::new(),
        };
        let mut saw_any = false;
        for line in corpus.lines() {
            let tokens = lm_tokenize(line);
            if tokens.is_empty() {
                continue;
            }
            saw_any = true;
            model.vocab.extend(tokens.iter().cloned());
            model.observe(&tokens);
        }
        if !saw_any {
            return Err(LmError::EmptyCorpus);
        }
        Ok(model)
    }

    /// A model with the given vocabulary and no observations: every
    /// conditional is uniform over vocabulary plus end marker.
    pub fn uniform(vocab: impl IntoIterator<Item = String>, k: f64) -> Self {
        assert!(k > 0.0, "smoothing constant must be positive");
        Self {
            order: 1,
            k,
            vocab: vocab.into_iter().collect(),
            counts: BTreeMap::new(),
        }
    }

    fn observe(&mut self, tokens: &[String]) {
        let mut padded: Vec<String> = vec![START_MARKER.to_string(); self.order - 1];
        padded.extend(tokens.iter().cloned());
        padded.push(END_MARKER.to_string());
        for n in 1..=self.order {
            for window in padded.windows(n) {
                let (ctx, next) = window.split_at(n - 1);
                if next[0] == START_MARKER {
                    continue;
                }
                *self
                    .counts
                    .entry(ctx.to_vec())
                    .or_default()
                    .entry(next[0].clone())
                    .or_default() += 1;
            }
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str)
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    /// The context actually used to score after backoff: the longest suffix
    /// of `context` (padded with start markers) that was observed, possibly
    /// the empty unigram context.
    fn effective_context(&self, context: &[String]) -> Vec<String> {
        let mut padded: Vec<String> = vec![START_MARKER.to_string(); self.order - 1];
        padded.extend(context.iter().map(|t| t.to_lowercase()));
        for n in (1..self.order).rev() {
            let ctx = padded[padded.len() - n..].to_vec();
            if self.counts.contains_key(&ctx) {
                return ctx;
            }
        }
        Vec::new()
    }

    /// Smoothed conditional probability of `token` (a word or the end
    /// marker) after `context`.
    pub fn prob(&self, context: &[String], token: &str) -> f64 {
        let ctx = self.effective_context(context);
        self.prob_in_context(&ctx, token)
    }

    fn prob_in_context(&self, effective_ctx: &[String], token: &str) -> f64 {
        let empty = BTreeMap::new();
        let next_counts = self.counts.get(effective_ctx).unwrap_or(&empty);
        let context_total: u64 = next_counts.values().sum();
        self.smoothed(next_counts, context_total, token)
    }

    fn smoothed(&self, next_counts: &BTreeMap<String, u64>, context_total: u64, token: &str) -> f64 {
        let token = if token == END_MARKER {
            token.to_string()
        } else {
            token.to_lowercase()
        };
        let count = next_counts.get(&token).copied().unwrap_or(0);
        let v = self.vocab.len() as f64 + 1.0; // + end marker
        (count as f64 + self.k) / (context_total as f64 + self.k * v)
    }

    /// Serialize to the line-oriented counts format (round-trip exact).
    pub fn to_text(&self) -> String {
        let mut out = String::from("twistkit-ngram v1\n");
        out.push_str(&format!("order {}\n", self.order));
        out.push_str(&format!("k {}\n", self.k));
        for word in &self.vocab {
            out.push_str(&format!("vocab {word}\n"));
        }
        for (ctx, nexts) in &self.counts {
            for (next, count) in nexts {
                out.push_str("ngram ");
                out.push_str(&count.to_string());
                for tok in ctx {
                    out.push(' ');
                    out.push_str(tok);
                }
                out.push(' ');
                out.push_str(next);
                out.push('\n');
            }
        }
        out
    }

    /// Parse the [`Self::to_text`] format.
    pub fn from_text(src: &str) -> Result<Self, LmError> {
        let parse_err = |line: usize, msg: String| LmError::Parse { line, msg };
        let mut lines = src.lines().enumerate();
        match lines.next() {
            Some((_, "twistkit-ngram v1")) => {}
            other => {
                return Err(parse_err(
                    1,
                    format!("bad header {:?}", other.map(|(_, l)| l).unwrap_or("")),
                ))
            }
        }
        let mut order = None;
        let mut k = None;
        let mut vocab = BTreeSet::new();
        let mut counts: BTreeMap<Vec<String>, BTreeMap<String, u64>> = BTreeMap::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("order ") {
                order = Some(
                    rest.parse::<usize>()
                        .map_err(|_| parse_err(lineno, format!("bad order {rest:?}")))?,
                );
            } else if let Some(rest) = line.strip_prefix("k ") {
                k = Some(
                    rest.parse::<f64>()
                        .map_err(|_| parse_err(lineno, format!("bad k {rest:?}")))?,
                );
            } else if let Some(rest) = line.strip_prefix("vocab ") {
                vocab.insert(rest.to_string());
            } else if let Some(rest) = line.strip_prefix("ngram ") {
                let mut parts = rest.split(' ');
                let count: u64 = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err(lineno, "bad ngram count".into()))?;
                let toks: Vec<String> = parts.map(str::to_string).collect();
                if toks.is_empty() {
                    return Err(parse_err(lineno, "ngram line missing tokens".into()));
                }
                let (ctx, next) = toks.split_at(toks.len() - 1);
                counts
                    .entry(ctx.to_vec())
                    .or_default()
                    .insert(next[0].clone(), count);
            } else {
                return Err(parse_err(lineno, format!("unrecognized line {line:?}")));
            }
        }
        let order = order.ok_or_else(|| parse_err(0, "missing order".into()))?;
        let k = k.ok_or_else(|| parse_err(0, "missing k".into()))?;
        if !(1..=3).contains(&order) {
            return Err(parse_err(0, format!("order {order} out of range")));
        }
        if k <= 0.0 || k.is_nan() {
            return Err(parse_err(0, format!("k {k} must be positive")));
        }
        Ok(Self {
            order,
            k,
            vocab,
            counts,
        })
    }
}

impl NextTokenProvider for NGramModel {
    fn next_token_distribution(
        &self,
        context: &[String],
        top_k: usize,
    ) -> Result<Vec<TokenCandidate>, LmError> {
        if self.vocab.is_empty() {
            return Err(LmError::EmptyDistribution);
        }
        let ctx = self.effective_context(context);
        let empty = BTreeMap::new();
        let next_counts = self.counts.get(&ctx).unwrap_or(&empty);
        let context_total: u64 = next_counts.values().sum();
        // BTreeSet iteration is alphabetical, and the sort below is stable,
        // so equal probabilities keep alphabetical order.
        let mut scored: Vec<(String, f64)> = self
            .vocab
            .iter()
            .map(|w| (w.clone(), self.smoothed(next_counts, context_total, w)))
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        scored.truncate(top_k);
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(i, (token, p))| TokenCandidate {
                token,
                logprob: p.ln(),
                rank: i + 1,
            })
            .collect())
    }

    fn score_tokens(&self, tokens: &[String]) -> Result<Vec<f64>, LmError> {
        if tokens.is_empty() {
            return Err(LmError::EmptyText);
        }
        let lowered: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        let mut logprobs = Vec::with_capacity(lowered.len() + 1);
        for i in 0..lowered.len() {
            logprobs.push(self.prob(&lowered[..i], &lowered[i]).ln());
        }
        logprobs.push(self.prob(&lowered, END_MARKER).ln());
        Ok(logprobs)
    }
}
