//! Constrained-vocabulary construction: topic sampling, primary/secondary
//! phoneme selection, and semantically ranked retrieval of words that start
//! with a target phoneme.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::g2p::Lexicon;
use crate::phonology::{Phoneme, PhonemeFeatureTable, PhonologyError};

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("word list is empty")]
    EmptyWordList,
    #[error("word-initial set needs at least 2 phonemes, found {0}")]
    WipTooSmall(usize),
    #[error("no token has an embedding vector")]
    NoEmbeddedTokens,
    #[error("embedding parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("candidate banks for {0} and {1} are both empty")]
    EmptyCandidateBanks(String, String),
    #[error(transparent)]
    Phonology(#[from] PhonologyError),
}

/// A sampled topic: adjective/adverb modifier plus noun.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicPhrase {
    pub modifier: String,
    pub noun: String,
}

impl TopicPhrase {
    pub fn tokens(&self) -> [&str; 2] {
        [self.modifier.as_str(), self.noun.as_str()]
    }
}

impl fmt::Display for TopicPhrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.modifier, self.noun)
    }
}

/// Token-to-vector table; all vectors share one dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    /// Parse `TOKEN v1 ... vd` lines ('#' comments skipped).
    pub fn parse(src: &str) -> Result<Self, VocabError> {
        let mut dimension = 0usize;
        let mut vectors = HashMap::new();
        for (idx, raw) in src.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().unwrap().to_lowercase();
            let vec: Vec<f64> = parts
                .map(|p| {
                    p.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| VocabError::Parse {
                            line: lineno,
                            msg: format!("bad component {p:?}"),
                        })
                })
                .collect::<Result<_, _>>()?;
            if vec.is_empty() {
                return Err(VocabError::Parse {
                    line: lineno,
                    msg: format!("no vector for {token:?}"),
                });
            }
            if dimension == 0 {
                dimension = vec.len();
            } else if vec.len() != dimension {
                return Err(VocabError::Parse {
                    line: lineno,
                    msg: format!("expected dimension {dimension}, found {}", vec.len()),
                });
            }
            if vectors.insert(token.clone(), vec).is_some() {
                return Err(VocabError::Parse {
                    line: lineno,
                    msg: format!("duplicate token {token:?}"),
                });
            }
        }
        Ok(Self { dimension, vectors })
    }

    pub fn from_vectors(vectors: HashMap<String, Vec<f64>>) -> Result<Self, VocabError> {
        let dimension = vectors.values().map(Vec::len).next().unwrap_or(0);
        if vectors.values().any(|v| v.len() != dimension) {
            return Err(VocabError::Parse {
                line: 0,
                msg: "inconsistent vector dimensions".into(),
            });
        }
        Ok(Self { dimension, vectors })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(&token.to_lowercase()).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Cosine similarity; zero vectors compare as 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Ordered set of consonants legal word-initially; the order is the
/// deterministic tie-break and sampling order.
#[derive(Debug, Clone)]
pub struct WordInitialSet {
    phonemes: Vec<Phoneme>,
}

impl WordInitialSet {
    /// Parse one IPA symbol per line ('#' comments skipped); each symbol must
    /// name a word-initial-legal consonant of the inventory.
    pub fn parse(src: &str, table: &PhonemeFeatureTable) -> Result<Self, VocabError> {
        let mut phonemes = Vec::new();
        for (idx, raw) in src.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let p = table.by_ipa(line)?.clone();
            if !p.is_consonant() || !p.word_initial_legal {
                return Err(VocabError::Parse {
                    line: idx + 1,
                    msg: format!("{line:?} is not a word-initial-legal consonant"),
                });
            }
            if phonemes.contains(&p) {
                return Err(VocabError::Parse {
                    line: idx + 1,
                    msg: format!("duplicate phoneme {line:?}"),
                });
            }
            phonemes.push(p);
        }
        Ok(Self { phonemes })
    }

    pub fn from_phonemes(phonemes: Vec<Phoneme>) -> Self {
        Self { phonemes }
    }

    pub fn phonemes(&self) -> &[Phoneme] {
        &self.phonemes
    }

    pub fn len(&self) -> usize {
        self.phonemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phonemes.is_empty()
    }

    pub fn contains(&self, p: &Phoneme) -> bool {
        self.phonemes.iter().any(|c| c.ipa == p.ipa)
    }

    /// Members except `excluded`, preserving order.
    pub fn without(&self, excluded: &Phoneme) -> Vec<Phoneme> {
        self.phonemes
            .iter()
            .filter(|p| p.ipa != excluded.ipa)
            .cloned()
            .collect()
    }
}

/// One retrieved candidate word with its initial phoneme and similarity score.
#[derive(Debug, Clone)]
pub struct RankedWord {
    pub token: String,
    pub initial: Phoneme,
    pub score: f64,
}

/// The assembled, shuffled word list handed to a prompt.
#[derive(Debug, Clone)]
pub struct CandidateList {
    pub topic: TopicPhrase,
    pub ph1: Phoneme,
    pub ph2: Phoneme,
    pub words: Vec<RankedWord>,
    pub seed: u64,
}

impl CandidateList {
    pub fn tokens(&self) -> Vec<String> {
        self.words.iter().map(|w| w.token.clone()).collect()
    }
}

/// Deterministically sample a modifier+noun topic, uniform over the cross
/// product of the two lists.
pub fn sample_topic(
    rng_seed: u64,
    modifiers: &[String],
    nouns: &[String],
) -> Result<TopicPhrase, VocabError> {
    if modifiers.is_empty() || nouns.is_empty() {
        return Err(VocabError::EmptyWordList);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let modifier = modifiers[rng.random_range(0..modifiers.len())].clone();
    let noun = nouns[rng.random_range(0..nouns.len())].clone();
    Ok(TopicPhrase { modifier, noun })
}

/// Pick the primary phoneme uniformly from the word-initial set (seeded) and
/// the secondary as its nearest neighbour in the remaining set.
pub fn select_phoneme_pair(
    _topic: &TopicPhrase,
    wip: &WordInitialSet,
    rng_seed: u64,
    table: &PhonemeFeatureTable,
) -> Result<(Phoneme, Phoneme), VocabError> {
    if wip.len() < 2 {
        return Err(VocabError::WipTooSmall(wip.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let ph1 = wip.phonemes()[rng.random_range(0..wip.len())].clone();
    let ph2 = table.nearest_phoneme(&ph1, &wip.without(&ph1))?;
    Ok((ph1, ph2))
}

/// Mean of the available token vectors; tokens without vectors are skipped.
pub fn embed_phrase(tokens: &[&str], table: &EmbeddingTable) -> Result<Vec<f64>, VocabError> {
    let mut sum = vec![0.0; table.dimension()];
    let mut n = 0usize;
    for tok in tokens {
        if let Some(v) = table.get(tok) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(VocabError::NoEmbeddedTokens);
    }
    for s in &mut sum {
        *s /= n as f64;
    }
    Ok(sum)
}

/// Retrieve lexicon words starting with `ph`, ranked by cosine similarity to
/// the topic embedding; tokens without vectors are dropped, score ties break
/// alphabetically, and at most `n` words are returned.
///
/// If no topic token has a vector, all scores fall back to zero and the
/// ranking is purely alphabetical.
pub fn candidate_words(
    lexicon: &Lexicon,
    ph: &Phoneme,
    topic: &TopicPhrase,
    embeddings: &EmbeddingTable,
    n: usize,
) -> Vec<RankedWord> {
    let topic_vec = embed_phrase(&topic.tokens(), embeddings).ok();
    let mut scored: Vec<RankedWord> = lexicon
        .words_with_initial(ph)
        .filter_map(|word| {
            let vec = embeddings.get(word)?;
            let score = topic_vec.as_deref().map_or(0.0, |tv| cosine(tv, vec));
            Some(RankedWord {
                token: word.to_string(),
                initial: ph.clone(),
                score,
            })
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.token.cmp(&b.token))
    });
    scored.truncate(n);
    scored
}

/// Build the shuffled two-bank candidate list for a topic: top-`n` words for
/// each of ph1 and ph2, combined and seeded-shuffled.
#[allow(clippy::too_many_arguments)]
pub fn build_candidate_list(
    topic: &TopicPhrase,
    wip: &WordInitialSet,
    lexicon: &Lexicon,
    embeddings: &EmbeddingTable,
    n: usize,
    rng_seed: u64,
    table: &PhonemeFeatureTable,
) -> Result<CandidateList, VocabError> {
    let (ph1, ph2) = select_phoneme_pair(topic, wip, rng_seed, table)?;
    build_candidate_list_for_pair(topic, &ph1, &ph2, lexicon, embeddings, n, rng_seed)
}

/// [`build_candidate_list`] with the phoneme pair fixed by the caller.
pub fn build_candidate_list_for_pair(
    topic: &TopicPhrase,
    ph1: &Phoneme,
    ph2: &Phoneme,
    lexicon: &Lexicon,
    embeddings: &EmbeddingTable,
    n: usize,
    rng_seed: u64,
) -> Result<CandidateList, VocabError> {
    let mut words = candidate_words(lexicon, ph1, topic, embeddings, n);
    words.extend(candidate_words(lexicon, ph2, topic, embeddings, n));
    if words.is_empty() {
        return Err(VocabError::EmptyCandidateBanks(
            ph1.ipa.clone(),
            ph2.ipa.clone(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    words.shuffle(&mut rng);
    Ok(CandidateList {
        topic: topic.clone(),
        ph1: ph1.clone(),
        ph2: ph2.clone(),
        words,
        seed: rng_seed,
    })
}
