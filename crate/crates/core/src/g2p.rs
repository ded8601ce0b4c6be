//! Grapheme-to-phoneme conversion: CMU-format lexicon lookup with a
//! deterministic longest-match letter-to-sound fallback for out-of-vocabulary
//! tokens.
//!
//! Rendering conventions for transcriptions are fixed because dataset records
//! store them verbatim: ARPABET keeps vowel stress digits, joins phonemes
//! with single spaces and words with double spaces; IPA concatenates symbols
//! within a word and joins words with single spaces.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::phonology::{strip_stress, Phoneme, PhonemeFeatureTable, PhonemeSequence, PhonologyError};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown ARPABET symbol {symbol:?} at line {line}")]
    UnknownSymbol { line: usize, symbol: String },
    #[error("token {0:?} is empty after normalization")]
    EmptyToken(String),
    #[error(transparent)]
    Phonology(#[from] PhonologyError),
}

/// One headword with its pronunciation variants (first = primary).
#[derive(Debug, Clone)]
pub struct LexiconEntry {
    pub headword: String,
    pub pronunciations: Vec<Vec<String>>,
}

impl LexiconEntry {
    pub fn primary(&self) -> &[String] {
        &self.pronunciations[0]
    }
}

/// An immutable pronouncing dictionary with a word-initial phoneme index.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: HashMap<String, LexiconEntry>,
    // base (stress-stripped) initial ARPABET code -> headwords, sorted for
    // deterministic retrieval order
    initial_index: HashMap<String, BTreeSet<String>>,
}

impl Lexicon {
    /// Parse CMUdict-format text: `WORD  PH1 PH2 ...`, `WORD(2)` variant
    /// lines, `;;;` comments.
    pub fn parse(src: &str, table: &PhonemeFeatureTable) -> Result<Self, LexiconError> {
        let mut entries: HashMap<String, LexiconEntry> = HashMap::new();
        let mut initial_index: HashMap<String, BTreeSet<String>> = HashMap::new();

        for (idx, raw) in src.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with(";;;") {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().ok_or_else(|| LexiconError::Parse {
                line: lineno,
                msg: "missing headword".into(),
            })?;
            let phones: Vec<String> = parts.map(str::to_string).collect();
            if phones.is_empty() {
                return Err(LexiconError::Parse {
                    line: lineno,
                    msg: format!("no pronunciation for {word:?}"),
                });
            }
            for ph in &phones {
                if !table.contains_arpabet(ph) {
                    return Err(LexiconError::UnknownSymbol {
                        line: lineno,
                        symbol: ph.clone(),
                    });
                }
            }
            // Strip a variant marker like "(2)".
            let head = match word.find('(') {
                Some(pos) if word.ends_with(')') => &word[..pos],
                _ => word,
            };
            if head.is_empty() {
                return Err(LexiconError::Parse {
                    line: lineno,
                    msg: format!("bad headword {word:?}"),
                });
            }
            let head = head.to_lowercase();
            let entry = entries.entry(head.clone()).or_insert_with(|| LexiconEntry {
                headword: head.clone(),
                pronunciations: Vec::new(),
            });
            let is_primary = entry.pronunciations.is_empty();
            entry.pronunciations.push(phones.clone());
            if is_primary {
                let initial = strip_stress(&phones[0]).to_string();
                initial_index.entry(initial).or_default().insert(head);
            }
        }

        Ok(Self {
            entries,
            initial_index,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Case-insensitive headword lookup.
    pub fn entry(&self, word: &str) -> Option<&LexiconEntry> {
        self.entries.get(&word.to_lowercase())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(&word.to_lowercase())
    }

    /// Headwords whose primary pronunciation starts with `initial`
    /// (stress-insensitive), in sorted order.
    pub fn words_with_initial(&self, initial: &Phoneme) -> impl Iterator<Item = &str> {
        self.initial_index
            .get(initial.arpabet.as_str())
            .into_iter()
            .flat_map(|set| set.iter().map(String::as_str))
    }

    pub fn headwords(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// A letter-to-sound rule: literal lowercase pattern, optionally anchored to
/// the start or end of the word, producing zero or more ARPABET symbols.
#[derive(Debug, Clone)]
struct Rule {
    pattern: String,
    at_start: bool,
    at_end: bool,
    phones: Vec<String>,
}

/// Ordered longest-match fallback rule set.
#[derive(Debug, Clone)]
pub struct FallbackRules {
    rules: Vec<Rule>,
}

impl FallbackRules {
    /// Parse `PATTERN<TAB>PHONEMES` lines ('#' comments skipped). Output
    /// symbols are validated against the feature table.
    pub fn parse(src: &str, table: &PhonemeFeatureTable) -> Result<Self, LexiconError> {
        let mut rules = Vec::new();
        for (idx, raw) in src.lines().enumerate() {
            let lineno = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let (pat, phones) = raw.split_once('\t').ok_or_else(|| LexiconError::Parse {
                line: lineno,
                msg: "expected PATTERN<TAB>PHONEMES".into(),
            })?;
            let mut pattern = pat.trim().to_string();
            let at_start = pattern.starts_with('^');
            if at_start {
                pattern.remove(0);
            }
            let at_end = pattern.ends_with('$');
            if at_end {
                pattern.pop();
            }
            if pattern.is_empty() {
                return Err(LexiconError::Parse {
                    line: lineno,
                    msg: "empty pattern".into(),
                });
            }
            // "-" marks a silent rule (no output symbols).
            let phones: Vec<String> = if phones.trim() == "-" {
                Vec::new()
            } else {
                phones.split_whitespace().map(str::to_string).collect()
            };
            for ph in &phones {
                if !table.contains_arpabet(ph) {
                    return Err(LexiconError::UnknownSymbol {
                        line: lineno,
                        symbol: ph.clone(),
                    });
                }
            }
            rules.push(Rule {
                pattern,
                at_start,
                at_end,
                phones,
            });
        }
        Ok(Self { rules })
    }

    /// Apply the rules to a lowercase token. At each position the longest
    /// matching pattern wins (file order breaks length ties); characters with
    /// no matching rule are skipped. A token that produces nothing maps to a
    /// single reduced vowel so the fallback is total.
    pub fn apply(&self, token: &str) -> Vec<String> {
        let chars: Vec<char> = token.to_lowercase().chars().collect();
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < chars.len() {
            let mut best: Option<&Rule> = None;
            for rule in &self.rules {
                let plen = rule.pattern.chars().count();
                if let Some(b) = best {
                    if plen <= b.pattern.chars().count() {
                        continue;
                    }
                }
                if rule.at_start && pos != 0 {
                    continue;
                }
                if pos + plen > chars.len() {
                    continue;
                }
                if rule.at_end && pos + plen != chars.len() {
                    continue;
                }
                if rule.pattern.chars().zip(&chars[pos..]).all(|(a, &b)| a == b) {
                    best = Some(rule);
                }
            }
            match best {
                Some(rule) => {
                    out.extend(rule.phones.iter().cloned());
                    pos += rule.pattern.chars().count();
                }
                None => pos += 1,
            }
        }
        if out.is_empty() {
            out.push("AH0".to_string());
        }
        out
    }
}

/// One transcribed word: the source token, its raw ARPABET symbols (stress
/// digits preserved), the resolved phoneme sequence, and an OOV flag.
#[derive(Debug, Clone)]
pub struct TranscriptionUnit {
    pub token: String,
    pub arpabet: Vec<String>,
    pub phonemes: PhonemeSequence,
    pub oov: bool,
}

/// A transcribed text: one unit per word, in source order.
#[derive(Debug, Clone, Default)]
pub struct Transcription {
    pub units: Vec<TranscriptionUnit>,
}

impl Transcription {
    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.units.len()
    }

    pub fn phoneme_count(&self) -> usize {
        self.units.iter().map(|u| u.phonemes.len()).sum()
    }

    /// All phonemes in reading order, crossing word boundaries.
    pub fn all_phonemes(&self) -> impl Iterator<Item = &Phoneme> {
        self.units.iter().flat_map(|u| u.phonemes.phonemes().iter())
    }

    /// Word-initial phonemes in word order.
    pub fn word_initials(&self) -> Vec<&Phoneme> {
        self.units.iter().filter_map(|u| u.phonemes.first()).collect()
    }

    /// ARPABET rendering: single spaces within a word, double spaces between
    /// words, stress digits preserved.
    pub fn arpabet_text(&self) -> String {
        self.units
            .iter()
            .map(|u| u.arpabet.join(" "))
            .collect::<Vec<_>>()
            .join("  ")
    }

    /// IPA rendering: symbols concatenated within a word, single spaces
    /// between words, no stress marks.
    pub fn ipa_text(&self) -> String {
        self.units
            .iter()
            .map(|u| {
                u.phonemes
                    .phonemes()
                    .iter()
                    .map(|p| p.ipa.as_str())
                    .collect::<String>()
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Split a text into word tokens: whitespace-separated, leading and trailing
/// punctuation stripped, internal apostrophes and hyphens kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_string())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Transcribe one token: primary lexicon pronunciation when present,
/// otherwise the rule fallback (flagged OOV). Hyphenated tokens are
/// transcribed part by part and concatenated.
pub fn transcribe_word(
    word: &str,
    lexicon: &Lexicon,
    rules: &FallbackRules,
    table: &PhonemeFeatureTable,
) -> Result<TranscriptionUnit, LexiconError> {
    let token = word.trim_matches(|c: char| !c.is_alphanumeric());
    if token.is_empty() {
        return Err(LexiconError::EmptyToken(word.to_string()));
    }

    let mut arpabet: Vec<String> = Vec::new();
    let mut oov = false;
    if let Some(entry) = lexicon.entry(token) {
        arpabet.extend(entry.primary().iter().cloned());
    } else if token.contains('-') && token.split('-').any(|p| lexicon.contains(p)) {
        for part in token.split('-').filter(|p| !p.is_empty()) {
            match lexicon.entry(part) {
                Some(entry) => arpabet.extend(entry.primary().iter().cloned()),
                None => {
                    arpabet.extend(rules.apply(part));
                    oov = true;
                }
            }
        }
    } else {
        arpabet = rules.apply(token);
        oov = true;
    }

    let phonemes = arpabet
        .iter()
        .map(|c| table.by_arpabet(c).cloned())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TranscriptionUnit {
        token: token.to_string(),
        arpabet,
        phonemes: PhonemeSequence::new(phonemes),
        oov,
    })
}

/// Transcribe a whole text. Empty text gives an empty transcription.
pub fn transcribe_text(
    text: &str,
    lexicon: &Lexicon,
    rules: &FallbackRules,
    table: &PhonemeFeatureTable,
) -> Transcription {
    let units = tokenize(text)
        .iter()
        .filter_map(|tok| transcribe_word(tok, lexicon, rules, table).ok())
        .collect();
    Transcription { units }
}

/// Number of syllables in a token: vowel phonemes of its transcription,
/// minimum one.
pub fn syllable_count(
    word: &str,
    lexicon: &Lexicon,
    rules: &FallbackRules,
    table: &PhonemeFeatureTable,
) -> usize {
    match transcribe_word(word, lexicon, rules, table) {
        Ok(unit) => {
            let vowels = unit
                .phonemes
                .phonemes()
                .iter()
                .filter(|p| p.is_vowel())
                .count();
            vowels.max(1)
        }
        // Unusable token: fall back to orthographic vowel groups.
        Err(_) => {
            let lower = word.to_lowercase();
            let mut groups = 0;
            let mut in_group = false;
            for c in lower.chars() {
                let is_vowel_letter = matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
                if is_vowel_letter && !in_group {
                    groups += 1;
                }
                in_group = is_vowel_letter;
            }
            groups.max(1)
        }
    }
}
