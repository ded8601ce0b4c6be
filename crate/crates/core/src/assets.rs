//! Bundled data assets and lazily parsed defaults.
//!
//! Every asset can be overridden with an external file through the CLI or
//! library constructors; these are the defaults compiled into the crate so
//! the toolkit works out of the box.

use std::collections::HashSet;
use std::sync::OnceLock;

use crate::g2p::{FallbackRules, Lexicon};
use crate::phonology::PhonemeFeatureTable;
use crate::vocab::{EmbeddingTable, WordInitialSet};

pub const FEATURE_TABLE_SRC: &str = include_str!("../assets/feature_table.tsv");
pub const WIP_SRC: &str = include_str!("../assets/wip.txt");
pub const G2P_RULES_SRC: &str = include_str!("../assets/g2p_rules.tsv");
pub const LEXICON_SRC: &str = include_str!("../assets/lexicon.dict");
pub const STOPWORDS_SRC: &str = include_str!("../assets/stopwords.txt");
pub const PROFANITY_SRC: &str = include_str!("../assets/profanity.txt");
pub const FAMILIAR_WORDS_SRC: &str = include_str!("../assets/familiar_words.txt");
pub const EMBEDDINGS_SRC: &str = include_str!("../assets/embeddings.txt");
pub const ADJECTIVES_SRC: &str = include_str!("../assets/adjectives.txt");
pub const NOUNS_SRC: &str = include_str!("../assets/nouns.txt");
pub const TWISTERS_SRC: &str = include_str!("../assets/twisters.txt");
pub const PROSE_SRC: &str = include_str!("../assets/prose.txt");
pub const CORPUS_SRC: &str = include_str!("../assets/corpus.txt");

/// Parse a one-token-per-line word list ('#' comments and blanks skipped).
pub fn parse_word_list(src: &str) -> Vec<String> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// The bundled General American feature table.
pub fn feature_table() -> &'static PhonemeFeatureTable {
    static TABLE: OnceLock<PhonemeFeatureTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        PhonemeFeatureTable::parse(FEATURE_TABLE_SRC).expect("bundled feature table parses")
    })
}

/// The bundled word-initial consonant set, in file (tie-break) order.
pub fn word_initial_set() -> &'static WordInitialSet {
    static WIP: OnceLock<WordInitialSet> = OnceLock::new();
    WIP.get_or_init(|| {
        WordInitialSet::parse(WIP_SRC, feature_table()).expect("bundled WIP list parses")
    })
}

/// The bundled letter-to-sound fallback rules.
pub fn fallback_rules() -> &'static FallbackRules {
    static RULES: OnceLock<FallbackRules> = OnceLock::new();
    RULES.get_or_init(|| {
        FallbackRules::parse(G2P_RULES_SRC, feature_table()).expect("bundled g2p rules parse")
    })
}

/// The bundled compact pronouncing dictionary.
pub fn lexicon() -> &'static Lexicon {
    static LEX: OnceLock<Lexicon> = OnceLock::new();
    LEX.get_or_init(|| {
        Lexicon::parse(LEXICON_SRC, feature_table()).expect("bundled lexicon parses")
    })
}

/// The bundled demonstration embedding table.
pub fn embeddings() -> &'static EmbeddingTable {
    static EMB: OnceLock<EmbeddingTable> = OnceLock::new();
    EMB.get_or_init(|| EmbeddingTable::parse(EMBEDDINGS_SRC).expect("bundled embeddings parse"))
}

pub fn stopwords() -> &'static HashSet<String> {
    static WORDS: OnceLock<HashSet<String>> = OnceLock::new();
    WORDS.get_or_init(|| parse_word_list(STOPWORDS_SRC).into_iter().collect())
}

pub fn profanity_bank() -> &'static HashSet<String> {
    static WORDS: OnceLock<HashSet<String>> = OnceLock::new();
    WORDS.get_or_init(|| parse_word_list(PROFANITY_SRC).into_iter().collect())
}

pub fn familiar_words() -> &'static HashSet<String> {
    static WORDS: OnceLock<HashSet<String>> = OnceLock::new();
    WORDS.get_or_init(|| parse_word_list(FAMILIAR_WORDS_SRC).into_iter().collect())
}

pub fn adjectives() -> Vec<String> {
    parse_word_list(ADJECTIVES_SRC)
}

pub fn nouns() -> Vec<String> {
    parse_word_list(NOUNS_SRC)
}

/// The bundled classic tongue-twisters, one per line.
pub fn classic_twisters() -> Vec<String> {
    parse_word_list(TWISTERS_SRC)
}

/// The bundled plain-prose sentences, one per line.
pub fn prose_sentences() -> Vec<String> {
    parse_word_list(PROSE_SRC)
}
