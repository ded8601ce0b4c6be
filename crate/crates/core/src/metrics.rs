//! Tongue-twister metrics: naive phoneme-overlap ratios (PO, Init-PO),
//! weighted phonemic edit-distance transitions (iPED, oPED), and four
//! readability indices.
//!
//! PO and Init-PO count unique phonemes with stress ignored (the inventory is
//! stress-free by construction). iPED averages the distance over consecutive
//! word-initial phoneme pairs; oPED averages over all adjacent phonemes in
//! reading order, across word boundaries. For all four, lower means more
//! repetition ("twistier"); zero means perfect overlap.

use std::collections::HashSet;

use thiserror::Error;

use crate::g2p::{syllable_count, tokenize, transcribe_text, FallbackRules, Lexicon, Transcription};
use crate::phonology::{PhonemeFeatureTable, PhonologyError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("transcription has no phonemes")]
    EmptyTranscription,
    #[error("metric needs at least {needed} {unit}, found {found}")]
    TooFew {
        needed: usize,
        found: usize,
        unit: &'static str,
    },
    #[error("text is empty")]
    EmptyText,
    #[error("no familiar-word list loaded (required for the Dale-Chall index)")]
    MissingFamiliarWords,
    #[error(transparent)]
    Phonology(#[from] PhonologyError),
}

/// Phoneme overlap: unique phonemes over total phonemes.
pub fn po(t: &Transcription) -> Result<f64, MetricsError> {
    let total = t.phoneme_count();
    if total == 0 {
        return Err(MetricsError::EmptyTranscription);
    }
    let unique: HashSet<&str> = t.all_phonemes().map(|p| p.arpabet.as_str()).collect();
    Ok(unique.len() as f64 / total as f64)
}

/// Initial phoneme overlap: unique word-initial phonemes over word count.
pub fn init_po(t: &Transcription) -> Result<f64, MetricsError> {
    let words = t.word_count();
    if words == 0 {
        return Err(MetricsError::EmptyTranscription);
    }
    let unique: HashSet<&str> = t
        .word_initials()
        .iter()
        .map(|p| p.arpabet.as_str())
        .collect();
    Ok(unique.len() as f64 / words as f64)
}

/// Mean weighted distance over consecutive word-initial phoneme pairs
/// (n-1 transitions for n words). Needs at least two words.
pub fn iped(t: &Transcription, table: &PhonemeFeatureTable) -> Result<f64, MetricsError> {
    let initials = t.word_initials();
    if initials.len() < 2 {
        return Err(MetricsError::TooFew {
            needed: 2,
            found: initials.len(),
            unit: "words",
        });
    }
    let mut total = 0.0;
    for pair in initials.windows(2) {
        total += table.phoneme_distance(pair[0], pair[1])?;
    }
    Ok(total / (initials.len() - 1) as f64)
}

/// Mean weighted distance over all adjacent phonemes in reading order,
/// across word boundaries. Needs at least two phonemes.
pub fn oped(t: &Transcription, table: &PhonemeFeatureTable) -> Result<f64, MetricsError> {
    let phonemes: Vec<_> = t.all_phonemes().collect();
    if phonemes.len() < 2 {
        return Err(MetricsError::TooFew {
            needed: 2,
            found: phonemes.len(),
            unit: "phonemes",
        });
    }
    let mut total = 0.0;
    for pair in phonemes.windows(2) {
        total += table.phoneme_distance(pair[0], pair[1])?;
    }
    Ok(total / (phonemes.len() - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadabilityIndex {
    DaleChall,
    FleschKincaid,
    GunningFog,
    Ari,
}

/// Sentence count: split on `.`, `!`, `?`; a text with words but no
/// terminator counts as one sentence.
pub fn sentence_count(text: &str) -> usize {
    let sentences = text
        .split(['.', '!', '?'])
        .filter(|s| s.split_whitespace().next().is_some())
        .count();
    sentences.max(usize::from(!tokenize(text).is_empty()))
}

/// The grade-level readability formulas. Characters are counted over
/// punctuation-stripped tokens; syllables come from the lexicon (with the
/// rule fallback); "complex" words have three or more syllables.
pub fn readability(
    text: &str,
    index: ReadabilityIndex,
    lexicon: &Lexicon,
    rules: &FallbackRules,
    table: &PhonemeFeatureTable,
    familiar: Option<&HashSet<String>>,
) -> Result<f64, MetricsError> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(MetricsError::EmptyText);
    }
    let words = tokens.len() as f64;
    let sentences = sentence_count(text) as f64;

    match index {
        ReadabilityIndex::Ari => {
            let chars: usize = tokens.iter().map(|t| t.chars().count()).sum();
            Ok(4.71 * (chars as f64 / words) + 0.5 * (words / sentences) - 21.43)
        }
        ReadabilityIndex::FleschKincaid => {
            let syllables: usize = tokens
                .iter()
                .map(|t| syllable_count(t, lexicon, rules, table))
                .sum();
            Ok(0.39 * (words / sentences) + 11.8 * (syllables as f64 / words) - 15.59)
        }
        ReadabilityIndex::GunningFog => {
            let complex = tokens
                .iter()
                .filter(|t| syllable_count(t, lexicon, rules, table) >= 3)
                .count() as f64;
            Ok(0.4 * ((words / sentences) + 100.0 * (complex / words)))
        }
        ReadabilityIndex::DaleChall => {
            let familiar = familiar.ok_or(MetricsError::MissingFamiliarWords)?;
            let difficult = tokens
                .iter()
                .filter(|t| !familiar.contains(&t.to_lowercase()))
                .count() as f64;
            let pct_difficult = 100.0 * difficult / words;
            let mut score = 0.1579 * pct_difficult + 0.0496 * (words / sentences);
            if pct_difficult > 5.0 {
                score += 3.6365;
            }
            Ok(score)
        }
    }
}

/// One flat record of every metric for a text.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MetricReport {
    pub po: f64,
    pub init_po: f64,
    pub iped: f64,
    pub oped: f64,
    pub re_dale_chall: f64,
    pub re_flesch_kincaid: f64,
    pub re_gunning_fog: f64,
    pub re_ari: f64,
    pub word_count: usize,
    pub phoneme_count: usize,
}

impl MetricReport {
    /// Fixed field order shared by the CSV header and row renderings.
    pub const CSV_FIELDS: &'static str =
        "po,init_po,iped,oped,re_dale_chall,re_flesch_kincaid,re_gunning_fog,re_ari,word_count,phoneme_count";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
            self.po,
            self.init_po,
            self.iped,
            self.oped,
            self.re_dale_chall,
            self.re_flesch_kincaid,
            self.re_gunning_fog,
            self.re_ari,
            self.word_count,
            self.phoneme_count
        )
    }
}

/// Compute the full metric suite for one text.
pub fn metric_report(
    text: &str,
    lexicon: &Lexicon,
    rules: &FallbackRules,
    table: &PhonemeFeatureTable,
    familiar: &HashSet<String>,
) -> Result<MetricReport, MetricsError> {
    let t = transcribe_text(text, lexicon, rules, table);
    Ok(MetricReport {
        po: po(&t)?,
        init_po: init_po(&t)?,
        iped: iped(&t, table)?,
        oped: oped(&t, table)?,
        re_dale_chall: readability(text, ReadabilityIndex::DaleChall, lexicon, rules, table, Some(familiar))?,
        re_flesch_kincaid: readability(text, ReadabilityIndex::FleschKincaid, lexicon, rules, table, None)?,
        re_gunning_fog: readability(text, ReadabilityIndex::GunningFog, lexicon, rules, table, None)?,
        re_ari: readability(text, ReadabilityIndex::Ari, lexicon, rules, table, None)?,
        word_count: t.word_count(),
        phoneme_count: t.phoneme_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;

    fn transcribed(text: &str) -> Transcription {
        transcribe_text(
            text,
            assets::lexicon(),
            assets::fallback_rules(),
            assets::feature_table(),
        )
    }

    #[test]
    fn po_bob_bob_bob() {
        let t = transcribed("bob bob bob");
        assert!((po(&t).unwrap() - 2.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn po_single_phoneme_word() {
        let t = transcribed("a");
        assert!((po(&t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn po_she_sells_hand_tally() {
        // she SH IY, sells S EH L Z, sea S IY, shells SH EH L Z,
        // by B AY, the DH AH, seashore S IY SH AO R
        // total 21, unique {SH IY S EH L Z B AY DH AH AO R} = 12
        let t = transcribed("she sells sea shells by the seashore");
        assert!((po(&t).unwrap() - 12.0 / 21.0).abs() < 1e-12);
    }

    #[test]
    fn init_po_examples() {
        let t = transcribed("bob bob bob");
        assert!((init_po(&t).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let t = transcribed("cat dog");
        assert!((init_po(&t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_transcription_errors() {
        let t = transcribed("");
        assert!(matches!(po(&t), Err(MetricsError::EmptyTranscription)));
        assert!(matches!(init_po(&t), Err(MetricsError::EmptyTranscription)));
    }

    #[test]
    fn iped_identity_and_single_transition() {
        let table = assets::feature_table();
        let t = transcribed("bob bought big bread");
        assert_eq!(iped(&t, table).unwrap(), 0.0);

        let t = transcribed("tick dock");
        let want = table
            .phoneme_distance(
                table.by_ipa("t").unwrap(),
                table.by_ipa("d").unwrap(),
            )
            .unwrap();
        assert!((iped(&t, table).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn iped_needs_two_words() {
        let table = assets::feature_table();
        let t = transcribed("bob");
        assert!(matches!(iped(&t, table), Err(MetricsError::TooFew { .. })));
    }

    #[test]
    fn oped_identity_and_single_pair() {
        let table = assets::feature_table();
        // OOV "aaaa" falls back to a run of identical vowels.
        let t = transcribed("aaaa");
        assert_eq!(oped(&t, table).unwrap(), 0.0);

        let lex = Lexicon::parse("TS  T S\n", table).unwrap();
        let t = transcribe_text("ts", &lex, assets::fallback_rules(), table);
        let want = table
            .phoneme_distance(table.by_ipa("t").unwrap(), table.by_ipa("s").unwrap())
            .unwrap();
        assert!((oped(&t, table).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn oped_needs_two_phonemes() {
        let table = assets::feature_table();
        let t = transcribed("a");
        assert!(matches!(oped(&t, table), Err(MetricsError::TooFew { .. })));
    }

    #[test]
    fn sentence_counting() {
        assert_eq!(sentence_count("The cat sat."), 1);
        assert_eq!(sentence_count("One. Two! Three?"), 3);
        assert_eq!(sentence_count("no terminator here"), 1);
        assert_eq!(sentence_count("Trailing. "), 1);
        assert_eq!(sentence_count(""), 0);
    }

    #[test]
    fn ari_hand_computed() {
        // "The cat sat." -> 9 characters, 3 words, 1 sentence.
        let got = readability(
            "The cat sat.",
            ReadabilityIndex::Ari,
            assets::lexicon(),
            assets::fallback_rules(),
            assets::feature_table(),
            None,
        )
        .unwrap();
        let want = 4.71 * 3.0 + 0.5 * 3.0 - 21.43;
        assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn flesch_kincaid_one_word() {
        let got = readability(
            "a",
            ReadabilityIndex::FleschKincaid,
            assets::lexicon(),
            assets::fallback_rules(),
            assets::feature_table(),
            None,
        )
        .unwrap();
        assert!((got - (0.39 + 11.8 - 15.59)).abs() < 1e-9);
        assert!((got + 3.40).abs() < 1e-2);
    }

    #[test]
    fn gunning_fog_no_complex_words() {
        // Ten one-syllable words, one sentence: 0.4 * 10 = 4.0.
        let got = readability(
            "the cat sat and the dog sat on the mat",
            ReadabilityIndex::GunningFog,
            assets::lexicon(),
            assets::fallback_rules(),
            assets::feature_table(),
            None,
        )
        .unwrap();
        assert!((got - 4.0).abs() < 1e-9);
    }

    #[test]
    fn dale_chall_needs_familiar_list() {
        let err = readability(
            "the cat sat",
            ReadabilityIndex::DaleChall,
            assets::lexicon(),
            assets::fallback_rules(),
            assets::feature_table(),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, MetricsError::MissingFamiliarWords));
    }

    #[test]
    fn dale_chall_difficult_bonus() {
        let lex = assets::lexicon();
        let rules = assets::fallback_rules();
        let table = assets::feature_table();
        let familiar = assets::familiar_words();
        // All words familiar: no +3.6365 adjustment.
        let easy = readability("the cat sat.", ReadabilityIndex::DaleChall, lex, rules, table, Some(familiar)).unwrap();
        assert!((easy - 0.0496 * 3.0).abs() < 1e-9);
        // One difficult word in three: 33.3% > 5% triggers the adjustment.
        let hard = readability("the zyzzyva sat.", ReadabilityIndex::DaleChall, lex, rules, table, Some(familiar)).unwrap();
        let want = 0.1579 * (100.0 / 3.0) + 0.0496 * 3.0 + 3.6365;
        assert!((hard - want).abs() < 1e-9);
    }

    #[test]
    fn formulas_match_arithmetic_oracle_on_five_sentences() {
        // Counts below are hand-tallied from the texts and the bundled
        // lexicon/familiar-word files: (text, words, sentences, chars,
        // syllables, complex, difficult).
        let fixtures: [(&str, f64, f64, f64, f64, f64, f64); 5] = [
            ("The cat sat.", 3.0, 1.0, 9.0, 3.0, 0.0, 0.0),
            ("She sells sea shells by the seashore.", 7.0, 1.0, 30.0, 8.0, 0.0, 1.0),
            ("Hello World. Hello World.", 4.0, 2.0, 20.0, 6.0, 0.0, 0.0),
            ("The doctor advised more rest and a careful diet.", 9.0, 1.0, 39.0, 13.0, 0.0, 2.0),
            ("Volunteers cleaned the beach and sorted the bottles!", 8.0, 1.0, 44.0, 12.0, 1.0, 1.0),
        ];
        let lex = assets::lexicon();
        let rules = assets::fallback_rules();
        let table = assets::feature_table();
        let familiar = assets::familiar_words();
        for (text, words, sentences, chars, syllables, complex, difficult) in fixtures {
            let ari = 4.71 * (chars / words) + 0.5 * (words / sentences) - 21.43;
            let fk = 0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59;
            let fog = 0.4 * ((words / sentences) + 100.0 * (complex / words));
            let pct = 100.0 * difficult / words;
            let dc = 0.1579 * pct + 0.0496 * (words / sentences)
                + if pct > 5.0 { 3.6365 } else { 0.0 };

            let got = |index| readability(text, index, lex, rules, table, Some(familiar)).unwrap();
            assert!((got(ReadabilityIndex::Ari) - ari).abs() < 1e-9, "{text}: ARI");
            assert!((got(ReadabilityIndex::FleschKincaid) - fk).abs() < 1e-9, "{text}: FK");
            assert!((got(ReadabilityIndex::GunningFog) - fog).abs() < 1e-9, "{text}: Fog");
            assert!((got(ReadabilityIndex::DaleChall) - dc).abs() < 1e-9, "{text}: DC");
        }
    }

    #[test]
    fn empty_text_errors() {
        let err = readability(
            "",
            ReadabilityIndex::Ari,
            assets::lexicon(),
            assets::fallback_rules(),
            assets::feature_table(),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, MetricsError::EmptyText));
    }

    #[test]
    fn report_has_sane_ranges() {
        let report = metric_report(
            "she sells sea shells by the seashore",
            assets::lexicon(),
            assets::fallback_rules(),
            assets::feature_table(),
            assets::familiar_words(),
        )
        .unwrap();
        assert!(report.po > 0.0 && report.po <= 1.0);
        assert!(report.init_po > 0.0 && report.init_po <= 1.0);
        assert!(report.iped >= 0.0 && report.oped >= 0.0);
        assert_eq!(report.word_count, 7);
        assert_eq!(report.phoneme_count, 21);
    }

    #[test]
    fn duplicating_text_lowers_or_keeps_overlap_scores() {
        let once = transcribed("she sells sea shells");
        let twice = transcribed("she sells sea shells she sells sea shells");
        assert!(po(&twice).unwrap() <= po(&once).unwrap() + 1e-12);
        assert!(init_po(&twice).unwrap() < init_po(&once).unwrap());
    }

    #[test]
    fn transition_metrics_ignore_retokenization() {
        let table = assets::feature_table();
        let a = transcribed("she  sells   sea");
        let b = transcribed("she sells sea");
        assert_eq!(iped(&a, table).unwrap(), iped(&b, table).unwrap());
        assert_eq!(oped(&a, table).unwrap(), oped(&b, table).unwrap());
    }
}
