//! Phoneme inventory, articulatory feature vectors, and weighted phonemic
//! edit distance.
//!
//! The inventory and its feature chart are loaded from a tab-separated data
//! file (see `assets/feature_table.tsv` for the bundled General American
//! table). Every distance in the crate reduces to [`PhonemeFeatureTable::phoneme_distance`]:
//! the weighted sum of per-feature disagreements between two feature rows.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhonologyError {
    #[error("unknown phoneme {0:?}")]
    UnknownPhoneme(String),
    #[error("feature table parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("candidate list is empty")]
    EmptyCandidates,
}

/// Ternary articulatory feature value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureValue {
    Plus,
    Minus,
    Unspecified,
}

impl FeatureValue {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "+" => Some(FeatureValue::Plus),
            "-" => Some(FeatureValue::Minus),
            "0" => Some(FeatureValue::Unspecified),
            _ => None,
        }
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            FeatureValue::Plus => '+',
            FeatureValue::Minus => '-',
            FeatureValue::Unspecified => '0',
        };
        write!(f, "{c}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Klass {
    Consonant,
    Vowel,
}

/// A phoneme of the loaded inventory.
///
/// Stress digits never appear here: ARPABET codes are stored and compared
/// with stress stripped.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize)]
pub struct Phoneme {
    pub ipa: String,
    pub arpabet: String,
    pub klass: Klass,
    pub word_initial_legal: bool,
}

impl serde::Serialize for Klass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Klass::Consonant => s.serialize_str("consonant"),
            Klass::Vowel => s.serialize_str("vowel"),
        }
    }
}

impl Phoneme {
    pub fn is_consonant(&self) -> bool {
        self.klass == Klass::Consonant
    }

    pub fn is_vowel(&self) -> bool {
        self.klass == Klass::Vowel
    }
}

impl fmt::Display for Phoneme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ipa)
    }
}

/// An ordered, possibly empty sequence of inventory phonemes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhonemeSequence {
    phonemes: Vec<Phoneme>,
}

impl PhonemeSequence {
    pub fn new(phonemes: Vec<Phoneme>) -> Self {
        Self { phonemes }
    }

    /// Build a sequence from whitespace-separated ARPABET codes
    /// (stress digits accepted and stripped).
    pub fn from_arpabet(table: &PhonemeFeatureTable, codes: &str) -> Result<Self, PhonologyError> {
        let phonemes = codes
            .split_whitespace()
            .map(|c| table.by_arpabet(c).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { phonemes })
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

    pub fn first(&self) -> Option<&Phoneme> {
        self.phonemes.first()
    }
}

impl From<Vec<Phoneme>> for PhonemeSequence {
    fn from(phonemes: Vec<Phoneme>) -> Self {
        Self { phonemes }
    }
}

/// Strip a trailing ARPABET stress digit (0/1/2), if any.
pub fn strip_stress(code: &str) -> &str {
    code.strip_suffix(['0', '1', '2']).unwrap_or(code)
}

/// Phoneme inventory plus per-phoneme feature rows and per-feature weights.
///
/// Immutable after parsing; all operations are pure functions, so a shared
/// reference can be used freely across threads.
#[derive(Debug, Clone)]
pub struct PhonemeFeatureTable {
    feature_names: Vec<String>,
    weights: Vec<f64>,
    phonemes: Vec<Phoneme>,
    rows: Vec<Vec<FeatureValue>>,
    by_ipa: HashMap<String, usize>,
    by_arpabet: HashMap<String, usize>,
    indel_cost: f64,
}

impl PhonemeFeatureTable {
    /// Parse a feature table from its text format.
    ///
    /// Format: '#' comment lines; a header line of comma-separated feature
    /// names; one `weights<TAB>w1,...,wn` line; then one row per phoneme:
    /// `IPA<TAB>ARPABET<TAB>class<TAB>initial<TAB>f1,...,fn`.
    pub fn parse(src: &str) -> Result<Self, PhonologyError> {
        let err = |line: usize, msg: String| PhonologyError::Parse { line, msg };

        let mut feature_names: Vec<String> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut phonemes = Vec::new();
        let mut rows: Vec<Vec<FeatureValue>> = Vec::new();
        let mut by_ipa = HashMap::new();
        let mut by_arpabet = HashMap::new();

        for (idx, raw) in src.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if feature_names.is_empty() {
                feature_names = line.split(',').map(|s| s.trim().to_string()).collect();
                if feature_names.iter().any(|n| n.is_empty()) {
                    return Err(err(lineno, "empty feature name in header".into()));
                }
                continue;
            }
            if let Some(rest) = line.strip_prefix("weights\t") {
                if !weights.is_empty() {
                    return Err(err(lineno, "duplicate weights line".into()));
                }
                for part in rest.split(',') {
                    let w: f64 = part
                        .trim()
                        .parse()
                        .map_err(|_| err(lineno, format!("bad weight {part:?}")))?;
                    if !w.is_finite() || w < 0.0 {
                        return Err(err(lineno, format!("weight {w} must be finite and >= 0")));
                    }
                    weights.push(w);
                }
                if weights.len() != feature_names.len() {
                    return Err(err(
                        lineno,
                        format!(
                            "expected {} weights, found {}",
                            feature_names.len(),
                            weights.len()
                        ),
                    ));
                }
                continue;
            }

            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(err(lineno, format!("expected 5 fields, found {}", fields.len())));
            }
            let ipa = fields[0].to_string();
            let arpabet = fields[1].to_string();
            if ipa.is_empty() || arpabet.is_empty() {
                return Err(err(lineno, "empty phoneme symbol".into()));
            }
            let klass = match fields[2] {
                "consonant" => Klass::Consonant,
                "vowel" => Klass::Vowel,
                other => return Err(err(lineno, format!("bad class {other:?}"))),
            };
            let word_initial_legal = match fields[3] {
                "yes" => true,
                "no" => false,
                other => return Err(err(lineno, format!("bad initial flag {other:?}"))),
            };
            let mut row = Vec::with_capacity(feature_names.len());
            for part in fields[4].split(',') {
                let v = FeatureValue::parse(part.trim())
                    .ok_or_else(|| err(lineno, format!("bad feature value {part:?}")))?;
                row.push(v);
            }
            if row.len() != feature_names.len() {
                return Err(err(
                    lineno,
                    format!("expected {} feature values, found {}", feature_names.len(), row.len()),
                ));
            }
            if by_ipa.contains_key(&ipa) {
                return Err(err(lineno, format!("duplicate IPA symbol {ipa:?}")));
            }
            if by_arpabet.contains_key(&arpabet) {
                return Err(err(lineno, format!("duplicate ARPABET code {arpabet:?}")));
            }
            let index = phonemes.len();
            by_ipa.insert(ipa.clone(), index);
            by_arpabet.insert(arpabet.clone(), index);
            phonemes.push(Phoneme {
                ipa,
                arpabet,
                klass,
                word_initial_legal,
            });
            rows.push(row);
        }

        if feature_names.is_empty() {
            return Err(err(0, "missing feature-name header".into()));
        }
        if weights.is_empty() {
            return Err(err(0, "missing weights line".into()));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(err(0, "all weights are zero".into()));
        }
        if phonemes.is_empty() {
            return Err(err(0, "no phoneme rows".into()));
        }

        let mut table = Self {
            feature_names,
            weights,
            phonemes,
            rows,
            by_ipa,
            by_arpabet,
            indel_cost: 0.0,
        };
        table.indel_cost = table.max_pairwise_distance() / 2.0;
        Ok(table)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Inventory in file order (the deterministic tie-break order).
    pub fn phonemes(&self) -> &[Phoneme] {
        &self.phonemes
    }

    pub fn by_ipa(&self, symbol: &str) -> Result<&Phoneme, PhonologyError> {
        self.by_ipa
            .get(symbol)
            .map(|&i| &self.phonemes[i])
            .ok_or_else(|| PhonologyError::UnknownPhoneme(symbol.to_string()))
    }

    /// Look up by ARPABET code; vowel stress digits are stripped first.
    pub fn by_arpabet(&self, code: &str) -> Result<&Phoneme, PhonologyError> {
        let base = strip_stress(code);
        self.by_arpabet
            .get(base)
            .map(|&i| &self.phonemes[i])
            .ok_or_else(|| PhonologyError::UnknownPhoneme(code.to_string()))
    }

    pub fn contains_arpabet(&self, code: &str) -> bool {
        self.by_arpabet.contains_key(strip_stress(code))
    }

    /// Translate an ARPABET code (stress accepted) to its IPA symbol.
    pub fn arpabet_to_ipa(&self, code: &str) -> Result<&str, PhonologyError> {
        Ok(self.by_arpabet(code)?.ipa.as_str())
    }

    /// Translate an IPA symbol to its ARPABET code.
    pub fn ipa_to_arpabet(&self, symbol: &str) -> Result<&str, PhonologyError> {
        Ok(self.by_ipa(symbol)?.arpabet.as_str())
    }

    fn row_index(&self, p: &Phoneme) -> Result<usize, PhonologyError> {
        self.by_arpabet
            .get(p.arpabet.as_str())
            .copied()
            .ok_or_else(|| PhonologyError::UnknownPhoneme(p.ipa.clone()))
    }

    /// The stored feature row for a phoneme, unmodified.
    pub fn feature_vector(&self, p: &Phoneme) -> Result<&[FeatureValue], PhonologyError> {
        Ok(&self.rows[self.row_index(p)?])
    }

    /// Value of a single named feature for a phoneme.
    pub fn feature(&self, p: &Phoneme, name: &str) -> Result<FeatureValue, PhonologyError> {
        let row = self.feature_vector(p)?;
        let pos = self
            .feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| PhonologyError::UnknownPhoneme(format!("feature {name}")))?;
        Ok(row[pos])
    }

    fn row_distance(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let (ra, rb) = (&self.rows[a], &self.rows[b]);
        let mut total = 0.0;
        for ((&va, &vb), &w) in ra.iter().zip(rb.iter()).zip(self.weights.iter()) {
            let delta = match (va, vb) {
                _ if va == vb => 0.0,
                (FeatureValue::Unspecified, _) | (_, FeatureValue::Unspecified) => 0.5,
                _ => 1.0,
            };
            total += w * delta;
        }
        total
    }

    /// Weighted feature edit distance between two single phonemes: the sum
    /// over features of weight times disagreement (0 on agreement, 1 between
    /// + and -, 0.5 when exactly one side is unspecified).
    pub fn phoneme_distance(&self, a: &Phoneme, b: &Phoneme) -> Result<f64, PhonologyError> {
        Ok(self.row_distance(self.row_index(a)?, self.row_index(b)?))
    }

    /// Insertion/deletion cost used by [`Self::sequence_ped`]: half the
    /// maximum pairwise substitution cost over the loaded table.
    pub fn indel_cost(&self) -> f64 {
        self.indel_cost
    }

    fn max_pairwise_distance(&self) -> f64 {
        let n = self.rows.len();
        let mut max = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                max = max.max(self.row_distance(i, j));
            }
        }
        max
    }

    /// Minimum-cost alignment distance between two phoneme sequences:
    /// substitutions cost [`Self::phoneme_distance`], insertions and
    /// deletions cost [`Self::indel_cost`] each.
    pub fn sequence_ped(
        &self,
        a: &PhonemeSequence,
        b: &PhonemeSequence,
    ) -> Result<f64, PhonologyError> {
        self.sequence_ped_with(a, b, self.indel_cost)
    }

    /// [`Self::sequence_ped`] with an explicit insertion/deletion cost.
    pub fn sequence_ped_with(
        &self,
        a: &PhonemeSequence,
        b: &PhonemeSequence,
        indel_cost: f64,
    ) -> Result<f64, PhonologyError> {
        let ia: Vec<usize> = a
            .phonemes()
            .iter()
            .map(|p| self.row_index(p))
            .collect::<Result<_, _>>()?;
        let ib: Vec<usize> = b
            .phonemes()
            .iter()
            .map(|p| self.row_index(p))
            .collect::<Result<_, _>>()?;

        let (m, n) = (ia.len(), ib.len());
        let mut prev: Vec<f64> = (0..=n).map(|j| j as f64 * indel_cost).collect();
        let mut cur = vec![0.0; n + 1];
        for i in 1..=m {
            cur[0] = i as f64 * indel_cost;
            for j in 1..=n {
                let sub = prev[j - 1] + self.row_distance(ia[i - 1], ib[j - 1]);
                let del = prev[j] + indel_cost;
                let ins = cur[j - 1] + indel_cost;
                cur[j] = sub.min(del).min(ins);
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        Ok(prev[n])
    }

    /// The candidate with minimum distance to `target`. Ties go to the
    /// earliest candidate in list order, so the result is deterministic for
    /// a fixed table and candidate ordering.
    pub fn nearest_phoneme(
        &self,
        target: &Phoneme,
        candidates: &[Phoneme],
    ) -> Result<Phoneme, PhonologyError> {
        if candidates.is_empty() {
            return Err(PhonologyError::EmptyCandidates);
        }
        let ti = self.row_index(target)?;
        let mut best: Option<(f64, &Phoneme)> = None;
        for c in candidates {
            let d = self.row_distance(ti, self.row_index(c)?);
            match best {
                Some((bd, _)) if d >= bd => {}
                _ => best = Some((d, c)),
            }
        }
        Ok(best.expect("non-empty candidates").1.clone())
    }
}
