//! Python bindings: the feature table, lexicon, n-gram model, metric suite,
//! fuzzy matching, and constrained decoding, exposed as the `twistkit`
//! extension module.

use std::collections::HashMap;
use std::fs;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use twistkit::decoder::{self, DecoderConfig};
use twistkit::g2p;
use twistkit::lm::{self, NextTokenProvider};
use twistkit::metrics;
use twistkit::phonology;
use twistkit::pipeline;
use twistkit::vocab;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Phoneme inventory with feature vectors and weighted distances.
#[pyclass]
struct FeatureTable {
    inner: phonology::PhonemeFeatureTable,
}

impl FeatureTable {
    fn phoneme(&self, ipa: &str) -> PyResult<phonology::Phoneme> {
        self.inner.by_ipa(ipa).cloned().map_err(value_err)
    }
}

#[pymethods]
impl FeatureTable {
    /// The bundled General American table.
    #[new]
    fn new() -> Self {
        Self {
            inner: twistkit::assets::feature_table().clone(),
        }
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let src = fs::read_to_string(path).map_err(value_err)?;
        Ok(Self {
            inner: phonology::PhonemeFeatureTable::parse(&src).map_err(value_err)?,
        })
    }

    /// Weighted feature edit distance between two phonemes (IPA symbols).
    fn distance(&self, a: &str, b: &str) -> PyResult<f64> {
        let (a, b) = (self.phoneme(a)?, self.phoneme(b)?);
        self.inner.phoneme_distance(&a, &b).map_err(value_err)
    }

    /// Alignment distance between two ARPABET sequences (stress digits ok).
    fn sequence_distance(&self, a: Vec<String>, b: Vec<String>) -> PyResult<f64> {
        let sa = phonology::PhonemeSequence::from_arpabet(&self.inner, &a.join(" "))
            .map_err(value_err)?;
        let sb = phonology::PhonemeSequence::from_arpabet(&self.inner, &b.join(" "))
            .map_err(value_err)?;
        self.inner.sequence_ped(&sa, &sb).map_err(value_err)
    }

    /// Nearest phoneme to `target` among `candidates` (defaults to the
    /// bundled word-initial set minus the target), first-wins on ties.
    #[pyo3(signature = (target, candidates=None))]
    fn nearest(&self, target: &str, candidates: Option<Vec<String>>) -> PyResult<String> {
        let target = self.phoneme(target)?;
        let pool: Vec<phonology::Phoneme> = match candidates {
            Some(symbols) => symbols
                .iter()
                .map(|s| self.phoneme(s))
                .collect::<PyResult<_>>()?,
            None => twistkit::assets::word_initial_set().without(&target),
        };
        let got = self.inner.nearest_phoneme(&target, &pool).map_err(value_err)?;
        Ok(got.ipa)
    }

    /// Feature name -> "+", "-", or "0" for one phoneme.
    fn feature_vector(&self, ipa: &str) -> PyResult<HashMap<String, String>> {
        let p = self.phoneme(ipa)?;
        let row = self.inner.feature_vector(&p).map_err(value_err)?;
        Ok(self
            .inner
            .feature_names()
            .iter()
            .zip(row)
            .map(|(name, value)| (name.clone(), value.to_string()))
            .collect())
    }

    fn arpabet_to_ipa(&self, code: &str) -> PyResult<String> {
        self.inner
            .arpabet_to_ipa(code)
            .map(str::to_string)
            .map_err(value_err)
    }

    fn ipa_to_arpabet(&self, symbol: &str) -> PyResult<String> {
        self.inner
            .ipa_to_arpabet(symbol)
            .map(str::to_string)
            .map_err(value_err)
    }

    fn indel_cost(&self) -> f64 {
        self.inner.indel_cost()
    }

    fn __len__(&self) -> usize {
        self.inner.phonemes().len()
    }
}

/// Pronouncing dictionary with grapheme-to-phoneme fallback.
#[pyclass]
struct Lexicon {
    inner: g2p::Lexicon,
}

#[pymethods]
impl Lexicon {
    /// The bundled compact dictionary.
    #[new]
    fn new() -> Self {
        Self {
            inner: twistkit::assets::lexicon().clone(),
        }
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let src = fs::read_to_string(path).map_err(value_err)?;
        Ok(Self {
            inner: g2p::Lexicon::parse(&src, twistkit::assets::feature_table())
                .map_err(value_err)?,
        })
    }

    /// ARPABET transcription: single spaces within words, double spaces
    /// between words, stress digits preserved.
    fn transcribe(&self, text: &str) -> String {
        g2p::transcribe_text(
            text,
            &self.inner,
            twistkit::assets::fallback_rules(),
            twistkit::assets::feature_table(),
        )
        .arpabet_text()
    }

    /// IPA transcription: symbols joined within words, single spaces between.
    fn transcribe_ipa(&self, text: &str) -> String {
        g2p::transcribe_text(
            text,
            &self.inner,
            twistkit::assets::fallback_rules(),
            twistkit::assets::feature_table(),
        )
        .ipa_text()
    }

    fn syllables(&self, word: &str) -> usize {
        g2p::syllable_count(
            word,
            &self.inner,
            twistkit::assets::fallback_rules(),
            twistkit::assets::feature_table(),
        )
    }

    fn contains(&self, word: &str) -> bool {
        self.inner.contains(word)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Add-k smoothed n-gram language model.
#[pyclass]
struct NgramModel {
    inner: lm::NGramModel,
}

#[pymethods]
impl NgramModel {
    /// Train on a corpus string, one sentence per line.
    #[staticmethod]
    #[pyo3(signature = (corpus, order=3, k=1.0))]
    fn train(corpus: &str, order: usize, k: f64) -> PyResult<Self> {
        if !(1..=3).contains(&order) {
            return Err(value_err("order must be 1, 2, or 3"));
        }
        if k <= 0.0 {
            return Err(value_err("k must be positive"));
        }
        Ok(Self {
            inner: lm::NGramModel::train(corpus, order, k).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let src = fs::read_to_string(path).map_err(value_err)?;
        Ok(Self {
            inner: lm::NGramModel::from_text(&src).map_err(value_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        fs::write(path, self.inner.to_text()).map_err(value_err)
    }

    /// Ranked (token, logprob, rank) candidates after a context.
    #[pyo3(signature = (context, top_k=10))]
    fn next_tokens(&self, context: Vec<String>, top_k: usize) -> PyResult<Vec<(String, f64, usize)>> {
        let dist = self
            .inner
            .next_token_distribution(&context, top_k)
            .map_err(value_err)?;
        Ok(dist.into_iter().map(|c| (c.token, c.logprob, c.rank)).collect())
    }

    fn perplexity(&self, text: &str) -> PyResult<f64> {
        lm::perplexity(&self.inner, &lm::lm_tokenize(text)).map_err(value_err)
    }

    fn vocab_len(&self) -> usize {
        self.inner.vocab_len()
    }
}

/// Full metric record for a text, using the bundled assets.
#[pyfunction]
fn metric_report(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    let report = metrics::metric_report(
        text,
        twistkit::assets::lexicon(),
        twistkit::assets::fallback_rules(),
        twistkit::assets::feature_table(),
        twistkit::assets::familiar_words(),
    )
    .map_err(value_err)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("po", report.po)?;
    dict.set_item("init_po", report.init_po)?;
    dict.set_item("iped", report.iped)?;
    dict.set_item("oped", report.oped)?;
    dict.set_item("re_dale_chall", report.re_dale_chall)?;
    dict.set_item("re_flesch_kincaid", report.re_flesch_kincaid)?;
    dict.set_item("re_gunning_fog", report.re_gunning_fog)?;
    dict.set_item("re_ari", report.re_ari)?;
    dict.set_item("word_count", report.word_count)?;
    dict.set_item("phoneme_count", report.phoneme_count)?;
    Ok(dict.into())
}

/// Order-indifferent fuzzy similarity in [0, 100].
#[pyfunction]
fn token_sort_ratio(a: &str, b: &str) -> f64 {
    pipeline::token_sort_ratio(a, b)
}

/// Primary/secondary target phonemes for a topic (IPA symbols).
#[pyfunction]
#[pyo3(signature = (topic, seed=0))]
fn phoneme_pair(topic: &str, seed: u64) -> PyResult<(String, String)> {
    let (ph1, ph2) = decoder::pick_target_phonemes(
        topic,
        twistkit::assets::word_initial_set(),
        twistkit::assets::feature_table(),
        twistkit::assets::lexicon(),
        twistkit::assets::fallback_rules(),
        seed,
    )
    .map_err(value_err)?;
    Ok((ph1.ipa, ph2.ipa))
}

/// Shuffled phoneme-constrained candidate words for a topic.
#[pyfunction]
#[pyo3(signature = (topic, n=10, seed=0))]
fn candidate_words(topic: &str, n: usize, seed: u64) -> PyResult<Vec<String>> {
    let tokens: Vec<String> = topic.split_whitespace().map(str::to_string).collect();
    if tokens.is_empty() {
        return Err(value_err("topic must not be empty"));
    }
    let phrase = vocab::TopicPhrase {
        modifier: tokens[0].clone(),
        noun: tokens[1..].join(" "),
    };
    let list = vocab::build_candidate_list(
        &phrase,
        twistkit::assets::word_initial_set(),
        twistkit::assets::lexicon(),
        twistkit::assets::embeddings(),
        n,
        seed,
        twistkit::assets::feature_table(),
    )
    .map_err(value_err)?;
    Ok(list.tokens())
}

/// Phoneme-aware constrained decode with an n-gram provider; returns a dict
/// with the prompt, target phonemes, words, status, and per-step trace.
#[pyfunction]
#[pyo3(signature = (topic, model, seed=0, max_length=30))]
fn decode(
    py: Python<'_>,
    topic: &str,
    model: &NgramModel,
    seed: u64,
    max_length: usize,
) -> PyResult<Py<PyAny>> {
    let mut cfg = DecoderConfig::bundled(seed);
    cfg.max_length = max_length;
    let result = decoder::decode(
        topic,
        &model.inner,
        &cfg,
        twistkit::assets::lexicon(),
        twistkit::assets::fallback_rules(),
        twistkit::assets::feature_table(),
        twistkit::assets::word_initial_set(),
    )
    .map_err(value_err)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("prompt", &result.prompt)?;
    dict.set_item("ph1", &result.ph1.ipa)?;
    dict.set_item("ph2", &result.ph2.ipa)?;
    dict.set_item("words", result.words())?;
    dict.set_item("text", result.text())?;
    dict.set_item("status", format!("{:?}", result.status))?;
    let trace: Vec<(usize, String, usize, String)> = result
        .trace
        .iter()
        .map(|s| (s.step, s.token.clone(), s.rank, s.reason.to_string()))
        .collect();
    dict.set_item("trace", trace)?;
    Ok(dict.into())
}

/// Run the refinement filters over line-delimited JSON records; returns the
/// kept records (JSON lines) and the stage report (JSON). The perplexity
/// stage scores with the supplied n-gram model.
#[pyfunction]
#[pyo3(signature = (records_jsonl, scorer, ppl_mean, ppl_std, phon_mean, phon_std, threshold=60.0))]
fn filter_records(
    records_jsonl: &str,
    scorer: &NgramModel,
    ppl_mean: f64,
    ppl_std: f64,
    phon_mean: f64,
    phon_std: f64,
    threshold: f64,
) -> PyResult<(String, String)> {
    let records = pipeline::read_records(records_jsonl).map_err(value_err)?;
    let mut cfg = pipeline::PipelineConfig::new(pipeline::ReferenceStats {
        ppl_mean,
        ppl_std,
        phon_mean,
        phon_std,
        source_label: "python".into(),
    });
    cfg.stage_order = vec![
        pipeline::Stage::PplFilter,
        pipeline::Stage::PhonemicFilter,
        pipeline::Stage::Dedup,
        pipeline::Stage::ProfanityFilter,
        pipeline::Stage::TopicDedup,
    ];
    cfg.dedup_threshold = threshold;
    let (kept, report) = pipeline::run_pipeline(
        records,
        &pipeline::StubGenerator,
        &scorer.inner,
        twistkit::assets::profanity_bank(),
        pipeline::PipelineEnv::bundled(),
        &cfg,
    )
    .map_err(value_err)?;
    let report_json = serde_json::to_string(&report).map_err(value_err)?;
    Ok((pipeline::write_records(&kept), report_json))
}

/// The twistkit extension module.
#[pymodule(name = "twistkit")]
fn twistkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<FeatureTable>()?;
    m.add_class::<Lexicon>()?;
    m.add_class::<NgramModel>()?;
    m.add_function(wrap_pyfunction!(metric_report, m)?)?;
    m.add_function(wrap_pyfunction!(token_sort_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(phoneme_pair, m)?)?;
    m.add_function(wrap_pyfunction!(candidate_words, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(filter_records, m)?)?;
    Ok(())
}
