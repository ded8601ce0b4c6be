//! Effective run configuration: flags over environment (provider endpoint
//! only) over config file over bundled defaults.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use twistkit::assets;
use twistkit::g2p::{FallbackRules, Lexicon};
use twistkit::phonology::PhonemeFeatureTable;
use twistkit::vocab::{EmbeddingTable, WordInitialSet};

use crate::CliError;

/// Raw option sources before resolution. `None` means "not set here".
#[derive(Debug, Default, Clone)]
pub struct ConfigOverrides {
    pub lexicon: Option<PathBuf>,
    pub feature_table: Option<PathBuf>,
    pub g2p_rules: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub profanity: Option<PathBuf>,
    pub familiar: Option<PathBuf>,
    pub wip: Option<PathBuf>,
    pub adjectives: Option<PathBuf>,
    pub nouns: Option<PathBuf>,
    pub provider: Option<String>,
    pub seed: Option<u64>,
}

const PATH_KEYS: [&str; 10] = [
    "lexicon",
    "feature_table",
    "g2p_rules",
    "embeddings",
    "stopwords",
    "profanity",
    "familiar",
    "wip",
    "adjectives",
    "nouns",
];

/// Parse the flat `key = value` config file format ('#' comments allowed).
pub fn parse_config_file(path: &PathBuf) -> Result<ConfigOverrides, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
    let mut map: HashMap<String, String> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Data(format!(
                "config {} line {}: expected key = value",
                path.display(),
                i + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    let mut cfg = ConfigOverrides::default();
    for (key, value) in map {
        match key.as_str() {
            k if PATH_KEYS.contains(&k) => {
                let p = Some(PathBuf::from(&value));
                match k {
                    "lexicon" => cfg.lexicon = p,
                    "feature_table" => cfg.feature_table = p,
                    "g2p_rules" => cfg.g2p_rules = p,
                    "embeddings" => cfg.embeddings = p,
                    "stopwords" => cfg.stopwords = p,
                    "profanity" => cfg.profanity = p,
                    "familiar" => cfg.familiar = p,
                    "wip" => cfg.wip = p,
                    "adjectives" => cfg.adjectives = p,
                    _ => cfg.nouns = p,
                }
            }
            "provider" => cfg.provider = Some(value),
            "seed" => {
                cfg.seed = Some(
                    value
                        .parse()
                        .map_err(|_| CliError::Data(format!("config: bad seed {value:?}")))?,
                )
            }
            other => return Err(CliError::Data(format!("config: unknown key {other:?}"))),
        }
    }
    Ok(cfg)
}

/// Fully resolved configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub lexicon: Option<PathBuf>,
    pub feature_table: Option<PathBuf>,
    pub g2p_rules: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub profanity: Option<PathBuf>,
    pub familiar: Option<PathBuf>,
    pub wip: Option<PathBuf>,
    pub adjectives: Option<PathBuf>,
    pub nouns: Option<PathBuf>,
    pub provider: Option<String>,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 17;
pub const PROVIDER_ENV: &str = "TWISTKIT_PROVIDER_URL";

impl RunConfig {
    /// Merge flag, environment (provider only), and file sources.
    pub fn resolve(flags: ConfigOverrides, file: ConfigOverrides) -> Self {
        let env_provider = std::env::var(PROVIDER_ENV).ok().filter(|v| !v.is_empty());
        Self {
            lexicon: flags.lexicon.or(file.lexicon),
            feature_table: flags.feature_table.or(file.feature_table),
            g2p_rules: flags.g2p_rules.or(file.g2p_rules),
            embeddings: flags.embeddings.or(file.embeddings),
            stopwords: flags.stopwords.or(file.stopwords),
            profanity: flags.profanity.or(file.profanity),
            familiar: flags.familiar.or(file.familiar),
            wip: flags.wip.or(file.wip),
            adjectives: flags.adjectives.or(file.adjectives),
            nouns: flags.nouns.or(file.nouns),
            provider: flags.provider.or(env_provider).or(file.provider),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        }
    }

    /// Every referenced file must exist before any work starts.
    pub fn check_paths(&self) -> Result<(), CliError> {
        let paths = [
            ("lexicon", &self.lexicon),
            ("feature-table", &self.feature_table),
            ("g2p-rules", &self.g2p_rules),
            ("embeddings", &self.embeddings),
            ("stopwords", &self.stopwords),
            ("profanity", &self.profanity),
            ("familiar", &self.familiar),
            ("wip", &self.wip),
            ("adjectives", &self.adjectives),
            ("nouns", &self.nouns),
        ];
        for (name, path) in paths {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(CliError::Data(format!(
                        "{name} file {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Audit rendering for --print-config.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let show = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "(bundled)".to_string())
        };
        let _ = writeln!(out, "lexicon = {}", show(&self.lexicon));
        let _ = writeln!(out, "feature_table = {}", show(&self.feature_table));
        let _ = writeln!(out, "g2p_rules = {}", show(&self.g2p_rules));
        let _ = writeln!(out, "embeddings = {}", show(&self.embeddings));
        let _ = writeln!(out, "stopwords = {}", show(&self.stopwords));
        let _ = writeln!(out, "profanity = {}", show(&self.profanity));
        let _ = writeln!(out, "familiar = {}", show(&self.familiar));
        let _ = writeln!(out, "wip = {}", show(&self.wip));
        let _ = writeln!(out, "adjectives = {}", show(&self.adjectives));
        let _ = writeln!(out, "nouns = {}", show(&self.nouns));
        let _ = writeln!(
            out,
            "provider = {}",
            self.provider.as_deref().unwrap_or("(none)")
        );
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }
}

/// All parsed assets for one run. Override paths are parsed, bundled data
/// otherwise.
pub struct LoadedAssets {
    pub table: PhonemeFeatureTable,
    pub lexicon: Lexicon,
    pub rules: FallbackRules,
    pub wip: WordInitialSet,
    pub embeddings: EmbeddingTable,
    pub stopwords: HashSet<String>,
    pub profanity: HashSet<String>,
    pub familiar: HashSet<String>,
    pub adjectives: Vec<String>,
    pub nouns: Vec<String>,
}

fn read_source(path: &Option<PathBuf>, bundled: &str) -> Result<String, CliError> {
    match path {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", p.display()))),
        None => Ok(bundled.to_string()),
    }
}

impl LoadedAssets {
    pub fn load(cfg: &RunConfig) -> Result<Self, CliError> {
        cfg.check_paths()?;
        let data = |e: String| CliError::Data(e);

        let table = PhonemeFeatureTable::parse(&read_source(&cfg.feature_table, assets::FEATURE_TABLE_SRC)?)
            .map_err(|e| data(e.to_string()))?;
        let lexicon = Lexicon::parse(&read_source(&cfg.lexicon, assets::LEXICON_SRC)?, &table)
            .map_err(|e| data(e.to_string()))?;
        if let Some(path) = &cfg.lexicon {
            eprintln!("loaded {} lexicon entries from {}", lexicon.len(), path.display());
        }
        let rules = FallbackRules::parse(&read_source(&cfg.g2p_rules, assets::G2P_RULES_SRC)?, &table)
            .map_err(|e| data(e.to_string()))?;
        let wip = WordInitialSet::parse(&read_source(&cfg.wip, assets::WIP_SRC)?, &table)
            .map_err(|e| data(e.to_string()))?;
        let embeddings = EmbeddingTable::parse(&read_source(&cfg.embeddings, assets::EMBEDDINGS_SRC)?)
            .map_err(|e| data(e.to_string()))?;
        let stopwords = assets::parse_word_list(&read_source(&cfg.stopwords, assets::STOPWORDS_SRC)?)
            .into_iter()
            .collect();
        let profanity = assets::parse_word_list(&read_source(&cfg.profanity, assets::PROFANITY_SRC)?)
            .into_iter()
            .collect();
        let familiar = assets::parse_word_list(&read_source(&cfg.familiar, assets::FAMILIAR_WORDS_SRC)?)
            .into_iter()
            .collect();
        let adjectives = assets::parse_word_list(&read_source(&cfg.adjectives, assets::ADJECTIVES_SRC)?);
        let nouns = assets::parse_word_list(&read_source(&cfg.nouns, assets::NOUNS_SRC)?);

        Ok(Self {
            table,
            lexicon,
            rules,
            wip,
            embeddings,
            stopwords,
            profanity,
            familiar,
            adjectives,
            nouns,
        })
    }
}
