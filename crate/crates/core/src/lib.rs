//! twistkit: phonologically informed tongue-twister generation and
//! evaluation.
//!
//! The crate is organized around a small set of immutable resources — a
//! phoneme feature table, a pronouncing lexicon, letter-to-sound fallback
//! rules, a word-initial consonant set, and an embedding table — plus pure
//! operations over them:
//!
//! - [`phonology`]: feature vectors and weighted phonemic edit distance
//! - [`g2p`]: lexicon loading and text transcription
//! - [`metrics`]: phoneme-overlap, edit-distance, and readability metrics
//! - [`vocab`]: topic sampling and phoneme-constrained candidate retrieval
//! - [`lm`]: the next-token provider abstraction, an n-gram model, and a
//!   remote HTTP provider
//! - [`decoder`]: phoneme-aware constrained decoding over any provider
//! - [`pipeline`]: prompt templates, refinement filters, and dataset assembly
//!
//! All resources are immutable after construction and every operation is a
//! pure function of its inputs (seeded where randomized), so shared
//! references are safe across threads and identical inputs give identical
//! outputs.

pub mod assets;
pub mod decoder;
pub mod g2p;
pub mod lm;
pub mod metrics;
pub mod phonology;
pub mod pipeline;
pub mod vocab;

pub use g2p::{transcribe_text, transcribe_word, Lexicon, Transcription};
pub use phonology::{Phoneme, PhonemeFeatureTable, PhonemeSequence};
