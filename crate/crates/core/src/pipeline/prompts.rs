//! Prompt templates for the generation, refinement, and paraphrase steps.
//! Instantiation is byte-exact: downstream filters and any remote generator
//! see exactly these strings.

use super::PipelineError;

/// The prompt templates the pipeline can instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptKind {
    /// Word-list prompt favouring succinct, twister-like output.
    A,
    /// Word-list prompt favouring coherent, longer output.
    B,
    /// Re-edit an existing twister for sense and grammar.
    Refine,
    /// Rewrite a twister into plain prose (system + user message).
    Paraphrase,
    /// Task prompt: generate from a topic phrase.
    TopicToTwister,
    /// Task prompt: rewrite a prosaic paraphrase into a twister.
    StyleTransfer,
}

impl PromptKind {
    pub fn parse(name: &str) -> Result<Self, PipelineError> {
        match name.to_lowercase().as_str() {
            "a" => Ok(PromptKind::A),
            "b" => Ok(PromptKind::B),
            "refine" => Ok(PromptKind::Refine),
            "paraphrase" => Ok(PromptKind::Paraphrase),
            "topic2twister" | "topic-to-twister" => Ok(PromptKind::TopicToTwister),
            "styletransfer" | "style-transfer" => Ok(PromptKind::StyleTransfer),
            other => Err(PipelineError::UnknownPromptVariant(other.to_string())),
        }
    }
}

/// Payload for [`build_prompt`]: a word list for the A/B variants, a text for
/// the rest.
#[derive(Debug, Clone)]
pub enum PromptPayload<'a> {
    WordList(&'a [String]),
    Text(&'a str),
}

const PARAPHRASE_SYSTEM: &str = "In this task you will pretend that you're an author who is \
rewriting existing works into a non-literary form that more resembles prose. You will be \
presented with a tongue-twister and asked to rewrite it using synonym replacement so that there \
are no longer high levels of phonetic overlap and sound repetition. Example 1: INPUT = \"She \
sells sea shells by the seashore.\" OUTPUT = \"The girl sells conches by the ocean.\" Example 2: \
INPUT = \"Peter Piper picks pickled peppers\" OUTPUT = \"Peter Piper selects preserved capsicums\"";

/// Instantiate a prompt template. Word lists render comma-separated.
pub fn build_prompt(kind: PromptKind, payload: PromptPayload<'_>) -> Result<String, PipelineError> {
    match (kind, payload) {
        (PromptKind::A, PromptPayload::WordList(words)) => Ok(format!(
            "Generate a sensible and grammatical tongue-twister using words from the following \
             list: {}. The output should be a single sentence and be grammatical and coherent",
            words.join(", ")
        )),
        (PromptKind::B, PromptPayload::WordList(words)) => Ok(format!(
            "Generate a tongue-twister by primarily using words from the following list: {}. \
             The output should be grammatical and coherent",
            words.join(", ")
        )),
        (PromptKind::Refine, PromptPayload::Text(twister)) => Ok(format!(
            "Improve the following tongue-twister by editing it so that is makes more sense and \
             is grammatical: {twister}"
        )),
        (PromptKind::Paraphrase, PromptPayload::Text(twister)) => {
            Ok(format!("{PARAPHRASE_SYSTEM}\n\nINPUT = \"{twister}, OUTPUT = "))
        }
        (PromptKind::TopicToTwister, PromptPayload::Text(topic)) => {
            Ok(format!("Generate a tongue-twister on the topic of \"{topic}\""))
        }
        (PromptKind::StyleTransfer, PromptPayload::Text(paraphrase)) => Ok(format!(
            "Generate a tongue-twister by rewriting the following text: {paraphrase}"
        )),
        (kind, payload) => Err(PipelineError::PromptArity(format!(
            "{kind:?} cannot take {}",
            match payload {
                PromptPayload::WordList(_) => "a word list",
                PromptPayload::Text(_) => "a text",
            }
        ))),
    }
}
