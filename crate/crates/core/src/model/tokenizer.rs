use serde::{Deserialize, Serialize};

/// How token counts `T(x)` are obtained for strategy text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TokenizerMode {
    /// Whitespace-delimited word count.
    #[default]
    Whitespace,
    /// Character count divided by four, rounded up.
    CharsDiv4,
    /// Completion token counts reported by the provider. Text that did not come
    /// straight from a provider response falls back to [`TokenizerMode::CharsDiv4`].
    ProviderReported,
}

impl TokenizerMode {
    /// Whether counts are reproducible from text alone.
    pub fn is_text_derived(self) -> bool {
        !matches!(self, TokenizerMode::ProviderReported)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tokenizer {
    pub mode: TokenizerMode,
}

impl Tokenizer {
    pub fn new(mode: TokenizerMode) -> Self {
        Tokenizer { mode }
    }

    pub fn count(&self, text: &str) -> u64 {
        match self.mode {
            TokenizerMode::Whitespace => text.split_whitespace().count() as u64,
            TokenizerMode::CharsDiv4 | TokenizerMode::ProviderReported => {
                (text.chars().count() as u64).div_ceil(4)
            }
        }
    }

    /// Token count for freshly generated text, preferring a provider-reported
    /// completion count when the mode asks for it.
    pub fn count_generated(&self, text: &str, reported: Option<u64>) -> u64 {
        match (self.mode, reported) {
            (TokenizerMode::ProviderReported, Some(n)) => n,
            _ => self.count(text),
        }
    }
}
