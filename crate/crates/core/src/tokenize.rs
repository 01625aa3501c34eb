//! Word-level tokenization shared by indexing and scorer truncation.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

/// Ordered list of normalized tokens.
pub type TokenStream = Vec<String>;

/// A tokenization policy.
///
/// The index and the truncation bookkeeping only see tokens through this
/// trait, so a stemming analyzer can be dropped in without touching either.
pub trait Tokenizer: Send + Sync {
    /// Byte ranges of the tokens in `text`, in order.
    fn spans(&self, text: &str) -> Vec<Range<usize>>;

    /// Normalizes the raw token text at `span`.
    fn normalize(&self, raw: &str) -> String;

    fn tokenize(&self, text: &str) -> TokenStream {
        self.spans(text)
            .into_iter()
            .map(|span| self.normalize(&text[span]))
            .collect()
    }

    fn count(&self, text: &str) -> usize {
        self.spans(text).len()
    }
}

/// Lowercases and splits on maximal runs of non-alphanumeric characters.
/// No stemming and no stop-word removal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimpleTokenizer;

/// A character belongs to a token when every character of its lowercase
/// expansion is alphanumeric. Checking the expansion (rather than the
/// character itself) keeps tokenization idempotent on its own output.
fn is_word_char(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_alphanumeric();
    }
    c.is_alphanumeric() && c.to_lowercase().all(char::is_alphanumeric)
}

impl Tokenizer for SimpleTokenizer {
    fn spans(&self, text: &str) -> Vec<Range<usize>> {
        let mut spans = Vec::new();
        let mut start: Option<usize> = None;
        for (pos, c) in text.char_indices() {
            match (is_word_char(c), start) {
                (true, None) => start = Some(pos),
                (false, Some(s)) => {
                    spans.push(s..pos);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            spans.push(s..text.len());
        }
        spans
    }

    fn normalize(&self, raw: &str) -> String {
        raw.chars().flat_map(char::to_lowercase).collect()
    }
}

/// Tokenizes with the default [`SimpleTokenizer`].
pub fn tokenize(text: &str) -> TokenStream {
    SimpleTokenizer.tokenize(text)
}

/// Cuts `text` after its `max_tokens`-th token, keeping the original
/// characters of the retained prefix. Text with at most `max_tokens` tokens
/// is returned unchanged, so repeated truncation is a no-op.
pub fn truncate_tokens<'a>(tokenizer: &dyn Tokenizer, text: &'a str, max_tokens: usize) -> &'a str {
    let spans = tokenizer.spans(text);
    if spans.len() <= max_tokens {
        return text;
    }
    match max_tokens.checked_sub(1) {
        Some(last) => &text[..spans[last].end],
        None => "",
    }
}
