//! Token budgets for scorer payloads.
//!
//! Budgets are counted in word tokens from the corpus tokenizer. Model
//! backends re-truncate with their own subword counts; cutting the tail of a
//! text twice is the same as cutting it once.

use alloc::string::{String, ToString};

use crate::tokenize::{truncate_tokens, Tokenizer};

/// Tokens left for a document once the query is placed in a window of
/// `max_input_tokens`.
pub fn document_budget(max_input_tokens: usize, query_tokens: usize) -> usize {
    max_input_tokens.saturating_sub(query_tokens)
}

/// Number of tokens to remove from *each* document of a pair so that both
/// fit in `budget` together. Both documents lose the same count (a document
/// shorter than the cut simply becomes empty).
pub fn equal_pair_cut(len_a: usize, len_b: usize, budget: usize) -> usize {
    let total = len_a + len_b;
    if total <= budget {
        return 0;
    }
    let half = (total - budget).div_ceil(2);
    let short = len_a.min(len_b);
    if half <= short {
        half
    } else {
        // The short document is emptied; the long one alone must fit.
        let long = len_a.max(len_b);
        long.saturating_sub(budget).max(short)
    }
}

/// Pointwise payload text: the document tail is cut first.
pub fn pointwise_payload(tokenizer: &dyn Tokenizer, query_tokens: usize, text: &str, max_input_tokens: usize) -> String {
    let budget = document_budget(max_input_tokens, query_tokens);
    truncate_tokens(tokenizer, text, budget).to_string()
}

/// Pairwise payload texts: both documents lose the same number of tokens.
pub fn pairwise_payload(
    tokenizer: &dyn Tokenizer,
    query_tokens: usize,
    text_a: &str,
    text_b: &str,
    max_input_tokens: usize,
) -> (String, String) {
    let budget = document_budget(max_input_tokens, query_tokens);
    let (len_a, len_b) = (tokenizer.count(text_a), tokenizer.count(text_b));
    let cut = equal_pair_cut(len_a, len_b, budget);
    (
        truncate_tokens(tokenizer, text_a, len_a.saturating_sub(cut)).to_string(),
        truncate_tokens(tokenizer, text_b, len_b.saturating_sub(cut)).to_string(),
    )
}
