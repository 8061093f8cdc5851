//! Whitespace token accounting used for every prompt and memory budget.
//!
//! Model tokenizers differ between backends, so budgets are enforced on a
//! monotone proxy: a token is a maximal run of non-whitespace characters.

use std::borrow::Cow;

/// Number of whitespace-separated tokens in `text`.
pub fn count_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Keeps the first `max_tokens` tokens of `text`.
///
/// Text that already fits is returned untouched. Otherwise the kept tokens
/// are rejoined with single spaces, so line structure is lost.
pub fn truncate_tokens(text: &str, max_tokens: usize) -> Cow<'_, str> {
    if count_tokens(text) <= max_tokens {
        return Cow::Borrowed(text);
    }
    let kept: Vec<&str> = text.split_whitespace().take(max_tokens).collect();
    Cow::Owned(kept.join(" "))
}
