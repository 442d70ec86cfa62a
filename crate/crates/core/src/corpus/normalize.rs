use unicode_normalization::UnicodeNormalization;

use crate::error::Result;

/// NFKC, lowercase, and collapse whitespace runs to single spaces.
/// Punctuation is left alone.
pub fn normalize_text(raw: &str) -> String {
    let lowered = raw.nfkc().collect::<String>().to_lowercase();
    // Lowercasing can emit combining sequences (e.g. U+0130), so recompose.
    let folded: String = lowered.nfkc().collect();
    let mut out = String::with_capacity(folded.len());
    for word in folded.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

pub fn normalize_bytes(raw: &[u8]) -> Result<String> {
    let text = String::from_utf8(raw.to_vec())?;
    Ok(normalize_text(&text))
}
