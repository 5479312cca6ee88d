use crate::error::{Error, Result};

/// Turns a raw concept identifier into encoder input text.
///
/// Underscores become spaces, surrounding whitespace is trimmed, and a
/// matched outer `<...>` pair is stripped. Stripping repeats until no outer
/// pair remains so the function is idempotent.
pub fn preprocess_concept_name(raw: &str) -> Result<String> {
    let replaced = raw.replace('_', " ");
    let mut s = replaced.trim();
    while s.len() >= 2 && s.starts_with('<') && s.ends_with('>') {
        s = s[1..s.len() - 1].trim();
    }
    if s.is_empty() {
        return Err(Error::EmptyConceptText);
    }
    Ok(s.to_string())
}
