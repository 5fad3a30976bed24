/// Errors from [`extract_block`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BlockError {
    #[error("no <start_of_{0}> block")]
    MissingBlock(String),
    #[error("<start_of_{0}> has no matching <end_of_{0}>")]
    UnterminatedBlock(String),
}

/// Text strictly between the first `<start_of_TAG>` and the next
/// `<end_of_TAG>`.
pub fn extract_block<'a>(text: &'a str, tag: &str) -> Result<&'a str, BlockError> {
    let start = format!("<start_of_{tag}>");
    let end = format!("<end_of_{tag}>");
    let from = text
        .find(&start)
        .ok_or_else(|| BlockError::MissingBlock(tag.to_string()))?
        + start.len();
    let len = text[from..]
        .find(&end)
        .ok_or_else(|| BlockError::UnterminatedBlock(tag.to_string()))?;
    Ok(&text[from..from + len])
}

/// Wraps `body` in a block, the inverse of [`extract_block`].
pub fn wrap_block(tag: &str, body: &str) -> String {
    format!("<start_of_{tag}>\n{body}\n<end_of_{tag}>")
}

/// Drops a surrounding markdown code fence, if any.
pub(crate) fn strip_fence(text: &str) -> &str {
    let t = text.trim();
    match t.strip_prefix("```") {
        Some(rest) => {
            let body = rest.split_once('\n').map_or("", |(_, b)| b);
            body.trim_end().strip_suffix("```").unwrap_or(body).trim()
        }
        None => t,
    }
}
