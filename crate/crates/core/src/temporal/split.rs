/// Splits a query into start and end sub-queries.
///
/// `split_hint` is a byte offset chosen by the client (where the user's first
/// portion ended). Without a hint the split falls on the sentence boundary
/// closest to the middle of the text, measured in characters. Text with a
/// single sentence, or a side that would be empty, uses the full text.
pub fn split_query(full_text: &str, split_hint: Option<usize>) -> (String, String) {
    let full = full_text.trim();
    let at = match split_hint {
        Some(h) => Some(floor_char_boundary(full_text, h)),
        None => midpoint_sentence_break(full_text),
    };
    let Some(at) = at else {
        return (full.to_string(), full.to_string());
    };
    let (a, b) = full_text.split_at(at);
    let pick = |s: &str| if s.trim().is_empty() { full.to_string() } else { s.trim().to_string() };
    (pick(a), pick(b))
}

fn floor_char_boundary(s: &str, i: usize) -> usize {
    let mut i = i.min(s.len());
    while !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}

/// Byte offsets just past each sentence terminator that is followed by whitespace.
fn sentence_breaks(text: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            // absorb runs like "?!" or "..."
            let mut end = i + c.len_utf8();
            while let Some(&(j, d)) = chars.peek() {
                if matches!(d, '.' | '!' | '?') {
                    end = j + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            if let Some(&(_, d)) = chars.peek() {
                if d.is_whitespace() && !text[end..].trim().is_empty() {
                    out.push(end);
                }
            }
        }
    }
    out
}

fn midpoint_sentence_break(text: &str) -> Option<usize> {
    let total = text.chars().count();
    // 2·chars_before vs total keeps the comparison in integers
    sentence_breaks(text)
        .into_iter()
        .min_by_key(|&b| (2 * text[..b].chars().count()).abs_diff(total))
}
