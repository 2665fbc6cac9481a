//! Character/byte offset conversions. Offsets exposed by this crate are
//! character (Unicode scalar value) offsets unless a name says otherwise.

/// Number of characters in `s`; this is the unit translation is billed in.
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Byte index of the `char_idx`-th character. `char_idx == char_len(s)`
/// maps to `s.len()`.
pub fn char_to_byte(s: &str, char_idx: usize) -> Option<usize> {
    if char_idx == 0 {
        return Some(0);
    }
    let mut seen = 0;
    for (byte, _) in s.char_indices() {
        if seen == char_idx {
            return Some(byte);
        }
        seen += 1;
    }
    (seen == char_idx).then_some(s.len())
}

/// Character offset of a byte index that lies on a char boundary.
pub fn byte_to_char(s: &str, byte_idx: usize) -> usize {
    s[..byte_idx].chars().count()
}

/// Byte offsets of every (possibly overlapping) occurrence of `needle`.
pub fn find_all(haystack: &str, needle: &str) -> Vec<usize> {
    if needle.is_empty() {
        return Vec::new();
    }
    let mut found = Vec::new();
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        let at = from + pos;
        found.push(at);
        // advance one character so overlapping matches are seen
        from = at + haystack[at..].chars().next().map_or(1, char::len_utf8);
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_count_characters_not_bytes() {
        let s = "não é";
        assert_eq!(char_len(s), 5);
        assert_eq!(char_to_byte(s, 2), Some(3));
        assert_eq!(char_to_byte(s, 5), Some(s.len()));
        assert_eq!(char_to_byte(s, 6), None);
        assert_eq!(byte_to_char(s, 3), 2);
    }

    #[test]
    fn overlapping_matches() {
        assert_eq!(find_all("aaa", "aa"), vec![0, 1]);
        assert_eq!(find_all("abc", ""), Vec::<usize>::new());
    }
}
