//! Arabic-aware character classification and text normalization.
//!
//! [`normalize_text`] removes tashkeel, tatweel, emoji and markup tags, and
//! decodes a small set of common HTML entities. Everything else passes
//! through untouched and in order.

/// Maximum length, in characters and including both angle brackets, of a span
/// treated as a markup tag.
pub const MAX_TAG_LEN: usize = 128;

pub const TATWEEL: char = '\u{0640}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CharClass {
    ArabicLetter,
    /// Tashkeel: harakat, tanween, shadda, sukun and the superscript alef.
    ArabicDiacritic,
    Tatweel,
    LatinLetter,
    Digit,
    Punctuation,
    Whitespace,
    Emoji,
    Other,
}

#[inline]
pub fn is_tashkeel(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{065F}' | '\u{0670}')
}

#[inline]
pub fn is_emoji(c: char) -> bool {
    matches!(
        c,
        '\u{1F600}'..='\u{1F64F}'
            | '\u{1F300}'..='\u{1F5FF}'
            | '\u{1F680}'..='\u{1F6FF}'
            | '\u{1F900}'..='\u{1F9FF}'
            | '\u{2600}'..='\u{27BF}'
    )
}

#[inline]
pub fn is_arabic_letter(c: char) -> bool {
    matches!(
        c,
        '\u{0620}'..='\u{063F}'
            | '\u{0641}'..='\u{064A}'
            | '\u{066E}'..='\u{066F}'
            | '\u{0671}'..='\u{06D3}'
            | '\u{06D5}'
            | '\u{06E5}'..='\u{06E6}'
            | '\u{06EE}'..='\u{06EF}'
            | '\u{06FA}'..='\u{06FC}'
            | '\u{06FF}'
            | '\u{0750}'..='\u{077F}'
            | '\u{08A0}'..='\u{08C9}'
            | '\u{FB50}'..='\u{FD3D}'
            | '\u{FD40}'..='\u{FDFB}'
            | '\u{FE70}'..='\u{FEFC}'
    )
}

#[inline]
fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || matches!(c, '\u{00C0}'..='\u{024F}' | '\u{1E00}'..='\u{1EFF}') && c != '\u{00D7}' && c != '\u{00F7}'
}

#[inline]
fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{060C}'
                | '\u{060D}'
                | '\u{061B}'
                | '\u{061E}'
                | '\u{061F}'
                | '\u{066A}'..='\u{066D}'
                | '\u{06D4}'
                | '\u{00A1}'
                | '\u{00A7}'
                | '\u{00AB}'
                | '\u{00B6}'
                | '\u{00B7}'
                | '\u{00BB}'
                | '\u{00BF}'
                | '\u{2010}'..='\u{2027}'
                | '\u{2030}'..='\u{205E}'
                | '\u{3001}'..='\u{3003}'
                | '\u{FD3E}'
                | '\u{FD3F}'
        )
}

/// Total classification of Unicode scalar values. Checks run in a fixed
/// priority order so that every scalar lands in exactly one class.
pub fn classify(c: char) -> CharClass {
    if c.is_whitespace() {
        CharClass::Whitespace
    } else if c == TATWEEL {
        CharClass::Tatweel
    } else if is_tashkeel(c) {
        CharClass::ArabicDiacritic
    } else if is_arabic_letter(c) {
        CharClass::ArabicLetter
    } else if c.is_numeric() {
        CharClass::Digit
    } else if is_latin_letter(c) {
        CharClass::LatinLetter
    } else if is_emoji(c) {
        CharClass::Emoji
    } else if is_punctuation(c) {
        CharClass::Punctuation
    } else {
        CharClass::Other
    }
}

#[inline]
fn is_removed(c: char) -> bool {
    c == TATWEEL || is_tashkeel(c) || is_emoji(c)
}

const ENTITIES: [(&str, char); 10] = [
    ("amp", '&'),
    ("lt", '<'),
    ("gt", '>'),
    ("quot", '"'),
    ("apos", '\''),
    ("nbsp", '\u{00A0}'),
    ("copy", '\u{00A9}'),
    ("reg", '\u{00AE}'),
    ("hellip", '\u{2026}'),
    ("mdash", '\u{2014}'),
];

/// Length in bytes of a tag starting at `s[0] == '<'`, if any.
fn tag_len(s: &str) -> Option<usize> {
    let mut chars = s.char_indices();
    chars.next()?;
    let (_, first) = chars.next()?;
    if !(first.is_ascii_alphabetic() || matches!(first, '/' | '!' | '?')) {
        return None;
    }
    for (n, (i, c)) in s.char_indices().enumerate().skip(2) {
        if n >= MAX_TAG_LEN {
            return None;
        }
        match c {
            '>' => return Some(i + 1),
            '<' => return None,
            _ => {}
        }
    }
    None
}

/// Decoded entity and its length in bytes, for `s[0] == '&'`.
fn entity(s: &str) -> Option<(char, usize)> {
    let rest = &s[1..];
    let semi = rest.bytes().take(8).position(|b| b == b';')?;
    let name = &rest[..semi];
    ENTITIES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|&(_, c)| (c, semi + 2))
}

/// One left-to-right pass. Returns true if anything changed.
fn normalize_pass(text: &str, out: &mut String) -> bool {
    out.clear();
    out.reserve(text.len());
    let mut changed = false;
    let mut i = 0;
    let bytes = text.as_bytes();
    while i < text.len() {
        let b = bytes[i];
        if b == b'<' {
            if let Some(len) = tag_len(&text[i..]) {
                i += len;
                changed = true;
                continue;
            }
        } else if b == b'&' {
            if let Some((c, len)) = entity(&text[i..]) {
                out.push(c);
                i += len;
                changed = true;
                continue;
            }
        }
        let c = text[i..].chars().next().expect("in-bounds char boundary");
        if is_removed(c) {
            changed = true;
        } else {
            out.push(c);
        }
        i += c.len_utf8();
    }
    changed
}

/// Strips tashkeel, tatweel, emoji and markup; decodes common entities.
/// Idempotent: passes are repeated until a fixpoint whenever a pass could
/// have exposed new markup.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::new();
    let mut changed = normalize_pass(text, &mut out);
    let mut buf = String::new();
    // Every change strictly shrinks the text, so this terminates.
    while changed && out.contains(['<', '&']) {
        changed = normalize_pass(&out, &mut buf);
        std::mem::swap(&mut out, &mut buf);
    }
    out
}

/// Arabic letters over non-whitespace characters; 0 for blank input.
pub fn arabic_ratio(text: &str) -> f64 {
    let (arabic, total) = arabic_counts(text);
    if total == 0 {
        0.0
    } else {
        arabic as f64 / total as f64
    }
}

/// (Arabic letters, non-whitespace characters).
pub fn arabic_counts(text: &str) -> (usize, usize) {
    let mut arabic = 0;
    let mut total = 0;
    for c in text.chars() {
        if c.is_whitespace() {
            continue;
        }
        total += 1;
        if is_arabic_letter(c) {
            arabic += 1;
        }
    }
    (arabic, total)
}

pub fn contains_latin(text: &str) -> bool {
    text.bytes().any(|b| b.is_ascii_alphabetic())
}

pub fn has_arabic_letter(text: &str) -> bool {
    text.chars().any(is_arabic_letter)
}
