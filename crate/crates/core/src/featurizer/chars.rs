//! Orthographic features of a single form.

/// Vowels recognised by default, lowercase.
pub const DEFAULT_VOWELS: &str = "aeiouàáâãäåāăąèéêëēĕėęěìíîïĩīĭįòóôõöøōŏőùúûüũūŭůűųæœ";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CharTypeCounts {
    pub digits: usize,
    pub consonants: usize,
    pub vowels: usize,
    pub other: usize,
}

pub fn char_type_counts(form: &str) -> CharTypeCounts {
    char_type_counts_with(form, DEFAULT_VOWELS)
}

/// Letters outside `vowels` count as consonants; anything that is neither a
/// letter nor a digit is `other`.
pub fn char_type_counts_with(form: &str, vowels: &str) -> CharTypeCounts {
    let mut counts = CharTypeCounts::default();
    for c in form.chars() {
        if c.is_numeric() {
            counts.digits += 1;
        } else if c.is_alphabetic() {
            if c.to_lowercase().any(|l| vowels.contains(l)) {
                counts.vowels += 1;
            } else {
                counts.consonants += 1;
            }
        } else {
            counts.other += 1;
        }
    }
    counts
}

/// First and last character of a form. For Chinese (`zho`) the first and last
/// bytes of the UTF-8 encoding are used instead, rendered as `xHH`.
pub fn first_last_chars(form: &str, language: &str) -> (String, String) {
    if language == "zho" {
        let bytes = form.as_bytes();
        return match (bytes.first(), bytes.last()) {
            (Some(f), Some(l)) => (format!("x{f:02x}"), format!("x{l:02x}")),
            _ => (String::new(), String::new()),
        };
    }
    let first = form.chars().next().map(String::from).unwrap_or_default();
    let last = form.chars().last().map(String::from).unwrap_or_default();
    (first, last)
}

/// Orthographic case class: `lower`, `upper`, `title`, `mixed` or `none` (no letters).
pub fn orth_case(form: &str) -> &'static str {
    let letters: Vec<char> = form.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.is_empty() {
        return "none";
    }
    let upper = letters.iter().filter(|c| c.is_uppercase()).count();
    let lower = letters.iter().filter(|c| c.is_lowercase()).count();
    if upper == 0 && lower == 0 {
        // caseless scripts
        "none"
    } else if upper == 0 {
        "lower"
    } else if lower == 0 {
        "upper"
    } else if letters[0].is_uppercase() && upper == 1 {
        "title"
    } else {
        "mixed"
    }
}
