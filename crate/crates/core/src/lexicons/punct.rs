const FINAL: [char; 6] = ['.', '!', '?', '。', '！', '？'];

/// Sentence starts from punctuation alone: the first token, and every token
/// whose predecessor ends in sentence-final punctuation.
pub fn punct_split<S: AsRef<str>>(forms: &[S]) -> Vec<bool> {
    (0..forms.len())
        .map(|i| i == 0 || forms[i - 1].as_ref().ends_with(FINAL))
        .collect()
}
