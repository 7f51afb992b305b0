//! The lexical tokenizer shared by the BM25 index and burstiness analysis:
//! lowercase, then split on maximal runs of non-alphanumeric characters.

/// Calls `f` for every term of `text`, in order.
pub fn for_each_term(text: &str, mut f: impl FnMut(&str)) {
    let lower = text.to_lowercase();
    lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).for_each(&mut f);
}

pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for_each_term(text, |t| out.push(t.to_string()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_and_lowercases() {
        assert_eq!(tokenize("Hello, World!! foo_bar 42x"), ["hello", "world", "foo", "bar", "42x"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize(" -- ,, ").is_empty());
    }

    #[test]
    fn unicode_letters_are_terms() {
        assert_eq!(tokenize("Grüße—ÉTÉ"), ["grüße", "été"]);
    }
}
