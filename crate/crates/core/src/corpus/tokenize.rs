use super::Token;
use crate::{Error, Result};

const POSSESSIVES: [&str; 2] = ["'s", "\u{2019}s"];

pub fn case_fold(s: &str) -> String {
    s.to_lowercase()
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

fn is_possessive(s: &str) -> bool {
    POSSESSIVES.contains(&s)
}

fn possessive_suffix(s: &str) -> Option<&'static str> {
    POSSESSIVES
        .iter()
        .copied()
        .find(|p| s.len() > p.len() && s.ends_with(p))
}

/// Splits one whitespace-delimited chunk into word surfaces.
fn split_chunk(chunk: &str) -> Vec<&str> {
    let mut core = chunk.trim_end_matches(is_punct);
    let mut tail = Vec::new();
    while !is_possessive(core) {
        match possessive_suffix(core) {
            Some(p) => {
                tail.push(&core[core.len() - p.len()..]);
                core = core[..core.len() - p.len()].trim_end_matches(is_punct);
            }
            None => break,
        }
    }
    if !is_possessive(core) {
        core = core.trim_start_matches(is_punct);
    }
    let mut out = Vec::with_capacity(tail.len() + 1);
    if !core.is_empty() {
        out.push(core);
    }
    out.extend(tail.into_iter().rev());
    out
}

/// Whitespace tokenizer with punctuation trimming and possessive splitting.
///
/// Leading and trailing punctuation is dropped, a trailing `'s` becomes its
/// own token (`"Obama's"` gives `"Obama"`, `"'s"`), internal punctuation is
/// kept (`"L'Enfant"`). With `case_fold` the surfaces themselves are
/// lower-cased; `normalized` is always the case-folded surface.
pub fn tokenize(text: &str, case_fold: bool) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        for word in split_chunk(chunk) {
            let surface = if case_fold {
                self::case_fold(word)
            } else {
                word.to_string()
            };
            tokens.push(Token {
                normalized: self::case_fold(&surface),
                surface,
                index: tokens.len(),
            });
        }
    }
    if tokens.is_empty() {
        return Err(Error::NoTokens);
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text, false)
            .unwrap()
            .into_iter()
            .map(|t| t.surface)
            .collect()
    }

    #[test]
    fn running_example_has_eleven_tokens() {
        let toks = surfaces("What are the schools where Barak Obama's wife has studied");
        assert_eq!(
            toks,
            [
                "What", "are", "the", "schools", "where", "Barak", "Obama", "'s", "wife", "has",
                "studied"
            ]
        );
    }

    #[test]
    fn single_word() {
        let toks = tokenize("Hi", false).unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].surface, "Hi");
        assert_eq!(toks[0].normalized, "hi");
        assert_eq!(toks[0].index, 0);
    }

    #[test]
    fn collapses_whitespace() {
        assert_eq!(surfaces("a  b"), ["a", "b"]);
        assert_eq!(surfaces("\ta \n b "), ["a", "b"]);
    }

    #[test]
    fn trims_punctuation() {
        assert_eq!(surfaces("Who is \"Obama's\" wife?"), ["Who", "is", "Obama", "'s", "wife"]);
        assert_eq!(surfaces("L'Enfant a la tasse."), ["L'Enfant", "a", "la", "tasse"]);
        assert_eq!(surfaces("x's's"), ["x", "'s", "'s"]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(tokenize("", false), Err(Error::NoTokens)));
        assert!(matches!(tokenize("  ?! ", false), Err(Error::NoTokens)));
    }

    #[test]
    fn case_fold_mode_lowers_surfaces() {
        let toks = tokenize("Barak OBAMA", true).unwrap();
        assert_eq!(toks[0].surface, "barak");
        assert_eq!(toks[1].normalized, "obama");
    }

    proptest! {
        #[test]
        fn idempotent_on_joined_output(text in "[a-zA-Z'?.,\" ]{1,40}") {
            if let Ok(first) = tokenize(&text, false) {
                let joined = first.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ");
                let second = tokenize(&joined, false).unwrap();
                prop_assert_eq!(first, second);
            }
        }

        #[test]
        fn positions_are_contiguous(text in "[a-zA-Z' ]{1,40}") {
            if let Ok(toks) = tokenize(&text, false) {
                for (i, t) in toks.iter().enumerate() {
                    prop_assert_eq!(t.index, i);
                    prop_assert!(!t.surface.is_empty());
                    prop_assert_eq!(&t.normalized, &t.surface.to_lowercase());
                }
            }
        }
    }
}
