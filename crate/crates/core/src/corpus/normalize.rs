//! Text normalization rules.
//!
//! Applied in order:
//! 1. lower-case;
//! 2. drop markdown images `![..](..)` and bracketed caption spans `[..]`;
//! 3. drop URLs: `http://…`, `https://…`, `www.…` up to the next whitespace;
//! 4. replace every character outside `[a-z0-9 .,!?']` with a space;
//! 5. collapse whitespace runs to one space and trim.
//!
//! The result contains no brackets, colons or slashes, so a second pass is a no-op.

use std::sync::OnceLock;

use regex::Regex;

fn patterns() -> &'static [Regex; 3] {
    static P: OnceLock<[Regex; 3]> = OnceLock::new();
    P.get_or_init(|| {
        [
            Regex::new(r"!\[[^\]]*\]\([^)]*\)").expect("image pattern"),
            Regex::new(r"\[[^\]]*\]").expect("caption pattern"),
            Regex::new(r"(https?://|www\.)\S*").expect("url pattern"),
        ]
    })
}

fn is_kept(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, ' ' | '.' | ',' | '!' | '?' | '\'')
}

pub fn normalize(text: &str) -> String {
    let mut s = text.to_lowercase();
    for re in patterns() {
        s = re.replace_all(&s, " ").into_owned();
    }
    let cleaned: String = s.chars().map(|c| if is_kept(c) { c } else { ' ' }).collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits raw text into normalized sentences on newlines and `. ! ?`.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let norm = normalize(line);
        for piece in norm.split(['.', '!', '?']) {
            let piece = piece.trim();
            if !piece.is_empty() {
                out.push(piece.to_string());
            }
        }
    }
    out
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(normalize("I LOVE this!!! :) https://x.com/a?b=1 ok"), "i love this!!! ok");
        assert_eq!(normalize("look [image: a cat] at www.cats.org/p now"), "look at now");
        assert_eq!(normalize("so #blessed & happy"), "so blessed happy");
        assert_eq!(normalize("Don't   stop\tnow"), "don't stop now");
        assert_eq!(normalize("![pic](http://i.imgur.com/x.png) wow"), "wow");
    }

    #[test]
    fn sentences() {
        let s = split_sentences("I got a dog. He is great!\nWhy not? ok");
        assert_eq!(s, ["i got a dog", "he is great", "why not", "ok"]);
    }

    proptest! {
        #[test]
        fn idempotent(s in "\\PC{0,60}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn idempotent_on_markup(s in "[a-zA-Z \\[\\]():/.!?w#*'-]{0,60}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }
    }
}
