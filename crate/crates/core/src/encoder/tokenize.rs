/// Splits normalized text into word tokens.
///
/// Whitespace separates tokens. Inside a whitespace-delimited chunk, maximal
/// runs of alphanumeric characters form one token and every other character
/// is a token on its own, so `"don't"` becomes `don`, `'`, `t`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            out.push(c.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(tokenize("i love hiking!"), ["i", "love", "hiking", "!"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("don't stop"), ["don", "'", "t", "stop"]);
        assert_eq!(tokenize("  a,b  c "), ["a", ",", "b", "c"]);
    }
}
