//! Rule-based English sentence splitting.
//!
//! A boundary is placed after `.`, `!` or `?` (plus any closing quotes or
//! brackets) when it is followed by whitespace and then by something that can
//! start a sentence. A period does not end a sentence when the word before it
//! is a known abbreviation, a single-letter initial, or a dotted acronym.

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "vs", "etc", "inc", "ltd", "co", "corp",
    "vol", "fig", "figs", "gen", "gov", "sen", "rep", "mt", "ft", "approx", "dept", "ca", "cf",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "e.g", "i.e",
    "a.m", "p.m", "u.s", "u.k", "u.n", "lt", "col", "capt", "sgt", "rev", "hon", "pp", "op", "al",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '”' | '’' | '»')
}

fn can_start_sentence(c: char) -> bool {
    c.is_uppercase()
        || c.is_numeric()
        || matches!(c, '"' | '\'' | '(' | '[' | '“' | '‘' | '«')
        || (c.is_alphabetic() && !c.is_lowercase())
}

fn is_abbreviation(word: &str) -> bool {
    let trimmed = word.trim_start_matches(|c: char| !c.is_alphanumeric());
    let bare = trimmed.trim_end_matches('.');
    if bare.is_empty() {
        return false;
    }
    let lower = bare.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    let mut chars = bare.chars();
    // Single-letter initial such as the "J." in "J. Smith".
    if let (Some(c), None) = (chars.next(), chars.next()) {
        return c.is_uppercase();
    }
    // Dotted acronyms: "U.S.A", "Ph.D".
    bare.contains('.') && bare.split('.').all(|p| !p.is_empty() && p.chars().count() <= 2)
}

/// Splits text into trimmed, non-empty sentences. Joining the output with
/// single spaces reproduces the input up to whitespace.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && (is_terminal(chars[j].1) || is_closing(chars[j].1)) {
            j += 1;
        }
        let end_byte = chars.get(j).map_or(text.len(), |&(b, _)| b);
        if j < chars.len() && !chars[j].1.is_whitespace() {
            i = j;
            continue;
        }
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let boundary = if k >= chars.len() {
            true
        } else if !can_start_sentence(chars[k].1) {
            false
        } else if c == '.' {
            let word_start = text[start..chars[i].0]
                .rfind(char::is_whitespace)
                .map_or(start, |p| start + p + 1);
            !is_abbreviation(&text[word_start..chars[i].0 + 1])
        } else {
            true
        };
        if boundary {
            let sentence = text[start..end_byte].trim();
            if !sentence.is_empty() {
                sentences.push(sentence.to_string());
            }
            start = chars.get(k).map_or(text.len(), |&(b, _)| b);
        }
        i = j;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple() {
        assert_eq!(split_sentences("He won. She lost."), ["He won.", "She lost."]);
        assert_eq!(split_sentences("no terminal punctuation here"), ["no terminal punctuation here"]);
        assert!(split_sentences("   ").is_empty());
    }

    #[test]
    fn abbreviations_and_initials() {
        assert_eq!(
            split_sentences("Dr. Smith met J. R. Tolkien in the U.S. Army. Then he left."),
            ["Dr. Smith met J. R. Tolkien in the U.S. Army.", "Then he left."]
        );
        assert_eq!(
            split_sentences("Prices rose, e.g. for bread. Wages did not."),
            ["Prices rose, e.g. for bread.", "Wages did not."]
        );
    }

    #[test]
    fn lowercase_continuation_is_not_a_boundary() {
        assert_eq!(split_sentences("It cost 5 p. per item. Yes!"), ["It cost 5 p. per item.", "Yes!"]);
    }

    #[test]
    fn closing_quotes_stay_with_sentence() {
        assert_eq!(
            split_sentences("He said \"stop.\" Then \"go!\" Really?"),
            ["He said \"stop.\"", "Then \"go!\"", "Really?"]
        );
    }

    #[test]
    fn decimals_and_ellipses() {
        assert_eq!(split_sentences("It is 3.5 km long... Wow."), ["It is 3.5 km long...", "Wow."]);
    }
}
