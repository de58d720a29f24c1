//! Word normalization shared by alignment and scoring.

/// Case-folds and strips punctuation so that `"Hello,"` and `"hello"` compare equal.
pub fn normalize_word(word: &str) -> String {
    Normalization::FULL.apply(word)
}

fn is_unicode_punctuation(c: char) -> bool {
    matches!(
        c,
        '«' | '»' | '„' | '“' | '”' | '‘' | '’' | '…' | '—' | '–' | '‹' | '›' | '¿' | '¡'
    )
}

/// Normalization policy applied before word comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct Normalization {
    pub casefold: bool,
    pub strip_punctuation: bool,
}

impl Normalization {
    pub const FULL: Normalization = Normalization {
        casefold: true,
        strip_punctuation: true,
    };
    pub const NONE: Normalization = Normalization {
        casefold: false,
        strip_punctuation: false,
    };

    /// Like [`Normalization::apply`], borrowing when the word is already normal.
    pub fn apply_cow<'a>(&self, word: &'a str) -> std::borrow::Cow<'a, str> {
        if word.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()) {
            return word.into();
        }
        let changes = word.chars().any(|c| {
            if c.is_ascii() {
                return (self.strip_punctuation && c.is_ascii_punctuation())
                    || (self.casefold && c.is_ascii_uppercase());
            }
            (self.strip_punctuation && is_unicode_punctuation(c))
                || (self.casefold && !c.is_lowercase() && c.to_lowercase().ne(std::iter::once(c)))
        });
        if changes {
            self.apply(word).into()
        } else {
            word.into()
        }
    }

    pub fn apply(&self, word: &str) -> String {
        let stripped: String = if self.strip_punctuation {
            word.chars()
                .filter(|c| !c.is_ascii_punctuation() && !is_unicode_punctuation(*c))
                .collect()
        } else {
            word.to_string()
        };
        if self.casefold {
            stripped.chars().flat_map(char::to_lowercase).collect()
        } else {
            stripped
        }
    }
}

/// Splits text on whitespace.
pub fn split_words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_case_and_punctuation() {
        assert_eq!(normalize_word("Hello,"), "hello");
        assert_eq!(normalize_word("«Сети»"), "сети");
        for w in ["Hello,", "сети", "ΣΑΣ", "ok", "«x»", "İ"] {
            assert_eq!(Normalization::FULL.apply_cow(w), Normalization::FULL.apply(w));
            assert_eq!(Normalization::NONE.apply_cow(w), w);
        }
        assert_eq!(Normalization::NONE.apply("Hi!"), "Hi!");
        assert_eq!(Normalization::FULL.apply("Hi!"), "hi");
    }
}
