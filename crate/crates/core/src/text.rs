//! Tokenisation, stopword identification and lexicon-based POS tagging.
//!
//! Tagging is context-free: a static word -> tag lexicon records the most
//! frequent tag per word, which is all the synonym filter needs. Unknown
//! words fall back to [`Pos::Other`].

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

/// Coarse part-of-speech tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
}

impl Pos {
    pub fn parse(tag: &str) -> Option<Pos> {
        match tag {
            "NOUN" => Some(Pos::Noun),
            "VERB" => Some(Pos::Verb),
            "ADJ" => Some(Pos::Adj),
            "ADV" => Some(Pos::Adv),
            "OTHER" => Some(Pos::Other),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Verb => "VERB",
            Pos::Adj => "ADJ",
            Pos::Adv => "ADV",
            Pos::Other => "OTHER",
        }
    }
}

/// One word (or punctuation mark) of a tokenised input.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Token {
    /// Lowercase surface form; never empty, never contains whitespace.
    pub surface: String,
    pub pos: Pos,
    pub is_stopword: bool,
    /// 0-based position in the sequence.
    pub index: usize,
}

/// An ordered token sequence plus the raw string it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TokenizedText {
    pub tokens: Vec<Token>,
    pub raw: String,
}

impl TokenizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.tokens[index].surface
    }

    /// Joins token surfaces with single spaces.
    pub fn detokenize(&self) -> String {
        let mut out = String::new();
        for (i, tok) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&tok.surface);
        }
        out
    }

    /// Copy of `self` with `surface` swapped in at `index`. The POS tag is
    /// kept (substitutions are POS-matched by construction); the stopword
    /// flag is re-derived from the lexicon for the new surface.
    pub fn with_word(&self, index: usize, surface: &str, lexicon: &Lexicon) -> TokenizedText {
        let mut tokens = self.tokens.clone();
        tokens[index].surface = surface.to_owned();
        tokens[index].is_stopword = lexicon.is_stopword(surface);
        let mut out = TokenizedText {
            tokens,
            raw: String::new(),
        };
        out.raw = out.detokenize();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("malformed lexicon row at line {line}: expected `word<TAB>TAG`")]
    MalformedRow { line: usize },
    #[error("unknown POS tag `{tag}` at line {line}")]
    UnknownTag { tag: String, line: usize },
}

/// Immutable POS lexicon + stopword list. Loaded once, shared read-only.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pos: BTreeMap<String, Pos>,
    stopwords: BTreeSet<String>,
}

impl Lexicon {
    pub fn new(pos: BTreeMap<String, Pos>, stopwords: BTreeSet<String>) -> Lexicon {
        Lexicon { pos, stopwords }
    }

    /// Parses `word<TAB>TAG` lines. Blank lines and `#` comments are skipped.
    pub fn parse_pos_lexicon(data: &str) -> Result<BTreeMap<String, Pos>, LexiconError> {
        let mut map = BTreeMap::new();
        for (i, raw_line) in data.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, tag) = line
                .split_once('\t')
                .ok_or(LexiconError::MalformedRow { line: i + 1 })?;
            let pos = Pos::parse(tag.trim()).ok_or_else(|| LexiconError::UnknownTag {
                tag: tag.trim().to_owned(),
                line: i + 1,
            })?;
            map.insert(word.trim().to_lowercase(), pos);
        }
        Ok(map)
    }

    /// Parses one stopword per line.
    pub fn parse_stopwords(data: &str) -> BTreeSet<String> {
        data.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect()
    }

    /// Tag recorded in the lexicon, [`Pos::Other`] for unknown words.
    pub fn pos_tag(&self, word: &str) -> Pos {
        self.pos.get(word).copied().unwrap_or(Pos::Other)
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    /// Whitespace-and-punctuation split, lowercased. Punctuation marks become
    /// their own tokens with `pos=Other`, `is_stopword=true`.
    pub fn tokenize(&self, raw: &str) -> TokenizedText {
        let mut tokens = Vec::new();
        for piece in split_words(raw) {
            let surface = piece.to_lowercase();
            let index = tokens.len();
            if surface.chars().all(|c| !c.is_alphanumeric()) {
                tokens.push(Token {
                    surface,
                    pos: Pos::Other,
                    is_stopword: true,
                    index,
                });
            } else {
                let pos = self.pos_tag(&surface);
                let is_stopword = self.is_stopword(&surface);
                tokens.push(Token {
                    surface,
                    pos,
                    is_stopword,
                    index,
                });
            }
        }
        TokenizedText {
            tokens,
            raw: raw.to_owned(),
        }
    }
}

/// Splits into maximal word runs (alphanumeric + in-word apostrophes) and
/// single punctuation characters; whitespace separates and is dropped.
pub fn split_words(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for ch in raw.chars() {
        if ch.is_alphanumeric() || ch == '\'' {
            current.push(ch);
        } else {
            if !current.is_empty() {
                out.push(core::mem::take(&mut current));
            }
            if !ch.is_whitespace() {
                let mut s = String::new();
                s.push(ch);
                out.push(s);
            }
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    // a bare apostrophe run is punctuation, not a word
    out
}
