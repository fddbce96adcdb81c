//! Lexer and serializer for the variable-free sequential DRS notation.
//!
//! A line such as `person.n.01 Role +1 engineer.n.01` is split on whitespace
//! and every field is classified into exactly one [`TokenKind`]. Nothing here
//! knows about graph structure; see [`crate::graph`] for that.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Part of speech of a WordNet-style synset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl Pos {
    pub fn from_char(c: char) -> Option<Pos> {
        match c {
            'n' => Some(Pos::Noun),
            'v' => Some(Pos::Verb),
            'a' => Some(Pos::Adjective),
            'r' => Some(Pos::Adverb),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pos::Noun => 'n',
            Pos::Verb => 'v',
            Pos::Adjective => 'a',
            Pos::Adverb => 'r',
        }
    }
}

/// A concept label of the form `lemma.pos.NN`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Synset {
    pub lemma: String,
    pub pos: Pos,
    pub sense: u8,
}

impl Synset {
    /// Parses `lemma.pos.NN`. The sense must be exactly two digits in 01..=99.
    pub fn parse(s: &str) -> Option<Synset> {
        let bytes = s.as_bytes();
        if bytes.len() < 6 {
            return None;
        }
        let n = bytes.len();
        let (d1, d2) = (bytes[n - 2], bytes[n - 1]);
        if !d1.is_ascii_digit() || !d2.is_ascii_digit() || bytes[n - 3] != b'.' || bytes[n - 5] != b'.' {
            return None;
        }
        let pos = Pos::from_char(bytes[n - 4] as char)?;
        let sense = (d1 - b'0') * 10 + (d2 - b'0');
        if sense == 0 {
            return None;
        }
        let lemma = &s[..n - 5];
        if !is_lemma(lemma) {
            return None;
        }
        Some(Synset { lemma: lemma.to_string(), pos, sense })
    }
}

impl fmt::Display for Synset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{:02}", self.lemma, self.pos.as_char(), self.sense)
    }
}

// Lemmas start with a letter or digit and may carry `_`, `-`, `'` and `.`.
fn is_lemma(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphanumeric() => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '\'' | '.'))
}

/// The discourse deictic constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Deictic {
    Speaker,
    Hearer,
    Now,
}

impl Deictic {
    pub fn parse(s: &str) -> Option<Deictic> {
        match s {
            "speaker" => Some(Deictic::Speaker),
            "hearer" => Some(Deictic::Hearer),
            "now" => Some(Deictic::Now),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Concept(Synset),
    Role,
    Operator,
    DiscourseRelation,
    /// Relative hook to another entity; never zero.
    Index(i32),
    /// A quoted name; the payload is the text between the quotes.
    ConstantName(String),
    ConstantDeictic(Deictic),
    ConstantQuantity,
}

impl TokenKind {
    pub fn is_constant(&self) -> bool {
        matches!(
            self,
            TokenKind::ConstantName(_) | TokenKind::ConstantDeictic(_) | TokenKind::ConstantQuantity
        )
    }

    /// Short name of the kind without payload.
    pub fn name(&self) -> &'static str {
        match self {
            TokenKind::Concept(_) => "Concept",
            TokenKind::Role => "Role",
            TokenKind::Operator => "Operator",
            TokenKind::DiscourseRelation => "DiscourseRelation",
            TokenKind::Index(_) => "Index",
            TokenKind::ConstantName(_) => "ConstantName",
            TokenKind::ConstantDeictic(_) => "ConstantDeictic",
            TokenKind::ConstantQuantity => "ConstantQuantity",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub surface: String,
}

impl Token {
    pub fn concept(synset: Synset) -> Token {
        Token { surface: synset.to_string(), kind: TokenKind::Concept(synset) }
    }

    pub fn index(offset: i32) -> Token {
        debug_assert!(offset != 0);
        Token { kind: TokenKind::Index(offset), surface: format!("{offset:+}") }
    }

    pub fn labelled(kind: TokenKind, label: &str) -> Token {
        Token { kind, surface: label.to_string() }
    }

    /// Classifies a constant surface (name, deictic or quantity).
    pub fn constant(surface: &str) -> Option<Token> {
        let kind = if let Some(name) = quoted_name(surface) {
            TokenKind::ConstantName(name.to_string())
        } else if let Some(d) = Deictic::parse(surface) {
            TokenKind::ConstantDeictic(d)
        } else if is_quantity(surface) {
            TokenKind::ConstantQuantity
        } else {
            return None;
        };
        Some(Token { kind, surface: surface.to_string() })
    }
}

/// A lexed line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
    pub raw: String,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("empty line")]
    EmptyLine,
    #[error("invalid token at field {field}: `{surface}`")]
    InvalidToken { field: usize, surface: String },
}

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("symbol `{0}` is not an uppercase name")]
    NotUppercase(String),
    #[error("symbol `{0}` is both an operator and a discourse relation")]
    Overlap(String),
    #[error("line {line}: expected `operators:` or `relations:` before list items")]
    MissingSection { line: usize },
    #[error("reading inventory: {0}")]
    Io(#[from] std::io::Error),
}

/// Closed sets of operator and discourse relation names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolInventory {
    operators: BTreeSet<String>,
    discourse_relations: BTreeSet<String>,
}

const DEFAULT_OPERATORS: &[&str] = &["EQU", "NEQ", "APX", "LES", "LEQ", "TPR", "TAB", "TIN", "SZP", "SZN"];

const DEFAULT_RELATIONS: &[&str] = &[
    "NEGATION",
    "POSSIBILITY",
    "NECESSITY",
    "NARRATION",
    "CONTINUATION",
    "CONTRAST",
    "RESULT",
    "EXPLANATION",
    "BACKGROUND",
    "COMMENTARY",
    "PARALLEL",
    "CONSEQUENCE",
    "CONDITION",
    "ALTERNATION",
    "ATTRIBUTION",
    "SOURCE",
    "ELABORATION",
];

impl Default for SymbolInventory {
    fn default() -> Self {
        SymbolInventory {
            operators: DEFAULT_OPERATORS.iter().map(|s| s.to_string()).collect(),
            discourse_relations: DEFAULT_RELATIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SymbolInventory {
    pub fn new<I, J, S, T>(operators: I, relations: J) -> Result<Self, InventoryError>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        let operators: BTreeSet<String> = operators.into_iter().map(Into::into).collect();
        let discourse_relations: BTreeSet<String> = relations.into_iter().map(Into::into).collect();
        for sym in operators.iter().chain(discourse_relations.iter()) {
            if sym.is_empty() || !sym.chars().all(|c| c.is_ascii_uppercase()) {
                return Err(InventoryError::NotUppercase(sym.clone()));
            }
        }
        if let Some(sym) = operators.intersection(&discourse_relations).next() {
            return Err(InventoryError::Overlap(sym.clone()));
        }
        Ok(SymbolInventory { operators, discourse_relations })
    }

    /// Reads the plain-text config format:
    ///
    /// ```text
    /// # comment
    /// operators: EQU, NEQ, TPR
    /// relations:
    ///   - NEGATION
    ///   - NARRATION
    /// ```
    ///
    /// A section that is not mentioned keeps its default contents.
    pub fn parse_config(text: &str) -> Result<Self, InventoryError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Section {
            Operators,
            Relations,
        }
        let mut operators: Option<Vec<String>> = None;
        let mut relations: Option<Vec<String>> = None;
        let mut current = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let rest = if let Some(rest) = line.strip_prefix("operators:") {
                current = Some(Section::Operators);
                operators.get_or_insert_with(Vec::new);
                rest
            } else if let Some(rest) = line.strip_prefix("relations:") {
                current = Some(Section::Relations);
                relations.get_or_insert_with(Vec::new);
                rest
            } else {
                line.strip_prefix('-').unwrap_or(line)
            };
            let items = rest
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(str::to_string);
            match current {
                Some(Section::Operators) => operators.as_mut().unwrap().extend(items),
                Some(Section::Relations) => relations.as_mut().unwrap().extend(items),
                None => return Err(InventoryError::MissingSection { line: lineno + 1 }),
            }
        }
        let defaults = SymbolInventory::default();
        SymbolInventory::new(
            operators.unwrap_or_else(|| defaults.operators.iter().cloned().collect()),
            relations.unwrap_or_else(|| defaults.discourse_relations.iter().cloned().collect()),
        )
    }

    pub fn load(path: &std::path::Path) -> Result<Self, InventoryError> {
        Self::parse_config(&std::fs::read_to_string(path)?)
    }

    pub fn is_operator(&self, s: &str) -> bool {
        self.operators.contains(s)
    }

    pub fn is_discourse_relation(&self, s: &str) -> bool {
        self.discourse_relations.contains(s)
    }

    pub fn operators(&self) -> impl Iterator<Item = &str> {
        self.operators.iter().map(String::as_str)
    }

    pub fn discourse_relations(&self) -> impl Iterator<Item = &str> {
        self.discourse_relations.iter().map(String::as_str)
    }
}

fn parse_index(s: &str) -> Option<i32> {
    let digits = s.strip_prefix('+').or_else(|| s.strip_prefix('-'))?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let v: i32 = s.parse().ok()?;
    (v != 0).then_some(v)
}

fn quoted_name(s: &str) -> Option<&str> {
    let inner = s.strip_prefix('"')?.strip_suffix('"')?;
    (!inner.is_empty() && !inner.contains('"')).then_some(inner)
}

// Unsigned decimal numerals, plus the bare comparison degrees `+` and `-`.
fn is_quantity(s: &str) -> bool {
    if s == "+" || s == "-" {
        return true;
    }
    let mut parts = s.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}

fn is_role(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase()) && chars.all(|c| c.is_ascii_alphabetic())
}

/// Classifies one whitespace-delimited field, or `None` if it fits no rule.
pub fn classify(field: &str, inventory: &SymbolInventory) -> Option<TokenKind> {
    if let Some(offset) = parse_index(field) {
        return Some(TokenKind::Index(offset));
    }
    if let Some(name) = quoted_name(field) {
        return Some(TokenKind::ConstantName(name.to_string()));
    }
    if let Some(d) = Deictic::parse(field) {
        return Some(TokenKind::ConstantDeictic(d));
    }
    if is_quantity(field) {
        return Some(TokenKind::ConstantQuantity);
    }
    if inventory.is_discourse_relation(field) {
        return Some(TokenKind::DiscourseRelation);
    }
    if inventory.is_operator(field) {
        return Some(TokenKind::Operator);
    }
    if let Some(synset) = Synset::parse(field) {
        return Some(TokenKind::Concept(synset));
    }
    if is_role(field) {
        return Some(TokenKind::Role);
    }
    None
}

pub fn lex(line: &str, inventory: &SymbolInventory) -> Result<TokenSequence, LexError> {
    let mut tokens = Vec::new();
    for (field, surface) in line.split_whitespace().enumerate() {
        let kind = classify(surface, inventory)
            .ok_or_else(|| LexError::InvalidToken { field, surface: surface.to_string() })?;
        tokens.push(Token { kind, surface: surface.to_string() });
    }
    if tokens.is_empty() {
        return Err(LexError::EmptyLine);
    }
    Ok(TokenSequence { tokens, raw: line.to_string() })
}

pub fn serialize(seq: &TokenSequence) -> String {
    let mut out = String::new();
    for (i, tok) in seq.tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&tok.surface);
    }
    out
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}

impl FromStr for TokenSequence {
    type Err = LexError;

    /// Lexes with the default inventory.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        lex(s, &SymbolInventory::default())
    }
}
