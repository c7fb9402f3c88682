//! Java tokenizer, line-structure patterns and the corpus statistics used to
//! spot OCR errors.
//!
//! A line structure replaces identifiers and literals by their kind and keeps
//! keywords and punctuation verbatim, so `Properties propIn = new Properties();`
//! becomes `IDU IDL = new IDU ( ) ;`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Java SE 8 reserved words, including the literals `true`, `false`, `null`.
pub const JAVA_KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "false", "final", "finally",
    "float", "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "null", "package", "private", "protected", "public", "return", "short",
    "static", "strictfp", "super", "switch", "synchronized", "this", "throw", "throws",
    "transient", "true", "try", "void", "volatile", "while",
];

/// Operators and separators, longest first so the lexer can take the first
/// prefix match.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=",
    ">=", "+=", "-=", "*=", "/=", "&=", "|=", "^=", "%=", "<<", ">>",
];

pub fn is_keyword(word: &str) -> bool {
    JAVA_KEYWORDS.binary_search(&word).is_ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenKind {
    #[serde(rename = "KEYWORD")]
    Keyword,
    /// Identifier starting with an uppercase letter.
    #[serde(rename = "IDU")]
    IdentUpper,
    /// Identifier starting with a lowercase letter, `_` or `$`.
    #[serde(rename = "IDL")]
    IdentLower,
    #[serde(rename = "NUM")]
    Number,
    #[serde(rename = "STR")]
    Str,
    #[serde(rename = "CHAR")]
    Char,
    #[serde(rename = "PUNCT")]
    Punct,
}

impl TokenKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenKind::Keyword => "KEYWORD",
            TokenKind::IdentUpper => "IDU",
            TokenKind::IdentLower => "IDL",
            TokenKind::Number => "NUM",
            TokenKind::Str => "STR",
            TokenKind::Char => "CHAR",
            TokenKind::Punct => "PUNCT",
        }
    }

    pub fn is_identifier(self) -> bool {
        matches!(self, TokenKind::IdentUpper | TokenKind::IdentLower)
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
}

impl Token {
    fn new(text: &str, kind: TokenKind) -> Self {
        Self {
            text: text.to_string(),
            kind,
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

pub fn ident_kind(word: &str) -> TokenKind {
    if is_keyword(word) {
        TokenKind::Keyword
    } else if word.chars().next().is_some_and(char::is_uppercase) {
        TokenKind::IdentUpper
    } else {
        TokenKind::IdentLower
    }
}

/// Byte length of the numeric literal at the start of `s`.
fn number_len(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    if b.len() > 1 && b[0] == b'0' && matches!(b[1], b'x' | b'X' | b'b' | b'B') {
        i = 2;
        while i < b.len() && (b[i].is_ascii_hexdigit() || b[i] == b'_') {
            i += 1;
        }
        // hex floating point (0x1.8p3) is rare enough to lex as separate tokens
    } else {
        while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'_') {
            i += 1;
        }
        // `1.5` and `1.` are numbers, `1.foo` is not
        let fraction = i < b.len()
            && b[i] == b'.'
            && b
                .get(i + 1)
                .is_none_or(|&c| c.is_ascii_digit() || !(c.is_ascii_alphabetic() || c == b'.' || c == b'_'));
        if fraction {
            i += 1;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'_') {
                i += 1;
            }
        }
        if i < b.len() && matches!(b[i], b'e' | b'E') {
            let mut j = i + 1;
            if j < b.len() && matches!(b[j], b'+' | b'-') {
                j += 1;
            }
            if j < b.len() && b[j].is_ascii_digit() {
                i = j;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'_') {
                    i += 1;
                }
            }
        }
    }
    if i < b.len() && matches!(b[i], b'l' | b'L' | b'f' | b'F' | b'd' | b'D') {
        i += 1;
    }
    i
}

/// Byte length of a quoted literal starting at `s[0]`; runs to the end of the
/// line if unterminated. The flag is true when the closing quote was found.
fn quoted_len(s: &str, quote: char) -> (usize, bool) {
    let mut escaped = false;
    for (i, c) in s.char_indices().skip(1) {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == quote {
            return (i + c.len_utf8(), true);
        }
    }
    (s.len(), false)
}

/// Lexes one line of Java. Never fails: unknown characters become
/// single-character punctuation and unterminated literals run to the end of
/// the line as `STR`.
pub fn tokenize_line(line: &str) -> Vec<Token> {
    lex_spans(line).into_iter().map(|(_, t)| t).collect()
}

/// Like [`tokenize_line`], with the byte offset of each token in `line`.
pub fn lex_spans(line: &str) -> Vec<(usize, Token)> {
    let mut tokens = Vec::new();
    let mut rest = line;
    while let Some(c) = rest.chars().next() {
        let offset = line.len() - rest.len();
        if c.is_whitespace() {
            rest = &rest[c.len_utf8()..];
            continue;
        }
        let (len, kind) = if is_ident_start(c) {
            let len = rest
                .char_indices()
                .find(|&(_, ch)| !is_ident_part(ch))
                .map_or(rest.len(), |(i, _)| i);
            (len, ident_kind(&rest[..len]))
        } else if c.is_ascii_digit()
            || (c == '.' && rest[1..].starts_with(|d: char| d.is_ascii_digit()))
        {
            let len = if c == '.' { 1 + number_len(&rest[1..]) } else { number_len(rest) };
            (len, TokenKind::Number)
        } else if c == '"' {
            (quoted_len(rest, '"').0, TokenKind::Str)
        } else if c == '\'' {
            match quoted_len(rest, '\'') {
                (len, true) => (len, TokenKind::Char),
                (len, false) => (len, TokenKind::Str),
            }
        } else if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            (op.len(), TokenKind::Punct)
        } else {
            (c.len_utf8(), TokenKind::Punct)
        };
        tokens.push((offset, Token::new(&rest[..len], kind)));
        rest = &rest[len..];
    }
    tokens
}

/// Token-kind pattern of a line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineStructure(pub Vec<String>);

impl LineStructure {
    pub fn atoms(&self) -> &[String] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn key(&self) -> String {
        self.0.join(" ")
    }
}

impl fmt::Display for LineStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

pub fn line_structure(tokens: &[Token]) -> LineStructure {
    LineStructure(
        tokens
            .iter()
            .map(|t| match t.kind {
                TokenKind::Keyword | TokenKind::Punct => t.text.clone(),
                other => other.as_str().to_string(),
            })
            .collect(),
    )
}

/// Replaces `//` and `/* */` comments by spaces (newlines inside block
/// comments are kept so line numbering is unchanged). String and char
/// literals are respected.
pub fn strip_comments(source: &str) -> String {
    #[derive(PartialEq)]
    enum State {
        Code,
        Line,
        Block,
        Str(char),
    }
    let mut out = String::with_capacity(source.len());
    let mut state = State::Code;
    let mut chars = source.chars().peekable();
    while let Some(c) = chars.next() {
        match state {
            State::Code => match (c, chars.peek()) {
                ('/', Some('/')) => {
                    chars.next();
                    state = State::Line;
                    out.push_str("  ");
                }
                ('/', Some('*')) => {
                    chars.next();
                    state = State::Block;
                    out.push_str("  ");
                }
                ('"', _) | ('\'', _) => {
                    state = State::Str(c);
                    out.push(c);
                }
                _ => out.push(c),
            },
            State::Line => {
                if c == '\n' {
                    state = State::Code;
                    out.push('\n');
                } else {
                    out.push(' ');
                }
            }
            State::Block => {
                if c == '*' && chars.peek() == Some(&'/') {
                    chars.next();
                    state = State::Code;
                    out.push_str("  ");
                } else {
                    out.push(if c == '\n' { '\n' } else { ' ' });
                }
            }
            State::Str(q) => {
                out.push(c);
                if c == '\\' {
                    if let Some(next) = chars.next() {
                        out.push(next);
                    }
                } else if c == q || c == '\n' {
                    state = State::Code;
                }
            }
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no source files under {0}")]
    EmptyCorpus(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed model file {path}: {source}")]
    Format {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// Unigram token counts and line-structure counts of a code corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeLanguageModel {
    pub unigram: BTreeMap<String, u64>,
    pub structures: BTreeMap<String, u64>,
    pub vocab_size: usize,
    pub corpus_files: usize,
}

impl CodeLanguageModel {
    pub fn is_empty(&self) -> bool {
        self.unigram.is_empty()
    }

    pub fn word_count(&self, word: &str) -> u64 {
        self.unigram.get(word).copied().unwrap_or(0)
    }

    pub fn structure_count(&self, structure: &LineStructure) -> u64 {
        self.structures.get(&structure.key()).copied().unwrap_or(0)
    }

    /// Counts every token and every nonempty line of `source`, which is taken
    /// as code (comments must already be gone).
    pub fn add_source(&mut self, source: &str) {
        for line in source.lines() {
            let tokens = tokenize_line(line);
            if tokens.is_empty() {
                continue;
            }
            for t in &tokens {
                *self.unigram.entry(t.text.clone()).or_default() += 1;
            }
            *self.structures.entry(line_structure(&tokens).key()).or_default() += 1;
        }
        self.vocab_size = self.unigram.len();
    }

    pub fn merge(mut self, other: CodeLanguageModel) -> CodeLanguageModel {
        for (k, v) in other.unigram {
            *self.unigram.entry(k).or_default() += v;
        }
        for (k, v) in other.structures {
            *self.structures.entry(k).or_default() += v;
        }
        self.corpus_files += other.corpus_files;
        self.vocab_size = self.unigram.len();
        self
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let body = serde_json::to_vec(self).map_err(|e| ModelError::Format {
            path: path.to_path_buf(),
            source: e,
        })?;
        std::fs::write(path, body).map_err(|e| ModelError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let body = std::fs::read(path).map_err(|e| ModelError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_slice(&body).map_err(|e| ModelError::Format {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

/// Java files under `root`, sorted by path.
pub fn corpus_files(root: &Path) -> Result<Vec<PathBuf>, ModelError> {
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| ModelError::Io {
            path: root.to_path_buf(),
            source: e.into(),
        })?;
        if entry.file_type().is_file()
            && entry.path().extension().is_some_and(|e| e == "java")
        {
            files.push(entry.into_path());
        }
    }
    Ok(files)
}

/// Builds the model from every `.java` file under `corpus_root`. Comments are
/// stripped before counting.
pub fn build_model(corpus_root: &Path) -> Result<CodeLanguageModel, ModelError> {
    let files = corpus_files(corpus_root)?;
    if files.is_empty() {
        return Err(ModelError::EmptyCorpus(corpus_root.to_path_buf()));
    }
    files
        .par_iter()
        .map(|path| {
            let bytes = std::fs::read(path).map_err(|e| ModelError::Io {
                path: path.clone(),
                source: e,
            })?;
            let mut model = CodeLanguageModel {
                corpus_files: 1,
                ..Default::default()
            };
            model.add_source(&strip_comments(&String::from_utf8_lossy(&bytes)));
            Ok(model)
        })
        .try_reduce(CodeLanguageModel::default, |a, b| Ok(a.merge(b)))
}
