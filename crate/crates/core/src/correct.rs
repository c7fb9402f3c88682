//! OCR error correction.
//!
//! Snapshots are first normalised (line-number gutter removal, ASCII
//! folding), then every identifier and line is checked against the code
//! language model and the video's own vocabulary. Suspect words and lines are
//! replaced by the closest trusted rendition found in other frames of the same
//! video, falling back to corpus words.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::codelm::{lex_spans, line_structure, tokenize_line, CodeLanguageModel, TokenKind};
use crate::ocr::CodeSnapshot;
use crate::text::levenshtein;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectionConfig {
    /// Words with a corpus count below this are suspect.
    pub k_word: u64,
    /// Lines whose structure count is below this are suspect.
    pub k_line: u64,
    /// Maximum normalised edit distance of an accepted replacement.
    pub accept_ratio: f64,
    /// Tokens seen in at least this many frames are trusted.
    pub vocab_min_frames: usize,
    /// Share of nonempty lines that must start with a number before the
    /// gutter is stripped.
    pub line_number_gate: f64,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            k_word: 2,
            k_line: 2,
            accept_ratio: 0.25,
            vocab_min_frames: 3,
            line_number_gate: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    LineNumberStrip,
    AsciiFold,
    CrossFrameWord,
    CrossFrameLine,
    CorpusWord,
}

impl Mechanism {
    pub fn is_word_level(self) -> bool {
        matches!(self, Mechanism::CrossFrameWord | Mechanism::CorpusWord)
    }
}

/// One change. Word-level entries hold the words, the others whole lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionEntry {
    /// 1-based line number in the snapshot.
    pub line_no: usize,
    pub original: String,
    pub corrected: String,
    pub mechanism: Mechanism,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameCorrections {
    pub t: u32,
    pub entries: Vec<CorrectionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub config: CorrectionConfig,
    pub frames: Vec<FrameCorrections>,
    pub words_checked: usize,
    pub words_flagged: usize,
    pub words_corrected: usize,
}

impl CorrectionReport {
    pub fn entries(&self) -> impl Iterator<Item = (u32, &CorrectionEntry)> {
        self.frames.iter().flat_map(|f| f.entries.iter().map(move |e| (f.t, e)))
    }
}

/// Leading run of whitespace-separated pure-digit words, if any.
fn leading_number(line: &str) -> Option<u128> {
    let word = line.split_whitespace().next()?;
    if word.bytes().all(|b| b.is_ascii_digit()) {
        // absurdly long digit runs saturate rather than fail the gate
        Some(word.parse().unwrap_or(u128::MAX))
    } else {
        None
    }
}

fn strip_leading_numbers(line: &str) -> &str {
    let mut rest = line.trim_start();
    while let Some(word) = rest.split_whitespace().next() {
        if !word.bytes().all(|b| b.is_ascii_digit()) {
            break;
        }
        rest = &rest[word.len()..];
        let trimmed = rest.trim_start();
        if trimmed.is_empty() || leading_number(trimmed).is_none() {
            return rest;
        }
        rest = trimmed;
    }
    rest
}

/// Removes an editor line-number gutter. Applies only when enough nonempty
/// lines start with a number and the numbers never decrease.
pub fn strip_line_numbers(snapshot: &CodeSnapshot, gate: f64) -> CodeSnapshot {
    let nonempty: Vec<&String> = snapshot.lines.iter().filter(|l| !l.trim().is_empty()).collect();
    let numbers: Vec<u128> = nonempty.iter().filter_map(|l| leading_number(l)).collect();
    let passes = !nonempty.is_empty()
        && numbers.len() as f64 >= gate * nonempty.len() as f64
        && numbers.windows(2).all(|w| w[0] <= w[1]);
    if !passes {
        return snapshot.clone();
    }
    let rests: Vec<Option<&str>> = snapshot
        .lines
        .iter()
        .map(|l| leading_number(l).map(|_| strip_leading_numbers(l)))
        .collect();
    // the separator after the number is not indentation; keep only the
    // indentation relative to the least indented numbered line
    let base = rests
        .iter()
        .flatten()
        .filter(|r| !r.trim().is_empty())
        .map(|r| r.len() - r.trim_start().len())
        .min()
        .unwrap_or(0);
    let lines = snapshot
        .lines
        .iter()
        .zip(&rests)
        .map(|(line, rest)| match rest {
            None => line.clone(),
            Some(r) if r.trim().is_empty() => String::new(),
            Some(r) => {
                let indent = r.len() - r.trim_start().len() - base;
                format!("{}{}", " ".repeat(indent), r.trim_start())
            }
        })
        .collect();
    CodeSnapshot {
        t: snapshot.t,
        lines,
        words: snapshot.words.clone(),
    }
}

fn lookalike(c: char) -> Option<&'static str> {
    Some(match c {
        '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{2032}' | '\u{00B4}' => "'",
        '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '\u{2033}' | '\u{00AB}' | '\u{00BB}' => "\"",
        '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2015}' | '\u{2212}' => "-",
        '\u{00A0}' | '\u{2002}' | '\u{2003}' | '\u{2007}' | '\u{2009}' | '\u{200A}' | '\u{202F}'
        | '\u{3000}' => " ",
        '\u{2026}' => "...",
        '\u{00D7}' => "x",
        '\u{0131}' => "i",
        '\u{0142}' => "l",
        '\u{00F8}' => "o",
        '\u{00D8}' => "O",
        '\u{2039}' => "<",
        '\u{203A}' => ">",
        _ => return None,
    })
}

/// Full-width ASCII forms (U+FF01..U+FF5E) map to their ASCII counterparts.
fn fullwidth(c: char) -> Option<char> {
    let u = c as u32;
    (0xFF01..=0xFF5E).contains(&u).then(|| char::from_u32(u - 0xFF01 + 0x21)).flatten()
}

fn fold_char(c: char, out: &mut String) {
    if let Some(s) = lookalike(c) {
        out.push_str(s);
    } else if let Some(a) = fullwidth(c) {
        out.push(a);
    } else if c.is_ascii() {
        out.push(c);
    } else {
        let decomposed: Vec<char> = c.nfd().collect();
        if decomposed.iter().any(|&d| is_combining_mark(d)) {
            for d in decomposed.into_iter().filter(|&d| !is_combining_mark(d)) {
                match lookalike(d) {
                    Some(s) => out.push_str(s),
                    None => out.push(d),
                }
            }
        } else {
            out.push(c);
        }
    }
}

pub fn fold_ascii_line(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    for c in line.chars() {
        fold_char(c, &mut out);
    }
    out
}

/// Replaces accented letters by their base letter and typographic lookalikes
/// by the ASCII character a programmer would have typed.
pub fn fold_ascii(snapshot: &CodeSnapshot) -> CodeSnapshot {
    CodeSnapshot {
        t: snapshot.t,
        lines: snapshot.lines.iter().map(|l| fold_ascii_line(l)).collect(),
        words: snapshot.words.clone(),
    }
}

fn line_diff_entries(before: &[String], after: &[String], mechanism: Mechanism) -> Vec<CorrectionEntry> {
    before
        .iter()
        .zip(after)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, (a, b))| CorrectionEntry {
            line_no: i + 1,
            original: a.clone(),
            corrected: b.clone(),
            mechanism,
        })
        .collect()
}

/// ASCII folding followed by gutter stripping, with one entry per changed
/// line and step.
pub fn normalize(snapshot: &CodeSnapshot, cfg: &CorrectionConfig) -> (CodeSnapshot, Vec<CorrectionEntry>) {
    let folded = fold_ascii(snapshot);
    let mut entries = line_diff_entries(&snapshot.lines, &folded.lines, Mechanism::AsciiFold);
    let stripped = strip_line_numbers(&folded, cfg.line_number_gate);
    entries.extend(line_diff_entries(&folded.lines, &stripped.lines, Mechanism::LineNumberStrip));
    (stripped, entries)
}

/// Identifier tokens seen in at least `min_frames` distinct frames.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VideoVocabulary {
    words: HashSet<String>,
}

impl VideoVocabulary {
    pub fn from_snapshots(snapshots: &[CodeSnapshot], min_frames: usize) -> Self {
        let mut frames_per_word: HashMap<String, usize> = HashMap::new();
        for snap in snapshots {
            let distinct: HashSet<String> = snap
                .lines
                .iter()
                .flat_map(|l| tokenize_line(l))
                .filter(|t| t.kind.is_identifier())
                .map(|t| t.text)
                .collect();
            for w in distinct {
                *frames_per_word.entry(w).or_default() += 1;
            }
        }
        Self {
            words: frames_per_word
                .into_iter()
                .filter(|&(_, n)| n >= min_frames)
                .map(|(w, _)| w)
                .collect(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LineFlags {
    pub suspect_line: bool,
    /// Token indices (as produced by `tokenize_line`) of suspect words.
    pub suspect_words: Vec<usize>,
}

impl LineFlags {
    pub fn is_clean(&self) -> bool {
        !self.suspect_line && self.suspect_words.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFlags {
    pub t: u32,
    pub lines: Vec<LineFlags>,
    pub words_checked: usize,
}

pub fn is_suspect_word(
    word: &str,
    kind: TokenKind,
    model: &CodeLanguageModel,
    vocab: &VideoVocabulary,
    cfg: &CorrectionConfig,
) -> bool {
    kind.is_identifier() && model.word_count(word) < cfg.k_word && !vocab.contains(word)
}

fn is_suspect_line(line: &str, model: &CodeLanguageModel, cfg: &CorrectionConfig) -> bool {
    let tokens = tokenize_line(line);
    !tokens.is_empty() && model.structure_count(&line_structure(&tokens)) < cfg.k_line
}

pub fn flag_suspects(
    snapshot: &CodeSnapshot,
    model: &CodeLanguageModel,
    vocab: &VideoVocabulary,
    cfg: &CorrectionConfig,
) -> SnapshotFlags {
    let mut words_checked = 0;
    let lines = snapshot
        .lines
        .iter()
        .map(|line| {
            let tokens = tokenize_line(line);
            let mut flags = LineFlags {
                suspect_line: !tokens.is_empty()
                    && model.structure_count(&line_structure(&tokens)) < cfg.k_line,
                suspect_words: Vec::new(),
            };
            for (i, tok) in tokens.iter().enumerate() {
                if tok.kind.is_identifier() {
                    words_checked += 1;
                    if is_suspect_word(&tok.text, tok.kind, model, vocab, cfg) {
                        flags.suspect_words.push(i);
                    }
                }
            }
            flags
        })
        .collect();
    SnapshotFlags {
        t: snapshot.t,
        lines,
        words_checked,
    }
}

/// Candidate pool with frequencies, bucketed by character length so a lookup
/// only visits lengths that can pass the acceptance ratio.
#[derive(Debug, Default)]
struct Pool {
    by_len: BTreeMap<usize, Vec<(String, u64)>>,
}

impl Pool {
    fn from_counts(counts: HashMap<String, u64>) -> Self {
        let mut by_len: BTreeMap<usize, Vec<(String, u64)>> = BTreeMap::new();
        for (text, n) in counts {
            by_len.entry(text.chars().count()).or_default().push((text, n));
        }
        for bucket in by_len.values_mut() {
            bucket.sort();
        }
        Self { by_len }
    }

    /// Nearest candidate by edit distance, ties by higher frequency then
    /// lexicographic order; `None` unless it passes the acceptance ratio.
    fn best(&self, query: &str, ratio: f64) -> Option<&str> {
        let q = query.chars().count();
        let mut best: Option<(usize, u64, &str)> = None;
        for (&len, bucket) in &self.by_len {
            // the distance is at least the length difference
            if (q.abs_diff(len) as f64) > ratio * q.max(len) as f64 {
                continue;
            }
            for (text, freq) in bucket {
                if text == query {
                    continue;
                }
                let d = levenshtein(query, text);
                let better = match best {
                    None => true,
                    Some((bd, bf, bt)) => (d, std::cmp::Reverse(*freq), text.as_str()) < (bd, std::cmp::Reverse(bf), bt),
                };
                if better {
                    best = Some((d, *freq, text));
                }
            }
        }
        let (d, _, text) = best?;
        let denom = q.max(text.chars().count()).max(1);
        (d as f64 / denom as f64 <= ratio).then_some(text)
    }
}

fn corpus_pools(model: &CodeLanguageModel, cfg: &CorrectionConfig) -> HashMap<TokenKind, Pool> {
    let mut counts: HashMap<TokenKind, HashMap<String, u64>> = HashMap::new();
    for (word, &n) in &model.unigram {
        if n < cfg.k_word {
            continue;
        }
        let tokens = tokenize_line(word);
        if let [tok] = tokens.as_slice() {
            if tok.kind.is_identifier() && tok.text == *word {
                counts.entry(tok.kind).or_default().insert(word.clone(), n);
            }
        }
    }
    counts.into_iter().map(|(k, c)| (k, Pool::from_counts(c))).collect()
}

fn leading_ws(line: &str) -> &str {
    &line[..line.len() - line.trim_start().len()]
}

/// Repairs suspect words and lines using trusted renditions from the other
/// frames, then corpus words. Never touches a word or line that is not
/// flagged.
pub fn correct_crossframe(
    snapshots: &[CodeSnapshot],
    flags: &[SnapshotFlags],
    model: &CodeLanguageModel,
    cfg: &CorrectionConfig,
) -> (Vec<CodeSnapshot>, CorrectionReport) {
    assert_eq!(snapshots.len(), flags.len(), "one flag set per snapshot");

    let mut word_counts: HashMap<TokenKind, HashMap<String, u64>> = HashMap::new();
    let mut line_counts: HashMap<String, u64> = HashMap::new();
    for (snap, fl) in snapshots.iter().zip(flags) {
        for (line, lf) in snap.lines.iter().zip(&fl.lines) {
            for (i, tok) in tokenize_line(line).into_iter().enumerate() {
                if tok.kind.is_identifier() && !lf.suspect_words.contains(&i) {
                    *word_counts.entry(tok.kind).or_default().entry(tok.text).or_default() += 1;
                }
            }
            let trimmed = line.trim();
            if lf.is_clean() && !trimmed.is_empty() {
                *line_counts.entry(trimmed.to_string()).or_default() += 1;
            }
        }
    }
    let frame_pools: HashMap<TokenKind, Pool> =
        word_counts.into_iter().map(|(k, c)| (k, Pool::from_counts(c))).collect();
    let corpus = corpus_pools(model, cfg);
    let line_pool = Pool::from_counts(line_counts);

    let mut report = CorrectionReport {
        config: cfg.clone(),
        frames: Vec::new(),
        words_checked: 0,
        words_flagged: 0,
        words_corrected: 0,
    };
    let mut out = Vec::with_capacity(snapshots.len());
    for (snap, fl) in snapshots.iter().zip(flags) {
        report.words_checked += fl.words_checked;
        let mut entries = Vec::new();
        let mut lines = snap.lines.clone();
        for (j, lf) in fl.lines.iter().enumerate() {
            let Some(line) = lines.get_mut(j) else { break };
            report.words_flagged += lf.suspect_words.len();
            let mut fixed_words = 0;
            if !lf.suspect_words.is_empty() {
                let spans = lex_spans(line);
                let mut rebuilt = String::with_capacity(line.len());
                let mut cursor = 0;
                for (i, (start, tok)) in spans.iter().enumerate() {
                    if !lf.suspect_words.contains(&i) {
                        continue;
                    }
                    let found = frame_pools
                        .get(&tok.kind)
                        .and_then(|p| p.best(&tok.text, cfg.accept_ratio))
                        .map(|c| (c, Mechanism::CrossFrameWord))
                        .or_else(|| {
                            corpus
                                .get(&tok.kind)
                                .and_then(|p| p.best(&tok.text, cfg.accept_ratio))
                                .map(|c| (c, Mechanism::CorpusWord))
                        });
                    if let Some((cand, mechanism)) = found {
                        rebuilt.push_str(&line[cursor..*start]);
                        rebuilt.push_str(cand);
                        cursor = start + tok.text.len();
                        fixed_words += 1;
                        entries.push(CorrectionEntry {
                            line_no: j + 1,
                            original: tok.text.clone(),
                            corrected: cand.to_string(),
                            mechanism,
                        });
                    }
                }
                rebuilt.push_str(&line[cursor..]);
                *line = rebuilt;
            }
            report.words_corrected += fixed_words;

            if lf.suspect_line && is_suspect_line(line, model, cfg) {
                if let Some(cand) = line_pool.best(line.trim(), cfg.accept_ratio) {
                    let replaced = format!("{}{}", leading_ws(line), cand);
                    entries.push(CorrectionEntry {
                        line_no: j + 1,
                        original: line.clone(),
                        corrected: replaced.clone(),
                        mechanism: Mechanism::CrossFrameLine,
                    });
                    // words still unrepaired are covered by the new line
                    report.words_corrected += lf.suspect_words.len() - fixed_words;
                    *line = replaced;
                }
            }
        }
        report.frames.push(FrameCorrections {
            t: snap.t,
            entries,
        });
        out.push(CodeSnapshot {
            t: snap.t,
            lines,
            words: snap.words.clone(),
        });
    }
    (out, report)
}

/// The full correction pass over one video: normalise, build the video
/// vocabulary, flag, repair.
pub fn correct_video(
    snapshots: &[CodeSnapshot],
    model: &CodeLanguageModel,
    cfg: &CorrectionConfig,
) -> (Vec<CodeSnapshot>, CorrectionReport) {
    let (normalized, norm_entries): (Vec<_>, Vec<_>) =
        snapshots.iter().map(|s| normalize(s, cfg)).unzip();
    let vocab = VideoVocabulary::from_snapshots(&normalized, cfg.vocab_min_frames);
    let flags: Vec<SnapshotFlags> = normalized
        .iter()
        .map(|s| flag_suspects(s, model, &vocab, cfg))
        .collect();
    let (corrected, mut report) = correct_crossframe(&normalized, &flags, model, cfg);
    for (frame, mut pre) in report.frames.iter_mut().zip(norm_entries) {
        pre.append(&mut frame.entries);
        frame.entries = pre;
    }
    (corrected, report)
}
