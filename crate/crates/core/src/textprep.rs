//! Text normalization and vocabulary construction.
//!
//! Descriptions are lowercased, every character that is not a Unicode letter
//! becomes a space, one-character words are dropped and the survivors go
//! through Portuguese plural reduction. Accents are kept as-is.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;

const DEFAULT_PLURAL_RULES: &str = include_str!("../data/plural_rules.tsv");

/// Words shorter than this are never reduced.
const PLURAL_MIN_WORD_CHARS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextPrepError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("plural rule table line {line}: {message}")]
    RuleTable { line: usize, message: String },
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
}

/// Lowercase, letters-only tokens of at least two characters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSequence { tokens }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PluralRule {
    pub suffix: String,
    pub replacement: String,
    pub min_stem_chars: usize,
    pub exceptions: Vec<String>,
}

/// Ordered suffix-rule table for plural reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PluralRules {
    rules: Vec<PluralRule>,
}

impl PluralRules {
    /// The rule table bundled with the crate.
    pub fn standard() -> &'static PluralRules {
        static RULES: OnceLock<PluralRules> = OnceLock::new();
        RULES.get_or_init(|| PluralRules::parse(DEFAULT_PLURAL_RULES).expect("bundled plural rule table is valid"))
    }

    /// Parses the tab-separated table format (see `data/plural_rules.tsv`).
    pub fn parse(text: &str) -> Result<PluralRules, TextPrepError> {
        let mut rules: Vec<PluralRule> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| TextPrepError::RuleTable { line, message };
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if !(3..=4).contains(&fields.len()) {
                return Err(err(format!(
                    "expected 3 or 4 tab-separated fields, got {}",
                    fields.len()
                )));
            }
            let suffix = fields[0].trim();
            if suffix.is_empty() || !suffix.chars().all(char::is_alphabetic) {
                return Err(err(format!("invalid suffix {suffix:?}")));
            }
            let min_stem_chars = fields[2]
                .trim()
                .parse()
                .map_err(|_| err(format!("invalid minimum stem length {:?}", fields[2])))?;
            let exceptions = fields
                .get(3)
                .map(|list| {
                    list.split(',')
                        .map(str::trim)
                        .filter(|w| !w.is_empty())
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default();
            if let Some(earlier) = rules
                .iter()
                .find(|r| suffix.ends_with(r.suffix.as_str()) && suffix != r.suffix)
            {
                return Err(err(format!(
                    "suffix {suffix:?} is shadowed by earlier, shorter suffix {:?}",
                    earlier.suffix
                )));
            }
            rules.push(PluralRule {
                suffix: suffix.to_string(),
                replacement: fields[1].trim().to_string(),
                min_stem_chars,
                exceptions,
            });
        }
        Ok(PluralRules { rules })
    }

    pub fn rules(&self) -> &[PluralRule] {
        &self.rules
    }

    /// Reduces a plural word to its singular form. At most one rule fires.
    ///
    /// A rule is also skipped when its output would still end in `s`, which
    /// keeps the reduction idempotent (`class` stays `class`).
    pub fn singularize(&self, token: &str) -> String {
        if !token.ends_with('s') || token.chars().count() < PLURAL_MIN_WORD_CHARS {
            return token.to_string();
        }
        for rule in &self.rules {
            let Some(stem) = token.strip_suffix(rule.suffix.as_str()) else {
                continue;
            };
            if stem.chars().count() < rule.min_stem_chars || rule.exceptions.iter().any(|e| e == token) {
                continue;
            }
            if rule.replacement.is_empty() && stem.ends_with('s') {
                continue;
            }
            return format!("{stem}{}", rule.replacement);
        }
        token.to_string()
    }
}

pub fn singularize(token: &str) -> String {
    PluralRules::standard().singularize(token)
}

pub fn normalize(text: &str) -> TokenSequence {
    normalize_with(text, PluralRules::standard())
}

pub fn normalize_with(text: &str, rules: &PluralRules) -> TokenSequence {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphabetic() { c } else { ' ' })
        .collect();
    let tokens = cleaned
        .split_whitespace()
        .filter(|t| t.chars().nth(1).is_some())
        .map(|t| rules.singularize(t))
        .collect();
    TokenSequence { tokens }
}

/// Sorted word list with document and corpus frequencies.
///
/// Index `i` is the position of the word in lexicographic order, so two
/// vocabularies built from the same multiset of documents are identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    doc_freq: Vec<u64>,
    corpus_freq: Vec<u64>,
    n_docs: u64,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from stored columns, checking every invariant.
    pub fn from_parts(
        words: Vec<String>,
        doc_freq: Vec<u64>,
        corpus_freq: Vec<u64>,
        n_docs: u64,
    ) -> Result<Vocabulary, TextPrepError> {
        let bad = |m: String| Err(TextPrepError::InvalidVocabulary(m));
        if words.len() != doc_freq.len() || words.len() != corpus_freq.len() {
            return bad("column lengths differ".into());
        }
        if words.len() > u32::MAX as usize {
            return bad("too many words".into());
        }
        if let Some(w) = words.windows(2).find(|w| w[0] >= w[1]) {
            return bad(format!("words not strictly sorted at {:?}", w[1]));
        }
        for (i, word) in words.iter().enumerate() {
            let (df, cf) = (doc_freq[i], corpus_freq[i]);
            if cf < 2 {
                return bad(format!("word {word:?} has corpus frequency {cf} < 2"));
            }
            if df == 0 || df > n_docs || df > cf {
                return bad(format!(
                    "word {word:?} has document frequency {df} outside [1, {n_docs}]"
                ));
            }
        }
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Ok(Vocabulary {
            words,
            doc_freq,
            corpus_freq,
            n_docs,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index_of(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn doc_freq(&self, index: u32) -> u64 {
        self.doc_freq[index as usize]
    }

    pub fn corpus_freq(&self, index: u32) -> u64 {
        self.corpus_freq[index as usize]
    }

    pub fn doc_freqs(&self) -> &[u64] {
        &self.doc_freq
    }

    pub fn corpus_freqs(&self) -> &[u64] {
        &self.corpus_freq
    }

    /// Number of documents the frequencies were counted over.
    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }
}

/// Per-shard word counts; shards merge associatively.
#[derive(Debug, Clone, Default)]
pub struct VocabularyCounts {
    counts: BTreeMap<String, (u64, u64)>,
    n_docs: u64,
    n_tokens: u64,
}

impl VocabularyCounts {
    pub fn add_document(&mut self, doc: &TokenSequence) {
        self.n_docs += 1;
        self.n_tokens += doc.len() as u64;
        let mut per_doc: BTreeMap<&str, u64> = BTreeMap::new();
        for token in doc.iter() {
            *per_doc.entry(token).or_default() += 1;
        }
        for (word, count) in per_doc {
            let entry = self.counts.entry(word.to_string()).or_default();
            entry.0 += 1;
            entry.1 += count;
        }
    }

    pub fn merge(mut self, other: VocabularyCounts) -> VocabularyCounts {
        let (mut big, small) = if self.counts.len() >= other.counts.len() {
            (std::mem::take(&mut self.counts), other.counts)
        } else {
            (other.counts, std::mem::take(&mut self.counts))
        };
        for (word, (df, cf)) in small {
            let entry = big.entry(word).or_default();
            entry.0 += df;
            entry.1 += cf;
        }
        VocabularyCounts {
            counts: big,
            n_docs: self.n_docs + other.n_docs,
            n_tokens: self.n_tokens + other.n_tokens,
        }
    }

    /// Drops hapaxes (corpus frequency 1) and freezes the word order.
    pub fn finish(self) -> Result<Vocabulary, TextPrepError> {
        if self.n_tokens == 0 {
            return Err(TextPrepError::EmptyCorpus);
        }
        let mut words = Vec::new();
        let mut doc_freq = Vec::new();
        let mut corpus_freq = Vec::new();
        for (word, (df, cf)) in self.counts {
            if cf >= 2 {
                words.push(word);
                doc_freq.push(df);
                corpus_freq.push(cf);
            }
        }
        Vocabulary::from_parts(words, doc_freq, corpus_freq, self.n_docs)
    }
}

pub fn build_vocabulary(docs: &[TokenSequence]) -> Result<Vocabulary, TextPrepError> {
    docs.par_iter()
        .fold(VocabularyCounts::default, |mut acc, doc| {
            acc.add_document(doc);
            acc
        })
        .reduce(VocabularyCounts::default, VocabularyCounts::merge)
        .finish()
}
