//! Tokenizer and the average-pooling text encoder.
//!
//! The encoder is a trainable token-embedding table whose output is the
//! arithmetic mean of the embeddings of its input tokens. It stands in for a
//! contextual encoder behind the [`TextEncoder`] trait.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kg::Vocab;

pub const UNK: &str = "<unk>";
pub const SEP: &str = "<sep>";
pub const REL_OPEN: &str = "<r>";
pub const REL_CLOSE: &str = "</r>";
const SPECIALS: [&str; 4] = [UNK, SEP, REL_OPEN, REL_CLOSE];

pub type TokenId = usize;

/// Lowercases and splits on whitespace and punctuation. Punctuation
/// characters become their own tokens; the special markers are never split.
pub fn split_words(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    let mut word = String::new();
    let mut rest = lower.as_str();
    while let Some(ch) = rest.chars().next() {
        if let Some(sp) = SPECIALS.iter().find(|s| rest.starts_with(**s)) {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            out.push((*sp).to_string());
            rest = &rest[sp.len()..];
            continue;
        }
        if ch.is_alphanumeric() || ch == '_' {
            word.push(ch);
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            if !ch.is_whitespace() {
                out.push(ch.to_string());
            }
        }
        rest = &rest[ch.len_utf8()..];
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

/// Replaces every `[mention]` with the unknown token so entity names do not
/// leak into the pooled question vector.
pub fn mask_mentions(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        let Some(close) = rest[open..].find(']') else { break };
        out.push_str(&rest[..open]);
        out.push_str(" <unk> ");
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    out
}

/// Relation labels are shown to the encoder with underscores as spaces.
pub fn relation_words(label: &str) -> Vec<String> {
    split_words(&label.replace('_', " "))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tokenizer {
    vocab: Vocab,
}

impl Tokenizer {
    /// Vocabulary of the special tokens followed by every word of `texts`
    /// and `relation_labels` in first-appearance order.
    pub fn build<'a>(
        texts: impl IntoIterator<Item = &'a str>,
        relation_labels: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let mut vocab = Vocab::from_labels(SPECIALS);
        for t in texts {
            for w in split_words(t) {
                vocab.intern(w);
            }
        }
        for r in relation_labels {
            for w in relation_words(r) {
                vocab.intern(w);
            }
        }
        Self { vocab }
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < SPECIALS.len() || tokens[..SPECIALS.len()] != SPECIALS {
            return Err(Error::InvalidArgument(
                "vocabulary must start with the special tokens".into(),
            ));
        }
        let vocab = Vocab::from_labels(tokens);
        Ok(Self { vocab })
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn unknown_id(&self) -> TokenId {
        0
    }

    pub fn sep_id(&self) -> TokenId {
        1
    }

    pub fn rel_open_id(&self) -> TokenId {
        2
    }

    pub fn rel_close_id(&self) -> TokenId {
        3
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.vocab.label(id)
    }

    pub fn tokens(&self) -> &[String] {
        self.vocab.labels()
    }

    fn ids(&self, words: Vec<String>) -> Vec<TokenId> {
        words
            .iter()
            .map(|w| self.vocab.id(w).unwrap_or(self.unknown_id()))
            .collect()
    }

    pub fn tokenize(&self, text: &str) -> Vec<TokenId> {
        self.ids(split_words(text))
    }

    /// `<r> words… </r>` for one relation label.
    pub fn relation_tokens(&self, label: &str) -> Vec<TokenId> {
        let mut out = vec![self.rel_open_id()];
        out.extend(self.ids(relation_words(label)));
        out.push(self.rel_close_id());
        out
    }

    /// One token per line; the id is the line number.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        for t in self.vocab.labels() {
            writeln!(f, "{t}")?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_tokens(text.lines().map(str::to_string).collect())
    }
}

/// Maps a token sequence to a fixed-width vector.
pub trait TextEncoder {
    fn dim(&self) -> usize;
    fn encode(&self, tokens: &[TokenId]) -> Result<Vec<f64>>;
}

/// Trainable token embeddings with mean pooling.
#[derive(Clone, Debug, PartialEq)]
pub struct AvgEncoder {
    dim: usize,
    /// Row-major `|V| × dim`.
    pub table: Vec<f64>,
}

impl AvgEncoder {
    pub fn new(vocab_size: usize, dim: usize, init_scale: f64, rng: &mut impl Rng) -> Self {
        let table = (0..vocab_size * dim)
            .map(|_| rng.gen_range(-init_scale..=init_scale))
            .collect();
        Self { dim, table }
    }

    pub fn from_table(dim: usize, table: Vec<f64>) -> Result<Self> {
        if dim == 0 || table.len() % dim != 0 {
            return Err(Error::InvalidArgument("embedding table shape".into()));
        }
        Ok(Self { dim, table })
    }

    pub fn vocab_size(&self) -> usize {
        self.table.len() / self.dim
    }

    pub fn row(&self, t: TokenId) -> &[f64] {
        &self.table[t * self.dim..(t + 1) * self.dim]
    }

    /// Sum (not mean) of token rows; callers divide when concatenating pieces.
    pub fn sum(&self, tokens: &[TokenId]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &t in tokens {
            for (o, x) in out.iter_mut().zip(self.row(t)) {
                *o += x;
            }
        }
        out
    }

    /// Adds `grad_out / |tokens|` to every row of `grad_table` named by `tokens`.
    pub fn backward(&self, tokens: &[TokenId], grad_out: &[f64], grad_table: &mut [f64]) {
        let w = 1.0 / tokens.len() as f64;
        self.backward_scaled(tokens, grad_out, w, grad_table);
    }

    pub(crate) fn backward_scaled(
        &self,
        tokens: &[TokenId],
        grad: &[f64],
        w: f64,
        grad_table: &mut [f64],
    ) {
        for &t in tokens {
            let row = &mut grad_table[t * self.dim..(t + 1) * self.dim];
            for (r, g) in row.iter_mut().zip(grad) {
                *r += w * g;
            }
        }
    }

    /// Token sequence `question <sep> <r> rel₁ </r> … <r> relₖ </r>`.
    pub fn path_sequence(
        tokenizer: &Tokenizer,
        question: &[TokenId],
        relation_labels: &[&str],
    ) -> Vec<TokenId> {
        let mut seq = question.to_vec();
        seq.push(tokenizer.sep_id());
        for l in relation_labels {
            seq.extend(tokenizer.relation_tokens(l));
        }
        seq
    }

    /// Textual path feature: mean pooling over [`Self::path_sequence`].
    pub fn encode_path_text(
        &self,
        tokenizer: &Tokenizer,
        question: &[TokenId],
        relation_labels: &[&str],
    ) -> Result<Vec<f64>> {
        if relation_labels.is_empty() {
            return Err(Error::Empty("relation path".into()));
        }
        self.encode(&Self::path_sequence(tokenizer, question, relation_labels))
    }
}

impl TextEncoder for AvgEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, tokens: &[TokenId]) -> Result<Vec<f64>> {
        if tokens.is_empty() {
            return Err(Error::Empty("token list".into()));
        }
        if let Some(&t) = tokens.iter().find(|&&t| t >= self.vocab_size()) {
            return Err(Error::UnknownId(format!("token {t}")));
        }
        let n = tokens.len() as f64;
        Ok(self.sum(tokens).into_iter().map(|x| x / n).collect())
    }
}
