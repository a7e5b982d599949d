//! Vocabulary and token sequences.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Conventional spelling of the unknown-word token. A vocabulary that
/// contains it can tokenize arbitrary text lossily.
pub const UNK_TOKEN: &str = "<unk>";

/// An ordered set of distinct token strings with a designated end-of-sequence
/// token. Token ids are indices into the list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    eos_id: usize,
    unk_id: Option<usize>,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>, eos_id: usize) -> Result<Arc<Self>> {
        if tokens.len() < 2 {
            return Err(Error::Vocabulary(format!(
                "need at least 2 tokens, got {}",
                tokens.len()
            )));
        }
        if eos_id >= tokens.len() {
            return Err(Error::Vocabulary(format!(
                "eos_id {eos_id} out of range for {} tokens",
                tokens.len()
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Vocabulary(format!("duplicate token {t:?}")));
            }
        }
        let unk_id = index.get(UNK_TOKEN).copied();
        Ok(Arc::new(Self {
            tokens,
            index,
            eos_id,
            unk_id,
        }))
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn eos_id(&self) -> usize {
        self.eos_id
    }

    pub fn unk_id(&self) -> Option<usize> {
        self.unk_id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: usize) -> Result<&str> {
        self.tokens
            .get(id)
            .map(String::as_str)
            .ok_or_else(|| Error::Vocabulary(format!("token id {id} out of range")))
    }

    pub fn id_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Whitespace tokenization; every word must be in the vocabulary.
    pub fn tokenize(&self, text: &str) -> Result<Vec<usize>> {
        text.split_whitespace()
            .map(|w| {
                self.id_of(w)
                    .ok_or_else(|| Error::Vocabulary(format!("unknown token {w:?}")))
            })
            .collect()
    }

    /// Whitespace tokenization mapping unknown words to `<unk>`. Requires the
    /// vocabulary to contain [`UNK_TOKEN`].
    pub fn tokenize_lossy(&self, text: &str) -> Result<Vec<usize>> {
        let unk = self.unk_id.ok_or_else(|| {
            Error::Vocabulary("lossy tokenization needs an <unk> token".to_string())
        })?;
        Ok(text
            .split_whitespace()
            .map(|w| self.id_of(w).unwrap_or(unk))
            .collect())
    }

    /// Join tokens with single spaces, skipping `<eos>`.
    pub fn detokenize(&self, ids: &[usize]) -> Result<String> {
        let mut out = String::new();
        for &id in ids {
            if id == self.eos_id {
                continue;
            }
            let tok = self.token(id)?;
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(tok);
        }
        Ok(out)
    }

    /// Validate ids against this vocabulary and build a [`TokenSequence`].
    pub fn sequence(&self, ids: Vec<usize>) -> Result<TokenSequence> {
        TokenSequence::new(ids, self)
    }
}

/// A validated list of token indices. If terminated, `<eos>` appears exactly
/// once, in the final position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    ids: Vec<usize>,
    terminated: bool,
}

impl TokenSequence {
    pub fn new(ids: Vec<usize>, vocab: &Vocabulary) -> Result<Self> {
        for &id in &ids {
            if id >= vocab.size() {
                return Err(Error::Vocabulary(format!(
                    "token id {id} out of range for vocabulary of size {}",
                    vocab.size()
                )));
            }
        }
        let eos_count = ids.iter().filter(|&&id| id == vocab.eos_id()).count();
        let terminated = ids.last() == Some(&vocab.eos_id());
        match eos_count {
            0 => {}
            1 if terminated => {}
            _ => {
                return Err(Error::Vocabulary(
                    "eos must appear exactly once and last".to_string(),
                ))
            }
        }
        Ok(Self { ids, terminated })
    }

    pub fn empty() -> Self {
        Self {
            ids: Vec::new(),
            terminated: false,
        }
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Arc<Vocabulary> {
        Vocabulary::new(
            vec!["<eos>".into(), "<unk>".into(), "a".into(), "b".into()],
            0,
        )
        .unwrap()
    }

    #[test]
    fn rejects_degenerate_vocabularies() {
        assert!(Vocabulary::new(vec!["x".into()], 0).is_err());
        assert!(Vocabulary::new(vec!["x".into(), "y".into()], 2).is_err());
        assert!(Vocabulary::new(vec!["x".into(), "x".into()], 0).is_err());
    }

    #[test]
    fn tokenize_and_detokenize_roundtrip() {
        let v = vocab();
        let ids = v.tokenize("a b a").unwrap();
        assert_eq!(ids, vec![2, 3, 2]);
        assert_eq!(v.detokenize(&ids).unwrap(), "a b a");
        assert!(v.tokenize("a z").is_err());
        assert_eq!(v.tokenize_lossy("a z").unwrap(), vec![2, 1]);
    }

    #[test]
    fn detokenize_skips_eos() {
        let v = vocab();
        assert_eq!(v.detokenize(&[2, 3, 0]).unwrap(), "a b");
    }

    #[test]
    fn sequence_validates_eos_placement() {
        let v = vocab();
        assert!(v.sequence(vec![2, 0, 3]).is_err());
        assert!(v.sequence(vec![2, 0, 0]).is_err());
        let s = v.sequence(vec![2, 3, 0]).unwrap();
        assert!(s.terminated());
        let s = v.sequence(vec![2, 3]).unwrap();
        assert!(!s.terminated());
        assert!(v.sequence(vec![9]).is_err());
    }
}
