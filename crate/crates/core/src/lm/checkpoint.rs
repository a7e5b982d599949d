//! Text checkpoint format: an architecture header (vocabulary listing,
//! context window, widths, format version) followed by one parameter per
//! line. Floats are printed with shortest round-trip formatting, so
//! save -> load is lossless.

use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::model::{ModelArch, PolicyModel};
use super::vocab::Vocabulary;

const MAGIC: &str = "tinyjudge-checkpoint v1";

impl<R: Real> PolicyModel<R> {
    /// Render this model as checkpoint text.
    pub fn to_checkpoint_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        let arch = self.arch();
        out.push_str(&format!("context_window = {}\n", arch.context_window));
        out.push_str(&format!("embedding_width = {}\n", arch.embedding_width));
        out.push_str(&format!("hidden_width = {}\n", arch.hidden_width));
        out.push_str(&format!("eos_id = {}\n", self.vocab().eos_id()));
        out.push_str(&format!("vocab_len = {}\n", self.vocab().size()));
        for tok in self.vocab().tokens() {
            // JSON-quote each token so arbitrary strings survive the line format.
            out.push_str(&serde_json::to_string(tok).expect("string serializes"));
            out.push('\n');
        }
        out.push_str(&format!("params = {}\n", self.param_count()));
        for &p in self.params() {
            out.push_str(&format!("{:?}\n", p.to_f64_c()));
        }
        out
    }

    /// Parse checkpoint text produced by [`Self::to_checkpoint_text`].
    pub fn from_checkpoint_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let magic = lines
            .next()
            .ok_or_else(|| Error::Checkpoint("empty checkpoint".to_string()))?;
        if magic != MAGIC {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint header {magic:?}"
            )));
        }
        let mut field = |name: &str| -> Result<usize> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Checkpoint(format!("missing field {name}")))?;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Checkpoint(format!("malformed line {line:?}")))?;
            if key.trim() != name {
                return Err(Error::Checkpoint(format!(
                    "expected field {name}, found {}",
                    key.trim()
                )));
            }
            value
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::Checkpoint(format!("bad value for {name}: {e}")))
        };
        let context_window = field("context_window")?;
        let embedding_width = field("embedding_width")?;
        let hidden_width = field("hidden_width")?;
        let eos_id = field("eos_id")?;
        let vocab_len = field("vocab_len")?;

        let mut tokens = Vec::with_capacity(vocab_len);
        for _ in 0..vocab_len {
            let line = lines
                .next()
                .ok_or_else(|| Error::Checkpoint("truncated vocabulary".to_string()))?;
            let tok: String = serde_json::from_str(line)
                .map_err(|e| Error::Checkpoint(format!("bad token line {line:?}: {e}")))?;
            tokens.push(tok);
        }
        let vocab = Vocabulary::new(tokens, eos_id)?;
        let arch = ModelArch::new(context_window, embedding_width, hidden_width)?;

        let mut field = |name: &str| -> Result<usize> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Checkpoint(format!("missing field {name}")))?;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Checkpoint(format!("malformed line {line:?}")))?;
            if key.trim() != name {
                return Err(Error::Checkpoint(format!(
                    "expected field {name}, found {}",
                    key.trim()
                )));
            }
            value
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::Checkpoint(format!("bad value for {name}: {e}")))
        };
        let declared = field("params")?;
        if declared != arch.param_count(vocab.size()) {
            return Err(Error::Checkpoint(format!(
                "declared {declared} parameters but architecture needs {}",
                arch.param_count(vocab.size())
            )));
        }
        let mut params = Vec::with_capacity(declared);
        for _ in 0..declared {
            let line = lines
                .next()
                .ok_or_else(|| Error::Checkpoint("truncated parameter list".to_string()))?;
            let value: f64 = line
                .trim()
                .parse()
                .map_err(|e| Error::Checkpoint(format!("bad parameter line {line:?}: {e}")))?;
            params.push(R::from_f64_c(value));
        }
        if lines.next().is_some() {
            return Err(Error::Checkpoint(
                "trailing content after parameter list".to_string(),
            ));
        }
        let mut model = Self::zeroed(vocab, arch);
        model.set_params(params)?;
        Ok(model)
    }

    /// Write this model to `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_text())?;
        Ok(())
    }

    /// Load a model from `path`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Checkpoint(format!("cannot read checkpoint {}: {e}", path.display()))
        })?;
        Self::from_checkpoint_text(&text)
    }
}
