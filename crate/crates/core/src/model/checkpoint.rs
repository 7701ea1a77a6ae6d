//! Binary parameter checkpoints: magic `OPNP`, u32 version, u32 length of a
//! JSON echo of the model config, the config itself, then every parameter
//! as a little-endian f32 in declaration order.

use std::path::Path;

use super::network::{ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::gridcodec::write_atomic;

const MAGIC: &[u8; 4] = b"OPNP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.params.check(&self.config)?;
        let echo = serde_json::to_vec(&self.config)?;
        let mut out = Vec::with_capacity(12 + echo.len() + 4 * self.params.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(echo.len() as u32).to_le_bytes());
        out.extend_from_slice(&echo);
        for v in &self.params.values {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Format(format!("checkpoint: {msg}"));
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(bad("missing OPNP header"));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        let version = word(4);
        if version != CHECKPOINT_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let len = word(8) as usize;
        let echo = bytes.get(12..12 + len).ok_or_else(|| bad("truncated config"))?;
        let config: ModelConfig = serde_json::from_slice(echo)?;
        config.validate()?;
        let body = &bytes[12 + len..];
        if body.len() != 4 * config.param_count() {
            return Err(bad(&format!(
                "expected {} parameters, found {} bytes",
                config.param_count(),
                body.len()
            )));
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        let params = ModelParams { values };
        params.check(&config)?;
        Ok(Self { config, params })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
