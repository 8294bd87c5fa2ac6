//! Versioned binary model artifact.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{feature_names, ChronoError, Forest};

const MAGIC: &[u8; 8] = b"NCSLEEP\0";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub forest: Forest,
    pub feature_names: Vec<String>,
    /// Permutation importance from training, if computed.
    pub importance: Option<Vec<f64>>,
}

impl ModelArtifact {
    pub fn new(forest: Forest, importance: Option<Vec<f64>>) -> Self {
        Self { forest, feature_names: feature_names(), importance }
    }
}

pub fn save_model<W: Write>(mut out: W, model: &ModelArtifact) -> Result<(), ChronoError> {
    let io = |e: std::io::Error| ChronoError::Artifact(e.to_string());
    out.write_all(MAGIC).map_err(io)?;
    out.write_all(&MODEL_FORMAT_VERSION.to_le_bytes()).map_err(io)?;
    bincode::serialize_into(&mut out, model).map_err(|e| ChronoError::Artifact(e.to_string()))?;
    out.flush().map_err(io)
}

pub fn load_model<R: Read>(mut input: R) -> Result<ModelArtifact, ChronoError> {
    let mut head = [0u8; 12];
    input.read_exact(&mut head).map_err(|e| ChronoError::Artifact(format!("truncated header: {e}")))?;
    if &head[..8] != MAGIC {
        return Err(ChronoError::Artifact("not a sleep model file".into()));
    }
    let version = u32::from_le_bytes(head[8..].try_into().expect("4 bytes"));
    if version != MODEL_FORMAT_VERSION {
        return Err(ChronoError::Artifact(format!("unsupported format version {version}")));
    }
    let model: ModelArtifact = bincode::deserialize_from(input).map_err(|e| ChronoError::Artifact(e.to_string()))?;
    if model.feature_names.len() != model.forest.n_features {
        return Err(ChronoError::Artifact("feature names do not match the forest".into()));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chronobio::{train_forest, ForestConfig, N_FEATURES};

    fn model() -> ModelArtifact {
        let x: Vec<[f64; N_FEATURES]> = (0..60)
            .map(|i| {
                let mut r = [0.0; N_FEATURES];
                r[3] = f64::from(i);
                r[9] = f64::from(i % 7);
                r
            })
            .collect();
        let y: Vec<bool> = (0..60).map(|i| i % 3 == 0 || i > 40).collect();
        let (f, rep) = train_forest(&x, &y, &ForestConfig { n_trees: 8, seed: 42, ..Default::default() }).unwrap();
        ModelArtifact::new(f, rep.importance)
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let mut buf = Vec::new();
        save_model(&mut buf, &m).unwrap();
        let back = load_model(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.forest.config.seed, 42);
    }

    #[test]
    fn rejects_foreign_and_future_files() {
        assert!(load_model(&b"hello world, not a model"[..]).is_err());
        let mut buf = Vec::new();
        save_model(&mut buf, &model()).unwrap();
        buf[8] = 9;
        let err = load_model(buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("version 9"));
        assert!(load_model(&buf[..5]).is_err());
    }
}
