//! Saved-model documents: a tagged JSON wrapper around forests and armed
//! forests so the evaluate/importance/usage commands know what they loaded.

use serde::{Deserialize, Serialize};
use std::path::Path;

use forestlab::forest::{ArmedForest, Forest};
use forestlab::predictor::Predictor;

use crate::error::CliError;

#[derive(Serialize, Deserialize)]
#[serde(tag = "model_kind", rename_all = "snake_case")]
pub enum ModelDocument {
    Forest(Forest),
    ArmedForest(ArmedForest),
}

impl ModelDocument {
    pub fn as_predictor(&self) -> &dyn Predictor {
        match self {
            ModelDocument::Forest(f) => f,
            ModelDocument::ArmedForest(a) => a,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string(self)
            .map_err(|e| CliError::config(format!("serialize model: {e}")))?;
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let doc: ModelDocument = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        // Re-run the structural checks the typed loaders perform.
        match &doc {
            ModelDocument::Forest(f) => {
                for tree in &f.trees {
                    tree.validate().map_err(CliError::config_msg)?;
                }
            }
            ModelDocument::ArmedForest(a) => {
                for tree in a.arms.values().flat_map(|f| &f.trees).chain(&a.fallback.trees) {
                    tree.validate().map_err(CliError::config_msg)?;
                }
            }
        }
        Ok(doc)
    }
}
