use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MarlineModel;
use crate::error::{Error, Result};

const FORMAT: &str = "marline-snapshot";
const VERSION: u32 = 1;

/// Versioned JSON dump of a model. Floats round-trip exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    format: String,
    version: u32,
    model: MarlineModel,
}

impl Snapshot {
    pub fn encode(model: &MarlineModel) -> Result<String> {
        let snap = SnapshotRef {
            format: FORMAT,
            version: VERSION,
            model,
        };
        Ok(serde_json::to_string(&snap)?)
    }

    pub fn decode(text: &str) -> Result<MarlineModel> {
        let snap: Snapshot = serde_json::from_str(text)?;
        if snap.format != FORMAT {
            return Err(Error::config(format!("not a model snapshot (format {:?})", snap.format)));
        }
        if snap.version != VERSION {
            return Err(Error::config(format!("unsupported snapshot version {}", snap.version)));
        }
        Ok(snap.model)
    }

    pub fn save(model: &MarlineModel, path: &Path) -> Result<()> {
        fs::write(path, Self::encode(model)?).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<MarlineModel> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::decode(&text)
    }
}

#[derive(Serialize)]
struct SnapshotRef<'a> {
    format: &'a str,
    version: u32,
    model: &'a MarlineModel,
}
