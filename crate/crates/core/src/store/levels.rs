use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{append_line, read_jsonl_lines, Result, StoreError};
use crate::game::LevelConfig;

/// A named level as kept by the level editor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredLevel {
    pub id: String,
    pub name: String,
    pub level: LevelConfig,
}

impl StoredLevel {
    pub fn new(id: String, name: &str, level: LevelConfig) -> Result<Self> {
        let name = name.trim();
        if name.is_empty() {
            return Err(StoreError::Validation("level name must not be empty".into()));
        }
        level
            .validate()
            .map_err(|e| StoreError::Validation(e.to_string()))?;
        Ok(Self {
            id,
            name: name.to_string(),
            level,
        })
    }
}

/// Latest version of each level, ordered by first appearance.
pub(super) fn load(path: &Path) -> Result<Vec<StoredLevel>> {
    let mut levels: Vec<StoredLevel> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    for (i, line) in read_jsonl_lines(path)?.iter().enumerate() {
        let stored: StoredLevel = serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
            path: path.to_path_buf(),
            reason: format!("line {}: {e}", i + 1),
        })?;
        match slot.get(&stored.id) {
            Some(&at) => levels[at] = stored,
            None => {
                slot.insert(stored.id.clone(), levels.len());
                levels.push(stored);
            }
        }
    }
    Ok(levels)
}

pub(super) fn append(path: &Path, level: &StoredLevel) -> Result<()> {
    append_line(path, &serde_json::to_string(level)?)
}
