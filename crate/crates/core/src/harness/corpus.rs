//! Directory-per-class mask corpora.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::io::read_gray;
use super::HarnessError;
use crate::classifier::ClassId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusClass {
    pub class_id: ClassId,
    pub name: String,
    /// Paths relative to the corpus root, sorted.
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    /// Not serialized, so a saved manifest stays valid if the corpus moves.
    #[serde(skip)]
    pub root: PathBuf,
    pub classes: Vec<CorpusClass>,
    /// SHA-256 over every relative path and file content, in manifest order.
    pub checksum: String,
    pub warnings: Vec<String>,
}

impl Corpus {
    pub fn sample_count(&self) -> usize {
        self.classes.iter().map(|c| c.files.len()).sum()
    }

    /// Every `(class_id, absolute path)`, class by class.
    pub fn samples(&self) -> Vec<(ClassId, PathBuf)> {
        self.classes
            .iter()
            .flat_map(|c| c.files.iter().map(|f| (c.class_id, self.root.join(f))))
            .collect()
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))? {
        let entry = entry.map_err(|e| HarnessError::io(dir, e))?;
        if entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        out.push(entry.path());
    }
    out.sort();
    Ok(out)
}

/// Each subdirectory of `root` is a class (ids assigned 1.. in name order);
/// each decodable image inside it is a sample. Undecodable files are
/// skipped with a warning.
pub fn ingest(root: &Path) -> Result<Corpus, HarnessError> {
    let mut classes = Vec::new();
    let mut warnings = Vec::new();
    let mut hasher = Sha256::new();
    for dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let name = dir.file_name().unwrap().to_string_lossy().into_owned();
        let mut files = Vec::new();
        for path in sorted_entries(&dir)?.into_iter().filter(|p| p.is_file()) {
            let rel = path.strip_prefix(root).unwrap().to_path_buf();
            if let Err(e) = read_gray(&path) {
                log::warn!("skipping {}: {e}", path.display());
                warnings.push(format!("skipped {}: {e}", rel.display()));
                continue;
            }
            let bytes = fs::read(&path).map_err(|e| HarnessError::io(&path, e))?;
            hasher.update(rel.to_string_lossy().as_bytes());
            hasher.update([0]);
            hasher.update(Sha256::digest(&bytes));
            files.push(rel);
        }
        if files.is_empty() {
            return Err(HarnessError::ClassEmpty(name));
        }
        classes.push(CorpusClass {
            class_id: classes.len() as ClassId + 1,
            name,
            files,
        });
    }
    if classes.is_empty() {
        return Err(HarnessError::NoClasses(root.to_path_buf()));
    }
    Ok(Corpus {
        root: root.to_path_buf(),
        classes,
        checksum: hex::encode(hasher.finalize()),
        warnings,
    })
}
