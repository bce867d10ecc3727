//! Kernel files: `{"order": k, "basis_dim": n, "entries": [[[i, j, ...], value], ...]}`
//! with zero-based indices. Only one entry per multi-index is stored; the
//! kernel is symmetric, so the order of indices inside an entry is free.

use std::path::Path;

use anyhow::{bail, Context};
use chaos_stein_core::chaos::SymmetricKernel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub order: usize,
    pub basis_dim: usize,
    pub entries: Vec<(Vec<usize>, f64)>,
}

impl KernelFile {
    pub fn from_kernel(f: &SymmetricKernel) -> Self {
        Self {
            order: f.order(),
            basis_dim: f.basis_dim(),
            entries: f.iter().map(|(idx, v)| (idx.entries().collect(), v)).collect(),
        }
    }

    pub fn to_kernel(&self) -> anyhow::Result<SymmetricKernel> {
        let mut seen = std::collections::BTreeSet::new();
        for (idx, _) in &self.entries {
            let mut key = idx.clone();
            key.sort_unstable();
            if !seen.insert(key) {
                bail!("multi-index {idx:?} appears more than once");
            }
        }
        Ok(SymmetricKernel::from_entries(self.order, self.basis_dim, self.entries.iter().cloned())?)
    }
}

pub fn to_string(f: &SymmetricKernel) -> String {
    serde_json::to_string_pretty(&KernelFile::from_kernel(f)).expect("kernel files always serialize")
}

pub fn from_str(s: &str) -> anyhow::Result<SymmetricKernel> {
    let file: KernelFile = serde_json::from_str(s).context("parsing kernel JSON")?;
    file.to_kernel()
}

pub fn read(path: &Path) -> anyhow::Result<SymmetricKernel> {
    let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    from_str(&s).with_context(|| format!("in {}", path.display()))
}

pub fn write(path: &Path, f: &SymmetricKernel) -> anyhow::Result<()> {
    std::fs::write(path, to_string(f) + "\n").with_context(|| format!("writing {}", path.display()))
}
