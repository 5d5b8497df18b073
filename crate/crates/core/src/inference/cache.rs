//! In-memory and on-disk cache of quantile tables.

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::coupling::{coupling_sample, CouplingLaw, QuantileTable};
use crate::error::{Error, Result};

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "SPOTVOL_CACHE_DIR";

/// Default Monte Carlo size of a quantile table.
pub const DEFAULT_TABLE_SIZE: usize = 1_000_000;
pub const DEFAULT_TABLE_SEED: u64 = 20_240_601;

/// Spacing of the β grid used for plug-in estimates.
pub const BETA_GRID_STEP: f64 = 0.005;

const MAGIC: &[u8; 8] = b"SVQTAB01";

/// `β` rounded to the nearest grid point.
pub fn beta_grid(beta: f64) -> f64 {
    (beta / BETA_GRID_STEP).round() / (1.0 / BETA_GRID_STEP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Key {
    kind: super::coupling::CouplingKind,
    beta: u64,
    p: u64,
    k: Option<usize>,
}

impl Key {
    fn of(law: &CouplingLaw) -> Self {
        Self { kind: law.kind, beta: law.beta.to_bits(), p: law.p.to_bits(), k: law.k }
    }
}

pub struct TableCache {
    mc_size: usize,
    seed: u64,
    dir: Option<PathBuf>,
    tables: Mutex<HashMap<Key, Arc<QuantileTable>>>,
}

impl TableCache {
    pub fn new(mc_size: usize, seed: u64) -> Self {
        Self { mc_size, seed, dir: None, tables: Mutex::new(HashMap::new()) }
    }

    /// Persist tables under `dir` (created on first write).
    pub fn with_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.dir = Some(dir.into());
        self
    }

    /// Use the directory from [`CACHE_DIR_ENV`] when it is set.
    pub fn with_env_dir(self) -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) if !d.is_empty() => self.with_dir(PathBuf::from(d)),
            _ => self,
        }
    }

    pub fn mc_size(&self) -> usize {
        self.mc_size
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn file_name(&self, law: &CouplingLaw) -> String {
        format!(
            "{}_b{:.6}_p{:.6}_k{}_n{}_s{}.bin",
            law.kind,
            law.beta,
            law.p,
            law.k.unwrap_or(0),
            self.mc_size,
            self.seed
        )
    }

    pub fn get(&self, law: &CouplingLaw) -> Result<Arc<QuantileTable>> {
        law.validate()?;
        let key = Key::of(law);
        if let Some(t) = self.tables.lock().expect("table cache poisoned").get(&key) {
            return Ok(t.clone());
        }
        let table = Arc::new(self.load_or_build(law)?);
        self.tables.lock().expect("table cache poisoned").entry(key).or_insert_with(|| table.clone());
        Ok(table)
    }

    fn load_or_build(&self, law: &CouplingLaw) -> Result<QuantileTable> {
        if let Some(dir) = &self.dir {
            let path = dir.join(self.file_name(law));
            if path.exists() {
                let sample = read_table(&path)?;
                if sample.len() == self.mc_size {
                    return QuantileTable::from_sorted(*law, self.seed, sample);
                }
            }
            let table = coupling_sample(*law, self.mc_size, self.seed)?;
            fs::create_dir_all(dir)?;
            write_table(&path, table.sorted_sample())?;
            return Ok(table);
        }
        coupling_sample(*law, self.mc_size, self.seed)
    }
}

impl Default for TableCache {
    fn default() -> Self {
        Self::new(DEFAULT_TABLE_SIZE, DEFAULT_TABLE_SEED)
    }
}

/// Write a sorted sample as `MAGIC | len (u64 LE) | values (f64 LE)`.
pub fn write_table(path: &Path, sample: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + 8 * sample.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(sample.len() as u64).to_le_bytes());
    for v in sample {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let tmp = path.with_extension("tmp");
    fs::File::create(&tmp)?.write_all(&buf)?;
    fs::rename(tmp, path)?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(Error::Format(format!("{} is not a quantile table", path.display())));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    if bytes.len() != 16 + 8 * len {
        return Err(Error::Format(format!("{} is truncated", path.display())));
    }
    Ok(bytes[16..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rounding() {
        assert_eq!(beta_grid(1.6), 1.6);
        assert_eq!(beta_grid(1.6024), 1.6);
        assert_eq!(beta_grid(1.6026), 1.605);
    }

    #[test]
    fn disk_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let law = CouplingLaw::fixed_k(false, 1.6, 1.0, 5).unwrap();
        let cache = TableCache::new(10_000, 4).with_dir(dir.path());
        let a = cache.get(&law).unwrap();
        let file = dir.path().join(cache.file_name(&law));
        assert!(file.exists());
        let fresh = TableCache::new(10_000, 4).with_dir(dir.path());
        let b = fresh.get(&law).unwrap();
        assert_eq!(a.sorted_sample(), b.sorted_sample());
        fs::write(&file, b"garbage").unwrap();
        assert!(TableCache::new(10_000, 4).with_dir(dir.path()).get(&law).is_err());
    }

    #[test]
    fn memory_cache_shares_tables() {
        let law = CouplingLaw::fixed_k(true, 1.6, 1.0, 4).unwrap();
        let cache = TableCache::new(10_000, 4);
        assert!(Arc::ptr_eq(&cache.get(&law).unwrap(), &cache.get(&law).unwrap()));
    }
}
