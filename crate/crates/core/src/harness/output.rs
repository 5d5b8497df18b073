use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CoverageReport, HistogramComparison};
use crate::error::Result;

/// Everything needed to rerun an experiment. Holds no timestamps or host
/// details so that reruns produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub crate_version: String,
    pub seed: u64,
    /// Full configuration, defaults included.
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(experiment: &str, seed: u64, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            experiment: experiment.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: serde_json::to_value(config)?,
            outputs: Vec::new(),
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn histogram_file_name(h: &HistogramComparison) -> String {
    format!("histograms_{}_{}.csv", h.p, h.k)
}

/// One `histograms_<p>_<k>.csv` per comparison. Returns the written paths.
pub fn write_histograms(dir: &Path, hists: &[HistogramComparison]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(hists.len());
    for h in hists {
        let path = dir.join(histogram_file_name(h));
        let mut w = create(&path)?;
        writeln!(w, "bin_left,bin_right,finite,fixed_k,large_k")?;
        for (i, edge) in h.bins.windows(2).enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                edge[0], edge[1], h.finite_sample_density[i], h.fixed_k_limit_density[i], h.large_k_limit_density[i]
            )?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

pub fn write_ks_table(path: &Path, hists: &[HistogramComparison]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "beta,p,k,replications,regime,ks_fixed,ks_large")?;
    for h in hists {
        let regime = serde_json::to_value(h.regime)?;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            h.beta,
            h.p,
            h.k,
            h.replications,
            regime.as_str().unwrap_or_default(),
            h.ks_fixed,
            h.ks_large
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_coverage(path: &Path, reports: &[CoverageReport]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "method,p,k,nominal,empirical,mc_se,mean_width,replications")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.method.label(),
            r.p,
            r.k,
            r.nominal,
            r.empirical,
            r.mc_se,
            r.mean_width,
            r.replications
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::histogram::LargeKRegime;

    #[test]
    fn histogram_csv_layout() {
        let h = HistogramComparison {
            p: 0.6,
            k: 5,
            beta: 1.6,
            replications: 100,
            regime: LargeKRegime::Gaussian,
            bins: vec![0.0, 0.5, 1.0],
            finite_sample_density: vec![1.0, 1.0],
            fixed_k_limit_density: vec![0.5, 1.5],
            large_k_limit_density: vec![1.2, 0.8],
            ks_fixed: 0.01,
            ks_large: 0.1,
            outside_fraction: 0.002,
        };
        let dir = tempfile::tempdir().unwrap();
        let files = write_histograms(dir.path(), std::slice::from_ref(&h)).unwrap();
        assert!(files[0].ends_with("histograms_0.6_5.csv"));
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text, "bin_left,bin_right,finite,fixed_k,large_k\n0,0.5,1,0.5,1.2\n0.5,1,1,1.5,0.8\n");
        let ks = dir.path().join("ks_table.csv");
        write_ks_table(&ks, &[h]).unwrap();
        assert!(std::fs::read_to_string(ks).unwrap().contains("1.6,0.6,5,100,gaussian,0.01,0.1"));
    }
}
