//! CSV and JSON persistence of return series and simulated paths.
//!
//! Every numeric column is written with Rust's shortest round-trip float
//! formatting, so reading a file back reproduces the in-memory values
//! bit for bit.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{ModelConfig, ReturnSeries, SimulatedPath};

/// How the value column of an input CSV is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Decide from the header, or from the column count when headerless.
    Auto,
    /// Log-price levels; returns are their first differences.
    Price,
    Increment,
}

impl std::str::FromStr for InputKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(InputKind::Auto),
            "price" => Ok(InputKind::Price),
            "increment" | "return" => Ok(InputKind::Increment),
            other => Err(Error::Parameter(format!("unknown input kind '{other}'"))),
        }
    }
}

/// Parsed two-column table.
struct Table {
    header: Option<Vec<String>>,
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut header = None;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => header = Some(rec.iter().map(|s| s.to_ascii_lowercase()).collect()),
            Err(e) => return Err(Error::Format(format!("{} line {}: {e}", path.display(), i + 1))),
        }
    }
    if rows.is_empty() {
        return Err(Error::Format(format!("{} has no data rows", path.display())));
    }
    Ok(Table { header, rows })
}

/// Equal spacing of a time column, checked to relative 1e-6. A spacing
/// within 1e-9 of `1/m` for an integer `m` is snapped to it, so files written
/// by [`write_returns`] read back with the exact mesh.
fn mesh_from_times(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Format("need at least two time stamps to infer the mesh".into()));
    }
    let d = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(d > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - d).abs() > 1e-6 * d) {
        return Err(Error::Format("time column is not equally spaced".into()));
    }
    let m = (1.0 / d).round();
    if m >= 1.0 && ((1.0 / m) - d).abs() <= 1e-9 * d {
        return Ok(1.0 / m);
    }
    Ok(d)
}

/// Read a return series.
///
/// Accepted layouts: one column of increments, or `(time, value)` where the
/// value is a price unless the header names it `increment`/`return`. An
/// explicit `kind` overrides detection. `delta_n` is required when there is
/// no time column and otherwise must agree with it.
pub fn read_returns(path: &Path, kind: InputKind, delta_n: Option<f64>) -> Result<ReturnSeries> {
    let table = read_table(path)?;
    let ncol = table.rows[0].len();
    let (times, values): (Option<Vec<f64>>, Vec<f64>) = match ncol {
        1 => (None, table.rows.iter().map(|r| r[0]).collect()),
        2 => (Some(table.rows.iter().map(|r| r[0]).collect()), table.rows.iter().map(|r| r[1]).collect()),
        n => return Err(Error::Format(format!("expected 1 or 2 columns, found {n}"))),
    };
    let kind = match kind {
        InputKind::Auto => match (&table.header, ncol) {
            (Some(h), _) if h.iter().any(|c| c.contains("incr") || c.contains("return")) => InputKind::Increment,
            (Some(h), _) if h.iter().any(|c| c.contains("price")) => InputKind::Price,
            (_, 1) => InputKind::Increment,
            _ => InputKind::Price,
        },
        k => k,
    };
    let increments = match kind {
        InputKind::Price => values.windows(2).map(|w| w[1] - w[0]).collect(),
        _ => values,
    };
    let mesh = match (times.as_deref(), delta_n) {
        (Some(t), given) => {
            let d = mesh_from_times(t)?;
            match given {
                Some(g) if (g - d).abs() > 1e-6 * d => {
                    return Err(Error::Parameter(format!("--delta-n {g} disagrees with the time column ({d})")))
                }
                Some(g) => g,
                None => d,
            }
        }
        (None, Some(g)) => g,
        (None, None) => return Err(Error::Parameter("a mesh (delta_n) is required without a time column".into())),
    };
    ReturnSeries::new(increments, mesh)
}

fn write_two_column(path: &Path, header: &str, times: impl Iterator<Item = f64>, values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for (t, v) in times.zip(values) {
        writeln!(w, "{t},{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// `time,increment` with the time stamp of each interval's right end.
pub fn write_returns(path: &Path, r: &ReturnSeries) -> Result<()> {
    let d = r.delta_n();
    write_two_column(path, "time,increment", (1..=r.len()).map(|i| i as f64 * d), r.increments())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSidecar {
    pub config: ModelConfig,
    pub replicate: u64,
    pub seed: u64,
    pub crate_version: String,
    pub files: PathFiles,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathFiles {
    pub returns: String,
    pub x: String,
    pub sigma: String,
    pub drift: String,
    pub sigma_obs: String,
}

impl PathFiles {
    fn for_stem(stem: &str) -> Self {
        Self {
            returns: format!("{stem}_returns.csv"),
            x: format!("{stem}_x.csv"),
            sigma: format!("{stem}_sigma.csv"),
            drift: format!("{stem}_drift.csv"),
            sigma_obs: format!("{stem}_sigma_obs.csv"),
        }
    }
}

/// Write `<stem>_{returns,x,sigma,drift,sigma_obs}.csv` and `<stem>.json`
/// into `dir`. Returns the sidecar path.
pub fn write_path(dir: &Path, stem: &str, path: &SimulatedPath) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let files = PathFiles::for_stem(stem);
    write_returns(&dir.join(&files.returns), &path.returns)?;
    let ft = || path.fine_times.iter().copied();
    write_two_column(&dir.join(&files.x), "time,value", ft(), &path.x_fine)?;
    write_two_column(&dir.join(&files.sigma), "time,value", ft(), &path.sigma_fine)?;
    write_two_column(&dir.join(&files.drift), "time,value", ft(), &path.b_fine)?;
    let d = path.returns.delta_n();
    write_two_column(
        &dir.join(&files.sigma_obs),
        "time,value",
        (0..path.sigma_at_obs.len()).map(|i| i as f64 * d),
        &path.sigma_at_obs,
    )?;
    let sidecar = PathSidecar {
        config: path.config.clone(),
        replicate: path.replicate,
        seed: path.config.seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        files,
    };
    let json_path = dir.join(format!("{stem}.json"));
    fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(json_path)
}

fn read_value_column(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = read_table(path)?;
    if t.rows[0].len() != 2 {
        return Err(Error::Format(format!("{}: expected (time, value) columns", path.display())));
    }
    Ok(t.rows.into_iter().map(|r| (r[0], r[1])).unzip())
}

/// Inverse of [`write_path`], given the sidecar JSON.
pub fn read_path(sidecar_path: &Path) -> Result<SimulatedPath> {
    let sidecar: PathSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path)?)?;
    let dir = sidecar_path.parent().unwrap_or(Path::new("."));
    let f = &sidecar.files;
    let returns = read_returns(&dir.join(&f.returns), InputKind::Increment, Some(sidecar.config.obs_dt))?;
    let (fine_times, x_fine) = read_value_column(&dir.join(&f.x))?;
    let (_, sigma_fine) = read_value_column(&dir.join(&f.sigma))?;
    let (_, b_fine) = read_value_column(&dir.join(&f.drift))?;
    let (_, sigma_at_obs) = read_value_column(&dir.join(&f.sigma_obs))?;
    Ok(SimulatedPath {
        config: sidecar.config,
        replicate: sidecar.replicate,
        fine_times,
        x_fine,
        sigma_fine,
        b_fine,
        returns,
        sigma_at_obs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{simulate_path, ModelConfig};

    #[test]
    fn path_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ModelConfig::standard(1.6, 31).truncated(12);
        let path = simulate_path(&cfg).unwrap();
        let json = write_path(dir.path(), "sim", &path).unwrap();
        let back = read_path(&json).unwrap();
        assert_eq!(back, path);
    }

    #[test]
    fn detects_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        fs::write(&p, "0.1\n-0.2\n0.3\n").unwrap();
        let r = read_returns(&p, InputKind::Auto, Some(0.5)).unwrap();
        assert_eq!(r.increments(), &[0.1, -0.2, 0.3]);
        assert!(read_returns(&p, InputKind::Auto, None).is_err());

        fs::write(&p, "time,price\n0,1.0\n1,1.5\n2,1.25\n").unwrap();
        let r = read_returns(&p, InputKind::Auto, None).unwrap();
        assert_eq!(r.increments(), &[0.5, -0.25]);
        assert_eq!(r.delta_n(), 1.0);

        fs::write(&p, "0,1.0\n1,1.5\n2,1.25\n").unwrap();
        assert_eq!(read_returns(&p, InputKind::Auto, None).unwrap().len(), 2);
        assert_eq!(read_returns(&p, InputKind::Increment, None).unwrap().len(), 3);

        fs::write(&p, "time,increment\n1,0.5\n2,-0.25\n").unwrap();
        assert_eq!(read_returns(&p, InputKind::Auto, None).unwrap().increments(), &[0.5, -0.25]);
        assert!(read_returns(&p, InputKind::Auto, Some(0.3)).is_err());

        fs::write(&p, "time,increment\n1,0.5\n3,-0.25\n4,0.1\n").unwrap();
        assert!(matches!(read_returns(&p, InputKind::Auto, None), Err(Error::Format(_))));
        fs::write(&p, "1,2,3\n").unwrap();
        assert!(read_returns(&p, InputKind::Auto, Some(1.0)).is_err());
        fs::write(&p, "x\n1\nfoo\n").unwrap();
        assert!(read_returns(&p, InputKind::Auto, Some(1.0)).is_err());
    }

    #[test]
    fn returns_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let r = ReturnSeries::new(vec![0.1 / 3.0, -1e-17, 2.5e8, 0.0], 1.0 / 390.0).unwrap();
        write_returns(&p, &r).unwrap();
        let back = read_returns(&p, InputKind::Auto, None).unwrap();
        assert_eq!(back.increments(), r.increments());
    }
}
