//! Deterministic CSV/JSON writers and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::study::{FigureDataset, SweepResult};
use crate::Result;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub k: i32,
    pub alpha: f64,
    pub re: f64,
    pub im: f64,
    pub residual: f64,
    pub grid_robust: bool,
}

pub const SPECTRUM_HEADER: &str = "k,alpha,re,im,residual,grid_robust";
pub const SWEEP_HEADER: &str = "alpha,sigma,psi,argmax_k";

pub fn spectrum_csv(rows: &[SpectrumRow]) -> String {
    let mut s = String::from(SPECTRUM_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.k, fmt_f64(r.alpha), fmt_f64(r.re), fmt_f64(r.im), fmt_f64(r.residual), r.grid_robust);
    }
    s
}

pub fn sweep_csv(res: &SweepResult) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for i in 0..res.alphas.len() {
        let _ = writeln!(s, "{},{},{},{}", fmt_f64(res.alphas[i]), fmt_f64(res.sigma[i]), fmt_f64(res.psi[i]), res.per_mode_argmax[i]);
    }
    s
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionRecord {
    pub k: i32,
    pub j: usize,
    pub center_re: f64,
    pub center_im: f64,
    pub radius: f64,
    pub delta: f64,
}

pub fn region_records(data: &FigureDataset) -> Vec<RegionRecord> {
    data.regions
        .iter()
        .map(|g| RegionRecord { k: g.mode, j: g.index, center_re: g.center.re, center_im: g.center.im, radius: g.radius, delta: g.delta })
        .collect()
}

/// Two-column numeric table with a header.
pub fn table_csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateRecord {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: serde_json::Value,
    pub toolkit_version: String,
    pub started: String,
    pub finished: String,
    pub gates: Vec<GateRecord>,
    pub files: Vec<FileRecord>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory that records every file it writes.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputSet { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_text(&mut self, name: &str, content: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), content.as_bytes())?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileRecord { path: name.to_string(), sha256: sha256_hex(content.as_bytes()), bytes: content.len() as u64 });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write_text(name, &s)
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    /// Writes the manifest (not itself listed in the inventory).
    pub fn finish(self, config: serde_json::Value, started: String, gates: Vec<GateRecord>) -> Result<RunManifest> {
        let manifest = RunManifest {
            config,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            started,
            finished: now(),
            gates,
            files: self.files,
        };
        let mut s = serde_json::to_string_pretty(&manifest)?;
        s.push('\n');
        std::fs::write(self.dir.join(MANIFEST_NAME), s)?;
        Ok(manifest)
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Re-hash every file in the manifest; returns the paths that do not match.
pub fn verify_manifest(dir: &Path, manifest: &RunManifest) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for f in &manifest.files {
        let bytes = std::fs::read(dir.join(&f.path))?;
        if sha256_hex(&bytes) != f.sha256 || bytes.len() as u64 != f.bytes {
            bad.push(f.path.clone());
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.5, 1.0 / 3.0, 6.02214076e23, 5e-324] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn spectrum_layout() {
        let rows = [SpectrumRow { k: 1, alpha: 0.0, re: -1.5, im: 0.0, residual: 1e-12, grid_robust: true }];
        let s = spectrum_csv(&rows);
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some(SPECTRUM_HEADER));
        assert!(lines.next().unwrap().starts_with("1,0.0000000000000000e0,-1.5000000000000000e0,"));
    }

    #[test]
    fn manifest_digests_match() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputSet::create(dir.path()).unwrap();
        out.write_text("a.csv", "x\n1\n").unwrap();
        let m = out.finish(serde_json::json!({}), now(), Vec::new()).unwrap();
        assert!(verify_manifest(dir.path(), &m).unwrap().is_empty());
        std::fs::write(dir.path().join("a.csv"), "x\n2\n").unwrap();
        assert_eq!(verify_manifest(dir.path(), &m).unwrap(), vec!["a.csv".to_string()]);
    }
}
