//! Tab-separated pair list: `source<TAB>target-rgb<TAB>target-raw`, one pair per line,
//! no header. Relative paths resolve against the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub source: PathBuf,
    pub target_rgb: PathBuf,
    pub target_raw: PathBuf,
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .from_writer(Vec::new());
    for e in entries {
        let fields = [&e.source, &e.target_rgb, &e.target_raw].map(|p| p.to_string_lossy().into_owned());
        if fields.iter().any(|f| f.contains('\t') || f.contains('\n')) {
            return Err(CliError::Data(format!(
                "path {:?} cannot be stored in a TSV manifest",
                fields
            )));
        }
        w.write_record(&fields).map_err(|e| CliError::csv(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Reads the manifest and resolves every path. Fails if any referenced file is missing.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let text = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .flexible(false)
        .from_reader(text.as_slice());
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        if rec.len() != 3 {
            return Err(CliError::Data(format!(
                "{}: line {} has {} fields, expected 3",
                path.display(),
                i + 1,
                rec.len()
            )));
        }
        let resolve = |s: &str| {
            let p = PathBuf::from(s);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let entry = ManifestEntry {
            source: resolve(&rec[0]),
            target_rgb: resolve(&rec[1]),
            target_raw: resolve(&rec[2]),
        };
        for p in [&entry.source, &entry.target_rgb, &entry.target_raw] {
            if !p.is_file() {
                return Err(CliError::Data(format!(
                    "manifest line {}: missing file {}",
                    i + 1,
                    p.display()
                )));
            }
        }
        out.push(entry);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a.ppm", "b.ppm", "c.raw"] {
            fs::write(dir.path().join(name), b"x").unwrap();
        }
        let entries = vec![ManifestEntry {
            source: "a.ppm".into(),
            target_rgb: "b.ppm".into(),
            target_raw: "c.raw".into(),
        }];
        let path = dir.path().join("manifest.tsv");
        write_manifest(&path, &entries).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a.ppm\tb.ppm\tc.raw\n");
        let back = read_manifest(&path).unwrap();
        assert_eq!(back[0].source, dir.path().join("a.ppm"));
    }

    #[test]
    fn missing_files_and_bad_rows_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tsv");
        fs::write(&path, "a\tb\tc\n").unwrap();
        assert_eq!(read_manifest(&path).unwrap_err().exit_code(), 3);
        fs::write(&path, "a\tb\n").unwrap();
        assert_eq!(read_manifest(&path).unwrap_err().exit_code(), 3);
        fs::write(&path, "").unwrap();
        assert!(read_manifest(&path).unwrap().is_empty());
    }
}
