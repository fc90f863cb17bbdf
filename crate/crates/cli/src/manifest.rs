//! Dataset manifests: CSV with header `id,pts_path,image_path,label,split`.
//!
//! An empty `pts_path` marks a sample whose landmarks are absent; an empty
//! `label` marks an unlabeled sample. Paths resolve against the manifest's
//! directory.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use landmark_emotion::Emotion;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validate,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validate, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validate => "validate",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "validate" | "validation" | "val" => Ok(Split::Validate),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub pts_path: Option<PathBuf>,
    pub image_path: Option<PathBuf>,
    pub label: Option<Emotion>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Deserialize)]
struct Row {
    id: String,
    pts_path: String,
    image_path: String,
    label: String,
    split: String,
}

fn optional_path(base: &Path, raw: &str) -> Option<PathBuf> {
    let raw = raw.trim();
    (!raw.is_empty()).then(|| base.join(raw))
}

impl DatasetManifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| CliError::Manifest {
            line: 1,
            message: e.to_string(),
        })?;
        let expected = ["id", "pts_path", "image_path", "label", "split"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(CliError::Manifest {
                line: 1,
                message: format!("header must be {}", expected.join(",")),
            });
        }
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (n, record) in reader.deserialize::<Row>().enumerate() {
            let line = n + 2;
            let err = |message: String| CliError::Manifest { line, message };
            let row = record.map_err(|e| err(e.to_string()))?;
            if row.id.is_empty() {
                return Err(err("empty sample id".into()));
            }
            if !seen.insert(row.id.clone()) {
                return Err(CliError::DuplicateId(row.id));
            }
            let label = if row.label.is_empty() {
                None
            } else {
                Some(row.label.parse::<Emotion>().map_err(|e| err(e.to_string()))?)
            };
            entries.push(ManifestEntry {
                pts_path: optional_path(base, &row.pts_path),
                image_path: optional_path(base, &row.image_path),
                label,
                split: row.split.parse().map_err(err)?,
                id: row.id,
            });
        }
        Ok(DatasetManifest { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Writes the CSV form with paths relative to `base` where possible.
    pub fn to_csv(&self, base: &Path) -> Result<String, CliError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let rel = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.strip_prefix(base).unwrap_or(p).to_string_lossy().into_owned())
                .unwrap_or_default()
        };
        let io = |e: csv::Error| CliError::Manifest {
            line: 0,
            message: e.to_string(),
        };
        writer
            .write_record(["id", "pts_path", "image_path", "label", "split"])
            .map_err(io)?;
        for e in &self.entries {
            let label = e.label.map(|l| l.name().to_string()).unwrap_or_default();
            writer
                .write_record([
                    e.id.as_str(),
                    &rel(&e.pts_path),
                    &rel(&e.image_path),
                    &label,
                    e.split.name(),
                ])
                .map_err(io)?;
        }
        let bytes = writer.into_inner().map_err(|e| CliError::Manifest {
            line: 0,
            message: e.to_string(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "id,pts_path,image_path,label,split\n\
        a,pts/a.pts,,Happy,train\n\
        b,,img/b.pgm,sad,validate\n\
        c,pts/c.pts,,,test\n";

    #[test]
    fn parses_entries() {
        let m = DatasetManifest::parse(TEXT, Path::new("/d")).unwrap();
        assert_eq!(m.entries.len(), 3);
        assert_eq!(m.entries[0].pts_path, Some(PathBuf::from("/d/pts/a.pts")));
        assert_eq!(m.entries[1].pts_path, None);
        assert_eq!(m.entries[1].label, Some(Emotion::Sad));
        assert_eq!(m.entries[2].label, None);
        assert_eq!(m.split(Split::Test).count(), 1);
    }

    #[test]
    fn duplicate_id_is_fatal() {
        let text = format!("{TEXT}a,pts/x.pts,,Fear,test\n");
        assert!(matches!(DatasetManifest::parse(&text, Path::new(".")), Err(CliError::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn rejects_bad_header_label_and_split() {
        assert!(DatasetManifest::parse("id,pts,label\n", Path::new(".")).is_err());
        let bad_label = "id,pts_path,image_path,label,split\nx,a.pts,,Bored,train\n";
        assert!(matches!(DatasetManifest::parse(bad_label, Path::new(".")), Err(CliError::Manifest { line: 2, .. })));
        let bad_split = "id,pts_path,image_path,label,split\nx,a.pts,,Happy,dev\n";
        assert!(DatasetManifest::parse(bad_split, Path::new(".")).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = DatasetManifest::parse(TEXT, Path::new("/d")).unwrap();
        let text = m.to_csv(Path::new("/d")).unwrap();
        assert_eq!(DatasetManifest::parse(&text, Path::new("/d")).unwrap(), m);
    }
}
