//! Dataset scanning, stratified train/validation splitting and the
//! `path,label,split` manifest format.
//!
//! The expected layout is `root/{train,test}/{benign,malignant}/<files>`.
//! A root holding the class directories directly is read as all-train.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
    #[error("unknown class directory {0}")]
    UnknownClass(PathBuf),
    #[error("no image files found under {0}")]
    NoImages(PathBuf),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    Fraction(f64),
    #[error("class {label} would have no training items ({count} entries)")]
    EmptyClass { label: Label, count: usize },
    #[error("entry {0} is already assigned to the validation split")]
    AlreadySplit(String),
    #[error("duplicate manifest path {0}")]
    DuplicatePath(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("manifest: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Malignant,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Benign, Label::Malignant];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Malignant => "malignant",
        }
    }

    /// Class index used by the probe: benign = 0, malignant = 1.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "benign" => Ok(Label::Benign),
            "malignant" => Ok(Label::Malignant),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: Label,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            train_fraction: 0.75,
            seed,
        }
    }
}

const IMAGE_EXTENSIONS: [&str; 9] = [
    "ppm", "pgm", "pnm", "jpg", "jpeg", "png", "bmp", "tif", "tiff",
];

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if !hidden {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn scan_class_dir(
    dir: &Path,
    split: Split,
    out: &mut Vec<ManifestEntry>,
) -> Result<(), DatasetError> {
    let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let label: Label = name
        .parse()
        .map_err(|_| DatasetError::UnknownClass(dir.to_path_buf()))?;
    for path in read_dir_sorted(dir)? {
        if path.is_file() && is_image(&path) {
            out.push(ManifestEntry {
                path: path.to_string_lossy().into_owned(),
                label,
                split,
            });
        }
    }
    Ok(())
}

/// Lists every image under `root`, labelled by class directory, in
/// lexicographic path order.
pub fn scan_dataset(root: impl AsRef<Path>) -> Result<Vec<ManifestEntry>, DatasetError> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(DatasetError::MissingRoot(root.to_path_buf()));
    }
    let mut entries = Vec::new();
    for top in read_dir_sorted(root)? {
        if !top.is_dir() {
            continue;
        }
        let name = top.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let split = match name.to_ascii_lowercase().as_str() {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        };
        match split {
            Some(split) => {
                for class_dir in read_dir_sorted(&top)? {
                    if class_dir.is_dir() {
                        scan_class_dir(&class_dir, split, &mut entries)?;
                    }
                }
            }
            None => scan_class_dir(&top, Split::Train, &mut entries)?,
        }
    }
    if entries.is_empty() {
        return Err(DatasetError::NoImages(root.to_path_buf()));
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(entries)
}

/// Unbiased-enough bounded draw by 128-bit widening multiply.
fn bounded(rng: &mut Xoshiro256PlusPlus, n: usize) -> usize {
    ((u128::from(rng.next_u64()) * n as u128) >> 64) as usize
}

/// Stratified split of the `train` entries into train and validation.
///
/// Within each class (benign first, then malignant), entries are sorted by
/// path and shuffled by Fisher-Yates driven by xoshiro256++ seeded through
/// SplitMix64. The first `floor(n * train_fraction)` stay in train and the
/// rest become `val`. Test entries pass through untouched. The result is
/// sorted by path.
pub fn split_train_val(
    entries: &[ManifestEntry],
    cfg: &SplitConfig,
) -> Result<Vec<ManifestEntry>, DatasetError> {
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(DatasetError::Fraction(cfg.train_fraction));
    }
    if let Some(e) = entries.iter().find(|e| e.split == Split::Val) {
        return Err(DatasetError::AlreadySplit(e.path.clone()));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
    let mut out: Vec<ManifestEntry> = entries
        .iter()
        .filter(|e| e.split != Split::Train)
        .cloned()
        .collect();
    for label in Label::ALL {
        let mut class: Vec<ManifestEntry> = entries
            .iter()
            .filter(|e| e.split == Split::Train && e.label == label)
            .cloned()
            .collect();
        if class.is_empty() {
            continue;
        }
        class.sort_by(|a, b| a.path.cmp(&b.path));
        let n_train = (class.len() as f64 * cfg.train_fraction).floor() as usize;
        if n_train == 0 {
            return Err(DatasetError::EmptyClass {
                label,
                count: class.len(),
            });
        }
        for i in (1..class.len()).rev() {
            let j = bounded(&mut rng, i + 1);
            class.swap(i, j);
        }
        for (k, e) in class.iter_mut().enumerate() {
            e.split = if k < n_train {
                Split::Train
            } else {
                Split::Val
            };
        }
        out.extend(class);
    }
    if out.is_empty() {
        return Err(DatasetError::NoImages(PathBuf::new()));
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

/// Writes the manifest sorted by path, header `path,label,split`.
pub fn write_manifest<W: io::Write>(entries: &[ManifestEntry], out: W) -> Result<(), DatasetError> {
    let mut sorted: Vec<&ManifestEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.path.cmp(&b.path));
    let mut wr = csv::Writer::from_writer(out);
    for e in sorted {
        wr.serialize(e)?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_manifest<R: io::Read>(input: R) -> Result<Vec<ManifestEntry>, DatasetError> {
    let mut rd = csv::Reader::from_reader(input);
    let mut entries: Vec<ManifestEntry> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for rec in rd.deserialize() {
        let e: ManifestEntry = rec?;
        if !seen.insert(e.path.clone()) {
            return Err(DatasetError::DuplicatePath(e.path));
        }
        entries.push(e);
    }
    Ok(entries)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>, DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_manifest(io::BufReader::new(file))
}

pub fn save_manifest(
    path: impl AsRef<Path>,
    entries: &[ManifestEntry],
) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_manifest(entries, io::BufWriter::new(file))
}
