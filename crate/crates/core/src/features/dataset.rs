//! Dataset triplet consumed by the training code.
//!
//! A dataset `<name>` in directory `dir` consists of
//!
//! * `<name>.manifest.json`: shapes, axis names, field order, channel
//!   points, seeds and code identifiers;
//! * `<name>.feat.bin`: per item, every feature stream in manifest order,
//!   each a row-major `tokens x features` block of little-endian `f32`;
//! * `<name>.tgt.bin`: per item, a fixed-size record holding the trial
//!   index (`u64` LE), the channel point index (`u32` LE), the target
//!   segments and then the flag segments, one byte per entry.
//!
//! Masks that do not vary between items are stored in the manifest as
//! strings of `0`/`1`, one per row.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AttentionMask, TensorLayout};
use crate::channel::IdsChannelParams;

pub const DATASET_VERSION: u32 = 1;

const RECORD_PREFIX: usize = 12;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("item {item}: {what} expected {expected}, got {got}")]
    Shape {
        item: usize,
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("unsupported dataset version {0}")]
    Version(u32),
    #[error("{path} holds {got} bytes, manifest implies {expected}")]
    Size {
        path: PathBuf,
        expected: u64,
        got: u64,
    },
    #[error("mask {0} is malformed")]
    Mask(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub name: String,
    pub layout: TensorLayout,
}

impl StreamSpec {
    pub fn floats(&self) -> usize {
        self.layout.token_axis.size * self.layout.features()
    }
}

/// Named run of bytes inside a target record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub len: usize,
}

impl Segment {
    pub fn new(name: &str, len: usize) -> Self {
        Segment {
            name: name.to_string(),
            len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedMask {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<String>,
}

impl NamedMask {
    pub fn new(name: &str, mask: &AttentionMask) -> Self {
        NamedMask {
            name: name.to_string(),
            rows: mask.rows,
            cols: mask.cols,
            data: mask.to_strings(),
        }
    }

    pub fn mask(&self) -> Result<AttentionMask, DatasetError> {
        AttentionMask::from_strings(&self.data)
            .filter(|m| m.rows == self.rows && m.cols == self.cols)
            .ok_or_else(|| DatasetError::Mask(self.name.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeIds {
    pub outer: String,
    pub inner: String,
}

/// Everything about a dataset except its item count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    /// `marker`, `marker_multi`, `conv` or `ecct`.
    pub kind: String,
    pub field_order: u32,
    pub streams: Vec<StreamSpec>,
    pub targets: Vec<Segment>,
    pub flags: Vec<Segment>,
    pub masks: Vec<NamedMask>,
    /// Channel points; each item records the index of the one it used.
    pub channels: Vec<IdsChannelParams>,
    /// Base seed; item `t` of point `p` is regenerated from `(seed, p, trial)`.
    pub seed: u64,
    pub codes: CodeIds,
    #[serde(default)]
    pub extra: serde_json::Value,
}

impl DatasetHeader {
    pub fn feature_floats(&self) -> usize {
        self.streams.iter().map(StreamSpec::floats).sum()
    }

    pub fn target_len(&self) -> usize {
        self.targets.iter().map(|s| s.len).sum()
    }

    pub fn flag_len(&self) -> usize {
        self.flags.iter().map(|s| s.len).sum()
    }

    pub fn record_bytes(&self) -> usize {
        RECORD_PREFIX + self.target_len() + self.flag_len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub name: String,
    pub count: usize,
    pub feature_dtype: String,
    pub feature_order: String,
    pub feature_bytes_per_item: usize,
    pub target_record: Vec<Segment>,
    pub target_bytes_per_item: usize,
    #[serde(flatten)]
    pub header: DatasetHeader,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub trial: u64,
    pub point: u32,
    /// One flattened block per stream.
    pub features: Vec<Vec<f32>>,
    pub targets: Vec<u8>,
    pub flags: Vec<u8>,
}

pub struct DatasetPaths {
    pub manifest: PathBuf,
    pub features: PathBuf,
    pub targets: PathBuf,
}

pub fn dataset_paths(dir: &Path, name: &str) -> DatasetPaths {
    DatasetPaths {
        manifest: dir.join(format!("{name}.manifest.json")),
        features: dir.join(format!("{name}.feat.bin")),
        targets: dir.join(format!("{name}.tgt.bin")),
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Streaming writer; the manifest is written by [`DatasetWriter::finish`].
pub struct DatasetWriter {
    name: String,
    header: DatasetHeader,
    paths: DatasetPaths,
    feat: BufWriter<File>,
    tgt: BufWriter<File>,
    count: usize,
    buf: Vec<u8>,
}

impl DatasetWriter {
    pub fn create(dir: &Path, name: &str, header: DatasetHeader) -> Result<Self, DatasetError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let paths = dataset_paths(dir, name);
        let feat = BufWriter::new(File::create(&paths.features).map_err(io_err(&paths.features))?);
        let tgt = BufWriter::new(File::create(&paths.targets).map_err(io_err(&paths.targets))?);
        Ok(DatasetWriter {
            name: name.to_string(),
            header,
            paths,
            feat,
            tgt,
            count: 0,
            buf: Vec::new(),
        })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    pub fn push(&mut self, item: &DatasetItem) -> Result<(), DatasetError> {
        let idx = self.count;
        let shape = |what: &str, expected: usize, got: usize| DatasetError::Shape {
            item: idx,
            what: what.to_string(),
            expected,
            got,
        };
        if item.features.len() != self.header.streams.len() {
            return Err(shape(
                "feature streams",
                self.header.streams.len(),
                item.features.len(),
            ));
        }
        for (s, f) in self.header.streams.iter().zip(&item.features) {
            if f.len() != s.floats() {
                return Err(shape(&format!("stream {}", s.name), s.floats(), f.len()));
            }
        }
        if item.targets.len() != self.header.target_len() {
            return Err(shape(
                "targets",
                self.header.target_len(),
                item.targets.len(),
            ));
        }
        if item.flags.len() != self.header.flag_len() {
            return Err(shape("flags", self.header.flag_len(), item.flags.len()));
        }
        self.buf.clear();
        for v in item.features.iter().flatten() {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
        self.feat
            .write_all(&self.buf)
            .map_err(io_err(&self.paths.features))?;
        self.buf.clear();
        self.buf.extend_from_slice(&item.trial.to_le_bytes());
        self.buf.extend_from_slice(&item.point.to_le_bytes());
        self.buf.extend_from_slice(&item.targets);
        self.buf.extend_from_slice(&item.flags);
        self.tgt
            .write_all(&self.buf)
            .map_err(io_err(&self.paths.targets))?;
        self.count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<Manifest, DatasetError> {
        self.feat.flush().map_err(io_err(&self.paths.features))?;
        self.tgt.flush().map_err(io_err(&self.paths.targets))?;
        let mut record = vec![
            Segment::new("trial_u64le", 8),
            Segment::new("point_u32le", 4),
        ];
        record.extend(self.header.targets.iter().cloned());
        record.extend(self.header.flags.iter().cloned());
        let manifest = Manifest {
            version: DATASET_VERSION,
            name: self.name.clone(),
            count: self.count,
            feature_dtype: "f32le".into(),
            feature_order: "row-major".into(),
            feature_bytes_per_item: self.header.feature_floats() * 4,
            target_record: record,
            target_bytes_per_item: self.header.record_bytes(),
            header: self.header.clone(),
        };
        let text =
            serde_json::to_string_pretty(&manifest).map_err(|source| DatasetError::Manifest {
                path: self.paths.manifest.clone(),
                source,
            })?;
        std::fs::write(&self.paths.manifest, text).map_err(io_err(&self.paths.manifest))?;
        Ok(manifest)
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|source| DatasetError::Manifest {
        path: path.to_path_buf(),
        source,
    })?;
    if m.version != DATASET_VERSION {
        return Err(DatasetError::Version(m.version));
    }
    Ok(m)
}

/// Reads a whole dataset back into memory.
pub fn read_dataset(dir: &Path, name: &str) -> Result<(Manifest, Vec<DatasetItem>), DatasetError> {
    let paths = dataset_paths(dir, name);
    let m = read_manifest(&paths.manifest)?;
    let h = &m.header;
    let check = |path: &Path, per_item: usize| -> Result<(), DatasetError> {
        let got = std::fs::metadata(path).map_err(io_err(path))?.len();
        let expected = (per_item * m.count) as u64;
        if got != expected {
            return Err(DatasetError::Size {
                path: path.to_path_buf(),
                expected,
                got,
            });
        }
        Ok(())
    };
    check(&paths.features, h.feature_floats() * 4)?;
    check(&paths.targets, h.record_bytes())?;
    let mut feat = BufReader::new(File::open(&paths.features).map_err(io_err(&paths.features))?);
    let mut tgt = BufReader::new(File::open(&paths.targets).map_err(io_err(&paths.targets))?);
    let mut fbuf = vec![0u8; h.feature_floats() * 4];
    let mut tbuf = vec![0u8; h.record_bytes()];
    let mut items = Vec::with_capacity(m.count);
    for _ in 0..m.count {
        feat.read_exact(&mut fbuf)
            .map_err(io_err(&paths.features))?;
        tgt.read_exact(&mut tbuf).map_err(io_err(&paths.targets))?;
        let mut floats = fbuf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        let features = h
            .streams
            .iter()
            .map(|s| floats.by_ref().take(s.floats()).collect())
            .collect();
        let trial = u64::from_le_bytes(tbuf[..8].try_into().expect("8 bytes"));
        let point = u32::from_le_bytes(tbuf[8..12].try_into().expect("4 bytes"));
        let t_end = RECORD_PREFIX + h.target_len();
        items.push(DatasetItem {
            trial,
            point,
            features,
            targets: tbuf[RECORD_PREFIX..t_end].to_vec(),
            flags: tbuf[t_end..].to_vec(),
        });
    }
    Ok((m, items))
}
