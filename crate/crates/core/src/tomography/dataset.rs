//! Dataset container.
//!
//! Binary layout: the 8-byte magic [`DATASET_MAGIC`], the header length as a
//! little-endian `u64`, a JSON header `{n_modes, ordering, settings, counts}`,
//! then for each setting `counts[k] x n_modes` little-endian `f64` values, one
//! row per joint outcome.
//!
//! CSV layout: a directory with `plan.json` (the settings) and one
//! `setting-XX.csv` per setting with columns `mode1, ..., moden`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::plan::MeasurementSetting;
use crate::error::{Error, Result};
use crate::io::ORDERING;

pub const DATASET_MAGIC: &[u8; 8] = b"BECVQD01";

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureDataset {
    n_modes: usize,
    settings: Vec<MeasurementSetting>,
    /// Row-major `count x n_modes` per setting.
    samples: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    n_modes: usize,
    ordering: String,
    settings: Vec<MeasurementSetting>,
    counts: Vec<usize>,
}

impl QuadratureDataset {
    pub fn new(n_modes: usize, settings: Vec<MeasurementSetting>, samples: Vec<Vec<f64>>) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::invalid("dataset needs at least one mode"));
        }
        if settings.len() != samples.len() {
            return Err(Error::invalid(format!("{} settings but {} sample blocks", settings.len(), samples.len())));
        }
        for (s, block) in settings.iter().zip(&samples) {
            if s.n_modes() != n_modes {
                return Err(Error::invalid(format!(
                    "setting `{}` has {} angles, expected {n_modes}",
                    s.label,
                    s.n_modes()
                )));
            }
            if block.len() % n_modes != 0 {
                return Err(Error::invalid(format!("sample block of `{}` is not a whole number of rows", s.label)));
            }
        }
        Ok(QuadratureDataset { n_modes, settings, samples })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn settings(&self) -> &[MeasurementSetting] {
        &self.settings
    }

    /// Row-major samples of setting `k`.
    pub fn samples(&self, k: usize) -> &[f64] {
        &self.samples[k]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.len() / self.n_modes).collect()
    }

    pub fn total_count(&self) -> usize {
        self.counts().iter().sum()
    }

    /// All settings carry the same number of samples.
    pub fn is_balanced(&self) -> bool {
        self.counts().windows(2).all(|w| w[0] == w[1])
    }

    /// Samples of one mode within one setting.
    pub fn channel(&self, setting: usize, mode: usize) -> Vec<f64> {
        self.samples[setting].iter().skip(mode).step_by(self.n_modes).copied().collect()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        let header = serde_json::to_vec(&Header {
            n_modes: self.n_modes,
            ordering: ORDERING.into(),
            settings: self.settings.clone(),
            counts: self.counts(),
        })?;
        w.write_all(DATASET_MAGIC)?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        for block in &self.samples {
            for v in block {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| Error::format("magic", "file too short"))?;
        if &magic != DATASET_MAGIC {
            return Err(Error::format("magic", "not a quadrature dataset"));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len).map_err(|_| Error::format("header", "file too short"))?;
        let len = u64::from_le_bytes(len) as usize;
        let mut header = vec![0u8; len];
        r.read_exact(&mut header).map_err(|_| Error::format("header", "truncated"))?;
        let header: Header = serde_json::from_slice(&header).map_err(|e| Error::format("header", e.to_string()))?;
        if header.ordering != ORDERING {
            return Err(Error::format("ordering", format!("must be \"{ORDERING}\"")));
        }
        if header.counts.len() != header.settings.len() {
            return Err(Error::format("counts", "one count per setting required"));
        }
        let mut samples = Vec::with_capacity(header.counts.len());
        let mut buf = [0u8; 8];
        for (k, &count) in header.counts.iter().enumerate() {
            let mut block = Vec::with_capacity(count * header.n_modes);
            for _ in 0..count * header.n_modes {
                r.read_exact(&mut buf).map_err(|_| Error::format("samples", format!("block {} truncated", k + 1)))?;
                block.push(f64::from_le_bytes(buf));
            }
            samples.push(block);
        }
        if r.read(&mut buf)? != 0 {
            return Err(Error::format("samples", "trailing data after the last block"));
        }
        Self::new(header.n_modes, header.settings, samples)
    }

    fn csv_name(k: usize) -> String {
        format!("setting-{:02}.csv", k + 1)
    }

    pub fn write_csv_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("plan.json"), serde_json::to_string_pretty(&self.settings)? + "\n")?;
        for (k, block) in self.samples.iter().enumerate() {
            let mut w = csv::Writer::from_path(dir.join(Self::csv_name(k))).map_err(csv_error)?;
            w.write_record((1..=self.n_modes).map(|m| format!("mode{m}"))).map_err(csv_error)?;
            for row in block.chunks_exact(self.n_modes) {
                w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_error)?;
            }
            w.flush()?;
        }
        Ok(())
    }

    /// Reads `plan.json` and the per-setting CSV files from `dir`.
    pub fn read_csv_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let settings: Vec<MeasurementSetting> = serde_json::from_str(&std::fs::read_to_string(dir.join("plan.json"))?)
            .map_err(|e| Error::format("plan.json", e.to_string()))?;
        let paths: Vec<PathBuf> = (0..settings.len()).map(|k| dir.join(Self::csv_name(k))).collect();
        Self::from_csv(settings, &paths)
    }

    /// One CSV file per setting, one column per mode, with a header row.
    pub fn from_csv(settings: Vec<MeasurementSetting>, paths: &[PathBuf]) -> Result<Self> {
        if settings.len() != paths.len() {
            return Err(Error::invalid(format!("{} settings but {} CSV files", settings.len(), paths.len())));
        }
        let n = settings.first().map(|s| s.n_modes()).ok_or_else(|| Error::invalid("no settings"))?;
        let mut samples = Vec::with_capacity(paths.len());
        for path in paths {
            let field = path.display().to_string();
            let mut rdr = csv::Reader::from_path(path).map_err(csv_error)?;
            let mut block = Vec::new();
            for (line, rec) in rdr.records().enumerate() {
                let rec = rec.map_err(csv_error)?;
                if rec.len() != n {
                    return Err(Error::format(
                        &field,
                        format!("row {} has {} columns, expected {n}", line + 2, rec.len()),
                    ));
                }
                for v in rec.iter() {
                    block.push(
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::format(&field, format!("row {}: `{v}` is not a number", line + 2)))?,
                    );
                }
            }
            samples.push(block);
        }
        Self::new(n, settings, samples)
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::format("csv", format!("{other:?}")),
    }
}
