//! Raster ingestion, labeled-signature extraction and per-band standardization.
//!
//! Cubes are read from a small subset of the ENVI format: a text header of
//! `key = value` lines next to a raw band-sequential (BSQ) binary file.
//! Supported sample types are int16 (`data type = 2`), float32 (`4`) and
//! uint16 (`12`), in either byte order.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Floor applied to per-band standard deviations.
pub const STDDEV_FLOOR: f64 = 1e-8;

/// Hyperspectral cube in band-sequential order: all of band 0, then band 1, ...
/// Within a band, pixels are stored line by line.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    lines: usize,
    samples: usize,
    bands: usize,
    values: Vec<f64>,
}

impl SpectralCube {
    pub fn new(lines: usize, samples: usize, bands: usize, values: Vec<f64>) -> Result<Self> {
        if lines == 0 || samples == 0 || bands == 0 {
            return Err(Error::invalid("cube dimensions must be positive"));
        }
        let expected = lines * samples * bands;
        if values.len() != expected {
            return Err(Error::invalid(format!(
                "cube holds {} values, expected {lines}x{samples}x{bands} = {expected}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::format(format!(
                "non-finite cube value at offset {i}"
            )));
        }
        Ok(Self {
            lines,
            samples,
            bands,
            values,
        })
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn pixel_count(&self) -> usize {
        self.lines * self.samples
    }

    /// Raw BSQ values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Spectral signature of the pixel at flat raster offset `pixel`.
    pub fn signature(&self, pixel: usize) -> Vec<f64> {
        let n = self.pixel_count();
        (0..self.bands)
            .map(|b| self.values[b * n + pixel])
            .collect()
    }
}

/// Ground-truth class map. Label 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRaster {
    lines: usize,
    samples: usize,
    labels: Vec<u32>,
    num_classes: u32,
}

impl LabelRaster {
    pub fn new(lines: usize, samples: usize, labels: Vec<u32>) -> Result<Self> {
        if lines == 0 || samples == 0 {
            return Err(Error::invalid("raster dimensions must be positive"));
        }
        if labels.len() != lines * samples {
            return Err(Error::invalid(format!(
                "raster holds {} labels, expected {}",
                labels.len(),
                lines * samples
            )));
        }
        let num_classes = labels.iter().copied().max().unwrap_or(0);
        Ok(Self {
            lines,
            samples,
            labels,
            num_classes,
        })
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    /// Count per class; entry `c - 1` holds class `c`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes as usize];
        for &l in &self.labels {
            if l > 0 {
                counts[l as usize - 1] += 1;
            }
        }
        counts
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }
}

/// Flat list of labeled signatures. Signatures are stored row-major in one
/// buffer; record `i` occupies `features[i * bands..(i + 1) * bands]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelDataset {
    bands: usize,
    num_classes: u32,
    features: Vec<f64>,
    labels: Vec<u32>,
    pixel_indices: Vec<usize>,
}

impl PixelDataset {
    pub fn empty(bands: usize, num_classes: u32) -> Self {
        Self {
            bands,
            num_classes,
            features: Vec::new(),
            labels: Vec::new(),
            pixel_indices: Vec::new(),
        }
    }

    pub fn push(&mut self, signature: &[f64], label: u32, pixel_index: usize) -> Result<()> {
        if signature.len() != self.bands {
            return Err(Error::invalid(format!(
                "signature has {} bands, dataset has {}",
                signature.len(),
                self.bands
            )));
        }
        if label == 0 || label > self.num_classes {
            return Err(Error::invalid(format!(
                "label {label} outside 1..={}",
                self.num_classes
            )));
        }
        self.features.extend_from_slice(signature);
        self.labels.push(label);
        self.pixel_indices.push(pixel_index);
        Ok(())
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn signature(&self, i: usize) -> &[f64] {
        &self.features[i * self.bands..(i + 1) * self.bands]
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn pixel_index(&self, i: usize) -> usize {
        self.pixel_indices[i]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn pixel_indices(&self) -> &[usize] {
        &self.pixel_indices
    }

    /// Row-major `len x bands` feature buffer.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Count per class; entry `c - 1` holds class `c`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes as usize];
        for &l in &self.labels {
            counts[l as usize - 1] += 1;
        }
        counts
    }

    /// Record indices grouped by class; entry `c - 1` holds class `c`.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_classes as usize];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l as usize - 1].push(i);
        }
        groups
    }

    /// New dataset holding the given records, in the given order.
    pub fn select(&self, indices: &[usize]) -> PixelDataset {
        let mut out = PixelDataset::empty(self.bands, self.num_classes);
        out.features.reserve(indices.len() * self.bands);
        for &i in indices {
            out.features.extend_from_slice(self.signature(i));
            out.labels.push(self.labels[i]);
            out.pixel_indices.push(self.pixel_indices[i]);
        }
        out
    }

    /// Concatenation of `self` followed by `other`.
    pub fn concat(&self, other: &PixelDataset) -> Result<PixelDataset> {
        if self.bands != other.bands || self.num_classes != other.num_classes {
            return Err(Error::invalid(
                "cannot concatenate datasets of different shape",
            ));
        }
        let mut out = self.clone();
        out.features.extend_from_slice(&other.features);
        out.labels.extend_from_slice(&other.labels);
        out.pixel_indices.extend_from_slice(&other.pixel_indices);
        Ok(out)
    }

    /// Same records with every signature replaced by `f(signature)`.
    /// `f` must return vectors of length `bands`.
    pub(crate) fn map_signatures(
        &self,
        bands: usize,
        mut f: impl FnMut(&[f64], &mut Vec<f64>),
    ) -> PixelDataset {
        let mut features = Vec::with_capacity(self.len() * bands);
        for i in 0..self.len() {
            f(self.signature(i), &mut features);
        }
        debug_assert_eq!(features.len(), self.len() * bands);
        PixelDataset {
            bands,
            num_classes: self.num_classes,
            features,
            labels: self.labels.clone(),
            pixel_indices: self.pixel_indices.clone(),
        }
    }
}

/// Per-band mean and (population) standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct BandStats {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl BandStats {
    pub fn bands(&self) -> usize {
        self.mean.len()
    }

    /// Stats that leave data unchanged.
    pub fn identity(bands: usize) -> Self {
        Self {
            mean: vec![0.0; bands],
            stddev: vec![1.0; bands],
        }
    }
}

// ---------------------------------------------------------------------------
// ENVI subset
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    Int16,
    Float32,
    UInt16,
}

impl DataType {
    fn from_code(code: u32) -> Result<Self> {
        match code {
            2 => Ok(DataType::Int16),
            4 => Ok(DataType::Float32),
            12 => Ok(DataType::UInt16),
            other => Err(Error::Unsupported(format!("data type {other}"))),
        }
    }

    pub fn code(self) -> u32 {
        match self {
            DataType::Int16 => 2,
            DataType::Float32 => 4,
            DataType::UInt16 => 12,
        }
    }

    pub fn size(self) -> usize {
        match self {
            DataType::Int16 | DataType::UInt16 => 2,
            DataType::Float32 => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    Little,
    Big,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnviHeader {
    pub samples: usize,
    pub lines: usize,
    pub bands: usize,
    pub data_type: DataType,
    pub byte_order: ByteOrder,
    /// Bytes to skip at the start of the raw file.
    pub header_offset: usize,
}

impl EnviHeader {
    /// Raw file size, including the leading offset.
    pub fn expected_bytes(&self) -> usize {
        self.header_offset + self.samples * self.lines * self.bands * self.data_type.size()
    }

    pub fn to_text(&self) -> String {
        format!(
            "ENVI\nsamples = {}\nlines = {}\nbands = {}\nheader offset = {}\nfile type = ENVI Standard\n\
             data type = {}\ninterleave = bsq\nbyte order = {}\n",
            self.samples,
            self.lines,
            self.bands,
            self.header_offset,
            self.data_type.code(),
            match self.byte_order {
                ByteOrder::Little => 0,
                ByteOrder::Big => 1,
            }
        )
    }
}

/// Splits header text into lower-cased keys and raw values. Brace-delimited
/// values may span several lines.
fn header_fields(text: &str) -> HashMap<String, String> {
    let mut fields = HashMap::new();
    let mut lines = text.lines();
    while let Some(line) = lines.next() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        let key = key
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_lowercase();
        let mut value = value.trim().to_string();
        if value.starts_with('{') {
            while !value.contains('}') {
                match lines.next() {
                    Some(more) => {
                        value.push(' ');
                        value.push_str(more.trim());
                    }
                    None => break,
                }
            }
        }
        fields.insert(key, value);
    }
    fields
}

pub fn parse_envi_header(text: &str) -> Result<EnviHeader> {
    let fields = header_fields(text);
    let get = |key: &str| {
        fields
            .get(key)
            .ok_or_else(|| Error::format(format!("header is missing `{key}`")))
    };
    let number = |key: &str| -> Result<usize> {
        let raw = get(key)?;
        raw.parse::<usize>()
            .map_err(|_| Error::format(format!("`{key}` is not a non-negative integer: {raw:?}")))
    };

    let samples = number("samples")?;
    let lines = number("lines")?;
    let bands = number("bands")?;
    if samples == 0 || lines == 0 || bands == 0 {
        return Err(Error::format("samples, lines and bands must be positive"));
    }
    let interleave = get("interleave")?.to_lowercase();
    if interleave != "bsq" {
        return Err(Error::Unsupported(format!("interleave {interleave}")));
    }
    let data_type = DataType::from_code(number("data type")? as u32)?;
    let byte_order = match number("byte order")? {
        0 => ByteOrder::Little,
        1 => ByteOrder::Big,
        other => return Err(Error::Unsupported(format!("byte order {other}"))),
    };
    let header_offset = if fields.contains_key("header offset") {
        number("header offset")?
    } else {
        0
    };
    Ok(EnviHeader {
        samples,
        lines,
        bands,
        data_type,
        byte_order,
        header_offset,
    })
}

pub fn read_envi_header(header_path: &Path) -> Result<EnviHeader> {
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    parse_envi_header(&text)
}

/// Candidate locations of the binary file that belongs to `header_path`:
/// the header path without its `.hdr` extension, then that stem with
/// `.raw`, `.img`, `.bsq` or `.dat` appended.
pub fn raw_candidates(header_path: &Path) -> Vec<PathBuf> {
    let is_hdr = header_path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("hdr"));
    let stem = if is_hdr {
        header_path.with_extension("")
    } else {
        header_path.to_path_buf()
    };
    let mut out = Vec::new();
    if is_hdr {
        out.push(stem.clone());
    }
    for ext in ["raw", "img", "bsq", "dat"] {
        let mut p = stem.clone().into_os_string();
        p.push(".");
        p.push(ext);
        out.push(PathBuf::from(p));
    }
    out
}

fn read_raw(header_path: &Path, header: &EnviHeader) -> Result<Vec<f64>> {
    let candidates = raw_candidates(header_path);
    let raw_path = candidates.iter().find(|p| p.is_file()).ok_or_else(|| {
        Error::format(format!(
            "no raw data file next to {} (tried {})",
            header_path.display(),
            candidates
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ))
    })?;
    let bytes = fs::read(raw_path).map_err(|e| Error::io(raw_path, e))?;
    decode_samples(&bytes, header)
        .map_err(|e| Error::format(format!("{}: {e}", raw_path.display())))
}

fn decode_samples(bytes: &[u8], header: &EnviHeader) -> std::result::Result<Vec<f64>, String> {
    let expected = header.expected_bytes();
    if bytes.len() != expected {
        return Err(format!(
            "raw file holds {} bytes, header implies {expected}",
            bytes.len()
        ));
    }
    let size = header.data_type.size();
    let big = header.byte_order == ByteOrder::Big;
    let values = bytes[header.header_offset..]
        .chunks_exact(size)
        .map(|c| match (header.data_type, big) {
            (DataType::Int16, false) => i16::from_le_bytes([c[0], c[1]]) as f64,
            (DataType::Int16, true) => i16::from_be_bytes([c[0], c[1]]) as f64,
            (DataType::UInt16, false) => u16::from_le_bytes([c[0], c[1]]) as f64,
            (DataType::UInt16, true) => u16::from_be_bytes([c[0], c[1]]) as f64,
            (DataType::Float32, false) => f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64,
            (DataType::Float32, true) => f32::from_be_bytes([c[0], c[1], c[2], c[3]]) as f64,
        })
        .collect();
    Ok(values)
}

pub fn load_envi_cube(header_path: &Path) -> Result<SpectralCube> {
    let header = read_envi_header(header_path)?;
    let values = read_raw(header_path, &header)?;
    SpectralCube::new(header.lines, header.samples, header.bands, values)
}

pub fn load_label_raster(header_path: &Path) -> Result<LabelRaster> {
    let header = read_envi_header(header_path)?;
    if header.bands != 1 {
        return Err(Error::format(format!(
            "label raster must have one band, found {}",
            header.bands
        )));
    }
    let values = read_raw(header_path, &header)?;
    let labels = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if !v.is_finite() || v.fract() != 0.0 {
                Err(Error::format(format!("non-integer label {v} at pixel {i}")))
            } else if v < 0.0 {
                Err(Error::format(format!("negative label {v} at pixel {i}")))
            } else if v > u32::MAX as f64 {
                Err(Error::format(format!(
                    "label {v} at pixel {i} out of range"
                )))
            } else {
                Ok(v as u32)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    LabelRaster::new(header.lines, header.samples, labels)
}

/// Raw path used by the writers: `<stem>.raw` for a `<stem>.hdr` header.
fn raw_output_path(header_path: &Path) -> PathBuf {
    let is_hdr = header_path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("hdr"));
    let stem = if is_hdr {
        header_path.with_extension("")
    } else {
        header_path.to_path_buf()
    };
    let mut p = stem.into_os_string();
    p.push(".raw");
    PathBuf::from(p)
}

fn write_envi(header_path: &Path, header: &EnviHeader, payload: &[u8]) -> Result<()> {
    fs::write(header_path, header.to_text()).map_err(|e| Error::io(header_path, e))?;
    let raw = raw_output_path(header_path);
    fs::write(&raw, payload).map_err(|e| Error::io(&raw, e))
}

/// Writes a little-endian float32 BSQ cube.
pub fn write_envi_cube(cube: &SpectralCube, header_path: &Path) -> Result<()> {
    let header = EnviHeader {
        samples: cube.samples,
        lines: cube.lines,
        bands: cube.bands,
        data_type: DataType::Float32,
        byte_order: ByteOrder::Little,
        header_offset: 0,
    };
    let payload: Vec<u8> = cube
        .values
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect();
    write_envi(header_path, &header, &payload)
}

/// Writes a little-endian uint16 single-band label raster.
pub fn write_label_raster(gt: &LabelRaster, header_path: &Path) -> Result<()> {
    if gt.num_classes > u16::MAX as u32 {
        return Err(Error::invalid("labels do not fit in uint16"));
    }
    let header = EnviHeader {
        samples: gt.samples,
        lines: gt.lines,
        bands: 1,
        data_type: DataType::UInt16,
        byte_order: ByteOrder::Little,
        header_offset: 0,
    };
    let payload: Vec<u8> = gt
        .labels
        .iter()
        .flat_map(|&l| (l as u16).to_le_bytes())
        .collect();
    write_envi(header_path, &header, &payload)
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Reads `label,v1,...,vB` rows. `pixel_index` is the zero-based row number.
pub fn load_csv_dataset(path: &Path) -> Result<PixelDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_dataset(&text)
}

pub fn parse_csv_dataset(text: &str) -> Result<PixelDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut bands = None;
    let mut rows: Vec<(u32, Vec<f64>)> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(format!("row {row}: {e}")))?;
        if record.len() < 2 {
            return Err(Error::format(format!(
                "row {row}: needs a label and at least one value"
            )));
        }
        let b = record.len() - 1;
        match bands {
            None => bands = Some(b),
            Some(expected) if expected != b => {
                return Err(Error::format(format!(
                    "row {row}: {b} values, previous rows have {expected}"
                )))
            }
            Some(_) => {}
        }
        let label: u32 = record[0]
            .parse()
            .map_err(|_| Error::format(format!("row {row}: bad label {:?}", &record[0])))?;
        if label == 0 {
            return Err(Error::format(format!(
                "row {row}: label 0 is reserved for background"
            )));
        }
        let values = record
            .iter()
            .skip(1)
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::format(format!("row {row}: bad value {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((label, values));
    }

    let bands = bands.ok_or_else(|| Error::format("empty csv dataset"))?;
    let num_classes = rows.iter().map(|r| r.0).max().unwrap_or(0);
    let mut ds = PixelDataset::empty(bands, num_classes);
    for (i, (label, values)) in rows.iter().enumerate() {
        ds.push(values, *label, i)?;
    }
    Ok(ds)
}

pub fn write_csv_dataset(ds: &PixelDataset, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for i in 0..ds.len() {
        write!(out, "{}", ds.label(i)).unwrap();
        for v in ds.signature(i) {
            write!(out, ",{v}").unwrap();
        }
        out.push(b'\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Extraction and standardization
// ---------------------------------------------------------------------------

/// One record per nonzero ground-truth pixel, in raster order.
pub fn extract_labeled_pixels(cube: &SpectralCube, gt: &LabelRaster) -> Result<PixelDataset> {
    if cube.lines != gt.lines || cube.samples != gt.samples {
        return Err(Error::invalid(format!(
            "cube is {}x{}, ground truth is {}x{}",
            cube.lines, cube.samples, gt.lines, gt.samples
        )));
    }
    let n = cube.pixel_count();
    let mut ds = PixelDataset::empty(cube.bands, gt.num_classes);
    let mut signature = vec![0.0; cube.bands];
    for (p, &label) in gt.labels.iter().enumerate() {
        if label == 0 {
            continue;
        }
        for (b, s) in signature.iter_mut().enumerate() {
            *s = cube.values[b * n + p];
        }
        ds.push(&signature, label, p)?;
    }
    Ok(ds)
}

/// Per-band mean and population standard deviation (Welford update).
pub fn fit_band_stats(train: &PixelDataset) -> Result<BandStats> {
    if train.is_empty() {
        return Err(Error::invalid(
            "cannot fit band statistics on an empty dataset",
        ));
    }
    let bands = train.bands();
    let mut mean = vec![0.0; bands];
    let mut m2 = vec![0.0; bands];
    for i in 0..train.len() {
        let k = (i + 1) as f64;
        for (b, &x) in train.signature(i).iter().enumerate() {
            let delta = x - mean[b];
            mean[b] += delta / k;
            m2[b] += delta * (x - mean[b]);
        }
    }
    let n = train.len() as f64;
    let stddev = m2
        .iter()
        .map(|&s| (s / n).max(0.0).sqrt().max(STDDEV_FLOOR))
        .collect();
    Ok(BandStats { mean, stddev })
}

pub fn apply_standardization(ds: &PixelDataset, stats: &BandStats) -> Result<PixelDataset> {
    if stats.bands() != ds.bands() {
        return Err(Error::invalid(format!(
            "band stats cover {} bands, dataset has {}",
            stats.bands(),
            ds.bands()
        )));
    }
    Ok(ds.map_signatures(ds.bands(), |sig, out| {
        out.extend(
            sig.iter()
                .zip(stats.mean.iter().zip(&stats.stddev))
                .map(|(&x, (&m, &s))| (x - m) / s),
        )
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn header(samples: usize, lines: usize, bands: usize, ty: u32, order: u32) -> String {
        format!(
            "ENVI\ndescription = {{\n  test cube }}\nsamples = {samples}\nlines = {lines}\n\
             bands = {bands}\ndata type = {ty}\ninterleave = bsq\nbyte order = {order}\n\
             wavelength units = nm\n"
        )
    }

    fn write_pair(dir: &Path, name: &str, header: &str, raw: &[u8]) -> PathBuf {
        let hdr = dir.join(format!("{name}.hdr"));
        fs::write(&hdr, header).unwrap();
        fs::write(dir.join(format!("{name}.raw")), raw).unwrap();
        hdr
    }

    #[test]
    fn bsq_layout() {
        let dir = tempfile::tempdir().unwrap();
        let raw: Vec<u8> = (1..=6).flat_map(|v| (v as f32).to_le_bytes()).collect();
        let hdr = write_pair(dir.path(), "c", &header(2, 1, 3, 4, 0), &raw);
        let cube = load_envi_cube(&hdr).unwrap();
        assert_eq!((cube.lines(), cube.samples(), cube.bands()), (1, 2, 3));
        assert_eq!(cube.signature(0), vec![1.0, 3.0, 5.0]);
        assert_eq!(cube.signature(1), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn big_endian_and_integer_types() {
        let dir = tempfile::tempdir().unwrap();
        let raw: Vec<u8> = [-3i16, 7].iter().flat_map(|v| v.to_be_bytes()).collect();
        let hdr = write_pair(dir.path(), "i", &header(2, 1, 1, 2, 1), &raw);
        assert_eq!(load_envi_cube(&hdr).unwrap().values(), &[-3.0, 7.0]);

        let raw: Vec<u8> = [65535u16, 1].iter().flat_map(|v| v.to_le_bytes()).collect();
        let hdr = write_pair(dir.path(), "u", &header(1, 2, 1, 12, 0), &raw);
        assert_eq!(load_envi_cube(&hdr).unwrap().values(), &[65535.0, 1.0]);
    }

    #[test]
    fn header_offset_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let mut raw = vec![0xffu8; 5];
        raw.extend([2u16, 9].iter().flat_map(|v| v.to_le_bytes()));
        let text = header(2, 1, 1, 12, 0) + "header offset = 5\n";
        let hdr = write_pair(dir.path(), "h", &text, &raw);
        assert_eq!(load_envi_cube(&hdr).unwrap().values(), &[2.0, 9.0]);
    }

    #[test]
    fn truncated_raw_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = write_pair(dir.path(), "t", &header(2, 1, 3, 4, 0), &[0u8; 20]);
        assert!(matches!(load_envi_cube(&hdr), Err(Error::Format(_))));
        let hdr = write_pair(dir.path(), "o", &header(2, 1, 3, 4, 0), &[0u8; 28]);
        assert!(matches!(load_envi_cube(&hdr), Err(Error::Format(_))));
    }

    #[test]
    fn missing_raw_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = dir.path().join("m.hdr");
        fs::write(&hdr, header(2, 1, 3, 4, 0)).unwrap();
        assert!(matches!(load_envi_cube(&hdr), Err(Error::Format(_))));
    }

    #[test]
    fn unsupported_interleave_and_type() {
        let bil = header(2, 1, 3, 4, 0).replace("bsq", "bil");
        assert!(matches!(
            parse_envi_header(&bil),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            parse_envi_header(&header(2, 1, 3, 5, 0)),
            Err(Error::Unsupported(_))
        ));
        let no_bands = header(2, 1, 3, 4, 0).replace("bands = 3\n", "");
        assert!(matches!(
            parse_envi_header(&no_bands),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn raw_without_extension_is_found() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = dir.path().join("plain.hdr");
        fs::write(&hdr, header(1, 1, 2, 4, 0)).unwrap();
        let raw: Vec<u8> = [0.5f32, 1.5].iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(dir.path().join("plain"), raw).unwrap();
        assert_eq!(load_envi_cube(&hdr).unwrap().values(), &[0.5, 1.5]);
    }

    #[test]
    fn label_raster_counts() {
        let gt = LabelRaster::new(2, 2, vec![0, 1, 1, 2]).unwrap();
        assert_eq!(gt.num_classes(), 2);
        assert_eq!(gt.class_counts(), vec![2, 1]);

        let zeros = LabelRaster::new(3, 3, vec![0; 9]).unwrap();
        assert_eq!(zeros.num_classes(), 0);
        assert_eq!(zeros.labeled_count(), 0);
    }

    #[test]
    fn negative_labels_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let raw: Vec<u8> = [0i16, -1].iter().flat_map(|v| v.to_le_bytes()).collect();
        let hdr = write_pair(dir.path(), "g", &header(2, 1, 1, 2, 0), &raw);
        assert!(matches!(load_label_raster(&hdr), Err(Error::Format(_))));
    }

    #[test]
    fn label_raster_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let gt = LabelRaster::new(2, 3, vec![0, 1, 2, 3, 0, 1]).unwrap();
        let hdr = dir.path().join("gt.hdr");
        write_label_raster(&gt, &hdr).unwrap();
        assert_eq!(load_label_raster(&hdr).unwrap(), gt);
    }

    #[test]
    fn extraction() {
        let cube = SpectralCube::new(1, 1, 3, vec![0.1, 0.2, 0.3]).unwrap();
        let gt = LabelRaster::new(1, 1, vec![2]).unwrap();
        let ds = extract_labeled_pixels(&cube, &gt).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.signature(0), &[0.1, 0.2, 0.3]);
        assert_eq!(ds.label(0), 2);

        let empty = LabelRaster::new(1, 1, vec![0]).unwrap();
        assert!(extract_labeled_pixels(&cube, &empty).unwrap().is_empty());

        let wrong = LabelRaster::new(1, 2, vec![1, 1]).unwrap();
        assert!(extract_labeled_pixels(&cube, &wrong).is_err());
    }

    #[test]
    fn csv_parsing() {
        let ds = parse_csv_dataset("1,0.5,0.5\n2,1.0,0.0\n").unwrap();
        assert_eq!((ds.bands(), ds.num_classes(), ds.len()), (2, 2, 2));
        assert_eq!(ds.pixel_index(1), 1);
        assert!(matches!(
            parse_csv_dataset("0,1.0\n"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_csv_dataset("1,1.0\n1,1.0,2.0\n"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_csv_dataset("1,abc\n"),
            Err(Error::Format(_))
        ));
        assert!(matches!(parse_csv_dataset(""), Err(Error::Format(_))));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = parse_csv_dataset("1,0.1,-2e-7\n3,1e10,0.333333333333\n2,5,6\n").unwrap();
        let path = dir.path().join("d.csv");
        write_csv_dataset(&ds, &path).unwrap();
        assert_eq!(load_csv_dataset(&path).unwrap(), ds);
    }

    fn dataset(rows: &[Vec<f64>]) -> PixelDataset {
        let mut ds = PixelDataset::empty(rows[0].len(), 1);
        for (i, r) in rows.iter().enumerate() {
            ds.push(r, 1, i).unwrap();
        }
        ds
    }

    #[test]
    fn band_stats_small() {
        let ds = dataset(&[vec![0.0], vec![2.0]]);
        let stats = fit_band_stats(&ds).unwrap();
        assert_eq!(stats.mean, vec![1.0]);
        assert_eq!(stats.stddev, vec![1.0]);
        let z = apply_standardization(&ds, &stats).unwrap();
        assert_eq!(z.features(), &[-1.0, 1.0]);

        let constant = dataset(&[vec![4.0], vec![4.0], vec![4.0]]);
        assert_eq!(
            fit_band_stats(&constant).unwrap().stddev,
            vec![STDDEV_FLOOR]
        );

        assert!(fit_band_stats(&PixelDataset::empty(2, 1)).is_err());
    }

    #[test]
    fn band_stats_match_two_pass() {
        let mut rng = crate::rng::seeded(11);
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|_| {
                (0..5)
                    .map(|b| rng.random::<f64>() * 100.0 * (b + 1) as f64 + 500.0)
                    .collect()
            })
            .collect();
        let stats = fit_band_stats(&dataset(&rows)).unwrap();
        for b in 0..5 {
            let mean = rows.iter().map(|r| r[b]).sum::<f64>() / 100.0;
            let var = rows.iter().map(|r| (r[b] - mean).powi(2)).sum::<f64>() / 100.0;
            assert!((stats.mean[b] - mean).abs() <= 1e-12 * mean.abs());
            assert!((stats.stddev[b] - var.sqrt()).abs() <= 1e-12 * var.sqrt());
        }
    }

    #[test]
    fn identity_stats_and_mismatch() {
        let ds = dataset(&[vec![1.0, 2.0], vec![3.0, -4.0]]);
        assert_eq!(
            apply_standardization(&ds, &BandStats::identity(2)).unwrap(),
            ds
        );
        assert!(apply_standardization(&ds, &BandStats::identity(3)).is_err());
    }
}
