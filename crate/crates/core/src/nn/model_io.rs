//! `HSM1` model files.
//!
//! All integers and floats are little-endian.
//!
//! | field                         | type                       |
//! |-------------------------------|----------------------------|
//! | magic `HSM1`                  | 4 bytes                    |
//! | format version (= 1)          | u16                        |
//! | hidden block count `H`        | u32                        |
//! | input size, `H` hidden sizes, output size | u32 each       |
//! | batch-norm epsilon, momentum  | f64, f64                   |
//! | per hidden block: `W` (out x in, row-major), `b`, `gamma`, `beta`, running mean, running var | f32 blobs |
//! | output `W` (C x last hidden, row-major), `b` | f32 blobs   |
//! | band-stats length `B`         | u32                        |
//! | band means, band stddevs      | `B` f64 each               |
//! | selected-band count `K` (0 = all bands) | u32              |
//! | selected band indices         | `K` u32                    |
//!
//! Loaded networks are in inference mode.

use std::fs;
use std::path::Path;

use super::network::{BatchNorm, Dense, HiddenBlock, Mode, Network, NetworkSpec};
use crate::data::BandStats;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"HSM1";
pub const MODEL_VERSION: u16 = 1;

/// Everything needed to classify raw cube signatures.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub network: Network<f32>,
    /// Standardization fitted on the training partition, over the
    /// network's input bands.
    pub stats: BandStats,
    /// Cube bands fed to the network, in order; `None` means all bands.
    pub bands: Option<Vec<usize>>,
}

pub fn save_model(net: &Network<f32>, stats: &BandStats, path: &Path) -> Result<()> {
    write_model(
        &ModelFile {
            network: net.clone(),
            stats: stats.clone(),
            bands: None,
        },
        path,
    )
}

pub fn load_model(path: &Path) -> Result<(Network<f32>, BandStats)> {
    let m = read_model(path)?;
    Ok((m.network, m.stats))
}

pub fn write_model(model: &ModelFile, path: &Path) -> Result<()> {
    let bytes = encode(model)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::invalid(format!("{v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn encode(model: &ModelFile) -> Result<Vec<u8>> {
    let net = &model.network;
    if model.stats.bands() != net.spec.input_size || model.stats.stddev.len() != model.stats.bands()
    {
        return Err(Error::invalid(format!(
            "band stats cover {} bands, network expects {}",
            model.stats.bands(),
            net.spec.input_size
        )));
    }
    if let Some(bands) = &model.bands {
        if bands.len() != net.spec.input_size {
            return Err(Error::invalid(
                "band selection length differs from network input",
            ));
        }
    }

    let mut out = Vec::with_capacity(64 + 4 * net.parameter_count());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    put_u32(&mut out, net.hidden.len())?;
    put_u32(&mut out, net.spec.input_size)?;
    for &h in &net.spec.hidden_sizes {
        put_u32(&mut out, h)?;
    }
    put_u32(&mut out, net.spec.output_size)?;
    out.extend_from_slice(&net.spec.bn_epsilon.to_le_bytes());
    out.extend_from_slice(&net.spec.bn_momentum.to_le_bytes());
    for block in &net.hidden {
        put_f32s(&mut out, &block.dense.weights);
        put_f32s(&mut out, &block.dense.bias);
        put_f32s(&mut out, &block.bn.gamma);
        put_f32s(&mut out, &block.bn.beta);
        put_f32s(&mut out, &block.bn.running_mean);
        put_f32s(&mut out, &block.bn.running_var);
    }
    put_f32s(&mut out, &net.output.weights);
    put_f32s(&mut out, &net.output.bias);
    put_u32(&mut out, model.stats.bands())?;
    for v in model.stats.mean.iter().chain(&model.stats.stddev) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    match &model.bands {
        None => put_u32(&mut out, 0)?,
        Some(bands) => {
            put_u32(&mut out, bands.len())?;
            for &b in bands {
                put_u32(&mut out, b)?;
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(format!("truncated model file at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let len = n
            .checked_mul(4)
            .ok_or_else(|| Error::format("tensor size overflow"))?;
        Ok(self
            .take(len)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<ModelFile> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MODEL_MAGIC {
        return Err(Error::format("not an HSM1 model file (bad magic)"));
    }
    let version = r.u16()?;
    if version != MODEL_VERSION {
        return Err(Error::format(format!(
            "unsupported model version {version}"
        )));
    }
    let hidden_count = r.u32()?;
    if hidden_count > 1024 {
        return Err(Error::format(format!(
            "implausible hidden block count {hidden_count}"
        )));
    }
    let input_size = r.u32()?;
    let hidden_sizes = (0..hidden_count)
        .map(|_| r.u32())
        .collect::<Result<Vec<_>>>()?;
    let output_size = r.u32()?;
    let spec = NetworkSpec {
        input_size,
        hidden_sizes,
        output_size,
        bn_epsilon: r.f64()?,
        bn_momentum: r.f64()?,
    };
    spec.validate()
        .map_err(|e| Error::format(format!("bad network header: {e}")))?;

    let mut fan_in = input_size;
    let mut hidden = Vec::with_capacity(hidden_count);
    for &h in &spec.hidden_sizes {
        let weights = r.f32s(fan_in * h)?;
        let bias = r.f32s(h)?;
        let bn = BatchNorm {
            gamma: r.f32s(h)?,
            beta: r.f32s(h)?,
            running_mean: r.f32s(h)?,
            running_var: r.f32s(h)?,
        };
        hidden.push(HiddenBlock {
            dense: Dense {
                inputs: fan_in,
                outputs: h,
                weights,
                bias,
            },
            bn,
        });
        fan_in = h;
    }
    let output = Dense {
        inputs: fan_in,
        outputs: output_size,
        weights: r.f32s(fan_in * output_size)?,
        bias: r.f32s(output_size)?,
    };

    let stat_bands = r.u32()?;
    if stat_bands != input_size {
        return Err(Error::format(format!(
            "band stats cover {stat_bands} bands, network expects {input_size}"
        )));
    }
    let stats = BandStats {
        mean: r.f64s(stat_bands)?,
        stddev: r.f64s(stat_bands)?,
    };
    let selected = r.u32()?;
    let bands = match selected {
        0 => None,
        k if k == input_size => Some((0..k).map(|_| r.u32()).collect::<Result<Vec<_>>>()?),
        k => {
            return Err(Error::format(format!(
                "band selection has {k} entries, network expects {input_size}"
            )))
        }
    };
    if r.pos != bytes.len() {
        return Err(Error::format(format!(
            "{} trailing bytes after model",
            bytes.len() - r.pos
        )));
    }
    Ok(ModelFile {
        network: Network {
            spec,
            hidden,
            output,
            mode: Mode::Inference,
        },
        stats,
        bands,
    })
}
