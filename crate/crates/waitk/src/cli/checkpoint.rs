//! Checkpoint file format: magic `WKCK`, u32 version, u32 tensor count,
//! then per tensor a u16 name length, the UTF-8 name, a u8 rank, u64
//! extents, and a little-endian f32 payload; a trailing u32 CRC covers all
//! tensor records. The model config travels as a `meta.config` tensor so a
//! checkpoint is self-describing; it is stripped again on load.

use super::CliError;
use crate::model::{ModelConfig, Parameters};
use crate::numerics::{NamedTensors, Tensor};
use std::collections::BTreeMap;
use std::path::Path;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"WKCK";
const VERSION: u32 = 1;
const META_NAME: &str = "meta.config";

fn config_to_meta(c: &ModelConfig) -> Vec<f32> {
    vec![
        c.enc_layers as f32,
        c.dec_layers as f32,
        c.d_model as f32,
        c.d_ff as f32,
        c.heads as f32,
        c.vocab_size as f32,
        c.max_positions as f32,
        // store dropout scaled to an integer so the f32 trip is exact
        (c.dropout * 1e6).round() as f32,
    ]
}

fn meta_to_config(v: &[f32]) -> Result<ModelConfig, CliError> {
    if v.len() != 8 {
        return Err(CliError::Data(format!(
            "meta.config must have 8 entries, found {}",
            v.len()
        )));
    }
    Ok(ModelConfig {
        enc_layers: v[0] as usize,
        dec_layers: v[1] as usize,
        d_model: v[2] as usize,
        d_ff: v[3] as usize,
        heads: v[4] as usize,
        vocab_size: v[5] as usize,
        max_positions: v[6] as usize,
        dropout: v[7] as f64 / 1e6,
    })
}

pub fn save_checkpoint(path: &Path, params: &Parameters) -> Result<(), CliError> {
    let mut records: BTreeMap<&str, (Vec<usize>, Vec<f32>)> = BTreeMap::new();
    for (name, t) in params.tensors() {
        let data: Vec<f32> = t.data().iter().map(|&v| v as f32).collect();
        records.insert(name, (t.shape().to_vec(), data));
    }
    let meta = (vec![8usize], config_to_meta(params.config()));
    records.insert(META_NAME, meta);

    let mut payload: Vec<u8> = Vec::new();
    for (name, (shape, data)) in &records {
        let name_bytes = name.as_bytes();
        payload.extend_from_slice(&(name_bytes.len() as u16).to_le_bytes());
        payload.extend_from_slice(name_bytes);
        payload.push(shape.len() as u8);
        for &e in shape {
            payload.extend_from_slice(&(e as u64).to_le_bytes());
        }
        for &v in data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }

    let mut out = Vec::with_capacity(16 + payload.len());
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    std::fs::write(path, out)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CliError> {
        if self.pos + n > self.buf.len() {
            return Err(CliError::Data("checkpoint truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, CliError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CliError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CliError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Parameters, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut r = Reader {
        buf: &bytes,
        pos: 0,
    };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(CliError::Data(format!(
            "{}: not a checkpoint (bad magic)",
            path.display()
        )));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CliError::Data(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let count = r.u32()? as usize;
    let payload_start = r.pos;
    let mut meta: Option<Vec<f32>> = None;
    let mut tensors = NamedTensors::new();
    for _ in 0..count {
        let name_len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| CliError::Data("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = r.take(1)?[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u64()? as usize);
        }
        let numel: usize = shape.iter().product();
        let raw = r.take(numel * 4)?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if name == META_NAME {
            meta = Some(data);
        } else {
            let wide: Vec<f64> = data.iter().map(|&v| v as f64).collect();
            tensors.insert(
                name,
                Tensor::new(shape, wide).map_err(|e| CliError::Data(e.to_string()))?,
            );
        }
    }
    let payload_end = r.pos;
    let stored_crc = r.u32()?;
    let actual_crc = crc32fast::hash(&bytes[payload_start..payload_end]);
    if stored_crc != actual_crc {
        return Err(CliError::Data(format!(
            "checkpoint CRC mismatch: stored {stored_crc:08x}, computed {actual_crc:08x}"
        )));
    }
    let config = meta_to_config(&meta.ok_or_else(|| {
        CliError::Data("checkpoint is missing the meta.config tensor".into())
    })?)?;
    Parameters::from_tensors(config, tensors).map_err(|e| CliError::Data(e.to_string()))
}
