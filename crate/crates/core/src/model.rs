//! Full model: configuration, parameters and the `PKGR` model file.
//!
//! File layout (little-endian):
//!
//! ```text
//! "PKGR" | version u32 | tensor count u32
//! per tensor: name len u32 | name utf-8 | rank u32 | dims u64 * rank | f32 data, row-major
//! metadata len u32 | metadata utf-8 JSON (layout + model config)
//! ```

use std::path::Path;

use ndarray::{ArrayViewD, ArrayViewMutD};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attention_net::{AttentionConfig, AttentionDims, AttentionParams, ATTENTION_HIDDEN};
use crate::error::{Error, Result};
use crate::kg_builder::{EncodeConfig, PropertyLayout};
use crate::params::ParamSet;
use crate::post_encoder::{LstmDims, LstmParams};

pub const MAGIC: &[u8; 4] = b"PKGR";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub classes: usize,
    pub layout: PropertyLayout,
    pub lstm: LstmDims,
    pub attention_hidden: usize,
    pub attention: AttentionConfig,
    /// How cohorts are turned into graphs for this model.
    pub encode: EncodeConfig,
}

impl ModelConfig {
    /// Full-size model over the layout implied by `encode`.
    pub fn new(classes: usize, encode: EncodeConfig, attention: AttentionConfig) -> Self {
        ModelConfig {
            classes,
            layout: PropertyLayout::with_options(&encode.layout),
            lstm: LstmDims::default(),
            attention_hidden: ATTENTION_HIDDEN,
            attention,
            encode,
        }
    }

    pub fn attention_dims(&self) -> AttentionDims {
        AttentionDims {
            width: self.layout.total_width(),
            hidden: self.attention_hidden,
            classes: self.classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Config(format!("class count {} must be at least 2", self.classes)));
        }
        let pb = self
            .layout
            .post_behavior_range()
            .ok_or_else(|| Error::Config("layout lacks the post_behavior segment".into()))?;
        if pb.len() != self.lstm.output {
            return Err(Error::Config(format!(
                "post_behavior segment is {} wide but the LSTM projects to {}",
                pb.len(),
                self.lstm.output
            )));
        }
        Ok(())
    }
}

/// Every trainable tensor. Also used, zeroed, for gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters {
    pub lstm: LstmParams,
    pub attention: AttentionParams,
}

impl Parameters {
    pub fn zeros_like(other: &Parameters) -> Self {
        Parameters {
            lstm: LstmParams::zeros(other.lstm.dims()),
            attention: AttentionParams::zeros(other.attention.dims()),
        }
    }
}

impl ParamSet for Parameters {
    fn tensors(&self) -> Vec<(&'static str, ArrayViewD<'_, f64>)> {
        let mut t = self.lstm.tensors();
        t.extend(self.attention.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, ArrayViewMutD<'_, f64>)> {
        let mut t = self.lstm.tensors_mut();
        t.extend(self.attention.tensors_mut());
        t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: Parameters,
}

impl Model {
    /// Draws LSTM weights first, then attention weights.
    pub fn init<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let lstm = LstmParams::init(config.lstm, rng);
        let attention = AttentionParams::init(config.attention_dims(), rng);
        Ok(Model {
            config,
            params: Parameters { lstm, attention },
        })
    }

    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let params = Parameters {
            lstm: LstmParams::zeros(config.lstm),
            attention: AttentionParams::zeros(config.attention_dims()),
        };
        Ok(Model { config, params })
    }

    /// Round every parameter to the nearest f32, matching what a saved file holds.
    pub fn round_to_f32(&mut self) {
        for (_, mut t) in self.params.tensors_mut() {
            t.mapv_inplace(|v| v as f32 as f64);
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let tensors = self.params.tensors();
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, t) in tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.ndim() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            // logical (row-major) iteration order
            for &v in t.iter() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        let meta = serde_json::to_string(&self.config).expect("config serializes");
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(meta.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4)?;
        if magic != MAGIC {
            return Err(Error::Model(format!(
                "bad magic {:?}, expected PKGR",
                String::from_utf8_lossy(magic)
            )));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let count = r.u32()? as usize;
        let mut records = Vec::with_capacity(count);
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Model("tensor name is not UTF-8".into()))?
                .to_string();
            let rank = r.u32()? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u64()? as usize);
            }
            let n: usize = shape.iter().product();
            let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::Model("tensor too large".into()))?)?;
            let data: Vec<f64> = raw
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
                .collect();
            records.push((name, shape, data));
        }
        let meta_len = r.u32()? as usize;
        let meta = std::str::from_utf8(r.take(meta_len)?)
            .map_err(|_| Error::Model("metadata is not UTF-8".into()))?;
        if r.pos != bytes.len() {
            return Err(Error::Model(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let config: ModelConfig =
            serde_json::from_str(meta).map_err(|e| Error::Model(format!("metadata: {e}")))?;

        let mut model = Model::zeros(config).map_err(|e| Error::Model(e.to_string()))?;
        let mut slots = model.params.tensors_mut();
        if slots.len() != records.len() {
            return Err(Error::Model(format!(
                "file has {} tensors, model needs {}",
                records.len(),
                slots.len()
            )));
        }
        for ((name, shape, data), (expected, slot)) in records.into_iter().zip(slots.iter_mut()) {
            if name != *expected || shape != slot.shape() {
                return Err(Error::Model(format!(
                    "tensor '{name}' {shape:?} does not match expected '{expected}' {:?}",
                    slot.shape()
                )));
            }
            for (dst, src) in slot.iter_mut().zip(data) {
                *dst = src;
            }
        }
        drop(slots);
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
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
            .ok_or_else(|| Error::Model(format!("truncated file at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
