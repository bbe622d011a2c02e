// SPDX-License-Identifier: MIT OR Apache-2.0

//! Versioned binary checkpoint format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "KCKPT\0\0\0"
//! version    u32
//! epoch      u32
//! phase      u32 len + utf-8
//! config     u32 len + utf-8 JSON
//! rng        32-byte seed, u64 stream, u128 word position
//! opt step   u64
//! tensors    u32 count, then per tensor:
//!            u32 len + utf-8 name, u32 rank, u64 per dim, f32 values
//! ```
//!
//! Optimizer moments are stored in the tensor table as `adam.m.<name>` and
//! `adam.v.<name>` after the parameters.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig, Params};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"KCKPT\0\0\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Base,
    Continual,
    Forgetting,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Base => "base",
            Phase::Continual => "continual",
            Phase::Forgetting => "forgetting",
        })
    }
}

impl FromStr for Phase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Phase::Base),
            "continual" => Ok(Phase::Continual),
            "forgetting" => Ok(Phase::Forgetting),
            _ => Err(Error::format("phase", format!("unknown phase `{s}`"))),
        }
    }
}

/// Serializable position of a ChaCha8 stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

/// AdamW first and second moments, one pair per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl OptimizerState {
    pub fn zeros_like(params: &Params) -> Self {
        Self {
            step: 0,
            m: params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect(),
            v: params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: Params,
    pub optimizer: OptimizerState,
    pub epoch: usize,
    pub phase: Phase,
    pub rng: RngState,
}

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_str(w: &mut impl Write, s: &str) -> Result<()> {
    put_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn put_tensor(w: &mut impl Write, name: &str, t: &Tensor) -> Result<()> {
    put_str(w, name)?;
    put_u32(w, t.rank() as u32)?;
    for &d in t.shape() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(t.numel() * 4);
    for v in t.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn get<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| Error::format("checkpoint", format!("truncated file: {e}")))?;
    Ok(b)
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(get::<4>(r)?))
}

fn get_str(r: &mut impl Read) -> Result<String> {
    let len = get_u32(r)? as usize;
    let mut b = vec![0u8; len];
    r.read_exact(&mut b)
        .map_err(|e| Error::format("checkpoint", format!("truncated string: {e}")))?;
    String::from_utf8(b).map_err(|e| Error::format("checkpoint", e.to_string()))
}

fn get_tensor(r: &mut impl Read) -> Result<(String, Tensor)> {
    let name = get_str(r)?;
    let rank = get_u32(r)? as usize;
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        shape.push(u64::from_le_bytes(get::<8>(r)?) as usize);
    }
    let n: usize = shape.iter().product();
    let mut raw = vec![0u8; n * 4];
    r.read_exact(&mut raw)
        .map_err(|e| Error::format("checkpoint", format!("truncated tensor {name}: {e}")))?;
    let data = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((name, Tensor::new(shape, data)?))
}

impl Checkpoint {
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        put_u32(w, FORMAT_VERSION)?;
        put_u32(w, self.epoch as u32)?;
        put_str(w, &self.phase.to_string())?;
        let cfg = serde_json::to_string(&self.config)
            .map_err(|e| Error::format("checkpoint config", e.to_string()))?;
        put_str(w, &cfg)?;
        w.write_all(&self.rng.seed)?;
        w.write_all(&self.rng.stream.to_le_bytes())?;
        w.write_all(&self.rng.word_pos.to_le_bytes())?;
        w.write_all(&self.optimizer.step.to_le_bytes())?;
        let n = self.params.len();
        put_u32(w, (3 * n) as u32)?;
        for (name, t) in self.params.names().iter().zip(self.params.tensors()) {
            put_tensor(w, name, t)?;
        }
        for (name, t) in self.params.names().iter().zip(&self.optimizer.m) {
            put_tensor(w, &format!("adam.m.{name}"), t)?;
        }
        for (name, t) in self.params.names().iter().zip(&self.optimizer.v) {
            put_tensor(w, &format!("adam.v.{name}"), t)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let magic = get::<8>(r)?;
        if &magic != MAGIC {
            return Err(Error::format("checkpoint", "bad magic"));
        }
        let version = get_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(Error::format(
                "checkpoint",
                format!("unsupported format version {version}"),
            ));
        }
        let epoch = get_u32(r)? as usize;
        let phase: Phase = get_str(r)?.parse()?;
        let config: ModelConfig = serde_json::from_str(&get_str(r)?)
            .map_err(|e| Error::format("checkpoint config", e.to_string()))?;
        config.validate()?;
        let rng = RngState {
            seed: get::<32>(r)?,
            stream: u64::from_le_bytes(get::<8>(r)?),
            word_pos: u128::from_le_bytes(get::<16>(r)?),
        };
        let step = u64::from_le_bytes(get::<8>(r)?);
        let count = get_u32(r)? as usize;
        if count % 3 != 0 {
            return Err(Error::format("checkpoint", format!("tensor count {count} is not 3 * params")));
        }
        let n = count / 3;
        let mut named = Vec::with_capacity(n);
        for _ in 0..n {
            named.push(get_tensor(r)?);
        }
        let params = Params::from_named(&config, named)?;
        let mut moments = |prefix: &str| -> Result<Vec<Tensor>> {
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let (name, t) = get_tensor(r)?;
                let want = format!("{prefix}{}", params.names()[i]);
                if name != want || t.shape() != params.get(i).shape() {
                    return Err(Error::format("checkpoint", format!("expected {want}, found {name}")));
                }
                out.push(t);
            }
            Ok(out)
        };
        let m = moments("adam.m.")?;
        let v = moments("adam.v.")?;
        Ok(Self {
            config,
            params,
            optimizer: OptimizerState { step, m, v },
            epoch,
            phase,
            rng,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut r)
    }

    pub fn model(&self) -> Result<Model> {
        Model::from_params(self.config.clone(), self.params.clone())
    }
}
