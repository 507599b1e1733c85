//! Binary containers.
//!
//! Every file starts with the magic `MAG3` and a little-endian `u32`
//! version (currently 1).
//!
//! *Tensor files* continue with `u32 ndims`, `ndims × u64` dims and the
//! row-major little-endian `f32` payload.
//!
//! *Checkpoints* continue with the tag `CKPT`, a `u32` section count and
//! the sections. A section is `u32 name_len`, the UTF-8 name, a `u8` kind
//! and its body: kind 0 is a tensor body (`u32 ndims`, dims, `f32`
//! payload), kind 1 is `u64 len` plus a JSON document. Sections written by
//! [`save_checkpoint`]:
//!
//! * `config`: field configuration, fps, timestep count, final PSNR;
//! * `mlp`: projection MLP parameters;
//! * `embedding/<t>`: one per timestep (tri-planes as `[3, R, R, C]`,
//!   shift networks flat);
//! * `magnified` (optional): the request that produced magnified
//!   embeddings.
//!
//! Parameters are stored as `f32`, so a loaded field equals the saved one
//! up to `f32` rounding, and saving a loaded field again is lossless.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embedding::Embedding;
use super::mlp::Mlp;
use super::model::{FieldConfig, ProjectionMlp, TimeVaryingField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MAG3";
pub const VERSION: u32 = 1;
const CKPT_TAG: &[u8; 4] = b"CKPT";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.iter().product::<usize>() != data.len() {
            return Err(Error::structure(format!(
                "tensor dims {dims:?} do not match {} values",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }
}

fn write_tensor_body(w: &mut impl Write, t: &Tensor) -> Result<()> {
    w.write_all(&(t.dims.len() as u32).to_le_bytes())?;
    for d in &t.dims {
        w.write_all(&(*d as u64).to_le_bytes())?;
    }
    for v in &t.data {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

fn read_tensor_body(r: &mut impl Read) -> Result<Tensor> {
    let ndims = read_u32(r)? as usize;
    if ndims > 16 {
        return Err(Error::Format(format!("implausible tensor rank {ndims}")));
    }
    let mut dims = Vec::with_capacity(ndims);
    let mut count: u64 = 1;
    for _ in 0..ndims {
        let d = read_u64(r)?;
        count = count
            .checked_mul(d)
            .filter(|c| *c <= 1 << 32)
            .ok_or_else(|| Error::Format("tensor too large".into()))?;
        dims.push(d as usize);
    }
    let mut bytes = vec![0u8; count as usize * 4];
    r.read_exact(&mut bytes).map_err(truncated)?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(Tensor { dims, data })
}

fn write_header(w: &mut impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    Ok(())
}

fn read_header(r: &mut impl Read) -> Result<()> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format("missing MAG3 magic".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    Ok(())
}

pub fn write_tensor(path: &Path, t: &Tensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w)?;
    write_tensor_body(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let mut r = BufReader::new(File::open(path)?);
    read_header(&mut r)?;
    let mut tag = [0u8; 4];
    r.read_exact(&mut tag).map_err(truncated)?;
    if &tag == CKPT_TAG {
        return Err(Error::Format("file is a checkpoint, not a tensor".into()));
    }
    read_tensor_body(&mut tag.as_slice().chain(r))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Section {
    Tensor(Tensor),
    Json(serde_json::Value),
}

pub fn write_sections(path: &Path, sections: &[(String, Section)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w)?;
    w.write_all(CKPT_TAG)?;
    w.write_all(&(sections.len() as u32).to_le_bytes())?;
    for (name, section) in sections {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        match section {
            Section::Tensor(t) => {
                w.write_all(&[0])?;
                write_tensor_body(&mut w, t)?;
            }
            Section::Json(v) => {
                let bytes = serde_json::to_vec(v)?;
                w.write_all(&[1])?;
                w.write_all(&(bytes.len() as u64).to_le_bytes())?;
                w.write_all(&bytes)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_sections(path: &Path) -> Result<Vec<(String, Section)>> {
    let mut r = BufReader::new(File::open(path)?);
    read_header(&mut r)?;
    let mut tag = [0u8; 4];
    r.read_exact(&mut tag).map_err(truncated)?;
    if &tag != CKPT_TAG {
        return Err(Error::Format("file is not a checkpoint".into()));
    }
    let count = read_u32(&mut r)?;
    let mut out = Vec::new();
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        if len > 4096 {
            return Err(Error::Format("section name too long".into()));
        }
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(truncated)?;
        let name = String::from_utf8(name).map_err(|_| Error::Format("section name is not UTF-8".into()))?;
        let mut kind = [0u8; 1];
        r.read_exact(&mut kind).map_err(truncated)?;
        let section = match kind[0] {
            0 => Section::Tensor(read_tensor_body(&mut r)?),
            1 => {
                let len = read_u64(&mut r)?;
                if len > 1 << 30 {
                    return Err(Error::Format("JSON section too large".into()));
                }
                let mut bytes = vec![0u8; len as usize];
                r.read_exact(&mut bytes).map_err(truncated)?;
                Section::Json(serde_json::from_slice(&bytes)?)
            }
            k => return Err(Error::Format(format!("unknown section kind {k}"))),
        };
        out.push((name, section));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointHeader {
    field: FieldConfig,
    fps: f64,
    timesteps: usize,
    #[serde(default)]
    final_psnr: Option<f64>,
}

/// A time-varying field plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub field: TimeVaryingField,
    pub final_psnr: Option<f64>,
    pub magnified: Option<serde_json::Value>,
}

fn embedding_tensor(e: &Embedding) -> Tensor {
    match e {
        Embedding::TriPlane(tp) => Tensor {
            dims: vec![3, tp.resolution(), tp.resolution(), tp.channels()],
            data: tp.data().to_vec(),
        },
        Embedding::Shift(s) => Tensor {
            dims: vec![s.net().params().len()],
            data: s.net().params().to_vec(),
        },
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    ckpt.field.validate()?;
    let header = CheckpointHeader {
        field: ckpt.field.config.clone(),
        fps: ckpt.field.fps,
        timesteps: ckpt.field.len(),
        final_psnr: ckpt.final_psnr,
    };
    let mut sections = vec![
        ("config".to_string(), Section::Json(serde_json::to_value(&header)?)),
        (
            "mlp".to_string(),
            Section::Tensor(Tensor {
                dims: vec![ckpt.field.mlp.params().len()],
                data: ckpt.field.mlp.params().to_vec(),
            }),
        ),
    ];
    for (t, e) in ckpt.field.embeddings.iter().enumerate() {
        sections.push((format!("embedding/{t}"), Section::Tensor(embedding_tensor(e))));
    }
    if let Some(m) = &ckpt.magnified {
        sections.push(("magnified".to_string(), Section::Json(m.clone())));
    }
    write_sections(path, &sections)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let sections = read_sections(path)?;
    let find = |name: &str| sections.iter().find(|(n, _)| n == name).map(|(_, s)| s);
    let header: CheckpointHeader = match find("config") {
        Some(Section::Json(v)) => serde_json::from_value(v.clone())?,
        _ => return Err(Error::Format("checkpoint has no config section".into())),
    };
    let cfg = &header.field;
    let embed_dim = cfg.embedding.dim();
    let sizes = ProjectionMlp::sizes_for(embed_dim, &cfg.mlp_hidden, cfg.dir_freqs);
    let mlp = match find("mlp") {
        Some(Section::Tensor(t)) => {
            ProjectionMlp::from_mlp(Mlp::from_params(&sizes, t.data.clone())?, embed_dim, cfg.dir_freqs)?
        }
        _ => return Err(Error::Format("checkpoint has no mlp section".into())),
    };
    let mut embeddings = Vec::with_capacity(header.timesteps);
    for t in 0..header.timesteps {
        match find(&format!("embedding/{t}")) {
            Some(Section::Tensor(tensor)) => embeddings.push(cfg.embedding.from_params(tensor.data.clone())?),
            _ => return Err(Error::Format(format!("checkpoint is missing embedding/{t}"))),
        }
    }
    let magnified = match find("magnified") {
        Some(Section::Json(v)) => Some(v.clone()),
        Some(_) => return Err(Error::Format("magnified section must be JSON".into())),
        None => None,
    };
    let field = TimeVaryingField {
        config: header.field,
        mlp,
        embeddings,
        fps: header.fps,
    };
    field.validate()?;
    Ok(Checkpoint {
        field,
        final_psnr: header.final_psnr,
        magnified,
    })
}
