//! The `IGPW` tensor container shared with the trainer.
//!
//! ```text
//! "IGPW" | u32 version | u32 desc_len | desc JSON
//! then per tensor: u16 name_len | name | u8 ndim | u32 dims[ndim] | f32 data
//! ```
//! All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CostNetError;

pub const MAGIC: &[u8; 4] = b"IGPW";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub k: usize,
    pub widths: Vec<usize>,
    pub tensor_order: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<f32>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self {
            name: name.into(),
            dims,
            data,
        }
    }
}

/// A parsed container: descriptor plus tensors in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub descriptor: Descriptor,
    pub tensors: Vec<Tensor>,
}

impl Container {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let desc = serde_json::to_vec(&self.descriptor).expect("descriptor serializes");
        let mut out = Vec::with_capacity(12 + desc.len() + self.tensors.iter().map(|t| t.data.len() * 4 + 64).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(desc.len() as u32).to_le_bytes());
        out.extend_from_slice(&desc);
        for t in &self.tensors {
            out.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.push(t.dims.len() as u8);
            for &d in &t.dims {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CostNetError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(CostNetError::BadMagic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CostNetError::VersionUnsupported(version));
        }
        let desc_len = r.u32()? as usize;
        let descriptor: Descriptor = serde_json::from_slice(r.take(desc_len)?)
            .map_err(|e| CostNetError::Descriptor(e.to_string()))?;

        let mut tensors = Vec::with_capacity(descriptor.tensor_order.len());
        while r.pos < bytes.len() {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| CostNetError::Descriptor("tensor name is not UTF-8".into()))?
                .to_owned();
            let ndim = r.take(1)?[0] as usize;
            let dims = (0..ndim).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
            let count = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or(CostNetError::TruncatedFile)?;
            let raw = r.take(count.checked_mul(4).ok_or(CostNetError::TruncatedFile)?)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.push(Tensor { name, dims, data });
        }

        let names: Vec<&str> = tensors.iter().map(|t| t.name.as_str()).collect();
        if names.len() < descriptor.tensor_order.len() && descriptor.tensor_order.iter().zip(&names).all(|(a, b)| a == b) {
            return Err(CostNetError::TruncatedFile);
        }
        if names != descriptor.tensor_order {
            return Err(CostNetError::Descriptor(format!(
                "tensor order {names:?} disagrees with descriptor {:?}",
                descriptor.tensor_order
            )));
        }
        Ok(Self { descriptor, tensors })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, CostNetError> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), CostNetError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CostNetError> {
        let end = self.pos.checked_add(n).ok_or(CostNetError::TruncatedFile)?;
        let s = self.bytes.get(self.pos..end).ok_or(CostNetError::TruncatedFile)?;
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, CostNetError> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, CostNetError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
