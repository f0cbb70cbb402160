//! TNSR tensor container.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size      | field                                   |
//! |--------|-----------|-----------------------------------------|
//! | 0      | 4         | magic `b"TNSR"`                         |
//! | 4      | 2         | version (u16, currently 1)              |
//! | 6      | 1         | dtype: 1 = f64, 2 = f32, 3 = u16        |
//! | 7      | 1         | rank (u8, at most 4)                    |
//! | 8      | 4 * rank  | dims (u32 each)                         |
//! | ...    | elem * Πd | row-major payload, little-endian        |
//!
//! The file ends exactly at the payload's end.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"TNSR";
pub const VERSION: u16 = 1;
pub const MAX_RANK: usize = 4;
/// Upper bound on elements checked before any payload allocation.
pub const MAX_ELEMENTS: u64 = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DType {
    F64 = 1,
    F32 = 2,
    U16 = 3,
}

impl DType {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(DType::F64),
            2 => Ok(DType::F32),
            3 => Ok(DType::U16),
            other => Err(Error::UnsupportedDtype(other)),
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F64 => 8,
            DType::F32 => 4,
            DType::U16 => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TensorData {
    F64(Vec<f64>),
    F32(Vec<f32>),
    U16(Vec<u16>),
}

impl TensorData {
    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F64(_) => DType::F64,
            TensorData::F32(_) => DType::F32,
            TensorData::U16(_) => DType::U16,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F64(v) => v.len(),
            TensorData::F32(v) => v.len(),
            TensorData::U16(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(self) -> Vec<f64> {
        match self {
            TensorData::F64(v) => v,
            TensorData::F32(v) => v.into_iter().map(f64::from).collect(),
            TensorData::U16(v) => v.into_iter().map(f64::from).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Tensor {
    pub dims: Vec<u32>,
    pub data: TensorData,
}

/// Bitwise equality, so NaN payloads compare equal to themselves.
impl PartialEq for Tensor {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && encode_payload(&self.data) == encode_payload(&other.data)
    }
}

impl Tensor {
    pub fn new(dims: Vec<u32>, data: TensorData) -> Result<Self> {
        if dims.len() > MAX_RANK {
            return Err(Error::BadRank(dims.len() as u8));
        }
        let n = element_count(&dims)?;
        if n != data.len() as u64 {
            return Err(Error::ShapeMismatch {
                expected: dims.iter().map(|&d| d as usize).collect(),
                found: vec![data.len()],
            });
        }
        Ok(Tensor { dims, data })
    }

    pub fn f64(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        Tensor::new(dims_u32(dims)?, TensorData::F64(data))
    }

    pub fn u16(dims: &[usize], data: Vec<u16>) -> Result<Self> {
        Tensor::new(dims_u32(dims)?, TensorData::U16(data))
    }

    pub fn dims_usize(&self) -> Vec<usize> {
        self.dims.iter().map(|&d| d as usize).collect()
    }
}

fn dims_u32(dims: &[usize]) -> Result<Vec<u32>> {
    dims.iter()
        .map(|&d| u32::try_from(d).map_err(|_| Error::InvalidArgument(format!("dimension {d} exceeds u32"))))
        .collect()
}

fn element_count(dims: &[u32]) -> Result<u64> {
    let mut n: u64 = 1;
    for &d in dims {
        n = n.saturating_mul(d as u64);
        if n > MAX_ELEMENTS {
            return Err(Error::TooLarge(dims.to_vec()));
        }
    }
    Ok(n)
}

fn encode_payload(data: &TensorData) -> Vec<u8> {
    match data {
        TensorData::F64(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
        TensorData::F32(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
        TensorData::U16(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
    }
}

pub fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * t.dims.len() + t.data.len() * t.data.dtype().size());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(t.data.dtype().code());
    out.push(t.dims.len() as u8);
    for d in &t.dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(&encode_payload(&t.data));
    out
}

/// Header fields of a TNSR stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorHeader {
    pub version: u16,
    pub dtype: DType,
    pub dims: Vec<u32>,
}

impl TensorHeader {
    pub fn encoded_len(&self) -> usize {
        8 + 4 * self.dims.len()
    }

    pub fn payload_len(&self) -> u64 {
        self.dims.iter().map(|&d| d as u64).product::<u64>() * self.dtype.size() as u64
    }
}

fn short(field: &'static str, expected: usize, found: usize) -> Error {
    Error::TensorLength {
        field,
        expected: expected as u64,
        found: found as u64,
    }
}

pub fn decode_header(bytes: &[u8]) -> Result<TensorHeader> {
    if bytes.len() < 4 {
        return Err(short("magic", 4, bytes.len()));
    }
    let magic: [u8; 4] = bytes[0..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    if bytes.len() < 8 {
        return Err(short("header", 8, bytes.len()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let dtype = DType::from_code(bytes[6])?;
    let rank = bytes[7];
    if rank as usize > MAX_RANK {
        return Err(Error::BadRank(rank));
    }
    let dims_end = 8 + 4 * rank as usize;
    if bytes.len() < dims_end {
        return Err(short("dims", dims_end, bytes.len()));
    }
    let dims: Vec<u32> = bytes[8..dims_end]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    element_count(&dims)?;
    Ok(TensorHeader { version, dtype, dims })
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    let header = decode_header(bytes)?;
    let payload = &bytes[header.encoded_len()..];
    let expected = header.payload_len();
    if payload.len() as u64 != expected {
        return Err(Error::TensorLength {
            field: "payload",
            expected,
            found: payload.len() as u64,
        });
    }
    let data = match header.dtype {
        DType::F64 => TensorData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect(),
        ),
        DType::F32 => TensorData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect(),
        ),
        DType::U16 => TensorData::U16(payload.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect()),
    };
    Ok(Tensor { dims: header.dims, data })
}

/// Writes the tensor and fsyncs before returning.
pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let path = path.as_ref();
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_tensor(t)).map_err(|e| Error::io(path, e))?;
    f.sync_all().map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes)
}

/// Reads and validates only the header (magic, version, dtype, dims).
pub fn read_tensor_header(path: impl AsRef<Path>) -> Result<TensorHeader> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::with_capacity(8 + 4 * MAX_RANK);
    f.take((8 + 4 * MAX_RANK) as u64)
        .read_to_end(&mut buf)
        .map_err(|e| Error::io(path, e))?;
    decode_header(&buf)
}
