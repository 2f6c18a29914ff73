//! `NDA1` array files.
//!
//! Layout: magic `NDA1`, dtype `u8` (1 = f32, 2 = f64, 3 = c64, 4 = c128),
//! `ndim` as `u8`, two zero bytes, `ndim` little-endian `u64` dimensions, then
//! the row-major little-endian payload with complex values as `(re, im)`.

use std::path::Path;

use num_complex::{Complex32, Complex64};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"NDA1";

#[derive(Debug, Clone, PartialEq)]
pub enum NdData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    C64(Vec<Complex32>),
    C128(Vec<Complex64>),
}

impl NdData {
    pub fn len(&self) -> usize {
        match self {
            NdData::F32(v) => v.len(),
            NdData::F64(v) => v.len(),
            NdData::C64(v) => v.len(),
            NdData::C128(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype_code(&self) -> u8 {
        match self {
            NdData::F32(_) => 1,
            NdData::F64(_) => 2,
            NdData::C64(_) => 3,
            NdData::C128(_) => 4,
        }
    }

    fn elem_size(code: u8) -> Option<usize> {
        match code {
            1 => Some(4),
            2 => Some(8),
            3 => Some(8),
            4 => Some(16),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdArray {
    dims: Vec<usize>,
    data: NdData,
}

impl NdArray {
    pub fn new(dims: Vec<usize>, data: NdData) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() || dims.len() > u8::MAX as usize {
            return Err(Error::ShapeMismatch(format!(
                "dims {dims:?} for {} elements",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn f64(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::new(dims, NdData::F64(data))
    }

    pub fn c128(dims: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        Self::new(dims, NdData::C128(data))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &NdData {
        &self.data
    }

    pub fn into_f64(self) -> Result<Vec<f64>> {
        match self.data {
            NdData::F64(v) => Ok(v),
            NdData::F32(v) => Ok(v.into_iter().map(f64::from).collect()),
            other => Err(Error::ShapeMismatch(format!(
                "expected a real array, found dtype {}",
                other.dtype_code()
            ))),
        }
    }

    pub fn into_c128(self) -> Result<Vec<Complex64>> {
        match self.data {
            NdData::C128(v) => Ok(v),
            NdData::C64(v) => Ok(v
                .into_iter()
                .map(|z| Complex64::new(z.re.into(), z.im.into()))
                .collect()),
            NdData::F64(v) => Ok(v.into_iter().map(|x| Complex64::new(x, 0.0)).collect()),
            NdData::F32(v) => Ok(v.into_iter().map(|x| Complex64::new(x.into(), 0.0)).collect()),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 8 * self.dims.len() + self.data.len() * 16);
        out.extend_from_slice(MAGIC);
        out.push(self.data.dtype_code());
        out.push(self.dims.len() as u8);
        out.extend_from_slice(&[0, 0]);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match &self.data {
            NdData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            NdData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            NdData::C64(v) => v.iter().for_each(|z| {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }),
            NdData::C128(v) => v.iter().for_each(|z| {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }),
        }
        out
    }

    /// Parses a byte buffer; `path` is only used in error messages.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let truncated = |expected: usize| Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        };
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::BadMagic {
                path: path.to_path_buf(),
            });
        }
        if bytes.len() < 8 {
            return Err(truncated(8));
        }
        let code = bytes[4];
        let ndim = bytes[5] as usize;
        let elem = NdData::elem_size(code).ok_or(Error::UnknownDtype {
            path: path.to_path_buf(),
            code,
        })?;
        let header = 8 + 8 * ndim;
        if bytes.len() < header {
            return Err(truncated(header));
        }
        let dims: Vec<usize> = bytes[8..header]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")) as usize)
            .collect();
        let count = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| truncated(usize::MAX))?;
        let expected = count
            .checked_mul(elem)
            .and_then(|p| p.checked_add(header))
            .ok_or_else(|| truncated(usize::MAX))?;
        if bytes.len() != expected {
            return Err(truncated(expected));
        }
        let payload = &bytes[header..];
        let data = match code {
            1 => NdData::F32(
                payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                    .collect(),
            ),
            2 => NdData::F64(
                payload
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                    .collect(),
            ),
            3 => NdData::C64(
                payload
                    .chunks_exact(8)
                    .map(|c| {
                        Complex32::new(
                            f32::from_le_bytes(c[..4].try_into().expect("4 bytes")),
                            f32::from_le_bytes(c[4..].try_into().expect("4 bytes")),
                        )
                    })
                    .collect(),
            ),
            _ => NdData::C128(
                payload
                    .chunks_exact(16)
                    .map(|c| {
                        Complex64::new(
                            f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                            f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                        )
                    })
                    .collect(),
            ),
        };
        Ok(Self { dims, data })
    }
}

pub fn write_nda(path: impl AsRef<Path>, array: &NdArray) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, array.to_bytes()).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_nda(path: impl AsRef<Path>) -> Result<NdArray> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    NdArray::from_bytes(&bytes, path)
}
