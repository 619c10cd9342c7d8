//! ICNX index persistence.
//!
//! Layout, all little-endian:
//!
//! | field   | type                                   |
//! |---------|----------------------------------------|
//! | magic   | `b"ICNX"`                              |
//! | version | u32                                    |
//! | dim     | u32                                    |
//! | count   | u64                                    |
//! | matrix  | `count × dim` f32, row-major           |
//! | ids     | `count` × (u32 byte length, UTF-8)     |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::scalar::Scalar;

use super::{EmbeddingMatrix, IndexError};

pub const ICNX_MAGIC: [u8; 4] = *b"ICNX";
pub const ICNX_VERSION: u32 = 1;

pub fn write_icnx<S: Scalar>(
    path: impl AsRef<Path>,
    matrix: &EmbeddingMatrix<S>,
    ids: &[String],
) -> Result<(), IndexError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_icnx_to(&mut out, matrix, ids)?;
    out.flush()?;
    Ok(())
}

pub fn write_icnx_to<S: Scalar, W: Write>(
    out: &mut W,
    matrix: &EmbeddingMatrix<S>,
    ids: &[String],
) -> Result<(), IndexError> {
    if ids.len() != matrix.count() {
        return Err(IndexError::ShapeMismatch {
            expected: matrix.count(),
            actual: ids.len(),
        });
    }
    let dim = u32::try_from(matrix.dim()).map_err(|_| IndexError::Format("dim exceeds u32".into()))?;
    out.write_all(&ICNX_MAGIC)?;
    out.write_all(&ICNX_VERSION.to_le_bytes())?;
    out.write_all(&dim.to_le_bytes())?;
    out.write_all(&(matrix.count() as u64).to_le_bytes())?;
    for x in matrix.as_slice() {
        out.write_all(&(x.widen() as f32).to_le_bytes())?;
    }
    for id in ids {
        let len = u32::try_from(id.len()).map_err(|_| IndexError::Format("id too long".into()))?;
        out.write_all(&len.to_le_bytes())?;
        out.write_all(id.as_bytes())?;
    }
    Ok(())
}

pub fn read_icnx<S: Scalar>(
    path: impl AsRef<Path>,
) -> Result<(EmbeddingMatrix<S>, Vec<String>), IndexError> {
    let mut input = BufReader::new(File::open(path)?);
    read_icnx_from(&mut input)
}

fn read_array<const N: usize, R: Read>(input: &mut R, what: &str) -> Result<[u8; N], IndexError> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => IndexError::Format(format!("truncated {what}")),
        _ => IndexError::Io(e),
    })?;
    Ok(buf)
}

pub fn read_icnx_from<S: Scalar, R: Read>(
    input: &mut R,
) -> Result<(EmbeddingMatrix<S>, Vec<String>), IndexError> {
    let magic: [u8; 4] = read_array(input, "magic")?;
    if magic != ICNX_MAGIC {
        return Err(IndexError::Format("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(read_array(input, "version")?);
    if version != ICNX_VERSION {
        return Err(IndexError::Format(format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes(read_array(input, "dim")?) as usize;
    let count = u64::from_le_bytes(read_array(input, "count")?);
    let count = usize::try_from(count).map_err(|_| IndexError::Format("count too large".into()))?;
    if dim == 0 {
        return Err(IndexError::ZeroDimension);
    }
    let n_values = count
        .checked_mul(dim)
        .ok_or_else(|| IndexError::Format("matrix size overflows".into()))?;

    let mut data = Vec::with_capacity(n_values.min(1 << 28));
    for _ in 0..n_values {
        let x = f32::from_le_bytes(read_array(input, "matrix")?);
        data.push(S::narrow(x as f64));
    }
    let mut ids = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        let len = u32::from_le_bytes(read_array(input, "id length")?) as usize;
        let mut buf = vec![0u8; len];
        input.read_exact(&mut buf).map_err(|_| IndexError::Format("truncated id".into()))?;
        let id = String::from_utf8(buf).map_err(|_| IndexError::Format("id is not UTF-8".into()))?;
        ids.push(id);
    }
    let mut probe = [0u8; 1];
    if input.read(&mut probe)? != 0 {
        return Err(IndexError::Format("trailing bytes after id table".into()));
    }
    Ok((EmbeddingMatrix::new(dim, data)?, ids))
}
