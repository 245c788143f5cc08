//! Id-aligned dense vectors and the `XEMB` binary file format.
//!
//! Layout, all integers little-endian, no padding:
//!
//! ```text
//! magic   4 bytes  "XEMB"
//! version u32      1
//! count   u64
//! dim     u32
//! count × { id_len u16, id bytes (UTF-8), dim × f32 }
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"XEMB";
pub const VERSION: u32 = 1;
pub const DEFAULT_DIM: usize = 768;

const HEADER_LEN: usize = 4 + 4 + 8 + 4;

/// Row-major matrix of finite `f32` vectors keyed by unique string ids.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    by_id: HashMap<String, usize>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMatrix("dim must be positive".into()));
        }
        if dim > u32::MAX as usize {
            return Err(Error::InvalidMatrix(format!("dim {dim} does not fit in u32")));
        }
        Ok(Self {
            dim,
            ids: Vec::new(),
            data: Vec::new(),
            by_id: HashMap::new(),
        })
    }

    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut m = Self::new(dim)?;
        for (id, v) in rows {
            m.push(id, &v)?;
        }
        Ok(m)
    }

    pub fn push(&mut self, id: impl Into<String>, vector: &[f32]) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if let Some(i) = vector.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite value at column {i} of `{id}`"
            )));
        }
        if id.len() > u16::MAX as usize {
            return Err(Error::InvalidMatrix(format!(
                "id of {} bytes exceeds the 65535-byte limit",
                id.len()
            )));
        }
        if self.by_id.contains_key(&id) {
            return Err(Error::InvalidMatrix(format!("duplicate id `{id}`")));
        }
        self.by_id.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.by_id.get(id).map(|&i| self.row(i))
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            HEADER_LEN + self.ids.iter().map(|id| 2 + id.len()).sum::<usize>() + self.data.len() * 4,
        );
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for (id, v) in self.rows() {
            out.extend_from_slice(&(id.len() as u16).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: format!("bad magic {magic:?}, expected \"XEMB\""),
            });
        }
        let version_at = r.pos;
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(r.error_at(version_at, format!("unsupported version {version}")));
        }
        let count = r.u64("row count")?;
        let dim_at = r.pos;
        let dim = r.u32("dim")? as usize;
        if dim == 0 {
            return Err(r.error_at(dim_at, "dim must be positive".into()));
        }
        let mut m = Self::new(dim)?;
        // Each row needs at least 2 + 4·dim bytes; reject impossible counts
        // before allocating.
        let min_row = 2 + 4 * dim as u64;
        let remaining = (bytes.len() - r.pos) as u64;
        if count.saturating_mul(min_row) > remaining {
            return Err(r.error_at(
                bytes.len(),
                format!("truncated payload: header declares {count} rows of dim {dim}"),
            ));
        }
        m.ids.reserve(count as usize);
        m.data.reserve(count as usize * dim);
        let mut vector = vec![0f32; dim];
        for row in 0..count {
            let id_at = r.pos;
            let id_len = r.u16("id length")? as usize;
            let id_bytes = r.take(id_len, "id")?;
            let id = std::str::from_utf8(id_bytes)
                .map_err(|_| r.error_at(id_at + 2, format!("row {row}: id is not UTF-8")))?
                .to_string();
            for slot in vector.iter_mut() {
                let at = r.pos;
                let x = f32::from_le_bytes(r.take(4, "vector")?.try_into().unwrap());
                if !x.is_finite() {
                    return Err(r.error_at(at, format!("row {row} (`{id}`): non-finite value")));
                }
                *slot = x;
            }
            if m.by_id.contains_key(&id) {
                return Err(r.error_at(id_at, format!("row {row}: duplicate id `{id}`")));
            }
            m.by_id.insert(id.clone(), m.ids.len());
            m.ids.push(id);
            m.data.extend_from_slice(&vector);
        }
        if r.pos != bytes.len() {
            return Err(r.error_at(
                r.pos,
                format!("{} trailing bytes after last row", bytes.len() - r.pos),
            ));
        }
        Ok(m)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(&self.to_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Reads an `XEMB` file.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    EmbeddingMatrix::read(path)
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.error_at(
                self.pos,
                format!(
                    "truncated {what}: need {n} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn error_at(&self, offset: usize, message: String) -> Error {
        Error::Format {
            offset: offset as u64,
            message,
        }
    }
}
