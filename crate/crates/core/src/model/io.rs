//! Binary model container. Byte layout (all integers and floats
//! little-endian):
//!
//! ```text
//! magic      7 bytes  "DGLSTM1"
//! version    u32      1
//! variant    u8       0=DG 1=H 2=D 3=S
//! rois       u64
//! k1         u64
//! k2         u64      0 for S
//! dropout    f64
//! n_arrays   u32
//! n_arrays times:
//!   name_len u32, name (UTF-8), nonneg u8 (0/1), rows u64, cols u64,
//!   rows*cols f64 entries in row-major order
//! ```
//!
//! The file ends right after the last array; trailing bytes are rejected.

use std::fs;
use std::path::Path;

use super::{Dims, ModelParams, Variant};
use crate::error::{Error, Result};
use crate::numeric::matrix::Matrix;
use crate::numeric::params::ParamSet;

pub const MAGIC: &[u8; 7] = b"DGLSTM1";
const VERSION: u32 = 1;

pub fn encode(model: &ModelParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * model.num_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(model.variant.code());
    for d in [model.dims.rois, model.dims.k1, model.dims.k2] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&model.dropout.to_le_bytes());
    out.extend_from_slice(&(model.params.len() as u32).to_le_bytes());
    for p in model.params.iter() {
        out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.push(u8::from(p.nonneg));
        out.extend_from_slice(&(p.value.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(p.value.cols() as u64).to_le_bytes());
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Format(format!("truncated file: {what} needs {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn size(&mut self, what: &str) -> Result<usize> {
        usize::try_from(self.u64(what)?).map_err(|_| Error::Format(format!("{what} does not fit in memory")))
    }
}

pub fn decode(buf: &[u8]) -> Result<ModelParams> {
    let mut r = Reader { buf, pos: 0 };
    if buf.len() < MAGIC.len() || &buf[..MAGIC.len()] != MAGIC {
        return Err(Error::Format("missing DGLSTM1 magic header".into()));
    }
    r.pos = MAGIC.len();
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let code = r.u8("variant")?;
    let variant = Variant::from_code(code).ok_or_else(|| Error::Format(format!("unknown variant code {code}")))?;
    let dims = Dims { rois: r.size("rois")?, k1: r.size("k1")?, k2: r.size("k2")? };
    let dropout = r.f64("dropout")?;
    let n = r.u32("array count")?;

    let mut params = ParamSet::new();
    for i in 0..n {
        let len = r.u32("name length")? as usize;
        let name = std::str::from_utf8(r.take(len, "name")?)
            .map_err(|_| Error::Format(format!("array {i} has a non-UTF-8 name")))?
            .to_owned();
        let nonneg = match r.u8("flag")? {
            0 => false,
            1 => true,
            other => return Err(Error::Format(format!("array `{name}` has flag byte {other}"))),
        };
        let rows = r.size("rows")?;
        let cols = r.size("cols")?;
        let count = rows.checked_mul(cols).filter(|c| c.checked_mul(8).is_some()).ok_or_else(|| {
            Error::Format(format!("array `{name}` declares an impossible size {rows}x{cols}"))
        })?;
        let bytes = r.take(count * 8, &format!("payload of `{name}`"))?;
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let value = Matrix::new(rows, cols, data).map_err(|e| Error::Format(format!("array `{name}`: {e}")))?;
        params.insert(&name, value, nonneg).map_err(|e| Error::Format(e.to_string()))?;
    }
    if r.pos != buf.len() {
        return Err(Error::Format(format!("{} trailing bytes after last array", buf.len() - r.pos)));
    }
    let model = ModelParams { variant, dims, dropout, params };
    model.validate().map_err(|e| match e {
        Error::Format(_) => e,
        other => Error::Format(format!("inconsistent model: {other}")),
    })?;
    Ok(model)
}

pub fn save_params(model: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&buf)
}
