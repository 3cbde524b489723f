//! On-disk index format (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "GRABIDX1"
//! version  u32      INDEX_VERSION
//! mode     u8       0 = exact, 1 = approximate
//! rows     u64
//! dim      u32
//! vectors  rows × dim × f32
//! -- approximate only --
//! max_degree u32, ef_construction u32, ef_search u32, seed u64
//! entry u32, max_level u32
//! per node: level u8, then for each layer 0..=level: count u32, count × u32
//! ```

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ExactIndex, HnswIndex, HnswParams, Index};
use crate::error::{Error, Result};

pub const INDEX_MAGIC: &[u8; 8] = b"GRABIDX1";
pub const INDEX_VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> Error {
    Error::Index(msg.into())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| bad(format!("truncated index file: {e}")))?;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let mut raw = vec![0u8; n * 4];
        self.inner
            .read_exact(&mut raw)
            .map_err(|e| bad(format!("truncated vector payload: {e}")))?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }
}

impl Index {
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        let io = |e: std::io::Error| Error::Io { context: "writing index".into(), source: e };
        w.write_all(INDEX_MAGIC).map_err(io)?;
        w.write_all(&INDEX_VERSION.to_le_bytes()).map_err(io)?;
        let mode: u8 = match self {
            Index::Exact(_) => 0,
            Index::Approximate(_) => 1,
        };
        w.write_all(&[mode]).map_err(io)?;
        w.write_all(&(self.len() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&(self.dim() as u32).to_le_bytes()).map_err(io)?;
        for v in self.vectors() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        if let Index::Approximate(h) = self {
            let p = h.params();
            for x in [p.max_degree as u32, p.ef_construction as u32, p.ef_search as u32] {
                w.write_all(&x.to_le_bytes()).map_err(io)?;
            }
            w.write_all(&p.seed.to_le_bytes()).map_err(io)?;
            w.write_all(&h.entry().to_le_bytes()).map_err(io)?;
            w.write_all(&(h.max_level() as u32).to_le_bytes()).map_err(io)?;
            for node in h.links() {
                w.write_all(&[(node.len() - 1) as u8]).map_err(io)?;
                for layer in node {
                    w.write_all(&(layer.len() as u32).to_le_bytes()).map_err(io)?;
                    for n in layer {
                        w.write_all(&n.to_le_bytes()).map_err(io)?;
                    }
                }
            }
        }
        w.flush().map_err(io)
    }

    pub fn read_from<R: Read>(r: R) -> Result<Index> {
        let mut r = Reader { inner: BufReader::new(r) };
        let magic: [u8; 8] = r.bytes()?;
        if &magic != INDEX_MAGIC {
            return Err(bad("not an index file (bad magic)"));
        }
        let version = r.u32()?;
        if version != INDEX_VERSION {
            return Err(bad(format!(
                "index format version {version} is not supported (expected {INDEX_VERSION})"
            )));
        }
        let mode = r.u8()?;
        let rows = r.u64()? as usize;
        let dim = r.u32()? as usize;
        if dim == 0 || rows == 0 {
            return Err(bad("index header has zero rows or dims"));
        }
        let vectors = r.f32s(rows * dim)?;
        match mode {
            0 => Ok(Index::Exact(ExactIndex::new(dim, vectors))),
            1 => {
                let params = HnswParams {
                    max_degree: r.u32()? as usize,
                    ef_construction: r.u32()? as usize,
                    ef_search: r.u32()? as usize,
                    seed: r.u64()?,
                };
                let entry = r.u32()?;
                let max_level = r.u32()? as usize;
                if entry as usize >= rows {
                    return Err(bad("graph entry point out of range"));
                }
                let mut links = Vec::with_capacity(rows);
                for _ in 0..rows {
                    let level = r.u8()? as usize;
                    let mut layers = Vec::with_capacity(level + 1);
                    for _ in 0..=level {
                        let count = r.u32()? as usize;
                        let mut list = Vec::with_capacity(count);
                        for _ in 0..count {
                            let n = r.u32()?;
                            if n as usize >= rows {
                                return Err(bad("graph link out of range"));
                            }
                            list.push(n);
                        }
                        layers.push(list);
                    }
                    links.push(layers);
                }
                if links[entry as usize].len() != max_level + 1 {
                    return Err(bad("graph entry point level mismatch"));
                }
                Ok(Index::Approximate(HnswIndex::from_parts(dim, params, vectors, links, entry, max_level)))
            }
            other => Err(bad(format!("unknown index mode tag {other}"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(Error::io("creating index file", path))?;
        self.write_to(f)
    }

    pub fn load(path: &Path) -> Result<Index> {
        let f = std::fs::File::open(path).map_err(Error::io("opening index file", path))?;
        Index::read_from(f)
    }
}
