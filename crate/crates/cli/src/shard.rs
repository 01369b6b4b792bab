//! On-disk shard format.
//!
//! All integers are little-endian.
//!
//! | offset      | size  | field                                   |
//! |-------------|-------|-----------------------------------------|
//! | 0           | 4     | magic `PMRC`                            |
//! | 4           | 2     | format version (1)                      |
//! | 6           | 1     | mode: 0 = MSR, 1 = MBR                  |
//! | 7           | 1     | reserved, 0                             |
//! | 8           | 2 × 4 | n, k, d, beta                           |
//! | 16          | 4     | field modulus q                         |
//! | 20          | 2     | node id (1-based)                       |
//! | 22          | 2 × n | evaluation points of nodes 1..n         |
//! | 22 + 2n     | 8     | block count                             |
//! | 30 + 2n     | 8     | original file length in bytes           |
//! | 38 + 2n     | ...   | body: block count × alpha symbols, u16  |
//!
//! Each byte of the input file is one field symbol, so q must lie in
//! 257..=65521. A block carries B bytes; the last one is zero-padded.

use std::fs;
use std::path::{Path, PathBuf};

use regen_core::encoding::EncodingMatrix;
use regen_core::{MbrCode, Mode, MsrCode, PmCode, PrimeField, SystemParams};

use crate::error::CliError;

pub const MAGIC: [u8; 4] = *b"PMRC";
pub const VERSION: u16 = 1;
pub const MAX_MODULUS: u32 = 65521;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardHeader {
    pub mode: Mode,
    pub n: u16,
    pub k: u16,
    pub d: u16,
    pub beta: u16,
    pub q: u32,
    pub node_id: u16,
    pub points: Vec<u16>,
    pub block_count: u64,
    pub byte_len: u64,
}

impl ShardHeader {
    pub fn encoded_len(&self) -> usize {
        38 + 2 * self.points.len()
    }

    pub fn params(&self) -> Result<SystemParams, CliError> {
        SystemParams::new(
            self.mode,
            self.n as usize,
            self.k as usize,
            self.d as usize,
            self.beta as usize,
        )
        .map_err(|e| CliError::Format(format!("shard header: {e}")))
    }

    /// Rebuilds the code recorded in the header.
    pub fn code(&self) -> Result<PmCode, CliError> {
        let params = self.params()?;
        let field =
            PrimeField::new(self.q).map_err(|e| CliError::Format(format!("shard header: {e}")))?;
        let points = self.points.iter().map(|&p| p as u32).collect();
        let enc = EncodingMatrix::from_points(&params, field, points)
            .map_err(|e| CliError::Format(format!("shard header: {e}")))?;
        Ok(match self.mode {
            Mode::Msr => PmCode::Msr(MsrCode::from_encoding(enc)),
            Mode::Mbr => PmCode::Mbr(MbrCode::from_encoding(enc)),
        })
    }

    /// True when `other` describes the same shard set.
    pub fn same_set(&self, other: &ShardHeader) -> bool {
        ShardHeader {
            node_id: other.node_id,
            ..self.clone()
        } == *other
    }

    pub fn body_symbols(&self) -> Result<usize, CliError> {
        let alpha = self.params()?.alpha as u64;
        self.block_count
            .checked_mul(alpha)
            .and_then(|v| usize::try_from(v).ok())
            .ok_or_else(|| CliError::Format("shard body too large".into()))
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(match self.mode {
            Mode::Msr => 0,
            Mode::Mbr => 1,
        });
        out.push(0);
        for v in [self.n, self.k, self.d, self.beta] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.q.to_le_bytes());
        out.extend_from_slice(&self.node_id.to_le_bytes());
        for p in &self.points {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out.extend_from_slice(&self.block_count.to_le_bytes());
        out.extend_from_slice(&self.byte_len.to_le_bytes());
    }

    pub fn parse(bytes: &[u8]) -> Result<ShardHeader, CliError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(CliError::Format("not a shard file (bad magic)".into()));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(CliError::Format(format!(
                "unsupported shard version {version}"
            )));
        }
        let mode = match r.take(1)?[0] {
            0 => Mode::Msr,
            1 => Mode::Mbr,
            m => return Err(CliError::Format(format!("unknown mode byte {m}"))),
        };
        r.take(1)?;
        let (n, k, d, beta) = (r.u16()?, r.u16()?, r.u16()?, r.u16()?);
        let q = r.u32()?;
        let node_id = r.u16()?;
        let points = (0..n).map(|_| r.u16()).collect::<Result<Vec<_>, _>>()?;
        let block_count = r.u64()?;
        let byte_len = r.u64()?;
        if node_id == 0 || node_id > n {
            return Err(CliError::Format(format!(
                "node id {node_id} out of range 1..={n}"
            )));
        }
        if !(257..=MAX_MODULUS).contains(&q) {
            return Err(CliError::Format(format!(
                "modulus {q} outside 257..={MAX_MODULUS}"
            )));
        }
        Ok(ShardHeader {
            mode,
            n,
            k,
            d,
            beta,
            q,
            node_id,
            points,
            block_count,
            byte_len,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], CliError> {
        let end = self.pos + len;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| CliError::Format("truncated shard header".into()))?;
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, CliError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CliError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CliError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardFile {
    pub header: ShardHeader,
    /// `block_count × alpha` symbols, block-major.
    pub symbols: Vec<u16>,
}

impl ShardFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.header.encoded_len() + 2 * self.symbols.len());
        self.header.write_to(&mut out);
        for s in &self.symbols {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ShardFile, CliError> {
        let header = ShardHeader::parse(bytes)?;
        let body = &bytes[header.encoded_len()..];
        let expected = header.body_symbols()?;
        if body.len() != 2 * expected {
            return Err(CliError::Format(format!(
                "shard body holds {} bytes, header implies {}",
                body.len(),
                2 * expected
            )));
        }
        let symbols: Vec<u16> = body
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        if let Some(bad) = symbols.iter().find(|&&v| v as u32 >= header.q) {
            return Err(CliError::Format(format!(
                "symbol {bad} not below q = {}",
                header.q
            )));
        }
        Ok(ShardFile { header, symbols })
    }

    pub fn read(path: &Path) -> Result<ShardFile, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        ShardFile::from_bytes(&bytes).map_err(|e| match e {
            CliError::Format(m) => CliError::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_bytes()).map_err(|e| CliError::io(path, e))
    }

    pub fn block(&self, block: usize, alpha: usize) -> Vec<u32> {
        self.symbols[block * alpha..(block + 1) * alpha]
            .iter()
            .map(|&v| v as u32)
            .collect()
    }
}

pub fn shard_path(dir: &Path, node: usize) -> PathBuf {
    dir.join(format!("node-{node}.shard"))
}

/// The shards found in a directory, indexed by node id. Missing nodes are
/// `None`.
#[derive(Clone, Debug)]
pub struct ShardSet {
    pub header: ShardHeader,
    pub shards: Vec<Option<ShardFile>>,
}

impl ShardSet {
    /// Loads `node-*.shard` files; all headers must agree apart from the
    /// node id, and each file must sit at its own node's name.
    pub fn load(dir: &Path) -> Result<ShardSet, CliError> {
        let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
        let mut found = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| CliError::io(dir, e))?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            let Some(id) = name
                .strip_prefix("node-")
                .and_then(|r| r.strip_suffix(".shard"))
                .and_then(|r| r.parse::<usize>().ok())
            else {
                continue;
            };
            found.push((id, ShardFile::read(&entry.path())?));
        }
        found.sort_by_key(|(id, _)| *id);
        let Some(first) = found.first() else {
            return Err(CliError::Format(format!(
                "no shard files in {}",
                dir.display()
            )));
        };
        let header = first.1.header.clone();
        let mut shards = vec![None; header.n as usize];
        for (id, shard) in found {
            if !header.same_set(&shard.header) {
                return Err(CliError::Format(format!(
                    "node-{id}.shard belongs to a different shard set"
                )));
            }
            if shard.header.node_id as usize != id {
                return Err(CliError::Format(format!(
                    "node-{id}.shard claims node id {}",
                    shard.header.node_id
                )));
            }
            shards[id - 1] = Some(shard);
        }
        Ok(ShardSet { header, shards })
    }

    pub fn present(&self) -> Vec<usize> {
        (1..=self.shards.len())
            .filter(|&i| self.shards[i - 1].is_some())
            .collect()
    }
}
