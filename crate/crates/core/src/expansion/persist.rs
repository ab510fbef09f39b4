//! Binary table container.
//!
//! ```text
//! "SHGT"  u32 version  [u8; 64] material hash (hex)
//! u32 N   u32 L   u32 i1  u32 i2  u32 i3  u8 full_parity
//! for ℓ in 0..=L, m in 0..=ℓ:  u32 count (= N²), count × (f64 re, f64 im)
//! [u8; 32] SHA-256 of everything above
//! ```
//!
//! All integers and floats little-endian. Negative orders are rebuilt on load.

use std::path::Path;

use num_complex::Complex64;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{lm_count, lm_index, CoeffTable, MultiIndex};
use crate::error::{Error, Result};
use crate::materials::{ExtendedTensor, MaterialHash};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"SHGT";
const HEADER_LEN: usize = 4 + 4 + 64 + 4 * 5 + 1;
const CHECKSUM_LEN: usize = 32;

/// `table_<i1>_<i2>_<i3>.shgt`
pub fn table_file_name(mi: MultiIndex) -> String {
    format!("table_{}_{}_{}.shgt", mi.0[0], mi.0[1], mi.0[2])
}

pub fn table_to_bytes(table: &CoeffTable) -> Vec<u8> {
    let n = table.field_dim();
    let nn = n * n;
    let mut out = Vec::with_capacity(HEADER_LEN + (table.degree() + 1) * (table.degree() + 2) / 2 * (4 + 16 * nn));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(table.material_hash().to_hex().as_bytes());
    for v in [n as u32, table.degree() as u32, table.multi_index().0[0], table.multi_index().0[1], table.multi_index().0[2]] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(u8::from(table.full_parity()));
    for l in 0..=table.degree() {
        for m in 0..=(l as i32) {
            out.extend_from_slice(&(nn as u32).to_le_bytes());
            for z in table.block(l, m) {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Corrupt(format!("unexpected end of data at byte {}", self.pos)));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Parse a table; if `expected` is given the stored material hash must match.
pub fn table_from_bytes(data: &[u8], expected: Option<MaterialHash>) -> Result<CoeffTable> {
    let mut r = Reader { data, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Corrupt("bad magic bytes".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let hash_text = std::str::from_utf8(r.take(64)?).map_err(|_| Error::Corrupt("material hash is not text".into()))?;
    if let Some(want) = expected {
        if hash_text != want.to_hex() {
            return Err(Error::HashMismatch {
                found: hash_text.to_string(),
                expected: want.to_hex(),
            });
        }
    }
    let hash = MaterialHash::from_hex(hash_text).ok_or_else(|| Error::Corrupt("material hash is not hex".into()))?;

    if data.len() < HEADER_LEN + CHECKSUM_LEN {
        return Err(Error::Corrupt("file shorter than header and checksum".into()));
    }
    let (payload, checksum) = data.split_at(data.len() - CHECKSUM_LEN);
    if Sha256::digest(payload).as_slice() != checksum {
        return Err(Error::Corrupt("checksum mismatch (truncated or modified file)".into()));
    }

    let n = r.u32()? as usize;
    let degree = r.u32()? as usize;
    let mi = MultiIndex([r.u32()?, r.u32()?, r.u32()?]);
    let full_parity = match r.take(1)?[0] {
        0 => false,
        1 => true,
        b => return Err(Error::Corrupt(format!("invalid parity flag {b}"))),
    };
    if ![1, 3, 4, 5].contains(&n) {
        return Err(Error::Corrupt(format!("invalid field dimension {n}")));
    }
    let nn = n * n;
    let expected_len = HEADER_LEN + (degree + 1) * (degree + 2) / 2 * (4 + 16 * nn) + CHECKSUM_LEN;
    if data.len() != expected_len {
        return Err(Error::Corrupt(format!("length {} does not match header ({expected_len})", data.len())));
    }
    let mut entries = vec![Complex64::new(0.0, 0.0); lm_count(degree) * nn];
    for l in 0..=degree {
        for m in 0..=(l as i32) {
            let count = r.u32()? as usize;
            if count != nn {
                return Err(Error::Corrupt(format!("block ({l},{m}) has {count} entries, expected {nn}")));
            }
            let o = lm_index(l, m) * nn;
            for z in &mut entries[o..o + nn] {
                *z = Complex64::new(r.f64()?, r.f64()?);
            }
        }
    }
    let scale = entries.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    for l in 0..=degree {
        let o = lm_index(l, 0) * nn;
        if entries[o..o + nn].iter().any(|z| !(z.im.abs() <= 1e-8 * scale)) {
            return Err(Error::Corrupt(format!("order-0 block of degree {l} is not real")));
        }
    }
    // mirror m > 0 onto m < 0
    for l in 0..=degree {
        for m in 1..=(l as i32) {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let (p, q) = (lm_index(l, m) * nn, lm_index(l, -m) * nn);
            for k in 0..nn {
                entries[q + k] = entries[p + k].conj() * sign;
            }
        }
    }
    Ok(CoeffTable::raw_parts(hash, n, degree, mi, full_parity, entries))
}

pub fn save_table(table: &CoeffTable, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, table_to_bytes(table))?;
    Ok(())
}

pub fn load_table(path: impl AsRef<Path>) -> Result<CoeffTable> {
    table_from_bytes(&std::fs::read(path)?, None)
}

/// Load a table and require it to belong to `ext`.
pub fn load_table_for(path: impl AsRef<Path>, ext: &ExtendedTensor) -> Result<CoeffTable> {
    table_from_bytes(&std::fs::read(path)?, Some(ext.material_hash()))
}

/// Debug dump: header fields plus `m ≥ 0` blocks as `[re, im]` pairs.
pub fn table_to_json(table: &CoeffTable) -> String {
    let mut blocks = Vec::new();
    for l in 0..=table.degree() {
        for m in 0..=(l as i32) {
            let block: Vec<[f64; 2]> = table.block(l, m).iter().map(|z| [z.re, z.im]).collect();
            blocks.push(json!({ "l": l, "m": m, "block": block }));
        }
    }
    let doc = json!({
        "format_version": FORMAT_VERSION,
        "material_hash": table.material_hash().to_hex(),
        "field_dim": table.field_dim(),
        "degree": table.degree(),
        "multi_index": table.multi_index().0,
        "full_parity": table.full_parity(),
        "entries": blocks,
    });
    serde_json::to_string_pretty(&doc).expect("json serialization of plain values")
}
