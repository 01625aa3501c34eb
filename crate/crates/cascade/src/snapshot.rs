//! Binary index snapshot.
//!
//! All integers and floats are little-endian. Strings are a `u32` byte
//! length followed by UTF-8 bytes.
//!
//! ```text
//! magic            8 bytes   "CASCIDX\0"
//! version          u32       1
//! k1               f64       BM25 parameters the index was built for
//! b                f64
//! doc_count        u32
//! avg_doc_length   f64
//! term_count       u32
//! doc table        doc_count x { id: string, length: u32 }   (ordinal order)
//! term blocks      term_count x { term: string, n: u32, n x { ordinal: u32, tf: u32 } }
//! ```
//!
//! Term blocks are sorted by term bytes and postings by ordinal, so a
//! rebuild from the same corpus is byte-identical.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use cascade_core::{Bm25Params, InvertedIndex, Posting};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CASCIDX\0";
pub const VERSION: u32 = 1;

/// An index together with the BM25 parameters it was built with.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub params: Bm25Params,
    pub index: InvertedIndex,
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Data(format!("{what} {v} does not fit the snapshot format")))
}

pub fn encode(snapshot: &Snapshot) -> Result<Vec<u8>> {
    let index = &snapshot.index;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    out.extend_from_slice(&snapshot.params.k1.to_le_bytes());
    out.extend_from_slice(&snapshot.params.b.to_le_bytes());
    put_u32(&mut out, to_u32(index.doc_count(), "doc count")?);
    out.extend_from_slice(&index.avg_doc_length().to_le_bytes());
    put_u32(&mut out, to_u32(index.vocabulary_size(), "vocabulary size")?);
    for (id, &len) in index.doc_ids().iter().zip(index.doc_lengths()) {
        put_str(&mut out, id);
        put_u32(&mut out, len);
    }
    for (term, postings) in index.terms() {
        put_str(&mut out, term);
        put_u32(&mut out, to_u32(postings.len(), "posting list length")?);
        for p in postings {
            put_u32(&mut out, p.doc);
            put_u32(&mut out, p.tf);
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| corrupt(format!("truncated at byte {}", self.pos)))?;
        let bytes = &self.buf[self.pos..end];
        self.pos = end;
        Ok(bytes)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| corrupt("string is not UTF-8"))
    }
}

fn corrupt(msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("corrupt index snapshot: {msg}"))
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(8).ok() != Some(&MAGIC[..]) {
        return Err(corrupt("bad magic bytes"));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(corrupt(format!("unsupported version {version}, expected {VERSION}")));
    }
    let params = Bm25Params::new(c.f64()?, c.f64()?).map_err(corrupt)?;
    let doc_count = c.u32()? as usize;
    let avg = c.f64()?;
    let term_count = c.u32()? as usize;

    let mut doc_ids = Vec::with_capacity(doc_count.min(bytes.len()));
    let mut doc_lengths = Vec::with_capacity(doc_count.min(bytes.len()));
    for _ in 0..doc_count {
        doc_ids.push(c.string()?);
        doc_lengths.push(c.u32()?);
    }
    let mut postings = BTreeMap::new();
    for _ in 0..term_count {
        let term = c.string()?;
        let n = c.u32()? as usize;
        let mut list = Vec::with_capacity(n.min(bytes.len()));
        for _ in 0..n {
            list.push(Posting {
                doc: c.u32()?,
                tf: c.u32()?,
            });
        }
        if postings.insert(term.clone(), list).is_some() {
            return Err(corrupt(format!("term {term:?} appears twice")));
        }
    }
    if c.pos != bytes.len() {
        return Err(corrupt(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    let index = InvertedIndex::from_parts(postings, doc_lengths, doc_ids).map_err(corrupt)?;
    if (index.avg_doc_length() - avg).abs() > 1e-9 * avg.abs().max(1.0) {
        return Err(corrupt(format!(
            "stored avg_doc_length {avg} disagrees with the doc table ({})",
            index.avg_doc_length()
        )));
    }
    Ok(Snapshot { params, index })
}

pub fn save(path: &Path, snapshot: &Snapshot) -> Result<()> {
    let bytes = encode(snapshot)?;
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
