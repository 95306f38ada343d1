//! Shared pieces of the on-disk formats: hashes, binary headers and readers.
//!
//! Every binary artifact starts with a 4-byte magic, a little-endian `u32`
//! version, the 32-byte vocabulary hash and the 32-byte config hash. Text
//! artifacts carry the same information in leading `#` lines.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const VERSION: u32 = 1;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Hash(pub [u8; 32]);

impl Hash {
    pub fn of(bytes: &[u8]) -> Self {
        Hash(Sha256::digest(bytes).into())
    }

    pub fn parse(s: &str) -> Option<Self> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).ok()?;
        Some(Hash(out))
    }
}

impl fmt::Display for Hash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Hash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash({self})")
    }
}

/// Hash of the attribute labels in id order.
pub fn vocab_hash(labels: &[String]) -> Hash {
    let mut h = Sha256::new();
    for l in labels {
        h.update(l.as_bytes());
        h.update(b"\n");
    }
    Hash(h.finalize().into())
}

/// Hashes every artifact carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stamp {
    pub vocab: Hash,
    pub config: Hash,
}

#[derive(Default)]
pub struct BinWriter {
    buf: Vec<u8>,
}

impl BinWriter {
    pub fn new(magic: &[u8; 4], stamp: &Stamp) -> Self {
        let mut w = Self::default();
        w.buf.extend_from_slice(magic);
        w.u32(VERSION);
        w.buf.extend_from_slice(&stamp.vocab.0);
        w.buf.extend_from_slice(&stamp.config.0);
        w
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn usize(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("size fits in u32"));
    }

    pub fn f32(&mut self, v: f64) {
        self.buf.extend_from_slice(&(v as f32).to_le_bytes());
    }

    pub fn f32s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f32(v);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug)]
pub struct BinReader<'a> {
    path: PathBuf,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> BinReader<'a> {
    /// Checks magic and version and returns the reader with the stamp.
    pub fn open(path: &Path, buf: &'a [u8], magic: &[u8; 4]) -> Result<(Self, Stamp)> {
        let mut r = Self { path: path.to_path_buf(), buf, pos: 0 };
        let m = r.take(4, "magic")?;
        if m != magic {
            return Err(r.err(format!("bad magic {:?}, expected {:?}", String::from_utf8_lossy(m), String::from_utf8_lossy(magic))));
        }
        let v = r.u32("version")?;
        if v != VERSION {
            return Err(r.err(format!("unsupported version {v}")));
        }
        let vocab = r.hash("vocab hash")?;
        let config = r.hash("config hash")?;
        Ok((r, Stamp { vocab, config }))
    }

    pub fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(&self.path, msg)
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.err(format!("truncated at byte {} reading {what}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn hash(&mut self, what: &str) -> Result<Hash> {
        Ok(Hash(self.take(32, what)?.try_into().unwrap()))
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub fn usize(&mut self, what: &str) -> Result<usize> {
        self.u32(what).map(|v| v as usize)
    }

    pub fn f32(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap())))
    }

    pub fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| self.err(format!("{what}: size overflow")))?, what)?;
        Ok(bytes.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap()))).collect())
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(self.err(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

/// `# <magic> <version>`, `# vocab <hash>`, `# config <hash>`.
pub fn text_header(magic: &str, stamp: &Stamp) -> String {
    format!("# {magic} {VERSION}\n# vocab {}\n# config {}\n", stamp.vocab, stamp.config)
}

/// Parses the header written by [`text_header`]; returns the stamp and the
/// remaining lines with their 1-based line numbers.
pub fn parse_text_header<'t>(path: &Path, text: &'t str, magic: &str) -> Result<(Stamp, Vec<(usize, &'t str)>)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| lines.next().map(|(_, l)| l).ok_or_else(|| Error::format(path, format!("truncated header: missing {what}")));
    let first = next("magic")?;
    if first != format!("# {magic} {VERSION}") {
        return Err(Error::format(path, format!("line 1: expected \"# {magic} {VERSION}\", found {first:?}")));
    }
    let mut hash_line = |key: &str| -> Result<Hash> {
        let line = next(key)?;
        line.strip_prefix(&format!("# {key} "))
            .and_then(Hash::parse)
            .ok_or_else(|| Error::format(path, format!("malformed {key} hash line {line:?}")))
    };
    let vocab = hash_line("vocab")?;
    let config = hash_line("config")?;
    Ok((Stamp { vocab, config }, lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('#')).collect()))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Missing(vec![path.to_path_buf()]),
        _ => Error::io(path, e),
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_file(path)?).map_err(|_| Error::format(path, "not valid UTF-8"))
}

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Errors with every path in `paths` that does not exist.
pub fn require(paths: &[PathBuf]) -> Result<()> {
    let missing: Vec<PathBuf> = paths.iter().filter(|p| !p.exists()).cloned().collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Missing(missing))
    }
}

/// Fixed-precision float for text reports.
pub fn fmt_f(v: f64) -> String {
    format!("{v:.6}")
}
