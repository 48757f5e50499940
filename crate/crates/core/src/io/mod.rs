//! Little-endian binary containers: GVGG (weights), GFCH (feature cache and
//! golden vectors) and GRFM (trained forest).
//!
//! All three share one envelope: a 4-byte magic, a body starting with a
//! `u32` version, and a trailing CRC32 computed over every byte after the
//! magic. Files are decoded structurally before the checksum is compared, so
//! a short file reports [`Error::Truncated`] while a damaged body of the
//! right shape reports [`Error::Integrity`].

pub mod cache;
pub mod model;
pub mod weights;

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) const FORMAT_VERSION: u32 = 1;

pub(crate) struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub(crate) fn new(magic: &[u8; 4]) -> Self {
        let mut buf = Vec::with_capacity(1 << 16);
        buf.extend_from_slice(magic);
        let mut enc = Encoder { buf };
        enc.u32(FORMAT_VERSION);
        enc
    }

    pub(crate) fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub(crate) fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn f32s(&mut self, vs: &[f32]) {
        self.buf.reserve(vs.len() * 4);
        for v in vs {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    /// `u16` length prefix followed by UTF-8 bytes.
    pub(crate) fn str16(&mut self, s: &str) -> Result<()> {
        let len = u16::try_from(s.len())
            .map_err(|_| Error::Input(format!("string of {} bytes exceeds u16 length prefix", s.len())))?;
        self.u16(len);
        self.buf.extend_from_slice(s.as_bytes());
        Ok(())
    }

    pub(crate) fn count(&mut self, n: usize, what: &str) -> Result<()> {
        let n = u32::try_from(n).map_err(|_| Error::Input(format!("{what} {n} exceeds u32")))?;
        self.u32(n);
        Ok(())
    }

    pub(crate) fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf[4..]);
        self.buf.extend_from_slice(&crc.to_le_bytes());
        self.buf
    }
}

pub(crate) struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
    /// End of the body; the last four bytes hold the CRC.
    end: usize,
}

impl<'a> Decoder<'a> {
    /// Checks magic and version and positions the decoder at the first body
    /// field after the version.
    pub(crate) fn new(buf: &'a [u8], magic: &[u8; 4]) -> Result<Self> {
        if buf.len() < 4 {
            return Err(Error::Truncated {
                offset: buf.len(),
                needed: 4 - buf.len(),
            });
        }
        if &buf[..4] != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&buf[..4]),
                String::from_utf8_lossy(magic)
            )));
        }
        let mut dec = Decoder {
            buf,
            pos: 4,
            end: buf.len().saturating_sub(4).max(4),
        };
        let version = dec.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported version {version}, expected {FORMAT_VERSION}"
            )));
        }
        Ok(dec)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.end - self.pos < n {
            // the CRC trailer must still fit after the field
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n - (self.end - self.pos),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f32s_into(&mut self, n: usize, out: &mut Vec<f32>) -> Result<()> {
        let bytes = n
            .checked_mul(4)
            .ok_or_else(|| Error::Format(format!("array length {n} overflows")))?;
        let raw = self.take(bytes)?;
        out.extend(raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())));
        Ok(())
    }

    pub(crate) fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let mut v = Vec::new();
        self.f32s_into(n, &mut v)?;
        Ok(v)
    }

    pub(crate) fn str16(&mut self) -> Result<String> {
        let len = self.u16()? as usize;
        let at = self.pos;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::Format(format!("invalid UTF-8 string at offset {at}")))
    }

    /// Requires the body to be fully consumed, then compares the CRC.
    pub(crate) fn finish(self) -> Result<()> {
        if self.buf.len() < self.end + 4 {
            return Err(Error::Truncated {
                offset: self.buf.len(),
                needed: self.end + 4 - self.buf.len(),
            });
        }
        if self.pos != self.end {
            return Err(Error::Format(format!(
                "{} unexpected bytes before checksum",
                self.end - self.pos
            )));
        }
        let stored = u32::from_le_bytes(self.buf[self.end..].try_into().unwrap());
        let computed = crc32fast::hash(&self.buf[4..self.end]);
        if stored != computed {
            return Err(Error::Integrity { stored, computed });
        }
        Ok(())
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
