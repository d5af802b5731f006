//! Little-endian binary encoding for checkpoints. Floats are written as raw
//! bits so a load reproduces every parameter exactly.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub struct BinWriter<W: Write> {
    inner: W,
}

impl<W: Write> BinWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.inner.write_all(b)?;
        Ok(())
    }

    pub fn u8(&mut self, x: u8) -> Result<()> {
        self.bytes(&[x])
    }

    pub fn u64(&mut self, x: u64) -> Result<()> {
        self.bytes(&x.to_le_bytes())
    }

    pub fn f64(&mut self, x: f64) -> Result<()> {
        self.u64(x.to_bits())
    }

    pub fn f64s(&mut self, xs: &[f64]) -> Result<()> {
        self.u64(xs.len() as u64)?;
        for &x in xs {
            self.f64(x)?;
        }
        Ok(())
    }

    pub fn str(&mut self, s: &str) -> Result<()> {
        self.u64(s.len() as u64)?;
        self.bytes(s.as_bytes())
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

pub struct BinReader<R: Read> {
    inner: R,
}

impl<R: Read> BinReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner }
    }

    pub fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Checkpoint(format!("truncated: {e}")))?;
        Ok(buf)
    }

    pub fn expect_magic(&mut self, magic: &[u8]) -> Result<()> {
        if self.bytes(magic.len())? != magic {
            return Err(Error::Checkpoint(format!(
                "bad magic, expected {:?}",
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    pub fn u64(&mut self) -> Result<u64> {
        let b = self.bytes(8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("length overflow".into()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.usize()?;
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.usize()?;
        String::from_utf8(self.bytes(n)?).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}
