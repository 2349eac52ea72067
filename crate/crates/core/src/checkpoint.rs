//! Versioned binary checkpoint container.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic        8 bytes  "LDDPOCKP"
//! version      u32      FORMAT_VERSION
//! vocab_size   u32
//! dim          u32
//! bos eos pad  u32 x3
//! embedding    f64 x V*d   (row-major V x d)
//! output       f64 x d*V   (row-major d x V)
//! bias         f64 x V
//! has_optim    u8          0 or 1
//! [if has_optim]
//!   step       u64
//!   beta1 beta2 eps weight_decay   f64 x4
//!   first moment  (embedding, output, bias)
//!   second moment (embedding, output, bias)
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::optim::{AdamWConfig, AdamWState};
use crate::tinylm::{ModelGradients, ModelParams, Vocab};

pub const MAGIC: &[u8; 8] = b"LDDPOCKP";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub optimizer: Option<AdamWState>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut out = Vec::with_capacity(64 + 8 * p.num_params() * 3);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        for x in [p.vocab.size as u32, p.dim as u32, p.vocab.bos, p.vocab.eos, p.vocab.pad] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        put_arrays(&mut out, p.slices());
        match &self.optimizer {
            None => out.push(0),
            Some(st) => {
                out.push(1);
                out.extend_from_slice(&st.step.to_le_bytes());
                for x in [st.config.beta1, st.config.beta2, st.config.eps, st.config.weight_decay] {
                    out.extend_from_slice(&x.to_le_bytes());
                }
                put_arrays(&mut out, st.first_moment.slices());
                put_arrays(&mut out, st.second_moment.slices());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("bad magic header".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version} (expected {FORMAT_VERSION})")));
        }
        let size = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let vocab = Vocab::new(size, r.u32()?, r.u32()?, r.u32()?).map_err(|e| Error::Format(e.to_string()))?;
        let mut params = ModelParams::zeros(vocab, dim).map_err(|e| Error::Format(e.to_string()))?;
        for s in params.slices_mut() {
            r.fill(s)?;
        }
        let optimizer = match r.take(1)?[0] {
            0 => None,
            1 => {
                let step = r.u64()?;
                let config = AdamWConfig { beta1: r.f64()?, beta2: r.f64()?, eps: r.f64()?, weight_decay: r.f64()? };
                let mut first_moment = ModelGradients::zeros_like(&params);
                let mut second_moment = ModelGradients::zeros_like(&params);
                for s in first_moment.slices_mut() {
                    r.fill(s)?;
                }
                for s in second_moment.slices_mut() {
                    r.fill(s)?;
                }
                Some(AdamWState { config, step, first_moment, second_moment })
            }
            flag => return Err(Error::Format(format!("bad optimizer flag {flag}"))),
        };
        if r.pos != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        params.validate().map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self { params, optimizer })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn put_arrays(out: &mut Vec<u8>, arrays: [&[f64]; 3]) {
    for a in arrays {
        for x in a {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format("unexpected end of checkpoint".into())),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn fill(&mut self, dst: &mut [f64]) -> Result<()> {
        for x in dst {
            *x = self.f64()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tinylm::init_params;

    fn sample_checkpoint(with_optim: bool) -> Checkpoint {
        let params = init_params(9, Vocab::with_size(7).unwrap(), 3, 0.4).unwrap();
        let optimizer = with_optim.then(|| {
            let mut st = AdamWState::new(&params, AdamWConfig::default()).unwrap();
            st.step = 17;
            st.first_moment.bias[2] = 0.25;
            st.second_moment.output[5] = 1e-6;
            st
        });
        Checkpoint { params, optimizer }
    }

    #[test]
    fn round_trip() {
        for with_optim in [false, true] {
            let ck = sample_checkpoint(with_optim);
            assert_eq!(Checkpoint::from_bytes(&ck.to_bytes()).unwrap(), ck);
        }
    }

    #[test]
    fn rejects_other_versions() {
        let mut bytes = sample_checkpoint(false).to_bytes();
        bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
        let err = Checkpoint::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("version 2"), "{err}");
    }

    #[test]
    fn rejects_corruption() {
        let bytes = sample_checkpoint(true).to_bytes();
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad_magic).is_err());
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(Checkpoint::from_bytes(&trailing).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let ck = sample_checkpoint(true);
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
    }
}
