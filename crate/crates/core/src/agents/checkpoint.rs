//! Versioned binary checkpoint of both agents.
//!
//! Layout (little-endian): magic `RGCKPT\0\0`, u32 version, u32 D, u32 V,
//! u32 h, f64 speaker temperature, f64 listener temperature, u8 init scheme
//! (0 zeros, 1 uniform, 2 gaussian), f64 scheme parameter, u64 init seed,
//! u32-length-prefixed rng algorithm name, then the speaker attribute map
//! (D x V), pair mixer (2 x h), readout (h x 1) and listener attribute map
//! (D x V), each row-major `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::init::{AgentDims, InitScheme};
use super::listener::ListenerParams;
use super::speaker::SpeakerParams;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"RGCKPT\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub speaker: SpeakerParams,
    pub listener: ListenerParams,
    pub init: InitScheme,
    pub init_seed: u64,
    pub rng_algorithm: String,
}

impl Checkpoint {
    pub fn dims(&self) -> AgentDims {
        AgentDims {
            dim: self.speaker.dim(),
            vocab: self.speaker.vocab(),
            hidden: self.speaker.hidden(),
        }
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(Error::file(path))?);
    let dims = ckpt.dims();
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    for d in [dims.dim, dims.vocab, dims.hidden] {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    w.write_all(&ckpt.speaker.temperature.to_le_bytes())?;
    w.write_all(&ckpt.listener.temperature.to_le_bytes())?;
    let (code, param) = ckpt.init.code();
    w.write_all(&[code])?;
    w.write_all(&param.to_le_bytes())?;
    w.write_all(&ckpt.init_seed.to_le_bytes())?;
    w.write_all(&(ckpt.rng_algorithm.len() as u32).to_le_bytes())?;
    w.write_all(ckpt.rng_algorithm.as_bytes())?;
    for m in [
        &ckpt.speaker.attribute_map,
        &ckpt.speaker.pair_mixer,
        &ckpt.speaker.readout,
        &ckpt.listener.attribute_map,
    ] {
        for x in m.data() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).map_err(Error::file(path))?).read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0, path };
    if cur.take(8)? != CHECKPOINT_MAGIC {
        return Err(cur.err("not a checkpoint (bad magic)"));
    }
    let version = cur.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(cur.err(format!("unsupported checkpoint version {version}")));
    }
    let dims = AgentDims {
        dim: cur.u32()? as usize,
        vocab: cur.u32()? as usize,
        hidden: cur.u32()? as usize,
    };
    if dims.dim == 0 || dims.vocab == 0 || dims.hidden == 0 {
        return Err(cur.err("checkpoint dimensions must be positive"));
    }
    let speaker_t = cur.f64()?;
    let listener_t = cur.f64()?;
    let code = cur.take(1)?[0];
    let param = cur.f64()?;
    let init = InitScheme::from_code(code, param).ok_or_else(|| cur.err(format!("unknown init scheme {code}")))?;
    let init_seed = cur.u64()?;
    let n = cur.u32()? as usize;
    let rng_algorithm = String::from_utf8(cur.take(n)?.to_vec()).map_err(|_| cur.err("rng name is not UTF-8"))?;
    let attribute_map = cur.matrix(dims.dim, dims.vocab)?;
    let pair_mixer = cur.matrix(2, dims.hidden)?;
    let readout = cur.matrix(dims.hidden, 1)?;
    let listener_map = cur.matrix(dims.dim, dims.vocab)?;
    if cur.pos != bytes.len() {
        return Err(cur.err("trailing bytes after checkpoint payload"));
    }
    let speaker = SpeakerParams {
        attribute_map,
        pair_mixer,
        readout,
        temperature: speaker_t,
    };
    speaker.validate()?;
    Ok(Checkpoint {
        speaker,
        listener: ListenerParams {
            attribute_map: listener_map,
            temperature: listener_t,
        },
        init,
        init_seed,
        rng_algorithm,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Corrupt {
            path: self.path.to_path_buf(),
            offset: self.pos,
            message: msg.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.err(format!("truncated checkpoint: need {n} more bytes")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
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

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let data = (0..rows * cols).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        Matrix::from_vec(rows, cols, data).map_err(|e| self.err(e.to_string()))
    }
}
