//! Versioned flat weight files.
//!
//! ```text
//! magic    8 bytes "ADLWGHT\0"
//! version  u32     1
//! config   9 x u64: d_t d_s d_st d_y weather_steps hidden_width
//!                   embedding_dim conv_filters conv_kernel
//! count    u64     number of parameters
//! values   count x f64, layer order (time, space, space-time, joint, head),
//!          weights before biases within a layer
//! ```
//! All integers and floats are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{EmbeddingNetConfig, EmbeddingNetwork};
use crate::nn::Trainable;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"ADLWGHT\0";
const VERSION: u32 = 1;

pub fn save_weights(net: &EmbeddingNetwork, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let c = net.config();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [
        c.d_t,
        c.d_s,
        c.d_st,
        c.d_y,
        c.weather_steps,
        c.hidden_width,
        c.embedding_dim,
        c.conv_filters,
        c.conv_kernel,
    ] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    w.write_all(&(net.param_count() as u64).to_le_bytes())?;
    for v in net.parameters().values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated weight file at {what}")),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

pub fn load_weights(path: &Path) -> Result<EmbeddingNetwork> {
    let mut r = BufReader::new(File::open(path)?);
    if &read_exact::<8>(&mut r, "magic")? != MAGIC {
        return Err(Error::Format("not a weight file".into()));
    }
    let version = u32::from_le_bytes(read_exact(&mut r, "version")?);
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    let mut field = || -> Result<usize> { Ok(u64::from_le_bytes(read_exact(&mut r, "config")?) as usize) };
    let cfg = EmbeddingNetConfig {
        d_t: field()?,
        d_s: field()?,
        d_st: field()?,
        d_y: field()?,
        weather_steps: field()?,
        hidden_width: field()?,
        embedding_dim: field()?,
        conv_filters: field()?,
        conv_kernel: field()?,
    };
    let count = u64::from_le_bytes(read_exact(&mut r, "count")?) as usize;
    let mut net = EmbeddingNetwork::build(cfg, 0).map_err(|e| Error::Format(e.to_string()))?;
    if count != net.param_count() {
        return Err(Error::Format(format!(
            "weight count {count} does not match config ({})",
            net.param_count()
        )));
    }
    for v in net.parameters_mut().values_mut() {
        *v = f64::from_le_bytes(read_exact(&mut r, "values")?);
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes in weight file".into()));
    }
    Ok(net)
}
