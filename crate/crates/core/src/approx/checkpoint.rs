//! Versioned parameter checkpoints.
//!
//! Binary layout (little endian):
//!
//! ```text
//! magic    8 bytes  "CRMCKPT\0"
//! version  u32      (currently 1)
//! count    u32      number of networks
//! per network:
//!   name_len u32, name bytes (utf-8)
//!   n_sizes  u32, sizes u32 * n_sizes
//!   n_logstd u32, log_std f64 * n_logstd
//!   n_params u64, params f64 * n_params
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Mlp;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"CRMCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedNet {
    pub name: String,
    pub layer_sizes: Vec<usize>,
    #[serde(default)]
    pub log_std: Vec<f64>,
    pub params: Vec<f64>,
}

impl NamedNet {
    pub fn from_mlp(name: &str, net: &Mlp, log_std: &[f64]) -> Self {
        Self {
            name: name.to_string(),
            layer_sizes: net.layer_sizes().to_vec(),
            log_std: log_std.to_vec(),
            params: net.params().to_vec(),
        }
    }

    pub fn to_mlp(&self) -> Result<Mlp> {
        Mlp::from_flat(&self.layer_sizes, self.params.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub nets: Vec<NamedNet>,
}

impl Checkpoint {
    pub fn new(nets: Vec<NamedNet>) -> Self {
        Self {
            version: FORMAT_VERSION,
            nets,
        }
    }

    pub fn get(&self, name: &str) -> Result<&NamedNet> {
        self.nets
            .iter()
            .find(|n| n.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing network `{name}`")))
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.nets.len() as u32).to_le_bytes())?;
        for net in &self.nets {
            w.write_all(&(net.name.len() as u32).to_le_bytes())?;
            w.write_all(net.name.as_bytes())?;
            w.write_all(&(net.layer_sizes.len() as u32).to_le_bytes())?;
            for &s in &net.layer_sizes {
                w.write_all(&(s as u32).to_le_bytes())?;
            }
            w.write_all(&(net.log_std.len() as u32).to_le_bytes())?;
            for v in &net.log_std {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&(net.params.len() as u64).to_le_bytes())?;
            for v in &net.params {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let count = read_u32(&mut r)? as usize;
        let mut nets = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = read_u32(&mut r)? as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::Checkpoint("network name is not utf-8".into()))?;
            let n_sizes = read_u32(&mut r)? as usize;
            let layer_sizes = (0..n_sizes)
                .map(|_| read_u32(&mut r).map(|s| s as usize))
                .collect::<Result<Vec<_>>>()?;
            let n_log_std = read_u32(&mut r)? as usize;
            let log_std = (0..n_log_std).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)?;
            let n_params = u64::from_le_bytes(buf) as usize;
            let params = (0..n_params).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
            let net = NamedNet {
                name,
                layer_sizes,
                log_std,
                params,
            };
            // validates shapes and finiteness
            net.to_mlp()?;
            nets.push(net);
        }
        Ok(Self { version, nets })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_binary(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_binary(std::io::BufReader::new(file))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Self = serde_json::from_str(text)?;
        for net in &ckpt.nets {
            net.to_mlp()?;
        }
        Ok(ckpt)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Mlp::glorot(&[3, 4, 2], &mut rng).unwrap();
        let b = Mlp::glorot(&[3, 1], &mut rng).unwrap();
        Checkpoint::new(vec![
            NamedNet::from_mlp("actor", &a, &[0.0, -0.5]),
            NamedNet::from_mlp("critic", &b, &[]),
        ])
    }

    #[test]
    fn binary_roundtrip_is_exact() {
        let ckpt = sample();
        let mut bytes = Vec::new();
        ckpt.write_binary(&mut bytes).unwrap();
        assert_eq!(Checkpoint::read_binary(bytes.as_slice()).unwrap(), ckpt);
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let ckpt = sample();
        let text = ckpt.to_json().unwrap();
        assert_eq!(Checkpoint::from_json(&text).unwrap(), ckpt);
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let mut bytes = Vec::new();
        sample().write_binary(&mut bytes).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::read_binary(bad.as_slice()).is_err());
        let mut bad = bytes;
        bad[8] = 9;
        let err = Checkpoint::read_binary(bad.as_slice()).unwrap_err();
        assert!(err.to_string().contains("version"));
    }

    #[test]
    fn rejects_truncated_file() {
        let mut bytes = Vec::new();
        sample().write_binary(&mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(Checkpoint::read_binary(bytes.as_slice()).is_err());
    }
}
