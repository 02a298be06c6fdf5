//! Binary agent checkpoints.
//!
//! Layout, all integers little-endian:
//! `b"CDQN"`, u32 version, u32 JSON length + network shape JSON,
//! u32 JSON length + train config JSON, u64 parameter count, online
//! parameters as f64, target parameters as f64, 32-byte RNG seed, u64 RNG
//! stream, u128 RNG word position, u64 episodes, u64 environment steps,
//! u64 updates.

use super::{AgentError, Network, NetworkShape, TrainConfig};
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"CDQN";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentCheckpoint {
    pub online: Network,
    pub target: Network,
    pub config: TrainConfig,
    pub rng: ChaCha8Rng,
    pub episodes: u64,
    pub env_steps: u64,
    pub updates: u64,
}

fn write_json<W: Write, T: serde::Serialize>(w: &mut W, v: &T) -> Result<(), AgentError> {
    let bytes = serde_json::to_vec(v).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
    w.write_all(&(bytes.len() as u32).to_le_bytes())?;
    w.write_all(&bytes)?;
    Ok(())
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N], AgentError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_json<R: Read, T: serde::de::DeserializeOwned>(r: &mut R) -> Result<T, AgentError> {
    let len = u32::from_le_bytes(read_array(r)?) as usize;
    let mut bytes = vec![0u8; len];
    r.read_exact(&mut bytes)?;
    serde_json::from_slice(&bytes).map_err(|e| AgentError::Checkpoint(e.to_string()))
}

fn read_params<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>, AgentError> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

impl AgentCheckpoint {
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), AgentError> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        write_json(&mut w, &self.online.shape)?;
        write_json(&mut w, &self.config)?;
        w.write_all(&(self.online.params.len() as u64).to_le_bytes())?;
        for net in [&self.online, &self.target] {
            for p in &net.params {
                w.write_all(&p.to_le_bytes())?;
            }
        }
        w.write_all(&self.rng.get_seed())?;
        w.write_all(&self.rng.get_stream().to_le_bytes())?;
        w.write_all(&self.rng.get_word_pos().to_le_bytes())?;
        for v in [self.episodes, self.env_steps, self.updates] {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self, AgentError> {
        if &read_array::<_, 4>(&mut r)? != MAGIC {
            return Err(AgentError::Checkpoint("not an agent checkpoint".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != VERSION {
            return Err(AgentError::Checkpoint(format!("unsupported version {version}")));
        }
        let shape: NetworkShape = read_json(&mut r)?;
        let config: TrainConfig = read_json(&mut r)?;
        let n = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let mut online = Network::zeroed(shape)?;
        if online.param_count() != n {
            return Err(AgentError::Checkpoint(format!(
                "{n} parameters stored, shape needs {}",
                online.param_count()
            )));
        }
        let mut target = online.clone();
        online.params = read_params(&mut r, n)?;
        target.params = read_params(&mut r, n)?;
        let mut rng = ChaCha8Rng::from_seed(read_array(&mut r)?);
        rng.set_stream(u64::from_le_bytes(read_array(&mut r)?));
        rng.set_word_pos(u128::from_le_bytes(read_array(&mut r)?));
        let episodes = u64::from_le_bytes(read_array(&mut r)?);
        let env_steps = u64::from_le_bytes(read_array(&mut r)?);
        let updates = u64::from_le_bytes(read_array(&mut r)?);
        Ok(Self { online, target, config, rng, episodes, env_steps, updates })
    }

    pub fn save_file(&self, path: &std::path::Path) -> Result<(), AgentError> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.save(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_file(path: &std::path::Path) -> Result<Self, AgentError> {
        Self::load(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::ScalePreset;
    use rand::Rng;

    #[test]
    fn round_trip_is_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let online = Network::new(NetworkShape::mini(), &mut rng).unwrap();
        let mut target = online.clone();
        target.params[3] = -0.125;
        let _: u64 = rng.gen();
        let ckpt = AgentCheckpoint {
            online,
            target,
            config: TrainConfig { preset: ScalePreset::Mini, ..TrainConfig::default() },
            rng,
            episodes: 7,
            env_steps: 700,
            updates: 170,
        };
        let mut buf = Vec::new();
        ckpt.save(&mut buf).unwrap();
        let back = AgentCheckpoint::load(&buf[..]).unwrap();
        assert_eq!(back, ckpt);
        let (mut a, mut b) = (ckpt.rng.clone(), back.rng.clone());
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(matches!(AgentCheckpoint::load(&b"CDET\x01\0\0\0"[..]), Err(AgentError::Checkpoint(_))));
    }
}
