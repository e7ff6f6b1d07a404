//! Path export: CSV, a compact binary format, and JSON functional records.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{JumpClass, WalkPath};
use crate::error::{LabError, Result};
use crate::lattice::LatticePoint;

const BINARY_MAGIC: &[u8; 8] = b"LRPWALK1";

/// `step,x0,...,x{d-1},class` with the class of the step into that point.
pub fn path_csv(path: &WalkPath) -> String {
    let d = path.steps[0].dim();
    let mut out = String::from("step");
    for i in 0..d {
        out.push_str(&format!(",x{i}"));
    }
    out.push_str(",class\n");
    for (i, p) in path.steps.iter().enumerate() {
        out.push_str(&i.to_string());
        for c in p.coords() {
            out.push(',');
            out.push_str(&c.to_string());
        }
        out.push(',');
        out.push_str(if i == 0 { "start" } else { path.jump_log[i - 1].as_str() });
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &WalkPath, file: impl AsRef<Path>) -> Result<()> {
    let file = file.as_ref();
    fs::write(file, path_csv(path)).map_err(|e| LabError::io(file, e))
}

/// Little-endian: magic, d, n, env seed, walk seed, then `n + 1` points of
/// `d` coordinates each and `n` class bytes.
pub fn to_binary(path: &WalkPath) -> Vec<u8> {
    let d = path.steps[0].dim();
    let mut out = Vec::with_capacity(40 + path.steps.len() * (8 * d + 1));
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.extend_from_slice(&(path.len() as u64).to_le_bytes());
    out.extend_from_slice(&path.env_seed.to_le_bytes());
    out.extend_from_slice(&path.walk_seed.to_le_bytes());
    for p in &path.steps {
        for c in p.coords() {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out.extend(path.jump_log.iter().map(|c| *c as u8));
    out
}

pub fn from_binary(bytes: &[u8]) -> Result<WalkPath> {
    let bad = || LabError::Parse("truncated or malformed walk file".into());
    let mut r = bytes;
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad())?;
    if &magic != BINARY_MAGIC {
        return Err(LabError::Parse("not a walk file".into()));
    }
    let mut word = || -> Result<u64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(|_| bad())?;
        Ok(u64::from_le_bytes(b))
    };
    let d = word()? as usize;
    let n = word()? as usize;
    let env_seed = word()?;
    let walk_seed = word()?;
    let mut steps = Vec::with_capacity(n + 1);
    let mut c = vec![0i64; d];
    for _ in 0..=n {
        for v in c.iter_mut() {
            *v = word()? as i64;
        }
        steps.push(LatticePoint::new(&c)?);
    }
    let rest = &bytes[bytes.len() - r.len()..];
    if rest.len() != n {
        return Err(bad());
    }
    let jump_log = rest
        .iter()
        .map(|&b| match b {
            0 => Ok(JumpClass::Stay),
            1 => Ok(JumpClass::Short),
            2 => Ok(JumpClass::Long),
            _ => Err(bad()),
        })
        .collect::<Result<_>>()?;
    Ok(WalkPath {
        steps,
        env_seed,
        walk_seed,
        jump_log,
        revealed: 0,
    })
}

pub fn write_binary(path: &WalkPath, file: impl AsRef<Path>) -> Result<()> {
    let file = file.as_ref();
    let f = fs::File::create(file).map_err(|e| LabError::io(file, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(&to_binary(path)).map_err(|e| LabError::io(file, e))?;
    w.flush().map_err(|e| LabError::io(file, e))
}

pub fn read_binary(file: impl AsRef<Path>) -> Result<WalkPath> {
    let file = file.as_ref();
    from_binary(&fs::read(file).map_err(|e| LabError::io(file, e))?)
}

/// One functional value keyed by the walk and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalRecord {
    pub env_seed: u64,
    pub walk_seed: u64,
    pub k: u32,
    pub epsilon: f64,
    pub name: String,
    pub value: f64,
}

impl FunctionalRecord {
    pub fn new(path: &WalkPath, k: u32, epsilon: f64, name: &str, value: f64) -> Self {
        Self {
            env_seed: path.env_seed,
            walk_seed: path.walk_seed,
            k,
            epsilon,
            name: name.to_string(),
            value,
        }
    }
}

/// One JSON object per line.
pub fn records_jsonl(records: &[FunctionalRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, Environment};
    use crate::walk::run_walk;

    #[test]
    fn binary_round_trip() {
        let mut env = Environment::new(EnvConfig::desk_default(4)).unwrap();
        let mut p = run_walk(&mut env, 500, 9).unwrap();
        p.revealed = 0;
        assert_eq!(from_binary(&to_binary(&p)).unwrap(), p);
        assert!(from_binary(&to_binary(&p)[..50]).is_err());
    }

    #[test]
    fn csv_layout() {
        let p = WalkPath::from_points(
            vec![LatticePoint::new(&[0, 0]).unwrap(), LatticePoint::new(&[12, 0]).unwrap()],
            8,
        )
        .unwrap();
        assert_eq!(path_csv(&p), "step,x0,x1,class\n0,0,0,start\n1,12,0,long\n");
    }

    #[test]
    fn jsonl_lines() {
        let p = WalkPath::from_points(vec![LatticePoint::origin(2)], 8).unwrap();
        let r = FunctionalRecord::new(&p, 10, 0.1, "w_k", 0.5);
        let s = records_jsonl(&[r.clone(), r]).unwrap();
        assert_eq!(s.lines().count(), 2);
        assert!(s.contains("\"name\":\"w_k\""));
    }
}
