//! Line-oriented edge-list snapshots.
//!
//! ```text
//! # lrp-lab environment snapshot
//! # d=2
//! # s=3.2
//! # ...
//! 0,0	1,0
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::env::{EnvConfig, Environment};
use crate::error::{LabError, Result};
use crate::lattice::LatticePoint;

const MAGIC: &str = "# lrp-lab environment snapshot";

fn coords(p: LatticePoint) -> String {
    p.coords().iter().map(i64::to_string).collect::<Vec<_>>().join(",")
}

/// Renders every recorded open edge of `env`, one per line, after a config header.
pub fn render(env: &Environment) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    for line in env.config().to_key_values().lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    for (x, y) in env.open_edges() {
        out.push_str(&coords(x));
        out.push('\t');
        out.push_str(&coords(y));
        out.push('\n');
    }
    out
}

pub fn write(env: &Environment, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(render(env).as_bytes()).map_err(|e| LabError::io(path, e))?;
    w.flush().map_err(|e| LabError::io(path, e))
}

fn parse_point(s: &str) -> Result<LatticePoint> {
    let c = s
        .split(',')
        .map(|t| t.trim().parse::<i64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| LabError::Parse(format!("bad lattice point `{s}`")))?;
    LatticePoint::new(&c)
}

/// Parses a snapshot back into its config and edge list.
pub fn parse(text: &str) -> Result<(EnvConfig, Vec<(LatticePoint, LatticePoint)>)> {
    let mut header = String::new();
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(h) = line.strip_prefix('#') {
            header.push_str(h.trim());
            header.push('\n');
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (a, b) = line
            .split_once('\t')
            .ok_or_else(|| LabError::Parse(format!("line {}: expected two tab-separated points", i + 1)))?;
        edges.push((parse_point(a)?, parse_point(b)?));
    }
    Ok((EnvConfig::parse(&header)?, edges))
}

pub fn read(path: impl AsRef<Path>) -> Result<(EnvConfig, Vec<(LatticePoint, LatticePoint)>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::BackendKind;

    #[test]
    fn round_trip() {
        let cfg = EnvConfig::desk_default(21).with_backend(BackendKind::ExactBoxed { half_width: 5 });
        let env = Environment::new(cfg.clone()).unwrap();
        let text = render(&env);
        assert!(text.starts_with(MAGIC));
        let (c, edges) = parse(&text).unwrap();
        assert_eq!(c, cfg);
        assert_eq!(edges, env.open_edges());
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("# d=2\n# s=3.2\n# beta=1\n1,2 3,4\n").is_err());
    }
}
