//! Plain-text checkpoint of named networks and vectors.
//!
//! ```text
//! esa-checkpoint 1
//! meta <key> <value...>
//! mlp <name> <n_sizes> <size>... <n_params>
//! <one parameter per line>
//! vec <name> <len>
//! <one value per line>
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so
//! loading reproduces every bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::mlp::Mlp;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "esa-checkpoint";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub nets: BTreeMap<String, Mlp>,
    pub vectors: BTreeMap<String, Vec<f64>>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(bad(format!("invalid entry name {name:?}")));
    }
    Ok(())
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {CHECKPOINT_VERSION}");
        for (k, v) in &self.meta {
            check_name(k)?;
            if v.contains('\n') {
                return Err(bad("meta values must be single-line"));
            }
            let _ = writeln!(out, "meta {k} {v}");
        }
        for (name, net) in &self.nets {
            check_name(name)?;
            let sizes: Vec<String> = net.sizes().iter().map(|s| s.to_string()).collect();
            let _ = writeln!(out, "mlp {name} {} {} {}", net.sizes().len(), sizes.join(" "), net.param_count());
            for p in net.params() {
                let _ = writeln!(out, "{p:?}");
            }
        }
        for (name, v) in &self.vectors {
            check_name(name)?;
            let _ = writeln!(out, "vec {name} {}", v.len());
            for x in v {
                let _ = writeln!(out, "{x:?}");
            }
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty checkpoint"))?;
        let mut h = header.split_whitespace();
        if h.next() != Some(MAGIC) {
            return Err(bad("missing checkpoint header"));
        }
        let version: u32 = h.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("missing version"))?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported checkpoint version {version}")));
        }
        let mut ck = Checkpoint::new();
        let read_values = |lines: &mut std::str::Lines, n: usize| -> Result<Vec<f64>> {
            (0..n)
                .map(|_| {
                    let l = lines.next().ok_or_else(|| bad("truncated checkpoint"))?;
                    l.trim().parse::<f64>().map_err(|e| bad(format!("bad value {l:?}: {e}")))
                })
                .collect()
        };
        while let Some(line) = lines.next() {
            let mut parts = line.split_whitespace();
            match parts.next() {
                None => continue,
                Some("meta") => {
                    let key = parts.next().ok_or_else(|| bad("meta without key"))?;
                    let value = line
                        .splitn(3, char::is_whitespace)
                        .nth(2)
                        .unwrap_or("")
                        .to_string();
                    ck.meta.insert(key.to_string(), value);
                }
                Some("mlp") => {
                    let name = parts.next().ok_or_else(|| bad("mlp without name"))?.to_string();
                    let nums: Vec<usize> = parts
                        .map(|p| p.parse().map_err(|_| bad(format!("bad integer {p:?}"))))
                        .collect::<Result<_>>()?;
                    let n_sizes = *nums.first().ok_or_else(|| bad("mlp without sizes"))?;
                    if nums.len() != n_sizes + 2 {
                        return Err(bad(format!("malformed mlp header for {name}")));
                    }
                    let sizes = nums[1..=n_sizes].to_vec();
                    let count = nums[n_sizes + 1];
                    let params = read_values(&mut lines, count)?;
                    let net = Mlp::from_parts(sizes, params).map_err(|e| bad(e.to_string()))?;
                    ck.nets.insert(name, net);
                }
                Some("vec") => {
                    let name = parts.next().ok_or_else(|| bad("vec without name"))?.to_string();
                    let n: usize = parts
                        .next()
                        .and_then(|p| p.parse().ok())
                        .ok_or_else(|| bad("vec without length"))?;
                    let v = read_values(&mut lines, n)?;
                    ck.vectors.insert(name, v);
                }
                Some(other) => return Err(bad(format!("unknown record {other:?}"))),
            }
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    pub fn net(&self, name: &str) -> Result<&Mlp> {
        self.nets.get(name).ok_or_else(|| bad(format!("missing network {name:?}")))
    }

    pub fn vector(&self, name: &str) -> Result<&Vec<f64>> {
        self.vectors.get(name).ok_or_else(|| bad(format!("missing vector {name:?}")))
    }
}
