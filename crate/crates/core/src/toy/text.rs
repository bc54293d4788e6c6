//! Instance file loading.
//!
//! Files hold either the canonical binary encoding or a line-oriented text
//! form. `#` starts a comment; blank lines are ignored.
//!
//! Graph text:
//!
//! ```text
//! v 3
//! e 0 1
//! e 0 2
//! e 1 2
//! c 0 1 2      # optional witness coloring
//! ```
//!
//! Sumcheck text: a `p n d S` header followed by the `(d+1)^n` coefficients,
//! whitespace separated over any number of lines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GraphColoringInstance, Instance, SumcheckInstance};
use crate::iop::{IopError, Witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Gc,
    Sumcheck,
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceKind::Gc => "gc",
            InstanceKind::Sumcheck => "sumcheck",
        })
    }
}

impl FromStr for InstanceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gc" => Ok(InstanceKind::Gc),
            "sumcheck" => Ok(InstanceKind::Sumcheck),
            other => Err(format!("unknown IOP '{other}' (expected gc or sumcheck)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedInstance {
    pub instance: Instance,
    /// Witness carried by the file, if any.
    pub witness: Option<Witness>,
}

/// Loads an instance from file contents. Binary encodings are recognized by
/// their leading tag byte; anything else is parsed as text of `kind`.
pub fn parse_instance(kind: InstanceKind, contents: &[u8]) -> Result<LoadedInstance, IopError> {
    if matches!(contents.first(), Some(0x01 | 0x02)) {
        let instance = Instance::decode(contents).map_err(|e| IopError::InvalidInstance(e.to_string()))?;
        if instance.kind() != kind {
            return Err(IopError::InvalidInstance(format!("file holds a {} instance, not {kind}", instance.kind())));
        }
        return Ok(LoadedInstance { instance, witness: None });
    }
    let text = std::str::from_utf8(contents).map_err(|_| IopError::InvalidInstance("instance file is not UTF-8".into()))?;
    match kind {
        InstanceKind::Gc => parse_graph(text),
        InstanceKind::Sumcheck => parse_sumcheck(text),
    }
}

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let body = line.split('#').next().unwrap_or("");
        let words: Vec<&str> = body.split_whitespace().collect();
        (!words.is_empty()).then_some((i + 1, words))
    })
}

fn num<T: FromStr>(line: usize, word: &str) -> Result<T, IopError> {
    word.parse().map_err(|_| IopError::InvalidInstance(format!("line {line}: '{word}' is not a valid number")))
}

fn parse_graph(text: &str) -> Result<LoadedInstance, IopError> {
    let mut vertices = None;
    let mut edges = Vec::new();
    let mut witness = None;
    for (line, words) in lines(text) {
        let bad = |msg: &str| IopError::InvalidInstance(format!("line {line}: {msg}"));
        match words[0] {
            "v" if words.len() == 2 => {
                if vertices.replace(num::<usize>(line, words[1])?).is_some() {
                    return Err(bad("repeated 'v' header"));
                }
            }
            "e" if words.len() == 3 => {
                if vertices.is_none() {
                    return Err(bad("edge before the 'v' header"));
                }
                edges.push((num(line, words[1])?, num(line, words[2])?));
            }
            "c" => {
                let colors = words[1..].iter().map(|w| num(line, w)).collect::<Result<Vec<u64>, _>>()?;
                if witness.replace(colors).is_some() {
                    return Err(bad("repeated coloring"));
                }
            }
            _ => return Err(bad("expected 'v <n>', 'e <u> <v>' or 'c <colors>'")),
        }
    }
    let vertices = vertices.ok_or_else(|| IopError::InvalidInstance("missing 'v <n>' header".into()))?;
    let graph = GraphColoringInstance::new(vertices, edges)?;
    if witness.as_ref().is_some_and(|w| w.len() != vertices) {
        return Err(IopError::InvalidInstance("coloring length differs from the vertex count".into()));
    }
    Ok(LoadedInstance { instance: Instance::Gc(graph), witness })
}

fn parse_sumcheck(text: &str) -> Result<LoadedInstance, IopError> {
    let mut it = lines(text);
    let (line, header) = it.next().ok_or_else(|| IopError::InvalidInstance("empty sumcheck file".into()))?;
    if header.len() != 4 {
        return Err(IopError::InvalidInstance(format!("line {line}: expected header 'p n d S'")));
    }
    let p: u64 = num(line, header[0])?;
    let n: usize = num(line, header[1])?;
    let d: usize = num(line, header[2])?;
    let claim: u64 = num(line, header[3])?;
    let mut coeffs = Vec::new();
    for (line, words) in it {
        for w in words {
            coeffs.push(num(line, w)?);
        }
    }
    Ok(LoadedInstance { instance: Instance::Sumcheck(SumcheckInstance::new(p, n, d, coeffs, claim)?), witness: None })
}
