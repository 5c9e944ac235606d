//! File formats: decoder graphs as JSON, sampled shots as CSV.
//!
//! Graph edges are stored as `[u, v, p_sum, weight, kind, le_h, le_v]`,
//! where `le_h` (`le_v`) is the edge's parity on the cut through the
//! horizontal (vertical) data edges. Probabilities and weights are rounded
//! to nine significant digits.
//!
//! A shot row is `shot_index, primal, dual, logical`: the event bitsets as
//! lowercase hex (bit `k` of the number is detector `k`) and the four true
//! logical parities as a binary string, most significant bit first.

use std::io::{BufRead, Write};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit_sim::ShotRecord;
use crate::decoder_graph::{DecoderGraph, EdgeKind, EdgeRecord, GraphError, WeightMode};
use crate::lattice::{logical, GraphKind, Lattice};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("malformed input: {0}")]
    Format(String),
}

type EdgeRow = (u32, u32, f64, f64, EdgeKind, u8, u8);

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphSection {
    kind: GraphKind,
    detectors: Vec<[usize; 3]>,
    edges: Vec<EdgeRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphFile {
    d: usize,
    rounds: usize,
    p: f64,
    mode: String,
    epsilon: Option<f64>,
    graphs: Vec<GraphSection>,
}

fn sig9(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted float")
}

/// `(horizontal, vertical)` cut bits of a graph kind.
fn cut_bits(kind: GraphKind) -> (u8, u8) {
    match kind {
        GraphKind::Primal => (logical::X_ROW, logical::X_COL),
        GraphKind::Dual => (logical::Z_COL, logical::Z_ROW),
    }
}

fn section(graph: &DecoderGraph) -> GraphSection {
    let lat = Lattice::new(graph.d);
    let (h, v) = cut_bits(graph.kind);
    GraphSection {
        kind: graph.kind,
        detectors: (0..graph.num_detectors())
            .map(|k| {
                let id = lat.detector(graph.kind, k);
                [id.t, id.i, id.j]
            })
            .collect(),
        edges: graph
            .edges()
            .iter()
            .map(|e| {
                (
                    e.u,
                    e.v,
                    sig9(e.p_sum),
                    sig9(e.weight),
                    e.kind,
                    (e.logical & h != 0) as u8,
                    (e.logical & v != 0) as u8,
                )
            })
            .collect(),
    }
}

/// Writes both graphs of one instance. They must share size and mode.
pub fn write_graphs<W: Write>(out: W, graphs: &[&DecoderGraph]) -> Result<(), IoError> {
    let first = graphs.first().ok_or_else(|| IoError::Format("no graphs".into()))?;
    let file = GraphFile {
        d: first.d,
        rounds: first.rounds,
        p: first.p,
        mode: first.mode().name().to_string(),
        epsilon: first.mode().epsilon(),
        graphs: graphs.iter().map(|g| section(g)).collect(),
    };
    serde_json::to_writer(out, &file)?;
    Ok(())
}

pub fn parse_mode(name: &str, epsilon: Option<f64>) -> Result<WeightMode, IoError> {
    match (name, epsilon) {
        ("weighted", _) => Ok(WeightMode::Weighted),
        ("unweighted", _) => Ok(WeightMode::Unweighted),
        ("truncated", Some(eps)) => Ok(WeightMode::Truncated(eps)),
        ("truncated", None) => Err(IoError::Format("truncated mode needs an epsilon".into())),
        (other, _) => Err(IoError::Format(format!("unknown weight mode {other:?}"))),
    }
}

/// Reads graphs written by [`write_graphs`]; weights are taken as stored.
pub fn read_graphs<R: std::io::Read>(input: R) -> Result<Vec<DecoderGraph>, IoError> {
    let file: GraphFile = serde_json::from_reader(input)?;
    let mode = parse_mode(&file.mode, file.epsilon)?;
    let mut out = Vec::with_capacity(file.graphs.len());
    for sec in file.graphs {
        let (h, v) = cut_bits(sec.kind);
        let n = sec.detectors.len();
        if let Some(&(u, v, ..)) = sec.edges.iter().find(|e| e.0 as usize >= n || e.1 as usize >= n) {
            return Err(IoError::Format(format!("edge ({u}, {v}) refers to a missing detector")));
        }
        let edges = sec
            .edges
            .into_iter()
            .map(|(u, w, p_sum, weight, kind, le_h, le_v)| EdgeRecord {
                u,
                v: w,
                p_sum,
                weight,
                units: 0,
                kind,
                logical: if le_h != 0 { h } else { 0 } | if le_v != 0 { v } else { 0 },
            })
            .collect();
        let mut g = DecoderGraph::from_edges(sec.kind, n, edges, mode)?;
        g.d = file.d;
        g.rounds = file.rounds;
        g.p = file.p;
        out.push(g);
    }
    Ok(out)
}

/// Lowercase hex of a bitset, bit `k` is detector `k`; `"0"` when empty.
pub fn bits_to_hex(bits: &FixedBitSet) -> String {
    let nibbles = bits.len().div_ceil(4);
    let mut s = String::with_capacity(nibbles);
    for n in (0..nibbles).rev() {
        let mut x = 0u32;
        for b in 0..4 {
            let k = 4 * n + b;
            if k < bits.len() && bits[k] {
                x |= 1 << b;
            }
        }
        s.push(char::from_digit(x, 16).unwrap());
    }
    let trimmed = s.trim_start_matches('0');
    if trimmed.is_empty() {
        "0".into()
    } else {
        trimmed.into()
    }
}

pub fn hex_to_bits(hex: &str, len: usize) -> Result<FixedBitSet, IoError> {
    let mut bits = FixedBitSet::with_capacity(len);
    for (n, c) in hex.trim().chars().rev().enumerate() {
        let x = c
            .to_digit(16)
            .ok_or_else(|| IoError::Format(format!("bad hex digit {c:?}")))?;
        for b in 0..4 {
            if x >> b & 1 == 1 {
                let k = 4 * n + b;
                if k >= len {
                    return Err(IoError::Format(format!("detector {k} out of range {len}")));
                }
                bits.insert(k);
            }
        }
    }
    Ok(bits)
}

/// One parsed row of a shots CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotRow {
    pub shot_index: u64,
    pub record: ShotRecord,
}

pub fn write_shots<W: Write>(out: W, shots: impl IntoIterator<Item = (u64, ShotRecord)>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["shot_index", "primal", "dual", "logical"])?;
    for (k, rec) in shots {
        w.write_record([
            k.to_string(),
            bits_to_hex(&rec.events_primal),
            bits_to_hex(&rec.events_dual),
            format!("{:04b}", rec.true_logical),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_shots<R: BufRead>(input: R, detectors: usize) -> Result<Vec<ShotRow>, IoError> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(IoError::Format(format!("expected 4 columns, got {}", rec.len())));
        }
        let shot_index = rec[0]
            .parse()
            .map_err(|_| IoError::Format(format!("bad shot index {:?}", &rec[0])))?;
        let true_logical = u8::from_str_radix(&rec[3], 2)
            .ok()
            .filter(|&b| b < 16)
            .ok_or_else(|| IoError::Format(format!("bad logical bits {:?}", &rec[3])))?;
        rows.push(ShotRow {
            shot_index,
            record: ShotRecord {
                events_primal: hex_to_bits(&rec[1], detectors)?,
                events_dual: hex_to_bits(&rec[2], detectors)?,
                true_logical,
            },
        });
    }
    Ok(rows)
}
