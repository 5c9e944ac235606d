//! Weighted decoder graphs built by enumerating every single circuit fault.
//!
//! Each fault component is propagated through the circuit on its own. A
//! component that excites exactly two detectors of one graph contributes its
//! probability to the edge between them; the edge weight is the log-odds
//! `ln((1 - p_sum) / p_sum)` of the summed probability.
//!
//! Growth arithmetic downstream is integer: every edge carries `units`, its
//! weight expressed in multiples of the graph's resolution `unit`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit_sim::{build_schedule, propagate, Block, FaultAction, FaultEffect, Location, Pauli, Schedule};
use crate::lattice::{logical, DetectorId, GraphKind, Lattice, LatticeParams, ParamError};

/// Resolution of the fully weighted mode: weights are stored as multiples of
/// `2^-40`, which is exact to ~1e-12 and keeps growth arithmetic integral.
pub const WEIGHTED_UNIT: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("probability {0} outside (0, 1)")]
    Domain(f64),
    #[error("precision must be positive, got {0}")]
    Precision(f64),
    #[error("fault at {location:?} (component {component}) excites {count} detectors in the {kind:?} graph")]
    TooManyDetectors {
        location: Location,
        component: u8,
        kind: GraphKind,
        count: usize,
    },
    #[error("faults grouped on edge ({u}, {v}) disagree on logical effect")]
    LogicalMismatch { u: u32, v: u32 },
    #[error("edge weight {0} is not positive")]
    NonPositiveWeight(f64),
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error(transparent)]
    Params(#[from] ParamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightMode {
    Weighted,
    Unweighted,
    Truncated(f64),
}

impl WeightMode {
    pub fn name(&self) -> &'static str {
        match self {
            WeightMode::Weighted => "weighted",
            WeightMode::Unweighted => "unweighted",
            WeightMode::Truncated(_) => "truncated",
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            WeightMode::Truncated(eps) => Some(eps),
            _ => None,
        }
    }

    /// Size of one growth unit in weight space.
    pub fn unit(&self) -> f64 {
        match *self {
            WeightMode::Weighted => WEIGHTED_UNIT,
            WeightMode::Unweighted => 1.0,
            WeightMode::Truncated(eps) => eps,
        }
    }

    /// Integer growth budget of an edge of real weight `w`.
    pub fn units(&self, w: f64) -> u64 {
        match *self {
            WeightMode::Unweighted => 1,
            WeightMode::Weighted => ((w / WEIGHTED_UNIT).round() as u64).max(1),
            // half away from zero; the nudge keeps decimal halves such as
            // 0.15 / 0.1 from falling just short of .5 in binary
            WeightMode::Truncated(eps) => {
                let q = w / eps;
                ((q * (1.0 + 1e-12)).round() as u64).max(1)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    /// Same layer, neighbouring checks.
    Spacelike,
    /// Same check, consecutive layers.
    Timelike,
    /// Everything else: offset in time and space, or non-adjacent in space.
    Diagonal,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Spacelike => "spacelike",
            EdgeKind::Timelike => "timelike",
            EdgeKind::Diagonal => "diagonal",
        }
    }

    fn classify(lat: &Lattice, a: &DetectorId, b: &DetectorId) -> Self {
        let di = lat.axis_distance(a.i, b.i);
        let dj = lat.axis_distance(a.j, b.j);
        if di == 0 && dj == 0 {
            EdgeKind::Timelike
        } else if a.t == b.t && di + dj == 1 {
            EdgeKind::Spacelike
        } else {
            EdgeKind::Diagonal
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub u: u32,
    pub v: u32,
    pub p_sum: f64,
    pub weight: f64,
    /// Weight in multiples of the graph's unit; always at least 1.
    pub units: u64,
    pub kind: EdgeKind,
    /// Logical parity bits flipped by the faults on this edge.
    pub logical: u8,
}

impl EdgeRecord {
    #[inline]
    pub fn other(&self, x: u32) -> u32 {
        self.u ^ self.v ^ x
    }
}

/// One space-time decoder graph. Detectors are indexed `t*d² + i*d + j`.
#[derive(Debug, Clone)]
pub struct DecoderGraph {
    pub kind: GraphKind,
    pub d: usize,
    pub rounds: usize,
    pub p: f64,
    mode: WeightMode,
    num_detectors: usize,
    edges: Vec<EdgeRecord>,
    adj_offsets: Vec<u32>,
    adj_edges: Vec<u32>,
    /// Position of each edge in the global `(units, index)` order.
    rank: Vec<u32>,
    // dense copy of the fields the decoder touches per step
    hot: Vec<HotEdge>,
}

#[derive(Debug, Clone, Copy)]
struct HotEdge {
    ends: [u32; 2],
    units: u64,
}

impl DecoderGraph {
    /// Assembles a graph from explicit edges, e.g. for hand-built test graphs.
    /// Weights are converted to units under `mode`.
    pub fn from_edges(
        kind: GraphKind,
        num_detectors: usize,
        edges: Vec<EdgeRecord>,
        mode: WeightMode,
    ) -> Result<Self, GraphError> {
        let mut graph = Self {
            kind,
            d: 0,
            rounds: 0,
            p: 0.0,
            mode,
            num_detectors,
            edges,
            adj_offsets: Vec::new(),
            adj_edges: Vec::new(),
            rank: Vec::new(),
            hot: Vec::new(),
        };
        graph.assign_units(mode)?;
        graph.index();
        Ok(graph)
    }

    fn index(&mut self) {
        let n = self.num_detectors;
        let mut degree = vec![0u32; n + 1];
        for e in &self.edges {
            assert_ne!(e.u, e.v, "self loop");
            degree[e.u as usize + 1] += 1;
            degree[e.v as usize + 1] += 1;
        }
        for k in 0..n {
            degree[k + 1] += degree[k];
        }
        let mut fill = degree.clone();
        let mut adj = vec![0u32; 2 * self.edges.len()];
        for (idx, e) in self.edges.iter().enumerate() {
            for x in [e.u, e.v] {
                adj[fill[x as usize] as usize] = idx as u32;
                fill[x as usize] += 1;
            }
        }
        self.adj_offsets = degree;
        self.adj_edges = adj;
        self.rerank();
    }

    fn rerank(&mut self) {
        let mut order: Vec<u32> = (0..self.edges.len() as u32).collect();
        order.sort_by_key(|&e| (self.edges[e as usize].units, e));
        self.rank = vec![0; self.edges.len()];
        for (r, &e) in order.iter().enumerate() {
            self.rank[e as usize] = r as u32;
        }
    }

    fn assign_units(&mut self, mode: WeightMode) -> Result<(), GraphError> {
        if let WeightMode::Truncated(eps) = mode {
            if eps.is_nan() || eps <= 0.0 {
                return Err(GraphError::Precision(eps));
            }
        }
        for e in &mut self.edges {
            if mode != WeightMode::Unweighted && (e.weight.is_nan() || e.weight <= 0.0) {
                return Err(GraphError::NonPositiveWeight(e.weight));
            }
            e.units = mode.units(e.weight);
        }
        self.hot = self
            .edges
            .iter()
            .map(|e| HotEdge {
                ends: [e.u, e.v],
                units: e.units,
            })
            .collect();
        self.mode = mode;
        Ok(())
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    /// Weight-space size of one growth unit.
    pub fn unit(&self) -> f64 {
        self.mode.unit()
    }

    pub fn num_detectors(&self) -> usize {
        self.num_detectors
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, e: u32) -> &EdgeRecord {
        &self.edges[e as usize]
    }

    #[inline]
    pub fn incident(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.adj_edges[self.adj_offsets[v] as usize..self.adj_offsets[v + 1] as usize]
    }

    #[inline]
    pub fn endpoints(&self, e: u32) -> [u32; 2] {
        self.hot[e as usize].ends
    }

    #[inline]
    pub fn units(&self, e: u32) -> u64 {
        self.hot[e as usize].units
    }

    #[inline]
    pub fn rank(&self, e: u32) -> u32 {
        self.rank[e as usize]
    }

    pub fn detector(&self, index: usize) -> DetectorId {
        Lattice::new(self.d.max(1)).detector(self.kind, index)
    }

    /// Sum of all growth budgets; bounds the number of growth steps.
    pub fn total_units(&self) -> u128 {
        self.edges.iter().map(|e| e.units as u128).sum()
    }

    /// Copy with the same edge set re-weighted under `mode`.
    pub fn with_mode(&self, mode: WeightMode) -> Result<Self, GraphError> {
        let mut g = self.clone();
        g.assign_units(mode)?;
        g.rerank();
        Ok(g)
    }

    /// Replaces every edge weight (and the probability it came from), keeping
    /// the edge set and mode.
    pub fn set_weights(&mut self, probabilities: &[f64]) -> Result<(), GraphError> {
        if probabilities.len() != self.edges.len() {
            return Err(GraphError::WeightCount {
                expected: self.edges.len(),
                got: probabilities.len(),
            });
        }
        for (e, &p) in self.edges.iter_mut().zip(probabilities) {
            e.p_sum = p;
            e.weight = edge_weight(p)?;
        }
        self.assign_units(self.mode)?;
        self.rerank();
        Ok(())
    }

    /// Detector flips and logical bits induced by a set of edges.
    pub fn boundary_of(&self, edge_set: &[u32]) -> (Vec<u32>, u8) {
        let mut flips = Vec::with_capacity(2 * edge_set.len());
        let mut bits = 0;
        for &e in edge_set {
            let rec = self.edge(e);
            flips.push(rec.u);
            flips.push(rec.v);
            bits ^= rec.logical;
        }
        flips.sort_unstable();
        let mut out: Vec<u32> = Vec::with_capacity(flips.len());
        for x in flips {
            if out.last() == Some(&x) {
                out.pop();
            } else {
                out.push(x);
            }
        }
        (out, bits)
    }
}

/// Log-odds weight of an edge with fault probability `p_e`.
pub fn edge_weight(p_e: f64) -> Result<f64, GraphError> {
    if !(p_e > 0.0 && p_e < 1.0) {
        return Err(GraphError::Domain(p_e));
    }
    Ok(((1.0 - p_e) / p_e).ln())
}

/// Rounds every weight to the nearest multiple of `epsilon`.
pub fn quantize_weights(graph: &DecoderGraph, epsilon: f64) -> Result<DecoderGraph, GraphError> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(GraphError::Precision(epsilon));
    }
    graph.with_mode(WeightMode::Truncated(epsilon))
}

#[derive(Default)]
struct EdgeAccumulator {
    map: HashMap<(u32, u32), (f64, u8)>,
}

impl EdgeAccumulator {
    fn add(&mut self, detectors: &[u32], p: f64, logical: u8) -> Result<(), (u32, u32)> {
        let key = (detectors[0], detectors[1]);
        let entry = self.map.entry(key).or_insert((0.0, logical));
        if entry.1 != logical {
            return Err(key);
        }
        entry.0 += p;
        Ok(())
    }
}

/// Effects of the basis Paulis at one location, composed per component.
fn component_effects(schedule: &Schedule, loc: &Location) -> Vec<FaultEffect> {
    let prop = |action| propagate(schedule, loc, action);
    match loc.block {
        Block::IdleAfterPrepare | Block::IdleAfterMeasure => {
            let x = prop(FaultAction::Single(Pauli::X));
            let z = prop(FaultAction::Single(Pauli::Z));
            let y = x.xor(&z);
            vec![x, y, z]
        }
        Block::Cnot(_) => {
            let xc = prop(FaultAction::Pair(Pauli::X, Pauli::I));
            let zc = prop(FaultAction::Pair(Pauli::Z, Pauli::I));
            let xt = prop(FaultAction::Pair(Pauli::I, Pauli::X));
            let zt = prop(FaultAction::Pair(Pauli::I, Pauli::Z));
            (0..15u8)
                .map(|component| {
                    let FaultAction::Pair(pc, pt) = FaultAction::of(loc.block, component) else {
                        unreachable!()
                    };
                    let mut eff = FaultEffect::default();
                    for (on, basis) in [
                        (pc.has_x(), &xc),
                        (pc.has_z(), &zc),
                        (pt.has_x(), &xt),
                        (pt.has_z(), &zt),
                    ] {
                        if on {
                            eff = eff.xor(basis);
                        }
                    }
                    eff
                })
                .collect()
        }
        Block::Prepare => vec![prop(FaultAction::PrepFlip)],
        Block::Measure => vec![prop(FaultAction::MeasFlip)],
    }
}

/// Builds the primal and dual decoder graphs for `params` under `mode`.
pub fn build_decoder_graphs(
    params: &LatticeParams,
    mode: WeightMode,
) -> Result<(DecoderGraph, DecoderGraph), GraphError> {
    params.validate()?;
    let schedule = build_schedule(params.d).expect("validated distance");
    let lat = schedule.lattice();
    let mut primal = EdgeAccumulator::default();
    let mut dual = EdgeAccumulator::default();

    for round in 0..params.rounds as u32 {
        for block in Block::CHRONOLOGICAL {
            let prob = block.component_probability(params.p);
            for index in 0..lat.num_data() as u32 {
                let loc = Location { round, block, index };
                for (component, eff) in component_effects(&schedule, &loc).into_iter().enumerate() {
                    for (kind, dets, mask, acc) in [
                        (GraphKind::Primal, &eff.primal, logical::X_MASK, &mut primal),
                        (GraphKind::Dual, &eff.dual, logical::Z_MASK, &mut dual),
                    ] {
                        match dets.len() {
                            0 => {}
                            2 => acc
                                .add(dets, prob, eff.logical & mask)
                                .map_err(|(u, v)| GraphError::LogicalMismatch { u, v })?,
                            count => {
                                return Err(GraphError::TooManyDetectors {
                                    location: loc,
                                    component: component as u8,
                                    kind,
                                    count,
                                })
                            }
                        }
                    }
                }
            }
        }
    }

    let finish = |kind: GraphKind, acc: EdgeAccumulator| -> Result<DecoderGraph, GraphError> {
        let mut raw: Vec<_> = acc.map.into_iter().collect();
        raw.sort_by_key(|&(key, _)| key);
        let mut edges = Vec::with_capacity(raw.len());
        for ((u, v), (p_sum, bits)) in raw {
            let a = lat.detector(kind, u as usize);
            let b = lat.detector(kind, v as usize);
            edges.push(EdgeRecord {
                u,
                v,
                p_sum,
                weight: edge_weight(p_sum)?,
                units: 0,
                kind: EdgeKind::classify(&lat, &a, &b),
                logical: bits,
            });
        }
        let mut g = DecoderGraph::from_edges(kind, params.detectors_per_graph(), edges, mode)?;
        g.d = params.d;
        g.rounds = params.rounds;
        g.p = params.p;
        Ok(g)
    };
    Ok((finish(GraphKind::Primal, primal)?, finish(GraphKind::Dual, dual)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_odds_values() {
        assert!(edge_weight(0.5).unwrap().abs() < 1e-15);
        assert!((edge_weight(0.008).unwrap() - 4.8203).abs() < 1e-3);
        assert!((edge_weight(0.0002).unwrap() - 8.5170).abs() < 1e-3);
        assert_eq!(edge_weight(0.0), Err(GraphError::Domain(0.0)));
        assert_eq!(edge_weight(1.0), Err(GraphError::Domain(1.0)));
    }

    #[test]
    fn quantization_rounds_and_clamps() {
        let eps = WeightMode::Truncated(0.1);
        assert_eq!(eps.units(4.8203), 48);
        assert_eq!(eps.units(0.04), 1);
        assert_eq!(eps.units(0.15), 2);
        assert_eq!(WeightMode::Truncated(1.0).units(4.5), 5);
        assert_eq!(WeightMode::Unweighted.units(7.3), 1);
    }

    #[test]
    fn rejects_nonpositive_precision() {
        let params = LatticeParams::new(3, 1, 0.003).unwrap();
        let (g, _) = build_decoder_graphs(&params, WeightMode::Weighted).unwrap();
        assert_eq!(quantize_weights(&g, 0.0).unwrap_err(), GraphError::Precision(0.0));
        assert!(quantize_weights(&g, -1.0).is_err());
        assert!(build_decoder_graphs(&params, WeightMode::Truncated(0.0)).is_err());
    }

    #[test]
    fn detector_count_d3_single_round() {
        let params = LatticeParams::new(3, 1, 0.003).unwrap();
        let (primal, dual) = build_decoder_graphs(&params, WeightMode::Weighted).unwrap();
        assert_eq!(primal.num_detectors(), 18);
        assert_eq!(dual.num_detectors(), 18);
    }

    #[test]
    fn unweighted_mode_keeps_edge_set() {
        let params = LatticeParams::new(5, 3, 0.005).unwrap();
        let (w, _) = build_decoder_graphs(&params, WeightMode::Weighted).unwrap();
        let (u, _) = build_decoder_graphs(&params, WeightMode::Unweighted).unwrap();
        assert_eq!(w.num_edges(), u.num_edges());
        for (a, b) in w.edges().iter().zip(u.edges()) {
            assert_eq!((a.u, a.v, a.kind, a.logical), (b.u, b.v, b.kind, b.logical));
            assert_eq!(b.units, 1);
        }
    }

    #[test]
    fn adjacency_matches_endpoints() {
        let params = LatticeParams::new(3, 3, 0.003).unwrap();
        let (g, _) = build_decoder_graphs(&params, WeightMode::Weighted).unwrap();
        for v in 0..g.num_detectors() as u32 {
            for &e in g.incident(v) {
                let rec = g.edge(e);
                assert!(rec.u == v || rec.v == v);
                assert_ne!(rec.u, rec.v);
            }
        }
        let total: usize = (0..g.num_detectors() as u32).map(|v| g.incident(v).len()).sum();
        assert_eq!(total, 2 * g.num_edges());
    }

    #[test]
    fn weights_positive_up_to_one_percent() {
        let params = LatticeParams::new(5, 5, 0.01).unwrap();
        let (a, b) = build_decoder_graphs(&params, WeightMode::Weighted).unwrap();
        for e in a.edges().iter().chain(b.edges()) {
            assert!(e.p_sum < 0.5 && e.weight > 0.0);
        }
    }

    #[test]
    fn boundary_of_cancels_shared_endpoints() {
        let params = LatticeParams::new(3, 1, 0.003).unwrap();
        let (g, _) = build_decoder_graphs(&params, WeightMode::Weighted).unwrap();
        let e0 = g.edge(0).clone();
        let (flips, _) = g.boundary_of(&[0]);
        assert_eq!(flips, vec![e0.u, e0.v]);
        let (flips, bits) = g.boundary_of(&[0, 0]);
        assert!(flips.is_empty());
        assert_eq!(bits, 0);
    }
}
