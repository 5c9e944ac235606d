//! Weighted union-find decoding.
//!
//! Syndrome validation grows odd clusters until every cluster has even
//! excitation parity. One growth step picks the odd cluster with the shortest
//! boundary list, finds the smallest remaining budget `w_min` among its
//! boundary edges and subtracts `w_min` from all of them; edges that reach
//! zero join the erasure and merge the clusters at their endpoints.
//!
//! Peeling then builds a minimum-weight spanning forest of the erasure
//! (Kruskal over the graph's presorted edge order) and strips leaves, adding
//! a leaf's pendant edge to the correction whenever the leaf is excited.
//!
//! All budgets are integers in units of the graph's resolution, so results
//! are reproducible bit for bit.

mod cluster;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::decoder_graph::DecoderGraph;

pub use cluster::ClusterForest;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("odd number of detection events ({0})")]
    OddSyndrome(usize),
    #[error("detector {0} out of range")]
    EventOutOfRange(u32),
    #[error("syndrome validation exceeded {0} growth steps")]
    NonTermination(u128),
    #[error("odd cluster rooted at {0} has no boundary left")]
    Stuck(u32),
    #[error("erasure component containing detector {0} has odd excitation parity")]
    Parity(u32),
}

/// Set of decoder-graph edges; its boundary is meant to equal the events.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Correction {
    pub edges: Vec<u32>,
    /// XOR of the member edges' logical bits.
    pub logical: u8,
}

impl Correction {
    /// Detectors flipped by applying this correction, sorted.
    pub fn flips(&self, graph: &DecoderGraph) -> Vec<u32> {
        graph.boundary_of(&self.edges).0
    }

    /// Sum of member edge budgets.
    pub fn total_units(&self, graph: &DecoderGraph) -> u64 {
        self.edges.iter().map(|&e| graph.edge(e).units).sum()
    }
}

/// Edges fully grown during syndrome validation, in growth order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Erasure {
    pub edges: Vec<u32>,
}

/// Counters from the most recent decode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeStats {
    pub growth_steps: u64,
    pub edge_decrements: u64,
    pub erasure_edges: usize,
    pub peel_edges: usize,
}

/// Outcome of one growth step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthStep {
    /// Root of the cluster that grew, before merging.
    pub root: u32,
    pub w_min: u64,
    /// Edges that became fully grown.
    pub grown: Vec<u32>,
    /// Clusters the growing cluster merged with (roots before merging).
    pub merged_with: Vec<u32>,
}

const INACTIVE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct EdgeState {
    ends: [u32; 2],
    remaining: u64,
}

/// Reusable decoder state for one graph. Serves one decode at a time.
#[derive(Debug, Clone)]
pub struct UnionFindDecoder<'g> {
    graph: &'g DecoderGraph,
    clusters: ClusterForest,
    /// Endpoints and remaining growth budget of every edge, side by side so
    /// a boundary scan reads one record per edge.
    edge_state: Vec<EdgeState>,
    /// Edges decremented since the last reset.
    touched_edges: Vec<u32>,
    active: BTreeSet<(u32, u32)>,
    /// Key of each active root in `active`, [`INACTIVE`] otherwise.
    active_key: Vec<u32>,
    erasure: Vec<u32>,
    step_limit: u128,
    // peeling scratch
    forest: ClusterForest,
    degree: Vec<u32>,
    pendant: Vec<u32>,
    excited: Vec<bool>,
    stats: DecodeStats,
    decrements: Option<Vec<u32>>,
}

impl<'g> UnionFindDecoder<'g> {
    pub fn new(graph: &'g DecoderGraph) -> Self {
        let n = graph.num_detectors();
        Self {
            graph,
            clusters: ClusterForest::new(n),
            edge_state: graph
                .edges()
                .iter()
                .map(|e| EdgeState {
                    ends: [e.u, e.v],
                    remaining: e.units,
                })
                .collect(),
            touched_edges: Vec::new(),
            active: BTreeSet::new(),
            active_key: vec![INACTIVE; n],
            erasure: Vec::new(),
            step_limit: graph.total_units() + n as u128,
            forest: ClusterForest::new(n),
            degree: vec![0; n],
            pendant: vec![0; n],
            excited: vec![false; n],
            stats: DecodeStats::default(),
            decrements: None,
        }
    }

    /// Records per-edge decrement counts for [`Self::touch_bound_holds`].
    pub fn with_instrumentation(mut self) -> Self {
        self.decrements = Some(vec![0; self.graph.num_edges()]);
        self
    }

    pub fn graph(&self) -> &'g DecoderGraph {
        self.graph
    }

    pub fn stats(&self) -> DecodeStats {
        self.stats
    }

    /// Whether no edge has been decremented more than twice its budget
    /// during the last validation.
    pub fn touch_bound_holds(&self) -> bool {
        let counts = self.decrements.as_ref().expect("instrumentation enabled");
        self.graph
            .edges()
            .iter()
            .zip(counts)
            .all(|(e, &c)| u64::from(c) <= 2 * e.units)
    }

    /// Decodes one syndrome given as a list of excited detectors.
    pub fn decode(&mut self, events: &[u32]) -> Result<Correction, DecodeError> {
        let erasure = self.syndrome_validation(events)?;
        self.peel(&erasure, events)
    }

    /// Grows clusters until all have even parity and returns the erasure.
    pub fn syndrome_validation(&mut self, events: &[u32]) -> Result<Erasure, DecodeError> {
        self.begin(events)?;
        while self.grow_step()?.is_some() {}
        self.stats.erasure_edges = self.erasure.len();
        Ok(Erasure {
            edges: self.erasure.clone(),
        })
    }

    /// Resets scratch state and seeds one singleton cluster per event.
    pub fn begin(&mut self, events: &[u32]) -> Result<(), DecodeError> {
        self.reset();
        if events.len() % 2 == 1 {
            return Err(DecodeError::OddSyndrome(events.len()));
        }
        let n = self.graph.num_detectors() as u32;
        if let Some(&bad) = events.iter().find(|&&v| v >= n) {
            return Err(DecodeError::EventOutOfRange(bad));
        }
        for &v in events {
            self.clusters.toggle_parity(v);
        }
        for &v in events {
            self.join(v);
            if self.clusters.is_odd(v) {
                self.activate(v);
            }
        }
        Ok(())
    }

    /// Runs one growth step on the selected odd cluster; `None` once every
    /// cluster is even.
    pub fn grow_step(&mut self) -> Result<Option<GrowthStep>, DecodeError> {
        let Some((_, root)) = self.active.pop_first() else {
            return Ok(None);
        };
        self.active_key[root as usize] = INACTIVE;
        debug_assert!(self.clusters.is_odd(root));
        self.stats.growth_steps += 1;
        if u128::from(self.stats.growth_steps) > self.step_limit {
            return Err(DecodeError::NonTermination(self.step_limit));
        }

        let graph = self.graph;
        let mut list = self.clusters.take_boundary(root);
        let mut w_min = u64::MAX;
        {
            let (clusters, state) = (&mut self.clusters, &self.edge_state);
            list.retain(|&e| {
                let EdgeState {
                    ends: [u, v],
                    remaining: left,
                } = state[e as usize];
                if left == 0 {
                    return false;
                }
                if clusters.find(u) == clusters.find(v) {
                    return false;
                }
                w_min = w_min.min(left);
                true
            });
        }
        if list.is_empty() {
            return Err(DecodeError::Stuck(root));
        }

        let mut newly = Vec::new();
        for &e in &list {
            let idx = e as usize;
            if self.edge_state[idx].remaining == graph.units(e) {
                self.touched_edges.push(e);
            }
            self.edge_state[idx].remaining -= w_min;
            self.stats.edge_decrements += 1;
            if let Some(counts) = self.decrements.as_mut() {
                counts[idx] += 1;
            }
            if self.edge_state[idx].remaining == 0 {
                newly.push(e);
            }
        }
        self.clusters.set_boundary(root, list);

        let mut merged_with = Vec::new();
        for &e in &newly {
            self.erasure.push(e);
            let [u, v] = graph.endpoints(e);
            self.join(u);
            self.join(v);
            let (ru, rv) = (self.clusters.find(u), self.clusters.find(v));
            if ru != rv {
                merged_with.push(if self.clusters.find(root) == ru { rv } else { ru });
                self.deactivate(ru);
                self.deactivate(rv);
                self.clusters.union(ru, rv);
            }
        }
        let r = self.clusters.find(root);
        if self.clusters.is_odd(r) && self.active_key[r as usize] == INACTIVE {
            self.activate(r);
        }

        Ok(Some(GrowthStep {
            root,
            w_min,
            grown: newly,
            merged_with,
        }))
    }

    /// Adds `v`'s incident edges to its cluster the first time it is reached.
    fn join(&mut self, v: u32) {
        if !self.clusters.reach(v) {
            return;
        }
        let incident = self.graph.incident(v);
        let r = self.clusters.find(v);
        let mut list = self.clusters.take_boundary(r);
        list.extend_from_slice(incident);
        self.clusters.set_boundary(r, list);
    }

    fn activate(&mut self, root: u32) {
        let key = self.clusters.boundary(root).len() as u32;
        self.active.insert((key, root));
        self.active_key[root as usize] = key;
    }

    fn deactivate(&mut self, root: u32) {
        let key = std::mem::replace(&mut self.active_key[root as usize], INACTIVE);
        if key != INACTIVE {
            self.active.remove(&(key, root));
        }
    }

    /// Peels a minimum-weight spanning forest of `erasure`.
    pub fn peel(&mut self, erasure: &Erasure, events: &[u32]) -> Result<Correction, DecodeError> {
        let graph = self.graph;
        let mut sorted = erasure.edges.clone();
        sorted.sort_unstable_by_key(|&e| graph.rank(e));

        let mut touched: Vec<u32> = Vec::new();
        for &e in &sorted {
            let [u, v] = graph.endpoints(e);
            self.forest.mark(u);
            self.forest.mark(v);
            if self.forest.find(u) != self.forest.find(v) {
                self.forest.union(u, v);
                for x in [u, v] {
                    if self.degree[x as usize] == 0 {
                        touched.push(x);
                    }
                    self.degree[x as usize] += 1;
                    self.pendant[x as usize] ^= e;
                }
            }
        }
        for &v in events {
            if self.degree[v as usize] == 0 && !self.excited[v as usize] {
                touched.push(v);
            }
            self.excited[v as usize] ^= true;
        }

        let mut correction = Correction::default();
        let mut leaves: Vec<u32> = touched
            .iter()
            .copied()
            .filter(|&v| self.degree[v as usize] == 1)
            .collect();
        while let Some(v) = leaves.pop() {
            if self.degree[v as usize] != 1 {
                continue;
            }
            let e = self.pendant[v as usize];
            let rec = graph.edge(e);
            let u = rec.other(v);
            if self.excited[v as usize] {
                correction.edges.push(e);
                correction.logical ^= rec.logical;
                self.excited[v as usize] = false;
                self.excited[u as usize] ^= true;
            }
            self.degree[v as usize] = 0;
            self.pendant[v as usize] = 0;
            self.degree[u as usize] -= 1;
            self.pendant[u as usize] ^= e;
            if self.degree[u as usize] == 1 {
                leaves.push(u);
            }
        }

        let leftover = touched.iter().copied().find(|&v| self.excited[v as usize]);
        for &v in &touched {
            self.degree[v as usize] = 0;
            self.pendant[v as usize] = 0;
            self.excited[v as usize] = false;
        }
        self.forest.reset();
        if let Some(v) = leftover {
            return Err(DecodeError::Parity(v));
        }
        self.stats.peel_edges = correction.edges.len();
        Ok(correction)
    }

    /// Restores all scratch state in time proportional to what was touched.
    pub fn reset(&mut self) {
        for &v in self.clusters.touched() {
            self.active_key[v as usize] = INACTIVE;
        }
        self.clusters.reset();
        for &e in &self.touched_edges {
            let idx = e as usize;
            self.edge_state[idx].remaining = self.graph.units(e);
            if let Some(counts) = self.decrements.as_mut() {
                counts[idx] = 0;
            }
        }
        self.touched_edges.clear();
        self.active.clear();
        self.erasure.clear();
        self.stats = DecodeStats::default();
    }
}

/// Decodes with a fresh decoder instance.
pub fn decode(graph: &DecoderGraph, events: &[u32]) -> Result<Correction, DecodeError> {
    UnionFindDecoder::new(graph).decode(events)
}

pub fn syndrome_validation(graph: &DecoderGraph, events: &[u32]) -> Result<Erasure, DecodeError> {
    UnionFindDecoder::new(graph).syndrome_validation(events)
}

pub fn peel(graph: &DecoderGraph, erasure: &Erasure, events: &[u32]) -> Result<Correction, DecodeError> {
    UnionFindDecoder::new(graph).peel(erasure, events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder_graph::{build_decoder_graphs, EdgeKind, EdgeRecord, WeightMode};
    use crate::lattice::{GraphKind, LatticeParams};

    fn edge(u: u32, v: u32, weight: f64) -> EdgeRecord {
        EdgeRecord {
            u,
            v,
            p_sum: 1.0 / (1.0 + weight.exp()),
            weight,
            units: 0,
            kind: EdgeKind::Spacelike,
            logical: 0,
        }
    }

    fn graph(n: usize, edges: &[(u32, u32, f64)]) -> DecoderGraph {
        let edges = edges.iter().map(|&(u, v, w)| edge(u, v, w)).collect();
        DecoderGraph::from_edges(GraphKind::Primal, n, edges, WeightMode::Truncated(1.0)).unwrap()
    }

    #[test]
    fn empty_events_give_empty_correction() {
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let c = decode(&g, &[]).unwrap();
        assert!(c.edges.is_empty());
        assert_eq!(c.logical, 0);
    }

    #[test]
    fn lightest_edge_between_two_events() {
        // square 0-1-2-3 with one light side
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 3.0), (2, 3, 3.0), (3, 0, 3.0)]);
        let mut dec = UnionFindDecoder::new(&g);
        let c = dec.decode(&[0, 1]).unwrap();
        assert_eq!(c.edges, vec![0]);
        assert_eq!(dec.stats().growth_steps, 1);
    }

    #[test]
    fn shared_edge_grown_by_first_cluster_halts_validation() {
        // events 0 and 1 share an edge of budget 2; every other edge >= 3
        let g = graph(
            6,
            &[
                (0, 1, 2.0),
                (0, 2, 3.0),
                (0, 3, 4.0),
                (1, 4, 3.0),
                (1, 5, 5.0),
                (2, 4, 3.0),
            ],
        );
        let mut dec = UnionFindDecoder::new(&g);
        dec.begin(&[0, 1]).unwrap();
        let step = dec.grow_step().unwrap().unwrap();
        assert_eq!(step.root, 0);
        assert_eq!(step.w_min, 2);
        assert_eq!(step.grown, vec![0]);
        assert_eq!(step.merged_with, vec![1]);
        assert!(dec.grow_step().unwrap().is_none());
        assert_eq!(dec.edge_state[1].remaining, 1);
        assert_eq!(dec.edge_state[2].remaining, 2);
        // cluster 1's edges were never touched
        assert_eq!(dec.edge_state[3].remaining, 3);
    }

    #[test]
    fn smallest_boundary_cluster_grows_first() {
        // vertex 3 has degree 1, vertex 0 degree 3
        let g = graph(5, &[(0, 1, 2.0), (0, 2, 2.0), (0, 4, 2.0), (3, 4, 5.0)]);
        let mut dec = UnionFindDecoder::new(&g);
        dec.begin(&[0, 3]).unwrap();
        let step = dec.grow_step().unwrap().unwrap();
        assert_eq!(step.root, 3);
        assert_eq!(step.w_min, 5);
    }

    #[test]
    fn rejects_bad_syndromes() {
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(decode(&g, &[1]), Err(DecodeError::OddSyndrome(1)));
        assert_eq!(decode(&g, &[0, 7]), Err(DecodeError::EventOutOfRange(7)));
    }

    #[test]
    fn disconnected_odd_cluster_is_stuck() {
        let g = graph(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        assert!(matches!(decode(&g, &[0, 2]), Err(DecodeError::Stuck(_))));
    }

    #[test]
    fn peel_single_edge() {
        let g = graph(2, &[(0, 1, 1.0)]);
        let c = peel(&g, &Erasure { edges: vec![0] }, &[0, 1]).unwrap();
        assert_eq!(c.edges, vec![0]);
    }

    #[test]
    fn peel_path_with_excited_ends() {
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]);
        let c = peel(&g, &Erasure { edges: vec![0, 1, 2] }, &[0, 3]).unwrap();
        let mut edges = c.edges.clone();
        edges.sort();
        assert_eq!(edges, vec![0, 1, 2]);
    }

    #[test]
    fn peel_skips_quiet_components() {
        let g = graph(5, &[(0, 1, 1.0), (2, 3, 1.0), (3, 4, 1.0)]);
        let c = peel(&g, &Erasure { edges: vec![0, 1, 2] }, &[0, 1]).unwrap();
        assert_eq!(c.edges, vec![0]);
    }

    #[test]
    fn peel_prefers_light_edges_in_cycles() {
        // triangle: the heavy edge is left out of the spanning tree
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 9.0)]);
        let c = peel(&g, &Erasure { edges: vec![2, 0, 1] }, &[0, 2]).unwrap();
        let mut edges = c.edges.clone();
        edges.sort();
        assert_eq!(edges, vec![0, 1]);
    }

    #[test]
    fn peel_reports_odd_component() {
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let mut dec = UnionFindDecoder::new(&g);
        assert!(matches!(
            dec.peel(&Erasure { edges: vec![0] }, &[0, 2]),
            Err(DecodeError::Parity(_))
        ));
        // scratch state is clean afterwards
        assert_eq!(
            dec.peel(&Erasure { edges: vec![0, 1] }, &[0, 2]).unwrap().edges.len(),
            2
        );
    }

    #[test]
    fn corner_excitation_grows_cardinal_then_diagonal() {
        let params = LatticeParams::new(5, 5, 0.008).unwrap();
        let (g, _) = build_decoder_graphs(&params, WeightMode::Truncated(1.0)).unwrap();
        let centre = 2 * 25 + 2 * 5 + 2;
        let far = 4 * 25 + 4 * 5 + 4;
        let mut dec = UnionFindDecoder::new(&g);
        dec.begin(&[centre, far]).unwrap();
        let cardinal = |e: u32| g.edge(e).kind != EdgeKind::Diagonal;

        let first = dec.grow_step().unwrap().unwrap();
        assert_eq!(first.root, centre);
        assert_eq!(first.w_min, 4);
        assert!(!first.grown.is_empty() && first.grown.iter().all(|&e| cardinal(e)));
        // all six cardinal neighbours join
        assert_eq!(first.merged_with.len(), 6);

        // the untouched far cluster has the shorter boundary now
        let second = dec.grow_step().unwrap().unwrap();
        assert_eq!(second.root, far);

        let third = loop {
            let step = dec.grow_step().unwrap().unwrap();
            if dec.clusters.find(step.root) == dec.clusters.find(centre) {
                break step;
            }
        };
        assert_eq!(third.w_min, 1);
        assert!(third.grown.iter().all(|&e| !cardinal(e)));
        let diagonal_from_centre = third
            .grown
            .iter()
            .filter(|&&e| g.edge(e).u == centre || g.edge(e).v == centre)
            .count();
        let diagonals_at_centre = g.incident(centre).iter().filter(|&&e| !cardinal(e)).count();
        assert_eq!(diagonal_from_centre, diagonals_at_centre);
    }

    #[test]
    fn all_detectors_excited() {
        let params = LatticeParams::new(3, 1, 0.003).unwrap();
        let (g, _) = build_decoder_graphs(&params, WeightMode::Truncated(0.1)).unwrap();
        let events: Vec<u32> = (0..g.num_detectors() as u32).collect();
        let mut dec = UnionFindDecoder::new(&g);
        dec.syndrome_validation(&events).unwrap();
        for v in 0..g.num_detectors() as u32 {
            let r = dec.clusters.find(v);
            assert!(!dec.clusters.is_odd(r));
        }
        let c = dec.decode(&events).unwrap();
        assert_eq!(c.flips(&g), events);
    }

    #[test]
    fn unweighted_steps_are_unit() {
        let params = LatticeParams::new(5, 5, 0.005).unwrap();
        let (g, _) = build_decoder_graphs(&params, WeightMode::Unweighted).unwrap();
        let mut dec = UnionFindDecoder::new(&g);
        dec.begin(&[3, 77, 101, 140]).unwrap();
        while let Some(step) = dec.grow_step().unwrap() {
            assert_eq!(step.w_min, 1);
        }
    }

    #[test]
    fn reset_between_decodes() {
        let params = LatticeParams::new(5, 5, 0.005).unwrap();
        let (g, _) = build_decoder_graphs(&params, WeightMode::Truncated(0.1)).unwrap();
        let mut reused = UnionFindDecoder::new(&g);
        for events in [vec![1u32, 40], vec![3, 7, 90, 120], vec![], vec![0, 149]] {
            let fresh = decode(&g, &events).unwrap();
            assert_eq!(reused.decode(&events).unwrap(), fresh);
        }
    }
}
