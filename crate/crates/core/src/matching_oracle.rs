//! Exact minimum-weight perfect matching by exhaustive pairing.
//!
//! Only meant for small syndromes (at most [`MAX_EVENTS`] events): all
//! `(k-1)!!` pairings are enumerated over shortest-path distances. Distances
//! are integer sums of edge units, so ties are exact and resolved in favour
//! of the lexicographically first pairing.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::decoder_graph::DecoderGraph;
use crate::uf_decoder::Correction;

pub const MAX_EVENTS: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{0} events exceed the exhaustive-matching cap of {MAX_EVENTS}")]
    TooManyEvents(usize),
    #[error("odd number of detection events ({0})")]
    OddSyndrome(usize),
    #[error("detector {0} is unreachable")]
    Unreachable(u32),
}

/// Single-source shortest paths with predecessor edges.
#[derive(Debug, Clone)]
pub struct DistanceTable {
    pub source: u32,
    /// `u64::MAX` for unreachable detectors.
    pub distance: Vec<u64>,
    /// Edge used to reach each detector; `u32::MAX` for the source and
    /// unreachable detectors.
    pub predecessor: Vec<u32>,
}

impl DistanceTable {
    /// Edges of the stored shortest path from the source to `target`.
    pub fn path_to(&self, graph: &DecoderGraph, target: u32) -> Option<Vec<u32>> {
        if self.distance[target as usize] == u64::MAX {
            return None;
        }
        let mut path = Vec::new();
        let mut v = target;
        while v != self.source {
            let e = self.predecessor[v as usize];
            path.push(e);
            v = graph.edge(e).other(v);
        }
        path.reverse();
        Some(path)
    }
}

/// Dijkstra over edge units.
pub fn shortest_paths(graph: &DecoderGraph, source: u32) -> DistanceTable {
    let n = graph.num_detectors();
    let mut distance = vec![u64::MAX; n];
    let mut predecessor = vec![u32::MAX; n];
    let mut heap = BinaryHeap::new();
    distance[source as usize] = 0;
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((dist, v))) = heap.pop() {
        if dist > distance[v as usize] {
            continue;
        }
        for &e in graph.incident(v) {
            let rec = graph.edge(e);
            let u = rec.other(v);
            let next = dist + rec.units;
            if next < distance[u as usize] {
                distance[u as usize] = next;
                predecessor[u as usize] = e;
                heap.push(Reverse((next, u)));
            }
        }
    }
    DistanceTable {
        source,
        distance,
        predecessor,
    }
}

/// A perfect pairing of event positions with its total distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
    pub cost: u64,
}

/// Minimum-weight pairing of `events` (indices into `events` in the result)
/// given pairwise distances.
pub fn best_pairing(dist: &[Vec<u64>]) -> Pairing {
    fn recurse(
        dist: &[Vec<u64>],
        used: &mut [bool],
        current: &mut Vec<(usize, usize)>,
        cost: u64,
        best: &mut Option<Pairing>,
    ) {
        let Some(first) = used.iter().position(|&u| !u) else {
            if best.as_ref().is_none_or(|b| cost < b.cost) {
                *best = Some(Pairing {
                    pairs: current.clone(),
                    cost,
                });
            }
            return;
        };
        used[first] = true;
        for second in first + 1..used.len() {
            if used[second] {
                continue;
            }
            let d = dist[first][second];
            if d == u64::MAX {
                continue;
            }
            used[second] = true;
            current.push((first, second));
            recurse(dist, used, current, cost.saturating_add(d), best);
            current.pop();
            used[second] = false;
        }
        used[first] = false;
    }

    let mut best = None;
    recurse(dist, &mut vec![false; dist.len()], &mut Vec::new(), 0, &mut best);
    best.unwrap_or(Pairing {
        pairs: Vec::new(),
        cost: u64::MAX,
    })
}

/// Optimal pairing of `events` together with the shortest-path tables of
/// each event.
pub fn min_weight_pairing(graph: &DecoderGraph, events: &[u32]) -> Result<(Pairing, Vec<DistanceTable>), OracleError> {
    if events.len() > MAX_EVENTS {
        return Err(OracleError::TooManyEvents(events.len()));
    }
    if events.len() % 2 == 1 {
        return Err(OracleError::OddSyndrome(events.len()));
    }
    let tables: Vec<DistanceTable> = events.iter().map(|&s| shortest_paths(graph, s)).collect();
    let dist: Vec<Vec<u64>> = tables
        .iter()
        .map(|t| events.iter().map(|&v| t.distance[v as usize]).collect())
        .collect();
    let pairing = best_pairing(&dist);
    if pairing.pairs.len() * 2 != events.len() {
        return Err(OracleError::Unreachable(events[0]));
    }
    Ok((pairing, tables))
}

/// Exact minimum-weight perfect matching of the events.
pub fn exact_mwpm(graph: &DecoderGraph, events: &[u32]) -> Result<Correction, OracleError> {
    let (pairing, tables) = min_weight_pairing(graph, events)?;

    // symmetric difference of the matched paths
    let mut used = vec![false; graph.num_edges()];
    let mut touched = Vec::new();
    for &(a, b) in &pairing.pairs {
        let path = tables[a]
            .path_to(graph, events[b])
            .ok_or(OracleError::Unreachable(events[b]))?;
        for e in path {
            if !used[e as usize] {
                touched.push(e);
            }
            used[e as usize] ^= true;
        }
    }
    let mut correction = Correction::default();
    for e in touched {
        if used[e as usize] {
            correction.edges.push(e);
            correction.logical ^= graph.edge(e).logical;
        }
    }
    Ok(correction)
}

/// Total distance of an explicit pairing of event positions.
pub fn pairing_cost(graph: &DecoderGraph, events: &[u32], pairs: &[(usize, usize)]) -> u64 {
    pairs
        .iter()
        .map(|&(a, b)| shortest_paths(graph, events[a]).distance[events[b] as usize])
        .fold(0u64, |acc, d| acc.saturating_add(d))
}

#[cfg(test)]
mod tests {
    use std::collections::VecDeque;

    use super::*;
    use crate::decoder_graph::{build_decoder_graphs, EdgeKind, EdgeRecord, WeightMode};
    use crate::lattice::{GraphKind, LatticeParams};

    fn graph(n: usize, edges: &[(u32, u32, f64)]) -> DecoderGraph {
        let edges = edges
            .iter()
            .map(|&(u, v, w)| EdgeRecord {
                u,
                v,
                p_sum: 0.01,
                weight: w,
                units: 0,
                kind: EdgeKind::Spacelike,
                logical: 0,
            })
            .collect();
        DecoderGraph::from_edges(GraphKind::Primal, n, edges, WeightMode::Truncated(1.0)).unwrap()
    }

    #[test]
    fn distance_to_self_is_zero() {
        let g = graph(3, &[(0, 1, 2.0), (1, 2, 2.0)]);
        let t = shortest_paths(&g, 1);
        assert_eq!(t.distance[1], 0);
        assert_eq!(t.path_to(&g, 1).unwrap(), Vec::<u32>::new());
    }

    #[test]
    fn direct_edge_beats_detour() {
        let g = graph(3, &[(0, 1, 3.0), (0, 2, 2.0), (2, 1, 2.0)]);
        let t = shortest_paths(&g, 0);
        assert_eq!(t.distance[1], 3);
        assert_eq!(t.path_to(&g, 1).unwrap(), vec![0]);
    }

    #[test]
    fn unweighted_distance_is_hop_count() {
        let params = LatticeParams::new(3, 3, 0.003).unwrap();
        let (g, _) = build_decoder_graphs(&params, WeightMode::Unweighted).unwrap();
        let src = 5;
        let t = shortest_paths(&g, src);
        // breadth-first search
        let mut hops = vec![u64::MAX; g.num_detectors()];
        hops[src as usize] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &e in g.incident(v) {
                let u = g.edge(e).other(v);
                if hops[u as usize] == u64::MAX {
                    hops[u as usize] = hops[v as usize] + 1;
                    queue.push_back(u);
                }
            }
        }
        assert_eq!(t.distance, hops);
    }

    #[test]
    fn two_events_use_shortest_path() {
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 1.0), (0, 3, 5.0), (3, 2, 1.0)]);
        let c = exact_mwpm(&g, &[0, 2]).unwrap();
        assert_eq!(c.edges, vec![0, 1]);
    }

    #[test]
    fn four_events_choose_best_of_three() {
        // line 0-1-2-3 with a heavy middle edge: pairs (0,1), (2,3)
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 10.0), (2, 3, 1.0)]);
        let c = exact_mwpm(&g, &[0, 1, 2, 3]).unwrap();
        let mut edges = c.edges.clone();
        edges.sort();
        assert_eq!(edges, vec![0, 2]);
    }

    #[test]
    fn pairing_enumeration_counts() {
        // all-equal distances: lexicographically first pairing wins
        let dist = vec![vec![1u64; 6]; 6];
        let p = best_pairing(&dist);
        assert_eq!(p.pairs, vec![(0, 1), (2, 3), (4, 5)]);
        assert_eq!(p.cost, 3);
    }

    #[test]
    fn caps_and_parity() {
        let g = graph(14, &[(0, 1, 1.0)]);
        let many: Vec<u32> = (0..14).collect();
        assert_eq!(exact_mwpm(&g, &many), Err(OracleError::TooManyEvents(14)));
        assert_eq!(exact_mwpm(&g, &[0, 1, 2]), Err(OracleError::OddSyndrome(3)));
        assert!(matches!(exact_mwpm(&g, &[0, 5]), Err(OracleError::Unreachable(_))));
    }

    #[test]
    fn empty_syndrome() {
        let g = graph(2, &[(0, 1, 1.0)]);
        assert_eq!(exact_mwpm(&g, &[]).unwrap(), Correction::default());
    }
}
