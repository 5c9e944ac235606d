#![allow(dead_code)]

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use toric_uf::circuit_sim::{enumerate_fault_sites, CircuitSimulator, ShotRecord};
use toric_uf::decoder_graph::{build_decoder_graphs, DecoderGraph, WeightMode};
use toric_uf::lattice::{logical, LatticeParams};
use toric_uf::uf_decoder::UnionFindDecoder;

pub fn events(bits: &FixedBitSet) -> Vec<u32> {
    bits.ones().map(|k| k as u32).collect()
}

pub fn edge_lookup(g: &DecoderGraph) -> HashMap<(u32, u32), u32> {
    g.edges()
        .iter()
        .enumerate()
        .map(|(k, e)| ((e.u.min(e.v), e.u.max(e.v)), k as u32))
        .collect()
}

/// Checks every single fault, replayed through the dense frame simulator,
/// against the built graphs. Returns `(faults checked, violations)`.
pub fn graph_soundness(d: usize, rounds: usize, p: f64) -> (usize, Vec<String>) {
    let params = LatticeParams::new(d, rounds, p).unwrap();
    let sim = CircuitSimulator::from_params(&params).unwrap();
    let (primal, dual) = build_decoder_graphs(&params, WeightMode::Weighted).unwrap();
    let lookups = [edge_lookup(&primal), edge_lookup(&dual)];
    let mut p_sums = [vec![0.0; primal.num_edges()], vec![0.0; dual.num_edges()]];
    let mut violations = Vec::new();
    let sites = enumerate_fault_sites(&params);
    for site in &sites {
        let rec = sim.inject_fault(site).unwrap();
        for (k, (bits, mask)) in [
            (&rec.events_primal, logical::X_MASK),
            (&rec.events_dual, logical::Z_MASK),
        ]
        .into_iter()
        .enumerate()
        {
            let ev = events(bits);
            match ev.len() {
                0 => {
                    if rec.true_logical & mask != 0 {
                        violations.push(format!("{site:?}: undetectable logical"));
                    }
                }
                2 => match lookups[k].get(&(ev[0], ev[1])) {
                    None => violations.push(format!("{site:?}: missing edge {ev:?}")),
                    Some(&e) => {
                        let g = if k == 0 { &primal } else { &dual };
                        if g.edge(e).logical != rec.true_logical & mask {
                            violations.push(format!("{site:?}: logical disagrees with edge {e}"));
                        }
                        p_sums[k][e as usize] += site.probability;
                    }
                },
                n => violations.push(format!("{site:?}: {n} events")),
            }
        }
    }
    for (k, g) in [&primal, &dual].into_iter().enumerate() {
        for (e, rec) in g.edges().iter().enumerate() {
            if (rec.p_sum - p_sums[k][e]).abs() > 1e-12 {
                violations.push(format!("edge {e}: p_sum {} vs {}", rec.p_sum, p_sums[k][e]));
            }
        }
    }
    (sites.len(), violations)
}

/// Decodes every single-fault shot; returns `(faults checked, failures)`.
pub fn single_fault_exhaustion(d: usize, rounds: usize, mode: WeightMode) -> (usize, Vec<String>) {
    let params = LatticeParams::new(d, rounds, 0.001).unwrap();
    let sim = CircuitSimulator::from_params(&params).unwrap();
    let (primal, dual) = build_decoder_graphs(&params, mode).unwrap();
    let mut dp = UnionFindDecoder::new(&primal);
    let mut dd = UnionFindDecoder::new(&dual);
    let mut failures = Vec::new();
    let sites = enumerate_fault_sites(&params);
    for site in &sites {
        let rec = sim.inject_fault(site).unwrap();
        if let Err(msg) = decode_and_check(&mut dp, &mut dd, &rec) {
            failures.push(format!("{site:?}: {msg}"));
        }
    }
    (sites.len(), failures)
}

/// Decodes both graphs and checks syndrome consistency and logical success.
pub fn decode_and_check(dp: &mut UnionFindDecoder, dd: &mut UnionFindDecoder, rec: &ShotRecord) -> Result<(), String> {
    let ep = events(&rec.events_primal);
    let ed = events(&rec.events_dual);
    let cp = dp.decode(&ep).map_err(|e| e.to_string())?;
    let cd = dd.decode(&ed).map_err(|e| e.to_string())?;
    if cp.flips(dp.graph()) != ep || cd.flips(dd.graph()) != ed {
        return Err("correction flips differ from events".into());
    }
    if cp.logical ^ cd.logical ^ rec.true_logical != 0 {
        return Err("logical failure".into());
    }
    Ok(())
}
