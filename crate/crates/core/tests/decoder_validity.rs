mod common;

use toric_uf::circuit_sim::{CircuitSimulator, NoiseParams};
use toric_uf::decoder_graph::{build_decoder_graphs, WeightMode};
use toric_uf::harness::{run_memory_experiment, DecoderKind, ExperimentConfig};
use toric_uf::lattice::LatticeParams;
use toric_uf::uf_decoder::UnionFindDecoder;

const MODES: [WeightMode; 3] = [WeightMode::Weighted, WeightMode::Truncated(0.1), WeightMode::Unweighted];

#[test]
fn corrections_match_syndromes_across_grid() {
    for d in [3, 5, 7] {
        for p in [0.002, 0.005, 0.01] {
            let params = LatticeParams::new(d, d, p).unwrap();
            let sim = CircuitSimulator::from_params(&params).unwrap();
            for mode in MODES {
                let (primal, dual) = build_decoder_graphs(&params, mode).unwrap();
                for (g, pick_primal) in [(&primal, true), (&dual, false)] {
                    let mut dec = UnionFindDecoder::new(g);
                    for shot in 0..150 {
                        let rec = sim.sample_shot(&NoiseParams::new(p, 99, shot).unwrap());
                        let bits = if pick_primal {
                            &rec.events_primal
                        } else {
                            &rec.events_dual
                        };
                        let ev = common::events(bits);
                        let c = dec.decode(&ev).unwrap();
                        assert_eq!(c.flips(g), ev, "d={d} p={p} {mode:?} shot {shot}");
                    }
                }
            }
        }
    }
}

#[test]
fn growth_respects_touch_bound() {
    let params = LatticeParams::new(7, 7, 0.01).unwrap();
    let sim = CircuitSimulator::from_params(&params).unwrap();
    for mode in MODES {
        let (primal, _) = build_decoder_graphs(&params, mode).unwrap();
        let mut dec = UnionFindDecoder::new(&primal).with_instrumentation();
        for shot in 0..100 {
            let rec = sim.sample_shot(&NoiseParams::new(0.01, 4, shot).unwrap());
            dec.syndrome_validation(&common::events(&rec.events_primal)).unwrap();
            assert!(dec.touch_bound_holds(), "{mode:?} shot {shot}");
        }
    }
}

#[test]
fn decoding_is_deterministic() {
    let params = LatticeParams::new(5, 5, 0.008).unwrap();
    let sim = CircuitSimulator::from_params(&params).unwrap();
    let (primal, _) = build_decoder_graphs(&params, WeightMode::Weighted).unwrap();
    let mut reused = UnionFindDecoder::new(&primal);
    for shot in 0..50 {
        let rec = sim.sample_shot(&NoiseParams::new(0.008, 1, shot).unwrap());
        let ev = common::events(&rec.events_primal);
        let a = reused.decode(&ev).unwrap();
        let b = UnionFindDecoder::new(&primal).decode(&ev).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn experiments_are_reproducible() {
    let mut config = ExperimentConfig::new(vec![3, 5], vec![0.004, 0.008], DecoderKind::UfTruncated(0.1), 500, 21);
    config.threads = Some(1);
    let a = run_memory_experiment(&config).unwrap();
    config.threads = Some(4);
    let b = run_memory_experiment(&config).unwrap();
    assert_eq!(a.len(), 4);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((x.d, x.p, x.shots, x.failures), (y.d, y.p, y.shots, y.failures));
    }
}

#[test]
fn logical_error_rate_falls_with_distance_well_below_threshold() {
    let config = ExperimentConfig::new(vec![3, 5, 7], vec![0.002], DecoderKind::UfWeighted, 4000, 5);
    let stats = run_memory_experiment(&config).unwrap();
    assert!(stats[0].p_logical > stats[1].p_logical);
    assert!(stats[1].p_logical > stats[2].p_logical);
}
