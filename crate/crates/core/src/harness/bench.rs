use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{log_log_slope, DecoderKind, HarnessError, MemoryExperiment, RandomWeights, ShotDecoder, UfPair};
use crate::circuit_sim::ShotRecord;

/// Untimed decodes per distance, so first-touch page faults on the decoder
/// arrays are not charged to the timed trials.
const WARMUP_SHOTS: u64 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub d_list: Vec<usize>,
    pub p: f64,
    pub decoder: DecoderKind,
    pub random_weights: Option<RandomWeights>,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub d: usize,
    pub p: f64,
    pub decoder: String,
    pub trial: u64,
    /// Time to decode both graphs of the shot.
    pub decode_ns: u64,
    pub ns_per_cycle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub records: Vec<TimingRecord>,
    /// `(d, mean ns per cycle)` per distance.
    pub means: Vec<(usize, f64)>,
    /// Least-squares slope of log time per cycle against log d; `NaN` for
    /// fewer than two distances.
    pub exponent: f64,
}

fn events(record: &ShotRecord) -> (Vec<u32>, Vec<u32>) {
    let ones = |b: &fixedbitset::FixedBitSet| b.ones().map(|k| k as u32).collect();
    (ones(&record.events_primal), ones(&record.events_dual))
}

pub fn benchmark_decoder(config: &BenchConfig) -> Result<BenchReport, HarnessError> {
    if config.trials == 0 || config.d_list.is_empty() {
        return Err(HarnessError::Config("need at least one distance and one trial".into()));
    }
    if matches!(config.decoder, DecoderKind::MwpmOracle) {
        return Err(HarnessError::Config(
            "the exhaustive oracle is not a timing target".into(),
        ));
    }
    let mut records = Vec::with_capacity(config.d_list.len() * config.trials as usize);
    let mut means = Vec::new();
    for &d in &config.d_list {
        let exp = MemoryExperiment::new(d, d, config.p, config.decoder, config.seed, config.random_weights)?;
        let (primal, dual) = exp.graphs();
        let mut decoder = UfPair::new(primal, dual);
        let mut record = ShotRecord::empty(exp.simulator().detectors_per_graph());
        for shot in config.trials..config.trials + WARMUP_SHOTS {
            exp.sample_into(shot, &mut record)?;
            let (pe, de) = events(&record);
            decoder.decode_shot(&pe, &de).map_err(|e| e.at_shot(shot))?;
        }
        let mut sum = 0.0;
        for trial in 0..config.trials {
            exp.sample_into(trial, &mut record)?;
            let (pe, de) = events(&record);
            let start = Instant::now();
            decoder.decode_shot(&pe, &de).map_err(|e| e.at_shot(trial))?;
            let decode_ns = start.elapsed().as_nanos() as u64;
            let ns_per_cycle = decode_ns as f64 / d as f64;
            sum += ns_per_cycle;
            records.push(TimingRecord {
                d,
                p: config.p,
                decoder: config.decoder.name().to_string(),
                trial,
                decode_ns,
                ns_per_cycle,
            });
        }
        means.push((d, sum / config.trials as f64));
    }
    let exponent = if means.len() < 2 {
        f64::NAN
    } else {
        let ds: Vec<f64> = means.iter().map(|&(d, _)| d as f64).collect();
        let ts: Vec<f64> = means.iter().map(|&(_, t)| t).collect();
        log_log_slope(&ds, &ts)
    };
    Ok(BenchReport {
        records,
        means,
        exponent,
    })
}
