//! Monte Carlo memory experiments, statistics and timing benchmarks.
//!
//! A shot samples `rounds` noisy extraction rounds plus a perfect round,
//! decodes the primal and dual graphs independently and fails if the
//! combined correction and the true error differ in any logical parity.
//!
//! Shot `k` of an experiment with seed `s` always uses random stream `k` of
//! `s`, so results do not depend on thread count or scheduling.

mod bench;
mod stats;

use std::ops::Range;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit_sim::{CircuitSimulator, FaultEffect, NoiseParams, ShotRecord, SimError};
use crate::decoder_graph::{build_decoder_graphs, DecoderGraph, GraphError, WeightMode};
use crate::lattice::{LatticeParams, ParamError};
use crate::matching_oracle::{exact_mwpm, OracleError, MAX_EVENTS};
use crate::uf_decoder::{DecodeError, UnionFindDecoder};

pub use bench::{benchmark_decoder, BenchConfig, BenchReport, TimingRecord};
pub use stats::{
    binomial_interval, estimate_lambda, estimate_threshold, fit_quadratic, log_log_slope, Crossing, LambdaEstimate,
    ThresholdEstimate, LAMBDA_DISTANCES,
};

/// Physical error rate used to weight the graphs of a noiseless (`p = 0`)
/// experiment, whose own log-odds would be infinite.
pub const NOISELESS_GRAPH_P: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("shot {shot}: {source}")]
    Decode { shot: u64, source: DecodeError },
    #[error("shot {shot}: {source}")]
    Oracle { shot: u64, source: OracleError },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("fitted curves do not cross inside the grid")]
    NoCrossing,
    #[error(transparent)]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecoderKind {
    UfWeighted,
    UfUnweighted,
    UfTruncated(f64),
    MwpmOracle,
}

impl DecoderKind {
    /// Parses a CLI decoder name; `epsilon` only matters for `uf-truncated`.
    pub fn parse(name: &str, epsilon: f64) -> Result<Self, HarnessError> {
        match name {
            "uf-weighted" => Ok(Self::UfWeighted),
            "uf-unweighted" => Ok(Self::UfUnweighted),
            "uf-truncated" if epsilon > 0.0 => Ok(Self::UfTruncated(epsilon)),
            "uf-truncated" => Err(HarnessError::Config(format!("epsilon must be positive, got {epsilon}"))),
            "mwpm-oracle" => Ok(Self::MwpmOracle),
            other => Err(HarnessError::Config(format!("unknown decoder {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::UfWeighted => "uf-weighted",
            Self::UfUnweighted => "uf-unweighted",
            Self::UfTruncated(_) => "uf-truncated",
            Self::MwpmOracle => "mwpm-oracle",
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            Self::UfTruncated(eps) => Some(eps),
            _ => None,
        }
    }

    /// The oracle matches on the fully weighted graph.
    pub fn weight_mode(&self) -> WeightMode {
        match *self {
            Self::UfWeighted | Self::MwpmOracle => WeightMode::Weighted,
            Self::UfUnweighted => WeightMode::Unweighted,
            Self::UfTruncated(eps) => WeightMode::Truncated(eps),
        }
    }
}

/// Replaces every edge weight by the log-odds of `w ~ U[w_lo, w_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomWeights {
    pub w_lo: f64,
    pub w_hi: f64,
}

impl RandomWeights {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.w_lo > 0.0 && self.w_lo < self.w_hi && self.w_hi < 0.5 {
            Ok(())
        } else {
            Err(HarnessError::Config(format!(
                "random weights need 0 < w_lo < w_hi < 0.5, got [{}, {}]",
                self.w_lo, self.w_hi
            )))
        }
    }

    /// Draws one probability per edge of `graph` and reweights it. Both
    /// graphs of an instance use distinct streams of `seed`.
    pub fn apply(&self, graph: &mut DecoderGraph, seed: u64) -> Result<(), HarnessError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(graph.kind as u64);
        let probs: Vec<f64> = (0..graph.num_edges())
            .map(|_| rng.random_range(self.w_lo..=self.w_hi))
            .collect();
        graph.set_weights(&probs)?;
        Ok(())
    }
}

/// A grid of memory experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d_list: Vec<usize>,
    pub p_list: Vec<f64>,
    /// Noisy rounds per shot; `None` means `rounds = d`.
    pub rounds: Option<usize>,
    pub decoder: DecoderKind,
    pub shots: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub random_weights: Option<RandomWeights>,
}

impl ExperimentConfig {
    pub fn new(d_list: Vec<usize>, p_list: Vec<f64>, decoder: DecoderKind, shots: u64, seed: u64) -> Self {
        Self {
            d_list,
            p_list,
            rounds: None,
            decoder,
            shots,
            seed,
            threads: None,
            random_weights: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.shots == 0 {
            return Err(HarnessError::Config("shots must be at least 1".into()));
        }
        if self.d_list.is_empty() || self.p_list.is_empty() {
            return Err(HarnessError::Config("empty distance or error-rate list".into()));
        }
        if let Some(&p) = self.p_list.iter().find(|p| !(0.0..0.5).contains(*p)) {
            return Err(HarnessError::Config(format!("error rate {p} outside [0, 0.5)")));
        }
        if self.threads == Some(0) {
            return Err(HarnessError::Config("threads must be at least 1".into()));
        }
        if let Some(rw) = &self.random_weights {
            rw.validate()?;
        }
        for &d in &self.d_list {
            LatticeParams::new(d, self.rounds_for(d), 0.01)?;
        }
        Ok(())
    }

    pub fn rounds_for(&self, d: usize) -> usize {
        self.rounds.unwrap_or(d)
    }
}

/// Results of one `(d, p)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub d: usize,
    pub rounds: usize,
    pub p: f64,
    pub decoder: String,
    pub epsilon: Option<f64>,
    /// Decoded shots (excludes shots skipped by the oracle).
    pub shots: u64,
    pub failures: u64,
    pub p_logical: f64,
    pub stderr: f64,
    pub seed: u64,
    pub wall_ns_total: u64,
    /// Mean decode time per shot divided by the number of rounds.
    pub wall_ns_per_cycle: f64,
    /// Exact (Clopper-Pearson) 95% interval for `p_logical`.
    pub ci95: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub skipped: Option<u64>,
}

/// Order-independent shot counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub shots: u64,
    pub failures: u64,
    pub skipped: u64,
    pub decode_ns: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            shots: self.shots + o.shots,
            failures: self.failures + o.failures,
            skipped: self.skipped + o.skipped,
            decode_ns: self.decode_ns + o.decode_ns,
        }
    }
}

#[derive(Debug, Error)]
pub enum ShotError {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl ShotError {
    pub fn at_shot(self, shot: u64) -> HarnessError {
        match self {
            ShotError::Decode(source) => HarnessError::Decode { shot, source },
            ShotError::Oracle(source) => HarnessError::Oracle { shot, source },
        }
    }
}

/// Anything that turns the two event lists of a shot into corrections.
pub trait ShotDecoder {
    /// XOR of the two corrections' logical bits, or `None` to skip the shot.
    fn decode_shot(&mut self, primal: &[u32], dual: &[u32]) -> Result<Option<u8>, ShotError>;
}

/// Union-find on both graphs, reusing scratch state across shots.
pub struct UfPair<'g> {
    primal: UnionFindDecoder<'g>,
    dual: UnionFindDecoder<'g>,
}

impl<'g> UfPair<'g> {
    pub fn new(primal: &'g DecoderGraph, dual: &'g DecoderGraph) -> Self {
        Self {
            primal: UnionFindDecoder::new(primal),
            dual: UnionFindDecoder::new(dual),
        }
    }
}

impl ShotDecoder for UfPair<'_> {
    fn decode_shot(&mut self, primal: &[u32], dual: &[u32]) -> Result<Option<u8>, ShotError> {
        let a = self.primal.decode(primal)?;
        let b = self.dual.decode(dual)?;
        Ok(Some(a.logical ^ b.logical))
    }
}

/// Exhaustive matching; shots with more than [`MAX_EVENTS`] events in either
/// graph are skipped.
pub struct OraclePair<'g> {
    primal: &'g DecoderGraph,
    dual: &'g DecoderGraph,
}

impl<'g> OraclePair<'g> {
    pub fn new(primal: &'g DecoderGraph, dual: &'g DecoderGraph) -> Self {
        Self { primal, dual }
    }
}

impl ShotDecoder for OraclePair<'_> {
    fn decode_shot(&mut self, primal: &[u32], dual: &[u32]) -> Result<Option<u8>, ShotError> {
        if primal.len() > MAX_EVENTS || dual.len() > MAX_EVENTS {
            return Ok(None);
        }
        let a = exact_mwpm(self.primal, primal)?;
        let b = exact_mwpm(self.dual, dual)?;
        Ok(Some(a.logical ^ b.logical))
    }
}

/// Failure iff any logical parity of correction plus error is odd.
#[inline]
pub fn is_failure(correction_logical: u8, true_logical: u8) -> bool {
    correction_logical ^ true_logical != 0
}

/// Everything needed to run shots of one `(d, rounds, p)` cell.
#[derive(Debug, Clone)]
pub struct MemoryExperiment {
    pub params: LatticeParams,
    pub decoder: DecoderKind,
    pub seed: u64,
    sim: CircuitSimulator,
    primal: DecoderGraph,
    dual: DecoderGraph,
    forced: Option<FaultEffect>,
}

impl MemoryExperiment {
    /// Builds the circuit and both decoder graphs. `p = 0` is allowed; the
    /// graphs are then weighted at [`NOISELESS_GRAPH_P`].
    pub fn new(
        d: usize,
        rounds: usize,
        p: f64,
        decoder: DecoderKind,
        seed: u64,
        random_weights: Option<RandomWeights>,
    ) -> Result<Self, HarnessError> {
        if !(0.0..0.5).contains(&p) {
            return Err(HarnessError::Config(format!("error rate {p} outside [0, 0.5)")));
        }
        let graph_p = if p == 0.0 { NOISELESS_GRAPH_P } else { p };
        let graph_params = LatticeParams::new(d, rounds, graph_p)?;
        let (mut primal, mut dual) = build_decoder_graphs(&graph_params, decoder.weight_mode())?;
        if let Some(rw) = random_weights {
            rw.validate()?;
            rw.apply(&mut primal, seed)?;
            rw.apply(&mut dual, seed)?;
        }
        Ok(Self {
            params: LatticeParams { d, rounds, p },
            decoder,
            seed,
            sim: CircuitSimulator::new(d, rounds)?,
            primal,
            dual,
            forced: None,
        })
    }

    /// Adds a fixed fault effect to every sampled shot.
    pub fn with_forced_effect(mut self, effect: FaultEffect) -> Self {
        self.forced = Some(effect);
        self
    }

    pub fn simulator(&self) -> &CircuitSimulator {
        &self.sim
    }

    pub fn graphs(&self) -> (&DecoderGraph, &DecoderGraph) {
        (&self.primal, &self.dual)
    }

    /// Samples shot `shot_index` into `record`.
    pub fn sample_into(&self, shot_index: u64, record: &mut ShotRecord) -> Result<(), HarnessError> {
        let noise = NoiseParams::new(self.params.p, self.seed, shot_index)?;
        self.sim.sample_shot_into(&noise, record);
        if let Some(effect) = &self.forced {
            record.apply(effect);
        }
        Ok(())
    }

    /// Runs the given shot indices with the configured decoder.
    pub fn run_range(&self, shots: Range<u64>, threads: Option<usize>) -> Result<Tally, HarnessError> {
        match self.decoder {
            DecoderKind::MwpmOracle => self.run_with(shots, threads, || OraclePair::new(&self.primal, &self.dual)),
            _ => self.run_with(shots, threads, || UfPair::new(&self.primal, &self.dual)),
        }
    }

    /// Runs shots with decoders built by `make`, one per worker.
    pub fn run_with<D, F>(&self, shots: Range<u64>, threads: Option<usize>, make: F) -> Result<Tally, HarnessError>
    where
        D: ShotDecoder,
        F: Fn() -> D + Sync + Send,
    {
        let work = || {
            shots
                .clone()
                .into_par_iter()
                .map_init(
                    || {
                        (
                            make(),
                            ShotRecord::empty(self.sim.detectors_per_graph()),
                            Vec::new(),
                            Vec::new(),
                        )
                    },
                    |(decoder, record, primal, dual), shot| {
                        self.sample_into(shot, record)?;
                        primal.clear();
                        primal.extend(record.events_primal.ones().map(|k| k as u32));
                        dual.clear();
                        dual.extend(record.events_dual.ones().map(|k| k as u32));
                        let start = Instant::now();
                        let outcome = decoder.decode_shot(primal, dual);
                        let elapsed = start.elapsed().as_nanos() as u64;
                        let outcome = outcome.map_err(|e| e.at_shot(shot))?;
                        Ok(match outcome {
                            None => Tally {
                                skipped: 1,
                                ..Tally::default()
                            },
                            Some(bits) => Tally {
                                shots: 1,
                                failures: is_failure(bits, record.true_logical) as u64,
                                skipped: 0,
                                decode_ns: elapsed,
                            },
                        })
                    },
                )
                .try_reduce(Tally::default, |a, b| Ok(a + b))
        };
        match threads {
            Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(work),
            None => work(),
        }
    }

    /// Runs batches of `batch` shots until `min_failures` failures or
    /// `max_shots` attempted shots, whichever comes first.
    pub fn run_until(
        &self,
        min_failures: u64,
        max_shots: u64,
        batch: u64,
        threads: Option<usize>,
    ) -> Result<Tally, HarnessError> {
        let batch = batch.max(1);
        let mut total = Tally::default();
        let mut next = 0;
        while next < max_shots && total.failures < min_failures {
            let end = (next + batch).min(max_shots);
            total = total + self.run_range(next..end, threads)?;
            next = end;
        }
        Ok(total)
    }

    pub fn stats(&self, tally: &Tally) -> ExperimentStats {
        let n = tally.shots;
        let p_logical = if n == 0 { 0.0 } else { tally.failures as f64 / n as f64 };
        let stderr = if n == 0 {
            0.0
        } else {
            (p_logical * (1.0 - p_logical) / n as f64).sqrt()
        };
        let per_shot = if n == 0 { 0.0 } else { tally.decode_ns as f64 / n as f64 };
        let (lo, hi) = binomial_interval(tally.failures, n, 0.95);
        ExperimentStats {
            d: self.params.d,
            rounds: self.params.rounds,
            p: self.params.p,
            decoder: self.decoder.name().to_string(),
            epsilon: self.decoder.epsilon(),
            shots: n,
            failures: tally.failures,
            p_logical,
            stderr,
            seed: self.seed,
            wall_ns_total: tally.decode_ns,
            wall_ns_per_cycle: per_shot / self.params.rounds as f64,
            ci95: [lo, hi],
            skipped: matches!(self.decoder, DecoderKind::MwpmOracle).then_some(tally.skipped),
        }
    }
}

/// Runs every `(d, p)` cell of the grid, distances outermost.
pub fn run_memory_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentStats>, HarnessError> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.d_list.len() * config.p_list.len());
    for &d in &config.d_list {
        for &p in &config.p_list {
            let exp = MemoryExperiment::new(
                d,
                config.rounds_for(d),
                p,
                config.decoder,
                config.seed,
                config.random_weights,
            )?;
            let tally = exp.run_range(0..config.shots, config.threads)?;
            out.push(exp.stats(&tally));
        }
    }
    Ok(out)
}
