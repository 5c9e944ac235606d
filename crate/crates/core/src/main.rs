use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use toric_uf::circuit_sim::{CircuitSimulator, NoiseParams};
use toric_uf::decoder_graph::{build_decoder_graphs, WeightMode};
use toric_uf::harness::{
    benchmark_decoder, estimate_lambda, estimate_threshold, is_failure, run_memory_experiment, BenchConfig,
    DecoderKind, ExperimentConfig, MemoryExperiment, RandomWeights, LAMBDA_DISTANCES,
};
use toric_uf::io;
use toric_uf::lattice::{GraphKind, LatticeParams};
use toric_uf::uf_decoder::UnionFindDecoder;

type BoxError = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(version, about = "Union-find decoding of the toric code under circuit-level noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the primal and dual decoder graphs and write them as JSON.
    Graph {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        rounds: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample noisy shots and write their detection events as CSV.
    Sample {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        rounds: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        shots: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the logical error rate of one (d, p) point.
    Run {
        #[arg(long)]
        d: usize,
        /// Noisy rounds; defaults to d.
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        decoder: DecoderArgs,
        #[arg(long)]
        shots: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a (d, p) grid and locate the crossing of the p_L curves.
    Threshold {
        #[arg(long, value_delimiter = ',', required = true)]
        d_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        p_list: Vec<f64>,
        #[command(flatten)]
        decoder: DecoderArgs,
        #[arg(long)]
        shots: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the suppression factor over d = 5, 7, 9, 11 at one p.
    Lambda {
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        decoder: DecoderArgs,
        /// Maximum shots per distance; each stops early at the failure target.
        #[arg(long)]
        shots: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        min_failures: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time single-threaded decoding per extraction cycle.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        d_list: Vec<usize>,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        decoder: DecoderArgs,
        #[arg(long)]
        random_weights: bool,
        #[arg(long, default_value_t = 0.001)]
        w_lo: f64,
        #[arg(long, default_value_t = 0.005)]
        w_hi: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a shots CSV against a graph file.
    Decode {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        shots: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Weighted,
    Unweighted,
    Truncated,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    UfWeighted,
    UfUnweighted,
    UfTruncated,
    MwpmOracle,
}

#[derive(Args)]
struct DecoderArgs {
    #[arg(long, value_enum)]
    decoder: DecoderArg,
    /// Weight resolution for uf-truncated.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
}

impl DecoderArgs {
    fn kind(&self) -> Result<DecoderKind, BoxError> {
        let name = match self.decoder {
            DecoderArg::UfWeighted => "uf-weighted",
            DecoderArg::UfUnweighted => "uf-unweighted",
            DecoderArg::UfTruncated => "uf-truncated",
            DecoderArg::MwpmOracle => "mwpm-oracle",
        };
        Ok(DecoderKind::parse(name, self.epsilon)?)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, BoxError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), BoxError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), BoxError> {
    match cli.command {
        Command::Graph {
            d,
            rounds,
            p,
            mode,
            epsilon,
            out,
        } => {
            let mode = match mode {
                ModeArg::Weighted => WeightMode::Weighted,
                ModeArg::Unweighted => WeightMode::Unweighted,
                ModeArg::Truncated => WeightMode::Truncated(epsilon),
            };
            let (primal, dual) = build_decoder_graphs(&LatticeParams::new(d, rounds, p)?, mode)?;
            let mut w = create(&out)?;
            io::write_graphs(&mut w, &[&primal, &dual])?;
            w.flush()?;
        }
        Command::Sample {
            d,
            rounds,
            p,
            shots,
            seed,
            out,
        } => {
            let sim = CircuitSimulator::from_params(&LatticeParams::new(d, rounds, p)?)?;
            let mut records = Vec::with_capacity(shots as usize);
            for k in 0..shots {
                records.push((k, sim.sample_shot(&NoiseParams::new(p, seed, k)?)));
            }
            io::write_shots(create(&out)?, records)?;
        }
        Command::Run {
            d,
            rounds,
            p,
            decoder,
            shots,
            seed,
            threads,
            out,
        } => {
            let mut config = ExperimentConfig::new(vec![d], vec![p], decoder.kind()?, shots, seed);
            config.rounds = rounds;
            config.threads = threads;
            let stats = run_memory_experiment(&config)?.remove(0);
            eprintln!(
                "d={} p={} shots={} failures={} p_L={:.3e}",
                stats.d, stats.p, stats.shots, stats.failures, stats.p_logical
            );
            write_json(&out, &stats)?;
        }
        Command::Threshold {
            d_list,
            p_list,
            decoder,
            shots,
            seed,
            threads,
            out,
        } => {
            let mut config = ExperimentConfig::new(d_list, p_list, decoder.kind()?, shots, seed);
            config.threads = threads;
            let cells = run_memory_experiment(&config)?;
            let estimate = estimate_threshold(&cells);
            let value = match &estimate {
                Ok(est) => json!({ "cells": cells, "threshold": est }),
                Err(e) => json!({ "cells": cells, "threshold": null, "error": e.to_string() }),
            };
            write_json(&out, &value)?;
            let est = estimate?;
            eprintln!("p_thr = {:.4}% +- {:.4}%", 100.0 * est.p_thr, 100.0 * est.uncertainty);
        }
        Command::Lambda {
            p,
            decoder,
            shots,
            seed,
            min_failures,
            threads,
            out,
        } => {
            let kind = decoder.kind()?;
            let mut cells = Vec::new();
            for d in LAMBDA_DISTANCES {
                let exp = MemoryExperiment::new(d, d, p, kind, seed, None)?;
                let tally = exp.run_until(min_failures, shots, 100_000.min(shots), threads)?;
                cells.push(exp.stats(&tally));
            }
            let estimate = estimate_lambda(&cells, p, min_failures);
            let value = match &estimate {
                Ok(est) => json!({ "cells": cells, "lambda": est }),
                Err(e) => json!({ "cells": cells, "lambda": null, "error": e.to_string() }),
            };
            write_json(&out, &value)?;
            let est = estimate?;
            eprintln!("lambda = {:.4} +- {:.4}", est.lambda, est.stderr);
        }
        Command::Bench {
            d_list,
            p,
            decoder,
            random_weights,
            w_lo,
            w_hi,
            trials,
            seed,
            out,
        } => {
            let config = BenchConfig {
                d_list,
                p,
                decoder: decoder.kind()?,
                random_weights: random_weights.then_some(RandomWeights { w_lo, w_hi }),
                trials,
                seed,
            };
            let report = benchmark_decoder(&config)?;
            let mut w = csv::Writer::from_writer(create(&out)?);
            for r in &report.records {
                w.serialize(r)?;
            }
            w.flush()?;
            for (d, t) in &report.means {
                eprintln!("d={d} mean ns/cycle={t:.0}");
            }
            eprintln!("exponent = {:.3}", report.exponent);
        }
        Command::Decode { graph, shots, out } => {
            let graphs = io::read_graphs(BufReader::new(File::open(&graph)?))?;
            let find = |kind| {
                graphs
                    .iter()
                    .find(|g| g.kind == kind)
                    .ok_or_else(|| format!("graph file lacks the {} graph", kind.as_str()))
            };
            let (primal, dual) = (find(GraphKind::Primal)?, find(GraphKind::Dual)?);
            let rows = io::read_shots(BufReader::new(File::open(&shots)?), primal.num_detectors())?;
            let mut dp = UnionFindDecoder::new(primal);
            let mut dd = UnionFindDecoder::new(dual);
            let mut w = csv::Writer::from_writer(create(&out)?);
            w.write_record([
                "shot_index",
                "failure",
                "primal_size",
                "dual_size",
                "growth_steps",
                "peel_edges",
            ])?;
            let mut failures = 0u64;
            for row in &rows {
                let ep: Vec<u32> = row.record.events_primal.ones().map(|k| k as u32).collect();
                let ed: Vec<u32> = row.record.events_dual.ones().map(|k| k as u32).collect();
                let cp = dp.decode(&ep)?;
                let (sp, gp) = (dp.stats(), cp.edges.len());
                let cd = dd.decode(&ed)?;
                let (sd, gd) = (dd.stats(), cd.edges.len());
                let failure = is_failure(cp.logical ^ cd.logical, row.record.true_logical);
                failures += failure as u64;
                w.write_record([
                    row.shot_index.to_string(),
                    (failure as u8).to_string(),
                    gp.to_string(),
                    gd.to_string(),
                    (sp.growth_steps + sd.growth_steps).to_string(),
                    (sp.peel_edges + sd.peel_edges).to_string(),
                ])?;
            }
            w.flush()?;
            eprintln!("decoded {} shots, {failures} failures", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
