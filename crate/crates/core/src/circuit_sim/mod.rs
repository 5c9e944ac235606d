//! Pauli-frame simulation of the noisy six-step extraction circuit.
//!
//! Noise model, per noisy round:
//!
//! * each data qubit idles during the preparation and measurement steps and
//!   then suffers X, Y or Z with probability `p/3` each;
//! * each CNOT is followed by one of the 15 non-identity two-qubit Paulis with
//!   probability `p/15` each;
//! * each ancilla preparation is flipped (`|1>` for `|0>`, `|->` for `|+>`)
//!   with probability `2p/3`;
//! * each recorded measurement outcome is flipped with probability `2p/3`.
//!
//! Ancillas are never idle inside the six steps, so they get no idle noise.
//! The noisy rounds are followed by one perfect round.
//!
//! Shots are sampled by drawing the set of faulty locations with geometric
//! gaps and composing each fault's sparse effect. [`CircuitSimulator::sample_shot_dense`]
//! replays the same fault draw through a full dense frame and produces an
//! identical record.

pub mod fault;
pub mod frame;
pub mod propagate;
pub mod schedule;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use thiserror::Error;

use crate::lattice::{Lattice, LatticeParams};

pub use fault::{enumerate_fault_sites, Block, FaultAction, FaultSite, Location, Pauli};
pub use frame::{step_frame, Outcomes, PauliFrame};
pub use propagate::{propagate, FaultEffect};
pub use schedule::{build_schedule, Direction, Schedule, ScheduleError, Timestep};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("fault site {0:?} does not exist in the schedule")]
    InvalidSite(Location),
    #[error("physical error rate must lie in [0, 0.5), got {0}")]
    Probability(f64),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Sampling parameters for one shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub p: f64,
    pub seed: u64,
    pub shot_index: u64,
}

impl NoiseParams {
    pub fn new(p: f64, seed: u64, shot_index: u64) -> Result<Self, SimError> {
        if !(0.0..0.5).contains(&p) {
            return Err(SimError::Probability(p));
        }
        Ok(Self { p, seed, shot_index })
    }

    /// Per-shot random stream: ChaCha8 keyed by `seed_from_u64(seed)` with
    /// stream id `shot_index`. Independent of evaluation order.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.shot_index);
        rng
    }
}

/// Detection events of one shot plus the true logical parities of the
/// residual data error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotRecord {
    pub events_primal: FixedBitSet,
    pub events_dual: FixedBitSet,
    /// See [`crate::lattice::logical`] for bit meanings.
    pub true_logical: u8,
}

impl ShotRecord {
    pub fn empty(detectors: usize) -> Self {
        Self {
            events_primal: FixedBitSet::with_capacity(detectors),
            events_dual: FixedBitSet::with_capacity(detectors),
            true_logical: 0,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.events_primal.is_clear() && self.events_dual.is_clear() && self.true_logical == 0
    }

    pub fn clear(&mut self) {
        self.events_primal.clear();
        self.events_dual.clear();
        self.true_logical = 0;
    }

    pub fn apply(&mut self, effect: &FaultEffect) {
        for &k in &effect.primal {
            self.events_primal.toggle(k as usize);
        }
        for &k in &effect.dual {
            self.events_dual.toggle(k as usize);
        }
        self.true_logical ^= effect.logical;
    }

    pub fn primal_events(&self) -> Vec<u32> {
        self.events_primal.ones().map(|k| k as u32).collect()
    }

    pub fn dual_events(&self) -> Vec<u32> {
        self.events_dual.ones().map(|k| k as u32).collect()
    }
}

/// A sampled fault: a location together with the chosen component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampledFault {
    pub location: Location,
    pub component: u8,
}

impl SampledFault {
    pub fn action(&self) -> FaultAction {
        FaultAction::of(self.location.block, self.component)
    }
}

/// Immutable circuit description shared by all shots of one lattice size.
#[derive(Debug, Clone)]
pub struct CircuitSimulator {
    schedule: Schedule,
    lattice: Lattice,
    rounds: usize,
}

impl CircuitSimulator {
    pub fn new(d: usize, rounds: usize) -> Result<Self, SimError> {
        let schedule = build_schedule(d)?;
        Ok(Self {
            lattice: schedule.lattice(),
            schedule,
            rounds,
        })
    }

    pub fn from_params(params: &LatticeParams) -> Result<Self, SimError> {
        Self::new(params.d, params.rounds)
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn detectors_per_graph(&self) -> usize {
        self.lattice.d2() * (self.rounds + 1)
    }

    /// Draws the faulty locations of one shot.
    pub fn sample_faults(&self, noise: &NoiseParams) -> Vec<SampledFault> {
        let mut rng = noise.rng();
        let mut faults = Vec::new();
        self.sample_class(&mut rng, &Block::RATE_P, noise.p, &mut faults);
        self.sample_class(&mut rng, &Block::RATE_TWO_THIRDS, 2.0 * noise.p / 3.0, &mut faults);
        faults
    }

    fn sample_class(&self, rng: &mut ChaCha8Rng, blocks: &[Block], q: f64, out: &mut Vec<SampledFault>) {
        if q <= 0.0 {
            return;
        }
        let per_block = self.lattice.num_data() as u64;
        let per_round = per_block * blocks.len() as u64;
        let total = per_round * self.rounds as u64;
        let gap = Geometric::new(q).expect("0 < q < 1");
        let mut pos = gap.sample(rng);
        while pos < total {
            let round = pos / per_round;
            let rem = pos % per_round;
            let block = blocks[(rem / per_block) as usize];
            let location = Location {
                round: round as u32,
                block,
                index: (rem % per_block) as u32,
            };
            let component = rng.random_range(0..block.num_components());
            out.push(SampledFault { location, component });
            pos = pos.saturating_add(1).saturating_add(gap.sample(rng));
        }
    }

    /// Samples one shot by composing the sparse effect of each drawn fault.
    pub fn sample_shot(&self, noise: &NoiseParams) -> ShotRecord {
        let mut record = ShotRecord::empty(self.detectors_per_graph());
        self.sample_shot_into(noise, &mut record);
        record
    }

    /// As [`Self::sample_shot`], reusing `record`'s allocation.
    pub fn sample_shot_into(&self, noise: &NoiseParams, record: &mut ShotRecord) {
        record.clear();
        for fault in self.sample_faults(noise) {
            record.apply(&propagate(&self.schedule, &fault.location, fault.action()));
        }
    }

    /// Samples one shot by running the dense frame through every timestep.
    pub fn sample_shot_dense(&self, noise: &NoiseParams) -> ShotRecord {
        let faults: Vec<_> = self
            .sample_faults(noise)
            .into_iter()
            .map(|f| (f.location, f.action()))
            .collect();
        frame::simulate(&self.schedule, self.rounds, &faults)
    }

    /// Runs the full dense pipeline with exactly one fault applied.
    pub fn inject_fault(&self, site: &FaultSite) -> Result<ShotRecord, SimError> {
        self.check_site(site)?;
        Ok(frame::simulate(
            &self.schedule,
            self.rounds,
            &[(site.location, site.action())],
        ))
    }

    /// Runs the dense pipeline with an arbitrary set of faults.
    pub fn inject_faults(&self, sites: &[FaultSite]) -> Result<ShotRecord, SimError> {
        for site in sites {
            self.check_site(site)?;
        }
        let faults: Vec<_> = sites.iter().map(|s| (s.location, s.action())).collect();
        Ok(frame::simulate(&self.schedule, self.rounds, &faults))
    }

    /// Sparse effect of one fault, equal to the events of [`Self::inject_fault`].
    pub fn fault_effect(&self, site: &FaultSite) -> Result<FaultEffect, SimError> {
        self.check_site(site)?;
        Ok(propagate(&self.schedule, &site.location, site.action()))
    }

    fn check_site(&self, site: &FaultSite) -> Result<(), SimError> {
        let loc = site.location;
        let valid = (loc.round as usize) < self.rounds
            && site.round == loc.round
            && (loc.index as usize) < self.lattice.num_data()
            && site.component < loc.block.num_components()
            && site.step == loc.block.step()
            && !matches!(loc.block, Block::Cnot(l) if l >= 4);
        if valid {
            Ok(())
        } else {
            Err(SimError::InvalidSite(loc))
        }
    }
}

/// One-off shot sampling; prefer a shared [`CircuitSimulator`] in loops.
pub fn sample_shot(params: &LatticeParams, noise: &NoiseParams) -> Result<ShotRecord, SimError> {
    Ok(CircuitSimulator::from_params(params)?.sample_shot(noise))
}

/// One-off deterministic injection of a single fault.
pub fn inject_fault(params: &LatticeParams, site: &FaultSite) -> Result<ShotRecord, SimError> {
    CircuitSimulator::from_params(params)?.inject_fault(site)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: usize, rounds: usize) -> LatticeParams {
        LatticeParams::new(d, rounds, 0.003).unwrap()
    }

    fn site(round: u32, block: Block, index: u32, component: u8) -> FaultSite {
        FaultSite {
            round,
            step: block.step(),
            location: Location { round, block, index },
            component,
            probability: 0.001,
        }
    }

    #[test]
    fn zero_noise_gives_empty_record() {
        let sim = CircuitSimulator::new(5, 5).unwrap();
        for shot in 0..20 {
            let noise = NoiseParams::new(0.0, 7, shot).unwrap();
            assert!(sim.sample_shot(&noise).is_trivial());
            assert!(sim.sample_shot_dense(&noise).is_trivial());
        }
    }

    #[test]
    fn measurement_flip_gives_timelike_pair() {
        let sim = CircuitSimulator::new(3, 3).unwrap();
        // Z-check ancillas occupy indices d²..2d² of the measure block
        let s = site(1, Block::Measure, 9 + 4, 0);
        let rec = sim.inject_fault(&s).unwrap();
        assert_eq!(rec.primal_events(), vec![9 + 4, 18 + 4]);
        assert!(rec.dual_events().is_empty());
        assert_eq!(rec.true_logical, 0);
    }

    #[test]
    fn last_round_idle_x_hits_terminal_layer() {
        let p = params(5, 5);
        let sim = CircuitSimulator::from_params(&p).unwrap();
        let lat = sim.lattice();
        let q = lat.horizontal(2, 3);
        let rec = sim.inject_fault(&site(4, Block::IdleAfterMeasure, q, 0)).unwrap();
        let base = 5 * 25;
        let mut want: Vec<u32> = lat.plaquettes_of(q).iter().map(|&s| (base + s) as u32).collect();
        want.sort();
        assert_eq!(rec.primal_events(), want);
        assert!(rec.dual_events().is_empty());
    }

    #[test]
    fn prep_flip_is_timelike() {
        let sim = CircuitSimulator::new(3, 3).unwrap();
        // X-check ancilla at site 2 in round 0
        let rec = sim.inject_fault(&site(0, Block::Prepare, 2, 0)).unwrap();
        assert_eq!(rec.dual_events(), vec![2, 9 + 2]);
        assert!(rec.primal_events().is_empty());
    }

    #[test]
    fn y_idle_excites_both_graphs() {
        let sim = CircuitSimulator::new(3, 2).unwrap();
        let rec = sim.inject_fault(&site(0, Block::IdleAfterPrepare, 5, 1)).unwrap();
        assert_eq!(rec.primal_events().len(), 2);
        assert_eq!(rec.dual_events().len(), 2);
    }

    #[test]
    fn rejects_invalid_sites() {
        let sim = CircuitSimulator::new(3, 2).unwrap();
        assert!(sim.inject_fault(&site(2, Block::Measure, 0, 0)).is_err());
        assert!(sim.inject_fault(&site(0, Block::Measure, 18, 0)).is_err());
        assert!(sim.inject_fault(&site(0, Block::Cnot(4), 0, 0)).is_err());
        assert!(sim.inject_fault(&site(0, Block::Cnot(1), 0, 15)).is_err());
    }

    #[test]
    fn sparse_and_dense_agree_on_every_single_fault() {
        for (d, rounds) in [(3, 1), (3, 3), (5, 2)] {
            let p = params(d, rounds);
            let sim = CircuitSimulator::from_params(&p).unwrap();
            for s in enumerate_fault_sites(&p) {
                let dense = sim.inject_fault(&s).unwrap();
                let mut sparse = ShotRecord::empty(sim.detectors_per_graph());
                sparse.apply(&sim.fault_effect(&s).unwrap());
                assert_eq!(dense, sparse, "site {s:?}");
            }
        }
    }

    #[test]
    fn sampled_shots_match_dense_replay() {
        let sim = CircuitSimulator::new(5, 5).unwrap();
        for shot in 0..200 {
            let noise = NoiseParams::new(0.01, 42, shot).unwrap();
            assert_eq!(sim.sample_shot(&noise), sim.sample_shot_dense(&noise));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let sim = CircuitSimulator::new(5, 5).unwrap();
        let noise = NoiseParams::new(0.01, 3, 17).unwrap();
        assert_eq!(sim.sample_shot(&noise), sim.sample_shot(&noise));
        let other = NoiseParams::new(0.01, 3, 18).unwrap();
        assert_ne!(sim.sample_faults(&noise), sim.sample_faults(&other));
    }

    #[test]
    fn event_counts_are_even() {
        let sim = CircuitSimulator::new(5, 5).unwrap();
        for shot in 0..300 {
            let rec = sim.sample_shot(&NoiseParams::new(0.02, 1, shot).unwrap());
            assert_eq!(rec.events_primal.count_ones(..) % 2, 0);
            assert_eq!(rec.events_dual.count_ones(..) % 2, 0);
        }
    }

    #[test]
    fn cnot_fault_rate_is_calibrated() {
        // 10^6 shots at d=3 with one round: 72 CNOT locations per shot.
        let sim = CircuitSimulator::new(3, 1).unwrap();
        let p = 0.003;
        let shots = 1_000_000u64;
        let mut flipped = 0u64;
        for shot in 0..shots {
            let noise = NoiseParams::new(p, 99, shot).unwrap();
            flipped += sim
                .sample_faults(&noise)
                .iter()
                .filter(|f| matches!(f.location.block, Block::Cnot(_)))
                .count() as u64;
        }
        let n = (shots * 72) as f64;
        let rate = flipped as f64 / n;
        let sigma = (p * (1.0 - p) / n).sqrt();
        assert!((rate - p).abs() < 3.0 * sigma, "rate {rate} vs {p} (sigma {sigma})");
    }

    #[test]
    fn rejects_bad_noise() {
        assert!(NoiseParams::new(0.5, 0, 0).is_err());
        assert!(NoiseParams::new(-0.1, 0, 0).is_err());
    }
}
