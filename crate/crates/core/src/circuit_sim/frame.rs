//! Dense Pauli-frame propagation through the extraction circuit.

use crate::lattice::Lattice;

use super::fault::{Block, FaultAction, Location, Pauli};
use super::schedule::{Schedule, Timestep};
use super::ShotRecord;

/// Accumulated X and Z errors, one bit each per qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliFrame {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
}

impl PauliFrame {
    pub fn new(lattice: &Lattice) -> Self {
        let n = lattice.num_qubits();
        Self {
            x: vec![false; n],
            z: vec![false; n],
        }
    }

    #[inline]
    pub fn apply(&mut self, q: u32, pauli: Pauli) {
        let q = q as usize;
        self.x[q] ^= pauli.has_x();
        self.z[q] ^= pauli.has_z();
    }

    pub fn is_clean(&self) -> bool {
        !self.x.iter().chain(&self.z).any(|&b| b)
    }
}

/// Outcome flips of one measurement step, indexed by check site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcomes {
    /// Vertex (X-basis) checks.
    pub x_checks: Vec<bool>,
    /// Plaquette (Z-basis) checks.
    pub z_checks: Vec<bool>,
}

/// Noiseless propagation through one timestep. Measurement returns one
/// outcome flip per ancilla and then clears the ancilla bits.
pub fn step_frame(frame: &mut PauliFrame, schedule: &Schedule, step: &Timestep) -> Option<Outcomes> {
    let lat = schedule.lattice();
    let d2 = lat.d2();
    let ancillas = 2 * d2..4 * d2;
    match step {
        Timestep::PrepareAncillas => {
            frame.x[ancillas.clone()].fill(false);
            frame.z[ancillas].fill(false);
            None
        }
        Timestep::Cnot { pairs, .. } => {
            for &(c, t) in pairs {
                let (c, t) = (c as usize, t as usize);
                frame.x[t] ^= frame.x[c];
                frame.z[c] ^= frame.z[t];
            }
            None
        }
        Timestep::MeasureAncillas => {
            let x_checks = frame.z[2 * d2..3 * d2].to_vec();
            let z_checks = frame.x[3 * d2..4 * d2].to_vec();
            frame.x[ancillas.clone()].fill(false);
            frame.z[ancillas].fill(false);
            Some(Outcomes { x_checks, z_checks })
        }
    }
}

/// Runs `rounds` noisy rounds plus one perfect round with the given faults
/// applied deterministically.
pub(super) fn simulate(schedule: &Schedule, rounds: usize, faults: &[(Location, FaultAction)]) -> ShotRecord {
    let lat = schedule.lattice();
    let d2 = lat.d2();
    let mut ordered: Vec<&(Location, FaultAction)> = faults.iter().collect();
    ordered.sort_by_key(|(loc, _)| (loc.round, loc.block.chronological_index(), loc.index));
    let mut next = ordered.into_iter().peekable();

    let mut frame = PauliFrame::new(&lat);
    let mut prev_primal = vec![false; d2];
    let mut prev_dual = vec![false; d2];
    let mut record = ShotRecord::empty(d2 * (rounds + 1));

    for round in 0..=rounds as u32 {
        for (s, step) in schedule.steps().iter().enumerate() {
            let mut outcomes = step_frame(&mut frame, schedule, step);
            let blocks: &[Block] = match s {
                0 => &[Block::Prepare, Block::IdleAfterPrepare],
                1..=4 => &[Block::Cnot(s as u8 - 1)],
                _ => &[Block::Measure, Block::IdleAfterMeasure],
            };
            for &block in blocks {
                while let Some((loc, action)) = next.next_if(|(loc, _)| loc.round == round && loc.block == block) {
                    let (a, b) = loc.qubits(&lat, schedule);
                    match *action {
                        FaultAction::Single(pauli) => frame.apply(a, pauli),
                        FaultAction::Pair(pa, pb) => {
                            frame.apply(a, pa);
                            frame.apply(b, pb);
                        }
                        FaultAction::PrepFlip => {
                            let pauli = if lat.is_x_ancilla(a) { Pauli::Z } else { Pauli::X };
                            frame.apply(a, pauli);
                        }
                        FaultAction::MeasFlip => {
                            let out = outcomes.as_mut().expect("measurement step");
                            let site = lat.ancilla_site(a);
                            if lat.is_x_ancilla(a) {
                                out.x_checks[site] ^= true;
                            } else {
                                out.z_checks[site] ^= true;
                            }
                        }
                    }
                }
            }
            if let Some(out) = outcomes {
                let base = round as usize * d2;
                for site in 0..d2 {
                    if out.z_checks[site] != prev_primal[site] {
                        record.events_primal.insert(base + site);
                    }
                    if out.x_checks[site] != prev_dual[site] {
                        record.events_dual.insert(base + site);
                    }
                }
                prev_primal = out.z_checks;
                prev_dual = out.x_checks;
            }
        }
    }

    record.true_logical = data_logical(&lat, &frame);
    record
}

pub(super) fn data_logical(lat: &Lattice, frame: &PauliFrame) -> u8 {
    let mut bits = 0;
    for q in 0..lat.num_data() as u32 {
        if frame.x[q as usize] {
            bits ^= lat.x_logical(q);
        }
        if frame.z[q as usize] {
            bits ^= lat.z_logical(q);
        }
    }
    bits
}
