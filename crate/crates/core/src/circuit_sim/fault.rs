//! Noisy locations of the extraction circuit and their fault components.

use crate::lattice::{Lattice, LatticeParams};

use super::schedule::Schedule;

/// Single-qubit Pauli in `(x, z)` bit form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// `0 = I, 1 = X, 2 = Y, 3 = Z`.
    pub fn from_code(code: u8) -> Self {
        match code & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Y,
            _ => Pauli::Z,
        }
    }

    #[inline]
    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    #[inline]
    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }
}

/// A group of same-kind noisy operations within a round, listed in
/// chronological order. Each block holds `2d²` locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Block {
    /// Ancilla preparation flips (step 1).
    Prepare,
    /// Data idle noise during the preparation step (step 1).
    IdleAfterPrepare,
    /// Two-qubit noise after CNOT layer 0..4 (steps 2..=5).
    Cnot(u8),
    /// Measurement outcome flips (step 6).
    Measure,
    /// Data idle noise during the measurement step (step 6).
    IdleAfterMeasure,
}

impl Block {
    pub const CHRONOLOGICAL: [Block; 8] = [
        Block::Prepare,
        Block::IdleAfterPrepare,
        Block::Cnot(0),
        Block::Cnot(1),
        Block::Cnot(2),
        Block::Cnot(3),
        Block::Measure,
        Block::IdleAfterMeasure,
    ];

    /// Blocks whose locations fail with probability `p`.
    pub const RATE_P: [Block; 6] = [
        Block::IdleAfterPrepare,
        Block::Cnot(0),
        Block::Cnot(1),
        Block::Cnot(2),
        Block::Cnot(3),
        Block::IdleAfterMeasure,
    ];

    /// Blocks whose locations fail with probability `2p/3`.
    pub const RATE_TWO_THIRDS: [Block; 2] = [Block::Prepare, Block::Measure];

    /// Circuit step `1..=6`.
    pub fn step(self) -> u8 {
        match self {
            Block::Prepare | Block::IdleAfterPrepare => 1,
            Block::Cnot(l) => 2 + l,
            Block::Measure | Block::IdleAfterMeasure => 6,
        }
    }

    pub fn chronological_index(self) -> usize {
        match self {
            Block::Prepare => 0,
            Block::IdleAfterPrepare => 1,
            Block::Cnot(l) => 2 + l as usize,
            Block::Measure => 6,
            Block::IdleAfterMeasure => 7,
        }
    }

    /// Number of mutually exclusive fault components at one location.
    pub fn num_components(self) -> u8 {
        match self {
            Block::IdleAfterPrepare | Block::IdleAfterMeasure => 3,
            Block::Cnot(_) => 15,
            Block::Prepare | Block::Measure => 1,
        }
    }

    /// Total probability that a location of this block faults.
    pub fn location_probability(self, p: f64) -> f64 {
        match self {
            Block::Prepare | Block::Measure => 2.0 * p / 3.0,
            _ => p,
        }
    }

    /// Probability of one particular component.
    pub fn component_probability(self, p: f64) -> f64 {
        self.location_probability(p) / f64::from(self.num_components())
    }
}

/// A noisy operation in the circuit: `(round, block, k)` with `k < 2d²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub round: u32,
    pub block: Block,
    pub index: u32,
}

impl Location {
    /// Qubits acted on by this location. For CNOT blocks the pair is
    /// `(control, target)`; otherwise the second entry repeats the first.
    pub fn qubits(&self, lattice: &Lattice, schedule: &Schedule) -> (u32, u32) {
        let d2 = lattice.d2() as u32;
        match self.block {
            Block::IdleAfterPrepare | Block::IdleAfterMeasure => (self.index, self.index),
            Block::Cnot(l) => schedule.cnot_pairs(l as usize)[self.index as usize],
            // first d² are X-check ancillas, then Z-check ancillas
            Block::Prepare | Block::Measure => (2 * d2 + self.index, 2 * d2 + self.index),
        }
    }
}

/// The Pauli (or flip) applied by one fault component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultAction {
    Single(Pauli),
    Pair(Pauli, Pauli),
    /// Preparation in the wrong eigenstate.
    PrepFlip,
    /// Recorded outcome flipped; frame untouched.
    MeasFlip,
}

impl FaultAction {
    pub fn of(block: Block, component: u8) -> Self {
        match block {
            Block::IdleAfterPrepare | Block::IdleAfterMeasure => FaultAction::Single(Pauli::from_code(component + 1)),
            // components 0..15 index the non-identity pairs 1..16
            Block::Cnot(_) => {
                let c = component + 1;
                FaultAction::Pair(Pauli::from_code(c >> 2), Pauli::from_code(c & 3))
            }
            Block::Prepare => FaultAction::PrepFlip,
            Block::Measure => FaultAction::MeasFlip,
        }
    }
}

/// One elementary fault component of one noisy location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSite {
    pub round: u32,
    pub step: u8,
    pub location: Location,
    pub component: u8,
    pub probability: f64,
}

impl FaultSite {
    pub fn action(&self) -> FaultAction {
        FaultAction::of(self.location.block, self.component)
    }
}

/// Every elementary fault component of the `rounds` noisy cycles. The terminal
/// perfect round contributes nothing.
pub fn enumerate_fault_sites(params: &LatticeParams) -> Vec<FaultSite> {
    let per_block = 2 * params.d * params.d;
    let mut sites = Vec::new();
    for round in 0..params.rounds as u32 {
        for block in Block::CHRONOLOGICAL {
            let probability = block.component_probability(params.p);
            for index in 0..per_block as u32 {
                for component in 0..block.num_components() {
                    sites.push(FaultSite {
                        round,
                        step: block.step(),
                        location: Location { round, block, index },
                        component,
                        probability,
                    });
                }
            }
        }
    }
    sites
}
