use thiserror::Error;

use crate::lattice::Lattice;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("distance must be at least 3, got {0}")]
    Distance(usize),
    #[error("qubit {qubit} used twice in CNOT layer {layer:?}")]
    QubitReused { layer: Direction, qubit: u32 },
}

/// Order in which each ancilla visits its four data neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    North,
    West,
    East,
    South,
}

impl Direction {
    pub const ORDER: [Direction; 4] = [Direction::North, Direction::West, Direction::East, Direction::South];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Timestep {
    PrepareAncillas,
    /// `(control, target)` pairs; X-check ancillas control, Z-check
    /// ancillas are targets.
    Cnot {
        direction: Direction,
        pairs: Vec<(u32, u32)>,
    },
    MeasureAncillas,
}

/// One round of syndrome extraction: prepare, four CNOT layers, measure.
#[derive(Debug, Clone)]
pub struct Schedule {
    lattice: Lattice,
    steps: Vec<Timestep>,
    /// `partner[layer][q]` is the CNOT partner of `q`; every qubit has one.
    partner: [Vec<u32>; 4],
    /// Whether `q` is the control of its CNOT in `layer`.
    control: [Vec<bool>; 4],
}

impl Schedule {
    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn steps(&self) -> &[Timestep] {
        &self.steps
    }

    pub fn cnot_pairs(&self, layer: usize) -> &[(u32, u32)] {
        match &self.steps[layer + 1] {
            Timestep::Cnot { pairs, .. } => pairs,
            _ => unreachable!("steps 1..=4 are CNOT layers"),
        }
    }

    /// Partner of `q` in CNOT `layer`, and whether `q` is the control.
    #[inline]
    pub fn partner(&self, layer: usize, q: u32) -> (u32, bool) {
        (self.partner[layer][q as usize], self.control[layer][q as usize])
    }
}

/// Builds the six-step extraction round for a `d x d` torus.
///
/// For the X-check at vertex `(i, j)` the data qubits in N, W, E, S order are
/// vertical `(i-1, j)`, horizontal `(i, j-1)`, horizontal `(i, j)`, vertical
/// `(i, j)`. For the Z-check at plaquette `(i, j)` they are horizontal `(i, j)`,
/// vertical `(i, j)`, vertical `(i, j+1)`, horizontal `(i+1, j)`.
pub fn build_schedule(d: usize) -> Result<Schedule, ScheduleError> {
    if d < 3 {
        return Err(ScheduleError::Distance(d));
    }
    let lat = Lattice::new(d);
    let n = lat.num_qubits();
    let mut steps = vec![Timestep::PrepareAncillas];
    let mut partner: [Vec<u32>; 4] = Default::default();
    let mut control: [Vec<bool>; 4] = Default::default();

    for (layer, &direction) in Direction::ORDER.iter().enumerate() {
        let mut pairs = Vec::with_capacity(lat.num_data());
        for i in 0..d as isize {
            for j in 0..d as isize {
                let data = match direction {
                    Direction::North => lat.vertical(i - 1, j),
                    Direction::West => lat.horizontal(i, j - 1),
                    Direction::East => lat.horizontal(i, j),
                    Direction::South => lat.vertical(i, j),
                };
                pairs.push((lat.x_ancilla(i, j), data));
            }
        }
        for i in 0..d as isize {
            for j in 0..d as isize {
                let data = match direction {
                    Direction::North => lat.horizontal(i, j),
                    Direction::West => lat.vertical(i, j),
                    Direction::East => lat.vertical(i, j + 1),
                    Direction::South => lat.horizontal(i + 1, j),
                };
                pairs.push((data, lat.z_ancilla(i, j)));
            }
        }

        let mut used = vec![u32::MAX; n];
        let mut is_control = vec![false; n];
        for &(c, t) in &pairs {
            for q in [c, t] {
                if used[q as usize] != u32::MAX {
                    return Err(ScheduleError::QubitReused {
                        layer: direction,
                        qubit: q,
                    });
                }
            }
            used[c as usize] = t;
            used[t as usize] = c;
            is_control[c as usize] = true;
        }
        partner[layer] = used;
        control[layer] = is_control;
        steps.push(Timestep::Cnot { direction, pairs });
    }
    steps.push(Timestep::MeasureAncillas);

    Ok(Schedule {
        lattice: lat,
        steps,
        partner,
        control,
    })
}
