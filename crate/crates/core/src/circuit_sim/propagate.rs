//! Sparse propagation of a single fault.
//!
//! A fault injected during round `r` can only change the outcomes of round `r`
//! (whatever reaches an ancilla before it is measured) and leaves a data error
//! `D` behind. Every later round measures exactly the syndrome of `D`, so the
//! fault's detection events live in layers `r` and `r + 1` only:
//! `events(r) = A` and `events(r + 1) = A xor syndrome(D)`.

use smallvec::SmallVec;

use crate::lattice::Lattice;

use super::fault::{Block, FaultAction, Location, Pauli};
use super::schedule::Schedule;

pub type DetectorList = SmallVec<[u32; 4]>;

/// Detection events and logical parities caused by one fault in isolation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaultEffect {
    /// Sorted primal detector indices.
    pub primal: DetectorList,
    /// Sorted dual detector indices.
    pub dual: DetectorList,
    pub logical: u8,
}

impl FaultEffect {
    pub fn is_trivial(&self) -> bool {
        self.primal.is_empty() && self.dual.is_empty() && self.logical == 0
    }

    /// Symmetric difference; effects compose linearly.
    pub fn xor(&self, other: &FaultEffect) -> FaultEffect {
        FaultEffect {
            primal: sym_diff(&self.primal, &other.primal),
            dual: sym_diff(&self.dual, &other.dual),
            logical: self.logical ^ other.logical,
        }
    }
}

fn sym_diff(a: &[u32], b: &[u32]) -> DetectorList {
    let mut out = DetectorList::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Sorts and cancels repeated entries pairwise.
fn reduce(list: &mut DetectorList) {
    list.sort_unstable();
    let mut out = DetectorList::new();
    for &x in list.iter() {
        if out.last() == Some(&x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    *list = out;
}

#[derive(Clone, Copy)]
struct Entry {
    qubit: u32,
    x: bool,
    z: bool,
}

#[derive(Default)]
struct SparseFrame {
    entries: SmallVec<[Entry; 8]>,
}

impl SparseFrame {
    fn toggle(&mut self, qubit: u32, x: bool, z: bool) {
        if !x && !z {
            return;
        }
        if let Some(e) = self.entries.iter_mut().find(|e| e.qubit == qubit) {
            e.x ^= x;
            e.z ^= z;
        } else {
            self.entries.push(Entry { qubit, x, z });
        }
    }

    fn apply(&mut self, qubit: u32, pauli: Pauli) {
        self.toggle(qubit, pauli.has_x(), pauli.has_z());
    }

    fn cnot_layer(&mut self, schedule: &Schedule, layer: usize) {
        // Gate updates read x of the control and z of the target; neither is
        // written by the same gate, so a single pass is exact.
        let n = self.entries.len();
        for k in 0..n {
            let Entry { qubit, x, z } = self.entries[k];
            let (partner, is_control) = schedule.partner(layer, qubit);
            if is_control && x {
                self.toggle(partner, true, false);
            } else if !is_control && z {
                self.toggle(partner, false, true);
            }
        }
    }
}

/// Propagates `action` applied at `loc` to its detection events and the
/// logical parities of the data error it leaves behind.
pub fn propagate(schedule: &Schedule, loc: &Location, action: FaultAction) -> FaultEffect {
    let lat = schedule.lattice();
    let d2 = lat.d2() as u32;
    let (a, b) = loc.qubits(&lat, schedule);
    let mut frame = SparseFrame::default();
    // round-r outcome flips
    let mut flips_primal = DetectorList::new();
    let mut flips_dual = DetectorList::new();

    match action {
        FaultAction::Single(p) => frame.apply(a, p),
        FaultAction::Pair(pa, pb) => {
            frame.apply(a, pa);
            frame.apply(b, pb);
        }
        FaultAction::PrepFlip => {
            let p = if lat.is_x_ancilla(a) { Pauli::Z } else { Pauli::X };
            frame.apply(a, p);
        }
        FaultAction::MeasFlip => {
            let site = lat.ancilla_site(a) as u32;
            if lat.is_x_ancilla(a) {
                flips_dual.push(site);
            } else {
                flips_primal.push(site);
            }
        }
    }

    let first_layer = match loc.block {
        Block::Prepare | Block::IdleAfterPrepare => Some(0),
        Block::Cnot(l) => Some(l as usize + 1),
        Block::Measure | Block::IdleAfterMeasure => None,
    };
    if let Some(first) = first_layer {
        for layer in first..4 {
            frame.cnot_layer(schedule, layer);
        }
        for e in &frame.entries {
            if lat.is_x_ancilla(e.qubit) && e.z {
                flips_dual.push(lat.ancilla_site(e.qubit) as u32);
            } else if lat.is_z_ancilla(e.qubit) && e.x {
                flips_primal.push(lat.ancilla_site(e.qubit) as u32);
            }
        }
    }

    let mut effect = FaultEffect::default();
    let mut syn_primal = DetectorList::new();
    let mut syn_dual = DetectorList::new();
    for e in frame.entries.iter().filter(|e| lat.is_data(e.qubit)) {
        if e.x {
            syn_primal.extend(lat.plaquettes_of(e.qubit).map(|s| s as u32));
            effect.logical ^= lat.x_logical(e.qubit);
        }
        if e.z {
            syn_dual.extend(lat.vertices_of(e.qubit).map(|s| s as u32));
            effect.logical ^= lat.z_logical(e.qubit);
        }
    }

    let base = loc.round * d2;
    effect.primal = layered(&lat, base, flips_primal, syn_primal);
    effect.dual = layered(&lat, base, flips_dual, syn_dual);
    effect
}

fn layered(lat: &Lattice, base: u32, mut flips: DetectorList, syndrome: DetectorList) -> DetectorList {
    let d2 = lat.d2() as u32;
    reduce(&mut flips);
    let mut next: DetectorList = flips.iter().chain(syndrome.iter()).copied().collect();
    reduce(&mut next);
    let mut out: DetectorList = flips.iter().map(|&s| base + s).collect();
    out.extend(next.iter().map(|&s| base + d2 + s));
    out
}
