//! Toric-code lattice geometry and qubit indexing.
//!
//! Data qubits live on the edges of a `d x d` torus. Horizontal edge `(i, j)`
//! joins vertex `(i, j)` to vertex `(i, j + 1)`; vertical edge `(i, j)` joins
//! vertex `(i, j)` to vertex `(i + 1, j)`. Plaquette `(i, j)` is bounded by
//! horizontal edges `(i, j)`, `(i + 1, j)` and vertical edges `(i, j)`,
//! `(i, j + 1)`. X-checks sit on vertices, Z-checks on plaquettes.
//!
//! Qubit index layout (all `u32`):
//!
//! ```text
//! [0, d²)      horizontal data edges   i*d + j
//! [d², 2d²)    vertical data edges     d² + i*d + j
//! [2d², 3d²)   X-check ancillas        2d² + i*d + j   (vertex (i, j))
//! [3d², 4d²)   Z-check ancillas        3d² + i*d + j   (plaquette (i, j))
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("code distance must be odd and at least 3, got {0}")]
    Distance(usize),
    #[error("at least one noisy round is required")]
    Rounds,
    #[error("physical error rate must lie in (0, 0.5), got {0}")]
    Probability(f64),
}

/// Size and noise strength of one toric-code memory instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub d: usize,
    pub rounds: usize,
    pub p: f64,
}

impl LatticeParams {
    pub fn new(d: usize, rounds: usize, p: f64) -> Result<Self, ParamError> {
        let params = Self { d, rounds, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.d < 3 || self.d.is_multiple_of(2) {
            return Err(ParamError::Distance(self.d));
        }
        if self.rounds == 0 {
            return Err(ParamError::Rounds);
        }
        if !(self.p > 0.0 && self.p < 0.5) {
            return Err(ParamError::Probability(self.p));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::new(self.d)
    }

    /// Detectors per decoder graph: one layer per noisy round plus the
    /// terminal perfect round.
    pub fn detectors_per_graph(&self) -> usize {
        self.d * self.d * (self.rounds + 1)
    }
}

/// Which type of check a detector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    /// Plaquette (Z-check) detectors, excited by X-type data errors.
    Primal,
    /// Vertex (X-check) detectors, excited by Z-type data errors.
    Dual,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Primal => "primal",
            GraphKind::Dual => "dual",
        }
    }
}

/// A space-time detector: layer `t` of check `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DetectorId {
    pub kind: GraphKind,
    pub t: usize,
    pub i: usize,
    pub j: usize,
}

/// Logical parity bits. Bits 0 and 1 track X-type errors, bits 2 and 3 track
/// Z-type errors.
pub mod logical {
    /// X on horizontal edges of row 0.
    pub const X_ROW: u8 = 1 << 0;
    /// X on vertical edges of column 0.
    pub const X_COL: u8 = 1 << 1;
    /// Z on horizontal edges of column 0.
    pub const Z_COL: u8 = 1 << 2;
    /// Z on vertical edges of row 0.
    pub const Z_ROW: u8 = 1 << 3;
    pub const X_MASK: u8 = X_ROW | X_COL;
    pub const Z_MASK: u8 = Z_COL | Z_ROW;
}

/// Index arithmetic on the `d x d` torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub d: usize,
}

impl Lattice {
    pub fn new(d: usize) -> Self {
        Self { d }
    }

    #[inline]
    pub fn d2(&self) -> usize {
        self.d * self.d
    }

    #[inline]
    pub fn num_data(&self) -> usize {
        2 * self.d2()
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        4 * self.d2()
    }

    #[inline]
    fn wrap(&self, x: isize) -> usize {
        x.rem_euclid(self.d as isize) as usize
    }

    #[inline]
    pub fn site(&self, i: isize, j: isize) -> usize {
        self.wrap(i) * self.d + self.wrap(j)
    }

    #[inline]
    pub fn horizontal(&self, i: isize, j: isize) -> u32 {
        self.site(i, j) as u32
    }

    #[inline]
    pub fn vertical(&self, i: isize, j: isize) -> u32 {
        (self.d2() + self.site(i, j)) as u32
    }

    #[inline]
    pub fn x_ancilla(&self, i: isize, j: isize) -> u32 {
        (2 * self.d2() + self.site(i, j)) as u32
    }

    #[inline]
    pub fn z_ancilla(&self, i: isize, j: isize) -> u32 {
        (3 * self.d2() + self.site(i, j)) as u32
    }

    #[inline]
    pub fn is_data(&self, q: u32) -> bool {
        (q as usize) < self.num_data()
    }

    #[inline]
    pub fn is_x_ancilla(&self, q: u32) -> bool {
        let q = q as usize;
        q >= 2 * self.d2() && q < 3 * self.d2()
    }

    #[inline]
    pub fn is_z_ancilla(&self, q: u32) -> bool {
        (q as usize) >= 3 * self.d2()
    }

    /// Check site `i*d + j` measured by an ancilla.
    #[inline]
    pub fn ancilla_site(&self, q: u32) -> usize {
        (q as usize) % self.d2()
    }

    /// The two plaquettes (Z-checks) containing a data qubit.
    pub fn plaquettes_of(&self, q: u32) -> [usize; 2] {
        let d2 = self.d2();
        let q = q as usize;
        let (i, j) = ((q % d2 / self.d) as isize, (q % self.d) as isize);
        if q < d2 {
            [self.site(i - 1, j), self.site(i, j)]
        } else {
            [self.site(i, j - 1), self.site(i, j)]
        }
    }

    /// The two vertices (X-checks) touching a data qubit.
    pub fn vertices_of(&self, q: u32) -> [usize; 2] {
        let d2 = self.d2();
        let q = q as usize;
        let (i, j) = ((q % d2 / self.d) as isize, (q % self.d) as isize);
        if q < d2 {
            [self.site(i, j), self.site(i, j + 1)]
        } else {
            [self.site(i, j), self.site(i + 1, j)]
        }
    }

    /// Logical parity bits flipped by an X error on data qubit `q`.
    #[inline]
    pub fn x_logical(&self, q: u32) -> u8 {
        let (i, j) = self.coords(q);
        if (q as usize) < self.d2() {
            if i == 0 {
                return logical::X_ROW;
            }
        } else if j == 0 {
            return logical::X_COL;
        }
        0
    }

    /// Logical parity bits flipped by a Z error on data qubit `q`.
    #[inline]
    pub fn z_logical(&self, q: u32) -> u8 {
        let (i, j) = self.coords(q);
        if (q as usize) < self.d2() {
            if j == 0 {
                return logical::Z_COL;
            }
        } else if i == 0 {
            return logical::Z_ROW;
        }
        0
    }

    #[inline]
    fn coords(&self, q: u32) -> (usize, usize) {
        let s = q as usize % self.d2();
        (s / self.d, s % self.d)
    }

    /// Detector coordinates for a flat index within one graph.
    pub fn detector(&self, kind: GraphKind, index: usize) -> DetectorId {
        let d2 = self.d2();
        let site = index % d2;
        DetectorId {
            kind,
            t: index / d2,
            i: site / self.d,
            j: site % self.d,
        }
    }

    pub fn detector_index(&self, id: &DetectorId) -> usize {
        id.t * self.d2() + id.i * self.d + id.j
    }

    /// Torus distance between two coordinates along one axis.
    pub fn axis_distance(&self, a: usize, b: usize) -> usize {
        let diff = a.abs_diff(b);
        diff.min(self.d - diff)
    }
}
