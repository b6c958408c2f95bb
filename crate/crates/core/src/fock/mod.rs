//! Pure and mixed states on the truncated four-mode Fock space.
//!
//! The four modes are two spatial modes `a`, `b`, each carrying horizontal
//! and vertical polarization. A basis ket `|i,j;k,l⟩` holds `i` photons in
//! `a_h`, `j` in `a_v`, `k` in `b_h` and `l` in `b_v`.
//!
//! Truncation is by total pair number: a state with cutoff `n_max` keeps
//! kets with at most `2 * n_max` photons. Weight pushed past the cutoff is
//! accumulated in [`FockState::norm_deficit`] instead of being dropped.

mod channels;
mod ensemble;
mod schmidt;
mod state;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use channels::{apply_loss, apply_loss_ensemble, measure_photon, PolarizationBasis, PolarizationOutcome};
pub(crate) use channels::loss_amplitude;
pub use ensemble::StateEnsemble;
pub use schmidt::{schmidt_coefficients, schmidt_rank};
pub use state::FockState;

/// Amplitudes with magnitude below this are dropped from the sparse map.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// One of the four optical modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    AH,
    AV,
    BH,
    BV,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::AH, Mode::AV, Mode::BH, Mode::BV];

    fn index(self) -> usize {
        match self {
            Mode::AH => 0,
            Mode::AV => 1,
            Mode::BH => 2,
            Mode::BV => 3,
        }
    }

    pub fn group(self) -> ModeGroup {
        match self {
            Mode::AH | Mode::AV => ModeGroup::A,
            Mode::BH | Mode::BV => ModeGroup::B,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::AH => "a_h",
            Mode::AV => "a_v",
            Mode::BH => "b_h",
            Mode::BV => "b_v",
        };
        f.write_str(s)
    }
}

/// Spatial mode group: the two polarization modes sharing one beam path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeGroup {
    A,
    B,
}

impl ModeGroup {
    /// (horizontal, vertical) modes of the group.
    pub fn modes(self) -> (Mode, Mode) {
        match self {
            ModeGroup::A => (Mode::AH, Mode::AV),
            ModeGroup::B => (Mode::BH, Mode::BV),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeGroup::A => "a",
            ModeGroup::B => "b",
        }
    }
}

/// Photon counts `(a_h, a_v, b_h, b_v)` of a basis ket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct Occupation([u32; 4]);

impl Occupation {
    pub const VACUUM: Occupation = Occupation([0; 4]);

    pub const fn new(ah: u32, av: u32, bh: u32, bv: u32) -> Self {
        Occupation([ah, av, bh, bv])
    }

    pub fn get(&self, mode: Mode) -> u32 {
        self.0[mode.index()]
    }

    pub fn with(mut self, mode: Mode, count: u32) -> Self {
        self.0[mode.index()] = count;
        self
    }

    pub fn counts(&self) -> [u32; 4] {
        self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn in_group(&self, group: ModeGroup) -> u32 {
        let (h, v) = group.modes();
        self.get(h) + self.get(v)
    }

    /// Labels `(a_h - b_v, a_v - b_h)`, conserved by pair creation and
    /// annihilation.
    pub fn pair_charges(&self) -> (i64, i64) {
        let [i, j, k, l] = self.0.map(i64::from);
        (i - l, j - k)
    }

    /// Occupation with horizontal and vertical exchanged in both groups.
    pub fn swapped_polarization(&self) -> Self {
        let [i, j, k, l] = self.0;
        Occupation([j, i, l, k])
    }
}

impl From<[u32; 4]> for Occupation {
    fn from(c: [u32; 4]) -> Self {
        Occupation(c)
    }
}

impl From<Occupation> for [u32; 4] {
    fn from(o: Occupation) -> Self {
        o.0
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [i, j, k, l] = self.0;
        write!(f, "|{i},{j};{k},{l}⟩")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupation_accessors() {
        let o = Occupation::new(2, 0, 1, 3);
        assert_eq!(o.get(Mode::BV), 3);
        assert_eq!(o.total(), 6);
        assert_eq!(o.in_group(ModeGroup::A), 2);
        assert_eq!(o.in_group(ModeGroup::B), 4);
        assert_eq!(o.pair_charges(), (-1, -1));
        assert_eq!(o.swapped_polarization(), Occupation::new(0, 2, 3, 1));
        assert_eq!(o.to_string(), "|2,0;1,3⟩");
    }
}
