//! Product-factor engine for cavity trajectories from vacuum.
//!
//! Gain, loss and the polarization swap never couple the pair
//! `(a_h, b_v)` to the pair `(a_v, b_h)` beyond exchanging them, so a
//! trajectory started in vacuum stays a product of two two-mode density
//! operators. Each factor is block diagonal in its pair charge `x − y`:
//! gain conserves the charge and every loss Kraus operator shifts all kets
//! of a branch by the same amount.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::fock::loss_amplitude;
use crate::pdc::{GainPropagator, PairModes};

fn base(charge: i64) -> (u32, u32) {
    if charge >= 0 {
        (charge as u32, 0)
    } else {
        (0, (-charge) as u32)
    }
}

/// Two-mode density operator, photons per factor capped at `2 n_max`.
#[derive(Debug, Clone)]
pub(crate) struct PairFactor {
    n_max: u32,
    blocks: BTreeMap<i64, DMatrix<Complex64>>,
}

impl PairFactor {
    pub(crate) fn vacuum(n_max: u32) -> Self {
        let mut f = PairFactor {
            n_max,
            blocks: BTreeMap::new(),
        };
        let mut b = f.empty_block(0);
        b[(0, 0)] = Complex64::new(1.0, 0.0);
        f.blocks.insert(0, b);
        f
    }

    /// Rungs of the charge ladder inside the cutoff.
    fn rungs(&self, charge: i64) -> usize {
        let c = charge.unsigned_abs() as u32;
        if c > 2 * self.n_max {
            0
        } else {
            ((2 * self.n_max - c) / 2) as usize + 1
        }
    }

    fn empty_block(&self, charge: i64) -> DMatrix<Complex64> {
        let n = self.rungs(charge);
        DMatrix::zeros(n, n)
    }

    pub(crate) fn trace(&self) -> f64 {
        self.blocks.values().map(|b| b.trace().re).sum()
    }

    /// Unnormalized photon-number marginals `(P(x), P(y))`.
    pub(crate) fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let len = 2 * self.n_max as usize + 1;
        let (mut px, mut py) = (vec![0.0; len], vec![0.0; len]);
        for (&charge, b) in &self.blocks {
            let (bx, by) = base(charge);
            for t in 0..b.nrows() {
                let p = b[(t, t)].re;
                px[bx as usize + t] += p;
                py[by as usize + t] += p;
            }
        }
        (px, py)
    }

    /// Unnormalized `Σ ρ_kk (x + y)`.
    pub(crate) fn photon_moment(&self) -> f64 {
        let (px, py) = self.marginals();
        px.iter().chain(&py).enumerate().map(|(i, p)| (i % px.len()) as f64 * p).sum()
    }

    /// `ρ → U ρ U†` for the squeezer on `pair`; weight leaving the cutoff is
    /// dropped from the trace.
    pub(crate) fn apply_gain(&mut self, pair: PairModes, gain: &mut GainCache) -> Result<()> {
        for (&charge, block) in self.blocks.iter_mut() {
            let u = gain.block(pair, charge, self.n_max)?;
            *block = u * &*block * u.adjoint();
        }
        Ok(())
    }

    /// Per-photon survival `eta` on both modes.
    pub(crate) fn apply_loss(&mut self, eta: f64) {
        if eta == 1.0 {
            return;
        }
        let top = 2 * self.n_max;
        let table: Vec<Vec<f64>> = (0..=top).map(|n| (0..=n).map(|k| loss_amplitude(n, k, eta)).collect()).collect();
        let amp = |n: u32, k: u32| table[n as usize][k as usize];
        let offset = i64::from(top);
        let mut out: Vec<Option<DMatrix<Complex64>>> = vec![None; 2 * top as usize + 1];
        for (&charge, block) in &self.blocks {
            let (bx, by) = base(charge);
            let n = block.nrows();
            for r in 0..n {
                for c in 0..n {
                    let v = block[(r, c)];
                    if v.norm_sqr() == 0.0 {
                        continue;
                    }
                    let (x, y) = (bx + r as u32, by + r as u32);
                    let (x2, y2) = (bx + c as u32, by + c as u32);
                    for k1 in 0..=x.min(x2) {
                        let f1 = amp(x, k1) * amp(x2, k1);
                        if f1 == 0.0 {
                            continue;
                        }
                        for k2 in 0..=y.min(y2) {
                            let f = f1 * amp(y, k2) * amp(y2, k2);
                            if f == 0.0 {
                                continue;
                            }
                            let target = charge - i64::from(k1) + i64::from(k2);
                            let rr = (x - k1).min(y - k2) as usize;
                            let cc = (x2 - k1).min(y2 - k2) as usize;
                            let dst = out[(target + offset) as usize].get_or_insert_with(|| self.empty_block(target));
                            dst[(rr, cc)] += v * f;
                        }
                    }
                }
            }
        }
        self.blocks = out
            .into_iter()
            .enumerate()
            .filter_map(|(i, b)| b.map(|b| (i as i64 - offset, b)))
            .collect();
    }
}

/// Truncated gain blocks keyed by pair, charge and pump phase.
#[derive(Debug, Default)]
pub(crate) struct GainCache {
    tau: f64,
    propagators: HashMap<u64, GainPropagator>,
    phase: f64,
    blocks: HashMap<(PairModes, i64, u64), DMatrix<Complex64>>,
}

impl GainCache {
    pub(crate) fn new(tau: f64) -> Self {
        GainCache {
            tau,
            ..Default::default()
        }
    }

    pub(crate) fn set_phase(&mut self, phase: f64) {
        self.phase = phase.rem_euclid(std::f64::consts::TAU);
    }

    fn block(&mut self, pair: PairModes, charge: i64, n_max: u32) -> Result<&DMatrix<Complex64>> {
        let key = (pair, charge, self.phase.to_bits());
        if !self.blocks.contains_key(&key) {
            let (tau, phase) = (self.tau, self.phase);
            let prop = self
                .propagators
                .entry(phase.to_bits())
                .or_insert_with(|| GainPropagator::new(tau, phase));
            let rungs = {
                let c = charge.unsigned_abs() as u32;
                ((2 * n_max - c) / 2) as usize + 1
            };
            let u = prop.truncated_block(pair, charge, rungs)?;
            self.blocks.insert(key, u);
        }
        Ok(&self.blocks[&key])
    }
}
