//! Exact gain unitary `exp(τ(e^{iφ}K† − e^{−iφ}K))` on arbitrary states.
//!
//! `K† = A† − B†` with `A† = a_h† b_v†` and `B† = a_v† b_h†`. The two
//! terms commute, so the unitary factors into two two-mode squeezers. Each
//! squeezer conserves the photon-number difference of its mode pair and acts
//! on a one-dimensional ladder of kets `|x+t, y+t⟩`. Each ladder block is
//! exponentiated through the eigendecomposition of its Hermitian generator
//! on a padded working ladder, well beyond the state cutoff, and the result
//! is truncated afterwards.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockState, Occupation};

/// Largest working ladder length before giving up.
const MAX_RUNGS: usize = 2048;

/// Boundary weight on the last working rung treated as converged.
const BOUNDARY_TOL: f64 = 1e-26;

/// One of the two commuting squeezers inside `K†`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairModes {
    /// `(a_h, b_v)`, created by `+a_h† b_v†`.
    Hv,
    /// `(a_v, b_h)`, created by `−a_v† b_h†`.
    Vh,
}

impl PairModes {
    /// Photon counts `(x, y)` of the pair in `occ`.
    fn counts(self, occ: &Occupation) -> (u32, u32) {
        let [i, j, k, l] = occ.counts();
        match self {
            PairModes::Hv => (i, l),
            PairModes::Vh => (j, k),
        }
    }

    fn with_counts(self, occ: &Occupation, x: u32, y: u32) -> Occupation {
        let [i, j, k, l] = occ.counts();
        match self {
            PairModes::Hv => Occupation::new(x, j, k, y),
            PairModes::Vh => Occupation::new(i, x, y, l),
        }
    }

    fn sign(self) -> f64 {
        match self {
            PairModes::Hv => 1.0,
            PairModes::Vh => -1.0,
        }
    }
}

/// Ladder kets are `(t + lo_x, t + lo_y)` for rung `t`.
fn ladder_base(charge: i64) -> (u32, u32) {
    if charge >= 0 {
        (charge as u32, 0)
    } else {
        (0, (-charge) as u32)
    }
}

#[derive(Debug, Clone)]
pub struct GainPropagator {
    tau: f64,
    phi: f64,
    cache: HashMap<(PairModes, i64, usize), DMatrix<Complex64>>,
}

impl GainPropagator {
    pub fn new(tau: f64, phi: f64) -> Self {
        GainPropagator {
            tau,
            phi,
            cache: HashMap::new(),
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Initial padding in rungs beyond the highest occupied rung.
    fn initial_padding(&self) -> usize {
        let r2 = self.tau.tanh().powi(2);
        if r2 <= 1e-300 {
            return 8;
        }
        let rungs = ((1e-32f64).ln() / r2.ln()).ceil();
        (rungs as usize).clamp(16, MAX_RUNGS)
    }

    /// `exp(g P† − g* P)` on a ladder of `rungs` kets.
    fn ladder_unitary(&mut self, pair: PairModes, charge: i64, rungs: usize) -> &DMatrix<Complex64> {
        let (tau, phi) = (self.tau, self.phi);
        self.cache.entry((pair, charge, rungs)).or_insert_with(|| {
            let g = Complex64::from_polar(pair.sign() * tau, phi);
            let (bx, by) = ladder_base(charge);
            // H = i G is Hermitian and tridiagonal. With D = diag(e^{i t α}),
            // α = arg g + π/2, D† H D is real symmetric with off-diagonal
            // |g| √(xy), so exp(G) = D V exp(−iΛ) Vᵀ D†.
            let mut h = DMatrix::<f64>::zeros(rungs, rungs);
            for t in 0..rungs.saturating_sub(1) {
                let x = f64::from(bx + t as u32 + 1);
                let y = f64::from(by + t as u32 + 1);
                let elem = g.norm() * (x * y).sqrt();
                h[(t + 1, t)] = elem;
                h[(t, t + 1)] = elem;
            }
            let alpha = g.arg() + std::f64::consts::FRAC_PI_2;
            let eig = SymmetricEigen::new(h);
            let v = eig.eigenvectors.map(|e| Complex64::new(e, 0.0));
            let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l)));
            let mut u = &v * phases * v.transpose();
            for r in 0..rungs {
                for c in 0..rungs {
                    u[(r, c)] *= Complex64::from_polar(1.0, (r as f64 - c as f64) * alpha);
                }
            }
            u
        })
    }

    /// Leading `rungs × rungs` block of one squeezer on a charge ladder,
    /// i.e. the unitary followed by truncation to the first `rungs` kets.
    pub(crate) fn truncated_block(&mut self, pair: PairModes, charge: i64, rungs: usize) -> Result<DMatrix<Complex64>> {
        let top = rungs.saturating_sub(1);
        let mut pad = self.initial_padding();
        loop {
            let work = (top + 1 + pad).div_ceil(16) * 16;
            if work > MAX_RUNGS {
                return Err(Error::TruncationOverflow {
                    context: format!("gain propagator ladder needs more than {MAX_RUNGS} rungs"),
                    tail: f64::NAN,
                    tol: BOUNDARY_TOL,
                });
            }
            let u = self.ladder_unitary(pair, charge, work);
            if u[(work - 1, top)].norm_sqr() > BOUNDARY_TOL {
                pad *= 2;
                continue;
            }
            return Ok(u.view((0, 0), (rungs, rungs)).into_owned());
        }
    }

    /// Applies one pair's squeezer to raw amplitudes without truncation.
    fn apply_pair_raw(
        &mut self,
        pair: PairModes,
        input: &BTreeMap<Occupation, Complex64>,
    ) -> Result<BTreeMap<Occupation, Complex64>> {
        // Highest occupied rung per charge ladder.
        let mut top: BTreeMap<i64, usize> = BTreeMap::new();
        for occ in input.keys() {
            let (x, y) = pair.counts(occ);
            let rung = x.min(y) as usize;
            let e = top.entry(i64::from(x) - i64::from(y)).or_insert(0);
            *e = (*e).max(rung);
        }

        let mut pad = self.initial_padding();
        loop {
            let mut rungs_for = BTreeMap::new();
            let mut boundary: f64 = 0.0;
            for (&charge, &t) in &top {
                // Rounded up so nearby ladders share cached blocks.
                let rungs = (t + 1 + pad).div_ceil(16) * 16;
                if rungs > MAX_RUNGS {
                    return Err(Error::TruncationOverflow {
                        context: format!("gain propagator ladder needs more than {MAX_RUNGS} rungs"),
                        tail: boundary,
                        tol: BOUNDARY_TOL,
                    });
                }
                let u = self.ladder_unitary(pair, charge, rungs);
                // Weight reaching the last rung from the highest occupied rung.
                boundary = boundary.max(u[(rungs - 1, t)].norm_sqr());
                rungs_for.insert(charge, rungs);
            }
            if boundary > BOUNDARY_TOL {
                pad *= 2;
                continue;
            }

            let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
            for (occ, amp) in input {
                let (x, y) = pair.counts(occ);
                let charge = i64::from(x) - i64::from(y);
                let (bx, by) = ladder_base(charge);
                let rungs = rungs_for[&charge];
                let col = x.min(y) as usize;
                let u = self.ladder_unitary(pair, charge, rungs);
                for row in 0..rungs {
                    let coeff = u[(row, col)];
                    if coeff.norm_sqr() == 0.0 {
                        continue;
                    }
                    let target = pair.with_counts(occ, bx + row as u32, by + row as u32);
                    *out.entry(target).or_default() += amp * coeff;
                }
            }
            return Ok(out);
        }
    }

    /// Applies the full gain unitary; weight above the state's cutoff joins
    /// the deficit.
    pub fn apply(&mut self, state: &FockState) -> Result<FockState> {
        let raw: BTreeMap<_, _> = state.iter().map(|(o, a)| (*o, *a)).collect();
        let raw = self.apply_pair_raw(PairModes::Hv, &raw)?;
        let raw = self.apply_pair_raw(PairModes::Vh, &raw)?;
        Ok(FockState::from_raw(state.n_max(), raw, state.norm_deficit()))
    }

    /// Applies only one pair's squeezer (for states supported on that pair).
    pub fn apply_pair(&mut self, pair: PairModes, state: &FockState) -> Result<FockState> {
        let raw: BTreeMap<_, _> = state.iter().map(|(o, a)| (*o, *a)).collect();
        let raw = self.apply_pair_raw(pair, &raw)?;
        Ok(FockState::from_raw(state.n_max(), raw, state.norm_deficit()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_gain_is_identity() {
        let s = FockState::vacuum(3).apply_k_dagger().normalize().unwrap();
        let out = GainPropagator::new(0.0, 0.3).apply(&s).unwrap();
        assert!(out.max_amplitude_difference(&s) < 1e-14);
    }

    #[test]
    fn ladder_unitary_is_unitary() {
        let mut p = GainPropagator::new(0.7, 1.1);
        let u = p.ladder_unitary(PairModes::Vh, -2, 40).clone();
        let eye = DMatrix::<Complex64>::identity(40, 40);
        assert!((u.adjoint() * &u - eye).norm() < 1e-12);
    }

    /// `exp(G)` by Taylor series with scaling and squaring.
    fn taylor_exp(g: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = g.nrows();
        let squarings = 10;
        let scaled = g / Complex64::new(f64::from(1 << squarings), 0.0);
        let mut term = DMatrix::<Complex64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &scaled / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn ladder_unitary_matches_taylor_series() {
        for (pair, charge, phi) in [(PairModes::Hv, 0, 0.0), (PairModes::Vh, -2, 1.1), (PairModes::Hv, 3, -2.5)] {
            let (tau, rungs) = (0.3, 24);
            let mut p = GainPropagator::new(tau, phi);
            let u = p.ladder_unitary(pair, charge, rungs).clone();
            let g = Complex64::from_polar(pair.sign() * tau, phi);
            let (bx, by) = ladder_base(charge);
            let mut gen = DMatrix::<Complex64>::zeros(rungs, rungs);
            for t in 0..rungs - 1 {
                let s = (f64::from(bx + t as u32 + 1) * f64::from(by + t as u32 + 1)).sqrt();
                gen[(t + 1, t)] = g * s;
                gen[(t, t + 1)] = -g.conj() * s;
            }
            assert!((taylor_exp(&gen) - u).norm() < 1e-10);
        }
    }

    #[test]
    fn single_squeezer_vacuum_column() {
        // exp(τ(a†b† − ab))|0,0⟩ = Σ tanh^p τ / cosh τ |p,p⟩
        let tau: f64 = 0.4;
        let mut p = GainPropagator::new(tau, 0.0);
        let out = p.apply_pair(PairModes::Hv, &FockState::vacuum(20)).unwrap();
        for n in 0..10u32 {
            let expected = tau.tanh().powi(n as i32) / tau.cosh();
            assert_abs_diff_eq!(out.amplitude(&Occupation::new(n, 0, 0, n)).re, expected, epsilon = 1e-13);
        }
    }

    #[test]
    fn gain_preserves_norm_with_deficit() {
        let s = FockState::basis(3, Occupation::new(1, 0, 0, 0));
        let out = GainPropagator::new(0.3, 0.2).apply(&s).unwrap();
        assert_abs_diff_eq!(out.norm_sqr() + out.norm_deficit(), 1.0, epsilon = 1e-12);
        assert!(out.norm_deficit() > 0.0);
    }

    #[test]
    fn opposite_phase_undoes_gain() {
        let s = FockState::basis(6, Occupation::new(1, 0, 1, 0));
        let mut fwd = GainPropagator::new(0.2, 0.0);
        let mut back = GainPropagator::new(0.2, std::f64::consts::PI);
        let out = back.apply(&fwd.apply(&s.with_n_max(40)).unwrap()).unwrap();
        assert!(out.max_amplitude_difference(&s.with_n_max(40)) < 1e-12);
    }
}
