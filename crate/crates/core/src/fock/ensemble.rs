use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{FockState, Mode, ModeGroup, Occupation};
use crate::error::{invalid, Result};

const WEIGHT_TOL: f64 = 1e-12;

/// Mixed state held as a weighted list of normalized pure branches.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEnsemble {
    branches: Vec<(f64, FockState)>,
}

impl StateEnsemble {
    /// Single-branch ensemble; the state is normalized first.
    pub fn pure(state: &FockState) -> Result<Self> {
        Ok(StateEnsemble {
            branches: vec![(1.0, state.normalize()?)],
        })
    }

    /// Validates weights (non-negative, summing to one) and per-branch
    /// normalization.
    pub fn from_branches(branches: Vec<(f64, FockState)>) -> Result<Self> {
        if branches.is_empty() {
            return Err(invalid("ensemble needs at least one branch"));
        }
        let mut sum = 0.0;
        for (w, s) in &branches {
            if !(*w >= 0.0) {
                return Err(invalid(format!("branch weight {w} is negative")));
            }
            let norm = s.norm_sqr() + s.norm_deficit();
            if (norm - 1.0).abs() > WEIGHT_TOL {
                return Err(invalid(format!("branch is not normalized (norm {norm})")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(invalid(format!("branch weights sum to {sum}, not 1")));
        }
        Ok(StateEnsemble { branches })
    }

    /// Normalizes an arbitrary non-negative weighting of states.
    pub(crate) fn from_unnormalized(branches: Vec<(f64, FockState)>) -> Result<Self> {
        let total: f64 = branches.iter().map(|(w, _)| w).sum();
        if !(total > 0.0) {
            return Err(crate::Error::ZeroState);
        }
        let branches = branches
            .into_iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, s)| Ok((w / total, s.normalize()?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(StateEnsemble { branches })
    }

    pub fn branches(&self) -> &[(f64, FockState)] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn n_max(&self) -> u32 {
        self.branches[0].1.n_max()
    }

    /// Weighted sum of a per-branch quantity.
    pub fn expectation(&self, f: impl Fn(&FockState) -> f64) -> f64 {
        self.branches.iter().map(|(w, s)| w * f(s)).sum()
    }

    /// Total weight lost to truncation across branches.
    pub fn norm_deficit(&self) -> f64 {
        self.expectation(FockState::norm_deficit)
    }

    pub fn mean_occupation(&self, mode: Mode) -> f64 {
        self.expectation(|s| s.mean_occupation(mode))
    }

    pub fn mean_group_photons(&self, group: ModeGroup) -> f64 {
        self.expectation(|s| s.mean_group_photons(group))
    }

    pub fn mean_total_photons(&self) -> f64 {
        self.expectation(FockState::mean_total_photons)
    }

    /// Probability that group `a` holds exactly `n` photons, for
    /// `n = 0..=2 n_max`.
    pub fn group_photon_distribution(&self, group: ModeGroup) -> Vec<f64> {
        let mut probs = vec![0.0; 2 * self.n_max() as usize + 1];
        for (w, s) in &self.branches {
            for (occ, amp) in s.iter() {
                probs[occ.in_group(group) as usize] += w * amp.norm_sqr();
            }
        }
        probs
    }

    pub fn map_states(&self, f: impl Fn(&FockState) -> FockState) -> StateEnsemble {
        StateEnsemble {
            branches: self.branches.iter().map(|(w, s)| (*w, f(s))).collect(),
        }
    }

    /// Re-expresses the ensemble through the eigenvectors of its density
    /// operator, keeping only eigen-weights above `drop_tol`.
    ///
    /// Branches are grouped by the set of pair charges they carry and each
    /// group is diagonalized on its own; the represented mixed state is
    /// unchanged up to the dropped weight, which joins the deficit. After
    /// compression every branch carries the ensemble-wide deficit.
    pub fn compress(&self, drop_tol: f64) -> StateEnsemble {
        let n_max = self.n_max();
        let mut groups: BTreeMap<Vec<(i64, i64)>, Vec<usize>> = BTreeMap::new();
        for (idx, (w, s)) in self.branches.iter().enumerate() {
            if *w == 0.0 || s.is_zero() {
                continue;
            }
            let key: BTreeSet<(i64, i64)> = s.iter().map(|(o, _)| o.pair_charges()).collect();
            groups.entry(key.into_iter().collect()).or_default().push(idx);
        }

        let mut eigen_branches: Vec<(f64, BTreeMap<Occupation, Complex64>)> = Vec::new();
        for members in groups.values() {
            self.diagonalize_group(members, drop_tol, &mut eigen_branches);
        }

        let kept: f64 = eigen_branches.iter().map(|(w, _)| w).sum();
        if eigen_branches.is_empty() || kept <= 0.0 {
            // Nothing retained: represent as a vacuum branch carrying the full deficit.
            let vac = FockState::from_raw(n_max, BTreeMap::from([(Occupation::VACUUM, Complex64::new(0.0, 0.0))]), 1.0);
            return StateEnsemble { branches: vec![(1.0, vac)] };
        }
        let deficit = (1.0 - kept).max(0.0);
        let amp_scale = (1.0 - deficit).sqrt();
        let branches = eigen_branches
            .into_iter()
            .map(|(w, amps)| {
                let raw = amps.into_iter().map(|(o, a)| (o, a * amp_scale)).collect();
                (w / kept, FockState::from_raw(n_max, raw, deficit))
            })
            .collect();
        StateEnsemble { branches }
    }

    fn diagonalize_group(
        &self,
        members: &[usize],
        drop_tol: f64,
        out: &mut Vec<(f64, BTreeMap<Occupation, Complex64>)>,
    ) {
        let support: Vec<Occupation> = members
            .iter()
            .flat_map(|&i| self.branches[i].1.iter().map(|(o, _)| *o))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: BTreeMap<Occupation, usize> = support.iter().enumerate().map(|(i, o)| (*o, i)).collect();

        // Columns are √w ψ; ρ = Ψ Ψ†.
        let mut psi = DMatrix::<Complex64>::zeros(support.len(), members.len());
        for (col, &b) in members.iter().enumerate() {
            let (w, s) = &self.branches[b];
            let sw = w.sqrt();
            for (o, a) in s.iter() {
                psi[(index[o], col)] = a * sw;
            }
        }

        let to_map = |v: nalgebra::DVectorView<'_, Complex64>| -> BTreeMap<Occupation, Complex64> {
            support.iter().zip(v.iter()).map(|(o, a)| (*o, *a)).collect()
        };

        if members.len() <= support.len() {
            let gram = psi.adjoint() * &psi;
            let eig = SymmetricEigen::new(gram);
            for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
                if lambda > drop_tol {
                    let v = &psi * eig.eigenvectors.column(k) / Complex64::new(lambda.sqrt(), 0.0);
                    out.push((lambda, to_map(v.column(0))));
                }
            }
        } else {
            let rho = &psi * psi.adjoint();
            let eig = SymmetricEigen::new(rho);
            for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
                if lambda > drop_tol {
                    out.push((lambda, to_map(eig.eigenvectors.column(k))));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ket(i: u32, j: u32, k: u32, l: u32) -> Occupation {
        Occupation::new(i, j, k, l)
    }

    fn density(e: &StateEnsemble, a: Occupation, b: Occupation) -> Complex64 {
        e.branches()
            .iter()
            .map(|(w, s)| s.amplitude(&a) * s.amplitude(&b).conj() * *w)
            .sum()
    }

    #[test]
    fn rejects_bad_weights() {
        let s = FockState::vacuum(1);
        assert!(StateEnsemble::from_branches(vec![(0.5, s.clone())]).is_err());
        assert!(StateEnsemble::from_branches(vec![(1.5, s.clone()), (-0.5, s)]).is_err());
    }

    #[test]
    fn compress_preserves_density_matrix() {
        let plus = FockState::from_terms(
            2,
            [(ket(1, 0, 0, 1), Complex64::new(1.0, 0.0)), (ket(0, 1, 1, 0), Complex64::new(0.0, 1.0))],
        )
        .normalize()
        .unwrap();
        let hv = FockState::basis(2, ket(1, 0, 0, 1));
        let vh = FockState::basis(2, ket(0, 1, 1, 0));
        let e = StateEnsemble::from_branches(vec![(0.5, plus), (0.3, hv), (0.2, vh)]).unwrap();
        let c = e.compress(1e-15);
        assert!(c.len() <= 2);
        let kets = [ket(1, 0, 0, 1), ket(0, 1, 1, 0)];
        for a in kets {
            for b in kets {
                let d = density(&e, a, b) - density(&c, a, b);
                assert!(d.norm() < 1e-14, "ρ[{a},{b}] changed by {d}");
            }
        }
        let total: f64 = c.branches().iter().map(|(w, _)| w).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn compress_merges_identical_branches() {
        let s = FockState::vacuum(1).apply_k_dagger().normalize().unwrap();
        let e = StateEnsemble::from_branches(vec![(0.25, s.clone()), (0.75, s.scale(Complex64::new(0.0, 1.0)))]).unwrap();
        let c = e.compress(1e-15);
        assert_eq!(c.len(), 1);
        assert_abs_diff_eq!(c.branches()[0].1.inner_product(&s).norm(), 1.0, epsilon = 1e-14);
    }
}
