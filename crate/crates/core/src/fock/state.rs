use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Mode, ModeGroup, Occupation, PRUNE_THRESHOLD};
use crate::error::{invalid, Error, Result};

/// Pure state on the truncated four-mode Fock space.
///
/// Amplitudes are stored sparsely and in occupation order, so iteration and
/// serialization are deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct FockState {
    amplitudes: BTreeMap<Occupation, Complex64>,
    n_max: u32,
    norm_deficit: f64,
}

impl FockState {
    /// The zero vector (no amplitudes).
    pub fn zero(n_max: u32) -> Self {
        FockState {
            amplitudes: BTreeMap::new(),
            n_max,
            norm_deficit: 0.0,
        }
    }

    pub fn vacuum(n_max: u32) -> Self {
        Self::basis(n_max, Occupation::VACUUM)
    }

    /// Single basis ket with unit amplitude. Kets beyond the cutoff become
    /// pure deficit.
    pub fn basis(n_max: u32, occ: Occupation) -> Self {
        Self::from_terms(n_max, [(occ, Complex64::new(1.0, 0.0))])
    }

    /// Superposition of basis kets. Repeated kets are summed; kets beyond the
    /// cutoff contribute their weight to the deficit.
    pub fn from_terms(n_max: u32, terms: impl IntoIterator<Item = (Occupation, Complex64)>) -> Self {
        let mut acc = BTreeMap::new();
        for (occ, amp) in terms {
            *acc.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        Self::from_raw(n_max, acc, 0.0)
    }

    /// Builds a state from accumulated raw amplitudes, moving out-of-range
    /// weight into the deficit and pruning negligible entries.
    pub(crate) fn from_raw(n_max: u32, raw: BTreeMap<Occupation, Complex64>, deficit: f64) -> Self {
        let limit = 2 * n_max;
        let mut overflow = 0.0;
        let mut amplitudes = BTreeMap::new();
        for (occ, amp) in raw {
            if occ.total() > limit {
                overflow += amp.norm_sqr();
            } else if amp.norm() >= PRUNE_THRESHOLD {
                amplitudes.insert(occ, amp);
            }
        }
        FockState {
            amplitudes,
            n_max,
            norm_deficit: deficit + overflow,
        }
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// Probability weight lost to truncation.
    pub fn norm_deficit(&self) -> f64 {
        self.norm_deficit
    }

    pub fn amplitude(&self, occ: &Occupation) -> Complex64 {
        self.amplitudes.get(occ).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// True when no amplitude survives; such a state cannot be normalized.
    pub fn is_zero(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Σ |amplitude|² over the retained kets.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales so that retained weight plus deficit equals one.
    pub fn normalize(&self) -> Result<FockState> {
        let kept = self.norm_sqr();
        if kept == 0.0 {
            return Err(Error::ZeroState);
        }
        let total = kept + self.norm_deficit;
        let scale = total.sqrt().recip();
        Ok(FockState {
            amplitudes: self.amplitudes.iter().map(|(o, a)| (*o, a * scale)).collect(),
            n_max: self.n_max,
            norm_deficit: self.norm_deficit / total,
        })
    }

    /// Rescales the retained amplitudes to weight `1 - deficit`.
    pub(crate) fn normalized_with_deficit(&self, deficit: f64) -> Result<FockState> {
        let kept = self.norm_sqr();
        if kept == 0.0 {
            return Err(Error::ZeroState);
        }
        let scale = ((1.0 - deficit) / kept).sqrt();
        Ok(FockState {
            amplitudes: self.amplitudes.iter().map(|(o, a)| (*o, a * scale)).collect(),
            n_max: self.n_max,
            norm_deficit: deficit,
        })
    }

    pub fn scale(&self, factor: Complex64) -> FockState {
        let raw = self.amplitudes.iter().map(|(o, a)| (*o, a * factor)).collect();
        Self::from_raw(self.n_max, raw, self.norm_deficit * factor.norm_sqr())
    }

    /// `self + factor * other`. Cutoffs must agree.
    pub fn add_scaled(&self, other: &FockState, factor: Complex64) -> Result<FockState> {
        if self.n_max != other.n_max {
            return Err(invalid(format!(
                "cannot add states with cutoffs {} and {}",
                self.n_max, other.n_max
            )));
        }
        let mut raw = self.amplitudes.clone();
        for (occ, amp) in &other.amplitudes {
            *raw.entry(*occ).or_default() += amp * factor;
        }
        Ok(Self::from_raw(
            self.n_max,
            raw,
            self.norm_deficit + other.norm_deficit * factor.norm_sqr(),
        ))
    }

    /// Same amplitudes under a different cutoff; kets above a lowered cutoff
    /// move to the deficit.
    pub fn with_n_max(&self, n_max: u32) -> FockState {
        Self::from_raw(n_max, self.amplitudes.clone(), self.norm_deficit)
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &FockState) -> Complex64 {
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        small
            .amplitudes
            .iter()
            .filter_map(|(occ, a)| large.amplitudes.get(occ).map(|b| (a, b)))
            .map(|(a, b)| if conj_small { a.conj() * b } else { b.conj() * a })
            .sum()
    }

    /// Applies a ket-wise linear map. `f` pushes the image terms of one ket.
    fn map_kets(&self, mut f: impl FnMut(Occupation, &mut Vec<(Occupation, f64)>)) -> FockState {
        let mut raw: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        let mut image = Vec::with_capacity(2);
        for (occ, amp) in &self.amplitudes {
            image.clear();
            f(*occ, &mut image);
            for &(target, coeff) in &image {
                *raw.entry(target).or_default() += amp * coeff;
            }
        }
        Self::from_raw(self.n_max, raw, self.norm_deficit)
    }

    /// Bosonic creation: `|n⟩ → √(n+1) |n+1⟩` on `mode`. Not renormalized.
    pub fn create(&self, mode: Mode) -> FockState {
        self.map_kets(|occ, out| {
            let n = occ.get(mode);
            out.push((occ.with(mode, n + 1), f64::from(n + 1).sqrt()));
        })
    }

    /// Bosonic annihilation: `|n⟩ → √n |n-1⟩` on `mode`. Annihilating the
    /// vacuum yields the zero state.
    pub fn annihilate(&self, mode: Mode) -> FockState {
        self.map_kets(|occ, out| {
            let n = occ.get(mode);
            if n > 0 {
                out.push((occ.with(mode, n - 1), f64::from(n).sqrt()));
            }
        })
    }

    /// Entangled-pair creation `K† = a_h† b_v† − a_v† b_h†`.
    pub fn apply_k_dagger(&self) -> FockState {
        self.map_kets(|occ, out| {
            let [i, j, k, l] = occ.counts();
            let hv = f64::from((i + 1) * (l + 1)).sqrt();
            let vh = f64::from((j + 1) * (k + 1)).sqrt();
            out.push((Occupation::new(i + 1, j, k, l + 1), hv));
            out.push((Occupation::new(i, j + 1, k + 1, l), -vh));
        })
    }

    /// Entangled-pair annihilation `K = a_h b_v − a_v b_h`.
    pub fn apply_k(&self) -> FockState {
        self.map_kets(|occ, out| {
            let [i, j, k, l] = occ.counts();
            if i > 0 && l > 0 {
                out.push((Occupation::new(i - 1, j, k, l - 1), f64::from(i * l).sqrt()));
            }
            if j > 0 && k > 0 {
                out.push((Occupation::new(i, j - 1, k - 1, l), -f64::from(j * k).sqrt()));
            }
        })
    }

    /// Exchanges horizontal and vertical polarization in both spatial modes.
    pub fn swap_polarization(&self) -> FockState {
        FockState {
            amplitudes: self
                .amplitudes
                .iter()
                .map(|(o, a)| (o.swapped_polarization(), *a))
                .collect(),
            n_max: self.n_max,
            norm_deficit: self.norm_deficit,
        }
    }

    /// ⟨n⟩ in one mode, per unit retained norm.
    pub fn mean_occupation(&self, mode: Mode) -> f64 {
        self.weighted_mean(|o| f64::from(o.get(mode)))
    }

    pub fn mean_group_photons(&self, group: ModeGroup) -> f64 {
        self.weighted_mean(|o| f64::from(o.in_group(group)))
    }

    pub fn mean_total_photons(&self) -> f64 {
        self.weighted_mean(|o| f64::from(o.total()))
    }

    fn weighted_mean(&self, f: impl Fn(&Occupation) -> f64) -> f64 {
        let norm = self.norm_sqr();
        if norm == 0.0 {
            return 0.0;
        }
        self.amplitudes.iter().map(|(o, a)| a.norm_sqr() * f(o)).sum::<f64>() / norm
    }

    /// Largest `|a|` difference over the union of supports.
    pub fn max_amplitude_difference(&self, other: &FockState) -> f64 {
        let mut max: f64 = 0.0;
        for (occ, a) in &self.amplitudes {
            max = max.max((a - other.amplitude(occ)).norm());
        }
        for (occ, b) in &other.amplitudes {
            if !self.amplitudes.contains_key(occ) {
                max = max.max(b.norm());
            }
        }
        max
    }
}

/// JSON form: `{"n_max": .., "norm_deficit": .., "amplitudes": [[[i,j,k,l],[re,im]], ..]}`.
#[derive(Serialize, Deserialize)]
struct StateRepr {
    n_max: u32,
    norm_deficit: f64,
    amplitudes: Vec<(Occupation, [f64; 2])>,
}

impl From<FockState> for StateRepr {
    fn from(s: FockState) -> Self {
        StateRepr {
            n_max: s.n_max,
            norm_deficit: s.norm_deficit,
            amplitudes: s.amplitudes.into_iter().map(|(o, a)| (o, [a.re, a.im])).collect(),
        }
    }
}

impl TryFrom<StateRepr> for FockState {
    type Error = Error;

    fn try_from(r: StateRepr) -> Result<Self> {
        if !(r.norm_deficit >= 0.0) {
            return Err(invalid("norm_deficit must be non-negative"));
        }
        let limit = 2 * r.n_max;
        if let Some((occ, _)) = r.amplitudes.iter().find(|(o, _)| o.total() > limit) {
            return Err(invalid(format!("ket {occ} exceeds cutoff n_max = {}", r.n_max)));
        }
        let raw = r
            .amplitudes
            .into_iter()
            .fold(BTreeMap::new(), |mut acc, (o, [re, im])| {
                *acc.entry(o).or_insert(Complex64::new(0.0, 0.0)) += Complex64::new(re, im);
                acc
            });
        Ok(FockState::from_raw(r.n_max, raw, r.norm_deficit))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ket(i: u32, j: u32, k: u32, l: u32) -> Occupation {
        Occupation::new(i, j, k, l)
    }

    #[test]
    fn create_on_vacuum() {
        let s = FockState::vacuum(4).create(Mode::AH);
        assert_eq!(s, FockState::basis(4, ket(1, 0, 0, 0)));
    }

    #[test]
    fn create_ladder_factor() {
        let s = FockState::basis(4, ket(2, 0, 0, 0)).create(Mode::AH);
        assert_abs_diff_eq!(s.amplitude(&ket(3, 0, 0, 0)).re, 3f64.sqrt(), epsilon = 1e-15);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn create_twice_gives_sqrt_two() {
        let s = FockState::vacuum(4).create(Mode::AH).create(Mode::AH);
        assert_abs_diff_eq!(s.amplitude(&ket(2, 0, 0, 0)).re, 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn create_past_cutoff_goes_to_deficit() {
        // n_max = 1 admits at most two photons.
        let s = FockState::basis(1, ket(2, 0, 0, 0)).create(Mode::AH);
        assert!(s.is_zero());
        assert_abs_diff_eq!(s.norm_deficit(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn annihilate_single_photon() {
        let s = FockState::basis(4, ket(1, 0, 0, 0)).annihilate(Mode::AH);
        assert_eq!(s, FockState::vacuum(4));
    }

    #[test]
    fn annihilate_vacuum_is_zero_and_cannot_normalize() {
        let s = FockState::vacuum(4).annihilate(Mode::AH);
        assert!(s.is_zero());
        assert_eq!(s.normalize(), Err(Error::ZeroState));
    }

    #[test]
    fn annihilate_ladder_factor() {
        let s = FockState::basis(4, ket(2, 0, 0, 2)).annihilate(Mode::BV);
        assert_abs_diff_eq!(s.amplitude(&ket(2, 0, 0, 1)).re, 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn k_dagger_on_vacuum() {
        let s = FockState::vacuum(4).apply_k_dagger();
        let expected = FockState::from_terms(4, [(ket(1, 0, 0, 1), c(1.0)), (ket(0, 1, 1, 0), c(-1.0))]);
        assert_eq!(s, expected);
    }

    #[test]
    fn k_dagger_squared_on_vacuum() {
        // (K†)²|0⟩ = 2(|2,0;0,2⟩ − |1,1;1,1⟩ + |0,2;2,0⟩)
        let s = FockState::vacuum(4).apply_k_dagger().apply_k_dagger();
        assert_eq!(s.len(), 3);
        assert_abs_diff_eq!(s.amplitude(&ket(2, 0, 0, 2)).re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.amplitude(&ket(1, 1, 1, 1)).re, -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.amplitude(&ket(0, 2, 2, 0)).re, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn k_dagger_vacuum_overlap_is_zero() {
        let vac = FockState::vacuum(4);
        assert_eq!(vac.inner_product(&vac.apply_k_dagger()), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn inner_products_of_basis_kets() {
        let hv = FockState::basis(2, ket(1, 0, 0, 1));
        let vh = FockState::basis(2, ket(0, 1, 1, 0));
        assert_eq!(hv.inner_product(&hv), c(1.0));
        assert_eq!(hv.inner_product(&vh), c(0.0));
        let singlet = FockState::vacuum(2).apply_k_dagger().normalize().unwrap();
        assert_abs_diff_eq!(singlet.inner_product(&singlet).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_left() {
        let x = FockState::basis(2, ket(1, 0, 0, 1)).scale(Complex64::new(0.0, 1.0));
        let y = FockState::basis(2, ket(1, 0, 0, 1));
        assert_eq!(x.inner_product(&y), Complex64::new(0.0, -1.0));
        assert_eq!(y.inner_product(&x), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn normalize_keeps_deficit_fraction() {
        let s = FockState::from_raw(1, BTreeMap::from([(ket(0, 0, 0, 0), c(1.0)), (ket(2, 0, 0, 1), c(1.0))]), 0.0);
        assert_abs_diff_eq!(s.norm_deficit(), 1.0);
        let n = s.normalize().unwrap();
        assert_abs_diff_eq!(n.norm_sqr() + n.norm_deficit(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(n.norm_deficit(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn pruning_drops_tiny_amplitudes() {
        let s = FockState::from_terms(2, [(ket(0, 0, 0, 0), c(1.0)), (ket(1, 0, 0, 1), c(1e-15))]);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn json_round_trip_and_format() {
        let s = FockState::from_terms(2, [(ket(1, 0, 0, 1), Complex64::new(0.5, -0.25))]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"n_max":2,"norm_deficit":0.0,"amplitudes":[[[1,0,0,1],[0.5,-0.25]]]}"#);
        let back: FockState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn json_rejects_kets_past_cutoff() {
        let bad = r#"{"n_max":1,"norm_deficit":0.0,"amplitudes":[[[3,0,0,0],[1.0,0.0]]]}"#;
        assert!(serde_json::from_str::<FockState>(bad).is_err());
    }

    #[test]
    fn swap_polarization_relabels() {
        let s = FockState::basis(2, ket(1, 0, 0, 1)).swap_polarization();
        assert_eq!(s, FockState::basis(2, ket(0, 1, 1, 0)));
    }
}
