use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::FockState;

/// Singular values (descending) of the amplitude matrix indexed by
/// `(a_h, a_v)` rows and `(b_h, b_v)` columns, i.e. the Schmidt
/// coefficients across the a|b cut. Not renormalized.
pub fn schmidt_coefficients(state: &FockState) -> Vec<f64> {
    if state.is_zero() {
        return Vec::new();
    }
    let mut rows = BTreeMap::new();
    let mut cols = BTreeMap::new();
    for (occ, _) in state.iter() {
        let [i, j, k, l] = occ.counts();
        let r = rows.len();
        rows.entry((i, j)).or_insert(r);
        let c = cols.len();
        cols.entry((k, l)).or_insert(c);
    }
    let mut m = DMatrix::<Complex64>::zeros(rows.len(), cols.len());
    for (occ, amp) in state.iter() {
        let [i, j, k, l] = occ.counts();
        m[(rows[&(i, j)], cols[&(k, l)])] = *amp;
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of Schmidt coefficients above `tol` across the a|b cut.
/// Rank one means the state is a product across the cut.
pub fn schmidt_rank(state: &FockState, tol: f64) -> usize {
    schmidt_coefficients(state).into_iter().filter(|&s| s > tol).count()
}
