use approx::assert_abs_diff_eq;
use eplsim_core::{build_pdc_state, FockState, Occupation, PdcParams};
use num_complex::Complex64;
use serde::Deserialize;

#[derive(Deserialize)]
struct GoldenPdc {
    tau: f64,
    phi: f64,
    n_max: u32,
    norm_deficit: f64,
    amplitudes: Vec<([u32; 4], [f64; 2])>,
}

fn data(name: &str) -> String {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn pdc_state_matches_golden_amplitudes() {
    let golden: GoldenPdc = serde_json::from_str(&data("pdc_tau0.5_nmax2.json")).unwrap();
    let s = build_pdc_state(&PdcParams::new(golden.tau, golden.phi, golden.n_max).unwrap()).unwrap();
    assert_eq!(s.len(), golden.amplitudes.len());
    for (occ, [re, im]) in golden.amplitudes {
        let a = s.amplitude(&Occupation::from(occ));
        assert_abs_diff_eq!(a.re, re, epsilon = 1e-15);
        assert_abs_diff_eq!(a.im, im, epsilon = 1e-15);
    }
    assert_abs_diff_eq!(s.norm_deficit(), golden.norm_deficit, epsilon = 1e-16);
}

#[test]
fn state_json_round_trips_in_canonical_order() {
    let s: FockState = serde_json::from_str(&data("state_canonical.json")).unwrap();
    assert_eq!(s.amplitude(&Occupation::new(1, 0, 0, 1)), Complex64::new(0.5, -0.25));
    let canonical = r#"{"n_max":2,"norm_deficit":0.0,"amplitudes":[[[0,0,0,0],[0.5,0.0]],[[0,1,1,0],[-0.5,0.25]],[[1,0,0,1],[0.5,-0.25]]]}"#;
    assert_eq!(serde_json::to_string(&s).unwrap(), canonical);
    let back: FockState = serde_json::from_str(canonical).unwrap();
    assert_eq!(back, s);
}

#[test]
fn json_rejects_kets_past_cutoff() {
    let bad = r#"{"n_max":1,"norm_deficit":0.0,"amplitudes":[[[2,0,0,1],[1.0,0.0]]]}"#;
    assert!(serde_json::from_str::<FockState>(bad).is_err());
    let bad = r#"{"n_max":1,"norm_deficit":-0.1,"amplitudes":[]}"#;
    assert!(serde_json::from_str::<FockState>(bad).is_err());
}
