use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use eplsim_core::cavity::{
    rate_model, rounds_to_exceed, simulate_cavity, uncorrelated_pair_recursion, CavityConfig,
};
use eplsim_core::fock::{
    apply_loss_ensemble, measure_photon, schmidt_coefficients, PolarizationBasis, PolarizationOutcome,
};
use eplsim_core::interference::{fringe_period, fringe_scan, two_pass_rate, PassConfig, DEFAULT_COHERENCE_LENGTH_NM};
use eplsim_core::pdc::{
    analytic_tail, build_hamiltonian_oracle, ideal_mean_pairs, pair_distribution, DEFAULT_N_MAX,
};
use eplsim_core::polarization::{
    default_beta_grid, two_pass_visibility, visibility_scan, NoisyPairModel, OverlapRegion, PairInput,
};
use eplsim_core::{build_pdc_state, FockState, ModeGroup, Occupation, PdcParams, StateEnsemble};

use crate::error::CliError;
use crate::output::{Cell, Report, Table};
use crate::Common;

/// Analytic tails above this draw a warning.
const TAIL_WARNING: f64 = 1e-6;

/// Singular values above this count toward the Schmidt rank.
const SCHMIDT_TOL: f64 = 1e-10;

pub struct Outcome {
    pub parameters: Value,
    pub report: Report,
    pub warnings: Vec<String>,
    /// Error to report after the (partial) artifacts are written.
    pub deferred: Option<CliError>,
}

fn tail_warning(tau: f64, n_max: u32) -> Option<String> {
    let tail = analytic_tail(tau, n_max);
    (tail > TAIL_WARNING).then(|| format!("analytic tail {tail:.3e} at tau = {tau}, n_max = {n_max}; consider a larger --nmax"))
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::param(format!("bad {what} value {s:?}"))))
        .collect()
}

/// `start:stop:step` (inclusive) or a comma-separated list.
fn parse_grid(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let [start, stop, step] = [start, stop, step].map(|s| s.trim().parse::<f64>());
            let (Ok(start), Ok(stop), Ok(step)) = (start, stop, step) else {
                return Err(CliError::param(format!("bad {what} grid {text:?}")));
            };
            if !(step > 0.0) || stop < start {
                return Err(CliError::param(format!("{what} grid needs step > 0 and start <= stop")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        [_] => parse_list(text, what),
        _ => Err(CliError::param(format!("bad {what} grid {text:?}"))),
    }
}

#[derive(Args, Debug)]
pub struct PdcArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Pump phase (radians).
    #[arg(long, default_value_t = 0.0)]
    pub phi: f64,
    /// Comma-separated tau values; overrides --tau.
    #[arg(long)]
    pub tau_grid: Option<String>,
    /// Compare each state against the propagated-Hamiltonian oracle.
    #[arg(long)]
    pub verify_oracle: bool,
}

pub fn pdc(a: &PdcArgs) -> Result<Outcome, CliError> {
    let n_max = a.common.nmax.unwrap_or(DEFAULT_N_MAX);
    let taus = match &a.tau_grid {
        Some(g) => parse_list(g, "tau")?,
        None => vec![a.tau],
    };
    let params: Vec<PdcParams> = taus
        .iter()
        .map(|&tau| PdcParams::new(tau, a.phi, n_max))
        .collect::<Result<_, _>>()?;

    let mut table = Table::new("distribution", &["tau", "n", "probability"]);
    let mut runs = Vec::new();
    let mut states = Vec::new();
    let mut warnings = Vec::new();
    for p in &params {
        let state = build_pdc_state(p)?;
        let dist = pair_distribution(&state)?;
        for (n, &prob) in dist.probs.iter().enumerate() {
            if prob > 0.0 {
                table.push(vec![Cell::from(p.tau), Cell::from(n), Cell::from(prob)]);
            }
        }
        let oracle = if a.verify_oracle {
            let o = build_hamiltonian_oracle(p, 1.0)?;
            json!({
                "max_amplitude_error": o.state.max_amplitude_difference(&state),
                "tail": o.tail,
            })
        } else {
            Value::Null
        };
        warnings.extend(tail_warning(p.tau, n_max));
        runs.push(json!({
            "tau": p.tau,
            "phi": p.phi,
            "n_max": n_max,
            "r": p.r(),
            "q": p.q(),
            "mean_pairs": dist.mean_pairs,
            "ideal_mean_pairs": ideal_mean_pairs(p.tau),
            "peak_n": dist.peak_n,
            "probability_sum": dist.probs.iter().sum::<f64>(),
            "analytic_tail": dist.tail,
            "oracle": oracle,
        }));
        states.push(json!({ "tau": p.tau, "state": state }));
    }
    let summary = if runs.len() == 1 {
        runs[0].clone()
    } else {
        json!({ "runs": runs })
    };
    Ok(Outcome {
        parameters: json!({ "tau": taus, "phi": a.phi, "n_max": n_max, "verify_oracle": a.verify_oracle }),
        report: Report {
            summary,
            tables: vec![table],
            documents: vec![("states", Value::Array(states))],
        },
        warnings,
        deferred: None,
    })
}

#[derive(Args, Debug)]
pub struct FringeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Pass phase at zero displacement (radians).
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    /// Indistinguishability of the two passes, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub overlap: f64,
    #[arg(long, default_value_t = 390.0)]
    pub lambda_nm: f64,
    /// Gaussian envelope width (standard deviation) in delay.
    #[arg(long, default_value_t = DEFAULT_COHERENCE_LENGTH_NM)]
    pub coherence_nm: f64,
    #[arg(long, default_value_t = -1000.0, allow_hyphen_values = true)]
    pub start: f64,
    #[arg(long, default_value_t = 1000.0, allow_hyphen_values = true)]
    pub stop: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
}

pub fn fringe(a: &FringeArgs) -> Result<Outcome, CliError> {
    let n_max = a.common.nmax.unwrap_or(DEFAULT_N_MAX);
    let cfg = PassConfig {
        tau: a.tau,
        theta: a.theta,
        overlap_v: a.overlap,
        pump_wavelength_nm: a.lambda_nm,
        coherence_length_nm: a.coherence_nm,
    };
    let scan = fringe_scan(&cfg, a.start, a.stop, a.step)?;
    let single = a.tau * a.tau;
    let mut table = Table::new("fringe", &["displacement_nm", "rate", "rate_over_single_pass"]);
    for (&d, &r) in scan.displacements_nm.iter().zip(&scan.rates) {
        let relative = if single > 0.0 { r / single } else { 0.0 };
        table.push(vec![Cell::from(d), Cell::from(r), Cell::from(relative)]);
    }
    let aligned = PassConfig { theta: 0.0, overlap_v: 1.0, ..cfg };
    let distinguishable = PassConfig { overlap_v: 0.0, ..cfg };
    let ratio = if single > 0.0 {
        Value::from(two_pass_rate(&aligned, 0.0) / two_pass_rate(&distinguishable, 0.0))
    } else {
        Value::Null
    };
    let summary = json!({
        "period_nm": fringe_period(&scan, 2.0 * single),
        "expected_period_nm": a.lambda_nm / 2.0,
        "aligned_over_distinguishable": ratio,
        "points": scan.rates.len(),
        "analytic_tail": analytic_tail(a.tau, n_max),
    });
    Ok(Outcome {
        parameters: json!({
            "tau": a.tau, "theta": a.theta, "overlap": a.overlap, "lambda_nm": a.lambda_nm,
            "coherence_nm": a.coherence_nm, "start": a.start, "stop": a.stop, "step": a.step, "n_max": n_max,
        }),
        report: Report {
            summary,
            tables: vec![table],
            documents: vec![],
        },
        warnings: tail_warning(a.tau, n_max).into_iter().collect(),
        deferred: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    /// Werner mixture of the singlet with fraction --p.
    Werner,
    /// Two-pass source, delay inside the overlap region.
    Overlap,
    /// Two-pass source, passes distinguishable.
    NoOverlap,
}

#[derive(Args, Debug)]
pub struct VisibilityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Fixed analyzer angle in mode a (degrees).
    #[arg(long, default_value_t = 45.0)]
    pub alpha: f64,
    /// Singlet fraction of the Werner noise model.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// `start:stop:step` or comma list, in degrees.
    #[arg(long)]
    pub beta_grid: Option<String>,
    #[arg(long, value_enum, default_value_t = Source::Werner)]
    pub source: Source,
    /// Per-pass gain for the two-pass sources.
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Pass phase for the two-pass sources (radians).
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
}

pub fn visibility(a: &VisibilityArgs) -> Result<Outcome, CliError> {
    let n_max = a.common.nmax.unwrap_or(DEFAULT_N_MAX);
    let betas = match &a.beta_grid {
        Some(g) => parse_grid(g, "beta")?,
        None => default_beta_grid(),
    };
    let noise = NoisyPairModel::new(a.p)?;
    let curve = match a.source {
        Source::Werner => visibility_scan(&PairInput::Werner(noise), a.alpha, &betas)?,
        Source::Overlap | Source::NoOverlap => {
            let cfg = PassConfig {
                tau: a.tau,
                theta: a.theta,
                ..PassConfig::default()
            };
            let region = if a.source == Source::Overlap {
                OverlapRegion::Overlap
            } else {
                OverlapRegion::NoOverlap
            };
            two_pass_visibility(&cfg, region, noise, a.alpha, &betas)?
        }
    };
    let mut table = Table::new("visibility", &["beta_deg", "coincidence"]);
    for (&b, &c) in curve.betas_deg.iter().zip(&curve.coincidences) {
        table.push(vec![Cell::from(b), Cell::from(c)]);
    }
    let summary = json!({
        "alpha": curve.alpha_deg,
        "visibility": curve.visibility,
        "grid_visibility": curve.grid_visibility,
        "method": curve.method,
        "p": a.p,
        "analytic_tail": analytic_tail(a.tau, n_max),
    });
    Ok(Outcome {
        parameters: json!({
            "alpha": a.alpha, "p": a.p, "beta_grid": betas, "source": format!("{:?}", a.source),
            "tau": a.tau, "theta": a.theta, "n_max": n_max,
        }),
        report: Report {
            summary,
            tables: vec![table],
            documents: vec![],
        },
        warnings: vec![],
        deferred: None,
    })
}

#[derive(Args, Debug)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub common: Common,
    /// JSON script: initial state and channel list.
    #[arg(long)]
    pub script: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Script {
    n_max: Option<u32>,
    initial: Initial,
    #[serde(default)]
    channels: Vec<Channel>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum Initial {
    /// Unnormalized `[[i,j,k,l], [re, im]]` terms.
    Kets(Vec<([u32; 4], [f64; 2])>),
    /// Normalized `n`-pair sector of the down-conversion state.
    PdcSector { n: u32 },
    Pdc { tau: f64, #[serde(default)] phi: f64 },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Group {
    A,
    B,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Eta {
    All(f64),
    PerMode([f64; 4]),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op", deny_unknown_fields)]
enum Channel {
    Measure {
        group: Group,
        #[serde(default)]
        basis_deg: f64,
        outcome: PolarizationOutcome,
    },
    Loss {
        eta: Eta,
    },
    Swap,
}

fn initial_state(init: &Initial, n_max: Option<u32>) -> Result<FockState, CliError> {
    let needed = match init {
        Initial::Kets(terms) => terms.iter().map(|(o, _)| o.iter().sum::<u32>().div_ceil(2)).max().unwrap_or(1),
        Initial::PdcSector { n } => *n,
        Initial::Pdc { .. } => DEFAULT_N_MAX,
    }
    .max(1);
    let n_max = n_max.unwrap_or(needed);
    if n_max < needed {
        return Err(CliError::param(format!("n_max = {n_max} is below the {needed} pairs the initial state needs")));
    }
    let state = match init {
        Initial::Kets(terms) => FockState::from_terms(
            n_max,
            terms
                .iter()
                .map(|(o, [re, im])| (Occupation::from(*o), Complex64::new(*re, *im))),
        ),
        Initial::PdcSector { n } => FockState::from_terms(
            n_max,
            (0..=*n).map(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                (Occupation::new(n - m, m, m, n - m), Complex64::new(sign, 0.0))
            }),
        ),
        Initial::Pdc { tau, phi } => build_pdc_state(&PdcParams::new(*tau, *phi, n_max)?)?,
    };
    Ok(state.normalize()?)
}

/// Conditions every branch on the outcome; returns the outcome probability
/// and the conditional ensemble. Branches without a photon in `group`
/// cannot produce the detection.
fn measure_ensemble(
    e: &StateEnsemble,
    group: ModeGroup,
    basis: PolarizationBasis,
    outcome: PolarizationOutcome,
) -> Result<(f64, StateEnsemble), CliError> {
    let mut kept = Vec::new();
    let mut total = 0.0;
    for (w, s) in e.branches() {
        match measure_photon(s, group, basis, outcome) {
            Ok((p, post)) => {
                total += w * p;
                kept.push((w * p, post));
            }
            Err(eplsim_core::Error::NoPhoton(_) | eplsim_core::Error::ImpossibleOutcome) => {}
            Err(err) => return Err(err.into()),
        }
    }
    if total == 0.0 {
        return Err(CliError::param("measurement outcome has zero probability"));
    }
    let branches = kept.into_iter().map(|(w, s)| (w / total, s)).collect();
    Ok((total, StateEnsemble::from_branches(branches)?))
}

pub fn measure(a: &MeasureArgs) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(&a.script).map_err(|e| CliError::io(&a.script, e))?;
    let script: Script = serde_json::from_str(&text).map_err(|e| CliError::param(format!("bad script: {e}")))?;
    let initial = initial_state(&script.initial, a.common.nmax.or(script.n_max))?;
    let n_max = initial.n_max();
    let mut ensemble = StateEnsemble::pure(&initial)?;

    let mut table = Table::new("steps", &["step", "probability", "branches", "mean_photons"]);
    table.push(vec![Cell::from(0u32), Cell::from(1.0), Cell::from(ensemble.len()), Cell::from(ensemble.mean_total_photons())]);
    let mut joint_probability = 1.0;
    for (i, ch) in script.channels.iter().enumerate() {
        let mut probability = 1.0;
        ensemble = match ch {
            Channel::Measure { group, basis_deg, outcome } => {
                let group = match group {
                    Group::A => ModeGroup::A,
                    Group::B => ModeGroup::B,
                };
                let (p, e) = measure_ensemble(&ensemble, group, PolarizationBasis::rotated(*basis_deg), *outcome)?;
                probability = p;
                e
            }
            Channel::Loss { eta } => {
                let eta = match eta {
                    Eta::All(e) => [*e; 4],
                    Eta::PerMode(e) => *e,
                };
                apply_loss_ensemble(&ensemble, eta)?
            }
            Channel::Swap => ensemble.map_states(FockState::swap_polarization),
        };
        joint_probability *= probability;
        table.push(vec![
            Cell::from(i + 1),
            Cell::from(probability),
            Cell::from(ensemble.len()),
            Cell::from(ensemble.mean_total_photons()),
        ]);
    }

    let mut branches = Vec::new();
    let mut ranks = Vec::new();
    for (w, s) in ensemble.branches() {
        let coeffs = schmidt_coefficients(s);
        let rank = coeffs.iter().filter(|&&c| c > SCHMIDT_TOL).count();
        ranks.push(rank);
        let kets: Vec<Value> = s
            .iter()
            .map(|(o, amp)| json!({ "ket": o.to_string(), "occupation": o.counts(), "amplitude": [amp.re, amp.im] }))
            .collect();
        branches.push(json!({
            "weight": w,
            "kets": kets,
            "norm_deficit": s.norm_deficit(),
            "schmidt_coefficients": coeffs,
            "schmidt_rank": rank,
        }));
    }
    let summary = json!({
        "joint_probability": joint_probability,
        "branches": ensemble.len(),
        "schmidt_ranks": ranks,
        "n_max": n_max,
        "norm_deficit": ensemble.norm_deficit(),
    });
    Ok(Outcome {
        parameters: json!({ "script": serde_json::from_str::<Value>(&text).unwrap_or(Value::Null), "n_max": n_max }),
        report: Report {
            summary,
            tables: vec![table],
            documents: vec![("final", json!({ "branches": branches }))],
        },
        warnings: vec![],
        deferred: None,
    })
}

#[derive(Args, Debug)]
pub struct CavityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Per-pass gain; defaults to 0.1 unless --pair-gain is given.
    #[arg(long, conflicts_with = "pair_gain")]
    pub tau: Option<f64>,
    /// Mean pairs one pass creates from vacuum, `2 sinh² tau`.
    #[arg(long)]
    pub pair_gain: Option<f64>,
    /// Per-photon survival per round.
    #[arg(long, default_value_t = 0.975)]
    pub eta: f64,
    #[arg(long, default_value_t = 10)]
    pub rounds: u32,
    /// Pump phase advance per round (radians).
    #[arg(long, default_value_t = PI, allow_hyphen_values = true)]
    pub phase: f64,
    /// Half-wave plate in the cavity (default).
    #[arg(long, overrides_with = "no_swap")]
    pub swap: bool,
    #[arg(long)]
    pub no_swap: bool,
    /// Skip the exact trajectory; run only the moment model.
    #[arg(long)]
    pub rate_only: bool,
    /// Largest truncation tail a round may add.
    #[arg(long, default_value_t = 1e-6)]
    pub overflow_tol: f64,
}

/// Default cutoff for exact cavity trajectories.
const CAVITY_N_MAX: u32 = 24;

pub fn cavity(a: &CavityArgs) -> Result<Outcome, CliError> {
    let base = match a.pair_gain {
        Some(g) => CavityConfig::from_pair_gain(g)?,
        None => CavityConfig {
            tau_per_pass: a.tau.unwrap_or(0.1),
            ..CavityConfig::default()
        },
    };
    let cfg = CavityConfig {
        rounds: a.rounds,
        survival_eta: a.eta,
        phase_per_round: a.phase,
        halfwave_swap: !a.no_swap,
        n_max: a.common.nmax.unwrap_or(CAVITY_N_MAX),
        overflow_tol: a.overflow_tol,
        ..base
    };
    cfg.validate()?;

    let rates = rate_model(&cfg)?;
    let recursion = uncorrelated_pair_recursion(&cfg)?;
    let mut rate_table = Table::new("rate", &["round", "mean_photons", "mean_pairs", "uncorrelated_pairs"]);
    for (p, &n) in rates.iter().zip(&recursion) {
        rate_table.push(vec![Cell::from(p.round), Cell::from(p.mean_photons), Cell::from(p.mean_pairs), Cell::from(n)]);
    }
    let last_rate = rates.last().expect("round 0 is always present");
    let mut tables = vec![rate_table];
    let mut summary = json!({
        "tau_per_pass": cfg.tau_per_pass,
        "pair_gain_per_pulse": cfg.pair_gain_per_pulse(),
        "rate_final_mean_pairs": last_rate.mean_pairs,
        "rate_final_mean_photons": last_rate.mean_photons,
        "uncorrelated_final_mean_pairs": recursion.last(),
        "rounds_to_exceed_10_photons": rounds_to_exceed(&cfg, 10.0)?,
        "analytic_tail": analytic_tail(cfg.tau_per_pass, cfg.n_max),
    });

    let mut deferred = None;
    if !a.rate_only {
        let traj = simulate_cavity(&cfg)?;
        let mut t = Table::new("trajectory", &["round", "mean_photons", "mean_pairs", "norm_deficit"]);
        let mut s = Table::new("sectors", &["round", "n", "probability"]);
        let mut max_rel: f64 = 0.0;
        for r in &traj.records {
            t.push(vec![Cell::from(r.round), Cell::from(r.mean_photons), Cell::from(r.mean_pairs), Cell::from(r.norm_deficit)]);
            for (n, &p) in r.sector_probs.iter().enumerate() {
                s.push(vec![Cell::from(r.round), Cell::from(n), Cell::from(p)]);
            }
            let rate = rates[r.round as usize].mean_pairs;
            if rate > 0.0 {
                max_rel = max_rel.max((r.mean_pairs - rate).abs() / rate);
            }
        }
        tables.push(t);
        tables.push(s);
        let last = traj.records.last().expect("round 0 is always present");
        let map = summary.as_object_mut().expect("object");
        map.insert("exact_final_mean_pairs".into(), json!(last.mean_pairs));
        map.insert("exact_final_norm_deficit".into(), json!(last.norm_deficit));
        map.insert("max_relative_difference".into(), json!(max_rel));
        map.insert("overflow".into(), json!(traj.overflow));
        if let Some(o) = &traj.overflow {
            deferred = Some(CliError::Overflow(o.message.clone()));
        }
    }
    Ok(Outcome {
        parameters: json!({
            "tau_per_pass": cfg.tau_per_pass, "pair_gain": a.pair_gain, "eta": cfg.survival_eta,
            "rounds": cfg.rounds, "phase_per_round": cfg.phase_per_round, "halfwave_swap": cfg.halfwave_swap,
            "n_max": cfg.n_max, "overflow_tol": cfg.overflow_tol, "rate_only": a.rate_only,
        }),
        report: Report {
            summary,
            tables,
            documents: vec![],
        },
        warnings: vec![],
        deferred,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0:10:5", "beta").unwrap(), vec![0.0, 5.0, 10.0]);
        assert_eq!(parse_grid("1, 2,3", "beta").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_grid("0:10:0", "beta").is_err());
        assert!(parse_grid("x", "beta").is_err());
    }

    #[test]
    fn sector_initial_state_is_flat() {
        let s = initial_state(&Initial::PdcSector { n: 2 }, None).unwrap();
        assert_eq!(s.len(), 3);
        for (_, a) in s.iter() {
            assert!((a.norm_sqr() - 1.0 / 3.0).abs() < 1e-15);
        }
    }
}
