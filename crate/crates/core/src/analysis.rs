//! Speed metrics, coupling-product lower bounds, a gate-model comparator,
//! and Monte-Carlo robustness sweeps over manufacturing noise.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::{ChainSpec, TargetState};
use crate::error::{Error, Result};
use crate::spectral::{eigensystem, fidelity, synthesis_output};

/// Speed figures for a design measured against its reference chain.
#[derive(Debug, Clone)]
pub struct SpeedReport {
    pub j_max: f64,
    /// Dimensionless `J_max * t0`.
    pub j_max_t0: f64,
    /// Product of coupling magnitudes.
    pub coupling_product: f64,
    /// Finite-size lower bound on `J_max * t0` from the coupling-product
    /// identity and the integer spectrum.
    pub lower_bound_exact: f64,
    /// Large-size limit `pi (N - 1) / (2 e)`.
    pub lower_bound_asymptotic: f64,
    /// Relative error of `prod J = (alpha_N / alpha~_N) prod J~`.
    pub product_identity_rel_err: f64,
}

/// Lower bound on `J_max * t0` from the spectrum integers (one of which
/// must be zero), the zero-eigenvector weight `w` on site 1, and the end
/// amplitudes of the design and its reference:
/// `pi (w (alpha_N / alpha~_N) |prod_{n != k} m_n|)^{1/(N-1)}`.
/// Evaluated in the log domain so large spectra do not overflow.
pub fn coupling_lower_bound(integers: &[i64], w: f64, alpha_n: f64, alpha_n_ref: f64) -> f64 {
    let n = integers.len();
    assert!(n >= 2);
    assert!(w > 0.0 && alpha_n > 0.0 && alpha_n_ref > 0.0);
    let zeros = integers.iter().filter(|&&m| m == 0).count();
    assert_eq!(zeros, 1, "exactly one spectrum integer must be zero");
    let mut log_acc = w.ln() + (alpha_n / alpha_n_ref).ln();
    for &m in integers {
        if m != 0 {
            log_acc += (m.abs() as f64).ln();
        }
    }
    PI * (log_acc / (n as f64 - 1.0)).exp()
}

/// Measure a design's speed and verify the coupling-product identity
/// against the reference chain.
pub fn speed_report(
    chain: &ChainSpec,
    target: &TargetState,
    reference: &ChainSpec,
) -> Result<SpeedReport> {
    let n = chain.n_sites();
    assert_eq!(target.n_sites(), n);
    assert_eq!(reference.n_sites(), n);
    let t0 = target.t0();
    let j_max = chain.max_coupling();
    let coupling_product = chain.coupling_product();

    let ref_es = eigensystem(reference)?;
    let ref_out = synthesis_output(&ref_es);
    let alpha_n_ref = ref_out[n - 1].abs();
    let alpha_n = target.amplitudes()[n - 1].abs();
    let expected = alpha_n / alpha_n_ref * reference.coupling_product();
    let product_identity_rel_err = (coupling_product - expected).abs() / expected;

    // Recover the integer spectrum and shift the entry nearest zero onto it.
    let mut integers = Vec::with_capacity(n);
    for &l in ref_es.eigenvalues() {
        let x = l * t0 / PI;
        let m = x.round();
        if (x - m).abs() > 1e-6 {
            return Err(Error::InvalidChain(format!(
                "reference eigenvalue {l} is not on the pi/t0 lattice"
            )));
        }
        integers.push(m as i64);
    }
    let k = (0..n)
        .min_by_key(|&i| integers[i].abs())
        .expect("nonempty spectrum");
    let shift = integers[k];
    for m in &mut integers {
        *m -= shift;
    }
    let w = ref_es.first_row_weights()[k];
    let lower_bound_exact = coupling_lower_bound(&integers, w, alpha_n, alpha_n_ref);
    let lower_bound_asymptotic = PI * (n as f64 - 1.0) / (2.0 * std::f64::consts::E);

    Ok(SpeedReport {
        j_max,
        j_max_t0: j_max * t0,
        coupling_product,
        lower_bound_exact,
        lower_bound_asymptotic,
        product_identity_rel_err,
    })
}

/// Time (in units of `1/J_max`) for a sequence of partial swaps of uniform
/// strength to build the uniform superposition site by site: step `k`
/// leaves amplitude `1/sqrt(N)` behind, costing `arccos(1/sqrt(N+1-k))`.
pub fn gate_model_time(n_sites: usize, target: &TargetState) -> Result<f64> {
    let n = target.n_sites();
    if n != n_sites || n < 2 {
        return Err(Error::UnsupportedTarget(format!(
            "expected a {n_sites}-site uniform target"
        )));
    }
    let uniform = 1.0 / (n as f64).sqrt();
    if target.amplitudes().iter().any(|a| (a - uniform).abs() > 1e-9) {
        return Err(Error::UnsupportedTarget(
            "the gate comparator covers uniform superposition targets only".into(),
        ));
    }
    let mut total = 0.0;
    for k in 1..n {
        total += (1.0 / ((n + 1 - k) as f64).sqrt()).acos();
    }
    Ok(total)
}

/// One row of a robustness sweep.
#[derive(Debug, Clone)]
pub struct RobustnessReport {
    pub perturbation_fraction: f64,
    pub trials: usize,
    pub mean_fidelity: f64,
    pub best_fidelity: f64,
    pub std_fidelity: f64,
    pub rng_seed: u64,
}

/// How on-site fields are perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldPerturbation {
    /// Multiplicative like the couplings, except fields that are exactly
    /// zero receive an additive shift scaled by `eps * J_max` (a zero field
    /// is otherwise never perturbed).
    #[default]
    Auto,
    /// Strictly multiplicative.
    Multiplicative,
    /// Additive, scaled by `eps * J_max`.
    AdditiveJmax,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PerturbationConfig {
    pub field_mode: FieldPerturbation,
    /// Draw a single fraction per trial and apply it to every parameter.
    pub shared_draw: bool,
}

/// Monte-Carlo robustness sweep: for each fraction in `eps_grid`, perturb
/// every coupling (and field, per the default config) by an independent
/// uniform fraction and record the arrival fidelity. Deterministic for a
/// fixed seed; trials run in parallel with per-trial derived streams.
pub fn robustness_sweep(
    chain: &ChainSpec,
    target: &TargetState,
    eps_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<RobustnessReport>> {
    robustness_sweep_with(chain, target, eps_grid, trials, seed, PerturbationConfig::default())
}

pub fn robustness_sweep_with(
    chain: &ChainSpec,
    target: &TargetState,
    eps_grid: &[f64],
    trials: usize,
    seed: u64,
    config: PerturbationConfig,
) -> Result<Vec<RobustnessReport>> {
    assert!(trials >= 1);
    assert_eq!(chain.n_sites(), target.n_sites());
    let j_max = chain.max_coupling();
    let mut reports = Vec::with_capacity(eps_grid.len());
    for (eps_index, &eps) in eps_grid.iter().enumerate() {
        assert!(eps >= 0.0);
        let fidelities: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let stream = derive_stream(seed, eps_index as u64, trial as u64);
                let perturbed = perturb_chain(chain, eps, j_max, stream, config);
                match perturbed {
                    Ok(c) => fidelity(&c, target).map(|(f, _)| f).unwrap_or(0.0),
                    Err(_) => 0.0,
                }
            })
            .collect();
        // Reduce in fixed index order for bit-stable results.
        let mut sum = 0.0;
        let mut best = 0.0f64;
        for &f in &fidelities {
            sum += f;
            best = best.max(f);
        }
        let mean = sum / trials as f64;
        let var = if trials > 1 {
            fidelities.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>()
                / (trials as f64 - 1.0)
        } else {
            0.0
        };
        reports.push(RobustnessReport {
            perturbation_fraction: eps,
            trials,
            mean_fidelity: mean,
            best_fidelity: best,
            std_fidelity: var.sqrt(),
            rng_seed: seed,
        });
    }
    Ok(reports)
}

fn perturb_chain(
    chain: &ChainSpec,
    eps: f64,
    j_max: f64,
    stream: u64,
    config: PerturbationConfig,
) -> Result<ChainSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let draw = |rng: &mut ChaCha8Rng| -> f64 {
        if eps == 0.0 {
            0.0
        } else {
            rng.random_range(-eps..eps)
        }
    };
    let shared = config.shared_draw.then(|| draw(&mut rng));
    let couplings: Vec<f64> = chain
        .couplings()
        .iter()
        .map(|&j| {
            let d = shared.unwrap_or_else(|| draw(&mut rng));
            j * (1.0 + d)
        })
        .collect();
    let fields: Vec<f64> = chain
        .fields()
        .iter()
        .map(|&b| {
            let d = shared.unwrap_or_else(|| draw(&mut rng));
            match config.field_mode {
                FieldPerturbation::Multiplicative => b * (1.0 + d),
                FieldPerturbation::AdditiveJmax => b + d * j_max,
                FieldPerturbation::Auto => {
                    if b == 0.0 {
                        d * j_max
                    } else {
                        b * (1.0 + d)
                    }
                }
            }
        })
        .collect();
    ChainSpec::new(fields, couplings)
}

/// SplitMix-style mixer keyed by (seed, fraction index, trial index).
fn derive_stream(seed: u64, eps_index: u64, trial: u64) -> u64 {
    let mut x = seed
        ^ eps_index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ trial.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    x
}
