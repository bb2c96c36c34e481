//! Numerical designer for arbitrary real targets: iterate on the first-site
//! weights at fixed spectrum, starting from a geometric profile. Each
//! iterate reconstructs a chain, so the spectrum is preserved exactly
//! throughout.

use crate::basis::v_basis_from;
use crate::chain::{ChainSpec, TargetState};
use crate::design::{finalize_design, DesignDiagnostics, DesignResult};
use crate::error::{Error, Result};
use crate::inverse::chain_from_v1;
use crate::linalg::{bisect, LuFactor, Matrix};
use crate::pst::{pst_chain_from_spectrum, PstSpectrum};
use crate::revival::ParityReduction;
use crate::solver::fd_jacobian;
use crate::spectral::{eigensystem, synthesis_output};

/// Configuration for [`refine`].
#[derive(Debug, Clone)]
pub struct SolverConfig {
    spectrum: PstSpectrum,
    pub max_iterations: usize,
    /// Convergence threshold on `1 - fidelity`.
    pub residual_tol: f64,
    /// Step-halving factor in (0, 1].
    pub damping: f64,
    /// Restrict iterates to mirror-symmetric weights (zero-field chains).
    parity_mask: Option<ParityReduction>,
}

impl SolverConfig {
    pub fn new(spectrum: PstSpectrum) -> Self {
        Self {
            spectrum,
            max_iterations: 200,
            residual_tol: 1e-12,
            damping: 0.5,
            parity_mask: None,
        }
    }

    pub fn spectrum(&self) -> &PstSpectrum {
        &self.spectrum
    }

    pub fn with_parity(mut self, mask: ParityReduction) -> Self {
        self.parity_mask = Some(mask);
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        assert!(tol > 0.0);
        self.residual_tol = tol;
        self
    }
}

/// Geometric initial weights `w_n` proportional to `r^n`, with the ratio
/// fixed so the revival amplitude on site 1 comes out near `alpha1`:
/// `(1 - r)(1 + r^N) / ((1 + r)(1 - r^N)) = alpha1`. The profile only
/// reaches `alpha1` in `[1/N, 1)`; at or below `1/N` it degenerates to the
/// uniform `r -> 1` limit, which is returned directly.
pub fn initial_guess(n_sites: usize, alpha1: f64) -> Result<Vec<f64>> {
    if n_sites == 0 {
        return Err(Error::RootNotBracketed("empty chain".into()));
    }
    let n = n_sites as f64;
    if !(0.0..1.0).contains(&alpha1) {
        return Err(Error::RootNotBracketed(format!(
            "alpha_1 = {alpha1} outside the reachable range [0, 1) of the geometric profile"
        )));
    }
    if alpha1 <= 1.0 / n {
        return Ok(vec![1.0 / n; n_sites]);
    }
    let g = |r: f64| -> f64 {
        let rn = r.powi(n_sites as i32);
        (1.0 - r) * (1.0 + rn) / ((1.0 + r) * (1.0 - rn)) - alpha1
    };
    // g decreases from ~1 at r -> 0 to 1/N at r -> 1.
    let r = bisect(&g, 1e-12, 1.0 - 1e-12);
    let mut weights: Vec<f64> = (1..=n_sites).map(|k| r.powi(k as i32)).collect();
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    Ok(weights)
}

/// How the weight vector is parametrised during refinement.
enum WeightParam {
    /// Free entries `w_2..w_N`; `w_1` soaks up the normalisation.
    Full { n: usize },
    /// Mirror-symmetric pairs (odd `N`); the centre soaks up the
    /// normalisation. Keeps every iterate's fields exactly zero.
    Symmetric { n: usize },
}

impl WeightParam {
    fn pack(&self, w: &[f64]) -> Vec<f64> {
        match *self {
            WeightParam::Full { .. } => w[1..].to_vec(),
            WeightParam::Symmetric { n } => (0..(n - 1) / 2)
                .map(|i| 0.5 * (w[i] + w[n - 1 - i]))
                .collect(),
        }
    }

    fn unpack(&self, theta: &[f64]) -> Option<Vec<f64>> {
        let w = match *self {
            WeightParam::Full { n } => {
                let mut w = Vec::with_capacity(n);
                let tail: f64 = theta.iter().sum();
                w.push(1.0 - tail);
                w.extend_from_slice(theta);
                w
            }
            WeightParam::Symmetric { n } => {
                let mut w = vec![0.0; n];
                let mut tail = 0.0;
                for (i, &v) in theta.iter().enumerate() {
                    w[i] = v;
                    w[n - 1 - i] = v;
                    tail += 2.0 * v;
                }
                w[(n - 1) / 2] = 1.0 - tail;
                w
            }
        };
        w.iter().all(|&x| x > 0.0).then_some(w)
    }
}

/// Refine starting weights until the chain realises `target` to the
/// configured tolerance on `1 - fidelity`. Gauss-Newton on the free
/// weights, with a constraint row pinning the revival amplitude on site 1
/// to the target's `alpha_1`; steps that leave the positive-weight cone or
/// fail to reduce `1 - fidelity` are damped.
pub fn refine(target: &TargetState, start: &[f64], config: &SolverConfig) -> Result<DesignResult> {
    let n = config.spectrum.n_sites();
    if target.n_sites() != n || start.len() != n {
        return Err(Error::UnsupportedTarget(format!(
            "target and start must have {n} sites"
        )));
    }
    if target.input_site() != 1 {
        return Err(Error::UnsupportedTarget(
            "the designer releases the excitation from site 1".into(),
        ));
    }
    if start.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidWeights("start weights must be positive".into()));
    }
    let start_sum: f64 = start.iter().sum();
    if (start_sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidWeights(format!(
            "start weights must sum to 1 (got {start_sum})"
        )));
    }

    let param = match &config.parity_mask {
        Some(_) => {
            if n % 2 == 0 {
                return Err(Error::PatternMismatch(
                    "parity-constrained refinement needs an odd chain".into(),
                ));
            }
            if !config.spectrum.is_symmetric() {
                return Err(Error::PatternMismatch(
                    "parity-constrained refinement needs a symmetric spectrum".into(),
                ));
            }
            let alpha = target.amplitudes();
            if (0..n).any(|i| (n - (i + 1)) % 2 == 1 && alpha[i] != 0.0) {
                return Err(Error::PatternMismatch(
                    "target has weight on an excluded-parity site".into(),
                ));
            }
            WeightParam::Symmetric { n }
        }
        None => WeightParam::Full { n },
    };

    let eigenvalues = config.spectrum.eigenvalues();
    let reference = pst_chain_from_spectrum(&config.spectrum)?;
    let ref_es = eigensystem(&reference)?;
    let vb_lu = LuFactor::new(&v_basis_from(&ref_es)).map_err(Error::InvalidChain)?;
    let alpha = target.amplitudes().to_vec();
    let alpha1 = alpha[0];

    struct Iterate {
        weights: Vec<f64>,
        chain: ChainSpec,
        output: Vec<f64>,
        merit: f64,
    }

    let assemble = |w: &[f64]| -> Option<Iterate> {
        let sum: f64 = w.iter().sum();
        let weights: Vec<f64> = w.iter().map(|x| x / sum).collect();
        let chain = chain_from_v1(&weights, &eigenvalues).ok()?;
        let es = eigensystem(&chain).ok()?;
        let output = synthesis_output(&es);
        let overlap: f64 = output.iter().zip(&alpha).map(|(a, b)| a * b).sum();
        let merit = 1.0 - overlap.abs();
        Some(Iterate { weights, chain, output, merit })
    };

    // Residual: amplitude mismatch plus the beta_N = alpha_1 constraint row.
    let residual = |theta: &[f64]| -> Option<Vec<f64>> {
        let w = param.unpack(theta)?;
        let it = assemble(&w)?;
        let beta = vb_lu.solve(&it.weights);
        let mut r: Vec<f64> = it.output.iter().zip(&alpha).map(|(a, b)| a - b).collect();
        r.push(beta[n - 1] - alpha1);
        Some(r)
    };

    let mut theta = param.pack(start);
    let mut current = param
        .unpack(&theta)
        .and_then(|w| assemble(&w))
        .ok_or_else(|| Error::InvalidWeights("start weights are infeasible".into()))?;
    let mut best = (theta.clone(), current.merit);

    let mut iterations = 0;
    while current.merit > config.residual_tol && iterations < config.max_iterations {
        let r0 = residual(&theta)
            .ok_or_else(|| Error::InvalidWeights("iterate left the feasible region".into()))?;
        let jac = match fd_jacobian(&residual, &theta, &r0, 1e-7) {
            Some(j) => j,
            None => break,
        };
        let delta = match gauss_newton_step(&jac, &r0) {
            Some(d) => d,
            None => break,
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let trial: Vec<f64> = theta.iter().zip(&delta).map(|(a, b)| a + t * b).collect();
            if let Some(it) = param.unpack(&trial).and_then(|w| assemble(&w)) {
                if it.merit < current.merit {
                    theta = trial;
                    current = it;
                    accepted = true;
                    break;
                }
            }
            t *= config.damping;
        }
        iterations += 1;
        if !accepted {
            break;
        }
        if current.merit < best.1 {
            best = (theta.clone(), current.merit);
        }
    }

    if current.merit > config.residual_tol {
        let best_design = param
            .unpack(&best.0)
            .and_then(|w| assemble(&w))
            .and_then(|it| {
                let beta = vb_lu.solve(&it.weights);
                finalize_design(
                    it.chain,
                    &it.output,
                    target.clone(),
                    beta,
                    it.weights,
                    DesignDiagnostics {
                        root_parameter: None,
                        iterations,
                        residual: it.merit,
                    },
                )
                .ok()
            });
        return Err(Error::ConvergenceFailure {
            iterations,
            residual: current.merit,
            best: best_design.map(Box::new),
        });
    }

    if config.parity_mask.is_some() {
        debug_assert!(
            current.chain.fields().iter().all(|b| b.abs() < 1e-10),
            "parity iterate grew nonzero fields"
        );
    }
    let beta = vb_lu.solve(&current.weights);
    finalize_design(
        current.chain.clone(),
        &current.output,
        target.clone(),
        beta,
        current.weights.clone(),
        DesignDiagnostics {
            root_parameter: None,
            iterations,
            residual: current.merit,
        },
    )
}

fn gauss_newton_step(jac: &Matrix, r: &[f64]) -> Option<Vec<f64>> {
    let m = jac.nrows();
    let n = jac.ncols();
    let mut jtj = Matrix::zeros(n, n);
    let mut rhs = vec![0.0; n];
    let mut trace = 0.0;
    for a in 0..n {
        for b in a..n {
            let mut acc = 0.0;
            for i in 0..m {
                acc += jac.at(i, a) * jac.at(i, b);
            }
            jtj.set(a, b, acc);
            jtj.set(b, a, acc);
            if a == b {
                trace += acc;
            }
        }
        let mut acc = 0.0;
        for i in 0..m {
            acc -= jac.at(i, a) * r[i];
        }
        rhs[a] = acc;
    }
    let mu = 1e-12 * (trace / n as f64).max(1e-300);
    for a in 0..n {
        jtj.set(a, a, jtj.at(a, a) + mu);
    }
    let step = LuFactor::new(&jtj).ok()?.solve(&rhs);
    step.iter().all(|v| v.is_finite()).then_some(step)
}

/// Cross-validation of the moment identities: recover the fields and
/// squared couplings of a designed chain from its coefficient table and the
/// reference chain alone, via
/// `B_n = <1|H~^n|b_n> / <1|H~^{n-1}|b_n> - <1|H~^{n-1}|b_{n-1}> / <1|H~^{n-2}|b_{n-1}>`
/// and the matching second-moment identity for `J_n^2`, where `|b_n>` is
/// column `n` of the table read as a site vector.
pub fn moment_fields(
    table: &crate::basis::BetaTable,
    reference: &ChainSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = table.n_sites();
    assert_eq!(reference.n_sites(), n);
    // u_p = H~^p e_1, p = 0..=N.
    let mut powers: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut u = vec![0.0; n];
    u[0] = 1.0;
    powers.push(u.clone());
    for _ in 0..n {
        u = reference.apply(&u);
        powers.push(u.clone());
    }
    let moment = |p: usize, col: usize| -> f64 {
        powers[p]
            .iter()
            .zip(table.matrix().column(col))
            .map(|(a, b)| a * b)
            .sum()
    };

    const DENOM_TOL: f64 = 1e-12;
    let mut fields = Vec::with_capacity(n);
    let mut couplings_sq = Vec::with_capacity(n - 1);
    for c in 0..n {
        let denom = moment(c, c);
        if denom.abs() < DENOM_TOL {
            return Err(Error::DegenerateMoment { column: c + 1, value: denom });
        }
        let mut b = moment(c + 1, c) / denom;
        if c > 0 {
            let prev = moment(c - 1, c - 1);
            if prev.abs() < DENOM_TOL {
                return Err(Error::DegenerateMoment { column: c, value: prev });
            }
            b -= moment(c, c - 1) / prev;
        }
        fields.push(b);
        if c + 1 < n {
            let mut j_sq = moment(c + 2, c) / denom - b * (moment(c + 1, c) / denom);
            if c > 0 {
                j_sq -= moment(c + 1, c - 1) / moment(c - 1, c - 1);
            }
            couplings_sq.push(j_sq);
        }
    }
    Ok((fields, couplings_sq))
}
