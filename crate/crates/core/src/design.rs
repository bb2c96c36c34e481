//! Output type shared by all designers, plus the sign-gauge adjustment that
//! aligns a reconstructed chain's arrival amplitudes with a requested
//! target.

use crate::chain::{ChainSpec, TargetState};
use crate::error::Result;
use crate::spectral::fidelity;

/// Solver bookkeeping attached to a design.
#[derive(Debug, Clone, Default)]
pub struct DesignDiagnostics {
    /// Scalar root parameter for the single-parameter families.
    pub root_parameter: Option<f64>,
    /// Newton / refinement iterations spent.
    pub iterations: usize,
    /// Final residual of the design equations.
    pub residual: f64,
}

/// A designed chain together with how well it realises its target.
#[derive(Debug, Clone)]
pub struct DesignResult {
    pub chain: ChainSpec,
    pub target: TargetState,
    /// `|<target| e^{-i H t0} |input>|`, from direct simulation.
    pub fidelity: f64,
    /// Phase of that overlap.
    pub phase: f64,
    /// First column of the coefficient table that generated the design.
    pub beta_first_column: Vec<f64>,
    /// First-site weights fed into the reconstruction.
    pub weights: Vec<f64>,
    pub diagnostics: DesignDiagnostics,
}

/// Re-gauge `chain` (sign conjugation, which flips coupling signs but no
/// observable probability) so its real arrival amplitudes match the signs of
/// `target` wherever both are resolvably nonzero. Sites where either value
/// is negligible inherit the previous sign, keeping coupling flips minimal.
pub fn gauge_match(chain: &ChainSpec, achieved: &[f64], target: &[f64]) -> ChainSpec {
    let n = chain.n_sites();
    assert_eq!(achieved.len(), n);
    assert_eq!(target.len(), n);
    const RESOLVED: f64 = 1e-9;
    let mut signs = vec![1.0; n];
    let mut prev = 1.0;
    for i in 0..n {
        if achieved[i].abs() > RESOLVED && target[i].abs() > RESOLVED {
            prev = if achieved[i] * target[i] < 0.0 { -1.0 } else { 1.0 };
        }
        signs[i] = prev;
    }
    chain.gauge(&signs)
}

/// Assemble a [`DesignResult`]: gauge the chain onto the requested target,
/// then measure the fidelity by direct simulation.
pub fn finalize_design(
    chain: ChainSpec,
    achieved: &[f64],
    target: TargetState,
    beta_first_column: Vec<f64>,
    weights: Vec<f64>,
    diagnostics: DesignDiagnostics,
) -> Result<DesignResult> {
    let chain = gauge_match(&chain, achieved, target.amplitudes());
    let (fid, phase) = fidelity(&chain, &target)?;
    Ok(DesignResult {
        chain,
        target,
        fidelity: fid,
        phase,
        beta_first_column,
        weights,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauge_match_flips_requested_signs() {
        let chain = ChainSpec::new(vec![0.0; 3], vec![1.0, 2.0]).unwrap();
        let achieved = [0.6, 0.0, 0.8];
        let target = [0.6, 0.0, -0.8];
        let gauged = gauge_match(&chain, &achieved, &target);
        // Site 3 must flip: the coupling into it changes sign.
        assert_eq!(gauged.couplings(), &[1.0, -2.0]);
        assert_eq!(gauged.fields(), chain.fields());
    }

    #[test]
    fn gauge_match_is_identity_when_signs_agree() {
        let chain = ChainSpec::new(vec![0.1, 0.2, 0.3], vec![1.0, 2.0]).unwrap();
        let a = [0.6, 0.0, 0.8];
        let gauged = gauge_match(&chain, &a, &a);
        assert_eq!(gauged, chain);
    }
}
