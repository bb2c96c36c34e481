//! Folding an end-released design into a chain released from the middle.
//!
//! Given an `N`-site chain evolving `|1>` into a target, the extended chain
//! on `2N - 1` sites mirrors the fields and couplings about the centre and
//! splits the innermost coupling into `J_1 cos(theta)` and `J_1 sin(theta)`.
//! Releasing the excitation from the middle site then reproduces the
//! original evolution inside the invariant subspace spanned by
//! `|n'> = cos(theta) |N+1-n> + sin(theta) |N-1+n>` (with `|1'> = |N>`).

use std::f64::consts::FRAC_PI_2;

use crate::chain::{ChainSpec, TargetState};
use crate::error::{Error, Result};

/// Build the `2N - 1`-site middle-release chain. `theta` controls how the
/// amplitude splits between the two arms; `pi/4` splits evenly.
pub fn extend_from_middle(chain: &ChainSpec, theta: f64) -> Result<ChainSpec> {
    let n = chain.n_sites();
    if n < 2 {
        return Err(Error::InvalidChain(
            "extension needs at least two sites".into(),
        ));
    }
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Error::InvalidChain(format!(
            "theta = {theta} outside (0, pi/2) zeroes a coupling"
        )));
    }
    let b = chain.fields();
    let j = chain.couplings();
    let total = 2 * n - 1;

    // 1-indexed site s maps to source field index 1 + |s - N|.
    let fields: Vec<f64> = (1..=total).map(|s| b[s.abs_diff(n)]).collect();

    let mut couplings = Vec::with_capacity(total - 1);
    for s in 1..total {
        if s == n - 1 {
            couplings.push(j[0] * theta.cos());
        } else if s == n {
            couplings.push(j[0] * theta.sin());
        } else if s < n - 1 {
            couplings.push(j[n - 1 - s]);
        } else {
            couplings.push(j[s - n]);
        }
    }
    ChainSpec::new(fields, couplings)
}

/// Where an end-released target lands after the middle-release extension:
/// amplitude `alpha_1` stays on the centre site and each `alpha_n` splits
/// into `cos(theta)` at site `N + 1 - n` and `sin(theta)` at `N - 1 + n`.
pub fn predict_extended_target(target: &TargetState, theta: f64) -> Result<TargetState> {
    if target.input_site() != 1 {
        return Err(Error::UnsupportedTarget(
            "the extension maps designs released from site 1".into(),
        ));
    }
    let n = target.n_sites();
    if n < 2 {
        return Err(Error::UnsupportedTarget("extension needs at least two sites".into()));
    }
    let alpha = target.amplitudes();
    let total = 2 * n - 1;
    let mut out = vec![0.0; total];
    out[n - 1] = alpha[0];
    for site in 2..=n {
        let a = alpha[site - 1];
        out[n - site] += theta.cos() * a;
        out[n - 2 + site] += theta.sin() * a;
    }
    TargetState::with_input(out, n, target.t0())
}

/// The embedded basis vector `|n'>` (1-indexed) as a dense vector on the
/// extended chain; used to verify the invariant-subspace property.
pub fn embedded_basis_vector(n_sites: usize, n: usize, theta: f64) -> Vec<f64> {
    assert!(n >= 1 && n <= n_sites);
    let total = 2 * n_sites - 1;
    let mut v = vec![0.0; total];
    if n == 1 {
        v[n_sites - 1] = 1.0;
    } else {
        v[n_sites - n] = theta.cos();
        v[n_sites - 2 + n] = theta.sin();
    }
    v
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use super::*;
    use crate::pst::christandl_chain;
    use crate::spectral::{eigensystem, fidelity};

    #[test]
    fn three_site_layout() {
        let chain = ChainSpec::new(vec![0.1, 0.2, 0.3], vec![1.0, 2.0]).unwrap();
        let ext = extend_from_middle(&chain, FRAC_PI_4).unwrap();
        assert_eq!(ext.n_sites(), 5);
        assert_eq!(ext.fields(), &[0.3, 0.2, 0.1, 0.2, 0.3]);
        let c = ext.couplings();
        assert!((c[0] - 2.0).abs() < 1e-15);
        assert!((c[1] - FRAC_PI_4.cos()).abs() < 1e-15);
        assert!((c[2] - FRAC_PI_4.sin()).abs() < 1e-15);
        assert!((c[3] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn subspace_restriction_equals_original() {
        let chain = christandl_chain(6, FRAC_PI_2);
        let theta = 0.9;
        let ext = extend_from_middle(&chain, theta).unwrap();
        let n = chain.n_sites();
        // <m'|H'|n'> must reproduce the original matrix elements.
        let mut h = vec![vec![0.0; n]; n];
        for i in 0..n {
            h[i][i] = chain.fields()[i];
            if i + 1 < n {
                h[i][i + 1] = chain.couplings()[i];
                h[i + 1][i] = chain.couplings()[i];
            }
        }
        for row in 1..=n {
            let vr = embedded_basis_vector(n, row, theta);
            let hv = ext.apply(&vr);
            for col in 1..=n {
                let vc = embedded_basis_vector(n, col, theta);
                let got: f64 = hv.iter().zip(&vc).map(|(a, b)| a * b).sum();
                assert!(
                    (got - h[row - 1][col - 1]).abs() < 1e-12,
                    "restriction mismatch at ({row}, {col})"
                );
            }
        }
    }

    #[test]
    fn spectrum_contains_original() {
        let chain = christandl_chain(5, FRAC_PI_2);
        let ext = extend_from_middle(&chain, 0.7).unwrap();
        let small = eigensystem(&chain).unwrap();
        let big = eigensystem(&ext).unwrap();
        for lam in small.eigenvalues() {
            let hit = big
                .eigenvalues()
                .iter()
                .any(|l| (l - lam).abs() < 1e-8);
            assert!(hit, "eigenvalue {lam} missing from the extension");
        }
    }

    #[test]
    fn transfer_chain_extends_to_even_end_split() {
        let n = 6;
        let chain = christandl_chain(n, FRAC_PI_2);
        let target = TargetState::localized(n, n).unwrap();
        let predicted = predict_extended_target(&target, FRAC_PI_4).unwrap();
        let amps = predicted.amplitudes();
        // The transferred end amplitude splits evenly over the two far ends.
        assert!((amps[0] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((amps[2 * n - 2] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(predicted.input_site(), n);

        let ext = extend_from_middle(&chain, FRAC_PI_4).unwrap();
        let (f, _) = fidelity(&ext, &predicted).unwrap();
        assert!((f - 1.0).abs() < 1e-9, "fidelity {f}");
    }

    #[test]
    fn predicted_target_site_map() {
        let alpha = vec![0.3, -0.5, 0.2, 0.4, (1.0f64 - 0.54).sqrt()];
        let target = TargetState::new(alpha.clone()).unwrap();
        let theta = std::f64::consts::FRAC_PI_3;
        let predicted = predict_extended_target(&target, theta).unwrap();
        let n = 5;
        let out = predicted.amplitudes();
        let norm2: f64 = out.iter().map(|x| x * x).sum();
        assert!((norm2 - 1.0).abs() < 1e-12);
        assert!((out[n - 1] - alpha[0]).abs() < 1e-12);
        for site in 2..=n {
            assert!((out[n - site] - theta.cos() * alpha[site - 1]).abs() < 1e-12);
            assert!((out[n - 2 + site] - theta.sin() * alpha[site - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_degenerate_theta() {
        let chain = christandl_chain(4, FRAC_PI_2);
        assert!(extend_from_middle(&chain, 0.0).is_err());
        assert!(extend_from_middle(&chain, FRAC_PI_2).is_err());
    }
}
