//! Perfect-state-transfer reference chains and the spectra compatible with
//! state synthesis at a fixed time.

use std::f64::consts::PI;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::inverse::{lanczos_reconstruct, persymmetric_weights};

/// Angular tolerance for the synthesis-spectrum test.
const PHASE_TOL: f64 = 1e-9;

/// A transfer-compatible spectrum, stored exactly as integers `m_n` with
/// eigenvalues `lambda_n = pi m_n / t0`.
///
/// Perfect transfer at `t0` requires `e^{-i lambda_n t0} = (-1)^{n+1}
/// e^{i phi}`, i.e. strictly decreasing integers whose parity alternates
/// from one entry to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct PstSpectrum {
    integers: Vec<i64>,
    t0: f64,
}

impl PstSpectrum {
    pub fn new(integers: Vec<i64>, t0: f64) -> Result<Self> {
        if integers.is_empty() {
            return Err(Error::InvalidChain("empty spectrum".into()));
        }
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::InvalidChain("transfer time must be positive".into()));
        }
        for w in integers.windows(2) {
            if w[0] <= w[1] {
                return Err(Error::InvalidChain(
                    "spectrum integers must be strictly decreasing".into(),
                ));
            }
            if (w[0] - w[1]) % 2 == 0 {
                return Err(Error::InvalidChain(format!(
                    "consecutive integers {} and {} share a parity; the \
                     evolution phases cannot alternate",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { integers, t0 })
    }

    /// Consecutive integers centred as close to zero as possible; the
    /// default spectrum for every designer.
    pub fn linear(n_sites: usize, t0: f64) -> Result<Self> {
        let offset = (n_sites as i64 + 1).div_euclid(2);
        let integers = (1..=n_sites as i64).map(|k| offset - k).collect();
        Self::new(integers, t0)
    }

    pub fn n_sites(&self) -> usize {
        self.integers.len()
    }

    pub fn integers(&self) -> &[i64] {
        &self.integers
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn scale(&self) -> f64 {
        PI / self.t0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let s = self.scale();
        self.integers.iter().map(|&m| s * m as f64).collect()
    }

    /// True when the integers are symmetric about zero, which forces all
    /// on-site fields of the reconstructed chain to vanish.
    pub fn is_symmetric(&self) -> bool {
        let n = self.integers.len();
        (0..n).all(|i| self.integers[i] == -self.integers[n - 1 - i])
    }
}

/// The analytic transfer chain with zero fields and couplings
/// `J_k = s sqrt(k (N - k))`, scaled so transfer completes at `t0`.
pub fn christandl_chain(n_sites: usize, t0: f64) -> ChainSpec {
    assert!(n_sites >= 2, "a transfer chain needs at least two sites");
    assert!(t0 > 0.0);
    let s = PI / (2.0 * t0);
    let couplings = (1..n_sites)
        .map(|k| s * ((k * (n_sites - k)) as f64).sqrt())
        .collect();
    ChainSpec::new(vec![0.0; n_sites], couplings).expect("couplings are positive")
}

/// Mirror-symmetric chain with the given spectrum; it performs perfect
/// transfer at the spectrum's `t0`.
pub fn pst_chain_from_spectrum(spectrum: &PstSpectrum) -> Result<ChainSpec> {
    let data = persymmetric_weights(&spectrum.eigenvalues())?;
    lanczos_reconstruct(&data)
}

/// True when some global phase lines every `e^{i(phi + lambda_n t0)}` up
/// with the real axis, the necessary condition for synthesising a real
/// target at `t0`.
pub fn validate_synthesis_spectrum(eigenvalues: &[f64], t0: f64) -> bool {
    if eigenvalues.is_empty() || !(t0 > 0.0) {
        return false;
    }
    let first = eigenvalues[0];
    eigenvalues.iter().all(|&l| {
        let x = (l - first) * t0 / PI;
        (x - x.round()).abs() * PI <= PHASE_TOL
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::chain::TargetState;
    use crate::spectral::{eigensystem, fidelity};

    #[test]
    fn five_site_christandl_couplings() {
        let chain = christandl_chain(5, FRAC_PI_2);
        let want = [2.0, 6.0f64.sqrt(), 6.0f64.sqrt(), 2.0];
        for (got, want) in chain.couplings().iter().zip(want) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn two_site_christandl_is_single_swap() {
        let chain = christandl_chain(2, FRAC_PI_2);
        assert!((chain.couplings()[0] - 1.0).abs() < 1e-15);
        let target = TargetState::localized(2, 2).unwrap();
        let (f, _) = fidelity(&chain, &target).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn christandl_transfer_at_many_sizes() {
        for n in [3usize, 8, 21] {
            let chain = christandl_chain(n, FRAC_PI_2);
            let target = TargetState::localized(n, n).unwrap();
            let (f, _) = fidelity(&chain, &target).unwrap();
            assert!((f - 1.0).abs() < 1e-10, "n = {n}: fidelity {f}");
        }
    }

    #[test]
    fn spectrum_parity_is_enforced() {
        // Integers (1, -1) skip a parity class: no global phase exists.
        assert!(PstSpectrum::new(vec![1, -1], FRAC_PI_2).is_err());
        PstSpectrum::new(vec![1, 0], FRAC_PI_2).unwrap();
        PstSpectrum::new(vec![3, 0], FRAC_PI_2).unwrap();
        assert!(PstSpectrum::new(vec![0, 1], FRAC_PI_2).is_err());
    }

    #[test]
    fn linear_spectrum_shapes() {
        let s = PstSpectrum::linear(5, FRAC_PI_2).unwrap();
        assert_eq!(s.integers(), &[2, 1, 0, -1, -2]);
        assert!(s.is_symmetric());
        let s = PstSpectrum::linear(4, FRAC_PI_2).unwrap();
        assert_eq!(s.integers(), &[1, 0, -1, -2]);
        assert!(!s.is_symmetric());
    }

    #[test]
    fn five_site_spectrum_reconstruction() {
        let spectrum = PstSpectrum::new(vec![2, 1, 0, -1, -2], FRAC_PI_2).unwrap();
        let chain = pst_chain_from_spectrum(&spectrum).unwrap();
        let want = [2.0, 6.0f64.sqrt(), 6.0f64.sqrt(), 2.0];
        for (got, want) in chain.couplings().iter().zip(want) {
            assert!((got - want).abs() < 1e-10);
        }
        let es = eigensystem(&chain).unwrap();
        for (got, want) in es.eigenvalues().iter().zip([4.0, 2.0, 0.0, -2.0, -4.0]) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn gapped_spectrum_still_transfers() {
        let spectrum = PstSpectrum::new(vec![4, 1, 0, -1, -4], FRAC_PI_2).unwrap();
        let chain = pst_chain_from_spectrum(&spectrum).unwrap();
        let target = TargetState::localized(5, 5).unwrap();
        let (f, _) = fidelity(&chain, &target).unwrap();
        assert!((f - 1.0).abs() < 1e-8);
    }

    #[test]
    fn even_gap_spectrum_fails_to_transfer() {
        // Integers (3, 1, 0, -1, -3) skip a parity class between the first
        // two entries, so the evolution phases cannot alternate and the
        // persymmetric chain does not transfer. The constructor rejects it.
        assert!(PstSpectrum::new(vec![3, 1, 0, -1, -3], FRAC_PI_2).is_err());
        let data = crate::inverse::persymmetric_weights(&[6.0, 2.0, 0.0, -2.0, -6.0]).unwrap();
        let chain = crate::inverse::lanczos_reconstruct(&data).unwrap();
        let target = TargetState::localized(5, 5).unwrap();
        let (f, _) = fidelity(&chain, &target).unwrap();
        assert!(f < 0.95, "even-gap spectrum unexpectedly transfers (f = {f})");
    }

    #[test]
    fn even_size_spectrum_transfers() {
        let spectrum = PstSpectrum::linear(6, FRAC_PI_2).unwrap();
        let chain = pst_chain_from_spectrum(&spectrum).unwrap();
        let target = TargetState::localized(6, 6).unwrap();
        let (f, _) = fidelity(&chain, &target).unwrap();
        assert!((f - 1.0).abs() < 1e-8);
    }

    #[test]
    fn synthesis_spectrum_checks() {
        assert!(validate_synthesis_spectrum(&[4.0, 2.0, 0.0, -2.0, -4.0], FRAC_PI_2));
        assert!(!validate_synthesis_spectrum(&[1.0, 0.0], FRAC_PI_2));
        assert!(!validate_synthesis_spectrum(
            &[2f64.sqrt(), 0.0, -(2f64.sqrt())],
            FRAC_PI_2
        ));
        // A uniform shift is only a global phase.
        assert!(validate_synthesis_spectrum(&[4.7, 2.7, 0.7, -1.3, -3.3], FRAC_PI_2));
    }

    #[test]
    fn coupling_product_matches_characteristic_derivative() {
        // prod J = w |p'(0)| for symmetric spectra containing zero.
        for n in [5usize, 9, 15] {
            let spectrum = PstSpectrum::linear(n, FRAC_PI_2).unwrap();
            let chain = pst_chain_from_spectrum(&spectrum).unwrap();
            let es = eigensystem(&chain).unwrap();
            let eigenvalues = es.eigenvalues();
            let k = eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .unwrap()
                .0;
            assert!(eigenvalues[k].abs() < 1e-9);
            let w = es.first_row_weights()[k];
            let p_prime: f64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| (eigenvalues[k] - eigenvalues[j]).abs())
                .product();
            let lhs = chain.coupling_product();
            let rhs = w * p_prime;
            assert!(
                (lhs - rhs).abs() <= 1e-8 * rhs,
                "n = {n}: {lhs} vs {rhs}"
            );
        }
    }
}
