//! Reconstruction of a chain from its spectrum and first-site eigenvector
//! weights, the inverse of [`crate::spectral::eigensystem`].
//!
//! The three-term recurrence that generates the fields and couplings is the
//! Lanczos iteration for the diagonal matrix `diag(lambda)` started from the
//! vector of square-rooted weights. Each residual is re-orthogonalised
//! against the full Krylov basis, which keeps the recurrence accurate well
//! past the ~40 sites where the bare iteration loses orthogonality.

use crate::chain::ChainSpec;
use crate::error::{Error, Result};

/// Spectrum paired with first-site weights `w_n = lambda_{n,1}^2`.
///
/// All weights must be strictly positive (a vanishing weight disconnects
/// site 1 from an eigenvector and breaks the recurrence) and sum to one;
/// eigenvalues must be strictly decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
    weights: Vec<f64>,
}

impl SpectralData {
    /// Tolerance on the weight sum at construction; the stored weights are
    /// renormalised exactly afterwards.
    pub const WEIGHT_SUM_TOL: f64 = 1e-10;

    pub fn new(eigenvalues: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if eigenvalues.len() != weights.len() || eigenvalues.is_empty() {
            return Err(Error::InvalidWeights(
                "eigenvalues and weights must have equal nonzero length".into(),
            ));
        }
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidChain("non-finite eigenvalue".into()));
        }
        if eigenvalues.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidChain(
                "eigenvalues must be strictly decreasing".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidWeights("weights must be strictly positive".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!(
                "weights must sum to 1 (got {sum})"
            )));
        }
        let weights = weights.iter().map(|w| w / sum).collect();
        Ok(Self { eigenvalues, weights })
    }

    pub fn n_sites(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Reconstruct the unique chain with positive couplings realising the given
/// spectrum and first-site weights.
///
/// Fails with [`Error::NumericalBreakdown`] when a squared coupling falls
/// below `1e-12 * max(lambda)^2`, which signals inconsistent data.
pub fn lanczos_reconstruct(data: &SpectralData) -> Result<ChainSpec> {
    let n = data.n_sites();
    let lambda = data.eigenvalues();
    let scale = lambda.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let breakdown = 1e-12 * scale * scale;

    let mut fields = Vec::with_capacity(n);
    let mut couplings = Vec::with_capacity(n.saturating_sub(1));

    // Krylov basis over the eigenvalue index; q[0] is sqrt(w), normalised.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut q: Vec<f64> = data.weights().iter().map(|w| w.sqrt()).collect();
    let norm = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= norm);
    basis.push(q);

    for m in 0..n {
        let q = &basis[m];
        let hq: Vec<f64> = q.iter().zip(lambda).map(|(qi, li)| qi * li).collect();
        let b_m = dot(q, &hq);
        fields.push(b_m);
        if m + 1 == n {
            break;
        }
        let mut r = hq;
        for (ri, qi) in r.iter_mut().zip(q) {
            *ri -= b_m * qi;
        }
        if m > 0 {
            let j_prev = couplings[m - 1];
            for (ri, pi) in r.iter_mut().zip(&basis[m - 1]) {
                *ri -= j_prev * pi;
            }
        }
        // One full re-orthogonalisation pass against everything computed so
        // far; cheap at these sizes and removes the drift of the bare
        // recurrence.
        for prev in &basis {
            let c = dot(&r, prev);
            for (ri, pi) in r.iter_mut().zip(prev) {
                *ri -= c * pi;
            }
        }
        let j_sq = dot(&r, &r);
        if j_sq <= breakdown {
            return Err(Error::NumericalBreakdown { site: m + 1, j_squared: j_sq });
        }
        let j_m = j_sq.sqrt();
        couplings.push(j_m);
        r.iter_mut().for_each(|x| *x /= j_m);
        basis.push(r);
    }

    ChainSpec::new(fields, couplings)
}

/// First-site weights of the mirror-symmetric chain with the given strictly
/// decreasing spectrum: `w_n` proportional to `1 / |p'(lambda_n)|` with `p`
/// the characteristic polynomial. Accumulated in the log domain so large
/// spectra do not overflow.
pub fn persymmetric_weights(eigenvalues: &[f64]) -> Result<SpectralData> {
    let n = eigenvalues.len();
    if n == 0 {
        return Err(Error::InvalidChain("empty spectrum".into()));
    }
    if eigenvalues.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidChain(
            "eigenvalues must be strictly decreasing".into(),
        ));
    }
    let mut log_w = vec![0.0f64; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            if i != j {
                acc += (eigenvalues[i] - eigenvalues[j]).abs().ln();
            }
        }
        log_w[i] = -acc;
    }
    let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    SpectralData::new(eigenvalues.to_vec(), weights)
}

/// Reconstruct a chain from the first column of its `v` basis (the vector of
/// `lambda_{n,1}^2`) and the target spectrum.
pub fn chain_from_v1(v1: &[f64], eigenvalues: &[f64]) -> Result<ChainSpec> {
    if v1.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidWeights(
            "every first-column entry must be positive".into(),
        ));
    }
    let data = SpectralData::new(eigenvalues.to_vec(), v1.to_vec())?;
    lanczos_reconstruct(&data)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::spectral::eigensystem;

    fn binomial(n: u64, k: u64) -> f64 {
        let mut acc = 1.0;
        for i in 0..k {
            acc *= (n - i) as f64 / (i + 1) as f64;
        }
        acc
    }

    #[test]
    fn five_site_transfer_chain_from_binomial_weights() {
        let eigenvalues = vec![4.0, 2.0, 0.0, -2.0, -4.0];
        let weights: Vec<f64> = (0..5).map(|k| binomial(4, k) / 16.0).collect();
        let data = SpectralData::new(eigenvalues, weights).unwrap();
        let chain = lanczos_reconstruct(&data).unwrap();
        let want = [2.0, 6.0f64.sqrt(), 6.0f64.sqrt(), 2.0];
        for (got, want) in chain.couplings().iter().zip(want) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        for b in chain.fields() {
            assert!(b.abs() < 1e-10);
        }
    }

    #[test]
    fn single_site_reconstruction() {
        let data = SpectralData::new(vec![-0.3], vec![1.0]).unwrap();
        let chain = lanczos_reconstruct(&data).unwrap();
        assert_eq!(chain.fields(), &[-0.3]);
        assert!(chain.couplings().is_empty());
    }

    #[test]
    fn round_trip_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x1A2C);
        for case in 0..100 {
            let n = rng.random_range(2..=30usize);
            let fields: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let couplings: Vec<f64> = (0..n - 1)
                .map(|_| {
                    let mag = rng.random_range(0.1..2.0);
                    if rng.random_bool(0.5) {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect();
            let chain = ChainSpec::new(fields, couplings).unwrap();
            let es = eigensystem(&chain).unwrap();
            let data =
                SpectralData::new(es.eigenvalues().to_vec(), es.first_row_weights().to_vec())
                    .unwrap();
            let rebuilt = lanczos_reconstruct(&data).unwrap();
            let scale = chain
                .fields()
                .iter()
                .chain(chain.couplings())
                .fold(1.0f64, |m, x| m.max(x.abs()));
            for (got, want) in rebuilt.fields().iter().zip(chain.fields()) {
                assert!(
                    (got - want).abs() <= 1e-8 * scale,
                    "case {case}: field {got} vs {want}"
                );
            }
            for (got, want) in rebuilt.couplings().iter().zip(chain.couplings()) {
                assert!(
                    (got.abs() - want.abs()).abs() <= 1e-8 * scale,
                    "case {case}: |coupling| {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn persymmetric_weights_of_two_level_spectrum() {
        let data = persymmetric_weights(&[1.0, -1.0]).unwrap();
        assert!((data.weights()[0] - 0.5).abs() < 1e-15);
        assert!((data.weights()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn persymmetric_weights_are_binomial_for_linear_spectrum() {
        for n in [3usize, 8, 21, 41] {
            let eigenvalues: Vec<f64> = (0..n).map(|k| (n - 1) as f64 - 2.0 * k as f64).collect();
            let data = persymmetric_weights(&eigenvalues).unwrap();
            let norm = 2f64.powi(1 - n as i32);
            for (k, w) in data.weights().iter().enumerate() {
                let expect = norm * binomial(n as u64 - 1, k as u64);
                assert!(
                    (w - expect).abs() <= 1e-12 * expect.max(1e-30),
                    "n = {n}, k = {k}: {w} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn persymmetric_reconstruction_is_mirror_symmetric() {
        // An asymmetric spectrum still yields a mirror-symmetric chain.
        let eigenvalues = vec![2.7, 1.1, 0.4, -0.9, -3.2, -4.0];
        let data = persymmetric_weights(&eigenvalues).unwrap();
        let chain = lanczos_reconstruct(&data).unwrap();
        assert!(chain.is_mirror_symmetric(1e-8));
        let es = eigensystem(&chain).unwrap();
        for (got, want) in es.eigenvalues().iter().zip(&eigenvalues) {
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn five_site_example_from_spectrum_alone() {
        let data = persymmetric_weights(&[4.0, 2.0, 0.0, -2.0, -4.0]).unwrap();
        let chain = lanczos_reconstruct(&data).unwrap();
        let want = [2.0, 6.0f64.sqrt(), 6.0f64.sqrt(), 2.0];
        for (got, want) in chain.couplings().iter().zip(want) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn negative_first_column_entry_rejected() {
        let err = chain_from_v1(&[0.6, -0.1, 0.5], &[1.0, 0.0, -1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidWeights(_)));
    }

    #[test]
    fn inconsistent_weights_break_down() {
        // A weight of (almost) zero starves the recurrence.
        let data = SpectralData::new(
            vec![1.0, 0.0, -1.0],
            vec![0.5 - 2.5e-13, 0.5 - 2.5e-13, 5e-13],
        );
        // Either the constructor rejects it or the recurrence breaks down.
        if let Ok(data) = data {
            match lanczos_reconstruct(&data) {
                Err(Error::NumericalBreakdown { .. }) | Ok(_) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn duplicate_eigenvalues_rejected() {
        assert!(SpectralData::new(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(persymmetric_weights(&[1.0, 1.0]).is_err());
    }
}
