//! Chain and target data types.
//!
//! A chain is a real symmetric tridiagonal Hamiltonian acting on the
//! single-excitation subspace of `N` sites: on-site fields on the diagonal
//! and nearest-neighbour couplings on the off-diagonals.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// A tridiagonal chain Hamiltonian: `N` on-site fields and `N - 1` couplings.
///
/// Invariants enforced at construction: all entries finite, every coupling
/// nonzero (a zero coupling splits the chain in two).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    fields: Vec<f64>,
    couplings: Vec<f64>,
}

impl ChainSpec {
    pub fn new(fields: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::InvalidChain("chain must have at least one site".into()));
        }
        if couplings.len() + 1 != fields.len() {
            return Err(Error::InvalidChain(format!(
                "{} sites require {} couplings, got {}",
                fields.len(),
                fields.len() - 1,
                couplings.len()
            )));
        }
        if fields.iter().chain(couplings.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidChain("non-finite entry".into()));
        }
        if couplings.iter().any(|&j| j == 0.0) {
            return Err(Error::InvalidChain("zero coupling splits the chain".into()));
        }
        Ok(Self { fields, couplings })
    }

    /// Uniform chain with all fields zero and all couplings equal.
    pub fn uniform(n_sites: usize, coupling: f64) -> Result<Self> {
        Self::new(vec![0.0; n_sites], vec![coupling; n_sites.saturating_sub(1)])
    }

    pub fn n_sites(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Largest coupling magnitude; 0 for a single-site chain.
    pub fn max_coupling(&self) -> f64 {
        self.couplings.iter().fold(0.0, |m, j| m.max(j.abs()))
    }

    /// Product of coupling magnitudes.
    pub fn coupling_product(&self) -> f64 {
        self.couplings.iter().map(|j| j.abs()).product()
    }

    /// Apply the Hamiltonian to a real vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n_sites();
        assert_eq!(v.len(), n);
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.fields[i] * v[i];
            if i > 0 {
                acc += self.couplings[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.couplings[i] * v[i + 1];
            }
            out[i] = acc;
        }
        out
    }

    /// Conjugate by a diagonal matrix of signs: fields are unchanged and
    /// coupling `k` picks up `signs[k] * signs[k + 1]`. Transfer
    /// probabilities are invariant under this gauge.
    pub fn gauge(&self, signs: &[f64]) -> ChainSpec {
        assert_eq!(signs.len(), self.n_sites());
        let couplings = self
            .couplings
            .iter()
            .enumerate()
            .map(|(k, &j)| signs[k] * signs[k + 1] * j)
            .collect();
        ChainSpec { fields: self.fields.clone(), couplings }
    }

    /// Site order reversed end to end.
    pub fn reversed(&self) -> ChainSpec {
        let mut fields = self.fields.clone();
        let mut couplings = self.couplings.clone();
        fields.reverse();
        couplings.reverse();
        ChainSpec { fields, couplings }
    }

    /// True if fields and couplings are mirror symmetric to `tol`.
    pub fn is_mirror_symmetric(&self, tol: f64) -> bool {
        let n = self.n_sites();
        let fields_ok = (0..n).all(|i| (self.fields[i] - self.fields[n - 1 - i]).abs() <= tol);
        let m = self.couplings.len();
        let couplings_ok =
            (0..m).all(|i| (self.couplings[i] - self.couplings[m - 1 - i]).abs() <= tol);
        fields_ok && couplings_ok
    }
}

/// A real unit-norm target state together with the release site and the
/// synthesis time.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    amplitudes: Vec<f64>,
    input_site: usize,
    t0: f64,
}

impl TargetState {
    const NORM_TOL: f64 = 1e-12;

    /// Target released from site 1 at the default time `pi/2`.
    pub fn new(amplitudes: Vec<f64>) -> Result<Self> {
        Self::with_input(amplitudes, 1, FRAC_PI_2)
    }

    /// Target with explicit (1-indexed) release site and synthesis time.
    pub fn with_input(amplitudes: Vec<f64>, input_site: usize, t0: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::UnsupportedTarget("empty amplitude vector".into()));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::UnsupportedTarget("non-finite amplitude".into()));
        }
        if input_site == 0 || input_site > amplitudes.len() {
            return Err(Error::UnsupportedTarget(format!(
                "input site {} outside 1..={}",
                input_site,
                amplitudes.len()
            )));
        }
        if !(t0 > 0.0) {
            return Err(Error::UnsupportedTarget("synthesis time must be positive".into()));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a * a).sum();
        if (norm2 - 1.0).abs() > 1e-9 {
            return Err(Error::UnsupportedTarget(format!(
                "amplitudes must have unit norm (got |alpha|^2 = {norm2})"
            )));
        }
        // Release from site 1 requires overlap with the far end of the chain.
        if input_site == 1 && amplitudes[amplitudes.len() - 1] == 0.0 {
            return Err(Error::InfeasibleTarget(
                "a state released from site 1 must overlap the end site".into(),
            ));
        }
        let mut amplitudes = amplitudes;
        let norm = norm2.sqrt();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            for a in &mut amplitudes {
                *a /= norm;
            }
        }
        Ok(Self { amplitudes, input_site, t0 })
    }

    /// Sparse constructor: amplitudes given as (1-indexed site, value) pairs.
    pub fn from_support(n_sites: usize, support: &[(usize, f64)]) -> Result<Self> {
        Self::from_support_at(n_sites, support, 1, FRAC_PI_2)
    }

    pub fn from_support_at(
        n_sites: usize,
        support: &[(usize, f64)],
        input_site: usize,
        t0: f64,
    ) -> Result<Self> {
        let mut amplitudes = vec![0.0; n_sites];
        for &(site, value) in support {
            if site == 0 || site > n_sites {
                return Err(Error::UnsupportedTarget(format!(
                    "support site {site} outside 1..={n_sites}"
                )));
            }
            amplitudes[site - 1] += value;
        }
        Self::with_input(amplitudes, input_site, t0)
    }

    /// Uniform superposition over all sites (the W state).
    pub fn w_state(n_sites: usize) -> Result<Self> {
        let a = 1.0 / (n_sites as f64).sqrt();
        Self::new(vec![a; n_sites])
    }

    /// The excitation parked on a single site.
    pub fn localized(n_sites: usize, site: usize) -> Result<Self> {
        Self::from_support(n_sites, &[(site, 1.0)])
    }

    pub fn n_sites(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// 1-indexed release site.
    pub fn input_site(&self) -> usize {
        self.input_site
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }
}
