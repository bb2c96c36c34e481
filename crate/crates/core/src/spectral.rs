//! Eigendecomposition of chain Hamiltonians, time evolution in the
//! single-excitation subspace, and arrival fidelities.

use num_complex::Complex64;

use crate::chain::{ChainSpec, TargetState};
use crate::error::{Error, Result};
use crate::linalg::{tridiagonal_eigen_ql, Matrix, TridiagLu};

/// Relative gap below which the spectrum is treated as degenerate. Nonzero
/// couplings guarantee a simple spectrum, so a smaller gap means the input
/// is numerically unusable.
const DEGENERACY_TOL: f64 = 1e-12;

/// Relative isolation above which an eigenvector is polished by inverse
/// iteration. Polished vectors carry componentwise-accurate small entries
/// (the QL rotations leave exponentially small first components at rounding
/// level, which wrecks reconstruction round trips); the threshold keeps the
/// polish from degrading mutual orthogonality near clustered eigenvalues.
const REFINE_ISOLATION: f64 = 1e-3;

/// Spectrum and eigenbasis of a chain.
///
/// Eigenvalues are sorted strictly decreasing. `vectors` holds the
/// orthonormal eigenvectors as columns: `vectors.at(k, n)` is the amplitude
/// of eigenvector `n` on site `k` (both 0-indexed). The overall sign of each
/// column is fixed by making its first component positive (first nonzero
/// component, if the first vanishes).
#[derive(Debug, Clone)]
pub struct EigenSystem {
    eigenvalues: Vec<f64>,
    vectors: Matrix,
    first_row_weights: Vec<f64>,
}

impl EigenSystem {
    pub fn n_sites(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    /// Squared first components `w_n`; they sum to one.
    pub fn first_row_weights(&self) -> &[f64] {
        &self.first_row_weights
    }

    /// Component of eigenvector `n` on site `k` (0-indexed).
    #[inline]
    pub fn vector_component(&self, site: usize, n: usize) -> f64 {
        self.vectors.at(site, n)
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Full eigendecomposition of a chain.
pub fn eigensystem(chain: &ChainSpec) -> Result<EigenSystem> {
    let n = chain.n_sites();
    let (d, z) = tridiagonal_eigen_ql(chain.fields(), chain.couplings())
        .map_err(Error::InvalidChain)?;

    // Sort strictly decreasing, permuting columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();

    let scale = eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    for w in eigenvalues.windows(2) {
        if w[0] - w[1] < DEGENERACY_TOL * scale {
            return Err(Error::InvalidChain(format!(
                "numerically degenerate eigenvalues {} and {}",
                w[0], w[1]
            )));
        }
    }

    let mut vectors = Matrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        let mut col = z.column(old_col);
        refine_if_isolated(chain, &eigenvalues, new_col, scale, &mut col);
        // Sign convention: first component positive.
        let col_max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let lead = col
            .iter()
            .find(|x| x.abs() > 1e-12 * col_max)
            .copied()
            .unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for (row, &v) in col.iter().enumerate() {
            vectors.set(row, new_col, sign * v);
        }
    }

    let first_row_weights: Vec<f64> =
        (0..n).map(|c| vectors.at(0, c) * vectors.at(0, c)).collect();
    Ok(EigenSystem { eigenvalues, vectors, first_row_weights })
}

/// Two inverse-iteration passes on an eigenvector whose eigenvalue is well
/// separated from its neighbours. Clustered eigenvalues keep their QL
/// vectors, whose mutual orthogonality is exact up to rounding.
fn refine_if_isolated(
    chain: &ChainSpec,
    eigenvalues: &[f64],
    idx: usize,
    scale: f64,
    col: &mut [f64],
) {
    let n = eigenvalues.len();
    if n < 2 {
        return;
    }
    let mut isolation = f64::INFINITY;
    if idx > 0 {
        isolation = isolation.min(eigenvalues[idx - 1] - eigenvalues[idx]);
    }
    if idx + 1 < n {
        isolation = isolation.min(eigenvalues[idx] - eigenvalues[idx + 1]);
    }
    if isolation < REFINE_ISOLATION * scale {
        return;
    }
    let lam = eigenvalues[idx];
    let shifted: Vec<f64> = chain.fields().iter().map(|b| b - lam).collect();
    let lu = TridiagLu::new(chain.couplings(), &shifted, chain.couplings());
    for _ in 0..2 {
        let y = lu.solve(col);
        if y.iter().any(|v| !v.is_finite()) {
            return;
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return;
        }
        for (c, v) in col.iter_mut().zip(&y) {
            *c = v / norm;
        }
    }
}

/// Propagate a state vector for time `t` under the chain Hamiltonian.
pub fn evolve(chain: &ChainSpec, input: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let es = eigensystem(chain)?;
    Ok(evolve_with(&es, input, t))
}

/// Propagate using a precomputed eigensystem.
pub fn evolve_with(es: &EigenSystem, input: &[Complex64], t: f64) -> Vec<Complex64> {
    let n = es.n_sites();
    assert_eq!(input.len(), n);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        // Overlap of the input with eigenvector j.
        let mut overlap = Complex64::new(0.0, 0.0);
        for i in 0..n {
            overlap += es.vector_component(i, j) * input[i];
        }
        let phase = Complex64::from_polar(1.0, -es.eigenvalues[j] * t);
        let weight = overlap * phase;
        for i in 0..n {
            out[i] += weight * es.vector_component(i, j);
        }
    }
    out
}

/// Propagate the excitation released from a single (1-indexed) site.
pub fn evolve_site(chain: &ChainSpec, site: usize, t: f64) -> Result<Vec<Complex64>> {
    let n = chain.n_sites();
    assert!(site >= 1 && site <= n, "site {site} outside 1..={n}");
    let mut input = vec![Complex64::new(0.0, 0.0); n];
    input[site - 1] = Complex64::new(1.0, 0.0);
    evolve(chain, &input, t)
}

/// Arrival fidelity `|<target| e^{-i H t0} |input>|` and the phase of the
/// overlap.
pub fn fidelity(chain: &ChainSpec, target: &TargetState) -> Result<(f64, f64)> {
    assert_eq!(chain.n_sites(), target.n_sites(), "target length must match the chain");
    let out = evolve_site(chain, target.input_site(), target.t0())?;
    let mut overlap = Complex64::new(0.0, 0.0);
    for (a, psi) in target.amplitudes().iter().zip(&out) {
        overlap += a * psi;
    }
    Ok((overlap.norm(), overlap.arg()))
}

/// Real arrival amplitudes at the synthesis time for a chain whose spectrum
/// obeys the alternating-phase condition `e^{-i lambda_n t0} = (-1)^{n+1}
/// e^{i phi}` (any chain built on a state-transfer spectrum does). The
/// global phase is dropped, so the result is the exact real output vector
/// `sum_n (-1)^{n+1} lambda_{n,k} lambda_{n,1}`.
pub fn synthesis_output(es: &EigenSystem) -> Vec<f64> {
    let n = es.n_sites();
    let mut out = vec![0.0; n];
    for j in 0..n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let weight = sign * es.vector_component(0, j);
        for i in 0..n {
            out[i] += weight * es.vector_component(i, j);
        }
    }
    out
}
