//! The auxiliary `|v_m>` basis attached to a chain and the coefficient table
//! relating the bases of two isospectral chains.
//!
//! For a chain with eigenvectors `|lambda_n>`, the basis vector `|v_m>` has
//! site components `<k|v_m> = lambda_{k,1} lambda_{k,m}`. Writing a designed
//! chain's basis in the basis of a reference chain,
//! `|v_n> = sum_m beta^(n)_m |v~_m>`, produces the coefficient table used
//! throughout the design routines: row 1 is `(1, 0, ..., 0)`, the entries
//! with `n > m` vanish, and the bottom row carries the arrival amplitudes.

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::linalg::{LuFactor, Matrix};
use crate::spectral::{eigensystem, EigenSystem};

/// Tolerance for deciding that two chains share a spectrum.
pub const SPECTRUM_MATCH_TOL: f64 = 1e-8;

/// Basis matrix whose column `m` (0-indexed) is `|v_{m+1}>`.
pub fn v_basis(chain: &ChainSpec) -> Result<Matrix> {
    Ok(v_basis_from(&eigensystem(chain)?))
}

/// Basis matrix from a precomputed eigensystem.
pub fn v_basis_from(es: &EigenSystem) -> Matrix {
    let n = es.n_sites();
    let mut basis = Matrix::zeros(n, n);
    for k in 0..n {
        let first = es.vector_component(0, k);
        for m in 0..n {
            basis.set(k, m, first * es.vector_component(m, k));
        }
    }
    basis
}

/// Coefficients expressing one chain's `|v_n>` basis in another's.
///
/// `coefficient(m, n)` is `beta^(n)_m` with 1-indexed row `m` and column `n`,
/// matching the usual table layout.
#[derive(Debug, Clone)]
pub struct BetaTable {
    coefficients: Matrix,
}

impl BetaTable {
    pub fn from_matrix(coefficients: Matrix) -> Self {
        assert_eq!(coefficients.nrows(), coefficients.ncols());
        Self { coefficients }
    }

    pub fn identity(n: usize) -> Self {
        Self { coefficients: Matrix::identity(n) }
    }

    pub fn n_sites(&self) -> usize {
        self.coefficients.nrows()
    }

    /// `beta^(n)_m`, 1-indexed.
    pub fn coefficient(&self, m: usize, n: usize) -> f64 {
        self.coefficients.at(m - 1, n - 1)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.coefficients
    }

    /// Column `n` (1-indexed) as a vector over `m`.
    pub fn column(&self, n: usize) -> Vec<f64> {
        self.coefficients.column(n - 1)
    }

    /// The bottom row, i.e. the arrival amplitudes of the designed chain.
    pub fn bottom_row(&self) -> &[f64] {
        self.coefficients.row(self.n_sites() - 1)
    }

    /// Largest violation of the structural laws: row 1 must be
    /// `(1, 0, ..., 0)` and every entry with `n > m` must vanish.
    pub fn structure_defect(&self) -> f64 {
        let n = self.n_sites();
        let mut worst = (self.coefficient(1, 1) - 1.0).abs();
        for col in 2..=n {
            worst = worst.max(self.coefficient(1, col).abs());
        }
        for m in 1..=n {
            for c in m + 1..=n {
                worst = worst.max(self.coefficient(m, c).abs());
            }
        }
        worst
    }
}

/// Expand the basis of `chain` in the basis of `reference`. The chains must
/// be isospectral to [`SPECTRUM_MATCH_TOL`]; each column is obtained from a
/// dense solve against the reference basis.
pub fn beta_table(chain: &ChainSpec, reference: &ChainSpec) -> Result<BetaTable> {
    if chain.n_sites() != reference.n_sites() {
        return Err(Error::SpectrumMismatch { max_deviation: f64::INFINITY });
    }
    let es = eigensystem(chain)?;
    let es_ref = eigensystem(reference)?;
    let scale = es.max_abs_eigenvalue().max(1.0);
    let max_deviation = es
        .eigenvalues()
        .iter()
        .zip(es_ref.eigenvalues())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if max_deviation > SPECTRUM_MATCH_TOL * scale {
        return Err(Error::SpectrumMismatch { max_deviation });
    }

    let basis = v_basis_from(&es);
    let basis_ref = v_basis_from(&es_ref);
    let lu = LuFactor::new(&basis_ref).map_err(Error::InvalidChain)?;
    let n = chain.n_sites();
    let mut table = Matrix::zeros(n, n);
    for col in 0..n {
        let beta = lu.solve(&basis.column(col));
        for (row, &v) in beta.iter().enumerate() {
            table.set(row, col, v);
        }
    }
    Ok(BetaTable::from_matrix(table))
}

/// Largest violation of the intertwining relation between the two chains'
/// recurrences. Element `(k, m)` of the relation reads
/// `(B~_k - B_m) beta^(m)_k - J_{m-1} beta^(m-1)_k - J_m beta^(m+1)_k
///  + beta^(m)_{k-1} J~_{k-1} + beta^(m)_{k+1} J~_k`, with out-of-range
/// indices contributing zero; any exact table annihilates it.
pub fn beta_residual(table: &BetaTable, chain: &ChainSpec, reference: &ChainSpec) -> f64 {
    let n = table.n_sites();
    assert_eq!(chain.n_sites(), n);
    assert_eq!(reference.n_sites(), n);
    let b = chain.fields();
    let j = chain.couplings();
    let b_ref = reference.fields();
    let j_ref = reference.couplings();
    let beta = |m: usize, k: usize| -> f64 {
        // 1-indexed with zero padding outside the table.
        if m < 1 || m > n || k < 1 || k > n {
            0.0
        } else {
            table.coefficient(k, m)
        }
    };

    let mut worst = 0.0f64;
    for m in 1..=n {
        for k in 1..=n {
            let mut acc = (b_ref[k - 1] - b[m - 1]) * beta(m, k);
            if m >= 2 {
                acc -= j[m - 2] * beta(m - 1, k);
            }
            if m <= n - 1 {
                acc -= j[m - 1] * beta(m + 1, k);
            }
            if k >= 2 {
                acc += beta(m, k - 1) * j_ref[k - 2];
            }
            if k <= n - 1 {
                acc += beta(m, k + 1) * j_ref[k - 1];
            }
            worst = worst.max(acc.abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_site_pst() -> ChainSpec {
        let j = [2.0, 6.0f64.sqrt(), 6.0f64.sqrt(), 2.0];
        ChainSpec::new(vec![0.0; 5], j.to_vec()).unwrap()
    }

    fn binomial(n: u64, k: u64) -> f64 {
        let mut acc = 1.0;
        for i in 0..k {
            acc *= (n - i) as f64 / (i + 1) as f64;
        }
        acc
    }

    #[test]
    fn columns_sum_to_first_unit_vector() {
        let chain = ChainSpec::new(vec![0.4, -0.2, 0.0, 1.1], vec![0.8, -1.2, 0.5]).unwrap();
        let basis = v_basis(&chain).unwrap();
        for m in 0..4 {
            let sum: f64 = basis.column(m).iter().sum();
            let expect = if m == 0 { 1.0 } else { 0.0 };
            assert!((sum - expect).abs() < 1e-12, "column {m} sums to {sum}");
        }
    }

    #[test]
    fn first_column_is_binomial_for_five_site_pst() {
        // <n|v_1> = C(4, n-1) / 16 for the linear-spectrum transfer chain.
        let basis = v_basis(&five_site_pst()).unwrap();
        for n in 0..5 {
            let expect = binomial(4, n as u64) / 16.0;
            assert!((basis.at(n, 0) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn second_basis_vector_of_uniform_pair() {
        let chain = ChainSpec::new(vec![0.0, 0.0], vec![1.0]).unwrap();
        let basis = v_basis(&chain).unwrap();
        // Frozen from the 2x2 eigenvectors (1,1)/sqrt2 and (1,-1)/sqrt2.
        assert!((basis.at(0, 1) - 0.5).abs() < 1e-14);
        assert!((basis.at(1, 1) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn identity_table_for_identical_chains() {
        let chain = five_site_pst();
        let table = beta_table(&chain, &chain).unwrap();
        for m in 1..=5 {
            for n in 1..=5 {
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((table.coefficient(m, n) - expect).abs() < 1e-10);
            }
        }
        assert!(beta_residual(&table, &chain, &chain) < 1e-10);
    }

    #[test]
    fn mismatched_spectra_rejected() {
        let chain = five_site_pst();
        let other = ChainSpec::new(vec![0.0; 5], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            beta_table(&chain, &other),
            Err(Error::SpectrumMismatch { .. })
        ));
    }

    #[test]
    fn perturbed_table_has_nonzero_residual() {
        let chain = five_site_pst();
        let table = beta_table(&chain, &chain).unwrap();
        let mut m = table.matrix().clone();
        m.set(2, 1, m.at(2, 1) + 1e-3);
        let bad = BetaTable::from_matrix(m);
        assert!(beta_residual(&bad, &chain, &chain) > 1e-4);
    }
}
