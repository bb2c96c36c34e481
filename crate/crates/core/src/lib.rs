//! Engineering of one-dimensional spin-chain Hamiltonians, restricted to
//! the single-excitation subspace, so that free evolution for a fixed time
//! turns a localised excitation into a prescribed real superposition.
//!
//! The crate covers the full pipeline:
//!
//! - [`spectral`]: exact eigendecomposition of tridiagonal chains, time
//!   evolution, arrival fidelities, and the auxiliary bases in [`basis`];
//! - [`inverse`]: reconstruction of a chain from a spectrum and first-site
//!   weights (the inverse eigenvalue problem for Jacobi matrices);
//! - [`pst`]: perfect-state-transfer reference chains and the spectra
//!   compatible with synthesis at a fixed time;
//! - [`revival`]: analytic designers for fractional revivals (end pairs,
//!   three-site targets, last-k blocks, interior sites);
//! - [`mirror`]: folding a design into a chain released from the middle;
//! - [`numeric`]: an isospectral numerical designer for arbitrary real
//!   targets such as the W state;
//! - [`analysis`]: speed metrics, lower bounds, a gate-model comparator and
//!   Monte-Carlo robustness sweeps.

pub mod analysis;
pub mod basis;
pub mod chain;
pub mod design;
pub mod error;
pub mod inverse;
pub mod linalg;
pub mod mirror;
pub mod numeric;
pub mod pst;
pub mod revival;
pub mod solver;
pub mod spectral;

pub use analysis::{
    coupling_lower_bound, gate_model_time, robustness_sweep, robustness_sweep_with,
    FieldPerturbation, PerturbationConfig, RobustnessReport, SpeedReport,
};
pub use basis::{beta_residual, beta_table, v_basis, BetaTable};
pub use chain::{ChainSpec, TargetState};
pub use design::{DesignDiagnostics, DesignResult};
pub use error::{Error, Result};
pub use inverse::{chain_from_v1, lanczos_reconstruct, persymmetric_weights, SpectralData};
pub use mirror::{extend_from_middle, predict_extended_target};
pub use numeric::{initial_guess, moment_fields, refine, SolverConfig};
pub use pst::{christandl_chain, pst_chain_from_spectrum, validate_synthesis_spectrum, PstSpectrum};
pub use revival::{
    design_combined, design_end_pair, design_last_k, design_small_r, design_triple,
    parity_reduce, triple_normalization_roots, ParityReduction, RevivalFamily, RevivalSpec,
};
pub use spectral::{eigensystem, evolve, evolve_site, fidelity, synthesis_output, EigenSystem};

pub use analysis::speed_report;
