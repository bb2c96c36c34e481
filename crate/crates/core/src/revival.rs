//! Designers for fractional revivals: chains that evolve a single-site
//! excitation into a superposition over a few prescribed sites at the
//! synthesis time.
//!
//! Every designer works the same way: fix a transfer-compatible spectrum,
//! parametrise the first column of the coefficient table relating the new
//! chain to the reference transfer chain, solve for the free entries, and
//! reconstruct the chain from the resulting first-site weights. The
//! families differ only in how much of that column is pinned analytically.

use crate::basis::v_basis_from;
use crate::chain::{ChainSpec, TargetState};
use crate::design::{finalize_design, DesignDiagnostics, DesignResult};
use crate::error::{Error, Result};
use crate::inverse::chain_from_v1;
use crate::linalg::{bisect, poly_mul_linear, polynomial_real_roots, LuFactor, Matrix};
use crate::pst::{pst_chain_from_spectrum, PstSpectrum};
use crate::solver::{damped_newton, inf_norm, NewtonOptions};
use crate::spectral::{eigensystem, synthesis_output, EigenSystem};

/// A root is kept only if every first-site weight clears this floor.
const WEIGHT_FLOOR: f64 = 1e-12;
/// Smallest admissible end-site amplitude; below this the reconstruction
/// degenerates.
const END_AMPLITUDE_TOL: f64 = 1e-6;
/// Designs are reported only when simulation confirms them to this level.
const DESIGN_FIDELITY_TOL: f64 = 1e-7;
/// Normalisation slack accepted on requested amplitudes.
const TARGET_NORM_TOL: f64 = 1e-9;

/// Target plus reference spectrum for the revival designers.
#[derive(Debug, Clone)]
pub struct RevivalSpec {
    support: Vec<(usize, f64)>,
    reference: PstSpectrum,
}

/// Analytic family a revival target falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevivalFamily {
    /// Support on sites 1 and N only.
    EndPair,
    /// Support on sites 1, N-1 and N.
    Triple,
    /// Support on site 1 and an interior site r in {2, 3}, plus site N.
    SmallR(usize),
    /// Support on site 1 and the last k sites, k < N/2.
    LastK(usize),
}

impl RevivalSpec {
    /// `support` holds (1-indexed site, amplitude) pairs; squared amplitudes
    /// must sum to one and site `N` must carry weight.
    pub fn new(support: Vec<(usize, f64)>, reference: PstSpectrum) -> Result<Self> {
        let n = reference.n_sites();
        let mut seen = vec![false; n + 1];
        let mut norm2 = 0.0;
        for &(site, amp) in &support {
            if site == 0 || site > n {
                return Err(Error::UnsupportedTarget(format!(
                    "support site {site} outside 1..={n}"
                )));
            }
            if seen[site] {
                return Err(Error::UnsupportedTarget(format!("duplicate support site {site}")));
            }
            seen[site] = true;
            norm2 += amp * amp;
        }
        if (norm2 - 1.0).abs() > TARGET_NORM_TOL {
            return Err(Error::UnsupportedTarget(format!(
                "support amplitudes must have unit norm (got |alpha|^2 = {norm2})"
            )));
        }
        if support
            .iter()
            .find(|&&(site, _)| site == n)
            .map_or(true, |&(_, amp)| amp.abs() < END_AMPLITUDE_TOL)
        {
            return Err(Error::InfeasibleTarget(
                "the target must overlap the end site".into(),
            ));
        }
        let mut support = support;
        support.sort_by_key(|&(site, _)| site);
        Ok(Self { support, reference })
    }

    pub fn n_sites(&self) -> usize {
        self.reference.n_sites()
    }

    pub fn t0(&self) -> f64 {
        self.reference.t0()
    }

    pub fn support(&self) -> &[(usize, f64)] {
        &self.support
    }

    pub fn reference(&self) -> &PstSpectrum {
        &self.reference
    }

    pub fn amplitude_at(&self, site: usize) -> f64 {
        self.support
            .iter()
            .find(|&&(s, _)| s == site)
            .map_or(0.0, |&(_, a)| a)
    }

    pub fn target_state(&self) -> Result<TargetState> {
        TargetState::from_support_at(self.n_sites(), &self.support, 1, self.t0())
    }

    /// Interior support sites (everything other than 1 and nonzero).
    fn tail_sites(&self) -> Vec<usize> {
        self.support
            .iter()
            .filter(|&&(site, amp)| site >= 2 && amp != 0.0)
            .map(|&(site, _)| site)
            .collect()
    }

    /// The analytic family this target belongs to, if any.
    pub fn family(&self) -> Option<RevivalFamily> {
        let n = self.n_sites();
        let tail = self.tail_sites();
        if tail == [n] {
            return Some(RevivalFamily::EndPair);
        }
        if n >= 4 && tail == [n - 1, n] {
            return Some(RevivalFamily::Triple);
        }
        if tail.len() == 2 && tail[1] == n && (tail[0] == 2 || tail[0] == 3) {
            return Some(RevivalFamily::SmallR(tail[0]));
        }
        let first_tail = *tail.first()?;
        let k = n + 1 - first_tail;
        if 2 * k < n {
            return Some(RevivalFamily::LastK(k));
        }
        None
    }

    /// True when the amplitudes vanish on all sites `N + 1 - 2m`, the
    /// pattern that lets the design run with zero on-site fields.
    pub fn parity_compatible(&self) -> bool {
        parity_pattern_holds(self.n_sites(), &self.support)
    }

    /// Dispatch to the matching analytic designer.
    pub fn design(&self) -> Result<Vec<DesignResult>> {
        match self.family() {
            Some(RevivalFamily::EndPair) => {
                design_end_pair(&self.reference, self.amplitude_at(1)).map(|d| vec![d])
            }
            Some(RevivalFamily::Triple) => {
                let n = self.n_sites();
                design_triple(
                    &self.reference,
                    self.amplitude_at(1),
                    self.amplitude_at(n - 1),
                    self.amplitude_at(n),
                )
            }
            Some(RevivalFamily::SmallR(r)) => {
                let n = self.n_sites();
                design_small_r(
                    &self.reference,
                    self.amplitude_at(1),
                    self.amplitude_at(r),
                    self.amplitude_at(n),
                    r,
                )
            }
            Some(RevivalFamily::LastK(_)) => design_last_k(&self.reference, &self.support),
            None => design_combined(&self.reference, &self.support),
        }
    }
}

fn parity_pattern_holds(n: usize, support: &[(usize, f64)]) -> bool {
    support
        .iter()
        .all(|&(site, amp)| amp == 0.0 || (n - site) % 2 == 0)
}

/// Mask of coefficient-table entries forced to zero by a parity-patterned
/// target, together with the free first-column entries left to solve for.
#[derive(Debug, Clone)]
pub struct ParityReduction {
    n_sites: usize,
    free_first_column: Vec<usize>,
}

impl ParityReduction {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// 1-indexed positions `m` of the free entries of the first column.
    pub fn free_first_column(&self) -> &[usize] {
        &self.free_first_column
    }

    /// True when `beta^(n)_m` is forced to vanish (both indices 1-based).
    pub fn is_forbidden(&self, n: usize, m: usize) -> bool {
        (n + m) % 2 == 1
    }
}

/// Parity reduction for a target vanishing on every site `N + 1 - 2m`:
/// table entries with `n + m` odd drop out and the designed chain has zero
/// fields. Requires a symmetric reference spectrum (zero reference fields).
pub fn parity_reduce(spec: &RevivalSpec) -> Result<ParityReduction> {
    let n = spec.n_sites();
    if !spec.reference().is_symmetric() {
        return Err(Error::PatternMismatch(
            "parity reduction requires a symmetric reference spectrum".into(),
        ));
    }
    if !spec.parity_compatible() {
        return Err(Error::PatternMismatch(
            "target has weight on an excluded-parity site".into(),
        ));
    }
    let tail = spec.tail_sites();
    let first_tail = *tail.first().ok_or_else(|| {
        Error::PatternMismatch("target needs support beyond site 1".into())
    })?;
    // First-column entries run up to N + 1 - r_min; parity keeps odd m.
    let top = n + 1 - first_tail;
    let free_first_column = (3..=top).step_by(2).collect();
    Ok(ParityReduction { n_sites: n, free_first_column })
}

/// Reference transfer chain and the quantities every designer needs.
struct ReferenceFrame {
    eigenvalues: Vec<f64>,
    chain: ChainSpec,
    es: EigenSystem,
    v_basis: Matrix,
    t0: f64,
}

impl ReferenceFrame {
    fn new(spectrum: &PstSpectrum) -> Result<Self> {
        let chain = pst_chain_from_spectrum(spectrum)?;
        let es = eigensystem(&chain)?;
        let v_basis = v_basis_from(&es);
        Ok(Self {
            eigenvalues: es.eigenvalues().to_vec(),
            chain,
            es,
            v_basis,
            t0: spectrum.t0(),
        })
    }

    fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `lambda_{n,1}` of the reference, positive by the sign convention.
    fn first_row(&self, idx: usize) -> f64 {
        self.es.vector_component(0, idx)
    }

    /// Reconstruct a chain from candidate weights and report its real
    /// arrival amplitudes. `None` when the weights are infeasible.
    fn realize(&self, weights: &[f64]) -> Option<(ChainSpec, Vec<f64>)> {
        if weights.iter().any(|&w| !(w > WEIGHT_FLOOR)) {
            return None;
        }
        let sum: f64 = weights.iter().sum();
        let normalized: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        let chain = chain_from_v1(&normalized, &self.eigenvalues).ok()?;
        let es = eigensystem(&chain).ok()?;
        Some((chain, synthesis_output(&es)))
    }
}

fn alternating_sign(idx: usize) -> f64 {
    if idx % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Chain sending `|1> -> alpha1 |1> + sqrt(1 - alpha1^2) |N>` at the
/// spectrum's transfer time. Closed form: the first column is
/// `(1, 0, ..., 0, alpha1)`, so the weights are
/// `w_n = lambda~_{n,1}^2 (1 + alpha1 (-1)^{n+1})`.
pub fn design_end_pair(spectrum: &PstSpectrum, alpha1: f64) -> Result<DesignResult> {
    let n = spectrum.n_sites();
    if n < 2 {
        return Err(Error::UnsupportedTarget("end-pair revival needs N >= 2".into()));
    }
    let alpha_n_sq = 1.0 - alpha1 * alpha1;
    if alpha_n_sq < END_AMPLITUDE_TOL * END_AMPLITUDE_TOL {
        return Err(Error::InfeasibleTarget(format!(
            "alpha_1 = {alpha1} leaves no weight on the end site"
        )));
    }
    let alpha_n = alpha_n_sq.sqrt();
    let frame = ReferenceFrame::new(spectrum)?;
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let l1 = frame.first_row(i);
            l1 * l1 * (1.0 + alpha1 * alternating_sign(i))
        })
        .collect();
    debug_assert!(weights.iter().all(|&w| w > 0.0));
    let (chain, achieved) = frame.realize(&weights).ok_or_else(|| {
        Error::InvalidWeights("end-pair weights became infeasible".into())
    })?;
    let mut beta = vec![0.0; n];
    beta[0] = 1.0;
    beta[n - 1] += alpha1;
    let target = TargetState::from_support_at(n, &[(1, alpha1), (n, alpha_n)], 1, frame.t0)?;
    finalize_design(
        chain,
        &achieved,
        target,
        beta,
        weights,
        DesignDiagnostics { root_parameter: Some(alpha1), ..Default::default() },
    )
}

/// All real roots of the end-column normalisation for the three-site family
/// `alpha_1 |1> + alpha_{N-1} |N-1> + alpha_N |N>`. The equation in the one
/// free coefficient `beta_2` reads
/// `alpha_N^2 sum_n c_n / (1 + beta_2 d_n) = 1` with
/// `c_n = lambda~_{n,1}^2 / (1 + alpha1 (-1)^{n+1})` and
/// `d_n = (lambda_n - B~_1) / J~_1`. Includes roots whose weights are
/// infeasible; the designer filters.
pub fn triple_normalization_roots(
    spectrum: &PstSpectrum,
    alpha1: f64,
    alpha_n: f64,
) -> Result<Vec<f64>> {
    let frame = ReferenceFrame::new(spectrum)?;
    Ok(normalization_roots(&frame, alpha1, alpha_n))
}

fn normalization_roots(frame: &ReferenceFrame, alpha1: f64, alpha_n: f64) -> Vec<f64> {
    let n = frame.n();
    let b1 = frame.chain.fields()[0];
    let j1 = frame.chain.couplings()[0];
    let c: Vec<f64> = (0..n)
        .map(|i| {
            let l1 = frame.first_row(i);
            l1 * l1 / (1.0 + alpha1 * alternating_sign(i))
        })
        .collect();
    let d: Vec<f64> = frame.eigenvalues.iter().map(|l| (l - b1) / j1).collect();
    let a2 = alpha_n * alpha_n;
    let f = |beta: f64| -> f64 {
        let mut acc = 0.0;
        for (ci, di) in c.iter().zip(&d) {
            acc += ci / (1.0 + beta * di);
        }
        a2 * acc - 1.0
    };
    let f_prime = |beta: f64| -> f64 {
        let mut acc = 0.0;
        for (ci, di) in c.iter().zip(&d) {
            let den = 1.0 + beta * di;
            acc -= ci * di / (den * den);
        }
        a2 * acc
    };

    let mut roots = if n <= 8 {
        cleared_polynomial_roots(&c, &d, a2)
    } else {
        scan_rational_roots(&f, &c, &d, a2)
    };
    // Newton polish to machine precision on the rational form.
    for r in &mut roots {
        let mut x = *r;
        for _ in 0..4 {
            let fx = f(x);
            let dfx = f_prime(x);
            if dfx == 0.0 {
                break;
            }
            let next = x - fx / dfx;
            if !next.is_finite() || (next - x).abs() > 1e-2 * (1.0 + x.abs()) {
                break;
            }
            x = next;
        }
        if f(x).abs() <= f(*r).abs() {
            *r = x;
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * (1.0 + a.abs()));

    // A double root (the equation is tangent to zero, e.g. beta = 0 when the
    // corner amplitude vanishes) surfaces as a narrow pair; snap it onto the
    // critical point between the two.
    let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
    let mut i = 0;
    while i < roots.len() {
        if i + 1 < roots.len() {
            let (a, b) = (roots[i], roots[i + 1]);
            if b - a <= 1e-4 * (1.0 + a.abs()) && f_prime(a) * f_prime(b) < 0.0 {
                let c = bisect(&f_prime, a, b);
                if f(c).abs() <= 1e-12 {
                    merged.push(c);
                    i += 2;
                    continue;
                }
            }
        }
        merged.push(roots[i]);
        i += 1;
    }
    merged
}

/// Clear denominators into a polynomial; exact for small sizes.
fn cleared_polynomial_roots(c: &[f64], d: &[f64], a2: f64) -> Vec<f64> {
    let mut poly = vec![0.0];
    for (i, &ci) in c.iter().enumerate() {
        let mut term = vec![a2 * ci];
        for (j, &dj) in d.iter().enumerate() {
            if j != i {
                term = poly_mul_linear(&term, dj);
            }
        }
        if poly.len() < term.len() {
            poly.resize(term.len(), 0.0);
        }
        for (k, &t) in term.iter().enumerate() {
            poly[k] += t;
        }
    }
    let mut full = vec![1.0];
    for &dj in d {
        full = poly_mul_linear(&full, dj);
    }
    if poly.len() < full.len() {
        poly.resize(full.len(), 0.0);
    }
    for (k, &t) in full.iter().enumerate() {
        poly[k] -= t;
    }
    polynomial_real_roots(&poly)
}

/// Bracket roots of the rational normalisation between its poles.
fn scan_rational_roots<F: Fn(f64) -> f64>(f: &F, c: &[f64], d: &[f64], a2: f64) -> Vec<f64> {
    let d_scale = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut poles: Vec<f64> = d
        .iter()
        .filter(|x| x.abs() > 1e-12 * d_scale.max(1.0))
        .map(|x| -1.0 / x)
        .collect();
    poles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    poles.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs()));

    let c_sum: f64 = c.iter().sum();
    let min_d = d
        .iter()
        .filter(|x| x.abs() > 1e-12 * d_scale.max(1.0))
        .fold(f64::INFINITY, |m, x| m.min(x.abs()));
    let reach = (1.0 + 2.0 * a2 * c_sum) / min_d;

    let mut points = Vec::with_capacity(poles.len() + 2);
    points.push(poles.first().copied().unwrap_or(0.0) - reach);
    points.extend(poles.iter().copied());
    points.push(poles.last().copied().unwrap_or(0.0) + reach);

    let mut roots = Vec::new();
    const GRID: usize = 4001;
    for w in points.windows(2) {
        let width = w[1] - w[0];
        if width <= 0.0 {
            continue;
        }
        let margin = (1e-9 * width).max(1e-300);
        let lo = w[0] + margin;
        let hi = w[1] - margin;
        if hi <= lo {
            continue;
        }
        let mut prev_x = lo;
        let mut prev_f = f(lo);
        for g in 1..GRID {
            let x = lo + width * (g as f64) / (GRID as f64 - 1.0);
            let x = x.min(hi);
            let fx = f(x);
            if prev_f.is_finite() && fx.is_finite() && prev_f * fx <= 0.0 && prev_f != fx {
                roots.push(bisect(f, prev_x, x));
            }
            prev_x = x;
            prev_f = fx;
            if x >= hi {
                break;
            }
        }
    }
    roots
}

/// Chains realising `|1> -> alpha1 |1> + alpha_{N-1} |N-1> + alpha_N |N>`.
/// One design per feasible real root of the normalisation equation, sorted
/// by `|beta_2|`.
pub fn design_triple(
    spectrum: &PstSpectrum,
    alpha1: f64,
    alpha_n1: f64,
    alpha_n: f64,
) -> Result<Vec<DesignResult>> {
    let n = spectrum.n_sites();
    if n < 4 {
        return Err(Error::UnsupportedTarget(
            "the three-site family needs N >= 4".into(),
        ));
    }
    check_unit_norm(&[alpha1, alpha_n1, alpha_n])?;
    if alpha_n.abs() < END_AMPLITUDE_TOL {
        return Err(Error::InfeasibleTarget(
            "the target must overlap the end site".into(),
        ));
    }
    let frame = ReferenceFrame::new(spectrum)?;
    let roots = normalization_roots(&frame, alpha1, alpha_n);
    let target = TargetState::from_support_at(
        n,
        &[(1, alpha1), (n - 1, alpha_n1), (n, alpha_n)],
        1,
        frame.t0,
    )?;

    let b1 = frame.chain.fields()[0];
    let j1 = frame.chain.couplings()[0];
    let mut designs = Vec::new();
    for &beta2 in &roots {
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                let l1 = frame.first_row(i);
                let d = (frame.eigenvalues[i] - b1) / j1;
                l1 * l1 * (1.0 + alpha1 * alternating_sign(i)) * (1.0 + beta2 * d)
            })
            .collect();
        let Some((chain, achieved)) = frame.realize(&weights) else {
            continue;
        };
        let mut beta = vec![0.0; n];
        beta[0] = 1.0;
        beta[1] += beta2;
        beta[n - 2] += alpha1 * beta2;
        beta[n - 1] += alpha1;
        let design = finalize_design(
            chain,
            &achieved,
            target.clone(),
            beta,
            weights,
            DesignDiagnostics { root_parameter: Some(beta2), ..Default::default() },
        )?;
        if design.fidelity >= 1.0 - DESIGN_FIDELITY_TOL {
            designs.push(design);
        }
    }
    if designs.is_empty() {
        return Err(Error::NoValidRoot(format!(
            "none of the {} real roots gives positive weights",
            roots.len()
        )));
    }
    designs.sort_by(|a, b| {
        let ka = a.diagnostics.root_parameter.unwrap().abs();
        let kb = b.diagnostics.root_parameter.unwrap().abs();
        ka.partial_cmp(&kb).unwrap()
    });
    Ok(designs)
}

fn check_unit_norm(amps: &[f64]) -> Result<()> {
    let norm2: f64 = amps.iter().map(|a| a * a).sum();
    if (norm2 - 1.0).abs() > TARGET_NORM_TOL {
        return Err(Error::UnsupportedTarget(format!(
            "amplitudes must have unit norm (got |alpha|^2 = {norm2})"
        )));
    }
    Ok(())
}

/// Parametrisation of the first coefficient column for the structured
/// designers: entry 1 is fixed at one, a head block is free, and the tail
/// mirrors the head scaled by `alpha1`.
struct BetaPattern {
    n: usize,
    alpha1: f64,
    /// 0-indexed free positions.
    free: Vec<usize>,
    /// (destination, source) pairs with `beta[dest] = alpha1 * beta[src]`.
    mirrored: Vec<(usize, usize)>,
}

impl BetaPattern {
    /// Head of length `k` mirrored into the last `k` entries.
    fn last_k(n: usize, k: usize, alpha1: f64, parity: bool) -> Self {
        let free = (1..k).filter(|&p| !parity || p % 2 == 0).collect();
        let mirrored = (0..k).map(|p| (n - 1 - p, p)).collect();
        Self { n, alpha1, free, mirrored }
    }

    /// Free head up to `N + 1 - r`, with only the first `r - 1` entries
    /// mirrored; used for interior support at site `r`.
    fn small_r(n: usize, r: usize, alpha1: f64, parity: bool) -> Self {
        let free = (1..=n - r).filter(|&p| !parity || p % 2 == 0).collect();
        let mirrored = (0..r - 1).map(|p| (n - 1 - p, p)).collect();
        Self { n, alpha1, free, mirrored }
    }

    fn dim(&self) -> usize {
        self.free.len()
    }

    fn build(&self, params: &[f64]) -> Vec<f64> {
        assert_eq!(params.len(), self.free.len());
        let mut beta = vec![0.0; self.n];
        beta[0] = 1.0;
        for (&pos, &value) in self.free.iter().zip(params) {
            beta[pos] = value;
        }
        for &(dest, src) in &self.mirrored {
            beta[dest] += self.alpha1 * beta[src];
        }
        beta
    }
}

/// Residual sites (0-indexed) for a pattern: every site from `r_min` to
/// `N - 1` that is not already forced to vanish by parity.
fn residual_sites(n: usize, r_min: usize, parity: bool) -> Vec<usize> {
    (r_min..n)
        .filter(|&site_1idx| site_1idx < n)
        .filter(|&site_1idx| !parity || (n - site_1idx) % 2 == 0)
        .map(|site_1idx| site_1idx - 1)
        .collect()
}

struct EngineSolution {
    chain: ChainSpec,
    achieved: Vec<f64>,
    beta: Vec<f64>,
    weights: Vec<f64>,
    iterations: usize,
    residual: f64,
}

/// Solve for the free column entries so the arrival amplitudes hit the
/// requested values on the residual sites. Runs one Newton per sign
/// assignment of the nonzero targets and per seed, dedupes converged
/// solutions by their gauge class.
fn solve_pattern(
    frame: &ReferenceFrame,
    pattern: &BetaPattern,
    sites: &[usize],
    site_targets: &[f64],
) -> Vec<EngineSolution> {
    assert_eq!(pattern.dim(), sites.len(), "pattern/residual dimension mismatch");
    let nonzero: Vec<usize> = (0..site_targets.len())
        .filter(|&i| site_targets[i].abs() > 1e-12)
        .collect();
    let patterns = 1usize << nonzero.len().min(6);

    let opts = NewtonOptions { max_iterations: 200, tolerance: 1e-12, ..Default::default() };
    let mut solutions: Vec<EngineSolution> = Vec::new();
    for mask in 0..patterns {
        let mut signed = site_targets.to_vec();
        for (bit, &idx) in nonzero.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                signed[idx] = -signed[idx];
            }
        }
        let eval = |params: &[f64]| -> Option<Vec<f64>> {
            let beta = pattern.build(params);
            let weights = frame.v_basis.mul_vec(&beta);
            let (_, achieved) = frame.realize(&weights)?;
            Some(
                sites
                    .iter()
                    .zip(&signed)
                    .map(|(&s, &t)| achieved[s] - t)
                    .collect(),
            )
        };
        for seed in engine_seeds(pattern.dim()) {
            let Some(out) = damped_newton(&eval, &seed, &opts) else {
                continue;
            };
            record_solution(frame, pattern, &out.x, out.iterations, out.residual, &mut solutions);
        }
        if solutions.is_empty() {
            // Homotopy fallback: ramp the requested amplitudes up in stages.
            let mut params = vec![0.0; pattern.dim()];
            for stage in [0.25, 0.5, 0.75, 1.0] {
                let staged: Vec<f64> = signed.iter().map(|t| t * stage).collect();
                let eval_stage = |p: &[f64]| -> Option<Vec<f64>> {
                    let beta = pattern.build(p);
                    let weights = frame.v_basis.mul_vec(&beta);
                    let (_, achieved) = frame.realize(&weights)?;
                    Some(
                        sites
                            .iter()
                            .zip(&staged)
                            .map(|(&s, &t)| achieved[s] - t)
                            .collect(),
                    )
                };
                match damped_newton(&eval_stage, &params, &opts) {
                    Some(out) => {
                        params = out.x;
                        if stage == 1.0 {
                            record_solution(
                                frame,
                                pattern,
                                &params,
                                out.iterations,
                                out.residual,
                                &mut solutions,
                            );
                        }
                    }
                    None => break,
                }
            }
        }
    }
    solutions
}

fn record_solution(
    frame: &ReferenceFrame,
    pattern: &BetaPattern,
    params: &[f64],
    iterations: usize,
    residual: f64,
    solutions: &mut Vec<EngineSolution>,
) {
    let beta = pattern.build(params);
    let weights = frame.v_basis.mul_vec(&beta);
    let Some((chain, achieved)) = frame.realize(&weights) else {
        return;
    };
    // Dedupe on the gauge class: fields and coupling magnitudes.
    let key: Vec<f64> = chain
        .fields()
        .iter()
        .copied()
        .chain(chain.couplings().iter().map(|j| j.abs()))
        .collect();
    let scale = key.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for existing in solutions.iter() {
        let other: Vec<f64> = existing
            .chain
            .fields()
            .iter()
            .copied()
            .chain(existing.chain.couplings().iter().map(|j| j.abs()))
            .collect();
        let dist = key
            .iter()
            .zip(&other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if dist <= 1e-6 * scale {
            return;
        }
    }
    solutions.push(EngineSolution { chain, achieved, beta, weights, iterations, residual });
}

fn engine_seeds(dim: usize) -> Vec<Vec<f64>> {
    let mut seeds = vec![vec![0.0; dim]];
    for i in 0..dim {
        for mag in [0.15, -0.15] {
            let mut s = vec![0.0; dim];
            s[i] = mag;
            seeds.push(s);
        }
    }
    seeds
}

fn collect_designs(
    solutions: Vec<EngineSolution>,
    target: &TargetState,
) -> Result<Vec<DesignResult>> {
    let mut designs = Vec::new();
    let mut best_residual = f64::INFINITY;
    for sol in solutions {
        best_residual = best_residual.min(sol.residual);
        let design = finalize_design(
            sol.chain,
            &sol.achieved,
            target.clone(),
            sol.beta,
            sol.weights,
            DesignDiagnostics {
                root_parameter: None,
                iterations: sol.iterations,
                residual: sol.residual,
            },
        )?;
        if design.fidelity >= 1.0 - DESIGN_FIDELITY_TOL {
            designs.push(design);
        }
    }
    if designs.is_empty() {
        return Err(Error::ConvergenceFailure {
            iterations: 0,
            residual: best_residual,
            best: None,
        });
    }
    // Callers pick by speed; put the slowest couplings last.
    designs.sort_by(|a, b| {
        a.chain
            .max_coupling()
            .partial_cmp(&b.chain.max_coupling())
            .unwrap()
    });
    Ok(designs)
}

/// Chains placing the excitation on site 1 and the last `k` sites
/// (`k < N/2`), with the support given as (site, amplitude) pairs.
pub fn design_last_k(
    spectrum: &PstSpectrum,
    support: &[(usize, f64)],
) -> Result<Vec<DesignResult>> {
    let spec = RevivalSpec::new(support.to_vec(), spectrum.clone())?;
    let n = spec.n_sites();
    let tail = spec.tail_sites();
    let first_tail = *tail.first().ok_or_else(|| {
        Error::UnsupportedTarget("target needs interior support".into())
    })?;
    let k = n + 1 - first_tail;
    if 2 * k >= n {
        return Err(Error::UnsupportedTarget(format!(
            "support reaches site {first_tail}, too deep for the last-k family (k = {k} \
             must satisfy 2k < N = {n})"
        )));
    }
    if k == 1 {
        return design_end_pair(spectrum, spec.amplitude_at(1)).map(|d| vec![d]);
    }
    let alpha1 = spec.amplitude_at(1);
    if k == 2 {
        return design_triple(
            spectrum,
            alpha1,
            spec.amplitude_at(n - 1),
            spec.amplitude_at(n),
        );
    }

    let parity = spectrum.is_symmetric() && spec.parity_compatible();
    let frame = ReferenceFrame::new(spectrum)?;
    let pattern = BetaPattern::last_k(n, k, alpha1, parity);
    let sites = residual_sites(n, first_tail, parity);
    let site_targets: Vec<f64> = sites.iter().map(|&s| spec.amplitude_at(s + 1)).collect();
    let solutions = solve_pattern(&frame, &pattern, &sites, &site_targets);
    collect_designs(solutions, &spec.target_state()?)
}

/// Chains realising `alpha_1 |1> + alpha_r |r> + alpha_N |N>` for an
/// interior site `r` of 2 or 3.
pub fn design_small_r(
    spectrum: &PstSpectrum,
    alpha1: f64,
    alpha_r: f64,
    alpha_n: f64,
    r: usize,
) -> Result<Vec<DesignResult>> {
    if !(r == 2 || r == 3) {
        return Err(Error::UnsupportedTarget(format!(
            "interior site r = {r} outside the analytic family {{2, 3}}"
        )));
    }
    let n = spectrum.n_sites();
    if n < r + 2 {
        return Err(Error::UnsupportedTarget(format!(
            "N = {n} leaves no room for support on 1, {r} and {n}"
        )));
    }
    check_unit_norm(&[alpha1, alpha_r, alpha_n])?;
    if alpha_n.abs() < END_AMPLITUDE_TOL {
        return Err(Error::InfeasibleTarget(
            "the target must overlap the end site".into(),
        ));
    }
    if alpha_r == 0.0 {
        return design_end_pair(spectrum, alpha1).map(|d| vec![d]);
    }
    let target =
        TargetState::from_support_at(n, &[(1, alpha1), (r, alpha_r), (n, alpha_n)], 1, spectrum.t0())?;

    if r == 2 {
        return design_interior_linear(spectrum, &target, &[(2, alpha_r)], alpha1, alpha_n);
    }

    // r = 3: organise around the free column entries directly; with a
    // parity-compatible target this collapses to a handful of parameters.
    let parity = spectrum.is_symmetric()
        && parity_pattern_holds(n, &[(1, alpha1), (r, alpha_r), (n, alpha_n)]);
    let frame = ReferenceFrame::new(spectrum)?;
    let pattern = BetaPattern::small_r(n, r, alpha1, parity);
    let sites = residual_sites(n, r, parity);
    let site_targets: Vec<f64> = sites
        .iter()
        .map(|&s| if s + 1 == r { alpha_r } else { 0.0 })
        .collect();
    let solutions = solve_pattern(&frame, &pattern, &sites, &site_targets);
    collect_designs(solutions, &target)
}

/// Combined revivals over both ends of the chain with support contained in
/// `{1, 2, N-1, N}`: the head is handled like the interior-site family and
/// the tail like the three-site family.
pub fn design_combined(
    spectrum: &PstSpectrum,
    support: &[(usize, f64)],
) -> Result<Vec<DesignResult>> {
    let spec = RevivalSpec::new(support.to_vec(), spectrum.clone())?;
    let n = spec.n_sites();
    let allowed = [1, 2, n - 1, n];
    if spec
        .support()
        .iter()
        .any(|&(site, amp)| amp != 0.0 && !allowed.contains(&site))
    {
        return Err(Error::UnsupportedTarget(
            "combined designs support only sites {1, 2, N-1, N}; use the numeric designer"
                .into(),
        ));
    }
    let alpha1 = spec.amplitude_at(1);
    let alpha2 = spec.amplitude_at(2);
    let alpha_n = spec.amplitude_at(n);
    if alpha2 == 0.0 {
        return design_triple(spectrum, alpha1, spec.amplitude_at(n - 1), alpha_n);
    }
    let head = [(2usize, alpha2), (n - 1, spec.amplitude_at(n - 1))];
    let head: Vec<(usize, f64)> = head.iter().copied().filter(|&(_, a)| a != 0.0).collect();
    design_interior_linear(spectrum, &spec.target_state()?, &head, alpha1, alpha_n)
}

/// The linear-system designer: for support on site 2 (and optionally site
/// N-1), the full first column solves
/// `[S - alpha1 I - (alpha2 / J1)(H~ - B1 I)] beta = rhs`
/// once `B1` and `J1` are known, where `S` reverses the column. Newton runs
/// on `(B1, J1)` (plus the free corner entry when site N-1 carries weight)
/// against the boundary conditions `beta_1 = 1`, `beta_N = alpha1` and the
/// first-moment identity.
fn design_interior_linear(
    spectrum: &PstSpectrum,
    target: &TargetState,
    head: &[(usize, f64)],
    alpha1: f64,
    alpha_n: f64,
) -> Result<Vec<DesignResult>> {
    let n = spectrum.n_sites();
    let frame = ReferenceFrame::new(spectrum)?;
    let b1_ref = frame.chain.fields()[0];
    let j1_ref = frame.chain.couplings()[0];
    let alpha2 = head
        .iter()
        .find(|&&(site, _)| site == 2)
        .map_or(0.0, |&(_, a)| a);
    let alpha_n1 = head
        .iter()
        .find(|&&(site, _)| site == n - 1)
        .map_or(0.0, |&(_, a)| a);
    let with_corner = alpha_n1 != 0.0;

    // Dense reference Hamiltonian for building the column operator.
    let mut h_ref = Matrix::zeros(n, n);
    for i in 0..n {
        h_ref.set(i, i, frame.chain.fields()[i]);
        if i + 1 < n {
            h_ref.set(i, i + 1, frame.chain.couplings()[i]);
            h_ref.set(i + 1, i, frame.chain.couplings()[i]);
        }
    }

    let solve_column = |b1: f64, j1: f64, corner: f64| -> Option<Vec<f64>> {
        if !(j1 > 1e-6 * j1_ref) {
            return None;
        }
        let mut m = Matrix::zeros(n, n);
        for row in 0..n {
            for col in 0..n {
                let mut v = 0.0;
                if row + col == n - 1 {
                    v += 1.0; // reversal
                }
                if row == col {
                    v -= alpha1;
                }
                let mut h = h_ref.at(row, col);
                if row == col {
                    h -= b1;
                }
                v -= alpha2 / j1 * h;
                m.set(row, col, v);
            }
        }
        let mut rhs = vec![0.0; n];
        rhs[n - 1] = alpha_n * alpha_n + alpha_n1 * alpha_n1;
        if with_corner {
            rhs[n - 2] = alpha_n1 * corner;
        }
        let lu = LuFactor::new(&m).ok()?;
        let beta = lu.solve(&rhs);
        beta.iter().all(|v| v.is_finite()).then_some(beta)
    };

    let b2_ref = frame.chain.fields()[1];
    let j2_ref = frame.chain.couplings()[1];
    let residuals = |x: &[f64]| -> Option<Vec<f64>> {
        let (b1, j1) = (x[0], x[1]);
        let corner = if with_corner { x[2] } else { 0.0 };
        let beta = solve_column(b1, j1, corner)?;
        let mut r = vec![beta[0] - 1.0, beta[n - 1] - alpha1];
        if with_corner {
            // Second-moment identity (B1^2 + J1^2) <1|b> = <1|H~^2|b>; the
            // first-moment one is already implied by the top row of the
            // column equation, so it cannot pin the extra corner unknown.
            let h2 = (b1_ref * b1_ref + j1_ref * j1_ref) * beta[0]
                + j1_ref * (b1_ref + b2_ref) * beta[1]
                + j1_ref * j2_ref * beta[2];
            r.push((b1 * b1 + j1 * j1) * beta[0] - h2);
        }
        Some(r)
    };

    // Scan the (B1, J1) plane coarsely and polish every local minimum of
    // the residual norm; the boundary-condition roots sit far apart and a
    // blind Newton grid misses basins.
    let b_axis: Vec<f64> = (0..81)
        .map(|i| b1_ref + j1_ref * (-2.0 + 4.0 * i as f64 / 80.0))
        .collect();
    let j_axis: Vec<f64> = (0..49)
        .map(|i| j1_ref * (0.08 + 1.92 * i as f64 / 48.0))
        .collect();
    let corners: &[f64] = if with_corner { &[-1.0, 1.0] } else { &[0.0] };
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    for &corner in corners {
        let mut norms = vec![vec![f64::INFINITY; j_axis.len()]; b_axis.len()];
        for (bi, &b1) in b_axis.iter().enumerate() {
            for (ji, &j1) in j_axis.iter().enumerate() {
                let mut x = vec![b1, j1];
                if with_corner {
                    x.push(corner);
                }
                if let Some(r) = residuals(&x) {
                    norms[bi][ji] = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                }
            }
        }
        for bi in 0..b_axis.len() {
            for ji in 0..j_axis.len() {
                let v = norms[bi][ji];
                if !v.is_finite() {
                    continue;
                }
                let mut is_min = true;
                for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    let (ni, nj) = (bi as i64 + di, ji as i64 + dj);
                    if ni >= 0 && nj >= 0 && (ni as usize) < b_axis.len() && (nj as usize) < j_axis.len()
                    {
                        if norms[ni as usize][nj as usize] < v {
                            is_min = false;
                            break;
                        }
                    }
                }
                if is_min {
                    let mut seed = vec![b_axis[bi], j_axis[ji]];
                    if with_corner {
                        seed.push(corner);
                    }
                    seeds.push(seed);
                }
            }
        }
    }

    let opts = NewtonOptions { max_iterations: 200, tolerance: 1e-12, ..Default::default() };
    let debug = std::env::var("CHAINSMITH_DEBUG_DESIGN").is_ok();
    let mut solutions: Vec<EngineSolution> = Vec::new();
    for seed in seeds {
        let Some(out) = damped_newton(&residuals, &seed, &opts) else {
            if debug {
                eprintln!("DBG newton fail from {seed:?}");
            }
            continue;
        };
        let Some(beta) = solve_column(out.x[0], out.x[1], out.x.get(2).copied().unwrap_or(0.0))
        else {
            continue;
        };
        let weights = frame.v_basis.mul_vec(&beta);
        let Some((chain, achieved)) = frame.realize(&weights) else {
            if debug {
                eprintln!("DBG infeasible weights at {:?}", out.x);
            }
            continue;
        };
        // Reject spurious boundary roots whose chain disagrees with the
        // parameters that generated the column.
        if (chain.fields()[0] - out.x[0]).abs() > 1e-6 * (1.0 + out.x[0].abs())
            || (chain.couplings()[0] - out.x[1]).abs() > 1e-6 * (1.0 + out.x[1].abs())
        {
            if debug {
                eprintln!(
                    "DBG inconsistent root {:?}: chain B1 {} J1 {}",
                    out.x,
                    chain.fields()[0],
                    chain.couplings()[0]
                );
            }
            continue;
        }
        let sol = EngineSolution {
            chain,
            achieved,
            beta,
            weights,
            iterations: out.iterations,
            residual: out.residual,
        };
        record_engine_solution(sol, &mut solutions);
    }
    collect_designs(solutions, target)
}

fn record_engine_solution(sol: EngineSolution, solutions: &mut Vec<EngineSolution>) {
    let key: Vec<f64> = sol
        .chain
        .fields()
        .iter()
        .copied()
        .chain(sol.chain.couplings().iter().map(|j| j.abs()))
        .collect();
    let scale = key.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for existing in solutions.iter() {
        let other: Vec<f64> = existing
            .chain
            .fields()
            .iter()
            .copied()
            .chain(existing.chain.couplings().iter().map(|j| j.abs()))
            .collect();
        let dist = inf_norm(
            &key.iter()
                .zip(&other)
                .map(|(a, b)| a - b)
                .collect::<Vec<f64>>(),
        );
        if dist <= 1e-6 * scale {
            return;
        }
    }
    solutions.push(sol);
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::basis::{beta_residual, beta_table};

    fn five_site_spectrum() -> PstSpectrum {
        PstSpectrum::new(vec![2, 1, 0, -1, -2], FRAC_PI_2).unwrap()
    }

    // Entry moduli of the worked five-site example realising
    // (|4> + |5>)/sqrt(2), rebuilt from its closed forms.
    fn five_site_pair_reference() -> (Vec<f64>, Vec<f64>) {
        let s10 = 10f64.sqrt();
        let fields = vec![
            -2.0 * ((6.0 - s10) / 13.0).sqrt(),
            -(5.0 / 13.0 * (62.0 - 19.0 * s10)).sqrt(),
            -(5.0 / 13.0 * (118.0 - 37.0 * s10)).sqrt(),
            ((62.0 - 19.0 * s10) / 26.0).sqrt(),
            (3.0 + (5f64 / 2.0).sqrt()).sqrt(),
        ];
        let couplings = vec![
            -2.0 * ((7.0 + s10) / 13.0).sqrt(),
            (9.0 * s10 - 24.0).sqrt(),
            2.0 * (2.0 / 13.0 * (1.0 + 2.0 * s10)).sqrt(),
            -(3.0 + (5f64 / 2.0).sqrt()).sqrt(),
        ];
        (fields, couplings)
    }

    #[test]
    fn end_pair_at_zero_alpha_returns_the_transfer_chain() {
        let design = design_end_pair(&five_site_spectrum(), 0.0).unwrap();
        let want = [2.0, 6.0f64.sqrt(), 6.0f64.sqrt(), 2.0];
        for (got, want) in design.chain.couplings().iter().zip(want) {
            assert!((got - want).abs() < 1e-9);
        }
        assert!((design.fidelity - 1.0).abs() < 1e-10);
    }

    #[test]
    fn end_pair_even_size() {
        let spectrum = PstSpectrum::linear(20, FRAC_PI_2).unwrap();
        let design = design_end_pair(&spectrum, 1.0 / 2f64.sqrt()).unwrap();
        assert!(design.fidelity >= 1.0 - 1e-8, "fidelity {}", design.fidelity);
        let a = design.target.amplitudes();
        assert!((a[0] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((a[19] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn end_pair_rejects_unit_alpha() {
        let err = design_end_pair(&five_site_spectrum(), 1.0 - 1e-14).unwrap_err();
        assert!(matches!(err, Error::InfeasibleTarget(_)));
    }

    #[test]
    fn end_pair_negative_alpha() {
        let design = design_end_pair(&five_site_spectrum(), -0.6).unwrap();
        assert!(design.fidelity >= 1.0 - 1e-9);
        assert!((design.target.amplitudes()[0] + 0.6).abs() < 1e-12);
    }

    #[test]
    fn five_site_pair_revival_matches_reference_entries() {
        let spectrum = five_site_spectrum();
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let designs = design_triple(&spectrum, 0.0, inv_sqrt2, inv_sqrt2).unwrap();
        assert_eq!(designs.len(), 2, "both sign roots are feasible");
        let (ref_fields, ref_couplings) = five_site_pair_reference();
        for design in &designs {
            assert!(design.fidelity >= 1.0 - 1e-10, "fidelity {}", design.fidelity);
            for (got, want) in design.chain.fields().iter().zip(&ref_fields) {
                assert!(
                    (got.abs() - want.abs()).abs() < 1e-8,
                    "|field| {got} vs {want}"
                );
            }
            for (got, want) in design.chain.couplings().iter().zip(&ref_couplings) {
                assert!(
                    (got.abs() - want.abs()).abs() < 1e-8,
                    "|coupling| {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn five_site_roots_match_quartic() {
        let spectrum = five_site_spectrum();
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let roots = triple_normalization_roots(&spectrum, 0.0, inv_sqrt2).unwrap();
        assert_eq!(roots.len(), 4);
        let s10 = 10f64.sqrt();
        let mut squares: Vec<f64> = roots.iter().map(|r| r * r).collect();
        squares.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = [
            (6.0 - s10) / 13.0,
            (6.0 - s10) / 13.0,
            (6.0 + s10) / 13.0,
            (6.0 + s10) / 13.0,
        ];
        for (got, want) in squares.iter().zip(want) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn scan_and_polynomial_roots_agree() {
        let spectrum = five_site_spectrum();
        let frame = ReferenceFrame::new(&spectrum).unwrap();
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let b1 = frame.chain.fields()[0];
        let j1 = frame.chain.couplings()[0];
        let c: Vec<f64> = (0..5)
            .map(|i| {
                let l1 = frame.first_row(i);
                l1 * l1
            })
            .collect();
        let d: Vec<f64> = frame.eigenvalues.iter().map(|l| (l - b1) / j1).collect();
        let a2 = inv_sqrt2 * inv_sqrt2;
        let f = |beta: f64| -> f64 {
            a2 * c
                .iter()
                .zip(&d)
                .map(|(ci, di)| ci / (1.0 + beta * di))
                .sum::<f64>()
                - 1.0
        };
        let mut from_poly = cleared_polynomial_roots(&c, &d, a2);
        let mut from_scan = scan_rational_roots(&f, &c, &d, a2);
        from_poly.sort_by(|a, b| a.partial_cmp(b).unwrap());
        from_scan.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(from_poly.len(), from_scan.len());
        for (a, b) in from_poly.iter().zip(&from_scan) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn triple_with_zero_corner_reduces_to_end_pair() {
        let spectrum = five_site_spectrum();
        let alpha1 = 0.5f64;
        let alpha_n = (1.0 - alpha1 * alpha1).sqrt();
        let designs = design_triple(&spectrum, alpha1, 0.0, alpha_n).unwrap();
        let pair = design_end_pair(&spectrum, alpha1).unwrap();
        let zero_root = designs
            .iter()
            .find(|d| d.diagnostics.root_parameter.unwrap().abs() < 1e-9)
            .expect("beta_2 = 0 must be a root");
        for (got, want) in zero_root.chain.couplings().iter().zip(pair.chain.couplings()) {
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn fifteen_site_triple() {
        let spectrum = PstSpectrum::linear(15, FRAC_PI_2).unwrap();
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let designs = design_triple(&spectrum, 0.0, inv_sqrt2, inv_sqrt2).unwrap();
        assert!(!designs.is_empty());
        for design in &designs {
            assert!(design.fidelity >= 1.0 - 1e-8, "fidelity {}", design.fidelity);
        }
    }

    #[test]
    fn triple_designs_satisfy_table_laws() {
        let spectrum = five_site_spectrum();
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let designs = design_triple(&spectrum, 0.0, inv_sqrt2, inv_sqrt2).unwrap();
        let reference = pst_chain_from_spectrum(&spectrum).unwrap();
        for design in &designs {
            let table = beta_table(&design.chain, &reference).unwrap();
            assert!(table.structure_defect() < 1e-10);
            assert!(beta_residual(&table, &design.chain, &reference) < 1e-9);
            // Bottom row carries the achieved amplitudes.
            let bottom = table.bottom_row();
            for (got, want) in bottom.iter().zip(design.target.amplitudes()) {
                assert!((got.abs() - want.abs()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn parity_reduction_free_entries() {
        let spectrum = PstSpectrum::linear(15, FRAC_PI_2).unwrap();
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let spec = RevivalSpec::new(
            vec![(9, inv_sqrt2), (15, inv_sqrt2)],
            spectrum,
        )
        .unwrap();
        let reduction = parity_reduce(&spec).unwrap();
        assert_eq!(reduction.free_first_column(), &[3, 5, 7]);
        assert!(reduction.is_forbidden(1, 2));
        assert!(!reduction.is_forbidden(1, 3));
    }

    #[test]
    fn parity_reduction_rejects_full_support() {
        let spectrum = PstSpectrum::linear(5, FRAC_PI_2).unwrap();
        let a = 1.0 / 5f64.sqrt();
        let spec = RevivalSpec::new(
            vec![(1, a), (2, a), (3, a), (4, a), (5, a)],
            spectrum,
        )
        .unwrap();
        assert!(matches!(parity_reduce(&spec), Err(Error::PatternMismatch(_))));
    }

    #[test]
    fn fifteen_site_parity_revival() {
        let spectrum = PstSpectrum::linear(15, FRAC_PI_2).unwrap();
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let designs =
            design_last_k(&spectrum, &[(9, inv_sqrt2), (15, inv_sqrt2)]).unwrap();
        assert!(!designs.is_empty());
        let best = &designs[0];
        assert!(best.fidelity >= 1.0 - 1e-7, "fidelity {}", best.fidelity);
        // Parity forces all on-site fields to vanish.
        for b in best.chain.fields() {
            assert!(b.abs() < 1e-9, "field {b}");
        }
    }

    #[test]
    fn last_three_sites_equal_weight() {
        let spectrum = PstSpectrum::linear(21, FRAC_PI_2).unwrap();
        let a = 1.0 / 3f64.sqrt();
        let designs =
            design_last_k(&spectrum, &[(19, a), (20, a), (21, a)]).unwrap();
        assert!(!designs.is_empty());
        assert!(designs[0].fidelity >= 1.0 - 1e-7);
    }

    #[test]
    fn small_r_two_with_uniform_triple() {
        let spectrum = PstSpectrum::linear(9, FRAC_PI_2).unwrap();
        let a = 1.0 / 3f64.sqrt();
        let designs = design_small_r(&spectrum, a, a, a, 2).unwrap();
        assert!(!designs.is_empty());
        for d in &designs {
            assert!(d.fidelity >= 1.0 - 1e-7, "fidelity {}", d.fidelity);
        }
    }

    #[test]
    fn small_r_three_interior_revival() {
        // 11 sites: |1> -> (|1> + sqrt(2) |3> + sqrt(2) |11>)/sqrt(5).
        let spectrum = PstSpectrum::linear(11, FRAC_PI_2).unwrap();
        let a1 = 1.0 / 5f64.sqrt();
        let ar = (2f64 / 5.0).sqrt();
        let designs = design_small_r(&spectrum, a1, ar, ar, 3).unwrap();
        assert!(!designs.is_empty());
        for d in &designs {
            assert!(d.fidelity >= 1.0 - 1e-7, "fidelity {}", d.fidelity);
        }
        // Two qualitatively different solutions exist for this target.
        assert!(designs.len() >= 2, "found {} solution(s)", designs.len());
    }

    #[test]
    fn small_r_zero_interior_reduces_to_end_pair() {
        let spectrum = five_site_spectrum();
        let designs = design_small_r(&spectrum, 0.6, 0.0, 0.8, 2).unwrap();
        assert_eq!(designs.len(), 1);
        assert!(designs[0].fidelity >= 1.0 - 1e-8);
    }

    #[test]
    fn combined_both_ends() {
        let spectrum = PstSpectrum::linear(21, FRAC_PI_2).unwrap();
        let designs = design_combined(
            &spectrum,
            &[(1, 0.5), (2, 0.5), (20, 0.5), (21, 0.5)],
        )
        .unwrap();
        assert!(!designs.is_empty());
        assert!(designs[0].fidelity >= 1.0 - 1e-7, "fidelity {}", designs[0].fidelity);
    }

    #[test]
    fn coupling_product_identity() {
        // prod J = alpha_N prod J~ for every design.
        let spectrum = five_site_spectrum();
        let reference = pst_chain_from_spectrum(&spectrum).unwrap();
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let designs = design_triple(&spectrum, 0.0, inv_sqrt2, inv_sqrt2).unwrap();
        for design in &designs {
            let lhs = design.chain.coupling_product();
            let rhs = inv_sqrt2 * reference.coupling_product();
            assert!((lhs - rhs).abs() < 1e-8 * rhs, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn family_classification() {
        let spectrum = PstSpectrum::linear(15, FRAC_PI_2).unwrap();
        let s = |sup: Vec<(usize, f64)>| RevivalSpec::new(sup, spectrum.clone()).unwrap();
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        assert_eq!(
            s(vec![(1, inv_sqrt2), (15, inv_sqrt2)]).family(),
            Some(RevivalFamily::EndPair)
        );
        assert_eq!(
            s(vec![(14, inv_sqrt2), (15, inv_sqrt2)]).family(),
            Some(RevivalFamily::Triple)
        );
        assert_eq!(
            s(vec![(3, inv_sqrt2), (15, inv_sqrt2)]).family(),
            Some(RevivalFamily::SmallR(3))
        );
        assert_eq!(
            s(vec![(9, inv_sqrt2), (15, inv_sqrt2)]).family(),
            Some(RevivalFamily::LastK(7))
        );
        let a = 0.5;
        assert_eq!(s(vec![(1, a), (2, a), (14, a), (15, a)]).family(), None);
    }
}
