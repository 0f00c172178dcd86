//! N-particle Furry-picture Hamiltonian on a Galerkin space of retained
//! positive-energy one-particle states, its block-diagonalized image, and the
//! perturbative series of that image.
//!
//! Every particle keeps the `n_plus` lowest positive eigenvectors `X` of
//! `D_γ`. The block-diagonalized operators are written in the transported
//! basis `Q = U_FW U_γ X`, which lies in the upper (`β_+`) block, so exact and
//! truncated operators are compared on the same finite space.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::decoupling::{
    fitted_geometric_ratio, onset_of_decrease, remainder_weighted_norm, resolvent_distance,
    DecouplingBundle, NUMERICAL_FLOOR,
};
use crate::dirac::{d_gamma, ChannelOperators, OneParticleSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, HermitianEigen};
use crate::pair::PairInteraction;
use crate::series::MatrixSeries;

pub const DEFAULT_DIM_CAP: usize = 20_000;

/// Eigenvalues compared by the convergence report.
pub const REPORTED_EIGENVALUES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FurryConfig {
    pub n_particles: usize,
    pub z_charge: f64,
    pub n_plus: usize,
    pub antisymmetrize: bool,
    pub dim_cap: usize,
}

impl Default for FurryConfig {
    fn default() -> Self {
        Self {
            n_particles: 2,
            z_charge: 2.0,
            n_plus: 20,
            antisymmetrize: false,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }
}

impl FurryConfig {
    /// `n_plus^N`, or `None` on overflow.
    pub fn tensor_dim(&self) -> Option<usize> {
        let exp = u32::try_from(self.n_particles).ok()?;
        self.n_plus.checked_pow(exp)
    }

    pub fn validate(&self, positive_count: usize) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::InvalidInput("n_particles must be at least 1".into()));
        }
        if !(self.z_charge > 0.0 && self.z_charge.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "z_charge must be positive, got {}",
                self.z_charge
            )));
        }
        if self.n_plus == 0 || self.n_plus > positive_count {
            return Err(Error::InvalidInput(format!(
                "n_plus = {} outside 1..={positive_count} (positive one-particle states)",
                self.n_plus
            )));
        }
        if self.antisymmetrize && self.n_plus < self.n_particles {
            return Err(Error::InvalidInput(
                "antisymmetrization needs n_plus >= n_particles".into(),
            ));
        }
        match self.tensor_dim() {
            Some(dim) if dim <= self.dim_cap => Ok(()),
            dim => Err(Error::DimensionCap {
                dim: dim.unwrap_or(usize::MAX),
                cap: self.dim_cap,
            }),
        }
    }

    /// Interaction prefactor `γ/Z`.
    pub fn coupling(&self, gamma: f64) -> f64 {
        gamma / self.z_charge
    }
}

/// Retained one-particle states at one coupling.
#[derive(Debug, Clone)]
pub struct RetainedBasis {
    /// Eigenvalues `ε_1 ≤ … ≤ ε_m`.
    pub energies: Vec<f64>,
    /// Eigenvectors of `D_γ` as columns (`2n × m`).
    pub states: CMat,
    /// `U_FW U_γ X`.
    pub transported: CMat,
}

impl RetainedBasis {
    pub fn new(sys: &OneParticleSystem, count: usize) -> Self {
        let states = sys.lowest_positive_states(count);
        let energies = sys.positive_eigenvalues()[..count].to_vec();
        let transported = linalg::matmul3(&sys.u_fw, &sys.u_gamma, &states);
        Self {
            energies,
            states,
            transported,
        }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }
}

/// Assembled N-particle operators at one coupling.
///
/// `h_furry_exact`, `kinetic`, `interaction` and `d0_sum` are written in the
/// product basis of `X`; `h_diag_exact`, `h_diag_series` and
/// `d0_sum_half_neg` in the product basis of `Q`. With antisymmetrization all
/// of them are compressed onto the alternating subspace.
#[derive(Debug, Clone)]
pub struct FurrySystem {
    pub one_particle: OneParticleSystem,
    pub config: FurryConfig,
    pub basis: RetainedBasis,
    /// `⟨ab|W|cd⟩` on the retained pair basis, index `a·m + b`.
    pub w_matrix: CMat,
    /// Multiplier applied to `W` everywhere (1 for the physical system).
    pub interaction_scale: f64,
    /// `Σ_j [D_γ]_j` on the retained space.
    pub kinetic: CMat,
    /// `(γ/Z) Σ_{i<j} W_ij` on the retained space.
    pub interaction: CMat,
    pub h_furry_exact: CMat,
    pub h_diag_exact: CMat,
    pub h_diag_series: MatrixSeries,
    /// The order shift of the interaction pushed a nonzero coefficient past `K`.
    pub series_truncated: bool,
    /// `Σ_j |D_0|_j` on the retained space (product basis of `X`).
    pub d0_sum: CMat,
    /// `(Σ_j |D_0|_j)^{-1/2}` of the compression onto the `Q` basis.
    pub d0_sum_half_neg: CMat,
    one_body_diag: CMat,
    interaction_diag: CMat,
    one_body_series: MatrixSeries,
    interaction_series: MatrixSeries,
}

/// Assembles every N-particle operator at the coupling of `sys`.
pub fn assemble_furry(
    sys: &OneParticleSystem,
    bundle: &DecouplingBundle,
    pair: &PairInteraction,
    cfg: &FurryConfig,
) -> Result<FurrySystem> {
    cfg.validate(sys.positive_eigenvalues().len())?;
    if bundle.h_diag_series.dim() != sys.dim() {
        return Err(Error::Dimension(
            "bundle and one-particle system built on different grids".into(),
        ));
    }
    let gamma = sys.gamma;
    let m = cfg.n_plus;
    let n_particles = cfg.n_particles;
    let basis = RetainedBasis::new(sys, m);
    let isometry = if cfg.antisymmetrize {
        Some(antisymmetrizer(m, n_particles))
    } else {
        None
    };
    let restrict = |a: CMat| match &isometry {
        Some(iso) => linalg::matmul3(&iso.adjoint(), &a, iso),
        None => a,
    };

    let w_matrix = pair.matrix(&basis.states)?;

    // pulled back vectors P U^* U_FW^* Q, exact and as a series; a single
    // particle has no pairs, so the transported interaction is skipped
    let order = bundle.order();
    let pair_block = m * m;
    let (w_transported, w_series) = if n_particles < 2 {
        (
            CMat::zeros(pair_block, pair_block),
            vec![CMat::zeros(pair_block, pair_block); order + 1],
        )
    } else {
        let fw_back = linalg::matmul(&sys.u_fw.adjoint(), &basis.transported);
        let pulled = linalg::matmul3(&sys.p_plus_gamma, &sys.u_gamma.adjoint(), &fw_back);
        let u_back: Vec<CMat> = bundle
            .u_series
            .coeffs()
            .iter()
            .map(|u| linalg::matmul(&u.adjoint(), &fw_back))
            .collect();
        let pulled_series: Vec<CMat> = (0..=order)
            .map(|k| {
                (0..=k).fold(CMat::zeros(sys.dim(), m), |acc, a| {
                    acc + linalg::matmul(bundle.p_series.coeff(a), &u_back[k - a])
                })
            })
            .collect();
        let mut coeffs = match order {
            0 => Vec::new(),
            _ => pair.matrix_series(&pulled_series, order - 1)?,
        };
        coeffs.push(CMat::zeros(pair_block, pair_block));
        (pair.matrix(&pulled)?, coeffs)
    };

    let one_body_exact = linalg::diag(&basis.energies);
    let one_body_diag1 = linalg::hermitian_part(&linalg::matmul3(
        &basis.transported.adjoint(),
        &sys.h_diag_exact(),
        &basis.transported,
    ));
    let one_body_series1 = bundle.h_diag_series.compress(&basis.transported)?;
    let abs_d0_x = linalg::matmul3(&basis.states.adjoint(), &sys.abs_d0, &basis.states);
    let abs_d0_q = linalg::matmul3(
        &basis.transported.adjoint(),
        &sys.abs_d0,
        &basis.transported,
    );

    let kinetic = restrict(sum_one_body(&one_body_exact, m, n_particles));
    let pair_sum = restrict(sum_pairs(&w_matrix, m, n_particles));
    let one_body_diag = restrict(sum_one_body(&one_body_diag1, m, n_particles));
    let interaction_diag = restrict(sum_pairs(&w_transported, m, n_particles));
    let d0_sum = restrict(sum_one_body(&abs_d0_x, m, n_particles));
    let d0_sum_q = restrict(sum_one_body(&abs_d0_q, m, n_particles));
    let d0_sum_half_neg = HermitianEigen::new(&d0_sum_q).apply(|x| 1.0 / x.sqrt());

    let one_body_series = MatrixSeries::from_coeffs(
        one_body_series1
            .coeffs()
            .par_iter()
            .map(|a| restrict(sum_one_body(a, m, n_particles)))
            .collect(),
    )?;
    let pair_series = MatrixSeries::from_coeffs(
        w_series
            .par_iter()
            .map(|a| restrict(sum_pairs(a, m, n_particles)))
            .collect(),
    )?;
    // γ/Z enters as one extra power of γ
    let (shifted, series_truncated) = pair_series.shift(1);
    let interaction_series = shifted.scale(1.0 / cfg.z_charge);

    let mut fs = FurrySystem {
        one_particle: sys.clone(),
        config: *cfg,
        basis,
        w_matrix,
        interaction_scale: 1.0,
        kinetic,
        interaction: pair_sum * c(cfg.coupling(gamma)),
        h_furry_exact: CMat::zeros(0, 0),
        h_diag_exact: CMat::zeros(0, 0),
        h_diag_series: MatrixSeries::zero(1, 0),
        series_truncated,
        d0_sum,
        d0_sum_half_neg,
        one_body_diag,
        interaction_diag: interaction_diag * c(cfg.coupling(gamma)),
        one_body_series,
        interaction_series,
    };
    fs.rebuild()?;
    Ok(fs)
}

impl FurrySystem {
    pub fn gamma(&self) -> f64 {
        self.one_particle.gamma
    }

    pub fn dim(&self) -> usize {
        self.h_furry_exact.nrows()
    }

    fn rebuild(&mut self) -> Result<()> {
        let t = c(self.interaction_scale);
        self.h_furry_exact = linalg::hermitian_part(&(&self.kinetic + &self.interaction * t));
        self.h_diag_exact =
            linalg::hermitian_part(&(&self.one_body_diag + &self.interaction_diag * t));
        self.h_diag_series = self
            .one_body_series
            .add(&self.interaction_series.scale(self.interaction_scale))?;
        Ok(())
    }

    /// Same system with the interaction multiplied by `t ≥ 0`.
    pub fn with_interaction_scale(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "interaction scale must be finite and >= 0, got {t}"
            )));
        }
        let mut out = self.clone();
        out.interaction_scale = t;
        out.rebuild()?;
        Ok(out)
    }

    /// The interaction actually present in the Hamiltonian.
    pub fn scaled_interaction(&self) -> CMat {
        &self.interaction * c(self.interaction_scale)
    }

    /// Interaction part of the series alone (coefficient 0 vanishes).
    pub fn interaction_series(&self) -> MatrixSeries {
        self.interaction_series.scale(self.interaction_scale)
    }

    /// `λ_max(T^{-1/2} W T^{-1/2})` with `T` the kinetic part.
    pub fn check_form_bound(&self) -> Result<f64> {
        let t_neg_half = inverse_sqrt_positive(&self.kinetic, "kinetic part")?;
        Ok(linalg::lambda_max(&linalg::matmul3(
            &t_neg_half,
            &self.scaled_interaction(),
            &t_neg_half,
        )))
    }

    /// `γπN(N-1)/(4 Z d_γ)`.
    pub fn form_bound_constant(&self) -> Result<f64> {
        let n = self.config.n_particles as f64;
        Ok(self.gamma() * PI * n * (n - 1.0)
            / (4.0 * self.config.z_charge * d_gamma(self.gamma())?))
    }

    /// `λ_max(H^{-1/2} (Σ_j |D_0|_j) H^{-1/2})`.
    pub fn check_kinetic_weight_bound(&self) -> Result<f64> {
        let h_neg_half = inverse_sqrt_positive(&self.h_furry_exact, "Furry Hamiltonian")?;
        Ok(linalg::lambda_max(&linalg::matmul3(
            &h_neg_half,
            &self.d0_sum,
            &h_neg_half,
        )))
    }

    /// Largest entry of `[H, S]` for the swap `S` of particles 1 and 2.
    pub fn permutation_residual(&self) -> f64 {
        if self.config.n_particles < 2 {
            return 0.0;
        }
        let swap = swap_operator(self.config.n_plus, self.config.n_particles);
        let swap = match self.config.antisymmetrize {
            true => {
                let iso = antisymmetrizer(self.config.n_plus, self.config.n_particles);
                linalg::matmul3(&iso.adjoint(), &swap, &iso)
            }
            false => swap,
        };
        linalg::commutator(&self.h_furry_exact, &swap).camax()
    }

    /// Largest mismatch between the sorted spectra of `h_furry_exact` and `h_diag_exact`.
    pub fn unitary_equivalence_residual(&self) -> f64 {
        let a = linalg::hermitian_eigenvalues(&self.h_furry_exact);
        let b = linalg::hermitian_eigenvalues(&self.h_diag_exact);
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// `λ_min(h_furry_exact) - N sqrt(1-γ²)`; nonnegative in the continuum.
    pub fn positivity_margin(&self) -> f64 {
        let n = self.config.n_particles as f64;
        linalg::lambda_min(&self.h_furry_exact) - n * (1.0 - self.gamma().powi(2)).sqrt()
    }

    /// Largest entry of any series coefficient outside the retained `β_+` block,
    /// measured by how far `Q`-basis coefficients fail to be Hermitian.
    pub fn series_hermiticity(&self) -> f64 {
        self.h_diag_series
            .coeffs()
            .iter()
            .map(linalg::hermiticity_residual)
            .fold(0.0, f64::max)
    }

    /// Largest weight of the transported basis outside the upper block.
    pub fn basis_off_block(&self) -> f64 {
        let n = self.one_particle.grid.n();
        let q = &self.basis.transported;
        q.view((n, 0), (n, q.ncols())).camax()
    }
}

fn inverse_sqrt_positive(m: &CMat, what: &str) -> Result<CMat> {
    let eig = HermitianEigen::new(m);
    if eig.values[0] <= 0.0 {
        return Err(Error::Numerical(format!(
            "{what} is not positive definite (λ_min = {:.3e})",
            eig.values[0]
        )));
    }
    Ok(eig.apply(|x| 1.0 / x.sqrt()))
}

/// `Σ_j 1 ⊗ … ⊗ a_j ⊗ … ⊗ 1` on `(ℂ^m)^{⊗N}`.
pub fn sum_one_body(a: &CMat, m: usize, n_particles: usize) -> CMat {
    let mut total = CMat::zeros(m.pow(n_particles as u32), m.pow(n_particles as u32));
    for slot in 0..n_particles {
        let left = linalg::identity(m.pow(slot as u32));
        let right = linalg::identity(m.pow((n_particles - slot - 1) as u32));
        total += linalg::kron(&linalg::kron(&left, a), &right);
    }
    total
}

/// `Σ_{i<j} W_ij` for a pair matrix `w` indexed `(a·m + b, c·m + d)`.
pub fn sum_pairs(w: &CMat, m: usize, n_particles: usize) -> CMat {
    let dim = m.pow(n_particles as u32);
    let mut total = CMat::zeros(dim, dim);
    for i in 0..n_particles {
        for j in (i + 1)..n_particles {
            add_pair(&mut total, w, m, n_particles, i, j);
        }
    }
    total
}

fn add_pair(total: &mut CMat, w: &CMat, m: usize, n_particles: usize, i: usize, j: usize) {
    let stride = |slot: usize| m.pow((n_particles - slot - 1) as u32);
    let (si, sj) = (stride(i), stride(j));
    for row in 0..total.nrows() {
        let (ai, aj) = ((row / si) % m, (row / sj) % m);
        let base = row - ai * si - aj * sj;
        for bi in 0..m {
            for bj in 0..m {
                let col = base + bi * si + bj * sj;
                total[(row, col)] += w[(ai * m + aj, bi * m + bj)];
            }
        }
    }
}

/// Permutation matrix exchanging particles 1 and 2.
pub fn swap_operator(m: usize, n_particles: usize) -> CMat {
    let dim = m.pow(n_particles as u32);
    let s1 = m.pow((n_particles - 1) as u32);
    let s2 = m.pow((n_particles - 2) as u32);
    let mut out = CMat::zeros(dim, dim);
    for row in 0..dim {
        let (a1, a2) = ((row / s1) % m, (row / s2) % m);
        let col = row - a1 * s1 - a2 * s2 + a2 * s1 + a1 * s2;
        out[(row, col)] = c(1.0);
    }
    out
}

/// Isometry from the alternating subspace, one column per strictly increasing
/// index tuple, into `(ℂ^m)^{⊗N}`.
pub fn antisymmetrizer(m: usize, n_particles: usize) -> CMat {
    let tuples = increasing_tuples(m, n_particles);
    let perms = permutations_with_sign(n_particles);
    let norm = 1.0 / (perms.len() as f64).sqrt();
    let dim = m.pow(n_particles as u32);
    let mut out = CMat::zeros(dim, tuples.len());
    for (col, tuple) in tuples.iter().enumerate() {
        for (perm, sign) in &perms {
            let row = perm.iter().fold(0, |acc, &slot| acc * m + tuple[slot]);
            out[(row, col)] = c(sign * norm);
        }
    }
    out
}

fn increasing_tuples(m: usize, n: usize) -> Vec<Vec<usize>> {
    fn extend(
        start: usize,
        m: usize,
        left: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if left == 0 {
            out.push(current.clone());
            return;
        }
        for k in start..m {
            current.push(k);
            extend(k + 1, m, left - 1, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    extend(0, m, n, &mut Vec::new(), &mut out);
    out
}

fn permutations_with_sign(n: usize) -> Vec<(Vec<usize>, f64)> {
    if n == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    let mut out = Vec::new();
    for (perm, sign) in permutations_with_sign(n - 1) {
        // insert n-1 at each position; moving it left past k entries flips sign k times
        for pos in 0..=perm.len() {
            let mut p = perm.clone();
            p.insert(pos, n - 1);
            let flips = perm.len() - pos;
            out.push((p, if flips % 2 == 0 { sign } else { -sign }));
        }
    }
    out
}

/// One line of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub gamma: f64,
    pub k: usize,
    pub resolvent_distance: f64,
    pub weighted_remainder_norm: f64,
    pub max_eigval_error: f64,
    pub fitted_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub n_particles: usize,
    pub n_plus: usize,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn rows_for(&self, gamma: f64) -> Vec<ConvergenceRow> {
        self.rows
            .iter()
            .copied()
            .filter(|r| r.gamma == gamma)
            .collect()
    }

    /// Distinct couplings in row order.
    pub fn gammas(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.gamma) {
                out.push(r.gamma);
            }
        }
        out
    }
}

/// Rows `k = 0..=k_max` comparing truncations of the series with the exact
/// block-diagonal operator of an assembled system.
pub fn convergence_rows(fs: &FurrySystem, k_max: usize) -> Result<Vec<ConvergenceRow>> {
    let order = fs.h_diag_series.order();
    if k_max > order {
        return Err(Error::InvalidInput(format!(
            "k_max = {k_max} exceeds series order {order}"
        )));
    }
    let gamma = fs.gamma();
    let exact = &fs.h_diag_exact;
    let exact_values = linalg::hermitian_eigenvalues(exact);
    let count = REPORTED_EIGENVALUES.min(exact_values.len());
    let mut rows: Vec<ConvergenceRow> = (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let truncated = linalg::hermitian_part(&fs.h_diag_series.partial_sum(gamma, k));
            let values = linalg::hermitian_eigenvalues(&truncated);
            let eig_err = values[..count]
                .iter()
                .zip(&exact_values[..count])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            ConvergenceRow {
                gamma,
                k,
                resolvent_distance: resolvent_distance(exact, &truncated),
                weighted_remainder_norm: remainder_weighted_norm(
                    exact,
                    &fs.h_diag_series,
                    k,
                    gamma,
                    &fs.d0_sum_half_neg,
                ),
                max_eigval_error: eig_err,
                fitted_ratio: 0.0,
            }
        })
        .collect();
    let ratio = fitted_ratio(&rows);
    rows.iter_mut().for_each(|r| r.fitted_ratio = ratio);
    Ok(rows)
}

/// Geometric ratio of the resolvent distances from the onset of decrease on,
/// ignoring values at the numerical floor; 0 when nothing is left to fit.
pub fn fitted_ratio(rows: &[ConvergenceRow]) -> f64 {
    let values: Vec<f64> = rows.iter().map(|r| r.resolvent_distance).collect();
    let k0 = onset_of_decrease(&values, NUMERICAL_FLOOR);
    let (ks, vs): (Vec<usize>, Vec<f64>) = rows[k0..]
        .iter()
        .filter(|r| r.resolvent_distance > NUMERICAL_FLOOR)
        .map(|r| (r.k, r.resolvent_distance))
        .unzip();
    fitted_geometric_ratio(&ks, &vs).unwrap_or(0.0)
}

/// Rebuilds the system at every coupling in `gammas` and collects the rows,
/// sorted by `(γ, k)`.
pub fn converge_sweep(
    ops: &ChannelOperators,
    bundle: &DecouplingBundle,
    pair: &PairInteraction,
    cfg: &FurryConfig,
    gammas: &[f64],
    k_max: usize,
) -> Result<ConvergenceReport> {
    let mut sorted = gammas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut rows = Vec::new();
    for &gamma in &sorted {
        let sys = ops.assemble(gamma)?;
        let fs = assemble_furry(&sys, bundle, pair, cfg)?;
        rows.extend(convergence_rows(&fs, k_max)?);
    }
    Ok(ConvergenceReport {
        n_particles: cfg.n_particles,
        n_plus: cfg.n_plus,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuples_and_signs() {
        assert_eq!(increasing_tuples(4, 2).len(), 6);
        let perms = permutations_with_sign(3);
        assert_eq!(perms.len(), 6);
        assert_eq!(perms.iter().map(|p| p.1).sum::<f64>(), 0.0);
        for (p, s) in &perms {
            let inversions = (0..3)
                .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count();
            assert_eq!(*s, if inversions % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn antisymmetrizer_is_isometry_onto_odd_states() {
        let (m, n) = (4, 3);
        let iso = antisymmetrizer(m, n);
        assert_eq!(iso.ncols(), 4);
        assert!(linalg::identity_residual(&linalg::matmul(&iso.adjoint(), &iso)) < 1e-14);
        let swap = swap_operator(m, n);
        assert!((linalg::matmul(&swap, &iso) + &iso).camax() < 1e-14);
    }

    #[test]
    fn pair_lift_matches_kron_for_two_particles() {
        let m = 3;
        let w = CMat::from_fn(m * m, m * m, |i, j| c((i * 7 + j * 3) as f64 % 5.0));
        assert_eq!(sum_pairs(&w, m, 2), w);
        let three = sum_pairs(&w, m, 3);
        let adjacent =
            linalg::kron(&w, &linalg::identity(m)) + linalg::kron(&linalg::identity(m), &w);
        let swap23 = linalg::kron(&linalg::identity(m), &swap_operator(m, 2));
        let outer = linalg::matmul3(&swap23, &linalg::kron(&w, &linalg::identity(m)), &swap23);
        assert!((three - adjacent - outer).camax() < 1e-14);
    }

    #[test]
    fn dimension_cap() {
        let cfg = FurryConfig {
            n_particles: 4,
            n_plus: 20,
            ..FurryConfig::default()
        };
        assert!(matches!(
            cfg.validate(100),
            Err(Error::DimensionCap { dim: 160_000, .. })
        ));
        let cfg = FurryConfig {
            n_plus: 300,
            ..FurryConfig::default()
        };
        assert!(cfg.validate(200).is_err());
        assert!(FurryConfig::default().validate(200).is_ok());
    }
}
