//! One-particle Dirac–Coulomb operator in a fixed-κ momentum channel.
//!
//! Basis layout for all `2n × 2n` matrices: index `i < n` is the upper
//! radial component at node `p_i`, index `n + i` the lower one. Vectors are
//! stored as `sqrt(w_i) p_i φ(p_i)` so the quadrature inner product is the
//! Euclidean one and every operator matrix is Hermitian.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, HermitianEigen};
use crate::special::{legendre_q, legendre_q_regular_limit, LANDE_INTEGRAL};

/// Upper end of the coupling range where the operator is defined on `H^1`.
pub const GAMMA_MAX: f64 = 0.866_025_403_784_438_6; // sqrt(3)/2

/// Coupling below which the weighted decoupling statements are known to hold.
pub const GAMMA_CRITICAL: f64 = 0.3775;

/// Coupling below which the decoupling unitary is known to be analytic and unitary.
pub const GAMMA_UNITARY: f64 = 0.6841;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGrid {
    pub kappa: i32,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub map_scale: f64,
}

impl ChannelGrid {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.nodes.len()
    }

    /// Orbital angular momentum of the upper component.
    pub fn l_upper(&self) -> usize {
        orbital_l(self.kappa)
    }

    /// Orbital angular momentum of the lower component.
    pub fn l_lower(&self) -> usize {
        orbital_l(-self.kappa)
    }

    /// Free energies `sqrt(1 + p_i^2)`.
    pub fn free_energies(&self) -> Vec<f64> {
        self.nodes.iter().map(|p| (1.0 + p * p).sqrt()).collect()
    }
}

/// `l = κ` for `κ > 0`, `-κ - 1` for `κ < 0`.
pub fn orbital_l(kappa: i32) -> usize {
    if kappa > 0 {
        kappa as usize
    } else {
        (-kappa - 1) as usize
    }
}

/// Gauss–Legendre rule on (0,1) mapped to (0,∞) by `p = s t / (1 - t)`.
pub fn build_channel_grid(kappa: i32, n: usize, map_scale: f64) -> Result<ChannelGrid> {
    if kappa == 0 {
        return Err(Error::InvalidInput("kappa must be nonzero".into()));
    }
    if n < 8 {
        return Err(Error::InvalidInput(format!(
            "need at least 8 momentum nodes, got {n}"
        )));
    }
    if !(map_scale.is_finite() && map_scale > 0.0) {
        return Err(Error::InvalidInput(format!(
            "map_scale must be positive, got {map_scale}"
        )));
    }
    let (nodes, weights) = mapped_gauss_legendre(n, map_scale);
    Ok(ChannelGrid {
        kappa,
        nodes,
        weights,
        map_scale,
    })
}

/// Nodes and weights of the mapped rule, nodes increasing.
pub fn mapped_gauss_legendre(n: usize, scale: f64) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("n > 0"));
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| {
            let t = 0.5 * (x + 1.0);
            let wt = 0.5 * w;
            let one_minus = 1.0 - t;
            (scale * t / one_minus, wt * scale / (one_minus * one_minus))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Free Dirac operator: at node `p` the block `[[1, p], [p, -1]]`.
pub fn build_free_dirac(grid: &ChannelGrid) -> CMat {
    let n = grid.n();
    let mut d0 = linalg::zeros(2 * n);
    for (i, &p) in grid.nodes.iter().enumerate() {
        d0[(i, i)] = c(1.0);
        d0[(n + i, n + i)] = c(-1.0);
        d0[(i, n + i)] = c(p);
        d0[(n + i, i)] = c(p);
    }
    d0
}

/// `-1/r` in partial wave `l`, as an `n × n` real symmetric kernel.
///
/// `(V u)(p) = -(1/π) ∫ Q_l((p²+p'²)/(2pp')) u(p') dp'`, with the log
/// singularity on the diagonal removed by Landé subtraction against
/// `∫ Q_0 (p/p') dp' = p π²/2`.
pub fn coulomb_partial_wave(grid: &ChannelGrid, l: usize) -> CMat {
    let n = grid.n();
    let p = &grid.nodes;
    let w = &grid.weights;
    let mut kernel = linalg::zeros(n);
    let mut diagonal: Vec<f64> = p.iter().map(|&pi| pi * LANDE_INTEGRAL).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let denom = 2.0 * p[i] * p[j];
            let z_minus_one = (p[i] - p[j]) * (p[i] - p[j]) / denom;
            let z = 1.0 + z_minus_one;
            let q_l = legendre_q(l, z, z_minus_one);
            let q_0 = if l == 0 {
                q_l
            } else {
                legendre_q(0, z, z_minus_one)
            };
            let entry = (w[i] * w[j]).sqrt() * q_l;
            kernel[(i, j)] = c(entry);
            kernel[(j, i)] = c(entry);
            diagonal[i] -= w[j] * q_0 * p[i] / p[j];
            diagonal[j] -= w[i] * q_0 * p[j] / p[i];
        }
        diagonal[i] += w[i] * legendre_q_regular_limit(l);
    }
    for i in 0..n {
        kernel[(i, i)] = c(diagonal[i]);
    }
    kernel * c(-1.0 / PI)
}

/// Coulomb potential `V = -1/|x|` in the κ channel (block diagonal in spinor component).
pub fn build_coulomb(grid: &ChannelGrid) -> CMat {
    let n = grid.n();
    let upper = coulomb_partial_wave(grid, grid.l_upper());
    let lower = coulomb_partial_wave(grid, grid.l_lower());
    let mut v = linalg::zeros(2 * n);
    v.view_mut((0, 0), (n, n)).copy_from(&upper);
    v.view_mut((n, n), (n, n)).copy_from(&lower);
    v
}

/// Per-node rotation with `tan 2θ = p` bringing `D_0` to `diag(E_p, -E_p)`.
///
/// After conjugation the first `n` indices carry the positive-energy states,
/// so `U_FW P_+^0 = β_+ U_FW` with `β_+` the projector on those indices.
pub fn foldy_wouthuysen(grid: &ChannelGrid) -> CMat {
    let n = grid.n();
    let mut u = linalg::zeros(2 * n);
    for (i, &p) in grid.nodes.iter().enumerate() {
        let theta = 0.5 * p.atan();
        let (s, co) = theta.sin_cos();
        u[(i, i)] = c(co);
        u[(i, n + i)] = c(s);
        u[(n + i, i)] = c(-s);
        u[(n + i, n + i)] = c(co);
    }
    u
}

/// Projector onto the first `n` (upper / positive-energy in the FW frame) indices.
pub fn beta_plus(n: usize) -> CMat {
    let mut b = linalg::zeros(2 * n);
    for i in 0..n {
        b[(i, i)] = c(1.0);
    }
    b
}

/// `U = (P0 Pg + (1-P0)(1-Pg)) (1 - (P0 - Pg)^2)^{-1/2}`.
pub fn exact_u_gamma(p0: &CMat, pg: &CMat) -> Result<CMat> {
    let dim = p0.nrows();
    if pg.nrows() != dim || p0.ncols() != dim || pg.ncols() != dim {
        return Err(Error::Dimension(
            "projectors must be square with equal size".into(),
        ));
    }
    let diff = p0 - pg;
    let dist = linalg::hermitian_norm(&diff);
    if dist >= 1.0 {
        return Err(Error::ProjectorsTooFar(dist));
    }
    let id = linalg::identity(dim);
    let pairing = linalg::matmul(p0, pg) + linalg::matmul(&(&id - p0), &(&id - pg));
    let s = &id - linalg::matmul(&diff, &diff);
    let s_inv_sqrt = HermitianEigen::new(&s).apply(|x| 1.0 / x.sqrt());
    Ok(linalg::matmul(&pairing, &s_inv_sqrt))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && (0.0..GAMMA_MAX).contains(&gamma)) {
        return Err(Error::InvalidInput(format!(
            "coupling {gamma} outside [0, sqrt(3)/2)"
        )));
    }
    Ok(())
}

/// `C_γ = (sqrt(4γ² + 9) - 4γ)/3`.
pub fn c_gamma(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(((4.0 * gamma * gamma + 9.0).sqrt() - 4.0 * gamma) / 3.0)
}

/// `d_γ = (1 + C² - sqrt((1 - C²)² + 4γ²C²))/2`, the constant in `|D_γ|² ≥ d_γ²|D_0|²`.
pub fn d_gamma(gamma: f64) -> Result<f64> {
    let cg = c_gamma(gamma)?;
    let c2 = cg * cg;
    Ok(0.5 * (1.0 + c2 - ((1.0 - c2).powi(2) + 4.0 * gamma * gamma * c2).sqrt()))
}

/// Dirac–Coulomb bound-state energy (mass units) for principal quantum number `n_pr`.
pub fn sommerfeld_energy(gamma: f64, n_pr: u32, kappa: i32) -> Result<f64> {
    let k = kappa.unsigned_abs() as f64;
    if kappa == 0 || !(gamma >= 0.0 && gamma < k) {
        return Err(Error::InvalidInput(format!(
            "need 0 <= gamma < |kappa|, got gamma={gamma}, kappa={kappa}"
        )));
    }
    if n_pr == 0 || (n_pr as f64) < k {
        return Err(Error::InvalidInput(format!(
            "principal quantum number {n_pr} incompatible with kappa={kappa}"
        )));
    }
    let denom = n_pr as f64 - k + (k * k - gamma * gamma).sqrt();
    Ok((1.0 + (gamma / denom).powi(2)).powf(-0.5))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed shortfall of the discrete gap below `sqrt(1-γ²)`.
    pub tol_gap: f64,
    /// Slack for discretized operator inequalities (scaled where noted).
    pub tol_diag: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_gap: 1e-6,
            tol_diag: 1e-4,
        }
    }
}

/// Eigenvalues closer to zero than this make the sign projector ill-defined.
pub const ZERO_EIGENVALUE_GUARD: f64 = 1e-8;

/// All one-particle matrices at a fixed coupling.
#[derive(Debug, Clone)]
pub struct OneParticleSystem {
    pub grid: ChannelGrid,
    pub gamma: f64,
    pub d0: CMat,
    pub v: CMat,
    pub dgamma: CMat,
    pub abs_d0: CMat,
    pub abs_d0_half: CMat,
    pub abs_d0_neg_half: CMat,
    pub p_plus_0: CMat,
    pub p_plus_gamma: CMat,
    pub u_fw: CMat,
    pub u_gamma: CMat,
    /// `min |λ(D_γ)|`.
    pub gap: f64,
    pub spectrum: HermitianEigen,
}

impl OneParticleSystem {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn p_minus_gamma(&self) -> CMat {
        linalg::identity(self.dim()) - &self.p_plus_gamma
    }

    /// Positive eigenvalues of `D_γ`, ascending.
    pub fn positive_eigenvalues(&self) -> Vec<f64> {
        self.spectrum
            .values
            .iter()
            .copied()
            .filter(|&x| x > 0.0)
            .collect()
    }

    /// Eigenvectors of the `count` lowest positive eigenvalues, as columns.
    pub fn lowest_positive_states(&self, count: usize) -> CMat {
        let first = self
            .spectrum
            .values
            .iter()
            .position(|&x| x > 0.0)
            .unwrap_or(self.dim());
        self.spectrum.select(|k, _| k >= first && k < first + count)
    }

    /// `U_FW U_γ P_+^γ D_γ P_+^γ U_γ^* U_FW^*`.
    pub fn h_diag_exact(&self) -> CMat {
        let inner = linalg::sandwich(&self.p_plus_gamma, &self.dgamma);
        let transport = linalg::matmul(&self.u_fw, &self.u_gamma);
        linalg::sandwich(&transport, &inner)
    }
}

/// Matrices depending only on the grid, shared by every coupling.
#[derive(Debug, Clone)]
pub struct ChannelOperators {
    pub grid: ChannelGrid,
    pub d0: CMat,
    pub v: CMat,
    pub u_fw: CMat,
    pub abs_d0: CMat,
    pub abs_d0_half: CMat,
    pub abs_d0_neg_half: CMat,
    pub p_plus_0: CMat,
}

impl ChannelOperators {
    pub fn new(grid: &ChannelGrid) -> Self {
        let n = grid.n();
        let d0 = build_free_dirac(grid);
        let v = build_coulomb(grid);
        let u_fw = foldy_wouthuysen(grid);
        let energies = grid.free_energies();
        let doubled: Vec<f64> = energies.iter().chain(energies.iter()).copied().collect();
        let abs_d0 = linalg::diag(&doubled);
        let abs_d0_half = linalg::diag(&doubled.iter().map(|e| e.sqrt()).collect::<Vec<_>>());
        let abs_d0_neg_half =
            linalg::diag(&doubled.iter().map(|e| 1.0 / e.sqrt()).collect::<Vec<_>>());
        // P_+^0 = (1 + D_0/|D_0|)/2, exact per node
        let p_plus_0 = (linalg::identity(2 * n)
            + linalg::matmul(
                &d0,
                &linalg::diag(&doubled.iter().map(|e| 1.0 / e).collect::<Vec<_>>()),
            ))
            * c(0.5);
        Self {
            grid: grid.clone(),
            d0,
            v,
            u_fw,
            abs_d0,
            abs_d0_half,
            abs_d0_neg_half,
            p_plus_0: linalg::hermitian_part(&p_plus_0),
        }
    }

    pub fn dgamma(&self, gamma: f64) -> CMat {
        &self.d0 + &self.v * c(gamma)
    }

    pub fn assemble(&self, gamma: f64) -> Result<OneParticleSystem> {
        check_gamma(gamma)?;
        let dgamma = self.dgamma(gamma);
        let spectrum = HermitianEigen::new(&dgamma);
        let gap = spectrum
            .values
            .iter()
            .map(|x| x.abs())
            .fold(f64::INFINITY, f64::min);
        if gap < ZERO_EIGENVALUE_GUARD {
            return Err(Error::NoSpectralGap(gap));
        }
        let positive = spectrum.select(|_, x| x > 0.0);
        let p_plus_gamma = linalg::hermitian_part(&linalg::matmul(&positive, &positive.adjoint()));
        let u_gamma = if gamma == 0.0 {
            linalg::identity(self.grid.dim())
        } else {
            exact_u_gamma(&self.p_plus_0, &p_plus_gamma)?
        };
        Ok(OneParticleSystem {
            grid: self.grid.clone(),
            gamma,
            d0: self.d0.clone(),
            v: self.v.clone(),
            dgamma,
            abs_d0: self.abs_d0.clone(),
            abs_d0_half: self.abs_d0_half.clone(),
            abs_d0_neg_half: self.abs_d0_neg_half.clone(),
            p_plus_0: self.p_plus_0.clone(),
            p_plus_gamma,
            u_fw: self.u_fw.clone(),
            u_gamma,
            gap,
            spectrum,
        })
    }
}

/// Builds the channel operators and assembles them at coupling `gamma`.
pub fn assemble_system(grid: &ChannelGrid, gamma: f64) -> Result<OneParticleSystem> {
    ChannelOperators::new(grid).assemble(gamma)
}

/// `λ_min((π/2)|D_0| + V)`; nonnegative in the continuum.
pub fn check_kato(sys: &OneParticleSystem) -> f64 {
    kato_margin(&sys.abs_d0, &sys.v)
}

pub fn kato_margin(abs_d0: &CMat, v: &CMat) -> f64 {
    linalg::lambda_min(&(abs_d0 * c(PI / 2.0) + v))
}

/// `λ_min(D_γ² - d_γ² D_0²)` using matrix squares.
pub fn check_dgamma_bound(sys: &OneParticleSystem) -> Result<f64> {
    let d = d_gamma(sys.gamma)?;
    let dg2 = linalg::matmul(&sys.dgamma, &sys.dgamma);
    let d02 = linalg::matmul(&sys.d0, &sys.d0);
    Ok(linalg::lambda_min(&(dg2 - d02 * c(d * d))))
}

/// Diagnostic residuals of an assembled system.
#[derive(Debug, Clone, Copy)]
pub struct SystemResiduals {
    pub unitarity: f64,
    pub intertwining: f64,
    pub projector_distance: f64,
    pub commutator: f64,
}

pub fn system_residuals(sys: &OneParticleSystem) -> SystemResiduals {
    let id = linalg::identity(sys.dim());
    let uu = linalg::matmul(&sys.u_gamma, &sys.u_gamma.adjoint());
    let intertwine = linalg::matmul(&sys.u_gamma, &sys.p_plus_gamma)
        - linalg::matmul(&sys.p_plus_0, &sys.u_gamma);
    SystemResiduals {
        unitarity: linalg::spectral_norm(&(uu - id)),
        intertwining: linalg::spectral_norm(&intertwine),
        projector_distance: linalg::hermitian_norm(&(&sys.p_plus_0 - &sys.p_plus_gamma)),
        commutator: linalg::spectral_norm(&linalg::commutator(&sys.p_plus_gamma, &sys.dgamma)),
    }
}

/// Levels of `p²/2 - q/r` in the `l = 0` partial wave on the channel grid;
/// the bound ones approach `-q²/(2 n²)`.
pub fn schroedinger_s_levels(grid: &ChannelGrid, q: f64) -> Vec<f64> {
    let kinetic = linalg::diag(&grid.nodes.iter().map(|p| 0.5 * p * p).collect::<Vec<_>>());
    let h = kinetic + coulomb_partial_wave(grid, 0) * c(q);
    linalg::hermitian_eigenvalues(&h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_structure_and_scaling() {
        let grid = build_channel_grid(-1, 8, 1.0).unwrap();
        assert_eq!(grid.nodes.len(), 8);
        assert!(grid.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(grid
            .nodes
            .iter()
            .chain(&grid.weights)
            .all(|&x| x > 0.0 && x.is_finite()));
        let doubled = build_channel_grid(-1, 8, 2.0).unwrap();
        for i in 0..8 {
            assert_relative_eq!(doubled.nodes[i], 2.0 * grid.nodes[i], max_relative = 1e-14);
            assert_relative_eq!(
                doubled.weights[i],
                2.0 * grid.weights[i],
                max_relative = 1e-14
            );
        }
        assert!(build_channel_grid(0, 8, 1.0).is_err());
        assert!(build_channel_grid(-1, 7, 1.0).is_err());
        assert!(build_channel_grid(-1, 8, 0.0).is_err());
    }

    #[test]
    fn grid_integrates_exponential() {
        let grid = build_channel_grid(-1, 64, 1.0).unwrap();
        let total: f64 = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .map(|(p, w)| w * (-p).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn angular_momenta() {
        assert_eq!(orbital_l(-1), 0);
        assert_eq!(orbital_l(1), 1);
        assert_eq!(orbital_l(-2), 1);
        assert_eq!(orbital_l(2), 2);
        let grid = build_channel_grid(-1, 8, 1.0).unwrap();
        assert_eq!((grid.l_upper(), grid.l_lower()), (0, 1));
    }

    #[test]
    fn free_dirac_spectrum() {
        let grid = ChannelGrid {
            kappa: -1,
            nodes: vec![0.75],
            weights: vec![1.0],
            map_scale: 1.0,
        };
        let values = linalg::hermitian_eigenvalues(&build_free_dirac(&grid));
        assert_relative_eq!(values[0], -1.25, epsilon = 1e-14);
        assert_relative_eq!(values[1], 1.25, epsilon = 1e-14);

        let grid = build_channel_grid(-1, 32, 1.0).unwrap();
        let values = linalg::hermitian_eigenvalues(&build_free_dirac(&grid));
        let mut want: Vec<f64> = grid.free_energies().iter().flat_map(|&e| [e, -e]).collect();
        want.sort_by(f64::total_cmp);
        for (got, want) in values.iter().zip(&want) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn coulomb_sign_structure() {
        let grid = build_channel_grid(-1, 48, 1.0).unwrap();
        let v = build_coulomb(&grid);
        assert!(linalg::is_real(&v));
        assert!(linalg::hermiticity_residual(&v) < 1e-12);
        for i in 0..grid.dim() {
            assert!(v[(i, i)].re <= 0.0);
        }
        let n = grid.n();
        assert_eq!(v.view((0, n), (n, n)).camax(), 0.0);
    }

    fn schroedinger_levels(gamma: f64) -> Vec<f64> {
        schroedinger_s_levels(&build_channel_grid(-1, 200, 1.0).unwrap(), gamma)
    }

    #[test]
    fn nonrelativistic_hydrogen() {
        let gamma = 0.5;
        let levels = schroedinger_levels(gamma);
        assert!(
            (levels[0] + gamma * gamma / 2.0).abs() < 1e-4,
            "{}",
            levels[0]
        );
        assert!(
            (levels[1] + gamma * gamma / 8.0).abs() < 1e-4,
            "{}",
            levels[1]
        );
    }

    #[test]
    fn sommerfeld_values() {
        assert_eq!(sommerfeld_energy(0.0, 1, -1).unwrap(), 1.0);
        assert!((sommerfeld_energy(0.3775, 1, -1).unwrap() - 0.926010).abs() < 1e-6);
        assert!((sommerfeld_energy(0.3775, 2, -1).unwrap() - 0.981328).abs() < 1e-6);
        assert!(sommerfeld_energy(1.0, 1, -1).is_err());
        assert!(sommerfeld_energy(0.3, 0, -1).is_err());
    }

    #[test]
    fn coupling_constants() {
        assert_eq!(c_gamma(0.0).unwrap(), 1.0);
        assert_eq!(d_gamma(0.0).unwrap(), 1.0);
        assert!((c_gamma(0.3775).unwrap() - 0.52785).abs() < 1e-5);
        assert!((d_gamma(0.3775).unwrap() - 0.22724).abs() < 1e-5);
        let sweep: Vec<f64> = (0..100)
            .map(|k| d_gamma(0.86 * k as f64 / 99.0).unwrap())
            .collect();
        assert!(sweep.windows(2).all(|w| w[1] < w[0]));
        assert!(sweep.iter().all(|&d| d > 0.0 && d <= 1.0));
        assert!(d_gamma(GAMMA_MAX).is_err());
        assert!(c_gamma(-0.1).is_err());
    }

    #[test]
    fn foldy_wouthuysen_diagonalizes_free_dirac() {
        let grid = build_channel_grid(-1, 40, 1.0).unwrap();
        let ops = ChannelOperators::new(&grid);
        let rotated = linalg::sandwich(&ops.u_fw, &ops.d0);
        let energies = grid.free_energies();
        let want: Vec<f64> = energies
            .iter()
            .copied()
            .chain(energies.iter().map(|e| -e))
            .collect();
        assert!((rotated - linalg::diag(&want)).camax() < 1e-12);
        assert!(linalg::commutator(&ops.u_fw, &ops.abs_d0).camax() < 1e-12);
        let lhs = linalg::matmul(&ops.u_fw, &ops.p_plus_0);
        let rhs = linalg::matmul(&beta_plus(grid.n()), &ops.u_fw);
        assert!((lhs - rhs).camax() < 1e-12);
        let origin = ChannelGrid {
            kappa: -1,
            nodes: vec![0.0],
            weights: vec![1.0],
            map_scale: 1.0,
        };
        assert_eq!(linalg::identity_residual(&foldy_wouthuysen(&origin)), 0.0);
    }

    #[test]
    fn u_gamma_two_by_two_givens() {
        let phi: f64 = 0.4;
        let p0 = linalg::diag(&[1.0, 0.0]);
        let rot = CMat::from_row_slice(
            2,
            2,
            &[c(phi.cos()), c(-phi.sin()), c(phi.sin()), c(phi.cos())],
        );
        let pg = linalg::sandwich(&rot, &p0);
        let u = exact_u_gamma(&p0, &pg).unwrap();
        assert!((&u - rot.adjoint()).camax() < 1e-14);
        assert!((linalg::sandwich(&u, &pg) - &p0).camax() < 1e-14);
        assert!(linalg::identity_residual(&exact_u_gamma(&p0, &p0).unwrap()) < 1e-15);
        let flipped = linalg::diag(&[0.0, 1.0]);
        assert!(matches!(
            exact_u_gamma(&p0, &flipped),
            Err(Error::ProjectorsTooFar(_))
        ));
    }

    #[test]
    fn u_gamma_random_intertwining() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dim = 12;
        let mut random_hermitian = |scale: f64| {
            let a = CMat::from_fn(dim, dim, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            linalg::hermitian_part(&a) * c(scale)
        };
        let signs: Vec<f64> = (0..dim)
            .map(|k| if k % 2 == 0 { 2.0 } else { -2.0 })
            .collect();
        let h0 = linalg::diag(&signs);
        let hg = &h0 + random_hermitian(0.2);
        let projector = |h: &CMat| {
            let eig = HermitianEigen::new(h);
            let pos = eig.select(|_, x| x > 0.0);
            linalg::matmul(&pos, &pos.adjoint())
        };
        let (p0, pg) = (projector(&h0), projector(&hg));
        let u = exact_u_gamma(&p0, &pg).unwrap();
        assert!(
            linalg::spectral_norm(&(linalg::matmul(&u, &u.adjoint()) - linalg::identity(dim)))
                < 1e-10
        );
        assert!(
            linalg::spectral_norm(&(linalg::matmul(&u, &pg) - linalg::matmul(&p0, &u))) < 1e-10
        );
    }

    #[test]
    fn free_system_is_trivial() {
        let grid = build_channel_grid(-1, 24, 1.0).unwrap();
        let sys = assemble_system(&grid, 0.0).unwrap();
        assert!((&sys.p_plus_gamma - &sys.p_plus_0).camax() < 1e-12);
        assert_eq!(linalg::identity_residual(&sys.u_gamma), 0.0);
        assert_eq!(check_dgamma_bound(&sys).unwrap(), 0.0);
        let kato_free = kato_margin(&sys.abs_d0, &linalg::zeros(grid.dim()));
        let min_e = grid
            .free_energies()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!((kato_free - PI / 2.0 * min_e).abs() < 1e-12);
        let values = &sys.spectrum.values;
        let dim = values.len();
        for k in 0..dim / 2 {
            assert!((values[k] + values[dim - 1 - k]).abs() < 1e-12);
        }
    }

    #[test]
    fn kato_is_monotone_in_potential_strength() {
        let grid = build_channel_grid(-1, 64, 1.0).unwrap();
        let ops = ChannelOperators::new(&grid);
        let single = kato_margin(&ops.abs_d0, &ops.v);
        let double = kato_margin(&ops.abs_d0, &(&ops.v * c(2.0)));
        assert!(double < single);
    }

    #[test]
    fn coupled_system_invariants() {
        let grid = build_channel_grid(-1, 200, 1.0).unwrap();
        let sys = assemble_system(&grid, 0.3).unwrap();
        let ground = sys.positive_eigenvalues()[0];
        let exact = sommerfeld_energy(0.3, 1, -1).unwrap();
        assert!(((ground - exact) / exact).abs() < 1e-3);
        assert!(sys.gap >= (1.0f64 - 0.09).sqrt() - 1e-6);
        let p = &sys.p_plus_gamma;
        assert!((linalg::matmul(p, p) - p).camax() < 1e-11);
        assert!(linalg::hermiticity_residual(p) < 1e-11);
        assert!(linalg::matmul(p, &sys.p_minus_gamma()).camax() < 1e-12);
        let res = system_residuals(&sys);
        assert!(res.unitarity < 1e-10 && res.intertwining < 1e-10, "{res:?}");
        assert!(res.projector_distance < 1.0);
        assert!(res.commutator < 1e-11 * linalg::hermitian_norm(&sys.dgamma).max(1.0));
        assert!(check_dgamma_bound(&sys).unwrap() >= -1e-4);
        assert!(check_kato(&sys) >= -1e-4 * linalg::hermitian_norm(&sys.v));
        assert!(sys.gamma < GAMMA_UNITARY && GAMMA_CRITICAL < GAMMA_UNITARY);
    }

    #[test]
    fn coupling_out_of_range_is_rejected() {
        let grid = build_channel_grid(-1, 16, 1.0).unwrap();
        assert!(assemble_system(&grid, 0.9).is_err());
        assert!(assemble_system(&grid, -0.1).is_err());
    }
}
