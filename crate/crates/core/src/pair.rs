//! Monopole (Slater `R^0`) electron–electron repulsion `1/max(r_1, r_2)`.
//!
//! One-particle vectors live on the momentum grid. They are carried to a
//! radial quadrature grid by the spherical Bessel transform of each spinor
//! component, where the monopole kernel is diagonal in `(r_1, r_2)`:
//!
//! `⟨ab|W|cd⟩ = Σ_{r_1 r_2} ρ_ac(r_1) ρ_bd(r_2) / max(r_1, r_2)`,
//!
//! with `ρ_ac(r) = Σ_comp conj(χ_a(r)) χ_c(r)` and `χ` the weighted reduced
//! radial functions. The resulting pair matrix is exactly positive
//! semidefinite.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use rayon::prelude::*;

use gauss_quad::legendre::GaussLegendre;

use crate::dirac::ChannelGrid;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::special::spherical_bessel_j;

/// Largest tolerated `|Σ_r |χ|² - ||v||²|` for the reference orbital.
pub const ROUNDTRIP_TOL: f64 = 1e-6;

/// Effective charge of the hydrogenic `1s` reference orbital used by the
/// resolution gate.
pub const REFERENCE_CHARGE: f64 = 0.1;

/// Gauss–Legendre rule on `[0, r_max]` pulled through
/// `r = r_max sinh(β x)/sinh(β)`, which crowds nodes near the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGridSpec {
    pub n_r: usize,
    pub r_max: f64,
    pub stretch: f64,
}

impl Default for RadialGridSpec {
    fn default() -> Self {
        Self {
            n_r: 800,
            r_max: 100.0,
            stretch: 4.0,
        }
    }
}

impl RadialGridSpec {
    pub fn nodes_and_weights(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.n_r < 8 || !(self.r_max > 0.0) || !(self.stretch > 0.0) || !self.r_max.is_finite() {
            return Err(Error::InvalidInput(format!("invalid radial grid {self:?}")));
        }
        let rule = GaussLegendre::new(NonZeroUsize::new(self.n_r).expect("n_r >= 8"));
        let (b, sb) = (self.stretch, self.stretch.sinh());
        let mut pairs: Vec<(f64, f64)> = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| {
                let x = 0.5 * (x + 1.0);
                (
                    self.r_max * (b * x).sinh() / sb,
                    0.5 * w * self.r_max * b * (b * x).cosh() / sb,
                )
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(pairs.into_iter().unzip())
    }
}

#[derive(Debug, Clone)]
pub struct PairInteraction {
    pub radii: Vec<f64>,
    pub radial_weights: Vec<f64>,
    n_momentum: usize,
    /// `sqrt(w_r) r sqrt(2/π) sqrt(w_p) p j_l(p r)` for the upper component.
    transform_upper: CMat,
    transform_lower: CMat,
    /// `1/max(r_1, r_2)`.
    kernel: CMat,
}

/// Weighted reduced radial functions of a set of vectors.
#[derive(Debug, Clone)]
pub struct RadialOrbitals {
    pub upper: CMat,
    pub lower: CMat,
}

impl RadialOrbitals {
    pub fn count(&self) -> usize {
        self.upper.ncols()
    }

    /// `Σ_r |χ_a(r)|²` per column.
    pub fn norms_squared(&self) -> Vec<f64> {
        (0..self.count())
            .map(|a| {
                self.upper
                    .column(a)
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
                    + self
                        .lower
                        .column(a)
                        .iter()
                        .map(|z| z.norm_sqr())
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Builds the transform and kernel, then rejects radial grids that lose the
/// norm of the hydrogenic reference orbital by more than [`ROUNDTRIP_TOL`].
pub fn build_pair_interaction(
    grid: &ChannelGrid,
    radial: RadialGridSpec,
) -> Result<PairInteraction> {
    let (radii, radial_weights) = radial.nodes_and_weights()?;
    let pair = pair_from_radial_rule(grid, radii, radial_weights);
    pair.check_resolution(&hydrogenic_1s_vector(grid, REFERENCE_CHARGE))?;
    Ok(pair)
}

pub fn pair_from_radial_rule(
    grid: &ChannelGrid,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
) -> PairInteraction {
    let transform = |l: usize| {
        let rows: Vec<Vec<f64>> = radii
            .par_iter()
            .zip(&radial_weights)
            .map(|(&r, &wr)| {
                let pref = wr.sqrt() * r * (2.0 / PI).sqrt();
                grid.nodes
                    .iter()
                    .zip(&grid.weights)
                    .map(|(&p, &wp)| pref * wp.sqrt() * p * spherical_bessel_j(l, p * r))
                    .collect()
            })
            .collect();
        CMat::from_fn(radii.len(), grid.n(), |k, i| c(rows[k][i]))
    };
    let transform_upper = transform(grid.l_upper());
    let transform_lower = transform(grid.l_lower());
    let kernel = CMat::from_fn(radii.len(), radii.len(), |a, b| {
        c(1.0 / radii[a].max(radii[b]))
    });
    PairInteraction {
        radii,
        radial_weights,
        n_momentum: grid.n(),
        transform_upper,
        transform_lower,
        kernel,
    }
}

impl PairInteraction {
    pub fn n_radial(&self) -> usize {
        self.radii.len()
    }

    /// Radial images of the columns of `vectors` (`2n × m`).
    pub fn radial_orbitals(&self, vectors: &CMat) -> Result<RadialOrbitals> {
        let n = self.n_momentum;
        if vectors.nrows() != 2 * n {
            return Err(Error::Dimension(format!(
                "vectors have {} rows, expected {}",
                vectors.nrows(),
                2 * n
            )));
        }
        let m = vectors.ncols();
        Ok(RadialOrbitals {
            upper: linalg::matmul(
                &self.transform_upper,
                &vectors.view((0, 0), (n, m)).into_owned(),
            ),
            lower: linalg::matmul(
                &self.transform_lower,
                &vectors.view((n, 0), (n, m)).into_owned(),
            ),
        })
    }

    /// Largest `|Σ_r |χ_a|² - ||v_a||²|` over the columns.
    pub fn roundtrip_error(&self, vectors: &CMat) -> Result<f64> {
        let orbitals = self.radial_orbitals(vectors)?;
        Ok(orbitals
            .norms_squared()
            .iter()
            .enumerate()
            .map(|(a, &rn)| (rn - vectors.column(a).norm_squared()).abs())
            .fold(0.0, f64::max))
    }

    /// Fails with [`Error::RadialResolution`] above [`ROUNDTRIP_TOL`].
    pub fn check_resolution(&self, vectors: &CMat) -> Result<f64> {
        let err = self.roundtrip_error(vectors)?;
        if err > ROUNDTRIP_TOL {
            return Err(Error::RadialResolution(err));
        }
        Ok(err)
    }

    /// Pair matrix `⟨ab|W|cd⟩` on the product basis of the columns of `vectors`,
    /// row index `a·m + b`, column index `c·m + d`.
    pub fn matrix(&self, vectors: &CMat) -> Result<CMat> {
        let orbitals = self.radial_orbitals(vectors)?;
        let density = pair_densities(&orbitals, &orbitals);
        let coupled = self.couple(&density, &density);
        Ok(linalg::hermitian_part(&reorder(&coupled, vectors.ncols())))
    }

    /// Series coefficients of `⟨Y_a(γ) Y_b(γ)|W|Y_c(γ) Y_d(γ)⟩` for a vector
    /// series `Y(γ) = Σ γ^m Y_m`, through order `max_order`.
    pub fn matrix_series(&self, vector_coeffs: &[CMat], max_order: usize) -> Result<Vec<CMat>> {
        let count = vector_coeffs.len();
        let m = vector_coeffs[0].ncols();
        let orbitals: Vec<RadialOrbitals> = vector_coeffs
            .iter()
            .map(|y| self.radial_orbitals(y))
            .collect::<Result<_>>()?;
        // density series ρ^(n) = Σ_{m1+m2=n} conj(χ^(m1)) χ^(m2)
        let densities: Vec<CMat> = (0..=max_order)
            .into_par_iter()
            .map(|n| {
                let mut acc = CMat::zeros(self.n_radial(), m * m);
                for m1 in 0..=n.min(count - 1) {
                    let m2 = n - m1;
                    if m2 < count {
                        acc += pair_densities(&orbitals[m1], &orbitals[m2]);
                    }
                }
                acc
            })
            .collect();
        let potentials: Vec<CMat> = densities
            .par_iter()
            .map(|d| linalg::matmul(&self.kernel, d))
            .collect();
        let out = (0..=max_order)
            .into_par_iter()
            .map(|n| {
                let mut acc = CMat::zeros(m * m, m * m);
                for n1 in 0..=n {
                    acc += linalg::matmul(&densities[n1].transpose(), &potentials[n - n1]);
                }
                reorder(&acc, m)
            })
            .collect();
        Ok(out)
    }

    fn couple(&self, left: &CMat, right: &CMat) -> CMat {
        linalg::matmul(&left.transpose(), &linalg::matmul(&self.kernel, right))
    }

    /// Monopole integral `∫∫ ρ_1(r_1) ρ_2(r_2)/max(r_1, r_2)` of two radial
    /// densities already multiplied by the radial weights.
    pub fn monopole_integral(&self, rho1: &[f64], rho2: &[f64]) -> f64 {
        let mut total = 0.0;
        for (a, x) in rho1.iter().enumerate() {
            for (b, y) in rho2.iter().enumerate() {
                total += x * y * self.kernel[(a, b)].re;
            }
        }
        total
    }
}

/// `N_r × (m_1 m_2)` matrix with column `a·m + c` holding
/// `conj(χ^left_a) χ^right_c` summed over spinor components.
fn pair_densities(left: &RadialOrbitals, right: &RadialOrbitals) -> CMat {
    let nr = left.upper.nrows();
    let m = left.count();
    let mut out = CMat::zeros(nr, m * m);
    for a in 0..m {
        for cc in 0..m {
            let col = a * m + cc;
            for r in 0..nr {
                out[(r, col)] = left.upper[(r, a)].conj() * right.upper[(r, cc)]
                    + left.lower[(r, a)].conj() * right.lower[(r, cc)];
            }
        }
    }
    out
}

/// `M_{(ac),(bd)} -> W_{(ab),(cd)}`.
fn reorder(coupled: &CMat, m: usize) -> CMat {
    CMat::from_fn(m * m, m * m, |row, col| {
        let (a, b) = (row / m, row % m);
        let (cc, d) = (col / m, col % m);
        coupled[(a * m + cc, b * m + d)]
    })
}

/// Nonrelativistic hydrogenic `1s` momentum profile `φ(p)` for nuclear charge `q`,
/// normalized as `∫ |φ|² p² dp = 1`.
pub fn hydrogenic_1s_momentum(q: f64, p: f64) -> f64 {
    4.0 * (2.0 / PI).sqrt() * q.powf(2.5) / (p * p + q * q).powi(2)
}

/// Grid vector (`2n` entries, lower component zero) of the `1s` profile.
pub fn hydrogenic_1s_vector(grid: &ChannelGrid, q: f64) -> CMat {
    let n = grid.n();
    let mut v = CMat::zeros(2 * n, 1);
    for (i, (&p, &w)) in grid.nodes.iter().zip(&grid.weights).enumerate() {
        v[(i, 0)] = c(w.sqrt() * p * hydrogenic_1s_momentum(q, p));
    }
    v
}

/// Real radial density `Σ_comp |χ|²` of a single column.
pub fn radial_density(orbitals: &RadialOrbitals, column: usize) -> Vec<f64> {
    (0..orbitals.upper.nrows())
        .map(|r| orbitals.upper[(r, column)].norm_sqr() + orbitals.lower[(r, column)].norm_sqr())
        .collect()
}

/// `F^0(1s,1s)` of the hydrogenic `1s` orbital; the closed form is `5q/8`.
pub fn slater_1s(pair: &PairInteraction, grid: &ChannelGrid, q: f64) -> Result<f64> {
    let orbitals = pair.radial_orbitals(&hydrogenic_1s_vector(grid, q))?;
    let rho = radial_density(&orbitals, 0);
    Ok(pair.monopole_integral(&rho, &rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::{build_channel_grid, ChannelOperators};

    #[test]
    fn slater_oracle() {
        let grid = build_channel_grid(-1, 200, 1.0).unwrap();
        let pair = build_pair_interaction(&grid, RadialGridSpec::default()).unwrap();
        for q in [0.1, 0.2, 0.3] {
            let j = slater_1s(&pair, &grid, q).unwrap();
            assert!((j - 5.0 * q / 8.0).abs() < 1e-4, "q = {q}: {j}");
        }
    }

    #[test]
    fn short_radial_grid_is_rejected() {
        let grid = build_channel_grid(-1, 200, 1.0).unwrap();
        let spec = RadialGridSpec {
            r_max: 20.0,
            ..RadialGridSpec::default()
        };
        assert!(matches!(
            build_pair_interaction(&grid, spec),
            Err(Error::RadialResolution(_))
        ));
        let coarse = RadialGridSpec {
            n_r: 16,
            ..RadialGridSpec::default()
        };
        assert!(matches!(
            build_pair_interaction(&grid, coarse),
            Err(Error::RadialResolution(_))
        ));
    }

    #[test]
    fn pair_matrix_is_psd_and_swap_symmetric() {
        let grid = build_channel_grid(-1, 96, 1.0).unwrap();
        let sys = ChannelOperators::new(&grid).assemble(0.3).unwrap();
        let (r, w) = RadialGridSpec::default().nodes_and_weights().unwrap();
        let pair = pair_from_radial_rule(&grid, r, w);
        let m = 5;
        let w = pair.matrix(&sys.lowest_positive_states(m)).unwrap();
        assert!(linalg::hermiticity_residual(&w) < 1e-12);
        assert!(linalg::lambda_min(&w) > -1e-9 * linalg::hermitian_norm(&w));
        for i in 0..m * m {
            assert!(w[(i, i)].re >= 0.0);
        }
        for (a, b, cc, d) in [(0, 1, 2, 3), (1, 1, 0, 4), (2, 0, 0, 2), (4, 3, 1, 0)] {
            let direct = w[(a * m + b, cc * m + d)];
            let swapped = w[(b * m + a, d * m + cc)];
            assert!((direct - swapped).norm() < 1e-14);
        }
    }

    #[test]
    fn matrix_series_matches_direct_evaluation() {
        let grid = build_channel_grid(-1, 48, 1.0).unwrap();
        let (r, w) = RadialGridSpec::default().nodes_and_weights().unwrap();
        let pair = pair_from_radial_rule(&grid, r, w);
        let sys = ChannelOperators::new(&grid).assemble(0.2).unwrap();
        let y0 = sys.lowest_positive_states(3);
        let y1 = y0.map(|z| z * 0.3);
        let gamma: f64 = 0.5;
        let series = pair.matrix_series(&[y0.clone(), y1.clone()], 4).unwrap();
        let total = series
            .iter()
            .enumerate()
            .fold(CMat::zeros(9, 9), |acc, (k, m)| {
                acc + m * c(gamma.powi(k as i32))
            });
        let direct = pair.matrix(&(&y0 + &y1 * c(gamma))).unwrap();
        let err = (total - &direct).camax();
        assert!(err < 1e-12 * direct.camax(), "{err}");
    }
}
