//! Power series in the coupling of the spectral projector `P_+(γ)`, the
//! decoupling unitary `U(γ)`, and the block-diagonalized one-particle
//! Hamiltonian, together with the remainder metrics used to compare
//! truncations against exact operators.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dirac::ChannelOperators;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, HermitianEigen};
use crate::series::MatrixSeries;

/// Relative change allowed when the number of contour nodes is doubled.
pub const CONTOUR_DOUBLING_TOL: f64 = 1e-8;

/// Contour nodes evaluated per parallel batch; fixed so sums do not depend on thread count.
const CONTOUR_BATCH: usize = 8;

/// Circle `|z - center| = radius` sampled at `m_nodes` equispaced points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub center: Complex64,
    pub radius: f64,
    pub m_nodes: usize,
}

impl ContourSpec {
    /// Circle around `[g, λ_max]` with `g` the smallest positive eigenvalue, padded by `margin`.
    pub fn enclosing_positive(eigenvalues: &[f64], margin: f64, m_nodes: usize) -> Result<Self> {
        let g = eigenvalues
            .iter()
            .copied()
            .filter(|&x| x > 0.0)
            .fold(f64::INFINITY, f64::min);
        let top = eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !g.is_finite() || top <= 0.0 {
            return Err(Error::ContourEnclosure(
                "operator has no positive eigenvalues".into(),
            ));
        }
        let spec = Self {
            center: c(0.5 * (g + top)),
            radius: 0.5 * (top - g) + margin,
            m_nodes,
        };
        spec.validate(eigenvalues)?;
        Ok(spec)
    }

    /// Every positive eigenvalue strictly inside, every negative one strictly outside.
    pub fn validate(&self, eigenvalues: &[f64]) -> Result<()> {
        if self.m_nodes < 16 || !self.m_nodes.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "m_nodes must be even and >= 16, got {}",
                self.m_nodes
            )));
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidInput(
                "contour radius must be positive".into(),
            ));
        }
        for &x in eigenvalues {
            let dist = (c(x) - self.center).norm();
            let inside = dist < self.radius;
            if x > 0.0 && !inside {
                return Err(Error::ContourEnclosure(format!(
                    "positive eigenvalue {x:.6} lies outside"
                )));
            }
            if x <= 0.0 && inside {
                return Err(Error::ContourEnclosure(format!(
                    "non-positive eigenvalue {x:.6} lies inside"
                )));
            }
        }
        Ok(())
    }

    fn node(&self, k: usize, count: usize) -> Complex64 {
        let theta = 2.0 * PI * k as f64 / count as f64;
        Complex64::from_polar(self.radius, theta)
    }
}

/// Unitary frame in which `D_0` is diagonal: `F D_0 F^* = diag(λ)`.
#[derive(Debug, Clone)]
pub struct SpectralFrame {
    pub frame: CMat,
    pub eigenvalues: Vec<f64>,
}

impl SpectralFrame {
    pub fn from_hermitian(d0: &CMat) -> Self {
        let eig = HermitianEigen::new(d0);
        Self {
            frame: eig.vectors.adjoint(),
            eigenvalues: eig.values,
        }
    }

    /// Foldy–Wouthuysen frame of a momentum channel (exact, no eigensolve).
    pub fn foldy_wouthuysen(ops: &ChannelOperators) -> Self {
        let energies = ops.grid.free_energies();
        let eigenvalues = energies
            .iter()
            .copied()
            .chain(energies.iter().map(|e| -e))
            .collect();
        Self {
            frame: ops.u_fw.clone(),
            eigenvalues,
        }
    }

    fn to_frame(&self, m: &CMat) -> CMat {
        linalg::sandwich(&self.frame, m)
    }

    fn out_of_frame(&self, m: &CMat) -> CMat {
        linalg::sandwich(&self.frame.adjoint(), m)
    }
}

/// Series of `P_+(γ)` for `D_0 + γV` from the resolvent expansion of the
/// Riesz integral, with the contour integrals done by residues.
///
/// In the eigenframe of `D_0` the coefficients solve, order by order,
/// `[P_n, D_0] + [P_{n-1}, V] = 0` (fixes the blocks coupling the two
/// spectral halves) and `Σ_m P_m P_{n-m} = P_n` (fixes the diagonal blocks).
pub fn projection_series(frame: &SpectralFrame, v: &CMat, order: usize) -> Result<MatrixSeries> {
    let dim = frame.eigenvalues.len();
    if v.nrows() != dim || v.ncols() != dim {
        return Err(Error::Dimension(
            "potential does not match the frame".into(),
        ));
    }
    if let Some(&bad) = frame
        .eigenvalues
        .iter()
        .find(|x| x.abs() < crate::dirac::ZERO_EIGENVALUE_GUARD)
    {
        return Err(Error::NoSpectralGap(bad));
    }
    let positive: Vec<bool> = frame.eigenvalues.iter().map(|&x| x > 0.0).collect();
    let vf = frame.to_frame(v);
    let mut coeffs: Vec<CMat> = Vec::with_capacity(order + 1);
    coeffs.push(CMat::from_fn(dim, dim, |a, b| {
        if a == b && positive[a] {
            c(1.0)
        } else {
            c(0.0)
        }
    }));
    for n in 1..=order {
        let comm = linalg::commutator(&coeffs[n - 1], &vf);
        let mut quad = linalg::zeros(dim);
        for m in 1..n {
            quad += linalg::matmul(&coeffs[m], &coeffs[n - m]);
        }
        let next = CMat::from_fn(dim, dim, |a, b| match (positive[a], positive[b]) {
            (true, true) => -quad[(a, b)],
            (false, false) => quad[(a, b)],
            _ => comm[(a, b)] / (frame.eigenvalues[a] - frame.eigenvalues[b]),
        });
        coeffs.push(linalg::hermitian_part(&next));
    }
    MatrixSeries::from_coeffs(coeffs.iter().map(|p| frame.out_of_frame(p)).collect())
}

/// Same coefficients by trapezoidal quadrature of
/// `P^(n) = (1/2πi) ∮ R_0(z) (V R_0(z))^n dz`, `R_0(z) = (z - D_0)^{-1}`.
///
/// The result is checked against the rule with twice as many nodes and
/// rejected if any coefficient moves by more than [`CONTOUR_DOUBLING_TOL`]
/// relative to the largest coefficient entry.
pub fn riesz_projection_series(
    frame: &SpectralFrame,
    v: &CMat,
    contour: &ContourSpec,
    order: usize,
) -> Result<MatrixSeries> {
    if order < 1 {
        return Err(Error::InvalidInput(
            "series order must be at least 1".into(),
        ));
    }
    contour.validate(&frame.eigenvalues)?;
    let vf = frame.to_frame(v);
    let m = contour.m_nodes;
    let even = contour_sum(frame, &vf, contour, order, (0..m).map(|k| (k, m)).collect());
    let odd = contour_sum(
        frame,
        &vf,
        contour,
        order,
        (0..m).map(|k| (2 * k + 1, 2 * m)).collect(),
    );
    let scale = even.iter().map(|p| p.camax()).fold(1.0, f64::max);
    let mut change: f64 = 0.0;
    for (a, b) in even.iter().zip(&odd) {
        // the 2m rule is the average of the even and odd sums
        change = change.max(((a - b) * c(0.5)).camax() / scale);
    }
    if change > CONTOUR_DOUBLING_TOL {
        return Err(Error::ContourNotConverged { change, m_nodes: m });
    }
    let inv_m = 1.0 / m as f64;
    MatrixSeries::from_coeffs(
        even.iter()
            .map(|p| linalg::hermitian_part(&frame.out_of_frame(&(p * c(inv_m)))))
            .collect(),
    )
}

/// `Σ_k r e^{iθ_k} R_0(z_k) (V R_0(z_k))^n` over the given nodes, batch order fixed.
fn contour_sum(
    frame: &SpectralFrame,
    vf: &CMat,
    contour: &ContourSpec,
    order: usize,
    nodes: Vec<(usize, usize)>,
) -> Vec<CMat> {
    let dim = frame.eigenvalues.len();
    let mut total = vec![linalg::zeros(dim); order + 1];
    for batch in nodes.chunks(CONTOUR_BATCH) {
        let parts: Vec<Vec<CMat>> = batch
            .par_iter()
            .map(|&(k, count)| {
                let offset = contour.node(k, count);
                let z = contour.center + offset;
                let resolvent: Vec<Complex64> =
                    frame.eigenvalues.iter().map(|&x| 1.0 / (z - x)).collect();
                let mut term = CMat::from_fn(dim, dim, |a, b| {
                    if a == b {
                        resolvent[a] * offset
                    } else {
                        c(0.0)
                    }
                });
                let mut out = Vec::with_capacity(order + 1);
                out.push(term.clone());
                for _ in 0..order {
                    // term <- term V R_0
                    let mut next = linalg::matmul(&term, vf);
                    for (col, &r) in resolvent.iter().enumerate() {
                        next.column_mut(col).iter_mut().for_each(|x| *x *= r);
                    }
                    term = next;
                    out.push(term.clone());
                }
                out
            })
            .collect();
        for part in parts {
            for (acc, p) in total.iter_mut().zip(part) {
                *acc += p;
            }
        }
    }
    total
}

/// `U(γ) = (P_+^0 P(γ) + P_-^0 (1 - P(γ))) (1 - (P_+^0 - P(γ))²)^{-1/2}` as a series.
pub fn u_gamma_series(p_series: &MatrixSeries, p0: &CMat) -> Result<MatrixSeries> {
    let dim = p_series.dim();
    let order = p_series.order();
    if (p_series.coeff(0) - p0).camax() > 1e-11 {
        return Err(Error::InvalidInput(
            "projection series does not start at P_+^0".into(),
        ));
    }
    let id = linalg::identity(dim);
    let reflect = p0 * c(2.0) - &id;
    let pairing = p_series
        .left_mul(&reflect)?
        .add(&MatrixSeries::constant(&id - p0, order))?;
    let diff = MatrixSeries::constant(p0.clone(), order).sub(p_series)?;
    let s = MatrixSeries::identity(dim, order).sub(&diff.mul(&diff)?)?;
    pairing.mul(&s.inv_sqrt()?)
}

/// `U_FW U(γ) P(γ) (D_0 + γV) P(γ) U(γ)^* U_FW^*` as a series.
pub fn h_diag_series(
    ops: &ChannelOperators,
    p_series: &MatrixSeries,
    u_series: &MatrixSeries,
) -> Result<MatrixSeries> {
    let order = p_series.order();
    let dirac = MatrixSeries::linear(ops.d0.clone(), ops.v.clone(), order)?;
    let projected = p_series.mul(&dirac)?.mul(p_series)?;
    let transported = u_series.mul(&projected)?.mul(&u_series.adjoint())?;
    transported
        .left_mul(&ops.u_fw)?
        .right_mul(&ops.u_fw.adjoint())
}

/// How the projector coefficients are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionMethod {
    /// Exact residue evaluation of the resolvent expansion.
    Residue,
    /// Trapezoidal quadrature on a circle.
    Contour(ContourSpec),
}

/// One-particle series shared by every coupling on a fixed grid.
#[derive(Debug, Clone)]
pub struct DecouplingBundle {
    pub p_series: MatrixSeries,
    pub u_series: MatrixSeries,
    pub h_diag_series: MatrixSeries,
    /// `|D_0|^{-1/2}`.
    pub weight_neg_half: CMat,
}

impl DecouplingBundle {
    pub fn build(ops: &ChannelOperators, method: ProjectionMethod, order: usize) -> Result<Self> {
        let frame = SpectralFrame::foldy_wouthuysen(ops);
        let p_series = match method {
            ProjectionMethod::Residue => projection_series(&frame, &ops.v, order)?,
            ProjectionMethod::Contour(spec) => {
                riesz_projection_series(&frame, &ops.v, &spec, order)?
            }
        };
        let u_series = u_gamma_series(&p_series, &ops.p_plus_0)?;
        let h_diag = h_diag_series(ops, &p_series, &u_series)?;
        Ok(Self {
            p_series,
            u_series,
            h_diag_series: h_diag,
            weight_neg_half: ops.abs_d0_neg_half.clone(),
        })
    }

    pub fn order(&self) -> usize {
        self.p_series.order()
    }

    /// Largest violation of the structural invariants of the three series.
    pub fn invariant_residuals(&self, p0: &CMat) -> BundleResiduals {
        let n = self.h_diag_series.dim() / 2;
        let mut off_block: f64 = 0.0;
        let mut hermiticity: f64 = 0.0;
        for h in self.h_diag_series.coeffs() {
            hermiticity = hermiticity.max(linalg::hermiticity_residual(h));
            let scale = h.camax().max(1.0);
            for i in 0..2 * n {
                for j in 0..2 * n {
                    if i >= n || j >= n {
                        off_block = off_block.max(h[(i, j)].norm() / scale);
                    }
                }
            }
        }
        BundleResiduals {
            p_leading: (self.p_series.coeff(0) - p0).camax(),
            u_leading: linalg::identity_residual(self.u_series.coeff(0)),
            h_hermiticity: hermiticity,
            h_off_block: off_block,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BundleResiduals {
    pub p_leading: f64,
    pub u_leading: f64,
    pub h_hermiticity: f64,
    /// Largest entry outside the upper (β_+) block, relative to the coefficient scale.
    pub h_off_block: f64,
}

/// `||W (exact - Σ_{n≤k} γ^n A_n) W||_2`.
pub fn remainder_weighted_norm(
    exact: &CMat,
    series: &MatrixSeries,
    k: usize,
    gamma: f64,
    weight: &CMat,
) -> f64 {
    let remainder = exact - series.partial_sum(gamma, k);
    linalg::spectral_norm(&linalg::matmul3(weight, &remainder, weight))
}

/// `(a + i)^{-1}` for Hermitian `a`.
pub fn shifted_resolvent(a: &CMat) -> CMat {
    let eig = HermitianEigen::new(a);
    let mut scaled = eig.vectors.clone();
    for (k, &lambda) in eig.values.iter().enumerate() {
        let f = 1.0 / Complex64::new(lambda, 1.0);
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= f);
    }
    linalg::matmul(&scaled, &eig.vectors.adjoint())
}

/// `||(a + i)^{-1} - (b + i)^{-1}||_2`.
pub fn resolvent_distance(a: &CMat, b: &CMat) -> f64 {
    linalg::spectral_norm(&(shifted_resolvent(a) - shifted_resolvent(b)))
}

/// Least-squares slope of `ln y` against `k`, returned as the ratio `e^{slope}`.
///
/// Zeros and non-finite values are skipped; `None` with fewer than two points.
pub fn fitted_geometric_ratio(ks: &[usize], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(values)
        .filter(|(_, &y)| y > 0.0 && y.is_finite())
        .map(|(&k, &y)| (k as f64, y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some((sxy / sxx).exp())
}

/// Values at or below this are treated as converged to roundoff when testing
/// for monotone decrease or fitting geometric rates.
pub const NUMERICAL_FLOOR: f64 = 1e-10;

/// First index from which the sequence decreases strictly to the end, where a
/// step that lands at or below `floor` also counts as a decrease.
pub fn onset_of_decrease(values: &[f64], floor: f64) -> usize {
    let mut k0 = values.len().saturating_sub(1);
    while k0 > 0 && (values[k0 - 1] > values[k0] || values[k0] <= floor) {
        k0 -= 1;
    }
    k0
}
