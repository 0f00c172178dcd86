//! Truncated power series in the real coupling with square complex-matrix
//! coefficients.
//!
//! All series taking part in one computation share the same order `K`;
//! binary operations reject mismatched orders instead of truncating.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

/// Default gate on `cond(A_0)` for [`MatrixSeries::inv`].
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e12;

const INV_SQRT_LEADING_TOL: f64 = 1e-12;

/// `Σ_{n=0}^{K} A_n γ^n`, truncated at order `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSeries {
    dim: usize,
    coeffs: Vec<CMat>,
}

impl MatrixSeries {
    pub fn from_coeffs(coeffs: Vec<CMat>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidInput("a series needs at least one coefficient".into()))?;
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::InvalidInput(
                "matrix dimension must be positive".into(),
            ));
        }
        for (n, a) in coeffs.iter().enumerate() {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::Dimension(format!(
                    "coefficient {n} is {}x{}, expected {dim}x{dim}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if !linalg::all_finite(a) {
                return Err(Error::InvalidInput(format!(
                    "coefficient {n} has non-finite entries"
                )));
            }
        }
        Ok(Self { dim, coeffs })
    }

    /// Scalar (1×1) series from real coefficients.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::from_coeffs(
            values
                .iter()
                .map(|&v| CMat::from_element(1, 1, c(v)))
                .collect(),
        )
    }

    pub fn zero(dim: usize, order: usize) -> Self {
        Self {
            dim,
            coeffs: vec![linalg::zeros(dim); order + 1],
        }
    }

    pub fn identity(dim: usize, order: usize) -> Self {
        Self::constant(linalg::identity(dim), order)
    }

    pub fn constant(m: CMat, order: usize) -> Self {
        let dim = m.nrows();
        let mut s = Self::zero(dim, order);
        s.coeffs[0] = m;
        s
    }

    /// `a + γ b`.
    pub fn linear(a: CMat, b: CMat, order: usize) -> Result<Self> {
        let mut coeffs = vec![linalg::zeros(a.nrows()); order + 1];
        if order == 0 {
            coeffs[0] = a;
        } else {
            coeffs[0] = a;
            coeffs[1] = b;
        }
        Self::from_coeffs(coeffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &CMat {
        &self.coeffs[n]
    }

    pub fn into_coeffs(self) -> Vec<CMat> {
        self.coeffs
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "series dimensions {} and {}",
                self.dim, other.dim
            )));
        }
        if self.order() != other.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|a| a * c(factor)).collect(),
        }
    }

    /// Truncated Cauchy product `C_n = Σ_{m≤n} A_m B_{n-m}`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = (0..=self.order())
            .into_par_iter()
            .map(|n| {
                let mut acc = linalg::zeros(self.dim);
                for m in 0..=n {
                    acc += linalg::matmul(&self.coeffs[m], &other.coeffs[n - m]);
                }
                acc
            })
            .collect();
        Ok(Self {
            dim: self.dim,
            coeffs,
        })
    }

    /// Product with a constant matrix on the left, `M · A(γ)`.
    pub fn left_mul(&self, m: &CMat) -> Result<Self> {
        if m.ncols() != self.dim || m.nrows() != self.dim {
            return Err(Error::Dimension(
                "left factor must match series dimension".into(),
            ));
        }
        Ok(Self {
            dim: self.dim,
            coeffs: self
                .coeffs
                .par_iter()
                .map(|a| linalg::matmul(m, a))
                .collect(),
        })
    }

    /// Product with a constant matrix on the right, `A(γ) · M`.
    pub fn right_mul(&self, m: &CMat) -> Result<Self> {
        if m.ncols() != self.dim || m.nrows() != self.dim {
            return Err(Error::Dimension(
                "right factor must match series dimension".into(),
            ));
        }
        Ok(Self {
            dim: self.dim,
            coeffs: self
                .coeffs
                .par_iter()
                .map(|a| linalg::matmul(a, m))
                .collect(),
        })
    }

    /// `X^* A(γ) X` for a constant (possibly rectangular) `X`; the result has side `X.ncols()`.
    pub fn compress(&self, x: &CMat) -> Result<Self> {
        if x.nrows() != self.dim {
            return Err(Error::Dimension(
                "compression basis must have series dimension rows".into(),
            ));
        }
        let xa = x.adjoint();
        Self::from_coeffs(
            self.coeffs
                .par_iter()
                .map(|a| linalg::matmul3(&xa, a, x))
                .collect(),
        )
    }

    /// Coefficient-wise conjugate transpose (γ is real).
    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|a| a.adjoint()).collect(),
        }
    }

    /// Recursive inverse: `B_0 = A_0^{-1}`, `B_n = -A_0^{-1} Σ_{m=1}^{n} A_m B_{n-m}`.
    pub fn inv(&self) -> Result<Self> {
        self.inv_with_limit(DEFAULT_CONDITION_LIMIT)
    }

    pub fn inv_with_limit(&self, condition_limit: f64) -> Result<Self> {
        let sv = linalg::singular_values(&self.coeffs[0]);
        let smallest = *sv.last().expect("nonempty");
        let condition = if smallest > 0.0 {
            sv[0] / smallest
        } else {
            f64::INFINITY
        };
        if !(condition <= condition_limit) {
            return Err(Error::Singular {
                smallest_singular_value: smallest,
                condition,
            });
        }
        let a0_inv = linalg::inverse(&self.coeffs[0]).ok_or(Error::Singular {
            smallest_singular_value: smallest,
            condition,
        })?;
        let mut out: Vec<CMat> = Vec::with_capacity(self.coeffs.len());
        out.push(a0_inv.clone());
        for n in 1..=self.order() {
            let mut acc = linalg::zeros(self.dim);
            for m in 1..=n {
                acc += linalg::matmul(&self.coeffs[m], &out[n - m]);
            }
            out.push(-linalg::matmul(&a0_inv, &acc));
        }
        Ok(Self {
            dim: self.dim,
            coeffs: out,
        })
    }

    /// `S(γ)^{-1/2}` for Hermitian coefficients with `S_0 = I`.
    ///
    /// With `T = S^{-1}`, the root `R = T^{1/2}` with `R_0 = I` satisfies
    /// `R_n = (T_n - Σ_{m=1}^{n-1} R_m R_{n-m}) / 2`, which reproduces the
    /// binomial expansion of `(I + (S - I))^{-1/2}` order by order.
    pub fn inv_sqrt(&self) -> Result<Self> {
        let lead = linalg::identity_residual(&self.coeffs[0]);
        if lead > INV_SQRT_LEADING_TOL {
            return Err(Error::NotIdentityLeading(lead));
        }
        for (n, a) in self.coeffs.iter().enumerate() {
            let scale = a.camax().max(1.0);
            let res = linalg::hermiticity_residual(a);
            if res > INV_SQRT_LEADING_TOL * scale {
                return Err(Error::InvalidInput(format!(
                    "coefficient {n} not Hermitian (residual {res:.3e})"
                )));
            }
        }
        let t = self.inv()?;
        let mut out: Vec<CMat> = Vec::with_capacity(self.coeffs.len());
        out.push(linalg::identity(self.dim));
        for n in 1..=self.order() {
            let mut acc = t.coeffs[n].clone();
            for m in 1..n {
                acc -= linalg::matmul(&out[m], &out[n - m]);
            }
            out.push(acc * c(0.5));
        }
        Ok(Self {
            dim: self.dim,
            coeffs: out,
        })
    }

    /// Horner evaluation at a real coupling.
    pub fn eval(&self, gamma: f64) -> CMat {
        self.partial_sum(gamma, self.order())
    }

    /// `Σ_{n≤k} A_n γ^n`.
    pub fn partial_sum(&self, gamma: f64, k: usize) -> CMat {
        let k = k.min(self.order());
        let mut acc = self.coeffs[k].clone();
        for n in (0..k).rev() {
            acc = acc * c(gamma) + &self.coeffs[n];
        }
        acc
    }

    /// Same series with coefficients above `k` removed (order becomes `k`).
    pub fn truncate(&self, k: usize) -> Self {
        Self {
            dim: self.dim,
            coeffs: self.coeffs[..=k.min(self.order())].to_vec(),
        }
    }

    /// Multiply by `γ^shift`, dropping what falls beyond the order.
    /// Returns the series and whether a nonzero coefficient was dropped.
    pub fn shift(&self, shift: usize) -> (Self, bool) {
        let k = self.order();
        let mut coeffs = vec![linalg::zeros(self.dim); k + 1];
        let mut dropped = false;
        for (n, a) in self.coeffs.iter().enumerate() {
            if n + shift <= k {
                coeffs[n + shift] = a.clone();
            } else if a.camax() > 0.0 {
                dropped = true;
            }
        }
        (
            Self {
                dim: self.dim,
                coeffs,
            },
            dropped,
        )
    }

    /// `C_n = Σ_m A_m ⊗ B_{n-m}`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        let coeffs = (0..=self.order())
            .into_par_iter()
            .map(|n| {
                let mut acc = linalg::zeros(self.dim * other.dim);
                for m in 0..=n {
                    acc += linalg::kron(&self.coeffs[m], &other.coeffs[n - m]);
                }
                acc
            })
            .collect();
        Ok(Self {
            dim: self.dim * other.dim,
            coeffs,
        })
    }

    /// Largest max-entry residual against another series of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).camax())
            .fold(0.0, f64::max))
    }

    /// Spectral norms of each coefficient.
    pub fn coefficient_norms(&self) -> Vec<f64> {
        self.coeffs.par_iter().map(linalg::spectral_norm).collect()
    }
}
