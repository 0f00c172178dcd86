//! Dense complex linear algebra helpers on top of `nalgebra`.
//!
//! Every matrix in the crate is a `DMatrix<Complex64>`. Most of them are
//! real in practice, so products and eigensolves take a real fast path
//! whenever both operands have an identically zero imaginary part.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn zeros(dim: usize) -> CMat {
    CMat::zeros(dim, dim)
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn imag_part(m: &CMat) -> RMat {
    m.map(|z| z.im)
}

pub fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

pub fn from_real(m: &RMat) -> CMat {
    m.map(c)
}

fn combine(re: RMat, im: Option<RMat>) -> CMat {
    match im {
        None => re.map(c),
        Some(im) => re.zip_map(&im, Complex64::new),
    }
}

/// Matrix product routed through real GEMM (four real products at most).
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let ar = real_part(a);
    let br = real_part(b);
    let a_real = is_real(a);
    let b_real = is_real(b);
    match (a_real, b_real) {
        (true, true) => combine(&ar * &br, None),
        (true, false) => {
            let bi = imag_part(b);
            combine(&ar * &br, Some(&ar * &bi))
        }
        (false, true) => {
            let ai = imag_part(a);
            combine(&ar * &br, Some(&ai * &br))
        }
        (false, false) => {
            let ai = imag_part(a);
            let bi = imag_part(b);
            let re = &ar * &br - &ai * &bi;
            let im = &ar * &bi + &ai * &br;
            combine(re, Some(im))
        }
    }
}

/// `a * b * c`.
pub fn matmul3(a: &CMat, b: &CMat, c: &CMat) -> CMat {
    matmul(&matmul(a, b), c)
}

/// `a * m * a^*`.
pub fn sandwich(a: &CMat, m: &CMat) -> CMat {
    matmul3(a, m, &a.adjoint())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    matmul(a, b) - matmul(b, a)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, ordered like `values`.
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(m: &CMat) -> Self {
        let h = hermitian_part(m);
        let (values, vectors): (Vec<f64>, CMat) = if is_real(&h) {
            let eig = real_part(&h).symmetric_eigen();
            (
                eig.eigenvalues.iter().copied().collect(),
                from_real(&eig.eigenvectors),
            )
        } else {
            let eig = h.symmetric_eigen();
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
        };
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
        let sorted_values = order.iter().map(|&i| values[i]).collect();
        let sorted_vectors =
            CMat::from_fn(vectors.nrows(), order.len(), |r, k| vectors[(r, order[k])]);
        Self {
            values: sorted_values,
            vectors: sorted_vectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V f(Λ) V^*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let fk = f(lambda);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= fk);
        }
        matmul(&scaled, &self.vectors.adjoint())
    }

    /// Columns of the eigenvectors selected by `keep`.
    pub fn select(&self, keep: impl Fn(usize, f64) -> bool) -> CMat {
        let cols: Vec<usize> = (0..self.dim())
            .filter(|&k| keep(k, self.values[k]))
            .collect();
        CMat::from_fn(self.vectors.nrows(), cols.len(), |r, k| {
            self.vectors[(r, cols[k])]
        })
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = hermitian_part(m);
    let mut values: Vec<f64> = if is_real(&h) {
        real_part(&h)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    } else {
        h.symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(f64::total_cmp);
    values
}

pub fn lambda_min(m: &CMat) -> f64 {
    hermitian_eigenvalues(m)[0]
}

pub fn lambda_max(m: &CMat) -> f64 {
    *hermitian_eigenvalues(m).last().expect("empty matrix")
}

/// `(m + m^*)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() >= m.ncols() {
        matmul(&m.adjoint(), m)
    } else {
        matmul(m, &m.adjoint())
    };
    lambda_max(&gram).max(0.0).sqrt()
}

/// Spectral norm of a matrix already known to be Hermitian.
pub fn hermitian_norm(m: &CMat) -> f64 {
    let values = hermitian_eigenvalues(m);
    values[0].abs().max(values[values.len() - 1].abs())
}

/// Singular values, descending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = if is_real(m) {
        real_part(m).singular_values().iter().copied().collect()
    } else {
        m.clone().singular_values().iter().copied().collect()
    };
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn hermiticity_residual(m: &CMat) -> f64 {
    (m - m.adjoint()).camax()
}

/// Max-entry distance `||m - I||_max`.
pub fn identity_residual(m: &CMat) -> f64 {
    (m - identity(m.nrows())).camax()
}

pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Diagonal matrix from real entries.
pub fn diag(values: &[f64]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v)),
    ))
}

/// Inverse of an invertible matrix via LU.
pub fn inverse(m: &CMat) -> Option<CMat> {
    if is_real(m) {
        real_part(m).try_inverse().map(|inv| from_real(&inv))
    } else {
        m.clone().try_inverse()
    }
}

/// Rows/columns `indices` of `m` (principal submatrix).
pub fn principal_submatrix(m: &CMat, indices: &[usize]) -> CMat {
    CMat::from_fn(indices.len(), indices.len(), |i, j| {
        m[(indices[i], indices[j])]
    })
}
