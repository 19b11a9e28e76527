//! One-particle structures: generators, test vectors, inner products and
//! functional calculus.
//!
//! Two concrete backends cover every catalog system:
//!
//! * dense real symmetric matrices, diagonalized once at construction, with the
//!   entrywise complex conjugation in the standard basis;
//! * radial momentum quadrature, where a test vector is the vector of values of
//!   its radial transform at the quadrature nodes and the generator acts as
//!   multiplication by the dispersion.
//!
//! In both backends the generator is diagonal in a distinguished representation,
//! so every kernel in this crate reduces to weighted sums over (eigenvalue,
//! coefficient) pairs. `SpectralVector` caches a vector's coefficients in that
//! representation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues at or below this floor are rejected: the thermal covariance
/// needs a strictly positive generator.
pub const SPECTRAL_FLOOR: f64 = 1e-12;

/// Entrywise imaginary parts at or below this mark a vector as real
/// (a fixed point of the conjugation).
pub const REALNESS_TOL: f64 = 1e-14;

const SYMMETRY_TOL: f64 = 1e-12;

/// A positive self-adjoint generator together with its diagonalizing data.
#[derive(Debug, Clone)]
pub enum GeneratorModel {
    Matrix(MatrixModel),
    Quadrature(QuadratureModel),
}

/// Dense real symmetric generator h = Q diag(lambda) Q^T.
#[derive(Debug, Clone)]
pub struct MatrixModel {
    dim: usize,
    h: DMatrix<f64>,
    /// Ascending, all strictly positive.
    eigenvalues: Vec<f64>,
    /// Columns are the orthonormal eigenbasis, ordered like `eigenvalues`.
    eigenvectors: DMatrix<f64>,
}

/// Radial momentum quadrature: the generator is multiplication by the
/// dispersion at strictly increasing nodes; `weights` carry the full spectral
/// measure (quadrature weight x angular surface factor x kernel weight).
#[derive(Debug, Clone)]
pub struct QuadratureModel {
    space_dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl MatrixModel {
    /// Diagonalize a real symmetric positive-definite matrix.
    pub fn eigendecompose(h: DMatrix<f64>) -> Result<Self> {
        let dim = h.nrows();
        if h.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: h.ncols(),
            });
        }
        let mut max_asym = 0.0f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                max_asym = max_asym.max((h[(i, j)] - h[(j, i)]).abs());
            }
        }
        let scale = h.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1.0);
        if max_asym > SYMMETRY_TOL * scale {
            return Err(Error::NonSymmetric {
                max_asym,
                tol: SYMMETRY_TOL,
            });
        }
        // Symmetrize before factoring so roundoff asymmetry cannot leak in.
        let sym = 0.5 * (&h + h.transpose());
        let eig = SymmetricEigen::new(sym);
        Self::from_eigen_parts(h, eig.eigenvalues, eig.eigenvectors)
    }

    /// Assemble a model from a ready eigensystem (h is rebuilt from it).
    pub fn from_eigensystem(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let q = eigenvectors.clone();
        let d = DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone()));
        let h = &q * d * q.transpose();
        Self::from_eigen_parts(h, DVector::from_vec(eigenvalues), eigenvectors)
    }

    fn from_eigen_parts(
        h: DMatrix<f64>,
        eigenvalues: DVector<f64>,
        eigenvectors: DMatrix<f64>,
    ) -> Result<Self> {
        let dim = h.nrows();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
        let sorted: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
        if sorted[0] <= SPECTRAL_FLOOR {
            return Err(Error::NonPositiveSpectrum {
                min_eigenvalue: sorted[0],
                floor: SPECTRAL_FLOOR,
            });
        }
        let mut q = DMatrix::zeros(dim, dim);
        for (new_col, &old_col) in order.iter().enumerate() {
            q.set_column(new_col, &eigenvectors.column(old_col));
        }
        Ok(Self {
            dim,
            h,
            eigenvalues: sorted,
            eigenvectors: q,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h_matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }
}

impl QuadratureModel {
    pub fn new(
        space_dim: usize,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        eigenvalues: Vec<f64>,
    ) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.len() != eigenvalues.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: weights.len().min(eigenvalues.len()),
            });
        }
        if !nodes.windows(2).all(|p| p[0] < p[1]) {
            return Err(Error::ModelBuild("quadrature nodes must be strictly increasing".into()));
        }
        if weights.iter().any(|&w| w.is_nan() || w <= 0.0) {
            return Err(Error::ModelBuild("quadrature weights must be positive".into()));
        }
        if let Some(&bad) = eigenvalues.iter().find(|&&e| e.is_nan() || e < 0.0) {
            return Err(Error::ModelBuild(format!(
                "dispersion must be nonnegative at every node, found {bad}"
            )));
        }
        Ok(Self {
            space_dim,
            nodes,
            weights,
            eigenvalues,
        })
    }

    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

impl GeneratorModel {
    pub fn dim(&self) -> usize {
        match self {
            GeneratorModel::Matrix(m) => m.dim(),
            GeneratorModel::Quadrature(q) => q.nodes.len(),
        }
    }

    /// Spectrum points of the diagonal representation, ascending for matrices,
    /// node-ordered for quadrature.
    pub fn eigenvalues(&self) -> &[f64] {
        match self {
            GeneratorModel::Matrix(m) => &m.eigenvalues,
            GeneratorModel::Quadrature(q) => &q.eigenvalues,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Spectral weights of the diagonal representation (all ones for matrices).
    pub fn spectral_weight(&self, k: usize) -> f64 {
        match self {
            GeneratorModel::Matrix(_) => 1.0,
            GeneratorModel::Quadrature(q) => q.weights[k],
        }
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self, GeneratorModel::Matrix(_))
    }

    fn check_dim(&self, v: &TestVector) -> Result<()> {
        if v.components.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.components.len(),
            });
        }
        Ok(())
    }
}

/// A vector of the one-particle space: standard-basis entries for matrix
/// models, radial-transform node values for quadrature models. `zero_moment`
/// is the transform's value at zero momentum; it only matters for contexts
/// carrying a condensate and is zero otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct TestVector {
    pub components: Vec<Complex64>,
    pub zero_moment: Complex64,
}

impl TestVector {
    pub fn new(components: Vec<Complex64>) -> Self {
        Self {
            components,
            zero_moment: Complex64::ZERO,
        }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![Complex64::ZERO; dim])
    }

    /// Standard basis vector e_i.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.components[i] = Complex64::ONE;
        v
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn max_imag(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.im.abs())
            .fold(self.zero_moment.im.abs(), f64::max)
    }

    /// Membership in the fixed-point space of the conjugation.
    pub fn is_real(&self) -> bool {
        self.max_imag() <= REALNESS_TOL
    }

    pub fn conjugate(&self) -> Self {
        Self {
            components: self.components.iter().map(|c| c.conj()).collect(),
            zero_moment: self.zero_moment.conj(),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            components: self.components.iter().map(|c| c * factor).collect(),
            zero_moment: self.zero_moment * factor,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "vector lengths differ");
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
            zero_moment: self.zero_moment + other.zero_moment,
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-Complex64::ONE)
    }
}

/// Coefficients of a test vector in the model's diagonal representation,
/// cached so repeated kernel evaluations stay O(dim).
#[derive(Debug, Clone)]
pub struct SpectralVector {
    pub coeffs: Vec<Complex64>,
    pub zero_moment: Complex64,
}

impl GeneratorModel {
    /// Transform to the diagonal representation (eigenbasis / node values).
    pub fn to_spectral(&self, v: &TestVector) -> Result<SpectralVector> {
        self.check_dim(v)?;
        let coeffs = match self {
            GeneratorModel::Matrix(m) => {
                let q = &m.eigenvectors;
                let mut out = vec![Complex64::ZERO; m.dim];
                for (i, slot) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::ZERO;
                    for j in 0..m.dim {
                        acc += q[(j, i)] * v.components[j];
                    }
                    *slot = acc;
                }
                out
            }
            GeneratorModel::Quadrature(_) => v.components.clone(),
        };
        Ok(SpectralVector {
            coeffs,
            zero_moment: v.zero_moment,
        })
    }

    /// Transform diagonal-representation coefficients back to a test vector.
    pub fn from_spectral(&self, sv: &SpectralVector) -> TestVector {
        let components = match self {
            GeneratorModel::Matrix(m) => {
                let q = &m.eigenvectors;
                let mut out = vec![Complex64::ZERO; m.dim];
                for (j, slot) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::ZERO;
                    for i in 0..m.dim {
                        acc += q[(j, i)] * sv.coeffs[i];
                    }
                    *slot = acc;
                }
                out
            }
            GeneratorModel::Quadrature(_) => sv.coeffs.clone(),
        };
        TestVector {
            components,
            zero_moment: sv.zero_moment,
        }
    }
}

/// Hermitian inner product, conjugate-linear in the first slot.
pub fn inner(model: &GeneratorModel, f: &TestVector, g: &TestVector) -> Result<Complex64> {
    model.check_dim(f)?;
    model.check_dim(g)?;
    let mut acc = Complex64::ZERO;
    match model {
        GeneratorModel::Matrix(_) => {
            for (a, b) in f.components.iter().zip(&g.components) {
                acc += a.conj() * b;
            }
        }
        GeneratorModel::Quadrature(q) => {
            for ((a, b), &w) in f.components.iter().zip(&g.components).zip(&q.weights) {
                acc += w * a.conj() * b;
            }
        }
    }
    Ok(acc)
}

/// Symplectic form sigma(f, g) = Im <f, g>.
pub fn symplectic(model: &GeneratorModel, f: &TestVector, g: &TestVector) -> Result<f64> {
    Ok(inner(model, f, g)?.im)
}

/// Apply phi(h) through the spectral resolution.
pub fn apply_function<F: Fn(f64) -> f64>(
    model: &GeneratorModel,
    phi: F,
    f: &TestVector,
) -> Result<TestVector> {
    let mut sv = model.to_spectral(f)?;
    for (c, &lambda) in sv.coeffs.iter_mut().zip(model.eigenvalues()) {
        let value = phi(lambda);
        if !value.is_finite() {
            return Err(Error::FunctionSingularAtSpectrum { point: lambda });
        }
        *c *= value;
    }
    if sv.zero_moment != Complex64::ZERO {
        let value = phi(0.0);
        if !value.is_finite() {
            return Err(Error::FunctionSingularAtSpectrum { point: 0.0 });
        }
        sv.zero_moment *= value;
    }
    Ok(model.from_spectral(&sv))
}

/// Parse the plain-text matrix format: first line `dim`, then `dim` rows of
/// `dim` space-separated reals.
pub fn read_matrix_text(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let dim_line = lines
        .next()
        .ok_or_else(|| Error::MatrixParse("empty input; expected a leading dimension line".into()))?;
    let dim: usize = dim_line
        .trim()
        .parse()
        .map_err(|_| Error::MatrixParse(format!("dimension line {dim_line:?} is not a positive integer")))?;
    if dim == 0 {
        return Err(Error::MatrixParse("dimension must be positive".into()));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for row in 0..dim {
        let line = lines
            .next()
            .ok_or_else(|| Error::MatrixParse(format!("expected {dim} rows, input ends after {row}")))?;
        let entries: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::MatrixParse(format!("row {}: {tok:?} is not a real number", row + 1)))
            })
            .collect::<Result<_>>()?;
        if entries.len() != dim {
            return Err(Error::MatrixParse(format!(
                "row {} has {} entries, expected {dim}",
                row + 1,
                entries.len()
            )));
        }
        data.extend(entries);
    }
    if lines.next().is_some() {
        return Err(Error::MatrixParse(format!("trailing content after {dim} rows")));
    }
    Ok(DMatrix::from_row_slice(dim, dim, &data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_2x2(entries: [f64; 4]) -> MatrixModel {
        MatrixModel::eigendecompose(DMatrix::from_row_slice(2, 2, &entries)).unwrap()
    }

    #[test]
    fn identity_eigendecomposition() {
        let m = model_2x2([1.0, 0.0, 0.0, 1.0]);
        assert_eq!(m.eigenvalues(), &[1.0, 1.0]);
        let q = m.eigenvectors();
        let qtq = q.transpose() * q;
        assert!((qtq - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn diagonal_eigendecomposition() {
        let m = model_2x2([2.0, 0.0, 0.0, 5.0]);
        assert!((m.eigenvalues()[0] - 2.0).abs() < 1e-12);
        assert!((m.eigenvalues()[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_2x2_by_characteristic_polynomial() {
        // lambda^2 - 4 lambda + 3 = 0 gives 1 and 3
        let m = model_2x2([2.0, 1.0, 1.0, 2.0]);
        assert!((m.eigenvalues()[0] - 1.0).abs() < 1e-12);
        assert!((m.eigenvalues()[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigendecompose_rejects_asymmetry_and_bad_spectrum() {
        let err = MatrixModel::eigendecompose(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]))
            .unwrap_err();
        assert!(matches!(err, Error::NonSymmetric { .. }));

        let err = MatrixModel::eigendecompose(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]))
            .unwrap_err();
        assert!(matches!(err, Error::NonPositiveSpectrum { .. }));

        // singular (kernel) inputs are rejected too
        let err = MatrixModel::eigendecompose(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]))
            .unwrap_err();
        assert!(matches!(err, Error::NonPositiveSpectrum { .. }));
    }

    #[test]
    fn reconstruction_invariant() {
        let h = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 5.0]);
        let m = MatrixModel::eigendecompose(h.clone()).unwrap();
        let d = DMatrix::from_diagonal(&DVector::from_vec(m.eigenvalues().to_vec()));
        let rebuilt = m.eigenvectors() * d * m.eigenvectors().transpose();
        let rel = (&rebuilt - &h).amax() / h.amax();
        assert!(rel < 1e-10, "reconstruction relative error {rel}");
    }

    #[test]
    fn apply_identity_and_constant() {
        let model = GeneratorModel::Matrix(model_2x2([2.0, 1.0, 1.0, 2.0]));
        let f = TestVector::from_real(&[0.3, -1.2]);
        let hf = apply_function(&model, |l| l, &f).unwrap();
        // against direct matrix action
        let expect = [2.0 * 0.3 + 1.0 * (-1.2), 1.0 * 0.3 + 2.0 * (-1.2)];
        for (c, e) in hf.components.iter().zip(expect) {
            assert!((c.re - e).abs() < 1e-12 && c.im.abs() < 1e-14);
        }
        let same = apply_function(&model, |_| 1.0, &f).unwrap();
        for (a, b) in same.components.iter().zip(&f.components) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn scalar_exponential() {
        let model = GeneratorModel::Matrix(model_2x2([1.0, 0.0, 0.0, 1.0]));
        let f = TestVector::from_real(&[1.0, 0.0]);
        let out = apply_function(&model, |l| (-l).exp(), &f).unwrap();
        assert!((out.components[0].re - (-1.0f64).exp()).abs() < 1e-12);
        assert!((out.components[0].re - 0.367_879_441_171_442_3).abs() < 1e-12);
    }

    #[test]
    fn apply_function_rejects_singularities() {
        let model = GeneratorModel::Matrix(model_2x2([2.0, 0.0, 0.0, 1.0]));
        let f = TestVector::from_real(&[1.0, 1.0]);
        let err = apply_function(&model, |l| 1.0 / (l - 1.0), &f).unwrap_err();
        assert!(matches!(err, Error::FunctionSingularAtSpectrum { .. }));
    }

    #[test]
    fn inner_and_symplectic_cases() {
        let model = GeneratorModel::Matrix(model_2x2([1.0, 0.0, 0.0, 1.0]));
        let e0 = TestVector::basis(2, 0);
        let e1 = TestVector::basis(2, 1);
        assert_eq!(inner(&model, &e0, &e1).unwrap(), Complex64::ZERO);

        let i_e0 = e0.scaled(Complex64::I);
        let ip = inner(&model, &e0, &i_e0).unwrap();
        assert!((ip - Complex64::I).norm() < 1e-15);
        assert!((symplectic(&model, &e0, &i_e0).unwrap() - 1.0).abs() < 1e-15);

        // real pairs have vanishing symplectic form
        let f = TestVector::from_real(&[0.7, -0.9]);
        let g = TestVector::from_real(&[1.1, 0.4]);
        assert_eq!(symplectic(&model, &f, &g).unwrap(), 0.0);

        let err = inner(&model, &e0, &TestVector::zeros(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn conjugation_is_an_involution() {
        let f = TestVector::new(vec![Complex64::new(0.3, -0.4), Complex64::new(-1.0, 2.0)]);
        assert_eq!(f.conjugate().conjugate(), f);
        let real = TestVector::from_real(&[1.0, 2.0]);
        assert_eq!(real.conjugate(), real);
        assert!(real.is_real());
        let imag = TestVector::new(vec![Complex64::I]);
        assert_eq!(imag.conjugate().components[0], -Complex64::I);
        assert!(!imag.is_real());
    }

    #[test]
    fn functional_calculus_homomorphism() {
        let model = GeneratorModel::Matrix(model_2x2([3.0, 0.7, 0.7, 2.0]));
        let f = TestVector::new(vec![Complex64::new(0.2, 0.5), Complex64::new(-0.8, 0.1)]);
        let phi = |l: f64| (0.3 * l).sin() + 2.0;
        let psi = |l: f64| (-0.7 * l).exp();
        let combined = apply_function(&model, |l| phi(l) * psi(l), &f).unwrap();
        let chained = apply_function(&model, phi, &apply_function(&model, psi, &f).unwrap()).unwrap();
        for (a, b) in combined.components.iter().zip(&chained.components) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn real_functions_commute_with_conjugation() {
        let model = GeneratorModel::Matrix(model_2x2([3.0, 0.7, 0.7, 2.0]));
        let f = TestVector::new(vec![Complex64::new(0.2, 0.5), Complex64::new(-0.8, 0.1)]);
        let phi = |l: f64| (-l).exp() + l * l;
        let a = apply_function(&model, phi, &f.conjugate()).unwrap();
        let b = apply_function(&model, phi, &f).unwrap().conjugate();
        for (x, y) in a.components.iter().zip(&b.components) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn matrix_text_roundtrip_and_rejection() {
        let text = "2\n1.0 0.5\n0.5 2.0\n";
        let m = read_matrix_text(text).unwrap();
        assert_eq!(m[(0, 1)], 0.5);

        for bad in [
            "",
            "x\n1.0\n",
            "2\n1.0 0.5\n",
            "2\n1.0 a\n0.5 2.0\n",
            "1\n1.0\n2.0\n",
        ] {
            assert!(read_matrix_text(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn quadrature_model_validation() {
        let ok = QuadratureModel::new(3, vec![0.1, 0.5], vec![1.0, 2.0], vec![0.0, 1.0]);
        assert!(ok.is_ok());
        assert!(QuadratureModel::new(3, vec![0.5, 0.1], vec![1.0, 2.0], vec![0.0, 1.0]).is_err());
        assert!(QuadratureModel::new(3, vec![0.1, 0.5], vec![1.0, -2.0], vec![0.0, 1.0]).is_err());
        assert!(QuadratureModel::new(3, vec![0.1, 0.5], vec![1.0, 2.0], vec![-0.1, 1.0]).is_err());
    }
}
