//! Thermal contexts and the quasi-free Green-function kernels.
//!
//! A `ThermalContext` pairs a generator with an inverse temperature and fixes
//! the covariance operator B. All kernels are evaluated through the spectral
//! representation; the growing factor (B - 1)e^{s h} is always rewritten in
//! log form so nothing overflows for large beta * lambda.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{GeneratorModel, MatrixModel, SpectralVector, TestVector};

/// Inverse temperature; `Infinite` selects the ground state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn finite(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Beta::Finite(value))
        } else {
            Err(Error::ModelBuild(format!("beta must be positive and finite, got {value}")))
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Beta::Finite(_))
    }

    /// The finite value, or an error for the ground state.
    pub fn value(&self) -> Result<f64> {
        match self {
            Beta::Finite(b) => Ok(*b),
            Beta::Infinite => Err(Error::FiniteBetaRequired),
        }
    }
}

impl std::fmt::Display for Beta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => write!(f, "inf"),
        }
    }
}

/// Shape of the covariance operator as a function of the generator.
#[derive(Debug, Clone, Copy, PartialEq)]
enum BShape {
    /// (1 + e^{-beta lambda}) / (1 - e^{-beta lambda})
    Thermal,
    /// Identically one (ground state).
    Ground,
    /// 1 + e^{-beta lambda}; a deliberately wrong covariance used as the
    /// negative-control fixture for the check suite.
    Corrupted,
}

/// A generator with an inverse temperature and the derived covariance operator.
#[derive(Debug, Clone)]
pub struct ThermalContext {
    pub model: GeneratorModel,
    pub beta: Beta,
    shape: BShape,
    /// Weight of the time-constant condensate mode (critical Bose gas); zero
    /// for every other system.
    pub condensate: f64,
}

impl ThermalContext {
    pub fn new(model: GeneratorModel, beta: Beta) -> Self {
        let shape = match beta {
            Beta::Finite(_) => BShape::Thermal,
            Beta::Infinite => BShape::Ground,
        };
        Self {
            model,
            beta,
            shape,
            condensate: 0.0,
        }
    }

    /// Negative-control fixture: replaces B(lambda) by 1 + e^{-beta lambda},
    /// which violates the reflection identity by design. Only for testing
    /// that the check suite actually rejects a wrong covariance.
    pub fn corrupted(model: GeneratorModel, beta: f64) -> Result<Self> {
        let beta = Beta::finite(beta)?;
        Ok(Self {
            model,
            beta,
            shape: BShape::Corrupted,
            condensate: 0.0,
        })
    }

    pub fn with_condensate(mut self, weight: f64) -> Self {
        self.condensate = weight;
        self
    }

    pub fn is_corrupted(&self) -> bool {
        self.shape == BShape::Corrupted
    }

    /// The same system at a different finite inverse temperature, keeping the
    /// covariance shape (including a corrupted fixture) and condensate.
    pub fn at_beta(&self, beta: f64) -> Result<Self> {
        let beta = Beta::finite(beta)?;
        let shape = match self.shape {
            BShape::Corrupted => BShape::Corrupted,
            _ => BShape::Thermal,
        };
        Ok(Self {
            model: self.model.clone(),
            beta,
            shape,
            condensate: self.condensate,
        })
    }

    /// B as a scalar function of a spectrum point.
    pub fn b_op(&self, lambda: f64) -> f64 {
        match self.shape {
            BShape::Ground => 1.0,
            BShape::Thermal => {
                let beta = self.beta_value();
                let q = (-beta * lambda).exp();
                (1.0 + q) / (1.0 - q)
            }
            BShape::Corrupted => 1.0 + (-self.beta_value() * lambda).exp(),
        }
    }

    fn beta_value(&self) -> f64 {
        match self.beta {
            Beta::Finite(b) => b,
            Beta::Infinite => f64::INFINITY,
        }
    }

    /// (B(lambda) + 1) / 2, evaluated without cancellation.
    fn half_b_plus_one(&self, lambda: f64) -> f64 {
        match self.shape {
            BShape::Ground => 1.0,
            BShape::Thermal => 1.0 / -(-self.beta_value() * lambda).exp_m1(),
            BShape::Corrupted => 1.0 + 0.5 * (-self.beta_value() * lambda).exp(),
        }
    }

    /// ln((B(lambda) - 1) / 2); -inf in the ground state.
    fn ln_half_b_minus_one(&self, lambda: f64) -> f64 {
        let beta = self.beta_value();
        match self.shape {
            BShape::Ground => f64::NEG_INFINITY,
            BShape::Thermal => -beta * lambda - (-(-beta * lambda).exp_m1()).ln(),
            BShape::Corrupted => -beta * lambda - std::f64::consts::LN_2,
        }
    }

    pub fn spectral(&self, v: &TestVector) -> Result<SpectralVector> {
        self.model.to_spectral(v)
    }

    fn require_interval(&self, s: f64) -> Result<f64> {
        match self.beta {
            Beta::Infinite => {
                if s >= 0.0 {
                    Ok(s)
                } else {
                    Err(Error::TimeOutOfRange {
                        time: s,
                        beta: self.beta.to_string(),
                    })
                }
            }
            Beta::Finite(b) => {
                if (0.0..=b).contains(&s) {
                    Ok(s)
                } else {
                    Err(Error::TimeOutOfRange {
                        time: s,
                        beta: self.beta.to_string(),
                    })
                }
            }
        }
    }

    /// Admissible Euclidean time for a pair of vectors: real pairs extend
    /// periodically over the whole line, complex pairs live on [0, beta].
    fn euclidean_time(&self, s: f64, real_pair: bool) -> Result<f64> {
        match self.beta {
            Beta::Infinite => self.require_interval(s),
            Beta::Finite(b) => {
                if real_pair {
                    Ok(s.rem_euclid(b))
                } else {
                    self.require_interval(s)
                }
            }
        }
    }
}

/// The quadratic form of the state: <f, B g> plus the condensate term.
pub fn b_form(ctx: &ThermalContext, f: &TestVector, g: &TestVector) -> Result<Complex64> {
    let sf = ctx.spectral(f)?;
    let sg = ctx.spectral(g)?;
    Ok(b_form_spectral(ctx, &sf, &sg))
}

pub(crate) fn b_form_spectral(
    ctx: &ThermalContext,
    sf: &SpectralVector,
    sg: &SpectralVector,
) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for (k, (&lambda, (a, b))) in ctx
        .model
        .eigenvalues()
        .iter()
        .zip(sf.coeffs.iter().zip(&sg.coeffs))
        .enumerate()
    {
        acc += ctx.model.spectral_weight(k) * ctx.b_op(lambda) * a.conj() * b;
    }
    if ctx.condensate != 0.0 {
        acc += ctx.condensate * sf.zero_moment.conj() * sg.zero_moment;
    }
    acc
}

/// The diagonal of the quadratic form, guaranteed real and nonnegative.
pub fn b_form_diag(ctx: &ThermalContext, f: &TestVector) -> Result<f64> {
    Ok(b_form(ctx, f, f)?.re)
}

/// State evaluation on a Weyl generator: exp(-1/4 <f, B f>).
pub fn state_eval(ctx: &ThermalContext, f: &TestVector) -> Result<f64> {
    Ok((-0.25 * b_form_diag(ctx, f)?).exp())
}

/// Real-time kernel Re <f, B e^{i t h} g> + i Im <f, e^{i t h} g>.
pub fn f_kernel(ctx: &ThermalContext, f: &TestVector, g: &TestVector, t: f64) -> Result<Complex64> {
    let sf = ctx.spectral(f)?;
    let sg = ctx.spectral(g)?;
    Ok(f_kernel_spectral(ctx, &sf, &sg, t))
}

pub(crate) fn f_kernel_spectral(
    ctx: &ThermalContext,
    sf: &SpectralVector,
    sg: &SpectralVector,
    t: f64,
) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (k, (&lambda, (a, b))) in ctx
        .model
        .eigenvalues()
        .iter()
        .zip(sf.coeffs.iter().zip(&sg.coeffs))
        .enumerate()
    {
        let z = a.conj() * b * Complex64::from_polar(1.0, t * lambda);
        let w = ctx.model.spectral_weight(k);
        re += w * ctx.b_op(lambda) * z.re;
        im += w * z.im;
    }
    if ctx.condensate != 0.0 {
        // The condensate mode is time-constant and commutative: it adds the
        // real sesquilinear term and nothing to the symplectic part.
        re += ctx.condensate * (sf.zero_moment.conj() * sg.zero_moment).re;
    }
    Complex64::new(re, im)
}

/// Two point real-time Green function.
pub fn green2_real(
    ctx: &ThermalContext,
    f: &TestVector,
    g: &TestVector,
    t: f64,
) -> Result<Complex64> {
    let bf = b_form_diag(ctx, f)?;
    let bg = b_form_diag(ctx, g)?;
    let fk = f_kernel(ctx, f, g, t)?;
    Ok((Complex64::new(-0.25 * (bf + bg), 0.0) - 0.5 * fk).exp())
}

/// Euclidean two point kernel S(f, g; s).
///
/// For a finite beta this is
/// 1/2 <f, (B+1) e^{-s h} g> + 1/2 <g, (B-1) e^{s h} f>,
/// with the second factor evaluated as exp(ln((B-1)/2) + s lambda) so the
/// thermal case reduces to the stable form e^{-(beta-s) h} / (1 - e^{-beta h}).
/// In the ground state S(f, g; s) = <f, e^{-s h} g> for s >= 0. Real pairs
/// extend beta-periodically to every real s.
pub fn s_kernel(ctx: &ThermalContext, f: &TestVector, g: &TestVector, s: f64) -> Result<Complex64> {
    let real_pair = f.is_real() && g.is_real();
    let s = ctx.euclidean_time(s, real_pair)?;
    let sf = ctx.spectral(f)?;
    let sg = ctx.spectral(g)?;
    Ok(s_kernel_spectral(ctx, &sf, &sg, s))
}

/// `s` must already lie in the admissible interval.
pub(crate) fn s_kernel_spectral(
    ctx: &ThermalContext,
    sf: &SpectralVector,
    sg: &SpectralVector,
    s: f64,
) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for (k, (&lambda, (a, b))) in ctx
        .model
        .eigenvalues()
        .iter()
        .zip(sf.coeffs.iter().zip(&sg.coeffs))
        .enumerate()
    {
        let z = a.conj() * b;
        let w = ctx.model.spectral_weight(k);
        let decaying = ctx.half_b_plus_one(lambda) * (-s * lambda).exp();
        acc += w * z * decaying;
        if ctx.beta.is_finite() {
            let growing = (ctx.ln_half_b_minus_one(lambda) + s * lambda).exp();
            acc += w * z.conj() * growing;
        }
    }
    if ctx.condensate != 0.0 {
        acc += ctx.condensate * (sf.zero_moment.conj() * sg.zero_moment).re;
    }
    acc
}

/// Euclidean two point Green function (the exponentiated form of `s_kernel`).
pub fn green2_euclid(
    ctx: &ThermalContext,
    f: &TestVector,
    g: &TestVector,
    s: f64,
) -> Result<Complex64> {
    let bf = b_form_diag(ctx, f)?;
    let bg = b_form_diag(ctx, g)?;
    let sk = s_kernel(ctx, f, g, s)?;
    Ok((Complex64::new(-0.25 * (bf + bg), 0.0) - 0.5 * sk).exp())
}

/// An ordered list of (test vector, Euclidean time) pairs.
#[derive(Debug, Clone, Default)]
pub struct EuclideanWord {
    pub entries: Vec<(TestVector, f64)>,
}

impl EuclideanWord {
    pub fn new(entries: Vec<(TestVector, f64)>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|(f, _)| f.is_real())
    }

    /// Shift every time by the same amount.
    pub fn shifted(&self, ds: f64) -> Self {
        Self::new(
            self.entries
                .iter()
                .map(|(f, s)| (f.clone(), s + ds))
                .collect(),
        )
    }

    /// Time reflection composed with the Weyl adjoint: reverse the order,
    /// negate vectors and times.
    pub fn reflected(&self) -> Self {
        Self::new(
            self.entries
                .iter()
                .rev()
                .map(|(f, s)| (f.negated(), -s))
                .collect(),
        )
    }

    /// Concatenation (caller keeps the time ordering).
    pub fn concat(&self, other: &Self) -> Self {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        Self::new(entries)
    }

    fn validate(&self, beta: Beta) -> Result<()> {
        for (i, pair) in self.entries.windows(2).enumerate() {
            let (prev, cur) = (pair[0].1, pair[1].1);
            if cur < prev {
                return Err(Error::UnorderedWord {
                    index: i + 1,
                    time: cur,
                    prev,
                });
            }
        }
        if let (Beta::Finite(b), (Some(first), Some(last))) =
            (beta, (self.entries.first(), self.entries.last()))
        {
            let span = last.1 - first.1;
            if span > b + 1e-12 {
                return Err(Error::TimeOutOfRange {
                    time: span,
                    beta: beta.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Multi-time Euclidean Green function over an ordered word.
///
/// Evaluated as the product
/// prod_k e^{-1/4 <f_k, B f_k>} * prod_{j < l} e^{-1/2 S(f_j, f_l; s_l - s_j)},
/// the product running over all ordered index pairs. Equal-time pairs enter
/// through S(., .; 0) = Re B(f, g) + i sigma(f, g), which reproduces the Weyl
/// merge rule exactly.
pub fn multi_green_euclid(ctx: &ThermalContext, word: &EuclideanWord) -> Result<Complex64> {
    word.validate(ctx.beta)?;
    if word.is_empty() {
        return Ok(Complex64::ONE);
    }
    let spectral: Vec<SpectralVector> = word
        .entries
        .iter()
        .map(|(f, _)| ctx.spectral(f))
        .collect::<Result<_>>()?;

    let mut exponent = Complex64::ZERO;
    for sf in &spectral {
        exponent -= 0.25 * b_form_spectral(ctx, sf, sf).re;
    }
    for j in 0..spectral.len() {
        for l in (j + 1)..spectral.len() {
            let gap = word.entries[l].1 - word.entries[j].1;
            exponent -= 0.5 * s_kernel_spectral(ctx, &spectral[j], &spectral[l], gap);
        }
    }
    Ok(exponent.exp())
}

/// Merge two adjacent equal-time letters by the Weyl relation
/// W_f W_g = e^{-i sigma(f, g)/2} W_{f+g}; returns the phase and merged word.
/// This is the independent route against which the tie handling inside
/// `multi_green_euclid` is tested.
pub fn weyl_merge(
    ctx: &ThermalContext,
    word: &EuclideanWord,
    i: usize,
) -> Result<(Complex64, EuclideanWord)> {
    let (f, sf) = &word.entries[i];
    let (g, sg) = &word.entries[i + 1];
    debug_assert!((sf - sg).abs() < 1e-14, "merge requires equal times");
    let sigma = crate::spectral::symplectic(&ctx.model, f, g)?;
    let phase = Complex64::from_polar(1.0, -0.5 * sigma);
    let mut entries = word.entries.clone();
    let merged = (f.add(g), *sf);
    entries.splice(i..=i + 1, [merged]);
    Ok((phase, EuclideanWord::new(entries)))
}

/// Reconstruct the generator from a thermal covariance matrix:
/// h = -(1/beta) log((B - 1)(B + 1)^{-1}) through the eigen calculus.
pub fn recover_generator(b_matrix: &DMatrix<f64>, beta: f64) -> Result<MatrixModel> {
    let dim = b_matrix.nrows();
    if b_matrix.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: b_matrix.ncols(),
        });
    }
    let mut max_asym = 0.0f64;
    for i in 0..dim {
        for j in (i + 1)..dim {
            max_asym = max_asym.max((b_matrix[(i, j)] - b_matrix[(j, i)]).abs());
        }
    }
    let scale = b_matrix.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1.0);
    if max_asym > 1e-12 * scale {
        return Err(Error::NonSymmetric {
            max_asym,
            tol: 1e-12,
        });
    }
    let eig = SymmetricEigen::new(0.5 * (b_matrix + b_matrix.transpose()));
    let mut min_mu = f64::INFINITY;
    for &mu in eig.eigenvalues.iter() {
        min_mu = min_mu.min(mu);
    }
    if min_mu <= 1.0 + 1e-12 {
        return Err(Error::SpectrumNotAboveOne {
            min_eigenvalue: min_mu,
        });
    }
    let h_eigenvalues: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&mu| -((mu - 1.0) / (mu + 1.0)).ln() / beta)
        .collect();
    MatrixModel::from_eigensystem(h_eigenvalues, eig.eigenvectors)
}

/// The covariance operator as a dense matrix (matrix-kind models).
pub fn thermal_b_matrix(ctx: &ThermalContext) -> Result<DMatrix<f64>> {
    let m = match &ctx.model {
        GeneratorModel::Matrix(m) => m,
        GeneratorModel::Quadrature(_) => return Err(Error::QuadratureModelUnsupported),
    };
    let diag: Vec<f64> = m.eigenvalues().iter().map(|&l| ctx.b_op(l)).collect();
    let d = DMatrix::from_diagonal(&DVector::from_vec(diag));
    Ok(m.eigenvectors() * d * m.eigenvectors().transpose())
}
