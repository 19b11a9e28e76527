//! The periodic Gaussian thermal process: exact covariances, the Gaussian
//! characteristic functional, the image-sum identity, and the Markov and
//! Hoelder path-property checks.
//!
//! Everything here is exact spectral arithmetic; Monte Carlo sampling lives in
//! `sampler`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectral::{GeneratorModel, TestVector};
use crate::thermal::{s_kernel, Beta, EuclideanWord, ThermalContext};

/// Evaluation conventions for the covariance operator of a context. The
/// argument is the representative d in [0, beta] of the circle separation,
/// folded by R(d) = R(beta - d) on the way in.
#[derive(Debug, Clone, Copy)]
pub struct CovarianceSpec<'a> {
    pub ctx: &'a ThermalContext,
}

impl<'a> CovarianceSpec<'a> {
    pub fn new(ctx: &'a ThermalContext) -> Self {
        Self { ctx }
    }
}

/// Scalar covariance kernel at spectrum point `lambda`:
/// (e^{-d lambda} + e^{-(beta - d) lambda}) / (1 - e^{-beta lambda}) for a
/// finite beta, e^{-d lambda} in the ground state. `d` must be pre-folded.
pub(crate) fn r_kernel(beta: Beta, lambda: f64, d: f64) -> f64 {
    match beta {
        Beta::Finite(b) => {
            ((-d * lambda).exp() + (-(b - d) * lambda).exp()) / -(-b * lambda).exp_m1()
        }
        Beta::Infinite => (-d * lambda).exp(),
    }
}

/// Fold a time separation onto its covariance argument: the circle
/// representative (s2 - s1) mod beta for a finite beta, |s2 - s1| on the line.
pub fn fold_separation(beta: Beta, s1: f64, s2: f64) -> f64 {
    match beta {
        Beta::Finite(b) => (s2 - s1).rem_euclid(b),
        Beta::Infinite => (s2 - s1).abs(),
    }
}

/// The covariance operator R(d) as a dense matrix (matrix-kind models only).
pub fn covariance_matrix(spec: &CovarianceSpec, d: f64) -> Result<DMatrix<f64>> {
    let ctx = spec.ctx;
    let m = match &ctx.model {
        GeneratorModel::Matrix(m) => m,
        GeneratorModel::Quadrature(_) => return Err(Error::QuadratureModelUnsupported),
    };
    let d = fold_separation(ctx.beta, 0.0, d);
    let diag: Vec<f64> = m
        .eigenvalues()
        .iter()
        .map(|&l| r_kernel(ctx.beta, l, d))
        .collect();
    let dm = DMatrix::from_diagonal(&DVector::from_vec(diag));
    Ok(m.eigenvectors() * dm * m.eigenvectors().transpose())
}

fn require_real(f: &TestVector) -> Result<()> {
    if f.is_real() {
        Ok(())
    } else {
        Err(Error::NonRealVector {
            max_imag: f.max_imag(),
        })
    }
}

/// E(<xi_{s1}, f> <xi_{s2}, g>) = 1/2 <f, R(s2 - s1) g> for real vectors.
pub fn cov_pair(
    spec: &CovarianceSpec,
    f: &TestVector,
    g: &TestVector,
    s1: f64,
    s2: f64,
) -> Result<f64> {
    let ctx = spec.ctx;
    require_real(f)?;
    require_real(g)?;
    let d = fold_separation(ctx.beta, s1, s2);
    let sf = ctx.spectral(f)?;
    let sg = ctx.spectral(g)?;
    let mut acc = 0.0;
    for (k, (&lambda, (a, b))) in ctx
        .model
        .eigenvalues()
        .iter()
        .zip(sf.coeffs.iter().zip(&sg.coeffs))
        .enumerate()
    {
        acc += ctx.model.spectral_weight(k) * (a.conj() * b).re * r_kernel(ctx.beta, lambda, d);
    }
    if ctx.condensate != 0.0 {
        acc += ctx.condensate * (sf.zero_moment.conj() * sg.zero_moment).re;
    }
    Ok(0.5 * acc)
}

/// Sup-norm residual of the truncated image sum
/// sum_{|n| <= N} R_inf(d + n beta) against R_beta(d), over the spectrum.
pub fn image_sum_check(spec: &CovarianceSpec, d: f64, n_images: usize) -> Result<f64> {
    let ctx = spec.ctx;
    let beta = ctx.beta.value()?;
    let d = fold_separation(ctx.beta, 0.0, d);
    let mut residual = 0.0f64;
    for &lambda in ctx.model.eigenvalues() {
        let mut partial = 0.0;
        for n in -(n_images as i64)..=(n_images as i64) {
            partial += (-(d + n as f64 * beta).abs() * lambda).exp();
        }
        let exact = r_kernel(ctx.beta, lambda, d);
        residual = residual.max((partial - exact).abs());
    }
    Ok(residual)
}

/// Exact truncation bound for the image sum at separation `d`:
/// 2 cosh(d lambda_min) e^{-(N+1) beta lambda_min} / (1 - e^{-beta lambda_min}).
pub fn image_sum_bound(spec: &CovarianceSpec, d: f64, n_images: usize) -> Result<f64> {
    let ctx = spec.ctx;
    let beta = ctx.beta.value()?;
    let d = fold_separation(ctx.beta, 0.0, d);
    let lambda = ctx.model.min_eigenvalue();
    Ok(2.0 * (d * lambda).cosh() * (-((n_images + 1) as f64) * beta * lambda).exp()
        / -(-beta * lambda).exp_m1())
}

/// The closed-form Gaussian characteristic functional
/// E exp(i sum_k <xi_{s_k}, f_k>) = exp(-1/2 sum_{k,l} cov(f_k, f_l; s_k, s_l))
/// for a word of real vectors. Equality with `multi_green_euclid` on the same
/// word is the identity that certifies stochastic positivity.
pub fn char_functional(spec: &CovarianceSpec, word: &EuclideanWord) -> Result<f64> {
    let mut acc = 0.0;
    for (fk, sk) in &word.entries {
        for (fl, sl) in &word.entries {
            acc += cov_pair(spec, fk, fl, *sk, *sl)?;
        }
    }
    Ok((-0.5 * acc).exp())
}

/// A probe for the two-sided Markov property: the conditional covariance of
/// <xi_u, f> and <xi_v, g> given the full field values at times r and s.
#[derive(Debug, Clone)]
pub struct MarkovProbe {
    pub u: f64,
    pub v: f64,
    pub f: TestVector,
    pub g: TestVector,
}

/// Max |conditional covariance| over the probes, conditioning at times r, s.
///
/// Because every R(d) is a function of the generator, conditioning on the
/// full vector values factorizes over eigenmodes: per mode the 2x2 Schur
/// complement of the scalar circle process is formed exactly, then the probe
/// coordinates weight the modes. The condensate mode is a time-constant
/// random variable and conditions away exactly.
pub fn markov_check(
    spec: &CovarianceSpec,
    r: f64,
    s: f64,
    probes: &[MarkovProbe],
) -> Result<f64> {
    let ctx = spec.ctx;
    let mut worst = 0.0f64;
    for probe in probes {
        require_real(&probe.f)?;
        require_real(&probe.g)?;
        let sf = ctx.spectral(&probe.f)?;
        let sg = ctx.spectral(&probe.g)?;
        let mut acc = 0.0;
        for (k, &lambda) in ctx.model.eigenvalues().iter().enumerate() {
            let c = |a: f64, b: f64| 0.5 * r_kernel(ctx.beta, lambda, fold_separation(ctx.beta, a, b));
            let c00 = c(r, r);
            let crs = c(r, s);
            let det = c00 * c00 - crs * crs;
            if det.abs() <= 1e-14 * c00 * c00 {
                return Err(Error::DegenerateConditioning { det });
            }
            // inverse of [[c00, crs], [crs, c00]]
            let inv00 = c00 / det;
            let inv01 = -crs / det;
            let (cur, cus) = (c(probe.u, r), c(probe.u, s));
            let (cvr, cvs) = (c(probe.v, r), c(probe.v, s));
            let cond = c(probe.u, probe.v)
                - (cur * (inv00 * cvr + inv01 * cvs) + cus * (inv01 * cvr + inv00 * cvs));
            let weight = ctx.model.spectral_weight(k) * (sf.coeffs[k].conj() * sg.coeffs[k]).re;
            acc += weight * cond;
        }
        worst = worst.max(acc.abs());
    }
    Ok(worst)
}

/// Report of the Hoelder-continuity bound |S(h) - S(0)| <= 2 m(f) |h|.
#[derive(Debug, Clone)]
pub struct HolderReport {
    /// First spectral moment m(f) = sum_i lambda_i |f_i|^2 / (1 - e^{-beta lambda_i}).
    pub moment: f64,
    pub entries: Vec<HolderEntry>,
}

#[derive(Debug, Clone, Copy)]
pub struct HolderEntry {
    pub h: f64,
    pub increment: f64,
    pub bound: f64,
    pub slack: f64,
}

impl HolderReport {
    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.slack >= 0.0)
    }

    pub fn min_slack(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.slack)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Verify the Hoelder bound from spectral data on each step of `h_grid`.
pub fn holder_check(spec: &CovarianceSpec, f: &TestVector, h_grid: &[f64]) -> Result<HolderReport> {
    let ctx = spec.ctx;
    require_real(f)?;
    let sf = ctx.spectral(f)?;
    let mut moment = 0.0;
    for (k, &lambda) in ctx.model.eigenvalues().iter().enumerate() {
        let mu = ctx.model.spectral_weight(k) * sf.coeffs[k].norm_sqr();
        let denom = match ctx.beta {
            Beta::Finite(b) => -(-b * lambda).exp_m1(),
            Beta::Infinite => 1.0,
        };
        moment += mu * lambda / denom;
    }
    // The condensate mode adds a time-constant component: zero increment,
    // zero moment contribution.
    let s0 = s_kernel(ctx, f, f, 0.0)?.re;
    let mut entries = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let sh = s_kernel(ctx, f, f, h.abs())?.re;
        let increment = (sh - s0).abs();
        let bound = 2.0 * moment * h.abs();
        entries.push(HolderEntry {
            h,
            increment,
            bound,
            slack: bound - increment,
        });
    }
    Ok(HolderReport { moment, entries })
}
