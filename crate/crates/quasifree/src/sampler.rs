//! Monte Carlo sampling of the periodic thermal process by spectral synthesis.
//!
//! Per eigenmode i and Fourier index n the mode amplitudes are independent
//! centered Gaussians with
//!
//!   Var(a_{i,0}) = 1/2 c_0(lambda_i) / (1 - e^{-beta lambda_i})
//!   Var(a_{i,n}) = Var(b_{i,n}) = c_n(lambda_i) / (1 - e^{-beta lambda_i}),  n >= 1
//!
//! so that E xi_i(s) xi_i(s') reproduces 1/2 R_beta(s' - s) exactly up to the
//! mode truncation (the normalization is pinned by the dense-grid covariance
//! test below). Randomness is counter-based: every draw is a pure function of
//! (seed, sample, mode, fourier index), so ensembles are bit-identical no
//! matter how sampling is parallelized.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::fourier_coeff;
use crate::spectral::{GeneratorModel, TestVector};
use crate::thermal::ThermalContext;

/// Deterministic 64-bit mixer (splitmix64 finalizer over chained keys).
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn key(seed: u64, sample: u64, mode: u64, index: u64) -> u64 {
    let mut k = mix64(seed);
    k = mix64(k ^ sample.wrapping_mul(0xd6e8_feb8_6659_fd93));
    k = mix64(k ^ mode.wrapping_mul(0xa076_1d64_78bd_642f));
    mix64(k ^ index)
}

fn uniform_open(bits: u64) -> f64 {
    // 53-bit mantissa, strictly inside (0, 1)
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Uniform in (0, 1) from a bare key, for deterministic suite inputs.
pub fn uniform_from_key(seed: u64, stream: u64, counter: u64) -> f64 {
    uniform_open(key(seed, stream, counter, 0))
}

/// Two independent standard normals from the counter (Box-Muller).
pub fn normal_pair(seed: u64, sample: u64, mode: u64, index: u64) -> (f64, f64) {
    let u1 = uniform_open(key(seed, sample, mode, 2 * index));
    let u2 = uniform_open(key(seed, sample, mode, 2 * index + 1));
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Sampled trajectories of coordinate processes on an equally spaced circle
/// grid, with full sampler provenance.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub beta: f64,
    /// Equally spaced times m beta / M, m = 0..M-1.
    pub grid: Vec<f64>,
    pub n_samples: usize,
    pub n_modes: usize,
    pub seed: u64,
    pub n_coords: usize,
    /// Flat [sample][grid point][coordinate] layout.
    values: Vec<f64>,
}

impl PathEnsemble {
    pub fn value(&self, sample: usize, grid_point: usize, coord: usize) -> f64 {
        self.values[(sample * self.grid.len() + grid_point) * self.n_coords + coord]
    }

    pub fn is_empty(&self) -> bool {
        self.n_samples == 0
    }

    /// Sample mean and standard error of a coordinate at one grid point.
    pub fn coordinate_mean(&self, grid_point: usize, coord: usize) -> Result<(f64, f64)> {
        if self.n_samples == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let n = self.n_samples as f64;
        let mut mean = 0.0;
        for s in 0..self.n_samples {
            mean += self.value(s, grid_point, coord);
        }
        mean /= n;
        let mut var = 0.0;
        for s in 0..self.n_samples {
            var += (self.value(s, grid_point, coord) - mean).powi(2);
        }
        let se = if self.n_samples > 1 {
            (var / (n * (n - 1.0))).sqrt()
        } else {
            f64::INFINITY
        };
        Ok((mean, se))
    }
}

/// Draw `n_samples` trajectories of the coordinate processes <xi(s), f_j> on
/// an M-point grid. Matrix-kind models with finite beta only; identical
/// arguments give bit-identical ensembles.
pub fn sample_paths(
    ctx: &ThermalContext,
    grid_points: usize,
    coords: &[TestVector],
    n_samples: usize,
    n_modes: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    let beta = ctx.beta.value()?;
    let matrix = match &ctx.model {
        GeneratorModel::Matrix(m) => m,
        GeneratorModel::Quadrature(_) => return Err(Error::QuadratureModelUnsupported),
    };
    if ctx.is_corrupted() {
        return Err(Error::ModelBuild(
            "sampling a corrupted fixture is meaningless".into(),
        ));
    }
    let mut coord_coeffs = Vec::with_capacity(coords.len());
    for f in coords {
        if !f.is_real() {
            return Err(Error::NonRealVector {
                max_imag: f.max_imag(),
            });
        }
        let sv = ctx.spectral(f)?;
        coord_coeffs.push(sv.coeffs.iter().map(|c| c.re).collect::<Vec<f64>>());
    }

    let dim = matrix.dim();
    // Modes that no coordinate touches are never synthesized.
    let active: Vec<usize> = (0..dim)
        .filter(|&i| coord_coeffs.iter().any(|c| c[i].abs() > 1e-300))
        .collect();

    // Mode standard deviations, [active mode][fourier index].
    let mut sd = vec![vec![0.0; n_modes + 1]; active.len()];
    for (row, &i) in active.iter().enumerate() {
        let lambda = matrix.eigenvalues()[i];
        let denom = -(-beta * lambda).exp_m1();
        sd[row][0] = (0.5 * fourier_coeff(0, lambda, beta) / denom).sqrt();
        for (n, slot) in sd[row].iter_mut().enumerate().skip(1) {
            *slot = (fourier_coeff(n as i64, lambda, beta) / denom).sqrt();
        }
    }

    // cos/sin tables over the equally spaced grid: angle 2 pi n m / M.
    let m_points = grid_points;
    let mut cos_table = vec![0.0; (n_modes + 1) * m_points];
    let mut sin_table = vec![0.0; (n_modes + 1) * m_points];
    for n in 0..=n_modes {
        for m in 0..m_points {
            let angle = 2.0 * std::f64::consts::PI * (n * m % m_points.max(1)) as f64
                / m_points.max(1) as f64;
            cos_table[n * m_points + m] = angle.cos();
            sin_table[n * m_points + m] = angle.sin();
        }
    }

    let n_coords = coords.len();
    let values: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .flat_map_iter(|sample| {
            let mut mode_values = vec![0.0; m_points];
            let mut out = vec![0.0; m_points * n_coords];
            for (row, &i) in active.iter().enumerate() {
                mode_values.iter_mut().for_each(|v| *v = 0.0);
                for (n, &sigma) in sd[row].iter().enumerate() {
                    let (z1, z2) = normal_pair(seed, sample as u64, i as u64, n as u64);
                    let a = sigma * z1;
                    if n == 0 {
                        for v in mode_values.iter_mut() {
                            *v += a;
                        }
                    } else {
                        let b = sigma * z2;
                        let base = n * m_points;
                        for (m, v) in mode_values.iter_mut().enumerate() {
                            *v += a * cos_table[base + m] + b * sin_table[base + m];
                        }
                    }
                }
                for (j, coeffs) in coord_coeffs.iter().enumerate() {
                    let w = coeffs[i];
                    if w.abs() > 1e-300 {
                        for m in 0..m_points {
                            out[m * n_coords + j] += w * mode_values[m];
                        }
                    }
                }
            }
            out
        })
        .collect();

    let grid = (0..m_points)
        .map(|m| beta * m as f64 / m_points.max(1) as f64)
        .collect();
    Ok(PathEnsemble {
        beta,
        grid,
        n_samples,
        n_modes,
        seed,
        n_coords,
        values,
    })
}

/// Sample covariance of coordinates j and k at a circle lag (in grid steps),
/// averaged over base points, with its jackknife standard error.
pub fn empirical_covariance(
    ensemble: &PathEnsemble,
    j: usize,
    k: usize,
    lag: usize,
) -> Result<(f64, f64)> {
    if ensemble.n_samples == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let m_points = ensemble.grid.len();
    let n = ensemble.n_samples;
    let mut per_sample = Vec::with_capacity(n);
    for s in 0..n {
        let mut acc = 0.0;
        for m in 0..m_points {
            acc += ensemble.value(s, m, j) * ensemble.value(s, (m + lag) % m_points, k);
        }
        per_sample.push(acc / m_points as f64);
    }
    let mean = per_sample.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        let var: f64 = per_sample.iter().map(|t| (t - mean).powi(2)).sum::<f64>();
        (var / (n as f64 * (n as f64 - 1.0))).sqrt()
    } else {
        f64::INFINITY
    };
    Ok((mean, se))
}

/// Sample second moment of the increment of coordinate j across `lag` grid
/// steps, with standard error. Its expectation is S(f,f;0) - S(f,f;h).
pub fn increment_second_moment(
    ensemble: &PathEnsemble,
    j: usize,
    lag: usize,
) -> Result<(f64, f64)> {
    if ensemble.n_samples == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let m_points = ensemble.grid.len();
    let n = ensemble.n_samples;
    let mut per_sample = Vec::with_capacity(n);
    for s in 0..n {
        let mut acc = 0.0;
        for m in 0..m_points {
            let d = ensemble.value(s, (m + lag) % m_points, j) - ensemble.value(s, m, j);
            acc += d * d;
        }
        per_sample.push(acc / m_points as f64);
    }
    let mean = per_sample.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        let var: f64 = per_sample.iter().map(|t| (t - mean).powi(2)).sum::<f64>();
        (var / (n as f64 * (n as f64 - 1.0))).sqrt()
    } else {
        f64::INFINITY
    };
    Ok((mean, se))
}

/// Deterministic 1/N bound on the lag-0 variance deficit from truncating the
/// Fourier synthesis at N modes, for the coordinate along `f`.
pub fn truncation_bias_bound(ctx: &ThermalContext, f: &TestVector, n_modes: usize) -> Result<f64> {
    let beta = ctx.beta.value()?;
    let sf = ctx.spectral(f)?;
    let mut acc = 0.0;
    for (k, &lambda) in ctx.model.eigenvalues().iter().enumerate() {
        let mu = ctx.model.spectral_weight(k) * sf.coeffs[k].norm_sqr();
        acc += mu * beta * lambda / (std::f64::consts::PI.powi(2) * n_modes as f64);
    }
    Ok(0.5 * acc)
}

/// Exact lag-0 variance deficit of the truncated synthesis against 1/2 B(f,f).
pub fn truncation_bias_exact(ctx: &ThermalContext, f: &TestVector, n_modes: usize) -> Result<f64> {
    let beta = ctx.beta.value()?;
    let sf = ctx.spectral(f)?;
    let mut acc = 0.0;
    for (k, &lambda) in ctx.model.eigenvalues().iter().enumerate() {
        let mu = ctx.model.spectral_weight(k) * sf.coeffs[k].norm_sqr();
        let denom = -(-beta * lambda).exp_m1();
        let truncated = crate::fourier::fourier_mode_sum(lambda, 0.0, beta, n_modes) / denom;
        acc += mu * (ctx.b_op(lambda) - truncated);
    }
    Ok(0.5 * acc)
}

/// Write the ensemble as CSV with header `sample,s,coord,value`.
pub fn write_ensemble_csv<W: std::io::Write>(
    ensemble: &PathEnsemble,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "sample,s,coord,value")?;
    for s in 0..ensemble.n_samples {
        for (m, &time) in ensemble.grid.iter().enumerate() {
            for j in 0..ensemble.n_coords {
                writeln!(
                    out,
                    "{s},{:.16e},{j},{:.16e}",
                    time,
                    ensemble.value(s, m, j)
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::MatrixModel;
    use crate::thermal::Beta;
    use nalgebra::DMatrix;

    fn scalar_ctx(lambda: f64, beta: f64) -> ThermalContext {
        let m = MatrixModel::eigendecompose(DMatrix::from_row_slice(1, 1, &[lambda])).unwrap();
        ThermalContext::new(GeneratorModel::Matrix(m), Beta::Finite(beta))
    }

    #[test]
    fn normals_have_unit_moments() {
        let n = 200_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            let (a, b) = normal_pair(7, i, 0, 0);
            sum += a + b;
            sumsq += a * a + b * b;
        }
        let mean = sum / (2 * n) as f64;
        let var = sumsq / (2 * n) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn empty_ensemble_is_valid() {
        let ctx = scalar_ctx(1.0, 1.0);
        let f = TestVector::from_real(&[1.0]);
        let ens = sample_paths(&ctx, 8, &[f], 0, 16, 1).unwrap();
        assert!(ens.is_empty());
        assert!(matches!(
            empirical_covariance(&ens, 0, 0, 0),
            Err(Error::EmptyEnsemble)
        ));
    }

    #[test]
    fn ensembles_do_not_depend_on_thread_count() {
        let ctx = scalar_ctx(1.0, 1.5);
        let f = TestVector::from_real(&[1.0]);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_paths(&ctx, 8, std::slice::from_ref(&f), 64, 32, 9).unwrap())
        };
        assert_eq!(run(1).values, run(4).values);
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        let ctx = scalar_ctx(1.0, 2.0);
        let f = TestVector::from_real(&[1.0]);
        let a = sample_paths(&ctx, 16, std::slice::from_ref(&f), 50, 64, 42).unwrap();
        let b = sample_paths(&ctx, 16, std::slice::from_ref(&f), 50, 64, 42).unwrap();
        assert_eq!(a.values, b.values);
        let c = sample_paths(&ctx, 16, &[f], 50, 64, 43).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn synthesis_normalization_reproduces_covariance_on_dense_grid() {
        // The mode-variance bookkeeping is pinned here once: with the gamma
        // weights above, sum_n Var_n cos(2 pi n d / beta) must equal
        // 1/2 R_beta(d) on a dense grid. At the half period the truncation
        // tail is the alternating remainder ~ c_{N+1}/2, so N = 3 * 10^4
        // brings it under 1e-10; at N = 10^4 the rigorous tail bound governs.
        let beta = 2.0 * 3.0f64.ln();
        let lambda = 1.0;
        let denom = -(-beta * lambda).exp_m1();
        let partial = |n_modes: usize, d: f64| {
            let mut acc = 0.5 * fourier_coeff(0, lambda, beta) / denom;
            for n in 1..=n_modes {
                let var = fourier_coeff(n as i64, lambda, beta) / denom;
                acc += var * (2.0 * std::f64::consts::PI * n as f64 * d / beta).cos();
            }
            acc
        };
        for m in 0..40 {
            let d = beta * m as f64 / 40.0;
            let exact = 0.5 * crate::process::r_kernel(Beta::Finite(beta), lambda, d);
            let err = (partial(10_000, d) - exact).abs();
            let bound = 0.5 * crate::fourier::fourier_tail_bound(lambda, beta, 10_000) / denom;
            assert!(err <= bound, "d = {d}: err {err} above bound {bound}");
        }
        let d = beta / 2.0;
        let exact = 0.5 * crate::process::r_kernel(Beta::Finite(beta), lambda, d);
        let err = (partial(30_000, d) - exact).abs();
        assert!(err < 1e-10, "half-period error {err}");
    }

    #[test]
    fn sampled_variance_matches_exact_covariance() {
        let beta = 2.0 * 3.0f64.ln();
        let ctx = scalar_ctx(1.0, beta);
        let f = TestVector::from_real(&[1.0]);
        let ens = sample_paths(&ctx, 32, std::slice::from_ref(&f), 20_000, 256, 2024).unwrap();
        let (est, se) = empirical_covariance(&ens, 0, 0, 0).unwrap();
        let exact = 0.5 * crate::thermal::b_form_diag(&ctx, &f).unwrap();
        assert!(
            (est - exact).abs() < 4.0 * se + 1e-3,
            "est {est} +- {se}, exact {exact}"
        );
        // mean vanishes
        let (mean, mse) = ens.coordinate_mean(0, 0).unwrap();
        assert!(mean.abs() < 4.0 * mse, "mean {mean} +- {mse}");
    }

    #[test]
    fn truncation_bound_follows_one_over_n() {
        let ctx = scalar_ctx(1.0, 1.0);
        let f = TestVector::from_real(&[1.0]);
        let b512 = truncation_bias_bound(&ctx, &f, 512).unwrap();
        let b256 = truncation_bias_bound(&ctx, &f, 256).unwrap();
        assert!((b256 / b512 - 2.0).abs() < 1e-12);
        let exact = truncation_bias_exact(&ctx, &f, 512).unwrap();
        assert!(exact >= 0.0 && exact <= b512, "exact {exact}, bound {b512}");
    }

    #[test]
    fn rejects_quadrature_and_complex_inputs() {
        let ctx = scalar_ctx(1.0, 1.0);
        let fi = TestVector::new(vec![num_complex::Complex64::I]);
        assert!(matches!(
            sample_paths(&ctx, 8, &[fi], 1, 4, 0),
            Err(Error::NonRealVector { .. })
        ));
    }

    #[test]
    fn estimator_is_circle_symmetric_and_modes_are_independent() {
        use crate::models::{build_crystal, CrystalCoupling};
        let ctx = build_crystal(2, 1, CrystalCoupling::Decoupled, Beta::Finite(1.0)).unwrap();
        let coords = [TestVector::basis(2, 0), TestVector::basis(2, 1)];
        let m_points = 16;
        let ens = sample_paths(&ctx, m_points, &coords, 5_000, 64, 77).unwrap();
        // reindexing the circle sum makes lag and M - lag coincide exactly
        for lag in [1usize, 3, 7] {
            let (a, _) = empirical_covariance(&ens, 0, 0, lag).unwrap();
            let (b, _) = empirical_covariance(&ens, 0, 0, m_points - lag).unwrap();
            assert!((a - b).abs() < 1e-13, "lag {lag}: {a} vs {b}");
        }
        // coordinates supported on orthogonal eigenmodes decorrelate
        let (cross, se) = empirical_covariance(&ens, 0, 1, 0).unwrap();
        assert!(cross.abs() < 4.0 * se, "cross covariance {cross} +- {se}");
    }

    #[test]
    fn csv_export_shape() {
        let ctx = scalar_ctx(1.0, 1.0);
        let f = TestVector::from_real(&[1.0]);
        let ens = sample_paths(&ctx, 4, &[f], 2, 8, 5).unwrap();
        let mut buf = Vec::new();
        write_ensemble_csv(&ens, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "sample,s,coord,value");
        assert_eq!(lines.len(), 1 + 2 * 4);
    }
}
