//! Fourier-mode representation of the periodic Euclidean kernel and the
//! independent integral-kernel route to S.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::spectral::TestVector;
use crate::thermal::{f_kernel_spectral, ThermalContext};

/// Fourier coefficient of the periodic kernel e^{-s p} + e^{-(beta - s) p}:
/// c_n(p) = 2 beta p (1 - e^{-beta p}) / ((p beta)^2 + (2 pi n)^2).
pub fn fourier_coeff(n: i64, p: f64, beta: f64) -> f64 {
    let pb = p * beta;
    let wn = 2.0 * std::f64::consts::PI * n as f64;
    2.0 * beta * p * (-(-beta * p).exp_m1()) / (pb * pb + wn * wn)
}

/// Truncated series sum_{|n| <= N} c_n(p) e^{i 2 pi n s / beta}; real by the
/// n <-> -n symmetry. Converges to e^{-s p} + e^{-(beta - s) p}.
pub fn fourier_mode_sum(p: f64, s: f64, beta: f64, n_modes: usize) -> f64 {
    let omega = 2.0 * std::f64::consts::PI / beta;
    let mut acc = fourier_coeff(0, p, beta);
    for n in 1..=n_modes {
        acc += 2.0 * fourier_coeff(n as i64, p, beta) * (omega * n as f64 * s).cos();
    }
    acc
}

/// Truncated Fourier series for S(f, f; s) of a real vector; the N -> inf
/// limit is `s_kernel(ctx, f, f, s)`.
pub fn fourier_series_s(ctx: &ThermalContext, f: &TestVector, s: f64, n_modes: usize) -> Result<f64> {
    let beta = ctx.beta.value()?;
    if !f.is_real() {
        return Err(Error::NonRealVector {
            max_imag: f.max_imag(),
        });
    }
    let sf = ctx.spectral(f)?;
    let mut acc = 0.0;
    for (k, (&lambda, c)) in ctx.model.eigenvalues().iter().zip(&sf.coeffs).enumerate() {
        let mu = ctx.model.spectral_weight(k) * c.norm_sqr();
        acc += mu * fourier_mode_sum(lambda, s, beta, n_modes) / (-(-beta * lambda).exp_m1());
    }
    if ctx.condensate != 0.0 {
        acc += ctx.condensate * sf.zero_moment.norm_sqr();
    }
    Ok(acc)
}

/// Upper bound on the two-sided Fourier tail sum_{|n| > N} c_n(p), from
/// c_n <= 2 beta p (1 - e^{-beta p}) / (2 pi n)^2 and sum_{n > N} n^{-2} <= 1/N.
pub fn fourier_tail_bound(p: f64, beta: f64, n_modes: usize) -> f64 {
    beta * p * (-(-beta * p).exp_m1()) / (std::f64::consts::PI.powi(2) * n_modes as f64)
}

/// The analytic-continuation kernel of the integral representation:
/// P(rho, s) = sin(pi s / beta) / (2 beta (cosh(pi rho / beta) - cos(pi s / beta))).
pub fn kernel_p(rho: f64, s: f64, beta: f64) -> Result<f64> {
    if s <= 0.0 || s >= beta {
        return Err(Error::EndpointSingularity { time: s });
    }
    let theta = std::f64::consts::PI * s / beta;
    let u = std::f64::consts::PI * rho / beta;
    Ok(theta.sin() / (2.0 * beta * (u.cosh() - theta.cos())))
}

/// S(f, g; s) through the integral over real-time kernels,
/// int [P(rho, s) F(f, g; rho) + P(rho, beta - s) F(g, f; -rho)] d rho,
/// evaluated by Gauss-Legendre panels over a truncated rho range. Agreement
/// with the spectral `s_kernel` is the analytic-continuation consistency
/// check; disagreement beyond quadrature error flags a wrong kernel.
pub fn quadrature_s(
    ctx: &ThermalContext,
    f: &TestVector,
    g: &TestVector,
    s: f64,
) -> Result<Complex64> {
    let beta = ctx.beta.value()?;
    if s <= 0.0 || s >= beta {
        return Err(Error::EndpointSingularity { time: s });
    }
    let sf = ctx.spectral(f)?;
    let sg = ctx.spectral(g)?;

    // P decays like e^{-pi |rho| / beta}; truncate where the kernel is below
    // 1e-18 of its peak so the quadrature, not the cutoff, sets the error.
    let r_max = beta / std::f64::consts::PI * 48.0;
    // Panels short enough to resolve both the kernel scale (beta / pi) and
    // the fastest oscillation e^{i rho lambda_max} of F.
    let lambda_max = ctx.model.max_eigenvalue().max(1e-6);
    let width = (beta / std::f64::consts::PI).min(24.0 / lambda_max).min(r_max);
    let n_panels = (2.0 * r_max / width).ceil() as usize;
    let rule = GaussLegendre::new(24);

    let mut acc = Complex64::ZERO;
    for k in 0..n_panels {
        let a = -r_max + 2.0 * r_max * k as f64 / n_panels as f64;
        let b = -r_max + 2.0 * r_max * (k + 1) as f64 / n_panels as f64;
        let (nodes, weights) = rule.rescaled(a, b);
        for (&rho, &w) in nodes.iter().zip(&weights) {
            let p_fwd = kernel_p(rho, s, beta)?;
            let p_bwd = kernel_p(rho, beta - s, beta)?;
            let val = p_fwd * f_kernel_spectral(ctx, &sf, &sg, rho)
                + p_bwd * f_kernel_spectral(ctx, &sg, &sf, -rho);
            acc += w * val;
        }
    }
    Ok(acc)
}

/// max over the grid of |S(f,g;s) - S(g,f;beta-s)|, plus the real-pair
/// symmetry |S(f,g;s) - S(g,f;s)| when both vectors are real.
pub fn kms_reflection_check(
    ctx: &ThermalContext,
    f: &TestVector,
    g: &TestVector,
    s_grid: &[f64],
) -> Result<f64> {
    let beta = ctx.beta.value()?;
    let real_pair = f.is_real() && g.is_real();
    let mut max_residual = 0.0f64;
    for &s in s_grid {
        let fwd = crate::thermal::s_kernel(ctx, f, g, s)?;
        let bwd = crate::thermal::s_kernel(ctx, g, f, beta - s)?;
        max_residual = max_residual.max((fwd - bwd).norm());
        if real_pair {
            let swapped = crate::thermal::s_kernel(ctx, g, f, s)?;
            max_residual = max_residual.max((fwd - swapped).norm());
        }
    }
    Ok(max_residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{GeneratorModel, MatrixModel};
    use crate::thermal::{s_kernel, Beta};
    use nalgebra::DMatrix;

    fn scalar_ctx(lambda: f64, beta: f64) -> ThermalContext {
        let m = MatrixModel::eigendecompose(DMatrix::from_row_slice(1, 1, &[lambda])).unwrap();
        ThermalContext::new(GeneratorModel::Matrix(m), Beta::Finite(beta))
    }

    #[test]
    fn coefficient_values_and_symmetry() {
        // c_0(1) at beta = 1: 2 (1 - e^{-1})
        let expect = 2.0 * (1.0 - (-1.0f64).exp());
        assert!((fourier_coeff(0, 1.0, 1.0) - expect).abs() < 1e-14);
        assert!((expect - 1.264_241_117_657_115).abs() < 1e-12);

        for (n, p) in [(1i64, 0.3), (7, 2.0), (100, 5.5)] {
            assert_eq!(fourier_coeff(n, p, 1.3), fourier_coeff(-n, p, 1.3));
            assert!(fourier_coeff(n, p, 1.3) >= 0.0);
        }
    }

    #[test]
    fn mode_sum_converges_to_periodic_kernel() {
        let beta = 1.0;
        for p in [0.5, 1.0, 5.0] {
            // value at s = 0 is 1 + e^{-beta p}
            let at0 = fourier_mode_sum(p, 0.0, beta, 20_000);
            let expect = 1.0 + (-beta * p).exp();
            assert!((at0 - expect).abs() < 2.0 * fourier_tail_bound(p, beta, 20_000));

            for s in [0.1, 0.4, 0.9] {
                let got = fourier_mode_sum(p, s, beta, 10_000);
                let expect = (-s * p).exp() + (-(beta - s) * p).exp();
                assert!(
                    (got - expect).abs() <= fourier_tail_bound(p, beta, 10_000),
                    "p = {p}, s = {s}: err {}",
                    (got - expect).abs()
                );
            }
        }
    }

    #[test]
    fn mode_sum_truncation_is_one_sided() {
        // at s = 0 every term is positive, so the N = 0 term undershoots
        let full = fourier_mode_sum(1.0, 0.0, 1.0, 4000);
        let first = fourier_mode_sum(1.0, 0.0, 1.0, 0);
        assert!(first < full);
    }

    #[test]
    fn series_matches_s_kernel() {
        let ctx = scalar_ctx(1.0, 1.0);
        let f = TestVector::from_real(&[1.0]);
        for s in [0.0, 0.25, 0.6] {
            let series = fourier_series_s(&ctx, &f, s, 10_000).unwrap();
            let exact = s_kernel(&ctx, &f, &f, s).unwrap().re;
            let tol = fourier_tail_bound(1.0, 1.0, 10_000) / (1.0 - (-1.0f64).exp());
            assert!((series - exact).abs() <= tol, "s = {s}: err {}", (series - exact).abs());
        }
        let fi = f.scaled(Complex64::I);
        assert!(fourier_series_s(&ctx, &fi, 0.1, 10).is_err());
    }

    #[test]
    fn kernel_p_values() {
        let beta = 2.0;
        // at s = beta/2 the kernel is 1 / (2 beta cosh(pi rho / beta))
        for rho in [0.0, 0.7, -1.9] {
            let got = kernel_p(rho, beta / 2.0, beta).unwrap();
            let expect = 1.0 / (2.0 * beta * (std::f64::consts::PI * rho / beta).cosh());
            assert!((got - expect).abs() < 1e-15);
        }
        // positivity inside the open interval
        for s in [0.1, 1.0, 1.9] {
            assert!(kernel_p(0.3, s, beta).unwrap() > 0.0);
        }
        assert!(kernel_p(0.0, 0.0, beta).is_err());
        assert!(kernel_p(0.0, beta, beta).is_err());
    }

    #[test]
    fn kernel_p_total_mass() {
        // int P(rho, s) d rho = 1 - s / beta; quadrature oracle for the kernel
        let beta = 1.5;
        let rule = GaussLegendre::new(64);
        for s in [0.2, 0.75, 1.3] {
            let mut total = 0.0;
            let r = 40.0 * beta;
            let panels = 200;
            for k in 0..panels {
                let a = -r + 2.0 * r * k as f64 / panels as f64;
                let b = -r + 2.0 * r * (k + 1) as f64 / panels as f64;
                total += rule.integrate(a, b, |rho| kernel_p(rho, s, beta).unwrap());
            }
            assert!((total - (1.0 - s / beta)).abs() < 1e-10, "s = {s}: mass {total}");
        }
    }

    #[test]
    fn quadrature_route_agrees_with_spectral_kernel() {
        let ctx = scalar_ctx(1.0, 2.0);
        let f = TestVector::from_real(&[1.0]);
        for s in [0.2, 1.0, 1.8] {
            let via_integral = quadrature_s(&ctx, &f, &f, s).unwrap();
            let exact = s_kernel(&ctx, &f, &f, s).unwrap();
            assert!(
                (via_integral - exact).norm() < 1e-8,
                "s = {s}: diff {}",
                (via_integral - exact).norm()
            );
        }
        assert!(quadrature_s(&ctx, &f, &f, 0.0).is_err());
        assert!(quadrature_s(&ctx, &f, &f, 2.0).is_err());
    }

    #[test]
    fn reflection_residual_is_tiny_on_scalar_models() {
        let ctx = scalar_ctx(0.9, 1.4);
        let f = TestVector::from_real(&[1.0]);
        let grid: Vec<f64> = (0..=32).map(|i| 1.4 * i as f64 / 32.0).collect();
        let r = kms_reflection_check(&ctx, &f, &f, &grid).unwrap();
        assert!(r <= 1e-12, "residual {r}");
    }
}
