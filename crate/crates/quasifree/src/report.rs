//! Structured verification reports and the library-level check suite.
//!
//! `run_verification_suite` drives every structural identity against a
//! context and returns one `CheckResult` per identity with the measured
//! residual, the tolerance it was held to, and a stable property tag, so a
//! failure names the violated identity.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::checks::{eg4_cyclic_check, os_gram_check, weyl_os_check};
use crate::error::{Error, Result};
use crate::fourier::{fourier_series_s, fourier_tail_bound, kms_reflection_check, quadrature_s};
use crate::models::gaussian_profile;
use crate::process::{
    char_functional, cov_pair, image_sum_bound, image_sum_check, holder_check, markov_check,
    CovarianceSpec, MarkovProbe,
};
use crate::sampler::{empirical_covariance, sample_paths};
use crate::spectral::{GeneratorModel, TestVector};
use crate::thermal::{
    b_form_diag, multi_green_euclid, s_kernel, Beta, EuclideanWord, ThermalContext,
};

/// Serialize a float as a JSON number with 17 significant digits
/// (round-trip exact for doubles); non-finite values become strings.
fn ser_f64_17<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        let raw = serde_json::value::RawValue::from_string(format!("{v:.16e}"))
            .map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    } else {
        s.serialize_str(&v.to_string())
    }
}

/// Outcome of a single structural check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// Stable tag of the verified identity.
    pub property: String,
    pub model_id: String,
    pub beta: String,
    #[serde(serialize_with = "ser_f64_17")]
    pub residual: f64,
    #[serde(serialize_with = "ser_f64_17")]
    pub tolerance: f64,
    pub pass: bool,
}

/// The assembled pass/fail record of an invariant-suite run.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub tool_version: String,
    pub manifest_digest: String,
    pub model: String,
    pub model_id: String,
    pub beta: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Named tolerances with per-check defaults; unknown names are rejected so a
/// typo in an override cannot silently disable a check.
#[derive(Debug, Clone)]
pub struct Tolerances {
    values: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        let mut values = BTreeMap::new();
        for (name, value) in [
            ("kms_reflection", 1e-10),
            ("os_positivity", 1e-10),
            ("weyl_positivity", 1e-10),
            ("shift_invariance", 1e-12),
            ("merge_consistency", 1e-12),
            ("boundedness", 1e-12),
            ("cyclic_kms", 1e-10),
            ("central_identity", 1e-10),
            ("kernel_integral", 1e-6),
            ("roundtrip", 1e-10),
            ("markov", 1e-8),
            ("holder", 1e-12),
            ("covariance_psd", 1e-10),
            ("ground_limit", 1e-12),
            ("sampler_sigma", 4.0),
        ] {
            values.insert(name.to_string(), value);
        }
        Self { values }
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        *self
            .values
            .get(name)
            .unwrap_or_else(|| panic!("unknown tolerance {name}"))
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match self.values.get_mut(name) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(Error::ConfigParse(format!(
                "unknown tolerance {name:?}; known: {}",
                self.values
                    .keys()
                    .map(String::as_str)
                    .collect::<Vec<_>>()
                    .join(", ")
            ))),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Suite knobs beyond tolerances.
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Run the Monte Carlo sampler-fidelity check (matrix models only).
    pub with_sampler: bool,
    pub sampler_samples: usize,
    pub sampler_modes: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            with_sampler: true,
            sampler_samples: 20_000,
            sampler_modes: 256,
        }
    }
}

/// Deterministic stream of suite inputs, keyed off the counter RNG so suite
/// runs are reproducible bit for bit.
pub struct SuiteRng {
    seed: u64,
    stream: u64,
    counter: u64,
}

impl SuiteRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        // high bit keeps suite streams disjoint from sampler sample indices
        Self {
            seed,
            stream: stream | (1 << 63),
            counter: 0,
        }
    }

    pub fn normal(&mut self) -> f64 {
        self.counter += 1;
        crate::sampler::normal_pair(self.seed, self.stream, self.counter, 0).0
    }

    /// Uniform in (0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.counter += 1;
        crate::sampler::uniform_from_key(self.seed, self.stream, self.counter)
    }

    pub fn uniform_in(&mut self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.uniform()
    }

    pub fn index(&mut self, n: usize) -> usize {
        (self.uniform() * n as f64) as usize % n.max(1)
    }
}

/// A random vector in the fixed-point space of the conjugation: plain normal
/// entries for matrix models, a normal-weighted Gaussian-profile combination
/// for quadrature models.
pub fn random_real_vector(ctx: &ThermalContext, rng: &mut SuiteRng) -> TestVector {
    match &ctx.model {
        GeneratorModel::Matrix(m) => {
            TestVector::from_real(&(0..m.dim()).map(|_| rng.normal()).collect::<Vec<_>>())
        }
        GeneratorModel::Quadrature(_) => {
            let widths = [0.6, 0.9, 1.4, 2.0];
            let mut acc = TestVector::zeros(ctx.model.dim());
            for &a in &widths {
                let profile = gaussian_profile(&ctx.model, a, rng.normal())
                    .expect("profile on quadrature model");
                acc = acc.add(&profile);
            }
            acc
        }
    }
}

/// A random complex vector (real vector rotated by mode-wise phases).
pub fn random_complex_vector(ctx: &ThermalContext, rng: &mut SuiteRng) -> TestVector {
    let base = random_real_vector(ctx, rng);
    let phases: Vec<num_complex::Complex64> = (0..base.len())
        .map(|_| num_complex::Complex64::from_polar(1.0, rng.uniform_in(0.0, std::f64::consts::TAU)))
        .collect();
    let mut v = base;
    for (c, p) in v.components.iter_mut().zip(phases) {
        *c *= p;
    }
    v
}

/// Sorted random times in [lo, hi].
fn random_times(rng: &mut SuiteRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut t: Vec<f64> = (0..n).map(|_| rng.uniform_in(lo, hi)).collect();
    t.sort_by(f64::total_cmp);
    t
}

fn random_real_word(
    ctx: &ThermalContext,
    rng: &mut SuiteRng,
    max_letters: usize,
    lo: f64,
    hi: f64,
) -> EuclideanWord {
    let n = 1 + rng.index(max_letters);
    let times = random_times(rng, n, lo, hi);
    EuclideanWord::new(
        times
            .into_iter()
            .map(|s| (random_real_vector(ctx, rng), s))
            .collect(),
    )
}

struct SuiteBuilder<'a> {
    ctx: &'a ThermalContext,
    model_id: String,
    beta_label: String,
    tol: &'a Tolerances,
    checks: Vec<CheckResult>,
}

impl<'a> SuiteBuilder<'a> {
    fn push(&mut self, name: &str, property: &str, residual: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            property: property.to_string(),
            model_id: self.model_id.clone(),
            beta: self.beta_label.clone(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        });
    }
}

/// Run the full invariant suite against a context.
pub fn run_verification_suite(
    ctx: &ThermalContext,
    model_name: &str,
    model_id: &str,
    tol: &Tolerances,
    options: &SuiteOptions,
) -> Result<VerificationReport> {
    let beta = ctx.beta.value()?;
    let mut b = SuiteBuilder {
        ctx,
        model_id: model_id.to_string(),
        beta_label: ctx.beta.to_string(),
        tol,
        checks: Vec::new(),
    };
    let seed = options.seed;

    check_kms_reflection(&mut b, seed)?;
    check_os_grams(&mut b, seed)?;
    check_weyl_os(&mut b, seed)?;
    check_shift_invariance(&mut b, seed)?;
    check_merge_consistency(&mut b, seed)?;
    check_boundedness(&mut b, seed)?;
    check_cyclic(&mut b, seed)?;
    check_central_identity(&mut b, seed)?;
    check_kernel_integral(&mut b, seed)?;
    check_fourier_series(&mut b, seed)?;
    check_markov(&mut b, seed)?;
    check_holder(&mut b, seed)?;
    check_covariance_psd(&mut b, seed)?;
    check_image_sum(&mut b)?;
    check_ground_limit(&mut b, seed)?;
    if ctx.model.is_matrix() {
        check_roundtrip(&mut b, beta)?;
        if options.with_sampler && !ctx.is_corrupted() {
            check_sampler(&mut b, options)?;
        }
    }

    let all_pass = b.checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        manifest_digest: String::new(),
        model: model_name.to_string(),
        model_id: model_id.to_string(),
        beta: ctx.beta.to_string(),
        seed,
        checks: b.checks,
        all_pass,
    })
}

fn check_kms_reflection(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let beta = b.ctx.beta.value()?;
    let mut rng = SuiteRng::new(seed, 1);
    let grid: Vec<f64> = (0..=64).map(|i| beta * i as f64 / 64.0).collect();
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let f = random_real_vector(b.ctx, &mut rng);
        let g = random_real_vector(b.ctx, &mut rng);
        worst = worst.max(kms_reflection_check(b.ctx, &f, &g, &grid)?);
    }
    b.push(
        "kms-reflection",
        "euclidean-reflection-symmetry",
        worst,
        b.tol.get("kms_reflection"),
    );
    Ok(())
}

fn check_os_grams(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let beta = b.ctx.beta.value()?;
    let mut rng = SuiteRng::new(seed, 2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = 1 + rng.index(8);
        let family: Vec<(TestVector, f64)> = (0..n)
            .map(|_| {
                (
                    random_real_vector(b.ctx, &mut rng),
                    rng.uniform_in(0.0, 0.5 * beta),
                )
            })
            .collect();
        let res = os_gram_check(b.ctx, &family)?;
        worst = worst.max(-res.os.min_eigenvalue / res.os.norm.max(1.0));
        worst = worst.max(-res.stationary.min_eigenvalue / res.stationary.norm.max(1.0));
    }
    b.push(
        "os-gram",
        "reflection-positivity-kernel",
        worst.max(0.0),
        b.tol.get("os_positivity"),
    );
    Ok(())
}

fn check_weyl_os(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let beta = b.ctx.beta.value()?;
    let mut rng = SuiteRng::new(seed, 3);
    let mut worst = 0.0f64;
    for trial in 0..10 {
        let mut words = Vec::new();
        if trial % 2 == 0 {
            words.push(EuclideanWord::default()); // the algebra unit
        }
        for _ in 0..(2 + rng.index(3)) {
            let n = 1 + rng.index(3);
            let times = random_times(&mut rng, n, 0.0, 0.5 * beta);
            words.push(EuclideanWord::new(
                times
                    .into_iter()
                    .map(|s| (random_real_vector(b.ctx, &mut rng), s))
                    .collect(),
            ));
        }
        let res = weyl_os_check(b.ctx, &words)?;
        worst = worst.max(-res.min_eigenvalue / res.norm.max(1.0));
    }
    b.push(
        "weyl-os",
        "reflection-positivity-weyl",
        worst.max(0.0),
        b.tol.get("weyl_positivity"),
    );
    Ok(())
}

fn check_shift_invariance(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let beta = b.ctx.beta.value()?;
    let mut rng = SuiteRng::new(seed, 4);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let word = random_real_word(b.ctx, &mut rng, 4, 0.0, 0.7 * beta);
        let shift = rng.uniform_in(-0.1 * beta, 0.2 * beta);
        let a = multi_green_euclid(b.ctx, &word)?;
        let c = multi_green_euclid(b.ctx, &word.shifted(shift))?;
        worst = worst.max((a - c).norm());
    }
    b.push(
        "eg1-shift",
        "euclidean-shift-invariance",
        worst,
        b.tol.get("shift_invariance"),
    );
    Ok(())
}

fn check_merge_consistency(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let beta = b.ctx.beta.value()?;
    let mut rng = SuiteRng::new(seed, 5);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        // a word with an equal-time adjacent pair of complex letters, so the
        // symplectic phase of the merge is nontrivial
        let t0 = rng.uniform_in(0.0, 0.3 * beta);
        let t1 = rng.uniform_in(0.4 * beta, 0.6 * beta);
        let word = EuclideanWord::new(vec![
            (random_real_vector(b.ctx, &mut rng), t0),
            (random_complex_vector(b.ctx, &mut rng), t1),
            (random_complex_vector(b.ctx, &mut rng), t1),
        ]);
        let direct = multi_green_euclid(b.ctx, &word)?;
        let (phase, merged) = crate::thermal::weyl_merge(b.ctx, &word, 1)?;
        let via = phase * multi_green_euclid(b.ctx, &merged)?;
        worst = worst.max((direct - via).norm());
    }
    b.push(
        "eg1-merge",
        "weyl-merge-consistency",
        worst,
        b.tol.get("merge_consistency"),
    );
    Ok(())
}

fn check_boundedness(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let beta = b.ctx.beta.value()?;
    let mut rng = SuiteRng::new(seed, 6);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let word = random_real_word(b.ctx, &mut rng, 5, 0.0, beta);
        let g = multi_green_euclid(b.ctx, &word)?;
        worst = worst.max((g.norm() - 1.0).max(0.0));
    }
    b.push(
        "eg1-bound",
        "green-function-boundedness",
        worst,
        b.tol.get("boundedness"),
    );
    Ok(())
}

fn check_cyclic(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let beta = b.ctx.beta.value()?;
    let mut rng = SuiteRng::new(seed, 7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let word = random_real_word(b.ctx, &mut rng, 4, 0.0, beta);
        worst = worst.max(eg4_cyclic_check(b.ctx, &word)?);
    }
    b.push("eg4-cyclic", "cyclic-boundary-condition", worst, b.tol.get("cyclic_kms"));
    Ok(())
}

fn check_central_identity(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let beta = b.ctx.beta.value()?;
    let mut rng = SuiteRng::new(seed, 8);
    let spec = CovarianceSpec::new(b.ctx);
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let word = random_real_word(b.ctx, &mut rng, 5, 0.0, beta);
        let lhs = char_functional(&spec, &word)?;
        let rhs = multi_green_euclid(b.ctx, &word)?;
        worst = worst.max((lhs - rhs.re).abs().max(rhs.im.abs()));
    }
    b.push(
        "central-identity",
        "gaussian-characteristic-functional",
        worst,
        b.tol.get("central_identity"),
    );
    Ok(())
}

fn check_kernel_integral(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let beta = b.ctx.beta.value()?;
    let mut rng = SuiteRng::new(seed, 9);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let f = random_real_vector(b.ctx, &mut rng);
        let g = random_real_vector(b.ctx, &mut rng);
        for s_frac in [0.15, 0.5, 0.85] {
            let s = s_frac * beta;
            let via_integral = quadrature_s(b.ctx, &f, &g, s)?;
            let exact = s_kernel(b.ctx, &f, &g, s)?;
            worst = worst.max((via_integral - exact).norm());
        }
    }
    b.push(
        "kernel-integral",
        "integral-kernel-equivalence",
        worst,
        b.tol.get("kernel_integral"),
    );
    Ok(())
}

fn check_fourier_series(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let beta = b.ctx.beta.value()?;
    let mut rng = SuiteRng::new(seed, 10);
    let n_modes = 10_000;
    let f = random_real_vector(b.ctx, &mut rng);
    // rigorous truncation budget for this vector
    let sf = b.ctx.spectral(&f)?;
    let mut budget = 0.0;
    for (k, &lambda) in b.ctx.model.eigenvalues().iter().enumerate() {
        let mu = b.ctx.model.spectral_weight(k) * sf.coeffs[k].norm_sqr();
        budget += mu * fourier_tail_bound(lambda, beta, n_modes) / -(-beta * lambda).exp_m1();
    }
    let mut worst = 0.0f64;
    for s_frac in [0.0, 0.3, 0.7] {
        let s = s_frac * beta;
        let series = fourier_series_s(b.ctx, &f, s, n_modes)?;
        let exact = s_kernel(b.ctx, &f, &f, s)?.re;
        worst = worst.max((series - exact).abs());
    }
    b.push(
        "fourier-series",
        "mode-representation",
        worst,
        1.05 * budget + 1e-12,
    );
    Ok(())
}

fn check_markov(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let beta = b.ctx.beta.value()?;
    let mut rng = SuiteRng::new(seed, 11);
    let spec = CovarianceSpec::new(b.ctx);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let r = rng.uniform_in(0.0, beta);
        let arc = rng.uniform_in(0.15 * beta, 0.85 * beta);
        let s = r + arc;
        let probe = MarkovProbe {
            u: r + rng.uniform_in(0.1, 0.9) * arc,
            v: s + rng.uniform_in(0.1, 0.9) * (beta - arc),
            f: random_real_vector(b.ctx, &mut rng),
            g: random_real_vector(b.ctx, &mut rng),
        };
        worst = worst.max(markov_check(&spec, r, s, &[probe])?);
    }
    b.push("markov", "two-sided-markov", worst, b.tol.get("markov"));
    Ok(())
}

fn check_holder(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let beta = b.ctx.beta.value()?;
    let mut rng = SuiteRng::new(seed, 12);
    let spec = CovarianceSpec::new(b.ctx);
    let grid: Vec<f64> = (0..12)
        .map(|i| 1e-3 + (0.4 * beta - 1e-3) * i as f64 / 11.0)
        .collect();
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let f = random_real_vector(b.ctx, &mut rng);
        let report = holder_check(&spec, &f, &grid)?;
        worst = worst.max(-report.min_slack());
    }
    b.push(
        "holder",
        "increment-hoelder-bound",
        worst.max(0.0),
        b.tol.get("holder"),
    );
    Ok(())
}

fn check_covariance_psd(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let beta = b.ctx.beta.value()?;
    let mut rng = SuiteRng::new(seed, 13);
    let spec = CovarianceSpec::new(b.ctx);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let n = 6;
        let family: Vec<(TestVector, f64)> = (0..n)
            .map(|_| (random_real_vector(b.ctx, &mut rng), rng.uniform_in(0.0, beta)))
            .collect();
        let mut gram = nalgebra::DMatrix::zeros(n, n);
        let mut reflected = nalgebra::DMatrix::zeros(n, n);
        for k in 0..n {
            for l in 0..n {
                gram[(k, l)] = cov_pair(&spec, &family[k].0, &family[l].0, family[k].1, family[l].1)?;
                // reflection invariance: the covariance only sees s -> -s
                reflected[(k, l)] =
                    cov_pair(&spec, &family[k].0, &family[l].0, -family[k].1, -family[l].1)?;
            }
        }
        let (min, norm) = crate::checks::symmetric_eigmin(&gram);
        worst = worst.max(-min / norm.max(1.0));
        worst = worst.max((&gram - &reflected).amax() / norm.max(1.0));
    }
    b.push(
        "covariance-psd",
        "circle-covariance-positivity",
        worst.max(0.0),
        b.tol.get("covariance_psd"),
    );
    Ok(())
}

fn check_image_sum(b: &mut SuiteBuilder) -> Result<()> {
    let spec = CovarianceSpec::new(b.ctx);
    let n_images = 20;
    // at the origin the truncation bound is sharp
    let residual = image_sum_check(&spec, 0.0, n_images)?;
    let bound = image_sum_bound(&spec, 0.0, n_images)?;
    b.push(
        "image-sum-origin",
        "periodic-image-sum",
        residual,
        bound + 1e-12,
    );
    // interior separations against the separation-aware bound
    let beta = b.ctx.beta.value()?;
    let mut worst = 0.0f64;
    for frac in [0.25, 0.5, 0.75] {
        let d = frac * beta;
        let residual = image_sum_check(&spec, d, n_images)?;
        let bound = image_sum_bound(&spec, d, n_images)?;
        worst = worst.max(residual - bound);
    }
    b.push(
        "image-sum-interior",
        "periodic-image-sum",
        worst.max(0.0),
        1e-12,
    );
    Ok(())
}

fn check_ground_limit(b: &mut SuiteBuilder, seed: u64) -> Result<()> {
    let mut rng = SuiteRng::new(seed, 14);
    let big_beta = 1e4;
    let cold = ThermalContext::new(b.ctx.model.clone(), Beta::Finite(big_beta))
        .with_condensate(b.ctx.condensate);
    let ground = ThermalContext::new(b.ctx.model.clone(), Beta::Infinite)
        .with_condensate(b.ctx.condensate);
    let f = random_real_vector(b.ctx, &mut rng);
    let g = random_real_vector(b.ctx, &mut rng);
    let lambda_min = b.ctx.model.min_eigenvalue();
    let mut worst = 0.0f64;
    for s in [0.0, 0.5, 1.5] {
        let a = s_kernel(&cold, &f, &g, s)?;
        let c = s_kernel(&ground, &f, &g, s)?;
        worst = worst.max((a - c).norm());
    }
    let scale: f64 = b_form_diag(&ground, &f)
        .and_then(|x| b_form_diag(&ground, &g).map(|y| x.max(y)))?;
    let tol = b.tol.get("ground_limit") + 20.0 * scale.max(1.0) * (-big_beta * lambda_min).exp();
    b.push("ground-limit", "ground-state-limit", worst, tol);
    Ok(())
}

fn check_roundtrip(b: &mut SuiteBuilder, beta: f64) -> Result<()> {
    let matrix = match &b.ctx.model {
        GeneratorModel::Matrix(m) => m,
        GeneratorModel::Quadrature(_) => return Ok(()),
    };
    // Past beta * lambda ~ 36 the covariance rounds to the identity in f64
    // and cannot encode the generator; the map itself is beta independent,
    // so verify it at the largest well-conditioned inverse temperature.
    let beta_eff = beta.min(12.0 / b.ctx.model.max_eigenvalue());
    let ctx_eff = b.ctx.at_beta(beta_eff)?;
    let b_mat = crate::thermal::thermal_b_matrix(&ctx_eff)?;
    let residual = match crate::thermal::recover_generator(&b_mat, beta_eff) {
        Ok(recovered) => {
            (recovered.h_matrix() - matrix.h_matrix()).amax()
                / matrix.h_matrix().amax().max(1.0)
        }
        Err(_) => f64::INFINITY,
    };
    b.push(
        "roundtrip",
        "covariance-generator-roundtrip",
        residual,
        b.tol.get("roundtrip"),
    );
    Ok(())
}

fn check_sampler(b: &mut SuiteBuilder, options: &SuiteOptions) -> Result<()> {
    let mut rng = SuiteRng::new(options.seed, 15);
    let spec = CovarianceSpec::new(b.ctx);
    let f = random_real_vector(b.ctx, &mut rng);
    let grid_points = 32;
    let ensemble = sample_paths(
        b.ctx,
        grid_points,
        std::slice::from_ref(&f),
        options.sampler_samples,
        options.sampler_modes,
        options.seed,
    )?;
    let bias = crate::sampler::truncation_bias_exact(b.ctx, &f, options.sampler_modes)?;
    let mut worst = 0.0f64;
    for lag in [0usize, 1, 3, 8, 16] {
        let (est, se) = empirical_covariance(&ensemble, 0, 0, lag)?;
        let h = ensemble.beta * lag as f64 / grid_points as f64;
        let exact = cov_pair(&spec, &f, &f, 0.0, h)?;
        // deviation in standard errors, after the deterministic truncation bias
        let deviation = ((est - exact).abs() - bias).max(0.0) / se.max(1e-300);
        worst = worst.max(deviation);
    }
    b.push(
        "sampler",
        "spectral-synthesis-fidelity",
        worst,
        b.tol.get("sampler_sigma"),
    );
    Ok(())
}
