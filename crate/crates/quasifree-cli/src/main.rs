//! Batch front end: build models from config, run the verification suite,
//! evaluate Euclidean Green functions, and sample thermal-process ensembles.
//!
//! Exit status: 0 = success / all checks pass, 1 = at least one mathematical
//! check failed, 2 = usage, config or model-build error.

mod config;

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::Config;
use quasifree::models::{
    gaussian_profile, BoseDispersion, ModelConfig, ModelVariant, ProcessWeight, QuadratureConfig,
    RINDLER_BETA,
};
use quasifree::process::{cov_pair, CovarianceSpec};
use quasifree::report::{run_verification_suite, SuiteOptions, Tolerances};
use quasifree::sampler::{
    empirical_covariance, sample_paths, truncation_bias_bound, truncation_bias_exact,
    write_ensemble_csv,
};
use quasifree::thermal::{multi_green_euclid, EuclideanWord, ThermalContext};
use quasifree::{Beta, TestVector};

#[derive(Parser)]
#[command(name = "quasifree", version, about = "Thermal Weyl-state toolkit: verification, Green functions, process sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the structural-identity suite against the configured model.
    Verify(RunArgs),
    /// Evaluate a Euclidean Green function word over a time sweep (CSV).
    Green(RunArgs),
    /// Sample the periodic thermal process (CSV plus metadata sidecar).
    Sample(RunArgs),
    /// Render a stored verification report; exit status follows its verdict.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Sectioned key-value config file.
    #[arg(long)]
    config: std::path::PathBuf,
    /// Output path (report JSON / CSV); stdout when omitted.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// RNG seed (overrides the config's `[sampler]` seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Inverse temperature override: a float or `inf`.
    #[arg(long)]
    beta: Option<String>,
    /// Fourier mode count override.
    #[arg(long)]
    modes: Option<usize>,
    /// Sample count override.
    #[arg(long)]
    samples: Option<usize>,
    /// Tolerance override NAME=VALUE; repeatable.
    #[arg(long = "tolerance")]
    tolerances: Vec<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Stored verification report (JSON).
    #[arg(long)]
    input: std::path::PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Green(args) => cmd_green(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

/// 17-significant-digit rendering, round-trip exact for doubles.
fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

fn read_config(args: &RunArgs) -> Result<(Config, String), String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read config {}: {e}", args.config.display()))?;
    let cfg = Config::parse(&text)?;
    Ok((cfg, text))
}

fn parse_beta(text: &str) -> Result<Beta, String> {
    if text.eq_ignore_ascii_case("inf") || text.eq_ignore_ascii_case("infinity") {
        return Ok(Beta::Infinite);
    }
    let v: f64 = text
        .parse()
        .map_err(|_| format!("beta must be a positive number or `inf`, got {text:?}"))?;
    Beta::finite(v).map_err(|e| e.to_string())
}

/// A built context plus the metadata every output embeds.
struct BuildTarget {
    ctx: ThermalContext,
    name: String,
    model_id: String,
    beta: Beta,
}

/// Build either a catalog model or a custom matrix generator read from the
/// plain-text format (first line `dim`, then `dim` rows of reals).
fn build_target(cfg: &Config, beta_override: Option<&str>) -> Result<BuildTarget, String> {
    if cfg.require("model", "variant")? == "matrix" {
        let path = cfg.require("model", "file")?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read matrix file {path}: {e}"))?;
        let h = quasifree::spectral::read_matrix_text(&text).map_err(|e| e.to_string())?;
        let model = quasifree::MatrixModel::eigendecompose(h).map_err(|e| e.to_string())?;
        let beta = match beta_override.or_else(|| cfg.get("thermal", "beta")) {
            Some(text) => parse_beta(text)?,
            None => return Err("missing [thermal] beta (or --beta)".into()),
        };
        let mut hasher = Sha256::new();
        hasher.update(b"matrix;");
        hasher.update(text.as_bytes());
        hasher.update(beta.to_string().as_bytes());
        let model_id: String = hasher
            .finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect();
        let model = quasifree::GeneratorModel::Matrix(model);
        let ctx = if cfg.get_bool("checks", "corrupt_b")?.unwrap_or(false) {
            let b = beta.value().map_err(|_| "corrupt_b fixture needs a finite beta".to_string())?;
            ThermalContext::corrupted(model, b).map_err(|e| e.to_string())?
        } else {
            ThermalContext::new(model, beta)
        };
        return Ok(BuildTarget {
            ctx,
            name: "matrix".into(),
            model_id,
            beta,
        });
    }
    let model_cfg = model_from_config(cfg, beta_override)?;
    let ctx = build_context(cfg, &model_cfg)?;
    Ok(BuildTarget {
        beta: model_cfg.beta,
        name: model_cfg.variant_name().to_string(),
        model_id: model_cfg.content_hash(),
        ctx,
    })
}

fn model_from_config(cfg: &Config, beta_override: Option<&str>) -> Result<ModelConfig, String> {
    let variant_name = cfg.require("model", "variant")?;
    let quad = QuadratureConfig {
        n_nodes: cfg.get_usize("model", "nodes")?.unwrap_or(256),
        p_max: cfg.get_f64("model", "p_max")?.unwrap_or(14.0),
    };
    let variant = match variant_name {
        "harmonic_crystal" | "crystal" => ModelVariant::HarmonicCrystal {
            side: cfg.get_usize("model", "side")?.unwrap_or(2),
            space_dim: cfg.get_usize("model", "dim")?.unwrap_or(1),
            coupling_strength: cfg.get_f64("model", "coupling")?.unwrap_or(0.0),
        },
        "minkowski" => ModelVariant::Minkowski {
            space_dim: cfg.get_usize("model", "space_dim")?.unwrap_or(3),
            mass: cfg.get_f64("model", "mass")?.unwrap_or(1.0),
            weight: match cfg.get("model", "weight").unwrap_or("field") {
                "field" => ProcessWeight::Field,
                "momentum" => ProcessWeight::Momentum,
                other => return Err(format!("unknown process weight {other:?}")),
            },
            quad,
        },
        "bose_gas" => {
            let dispersion = match cfg.get("model", "dispersion").unwrap_or("standard") {
                "standard" => BoseDispersion::Standard {
                    mu: cfg.get_f64("model", "mu")?.unwrap_or(1.0),
                },
                "semirelativistic" => BoseDispersion::Semirelativistic {
                    mass: cfg.get_f64("model", "mass")?.unwrap_or(1.0),
                },
                "critical" => BoseDispersion::Critical,
                other => return Err(format!("unknown dispersion {other:?}")),
            };
            ModelVariant::BoseGas {
                space_dim: cfg.get_usize("model", "space_dim")?.unwrap_or(3),
                dispersion,
                condensate: cfg.get_f64("model", "condensate")?.unwrap_or(0.0),
                quad,
            }
        }
        "rindler" => ModelVariant::Rindler {
            mass: cfg.get_f64("model", "mass")?.unwrap_or(1.0),
            half_width: cfg.get_f64("model", "half_width")?.unwrap_or(5.0),
            grid_points: cfg.get_usize("model", "grid")?.unwrap_or(128),
        },
        other => return Err(format!("unknown model variant {other:?}")),
    };
    let beta = match beta_override.or_else(|| cfg.get("thermal", "beta")) {
        Some(text) => parse_beta(text)?,
        None if variant_name == "rindler" => Beta::Finite(RINDLER_BETA),
        None => return Err("missing [thermal] beta (or --beta)".into()),
    };
    Ok(ModelConfig { variant, beta })
}

fn build_context(cfg: &Config, model_cfg: &ModelConfig) -> Result<ThermalContext, String> {
    let ctx = model_cfg.build().map_err(|e| e.to_string())?;
    if cfg.get_bool("checks", "corrupt_b")?.unwrap_or(false) {
        let beta = match model_cfg.beta {
            Beta::Finite(b) => b,
            Beta::Infinite => return Err("corrupt_b fixture needs a finite beta".into()),
        };
        return ThermalContext::corrupted(ctx.model.clone(), beta).map_err(|e| e.to_string());
    }
    Ok(ctx)
}

struct Manifest {
    command: &'static str,
    config_text: String,
    seed: u64,
    beta: String,
    samples: usize,
    modes: usize,
    tolerance_overrides: Vec<String>,
}

impl Manifest {
    fn digest(&self) -> String {
        let mut canonical = String::new();
        let _ = writeln!(canonical, "tool={}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(canonical, "command={}", self.command);
        let _ = writeln!(canonical, "seed={}", self.seed);
        let _ = writeln!(canonical, "beta={}", self.beta);
        let _ = writeln!(canonical, "samples={}", self.samples);
        let _ = writeln!(canonical, "modes={}", self.modes);
        for t in &self.tolerance_overrides {
            let _ = writeln!(canonical, "tolerance={t}");
        }
        let _ = write!(canonical, "config:\n{}", self.config_text);
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn apply_tolerances(
    cfg: &Config,
    overrides: &[String],
    tolerances: &mut Tolerances,
) -> Result<(), String> {
    // config [checks] first, command line second
    let names: Vec<String> = tolerances.names().map(str::to_string).collect();
    if let Some(section) = cfg.section("checks") {
        for (key, value) in section {
            if names.iter().any(|n| n == key) {
                let v: f64 = value
                    .parse()
                    .map_err(|_| format!("[checks] {key} = {value:?} is not a number"))?;
                tolerances.set(key, v).map_err(|e| e.to_string())?;
            }
        }
    }
    for entry in overrides {
        let (name, value) = entry
            .split_once('=')
            .ok_or_else(|| format!("--tolerance expects NAME=VALUE, got {entry:?}"))?;
        let v: f64 = value
            .parse()
            .map_err(|_| format!("--tolerance {name}: {value:?} is not a number"))?;
        tolerances.set(name.trim(), v).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn cmd_verify(args: RunArgs) -> Result<bool, String> {
    let (cfg, text) = read_config(&args)?;
    let target = build_target(&cfg, args.beta.as_deref())?;
    let ctx = &target.ctx;

    let mut tolerances = Tolerances::default();
    apply_tolerances(&cfg, &args.tolerances, &mut tolerances)?;

    let seed = args
        .seed
        .or(cfg.get_u64("sampler", "seed")?)
        .unwrap_or(7);
    let options = SuiteOptions {
        seed,
        with_sampler: cfg
            .get_bool("checks", "sampler")?
            .unwrap_or(ctx.model.is_matrix()),
        sampler_samples: args
            .samples
            .or(cfg.get_usize("sampler", "samples")?)
            .unwrap_or(20_000),
        sampler_modes: args
            .modes
            .or(cfg.get_usize("sampler", "modes")?)
            .unwrap_or(256),
    };
    let manifest = Manifest {
        command: "verify",
        config_text: text,
        seed,
        beta: target.beta.to_string(),
        samples: options.sampler_samples,
        modes: options.sampler_modes,
        tolerance_overrides: args.tolerances.clone(),
    };

    let mut report = run_verification_suite(
        ctx,
        &target.name,
        &target.model_id,
        &tolerances,
        &options,
    )
    .map_err(|e| e.to_string())?;
    report.manifest_digest = manifest.digest();

    for check in &report.checks {
        println!(
            "[{}] {:22} residual {:>12.5e}  tolerance {:>10.3e}  ({})",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.residual,
            check.tolerance,
            check.property,
        );
    }
    println!(
        "model {} ({}) beta {}: {}",
        report.model,
        report.model_id,
        report.beta,
        if report.all_pass { "all checks pass" } else { "CHECKS FAILED" }
    );
    if let Some(path) = &args.out {
        std::fs::write(path, report.to_json())
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(report.all_pass)
}

fn parse_vector(ctx: &ThermalContext, spec: &str) -> Result<TestVector, String> {
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("boost:") {
        // fold the h^{-1/2} kernel weight of the wedge boost process into the
        // index vector
        let raw = parse_vector(ctx, rest)?;
        return quasifree::models::boost_index(ctx, &raw).map_err(|e| e.to_string());
    }
    if let Some(index) = spec.strip_prefix('e') {
        let i: usize = index
            .parse()
            .map_err(|_| format!("vector spec {spec:?}: expected e<index>"))?;
        let dim = ctx.model.dim();
        if i >= dim {
            return Err(format!("vector spec {spec:?} out of range for dimension {dim}"));
        }
        if !ctx.model.is_matrix() {
            return Err(format!("basis spec {spec:?} needs a matrix-kind model"));
        }
        return Ok(TestVector::basis(dim, i));
    }
    if let Some(rest) = spec.strip_prefix("gauss:") {
        let mut parts = rest.split(':');
        let a: f64 = parts
            .next()
            .unwrap_or_default()
            .parse()
            .map_err(|_| format!("vector spec {spec:?}: expected gauss:<width>[:<scale>]"))?;
        let scale: f64 = match parts.next() {
            None => 1.0,
            Some(s) => s
                .parse()
                .map_err(|_| format!("vector spec {spec:?}: bad scale"))?,
        };
        return gaussian_profile(&ctx.model, a, scale).map_err(|e| e.to_string());
    }
    Err(format!(
        "unknown vector spec {spec:?}; use e<index>, gauss:<width>[:<scale>] or boost:<spec>"
    ))
}

fn cmd_green(args: RunArgs) -> Result<bool, String> {
    let (cfg, text) = read_config(&args)?;
    let target = build_target(&cfg, args.beta.as_deref())?;
    let ctx = &target.ctx;

    let letters_spec = cfg.require("green", "letters")?;
    let letters: Vec<TestVector> = letters_spec
        .split(',')
        .map(|s| parse_vector(ctx, s))
        .collect::<Result<_, _>>()?;
    let times_spec = cfg.require("green", "times")?;
    let time_slots: Vec<&str> = times_spec.split(',').map(str::trim).collect();
    if time_slots.len() != letters.len() {
        return Err(format!(
            "[green] has {} letters but {} times",
            letters.len(),
            time_slots.len()
        ));
    }
    let sweep_slot = time_slots.iter().position(|s| *s == "sweep");
    let base_times: Vec<f64> = time_slots
        .iter()
        .map(|s| {
            if *s == "sweep" {
                Ok(0.0)
            } else {
                s.parse::<f64>()
                    .map_err(|_| format!("[green] time {s:?} is not a number"))
            }
        })
        .collect::<Result<_, _>>()?;

    let sweep: Vec<f64> = match sweep_slot {
        None => vec![f64::NAN], // single row, no sweep substitution
        Some(_) => {
            let start = cfg.get_f64("green", "sweep_start")?.unwrap_or(0.0);
            let stop = match cfg.get_f64("green", "sweep_stop")? {
                Some(v) => v,
                None => match target.beta {
                    Beta::Finite(b) => b,
                    Beta::Infinite => return Err("[green] sweep_stop required for beta = inf".into()),
                },
            };
            let points = cfg.get_usize("green", "sweep_points")?.unwrap_or(65).max(1);
            (0..points)
                .map(|i| {
                    if points == 1 {
                        start
                    } else {
                        start + (stop - start) * i as f64 / (points - 1) as f64
                    }
                })
                .collect()
        }
    };

    let manifest = Manifest {
        command: "green",
        config_text: text,
        seed: args.seed.unwrap_or(0),
        beta: target.beta.to_string(),
        samples: 0,
        modes: 0,
        tolerance_overrides: args.tolerances.clone(),
    };

    let all_real = letters.iter().all(TestVector::is_real);
    let mut out = String::new();
    let _ = writeln!(out, "# manifest={} model={}", manifest.digest(), target.model_id);
    let header: String = (1..=letters.len()).map(|i| format!("s{i},")).collect();
    let _ = writeln!(out, "{header}re,im,chardiff,status");
    let spec = CovarianceSpec::new(ctx);
    for &sv in &sweep {
        let mut times = base_times.clone();
        if let Some(slot) = sweep_slot {
            times[slot] = sv;
        }
        let mut entries: Vec<(TestVector, f64)> = letters
            .iter()
            .cloned()
            .zip(times.iter().copied())
            .collect();
        entries.sort_by(|a, b| a.1.total_cmp(&b.1));
        let word = EuclideanWord::new(entries);
        for &t in &times {
            let _ = write!(out, "{},", f17(t));
        }
        match multi_green_euclid(ctx, &word) {
            Ok(value) => {
                let chardiff = if all_real {
                    match quasifree::process::char_functional(&spec, &word) {
                        Ok(c) => f17((c - value.re).abs().max(value.im.abs())),
                        Err(_) => String::new(),
                    }
                } else {
                    String::new()
                };
                let _ = writeln!(out, "{},{},{chardiff},ok", f17(value.re), f17(value.im));
            }
            Err(err) => {
                let _ = writeln!(out, ",,,error:{}", error_tag(&err));
            }
        }
    }

    match &args.out {
        Some(path) => std::fs::write(path, out)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{out}"),
    }
    Ok(true)
}

fn error_tag(err: &quasifree::Error) -> &'static str {
    use quasifree::Error::*;
    match err {
        TimeOutOfRange { .. } => "TimeOutOfRange",
        UnorderedWord { .. } => "UnorderedWord",
        EndpointSingularity { .. } => "EndpointSingularity",
        NonRealVector { .. } => "NonRealVector",
        DimensionMismatch { .. } => "DimensionMismatch",
        _ => "Error",
    }
}

fn cmd_sample(args: RunArgs) -> Result<bool, String> {
    let (cfg, text) = read_config(&args)?;
    let target = build_target(&cfg, args.beta.as_deref())?;
    let ctx = &target.ctx;

    let seed = args.seed.or(cfg.get_u64("sampler", "seed")?).unwrap_or(1);
    let samples = args
        .samples
        .or(cfg.get_usize("sampler", "samples")?)
        .unwrap_or(10_000);
    let modes = args
        .modes
        .or(cfg.get_usize("sampler", "modes")?)
        .unwrap_or(512);
    let grid = cfg.get_usize("sampler", "grid")?.unwrap_or(64);
    let coords_spec = cfg.get("sampler", "coords").unwrap_or("e0");
    let coords: Vec<TestVector> = coords_spec
        .split(',')
        .map(|s| parse_vector(ctx, s))
        .collect::<Result<_, _>>()?;

    let manifest = Manifest {
        command: "sample",
        config_text: text,
        seed,
        beta: target.beta.to_string(),
        samples,
        modes,
        tolerance_overrides: args.tolerances.clone(),
    };
    let digest = manifest.digest();

    let ensemble = sample_paths(ctx, grid, &coords, samples, modes, seed)
        .map_err(|e| e.to_string())?;

    // empirical-vs-exact covariance summary over a spread of lags
    let spec = CovarianceSpec::new(ctx);
    let mut summary = Vec::new();
    if samples > 0 {
        let lags: Vec<usize> = [0usize, 1, 2, 4, 8, 12, 16, 24]
            .into_iter()
            .filter(|&l| l < grid)
            .collect();
        for lag in lags {
            let h = ensemble.beta * lag as f64 / grid as f64;
            let (est, se) = empirical_covariance(&ensemble, 0, 0, lag)
                .map_err(|e| e.to_string())?;
            let exact = cov_pair(&spec, &coords[0], &coords[0], 0.0, h)
                .map_err(|e| e.to_string())?;
            summary.push(serde_json::json!({
                "lag": lag,
                "separation": h,
                "estimate": est,
                "standard_error": se,
                "exact": exact,
            }));
        }
    }
    let bound = truncation_bias_bound(ctx, &coords[0], modes).map_err(|e| e.to_string())?;
    let exact_bias = truncation_bias_exact(ctx, &coords[0], modes).map_err(|e| e.to_string())?;

    let mut csv = String::new();
    let _ = writeln!(csv, "# manifest={digest} model={}", target.model_id);
    {
        let mut buf = Vec::new();
        write_ensemble_csv(&ensemble, &mut buf).map_err(|e| e.to_string())?;
        csv.push_str(&String::from_utf8(buf).map_err(|e| e.to_string())?);
    }

    let sidecar = serde_json::json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "manifest_digest": digest,
        "model": target.name,
        "model_id": target.model_id,
        "beta": target.beta.to_string(),
        "seed": seed,
        "n_samples": samples,
        "n_modes": modes,
        "grid_points": grid,
        "coords": coords_spec,
        "truncation_bias_bound": bound,
        "truncation_bias_exact": exact_bias,
        "covariance_summary": summary,
    });

    match &args.out {
        Some(path) => {
            std::fs::write(path, csv)
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            let meta_path = path.with_extension("meta.json");
            std::fs::write(&meta_path, serde_json::to_string_pretty(&sidecar).unwrap())
                .map_err(|e| format!("cannot write {}: {e}", meta_path.display()))?;
            println!(
                "wrote {} samples x {} grid points to {} (metadata {})",
                samples,
                grid,
                path.display(),
                meta_path.display()
            );
        }
        None => {
            print!("{csv}");
            eprintln!("{}", serde_json::to_string_pretty(&sidecar).unwrap());
        }
    }
    Ok(true)
}

fn cmd_report(args: ReportArgs) -> Result<bool, String> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| format!("cannot read {}: {e}", args.input.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("invalid report JSON: {e}"))?;
    let checks = value
        .get("checks")
        .and_then(|c| c.as_array())
        .ok_or("report has no checks array")?;
    println!(
        "model {} beta {} (tool {})",
        value.get("model").and_then(|v| v.as_str()).unwrap_or("?"),
        value.get("beta").and_then(|v| v.as_str()).unwrap_or("?"),
        value
            .get("tool_version")
            .and_then(|v| v.as_str())
            .unwrap_or("?")
    );
    for check in checks {
        println!(
            "[{}] {:22} residual {:>12.5e}  tolerance {:>10.3e}",
            if check.get("pass").and_then(|v| v.as_bool()).unwrap_or(false) {
                "PASS"
            } else {
                "FAIL"
            },
            check.get("name").and_then(|v| v.as_str()).unwrap_or("?"),
            check
                .get("residual")
                .and_then(|v| v.as_f64())
                .unwrap_or(f64::NAN),
            check
                .get("tolerance")
                .and_then(|v| v.as_f64())
                .unwrap_or(f64::NAN),
        );
    }
    let all_pass = value
        .get("all_pass")
        .and_then(|v| v.as_bool())
        .ok_or("report has no all_pass field")?;
    println!("verdict: {}", if all_pass { "all checks pass" } else { "CHECKS FAILED" });
    Ok(all_pass)
}
