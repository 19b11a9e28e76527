//! End-to-end tests of the command line front end: exit-status contract,
//! output determinism, and the documented CSV behavior.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quasifree"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const CRYSTAL: &str = "[model]\nvariant = harmonic_crystal\nside = 2\ndim = 1\ncoupling = 0.0\n\n\
                       [thermal]\nbeta = 1.0\n\n[checks]\nsampler = false\n";

#[test]
fn sample_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("m.conf");
    write(
        &conf,
        "[model]\nvariant = harmonic_crystal\nside = 2\ndim = 1\n\n[thermal]\nbeta = 1.0\n\n\
         [sampler]\nseed = 5\nsamples = 50\nmodes = 32\ngrid = 16\ncoords = e0,e1\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    for (out, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let status = bin()
            .args(["sample", "--config"])
            .arg(&conf)
            .args(["--out"])
            .arg(out)
            .args(["--seed", seed])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap(), "same seed, same bytes");
    assert_ne!(bytes_a, std::fs::read(&c).unwrap(), "different seed differs");
    // header contract: manifest comment, then the column header
    let text = String::from_utf8(bytes_a).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest="));
    assert_eq!(lines.next().unwrap(), "sample,s,coord,value");
}

#[test]
fn sample_truncation_bound_follows_one_over_modes() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("m.conf");
    write(
        &conf,
        "[model]\nvariant = harmonic_crystal\nside = 2\ndim = 1\n\n[thermal]\nbeta = 1.0\n\n\
         [sampler]\nseed = 5\nsamples = 10\ngrid = 8\ncoords = e0\n",
    );
    let mut bounds = Vec::new();
    for modes in ["512", "256"] {
        let out = dir.path().join(format!("s{modes}.csv"));
        let status = bin()
            .args(["sample", "--config"])
            .arg(&conf)
            .args(["--out"])
            .arg(&out)
            .args(["--modes", modes])
            .status()
            .unwrap();
        assert!(status.success());
        let meta: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(out.with_extension("meta.json")).unwrap(),
        )
        .unwrap();
        bounds.push(meta["truncation_bias_bound"].as_f64().unwrap());
        assert_eq!(meta["n_modes"].as_u64().unwrap().to_string(), modes);
    }
    let ratio = bounds[1] / bounds[0];
    assert!((ratio - 2.0).abs() < 1e-12, "halving modes must double the bound, got {ratio}");
}

#[test]
fn green_single_letter_is_constant_and_two_letter_is_reflection_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("g.conf");
    write(
        &conf,
        "[model]\nvariant = harmonic_crystal\nside = 2\ndim = 1\ncoupling = 0.3\n\n\
         [thermal]\nbeta = 2.0\n\n\
         [green]\nletters = e0\ntimes = sweep\nsweep_start = 0.0\nsweep_stop = 2.0\nsweep_points = 9\n",
    );
    let output = bin().args(["green", "--config"]).arg(&conf).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let values: Vec<f64> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 9);
    for v in &values {
        assert!((v - values[0]).abs() < 1e-14, "single letter must be time independent");
    }

    // two-letter real word: G(s) = G(beta - s)
    write(
        &conf,
        "[model]\nvariant = harmonic_crystal\nside = 2\ndim = 1\ncoupling = 0.3\n\n\
         [thermal]\nbeta = 2.0\n\n\
         [green]\nletters = e0,e0\ntimes = 0.0,sweep\nsweep_start = 0.0\nsweep_stop = 2.0\nsweep_points = 9\n",
    );
    let output = bin().args(["green", "--config"]).arg(&conf).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["s1", "s2", "re", "im", "chardiff", "status"]);
    let re: Vec<f64> = rows[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    for i in 0..re.len() {
        let j = re.len() - 1 - i;
        assert!(
            (re[i] - re[j]).abs() < 1e-12,
            "reflection symmetry: G(s_{i}) = {} vs G(beta - s_{i}) = {}",
            re[i],
            re[j]
        );
    }
    // the cross-check column stays at rounding level for real words
    for row in &rows[1..] {
        let chardiff: f64 = row[4].parse().unwrap();
        assert!(chardiff <= 1e-10, "chardiff {chardiff}");
        assert_eq!(row[5], "ok");
    }
}

#[test]
fn green_reports_row_level_errors_for_out_of_range_times() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("g.conf");
    write(
        &conf,
        "[model]\nvariant = harmonic_crystal\nside = 2\ndim = 1\n\n[thermal]\nbeta = 1.0\n\n\
         [green]\nletters = e0,e1\ntimes = 0.0,sweep\nsweep_start = 0.5\nsweep_stop = 1.5\nsweep_points = 3\n",
    );
    let output = bin().args(["green", "--config"]).arg(&conf).output().unwrap();
    assert!(output.status.success(), "row errors are data, not command failure");
    let text = String::from_utf8(output.stdout).unwrap();
    let statuses: Vec<&str> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').next_back().unwrap())
        .collect();
    assert_eq!(statuses, ["ok", "ok", "error:TimeOutOfRange"]);
}

#[test]
fn quadrature_models_take_profile_letters_and_reject_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("mink.conf");
    write(
        &conf,
        "[model]\nvariant = minkowski\nspace_dim = 3\nmass = 1.0\nweight = field\nnodes = 96\n\n         [thermal]\nbeta = 2.0\n\n         [green]\nletters = gauss:1.0,gauss:0.7:2.0\ntimes = 0.0,sweep\nsweep_points = 5\n",
    );
    let output = bin().args(["green", "--config"]).arg(&conf).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert_eq!(text.lines().count(), 2 + 5);
    for line in text.lines().skip(2) {
        assert!(line.ends_with(",ok"), "unexpected row {line}");
    }

    // the sampler needs a matrix-kind model: capability errors are usage errors
    let status = bin()
        .args(["sample", "--config"])
        .arg(&conf)
        .args(["--samples", "10"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // basis letters are rejected on quadrature models with a clear message
    write(
        &conf,
        "[model]\nvariant = minkowski\n\n[thermal]\nbeta = 2.0\n\n         [green]\nletters = e0\ntimes = 0.0\n",
    );
    let output = bin().args(["green", "--config"]).arg(&conf).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8(output.stderr).unwrap().contains("matrix-kind"));
}

#[test]
fn boost_letters_weight_the_wedge_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("wedge.conf");
    // rindler defaults to beta = 2 pi when [thermal] is absent
    write(
        &conf,
        "[model]\nvariant = rindler\nmass = 1.0\nhalf_width = 4.0\ngrid = 24\n\n         [green]\nletters = boost:e3,boost:e3\ntimes = 0.0,sweep\nsweep_points = 7\n",
    );
    let output = bin().args(["green", "--config"]).arg(&conf).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8(output.stdout).unwrap();
    let re: Vec<f64> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(re.len(), 7);
    // reflection symmetry across the default beta = 2 pi sweep
    for i in 0..re.len() {
        let j = re.len() - 1 - i;
        assert!((re[i] - re[j]).abs() < 1e-12);
    }
    // the weighted letters genuinely differ from the raw ones
    write(
        &conf,
        "[model]\nvariant = rindler\nmass = 1.0\nhalf_width = 4.0\ngrid = 24\n\n         [green]\nletters = e3,e3\ntimes = 0.0,sweep\nsweep_points = 7\n",
    );
    let output = bin().args(["green", "--config"]).arg(&conf).output().unwrap();
    assert!(output.status.success());
    let raw_text = String::from_utf8(output.stdout).unwrap();
    let raw_re: Vec<f64> = raw_text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!((re[0] - raw_re[0]).abs() > 1e-6, "boost weight must change the kernel");
}

#[test]
fn verify_report_roundtrip_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("ok.conf");
    write(&conf, CRYSTAL);
    let report = dir.path().join("report.json");
    let status = bin()
        .args(["verify", "--config"])
        .arg(&conf)
        .args(["--out"])
        .arg(&report)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let rendered = bin().args(["report", "--input"]).arg(&report).output().unwrap();
    assert_eq!(rendered.status.code(), Some(0));
    assert!(String::from_utf8(rendered.stdout).unwrap().contains("all checks pass"));

    // corrupted fixture: verify exits 1 and the stored report renders as 1
    let bad_conf = dir.path().join("bad.conf");
    write(
        &bad_conf,
        "[model]\nvariant = harmonic_crystal\nside = 2\ndim = 1\n\n[thermal]\nbeta = 1.0\n\n\
         [checks]\ncorrupt_b = true\nsampler = false\n",
    );
    let bad_report = dir.path().join("bad.json");
    let status = bin()
        .args(["verify", "--config"])
        .arg(&bad_conf)
        .args(["--out"])
        .arg(&bad_report)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let rendered = bin().args(["report", "--input"]).arg(&bad_report).output().unwrap();
    assert_eq!(rendered.status.code(), Some(1));

    // usage errors exit 2
    let status = bin()
        .args(["verify", "--config", "/nonexistent/path.conf"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bin()
        .args(["verify", "--config"])
        .arg(&conf)
        .args(["--tolerance", "no_such_check=1e-3"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn verify_reports_are_reproducible_and_beta_overridable() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("m.conf");
    write(&conf, CRYSTAL);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let status = bin()
            .args(["verify", "--config"])
            .arg(&conf)
            .args(["--out"])
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    // --beta overrides the config value and lands in the report
    let c = dir.path().join("c.json");
    let status = bin()
        .args(["verify", "--config"])
        .arg(&conf)
        .args(["--beta", "2.5", "--out"])
        .arg(&c)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&c).unwrap()).unwrap();
    assert_eq!(report["beta"], "2.5");
}

#[test]
fn custom_matrix_ingestion_rejections_name_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("h.txt");
    let conf = dir.path().join("m.conf");
    write(
        &conf,
        &format!(
            "[model]\nvariant = matrix\nfile = {}\n\n[thermal]\nbeta = 1.0\n\n[checks]\nsampler = false\n",
            matrix.display()
        ),
    );

    write(&matrix, "2\n1.0 0.3\n0.3 0.8\n");
    let status = bin().args(["verify", "--config"]).arg(&conf).status().unwrap();
    assert_eq!(status.code(), Some(0));

    // asymmetric input is a config-level rejection naming the invariant
    write(&matrix, "2\n1.0 0.5\n0.3 0.8\n");
    let output = bin().args(["verify", "--config"]).arg(&conf).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8(output.stderr).unwrap().contains("not symmetric"));

    // indefinite input names the spectrum invariant
    write(&matrix, "2\n1.0 0.0\n0.0 -0.5\n");
    let output = bin().args(["verify", "--config"]).arg(&conf).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8(output.stderr)
        .unwrap()
        .contains("not strictly positive"));
}
