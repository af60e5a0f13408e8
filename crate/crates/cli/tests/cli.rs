use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_biphoton"));
    c.env_remove("BIPHOTON_SCENARIO_DIR").env("RUST_LOG", "off");
    c
}

fn here() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests")
}

fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .current_dir(here())
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Golden cases: file stem and arguments. Kept small so the suite is fast.
const GOLDEN: &[(&str, &[&str])] = &[
    (
        "tuning_curve",
        &["tuning-curve", "--scenario", "paper-fig1", "--points", "18"],
    ),
    (
        "amplitude_map",
        &["amplitude-map", "--points", "9", "--half-range-mrad", "4"],
    ),
    (
        "amplitude_map_internal",
        &[
            "amplitude-map",
            "--points",
            "5",
            "--frame",
            "internal",
            "--signal-nm",
            "650",
        ],
    ),
    (
        "overlap_alpha",
        &[
            "overlap-alpha",
            "--scenario",
            "paper-fig5",
            "--points",
            "21",
            "--max-deg",
            "0.05",
        ],
    ),
    (
        "overlap_z",
        &["overlap-z", "--scenario", "paper-fig6", "--points", "11"],
    ),
    (
        "spectral_overlap",
        &[
            "spectral-overlap",
            "--scenario",
            "paper-fig6",
            "--step-nm",
            "10",
            "--nodes",
            "65",
        ],
    ),
    ("rates", &["rates", "--scenario", "paper-sec2"]),
    ("enhancement", &["enhancement", "--scenario", "paper-sec2"]),
    (
        "upconversion",
        &["upconversion-estimate", "--scenario", "paper-sec2"],
    ),
    (
        "sensitization",
        &[
            "simulate-sensitization",
            "--scenario",
            "paper-fig8",
            "--sample-interval-s",
            "10",
        ],
    ),
    (
        "sensitization_noisy",
        &[
            "simulate-sensitization",
            "--scenario",
            "paper-fig8",
            "--illuminate-s",
            "120",
            "--dark-s",
            "0",
            "--noise",
            "0.02",
            "--seed",
            "3",
            "--sample-interval-s",
            "20",
        ],
    ),
    (
        "fit_decay",
        &[
            "fit-decay",
            "--scenario",
            "paper-fig8",
            "fixtures/dark_relaxation.csv",
        ],
    ),
    (
        "response_scan",
        &[
            "response-scan",
            "--scenario",
            "paper-fig8",
            "--points",
            "21",
        ],
    ),
    ("scenarios", &["scenarios"]),
];

fn golden_path(stem: &str) -> PathBuf {
    here().join("golden").join(format!("{stem}.csv"))
}

#[test]
fn outputs_match_goldens() {
    let bless = std::env::var_os("BLESS").is_some();
    let mut mismatched = Vec::new();
    for (stem, args) in GOLDEN {
        let got = stdout_of(args);
        let path = golden_path(stem);
        if bless {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &got).unwrap();
            continue;
        }
        let want = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("{}: {e} (run with BLESS=1 to create)", path.display()));
        if got != want {
            mismatched.push(*stem);
        }
    }
    assert!(
        mismatched.is_empty(),
        "outputs differ from goldens: {mismatched:?}"
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    for (_, args) in GOLDEN {
        assert_eq!(stdout_of(args), stdout_of(args), "{args:?}");
    }
}

#[test]
fn seed_changes_noise_only() {
    let a = stdout_of(&[
        "simulate-sensitization",
        "--scenario",
        "paper-fig8",
        "--noise",
        "0.01",
        "--seed",
        "1",
        "--dark-only",
        "--sample-interval-s",
        "50",
    ]);
    let b = stdout_of(&[
        "simulate-sensitization",
        "--scenario",
        "paper-fig8",
        "--noise",
        "0.01",
        "--seed",
        "2",
        "--dark-only",
        "--sample-interval-s",
        "50",
    ]);
    assert_ne!(a, b);
    let clean = |s: &str| s.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(clean(&a), clean(&b));
}

#[test]
fn validation_errors_exit_with_one() {
    for args in [
        &["tuning-curve", "--lambda-min", "0"][..],
        &["tuning-curve", "--bogus"],
        &["--scenario", "no-such-scenario", "rates"],
        &["amplitude-map", "--frame", "sideways"],
        &["rates", "--eta2", "1.5"],
        &[
            "simulate-sensitization",
            "--scenario",
            "paper-fig8",
            "--step-s",
            "2",
        ],
        &["fit-decay", "missing.csv"],
        &["tuning-curve", "--svg"],
    ] {
        let out = run(args);
        assert_eq!(
            out.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn no_phase_matching_solution_exits_with_two() {
    // Below the degenerate cut the tuning curve has no points at all.
    let dir = tempdir("nosolution");
    let toml = dir.join("far.toml");
    std::fs::write(
        &toml,
        "[crystal]\npreset = \"bbo\"\ncut_angle_deg = 30.0\n[pump]\nwavelength_nm = 351.1\nbeam_diameter_um = 100\n",
    )
    .unwrap();
    let out = run(&[
        "--scenario",
        toml.to_str().unwrap(),
        "tuning-curve",
        "--lambda-min",
        "690",
        "--lambda-max",
        "700",
        "--points",
        "3",
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn tempdir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("biphoton-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn out_and_svg_files_are_written() {
    let dir = tempdir("svg");
    let out = dir.join("curve.csv");
    let status = run(&[
        "tuning-curve",
        "--points",
        "7",
        "--out",
        out.to_str().unwrap(),
        "--svg",
    ])
    .status;
    assert!(status.success());
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .contains("lambda_s_nm,"));
    assert!(std::fs::read_to_string(dir.join("curve.svg"))
        .unwrap()
        .starts_with("<svg"));
}

fn table(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|c| c.parse().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    (header, rows)
}

#[test]
fn fit_recovers_lifetimes_from_the_noisy_fixture() {
    let dir = tempdir("fit");
    let res = dir.join("residuals.csv");
    let text = stdout_of(&[
        "fit-decay",
        "--scenario",
        "paper-fig8",
        "fixtures/dark_relaxation.csv",
        "--residuals",
        res.to_str().unwrap(),
    ]);
    let (header, rows) = table(&text);
    let col = |name: &str| rows[0][header.iter().position(|h| h == name).unwrap()];
    assert!((col("tau1_s") / 100.0 - 1.0).abs() < 0.05, "{text}");
    assert!((col("tau2_s") / 5.0 - 1.0).abs() < 0.05, "{text}");
    let (rh, rr) = table(&std::fs::read_to_string(res).unwrap());
    assert_eq!(rh, ["time_s", "value", "model", "residual"]);
    assert_eq!(rr.len(), 401);
}

#[test]
fn flat_trace_is_reported_as_a_numerical_failure() {
    let dir = tempdir("flat");
    let input = dir.join("flat.csv");
    let mut text = String::from("time_s,value\n");
    for k in 0..50 {
        text.push_str(&format!("{k},2.0\n"));
    }
    std::fs::write(&input, text).unwrap();
    let out = run(&["fit-decay", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let (header, rows) = table(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(header[0], "a1");
    assert_eq!(rows.len(), 1);
}

#[test]
fn scenario_files_resolve_from_the_environment_directory() {
    let dir = tempdir("envdir");
    std::fs::write(dir.join("mine.toml"), "[detection]\neta2 = 0.5\nspot_diameter_um = 35\nlength_mm = 1\n[coherent]\nintensity_w_m2 = 5\nwavelength_nm = 702\nsolid_angle_sr = 3e-4\nbandwidth_rad_s = 4e13\n[biphoton]\nintensity_w_m2 = 5\nwavelength_nm = 702\nsolid_angle_sr = 1e-2\nbandwidth_rad_s = 6.5e14\n").unwrap();
    let out = bin()
        .args(["--scenario", "mine", "rates"])
        .env("BIPHOTON_SCENARIO_DIR", &dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("# eta2=0.5"));
}
