use std::process::Command;

use entropyforge::cli::run;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("entropyforge").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn degrees_csv_ends_with_the_reported_degrees() {
    let (code, out, _) = call(&[
        "degrees",
        "--family",
        "kmt_reduction",
        "-p",
        "k=2,l=3",
        "--steps",
        "13",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "n,d_n,ratio");
    assert_eq!(lines.len(), 14);
    assert!(lines[13].starts_with("12,1562,"), "{}", lines[13]);
    assert!(lines[12].starts_with("11,681,"));
}

#[test]
fn classify_reports_a_salem_number() {
    let (code, out, _) = call(&[
        "classify", "--family", "P_ell", "-p", "k=3,l=3", "--format", "json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schemaVersion"], 1);
    assert_eq!(v["flags"]["salem"], true);
    let d = v["dynamicalDegree"].as_f64().unwrap();
    assert!((d - 3.254263634).abs() < 1e-6, "{d}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let (code, out, err) = call(&["degrees", "--badflag"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("Usage"), "{err}");
    assert!(err.contains("grammar"));
}

#[test]
fn unknown_family_and_bad_syntax_are_usage_errors() {
    assert_eq!(call(&["degrees", "--family", "nope"]).0, 2);
    let (code, _, err) = call(&["degrees", "--expr", "x[n+1] = x[n] +"]);
    assert_eq!(code, 2);
    assert!(err.contains("line 1"), "{err}");
    assert_eq!(call(&["degrees"]).0, 2);
}

#[test]
fn help_and_version_succeed() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, 0);
    for sub in [
        "degrees",
        "singularity",
        "derive",
        "charpoly",
        "classify",
        "lattice",
        "reduce",
        "conserve",
        "reproduce",
    ] {
        assert!(out.contains(sub), "{sub}");
    }
    assert_eq!(call(&["--version"]).0, 0);
}

#[test]
fn expected_confinement_failure_exits_one() {
    let args = [
        "singularity",
        "--family",
        "mult_example",
        "-p",
        "a=2",
        "--expect-confined",
    ];
    assert_eq!(call(&args).0, 1);
    let args = [
        "singularity",
        "--family",
        "mult_example",
        "-p",
        "a=-1",
        "--expect-confined",
    ];
    let (code, out, _) = call(&args);
    assert_eq!(code, 0);
    assert!(out.contains("{0, ∞, ∞^2, ∞, 0}"));
}

#[test]
fn json_output_is_deterministic() {
    let args = [
        "degrees", "--family", "hv_full", "--steps", "8", "--format", "json", "--seed", "7",
    ];
    let a = call(&args);
    let b = call(&args);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    let args = [
        "lattice",
        "evolve",
        "--family",
        "kdv_lattice",
        "--size",
        "3",
        "--format",
        "csv",
    ];
    assert_eq!(call(&args).1, call(&args).1);
}

#[test]
fn output_file_receives_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let (code, out, _) = call(&[
        "charpoly",
        "--terms",
        "3:1,2:-2,1:-2,0:1",
        "--format",
        "csv",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("x^3 - 2*x^2 - 2*x + 1"), "{text}");
}

#[test]
fn definition_files_are_read() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("qrt.txt");
    std::fs::write(&path, "x[n+1]*x[n-1] = 1 - a[n]/x[n]\na: const 2\n").unwrap();
    let (code, out, _) = call(&[
        "singularity",
        "--file",
        path.to_str().unwrap(),
        "--entry",
        "a",
    ]);
    assert_eq!(code, 0);
    assert!(
        out.contains("{0, ∞, ∞, 0}") && out.contains("Confined"),
        "{out}"
    );
}

#[test]
fn reduction_and_conservation_succeed() {
    let (code, out, _) = call(&[
        "reduce",
        "--family",
        "kmt_lattice",
        "-p",
        "k=2,l=2",
        "-l",
        "2",
        "--validate",
        "4",
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("agree: true"));
    let (code, out, _) = call(&["conserve", "--family", "kmt_reduction", "-p", "k=2,l=2"]);
    assert_eq!(code, 0);
    assert!(out.contains("constant: true"));
    let (code, _, err) = call(&["conserve", "--family", "kmt_reduction", "-p", "k=2,l=3"]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn reproduce_runs_selected_criteria() {
    let (code, out, _) = call(&["reproduce", "--only", "3,9", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schemaVersion"], 1);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 2);
    assert_eq!(call(&["reproduce", "--only", "11"]).0, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_entropyforge");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["charpoly", "--terms", "1:1,0:-1"]), Some(0));
    assert_eq!(status(&["degrees", "--badflag"]), Some(2));
    assert_eq!(
        status(&[
            "singularity",
            "--family",
            "mult_example",
            "-p",
            "a=2",
            "--expect-confined"
        ]),
        Some(1)
    );
}

#[test]
fn seed_environment_variable_is_read() {
    let bin = env!("CARGO_BIN_EXE_entropyforge");
    let run = |seed: &str| {
        Command::new(bin)
            .args([
                "lattice",
                "evolve",
                "--family",
                "kdv_lattice",
                "--size",
                "2",
                "--format",
                "csv",
            ])
            .env("ENTROPYFORGE_SEED", seed)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
    let bad = Command::new(bin)
        .args([
            "lattice",
            "evolve",
            "--family",
            "kdv_lattice",
            "--size",
            "2",
        ])
        .env("ENTROPYFORGE_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
