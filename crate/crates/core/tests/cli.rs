use std::path::Path;
use std::process::Command;

use cantor_density::cli::{exit, run};
use cantor_density::density::Certificate;
use cantor_density::enclosure::rational;
use cantor_density::io::sequence_to_json;
use cantor_density::{LambdaSequence, Precision};

const TARGET: &str = "max(1/2, 1 - sqrt(x))";

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cantor(args: &[&str]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("cantor").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synthesize(dir: &Path, depth: &str) -> std::path::PathBuf {
    let seq = dir.join("sequence.json");
    let o = cantor(&["synthesize", "--f", TARGET, "--depth", depth, "--out", path_str(&seq)]);
    assert_eq!(o.code, exit::SUCCESS, "{}", o.stderr);
    seq
}

#[test]
fn synthesize_writes_a_sequence_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("sequence.json");
    let o = cantor(&["synthesize", "--f", TARGET, "--depth", "14", "--out", path_str(&seq)]);
    assert_eq!(o.code, exit::SUCCESS, "{}", o.stderr);
    assert!(o.stdout.contains("lambda_n"));
    assert!(o.stdout.contains("measure in ["));
    let text = std::fs::read_to_string(&seq).unwrap();
    let parsed = cantor_density::io::sequence_from_json(&text).unwrap();
    assert_eq!(parsed.depth(), 14);
    assert_eq!(sequence_to_json(&parsed).unwrap(), text);

    let again = dir.path().join("again.json");
    cantor(&["synthesize", "--f", TARGET, "--depth", "14", "--out", path_str(&again)]);
    assert_eq!(std::fs::read_to_string(&again).unwrap(), text);
}

#[test]
fn synthesize_rejections_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = cantor(&["synthesize", "--f", "1/2", "--out", path_str(&out)]);
    assert_eq!(o.code, exit::SYNTHESIS);
    assert!(o.stderr.contains("invalid target"));
    assert_eq!(cantor(&["synthesize", "--f", "1 - x", "--depth", "0"]).code, exit::USAGE);
    assert_eq!(cantor(&["synthesize", "--f", "1 - x", "--depth", "21"]).code, exit::USAGE);
    assert_eq!(cantor(&["synthesize", "--f", "1 - (x"]).code, exit::USAGE);
    assert_eq!(cantor(&["synthesize"]).code, exit::USAGE);
    assert_eq!(cantor(&["frobnicate"]).code, exit::USAGE);
    assert_eq!(cantor(&["synthesize", "--f", "1", "--table", "t.csv"]).code, exit::USAGE);
    let help = cantor(&["--help"]);
    assert_eq!(help.code, exit::SUCCESS);
    assert!(help.stdout.contains("CANTOR_PRECISION"));
    assert!(help.stdout.contains("Exit codes"));
}

#[test]
fn synthesize_from_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("f.csv");
    let mut rows = String::from("# x, f(x)\n");
    for k in (0..=60).rev() {
        let x = 2f64.powi(-k);
        rows.push_str(&format!("{x:e}, {}\n", (1.0 - x.sqrt()).max(0.5)));
    }
    std::fs::write(&table, rows).unwrap();
    let out = dir.path().join("s.json");
    let o = cantor(&["synthesize", "--table", path_str(&table), "--depth", "10", "--out", path_str(&out)]);
    assert_eq!(o.code, exit::SUCCESS, "{}", o.stderr);
}

#[test]
fn verify_passes_for_the_synthesized_target() {
    let dir = tempfile::tempdir().unwrap();
    let seq = synthesize(dir.path(), "12");
    let cert = dir.path().join("cert.json");
    let csv = dir.path().join("profile.csv");
    let o = cantor(&[
        "verify", "--sequence", path_str(&seq), "--f", TARGET, "--out", path_str(&cert), "--csv", path_str(&csv),
        "--band-samples", "20", "--oracle-samples", "8",
    ]);
    assert_eq!(o.code, exit::SUCCESS, "{}\n{}", o.stdout, o.stderr);
    assert!(o.stdout.contains("HOLDS"));
    let text = std::fs::read_to_string(&cert).unwrap();
    let parsed = Certificate::from_json(&text).unwrap();
    assert!(parsed.holds);
    assert_eq!(parsed.to_json().unwrap(), text);
    let profile = std::fs::read_to_string(&csv).unwrap();
    assert!(profile.starts_with("s_num,s_den,phi_lo,phi_hi,f_lo,f_hi,margin\n"));
    assert_eq!(profile.lines().count(), 1 + 128);
}

#[test]
fn verify_fails_below_the_measure() {
    let dir = tempfile::tempdir().unwrap();
    let seq = synthesize(dir.path(), "10");
    let cert = dir.path().join("cert.json");
    // the set has measure about 0.2224, so 1/9 is below |C| / 2
    let o = cantor(&[
        "verify", "--sequence", path_str(&seq), "--f", "1/9", "--out", path_str(&cert), "--band-samples", "5",
        "--oracle-samples", "4",
    ]);
    assert_eq!(o.code, exit::CERTIFICATE);
    assert!(o.stderr.contains("certificate failed"));
    let cert = Certificate::from_json(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    assert!(!cert.holds);
    let last = cert.samples.last().unwrap();
    assert_eq!(last.s, rational(1, 1));
    assert_eq!(last.verdict, cantor_density::density::Verdict::Fail);
}

#[test]
fn verify_fails_for_a_measure_zero_set() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("thirds.json");
    let constant = LambdaSequence::constant(rational(1, 3), 10, Precision::default()).unwrap();
    std::fs::write(&seq, sequence_to_json(&constant).unwrap()).unwrap();
    let o = cantor(&["verify", "--sequence", path_str(&seq), "--f", "1", "--band-samples", "5", "--oracle-samples", "4"]);
    assert_eq!(o.code, exit::CERTIFICATE);
    assert!(o.stderr.contains("measure"));
}

#[test]
fn verify_reports_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(cantor(&["verify", "--sequence", path_str(&missing), "--f", TARGET]).code, exit::NO_INPUT);
    assert_eq!(cantor(&["verify", "--f", TARGET]).code, exit::USAGE);
}

#[test]
fn levels_svg_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = cantor(&["levels", "--lambda", "1/3,1/3", "--n", "2"]);
    assert_eq!(o.code, exit::SUCCESS);
    assert!(o.stdout.starts_with("<svg"));
    assert_eq!(o.stdout.matches(r#"y="90""#).count(), 4);
    for x in ["0", "133", "400", "533"] {
        assert!(o.stdout.contains(&format!(r#"<rect x="{x}" y="90""#)));
    }

    let zero = cantor(&["levels", "--lambda", "1/3", "--n", "0"]);
    assert!(zero.stdout.contains(r#"height="40""#));
    assert_eq!(zero.stdout.matches("<rect ").count(), 2);

    let (svg, csv) = (dir.path().join("l.svg"), dir.path().join("l.csv"));
    let o = cantor(&["levels", "--lambda", "1/3,1/3", "--svg", path_str(&svg), "--csv", path_str(&csv)]);
    assert_eq!(o.code, exit::SUCCESS);
    let csv = std::fs::read_to_string(&csv).unwrap();
    assert!(csv.contains("\n2,3,2,3,7,9,"));
    assert!(std::fs::read_to_string(&svg).unwrap().ends_with("</svg>\n"));
}

#[test]
fn levels_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(cantor(&["levels", "--sequence", path_str(&empty)]).code, exit::NO_INPUT);
    let deep = vec!["1/3"; 12].join(",");
    assert_eq!(cantor(&["levels", "--lambda", &deep, "--n", "11"]).code, exit::USAGE);
    assert_eq!(cantor(&["levels", "--lambda", "1/3,1/2"]).code, exit::USAGE);
    assert_eq!(cantor(&["levels"]).code, exit::USAGE);
}

#[test]
fn curve_on_the_circle_does_not_attain() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    let o = cantor(&["curve", "--name", "circle", "--csv", path_str(&csv)]);
    assert_eq!(o.code, exit::SUCCESS, "{}", o.stderr);
    let sup = |label: &str| -> (f64, bool) {
        let line = o.stdout.lines().find(|l| l.starts_with(label)).unwrap();
        let sup: f64 = line.split_whitespace().nth(3).unwrap().parse().unwrap();
        (sup, line.contains("attained true"))
    };
    for label in ["F:", "H:"] {
        let (value, attained) = sup(label);
        assert!((0.99..1.0).contains(&value), "{label} {value}");
        assert!(!attained);
    }
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("t,s,quotient,chord,arc\n"));
}

#[test]
fn curve_demos_and_errors() {
    let line = cantor(&["curve", "--name", "line", "--distance-demo"]);
    assert_eq!(line.code, exit::SUCCESS, "{}", line.stderr);
    assert!(line.stdout.contains("attained true"));

    let parabola = cantor(&["curve", "--poly", "(t, t^2/2)", "--distance-demo", "--coarse", "50"]);
    assert_eq!(parabola.code, exit::SUCCESS, "{}", parabola.stderr);
    assert!(parabola.stdout.contains("arc length: 1.147793"));

    let cusp = cantor(&["curve", "--poly", "(t^3, t^2)", "--domain=-1,1"]);
    assert_eq!(cusp.code, exit::CURVE);
    assert!(cusp.stderr.contains("derivative"));

    assert_eq!(cantor(&["curve", "--name", "torus"]).code, exit::USAGE);
    assert_eq!(cantor(&["curve", "--name", "circle", "--param", "radius"]).code, exit::USAGE);
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_config.json");
    let config = dir.path().join("config.json");
    let body = serde_json::json!({
        "precision": "2^-80",
        "synthesize": { "f": TARGET, "depth": 9, "out": out },
    });
    std::fs::write(&config, body.to_string()).unwrap();
    let o = cantor(&["synthesize", "--config", path_str(&config)]);
    assert_eq!(o.code, exit::SUCCESS, "{}", o.stderr);
    assert_eq!(cantor_density::io::sequence_from_json(&std::fs::read_to_string(&out).unwrap()).unwrap().depth(), 9);

    let o = cantor(&["synthesize", "--config", path_str(&config), "--depth", "7"]);
    assert_eq!(o.code, exit::SUCCESS);
    assert!(o.stdout.contains("depth: 7"));

    std::fs::write(&config, r#"{"levels": {"lamda": "1/3"}}"#).unwrap();
    let o = cantor(&["levels", "--config", path_str(&config)]);
    assert_eq!(o.code, exit::USAGE);
    assert!(o.stderr.contains("lamda"));
}

#[test]
fn precision_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_cantor");
    let out = dir.path().join("s.json");
    let status = Command::new(bin)
        .args(["synthesize", "--f", TARGET, "--depth", "6", "--out", path_str(&out)])
        .env("CANTOR_PRECISION", "2^-7")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(exit::USAGE));
    let status = Command::new(bin)
        .args(["synthesize", "--f", TARGET, "--depth", "6", "--out", path_str(&out)])
        .env("CANTOR_PRECISION", "2^-128")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(exit::SUCCESS));
}
