use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn sharkov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sharkov"))
        .args(args)
        .current_dir(data(""))
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

/// Compares against `tests/golden/<name>`; `SHARKOV_BLESS=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("SHARKOV_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden file {name} differs");
}

#[test]
fn order_commands() {
    let out = sharkov(&["order", "compare", "3", "5"]);
    assert_eq!((code(&out), stdout(&out)), (0, "3 ◁ 5\n".into()));
    let out = sharkov(&["order", "compare", "7", "7"]);
    assert_eq!((code(&out), stdout(&out)), (0, "equal\n".into()));
    let out = sharkov(&["order", "compare", "1", "2"]);
    assert_eq!(stdout(&out), "2 ◁ 1\n");
    let out = sharkov(&["order", "chain", "--max", "12"]);
    assert_eq!(stdout(&out), "3 ◁ 5 ◁ 7 ◁ 9 ◁ 11 ◁ 6 ◁ 10 ◁ 12 ◁ 8 ◁ 4 ◁ 2 ◁ 1\n");
    let out = sharkov(&["order", "forced", "4", "--bound", "8"]);
    assert_eq!(stdout(&out), "1 2\n");
}

#[test]
fn star_compare_exit_codes() {
    let out = sharkov(&["order", "star-compare", "alternating.txt", "prefix=[];cycle=[5]"]);
    assert_eq!((code(&out), stdout(&out)), (3, "ultrafilter-dependent\n".into()));
    let out = sharkov(&["order", "star-compare", "prefix=[];cycle=[3]", "prefix=[];cycle=[5]"]);
    assert_eq!((code(&out), stdout(&out)), (0, "holds\n".into()));
    let out = sharkov(&["order", "star-compare", "prefix=[];cycle=[5]", "prefix=[];cycle=[3]"]);
    assert_eq!((code(&out), stdout(&out)), (1, "fails\n".into()));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&sharkov(&["order", "compare", "x", "3"])), 2);
    assert_eq!(code(&sharkov(&["order", "compare", "0", "3"])), 2);
    assert_eq!(code(&sharkov(&["hyper", "add", "prefix=[1];cycle=[]", "prefix=[];cycle=[1]"])), 2);
    assert_eq!(code(&sharkov(&["map", "eval", "missing.map", "--x", "0.5"])), 2);
    assert_eq!(code(&sharkov(&["frobnicate"])), 2);
}

#[test]
fn hyper_commands() {
    let out = sharkov(&["hyper", "add", "prefix=[1];cycle=[2]", "prefix=[];cycle=[0.5]"]);
    assert_eq!(stdout(&out), "prefix=[1.5];cycle=[2.5]\n");
    let out = sharkov(&["hyper", "mul", "prefix=[];cycle=[2,3]", "prefix=[];cycle=[4]"]);
    assert_eq!(stdout(&out), "prefix=[];cycle=[8,12]\n");
    let out = sharkov(&["hyper", "order", "prefix=[];cycle=[0,2]", "prefix=[];cycle=[1]"]);
    assert_eq!((code(&out), stdout(&out)), (3, "ultrafilter-dependent\n".into()));
    let out = sharkov(&["hyper", "order", "--le", "prefix=[5];cycle=[1]", "prefix=[];cycle=[1]"]);
    assert_eq!(code(&out), 0);
    let out = sharkov(&["hyper", "classify", "prefix=[3];cycle=[0]"]);
    assert_eq!(stdout(&out), "infinitesimal\n");
    let out = sharkov(&["hyper", "shadow", "prefix=[9,9];cycle=[0.25]"]);
    assert_eq!(stdout(&out), "0.25\n");
    assert_eq!(code(&sharkov(&["hyper", "shadow", "prefix=[];cycle=[0,1]"])), 2);
    let out = sharkov(&["hyper", "close", "prefix=[1];cycle=[0]", "prefix=[];cycle=[0]"]);
    assert_eq!((code(&out), stdout(&out)), (0, "holds\n".into()));
}

#[test]
fn map_commands() {
    let out = sharkov(&["map", "iterate", "tent.map", "--x", "0.28", "--k", "3"]);
    let y: f64 = stdout(&out).trim().parse().unwrap();
    assert!((y - 0.24).abs() < 1e-12);
    let out = sharkov(&["map", "norm-dist", "tent.map", "tent.map"]);
    assert_eq!((code(&out), stdout(&out)), (0, "0\n".into()));
    let out = sharkov(&["map", "eval", "tent.map", "--x", "1.5"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("1.5"));

    let out = sharkov(&["map", "sample", "tent.map", "--points", "3"]);
    assert_eq!(stdout(&out), "x,y\n0,0\n0.5,1\n1,0\n");
    let a = stdout(&sharkov(&["map", "sample", "tent.map", "--random", "--seed", "7", "--points", "20"]));
    let b = stdout(&sharkov(&["map", "sample", "tent.map", "--random", "--seed", "7", "--points", "20"]));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 21);

    let out = sharkov(&["map", "power", "tent.map", "--k", "2"]);
    assert_eq!(stdout(&out), "domain 0 1\nnodes 0 0.25 0.5 0.75 1\nvalues 0 1 0 1 0\n");
}

#[test]
fn detect_commands() {
    let out = sharkov(&["detect", "periods", "tent.map", "--p", "3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("0.2857142857142857"));
    let out = sharkov(&["detect", "periods", "tent.map", "--p", "3", "--json"]);
    golden("tent_periods_3.json", &stdout(&out));

    let out = sharkov(&["detect", "first-return", "tent.map", "--x0", "0.2857142857142857", "--radius", "0.02"]);
    assert_eq!(stdout(&out), "3\n");
    let out = sharkov(&["detect", "forcing", "tent.map", "--p", "3", "--bound", "8", "--json"]);
    assert_eq!(code(&out), 0);
    golden("tent_forcing_3_8.json", &stdout(&out));
}

#[test]
fn perturb_worked_example() {
    let out = sharkov(&["perturb", "tent.map", "--x0", "0.28", "--delta", "0.05", "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["certificate"]["passed"], true);
    assert_eq!(v["plan"]["inputs"]["y"], 0.28);
    assert_eq!(v["plan"]["inputs"]["return_time"], 3);
    let d = v["plan"]["displacement"].as_f64().unwrap();
    assert!((d - 0.04).abs() < 1e-12, "{d}");
}

#[test]
fn pipeline_tent_golden() {
    let dir = std::env::temp_dir().join(format!("sharkov-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let report = dir.join("report.json");
    let out = sharkov(&["pipeline", "run", "tent.toml", "--out", report.to_str().unwrap(), "--summary"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("status: pass"));
    let json = fs::read_to_string(&report).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["report_version"], 1);
    assert_eq!(v["status"], "pass");
    golden("tent_report.json", &json);

    let again = sharkov(&["pipeline", "run", "tent.toml"]);
    assert_eq!(stdout(&again), json);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn pipeline_rejections() {
    let out = sharkov(&["pipeline", "run", "same_periods.toml", "--summary"]);
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("rejected-at-order-gate"));
    assert_eq!(code(&sharkov(&["pipeline", "run", "missing_map.toml"])), 2);
    assert_eq!(code(&sharkov(&["pipeline", "run", "no_such_config.toml"])), 2);
}

#[test]
fn thread_cap() {
    let out = Command::new(env!("CARGO_BIN_EXE_sharkov"))
        .args(["detect", "periods", "tent.map", "--p", "13", "--grid", "65536", "--json"])
        .current_dir(data(""))
        .env("SHARKOV_THREADS", "1")
        .output()
        .unwrap();
    let many = sharkov(&["detect", "periods", "tent.map", "--p", "13", "--grid", "65536", "--json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(out.stdout, many.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_sharkov"))
        .args(["order", "compare", "3", "5"])
        .env("SHARKOV_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn fine_grid_finds_all_period_13_orbits() {
    let out = sharkov(&["detect", "periods", "tent.map", "--p", "13", "--grid", "65536"]);
    assert!(stdout(&out).starts_with("630 orbit(s) of period 13\n"));
}
