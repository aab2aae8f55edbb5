use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supnorm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exponents_report() {
    let o = run(&["exponents", "--kappa", "3/20"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("max 17/20"), "{s}");
    assert!(s.contains("hybrid theta=20/29 c=3/58"), "{s}");
    assert!(s.contains("i,beta,value"), "{s}");
}

#[test]
fn lipschitz_count() {
    let o = run(&["count", "--builtin", "lipschitz", "--ell", "3"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("\"count\":32"), "{}", stdout(&o));
}

#[test]
fn unknown_builtin_exits_2() {
    let o = run(&["reduce", "--builtin", "no-such-form"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn amplify_independent_of_threads() {
    let a = run(&["amplify", "--builtin", "hurwitz", "-L", "4", "--threads", "1"]);
    let b = run(&["amplify", "--builtin", "hurwitz", "-L", "4", "--threads", "8"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn decay_scan_writes_artifacts() {
    let dir = std::env::temp_dir().join(format!("supnorm-cli-{}", std::process::id()));
    let o = run(&["decay-scan", "--m-max", "20", "--t-points", "11", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.join("decay_scan.csv").exists());
    assert!(dir.join("decay_summary.json").exists());
    let _ = std::fs::remove_dir_all(dir);
}
