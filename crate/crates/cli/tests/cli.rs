use std::process::{Command, Output};

fn vmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vmm"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn radial_solve_succeeds() {
    let o = vmm(&["radial", "--eps", "0.05", "--grid", "100"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("err_L2 = "));
}

#[test]
fn bad_usage_exits_with_one() {
    assert_eq!(vmm(&["radial", "--grid", "many"]).status.code(), Some(1));
    assert_eq!(vmm(&["transmogrify"]).status.code(), Some(1));
    let o = vmm(&["radial", "--problem", "no-such-problem"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("radial-exp"));
    let o = vmm(&["sweep", "--eps-list", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(vmm(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_writes_its_table() {
    let path = std::env::temp_dir().join(format!("vmm-cli-{}.csv", std::process::id()));
    let o = vmm(&[
        "sweep",
        "--eps-list",
        "0.1,0.05",
        "--grid",
        "100",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(csv, stdout(&o));
    let rows: Vec<_> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("param,"));
}
