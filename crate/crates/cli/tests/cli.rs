use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ecadapt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecadapt")).args(args).output().expect("spawn ecadapt")
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/h2_kw20.kwb")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn curves(dir: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(dir.join("curves.csv")).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn empty_r_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecadapt(&["hamgen", "--basis", s(&fixture()), "--r", "2.0:1.0:0.1", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = ecadapt(&["run", "x.hamx", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hamgen_single_point_then_ed() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecadapt(&["hamgen", "--basis", s(&fixture()), "--r", "1.4", "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let files: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    let text = fs::read_to_string(&files[0]).unwrap();
    assert!(text.lines().any(|l| l == "n 20"));
    let kept = text.lines().find(|l| l.starts_with("kept ")).unwrap();
    assert_eq!(kept.split_whitespace().count() - 1, 20);

    let ed = ecadapt(&["ed", s(&files[0])]);
    assert!(ed.status.success());
    let e0: f64 = stdout(&ed).lines().next().unwrap().trim().parse().unwrap();
    assert!((-1.1745..=-1.15).contains(&e0), "{e0}");
}

#[test]
fn duplicate_basis_term_is_dropped_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture()).unwrap();
    let first = text.lines().find(|l| l.starts_with("term ")).unwrap().to_string();
    let basis = dir.path().join("dup.kwb");
    fs::write(&basis, format!("{text}{first}\n")).unwrap();
    let out = ecadapt(&["hamgen", "--basis", s(&basis), "--r", "1.4", "--out", s(&dir.path().join("h"))]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).to_lowercase().contains("repeat"), "{}", stderr(&out));
    assert!(stdout(&out).contains("kept=20"), "{}", stdout(&out));
}

#[test]
fn ed_prints_full_precision_and_annotates_padding() {
    let dir = tempfile::tempdir().unwrap();
    let two = dir.path().join("two.hamx");
    fs::write(&two, "HAMX 1\nn 2\nqubits 1\nR 0\nsym none\nH\n1\n0 2\n").unwrap();
    let out = ecadapt(&["ed", s(&two)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let lines: Vec<String> = stdout(&out).lines().map(str::to_string).collect();
    assert_eq!(lines, ["1.0000000000000000e0", "2.0000000000000000e0"]);

    let padded = dir.path().join("padded.hamx");
    fs::write(&padded, "HAMX 1\nn 4\nqubits 2\nR 0\nsym none\nphys 3\nH\n1\n0.5 2\n0 0 3\n0 0 0 9\n").unwrap();
    let out = ecadapt(&["ed", s(&padded)]);
    let lines: Vec<String> = stdout(&out).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[3].ends_with("pad"), "{lines:?}");
    assert!(lines[..3].iter().all(|l| !l.contains("pad")));
}

#[test]
fn malformed_hamx_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.hamx");
    fs::write(&bad, "HAMX 1\nn 2\nqubits 1\nR 0\nsym none\nH\n1\n0 x\n").unwrap();
    let out = ecadapt(&["ed", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 8"), "{}", stderr(&out));
}

#[test]
fn diagonal_input_needs_no_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("diag.hamx");
    assert!(ecadapt(&["randham", "--dim", "4", "--seed", "3", "--diagonal", "--out", s(&h)]).status.success());
    let out_dir = dir.path().join("out");
    let out = ecadapt(&["run", s(&h), "--states", "2", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    for row in curves(&out_dir) {
        assert_eq!(row[4].parse::<f64>().unwrap(), 0.0);
        assert_eq!(row[5], "0");
        assert_eq!(row[6], "true");
    }
    let trace = fs::read_to_string(out_dir.join("diag_state0.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "iter,op_string,grad_norm,energy_ha,err_vs_ed_ha");
    assert!(trace.lines().nth(1).unwrap().starts_with("0,ref,"));
}

#[test]
fn random_sixteen_four_states_and_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("rand16.hamx");
    assert!(ecadapt(&["randham", "--dim", "16", "--seed", "11", "--out", s(&h)]).status.success());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, jobs) in [(&a, "1"), (&b, "3")] {
        let o = ecadapt(&["run", s(&h), "--states", "4", "--seed", "5", "--jobs", jobs, "--out", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let rows = curves(&a);
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert!(row[4].parse::<f64>().unwrap() < 1e-6, "{row:?}");
    }
    for name in ["curves.csv", "rand16_state0.csv", "rand16_state3.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn strict_turns_unconverged_into_failure() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("r.hamx");
    assert!(ecadapt(&["randham", "--dim", "16", "--seed", "2", "--out", s(&h)]).status.success());
    let lax = ecadapt(&["run", s(&h), "--max-iters", "1", "--out", s(&dir.path().join("lax"))]);
    assert_eq!(lax.status.code(), Some(0));
    assert_eq!(curves(&dir.path().join("lax"))[0][6], "false");
    let strict = ecadapt(&["run", s(&h), "--max-iters", "1", "--strict", "--out", s(&dir.path().join("strict"))]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn too_many_states_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("r.hamx");
    assert!(ecadapt(&["randham", "--dim", "3", "--out", s(&h)]).status.success());
    let out = ecadapt(&["run", s(&h), "--states", "4", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pool_verify_reports_chosen_family() {
    let out = ecadapt(&["pool", "verify", "--qubits", "2", "--trials", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("PASS"));
    assert!(text.contains("chosen: 'Y_k + Z_k Y_k+1' (2 members)"), "{text}");
}
