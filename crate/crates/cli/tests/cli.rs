use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn hyperiso(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hyperiso"));
    c.args(args).env_remove("STEVE_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    hyperiso(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a hypersphere volume and returns its header path.
fn sphere_volume(dir: &TempDir) -> PathBuf {
    let h = path(dir, "sphere.hdr");
    ok(&[
        "synth",
        "hypersphere",
        "--dims",
        "10,10,10,10",
        "--radius",
        "3.5",
        "--output",
        s(&h),
    ]);
    h
}

#[test]
fn gen_table_verifies_every_path() {
    let out = ok(&["gen-table", "--verify"]);
    assert!(out.contains("192/192 paths match"), "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("mismatch")).count(), 0);
}

#[test]
fn single_toxel_pipeline() {
    let dir = TempDir::new().unwrap();
    let h = path(&dir, "toxel.hdr");
    let m = path(&dir, "toxel.st4");
    ok(&[
        "synth",
        "single-toxel",
        "--index",
        "1,1,1,1",
        "--dims",
        "3,3,3,3",
        "--indicator",
        "--output",
        s(&h),
    ]);
    let out = ok(&[
        "extract",
        "--input",
        s(&h),
        "--isovalue",
        "0.5",
        "--output",
        s(&m),
    ]);
    assert!(out.contains("8 points, 16 tets"), "{out}");
    let out = ok(&["validate", "--mesh", s(&m)]);
    assert!(out.contains("euler 0"), "{out}");
    assert!(out.trim_end().ends_with("PASS"), "{out}");

    let prefix = path(&dir, "cut");
    let out = ok(&[
        "slice",
        "--mesh",
        s(&m),
        "--t",
        "1",
        "--out-prefix",
        s(&prefix),
    ]);
    assert!(
        out.contains("6 vertices, 8 triangles, 1 components"),
        "{out}"
    );
    let obj = fs::read_to_string(path(&dir, "cut_0000.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 6);
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 8);

    let out = ok(&["info", "--mesh", s(&m)]);
    assert!(
        out.contains("tets 16") && out.contains("closed true"),
        "{out}"
    );
}

#[test]
fn slice_writes_ply_per_time() {
    let dir = TempDir::new().unwrap();
    let h = sphere_volume(&dir);
    let m = path(&dir, "sphere.st4");
    ok(&[
        "extract",
        "--input",
        s(&h),
        "--isovalue",
        "0",
        "--output",
        s(&m),
    ]);
    let prefix = path(&dir, "s");
    ok(&[
        "slice",
        "--mesh",
        s(&m),
        "--t",
        "3.5,4.5,9",
        "--format",
        "ply",
        "--out-prefix",
        s(&prefix),
    ]);
    for i in 0..3 {
        let text = fs::read_to_string(path(&dir, &format!("s_{i:04}.ply"))).unwrap();
        assert!(text.starts_with("ply\n"));
    }
    // t = 9 lies past the sphere.
    let last = fs::read_to_string(path(&dir, "s_0002.ply")).unwrap();
    assert!(last.contains("element vertex 0\n"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["extract", "--bogus"][..],
        &["frobnicate"][..],
        &[
            "synth",
            "hypersphere",
            "--dims",
            "4,4,4",
            "--radius",
            "1",
            "--output",
            "x",
        ][..],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains("error: code=2"), "{}", stderr(&o));
    }
    let o = hyperiso(&["gen-table"])
        .env("STEVE_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_files_exit_3() {
    let dir = TempDir::new().unwrap();
    let o = run(&["validate", "--mesh", s(&path(&dir, "absent.st4"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("error: code=3"));
    let o = run(&["info", "--input", s(&path(&dir, "absent.hdr"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn malformed_files_exit_4() {
    let dir = TempDir::new().unwrap();
    let m = path(&dir, "bad.st4");
    fs::write(&m, "st4 1\npoints 1\n0 0 0\n").unwrap();
    let o = run(&["validate", "--mesh", s(&m)]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("error: code=4"));

    let h = path(&dir, "bad.hdr");
    fs::write(&h, "dims = 2 2 2\n").unwrap();
    assert_eq!(run(&["info", "--input", s(&h)]).status.code(), Some(4));
}

#[test]
fn open_mesh_fails_validation_with_exit_5() {
    let dir = TempDir::new().unwrap();
    let m = path(&dir, "open.st4");
    fs::write(
        &m,
        "st4 1\npoints 4\n0 0 0 0\n1 0 0 0\n0 1 0 0\n0 0 1 0\n\
         tets 1\n0 1 2 3\nnormals 1\n0 0 0 1\n",
    )
    .unwrap();
    let o = run(&["validate", "--mesh", s(&m)]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("kind=validation"));
    assert!(!stdout(&o).contains("PASS"));
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = TempDir::new().unwrap();
    let h = sphere_volume(&dir);
    let mut runs: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for (k, (flag, env)) in [
        (Some("1"), None),
        (Some("4"), None),
        (Some("16"), None),
        (None, Some("3")),
        (None, Some("16")),
    ]
    .into_iter()
    .enumerate()
    {
        let m = path(&dir, &format!("m{k}.st4"));
        let prefix = path(&dir, &format!("p{k}"));
        let steps: [Vec<&str>; 2] = [
            vec![
                "extract",
                "--input",
                s(&h),
                "--isovalue",
                "0",
                "--output",
                s(&m),
            ],
            vec![
                "slice",
                "--mesh",
                s(&m),
                "--t",
                "4.5",
                "--out-prefix",
                s(&prefix),
            ],
        ];
        for mut args in steps {
            if let Some(n) = flag {
                args.splice(0..0, ["--workers", n]);
            }
            let mut c = hyperiso(&args);
            if let Some(n) = env {
                c.env("STEVE_WORKERS", n);
            }
            let o = c.output().unwrap();
            assert!(o.status.success(), "{}", stderr(&o));
        }
        let obj = PathBuf::from(format!("{}_0000.obj", s(&prefix)));
        runs.push((fs::read(&m).unwrap(), fs::read(obj).unwrap()));
    }
    for r in &runs[1..] {
        assert!(r == &runs[0]);
    }
}

#[test]
fn enumerate_cell_without_samples() {
    let out = ok(&["enumerate-cell", "--samples", "0"]);
    assert!(out.contains("evaluations 131072"), "{out}");
    assert!(out.contains("cycle lengths:"));
}

#[test]
fn volume_info_counts_active_toxels() {
    let dir = TempDir::new().unwrap();
    let h = path(&dir, "slab.hdr");
    ok(&[
        "synth",
        "iso-slab",
        "--split",
        "1.5",
        "--dims",
        "2,2,2,4",
        "--indicator",
        "--output",
        s(&h),
    ]);
    let out = ok(&["info", "--input", s(&h), "--isovalue", "0.5"]);
    assert!(out.contains("dims 2 2 2 4"), "{out}");
    assert!(out.contains("active 16"), "{out}");
}
