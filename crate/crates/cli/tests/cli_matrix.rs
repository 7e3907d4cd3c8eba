//! Exit-code contract and file-format smoke tests for the binary.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coarsegrid"))
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("coarsegrid-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn usage_errors_exit_3() {
    // unknown generator
    let s = bin().args(["generate", "--graph", "nosuch", "--radius", "2"]).output().unwrap();
    assert_eq!(s.status.code(), Some(3));
    // invalid parameter
    let s = bin().args(["generate", "--graph", "example42:K=0", "--radius", "2"]).output().unwrap();
    assert_eq!(s.status.code(), Some(3));
    // malformed flags (clap)
    let s = bin().args(["halfgrid", "--mode"]).output().unwrap();
    assert_eq!(s.status.code(), Some(3));
    // schema error on check
    let bad = tmp("bad.json");
    std::fs::write(&bad, "{\"schema_version\": \"9\"}").unwrap();
    let s = bin().args(["check", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(s.status.code(), Some(3));
    // unknown demo id
    let s = bin().args(["demo", "--id", "nosuch"]).output().unwrap();
    assert_eq!(s.status.code(), Some(1));
}

#[test]
fn construction_failures_exit_1_with_hint() {
    // window far too small for the requested construction
    let out = bin()
        .args([
            "halfgrid", "--graph", "grid2d", "--mode", "kfat", "-K", "3",
            "--rows", "4", "--cols", "4", "--radius", "20",
            "--out", tmp("never.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("enlarge window") || stderr.contains("connector"),
        "{stderr}"
    );
}

#[test]
fn generate_hexhalfgrid_matches_pattern() {
    let out = bin()
        .args(["generate", "--graph", "hexhalfgrid", "--radius", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let dump: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let verts: Vec<&str> =
        dump["vertices"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(verts, vec!["0,0", "1,0", "0,1", "1,1", "0,2"]);
    let edges = dump["edges"].as_array().unwrap();
    let has = |a: &str, b: &str| {
        edges.iter().any(|e| {
            let e = e.as_array().unwrap();
            (e[0] == a && e[1] == b) || (e[0] == b && e[1] == a)
        })
    };
    assert!(has("0,0", "1,0")); // rung at even parity
    assert!(has("0,0", "0,1"));
    assert!(has("1,0", "1,1"));
    assert!(has("0,1", "0,2"));
    assert!(!has("0,1", "1,1")); // deleted rung
}

#[test]
fn rays_and_family_files_parse() {
    let ray_out = tmp("ray.json");
    let s = bin()
        .args([
            "rays", "--graph", "grid2d", "--radius", "12", "--geodesic",
            "--out", ray_out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(s.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&ray_out).unwrap()).unwrap();
    assert_eq!(v["ray"]["prefix"][0], "0,0");
    assert_eq!(v["ray"]["prefix"][1], "1,0");

    let fam_out = tmp("family.json");
    let s = bin()
        .args([
            "family", "--graph", "grid2d", "--radius", "40", "--auto", "translate:1,0",
            "--count", "4", "--out", fam_out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(s.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&fam_out).unwrap()).unwrap();
    assert_eq!(v["rays"].as_array().unwrap().len(), 4);
    assert_eq!(v["separations"].as_array().unwrap().len(), 4);

    // the family file feeds the pipeline directly
    let cert_out = tmp("from_family.json");
    let s = bin()
        .args([
            "halfgrid", "--graph", "grid2d", "--mode", "kfat", "-K", "1",
            "--rows", "3", "--cols", "3", "--radius", "40",
            "--family", fam_out.to_str().unwrap(),
            "--out", cert_out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(s.success());
    let s = bin().args(["check", cert_out.to_str().unwrap()]).status().unwrap();
    assert!(s.success());
}

#[test]
fn invariant_double_ray_outputs() {
    let s = bin()
        .args([
            "rays", "--graph", "grid2d", "--radius", "10", "--invariant",
            "--auto", "translate:1,1",
        ])
        .output()
        .unwrap();
    assert!(s.status.success());
    let v: serde_json::Value = serde_json::from_slice(&s.stdout).unwrap();
    assert_eq!(v["invariance_power"], 1);
    // elliptic automorphism is rejected
    let s = bin()
        .args([
            "rays", "--graph", "grid2d", "--radius", "10", "--invariant",
            "--auto", "rotate90",
        ])
        .output()
        .unwrap();
    assert_eq!(s.status.code(), Some(1));
}

#[test]
fn plot_writes_png() {
    let png = tmp("window.png");
    let s = bin()
        .args([
            "generate", "--graph", "grid2d", "--radius", "6",
            "--out", tmp("w.json").to_str().unwrap(),
            "--plot", png.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(s.success());
    let bytes = std::fs::read(&png).unwrap();
    assert_eq!(&bytes[1..4], b"PNG");
}

#[test]
fn indeterminate_when_claims_exceed_window() {
    // emit a certificate, then shrink the descriptor's radius so the model
    // pokes out of the window: the checker must answer indeterminate
    let out = tmp("shrink.json");
    let s = bin()
        .args([
            "halfgrid", "--graph", "grid2d", "--mode", "kfat", "-K", "2",
            "--rows", "3", "--cols", "3", "--radius", "120",
            "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(s.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    // find the largest coordinate used by the model and cut just below it
    let mut max_coord = 0i64;
    for set in v["model"]["branch_sets"].as_object().unwrap().values() {
        for tok in set.as_array().unwrap() {
            let t = tok.as_str().unwrap();
            let (x, y) = t.split_once(',').unwrap();
            let (x, y): (i64, i64) = (x.parse().unwrap(), y.parse().unwrap());
            max_coord = max_coord.max(x.abs() + y.abs());
        }
    }
    v["graph"]["radius"] = serde_json::json!(max_coord - 1);
    let shrunk = tmp("shrunk.json");
    std::fs::write(&shrunk, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let out = bin().args(["check", shrunk.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("indeterminate"), "{text}");
}

#[test]
fn seed_recorded_but_unused() {
    let a = tmp("seed_a.json");
    let b = tmp("seed_b.json");
    for (path, seed) in [(&a, "7"), (&b, "7")] {
        let s = bin()
            .args([
                "--seed", seed, "halfgrid", "--graph", "grid2d", "--mode", "kfat",
                "-K", "1", "--rows", "2", "--cols", "2", "--radius", "30",
                "--out", path.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(s.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(v["seed"], 7);
}
