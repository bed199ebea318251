//! CLI acceptance: every file-producing subcommand rerun with an identical
//! configuration and seed must reproduce its outputs byte for byte
//! (criterion 10), plus basic flag handling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn workspace_data() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .to_string_lossy()
        .into_owned()
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("asep-accept-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["asep".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    asep_cli::run(&argv)
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            out.insert(
                entry.file_name().to_string_lossy().into_owned(),
                std::fs::read(entry.path()).unwrap(),
            );
        }
    }
    out
}

/// Run a subcommand twice into fresh directories and demand byte-identical
/// trees.
fn assert_deterministic(tag: &str, args: &[&str]) {
    let d1 = temp_dir(&format!("{tag}-1"));
    let d2 = temp_dir(&format!("{tag}-2"));
    for dir in [&d1, &d2] {
        let mut full: Vec<&str> = args.to_vec();
        let dir_s = dir.to_string_lossy().into_owned();
        let dir_leaked: &str = Box::leak(dir_s.into_boxed_str());
        full.extend(["--out", dir_leaked]);
        let code = run(&full);
        assert_eq!(code, 0, "{tag}: nonzero exit");
    }
    let t1 = read_tree(&d1);
    let t2 = read_tree(&d2);
    assert_eq!(
        t1.keys().collect::<Vec<_>>(),
        t2.keys().collect::<Vec<_>>(),
        "{tag}: file sets differ"
    );
    for (name, bytes) in &t1 {
        assert_eq!(bytes, &t2[name], "{tag}: {name} differs between reruns");
        assert!(!bytes.is_empty(), "{tag}: {name} is empty");
    }
    println!("criterion 10 [{tag}]: PASS - {} files byte-identical", t1.len());
    let _ = std::fs::remove_dir_all(&d1);
    let _ = std::fs::remove_dir_all(&d2);
}

#[test]
fn acceptance_10_simulate_deterministic() {
    assert_deterministic(
        "simulate",
        &[
            "simulate", "--q", "1/2", "--alpha", "1", "--gamma", "1/4", "--N", "6", "--t", "8",
            "--samples", "8", "--seed", "11",
        ],
    );
    assert_deterministic(
        "simulate-half",
        &[
            "simulate", "--mode", "halfspace", "--q", "1/2", "--alpha", "1", "--gamma", "1/4",
            "--t", "25", "--samples", "5", "--seed", "3",
        ],
    );
}

#[test]
fn acceptance_10_exact_deterministic() {
    assert_deterministic(
        "exact",
        &[
            "exact", "--q", "1/2", "--alpha", "1", "--gamma", "1/4", "--N", "4", "--t", "1.5",
            "--profile-points", "6",
        ],
    );
}

#[test]
fn acceptance_10_current_deterministic() {
    let data = workspace_data();
    assert_deterministic(
        "current",
        &[
            "current", "--q", "1/2", "--alpha", "1", "--gamma", "1/4", "--t", "30", "--trials",
            "120", "--seed", "7", "--table-dir", &data,
        ],
    );
}

#[test]
fn acceptance_10_profile_deterministic() {
    assert_deterministic(
        "profile",
        &[
            "profile", "--q", "1/2", "--alpha", "1", "--gamma", "1/4", "--N", "6", "--c", "-1",
            "0", "1", "--trials", "300", "--seed", "5",
        ],
    );
}

#[test]
fn acceptance_10_duality_deterministic() {
    assert_deterministic(
        "duality",
        &[
            "duality", "--q", "1/2", "--alpha", "1", "--gamma", "1/4", "--N", "2", "-S", "1",
            "--m", "1", "--t", "0.8", "--trials", "2000", "--seed", "9",
        ],
    );
}

#[test]
fn acceptance_10_mallows_tail_deterministic() {
    assert_deterministic(
        "mallows-tail",
        &[
            "mallows-tail", "--q", "1/2", "--alpha", "1", "--gamma", "1/4", "--a", "1", "--b",
            "7", "--k", "3", "--x", "0", "1", "2", "--trials", "4000", "--seed", "2",
        ],
    );
}

#[test]
fn acceptance_10_mixing_time_deterministic() {
    assert_deterministic(
        "mixing-time",
        &[
            "mixing-time", "--q", "1/2", "--alpha", "1", "--gamma", "1/4", "--N", "4",
            "--epsilon", "0.25", "--seed", "1",
        ],
    );
}

#[test]
fn acceptance_10_hecke_check_deterministic() {
    assert_eq!(run(&["hecke-check", "--n", "3", "--q", "1/2", "--r", "1/3"]), 0);
    assert_eq!(run(&["hecke-check", "--n", "3", "--q", "1/2", "--r", "1/3"]), 0);
    println!("criterion 10 [hecke-check]: PASS - exit code stable at 0");
}

#[test]
fn cli_rejects_bad_input() {
    assert_ne!(run(&["no-such-subcommand"]), 0);
    // gamma above alpha violates the model assumptions
    assert_ne!(
        run(&[
            "exact", "--q", "1/2", "--alpha", "0.2", "--gamma", "0.4", "--N", "2", "--t", "1",
        ]),
        0
    );
    // current in a KPZ phase without a reference table directory
    let empty = temp_dir("no-tables");
    let empty_s = empty.to_string_lossy().into_owned();
    assert_ne!(
        run(&[
            "current", "--q", "1/2", "--alpha", "1", "--gamma", "1/4", "--t", "5", "--trials",
            "5", "--seed", "1", "--table-dir", &empty_s,
        ]),
        0
    );
    let _ = std::fs::remove_dir_all(&empty);
}

#[test]
fn cli_config_file_merges_under_flags() {
    let dir = temp_dir("cfg");
    let cfg_path = dir.join("run.conf");
    std::fs::write(&cfg_path, "q = 1/2\nalpha = 1\ngamma = 1/4\nsites = 3\nt = 1\n").unwrap();
    let out1 = dir.join("o1");
    let code = run(&[
        "exact",
        "--config",
        cfg_path.to_string_lossy().as_ref(),
        "--out",
        out1.to_string_lossy().as_ref(),
    ]);
    assert_eq!(code, 0);
    let transient = std::fs::read_to_string(out1.join("transient.csv")).unwrap();
    // 3 sites -> 8 configurations + header
    assert_eq!(transient.lines().count(), 9);
    // an explicit flag overrides the file
    let out2 = dir.join("o2");
    let code = run(&[
        "exact",
        "--config",
        cfg_path.to_string_lossy().as_ref(),
        "--N",
        "2",
        "--out",
        out2.to_string_lossy().as_ref(),
    ]);
    assert_eq!(code, 0);
    let transient = std::fs::read_to_string(out2.join("transient.csv")).unwrap();
    assert_eq!(transient.lines().count(), 5);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn gen_tables_deterministic() {
    let d1 = temp_dir("tables-1");
    let code = run(&["gen-tables", "--out", d1.to_string_lossy().as_ref()]);
    assert_eq!(code, 0);
    let goe = std::fs::read(d1.join("tw_goe.tsv")).unwrap();
    // regenerating reproduces the checked-in tables byte for byte
    let shipped = std::fs::read(PathBuf::from(workspace_data()).join("tw_goe.tsv")).unwrap();
    assert_eq!(goe, shipped, "generated GOE table differs from data/tw_goe.tsv");
    let gse = std::fs::read(d1.join("tw_gse.tsv")).unwrap();
    let shipped = std::fs::read(PathBuf::from(workspace_data()).join("tw_gse.tsv")).unwrap();
    assert_eq!(gse, shipped, "generated GSE table differs from data/tw_gse.tsv");
    println!("criterion 10 [gen-tables]: PASS - tables reproduce the shipped files");
    let _ = std::fs::remove_dir_all(&d1);
}
