use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_utree-hecke"));
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("UHECK_")) {
        c.env_remove(k);
    }
    c
}

#[test]
fn small_verify_run_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let tree = dir.path().join("tree.json");
    let out = bin()
        .args(["verify", "--vertex", "K1", "--radius", "1", "--suites", "group,tree,hecke", "--sigma", "max_dim=2"])
        .arg("--catalog-dir")
        .arg(dir.path())
        .arg("--report")
        .arg(&report)
        .arg("--emit-tree")
        .arg(&tree)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("0 failed"));

    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["params"]["radius"], 1);
    let checks = r["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["status"] == "pass"));
    assert!(checks.iter().any(|c| c["name"] == "identity_2_1"));
    assert!(r["catalogs"][0]["dims"].as_array().unwrap().iter().all(|d| d.as_u64().unwrap() <= 2));

    let t: serde_json::Value = serde_json::from_slice(&std::fs::read(&tree).unwrap()).unwrap();
    assert_eq!(t["K1"]["shell_sizes"], serde_json::json!([1, 4 * 27]));
    assert_eq!(t["K1"]["shells"][1].as_array().unwrap().len(), 108);
}

#[test]
fn catalog_is_cached_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        let out = bin().args(["catalog", "--vertex", "K1", "--radius", "1", "--seed", "3"]).arg("--catalog-dir").arg(dir.path()).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let first = run();
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    let bytes = std::fs::read(&files[0]).unwrap();
    assert_eq!(&bytes[..4], b"UHK1");
    // The second run decodes and re-certifies the cached file.
    assert_eq!(run(), first);
    std::fs::remove_file(&files[0]).unwrap();
    assert_eq!(run(), first);
    assert_eq!(std::fs::read(&files[0]).unwrap(), bytes);
}

#[test]
fn corrupt_cache_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["catalog", "--vertex", "K1", "--radius", "1"];
    assert_eq!(bin().args(args).arg("--catalog-dir").arg(dir.path()).output().unwrap().status.code(), Some(0));
    let file = std::fs::read_dir(dir.path()).unwrap().next().unwrap().unwrap().path();
    std::fs::write(&file, b"nope").unwrap();
    let out = bin().args(args).arg("--catalog-dir").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("catalog"));
}

#[test]
fn bad_configuration_exits_with_two() {
    let out = bin().args(["verify", "--p", "4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("odd prime"));
}
