use std::process::{Command, Output};

fn syntheory(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_syntheory"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn unknown_concept_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = syntheory(&[
        "generate",
        "--concept",
        "polka",
        "--manifest-only",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("polka"));
}

#[test]
fn missing_manifest_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = syntheory(&[
        "extract",
        "--concept",
        "chords",
        "--feature",
        "chroma",
        "--out",
        "x.emb",
        "--data",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}

#[test]
fn report_needs_result_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = syntheory(&["report", "--results", dir.path().to_str().unwrap(), "--out", "-"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn manifest_only_generation_prints_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = syntheory(&[
        "generate",
        "--concept",
        "time-signatures",
        "--manifest-only",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "time_signatures: 1200 samples"
    );
    assert!(dir.path().join("time_signatures/manifest.jsonl").is_file());
    assert!(dir.path().join("time_signatures/splits/0.json").is_file());
}

fn pipeline(root: &std::path::Path) {
    let r = root.to_str().unwrap();
    let steps: [Vec<String>; 4] = [
        vec![
            "generate".into(),
            "--concept".into(),
            "chords".into(),
            "--subsample".into(),
            "0.01".into(),
            "--seed".into(),
            "4".into(),
            "--out".into(),
            format!("{r}/data"),
        ],
        vec![
            "extract".into(),
            "--concept".into(),
            "chords".into(),
            "--feature".into(),
            "chroma".into(),
            "--data".into(),
            format!("{r}/data"),
            "--out".into(),
            format!("{r}/chroma.emb"),
        ],
        vec![
            "probe".into(),
            "--concept".into(),
            "chords".into(),
            "--embeddings".into(),
            format!("{r}/chroma.emb"),
            "--preset".into(),
            "lm-default".into(),
            "--seed".into(),
            "4".into(),
            "--max-epochs".into(),
            "20".into(),
            "--data".into(),
            format!("{r}/data"),
            "--out".into(),
            format!("{r}/results/chroma.csv"),
        ],
        vec![
            "report".into(),
            "--results".into(),
            format!("{r}/results"),
            "--out".into(),
            format!("{r}/table.md"),
        ],
    ];
    for args in steps {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = syntheory(&args);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(out.stderr.is_empty());
    }
}

fn files(root: &std::path::Path) -> std::collections::BTreeMap<std::path::PathBuf, Vec<u8>> {
    let mut out = std::collections::BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

#[test]
fn commands_are_idempotent() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path());
    pipeline(b.path());
    // a rerun in place overwrites with identical bytes
    let before = files(a.path());
    pipeline(a.path());
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa, before);
    assert_eq!(fa, fb);
    assert!(fa.keys().any(|p| p.ends_with("table.md")));
}
