//! End-to-end checks of the `safekit` binary: exit codes, manifests,
//! determinism and the defaults < file < flags chain.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_safekit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "safekit {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn convert_drops_bad_lines_into_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.smi");
    std::fs::write(&input, "CCO\nC(\nc1ccccc1\n").unwrap();
    let out = p(dir.path(), "out.safe");
    run_ok(&["convert", "--input", input.to_str().unwrap(), "--output", &out]);
    let written = read(Path::new(&out));
    assert_eq!(written.lines().count(), 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("out.safe.manifest.json"))).unwrap();
    assert_eq!(manifest["input_count"], 3);
    assert_eq!(manifest["written"], 2);
    assert_eq!(manifest["discarded"], 1);
    assert_eq!(manifest["discards"][0]["line"], 2);
    assert!(manifest["discards"][0]["reason"]
        .as_str()
        .unwrap()
        .contains("syntax"));
    // The resolved config sits beside the output.
    let cfg: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("out.safe.config.json"))).unwrap();
    assert_eq!(cfg["scheme"], "brics");
    assert_eq!(cfg["seeds"], 5);
    assert_eq!(cfg["samples"], 10000);
    assert_eq!(cfg["samples_per_constraint"], 5000);
}

#[test]
fn convert_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.smi");
    std::fs::write(&input, "CC(=O)Nc1ccc(OC)cc1\nCOc1ccncc1\n").unwrap();
    let out_a = p(dir.path(), "a.safe");
    let out_b = p(dir.path(), "b.safe");
    run_ok(&["convert", "--input", input.to_str().unwrap(), "--output", &out_a]);
    run_ok(&["convert", "--input", input.to_str().unwrap(), "--output", &out_b]);
    assert_eq!(read(Path::new(&out_a)), read(Path::new(&out_b)));
}

#[test]
fn augment_k1_equals_randomized_convert() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.smi");
    std::fs::write(&input, "CC(=O)Nc1ccc(OC)cc1\nCOc1ccc(CN2CCOCC2)cc1\n").unwrap();
    let aug = p(dir.path(), "aug.safe");
    let conv = p(dir.path(), "conv.safe");
    run_ok(&[
        "augment", "--input", input.to_str().unwrap(), "-k", "1", "--seed", "11", "--output", &aug,
    ]);
    run_ok(&[
        "convert",
        "--input",
        input.to_str().unwrap(),
        "--block-order",
        "randomized",
        "--seed",
        "11",
        "--output",
        &conv,
    ]);
    assert_eq!(read(Path::new(&aug)), read(Path::new(&conv)));
}

#[test]
fn augment_writes_k_decodable_variants() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.smi");
    let sources = ["CC(=O)Nc1ccc(OC)cc1", "COc1ccc(CN2CCOCC2)cc1"];
    std::fs::write(&input, sources.join("\n") + "\n").unwrap();
    let aug = dir.path().join("aug.safe");
    run_ok(&[
        "augment",
        "--input",
        input.to_str().unwrap(),
        "-k",
        "5",
        "--output",
        aug.to_str().unwrap(),
    ]);
    let lines: Vec<String> = read(&aug).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 10);
    for (i, line) in lines.iter().enumerate() {
        let got = safekit::molgraph::parse_smiles(line).unwrap();
        let want = safekit::molgraph::parse_smiles(sources[i / 5]).unwrap();
        assert_eq!(
            safekit::molgraph::canonical_smiles(&got),
            safekit::molgraph::canonical_smiles(&want),
            "augmented line {line} does not decode to its source"
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("aug.safe.manifest.json"))).unwrap();
    assert_eq!(manifest["augmentation"], 5);
}

#[test]
fn greedy_sampling_reproduces_single_line_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tiny.smi");
    std::fs::write(&input, "CCO\n").unwrap();
    let model = p(dir.path(), "m.json");
    run_ok(&[
        "train", "--input", input.to_str().unwrap(), "--notation", "smiles", "--order", "4",
        "--output", &model,
    ]);
    let outdir = p(dir.path(), "run");
    run_ok(&[
        "sample", "--model", &model, "--samples", "3", "--seeds", "1", "--temperature", "0",
        "--output", &outdir,
    ]);
    let samples = read(&dir.path().join("run/samples_seed0.txt"));
    for line in samples.lines() {
        assert_eq!(line, "CCO");
    }
}

#[test]
fn sampling_writes_one_file_per_seed_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.smi");
    let corpus = safekit::corpus::synthesize(120, 5);
    std::fs::write(&input, corpus.join("\n") + "\n").unwrap();
    let model = p(dir.path(), "m.json");
    run_ok(&[
        "train", "--input", input.to_str().unwrap(), "--notation", "smiles", "--order", "3",
        "--output", &model,
    ]);
    let run_a = p(dir.path(), "a");
    let run_b = p(dir.path(), "b");
    for out in [&run_a, &run_b] {
        run_ok(&[
            "sample", "--model", &model, "--samples", "25", "--seeds", "5", "--seed", "77",
            "--output", out,
        ]);
    }
    for s in 0..5 {
        let fa = read(&dir.path().join(format!("a/samples_seed{s}.txt")));
        let fb = read(&dir.path().join(format!("b/samples_seed{s}.txt")));
        assert_eq!(fa, fb, "seed {s} differs across reruns");
        assert_eq!(fa.lines().count(), 25);
    }
}

#[test]
fn decorate_excludes_out_of_vocabulary_scaffolds() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.smi");
    // A corpus with no bromine anywhere.
    std::fs::write(&input, "CCO\nCCN\nCC1.CC1\nCC1.OC1\n").unwrap();
    let model = p(dir.path(), "m.json");
    run_ok(&[
        "train", "--input", input.to_str().unwrap(), "--notation", "safe", "--order", "3",
        "--output", &model,
    ]);
    let scaffolds = dir.path().join("scaffolds.txt");
    std::fs::write(&scaffolds, "[*]CC\n[*]CBr\nnot a molecule\n").unwrap();
    let outdir = p(dir.path(), "dec");
    run_ok(&[
        "decorate", "--model", &model, "--scaffolds", scaffolds.to_str().unwrap(),
        "--samples-per-constraint", "5", "--output", &outdir,
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("dec/summary.json"))).unwrap();
    assert_eq!(summary["evaluated"], serde_json::json!([0]));
    let excluded = summary["excluded"].as_object().unwrap();
    assert!(excluded["1"].as_str().unwrap().contains("vocabulary"));
    assert!(excluded.contains_key("2"));
    assert!(dir.path().join("dec/constraint_000.report.json").exists());
}

#[test]
fn report_single_seed_has_zero_std_and_table_column_order() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("s.txt");
    std::fs::write(&samples, "CCO\nC(\nc1ccccc1\n").unwrap();
    let out = p(dir.path(), "rep");
    run_ok(&["report", "--inputs", samples.to_str().unwrap(), "--label", "demo", "--output", &out]);
    let csv = read(&dir.path().join("rep.csv"));
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    // Leading columns: validity, uniqueness, novelty, Int.Div, fragmented.
    let cols: Vec<&str> = header.split(',').collect();
    assert_eq!(
        &cols[..12],
        &[
            "label",
            "runs",
            "validity_mean",
            "validity_std",
            "uniqueness_mean",
            "uniqueness_std",
            "novelty_mean",
            "novelty_std",
            "int_div_mean",
            "int_div_std",
            "fragmented_mean",
            "fragmented_std",
        ]
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "demo");
    assert_eq!(row[1], "1");
    assert_eq!(row[3], "0.000000", "single seed std");
    let json: serde_json::Value = serde_json::from_str(&read(&dir.path().join("rep.json"))).unwrap();
    assert_eq!(json["aggregate"]["runs"], 1);
}

#[test]
fn locked_run_directory_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.smi");
    std::fs::write(&input, "CCO\n").unwrap();
    let model = p(dir.path(), "m.json");
    run_ok(&[
        "train", "--input", input.to_str().unwrap(), "--notation", "smiles", "--order", "2",
        "--output", &model,
    ]);
    let outdir = dir.path().join("run");
    std::fs::create_dir_all(&outdir).unwrap();
    std::fs::write(outdir.join("LOCK"), "held\n").unwrap();
    let out = run(&[
        "sample", "--model", &model, "--samples", "1", "--seeds", "1", "--output",
        outdir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("locked"));
    // The pre-existing lock is not stolen.
    assert!(outdir.join("LOCK").exists());
}

#[test]
fn exit_codes_distinguish_config_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown flag: config error.
    let out = run(&["convert", "--nope"]);
    assert_eq!(out.status.code(), Some(1));
    // Unknown scheme: config error.
    let input = dir.path().join("in.smi");
    std::fs::write(&input, "CCO\n").unwrap();
    let out = run(&[
        "convert", "--input", input.to_str().unwrap(), "--scheme", "fancy", "--output",
        &p(dir.path(), "x.safe"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    // Missing input file: data error.
    let out = run(&[
        "convert", "--input", &p(dir.path(), "missing.smi"), "--output", &p(dir.path(), "y.safe"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Help exits 0.
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "scheme = \"hr\"\nseed = 9\n").unwrap();
    let input = dir.path().join("in.smi");
    std::fs::write(&input, "CC(=O)Nc1ccc(OC)cc1\n").unwrap();
    // File overrides the default scheme.
    let out_file = p(dir.path(), "file.safe");
    run_ok(&[
        "convert", "--config", cfg.to_str().unwrap(), "--input", input.to_str().unwrap(),
        "--output", &out_file,
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("file.safe.manifest.json"))).unwrap();
    assert_eq!(manifest["scheme"], "hr");
    assert_eq!(manifest["seed"], 9);
    // Flags override the file.
    let out_flag = p(dir.path(), "flag.safe");
    run_ok(&[
        "convert", "--config", cfg.to_str().unwrap(), "--scheme", "recap", "--input",
        input.to_str().unwrap(), "--output", &out_flag,
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("flag.safe.manifest.json"))).unwrap();
    assert_eq!(manifest["scheme"], "recap");
}

#[test]
fn output_root_env_var_redirects_relative_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["gen", "--count", "3", "--seed", "1", "--output", "nested/demo.smi"])
        .env("SAFEKIT_OUTPUT_ROOT", dir.path())
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("nested").join("demo.smi").exists());
}
