use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use colorprobe::activation::{ActivationMatrix, NeuronType, ProfilesFile};
use colorprobe::exchange::{write_activation_dump, write_embeddings};
use colorprobe::palette::{ColorTerm, Palette};
use colorprobe::probe::ResultsFile;
use colorprobe::stimulus::{DatasetManifest, SceneSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_colorprobe"))
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn colorprobe");
    assert!(
        out.status.success(),
        "colorprobe {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_body(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn one_hot(dim: usize, i: usize, noise: f32) -> Vec<f32> {
    let mut v = vec![noise; dim];
    v[i] = 1.0;
    v
}

/// Label embeddings on the first 11 axes; each image points at `pick(record)`.
fn write_probe_embeddings(
    dir: &Path,
    template: &str,
    m: &DatasetManifest,
    pick: impl Fn(&SceneSpec) -> ColorTerm,
) {
    let dim = 16;
    let palette = Palette::default();
    let keys: Vec<String> = ColorTerm::ALL
        .iter()
        .map(|&t| palette.label(t).to_string())
        .collect();
    let rows: Vec<Vec<f32>> = ColorTerm::ALL
        .iter()
        .map(|t| one_hot(dim, t.index(), 0.0))
        .collect();
    write_embeddings(
        &dir.join(format!("text-{template}.bin")),
        &keys,
        &rows,
        BTreeMap::new(),
    )
    .unwrap();
    let keys: Vec<String> = m.records.iter().map(|r| r.id.clone()).collect();
    let rows: Vec<Vec<f32>> = m
        .records
        .iter()
        .map(|r| {
            let mut v = one_hot(dim, pick(&r.spec).index(), 0.01);
            let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
            v.iter_mut().for_each(|x| *x /= n);
            v
        })
        .collect();
    let mut extra = BTreeMap::new();
    extra.insert("model".to_string(), serde_json::json!("synthetic-test"));
    write_embeddings(&dir.join("images.bin"), &keys, &rows, extra).unwrap();
}

#[test]
fn stroop_manifest_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    run(&[
        "gen-stroop",
        "--samples",
        "1",
        "--seed",
        "7",
        "--no-images",
        "--out",
        s(&out),
    ]);
    let m = DatasetManifest::load(&out.join("manifest.ndjson")).unwrap();
    assert_eq!(m.records.len(), 990);
    assert_eq!(m.header.master_seed, 7);
    assert!(m.header.config_hash.is_some());
}

#[test]
fn unknown_subcommand_fails_with_usage() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn bad_flag_value_fails() {
    let out = bin()
        .args(["gen-shapes", "--samples", "0", "--out", "/nonexistent/x"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn config_file_supplies_flags_and_cli_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        "# white background subset\nsamples = 1\nwhite-bg = true\nno_images = true\n",
    )
    .unwrap();
    let a = dir.path().join("a");
    run(&["gen-stroop", "--config", s(&cfg), "--out", s(&a)]);
    assert_eq!(
        DatasetManifest::load(&a.join("manifest.ndjson"))
            .unwrap()
            .records
            .len(),
        90
    );
    let b = dir.path().join("b");
    run(&[
        "--config",
        s(&cfg),
        "gen-stroop",
        "--samples",
        "2",
        "--out",
        s(&b),
    ]);
    assert_eq!(
        DatasetManifest::load(&b.join("manifest.ndjson"))
            .unwrap()
            .records
            .len(),
        180
    );
}

#[test]
fn porcelain_summary_is_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--porcelain",
        "gen-shapes",
        "--samples",
        "1",
        "--no-images",
        "--out",
        s(&dir.path().join("x")),
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["records"], 880);
    assert_eq!(v["command"], "gen-shapes");
}

#[test]
fn palette_override_changes_hash_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let pal = dir.path().join("pal.txt");
    fs::write(&pal, "gray.label = grey\nred = 230,0,0\n").unwrap();
    let out = run(&["--palette", s(&pal), "prompts", "--template-id", "label"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.lines().any(|l| l == "grey"));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run(&[
        "--palette",
        s(&pal),
        "gen-shapes",
        "--no-images",
        "--out",
        s(&a),
    ]);
    run(&["gen-shapes", "--no-images", "--out", s(&b)]);
    let ha = DatasetManifest::load(&a.join("manifest.ndjson"))
        .unwrap()
        .header
        .palette_hash;
    let hb = DatasetManifest::load(&b.join("manifest.ndjson"))
        .unwrap()
        .header
        .palette_hash;
    assert_ne!(ha, hb);
}

#[test]
fn stroop_probe_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    run(&[
        "gen-stroop",
        "--samples",
        "1",
        "--seed",
        "3",
        "--white-bg",
        "--no-images",
        "--out",
        s(&data),
    ]);
    let mpath = data.join("manifest.ndjson");
    let m = DatasetManifest::load(&mpath).unwrap();
    let emb = dir.path().join("emb");
    fs::create_dir_all(&emb).unwrap();
    write_probe_embeddings(&emb, "written-in-font", &m, |spec| spec.written().unwrap());

    let results = dir.path().join("results.ndjson");
    run(&[
        "run-probe",
        "--manifest",
        s(&mpath),
        "--template-id",
        "written-in-font",
        "--embeddings",
        s(&emb),
        "--out",
        s(&results),
    ]);
    let r = ResultsFile::load(&results).unwrap();
    assert_eq!(r.predictions.len(), 90);
    assert_eq!(r.header.model.as_deref(), Some("synthetic-test"));
    for (p, rec) in r.predictions.iter().zip(&m.records) {
        assert_eq!(p.record_id, rec.id);
        assert_eq!(Some(p.predicted), rec.spec.written());
    }

    let rep = dir.path().join("rep");
    run(&[
        "report",
        "--results",
        s(&results),
        "--kind",
        "stroop",
        "--out",
        s(&rep),
    ]);
    let csv = fs::read_to_string(rep.join("stroop.csv")).unwrap();
    assert!(csv.starts_with("# colorprobe\n"));
    assert!(csv.contains("# config_hash: "));
    let body = csv_body(&csv);
    // header + 10 font colors (white excluded) + global
    assert_eq!(body.len(), 12);
    assert_eq!(body[11], "global,90,0,90,0,0,0.00,100.00,0.00,0.00");
    let first = fs::read(rep.join("stroop.svg")).unwrap();
    run(&["report", "--results", s(&results), "--out", s(&rep)]);
    assert_eq!(fs::read(rep.join("stroop.svg")).unwrap(), first);
}

#[test]
fn shape_probe_and_chromaticity_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    run(&[
        "gen-shapes",
        "--samples",
        "1",
        "--no-images",
        "--out",
        s(&data),
    ]);
    let mpath = data.join("manifest.ndjson");
    let m = DatasetManifest::load(&mpath).unwrap();
    let emb = dir.path().join("emb");
    fs::create_dir_all(&emb).unwrap();
    write_probe_embeddings(&emb, "label", &m, |spec| spec.background());
    let results = dir.path().join("out/results.ndjson");
    run(&[
        "run-probe",
        "--manifest",
        s(&mpath),
        "--template-id",
        "label",
        "--embeddings",
        s(&emb),
        "--out",
        s(&results),
    ]);
    let rep = dir.path().join("rep");
    run(&["report", "--results", s(&results), "--out", s(&rep)]);
    let body = csv_body(&fs::read_to_string(rep.join("chromaticity.csv")).unwrap());
    assert_eq!(body.len(), 5);
    for row in &body[1..] {
        assert!(row.ends_with(",100.00,0.00,0.00"), "{row}");
    }
    let pivot = csv_body(&fs::read_to_string(rep.join("chromaticity_pivot.csv")).unwrap());
    assert_eq!(pivot[0], "background \\ object,achromatic,chromatic");
    assert_eq!(pivot.len(), 3);
}

#[test]
fn missing_embedding_names_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    run(&["gen-stroop", "--white-bg", "--no-images", "--out", s(&data)]);
    let mpath = data.join("manifest.ndjson");
    let mut m = DatasetManifest::load(&mpath).unwrap();
    let emb = dir.path().join("emb");
    fs::create_dir_all(&emb).unwrap();
    let dropped = m.records.pop().unwrap();
    write_probe_embeddings(&emb, "text-says", &m, |spec| spec.background());
    let out = bin()
        .args([
            "run-probe",
            "--manifest",
            s(&mpath),
            "--template-id",
            "text-says",
            "--embeddings",
            s(&emb),
            "--out",
            s(&dir.path().join("r.ndjson")),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains(&dropped.id));
}

/// Stroop corpus with grayscale twins; neuron 0 follows the written word
/// "red", neuron 1 the red background, neuron 2 never fires.
#[test]
fn analyze_neurons_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    run(&[
        "gen-stroop",
        "--samples",
        "1",
        "--seed",
        "5",
        "--gray",
        "--size",
        "96",
        "--out",
        s(&data),
    ]);
    let m = DatasetManifest::load(&data.join("manifest.ndjson")).unwrap();
    let mut refs: Vec<String> = m.records.iter().map(|r| r.id.clone()).collect();
    refs.extend(m.records.iter().map(|r| format!("{}~gray", r.id)));
    let n = m.records.len();
    let cols = 2 * n;
    let mut values = vec![0.0f32; 3 * cols];
    for (i, r) in m.records.iter().enumerate() {
        let SceneSpec::Stroop(st) = &r.spec else {
            unreachable!()
        };
        values[i] = if st.word == ColorTerm::Red { 4.0 } else { 0.1 };
        values[n + i] = values[i];
        values[cols + i] = if st.background == ColorTerm::Red {
            3.0
        } else {
            0.05
        };
        values[cols + n + i] = 0.2;
    }
    let acts = dir.path().join("acts");
    let matrix = ActivationMatrix::new("layer4", 3, cols, values, refs).unwrap();
    write_activation_dump(&acts, &matrix, BTreeMap::new()).unwrap();

    let out = dir.path().join("analysis");
    let mpath = data.join("manifest.ndjson");
    let args = [
        "analyze-neurons",
        "--activations",
        s(&acts),
        "--stroop-manifest",
        s(&mpath),
        "--topk",
        "90",
        "--theta",
        "0.5",
        "--out",
        s(&out),
    ];
    run(&args);
    let f = ProfilesFile::load(&out.join("profiles.ndjson")).unwrap();
    assert_eq!(f.profiles.len(), 3);
    assert_eq!(
        f.profiles[0].neuron_type,
        NeuronType::ColorWord(ColorTerm::Red)
    );
    assert_eq!(f.profiles[1].neuron_type, NeuronType::Color(ColorTerm::Red));
    assert_eq!(f.profiles[2].neuron_type, NeuronType::NotActivated);
    let a1 = f.profiles[1].color_selectivity.unwrap();
    assert!(a1 > 0.9, "{a1}");
    assert_eq!(f.profiles[0].color_selectivity, Some(0.0));
    // the red-font neuron's feature is reddish
    let h = f.profiles[1].dominant_hue.expect("hue");
    assert!(!(30.0..330.0).contains(&h), "{h}");

    for name in [
        "layer_types.csv",
        "layer_types.svg",
        "selectivity_bands.csv",
        "hue_histogram.csv",
        "hue_histogram.svg",
        "summary.json",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
    let types = csv_body(&fs::read_to_string(out.join("layer_types.csv")).unwrap());
    assert!(types[1].starts_with("layer4,3,"), "{}", types[1]);

    let svg = fs::read_to_string(out.join("layer_types.svg")).unwrap();
    let total: f64 = svg
        .split("data-pct=\"")
        .skip(1)
        .map(|s| s[..s.find('"').unwrap()].parse::<f64>().unwrap())
        .sum();
    assert!((total - 100.0).abs() <= 0.1, "{total}");

    let before = fs::read(out.join("profiles.ndjson")).unwrap();
    run(&args);
    assert_eq!(fs::read(out.join("profiles.ndjson")).unwrap(), before);

    let rep = dir.path().join("rep");
    let refh = dir.path().join("ref.txt");
    fs::write(
        &refh,
        (0..12).map(|i| format!("{}\n", i + 1)).collect::<String>(),
    )
    .unwrap();
    run(&[
        "report",
        "--results",
        s(&out.join("profiles.ndjson")),
        "--reference-hue",
        s(&refh),
        "--out",
        s(&rep),
    ]);
    let hue = fs::read_to_string(rep.join("hue_histogram.csv")).unwrap();
    assert!(hue.contains("# pearson_r: "));
    assert_eq!(csv_body(&hue).len(), 13);
}
