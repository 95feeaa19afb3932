use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn beamsurp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamsurp"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn gp_config(dir: &Path, extra: Value) -> PathBuf {
    let mut cfg = json!({
        "word_beams": [1, 2, 1000],
        "scorer": {
            "kind": "treebank",
            "path": fixtures().join("garden_path.wtb"),
            "weighted": true,
            "exact_fit": {
                "signature": { "top_entries": 64, "open_clip": 64, "lexical": false },
                "word_smoothing": 0.01
            }
        },
        "specs": fixtures().join("garden_path_specs.json"),
        "output_dir": "out"
    });
    for (k, v) in extra.as_object().unwrap() {
        cfg[k] = v.clone();
    }
    let path = dir.join("run.json");
    fs::write(&path, cfg.to_string()).unwrap();
    path
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .collect()
}

#[test]
fn oracle_extract_writes_one_derivation_per_tree() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("one.trees"), "(S (NP the dog) (VP ran))\n").unwrap();
    let out = beamsurp(&["oracle-extract", "one.trees"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let derivations: Vec<&str> = text.split("\n\n").filter(|b| !b.trim().is_empty()).collect();
    assert_eq!(derivations.len(), 1);
    assert!(text.starts_with("NT(S)\n"));

    fs::write(dir.path().join("empty.trees"), "").unwrap();
    let out = beamsurp(&["oracle-extract", "empty.trees"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_extract_reports_the_bad_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.trees"), "(S a)\n(S (NP b)\n").unwrap();
    let out = beamsurp(&["oracle-extract", "bad.trees"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains('2'));
}

#[test]
fn usage_errors_exit_with_one_and_help_with_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(beamsurp(&["no-such-command"], dir.path()).status.code(), Some(1));
    assert_eq!(beamsurp(&["--help"], dir.path()).status.code(), Some(0));
    fs::write(dir.path().join("c.json"), r#"{"word_beams": []}"#).unwrap();
    let out = beamsurp(&["surprisal", "-c", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    fs::write(dir.path().join("c.json"), r#"{"unknown_field": 1}"#).unwrap();
    let out = beamsurp(&["surprisal", "-c", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn surprisal_reproduces_the_two_parse_example() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.txt"), "ex\tw1 w2\n").unwrap();
    let cfg = json!({
        "word_beams": [1, 1000],
        "scorer": { "kind": "treebank", "path": fixtures().join("two_parse.wtb"), "weighted": true },
        "sentences": "s.txt",
        "output_dir": "out"
    });
    fs::write(dir.path().join("c.json"), cfg.to_string()).unwrap();
    let out = beamsurp(&["surprisal", "-c", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("out/surprisal.csv"));
    let bits = |k: &str| -> f64 {
        rows.iter()
            .find(|r| &r[2] == k && &r[3] == "1")
            .unwrap()[5]
            .parse()
            .unwrap()
    };
    assert!((bits("1") - (-(0.01f64).log2())).abs() < 1e-9);
    assert!((bits("1000") - (-(0.059f64).log2())).abs() < 1e-9);
}

#[test]
fn empty_sentence_list_gives_a_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.txt"), "# nothing here\n").unwrap();
    let cfg = json!({
        "scorer": { "kind": "treebank", "path": fixtures().join("two_parse.wtb"), "weighted": true },
        "sentences": "s.txt",
        "output_dir": "out"
    });
    fs::write(dir.path().join("c.json"), cfg.to_string()).unwrap();
    assert_eq!(beamsurp(&["surprisal", "-c", "c.json"], dir.path()).status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("out/surprisal.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("sentence_id,"));
}

#[test]
fn beam_death_is_a_flagged_row() {
    let dir = tempfile::tempdir().unwrap();
    // w9 is outside the unsmoothed vocabulary.
    fs::write(dir.path().join("s.txt"), "a\tw1 w2\nb\tw1 w9\n").unwrap();
    let cfg = json!({
        "word_beams": [1],
        "scorer": { "kind": "treebank", "path": fixtures().join("two_parse.wtb"), "weighted": true },
        "sentences": "s.txt",
        "output_dir": "out"
    });
    fs::write(dir.path().join("c.json"), cfg.to_string()).unwrap();
    let out = beamsurp(&["surprisal", "-c", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let rows = csv_rows(&dir.path().join("out/surprisal.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().filter(|r| &r[0] == "a").all(|r| &r[8] == "ok"));
    assert!(rows.iter().filter(|r| &r[0] == "b").all(|r| &r[8] != "ok" && r[5].is_empty()));
}

#[test]
fn gp_run_writes_every_condition_and_region() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gp_config(dir.path(), json!({}));
    let out = beamsurp(&["gp-run", "-c", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("out/gp_results.csv"));
    // 3 items x (3 widths + 2 counterfactual conditions) x 4 regions.
    assert_eq!(rows.len(), 3 * 5 * 4);
    let disamb = |item: &str, cond: &str, k: &str| -> f64 {
        rows.iter()
            .find(|r| &r[0] == item && &r[3] == cond && &r[4] == k && &r[5] == "disambiguating")
            .unwrap()[8]
            .parse()
            .unwrap()
    };
    for item in ["mvrr-horse", "nps-chef", "npz-hunter"] {
        let forced = disamb(item, "forced_garden_path", "1000");
        let plain = disamb(item, "beam", "1000");
        let fp = disamb(item, "full_parallel", "1000");
        assert!(forced >= plain - 1e-9 && plain >= fp - 1e-9);
    }
}

#[test]
fn missing_substitute_skips_full_parallel_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let mut specs: Value =
        serde_json::from_str(&fs::read_to_string(fixtures().join("garden_path_specs.json")).unwrap())
            .unwrap();
    specs[0]
        .as_object_mut()
        .unwrap()
        .remove("fullparallel_substitute");
    fs::write(dir.path().join("specs.json"), specs.to_string()).unwrap();
    let cfg = gp_config(dir.path(), json!({ "specs": "specs.json" }));
    let out = beamsurp(&["gp-run", "-c", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let failures = csv_rows(&dir.path().join("out/failures.csv"));
    assert_eq!(failures.len(), 1);
    assert_eq!(&failures[0][2], "full_parallel");
    // The other items still ran.
    let rows = csv_rows(&dir.path().join("out/gp_results.csv"));
    assert!(rows.iter().any(|r| &r[0] == "nps-chef" && &r[3] == "full_parallel"));
}

#[test]
fn identical_versions_have_no_effect() {
    let dir = tempfile::tempdir().unwrap();
    let mut specs: Value =
        serde_json::from_str(&fs::read_to_string(fixtures().join("garden_path_specs.json")).unwrap())
            .unwrap();
    let spec = specs[0].as_object_mut().unwrap();
    spec["unambiguous_sentence"] = spec["ambiguous_sentence"].clone();
    let one = Value::Array(vec![specs[0].clone()]);
    fs::write(dir.path().join("specs.json"), one.to_string()).unwrap();
    let cfg = gp_config(dir.path(), json!({ "specs": "specs.json" }));
    beamsurp(&["gp-run", "-c", cfg.to_str().unwrap()], dir.path());
    let rows = csv_rows(&dir.path().join("out/gp_results.csv"));
    let beam: Vec<_> = rows.iter().filter(|r| &r[3] == "beam").collect();
    assert!(!beam.is_empty());
    for r in beam {
        assert_eq!(r[8].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn linking_pipeline_produces_models_tables_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let fillers = [
        "the dog walked past the barn",
        "the man knew the recipe",
        "the chef claimed the recipe was very good",
        "while the man slept the deer ran into the woods",
        "the horse raced past the barn",
    ];
    let text: String = fillers
        .iter()
        .enumerate()
        .map(|(i, s)| format!("f{i}\t{s}\n"))
        .collect();
    fs::write(dir.path().join("fillers.txt"), text).unwrap();
    let cfg = gp_config(
        dir.path(),
        json!({
            "sentences": "fillers.txt",
            "synth": { "n_rows": 600, "seed": 3 },
            "bands": [{ "construction": "MV_RR", "region": "summed", "low_ms": 300.0 }]
        }),
    );
    let c = cfg.to_str().unwrap();
    for cmd in ["gp-run", "synth-fillers", "fit-rt", "predict-gpe", "report"] {
        let out = beamsurp(&[cmd, "-c", c], dir.path());
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let o = dir.path().join("out");
    assert_eq!(fs::read_dir(o.join("models")).unwrap().count(), 3 * 2);
    assert_eq!(csv_rows(&o.join("delta_ll.csv")).len(), 3);
    for plot in ["delta_ll.svg", "effects.svg"] {
        let svg = fs::read_to_string(o.join(plot)).unwrap();
        assert!(svg.starts_with("<svg") && svg.len() > 200);
    }
    let effects = csv_rows(&o.join("effects.csv"));
    let flagged: Vec<_> = effects
        .iter()
        .filter(|r| &r[0] == "MV_RR" && &r[1] == "summed")
        .collect();
    assert!(!flagged.is_empty());
    assert!(flagged.iter().all(|r| &r[9] == "below"));
    let report = fs::read_to_string(o.join("report.md")).unwrap();
    assert!(report.contains("Predicted reading time effects"));
}

#[test]
fn predict_without_models_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gp_config(dir.path(), json!({}));
    let c = cfg.to_str().unwrap();
    beamsurp(&["gp-run", "-c", c], dir.path());
    fs::write(
        dir.path().join("out/fillers.csv"),
        "participant_id,item_id,position,token,rt_ms,length,logfreq,surprisal,construction,ambiguity\n",
    )
    .unwrap();
    let out = beamsurp(&["predict-gpe", "-c", c], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fit-rt"));
}

#[test]
fn fitted_scorer_round_trips_through_parse_eval() {
    let dir = tempfile::tempdir().unwrap();
    let tb = fixtures().join("small.trees");
    let out = beamsurp(
        &[
            "fit-scorer",
            "--treebank",
            tb.to_str().unwrap(),
            "--out",
            "scorer.json",
            "--min-word-count",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = json!({
        "scorer": { "kind": "tabular", "path": "scorer.json" },
        "treebank": tb,
        "decode_word_beam": 50,
        "decode_action_beam": 200,
        "output_dir": "out"
    });
    fs::write(dir.path().join("c.json"), cfg.to_string()).unwrap();
    let out = beamsurp(&["parse-eval", "-c", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("out/f1.csv"));
    assert_eq!(rows.len(), 3);
    let summary = csv_rows(&dir.path().join("out/f1_summary.csv"));
    let f1: f64 = summary[0][7].parse().unwrap();
    assert!((0.0..=1.0).contains(&f1));
}
