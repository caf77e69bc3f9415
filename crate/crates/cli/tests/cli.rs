// Copyright 2026 The DataSynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use datasynth_core::describer::{DatasetDescription, Mode};
use datasynth_core::inspector::ComparisonReport;
use datasynth_core::linker::{JoinEstimate, LINK_ID_COLUMN};
use datasynth_core::ingest::load_csv;
use datasynth_core::ingest::LoadOptions;

fn fixture(dir: &Path, rows: usize) -> PathBuf {
    let mut csv = String::from("age,sex,education,income,city\n");
    for i in 0..rows {
        let e = i % 4;
        let age = 20 + 10 * e + (i * 7) % 10;
        let sex = if (i * 3) % 5 < 2 { "F" } else { "M" };
        let income = 1000 * (e + 1) + (i * 37) % 500;
        let city = ["Oslo", "Lima", "Pune", "Kyiv", "Nice", "Bonn"][(i + e) % 6];
        let age = if i % 17 == 0 { String::new() } else { age.to_string() };
        csv.push_str(&format!("{age},{sex},e{e},{income},{city}\n"));
    }
    let p = dir.join("in.csv");
    fs::write(&p, csv).unwrap();
    p
}

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["datasynth"];
    argv.extend_from_slice(args);
    datasynth_cli::run(argv)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_datasynth"))
}

#[test]
fn generate_is_repeatable_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path(), 300);
    let desc = dir.path().join("desc.json");
    let out = dir.path().join("out.csv");
    assert_eq!(run(&["describe", "--mode", "independent", "--epsilon", "0.1", s(&input), "-o", s(&desc)]), 0);
    assert_eq!(run(&["generate", s(&desc), "--seed", "7", "-o", s(&out)]), 0);
    let first = fs::read(&out).unwrap();
    assert_eq!(run(&["generate", s(&desc), "--seed", "7", "-o", s(&out)]), 0);
    assert_eq!(fs::read(&out).unwrap(), first);
    assert_eq!(run(&["generate", s(&desc), "--seed", "8", "-o", s(&out)]), 0);
    assert_ne!(fs::read(&out).unwrap(), first);
}

#[test]
fn correlated_description_respects_parent_bound() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path(), 400);
    let desc = dir.path().join("desc.json");
    assert_eq!(run(&["describe", "--mode", "correlated", "--k", "4", "--seed", "1", s(&input), "-o", s(&desc)]), 0);
    let d = DatasetDescription::load(&desc).unwrap();
    assert_eq!(d.mode, Mode::Correlated);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&desc).unwrap()).unwrap();
    assert_eq!(json["format_version"], 1);
    let nodes = json["network"]["network"]["nodes"].as_array().expect("network nodes");
    assert!(!nodes.is_empty());
    for node in nodes {
        assert!(node["parents"].as_array().unwrap().len() <= 4);
    }
}

#[test]
fn default_row_count_is_input_size() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path(), 123);
    let desc = dir.path().join("desc.json");
    let out = dir.path().join("out.csv");
    assert_eq!(run(&["describe", "--seed", "3", s(&input), "-o", s(&desc)]), 0);
    assert_eq!(run(&["generate", s(&desc), "--seed", "4", "-o", s(&out)]), 0);
    let t = load_csv(&out, &LoadOptions::default()).unwrap();
    assert_eq!(t.row_count(), 123);
    assert_eq!(run(&["generate", s(&desc), "--seed", "4", "--num-tuples", "40", "--no-missing-injection", "-o", s(&out)]), 0);
    let t = load_csv(&out, &LoadOptions::default()).unwrap();
    assert_eq!(t.row_count(), 40);
    assert_eq!(t.column("age").unwrap().non_missing_count(), 40);
}

#[test]
fn compare_writes_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path(), 200);
    let desc = dir.path().join("desc.json");
    let out = dir.path().join("out.csv");
    let report = dir.path().join("report.json");
    assert_eq!(run(&["describe", "--seed", "5", s(&input), "-o", s(&desc)]), 0);
    assert_eq!(run(&["generate", s(&desc), "--seed", "6", "-o", s(&out)]), 0);
    let output = bin()
        .args(["compare", s(&input), s(&out), "--description", s(&desc), "-o", s(&report)])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.starts_with("attribute"));
    assert!(text.contains("network edges"));
    let r: ComparisonReport = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r.attributes.len(), 5);
}

#[test]
fn link_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path(), 60);
    let desc = dir.path().join("desc.json");
    let sigs = dir.path().join("sigs.txt");
    let est = dir.path().join("est.json");
    let (l, r) = (dir.path().join("l.csv"), dir.path().join("r.csv"));
    assert_eq!(run(&["describe", "--mode", "independent", "--seed", "1", s(&input), "-o", s(&desc)]), 0);
    assert_eq!(run(&["link", "sign", s(&input), "-o", s(&sigs)]), 0);
    assert_eq!(run(&["link", "estimate", s(&sigs), s(&sigs), "-o", s(&est)]), 0);
    let e = JoinEstimate::from_json(&fs::read_to_string(&est).unwrap()).unwrap();
    assert_eq!(e.he, 60);
    assert_eq!(
        run(&["link", "generate", s(&desc), s(&desc), "--estimate", s(&est), "--seed", "2", "--left-out", s(&l), "--right-out", s(&r)]),
        0
    );
    let lt = load_csv(&l, &LoadOptions::default()).unwrap();
    let rt = load_csv(&r, &LoadOptions::default()).unwrap();
    assert_eq!((lt.row_count(), rt.row_count()), (60, 60));
    assert!(lt.column(LINK_ID_COLUMN).is_some());
}

#[test]
fn probe_with_preset() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path(), 100);
    let desc = dir.path().join("desc.json");
    let cfg = dir.path().join("probe.json");
    let out = dir.path().join("probe.csv");
    assert_eq!(run(&["describe", "--mode", "independent", "--seed", "1", s(&input), "-o", s(&desc)]), 0);
    fs::write(
        &cfg,
        r#"{"format_version": 1, "size": 50,
            "overrides": [{"attribute": "education", "preset": "point-mass"}],
            "pathologies": [{"attribute": "income", "kind": "missing", "rate": 1.0}]}"#,
    )
    .unwrap();
    assert_eq!(run(&["probe", s(&desc), "--config", s(&cfg), "--seed", "9", "-o", s(&out)]), 0);
    let t = load_csv(&out, &LoadOptions::default()).unwrap();
    assert_eq!(t.row_count(), 50);
    assert_eq!(t.column("education").unwrap().distinct_count, 1);
    assert_eq!(t.column("income").unwrap().non_missing_count(), 0);
    let listing = bin().args(["probe", "--list-presets"]).output().unwrap();
    assert!(String::from_utf8(listing.stdout).unwrap().contains("bimodal-extremes"));
}

fn single_line_failure(args: &[&str], code: i32) {
    let output = bin().args(args).output().unwrap();
    assert_eq!(output.status.code(), Some(code), "{args:?}");
    let err = String::from_utf8(output.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("datasynth: "), "{err}");
}

#[test]
fn failures_are_one_line_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path(), 50);
    let desc = dir.path().join("desc.json");
    single_line_failure(&["describe", "--bogus", s(&input), "-o", s(&desc)], 2);
    single_line_failure(&["describe", "--mode", "fancy", s(&input), "-o", s(&desc)], 2);
    single_line_failure(&["frobnicate"], 2);
    single_line_failure(&["describe", "missing.csv", "-o", s(&desc)], 1);
    single_line_failure(&["describe", "--epsilon=-1", s(&input), "-o", s(&desc)], 1);
    assert!(!desc.exists());
    assert_eq!(run(&["describe", "--mode", "independent", s(&input), "-o", s(&desc)]), 0);
    single_line_failure(&["generate", s(&desc), "--mode", "correlated"], 1);
    single_line_failure(&["generate", s(&desc), "--uniform", "nope"], 1);
    single_line_failure(&["generate", "nope.json"], 1);
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}
