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

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use datasynth_core::describer::{describe, Mode, PrivacyParams};
use datasynth_core::distribution::{Bins, Discretizer};
use datasynth_core::generator::{generate, GenerationRequest};
use datasynth_core::ingest::{read_csv, LoadOptions, Table};
use datasynth_core::inspector::{compare, correlation_coefficient, head_tail, mi_matrix, CorrelationKind};
use datasynth_core::linker::{generate_linked, JoinEstimate, LINK_ID_COLUMN};
use datasynth_core::probegen::{generate_fairness_cluster, inject_pathology, CenterValue, ClusterSpec, PathologyKind, PathologyRule};

fn table(csv: &str) -> Table {
    read_csv(csv.as_bytes(), &LoadOptions::default()).unwrap()
}

fn privacy(epsilon: f64) -> PrivacyParams {
    PrivacyParams { epsilon, k: 2, ..PrivacyParams::default() }
}

fn correlated_fixture(rows: usize) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut csv = String::from("edu,job,age\n");
    for _ in 0..rows {
        let e = rng.random_range(0..4);
        let age = 20 + 10 * e + rng.random_range(0..10);
        csv.push_str(&format!("e{e},j{e},{age}\n"));
    }
    table(&csv)
}

fn independent_fixture(rows: usize, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("a,b\n");
    for _ in 0..rows {
        csv.push_str(&format!("a{},b{}\n", rng.random_range(0..5), rng.random_range(0..3)));
    }
    table(&csv)
}

#[test]
fn noise_free_round_trip_total_variation() {
    let input = correlated_fixture(1000);
    let desc = describe(&input, Mode::Independent, &privacy(0.0), 1).unwrap();
    let synth = generate(&GenerationRequest::new(&desc, 2).size(10 * desc.n)).unwrap();
    for attr in &desc.attributes {
        let dist = attr.distribution.as_ref().unwrap();
        let codes = Discretizer::new(&dist.bins).discretize(synth.column(&attr.name).unwrap());
        let counts = codes.counts();
        let total: usize = counts.iter().sum();
        let tv: f64 = counts
            .iter()
            .zip(&dist.probabilities)
            .map(|(c, p)| (*c as f64 / total as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 0.02, "{}: total variation {tv}", attr.name);
    }
}

#[test]
fn independent_columns_have_small_mi_and_cramers_v() {
    let t = independent_fixture(10_000, 3);
    let m = mi_matrix(&t);
    assert!(m.get("a", "b").unwrap() <= 0.05);
    let v = correlation_coefficient(&t.columns[0], &t.columns[1]).unwrap();
    assert_eq!(v.kind, CorrelationKind::CramersV);
    assert!(v.value <= 0.05, "{}", v.value);
}

#[test]
fn head_tail_disjoint_sets() {
    let a = independent_fixture(50, 4);
    let rows: String = (0..50).map(|i| format!("z{i},y{i}\n")).collect();
    let b = table(&format!("a,b\n{rows}"));
    let ht = head_tail(&a, &b, 5).unwrap();
    let seen: HashSet<&Option<String>> = a.columns.iter().flat_map(|c| &c.cells).collect();
    for row in ht.synthetic.head.iter().chain(&ht.synthetic.tail) {
        assert!(row.iter().all(|c| !seen.contains(c)));
    }
}

#[test]
fn compare_with_itself_is_exact() {
    let input = correlated_fixture(500);
    let desc = describe(&input, Mode::Correlated, &privacy(1.0), 5).unwrap();
    let report = compare(&input, &input, &desc).unwrap();
    assert!(report.attributes.iter().all(|a| a.kl_divergence.abs() < 1e-9));
    assert_eq!(report.input_mi, report.synthetic_mi);
    assert!(report.input_network.is_some() && report.synthetic_network.is_some());
    let json = report.to_json().unwrap();
    assert!(json.contains("\"kl_divergence\""));
}

#[test]
fn compare_tracks_mode_correlation() {
    let input = correlated_fixture(2000);
    let ind = describe(&input, Mode::Independent, &privacy(1.0), 6).unwrap();
    let cor = describe(&input, Mode::Correlated, &privacy(0.0), 6).unwrap();
    let si = generate(&GenerationRequest::new(&ind, 7).size(5000)).unwrap();
    let sc = generate(&GenerationRequest::new(&cor, 7).size(5000)).unwrap();
    let ri = compare(&input, &si, &ind).unwrap();
    let rc = compare(&input, &sc, &cor).unwrap();
    assert!(ri.input_mi.get("edu", "job").unwrap() > 0.9);
    assert!(ri.synthetic_mi.get("edu", "job").unwrap() < 0.05);
    assert!(rc.synthetic_mi.get("edu", "job").unwrap() > 0.9);
}

#[test]
fn compare_rejects_schema_mismatch() {
    let a = correlated_fixture(20);
    let b = independent_fixture(20, 1);
    let desc = describe(&a, Mode::Independent, &privacy(1.0), 0).unwrap();
    assert!(compare(&a, &b, &desc).is_err());
}

#[test]
fn pathology_rate_binomial_bound() {
    let rows: String = (0..10_000).map(|i| format!("{}\n", i % 97)).collect();
    let t = table(&format!("v\n{rows}"));
    let rule = PathologyRule { attribute: "v".into(), kind: PathologyKind::Missing, rate: 0.1 };
    let out = inject_pathology(&t, &[rule], 11).unwrap();
    let replaced = out.columns[0].cells.iter().filter(|c| c.is_none()).count();
    assert!((850..=1150).contains(&replaced), "{replaced}");
}

fn cluster_at(id: u64, x: f64, y: f64) -> ClusterSpec {
    ClusterSpec {
        id,
        center: BTreeMap::from([("x".to_string(), CenterValue::Number(x)), ("y".to_string(), CenterValue::Number(y))]),
        radius: BTreeMap::from([("x".to_string(), 1.5), ("y".to_string(), 1.5)]),
        size: 25,
        protected_attribute: "race".into(),
        protected_mix: BTreeMap::from([("b".to_string(), 0.2), ("w".to_string(), 0.8)]),
    }
}

#[test]
fn far_clusters_nearest_neighbor_in_own_cluster() {
    let mut points: Vec<(u64, f64, f64)> = Vec::new();
    for spec in [cluster_at(0, 0.25, 0.25), cluster_at(1, 40.25, -20.25)] {
        let t = generate_fairness_cluster(&spec, 3).unwrap();
        for i in 0..t.row_count() {
            let get = |c: &str| t.column(c).unwrap().cells[i].as_deref().unwrap().parse::<f64>().unwrap();
            points.push((spec.id, get("x"), get("y")));
        }
    }
    for (i, p) in points.iter().enumerate() {
        let nearest = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .min_by(|(_, a), (_, b)| {
                let da = (a.1 - p.1).hypot(a.2 - p.2);
                let db = (b.1 - p.1).hypot(b.2 - p.2);
                da.total_cmp(&db)
            })
            .unwrap()
            .1;
        assert_eq!(nearest.0, p.0);
    }
}

#[test]
fn linked_tables_exact_join() {
    let input = correlated_fixture(100);
    let d = describe(&input, Mode::Independent, &privacy(1.0), 0).unwrap();
    for e in [JoinEstimate { h: 0, e: 0, he: 10 }, JoinEstimate { h: 5, e: 7, he: 0 }, JoinEstimate { h: 300, e: 200, he: 500 }] {
        let (l, r) = generate_linked(&d, &d, e, 9).unwrap();
        assert_eq!(l.row_count(), e.h + e.he);
        assert_eq!(r.row_count(), e.e + e.he);
        let left: HashSet<&str> = l.column(LINK_ID_COLUMN).unwrap().non_missing().collect();
        let right: HashSet<&str> = r.column(LINK_ID_COLUMN).unwrap().non_missing().collect();
        assert_eq!(left.len(), l.row_count());
        assert_eq!(left.intersection(&right).count(), e.he);
        let (l2, _) = generate_linked(&d, &d, e, 9).unwrap();
        assert_eq!(l2, l);
    }
    assert!(generate_linked(&d, &d, JoinEstimate { h: 0, e: 3, he: 0 }, 0).is_err());
}

#[test]
fn histogram_bins_cover_synthetic_numeric_values() {
    let input = correlated_fixture(300);
    let desc = describe(&input, Mode::Correlated, &privacy(1.0), 12).unwrap();
    let synth = generate(&GenerationRequest::new(&desc, 13).size(2000)).unwrap();
    let Some(Bins::Histogram { edges }) = desc.attribute("age").unwrap().distribution.as_ref().map(|d| &d.bins) else {
        panic!("age should be a histogram");
    };
    for v in synth.column("age").unwrap().non_missing() {
        let v: f64 = v.parse().unwrap();
        assert!(v >= edges[0] && v <= *edges.last().unwrap(), "{v}");
    }
}
