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

use std::collections::BTreeMap;

use proptest::prelude::*;

use datasynth_core::bayesnet::{greedy_bayes, DiscreteTable};
use datasynth_core::describer::{add_laplace_noise, describe, DatasetDescription, Mode, PrivacyParams};
use datasynth_core::distribution::{build_frequency, Bins, Distribution};
use datasynth_core::generator::{generate, GenerationRequest};
use datasynth_core::ingest::{parse_numeric, Column, DataType, LoadOptions, Table};
use datasynth_core::inspector::{kl_divergence, mi_matrix, rebin};
use datasynth_core::linker::{estimate_join, Signature, SignatureParams};
use datasynth_core::probegen::{generate_fairness_cluster, inject_pathology, CenterValue, ClusterSpec, PathologyKind, PathologyRule};
use datasynth_core::rng::{Purpose, Seeder};

fn cell() -> impl Strategy<Value = Option<String>> {
    prop_oneof![
        1 => Just(None),
        3 => (0i64..40).prop_map(|v| Some(v.to_string())),
        1 => (0.0f64..100.0).prop_map(|v| Some(format!("{v:.3}"))),
        1 => "[a-d]{1,3}".prop_map(Some),
    ]
}

fn cells(max: usize) -> impl Strategy<Value = Vec<Option<String>>> {
    prop::collection::vec(cell(), 1..max)
}

fn numeric_rows() -> impl Strategy<Value = Vec<(u8, i32, Option<String>)>> {
    prop::collection::vec((0u8..5, -50i32..50, prop::option::of("[a-c]")), 5..80)
}

fn table_of(rows: &[(u8, i32, Option<String>)]) -> Table {
    let mut csv = String::from("cat,num,tag\n");
    for (c, n, t) in rows {
        csv.push_str(&format!("c{c},{n},{}\n", t.as_deref().unwrap_or("")));
    }
    datasynth_core::ingest::read_csv(csv.as_bytes(), &LoadOptions::default()).unwrap()
}

fn probability_vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..12).prop_filter_map("all zero", |w| {
        let s: f64 = w.iter().sum();
        (s > 0.0).then(|| w.iter().map(|x| x / s).collect())
    })
}

fn labels(m: usize) -> Bins {
    Bins::BarChart { labels: (0..m).map(|i| format!("l{i:02}")).collect() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn column_inference_ignores_row_order(mut cs in cells(60), seed in any::<u64>()) {
        let a = Column::new("x", cs.clone(), 10);
        use rand::seq::SliceRandom;
        cs.shuffle(&mut Seeder::new(seed).stream(Purpose::Rows, 0));
        let b = Column::new("x", cs, 10);
        prop_assert_eq!(a.data_type, b.data_type);
        prop_assert_eq!(a.categorical, b.categorical);
        prop_assert_eq!(a.distinct_count, b.distinct_count);
    }

    #[test]
    fn missing_rate_complements_present(cs in cells(60)) {
        let c = Column::new("x", cs.clone(), 10);
        let present = cs.iter().filter(|c| c.is_some()).count() as f64 / cs.len() as f64;
        prop_assert!((c.missing_rate().unwrap() + present - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frequencies_sum_to_one(cs in cells(60)) {
        let mut c = Column::new("x", cs, 10);
        c.categorical = true;
        if c.non_missing_count() > 0 {
            let d = build_frequency(&c).unwrap();
            prop_assert!(d.validate().is_ok());
        }
    }

    #[test]
    fn noisy_distributions_stay_valid(p in probability_vector(), eps in 0.0f64..5.0, n in 1usize..500, seed in any::<u64>()) {
        let d = Distribution::new(labels(p.len()), p).unwrap();
        let mut rng = Seeder::new(seed).stream(Purpose::AttributeNoise, 0);
        let noisy = add_laplace_noise(&d, eps, n, &mut rng);
        prop_assert!(noisy.validate().is_ok());
        prop_assert!(noisy.probabilities.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_self(p in probability_vector(), q in probability_vector()) {
        let m = p.len().min(q.len());
        let renorm = |v: &[f64]| -> Distribution {
            Distribution::from_weights(labels(m), v[..m].to_vec())
        };
        let (p, q) = (renorm(&p), renorm(&q));
        prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-9);
    }

    #[test]
    fn mi_matrix_symmetric_in_unit_interval(rows in numeric_rows()) {
        let m = mi_matrix(&table_of(&rows));
        for i in 0..m.names.len() {
            for j in 0..m.names.len() {
                let v = m.values[i][j];
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert!((v - m.values[j][i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rebin_conserves_counts(vals in prop::collection::vec(prop::option::of(-100.0f64..200.0), 1..100)) {
        let cells: Vec<Option<String>> = vals.iter().map(|v| v.map(|x| format!("{x}"))).collect();
        let mut c = Column::new("x", cells, 10);
        c.data_type = DataType::Float;
        let (counts, unmatched) = rebin(&c, &Bins::Histogram { edges: vec![0.0, 25.0, 50.0, 75.0, 100.0] });
        prop_assert_eq!(unmatched, 0);
        prop_assert_eq!(counts.iter().sum::<usize>(), c.non_missing_count());
    }

    #[test]
    fn join_estimate_conserves_sizes(left in prop::collection::vec("[a-e]{1,8}", 0..30), right in prop::collection::vec("[a-e]{1,8}", 0..30), tau in 0.05f64..1.0) {
        let p = SignatureParams { n: 2, ..SignatureParams::default() };
        let sign = |v: &[String]| -> Vec<Signature> { v.iter().map(|s| p.sign(&[Some(s)]).unwrap()).collect() };
        let e = estimate_join(&sign(&left), &sign(&right), tau).unwrap();
        prop_assert_eq!(e.h + e.he, left.len());
        prop_assert_eq!(e.e + e.he, right.len());
        prop_assert!(e.he <= left.len().min(right.len()));
    }

    #[test]
    fn one_char_edit_keeps_most_grams(s in "[a-z]{6,30}", pos in any::<prop::sample::Index>(), n in 1usize..4) {
        let mut chars: Vec<char> = s.chars().collect();
        let i = pos.index(chars.len());
        chars[i] = if chars[i] == 'z' { 'a' } else { 'z' };
        let t: String = chars.into_iter().collect();
        let p = SignatureParams { n, k: usize::MAX, separator: '|' };
        let (a, b) = (p.sign(&[Some(&s)]).unwrap(), p.sign(&[Some(&t)]).unwrap());
        let m = s.chars().count();
        let windows_a: Vec<String> = s.chars().collect::<Vec<_>>().windows(n).map(|w| w.iter().collect()).collect();
        let windows_b: Vec<String> = t.chars().collect::<Vec<_>>().windows(n).map(|w| w.iter().collect()).collect();
        let kept = windows_a.iter().zip(&windows_b).filter(|(x, y)| x == y).count();
        prop_assert!(kept + n > m - n);
        if n == 1 {
            prop_assert!(kept as f64 >= (m - n) as f64 / m as f64 * windows_a.len() as f64 - 1e-9);
        }
        let shared = a.grams().iter().filter(|g| b.grams().contains(g)).count();
        prop_assert!(shared + n >= a.len() && shared + n >= b.len());
    }

    #[test]
    fn pathology_preserves_shape(rows in numeric_rows(), rate in 0.0f64..1.0, seed in any::<u64>()) {
        let t = table_of(&rows);
        let rules = [PathologyRule { attribute: "num".into(), kind: PathologyKind::Extreme, rate }];
        let out = inject_pathology(&t, &rules, seed).unwrap();
        prop_assert_eq!(out.row_count(), t.row_count());
        prop_assert_eq!(out.names(), t.names());
        prop_assert_eq!(out.column("cat"), t.column("cat"));
        prop_assert_eq!(out.column("tag"), t.column("tag"));
        prop_assert_eq!(&inject_pathology(&t, &rules, seed).unwrap(), &out);
    }

    #[test]
    fn cluster_rows_within_twice_radius(size in 1usize..40, r in 0.0f64..5.0, seed in any::<u64>()) {
        let spec = ClusterSpec {
            id: 1,
            center: BTreeMap::from([("a".to_string(), CenterValue::Number(10.5)), ("b".to_string(), CenterValue::Number(-3.25))]),
            radius: BTreeMap::from([("a".to_string(), r), ("b".to_string(), r)]),
            size,
            protected_attribute: "p".into(),
            protected_mix: BTreeMap::from([("x".to_string(), 0.5), ("y".to_string(), 0.5)]),
        };
        let t = generate_fairness_cluster(&spec, seed).unwrap();
        let pts: Vec<[f64; 2]> = (0..size).map(|i| {
            let get = |c: &str| t.column(c).unwrap().cells[i].as_deref().unwrap().parse::<f64>().unwrap();
            [get("a"), get("b")]
        }).collect();
        for p in &pts {
            for q in &pts {
                let d = (p[0] - q[0]).abs().max((p[1] - q[1]).abs());
                prop_assert!(d <= 2.0 * r + 1e-9);
            }
        }
    }
}

fn describe_rows(rows: &[(u8, i32, Option<String>)], mode: Mode, eps: f64, seed: u64) -> DatasetDescription {
    let p = PrivacyParams { epsilon: eps, k: 2, ..PrivacyParams::default() };
    describe(&table_of(rows), mode, &p, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_values_typed_and_in_domain(rows in numeric_rows(), seed in any::<u64>(), mode_i in 0usize..3) {
        let mode = [Mode::Random, Mode::Independent, Mode::Correlated][mode_i];
        let d = describe_rows(&rows, mode, 1.0, seed);
        let t = generate(&GenerationRequest::new(&d, seed ^ 1).size(200)).unwrap();
        for (a, c) in d.attributes.iter().zip(&t.columns) {
            for v in c.non_missing() {
                if a.data_type != DataType::String {
                    prop_assert!(parse_numeric(a.data_type, v).is_some(), "{} is not {}", v, a.data_type);
                }
                if d.mode != Mode::Random {
                    match a.distribution.as_ref().map(|x| &x.bins) {
                        Some(Bins::BarChart { labels }) => prop_assert!(labels.iter().any(|l| l == v)),
                        Some(Bins::Histogram { edges }) => {
                            let x = parse_numeric(a.data_type, v).unwrap();
                            prop_assert!(x >= edges[0] - 0.5 && x <= edges[edges.len() - 1] + 0.5);
                        }
                        None => {}
                    }
                }
            }
        }
    }

    #[test]
    fn generation_is_a_function_of_its_inputs(rows in numeric_rows(), seed in any::<u64>()) {
        let d = describe_rows(&rows, Mode::Correlated, 0.5, seed);
        let a = generate(&GenerationRequest::new(&d, seed).size(64)).unwrap();
        let b = generate(&GenerationRequest::new(&d, seed).size(64)).unwrap();
        prop_assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
    }

    #[test]
    fn description_json_round_trips(rows in numeric_rows(), seed in any::<u64>()) {
        let d = describe_rows(&rows, Mode::Correlated, 1.0, seed);
        let back = DatasetDescription::from_json(&d.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn greedy_network_is_well_formed(rows in numeric_rows(), seed in any::<u64>(), k in 1usize..4) {
        let t = table_of(&rows);
        let d = describe_rows(&rows, Mode::Independent, 0.0, 0);
        let attrs = d.attributes.iter().filter_map(|a| a.distribution.as_ref().map(|x| (a.name.as_str(), &x.bins, x.probabilities.clone())));
        let data = DiscreteTable::from_table(&t, attrs).unwrap();
        if data.names.len() >= 2 {
            let mut rng = Seeder::new(seed).stream(Purpose::Structure, 0);
            let net = greedy_bayes(&data, k, 1.0, &mut rng).unwrap();
            prop_assert!(net.validate().is_ok());
            prop_assert_eq!(net.d(), data.names.len());
        }
    }
}
