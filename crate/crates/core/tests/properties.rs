use std::collections::HashMap;

use multitier::classifier::{BinaryMatrix, MaxFeatures};
use multitier::evaluation::{bcubed_clusterings, normalized_edit_distance};
use multitier::prelude::*;
use multitier::wordlist::{Cell, CognateSet};
use proptest::prelude::*;

// p/b share a class, a/e do not, and k stands alone.
const ALPHABET: [&str; 5] = ["p", "b", "a", "e", "k"];

fn word(max: usize) -> impl Strategy<Value = Vec<Segment>> {
    prop::collection::vec(0..ALPHABET.len(), 1..=max)
        .prop_map(|v| v.into_iter().map(|i| Segment::new(ALPHABET[i]).unwrap()).collect())
}

/// Scores every monotone alignment of `a` and `b` and returns the best.
fn brute_force_best(a: &[Segment], b: &[Segment], s: &ScoringScheme, m: &SoundClassModel) -> i32 {
    fn walk(a: &[Segment], b: &[Segment], s: &ScoringScheme, m: &SoundClassModel, acc: i32, best: &mut i32) {
        if a.is_empty() && b.is_empty() {
            *best = (*best).max(acc);
            return;
        }
        if let (Some(x), Some(y)) = (a.first(), b.first()) {
            let sub = if x == y {
                s.match_identical
            } else if m.sound_class(x.as_str()) == m.sound_class(y.as_str()) {
                s.match_class
            } else {
                s.mismatch
            };
            walk(&a[1..], &b[1..], s, m, acc + sub, best);
        }
        if !a.is_empty() {
            walk(&a[1..], b, s, m, acc + s.gap, best);
        }
        if !b.is_empty() {
            walk(a, &b[1..], s, m, acc + s.gap, best);
        }
    }
    let mut best = i32::MIN;
    walk(a, b, s, m, 0, &mut best);
    best
}

fn degap(v: &[Segment]) -> Vec<Segment> {
    v.iter().filter(|s| !s.is_gap()).cloned().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pairwise_score_is_optimal(a in word(6), b in word(6)) {
        let s = ScoringScheme::default();
        let m = SoundClassModel::sca();
        let p = pairwise_align(&a, &b, &s, &m).unwrap();
        prop_assert_eq!(p.score, brute_force_best(&a, &b, &s, &m));
        prop_assert_eq!(p.a.len(), p.b.len());
        prop_assert_eq!(degap(&p.a), a);
        prop_assert_eq!(degap(&p.b), b);
        prop_assert!(p.a.iter().zip(&p.b).all(|(x, y)| !(x.is_gap() && y.is_gap())));
    }

    #[test]
    fn msa_invariants(words in prop::collection::vec(prop::option::of(word(5)), 2..5)) {
        let languages: Vec<String> = (0..words.len()).map(|i| format!("L{i}")).collect();
        let cells: Vec<Cell> = words.iter().map(|w| w.clone().map_or(Cell::ToPredict, Cell::Present)).collect();
        prop_assume!(cells.iter().any(Cell::is_present));
        let row = CognateSet { cogid: "X".into(), cells };
        let s = ScoringScheme::default();
        let m = SoundClassModel::sca();
        let a = msa(&row, &languages, &s, &m).unwrap();
        a.check(&row).unwrap();
        prop_assert_eq!(msa(&row, &languages, &s, &m).unwrap(), a);
    }

    #[test]
    fn shifts_stay_inside_their_set(
        sets in prop::collection::vec(prop::collection::vec(word(4), 2..=2), 1..5),
        offsets in prop::collection::btree_set(prop_oneof![-4i32..=-1, 1i32..=4], 0..4),
    ) {
        let languages = vec!["A".to_string(), "B".to_string()];
        let alignments: Vec<AlignmentMatrix> = sets
            .iter()
            .enumerate()
            .map(|(i, forms)| {
                let row = CognateSet {
                    cogid: format!("S{i}"),
                    cells: forms.iter().cloned().map(Cell::Present).collect(),
                };
                msa(&row, &languages, &ScoringScheme::default(), &SoundClassModel::sca()).unwrap()
            })
            .collect();
        let offsets: Vec<i32> = offsets.into_iter().collect();
        let spec = TierSpec::new(&offsets, true, true).unwrap();
        let frame = extend(&transpose(&alignments).unwrap(), &spec, &SoundClassModel::sca()).unwrap();
        prop_assert_eq!(frame.tiers().len(), 2 + 2 * 2 * (1 + offsets.len()));

        // Independent lookup: (cogid, site) -> column.
        let grid: HashMap<(String, usize), Vec<String>> = alignments
            .iter()
            .flat_map(|a| (0..a.len()).map(move |c| ((a.cogid.clone(), c + 1), a.column(c).map(|s| s.to_string()).collect())))
            .collect();
        let sc = SoundClassModel::sca();
        for r in frame.records() {
            for (t, key) in frame.tiers().iter().enumerate() {
                let TierKey::Language { language, base, offset } = key else { continue };
                let l = languages.iter().position(|x| x == language).unwrap();
                let target = r.site_index as i64 + *offset as i64;
                let expected = match grid.get(&(r.cogid.clone(), target.max(0) as usize)) {
                    Some(col) if target >= 1 => match base {
                        multitier::multitier::BaseTier::Segment => col[l].clone(),
                        multitier::multitier::BaseTier::SoundClass => sc.sound_class(&col[l]),
                    },
                    _ => "∅".to_string(),
                };
                prop_assert_eq!(&r.values[t], &expected);
            }
        }
        prop_assert_eq!(extend(&frame, &spec, &sc).unwrap(), frame);
    }

    #[test]
    fn edit_distance_is_a_metric(a in word(6), b in word(6), c in word(6)) {
        prop_assert_eq!(edit_distance(&a, &a), 0);
        prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
        prop_assert!(edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c));
        prop_assert_eq!(edit_distance(&a, &b) == 0, a == b);
        let ned = normalized_edit_distance(&a, &b);
        prop_assert!((0.0..=1.0).contains(&ned));
    }

    #[test]
    fn bcubed_is_label_free(a in word(6), b in word(6), shift in 1usize..5) {
        let s = ScoringScheme::default();
        let m = SoundClassModel::sca();
        let f = bcubed_f(&a, &b, &s, &m).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        // Renaming symbols on either side leaves the clusterings unchanged.
        let aligned = pairwise_align(&a, &b, &s, &m).unwrap();
        let rename = |v: &[Segment]| -> Vec<String> {
            v.iter()
                .map(|x| match ALPHABET.iter().position(|y| *y == x.as_str()) {
                    Some(i) => format!("z{}", (i + shift) % ALPHABET.len()),
                    None => x.to_string(),
                })
                .collect()
        };
        let base = bcubed_clusterings(&aligned.a, &aligned.b);
        prop_assert_eq!(base, f);
        prop_assert!((bcubed_clusterings(&rename(&aligned.a), &aligned.b) - base).abs() < 1e-12);
        prop_assert!((bcubed_clusterings(&aligned.a, &rename(&aligned.b)) - base).abs() < 1e-12);
    }

    #[test]
    fn bcubed_one_iff_same_partition(p in prop::collection::vec(0u8..3, 1..8), g in prop::collection::vec(0u8..3, 1..8)) {
        let n = p.len().min(g.len());
        let (p, g) = (&p[..n], &g[..n]);
        let same = (0..n).all(|i| (0..n).all(|j| (p[i] == p[j]) == (g[i] == g[j])));
        let f = bcubed_clusterings(p, g);
        prop_assert_eq!(same, (f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forest_probabilities_sum_to_one(
        rows in prop::collection::vec(prop::collection::vec(0u8..2, 6), 1..25),
        labels in prop::collection::vec(0usize..4, 25),
        query in prop::collection::vec(0u8..2, 6),
        seed in any::<u64>(),
    ) {
        let x = BinaryMatrix::from_rows(&rows).unwrap();
        let y: Vec<String> = labels[..rows.len()].iter().map(|l| ["-", "a", "b", "c"][*l].to_string()).collect();
        let p = ForestParams { n_trees: 7, seed, ..Default::default() };
        let m = train_forest(&x, &y, &p).unwrap();
        let d = m.predict_proba(&query).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-9);
        prop_assert!(d.iter().all(|(_, p)| p >= 0.0));
    }

    #[test]
    fn single_tree_fits_consistent_data(
        rows in prop::collection::btree_map(prop::collection::vec(0u8..2, 8), 0usize..3, 1..30),
        max_features in prop_oneof![Just(MaxFeatures::Sqrt), Just(MaxFeatures::All), Just(MaxFeatures::Count(1))],
    ) {
        let (xs, ys): (Vec<Vec<u8>>, Vec<String>) = rows.into_iter().map(|(x, y)| (x, y.to_string())).unzip();
        let x = BinaryMatrix::from_rows(&xs).unwrap();
        let p = ForestParams { n_trees: 1, bootstrap: false, max_features, ..Default::default() };
        let m = train_forest(&x, &ys, &p).unwrap();
        prop_assert_eq!(m.predict(&x).unwrap(), ys);
    }

    #[test]
    fn encoding_has_one_hot_per_block(
        sets in prop::collection::vec(prop::collection::vec(word(4), 3..=3), 1..4),
        probe in word(4),
    ) {
        let languages: Vec<String> = ["A", "B", "C"].map(String::from).to_vec();
        let rows: Vec<CognateSet> = sets
            .iter()
            .enumerate()
            .map(|(i, forms)| CognateSet { cogid: format!("S{i}"), cells: forms.iter().cloned().map(Cell::Present).collect() })
            .collect();
        let w = Wordlist::new(languages.clone(), rows).unwrap();
        let spec = TierSpec::default();
        let frame = multitier::pipeline::build_frame(&w, &spec, &ScoringScheme::default(), &SoundClassModel::sca()).unwrap();
        let (x, vocab) = encode(&frame, "C", None).unwrap();
        for i in 0..x.rows() {
            for b in vocab.blocks() {
                let hot: u32 = x.row(i)[b.offset..b.offset + b.categories.len()].iter().map(|&v| v as u32).sum();
                prop_assert_eq!(hot, 1);
            }
        }
        // A different set under the same vocabulary: at most one hot bit.
        let other = CognateSet { cogid: "Q".into(), cells: vec![Cell::Present(probe.clone()), Cell::Present(probe), Cell::Absent] };
        let qw = Wordlist::new(languages, vec![other]).unwrap();
        let qf = multitier::pipeline::build_frame(&qw, &spec, &ScoringScheme::default(), &SoundClassModel::sca()).unwrap();
        let (qx, _) = encode(&qf, "C", Some(&vocab)).unwrap();
        for i in 0..qx.rows() {
            for b in vocab.blocks() {
                let hot: u32 = qx.row(i)[b.offset..b.offset + b.categories.len()].iter().map(|&v| v as u32).sum();
                prop_assert!(hot <= 1);
            }
        }
    }
}

fn wordlist() -> impl Strategy<Value = Wordlist> {
    let cell = prop_oneof![
        6 => word(4).prop_map(Cell::Present),
        1 => Just(Cell::Absent),
        1 => Just(Cell::ToPredict),
    ];
    (2usize..5)
        .prop_flat_map(move |n_lang| prop::collection::vec(prop::collection::vec(cell.clone(), n_lang), 0..12))
        .prop_filter_map("every row needs a form", |rows| {
            let n_lang = rows.first().map_or(2, Vec::len);
            let languages = (0..n_lang).map(|i| format!("L{i}")).collect();
            let rows = rows
                .into_iter()
                .enumerate()
                .map(|(i, cells)| CognateSet {
                    cogid: format!("C{i}"),
                    cells,
                })
                .collect();
            Wordlist::new(languages, rows).ok()
        })
}

proptest! {
    #[test]
    fn wordlist_round_trip(w in wordlist()) {
        let text = write_wordlist(&w);
        let back = parse_wordlist(&text).unwrap();
        prop_assert_eq!(write_wordlist(&back), text);
        prop_assert_eq!(back, w);
    }

    #[test]
    fn partition_conserves_forms(w in wordlist(), proportion in 0.0f64..=1.0, seed in any::<u64>()) {
        let p = partition(&w, proportion, seed).unwrap();
        prop_assert_eq!(p.training.present_count() + p.solutions.len(), w.present_count());
        let target = (proportion * w.present_count() as f64).floor() as usize;
        prop_assert_eq!(p.solutions.len() + p.shortfall, target);
        prop_assert!(p.training.rows().iter().all(|r| r.present_count() >= 1));
        for s in &p.solutions {
            let r = w.rows().iter().find(|r| r.cogid == s.cogid).unwrap();
            let l = w.language_index(&s.language).unwrap();
            prop_assert_eq!(r.cells[l].segments().unwrap(), &s.segments[..]);
            let t = p.test.rows().iter().find(|r| r.cogid == s.cogid).unwrap();
            prop_assert_eq!(&t.cells[l], &Cell::ToPredict);
        }
        let queries: usize = p.test.rows().iter().map(|r| r.cells.iter().filter(|c| **c == Cell::ToPredict).count()).sum();
        prop_assert_eq!(queries, p.solutions.len());
        prop_assert_eq!(partition(&w, proportion, seed).unwrap(), p);
    }
}

#[test]
fn partition_of_ten_cells() {
    // 5 rows x 2 languages, all present: floor(0.2 * 10) = 2 cells masked.
    let text = "COGID\tA\tB\nr1\tp a\tb a\nr2\tt a\td a\nr3\tk a\tg a\nr4\tp e\tb e\nr5\tt e\td e\n";
    let w = parse_wordlist(text).unwrap();
    for seed in 0..50 {
        let p = partition(&w, 0.2, seed).unwrap();
        assert_eq!(p.solutions.len(), 2);
        assert_eq!(p.shortfall, 0);
        assert!(p.training.rows().iter().all(|r| r.present_count() >= 1));
        assert!(p.test.rows().iter().all(|r| r.present_count() >= 1));
    }
}
