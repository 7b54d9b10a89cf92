mod common;

use common::{Op, *};
use distinct_dp::stream::{existence_vector, item_neighbor, vector_flips, StreamState};
use distinct_dp::{
    count_distinct_exact, flippancy, make_neighbors, max_flippancy, parse_stream, validate_model, NeighborLevel,
    StreamEntry, StreamModel,
};
use proptest::prelude::*;

fn op(universe: u8) -> impl Strategy<Value = Op> {
    prop_oneof![
        1 => Just(Op::Nop),
        2 => (0..universe).prop_map(Op::Ins),
        2 => (0..universe).prop_map(Op::Del),
    ]
}

fn ops(max_len: usize, universe: u8) -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec(op(universe), 1..=max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn incremental_counts_match_recompute(ops in ops(48, 6)) {
        let x = to_stream(&ops);
        prop_assert_eq!(count_distinct_exact(&x), distinct_counts(&x));
    }

    #[test]
    fn counts_bounded_by_appearing_ids(ops in ops(48, 6)) {
        let x = to_stream(&ops);
        let counts = count_distinct_exact(&x);
        for t in 1..=x.len() {
            let seen = to_stream(&ops[..t]);
            prop_assert!(counts[t - 1] as usize <= names(&seen).len());
        }
    }

    #[test]
    fn counts_are_one_lipschitz(ops in ops(48, 6)) {
        let counts = count_distinct_exact(&to_stream(&ops));
        for w in counts.windows(2) {
            prop_assert!(w[0].abs_diff(w[1]) <= 1);
        }
    }

    #[test]
    fn flippancy_incremental_matches_scratch(ops in ops(40, 4)) {
        let x = to_stream(&ops);
        let mut state = StreamState::new();
        for (t, &e) in x.entries().iter().enumerate() {
            state.apply(e);
            for u in x.appearing() {
                prop_assert_eq!(state.flippancy(u), flip_at(&x, x.element_name(u), t + 1));
            }
            prop_assert_eq!(state.max_flippancy(), max_flip_at(&x, t + 1));
        }
        for u in x.appearing() {
            let bits = existence_vector(&x, u);
            prop_assert_eq!(&bits, &existence(&x, x.element_name(u)));
            prop_assert_eq!(vector_flips(&bits), flippancy(&x, u));
        }
        prop_assert_eq!(max_flippancy(&x), max_flip_at(&x, x.len()));
    }

    #[test]
    fn event_neighbors_differ_in_one_position(ops in ops(32, 5), seed in any::<u64>()) {
        let x = to_stream(&ops);
        let y = make_neighbors(&x, NeighborLevel::Event, seed);
        let a = named(&x);
        let b = named(&y);
        prop_assert_eq!(a.len(), b.len());
        let diff: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
        prop_assert_eq!(diff.len(), 1);
        prop_assert!(a[diff[0]].is_none() || b[diff[0]].is_none());
    }

    #[test]
    fn item_neighbors_differ_in_one_element(ops in ops(32, 5), seed in any::<u64>()) {
        let x = to_stream(&ops);
        let y = make_neighbors(&x, NeighborLevel::Item, seed);
        let a = named(&x);
        let b = named(&y);
        let mut touched = std::collections::BTreeSet::new();
        let mut differing = 0;
        for (p, q) in a.iter().zip(&b) {
            if p == q {
                continue;
            }
            differing += 1;
            match (p, q) {
                (Some((n, _)), None) | (None, Some((n, _))) => { touched.insert(n.clone()); }
                _ => prop_assert!(false, "entry replaced by a different entry"),
            }
        }
        prop_assert!(differing >= 1);
        prop_assert_eq!(touched.len(), 1);
    }

    #[test]
    fn parse_serialize_round_trip(ops in ops(40, 5)) {
        let x = to_stream(&ops);
        let text = x.to_text();
        let y = parse_stream(text.as_bytes()).unwrap();
        prop_assert_eq!(y.to_text(), text.clone());
        prop_assert_eq!(named(&x), named(&y));
        prop_assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn likes_model_matches_count_rule(ops in ops(30, 3)) {
        let x = to_stream(&ops);
        let mut counts = std::collections::BTreeMap::new();
        let oracle = named(&x).into_iter().flatten().all(|(n, d)| {
            let c = counts.entry(n).or_insert(0i64);
            let ok = if d > 0 { *c == 0 } else { *c == 1 };
            *c += d;
            ok
        });
        prop_assert_eq!(validate_model(&x, StreamModel::Likes).is_ok(), oracle);
    }
}

#[test]
fn item_neighbor_ignores_foreign_positions() {
    let x = parse_stream(b"+ a\n+ b\n- a\n").unwrap();
    let a = x.universe().get("a").unwrap();
    let y = item_neighbor(&x, a, &[0, 1, 2]);
    assert_eq!(y.to_text(), "_\n+ b\n_\n");
    assert_eq!(y.entries()[1], StreamEntry::Insert(x.universe().get("b").unwrap()));
}

#[test]
fn canonical_file_round_trips_byte_for_byte() {
    let text = "+ alice\n_\n- alice\n+ (bob,3)\n";
    assert_eq!(parse_stream(text.as_bytes()).unwrap().to_text(), text);
}
