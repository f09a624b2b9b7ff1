//! Property tests for the structural invariants: polynomial ring laws,
//! outcome-encoding bijectivity, window partitions, dominance antisymmetry,
//! ingest round trips and statistics invariance under relabeling.

use std::collections::BTreeSet;

use homsieve_core::network::{
    build_coauthor_graph, direct_by_degree, ingest_records, write_records_csv, write_records_jsonl,
    CitationRecord, DirectedInfluenceGraph, IngestFormat, NodeStateSeries, SeriesMeta, TimeWindow,
    YearRange,
};
use homsieve_core::poly::{rational, Polynomial, NUM_VARS};
use homsieve_core::statistics::{decode_outcome, encode_outcome, pair_sequence_counts};

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn arb_poly() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0u8..3, NUM_VARS), -20i64..20), 0..6).prop_map(
        |terms| {
            let mut p = Polynomial::zero();
            for (exps, coef) in terms {
                let mut e = [0u8; NUM_VARS];
                e.copy_from_slice(&exps);
                p.add_term(e, rational(coef, 1));
            }
            p
        },
    )
}

fn arb_point() -> impl Strategy<Value = [BigRational; NUM_VARS]> {
    prop::collection::vec(0i64..64, NUM_VARS).prop_map(|v| {
        let mut x: [BigRational; NUM_VARS] = Default::default();
        for (xi, n) in x.iter_mut().zip(v) {
            *xi = BigRational::new(BigInt::from(n), BigInt::from(64));
        }
        x
    })
}

proptest! {
    #[test]
    fn poly_distributes(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
        let lhs = a.add(&b).mul(&c);
        let rhs = a.mul(&c).add(&b.mul(&c));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn poly_eval_is_ring_homomorphism(a in arb_poly(), b in arb_poly(), x in arb_point()) {
        let prod = a.mul(&b);
        prop_assert_eq!(prod.eval_rational(&x), a.eval_rational(&x) * b.eval_rational(&x));
        let sum = a.add(&b);
        prop_assert_eq!(sum.eval_rational(&x), a.eval_rational(&x) + b.eval_rational(&x));
    }

    #[test]
    fn outcome_encoding_is_bijective(t in 2usize..5, bits in any::<u64>()) {
        let j = (bits as usize) % (1usize << (2 * t));
        let (a, b) = decode_outcome(j, t);
        prop_assert_eq!(encode_outcome(&a, &b).unwrap(), j);
    }

    #[test]
    fn window_partition_tiles(start in 1900i32..2000, span in 3i32..80, t in 2usize..5) {
        prop_assume!(span >= t as i32);
        let w = TimeWindow::partitioned(start, start + span, t).unwrap();
        prop_assert_eq!(w.slices.len(), t);
        prop_assert_eq!(w.slices[0].start, start);
        prop_assert_eq!(w.slices.last().unwrap().end, start + span);
        for pair in w.slices.windows(2) {
            prop_assert_eq!(pair[0].end, pair[1].start);
        }
        let lens: Vec<i32> = w.slices.iter().map(YearRange::len_years).collect();
        let lo = *lens.iter().min().unwrap();
        let hi = *lens.iter().max().unwrap();
        prop_assert!(hi - lo <= 1);
        // Remainder years go to the earliest slices.
        prop_assert!(lens.windows(2).all(|p| p[0] >= p[1]));
        // Every year lands in exactly one slice.
        for year in start..start + span {
            prop_assert_eq!(w.slices.iter().filter(|s| s.contains(year)).count(), 1);
        }
    }

    #[test]
    fn dominance_is_antisymmetric(
        edges in prop::collection::vec((0usize..12, 0usize..12), 1..30),
    ) {
        let records: Vec<CitationRecord> = edges
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| CitationRecord {
                paper_id: format!("p{i}"),
                authors: vec![format!("a{a:02}"), format!("a{b:02}")],
                year: 2000,
                references: vec![],
            })
            .collect();
        let g = build_coauthor_graph(&records, YearRange::new(2000, 2001));
        let degrees = g.degrees();
        let d = direct_by_degree(&g);
        for (u, v) in d.arcs() {
            let (du, dv) = (degrees[u.as_str()], degrees[v.as_str()]);
            prop_assert!(du > dv || (du == dv && u < v), "arc {u} -> {v}");
        }
        // One arc per undirected edge.
        prop_assert_eq!(d.arc_count(), g.edge_count());
    }
}

fn arb_id() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_-]{0,6}"
}

fn arb_records() -> impl Strategy<Value = Vec<CitationRecord>> {
    prop::collection::vec(
        (
            arb_id(),
            prop::collection::btree_set(arb_id(), 1..4),
            1950i32..2010,
            prop::collection::btree_set(arb_id(), 0..4),
        ),
        0..12,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (paper, authors, year, refs))| CitationRecord {
                paper_id: format!("{paper}{i}"),
                authors: authors.into_iter().collect(),
                year,
                references: refs.into_iter().collect(),
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn ingest_round_trips(records in arb_records()) {
        let mut csv = Vec::new();
        write_records_csv(&records, &mut csv).unwrap();
        let back = ingest_records(csv.as_slice(), IngestFormat::Csv).unwrap();
        prop_assert_eq!(&back, &records);

        let mut jsonl = Vec::new();
        write_records_jsonl(&records, &mut jsonl).unwrap();
        let back = ingest_records(jsonl.as_slice(), IngestFormat::Jsonl).unwrap();
        prop_assert_eq!(&back, &records);
    }
}

/// Apply a reference relabeling to a series.
fn relabel_series(series: &NodeStateSeries, rename: impl Fn(&str) -> String) -> NodeStateSeries {
    let mut out = NodeStateSeries::new(
        series.window().clone(),
        SeriesMeta::default(),
        series.universe_rule(),
    );
    for ((author, reference), states) in series.iter() {
        out.insert(author.clone(), rename(reference), states.clone())
            .unwrap();
    }
    out
}

proptest! {
    #[test]
    fn statistics_invariant_under_reference_relabeling(
        arcs in prop::collection::btree_set((0usize..6, 0usize..6), 1..8),
        states_seed in any::<u64>(),
    ) {
        let arcs: BTreeSet<(String, String)> = arcs
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (format!("a{a}"), format!("b{b}")))
            .collect();
        prop_assume!(!arcs.is_empty());
        let mut nodes = BTreeSet::new();
        for (a, b) in &arcs {
            nodes.insert(a.clone());
            nodes.insert(b.clone());
        }
        let graph = DirectedInfluenceGraph::from_parts(nodes.clone(), arcs).unwrap();

        // Deterministic pseudo-random ±1 states for two references per author.
        let window = TimeWindow::partitioned(0, 3, 3).unwrap();
        let mut series = NodeStateSeries::new(
            window,
            SeriesMeta::default(),
            homsieve_core::network::UniverseRule::SharedReferences,
        );
        let mut state = states_seed | 1;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            if (state >> 33) & 1 == 1 { 1i8 } else { -1i8 }
        };
        for node in &nodes {
            for reference in ["r0", "r1"] {
                series.insert(node.clone(), reference, vec![next(), next(), next()]).unwrap();
            }
        }

        let base = pair_sequence_counts(&series, &graph).unwrap();
        // Consistent relabeling of references must not change the counts.
        let relabeled = relabel_series(&series, |r| format!("ref-{r}-x"));
        let renamed = pair_sequence_counts(&relabeled, &graph).unwrap();
        prop_assert_eq!(base.counts(), renamed.counts());
        prop_assert_eq!(base.total(), renamed.total());
    }
}
