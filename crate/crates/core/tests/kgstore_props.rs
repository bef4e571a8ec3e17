use chronomap::geometry::Geometry;
use chronomap::kgstore::vocab::{cmo, cmr, feature_iri, prop as p};
use chronomap::kgstore::{IndexKind, Schema, Store, Term, Triple};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Obj {
    Feature(usize),
    Type(usize),
    Year(usize),
    Area(i64),
    Wkt(f64, f64),
}

const TYPES: [&str; 3] = ["lake", "river", "forest"];
const YEARS: [i64; 3] = [1877, 1901, 1916];
const RELS: [&str; 4] = ["intersects", "near", "northOf", "changedTo"];

fn raw_triple() -> impl Strategy<Value = (usize, usize, Obj)> {
    let obj = prop_oneof![
        (0..12usize).prop_map(Obj::Feature),
        (0..3usize).prop_map(Obj::Type),
        (0..3usize).prop_map(Obj::Year),
        (0..5000i64).prop_map(Obj::Area),
        (-1e6..1e6f64, -1e6..1e6f64).prop_map(|(x, y)| Obj::Wkt(x, y)),
    ];
    (0..12usize, 0..4usize, obj)
}

fn build(raw: &[(usize, usize, Obj)]) -> Store {
    let mut st = Store::default();
    for (s, r, o) in raw {
        let subject = feature_iri("s", 1901, "lake", *s);
        let t = match o {
            Obj::Feature(f) => Triple::new(subject, cmr(RELS[*r]), feature_iri("s", 1901, "lake", *f)),
            Obj::Type(i) => Triple::new(subject, cmo(p::FEATURE_TYPE), Term::string(TYPES[*i])),
            Obj::Year(i) => Triple::new(subject, cmo(p::YEAR), Term::integer(YEARS[*i])),
            Obj::Area(a) => Triple::new(subject, cmo(p::AREA_SQM), Term::integer(*a)),
            Obj::Wkt(x, y) => {
                let g = st.add_geometry(Geometry::point(*x, *y).unwrap()).unwrap();
                Triple::new(subject, cmo(p::WKT), g)
            }
        };
        st.insert(t).unwrap();
    }
    st.seal();
    st
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn every_index_answers_identically(raw in prop::collection::vec(raw_triple(), 0..150), mask in 0..8u8, pick in 0..1000usize) {
        let st = build(&raw);
        let all = st.match_ids(None, None, None);
        // bind positions from one existing triple, or from nothing on an empty store
        let probe = all.get(pick % all.len().max(1)).copied();
        let bind = |bit: u8, v: Option<_>| if mask & bit != 0 { v } else { None };
        let s = bind(1, probe.map(|t| t.0));
        let pr = bind(2, probe.map(|t| t.1));
        let o = bind(4, probe.map(|t| t.2));
        let mut reference = st.match_ids_with(IndexKind::Spo, s, pr, o);
        reference.sort();
        for kind in IndexKind::ALL {
            let mut got = st.match_ids_with(kind, s, pr, o);
            got.sort();
            prop_assert_eq!(&got, &reference);
        }
        let mut brute: Vec<_> = all
            .into_iter()
            .filter(|t| s.is_none_or(|v| v == t.0) && pr.is_none_or(|v| v == t.1) && o.is_none_or(|v| v == t.2))
            .collect();
        brute.sort();
        prop_assert_eq!(brute, reference);
    }

    #[test]
    fn dump_load_dump_is_a_fixed_point(raw in prop::collection::vec(raw_triple(), 0..150)) {
        let st = build(&raw);
        let first = st.dump_string();
        let mut again = Store::load_str(&first, Schema::chronomap()).unwrap();
        again.seal();
        prop_assert_eq!(again.len(), st.len());
        prop_assert_eq!(again.dump_string(), first);
    }

    #[test]
    fn sealed_store_holds_only_catalog_predicates(raw in prop::collection::vec(raw_triple(), 0..100)) {
        let st = build(&raw);
        for t in st.triples() {
            prop_assert!(st.schema().contains(t.predicate.as_iri().unwrap()));
        }
    }
}

#[test]
fn hundred_triple_round_trip_through_files() {
    let raw: Vec<_> = (0..100)
        .map(|i| (i % 12, i % 4, if i % 3 == 0 { Obj::Area(i as i64 * 7) } else { Obj::Feature((i * 5) % 12) }))
        .collect();
    let st = build(&raw);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kg.nt");
    st.dump(&path).unwrap();
    assert!(Store::schema_path(&path).exists());
    let mut loaded = Store::load(&path).unwrap();
    loaded.seal();
    let path2 = dir.path().join("kg2.nt");
    loaded.dump(&path2).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
}
