use iconsearch_core::notation::{ancestors, is_descendant, parent_of, parse_notation, Notation};
use proptest::prelude::*;

fn atom() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[0-9]",
        3 => "[A-Z]",
        1 => "\\([A-Z][A-Z0-9 ]{0,6}\\)",
    ]
}

fn notation_string() -> impl Strategy<Value = String> {
    (
        "[0-9]",
        prop::collection::vec(atom(), 0..10),
        prop::option::of("\\(\\+[0-9A-Z]{1,3}\\)"),
    )
        .prop_map(|(root, atoms, key)| format!("{root}{}{}", atoms.concat(), key.unwrap_or_default()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn round_trip(s in notation_string()) {
        let n = parse_notation(&s).unwrap();
        prop_assert_eq!(n.serialize(), s.clone());
        prop_assert_eq!(n.as_str(), s.as_str());
    }

    #[test]
    fn chains_are_prefixes_and_end_at_root(s in notation_string()) {
        let n = parse_notation(&s).unwrap();
        let chain = ancestors(&n);
        for a in &chain {
            prop_assert!(s.starts_with(a.as_str()) && a.as_str().len() < s.len());
        }
        let mut current = n.clone();
        for _ in 0..chain.len() {
            current = parent_of(&current).unwrap();
        }
        prop_assert!(current.is_root());
        prop_assert_eq!(current.as_str().len(), 1);
        prop_assert!(parent_of(&current).is_none());
    }

    #[test]
    fn descendant_is_irreflexive_and_transitive(s in notation_string()) {
        let n = parse_notation(&s).unwrap();
        prop_assert!(!is_descendant(&n, &n));
        let chain: Vec<Notation> = ancestors(&n);
        for (i, mid) in chain.iter().enumerate() {
            prop_assert!(is_descendant(&n, mid));
            for top in &chain[i + 1..] {
                prop_assert!(is_descendant(mid, top));
                prop_assert!(!is_descendant(top, mid));
            }
        }
    }
}
