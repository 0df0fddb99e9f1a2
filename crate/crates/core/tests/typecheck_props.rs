use proptest::prelude::*;
use stepwise_core::{LoadError, Session};

const NON_INT: &[&str] = &["True", "'c'", "[1]", "\"s\"", "(1, 2)", "Nothing", "(\\x -> x)", "LT"];
const ARITH: &[&str] = &["+", "-", "*", "`div`", "`mod`"];

fn typed_value() -> impl Strategy<Value = String> {
    let leaf = prop::sample::select(vec![
        "1", "(-4)", "'x'", "True", "\"hi\"", "[]", "Nothing", "GT", "(\\x -> x + 1)", "even", "(+)", "map",
    ])
    .prop_map(str::to_string);
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| format!("[{a}, {a}]")),
            inner.clone().prop_map(|a| format!("(Just {a})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}, {b})")),
            inner.prop_map(|a| format!("(\\_ -> {a})")),
        ]
    })
}

const KEYWORDS: &[&str] = &["case", "of", "let", "in", "where", "if", "then", "else", "data", "type"];

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9']{0,4}".prop_filter("keyword", |s| !KEYWORDS.contains(&s.as_str()))
}

fn program(v: &[String]) -> String {
    let [a, b, c, d, e] = [&v[0], &v[1], &v[2], &v[3], &v[4]];
    format!(
        "pairUp {a} {b} = ({a}, {b} {a})\n\
         walk {a} [] = {a}\n\
         walk {a} ({b}:{c}) = walk ({b} {a}) {c}\n\
         choose {a} {b} {c}\n  | {a} {c} = {b}\n  | otherwise = {c}\n\
         twice {d} = \\{e} -> {d} ({d} {e})\n\
         build {a} = let {{ {b} = {a} : {b} }} in case {b} of {{ ({c}:_) -> [{c}]; _ -> [] }}\n\
         count {a} = {b} where {b} = length {a} + 1\n"
    )
}

const PROGRAM_NAMES: &[&str] = &["pairUp", "walk", "choose", "twice", "build", "count"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn arithmetic_accepts_only_int(bad in prop::sample::select(NON_INT.to_vec()), op in prop::sample::select(ARITH.to_vec()), left in any::<bool>()) {
        let s = Session::prelude();
        let goal = if left { format!("{bad} {op} 1") } else { format!("1 {op} {bad}") };
        let r = s.type_of(&goal);
        prop_assert!(matches!(r, Err(LoadError::Type(_))), "{} gave {:?}", goal, r);
        prop_assert_eq!(s.type_of("3 * (4 - 1)").unwrap(), "Int");
    }

    #[test]
    fn comparisons_are_accepted_at_every_type(v in typed_value(), op in prop::sample::select(vec!["==", "/=", "<", "<=", ">", ">="])) {
        let s = Session::prelude();
        prop_assert_eq!(s.type_of(&format!("{v} {op} {v}")).unwrap(), "Bool");
        prop_assert_eq!(s.type_of(&format!("compare {v} {v}")).unwrap(), "Ordering");
    }

    #[test]
    fn types_are_invariant_under_renaming(names in prop::collection::hash_set(ident(), 5)) {
        let names: Vec<String> = names.into_iter().collect();
        let base: Vec<String> = ["x", "y", "z", "f", "w"].iter().map(|s| s.to_string()).collect();
        let a = Session::load(&program(&base)).unwrap();
        let b = Session::load(&program(&names)).unwrap();
        for n in PROGRAM_NAMES {
            prop_assert_eq!(a.env.values[*n].to_string(), b.env.values[*n].to_string(), "{}", n);
        }
    }
}
