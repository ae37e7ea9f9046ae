mod support;

use std::collections::BTreeSet;

use juris_core::ground::ground_program;
use juris_core::solve::{brave_entails, cautious_entails, enumerate_stable_models, is_consistent, StableModel};
use juris_core::syntax::{parse_program, parse_rule, Atom, Program};
use proptest::prelude::*;

fn models(p: &Program) -> Vec<StableModel> {
    enumerate_stable_models(&ground_program(p).unwrap(), None)
}

#[test]
fn solver_matches_subset_oracle() {
    for seed in 0..500 {
        let mut rng = support::rng(seed);
        let src = support::random_ground_program(&mut rng, 12, 15);
        let p = parse_program(&src).unwrap();
        let mut got = models(&p);
        got.sort();
        let want = support::oracle_models(&p).unwrap();
        assert_eq!(got, want, "seed {seed}:\n{src}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn denials_only_remove_models(seed in any::<u64>(), a in 0usize..8, b in 0usize..8, neg in any::<bool>()) {
        let mut rng = support::rng(seed);
        let p = parse_program(&support::random_ground_program(&mut rng, 8, 10)).unwrap();
        let body = if neg { format!("p{a}, not p{b}") } else { format!("p{a}, p{b}") };
        let mut q = p.clone();
        q.extend_renaming([parse_rule(&format!(":- {body}.")).unwrap()]);
        let before: BTreeSet<StableModel> = models(&p).into_iter().collect();
        let after: BTreeSet<StableModel> = models(&q).into_iter().collect();
        prop_assert!(after.is_subset(&before));
    }

    #[test]
    fn entailment_modes_agree_with_models(seed in any::<u64>(), a in 0usize..6) {
        let mut rng = support::rng(seed);
        let p = parse_program(&support::random_ground_program(&mut rng, 6, 8)).unwrap();
        let gp = ground_program(&p).unwrap();
        let ms = enumerate_stable_models(&gp, None);
        let incl: BTreeSet<Atom> = [Atom::prop(format!("p{a}"))].into();
        let none = BTreeSet::new();
        prop_assert_eq!(brave_entails(&gp, &incl, &none), ms.iter().any(|m| incl.iter().all(|x| m.contains(x))));
        let cautious = !ms.is_empty() && ms.iter().all(|m| incl.iter().all(|x| m.contains(x)));
        prop_assert_eq!(cautious_entails(&gp, &incl, &none), cautious);
        prop_assert_eq!(is_consistent(&gp), !ms.is_empty());
    }

    #[test]
    fn enumeration_is_deterministic(seed in any::<u64>()) {
        let mut rng = support::rng(seed);
        let p = parse_program(&support::random_ground_program(&mut rng, 8, 10)).unwrap();
        prop_assert_eq!(models(&p), models(&p));
    }
}

#[test]
fn choice_rule_models() {
    let mut got: Vec<String> = models(&parse_program("1{p;q}2.").unwrap()).iter().map(|m| m.to_string()).collect();
    got.sort();
    assert_eq!(got, ["p", "p q", "q"]);
}
