mod common;

use perceplan::search::{BlockedPlanSet, ConditionalProhibition, DestPattern, ObjPattern};
use perceplan::world::{Cell, FluentLiteral, Orientation};
use perceplan::{enumerate_plans, LoadedInstance, Plan, SearchError};
use proptest::prelude::*;

fn plans(instance: &LoadedInstance, constraints: &[ConditionalProhibition], blocked: &BlockedPlanSet) -> Vec<Plan> {
    let view = instance.perceive().unwrap();
    match enumerate_plans(
        view.initial_state(),
        &instance.task.goal,
        instance.horizon,
        constraints,
        blocked,
        usize::MAX,
        &instance.config,
    ) {
        Ok(p) => p,
        Err(SearchError::HorizonExhausted) => Vec::new(),
        Err(e) => panic!("{e}"),
    }
}

fn random_prohibition(instance: &LoadedInstance, k: u64) -> ConditionalProhibition {
    let view = instance.perceive().unwrap();
    let objects: Vec<_> = view.objects().cloned().collect();
    let grid = instance.scene.grid();
    let o = objects[(k as usize) % objects.len()].clone();
    let cell = Cell::new((k / 3) as u32 % grid.width, (k / 7) as u32 % grid.depth);
    let orient = Orientation::ALL[(k % 3) as usize];
    match k % 4 {
        0 => ConditionalProhibition::new(ObjPattern::Is(o), DestPattern::Any, Some(orient), vec![]),
        1 => ConditionalProhibition::new(
            ObjPattern::Any,
            DestPattern::OnBase(cell),
            None,
            vec![FluentLiteral::Ori(o, orient)],
        ),
        2 => ConditionalProhibition::new(ObjPattern::Above(cell), DestPattern::Any, None, vec![]),
        _ => ConditionalProhibition::new(
            ObjPattern::Except(o.clone()),
            DestPattern::Any,
            None,
            vec![FluentLiteral::Below(cell.into(), o)],
        ),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emitted_plans_match_exhaustive_generation(seed in any::<u64>()) {
        let instance = common::random_instance(seed);
        let view = instance.perceive().unwrap();
        let expected = common::brute_force_plans(view.initial_state(), &instance.task.goal, instance.horizon.maxstep(), &instance.config);
        prop_assert_eq!(plans(&instance, &[], &BlockedPlanSet::new()), expected);
    }

    #[test]
    fn enumeration_is_deterministic(seed in any::<u64>()) {
        let instance = common::random_instance(seed);
        prop_assert_eq!(plans(&instance, &[], &BlockedPlanSet::new()), plans(&instance, &[], &BlockedPlanSet::new()));
    }

    #[test]
    fn constraints_only_remove_plans(seed in any::<u64>(), k1 in any::<u64>(), k2 in any::<u64>()) {
        let instance = common::random_instance(seed);
        let one = [random_prohibition(&instance, k1)];
        let two = [random_prohibition(&instance, k1), random_prohibition(&instance, k2)];
        let all = common::plan_keys(&plans(&instance, &[], &BlockedPlanSet::new()));
        let fewer = common::plan_keys(&plans(&instance, &one, &BlockedPlanSet::new()));
        let fewest = common::plan_keys(&plans(&instance, &two, &BlockedPlanSet::new()));
        prop_assert!(fewer.is_subset(&all));
        prop_assert!(fewest.is_subset(&fewer));
    }

    #[test]
    fn blocked_plans_are_skipped(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let instance = common::random_instance(seed);
        let original = plans(&instance, &[], &BlockedPlanSet::new());
        prop_assume!(!original.is_empty());
        let victim = pick.get(&original).clone();
        let blocked: BlockedPlanSet = [victim.clone()].into_iter().collect();
        let rerun = plans(&instance, &[], &blocked);
        let expected: Vec<Plan> = original.into_iter().filter(|p| *p != victim).collect();
        prop_assert_eq!(rerun, expected);
    }
}
