mod common;

use perceplan::geometry::ShapeId;
use perceplan::perception::{bottom_up, occlusion_of, GroundTruth};
use perceplan::world::Cell;
use perceplan::{bundled, Entity, ObjectId};
use proptest::prelude::*;
use proptest::sample::Index;

fn oid(s: &str) -> ObjectId {
    ObjectId::new(s)
}

#[test]
fn instance_one_names_the_nut_and_both_bolts() {
    let inst = bundled::instance(1).unwrap();
    let mut view = inst.perceive().unwrap();
    let names: Vec<&str> = view.objects().map(|o| o.as_str()).collect();
    assert_eq!(names, ["obj1", "sco1", "sco2"]);
    let truth = GroundTruth::new(&view);
    assert_eq!(truth.shape(&oid("obj1")), Some(&ShapeId::new("nut_m20")));

    assert_eq!(view.query_count(), 0);
    assert_eq!(view.shape_of(&oid("sco2")).unwrap(), ShapeId::new("bolt_m20_100"));
    assert_eq!(view.query_count(), 1);
    assert_eq!(view.shape_of(&oid("sco2")).unwrap(), ShapeId::new("bolt_m20_100"));
    assert_eq!(view.query_count(), 1);
    assert!(view.shape_of(&oid("sco9")).is_err());
}

#[test]
fn bundled_scenes_have_expected_objects() {
    let expected = [vec!["obj1", "sco1", "sco2"], vec!["obj1", "sco1", "sco2"], vec!["obj1", "obj2", "obj3", "sco1"]];
    for (n, names) in expected.iter().enumerate() {
        let view = bundled::instance(n + 1).unwrap().perceive().unwrap();
        let got: Vec<&str> = view.objects().map(|o| o.as_str()).collect();
        assert_eq!(&got, names, "instance {}", n + 1);
    }
    let mut view = bundled::instance(3).unwrap().perceive().unwrap();
    let objects: Vec<ObjectId> = view.objects().cloned().collect();
    for o in &objects {
        view.shape_of(o).unwrap();
    }
    assert_eq!(view.query_count(), 4);
}

#[test]
fn depth_preset_relates_cells_behind() {
    let inst = bundled::instance(1).unwrap();
    let occl = occlusion_of(&inst.scene).unwrap();
    assert!(occl.contains(Cell::new(3, 1), Cell::new(3, 2)));
    assert!(!occl.contains(Cell::new(3, 2), Cell::new(3, 1)));
    assert!(!occl.contains(Cell::new(0, 0), Cell::new(1, 0)));
}

#[test]
fn instance_one_bolt_stands_in_front_of_the_nut() {
    let view = bundled::instance(1).unwrap().perceive().unwrap();
    let init = view.initial_state();
    assert_eq!(init.at(&oid("obj1")), Some(&Entity::Cell(Cell::new(0, 1))));
    assert_eq!(init.at(&oid("sco1")), Some(&Entity::Cell(Cell::new(0, 0))));
}

proptest! {
    #[test]
    fn ledger_counts_distinct_objects(seed in any::<u64>(), picks in prop::collection::vec(any::<Index>(), 0..10)) {
        let instance = common::random_instance(seed);
        let mut view = instance.perceive().unwrap();
        let objects: Vec<ObjectId> = view.objects().cloned().collect();
        let mut asked = std::collections::BTreeSet::new();
        for pick in &picks {
            let o = pick.get(&objects);
            view.shape_of(o).unwrap();
            asked.insert(o.clone());
            prop_assert_eq!(view.query_count(), asked.len());
        }
        let ledgered: Vec<&ObjectId> = view.ledger().queried().collect();
        prop_assert_eq!(ledgered, asked.iter().collect::<Vec<_>>());
    }

    #[test]
    fn bottom_up_is_deterministic(seed in any::<u64>()) {
        let instance = common::random_instance(seed);
        let a = bottom_up(&instance.scene, &instance.task).unwrap();
        let b = bottom_up(&instance.scene, &instance.task).unwrap();
        prop_assert_eq!(a.initial_state(), b.initial_state());
        let names_a: Vec<_> = a.objects().map(|o| (o.clone(), a.physical_index(o))).collect();
        let names_b: Vec<_> = b.objects().map(|o| (o.clone(), b.physical_index(o))).collect();
        prop_assert_eq!(names_a, names_b);
        prop_assert_eq!(a.query_count(), 0);
    }
}
