use amq_core::corpus::*;
use amq_core::fixture::*;
use amq_core::pipeline::{run_query, QueryInput};

#[test]
fn planted_geometry() {
    let f = PlantedSpec {
        queries: 5,
        narrow_per_query: 4,
        broad_per_query: 2,
        fillers: 20,
        dim: 32,
        ..Default::default()
    }
    .build();
    assert_eq!(f.dictionary.len(), 5 * 6 + 20);
    f.store.check_coverage(&f.dictionary).unwrap();
    let r = run_query(
        &QueryInput::new([concept_text(2)]),
        &f.dictionary,
        &f.store,
        &f.probes,
    )
    .unwrap();
    let own: Vec<TermCode> = f.members[2].iter().map(|m| m.0).collect();
    for t in &r.all_scored {
        if own.contains(&t.code) {
            assert!(
                t.sim_best_pt > 0.7,
                "member {} at {}",
                t.code,
                t.sim_best_pt
            );
        } else {
            assert!(
                t.sim_best_pt <= 0.3,
                "distractor {} at {}",
                t.code,
                t.sim_best_pt
            );
        }
    }
}

#[test]
fn deterministic() {
    let spec = PlantedSpec {
        queries: 3,
        dim: 16,
        fillers: 5,
        gold_extra: 2,
        gold_drop: 2,
        ..Default::default()
    };
    let a = spec.build();
    let b = spec.build();
    assert_eq!(a.store, b.store);
    assert_eq!(a.gold, b.gold);
}
