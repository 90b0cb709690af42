mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stepint::engine::{Action, EngineState};

use common::{action_instances, check_instance, fuzz_triple, same_derivative};

#[test]
fn every_action_has_an_instance() {
    let covered: Vec<Action> = action_instances().iter().map(|i| i.0).collect();
    assert_eq!(covered, Action::ALL.to_vec());
}

#[test]
fn every_action_preserves_the_derivative() {
    let failures: Vec<String> = action_instances()
        .into_iter()
        .filter_map(|(a, f, g, params)| check_instance(a, f, g, &params).err())
        .collect();
    assert!(failures.is_empty(), "{:#?}", failures);
}

#[test]
fn random_applications_are_sound_or_no_ops() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut unmodified = 0;
    for i in 0..1000 {
        let (f, g, call) = fuzz_triple(&mut rng, i);
        let mut state = EngineState::new();
        let f = state.register(&f);
        let r = state.apply(&f, &g, &call);
        if !r.modified {
            unmodified += 1;
            assert_eq!(r.expression, f, "{} on {} with {:?}", call.action, g, call.params);
        } else if state.substitutions(&r.expression).is_empty() {
            let same = same_derivative(&f, &r.expression, i);
            assert_ne!(same, Some(false), "{} on {} in {} gives {}", call.action, g, f, r.expression);
        }
    }
    assert!(unmodified > 500);
}
