mod common;

use stepint::codec::StepRecord;
use stepint::engine::Action;
use stepint::eval::{validation_suite, Family, RobustnessProbe};
use stepint::policy::HeuristicPolicy;
use stepint::search::{integrate, replay, SearchConfig};
use stepint::verify::{verify_antiderivative, verify_steps, Verdict};
use stepint::{Expr, Symbol};

use common::subtrees;

/// Solved proofs of family instances and validation integrands.
fn proofs(n: usize) -> Vec<(Expr, Vec<StepRecord>, Expr)> {
    let suite = validation_suite();
    let roots = Family::ALL
        .iter()
        .flat_map(|&f| {
            let probe = RobustnessProbe::new(f, 10, 5, 21);
            let suite = &suite;
            (0..10).map(move |i| probe.instance(i, suite))
        })
        .chain(suite.iter().map(|f| Expr::integral(f.clone(), Symbol::X)));
    roots
        .filter_map(|root| {
            let r = integrate(&root, &mut HeuristicPolicy::new(), &SearchConfig::heuristic());
            r.solved().then_some((root, r.steps, r.expression))
        })
        .take(n)
        .collect()
}

/// Every single-step corruption of `steps` we try.
fn mutations(steps: &[StepRecord]) -> Vec<Vec<StepRecord>> {
    let mut out = Vec::new();
    for (i, s) in steps.iter().enumerate() {
        let mut dropped = steps.to_vec();
        dropped.remove(i);
        out.push(dropped);

        let same_arity = Action::ALL.iter().filter(|a| a.arity() == s.rule.arity() && **a != s.rule);
        for &rule in same_arity {
            let mut v = steps.to_vec();
            v[i].rule = rule;
            out.push(v);
        }

        for g in subtrees(&s.expression).into_iter().filter(|g| *g != s.subexpression).take(6) {
            let mut v = steps.to_vec();
            v[i].subexpression = g;
            out.push(v);
        }

        if let Some(first) = s.params.first() {
            let mut v = steps.to_vec();
            v[i].params[0] = Expr::raw_mul(Expr::int(2), first.clone());
            out.push(v);
        }
    }
    out
}

#[test]
fn corrupted_proofs_never_pass() {
    let proofs = proofs(100);
    assert_eq!(proofs.len(), 100);
    let (mut tried, mut rejected) = (0, 0);
    for (root, steps, result) in &proofs {
        assert_eq!(verify_steps(root, steps, result), Verdict::Pass);
        for m in mutations(steps) {
            tried += 1;
            let verdict = verify_steps(root, &m, result);
            if verdict == Verdict::Pass {
                // Only a genuinely different proof of the same result may pass.
                assert_eq!(replay(root, &m).as_ref(), Some(result), "{}", root);
            } else {
                rejected += 1;
            }
        }
    }
    assert!(rejected * 10 > tried * 9, "{} of {}", rejected, tried);
}

#[test]
fn perturbed_results_fail_and_shifted_ones_pass() {
    for (root, steps, result) in proofs(100) {
        // The numeric check is relative, so perturbations scale with the result.
        let scaled = |k: Expr| Expr::raw_mul(k, result.clone());
        for wrong in [scaled(Expr::int(2)), scaled(Expr::x()), scaled(Expr::rational(1001, 1000))] {
            assert!(matches!(verify_antiderivative(&root, &wrong), Verdict::Fail(_)), "{} vs {}", root, wrong);
            assert!(matches!(verify_steps(&root, &steps, &wrong), Verdict::Fail(_)));
        }
        let shifted = Expr::raw_add(result.clone(), Expr::int(7));
        assert_eq!(verify_antiderivative(&root, &shifted), Verdict::Pass, "{}", root);
    }
}
