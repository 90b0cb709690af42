//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.

mod common;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stepint::codec::{encode_step_line, parse_step_line, seq_to_tree, tokens_to_tree, tree_to_seq, tree_to_text};
use stepint::datagen::{
    augment, dataset_stats, expression_rng, generate, ibp_augment, read_dataset, replay_trace, sample_raw,
    write_dataset, GenConfig, Leaf,
};
use stepint::engine::{Action, ActionCall, EngineState};
use stepint::eval::{attempt, render_robustness, robustness_suite, validation_suite, Family};
use stepint::numeric::{close, sample_values};
use stepint::policy::{ExternalPolicy, HeuristicPolicy};
use stepint::search::{integrate, node_histogram, ProofResult, SearchConfig, Status};
use stepint::{Expr, Symbol};

use common::{action_instances, check_instance, fuzz_triple, p, random_expr, spawn_policy_server, Recording, HARD};

type Check = Result<String, String>;

/// Name, runtime limit and check.
type Criterion = (&'static str, Option<Duration>, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn codec_bijection() -> Check {
    for i in 0..10_000u64 {
        let e = random_expr(0xc0de, i);
        let e = if i % 2 == 0 { Expr::integral(e, Symbol::X) } else { e };
        let back = tokens_to_tree(&tree_to_seq(&e)).map_err(|err| format!("{}: {}", e, err))?;
        ensure(back == e, || format!("tokens of {} decode to {}", e, back))?;
        let text = seq_to_tree(&tree_to_text(&e)).map_err(|err| format!("{}: {}", e, err))?;
        ensure(text == e, || format!("text of {} decodes to {}", e, text))?;
    }
    let tokens = "INTEGRAL + POW + INT+ 3 x INT- 1 * INT+ 2 POW cosh x INT+ 2 x";
    let e = seq_to_tree(tokens).map_err(|err| err.to_string())?;
    ensure(e == p("Integral(1/(x + 3) + 2*cosh(x)^2, x)"), || format!("{} parsed as {}", tokens, e))?;
    ensure(tree_to_text(&e) == tokens, || format!("re-emitted as {}", tree_to_text(&e)))?;
    Ok("10000 expressions, reference string".into())
}

fn rule_soundness() -> Check {
    let instances = action_instances();
    let covered: Vec<Action> = instances.iter().map(|i| i.0).collect();
    ensure(covered == Action::ALL.to_vec(), || "instances do not cover the action table".into())?;
    for (a, f, g, params) in &instances {
        check_instance(*a, f, *g, params)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut noops = 0;
    for i in 0..1000 {
        let (f, g, call) = fuzz_triple(&mut rng, i);
        let mut state = EngineState::new();
        let f = state.register(&f);
        let r = state.apply(&f, &g, &call);
        if !r.modified {
            noops += 1;
            ensure(r.expression == f, || format!("{} on {} changed {}", call.action, g, f))?;
        }
    }
    Ok(format!("{} actions, {} of 1000 fuzzed calls were no-ops", instances.len(), noops))
}

/// Equal at sampled points of x, for results whose printed form may vary.
fn equal_values(a: &Expr, b: &Expr) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    sample_values(&mut rng, &[a, b], &[Symbol::X], 8).is_some_and(|pts| pts.iter().all(|v| close(v[0], v[1], 1e-9)))
}

fn solve(s: &str) -> Result<ProofResult, String> {
    let root = p(s);
    let a = attempt(&root, &mut HeuristicPolicy::new(), &SearchConfig::heuristic());
    ensure(a.verdict.is_pass(), || format!("{}: {:?} ({:?})", s, a.verdict, a.proof.status))?;
    Ok(a.proof)
}

fn rules(r: &ProofResult) -> Vec<Action> {
    r.steps.iter().map(|s| s.rule).collect()
}

fn worked_examples() -> Check {
    // substitution y = log x
    let f = p("Integral(x*(4x + log(x) - 2), x)");
    let mut state = EngineState::new();
    let root = state.register(&f);
    let call = ActionCall::new(Action::U, vec![p("y"), p("log(x)")]);
    let r = state.apply(&root, &root, &call);
    ensure(r.modified, || "URule with y = log(x) does not apply".into())?;
    let Some(inner) = r.expression.integrals().into_iter().next() else {
        return Err(format!("substitution left no integral: {}", r.expression));
    };
    let h = match inner.node() {
        stepint::Node::Integral(h, Symbol::Y) => h.clone(),
        _ => return Err(format!("expected an integral over y, got {}", inner)),
    };
    let want = p("exp(2y)*(4*exp(y) + y - 2)");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts = sample_values(&mut rng, &[&h, &want], &[Symbol::Y], 8).ok_or("no sample points")?;
    ensure(pts.iter().all(|v| close(v[0], v[1], 1e-6)), || format!("integrand {} differs from {}", h, want))?;
    solve("Integral(x*(4x + log(x) - 2), x)")?;

    let r = solve("Integral(1 + 2*cos(2x)/sqrt(sin(2x)^2 + 1), x)")?;
    ensure(rules(&r) == [Action::Add, Action::Constant, Action::U, Action::Arcsinh], || format!("rules {:?}", rules(&r)))?;
    ensure(r.expression == p("x + asinh(sin(2x))"), || format!("result {}", r.expression))?;

    let r = solve("Integral(exp(x^2)/x, x)")?;
    ensure(r.expression == p("Ei(x^2)/2"), || format!("result {}", r.expression))?;
    let special = [Action::UpperGamma, Action::Ei];
    ensure(rules(&r).iter().any(|a| special.contains(a)), || format!("rules {:?}", rules(&r)))?;

    let r = solve("Integral(-12*x*log(x), x)")?;
    ensure(equal_values(&r.expression, &p("-6*x^2*log(x) + 3*x^2")), || format!("result {}", r.expression))?;

    for s in ["Integral(1/cos(x), x)", "Integral(x*cosh(x), x)", "Integral(cos(2x)*tan(x), x)"] {
        solve(s)?;
    }
    Ok("substitution, 4 proofs, 3 table integrals".into())
}

fn generator_fidelity() -> Check {
    let cfg = GenConfig::default();
    let (mut lo, mut hi, mut x_leaves, mut leaves) = (usize::MAX, 0, 0usize, 0usize);
    for i in 0..100_000 {
        let t = sample_raw(&cfg, &mut expression_rng(0x9e4, i));
        let n = t.node_count();
        (lo, hi) = (lo.min(n), hi.max(n));
        let l = t.leaves();
        leaves += l.len();
        x_leaves += l.iter().filter(|l| matches!(l, Leaf::X)).count();
    }
    let frac = x_leaves as f64 / leaves as f64;
    ensure((3..=50).contains(&lo) && (3..=50).contains(&hi), || format!("node counts in [{}, {}]", lo, hi))?;
    ensure((0.74..=0.76).contains(&frac), || format!("leaf-x fraction {:.4}", frac))?;

    let mut corpus = generate(&GenConfig { count: 10_000, seed: 0xacce, ..cfg });
    let solved = corpus.traces.len();
    for t in &corpus.traces {
        let r = replay_trace(t).ok_or_else(|| format!("trace of {} does not replay", t.root()))?;
        ensure(!r.has_integral(), || format!("trace of {} leaves an integral", t.root()))?;
    }
    let mut roots = HashSet::new();
    let mut steps = HashSet::new();
    for t in &corpus.traces {
        ensure(roots.insert(t.root().digest()), || format!("duplicate root {}", t.root()))?;
        for (k, s) in t.steps.iter().enumerate() {
            ensure(steps.insert((s.expression.digest(), k, s.rule)), || format!("duplicate step in {}", t.root()))?;
        }
    }
    let extra = ibp_augment(&corpus.traces);
    ensure(extra.iter().all(|t| replay_trace(t).is_some()), || "augmented trace does not replay".into())?;
    augment(&mut corpus);
    ensure(corpus.traces.iter().all(|t| replay_trace(t).is_some()), || "corpus does not replay after augmentation".into())?;
    for s in corpus.traces.iter().flat_map(|t| &t.steps) {
        let line = encode_step_line(s);
        let back = parse_step_line(&line).map_err(|e| format!("{}: {}", line, e))?;
        ensure(&back == s, || format!("step line {} does not round-trip", line))?;
    }
    let mut bytes = Vec::new();
    write_dataset(&mut bytes, &corpus.traces).map_err(|e| e.to_string())?;
    let read = read_dataset(&bytes[..]).map_err(|e| e.to_string())?;
    ensure(read == corpus.traces, || "dataset does not read back".into())?;
    ensure(dataset_stats(&read) == dataset_stats(&corpus.traces), || "statistics differ".into())?;
    Ok(format!(
        "nodes in [{}, {}], leaf-x {:.4}; {} solved of 10000, {} after augmentation, {} duplicates",
        lo,
        hi,
        frac,
        solved,
        corpus.traces.len(),
        corpus.duplicates
    ))
}

fn search_contract() -> Check {
    let cfg = SearchConfig {
        max_nodes: 40,
        timeout: Duration::from_secs(3600),
        ..SearchConfig::heuristic()
    };
    let roots: Vec<Expr> = (0..100).map(|i| Expr::integral(random_expr(0x5ea, i), Symbol::X)).collect();
    let run = || -> Vec<(ProofResult, Vec<Expr>)> {
        roots
            .iter()
            .map(|e| {
                let mut policy = Recording { inner: HeuristicPolicy::new(), seen: Vec::new() };
                (integrate(e, &mut policy, &cfg), policy.seen)
            })
            .collect()
    };
    let (a, b) = (run(), run());
    for ((x, seen), (y, _)) in a.iter().zip(&b) {
        ensure(x.status == y.status && x.steps == y.steps && x.stats.nodes == y.stats.nodes, || {
            format!("runs differ on {}", x.expression)
        })?;
        ensure(x.stats.max_depth < 64, || format!("depth {}", x.stats.max_depth))?;
        let distinct: HashSet<_> = seen.iter().collect();
        ensure(distinct.len() == seen.len(), || format!("an expression was expanded twice under {}", x.expression))?;
    }
    let hist = |v: &[(ProofResult, Vec<Expr>)]| node_histogram(v.iter().map(|r| &r.0));
    ensure(hist(&a) == hist(&b), || "node histograms differ".into())?;

    let hard = p(&format!("Integral({}, x)", HARD));
    let mut slack = Vec::new();
    let mut timed = |label: &str, r: ProofResult, timeout: Duration| -> Result<(), String> {
        let over = r.stats.elapsed.saturating_sub(timeout);
        eprintln!("  {}: {:?} after {:?}, {} calls, {} errors", label, r.status, r.stats.elapsed, r.stats.policy_calls, r.stats.transport_errors);
        slack.push(format!("{} {:.2}s", label, over.as_secs_f64()));
        ensure(r.stats.elapsed <= timeout + Duration::from_secs(1), || {
            format!("{}: {:?} against {:?}", label, r.stats.elapsed, timeout)
        })
    };
    let learned = SearchConfig { max_nodes: usize::MAX, ..SearchConfig::learned() };
    let heuristic = SearchConfig { max_nodes: usize::MAX, ..SearchConfig::heuristic() };
    let silent = || ExternalPolicy::new(spawn_policy_server(None)).with_timeout(Duration::from_secs(3600));
    let slow = ExternalPolicy::new(spawn_policy_server(Some(Duration::from_millis(300))));

    let r = integrate(&hard, &mut HeuristicPolicy::new(), &SearchConfig { timeout: learned.timeout, ..heuristic.clone() });
    timed("heuristic/10s", r, learned.timeout)?;
    let r = integrate(&hard, &mut { slow }, &learned);
    timed("slow server/10s", r, learned.timeout)?;
    let r = integrate(&hard, &mut silent(), &learned);
    ensure(r.status == Status::Timeout, || format!("silent server: {:?}", r.status))?;
    timed("silent server/10s", r, learned.timeout)?;
    let r = integrate(&hard, &mut silent(), &heuristic);
    ensure(r.status == Status::Timeout, || format!("silent server: {:?}", r.status))?;
    timed("silent server/120s", r, heuristic.timeout)?;
    Ok(format!("100 expressions reproducible; overrun {}", slack.join(", ")))
}

fn robustness() -> Check {
    let rows = robustness_suite(200, &validation_suite(), HeuristicPolicy::new, &SearchConfig::heuristic());
    print!("{}", render_robustness(&rows));
    for r in &rows {
        if matches!(r.family, Family::Linear | Family::Pow42 | Family::Sin | Family::Cos) {
            ensure(r.failures == 0, || format!("{}: Fail@5 {:.1}%", r.label, r.fail_pct))?;
        }
    }
    Ok(format!("{} families, 200 samples each", rows.len()))
}

fn main() {
    let criteria: [Criterion; 6] = [
        ("codec bijection", Some(Duration::from_secs(30)), codec_bijection),
        ("rule soundness", Some(Duration::from_secs(120)), rule_soundness),
        ("worked examples", Some(Duration::from_secs(60)), worked_examples),
        ("generator fidelity", Some(Duration::from_secs(15 * 60)), generator_fidelity),
        ("search contract", None, search_contract),
        ("robustness", None, robustness),
    ];
    // Optional name filters, e.g. `cargo test --test acceptance -- search`.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, limit, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let late = limit.is_some_and(|l| elapsed > l);
        let ok = outcome.is_ok() && !late;
        failed += usize::from(!ok);
        let detail = match (&outcome, late) {
            (Ok(d), false) => d.clone(),
            (Ok(d), true) => format!("{}; over the {:?} limit", d, limit.unwrap()),
            (Err(e), _) => e.clone(),
        };
        println!("{} {:<20} {:>8.1}s  {}", if ok { "PASS" } else { "FAIL" }, name, elapsed.as_secs_f64(), detail);
    }
    if failed > 0 {
        println!("{} criteria failed", failed);
        std::process::exit(1);
    }
}
