//! The rule engine: applies one action to one subexpression, tracks visited
//! expressions and the changes of variables that are still open.

mod action;
pub mod parts;
pub mod rewrite;
pub mod table;
pub mod usub;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use action::Action;

use crate::expr::canon::{add, func, mul, pow};
use crate::expr::subst::substitute_canonical;
use crate::expr::{canonicalize, Expr, Node, Symbol};

/// An action with its parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ActionCall {
    pub action: Action,
    pub params: Vec<Expr>,
}

impl ActionCall {
    pub fn new(action: Action, params: Vec<Expr>) -> ActionCall {
        ActionCall { action, params }
    }

    pub fn bare(action: Action) -> ActionCall {
        ActionCall::new(action, Vec::new())
    }
}

/// An open change of variables `symbol = expr`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Substitution {
    pub symbol: Symbol,
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApplyResult {
    pub expression: Expr,
    pub modified: bool,
    /// The result had been seen before by this state.
    pub revisited: bool,
}

/// Visited expressions, each with the substitutions open at that point.
#[derive(Clone, Debug, Default)]
pub struct EngineState {
    visited: HashMap<Expr, Vec<Substitution>>,
}

impl EngineState {
    pub fn new() -> EngineState {
        EngineState::default()
    }

    /// Record a starting expression with no open substitutions.
    pub fn register(&mut self, e: &Expr) -> Expr {
        let e = canonicalize(e);
        self.visited.entry(e.clone()).or_default();
        e
    }

    pub fn contains(&self, e: &Expr) -> bool {
        self.visited.contains_key(e)
    }

    pub fn len(&self) -> usize {
        self.visited.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visited.is_empty()
    }

    /// Substitutions open at `e` (empty for unknown expressions).
    pub fn substitutions(&self, e: &Expr) -> &[Substitution] {
        self.visited.get(e).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Apply `call` to the leftmost occurrence of `g` in `f`.
    pub fn apply(&mut self, f: &Expr, g: &Expr, call: &ActionCall) -> ApplyResult {
        let f = canonicalize(f);
        let subs = self.substitutions(&f).to_vec();
        match apply_pure(&f, g, call, &subs) {
            Some((e, subs)) => {
                let revisited = self.visited.contains_key(&e);
                if !revisited {
                    self.visited.insert(e.clone(), subs);
                }
                ApplyResult {
                    expression: e,
                    modified: true,
                    revisited,
                }
            }
            None => ApplyResult {
                expression: f,
                modified: false,
                revisited: false,
            },
        }
    }

    /// Change of variables `newvar = sub` on the integral `g`.
    pub fn apply_u_rule(&mut self, f: &Expr, g: &Expr, newvar: Symbol, sub: &Expr) -> ApplyResult {
        self.apply(
            f,
            g,
            &ActionCall::new(Action::U, vec![Expr::symbol(newvar), sub.clone()]),
        )
    }

    /// Integration by parts with `u` and `dv` on the integral `g`.
    pub fn apply_parts_rule(&mut self, f: &Expr, g: &Expr, u: &Expr, dv: &Expr) -> ApplyResult {
        self.apply(
            f,
            g,
            &ActionCall::new(Action::Parts, vec![u.clone(), dv.clone()]),
        )
    }
}

/// Path of child indices to the leftmost pre-order occurrence of `g`.
fn find_path(f: &Expr, g: &Expr) -> Option<Vec<usize>> {
    if f == g {
        return Some(Vec::new());
    }
    if f.size() <= g.size() {
        return None;
    }
    let kids: Vec<Expr> = match f.node() {
        Node::Integral(a, _) => vec![a.clone()],
        _ => f.children(),
    };
    for (i, c) in kids.iter().enumerate() {
        if let Some(mut p) = find_path(c, g) {
            p.insert(0, i);
            return Some(p);
        }
    }
    None
}

fn node_at(f: &Expr, path: &[usize]) -> Expr {
    let mut cur = f.clone();
    for &i in path {
        cur = match cur.node() {
            Node::Integral(a, _) => a.clone(),
            _ => cur.children()[i].clone(),
        };
    }
    cur
}

/// Replace the node at `path`, rebuilding the ancestors canonically.
fn replace_at(f: &Expr, path: &[usize], with: Expr) -> Expr {
    let Some((&i, rest)) = path.split_first() else {
        return with;
    };
    match f.node() {
        Node::Add(a, b) => {
            if i == 0 {
                add(replace_at(a, rest, with), b.clone())
            } else {
                add(a.clone(), replace_at(b, rest, with))
            }
        }
        Node::Mul(a, b) => {
            if i == 0 {
                mul(replace_at(a, rest, with), b.clone())
            } else {
                mul(a.clone(), replace_at(b, rest, with))
            }
        }
        Node::Pow(a, b) => {
            if i == 0 {
                pow(replace_at(a, rest, with), b.clone())
            } else {
                pow(a.clone(), replace_at(b, rest, with))
            }
        }
        Node::Func(fu, a) => func(*fu, replace_at(a, rest, with)),
        Node::Integral(a, v) => Expr::integral(replace_at(a, rest, with), *v),
        _ => unreachable!("leaf on a non-empty path"),
    }
}

fn under_integral(f: &Expr, path: &[usize]) -> bool {
    let mut cur = f.clone();
    for &i in path {
        if cur.is_integral() {
            return true;
        }
        cur = match cur.node() {
            Node::Integral(a, _) => a.clone(),
            _ => cur.children()[i].clone(),
        };
    }
    false
}

/// Symbols that a new substitution may not reuse.
pub fn used_symbols(f: &Expr, subs: &[Substitution]) -> BTreeSet<Symbol> {
    let mut used = f.symbols();
    for s in subs {
        used.insert(s.symbol);
        used.extend(s.expr.symbols());
    }
    used
}

/// The rewrite of `g` itself, plus a substitution to record.
fn rewrite(
    f: &Expr,
    g: &Expr,
    call: &ActionCall,
    subs: &[Substitution],
) -> Option<(Expr, Option<Substitution>)> {
    let a = call.action;
    if call.params.len() != a.arity() {
        return None;
    }
    if a.targets_function() {
        return rewrite::rewrite_function(a, g).map(|r| (r, None));
    }
    let Node::Integral(body, x) = g.node() else { return None };
    let (body, x) = (body.clone(), *x);
    if body.has_integral() {
        return None;
    }
    let closed = |r: Option<Expr>| r.map(|r| (r, None));
    use Action::*;
    match a {
        _ if a.is_table() => closed(table::antiderivative(a, &body, x)),
        ConstantTimes => closed(table::constant_times(&body, x, &call.params[0])),
        Add => closed(table::add_rule(&body, x)),
        U => {
            let y = call.params[0].as_symbol()?;
            let s = &call.params[1];
            if used_symbols(f, subs).contains(&y) || !s.symbols().is_subset(&body.symbols()) {
                return None;
            }
            let r = usub::u_substitute(&body, x, y, s)?;
            Some((
                r.integral,
                Some(Substitution {
                    symbol: y,
                    expr: s.clone(),
                }),
            ))
        }
        Parts => closed(parts::parts(&body, x, &call.params[0], &call.params[1])),
        _ => closed(rewrite::rewrite_integrand(a, &body, x).map(|r| Expr::integral(r, x))),
    }
}

/// Apply without touching any state. Returns the new expression and the
/// substitutions open afterwards, or `None` if the action is not valid.
pub fn apply_pure(
    f: &Expr,
    g: &Expr,
    call: &ActionCall,
    subs: &[Substitution],
) -> Option<(Expr, Vec<Substitution>)> {
    let g = canonicalize(g);
    let params: Vec<Expr> = call.params.iter().map(canonicalize).collect();
    let call = ActionCall::new(call.action, params);
    let path = find_path(f, &g)?;
    if call.action.targets_function() && !under_integral(f, &path) {
        return None;
    }
    let (r, new_sub) = rewrite(f, &g, &call, subs)?;
    let mut subs = subs.to_vec();
    subs.extend(new_sub);
    let e = replace_at(f, &path, r);
    let e = backsubstitute(&e, &mut subs);
    (e != *f).then_some((e, subs))
}

/// Undo every substitution whose symbol no longer occurs under an integral,
/// latest first.
pub fn backsubstitute(e: &Expr, subs: &mut Vec<Substitution>) -> Expr {
    let mut e = e.clone();
    loop {
        let live: BTreeSet<Symbol> = e
            .integrals()
            .iter()
            .flat_map(|i| i.symbols())
            .collect();
        let Some(k) = subs.iter().rposition(|s| !live.contains(&s.symbol)) else {
            return e;
        };
        let s = subs.remove(k);
        let sym = Expr::symbol(s.symbol);
        e = substitute_canonical(&e, &sym, &s.expr);
        for other in subs.iter_mut() {
            other.expr = substitute_canonical(&other.expr, &sym, &s.expr);
        }
    }
}

/// Every valid `(subexpression, action)` pair on `e`, integral by integral
/// in pre-order, actions in table order.
pub fn list_applicable(e: &Expr, subs: &[Substitution]) -> Vec<(Expr, ActionCall)> {
    let e = canonicalize(e);
    let mut out = Vec::new();
    for g in e.integrals() {
        out.extend(applicable_on(&e, &g, subs));
    }
    out
}

/// Valid actions on one integral `g` of `f`.
pub fn applicable_on(f: &Expr, g: &Expr, subs: &[Substitution]) -> Vec<(Expr, ActionCall)> {
    let Node::Integral(body, x) = g.node() else { return Vec::new() };
    let mut out = Vec::new();
    let mut try_push = |target: &Expr, call: ActionCall| {
        if apply_pure(f, target, &call, subs).is_some() {
            out.push((target.clone(), call));
        }
    };
    for a in Action::ALL {
        match a {
            Action::ConstantTimes => {
                let (c, _) = table::split_constant(body, *x);
                try_push(g, ActionCall::new(a, vec![c]));
            }
            Action::U => {
                let Some(y) = usub::fresh_symbol(&used_symbols(f, subs)) else { continue };
                for s in usub::candidates(body, *x) {
                    try_push(g, ActionCall::new(a, vec![Expr::symbol(y), s]));
                }
            }
            Action::Parts => {
                for (u, dv) in parts::pairings(body, *x) {
                    try_push(g, ActionCall::new(a, vec![u, dv]));
                }
            }
            _ if a.targets_function() => {
                let mut seen: Vec<Expr> = Vec::new();
                body.walk(&mut |n| {
                    if !seen.contains(n) && rewrite::rewrite_function(a, n).is_some() {
                        seen.push(n.clone());
                    }
                });
                for n in seen {
                    try_push(&n, ActionCall::bare(a));
                }
            }
            _ => try_push(g, ActionCall::bare(a)),
        }
    }
    out
}

/// The node at the leftmost occurrence of `g` in `f`, if any.
pub fn locate(f: &Expr, g: &Expr) -> Option<Expr> {
    find_path(f, g).map(|p| node_at(f, &p))
}
