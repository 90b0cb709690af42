//! Structural substitution.

use super::canon::{add_all, canonicalize, func, mul, pow, terms};
use super::{Expr, Node};

/// Replace every maximal occurrence of `target` in `e` by `replacement`.
///
/// Both `e` and `target` are canonicalised first. A sum target also matches
/// a sub-multiset of the terms of a larger sum.
pub fn substitute(e: &Expr, target: &Expr, replacement: &Expr) -> Expr {
    let e = canonicalize(e);
    let target = canonicalize(target);
    let target_terms = match target.node() {
        Node::Add(..) => Some(terms(&target)),
        _ => None,
    };
    replace(&e, &target, target_terms.as_deref(), replacement)
}

/// Substitute with already-canonical arguments.
pub fn substitute_canonical(e: &Expr, target: &Expr, replacement: &Expr) -> Expr {
    let target_terms = match target.node() {
        Node::Add(..) => Some(terms(target)),
        _ => None,
    };
    replace(e, target, target_terms.as_deref(), replacement)
}

fn replace(e: &Expr, target: &Expr, target_terms: Option<&[Expr]>, with: &Expr) -> Expr {
    if e == target {
        return with.clone();
    }
    if e.size() < target.size() && target_terms.is_none() {
        return e.clone();
    }
    match e.node() {
        Node::Integer(_) | Node::Rational(_) | Node::Symbol(_) | Node::Constant(_) => e.clone(),
        Node::Add(..) => {
            let mut ts = terms(e);
            if let Some(tt) = target_terms {
                if let Some(rest) = remove_submultiset(&ts, tt) {
                    let mut out: Vec<Expr> = rest
                        .iter()
                        .map(|t| replace(t, target, target_terms, with))
                        .collect();
                    out.push(with.clone());
                    return add_all(out);
                }
            }
            ts = ts.iter().map(|t| replace(t, target, target_terms, with)).collect();
            add_all(ts)
        }
        Node::Mul(a, b) => mul(
            replace(a, target, target_terms, with),
            replace(b, target, target_terms, with),
        ),
        Node::Pow(a, b) => pow(
            replace(a, target, target_terms, with),
            replace(b, target, target_terms, with),
        ),
        Node::Func(f, a) => func(*f, replace(a, target, target_terms, with)),
        Node::Integral(a, v) => {
            let inner = replace(a, target, target_terms, with);
            Expr::integral(inner, *v)
        }
    }
}

fn remove_submultiset(haystack: &[Expr], needle: &[Expr]) -> Option<Vec<Expr>> {
    if needle.len() >= haystack.len() {
        return None;
    }
    let mut rest = haystack.to_vec();
    for n in needle {
        let pos = rest.iter().position(|t| t == n)?;
        rest.remove(pos);
    }
    Some(rest)
}
