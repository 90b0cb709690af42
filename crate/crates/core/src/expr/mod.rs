//! Immutable expression trees.
//!
//! Every operator has a fixed arity and children are stored in order. `Expr`
//! values may be built raw (any shape) or through the canonical smart
//! constructors in [`canon`]; most of the crate only ever handles canonical
//! trees.

pub mod canon;
pub mod diff;
mod display;
pub mod subst;

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canon::canonicalize;
pub use diff::differentiate;
pub use subst::substitute;

/// The seven symbols usable as integration and substitution variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    X,
    Y,
    Z,
    U,
    V,
    W,
    T,
}

impl Symbol {
    pub const ALL: [Symbol; 7] = [
        Symbol::X,
        Symbol::Y,
        Symbol::Z,
        Symbol::U,
        Symbol::V,
        Symbol::W,
        Symbol::T,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Symbol::X => "x",
            Symbol::Y => "y",
            Symbol::Z => "z",
            Symbol::U => "u",
            Symbol::V => "v",
            Symbol::W => "w",
            Symbol::T => "t",
        }
    }

    pub fn from_name(s: &str) -> Option<Symbol> {
        Symbol::ALL.into_iter().find(|sym| sym.name() == s)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constant {
    E,
    Pi,
    I,
}

impl Constant {
    pub const ALL: [Constant; 3] = [Constant::E, Constant::Pi, Constant::I];
}

/// Unary functions. Declaration order is the canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Cot,
    Sec,
    Csc,
    Asin,
    Acos,
    Atan,
    Acot,
    Asec,
    Acsc,
    Sinh,
    Cosh,
    Tanh,
    Coth,
    Sech,
    Csch,
    Asinh,
    Acosh,
    Atanh,
    Acoth,
    Asech,
    Acsch,
    Exp,
    Log,
    Erf,
    Ei,
    Ci,
    Si,
}

impl Func {
    pub const ALL: [Func; 30] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Cot,
        Func::Sec,
        Func::Csc,
        Func::Asin,
        Func::Acos,
        Func::Atan,
        Func::Acot,
        Func::Asec,
        Func::Acsc,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Coth,
        Func::Sech,
        Func::Csch,
        Func::Asinh,
        Func::Acosh,
        Func::Atanh,
        Func::Acoth,
        Func::Asech,
        Func::Acsch,
        Func::Exp,
        Func::Log,
        Func::Erf,
        Func::Ei,
        Func::Ci,
        Func::Si,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Cot => "cot",
            Func::Sec => "sec",
            Func::Csc => "csc",
            Func::Asin => "asin",
            Func::Acos => "acos",
            Func::Atan => "atan",
            Func::Acot => "acot",
            Func::Asec => "asec",
            Func::Acsc => "acsc",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Coth => "coth",
            Func::Sech => "sech",
            Func::Csch => "csch",
            Func::Asinh => "asinh",
            Func::Acosh => "acosh",
            Func::Atanh => "atanh",
            Func::Acoth => "acoth",
            Func::Asech => "asech",
            Func::Acsch => "acsch",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Erf => "erf",
            Func::Ei => "Ei",
            Func::Ci => "Ci",
            Func::Si => "Si",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    /// The function `g` with `self(g(z)) = z` for every `z`, if there is one
    /// in the table. Only left inverses that hold on the whole plane are
    /// listed, so `sin(asin(z))` folds but `asin(sin(z))` never does.
    pub fn right_inverse_of(self) -> Option<Func> {
        Some(match self {
            Func::Sin => Func::Asin,
            Func::Cos => Func::Acos,
            Func::Tan => Func::Atan,
            Func::Sinh => Func::Asinh,
            Func::Cosh => Func::Acosh,
            Func::Tanh => Func::Atanh,
            Func::Exp => Func::Log,
            _ => return None,
        })
    }
}

/// Operator identifiers of the tree language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Integral,
    Add,
    Pow,
    Mul,
    Func(Func),
}

/// Static facts about one operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpInfo {
    pub arity: usize,
    pub commutative: bool,
}

/// Lookup table over every operator of the language. Differentiation rules
/// live in [`diff`], numeric evaluators in [`crate::numeric`]; both match
/// exhaustively on [`Op`], so a missing entry is a compile error.
pub struct OperatorTable;

impl OperatorTable {
    pub fn info(op: Op) -> OpInfo {
        match op {
            Op::Integral | Op::Pow => OpInfo {
                arity: 2,
                commutative: false,
            },
            Op::Add | Op::Mul => OpInfo {
                arity: 2,
                commutative: true,
            },
            Op::Func(_) => OpInfo {
                arity: 1,
                commutative: false,
            },
        }
    }

    pub fn all() -> impl Iterator<Item = Op> {
        [Op::Integral, Op::Add, Op::Pow, Op::Mul]
            .into_iter()
            .chain(Func::ALL.into_iter().map(Op::Func))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Integer(BigInt),
    /// Always reduced with denominator > 1.
    Rational(BigRational),
    Symbol(Symbol),
    Constant(Constant),
    Add(Expr, Expr),
    Mul(Expr, Expr),
    /// Base, exponent.
    Pow(Expr, Expr),
    Func(Func, Expr),
    /// Integrand, variable of integration.
    Integral(Expr, Symbol),
}

struct Inner {
    node: Node,
    hash: u64,
    size: usize,
}

/// A shared, immutable expression tree.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("operator {op:?} expects {expected} children, got {got}")]
    Arity { op: Op, expected: usize, got: usize },
    #[error("second child of an integral must be a symbol")]
    IntegralVariable,
}

impl Expr {
    pub fn new(node: Node) -> Expr {
        let mut h = DefaultHasher::new();
        let size = match &node {
            Node::Integer(_) | Node::Rational(_) | Node::Symbol(_) | Node::Constant(_) => {
                node.hash(&mut h);
                1
            }
            Node::Add(a, b) | Node::Mul(a, b) | Node::Pow(a, b) => {
                std::mem::discriminant(&node).hash(&mut h);
                a.0.hash.hash(&mut h);
                b.0.hash.hash(&mut h);
                1 + a.size() + b.size()
            }
            Node::Func(f, a) => {
                f.hash(&mut h);
                a.0.hash.hash(&mut h);
                1 + a.size()
            }
            Node::Integral(a, v) => {
                std::mem::discriminant(&node).hash(&mut h);
                a.0.hash.hash(&mut h);
                v.hash(&mut h);
                2 + a.size()
            }
        };
        Expr(Arc::new(Inner {
            node,
            hash: h.finish(),
            size,
        }))
    }

    /// Checked construction from an operator and its children.
    pub fn from_op(op: Op, mut children: Vec<Expr>) -> Result<Expr, ExprError> {
        let expected = OperatorTable::info(op).arity;
        if children.len() != expected {
            return Err(ExprError::Arity {
                op,
                expected,
                got: children.len(),
            });
        }
        let node = match op {
            Op::Func(f) => Node::Func(f, children.pop().unwrap()),
            _ => {
                let b = children.pop().unwrap();
                let a = children.pop().unwrap();
                match op {
                    Op::Add => Node::Add(a, b),
                    Op::Mul => Node::Mul(a, b),
                    Op::Pow => Node::Pow(a, b),
                    Op::Integral => match b.node() {
                        Node::Symbol(s) => Node::Integral(a, *s),
                        _ => return Err(ExprError::IntegralVariable),
                    },
                    Op::Func(_) => unreachable!(),
                }
            }
        };
        Ok(Expr::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    /// Number of nodes; an integral counts its variable as a leaf.
    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn int(n: impl Into<BigInt>) -> Expr {
        Expr::new(Node::Integer(n.into()))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    /// A number node, stored as an integer when integral.
    pub fn number(r: BigRational) -> Expr {
        if r.is_integer() {
            Expr::new(Node::Integer(r.to_integer()))
        } else {
            Expr::new(Node::Rational(r))
        }
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::number(BigRational::new(n.into(), d.into()))
    }

    pub fn symbol(s: Symbol) -> Expr {
        Expr::new(Node::Symbol(s))
    }

    pub fn constant(c: Constant) -> Expr {
        Expr::new(Node::Constant(c))
    }

    pub fn x() -> Expr {
        Expr::symbol(Symbol::X)
    }

    pub fn raw_add(a: Expr, b: Expr) -> Expr {
        Expr::new(Node::Add(a, b))
    }

    pub fn raw_mul(a: Expr, b: Expr) -> Expr {
        Expr::new(Node::Mul(a, b))
    }

    pub fn raw_pow(a: Expr, b: Expr) -> Expr {
        Expr::new(Node::Pow(a, b))
    }

    pub fn raw_func(f: Func, a: Expr) -> Expr {
        Expr::new(Node::Func(f, a))
    }

    pub fn integral(integrand: Expr, var: Symbol) -> Expr {
        Expr::new(Node::Integral(integrand, var))
    }

    pub fn op(&self) -> Option<Op> {
        Some(match self.node() {
            Node::Add(..) => Op::Add,
            Node::Mul(..) => Op::Mul,
            Node::Pow(..) => Op::Pow,
            Node::Func(f, _) => Op::Func(*f),
            Node::Integral(..) => Op::Integral,
            _ => return None,
        })
    }

    /// Children in order. The variable of an integral is materialised as a
    /// symbol leaf.
    pub fn children(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(a, b) | Node::Mul(a, b) | Node::Pow(a, b) => vec![a.clone(), b.clone()],
            Node::Func(_, a) => vec![a.clone()],
            Node::Integral(a, v) => vec![a.clone(), Expr::symbol(*v)],
            _ => Vec::new(),
        }
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self.node() {
            Node::Integer(n) => Some(BigRational::from_integer(n.clone())),
            Node::Rational(r) => Some(r.clone()),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<&BigInt> {
        match self.node() {
            Node::Integer(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        self.as_integer().and_then(|n| n.to_i64())
    }

    pub fn as_symbol(&self) -> Option<Symbol> {
        match self.node() {
            Node::Symbol(s) => Some(*s),
            _ => None,
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self.node(), Node::Integer(_) | Node::Rational(_))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Integer(n) if n.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Integer(n) if n.is_one())
    }

    pub fn is_integral(&self) -> bool {
        matches!(self.node(), Node::Integral(..))
    }

    pub fn is_func(&self, f: Func) -> bool {
        matches!(self.node(), Node::Func(g, _) if *g == f)
    }

    pub fn func_arg(&self, f: Func) -> Option<&Expr> {
        match self.node() {
            Node::Func(g, a) if *g == f => Some(a),
            _ => None,
        }
    }

    pub fn is_negative_number(&self) -> bool {
        match self.node() {
            Node::Integer(n) => n.is_negative(),
            Node::Rational(r) => r.is_negative(),
            _ => false,
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Expr)) {
        visit(self);
        match self.node() {
            Node::Add(a, b) | Node::Mul(a, b) | Node::Pow(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
            Node::Func(_, a) | Node::Integral(a, _) => a.walk(visit),
            _ => {}
        }
    }

    pub fn any(&self, pred: &mut dyn FnMut(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self.node() {
            Node::Add(a, b) | Node::Mul(a, b) | Node::Pow(a, b) => a.any(pred) || b.any(pred),
            Node::Func(_, a) | Node::Integral(a, _) => a.any(pred),
            _ => false,
        }
    }

    pub fn contains(&self, target: &Expr) -> bool {
        self.any(&mut |e| e == target)
    }

    /// Symbols occurring anywhere, including integration variables.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| match e.node() {
            Node::Symbol(s) | Node::Integral(_, s) => {
                out.insert(*s);
            }
            _ => {}
        });
        out
    }

    pub fn has_symbol(&self, s: Symbol) -> bool {
        self.any(&mut |e| matches!(e.node(), Node::Symbol(t) | Node::Integral(_, t) if *t == s))
    }

    pub fn is_free_of(&self, s: Symbol) -> bool {
        !self.has_symbol(s)
    }

    pub fn has_integral(&self) -> bool {
        self.any(&mut |e| e.is_integral())
    }

    /// Integral nodes in pre-order.
    pub fn integrals(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if e.is_integral() {
                out.push(e.clone());
            }
        });
        out
    }

    /// 64-bit digest of the canonical form; agrees with [`structural_eq`].
    pub fn digest(&self) -> u64 {
        canonicalize(self).0.hash
    }

    /// The precomputed hash of this exact tree (no canonicalisation).
    pub fn tree_hash(&self) -> u64 {
        self.0.hash
    }

    pub fn to_f64(&self) -> Option<f64> {
        self.as_rational().and_then(|r| r.to_f64())
    }
}

/// Structural equality modulo canonical form.
pub fn structural_eq(a: &Expr, b: &Expr) -> bool {
    canonicalize(a) == canonicalize(b)
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash
                && self.0.size == other.0.size
                && self.0.node == other.0.node)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

fn class_rank(e: &Expr) -> u8 {
    match e.node() {
        Node::Integer(_) | Node::Rational(_) => 0,
        Node::Constant(_) => 1,
        Node::Symbol(_) => 2,
        _ => 3,
    }
}

/// Canonical total order: numbers (by value) before constants before
/// symbols before compound nodes; compound nodes compare by operator token
/// and then children left to right, i.e. by their prefix token sequences.
impl Ord for Expr {
    fn cmp(&self, other: &Expr) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let (ra, rb) = (class_rank(self), class_rank(other));
        if ra != rb {
            return ra.cmp(&rb);
        }
        match (self.node(), other.node()) {
            (Node::Constant(a), Node::Constant(b)) => a.cmp(b),
            (Node::Symbol(a), Node::Symbol(b)) => a.cmp(b),
            _ if ra == 0 => self.as_rational().unwrap().cmp(&other.as_rational().unwrap()),
            _ => {
                let (oa, ob) = (self.op().unwrap(), other.op().unwrap());
                if oa != ob {
                    return oa.cmp(&ob);
                }
                match (self.node(), other.node()) {
                    (Node::Integral(a, va), Node::Integral(b, vb)) => {
                        a.cmp(b).then_with(|| va.cmp(vb))
                    }
                    _ => {
                        for (x, y) in self.children().iter().zip(other.children().iter()) {
                            let c = x.cmp(y);
                            if c != Ordering::Equal {
                                return c;
                            }
                        }
                        Ordering::Equal
                    }
                }
            }
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Expr) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Expr {
        Expr::symbol(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checked_constructor_enforces_arity() {
        let x = Expr::x();
        assert!(matches!(
            Expr::from_op(Op::Add, vec![x.clone()]),
            Err(ExprError::Arity { expected: 2, got: 1, .. })
        ));
        assert!(Expr::from_op(Op::Func(Func::Sin), vec![x.clone()]).is_ok());
        assert_eq!(
            Expr::from_op(Op::Integral, vec![x.clone(), Expr::int(2)]),
            Err(ExprError::IntegralVariable)
        );
    }

    #[test]
    fn every_operator_has_table_entry() {
        for op in OperatorTable::all() {
            let info = OperatorTable::info(op);
            assert!(info.arity == 1 || info.arity == 2);
        }
        assert!(OperatorTable::info(Op::Add).commutative);
        assert!(!OperatorTable::info(Op::Pow).commutative);
    }

    #[test]
    fn numbers_sort_before_constants_before_symbols() {
        let mut v = [
            Expr::x(),
            Expr::raw_func(Func::Sin, Expr::x()),
            Expr::constant(Constant::E),
            Expr::int(3),
            Expr::rational(-1, 2),
        ];
        v.sort();
        assert_eq!(v[0], Expr::rational(-1, 2));
        assert_eq!(v[1], Expr::int(3));
        assert_eq!(v[2], Expr::constant(Constant::E));
        assert_eq!(v[3], Expr::x());
    }
}
