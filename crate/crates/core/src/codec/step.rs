use crate::engine::Action;
use crate::expr::{canonicalize, Expr};

use super::{
    error, tokenize, tree_to_text, CodecError, CodecErrorKind, Cursor, END, PARAM, PARAM1, PARAM2,
    RULE, START, SUBEXPR,
};

/// One proof step: the action `rule(params)` applied to `subexpression`
/// inside `expression`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StepRecord {
    pub expression: Expr,
    pub subexpression: Expr,
    pub rule: Action,
    pub params: Vec<Expr>,
}

/// `START <expr> SUBEXPR <subexpr> RULE <rule> [PARAM ..|PARAM1 .. PARAM2 ..] END`
pub fn encode_step_line(r: &StepRecord) -> String {
    let mut s = format!(
        "{START} {} {SUBEXPR} {} {RULE} {}",
        tree_to_text(&r.expression),
        tree_to_text(&r.subexpression),
        r.rule.name()
    );
    match r.params.as_slice() {
        [] => {}
        [p] => {
            s.push_str(&format!(" {PARAM} {}", tree_to_text(p)));
        }
        ps => {
            for (i, p) in ps.iter().enumerate() {
                s.push_str(&format!(" PARAM{} {}", i + 1, tree_to_text(p)));
            }
        }
    }
    s.push(' ');
    s.push_str(END);
    s
}

pub fn parse_step_line(line: &str) -> Result<StepRecord, CodecError> {
    let toks = tokenize(line);
    let mut cur = Cursor::new(&toks, line.len());
    cur.expect(START)?;
    let expression = canonicalize(&cur.expr()?);
    cur.expect(SUBEXPR)?;
    let subexpression = canonicalize(&cur.expr()?);
    cur.expect(RULE)?;
    let rt = cur.next()?;
    let rule = Action::from_name(rt.text)
        .ok_or_else(|| error(CodecErrorKind::Expected("rule token"), rt))?;
    let mut params = Vec::new();
    match cur.peek() {
        Some(t) if t.text == PARAM => {
            cur.next()?;
            params.push(canonicalize(&cur.expr()?));
        }
        Some(t) if t.text == PARAM1 => {
            cur.next()?;
            params.push(canonicalize(&cur.expr()?));
            cur.expect(PARAM2)?;
            params.push(canonicalize(&cur.expr()?));
        }
        _ => {}
    }
    let end = cur.peek();
    cur.expect(END)?;
    if let Some(t) = cur.peek() {
        return Err(error(CodecErrorKind::Trailing, t));
    }
    if params.len() != rule.arity() {
        return Err(error(
            CodecErrorKind::ParamCount {
                expected: rule.arity(),
                got: params.len(),
            },
            end.unwrap(),
        ));
    }
    debug_assert!(cur.done());
    Ok(StepRecord {
        expression,
        subexpression,
        rule,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::canon::{add_all, func, num};
    use crate::expr::{Constant, Func, Symbol};

    #[test]
    fn substitution_line_round_trips() {
        let line = "START Integral cos + E + x tan INT+ 2 x SUBEXPR Integral cos + E + x tan INT+ 2 x RULE URule PARAM1 y PARAM2 + E + x tan INT+ 2 END";
        let r = parse_step_line(line).unwrap();
        let shift = add_all([
            Expr::x(),
            func(Func::Tan, num(2)),
            Expr::constant(Constant::E),
        ]);
        let integral = Expr::integral(func(Func::Cos, shift.clone()), Symbol::X);
        assert_eq!(r.expression, integral);
        assert_eq!(r.subexpression, integral);
        assert_eq!(r.rule, Action::U);
        assert_eq!(r.params, vec![Expr::symbol(Symbol::Y), shift]);
        assert_eq!(encode_step_line(&r), line.replace("Integral", "INTEGRAL"));
    }

    #[test]
    fn parameterless_rule() {
        let one = Expr::integral(num(1), Symbol::X);
        let r = StepRecord {
            expression: one.clone(),
            subexpression: one,
            rule: Action::Constant,
            params: vec![],
        };
        let line = encode_step_line(&r);
        assert_eq!(line, "START INTEGRAL INT+ 1 x SUBEXPR INTEGRAL INT+ 1 x RULE ConstantRule END");
        assert_eq!(parse_step_line(&line).unwrap(), r);
    }

    #[test]
    fn malformed_lines_name_the_offending_token() {
        let e = parse_step_line("START x SUBEXPR x RULE Nope END").unwrap_err();
        assert_eq!(e.token, "Nope");
        let e = parse_step_line("START x SUBEXPR x RULE ConstantTimesRule END").unwrap_err();
        assert!(matches!(e.kind, CodecErrorKind::ParamCount { expected: 1, got: 0 }));
        let e = parse_step_line("START x x SUBEXPR x RULE ConstantRule END").unwrap_err();
        assert_eq!(e.kind, CodecErrorKind::Expected(SUBEXPR));
        assert_eq!(e.offset, 8);
        let e = parse_step_line("START x SUBEXPR x RULE ConstantRule END END").unwrap_err();
        assert_eq!(e.kind, CodecErrorKind::Trailing);
    }
}
