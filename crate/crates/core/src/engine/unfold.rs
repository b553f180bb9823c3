use std::collections::BTreeSet;

use super::tree::Rule;
use super::EngineError;
use crate::ast::{
    substitute, ArithAtom, ArithExpr, Atom, Equation, IntVar, NormalizedFormula, StrVar,
    SubtermConstraint, Term,
};

/// One child produced by a single unfolding step.
#[derive(Clone, Debug)]
pub struct Child {
    pub rule: Rule,
    pub formula: NormalizedFormula,
    /// Renaming applied to `Λ` by this step, if any.
    pub rename: Option<(StrVar, StrVar)>,
}

impl Child {
    fn new(rule: Rule, formula: NormalizedFormula) -> Self {
        Child { rule, formula, rename: None }
    }
}

/// Apply exactly one rule to the first equation. An empty result means the
/// formula is unsatisfiable by a constant clash.
pub fn unfold(f: &NormalizedFormula) -> Result<Vec<Child>, EngineError> {
    let Some(eq) = f.equations.first() else {
        return Err(EngineError::Internal("unfold called without equations".into()));
    };
    for a in eq.lhs.atoms().iter().chain(eq.rhs.atoms()) {
        if let Atom::Var(v) = a {
            return Err(EngineError::Internal(format!("bare variable {v} in equation")));
        }
    }
    let (l, r) = (eq.lhs.atoms(), eq.rhs.atoms());
    match (l.first(), r.first()) {
        (None, None) => {
            let mut g = f.clone();
            g.equations.remove(0);
            Ok(vec![Child::new(Rule::DropEquation, g)])
        }
        (None, Some(_)) => Ok(force_empty(f, &eq.rhs).into_iter().collect()),
        (Some(_), None) => Ok(force_empty(f, &eq.lhs).into_iter().collect()),
        (Some(Atom::Char(a)), Some(Atom::Char(b))) => {
            if a != b {
                return Ok(vec![]);
            }
            let mut g = f.clone();
            consume_heads(&mut g);
            Ok(vec![Child::new(Rule::ConstSucc, g)])
        }
        (Some(Atom::Char(c)), Some(Atom::Str(u, n))) | (Some(Atom::Str(u, n)), Some(Atom::Char(c))) => {
            Ok(small(f, *c, u, n))
        }
        (Some(Atom::Str(u1, n1)), Some(Atom::Str(u2, n2))) => Ok(big(f, (u1, n1), (u2, n2))),
        _ => unreachable!("bare variables rejected above"),
    }
}

fn consume_heads(g: &mut NormalizedFormula) {
    let e = &mut g.equations[0];
    e.lhs.0.remove(0);
    e.rhs.0.remove(0);
}

fn str_term(u: &StrVar, n: &IntVar) -> Term {
    Term::atom(Atom::Str(u.clone(), n.clone()))
}

fn var(n: &IntVar) -> ArithExpr {
    ArithExpr::IntVar(n.clone())
}

/// The base branch of a predicate: `u = ε`, `n = 0`.
fn to_empty(f: &NormalizedFormula, u: &StrVar, n: &IntVar) -> NormalizedFormula {
    let mut g = substitute(f, &Atom::Str(u.clone(), n.clone()), &Term::epsilon(), None);
    g.arith.push(ArithAtom::eq(var(n), ArithExpr::int(0)));
    g.subterms.push(SubtermConstraint::EpsBind(u.clone()));
    g.len_of.remove(u);
    g
}

/// One side is empty. A non-empty ground other side is a clash; otherwise
/// every predicate on the other side must be empty.
fn force_empty(f: &NormalizedFormula, other: &Term) -> Option<Child> {
    if other.atoms().iter().all(|a| matches!(a, Atom::Char(_))) {
        return None;
    }
    let mut seen = BTreeSet::new();
    let mut g = f.clone();
    for a in other.atoms() {
        if let Atom::Str(u, n) = a {
            if seen.insert(u.clone()) {
                g = to_empty(&g, u, n);
            }
        }
    }
    Some(Child::new(Rule::ForceEmpty, g))
}

/// Character head against predicate head.
fn small(f: &NormalizedFormula, c: char, u: &StrVar, n: &IntVar) -> Vec<Child> {
    let base = to_empty(f, u, n);

    let mut g = f.clone();
    let n1 = g.fresh_int("n");
    let u1 = g.fresh_str("u");
    let repl = Term::atom(Atom::Char(c)).concat(str_term(u, &n1));
    let mut g = substitute(&g, &Atom::Str(u.clone(), n.clone()), &repl, Some((u, &u1)));
    g.subterms.push(SubtermConstraint::CharPrefix { outer: u1.clone(), head: c, tail: u.clone() });
    g.arith.push(ArithAtom::eq(var(&n1), ArithExpr::sub(var(n), ArithExpr::int(1))));
    g.arith.push(ArithAtom::geq(var(n), ArithExpr::int(1)));
    g.arith.push(ArithAtom::geq(var(&n1), ArithExpr::int(0)));
    g.len_of.insert(u.clone(), n1);
    consume_heads(&mut g);

    vec![
        Child::new(Rule::SmallBase, base),
        Child { rule: Rule::SmallInductive, formula: g, rename: Some((u.clone(), u1)) },
    ]
}

/// Predicate head against predicate head: either one is empty, or both are
/// non-empty and they are identified or one is split.
fn big(f: &NormalizedFormula, (u1, n1): (&StrVar, &IntVar), (u2, n2): (&StrVar, &IntVar)) -> Vec<Child> {
    if u1 == u2 {
        let mut g = f.clone();
        consume_heads(&mut g);
        return vec![Child::new(Rule::BigIdentify, g)];
    }

    let empty = f;
    let mut f = f.clone();
    f.arith.push(ArithAtom::geq(var(n1), ArithExpr::int(1)));
    f.arith.push(ArithAtom::geq(var(n2), ArithExpr::int(1)));
    let f = &f;
    let mut id = substitute(f, &Atom::Str(u2.clone(), n2.clone()), &str_term(u1, n1), None);
    id.arith.push(ArithAtom::eq(var(n1), var(n2)));
    id.subterms.push(SubtermConstraint::Alias { lhs: u2.clone(), rhs: u1.clone() });
    id.len_of.remove(u2);
    consume_heads(&mut id);

    vec![
        Child::new(Rule::BigEmpty, to_empty(empty, u1, n1)),
        Child::new(Rule::BigEmpty, to_empty(empty, u2, n2)),
        Child::new(Rule::BigIdentify, id),
        split(f, Rule::BigSplitLeft, (u1, n1), (u2, n2)),
        split(f, Rule::BigSplitRight, (u2, n2), (u1, n1)),
    ]
}

/// `STR(long)` becomes `STR(short)·STR(long, rest)` with a non-empty prefix.
fn split(f: &NormalizedFormula, rule: Rule, (ul, nl): (&StrVar, &IntVar), (us, ns): (&StrVar, &IntVar)) -> Child {
    let mut g = f.clone();
    let u3 = g.fresh_str("u");
    let n3 = g.fresh_int("n");
    let repl = str_term(us, ns).concat(str_term(ul, &n3));
    let mut g = substitute(&g, &Atom::Str(ul.clone(), nl.clone()), &repl, Some((ul, &u3)));
    g.subterms.push(SubtermConstraint::Split { outer: u3.clone(), prefix: us.clone(), suffix: ul.clone() });
    g.arith.push(ArithAtom::eq(var(&n3), ArithExpr::sub(var(nl), var(ns))));
    g.arith.push(ArithAtom::geq(var(&n3), ArithExpr::int(0)));
    g.len_of.insert(ul.clone(), n3);
    consume_heads(&mut g);
    Child { rule, formula: g, rename: Some((ul.clone(), u3)) }
}

/// Number of occurrences of `u` across all equations.
pub fn occurrences(eqs: &[Equation], u: &StrVar) -> usize {
    eqs.iter().map(|e| e.occurrences(u)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::equation_size;

    fn s(u: &str, n: &str) -> Atom {
        Atom::Str(StrVar::new(u), IntVar::new(n))
    }

    fn formula(eqs: Vec<Equation>) -> NormalizedFormula {
        NormalizedFormula { equations: eqs, ..Default::default() }
    }

    #[test]
    fn const_rules() {
        let f = formula(vec![Equation::new(Term::word("ab"), Term::word("ac"))]);
        let ch = unfold(&f).unwrap();
        assert_eq!(ch.len(), 1);
        assert_eq!(ch[0].rule, Rule::ConstSucc);
        assert!(unfold(&ch[0].formula).unwrap().is_empty());
    }

    #[test]
    fn small_step_shape() {
        let u = Term::atom(s("u", "n"));
        let f = formula(vec![Equation::new(Term::word("ab").concat(u.clone()), u.concat(Term::word("ba")))]);
        let ch = unfold(&f).unwrap();
        assert_eq!(ch.iter().map(|c| c.rule).collect::<Vec<_>>(), vec![Rule::SmallBase, Rule::SmallInductive]);
        assert_eq!(ch[0].formula.equations[0], Equation::new(Term::word("ab"), Term::word("ba")));
        let step = &ch[1].formula;
        let n1 = IntVar::new("n!1");
        let tail = Term::atom(Atom::Str(StrVar::new("u"), n1.clone()));
        assert_eq!(step.equations[0], Equation::new(Term::word("ba").concat(tail.clone()), tail.concat(Term::word("ba"))));
        assert_eq!(step.len_of[&StrVar::new("u")], n1);
        assert_eq!(equation_size(&step.equations[0]), equation_size(&f.equations[0]));
    }

    #[test]
    fn big_cases() {
        let f = formula(vec![Equation::new(
            Term::atom(s("x", "n")).concat(Term::word("a")),
            Term::atom(s("y", "m")).concat(Term::word("a")),
        )]);
        let ch = unfold(&f).unwrap();
        let rules: Vec<_> = ch.iter().map(|c| c.rule).collect();
        assert_eq!(
            rules,
            vec![Rule::BigEmpty, Rule::BigEmpty, Rule::BigIdentify, Rule::BigSplitLeft, Rule::BigSplitRight]
        );
        assert_eq!(
            ch[0].formula.equations[0],
            Equation::new(Term::word("a"), Term::atom(s("y", "m")).concat(Term::word("a")))
        );
        assert_eq!(ch[2].formula.equations[0], Equation::new(Term::word("a"), Term::word("a")));
        let left = &ch[3].formula.equations[0];
        assert_eq!(left.lhs.len(), 2);
        assert_eq!(left.rhs, Term::word("a"));

        let same = formula(vec![Equation::new(Term::atom(s("x", "n")), Term::atom(s("x", "n")))]);
        let ch = unfold(&same).unwrap();
        assert_eq!(ch.len(), 1);
        assert_eq!(ch[0].rule, Rule::BigIdentify);
    }

    #[test]
    fn empty_side() {
        let f = formula(vec![Equation::new(Term::epsilon(), Term::word("a"))]);
        assert!(unfold(&f).unwrap().is_empty());
        let f = formula(vec![Equation::new(Term::atom(s("x", "n")).concat(Term::atom(s("y", "m"))), Term::epsilon())]);
        let ch = unfold(&f).unwrap();
        assert_eq!(ch[0].rule, Rule::ForceEmpty);
        assert!(ch[0].formula.equations[0].lhs.is_empty());
        let f = formula(vec![Equation::new(Term::epsilon(), Term::epsilon())]);
        let ch = unfold(&f).unwrap();
        assert_eq!(ch[0].rule, Rule::DropEquation);
        assert!(ch[0].formula.equations.is_empty());
    }

    #[test]
    fn bare_variable_is_internal_error() {
        let f = formula(vec![Equation::new(Term::var("s"), Term::word("a"))]);
        assert!(matches!(unfold(&f), Err(EngineError::Internal(_))));
    }
}
