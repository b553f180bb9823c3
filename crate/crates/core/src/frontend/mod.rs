//! Problem files: an S-expression format in the style of SMT-LIB, the
//! parsed problem representation, and verdict printing.

mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::ast::{Alphabet, ArithAtom, Equation, IntVar, Regex, StrVar, Term};

pub use parse::parse_problem;
pub use print::{print_problem, render_answer};

/// Source position, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unknown identifier `{name}`")]
    UnknownIdentifier { pos: Pos, name: String },
    #[error("{pos}: unsupported construct: {msg}")]
    UnsupportedConstruct { pos: Pos, msg: String },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownIdentifier { pos, .. }
            | ParseError::UnsupportedConstruct { pos, .. } => *pos,
        }
    }
}

/// Formula over the surface grammar. Negation has already been pushed into
/// arithmetic atoms and regex complements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    True,
    Equation(Equation),
    Member(Term, Regex),
    Arith(ArithAtom),
    And(Vec<Formula>),
    /// `Or(vec![])` is false.
    Or(Vec<Formula>),
}

/// One disjunct of the problem in conjunctive form.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Conjunct {
    pub equations: Vec<Equation>,
    pub memberships: Vec<(Term, Regex)>,
    pub arith: Vec<ArithAtom>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Problem {
    pub str_vars: Vec<StrVar>,
    pub int_vars: Vec<IntVar>,
    /// Characters declared in addition to those occurring in the problem.
    pub extra_alphabet: BTreeSet<char>,
    pub assertions: Vec<Formula>,
}

impl Problem {
    /// Conjunction of all assertions.
    pub fn formula(&self) -> Formula {
        Formula::And(self.assertions.clone())
    }

    /// Characters occurring anywhere in the problem plus declared extras.
    pub fn alphabet(&self) -> Alphabet {
        let mut cs = self.extra_alphabet.clone();
        fn walk(f: &Formula, cs: &mut BTreeSet<char>) {
            match f {
                Formula::True | Formula::Arith(_) => {}
                Formula::Equation(e) => cs.extend(e.lhs.chars().chain(e.rhs.chars())),
                Formula::Member(t, r) => {
                    cs.extend(t.chars());
                    r.chars(cs);
                }
                Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| walk(g, cs)),
            }
        }
        for a in &self.assertions {
            walk(a, &mut cs);
        }
        Alphabet::new(cs)
    }

    /// Disjunctive normal form, at most `limit` disjuncts.
    pub fn disjuncts(&self, limit: usize) -> Option<Vec<Conjunct>> {
        dnf(&self.formula(), limit)
    }
}

fn dnf(f: &Formula, limit: usize) -> Option<Vec<Conjunct>> {
    Some(match f {
        Formula::True => vec![Conjunct::default()],
        Formula::Equation(e) => vec![Conjunct { equations: vec![e.clone()], ..Default::default() }],
        Formula::Member(t, r) => {
            vec![Conjunct { memberships: vec![(t.clone(), r.clone())], ..Default::default() }]
        }
        Formula::Arith(a) => vec![Conjunct { arith: vec![a.clone()], ..Default::default() }],
        Formula::Or(fs) => {
            let mut out = Vec::new();
            for g in fs {
                out.extend(dnf(g, limit)?);
                if out.len() > limit {
                    return None;
                }
            }
            out
        }
        Formula::And(fs) => {
            let mut acc = vec![Conjunct::default()];
            for g in fs {
                let parts = dnf(g, limit)?;
                if acc.len() * parts.len() > limit {
                    return None;
                }
                let mut next = Vec::new();
                for a in &acc {
                    for p in &parts {
                        let mut c = a.clone();
                        c.equations.extend(p.equations.iter().cloned());
                        c.memberships.extend(p.memberships.iter().cloned());
                        c.arith.extend(p.arith.iter().cloned());
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flagship_problem_parses() {
        let text = r#"
            (declare-str s)
            (assert (= (str.++ "ab" s) (str.++ s "ba")))
            (assert (str.in_re s (re.++ (re.* (str.to_re "ab")) (str.to_re "a"))))
            (assert (= (mod (str.len s) 2) 0))
        "#;
        let p = parse_problem(text).unwrap();
        let ds = p.disjuncts(16).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].equations.len(), 1);
        assert_eq!(ds[0].memberships.len(), 1);
        assert_eq!(ds[0].arith.len(), 1);
        assert_eq!(p.alphabet().chars(), &['a', 'b']);
    }

    #[test]
    fn empty_problem_is_true() {
        let p = parse_problem("").unwrap();
        assert_eq!(p.disjuncts(16).unwrap(), vec![Conjunct::default()]);
    }

    #[test]
    fn string_distinct_is_rejected() {
        let err = parse_problem("(declare-str s t)\n(assert (distinct s t))").unwrap_err();
        assert!(matches!(err, ParseError::UnsupportedConstruct { .. }));
        assert_eq!(err.pos().line, 2);
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_problem("(declare-str s)\n(assert (= s t))").unwrap_err();
        assert_eq!(err, ParseError::UnknownIdentifier { pos: Pos { line: 2, col: 14 }, name: "t".into() });
        let err = parse_problem("(assert (= 1 2)").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn disjunction_and_negation() {
        let text = "(declare-int x)(assert (or (= x 1) (not (<= x 5))))";
        let p = parse_problem(text).unwrap();
        assert_eq!(p.disjuncts(16).unwrap().len(), 2);
        let text = "(declare-int x)(assert (not (= x 1)))";
        assert_eq!(parse_problem(text).unwrap().disjuncts(16).unwrap().len(), 2);
    }

    #[test]
    fn round_trip() {
        let text = r#"
            (declare-str s t)
            (declare-int k)
            (declare-alphabet "c")
            (assert (= (str.++ "ab" s) (str.++ t "ba" s)))
            (assert (str.in_re t (re.union (re.* (str.to_re "ab")) (re.comp (re.inter re.none (str.to_re ""))))))
            (assert (or (<= (+ (str.len s) (* 2 k)) (- 4)) (= (max k (min k 3)) (mod k 5))))
            (assert (not (= k -7)))
        "#;
        let p = parse_problem(text).unwrap();
        let printed = print_problem(&p);
        assert_eq!(parse_problem(&printed).unwrap(), p, "{printed}");
    }
}
