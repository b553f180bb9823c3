use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::EngineError;
use crate::ast::{
    Alphabet, ArithAtom, ArithExpr, Atom, Equation, IntVar, Lang, Membership, NormalizedFormula,
    StrVar, SubtermConstraint, Term,
};
use crate::frontend::Conjunct;
use crate::regex::compile;

/// Name of the predicate variable paired with problem variable `s`.
pub fn pred_var(s: &StrVar) -> StrVar {
    StrVar(format!("u!{s}"))
}

/// Name of the length variable paired with problem variable `s`.
pub fn len_var(s: &StrVar) -> IntVar {
    IntVar(format!("n!{s}"))
}

/// Pair every string variable `s` with a fresh `STR(u, n)`, record `s = u`,
/// assert `n ≥ 0`, and replace `|s|` by `n`.
pub fn init_1sea(c: &Conjunct, sigma: &Alphabet) -> Result<NormalizedFormula, EngineError> {
    let mut vars: BTreeSet<StrVar> = BTreeSet::new();
    for e in &c.equations {
        vars.extend(e.str_vars().cloned());
    }
    for (t, _) in &c.memberships {
        vars.extend(t.str_vars().cloned());
    }
    for a in &c.arith {
        a.len_vars(&mut vars);
    }

    let mut f = NormalizedFormula::default();
    let mut pair: BTreeMap<StrVar, (StrVar, IntVar)> = BTreeMap::new();
    for s in &vars {
        let (u, n) = (pred_var(s), len_var(s));
        f.subterms.push(SubtermConstraint::Alias { lhs: s.clone(), rhs: u.clone() });
        f.arith.push(ArithAtom::geq(ArithExpr::IntVar(n.clone()), ArithExpr::int(0)));
        f.len_of.insert(u.clone(), n.clone());
        pair.insert(s.clone(), (u, n));
    }
    let pair_term = |t: &Term| {
        Term(
            t.atoms()
                .iter()
                .map(|a| match a {
                    Atom::Var(v) => {
                        let (u, n) = &pair[v];
                        Atom::Str(u.clone(), n.clone())
                    }
                    other => other.clone(),
                })
                .collect(),
        )
    };
    f.equations = c.equations.iter().map(|e| Equation::new(pair_term(&e.lhs), pair_term(&e.rhs))).collect();
    for (t, r) in &c.memberships {
        let dfa = compile(r, sigma).map_err(|e| EngineError::Internal(e.to_string()))?;
        let lang = Lang { dfa: Arc::new(dfa), label: r.to_string() };
        f.memberships.push(Membership { term: pair_term(t), lang }.absorb_prefix());
    }
    for a in &c.arith {
        f.arith.push(a.map(&|e| match e {
            ArithExpr::LenOf(s) => Some(ArithExpr::IntVar(pair[s].1.clone())),
            _ => None,
        }));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_problem;

    #[test]
    fn flagship_initialization() {
        let p = parse_problem(
            r#"(declare-str s)
               (assert (= (str.++ "ab" s) (str.++ s "ba")))
               (assert (str.in_re s (re.++ (re.* (str.to_re "ab")) (str.to_re "a"))))
               (assert (= (mod (str.len s) 2) 0))"#,
        )
        .unwrap();
        let c = &p.disjuncts(4).unwrap()[0];
        let f = init_1sea(c, &p.alphabet()).unwrap();
        let s = StrVar::new("s");
        let u = Atom::Str(pred_var(&s), len_var(&s));
        assert_eq!(
            f.equations,
            vec![Equation::new(
                Term::word("ab").concat(Term::atom(u.clone())),
                Term::atom(u.clone()).concat(Term::word("ba"))
            )]
        );
        assert_eq!(f.subterms, vec![SubtermConstraint::Alias { lhs: s.clone(), rhs: pred_var(&s) }]);
        let n = ArithExpr::IntVar(len_var(&s));
        assert!(f.arith.contains(&ArithAtom::geq(n.clone(), ArithExpr::int(0))));
        assert!(f.arith.contains(&ArithAtom::eq(ArithExpr::modulo(n, ArithExpr::int(2)), ArithExpr::int(0))));
        assert_eq!(f.memberships[0].term, Term::atom(u));
    }

    #[test]
    fn variable_free_formula_unchanged() {
        let p = parse_problem(r#"(assert (= "ab" "ab"))"#).unwrap();
        let c = &p.disjuncts(4).unwrap()[0];
        let f = init_1sea(c, &p.alphabet()).unwrap();
        assert_eq!(f.equations, c.equations);
        assert!(f.subterms.is_empty() && f.arith.is_empty());
    }

    #[test]
    fn lengths_become_length_variables() {
        let p = parse_problem("(declare-str s t)(assert (<= (+ (str.len s) (str.len t)) 4))").unwrap();
        let c = &p.disjuncts(4).unwrap()[0];
        let f = init_1sea(c, &p.alphabet()).unwrap();
        let (s, t) = (StrVar::new("s"), StrVar::new("t"));
        let expected = ArithAtom::leq(
            ArithExpr::add(ArithExpr::IntVar(len_var(&s)), ArithExpr::IntVar(len_var(&t))),
            ArithExpr::int(4),
        );
        assert_eq!(f.arith.last(), Some(&expected));
    }
}
