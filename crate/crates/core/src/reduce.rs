//! Encoding a system of word equations as one equation with the same
//! unknowns, using two distinct separator characters.

use thiserror::Error;

use crate::ast::{Alphabet, Atom, Equation, Term};
use crate::frontend::{Formula, Problem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReduceError {
    #[error("separator characters must differ, got `{0}` twice")]
    EqualSeparators(char),
    #[error("alphabet needs at least two characters to encode a system")]
    AlphabetTooSmall,
    #[error("--reduce-to-single needs a conjunction of assertions")]
    NotConjunctive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquationSystem {
    pub equations: Vec<Equation>,
    pub alphabet: Alphabet,
}

/// `X1=Y1`, `X2=Y2` to `X1·c1·X2·X1·c2·X2 = Y1·c1·Y2·Y1·c2·Y2`.
pub fn pair_encode(e1: &Equation, e2: &Equation, c1: char, c2: char) -> Result<Equation, ReduceError> {
    if c1 == c2 {
        return Err(ReduceError::EqualSeparators(c1));
    }
    let side = |x1: &Term, x2: &Term| {
        let sep = |c| Term::atom(Atom::Char(c));
        x1.clone()
            .concat(sep(c1))
            .concat(x2.clone())
            .concat(x1.clone())
            .concat(sep(c2))
            .concat(x2.clone())
    };
    Ok(Equation::new(side(&e1.lhs, &e2.lhs), side(&e1.rhs, &e2.rhs)))
}

/// Left fold of [`pair_encode`] with the two smallest characters of Σ.
/// An empty system becomes `ε = ε`.
pub fn reduce_system(sys: &EquationSystem) -> Result<Equation, ReduceError> {
    let cs = sys.alphabet.chars();
    if cs.len() < 2 {
        return Err(ReduceError::AlphabetTooSmall);
    }
    let (c1, c2) = (cs[0], cs[1]);
    let mut it = sys.equations.iter();
    let Some(first) = it.next() else {
        return Ok(Equation::new(Term::epsilon(), Term::epsilon()));
    };
    it.try_fold(first.clone(), |acc, e| pair_encode(&acc, e, c1, c2))
}

/// Replace all top-level equations of a conjunctive problem by one.
pub fn reduce_problem(p: &Problem) -> Result<Problem, ReduceError> {
    fn flatten(f: &Formula, eqs: &mut Vec<Equation>, rest: &mut Vec<Formula>) -> Result<(), ReduceError> {
        match f {
            Formula::And(fs) => fs.iter().try_for_each(|g| flatten(g, eqs, rest)),
            Formula::Equation(e) => {
                eqs.push(e.clone());
                Ok(())
            }
            Formula::Or(_) => Err(ReduceError::NotConjunctive),
            other => {
                rest.push(other.clone());
                Ok(())
            }
        }
    }
    let mut eqs = Vec::new();
    let mut rest = Vec::new();
    for a in &p.assertions {
        flatten(a, &mut eqs, &mut rest)?;
    }
    if eqs.len() < 2 {
        return Ok(p.clone());
    }
    let single = reduce_system(&EquationSystem { equations: eqs, alphabet: p.alphabet() })?;
    let mut out = p.clone();
    out.assertions = std::iter::once(Formula::Equation(single)).chain(rest).collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::equation_size;

    fn eq(l: Term, r: Term) -> Equation {
        Equation::new(l, r)
    }

    #[test]
    fn pair_shape() {
        let e1 = eq(Term::var("s"), Term::var("t"));
        let e2 = eq(Term::var("u"), Term::var("v"));
        let got = pair_encode(&e1, &e2, 'a', 'b').unwrap();
        assert_eq!(got.to_string(), "s·a·u·s·b·u = t·a·v·t·b·v");
        assert_eq!(equation_size(&got), 2 * (equation_size(&e1) + equation_size(&e2)) + 4);
    }

    #[test]
    fn degenerate_pair() {
        let e = eq(Term::epsilon(), Term::epsilon());
        assert_eq!(pair_encode(&e, &e, 'a', 'b').unwrap(), eq(Term::word("ab"), Term::word("ab")));
        assert_eq!(pair_encode(&e, &e, 'a', 'a'), Err(ReduceError::EqualSeparators('a')));
    }

    #[test]
    fn fold_and_alphabet() {
        let e1 = eq(Term::var("x"), Term::word("a"));
        let sys = EquationSystem { equations: vec![e1.clone()], alphabet: Alphabet::new(['a', 'b']) };
        assert_eq!(reduce_system(&sys).unwrap(), e1);
        let small = EquationSystem { equations: vec![e1], alphabet: Alphabet::new(['a']) };
        assert_eq!(reduce_system(&small), Err(ReduceError::AlphabetTooSmall));
    }
}
