//! Reference semantics and bounded exhaustive search. Nothing here shares
//! code with the solver's automata or arithmetic: regexes are matched by a
//! memoized backtracking matcher over the syntax tree, arithmetic is
//! evaluated directly.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::ast::{
    Alphabet, ArithAtom, ArithExpr, ArithKind, Atom, Equation, IntVar, Model, NormalizedFormula,
    Regex, StrVar, Term,
};
use crate::frontend::{Formula, Problem};
use crate::Int;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("variable `{0}` has no value in the model")]
    UnassignedVariable(String),
}

/// Search bound: maximum word length and maximum integer magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bound {
    pub max_len: usize,
    pub max_int: Int,
}

impl Bound {
    pub fn new(b: usize) -> Self {
        Bound { max_len: b, max_int: b as Int }
    }
}

/// Whole-word regex matching relative to alphabet `sigma`.
pub fn regex_matches(r: &Regex, w: &[char], sigma: &Alphabet) -> bool {
    let mut memo = HashMap::new();
    Matcher { w, sigma, memo: &mut memo }.go(r, 0, w.len())
}

struct Matcher<'a> {
    w: &'a [char],
    sigma: &'a Alphabet,
    memo: &'a mut HashMap<(usize, usize, usize), bool>,
}

impl Matcher<'_> {
    fn go(&mut self, r: &Regex, i: usize, j: usize) -> bool {
        let key = (r as *const Regex as usize, i, j);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let seg = &self.w[i..j];
        let v = match r {
            Regex::Empty => false,
            Regex::Eps => seg.is_empty(),
            Regex::Lit(c) => seg == [*c],
            Regex::Word(cs) => seg == cs.as_slice(),
            Regex::Cat(a, b) => (i..=j).any(|k| self.go(a, i, k) && self.go(b, k, j)),
            Regex::Union(a, b) => self.go(a, i, j) || self.go(b, i, j),
            Regex::Inter(a, b) => self.go(a, i, j) && self.go(b, i, j),
            Regex::Complement(a) => {
                seg.iter().all(|c| self.sigma.contains(*c)) && !self.go(a, i, j)
            }
            Regex::Star(a) => i == j || (i + 1..=j).any(|k| self.go(a, i, k) && self.go(r, k, j)),
        };
        self.memo.insert(key, v);
        v
    }
}

fn eval_int(e: &ArithExpr, m: &Model) -> Result<Option<Int>, OracleError> {
    Ok(match e {
        ArithExpr::IntConst(k) => Some(*k),
        ArithExpr::IntVar(v) => Some(
            *m.ints.get(v).ok_or_else(|| OracleError::UnassignedVariable(v.name().to_string()))?,
        ),
        ArithExpr::LenOf(s) => Some(
            m.strings
                .get(s)
                .ok_or_else(|| OracleError::UnassignedVariable(s.name().to_string()))?
                .chars()
                .count() as Int,
        ),
        ArithExpr::Scale(k, a) => eval_int(a, m)?.and_then(|x| x.checked_mul(*k)),
        ArithExpr::Neg(a) => eval_int(a, m)?.and_then(|x| x.checked_neg()),
        ArithExpr::Add(a, b) => match (eval_int(a, m)?, eval_int(b, m)?) {
            (Some(x), Some(y)) => x.checked_add(y),
            _ => None,
        },
        ArithExpr::Max(a, b) => match (eval_int(a, m)?, eval_int(b, m)?) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        },
        ArithExpr::Min(a, b) => match (eval_int(a, m)?, eval_int(b, m)?) {
            (Some(x), Some(y)) => Some(x.min(y)),
            _ => None,
        },
        ArithExpr::Mod(a, b) => match (eval_int(a, m)?, eval_int(b, m)?) {
            (Some(x), Some(d)) if d > 0 => Some(x.rem_euclid(d)),
            _ => None,
        },
    })
}

/// Arithmetic atoms with an undefined operand (overflow, non-positive
/// divisor) are false.
fn eval_arith(a: &ArithAtom, m: &Model) -> Result<bool, OracleError> {
    let (Some(l), Some(r)) = (eval_int(&a.lhs, m)?, eval_int(&a.rhs, m)?) else {
        return Ok(false);
    };
    Ok(match a.kind {
        ArithKind::Eq => l == r,
        ArithKind::Leq => l <= r,
    })
}

/// Value of a term; `None` when an `STR(u,n)` instance has `|u| ≠ n`.
fn eval_term(t: &Term, m: &Model) -> Result<Option<String>, OracleError> {
    let mut out = String::new();
    for a in t.atoms() {
        match a {
            Atom::Char(c) => out.push(*c),
            Atom::Var(v) | Atom::Str(v, _) => {
                let w = m
                    .strings
                    .get(v)
                    .ok_or_else(|| OracleError::UnassignedVariable(v.name().to_string()))?;
                if let Atom::Str(_, n) = a {
                    let k = *m
                        .ints
                        .get(n)
                        .ok_or_else(|| OracleError::UnassignedVariable(n.name().to_string()))?;
                    if w.chars().count() as Int != k {
                        return Ok(None);
                    }
                }
                out.push_str(w);
            }
        }
    }
    Ok(Some(out))
}

fn eval_equation(e: &Equation, m: &Model) -> Result<bool, OracleError> {
    Ok(match (eval_term(&e.lhs, m)?, eval_term(&e.rhs, m)?) {
        (Some(l), Some(r)) => l == r,
        _ => false,
    })
}

pub fn eval_formula(f: &Formula, sigma: &Alphabet, m: &Model) -> Result<bool, OracleError> {
    Ok(match f {
        Formula::True => true,
        Formula::Equation(e) => eval_equation(e, m)?,
        Formula::Member(t, r) => match eval_term(t, m)? {
            Some(w) => regex_matches(r, &w.chars().collect::<Vec<_>>(), sigma),
            None => false,
        },
        Formula::Arith(a) => eval_arith(a, m)?,
        Formula::And(fs) => {
            for g in fs {
                if !eval_formula(g, sigma, m)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(fs) => {
            for g in fs {
                if eval_formula(g, sigma, m)? {
                    return Ok(true);
                }
            }
            false
        }
    })
}

/// Does `m` satisfy every assertion of `p`?
pub fn eval_problem(p: &Problem, m: &Model) -> Result<bool, OracleError> {
    eval_formula(&p.formula(), &p.alphabet(), m)
}

/// Evaluate `Es ∧ Υ ∧ I` of a normalized formula. `Λ` only records how
/// variables were decomposed and is not part of the check.
pub fn eval_normalized(f: &NormalizedFormula, m: &Model) -> Result<bool, OracleError> {
    for e in &f.equations {
        if !eval_equation(e, m)? {
            return Ok(false);
        }
    }
    for mem in &f.memberships {
        match eval_term(&mem.term, m)? {
            Some(w) if mem.lang.dfa.accepts(&w) => {}
            _ => return Ok(false),
        }
    }
    for a in &f.arith {
        if !eval_arith(a, m)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Conjunctive facts usable to prune the search, plus the full check.
struct Query<'a> {
    str_vars: Vec<StrVar>,
    int_vars: Vec<IntVar>,
    sigma: Vec<char>,
    equations: Vec<&'a Equation>,
    /// Terms whose `STR(u, n)` instances fix `n` to `|u|`.
    terms: Vec<&'a Term>,
    arith: Vec<&'a ArithAtom>,
    check: Box<dyn Fn(&Model) -> bool + 'a>,
}

fn top_level<'a>(f: &'a Formula, eqs: &mut Vec<&'a Equation>, arith: &mut Vec<&'a ArithAtom>) {
    match f {
        Formula::Equation(e) => eqs.push(e),
        Formula::Arith(a) => arith.push(a),
        Formula::And(fs) => fs.iter().for_each(|g| top_level(g, eqs, arith)),
        _ => {}
    }
}

fn formula_vars(f: &Formula, ss: &mut BTreeSet<StrVar>, is: &mut BTreeSet<IntVar>) {
    let term = |t: &Term, ss: &mut BTreeSet<StrVar>, is: &mut BTreeSet<IntVar>| {
        for a in t.atoms() {
            match a {
                Atom::Char(_) => {}
                Atom::Var(v) => {
                    ss.insert(v.clone());
                }
                Atom::Str(v, n) => {
                    ss.insert(v.clone());
                    is.insert(n.clone());
                }
            }
        }
    };
    match f {
        Formula::True => {}
        Formula::Equation(e) => {
            term(&e.lhs, ss, is);
            term(&e.rhs, ss, is);
        }
        Formula::Member(t, _) => term(t, ss, is),
        Formula::Arith(a) => {
            a.int_vars(is);
            a.len_vars(ss);
        }
        Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| formula_vars(g, ss, is)),
    }
}

/// First model of `p` in enumeration order (total length, then length
/// vector, then words lexicographically, then integers ascending), or
/// `None` if there is none within the bound.
pub fn brute_force_solve(p: &Problem, b: Bound) -> Option<Model> {
    let f = p.formula();
    let sigma = p.alphabet();
    let mut ss = BTreeSet::new();
    let mut is = BTreeSet::new();
    formula_vars(&f, &mut ss, &mut is);
    let mut equations = Vec::new();
    let mut arith = Vec::new();
    top_level(&f, &mut equations, &mut arith);
    let q = Query {
        str_vars: p.str_vars.iter().filter(|v| ss.contains(*v)).cloned().collect(),
        int_vars: p.int_vars.iter().filter(|v| is.contains(*v)).cloned().collect(),
        sigma: sigma.chars().to_vec(),
        equations,
        terms: Vec::new(),
        arith,
        check: Box::new(|m| eval_formula(&f, &sigma, m).unwrap_or(false)),
    };
    let mut m = search(&q, b)?;
    for v in &p.str_vars {
        m.strings.entry(v.clone()).or_default();
    }
    for v in &p.int_vars {
        m.ints.entry(v.clone()).or_insert(0);
    }
    Some(m)
}

/// Bounded search for a model of `Es ∧ Υ ∧ I`.
pub fn brute_force_normalized(f: &NormalizedFormula, sigma: &Alphabet, b: Bound) -> Option<Model> {
    let mut ss = BTreeSet::new();
    let mut is = BTreeSet::new();
    for t in f.terms() {
        let g = Formula::Member(t.clone(), Regex::Empty);
        formula_vars(&g, &mut ss, &mut is);
    }
    for a in &f.arith {
        a.int_vars(&mut is);
        a.len_vars(&mut ss);
    }
    let q = Query {
        str_vars: ss.into_iter().collect(),
        int_vars: is.into_iter().collect(),
        sigma: sigma.chars().to_vec(),
        equations: f.equations.iter().collect(),
        terms: f.terms().collect(),
        arith: f.arith.iter().collect(),
        check: Box::new(|m| eval_normalized(f, m).unwrap_or(false)),
    };
    search(&q, b)
}

fn search(q: &Query<'_>, b: Bound) -> Option<Model> {
    let k = q.str_vars.len();
    let index: BTreeMap<&StrVar, usize> = q.str_vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    // integer variables tied to a string length through STR(u, n)
    let mut len_links: Vec<(IntVar, usize)> = Vec::new();
    for t in &q.terms {
        for a in t.atoms() {
            if let Atom::Str(u, n) = a {
                if let Some(&i) = index.get(u) {
                    len_links.push((n.clone(), i));
                }
            }
        }
    }
    for total in 0..=k * b.max_len {
        let mut lens = vec![0usize; k];
        if let Some(m) = length_vectors(q, b, total, 0, &mut lens, &index, &len_links) {
            return Some(m);
        }
    }
    None
}

/// Length vectors with the given total, in lexicographic order.
fn length_vectors(
    q: &Query<'_>,
    b: Bound,
    remaining: usize,
    at: usize,
    lens: &mut Vec<usize>,
    index: &BTreeMap<&StrVar, usize>,
    links: &[(IntVar, usize)],
) -> Option<Model> {
    if at == lens.len() {
        if remaining != 0 {
            return None;
        }
        return words_for(q, b, lens, index, links);
    }
    if at + 1 == lens.len() {
        if remaining > b.max_len {
            return None;
        }
        lens[at] = remaining;
        return length_vectors(q, b, 0, at + 1, lens, index, links);
    }
    for l in 0..=remaining.min(b.max_len) {
        lens[at] = l;
        if let Some(m) = length_vectors(q, b, remaining - l, at + 1, lens, index, links) {
            return Some(m);
        }
    }
    None
}

#[derive(Clone, Copy)]
enum Cell {
    Pos(usize),
    Lit(char),
}

struct Classes {
    parent: Vec<usize>,
    forced: Vec<Option<char>>,
}

impl Classes {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    /// False on a character clash.
    fn force(&mut self, x: usize, c: char) -> bool {
        let r = self.find(x);
        match self.forced[r] {
            Some(d) => d == c,
            None => {
                self.forced[r] = Some(c);
                true
            }
        }
    }

    fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return true;
        }
        let (lo, hi) = if rx < ry { (rx, ry) } else { (ry, rx) };
        self.parent[hi] = lo;
        match (self.forced[lo], self.forced[hi]) {
            (Some(a), Some(b)) => a == b,
            (None, Some(b)) => {
                self.forced[lo] = Some(b);
                true
            }
            _ => true,
        }
    }
}

fn words_for(
    q: &Query<'_>,
    b: Bound,
    lens: &[usize],
    index: &BTreeMap<&StrVar, usize>,
    links: &[(IntVar, usize)],
) -> Option<Model> {
    let mut base = vec![0usize; lens.len() + 1];
    for i in 0..lens.len() {
        base[i + 1] = base[i] + lens[i];
    }
    let ncells = base[lens.len()];
    let cells = |t: &Term| -> Vec<Cell> {
        let mut out = Vec::new();
        for a in t.atoms() {
            match a {
                Atom::Char(c) => out.push(Cell::Lit(*c)),
                Atom::Var(v) | Atom::Str(v, _) => {
                    let i = index[v];
                    out.extend((base[i]..base[i + 1]).map(Cell::Pos));
                }
            }
        }
        out
    };
    let mut classes = Classes { parent: (0..ncells).collect(), forced: vec![None; ncells] };
    for e in &q.equations {
        let (l, r) = (cells(&e.lhs), cells(&e.rhs));
        if l.len() != r.len() {
            return None;
        }
        for (x, y) in l.into_iter().zip(r) {
            let ok = match (x, y) {
                (Cell::Lit(a), Cell::Lit(b)) => a == b,
                (Cell::Pos(p), Cell::Lit(c)) | (Cell::Lit(c), Cell::Pos(p)) => classes.force(p, c),
                (Cell::Pos(p), Cell::Pos(r)) => classes.union(p, r),
            };
            if !ok {
                return None;
            }
        }
    }
    // length-only arithmetic can be checked before choosing characters
    let mut probe = Model::default();
    for (v, &i) in index {
        probe.strings.insert((*v).clone(), "?".repeat(lens[i]));
    }
    for a in &q.arith {
        let mut ints = BTreeSet::new();
        a.int_vars(&mut ints);
        if ints.is_empty() && !eval_arith(a, &probe).unwrap_or(true) {
            return None;
        }
    }
    let roots: Vec<usize> = (0..ncells).map(|c| classes.find(c)).collect();
    let forced: Vec<Option<char>> = roots.iter().map(|&r| classes.forced[r]).collect();
    let mut chosen: Vec<Option<char>> = vec![None; ncells];
    fill(q, b, lens, &base, links, &roots, &forced, &mut chosen, 0)
}

#[allow(clippy::too_many_arguments)]
fn fill(
    q: &Query<'_>,
    b: Bound,
    lens: &[usize],
    base: &[usize],
    links: &[(IntVar, usize)],
    roots: &[usize],
    forced: &[Option<char>],
    chosen: &mut Vec<Option<char>>,
    at: usize,
) -> Option<Model> {
    if at == roots.len() {
        let mut m = Model::default();
        for (i, v) in q.str_vars.iter().enumerate() {
            let w: String = (base[i]..base[i + 1]).map(|c| chosen[roots[c]].unwrap()).collect();
            m.strings.insert(v.clone(), w);
        }
        for (n, i) in links {
            m.ints.insert(n.clone(), lens[*i] as Int);
        }
        return integers(q, b, m);
    }
    let r = roots[at];
    if chosen[r].is_some() {
        return fill(q, b, lens, base, links, roots, forced, chosen, at + 1);
    }
    let options: Vec<char> = match forced[at] {
        Some(c) => vec![c],
        None => q.sigma.clone(),
    };
    for c in options {
        chosen[r] = Some(c);
        if let Some(m) = fill(q, b, lens, base, links, roots, forced, chosen, at + 1) {
            return Some(m);
        }
    }
    chosen[r] = None;
    None
}

/// Complete `m` with integers: forced by a top-level `v = e` where possible,
/// otherwise enumerated in `[-b, b]`.
fn integers(q: &Query<'_>, b: Bound, mut m: Model) -> Option<Model> {
    loop {
        let mut progress = false;
        for a in &q.arith {
            if a.kind != ArithKind::Eq {
                continue;
            }
            for (v, e) in [(&a.lhs, &a.rhs), (&a.rhs, &a.lhs)] {
                let ArithExpr::IntVar(v) = v else { continue };
                if m.ints.contains_key(v) {
                    continue;
                }
                if let Ok(Some(x)) = eval_int(e, &m) {
                    m.ints.insert(v.clone(), x);
                    progress = true;
                }
            }
        }
        if !progress {
            break;
        }
    }
    let free: Vec<IntVar> = q.int_vars.iter().filter(|v| !m.ints.contains_key(*v)).cloned().collect();
    enumerate_ints(q, b, &free, &mut m).then_some(m)
}

fn enumerate_ints(q: &Query<'_>, b: Bound, free: &[IntVar], m: &mut Model) -> bool {
    let Some((v, rest)) = free.split_first() else {
        return (q.check)(m);
    };
    for x in -b.max_int..=b.max_int {
        m.ints.insert(v.clone(), x);
        if enumerate_ints(q, b, rest, m) {
            return true;
        }
    }
    m.ints.remove(v);
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_problem;

    fn sigma_ab() -> Alphabet {
        Alphabet::new(['a', 'b'])
    }

    fn w(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn matcher_basics() {
        let r = Regex::cat(Regex::star(Regex::word("ab")), Regex::Lit('a'));
        assert!(regex_matches(&r, &w("a"), &sigma_ab()));
        assert!(regex_matches(&r, &w("aba"), &sigma_ab()));
        assert!(!regex_matches(&r, &w("ab"), &sigma_ab()));
        let c = Regex::inter(Regex::complement(r.clone()), r);
        for x in ["", "a", "ab", "aba", "bb"] {
            assert!(!regex_matches(&c, &w(x), &sigma_ab()));
        }
    }

    #[test]
    fn evaluator_examples() {
        let p = parse_problem(
            r#"(declare-str s)
               (assert (= (str.++ "ab" s) (str.++ s "ba")))"#,
        )
        .unwrap();
        let m = Model { strings: [(StrVar::new("s"), "a".to_string())].into(), ints: BTreeMap::new() };
        assert!(eval_problem(&p, &m).unwrap());

        let p = parse_problem(
            r#"(declare-str s)
               (assert (str.in_re s (re.++ (re.* (str.to_re "ab")) (str.to_re "a"))))
               (assert (= (mod (str.len s) 2) 0))"#,
        )
        .unwrap();
        assert!(!eval_problem(&p, &m).unwrap());

        let empty = parse_problem("").unwrap();
        assert!(eval_problem(&empty, &Model::default()).unwrap());
        assert_eq!(
            eval_problem(&p, &Model::default()),
            Err(OracleError::UnassignedVariable("s".into()))
        );
    }

    #[test]
    fn first_models() {
        let p = parse_problem(
            r#"(declare-str s)
               (assert (= (str.++ "ab" s) (str.++ s "ba")))"#,
        )
        .unwrap();
        let m = brute_force_solve(&p, Bound::new(3)).unwrap();
        assert_eq!(m.strings[&StrVar::new("s")], "a");

        let p = parse_problem(
            r#"(declare-str s)
               (assert (= (str.++ "ab" s) (str.++ s "ba")))
               (assert (str.in_re s (re.++ (re.* (str.to_re "ab")) (str.to_re "a"))))
               (assert (= (mod (str.len s) 2) 0))"#,
        )
        .unwrap();
        assert_eq!(brute_force_solve(&p, Bound::new(6)), None);

        let p = parse_problem(r#"(declare-str s)(assert (= s ""))"#).unwrap();
        let m = brute_force_solve(&p, Bound::new(0)).unwrap();
        assert_eq!(m.strings[&StrVar::new("s")], "");
    }

    #[test]
    fn integers_are_derived_or_enumerated() {
        let p = parse_problem(
            r#"(declare-str s)(declare-int k x)
               (assert (= k (str.len s)))
               (assert (= (str.++ s "a") (str.++ "a" s)))
               (assert (<= 2 k))
               (assert (< k x))"#,
        )
        .unwrap();
        let m = brute_force_solve(&p, Bound::new(4)).unwrap();
        assert_eq!(m.strings[&StrVar::new("s")], "aa");
        assert_eq!(m.ints[&IntVar::new("k")], 2);
        assert_eq!(m.ints[&IntVar::new("x")], 3);
        assert!(eval_problem(&p, &m).unwrap());
    }

    #[test]
    fn deterministic() {
        let p = parse_problem(
            r#"(declare-str s t)
               (assert (= (str.++ s "b" t) (str.++ t "b" s)))
               (assert (<= 1 (str.len s)))"#,
        )
        .unwrap();
        let a = brute_force_solve(&p, Bound::new(3));
        assert_eq!(a, brute_force_solve(&p, Bound::new(3)));
        let m = a.unwrap();
        assert!(eval_problem(&p, &m).unwrap());
        assert_eq!(m.strings[&StrVar::new("s")], "b");
        assert_eq!(m.strings[&StrVar::new("t")], "");
    }
}
