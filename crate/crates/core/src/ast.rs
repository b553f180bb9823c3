//! Term language: flat word terms, regular expressions, Presburger length
//! arithmetic, and the four-part normalized formula `Es ∧ Υ ∧ I ∧ Λ`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::regex::Dfa;
use crate::Int;

/// A string-typed variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StrVar(pub String);

/// An integer-typed variable (user integers and length variables alike).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct IntVar(pub String);

impl StrVar {
    pub fn new(name: impl Into<String>) -> Self {
        StrVar(name.into())
    }
    pub fn name(&self) -> &str {
        &self.0
    }
}

impl IntVar {
    pub fn new(name: impl Into<String>) -> Self {
        IntVar(name.into())
    }
    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StrVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for IntVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The finite alphabet Σ of a problem, kept sorted and duplicate-free.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Alphabet(Vec<char>);

impl Alphabet {
    pub fn new(chars: impl IntoIterator<Item = char>) -> Self {
        let set: BTreeSet<char> = chars.into_iter().collect();
        Alphabet(set.into_iter().collect())
    }

    pub fn chars(&self) -> &[char] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, c: char) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.0.binary_search(&c).ok()
    }

    pub fn union(&self, other: &Alphabet) -> Alphabet {
        Alphabet::new(self.0.iter().chain(other.0.iter()).copied())
    }
}

/// One element of a flattened term. `Epsilon` is the empty atom list and
/// `Concat` is list concatenation, so neither needs its own variant.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Atom {
    Char(char),
    Var(StrVar),
    /// Inductive predicate instance `STR(u, n)`: `u` is a word of length `n`.
    Str(StrVar, IntVar),
}

impl Atom {
    pub fn str_var(&self) -> Option<&StrVar> {
        match self {
            Atom::Char(_) => None,
            Atom::Var(v) | Atom::Str(v, _) => Some(v),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Char(c) => write!(f, "{c}"),
            Atom::Var(v) => write!(f, "{v}"),
            Atom::Str(u, n) => write!(f, "STR({u},{n})"),
        }
    }
}

/// A word term stored as a flat atom sequence.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Term(pub Vec<Atom>);

impl Term {
    pub fn epsilon() -> Self {
        Term(Vec::new())
    }

    pub fn word(w: &str) -> Self {
        Term(w.chars().map(Atom::Char).collect())
    }

    pub fn var(name: &str) -> Self {
        Term(vec![Atom::Var(StrVar::new(name))])
    }

    pub fn atom(a: Atom) -> Self {
        Term(vec![a])
    }

    pub fn concat(mut self, other: Term) -> Self {
        self.0.extend(other.0);
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_ground(&self) -> bool {
        self.0.iter().all(|a| matches!(a, Atom::Char(_)))
    }

    /// The word denoted by a ground term.
    pub fn as_word(&self) -> Option<String> {
        self.0
            .iter()
            .map(|a| match a {
                Atom::Char(c) => Some(*c),
                _ => None,
            })
            .collect()
    }

    pub fn has_str_pred(&self) -> bool {
        self.0.iter().any(|a| matches!(a, Atom::Str(..)))
    }

    pub fn str_vars(&self) -> impl Iterator<Item = &StrVar> {
        self.0.iter().filter_map(Atom::str_var)
    }

    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.0.iter().filter_map(|a| match a {
            Atom::Char(c) => Some(*c),
            _ => None,
        })
    }

    /// Replace every occurrence of `pattern` by `replacement`.
    pub fn substitute(&self, pattern: &Atom, replacement: &Term) -> Term {
        let mut out = Vec::with_capacity(self.0.len());
        for a in &self.0 {
            if a == pattern {
                out.extend(replacement.0.iter().cloned());
            } else {
                out.push(a.clone());
            }
        }
        Term(out)
    }

    pub fn occurrences(&self, v: &StrVar) -> usize {
        self.str_vars().filter(|x| *x == v).count()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("·")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// A word equation `lhs = rhs`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        Equation { lhs, rhs }
    }

    pub fn mirror(&self) -> Equation {
        Equation::new(self.rhs.clone(), self.lhs.clone())
    }

    pub fn str_vars(&self) -> impl Iterator<Item = &StrVar> {
        self.lhs.str_vars().chain(self.rhs.str_vars())
    }

    pub fn occurrences(&self, v: &StrVar) -> usize {
        self.lhs.occurrences(v) + self.rhs.occurrences(v)
    }

    pub fn substitute(&self, pattern: &Atom, replacement: &Term) -> Equation {
        Equation::new(
            self.lhs.substitute(pattern, replacement),
            self.rhs.substitute(pattern, replacement),
        )
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// Notational size: number of character and variable atoms on both sides.
pub fn equation_size(eq: &Equation) -> usize {
    eq.lhs.len() + eq.rhs.len()
}

/// Regular expressions. They never mention string variables.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Regex {
    Empty,
    Eps,
    Lit(char),
    Word(Vec<char>),
    Cat(Box<Regex>, Box<Regex>),
    Union(Box<Regex>, Box<Regex>),
    Inter(Box<Regex>, Box<Regex>),
    Complement(Box<Regex>),
    Star(Box<Regex>),
}

impl Regex {
    pub fn cat(a: Regex, b: Regex) -> Regex {
        Regex::Cat(Box::new(a), Box::new(b))
    }
    pub fn union(a: Regex, b: Regex) -> Regex {
        Regex::Union(Box::new(a), Box::new(b))
    }
    pub fn inter(a: Regex, b: Regex) -> Regex {
        Regex::Inter(Box::new(a), Box::new(b))
    }
    pub fn complement(a: Regex) -> Regex {
        Regex::Complement(Box::new(a))
    }
    pub fn star(a: Regex) -> Regex {
        Regex::Star(Box::new(a))
    }
    pub fn word(w: &str) -> Regex {
        let cs: Vec<char> = w.chars().collect();
        match cs.len() {
            0 => Regex::Eps,
            1 => Regex::Lit(cs[0]),
            _ => Regex::Word(cs),
        }
    }

    /// Every literal character, for alphabet collection.
    pub fn chars(&self, out: &mut BTreeSet<char>) {
        match self {
            Regex::Empty | Regex::Eps => {}
            Regex::Lit(c) => {
                out.insert(*c);
            }
            Regex::Word(w) => out.extend(w.iter().copied()),
            Regex::Cat(a, b) | Regex::Union(a, b) | Regex::Inter(a, b) => {
                a.chars(out);
                b.chars(out);
            }
            Regex::Complement(a) | Regex::Star(a) => a.chars(out),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Regex::Empty | Regex::Eps | Regex::Lit(_) | Regex::Word(_) => 0,
            Regex::Cat(a, b) | Regex::Union(a, b) | Regex::Inter(a, b) => {
                1 + a.depth().max(b.depth())
            }
            Regex::Complement(a) | Regex::Star(a) => 1 + a.depth(),
        }
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regex::Empty => f.write_str("∅"),
            Regex::Eps => f.write_str("ε"),
            Regex::Lit(c) => write!(f, "{c}"),
            Regex::Word(w) => write!(f, "{}", w.iter().collect::<String>()),
            Regex::Cat(a, b) => write!(f, "({a}·{b})"),
            Regex::Union(a, b) => write!(f, "({a}|{b})"),
            Regex::Inter(a, b) => write!(f, "({a}∩{b})"),
            Regex::Complement(a) => write!(f, "({a})^C"),
            Regex::Star(a) => write!(f, "({a})*"),
        }
    }
}

/// Presburger terms over integer variables and string lengths.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ArithExpr {
    IntConst(Int),
    IntVar(IntVar),
    LenOf(StrVar),
    Scale(Int, Box<ArithExpr>),
    Neg(Box<ArithExpr>),
    Mod(Box<ArithExpr>, Box<ArithExpr>),
    Add(Box<ArithExpr>, Box<ArithExpr>),
    Max(Box<ArithExpr>, Box<ArithExpr>),
    Min(Box<ArithExpr>, Box<ArithExpr>),
}

impl ArithExpr {
    pub fn int(k: impl Into<Int>) -> Self {
        ArithExpr::IntConst(k.into())
    }
    pub fn var(name: &str) -> Self {
        ArithExpr::IntVar(IntVar::new(name))
    }
    pub fn len(name: &str) -> Self {
        ArithExpr::LenOf(StrVar::new(name))
    }
    #[allow(clippy::should_implement_trait)]
    pub fn add(a: ArithExpr, b: ArithExpr) -> Self {
        ArithExpr::Add(Box::new(a), Box::new(b))
    }
    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: ArithExpr, b: ArithExpr) -> Self {
        ArithExpr::Add(Box::new(a), Box::new(ArithExpr::Neg(Box::new(b))))
    }
    pub fn scale(k: impl Into<Int>, a: ArithExpr) -> Self {
        ArithExpr::Scale(k.into(), Box::new(a))
    }
    pub fn modulo(a: ArithExpr, b: ArithExpr) -> Self {
        ArithExpr::Mod(Box::new(a), Box::new(b))
    }
    pub fn max(a: ArithExpr, b: ArithExpr) -> Self {
        ArithExpr::Max(Box::new(a), Box::new(b))
    }
    pub fn min(a: ArithExpr, b: ArithExpr) -> Self {
        ArithExpr::Min(Box::new(a), Box::new(b))
    }

    /// Sum of a non-empty list, left-nested; `0` for the empty list.
    pub fn sum(items: Vec<ArithExpr>) -> Self {
        let mut it = items.into_iter();
        match it.next() {
            None => ArithExpr::int(0),
            Some(first) => it.fold(first, ArithExpr::add),
        }
    }

    pub fn int_vars(&self, out: &mut BTreeSet<IntVar>) {
        self.visit(&mut |e| {
            if let ArithExpr::IntVar(v) = e {
                out.insert(v.clone());
            }
        });
    }

    pub fn len_vars(&self, out: &mut BTreeSet<StrVar>) {
        self.visit(&mut |e| {
            if let ArithExpr::LenOf(v) = e {
                out.insert(v.clone());
            }
        });
    }

    fn visit(&self, f: &mut impl FnMut(&ArithExpr)) {
        f(self);
        match self {
            ArithExpr::IntConst(_) | ArithExpr::IntVar(_) | ArithExpr::LenOf(_) => {}
            ArithExpr::Scale(_, a) | ArithExpr::Neg(a) => a.visit(f),
            ArithExpr::Mod(a, b)
            | ArithExpr::Add(a, b)
            | ArithExpr::Max(a, b)
            | ArithExpr::Min(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Bottom-up rewrite.
    pub fn map(&self, f: &impl Fn(&ArithExpr) -> Option<ArithExpr>) -> ArithExpr {
        if let Some(e) = f(self) {
            return e;
        }
        let bx = |e: &ArithExpr| Box::new(e.map(f));
        match self {
            ArithExpr::IntConst(_) | ArithExpr::IntVar(_) | ArithExpr::LenOf(_) => self.clone(),
            ArithExpr::Scale(k, a) => ArithExpr::Scale(*k, bx(a)),
            ArithExpr::Neg(a) => ArithExpr::Neg(bx(a)),
            ArithExpr::Mod(a, b) => ArithExpr::Mod(bx(a), bx(b)),
            ArithExpr::Add(a, b) => ArithExpr::Add(bx(a), bx(b)),
            ArithExpr::Max(a, b) => ArithExpr::Max(bx(a), bx(b)),
            ArithExpr::Min(a, b) => ArithExpr::Min(bx(a), bx(b)),
        }
    }

    pub fn rename_int(&self, map: &BTreeMap<IntVar, IntVar>) -> ArithExpr {
        self.map(&|e| match e {
            ArithExpr::IntVar(v) => map.get(v).map(|w| ArithExpr::IntVar(w.clone())),
            _ => None,
        })
    }

    /// Constant value when the expression mentions no variable.
    pub fn const_value(&self) -> Option<Int> {
        match self {
            ArithExpr::IntConst(k) => Some(*k),
            ArithExpr::IntVar(_) | ArithExpr::LenOf(_) => None,
            ArithExpr::Scale(k, a) => k.checked_mul(a.const_value()?),
            ArithExpr::Neg(a) => a.const_value()?.checked_neg(),
            ArithExpr::Add(a, b) => a.const_value()?.checked_add(b.const_value()?),
            ArithExpr::Max(a, b) => Some(a.const_value()?.max(b.const_value()?)),
            ArithExpr::Min(a, b) => Some(a.const_value()?.min(b.const_value()?)),
            ArithExpr::Mod(a, b) => {
                let d = b.const_value()?;
                if d <= 0 {
                    return None;
                }
                Some(a.const_value()?.rem_euclid(d))
            }
        }
    }
}

impl fmt::Display for ArithExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithExpr::IntConst(k) => write!(f, "{k}"),
            ArithExpr::IntVar(v) => write!(f, "{v}"),
            ArithExpr::LenOf(s) => write!(f, "|{s}|"),
            ArithExpr::Scale(k, a) => write!(f, "{k}·{a}"),
            ArithExpr::Neg(a) => write!(f, "-({a})"),
            ArithExpr::Mod(a, b) => write!(f, "({a} % {b})"),
            ArithExpr::Add(a, b) => match &**b {
                ArithExpr::Neg(c) => write!(f, "({a} - {c})"),
                _ => write!(f, "({a} + {b})"),
            },
            ArithExpr::Max(a, b) => write!(f, "max({a}, {b})"),
            ArithExpr::Min(a, b) => write!(f, "min({a}, {b})"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ArithKind {
    Eq,
    Leq,
}

/// `lhs = rhs` or `lhs ≤ rhs`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ArithAtom {
    pub kind: ArithKind,
    pub lhs: ArithExpr,
    pub rhs: ArithExpr,
}

impl ArithAtom {
    pub fn eq(lhs: ArithExpr, rhs: ArithExpr) -> Self {
        ArithAtom { kind: ArithKind::Eq, lhs, rhs }
    }
    pub fn leq(lhs: ArithExpr, rhs: ArithExpr) -> Self {
        ArithAtom { kind: ArithKind::Leq, lhs, rhs }
    }
    /// `lhs < rhs`, encoded as `lhs + 1 ≤ rhs`.
    pub fn lt(lhs: ArithExpr, rhs: ArithExpr) -> Self {
        ArithAtom::leq(ArithExpr::add(lhs, ArithExpr::int(1)), rhs)
    }
    pub fn geq(lhs: ArithExpr, rhs: ArithExpr) -> Self {
        ArithAtom::leq(rhs, lhs)
    }

    /// The negation as a disjunction of atoms.
    pub fn negate(&self) -> Vec<ArithAtom> {
        match self.kind {
            ArithKind::Leq => vec![ArithAtom::lt(self.rhs.clone(), self.lhs.clone())],
            ArithKind::Eq => vec![
                ArithAtom::lt(self.lhs.clone(), self.rhs.clone()),
                ArithAtom::lt(self.rhs.clone(), self.lhs.clone()),
            ],
        }
    }

    pub fn int_vars(&self, out: &mut BTreeSet<IntVar>) {
        self.lhs.int_vars(out);
        self.rhs.int_vars(out);
    }

    pub fn len_vars(&self, out: &mut BTreeSet<StrVar>) {
        self.lhs.len_vars(out);
        self.rhs.len_vars(out);
    }

    pub fn map(&self, f: &impl Fn(&ArithExpr) -> Option<ArithExpr>) -> ArithAtom {
        ArithAtom { kind: self.kind, lhs: self.lhs.map(f), rhs: self.rhs.map(f) }
    }

    pub fn rename_int(&self, map: &BTreeMap<IntVar, IntVar>) -> ArithAtom {
        ArithAtom { kind: self.kind, lhs: self.lhs.rename_int(map), rhs: self.rhs.rename_int(map) }
    }
}

impl fmt::Display for ArithAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.kind {
            ArithKind::Eq => "=",
            ArithKind::Leq => "≤",
        };
        write!(f, "{} {op} {}", self.lhs, self.rhs)
    }
}

/// Bookkeeping equalities recorded while unfolding; consulted only when a
/// model is built.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum SubtermConstraint {
    /// `outer = head · tail`
    CharPrefix { outer: StrVar, head: char, tail: StrVar },
    /// `outer = prefix · suffix`
    Split { outer: StrVar, prefix: StrVar, suffix: StrVar },
    /// `var = ε`
    EpsBind(StrVar),
    /// `lhs = rhs`
    Alias { lhs: StrVar, rhs: StrVar },
}

impl SubtermConstraint {
    /// The variable this constraint defines.
    pub fn defined(&self) -> &StrVar {
        match self {
            SubtermConstraint::CharPrefix { outer, .. } => outer,
            SubtermConstraint::Split { outer, .. } => outer,
            SubtermConstraint::EpsBind(v) => v,
            SubtermConstraint::Alias { lhs, .. } => lhs,
        }
    }

    /// Variables the definition refers to.
    pub fn components(&self) -> Vec<&StrVar> {
        match self {
            SubtermConstraint::CharPrefix { tail, .. } => vec![tail],
            SubtermConstraint::Split { prefix, suffix, .. } => vec![prefix, suffix],
            SubtermConstraint::EpsBind(_) => vec![],
            SubtermConstraint::Alias { rhs, .. } => vec![rhs],
        }
    }

    pub fn vars(&self) -> Vec<&StrVar> {
        let mut v = vec![self.defined()];
        v.extend(self.components());
        v
    }

    pub fn rename(&self, from: &StrVar, to: &StrVar) -> SubtermConstraint {
        let r = |v: &StrVar| if v == from { to.clone() } else { v.clone() };
        match self {
            SubtermConstraint::CharPrefix { outer, head, tail } => {
                SubtermConstraint::CharPrefix { outer: r(outer), head: *head, tail: r(tail) }
            }
            SubtermConstraint::Split { outer, prefix, suffix } => SubtermConstraint::Split {
                outer: r(outer),
                prefix: r(prefix),
                suffix: r(suffix),
            },
            SubtermConstraint::EpsBind(v) => SubtermConstraint::EpsBind(r(v)),
            SubtermConstraint::Alias { lhs, rhs } => {
                SubtermConstraint::Alias { lhs: r(lhs), rhs: r(rhs) }
            }
        }
    }
}

impl fmt::Display for SubtermConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubtermConstraint::CharPrefix { outer, head, tail } => {
                write!(f, "{outer} = {head}·{tail}")
            }
            SubtermConstraint::Split { outer, prefix, suffix } => {
                write!(f, "{outer} = {prefix}·{suffix}")
            }
            SubtermConstraint::EpsBind(v) => write!(f, "{v} = ε"),
            SubtermConstraint::Alias { lhs, rhs } => write!(f, "{lhs} = {rhs}"),
        }
    }
}

/// A regular language attached to a membership constraint. Languages are
/// compared by their canonical minimal automaton, so two memberships agree
/// whenever their languages do.
#[derive(Clone, Debug)]
pub struct Lang {
    pub dfa: Arc<Dfa>,
    /// Human-readable description, for printing only.
    pub label: String,
}

impl PartialEq for Lang {
    fn eq(&self, other: &Self) -> bool {
        self.dfa == other.dfa
    }
}
impl Eq for Lang {}

/// `term ∈ L`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Membership {
    pub term: Term,
    pub lang: Lang,
}

impl Membership {
    /// Absorb leading characters of the term into the language via
    /// left quotients.
    pub fn absorb_prefix(mut self) -> Membership {
        let k = self.term.0.iter().take_while(|a| matches!(a, Atom::Char(_))).count();
        if k == 0 {
            return self;
        }
        let word: String = self.term.0[..k]
            .iter()
            .map(|a| match a {
                Atom::Char(c) => *c,
                _ => unreachable!(),
            })
            .collect();
        let dfa = self.lang.dfa.derive_word(&word);
        self.term = Term(self.term.0.split_off(k));
        let label = if word.is_empty() {
            self.lang.label
        } else {
            format!("{word}⁻¹{}", self.lang.label)
        };
        self.lang = Lang { dfa: Arc::new(dfa), label };
        self
    }
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ∈ {}", self.term, self.lang.label)
    }
}

/// `Es ∧ Υ ∧ I ∧ Λ`, plus the bookkeeping that ties each string variable to
/// its current length variable and a fresh-name counter.
#[derive(Clone, Debug, Default)]
pub struct NormalizedFormula {
    pub equations: Vec<Equation>,
    pub memberships: Vec<Membership>,
    pub arith: Vec<ArithAtom>,
    pub subterms: Vec<SubtermConstraint>,
    /// Length variable of every string variable that has been paired.
    pub len_of: BTreeMap<StrVar, IntVar>,
    pub fresh: u32,
}

impl NormalizedFormula {
    pub fn fresh_str(&mut self, base: &str) -> StrVar {
        self.fresh += 1;
        StrVar(format!("{base}!{}", self.fresh))
    }

    pub fn fresh_int(&mut self, base: &str) -> IntVar {
        self.fresh += 1;
        IntVar(format!("{base}!{}", self.fresh))
    }

    /// True when no equation mentions an inductive predicate.
    pub fn equations_pred_free(&self) -> bool {
        self.equations.iter().all(|e| !e.lhs.has_str_pred() && !e.rhs.has_str_pred())
    }

    pub fn int_vars(&self) -> BTreeSet<IntVar> {
        let mut out = BTreeSet::new();
        for a in &self.arith {
            a.int_vars(&mut out);
        }
        for t in self.terms() {
            for a in t.atoms() {
                if let Atom::Str(_, n) = a {
                    out.insert(n.clone());
                }
            }
        }
        out
    }

    /// Every term of `Es` and `Υ`.
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.equations
            .iter()
            .flat_map(|e| [&e.lhs, &e.rhs])
            .chain(self.memberships.iter().map(|m| &m.term))
    }
}

impl fmt::Display for NormalizedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        parts.extend(self.equations.iter().map(|e| e.to_string()));
        parts.extend(self.memberships.iter().map(|m| m.to_string()));
        parts.extend(self.arith.iter().map(|a| a.to_string()));
        parts.extend(self.subterms.iter().map(|s| s.to_string()));
        if parts.is_empty() {
            f.write_str("true")
        } else {
            f.write_str(&parts.join(" ∧ "))
        }
    }
}

/// Words for string variables and integers for integer variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    pub strings: BTreeMap<StrVar, String>,
    pub ints: BTreeMap<IntVar, Int>,
}

/// Structural length: `|ε| = 0`, `|c| = 1`, `|STR(u,n)| = n`, `|s| = LenOf(s)`,
/// and concatenation sums.
pub fn length_expr(tr: &Term) -> ArithExpr {
    // runs of characters count as one constant
    let mut parts: Vec<ArithExpr> = Vec::new();
    let mut run: Int = 0;
    for a in tr.atoms() {
        let e = match a {
            Atom::Char(_) => {
                run += 1;
                continue;
            }
            Atom::Var(v) => ArithExpr::LenOf(v.clone()),
            Atom::Str(_, n) => ArithExpr::IntVar(n.clone()),
        };
        if run > 0 {
            parts.push(ArithExpr::int(std::mem::take(&mut run)));
        }
        parts.push(e);
    }
    if run > 0 {
        parts.push(ArithExpr::int(run));
    }
    if parts.len() > LONG_SUM {
        return grouped_length(parts);
    }
    ArithExpr::sum(parts)
}

/// Past this many summands the length is written with one coefficient per
/// variable, which keeps expression depth bounded.
const LONG_SUM: usize = 64;

fn grouped_length(parts: Vec<ArithExpr>) -> ArithExpr {
    let mut konst: Int = 0;
    let mut coeffs: BTreeMap<ArithExpr, Int> = BTreeMap::new();
    for p in parts {
        match p {
            ArithExpr::IntConst(k) => konst += k,
            other => *coeffs.entry(other).or_insert(0) += 1,
        }
    }
    let mut items: Vec<ArithExpr> =
        coeffs.into_iter().map(|(e, k)| if k == 1 { e } else { ArithExpr::scale(k, e) }).collect();
    if konst > 0 {
        items.push(ArithExpr::int(konst));
    }
    ArithExpr::sum(items)
}

/// Replace the single atom `pattern` by `replacement` throughout `Es` (and
/// `Υ`). `Λ` is left alone unless `rename_in_subterms` names a variable
/// renaming to apply there as well.
pub fn substitute(
    f: &NormalizedFormula,
    pattern: &Atom,
    replacement: &Term,
    rename_in_subterms: Option<(&StrVar, &StrVar)>,
) -> NormalizedFormula {
    let mut out = f.clone();
    out.equations = f.equations.iter().map(|e| e.substitute(pattern, replacement)).collect();
    out.memberships = f
        .memberships
        .iter()
        .map(|m| {
            Membership { term: m.term.substitute(pattern, replacement), lang: m.lang.clone() }
                .absorb_prefix()
        })
        .collect();
    if let Some((from, to)) = rename_in_subterms {
        out.subterms = f.subterms.iter().map(|s| s.rename(from, to)).collect();
    }
    out
}

/// String variables occurring in `Es`, `Υ` or `Λ`.
pub fn free_string_vars(f: &NormalizedFormula) -> BTreeSet<StrVar> {
    let mut out: BTreeSet<StrVar> = f.terms().flat_map(|t| t.str_vars().cloned()).collect();
    for s in &f.subterms {
        out.extend(s.vars().into_iter().cloned());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn str_atom(u: &str, n: &str) -> Atom {
        Atom::Str(StrVar::new(u), IntVar::new(n))
    }

    fn flat(atoms: Vec<Atom>) -> Term {
        Term(atoms)
    }

    #[test]
    fn size_of_paper_equation_is_six() {
        let eq = Equation::new(
            Term::word("ab").concat(Term::var("s")),
            Term::var("s").concat(Term::word("ba")),
        );
        assert_eq!(equation_size(&eq), 6);
        assert_eq!(equation_size(&Equation::new(Term::epsilon(), Term::epsilon())), 0);
        let eq = Equation::new(flat(vec![str_atom("u", "n"), Atom::Char('a')]), Term::word("b"));
        assert_eq!(equation_size(&eq), 3);
        assert_eq!(equation_size(&eq.mirror()), 3);
    }

    #[test]
    fn length_of_terms() {
        assert_eq!(length_expr(&Term::epsilon()), ArithExpr::int(0));
        let t = Term::word("ab").concat(Term::atom(str_atom("u", "n")));
        assert_eq!(
            length_expr(&t),
            ArithExpr::add(ArithExpr::int(2), ArithExpr::var("n"))
        );
        let t = flat(vec![str_atom("u", "nu"), str_atom("t", "nt")]);
        assert_eq!(length_expr(&t), ArithExpr::add(ArithExpr::var("nu"), ArithExpr::var("nt")));
    }

    #[test]
    fn length_respects_concatenation() {
        let a = Term::word("a").concat(Term::var("x"));
        let b = Term::var("y");
        assert_eq!(
            length_expr(&a.clone().concat(b.clone())),
            ArithExpr::add(length_expr(&a), length_expr(&b))
        );
    }

    #[test]
    fn substitution_examples() {
        let p = str_atom("u", "n");
        let f = NormalizedFormula {
            equations: vec![Equation::new(Term::atom(p.clone()), Term::atom(p.clone()))],
            ..Default::default()
        };
        let g = substitute(&f, &p, &Term::epsilon(), None);
        assert_eq!(g.equations[0], Equation::new(Term::epsilon(), Term::epsilon()));

        let f = NormalizedFormula {
            equations: vec![Equation::new(Term::var("s"), Term::var("t"))],
            ..Default::default()
        };
        let g = substitute(&f, &Atom::Var(StrVar::new("t")), &Term::word("ab"), None);
        assert_eq!(g.equations[0], Equation::new(Term::var("s"), Term::word("ab")));
        // replacement free of the pattern: a second application changes nothing
        let h = substitute(&g, &Atom::Var(StrVar::new("t")), &Term::word("ab"), None);
        assert_eq!(h.equations, g.equations);
    }

    #[test]
    fn free_vars() {
        let f = NormalizedFormula {
            equations: vec![Equation::new(Term::word("ab"), Term::word("ba"))],
            ..Default::default()
        };
        assert!(free_string_vars(&f).is_empty());
        let f = NormalizedFormula {
            equations: vec![Equation::new(
                Term::word("ab").concat(Term::var("s")),
                Term::var("s").concat(Term::word("ba")),
            )],
            ..Default::default()
        };
        assert_eq!(free_string_vars(&f), [StrVar::new("s")].into_iter().collect());
    }
}
