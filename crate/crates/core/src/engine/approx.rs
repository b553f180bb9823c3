use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::EngineError;
use crate::arith::{sat_constraints, Constraint, SatResult};
use crate::ast::{
    length_expr, Alphabet, ArithAtom, ArithExpr, Atom, IntVar, Membership, Model, NormalizedFormula,
    StrVar,
};
use crate::regex::SemilinearLengthSet;
use crate::Int;

/// How much of `Υ` the over-approximation keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OaMode {
    /// Equation lengths, `I`, and the length sets of all memberships.
    #[default]
    Full,
    /// Equation lengths and `I` only.
    LengthsOnly,
}

/// Arithmetic implied by `f`: `I`, one length equation per word equation,
/// and in full mode the length set of each membership as a disjunction.
pub fn over_approx(f: &NormalizedFormula, mode: OaMode) -> Vec<Constraint> {
    over_approx_in(f, &f.arith, mode)
}

/// As [`over_approx`], with `arith` standing in for `I`.
pub fn over_approx_in(f: &NormalizedFormula, arith: &[ArithAtom], mode: OaMode) -> Vec<Constraint> {
    let mut out: Vec<Constraint> = arith.iter().cloned().map(Constraint::Atom).collect();
    for e in &f.equations {
        out.push(Constraint::Atom(ArithAtom::eq(length_expr(&e.lhs), length_expr(&e.rhs))));
    }
    if mode == OaMode::Full {
        for m in &f.memberships {
            out.push(length_constraint(length_expr(&m.term), &m.lang.dfa.length_set()));
        }
    }
    out
}

/// `e ∈ S` as a disjunction.
pub fn length_constraint(e: ArithExpr, s: &SemilinearLengthSet) -> Constraint {
    let mut alts: Vec<Vec<ArithAtom>> =
        s.finite.iter().map(|&k| vec![ArithAtom::eq(e.clone(), ArithExpr::int(k as Int))]).collect();
    for &(o, p) in &s.progressions {
        let mut conj = vec![ArithAtom::geq(e.clone(), ArithExpr::int(o as Int))];
        if p > 1 {
            conj.push(ArithAtom::eq(
                ArithExpr::modulo(e.clone(), ArithExpr::int(p as Int)),
                ArithExpr::int((o % p) as Int),
            ));
        }
        alts.push(conj);
    }
    Constraint::AnyOf(alts)
}

/// True when the over-approximation is unsatisfiable. Solver resource
/// exhaustion counts as "not refuted".
pub fn oa_refutes(f: &NormalizedFormula, mode: OaMode) -> bool {
    oa_refutes_in(f, &f.arith, mode)
}

pub fn oa_refutes_in(f: &NormalizedFormula, arith: &[ArithAtom], mode: OaMode) -> bool {
    matches!(sat_constraints::<Int>(&over_approx_in(f, arith, mode)), Ok(SatResult::Unsat))
}

#[derive(Clone, Debug, PartialEq)]
pub enum UaResult {
    /// Some equation still contains a predicate.
    NotBase,
    /// Words for the live variables and values for the integers of `I`.
    Sat(Model),
    Unsat,
    /// A search or size cap was hit.
    Undecided(String),
}

const CHOICE_CAP: usize = 200_000;
const LAYER_CAP: usize = 4_096;
const FUNCTION_CAP: usize = 20_000;
const WITNESS_WORK_CAP: usize = 20_000_000;

/// Decide a base leaf: equations are ground, so only `Υ` and `I` remain.
pub fn under_approx_check(f: &NormalizedFormula, sigma: &Alphabet) -> Result<UaResult, EngineError> {
    under_approx_in(f, &f.arith, sigma)
}

/// As [`under_approx_check`], with `arith` standing in for `I`.
pub fn under_approx_in(f: &NormalizedFormula, arith: &[ArithAtom], sigma: &Alphabet) -> Result<UaResult, EngineError> {
    match decide_base(f, arith, sigma) {
        Err(EngineError::Arith(e)) => Ok(UaResult::Undecided(e.to_string())),
        other => other,
    }
}

fn decide_base(f: &NormalizedFormula, arith: &[ArithAtom], sigma: &Alphabet) -> Result<UaResult, EngineError> {
    if !f.equations_pred_free() {
        return Ok(UaResult::NotBase);
    }
    for e in &f.equations {
        match (e.lhs.as_word(), e.rhs.as_word()) {
            (Some(l), Some(r)) if l == r => {}
            (Some(_), Some(_)) => return Ok(UaResult::Unsat),
            _ => return Err(EngineError::Internal(format!("non-ground base equation {e}"))),
        }
    }
    let mut open: Vec<&Membership> = Vec::new();
    for m in &f.memberships {
        match m.term.as_word() {
            Some(w) if !m.lang.dfa.accepts(&w) => return Ok(UaResult::Unsat),
            Some(_) => {}
            None => open.push(m),
        }
    }

    let mut base: Vec<Constraint> = arith.iter().cloned().map(Constraint::Atom).collect();
    let member_vars: BTreeSet<(StrVar, IntVar)> = open
        .iter()
        .flat_map(|m| m.term.atoms())
        .filter_map(|a| match a {
            Atom::Str(u, n) => Some((u.clone(), n.clone())),
            Atom::Var(v) => Some((v.clone(), IntVar(format!("|{v}|")))),
            Atom::Char(_) => None,
        })
        .collect();
    let others: Vec<(StrVar, IntVar)> = f
        .len_of
        .iter()
        .filter(|(u, _)| !member_vars.iter().any(|(v, _)| v == *u))
        .map(|(u, n)| (u.clone(), n.clone()))
        .collect();
    if sigma.is_empty() {
        for (_, n) in &others {
            base.push(Constraint::Atom(ArithAtom::eq(ArithExpr::IntVar(n.clone()), ArithExpr::int(0))));
        }
    }

    let finish = |ints: BTreeMap<IntVar, Int>, mut strings: BTreeMap<StrVar, String>| {
        let fill = sigma.chars().first().copied();
        for (u, n) in &others {
            let len = ints.get(n).copied().unwrap_or(0).max(0) as usize;
            strings.insert(u.clone(), fill.map(|c| c.to_string().repeat(len)).unwrap_or_default());
        }
        Model { strings, ints }
    };

    if member_vars.is_empty() {
        return Ok(match solve(&base)? {
            Some(ints) => UaResult::Sat(finish(ints, BTreeMap::new())),
            None => UaResult::Unsat,
        });
    }

    let prod = Product::new(&open, sigma);
    let Some(layers) = Layers::build(&prod) else {
        return Ok(UaResult::Undecided("transition monoid too large".into()));
    };
    let funcs = layers.all_functions();
    if funcs.len() > FUNCTION_CAP {
        return Ok(UaResult::Undecided("transition monoid too large".into()));
    }
    let vars: Vec<(StrVar, IntVar)> = member_vars.into_iter().collect();

    let mut search = Search {
        prod: &prod,
        open: &open,
        vars: &vars,
        funcs: &funcs,
        chosen: Vec::new(),
        visited: 0,
    };
    let mut found: Option<(Vec<usize>, BTreeMap<IntVar, Int>)> = None;
    let mut capped = false;
    search.run(&mut |choice| {
        let mut cs = base.clone();
        for (k, (_, n)) in vars.iter().enumerate() {
            let set = layers.length_set(&funcs[choice[k]]);
            cs.push(length_constraint(ArithExpr::IntVar(n.clone()), &set));
        }
        match solve(&cs) {
            Ok(Some(m)) => {
                found = Some((choice.to_vec(), m));
                Ok(true)
            }
            Ok(None) => Ok(false),
            Err(e) => Err(e),
        }
    }, &mut capped)?;

    let Some((choice, ints)) = found else {
        return Ok(if capped { UaResult::Undecided("choice cap reached".into()) } else { UaResult::Unsat });
    };
    let mut strings = BTreeMap::new();
    for (k, (u, n)) in vars.iter().enumerate() {
        let len = ints.get(n).copied().unwrap_or(0);
        match layers.word_for(&prod, &funcs[choice[k]], len) {
            Some(w) => {
                strings.insert(u.clone(), w);
            }
            None => return Ok(UaResult::Undecided("witness too long".into())),
        }
    }
    Ok(UaResult::Sat(finish(ints, strings)))
}

fn solve(cs: &[Constraint]) -> Result<Option<BTreeMap<IntVar, Int>>, EngineError> {
    match sat_constraints::<Int>(cs) {
        Ok(SatResult::Sat(m)) => Ok(Some(m)),
        Ok(SatResult::Unsat) => Ok(None),
        Err(e) => Err(EngineError::Arith(e)),
    }
}

type Func = Vec<u32>;

/// Disjoint union of the automata of the open memberships. A word acts on
/// it as a total function on states.
struct Product {
    offsets: Vec<usize>,
    size: usize,
    letters: Vec<(char, Func)>,
}

impl Product {
    fn new(open: &[&Membership], sigma: &Alphabet) -> Self {
        let mut offsets = Vec::new();
        let mut size = 0;
        for m in open {
            offsets.push(size);
            size += m.lang.dfa.num_states();
        }
        let letters = sigma
            .chars()
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut f = vec![0u32; size];
                for (k, m) in open.iter().enumerate() {
                    let d = &m.lang.dfa;
                    for q in 0..d.num_states() {
                        f[offsets[k] + q] = (offsets[k] + d.step_index(q, i)) as u32;
                    }
                }
                (c, f)
            })
            .collect();
        Product { offsets, size, letters }
    }

    fn identity(&self) -> Func {
        (0..self.size as u32).collect()
    }
}

/// `g` after `f`.
fn then(f: &Func, g: &Func) -> Func {
    f.iter().map(|&q| g[q as usize]).collect()
}

/// The sets of functions realised by words of each exact length, up to the
/// first repetition.
struct Layers {
    layers: Vec<Vec<Func>>,
    pre: usize,
    per: usize,
}

impl Layers {
    fn build(p: &Product) -> Option<Layers> {
        let mut seen: HashMap<Vec<Func>, usize> = HashMap::new();
        let mut layers: Vec<Vec<Func>> = Vec::new();
        let mut cur = vec![p.identity()];
        loop {
            if let Some(&i) = seen.get(&cur) {
                let per = layers.len() - i;
                return Some(Layers { layers, pre: i, per });
            }
            if layers.len() >= LAYER_CAP || cur.len() > FUNCTION_CAP {
                return None;
            }
            seen.insert(cur.clone(), layers.len());
            let next: BTreeSet<Func> =
                cur.iter().flat_map(|f| p.letters.iter().map(move |(_, l)| then(f, l))).collect();
            layers.push(std::mem::replace(&mut cur, next.into_iter().collect()));
        }
    }

    fn all_functions(&self) -> Vec<Func> {
        let set: BTreeSet<&Func> = self.layers.iter().flatten().collect();
        set.into_iter().cloned().collect()
    }

    fn contains(&self, l: usize, f: &Func) -> bool {
        self.layers[l].binary_search(f).is_ok()
    }

    /// Lengths of the words realising `f`.
    fn length_set(&self, f: &Func) -> SemilinearLengthSet {
        let finite = (0..self.pre).filter(|&l| self.contains(l, f)).map(|l| l as u64).collect();
        let progressions = (self.pre..self.pre + self.per)
            .filter(|&l| self.contains(l, f))
            .map(|l| (l as u64, self.per as u64))
            .collect();
        SemilinearLengthSet { finite, progressions }
    }

    /// A word of exactly `len` letters realising `target`.
    fn word_for(&self, p: &Product, target: &Func, len: Int) -> Option<String> {
        let len = usize::try_from(len).ok()?;
        let mut work = 0usize;
        // back[l][g] = (predecessor at l-1, letter)
        let mut back: Vec<HashMap<Func, (Func, char)>> = Vec::with_capacity(len);
        let mut cur: BTreeSet<Func> = BTreeSet::from([p.identity()]);
        for _ in 0..len {
            let mut step: HashMap<Func, (Func, char)> = HashMap::new();
            for f in &cur {
                for (c, l) in &p.letters {
                    work += p.size;
                    step.entry(then(f, l)).or_insert_with(|| (f.clone(), *c));
                }
            }
            if work > WITNESS_WORK_CAP {
                return None;
            }
            cur = step.keys().cloned().collect();
            back.push(step);
        }
        if !cur.contains(target) {
            return None;
        }
        let mut word = Vec::with_capacity(len);
        let mut g = target.clone();
        for step in back.iter().rev() {
            let (prev, c) = step[&g].clone();
            word.push(c);
            g = prev;
        }
        word.reverse();
        Some(word.into_iter().collect())
    }
}

/// Backtracking over one transition function per variable.
struct Search<'a> {
    prod: &'a Product,
    open: &'a [&'a Membership],
    vars: &'a [(StrVar, IntVar)],
    funcs: &'a [Func],
    chosen: Vec<usize>,
    visited: usize,
}

impl Search<'_> {
    /// Calls `accept` on each consistent full assignment until it returns true.
    fn run(
        &mut self,
        accept: &mut dyn FnMut(&[usize]) -> Result<bool, EngineError>,
        capped: &mut bool,
    ) -> Result<bool, EngineError> {
        if self.chosen.len() == self.vars.len() {
            return accept(&self.chosen);
        }
        for i in 0..self.funcs.len() {
            self.visited += 1;
            if self.visited > CHOICE_CAP {
                *capped = true;
                return Ok(false);
            }
            self.chosen.push(i);
            if self.consistent() && self.run(accept, capped)? {
                return Ok(true);
            }
            self.chosen.pop();
            if *capped {
                return Ok(false);
            }
        }
        Ok(false)
    }

    /// Every membership whose variables are all chosen is accepted.
    fn consistent(&self) -> bool {
        let assigned: &[(StrVar, IntVar)] = &self.vars[..self.chosen.len()];
        'm: for (k, m) in self.open.iter().enumerate() {
            let d = &m.lang.dfa;
            let off = self.prod.offsets[k];
            let mut q = off + d.start();
            for a in m.term.atoms() {
                let f = match a {
                    Atom::Char(c) => &self.prod.letters.iter().find(|(x, _)| x == c).expect("char in alphabet").1,
                    Atom::Str(u, _) | Atom::Var(u) => match assigned.iter().position(|(v, _)| v == u) {
                        Some(i) => &self.funcs[self.chosen[i]],
                        None => continue 'm,
                    },
                };
                q = f[q] as usize;
            }
            if !d.is_accepting(q - off) {
                return false;
            }
        }
        true
    }
}
