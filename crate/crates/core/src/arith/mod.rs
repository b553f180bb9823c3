//! Quantifier-free linear integer arithmetic with `mod` by constants and
//! `max`/`min`: lowering to linear systems, satisfiability with models, and
//! implication. Generic over the exact scalar type.

mod compact;
mod omega;
pub mod scalar;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ast::{ArithAtom, ArithExpr, ArithKind, IntVar};
use omega::{Omega, Row};
pub use compact::project_atoms;
pub use scalar::Scalar;
use scalar::{add, lift, mul, neg, sub};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("mod divisor is not a positive constant: {0}")]
    NonConstantDivisor(String),
    #[error("integer overflow in exact arithmetic")]
    Overflow,
    #[error("arithmetic search exceeded its step limit")]
    ResourceLimit,
}

/// One way an expression can evaluate: a linear value under side conditions.
type Case<T> = (LinExpr<T>, Vec<LinAtom<T>>);

const OMEGA_STEPS: usize = 200_000;
const CASE_SPLITS: usize = 100_000;

/// `Σ k_i·x_i + c`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinExpr<T> {
    pub coeffs: BTreeMap<String, T>,
    pub constant: T,
}

impl<T: Scalar> LinExpr<T> {
    pub fn constant(c: T) -> Self {
        LinExpr { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn var(name: &str) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.to_string(), T::one());
        LinExpr { coeffs, constant: T::zero() }
    }

    pub fn plus(&self, other: &LinExpr<T>) -> Result<Self, ArithError> {
        let mut out = self.clone();
        for (v, k) in &other.coeffs {
            let slot = out.coeffs.entry(v.clone()).or_insert_with(T::zero);
            *slot = add(slot, k)?;
        }
        out.coeffs.retain(|_, k| !k.is_zero());
        out.constant = add(&out.constant, &other.constant)?;
        Ok(out)
    }

    pub fn scaled(&self, k: &T) -> Result<Self, ArithError> {
        let mut coeffs = BTreeMap::new();
        for (v, c) in &self.coeffs {
            let p = mul(c, k)?;
            if !p.is_zero() {
                coeffs.insert(v.clone(), p);
            }
        }
        Ok(LinExpr { coeffs, constant: mul(&self.constant, k)? })
    }

    pub fn minus(&self, other: &LinExpr<T>) -> Result<Self, ArithError> {
        self.plus(&other.scaled(&neg(&T::one())?)?)
    }

    pub fn coeff(&self, v: &str) -> T {
        self.coeffs.get(v).cloned().unwrap_or_else(T::zero)
    }

    /// Replace `v` by `e`.
    fn substitute(&self, v: &str, e: &LinExpr<T>) -> Result<Self, ArithError> {
        let k = self.coeff(v);
        if k.is_zero() {
            return Ok(self.clone());
        }
        let mut rest = self.clone();
        rest.coeffs.remove(v);
        rest.plus(&e.scaled(&k)?)
    }

    pub fn eval(&self, model: &BTreeMap<String, T>) -> Result<T, ArithError> {
        let mut acc = self.constant.clone();
        for (v, k) in &self.coeffs {
            let x = model.get(v).cloned().unwrap_or_else(T::zero);
            acc = add(&acc, &mul(k, &x)?)?;
        }
        Ok(acc)
    }
}

impl<T: Scalar> fmt::Display for LinExpr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, k) in &self.coeffs {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if k.is_one() {
                write!(f, "{v}")?;
            } else {
                write!(f, "{k}·{v}")?;
            }
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant.is_zero() {
            Ok(())
        } else {
            write!(f, " + {}", self.constant)
        }
    }
}

/// Normalized linear atom: `e = 0`, `e ≤ 0`, or `modulus | e`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinAtom<T> {
    Eq(LinExpr<T>),
    Le(LinExpr<T>),
    Div { modulus: T, expr: LinExpr<T> },
}

impl<T: Scalar> LinAtom<T> {
    fn expr(&self) -> &LinExpr<T> {
        match self {
            LinAtom::Eq(e) | LinAtom::Le(e) | LinAtom::Div { expr: e, .. } => e,
        }
    }

    fn map_expr(
        &self,
        f: impl Fn(&LinExpr<T>) -> Result<LinExpr<T>, ArithError>,
    ) -> Result<Self, ArithError> {
        Ok(match self {
            LinAtom::Eq(e) => LinAtom::Eq(f(e)?),
            LinAtom::Le(e) => LinAtom::Le(f(e)?),
            LinAtom::Div { modulus, expr } => LinAtom::Div { modulus: modulus.clone(), expr: f(expr)? },
        })
    }

    pub fn holds(&self, model: &BTreeMap<String, T>) -> Result<bool, ArithError> {
        Ok(match self {
            LinAtom::Eq(e) => e.eval(model)?.is_zero(),
            LinAtom::Le(e) => !e.eval(model)?.is_positive(),
            LinAtom::Div { modulus, expr } => expr.eval(model)?.mod_floor(modulus).is_zero(),
        })
    }

    /// The negation as a disjunction.
    pub fn negate(&self) -> Result<Vec<LinAtom<T>>, ArithError> {
        let one = LinExpr::constant(T::one());
        Ok(match self {
            LinAtom::Eq(e) => vec![
                LinAtom::Le(e.plus(&one)?),
                LinAtom::Le(e.scaled(&neg(&T::one())?)?.plus(&one)?),
            ],
            LinAtom::Le(e) => vec![LinAtom::Le(e.scaled(&neg(&T::one())?)?.plus(&one)?)],
            LinAtom::Div { modulus, expr } => {
                let mut out = Vec::new();
                let mut r = T::one();
                while r < *modulus {
                    out.push(LinAtom::Div {
                        modulus: modulus.clone(),
                        expr: expr.minus(&LinExpr::constant(r.clone()))?,
                    });
                    r = add(&r, &T::one())?;
                }
                out
            }
        })
    }
}

impl<T: Scalar> fmt::Display for LinAtom<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinAtom::Eq(e) => write!(f, "{e} = 0"),
            LinAtom::Le(e) => write!(f, "{e} ≤ 0"),
            LinAtom::Div { modulus, expr } => write!(f, "{modulus} | {expr}"),
        }
    }
}

/// A conjunction of linear atoms.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LinearSystem<T> {
    pub atoms: Vec<LinAtom<T>>,
}

impl<T: Scalar> LinearSystem<T> {
    pub fn holds(&self, model: &BTreeMap<String, T>) -> Result<bool, ArithError> {
        for a in &self.atoms {
            if !a.holds(model)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Name used for `|s|` when a length has not been paired with a variable.
pub fn len_var_name(s: &str) -> String {
    format!("|{s}|")
}

fn is_internal(name: &str) -> bool {
    name.starts_with('#') || name.starts_with('|')
}

type Alternatives<T> = Vec<Vec<LinAtom<T>>>;

/// Lowers Presburger atoms to linear atoms, naming the auxiliaries it needs
/// `#q1`, `#r2`, ...
#[derive(Default)]
struct Lowerer {
    next: usize,
}

impl Lowerer {
    fn fresh(&mut self, base: &str) -> String {
        self.next += 1;
        format!("#{base}{}", self.next)
    }

    fn expr<T: Scalar>(&mut self, e: &ArithExpr) -> Result<Vec<Case<T>>, ArithError> {
        Ok(match e {
            ArithExpr::IntConst(k) => vec![(LinExpr::constant(lift(*k)?), vec![])],
            ArithExpr::IntVar(v) => vec![(LinExpr::var(v.name()), vec![])],
            ArithExpr::LenOf(s) => vec![(LinExpr::var(&len_var_name(s.name())), vec![])],
            ArithExpr::Scale(k, a) => {
                let k: T = lift(*k)?;
                self.expr(a)?
                    .into_iter()
                    .map(|(x, c)| Ok((x.scaled(&k)?, c)))
                    .collect::<Result<_, ArithError>>()?
            }
            ArithExpr::Neg(a) => self
                .expr::<T>(a)?
                .into_iter()
                .map(|(x, c)| Ok((x.scaled(&neg(&T::one())?)?, c)))
                .collect::<Result<_, ArithError>>()?,
            ArithExpr::Add(a, b) => {
                let xs = self.expr::<T>(a)?;
                let ys = self.expr::<T>(b)?;
                let mut out = Vec::new();
                for (x, cx) in &xs {
                    for (y, cy) in &ys {
                        out.push((x.plus(y)?, [cx.clone(), cy.clone()].concat()));
                    }
                }
                out
            }
            ArithExpr::Max(a, b) | ArithExpr::Min(a, b) => {
                let is_max = matches!(e, ArithExpr::Max(..));
                let xs = self.expr::<T>(a)?;
                let ys = self.expr::<T>(b)?;
                let mut out = Vec::new();
                for (x, cx) in &xs {
                    for (y, cy) in &ys {
                        let base = [cx.clone(), cy.clone()].concat();
                        // max(x,y) = x when y ≤ x, min(x,y) = x when x ≤ y
                        let (first, second) = if is_max { (y, x) } else { (x, y) };
                        let mut c1 = base.clone();
                        c1.push(LinAtom::Le(first.minus(second)?));
                        out.push((x.clone(), c1));
                        let mut c2 = base;
                        c2.push(LinAtom::Le(second.minus(first)?));
                        out.push((y.clone(), c2));
                    }
                }
                out
            }
            ArithExpr::Mod(a, b) => {
                let p = match b.const_value() {
                    Some(p) if p > 0 => p,
                    _ => return Err(ArithError::NonConstantDivisor(b.to_string())),
                };
                let p: T = lift(p)?;
                let mut out = Vec::new();
                for (x, mut c) in self.expr::<T>(a)? {
                    let q = self.fresh("q");
                    let r = self.fresh("r");
                    let qe = LinExpr::<T>::var(&q);
                    let re = LinExpr::<T>::var(&r);
                    // x = p·q + r, 0 ≤ r ≤ p - 1
                    c.push(LinAtom::Eq(x.minus(&qe.scaled(&p)?)?.minus(&re)?));
                    c.push(LinAtom::Le(re.scaled(&neg(&T::one())?)?));
                    c.push(LinAtom::Le(re.minus(&LinExpr::constant(sub(&p, &T::one())?))?));
                    out.push((re, c));
                }
                out
            }
        })
    }

    fn atom<T: Scalar>(&mut self, a: &ArithAtom) -> Result<Alternatives<T>, ArithError> {
        let ls = self.expr::<T>(&a.lhs)?;
        let rs = self.expr::<T>(&a.rhs)?;
        let mut out = Vec::new();
        for (l, cl) in &ls {
            for (r, cr) in &rs {
                let d = l.minus(r)?;
                let mut conj = [cl.clone(), cr.clone()].concat();
                conj.push(match a.kind {
                    ArithKind::Eq => LinAtom::Eq(d),
                    ArithKind::Leq => LinAtom::Le(d),
                });
                out.push(conj);
            }
        }
        Ok(out)
    }

    fn conjunction<T: Scalar>(&mut self, atoms: &[ArithAtom]) -> Result<Alternatives<T>, ArithError> {
        let mut acc: Alternatives<T> = vec![vec![]];
        for a in atoms {
            let alts = self.atom::<T>(a)?;
            let mut next = Vec::new();
            for base in &acc {
                for alt in &alts {
                    next.push([base.clone(), alt.clone()].concat());
                }
            }
            acc = next;
        }
        Ok(acc)
    }
}

/// Eliminate `max`, `min` and `mod`, producing a disjunction of linear systems.
pub fn lower<T: Scalar>(atoms: &[ArithAtom]) -> Result<Vec<LinearSystem<T>>, ArithError> {
    Ok(Lowerer::default()
        .conjunction::<T>(atoms)?
        .into_iter()
        .map(|atoms| LinearSystem { atoms })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult<T> {
    Sat(BTreeMap<IntVar, T>),
    Unsat,
}

impl<T> SatResult<T> {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

/// One conjunct of an arithmetic query: an atom, or a disjunction of
/// conjunctions of atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    Atom(ArithAtom),
    AnyOf(Vec<Vec<ArithAtom>>),
}

pub fn arith_sat<T: Scalar>(atoms: &[ArithAtom]) -> Result<SatResult<T>, ArithError> {
    let cs: Vec<Constraint> = atoms.iter().cloned().map(Constraint::Atom).collect();
    sat_constraints(&cs)
}

pub fn sat_constraints<T: Scalar>(cs: &[Constraint]) -> Result<SatResult<T>, ArithError> {
    let mut low = Lowerer::default();
    let mut clauses = Vec::new();
    for c in cs {
        clauses.push(match c {
            Constraint::Atom(a) => low.atom::<T>(a)?,
            Constraint::AnyOf(options) => {
                let mut alts = Vec::new();
                for conj in options {
                    alts.extend(low.conjunction::<T>(conj)?);
                }
                alts
            }
        });
    }
    Ok(match solve_clauses(clauses)? {
        None => SatResult::Unsat,
        Some(m) => SatResult::Sat(
            m.into_iter().filter(|(k, _)| !is_internal(k)).map(|(k, v)| (IntVar(k), v)).collect(),
        ),
    })
}

/// `hyp ⊨ a` for every atom `a` of `concl`.
pub fn arith_implies<T: Scalar>(hyp: &[ArithAtom], concl: &[ArithAtom]) -> Result<bool, ArithError> {
    let mut low = Lowerer::default();
    let hyp_clauses = hyp.iter().map(|a| low.atom::<T>(a)).collect::<Result<Vec<_>, _>>()?;
    for a in concl {
        let mut negated = Vec::new();
        for alt in a.negate() {
            negated.extend(low.atom::<T>(&alt)?);
        }
        let mut clauses = hyp_clauses.clone();
        clauses.push(negated);
        if solve_clauses(clauses)?.is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `hyp ⊨ ∃Z. concl` where `Z` is every variable of `concl` outside `keep`.
/// Variables of `Z` that cannot be eliminated exactly are kept universally,
/// so a `true` answer is always sound while `false` may be conservative.
pub fn implies_projected<T: Scalar>(
    hyp: &[ArithAtom],
    concl: &[ArithAtom],
    keep: &BTreeSet<IntVar>,
) -> Result<bool, ArithError> {
    let mut low = Lowerer::default();
    let mut clauses = hyp.iter().map(|a| low.atom::<T>(a)).collect::<Result<Vec<_>, _>>()?;
    let keep: BTreeSet<String> = keep.iter().map(|v| v.name().to_string()).collect();
    for system in low.conjunction::<T>(concl)? {
        let projected = project(system, &keep)?;
        let mut negated = Vec::new();
        for a in &projected {
            negated.extend(a.negate()?);
        }
        if projected.is_empty() {
            return Ok(true);
        }
        clauses.push(negated.into_iter().map(|a| vec![a]).collect());
    }
    Ok(solve_clauses(clauses)?.is_none())
}

/// Existentially eliminate every variable outside `keep` where this can be
/// done exactly.
fn project<T: Scalar>(
    mut atoms: Vec<LinAtom<T>>,
    keep: &BTreeSet<String>,
) -> Result<Vec<LinAtom<T>>, ArithError> {
    loop {
        let vars: BTreeSet<String> = atoms
            .iter()
            .flat_map(|a| a.expr().coeffs.keys().cloned())
            .filter(|v| !keep.contains(v))
            .collect();
        let mut changed = false;
        for z in vars {
            if let Some(next) = eliminate_one(&atoms, &z)? {
                atoms = next;
                changed = true;
                break;
            }
        }
        if !changed {
            return Ok(atoms);
        }
    }
}

fn eliminate_one<T: Scalar>(
    atoms: &[LinAtom<T>],
    z: &str,
) -> Result<Option<Vec<LinAtom<T>>>, ArithError> {
    let (with, without): (Vec<&LinAtom<T>>, Vec<&LinAtom<T>>) =
        atoms.iter().partition(|a| !a.expr().coeff(z).is_zero());
    let mut rest: Vec<LinAtom<T>> = without.into_iter().cloned().collect();

    // unit equality: solve for z and substitute
    if let Some(pos) = with
        .iter()
        .position(|a| matches!(a, LinAtom::Eq(e) if e.coeff(z).abs().is_one()))
    {
        let e = with[pos].expr();
        let k = e.coeff(z);
        let mut others = e.clone();
        others.coeffs.remove(z);
        // k·z + others = 0  ⇒  z = -k·others
        let value = others.scaled(&neg(&k)?)?;
        for (i, a) in with.iter().enumerate() {
            if i != pos {
                rest.push(a.map_expr(|x| x.substitute(z, &value))?);
            }
        }
        return Ok(Some(rest));
    }

    if with.len() == 1 {
        let a = with[0];
        let k = a.expr().coeff(z).abs();
        let mut others = a.expr().clone();
        others.coeffs.remove(z);
        match a {
            LinAtom::Eq(_) => rest.push(LinAtom::Div { modulus: k, expr: others }),
            LinAtom::Le(_) => {}
            LinAtom::Div { modulus, .. } => {
                let g = k.gcd(modulus);
                if !g.is_one() {
                    rest.push(LinAtom::Div { modulus: g, expr: others });
                }
            }
        }
        return Ok(Some(rest));
    }

    if with.iter().all(|a| matches!(a, LinAtom::Le(_))) {
        // e ≤ 0 with positive z-coefficient bounds z from above
        let uppers: Vec<&LinExpr<T>> =
            with.iter().map(|a| a.expr()).filter(|e| e.coeff(z).is_positive()).collect();
        let lowers: Vec<&LinExpr<T>> =
            with.iter().map(|a| a.expr()).filter(|e| e.coeff(z).is_negative()).collect();
        let exact = uppers.iter().all(|e| e.coeff(z).is_one())
            || lowers.iter().all(|e| e.coeff(z).abs().is_one());
        if !exact {
            return Ok(None);
        }
        for u in &uppers {
            for l in &lowers {
                let a = u.coeff(z);
                let b = l.coeff(z).abs();
                rest.push(LinAtom::Le(u.scaled(&b)?.plus(&l.scaled(&a)?)?));
            }
        }
        return Ok(Some(rest));
    }
    Ok(None)
}

/// Satisfiability of a conjunction of disjunctive clauses, by backtracking
/// over alternatives with an Omega-test check at every level.
fn solve_clauses<T: Scalar>(
    clauses: Vec<Alternatives<T>>,
) -> Result<Option<BTreeMap<String, T>>, ArithError> {
    let mut base = Vec::new();
    let mut split = Vec::new();
    for c in clauses {
        match c.len() {
            0 => return Ok(None),
            1 => base.extend(c.into_iter().next().unwrap()),
            _ => split.push(c),
        }
    }
    let mut budget = CASE_SPLITS;
    search(&base, &split, &mut budget)
}

fn search<T: Scalar>(
    conj: &[LinAtom<T>],
    rest: &[Alternatives<T>],
    budget: &mut usize,
) -> Result<Option<BTreeMap<String, T>>, ArithError> {
    if *budget == 0 {
        return Err(ArithError::ResourceLimit);
    }
    *budget -= 1;
    let model = solve_conjunction(conj)?;
    let Some(model) = model else { return Ok(None) };
    let Some((first, tail)) = rest.split_first() else { return Ok(Some(model)) };
    for alt in first {
        let next: Vec<LinAtom<T>> = conj.iter().chain(alt.iter()).cloned().collect();
        if let Some(m) = search(&next, tail, budget)? {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

fn solve_conjunction<T: Scalar>(
    conj: &[LinAtom<T>],
) -> Result<Option<BTreeMap<String, T>>, ArithError> {
    let names: Vec<String> = conj
        .iter()
        .flat_map(|a| a.expr().coeffs.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> =
        names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let divs = conj.iter().filter(|a| matches!(a, LinAtom::Div { .. })).count();
    let width = names.len() + divs;
    let row_of = |e: &LinExpr<T>| {
        let mut coef = vec![T::zero(); width];
        for (v, k) in &e.coeffs {
            coef[index[v.as_str()]] = k.clone();
        }
        Row { coef, constant: e.constant.clone() }
    };
    let mut eqs = Vec::new();
    let mut geqs = Vec::new();
    let mut next_div = names.len();
    for a in conj {
        match a {
            LinAtom::Eq(e) => eqs.push(row_of(e)),
            LinAtom::Le(e) => geqs.push(row_of(&e.scaled(&neg(&T::one())?)?)),
            LinAtom::Div { modulus, expr } => {
                // expr - modulus·q = 0
                let mut r = row_of(expr);
                r.coef[next_div] = neg(modulus)?;
                next_div += 1;
                eqs.push(r);
            }
        }
    }
    let Some(values) = Omega::new(OMEGA_STEPS).solve(eqs, geqs, width)? else {
        return Ok(None);
    };
    let model: BTreeMap<String, T> = names.into_iter().zip(values).collect();
    for a in conj {
        debug_assert!(a.holds(&model)?, "omega model violates {a}");
    }
    Ok(Some(model))
}

/// Exact evaluation of a Presburger expression under an integer model.
/// `None` if a variable is unassigned or a divisor is not positive.
pub fn eval_expr<T: Scalar>(e: &ArithExpr, model: &BTreeMap<IntVar, T>) -> Option<T> {
    Some(match e {
        ArithExpr::IntConst(k) => T::from_i128(*k)?,
        ArithExpr::IntVar(v) => model.get(v)?.clone(),
        ArithExpr::LenOf(s) => model.get(&IntVar(len_var_name(s.name())))?.clone(),
        ArithExpr::Scale(k, a) => T::from_i128(*k)?.checked_mul(&eval_expr(a, model)?)?,
        ArithExpr::Neg(a) => T::zero().checked_sub(&eval_expr(a, model)?)?,
        ArithExpr::Add(a, b) => eval_expr(a, model)?.checked_add(&eval_expr(b, model)?)?,
        ArithExpr::Max(a, b) => eval_expr(a, model)?.max(eval_expr(b, model)?),
        ArithExpr::Min(a, b) => eval_expr(a, model)?.min(eval_expr(b, model)?),
        ArithExpr::Mod(a, b) => {
            let d = eval_expr(b, model)?;
            if !d.is_positive() {
                return None;
            }
            eval_expr(a, model)?.mod_floor(&d)
        }
    })
}

pub fn eval_atom<T: Scalar>(a: &ArithAtom, model: &BTreeMap<IntVar, T>) -> Option<bool> {
    let l = eval_expr(&a.lhs, model)?;
    let r = eval_expr(&a.rhs, model)?;
    Some(match a.kind {
        ArithKind::Eq => l == r,
        ArithKind::Leq => l <= r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::ArithExpr as E;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn v(n: &str) -> E {
        E::var(n)
    }

    #[test]
    fn lower_mod_gives_one_system() {
        let atoms = vec![ArithAtom::eq(E::modulo(v("n"), E::int(2)), E::int(0))];
        let systems = lower::<i128>(&atoms).unwrap();
        assert_eq!(systems.len(), 1);
        assert_eq!(systems[0].atoms.len(), 4);
        for n in -10i128..=10 {
            let mut found = false;
            for q in -10..=10 {
                for r in -2..=2 {
                    let m: BTreeMap<String, i128> =
                        [("n".into(), n), ("#q1".into(), q), ("#r2".into(), r)].into();
                    found |= systems[0].holds(&m).unwrap();
                }
            }
            assert_eq!(found, n % 2 == 0, "n = {n}");
        }
    }

    #[test]
    fn lower_empty_and_max() {
        assert_eq!(lower::<i128>(&[]).unwrap(), vec![LinearSystem { atoms: vec![] }]);
        let atoms = vec![ArithAtom::leq(E::max(v("x"), v("y")), E::int(3))];
        assert_eq!(lower::<i128>(&atoms).unwrap().len(), 2);
    }

    #[test]
    fn non_constant_divisor_rejected() {
        let atoms = vec![ArithAtom::eq(E::modulo(v("x"), v("y")), E::int(0))];
        assert!(matches!(arith_sat::<i128>(&atoms), Err(ArithError::NonConstantDivisor(_))));
    }

    #[test]
    fn parity_core_is_unsat() {
        let atoms = vec![
            ArithAtom::eq(E::modulo(v("n"), E::int(2)), E::int(0)),
            ArithAtom::eq(v("n1"), E::sub(v("n"), E::int(1))),
            ArithAtom::eq(v("n1"), E::int(0)),
            ArithAtom::lt(E::int(0), v("n")),
        ];
        assert_eq!(arith_sat::<i128>(&atoms).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn zero_model() {
        let atoms = vec![ArithAtom::eq(v("n"), E::int(0))];
        let SatResult::Sat(m) = arith_sat::<i128>(&atoms).unwrap() else { panic!() };
        assert_eq!(m[&IntVar::new("n")], 0);
    }

    #[test]
    fn length_abstraction_unsat() {
        // nu = nv + nu + 1 + nu + nt with all lengths non-negative
        let rhs = E::sum(vec![v("nv"), v("nu"), E::int(1), v("nu"), v("nt")]);
        let mut atoms = vec![ArithAtom::eq(v("nu"), rhs)];
        for n in ["nu", "nv", "nt"] {
            atoms.push(ArithAtom::geq(v(n), E::int(0)));
        }
        assert_eq!(arith_sat::<i128>(&atoms).unwrap(), SatResult::Unsat);
        assert_eq!(arith_sat::<BigInt>(&atoms).unwrap(), SatResult::Unsat);
        assert_eq!(arith_sat::<i64>(&atoms).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn parity_implication() {
        let hyp = vec![
            ArithAtom::eq(E::modulo(v("n'"), E::int(2)), E::int(0)),
            ArithAtom::lt(E::int(0), v("n'")),
            ArithAtom::eq(v("n'"), E::sub(v("n1"), E::int(1))),
            ArithAtom::lt(E::int(0), v("n1")),
            ArithAtom::eq(v("n1"), E::sub(v("n"), E::int(1))),
        ];
        let concl = vec![ArithAtom::eq(E::modulo(v("n"), E::int(2)), E::int(0))];
        assert!(arith_implies::<i128>(&hyp, &concl).unwrap());
    }

    #[test]
    fn trivial_and_failing_implications() {
        let x1 = vec![ArithAtom::eq(v("x"), E::int(1))];
        assert!(arith_implies::<i128>(&x1, &[ArithAtom::leq(E::int(0), E::int(0))]).unwrap());
        assert!(!arith_implies::<i128>(&x1, &[ArithAtom::eq(v("x"), E::int(2))]).unwrap());
    }

    #[test]
    fn projection_keeps_parity() {
        // n = 2 + m ∧ m % 2 = 0 ∧ m ≥ 0, projected onto n
        let concl = vec![
            ArithAtom::eq(v("n"), E::add(E::int(2), v("m"))),
            ArithAtom::eq(E::modulo(v("m"), E::int(2)), E::int(0)),
            ArithAtom::geq(v("m"), E::int(0)),
        ];
        let keep: BTreeSet<IntVar> = [IntVar::new("n")].into();
        let hyp_good = vec![ArithAtom::eq(v("n"), E::int(6))];
        let hyp_odd = vec![ArithAtom::eq(v("n"), E::int(7))];
        let hyp_small = vec![ArithAtom::eq(v("n"), E::int(0))];
        assert!(implies_projected::<i128>(&hyp_good, &concl, &keep).unwrap());
        assert!(!implies_projected::<i128>(&hyp_odd, &concl, &keep).unwrap());
        assert!(!implies_projected::<i128>(&hyp_small, &concl, &keep).unwrap());
    }

    #[test]
    fn overflow_is_reported_for_fixed_width() {
        let big = i64::MAX as i128 + 1;
        let atoms = vec![ArithAtom::eq(E::scale(big, v("x")), E::scale(big, E::int(4)))];
        assert_eq!(arith_sat::<i64>(&atoms), Err(ArithError::Overflow));
        assert!(arith_sat::<BigInt>(&atoms).unwrap().is_sat());
        assert!(arith_sat::<i128>(&atoms).unwrap().is_sat());
    }

    fn atom_strategy() -> impl Strategy<Value = ArithAtom> {
        let var = prop::sample::select(vec!["x", "y", "z"]);
        let term = (-3i128..=3, var).prop_map(|(k, x)| E::scale(k, E::var(x)));
        let lin = (prop::collection::vec(term, 1..=3), -6i128..=6)
            .prop_map(|(ts, c)| E::add(E::sum(ts), E::int(c)));
        prop_oneof![
            lin.clone().prop_map(|e| ArithAtom::eq(e, E::int(0))),
            lin.clone().prop_map(|e| ArithAtom::leq(e, E::int(0))),
            (lin, 2i128..=3, 0i128..=2)
                .prop_map(|(e, p, r)| ArithAtom::eq(E::modulo(e, E::int(p)), E::int(r))),
        ]
    }

    fn bounded(mut atoms: Vec<ArithAtom>) -> Vec<ArithAtom> {
        for x in ["x", "y", "z"] {
            atoms.push(ArithAtom::leq(E::int(-8), E::var(x)));
            atoms.push(ArithAtom::leq(E::var(x), E::int(8)));
        }
        atoms
    }

    fn enumerate(atoms: &[ArithAtom]) -> bool {
        for x in -8i128..=8 {
            for y in -8i128..=8 {
                for z in -8i128..=8 {
                    let m: BTreeMap<IntVar, i128> =
                        [(IntVar::new("x"), x), (IntVar::new("y"), y), (IntVar::new("z"), z)].into();
                    if atoms.iter().all(|a| eval_atom(a, &m) == Some(true)) {
                        return true;
                    }
                }
            }
        }
        false
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn agrees_with_enumeration(atoms in prop::collection::vec(atom_strategy(), 1..=4)) {
            let atoms = bounded(atoms);
            let got = arith_sat::<i128>(&atoms).unwrap();
            prop_assert_eq!(got.is_sat(), enumerate(&atoms));
            if let SatResult::Sat(m) = got {
                let mut m = m;
                for x in ["x", "y", "z"] {
                    m.entry(IntVar::new(x)).or_insert(0);
                }
                for a in &atoms {
                    prop_assert_eq!(eval_atom(a, &m), Some(true), "{}", a);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn implication_reflexive_and_monotone(
            hyp in prop::collection::vec(atom_strategy(), 1..=3),
            extra in atom_strategy(),
        ) {
            prop_assert!(arith_implies::<i128>(&hyp, &hyp).unwrap());
            let concl = vec![hyp[0].clone()];
            let mut stronger = hyp.clone();
            stronger.push(extra);
            if arith_implies::<i128>(&hyp, &concl).unwrap() {
                prop_assert!(arith_implies::<i128>(&stronger, &concl).unwrap());
            }
        }
    }
}
