//! Exact existential projection at the atom level: unit equalities are
//! solved and substituted, one-sided variables are dropped, and the result
//! is normalised so that repeated bounds collapse.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{ArithAtom, ArithExpr, ArithKind, IntVar};
use crate::Int;

/// Linear combination of variables and opaque non-linear terms.
#[derive(Clone, Default, Debug, PartialEq, Eq)]
struct Poly {
    vars: BTreeMap<IntVar, Int>,
    other: BTreeMap<ArithExpr, Int>,
    konst: Int,
}

impl Poly {
    fn of(e: &ArithExpr) -> Option<Poly> {
        let mut p = Poly::default();
        p.add(e, 1)?;
        Some(p)
    }

    fn add(&mut self, e: &ArithExpr, k: Int) -> Option<()> {
        match e {
            ArithExpr::IntConst(c) => self.konst = self.konst.checked_add(c.checked_mul(k)?)?,
            ArithExpr::IntVar(v) => bump(&mut self.vars, v.clone(), k)?,
            ArithExpr::Scale(c, a) => self.add(a, k.checked_mul(*c)?)?,
            ArithExpr::Neg(a) => self.add(a, k.checked_neg()?)?,
            ArithExpr::Add(a, b) => {
                self.add(a, k)?;
                self.add(b, k)?;
            }
            ArithExpr::LenOf(_) => bump(&mut self.other, e.clone(), k)?,
            ArithExpr::Mod(a, b) => {
                let t = ArithExpr::Mod(Box::new(normalize(a)?), Box::new(normalize(b)?));
                match t.const_value() {
                    Some(c) => self.konst = self.konst.checked_add(c.checked_mul(k)?)?,
                    None => bump(&mut self.other, t, k)?,
                }
            }
            ArithExpr::Max(a, b) | ArithExpr::Min(a, b) => {
                let (a, b) = (Box::new(normalize(a)?), Box::new(normalize(b)?));
                let t = if matches!(e, ArithExpr::Max(..)) { ArithExpr::Max(a, b) } else { ArithExpr::Min(a, b) };
                bump(&mut self.other, t, k)?
            }
        }
        Some(())
    }

    fn is_const(&self) -> bool {
        self.vars.is_empty() && self.other.is_empty()
    }

    /// The non-constant part as an expression.
    fn body(&self) -> ArithExpr {
        let mut parts = Vec::new();
        for (v, &k) in &self.vars {
            parts.push(scaled(k, ArithExpr::IntVar(v.clone())));
        }
        for (t, &k) in &self.other {
            parts.push(scaled(k, t.clone()));
        }
        ArithExpr::sum(parts)
    }

    fn to_expr(&self) -> ArithExpr {
        if self.is_const() {
            return ArithExpr::IntConst(self.konst);
        }
        if self.konst == 0 {
            return self.body();
        }
        ArithExpr::Add(Box::new(self.body()), Box::new(ArithExpr::IntConst(self.konst)))
    }

    fn negate(&self) -> Option<Poly> {
        let mut p = Poly::default();
        p.add(&self.to_expr(), -1)?;
        Some(p)
    }

    fn mentions(&self, v: &IntVar) -> bool {
        if self.vars.contains_key(v) {
            return true;
        }
        self.other.keys().any(|t| {
            let mut s = BTreeSet::new();
            t.int_vars(&mut s);
            s.contains(v)
        })
    }
}

fn bump<K: Ord>(m: &mut BTreeMap<K, Int>, key: K, k: Int) -> Option<()> {
    let e = m.entry(key).or_insert(0);
    *e = e.checked_add(k)?;
    m.retain(|_, c| *c != 0);
    Some(())
}

fn scaled(k: Int, e: ArithExpr) -> ArithExpr {
    match k {
        1 => e,
        -1 => ArithExpr::Neg(Box::new(e)),
        _ => ArithExpr::Scale(k, Box::new(e)),
    }
}

fn normalize(e: &ArithExpr) -> Option<ArithExpr> {
    Some(Poly::of(e)?.to_expr())
}

/// `p = 0` or `p ≤ 0`.
#[derive(Clone, Debug)]
struct Row {
    kind: ArithKind,
    p: Poly,
}

impl Row {
    fn of(a: &ArithAtom) -> Option<Row> {
        let mut p = Poly::of(&a.lhs)?;
        p.add(&a.rhs, -1)?;
        if a.kind == ArithKind::Eq {
            let first = p.vars.values().next().or(p.other.values().next());
            if first.is_some_and(|&k| k < 0) {
                p = p.negate()?;
            }
        }
        Some(Row { kind: a.kind, p })
    }

    fn atom(&self) -> ArithAtom {
        let rhs = ArithExpr::IntConst(-self.p.konst);
        match self.kind {
            ArithKind::Eq => ArithAtom::eq(self.p.body(), rhs),
            ArithKind::Leq => ArithAtom::leq(self.p.body(), rhs),
        }
    }

    /// Truth value when no variable remains.
    fn truth(&self) -> Option<bool> {
        let holds = match self.kind {
            ArithKind::Eq => self.p.konst == 0,
            ArithKind::Leq => self.p.konst <= 0,
        };
        self.p.is_const().then_some(holds)
    }
}

/// Eliminate variables outside `keep` from `atoms` where this is exact.
/// Falls back to the input unchanged on overflow.
pub fn project_atoms(atoms: &[ArithAtom], keep: &BTreeSet<IntVar>) -> Vec<ArithAtom> {
    project_rows(atoms, keep).unwrap_or_else(|| atoms.to_vec())
}

fn project_rows(atoms: &[ArithAtom], keep: &BTreeSet<IntVar>) -> Option<Vec<ArithAtom>> {
    let mut rows: Vec<Row> = atoms.iter().map(Row::of).collect::<Option<_>>()?;
    loop {
        rows = tidy(rows)?;
        if rows.iter().any(|r| r.truth() == Some(false)) {
            return Some(vec![ArithAtom::leq(ArithExpr::int(1), ArithExpr::int(0))]);
        }
        let dead: BTreeSet<IntVar> = rows
            .iter()
            .flat_map(|r| {
                let mut s = BTreeSet::new();
                r.atom().int_vars(&mut s);
                s
            })
            .filter(|v| !keep.contains(v))
            .collect();
        let mut changed = false;
        for z in &dead {
            if let Some(next) = substitute_unit(&rows, z)? {
                rows = next;
                changed = true;
                break;
            }
            if let Some(next) = drop_one_sided(&rows, z) {
                rows = next;
                changed = true;
                break;
            }
        }
        if !changed {
            return Some(rows.iter().map(Row::atom).collect());
        }
    }
}

/// Drop true constant rows, merge duplicate bodies, keep the tightest bound.
fn tidy(rows: Vec<Row>) -> Option<Vec<Row>> {
    let mut bounds: BTreeMap<ArithExpr, Int> = BTreeMap::new();
    let mut eqs: BTreeSet<ArithAtom> = BTreeSet::new();
    let mut out = Vec::new();
    for r in rows {
        match r.truth() {
            Some(true) => continue,
            Some(false) => return Some(vec![r]),
            None => {}
        }
        match r.kind {
            ArithKind::Leq => {
                // body ≤ -konst: a larger konst is tighter
                let b = bounds.entry(r.p.body()).or_insert(r.p.konst);
                *b = (*b).max(r.p.konst);
            }
            ArithKind::Eq => {
                if eqs.insert(r.atom()) {
                    out.push(r);
                }
            }
        }
    }
    for (body, konst) in bounds {
        let mut p = Poly::of(&body)?;
        p.konst = konst;
        out.push(Row { kind: ArithKind::Leq, p });
    }
    Some(out)
}

/// Solve an equality with coefficient ±1 on `z` outside opaque terms.
fn substitute_unit(rows: &[Row], z: &IntVar) -> Option<Option<Vec<Row>>> {
    let Some(i) = rows.iter().position(|r| {
        r.kind == ArithKind::Eq
            && matches!(r.p.vars.get(z), Some(1) | Some(-1))
            && !r.p.other.keys().any(|t| {
                let mut s = BTreeSet::new();
                t.int_vars(&mut s);
                s.contains(z)
            })
    }) else {
        return Some(None);
    };
    // k·z + rest = 0  ⇒  z = -k·rest
    let k = rows[i].p.vars[z];
    let mut rest = rows[i].p.clone();
    rest.vars.remove(z);
    let value = if k == 1 { rest.negate()? } else { rest };
    let value = value.to_expr();
    let sub = |e: &ArithExpr| match e {
        ArithExpr::IntVar(v) if v == z => Some(value.clone()),
        _ => None,
    };
    let mut out = Vec::with_capacity(rows.len());
    for (j, r) in rows.iter().enumerate() {
        if j == i {
            continue;
        }
        if r.p.mentions(z) {
            out.push(Row::of(&r.atom().map(&sub))?);
        } else {
            out.push(r.clone());
        }
    }
    Some(Some(out))
}

/// `z` occurs only linearly in inequalities, all with the same sign: any
/// large enough value satisfies them.
fn drop_one_sided(rows: &[Row], z: &IntVar) -> Option<Vec<Row>> {
    let mut sign = 0;
    for r in rows {
        if !r.p.mentions(z) {
            continue;
        }
        let k = *r.p.vars.get(z)?;
        if r.kind != ArithKind::Leq {
            return None;
        }
        let opaque = r.p.other.keys().any(|t| {
            let mut s = BTreeSet::new();
            t.int_vars(&mut s);
            s.contains(z)
        });
        if opaque || (sign != 0 && sign != k.signum()) {
            return None;
        }
        sign = k.signum();
    }
    Some(rows.iter().filter(|r| !r.p.mentions(z)).cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{arith_sat, SatResult};

    fn v(s: &str) -> ArithExpr {
        ArithExpr::var(s)
    }

    fn keep(names: &[&str]) -> BTreeSet<IntVar> {
        names.iter().map(|s| IntVar::new(*s)).collect()
    }

    #[test]
    fn chains_collapse() {
        let mut atoms = vec![ArithAtom::eq(ArithExpr::modulo(v("n0"), ArithExpr::int(2)), ArithExpr::int(0))];
        for i in 0..50 {
            let (a, b) = (format!("n{i}"), format!("n{}", i + 1));
            atoms.push(ArithAtom::eq(v(&b), ArithExpr::sub(v(&a), ArithExpr::int(1))));
            atoms.push(ArithAtom::geq(v(&a), ArithExpr::int(1)));
            atoms.push(ArithAtom::geq(v(&b), ArithExpr::int(0)));
        }
        let out = project_atoms(&atoms, &keep(&["n50"]));
        assert!(out.len() <= 3, "{out:?}");
        let mut with = out.clone();
        with.push(ArithAtom::eq(v("n50"), ArithExpr::int(1)));
        assert!(matches!(arith_sat::<Int>(&with), Ok(SatResult::Unsat)));
        with.pop();
        with.push(ArithAtom::eq(v("n50"), ArithExpr::int(0)));
        assert!(matches!(arith_sat::<Int>(&with), Ok(SatResult::Sat(_))));
    }

    #[test]
    fn contradiction_is_kept() {
        let atoms = vec![ArithAtom::eq(v("a"), ArithExpr::int(1)), ArithAtom::eq(v("a"), ArithExpr::int(2))];
        let out = project_atoms(&atoms, &keep(&[]));
        assert!(matches!(arith_sat::<Int>(&out), Ok(SatResult::Unsat)));
    }

    #[test]
    fn one_sided_variables_vanish() {
        let atoms = vec![ArithAtom::geq(v("z"), v("k")), ArithAtom::geq(v("z"), ArithExpr::int(3))];
        assert!(project_atoms(&atoms, &keep(&["k"])).is_empty());
    }
}
