//! Fragment recognition: linearity, per-variable dependency graphs, simple
//! cycle counting, and the syntactic class of periodic length constraints.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::ast::{ArithAtom, ArithExpr, ArithKind, Equation, NormalizedFormula, StrVar};
use crate::Int;

/// Dependency graph of one string variable. Edges are kept with
/// multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepGraph {
    pub root: StrVar,
    /// Vertex -> leaf mark.
    pub vertices: BTreeMap<StrVar, bool>,
    pub edges: Vec<(StrVar, StrVar)>,
}

impl DepGraph {
    pub fn is_leaf(&self, v: &StrVar) -> bool {
        self.vertices.get(v).copied().unwrap_or(false)
    }

    fn mark_leaf(&mut self, v: &StrVar) {
        self.vertices.insert(v.clone(), true);
        self.edges.retain(|(from, _)| from != v);
    }
}

pub fn is_linear(f: &NormalizedFormula) -> bool {
    nonlinear_witness(&f.equations).is_none()
}

fn nonlinear_witness(eqs: &[Equation]) -> Option<(StrVar, &Equation)> {
    for e in eqs {
        let vars: BTreeSet<&StrVar> = e.str_vars().collect();
        for v in vars {
            if e.occurrences(v) > 1 {
                return Some((v.clone(), e));
            }
        }
    }
    None
}

/// Worklist construction: each visited variable consumes the first
/// remaining equation that mentions it. A variable is queued only when its
/// vertex is first created.
pub fn build_dep_graph(s: &StrVar, eqs: &[Equation]) -> DepGraph {
    let mut g = DepGraph { root: s.clone(), vertices: BTreeMap::new(), edges: Vec::new() };
    g.vertices.insert(s.clone(), false);
    let mut work: VecDeque<StrVar> = VecDeque::from([s.clone()]);
    let mut remaining: Vec<Equation> = eqs.to_vec();
    while let Some(si) = work.pop_front() {
        if g.is_leaf(&si) {
            continue;
        }
        let Some(pos) = remaining.iter().position(|e| e.occurrences(&si) > 0) else {
            g.mark_leaf(&si);
            continue;
        };
        let e = remaining.remove(pos);
        let (tr_i, tr_d) = if e.lhs.occurrences(&si) > 0 { (e.lhs, e.rhs) } else { (e.rhs, e.lhs) };
        let dependents: Vec<StrVar> = dedup(tr_d.str_vars());
        if dependents.is_empty() {
            for sj in dedup(tr_i.str_vars()) {
                g.mark_leaf(&sj);
            }
            continue;
        }
        for sj in dependents {
            let fresh = !g.vertices.contains_key(&sj);
            g.vertices.entry(sj.clone()).or_insert(false);
            g.edges.push((si.clone(), sj.clone()));
            if fresh {
                work.push_back(sj);
            }
        }
    }
    g
}

fn dedup<'a>(it: impl Iterator<Item = &'a StrVar>) -> Vec<StrVar> {
    let mut seen = BTreeSet::new();
    it.filter(|v| seen.insert((*v).clone())).cloned().collect()
}

/// Number of simple cycles; parallel edges give distinct cycles.
pub fn cycle_count(g: &DepGraph) -> usize {
    let verts: Vec<&StrVar> = g.vertices.keys().collect();
    let idx: BTreeMap<&StrVar, usize> = verts.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let n = verts.len();
    let mut mult = vec![vec![0usize; n]; n];
    for (a, b) in &g.edges {
        mult[idx[a]][idx[b]] += 1;
    }
    // each cycle counted once, from its smallest vertex
    fn walk(
        start: usize,
        at: usize,
        ways: usize,
        mult: &[Vec<usize>],
        on_path: &mut [bool],
        total: &mut usize,
    ) {
        for next in start..mult.len() {
            let m = mult[at][next];
            if m == 0 {
                continue;
            }
            if next == start {
                *total += ways * m;
            } else if !on_path[next] {
                on_path[next] = true;
                walk(start, next, ways * m, mult, on_path, total);
                on_path[next] = false;
            }
        }
    }
    let mut total = 0;
    for start in 0..n {
        let mut on_path = vec![false; n];
        on_path[start] = true;
        walk(start, start, 1, &mult, &mut on_path, &mut total);
    }
    total
}

/// `lhs - rhs` as integer coefficients, when the atom is linear.
fn linear_form(e: &ArithExpr, scale: Int, acc: &mut BTreeMap<String, Int>, k: &mut Int) -> bool {
    match e {
        ArithExpr::IntConst(c) => match scale.checked_mul(*c).and_then(|d| k.checked_add(d)) {
            Some(v) => {
                *k = v;
                true
            }
            None => false,
        },
        ArithExpr::IntVar(v) => {
            *acc.entry(v.name().to_string()).or_insert(0) += scale;
            true
        }
        ArithExpr::LenOf(s) => {
            *acc.entry(format!("|{}|", s.name())).or_insert(0) += scale;
            true
        }
        ArithExpr::Scale(c, a) => match scale.checked_mul(*c) {
            Some(s) => linear_form(a, s, acc, k),
            None => false,
        },
        ArithExpr::Neg(a) => linear_form(a, -scale, acc, k),
        ArithExpr::Add(a, b) => linear_form(a, scale, acc, k) && linear_form(b, scale, acc, k),
        ArithExpr::Mod(..) | ArithExpr::Max(..) | ArithExpr::Min(..) => false,
    }
}

fn atom_form(a: &ArithAtom) -> Option<BTreeMap<String, Int>> {
    let mut acc = BTreeMap::new();
    let mut k = 0;
    if !linear_form(&a.lhs, 1, &mut acc, &mut k) || !linear_form(&a.rhs, -1, &mut acc, &mut k) {
        return None;
    }
    acc.retain(|_, c| *c != 0);
    Some(acc)
}

/// `x mod p = r` with `x` a single variable (possibly shifted by a
/// constant) and `p`, `r` constants.
fn is_mod_template(a: &ArithAtom) -> bool {
    if a.kind != ArithKind::Eq {
        return false;
    }
    let check = |m: &ArithExpr, r: &ArithExpr| {
        let ArithExpr::Mod(x, p) = m else { return false };
        if !matches!(p.const_value(), Some(p) if p > 0) || r.const_value().is_none() {
            return false;
        }
        let mut acc = BTreeMap::new();
        let mut k = 0;
        linear_form(x, 1, &mut acc, &mut k) && {
            acc.retain(|_, c| *c != 0);
            acc.len() <= 1 && acc.values().all(|c| c.abs() == 1)
        }
    };
    check(&a.lhs, &a.rhs) || check(&a.rhs, &a.lhs)
}

fn is_periodic_atom(a: &ArithAtom) -> bool {
    if is_mod_template(a) {
        return true;
    }
    let Some(form) = atom_form(a) else { return false };
    let coeffs: Vec<Int> = form.values().copied().collect();
    match coeffs.len() {
        0 => true,
        1 => a.kind == ArithKind::Eq || coeffs[0].abs() == 1,
        2 => {
            let unit = coeffs.iter().all(|c| c.abs() == 1);
            // x' = k1·x + k2
            unit || (a.kind == ArithKind::Eq && coeffs.iter().any(|c| c.abs() == 1))
        }
        _ => false,
    }
}

pub fn is_periodic_arith(atoms: &[ArithAtom]) -> bool {
    atoms.iter().all(is_periodic_atom)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FragmentTag {
    ZeroSEA,
    OneSEA,
    General,
}

impl fmt::Display for FragmentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FragmentTag::ZeroSEA => "0SEA",
            FragmentTag::OneSEA => "1SEA",
            FragmentTag::General => "general",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fragment {
    pub tag: FragmentTag,
    /// Why the formula is not in a smaller fragment.
    pub witness: Option<String>,
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.witness {
            Some(w) => write!(f, "{} ({w})", self.tag),
            None => write!(f, "{}", self.tag),
        }
    }
}

pub fn classify_fragment(f: &NormalizedFormula) -> Fragment {
    let vars: BTreeSet<StrVar> =
        f.equations.iter().flat_map(|e| e.str_vars().cloned()).collect();
    let mut worst: Option<(StrVar, usize)> = None;
    for v in &vars {
        let c = cycle_count(&build_dep_graph(v, &f.equations));
        if c > 0 && worst.as_ref().is_none_or(|(_, w)| c > *w) {
            worst = Some((v.clone(), c));
        }
    }
    let nonlinear = nonlinear_witness(&f.equations);
    if nonlinear.is_none() && worst.is_none() {
        return Fragment { tag: FragmentTag::ZeroSEA, witness: None };
    }
    let why_not_zero = match (&nonlinear, &worst) {
        (Some((v, e)), _) => format!("{v} occurs more than once in {e}"),
        (None, Some((v, c))) => format!("dependency graph of {v} has {c} cycle(s)"),
        (None, None) => unreachable!(),
    };
    if let Some((v, c)) = &worst {
        if *c > 1 {
            return Fragment {
                tag: FragmentTag::General,
                witness: Some(format!("dependency graph of {v} has {c} cycles")),
            };
        }
    }
    if let Some(bad) = f.arith.iter().find(|a| !is_periodic_atom(a)) {
        return Fragment {
            tag: FragmentTag::General,
            witness: Some(format!("arithmetic atom {bad} is not periodic")),
        };
    }
    Fragment { tag: FragmentTag::OneSEA, witness: Some(why_not_zero) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{ArithExpr as E, Term};

    fn eq(l: Term, r: Term) -> Equation {
        Equation::new(l, r)
    }
    fn v(n: &str) -> Term {
        Term::var(n)
    }
    fn formula(eqs: Vec<Equation>, arith: Vec<ArithAtom>) -> NormalizedFormula {
        NormalizedFormula { equations: eqs, arith, ..Default::default() }
    }

    fn abs_sba() -> Equation {
        eq(Term::word("ab").concat(v("s")), v("s").concat(Term::word("ba")))
    }

    #[test]
    fn linearity() {
        assert!(is_linear(&formula(vec![eq(v("s"), v("t").concat(v("u")))], vec![])));
        assert!(!is_linear(&formula(vec![abs_sba()], vec![])));
        assert!(is_linear(&formula(vec![eq(v("s"), v("t")), eq(v("s"), v("u"))], vec![])));
    }

    #[test]
    fn graph_of_split() {
        let g = build_dep_graph(&StrVar::new("s"), &[eq(v("s"), v("t").concat(v("u")))]);
        assert_eq!(
            g.edges,
            vec![(StrVar::new("s"), StrVar::new("t")), (StrVar::new("s"), StrVar::new("u"))]
        );
        assert_eq!(cycle_count(&g), 0);
    }

    #[test]
    fn graph_of_ground_equation() {
        let g = build_dep_graph(&StrVar::new("s"), &[eq(v("s").concat(v("t")), Term::word("ab"))]);
        assert!(g.edges.is_empty());
        assert!(g.is_leaf(&StrVar::new("s")) && g.is_leaf(&StrVar::new("t")));
    }

    #[test]
    fn self_loop() {
        let g = build_dep_graph(&StrVar::new("s"), &[abs_sba()]);
        assert_eq!(g.edges, vec![(StrVar::new("s"), StrVar::new("s"))]);
        assert_eq!(cycle_count(&g), 1);
        for (v, leaf) in &g.vertices {
            if *leaf {
                assert!(g.edges.iter().all(|(a, _)| a != v));
            }
        }
    }

    #[test]
    fn two_cycles() {
        let s = StrVar::new("s");
        let t = StrVar::new("t");
        let g = DepGraph {
            root: s.clone(),
            vertices: [(s.clone(), false), (t.clone(), false)].into(),
            edges: vec![(s.clone(), t.clone()), (t.clone(), s.clone()), (s.clone(), s.clone())],
        };
        assert_eq!(cycle_count(&g), 2);
    }

    #[test]
    fn periodic_templates() {
        let n = E::var("n");
        assert!(is_periodic_arith(&[ArithAtom::eq(E::modulo(n.clone(), E::int(2)), E::int(0))]));
        assert!(is_periodic_arith(&[ArithAtom::eq(E::sub(E::var("x1"), E::var("x2")), E::int(5))]));
        assert!(!is_periodic_arith(&[ArithAtom::eq(E::max(E::var("x"), E::var("y")), E::int(3))]));
        assert!(is_periodic_arith(&[ArithAtom::eq(E::var("y"), E::add(E::scale(3, E::var("x")), E::int(1)))]));
        assert!(!is_periodic_arith(&[ArithAtom::leq(
            E::sum(vec![E::var("x"), E::var("y"), E::var("z")]),
            E::int(4)
        )]));
    }

    #[test]
    fn fragments() {
        let flagship = formula(
            vec![abs_sba()],
            vec![ArithAtom::eq(E::modulo(E::var("n"), E::int(2)), E::int(0))],
        );
        assert_eq!(classify_fragment(&flagship).tag, FragmentTag::OneSEA);
        let split = formula(vec![eq(v("s"), v("t").concat(v("u")))], vec![]);
        assert_eq!(classify_fragment(&split).tag, FragmentTag::ZeroSEA);
        let general = formula(
            vec![eq(v("s").concat(v("s")).concat(v("s")), v("t").concat(Term::word("a")))],
            vec![ArithAtom::eq(E::max(E::var("nt"), E::int(3)), E::int(3))],
        );
        let fr = classify_fragment(&general);
        assert_eq!(fr.tag, FragmentTag::General);
        assert!(fr.witness.is_some());
    }
}
