use std::collections::{BTreeMap, BTreeSet};

use super::tree::{NodeId, Theta, TreeNode, UnfoldingTree};
use crate::arith::implies_projected;
use crate::ast::{ArithAtom, Atom, IntVar, Membership, NormalizedFormula, StrVar, Term};
use crate::Int;

const PERMUTATION_CAP: usize = 10_000;

/// Look for an ancestor that `leaf` is an instance of, nearest first.
///
/// The segment must contain a progress step. Every such step strictly lowers
/// the summed length of the predicates in the equations while no rule raises
/// it, so each cycle through a back-link shrinks the model.
pub fn link_back(tree: &UnfoldingTree, leaf: NodeId) -> Option<(NodeId, Theta)> {
    let lf = &tree.node(leaf).formula;
    if lf.equations.is_empty() {
        return None;
    }
    let leaf = tree.node(leaf);
    let mut progress = leaf.rule.is_some_and(|r| r.makes_progress());
    for anc in tree.ancestors(leaf.id) {
        let anc = tree.node(anc);
        if progress && anc.shape == leaf.shape && same_shape(lf, &anc.formula) {
            if let Some(theta) = find_instance(tree, leaf, anc) {
                return Some((anc.id, theta));
            }
        }
        progress |= anc.rule.is_some_and(|r| r.makes_progress());
    }
    None
}

/// Atom kinds line up position by position.
fn same_shape(l: &NormalizedFormula, a: &NormalizedFormula) -> bool {
    fn kinds(t: &Term) -> Vec<bool> {
        t.atoms().iter().map(|x| matches!(x, Atom::Char(_))).collect()
    }
    l.equations.len() == a.equations.len()
        && l.memberships.len() == a.memberships.len()
        && l.equations
            .iter()
            .zip(&a.equations)
            .all(|(x, y)| kinds(&x.lhs) == kinds(&y.lhs) && kinds(&x.rhs) == kinds(&y.rhs))
}

#[derive(Clone, Default)]
struct Maps {
    strings: BTreeMap<StrVar, StrVar>,
    ints: BTreeMap<IntVar, IntVar>,
}

impl Maps {
    fn bind<K: Ord + Clone, V: Ord + Clone>(map: &mut BTreeMap<K, V>, k: &K, v: &V) -> bool {
        match map.get(k) {
            Some(w) => w == v,
            None => {
                if map.values().any(|w| w == v) {
                    return false;
                }
                map.insert(k.clone(), v.clone());
                true
            }
        }
    }

    fn match_term(&mut self, l: &Term, a: &Term, chars: &BTreeMap<char, char>) -> bool {
        l.len() == a.len()
            && l.atoms().iter().zip(a.atoms()).all(|pair| match pair {
                (Atom::Char(x), Atom::Char(y)) => chars.get(x).unwrap_or(x) == y,
                (Atom::Str(u, n), Atom::Str(v, m)) => {
                    Self::bind(&mut self.strings, u, v) && Self::bind(&mut self.ints, n, m)
                }
                _ => false,
            })
    }
}

/// Characters forced by the equations, or `None` on a clash.
fn forced_chars(l: &NormalizedFormula, a: &NormalizedFormula) -> Option<BTreeMap<char, char>> {
    let mut pi = BTreeMap::new();
    for (x, y) in l.equations.iter().zip(&a.equations) {
        for (p, q) in x.lhs.atoms().iter().chain(x.rhs.atoms()).zip(y.lhs.atoms().iter().chain(y.rhs.atoms())) {
            if let (Atom::Char(c), Atom::Char(d)) = (p, q) {
                if !Maps::bind(&mut pi, c, d) {
                    return None;
                }
            }
        }
    }
    Some(pi)
}

/// Completions of `forced` to a bijection on `chars`, identity-like first.
fn completions(forced: &BTreeMap<char, char>, chars: &BTreeSet<char>) -> Vec<BTreeMap<char, char>> {
    let dom: Vec<char> = chars.iter().copied().filter(|c| !forced.contains_key(c)).collect();
    let used: BTreeSet<char> = forced.values().copied().collect();
    let rng: Vec<char> = chars.iter().copied().filter(|c| !used.contains(c)).collect();
    // forced images outside `chars` leave the domain larger than the range
    if rng.len() < dom.len() {
        return vec![];
    }
    let mut out = Vec::new();
    let mut cur = forced.clone();
    let mut taken = vec![false; rng.len()];
    fn go(
        i: usize,
        dom: &[char],
        rng: &[char],
        taken: &mut [bool],
        cur: &mut BTreeMap<char, char>,
        out: &mut Vec<BTreeMap<char, char>>,
    ) {
        if out.len() >= PERMUTATION_CAP {
            return;
        }
        if i == dom.len() {
            out.push(cur.clone());
            return;
        }
        // try the identity image first
        let mut order: Vec<usize> = (0..rng.len()).collect();
        order.sort_by_key(|&j| rng[j] != dom[i]);
        for j in order {
            if !taken[j] {
                taken[j] = true;
                cur.insert(dom[i], rng[j]);
                go(i + 1, dom, rng, taken, cur, out);
                cur.remove(&dom[i]);
                taken[j] = false;
            }
        }
    }
    go(0, &dom, &rng, &mut taken, &mut cur, &mut out);
    out
}

/// Matching is structural on the formulas; the implication uses the
/// projected constraints of both nodes.
fn find_instance(tree: &UnfoldingTree, leaf: &TreeNode, anc: &TreeNode) -> Option<Theta> {
    let (l, a) = (&leaf.formula, &anc.formula);
    let forced = forced_chars(l, a)?;
    let mut chars: BTreeSet<char> = BTreeSet::new();
    for f in [l, a] {
        for t in f.terms() {
            chars.extend(t.chars());
        }
    }
    chars.extend(forced.keys().chain(forced.values()));
    let mut names: Option<(BTreeSet<IntVar>, BTreeSet<IntVar>)> = None;
    for pi in completions(&forced, &chars) {
        let mut maps = Maps::default();
        let eqs_ok = l
            .equations
            .iter()
            .zip(&a.equations)
            .all(|(x, y)| maps.match_term(&x.lhs, &y.lhs, &pi) && maps.match_term(&x.rhs, &y.rhs, &pi));
        if !eqs_ok {
            continue;
        }
        let pi_nontrivial: BTreeMap<char, char> = pi.iter().filter(|(c, d)| c != d).map(|(c, d)| (*c, *d)).collect();
        let Some(maps) = match_memberships(&l.memberships, &a.memberships, maps, &pi_nontrivial) else {
            continue;
        };
        let (leaf_vars, anc_vars) = names.get_or_insert_with(|| (tree.int_vars(leaf.id), tree.int_vars(anc.id)));
        let theta = build_theta(leaf_vars, anc_vars, maps, pi_nontrivial);
        let renamed: Vec<ArithAtom> = leaf.core.iter().map(|x| x.rename_int(&full_rename(&theta))).collect();
        let keep: BTreeSet<IntVar> = theta.ints.values().cloned().collect();
        if implies_projected::<Int>(&renamed, &anc.core, &keep).unwrap_or(false) {
            return Some(theta);
        }
    }
    None
}

/// Memberships match as multisets.
fn match_memberships(
    l: &[Membership],
    a: &[Membership],
    maps: Maps,
    pi: &BTreeMap<char, char>,
) -> Option<Maps> {
    fn go(i: usize, l: &[Membership], a: &[Membership], used: &mut [bool], maps: Maps, pi: &BTreeMap<char, char>) -> Option<Maps> {
        if i == l.len() {
            return Some(maps);
        }
        let dfa = if pi.is_empty() { (*l[i].lang.dfa).clone() } else { l[i].lang.dfa.permute(pi) };
        for j in 0..a.len() {
            if used[j] || *a[j].lang.dfa != dfa {
                continue;
            }
            let mut m = maps.clone();
            if m.match_term(&l[i].term, &a[j].term, pi) {
                used[j] = true;
                if let Some(done) = go(i + 1, l, a, used, m, pi) {
                    return Some(done);
                }
                used[j] = false;
            }
        }
        None
    }
    let mut used = vec![false; a.len()];
    go(0, l, a, &mut used, maps, pi)
}

/// Leaf integers not mapped by the isomorphism but named like something in
/// the ancestor get primed names.
fn build_theta(
    leaf_vars: &BTreeSet<IntVar>,
    anc_vars: &BTreeSet<IntVar>,
    maps: Maps,
    chars: BTreeMap<char, char>,
) -> Theta {
    let taken: BTreeSet<&IntVar> = anc_vars.iter().chain(leaf_vars).chain(maps.ints.values()).collect();
    let mut primed = BTreeMap::new();
    let mut fresh: BTreeSet<IntVar> = BTreeSet::new();
    for v in leaf_vars {
        if maps.ints.contains_key(v) {
            continue;
        }
        if anc_vars.contains(v) || maps.ints.values().any(|w| w == v) {
            let mut name = format!("{v}'");
            while taken.contains(&IntVar(name.clone())) || fresh.contains(&IntVar(name.clone())) {
                name.push('\'');
            }
            fresh.insert(IntVar(name.clone()));
            primed.insert(v.clone(), IntVar(name));
        }
    }
    Theta { chars, strings: maps.strings, ints: maps.ints, primed }
}

fn full_rename(theta: &Theta) -> BTreeMap<IntVar, IntVar> {
    theta.ints.iter().chain(&theta.primed).map(|(k, v)| (k.clone(), v.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_completion_comes_first() {
        let chars: BTreeSet<char> = ['a', 'b', 'c'].into();
        let all = completions(&BTreeMap::new(), &chars);
        assert_eq!(all.len(), 6);
        assert!(all[0].iter().all(|(c, d)| c == d));
        let forced = BTreeMap::from([('a', 'b')]);
        let some = completions(&forced, &chars);
        assert_eq!(some.len(), 2);
        assert!(some.iter().all(|p| p[&'a'] == 'b'));
    }

    #[test]
    fn primes_avoid_clashes() {
        let l: BTreeSet<IntVar> = [IntVar::new("n"), IntVar::new("m")].into();
        let anc: BTreeSet<IntVar> = [IntVar::new("n")].into();
        let maps = Maps { strings: BTreeMap::new(), ints: BTreeMap::from([(IntVar::new("m"), IntVar::new("n"))]) };
        let theta = build_theta(&l, &anc, maps, BTreeMap::new());
        assert_eq!(theta.primed[&IntVar::new("n")], IntVar::new("n'"));
        assert_eq!(theta.to_string(), "[n'/n, n/m]");
    }
}
