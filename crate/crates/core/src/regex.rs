//! Regular expressions compiled to complete, minimal, canonically numbered
//! DFAs over a fixed alphabet, plus the unary (length) projection of a DFA.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::ast::{Alphabet, Regex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegexError {
    #[error("character {0:?} in regular expression is outside the alphabet")]
    LiteralOutsideAlphabet(char),
}

/// Complete deterministic automaton. After [`Dfa::canonical`] every state is
/// reachable, states are pairwise inequivalent (so at most one sink), and
/// states are numbered in breadth-first order from the start state with
/// symbols visited in alphabet order. Two canonical DFAs over the same
/// alphabet are equal iff their languages are.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Dfa {
    alphabet: Alphabet,
    /// `trans[q][i]` is the successor of `q` on the `i`-th alphabet symbol.
    trans: Vec<Vec<usize>>,
    start: usize,
    accepting: Vec<bool>,
}

impl Dfa {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.trans.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    /// Successor on the symbol with alphabet index `sym`.
    pub fn step_index(&self, q: usize, sym: usize) -> usize {
        self.trans[q][sym]
    }

    /// Successor on `c`; `None` when `c` is outside the alphabet.
    pub fn step(&self, q: usize, c: char) -> Option<usize> {
        self.alphabet.index_of(c).map(|i| self.trans[q][i])
    }

    pub fn run(&self, q: usize, w: &str) -> Option<usize> {
        w.chars().try_fold(q, |q, c| self.step(q, c))
    }

    pub fn accepts(&self, w: &str) -> bool {
        self.run(self.start, w).is_some_and(|q| self.accepting[q])
    }

    pub fn accepts_epsilon(&self) -> bool {
        self.accepting[self.start]
    }

    pub fn is_empty_language(&self) -> bool {
        !self.accepting.iter().any(|&a| a)
    }

    fn empty(alphabet: &Alphabet) -> Dfa {
        Dfa {
            alphabet: alphabet.clone(),
            trans: vec![vec![0; alphabet.len()]],
            start: 0,
            accepting: vec![false],
        }
    }

    fn word(alphabet: &Alphabet, w: &[char]) -> Result<Dfa, RegexError> {
        let k = alphabet.len();
        let n = w.len();
        let sink = n + 1;
        let mut trans = vec![vec![sink; k]; n + 2];
        for (i, c) in w.iter().enumerate() {
            let idx = alphabet.index_of(*c).ok_or(RegexError::LiteralOutsideAlphabet(*c))?;
            trans[i][idx] = i + 1;
        }
        let mut accepting = vec![false; n + 2];
        accepting[n] = true;
        Ok(Dfa { alphabet: alphabet.clone(), trans, start: 0, accepting }.canonical())
    }

    fn all(alphabet: &Alphabet) -> Dfa {
        Dfa {
            alphabet: alphabet.clone(),
            trans: vec![vec![0; alphabet.len()]],
            start: 0,
            accepting: vec![true],
        }
    }

    fn product(&self, other: &Dfa, op: impl Fn(bool, bool) -> bool) -> Dfa {
        let k = self.alphabet.len();
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut order = vec![(self.start, other.start)];
        index.insert((self.start, other.start), 0);
        let mut trans = Vec::new();
        let mut i = 0;
        while i < order.len() {
            let (p, q) = order[i];
            let mut row = Vec::with_capacity(k);
            for s in 0..k {
                let next = (self.trans[p][s], other.trans[q][s]);
                let id = *index.entry(next).or_insert_with(|| {
                    order.push(next);
                    order.len() - 1
                });
                row.push(id);
            }
            trans.push(row);
            i += 1;
        }
        let accepting =
            order.iter().map(|&(p, q)| op(self.accepting[p], other.accepting[q])).collect();
        Dfa { alphabet: self.alphabet.clone(), trans, start: 0, accepting }.canonical()
    }

    fn complement(&self) -> Dfa {
        let mut d = self.clone();
        for a in d.accepting.iter_mut() {
            *a = !*a;
        }
        d.canonical()
    }

    /// Subset construction for `L(self) · L(other)`.
    fn concat(&self, other: &Dfa) -> Dfa {
        let k = self.alphabet.len();
        let close = |q: usize, mut set: BTreeSet<usize>| {
            if self.accepting[q] {
                set.insert(other.start);
            }
            (q, set)
        };
        let init = close(self.start, BTreeSet::new());
        let mut index: HashMap<(usize, BTreeSet<usize>), usize> = HashMap::new();
        index.insert(init.clone(), 0);
        let mut order = vec![init];
        let mut trans = Vec::new();
        let mut i = 0;
        while i < order.len() {
            let (q, set) = order[i].clone();
            let mut row = Vec::with_capacity(k);
            for s in 0..k {
                let moved: BTreeSet<usize> = set.iter().map(|&p| other.trans[p][s]).collect();
                let next = close(self.trans[q][s], moved);
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        order.push(next.clone());
                        index.insert(next, order.len() - 1);
                        order.len() - 1
                    }
                };
                row.push(id);
            }
            trans.push(row);
            i += 1;
        }
        let accepting =
            order.iter().map(|(_, set)| set.iter().any(|&p| other.accepting[p])).collect();
        Dfa { alphabet: self.alphabet.clone(), trans, start: 0, accepting }.canonical()
    }

    /// Subset construction for `L(self)*`.
    fn star(&self) -> Dfa {
        let k = self.alphabet.len();
        // `None` is the fresh accepting start state of the Kleene closure.
        let mut index: HashMap<Option<BTreeSet<usize>>, usize> = HashMap::new();
        index.insert(None, 0);
        let mut order: Vec<Option<BTreeSet<usize>>> = vec![None];
        let mut trans = Vec::new();
        let mut i = 0;
        while i < order.len() {
            let set = match &order[i] {
                None => BTreeSet::from([self.start]),
                Some(s) => s.clone(),
            };
            let mut row = Vec::with_capacity(k);
            for s in 0..k {
                let mut moved: BTreeSet<usize> = set.iter().map(|&p| self.trans[p][s]).collect();
                if moved.iter().any(|&p| self.accepting[p]) {
                    moved.insert(self.start);
                }
                let key = Some(moved);
                let id = match index.get(&key) {
                    Some(&id) => id,
                    None => {
                        order.push(key.clone());
                        index.insert(key, order.len() - 1);
                        order.len() - 1
                    }
                };
                row.push(id);
            }
            trans.push(row);
            i += 1;
        }
        let accepting = order
            .iter()
            .map(|s| match s {
                None => true,
                Some(set) => set.iter().any(|&p| self.accepting[p]),
            })
            .collect();
        Dfa { alphabet: self.alphabet.clone(), trans, start: 0, accepting }.canonical()
    }

    /// Trim unreachable states, merge equivalent ones (Moore refinement),
    /// and renumber breadth-first.
    pub fn canonical(&self) -> Dfa {
        let k = self.alphabet.len();
        // reachable states in BFS order
        let mut seen = vec![usize::MAX; self.trans.len()];
        let mut order = vec![self.start];
        seen[self.start] = 0;
        let mut i = 0;
        while i < order.len() {
            let q = order[i];
            for s in 0..k {
                let p = self.trans[q][s];
                if seen[p] == usize::MAX {
                    seen[p] = order.len();
                    order.push(p);
                }
            }
            i += 1;
        }
        let n = order.len();
        let trans: Vec<Vec<usize>> =
            order.iter().map(|&q| self.trans[q].iter().map(|&p| seen[p]).collect()).collect();
        let accepting: Vec<bool> = order.iter().map(|&q| self.accepting[q]).collect();

        // Moore partition refinement
        let mut class: Vec<usize> = accepting.iter().map(|&a| usize::from(a)).collect();
        loop {
            let mut sig_index: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
            let mut next = vec![0; n];
            for q in 0..n {
                let sig = (class[q], trans[q].iter().map(|&p| class[p]).collect::<Vec<_>>());
                let len = sig_index.len();
                next[q] = *sig_index.entry(sig).or_insert(len);
            }
            let before = class.iter().collect::<BTreeSet<_>>().len();
            let after = sig_index.len();
            class = next;
            if before == after {
                break;
            }
        }

        // renumber classes breadth-first from the start class
        let mut num = vec![usize::MAX; n];
        let mut reps = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        num[class[0]] = 0;
        reps.push(0usize);
        while let Some(q) = queue.pop_front() {
            for &p in &trans[q][..k] {
                if num[class[p]] == usize::MAX {
                    num[class[p]] = reps.len();
                    reps.push(p);
                    queue.push_back(p);
                }
            }
        }
        let trans = reps.iter().map(|&q| trans[q].iter().map(|&p| num[class[p]]).collect()).collect();
        let accepting = reps.iter().map(|&q| accepting[q]).collect();
        Dfa { alphabet: self.alphabet.clone(), trans, start: 0, accepting }
    }

    /// Left quotient by `w`: `{ x | w·x ∈ L }`.
    pub fn derive_word(&self, w: &str) -> Dfa {
        match self.run(self.start, w) {
            None => Dfa::empty(&self.alphabet),
            Some(q) => Dfa { start: q, ..self.clone() }.canonical(),
        }
    }

    /// Rename symbols by a bijection on the alphabet (symbols missing from
    /// `perm` are fixed).
    pub fn permute(&self, perm: &BTreeMap<char, char>) -> Dfa {
        let k = self.alphabet.len();
        let chars = self.alphabet.chars();
        let mut trans = vec![vec![0; k]; self.trans.len()];
        for (q, row) in self.trans.iter().enumerate() {
            for (i, &c) in chars.iter().enumerate() {
                let d = perm.get(&c).copied().unwrap_or(c);
                let j = self.alphabet.index_of(d).expect("permutation stays inside the alphabet");
                trans[q][j] = row[i];
            }
        }
        Dfa { alphabet: self.alphabet.clone(), trans, start: self.start, accepting: self.accepting.clone() }
            .canonical()
    }

    /// The set of word lengths of the language.
    pub fn length_set(&self) -> SemilinearLengthSet {
        length_set(self)
    }
}

/// Compile `r` to a canonical DFA over `sigma`.
pub fn compile(r: &Regex, sigma: &Alphabet) -> Result<Dfa, RegexError> {
    Ok(match r {
        Regex::Empty => Dfa::empty(sigma),
        Regex::Eps => Dfa::word(sigma, &[])?,
        Regex::Lit(c) => Dfa::word(sigma, &[*c])?,
        Regex::Word(w) => Dfa::word(sigma, w)?,
        Regex::Cat(a, b) => compile(a, sigma)?.concat(&compile(b, sigma)?),
        Regex::Union(a, b) => compile(a, sigma)?.product(&compile(b, sigma)?, |x, y| x || y),
        Regex::Inter(a, b) => compile(a, sigma)?.product(&compile(b, sigma)?, |x, y| x && y),
        Regex::Complement(a) => compile(a, sigma)?.complement(),
        Regex::Star(a) => compile(a, sigma)?.star(),
    })
}

/// `Σ*` over the given alphabet.
pub fn universal(sigma: &Alphabet) -> Dfa {
    Dfa::all(sigma)
}

pub fn accepts(d: &Dfa, w: &str) -> bool {
    d.accepts(w)
}

/// An ultimately periodic set of naturals: a finite part plus arithmetic
/// progressions `{offset + k·period | k ≥ 0}`. In normal form the period is
/// shared and minimal, every progression offset is as small as possible,
/// and the finite part is disjoint from all progressions.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SemilinearLengthSet {
    pub finite: BTreeSet<u64>,
    pub progressions: Vec<(u64, u64)>,
}

impl SemilinearLengthSet {
    pub fn contains(&self, n: i128) -> bool {
        if n < 0 {
            return false;
        }
        let n = n as u64;
        self.finite.contains(&n)
            || self.progressions.iter().any(|&(o, p)| n >= o && (n - o).is_multiple_of(p))
    }

    pub fn is_empty(&self) -> bool {
        self.finite.is_empty() && self.progressions.is_empty()
    }

    fn from_predicate(pre: usize, per: usize, member: impl Fn(usize) -> bool) -> Self {
        // membership is periodic with period `per` from `pre` on
        let window: Vec<bool> = (pre..pre + per).map(&member).collect();
        let p = (1..=per)
            .find(|d| per.is_multiple_of(*d) && (0..per).all(|i| window[i] == window[(i + d) % per]))
            .unwrap_or(per);
        let mem = |n: usize| if n < pre { member(n) } else { window[(n - pre) % per] };
        let mut m = pre;
        while m > 0 && mem(m - 1) == mem(m - 1 + p) {
            m -= 1;
        }
        let mut progressions = Vec::new();
        for r in m..m + p {
            if mem(r) {
                let mut o = r;
                while o >= p && mem(o - p) {
                    o -= p;
                }
                progressions.push((o as u64, p as u64));
            }
        }
        progressions.sort();
        let finite = (0..m)
            .filter(|&n| mem(n))
            .map(|n| n as u64)
            .filter(|&n| !progressions.iter().any(|&(o, p)| n >= o && (n - o).is_multiple_of(p)))
            .collect();
        SemilinearLengthSet { finite, progressions }
    }
}

impl fmt::Display for SemilinearLengthSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.finite.iter().map(|n| n.to_string()).collect();
        parts.extend(self.progressions.iter().map(|(o, p)| format!("{o}+{p}k")));
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Lengths of `L(d)`, read off the unary projection of `d`: the sets of
/// states reachable in exactly `L` steps form an ultimately periodic sequence.
pub fn length_set(d: &Dfa) -> SemilinearLengthSet {
    let n = d.num_states();
    let succ: Vec<Vec<usize>> = d
        .trans
        .iter()
        .map(|row| row.iter().copied().collect::<BTreeSet<_>>().into_iter().collect())
        .collect();
    let mut seen: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut layers: Vec<Vec<bool>> = Vec::new();
    let mut cur = vec![false; n];
    cur[d.start] = true;
    let (pre, per) = loop {
        if let Some(&i) = seen.get(&cur) {
            break (i, layers.len() - i);
        }
        seen.insert(cur.clone(), layers.len());
        let mut next = vec![false; n];
        for (q, &on) in cur.iter().enumerate() {
            if on {
                for &p in &succ[q] {
                    next[p] = true;
                }
            }
        }
        layers.push(std::mem::replace(&mut cur, next));
    };
    let member = |l: usize| {
        let layer = if l < layers.len() { &layers[l] } else { &layers[pre + (l - pre) % per] };
        layer.iter().zip(&d.accepting).any(|(&on, &acc)| on && acc)
    };
    SemilinearLengthSet::from_predicate(pre, per, member)
}

/// Shortest accepted word whose length satisfies `allowed`, searching lengths
/// up to `cap`. Among words of that length the lexicographically least one is
/// returned.
pub fn witness_with_length(d: &Dfa, allowed: impl Fn(u64) -> bool, cap: u64) -> Option<String> {
    let chars = d.alphabet.chars();
    let mut layer: BTreeMap<usize, String> = BTreeMap::from([(d.start, String::new())]);
    for len in 0..=cap {
        if allowed(len) {
            if let Some(w) =
                layer.iter().filter(|(q, _)| d.accepting[**q]).map(|(_, w)| w).min()
            {
                return Some(w.clone());
            }
        }
        if len == cap || layer.is_empty() {
            break;
        }
        let mut next: BTreeMap<usize, String> = BTreeMap::new();
        for (q, w) in &layer {
            for (i, &c) in chars.iter().enumerate() {
                let p = d.trans[*q][i];
                let mut cand = w.clone();
                cand.push(c);
                match next.get(&p) {
                    Some(old) if *old <= cand => {}
                    _ => {
                        next.insert(p, cand);
                    }
                }
            }
        }
        layer = next;
    }
    None
}
