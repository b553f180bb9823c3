//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to the
//! real stderr (bypassing output capture) and then asserts.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sea_solver::arith::{arith_implies, sat_constraints, SatResult};
use sea_solver::ast::{
    equation_size, length_expr, Alphabet, ArithAtom, ArithExpr, Atom, Equation, IntVar, NormalizedFormula,
    StrVar, Term,
};
use sea_solver::classify::{classify_fragment, FragmentTag};
use sea_solver::engine::{
    export_tree, init_1sea, len_var, occurrences, over_approx, path_bound, solve, unfold, Answer, NodeStatus,
    OaMode, Rule, SolveConfig,
};
use sea_solver::frontend::{parse_problem, print_problem, Formula, Problem};
use sea_solver::gen::{system_vars, GenKind, Generator};
use sea_solver::oracle::{brute_force_normalized, brute_force_solve, eval_formula, eval_problem, Bound};
use sea_solver::reduce::{reduce_system, EquationSystem};
use sea_solver::regex::{compile, length_set};
use sea_solver::Int;

fn report(n: u32, name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n} [{verdict}] {name}: {detail}");
    assert!(ok, "criterion {n} failed: {detail}");
}

const FLAGSHIP: &str = r#"
(declare-str s)
(assert (= (str.++ "ab" s) (str.++ s "ba")))
(assert (str.in_re s (re.++ (re.* (str.to_re "ab")) (str.to_re "a"))))
(assert (= (mod (str.len s) 2) 0))
"#;

/// Instances of `kind` whose root formula is not in the general fragment.
fn corpus(kind: GenKind, seed: u64, n: usize, keep: impl Fn(FragmentTag) -> bool) -> Vec<Problem> {
    let mut g = Generator::new(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let p = g.generate(kind);
        let ds = p.disjuncts(4).unwrap();
        let f = init_1sea(&ds[0], &p.alphabet()).unwrap();
        if keep(classify_fragment(&f).tag) {
            out.push(p);
        }
    }
    out
}

fn in_1sea(t: FragmentTag) -> bool {
    t != FragmentTag::General
}

#[test]
fn c1_worked_example() {
    let p = parse_problem(FLAGSHIP).unwrap();
    let cfg = SolveConfig { oa: OaMode::LengthsOnly, ..Default::default() };
    let start = Instant::now();
    let sol = solve(&p, &cfg).unwrap();
    let elapsed = start.elapsed();
    let t = &sol.trees[0];
    let mut problems: Vec<String> = Vec::new();
    if sol.answer != Answer::Unsat {
        problems.push(format!("verdict {:?}", sol.answer));
    }
    if elapsed >= Duration::from_secs(1) {
        problems.push(format!("took {elapsed:?}"));
    }
    let shape_ok = t.nodes.len() == 5
        && t.root().children.len() == 2
        && t.node(t.root().children[0]).children.is_empty()
        && t.node(t.root().children[1]).children.len() == 2;
    if !shape_ok {
        problems.push(format!("tree has {} nodes with unexpected shape", t.nodes.len()));
    } else {
        let p11 = t.root().children[0];
        let p12 = t.root().children[1];
        let (p21, p22) = (t.node(p12).children[0], t.node(p12).children[1]);
        for id in [p11, p21] {
            if !matches!(t.node(id).status, NodeStatus::ClosedUnsat(_)) {
                problems.push(format!("π{id} is {:?}", t.node(id).status));
            }
        }
        match &t.node(p22).status {
            NodeStatus::BackLinked { target: 0, theta } => {
                let root_n = len_var(&StrVar::new("s"));
                // the leaf's current length variable takes the root's name,
                // and the root's own variable is renamed apart
                let leaf_n = match t.node(p22).formula.equations[0].lhs.atoms().last() {
                    Some(Atom::Str(_, n)) => n.clone(),
                    other => panic!("unexpected leaf equation end {other:?}"),
                };
                let renamed_to_root = theta.ints.get(&leaf_n) == Some(&root_n);
                let primed = theta.primed.get(&root_n).is_some_and(|v| v.name().ends_with('\''));
                if !renamed_to_root || !primed {
                    problems.push(format!("substitution {theta}"));
                }
                let map: BTreeMap<IntVar, IntVar> =
                    theta.ints.iter().chain(&theta.primed).map(|(a, b)| (a.clone(), b.clone())).collect();
                let hyp: Vec<ArithAtom> = t.full_arith(p22).iter().map(|a| a.rename_int(&map)).collect();
                if !arith_implies::<Int>(&hyp, &t.root().formula.arith).unwrap() {
                    problems.push("implication fails".into());
                }
            }
            other => problems.push(format!("π22 is {other:?}")),
        }
    }
    let dot = export_tree(t);
    let solid = dot.lines().filter(|l| l.contains("->") && !l.contains("dashed")).count();
    let dashed = dot.lines().filter(|l| l.contains("->") && l.contains("dashed")).count();
    if (solid, dashed) != (4, 1) {
        problems.push(format!("dot has {solid} tree edges and {dashed} back-edges"));
    }
    let detail = if problems.is_empty() {
        format!("unsat in {elapsed:?}, 5 nodes, back-link π4 → π0")
    } else {
        problems.join("; ")
    };
    report(1, "worked example", problems.is_empty(), &detail);
}

#[test]
fn c2_over_approximation() {
    let s = |u: &str, n: &str| Term::atom(Atom::Str(StrVar::new(u), IntVar::new(n)));
    let rhs = s("v", "nv").concat(s("u", "nu")).concat(Term::word("a")).concat(s("u", "nu")).concat(s("t", "nt"));
    let nonneg = |n: &str| ArithAtom::geq(ArithExpr::var(n), ArithExpr::int(0));
    let f = NormalizedFormula {
        equations: vec![Equation::new(s("u", "nu"), rhs.clone())],
        arith: vec![nonneg("nu"), nonneg("nv"), nonneg("nt")],
        ..Default::default()
    };
    let cs = over_approx(&f, OaMode::Full);
    let expected = ArithAtom::eq(ArithExpr::var("nu"), length_expr(&rhs));
    let has_eq = cs.iter().any(|c| matches!(c, sea_solver::arith::Constraint::Atom(a) if *a == expected));
    let unsat = matches!(sat_constraints::<Int>(&cs), Ok(SatResult::Unsat));
    report(2, "over-approximation", has_eq && unsat, &format!("abstraction {expected}, unsat={unsat}"));
}

#[test]
fn c3_c4_oracle_agreement() {
    let problems = corpus(GenKind::Mixed, 3, 200, in_1sea);
    let start = Instant::now();
    let mut counts = [0usize; 3];
    let mut bad_sat = Vec::new();
    let mut bad_unsat = Vec::new();
    let mut outcomes = Vec::new();
    for p in &problems {
        let sol = solve(p, &SolveConfig::default()).unwrap();
        outcomes.push(sol.answer);
    }
    let solve_time = start.elapsed();
    for (p, ans) in problems.iter().zip(&outcomes) {
        match ans {
            Answer::Sat(m) => {
                counts[0] += 1;
                if !eval_problem(p, m).unwrap_or(false) {
                    bad_sat.push(print_problem(p));
                }
            }
            Answer::Unsat => {
                counts[1] += 1;
                if brute_force_solve(p, Bound::new(8)).is_some() {
                    bad_unsat.push(print_problem(p));
                }
            }
            Answer::Unknown(_) => counts[2] += 1,
        }
    }
    let ok3 = bad_sat.is_empty() && solve_time < Duration::from_secs(60);
    report(
        3,
        "oracle agreement (sat)",
        ok3,
        &format!("{} sat / {} unsat / {} unknown in {solve_time:?}; bad models: {bad_sat:?}", counts[0], counts[1], counts[2]),
    );
    report(4, "oracle agreement (unsat)", bad_unsat.is_empty(), &format!("{} unsat verdicts, refuted: {bad_unsat:?}", counts[1]));
}

#[test]
fn c5_termination_bound() {
    let problems = corpus(GenKind::Linear, 5, 100, |t| t == FragmentTag::ZeroSEA);
    let mut failures = Vec::new();
    let mut longest = 0;
    for p in &problems {
        match solve(p, &SolveConfig::default()) {
            Ok(sol) => {
                if matches!(sol.answer, Answer::Unknown(_)) {
                    failures.push(format!("unknown: {}", print_problem(p)));
                }
                let t = &sol.trees[0];
                let bound = path_bound(&t.root().formula);
                if t.longest_path() > bound {
                    failures.push(format!("path {} > {bound}", t.longest_path()));
                }
                longest = longest.max(t.longest_path());
            }
            Err(e) => failures.push(format!("{e}: {}", print_problem(p))),
        }
    }
    report(5, "termination bound", failures.is_empty(), &format!("100 instances, longest path {longest}; {failures:?}"));
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

#[test]
fn c6_one_sea_termination() {
    let problems = corpus(GenKind::Twice, 6, 100, in_1sea);
    let mut failures = Vec::new();
    let mut max_unfoldings = 0;
    for p in &problems {
        match solve(p, &SolveConfig::default()) {
            Ok(sol) => {
                max_unfoldings = max_unfoldings.max(sol.unfoldings);
                if let Answer::Unknown(why) = &sol.answer {
                    failures.push(format!("unknown ({why}): {}", print_problem(p).replace('\n', " ")));
                }
                let root = &sol.trees[0].root().formula;
                let n = root.equations.iter().map(equation_size).max().unwrap_or(0);
                if n <= 6 && sol.trees[0].longest_path() > n * n * factorial(n) {
                    failures.push(format!("path {} at N={n}", sol.trees[0].longest_path()));
                }
            }
            Err(e) => failures.push(format!("{e}")),
        }
    }
    report(
        6,
        "1SEA termination",
        failures.is_empty(),
        &format!("100 instances, at most {max_unfoldings} unfoldings; {failures:?}"),
    );
}

/// Independent regex semantics by Brzozowski derivatives, with unions and
/// intersections kept as sets so that only finitely many derivatives arise.
mod deriv {
    use std::collections::BTreeSet;

    use sea_solver::ast::Regex;

    #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
    pub enum R {
        Empty,
        Eps,
        Chr(char),
        Cat(Box<R>, Box<R>),
        Or(BTreeSet<R>),
        And(BTreeSet<R>),
        Not(Box<R>),
        Star(Box<R>),
    }

    fn cat(a: R, b: R) -> R {
        match (a, b) {
            (R::Empty, _) | (_, R::Empty) => R::Empty,
            (R::Eps, x) | (x, R::Eps) => x,
            (R::Cat(x, y), z) => cat(*x, cat(*y, z)),
            (x, y) => R::Cat(Box::new(x), Box::new(y)),
        }
    }

    fn or(a: R, b: R) -> R {
        let mut set = BTreeSet::new();
        for x in [a, b] {
            match x {
                R::Empty => {}
                R::Or(s) => set.extend(s),
                x => {
                    set.insert(x);
                }
            }
        }
        match set.len() {
            0 => R::Empty,
            1 => set.into_iter().next().unwrap(),
            _ => R::Or(set),
        }
    }

    fn and(a: R, b: R) -> R {
        let mut set = BTreeSet::new();
        for x in [a, b] {
            match x {
                R::Empty => return R::Empty,
                R::And(s) => set.extend(s),
                x => {
                    set.insert(x);
                }
            }
        }
        if set.len() == 1 {
            set.into_iter().next().unwrap()
        } else {
            R::And(set)
        }
    }

    fn not(a: R) -> R {
        match a {
            R::Not(x) => *x,
            x => R::Not(Box::new(x)),
        }
    }

    fn star(a: R) -> R {
        match a {
            R::Empty | R::Eps => R::Eps,
            R::Star(x) => R::Star(x),
            x => R::Star(Box::new(x)),
        }
    }

    pub fn from(r: &Regex) -> R {
        match r {
            Regex::Empty => R::Empty,
            Regex::Eps => R::Eps,
            Regex::Lit(c) => R::Chr(*c),
            Regex::Word(cs) => cs.iter().rev().fold(R::Eps, |acc, c| cat(R::Chr(*c), acc)),
            Regex::Cat(a, b) => cat(from(a), from(b)),
            Regex::Union(a, b) => or(from(a), from(b)),
            Regex::Inter(a, b) => and(from(a), from(b)),
            Regex::Complement(a) => not(from(a)),
            Regex::Star(a) => star(from(a)),
        }
    }

    pub fn nullable(r: &R) -> bool {
        match r {
            R::Empty | R::Chr(_) => false,
            R::Eps | R::Star(_) => true,
            R::Cat(a, b) => nullable(a) && nullable(b),
            R::Or(s) => s.iter().any(nullable),
            R::And(s) => s.iter().all(nullable),
            R::Not(a) => !nullable(a),
        }
    }

    pub fn d(r: &R, c: char) -> R {
        match r {
            R::Empty | R::Eps => R::Empty,
            R::Chr(x) => {
                if *x == c {
                    R::Eps
                } else {
                    R::Empty
                }
            }
            R::Cat(a, b) => {
                let left = cat(d(a, c), (**b).clone());
                if nullable(a) {
                    or(left, d(b, c))
                } else {
                    left
                }
            }
            R::Or(s) => s.iter().fold(R::Empty, |acc, x| or(acc, d(x, c))),
            R::And(s) => {
                let mut it = s.iter();
                let first = d(it.next().unwrap(), c);
                it.fold(first, |acc, x| and(acc, d(x, c)))
            }
            R::Not(a) => not(d(a, c)),
            R::Star(a) => cat(d(a, c), R::Star(a.clone())),
        }
    }
}

#[test]
fn c7_regex_length_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut g = Generator::new(7);
    let all = ['a', 'b', 'c'];
    let mut mismatches = Vec::new();
    for _ in 0..200 {
        let k = rng.gen_range(1..=3);
        let sigma: Vec<char> = all[..k].to_vec();
        let r = g.regex(&sigma, 4);
        let alphabet = Alphabet::new(sigma.iter().copied());
        let ls = length_set(&compile(&r, &alphabet).unwrap());
        // all derivatives by words of each exact length
        let mut layer: BTreeSet<deriv::R> = BTreeSet::from([deriv::from(&r)]);
        for l in 0..=20usize {
            let expected = layer.iter().any(deriv::nullable);
            if ls.contains(l as i128) != expected {
                mismatches.push(format!("{r} at length {l}: {ls}"));
                break;
            }
            layer = layer.iter().flat_map(|x| sigma.iter().map(move |&c| deriv::d(x, c))).collect();
        }
    }
    report(7, "regex length sets", mismatches.is_empty(), &format!("200 regexes; {mismatches:?}"));
}

fn words(sigma: &[char], max: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for w in &frontier {
            for c in sigma {
                let mut v = w.clone();
                v.push(*c);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn solutions(eqs: &[Equation], vars: &[StrVar], sigma: &Alphabet, all: &[String]) -> BTreeSet<Vec<String>> {
    let f = Formula::And(eqs.iter().cloned().map(Formula::Equation).collect());
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; vars.len()];
    loop {
        let m = sea_solver::ast::Model {
            strings: vars.iter().zip(&idx).map(|(v, &i)| (v.clone(), all[i].clone())).collect(),
            ints: BTreeMap::new(),
        };
        if eval_formula(&f, sigma, &m).unwrap() {
            out.insert(idx.iter().map(|&i| all[i].clone()).collect());
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < all.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn c8_reduction() {
    let mut g = Generator::new(8);
    let sigma = Alphabet::new(['a', 'b']);
    let all = words(&['a', 'b'], 3);
    let mut failures = Vec::new();
    for _ in 0..100 {
        let eqs = g.system();
        let single = reduce_system(&EquationSystem { equations: eqs.clone(), alphabet: sigma.clone() }).unwrap();
        let vars: Vec<StrVar> = system_vars(&eqs).into_iter().collect();
        if system_vars(std::slice::from_ref(&single)).into_iter().collect::<Vec<_>>() != vars {
            failures.push(format!("unknowns changed for {eqs:?}"));
            continue;
        }
        if solutions(&eqs, &vars, &sigma, &all) != solutions(&[single], &vars, &sigma, &all) {
            let shown: Vec<String> = eqs.iter().map(|e| e.to_string()).collect();
            failures.push(format!("solution sets differ for {shown:?}"));
        }
    }
    report(8, "single-equation reduction", failures.is_empty(), &format!("100 systems; {failures:?}"));
}

/// Fired-rule size discipline on the first equation.
fn check_size(parent: &NormalizedFormula, rule: Rule, child: &NormalizedFormula) -> Option<String> {
    let old = equation_size(&parent.equations[0]);
    let new = child.equations.first().map(equation_size);
    match rule {
        Rule::ConstSucc => (new != Some(old - 2)).then(|| format!("CONST-SUCC {old} -> {new:?}")),
        Rule::SmallInductive => {
            let e = &parent.equations[0];
            let u = [e.lhs.atoms().first(), e.rhs.atoms().first()]
                .into_iter()
                .flatten()
                .find_map(|a| a.str_var())
                .unwrap();
            let occ = occurrences(std::slice::from_ref(e), u);
            (new != Some(old - 1 + (occ - 1))).then(|| format!("SMALL {old} -> {new:?} with {occ} occurrences"))
        }
        _ => None,
    }
}

#[test]
fn c9_unfold_equivalence() {
    let mut g = Generator::new(9);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let bound = Bound::new(6);
    let mut failures = Vec::new();
    let mut fired = 0usize;
    let mut checked = 0usize;
    while checked < 100 {
        let p = g.generate(GenKind::Small);
        let sigma = p.alphabet();
        let mut f = init_1sea(&p.disjuncts(4).unwrap()[0], &sigma).unwrap();
        // walk a few random steps down the tree
        for _ in 0..rng.gen_range(0..=3) {
            if f.equations.is_empty() {
                break;
            }
            let ch = unfold(&f).unwrap();
            match ch.choose(&mut rng) {
                Some(c) => f = c.formula.clone(),
                None => break,
            }
        }
        if f.equations.is_empty() {
            continue;
        }
        checked += 1;
        let children = unfold(&f).unwrap();
        for c in &children {
            fired += 1;
            if let Some(msg) = check_size(&f, c.rule, &c.formula) {
                failures.push(msg);
            }
        }
        let parent_sat = brute_force_normalized(&f, &sigma, bound).is_some();
        let child_sat = children.iter().any(|c| brute_force_normalized(&c.formula, &sigma, bound).is_some());
        if parent_sat != child_sat {
            failures.push(format!("parent {parent_sat} vs children {child_sat}: {f}"));
        }
    }
    report(9, "unfold equivalence", failures.is_empty(), &format!("100 formulas, {fired} children; {failures:?}"));
}
