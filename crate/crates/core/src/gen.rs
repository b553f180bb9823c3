//! Seeded random instances for testing and benchmarking.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::{ArithAtom, ArithExpr, Atom, Equation, Regex, StrVar, Term};
use crate::frontend::{Formula, Problem};

/// Instance families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum GenKind {
    /// Up to two variables, one equation, optional membership and modulus.
    Mixed,
    /// Linear systems of up to three equations.
    Linear,
    /// One equation in which a single variable occurs twice.
    Twice,
    /// Small formulas whose lengths are capped.
    Small,
}

pub struct Generator {
    rng: ChaCha8Rng,
    sigma: Vec<char>,
}

fn var(name: &str) -> Atom {
    Atom::Var(StrVar::new(name))
}

fn len(name: &str) -> ArithExpr {
    ArithExpr::len(name)
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Generator { rng: ChaCha8Rng::seed_from_u64(seed), sigma: vec!['a', 'b'] }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn generate(&mut self, kind: GenKind) -> Problem {
        match kind {
            GenKind::Mixed => self.mixed(),
            GenKind::Linear => self.linear(),
            GenKind::Twice => self.twice(),
            GenKind::Small => self.small(),
        }
    }

    fn ch(&mut self) -> Atom {
        Atom::Char(*self.sigma.choose(&mut self.rng).unwrap())
    }

    fn problem(&self, vars: &[&str], assertions: Vec<Formula>) -> Problem {
        Problem {
            str_vars: vars.iter().map(|v| StrVar::new(*v)).collect(),
            int_vars: Vec::new(),
            extra_alphabet: self.sigma.iter().copied().collect(),
            assertions,
        }
    }

    /// Split `atoms` at a random point into the two sides of an equation.
    fn split_sides(&mut self, mut atoms: Vec<Atom>) -> Equation {
        atoms.shuffle(&mut self.rng);
        let cut = self.rng.gen_range(0..=atoms.len());
        let rhs = atoms.split_off(cut);
        Equation::new(Term(atoms), Term(rhs))
    }

    /// An equation over `vars` with `size` atoms, mentioning each variable.
    fn equation(&mut self, vars: &[&str], size: usize) -> Equation {
        let mut atoms: Vec<Atom> = vars.iter().map(|v| var(v)).collect();
        while atoms.len() < size {
            if self.rng.gen_bool(0.6) {
                atoms.push(self.ch());
            } else {
                atoms.push(var(vars.choose(&mut self.rng).unwrap()));
            }
        }
        self.split_sides(atoms)
    }

    fn membership(&mut self, v: &str) -> Formula {
        let r = self.regex(&self.sigma.clone(), 2);
        Formula::Member(Term::atom(var(v)), r)
    }

    fn modulus(&mut self, v: &str) -> Formula {
        let p = self.rng.gen_range(2..=3);
        let r = self.rng.gen_range(0..p);
        Formula::Arith(ArithAtom::eq(ArithExpr::modulo(len(v), ArithExpr::int(p)), ArithExpr::int(r)))
    }

    fn mixed(&mut self) -> Problem {
        let vars: &[&str] = if self.rng.gen_bool(0.5) { &["x"] } else { &["x", "y"] };
        let size = self.rng.gen_range(vars.len().max(2)..=8);
        let mut fs = vec![Formula::Equation(self.equation(vars, size))];
        if self.rng.gen_bool(0.5) {
            let v = *vars.choose(&mut self.rng).unwrap();
            fs.push(self.membership(v));
        }
        if self.rng.gen_bool(0.5) {
            let v = *vars.choose(&mut self.rng).unwrap();
            fs.push(self.modulus(v));
        }
        self.problem(vars, fs)
    }

    /// Every variable occurs at most once in the whole system.
    fn linear(&mut self) -> Problem {
        let m = self.rng.gen_range(1..=3);
        let mut names: Vec<String> = Vec::new();
        let mut fs = Vec::new();
        for _ in 0..m {
            let size = self.rng.gen_range(1..=8);
            let mut atoms = Vec::new();
            for _ in 0..size {
                if self.rng.gen_bool(0.5) {
                    atoms.push(self.ch());
                } else {
                    let v = format!("v{}", names.len());
                    atoms.push(var(&v));
                    names.push(v);
                }
            }
            fs.push(Formula::Equation(self.split_sides(atoms)));
        }
        if !names.is_empty() && self.rng.gen_bool(0.3) {
            let v = names.choose(&mut self.rng).unwrap().clone();
            fs.push(self.membership(&v));
        }
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        self.problem(&refs, fs)
    }

    /// `x` twice, possibly `y` once, characters elsewhere; octagonal or
    /// modular length constraints.
    fn twice(&mut self) -> Problem {
        let with_y = self.rng.gen_bool(0.3);
        let vars: &[&str] = if with_y { &["x", "y"] } else { &["x"] };
        let size = self.rng.gen_range(3..=8);
        let mut atoms = vec![var("x"), var("x")];
        if with_y {
            atoms.push(var("y"));
        }
        while atoms.len() < size {
            atoms.push(self.ch());
        }
        let mut fs = vec![Formula::Equation(self.split_sides(atoms))];
        for _ in 0..self.rng.gen_range(0..=2) {
            let v = *vars.choose(&mut self.rng).unwrap();
            let k = self.rng.gen_range(0..=6);
            let f = match self.rng.gen_range(0..4) {
                0 => ArithAtom::leq(len(v), ArithExpr::int(k)),
                1 => ArithAtom::geq(len(v), ArithExpr::int(k)),
                2 if with_y => ArithAtom::leq(ArithExpr::sub(len("x"), len("y")), ArithExpr::int(k - 3)),
                _ => match self.modulus(v) {
                    Formula::Arith(a) => a,
                    _ => unreachable!(),
                },
            };
            fs.push(Formula::Arith(f));
        }
        self.problem(vars, fs)
    }

    /// Lengths capped at 3, so that bounded enumeration at 6 is exhaustive
    /// for every formula reachable by unfolding.
    fn small(&mut self) -> Problem {
        let vars: &[&str] = if self.rng.gen_bool(0.5) { &["x"] } else { &["x", "y"] };
        let size = self.rng.gen_range(2..=6);
        let mut fs = vec![Formula::Equation(self.equation(vars, size))];
        if self.rng.gen_bool(0.3) {
            let v = *vars.choose(&mut self.rng).unwrap();
            fs.push(self.membership(v));
        }
        for v in vars {
            fs.push(Formula::Arith(ArithAtom::leq(len(v), ArithExpr::int(3))));
        }
        self.problem(vars, fs)
    }

    /// A random regex over `sigma` of depth at most `depth`.
    pub fn regex(&mut self, sigma: &[char], depth: usize) -> Regex {
        if depth <= 1 || self.rng.gen_bool(0.25) {
            return match self.rng.gen_range(0..10) {
                0 => Regex::Eps,
                1 => Regex::Empty,
                2 | 3 => {
                    let n = self.rng.gen_range(2..=3);
                    let w: String = (0..n).map(|_| *sigma.choose(&mut self.rng).unwrap()).collect();
                    Regex::word(&w)
                }
                _ => Regex::Lit(*sigma.choose(&mut self.rng).unwrap()),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..9) {
            0 | 1 => Regex::cat(self.regex(sigma, d), self.regex(sigma, d)),
            2 | 3 => Regex::union(self.regex(sigma, d), self.regex(sigma, d)),
            4 | 5 => Regex::star(self.regex(sigma, d)),
            6 => Regex::inter(self.regex(sigma, d), self.regex(sigma, d)),
            7 => Regex::complement(self.regex(sigma, d)),
            _ => Regex::cat(Regex::star(self.regex(sigma, d.saturating_sub(1))), self.regex(sigma, d)),
        }
    }

    /// Two or three equations over `x, y, z` with at most four atoms a side.
    pub fn system(&mut self) -> Vec<Equation> {
        let m = self.rng.gen_range(2..=3);
        let names = ["x", "y", "z"];
        (0..m)
            .map(|_| {
                let size = self.rng.gen_range(1..=5);
                let atoms: Vec<Atom> = (0..size)
                    .map(|_| if self.rng.gen_bool(0.5) { self.ch() } else { var(names.choose(&mut self.rng).unwrap()) })
                    .collect();
                self.split_sides(atoms)
            })
            .collect()
    }
}

/// Variables mentioned by a set of equations.
pub fn system_vars(eqs: &[Equation]) -> BTreeSet<StrVar> {
    eqs.iter().flat_map(|e| e.str_vars().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_problem, print_problem};

    #[test]
    fn deterministic_per_seed() {
        let a = print_problem(&Generator::new(7).generate(GenKind::Mixed));
        let b = print_problem(&Generator::new(7).generate(GenKind::Mixed));
        assert_eq!(a, b);
    }

    #[test]
    fn generated_text_parses() {
        let mut g = Generator::new(1);
        for kind in [GenKind::Mixed, GenKind::Linear, GenKind::Twice, GenKind::Small] {
            for _ in 0..20 {
                let p = g.generate(kind);
                let text = print_problem(&p);
                assert!(parse_problem(&text).is_ok(), "{text}");
            }
        }
    }

    #[test]
    fn regex_depth_is_bounded() {
        let mut g = Generator::new(3);
        for _ in 0..100 {
            let r = g.regex(&['a', 'b', 'c'], 4);
            assert!(r.depth() <= 4, "{r:?}");
        }
    }
}
