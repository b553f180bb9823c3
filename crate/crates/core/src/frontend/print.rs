use std::fmt::Write;

use super::{Formula, Problem};
use crate::ast::{ArithAtom, ArithExpr, ArithKind, Atom, Regex, Term};
use crate::engine::Answer;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn term(t: &Term) -> String {
    // maximal runs of characters become one literal
    let mut parts: Vec<String> = Vec::new();
    let mut run = String::new();
    for a in t.atoms() {
        match a {
            Atom::Char(c) => run.push(*c),
            Atom::Var(v) | Atom::Str(v, _) => {
                if !run.is_empty() {
                    parts.push(quote(&std::mem::take(&mut run)));
                }
                parts.push(v.name().to_string());
            }
        }
    }
    if !run.is_empty() || parts.is_empty() {
        parts.push(quote(&run));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(str.++ {})", parts.join(" "))
    }
}

fn int(e: &ArithExpr) -> String {
    match e {
        ArithExpr::IntConst(k) => k.to_string(),
        ArithExpr::IntVar(v) => v.name().to_string(),
        ArithExpr::LenOf(s) => format!("(str.len {})", s.name()),
        ArithExpr::Scale(k, a) => format!("(* {k} {})", int(a)),
        ArithExpr::Neg(a) => format!("(- {})", int(a)),
        ArithExpr::Mod(a, b) => format!("(mod {} {})", int(a), int(b)),
        ArithExpr::Add(a, b) => format!("(+ {} {})", int(a), int(b)),
        ArithExpr::Max(a, b) => format!("(max {} {})", int(a), int(b)),
        ArithExpr::Min(a, b) => format!("(min {} {})", int(a), int(b)),
    }
}

fn regex(r: &Regex) -> String {
    match r {
        Regex::Empty => "re.none".into(),
        Regex::Eps => "(str.to_re \"\")".into(),
        Regex::Lit(c) => format!("(str.to_re {})", quote(&c.to_string())),
        Regex::Word(cs) => format!("(str.to_re {})", quote(&cs.iter().collect::<String>())),
        Regex::Cat(a, b) => format!("(re.++ {} {})", regex(a), regex(b)),
        Regex::Union(a, b) => format!("(re.union {} {})", regex(a), regex(b)),
        Regex::Inter(a, b) => format!("(re.inter {} {})", regex(a), regex(b)),
        Regex::Complement(a) => format!("(re.comp {})", regex(a)),
        Regex::Star(a) => format!("(re.* {})", regex(a)),
    }
}

fn atom(a: &ArithAtom) -> String {
    let op = match a.kind {
        ArithKind::Eq => "=",
        ArithKind::Leq => "<=",
    };
    format!("({op} {} {})", int(&a.lhs), int(&a.rhs))
}

fn formula(f: &Formula) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::Or(fs) if fs.is_empty() => "false".into(),
        Formula::Equation(e) => format!("(= {} {})", term(&e.lhs), term(&e.rhs)),
        Formula::Member(t, r) => format!("(str.in_re {} {})", term(t), regex(r)),
        Formula::Arith(a) => atom(a),
        Formula::And(fs) | Formula::Or(fs) => {
            let op = if matches!(f, Formula::And(_)) { "and" } else { "or" };
            let inner: Vec<String> = fs.iter().map(formula).collect();
            if inner.is_empty() {
                format!("({op})")
            } else {
                format!("({op} {})", inner.join(" "))
            }
        }
    }
}

/// Problem file text that parses back to `p`.
pub fn print_problem(p: &Problem) -> String {
    let mut out = String::new();
    if !p.str_vars.is_empty() {
        let names: Vec<&str> = p.str_vars.iter().map(|v| v.name()).collect();
        writeln!(out, "(declare-str {})", names.join(" ")).unwrap();
    }
    if !p.int_vars.is_empty() {
        let names: Vec<&str> = p.int_vars.iter().map(|v| v.name()).collect();
        writeln!(out, "(declare-int {})", names.join(" ")).unwrap();
    }
    if !p.extra_alphabet.is_empty() {
        let cs: String = p.extra_alphabet.iter().collect();
        writeln!(out, "(declare-alphabet {})", quote(&cs)).unwrap();
    }
    for a in &p.assertions {
        writeln!(out, "(assert {})", formula(a)).unwrap();
    }
    out
}

/// Verdict line, followed by one `define` line per variable when a model
/// is requested and available.
pub fn render_answer(ans: &Answer, with_model: bool) -> String {
    match ans {
        Answer::Unsat => "unsat\n".into(),
        Answer::Unknown(_) => "unknown\n".into(),
        Answer::Sat(m) => {
            let mut out = String::from("sat\n");
            if with_model {
                for (s, w) in &m.strings {
                    writeln!(out, "(define {s} {})", quote(w)).unwrap();
                }
                for (n, k) in &m.ints {
                    writeln!(out, "(define {n} {k})").unwrap();
                }
            }
            out
        }
    }
}
