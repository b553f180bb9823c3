use std::collections::BTreeMap;

use super::{Formula, ParseError, Pos, Problem};
use crate::ast::{length_expr, ArithAtom, ArithExpr, Equation, IntVar, Regex, StrVar, Term};
use crate::Int;

#[derive(Clone, Debug)]
enum Sexp {
    Sym(String, Pos),
    Str(String, Pos),
    Int(Int, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Sym(_, p) | Sexp::Str(_, p) | Sexp::Int(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { pos, msg: msg.into() }
}

fn unsupported(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::UnsupportedConstruct { pos, msg: msg.into() }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Lexer<'_> {
    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while self.chars.peek().is_some_and(|&c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    /// Next S-expression, or `None` at end of input.
    fn sexp(&mut self) -> Result<Option<Sexp>, ParseError> {
        self.skip_blank();
        let pos = self.pos();
        let Some(&c) = self.chars.peek() else { return Ok(None) };
        match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_blank();
                    match self.chars.peek() {
                        None => return Err(syntax(pos, "unclosed parenthesis")),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexp::List(items, pos)));
                        }
                        Some(_) => items.push(self.sexp()?.expect("input not exhausted")),
                    }
                }
            }
            ')' => Err(syntax(pos, "unexpected `)`")),
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(syntax(pos, "unterminated string literal")),
                        Some('"') if self.chars.peek() == Some(&'"') => {
                            self.bump();
                            s.push('"');
                        }
                        Some('"') => break,
                        Some(c) if (' '..='~').contains(&c) => s.push(c),
                        Some(c) => {
                            return Err(syntax(pos, format!("character {c:?} is not printable ASCII")))
                        }
                    }
                }
                Ok(Some(Sexp::Str(s, pos)))
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' || c == ';' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                let digits = s.strip_prefix('-').unwrap_or(&s);
                if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
                    let v = s.parse::<Int>().map_err(|_| syntax(pos, "integer literal out of range"))?;
                    Ok(Some(Sexp::Int(v, pos)))
                } else {
                    Ok(Some(Sexp::Sym(s, pos)))
                }
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sort {
    Str,
    Int,
}

struct Parser {
    sorts: BTreeMap<String, Sort>,
    problem: Problem,
}

fn valid_identifier(name: &str) -> bool {
    let mut cs = name.chars();
    cs.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "_'.".contains(c))
}

/// Parse a problem file.
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let mut lex = Lexer { chars: text.chars().peekable(), line: 1, col: 1 };
    let mut p = Parser { sorts: BTreeMap::new(), problem: Problem::default() };
    while let Some(cmd) = lex.sexp()? {
        p.command(&cmd)?;
    }
    Ok(p.problem)
}

impl Parser {
    fn command(&mut self, cmd: &Sexp) -> Result<(), ParseError> {
        let Sexp::List(items, pos) = cmd else {
            return Err(syntax(cmd.pos(), "expected a command"));
        };
        let Some(Sexp::Sym(head, _)) = items.first() else {
            return Err(syntax(*pos, "expected a command name"));
        };
        let args = &items[1..];
        match head.as_str() {
            "declare-str" | "declare-int" => {
                let sort = if head == "declare-str" { Sort::Str } else { Sort::Int };
                for a in args {
                    let Sexp::Sym(name, p) = a else { return Err(syntax(a.pos(), "expected a name")) };
                    self.declare(name, sort, *p)?;
                }
            }
            "declare-const" | "declare-fun" => {
                let (name, sort_sym) = match (head.as_str(), args) {
                    ("declare-const", [Sexp::Sym(n, _), s]) => (n, s),
                    ("declare-fun", [Sexp::Sym(n, _), Sexp::List(ps, _), s]) if ps.is_empty() => (n, s),
                    _ => return Err(syntax(*pos, format!("malformed {head}"))),
                };
                let sort = match sort_sym {
                    Sexp::Sym(s, _) if s == "String" => Sort::Str,
                    Sexp::Sym(s, _) if s == "Int" => Sort::Int,
                    other => return Err(unsupported(other.pos(), "only String and Int sorts")),
                };
                self.declare(name, sort, *pos)?;
            }
            "declare-alphabet" => {
                for a in args {
                    let Sexp::Str(s, _) = a else {
                        return Err(syntax(a.pos(), "expected a string literal"));
                    };
                    self.problem.extra_alphabet.extend(s.chars());
                }
            }
            "assert" => {
                let [f] = args else { return Err(syntax(*pos, "assert takes one formula")) };
                let f = self.formula(f, false)?;
                self.problem.assertions.push(f);
            }
            "check-sat" | "get-model" | "set-logic" | "set-info" | "set-option" | "exit" => {}
            other => return Err(unsupported(*pos, format!("command `{other}`"))),
        }
        Ok(())
    }

    fn declare(&mut self, name: &str, sort: Sort, pos: Pos) -> Result<(), ParseError> {
        if !valid_identifier(name) {
            return Err(syntax(pos, format!("invalid identifier `{name}`")));
        }
        if self.sorts.insert(name.to_string(), sort).is_some() {
            return Err(syntax(pos, format!("`{name}` declared twice")));
        }
        match sort {
            Sort::Str => self.problem.str_vars.push(StrVar::new(name)),
            Sort::Int => self.problem.int_vars.push(IntVar::new(name)),
        }
        Ok(())
    }

    fn sort_of(&self, e: &Sexp) -> Result<Sort, ParseError> {
        Ok(match e {
            Sexp::Str(..) => Sort::Str,
            Sexp::Int(..) => Sort::Int,
            Sexp::Sym(name, pos) => *self
                .sorts
                .get(name)
                .ok_or_else(|| ParseError::UnknownIdentifier { pos: *pos, name: name.clone() })?,
            Sexp::List(items, pos) => match items.first() {
                Some(Sexp::Sym(h, _)) if h == "str.++" => Sort::Str,
                Some(_) => Sort::Int,
                None => return Err(syntax(*pos, "empty application")),
            },
        })
    }

    /// `negated` asks for the negation of `e`.
    fn formula(&self, e: &Sexp, negated: bool) -> Result<Formula, ParseError> {
        let (head, args, pos) = match e {
            Sexp::Sym(s, pos) if s == "true" || s == "false" => {
                return Ok(if (s == "true") != negated { Formula::True } else { Formula::Or(vec![]) });
            }
            Sexp::List(items, pos) => match items.split_first() {
                Some((Sexp::Sym(h, _), rest)) => (h.as_str(), rest, *pos),
                _ => return Err(syntax(*pos, "expected a formula")),
            },
            other => return Err(syntax(other.pos(), "expected a formula")),
        };
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(syntax(pos, format!("`{head}` expects {n} argument(s)")))
            }
        };
        match head {
            "and" | "or" => {
                let parts = args.iter().map(|a| self.formula(a, negated)).collect::<Result<_, _>>()?;
                Ok(if (head == "and") != negated { Formula::And(parts) } else { Formula::Or(parts) })
            }
            "not" => {
                arity(1)?;
                self.formula(&args[0], !negated)
            }
            "=" => {
                arity(2)?;
                let sl = self.sort_of(&args[0])?;
                let sr = self.sort_of(&args[1])?;
                if sl != sr {
                    return Err(syntax(pos, "`=` between a string and an integer"));
                }
                if sl == Sort::Str {
                    if negated {
                        return Err(unsupported(pos, "string disequality"));
                    }
                    let eq = Equation::new(self.term(&args[0])?, self.term(&args[1])?);
                    return Ok(Formula::Equation(eq));
                }
                Ok(arith(ArithAtom::eq(self.int(&args[0])?, self.int(&args[1])?), negated))
            }
            "distinct" => {
                if args.len() < 2 {
                    return Err(syntax(pos, "`distinct` expects at least 2 arguments"));
                }
                for a in args {
                    if self.sort_of(a)? == Sort::Str {
                        return Err(unsupported(pos, "string disequality"));
                    }
                }
                let xs = args.iter().map(|a| self.int(a)).collect::<Result<Vec<_>, _>>()?;
                let mut parts = Vec::new();
                for i in 0..xs.len() {
                    for j in i + 1..xs.len() {
                        parts.push(arith(ArithAtom::eq(xs[i].clone(), xs[j].clone()), !negated));
                    }
                }
                Ok(if negated { Formula::Or(parts) } else { Formula::And(parts) })
            }
            "<=" | "<" | ">=" | ">" => {
                arity(2)?;
                let l = self.int(&args[0])?;
                let r = self.int(&args[1])?;
                let atom = match head {
                    "<=" => ArithAtom::leq(l, r),
                    "<" => ArithAtom::lt(l, r),
                    ">=" => ArithAtom::geq(l, r),
                    _ => ArithAtom::lt(r, l),
                };
                Ok(arith(atom, negated))
            }
            "str.in_re" => {
                arity(2)?;
                let t = self.term(&args[0])?;
                let r = self.regex(&args[1])?;
                Ok(Formula::Member(t, if negated { Regex::complement(r) } else { r }))
            }
            other => Err(unsupported(pos, format!("`{other}` in formula position"))),
        }
    }

    fn term(&self, e: &Sexp) -> Result<Term, ParseError> {
        match e {
            Sexp::Str(s, _) => Ok(Term::word(s)),
            Sexp::Sym(name, pos) => match self.sorts.get(name) {
                Some(Sort::Str) => Ok(Term::var(name)),
                Some(Sort::Int) => Err(syntax(*pos, format!("`{name}` is an integer"))),
                None => Err(ParseError::UnknownIdentifier { pos: *pos, name: name.clone() }),
            },
            Sexp::List(items, pos) => match items.split_first() {
                Some((Sexp::Sym(h, _), rest)) if h == "str.++" => {
                    let mut t = Term::epsilon();
                    for a in rest {
                        t = t.concat(self.term(a)?);
                    }
                    Ok(t)
                }
                _ => Err(unsupported(*pos, "string operator other than str.++")),
            },
            Sexp::Int(_, pos) => Err(syntax(*pos, "expected a string term")),
        }
    }

    fn int(&self, e: &Sexp) -> Result<ArithExpr, ParseError> {
        match e {
            Sexp::Int(k, _) => Ok(ArithExpr::IntConst(*k)),
            Sexp::Sym(name, pos) => match self.sorts.get(name) {
                Some(Sort::Int) => Ok(ArithExpr::var(name)),
                Some(Sort::Str) => Err(syntax(*pos, format!("`{name}` is a string"))),
                None => Err(ParseError::UnknownIdentifier { pos: *pos, name: name.clone() }),
            },
            Sexp::Str(_, pos) => Err(syntax(*pos, "expected an integer term")),
            Sexp::List(items, pos) => {
                let Some((Sexp::Sym(h, _), args)) = items.split_first() else {
                    return Err(syntax(*pos, "expected an operator"));
                };
                let xs = || args.iter().map(|a| self.int(a)).collect::<Result<Vec<_>, _>>();
                let binary = |f: fn(ArithExpr, ArithExpr) -> ArithExpr| -> Result<ArithExpr, ParseError> {
                    match args {
                        [a, b] => Ok(f(self.int(a)?, self.int(b)?)),
                        _ => Err(syntax(*pos, format!("`{h}` expects 2 arguments"))),
                    }
                };
                match h.as_str() {
                    "+" if !args.is_empty() => Ok(ArithExpr::sum(xs()?)),
                    "-" if args.len() == 1 => Ok(ArithExpr::Neg(Box::new(self.int(&args[0])?))),
                    "-" if args.len() >= 2 => {
                        let mut it = xs()?.into_iter();
                        let first = it.next().expect("two arguments");
                        Ok(it.fold(first, ArithExpr::sub))
                    }
                    "*" => match args {
                        [Sexp::Int(k, _), b] => Ok(ArithExpr::scale(*k, self.int(b)?)),
                        [a, Sexp::Int(k, _)] => Ok(ArithExpr::scale(*k, self.int(a)?)),
                        [_, _] => Err(unsupported(*pos, "non-linear multiplication")),
                        _ => Err(syntax(*pos, "`*` expects 2 arguments")),
                    },
                    "mod" => binary(ArithExpr::modulo),
                    "max" => binary(ArithExpr::max),
                    "min" => binary(ArithExpr::min),
                    "str.len" => match args {
                        [Sexp::Sym(name, _)] if self.sorts.get(name) == Some(&Sort::Str) => {
                            Ok(ArithExpr::len(name))
                        }
                        [t] => {
                            let t = self.term(t)?;
                            Ok(length_expr(&t))
                        }
                        _ => Err(syntax(*pos, "`str.len` expects 1 argument")),
                    },
                    other => Err(unsupported(*pos, format!("integer operator `{other}`"))),
                }
            }
        }
    }

    fn regex(&self, e: &Sexp) -> Result<Regex, ParseError> {
        match e {
            Sexp::Sym(s, pos) => match s.as_str() {
                "re.none" => Ok(Regex::Empty),
                "re.all" => Ok(Regex::complement(Regex::Empty)),
                "re.allchar" => Ok(all_char()),
                _ if self.sorts.contains_key(s) => {
                    Err(unsupported(*pos, "string variable inside a regular expression"))
                }
                _ => Err(ParseError::UnknownIdentifier { pos: *pos, name: s.clone() }),
            },
            Sexp::List(items, pos) => {
                let Some((Sexp::Sym(h, _), args)) = items.split_first() else {
                    return Err(syntax(*pos, "expected a regex operator"));
                };
                let rs = || args.iter().map(|a| self.regex(a)).collect::<Result<Vec<_>, _>>();
                let fold = |f: fn(Regex, Regex) -> Regex| -> Result<Regex, ParseError> {
                    let mut it = rs()?.into_iter();
                    let first = it.next().ok_or_else(|| syntax(*pos, format!("`{h}` needs arguments")))?;
                    Ok(it.fold(first, f))
                };
                let one = || -> Result<Regex, ParseError> {
                    match args {
                        [a] => self.regex(a),
                        _ => Err(syntax(*pos, format!("`{h}` expects 1 argument"))),
                    }
                };
                match h.as_str() {
                    "str.to_re" => match args {
                        [Sexp::Str(s, _)] => Ok(Regex::word(s)),
                        [Sexp::Sym(..) | Sexp::List(..)] => {
                            Err(unsupported(*pos, "string variable inside a regular expression"))
                        }
                        _ => Err(syntax(*pos, "`str.to_re` expects a string literal")),
                    },
                    "re.++" => fold(Regex::cat),
                    "re.union" => fold(Regex::union),
                    "re.inter" => fold(Regex::inter),
                    "re.*" => Ok(Regex::star(one()?)),
                    "re.+" => {
                        let r = one()?;
                        Ok(Regex::cat(r.clone(), Regex::star(r)))
                    }
                    "re.opt" => Ok(Regex::union(Regex::Eps, one()?)),
                    "re.comp" => Ok(Regex::complement(one()?)),
                    "re.range" => match args {
                        [Sexp::Str(a, _), Sexp::Str(b, _)] if a.chars().count() == 1 && b.chars().count() == 1 => {
                            let (a, b) = (a.chars().next().unwrap(), b.chars().next().unwrap());
                            let mut it = (a..=b).map(Regex::Lit);
                            Ok(match it.next() {
                                None => Regex::Empty,
                                Some(first) => it.fold(first, Regex::union),
                            })
                        }
                        _ => Err(syntax(*pos, "`re.range` expects two single-character literals")),
                    },
                    other => Err(unsupported(*pos, format!("regex operator `{other}`"))),
                }
            }
            other => Err(syntax(other.pos(), "expected a regular expression")),
        }
    }
}

/// Words of length one, written without reference to a fixed alphabet.
fn all_char() -> Regex {
    let nonempty = Regex::complement(Regex::Eps);
    Regex::inter(nonempty.clone(), Regex::complement(Regex::cat(nonempty.clone(), nonempty)))
}

fn arith(a: ArithAtom, negated: bool) -> Formula {
    if !negated {
        return Formula::Arith(a);
    }
    let mut alts: Vec<Formula> = a.negate().into_iter().map(Formula::Arith).collect();
    if alts.len() == 1 {
        alts.pop().unwrap()
    } else {
        Formula::Or(alts)
    }
}
