//! Line-oriented dataset files and clause text.
//!
//! ```text
//! # comment
//! declare seed 1
//! fact edge(a,b)
//! measure p1 x 1.25
//! example e1 pos target(p1)
//! ```
//!
//! `declare` lines only appear for predicates without facts.

use std::fmt::Write as _;

use super::{sym, Atom, AttrTerm, Background, Clause, Dataset, Example, Head, Literal, LogicError, Polarity, Term};
use crate::smt::Cmp;
use crate::templates::{TemplateId, Theory};

fn err(line: usize, msg: impl Into<String>) -> LogicError {
    LogicError::Parse { line, msg: msg.into() }
}

/// `name(a,b,…)` → `(name, [a, b, …])`.
fn call(s: &str) -> Option<(&str, Vec<&str>)> {
    let s = s.trim();
    let open = s.find('(')?;
    let inner = s.strip_suffix(')')?.get(open + 1..)?;
    let name = s[..open].trim();
    if name.is_empty() {
        return None;
    }
    let args = if inner.trim().is_empty() { Vec::new() } else { inner.split(',').map(str::trim).collect() };
    Some((name, args))
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == '.')
}

fn atom(s: &str, line: usize) -> Result<Atom, LogicError> {
    let (pred, args) = call(s).ok_or_else(|| err(line, format!("expected an atom, got `{s}`")))?;
    if !valid_name(pred) || !args.iter().all(|a| valid_name(a)) {
        return Err(err(line, format!("bad atom `{s}`")));
    }
    Ok(Atom::new(pred, &args))
}

pub fn parse_dataset(text: &str) -> Result<Dataset, LogicError> {
    let mut bg = Background::new();
    let mut examples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (kw, rest) = content.split_once(char::is_whitespace).ok_or_else(|| err(line, "incomplete line"))?;
        let rest = rest.trim();
        match kw {
            "declare" => {
                let mut parts = rest.split_whitespace();
                let (Some(name), Some(arity), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(err(line, "expected `declare <pred> <arity>`"));
                };
                let arity: usize = arity.parse().map_err(|_| err(line, "bad arity"))?;
                bg.declare(name, arity).map_err(|e| err(line, e.to_string()))?;
            }
            "fact" => {
                let a = atom(rest, line)?;
                let args: Vec<&str> = a.args.iter().map(|s| &**s).collect();
                bg.add_fact(&a.pred, &args).map_err(|e| err(line, e.to_string()))?;
            }
            "measure" => {
                let mut parts = rest.split_whitespace();
                let (Some(obj), Some(attr), Some(v), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                    return Err(err(line, "expected `measure <object> <attribute> <value>`"));
                };
                let v: f64 = v.parse().map_err(|_| err(line, format!("bad number `{v}`")))?;
                if !v.is_finite() || !valid_name(obj) || !valid_name(attr) {
                    return Err(err(line, "bad measurement"));
                }
                bg.set_measure(obj, attr, v).map_err(|e| err(line, e.to_string()))?;
            }
            "example" => {
                let mut parts = rest.splitn(3, char::is_whitespace);
                let (Some(id), Some(pol), Some(head)) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(err(line, "expected `example <id> <pos|neg> <atom>`"));
                };
                let polarity = match pol {
                    "pos" => Polarity::Positive,
                    "neg" => Polarity::Negative,
                    _ => return Err(err(line, format!("bad polarity `{pol}`"))),
                };
                if !valid_name(id) {
                    return Err(err(line, "bad example id"));
                }
                let head = atom(head, line)?;
                for a in &head.args {
                    bg.intern(a);
                }
                examples.push(Example::new(id, polarity, head));
            }
            other => return Err(err(line, format!("unknown keyword `{other}`"))),
        }
    }
    Dataset::new(bg, examples, Theory::Lra)
}

pub fn serialize_dataset(d: &Dataset) -> String {
    let bg = &d.background;
    let mut out = String::new();
    for (pred, arity) in bg.predicates() {
        let facts = bg.facts(&pred);
        if facts.is_empty() {
            let _ = writeln!(out, "declare {pred} {arity}");
        }
        for t in facts {
            let args: Vec<&str> = t.iter().map(|s| &**s).collect();
            let _ = writeln!(out, "fact {pred}({})", args.join(","));
        }
    }
    for (o, a, v) in bg.measurements() {
        // Display for f64 is the shortest string that parses back to the same bits.
        let _ = writeln!(out, "measure {o} {a} {v}");
    }
    for e in d.examples() {
        let pol = if e.is_positive() { "pos" } else { "neg" };
        let _ = writeln!(out, "example {} {pol} {}", e.id, e.head);
    }
    out
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (&self.background, &other.background);
        let facts_eq = a.predicates() == b.predicates() && a.predicates().iter().all(|(p, _)| a.facts(p) == b.facts(p));
        let ma: Vec<_> = a.measurements().into_iter().map(|(o, at, v)| (o, at, v.to_bits())).collect();
        let mb: Vec<_> = b.measurements().into_iter().map(|(o, at, v)| (o, at, v.to_bits())).collect();
        facts_eq
            && ma == mb
            && self.positives == other.positives
            && self.negatives == other.negatives
            && self.theory == other.theory
    }
}

/// Splits on `sep` outside parentheses.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(s[start..i].trim());
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

fn term(s: &str) -> Term {
    if s.starts_with(|c: char| c.is_uppercase() || c == '_') {
        Term::Var(sym(s))
    } else {
        Term::Const(sym(s))
    }
}

fn attr_term(s: &str) -> Result<AttrTerm, LogicError> {
    match call(s) {
        Some((attr, args)) if args.len() == 1 && valid_name(attr) && valid_name(args[0]) => Ok(AttrTerm::new(attr, args[0])),
        _ => Err(err(0, format!("expected attr(Var), got `{s}`"))),
    }
}

/// Finds a comparison operator outside parentheses.
fn comparison(s: &str) -> Option<(Cmp, &str, &str)> {
    let mut depth = 0i32;
    let bytes: Vec<(usize, char)> = s.char_indices().collect();
    for (k, &(i, c)) in bytes.iter().enumerate() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '<' | '>' | '=' | '≤' | '≥' if depth == 0 => {
                let two = matches!(bytes.get(k + 1), Some((_, '='))) && matches!(c, '<' | '>');
                let end = if two { bytes[k + 1].0 + 1 } else { i + c.len_utf8() };
                let op = Cmp::parse(&s[i..end])?;
                return Some((op, s[..i].trim(), s[end..].trim()));
            }
            _ => {}
        }
    }
    None
}

pub fn parse_literal(s: &str) -> Result<Literal, LogicError> {
    let s = s.trim();
    if let Some((op, l, r)) = comparison(s) {
        return Ok(Literal::Comparison { op, lhs: attr_term(l)?, rhs: attr_term(r)? });
    }
    let (name, _) = call(s).ok_or_else(|| err(0, format!("bad literal `{s}`")))?;
    if let Ok(template) = TemplateId::parse(name) {
        let inner = &s[s.find('(').unwrap() + 1..s.len() - 1];
        let (args, params) = match inner.split_once('|') {
            Some((a, p)) => (a, p.split(',').map(|x| sym(x.trim())).filter(|x| !x.is_empty()).collect()),
            None => (inner, Vec::new()),
        };
        let args = split_top(args, ',').into_iter().map(attr_term).collect::<Result<Vec<_>, _>>()?;
        let lit = Literal::Parametric { template, args, params };
        return Ok(lit);
    }
    let (pred, args) = call(s).expect("checked above");
    if !valid_name(pred) || !args.iter().all(|a| valid_name(a)) {
        return Err(err(0, format!("bad literal `{s}`")));
    }
    Ok(Literal::Symbolic { pred: sym(pred), args: args.into_iter().map(term).collect() })
}

/// Parses `head ← lit, …` (or `:-`). The budget is set to the body length.
pub fn parse_clause(s: &str) -> Result<Clause, LogicError> {
    let (h, b) = s.split_once('←').or_else(|| s.split_once(":-")).ok_or_else(|| err(0, "missing ←"))?;
    let (pred, args) = call(h).ok_or_else(|| err(0, format!("bad head `{h}`")))?;
    let head = Head::new(pred, &args);
    let body = if b.trim().is_empty() {
        Vec::new()
    } else {
        split_top(b.trim(), ',').into_iter().map(parse_literal).collect::<Result<Vec<_>, _>>()?
    };
    let budget = body.len();
    Ok(Clause { head, body, budget })
}
