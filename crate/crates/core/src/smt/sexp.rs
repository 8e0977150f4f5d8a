//! Minimal S-expression reader for solver responses.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
#[error("s-expression parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: &'static str,
}

impl Sexp {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(xs) => Some(xs),
            Sexp::Atom(_) => None,
        }
    }

    /// Evaluates a real literal: decimals (an algebraic approximation may
    /// end in `?`), `(- c)`, `(/ a b)`, and nestings of these.
    pub fn to_real(&self) -> Option<f64> {
        match self {
            Sexp::Atom(a) => a.trim_end_matches('?').parse::<f64>().ok(),
            Sexp::List(xs) => match xs.first()?.as_atom()? {
                "-" if xs.len() == 2 => Some(-xs[1].to_real()?),
                "-" if xs.len() == 3 => Some(xs[1].to_real()? - xs[2].to_real()?),
                "/" if xs.len() == 3 => {
                    let d = xs[2].to_real()?;
                    (d != 0.0).then(|| xs[1].to_real().map(|n| n / d)).flatten()
                }
                "+" => xs[1..].iter().map(Sexp::to_real).sum(),
                _ => None,
            },
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::List(xs) => {
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parses every top-level expression in `src`.
pub fn parse_all(src: &str) -> Result<Vec<Sexp>, ParseError> {
    let bytes = src.as_bytes();
    let mut pos = 0;
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    while pos < bytes.len() {
        let c = bytes[pos];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => pos += 1,
            b';' => {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            }
            b'(' => {
                stack.push(Vec::new());
                pos += 1;
            }
            b')' => {
                if stack.len() < 2 {
                    return Err(ParseError { pos, msg: "unbalanced `)`" });
                }
                let done = stack.pop().unwrap();
                stack.last_mut().unwrap().push(Sexp::List(done));
                pos += 1;
            }
            b'|' | b'"' => {
                let end = src[pos + 1..].find(c as char).ok_or(ParseError { pos, msg: "unterminated quote" })?;
                let text = &src[pos + 1..pos + 1 + end];
                stack.last_mut().unwrap().push(Sexp::Atom(text.to_string()));
                pos += end + 2;
            }
            _ => {
                let start = pos;
                while pos < bytes.len() && !matches!(bytes[pos], b' ' | b'\t' | b'\n' | b'\r' | b'(' | b')' | b';') {
                    pos += 1;
                }
                stack.last_mut().unwrap().push(Sexp::Atom(src[start..pos].to_string()));
            }
        }
    }
    if stack.len() != 1 {
        return Err(ParseError { pos, msg: "unbalanced `(`" });
    }
    Ok(stack.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_and_negative_literals() {
        let xs = parse_all("(/ 1.0 4.0) (- 2.5) (- (/ 3 2)) 1.4142135623?").unwrap();
        let vals: Vec<f64> = xs.iter().map(|x| x.to_real().unwrap()).collect();
        assert_eq!(vals, vec![0.25, -2.5, -1.5, 1.4142135623]);
    }

    #[test]
    fn quoted_symbols() {
        let xs = parse_all("(define-fun |p0 l| () Real 0.0)").unwrap();
        assert_eq!(xs[0].as_list().unwrap()[1], Sexp::Atom("p0 l".into()));
    }

    #[test]
    fn unbalanced_input_is_rejected() {
        assert!(parse_all("(a (b)").is_err());
        assert!(parse_all("a)").is_err());
    }
}
