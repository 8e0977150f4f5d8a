//! SMT-LIB2 solver driven over a child-process pipe.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::formula::{Cmp, Expr, Formula};
use super::sexp::{self, Sexp};
use super::{Assignment, Backend, MaxSmtInstance, SmtError, SolveResult, Status};

/// Environment variable holding the solver command line.
pub const SOLVER_ENV: &str = "SMTILP_SOLVER_CMD";
const DEFAULT_COMMAND: &str = "z3 -in";
const PWL_SEGMENTS: usize = 256;
const PWL_RANGE: f64 = 10.0 * PI;

#[derive(Clone, Debug)]
pub struct SmtLibProcess {
    pub command: Vec<String>,
    /// Use `assert-soft`; otherwise search over soft-weight thresholds.
    pub assert_soft: bool,
    /// Try the solver's own `sin` before the piecewise-linear encoding.
    pub native_sin: bool,
}

impl SmtLibProcess {
    pub fn new(command: &str) -> Self {
        SmtLibProcess {
            command: command.split_whitespace().map(String::from).collect(),
            assert_soft: true,
            native_sin: true,
        }
    }

    /// Command from `SMTILP_SOLVER_CMD`, else `z3 -in`.
    pub fn from_env() -> Self {
        let cmd = std::env::var(SOLVER_ENV).ok().filter(|s| !s.trim().is_empty());
        SmtLibProcess::new(cmd.as_deref().unwrap_or(DEFAULT_COMMAND))
    }

    /// Whether the solver starts and answers a trivial query.
    pub fn available(&self) -> bool {
        matches!(
            self.run("(check-sat)\n(exit)\n", Duration::from_secs(5)),
            Ok(out) if out.status == Some(Status::Sat)
        )
    }

    fn run(&self, script: &str, timeout: Duration) -> Result<RunOutput, SmtError> {
        let (prog, args) = self.command.split_first().ok_or_else(|| SmtError::Process("empty solver command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| SmtError::Process(format!("cannot start `{prog}`: {e}")))?;
        let start = Instant::now();
        {
            let mut stdin = child.stdin.take().expect("piped stdin");
            stdin.write_all(script.as_bytes()).map_err(|e| SmtError::Process(format!("write to solver: {e}")))?;
        }
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stdout.read_to_string(&mut s);
            s
        });
        // grace period on top of the solver's own timeout option
        let limit = timeout + Duration::from_millis(500);
        let mut killed = false;
        loop {
            match child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if start.elapsed() > limit => {
                    let _ = child.kill();
                    let _ = child.wait();
                    killed = true;
                    break;
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(2)),
                Err(e) => return Err(SmtError::Process(e.to_string())),
            }
        }
        let text = reader.join().map_err(|_| SmtError::Process("reader thread panicked".into()))?;
        let elapsed = start.elapsed();
        if killed {
            return Ok(RunOutput { status: Some(Status::Timeout), model: None, errors: Vec::new() });
        }
        let items = sexp::parse_all(&text).map_err(|e| SmtError::Parse(e.to_string()))?;
        let mut status = None;
        let mut model = None;
        let mut errors = Vec::new();
        for item in &items {
            match item {
                Sexp::Atom(a) if status.is_none() => {
                    status = match a.as_str() {
                        "sat" => Some(Status::Sat),
                        "unsat" => Some(Status::Unsat),
                        "unknown" if elapsed >= timeout.mul_f64(0.95) => Some(Status::Timeout),
                        "unknown" => Some(Status::Unknown),
                        "timeout" => Some(Status::Timeout),
                        _ => None,
                    }
                }
                Sexp::List(xs) if xs.first().and_then(Sexp::as_atom) == Some("error") => {
                    errors.push(xs.get(1).map(|m| m.to_string()).unwrap_or_default());
                }
                Sexp::List(_) if status == Some(Status::Sat) && model.is_none() => {
                    model = Some(parse_model(item)?);
                }
                _ => {}
            }
        }
        Ok(RunOutput { status, model, errors })
    }

    fn solve_once(&self, inst: &MaxSmtInstance, sin: SinMode) -> Result<SolveResult, SmtError> {
        if !inst.soft.is_empty() && !self.assert_soft {
            return self.threshold_search(inst, sin);
        }
        let script = to_smtlib(inst, sin, self.assert_soft, None)?;
        let out = self.run(&script, inst.timeout)?;
        if out.errors.iter().any(|e| e.contains("assert-soft")) {
            return self.threshold_search(inst, sin);
        }
        out.into_result()
    }

    /// Maximises satisfied soft weight by repeated checks with an
    /// increasing lower bound on it.
    fn threshold_search(&self, inst: &MaxSmtInstance, sin: SinMode) -> Result<SolveResult, SmtError> {
        let deadline = Instant::now() + inst.timeout;
        let mut best: Option<SolveResult> = None;
        let mut bound: Option<f64> = None;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                let mut r = SolveResult::with_status(Status::Timeout);
                r.partial = best.and_then(|b| b.model);
                return Ok(r);
            }
            let script = to_smtlib(&MaxSmtInstance { timeout: left, ..inst.clone() }, sin, false, Some(bound))?;
            let res = self.run(&script, left)?.into_result()?;
            match res.status {
                Status::Sat => {
                    let model = res.model.clone().unwrap_or_default();
                    let w: f64 = inst
                        .soft
                        .iter()
                        .filter(|(f, _)| super::holds_under(f, &model, &res.props))
                        .map(|(_, w)| w)
                        .sum();
                    if w >= inst.total_soft_weight() {
                        return Ok(res);
                    }
                    bound = Some(w);
                    best = Some(res);
                }
                Status::Unsat => return Ok(best.unwrap_or(res)),
                other => {
                    let mut r = SolveResult::with_status(other);
                    r.partial = best.and_then(|b| b.model);
                    return Ok(r);
                }
            }
        }
    }
}

impl Default for SmtLibProcess {
    fn default() -> Self {
        SmtLibProcess::from_env()
    }
}

impl Backend for SmtLibProcess {
    fn name(&self) -> &str {
        "external"
    }

    fn solve_raw(&self, inst: &MaxSmtInstance) -> Result<SolveResult, SmtError> {
        let has_sin = inst.hard.iter().chain(inst.soft.iter().map(|(f, _)| f)).any(Formula::contains_sin);
        if has_sin && self.native_sin {
            let res = self.solve_once(inst, SinMode::Native);
            match res {
                Ok(r) if matches!(r.status, Status::Sat | Status::Unsat) => {
                    if r.status == Status::Unsat || model_checks(inst, &r) {
                        return Ok(r);
                    }
                }
                _ => {}
            }
        }
        let mode = if has_sin { SinMode::Piecewise } else { SinMode::Native };
        self.solve_once(inst, mode)
    }
}

fn model_checks(inst: &MaxSmtInstance, r: &SolveResult) -> bool {
    let Some(m) = &r.model else { return false };
    inst.hard.iter().all(|h| super::holds_under(h, m, &r.props))
}

struct RunOutput {
    status: Option<Status>,
    model: Option<(Assignment, BTreeMap<String, bool>)>,
    errors: Vec<String>,
}

impl RunOutput {
    fn into_result(self) -> Result<SolveResult, SmtError> {
        match self.status {
            Some(Status::Sat) => {
                let (model, props) =
                    self.model.ok_or_else(|| SmtError::Parse("sat without a model".into()))?;
                Ok(SolveResult::sat(model, props, false))
            }
            Some(s) => Ok(SolveResult::with_status(s)),
            None => Err(SmtError::Process(format!("no verdict from solver: {}", self.errors.join("; ")))),
        }
    }
}

fn parse_model(m: &Sexp) -> Result<(Assignment, BTreeMap<String, bool>), SmtError> {
    let mut vals = Assignment::new();
    let mut props = BTreeMap::new();
    let items = m.as_list().unwrap_or(&[]);
    for def in items {
        let Some(xs) = def.as_list() else { continue };
        if xs.len() != 5 || xs[0].as_atom() != Some("define-fun") {
            continue;
        }
        let name = xs[1].as_atom().unwrap_or_default();
        if name.contains('!') {
            continue; // auxiliary symbols
        }
        match xs[3].as_atom() {
            Some("Real") => {
                let v = xs[4].to_real().ok_or_else(|| SmtError::Parse(format!("unsupported value {}", xs[4])))?;
                vals.insert(name.to_string(), v);
            }
            Some("Bool") => {
                props.insert(name.to_string(), xs[4].as_atom() == Some("true"));
            }
            _ => {}
        }
    }
    Ok((vals, props))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SinMode {
    Native,
    Piecewise,
}

struct Writer {
    sin: SinMode,
    aux: Vec<String>,
    decls: Vec<String>,
    counter: usize,
}

fn real(v: f64) -> Result<String, SmtError> {
    if !v.is_finite() {
        return Err(SmtError::Invalid(format!("non-finite constant {v}")));
    }
    let mut s = format!("{}", v.abs());
    if !s.contains('.') {
        s.push_str(".0");
    }
    Ok(if v < 0.0 { format!("(- {s})") } else { s })
}

fn sym(name: &str) -> String {
    format!("|{name}|")
}

impl Writer {
    fn expr(&mut self, e: &Expr) -> Result<String, SmtError> {
        Ok(match e {
            Expr::Const(v) => real(*v)?,
            Expr::Var(v) => sym(v),
            Expr::Add(xs) => match xs.len() {
                0 => "0.0".into(),
                1 => self.expr(&xs[0])?,
                _ => {
                    let parts: Result<Vec<_>, _> = xs.iter().map(|x| self.expr(x)).collect();
                    format!("(+ {})", parts?.join(" "))
                }
            },
            Expr::Sub(a, b) => format!("(- {} {})", self.expr(a)?, self.expr(b)?),
            Expr::Mul(a, b) => format!("(* {} {})", self.expr(a)?, self.expr(b)?),
            Expr::Div(a, b) => format!("(/ {} {})", self.expr(a)?, self.expr(b)?),
            Expr::Neg(a) => format!("(- {})", self.expr(a)?),
            Expr::Abs(a) => {
                let a = self.expr(a)?;
                format!("(ite (>= {a} 0.0) {a} (- {a}))")
            }
            Expr::Sin(a) => {
                let a = self.expr(a)?;
                match self.sin {
                    SinMode::Native => format!("(sin {a})"),
                    SinMode::Piecewise => self.pwl_sin(&a)?,
                }
            }
        })
    }

    /// Fresh `s` with `s ∈ [-1, 1]` and, on each of the segments covering
    /// `[-10π, 10π]`, `|s - chord(t)| ≤ h²/8`: an overapproximation of
    /// `s = sin(t)`.
    fn pwl_sin(&mut self, arg: &str) -> Result<String, SmtError> {
        let k = self.counter;
        self.counter += 1;
        let t = format!("|sin!t{k}|");
        let s = format!("|sin!s{k}|");
        self.decls.push(format!("(declare-const {t} Real)"));
        self.decls.push(format!("(declare-const {s} Real)"));
        self.aux.push(format!("(= {t} {arg})"));
        self.aux.push(format!("(<= (- 1.0) {s})"));
        self.aux.push(format!("(<= {s} 1.0)"));
        let h = 2.0 * PWL_RANGE / PWL_SEGMENTS as f64;
        let err = h * h / 8.0 + 1e-12;
        for i in 0..PWL_SEGMENTS {
            let t0 = -PWL_RANGE + h * i as f64;
            let t1 = if i + 1 == PWL_SEGMENTS { PWL_RANGE } else { t0 + h };
            let slope = (t1.sin() - t0.sin()) / (t1 - t0);
            let chord = format!("(+ {} (* {} (- {t} {})))", real(t0.sin())?, real(slope)?, real(t0)?);
            self.aux.push(format!(
                "(=> (and (<= {} {t}) (<= {t} {})) (and (<= (- {chord} {e}) {s}) (<= {s} (+ {chord} {e}))))",
                real(t0)?,
                real(t1)?,
                e = real(err)?,
            ));
        }
        Ok(s)
    }

    fn formula(&mut self, f: &Formula) -> Result<String, SmtError> {
        Ok(match f {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Prop(p) => sym(p),
            Formula::Cmp(op, a, b) => {
                let o = match op {
                    Cmp::Eq => "=",
                    other => other.symbol(),
                };
                format!("({o} {} {})", self.expr(a)?, self.expr(b)?)
            }
            Formula::And(xs) if xs.is_empty() => "true".into(),
            Formula::Or(xs) if xs.is_empty() => "false".into(),
            Formula::And(xs) | Formula::Or(xs) => {
                let head = if matches!(f, Formula::And(_)) { "and" } else { "or" };
                let parts: Result<Vec<_>, _> = xs.iter().map(|x| self.formula(x)).collect();
                format!("({head} {})", parts?.join(" "))
            }
            Formula::Not(a) => format!("(not {})", self.formula(a)?),
        })
    }
}

/// Renders an instance as an SMT-LIB2 script. With `min_weight =
/// Some(bound)` soft constraints become indicator literals and the script
/// demands satisfied weight above `bound` (or any weight when `None`).
fn to_smtlib(
    inst: &MaxSmtInstance,
    sin: SinMode,
    assert_soft: bool,
    min_weight: Option<Option<f64>>,
) -> Result<String, SmtError> {
    let all = inst.hard.iter().chain(inst.soft.iter().map(|(f, _)| f));
    let nonlinear = all.clone().any(Formula::is_nonlinear);
    let mut w = Writer { sin, aux: Vec::new(), decls: Vec::new(), counter: 0 };
    let mut body = String::new();
    for d in &inst.decls {
        writeln!(body, "(declare-const {} Real)", sym(&d.name)).unwrap();
    }
    for p in inst.props() {
        writeln!(body, "(declare-const {} Bool)", sym(&p)).unwrap();
    }
    let mut asserts = Vec::new();
    let bounds = inst.bound_constraints();
    if bounds != Formula::True {
        asserts.push(w.formula(&bounds)?);
    }
    for h in &inst.hard {
        asserts.push(w.formula(h)?);
    }
    let mut softs = Vec::new();
    for (f, wt) in &inst.soft {
        softs.push((w.formula(f)?, *wt));
    }
    let mut script = String::new();
    let ms = inst.timeout.as_millis().max(1);
    writeln!(script, "(set-option :timeout {ms})").unwrap();
    if nonlinear {
        script.push_str("(set-option :pp.decimal true)\n(set-option :pp.decimal_precision 20)\n");
    }
    let logic = match (nonlinear, sin == SinMode::Native && all.clone().any(Formula::contains_sin)) {
        (_, true) => "ALL",
        (true, false) => "QF_NRA",
        (false, false) => "QF_LRA",
    };
    writeln!(script, "(set-logic {logic})").unwrap();
    script.push_str(&body);
    for d in &w.decls {
        writeln!(script, "{d}").unwrap();
    }
    for a in asserts.iter().chain(&w.aux) {
        writeln!(script, "(assert {a})").unwrap();
    }
    match min_weight {
        Some(bound) if !softs.is_empty() => {
            let mut sum = Vec::new();
            for (i, (f, wt)) in softs.iter().enumerate() {
                writeln!(script, "(declare-const |soft!{i}| Bool)").unwrap();
                writeln!(script, "(assert (= |soft!{i}| {f}))").unwrap();
                sum.push(format!("(ite |soft!{i}| {} 0.0)", real(*wt)?));
            }
            if let Some(b) = bound {
                let total = if sum.len() == 1 { sum[0].clone() } else { format!("(+ {})", sum.join(" ")) };
                writeln!(script, "(assert (> {total} {}))", real(b)?).unwrap();
            }
        }
        _ => {
            for (f, wt) in &softs {
                if assert_soft {
                    writeln!(script, "(assert-soft {f} :weight {})", real(*wt)?).unwrap();
                }
            }
        }
    }
    script.push_str("(check-sat)\n(get-model)\n(exit)\n");
    Ok(script)
}

/// The script sent for an instance, for inspection and debugging.
pub fn render(inst: &MaxSmtInstance) -> Result<String, SmtError> {
    let sin = if inst.hard.iter().chain(inst.soft.iter().map(|(f, _)| f)).any(Formula::contains_sin) {
        SinMode::Piecewise
    } else {
        SinMode::Native
    };
    to_smtlib(inst, sin, true, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::VarDecl;

    #[test]
    fn literals_are_plain_decimals() {
        assert_eq!(real(3.0).unwrap(), "3.0");
        assert_eq!(real(-0.5).unwrap(), "(- 0.5)");
        assert_eq!(real(1e-7).unwrap(), "0.0000001");
        assert!(real(f64::NAN).is_err());
    }

    #[test]
    fn script_declares_bounds_and_soft() {
        let l = Expr::var("l");
        let inst = MaxSmtInstance {
            decls: vec![VarDecl::bounded("l", -100.0, 100.0)],
            hard: vec![Formula::lt(l.clone(), 1.0)],
            soft: vec![(Formula::gt(l, 0.0), 1.0)],
            timeout: Duration::from_secs(1),
        };
        let s = render(&inst).unwrap();
        assert!(s.contains("(set-logic QF_LRA)"));
        assert!(s.contains("(declare-const |l| Real)"));
        assert!(s.contains("(assert-soft (> |l| 0.0) :weight 1.0)"));
    }

    #[test]
    fn model_parsing_skips_auxiliaries() {
        let m = &sexp::parse_all("((define-fun x () Real (/ 1.0 4.0)) (define-fun |soft!0| () Bool true) (define-fun p () Bool false))")
            .unwrap()[0];
        let (vals, props) = parse_model(m).unwrap();
        assert_eq!(vals["x"], 0.25);
        assert_eq!(props.len(), 1);
        assert!(!props["p"]);
    }
}
