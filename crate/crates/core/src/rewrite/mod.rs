//! Compile-time rewrite relations over terms: unreachable propagation (P
//! rules, both directions), branch elimination (U rules, forward only), and
//! meaning-preserving equations (M rules, both directions), all applicable in
//! any context. A trace of steps is a checkable witness that one term
//! rewrites to another.

mod apply;
mod enumerate;
mod normalize;
mod search;

use std::fmt;
use std::str::FromStr;

use crate::safety::SafetyMode;
use crate::term::{print_term, read_sexps, term_from_sexp, BinOp, Name, Sexp, Term};

pub use apply::{apply_rule, apply_trace, eplus_holes, is_eplus_path, RewriteError, TraceError};
pub use enumerate::{applicable_rules, Budget, Instance, ParamNeed};
pub use normalize::normalize_unreachable;
pub use search::{search_equiv, structural_diff, SearchConfig};

/// A child-index path from the root of a term.
pub type Path = Vec<usize>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    P1,
    P2,
    P3,
    P4,
    P5,
    U1,
    U2,
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    M7,
    M8,
    M9,
    M10,
}

impl RuleId {
    pub const ALL: [RuleId; 17] = [
        RuleId::P1,
        RuleId::P2,
        RuleId::P3,
        RuleId::P4,
        RuleId::P5,
        RuleId::U1,
        RuleId::U2,
        RuleId::M1,
        RuleId::M2,
        RuleId::M3,
        RuleId::M4,
        RuleId::M5,
        RuleId::M6,
        RuleId::M7,
        RuleId::M8,
        RuleId::M9,
        RuleId::M10,
    ];

    pub fn family(self) -> RuleFamily {
        use RuleId::*;
        match self {
            P1 | P2 | P3 | P4 | P5 => RuleFamily::Propagation,
            U1 | U2 => RuleFamily::Undefined,
            _ => RuleFamily::Meaning,
        }
    }

    pub fn allows(self, dir: Direction) -> bool {
        dir == Direction::Fwd || self.family() != RuleFamily::Undefined
    }

    pub fn as_str(self) -> &'static str {
        use RuleId::*;
        match self {
            P1 => "P1",
            P2 => "P2",
            P3 => "P3",
            P4 => "P4",
            P5 => "P5",
            U1 => "U1",
            U2 => "U2",
            M1 => "M1",
            M2 => "M2",
            M3 => "M3",
            M4 => "M4",
            M5 => "M5",
            M6 => "M6",
            M7 => "M7",
            M8 => "M8",
            M9 => "M9",
            M10 => "M10",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

/// The three relations. Only `Undefined` rules are one-way.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleFamily {
    Propagation,
    Undefined,
    Meaning,
}

/// `Fwd` is the direction in which a rule shrinks or collapses the term;
/// `Bwd` is its inverse and usually needs injected parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Fwd,
    Bwd,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Fwd => "fwd",
            Direction::Bwd => "bwd",
        })
    }
}

impl FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fwd" => Ok(Direction::Fwd),
            "bwd" => Ok(Direction::Bwd),
            _ => Err(format!("unknown direction `{s}`")),
        }
    }
}

/// Rule-specific payload. Which fields a rule reads is documented on
/// [`apply_rule`]; unused fields are ignored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RuleParams {
    pub term: Option<Term>,
    pub term2: Option<Term>,
    pub value: Option<Term>,
    pub var: Option<Name>,
    pub body: Option<Term>,
    pub arg: Option<Term>,
    pub op: Option<BinOp>,
    pub hole: Option<Path>,
    /// The provider that validated a safety side condition.
    pub safety: Option<SafetyMode>,
}

impl RuleParams {
    pub fn is_empty(&self) -> bool {
        *self == RuleParams::default()
    }

    pub fn with_term(mut self, t: Term) -> Self {
        self.term = Some(t);
        self
    }
    pub fn with_term2(mut self, t: Term) -> Self {
        self.term2 = Some(t);
        self
    }
    pub fn with_value(mut self, t: Term) -> Self {
        self.value = Some(t);
        self
    }
    pub fn with_op(mut self, op: BinOp) -> Self {
        self.op = Some(op);
        self
    }
    pub fn with_hole(mut self, hole: Path) -> Self {
        self.hole = Some(hole);
        self
    }
    pub fn with_safety(mut self, mode: SafetyMode) -> Self {
        self.safety = Some(mode);
        self
    }
    pub fn with_abstraction(mut self, var: Name, body: Term, arg: Term) -> Self {
        self.var = Some(var);
        self.body = Some(body);
        self.arg = Some(arg);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RewriteStep {
    pub rule: RuleId,
    pub dir: Direction,
    pub path: Path,
    pub params: RuleParams,
}

impl RewriteStep {
    pub fn new(rule: RuleId, dir: Direction, path: Path) -> Self {
        RewriteStep {
            rule,
            dir,
            path,
            params: RuleParams::default(),
        }
    }

    pub fn fwd(rule: RuleId, path: Path) -> Self {
        RewriteStep::new(rule, Direction::Fwd, path)
    }

    pub fn bwd(rule: RuleId, path: Path) -> Self {
        RewriteStep::new(rule, Direction::Bwd, path)
    }

    pub fn with_params(mut self, params: RuleParams) -> Self {
        self.params = params;
        self
    }
}

pub type RewriteTrace = Vec<RewriteStep>;

pub fn format_path(p: &[usize]) -> String {
    if p.is_empty() {
        ".".to_string()
    } else {
        p.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

pub fn parse_path(s: &str) -> Result<Path, String> {
    if s == "." {
        return Ok(Vec::new());
    }
    s.split('.')
        .map(|part| part.parse::<usize>().map_err(|_| format!("bad path `{s}`")))
        .collect()
}

impl fmt::Display for RewriteStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.rule, self.dir, format_path(&self.path))?;
        let p = &self.params;
        let mut parts: Vec<String> = Vec::new();
        let mut kv = |k: &str, v: String| parts.push(format!("({k} {v})"));
        if let Some(t) = &p.term {
            kv("term", print_term(t));
        }
        if let Some(t) = &p.term2 {
            kv("term2", print_term(t));
        }
        if let Some(t) = &p.value {
            kv("value", print_term(t));
        }
        if let Some(x) = &p.var {
            kv("var", x.to_string());
        }
        if let Some(t) = &p.body {
            kv("body", print_term(t));
        }
        if let Some(t) = &p.arg {
            kv("arg", print_term(t));
        }
        if let Some(op) = p.op {
            kv("op", op.symbol().to_string());
        }
        if let Some(h) = &p.hole {
            kv("hole", format_path(h));
        }
        if let Some(s) = p.safety {
            kv("safety", s.to_string());
        }
        if !parts.is_empty() {
            write!(f, " ({})", parts.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("trace line {line}: {msg}")]
pub struct TraceParseError {
    pub line: usize,
    pub msg: String,
}

/// One step per non-blank line; `;` starts a comment.
pub fn parse_trace(src: &str) -> Result<RewriteTrace, TraceParseError> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| TraceParseError { line: i + 1, msg };
        out.push(parse_step(line).map_err(err)?);
    }
    Ok(out)
}

pub fn parse_step(line: &str) -> Result<RewriteStep, String> {
    let mut it = line.splitn(4, char::is_whitespace);
    let rule: RuleId = it.next().unwrap_or("").parse()?;
    let dir: Direction = it.next().ok_or("missing direction")?.parse()?;
    let path = parse_path(it.next().ok_or("missing path")?)?;
    let mut params = RuleParams::default();
    if let Some(rest) = it.next().map(str::trim).filter(|r| !r.is_empty()) {
        let sexps = read_sexps(rest).map_err(|e| e.to_string())?;
        let [Sexp::List { items, .. }] = sexps.as_slice() else {
            return Err("parameters must be one list".into());
        };
        for item in items {
            let pair = item
                .as_list()
                .filter(|l| l.len() == 2)
                .ok_or_else(|| format!("bad parameter `{item}`"))?;
            let (key, val) = (&pair[0], &pair[1]);
            let key = key.as_atom().ok_or("parameter key must be a symbol")?;
            let term = || term_from_sexp(val).map_err(|e| e.to_string());
            let atom = || val.as_atom().ok_or_else(|| format!("`{key}` takes a symbol"));
            match key {
                "term" => params.term = Some(term()?),
                "term2" => params.term2 = Some(term()?),
                "value" => params.value = Some(term()?),
                "body" => params.body = Some(term()?),
                "arg" => params.arg = Some(term()?),
                "var" => params.var = Some(Name::new(atom()?)),
                "op" => {
                    let a = atom()?;
                    params.op = Some(BinOp::from_symbol(a).ok_or(format!("unknown operator `{a}`"))?)
                }
                "hole" => params.hole = Some(parse_path(atom()?)?),
                "safety" => params.safety = Some(atom()?.parse().map_err(|e| format!("{e}"))?),
                other => return Err(format!("unknown parameter `{other}`")),
            }
        }
    }
    Ok(RewriteStep {
        rule,
        dir,
        path,
        params,
    })
}

pub fn format_trace(trace: &[RewriteStep]) -> String {
    trace.iter().map(|s| format!("{s}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    #[test]
    fn step_text_round_trips() {
        let steps = [
            "U1 fwd .",
            "U1 fwd 0.2",
            "M4 fwd . ((safety integer))",
            "P1 bwd 1.0 ((term (+ 1 2)) (safety syntactic))",
            "M3 bwd . ((var x) (body (+ x x)) (arg 2) (safety syntactic))",
            "M5 bwd 0 ((term 2) (term2 3) (op +))",
            "M6 fwd . ((hole 0.1))",
            "P5 bwd . ((term 1) (term2 (lambda (y) y)))",
        ];
        for s in steps {
            let step = parse_step(s).unwrap();
            assert_eq!(step.to_string(), s);
        }
    }

    #[test]
    fn trace_parsing() {
        let t = parse_trace("; header\nU1 fwd .\n\nM4 fwd .   ; drop\n").unwrap();
        assert_eq!(
            t,
            vec![
                RewriteStep::fwd(RuleId::U1, vec![]),
                RewriteStep::fwd(RuleId::M4, vec![])
            ]
        );
        let e = parse_trace("U1 fwd .\nQ9 fwd .").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_step("U1 sideways .").is_err());
        assert!(parse_step("U1 fwd 0.x").is_err());
        assert!(parse_step("P1 bwd . ((color red))").is_err());
    }

    #[test]
    fn params_keep_terms() {
        let s = parse_step("M1 bwd . ((value true) (term (unreachable)))").unwrap();
        assert_eq!(s.params.value, Some(Term::bool(true)));
        assert_eq!(s.params.term, Some(parse_term("(unreachable)").unwrap()));
    }
}
