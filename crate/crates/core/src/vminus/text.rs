//! Text format for functions. Tokens are separated by whitespace, except
//! that `{ } ( ) [ ] , :` always stand alone.

use num_bigint::BigInt;

use crate::term::{BinOp, Name};

use super::validate::{validate, ValidationError};
use super::{Block, Command, Phi, Terminator, VFunction, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct VminusSyntaxError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VminusError {
    #[error("syntax error at {0}")]
    Syntax(#[from] VminusSyntaxError),
    #[error("invalid function:\n{}", format_errors(.0))]
    Invalid(Vec<ValidationError>),
}

fn format_errors(errs: &[ValidationError]) -> String {
    errs.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

/// Parse and validate.
pub fn parse_vminus(src: &str) -> Result<VFunction, VminusError> {
    let f = parse_vminus_unchecked(src)?;
    validate(&f).map_err(VminusError::Invalid)?;
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Tok {
    text: String,
    line: usize,
    col: usize,
}

fn tokenize(src: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let line = line.split(';').next().unwrap_or("");
        let mut cur = String::new();
        let mut start = 0;
        let flush = |cur: &mut String, start: usize, out: &mut Vec<Tok>| {
            if !cur.is_empty() {
                out.push(Tok {
                    text: std::mem::take(cur),
                    line: ln + 1,
                    col: start + 1,
                });
            }
        };
        for (i, ch) in line.chars().enumerate() {
            if ch.is_whitespace() {
                flush(&mut cur, start, &mut out);
            } else if "{}()[],:".contains(ch) {
                flush(&mut cur, start, &mut out);
                out.push(Tok {
                    text: ch.to_string(),
                    line: ln + 1,
                    col: i + 1,
                });
            } else {
                if cur.is_empty() {
                    start = i;
                }
                cur.push(ch);
            }
        }
        flush(&mut cur, start, &mut out);
    }
    out
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    end: (usize, usize),
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '.')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn is_var(s: &str) -> bool {
    s.len() > 1
        && s.starts_with('%')
        && s[1..]
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn parse_op(s: &str) -> Option<BinOp> {
    BinOp::from_mnemonic(s).or_else(|| BinOp::from_symbol(s))
}

impl Parser {
    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(|t| t.text.as_str())
    }

    fn peek_at(&self, k: usize) -> Option<&str> {
        self.toks.get(self.pos + k).map(|t| t.text.as_str())
    }

    fn error(&self, msg: impl Into<String>) -> VminusSyntaxError {
        let (line, col) = self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.col));
        VminusSyntaxError {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<String, VminusSyntaxError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.text.clone())
            }
            None => Err(self.error(format!("expected {what}, found end of input"))),
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), VminusSyntaxError> {
        match self.peek() {
            Some(t) if t == s => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.error(format!("expected `{s}`, found `{t}`"))),
            None => Err(self.error(format!("expected `{s}`, found end of input"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<Name, VminusSyntaxError> {
        match self.peek() {
            Some(t) if is_ident(t) => Ok(Name::new(&self.next(what)?)),
            Some(t) => Err(self.error(format!("expected {what}, found `{t}`"))),
            None => Err(self.error(format!("expected {what}, found end of input"))),
        }
    }

    fn var(&mut self) -> Result<Name, VminusSyntaxError> {
        match self.peek() {
            Some(t) if is_var(t) => Ok(Name::new(&self.next("variable")?)),
            Some(t) => Err(self.error(format!("expected variable, found `{t}`"))),
            None => Err(self.error("expected variable, found end of input")),
        }
    }

    fn value(&mut self) -> Result<Value, VminusSyntaxError> {
        let Some(t) = self.peek() else {
            return Err(self.error("expected value, found end of input"));
        };
        if is_var(t) {
            return Ok(Value::Var(self.var()?));
        }
        match t.parse::<BigInt>() {
            Ok(i) => {
                self.pos += 1;
                Ok(Value::Int(i))
            }
            Err(_) => Err(self.error(format!("expected value, found `{t}`"))),
        }
    }

    fn function(&mut self) -> Result<VFunction, VminusSyntaxError> {
        self.expect("fun")?;
        let name = self.ident("function name")?;
        self.expect("(")?;
        let mut params = Vec::new();
        if self.peek() != Some(")") {
            params.push(self.var()?);
            while self.peek() == Some(",") {
                self.pos += 1;
                params.push(self.var()?);
            }
        }
        self.expect(")")?;
        self.expect("{")?;
        let mut blocks = Vec::new();
        while self.peek() != Some("}") {
            blocks.push(self.block()?);
        }
        if blocks.is_empty() {
            return Err(self.error("a function needs at least one block"));
        }
        self.expect("}")?;
        if let Some(t) = self.peek() {
            return Err(self.error(format!("unexpected `{t}` after function")));
        }
        Ok(VFunction { name, params, blocks })
    }

    fn block(&mut self) -> Result<Block, VminusSyntaxError> {
        let label = self.ident("block label")?;
        self.expect(":")?;
        let mut phis = Vec::new();
        while self.peek().is_some_and(is_var) && self.peek_at(2) == Some("phi") {
            phis.push(self.phi()?);
        }
        let mut commands = Vec::new();
        loop {
            match self.peek() {
                Some(t) if is_var(t) => commands.push(self.assign()?),
                Some("call") => {
                    self.pos += 1;
                    self.expect("error")?;
                    self.expect("(")?;
                    self.expect(")")?;
                    commands.push(Command::CallError);
                }
                _ => break,
            }
        }
        let terminator = self.terminator()?;
        Ok(Block {
            label,
            phis,
            commands,
            terminator,
        })
    }

    fn phi(&mut self) -> Result<Phi, VminusSyntaxError> {
        let target = self.var()?;
        self.expect("=")?;
        self.expect("phi")?;
        let mut incoming = Vec::new();
        while self.peek() == Some("[") {
            self.pos += 1;
            let v = self.value()?;
            self.expect(",")?;
            let l = self.ident("predecessor label")?;
            self.expect("]")?;
            incoming.push((v, l));
        }
        if incoming.is_empty() {
            return Err(self.error("a phi needs at least one incoming value"));
        }
        Ok(Phi { target, incoming })
    }

    fn assign(&mut self) -> Result<Command, VminusSyntaxError> {
        let target = self.var()?;
        self.expect("=")?;
        if self.peek() == Some("phi") {
            return Err(self.error("phi nodes must precede commands"));
        }
        let op_text = self.next("operator")?;
        let Some(op) = parse_op(&op_text) else {
            self.pos -= 1;
            return Err(self.error(format!("unknown operator `{op_text}`")));
        };
        let left = self.value()?;
        let right = self.value()?;
        Ok(Command::Assign {
            target,
            op,
            left,
            right,
        })
    }

    fn terminator(&mut self) -> Result<Terminator, VminusSyntaxError> {
        match self.peek() {
            Some("ret") => {
                self.pos += 1;
                Ok(Terminator::Ret(self.value()?))
            }
            Some("br") => {
                self.pos += 1;
                if self.peek().is_some_and(is_ident) {
                    return Ok(Terminator::Br(self.ident("branch target")?));
                }
                let v = self.value()?;
                let a = self.ident("branch target")?;
                let b = self.ident("branch target")?;
                Ok(Terminator::BrCond(v, a, b))
            }
            Some("unreachable") => {
                self.pos += 1;
                Ok(Terminator::Unreachable)
            }
            Some(t) => Err(self.error(format!("expected a command or terminator, found `{t}`"))),
            None => Err(self.error("expected a terminator, found end of input")),
        }
    }
}

/// Parse without validating.
pub fn parse_vminus_unchecked(src: &str) -> Result<VFunction, VminusSyntaxError> {
    let toks = tokenize(src);
    let lines = src.lines().count().max(1);
    let mut p = Parser {
        toks,
        pos: 0,
        end: (lines, src.lines().last().map_or(1, |l| l.len() + 1)),
    };
    p.function()
}

/// Canonical text: two-space indentation, one instruction per line.
pub fn print_vminus(f: &VFunction) -> String {
    let params: Vec<&str> = f.params.iter().map(Name::as_str).collect();
    let mut out = format!("fun {}({}) {{\n", f.name, params.join(", "));
    for b in &f.blocks {
        out.push_str(&format!("{}:\n", b.label));
        for phi in &b.phis {
            out.push_str(&format!("  {} = phi", phi.target));
            for (v, l) in &phi.incoming {
                out.push_str(&format!(" [{v}, {l}]"));
            }
            out.push('\n');
        }
        for c in &b.commands {
            match c {
                Command::Assign {
                    target,
                    op,
                    left,
                    right,
                } => out.push_str(&format!("  {target} = {} {left} {right}\n", op.mnemonic())),
                Command::CallError => out.push_str("  call error()\n"),
            }
        }
        match &b.terminator {
            Terminator::Ret(v) => out.push_str(&format!("  ret {v}\n")),
            Terminator::Br(l) => out.push_str(&format!("  br {l}\n")),
            Terminator::BrCond(v, a, c) => out.push_str(&format!("  br {v} {a} {c}\n")),
            Terminator::Unreachable => out.push_str("  unreachable\n"),
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vminus::INTSQRT;

    #[test]
    fn intsqrt_roundtrips() {
        let f = parse_vminus(INTSQRT).unwrap();
        assert_eq!(f.blocks.len(), 5);
        assert_eq!(f.params, vec![Name::new("%in")]);
        assert_eq!(print_vminus(&f), INTSQRT);
    }

    #[test]
    fn trivial_function() {
        let f = parse_vminus("fun k() { entry: ret 0 }").unwrap();
        assert_eq!(f.blocks.len(), 1);
        assert_eq!(f.entry().terminator, Terminator::Ret(Value::int(0)));
        assert_eq!(print_vminus(&f), "fun k() {\nentry:\n  ret 0\n}\n");
    }

    #[test]
    fn symbols_are_accepted_as_operators() {
        let f = parse_vminus("fun g(%a) {\ne:\n  %b = <= %a 3 ; comment\n  ret %b\n}").unwrap();
        assert!(matches!(f.entry().commands[0], Command::Assign { op: BinOp::Le, .. }));
        assert!(print_vminus(&f).contains("%b = le %a 3"));
    }

    #[test]
    fn syntax_errors_have_positions() {
        let e = parse_vminus_unchecked("fun f() {\nentry:\n  %x = frob 1 2\n  ret %x\n}").unwrap_err();
        assert_eq!((e.line, e.col), (3, 8));
        let e = parse_vminus_unchecked("fun f() {\nentry:\n  ret 0\n").unwrap_err();
        assert!(e.msg.contains("end of input"), "{e}");
        let e = parse_vminus_unchecked("fun f() { a: %x = add 1 2 }").unwrap_err();
        assert!(e.msg.contains("terminator"), "{e}");
    }

    #[test]
    fn duplicate_label_is_a_validation_error() {
        let err = parse_vminus("fun f() { a: br a2 a2: ret 0 a: ret 1 }").unwrap_err();
        assert!(matches!(err, VminusError::Invalid(_)));
    }
}
