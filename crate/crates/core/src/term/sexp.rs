//! A minimal s-expression reader shared by the term and trace parsers.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom { text: String, line: usize, col: usize },
    List { items: Vec<Sexp>, line: usize, col: usize },
}

impl Sexp {
    pub fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom { line, col, .. } | Sexp::List { line, col, .. } => (*line, *col),
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom { .. } => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom { text, .. } => f.write_str(text),
            Sexp::List { items, .. } => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct SexpError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

/// Read every top-level s-expression in `src`. `;` starts a line comment.
pub fn read_sexps(src: &str) -> Result<Vec<Sexp>, SexpError> {
    let mut out = Vec::new();
    // Each frame: (items, line, col) of an open list.
    let mut stack: Vec<(Vec<Sexp>, usize, usize)> = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    let push = |stack: &mut Vec<(Vec<Sexp>, usize, usize)>, out: &mut Vec<Sexp>, s: Sexp| match stack.last_mut() {
        Some(top) => top.0.push(s),
        None => out.push(s),
    };

    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                chars.next();
                stack.push((Vec::new(), line, col));
                col += 1;
            }
            ')' => {
                chars.next();
                let (items, l, c0) = stack.pop().ok_or_else(|| SexpError {
                    line,
                    col,
                    msg: "unexpected ')'".into(),
                })?;
                col += 1;
                push(
                    &mut stack,
                    &mut out,
                    Sexp::List {
                        items,
                        line: l,
                        col: c0,
                    },
                );
            }
            _ => {
                let (l, c0) = (line, col);
                let mut text = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    text.push(c);
                    chars.next();
                    col += 1;
                }
                push(&mut stack, &mut out, Sexp::Atom { text, line: l, col: c0 });
            }
        }
    }
    if let Some((_, l, c)) = stack.last() {
        return Err(SexpError {
            line: *l,
            col: *c,
            msg: "unclosed '('".into(),
        });
    }
    Ok(out)
}
