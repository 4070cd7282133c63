//! LP-format serialization of models and a parser for the same dialect.
//!
//! The writer emits `Maximize`, `Subject To`, `Bounds`, and `Binary`
//! sections with every coefficient printed explicitly in round-trip `f64`
//! precision and with fully deterministic ordering, so two builds of the
//! same instance produce byte-identical files. The parser accepts the
//! written subset (plus minor whitespace/layout freedom) and is used both by
//! the bundled solver adapter and by round-trip tests.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::Error;
use crate::milp::{MilpModel, Relation, VarKind};
use crate::Result;

const MAX_LINE: usize = 200;

/// Serializes a model to LP-format text.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ mespp {} model for instance {}",
        model.kind().code(),
        model.instance_digest()
    );

    out.push_str("Maximize\n");
    let mut line = String::from(" obj:");
    for (idx, &(var, coef)) in model.objective().terms().iter().enumerate() {
        push_term(&mut out, &mut line, idx == 0, coef, &model.var(var).name.to_string());
    }
    out.push_str(&line);
    out.push('\n');

    out.push_str("Subject To\n");
    for constraint in model.constraints() {
        let mut line = format!(" {}:", constraint.name);
        for (idx, &(var, coef)) in constraint.expr.terms().iter().enumerate() {
            push_term(&mut out, &mut line, idx == 0, coef, &model.var(var).name.to_string());
        }
        let tail = format!(" {} {}", constraint.relation.symbol(), constraint.rhs);
        if line.len() + tail.len() > MAX_LINE {
            out.push_str(&line);
            out.push('\n');
            line = String::from(" ");
        }
        line.push_str(&tail);
        out.push_str(&line);
        out.push('\n');
    }

    out.push_str("Bounds\n");
    for var in model.vars() {
        if let VarKind::Continuous { lo, hi } = var.kind {
            let _ = writeln!(out, " {lo} <= {} <= {hi}", var.name);
        }
    }

    out.push_str("Binary\n");
    for var in model.vars() {
        if var.kind == VarKind::Binary {
            let _ = writeln!(out, " {}", var.name);
        }
    }

    out.push_str("End\n");
    out
}

/// Appends one `+ coef name` term to `line`, flushing to `out` when the line
/// would grow past the wrap limit.
fn push_term(out: &mut String, line: &mut String, first: bool, coef: f64, name: &str) {
    let term = if first && coef >= 0.0 {
        format!("{coef} {name}")
    } else if coef >= 0.0 {
        format!("+ {coef} {name}")
    } else {
        format!("- {} {name}", -coef)
    };
    if line.len() + term.len() + 1 > MAX_LINE {
        out.push_str(line);
        out.push('\n');
        line.clear();
        line.push(' ');
    }
    line.push(' ');
    line.push_str(&term);
}

/// One parsed constraint row.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConstraint {
    pub name: Option<String>,
    pub terms: Vec<(String, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Optimization sense of a parsed file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Structured contents of an LP file.
#[derive(Debug, Clone)]
pub struct ParsedLp {
    pub sense: Sense,
    pub objective: Vec<(String, f64)>,
    pub constraints: Vec<ParsedConstraint>,
    /// Explicit bounds on continuous variables, `(low, high)`.
    pub bounds: Vec<(String, f64, f64)>,
    pub binaries: Vec<String>,
    pub generals: Vec<String>,
    /// Every variable name in order of first appearance.
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Num(f64),
    Plus,
    Minus,
    Colon,
    Rel(Relation),
}

fn tokenize(text: &str, line_base: usize) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = line_base;
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            ':' => {
                tokens.push(Token::Colon);
                chars.next();
            }
            '+' => {
                tokens.push(Token::Plus);
                chars.next();
            }
            '-' => {
                tokens.push(Token::Minus);
                chars.next();
            }
            '<' | '>' | '=' => {
                chars.next();
                if chars.peek() == Some(&'=') {
                    chars.next();
                }
                tokens.push(Token::Rel(match c {
                    '<' => Relation::Le,
                    '>' => Relation::Ge,
                    _ => Relation::Eq,
                }));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push(Token::Ident(ident));
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut num = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        num.push(c);
                        chars.next();
                    } else if c == 'e' || c == 'E' {
                        num.push(c);
                        chars.next();
                        if let Some(&sign @ ('+' | '-')) = chars.peek() {
                            num.push(sign);
                            chars.next();
                        }
                    } else {
                        break;
                    }
                }
                let value: f64 = num.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("invalid number `{num}`"),
                })?;
                tokens.push(Token::Num(value));
            }
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    Ok(tokens)
}

struct ExprParser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> ExprParser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    /// `[name :] terms` up to (not consuming) a relation or the end.
    fn parse_label(&mut self) -> Option<String> {
        if let (Some(Token::Ident(name)), Some(Token::Colon)) =
            (self.tokens.get(self.pos), self.tokens.get(self.pos + 1))
        {
            let name = name.clone();
            self.pos += 2;
            Some(name)
        } else {
            None
        }
    }

    fn parse_terms(&mut self) -> Result<Vec<(String, f64)>> {
        let mut terms = Vec::new();
        loop {
            let mut sign = 1.0;
            let mut saw_sign = false;
            while let Some(tok) = self.peek() {
                match tok {
                    Token::Plus => {
                        self.pos += 1;
                        saw_sign = true;
                    }
                    Token::Minus => {
                        sign = -sign;
                        self.pos += 1;
                        saw_sign = true;
                    }
                    _ => break,
                }
            }
            let coef = if let Some(Token::Num(value)) = self.peek() {
                let value = *value;
                self.pos += 1;
                value
            } else {
                1.0
            };
            match self.peek() {
                Some(Token::Ident(name)) => {
                    terms.push((name.clone(), sign * coef));
                    self.pos += 1;
                }
                _ if saw_sign || terms.is_empty() => {
                    return Err(Error::Parse {
                        line: 0,
                        message: "expected variable name in expression".into(),
                    });
                }
                _ => {
                    // Trailing number belongs to the caller (constraint rhs).
                    self.pos -= 1;
                    break;
                }
            }
            if !matches!(
                self.peek(),
                Some(Token::Plus) | Some(Token::Minus) | Some(Token::Num(_))
            ) {
                break;
            }
        }
        Ok(terms)
    }

    fn parse_signed_number(&mut self) -> Result<f64> {
        let mut sign = 1.0;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Plus => self.pos += 1,
                Token::Minus => {
                    sign = -sign;
                    self.pos += 1;
                }
                _ => break,
            }
        }
        match self.next() {
            Some(Token::Num(value)) => Ok(sign * value),
            other => Err(Error::Parse {
                line: 0,
                message: format!("expected number, got {other:?}"),
            }),
        }
    }
}

/// Parses LP-format text into its structured form.
pub fn parse_lp(text: &str) -> Result<ParsedLp> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        Preamble,
        Objective(Sense),
        Constraints,
        Bounds,
        Binary,
        General,
        Done,
    }

    let mut sections: Vec<(Section, String, usize)> = Vec::new();
    let mut current = Section::Preamble;
    let mut buffer = String::new();
    let mut buffer_line = 1;
    let flush =
        |sections: &mut Vec<(Section, String, usize)>, sec: Section, buf: &mut String, line| {
            if !buf.trim().is_empty() {
                sections.push((sec, std::mem::take(buf), line));
            } else {
                buf.clear();
            }
        };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('\\').next().unwrap_or("");
        let keyword = line.trim().to_ascii_lowercase();
        let new_section = match keyword.as_str() {
            "maximize" | "maximise" | "max" => Some(Section::Objective(Sense::Maximize)),
            "minimize" | "minimise" | "min" => Some(Section::Objective(Sense::Minimize)),
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" | "bound" => Some(Section::Bounds),
            "binary" | "binaries" | "bin" => Some(Section::Binary),
            "general" | "generals" | "gen" | "integers" => Some(Section::General),
            "end" => Some(Section::Done),
            _ => None,
        };
        if let Some(section) = new_section {
            flush(&mut sections, current, &mut buffer, buffer_line);
            current = section;
            buffer_line = line_no + 1;
        } else {
            buffer.push_str(line);
            buffer.push('\n');
        }
    }
    flush(&mut sections, current, &mut buffer, buffer_line);

    let mut parsed = ParsedLp {
        sense: Sense::Maximize,
        objective: Vec::new(),
        constraints: Vec::new(),
        bounds: Vec::new(),
        binaries: Vec::new(),
        generals: Vec::new(),
        columns: Vec::new(),
    };
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut record = |columns: &mut Vec<String>, name: &str| {
        if seen.insert(name.to_string()) {
            columns.push(name.to_string());
        }
    };

    for (section, body, line) in sections {
        match section {
            Section::Preamble | Section::Done => {
                if !body.trim().is_empty() && matches!(section, Section::Preamble) {
                    return Err(Error::Parse {
                        line,
                        message: "content before the objective section".into(),
                    });
                }
            }
            Section::Objective(sense) => {
                parsed.sense = sense;
                let tokens = tokenize(&body, line)?;
                let mut parser = ExprParser {
                    tokens: &tokens,
                    pos: 0,
                };
                parser.parse_label();
                if parser.peek().is_some() {
                    parsed.objective = parser.parse_terms()?;
                }
                for (name, _) in &parsed.objective {
                    record(&mut parsed.columns, name);
                }
            }
            Section::Constraints => {
                let tokens = tokenize(&body, line)?;
                let mut parser = ExprParser {
                    tokens: &tokens,
                    pos: 0,
                };
                while parser.peek().is_some() {
                    let name = parser.parse_label();
                    let terms = parser.parse_terms()?;
                    let relation = match parser.next() {
                        Some(Token::Rel(rel)) => *rel,
                        other => {
                            return Err(Error::Parse {
                                line,
                                message: format!("expected constraint relation, got {other:?}"),
                            });
                        }
                    };
                    let rhs = parser.parse_signed_number()?;
                    for (term, _) in &terms {
                        record(&mut parsed.columns, term);
                    }
                    parsed.constraints.push(ParsedConstraint {
                        name,
                        terms,
                        relation,
                        rhs,
                    });
                }
            }
            Section::Bounds => {
                for (offset, raw) in body.lines().enumerate() {
                    if raw.trim().is_empty() {
                        continue;
                    }
                    let tokens = tokenize(raw, line + offset)?;
                    let bound = parse_bound_line(&tokens).ok_or_else(|| Error::Parse {
                        line: line + offset,
                        message: format!("unsupported bound line `{}`", raw.trim()),
                    })?;
                    record(&mut parsed.columns, &bound.0);
                    parsed.bounds.push(bound);
                }
            }
            Section::Binary | Section::General => {
                let tokens = tokenize(&body, line)?;
                for token in tokens {
                    match token {
                        Token::Ident(name) => {
                            record(&mut parsed.columns, &name);
                            if section == Section::Binary {
                                parsed.binaries.push(name);
                            } else {
                                parsed.generals.push(name);
                            }
                        }
                        other => {
                            return Err(Error::Parse {
                                line,
                                message: format!("expected variable name, got {other:?}"),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(parsed)
}

fn parse_bound_line(tokens: &[Token]) -> Option<(String, f64, f64)> {
    use Token::*;
    match tokens {
        // lo <= v <= hi
        [Num(lo), Rel(Relation::Le), Ident(name), Rel(Relation::Le), Num(hi)] => {
            Some((name.clone(), *lo, *hi))
        }
        [Minus, Num(lo), Rel(Relation::Le), Ident(name), Rel(Relation::Le), Num(hi)] => {
            Some((name.clone(), -lo, *hi))
        }
        [Ident(name), Rel(Relation::Le), Num(hi)] => Some((name.clone(), 0.0, *hi)),
        [Ident(name), Rel(Relation::Ge), Num(lo)] => Some((name.clone(), *lo, f64::INFINITY)),
        [Ident(name), Rel(Relation::Eq), Num(value)] => Some((name.clone(), *value, *value)),
        [Ident(name), Ident(kw)] if kw.eq_ignore_ascii_case("free") => {
            Some((name.clone(), f64::NEG_INFINITY, f64::INFINITY))
        }
        _ => None,
    }
}
