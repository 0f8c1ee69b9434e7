//! Lexer, recursive-descent parser and evaluator for map expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := number | ident | '(' expr ')' | func '(' expr (',' expr)* ')'
//! ```

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use super::SysdefError;

pub const PHI: f64 = 1.618_033_988_749_895;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    R,
    Theta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Mod2pi,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "mod2pi" => Func::Mod2pi,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Mod2pi => {
                let w = v.rem_euclid(TAU);
                if w >= TAU {
                    0.0
                } else {
                    w
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Call(Func, Vec<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

/// Coordinates available to an expression.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Env {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub theta: f64,
}

impl Env {
    pub fn from_cartesian(x: f64, y: f64) -> Self {
        let theta = Func::Mod2pi.apply(y.atan2(x));
        Env {
            x,
            y,
            r: x.hypot(y),
            theta,
        }
    }
}

impl Expr {
    pub fn eval(&self, env: &Env) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X) => env.x,
            Expr::Var(Var::Y) => env.y,
            Expr::Var(Var::R) => env.r,
            Expr::Var(Var::Theta) => env.theta,
            Expr::Call(f, args) => f.apply(args[0].eval(env)),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(env), b.eval(env));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Op(c) => format!("'{c}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
        }
    }
}

/// Where a piece of source text sits in its file, for error positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Origin {
    pub line: usize,
    pub column: usize,
}

impl Default for Origin {
    fn default() -> Self {
        Origin { line: 1, column: 1 }
    }
}

struct Spanned {
    tok: Tok,
    column: usize,
}

fn lex(src: &str, origin: Origin) -> Result<(Vec<Spanned>, usize), SysdefError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let col = |i: usize| origin.column + i;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            _ if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '+' | '*' | '/' => {
                i += 1;
                Tok::Op(c)
            }
            '-' | '\u{2212}' => {
                i += 1;
                Tok::Op('-')
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            _ if c.is_ascii_digit() || c == '.' => {
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && matches!(chars[i], 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j], '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v = text.parse::<f64>().map_err(|_| SysdefError::Lex {
                    line: origin.line,
                    column: col(start),
                    message: format!("malformed number '{text}'"),
                })?;
                Tok::Num(v)
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            _ => {
                return Err(SysdefError::Lex {
                    line: origin.line,
                    column: col(start),
                    message: format!("unexpected character '{c}'"),
                })
            }
        };
        out.push(Spanned {
            tok,
            column: col(start),
        });
    }
    Ok((out, col(chars.len())))
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    end_column: usize,
    line: usize,
    constants: &'a BTreeMap<String, f64>,
    /// Columns of currently open parentheses.
    open: Vec<usize>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_column, |s| s.column)
    }

    fn error(&self, expected: &str) -> SysdefError {
        let (column, found) = match self.toks.get(self.pos) {
            Some(s) => (s.column, s.tok.describe()),
            None => (self.end_column, "end of input".to_string()),
        };
        let mut message = format!("expected {expected}, found {found}");
        if let Some(open) = self.open.last() {
            if self.pos >= self.toks.len() {
                message.push_str(&format!(" (unclosed '(' at column {open})"));
            }
        }
        SysdefError::Parse {
            line: self.line,
            column,
            message,
        }
    }

    fn expr(&mut self) -> Result<Expr, SysdefError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, SysdefError> {
        let mut lhs = self.factor()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn close(&mut self) -> Result<(), SysdefError> {
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
            self.open.pop();
            Ok(())
        } else {
            Err(self.error("')'"))
        }
    }

    fn factor(&mut self) -> Result<Expr, SysdefError> {
        let column = self.column();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                self.open.push(column);
                let e = self.expr()?;
                self.close()?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(f) = Func::lookup(&name) {
                    if self.peek() != Some(&Tok::LParen) {
                        return Err(self.error(&format!("'(' after function '{name}'")));
                    }
                    self.open.push(self.column());
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    if self.peek() != Some(&Tok::RParen) {
                        return Err(self.error("')' or ','"));
                    }
                    self.close()?;
                    if args.len() != 1 {
                        return Err(SysdefError::Parse {
                            line: self.line,
                            column,
                            message: format!("'{name}' takes 1 argument, got {}", args.len()),
                        });
                    }
                    return Ok(Expr::Call(f, args));
                }
                let var = match name.as_str() {
                    "x" => Expr::Var(Var::X),
                    "y" => Expr::Var(Var::Y),
                    "r" => Expr::Var(Var::R),
                    "theta" => Expr::Var(Var::Theta),
                    "pi" => Expr::Num(PI),
                    "phi" => Expr::Num(PHI),
                    other => match self.constants.get(other) {
                        Some(v) => Expr::Num(*v),
                        None => {
                            return Err(SysdefError::Parse {
                                line: self.line,
                                column,
                                message: format!("unknown identifier '{other}'"),
                            })
                        }
                    },
                };
                Ok(var)
            }
            _ => Err(self.error("a number, identifier or '('")),
        }
    }
}

/// Parse a single expression, with user constants in scope.
pub fn parse_expr_with(src: &str, origin: Origin, constants: &BTreeMap<String, f64>) -> Result<Expr, SysdefError> {
    let (toks, end_column) = lex(src, origin)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end_column,
        line: origin.line,
        constants,
        open: Vec::new(),
    };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(p.error("an operator or end of input"));
    }
    Ok(e)
}

pub fn parse_expr(src: &str) -> Result<Expr, SysdefError> {
    parse_expr_with(src, Origin::default(), &BTreeMap::new())
}

/// Split a component list on top-level commas, returning each piece with
/// its column offset.
pub(crate) fn split_components(src: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in src.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push((src[..start].chars().count(), &src[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((src[..start].chars().count(), &src[start..]));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, x: f64, y: f64) -> f64 {
        parse_expr(src).unwrap().eval(&Env::from_cartesian(x, y))
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(eval("8 - 2 - 1", 0.0, 0.0), 5.0);
        assert_eq!(eval("8 / 2 / 2", 0.0, 0.0), 2.0);
        assert_eq!(eval("(1 + 2) * 3", 0.0, 0.0), 9.0);
    }

    #[test]
    fn functions_constants_and_exponents() {
        assert!((eval("cos(pi)", 0.0, 0.0) + 1.0).abs() < 1e-15);
        assert!((eval("phi * phi - phi", 0.0, 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(eval("2.5e-1 * x", 4.0, 0.0), 1.0);
        assert!((eval("mod2pi(theta + 2 * pi)", 0.0, 1.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn unclosed_call_reports_end_of_input() {
        let err = parse_expr("sin(x").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("end of input"), "{msg}");
        assert!(msg.contains("unclosed '('"), "{msg}");
        assert!(matches!(err, SysdefError::Parse { line: 1, column: 6, .. }));
    }

    #[test]
    fn no_unary_minus() {
        assert!(matches!(parse_expr("-x"), Err(SysdefError::Parse { column: 1, .. })));
    }

    #[test]
    fn lexical_errors_carry_columns() {
        assert!(matches!(parse_expr("x + $"), Err(SysdefError::Lex { column: 5, .. })));
    }

    #[test]
    fn arity_is_checked() {
        assert!(parse_expr("sin(x, y)").is_err());
        assert!(parse_expr("sin x").is_err());
    }

    #[test]
    fn splits_on_top_level_commas() {
        let parts = split_components(" r, mod2pi(theta + r)");
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[1], (3, " mod2pi(theta + r)"));
    }
}
