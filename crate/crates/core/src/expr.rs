//! Coordinate expressions: parsing, rendering, evaluation and forward-mode
//! derivatives.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-'? power
//! power  := atom ('^' factor)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus and is right associative, so `-x^2` is
//! `-(x^2)` and `a^b^c` is `a^(b^c)`. The functions are `sin`, `cos`, `exp`,
//! `log` (natural) and `sqrt`.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::dual::{powi, Dual, Real};

const FUNCTION_NAMES: [&str; 5] = ["sin", "cos", "exp", "log", "sqrt"];

/// Exponents closer than this to an integer are evaluated by repeated
/// multiplication.
const INTEGER_EXPONENT_TOL: f64 = 1e-12;

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A coordinate chart: the ordered coordinate names `z_1 … z_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    names: Arc<[String]>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChartError {
    Empty,
    InvalidName(String),
    ReservedName(String),
    DuplicateName(String),
}

impl fmt::Display for ChartError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChartError::Empty => write!(f, "chart must have at least one coordinate"),
            ChartError::InvalidName(n) => write!(f, "invalid coordinate name {n:?}"),
            ChartError::ReservedName(n) => {
                write!(f, "coordinate name {n:?} clashes with a function name")
            }
            ChartError::DuplicateName(n) => write!(f, "duplicate coordinate name {n:?}"),
        }
    }
}

impl core::error::Error for ChartError {}

impl Chart {
    pub fn new<I, S>(names: I) -> Result<Self, ChartError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(ChartError::Empty);
        }
        for (i, n) in names.iter().enumerate() {
            if !is_identifier(n) {
                return Err(ChartError::InvalidName(n.clone()));
            }
            if FUNCTION_NAMES.contains(&n.as_str()) {
                return Err(ChartError::ReservedName(n.clone()));
            }
            if names[..i].contains(n) {
                return Err(ChartError::DuplicateName(n.clone()));
            }
        }
        Ok(Chart { names: names.into() })
    }

    /// `z1, …, zn`.
    pub fn numbered(dim: usize) -> Result<Self, ChartError> {
        Chart::new((1..=dim).map(|i| alloc::format!("z{i}")))
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Expression tree node. Variables are chart coordinate indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn has_var(&self) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var(_) => true,
            Node::Neg(a) | Node::Call(_, a) => a.has_var(),
            Node::Binary(_, a, b) => a.has_var() || b.has_var(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    /// `position` is a byte offset into the source text.
    Syntax {
        position: usize,
        message: String,
    },
    UnknownSymbol {
        position: usize,
        name: String,
    },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax { position, message } => {
                write!(f, "syntax error at position {position}: {message}")
            }
            ParseError::UnknownSymbol { position, name } => {
                write!(f, "unknown symbol {name:?} at position {position}")
            }
        }
    }
}

impl core::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNonPositive,
    ZeroToNegativePower,
    NonPositiveBase,
}

/// Evaluation hit a singular sub-operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainError {
    pub kind: DomainErrorKind,
    /// Canonical rendering of the offending subexpression.
    pub subexpression: String,
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::LogOfNonPositive => "log of non-positive argument",
            DomainErrorKind::SqrtOfNonPositive => "sqrt of non-positive argument",
            DomainErrorKind::ZeroToNegativePower => "zero raised to a negative power",
            DomainErrorKind::NonPositiveBase => "non-positive base with non-integer exponent",
        };
        write!(f, "{what} in {}", self.subexpression)
    }
}

impl core::error::Error for DomainError {}

/// A parsed expression in the coordinates of a [`Chart`].
///
/// Immutable after parsing; evaluation is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpr {
    root: Node,
    chart: Chart,
}

impl ScalarExpr {
    pub fn parse(text: &str, chart: &Chart) -> Result<Self, ParseError> {
        let tokens = tokenize(text)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            chart,
            end: text.len(),
        };
        let root = parser.expr()?;
        match parser.peek() {
            None => Ok(ScalarExpr {
                root,
                chart: chart.clone(),
            }),
            Some(tok) => Err(ParseError::Syntax {
                position: tok.pos,
                message: "expected operator or end of input".to_string(),
            }),
        }
    }

    pub fn constant(value: f64, chart: &Chart) -> Self {
        ScalarExpr {
            root: Node::Const(value),
            chart: chart.clone(),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn arity(&self) -> usize {
        self.chart.dim()
    }

    /// True when no coordinate variable occurs in the tree.
    pub fn is_constant(&self) -> bool {
        !self.root.has_var()
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, DomainError> {
        assert_eq!(point.len(), self.arity(), "point dimension");
        self.eval_with(point)
    }

    /// Value and directional derivative along `direction`.
    pub fn eval_dual(&self, point: &[f64], direction: &[f64]) -> Result<Dual, DomainError> {
        assert_eq!(point.len(), self.arity(), "point dimension");
        assert_eq!(direction.len(), self.arity(), "direction dimension");
        let inputs: Vec<Dual> = point.iter().zip(direction).map(|(&p, &d)| Dual::new(p, d)).collect();
        self.eval_with(&inputs)
    }

    pub fn gradient(&self, point: &[f64]) -> Result<Vec<f64>, DomainError> {
        let n = self.arity();
        let mut dir = alloc::vec![0.0; n];
        let mut grad = Vec::with_capacity(n);
        for i in 0..n {
            dir[i] = 1.0;
            grad.push(self.eval_dual(point, &dir)?.eps);
            dir[i] = 0.0;
        }
        Ok(grad)
    }

    /// Evaluates with caller-supplied scalars for the coordinates.
    pub fn eval_with<T: Real>(&self, inputs: &[T]) -> Result<T, DomainError> {
        eval_node(&self.root, inputs, &self.chart)
    }
}

/// Fully parenthesised canonical form; reparses to an identical tree.
impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.chart)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, chart: &Chart) -> fmt::Result {
    match node {
        // Debug gives the shortest round-tripping decimal.
        Node::Const(c) => write!(f, "{c:?}"),
        Node::Var(i) => f.write_str(&chart.names()[*i]),
        Node::Neg(a) => {
            f.write_str("(-")?;
            write_node(f, a, chart)?;
            f.write_str(")")
        }
        Node::Binary(op, a, b) => {
            f.write_str("(")?;
            write_node(f, a, chart)?;
            write!(f, " {} ", op.symbol())?;
            write_node(f, b, chart)?;
            f.write_str(")")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a, chart)?;
            f.write_str(")")
        }
    }
}

fn render(node: &Node, chart: &Chart) -> String {
    struct Show<'a>(&'a Node, &'a Chart);
    impl fmt::Display for Show<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_node(f, self.0, self.1)
        }
    }
    Show(node, chart).to_string()
}

fn eval_node<T: Real>(node: &Node, inputs: &[T], chart: &Chart) -> Result<T, DomainError> {
    let fail = |kind| DomainError {
        kind,
        subexpression: render(node, chart),
    };
    Ok(match node {
        Node::Const(c) => T::from_f64(*c),
        Node::Var(i) => inputs[*i],
        Node::Neg(a) => -eval_node(a, inputs, chart)?,
        Node::Binary(op, a, b) => {
            let a = eval_node(a, inputs, chart)?;
            let b = eval_node(b, inputs, chart)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b.value() == 0.0 {
                        return Err(fail(DomainErrorKind::DivisionByZero));
                    }
                    a / b
                }
                BinOp::Pow => {
                    let e = b.value();
                    let rounded = libm::round(e);
                    let integral = b.is_constant()
                        && libm::fabs(e - rounded) < INTEGER_EXPONENT_TOL
                        && libm::fabs(rounded) < 9.0e15;
                    if a.value() == 0.0 && e < 0.0 {
                        return Err(fail(DomainErrorKind::ZeroToNegativePower));
                    }
                    if integral {
                        powi(a, rounded as i64)
                    } else if a.value() <= 0.0 {
                        return Err(fail(DomainErrorKind::NonPositiveBase));
                    } else {
                        a.powf(b)
                    }
                }
            }
        }
        Node::Call(func, a) => {
            let a = eval_node(a, inputs, chart)?;
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Log => {
                    if a.value() <= 0.0 {
                        return Err(fail(DomainErrorKind::LogOfNonPositive));
                    }
                    a.ln()
                }
                Func::Sqrt => {
                    if a.value() <= 0.0 {
                        return Err(fail(DomainErrorKind::SqrtOfNonPositive));
                    }
                    a.sqrt()
                }
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'*' => Some(TokenKind::Star),
            b'/' => Some(TokenKind::Slash),
            b'^' => Some(TokenKind::Caret),
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            _ => None,
        };
        if let Some(kind) = simple {
            tokens.push(Token { kind, pos: start });
            i += 1;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let literal = &text[start..i];
            let value: f64 = literal.parse().map_err(|_| ParseError::Syntax {
                position: start,
                message: alloc::format!("malformed number {literal:?}"),
            })?;
            if !value.is_finite() {
                return Err(ParseError::Syntax {
                    position: start,
                    message: alloc::format!("number {literal:?} is out of range"),
                });
            }
            tokens.push(Token {
                kind: TokenKind::Num(value),
                pos: start,
            });
        } else if c.is_ascii_alphabetic() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Ident(text[start..i].to_string()),
                pos: start,
            });
        } else {
            let ch = text[start..].chars().next().unwrap_or('?');
            return Err(ParseError::Syntax {
                position: start,
                message: alloc::format!("unexpected character {ch:?}"),
            });
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    chart: &'a Chart,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn syntax(&self, expected: &str) -> ParseError {
        let found = match self.peek() {
            None => "end of input".to_string(),
            Some(t) => alloc::format!("{:?}", t.kind),
        };
        ParseError::Syntax {
            position: self.here(),
            message: alloc::format!("expected {expected}, found {found}"),
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<(), ParseError> {
        if self.peek_kind() == Some(&kind) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(what))
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        if self.peek_kind() == Some(&TokenKind::Minus) {
            self.pos += 1;
            Ok(Node::Neg(Box::new(self.power()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek_kind() == Some(&TokenKind::Caret) {
            self.pos += 1;
            let exponent = self.factor()?;
            Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.syntax("number, identifier or '('"));
        };
        match tok.kind {
            TokenKind::Num(v) => {
                self.pos += 1;
                Ok(Node::Const(v))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                self.pos += 1;
                if let Some(func) = Func::from_name(&name) {
                    self.expect(TokenKind::LParen, "'(' after function name")?;
                    let arg = self.expr()?;
                    self.expect(TokenKind::RParen, "')'")?;
                    Ok(Node::Call(func, Box::new(arg)))
                } else if let Some(idx) = self.chart.index_of(&name) {
                    Ok(Node::Var(idx))
                } else {
                    Err(ParseError::UnknownSymbol {
                        position: tok.pos,
                        name,
                    })
                }
            }
            _ => Err(self.syntax("number, identifier or '('")),
        }
    }
}
