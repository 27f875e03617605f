//! A small arithmetic expression language for config-supplied coefficients,
//! integrands and fields.
//!
//! Grammar: numbers, named variables, `+ - * / ^`, unary minus, parentheses and
//! the functions `abs, sin, cos, exp, sqrt, min, max`. Variables are declared
//! up front and resolved to slice indices at parse time, so evaluation is a
//! single allocation-free tree walk.

use crate::error::{Result, XfgError};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Call1(Func1, Box<Node>),
    Call2(Func2, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func1 {
    Abs,
    Sin,
    Cos,
    Exp,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func2 {
    Min,
    Max,
}

/// A parsed expression over a fixed, ordered set of variables.
#[derive(Debug, Clone)]
pub struct Expr {
    ast: Node,
    src: String,
    nvars: usize,
}

impl Expr {
    /// Parses `src` over the given variable names (e.g. `["x1", "x2"]`).
    pub fn parse(src: &str, vars: &[&str]) -> Result<Expr> {
        let mut p = Parser {
            bytes: src.as_bytes(),
            pos: 0,
            src,
            vars,
        };
        p.skip_ws();
        let ast = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Expr {
            ast,
            src: src.to_string(),
            nvars: vars.len(),
        })
    }

    /// Evaluates with variable values in declaration order.
    /// `vals` may be longer than the declared set; extra entries are ignored.
    pub fn eval(&self, vals: &[f64]) -> f64 {
        debug_assert!(vals.len() >= self.nvars);
        eval_node(&self.ast, vals)
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    /// True when the expression never reads a variable with index >= `k`.
    /// Used to detect x-independence of integrand formulas.
    pub fn independent_of_tail(&self, k: usize) -> bool {
        max_var_index(&self.ast).map_or(true, |mx| mx < k)
    }
}

fn eval_node(n: &Node, v: &[f64]) -> f64 {
    match n {
        Node::Const(c) => *c,
        Node::Var(i) => v[*i],
        Node::Add(a, b) => eval_node(a, v) + eval_node(b, v),
        Node::Sub(a, b) => eval_node(a, v) - eval_node(b, v),
        Node::Mul(a, b) => eval_node(a, v) * eval_node(b, v),
        Node::Div(a, b) => eval_node(a, v) / eval_node(b, v),
        Node::Pow(a, b) => {
            let base = eval_node(a, v);
            let e = eval_node(b, v);
            // integer exponents take the exact powi path
            if e.fract() == 0.0 && e.abs() <= 64.0 {
                base.powi(e as i32)
            } else {
                base.powf(e)
            }
        }
        Node::Neg(a) => -eval_node(a, v),
        Node::Call1(f, a) => {
            let x = eval_node(a, v);
            match f {
                Func1::Abs => x.abs(),
                Func1::Sin => x.sin(),
                Func1::Cos => x.cos(),
                Func1::Exp => x.exp(),
                Func1::Sqrt => x.sqrt(),
            }
        }
        Node::Call2(f, a, b) => {
            let x = eval_node(a, v);
            let y = eval_node(b, v);
            match f {
                Func2::Min => x.min(y),
                Func2::Max => x.max(y),
            }
        }
    }
}

fn max_var_index(n: &Node) -> Option<usize> {
    match n {
        Node::Const(_) => None,
        Node::Var(i) => Some(*i),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            match (max_var_index(a), max_var_index(b)) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            }
        }
        Node::Neg(a) | Node::Call1(_, a) => max_var_index(a),
        Node::Call2(_, a, b) => match (max_var_index(a), max_var_index(b)) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        },
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    src: &'a str,
    vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> XfgError {
        XfgError::Expr {
            offset: self.pos,
            message: msg.into(),
            source_text: self.src.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat(b'+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            // right associative: 2^3^2 = 2^(3^2)
            let exp = self.unary()?;
            Ok(Node::Pow(Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.err("expected number, variable or `(`")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self
            .peek()
            .map_or(false, |c| c.is_ascii_digit() || c == b'.')
        {
            self.pos += 1;
        }
        // scientific suffix: 1e-3, 2.5E4
        if self.peek() == Some(b'e') || self.peek() == Some(b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.peek() == Some(b'+') || self.peek() == Some(b'-') {
                self.pos += 1;
            }
            if self.peek().map_or(false, |c| c.is_ascii_digit()) {
                while self.peek().map_or(false, |c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark; // `e` was an identifier start, not an exponent
            }
        }
        let text = &self.src[start..self.pos];
        let value: f64 = text
            .parse()
            .map_err(|_| self.err(format!("bad number literal `{text}`")))?;
        self.skip_ws();
        Ok(Node::Const(value))
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self
            .peek()
            .map_or(false, |c| c.is_ascii_alphanumeric() || c == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        self.skip_ws();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            self.skip_ws();
            let node = self.call(name)?;
            return Ok(node);
        }
        if let Some(idx) = self.vars.iter().position(|v| *v == name) {
            return Ok(Node::Var(idx));
        }
        match name {
            "pi" => Ok(Node::Const(std::f64::consts::PI)),
            "e" => Ok(Node::Const(std::f64::consts::E)),
            _ => Err(self.err(format!(
                "unknown variable `{name}` (expected one of {:?})",
                self.vars
            ))),
        }
    }

    fn call(&mut self, name: &str) -> Result<Node> {
        let one = |f: Func1, p: &mut Self| -> Result<Node> {
            let a = p.expr()?;
            if !p.eat(b')') {
                return Err(p.err("expected `)`"));
            }
            Ok(Node::Call1(f, Box::new(a)))
        };
        match name {
            "abs" => one(Func1::Abs, self),
            "sin" => one(Func1::Sin, self),
            "cos" => one(Func1::Cos, self),
            "exp" => one(Func1::Exp, self),
            "sqrt" => one(Func1::Sqrt, self),
            "min" | "max" => {
                let a = self.expr()?;
                if !self.eat(b',') {
                    return Err(self.err("expected `,`"));
                }
                let b = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                let f = if name == "min" { Func2::Min } else { Func2::Max };
                Ok(Node::Call2(f, Box::new(a), Box::new(b)))
            }
            _ => Err(self.err(format!("unknown function `{name}`"))),
        }
    }
}

/// `["x1", ..., "xn"]`-style variable name lists.
pub fn numbered_vars(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str, vars: &[&str]) -> Expr {
        Expr::parse(src, vars).unwrap()
    }

    #[test]
    fn arithmetic_and_precedence() {
        let e = p("1 + 2*3 - 4/2", &[]);
        assert_eq!(e.eval(&[]), 5.0);
        let e = p("2^3^2", &[]);
        assert_eq!(e.eval(&[]), 512.0);
        let e = p("-x1^2", &["x1"]);
        assert_eq!(e.eval(&[3.0]), -9.0); // unary minus binds looser than ^
        let e = p("(1+2)*(3-5)", &[]);
        assert_eq!(e.eval(&[]), -6.0);
    }

    #[test]
    fn variables_resolve_by_position() {
        let e = p("x1*eta2 + eta1", &["x1", "eta1", "eta2"]);
        assert_eq!(e.eval(&[2.0, 5.0, 7.0]), 19.0);
    }

    #[test]
    fn functions() {
        let e = p("abs(-3) + sqrt(16) + min(2, 9) + max(2, 9)", &[]);
        assert_eq!(e.eval(&[]), 18.0);
        let e = p("sin(0) + cos(0) + exp(0)", &[]);
        assert_eq!(e.eval(&[]), 2.0);
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(p("1e-3", &[]).eval(&[]), 1e-3);
        assert_eq!(p("2.5E2", &[]).eval(&[]), 250.0);
        // `e` alone is Euler's number, not an exponent marker
        assert!((p("2*e", &[]).eval(&[]) - 2.0 * std::f64::consts::E).abs() < 1e-15);
        // ... and implicit multiplication is not a thing
        assert!(Expr::parse("2e", &[]).is_err());
    }

    #[test]
    fn parse_errors() {
        assert!(Expr::parse("x1 +", &["x1"]).is_err());
        assert!(Expr::parse("foo(1)", &[]).is_err());
        assert!(Expr::parse("x2", &["x1"]).is_err());
        assert!(Expr::parse("(1+2", &[]).is_err());
        assert!(Expr::parse("1 2", &[]).is_err());
    }

    #[test]
    fn tail_independence() {
        let vars = ["eta1", "eta2", "h"];
        assert!(p("eta1^2+eta2^2", &vars).independent_of_tail(2));
        assert!(!p("(1+1/h)*eta1^2", &vars).independent_of_tail(2));
    }
}
