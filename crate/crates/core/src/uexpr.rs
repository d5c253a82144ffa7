//! A small language for rational functions of x.
//!
//! Grammar: sums and differences of products and quotients of powers with
//! integer exponents; atoms are decimal numbers, `x`, `i`, parenthesized
//! expressions and named constants. Juxtaposition multiplies (`3x^2`).
//!
//! ```
//! use std::collections::BTreeMap;
//! use qesforge::uexpr::UExpr;
//!
//! let e = UExpr::parse("c*x^2/(1+x^2)").unwrap();
//! assert_eq!(e.constants(), ["c"]);
//! let mut k = BTreeMap::new();
//! k.insert("c".to_string(), 2.0.into());
//! let r = e.to_rational(&k).unwrap();
//! assert!((r.eval_real(1.0).unwrap().re - 1.0).abs() < 1e-15);
//! ```

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::error::{QesError, Result};
use crate::poly::Poly;
use crate::rational::RationalFn;

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    X,
    I,
    Const(String),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct UExpr {
    source: String,
    root: Node,
}

impl UExpr {
    pub fn parse(src: &str) -> Result<UExpr> {
        let mut p = Parser { s: src.as_bytes(), pos: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(UExpr {
            source: src.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Named constants in sorted order.
    pub fn constants(&self) -> Vec<String> {
        let mut out = BTreeSet::new();
        collect(&self.root, &mut out);
        out.into_iter().collect()
    }

    pub fn to_rational(&self, constants: &BTreeMap<String, Complex64>) -> Result<RationalFn> {
        build(&self.root, constants)
    }
}

fn collect(n: &Node, out: &mut BTreeSet<String>) {
    match n {
        Node::Const(name) => {
            out.insert(name.clone());
        }
        Node::Neg(a) | Node::Pow(a, _) => collect(a, out),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            collect(a, out);
            collect(b, out);
        }
        Node::Num(_) | Node::X | Node::I => {}
    }
}

fn build(n: &Node, k: &BTreeMap<String, Complex64>) -> Result<RationalFn> {
    let constant = |z: Complex64| RationalFn::constant(z);
    Ok(match n {
        Node::Num(v) => constant(Complex64::new(*v, 0.0)),
        Node::I => constant(Complex64::i()),
        Node::X => Poly::from_real(&[0.0, 1.0]).into(),
        Node::Const(name) => constant(
            *k.get(name)
                .ok_or_else(|| QesError::InvalidInput(format!("no value for constant `{name}`")))?,
        ),
        Node::Neg(a) => -&build(a, k)?,
        Node::Add(a, b) => &build(a, k)? + &build(b, k)?,
        Node::Sub(a, b) => &build(a, k)? - &build(b, k)?,
        Node::Mul(a, b) => &build(a, k)? * &build(b, k)?,
        Node::Div(a, b) => {
            let d = build(b, k)?;
            if d.num().trim(0.0).is_zero() {
                return Err(QesError::DegenerateDenominator);
            }
            (&build(a, k)? / &d)?
        }
        Node::Pow(a, e) => {
            let base = build(a, k)?;
            let mut out = constant(Complex64::new(1.0, 0.0));
            for _ in 0..e.unsigned_abs() {
                out = &out * &base;
            }
            if *e < 0 {
                out = out.recip()?;
            }
            out
        }
    })
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> QesError {
        QesError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == b'+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(c) if c == b'(' || c == b'.' || c.is_ascii_alphanumeric() || c == b'_' => {
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.power()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        if matches!(self.s.get(self.pos), Some(b'-' | b'+')) {
            self.pos += 1;
        }
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
        let fractional = self.s.get(self.pos) == Some(&b'.');
        let e: i32 = text.parse().ok().filter(|_| !fractional).ok_or_else(|| QesError::Parse {
            pos: start,
            msg: "exponent must be an integer".into(),
        })?;
        if e.unsigned_abs() > 64 {
            return Err(QesError::Parse {
                pos: start,
                msg: "exponent too large".into(),
            });
        }
        Ok(Node::Pow(Box::new(base), e))
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.s.len()
                    && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
                Ok(match name {
                    "x" => Node::X,
                    "i" => Node::I,
                    _ => Node::Const(name.to_string()),
                })
            }
            Some(_) => Err(self.err("expected a number, `x`, `i`, a constant or `(`")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
            self.pos += 1;
        }
        if matches!(self.s.get(self.pos), Some(b'e' | b'E'))
            && self.s.get(self.pos + 1).is_some_and(|c| c.is_ascii_digit() || *c == b'-' || *c == b'+')
        {
            self.pos += 2;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map(Node::Num).map_err(|_| QesError::Parse {
            pos: start,
            msg: format!("bad number `{text}`"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, x: f64) -> Complex64 {
        UExpr::parse(src)
            .unwrap()
            .to_rational(&BTreeMap::new())
            .unwrap()
            .eval_real(x)
            .unwrap()
    }

    #[test]
    fn precedence_and_juxtaposition() {
        assert_eq!(eval("1+2*x^2", 2.0).re, 9.0);
        assert_eq!(eval("-x^2", 3.0).re, -9.0);
        assert_eq!(eval("3x^2 - 2(x+1)", 1.0).re, -1.0);
        assert_eq!(eval("x^-1", 4.0).re, 0.25);
        assert_eq!(eval("1.5e1/x", 3.0).re, 5.0);
    }

    #[test]
    fn complex_pole_expression() {
        let z = eval("x/3 - 1/(x + 4i)", 1.0);
        let expect = Complex64::new(1.0 / 3.0, 0.0) - 1.0 / Complex64::new(1.0, 4.0);
        assert!((z - expect).norm() < 1e-15);
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(UExpr::parse("x^1.5"), Err(QesError::Parse { pos: 2, .. })));
        assert!(matches!(UExpr::parse("(x+1"), Err(QesError::Parse { pos: 4, .. })));
        assert!(matches!(UExpr::parse("x $"), Err(QesError::Parse { pos: 2, .. })));
        let e = UExpr::parse("c*x").unwrap();
        assert!(matches!(e.to_rational(&BTreeMap::new()), Err(QesError::InvalidInput(_))));
        assert!(UExpr::parse("1/(x-x)").unwrap().to_rational(&BTreeMap::new()).is_err());
    }
}
