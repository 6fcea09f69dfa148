//! Arithmetic expression trees over the surface parameters `u1`, `u2`.
//!
//! The grammar is deliberately small: the ten unary functions listed in
//! [`UnaryOp`], the five binary operators, numeric literals, and the
//! constants `pi` and `e`. Precedence: `^` binds tightest and associates
//! right; unary minus binds below `^`; then `*`/`/`; then `+`/`-`.

use crate::error::{Error, Result};
use crate::surface::jet::ExprScalar;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Var {
    U1,
    U2,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExpressionTree {
    Constant(f64),
    Variable(Var),
    Unary(UnaryOp, Box<ExpressionTree>),
    Binary(BinaryOp, Box<ExpressionTree>, Box<ExpressionTree>),
}

impl ExpressionTree {
    /// Evaluates the tree over any [`ExprScalar`] (plain values or jets).
    pub fn eval<T: ExprScalar>(&self, u1: T, u2: T) -> Result<T> {
        match self {
            ExpressionTree::Constant(c) => Ok(T::constant(*c)),
            ExpressionTree::Variable(Var::U1) => Ok(u1),
            ExpressionTree::Variable(Var::U2) => Ok(u2),
            ExpressionTree::Unary(op, a) => {
                let x = a.eval(u1, u2)?;
                Ok(match op {
                    UnaryOp::Neg => -x,
                    UnaryOp::Sin => x.sin(),
                    UnaryOp::Cos => x.cos(),
                    UnaryOp::Tan => x.tan(),
                    UnaryOp::Sinh => x.sinh(),
                    UnaryOp::Cosh => x.cosh(),
                    UnaryOp::Tanh => x.tanh(),
                    UnaryOp::Exp => x.exp(),
                    UnaryOp::Log => x.ln(),
                    UnaryOp::Sqrt => x.sqrt(),
                    UnaryOp::Abs => x.abs(),
                })
            }
            ExpressionTree::Binary(op, a, b) => {
                let x = a.eval(u1, u2)?;
                let y = b.eval(u1, u2)?;
                Ok(match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => x / y,
                    BinaryOp::Pow => x.pow(y)?,
                })
            }
        }
    }

    pub fn references_vars(&self) -> bool {
        match self {
            ExpressionTree::Constant(_) => false,
            ExpressionTree::Variable(_) => true,
            ExpressionTree::Unary(_, a) => a.references_vars(),
            ExpressionTree::Binary(_, a, b) => a.references_vars() || b.references_vars(),
        }
    }
}

impl std::fmt::Display for ExpressionTree {
    /// Fully parenthesized form; `parse` of the output reproduces the tree.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExpressionTree::Constant(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            ExpressionTree::Variable(Var::U1) => write!(f, "u1"),
            ExpressionTree::Variable(Var::U2) => write!(f, "u2"),
            ExpressionTree::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            ExpressionTree::Unary(op, a) => {
                let name = match op {
                    UnaryOp::Sin => "sin",
                    UnaryOp::Cos => "cos",
                    UnaryOp::Tan => "tan",
                    UnaryOp::Sinh => "sinh",
                    UnaryOp::Cosh => "cosh",
                    UnaryOp::Tanh => "tanh",
                    UnaryOp::Exp => "exp",
                    UnaryOp::Log => "log",
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Abs => "abs",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}({a})")
            }
            ExpressionTree::Binary(op, a, b) => {
                let sym = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                    BinaryOp::Pow => "^",
                };
                write!(f, "({a}{sym}{b})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    offset: usize,
}

/// Tokenizer. `base` shifts reported byte offsets so errors in a multi-part
/// source point into the original text.
fn lex(src: &str, base: usize) -> Result<Vec<Spanned>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let offset = base + i;
        match b {
            b' ' | b'\t' | b'\r' => {
                i += 1;
            }
            b'+' => {
                out.push(Spanned { tok: Tok::Plus, offset });
                i += 1;
            }
            b'-' => {
                out.push(Spanned { tok: Tok::Minus, offset });
                i += 1;
            }
            b'*' => {
                out.push(Spanned { tok: Tok::Star, offset });
                i += 1;
            }
            b'/' => {
                out.push(Spanned { tok: Tok::Slash, offset });
                i += 1;
            }
            b'^' => {
                out.push(Spanned { tok: Tok::Caret, offset });
                i += 1;
            }
            b'(' => {
                out.push(Spanned { tok: Tok::LParen, offset });
                i += 1;
            }
            b')' => {
                out.push(Spanned { tok: Tok::RParen, offset });
                i += 1;
            }
            b'[' => {
                out.push(Spanned { tok: Tok::LBracket, offset });
                i += 1;
            }
            b']' => {
                out.push(Spanned { tok: Tok::RBracket, offset });
                i += 1;
            }
            b',' => {
                out.push(Spanned { tok: Tok::Comma, offset });
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // Exponent only when it is followed by digits.
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut k = i + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        i = k;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value = text.parse::<f64>().map_err(|_| Error::Syntax {
                    offset: base + start,
                    message: format!("invalid number `{text}`"),
                })?;
                out.push(Spanned {
                    tok: Tok::Num(value),
                    offset: base + start,
                });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(Spanned {
                    tok: Tok::Ident(src[start..i].to_string()),
                    offset: base + start,
                });
            }
            _ => {
                return Err(Error::Syntax {
                    offset,
                    message: format!("unexpected character `{}`", &src[i..i + 1]),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end_offset: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn offset(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|s| s.offset)
            .unwrap_or(self.end_offset)
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        match self.bump() {
            Some(s) if s.tok == tok => Ok(()),
            Some(s) => Err(Error::Syntax {
                offset: s.offset,
                message: format!("expected {what}"),
            }),
            None => Err(Error::Syntax {
                offset: self.end_offset,
                message: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn expr(&mut self) -> Result<ExpressionTree> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = ExpressionTree::Binary(BinaryOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = ExpressionTree::Binary(BinaryOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<ExpressionTree> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = ExpressionTree::Binary(BinaryOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = ExpressionTree::Binary(BinaryOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<ExpressionTree> {
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            let inner = self.unary()?;
            return Ok(ExpressionTree::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExpressionTree> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            // Right-associative; the exponent may carry a unary minus.
            let exp = self.unary()?;
            return Ok(ExpressionTree::Binary(
                BinaryOp::Pow,
                Box::new(base),
                Box::new(exp),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExpressionTree> {
        let offset = self.offset();
        match self.bump() {
            Some(Spanned { tok: Tok::Num(v), .. }) => Ok(ExpressionTree::Constant(v)),
            Some(Spanned { tok: Tok::LParen, .. }) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Spanned {
                tok: Tok::Ident(name),
                offset,
            }) => {
                if let Some(Tok::LParen) = self.peek() {
                    let op = match name.as_str() {
                        "sin" => UnaryOp::Sin,
                        "cos" => UnaryOp::Cos,
                        "tan" => UnaryOp::Tan,
                        "sinh" => UnaryOp::Sinh,
                        "cosh" => UnaryOp::Cosh,
                        "tanh" => UnaryOp::Tanh,
                        "exp" => UnaryOp::Exp,
                        "log" => UnaryOp::Log,
                        "sqrt" => UnaryOp::Sqrt,
                        "abs" => UnaryOp::Abs,
                        _ => {
                            return Err(Error::UnknownIdentifier { name, offset });
                        }
                    };
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(ExpressionTree::Unary(op, Box::new(arg)))
                } else {
                    match name.as_str() {
                        "u1" => Ok(ExpressionTree::Variable(Var::U1)),
                        "u2" => Ok(ExpressionTree::Variable(Var::U2)),
                        "pi" => Ok(ExpressionTree::Constant(std::f64::consts::PI)),
                        "e" => Ok(ExpressionTree::Constant(std::f64::consts::E)),
                        _ => Err(Error::UnknownIdentifier { name, offset }),
                    }
                }
            }
            Some(s) => Err(Error::Syntax {
                offset: s.offset,
                message: "expected a value".to_string(),
            }),
            None => Err(Error::Syntax {
                offset,
                message: "expected a value, found end of input".to_string(),
            }),
        }
    }
}

/// Parses one expression; the whole input must be consumed.
pub fn parse_expression(src: &str) -> Result<ExpressionTree> {
    parse_expression_at(src, 0)
}

pub(crate) fn parse_expression_at(src: &str, base: usize) -> Result<ExpressionTree> {
    if src.trim().is_empty() {
        return Err(Error::EmptyExpression);
    }
    let toks = lex(src, base)?;
    let mut p = Parser {
        end_offset: base + src.len(),
        toks,
        pos: 0,
    };
    let tree = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Syntax {
            offset: p.offset(),
            message: "unexpected trailing input".to_string(),
        });
    }
    Ok(tree)
}

/// Parses a domain clause `[a,b]x[c,d]` where the bounds are constant
/// expressions (`pi`, `-pi/2`, ...).
pub(crate) fn parse_domain_clause(src: &str, base: usize) -> Result<[[f64; 2]; 2]> {
    let toks = lex(src, base)?;
    let mut p = Parser {
        end_offset: base + src.len(),
        toks,
        pos: 0,
    };
    let mut ranges = [[0.0; 2]; 2];
    for (axis, range) in ranges.iter_mut().enumerate() {
        p.expect(Tok::LBracket, "`[`")?;
        range[0] = const_value(&mut p)?;
        p.expect(Tok::Comma, "`,`")?;
        range[1] = const_value(&mut p)?;
        p.expect(Tok::RBracket, "`]`")?;
        if axis == 0 {
            match p.bump() {
                Some(Spanned {
                    tok: Tok::Ident(x), ..
                }) if x == "x" => {}
                other => {
                    let offset = other.map(|s| s.offset).unwrap_or(p.end_offset);
                    return Err(Error::Syntax {
                        offset,
                        message: "expected `x` between domain intervals".to_string(),
                    });
                }
            }
        }
        if !(range[0].is_finite() && range[1].is_finite() && range[0] < range[1]) {
            return Err(Error::Syntax {
                offset: base,
                message: format!("invalid domain interval [{}, {}]", range[0], range[1]),
            });
        }
    }
    if p.pos != p.toks.len() {
        return Err(Error::Syntax {
            offset: p.offset(),
            message: "unexpected trailing input after domain".to_string(),
        });
    }
    Ok(ranges)
}

fn const_value(p: &mut Parser) -> Result<f64> {
    let offset = p.offset();
    let tree = p.expr()?;
    if tree.references_vars() {
        return Err(Error::Syntax {
            offset,
            message: "domain bounds must be constant".to_string(),
        });
    }
    tree.eval(0.0f64, 0.0f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(src: &str, u1: f64, u2: f64) -> f64 {
        parse_expression(src).unwrap().eval(u1, u2).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        // ^ binds tightest, right-associative; unary minus below ^.
        assert_eq!(eval("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(eval("-2^2", 0.0, 0.0), -4.0);
        assert_eq!(eval("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(eval("1+2*3", 0.0, 0.0), 7.0);
        assert_eq!(eval("6/2/3", 0.0, 0.0), 1.0);
        assert_eq!(eval("1-2-3", 0.0, 0.0), -4.0);
        assert!((eval("pi", 0.0, 0.0) - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn variables_and_functions() {
        assert!((eval("cosh(u2)*cos(u1)", 0.5, 0.3) - 0.3f64.cosh() * 0.5f64.cos()).abs() < 1e-15);
        assert!((eval("sqrt(abs(u1))", -4.0, 0.0) - 2.0).abs() < 1e-15);
        assert!((eval("log(e)", 0.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse_expression("u1 + $") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse_expression("u1 + u3") {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "u3");
                assert_eq!(offset, 5);
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
        assert!(matches!(
            parse_expression("   "),
            Err(Error::EmptyExpression)
        ));
    }

    #[test]
    fn domain_clause_with_pi() {
        let d = parse_domain_clause("[-pi,pi]x[-pi/2,pi/2]", 0).unwrap();
        assert!((d[0][0] + std::f64::consts::PI).abs() < 1e-15);
        assert!((d[1][1] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(parse_domain_clause("[u1,1]x[0,1]", 0).is_err());
        assert!(parse_domain_clause("[2,1]x[0,1]", 0).is_err());
    }

    // Random tree generator for the print/parse round-trip property.
    fn arb_tree(depth: u32) -> BoxedStrategy<ExpressionTree> {
        let leaf = prop_oneof![
            (-3.0..3.0f64).prop_map(ExpressionTree::Constant),
            Just(ExpressionTree::Variable(Var::U1)),
            Just(ExpressionTree::Variable(Var::U2)),
        ];
        leaf.prop_recursive(depth, 64, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| {
                    ExpressionTree::Binary(BinaryOp::Add, Box::new(a), Box::new(b))
                }),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| {
                    ExpressionTree::Binary(BinaryOp::Mul, Box::new(a), Box::new(b))
                }),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| {
                    ExpressionTree::Binary(BinaryOp::Sub, Box::new(a), Box::new(b))
                }),
                inner
                    .clone()
                    .prop_map(|a| ExpressionTree::Unary(UnaryOp::Sin, Box::new(a))),
                inner
                    .clone()
                    .prop_map(|a| ExpressionTree::Unary(UnaryOp::Cosh, Box::new(a))),
                inner.prop_map(|a| ExpressionTree::Unary(UnaryOp::Neg, Box::new(a))),
            ]
        })
        .boxed()
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(tree in arb_tree(4), u1 in -2.0..2.0f64, u2 in -2.0..2.0f64) {
            let printed = tree.to_string();
            let reparsed = parse_expression(&printed).unwrap();
            let a = tree.eval(u1, u2).unwrap();
            let b = reparsed.eval(u1, u2).unwrap();
            let scale = a.abs().max(1.0);
            prop_assert!((a - b).abs() <= 1e-14 * scale);
        }
    }
}
