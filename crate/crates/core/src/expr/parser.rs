use super::lexer::{tokenize, Func, Spanned, Token};
use super::tree::{BinaryOp, Expr, UnaryOp};
use super::ExprError;
use crate::field::C64;

struct Parser<'a> {
    tokens: &'a [Spanned],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.pos).map(|s| s.token)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |s| s.offset)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Token::Plus) => BinaryOp::Add,
                Some(Token::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Token::Star) => BinaryOp::Mul,
                Some(Token::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.factor()?);
        }
    }

    fn close(&mut self, open: usize) -> Result<(), ExprError> {
        match self.peek() {
            Some(Token::RParen) => {
                self.bump();
                Ok(())
            }
            None => Err(ExprError::Unbalanced { offset: open }),
            Some(t) => Err(ExprError::Unexpected { offset: self.offset(), found: format!("{t:?}") }),
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let at = self.offset();
        let Some(tok) = self.bump() else {
            return Err(ExprError::Unexpected { offset: at, found: "end of input".into() });
        };
        match tok {
            Token::Num(v) => Ok(Expr::real(v)),
            Token::ImagUnit => Ok(Expr::Const(C64::new(0.0, 1.0))),
            Token::Var(c) => Ok(Expr::U(c)),
            Token::Minus => Ok(Expr::unary(UnaryOp::Neg, self.factor()?)),
            Token::LParen => {
                let e = self.expr()?;
                self.close(at)?;
                Ok(e)
            }
            Token::Func(func) => {
                let open = self.offset();
                if self.bump() != Some(Token::LParen) {
                    return Err(ExprError::Unexpected { offset: open, found: "missing '(' after function".into() });
                }
                let arg = self.expr()?;
                self.close(open)?;
                Ok(match func {
                    Func::Conj => Expr::unary(UnaryOp::Conj, arg),
                    Func::Real => Expr::unary(UnaryOp::Real, arg),
                    Func::Imag => Expr::unary(UnaryOp::Imag, arg),
                    Func::Abs2 => Expr::unary(UnaryOp::Abs2, arg),
                    Func::Dx(axis) => match arg {
                        Expr::U(comp) => Expr::Du { comp, axis },
                        _ => return Err(ExprError::DerivativeOfExpression { offset: at }),
                    },
                })
            }
            Token::RParen => Err(ExprError::Unbalanced { offset: at }),
            other => Err(ExprError::Unexpected { offset: at, found: format!("{other:?}") }),
        }
    }
}

/// Precedence-climbing parse of a token list.
pub fn parse_tokens(tokens: &[Spanned], src_len: usize) -> Result<Expr, ExprError> {
    let mut p = Parser { tokens, pos: 0, end: src_len };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(Token::RParen) => Err(ExprError::Unbalanced { offset: p.offset() }),
        Some(t) => Err(ExprError::Unexpected { offset: p.offset(), found: format!("{t:?}") }),
    }
}

/// Tokenizes and parses source text.
pub fn parse(src: &str) -> Result<Expr, ExprError> {
    parse_tokens(&tokenize(src)?, src.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn precedence() {
        let e = parse("1+2*3").unwrap();
        assert_eq!(
            e,
            Expr::binary(BinaryOp::Add, Expr::real(1.0), Expr::binary(BinaryOp::Mul, Expr::real(2.0), Expr::real(3.0)))
        );
        let e = parse("8/4/2").unwrap();
        assert_eq!(e.unparse(), "8/4/2");
        assert_eq!(parse("8/(4/2)").unwrap().unparse(), "8/(4/2)");
    }

    #[test]
    fn gradient_node() {
        let e = parse("conj(u)*dx1(u)").unwrap();
        assert_eq!(
            e,
            Expr::binary(BinaryOp::Mul, Expr::unary(UnaryOp::Conj, Expr::U(0)), Expr::Du { comp: 0, axis: 1 })
        );
    }

    #[test]
    fn errors() {
        assert_eq!(parse("(u"), Err(ExprError::Unbalanced { offset: 0 }));
        assert_eq!(parse("u)"), Err(ExprError::Unbalanced { offset: 1 }));
        assert!(matches!(parse("u*"), Err(ExprError::Unexpected { offset: 2, .. })));
        assert!(matches!(parse("dx1(u*u)"), Err(ExprError::DerivativeOfExpression { .. })));
        assert!(matches!(parse("abs2 u"), Err(ExprError::Unexpected { .. })));
        assert!(matches!(parse("u u"), Err(ExprError::Unexpected { offset: 2, .. })));
        assert!(matches!(parse(""), Err(ExprError::Unexpected { .. })));
    }

    fn source() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            Just("u".to_string()),
            Just("u2".to_string()),
            Just("i".to_string()),
            Just("dx1(u)".to_string()),
            (0u32..1000).prop_map(|v| format!("{}", v as f64 / 8.0)),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*", "/"]))
                    .prop_map(|(a, b, op)| format!("{a} {op} {b}")),
                inner.clone().prop_map(|a| format!("( {a} )")),
                inner.clone().prop_map(|a| format!("-{a}")),
                (inner, prop::sample::select(vec!["conj", "real", "imag", "abs2"]))
                    .prop_map(|(a, f)| format!("{f}({a})")),
            ]
        })
    }

    proptest! {
        #[test]
        fn unparse_round_trips(src in source()) {
            let tree = parse(&src).unwrap();
            let again = parse(&tree.unparse()).unwrap();
            prop_assert_eq!(&again, &tree);
            prop_assert_eq!(parse(&src).unwrap(), tree);
        }
    }
}
