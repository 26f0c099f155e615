use std::fmt;

use crate::field::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Conj,
    Real,
    Imag,
    Abs2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Expression tree over the field components and their first derivatives.
///
/// `W`/`Dw` leaves only appear in directional derivatives built by
/// [`Expr::directional`]; the parser never produces them.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(C64),
    U(usize),
    Du { comp: usize, axis: usize },
    W(usize),
    Dw { comp: usize, axis: usize },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn real(v: f64) -> Self {
        Expr::Const(C64::new(v, 0.0))
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Self {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn uses_gradient(&self) -> bool {
        match self {
            Expr::Du { .. } | Expr::Dw { .. } => true,
            Expr::Const(_) | Expr::U(_) | Expr::W(_) => false,
            Expr::Unary(_, e) => e.uses_gradient(),
            Expr::Binary(_, a, b) => a.uses_gradient() || b.uses_gradient(),
        }
    }

    pub fn uses_direction(&self) -> bool {
        match self {
            Expr::W(_) | Expr::Dw { .. } => true,
            Expr::Const(_) | Expr::U(_) | Expr::Du { .. } => false,
            Expr::Unary(_, e) => e.uses_direction(),
            Expr::Binary(_, a, b) => a.uses_direction() || b.uses_direction(),
        }
    }

    /// Largest component index and axis referenced, if any.
    pub fn max_indices(&self) -> (Option<usize>, Option<usize>) {
        fn merge(a: (Option<usize>, Option<usize>), b: (Option<usize>, Option<usize>)) -> (Option<usize>, Option<usize>) {
            (a.0.max(b.0), a.1.max(b.1))
        }
        match self {
            Expr::Const(_) => (None, None),
            Expr::U(c) | Expr::W(c) => (Some(*c), None),
            Expr::Du { comp, axis } | Expr::Dw { comp, axis } => (Some(*comp), Some(*axis)),
            Expr::Unary(_, e) => e.max_indices(),
            Expr::Binary(_, a, b) => merge(a.max_indices(), b.max_indices()),
        }
    }

    /// Derivative `d/de F(u + e w)` at `e = 0`, with `conj` treated as real-linear.
    pub fn directional(&self) -> Expr {
        use BinaryOp::*;
        match self {
            Expr::Const(_) | Expr::W(_) | Expr::Dw { .. } => Expr::real(0.0),
            Expr::U(c) => Expr::W(*c),
            Expr::Du { comp, axis } => Expr::Dw { comp: *comp, axis: *axis },
            Expr::Unary(op, e) => {
                let de = e.directional();
                match op {
                    UnaryOp::Neg | UnaryOp::Conj | UnaryOp::Real | UnaryOp::Imag => Expr::unary(*op, de),
                    UnaryOp::Abs2 => Expr::binary(
                        Add,
                        Expr::binary(Mul, de.clone(), Expr::unary(UnaryOp::Conj, (**e).clone())),
                        Expr::binary(Mul, (**e).clone(), Expr::unary(UnaryOp::Conj, de)),
                    ),
                }
            }
            Expr::Binary(op, a, b) => {
                let (da, db) = (a.directional(), b.directional());
                match op {
                    Add | Sub => Expr::binary(*op, da, db),
                    Mul => Expr::binary(
                        Add,
                        Expr::binary(Mul, da, (**b).clone()),
                        Expr::binary(Mul, (**a).clone(), db),
                    ),
                    Div => Expr::binary(
                        Div,
                        Expr::binary(
                            Sub,
                            Expr::binary(Mul, da, (**b).clone()),
                            Expr::binary(Mul, (**a).clone(), db),
                        ),
                        Expr::binary(Mul, (**b).clone(), (**b).clone()),
                    ),
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            Expr::Unary(UnaryOp::Neg, _) => 3,
            Expr::Const(c) if c.im != 0.0 && c != &C64::new(0.0, 1.0) => 1,
            _ => 4,
        }
    }

    /// Source text that parses back to this tree (for parser-produced trees).
    pub fn unparse(&self) -> String {
        self.to_string()
    }
}

fn fmt_const(c: &C64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.im == 0.0 {
        write!(f, "{}", c.re)
    } else if *c == C64::new(0.0, 1.0) {
        write!(f, "i")
    } else {
        write!(f, "{}+{}*i", c.re, c.im)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |e: &Expr, min: u8, f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Const(c) => fmt_const(c, f),
            Expr::U(0) => write!(f, "u"),
            Expr::U(c) => write!(f, "u{}", c + 1),
            Expr::Du { comp: 0, axis } => write!(f, "dx{axis}(u)"),
            Expr::Du { comp, axis } => write!(f, "dx{axis}(u{})", comp + 1),
            Expr::W(c) => write!(f, "w{}", c + 1),
            Expr::Dw { comp, axis } => write!(f, "dx{axis}(w{})", comp + 1),
            Expr::Unary(UnaryOp::Neg, e) => {
                write!(f, "-")?;
                wrap(e, 3, f)
            }
            Expr::Unary(op, e) => {
                let name = match op {
                    UnaryOp::Conj => "conj",
                    UnaryOp::Real => "real",
                    UnaryOp::Imag => "imag",
                    UnaryOp::Abs2 => "abs2",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}({e})")
            }
            Expr::Binary(op, a, b) => {
                let (sym, p) = match op {
                    BinaryOp::Add => ('+', 1),
                    BinaryOp::Sub => ('-', 1),
                    BinaryOp::Mul => ('*', 2),
                    BinaryOp::Div => ('/', 2),
                };
                wrap(a, p, f)?;
                write!(f, "{sym}")?;
                // left associative: an equal-precedence right operand needs parentheses
                wrap(b, p + 1, f)
            }
        }
    }
}
