use super::ExprError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Func {
    Conj,
    Real,
    Imag,
    Abs2,
    /// `dxK`, axis `K` counted from 1.
    Dx(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Token {
    Num(f64),
    ImagUnit,
    /// `u` or `uK`, stored as the zero-based component.
    Var(usize),
    Func(Func),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spanned {
    pub token: Token,
    pub offset: usize,
}

fn ident(word: &str, offset: usize) -> Result<Token, ExprError> {
    let unknown = || ExprError::UnknownIdent { offset, name: word.to_string() };
    Ok(match word {
        "i" => Token::ImagUnit,
        "u" => Token::Var(0),
        "conj" => Token::Func(Func::Conj),
        "real" => Token::Func(Func::Real),
        "imag" => Token::Func(Func::Imag),
        "abs2" => Token::Func(Func::Abs2),
        _ => {
            if let Some(rest) = word.strip_prefix("dx") {
                match rest.parse::<usize>() {
                    Ok(k) if k >= 1 && rest.len() == 1 => Token::Func(Func::Dx(k)),
                    _ => return Err(unknown()),
                }
            } else if let Some(rest) = word.strip_prefix('u') {
                match rest.parse::<usize>() {
                    Ok(k) if k >= 1 && !rest.starts_with('0') => Token::Var(k - 1),
                    _ => return Err(unknown()),
                }
            } else {
                return Err(unknown());
            }
        }
    })
}

/// Splits source text into tokens; offsets are byte positions.
pub fn tokenize(src: &str) -> Result<Vec<Spanned>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < src.len() {
        let c = src[pos..].chars().next().expect("in bounds");
        let start = pos;
        let single = match c {
            '+' => Some(Token::Plus),
            '-' | '\u{2212}' => Some(Token::Minus),
            '*' => Some(Token::Star),
            '/' => Some(Token::Slash),
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            ',' => Some(Token::Comma),
            _ => None,
        };
        if let Some(token) = single {
            out.push(Spanned { token, offset: start });
            pos += c.len_utf8();
            continue;
        }
        if c.is_whitespace() {
            pos += c.len_utf8();
        } else if c.is_ascii_digit() || (c == '.' && bytes.get(pos + 1).is_some_and(u8::is_ascii_digit)) {
            while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
                pos += 1;
            }
            if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
                let mut q = pos + 1;
                if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                    q += 1;
                }
                if q < bytes.len() && bytes[q].is_ascii_digit() {
                    while q < bytes.len() && bytes[q].is_ascii_digit() {
                        q += 1;
                    }
                    pos = q;
                }
            }
            let text = &src[start..pos];
            let v: f64 = text.parse().map_err(|_| ExprError::BadNumber { offset: start, text: text.into() })?;
            out.push(Spanned { token: Token::Num(v), offset: start });
        } else if c.is_ascii_alphabetic() {
            while pos < bytes.len() && bytes[pos].is_ascii_alphanumeric() {
                pos += 1;
            }
            out.push(Spanned { token: ident(&src[start..pos], start)?, offset: start });
        } else {
            return Err(ExprError::UnknownChar { offset: start, ch: c });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Token> {
        tokenize(src).unwrap().into_iter().map(|s| s.token).collect()
    }

    #[test]
    fn abs2_product() {
        use Token::*;
        assert_eq!(kinds("abs2(u)*u"), vec![Func(super::Func::Abs2), LParen, Var(0), RParen, Star, Var(0)]);
    }

    #[test]
    fn numbers_and_unit() {
        use Token::*;
        assert_eq!(kinds("1+2.5e-1*i"), vec![Num(1.0), Plus, Num(0.25), Star, ImagUnit]);
        assert_eq!(kinds("3E2"), vec![Num(300.0)]);
        assert_eq!(kinds("u2 - dx2(u1)"), vec![
            Var(1),
            Minus,
            Func(super::Func::Dx(2)),
            LParen,
            Var(0),
            RParen
        ]);
    }

    #[test]
    fn lex_errors_carry_offsets() {
        assert_eq!(tokenize("u @ v"), Err(ExprError::UnknownChar { offset: 2, ch: '@' }));
        assert!(matches!(tokenize("u + v"), Err(ExprError::UnknownIdent { offset: 4, .. })));
        assert!(matches!(tokenize("u0"), Err(ExprError::UnknownIdent { offset: 0, .. })));
        assert!(matches!(tokenize("1.2.3"), Err(ExprError::BadNumber { offset: 0, .. })));
    }
}
