//! Text syntax for formulas.
//!
//! ```text
//! formula := unary | formula ("U" | "R") formula | formula "&&" formula
//!          | formula "||" formula | formula "->" formula | "(" formula ")"
//! unary   := ("!" | "X" | "F" | "G" | "<>" | "[]") unary | "true" | "false" | ident
//! ident   := [a-zA-Z][a-zA-Z0-9_]*
//! ```
//!
//! Binding strength, tightest first: unary operators, `U` and `R` (right
//! associative), `&&`, `||`, `->` (right associative).

use super::{Formula, LtlError};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    True,
    False,
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Until,
    Release,
    Next,
    Eventually,
    Always,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Token)>, LtlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let two = text.get(i..i + 2);
        let tok = match (c, two) {
            (_, Some("&&")) => {
                i += 2;
                Token::And
            }
            (_, Some("||")) => {
                i += 2;
                Token::Or
            }
            (_, Some("->")) => {
                i += 2;
                Token::Implies
            }
            (_, Some("<>")) => {
                i += 2;
                Token::Eventually
            }
            (_, Some("[]")) => {
                i += 2;
                Token::Always
            }
            (b'!', _) => {
                i += 1;
                Token::Not
            }
            (b'(', _) => {
                i += 1;
                Token::LParen
            }
            (b')', _) => {
                i += 1;
                Token::RParen
            }
            (c, _) if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                match &text[start..i] {
                    "true" => Token::True,
                    "false" => Token::False,
                    "U" => Token::Until,
                    "R" => Token::Release,
                    "X" => Token::Next,
                    "F" => Token::Eventually,
                    "G" => Token::Always,
                    word => Token::Ident(word.to_string()),
                }
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(LtlError::Syntax {
                    position: i,
                    message: format!("unexpected character '{ch}'"),
                });
            }
        };
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn eat(&mut self, tok: &Token) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, message: impl Into<String>) -> LtlError {
        LtlError::Syntax {
            position: self.offset(),
            message: message.into(),
        }
    }

    fn implication(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.disjunction()?;
        if self.eat(&Token::Implies) {
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Token::Or) {
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.until()?;
        while self.eat(&Token::And) {
            lhs = Formula::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.unary()?;
        if self.eat(&Token::Until) {
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        if self.eat(&Token::Release) {
            let rhs = self.until()?;
            return Ok(Formula::release(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LtlError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("unexpected end of input"));
        };
        self.pos += 1;
        match tok {
            Token::Not => Ok(Formula::not(self.unary()?)),
            Token::Next => Ok(Formula::next(self.unary()?)),
            Token::Eventually => Ok(Formula::eventually(self.unary()?)),
            Token::Always => Ok(Formula::always(self.unary()?)),
            Token::True => Ok(Formula::True),
            Token::False => Ok(Formula::False),
            Token::Ident(name) => Ok(Formula::Atom(name)),
            Token::LParen => {
                let inner = self.implication()?;
                if !self.eat(&Token::RParen) {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            other => {
                self.pos -= 1;
                Err(self.error(format!("unexpected token {other:?}")))
            }
        }
    }
}

/// Parses a formula. `X` is accepted; use [`parse_task`] for robot tasks.
pub fn parse(text: &str) -> Result<Formula, LtlError> {
    let mut parser = Parser {
        tokens: lex(text)?,
        pos: 0,
        end: text.len(),
    };
    let f = parser.implication()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error("trailing input"));
    }
    Ok(f)
}

/// Parses a robot task, which must not use the next operator.
pub fn parse_task(text: &str) -> Result<Formula, LtlError> {
    let f = parse(text)?;
    if f.contains_next() {
        return Err(LtlError::NextInTask);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn atom(s: &str) -> Formula {
        Formula::atom(s)
    }

    #[test]
    fn always_eventually() {
        let f = parse("[]<> p1").unwrap();
        assert_eq!(f, Formula::always(Formula::eventually(atom("p1"))));
        assert_eq!(parse("G F p1").unwrap(), f);
    }

    #[test]
    fn conjunction_with_until_subterm() {
        let f = parse("([]<> (x1 || x2)) && (!x3 U x1)").unwrap();
        let expected = Formula::and(
            Formula::always(Formula::eventually(Formula::or(atom("x1"), atom("x2")))),
            Formula::until(Formula::not(atom("x3")), atom("x1")),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn incomplete_binary_operator_is_an_error() {
        match parse("p U") {
            Err(LtlError::Syntax { position, .. }) => assert_eq!(position, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn other_syntax_errors() {
        assert!(parse("").is_err());
        assert!(parse("(p && q").is_err());
        assert!(parse("p q").is_err());
        assert!(parse("p # q").is_err());
        assert!(parse("&& p").is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        let f = parse("a || b && c -> d -> e").unwrap();
        let expected = Formula::implies(
            Formula::or(atom("a"), Formula::and(atom("b"), atom("c"))),
            Formula::implies(atom("d"), atom("e")),
        );
        assert_eq!(f, expected);
        let f = parse("a U b U c").unwrap();
        assert_eq!(
            f,
            Formula::until(atom("a"), Formula::until(atom("b"), atom("c")))
        );
        assert_eq!(
            parse("!a U b").unwrap(),
            Formula::until(Formula::not(atom("a")), atom("b"))
        );
    }

    #[test]
    fn keywords_only_match_whole_words() {
        assert_eq!(parse("F1").unwrap(), atom("F1"));
        assert_eq!(parse("Xa_2").unwrap(), atom("Xa_2"));
        assert_eq!(parse("X a").unwrap(), Formula::next(atom("a")));
        assert_eq!(
            parse("true && false").unwrap(),
            Formula::and(Formula::True, Formula::False)
        );
    }

    #[test]
    fn tasks_reject_next() {
        assert!(parse("X p").is_ok());
        assert_eq!(parse_task("[] (p -> X q)"), Err(LtlError::NextInTask));
        assert!(parse_task("[] (p -> <> q)").is_ok());
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::True),
            Just(Formula::False),
            "[a-c][0-9]?".prop_map(Formula::Atom),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                inner.clone().prop_map(Formula::next),
                inner.clone().prop_map(Formula::always),
                inner.clone().prop_map(Formula::eventually),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::until(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Formula::release(a, b)),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_parses_back(f in arb_formula()) {
            let text = f.to_string();
            prop_assert_eq!(parse(&text).unwrap(), f);
        }
    }
}
