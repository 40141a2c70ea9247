//! Recursive descent parser for the condition grammar.

use super::token::{Lexer, Spanned, Tok};
use super::{Expr, Operand, ParseError, ParseErrorKind};
use crate::model::AttrValue;

pub(super) fn parse(source: &str, depth_limit: usize) -> Result<Expr, ParseError> {
    let tokens = Lexer::new(source).tokenize()?;
    let mut parser = Parser { tokens, pos: 0, depth: 0, depth_limit };
    let expr = parser.or()?;
    if let Some(t) = parser.peek() {
        return Err(parser.err_at(t.line, t.col, "unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    depth: usize,
    depth_limit: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError { kind: ParseErrorKind::Syntax, line, col, message: message.into() }
    }

    fn err_eof(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self
            .tokens
            .last()
            .map(|t| (t.line, t.col + 1))
            .unwrap_or((1, 1));
        self.err_at(line, col, message)
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > self.depth_limit {
            let (line, col) = self.peek().map(|t| (t.line, t.col)).unwrap_or((1, 1));
            return Err(self.err_at(
                line,
                col,
                format!("expression nests deeper than the limit of {}", self.depth_limit),
            ));
        }
        Ok(())
    }

    fn or(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.and()?;
        while matches!(self.peek(), Some(Spanned { tok: Tok::OrOr, .. })) {
            self.next();
            let rhs = self.and()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while matches!(self.peek(), Some(Spanned { tok: Tok::AndAnd, .. })) {
            self.next();
            let rhs = self.unary()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Some(Spanned { tok: Tok::Not, .. })) {
            self.next();
            self.enter()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Not(Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let t = match self.next() {
            Some(t) => t,
            None => return Err(self.err_eof("expected an expression")),
        };
        match t.tok {
            Tok::LParen => {
                let inner = self.or()?;
                match self.next() {
                    Some(Spanned { tok: Tok::RParen, .. }) => Ok(inner),
                    Some(t) => Err(self.err_at(t.line, t.col, "expected `)`")),
                    None => Err(self.err_eof("expected `)`")),
                }
            }
            Tok::Exists => {
                match self.next() {
                    Some(Spanned { tok: Tok::LParen, .. }) => {}
                    Some(t) => return Err(self.err_at(t.line, t.col, "expected `(` after exists")),
                    None => return Err(self.err_eof("expected `(` after exists")),
                }
                let attr = match self.next() {
                    Some(Spanned { tok: Tok::Attr(a), .. }) => a,
                    Some(t) => {
                        return Err(self.err_at(t.line, t.col, "expected an attribute reference"))
                    }
                    None => return Err(self.err_eof("expected an attribute reference")),
                };
                match self.next() {
                    Some(Spanned { tok: Tok::RParen, .. }) => Ok(Expr::Exists(attr)),
                    Some(t) => Err(self.err_at(t.line, t.col, "expected `)`")),
                    None => Err(self.err_eof("expected `)`")),
                }
            }
            // `true` / `false` are boolean expressions unless a comparison
            // operator follows, in which case they are literal operands.
            Tok::True | Tok::False => {
                let value = matches!(t.tok, Tok::True);
                if matches!(self.peek(), Some(Spanned { tok: Tok::Cmp(_), .. })) {
                    self.comparison_tail(Operand::Literal(AttrValue::Bool(value)))
                } else {
                    Ok(Expr::Literal(value))
                }
            }
            Tok::Attr(a) => self.comparison_tail(Operand::Attr(a)),
            Tok::Literal(v) => self.comparison_tail(Operand::Literal(v)),
            Tok::RParen => Err(self.err_at(t.line, t.col, "unexpected `)`")),
            Tok::Not | Tok::AndAnd | Tok::OrOr | Tok::Cmp(_) => {
                Err(self.err_at(t.line, t.col, "expected an expression"))
            }
        }
    }

    fn comparison_tail(&mut self, lhs: Operand) -> Result<Expr, ParseError> {
        let op = match self.next() {
            Some(Spanned { tok: Tok::Cmp(op), .. }) => op,
            Some(t) => return Err(self.err_at(t.line, t.col, "expected a comparison operator")),
            None => return Err(self.err_eof("expected a comparison operator")),
        };
        let rhs = match self.next() {
            Some(Spanned { tok: Tok::Attr(a), .. }) => Operand::Attr(a),
            Some(Spanned { tok: Tok::Literal(v), .. }) => Operand::Literal(v),
            Some(Spanned { tok: Tok::True, .. }) => Operand::Literal(AttrValue::Bool(true)),
            Some(Spanned { tok: Tok::False, .. }) => Operand::Literal(AttrValue::Bool(false)),
            Some(t) => return Err(self.err_at(t.line, t.col, "expected an operand")),
            None => return Err(self.err_eof("expected an operand")),
        };
        Ok(Expr::Compare(lhs, op, rhs))
    }
}
