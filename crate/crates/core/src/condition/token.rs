//! Lexer for the condition language.

use super::{AttrRef, CmpOp, Namespace, ParseError, ParseErrorKind};
use crate::model::{validate_attr_name, AttrValue};

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Tok {
    LParen,
    RParen,
    Not,
    AndAnd,
    OrOr,
    Cmp(CmpOp),
    True,
    False,
    Exists,
    Attr(AttrRef),
    Literal(AttrValue),
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(super) struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(source: &'a str) -> Self {
        Lexer { chars: source.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError { kind: ParseErrorKind::Syntax, line, col, message: message.into() }
    }

    pub fn tokenize(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let (line, col) = (self.line, self.col);
            match c {
                ' ' | '\t' | '\r' | '\n' => {
                    self.bump();
                }
                '(' => {
                    self.bump();
                    out.push(Spanned { tok: Tok::LParen, line, col });
                }
                ')' => {
                    self.bump();
                    out.push(Spanned { tok: Tok::RParen, line, col });
                }
                '&' => {
                    self.bump();
                    if self.chars.peek() == Some(&'&') {
                        self.bump();
                        out.push(Spanned { tok: Tok::AndAnd, line, col });
                    } else {
                        return Err(self.err(line, col, "expected `&&`"));
                    }
                }
                '|' => {
                    self.bump();
                    if self.chars.peek() == Some(&'|') {
                        self.bump();
                        out.push(Spanned { tok: Tok::OrOr, line, col });
                    } else {
                        return Err(self.err(line, col, "expected `||`"));
                    }
                }
                '!' => {
                    self.bump();
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        out.push(Spanned { tok: Tok::Cmp(CmpOp::Ne), line, col });
                    } else {
                        out.push(Spanned { tok: Tok::Not, line, col });
                    }
                }
                '=' => {
                    self.bump();
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        out.push(Spanned { tok: Tok::Cmp(CmpOp::Eq), line, col });
                    } else {
                        return Err(self.err(line, col, "expected `==`"));
                    }
                }
                '<' => {
                    self.bump();
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        out.push(Spanned { tok: Tok::Cmp(CmpOp::Le), line, col });
                    } else {
                        out.push(Spanned { tok: Tok::Cmp(CmpOp::Lt), line, col });
                    }
                }
                '>' => {
                    self.bump();
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        out.push(Spanned { tok: Tok::Cmp(CmpOp::Ge), line, col });
                    } else {
                        out.push(Spanned { tok: Tok::Cmp(CmpOp::Gt), line, col });
                    }
                }
                '"' => {
                    let tok = self.string(line, col)?;
                    out.push(Spanned { tok, line, col });
                }
                '-' | '0'..='9' => {
                    let tok = self.number(line, col)?;
                    out.push(Spanned { tok, line, col });
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let tok = self.word(line, col)?;
                    out.push(Spanned { tok, line, col });
                }
                other => {
                    return Err(self.err(line, col, format!("unexpected character `{other}`")));
                }
            }
        }
        Ok(out)
    }

    fn string(&mut self, line: usize, col: usize) -> Result<Tok, ParseError> {
        self.bump(); // opening quote
        let mut value = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err(line, col, "unterminated string literal")),
                Some('"') => break,
                Some('\\') => match self.bump() {
                    Some('"') => value.push('"'),
                    Some('\\') => value.push('\\'),
                    Some('n') => value.push('\n'),
                    Some('t') => value.push('\t'),
                    Some('r') => value.push('\r'),
                    other => {
                        return Err(self.err(
                            self.line,
                            self.col,
                            format!("invalid escape `\\{}`", other.map(String::from).unwrap_or_default()),
                        ))
                    }
                },
                Some(c) => value.push(c),
            }
        }
        Ok(Tok::Literal(AttrValue::Text(value)))
    }

    fn number(&mut self, line: usize, col: usize) -> Result<Tok, ParseError> {
        let mut text = String::new();
        if self.chars.peek() == Some(&'-') {
            text.push('-');
            self.bump();
            if !matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                return Err(self.err(line, col, "expected digits after `-`"));
            }
        }
        while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
            text.push(self.bump().unwrap());
        }
        let mut is_float = false;
        if self.chars.peek() == Some(&'.') {
            is_float = true;
            text.push('.');
            self.bump();
            if !matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                return Err(self.err(self.line, self.col, "expected digits after `.`"));
            }
            while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                text.push(self.bump().unwrap());
            }
        }
        if matches!(self.chars.peek(), Some('e' | 'E')) {
            is_float = true;
            text.push('e');
            self.bump();
            if matches!(self.chars.peek(), Some('+' | '-')) {
                text.push(self.bump().unwrap());
            }
            if !matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                return Err(self.err(self.line, self.col, "expected digits in exponent"));
            }
            while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                text.push(self.bump().unwrap());
            }
        }
        if is_float {
            let v: f64 = text
                .parse()
                .map_err(|_| self.err(line, col, format!("invalid float literal `{text}`")))?;
            Ok(Tok::Literal(AttrValue::Float(v)))
        } else {
            let v: i64 = text
                .parse()
                .map_err(|_| self.err(line, col, format!("integer literal `{text}` out of range")))?;
            Ok(Tok::Literal(AttrValue::Int(v)))
        }
    }

    fn word(&mut self, line: usize, col: usize) -> Result<Tok, ParseError> {
        let mut word = String::new();
        while matches!(self.chars.peek(), Some(c) if c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-')) {
            word.push(self.bump().unwrap());
        }
        match word.as_str() {
            "true" => return Ok(Tok::True),
            "false" => return Ok(Tok::False),
            "exists" => return Ok(Tok::Exists),
            _ => {}
        }
        match word.split_once('.') {
            Some((ns, name)) => {
                let namespace = match ns {
                    "subject" => Namespace::Subject,
                    "object" => Namespace::Object,
                    "request" => Namespace::Request,
                    other => {
                        return Err(ParseError {
                            kind: ParseErrorKind::UnknownNamespace,
                            line,
                            col,
                            message: format!(
                                "`{other}` is not a namespace; use subject., object. or request."
                            ),
                        })
                    }
                };
                if name.is_empty() || validate_attr_name(name).is_err() {
                    return Err(self.err(line, col, format!("invalid attribute name `{name}`")));
                }
                Ok(Tok::Attr(AttrRef { namespace, name: name.to_string() }))
            }
            None => Err(ParseError {
                kind: ParseErrorKind::UnknownNamespace,
                line,
                col,
                message: format!(
                    "`{word}` is not namespaced; attribute references use subject., object. or request."
                ),
            }),
        }
    }
}
