use std::fmt;

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Dot,
    At,
    Backslash,
    Ellipsis,
    Assign,
    Eq,
    EqEq,
    NotEq,
    Lt,
    Gt,
    Le,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Arrow,
    Minus,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(i) => write!(f, "integer `{i}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Eof => f.write_str("end of input"),
            other => write!(f, "`{}`", punct(other)),
        }
    }
}

fn punct(t: &Tok) -> &'static str {
    match t {
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::Comma => ",",
        Tok::Semi => ";",
        Tok::Dot => ".",
        Tok::At => "@",
        Tok::Backslash => "\\",
        Tok::Ellipsis => "...",
        Tok::Assign => ":=",
        Tok::Eq => "=",
        Tok::EqEq => "==",
        Tok::NotEq => "!=",
        Tok::Lt => "<",
        Tok::Gt => ">",
        Tok::Le => "<=",
        Tok::Ge => ">=",
        Tok::AndAnd => "&&",
        Tok::OrOr => "||",
        Tok::Bang => "!",
        Tok::Arrow => "->",
        Tok::Minus => "-",
        _ => "?",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

/// On-demand lexer. The parser pulls one token at a time, which lets it switch
/// to raw capture for native code bodies.
pub struct Lexer<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer { src, offset: 0, line: 1, col: 1 }
    }

    pub fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek_char_at(&self, n: usize) -> Option<char> {
        self.src[self.offset..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek_char() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek_char_at(1) == Some('/') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn error(&self, pos: Pos, message: impl Into<String>) -> SyntaxError {
        SyntaxError { line: pos.line, col: pos.col, message: message.into() }
    }

    pub fn next_token(&mut self) -> Result<Token, SyntaxError> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(c) = self.bump() else {
            return Ok(Token { tok: Tok::Eof, pos });
        };
        let two = |lx: &mut Self, next: char, yes: Tok, no: Tok| {
            if lx.peek_char() == Some(next) {
                lx.bump();
                yes
            } else {
                no
            }
        };
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '@' => Tok::At,
            '\\' => Tok::Backslash,
            '.' => {
                if self.peek_char() == Some('.') && self.peek_char_at(1) == Some('.') {
                    self.bump();
                    self.bump();
                    Tok::Ellipsis
                } else {
                    Tok::Dot
                }
            }
            ':' => {
                if self.peek_char() == Some('=') {
                    self.bump();
                    Tok::Assign
                } else {
                    return Err(self.error(pos, "expected `:=`"));
                }
            }
            '=' => two(self, '=', Tok::EqEq, Tok::Eq),
            '!' => two(self, '=', Tok::NotEq, Tok::Bang),
            '<' => two(self, '=', Tok::Le, Tok::Lt),
            '>' => two(self, '=', Tok::Ge, Tok::Gt),
            '-' => two(self, '>', Tok::Arrow, Tok::Minus),
            '&' => {
                if self.peek_char() == Some('&') {
                    self.bump();
                    Tok::AndAnd
                } else {
                    return Err(self.error(pos, "expected `&&`"));
                }
            }
            '|' => {
                if self.peek_char() == Some('|') {
                    self.bump();
                    Tok::OrOr
                } else {
                    return Err(self.error(pos, "expected `||`"));
                }
            }
            '"' => Tok::Str(self.string_body(pos)?),
            c if c.is_ascii_digit() => {
                let start = self.offset - 1;
                while matches!(self.peek_char(), Some(d) if d.is_ascii_digit()) {
                    self.bump();
                }
                let text = &self.src[start..self.offset];
                let value = text
                    .parse::<i64>()
                    .map_err(|_| self.error(pos, format!("integer literal `{text}` out of range")))?;
                Tok::Int(value)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.offset - 1;
                while matches!(self.peek_char(), Some(d) if d.is_ascii_alphanumeric() || d == '_') {
                    self.bump();
                }
                Tok::Ident(self.src[start..self.offset].to_string())
            }
            other => return Err(self.error(pos, format!("unexpected character `{other}`"))),
        };
        Ok(Token { tok, pos })
    }

    fn string_body(&mut self, start: Pos) -> Result<String, SyntaxError> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(start, "unterminated string literal")),
                Some('"') => return Ok(out),
                Some('\\') => {
                    let esc_pos = self.pos();
                    match self.bump() {
                        Some('"') => out.push('"'),
                        Some('\\') => out.push('\\'),
                        Some('n') => out.push('\n'),
                        Some('t') => out.push('\t'),
                        _ => return Err(self.error(esc_pos, "invalid escape in string literal")),
                    }
                }
                Some(c) => out.push(c),
            }
        }
    }

    /// Consumes raw text up to the `}` matching an already consumed `{`.
    /// Returns the trimmed inner text; the closing brace is consumed.
    pub fn raw_block(&mut self, open: Pos) -> Result<String, SyntaxError> {
        let start = self.offset;
        let mut depth = 1usize;
        loop {
            let here = self.offset;
            match self.bump() {
                None => return Err(self.error(open, "unterminated `{` block")),
                Some('{') => depth += 1,
                Some('}') => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(self.src[start..here].trim().to_string());
                    }
                }
                Some('"') => {
                    let p = self.pos();
                    self.string_body(p)?;
                }
                Some(_) => {}
            }
        }
    }
}
