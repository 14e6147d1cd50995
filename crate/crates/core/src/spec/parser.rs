//! Recursive-descent parser for `.prv` property scripts.

use super::ast::*;
use super::lexer::{Lexer, Pos, Tok, Token};
use super::SyntaxError;

pub fn parse_spec(text: &str) -> Result<SpecAst, SyntaxError> {
    let mut p = Parser { lexer: Lexer::new(text), peeked: None };
    p.script()
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<Token>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<&Token, SyntaxError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next_token()?);
        }
        Ok(self.peeked.as_ref().expect("filled above"))
    }

    fn next(&mut self) -> Result<Token, SyntaxError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next_token(),
        }
    }

    fn at(&mut self, tok: &Tok) -> Result<bool, SyntaxError> {
        Ok(&self.peek()?.tok == tok)
    }

    fn at_ident(&mut self, word: &str) -> Result<bool, SyntaxError> {
        Ok(matches!(&self.peek()?.tok, Tok::Ident(s) if s == word))
    }

    fn eat(&mut self, tok: &Tok) -> Result<bool, SyntaxError> {
        if self.at(tok)? {
            self.next()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn err_at(pos: Pos, message: impl Into<String>) -> SyntaxError {
        SyntaxError { line: pos.line, col: pos.col, message: message.into() }
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, SyntaxError> {
        let t = self.next()?;
        if t.tok == tok {
            Ok(t.pos)
        } else {
            Err(Self::err_at(t.pos, format!("expected {tok}, found {}", t.tok)))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), SyntaxError> {
        let t = self.next()?;
        match t.tok {
            Tok::Ident(s) => Ok((s, t.pos)),
            other => Err(Self::err_at(t.pos, format!("expected identifier, found {other}"))),
        }
    }

    fn name(&mut self) -> Result<String, SyntaxError> {
        let (s, pos) = self.ident()?;
        if matches!(s.as_str(), "true" | "false" | "Done") {
            return Err(Self::err_at(pos, format!("`{s}` is reserved")));
        }
        Ok(s)
    }

    fn keyword(&mut self, word: &str) -> Result<(), SyntaxError> {
        let (s, pos) = self.ident()?;
        if s == word {
            Ok(())
        } else {
            Err(Self::err_at(pos, format!("expected `{word}`, found `{s}`")))
        }
    }

    fn name_list(&mut self) -> Result<Vec<String>, SyntaxError> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RParen)? {
            return Ok(out);
        }
        loop {
            out.push(self.name()?);
            if self.eat(&Tok::RParen)? {
                return Ok(out);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn optional_name_list(&mut self) -> Result<Option<Vec<String>>, SyntaxError> {
        if self.at(&Tok::LParen)? {
            Ok(Some(self.name_list()?))
        } else {
            Ok(None)
        }
    }

    fn script(&mut self) -> Result<SpecAst, SyntaxError> {
        let mut components = Vec::new();
        while self.at_ident("component")? {
            self.next()?;
            components.push(self.name()?);
            self.expect(Tok::Semi)?;
        }
        let mut upons = Vec::new();
        while !self.at(&Tok::Eof)? {
            upons.push(self.upon()?);
        }
        if upons.is_empty() {
            let pos = self.peek()?.pos;
            return Err(Self::err_at(pos, "script contains no `upon` block"));
        }
        Ok(SpecAst { components, upons })
    }

    fn upon(&mut self) -> Result<UponBlock, SyntaxError> {
        self.keyword("upon")?;
        self.expect(Tok::LParen)?;
        let replication_event = self.name()?;
        self.expect(Tok::LParen)?;
        let context_var = self.name()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::LBrace)?;
        let mut block = UponBlock {
            replication_event,
            context_var,
            state: Vec::new(),
            events: Vec::new(),
            conditions: Vec::new(),
            actions: Vec::new(),
            rules: Vec::new(),
        };
        while !self.eat(&Tok::RBrace)? {
            let (section, pos) = self.ident()?;
            self.expect(Tok::LBrace)?;
            match section.as_str() {
                "state" => self.state_section(&mut block.state)?,
                "events" => {
                    while !self.eat(&Tok::RBrace)? {
                        block.events.push(self.event_decl()?);
                    }
                }
                "conditions" => self.callable_section(&mut block.conditions)?,
                "actions" => self.callable_section(&mut block.actions)?,
                "rules" => {
                    while !self.eat(&Tok::RBrace)? {
                        block.rules.push(self.rule()?);
                    }
                }
                other => {
                    return Err(Self::err_at(
                        pos,
                        format!("unknown section `{other}`; expected state, events, conditions, actions or rules"),
                    ))
                }
            }
        }
        Ok(block)
    }

    /// Parses `monitorSide` / `systemSide[@label]` if present.
    fn locale_tag(&mut self) -> Result<Option<Locale>, SyntaxError> {
        if self.at_ident("monitorSide")? {
            self.next()?;
            return Ok(Some(Locale::MonitorSide));
        }
        if self.at_ident("systemSide")? {
            self.next()?;
            let label = if self.eat(&Tok::At)? { self.name()? } else { DEFAULT_COMPONENT.to_string() };
            return Ok(Some(Locale::SystemSide(label)));
        }
        Ok(None)
    }

    fn state_section(&mut self, out: &mut Vec<StateDecl>) -> Result<(), SyntaxError> {
        while !self.eat(&Tok::RBrace)? {
            match self.locale_tag()? {
                Some(locale) => {
                    self.expect(Tok::LBrace)?;
                    while !self.eat(&Tok::RBrace)? {
                        out.push(self.state_decl(locale.clone())?);
                    }
                }
                None => out.push(self.state_decl(Locale::MonitorSide)?),
            }
        }
        Ok(())
    }

    fn state_decl(&mut self, locale: Locale) -> Result<StateDecl, SyntaxError> {
        let (ty, pos) = self.ident()?;
        let scalar = match ty.as_str() {
            "bool" | "boolean" => ScalarKind::Bool,
            "int" => ScalarKind::Int,
            "string" => ScalarKind::Str,
            other => return Err(Self::err_at(pos, format!("unknown state type `{other}`"))),
        };
        let kind = if self.eat(&Tok::LBracket)? {
            self.expect(Tok::RBracket)?;
            ValueKind::Map(scalar)
        } else {
            ValueKind::Scalar(scalar)
        };
        let name = self.name()?;
        let explicit = if self.eat(&Tok::Eq)? { Some(self.literal()?) } else { None };
        self.expect(Tok::Semi)?;
        let initial = match (&locale, explicit) {
            (Locale::SystemSide(_), None) => None,
            (Locale::MonitorSide, None) => Some(kind.default_value()),
            (_, Some(v)) => Some(v),
        };
        Ok(StateDecl { name, kind, locale, initial })
    }

    fn literal(&mut self) -> Result<Value, SyntaxError> {
        let t = self.next()?;
        match t.tok {
            Tok::Int(i) => Ok(Value::Int(i)),
            Tok::Minus => match self.next()? {
                Token { tok: Tok::Int(i), .. } => Ok(Value::Int(-i)),
                other => Err(Self::err_at(other.pos, "expected integer after `-`")),
            },
            Tok::Str(s) => Ok(Value::Str(s)),
            Tok::Ident(s) if s == "true" => Ok(Value::Bool(true)),
            Tok::Ident(s) if s == "false" => Ok(Value::Bool(false)),
            other => Err(Self::err_at(t.pos, format!("expected literal, found {other}"))),
        }
    }

    fn event_decl(&mut self) -> Result<EventDecl, SyntaxError> {
        let mut component = DEFAULT_COMPONENT.to_string();
        if self.at_ident("event")? {
            self.next()?;
            if self.eat(&Tok::At)? {
                component = self.name()?;
            }
        }
        let name = self.name()?;
        let params = self.name_list()?;
        self.expect(Tok::Eq)?;
        self.expect(Tok::LBrace)?;
        let mut callable = self.name()?;
        while self.eat(&Tok::Dot)? {
            callable.push('.');
            callable.push_str(&self.name()?);
        }
        let args = self.name_list()?;
        self.eat(&Tok::Semi)?;
        self.expect(Tok::RBrace)?;
        self.eat(&Tok::Semi)?;
        Ok(EventDecl { name, params, component, trigger: Trigger { callable, args } })
    }

    fn callable_section(&mut self, out: &mut Vec<CallableDecl>) -> Result<(), SyntaxError> {
        while !self.eat(&Tok::RBrace)? {
            match self.locale_tag()? {
                Some(locale) => {
                    self.expect(Tok::LBrace)?;
                    while !self.eat(&Tok::RBrace)? {
                        out.push(self.callable_decl(locale.clone())?);
                    }
                }
                None => out.push(self.callable_decl(Locale::MonitorSide)?),
            }
        }
        Ok(())
    }

    fn callable_decl(&mut self, locale: Locale) -> Result<CallableDecl, SyntaxError> {
        let name = self.name()?;
        let params = self.optional_name_list()?.unwrap_or_default();
        self.expect(Tok::Eq)?;
        let body = if self.eat(&Tok::Ellipsis)? {
            self.eat(&Tok::Semi)?;
            Body::Opaque
        } else if let Locale::SystemSide(_) = locale {
            let open = self.expect(Tok::LBrace)?;
            debug_assert!(self.peeked.is_none());
            let raw = self.lexer.raw_block(open)?;
            self.eat(&Tok::Semi)?;
            Body::Native(raw)
        } else if self.at(&Tok::LBrace)? {
            self.next()?;
            let e = self.sequence(&params)?;
            self.expect(Tok::RBrace)?;
            self.eat(&Tok::Semi)?;
            Body::Expr(e)
        } else {
            let e = self.statement(&params)?;
            self.expect(Tok::Semi)?;
            Body::Expr(e)
        };
        Ok(CallableDecl { name, params, locale, body })
    }

    fn rule(&mut self) -> Result<Rule, SyntaxError> {
        let first = self.name()?;
        let (label, event) = if self.eat(&Tok::Eq)? { (Some(first), self.name()?) } else { (None, first) };
        let bindings = self.optional_name_list()?;
        let condition = if self.eat(&Tok::Backslash)? {
            if self.at_ident("true")? {
                self.next()?;
                None
            } else {
                let negated = self.eat(&Tok::Bang)?;
                let name = self.name()?;
                let args = self.optional_name_list()?;
                Some(CondRef { negated, name, args })
            }
        } else {
            None
        };
        self.expect(Tok::Arrow)?;
        let action = if self.at_ident("Done")? {
            self.next()?;
            ActionRef::Done
        } else {
            let name = self.name()?;
            let args = self.optional_name_list()?;
            ActionRef::Invoke { name, args }
        };
        self.expect(Tok::Semi)?;
        Ok(Rule { label, event, bindings, condition, action })
    }

    // Expressions ---------------------------------------------------------

    fn sequence(&mut self, params: &[String]) -> Result<Expr, SyntaxError> {
        let mut items = vec![self.statement(params)?];
        while self.eat(&Tok::Semi)? {
            if self.at(&Tok::RBrace)? {
                break;
            }
            items.push(self.statement(params)?);
        }
        Ok(if items.len() == 1 { items.pop().expect("one item") } else { Expr::Seq(items) })
    }

    fn statement(&mut self, params: &[String]) -> Result<Expr, SyntaxError> {
        let pos = self.peek()?.pos;
        let lhs = self.or_expr(params)?;
        if !self.eat(&Tok::Assign)? {
            return Ok(lhs);
        }
        let rhs = Box::new(self.or_expr(params)?);
        match lhs {
            Expr::Var(name) => Ok(Expr::Assign(name, rhs)),
            Expr::Index(base, key) => match *base {
                Expr::Var(name) => Ok(Expr::AssignIndex(name, key, rhs)),
                _ => Err(Self::err_at(pos, "only state maps can be assigned by index")),
            },
            Expr::Param(name) => Err(Self::err_at(pos, format!("cannot assign to parameter `{name}`"))),
            _ => Err(Self::err_at(pos, "invalid assignment target")),
        }
    }

    fn or_expr(&mut self, params: &[String]) -> Result<Expr, SyntaxError> {
        let mut lhs = self.and_expr(params)?;
        while self.eat(&Tok::OrOr)? {
            let rhs = self.and_expr(params)?;
            lhs = Expr::Binary(BinaryOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self, params: &[String]) -> Result<Expr, SyntaxError> {
        let mut lhs = self.equality(params)?;
        while self.eat(&Tok::AndAnd)? {
            let rhs = self.equality(params)?;
            lhs = Expr::Binary(BinaryOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn equality(&mut self, params: &[String]) -> Result<Expr, SyntaxError> {
        let mut lhs = self.relational(params)?;
        loop {
            let op = match self.peek()?.tok {
                Tok::EqEq => BinaryOp::Eq,
                Tok::NotEq => BinaryOp::Ne,
                _ => return Ok(lhs),
            };
            self.next()?;
            let rhs = self.relational(params)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn relational(&mut self, params: &[String]) -> Result<Expr, SyntaxError> {
        let lhs = self.unary(params)?;
        let op = match self.peek()?.tok {
            Tok::Lt => BinaryOp::Lt,
            Tok::Gt => BinaryOp::Gt,
            Tok::Le => BinaryOp::Le,
            Tok::Ge => BinaryOp::Ge,
            _ => return Ok(lhs),
        };
        self.next()?;
        let rhs = self.unary(params)?;
        Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    fn unary(&mut self, params: &[String]) -> Result<Expr, SyntaxError> {
        if self.eat(&Tok::Bang)? {
            let inner = self.unary(params)?;
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(inner)));
        }
        self.postfix(params)
    }

    fn postfix(&mut self, params: &[String]) -> Result<Expr, SyntaxError> {
        let mut e = self.primary(params)?;
        while self.eat(&Tok::LBracket)? {
            let key = self.or_expr(params)?;
            self.expect(Tok::RBracket)?;
            e = Expr::Index(Box::new(e), Box::new(key));
        }
        Ok(e)
    }

    fn primary(&mut self, params: &[String]) -> Result<Expr, SyntaxError> {
        let t = self.peek()?.clone();
        match &t.tok {
            Tok::LParen => {
                self.next()?;
                let e = self.or_expr(params)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Int(_) | Tok::Str(_) | Tok::Minus => Ok(Expr::Literal(self.literal()?)),
            Tok::Ident(s) if s == "true" || s == "false" => Ok(Expr::Literal(self.literal()?)),
            Tok::Ident(_) => {
                let name = self.name()?;
                if params.iter().any(|p| *p == name) {
                    Ok(Expr::Param(name))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            other => Err(Self::err_at(t.pos, format!("expected expression, found {other}"))),
        }
    }
}
