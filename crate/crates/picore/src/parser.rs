//! Concrete syntax: lexer, recursive-descent parser, and the canonical
//! pretty-printer. The grammar is documented in docs/grammar.md; parsing the
//! pretty-printed form of a spec yields the same spec.

use crate::domain::DomainDecl;
use crate::error::{Error, Result};
use crate::expr::{eval, BinOp, Expr, UnOp};
use crate::state::State;
use crate::syntax::{
    Event, EventLabel, EventSystem, ExecUnitId, ParallelEventSystem, Program, RGCond, RgSpecDecl,
    SpecFile,
};
use crate::value::Value;
use num_bigint::BigInt;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

/// Line/column position of a token, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceSpan {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

const KEYWORDS: &[&str] = &[
    "DOMAINS", "INIT", "SYSTEM", "RGSPECS", "INVARIANTS", "END", "UNIT", "UNITS", "EVENT", "WHEN",
    "THEN", "ELSE", "IF", "FI", "WHILE", "DO", "OD", "AWAIT", "ATOM", "NONDT", "SKIP", "GUARD",
    "RG", "PRE", "RELY", "GUAR", "POST", "MID",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    /// An identifier immediately followed by a prime mark.
    Primed(String),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(n) => write!(f, "`{}`", n),
            Tok::Ident(s) => write!(f, "`{}`", s),
            Tok::Primed(s) => write!(f, "`{}'`", s),
            Tok::Punct(p) => write!(f, "`{}`", p),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

// Longest first, so `==>` wins over `=` and `;;` over `;`.
const PUNCTS: &[&str] = &[
    ";;", ":=", "==>", "->", "/\\", "\\/", "<=", ">=", "!=", ";", ":", ",", "@", "(", ")", "[",
    "]", "{", "}", "=", "<", ">", "+", "-", "*", "~", "#",
];

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        // `--` comments run to end of line.
        if c == '-' && i + 1 < bytes.len() && bytes[i + 1] == b'-' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let span = SourceSpan { line, col };
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
                col += 1;
            }
            let n: BigInt = src[start..i].parse().expect("digits parse as BigInt");
            toks.push(Token {
                tok: Tok::Int(n),
                span,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
                col += 1;
            }
            let name = src[start..i].to_string();
            if i < bytes.len() && bytes[i] == b'\'' {
                i += 1;
                col += 1;
                toks.push(Token {
                    tok: Tok::Primed(name),
                    span,
                });
            } else {
                toks.push(Token {
                    tok: Tok::Ident(name),
                    span,
                });
            }
            continue;
        }
        let mut matched = false;
        for p in PUNCTS {
            if src[i..].starts_with(p) {
                toks.push(Token {
                    tok: Tok::Punct(p),
                    span,
                });
                i += p.len();
                col += p.len() as u32;
                matched = true;
                break;
            }
        }
        if !matched {
            return Err(Error::Syntax {
                span,
                msg: format!("unexpected character `{}`", c),
            });
        }
    }
    toks.push(Token {
        tok: Tok::Eof,
        span: SourceSpan { line, col },
    });
    Ok(toks)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Names bound locally (event parameters, RG formals); reads of these are
    /// not state-variable uses.
    locals: BTreeSet<String>,
    /// State-variable reads and writes, checked against DOMAINS at the end.
    var_uses: Vec<(SourceSpan, String)>,
}

impl Parser {
    fn new(src: &str) -> Result<Parser> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            locals: BTreeSet::new(),
            var_uses: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            span: self.span(),
            msg: msg.into(),
        })
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(format!("expected `{}`, found {}", p, self.peek()))
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{}`, found {}", kw, self.peek()))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, SourceSpan)> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok((s, span))
            }
            other => self.err(format!("expected an identifier, found {}", other)),
        }
    }

    fn record_var(&mut self, span: SourceSpan, name: &str) {
        if !self.locals.contains(name) {
            self.var_uses.push((span, name.to_string()));
        }
    }

    // ---- expressions -----------------------------------------------------

    fn parse_expr(&mut self) -> Result<Expr> {
        self.parse_imp()
    }

    fn parse_imp(&mut self) -> Result<Expr> {
        let lhs = self.parse_or()?;
        if self.eat_punct("==>") {
            let rhs = self.parse_imp()?;
            Ok(Expr::imp(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_or(&mut self) -> Result<Expr> {
        let mut e = self.parse_and()?;
        while self.eat_punct("\\/") {
            let rhs = self.parse_and()?;
            e = Expr::or(e, rhs);
        }
        Ok(e)
    }

    fn parse_and(&mut self) -> Result<Expr> {
        let mut e = self.parse_not()?;
        while self.eat_punct("/\\") {
            let rhs = self.parse_not()?;
            e = Expr::and(e, rhs);
        }
        Ok(e)
    }

    fn parse_not(&mut self) -> Result<Expr> {
        if self.eat_punct("~") {
            let e = self.parse_not()?;
            Ok(Expr::not(e))
        } else {
            self.parse_cmp()
        }
    }

    fn parse_cmp(&mut self) -> Result<Expr> {
        let mut e = self.parse_cons()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("=") => BinOp::Eq,
                Tok::Punct("!=") => BinOp::Ne,
                Tok::Punct("<") => BinOp::Lt,
                Tok::Punct("<=") => BinOp::Le,
                Tok::Punct(">") => BinOp::Gt,
                Tok::Punct(">=") => BinOp::Ge,
                _ => break,
            };
            self.bump();
            let rhs = self.parse_cons()?;
            e = Expr::bin(op, e, rhs);
        }
        Ok(e)
    }

    fn parse_cons(&mut self) -> Result<Expr> {
        let lhs = self.parse_add()?;
        if self.eat_punct("#") {
            let rhs = self.parse_cons()?;
            Ok(Expr::bin(BinOp::Cons, lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_add(&mut self) -> Result<Expr> {
        let mut e = self.parse_mul()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("+") => BinOp::Add,
                Tok::Punct("-") => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.parse_mul()?;
            e = Expr::bin(op, e, rhs);
        }
        Ok(e)
    }

    fn parse_mul(&mut self) -> Result<Expr> {
        let mut e = self.parse_unary()?;
        while self.at_punct("*") {
            self.bump();
            let rhs = self.parse_unary()?;
            e = Expr::bin(BinOp::Mul, e, rhs);
        }
        Ok(e)
    }

    fn parse_unary(&mut self) -> Result<Expr> {
        if self.eat_punct("-") {
            let e = self.parse_unary()?;
            Ok(Expr::Un(UnOp::Neg, Box::new(e)))
        } else {
            self.parse_primary()
        }
    }

    fn parse_call1(&mut self, op: UnOp) -> Result<Expr> {
        self.expect_punct("(")?;
        let a = self.parse_expr()?;
        self.expect_punct(")")?;
        Ok(Expr::Un(op, Box::new(a)))
    }

    fn parse_call2(&mut self, op: BinOp) -> Result<Expr> {
        self.expect_punct("(")?;
        let a = self.parse_expr()?;
        self.expect_punct(",")?;
        let b = self.parse_expr()?;
        self.expect_punct(")")?;
        Ok(Expr::bin(op, a, b))
    }

    fn parse_primary(&mut self) -> Result<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Lit(Value::Int(n)))
            }
            Tok::Primed(name) => {
                self.bump();
                self.record_var(span, &name);
                Ok(Expr::Prime(name))
            }
            Tok::Ident(name) => {
                if is_keyword(&name) {
                    return self.err(format!("unexpected keyword `{}` in expression", name));
                }
                self.bump();
                match name.as_str() {
                    "UNIV" => Ok(Expr::Univ),
                    "EMPTY" => Ok(Expr::Empty),
                    "Id" => Ok(Expr::IdRel),
                    "true" => Ok(Expr::btrue()),
                    "false" => Ok(Expr::bfalse()),
                    "none" => Ok(Expr::Lit(Value::none())),
                    "hd" => self.parse_call1(UnOp::Head),
                    "tl" => self.parse_call1(UnOp::Tail),
                    "len" => self.parse_call1(UnOp::Len),
                    "some" => self.parse_call1(UnOp::Some),
                    "issome" => self.parse_call1(UnOp::IsSome),
                    "the" => self.parse_call1(UnOp::The),
                    "append" => self.parse_call2(BinOp::Append),
                    "mem" => self.parse_call2(BinOp::Mem),
                    "subset" => self.parse_call2(BinOp::Subset),
                    "apply" => self.parse_call2(BinOp::MapGet),
                    "update" => {
                        self.expect_punct("(")?;
                        let m = self.parse_expr()?;
                        self.expect_punct(",")?;
                        let k = self.parse_expr()?;
                        self.expect_punct(",")?;
                        let v = self.parse_expr()?;
                        self.expect_punct(")")?;
                        Ok(Expr::MapUpd(Box::new(m), Box::new(k), Box::new(v)))
                    }
                    _ => {
                        if name.chars().next().is_some_and(char::is_uppercase) {
                            Ok(Expr::sym(&name))
                        } else {
                            self.record_var(span, &name);
                            Ok(Expr::Var(name))
                        }
                    }
                }
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.parse_expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Punct("[") => {
                self.bump();
                let mut es = Vec::new();
                if !self.at_punct("]") {
                    loop {
                        es.push(self.parse_expr()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct("]")?;
                Ok(Expr::ListLit(es))
            }
            Tok::Punct("{") => {
                self.bump();
                let mut kvs = Vec::new();
                if !self.at_punct("}") {
                    loop {
                        let k = self.parse_expr()?;
                        self.expect_punct("->")?;
                        let v = self.parse_expr()?;
                        kvs.push((k, v));
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct("}")?;
                Ok(Expr::MapLit(kvs))
            }
            other => self.err(format!("expected an expression, found {}", other)),
        }
    }

    /// Parses an expression and evaluates it in the empty state; usable for
    /// domain elements and event parameters, which must be closed.
    fn parse_value(&mut self) -> Result<Value> {
        let span = self.span();
        let uses_before = self.var_uses.len();
        let e = self.parse_expr()?;
        if self.var_uses.len() != uses_before {
            let (_, name) = self.var_uses[uses_before].clone();
            return Err(Error::Syntax {
                span,
                msg: format!("value literal may not read variable `{}`", name),
            });
        }
        eval(&e, &State::new()).map_err(|err| Error::Syntax {
            span,
            msg: format!("value literal does not evaluate: {}", err),
        })
    }

    // ---- programs ----------------------------------------------------------

    fn parse_program(&mut self) -> Result<Program> {
        let mut stmts = vec![self.parse_stmt()?];
        while self.eat_punct(";;") {
            stmts.push(self.parse_stmt()?);
        }
        let mut it = stmts.into_iter().rev();
        let last = it.next().expect("at least one statement");
        Ok(it.fold(last, |acc, s| Program::seq(s, acc)))
    }

    fn parse_stmt(&mut self) -> Result<Program> {
        if self.eat_kw("SKIP") {
            return Ok(Program::Basic(vec![]));
        }
        if self.eat_kw("IF") {
            let c = self.parse_expr()?;
            self.expect_kw("THEN")?;
            let t = self.parse_program()?;
            let e = if self.eat_kw("ELSE") {
                self.parse_program()?
            } else {
                Program::Basic(vec![])
            };
            self.expect_kw("FI")?;
            return Ok(Program::Cond(c, Box::new(t), Box::new(e)));
        }
        if self.eat_kw("WHILE") {
            let c = self.parse_expr()?;
            self.expect_kw("DO")?;
            let body = self.parse_program()?;
            self.expect_kw("OD")?;
            return Ok(Program::While(c, Box::new(body)));
        }
        if self.eat_kw("AWAIT") {
            let g = self.parse_expr()?;
            self.expect_kw("THEN")?;
            let body = self.parse_program()?;
            self.expect_kw("END")?;
            return Ok(Program::Await(g, Box::new(body)));
        }
        if self.eat_kw("ATOM") {
            let body = self.parse_program()?;
            self.expect_kw("END")?;
            return Ok(Program::atom(body));
        }
        if self.eat_kw("GUARD") {
            // GUARD b is AWAIT b THEN SKIP END
            let g = self.parse_expr()?;
            return Ok(Program::Await(g, Box::new(Program::Basic(vec![]))));
        }
        if self.eat_kw("NONDT") {
            let r = self.parse_expr()?;
            return Ok(Program::Nondt(r));
        }
        // Simultaneous assignment: x := e, y := e, ...
        let mut asgns = Vec::new();
        loop {
            let (name, span) = self.expect_ident()?;
            self.record_var(span, &name);
            if asgns.iter().any(|(n, _)| *n == name) {
                return Err(Error::Syntax {
                    span,
                    msg: format!("variable `{}` assigned twice in one step", name),
                });
            }
            self.expect_punct(":=")?;
            let e = self.parse_expr()?;
            asgns.push((name, e));
            if !self.eat_punct(",") {
                break;
            }
        }
        Ok(Program::Basic(asgns))
    }

    // ---- events and systems ------------------------------------------------

    /// Parses one EVENT block and expands parameter binders, yielding one
    /// event per combination of parameter values. Records the parameter
    /// tuples into `domains.event_params`.
    fn parse_event(&mut self, unit: &ExecUnitId, domains: &mut DomainDecl) -> Result<Vec<Event>> {
        self.expect_kw("EVENT")?;
        let (name, _) = self.expect_ident()?;
        // Each parameter is either `v : { values }` (a binder to expand) or a
        // closed value (an already-instantiated label).
        enum Param {
            Binder(String, Vec<Value>),
            Literal(Value),
        }
        let mut params: Vec<Param> = Vec::new();
        if self.eat_punct("[") {
            if !self.at_punct("]") {
                loop {
                    let is_binder = matches!(self.peek(), Tok::Ident(s)
                        if !is_keyword(s) && s.chars().next().is_some_and(char::is_lowercase))
                        && matches!(self.toks[self.pos + 1].tok, Tok::Punct(":"));
                    if is_binder {
                        let (v, _) = self.expect_ident()?;
                        self.expect_punct(":")?;
                        self.expect_punct("{")?;
                        let mut vals = Vec::new();
                        if !self.at_punct("}") {
                            loop {
                                vals.push(self.parse_value()?);
                                if !self.eat_punct(",") {
                                    break;
                                }
                            }
                        }
                        self.expect_punct("}")?;
                        params.push(Param::Binder(v, vals));
                    } else {
                        params.push(Param::Literal(self.parse_value()?));
                    }
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct("]")?;
        }
        if self.eat_punct("@") {
            let (u, span) = self.expect_ident()?;
            if u != unit.0 {
                return Err(Error::Syntax {
                    span,
                    msg: format!("event is declared under unit `{}`, not `{}`", unit.0, u),
                });
            }
        }
        let binders: BTreeSet<String> = params
            .iter()
            .filter_map(|p| match p {
                Param::Binder(v, _) => Some(v.clone()),
                Param::Literal(_) => None,
            })
            .collect();
        let saved_locals = self.locals.clone();
        self.locals.extend(binders.iter().cloned());
        let guard = if self.eat_kw("WHEN") {
            self.parse_expr()?
        } else {
            Expr::btrue()
        };
        self.expect_kw("THEN")?;
        let body = self.parse_program()?;
        self.expect_kw("END")?;
        self.locals = saved_locals;

        // Cartesian product over binder domains; literals stay fixed.
        let mut tuples: Vec<(Vec<Value>, BTreeMap<String, Value>)> =
            vec![(Vec::new(), BTreeMap::new())];
        for p in &params {
            let mut next = Vec::new();
            for (vals, binding) in &tuples {
                match p {
                    Param::Literal(v) => {
                        let mut vals = vals.clone();
                        vals.push(v.clone());
                        next.push((vals, binding.clone()));
                    }
                    Param::Binder(name, choices) => {
                        for c in choices {
                            let mut vals = vals.clone();
                            vals.push(c.clone());
                            let mut binding = binding.clone();
                            binding.insert(name.clone(), c.clone());
                            next.push((vals, binding));
                        }
                    }
                }
            }
            tuples = next;
        }
        let mut events = Vec::with_capacity(tuples.len());
        for (vals, binding) in tuples {
            if !vals.is_empty() {
                domains
                    .event_params
                    .entry(name.clone())
                    .or_default()
                    .push(vals.clone());
            }
            events.push(Event::Basic {
                label: EventLabel {
                    name: name.clone(),
                    params: vals,
                    unit: unit.clone(),
                },
                guard: guard.subst(&binding),
                body: body.subst(&binding),
            });
        }
        Ok(events)
    }

    fn parse_esys(&mut self, unit: &ExecUnitId, domains: &mut DomainDecl) -> Result<EventSystem> {
        if self.eat_punct("{") {
            let mut events = Vec::new();
            if !self.at_punct("}") {
                loop {
                    events.extend(self.parse_event(unit, domains)?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct("}")?;
            return Ok(EventSystem::Set(events));
        }
        let mut head = self.parse_event(unit, domains)?;
        if head.len() != 1 {
            return self.err("a sequenced event must not have parameter binders");
        }
        let first = head.pop().expect("checked length");
        if self.eat_punct(";") {
            let rest = self.parse_esys(unit, domains)?;
            Ok(EventSystem::Seq(first, Box::new(rest)))
        } else {
            Ok(EventSystem::Set(vec![first]))
        }
    }

    // ---- sections ------------------------------------------------------------

    fn parse_domains(&mut self, domains: &mut DomainDecl) -> Result<()> {
        while !self.eat_kw("END") {
            if self.eat_kw("UNITS") {
                self.expect_punct(":")?;
                self.expect_punct("{")?;
                loop {
                    let (u, _) = self.expect_ident()?;
                    domains.units.push(u);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct("}")?;
            } else {
                let (name, _) = self.expect_ident()?;
                self.expect_punct(":")?;
                self.expect_punct("{")?;
                let mut vals = Vec::new();
                if !self.at_punct("}") {
                    loop {
                        vals.push(self.parse_value()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct("}")?;
                domains.declare(&name, vals);
            }
            self.eat_punct(";;");
        }
        Ok(())
    }

    fn parse_system(&mut self, domains: &mut DomainDecl) -> Result<ParallelEventSystem> {
        let mut systems = BTreeMap::new();
        while !self.eat_kw("END") {
            self.expect_kw("UNIT")?;
            let (u, span) = self.expect_ident()?;
            self.expect_punct(":")?;
            let unit = ExecUnitId(u.clone());
            let esys = self.parse_esys(&unit, domains)?;
            if systems.insert(unit, esys).is_some() {
                return Err(Error::Syntax {
                    span,
                    msg: format!("unit `{}` declared twice", u),
                });
            }
        }
        ParallelEventSystem::new(systems)
    }

    fn parse_rgspecs(&mut self) -> Result<Vec<RgSpecDecl>> {
        let mut decls = Vec::new();
        while !self.eat_kw("END") {
            self.expect_kw("RG")?;
            let (name, _) = self.expect_ident()?;
            let mut formals = Vec::new();
            if self.eat_punct("[") {
                if !self.at_punct("]") {
                    loop {
                        let (v, _) = self.expect_ident()?;
                        formals.push(v);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct("]")?;
            }
            let unit = if self.eat_punct("@") {
                let (u, _) = self.expect_ident()?;
                Some(ExecUnitId(u))
            } else {
                None
            };
            self.expect_punct(":")?;
            let saved_locals = self.locals.clone();
            self.locals.extend(formals.iter().cloned());
            self.expect_kw("PRE")?;
            let pre = self.parse_expr()?;
            self.expect_kw("RELY")?;
            let rely = self.parse_expr()?;
            self.expect_kw("GUAR")?;
            let guar = self.parse_expr()?;
            self.expect_kw("POST")?;
            let post = self.parse_expr()?;
            let mut mids = Vec::new();
            while self.eat_kw("MID") {
                mids.push(self.parse_expr()?);
            }
            self.locals = saved_locals;
            decls.push(RgSpecDecl {
                name,
                unit,
                formals,
                rg: RGCond::new(pre, rely, guar, post),
                mids,
            });
            self.eat_punct(";;");
        }
        Ok(decls)
    }

    fn parse_invariants(&mut self) -> Result<Vec<(String, Expr)>> {
        let mut out = Vec::new();
        while !self.eat_kw("END") {
            let (name, _) = self.expect_ident()?;
            self.expect_punct(":")?;
            let e = self.parse_expr()?;
            out.push((name, e));
            self.eat_punct(";;");
        }
        Ok(out)
    }

    fn parse_spec_file(&mut self) -> Result<SpecFile> {
        let mut domains = DomainDecl::new();
        let mut saw_domains = false;
        let mut init: Option<Expr> = None;
        let mut system: Option<ParallelEventSystem> = None;
        let mut rgspecs = Vec::new();
        let mut invariants = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(s) if s == "DOMAINS" => {
                    self.bump();
                    if saw_domains {
                        return self.err("duplicate DOMAINS section");
                    }
                    saw_domains = true;
                    self.parse_domains(&mut domains)?;
                }
                Tok::Ident(s) if s == "INIT" => {
                    self.bump();
                    if init.is_some() {
                        return self.err("duplicate INIT section");
                    }
                    init = Some(self.parse_expr()?);
                    self.expect_kw("END")?;
                }
                Tok::Ident(s) if s == "SYSTEM" => {
                    self.bump();
                    if system.is_some() {
                        return self.err("duplicate SYSTEM section");
                    }
                    system = Some(self.parse_system(&mut domains)?);
                }
                Tok::Ident(s) if s == "RGSPECS" => {
                    self.bump();
                    if !rgspecs.is_empty() {
                        return self.err("duplicate RGSPECS section");
                    }
                    rgspecs = self.parse_rgspecs()?;
                }
                Tok::Ident(s) if s == "INVARIANTS" => {
                    self.bump();
                    if !invariants.is_empty() {
                        return self.err("duplicate INVARIANTS section");
                    }
                    invariants = self.parse_invariants()?;
                }
                other => {
                    return self.err(format!(
                        "expected a section (DOMAINS, INIT, SYSTEM, RGSPECS, INVARIANTS), found {}",
                        other
                    ))
                }
            }
        }
        if !saw_domains {
            return self.err("missing DOMAINS section");
        }
        let init = match init {
            Some(e) => e,
            None => return self.err("missing INIT section"),
        };
        let system = match system {
            Some(s) => s,
            None => return self.err("missing SYSTEM section"),
        };
        let declared = domains.all_vars();
        for (span, name) in &self.var_uses {
            if !declared.contains(name) {
                return Err(Error::UndeclaredVariable {
                    span: *span,
                    name: name.clone(),
                });
            }
        }
        let mut labels = BTreeSet::new();
        let spec = SpecFile {
            domains,
            init,
            system,
            rgspecs,
            invariants,
        };
        for ev in spec.events() {
            if let Some(l) = ev.label() {
                if !labels.insert(l.clone()) {
                    return Err(Error::DuplicateEventLabel(l.to_string()));
                }
            }
        }
        Ok(spec)
    }
}

/// Parses a complete spec file.
pub fn parse_spec(src: &str) -> Result<SpecFile> {
    let mut p = Parser::new(src)?;
    p.parse_spec_file()
}

/// Parses a standalone expression (no variable-declaration checks).
pub fn parse_expr_str(src: &str) -> Result<Expr> {
    let mut p = Parser::new(src)?;
    let e = p.parse_expr()?;
    if !matches!(p.peek(), Tok::Eof) {
        return p.err(format!("trailing input after expression: {}", p.peek()));
    }
    Ok(e)
}

/// Parses a standalone program (no variable-declaration checks).
pub fn parse_program_str(src: &str) -> Result<Program> {
    let mut p = Parser::new(src)?;
    let prog = p.parse_program()?;
    if !matches!(p.peek(), Tok::Eof) {
        return p.err(format!("trailing input after program: {}", p.peek()));
    }
    Ok(prog)
}

// ---- pretty-printing -------------------------------------------------------

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_prog(p: &Program, level: usize, out: &mut String) {
    match p {
        Program::Basic(asgns) if asgns.is_empty() => {
            indent(out, level);
            out.push_str("SKIP");
        }
        Program::Basic(asgns) => {
            indent(out, level);
            for (i, (v, e)) in asgns.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{} := {}", v, e);
            }
        }
        Program::Seq(a, b) => {
            write_prog(a, level, out);
            out.push_str(";;\n");
            write_prog(b, level, out);
        }
        Program::Cond(c, t, e) => {
            indent(out, level);
            let _ = write!(out, "IF {} THEN\n", c);
            write_prog(t, level + 1, out);
            if **e != Program::Basic(vec![]) {
                out.push('\n');
                indent(out, level);
                out.push_str("ELSE\n");
                write_prog(e, level + 1, out);
            }
            out.push('\n');
            indent(out, level);
            out.push_str("FI");
        }
        Program::While(c, body) => {
            indent(out, level);
            let _ = write!(out, "WHILE {} DO\n", c);
            write_prog(body, level + 1, out);
            out.push('\n');
            indent(out, level);
            out.push_str("OD");
        }
        Program::Await(g, body) => {
            indent(out, level);
            if g.is_true_lit() {
                out.push_str("ATOM\n");
            } else {
                let _ = write!(out, "AWAIT {} THEN\n", g);
            }
            write_prog(body, level + 1, out);
            out.push('\n');
            indent(out, level);
            out.push_str("END");
        }
        Program::Nondt(r) => {
            indent(out, level);
            let _ = write!(out, "NONDT {}", r);
        }
        // Done has no source form; it only arises during execution.
        Program::Done => {
            indent(out, level);
            out.push_str("SKIP");
        }
    }
}

fn write_event(ev: &Event, level: usize, out: &mut String) {
    match ev {
        Event::Basic { label, guard, body } => {
            indent(out, level);
            let _ = write!(out, "EVENT {}", label.name);
            if !label.params.is_empty() {
                out.push_str(" [");
                for (i, v) in label.params.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    let _ = write!(out, "{}", v);
                }
                out.push(']');
            }
            let _ = write!(out, " @ {}", label.unit);
            if !guard.is_true_lit() {
                let _ = write!(out, " WHEN {}", guard);
            }
            out.push_str(" THEN\n");
            write_prog(body, level + 1, out);
            out.push('\n');
            indent(out, level);
            out.push_str("END");
        }
        // Anonymous events only arise during execution; print the body.
        Event::Anon(p) => write_prog(p, level, out),
    }
}

fn write_esys(esys: &EventSystem, level: usize, out: &mut String) {
    match esys {
        EventSystem::Set(events) => {
            indent(out, level);
            out.push_str("{\n");
            for (i, ev) in events.iter().enumerate() {
                if i > 0 {
                    out.push_str(",\n");
                }
                write_event(ev, level + 1, out);
            }
            out.push('\n');
            indent(out, level);
            out.push('}');
        }
        EventSystem::Seq(ev, rest) => {
            write_event(ev, level, out);
            out.push_str(" ;\n");
            write_esys(rest, level, out);
        }
    }
}

/// Canonical text of a spec: parsing it back yields an equal `SpecFile`
/// except that parameterized events appear fully expanded.
pub fn pretty_spec(spec: &SpecFile) -> String {
    let mut out = String::new();
    out.push_str("DOMAINS\n");
    for v in spec.domains.declared_vars() {
        indent(&mut out, 1);
        let _ = write!(out, "{} : {{", v);
        let dom = spec.domains.domain_of(v).map(<[Value]>::to_vec);
        if let Ok(vals) = dom {
            for (i, val) in vals.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{}", val);
            }
        }
        out.push_str("};;\n");
    }
    if !spec.domains.units.is_empty() {
        indent(&mut out, 1);
        out.push_str("UNITS : {");
        for (i, u) in spec.domains.units.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(u);
        }
        out.push_str("};;\n");
    }
    out.push_str("END\n\n");

    let _ = write!(out, "INIT\n  {}\nEND\n\n", spec.init);

    out.push_str("SYSTEM\n");
    for (unit, esys) in &spec.system.systems {
        indent(&mut out, 1);
        let _ = write!(out, "UNIT {} :\n", unit);
        write_esys(esys, 2, &mut out);
        out.push('\n');
    }
    out.push_str("END\n");

    if !spec.rgspecs.is_empty() {
        out.push_str("\nRGSPECS\n");
        for d in &spec.rgspecs {
            indent(&mut out, 1);
            let _ = write!(out, "RG {}", d.name);
            if !d.formals.is_empty() {
                let _ = write!(out, " [{}]", d.formals.join(", "));
            }
            if let Some(u) = &d.unit {
                let _ = write!(out, " @ {}", u);
            }
            out.push_str(" :\n");
            indent(&mut out, 2);
            let _ = write!(out, "PRE {}\n", d.rg.pre);
            indent(&mut out, 2);
            let _ = write!(out, "RELY {}\n", d.rg.rely);
            indent(&mut out, 2);
            let _ = write!(out, "GUAR {}\n", d.rg.guar);
            indent(&mut out, 2);
            let _ = write!(out, "POST {}", d.rg.post);
            for m in &d.mids {
                out.push('\n');
                indent(&mut out, 2);
                let _ = write!(out, "MID {}", m);
            }
            out.push_str(";;\n");
        }
        out.push_str("END\n");
    }

    if !spec.invariants.is_empty() {
        out.push_str("\nINVARIANTS\n");
        for (name, e) in &spec.invariants {
            indent(&mut out, 1);
            let _ = write!(out, "{} : {};;\n", name, e);
        }
        out.push_str("END\n");
    }
    out
}

/// Canonical text of a standalone program.
pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    write_prog(p, 0, &mut out);
    out
}

/// Canonical text of a single event.
pub fn pretty_event(ev: &Event) -> String {
    let mut out = String::new();
    write_event(ev, 0, &mut out);
    out
}

/// Canonical text of an event system.
pub fn pretty_esys(es: &EventSystem) -> String {
    let mut out = String::new();
    write_esys(es, 0, &mut out);
    out
}
