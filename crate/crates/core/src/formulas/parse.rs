//! Text syntax.
//!
//! ```text
//! sort0 x z ; sort1 X Y ; sort2 A ;
//! formula: (forall z)(z in X -> z in Y) & X in A
//! ```
//!
//! The declaration header is optional. Without it, lowercase identifiers are
//! individuals, uppercase identifiers are sets, and an uppercase identifier
//! on the right of `in` with an uppercase left side is a collection.
//! Precedence from tightest: `!`, `&`, `|`, `->` (right associative), `<->`.
//! Line comments start with `//`.

use std::collections::HashMap;

use super::{Formula, Sort, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Sort,
    Nesting,
    Undeclared,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {kind:?} error: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Eq,
    In,
    Not,
    And,
    Or,
    Arrow,
    DArrow,
    LParen,
    RParen,
    Forall,
    Semi,
    Colon,
    SortKw(usize),
    FormulaKw,
    Eof,
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    col: usize,
}

fn err(kind: ParseErrorKind, pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError { kind, message: message.into(), line: pos.line, col: pos.col }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let mut adv = 1;
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let rest: String = chars[i..(i + 3).min(chars.len())].iter().collect();
        let tok = if rest.starts_with("<->") {
            adv = 3;
            Tok::DArrow
        } else if rest.starts_with("->") {
            adv = 2;
            Tok::Arrow
        } else {
            match c {
                '=' => Tok::Eq,
                '!' | '~' => Tok::Not,
                '&' => Tok::And,
                '|' => Tok::Or,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ';' => Tok::Semi,
                ':' => Tok::Colon,
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    let mut j = i;
                    while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                        j += 1;
                    }
                    if chars.get(j) == Some(&'#') {
                        let k = j + 1;
                        let mut e = k;
                        while e < chars.len() && chars[e].is_ascii_digit() {
                            e += 1;
                        }
                        if e == k {
                            return Err(err(ParseErrorKind::Syntax, pos, "expected digits after `#`"));
                        }
                        j = e;
                    }
                    adv = j - start;
                    let word: String = chars[start..j].iter().collect();
                    match word.as_str() {
                        "in" => Tok::In,
                        "forall" => Tok::Forall,
                        "sort0" => Tok::SortKw(0),
                        "sort1" => Tok::SortKw(1),
                        "sort2" => Tok::SortKw(2),
                        "formula" => Tok::FormulaKw,
                        _ => Tok::Ident(word),
                    }
                }
                _ => return Err(err(ParseErrorKind::Syntax, pos, format!("unexpected character `{c}`"))),
            }
        };
        out.push((tok, pos));
        i += adv;
        col += adv;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

/// Untyped syntax tree produced before sorts are known.
#[derive(Debug, Clone)]
enum Raw {
    Eq(String, Pos, String, Pos),
    In(String, Pos, String, Pos),
    /// Chained quantifier headers in order, then the body.
    Quant(Vec<(Vec<(String, Pos)>, Pos)>, Box<Raw>),
    Not(Box<Raw>),
    And(Box<Raw>, Box<Raw>),
    Or(Box<Raw>, Box<Raw>),
    Implies(Box<Raw>, Box<Raw>),
    Iff(Box<Raw>, Box<Raw>),
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<Pos, ParseError> {
        if *self.peek() == t {
            Ok(self.bump().1)
        } else {
            Err(err(ParseErrorKind::Syntax, self.pos(), format!("expected {what}, found {:?}", self.peek())))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.bump() {
            (Tok::Ident(s), p) => Ok((s, p)),
            (t, p) => Err(err(ParseErrorKind::Syntax, p, format!("expected identifier, found {t:?}"))),
        }
    }

    fn iff(&mut self) -> Result<Raw, ParseError> {
        let mut l = self.imp()?;
        while *self.peek() == Tok::DArrow {
            self.bump();
            let r = self.imp()?;
            l = Raw::Iff(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn imp(&mut self) -> Result<Raw, ParseError> {
        let l = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let r = self.imp()?;
            return Ok(Raw::Implies(Box::new(l), Box::new(r)));
        }
        Ok(l)
    }

    fn or(&mut self) -> Result<Raw, ParseError> {
        let mut l = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let r = self.and()?;
            l = Raw::Or(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn and(&mut self) -> Result<Raw, ParseError> {
        let mut l = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let r = self.unary()?;
            l = Raw::And(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn unary(&mut self) -> Result<Raw, ParseError> {
        if *self.peek() == Tok::Not {
            self.bump();
            return Ok(Raw::Not(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Raw, ParseError> {
        if *self.peek() == Tok::LParen {
            if *self.peek_at(1) == Tok::Forall {
                return self.quant();
            }
            self.bump();
            let f = self.iff()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(f);
        }
        let (a, pa) = self.ident()?;
        match self.bump() {
            (Tok::Eq, _) => {
                let (b, pb) = self.ident()?;
                Ok(Raw::Eq(a, pa, b, pb))
            }
            (Tok::In, _) => {
                let (b, pb) = self.ident()?;
                Ok(Raw::In(a, pa, b, pb))
            }
            (t, p) => Err(err(ParseErrorKind::Syntax, p, format!("expected `=` or `in`, found {t:?}"))),
        }
    }

    fn quant(&mut self) -> Result<Raw, ParseError> {
        let mut headers = Vec::new();
        while *self.peek() == Tok::LParen && *self.peek_at(1) == Tok::Forall {
            let p = self.bump().1;
            self.bump();
            let mut vars = Vec::new();
            while let Tok::Ident(_) = self.peek() {
                vars.push(self.ident()?);
            }
            if vars.is_empty() {
                return Err(err(ParseErrorKind::Syntax, self.pos(), "empty quantifier prefix"));
            }
            self.expect(Tok::RParen, "`)` after quantified variables")?;
            headers.push((vars, p));
        }
        self.expect(Tok::LParen, "`(` opening the quantifier body")?;
        let body = self.iff()?;
        self.expect(Tok::RParen, "`)` closing the quantifier body")?;
        Ok(Raw::Quant(headers, Box::new(body)))
    }
}

fn collect_idents(r: &Raw, out: &mut Vec<(String, Pos)>) {
    match r {
        Raw::Eq(a, pa, b, pb) | Raw::In(a, pa, b, pb) => {
            out.push((a.clone(), *pa));
            out.push((b.clone(), *pb));
        }
        Raw::Quant(hs, b) => {
            for (vs, _) in hs {
                out.extend(vs.iter().cloned());
            }
            collect_idents(b, out);
        }
        Raw::Not(a) => collect_idents(a, out),
        Raw::And(a, b) | Raw::Or(a, b) | Raw::Implies(a, b) | Raw::Iff(a, b) => {
            collect_idents(a, out);
            collect_idents(b, out);
        }
    }
}

fn collection_positions(r: &Raw, out: &mut Vec<String>) {
    match r {
        Raw::In(a, _, b, _) if is_upper(a) && is_upper(b) => out.push(b.clone()),
        Raw::Eq(..) | Raw::In(..) => {}
        Raw::Quant(_, b) | Raw::Not(b) => collection_positions(b, out),
        Raw::And(a, b) | Raw::Or(a, b) | Raw::Implies(a, b) | Raw::Iff(a, b) => {
            collection_positions(a, out);
            collection_positions(b, out);
        }
    }
}

fn is_upper(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

struct Typer {
    sorts: HashMap<String, Sort>,
}

impl Typer {
    fn var(&self, name: &str, pos: Pos) -> Result<Var, ParseError> {
        match self.sorts.get(name) {
            Some(&s) => Ok(Var::new(name, s)),
            None => Err(err(ParseErrorKind::Undeclared, pos, format!("undeclared identifier `{name}`"))),
        }
    }

    // depth: 0 top, 1 inside set quantifier, 2 inside individual quantifier
    fn build(&self, r: &Raw, depth: u8) -> Result<Formula, ParseError> {
        use Sort::*;
        match r {
            Raw::Eq(a, pa, b, pb) => {
                let (x, y) = (self.var(a, *pa)?, self.var(b, *pb)?);
                match (x.sort(), y.sort()) {
                    (Individual, Individual) => Ok(Formula::EqInd(x, y)),
                    (Set, Set) if depth < 2 => Ok(Formula::EqSet(x, y)),
                    (Set, Set) => Err(err(
                        ParseErrorKind::Nesting,
                        *pa,
                        "set equality inside an individual quantifier",
                    )),
                    _ => Err(err(ParseErrorKind::Sort, *pa, format!("cannot compare `{a}` and `{b}`"))),
                }
            }
            Raw::In(a, pa, b, pb) => {
                let (x, y) = (self.var(a, *pa)?, self.var(b, *pb)?);
                match (x.sort(), y.sort()) {
                    (Individual, Set) => Ok(Formula::InSet(x, y)),
                    (Set, Collection) if depth < 2 => Ok(Formula::InColl(x, y)),
                    (Set, Collection) => Err(err(
                        ParseErrorKind::Nesting,
                        *pa,
                        "collection membership inside an individual quantifier",
                    )),
                    _ => Err(err(ParseErrorKind::Sort, *pa, format!("`{a} in {b}` is ill-sorted"))),
                }
            }
            Raw::Not(a) => Ok(Formula::not(self.build(a, depth)?)),
            Raw::And(a, b) => Ok(Formula::and(self.build(a, depth)?, self.build(b, depth)?)),
            Raw::Or(a, b) => Ok(Formula::or(self.build(a, depth)?, self.build(b, depth)?)),
            Raw::Implies(a, b) => Ok(Formula::implies(self.build(a, depth)?, self.build(b, depth)?)),
            Raw::Iff(a, b) => Ok(Formula::iff(self.build(a, depth)?, self.build(b, depth)?)),
            Raw::Quant(headers, body) => {
                // Merge consecutive headers of the same sort.
                let mut groups: Vec<(Sort, Vec<Var>, Pos)> = Vec::new();
                for (vs, p) in headers {
                    let vars: Vec<Var> =
                        vs.iter().map(|(n, q)| self.var(n, *q)).collect::<Result<_, _>>()?;
                    let s = vars[0].sort();
                    if vars.iter().any(|v| v.sort() != s) {
                        return Err(err(ParseErrorKind::Sort, *p, "quantifier mixes variable sorts"));
                    }
                    if s == Collection {
                        return Err(err(ParseErrorKind::Sort, *p, "cannot quantify over collections"));
                    }
                    match groups.last_mut() {
                        Some((ls, lv, _)) if *ls == s => lv.extend(vars),
                        _ => groups.push((s, vars, *p)),
                    }
                }
                let mut d = depth;
                for (s, _, p) in &groups {
                    d = match (s, d) {
                        (Set, 0) => 1,
                        (Individual, 0 | 1) => 2,
                        (Set, _) => {
                            return Err(err(ParseErrorKind::Nesting, *p, "nested set quantifier"))
                        }
                        _ => {
                            return Err(err(ParseErrorKind::Nesting, *p, "nested individual quantifier"))
                        }
                    };
                }
                let mut f = self.build(body, d)?;
                for (s, vars, _) in groups.into_iter().rev() {
                    f = match s {
                        Set => Formula::forall_set(vars, f),
                        _ => Formula::forall_ind(vars, f),
                    };
                }
                Ok(f)
            }
        }
    }
}

/// Parses a formula, with or without a declaration header.
pub fn parse(src: &str) -> Result<Formula, ParseError> {
    parse_document(src)
}

/// Parses a document: optional `sortN` declarations, optional `formula:`,
/// then a formula.
pub fn parse_document(src: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(src)?, i: 0 };
    let mut declared: Option<HashMap<String, Sort>> = None;
    while let Tok::SortKw(k) = *p.peek() {
        let sort = Sort::from_index(k).expect("sort keyword");
        p.bump();
        let decl = declared.get_or_insert_with(HashMap::new);
        while let Tok::Ident(_) = p.peek() {
            let (name, pos) = p.ident()?;
            if let Some(prev) = decl.insert(name.clone(), sort) {
                if prev != sort {
                    return Err(err(ParseErrorKind::Sort, pos, format!("`{name}` declared with two sorts")));
                }
            }
        }
        p.expect(Tok::Semi, "`;` after declarations")?;
    }
    if *p.peek() == Tok::FormulaKw {
        p.bump();
        p.expect(Tok::Colon, "`:` after `formula`")?;
    }
    let raw = p.iff()?;
    if *p.peek() != Tok::Eof {
        return Err(err(ParseErrorKind::Syntax, p.pos(), format!("trailing input {:?}", p.peek())));
    }
    let sorts = match declared {
        Some(d) => d,
        None => {
            let mut ids = Vec::new();
            collect_idents(&raw, &mut ids);
            let mut colls = Vec::new();
            collection_positions(&raw, &mut colls);
            ids.into_iter()
                .map(|(n, _)| {
                    let s = if !is_upper(&n) {
                        Sort::Individual
                    } else if colls.contains(&n) {
                        Sort::Collection
                    } else {
                        Sort::Set
                    };
                    (n, s)
                })
                .collect()
        }
    };
    Typer { sorts }.build(&raw, 0)
}
