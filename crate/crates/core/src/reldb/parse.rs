//! Reader for the `.rdb` text format.
//!
//! One declaration per line; `#` starts a comment. Declarations:
//!
//! ```text
//! family NAME stem S min N [max N] [susp N] [order O] [order_from N] [alias A] [identity] [opaque]
//! group pi(A -> B) = Z/n<composite> + Z<composite> + ...      (or `= 0`)
//! subgroup NAME of pi(A -> B) = <expr, ...> [kind=suspension]
//! param NAME : int in {v, ...}
//! param NAME : pi(A -> B) in {expr, ...}
//! param NAME : pi(A -> B) in SUBGROUP
//! rel COMPOSITE = expr
//! case PLANE k=K twist=Z|Z/2|0 image=full|<expr, ...> f=expr
//! ```
//!
//! Any declaration may end with a citation `@ "text"`.
//!
//! Expressions: `a.b` composes (apply `b` first), `n*x` scales, `+`/`-` add,
//! `wh(x, y)` is the Whitehead product, `S^k(x)` suspends, `x(n)` is the member
//! of family `x` on `S^n`, and a bare identifier is a parameter.
//!
//! Parsing is total: every line is examined and all problems are reported.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::abelian::{GroupPresentation, Subgroup};
use crate::expr::{compose, suspend, whitehead, Dims, Expr, Family, Node};
use crate::normalize::normalize;

use super::{
    Assignment, CaseDecl, Database, GroupDecl, Location, ParamDecl, ParamDomain, Plane,
    RelationDecl, SubgroupDecl, TwistGroup, TwistImage,
};

/// A located parse problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub file: Arc<str>,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.file, self.line, self.col, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Sym(char),
    Arrow,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::Arrow => write!(f, "`->`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

struct Line {
    file: Arc<str>,
    number: usize,
    tokens: Vec<Token>,
    end_col: usize,
}

fn lex(file: &Arc<str>, number: usize, text: &str) -> Result<Line, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let err = |col: usize, message: String| Diagnostic {
        file: file.clone(),
        line: number,
        col,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            tokens.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let n = s
                .parse::<i64>()
                .map_err(|_| err(col, format!("integer `{s}` is too large")))?;
            tokens.push(Token { tok: Tok::Int(n), col });
            continue;
        }
        if c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                i += 1;
            }
            if i >= chars.len() {
                return Err(err(col, "unterminated string".into()));
            }
            tokens.push(Token {
                tok: Tok::Str(chars[start..i].iter().collect()),
                col,
            });
            i += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            tokens.push(Token { tok: Tok::Arrow, col });
            i += 2;
            continue;
        }
        if "()<>{},.+-*=^:/@".contains(c) {
            tokens.push(Token { tok: Tok::Sym(c), col });
            i += 1;
            continue;
        }
        return Err(err(col, format!("unexpected character `{c}`")));
    }
    Ok(Line {
        file: file.clone(),
        number,
        tokens,
        end_col: chars.len() + 1,
    })
}

type PResult<T> = Result<T, Diagnostic>;

struct Cursor<'l> {
    line: &'l Line,
    pos: usize,
}

impl<'l> Cursor<'l> {
    fn new(line: &'l Line) -> Self {
        Cursor { line, pos: 0 }
    }

    fn peek(&self) -> Option<&'l Tok> {
        self.peek_at(0)
    }

    fn peek_at(&self, n: usize) -> Option<&'l Tok> {
        self.line.tokens.get(self.pos + n).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.line
            .tokens
            .get(self.pos)
            .map(|t| t.col)
            .unwrap_or(self.line.end_col)
    }

    fn location(&self) -> Location {
        Location {
            file: self.line.file.clone(),
            line: self.line.number,
            col: self.col(),
        }
    }

    fn error_at(&self, col: usize, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            file: self.line.file.clone(),
            line: self.line.number,
            col,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> Diagnostic {
        self.error_at(self.col(), message)
    }

    fn bump(&mut self) -> Option<&'l Tok> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn describe_next(&self) -> String {
        match self.peek() {
            Some(t) => t.to_string(),
            None => "end of line".to_string(),
        }
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Sym(c))
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.is_sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> PResult<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`, found {}", self.describe_next())))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<&'l str> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.describe_next()))),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(format!("expected `{kw}`, found {}", self.describe_next()))),
        }
    }

    fn expect_int(&mut self) -> PResult<i64> {
        let negative = self.eat_sym('-');
        match self.peek() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(if negative { -n } else { *n })
            }
            _ => Err(self.error(format!("expected an integer, found {}", self.describe_next()))),
        }
    }

    fn expect_nat(&mut self) -> PResult<u32> {
        let col = self.col();
        let n = self.expect_int()?;
        u32::try_from(n).map_err(|_| self.error_at(col, format!("expected a non-negative integer, found {n}")))
    }

    fn ident_is(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    /// `pi(A -> B)`.
    fn dims(&mut self) -> PResult<Dims> {
        self.expect_keyword("pi")?;
        self.expect_sym('(')?;
        let from = self.expect_nat()?;
        if self.peek() != Some(&Tok::Arrow) {
            return Err(self.error(format!("expected `->`, found {}", self.describe_next())));
        }
        self.pos += 1;
        let to = self.expect_nat()?;
        self.expect_sym(')')?;
        Ok(Dims::new(from, to))
    }

    /// An optional trailing `@ "citation"`, then end of line.
    fn finish(&mut self) -> PResult<Option<String>> {
        let mut citation = None;
        if self.eat_sym('@') {
            match self.bump() {
                Some(Tok::Str(s)) => citation = Some(s.clone()),
                _ => return Err(self.error("expected a quoted citation after `@`")),
            }
        }
        if self.peek().is_some() {
            return Err(self.error(format!("unexpected {} at end of declaration", self.describe_next())));
        }
        Ok(citation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ParamKind {
    Int,
    Element(Dims),
}

/// Names known while reading expressions.
#[derive(Default)]
struct Scope {
    families: HashMap<String, (Arc<Family>, bool)>,
    params: HashMap<String, ParamKind>,
}

enum Piece {
    Zero,
    Value(Expr),
}

struct ExprReader<'s, 'c, 'l> {
    scope: &'s Scope,
    cur: &'c mut Cursor<'l>,
}

impl ExprReader<'_, '_, '_> {
    fn sum(&mut self, expected: Option<Dims>) -> PResult<Expr> {
        let start = self.cur.col();
        let mut pieces: Vec<(i64, Piece)> = Vec::new();
        let mut sign = if self.cur.eat_sym('-') {
            -1
        } else {
            self.cur.eat_sym('+');
            1
        };
        loop {
            let p = self.term()?;
            pieces.push((sign, p));
            if self.cur.eat_sym('+') {
                sign = 1;
            } else if self.cur.eat_sym('-') {
                sign = -1;
            } else {
                break;
            }
        }
        let dims = pieces
            .iter()
            .find_map(|(_, p)| match p {
                Piece::Value(e) => Some(e.dims),
                Piece::Zero => None,
            })
            .or(expected)
            .ok_or_else(|| self.cur.error_at(start, "cannot infer the hom-group of `0` here"))?;
        let mut acc = Expr::zero(dims);
        for (s, p) in pieces {
            if let Piece::Value(e) = p {
                if e.dims != dims {
                    return Err(self.cur.error_at(
                        start,
                        format!("dimension mismatch: terms in {dims} and {}", e.dims),
                    ));
                }
                acc = acc.add(&e.scale(s)).expect("dims checked");
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> PResult<Piece> {
        let mut coeff = 1i64;
        let mut scalars: Vec<Arc<str>> = Vec::new();
        loop {
            match (self.cur.peek(), self.cur.peek_at(1)) {
                (Some(Tok::Int(n)), Some(Tok::Sym('*'))) => {
                    coeff *= n;
                    self.cur.pos += 2;
                }
                (Some(Tok::Int(0)), _) if scalars.is_empty() && coeff == 1 => {
                    self.cur.pos += 1;
                    return Ok(Piece::Zero);
                }
                (Some(Tok::Int(n)), _) => {
                    return Err(self.cur.error(format!("bare integer {n}; write `{n}*expr`")));
                }
                (Some(Tok::Ident(s)), Some(Tok::Sym('*')))
                    if self.scope.params.get(s.as_str()) == Some(&ParamKind::Int) =>
                {
                    scalars.push(Arc::from(s.as_str()));
                    self.cur.pos += 2;
                }
                _ => break,
            }
        }
        let mut e = self.chain()?.scale(coeff);
        if !scalars.is_empty() {
            for t in &mut e.terms {
                t.scalars.extend(scalars.iter().cloned());
                t.scalars.sort();
            }
        }
        Ok(Piece::Value(e))
    }

    fn chain(&mut self) -> PResult<Expr> {
        let mut acc = self.factor()?;
        while self.cur.eat_sym('.') {
            let col = self.cur.col();
            let next = self.factor()?;
            acc = compose(&acc, &next).map_err(|e| self.cur.error_at(col, e.to_string()))?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> PResult<Expr> {
        let col = self.cur.col();
        if self.cur.eat_sym('(') {
            let e = self.sum(None)?;
            self.cur.expect_sym(')')?;
            return Ok(e);
        }
        let name = self.cur.expect_ident("an expression")?;
        if name == "wh" && self.cur.is_sym('(') {
            self.cur.pos += 1;
            let a = self.sum(None)?;
            self.cur.expect_sym(',')?;
            let b = self.sum(None)?;
            self.cur.expect_sym(')')?;
            return whitehead(&a, &b).map_err(|e| self.cur.error_at(col, e.to_string()));
        }
        if name == "S" && self.cur.is_sym('^') {
            self.cur.pos += 1;
            let k = self.cur.expect_nat()?;
            self.cur.expect_sym('(')?;
            let e = self.sum(None)?;
            self.cur.expect_sym(')')?;
            return Ok(suspend(&e, k));
        }
        if self.cur.is_sym('(') {
            self.cur.pos += 1;
            let index = self.cur.expect_nat()?;
            self.cur.expect_sym(')')?;
            let (fam, via_alias) = self
                .scope
                .families
                .get(name)
                .ok_or_else(|| self.cur.error_at(col, format!("unknown family `{name}`")))?;
            if *via_alias && !fam.is_suspension_at(index) {
                return Err(self.cur.error_at(
                    col,
                    format!("`{name}` names suspensions only; use `{}({index})`", fam.name),
                ));
            }
            let atom = fam
                .atom(index)
                .map_err(|e| self.cur.error_at(col, e.to_string()))?;
            return Ok(Expr::atom(atom));
        }
        match self.scope.params.get(name) {
            Some(ParamKind::Element(d)) => Ok(Expr::node(Node::Param(Arc::from(name), *d))),
            Some(ParamKind::Int) => Err(self.cur.error_at(
                col,
                format!("integer parameter `{name}` must multiply an expression, as in `{name}*x`"),
            )),
            None => Err(self.cur.error_at(col, format!("unknown parameter `{name}`"))),
        }
    }
}

fn read_expr(scope: &Scope, cur: &mut Cursor<'_>, expected: Option<Dims>) -> PResult<Expr> {
    ExprReader { scope, cur }.sum(expected)
}

/// A composite with coefficient one and no parameters.
fn read_composite(scope: &Scope, cur: &mut Cursor<'_>, what: &str) -> PResult<Expr> {
    let col = cur.col();
    let e = read_expr(scope, cur, None)?;
    if e.single_chain().is_none() || e.mentions_parameters() {
        return Err(cur.error_at(col, format!("{what} must be a single composite, found `{e}`")));
    }
    Ok(e)
}

fn read_family(cur: &mut Cursor<'_>) -> PResult<(Family, Option<String>)> {
    let name = cur.expect_ident("a family name")?.to_string();
    let mut fam = Family {
        name,
        stem: 0,
        min: 1,
        max: None,
        susp: None,
        order: None,
        order_from: None,
        alias: None,
        identity: false,
        opaque: false,
    };
    let mut seen = BTreeSet::new();
    let mut have_stem = false;
    let mut have_min = false;
    while let Some(Tok::Ident(key)) = cur.peek() {
        let col = cur.col();
        cur.pos += 1;
        if !seen.insert(key.clone()) {
            return Err(cur.error_at(col, format!("`{key}` given twice")));
        }
        match key.as_str() {
            "stem" => {
                fam.stem = cur.expect_nat()?;
                have_stem = true;
            }
            "min" => {
                fam.min = cur.expect_nat()?;
                have_min = true;
            }
            "max" => fam.max = Some(cur.expect_nat()?),
            "susp" => fam.susp = Some(cur.expect_nat()?),
            "order" => {
                let c = cur.col();
                let o = cur.expect_nat()?;
                if o == 1 {
                    return Err(cur.error_at(c, "a family order must be at least 2"));
                }
                fam.order = Some(u64::from(o));
            }
            "order_from" => fam.order_from = Some(cur.expect_nat()?),
            "alias" => fam.alias = Some(cur.expect_ident("an alias")?.to_string()),
            "identity" => fam.identity = true,
            "opaque" => fam.opaque = true,
            other => return Err(cur.error_at(col, format!("unknown family attribute `{other}`"))),
        }
    }
    if !have_stem || !have_min {
        return Err(cur.error("a family needs both `stem` and `min`"));
    }
    if fam.alias.is_some() && fam.susp.is_none() {
        return Err(cur.error("an alias needs a `susp` index"));
    }
    if fam.max.is_some_and(|m| m < fam.min) {
        return Err(cur.error("`max` is below `min`"));
    }
    let citation = cur.finish()?;
    Ok((fam, citation))
}

/// The header of a parameter: name and kind.
fn read_param_header(cur: &mut Cursor<'_>) -> PResult<(String, ParamKind)> {
    let name = cur.expect_ident("a parameter name")?.to_string();
    cur.expect_sym(':')?;
    let kind = if cur.ident_is("int") {
        cur.pos += 1;
        ParamKind::Int
    } else {
        ParamKind::Element(cur.dims()?)
    };
    cur.expect_keyword("in")?;
    Ok((name, kind))
}

enum PendingDomain {
    Resolved(ParamDomain),
    Subgroup { dims: Dims, name: String, col: usize },
}

fn read_param(scope: &Scope, cur: &mut Cursor<'_>) -> PResult<(Arc<str>, PendingDomain, Option<String>)> {
    let (name, kind) = read_param_header(cur)?;
    let domain = match kind {
        ParamKind::Int => {
            cur.expect_sym('{')?;
            let mut values = Vec::new();
            loop {
                values.push(cur.expect_int()?);
                if !cur.eat_sym(',') {
                    break;
                }
            }
            cur.expect_sym('}')?;
            PendingDomain::Resolved(ParamDomain::Int(values))
        }
        ParamKind::Element(dims) => {
            if cur.eat_sym('{') {
                let mut values = Vec::new();
                loop {
                    let col = cur.col();
                    let e = read_expr(scope, cur, Some(dims))?;
                    if e.dims != dims {
                        return Err(cur.error_at(col, format!("value lies in {}, expected {dims}", e.dims)));
                    }
                    if e.mentions_parameters() {
                        return Err(cur.error_at(col, "parameter values cannot mention parameters"));
                    }
                    values.push(e);
                    if !cur.eat_sym(',') {
                        break;
                    }
                }
                cur.expect_sym('}')?;
                PendingDomain::Resolved(ParamDomain::Elements { dims, values })
            } else {
                let col = cur.col();
                let sub = cur.expect_ident("a value list `{...}` or a subgroup name")?;
                PendingDomain::Subgroup {
                    dims,
                    name: sub.to_string(),
                    col,
                }
            }
        }
    };
    let citation = cur.finish()?;
    Ok((Arc::from(name.as_str()), domain, citation))
}

fn read_group(scope: &Scope, cur: &mut Cursor<'_>) -> PResult<GroupDecl> {
    let location = cur.location();
    let dims = cur.dims()?;
    cur.expect_sym('=')?;
    let mut factors = Vec::new();
    let mut basis = Vec::new();
    if cur.peek() == Some(&Tok::Int(0)) {
        cur.pos += 1;
    } else {
        loop {
            let col = cur.col();
            let z = cur.expect_ident("`Z` or `Z/n`")?;
            if z != "Z" {
                return Err(cur.error_at(col, format!("expected `Z` or `Z/n`, found `{z}`")));
            }
            let order = if cur.eat_sym('/') {
                let c = cur.col();
                let n = cur.expect_nat()?;
                if n < 2 {
                    return Err(cur.error_at(c, "a finite factor needs order at least 2"));
                }
                u64::from(n)
            } else {
                0
            };
            cur.expect_sym('<')?;
            let col = cur.col();
            let b = read_composite(scope, cur, "a basis element")?;
            if b.dims != dims {
                return Err(cur.error_at(
                    col,
                    format!("dimension mismatch: basis element `{b}` lies in {}, group is {dims}", b.dims),
                ));
            }
            cur.expect_sym('>')?;
            factors.push((b.to_string(), order));
            basis.push(b);
            if !cur.eat_sym('+') {
                break;
            }
        }
    }
    let citation = cur.finish()?;
    let presentation = GroupPresentation::new(factors).map_err(|e| cur.error_at(location.col, e.to_string()))?;
    Ok(GroupDecl {
        dims,
        presentation: Arc::new(presentation),
        basis,
        citation,
        location,
    })
}

fn read_subgroup(scope: &Scope, cur: &mut Cursor<'_>) -> PResult<SubgroupDecl> {
    let location = cur.location();
    let name = cur.expect_ident("a subgroup name")?.to_string();
    cur.expect_keyword("of")?;
    let dims = cur.dims()?;
    cur.expect_sym('=')?;
    cur.expect_sym('<')?;
    let mut generators = Vec::new();
    loop {
        let col = cur.col();
        let g = read_expr(scope, cur, Some(dims))?;
        if g.dims != dims {
            return Err(cur.error_at(col, format!("generator lies in {}, expected {dims}", g.dims)));
        }
        if g.mentions_parameters() {
            return Err(cur.error_at(col, "subgroup generators cannot mention parameters"));
        }
        generators.push(g);
        if !cur.eat_sym(',') {
            break;
        }
    }
    cur.expect_sym('>')?;
    let mut suspension = false;
    if cur.ident_is("kind") {
        cur.pos += 1;
        cur.expect_sym('=')?;
        cur.expect_keyword("suspension")?;
        suspension = true;
    }
    let citation = cur.finish()?;
    Ok(SubgroupDecl {
        name,
        dims,
        generators,
        suspension,
        citation,
        location,
    })
}

fn read_relation(scope: &Scope, cur: &mut Cursor<'_>) -> PResult<RelationDecl> {
    let location = cur.location();
    let lhs = read_composite(scope, cur, "the left side of a relation")?;
    cur.expect_sym('=')?;
    let col = cur.col();
    let rhs = read_expr(scope, cur, Some(lhs.dims))?;
    if rhs.dims != lhs.dims {
        return Err(cur.error_at(
            col,
            format!(
                "dimension mismatch: left side is in {}, right side is in {}",
                lhs.dims, rhs.dims
            ),
        ));
    }
    let citation = cur.finish()?;
    let mut params: Vec<Arc<str>> = Vec::new();
    for p in rhs.parameters() {
        if !params.contains(&p) {
            params.push(p);
        }
    }
    Ok(RelationDecl {
        lhs,
        rhs,
        citation,
        params,
        location,
    })
}

fn read_case(scope: &Scope, cur: &mut Cursor<'_>) -> PResult<CaseDecl> {
    let location = cur.location();
    let col = cur.col();
    let plane: Plane = cur
        .expect_ident("a plane (CP2, HP2, OP2)")?
        .parse()
        .map_err(|e: String| cur.error_at(col, e))?;
    let m = plane.m();
    let mut k = None;
    let mut twist = None;
    let mut image = None;
    let mut f = None;
    while let Some(Tok::Ident(key)) = cur.peek() {
        let kcol = cur.col();
        cur.pos += 1;
        cur.expect_sym('=')?;
        match key.as_str() {
            "k" => {
                let c = cur.col();
                let v = cur.expect_nat()?;
                if v < 2 || v > 2 * m - 2 {
                    return Err(cur.error_at(c, format!("k={v} is outside [2, {}] for {plane}", 2 * m - 2)));
                }
                k = Some(v);
            }
            "twist" => {
                let c = cur.col();
                twist = Some(match cur.peek() {
                    Some(Tok::Int(0)) => {
                        cur.pos += 1;
                        TwistGroup::Trivial
                    }
                    Some(Tok::Ident(z)) if z == "Z" => {
                        cur.pos += 1;
                        if cur.eat_sym('/') {
                            match cur.expect_nat()? {
                                2 => TwistGroup::Z2,
                                n => return Err(cur.error_at(c, format!("twist group Z/{n} is not Z, Z/2 or 0"))),
                            }
                        } else {
                            TwistGroup::Z
                        }
                    }
                    _ => return Err(cur.error_at(c, "expected a twist group `Z`, `Z/2` or `0`")),
                });
            }
            "image" => {
                if cur.ident_is("full") {
                    cur.pos += 1;
                    image = Some(TwistImage::Full);
                } else {
                    let dims = Dims::new(2 * m + k.unwrap_or(2) - 2, 2 * m - 1);
                    if k.is_none() {
                        return Err(cur.error("`k=` must precede an explicit `image=`"));
                    }
                    cur.expect_sym('<')?;
                    let mut gens = Vec::new();
                    loop {
                        let c = cur.col();
                        let g = read_expr(scope, cur, Some(dims))?;
                        if g.dims != dims {
                            return Err(cur.error_at(c, format!("twist image generator lies in {}, expected {dims}", g.dims)));
                        }
                        gens.push(g);
                        if !cur.eat_sym(',') {
                            break;
                        }
                    }
                    cur.expect_sym('>')?;
                    image = Some(TwistImage::Generated(gens));
                }
            }
            "f" => {
                let c = cur.col();
                let e = read_composite(scope, cur, "the Hopf map")?;
                if e.dims != Dims::new(2 * m - 1, m) {
                    return Err(cur.error_at(c, format!("Hopf map for {plane} must lie in {}, found {}", Dims::new(2 * m - 1, m), e.dims)));
                }
                f = Some(e);
            }
            other => return Err(cur.error_at(kcol, format!("unknown case attribute `{other}`"))),
        }
    }
    let citation = cur.finish()?;
    let missing = |what: &str| cur.error(format!("case is missing `{what}=`"));
    Ok(CaseDecl {
        plane,
        k: k.ok_or_else(|| missing("k"))?,
        twist_group: twist.ok_or_else(|| missing("twist"))?,
        twist_image: image.ok_or_else(|| missing("image"))?,
        f: f.ok_or_else(|| missing("f"))?,
        citation,
        location,
    })
}

/// Parses a single text (reported as `<input>`).
pub fn parse(text: &str) -> Result<Database, Vec<Diagnostic>> {
    parse_sources(&[("<input>", text)])
}

/// Parses several named texts into one database.
pub fn parse_sources(sources: &[(&str, &str)]) -> Result<Database, Vec<Diagnostic>> {
    let mut errors = Vec::new();
    let mut lines = Vec::new();
    for (name, text) in sources {
        let file: Arc<str> = Arc::from(*name);
        for (i, raw) in text.lines().enumerate() {
            match lex(&file, i + 1, raw) {
                Ok(l) if !l.tokens.is_empty() => lines.push(l),
                Ok(_) => {}
                Err(d) => errors.push(d),
            }
        }
    }
    let keyword = |l: &Line| match l.tokens.first().map(|t| &t.tok) {
        Some(Tok::Ident(s)) => s.clone(),
        _ => String::new(),
    };

    let mut db = Database::default();
    let mut scope = Scope::default();

    // Families first: every expression depends on them.
    for l in lines.iter().filter(|l| keyword(l) == "family") {
        let mut cur = Cursor::new(l);
        cur.pos = 1;
        let col = cur.col();
        match read_family(&mut cur) {
            Ok((fam, citation)) => {
                let names: Vec<String> = std::iter::once(fam.name.clone()).chain(fam.alias.clone()).collect();
                if let Some(dup) = names.iter().find(|n| scope.families.contains_key(*n)) {
                    errors.push(cur.error_at(col, format!("duplicate family `{dup}`")));
                    continue;
                }
                let fam = Arc::new(fam);
                scope.families.insert(fam.name.clone(), (fam.clone(), false));
                if let Some(a) = &fam.alias {
                    scope.families.insert(a.clone(), (fam.clone(), true));
                }
                db.set_family_citation(&fam.name, citation);
                db.families.push(fam);
            }
            Err(d) => errors.push(d),
        }
    }

    // Parameter names and kinds, so expressions anywhere may use them.
    for l in lines.iter().filter(|l| keyword(l) == "param") {
        let mut cur = Cursor::new(l);
        cur.pos = 1;
        let col = cur.col();
        if let Ok((name, kind)) = read_param_header(&mut cur) {
            if scope.params.contains_key(&name) {
                errors.push(cur.error_at(col, format!("duplicate parameter `{name}`")));
            } else {
                scope.params.insert(name, kind);
            }
        }
    }

    let mut pending_params = Vec::new();
    for l in &lines {
        let mut cur = Cursor::new(l);
        let kw = keyword(l);
        cur.pos = 1;
        let result: PResult<()> = match kw.as_str() {
            "family" => Ok(()),
            "group" => read_group(&scope, &mut cur).and_then(|g| {
                if db.groups.iter().any(|h| h.dims == g.dims) {
                    return Err(cur.error_at(g.location.col, format!("duplicate group {}", g.dims)));
                }
                db.groups.push(g);
                Ok(())
            }),
            "subgroup" => read_subgroup(&scope, &mut cur).and_then(|s| {
                if db.subgroups.iter().any(|t| t.name == s.name) {
                    return Err(cur.error_at(s.location.col, format!("duplicate subgroup `{}`", s.name)));
                }
                db.subgroups.push(s);
                Ok(())
            }),
            "param" => {
                let location = cur.location();
                read_param(&scope, &mut cur).map(|(name, domain, citation)| {
                    if !db.params.iter().any(|p| p.name == name) && pending_params.iter().all(|(n, ..): &(Arc<str>, _, _, _)| *n != name) {
                        pending_params.push((name, domain, citation, location));
                    }
                })
            }
            "rel" => read_relation(&scope, &mut cur).map(|r| db.relations.push(r)),
            "case" => read_case(&scope, &mut cur).and_then(|c| {
                if db.cases.iter().any(|d| d.plane == c.plane && d.k == c.k) {
                    return Err(cur.error_at(c.location.col, format!("duplicate case {}", c.id())));
                }
                db.cases.push(c);
                Ok(())
            }),
            other => Err(cur.error_at(1, format!("unknown declaration `{other}`"))),
        };
        if let Err(d) = result {
            errors.push(d);
        }
    }
    db.rebuild_indexes();

    // Subgroup-valued parameter domains need the relations to enumerate spans.
    for (name, domain, citation, location) in pending_params {
        let domain = match domain {
            PendingDomain::Resolved(d) => d,
            PendingDomain::Subgroup { dims, name: sub, col } => {
                match subgroup_elements(&db, &sub, dims) {
                    Ok(values) => ParamDomain::Subgroup {
                        dims,
                        subgroup: sub,
                        values,
                    },
                    Err(message) => {
                        errors.push(Diagnostic {
                            file: location.file.clone(),
                            line: location.line,
                            col,
                            message,
                        });
                        continue;
                    }
                }
            }
        };
        if domain.is_empty() {
            errors.push(Diagnostic {
                file: location.file.clone(),
                line: location.line,
                col: location.col,
                message: format!("parameter `{name}` has an empty domain"),
            });
            continue;
        }
        db.params.push(ParamDecl {
            name,
            domain,
            citation,
            location,
        });
    }

    if errors.is_empty() {
        Ok(db)
    } else {
        errors.sort_by(|a, b| (a.file.clone(), a.line, a.col).cmp(&(b.file.clone(), b.line, b.col)));
        Err(errors)
    }
}

/// Every element of a declared subgroup, written in the ambient basis.
fn subgroup_elements(db: &Database, name: &str, dims: Dims) -> Result<Vec<Expr>, String> {
    let sub = db
        .subgroup(name)
        .ok_or_else(|| format!("unknown subgroup `{name}`"))?;
    if sub.dims != dims {
        return Err(format!("subgroup `{name}` lies in {}, expected {dims}", sub.dims));
    }
    let group = db
        .group(dims)
        .ok_or_else(|| format!("no group is declared for {dims}"))?;
    let asg = Assignment::empty();
    let gens = sub
        .generators
        .iter()
        .map(|g| normalize(g, db, &asg).map_err(|e| format!("generator `{g}` of `{name}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let span = Subgroup::new(group.presentation.clone(), gens)
        .map_err(|e| e.to_string())?
        .span();
    Ok(span
        .iter()
        .map(|el| {
            let mut e = Expr::zero(dims);
            for (c, b) in el.coords().iter().zip(&group.basis) {
                e = e.add(&b.scale(*c)).expect("same group");
            }
            e
        })
        .collect())
}

impl Scope {
    fn of(db: &Database) -> Scope {
        let mut scope = Scope::default();
        for fam in &db.families {
            scope.families.insert(fam.name.clone(), (fam.clone(), false));
            if let Some(a) = &fam.alias {
                scope.families.insert(a.clone(), (fam.clone(), true));
            }
        }
        for p in &db.params {
            let kind = match p.domain.element_dims() {
                Some(d) => ParamKind::Element(d),
                None => ParamKind::Int,
            };
            scope.params.insert(p.name.to_string(), kind);
        }
        scope
    }
}

/// Parses one expression against the families and parameters of `db`.
///
/// `expected` supplies the hom-group when the text is just `0`.
pub fn parse_expr(db: &Database, text: &str, expected: Option<Dims>) -> Result<Expr, Diagnostic> {
    let file: Arc<str> = Arc::from("<expr>");
    let line = lex(&file, 1, text)?;
    let scope = Scope::of(db);
    let mut cur = Cursor::new(&line);
    if cur.peek().is_none() {
        return Err(cur.error("empty expression"));
    }
    let e = read_expr(&scope, &mut cur, expected)?;
    if cur.peek().is_some() {
        return Err(cur.error(format!("unexpected {} after expression", cur.describe_next())));
    }
    Ok(e)
}
