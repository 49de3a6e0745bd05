//! Formal homotopy-class expressions: integer combinations of composites of
//! named generators, suspensions, and Whitehead products.
//!
//! Expressions are purely syntactic here; their value as a group element is
//! computed by [`crate::normalize`].

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

/// The shape of a map `S^from -> S^to`, i.e. an element of `pi_from(S^to)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Dims {
    pub from: u32,
    pub to: u32,
}

impl Dims {
    pub fn new(from: u32, to: u32) -> Self {
        Dims { from, to }
    }

    pub fn shifted(self, k: u32) -> Self {
        Dims::new(self.from + k, self.to + k)
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pi({} -> {})", self.from, self.to)
    }
}

/// Errors from building expressions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("cannot compose {outer} after {inner}: S^{} -> S^{} does not feed S^{} -> S^{}", inner_dims.from, inner_dims.to, outer_dims.from, outer_dims.to)]
    Compose {
        outer: String,
        outer_dims: Dims,
        inner: String,
        inner_dims: Dims,
    },
    #[error("Whitehead product needs a common target sphere, got S^{left} and S^{right}")]
    WhiteheadTarget { left: u32, right: u32 },
    #[error("cannot add {left} and {right}: different hom-groups")]
    Add { left: Dims, right: Dims },
    #[error("index {index} is outside the declared range of family `{family}`")]
    IndexOutOfRange { family: String, index: u32 },
}

/// A family of generators `x_n`, one for each admissible sphere index `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Family {
    pub name: String,
    /// `x_n : S^{n+stem} -> S^n`.
    pub stem: u32,
    pub min: u32,
    pub max: Option<u32>,
    /// Members with index at least this value are suspensions.
    pub susp: Option<u32>,
    /// Order of `x_n` for `n >= order_from` (infinite or unrecorded below).
    pub order: Option<u64>,
    pub order_from: Option<u32>,
    /// Printed name for suspended members, e.g. `Snu'` for the suspensions of `nu'`.
    pub alias: Option<String>,
    /// The identity maps `iota_n`.
    pub identity: bool,
    /// Unlabeled generators that no relation mentions.
    pub opaque: bool,
}

impl Family {
    pub fn in_range(&self, n: u32) -> bool {
        n >= self.min && self.max.is_none_or(|m| n <= m)
    }

    pub fn is_suspension_at(&self, n: u32) -> bool {
        self.susp.is_some_and(|s| n >= s)
    }

    /// Order of `x_n`, `0` when infinite or not recorded.
    pub fn order_at(&self, n: u32) -> u64 {
        match self.order {
            Some(o) if n >= self.order_from.unwrap_or(self.min) => o,
            _ => 0,
        }
    }

    /// The identifier used when printing `x_n`.
    pub fn label_at(&self, n: u32) -> &str {
        match (&self.alias, self.susp) {
            (Some(a), Some(s)) if n >= s => a,
            _ => &self.name,
        }
    }

    pub fn atom(self: &Arc<Self>, index: u32) -> Result<Atom, ExprError> {
        if !self.in_range(index) {
            return Err(ExprError::IndexOutOfRange {
                family: self.name.clone(),
                index,
            });
        }
        Ok(Atom {
            family: self.clone(),
            index,
        })
    }
}

/// One named generator `x_n`.
#[derive(Debug, Clone)]
pub struct Atom {
    pub family: Arc<Family>,
    pub index: u32,
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        self.index == other.index && self.family.name == other.family.name
    }
}

impl Eq for Atom {}

impl std::hash::Hash for Atom {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.family.name.hash(state);
        self.index.hash(state);
    }
}

impl Atom {
    pub fn domain_dim(&self) -> u32 {
        self.index + self.family.stem
    }

    pub fn codomain_dim(&self) -> u32 {
        self.index
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.domain_dim(), self.codomain_dim())
    }

    pub fn suspension_flag(&self) -> bool {
        self.family.is_suspension_at(self.index)
    }

    pub fn is_identity(&self) -> bool {
        self.family.identity
    }

    pub fn order(&self) -> u64 {
        self.family.order_at(self.index)
    }

    /// `Sigma^k` of this atom, when the family extends that far.
    pub fn shifted(&self, k: u32) -> Option<Atom> {
        self.family.atom(self.index + k).ok()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.family.label_at(self.index), self.index)
    }
}

/// One factor of a composite.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Atom(Atom),
    /// Whitehead product `[a, b]`.
    Whitehead(Box<Expr>, Box<Expr>),
    /// `Sigma^k` of the inner node.
    Susp(u32, Box<Node>),
    /// A parenthesized sum used as a single factor.
    Sum(Box<Expr>),
    /// The value of an element-valued parameter.
    Param(Arc<str>, Dims),
}

impl Node {
    pub fn dims(&self) -> Dims {
        match self {
            Node::Atom(a) => a.dims(),
            Node::Whitehead(a, b) => whitehead_dims(a.dims, b.dims),
            Node::Susp(k, inner) => inner.dims().shifted(*k),
            Node::Sum(e) => e.dims,
            Node::Param(_, d) => *d,
        }
    }

    /// True for maps known to be suspensions (suspension-flagged atoms and
    /// explicit suspensions). Right distributivity is allowed through these.
    pub fn is_suspension(&self) -> bool {
        match self {
            Node::Atom(a) => a.suspension_flag(),
            Node::Susp(k, _) => *k >= 1,
            _ => false,
        }
    }

    pub fn as_atom(&self) -> Option<&Atom> {
        match self {
            Node::Atom(a) => Some(a),
            _ => None,
        }
    }
}

fn whitehead_dims(a: Dims, b: Dims) -> Dims {
    Dims::new(a.from + b.from - 1, a.to)
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Atom(a) => write!(f, "{a}"),
            Node::Whitehead(a, b) => write!(f, "wh({a}, {b})"),
            Node::Susp(k, inner) => match inner.as_ref() {
                Node::Sum(e) => write!(f, "S^{k}({e})"),
                other => write!(f, "S^{k}({other})"),
            },
            Node::Sum(e) => write!(f, "({e})"),
            Node::Param(name, _) => write!(f, "{name}"),
        }
    }
}

/// `coeff * scalars... * (chain[0] . chain[1] . ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: i64,
    /// Integer-valued parameters multiplying the term.
    pub scalars: Vec<Arc<str>>,
    pub chain: Vec<Node>,
}

impl Term {
    pub fn new(coeff: i64, chain: Vec<Node>) -> Self {
        Term {
            coeff,
            scalars: Vec::new(),
            chain,
        }
    }

    pub fn dims(&self) -> Dims {
        let first = self.chain.first().expect("chains are non-empty").dims();
        let last = self.chain.last().expect("chains are non-empty").dims();
        Dims::new(last.from, first.to)
    }
}

/// Formats a chain as `a.b.c`.
pub fn chain_to_string(chain: &[Node]) -> String {
    chain
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(".")
}

/// A formal sum of terms, all in the same hom-group.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub dims: Dims,
    pub terms: Vec<Term>,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let neg = t.coeff < 0;
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mag = t.coeff.unsigned_abs();
            if mag != 1 {
                write!(f, "{mag}*")?;
            }
            for s in &t.scalars {
                write!(f, "{s}*")?;
            }
            write!(f, "{}", chain_to_string(&t.chain))?;
        }
        Ok(())
    }
}

impl Expr {
    pub fn zero(dims: Dims) -> Self {
        Expr {
            dims,
            terms: Vec::new(),
        }
    }

    pub fn node(node: Node) -> Self {
        Expr {
            dims: node.dims(),
            terms: vec![Term::new(1, vec![node])],
        }
    }

    pub fn atom(atom: Atom) -> Self {
        Expr::node(Node::Atom(atom))
    }

    /// A single composite with coefficient 1. Panics on an empty chain.
    pub fn chain(chain: Vec<Node>) -> Self {
        let t = Term::new(1, chain);
        Expr {
            dims: t.dims(),
            terms: vec![t],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The chain of a bare composite (one term, coefficient 1, no scalars).
    pub fn single_chain(&self) -> Option<&[Node]> {
        match self.terms.as_slice() {
            [t] if t.coeff == 1 && t.scalars.is_empty() => Some(&t.chain),
            _ => None,
        }
    }

    pub fn add(&self, other: &Expr) -> Result<Expr, ExprError> {
        if self.dims != other.dims {
            return Err(ExprError::Add {
                left: self.dims,
                right: other.dims,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Expr {
            dims: self.dims,
            terms,
        }
        .collect())
    }

    pub fn scale(&self, n: i64) -> Expr {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff * n,
                ..t.clone()
            })
            .collect();
        Expr {
            dims: self.dims,
            terms,
        }
        .collect()
    }

    pub fn neg(&self) -> Expr {
        self.scale(-1)
    }

    /// Merges like terms and drops zero coefficients, keeping first-seen order.
    pub fn collect(mut self) -> Expr {
        let mut out: Vec<Term> = Vec::new();
        for mut t in self.terms.drain(..) {
            t.scalars.sort();
            if let Some(u) = out
                .iter_mut()
                .find(|u| u.scalars == t.scalars && u.chain == t.chain)
            {
                u.coeff += t.coeff;
            } else {
                out.push(t);
            }
        }
        out.retain(|t| t.coeff != 0);
        Expr {
            dims: self.dims,
            terms: out,
        }
    }

    /// Whether any node (at any depth) is a parameter or any term has scalars.
    pub fn mentions_parameters(&self) -> bool {
        self.parameters().next().is_some()
    }

    /// Names of all parameters referenced, with repetitions.
    pub fn parameters(&self) -> impl Iterator<Item = Arc<str>> {
        let mut out = Vec::new();
        collect_params(self, &mut out);
        out.into_iter()
    }
}

fn collect_params(e: &Expr, out: &mut Vec<Arc<str>>) {
    for t in &e.terms {
        out.extend(t.scalars.iter().cloned());
        for n in &t.chain {
            collect_params_node(n, out);
        }
    }
}

fn collect_params_node(n: &Node, out: &mut Vec<Arc<str>>) {
    match n {
        Node::Atom(_) => {}
        Node::Whitehead(a, b) => {
            collect_params(a, out);
            collect_params(b, out);
        }
        Node::Susp(_, inner) => collect_params_node(inner, out),
        Node::Sum(e) => collect_params(e, out),
        Node::Param(p, _) => out.push(p.clone()),
    }
}

/// The nodes standing for `e` inside a chain: its own chain when it is a bare
/// composite, otherwise a single parenthesized sum.
fn as_factors(e: &Expr) -> Vec<Node> {
    match e.single_chain() {
        Some(c) => c.to_vec(),
        None => vec![Node::Sum(Box::new(e.clone()))],
    }
}

/// The formal composite `e1 . e2` (first `e2`, then `e1`). No simplification.
pub fn compose(e1: &Expr, e2: &Expr) -> Result<Expr, ExprError> {
    if e2.dims.to != e1.dims.from {
        return Err(ExprError::Compose {
            outer: e1.to_string(),
            outer_dims: e1.dims,
            inner: e2.to_string(),
            inner_dims: e2.dims,
        });
    }
    let dims = Dims::new(e2.dims.from, e1.dims.to);
    if e1.is_zero() || e2.is_zero() {
        return Ok(Expr::zero(dims));
    }
    let mut chain = as_factors(e1);
    chain.extend(as_factors(e2));
    Ok(Expr {
        dims,
        terms: vec![Term::new(1, chain)],
    })
}

/// Suspends a node `k` times, shifting family indices where possible.
pub fn suspend_node(n: &Node, k: u32) -> Option<Node> {
    if k == 0 {
        return Some(n.clone());
    }
    Some(match n {
        Node::Atom(a) => match a.shifted(k) {
            Some(b) => Node::Atom(b),
            None => Node::Susp(k, Box::new(n.clone())),
        },
        Node::Susp(j, inner) => return suspend_node(inner, j + k),
        // Whitehead products suspend trivially.
        Node::Whitehead(..) => return None,
        Node::Sum(e) => Node::Sum(Box::new(suspend(e, k))),
        Node::Param(..) => Node::Susp(k, Box::new(n.clone())),
    })
}

/// `Sigma^k e`. Family instances are index-shifted when in range; terms
/// containing Whitehead products vanish.
pub fn suspend(e: &Expr, k: u32) -> Expr {
    let mut terms = Vec::new();
    'terms: for t in &e.terms {
        let mut chain = Vec::with_capacity(t.chain.len());
        for n in &t.chain {
            match suspend_node(n, k) {
                Some(m) => chain.push(m),
                None => continue 'terms,
            }
        }
        terms.push(Term {
            coeff: t.coeff,
            scalars: t.scalars.clone(),
            chain,
        });
    }
    Expr {
        dims: e.dims.shifted(k),
        terms,
    }
}

/// `[e1, e2]`, expanded bilinearly into primitive Whitehead products.
pub fn whitehead(e1: &Expr, e2: &Expr) -> Result<Expr, ExprError> {
    if e1.dims.to != e2.dims.to {
        return Err(ExprError::WhiteheadTarget {
            left: e1.dims.to,
            right: e2.dims.to,
        });
    }
    let dims = whitehead_dims(e1.dims, e2.dims);
    let mut terms = Vec::new();
    for a in &e1.terms {
        for b in &e2.terms {
            let mut scalars = a.scalars.clone();
            scalars.extend(b.scalars.iter().cloned());
            let node = Node::Whitehead(
                Box::new(Expr::chain(a.chain.clone())),
                Box::new(Expr::chain(b.chain.clone())),
            );
            terms.push(Term {
                coeff: a.coeff * b.coeff,
                scalars,
                chain: vec![node],
            });
        }
    }
    Ok(Expr { dims, terms }.collect())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn fam(name: &str, stem: u32, min: u32, susp: Option<u32>, order: Option<u64>) -> Arc<Family> {
        Arc::new(Family {
            name: name.into(),
            stem,
            min,
            max: None,
            susp,
            order,
            order_from: None,
            alias: None,
            identity: name == "iota",
            opaque: false,
        })
    }

    #[test]
    fn compose_checks_dimensions() {
        let eta = fam("eta", 1, 2, Some(3), Some(2));
        let nu = fam("nu", 3, 4, Some(5), None);
        let sigma = fam("sigma", 7, 8, Some(9), None);
        let e = compose(&Expr::atom(eta.atom(4).unwrap()), &Expr::atom(nu.atom(5).unwrap())).unwrap();
        assert_eq!(e.dims, Dims::new(8, 4));
        assert_eq!(e.to_string(), "eta(4).nu(5)");
        let s = compose(&Expr::atom(sigma.atom(8).unwrap()), &Expr::atom(eta.atom(15).unwrap())).unwrap();
        assert_eq!(s.dims, Dims::new(16, 8));
        assert!(compose(&Expr::atom(nu.atom(4).unwrap()), &Expr::atom(eta.atom(5).unwrap())).is_err());
    }

    #[test]
    fn compose_wraps_sums() {
        let eta = fam("eta", 1, 2, Some(3), Some(2));
        let a = Expr::atom(eta.atom(4).unwrap());
        let sum = a.add(&a.scale(2)).unwrap();
        assert_eq!(sum.to_string(), "3*eta(4)");
        let b = Expr::atom(eta.atom(5).unwrap());
        let two = b.add(&Expr::atom(eta.atom(5).unwrap()).scale(-2)).unwrap();
        assert_eq!(two.to_string(), "-eta(5)");
        let c = compose(&sum, &b).unwrap();
        assert_eq!(c.to_string(), "(3*eta(4)).eta(5)");
    }

    #[test]
    fn suspend_shifts_indices() {
        let eta = fam("eta", 1, 2, Some(3), Some(2));
        let e = suspend(&Expr::atom(eta.atom(2).unwrap()), 5);
        assert_eq!(e.to_string(), "eta(7)");
        assert!(suspend(&Expr::zero(Dims::new(3, 2)), 4).is_zero());
        let iota = fam("iota", 0, 1, Some(2), None);
        let w = whitehead(&Expr::atom(iota.atom(4).unwrap()), &Expr::atom(iota.atom(4).unwrap())).unwrap();
        assert!(suspend(&w, 1).is_zero());
    }

    #[test]
    fn whitehead_is_bilinear() {
        let iota = fam("iota", 0, 1, Some(2), None);
        let eta = fam("eta", 1, 2, Some(3), Some(2));
        let i4 = Expr::atom(iota.atom(4).unwrap());
        let e4 = Expr::atom(eta.atom(4).unwrap());
        let w = whitehead(&i4, &e4.add(&e4).unwrap()).unwrap();
        assert_eq!(w.to_string(), "2*wh(iota(4), eta(4))");
        assert_eq!(w.dims, Dims::new(8, 4));
        let z = whitehead(&Expr::atom(iota.atom(2).unwrap()), &Expr::zero(Dims::new(3, 2))).unwrap();
        assert!(z.is_zero());
        assert!(whitehead(&i4, &Expr::atom(eta.atom(5).unwrap())).is_err());
    }

    #[test]
    fn alias_labels_suspended_members() {
        let nup = Arc::new(Family {
            name: "nu'".into(),
            stem: 3,
            min: 3,
            max: None,
            susp: Some(4),
            order: Some(4),
            order_from: None,
            alias: Some("Snu'".into()),
            identity: false,
            opaque: false,
        });
        assert_eq!(nup.atom(3).unwrap().to_string(), "nu'(3)");
        let s = suspend(&Expr::atom(nup.atom(3).unwrap()), 1);
        assert_eq!(s.to_string(), "Snu'(4)");
    }
}
