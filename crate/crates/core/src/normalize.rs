//! Rewriting expressions to coordinates in a declared group.
//!
//! Each term of an expression is rewritten until its composite is a declared
//! basis element of the target group. The moves are:
//!
//! * left distributivity `g.(a + b) = g.a + g.b`, always;
//! * right distributivity `(a + b).c = a.c + b.c`, only when `c` is a suspension;
//! * removal of identity maps from composites;
//! * bilinear expansion of Whitehead products;
//! * database relations, spliced into composites under the same distributivity
//!   guard;
//! * order bounds: if a sub-composite `x` has known order `n` and everything
//!   after it is a suspension, the whole composite is killed by `n`, so its
//!   coefficient is reduced modulo `n`. Coprime orders therefore annihilate.
//!
//! A term that admits no move and is not a basis element is reported as stuck.

use std::sync::Arc;

use thiserror::Error;

use crate::abelian::{gcd, GroupElement, Subgroup};
use crate::expr::{chain_to_string, suspend, whitehead, Dims, Expr, Node, Term};
use crate::reldb::{Assignment, Database, ParamValue};

pub const DEFAULT_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("no group is declared for {0}")]
    UndeclaredGroup(Dims),
    #[error("parameter `{0}` has no assigned value")]
    UnassignedParameter(String),
    #[error("parameter `{name}` is used as {expected} but is assigned {got}")]
    ParameterKind {
        name: String,
        expected: &'static str,
        got: String,
    },
    #[error("stuck: `{chain}` in {dims} is not a basis element and no rule applies")]
    Stuck { chain: String, dims: Dims },
    #[error("step budget of {budget} exhausted while rewriting `{chain}`")]
    Budget { budget: usize, chain: String },
}

/// What a normalization used along the way.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    /// Indices into `Database::relations`, in order of first use.
    pub relations: Vec<usize>,
    /// Parameters whose values were read, in order of first use.
    pub params: Vec<Arc<str>>,
    pub steps: usize,
}

impl Trace {
    fn use_relation(&mut self, r: usize) {
        if !self.relations.contains(&r) {
            self.relations.push(r);
        }
    }

    fn use_param(&mut self, p: &Arc<str>) {
        if !self.params.contains(p) {
            self.params.push(p.clone());
        }
    }

    pub fn merge(&mut self, other: &Trace) {
        for &r in &other.relations {
            self.use_relation(r);
        }
        for p in &other.params {
            self.use_param(p);
        }
        self.steps += other.steps;
    }
}

/// Chooses which applicable move to take. Any choice must give the same result
/// on a confluent database; tests use random strategies to check that.
pub trait Strategy {
    /// Returns an index below `candidates` (which is at least 1).
    fn choose(&mut self, candidates: usize) -> usize;
}

/// Always takes the highest-priority move.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstMove;

impl Strategy for FirstMove {
    fn choose(&mut self, _candidates: usize) -> usize {
        0
    }
}

/// Normalizes with the default strategy and budget.
pub fn normalize(e: &Expr, db: &Database, asg: &Assignment) -> Result<GroupElement, NormalizeError> {
    Normalizer::new(db, asg).run(e).map(|(g, _)| g)
}

/// Normalizes and reports which relations and parameters were used.
pub fn normalize_traced(
    e: &Expr,
    db: &Database,
    asg: &Assignment,
) -> Result<(GroupElement, Trace), NormalizeError> {
    Normalizer::new(db, asg).run(e)
}

/// True when every composite of `e` consists of suspensions, or when `e`
/// normalizes into the declared suspension subgroup of its group.
pub fn is_suspension_expr(e: &Expr, db: &Database, asg: &Assignment) -> Result<bool, NormalizeError> {
    if e
        .terms
        .iter()
        .all(|t| t.scalars.is_empty() && t.chain.iter().all(Node::is_suspension))
    {
        return Ok(true);
    }
    let Some(sub) = db.suspension_subgroup(e.dims) else {
        return Ok(false);
    };
    let value = normalize(e, db, asg)?;
    let gens = sub
        .generators
        .iter()
        .map(|g| normalize(g, db, asg))
        .collect::<Result<Vec<_>, _>>()?;
    let s = Subgroup::new(value.group().clone(), gens).expect("generators lie in the declared group");
    Ok(s.contains(&value))
}

/// The parameters that can influence the normalization of `exprs`.
///
/// Found by probing: normalize under a default assignment, then under every
/// combination of values of the parameters seen so far, until no new
/// parameter appears. Expressions that fail to normalize contribute nothing.
pub fn relevant_params(db: &Database, exprs: &[Expr]) -> Vec<Arc<str>> {
    let base = db.default_assignment();
    let mut used: Vec<Arc<str>> = Vec::new();
    loop {
        let mut found = used.clone();
        for partial in db.assignments(Some(&used)) {
            let mut asg = base.clone();
            for (n, v) in partial.entries() {
                asg.set(n.clone(), v.clone());
            }
            for e in exprs {
                if let Ok((_, trace)) = normalize_traced(e, db, &asg) {
                    for p in trace.params {
                        if !found.contains(&p) {
                            found.push(p);
                        }
                    }
                }
            }
        }
        if found.len() == used.len() {
            break;
        }
        used = found;
    }
    db.params
        .iter()
        .filter(|p| used.contains(&p.name))
        .map(|p| p.name.clone())
        .collect()
}

/// Every assignment of the parameters relevant to `exprs`, in declaration order.
pub fn relevant_assignments(db: &Database, exprs: &[Expr]) -> Vec<Assignment> {
    let used = relevant_params(db, exprs);
    db.assignments(Some(&used))
}

/// A configurable normalization run.
pub struct Normalizer<'a> {
    db: &'a Database,
    asg: &'a Assignment,
    excluded: Option<usize>,
    budget: usize,
}

#[derive(Debug, Clone)]
struct Work {
    coeff: i64,
    chain: Vec<Node>,
}

#[derive(Debug, Clone)]
enum Move {
    Reduce(u64),
    DropIdentity(usize),
    Splice(usize),
    ExpandWhitehead(usize, Expr),
    Relation { rel: usize, at: usize, rhs: Expr },
}

impl<'a> Normalizer<'a> {
    pub fn new(db: &'a Database, asg: &'a Assignment) -> Self {
        Normalizer {
            db,
            asg,
            excluded: None,
            budget: DEFAULT_BUDGET,
        }
    }

    /// Ignores one relation (used to cross-check it against the others).
    pub fn excluding(mut self, relation: usize) -> Self {
        self.excluded = Some(relation);
        self
    }

    pub fn budget(mut self, steps: usize) -> Self {
        self.budget = steps;
        self
    }

    pub fn run(&self, e: &Expr) -> Result<(GroupElement, Trace), NormalizeError> {
        self.run_with(e, &mut FirstMove)
    }

    pub fn run_with(
        &self,
        e: &Expr,
        strategy: &mut dyn Strategy,
    ) -> Result<(GroupElement, Trace), NormalizeError> {
        let group = self
            .db
            .group(e.dims)
            .ok_or(NormalizeError::UndeclaredGroup(e.dims))?;
        let presentation = group.presentation.clone();
        let mut trace = Trace::default();
        let e = self.substitute(e, &mut trace)?;
        let mut coords = vec![0i64; presentation.len()];
        let mut stack: Vec<Work> = e
            .terms
            .into_iter()
            .rev()
            .map(|t| Work {
                coeff: t.coeff,
                chain: t.chain,
            })
            .collect();
        while let Some(w) = stack.pop() {
            if w.coeff == 0 {
                continue;
            }
            let text = chain_to_string(&w.chain);
            if let Some((g, i)) = self.db.basis_position(&text) {
                if g.dims == e.dims {
                    coords[i] += w.coeff;
                    continue;
                }
            }
            trace.steps += 1;
            if trace.steps > self.budget {
                return Err(NormalizeError::Budget {
                    budget: self.budget,
                    chain: text,
                });
            }
            let moves = self.moves(&w, &mut trace)?;
            if moves.is_empty() {
                return Err(NormalizeError::Stuck {
                    chain: text,
                    dims: e.dims,
                });
            }
            let pick = strategy.choose(moves.len()).min(moves.len() - 1);
            let produced = self.apply(&w, &moves[pick], &mut trace);
            stack.extend(produced.into_iter().rev());
        }
        let element = GroupElement::new(presentation, coords).expect("coordinate count matches");
        Ok((element, trace))
    }

    /// Replaces parameters by their assigned values.
    fn substitute(&self, e: &Expr, trace: &mut Trace) -> Result<Expr, NormalizeError> {
        let mut terms = Vec::with_capacity(e.terms.len());
        for t in &e.terms {
            let mut coeff = t.coeff;
            for s in &t.scalars {
                coeff *= self.int_param(s, trace)?;
            }
            let mut chain = Vec::with_capacity(t.chain.len());
            for n in &t.chain {
                chain.extend(self.substitute_node(n, trace)?);
            }
            terms.push(Term::new(coeff, chain));
        }
        Ok(Expr {
            dims: e.dims,
            terms,
        })
    }

    fn substitute_node(&self, n: &Node, trace: &mut Trace) -> Result<Vec<Node>, NormalizeError> {
        if !node_has_params(n) {
            return Ok(vec![n.clone()]);
        }
        Ok(match n {
            Node::Atom(_) => vec![n.clone()],
            Node::Param(name, _) => factors(&self.element_param(name, trace)?),
            Node::Susp(k, inner) => {
                let inner = self.substitute_node(inner, trace)?;
                factors(&suspend(&Expr::chain(inner), *k))
            }
            Node::Sum(e) => vec![Node::Sum(Box::new(self.substitute(e, trace)?))],
            Node::Whitehead(a, b) => vec![Node::Whitehead(
                Box::new(self.substitute(a, trace)?),
                Box::new(self.substitute(b, trace)?),
            )],
        })
    }

    fn int_param(&self, name: &Arc<str>, trace: &mut Trace) -> Result<i64, NormalizeError> {
        trace.use_param(name);
        match self.asg.get(name) {
            Some(ParamValue::Int(n)) => Ok(*n),
            Some(ParamValue::Element(e)) => Err(NormalizeError::ParameterKind {
                name: name.to_string(),
                expected: "an integer",
                got: e.to_string(),
            }),
            None => Err(NormalizeError::UnassignedParameter(name.to_string())),
        }
    }

    fn element_param(&self, name: &Arc<str>, trace: &mut Trace) -> Result<Expr, NormalizeError> {
        trace.use_param(name);
        match self.asg.get(name) {
            Some(ParamValue::Element(e)) => Ok(e.clone()),
            Some(ParamValue::Int(n)) => Err(NormalizeError::ParameterKind {
                name: name.to_string(),
                expected: "a group element",
                got: n.to_string(),
            }),
            None => Err(NormalizeError::UnassignedParameter(name.to_string())),
        }
    }

    fn moves(&self, w: &Work, trace: &mut Trace) -> Result<Vec<Move>, NormalizeError> {
        let chain = &w.chain;
        let mut out = Vec::new();
        let suffix_ok = |from: usize| chain[from..].iter().all(Node::is_suspension);

        let bound = order_bound(self.db, chain);
        if bound > 0 && w.coeff.rem_euclid(bound as i64) != w.coeff {
            out.push(Move::Reduce(bound));
        }
        if chain.len() > 1 {
            for (i, n) in chain.iter().enumerate() {
                if matches!(n, Node::Atom(a) if a.is_identity()) {
                    out.push(Move::DropIdentity(i));
                }
            }
        }
        for (i, n) in chain.iter().enumerate() {
            match n {
                Node::Sum(e) => {
                    if e.is_zero() || is_unit(e) || suffix_ok(i + 1) {
                        out.push(Move::Splice(i));
                    }
                }
                Node::Whitehead(a, b) => {
                    if let Some(expanded) = expand_whitehead(a, b) {
                        if expanded.is_zero() || is_unit(&expanded) || suffix_ok(i + 1) {
                            out.push(Move::ExpandWhitehead(i, expanded));
                        }
                    }
                }
                _ => {}
            }
        }
        for i in 0..chain.len() {
            let head = chain[i].to_string();
            for &r in self.db.relations_with_head(&head) {
                if Some(r) == self.excluded {
                    continue;
                }
                let rel = &self.db.relations[r];
                let lhs = rel.lhs_chain();
                let end = i + lhs.len();
                if end > chain.len() || chain[i..end] != *lhs {
                    continue;
                }
                let rhs = self.substitute(&rel.rhs, trace)?.collect();
                if rhs.is_zero() || is_unit(&rhs) || suffix_ok(end) {
                    out.push(Move::Relation { rel: r, at: i, rhs });
                }
            }
        }
        Ok(out)
    }

    fn apply(&self, w: &Work, m: &Move, trace: &mut Trace) -> Vec<Work> {
        let chain = &w.chain;
        let splice = |at: usize, len: usize, with: &Expr| -> Vec<Work> {
            with.terms
                .iter()
                .map(|t| {
                    let mut c = chain[..at].to_vec();
                    c.extend(t.chain.iter().cloned());
                    c.extend(chain[at + len..].iter().cloned());
                    Work {
                        coeff: w.coeff * t.coeff,
                        chain: c,
                    }
                })
                .collect()
        };
        match m {
            Move::Reduce(n) => vec![Work {
                coeff: w.coeff.rem_euclid(*n as i64),
                chain: chain.clone(),
            }],
            Move::DropIdentity(i) => {
                let mut c = chain.clone();
                c.remove(*i);
                vec![Work {
                    coeff: w.coeff,
                    chain: c,
                }]
            }
            Move::Splice(i) => match &chain[*i] {
                Node::Sum(e) => splice(*i, 1, e),
                _ => unreachable!("splice targets a sum"),
            },
            Move::ExpandWhitehead(i, e) => splice(*i, 1, e),
            Move::Relation { rel, at, rhs } => {
                trace.use_relation(*rel);
                let len = self.db.relations[*rel].lhs_chain().len();
                splice(*at, len, rhs)
            }
        }
    }
}

/// A multiple of the order of the composite `chain`, from the known orders of
/// its sub-composites that are followed only by suspensions; `0` if unknown.
pub fn order_bound(db: &Database, chain: &[Node]) -> u64 {
    let mut bound = 0;
    for j in (0..chain.len()).rev() {
        if !chain[j + 1..].iter().all(Node::is_suspension) {
            break;
        }
        for i in 0..=j {
            let n = known_order(db, &chain[i..=j]);
            if n > 0 {
                bound = gcd(bound, n);
            }
        }
    }
    bound
}

/// The order of a single generator or declared basis composite; `0` if unknown
/// or infinite.
pub fn known_order(db: &Database, sub: &[Node]) -> u64 {
    if let [Node::Atom(a)] = sub {
        let o = a.order();
        if o > 0 {
            return o;
        }
    }
    if sub.iter().any(|n| matches!(n, Node::Sum(_))) {
        return 0;
    }
    match db.basis_position(&chain_to_string(sub)) {
        Some((g, i)) => g.presentation.factors()[i].order,
        None => 0,
    }
}

fn node_has_params(n: &Node) -> bool {
    match n {
        Node::Atom(_) => false,
        Node::Param(..) => true,
        Node::Susp(_, inner) => node_has_params(inner),
        Node::Sum(e) => e.mentions_parameters(),
        Node::Whitehead(a, b) => a.mentions_parameters() || b.mentions_parameters(),
    }
}

/// The nodes standing for `e` inside a composite.
fn factors(e: &Expr) -> Vec<Node> {
    match e.single_chain() {
        Some(c) => c.to_vec(),
        None => vec![Node::Sum(Box::new(e.clone()))],
    }
}

/// A single composite with coefficient one: splicing it needs no distributivity.
fn is_unit(e: &Expr) -> bool {
    e.single_chain().is_some()
}

/// Structural simplification of a Whitehead argument: identities removed,
/// sums flattened where distributivity allows. No relations are used.
fn simplify_argument(e: &Expr) -> Expr {
    let mut terms: Vec<Term> = Vec::new();
    let mut queue: Vec<Term> = e.terms.clone();
    while let Some(mut t) = queue.pop() {
        if t.chain.len() > 1 {
            t.chain
                .retain(|n| !matches!(n, Node::Atom(a) if a.is_identity()));
        }
        let spliceable = t.chain.iter().enumerate().position(|(i, n)| match n {
            Node::Sum(s) => {
                s.is_zero() || is_unit(s) || t.chain[i + 1..].iter().all(Node::is_suspension)
            }
            _ => false,
        });
        match spliceable {
            Some(i) => {
                let Node::Sum(s) = &t.chain[i] else { unreachable!() };
                for u in &s.terms {
                    let mut c = t.chain[..i].to_vec();
                    c.extend(u.chain.iter().cloned());
                    c.extend(t.chain[i + 1..].iter().cloned());
                    queue.push(Term {
                        coeff: t.coeff * u.coeff,
                        scalars: t.scalars.clone(),
                        chain: c,
                    });
                }
            }
            None => terms.push(t),
        }
    }
    terms.reverse();
    Expr {
        dims: e.dims,
        terms,
    }
    .collect()
}

/// The bilinear expansion of `[a, b]`, or `None` when both arguments are
/// already simple composites.
fn expand_whitehead(a: &Expr, b: &Expr) -> Option<Expr> {
    let sa = simplify_argument(a);
    let sb = simplify_argument(b);
    if sa == *a && sb == *b && a.single_chain().is_some() && b.single_chain().is_some() {
        return None;
    }
    Some(whitehead(&sa, &sb).expect("arguments share a target"))
}
