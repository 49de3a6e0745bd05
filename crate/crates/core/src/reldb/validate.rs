//! Consistency checks over a parsed database.

use std::fmt;

use serde::Serialize;

use crate::abelian::{gcd, Subgroup};
use crate::expr::{suspend, Expr, Node};
use crate::gyration::criterion_expressions;
use crate::normalize::{known_order, normalize, order_bound, relevant_assignments, NormalizeError, Normalizer};

use super::{Assignment, Database, Location, TwistGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// A group needed by a declaration is not declared.
    UndeclaredGroup,
    /// A family order disagrees with the order of its basis factor.
    FamilyOrder,
    /// A declared factor order is incompatible with the orders of its parts.
    BasisOrder,
    /// A relation's right side is not killed by the order of its left side.
    RelationOrder,
    /// A relation disagrees with what the other relations derive.
    CrossRoute,
    /// Suspending a relation contradicts a relation in a higher group.
    SuspensionCoherence,
    /// A subgroup generator does not normalize in its ambient group.
    Subgroup,
    /// A case's twist group disagrees with Bott periodicity.
    BottTable,
    /// A quantity needed to classify a case does not normalize.
    CaseCoverage,
    MissingCitation,
    UndeclaredParameter,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("serializable");
        f.write_str(s.as_str().expect("unit variant"))
    }
}

/// One validation failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub location: String,
    pub detail: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [{}] {}", self.location, self.kind, self.detail)
    }
}

/// `pi_{k-1}(SO(n))` in the stable range, by Bott periodicity.
pub fn bott_twist_group(k: u32) -> TwistGroup {
    match k % 8 {
        1 | 2 => TwistGroup::Z2,
        0 | 4 => TwistGroup::Z,
        _ => TwistGroup::Trivial,
    }
}

struct Report {
    failures: Vec<Failure>,
}

impl Report {
    fn push(&mut self, kind: FailureKind, location: &Location, detail: impl Into<String>) {
        self.failures.push(Failure {
            kind,
            location: location.to_string(),
            detail: detail.into(),
        });
    }
}

fn with_params(asg: &Assignment) -> String {
    if asg.is_empty() {
        String::new()
    } else {
        format!(" (with {asg})")
    }
}

/// Runs every check and lists all failures; an empty list means the
/// database is consistent as far as these checks can tell.
pub fn validate(db: &Database) -> Vec<Failure> {
    let mut r = Report { failures: Vec::new() };
    check_groups(db, &mut r);
    check_relations(db, &mut r);
    check_subgroups(db, &mut r);
    check_params(db, &mut r);
    check_cases(db, &mut r);
    r.failures
}

fn check_groups(db: &Database, r: &mut Report) {
    for g in &db.groups {
        if g.citation.is_none() {
            r.push(FailureKind::MissingCitation, &g.location, format!("group {} has no citation", g.dims));
        }
        for (b, f) in g.basis.iter().zip(g.presentation.factors()) {
            let chain = b.single_chain().expect("basis elements are composites");
            if let [Node::Atom(a)] = chain {
                let fam = a.order();
                if fam > 0 && fam != f.order {
                    r.push(
                        FailureKind::FamilyOrder,
                        &g.location,
                        format!(
                            "`{b}` has family order {} but its factor in {} has order {}",
                            order_text(fam),
                            g.dims,
                            order_text(f.order)
                        ),
                    );
                }
            }
            // Orders of proper parts followed by suspensions bound the order.
            let mut bound = 0;
            for j in (0..chain.len()).rev() {
                if !chain[j + 1..].iter().all(Node::is_suspension) {
                    break;
                }
                for i in 0..=j {
                    if i == 0 && j == chain.len() - 1 {
                        continue;
                    }
                    let n = known_order(db, &chain[i..=j]);
                    if n > 0 {
                        bound = gcd(bound, n);
                    }
                }
            }
            if bound > 0 && (f.order == 0 || bound % f.order != 0) {
                r.push(
                    FailureKind::BasisOrder,
                    &g.location,
                    format!(
                        "`{b}` is killed by {bound}, which is incompatible with declared order {}",
                        order_text(f.order)
                    ),
                );
            }
            if f.order > 0 {
                match normalize(&b.scale(f.order as i64), db, &Assignment::empty()) {
                    Ok(v) if v.is_zero() => {}
                    Ok(v) => r.push(
                        FailureKind::BasisOrder,
                        &g.location,
                        format!("{} * `{b}` normalizes to {v}, not 0", f.order),
                    ),
                    Err(e) => r.push(FailureKind::BasisOrder, &g.location, format!("{} * `{b}`: {e}", f.order)),
                }
            }
        }
    }
}

fn order_text(o: u64) -> String {
    if o == 0 {
        "infinite".into()
    } else {
        o.to_string()
    }
}

fn check_relations(db: &Database, r: &mut Report) {
    for (ri, rel) in db.relations.iter().enumerate() {
        let loc = &rel.location;
        if rel.citation.is_none() {
            r.push(FailureKind::MissingCitation, loc, format!("relation `{rel}` has no citation"));
        }
        for p in &rel.params {
            if db.param(p).is_none() {
                r.push(FailureKind::UndeclaredParameter, loc, format!("parameter `{p}` is not declared"));
            }
        }
        if db.group(rel.lhs.dims).is_none() {
            r.push(
                FailureKind::UndeclaredGroup,
                loc,
                format!("relation `{rel}` lies in undeclared {}", rel.lhs.dims),
            );
            continue;
        }
        let assignments = relevant_assignments(db, &[rel.lhs.clone(), rel.rhs.clone()]);

        let n = order_bound(db, rel.lhs_chain());
        if n > 0 {
            for asg in &assignments {
                match normalize(&rel.rhs.scale(n as i64), db, asg) {
                    Ok(v) if v.is_zero() => {}
                    Ok(v) => r.push(
                        FailureKind::RelationOrder,
                        loc,
                        format!(
                            "the left side of `{rel}` has order dividing {n}, but {n} times the right side is {v}{}",
                            with_params(asg)
                        ),
                    ),
                    Err(e) => r.push(FailureKind::RelationOrder, loc, format!("right side of `{rel}`: {e}")),
                }
            }
        }

        for asg in &assignments {
            let right = match normalize(&rel.rhs, db, asg) {
                Ok(v) => v,
                Err(e) => {
                    r.push(FailureKind::CrossRoute, loc, format!("right side of `{rel}` does not normalize: {e}"));
                    break;
                }
            };
            match Normalizer::new(db, asg).excluding(ri).run(&rel.lhs) {
                Ok((left, _)) if left != right => r.push(
                    FailureKind::CrossRoute,
                    loc,
                    format!(
                        "other relations give `{}` = {left}, but this relation says {right}{}",
                        rel.lhs,
                        with_params(asg)
                    ),
                ),
                _ => {}
            }
        }

        if rel.params.is_empty() {
            check_coherence(db, rel, r);
        }
    }
}

/// Suspends a parameter-free relation into every higher declared group where
/// both sides normalize, and compares.
fn check_coherence(db: &Database, rel: &super::RelationDecl, r: &mut Report) {
    let plain = rel.lhs_chain().iter().all(|n| matches!(n, Node::Atom(_)));
    if !plain {
        return;
    }
    let asg = Assignment::empty();
    for j in 1..=32 {
        let lhs = suspend(&rel.lhs, j);
        let Some(chain) = lhs.single_chain() else { break };
        if chain.iter().any(|n| !matches!(n, Node::Atom(_))) {
            break;
        }
        if db.group(lhs.dims).is_none() {
            continue;
        }
        let rhs = suspend(&rel.rhs, j);
        let (Ok(a), Ok(b)) = (normalize(&lhs, db, &asg), normalize(&rhs, db, &asg)) else {
            continue;
        };
        if a != b {
            r.push(
                FailureKind::SuspensionCoherence,
                &rel.location,
                format!(
                    "suspending `{rel}` {j} times gives `{lhs}` = `{rhs}`, but these normalize to {a} and {b}"
                ),
            );
        }
    }
}

fn check_subgroups(db: &Database, r: &mut Report) {
    for s in &db.subgroups {
        let Some(g) = db.group(s.dims) else {
            r.push(FailureKind::UndeclaredGroup, &s.location, format!("subgroup `{}` lies in undeclared {}", s.name, s.dims));
            continue;
        };
        let mut gens = Vec::new();
        for e in &s.generators {
            match normalize(e, db, &Assignment::empty()) {
                Ok(v) => gens.push(v),
                Err(err) => r.push(FailureKind::Subgroup, &s.location, format!("generator `{e}` of `{}`: {err}", s.name)),
            }
        }
        if let Err(e) = Subgroup::new(g.presentation.clone(), gens) {
            r.push(FailureKind::Subgroup, &s.location, e.to_string());
        }
        if s.citation.is_none() {
            r.push(FailureKind::MissingCitation, &s.location, format!("subgroup `{}` has no citation", s.name));
        }
    }
}

fn check_params(db: &Database, r: &mut Report) {
    for p in &db.params {
        if p.citation.is_none() {
            r.push(FailureKind::MissingCitation, &p.location, format!("parameter `{}` has no citation", p.name));
        }
        if let Some(dims) = p.domain.element_dims() {
            if db.group(dims).is_none() {
                r.push(FailureKind::UndeclaredGroup, &p.location, format!("parameter `{}` ranges over undeclared {dims}", p.name));
            }
        }
    }
}

fn check_cases(db: &Database, r: &mut Report) {
    for c in &db.cases {
        let loc = &c.location;
        if c.citation.is_none() {
            r.push(FailureKind::MissingCitation, loc, format!("case {} has no citation", c.id()));
        }
        let expected = bott_twist_group(c.k);
        if c.twist_group != expected {
            r.push(
                FailureKind::BottTable,
                loc,
                format!("case {} declares twist group {} but Bott periodicity gives {expected}", c.id(), c.twist_group),
            );
        }
        for dims in [c.twist_dims(), c.target_dims(), c.lambda_dims()] {
            if db.group(dims).is_none() {
                r.push(FailureKind::UndeclaredGroup, loc, format!("case {} needs undeclared {dims}", c.id()));
            }
        }
        let exprs: Vec<Expr> = match criterion_expressions(db, c) {
            Ok(v) => v,
            Err(e) => {
                r.push(FailureKind::CaseCoverage, loc, e);
                continue;
            }
        };
        'asg: for asg in relevant_assignments(db, &exprs) {
            for e in &exprs {
                if let Err(err) = normalize(e, db, &asg) {
                    let detail = match &err {
                        NormalizeError::Stuck { .. } => format!("case {}: `{e}`: {err}", c.id()),
                        _ => format!("case {}: `{e}`: {err}{}", c.id(), with_params(&asg)),
                    };
                    r.push(FailureKind::CaseCoverage, loc, detail);
                    break 'asg;
                }
            }
        }
    }
}
