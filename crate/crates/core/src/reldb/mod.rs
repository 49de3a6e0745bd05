//! The relation database: generator families, declared homotopy groups,
//! relations among composites, finite-domain parameters, and gyration cases.
//!
//! Databases are read from a line-oriented text format (see [`parse`]) and
//! checked by [`validate`].

mod parse;
mod validate;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::abelian::GroupPresentation;
use crate::expr::{Dims, Expr, Family, Node};

pub use parse::{parse, parse_expr, parse_sources, Diagnostic};
pub use validate::{bott_twist_group, validate, Failure, FailureKind};

/// Shipped dataset files, embedded so the binary works without a data directory.
pub const TODA_RDB: &str = include_str!("../../data/toda.rdb");
pub const CASES_RDB: &str = include_str!("../../data/cases.rdb");

/// A source position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Location {
    pub file: Arc<str>,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col)
    }
}

/// A declared homotopy group with a basis of composites.
#[derive(Debug, Clone)]
pub struct GroupDecl {
    pub dims: Dims,
    pub presentation: Arc<GroupPresentation>,
    /// One single-chain expression per factor, in factor order.
    pub basis: Vec<Expr>,
    pub citation: Option<String>,
    pub location: Location,
}

/// A named subgroup of a declared group, given by generators.
#[derive(Debug, Clone)]
pub struct SubgroupDecl {
    pub name: String,
    pub dims: Dims,
    pub generators: Vec<Expr>,
    /// Marks the image of the suspension homomorphism.
    pub suspension: bool,
    pub citation: Option<String>,
    pub location: Location,
}

/// The values a parameter may take.
#[derive(Debug, Clone)]
pub enum ParamDomain {
    Int(Vec<i64>),
    /// An explicit list of elements of one group.
    Elements { dims: Dims, values: Vec<Expr> },
    /// Every element of a declared subgroup, in enumeration order.
    Subgroup {
        dims: Dims,
        subgroup: String,
        values: Vec<Expr>,
    },
}

impl ParamDomain {
    pub fn len(&self) -> usize {
        match self {
            ParamDomain::Int(v) => v.len(),
            ParamDomain::Elements { values, .. } | ParamDomain::Subgroup { values, .. } => {
                values.len()
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> ParamValue {
        match self {
            ParamDomain::Int(v) => ParamValue::Int(v[i]),
            ParamDomain::Elements { values, .. } | ParamDomain::Subgroup { values, .. } => {
                ParamValue::Element(values[i].clone())
            }
        }
    }

    pub fn values(&self) -> Vec<ParamValue> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    pub fn element_dims(&self) -> Option<Dims> {
        match self {
            ParamDomain::Int(_) => None,
            ParamDomain::Elements { dims, .. } | ParamDomain::Subgroup { dims, .. } => Some(*dims),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParamDecl {
    pub name: Arc<str>,
    pub domain: ParamDomain,
    pub citation: Option<String>,
    pub location: Location,
}

/// A concrete parameter value.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Element(Expr),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(n) => write!(f, "{n}"),
            ParamValue::Element(e) => write!(f, "{e}"),
        }
    }
}

/// A choice of value for some parameters, kept in declaration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    entries: Vec<(Arc<str>, ParamValue)>,
}

impl Assignment {
    pub fn empty() -> Self {
        Assignment::default()
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.entries
            .iter()
            .find(|(n, _)| &**n == name)
            .map(|(_, v)| v)
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        match self.get(name)? {
            ParamValue::Int(n) => Some(*n),
            ParamValue::Element(_) => None,
        }
    }

    /// Sets a value, replacing any previous one for the same name.
    pub fn set(&mut self, name: Arc<str>, value: ParamValue) {
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((name, value)),
        }
    }

    pub fn entries(&self) -> &[(Arc<str>, ParamValue)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The restriction to the given names, in this assignment's order.
    pub fn restricted(&self, names: &[Arc<str>]) -> Assignment {
        Assignment {
            entries: self
                .entries
                .iter()
                .filter(|(n, _)| names.contains(n))
                .cloned()
                .collect(),
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "(none)");
        }
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(n, v)| format!("{n}={v}"))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// `lhs = rhs`, where `lhs` is a single composite.
#[derive(Debug, Clone)]
pub struct RelationDecl {
    pub lhs: Expr,
    pub rhs: Expr,
    pub citation: Option<String>,
    /// Parameter names occurring in `rhs`, deduplicated.
    pub params: Vec<Arc<str>>,
    pub location: Location,
}

impl RelationDecl {
    pub fn lhs_chain(&self) -> &[Node] {
        self.lhs.single_chain().expect("relation lhs is a single composite")
    }
}

impl fmt::Display for RelationDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// The three projective planes and their Hopf data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Plane {
    CP2,
    HP2,
    OP2,
}

impl Plane {
    /// Dimension of the bottom cell.
    pub fn m(self) -> u32 {
        match self {
            Plane::CP2 => 2,
            Plane::HP2 => 4,
            Plane::OP2 => 8,
        }
    }

    pub fn all() -> [Plane; 3] {
        [Plane::CP2, Plane::HP2, Plane::OP2]
    }

    pub fn name(self) -> &'static str {
        match self {
            Plane::CP2 => "CP2",
            Plane::HP2 => "HP2",
            Plane::OP2 => "OP2",
        }
    }

    /// The attaching map of the top cell, `S^{2m-1} -> S^m`.
    pub fn hopf_family(self) -> &'static str {
        match self {
            Plane::CP2 => "eta",
            Plane::HP2 => "nu",
            Plane::OP2 => "sigma",
        }
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Plane {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "CP2" | "C" => Ok(Plane::CP2),
            "HP2" | "H" => Ok(Plane::HP2),
            "OP2" | "O" => Ok(Plane::OP2),
            _ => Err(format!("unknown plane `{s}` (expected CP2, HP2 or OP2)")),
        }
    }
}

/// `pi_{k-1}(SO(n))` in the stable range: `Z`, `Z/2`, or trivial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TwistGroup {
    Z,
    Z2,
    Trivial,
}

impl fmt::Display for TwistGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TwistGroup::Z => "Z",
            TwistGroup::Z2 => "Z/2",
            TwistGroup::Trivial => "0",
        })
    }
}

/// Which elements of `pi_{2m+k-2}(S^{2m-1})` arise as induced twists.
#[derive(Debug, Clone)]
pub enum TwistImage {
    Full,
    Generated(Vec<Expr>),
}

#[derive(Debug, Clone)]
pub struct CaseDecl {
    pub plane: Plane,
    pub k: u32,
    pub twist_group: TwistGroup,
    pub twist_image: TwistImage,
    /// The Hopf map `f : S^{2m-1} -> S^m`.
    pub f: Expr,
    pub citation: Option<String>,
    pub location: Location,
}

impl CaseDecl {
    pub fn m(&self) -> u32 {
        self.plane.m()
    }

    /// Twist-image group `pi_{2m+k-2}(S^{2m-1})`.
    pub fn twist_dims(&self) -> Dims {
        let m = self.m();
        Dims::new(2 * m + self.k - 2, 2 * m - 1)
    }

    /// Target group `pi_{2m+k-2}(S^m)` of the criterion.
    pub fn target_dims(&self) -> Dims {
        let m = self.m();
        Dims::new(2 * m + self.k - 2, m)
    }

    /// Group `pi_{m+k-1}(S^m)` of the correction classes lambda.
    pub fn lambda_dims(&self) -> Dims {
        let m = self.m();
        Dims::new(m + self.k - 1, m)
    }

    pub fn id(&self) -> String {
        format!("{} k={}", self.plane, self.k)
    }
}

/// A parsed database with lookup indexes.
#[derive(Debug, Clone, Default)]
pub struct Database {
    pub families: Vec<Arc<Family>>,
    pub groups: Vec<GroupDecl>,
    pub subgroups: Vec<SubgroupDecl>,
    pub params: Vec<ParamDecl>,
    pub relations: Vec<RelationDecl>,
    pub cases: Vec<CaseDecl>,
    family_citations: HashMap<String, Option<String>>,
    group_index: HashMap<Dims, usize>,
    basis_index: HashMap<String, (usize, usize)>,
    relation_index: HashMap<String, Vec<usize>>,
}

/// Errors loading a dataset from disk.
#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Parse(Vec<Diagnostic>),
}

impl Database {
    /// The dataset compiled into the crate.
    pub fn shipped() -> Database {
        parse_sources(&[("toda.rdb", TODA_RDB), ("cases.rdb", CASES_RDB)])
            .expect("shipped dataset parses")
    }

    /// Reads `toda.rdb` and `cases.rdb` from a directory.
    pub fn load_dir(dir: &Path) -> Result<Database, LoadError> {
        let mut texts = Vec::new();
        for name in ["toda.rdb", "cases.rdb"] {
            let path = dir.join(name);
            let text = std::fs::read_to_string(&path).map_err(|source| LoadError::Io {
                path: path.display().to_string(),
                source,
            })?;
            texts.push((name, text));
        }
        let refs: Vec<(&str, &str)> = texts.iter().map(|(n, t)| (*n, t.as_str())).collect();
        parse_sources(&refs).map_err(LoadError::Parse)
    }

    pub(crate) fn rebuild_indexes(&mut self) {
        self.group_index.clear();
        self.basis_index.clear();
        self.relation_index.clear();
        for (gi, g) in self.groups.iter().enumerate() {
            self.group_index.insert(g.dims, gi);
            for (fi, b) in g.basis.iter().enumerate() {
                self.basis_index.insert(b.to_string(), (gi, fi));
            }
        }
        for (ri, r) in self.relations.iter().enumerate() {
            let head = r.lhs_chain()[0].to_string();
            self.relation_index.entry(head).or_default().push(ri);
        }
    }

    pub(crate) fn set_family_citation(&mut self, name: &str, citation: Option<String>) {
        self.family_citations.insert(name.to_string(), citation);
    }

    pub fn family_citation(&self, name: &str) -> Option<&str> {
        self.family_citations.get(name).and_then(|c| c.as_deref())
    }

    pub fn family(&self, name: &str) -> Option<&Arc<Family>> {
        self.families.iter().find(|f| f.name == name)
    }

    pub fn group(&self, dims: Dims) -> Option<&GroupDecl> {
        self.group_index.get(&dims).map(|&i| &self.groups[i])
    }

    /// The group and factor position of a declared basis composite.
    pub fn basis_position(&self, chain: &str) -> Option<(&GroupDecl, usize)> {
        self.basis_index
            .get(chain)
            .map(|&(g, f)| (&self.groups[g], f))
    }

    /// Indices of relations whose left side begins with `head`.
    pub fn relations_with_head(&self, head: &str) -> &[usize] {
        self.relation_index
            .get(head)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn subgroup(&self, name: &str) -> Option<&SubgroupDecl> {
        self.subgroups.iter().find(|s| s.name == name)
    }

    /// The declared suspension subgroup of a hom-group, if any.
    pub fn suspension_subgroup(&self, dims: Dims) -> Option<&SubgroupDecl> {
        self.subgroups.iter().find(|s| s.suspension && s.dims == dims)
    }

    pub fn param(&self, name: &str) -> Option<&ParamDecl> {
        self.params.iter().find(|p| &*p.name == name)
    }

    pub fn case(&self, plane: Plane, k: u32) -> Option<&CaseDecl> {
        self.cases.iter().find(|c| c.plane == plane && c.k == k)
    }

    /// Every parameter at the first value of its domain.
    pub fn default_assignment(&self) -> Assignment {
        let mut a = Assignment::empty();
        for p in &self.params {
            a.set(p.name.clone(), p.domain.value(0));
        }
        a
    }

    /// Cartesian product of parameter domains in declaration order; the first
    /// parameter varies slowest. `restrict` limits the product to those names.
    pub fn assignments(&self, restrict: Option<&[Arc<str>]>) -> Vec<Assignment> {
        let params: Vec<&ParamDecl> = self
            .params
            .iter()
            .filter(|p| restrict.is_none_or(|r| r.contains(&p.name)))
            .collect();
        let mut out = vec![Assignment::empty()];
        for p in params {
            let mut next = Vec::with_capacity(out.len() * p.domain.len());
            for a in &out {
                for v in p.domain.values() {
                    let mut b = a.clone();
                    b.set(p.name.clone(), v);
                    next.push(b);
                }
            }
            out = next;
        }
        out
    }

    /// Canonical text form: one declaration per line, grouped by keyword.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let cite = |c: &Option<String>| match c {
            Some(c) => format!(" @ \"{c}\""),
            None => String::new(),
        };
        for f in &self.families {
            let mut line = format!("family {} stem {} min {}", f.name, f.stem, f.min);
            if let Some(m) = f.max {
                line += &format!(" max {m}");
            }
            if let Some(s) = f.susp {
                line += &format!(" susp {s}");
            }
            if let Some(o) = f.order {
                line += &format!(" order {o}");
            }
            if let Some(o) = f.order_from {
                line += &format!(" order_from {o}");
            }
            if let Some(a) = &f.alias {
                line += &format!(" alias {a}");
            }
            if f.identity {
                line += " identity";
            }
            if f.opaque {
                line += " opaque";
            }
            line += &cite(self.family_citations.get(&f.name).unwrap_or(&None));
            out += &line;
            out.push('\n');
        }
        for g in &self.groups {
            let body = if g.basis.is_empty() {
                "0".to_string()
            } else {
                g.presentation
                    .factors()
                    .iter()
                    .map(|f| match f.order {
                        0 => format!("Z<{}>", f.name),
                        n => format!("Z/{n}<{}>", f.name),
                    })
                    .collect::<Vec<_>>()
                    .join(" + ")
            };
            out += &format!("group {} = {}{}\n", g.dims, body, cite(&g.citation));
        }
        for s in &self.subgroups {
            let gens: Vec<String> = s.generators.iter().map(|g| g.to_string()).collect();
            out += &format!(
                "subgroup {} of {} = <{}>{}{}\n",
                s.name,
                s.dims,
                gens.join(", "),
                if s.suspension { " kind=suspension" } else { "" },
                cite(&s.citation)
            );
        }
        for p in &self.params {
            let body = match &p.domain {
                ParamDomain::Int(v) => format!(
                    "int in {{{}}}",
                    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
                ),
                ParamDomain::Elements { dims, values } => format!(
                    "{dims} in {{{}}}",
                    values
                        .iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
                ParamDomain::Subgroup { dims, subgroup, .. } => format!("{dims} in {subgroup}"),
            };
            out += &format!("param {} : {}{}\n", p.name, body, cite(&p.citation));
        }
        for r in &self.relations {
            out += &format!("rel {} = {}{}\n", r.lhs, r.rhs, cite(&r.citation));
        }
        for c in &self.cases {
            let image = match &c.twist_image {
                TwistImage::Full => "full".to_string(),
                TwistImage::Generated(g) => format!(
                    "<{}>",
                    g.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
                ),
            };
            out += &format!(
                "case {} k={} twist={} image={} f={}{}\n",
                c.plane,
                c.k,
                c.twist_group,
                image,
                c.f,
                cite(&c.citation)
            );
        }
        out
    }
}
