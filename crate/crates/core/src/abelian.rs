//! Exact arithmetic in finitely generated abelian groups given as direct sums
//! of cyclic factors with named generators.
//!
//! A factor of order `0` is infinite cyclic. Elements are coordinate vectors;
//! finite coordinates are kept in the canonical range `[0, order)`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

/// Errors raised by group arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbelianError {
    #[error("generator name `{0}` occurs twice in one presentation")]
    DuplicateGenerator(String),
    #[error("factor `{name}` has order 1; finite orders must be at least 2")]
    TrivialFactor { name: String },
    #[error("coordinate vector has length {got}, presentation has {expected} factors")]
    LengthMismatch { expected: usize, got: usize },
    #[error("elements belong to different presentations")]
    PresentationMismatch,
    #[error("reachable_set needs at least one image")]
    NoImages,
    #[error("reachable_set got {images} images but {bounds} bounds")]
    BoundsMismatch { images: usize, bounds: usize },
    #[error("search bound for coordinate {0} must be positive")]
    ZeroBound(usize),
    #[error("group has an infinite factor; its elements cannot be enumerated")]
    Infinite,
    #[error("relation is not reflexive at {0}")]
    NotReflexive(String),
    #[error("relation is not symmetric on ({0}, {1})")]
    NotSymmetric(String, String),
}

/// One cyclic summand: a named generator and its order (`0` = infinite).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Factor {
    pub name: String,
    pub order: u64,
}

/// An ordered direct sum of cyclic groups with named generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct GroupPresentation {
    factors: Vec<Factor>,
}

impl GroupPresentation {
    /// Builds a presentation, checking generator uniqueness and factor orders.
    pub fn new<S: Into<String>>(
        factors: impl IntoIterator<Item = (S, u64)>,
    ) -> Result<Self, AbelianError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (name, order) in factors {
            let name = name.into();
            if order == 1 {
                return Err(AbelianError::TrivialFactor { name });
            }
            if !seen.insert(name.clone()) {
                return Err(AbelianError::DuplicateGenerator(name));
            }
            out.push(Factor { name, order });
        }
        Ok(GroupPresentation { factors: out })
    }

    /// The trivial group (no factors).
    pub fn trivial() -> Self {
        GroupPresentation { factors: Vec::new() }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.factors.iter().all(|f| f.order != 0)
    }

    /// Number of elements, if finite.
    pub fn cardinality(&self) -> Option<u64> {
        self.factors
            .iter()
            .try_fold(1u64, |acc, f| (f.order != 0).then(|| acc * f.order))
    }

    /// Least common multiple of the finite orders; 1 if there are none.
    pub fn exponent(&self) -> u64 {
        self.factors
            .iter()
            .filter(|f| f.order != 0)
            .fold(1, |acc, f| lcm(acc, f.order))
    }

    /// Position of the factor with the given generator name.
    pub fn position(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    /// Short algebraic description such as `Z + Z/4 + Z/3`.
    pub fn describe(&self) -> String {
        if self.factors.is_empty() {
            return "0".to_string();
        }
        self.factors
            .iter()
            .map(|f| {
                if f.order == 0 {
                    "Z".to_string()
                } else {
                    format!("Z/{}", f.order)
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl fmt::Display for GroupPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|fa| {
                if fa.order == 0 {
                    format!("Z<{}>", fa.name)
                } else {
                    format!("Z/{}<{}>", fa.order, fa.name)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// An element of a presented group, stored as a normalized coordinate vector.
#[derive(Debug, Clone)]
pub struct GroupElement {
    group: Arc<GroupPresentation>,
    coords: Vec<i64>,
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords
            && (Arc::ptr_eq(&self.group, &other.group) || self.group == other.group)
    }
}

impl Eq for GroupElement {}

impl std::hash::Hash for GroupElement {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.coords.hash(state);
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElement {
    /// Lexicographic order on coordinates.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.coords.cmp(&other.coords)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

fn reduce(c: i64, order: u64) -> i64 {
    if order == 0 {
        c
    } else {
        c.rem_euclid(order as i64)
    }
}

impl GroupElement {
    /// Builds an element and reduces its coordinates into canonical range.
    pub fn new(group: Arc<GroupPresentation>, coords: Vec<i64>) -> Result<Self, AbelianError> {
        if coords.len() != group.len() {
            return Err(AbelianError::LengthMismatch {
                expected: group.len(),
                got: coords.len(),
            });
        }
        let coords = coords
            .iter()
            .zip(group.factors())
            .map(|(&c, f)| reduce(c, f.order))
            .collect();
        Ok(GroupElement { group, coords })
    }

    pub fn zero(group: Arc<GroupPresentation>) -> Self {
        let coords = vec![0; group.len()];
        GroupElement { group, coords }
    }

    /// The `i`-th basis generator.
    pub fn basis(group: Arc<GroupPresentation>, i: usize) -> Self {
        let mut coords = vec![0; group.len()];
        coords[i] = 1;
        GroupElement::new(group, coords).expect("basis coordinates have the right length")
    }

    pub fn group(&self) -> &Arc<GroupPresentation> {
        &self.group
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    fn check_same(&self, other: &Self) -> Result<(), AbelianError> {
        if Arc::ptr_eq(&self.group, &other.group) || self.group == other.group {
            Ok(())
        } else {
            Err(AbelianError::PresentationMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, AbelianError> {
        self.check_same(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a + b)
            .collect();
        GroupElement::new(self.group.clone(), coords)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AbelianError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, n: i64) -> Self {
        let coords = self.coords.iter().map(|a| a * n).collect();
        GroupElement::new(self.group.clone(), coords).expect("length is preserved")
    }

    pub fn neg(&self) -> Self {
        self.scale(-1)
    }

    /// Order of the element; `0` if it has infinite order.
    pub fn order(&self) -> u64 {
        let mut acc = 1;
        for (&c, f) in self.coords.iter().zip(self.group.factors()) {
            if c == 0 {
                continue;
            }
            if f.order == 0 {
                return 0;
            }
            acc = lcm(acc, f.order / gcd(c as u64, f.order));
        }
        acc
    }
}

/// Free-function form of coordinate reduction; idempotent.
pub fn normalize(e: &GroupElement) -> GroupElement {
    GroupElement::new(e.group.clone(), e.coords.clone()).expect("element is well formed")
}

/// Least common multiple of all finite orders of `g`.
pub fn exponent(g: &GroupPresentation) -> u64 {
    g.exponent()
}

/// Every element of a finite group, in lexicographic coordinate order.
pub fn enumerate(group: &Arc<GroupPresentation>) -> Result<Vec<GroupElement>, AbelianError> {
    if !group.is_finite() {
        return Err(AbelianError::Infinite);
    }
    let orders: Vec<u64> = group.factors().iter().map(|f| f.order).collect();
    let mut out = Vec::new();
    for_each_vector(&orders, |v| {
        out.push(GroupElement::new(group.clone(), v.to_vec()).expect("length matches"));
    });
    Ok(out)
}

/// Visits every vector `v` with `0 <= v[i] < bounds[i]` in lexicographic order.
pub fn for_each_vector(bounds: &[u64], mut visit: impl FnMut(&[i64])) {
    if bounds.contains(&0) {
        return;
    }
    let mut v = vec![0i64; bounds.len()];
    loop {
        visit(&v);
        let mut i = bounds.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            v[i] += 1;
            if (v[i] as u64) < bounds[i] {
                break;
            }
            v[i] = 0;
        }
    }
}

/// All sums `sum_i c_i * images[i]` with `0 <= c_i < bounds[i]`, each mapped to
/// the lexicographically smallest coefficient vector producing it.
pub fn reachable_set(
    images: &[GroupElement],
    bounds: &[u64],
) -> Result<BTreeMap<GroupElement, Vec<i64>>, AbelianError> {
    let first = images.first().ok_or(AbelianError::NoImages)?;
    if images.len() != bounds.len() {
        return Err(AbelianError::BoundsMismatch {
            images: images.len(),
            bounds: bounds.len(),
        });
    }
    if let Some(i) = bounds.iter().position(|&b| b == 0) {
        return Err(AbelianError::ZeroBound(i));
    }
    for img in images {
        first.check_same(img)?;
    }
    let group = first.group.clone();
    let mut out = BTreeMap::new();
    for_each_vector(bounds, |c| {
        let mut coords = vec![0i64; group.len()];
        for (ci, img) in c.iter().zip(images) {
            if *ci == 0 {
                continue;
            }
            for (acc, x) in coords.iter_mut().zip(&img.coords) {
                *acc += ci * x;
            }
        }
        let e = GroupElement::new(group.clone(), coords).expect("length matches");
        out.entry(e).or_insert_with(|| c.to_vec());
    });
    Ok(out)
}

/// A subgroup given by generators inside an ambient presentation.
#[derive(Debug, Clone)]
pub struct Subgroup {
    pub ambient: Arc<GroupPresentation>,
    pub generators: Vec<GroupElement>,
}

impl Subgroup {
    pub fn new(
        ambient: Arc<GroupPresentation>,
        generators: Vec<GroupElement>,
    ) -> Result<Self, AbelianError> {
        for g in &generators {
            if *g.group != *ambient {
                return Err(AbelianError::PresentationMismatch);
            }
        }
        Ok(Subgroup { ambient, generators })
    }

    /// The span of the generators, computed by closure under addition.
    ///
    /// Infinite coordinates are taken modulo the ambient exponent, which is the
    /// exponent-bounding convention used for all searches in this crate.
    pub fn span(&self) -> BTreeSet<GroupElement> {
        let e = self.ambient.exponent() as i64;
        let bound = |x: GroupElement| -> GroupElement {
            let coords = x
                .coords
                .iter()
                .zip(self.ambient.factors())
                .map(|(&c, f)| if f.order == 0 { c.rem_euclid(e) } else { c })
                .collect();
            GroupElement::new(self.ambient.clone(), coords).expect("length matches")
        };
        let zero = GroupElement::zero(self.ambient.clone());
        let mut seen = BTreeSet::from([zero.clone()]);
        let mut queue = VecDeque::from([zero]);
        while let Some(x) = queue.pop_front() {
            for g in &self.generators {
                let y = bound(x.add(g).expect("same ambient"));
                if seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    /// Membership by span enumeration.
    pub fn contains(&self, e: &GroupElement) -> bool {
        if *e.group != *self.ambient {
            return false;
        }
        let ex = self.ambient.exponent() as i64;
        let coords: Vec<i64> = e
            .coords
            .iter()
            .zip(self.ambient.factors())
            .map(|(&c, f)| if f.order == 0 { c.rem_euclid(ex) } else { c })
            .collect();
        let e = GroupElement::new(self.ambient.clone(), coords).expect("length matches");
        self.span().contains(&e)
    }
}

/// Free-function form of [`Subgroup::contains`].
pub fn subgroup_contains(s: &Subgroup, e: &GroupElement) -> bool {
    s.contains(e)
}

/// One equivalence class, labeled by its lexicographically minimal member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitClass {
    pub representative: GroupElement,
    pub members: Vec<GroupElement>,
}

/// Partitions `points` into classes of the transitive closure of `related`.
///
/// Fails if `related` is not reflexive or not symmetric on `points`. Classes are
/// sorted by representative; members within a class are sorted too.
pub fn orbit_partition(
    points: &[GroupElement],
    mut related: impl FnMut(&GroupElement, &GroupElement) -> bool,
) -> Result<Vec<OrbitClass>, AbelianError> {
    let mut pts: Vec<GroupElement> = points.to_vec();
    pts.sort();
    pts.dedup();
    let n = pts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        if !related(&pts[i], &pts[i]) {
            return Err(AbelianError::NotReflexive(pts[i].to_string()));
        }
        for j in (i + 1)..n {
            let ij = related(&pts[i], &pts[j]);
            let ji = related(&pts[j], &pts[i]);
            if ij != ji {
                return Err(AbelianError::NotSymmetric(
                    pts[i].to_string(),
                    pts[j].to_string(),
                ));
            }
            if ij {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    // Keep the smaller index as root so roots are minimal members.
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut classes: HashMap<usize, Vec<GroupElement>> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        classes.entry(r).or_default().push(pts[i].clone());
    }
    let mut out: Vec<OrbitClass> = classes
        .into_values()
        .map(|members| OrbitClass {
            representative: members[0].clone(),
            members,
        })
        .collect();
    out.sort_by(|a, b| a.representative.cmp(&b.representative));
    Ok(out)
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}
