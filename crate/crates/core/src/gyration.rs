//! Gyration stability of the projective planes.
//!
//! For a twisting `tau` the top cell of the gyration attaches by
//! `phi_tau = i1.f.taubar + i2.S^{k-1}f + [i1, i2]`, where `f : S^{2m-1} -> S^m`
//! is the Hopf map and `taubar` lies in `pi_{2m+k-2}(S^{2m-1})`. Two gyrations
//! are homotopy equivalent exactly when some `lambda` in `pi_{m+k-1}(S^m)` and
//! some sign `s` satisfy
//!
//! ```text
//! f.taubar + lambda.S^{k-1}f + [iota_m, lambda] = s * f.omegabar
//! ```
//!
//! in `pi_{2m+k-2}(S^m)`. The middle two terms are additive in `lambda` (the
//! suspension `S^{k-1}f` distributes on the right), so they are computed once
//! per basis element of `pi_{m+k-1}(S^m)` and the set of all their sums is
//! enumerated. Deciding equivalence is then a lookup.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::abelian::{enumerate, orbit_partition, reachable_set, AbelianError, GroupElement, GroupPresentation, Subgroup};
use crate::expr::{compose, suspend, whitehead, Dims, Expr, ExprError, Node};
use crate::normalize::{normalize, normalize_traced, relevant_params, NormalizeError, Trace};
use crate::reldb::{bott_twist_group, Assignment, CaseDecl, Database, TwistGroup, TwistImage};

pub use crate::reldb::Plane;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GyrationError {
    #[error("k={k} is outside the range 2 <= k <= {max} required for {plane} (m={m})")]
    OutOfRange { plane: Plane, k: u32, m: u32, max: u32 },
    #[error("no case is declared for {plane} k={k}")]
    UnknownCase { plane: Plane, k: u32 },
    #[error("no group is declared for {0}")]
    UndeclaredGroup(Dims),
    #[error("no identity family is declared")]
    NoIdentity,
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Abelian(#[from] AbelianError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("{0} does not lie in the twist group {1}")]
    NotATwist(String, Dims),
    #[error("twist image element {0} has a component on the unnamed factor {1}")]
    OpaqueTwist(String, String),
    #[error("witness for ({tau}, {omega}) fails symbolic re-verification: {detail}")]
    Replay { tau: String, omega: String, detail: String },
}

/// `phi = i1.a + b * i2.S^{k-1}f + c * [i1, i2]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttachingMap {
    pub m: u32,
    pub k: u32,
    /// Element of `pi_{2m+k-2}(S^m)`.
    pub a: GroupElement,
    pub b: i64,
    pub c: i64,
}

impl AttachingMap {
    /// `s * phi`.
    pub fn signed(&self, s: i64) -> AttachingMap {
        AttachingMap {
            a: self.a.scale(s),
            b: self.b * s,
            c: self.c * s,
            ..self.clone()
        }
    }
}

/// A self-equivalence of `S^m v S^{m+k-1}`: `(-1)^sign_i` on the bottom sphere,
/// `(-1)^sign_j` on the top sphere, plus the correction `lambda`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelfEquivalence {
    pub sign_i: u8,
    pub sign_j: u8,
    /// Element of `pi_{m+k-1}(S^m)`.
    pub lambda: GroupElement,
}

/// Evidence that two twists give equivalent gyrations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub lambda: GroupElement,
    pub sign: i64,
}

fn hom_group(db: &Database, dims: Dims) -> Result<&Arc<GroupPresentation>, GyrationError> {
    db.group(dims)
        .map(|g| &g.presentation)
        .ok_or(GyrationError::UndeclaredGroup(dims))
}

/// `sum_i coords[i] * basis[i]` as an expression.
pub fn element_expr(db: &Database, e: &GroupElement, dims: Dims) -> Result<Expr, GyrationError> {
    let g = db.group(dims).ok_or(GyrationError::UndeclaredGroup(dims))?;
    let mut out = Expr::zero(dims);
    for (c, b) in e.coords().iter().zip(&g.basis) {
        out = out.add(&b.scale(*c))?;
    }
    Ok(out)
}

fn identity(db: &Database, n: u32) -> Result<Expr, GyrationError> {
    let fam = db.families.iter().find(|f| f.identity).ok_or(GyrationError::NoIdentity)?;
    Ok(Expr::atom(fam.atom(n)?))
}

/// `S^{k-1} f`.
pub fn suspended_hopf(case: &CaseDecl) -> Expr {
    suspend(&case.f, case.k - 1)
}

fn is_opaque(basis: &Expr) -> bool {
    matches!(basis.single_chain(), Some([Node::Atom(a)]) if a.family.opaque)
}

/// Whether `f.t` must be computed for the twist basis element `t`. Unnamed
/// factors are skipped when the image is given by generators: the image is
/// then checked to avoid them.
fn needs_twist_basis(case: &CaseDecl, basis: &Expr) -> bool {
    matches!(case.twist_image, TwistImage::Full) || !is_opaque(basis)
}

/// Everything that must normalize to classify `case`: `f.t` for each twist
/// basis element and image generator `t`, and `l.S^{k-1}f`, `[iota_m, l]` for
/// each named basis element `l` of `pi_{m+k-1}(S^m)`.
pub fn criterion_expressions(db: &Database, case: &CaseDecl) -> Result<Vec<Expr>, String> {
    let err = |e: &dyn fmt::Display| format!("case {}: {e}", case.id());
    let t = db
        .group(case.twist_dims())
        .ok_or_else(|| err(&format!("no group is declared for {}", case.twist_dims())))?;
    let l = db
        .group(case.lambda_dims())
        .ok_or_else(|| err(&format!("no group is declared for {}", case.lambda_dims())))?;
    let mut out = Vec::new();
    for b in t.basis.iter().filter(|b| needs_twist_basis(case, b)) {
        out.push(compose(&case.f, b).map_err(|e| err(&e))?);
    }
    if let TwistImage::Generated(gens) = &case.twist_image {
        for g in gens {
            out.push(compose(&case.f, g).map_err(|e| err(&e))?);
        }
    }
    let sf = suspended_hopf(case);
    let iota = identity(db, case.m()).map_err(|e| err(&e))?;
    for b in l.basis.iter().filter(|b| !is_opaque(b)) {
        out.push(compose(b, &sf).map_err(|e| err(&e))?);
        out.push(whitehead(&iota, b).map_err(|e| err(&e))?);
    }
    Ok(out)
}

/// The declared case for `(plane, k)`, after checking the range of `k`.
pub fn find_case(db: &Database, plane: Plane, k: u32) -> Result<&CaseDecl, GyrationError> {
    check_range(plane, k)?;
    db.case(plane, k).ok_or(GyrationError::UnknownCase { plane, k })
}

fn check_range(plane: Plane, k: u32) -> Result<(), GyrationError> {
    let m = plane.m();
    if k < 2 || k > 2 * m - 2 {
        return Err(GyrationError::OutOfRange { plane, k, m, max: 2 * m - 2 });
    }
    Ok(())
}

/// The possible induced twists `taubar`, in coordinate order; always contains 0.
pub fn twist_image(db: &Database, case: &CaseDecl, asg: &Assignment) -> Result<Vec<GroupElement>, GyrationError> {
    let t = hom_group(db, case.twist_dims())?.clone();
    match &case.twist_image {
        TwistImage::Full => Ok(enumerate(&t)?),
        TwistImage::Generated(gens) => {
            let gens = gens
                .iter()
                .map(|g| normalize(g, db, asg))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Subgroup::new(t, gens)?.span().into_iter().collect())
        }
    }
}

/// `phi_tau`, computed symbolically: `a = f.taubar`, `b = c = 1`.
pub fn attaching_map(
    db: &Database,
    case: &CaseDecl,
    tau_bar: &GroupElement,
    asg: &Assignment,
) -> Result<AttachingMap, GyrationError> {
    let tau = element_expr(db, tau_bar, case.twist_dims())?;
    let a = normalize(&compose(&case.f, &tau)?, db, asg)?;
    Ok(AttachingMap {
        m: case.m(),
        k: case.k,
        a,
        b: 1,
        c: 1,
    })
}

/// `lambda.S^{k-1}f` and `[iota_m, lambda]`, computed symbolically.
pub fn lambda_terms(
    db: &Database,
    case: &CaseDecl,
    lambda: &GroupElement,
    asg: &Assignment,
) -> Result<(GroupElement, GroupElement, Trace), GyrationError> {
    let l = element_expr(db, lambda, case.lambda_dims())?;
    let (comp, mut trace) = normalize_traced(&compose(&l, &suspended_hopf(case))?, db, asg)?;
    let (wh, t2) = normalize_traced(&whitehead(&identity(db, case.m())?, &l)?, db, asg)?;
    trace.merge(&t2);
    Ok((comp, wh, trace))
}

/// The effect of a self-equivalence on an attaching map:
/// `a' = (-1)^i a + lambda.S^{k-1}f + (-1)^i [iota_m, lambda]`,
/// `b' = (-1)^j b`, `c' = (-1)^{i+j} c`.
pub fn apply_equivalence(
    db: &Database,
    case: &CaseDecl,
    eps: &SelfEquivalence,
    phi: &AttachingMap,
    asg: &Assignment,
) -> Result<AttachingMap, GyrationError> {
    let si = if eps.sign_i % 2 == 0 { 1 } else { -1 };
    let sj = if eps.sign_j % 2 == 0 { 1 } else { -1 };
    let (comp, wh, _) = lambda_terms(db, case, &eps.lambda, asg)?;
    let a = phi.a.scale(si).add(&comp)?.add(&wh.scale(si))?;
    Ok(AttachingMap {
        a,
        b: sj * phi.b,
        c: si * sj * phi.c,
        ..phi.clone()
    })
}

/// The linear data of one case under one parameter assignment.
pub struct CaseSystem<'d> {
    pub db: &'d Database,
    pub case: &'d CaseDecl,
    pub assignment: Assignment,
    pub twist_group: Arc<GroupPresentation>,
    pub target: Arc<GroupPresentation>,
    pub lambda_group: Arc<GroupPresentation>,
    /// `f.t_i` for each basis element `t_i` of the twist group.
    pub f_on_basis: Vec<GroupElement>,
    /// `l_j.S^{k-1}f` for each basis element `l_j` of the lambda group.
    pub comp: Vec<GroupElement>,
    /// `[iota_m, l_j]`.
    pub wh: Vec<GroupElement>,
    /// Search modulus per lambda coordinate: the factor order, the target
    /// exponent for infinite factors, and 1 for unnamed factors.
    pub bounds: Vec<u64>,
    pub twist_elements: Vec<GroupElement>,
    reach: BTreeMap<GroupElement, Vec<i64>>,
    /// Relations and parameters used in building the system.
    pub trace: Trace,
}

impl<'d> CaseSystem<'d> {
    pub fn new(db: &'d Database, case: &'d CaseDecl, asg: &Assignment) -> Result<Self, GyrationError> {
        check_range(case.plane, case.k)?;
        let twist_group = hom_group(db, case.twist_dims())?.clone();
        let target = hom_group(db, case.target_dims())?.clone();
        let ldecl = db
            .group(case.lambda_dims())
            .ok_or(GyrationError::UndeclaredGroup(case.lambda_dims()))?;
        let tdecl = db.group(case.twist_dims()).expect("checked above");
        let mut trace = Trace::default();
        let mut f_on_basis = Vec::new();
        for b in &tdecl.basis {
            if !needs_twist_basis(case, b) {
                f_on_basis.push(GroupElement::zero(target.clone()));
                continue;
            }
            let (v, t) = normalize_traced(&compose(&case.f, b)?, db, asg)?;
            trace.merge(&t);
            f_on_basis.push(v);
        }
        let sf = suspended_hopf(case);
        let iota = identity(db, case.m())?;
        let exponent = target.exponent().max(1);
        let (mut comp, mut wh, mut bounds) = (Vec::new(), Vec::new(), Vec::new());
        for (b, factor) in ldecl.basis.iter().zip(ldecl.presentation.factors()) {
            if is_opaque(b) {
                comp.push(GroupElement::zero(target.clone()));
                wh.push(GroupElement::zero(target.clone()));
                bounds.push(1);
                continue;
            }
            let (c, t1) = normalize_traced(&compose(b, &sf)?, db, asg)?;
            let (w, t2) = normalize_traced(&whitehead(&iota, b)?, db, asg)?;
            trace.merge(&t1);
            trace.merge(&t2);
            comp.push(c);
            wh.push(w);
            bounds.push(if factor.order == 0 { exponent } else { factor.order });
        }
        let delta: Vec<GroupElement> = comp
            .iter()
            .zip(&wh)
            .map(|(c, w)| c.add(w).expect("same target"))
            .collect();
        let reach = if delta.is_empty() {
            BTreeMap::from([(GroupElement::zero(target.clone()), Vec::new())])
        } else {
            reachable_set(&delta, &bounds)?
        };
        let twist_elements = twist_image(db, case, asg)?;
        for (i, b) in tdecl.basis.iter().enumerate() {
            if needs_twist_basis(case, b) {
                continue;
            }
            if let Some(t) = twist_elements.iter().find(|t| t.coords()[i] != 0) {
                return Err(GyrationError::OpaqueTwist(t.to_string(), b.to_string()));
            }
        }
        Ok(CaseSystem {
            db,
            case,
            assignment: asg.clone(),
            twist_group,
            target,
            lambda_group: ldecl.presentation.clone(),
            f_on_basis,
            comp,
            wh,
            bounds,
            twist_elements,
            reach,
            trace,
        })
    }

    /// `f.taubar`, by linearity.
    pub fn psi(&self, tau_bar: &GroupElement) -> GroupElement {
        let mut acc = GroupElement::zero(self.target.clone());
        for (c, img) in tau_bar.coords().iter().zip(&self.f_on_basis) {
            acc = acc.add(&img.scale(*c)).expect("same target");
        }
        acc
    }

    /// `lambda.S^{k-1}f + [iota_m, lambda]`, by linearity.
    pub fn delta(&self, lambda: &GroupElement) -> GroupElement {
        let mut acc = GroupElement::zero(self.target.clone());
        for (x, (c, w)) in lambda.coords().iter().zip(self.comp.iter().zip(&self.wh)) {
            acc = acc.add(&c.add(w).expect("same target").scale(*x)).expect("same target");
        }
        acc
    }

    /// All values of `delta(lambda)` over the search space.
    pub fn reachable(&self) -> &BTreeMap<GroupElement, Vec<i64>> {
        &self.reach
    }

    /// The number of lambdas searched.
    pub fn search_size(&self) -> u64 {
        self.bounds.iter().product()
    }

    pub fn attaching_map(&self, tau_bar: &GroupElement) -> AttachingMap {
        AttachingMap {
            m: self.case.m(),
            k: self.case.k,
            a: self.psi(tau_bar),
            b: 1,
            c: 1,
        }
    }

    fn lambda_element(&self, coeffs: &[i64]) -> GroupElement {
        GroupElement::new(self.lambda_group.clone(), coeffs.to_vec()).expect("one coefficient per factor")
    }

    /// The preferred witness from precomputed images: sign +1 first, then the
    /// lexicographically smallest lambda.
    pub fn equivalent(&self, tau_bar: &GroupElement, omega_bar: &GroupElement) -> Option<Witness> {
        self.equivalent_psi(&self.psi(tau_bar), &self.psi(omega_bar))
    }

    fn equivalent_psi(&self, a: &GroupElement, b: &GroupElement) -> Option<Witness> {
        for sign in [1i64, -1] {
            let need = b.scale(sign).sub(a).expect("same target");
            if let Some(c) = self.reach.get(&need) {
                return Some(Witness {
                    lambda: self.lambda_element(c),
                    sign,
                });
            }
        }
        None
    }

    /// Replays a witness through the symbolic self-equivalence action and
    /// compares with the signed attaching map of `omega_bar`.
    pub fn verify(&self, tau_bar: &GroupElement, omega_bar: &GroupElement, w: &Witness) -> Result<(), GyrationError> {
        let phi_tau = attaching_map(self.db, self.case, tau_bar, &self.assignment)?;
        let phi_omega = attaching_map(self.db, self.case, omega_bar, &self.assignment)?;
        let eps = SelfEquivalence {
            sign_i: 0,
            sign_j: if w.sign < 0 { 1 } else { 0 },
            lambda: w.lambda.clone(),
        };
        let image = apply_equivalence(self.db, self.case, &eps, &phi_tau, &self.assignment)?;
        let expected = phi_omega.signed(w.sign);
        if image != expected {
            return Err(GyrationError::Replay {
                tau: tau_bar.to_string(),
                omega: omega_bar.to_string(),
                detail: format!(
                    "got (a={}, b={}, c={}), expected (a={}, b={}, c={})",
                    image.a, image.b, image.c, expected.a, expected.b, expected.c
                ),
            });
        }
        Ok(())
    }

    /// Classes of the twist image under gyration equivalence.
    pub fn classify(&self) -> Result<AssignmentReport, GyrationError> {
        let psi: BTreeMap<&GroupElement, GroupElement> =
            self.twist_elements.iter().map(|t| (t, self.psi(t))).collect();
        let classes = orbit_partition(&self.twist_elements, |p, q| {
            self.equivalent_psi(&psi[p], &psi[q]).is_some()
        })?;
        let mut out = Vec::new();
        for class in classes {
            let mut witnesses = Vec::new();
            for member in &class.members {
                let w = self
                    .equivalent_psi(&psi[member], &psi[&class.representative])
                    .map(|w| (member.clone(), w));
                witnesses.push(w);
            }
            out.push(ClassReport {
                representative: class.representative,
                members: class.members,
                witnesses: witnesses.into_iter().flatten().collect(),
            });
        }
        Ok(AssignmentReport {
            assignment: self.assignment.clone(),
            count: out.len(),
            classes: out,
        })
    }
}

/// Symbolic decision for one pair: a re-verified witness, or `None` after
/// exhausting the search space.
pub fn equivalent(
    db: &Database,
    case: &CaseDecl,
    tau_bar: &GroupElement,
    omega_bar: &GroupElement,
    asg: &Assignment,
) -> Result<Option<Witness>, GyrationError> {
    let sys = CaseSystem::new(db, case, asg)?;
    match sys.equivalent(tau_bar, omega_bar) {
        Some(w) => {
            sys.verify(tau_bar, omega_bar, &w)?;
            Ok(Some(w))
        }
        None => Ok(None),
    }
}

/// One class of twists.
#[derive(Debug, Clone)]
pub struct ClassReport {
    pub representative: GroupElement,
    pub members: Vec<GroupElement>,
    /// For each member linked directly to the representative, the witness.
    pub witnesses: Vec<(GroupElement, Witness)>,
}

/// The classification of one case under one parameter assignment.
#[derive(Debug, Clone)]
pub struct AssignmentReport {
    pub assignment: Assignment,
    pub classes: Vec<ClassReport>,
    pub count: usize,
}

/// The classification of one case over every relevant parameter assignment.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub plane: Plane,
    pub k: u32,
    pub twist_group: TwistGroup,
    /// Parameters that influence the result.
    pub params: Vec<Arc<str>>,
    pub per_assignment: Vec<AssignmentReport>,
    /// Set when the twist group is trivial and nothing was computed.
    pub trivial: bool,
    /// Set when the case rests on the full-image premise for twists.
    pub assumes_full_image: bool,
}

impl StabilityReport {
    /// Distinct counts, each with the assignments achieving it.
    pub fn counts(&self) -> BTreeMap<usize, Vec<Assignment>> {
        let mut out: BTreeMap<usize, Vec<Assignment>> = BTreeMap::new();
        for a in &self.per_assignment {
            out.entry(a.count).or_default().push(a.assignment.clone());
        }
        out
    }

    /// Gyration stable: exactly one homotopy type under every assignment.
    pub fn gsi(&self) -> bool {
        self.per_assignment.iter().all(|a| a.count == 1)
    }

    /// `1` for a stable case, otherwise a summary such as `2 [xi=1]; 3 [xi=5]`.
    pub fn count_summary(&self) -> String {
        if self.trivial {
            return "1 (trivial twist group)".into();
        }
        let counts = self.counts();
        if counts.len() == 1 {
            let c = counts.keys().next().expect("one count");
            return if self.params.is_empty() {
                c.to_string()
            } else {
                format!("{c} (all assignments)")
            };
        }
        counts
            .iter()
            .map(|(c, asgs)| {
                let list: Vec<String> = asgs.iter().map(|a| a.to_string()).collect();
                format!("{c} [{}]", list.join("; "))
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn to_json(&self, db: &Database) -> Value {
        let dims_t = Dims::new(2 * self.plane.m() + self.k - 2, 2 * self.plane.m() - 1);
        let dims_l = Dims::new(self.plane.m() + self.k - 1, self.plane.m());
        let el = |e: &GroupElement, d: Dims| -> Value {
            json!({
                "coords": e.coords(),
                "expr": element_expr(db, e, d).map(|x| x.to_string()).unwrap_or_default(),
            })
        };
        let records: Vec<Value> = self
            .per_assignment
            .iter()
            .map(|a| {
                json!({
                    "plane": self.plane.name(),
                    "k": self.k,
                    "assignment": assignment_json(&a.assignment),
                    "class_representatives": a.classes.iter().map(|c| el(&c.representative, dims_t)).collect::<Vec<_>>(),
                    "classes": a.classes.iter().map(|c| c.members.iter().map(|m| el(m, dims_t)).collect::<Vec<_>>()).collect::<Vec<_>>(),
                    "witnesses": a.classes.iter().flat_map(|c| c.witnesses.iter().map(|(m, w)| json!({
                        "member": el(m, dims_t),
                        "representative": el(&c.representative, dims_t),
                        "lambda": el(&w.lambda, dims_l),
                        "sign": w.sign,
                    }))).collect::<Vec<_>>(),
                    "count": a.count,
                    "gsi": a.count == 1,
                })
            })
            .collect();
        json!({
            "plane": self.plane.name(),
            "k": self.k,
            "twist_group": self.twist_group.to_string(),
            "trivial_twist_group": self.trivial,
            "assumes_full_twist_image": self.assumes_full_image,
            "params": self.params.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "records": records,
            "gsi": self.gsi(),
            "summary": self.count_summary(),
        })
    }

    pub fn render(&self, db: &Database) -> String {
        let mut s = String::new();
        s += &format!("{} k={}: twist group {}\n", self.plane, self.k, self.twist_group);
        if self.trivial {
            s += "count 1 (trivial twist group)\nGSI: yes\n";
            return s;
        }
        if self.assumes_full_image {
            s += "assumption: every element of the twist-image group arises from some twisting\n";
        }
        let dims_t = Dims::new(2 * self.plane.m() + self.k - 2, 2 * self.plane.m() - 1);
        for a in &self.per_assignment {
            if !a.assignment.is_empty() {
                s += &format!("assignment {}:\n", a.assignment);
            }
            s += &format!("  {} class(es)\n", a.count);
            for c in &a.classes {
                let members: Vec<String> = c.members.iter().map(|m| m.to_string()).collect();
                let rep = element_expr(db, &c.representative, dims_t).map(|e| e.to_string()).unwrap_or_default();
                s += &format!("    [{rep}] {{{}}}\n", members.join(", "));
            }
        }
        let summary = self.count_summary();
        if self.gsi() {
            s += &format!("GSII = {summary}\nGSI: yes\n");
        } else {
            s += &format!("GSII = {summary}\nGSI: no\n");
        }
        s
    }
}

pub fn assignment_json(a: &Assignment) -> Value {
    let mut m = serde_json::Map::new();
    for (n, v) in a.entries() {
        let v = match v {
            crate::reldb::ParamValue::Int(i) => json!(i),
            crate::reldb::ParamValue::Element(e) => json!(e.to_string()),
        };
        m.insert(n.to_string(), v);
    }
    Value::Object(m)
}

/// Restricts `assignments` to those agreeing with `pins` on shared names.
pub fn filter_pinned(assignments: Vec<Assignment>, pins: &Assignment) -> Vec<Assignment> {
    assignments
        .into_iter()
        .filter(|a| {
            pins.entries()
                .iter()
                .all(|(n, v)| a.get(n).is_none_or(|w| w == v))
        })
        .collect()
}

/// The assignments relevant to a case.
pub fn case_params(db: &Database, case: &CaseDecl) -> Vec<Arc<str>> {
    match criterion_expressions(db, case) {
        Ok(exprs) => relevant_params(db, &exprs),
        Err(_) => Vec::new(),
    }
}

/// Classifies a declared case under every relevant assignment matching `pins`.
pub fn classify(db: &Database, case: &CaseDecl, pins: &Assignment) -> Result<StabilityReport, GyrationError> {
    let params = case_params(db, case);
    let assignments = filter_pinned(db.assignments(Some(&params)), pins);
    let mut per_assignment = Vec::new();
    for asg in &assignments {
        per_assignment.push(CaseSystem::new(db, case, asg)?.classify()?);
    }
    Ok(StabilityReport {
        plane: case.plane,
        k: case.k,
        twist_group: case.twist_group,
        params,
        per_assignment,
        trivial: false,
        assumes_full_image: matches!(case.twist_image, TwistImage::Full),
    })
}

/// Classifies `(plane, k)`: trivial twist groups need no computation.
pub fn classify_k(db: &Database, plane: Plane, k: u32, pins: &Assignment) -> Result<StabilityReport, GyrationError> {
    check_range(plane, k)?;
    if bott_twist_group(k) == TwistGroup::Trivial {
        return Ok(trivial_report(plane, k));
    }
    classify(db, find_case(db, plane, k)?, pins)
}

fn trivial_report(plane: Plane, k: u32) -> StabilityReport {
    let one = AssignmentReport {
        assignment: Assignment::empty(),
        classes: Vec::new(),
        count: 1,
    };
    StabilityReport {
        plane,
        k,
        twist_group: TwistGroup::Trivial,
        params: Vec::new(),
        per_assignment: vec![one],
        trivial: true,
        assumes_full_image: false,
    }
}

/// One row of the summary table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub manifold: String,
    pub k: Option<u32>,
    pub gsi: bool,
    pub count: String,
    /// Distinct counts with the assignments achieving them.
    pub counts: Vec<(usize, Vec<String>)>,
    pub note: String,
}

/// The fixed row order of the main table.
pub const MAIN_ROWS: [(Plane, u32); 9] = [
    (Plane::CP2, 2),
    (Plane::HP2, 2),
    (Plane::HP2, 4),
    (Plane::OP2, 2),
    (Plane::OP2, 4),
    (Plane::OP2, 8),
    (Plane::OP2, 9),
    (Plane::OP2, 10),
    (Plane::OP2, 12),
];

/// Every case of the main table, then the trivial-twist rows, then spheres.
pub fn table(db: &Database) -> Result<Vec<TableRow>, GyrationError> {
    let mut rows = Vec::new();
    let row = |r: &StabilityReport, note: &str| TableRow {
        manifold: r.plane.to_string(),
        k: Some(r.k),
        gsi: r.gsi(),
        count: r.count_summary(),
        counts: r
            .counts()
            .into_iter()
            .map(|(c, a)| (c, a.iter().map(|x| x.to_string()).collect()))
            .collect(),
        note: note.to_string(),
    };
    for (plane, k) in MAIN_ROWS {
        let r = classify_k(db, plane, k, &Assignment::empty())?;
        let note = if r.assumes_full_image { "full twist image assumed" } else { "" };
        rows.push(row(&r, note));
    }
    for plane in Plane::all() {
        for k in 2..=2 * plane.m() - 2 {
            if bott_twist_group(k) == TwistGroup::Trivial {
                rows.push(row(&trivial_report(plane, k), ""));
            }
        }
    }
    rows.push(TableRow {
        manifold: "S^n".into(),
        k: None,
        gsi: true,
        count: "1".into(),
        counts: vec![(1, Vec::new())],
        note: "top cell attaches to a point; every gyration is S^(n+k-1)".into(),
    });
    Ok(rows)
}

pub fn render_table(rows: &[TableRow]) -> String {
    let mut s = format!("{:<6} {:>3}  {:<4} {}\n", "plane", "k", "GSI", "GSII");
    for r in rows {
        let k = r.k.map(|k| k.to_string()).unwrap_or_else(|| "any".into());
        let gsi = if r.gsi { "yes" } else { "no" };
        let note = if r.note.is_empty() { String::new() } else { format!("  ({})", r.note) };
        s += &format!("{:<6} {:>3}  {:<4} {}{}\n", r.manifold, k, gsi, r.count, note);
    }
    s
}

/// Outcome of checking the `k = 2` classification for one plane.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremARow {
    pub plane: Plane,
    pub expected: &'static str,
    pub holds: bool,
    pub assignments: usize,
    pub detail: String,
}

/// For `k = 2`: all twists equivalent for CP2; only equal twists for HP2 and
/// OP2; under every parameter assignment.
pub fn theorem_a_check(db: &Database) -> Result<Vec<TheoremARow>, GyrationError> {
    let mut out = Vec::new();
    for plane in Plane::all() {
        let case = find_case(db, plane, 2)?;
        let all = plane == Plane::CP2;
        let assignments = db.assignments(Some(&case_params(db, case)));
        let mut holds = true;
        let mut detail = String::new();
        for asg in &assignments {
            let sys = CaseSystem::new(db, case, asg)?;
            for t in &sys.twist_elements {
                for o in &sys.twist_elements {
                    let eq = sys.equivalent(t, o).is_some();
                    let want = all || t == o;
                    if eq != want && holds {
                        holds = false;
                        detail = format!("({t}, {o}) equivalent={eq} under {asg}");
                    }
                }
            }
        }
        out.push(TheoremARow {
            plane,
            expected: if all { "all pairs" } else { "diagonal only" },
            holds,
            assignments: assignments.len(),
            detail,
        });
    }
    Ok(out)
}

/// A human-readable account of one equivalence question.
pub fn explain(
    db: &Database,
    case: &CaseDecl,
    tau_bar: &GroupElement,
    omega_bar: &GroupElement,
    asg: &Assignment,
) -> Result<String, GyrationError> {
    let sys = CaseSystem::new(db, case, asg)?;
    let (m, k) = (case.m(), case.k);
    let tdims = case.twist_dims();
    let ldims = case.lambda_dims();
    let gdims = case.target_dims();
    let show = |e: &GroupElement, d: Dims| element_expr(db, e, d).map(|x| x.to_string()).unwrap_or_default();
    let mut s = String::new();
    s += &format!("{} k={}", case.plane, k);
    if !asg.is_empty() {
        s += &format!(" with {asg}");
    }
    s += "\n";
    s += &format!("taubar   = {} {} in {tdims}\n", show(tau_bar, tdims), tau_bar);
    s += &format!("omegabar = {} {} in {tdims}\n", show(omega_bar, tdims), omega_bar);
    if tau_bar == omega_bar {
        s += "identity witness lambda = 0, sign +1\n";
        return Ok(s);
    }
    let Some(w) = sys.equivalent(tau_bar, omega_bar) else {
        s += &format!("no witness; search space {} x {{+1, -1}} exhausted\n", describe_space(db, &sys, ldims));
        return Ok(s);
    };
    sys.verify(tau_bar, omega_bar, &w)?;
    let phi_tau = attaching_map(db, case, tau_bar, asg)?;
    let phi_omega = attaching_map(db, case, omega_bar, asg)?;
    let (comp, wh, mut trace) = lambda_terms(db, case, &w.lambda, asg)?;
    let (_, t1) = normalize_traced(&compose(&case.f, &element_expr(db, tau_bar, tdims)?)?, db, asg)?;
    let (_, t2) = normalize_traced(&compose(&case.f, &element_expr(db, omega_bar, tdims)?)?, db, asg)?;
    trace.merge(&t1);
    trace.merge(&t2);
    let f = &case.f;
    let sign = if w.sign > 0 { "+" } else { "-" };
    s += &format!("witness lambda = {} {} in {ldims}, sign {sign}1\n", show(&w.lambda, ldims), w.lambda);
    s += &format!("criterion in {gdims}:\n");
    s += &format!("  {f}.taubar                = {:<40} {}\n", show(&phi_tau.a, gdims), phi_tau.a);
    s += &format!("  lambda.S^{}({f})          = {:<40} {}\n", k - 1, show(&comp, gdims), comp);
    s += &format!("  [iota({m}), lambda]        = {:<40} {}\n", show(&wh, gdims), wh);
    let total = phi_tau.a.add(&comp)?.add(&wh)?;
    s += &format!("  sum                       = {:<40} {}\n", show(&total, gdims), total);
    let target = phi_omega.a.scale(w.sign);
    s += &format!("  {sign}{f}.omegabar              = {:<40} {}\n", show(&target, gdims), target);
    if !trace.relations.is_empty() {
        s += "relations used:\n";
        for &r in &trace.relations {
            let rel = &db.relations[r];
            let cite = rel.citation.as_deref().unwrap_or("no citation");
            s += &format!("  {rel}  [{cite}]\n");
        }
    }
    Ok(s)
}

fn describe_space(db: &Database, sys: &CaseSystem<'_>, ldims: Dims) -> String {
    let size = sys.search_size();
    if size <= 8 {
        let mut items = Vec::new();
        crate::abelian::for_each_vector(&sys.bounds, |c| {
            let e = GroupElement::new(sys.lambda_group.clone(), c.to_vec()).expect("length matches");
            items.push(element_expr(db, &e, ldims).map(|x| x.to_string()).unwrap_or_default());
        });
        format!("{{{}}}", items.join(", "))
    } else {
        let names = sys
            .lambda_group
            .factors()
            .iter()
            .zip(&sys.bounds)
            .map(|(f, b)| format!("{} mod {b}", f.name))
            .collect::<Vec<_>>();
        format!("{size} lambdas ({})", names.join(", "))
    }
}
