//! Checks shared by the property tests and the acceptance harness. Each
//! returns a one-line summary on success and a description of the first
//! counterexample on failure.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use gyration::abelian::GroupElement;
use gyration::expr::Expr;
use gyration::gyration::{
    apply_equivalence, attaching_map, case_params, criterion_expressions, element_expr, find_case, CaseSystem, Plane,
    SelfEquivalence,
};
use gyration::normalize::{normalize, relevant_assignments, Normalizer, Strategy};
use gyration::reldb::{parse_sources, validate, Assignment, Database, FailureKind, CASES_RDB, TODA_RDB};

pub type Check = Result<String, String>;

/// Picks uniformly among the applicable moves.
pub struct RandomMove(pub StdRng);

impl Strategy for RandomMove {
    fn choose(&mut self, candidates: usize) -> usize {
        self.0.gen_range(0..candidates)
    }
}

/// Everything the classification normalizes, plus every relation's left side.
pub fn corpus(db: &Database) -> Vec<Expr> {
    let mut exprs = Vec::new();
    for case in &db.cases {
        exprs.extend(criterion_expressions(db, case).expect("shipped cases are covered"));
    }
    exprs.extend(db.relations.iter().map(|r| r.lhs.clone()));
    exprs
}

/// `(expr, assignment)` pairs: each expression under each relevant assignment
/// (at most `per_expr`), completed with defaults for the other parameters.
fn instances(db: &Database, per_expr: usize) -> Vec<(Expr, Assignment)> {
    let mut out = Vec::new();
    for e in corpus(db) {
        for partial in relevant_assignments(db, std::slice::from_ref(&e)).into_iter().take(per_expr) {
            let mut asg = db.default_assignment();
            for (n, v) in partial.entries() {
                asg.set(n.clone(), v.clone());
            }
            out.push((e.clone(), asg));
        }
    }
    out
}

/// Normalizing the canonical expression of a result gives the result again.
pub fn idempotence(db: &Database) -> Check {
    let mut n = 0;
    for (e, asg) in instances(db, usize::MAX) {
        let Ok(v) = normalize(&e, db, &asg) else { continue };
        let back = element_expr(db, &v, e.dims).map_err(|x| x.to_string())?;
        let again = normalize(&back, db, &asg).map_err(|x| format!("{back}: {x}"))?;
        if again != v {
            return Err(format!("{e} under {asg}: {v} then {again}"));
        }
        n += 1;
    }
    Ok(format!("{n} normalizations idempotent"))
}

/// The same result under `orders` random move orders.
pub fn confluence(db: &Database, orders: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut n = 0;
    for (e, asg) in instances(db, 4) {
        let runner = Normalizer::new(db, &asg);
        let Ok((want, _)) = runner.run(&e) else { continue };
        for _ in 0..orders {
            let mut s = RandomMove(StdRng::seed_from_u64(rng.gen()));
            match runner.run_with(&e, &mut s) {
                Ok((got, _)) if got == want => {}
                Ok((got, _)) => return Err(format!("{e} under {asg}: {want} vs {got}")),
                Err(x) => return Err(format!("{e} under {asg}: {x}")),
            }
        }
        n += 1;
    }
    Ok(format!("{n} expressions x {orders} random move orders agree"))
}

/// `order * b = 0` for each basis element `b` of a finite factor.
pub fn order_annihilation(db: &Database) -> Check {
    let asg = db.default_assignment();
    let mut n = 0;
    for g in &db.groups {
        for (b, f) in g.basis.iter().zip(g.presentation.factors()) {
            let v = normalize(b, db, &asg).map_err(|x| format!("{b}: {x}"))?;
            if f.order != 0 && !v.scale(f.order as i64).is_zero() {
                return Err(format!("{} * {b} is {}", f.order, v.scale(f.order as i64)));
            }
            if f.order != 0 && !normalize(&b.scale(f.order as i64), db, &asg).map_err(|x| x.to_string())?.is_zero() {
                return Err(format!("{} * {b} does not normalize to 0", f.order));
            }
            n += 1;
        }
    }
    Ok(format!("{n} basis elements"))
}

/// `equivalent` is reflexive and symmetric, and agrees with the reported
/// partition (so it is transitive), for every case and assignment.
pub fn equivalence_laws(db: &Database) -> Check {
    let mut pairs = 0u64;
    for case in &db.cases {
        for asg in db.assignments(Some(&case_params(db, case))) {
            let sys = CaseSystem::new(db, case, &asg).map_err(|e| e.to_string())?;
            let rep = sys.classify().map_err(|e| e.to_string())?;
            let mut class_of: BTreeMap<&GroupElement, usize> = BTreeMap::new();
            for (i, c) in rep.classes.iter().enumerate() {
                for m in &c.members {
                    class_of.insert(m, i);
                }
            }
            let ts = &sys.twist_elements;
            for (i, t) in ts.iter().enumerate() {
                if sys.equivalent(t, t).is_none() {
                    return Err(format!("{} [{asg}]: {t} not related to itself", case.id()));
                }
                for o in &ts[..i] {
                    let (a, b) = (sys.equivalent(t, o).is_some(), sys.equivalent(o, t).is_some());
                    if a != b {
                        return Err(format!("{} [{asg}]: ({t}, {o}) not symmetric", case.id()));
                    }
                    if a != (class_of[t] == class_of[o]) {
                        return Err(format!("{} [{asg}]: ({t}, {o}) disagrees with the partition", case.id()));
                    }
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!("{pairs} pairs over every case and assignment"))
}

/// The shipped dataset with one edit to each file.
fn mutate(toda: impl Fn(&str) -> String, cases: impl Fn(&str) -> String) -> Result<Database, String> {
    let (t, c) = (toda(TODA_RDB), cases(CASES_RDB));
    if t == TODA_RDB && c == CASES_RDB {
        return Err("mutation did not apply".into());
    }
    parse_sources(&[("toda.rdb", &t), ("cases.rdb", &c)]).map_err(|d| format!("{} parse errors", d.len()))
}

/// The validator passes on the shipped data and catches each seeded mutation.
pub fn validator_mutations(db: &Database) -> Check {
    let failures = validate(db);
    if !failures.is_empty() {
        return Err(format!("shipped dataset: {}", failures[0]));
    }
    let same = |s: &str| s.to_string();
    type Mutation = (&'static str, Result<Database, String>, &'static [FailureKind]);
    let mutations: Vec<Mutation> = vec![
        (
            "order of nuh(7) set to 4",
            mutate(|t| t.replace("Z/8<nuh(7)>", "Z/4<nuh(7)>"), same),
            &[FailureKind::FamilyOrder],
        ),
        (
            "sign of Ssigma'(15) = 2 sigh(15) flipped",
            mutate(|t| t.replace("rel Ssigma'(15) = 2*sigh(15)", "rel Ssigma'(15) = -2*sigh(15)"), same),
            &[FailureKind::SuspensionCoherence, FailureKind::CrossRoute],
        ),
        (
            "eta(15).sigma(16) relation dropped",
            mutate(
                |t| t.lines().filter(|l| !l.starts_with("rel eta(15).sigma(16)")).collect::<Vec<_>>().join("\n"),
                same,
            ),
            &[FailureKind::CaseCoverage],
        ),
        (
            "HP2 k=3 declared with twist Z/2",
            mutate(same, |c| format!("{c}case HP2 k=3 twist=Z/2 image=full f=nu(4)\n")),
            &[FailureKind::BottTable],
        ),
    ];
    for (what, db, kinds) in &mutations {
        let db = db.as_ref().map_err(|e| format!("{what}: {e}"))?;
        let found = validate(db);
        if !found.iter().any(|f| kinds.contains(&f.kind)) {
            return Err(format!("{what}: not caught ({} other failures)", found.len()));
        }
    }
    let dims = mutate(|t| t.replace("rel nubar(15).nu(23) = 0", "rel nubar(15).nu(22) = 0"), same);
    if dims.is_ok() {
        return Err("dimension error in a relation: accepted by the parser".into());
    }
    Ok(format!("shipped clean; {} seeded mutations caught", mutations.len() + 1))
}

/// Reachable-set search against a naive loop over lambda coefficients in
/// `-window..=window` and all four sign choices.
pub fn brute_force_agreement(db: &Database, plane: Plane, k: u32, window: i64) -> Check {
    let case = find_case(db, plane, k).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for asg in db.assignments(Some(&case_params(db, case))) {
        let sys = CaseSystem::new(db, case, &asg).map_err(|e| e.to_string())?;
        let mut lambdas = vec![Vec::new()];
        for _ in sys.lambda_group.factors() {
            lambdas = lambdas
                .into_iter()
                .flat_map(|v: Vec<i64>| (-window..=window).map(move |c| [v.clone(), vec![c]].concat()))
                .collect();
        }
        for t in &sys.twist_elements {
            let phi_t = attaching_map(db, case, t, &asg).map_err(|e| e.to_string())?;
            for o in &sys.twist_elements {
                let phi_o = attaching_map(db, case, o, &asg).map_err(|e| e.to_string())?;
                let mut naive = false;
                for c in &lambdas {
                    let lambda = GroupElement::new(sys.lambda_group.clone(), c.clone()).expect("length matches");
                    for (sign_i, sign_j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        let eps = SelfEquivalence { sign_i, sign_j, lambda: lambda.clone() };
                        let image = apply_equivalence(db, case, &eps, &phi_t, &asg).map_err(|e| e.to_string())?;
                        naive |= image == phi_o || image == phi_o.signed(-1);
                    }
                }
                if sys.equivalent(t, o).is_some() != naive {
                    return Err(format!("{plane} k={k} [{asg}]: ({t}, {o}) search and naive loop disagree"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{plane} k={k}: {checked} pairs agree"))
}

/// Independent class count: twists in a product of cyclic groups embed as
/// the first coordinates of `target`; `t ~ u` when `s*u - t` lies in the span
/// of `corrections` for some sign `s`. Plain integer vectors throughout.
pub fn oracle_count(twist: &[i64], target: &[i64], corrections: &[Vec<i64>]) -> usize {
    let reduce = |v: Vec<i64>| -> Vec<i64> { v.iter().zip(target).map(|(x, m)| x.rem_euclid(*m)).collect() };
    let mut span = std::collections::BTreeSet::from([vec![0; target.len()]]);
    loop {
        let mut next = span.clone();
        for x in &span {
            for d in corrections {
                next.insert(reduce(x.iter().zip(d).map(|(a, b)| a + b).collect()));
            }
        }
        if next.len() == span.len() {
            break;
        }
        span = next;
    }
    let mut points = vec![Vec::new()];
    for m in twist {
        points = points
            .into_iter()
            .flat_map(|p: Vec<i64>| (0..*m).map(move |c| [p.clone(), vec![c]].concat()))
            .collect();
    }
    let embed = |p: &[i64], s: i64| -> Vec<i64> {
        let mut v = vec![0; target.len()];
        for (i, c) in p.iter().enumerate() {
            v[i] = s * c;
        }
        v
    };
    let mut class: Vec<usize> = (0..points.len()).collect();
    for i in 0..points.len() {
        for j in 0..i {
            let linked = [1, -1].iter().any(|&s| {
                let diff = embed(&points[j], s).iter().zip(embed(&points[i], 1)).map(|(a, b)| a - b).collect();
                span.contains(&reduce(diff))
            });
            if linked {
                let (a, b) = (class[i], class[j]);
                for c in class.iter_mut() {
                    if *c == a {
                        *c = b;
                    }
                }
            }
        }
    }
    class.sort();
    class.dedup();
    class.len()
}
