use std::sync::Arc;

use gyration::normalize::{
    is_suspension_expr, normalize, normalize_traced, relevant_assignments, relevant_params, NormalizeError, Normalizer,
};
use gyration::reldb::{parse, parse_expr, Assignment, Database, ParamValue};

fn e(db: &Database, text: &str) -> gyration::expr::Expr {
    parse_expr(db, text, None).unwrap()
}

fn coords(db: &Database, text: &str, asg: &Assignment) -> Vec<i64> {
    normalize(&e(db, text), db, asg).unwrap().coords().to_vec()
}

fn ints(pairs: &[(&str, i64)]) -> Assignment {
    let mut a = Assignment::empty();
    for (n, v) in pairs {
        a.set(Arc::from(*n), ParamValue::Int(*v));
    }
    a
}

#[test]
fn eta_nu_is_snu_prime_eta() {
    let db = Database::shipped();
    let none = Assignment::empty();
    assert_eq!(coords(&db, "eta(4).nu(5)", &none), vec![0, 1]);
    // With [iota_4, eta_4] the sum vanishes: the HP2 k=2 correction is null.
    assert_eq!(coords(&db, "eta(4).nu(5) + wh(iota(4), eta(4))", &none), vec![0, 0]);
}

#[test]
fn whitehead_square_of_iota4() {
    let db = Database::shipped();
    assert_eq!(coords(&db, "wh(iota(4), iota(4))", &Assignment::empty()), vec![2, 3, 0]);
}

#[test]
fn basis_composites_resolve_directly() {
    let db = Database::shipped();
    let none = Assignment::empty();
    assert_eq!(coords(&db, "sigma(8).zeta(15)", &none), vec![1, 0, 0, 0, 0, 0]);
    assert_eq!(coords(&db, "3*Snu'(4).eta(7)", &none), vec![0, 1]);
    assert_eq!(coords(&db, "-nu(4)", &none), vec![-1, 0, 0]);
}

#[test]
fn ssigma_prime_sigma_eta() {
    let db = Database::shipped();
    let none = Assignment::empty();
    assert_eq!(coords(&db, "Ssigma'(8).sigma(15).eta(22)", &none), vec![0, 0, 1, 1, 0, 0]);
    assert_eq!(coords(&db, "2*Ssigma'(8).nubar(15)", &none), vec![0; 6]);
}

#[test]
fn alpha1_alpha2_dies_in_the_3_primary_part() {
    let db = Database::shipped();
    let (v, trace) = normalize_traced(&e(&db, "alpha1(8).alpha2(11)"), &db, &Assignment::empty()).unwrap();
    // -3 * beta1(8) with beta1 of order 3.
    assert!(v.is_zero());
    assert_eq!(trace.relations.len(), 1);
    assert_eq!(db.relations[trace.relations[0]].lhs.to_string(), "alpha1(8).alpha2(11)");
}

#[test]
fn coprime_orders_kill_composites() {
    let db = Database::shipped();
    let none = Assignment::empty();
    // nubar(8).nu(16) has order 2; alpha1t(19) has order 5.
    assert_eq!(coords(&db, "nubar(8).nu(16).alpha1t(19)", &none), vec![0; 6]);
}

#[test]
fn parameters_enter_through_relations() {
    let db = Database::shipped();
    for xi in [1, 3, 5, 7] {
        let v = coords(&db, "Ssigma'(8).nuh(15)", &ints(&[("xi", xi)]));
        assert_eq!(v, vec![0, xi, 0, 0, 0]);
    }
    let err = normalize(&e(&db, "Ssigma'(8).nuh(15)"), &db, &Assignment::empty()).unwrap_err();
    assert_eq!(err, NormalizeError::UnassignedParameter("xi".into()));
}

#[test]
fn whitehead_with_sigma_depends_on_the_sign() {
    let db = Database::shipped();
    assert_eq!(coords(&db, "wh(iota(8), sigma(8))", &ints(&[("s8", 1)])), vec![2, 7, 0, 0, 0, 0]);
    assert_eq!(coords(&db, "wh(iota(8), sigma(8))", &ints(&[("s8", -1)])), vec![14, 1, 0, 0, 0, 0]);
}

#[test]
fn trace_records_relations_and_parameters() {
    let db = Database::shipped();
    let (_, t) = normalize_traced(&e(&db, "wh(iota(8), nuh(8))"), &db, &ints(&[("xi", 3)])).unwrap();
    assert_eq!(t.params, vec![Arc::<str>::from("xi")]);
    let lhs: Vec<String> = t.relations.iter().map(|&r| db.relations[r].lhs.to_string()).collect();
    assert!(lhs.contains(&"wh(iota(8), nuh(8))".to_string()), "{lhs:?}");
    assert!(lhs.contains(&"Ssigma'(8).nuh(15)".to_string()), "{lhs:?}");
}

#[test]
fn relevant_parameters_are_found_by_probing() {
    let db = Database::shipped();
    let x = e(&db, "wh(iota(8), nuh(8))");
    assert_eq!(relevant_params(&db, std::slice::from_ref(&x)), vec![Arc::<str>::from("xi")]);
    assert_eq!(relevant_assignments(&db, &[x]).len(), 4);
    assert_eq!(relevant_assignments(&db, &[e(&db, "eta(4).nu(5)")]).len(), 1);
}

#[test]
fn suspension_queries() {
    let db = Database::shipped();
    let none = Assignment::empty();
    assert!(is_suspension_expr(&e(&db, "eta(8).sigma(9)"), &db, &none).unwrap());
    assert!(!is_suspension_expr(&e(&db, "sigma(8).eta(15)"), &db, &none).unwrap());
    assert!(is_suspension_expr(&e(&db, "iota(8)"), &db, &none).unwrap());
    assert!(is_suspension_expr(&e(&db, "Ssigma'(8).eta(15) + eps(8)"), &db, &none).unwrap());
}

#[test]
fn undeclared_groups_and_stuck_chains_are_reported() {
    let db = Database::shipped();
    let none = Assignment::empty();
    assert!(matches!(
        normalize(&e(&db, "eta(5)"), &db, &none),
        Err(NormalizeError::UndeclaredGroup(_))
    ));
    let text = "family iota stem 0 min 1 susp 2 identity\n\
                family eta stem 1 min 2 susp 3 order 2 order_from 3\n\
                family nu stem 3 min 4 susp 5\n\
                group pi(8 -> 4) = Z/2<nu(4).eta(7)>\n";
    let small = parse(text).unwrap();
    let x = parse_expr(&small, "eta(4).nu(5)", None).unwrap();
    assert!(matches!(normalize(&x, &small, &none), Err(NormalizeError::Stuck { .. })));
}

#[test]
fn step_budget_stops_runaway_rewriting() {
    let text = "family iota stem 0 min 1 susp 2 identity\n\
                family eta stem 1 min 2 susp 3 order 2 order_from 3\n\
                family a stem 1 min 4 susp 5 order 2\n\
                group pi(5 -> 4) = Z/2<eta(4)>\n\
                rel a(4) = a(4) + eta(4) - eta(4)\n";
    let db = parse(text).unwrap();
    let none = Assignment::empty();
    let x = parse_expr(&db, "a(4)", None).unwrap();
    let err = Normalizer::new(&db, &none).budget(50).run(&x).unwrap_err();
    assert!(matches!(err, NormalizeError::Budget { budget: 50, .. }), "{err}");
}
