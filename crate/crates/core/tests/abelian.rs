use std::collections::BTreeSet;
use std::sync::Arc;

use gyration::abelian::{
    enumerate, exponent, normalize, orbit_partition, reachable_set, subgroup_contains, AbelianError, GroupElement,
    GroupPresentation, Subgroup,
};
use gyration::normalize::normalize as normalize_expr;
use gyration::reldb::{Assignment, Database};

fn group(factors: &[(&str, u64)]) -> Arc<GroupPresentation> {
    Arc::new(GroupPresentation::new(factors.iter().map(|(n, o)| (*n, *o))).unwrap())
}

fn el(g: &Arc<GroupPresentation>, coords: &[i64]) -> GroupElement {
    GroupElement::new(g.clone(), coords.to_vec()).unwrap()
}

#[test]
fn reduction_is_componentwise() {
    let pi8_4 = group(&[("nu4.eta7", 2), ("Snu'.eta7", 2)]);
    assert_eq!(el(&pi8_4, &[3, 2]).coords(), &[1, 0]);
    let z24 = group(&[("nu5", 24)]);
    assert_eq!(el(&z24, &[24]).coords(), &[0]);
    let pi10_7 = group(&[("nuh7", 8), ("alpha1", 3)]);
    assert_eq!(el(&pi10_7, &[9, 4]).coords(), &[1, 1]);
    assert_eq!(normalize(&el(&pi10_7, &[-1, -1])).coords(), &[7, 2]);
}

#[test]
fn infinite_factors_keep_their_coordinate() {
    let pi7_4 = group(&[("nu4", 0), ("Snu'", 4), ("a", 3)]);
    assert_eq!(el(&pi7_4, &[-5, 6, 7]).coords(), &[-5, 2, 1]);
}

#[test]
fn arithmetic_examples() {
    let v4 = group(&[("a", 2), ("b", 2)]);
    assert!(el(&v4, &[1, 0]).add(&el(&v4, &[1, 0])).unwrap().is_zero());
    let g = group(&[("a", 8), ("b", 3)]);
    assert_eq!(el(&g, &[1, 0]).scale(3).coords(), &[3, 0]);
    assert_eq!(el(&g, &[1, 1]).neg().coords(), &[7, 2]);
    assert_eq!(el(&g, &[2, 1]).sub(&el(&g, &[5, 2])).unwrap().coords(), &[5, 2]);
}

#[test]
fn mixing_presentations_is_an_error() {
    let a = group(&[("a", 2)]);
    let b = group(&[("b", 2)]);
    assert_eq!(el(&a, &[1]).add(&el(&b, &[1])), Err(AbelianError::PresentationMismatch));
    assert!(matches!(
        GroupElement::new(a.clone(), vec![1, 1]),
        Err(AbelianError::LengthMismatch { expected: 1, got: 2 })
    ));
}

#[test]
fn presentation_rejects_bad_factors() {
    assert!(matches!(
        GroupPresentation::new([("a", 2u64), ("a", 3)]),
        Err(AbelianError::DuplicateGenerator(_))
    ));
    assert!(matches!(GroupPresentation::new([("a", 1u64)]), Err(AbelianError::TrivialFactor { .. })));
}

#[test]
fn exponents() {
    let pi7_4 = group(&[("nu4", 0), ("Snu'", 4), ("a", 3)]);
    assert_eq!(exponent(&pi7_4), 12);
    assert_eq!(exponent(&group(&[("a", 2), ("b", 2)])), 2);
    let pi19_8 = group(&[("zeta", 8), ("alpha3'", 9), ("alpha1c", 7), ("nubar.nu", 2)]);
    assert_eq!(exponent(&pi19_8), 504);
}

#[test]
fn element_orders() {
    let g = group(&[("a", 8), ("b", 3)]);
    assert_eq!(el(&g, &[2, 0]).order(), 4);
    assert_eq!(el(&g, &[1, 1]).order(), 24);
    assert_eq!(el(&g, &[0, 0]).order(), 1);
    let z = group(&[("x", 0)]);
    assert_eq!(el(&z, &[3]).order(), 0);
}

#[test]
fn enumeration_lists_every_element_once() {
    let g = group(&[("a", 8), ("b", 3)]);
    let all = enumerate(&g).unwrap();
    assert_eq!(all.len(), 24);
    assert_eq!(all.iter().collect::<BTreeSet<_>>().len(), 24);
    assert_eq!(enumerate(&group(&[("x", 0)])), Err(AbelianError::Infinite));
    assert_eq!(enumerate(&Arc::new(GroupPresentation::trivial())).unwrap().len(), 1);
}

#[test]
fn reachable_sets() {
    let g = group(&[("a", 8), ("b", 3)]);
    let r = reachable_set(&[el(&g, &[2, 0])], &[8]).unwrap();
    let got: Vec<_> = r.keys().map(|e| e.coords().to_vec()).collect();
    assert_eq!(got, vec![vec![0, 0], vec![2, 0], vec![4, 0], vec![6, 0]]);
    assert_eq!(r[&el(&g, &[6, 0])], vec![3]);

    let v4 = group(&[("a", 2), ("b", 2)]);
    let r = reachable_set(&[el(&v4, &[1, 0]), el(&v4, &[0, 1])], &[2, 2]).unwrap();
    assert_eq!(r.len(), 4);

    assert_eq!(reachable_set(&[], &[]), Err(AbelianError::NoImages));
    assert!(matches!(
        reachable_set(&[el(&g, &[1, 0])], &[2, 2]),
        Err(AbelianError::BoundsMismatch { .. })
    ));
    assert_eq!(reachable_set(&[el(&g, &[1, 0])], &[0]), Err(AbelianError::ZeroBound(0)));
}

/// The corrections for HP2, k=4 with the '+' sign: nu_4 goes to (3, 1, 0)
/// and Snu' to (4, 0, 0) in Z/8 + Z/3 + Z/3. Checked against a plain loop.
#[test]
fn hp2_k4_correction_set_matches_a_direct_loop() {
    let target = group(&[("nu4.nuh7", 8), ("nu4.alpha1", 3), ("anon", 3)]);
    let images = [el(&target, &[3, 1, 0]), el(&target, &[4, 0, 0])];
    let r = reachable_set(&images, &[24, 4]).unwrap();
    let mut oracle = BTreeSet::new();
    for x in 0..24i64 {
        for y in 0..4i64 {
            oracle.insert(el(&target, &[3 * x + 4 * y, x, 0]));
        }
    }
    assert_eq!(r.keys().cloned().collect::<BTreeSet<_>>(), oracle);
    // x = 3, y = 0 hits (1, 0, 0): 9 = 1 mod 8 and 3 = 0 mod 3.
    assert!(r.contains_key(&el(&target, &[1, 0, 0])));
    assert_eq!(r.len(), 24);
}

#[test]
fn suspension_subgroup_of_pi16_s8() {
    let db = Database::shipped();
    let asg = Assignment::empty();
    let sub = db.subgroup("susp16").unwrap();
    let ambient = db.group(sub.dims).unwrap().presentation.clone();
    let gens = sub.generators.iter().map(|g| normalize_expr(g, &db, &asg).unwrap()).collect();
    let s = Subgroup::new(ambient.clone(), gens).unwrap();
    // Basis order: sigma.eta, Ssigma'.eta, nubar, eps.
    assert!(!subgroup_contains(&s, &el(&ambient, &[1, 0, 0, 0])));
    assert!(subgroup_contains(&s, &el(&ambient, &[0, 0, 0, 0])));
    assert!(subgroup_contains(&s, &el(&ambient, &[0, 1, 0, 1])));
    assert_eq!(s.span().len(), 8);
}

/// Every shipped subgroup: membership agrees with brute-force closure.
#[test]
fn membership_agrees_with_span_oracle_on_shipped_subgroups() {
    let db = Database::shipped();
    let asg = Assignment::empty();
    for sub in &db.subgroups {
        let ambient = db.group(sub.dims).unwrap().presentation.clone();
        let gens: Vec<GroupElement> = sub.generators.iter().map(|g| normalize_expr(g, &db, &asg).unwrap()).collect();
        let s = Subgroup::new(ambient.clone(), gens.clone()).unwrap();
        // Oracle: all integer combinations with coefficients below the exponent.
        let e = exponent(&ambient) as i64;
        let mut oracle = BTreeSet::from([GroupElement::zero(ambient.clone())]);
        for g in &gens {
            let prev: Vec<_> = oracle.iter().cloned().collect();
            for x in &prev {
                for c in 1..e {
                    oracle.insert(x.add(&g.scale(c)).unwrap());
                }
            }
        }
        for x in enumerate(&ambient).unwrap() {
            assert_eq!(subgroup_contains(&s, &x), oracle.contains(&x), "{} at {x}", sub.name);
        }
    }
}

#[test]
fn orbit_partition_examples() {
    let z2 = group(&[("a", 2)]);
    let pts = enumerate(&z2).unwrap();
    assert_eq!(orbit_partition(&pts, |a, b| a == b).unwrap().len(), 2);

    // a = +-b + 2x (mod 8): parity classes.
    let z24 = group(&[("a", 8), ("b", 3)]);
    let pts = enumerate(&z24).unwrap();
    let classes = orbit_partition(&pts, |p, q| {
        let (a, b) = (p.coords()[0], q.coords()[0]);
        (a - b).rem_euclid(2) == 0 || (a + b).rem_euclid(2) == 0
    })
    .unwrap();
    assert_eq!(classes.len(), 2);

    let z8 = group(&[("a", 8)]);
    let pts = enumerate(&z8).unwrap();
    let classes = orbit_partition(&pts, |p, q| {
        let (a, b) = (p.coords()[0], q.coords()[0]);
        (a - b).rem_euclid(8) == 0 || (a + b).rem_euclid(8) == 0
    })
    .unwrap();
    let got: Vec<Vec<i64>> = classes.iter().map(|c| c.members.iter().map(|m| m.coords()[0]).collect()).collect();
    assert_eq!(got, vec![vec![0], vec![1, 7], vec![2, 6], vec![3, 5], vec![4]]);
    assert_eq!(classes[1].representative.coords(), &[1]);
}

#[test]
fn orbit_partition_rejects_non_equivalences() {
    let z3 = group(&[("a", 3)]);
    let pts = enumerate(&z3).unwrap();
    assert!(matches!(orbit_partition(&pts, |_, _| false), Err(AbelianError::NotReflexive(_))));
    assert!(matches!(
        orbit_partition(&pts, |a, b| a.coords()[0] <= b.coords()[0]),
        Err(AbelianError::NotSymmetric(..))
    ));
}
