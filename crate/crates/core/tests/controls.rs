//! Small systems whose answers are known by hand.

use flatness_core::backtest::{backward_flatness_test, map_output_to_original};
use flatness_core::flatout::{derive_forward_flat_output, verify_flat_output, FlatOutputCandidate};
use flatness_core::geomtest::forward_flatness_test;
use flatness_core::jacrank::{build_extended_jacobian, check_rank_conditions, RankMode};
use flatness_core::sysmodel::{build_associated, load_system, SystemModel};
use flatness_core::systems::{AFFINE, DRIFT_ONLY, INTEGRATOR, UNCONTROLLABLE};
use flatness_core::{Error, RankViolation};
use flatness_expr::{parse_expr_with, ExprMatrix, RationalExpr};

fn e(s: &str) -> RationalExpr {
    parse_expr_with(s, |_| true).unwrap()
}

fn es(items: &[&str]) -> Vec<RationalExpr> {
    items.iter().map(|s| e(s)).collect()
}

#[test]
fn integrator_is_forward_and_backward_flat() {
    let s = load_system(INTEGRATOR).unwrap();
    let fwd = forward_flatness_test(&s).unwrap();
    assert_eq!(fwd.dims, vec![1, 2]);
    assert_eq!(fwd.stop_index, 2);
    assert!(fwd.forward_flat);
    let bwd = backward_flatness_test(&s, true, 3).unwrap();
    assert!(bwd.backward_flat);
    assert_eq!(bwd.associated.f, es(&["v1"]));
    assert_eq!(bwd.associated_output.unwrap().components, es(&["z1"]));
    assert_eq!(bwd.derived_output.unwrap().components, es(&["u"]));
}

#[test]
fn integrator_parameterizations() {
    let s = load_system(INTEGRATOR).unwrap();
    let rec = forward_flatness_test(&s).unwrap();
    let y = derive_forward_flat_output(&s, &rec, 3).unwrap();
    assert_eq!(y.components, es(&["x"]));
    let p = verify_flat_output(&s, &y, 0, 1).unwrap();
    assert_eq!(
        (p.f_x.clone(), p.f_u.clone(), p.f_g.clone()),
        (es(&["y1"]), es(&["y1@1"]), es(&["y1"]))
    );
    assert_eq!((p.r1.clone(), p.r2.clone()), (vec![0], vec![1]));
    let jac = build_extended_jacobian(&p);
    let expected =
        ExprMatrix::from_rows(vec![es(&["1", "0"]), es(&["0", "1"]), es(&["1", "0"])], 2).unwrap();
    assert_eq!(jac, expected);
    let r = check_rank_conditions(&p, RankMode::Forward);
    assert_eq!(r.ranks(), [1, 1, 1, 1]);
    assert!(r.degenerate && r.holds);

    let back = FlatOutputCandidate::new(&s, es(&["u"])).unwrap();
    let q = verify_flat_output(&s, &back, 1, 0).unwrap();
    assert_eq!(
        (q.f_x.clone(), q.f_u.clone()),
        (es(&["y1@-1"]), es(&["y1"]))
    );
    assert_eq!((q.r1.clone(), q.r2.clone()), (vec![1], vec![0]));
}

#[test]
fn uncontrollable_system_is_neither() {
    let s = load_system(UNCONTROLLABLE).unwrap();
    let fwd = forward_flatness_test(&s).unwrap();
    assert_eq!(fwd.dims, vec![1, 2, 2]);
    assert!(!fwd.forward_flat);
    let bwd = backward_flatness_test(&s, true, 3).unwrap();
    assert_eq!(bwd.associated.f, es(&["v1", "z2"]));
    assert_eq!(bwd.forward_record.dims, vec![1, 2, 2]);
    assert!(!bwd.backward_flat);
    assert!(bwd.derived_output.is_none());
}

#[test]
fn affine_chain_is_flat_both_ways() {
    let s = load_system(AFFINE).unwrap();
    assert!(forward_flatness_test(&s).unwrap().forward_flat);
    let bwd = backward_flatness_test(&s, true, 3).unwrap();
    assert!(bwd.backward_flat);
    let y = bwd.derived_output.unwrap();
    let p = verify_flat_output(&s, &y, 2, 2).unwrap();
    assert!(p.r2.iter().all(|&r| r == 0));
}

#[test]
fn drift_only_system_fails_input_rank() {
    assert!(matches!(
        load_system(DRIFT_ONLY),
        Err(Error::Rank(RankViolation::InputRank { rank: 0, m: 1 }))
    ));
}

#[test]
fn forward_flat_systems_have_backward_flat_associates() {
    for s in [
        load_system(INTEGRATOR).unwrap(),
        load_system(AFFINE).unwrap(),
    ] {
        assert!(forward_flatness_test(&s).unwrap().forward_flat);
        let a = build_associated(&s).unwrap();
        assert!(
            backward_flatness_test(&a, false, 0).unwrap().backward_flat,
            "{}",
            s.name
        );
    }
    let mirrored =
        build_associated(&load_system(flatness_core::systems::EXAMPLE1).unwrap()).unwrap();
    assert!(forward_flatness_test(&mirrored).unwrap().forward_flat);
    let again = build_associated(&mirrored).unwrap();
    assert!(
        backward_flatness_test(&again, false, 0)
            .unwrap()
            .backward_flat
    );
}

#[test]
fn user_extension_and_inverse_are_honored() {
    let text = r#"{
        "name": "integrator",
        "states": ["x"],
        "inputs": ["u"],
        "f": ["u"],
        "g": ["x"],
        "inverse": {"xplus": ["p"], "zeta": ["w"], "psi_x": ["w"], "psi_u": ["p"]}
    }"#;
    let s = load_system(text).unwrap();
    let a = build_associated(&s).unwrap();
    assert_eq!(a.f, es(&["v1"]));
    let wrong = text.replace(r#""psi_x": ["w"]"#, r#""psi_x": ["p"]"#);
    assert!(matches!(
        load_system(&wrong),
        Err(Error::InverseMismatch(_))
    ));
}

#[test]
fn output_with_inputs_of_associated_system_is_rejected() {
    let s: SystemModel = load_system(INTEGRATOR).unwrap();
    let a = build_associated(&s).unwrap();
    let yhat = FlatOutputCandidate::new(&a, es(&["z1 + v1"])).unwrap();
    assert!(matches!(
        map_output_to_original(&yhat, &a, &s),
        Err(Error::UnsupportedCandidate(_))
    ));
}
