//! Randomized and exhaustive-over-bundled-systems invariants.

use std::collections::BTreeMap;

use flatness_core::backtest::backward_flatness_test;
use flatness_core::flatout::{
    check_dynamics, derive_forward_flat_output, shift_expr, verify_flat_output,
    FlatOutputCandidate, Parameterization, ShiftAlgebra,
};
use flatness_core::geomtest::forward_flatness_test;
use flatness_core::jacrank::{check_rank_conditions, top_block_of_fx_is_zero, RankMode};
use flatness_core::sysmodel::{build_associated, load_system, SystemFile, SystemModel};
use flatness_core::systems::{EXAMPLE1, VALID};
use flatness_core::trajcheck::{check_correspondence, check_parameterization_roundtrip};
use flatness_expr::{parse_expr_with, RationalExpr, Var};
use proptest::prelude::*;

fn e(s: &str) -> RationalExpr {
    parse_expr_with(s, |_| true).unwrap()
}

const COORDS: [&str; 10] = [
    "x1", "x2", "x3", "x4", "u1", "u2", "u1@1", "u2@2", "zeta1@-1", "zeta2@-2",
];

fn expr_strategy() -> impl Strategy<Value = RationalExpr> {
    let term = (-3i64..=3, 0..COORDS.len(), 1u32..=2);
    (
        prop::collection::vec(term, 1..4),
        prop::option::of(0..COORDS.len()),
    )
        .prop_map(|(terms, den)| {
            let num: RationalExpr = terms
                .into_iter()
                .map(|(c, i, k)| &RationalExpr::int(c) * &e(COORDS[i]).pow(k))
                .sum();
            match den {
                Some(i) => &num / &(&e(COORDS[i]) + &RationalExpr::int(2)),
                None => num,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn backward_shift_undoes_forward_shift(x in expr_strategy(), k in 1i32..=2) {
        let alg = ShiftAlgebra::new(&load_system(EXAMPLE1).unwrap()).unwrap();
        let up = alg.shift(&x, k).unwrap();
        prop_assert_eq!(alg.shift(&up, -k).unwrap(), x.clone());
        let down = alg.shift(&x, -k).unwrap();
        prop_assert_eq!(alg.shift(&down, k).unwrap(), x);
    }
}

fn with_extension(g: [&str; 2]) -> SystemModel {
    let base = load_system(EXAMPLE1).unwrap().to_file();
    SystemModel::from_file(&SystemFile {
        g: Some(g.iter().map(|s| s.to_string()).collect()),
        inverse: None,
        ..base
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn verdicts_do_not_depend_on_the_extension(a in -3i64..=3, b in -3i64..=3, c in -3i64..=3, d in -3i64..=3) {
        let g1 = format!("x1 + {a}*x4 + {b}*u1");
        let g2 = format!("x2 + {c}*x3*u1 + {d}*u2");
        let s = with_extension([&g1, &g2]);
        prop_assert!(!forward_flatness_test(&s).unwrap().forward_flat);
        let v = backward_flatness_test(&s, false, 0).unwrap();
        prop_assert!(v.backward_flat);
        prop_assert_eq!(v.forward_record.dims.clone(), vec![2, 3, 5, 6]);
    }
}

/// Every certified parameterization found for a bundled system: derived
/// forward outputs and derived backward outputs.
fn certified() -> Vec<(SystemModel, FlatOutputCandidate, Parameterization)> {
    let mut out = Vec::new();
    for (_, text) in VALID {
        let s = load_system(text).unwrap();
        let n = s.n() as u32;
        let rec = forward_flatness_test(&s).unwrap();
        if rec.forward_flat {
            let y = derive_forward_flat_output(&s, &rec, 3).unwrap();
            let p = verify_flat_output(&s, &y, 0, n).unwrap();
            assert!(p.r1.iter().all(|&r| r == 0));
            out.push((s.clone(), y, p));
        }
        let v = backward_flatness_test(&s, true, 3).unwrap();
        if let Some(y) = v.derived_output {
            let p = verify_flat_output(&s, &y, n, 0).unwrap();
            assert!(p.r2.iter().all(|&r| r == 0));
            out.push((s.clone(), y, p));
            let a = v.associated;
            let yhat = v.associated_output.unwrap();
            let q = verify_flat_output(&a, &yhat, 0, n).unwrap();
            out.push((a, yhat, q));
        }
    }
    assert!(out.len() >= 7);
    out
}

#[test]
fn certified_parameterizations_satisfy_identities() {
    for (s, y, p) in certified() {
        check_dynamics(&s.complete().unwrap(), &p).unwrap();
        // round trip through the public shift operator
        let mut back = BTreeMap::new();
        for x in p.f_x.iter().chain(&p.f_u) {
            for v in x.vars() {
                let j = p.outputs.iter().position(|o| o.name() == v.name()).unwrap();
                back.insert(
                    v.clone(),
                    shift_expr(&y.components[j], v.shift(), &s).unwrap(),
                );
            }
        }
        let targets: Vec<Var> = s.states.iter().chain(&s.inputs).cloned().collect();
        for (t, x) in targets.iter().zip(p.f_x.iter().chain(&p.f_u)) {
            assert_eq!(
                x.substitute(&back).unwrap(),
                RationalExpr::var(t.clone()),
                "{}",
                s.name
            );
        }
        let r = check_rank_conditions(&p, RankMode::General);
        assert!(r.top_ranks_equal, "{}: {:?}", s.name, r.ranks());
        assert!(top_block_of_fx_is_zero(&p), "{}", s.name);
        assert!(
            check_parameterization_roundtrip(&s, &p, &y, 8, 10, 3)
                .unwrap()
                .passed,
            "{}",
            s.name
        );
    }
}

#[test]
fn correspondence_holds_for_bundled_systems() {
    for (name, text) in VALID {
        let s = load_system(text).unwrap();
        assert!(
            check_correspondence(&s, 10, 100, 0).unwrap().passed,
            "{name}"
        );
    }
}

#[test]
fn association_is_an_involution() {
    for (name, text) in VALID {
        let s = load_system(text).unwrap().complete().unwrap();
        let aa = build_associated(&build_associated(&s).unwrap()).unwrap();
        let back: BTreeMap<Var, Var> = aa
            .states
            .iter()
            .cloned()
            .zip(s.states.iter().cloned())
            .chain(aa.inputs.iter().cloned().zip(s.inputs.iter().cloned()))
            .collect();
        let f: Vec<RationalExpr> = aa.f.iter().map(|x| x.rename(&back)).collect();
        let g: Vec<RationalExpr> =
            aa.g.clone()
                .unwrap()
                .iter()
                .map(|x| x.rename(&back))
                .collect();
        assert_eq!(f, s.f, "{name}");
        assert_eq!(Some(g), s.g, "{name}");
    }
}

#[test]
fn backward_verdict_is_forward_verdict_of_associate() {
    for (name, text) in VALID {
        let s = load_system(text).unwrap();
        let v = backward_flatness_test(&s, false, 0).unwrap();
        let direct = forward_flatness_test(&build_associated(&s).unwrap()).unwrap();
        assert_eq!(v.backward_flat, direct.forward_flat, "{name}");
    }
}
