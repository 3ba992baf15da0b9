//! Randomized checks of the canonical form against direct evaluation,
//! printing/parsing, the chain rule and generic rank.

use std::collections::BTreeMap;

use flatness_expr::{parse_expr_with, rational, ExprMatrix, Rational, RationalExpr, Var};
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NAMES: [&str; 3] = ["a", "b", "c@-1"];

#[derive(Clone, Debug)]
enum Tree {
    Var(usize),
    Const(i64),
    Add(Box<Tree>, Box<Tree>),
    Sub(Box<Tree>, Box<Tree>),
    Mul(Box<Tree>, Box<Tree>),
    Div(Box<Tree>, Box<Tree>),
}

fn var(i: usize) -> Var {
    parse_expr_with(NAMES[i], |_| true)
        .unwrap()
        .vars()
        .into_iter()
        .next()
        .unwrap()
}

fn tree() -> impl Strategy<Value = Tree> {
    let leaf = prop_oneof![
        (0..3usize).prop_map(Tree::Var),
        (-4i64..=4).prop_map(Tree::Const)
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Tree::Div(Box::new(a), Box::new(b))),
        ]
    })
}

fn build(t: &Tree) -> Option<RationalExpr> {
    Some(match t {
        Tree::Var(i) => RationalExpr::var(var(*i)),
        Tree::Const(c) => RationalExpr::int(*c),
        Tree::Add(a, b) => &build(a)? + &build(b)?,
        Tree::Sub(a, b) => &build(a)? - &build(b)?,
        Tree::Mul(a, b) => &build(a)? * &build(b)?,
        Tree::Div(a, b) => build(a)?.checked_div(&build(b)?)?,
    })
}

fn eval_tree(t: &Tree, at: &[Rational; 3]) -> Option<Rational> {
    Some(match t {
        Tree::Var(i) => at[*i].clone(),
        Tree::Const(c) => rational(*c, 1),
        Tree::Add(a, b) => eval_tree(a, at)? + eval_tree(b, at)?,
        Tree::Sub(a, b) => eval_tree(a, at)? - eval_tree(b, at)?,
        Tree::Mul(a, b) => eval_tree(a, at)? * eval_tree(b, at)?,
        Tree::Div(a, b) => {
            let d = eval_tree(b, at)?;
            if d.is_zero() {
                return None;
            }
            eval_tree(a, at)? / d
        }
    })
}

fn random_point(rng: &mut ChaCha8Rng) -> [Rational; 3] {
    std::array::from_fn(|_| rational(rng.gen_range(-30..=30), rng.gen_range(1..=7)))
}

fn bindings(at: &[Rational; 3]) -> BTreeMap<Var, Rational> {
    (0..3).map(|i| (var(i), at[i].clone())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonical_form_agrees_with_tree_evaluation(t in tree(), seed in any::<u64>()) {
        let Some(e) = build(&t) else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let at = random_point(&mut rng);
            if let Some(direct) = eval_tree(&t, &at) {
                prop_assert_eq!(e.eval(&bindings(&at)), Some(direct));
            }
        }
    }

    #[test]
    fn printing_then_parsing_is_identity(t in tree()) {
        let Some(e) = build(&t) else { return Ok(()) };
        let back = parse_expr_with(&e.to_string(), |_| true).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn algebraic_identities_are_structural(s in tree(), t in tree(), u in tree()) {
        let (Some(p), Some(q), Some(r)) = (build(&s), build(&t), build(&u)) else { return Ok(()) };
        prop_assert_eq!(&p + &q, &q + &p);
        prop_assert_eq!(&(&p + &q) * &r, &(&p * &r) + &(&q * &r));
        prop_assert!((&p - &p).is_zero());
        if !q.is_zero() {
            prop_assert_eq!((&p * &q).checked_div(&q), Some(p.clone()));
        }
    }

    #[test]
    fn chain_rule(s in tree(), t in tree()) {
        // e(a, b) with a -> h(b, c@-1), differentiated by b
        let (Some(e), Some(h)) = (build(&s), build(&t)) else { return Ok(()) };
        let (a, b) = (var(0), var(1));
        let sub: BTreeMap<Var, RationalExpr> = [(a.clone(), h.clone())].into();
        let Ok(composed) = e.substitute(&sub) else { return Ok(()) };
        let Ok(ea) = e.diff(&a).substitute(&sub) else { return Ok(()) };
        let Ok(eb) = e.diff(&b).substitute(&sub) else { return Ok(()) };
        prop_assert_eq!(composed.diff(&b), &(&ea * &h.diff(&b)) + &eb);
    }
}

fn small_poly(rng: &mut ChaCha8Rng) -> RationalExpr {
    let mut acc = RationalExpr::int(rng.gen_range(-2..=2));
    for i in 0..3 {
        let c = RationalExpr::int(rng.gen_range(-2..=2));
        let x = RationalExpr::var(var(i));
        acc = &acc + &(&c * &x.pow(rng.gen_range(0..=2)));
    }
    acc
}

#[test]
fn generic_rank_matches_rank_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let rows = 3;
        let cols = 3;
        let mut data: Vec<Vec<RationalExpr>> = (0..rows)
            .map(|_| (0..cols).map(|_| small_poly(&mut rng)).collect())
            .collect();
        // make the last row dependent half of the time
        if rng.gen_bool(0.5) {
            let k = small_poly(&mut rng);
            data[2] = data[0]
                .iter()
                .zip(&data[1])
                .map(|(x, y)| &(&k * x) + y)
                .collect();
        }
        let m = ExprMatrix::from_rows(data, cols).unwrap();
        let generic = m.generic_rank();
        let mut agree = 0;
        for _ in 0..10 {
            let at = random_point(&mut rng);
            let values = m.eval(&bindings(&at)).expect("polynomial entries");
            let constants = values
                .into_iter()
                .map(|r| r.into_iter().map(RationalExpr::constant).collect())
                .collect();
            let numeric = ExprMatrix::from_rows(constants, cols)
                .unwrap()
                .generic_rank();
            assert!(numeric <= generic);
            if numeric == generic {
                agree += 1;
            }
        }
        assert!(
            agree >= 9,
            "generic rank {generic} attained at only {agree}/10 points of\n{m}"
        );
    }
}
