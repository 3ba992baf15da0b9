//! Triangular elimination: repeatedly solve an equation that is linear in
//! one unknown and substitute the solution everywhere else.

use std::collections::{BTreeMap, BTreeSet};

use flatness_expr::{Poly, RationalExpr, Var};

#[derive(Debug, Clone)]
pub(crate) struct Elimination {
    /// Unknowns in the order they were solved, with solutions free of every
    /// other solved unknown.
    pub solved: Vec<(Var, RationalExpr)>,
    /// Equations left over (numerators, nonzero) after no further pick was
    /// possible.
    pub residual: Vec<Poly>,
}

impl Elimination {
    pub fn get(&self, v: &Var) -> Option<&RationalExpr> {
        self.solved.iter().find(|(w, _)| w == v).map(|(_, e)| e)
    }
}

/// Each equation is an expression that should vanish. Solutions may still
/// contain unknowns that could not be eliminated.
/// Lexicographic cost of solving one equation for one unknown; lower wins.
type PickCost = (usize, usize, usize, usize, usize);

pub(crate) fn eliminate(equations: &[RationalExpr], unknowns: &BTreeSet<Var>) -> Elimination {
    let mut eqs: Vec<Poly> = equations
        .iter()
        .map(|e| e.numer().clone())
        .filter(|p| !p.is_zero())
        .collect();
    let mut open: BTreeSet<Var> = unknowns.clone();
    let mut solved: Vec<(Var, RationalExpr)> = Vec::new();

    loop {
        let mut best: Option<(PickCost, usize, Var)> = None;
        for (ei, p) in eqs.iter().enumerate() {
            let present: Vec<Var> = p.vars().into_iter().filter(|v| open.contains(v)).collect();
            for w in &present {
                if p.degree_in(w) != 1 {
                    continue;
                }
                let c = p.coefficient_in(w, 1);
                let coupled = c.vars().iter().filter(|v| open.contains(*v)).count();
                let score = (present.len(), coupled, c.nterms(), p.nterms(), ei);
                if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
                    best = Some((score, ei, w.clone()));
                }
            }
        }
        let Some((_, ei, w)) = best else { break };
        let p = eqs.swap_remove(ei);
        let c = p.coefficient_in(&w, 1);
        let rest = p.coefficient_in(&w, 0);
        let sol = RationalExpr::from_parts(-&rest, c).expect("linear coefficient is nonzero");
        let binding = BTreeMap::from([(w.clone(), sol.clone())]);
        let mut next = Vec::with_capacity(eqs.len());
        for q in eqs {
            if !q.contains_var(&w) {
                next.push(q);
                continue;
            }
            // a substitution that kills a denominator means the pick was
            // degenerate on this equation; keep it unreduced
            match RationalExpr::from_poly(q.clone()).substitute(&binding) {
                Ok(e) if e.is_zero() => {}
                Ok(e) => next.push(e.numer().clone()),
                Err(_) => next.push(q),
            }
        }
        eqs = next;
        for (_, e) in solved.iter_mut() {
            if e.contains_var(&w) {
                if let Ok(s) = e.substitute(&binding) {
                    *e = s;
                }
            }
        }
        open.remove(&w);
        solved.push((w, sol));
    }
    Elimination {
        solved,
        residual: eqs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flatness_expr::parse_expr_with;

    fn e(s: &str) -> RationalExpr {
        parse_expr_with(s, |_| true).unwrap()
    }

    #[test]
    fn solves_triangular_system() {
        let unknowns: BTreeSet<Var> = ["a", "b", "c"].iter().map(|n| Var::named(n)).collect();
        let eqs = [e("p - a"), e("q - b*a - c"), e("r - b")];
        let el = eliminate(&eqs, &unknowns);
        assert!(el.residual.is_empty());
        assert_eq!(el.get(&Var::named("a")), Some(&e("p")));
        assert_eq!(el.get(&Var::named("c")), Some(&e("q - r*p")));
    }

    #[test]
    fn nonlinear_coupling_is_left_open() {
        let unknowns: BTreeSet<Var> = ["a"].iter().map(|n| Var::named(n)).collect();
        let el = eliminate(&[e("a^2 - p")], &unknowns);
        assert!(el.solved.is_empty());
        assert_eq!(el.residual.len(), 1);
    }
}
