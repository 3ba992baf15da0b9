//! Shift operators, flat-output verification by elimination and a
//! polynomial-ansatz derivation of forward-flat outputs.
//!
//! Expressions in the shift algebra use the coordinates
//! `(.., zeta@-2, zeta@-1, x, u, u@1, u@2, ..)`; anything else (such as
//! `x@1` or `u@-1`) is first rewritten into these coordinates.

use std::collections::{BTreeMap, BTreeSet};

use flatness_expr::{parse_expr_with, ExprMatrix, Monomial, Poly, Rational, RationalExpr, Var};
use serde::{Deserialize, Serialize};

use crate::elim::eliminate;
use crate::error::{Error, Result};
use crate::geomtest::{Distribution, SequenceRecord};
use crate::sysmodel::SystemModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    State(usize),
    Input(usize),
    Zeta(usize),
}

/// Forward shift `delta` and backward shift `delta^-1` on system
/// expressions.
#[derive(Clone, Debug)]
pub struct ShiftAlgebra {
    sys: SystemModel,
    kinds: BTreeMap<String, Kind>,
    g: Vec<RationalExpr>,
    zeta: Vec<Var>,
    back_x: Vec<RationalExpr>,
    back_u: Vec<RationalExpr>,
}

impl ShiftAlgebra {
    pub fn new(s: &SystemModel) -> Result<Self> {
        let sys = s.complete()?;
        let inv = sys.inverse.clone().expect("completed");
        let g = sys.g.clone().expect("completed");
        let mut kinds = BTreeMap::new();
        for (i, x) in sys.states.iter().enumerate() {
            kinds.insert(x.name().to_string(), Kind::State(i));
        }
        for (j, u) in sys.inputs.iter().enumerate() {
            kinds.insert(u.name().to_string(), Kind::Input(j));
        }
        for (j, z) in inv.zeta.iter().enumerate() {
            kinds.insert(z.name().to_string(), Kind::Zeta(j));
        }
        // delta^-1 x = psi_x(x, zeta@-1)
        let rename: BTreeMap<Var, Var> = inv
            .xplus
            .iter()
            .cloned()
            .zip(sys.states.iter().cloned())
            .chain(inv.zeta.iter().map(|z| (z.clone(), z.with_shift(-1))))
            .collect();
        let back_x = inv.psi_x.iter().map(|e| e.rename(&rename)).collect();
        let back_u = inv.psi_u.iter().map(|e| e.rename(&rename)).collect();
        Ok(ShiftAlgebra {
            sys,
            kinds,
            g,
            zeta: inv.zeta,
            back_x,
            back_u,
        })
    }

    pub fn system(&self) -> &SystemModel {
        &self.sys
    }

    pub fn zeta(&self) -> &[Var] {
        &self.zeta
    }

    fn kind(&self, v: &Var) -> Result<Kind> {
        self.kinds
            .get(v.name())
            .copied()
            .ok_or_else(|| Error::UnsupportedCandidate(format!("`{v}` is not a system variable")))
    }

    /// Whether `v` is a coordinate of the shift algebra.
    pub fn is_coordinate(&self, v: &Var) -> bool {
        match self.kinds.get(v.name()) {
            Some(Kind::State(_)) => v.shift() == 0,
            Some(Kind::Input(_)) => v.shift() >= 0,
            Some(Kind::Zeta(_)) => v.shift() < 0,
            None => false,
        }
    }

    pub fn is_system_var(&self, v: &Var) -> bool {
        self.kinds.contains_key(v.name())
    }

    /// Rewrites `e` in shift-algebra coordinates.
    pub fn normalize(&self, e: &RationalExpr) -> Result<RationalExpr> {
        let mut bindings = BTreeMap::new();
        for v in e.vars() {
            if self.is_coordinate(&v) {
                continue;
            }
            let base = match self.kind(&v)? {
                Kind::State(i) => RationalExpr::var(self.sys.states[i].clone()),
                Kind::Input(j) => RationalExpr::var(self.sys.inputs[j].clone()),
                Kind::Zeta(j) => self.g[j].clone(),
            };
            bindings.insert(v.clone(), self.shift_canonical(&base, v.shift())?);
        }
        e.substitute(&bindings)
            .map_err(|err| Error::expr("normalize", err))
    }

    /// `delta^k e`.
    pub fn shift(&self, e: &RationalExpr, k: i32) -> Result<RationalExpr> {
        let e = self.normalize(e)?;
        self.shift_canonical(&e, k)
    }

    fn shift_canonical(&self, e: &RationalExpr, k: i32) -> Result<RationalExpr> {
        let mut cur = e.clone();
        for _ in 0..k.unsigned_abs() {
            cur = if k > 0 {
                self.step_forward(&cur)?
            } else {
                self.step_backward(&cur)?
            };
        }
        Ok(cur)
    }

    fn step_forward(&self, e: &RationalExpr) -> Result<RationalExpr> {
        let mut b = BTreeMap::new();
        for v in e.vars() {
            let img = match (self.kind(&v)?, v.shift()) {
                (Kind::State(i), _) => self.sys.f[i].clone(),
                (Kind::Input(_), s) => RationalExpr::var(v.with_shift(s + 1)),
                (Kind::Zeta(j), -1) => self.g[j].clone(),
                (Kind::Zeta(_), s) => RationalExpr::var(v.with_shift(s + 1)),
            };
            b.insert(v, img);
        }
        e.substitute(&b)
            .map_err(|err| Error::expr("forward shift", err))
    }

    fn step_backward(&self, e: &RationalExpr) -> Result<RationalExpr> {
        let mut b = BTreeMap::new();
        for v in e.vars() {
            let img = match (self.kind(&v)?, v.shift()) {
                (Kind::State(i), _) => self.back_x[i].clone(),
                (Kind::Input(j), 0) => self.back_u[j].clone(),
                (_, s) => RationalExpr::var(v.with_shift(s - 1)),
            };
            b.insert(v, img);
        }
        e.substitute(&b)
            .map_err(|err| Error::expr("backward shift", err))
    }
}

/// `delta^k e` for the system `s`.
pub fn shift_expr(e: &RationalExpr, k: i32, s: &SystemModel) -> Result<RationalExpr> {
    ShiftAlgebra::new(s)?.shift(e, k)
}

/// `m` functions of shifted system variables, stored in shift-algebra
/// coordinates. `q1[j]` is the deepest `zeta` backshift and `q2[j]` the
/// highest input shift that component `j` uses.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatOutputCandidate {
    pub components: Vec<RationalExpr>,
    pub q1: Vec<u32>,
    pub q2: Vec<u32>,
}

impl FlatOutputCandidate {
    pub fn new(s: &SystemModel, components: Vec<RationalExpr>) -> Result<Self> {
        Self::with_algebra(&ShiftAlgebra::new(s)?, components)
    }

    pub fn with_algebra(alg: &ShiftAlgebra, components: Vec<RationalExpr>) -> Result<Self> {
        if components.len() != alg.sys.m() {
            return Err(Error::UnsupportedCandidate(format!(
                "{} components given, the system has {} inputs",
                components.len(),
                alg.sys.m()
            )));
        }
        let components = components
            .iter()
            .map(|c| alg.normalize(c))
            .collect::<Result<Vec<_>>>()?;
        let mut q1 = Vec::new();
        let mut q2 = Vec::new();
        for c in &components {
            let mut back = 0u32;
            let mut fwd = 0u32;
            for v in c.vars() {
                match alg.kind(&v)? {
                    Kind::Zeta(_) => back = back.max(v.shift().unsigned_abs()),
                    Kind::Input(_) => fwd = fwd.max(v.shift() as u32),
                    Kind::State(_) => {}
                }
            }
            q1.push(back);
            q2.push(fwd);
        }
        Ok(FlatOutputCandidate { components, q1, q2 })
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.components.iter().map(|c| c.to_string()).collect()
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct CandidateFile {
    outputs: Vec<String>,
    #[serde(default)]
    vars: Option<CandidateVars>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct CandidateVars {
    zeta: Vec<String>,
}

/// Reads `{"outputs": [..], "vars": {"zeta": [..]}?}`; `zeta` names, if
/// given, stand for the extension outputs in order.
pub fn load_candidate(text: &str, s: &SystemModel) -> Result<FlatOutputCandidate> {
    let file: CandidateFile = serde_json::from_str(text).map_err(|e| {
        if e.is_data() {
            Error::Schema(e.to_string())
        } else {
            Error::Json {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            }
        }
    })?;
    let alg = ShiftAlgebra::new(s)?;
    let zeta_names: Vec<String> = match &file.vars {
        Some(v) => {
            if v.zeta.len() != alg.zeta.len() {
                return Err(Error::Schema(format!(
                    "{} zeta names given, the system has {} extension outputs",
                    v.zeta.len(),
                    alg.zeta.len()
                )));
            }
            v.zeta.clone()
        }
        None => alg.zeta.iter().map(|z| z.name().to_string()).collect(),
    };
    let system_names: BTreeSet<&str> = alg
        .sys
        .states
        .iter()
        .chain(&alg.sys.inputs)
        .map(|v| v.name())
        .collect();
    let mut components = Vec::new();
    for (i, text) in file.outputs.iter().enumerate() {
        let e = parse_expr_with(text, |v| {
            system_names.contains(v.name()) || zeta_names.iter().any(|z| z == v.name())
        })
        .map_err(|e| Error::expr(format!("outputs[{i}]"), e))?;
        let rename: BTreeMap<Var, Var> = e
            .vars()
            .into_iter()
            .filter_map(|v| {
                let j = zeta_names.iter().position(|z| z == v.name())?;
                Some((v.clone(), alg.zeta[j].with_shift(v.shift())))
            })
            .collect();
        components.push(e.rename(&rename));
    }
    FlatOutputCandidate::with_algebra(&alg, components)
}

/// `x = F_x(y..)`, `u = F_u(y..)` and `zeta = F_g = g(F_x, F_u)` in shifted
/// flat-output variables `y_j@s`.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameterization {
    /// `y_1 .. y_m` at shift 0.
    pub outputs: Vec<Var>,
    pub f_x: Vec<RationalExpr>,
    pub f_u: Vec<RationalExpr>,
    pub f_g: Vec<RationalExpr>,
    pub r1: Vec<u32>,
    pub r2: Vec<u32>,
}

impl Parameterization {
    pub fn m(&self) -> usize {
        self.outputs.len()
    }

    pub fn y(&self, j: usize, s: i32) -> Var {
        self.outputs[j].with_shift(s)
    }

    /// Rows `(F_x, F_u, F_g)` stacked.
    pub fn rows(&self) -> Vec<RationalExpr> {
        self.f_x
            .iter()
            .chain(&self.f_u)
            .chain(&self.f_g)
            .cloned()
            .collect()
    }

    /// Shift of the flat-output variables: `y_j@s -> y_j@(s+k)`.
    pub fn shift_y(&self, e: &RationalExpr, k: i32) -> RationalExpr {
        let rename: BTreeMap<Var, Var> = e
            .vars()
            .into_iter()
            .filter(|v| self.outputs.iter().any(|y| y.name() == v.name()))
            .map(|v| {
                let w = v.shifted(k);
                (v, w)
            })
            .collect();
        e.rename(&rename)
    }

    /// Shifts of `y_j` that appear in `exprs`.
    pub fn shifts_used(&self, exprs: &[RationalExpr], j: usize) -> BTreeSet<i32> {
        let name = self.outputs[j].name();
        exprs
            .iter()
            .flat_map(|e| e.vars())
            .filter(|v| v.name() == name)
            .map(|v| v.shift())
            .collect()
    }
}

fn output_vars(alg: &ShiftAlgebra, m: usize) -> Vec<Var> {
    let mut prefix = String::from("y");
    loop {
        let names: Vec<String> = (1..=m).map(|j| format!("{prefix}{j}")).collect();
        if names.iter().all(|n| !alg.kinds.contains_key(n)) {
            return names.iter().map(|n| Var::named(n)).collect();
        }
        prefix.push('y');
    }
}

/// Default search window for verification.
pub fn default_window(s: &SystemModel) -> (u32, u32) {
    (s.n() as u32, s.n() as u32)
}

/// Expresses `x` and `u` through shifts of the candidate by triangular
/// elimination over the windows `[-b, f]` (`b <= max_back`, `f <= max_fwd`),
/// smallest windows first. The result is certified by the round trip
/// `F(delta^s cand) = (x, u)` and by `delta F_x = f(F_x, F_u)`.
pub fn verify_flat_output(
    s: &SystemModel,
    cand: &FlatOutputCandidate,
    max_back: u32,
    max_fwd: u32,
) -> Result<Parameterization> {
    let alg = ShiftAlgebra::new(s)?;
    verify_with_algebra(&alg, cand, max_back, max_fwd)
}

pub fn verify_with_algebra(
    alg: &ShiftAlgebra,
    cand: &FlatOutputCandidate,
    max_back: u32,
    max_fwd: u32,
) -> Result<Parameterization> {
    let sys = &alg.sys;
    let m = sys.m();
    if cand.components.len() != m {
        return Err(Error::UnsupportedCandidate(format!(
            "{} components given, the system has {m} inputs",
            cand.components.len()
        )));
    }
    let ys = output_vars(alg, m);
    let (b_max, f_max) = (max_back as i32, max_fwd as i32);
    // shifted[j][t + b_max] = delta^t cand_j
    let mut shifted: Vec<Vec<RationalExpr>> = Vec::with_capacity(m);
    for c in &cand.components {
        let mut row = Vec::new();
        for t in -b_max..=f_max {
            row.push(alg.shift_canonical(c, t)?);
        }
        shifted.push(row);
    }
    let targets: Vec<Var> = sys.states.iter().chain(&sys.inputs).cloned().collect();

    let mut windows: Vec<(i32, i32)> = (0..=b_max)
        .flat_map(|b| (0..=f_max).map(move |f| (b, f)))
        .collect();
    windows.sort_by_key(|&(b, f)| (b + f, b > 0 && f > 0, b));

    let mut last_failure = None;
    for (b, f) in windows {
        let mut eqs = Vec::new();
        for (j, y) in ys.iter().enumerate() {
            for t in -b..=f {
                let lhs = RationalExpr::var(y.with_shift(t));
                eqs.push(&lhs - &shifted[j][(t + b_max) as usize]);
            }
        }
        let unknowns: BTreeSet<Var> = eqs
            .iter()
            .flat_map(|e| e.vars())
            .filter(|v| alg.is_system_var(v))
            .collect();
        if targets.iter().any(|t| !unknowns.contains(t)) && (b, f) != (b_max, f_max) {
            continue;
        }
        let el = eliminate(&eqs, &unknowns);
        let mut unresolved = Vec::new();
        let mut sol = Vec::new();
        for t in &targets {
            match el.get(t) {
                Some(e) if e.vars().iter().all(|v| !alg.is_system_var(v)) => sol.push(e.clone()),
                _ => unresolved.push(t.to_string()),
            }
        }
        if unresolved.is_empty() {
            let f_x = sol[..sys.n()].to_vec();
            let f_u = sol[sys.n()..].to_vec();
            return certify(alg, cand, ys, f_x, f_u);
        }
        last_failure = Some(Error::VerificationFailed {
            unresolved,
            residual: el.residual.iter().map(|p| p.to_string()).collect(),
        });
    }
    Err(last_failure.unwrap_or_else(|| Error::VerificationFailed {
        unresolved: targets.iter().map(|t| t.to_string()).collect(),
        residual: Vec::new(),
    }))
}

fn certify(
    alg: &ShiftAlgebra,
    cand: &FlatOutputCandidate,
    ys: Vec<Var>,
    f_x: Vec<RationalExpr>,
    f_u: Vec<RationalExpr>,
) -> Result<Parameterization> {
    let sys = &alg.sys;
    let to_param: BTreeMap<Var, RationalExpr> = sys
        .states
        .iter()
        .cloned()
        .zip(f_x.iter().cloned())
        .chain(sys.inputs.iter().cloned().zip(f_u.iter().cloned()))
        .collect();
    let g = sys.g.as_ref().expect("completed");
    let f_g = g
        .iter()
        .map(|e| e.substitute(&to_param))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Error::expr("g(F_x, F_u)", e))?;

    let mut p = Parameterization {
        outputs: ys,
        f_x,
        f_u,
        f_g,
        r1: Vec::new(),
        r2: Vec::new(),
    };
    for j in 0..p.m() {
        let in_x = p.shifts_used(&p.f_x, j);
        let in_u = p.shifts_used(&p.f_u, j);
        let lowest = in_x.iter().chain(&in_u).min().copied().unwrap_or(0);
        let top = in_u
            .iter()
            .copied()
            .chain(in_x.iter().map(|s| s + 1))
            .max()
            .unwrap_or(0);
        p.r1.push((-lowest).max(0) as u32);
        p.r2.push(top.max(0) as u32);
    }

    // round trip: y_j@s -> delta^s cand_j must give back (x, u)
    let mut back = BTreeMap::new();
    for e in p.f_x.iter().chain(&p.f_u) {
        for v in e.vars() {
            if back.contains_key(&v) {
                continue;
            }
            let j = p
                .outputs
                .iter()
                .position(|y| y.name() == v.name())
                .expect("only y vars");
            back.insert(
                v.clone(),
                alg.shift_canonical(&cand.components[j], v.shift())?,
            );
        }
    }
    for (t, e) in sys
        .states
        .iter()
        .chain(&sys.inputs)
        .zip(p.f_x.iter().chain(&p.f_u))
    {
        let r = e
            .substitute(&back)
            .map_err(|err| Error::expr("round trip", err))?;
        if r != RationalExpr::var(t.clone()) {
            return Err(Error::Internal(format!("round trip gives {r} for {t}")));
        }
    }
    check_dynamics(sys, &p)?;
    Ok(p)
}

/// `delta(F_x) = f(F_x, F_u)` as an identity in the `y` variables.
pub fn check_dynamics(sys: &SystemModel, p: &Parameterization) -> Result<()> {
    let to_param: BTreeMap<Var, RationalExpr> = sys
        .states
        .iter()
        .cloned()
        .zip(p.f_x.iter().cloned())
        .chain(sys.inputs.iter().cloned().zip(p.f_u.iter().cloned()))
        .collect();
    for (i, (fx, fi)) in p.f_x.iter().zip(&sys.f).enumerate() {
        let lhs = p.shift_y(fx, 1);
        let rhs = fi
            .substitute(&to_param)
            .map_err(|e| Error::expr("f(F_x, F_u)", e))?;
        if lhs != rhs {
            return Err(Error::Internal(format!(
                "delta F_x[{i}] = {lhs} differs from f(F_x, F_u)[{i}] = {rhs}"
            )));
        }
    }
    Ok(())
}

fn monomials(vars: &[Var], max_degree: u32) -> Vec<Monomial> {
    let mut out = vec![Vec::<(Var, u32)>::new()];
    for v in vars {
        let mut next = Vec::new();
        for m in &out {
            let used: u32 = m.iter().map(|(_, e)| e).sum();
            for e in 0..=(max_degree - used) {
                let mut m2 = m.clone();
                if e > 0 {
                    m2.push((v.clone(), e));
                }
                next.push(m2);
            }
        }
        out = next;
    }
    let mut mons: Vec<Monomial> = out
        .into_iter()
        .map(Monomial::from_powers)
        .filter(|m| !m.is_one())
        .collect();
    mons.sort();
    mons.reverse();
    mons
}

/// Polynomials of degree `1..=max_degree` in `candidate_vars` annihilated by
/// every basis field of `d`, as a basis of that space over Q.
pub fn first_integrals(
    d: &Distribution,
    candidate_vars: &[Var],
    max_degree: u32,
) -> Vec<RationalExpr> {
    if max_degree == 0 {
        return Vec::new();
    }
    let mons = monomials(candidate_vars, max_degree);
    let mut rows: Vec<Vec<RationalExpr>> = Vec::new();
    for field in d.basis() {
        let images: Vec<RationalExpr> = mons
            .iter()
            .map(|m| {
                field.apply(&RationalExpr::from_poly(Poly::term(
                    Rational::from_integer(1.into()),
                    m.clone(),
                )))
            })
            .collect();
        let common = images
            .iter()
            .fold(Poly::one(), |acc, e| flatness_expr::lcm(&acc, e.denom()));
        let numers: Vec<Poly> = images
            .iter()
            .map(|e| {
                let scale = common.div_exact(e.denom()).expect("lcm is a multiple");
                e.numer() * &scale
            })
            .collect();
        let support: BTreeSet<Monomial> = numers
            .iter()
            .flat_map(|p| p.terms().map(|(m, _)| m.clone()).collect::<Vec<_>>())
            .collect();
        for beta in support {
            rows.push(
                numers
                    .iter()
                    .map(|p| RationalExpr::constant(p.coefficient(&beta)))
                    .collect(),
            );
        }
    }
    let system = ExprMatrix::from_rows(rows, mons.len()).expect("rectangular");
    let mut out: Vec<RationalExpr> = system
        .nullspace()
        .into_iter()
        .map(|c| {
            let terms = c
                .iter()
                .zip(&mons)
                .filter(|(ci, _)| !ci.is_zero())
                .map(|(ci, m)| {
                    (
                        m.clone(),
                        ci.constant_value().expect("constant coefficients"),
                    )
                });
            RationalExpr::from_poly(Poly::from_terms(terms))
        })
        .collect();
    out.sort_by_key(|e| (e.numer().total_degree(), e.to_string()));
    out
}

/// Picks flat-output components among first integrals of the state parts of
/// `E_k`, deepest level first, keeping each pick independent of the earlier
/// picks and of their state-only forward shifts. Only a candidate that
/// passes [`verify_flat_output`] is returned.
pub fn derive_forward_flat_output(
    s: &SystemModel,
    rec: &SequenceRecord,
    max_degree: u32,
) -> Result<FlatOutputCandidate> {
    if !rec.forward_flat {
        return Err(Error::DerivationFailed(
            "the system is not forward-flat".into(),
        ));
    }
    let alg = ShiftAlgebra::new(s)?;
    let sys = &alg.sys;
    let (n, m) = (sys.n(), sys.m());
    let rank_of = |fs: &[RationalExpr]| ExprMatrix::jacobian(fs, &sys.states).generic_rank();
    let state_only = |e: &RationalExpr| e.vars().iter().all(|v| sys.states.contains(v));

    let mut selected: Vec<RationalExpr> = Vec::new();
    let mut generated: Vec<RationalExpr> = Vec::new();
    for ek in rec.e.iter().rev() {
        if selected.len() == m {
            break;
        }
        let part = ek.restrict_to(&sys.states);
        if part.dim() == n {
            continue;
        }
        for phi in first_integrals(&part, &sys.states, max_degree) {
            if selected.len() == m {
                break;
            }
            let before = rank_of(&generated);
            let mut trial = generated.clone();
            trial.push(phi.clone());
            if rank_of(&trial) == before {
                continue;
            }
            generated = trial;
            selected.push(phi.clone());
            let mut cur = phi;
            for _ in 0..n {
                cur = alg.shift(&cur, 1)?;
                if !state_only(&cur) {
                    break;
                }
                generated.push(cur.clone());
            }
        }
    }
    if selected.len() < m {
        return Err(Error::DerivationFailed(format!(
            "found {} of {m} independent first integrals up to degree {max_degree}",
            selected.len()
        )));
    }
    let cand = FlatOutputCandidate::with_algebra(&alg, selected)?;
    match verify_with_algebra(&alg, &cand, 0, n as u32) {
        Ok(_) => Ok(cand),
        Err(e) => Err(Error::DerivationFailed(format!(
            "certification failed: {e}"
        ))),
    }
}
