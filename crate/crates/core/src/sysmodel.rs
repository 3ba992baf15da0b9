//! Discrete-time systems `x+ = f(x, u)`, their extension `zeta = g(x, u)`,
//! the inverse of the extended map and the associated (time-mirrored)
//! system `z+ = psi_x(z, v)`, `eta = psi_u(z, v)`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use flatness_expr::{is_identifier, parse_expr, ExprMatrix, RationalExpr, Var};
use serde::{Deserialize, Serialize};

use crate::elim::eliminate;
use crate::error::{Error, RankViolation, Result};

/// On-disk form of a system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub name: String,
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub f: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<InverseFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseFile {
    pub psi_x: Vec<String>,
    pub psi_u: Vec<String>,
    pub xplus: Vec<String>,
    pub zeta: Vec<String>,
}

/// `x = psi_x(x+, zeta)`, `u = psi_u(x+, zeta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseMap {
    pub xplus: Vec<Var>,
    pub zeta: Vec<Var>,
    pub psi_x: Vec<RationalExpr>,
    pub psi_u: Vec<RationalExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub name: String,
    pub states: Vec<Var>,
    pub inputs: Vec<Var>,
    pub f: Vec<RationalExpr>,
    pub g: Option<Vec<RationalExpr>>,
    pub inverse: Option<InverseMap>,
}

impl SystemModel {
    /// Builds and validates a system from expression strings.
    pub fn from_strs(name: &str, states: &[&str], inputs: &[&str], f: &[&str]) -> Result<Self> {
        let file = SystemFile {
            name: name.to_string(),
            states: states.iter().map(|s| s.to_string()).collect(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            f: f.iter().map(|s| s.to_string()).collect(),
            g: None,
            inverse: None,
        };
        Self::from_file(&file)
    }

    pub fn from_file(file: &SystemFile) -> Result<Self> {
        let states = declare_vars("state", &file.states)?;
        let inputs = declare_vars("input", &file.inputs)?;
        if states.is_empty() || inputs.is_empty() {
            return Err(Error::Schema(
                "a system needs at least one state and one input".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for v in states.iter().chain(&inputs) {
            if !seen.insert(v.name()) {
                return Err(Error::Schema(format!(
                    "name `{}` is declared twice",
                    v.name()
                )));
            }
        }
        let (n, m) = (states.len(), inputs.len());
        let vocab: Vec<Var> = states.iter().chain(&inputs).cloned().collect();
        let f = parse_list("f", &file.f, n, &vocab)?;
        let g = match &file.g {
            Some(g) => Some(parse_list("g", g, m, &vocab)?),
            None => None,
        };
        let inverse = match &file.inverse {
            Some(inv) => {
                if g.is_none() {
                    return Err(Error::Schema(
                        "an inverse map requires an explicit g".into(),
                    ));
                }
                let xplus = declare_vars("xplus", &inv.xplus)?;
                let zeta = declare_vars("zeta", &inv.zeta)?;
                if xplus.len() != n || zeta.len() != m {
                    return Err(Error::Schema(format!(
                        "inverse declares {} xplus and {} zeta names, expected {n} and {m}",
                        xplus.len(),
                        zeta.len()
                    )));
                }
                let mut names = BTreeSet::new();
                for v in xplus.iter().chain(&zeta) {
                    if !names.insert(v.name()) {
                        return Err(Error::Schema(format!(
                            "inverse name `{}` is declared twice",
                            v.name()
                        )));
                    }
                }
                let ivocab: Vec<Var> = xplus.iter().chain(&zeta).cloned().collect();
                Some(InverseMap {
                    psi_x: parse_list("inverse.psi_x", &inv.psi_x, n, &ivocab)?,
                    psi_u: parse_list("inverse.psi_u", &inv.psi_u, m, &ivocab)?,
                    xplus,
                    zeta,
                })
            }
            None => None,
        };
        let s = SystemModel {
            name: file.name.clone(),
            states,
            inputs,
            f,
            g,
            inverse,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn m(&self) -> usize {
        self.inputs.len()
    }

    /// The chart `(x, u)`.
    pub fn coordinates(&self) -> Vec<Var> {
        self.states.iter().chain(&self.inputs).cloned().collect()
    }

    /// `d(x,u) f`, an `n x (n+m)` matrix.
    pub fn jacobian(&self) -> ExprMatrix {
        ExprMatrix::jacobian(&self.f, &self.coordinates())
    }

    /// Checks the rank conditions and, when present, the extension and the
    /// inverse map.
    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n(), self.m());
        let rank = self.jacobian().generic_rank();
        if rank < n {
            return Err(Error::Rank(RankViolation::Submersivity { rank, n }));
        }
        let rank = ExprMatrix::jacobian(&self.f, &self.inputs).generic_rank();
        if rank < m {
            return Err(Error::Rank(RankViolation::InputRank { rank, m }));
        }
        if let Some(g) = &self.g {
            let rank = extended_jacobian(self, g).generic_rank();
            if rank < n + m {
                return Err(Error::Rank(RankViolation::Extension {
                    rank,
                    expected: n + m,
                }));
            }
            if let Some(inv) = &self.inverse {
                verify_inverse(self, g, inv)?;
            }
        }
        Ok(())
    }

    /// Fills in `g` and the inverse map when they are missing.
    pub fn complete(&self) -> Result<SystemModel> {
        let mut s = self.clone();
        if s.g.is_none() {
            s.g = Some(choose_extension(&s)?);
        }
        if s.inverse.is_none() {
            s.inverse = Some(invert_extended_map(&s)?);
        }
        Ok(s)
    }

    pub fn extension(&self) -> Option<&[RationalExpr]> {
        self.g.as_deref()
    }

    pub fn to_file(&self) -> SystemFile {
        let strs = |v: &[RationalExpr]| v.iter().map(|e| e.to_string()).collect::<Vec<_>>();
        let names = |v: &[Var]| v.iter().map(|x| x.name().to_string()).collect::<Vec<_>>();
        SystemFile {
            name: self.name.clone(),
            states: names(&self.states),
            inputs: names(&self.inputs),
            f: strs(&self.f),
            g: self.g.as_deref().map(strs),
            inverse: self.inverse.as_ref().map(|inv| InverseFile {
                psi_x: strs(&inv.psi_x),
                psi_u: strs(&inv.psi_u),
                xplus: names(&inv.xplus),
                zeta: names(&inv.zeta),
            }),
        }
    }

    fn used_names(&self) -> BTreeSet<String> {
        self.states
            .iter()
            .chain(&self.inputs)
            .map(|v| v.name().to_string())
            .collect()
    }
}

fn declare_vars(what: &str, names: &[String]) -> Result<Vec<Var>> {
    names
        .iter()
        .map(|n| {
            if !is_identifier(n) {
                return Err(Error::Schema(format!("invalid {what} name `{n}`")));
            }
            Ok(Var::named(n))
        })
        .collect()
}

fn parse_list(
    field: &str,
    texts: &[String],
    expected: usize,
    vocab: &[Var],
) -> Result<Vec<RationalExpr>> {
    if texts.len() != expected {
        return Err(Error::Schema(format!(
            "`{field}` has {} entries, expected {expected}",
            texts.len()
        )));
    }
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| parse_expr(t, vocab).map_err(|e| Error::expr(format!("{field}[{i}]"), e)))
        .collect()
}

/// Parses and validates a system file.
pub fn load_system(text: &str) -> Result<SystemModel> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| {
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
    SystemModel::from_file(&file)
}

pub fn load_system_path(path: &Path) -> Result<SystemModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    load_system(&text)
}

fn extended_jacobian(s: &SystemModel, g: &[RationalExpr]) -> ExprMatrix {
    let maps: Vec<RationalExpr> = s.f.iter().chain(g).cloned().collect();
    ExprMatrix::jacobian(&maps, &s.coordinates())
}

/// Picks `g` among the coordinate functions, states first, so that `(f, g)`
/// has a nonsingular Jacobian. A `g` given with the system always wins.
pub fn choose_extension(s: &SystemModel) -> Result<Vec<RationalExpr>> {
    if let Some(g) = &s.g {
        return Ok(g.clone());
    }
    let coords = s.coordinates();
    let width = coords.len();
    let mut rows: Vec<Vec<RationalExpr>> = s.jacobian().rows().map(|r| r.to_vec()).collect();
    let mut rank = s.n();
    let mut g = Vec::new();
    for (i, c) in coords.iter().enumerate() {
        if g.len() == s.m() {
            break;
        }
        let mut unit = vec![RationalExpr::zero(); width];
        unit[i] = RationalExpr::one();
        rows.push(unit);
        let trial = ExprMatrix::from_rows(rows.clone(), width).expect("rows have equal width");
        if trial.generic_rank() > rank {
            rank += 1;
            g.push(RationalExpr::var(c.clone()));
        } else {
            rows.pop();
        }
    }
    // the coordinate rows span everything, so the greedy pass completes
    // whenever d(x,u) f has rank n
    if g.len() < s.m() {
        return Err(Error::Rank(RankViolation::Extension {
            rank,
            expected: s.n() + s.m(),
        }));
    }
    Ok(g)
}

fn fresh_name(base: &str, used: &mut BTreeSet<String>) -> Var {
    let mut name = base.to_string();
    while used.contains(&name) {
        name.push('_');
    }
    used.insert(name.clone());
    Var::named(&name)
}

/// Solves `x+ = f(x, u)`, `zeta = g(x, u)` for `(x, u)` by triangular
/// elimination. A user-supplied inverse is only verified.
pub fn invert_extended_map(s: &SystemModel) -> Result<InverseMap> {
    let g = choose_extension(s)?;
    if let Some(inv) = &s.inverse {
        verify_inverse(s, &g, inv)?;
        return Ok(inv.clone());
    }
    let mut used = s.used_names();
    let xplus: Vec<Var> = s
        .states
        .iter()
        .map(|x| fresh_name(&format!("{}_plus", x.name()), &mut used))
        .collect();
    let zeta: Vec<Var> = (1..=s.m())
        .map(|j| fresh_name(&format!("zeta{j}"), &mut used))
        .collect();
    let mut eqs = Vec::new();
    for (xp, fi) in xplus.iter().zip(&s.f) {
        eqs.push(&RationalExpr::var(xp.clone()) - fi);
    }
    for (z, gj) in zeta.iter().zip(&g) {
        eqs.push(&RationalExpr::var(z.clone()) - gj);
    }
    let unknowns: BTreeSet<Var> = s.coordinates().into_iter().collect();
    let el = eliminate(&eqs, &unknowns);
    let mut unresolved = Vec::new();
    let mut solution = |v: &Var| -> RationalExpr {
        match el.get(v) {
            Some(e) if e.vars().iter().all(|w| !unknowns.contains(w)) => e.clone(),
            _ => {
                unresolved.push(v.to_string());
                RationalExpr::zero()
            }
        }
    };
    let psi_x: Vec<RationalExpr> = s.states.iter().map(&mut solution).collect();
    let psi_u: Vec<RationalExpr> = s.inputs.iter().map(&mut solution).collect();
    if !unresolved.is_empty() {
        return Err(Error::InversionNotFound { unresolved });
    }
    let inv = InverseMap {
        xplus,
        zeta,
        psi_x,
        psi_u,
    };
    verify_inverse(s, &g, &inv)?;
    Ok(inv)
}

/// Checks both compositions of `(f, g)` and `psi` symbolically.
pub fn verify_inverse(s: &SystemModel, g: &[RationalExpr], inv: &InverseMap) -> Result<()> {
    let to_forward: BTreeMap<Var, RationalExpr> = inv
        .xplus
        .iter()
        .cloned()
        .zip(s.f.iter().cloned())
        .chain(inv.zeta.iter().cloned().zip(g.iter().cloned()))
        .collect();
    for (v, psi) in s
        .states
        .iter()
        .zip(&inv.psi_x)
        .chain(s.inputs.iter().zip(&inv.psi_u))
    {
        let back = psi
            .substitute(&to_forward)
            .map_err(|e| Error::InverseMismatch(format!("psi for {v}: {e}")))?;
        if back != RationalExpr::var(v.clone()) {
            return Err(Error::InverseMismatch(format!(
                "psi(f, g) gives {back} for {v}"
            )));
        }
    }
    let to_inverse: BTreeMap<Var, RationalExpr> = s
        .states
        .iter()
        .cloned()
        .zip(inv.psi_x.iter().cloned())
        .chain(s.inputs.iter().cloned().zip(inv.psi_u.iter().cloned()))
        .collect();
    for (v, h) in inv.xplus.iter().zip(&s.f).chain(inv.zeta.iter().zip(g)) {
        let fwd = h
            .substitute(&to_inverse)
            .map_err(|e| Error::InverseMismatch(format!("(f, g) at {v}: {e}")))?;
        if fwd != RationalExpr::var(v.clone()) {
            return Err(Error::InverseMismatch(format!(
                "(f, g)(psi) gives {fwd} for {v}"
            )));
        }
    }
    Ok(())
}

/// Names used for the associated system: states `z1..zn`, inputs `v1..vm`.
pub fn associated_state_names(n: usize) -> Vec<Var> {
    (1..=n).map(|i| Var::named(&format!("z{i}"))).collect()
}

pub fn associated_input_names(m: usize) -> Vec<Var> {
    (1..=m).map(|j| Var::named(&format!("v{j}"))).collect()
}

/// The associated system `z+ = psi_x(z, v)` with extension `eta = psi_u(z, v)`.
/// Its own inverse is `(f, g)` renamed, so applying this twice gives the
/// original system back up to names.
pub fn build_associated(s: &SystemModel) -> Result<SystemModel> {
    let s = s.complete()?;
    let g = s.g.as_ref().expect("completed");
    let inv = s.inverse.as_ref().expect("completed");
    let (n, m) = (s.n(), s.m());
    let z = associated_state_names(n);
    let v = associated_input_names(m);
    let zplus: Vec<Var> = z
        .iter()
        .map(|zi| Var::named(&format!("{}_plus", zi.name())))
        .collect();
    let eta: Vec<Var> = (1..=m).map(|j| Var::named(&format!("eta{j}"))).collect();

    let to_assoc: BTreeMap<Var, Var> = inv
        .xplus
        .iter()
        .cloned()
        .zip(z.iter().cloned())
        .chain(inv.zeta.iter().cloned().zip(v.iter().cloned()))
        .collect();
    let to_inverse: BTreeMap<Var, Var> = s
        .states
        .iter()
        .cloned()
        .zip(zplus.iter().cloned())
        .chain(s.inputs.iter().cloned().zip(eta.iter().cloned()))
        .collect();
    let assoc = SystemModel {
        name: format!("{} (associated)", s.name),
        states: z,
        inputs: v,
        f: inv.psi_x.iter().map(|e| e.rename(&to_assoc)).collect(),
        g: Some(inv.psi_u.iter().map(|e| e.rename(&to_assoc)).collect()),
        inverse: Some(InverseMap {
            xplus: zplus,
            zeta: eta,
            psi_x: s.f.iter().map(|e| e.rename(&to_inverse)).collect(),
            psi_u: g.iter().map(|e| e.rename(&to_inverse)).collect(),
        }),
    };
    assoc.validate()?;
    Ok(assoc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use flatness_expr::parse_expr_with;

    fn e(s: &str) -> RationalExpr {
        parse_expr_with(s, |_| true).unwrap()
    }

    fn example() -> SystemModel {
        SystemModel::from_strs(
            "example",
            &["x1", "x2", "x3", "x4"],
            &["u1", "u2"],
            &["x4", "u2", "x3 + x2*x4 + x1*u2", "u1"],
        )
        .unwrap()
    }

    #[test]
    fn example_dimensions() {
        let s = example();
        assert_eq!((s.n(), s.m()), (4, 2));
        assert_eq!(s.jacobian().generic_rank(), 4);
    }

    #[test]
    fn drift_only_system_is_rejected() {
        let err = SystemModel::from_strs("drift", &["x1"], &["u1"], &["x1"]).unwrap_err();
        assert!(matches!(
            err,
            Error::Rank(RankViolation::InputRank { rank: 0, m: 1 })
        ));
    }

    #[test]
    fn extension_prefers_states() {
        assert_eq!(
            choose_extension(&example()).unwrap(),
            vec![e("x1"), e("x2")]
        );
        let s = SystemModel::from_strs("i", &["x1"], &["u1"], &["u1"]).unwrap();
        assert_eq!(choose_extension(&s).unwrap(), vec![e("x1")]);
        let s = SystemModel::from_strs("a", &["x1"], &["u1"], &["x1 + u1"]).unwrap();
        assert_eq!(choose_extension(&s).unwrap(), vec![e("x1")]);
    }

    #[test]
    fn example_inverse() {
        let inv = invert_extended_map(&example()).unwrap();
        let names: Vec<String> = inv
            .xplus
            .iter()
            .chain(&inv.zeta)
            .map(|v| v.to_string())
            .collect();
        assert_eq!(
            names,
            ["x1_plus", "x2_plus", "x3_plus", "x4_plus", "zeta1", "zeta2"]
        );
        assert_eq!(inv.psi_x[0], e("zeta1"));
        assert_eq!(inv.psi_x[1], e("zeta2"));
        assert_eq!(inv.psi_x[2], e("x3_plus - x1_plus*zeta2 - x2_plus*zeta1"));
        assert_eq!(inv.psi_x[3], e("x1_plus"));
        assert_eq!(inv.psi_u, vec![e("x4_plus"), e("x2_plus")]);
    }

    #[test]
    fn affine_inverse() {
        let s = SystemModel::from_strs("a", &["x1"], &["u1"], &["x1 + u1"]).unwrap();
        let inv = invert_extended_map(&s).unwrap();
        assert_eq!(inv.psi_x, vec![e("zeta1")]);
        assert_eq!(inv.psi_u, vec![e("x1_plus - zeta1")]);
    }

    #[test]
    fn associated_example() {
        let a = build_associated(&example()).unwrap();
        assert_eq!(
            a.f,
            vec![e("v1"), e("v2"), e("z3 - z1*v2 - z2*v1"), e("z1")]
        );
        assert_eq!(a.g.unwrap(), vec![e("z4"), e("z2")]);
    }

    #[test]
    fn wrong_user_inverse_is_rejected() {
        let text = r#"{"name":"i","states":["x"],"inputs":["u"],"f":["u"],"g":["x"],
            "inverse":{"psi_x":["zeta"],"psi_u":["2*xp"],"xplus":["xp"],"zeta":["zeta"]}}"#;
        assert!(matches!(load_system(text), Err(Error::InverseMismatch(_))));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = load_system("{\"name\": \"x\",\n \"states\": [").unwrap_err();
        assert!(matches!(err, Error::Json { line: 2, .. }));
    }

    #[test]
    fn unknown_variable_in_f() {
        let err = SystemModel::from_strs("i", &["x"], &["u"], &["u + w"]).unwrap_err();
        assert!(matches!(err, Error::Expr { .. }));
    }
}
