//! Vector fields, distributions and the forward-flatness sequence
//! `E_0 = span{du}`, `D_{k-1}` largest projectable in `E_{k-1}`,
//! `Delta_k = f_*(D_{k-1})`, `E_k = pi_*^{-1}(Delta_k)`.
//!
//! Spans, memberships and ranks are taken over the rational function field.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use flatness_expr::{ExprMatrix, RationalExpr, Var};

use crate::error::{Error, Result};
use crate::sysmodel::SystemModel;

#[derive(Clone, PartialEq, Eq)]
pub struct VectorField {
    chart: Vec<Var>,
    coeffs: Vec<RationalExpr>,
}

impl VectorField {
    pub fn new(chart: Vec<Var>, coeffs: Vec<RationalExpr>) -> Result<Self> {
        if chart.len() != coeffs.len() {
            return Err(Error::ChartMismatch);
        }
        Ok(VectorField { chart, coeffs })
    }

    /// The coordinate field `d/dv`.
    pub fn coordinate(chart: &[Var], v: &Var) -> Self {
        let coeffs = chart
            .iter()
            .map(|c| {
                if c == v {
                    RationalExpr::one()
                } else {
                    RationalExpr::zero()
                }
            })
            .collect();
        VectorField {
            chart: chart.to_vec(),
            coeffs,
        }
    }

    pub fn chart(&self) -> &[Var] {
        &self.chart
    }

    pub fn coeffs(&self) -> &[RationalExpr] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Directional derivative `v(e)`.
    pub fn apply(&self, e: &RationalExpr) -> RationalExpr {
        self.chart
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| !c.is_zero())
            .map(|(x, c)| {
                let d = e.diff(x);
                if d.is_zero() {
                    d
                } else {
                    c * &d
                }
            })
            .sum()
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (x, c) in self.chart.iter().zip(&self.coeffs) {
            if c.is_zero() {
                continue;
            }
            let text = c.to_string();
            let (neg, body) = match text.strip_prefix('-') {
                Some(rest) if !rest.contains(['+', '-', '/']) => (true, rest.to_string()),
                _ => (false, text),
            };
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            if body == "1" {
                write!(f, "d_{x}")?;
            } else if body.contains(['+', '-', '/']) {
                write!(f, "({body})*d_{x}")?;
            } else {
                write!(f, "{body}*d_{x}")?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// `[a, b]^i = a(b^i) - b(a^i)`.
pub fn lie_bracket(a: &VectorField, b: &VectorField) -> Result<VectorField> {
    if a.chart != b.chart {
        return Err(Error::ChartMismatch);
    }
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(ai, bi)| &a.apply(bi) - &b.apply(ai))
        .collect();
    Ok(VectorField {
        chart: a.chart.clone(),
        coeffs,
    })
}

/// A distribution in normal form: the basis is the reduced row echelon form
/// of the field coefficients, pivots in chart order.
#[derive(Clone, PartialEq, Eq)]
pub struct Distribution {
    chart: Vec<Var>,
    basis: Vec<VectorField>,
}

impl Distribution {
    /// Span of coefficient vectors over `chart`.
    pub fn span(chart: &[Var], fields: Vec<Vec<RationalExpr>>) -> Self {
        let width = chart.len();
        let m = ExprMatrix::from_rows(fields, width).expect("field length matches chart");
        let (r, pivots) = m.rref();
        let basis = (0..pivots.len())
            .map(|i| VectorField {
                chart: chart.to_vec(),
                coeffs: r.row(i).to_vec(),
            })
            .collect();
        Distribution {
            chart: chart.to_vec(),
            basis,
        }
    }

    pub fn from_fields(chart: &[Var], fields: &[VectorField]) -> Result<Self> {
        if fields.iter().any(|v| v.chart != chart) {
            return Err(Error::ChartMismatch);
        }
        Ok(Self::span(
            chart,
            fields.iter().map(|v| v.coeffs.clone()).collect(),
        ))
    }

    pub fn empty(chart: &[Var]) -> Self {
        Distribution {
            chart: chart.to_vec(),
            basis: Vec::new(),
        }
    }

    /// `span{d/dv : v in vars}`.
    pub fn coordinates(chart: &[Var], vars: &[Var]) -> Self {
        let fields = vars
            .iter()
            .map(|v| VectorField::coordinate(chart, v).coeffs)
            .collect();
        Self::span(chart, fields)
    }

    pub fn chart(&self) -> &[Var] {
        &self.chart
    }

    pub fn basis(&self) -> &[VectorField] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn rows(&self) -> Vec<Vec<RationalExpr>> {
        self.basis.iter().map(|v| v.coeffs.clone()).collect()
    }

    pub fn contains(&self, v: &VectorField) -> bool {
        if v.chart != self.chart {
            return false;
        }
        if v.is_zero() {
            return true;
        }
        let mut rows = self.rows();
        rows.push(v.coeffs.clone());
        ExprMatrix::from_rows(rows, self.chart.len())
            .expect("rectangular")
            .generic_rank()
            == self.dim()
    }

    pub fn is_subset_of(&self, other: &Distribution) -> bool {
        self.basis.iter().all(|v| other.contains(v))
    }

    /// Equality of spans; with normal-form bases this is plain equality, but
    /// membership both ways does not rely on that.
    pub fn span_eq(&self, other: &Distribution) -> bool {
        self.dim() == other.dim() && self.is_subset_of(other) && other.is_subset_of(self)
    }

    /// Sum of two distributions on the same chart.
    pub fn sum(&self, other: &Distribution) -> Result<Distribution> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch);
        }
        let mut rows = self.rows();
        rows.extend(other.rows());
        Ok(Self::span(&self.chart, rows))
    }

    /// Covectors vanishing on the distribution.
    pub fn annihilator(&self) -> Vec<Vec<RationalExpr>> {
        if self.basis.is_empty() {
            return (0..self.chart.len())
                .map(|i| {
                    let mut w = vec![RationalExpr::zero(); self.chart.len()];
                    w[i] = RationalExpr::one();
                    w
                })
                .collect();
        }
        ExprMatrix::from_rows(self.rows(), self.chart.len())
            .expect("rectangular")
            .nullspace()
    }

    /// Pairs of basis fields whose bracket leaves the span.
    pub fn involutivity_defects(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.basis.len() {
            for j in i + 1..self.basis.len() {
                let b = lie_bracket(&self.basis[i], &self.basis[j]).expect("same chart");
                if !self.contains(&b) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn is_involutive(&self) -> bool {
        self.involutivity_defects().is_empty()
    }

    /// Projection onto the sub-chart `vars` (components outside are dropped).
    pub fn restrict_to(&self, vars: &[Var]) -> Distribution {
        let idx: Vec<usize> = vars
            .iter()
            .map(|v| {
                self.chart
                    .iter()
                    .position(|c| c == v)
                    .expect("var in chart")
            })
            .collect();
        let rows = self
            .basis
            .iter()
            .map(|b| idx.iter().map(|&i| b.coeffs[i].clone()).collect())
            .collect();
        Self::span(vars, rows)
    }

    /// Coefficient vectors as strings, one list per basis field.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.basis
            .iter()
            .map(|b| b.coeffs.iter().map(|c| c.to_string()).collect())
            .collect()
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.basis.iter().map(|b| b.to_string()).collect();
        write!(f, "span{{{}}}", parts.join(", "))
    }
}

impl fmt::Debug for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// `ker f_*`, the vertical distribution on `(x, u)`.
pub fn kernel_distribution(s: &SystemModel) -> Distribution {
    Distribution::span(&s.coordinates(), s.jacobian().nullspace())
}

/// `f_*(D)` expressed on the chart `x+`; fails when the result depends on
/// the fibre coordinates `zeta`.
pub fn pushforward_distribution(s: &SystemModel, d: &Distribution) -> Result<Distribution> {
    let inv = s.inverse.as_ref().ok_or(Error::NoInverse)?;
    if d.chart != s.coordinates() {
        return Err(Error::ChartMismatch);
    }
    let to_image: BTreeMap<Var, RationalExpr> = s
        .states
        .iter()
        .cloned()
        .zip(inv.psi_x.iter().cloned())
        .chain(s.inputs.iter().cloned().zip(inv.psi_u.iter().cloned()))
        .collect();
    let jac = s.jacobian();
    let mut images = Vec::with_capacity(d.dim());
    for v in &d.basis {
        let w = jac.mul_vec(&v.coeffs).expect("shapes agree");
        let w = w
            .iter()
            .map(|e| e.substitute(&to_image))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::expr("pushforward", e))?;
        images.push(w);
    }
    let out = Distribution::span(&inv.xplus, images);
    let zeta: BTreeSet<&Var> = inv.zeta.iter().collect();
    let mut hits = BTreeSet::new();
    for b in &out.basis {
        for c in &b.coeffs {
            for v in c.vars() {
                if zeta.contains(&v) {
                    hits.insert(v.to_string());
                }
            }
        }
    }
    if !hits.is_empty() {
        return Err(Error::NotProjectable(
            hits.into_iter().collect::<Vec<_>>().join(", "),
        ));
    }
    Ok(out)
}

/// Largest projectable subdistribution of `e`, by the fixed point
/// `D <- { v in D : [w, v] in D + V for all w in V }` with `V = ker f_*`,
/// certified by a successful pushforward.
pub fn largest_projectable_subdistribution(
    s: &SystemModel,
    e: &Distribution,
) -> Result<Distribution> {
    let kernel = kernel_distribution(s);
    let mut d = e.clone();
    loop {
        if d.dim() == 0 {
            break;
        }
        let ann = d.sum(&kernel)?.annihilator();
        if ann.is_empty() {
            break;
        }
        // condition on coefficients a: sum_i a_i <omega_k, [w, d_i]> = 0
        let mut rows = Vec::new();
        for w in kernel.basis() {
            let brackets: Vec<VectorField> = d
                .basis
                .iter()
                .map(|di| lie_bracket(w, di))
                .collect::<Result<_>>()?;
            for omega in &ann {
                let row: Vec<RationalExpr> = brackets
                    .iter()
                    .map(|b| {
                        omega
                            .iter()
                            .zip(&b.coeffs)
                            .filter(|(o, c)| !o.is_zero() && !c.is_zero())
                            .map(|(o, c)| o * c)
                            .sum()
                    })
                    .collect();
                if row.iter().any(|x| !x.is_zero()) {
                    rows.push(row);
                }
            }
        }
        if rows.is_empty() {
            break;
        }
        let system = ExprMatrix::from_rows(rows, d.dim()).expect("rectangular");
        let combos = system.nullspace();
        let fields: Vec<Vec<RationalExpr>> = combos
            .iter()
            .map(|a| {
                (0..d.chart.len())
                    .map(|c| {
                        a.iter()
                            .zip(&d.basis)
                            .filter(|(ai, b)| !ai.is_zero() && !b.coeffs[c].is_zero())
                            .map(|(ai, b)| ai * &b.coeffs[c])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let next = Distribution::span(&d.chart, fields);
        if next.dim() == d.dim() {
            break;
        }
        d = next;
    }
    if !d.is_subset_of(e) {
        return Err(Error::Internal(format!("{d} is not contained in {e}")));
    }
    pushforward_distribution(s, &d)?;
    Ok(d)
}

/// `pi_*^{-1}(Delta)`: rename `x+` to `x` and add every input direction.
pub fn lift_and_extend(delta: &Distribution, s: &SystemModel) -> Result<Distribution> {
    let inv = s.inverse.as_ref().ok_or(Error::NoInverse)?;
    if delta.chart != inv.xplus {
        return Err(Error::ChartMismatch);
    }
    let rename: BTreeMap<Var, Var> = inv
        .xplus
        .iter()
        .cloned()
        .zip(s.states.iter().cloned())
        .collect();
    let chart = s.coordinates();
    let mut rows: Vec<Vec<RationalExpr>> = delta
        .basis
        .iter()
        .map(|b| {
            b.coeffs
                .iter()
                .map(|c| c.rename(&rename))
                .chain(std::iter::repeat_n(RationalExpr::zero(), s.m()))
                .collect()
        })
        .collect();
    rows.extend(
        s.inputs
            .iter()
            .map(|u| VectorField::coordinate(&chart, u).coeffs),
    );
    Ok(Distribution::span(&chart, rows))
}

/// Full record of one run of the sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRecord {
    pub chart: Vec<Var>,
    /// `E_0 .. E_kbar` (the run stops early once `E_k` is the whole tangent
    /// space, since the next step cannot grow).
    pub e: Vec<Distribution>,
    /// `D_0 ..`, one per computed step.
    pub d: Vec<Distribution>,
    /// `Delta_1 ..` on the chart `x+`.
    pub delta: Vec<Distribution>,
    pub dims: Vec<usize>,
    pub stop_index: usize,
    pub forward_flat: bool,
    pub warnings: Vec<String>,
}

impl SequenceRecord {
    /// `(x, u)` dimension of the ambient space.
    pub fn ambient_dim(&self) -> usize {
        self.chart.len()
    }
}

/// Runs the distribution sequence and applies the dimension criterion
/// `dim E_{kbar-1} = n + m`.
pub fn forward_flatness_test(s: &SystemModel) -> Result<SequenceRecord> {
    let s = s.complete()?;
    let chart = s.coordinates();
    let full = chart.len();
    let mut e = vec![Distribution::coordinates(&chart, &s.inputs)];
    let mut d = Vec::new();
    let mut delta = Vec::new();
    let mut warnings = Vec::new();
    let mut k = 1;
    let stop_index = loop {
        if k > s.n() + 2 {
            return Err(Error::Internal(format!(
                "sequence did not stabilize within {} steps",
                s.n() + 2
            )));
        }
        let prev = e.last().expect("nonempty");
        if prev.dim() == full {
            break k;
        }
        let dk = largest_projectable_subdistribution(&s, prev)?;
        let dl = pushforward_distribution(&s, &dk)?;
        let ek = lift_and_extend(&dl, &s)?;
        if !prev.is_subset_of(&ek) {
            return Err(Error::Internal(format!(
                "E_{} = {prev} is not contained in E_{k} = {ek}",
                k - 1
            )));
        }
        if ek.dim() < prev.dim() {
            return Err(Error::Internal(format!(
                "dim E_{k} dropped below dim E_{}",
                k - 1
            )));
        }
        if !ek.is_involutive() {
            warnings.push(format!("E_{k} is not involutive"));
        }
        let stalled = ek.dim() == prev.dim();
        d.push(dk);
        delta.push(dl);
        e.push(ek);
        if stalled {
            break k;
        }
        k += 1;
    };
    let dims: Vec<usize> = e.iter().map(|x| x.dim()).collect();
    let forward_flat = e[stop_index - 1].dim() == full;
    Ok(SequenceRecord {
        chart,
        e,
        d,
        delta,
        dims,
        stop_index,
        forward_flat,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use flatness_expr::parse_expr_with;

    fn e(s: &str) -> RationalExpr {
        parse_expr_with(s, |_| true).unwrap()
    }

    fn vars(names: &[&str]) -> Vec<Var> {
        names.iter().map(|n| Var::named(n)).collect()
    }

    fn field(chart: &[Var], coeffs: &[&str]) -> VectorField {
        VectorField::new(chart.to_vec(), coeffs.iter().map(|c| e(c)).collect()).unwrap()
    }

    #[test]
    fn bracket_by_hand() {
        let chart = vars(&["z1", "z2", "z3", "z4"]);
        let a = field(&chart, &["0", "1", "-z4", "0"]);
        let b = field(&chart, &["0", "0", "0", "1"]);
        assert_eq!(
            lie_bracket(&a, &b).unwrap(),
            field(&chart, &["0", "0", "1", "0"])
        );
        assert!(lie_bracket(&a, &a).unwrap().is_zero());
    }

    #[test]
    fn bracket_rejects_chart_mismatch() {
        let a = field(&vars(&["a"]), &["1"]);
        let b = field(&vars(&["b"]), &["1"]);
        assert!(matches!(lie_bracket(&a, &b), Err(Error::ChartMismatch)));
    }

    #[test]
    fn display_uses_d_notation() {
        let chart = vars(&["x1", "x2", "x3"]);
        assert_eq!(
            field(&chart, &["1", "0", "-u2"]).to_string(),
            "d_x1 - u2*d_x3"
        );
        assert_eq!(
            field(&chart, &["0", "-1", "a + b"]).to_string(),
            "-d_x2 + (a + b)*d_x3"
        );
    }

    #[test]
    fn integrator_sequence() {
        let s = SystemModel::from_strs("i", &["x"], &["u"], &["u"]).unwrap();
        let rec = forward_flatness_test(&s).unwrap();
        assert_eq!(rec.dims, vec![1, 2]);
        assert!(rec.forward_flat);
        // static feedback linearizable: every E_k is already projectable
        for (dk, ek) in rec.d.iter().zip(&rec.e) {
            assert_eq!(dk, ek);
        }
    }

    #[test]
    fn kernel_of_integrator() {
        let s = SystemModel::from_strs("i", &["x"], &["u"], &["u"]).unwrap();
        let k = kernel_distribution(&s);
        assert_eq!(
            k,
            Distribution::coordinates(&s.coordinates(), &vars(&["x"]))
        );
    }

    #[test]
    fn kernel_pushes_forward_to_zero() {
        let s = SystemModel::from_strs(
            "ex",
            &["x1", "x2", "x3", "x4"],
            &["u1", "u2"],
            &["x4", "u2", "x3 + x2*x4 + x1*u2", "u1"],
        )
        .unwrap()
        .complete()
        .unwrap();
        let k = kernel_distribution(&s);
        assert_eq!(k.dim(), 2);
        assert_eq!(pushforward_distribution(&s, &k).unwrap().dim(), 0);
    }

    #[test]
    fn lift_of_empty_and_full() {
        let s = SystemModel::from_strs("i", &["x1", "x2"], &["u"], &["x2", "u"])
            .unwrap()
            .complete()
            .unwrap();
        let xplus = s.inverse.as_ref().unwrap().xplus.clone();
        let lifted = lift_and_extend(&Distribution::empty(&xplus), &s).unwrap();
        assert_eq!(lifted.dim(), 1);
        let lifted = lift_and_extend(&Distribution::coordinates(&xplus, &xplus), &s).unwrap();
        assert_eq!(lifted.dim(), 3);
    }
}
