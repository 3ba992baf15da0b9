//! Extended Jacobian of a parameterization and its rank conditions.

use std::collections::BTreeMap;

use flatness_expr::{ExprMatrix, RationalExpr, Var};
use serde::{Deserialize, Serialize};

use crate::flatout::Parameterization;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    Forward,
    Backward,
    General,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    /// `rank d_{y[-R1]} F_x`
    pub deepest_fx: usize,
    /// `rank d_{y[-R1]} F_g`
    pub deepest_fg: usize,
    /// `rank d_{y[R2-1]} F_x`
    pub top_fx: usize,
    /// `rank d_{y[R2]} F_u`
    pub top_fu: usize,
    pub m: usize,
    /// Forward shape: `R1 = 0`, both deepest ranks `m`, both top ranks equal
    /// and below `m`.
    pub forward_conditions: bool,
    /// Backward shape: `R2 = 0`, both deepest ranks equal and below `m`,
    /// both top ranks `m`.
    pub backward_conditions: bool,
    /// All four ranks equal `m` with `R1 = 0`; happens for static outputs
    /// such as `y = x` of `x+ = u`, where no strict inequality can hold.
    pub degenerate: bool,
    /// `rank d_{y[R2-1]} F_x == rank d_{y[R2]} F_u`
    pub top_ranks_equal: bool,
    /// Predicate selected by the mode (`top_ranks_equal` for general).
    pub holds: bool,
}

impl RankReport {
    pub fn ranks(&self) -> [usize; 4] {
        [self.deepest_fx, self.deepest_fg, self.top_fx, self.top_fu]
    }
}

/// Column variables `y_j@s` for `s` in `[-R1_j, R2_j]`, ordered by the
/// level `s + R1_j`, then by component. With `R1 = 0` this is ascending
/// shift; otherwise every output's deepest column comes first.
pub fn jacobian_columns(p: &Parameterization) -> Vec<Var> {
    let mut cols: Vec<(i32, usize, Var)> = Vec::new();
    for j in 0..p.m() {
        let (r1, r2) = (p.r1[j] as i32, p.r2[j] as i32);
        for s in -r1..=r2 {
            cols.push((s + r1, j, p.y(j, s)));
        }
    }
    cols.sort_by_key(|c| (c.0, c.1));
    cols.into_iter().map(|c| c.2).collect()
}

/// Rows `(F_x, F_u, F_g)` differentiated by [`jacobian_columns`].
pub fn build_extended_jacobian(p: &Parameterization) -> ExprMatrix {
    ExprMatrix::jacobian(&p.rows(), &jacobian_columns(p))
}

fn block_rank(rows: &[RationalExpr], cols: &[Var]) -> usize {
    ExprMatrix::jacobian(rows, cols).generic_rank()
}

pub fn check_rank_conditions(p: &Parameterization, mode: RankMode) -> RankReport {
    let m = p.m();
    let deepest: Vec<Var> = (0..m).map(|j| p.y(j, -(p.r1[j] as i32))).collect();
    let below_top: Vec<Var> = (0..m).map(|j| p.y(j, p.r2[j] as i32 - 1)).collect();
    let top: Vec<Var> = (0..m).map(|j| p.y(j, p.r2[j] as i32)).collect();
    let deepest_fx = block_rank(&p.f_x, &deepest);
    let deepest_fg = block_rank(&p.f_g, &deepest);
    let top_fx = block_rank(&p.f_x, &below_top);
    let top_fu = block_rank(&p.f_u, &top);
    let r1_zero = p.r1.iter().all(|&r| r == 0);
    let r2_zero = p.r2.iter().all(|&r| r == 0);
    let top_ranks_equal = top_fx == top_fu;
    let forward_conditions =
        r1_zero && deepest_fx == m && deepest_fg == m && top_ranks_equal && top_fx < m;
    let backward_conditions =
        r2_zero && deepest_fx == deepest_fg && deepest_fx < m && top_fx == m && top_fu == m;
    let degenerate = r1_zero
        && [deepest_fx, deepest_fg, top_fx, top_fu]
            .iter()
            .all(|&r| r == m);
    let holds = match mode {
        RankMode::Forward => forward_conditions || degenerate,
        RankMode::Backward => backward_conditions,
        RankMode::General => top_ranks_equal,
    };
    RankReport {
        deepest_fx,
        deepest_fg,
        top_fx,
        top_fu,
        m,
        forward_conditions,
        backward_conditions,
        degenerate,
        top_ranks_equal,
        holds,
    }
}

/// Whether `d_{y[R2]} F_x` vanishes identically.
pub fn top_block_of_fx_is_zero(p: &Parameterization) -> bool {
    let top: Vec<Var> = (0..p.m()).map(|j| p.y(j, p.r2[j] as i32)).collect();
    ExprMatrix::jacobian(&p.f_x, &top).is_zero()
}

fn relabel(p: &Parameterization, e: &RationalExpr, offset: i32) -> RationalExpr {
    let map: BTreeMap<Var, Var> = e
        .vars()
        .into_iter()
        .filter(|v| p.outputs.iter().any(|y| y.name() == v.name()))
        .map(|v| {
            let w = v.with_shift(-v.shift() - offset);
            (v, w)
        })
        .collect();
    e.rename(&map)
}

/// Parameterization of the associated system read off from one of the
/// original system: `z` rows take `y_j@s -> y_j@(-s-1)`, the `v` and `eta`
/// rows take `y_j@s -> y_j@(-s)` and come from `F_g` and `F_u`
/// respectively. `R1` and `R2` trade places.
pub fn mirror_parameterization(p: &Parameterization) -> Parameterization {
    Parameterization {
        outputs: p.outputs.clone(),
        f_x: p.f_x.iter().map(|e| relabel(p, e, 1)).collect(),
        f_u: p.f_g.iter().map(|e| relabel(p, e, 0)).collect(),
        f_g: p.f_u.iter().map(|e| relabel(p, e, 0)).collect(),
        r1: p.r2.clone(),
        r2: p.r1.clone(),
    }
}

/// Exact comparison of the extended Jacobian of `assoc` with the mirrored
/// Jacobian of `orig` (both parameterizations must name their outputs
/// alike).
pub fn mirror_matches(orig: &Parameterization, assoc: &Parameterization) -> bool {
    let mirrored = mirror_parameterization(orig);
    mirrored.outputs == assoc.outputs
        && mirrored.r1 == assoc.r1
        && mirrored.r2 == assoc.r2
        && build_extended_jacobian(&mirrored) == build_extended_jacobian(assoc)
}
