//! Exact point checks on simulated trajectories.

use std::collections::BTreeMap;

use flatness_expr::{Rational, RationalExpr, Var};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flatout::{FlatOutputCandidate, Parameterization, ShiftAlgebra};
use crate::sysmodel::{build_associated, choose_extension, SystemModel};

const RETRIES: usize = 20;

/// `x(0..=N)`, `u(0..N)` and `zeta(0..N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub horizon: usize,
    pub x: Vec<Vec<Rational>>,
    pub u: Vec<Vec<Rational>>,
    pub zeta: Vec<Vec<Rational>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckFailure {
    pub seed: u64,
    pub step: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub passed: bool,
    pub horizon: usize,
    pub seeds: usize,
    pub base_seed: u64,
    pub first_failure: Option<CheckFailure>,
}

fn point(vars: &[Var], values: &[Rational]) -> impl Iterator<Item = (Var, Rational)> {
    vars.iter()
        .cloned()
        .zip(values.iter().cloned())
        .collect::<Vec<_>>()
        .into_iter()
}

fn eval_all(exprs: &[RationalExpr], at: &BTreeMap<Var, Rational>) -> Option<Vec<Rational>> {
    exprs.iter().map(|e| e.eval(at)).collect()
}

pub fn simulate(
    s: &SystemModel,
    x0: &[Rational],
    u_seq: &[Vec<Rational>],
    horizon: usize,
) -> Result<Trajectory> {
    if x0.len() != s.n() || u_seq.len() < horizon || u_seq.iter().any(|u| u.len() != s.m()) {
        return Err(Error::Schema(
            "initial state or input sequence has the wrong size".into(),
        ));
    }
    let g = match &s.g {
        Some(g) => g.clone(),
        None => choose_extension(s)?,
    };
    let mut traj = Trajectory {
        horizon,
        x: vec![x0.to_vec()],
        u: Vec::new(),
        zeta: Vec::new(),
    };
    for (k, u) in u_seq.iter().take(horizon).enumerate() {
        let at: BTreeMap<Var, Rational> = point(&s.states, &traj.x[k])
            .chain(point(&s.inputs, u))
            .collect();
        let next = eval_all(&s.f, &at).ok_or(Error::DenominatorZero { step: k })?;
        let zeta = eval_all(&g, &at).ok_or(Error::DenominatorZero { step: k })?;
        traj.x.push(next);
        traj.u.push(u.clone());
        traj.zeta.push(zeta);
    }
    Ok(traj)
}

/// Rational with numerator in `[-9, 9]` and denominator in `[1, 9]`.
pub fn random_rational(rng: &mut impl Rng) -> Rational {
    Rational::new(
        BigInt::from(rng.gen_range(-9i64..=9)),
        BigInt::from(rng.gen_range(1i64..=9)),
    )
}

fn random_vec(rng: &mut impl Rng, len: usize) -> Vec<Rational> {
    (0..len).map(|_| random_rational(rng)).collect()
}

fn rng_for(base_seed: u64, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(i as u64))
}

/// Simulates `s` from random data and checks that the time-mirrored
/// sequences `z(j) = x(2k-j+1)`, `v(j) = zeta(2k-j)`, `eta(j) = u(2k-j)`
/// with `k = ceil(N/2)` solve the associated system.
pub fn check_correspondence(
    s: &SystemModel,
    horizon: usize,
    seeds: usize,
    base_seed: u64,
) -> Result<CheckSummary> {
    let s = s.complete()?;
    let assoc = build_associated(&s)?;
    check_correspondence_with(&s, &assoc, horizon, seeds, base_seed)
}

/// As [`check_correspondence`] against a given associated system.
pub fn check_correspondence_with(
    s: &SystemModel,
    assoc: &SystemModel,
    horizon: usize,
    seeds: usize,
    base_seed: u64,
) -> Result<CheckSummary> {
    let g_hat = assoc.g.clone().ok_or(Error::NoInverse)?;
    let k = horizon.div_ceil(2);
    let mut summary = CheckSummary {
        passed: true,
        horizon,
        seeds,
        base_seed,
        first_failure: None,
    };
    for i in 0..seeds {
        let mut rng = rng_for(base_seed, i);
        let mut outcome = None;
        for _ in 0..RETRIES {
            let x0 = random_vec(&mut rng, s.n());
            let us: Vec<Vec<Rational>> =
                (0..horizon).map(|_| random_vec(&mut rng, s.m())).collect();
            let Ok(traj) = simulate(s, &x0, &us, horizon) else {
                continue;
            };
            match mirrored_failure(&traj, assoc, &g_hat, k) {
                Some(r) => {
                    outcome = Some(r);
                    break;
                }
                None => continue,
            }
        }
        match outcome {
            Some(None) => {}
            Some(Some(step)) => {
                summary.passed = false;
                summary.first_failure.get_or_insert(CheckFailure {
                    seed: base_seed.wrapping_add(i as u64),
                    step,
                });
            }
            None => return Err(Error::DenominatorZero { step: 0 }),
        }
    }
    Ok(summary)
}

/// `None` when a denominator vanished (resample), `Some(None)` on success,
/// `Some(Some(j))` at the first associated step `j` that fails.
fn mirrored_failure(
    traj: &Trajectory,
    assoc: &SystemModel,
    g_hat: &[RationalExpr],
    k: usize,
) -> Option<Option<usize>> {
    let mut first = None;
    for t in (0..traj.horizon).rev() {
        let j = 2 * k - t;
        let at: BTreeMap<Var, Rational> = point(&assoc.states, &traj.x[t + 1])
            .chain(point(&assoc.inputs, &traj.zeta[t]))
            .collect();
        let z_next = eval_all(&assoc.f, &at)?;
        let eta = eval_all(g_hat, &at)?;
        if first.is_none() && (z_next != traj.x[t] || eta != traj.u[t]) {
            first = Some(j);
        }
    }
    Some(first)
}

/// Draws random flat-output sequences, rebuilds `x` and `u` through `p`,
/// and checks the system equations and that `cand` reproduces the drawn
/// sequences.
pub fn check_parameterization_roundtrip(
    s: &SystemModel,
    p: &Parameterization,
    cand: &FlatOutputCandidate,
    horizon: usize,
    seeds: usize,
    base_seed: u64,
) -> Result<CheckSummary> {
    let alg = ShiftAlgebra::new(s)?;
    let sys = alg.system();
    let g = sys.g.clone().expect("completed");
    let lo = -(p.r1.iter().copied().max().unwrap_or(0) as i64);
    let hi = horizon as i64 - 1 + p.r2.iter().copied().max().unwrap_or(0) as i64;
    let mut summary = CheckSummary {
        passed: true,
        horizon,
        seeds,
        base_seed,
        first_failure: None,
    };
    for i in 0..seeds {
        let mut rng = rng_for(base_seed, i);
        let mut outcome = None;
        for _ in 0..RETRIES {
            let ys: Vec<Vec<Rational>> = (0..p.m())
                .map(|_| random_vec(&mut rng, (hi - lo + 1) as usize))
                .collect();
            if let Some(r) = roundtrip_failure(&alg, &g, p, cand, &ys, lo, horizon) {
                outcome = Some(r);
                break;
            }
        }
        match outcome {
            Some(None) => {}
            Some(Some(step)) => {
                summary.passed = false;
                summary.first_failure.get_or_insert(CheckFailure {
                    seed: base_seed.wrapping_add(i as u64),
                    step,
                });
            }
            None => return Err(Error::DenominatorZero { step: 0 }),
        }
    }
    Ok(summary)
}

fn y_point(
    p: &Parameterization,
    exprs: &[RationalExpr],
    ys: &[Vec<Rational>],
    lo: i64,
    t: usize,
) -> Option<BTreeMap<Var, Rational>> {
    let mut at = BTreeMap::new();
    for e in exprs {
        for v in e.vars() {
            let j = p.outputs.iter().position(|y| y.name() == v.name())?;
            let idx = t as i64 + v.shift() as i64 - lo;
            at.insert(v.clone(), ys[j].get(usize::try_from(idx).ok()?)?.clone());
        }
    }
    Some(at)
}

fn roundtrip_failure(
    alg: &ShiftAlgebra,
    g: &[RationalExpr],
    p: &Parameterization,
    cand: &FlatOutputCandidate,
    ys: &[Vec<Rational>],
    lo: i64,
    horizon: usize,
) -> Option<Option<usize>> {
    let sys = alg.system();
    let mut xs = Vec::new();
    let mut us = Vec::new();
    for t in 0..=horizon {
        let at = y_point(p, &p.f_x, ys, lo, t)?;
        xs.push(eval_all(&p.f_x, &at)?);
        if t < horizon {
            let at = y_point(p, &p.f_u, ys, lo, t)?;
            us.push(eval_all(&p.f_u, &at)?);
        }
    }
    let mut zetas = Vec::new();
    for t in 0..horizon {
        let at: BTreeMap<Var, Rational> = point(&sys.states, &xs[t])
            .chain(point(&sys.inputs, &us[t]))
            .collect();
        if eval_all(&sys.f, &at)? != xs[t + 1] {
            return Some(Some(t));
        }
        zetas.push(eval_all(g, &at)?);
    }
    // cand(x(t), u(t..), zeta(..t-1)) = y(t) wherever the window fits
    for t in 0..horizon {
        'component: for (j, c) in cand.components.iter().enumerate() {
            let mut at = BTreeMap::new();
            for v in c.vars() {
                let value = if let Some(i) = sys.states.iter().position(|x| x == &v) {
                    xs[t][i].clone()
                } else if let Some(i) = sys.inputs.iter().position(|u| u.name() == v.name()) {
                    match us.get(t + v.shift() as usize) {
                        Some(u) => u[i].clone(),
                        None => continue 'component,
                    }
                } else {
                    let i = alg.zeta().iter().position(|z| z.name() == v.name())?;
                    match usize::try_from(t as i64 + v.shift() as i64)
                        .ok()
                        .and_then(|k| zetas.get(k))
                    {
                        Some(z) => z[i].clone(),
                        None => continue 'component,
                    }
                };
                at.insert(v, value);
            }
            if c.eval(&at)? != ys[j][(t as i64 - lo) as usize] {
                return Some(Some(t));
            }
        }
    }
    Some(None)
}
