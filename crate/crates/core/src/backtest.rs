//! Backward-flatness through the forward test on the associated system.

use std::collections::BTreeMap;

use flatness_expr::RationalExpr;

use crate::error::{Error, Result};
use crate::flatout::{derive_forward_flat_output, FlatOutputCandidate};
use crate::geomtest::{forward_flatness_test, SequenceRecord};
use crate::sysmodel::{build_associated, SystemModel};

#[derive(Clone, Debug)]
pub struct BackwardVerdict {
    pub backward_flat: bool,
    pub associated: SystemModel,
    /// Forward test on the associated system.
    pub forward_record: SequenceRecord,
    /// Output on the original system, when derivation was requested and
    /// succeeded.
    pub derived_output: Option<FlatOutputCandidate>,
    /// Output on the associated system that `derived_output` came from.
    pub associated_output: Option<FlatOutputCandidate>,
    /// Why derivation did not produce an output.
    pub derivation_error: Option<String>,
}

/// The original system is backward-flat exactly when its associated system
/// is forward-flat.
pub fn backward_flatness_test(
    s: &SystemModel,
    derive: bool,
    max_degree: u32,
) -> Result<BackwardVerdict> {
    let s = s.complete()?;
    let associated = build_associated(&s)?;
    let forward_record = forward_flatness_test(&associated)?;
    let mut verdict = BackwardVerdict {
        backward_flat: forward_record.forward_flat,
        associated,
        forward_record,
        derived_output: None,
        associated_output: None,
        derivation_error: None,
    };
    if derive && verdict.backward_flat {
        let derived =
            derive_forward_flat_output(&verdict.associated, &verdict.forward_record, max_degree)
                .and_then(|yhat| {
                    let y = map_output_to_original(&yhat, &verdict.associated, &s)?;
                    Ok((yhat, y))
                });
        match derived {
            Ok((yhat, y)) => {
                verdict.associated_output = Some(yhat);
                verdict.derived_output = Some(y);
            }
            Err(e) => verdict.derivation_error = Some(e.to_string()),
        }
    }
    Ok(verdict)
}

/// `y = yhat(f(x, u))`: a state-only output of the associated system becomes
/// an `(x, u)` output of the original one.
pub fn map_output_to_original(
    yhat: &FlatOutputCandidate,
    assoc: &SystemModel,
    s: &SystemModel,
) -> Result<FlatOutputCandidate> {
    if assoc.n() != s.n() || assoc.m() != s.m() {
        return Err(Error::UnsupportedCandidate(
            "associated system and original system differ in size".into(),
        ));
    }
    let bindings: BTreeMap<_, RationalExpr> = assoc
        .states
        .iter()
        .cloned()
        .zip(s.f.iter().cloned())
        .collect();
    let mut components = Vec::new();
    for c in &yhat.components {
        if let Some(v) = c.vars().into_iter().find(|v| !bindings.contains_key(v)) {
            return Err(Error::UnsupportedCandidate(format!(
                "output depends on `{v}`; only unshifted associated states are supported"
            )));
        }
        components.push(
            c.substitute(&bindings)
                .map_err(|e| Error::expr("z -> f(x, u)", e))?,
        );
    }
    FlatOutputCandidate::new(s, components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use flatness_expr::parse_expr_with;

    fn e(s: &str) -> RationalExpr {
        parse_expr_with(s, |_| true).unwrap()
    }

    #[test]
    fn integrator_is_backward_flat() {
        let s = SystemModel::from_strs("i", &["x"], &["u"], &["u"]).unwrap();
        let v = backward_flatness_test(&s, true, 2).unwrap();
        assert!(v.backward_flat);
        assert_eq!(v.derived_output.unwrap().components, vec![e("u")]);
    }

    #[test]
    fn output_depending_on_v_is_rejected() {
        let s = SystemModel::from_strs("i", &["x"], &["u"], &["u"]).unwrap();
        let assoc = build_associated(&s).unwrap();
        let yhat = FlatOutputCandidate::new(&assoc, vec![e("v1")]).unwrap();
        assert!(matches!(
            map_output_to_original(&yhat, &assoc, &s),
            Err(Error::UnsupportedCandidate(_))
        ));
    }
}
