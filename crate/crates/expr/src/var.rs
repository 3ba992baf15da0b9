use std::fmt;
use std::sync::Arc;

use crate::error::ExprError;

/// A time-shifted variable `name@shift`.
///
/// Variables are ordered lexicographically by name and then by shift; this
/// order drives monomial ordering, printing and pivot selection everywhere.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    name: Arc<str>,
    shift: i32,
}

impl Var {
    /// Creates a variable, validating the identifier.
    pub fn new(name: &str, shift: i32) -> Result<Self, ExprError> {
        if !is_identifier(name) {
            return Err(ExprError::InvalidIdentifier(name.to_string()));
        }
        Ok(Var {
            name: Arc::from(name),
            shift,
        })
    }

    /// Shift-0 variable. Panics on an invalid identifier; meant for literals.
    pub fn named(name: &str) -> Self {
        Self::new(name, 0).expect("invalid identifier")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shift(&self) -> i32 {
        self.shift
    }

    /// Same name, different shift.
    pub fn with_shift(&self, shift: i32) -> Self {
        Var {
            name: self.name.clone(),
            shift,
        }
    }

    /// Same name, shift moved by `delta`.
    pub fn shifted(&self, delta: i32) -> Self {
        self.with_shift(self.shift + delta)
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.shift == 0 {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}@{}", self.name, self.shift)
        }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_name_then_shift() {
        let mut v = [
            Var::new("y2", 0).unwrap(),
            Var::new("y1", 0).unwrap(),
            Var::new("y1", -3).unwrap(),
            Var::new("x", 2).unwrap(),
        ];
        v.sort();
        let s: Vec<String> = v.iter().map(|v| v.to_string()).collect();
        assert_eq!(s, ["x@2", "y1@-3", "y1", "y2"]);
    }

    #[test]
    fn rejects_bad_identifiers() {
        assert!(Var::new("1x", 0).is_err());
        assert!(Var::new("", 0).is_err());
        assert!(Var::new("a-b", 0).is_err());
        assert!(Var::new("zeta_1", -1).is_ok());
    }
}
