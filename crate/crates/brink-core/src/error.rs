use thiserror::Error;

/// Error type shared by every module in the crate.
///
/// Variants split into two classes (see [`ErrorClass`]): input problems the
/// caller can fix by changing arguments, and solver failures where a
/// numerical procedure exhausted its budget.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BrinkError {
    /// A point or grid left the domain where a function is defined.
    #[error("domain error: {what} requires r > {floor}, got r = {r}")]
    Domain { what: &'static str, floor: f64, r: f64 },

    /// A computation would overflow f64 (towers of exponentials do this fast).
    #[error("overflow: {what} exceeds f64 range at n = {n}")]
    Overflow { what: &'static str, n: u32 },

    /// An argument failed validation.
    #[error("invalid parameter {name}: {reason}")]
    Param { name: &'static str, reason: String },

    /// Mismatched vector/grid lengths.
    #[error("shape mismatch: {what} expected {expected}, got {actual}")]
    Shape { what: &'static str, expected: usize, actual: usize },

    /// An iterative procedure failed to meet its tolerance within budget.
    #[error("no convergence in {what} after {iterations} iterations (reached {achieved:e}, wanted {wanted:e})")]
    Convergence { what: &'static str, iterations: usize, achieved: f64, wanted: f64 },

    /// A bracketing search was handed an interval that does not bracket.
    #[error("bracket failure in {what}: {detail}")]
    Bracket { what: &'static str, detail: String },

    /// The operation is not defined for this input variant.
    #[error("unsupported: {what}")]
    Unsupported { what: String },
}

/// Coarse classification used by callers that map errors to process exit
/// codes: validation problems versus solver failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Solver,
}

impl BrinkError {
    pub fn class(&self) -> ErrorClass {
        match self {
            BrinkError::Domain { .. }
            | BrinkError::Overflow { .. }
            | BrinkError::Param { .. }
            | BrinkError::Shape { .. }
            | BrinkError::Unsupported { .. } => ErrorClass::Validation,
            BrinkError::Convergence { .. } | BrinkError::Bracket { .. } => ErrorClass::Solver,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        BrinkError::Param { name, reason: reason.into() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_split_validation_from_solver() {
        let domain = BrinkError::Domain { what: "iter_log", floor: 1.0, r: 0.5 };
        let conv = BrinkError::Convergence {
            what: "inverse iteration",
            iterations: 50,
            achieved: 1e-3,
            wanted: 1e-10,
        };
        assert_eq!(domain.class(), ErrorClass::Validation);
        assert_eq!(conv.class(), ErrorClass::Solver);
    }

    #[test]
    fn messages_carry_values() {
        let e = BrinkError::Shape { what: "apply", expected: 10, actual: 7 };
        let msg = e.to_string();
        assert!(msg.contains("10") && msg.contains("7"));
    }
}
