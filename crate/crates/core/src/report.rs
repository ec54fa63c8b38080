//! Structured pass/fail reports produced by the property checks.

use serde::Serialize;

/// Result of one executable property check.
///
/// `worst_case` is a signed margin: the check passes exactly when
/// `worst_case >= -tolerance` (the tolerance used is recorded in
/// `metadata`, under the key the check documents).
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_case: f64,
    /// Grid index, angle, or free-form description of the worst violation.
    pub location: String,
    /// Tolerances and measurements backing the verdict.
    pub metadata: Vec<(String, f64)>,
}

impl CheckReport {
    pub fn new(name: &str, passed: bool, worst_case: f64) -> Self {
        CheckReport {
            name: name.to_string(),
            passed,
            worst_case,
            location: String::new(),
            metadata: Vec::new(),
        }
    }

    /// Build from a margin and tolerance, enforcing the pass criterion
    /// `worst_case >= -tolerance`.
    pub fn from_margin(name: &str, worst_case: f64, tolerance: f64) -> Self {
        CheckReport::new(name, worst_case >= -tolerance, worst_case)
            .with_meta("tolerance", tolerance)
    }

    pub fn with_location(mut self, loc: impl Into<String>) -> Self {
        self.location = loc.into();
        self
    }

    pub fn with_meta(mut self, key: &str, value: f64) -> Self {
        self.metadata.push((key.to_string(), value));
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_rule() {
        assert!(CheckReport::from_margin("x", -1e-7, 1e-6).passed);
        assert!(!CheckReport::from_margin("x", -1e-5, 1e-6).passed);
        assert!(CheckReport::from_margin("x", 0.3, 0.0).passed);
    }
}
