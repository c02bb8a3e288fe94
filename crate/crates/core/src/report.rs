//! Pass/fail records shared by every checker and the CLI.

use serde::{Deserialize, Serialize};

/// One measured statistic against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub stat: f64,
    /// `None` for informational records.
    pub tol: Option<f64>,
    pub pass: bool,
}

impl Check {
    /// Passes when `stat <= tol`.
    pub fn at_most(name: impl Into<String>, stat: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            stat,
            tol: Some(tol),
            pass: stat <= tol,
        }
    }

    /// Passes when `stat >= tol`.
    pub fn at_least(name: impl Into<String>, stat: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            stat,
            tol: Some(tol),
            pass: stat >= tol,
        }
    }

    /// A measurement kept for the record; always passes.
    pub fn info(name: impl Into<String>, stat: f64) -> Self {
        Self {
            name: name.into(),
            stat,
            tol: None,
            pass: true,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.tol, self.pass) {
            (None, true) => write!(f, "info {}: {:e}", self.name, self.stat),
            (None, false) => write!(f, "FAIL {}", self.name),
            (Some(tol), pass) => {
                let tag = if pass { "pass" } else { "FAIL" };
                write!(f, "{tag} {}: {:e} (tol {tol:e})", self.name, self.stat)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    /// Appends `other` with every name prefixed by `prefix`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: Report) {
        self.checks.extend(other.checks.into_iter().map(|mut c| {
            c.name = format!("{prefix}{}", c.name);
            c
        }));
    }

    /// Records an error as a failing check so a sweep can continue.
    pub fn push_error(&mut self, name: impl Into<String>, error: &crate::error::Error) {
        let name = name.into();
        self.checks.push(Check {
            name: format!("{name} ({error})"),
            stat: f64::NAN,
            tol: None,
            pass: false,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Statistic of the named check, NaN if absent.
    pub fn stat(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |c| c.stat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_logic() {
        let mut r = Report::new();
        r.push(Check::at_most("a", 1e-9, 1e-8));
        r.push(Check::info("b", 3.0));
        assert!(r.passed());
        r.push(Check::at_least("c", 0.5, 1.0));
        assert!(!r.passed());
        assert_eq!(r.stat("b"), 3.0);
        assert!(r.stat("missing").is_nan());
    }
}
