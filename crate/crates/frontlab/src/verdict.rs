use serde::{Deserialize, Serialize};

/// A located violation or extremiser: `(coordinate, value)` plus a short note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub coordinate: f64,
    pub value: f64,
    pub note: String,
}

/// Pass/fail outcome of a sampled check. A failing report always carries at
/// least one witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    pub witnesses: Vec<Witness>,
}

/// Witness lists are truncated to this length.
const MAX_WITNESSES: usize = 16;

impl VerdictReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), pass: true, margin: 0.0, witnesses: Vec::new() }
    }

    /// Builds a report from a margin: pass iff `margin >= 0`.
    pub fn from_margin(name: impl Into<String>, margin: f64, witness: Witness) -> Self {
        let pass = margin >= 0.0 && margin.is_finite();
        Self { name: name.into(), pass, margin, witnesses: vec![witness] }
    }

    pub fn fail_at(&mut self, coordinate: f64, value: f64, note: String) {
        self.pass = false;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(Witness { coordinate, value, note });
        }
    }

    pub fn witness(&mut self, coordinate: f64, value: f64, note: impl Into<String>) {
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(Witness { coordinate, value, note: note.into() });
        }
    }

    /// Enforces the fail-implies-witness invariant.
    pub fn finish(mut self) -> Self {
        if !self.pass && self.witnesses.is_empty() {
            self.witnesses.push(Witness {
                coordinate: 0.0,
                value: self.margin,
                note: "failed without a located witness".into(),
            });
        }
        self
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} (margin {:.6e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.margin
        )
    }
}

impl Witness {
    pub fn new(coordinate: f64, value: f64, note: impl Into<String>) -> Self {
        Self { coordinate, value, note: note.into() }
    }
}
