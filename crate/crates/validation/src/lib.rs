//! Pass/fail bookkeeping for the acceptance run.
//!
//! Each criterion is a closure returning a [`Verdict`]; panics inside a check
//! are caught and reported as failures so that every line is always printed.

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

/// Result of one criterion: pass flag plus a one-line measurement summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u32,
    pub title: &'static str,
    pub verdict: Verdict,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.verdict.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "criterion {:>2} {tag}  {}: {} ({:.1} s)",
            self.id, self.title, self.verdict.detail, self.seconds
        )
    }
}

#[derive(Debug, Default)]
pub struct Report {
    outcomes: Vec<Outcome>,
}

fn panic_text(p: &(dyn std::any::Any + Send)) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panicked".into())
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    /// Runs `check`, prints its line immediately and keeps the outcome.
    pub fn run(&mut self, id: u32, title: &'static str, check: impl FnOnce() -> Verdict) -> &Outcome {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Verdict::new(false, format!("panicked: {}", panic_text(p.as_ref()))));
        let outcome = Outcome {
            id,
            title,
            verdict,
            seconds: start.elapsed().as_secs_f64(),
        };
        println!("{outcome}");
        self.outcomes.push(outcome);
        self.outcomes.last().expect("just pushed")
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn failures(&self) -> Vec<u32> {
        self.outcomes
            .iter()
            .filter(|o| !o.verdict.passed)
            .map(|o| o.id)
            .collect()
    }

    pub fn all_passed(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn summary(&self) -> String {
        let failed = self.failures();
        let passed = self.outcomes.len() - failed.len();
        if failed.is_empty() {
            format!("{passed}/{} criteria passed", self.outcomes.len())
        } else {
            let ids: Vec<String> = failed.iter().map(u32::to_string).collect();
            format!(
                "{passed}/{} criteria passed; failed: {}",
                self.outcomes.len(),
                ids.join(", ")
            )
        }
    }
}
