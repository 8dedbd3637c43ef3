//! Built-in verification suites: discretization patch tests, analytic
//! transient benchmarks, the contact complementarity checks and the
//! conservation audit of the shipped scenarios. The CLI `verify` subcommand
//! and the acceptance tests both run these, so a shipped binary can always
//! demonstrate its own correctness.

mod benchmarks;
mod conservation;
mod contact_suite;
mod patch;

pub use benchmarks::{conduction_benchmark, terzaghi_benchmark};
pub use conservation::conservation_audit;
pub use contact_suite::{c_invariance_check, kkt_suite, slide_row_fixed_point};
pub use patch::{mpfa_patch_test, mpsa_patch_test, two_point_equivalence};

/// Outcome of one verification suite. `detail` holds the measured worst
/// error and the bound it was compared against.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }

    /// One printable line, `PASS`/`FAIL` first so logs grep cleanly.
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

/// Runs every suite; the demo-scenario criteria live in the CLI and the
/// acceptance tests because they need an output directory.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        mpfa_patch_test(),
        mpsa_patch_test(),
        two_point_equivalence(),
        terzaghi_benchmark(),
        conduction_benchmark(),
        conservation_audit(),
        kkt_suite(),
        slide_row_fixed_point(),
        c_invariance_check(),
    ]
}
