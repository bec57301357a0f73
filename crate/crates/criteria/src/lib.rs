//! Fixture curves and result reporting for the acceptance target.
//!
//! The acceptance checks live in `tests/acceptance.rs`. This package exists
//! so that cargo runs them after every other suite in the workspace.

use prpoint_core::elliptic::{CurveData, CurvePoint};
use prpoint_core::exact::rat_int;

/// A curve with a generator of its Mordell–Weil group modulo torsion.
#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub label: &'static str,
    pub coeffs: [i64; 5],
    pub conductor: u64,
    pub gen: (i64, i64),
    /// Smallest supersingular prime p >= 5 of good reduction, or 0 when the
    /// curve has none below 100 and serves only the archimedean checks.
    pub p: u64,
}

impl Fixture {
    pub fn curve(&self) -> CurveData {
        CurveData::new(self.coeffs, self.conductor).expect("fixture curve is valid")
    }

    pub fn generator(&self, curve: &CurveData) -> CurvePoint {
        curve.point(rat_int(self.gen.0), rat_int(self.gen.1)).expect("fixture point lies on the curve")
    }
}

pub const E37A: Fixture = Fixture { label: "37a", coeffs: [0, 0, 1, -1, 0], conductor: 37, gen: (0, 0), p: 17 };
pub const E43A: Fixture = Fixture { label: "43a", coeffs: [0, 1, 1, 0, 0], conductor: 43, gen: (0, 0), p: 7 };
pub const E53A: Fixture = Fixture { label: "53a", coeffs: [1, -1, 1, 0, 0], conductor: 53, gen: (0, 0), p: 5 };
/// Rank one with a rational 2-torsion point at (0, 0).
pub const E65A: Fixture = Fixture { label: "65a", coeffs: [1, 0, 0, -1, 0], conductor: 65, gen: (1, 0), p: 0 };

pub const RANK_ONE: [Fixture; 3] = [E37A, E43A, E53A];

/// Outcome of one criterion. `detail` is a single line.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }

    pub fn line(&self, index: usize, title: &str) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        format!("criterion {index:>2}  {verdict}  {title}: {}", self.detail)
    }
}
