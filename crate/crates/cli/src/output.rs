//! JSON payloads printed by `--json`. Each carries a `schema` tag matching a
//! file under docs/schemas/.

use prpoint_core::padic::PadicElement;
use prpoint_core::padiclfun::{RootChoice, Vanishing};
use prpoint_core::recover::{RecoveryReport, Verdict};
use serde::{Deserialize, Serialize};

pub const SCHEMA_PREFIX: &str = "prpoint";
pub const SCHEMA_VERSION: u32 = 1;

pub fn schema_tag(command: &str) -> String {
    format!("{SCHEMA_PREFIX}/{command}/v{SCHEMA_VERSION}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadPrime {
    pub p: u64,
    pub reduction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub x: String,
    pub y: String,
    pub height: f64,
    pub l_derivative: f64,
    pub omega_plus: f64,
    pub c_e: String,
    pub c_e_float: f64,
    pub c_e_residual: f64,
    pub non_integral: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveInfo {
    pub schema: String,
    pub coefficients: [i64; 5],
    pub conductor: u64,
    pub discriminant: String,
    pub c4: String,
    pub c6: String,
    pub bad_primes: Vec<BadPrime>,
    pub supersingular_primes: Vec<u64>,
    pub omega_plus: f64,
    /// Sign of the functional equation, read off numerically.
    pub root_number: i8,
    pub l_value: f64,
    pub series_terms: usize,
    pub generator: Option<GeneratorInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApEntry {
    pub p: u64,
    pub ap: i64,
    pub reduction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApList {
    pub schema: String,
    pub conductor: u64,
    pub values: Vec<ApEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspValue {
    pub cusp: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModSym {
    pub schema: String,
    pub level: u64,
    pub dimension: usize,
    pub generators: usize,
    pub denominator: i64,
    pub seed: u64,
    pub samples: Vec<CuspValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaEntry {
    pub a: u64,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub schema: String,
    pub p: u64,
    pub depth: u32,
    pub modulus: u64,
    pub coefficients: Vec<ThetaEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlSeries {
    pub schema: String,
    pub p: u64,
    pub depth: u32,
    pub ap: i64,
    pub root: RootChoice,
    pub coefficients: Vec<PadicElement>,
    pub vanishing: Vanishing,
    pub derivative: PadicElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigen {
    pub alpha: PadicElement,
    pub beta: PadicElement,
    pub omega_alpha: [PadicElement; 2],
    pub omega_beta: [PadicElement; 2],
    pub omega_star: [PadicElement; 2],
    pub pairing: PadicElement,
    pub c_e: String,
    pub delta: PadicElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frobenius {
    pub schema: String,
    pub p: u64,
    pub precision: i64,
    pub ap: i64,
    pub short_model: [String; 2],
    pub u: String,
    pub matrix: [[PadicElement; 2]; 2],
    pub trace: PadicElement,
    pub det: PadicElement,
    pub trace_matches_ap: bool,
    pub det_matches_p: bool,
    pub eigen: Option<Eigen>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recover {
    pub schema: String,
    pub report: RecoveryReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verify {
    pub schema: String,
    pub report: RecoveryReport,
    pub verdict: Verdict,
}
