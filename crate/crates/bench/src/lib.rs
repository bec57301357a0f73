//! Fixtures shared by the criterion benches.

use prpoint_core::elliptic::{CurveData, CurvePoint};
use prpoint_core::exact::rat_int;
use prpoint_core::modsym::{ManinSpace, PlusSymbol, DEFAULT_HECKE_BOUND};

/// 37a1 with its generator (0, 0).
pub fn curve_37a() -> (CurveData, CurvePoint) {
    let e = CurveData::new([0, 0, 1, -1, 0], 37).expect("37a1 is valid");
    let g = e.point(rat_int(0), rat_int(0)).expect("(0,0) lies on 37a1");
    (e, g)
}

pub fn plus_symbol(curve: &CurveData) -> PlusSymbol {
    PlusSymbol::new(ManinSpace::new(curve.conductor()), curve, DEFAULT_HECKE_BOUND).expect("plus symbol")
}
