//! Reference solutions, consistency residuals, convergence and long-time
//! studies, and boundary-regularity scans.

mod reference;
mod scan;
mod studies;

pub use reference::{
    heat_reference, radial_w, taylor_residual, CustomSmooth, RadialW, ReferenceSolution, SmoothFunction, TaylorResidual,
};
pub use scan::{boundary_modulus_scan, ScanPair, ScanReport, ScanSpec, Stratum};
pub use studies::{
    asymptotic_study, convergence_study, ramp_data, AsymptoticReport, AsymptoticRow, AsymptoticSetup, ErrorRow,
    ErrorTable, Verdict,
};
