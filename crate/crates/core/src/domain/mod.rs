//! Planar domains and fields: the zero set of `B0`, the hypotheses on `|∇B0|`
//! along it, energy formulas, disk coverings and the gauge field.

pub mod classify;
pub mod covering;
pub mod energy;
pub mod exponents;
pub mod field;
pub mod gauge;
pub mod omega;
pub mod zero_set;

pub use classify::{classify_assumption, Classification, CriticalFieldReport, CriticalPoint};
pub use covering::{disk_covering, CoveringReport};
pub use energy::{
    consistency_with_leading, leading_order_energy, near_critical_at, near_critical_energy, ConsistencyReport,
    EReference, LeadingReport, NearCriticalReport, QUADRATURE_RTOL,
};
pub use exponents::{check_remainder, tracked_remainders, ExponentCheck};
pub use field::{Builtin, FieldProfile, SampledField};
pub use gauge::{compute_gauge_field, GaugeField, GaugeResiduals};
pub use omega::Omega;
pub use zero_set::{extract_zero_set, Component, ZeroCurve};
