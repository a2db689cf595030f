//! Dispersion, prediction discrepancy and cost accounting, plus CSV exports
//! of a finished run.

pub mod cost;
pub mod discrepancy;
pub mod dispersion;
pub mod export;

pub use cost::{cost_report, effectiveness_hours, CostAmount, CostBreakdown, CostCategory, CostLine, CostRates};
pub use discrepancy::{mean_delta, prediction_discrepancies, DeltaRecord};
pub use dispersion::l1_avg;
pub use export::export_reports;
