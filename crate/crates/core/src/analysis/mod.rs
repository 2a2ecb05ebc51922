//! Checks of the analytic toolbox: interpolation inequalities, chart norms,
//! parallel transport and continuous dependence.

mod gn;
mod norms;
mod transport;

pub use gn::{derivative_magnitude_sq, dilate2, gn_ratio, gn_table, kato_check, GNExponents};
pub use norms::{norm_equivalence_check, NormEquivalenceReport, SECOND_ORDER_C};
pub use transport::{
    gronwall_experiment, interpolation_dependence, interpolation_sample, naive_h1_distance, parallel_transport_s2,
    solution_distance, GronwallReport, InterpolationReport, InterpolationSample, SolutionDistance, ANTIPODAL_MARGIN,
};
