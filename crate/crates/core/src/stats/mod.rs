//! Monte Carlo estimators: size laws, conditional measures, exponent fits.

pub mod conditional;
pub mod fit;
pub mod histogram;
pub mod measure;
pub mod resample;

pub use conditional::{
    conditional_profiles, conditional_three_point, conditional_two_point, window_bounds, AxisProfile,
    ConditionalMeasure, ConditionalOptions, ConditionalProfiles,
};
pub use fit::{chi_square_gof, dyadic_bins, fit_exact_pmf, fit_power_law, ExponentFit, GoodnessOfFit};
pub use histogram::{estimate_size_pmf, line_pmf, Estimate, SizeHistogram};
pub use measure::{EmpiricalMeasure, MeasureBuilder, Symmetry};
