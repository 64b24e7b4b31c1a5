//! Measurements on recorded runs: steady-state wealth, cluster mass scaling,
//! spatial correlation, spectra and lagged correlations.

mod correlation;
mod ensemble;
mod fit;
mod fractal;
mod spatial;
mod spectral;
mod wealth;

pub use correlation::{lagged_pearson, select_probe_nodes, LagCorrelation};
pub use ensemble::{
    ensemble_mass_scaling, ensemble_spatial_profile, ensemble_spectrum, mean_rho_by, pooled_mean_abs_rho,
    probe_correlations,
};
pub use fit::{loglog, ols, LinearFit};
pub use fractal::{fit_power_exponent, mass_scaling, BoxAnchoring, MassScalingCurve};
pub use spatial::{spatial_correlation, spatial_correlation_profile};
pub use spectral::{periodogram, spectrum_loglog_slope, Spectrum};
pub use wealth::{steady_state_wealth, tail_window, window_len};
