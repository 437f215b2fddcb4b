//! Fitting pipeline: short-time expansion, scaling collapse, profile-shape
//! discrimination, autocorrelation exponents and the incoherent flip model.

mod collapse;
mod decay;
mod powerlaw;
mod shape;
mod short_time;

pub use collapse::{collapse_fit, FitWindow, ScalingFit, EXPERIMENTAL_D_OVER_J};
pub use decay::{fit_flip_rates, magnetization_decay, FlipRateFit, FlipRates, MagnetizationSeries};
pub use powerlaw::autocorr_powerlaw_fit;
pub use shape::{shape_chi2, shape_chi2_at, ShapeChi2};
pub use short_time::short_time_expansion;
