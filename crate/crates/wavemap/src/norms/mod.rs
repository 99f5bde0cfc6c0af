//! Spectral Sobolev-type norms, lattice norms and empirical estimate checks.

mod dtilde;
mod estimates;
mod lattice;
mod rescale;
mod spectral;

pub use dtilde::{
    eta, localized_l_norm, localized_square_sum_norm, multiplier_bounds, standard_bump, tilde_d, tilde_d_axis,
    tilde_d_multiplier, window_partition, MultiplierBounds, WINDOW_STEP,
};
pub use estimates::{
    fit_slope, member_rng, verify_estimate, CutoffRow, EnsembleFamily, EnsembleSpec, EstimateId, EstimateParams,
    EstimateReport, MemberKind, DENSE_MAX_CUTOFF, ENSEMBLE_ORIGIN, ENSEMBLE_PERIOD, SLOPE_THRESHOLD,
};
pub use lattice::{l11_norm, lattice_l11, mixed_norm, mixed_norm_cells, mixed_norm_samples, x_norm, MixedNorm};
pub use rescale::{
    default_lambdas, dilate, rescale_and_localize, standard_cutoff, track_rescaled_solution_norms, unit_mass_bump,
    verify_rellich, RellichReport, RescaleGrid, RescaledNorms,
};
pub use spectral::{
    angular, bracket, fft2, fft_forward, fft_inverse, hsd_norm, hsd_norm_null, product_sobolev_norm, signed_index,
    sobolev_norm, sobolev_norm_flagged, SpectralField,
};
